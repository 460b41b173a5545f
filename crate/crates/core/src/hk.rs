//! Hyperkähler side: Beauville–Bogomolov–Fujiki form, Fujiki-constant
//! volume, and the exact boundary growth polynomial.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{rational_from_str, Rational};

#[derive(Clone, Debug)]
pub struct HKModel {
    pub rho: usize,
    /// Row-major rho×rho Gram matrix of the quadratic form.
    pub gram: Vec<BigInt>,
    /// Fujiki constant, positive.
    pub c_x: Rational,
    /// Half-dimension; dim X = 2d.
    pub d: u32,
}

/// Classification of a class asserted to lie in the closed positive cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HKClass {
    Big,
    BoundaryNonBig,
    /// q < 0: contradicts the movability assertion.
    Invalid,
}

impl HKModel {
    pub fn new(rho: usize, gram: Vec<BigInt>, c_x: Rational, d: u32) -> Result<Self> {
        if rho == 0 {
            return Err(Error::BadModel("rank must be positive".into()));
        }
        if gram.len() != rho * rho {
            return Err(Error::BadModel(format!(
                "gram matrix must have {} entries, got {}",
                rho * rho,
                gram.len()
            )));
        }
        for i in 0..rho {
            for j in 0..i {
                if gram[i * rho + j] != gram[j * rho + i] {
                    return Err(Error::BadModel("gram matrix is not symmetric".into()));
                }
            }
        }
        if !c_x.is_positive() {
            return Err(Error::BadModel("Fujiki constant must be positive".into()));
        }
        if d == 0 {
            return Err(Error::BadModel("half-dimension must be positive".into()));
        }
        let model = HKModel { rho, gram, c_x, d };
        let (pos, neg, zero) = model.signature();
        if !(pos == 1 && neg == rho - 1 && zero == 0) {
            return Err(Error::BadModel(format!(
                "gram matrix must have signature (1, {}), found ({pos}, {neg}) with {zero} null direction(s)",
                rho - 1
            )));
        }
        Ok(model)
    }

    /// Inertia counts (positive, negative, zero) by symmetric congruence
    /// reduction over the rationals.
    fn signature(&self) -> (usize, usize, usize) {
        let n = self.rho;
        let mut a: Vec<Vec<Rational>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Rational::from_integer(self.gram[i * n + j].clone()))
                    .collect()
            })
            .collect();
        let (mut pos, mut neg, mut zero) = (0, 0, 0);
        for k in 0..n {
            if a[k][k].is_zero() {
                // bring a nonzero pivot onto the diagonal: a_kj ≠ 0 means
                // adding row/column j to k yields diagonal 2·a_kj
                if let Some(j) = (k + 1..n).find(|&j| !a[k][j].is_zero()) {
                    for col in 0..n {
                        let t = a[j][col].clone();
                        a[k][col] += t;
                    }
                    for row in 0..n {
                        let t = a[row][j].clone();
                        a[row][k] += t;
                    }
                }
            }
            if a[k][k].is_zero() {
                zero += 1;
                continue;
            }
            if a[k][k].is_positive() {
                pos += 1;
            } else {
                neg += 1;
            }
            let pivot = a[k][k].clone();
            for i in k + 1..n {
                let f = &a[i][k] / &pivot;
                for j in k..n {
                    let t = &f * &a[k][j];
                    a[i][j] -= t;
                }
            }
            for j in k + 1..n {
                a[k][j] = Rational::zero();
            }
        }
        (pos, neg, zero)
    }

    fn check_len(&self, v: &[Rational]) -> Result<()> {
        if v.len() != self.rho {
            return Err(Error::DimensionMismatch {
                expected: self.rho,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// q(D) = Dᵀ·gram·D, exact.
    pub fn q_eval(&self, d: &[Rational]) -> Result<Rational> {
        self.q_pair(d, d)
    }

    /// Polarization q(D, A) = Dᵀ·gram·A, exact.
    pub fn q_pair(&self, d: &[Rational], a: &[Rational]) -> Result<Rational> {
        self.check_len(d)?;
        self.check_len(a)?;
        let n = self.rho;
        let mut acc = Rational::zero();
        for i in 0..n {
            for j in 0..n {
                acc += &d[i] * &Rational::from_integer(self.gram[i * n + j].clone()) * &a[j];
            }
        }
        Ok(acc)
    }

    /// Sign classification of a class asserted movable.
    pub fn classify(&self, d: &[Rational]) -> Result<HKClass> {
        let q = self.q_eval(d)?;
        Ok(if q.is_positive() {
            HKClass::Big
        } else if q.is_zero() {
            HKClass::BoundaryNonBig
        } else {
            HKClass::Invalid
        })
    }

    /// vol(D) = c_X·q(D)^d via the Fujiki relation.
    pub fn vol_hk(&self, d: &[Rational]) -> Result<Rational> {
        let q = self.q_eval(d)?;
        if q.is_negative() {
            return Err(Error::OutsideCone(format!(
                "q(D) = {q} < 0: D cannot be movable"
            )));
        }
        Ok(&self.c_x * pow_rational(&q, self.d))
    }
}

fn pow_rational(x: &Rational, e: u32) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

fn serialize_rationals<S: serde::Serializer>(
    v: &[Rational],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryGrowth {
    /// Growth exponent of vol(mD + A) in m.
    pub exponent: u32,
    /// Polynomial coefficients, constant term first, as rational strings.
    #[serde(serialize_with = "serialize_rationals")]
    pub growth_poly: Vec<Rational>,
    /// Set when q(D) > 0: the class is big, not boundary; the exponent is 2d.
    pub note: Option<String>,
}

impl BoundaryGrowth {
    pub fn eval(&self, m: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.growth_poly.iter().rev() {
            acc = acc * m + c;
        }
        acc
    }
}

/// Exact growth of vol(mD + A) for a boundary class D. Requires q(A) > 0
/// and q(D, A) ≠ 0; when q(D) = 0 the polynomial is c_X(2m·q(D,A)+q(A))^d
/// of degree d, and when q(D) > 0 the class is big and the full degree-2d
/// expansion of c_X(q(D)m² + 2q(D,A)m + q(A))^d is returned with a note.
pub fn kappa_boundary(
    model: &HKModel,
    d: &[Rational],
    a: &[Rational],
) -> Result<BoundaryGrowth> {
    let qa = model.q_eval(a)?;
    if !qa.is_positive() {
        return Err(Error::Hypothesis(format!(
            "q(A) = {qa} must be positive for an ample class"
        )));
    }
    let qd = model.q_eval(d)?;
    let qda = model.q_pair(d, a)?;
    if qd.is_negative() {
        return Err(Error::NotBoundary(format!(
            "q(D) = {qd} < 0: D is not in the closed positive cone"
        )));
    }
    if qd.is_zero() && qda.is_zero() {
        return Err(Error::PairingVanishes);
    }
    // q(mD + A) as a polynomial in m, degree ≤ 2
    let quad = [qa, Rational::from_integer(2.into()) * qda, qd.clone()];
    let degree = if qd.is_zero() { 1usize } else { 2usize };
    let mut poly = vec![Rational::one()];
    for _ in 0..model.d {
        let mut next = vec![Rational::zero(); poly.len() + degree];
        for (i, c) in poly.iter().enumerate() {
            for (j, q) in quad.iter().take(degree + 1).enumerate() {
                let t = c * q;
                next[i + j] += t;
            }
        }
        poly = next;
    }
    for c in poly.iter_mut() {
        *c *= &model.c_x;
    }
    Ok(BoundaryGrowth {
        exponent: model.d * degree as u32,
        note: if qd.is_positive() {
            Some("q(D) > 0: D is big; degree is 2d, not the boundary case".into())
        } else {
            None
        },
        growth_poly: poly,
    })
}

/// Checks that U is an isometry of the form: Uᵀ·gram·U = gram.
pub fn is_isometry(model: &HKModel, u: &[BigInt]) -> Result<bool> {
    let n = model.rho;
    if u.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: u.len(),
        });
    }
    for i in 0..n {
        for j in 0..n {
            let mut acc = BigInt::zero();
            for k in 0..n {
                for l in 0..n {
                    acc += &u[k * n + i] * &model.gram[k * n + l] * &u[l * n + j];
                }
            }
            if acc != model.gram[i * n + j] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// On-disk form: integers as JSON numbers, the Fujiki constant as a
/// rational string.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HKDoc {
    pub rho: usize,
    pub gram: Vec<i64>,
    #[serde(rename = "c_X")]
    pub c_x: String,
    pub d: u32,
}

impl HKModel {
    pub fn from_doc(doc: &HKDoc) -> Result<Self> {
        HKModel::new(
            doc.rho,
            doc.gram.iter().map(|&g| BigInt::from(g)).collect(),
            rational_from_str(&doc.c_x)?,
            doc.d,
        )
    }

    pub fn to_doc(&self) -> Result<HKDoc> {
        let gram = self
            .gram
            .iter()
            .map(|g| {
                i64::try_from(g.clone())
                    .map_err(|_| Error::Parse("gram entry exceeds i64".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HKDoc {
            rho: self.rho,
            gram,
            c_x: self.c_x.to_string(),
            d: self.d,
        })
    }
}
