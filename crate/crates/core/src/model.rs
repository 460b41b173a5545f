//! Rank-2 Picard-lattice models: intersection numbers, the two involutive
//! generators acting on the divisor lattice, and exact eigen-ray data for the
//! composite hyperbolic action.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{squarefree_part, QuadExt, Rational};

/// 2×2 integer matrix acting on divisor classes in the basis (H₁, H₂).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Mat2 {
    pub e: [[BigInt; 2]; 2],
}

impl Mat2 {
    pub fn from_i64(e: [[i64; 2]; 2]) -> Self {
        Mat2 {
            e: [
                [BigInt::from(e[0][0]), BigInt::from(e[0][1])],
                [BigInt::from(e[1][0]), BigInt::from(e[1][1])],
            ],
        }
    }

    pub fn identity() -> Self {
        Mat2::from_i64([[1, 0], [0, 1]])
    }

    pub fn is_identity(&self) -> bool {
        *self == Mat2::identity()
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let mut out = Mat2::from_i64([[0, 0], [0, 0]]);
        for i in 0..2 {
            for j in 0..2 {
                out.e[i][j] = &self.e[i][0] * &rhs.e[0][j] + &self.e[i][1] * &rhs.e[1][j];
            }
        }
        out
    }

    pub fn det(&self) -> BigInt {
        &self.e[0][0] * &self.e[1][1] - &self.e[0][1] * &self.e[1][0]
    }

    pub fn trace(&self) -> BigInt {
        &self.e[0][0] + &self.e[1][1]
    }

    /// Inverse, valid only for det = ±1.
    pub fn inverse_unimodular(&self) -> Mat2 {
        let d = self.det();
        debug_assert!(d.magnitude().is_one());
        let mut adj = Mat2 {
            e: [
                [self.e[1][1].clone(), -&self.e[0][1]],
                [-&self.e[1][0], self.e[0][0].clone()],
            ],
        };
        if d < BigInt::zero() {
            for row in adj.e.iter_mut() {
                for x in row.iter_mut() {
                    *x = -&*x;
                }
            }
        }
        adj
    }

    pub fn apply_quad(&self, v: &[QuadExt; 2]) -> [QuadExt; 2] {
        let lift = |x: &BigInt| {
            QuadExt::from_rational(Rational::from_integer(x.clone()), v[0].disc())
        };
        [
            &(&lift(&self.e[0][0]) * &v[0]) + &(&lift(&self.e[0][1]) * &v[1]),
            &(&lift(&self.e[1][0]) * &v[0]) + &(&lift(&self.e[1][1]) * &v[1]),
        ]
    }

    pub fn apply_rational(&self, v: &[Rational; 2]) -> [Rational; 2] {
        [
            Rational::from_integer(self.e[0][0].clone()) * &v[0]
                + Rational::from_integer(self.e[0][1].clone()) * &v[1],
            Rational::from_integer(self.e[1][0].clone()) * &v[0]
                + Rational::from_integer(self.e[1][1].clone()) * &v[1],
        ]
    }

    pub fn apply_f64(&self, v: [f64; 2]) -> [f64; 2] {
        let c = |x: &BigInt| x.to_f64().unwrap_or(f64::NAN);
        [
            c(&self.e[0][0]) * v[0] + c(&self.e[0][1]) * v[1],
            c(&self.e[1][0]) * v[0] + c(&self.e[1][1]) * v[1],
        ]
    }

    fn to_strings(&self) -> [[String; 2]; 2] {
        [
            [self.e[0][0].to_string(), self.e[0][1].to_string()],
            [self.e[1][0].to_string(), self.e[1][1].to_string()],
        ]
    }

    fn from_strings(s: &[[String; 2]; 2]) -> Result<Self> {
        let p = |x: &String| -> Result<BigInt> {
            x.parse()
                .map_err(|_| Error::Parse(format!("bad matrix entry {x:?}")))
        };
        Ok(Mat2 {
            e: [
                [p(&s[0][0])?, p(&s[0][1])?],
                [p(&s[1][0])?, p(&s[1][1])?],
            ],
        })
    }
}

/// One nef-cone chamber: intersection numbers in its own coordinates plus the
/// transition matrix into the reference coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chamber {
    pub inters: Vec<BigInt>,
    pub to_ref: Mat2,
}

/// A divisor class in the basis (H₁, H₂), exact or floating.
#[derive(Clone, Debug, PartialEq)]
pub enum DivisorClass {
    Exact { u: QuadExt, v: QuadExt },
    Float { u: f64, v: f64 },
}

impl DivisorClass {
    pub fn exact(u: QuadExt, v: QuadExt) -> Self {
        DivisorClass::Exact { u, v }
    }

    pub fn from_rational(u: Rational, v: Rational, disc: u64) -> Self {
        DivisorClass::Exact {
            u: QuadExt::from_rational(u, disc),
            v: QuadExt::from_rational(v, disc),
        }
    }

    pub fn from_int(u: i64, v: i64, disc: u64) -> Self {
        DivisorClass::Exact {
            u: QuadExt::from_int(u, disc),
            v: QuadExt::from_int(v, disc),
        }
    }

    pub fn float(u: f64, v: f64) -> Self {
        DivisorClass::Float { u, v }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, DivisorClass::Exact { .. })
    }

    pub fn to_floats(&self) -> Result<[f64; 2]> {
        match self {
            DivisorClass::Exact { u, v } => Ok([u.to_f64()?, v.to_f64()?]),
            DivisorClass::Float { u, v } => Ok([*u, *v]),
        }
    }

    pub fn scale_int(&self, k: i64) -> Self {
        match self {
            DivisorClass::Exact { u, v } => {
                let s = QuadExt::from_int(k, u.disc());
                DivisorClass::Exact {
                    u: u * &s,
                    v: v * &s,
                }
            }
            DivisorClass::Float { u, v } => DivisorClass::Float {
                u: u * k as f64,
                v: v * k as f64,
            },
        }
    }
}

/// Validated rank-2 lattice model with eigen-data of the composite action.
#[derive(Clone, Debug)]
pub struct ConeModel {
    pub id: String,
    pub n: u32,
    pub disc: u64,
    pub chambers: Vec<Chamber>,
    pub t1: Mat2,
    pub t2: Mat2,
    /// Composite action f* = T₂·T₁ (f = τ₁∘τ₂ pulled back).
    pub f: Mat2,
    /// Dominant eigenvalue of the covering generator; always > 1.
    pub lambda: QuadExt,
    /// Expanding eigen-ray, coordinates normalized to sum 1.
    pub r1: [QuadExt; 2],
    /// Contracting eigen-ray (the Galois conjugate of r1).
    pub r2: [QuadExt; 2],
    pub ample: [Rational; 2],
    /// True when the composite had to be squared to make the dominant
    /// eigenvalue positive (or to restore determinant +1).
    pub square_action: bool,
}

#[derive(Debug)]
pub struct EigenData {
    pub lambda: QuadExt,
    pub r1: [QuadExt; 2],
    pub r2: [QuadExt; 2],
    pub disc: u64,
    pub square_action: bool,
}

/// Exact eigen-analysis of a hyperbolic 2×2 integer matrix with det ±1.
///
/// Returns the dominant eigenvalue as a positive element of Q(√d) together
/// with the sum-normalized eigen-rays. If the dominant eigenvalue of the
/// input is negative, or the determinant is −1, the matrix is squared first
/// and `square_action` is set.
pub fn eigen_rays(m: &Mat2) -> Result<EigenData> {
    let det = m.det();
    if !det.magnitude().is_one() {
        return Err(Error::NonHyperbolic(format!(
            "determinant must be \u{b1}1, got {det}"
        )));
    }
    let tr = m.trace();
    let disc0 = &tr * &tr - BigInt::from(4) * &det;
    if disc0.is_zero() {
        return Err(Error::NonHyperbolic(
            "parabolic action: spectral radius 1".into(),
        ));
    }
    if disc0 < BigInt::zero() {
        return Err(Error::NonHyperbolic(
            "elliptic action: complex eigenvalues".into(),
        ));
    }
    let d0 = disc0
        .to_u64()
        .ok_or_else(|| Error::NonHyperbolic("trace out of range".into()))?;
    let (_s, d) = squarefree_part(d0);
    if d == 1 {
        // rational eigenvalues with det ±1 force |eigenvalue| = 1
        return Err(Error::NonHyperbolic(
            "rational eigenvalues: spectral radius 1".into(),
        ));
    }

    let mut square_action = false;
    let mut g = m.clone();
    if det == BigInt::from(-1) || tr < BigInt::zero() {
        g = m.mul(m);
        square_action = true;
    }
    let tr = g.trace();
    debug_assert!(g.det().is_one() && tr > BigInt::from(2));
    let disc0 = &tr * &tr - BigInt::from(4);
    let (s, d) = squarefree_part(disc0.to_u64().ok_or(Error::NonHyperbolic(
        "trace out of range after squaring".into(),
    ))?);
    let _ = s;

    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let lambda = QuadExt::new(
        Rational::from_integer(tr.clone()) * &half,
        Rational::from_integer(BigInt::from(s)) * &half,
        d,
    );
    debug_assert!(lambda > QuadExt::one(d));

    // eigenvector for lambda: (g01, lambda - g00); g01 ≠ 0 since lambda is irrational
    let g01 = QuadExt::from_rational(Rational::from_integer(g.e[0][1].clone()), d);
    let g00 = QuadExt::from_rational(Rational::from_integer(g.e[0][0].clone()), d);
    if g01.is_zero() {
        return Err(Error::NonHyperbolic(
            "triangular matrix has rational eigenvalues".into(),
        ));
    }
    let v1 = [g01.clone(), &lambda - &g00];
    let sum = &v1[0] + &v1[1];
    if sum.is_zero() {
        return Err(Error::NonHyperbolic(
            "eigen-ray lies on the anti-diagonal".into(),
        ));
    }
    let r1 = [&v1[0] / &sum, &v1[1] / &sum];
    // the contracting ray is the entry-wise Galois conjugate
    let r2 = [r1[0].conj(), r1[1].conj()];
    Ok(EigenData {
        lambda,
        r1,
        r2,
        disc: d,
        square_action,
    })
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k.min(n - k) {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Degree-truncated bivariate polynomial with integer coefficients,
/// `grid[i][j]` the coefficient of `x^i y^j`, both degrees capped at `cap`.
pub struct TruncPoly {
    cap: usize,
    grid: Vec<Vec<BigInt>>,
}

impl TruncPoly {
    pub fn constant(c: i64, cap: usize) -> Self {
        let mut grid = vec![vec![BigInt::zero(); cap + 1]; cap + 1];
        grid[0][0] = BigInt::from(c);
        TruncPoly { cap, grid }
    }

    /// Multiply by (x + y), truncating above the cap.
    pub fn mul_x_plus_y(&self) -> Self {
        let cap = self.cap;
        let mut grid = vec![vec![BigInt::zero(); cap + 1]; cap + 1];
        for (i, row) in grid.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let mut acc = BigInt::zero();
                if i > 0 {
                    acc += &self.grid[i - 1][j];
                }
                if j > 0 {
                    acc += &self.grid[i][j - 1];
                }
                *cell = acc;
            }
        }
        TruncPoly { cap, grid }
    }

    /// Multiply by the monomial `x^a y^b`, truncating above the cap.
    pub fn mul_monomial(&self, a: usize, b: usize) -> Self {
        let cap = self.cap;
        let mut grid = vec![vec![BigInt::zero(); cap + 1]; cap + 1];
        for i in 0..=cap {
            for j in 0..=cap {
                if i >= a && j >= b {
                    grid[i][j] = self.grid[i - a][j - b].clone();
                }
            }
        }
        TruncPoly { cap, grid }
    }

    pub fn coeff(&self, i: usize, j: usize) -> &BigInt {
        &self.grid[i][j]
    }
}

/// Intersection numbers I_j = H₁^j·H₂^{n−j} of the degree-N family, read off
/// as top-degree coefficients of 2(x+y)^N·x^j·y^{N−j} in the ring truncated
/// at degree N in each variable.
pub fn oguiso_intersection_oracle(n: u32) -> Vec<BigInt> {
    let cap = n as usize;
    let mut cls = TruncPoly::constant(2, cap);
    for _ in 0..n {
        cls = cls.mul_x_plus_y();
    }
    (0..=cap)
        .map(|j| {
            let top = cls.mul_monomial(j, cap - j);
            top.coeff(cap, cap).clone()
        })
        .collect()
}

/// Builds the degree-N complete-intersection family: a Calabi–Yau of
/// dimension N in P^N × P^N with two degree-2 projections whose birational
/// involutions generate an infinite dihedral action on the divisor lattice.
pub fn build_oguiso(n: u32) -> Result<ConeModel> {
    if n < 3 {
        return Err(Error::BadModel(format!(
            "the construction requires N \u{2265} 3, got {n}"
        )));
    }
    let two_n = 2 * n as i64;
    let t1 = Mat2::from_i64([[1, two_n], [0, -1]]);
    let t2 = Mat2::from_i64([[-1, 0], [two_n, 1]]);
    let inters: Vec<BigInt> = (0..=n).map(|j| BigInt::from(2) * binomial(n, j)).collect();
    // the closed form is a derivation; cross-check against the coefficient
    // extraction oracle at every build
    let oracle = oguiso_intersection_oracle(n);
    if inters != oracle {
        return Err(Error::BadModel(
            "intersection numbers disagree with the coefficient oracle".into(),
        ));
    }
    build_model(ModelParts {
        id: format!("oguiso-{n}"),
        n,
        chambers: vec![Chamber {
            inters,
            to_ref: Mat2::identity(),
        }],
        t1,
        t2,
        ample: [
            Rational::from_integer(BigInt::one()),
            Rational::from_integer(BigInt::one()),
        ],
    })
}

pub struct ModelParts {
    pub id: String,
    pub n: u32,
    pub chambers: Vec<Chamber>,
    pub t1: Mat2,
    pub t2: Mat2,
    pub ample: [Rational; 2],
}

fn validate_chamber(n: u32, idx: usize, ch: &Chamber) -> Result<()> {
    if ch.inters.len() != n as usize + 1 {
        return Err(Error::BadChamber(format!(
            "chamber {idx}: expected {} intersection numbers, got {}",
            n + 1,
            ch.inters.len()
        )));
    }
    if ch.inters.iter().any(|x| x < &BigInt::zero()) {
        return Err(Error::BadChamber(format!(
            "chamber {idx}: negative intersection number"
        )));
    }
    // (H₁+H₂)^n must be positive for the chamber to have volume
    let total: BigInt = ch
        .inters
        .iter()
        .enumerate()
        .map(|(j, i)| binomial(n, j as u32) * i)
        .sum();
    if total <= BigInt::zero() {
        return Err(Error::BadChamber(format!(
            "chamber {idx}: non-positive chamber data"
        )));
    }
    if !ch.to_ref.det().magnitude().is_one() {
        return Err(Error::BadChamber(format!(
            "chamber {idx}: transition matrix is not unimodular"
        )));
    }
    Ok(())
}

/// Assembles and validates a model from its raw parts.
pub fn build_model(parts: ModelParts) -> Result<ConeModel> {
    let ModelParts {
        id,
        n,
        chambers,
        t1,
        t2,
        ample,
    } = parts;
    if n == 0 {
        return Err(Error::BadModel("dimension must be positive".into()));
    }
    if chambers.is_empty() {
        return Err(Error::BadChamber("no chambers declared".into()));
    }
    if !chambers[0].to_ref.is_identity() {
        return Err(Error::BadChamber(
            "chamber 0 must carry the identity transition".into(),
        ));
    }
    for (idx, ch) in chambers.iter().enumerate() {
        validate_chamber(n, idx, ch)?;
    }
    if !t1.mul(&t1).is_identity() {
        return Err(Error::NotInvolution { which: "T1" });
    }
    if !t2.mul(&t2).is_identity() {
        return Err(Error::NotInvolution { which: "T2" });
    }
    let f = t2.mul(&t1);
    let eigen = eigen_rays(&f)?;
    if !(ample[0].is_positive() && ample[1].is_positive()) {
        return Err(Error::BadModel(
            "ample class must have strictly positive nef coordinates".into(),
        ));
    }
    let model = ConeModel {
        id,
        n,
        disc: eigen.disc,
        chambers,
        t1,
        t2,
        f,
        lambda: eigen.lambda,
        r1: eigen.r1,
        r2: eigen.r2,
        ample,
        square_action: eigen.square_action,
    };
    // the ample class must decompose positively on the eigen-rays
    let a = model.eigen_coords_rational(&model.ample)?;
    if !(a[0].is_positive() && a[1].is_positive()) {
        return Err(Error::BadModel(
            "ample class is not interior to the cone spanned by the eigen-rays".into(),
        ));
    }
    // the involutions must swap the eigen-rays as a set
    let img = model.t1.apply_quad(&model.r1);
    let cross = &(&img[0] * &model.r2[1]) - &(&img[1] * &model.r2[0]);
    if !cross.is_zero() {
        return Err(Error::BadModel(
            "T1 does not exchange the extremal eigen-rays".into(),
        ));
    }
    Ok(model)
}

impl ConeModel {
    pub fn ample_class(&self) -> DivisorClass {
        DivisorClass::from_rational(self.ample[0].clone(), self.ample[1].clone(), self.disc)
    }

    pub fn r1_class(&self) -> DivisorClass {
        DivisorClass::exact(self.r1[0].clone(), self.r1[1].clone())
    }

    pub fn r2_class(&self) -> DivisorClass {
        DivisorClass::exact(self.r2[0].clone(), self.r2[1].clone())
    }

    /// det of the eigen-ray column matrix S = [R1 R2].
    fn eigen_det(&self) -> QuadExt {
        &(&self.r1[0] * &self.r2[1]) - &(&self.r1[1] * &self.r2[0])
    }

    /// Exact change of basis (H₁,H₂) → (R₁,R₂).
    pub fn eigen_coords(&self, u: &QuadExt, v: &QuadExt) -> Result<[QuadExt; 2]> {
        let det = self.eigen_det();
        let a1 = &(&(&self.r2[1] * u) - &(&self.r2[0] * v)) / &det;
        let a2 = &(&(&self.r1[0] * v) - &(&self.r1[1] * u)) / &det;
        Ok([a1, a2])
    }

    pub fn eigen_coords_rational(&self, x: &[Rational; 2]) -> Result<[QuadExt; 2]> {
        self.eigen_coords(
            &QuadExt::from_rational(x[0].clone(), self.disc),
            &QuadExt::from_rational(x[1].clone(), self.disc),
        )
    }

    /// Class with the given exact eigen-basis coordinates.
    pub fn class_from_eigen(&self, a1: &QuadExt, a2: &QuadExt) -> DivisorClass {
        DivisorClass::Exact {
            u: &(a1 * &self.r1[0]) + &(a2 * &self.r2[0]),
            v: &(a1 * &self.r1[1]) + &(a2 * &self.r2[1]),
        }
    }

    pub fn eigen_coords_f64(&self, u: f64, v: f64) -> Result<[f64; 2]> {
        let r10 = self.r1[0].to_f64()?;
        let r11 = self.r1[1].to_f64()?;
        let r20 = self.r2[0].to_f64()?;
        let r21 = self.r2[1].to_f64()?;
        let det = r10 * r21 - r11 * r20;
        Ok([(r21 * u - r20 * v) / det, (r10 * v - r11 * u) / det])
    }
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct ChamberDoc {
    pub inters: Vec<String>,
    pub to_ref: [[String; 2]; 2],
}

/// On-disk model document. Integers are decimal strings; `lambda`, `R1`, `R2`
/// are derived fields that are re-verified on ingestion when present.
#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub dim: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disc: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inters: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chambers: Option<Vec<ChamberDoc>>,
    #[serde(rename = "T1")]
    pub t1: [[String; 2]; 2],
    #[serde(rename = "T2")]
    pub t2: [[String; 2]; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<[[String; 2]; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<[String; 4]>,
    #[serde(rename = "R1", skip_serializing_if = "Option::is_none")]
    pub r1: Option<[[String; 4]; 2]>,
    #[serde(rename = "R2", skip_serializing_if = "Option::is_none")]
    pub r2: Option<[[String; 4]; 2]>,
    pub ample: [String; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub square_action: Option<bool>,
}

impl ConeModel {
    pub fn to_doc(&self) -> ModelDoc {
        let single = self.chambers.len() == 1;
        ModelDoc {
            id: Some(self.id.clone()),
            dim: self.n.to_string(),
            disc: Some(self.disc.to_string()),
            inters: single.then(|| {
                self.chambers[0]
                    .inters
                    .iter()
                    .map(|x| x.to_string())
                    .collect()
            }),
            chambers: (!single).then(|| {
                self.chambers
                    .iter()
                    .map(|ch| ChamberDoc {
                        inters: ch.inters.iter().map(|x| x.to_string()).collect(),
                        to_ref: ch.to_ref.to_strings(),
                    })
                    .collect()
            }),
            t1: self.t1.to_strings(),
            t2: self.t2.to_strings(),
            f: Some(self.f.to_strings()),
            lambda: Some(self.lambda.to_tuple()),
            r1: Some([self.r1[0].to_tuple(), self.r1[1].to_tuple()]),
            r2: Some([self.r2[0].to_tuple(), self.r2[1].to_tuple()]),
            ample: [self.ample[0].to_string(), self.ample[1].to_string()],
            square_action: Some(self.square_action),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("model serialization cannot fail")
    }
}

fn parse_rational(s: &str) -> Result<Rational> {
    crate::exact::rational_from_str(s)
}

/// Builds a model from a user-supplied document, re-deriving and verifying
/// every derived field that the document declares.
pub fn build_custom(doc: &ModelDoc) -> Result<ConeModel> {
    let n: u32 = doc
        .dim
        .parse()
        .map_err(|_| Error::Parse(format!("bad dimension {:?}", doc.dim)))?;
    let parse_ints = |v: &Vec<String>| -> Result<Vec<BigInt>> {
        v.iter()
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Parse(format!("bad intersection number {s:?}")))
            })
            .collect()
    };
    let chambers = match (&doc.inters, &doc.chambers) {
        (Some(inters), None) => vec![Chamber {
            inters: parse_ints(inters)?,
            to_ref: Mat2::identity(),
        }],
        (None, Some(chs)) => chs
            .iter()
            .map(|ch| {
                Ok(Chamber {
                    inters: parse_ints(&ch.inters)?,
                    to_ref: Mat2::from_strings(&ch.to_ref)?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
        _ => {
            return Err(Error::Parse(
                "exactly one of `inters` or `chambers` must be given".into(),
            ))
        }
    };
    let model = build_model(ModelParts {
        id: doc.id.clone().unwrap_or_else(|| "custom".into()),
        n,
        chambers,
        t1: Mat2::from_strings(&doc.t1)?,
        t2: Mat2::from_strings(&doc.t2)?,
        ample: [parse_rational(&doc.ample[0])?, parse_rational(&doc.ample[1])?],
    })?;
    // verify declared derived data against the recomputed values
    if let Some(f) = &doc.f {
        if Mat2::from_strings(f)? != model.f {
            return Err(Error::BadModel(
                "declared composite matrix disagrees with T2*T1".into(),
            ));
        }
    }
    if let Some(disc) = &doc.disc {
        let d: u64 = disc
            .parse()
            .map_err(|_| Error::Parse(format!("bad discriminant {disc:?}")))?;
        if d != model.disc {
            return Err(Error::BadModel(format!(
                "declared discriminant {d} disagrees with computed {}",
                model.disc
            )));
        }
    }
    if let Some(l) = &doc.lambda {
        if QuadExt::from_tuple(l, model.disc)? != model.lambda {
            return Err(Error::BadModel(
                "declared dominant eigenvalue disagrees with eigen-analysis".into(),
            ));
        }
    }
    if let Some(r1) = &doc.r1 {
        let declared = [
            QuadExt::from_tuple(&r1[0], model.disc)?,
            QuadExt::from_tuple(&r1[1], model.disc)?,
        ];
        if declared != model.r1 {
            return Err(Error::BadModel("declared R1 disagrees".into()));
        }
    }
    if let Some(r2) = &doc.r2 {
        let declared = [
            QuadExt::from_tuple(&r2[0], model.disc)?,
            QuadExt::from_tuple(&r2[1], model.disc)?,
        ];
        if declared != model.r2 {
            return Err(Error::BadModel("declared R2 disagrees".into()));
        }
    }
    if let Some(sq) = doc.square_action {
        if sq != model.square_action {
            return Err(Error::BadModel("declared square_action disagrees".into()));
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oguiso_three_intersections() {
        let m = build_oguiso(3).unwrap();
        let i: Vec<i64> = vec![2, 6, 6, 2];
        let expect: Vec<BigInt> = i.into_iter().map(BigInt::from).collect();
        assert_eq!(m.chambers[0].inters, expect);
    }

    #[test]
    fn oguiso_three_eigenvalue() {
        let m = build_oguiso(3).unwrap();
        assert_eq!(m.lambda, QuadExt::from_tuple(
            &["17".into(), "1".into(), "12".into(), "1".into()], 2).unwrap());
        assert!(!m.square_action);
    }

    #[test]
    fn oguiso_three_composite() {
        let m = build_oguiso(3).unwrap();
        assert_eq!(m.f, Mat2::from_i64([[-1, -6], [6, 35]]));
        assert_eq!(m.f.trace(), BigInt::from(34));
        assert_eq!(m.f.det(), BigInt::one());
    }

    #[test]
    fn oguiso_rejects_small_n() {
        assert!(matches!(build_oguiso(2), Err(Error::BadModel(_))));
    }

    #[test]
    fn eigen_rays_satisfy_eigen_equations() {
        let m = build_oguiso(3).unwrap();
        let img = m.f.apply_quad(&m.r1);
        assert_eq!(img[0], &m.lambda * &m.r1[0]);
        assert_eq!(img[1], &m.lambda * &m.r1[1]);
        let inv = m.lambda.inverse().unwrap();
        let img2 = m.f.apply_quad(&m.r2);
        assert_eq!(img2[0], &inv * &m.r2[0]);
        assert_eq!(img2[1], &inv * &m.r2[1]);
    }

    #[test]
    fn eigenvalue_times_conjugate_is_det() {
        for n in 3..=8 {
            let m = build_oguiso(n).unwrap();
            let prod = m.lambda.try_mul(&m.lambda.conj()).unwrap();
            assert_eq!(prod, QuadExt::one(m.disc)); // det f* = +1
        }
    }

    #[test]
    fn rays_sum_to_ample_direction() {
        // with sum-1 normalization, R1 + R2 = (1, 1) exactly
        let m = build_oguiso(5).unwrap();
        let sum0 = &m.r1[0] + &m.r2[0];
        let sum1 = &m.r1[1] + &m.r2[1];
        assert_eq!(sum0, QuadExt::one(m.disc));
        assert_eq!(sum1, QuadExt::one(m.disc));
    }

    #[test]
    fn identity_and_swap_are_rejected() {
        assert!(eigen_rays(&Mat2::from_i64([[1, 0], [0, 1]])).is_err());
        assert!(eigen_rays(&Mat2::from_i64([[0, 1], [1, 0]])).is_err());
    }

    #[test]
    fn parabolic_error_message() {
        let err = eigen_rays(&Mat2::from_i64([[1, 1], [0, 1]])).unwrap_err();
        assert_eq!(
            err.to_string(),
            "non-hyperbolic action: parabolic action: spectral radius 1"
        );
    }

    #[test]
    fn custom_fibonacci_like_model() {
        // f = [[2,1],[1,1]] factored through two involutions
        let doc = ModelDoc {
            id: None,
            dim: "2".into(),
            disc: None,
            inters: Some(vec!["0".into(), "1".into(), "0".into()]),
            chambers: None,
            t1: [["1".into(), "0".into()], ["-1".into(), "-1".into()]],
            t2: [["1".into(), "-1".into()], ["0".into(), "-1".into()]],
            f: None,
            lambda: None,
            r1: None,
            r2: None,
            ample: ["1".into(), "1".into()],
            square_action: None,
        };
        let m = build_custom(&doc).unwrap();
        assert_eq!(m.f, Mat2::from_i64([[2, 1], [1, 1]]));
        // lambda = (3+sqrt(5))/2
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        let expect = QuadExt::new(
            Rational::from_integer(BigInt::from(3)) * &half,
            half.clone(),
            5,
        );
        assert_eq!(m.lambda, expect);
    }

    #[test]
    fn round_trip_field_by_field() {
        let m = build_oguiso(3).unwrap();
        let doc: ModelDoc = serde_json::from_str(&m.to_json()).unwrap();
        let m2 = build_custom(&doc).unwrap();
        assert_eq!(m.n, m2.n);
        assert_eq!(m.disc, m2.disc);
        assert_eq!(m.chambers, m2.chambers);
        assert_eq!(m.t1, m2.t1);
        assert_eq!(m.t2, m2.t2);
        assert_eq!(m.f, m2.f);
        assert_eq!(m.lambda, m2.lambda);
        assert_eq!(m.r1, m2.r1);
        assert_eq!(m.r2, m2.r2);
        assert_eq!(m.ample, m2.ample);
        assert_eq!(m.square_action, m2.square_action);
        assert_eq!(m.to_json(), m2.to_json());
    }

    #[test]
    fn intersection_oracle_matches_closed_form() {
        for n in 3..=10u32 {
            let oracle = oguiso_intersection_oracle(n);
            let closed: Vec<BigInt> =
                (0..=n).map(|j| BigInt::from(2) * binomial(n, j)).collect();
            assert_eq!(oracle, closed, "N = {n}");
        }
    }
}
