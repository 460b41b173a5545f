//! Volume evaluation on the movable cone: chamber-wise intersection
//! polynomial after reduction, floor-perturbation constants, and the
//! empirical sandwich envelope.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::dynamics::{self, FLOAT_SIGN_TOL};
use crate::error::{Error, Result};
use crate::exact::{QuadExt, Rational};
use crate::model::{binomial, Chamber, ConeModel, DivisorClass};
use crate::sweep;

/// Exact-or-float scalar result.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(QuadExt),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> Result<f64> {
        match self {
            Value::Exact(q) => q.to_f64(),
            Value::Float(x) => Ok(*x),
        }
    }

    pub fn as_exact(&self) -> Option<&QuadExt> {
        match self {
            Value::Exact(q) => Some(q),
            Value::Float(_) => None,
        }
    }
}

fn chamber_poly_exact(n: u32, ch: &Chamber, u: &QuadExt, v: &QuadExt) -> QuadExt {
    let disc = u.disc();
    let mut acc = QuadExt::zero(disc);
    // powers u^j, v^{n-j}
    let mut u_pows = Vec::with_capacity(n as usize + 1);
    let mut v_pows = Vec::with_capacity(n as usize + 1);
    let mut p = QuadExt::one(disc);
    for _ in 0..=n {
        u_pows.push(p.clone());
        p = &p * u;
    }
    p = QuadExt::one(disc);
    for _ in 0..=n {
        v_pows.push(p.clone());
        p = &p * v;
    }
    for j in 0..=n as usize {
        let coeff = binomial(n, j as u32) * &ch.inters[j];
        let term = QuadExt::from_rational(Rational::from_integer(coeff), disc);
        acc = &acc + &(&term * &(&u_pows[j] * &v_pows[n as usize - j]));
    }
    acc
}

fn chamber_poly_f64(n: u32, ch: &Chamber, u: f64, v: f64) -> f64 {
    (0..=n as usize)
        .map(|j| {
            let coeff = (binomial(n, j as u32) * &ch.inters[j])
                .to_f64()
                .unwrap_or(f64::NAN);
            coeff * u.powi(j as i32) * v.powi((n as usize - j) as i32)
        })
        .sum()
}

/// Volume of a class in the closed nef chamber: the top self-intersection,
/// expanded through the chamber's intersection numbers. Exact for exact
/// input.
pub fn vol_nef(model: &ConeModel, d: &DivisorClass) -> Result<Value> {
    match d {
        DivisorClass::Exact { u, v } => {
            if u.sign() == Ordering::Less || v.sign() == Ordering::Less {
                return Err(Error::OutsideCone(
                    "negative nef coordinate; use vol_movable for classes beyond the nef chamber"
                        .into(),
                ));
            }
            for ch in &model.chambers {
                let inv = ch.to_ref.inverse_unimodular();
                let [cu, cv] = inv.apply_quad(&[u.clone(), v.clone()]);
                if cu.sign() != Ordering::Less && cv.sign() != Ordering::Less {
                    return Ok(Value::Exact(chamber_poly_exact(model.n, ch, &cu, &cv)));
                }
            }
            Err(Error::BadChamber(
                "declared chambers do not cover the reference cone".into(),
            ))
        }
        DivisorClass::Float { u, v } => {
            let tol = FLOAT_SIGN_TOL * (u.abs() + v.abs()).max(f64::MIN_POSITIVE);
            if *u < -tol || *v < -tol {
                return Err(Error::OutsideCone(
                    "negative nef coordinate; use vol_movable for classes beyond the nef chamber"
                        .into(),
                ));
            }
            for ch in &model.chambers {
                let inv = ch.to_ref.inverse_unimodular();
                let [cu, cv] = inv.apply_f64([*u, *v]);
                if cu >= -tol && cv >= -tol {
                    return Ok(Value::Float(chamber_poly_f64(model.n, ch, cu, cv)));
                }
            }
            Err(Error::BadChamber(
                "declared chambers do not cover the reference cone".into(),
            ))
        }
    }
}

/// Volume of a class in the closure of the movable interior: reduce into the
/// reference chamber, then evaluate. Extremal-ray classes get the limit
/// value 0 exactly.
pub fn vol_movable(model: &ConeModel, d: &DivisorClass) -> Result<Value> {
    vol_movable_with_word(model, d).map(|(v, _)| v)
}

/// Same as [`vol_movable`], also reporting the chamber word length.
pub fn vol_movable_with_word(model: &ConeModel, d: &DivisorClass) -> Result<(Value, usize)> {
    match d {
        DivisorClass::Exact { u, v } => {
            let [a1, a2] = model.eigen_coords(u, v)?;
            if a1.sign() == Ordering::Less || a2.sign() == Ordering::Less {
                return Err(Error::OutsideCone(
                    "class lies outside the closed movable cone".into(),
                ));
            }
            if a1.is_zero() || a2.is_zero() {
                return Ok((Value::Exact(QuadExt::zero(model.disc)), 0));
            }
            let red = dynamics::reduce_to_core(model, d)?;
            Ok((vol_nef(model, &red.reduced)?, red.word.len()))
        }
        DivisorClass::Float { u, v } => {
            let [a1, a2] = model.eigen_coords_f64(*u, *v)?;
            let tol = FLOAT_SIGN_TOL * (a1.abs() + a2.abs()).max(f64::MIN_POSITIVE);
            if a1 < -tol || a2 < -tol {
                return Err(Error::OutsideCone(
                    "class lies outside the closed movable cone".into(),
                ));
            }
            if a1 <= tol || a2 <= tol {
                return Ok((Value::Float(0.0), 0));
            }
            let red = dynamics::reduce_to_core(model, d)?;
            Ok((vol_nef(model, &red.reduced)?, red.word.len()))
        }
    }
}

/// Effective expression Σ eᵢ·Pᵢ with integer component classes and
/// nonnegative rational coefficients.
#[derive(Clone, Debug)]
pub struct DivisorExpression {
    pub components: Vec<ExprComponent>,
}

#[derive(Clone, Debug)]
pub struct ExprComponent {
    pub class: [BigInt; 2],
    pub coeff: Rational,
}

impl DivisorExpression {
    pub fn new(components: Vec<ExprComponent>) -> Result<Self> {
        if components.iter().any(|c| c.coeff.is_negative()) {
            return Err(Error::Parse("expression coefficients must be nonnegative".into()));
        }
        Ok(DivisorExpression { components })
    }

    /// Coordinates of Σ eᵢ·Pᵢ.
    pub fn total(&self) -> [Rational; 2] {
        self.weighted(|e| e.clone())
    }

    /// Coordinates of Σ ⌊eᵢ⌋·Pᵢ.
    pub fn floor(&self) -> [Rational; 2] {
        self.weighted(|e| Rational::from_integer(e.floor().to_integer()))
    }

    /// Coordinates of Σ {eᵢ}·Pᵢ.
    pub fn fract(&self) -> [Rational; 2] {
        self.weighted(|e| e - Rational::from_integer(e.floor().to_integer()))
    }

    fn weighted<F: Fn(&Rational) -> Rational>(&self, w: F) -> [Rational; 2] {
        let mut out = [Rational::zero(), Rational::zero()];
        for c in &self.components {
            let e = w(&c.coeff);
            out[0] += Rational::from_integer(c.class[0].clone()) * &e;
            out[1] += Rational::from_integer(c.class[1].clone()) * &e;
        }
        out
    }
}

/// Rounding constants of an expression's component system:
/// `c = Σ(|pᵢ| + |qᵢ|)` over eigen-coordinates of the components, then
/// `C₂ = 1 + c`, `C₁₂ = C₂⁻²`, `C₂₂ = C₂²`.
#[derive(Clone, Debug)]
pub struct FloorConstants {
    pub c: QuadExt,
    pub c2: QuadExt,
    pub c12: QuadExt,
    pub c22: QuadExt,
}

pub fn floor_constants(model: &ConeModel, expr: &DivisorExpression) -> Result<FloorConstants> {
    let mut c = QuadExt::zero(model.disc);
    for comp in &expr.components {
        let coords = [
            Rational::from_integer(comp.class[0].clone()),
            Rational::from_integer(comp.class[1].clone()),
        ];
        let [p, q] = model.eigen_coords_rational(&coords)?;
        let abs = |x: &QuadExt| if x.is_negative() { x.neg() } else { x.clone() };
        c = &c + &(&abs(&p) + &abs(&q));
    }
    let c2 = c.try_add(&QuadExt::one(model.disc))?;
    let c22 = c2.try_mul(&c2)?;
    let c12 = c22.inverse()?;
    Ok(FloorConstants { c, c2, c12, c22 })
}

/// Floor class Σ⌊eᵢ⌋Pᵢ and the fractional perturbation Σ{eᵢ}Pᵢ.
pub fn floor_class(expr: &DivisorExpression, disc: u64) -> (DivisorClass, DivisorClass) {
    let f = expr.floor();
    let p = expr.fract();
    (
        DivisorClass::from_rational(f[0].clone(), f[1].clone(), disc),
        DivisorClass::from_rational(p[0].clone(), p[1].clone(), disc),
    )
}

/// Report of the floor-perturbation bound check
/// `C₁₂·L₁(D+A) < L₁(⌊D⌋+A) < C₂₂·L₁(D+A)` with `⌊D⌋+A` interior.
#[derive(Clone, Debug)]
pub struct Lemma44Report {
    pub l1_sum: QuadExt,
    pub l1_floor: QuadExt,
    pub lower: QuadExt,
    pub upper: QuadExt,
    pub floor_in_movable: bool,
    pub pass: bool,
}

/// Checks the floor-perturbation bounds for an expression against an ample
/// class whose eigen-coordinates both exceed C₂.
pub fn lemma44_check(
    model: &ConeModel,
    expr: &DivisorExpression,
    ample: &[Rational; 2],
) -> Result<Lemma44Report> {
    let consts = floor_constants(model, expr)?;
    let b = model.eigen_coords_rational(ample)?;
    for (i, bi) in b.iter().enumerate() {
        if bi.partial_cmp(&consts.c2) != Some(Ordering::Greater) {
            return Err(Error::Hypothesis(format!(
                "ample eigen-coordinate b{} = {} does not exceed C2 = {}",
                i + 1,
                bi,
                consts.c2
            )));
        }
    }
    let disc = model.disc;
    let total = expr.total();
    let sum = DivisorClass::from_rational(&total[0] + &ample[0], &total[1] + &ample[1], disc);
    let floor = expr.floor();
    let floor_sum =
        DivisorClass::from_rational(&floor[0] + &ample[0], &floor[1] + &ample[1], disc);

    let (l1_sum, _) = dynamics::l_coords(model, &sum)?;
    let floor_membership = dynamics::membership(model, &floor_sum)?;
    let floor_in_movable = matches!(
        floor_membership,
        crate::dynamics::Membership::NefChamber | crate::dynamics::Membership::MovableInterior
    );
    let (l1_floor, _) = dynamics::l_coords(model, &floor_sum)?;
    let lower = consts.c12.try_mul(&l1_sum)?;
    let upper = consts.c22.try_mul(&l1_sum)?;
    let pass = floor_in_movable
        && lower.partial_cmp(&l1_floor) == Some(Ordering::Less)
        && l1_floor.partial_cmp(&upper) == Some(Ordering::Less);
    Ok(Lemma44Report {
        l1_sum,
        l1_floor,
        lower,
        upper,
        floor_in_movable,
        pass,
    })
}

/// Empirical sandwich envelope: min and max of vol/L₁^{n/2} over a
/// deterministic geometric L₂-grid in [1, λ²] at L₁ = 1.
#[derive(Clone, Debug)]
pub struct Envelope {
    pub c11: f64,
    pub c21: f64,
    pub points: usize,
}

pub fn sandwich_envelope(model: &ConeModel, points: usize) -> Result<Envelope> {
    if points < 2 {
        return Err(Error::Parse("envelope needs at least 2 grid points".into()));
    }
    let lambda = model.lambda.to_f64()?;
    let log_span = 2.0 * lambda.ln();
    let idx: Vec<usize> = (0..points).collect();
    let ratios = sweep::map_collect(&idx, |&i| {
        let l2 = (log_span * i as f64 / (points - 1) as f64).exp();
        let a1 = l2.sqrt();
        let a2 = 1.0 / a1;
        let r1 = [
            model.r1[0].to_f64().unwrap(),
            model.r1[1].to_f64().unwrap(),
        ];
        let r2 = [
            model.r2[0].to_f64().unwrap(),
            model.r2[1].to_f64().unwrap(),
        ];
        let d = DivisorClass::float(a1 * r1[0] + a2 * r2[0], a1 * r1[1] + a2 * r2[1]);
        vol_movable(model, &d).and_then(|v| v.to_f64())
    });
    let mut c11 = f64::INFINITY;
    let mut c21 = f64::NEG_INFINITY;
    for r in ratios {
        let r = r?;
        c11 = c11.min(r);
        c21 = c21.max(r);
    }
    Ok(Envelope {
        c11,
        c21,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{apply_mat, apply_word, Gen};
    use crate::model::build_oguiso;

    fn n3() -> ConeModel {
        build_oguiso(3).unwrap()
    }

    fn exact_int(m: &ConeModel, u: i64, v: i64) -> DivisorClass {
        DivisorClass::from_int(u, v, m.disc)
    }

    fn as_int(v: &Value) -> i64 {
        let q = v.as_exact().unwrap();
        assert!(q.is_rational());
        assert!(q.rat().is_integer());
        q.rat().to_integer().to_i64().unwrap()
    }

    #[test]
    fn vol_nef_examples() {
        let m = n3();
        assert_eq!(as_int(&vol_nef(&m, &exact_int(&m, 1, 1)).unwrap()), 40);
        assert_eq!(as_int(&vol_nef(&m, &exact_int(&m, 0, 0)).unwrap()), 0);
        // (2,0): 2^3·I_0 where I_0 = H2^3 = 2
        assert_eq!(as_int(&vol_nef(&m, &exact_int(&m, 2, 0)).unwrap()), 16);
    }

    #[test]
    fn vol_nef_equals_central_binomial() {
        // vol(H1+H2) = Σ C(n,j)·2·C(n,j) = 2·C(2n,n) by Vandermonde
        for n in 3..=7u32 {
            let m = build_oguiso(n).unwrap();
            let v = vol_nef(&m, &exact_int(&m, 1, 1)).unwrap();
            let expect = BigInt::from(2) * binomial(2 * n, n);
            assert_eq!(v.as_exact().unwrap().rat().to_integer(), expect);
        }
    }

    #[test]
    fn vol_nef_rejects_negative_coordinate() {
        let m = n3();
        assert!(matches!(
            vol_nef(&m, &exact_int(&m, -1, 2)),
            Err(Error::OutsideCone(_))
        ));
    }

    #[test]
    fn vol_movable_chamber_invariance() {
        let m = n3();
        let d = exact_int(&m, 1, 1);
        let fd = apply_mat(&m.f, &d);
        assert_eq!(as_int(&vol_movable(&m, &fd).unwrap()), 40);
        let w = vec![Gen::T1, Gen::T2, Gen::T1];
        let wd = apply_word(&m, &w, &d);
        assert_eq!(as_int(&vol_movable(&m, &wd).unwrap()), 40);
    }

    #[test]
    fn vol_movable_homogeneity() {
        let m = n3();
        let d = exact_int(&m, 1, 1);
        assert_eq!(as_int(&vol_movable(&m, &d.scale_int(2)).unwrap()), 320);
    }

    #[test]
    fn vol_movable_extremal_ray_is_zero() {
        let m = n3();
        let v = vol_movable(&m, &m.r1_class()).unwrap();
        assert!(v.as_exact().unwrap().is_zero());
    }

    #[test]
    fn vol_movable_rejects_exterior() {
        let m = n3();
        assert!(matches!(
            vol_movable(&m, &exact_int(&m, -1, -1)),
            Err(Error::OutsideCone(_))
        ));
    }

    #[test]
    fn wall_continuity() {
        // on the H1-wall image under T1 the two adjacent chambers agree
        let m = n3();
        let wall = exact_int(&m, 3, 0);
        let from_nef = vol_nef(&m, &wall).unwrap();
        let image = apply_mat(&m.t1, &wall); // T1 fixes (1,0): same class
        assert_eq!(image, wall);
        let via_movable = vol_movable(&m, &wall).unwrap();
        assert_eq!(from_nef, via_movable);
    }

    #[test]
    fn ray_monotonicity() {
        let m = n3();
        let mut prev = Rational::from_integer((-1).into());
        for mm in 1..=64i64 {
            let a1 = m.r1[0].scale(&Rational::from_integer(mm.into()));
            let a2 = m.r1[1].scale(&Rational::from_integer(mm.into()));
            let one = QuadExt::one(m.disc);
            let d = DivisorClass::exact(a1.try_add(&one).unwrap(), a2.try_add(&one).unwrap());
            let v = vol_movable(&m, &d).unwrap();
            let vf = v.to_f64().unwrap();
            assert!(vf > prev.to_f64().unwrap(), "not increasing at m={mm}");
            prev = Rational::from_float(vf).unwrap();
        }
    }

    #[test]
    fn floor_class_examples() {
        let m = n3();
        // integer coefficients: floor is the identity
        let expr = DivisorExpression::new(vec![ExprComponent {
            class: [1.into(), 2.into()],
            coeff: Rational::from_integer(3.into()),
        }])
        .unwrap();
        let (fl, pert) = floor_class(&expr, m.disc);
        assert_eq!(fl, exact_int(&m, 3, 6));
        assert_eq!(pert, exact_int(&m, 0, 0));

        // single component with coefficient 3/4
        let expr = DivisorExpression::new(vec![ExprComponent {
            class: [1.into(), 0.into()],
            coeff: Rational::new(3.into(), 4.into()),
        }])
        .unwrap();
        let (fl, pert) = floor_class(&expr, m.disc);
        assert_eq!(fl, exact_int(&m, 0, 0));
        assert_eq!(
            pert,
            DivisorClass::from_rational(
                Rational::new(3.into(), 4.into()),
                Rational::zero(),
                m.disc
            )
        );
    }

    #[test]
    fn floor_two_components() {
        let m = n3();
        let expr = DivisorExpression::new(vec![
            ExprComponent {
                class: [1.into(), 0.into()],
                coeff: Rational::new(3.into(), 2.into()),
            },
            ExprComponent {
                class: [0.into(), 1.into()],
                coeff: Rational::new(9.into(), 4.into()),
            },
        ])
        .unwrap();
        let (fl, _) = floor_class(&expr, m.disc);
        assert_eq!(fl, exact_int(&m, 1, 2));
        // the eigen-coordinate perturbation is bounded by c
        let consts = floor_constants(&m, &expr).unwrap();
        let p = expr.fract();
        let [e1, e2] = m.eigen_coords_rational(&p).unwrap();
        let abs = |x: &QuadExt| if x.is_negative() { x.neg() } else { x.clone() };
        assert!(abs(&e1).try_add(&abs(&e2)).unwrap() <= consts.c);
    }

    #[test]
    fn lemma44_integer_expression_is_tight() {
        let m = n3();
        let expr = DivisorExpression::new(vec![ExprComponent {
            class: [2.into(), 1.into()],
            coeff: Rational::from_integer(2.into()),
        }])
        .unwrap();
        let consts = floor_constants(&m, &expr).unwrap();
        // pick an integer ample multiple with eigen-coordinates above C2
        let mut k = 1i64;
        while QuadExt::from_int(k, m.disc) <= consts.c2 {
            k += 1;
        }
        let ample = [
            Rational::from_integer(k.into()),
            Rational::from_integer(k.into()),
        ];
        let rep = lemma44_check(&m, &expr, &ample).unwrap();
        assert_eq!(rep.l1_sum, rep.l1_floor);
        assert!(rep.pass);
    }

    #[test]
    fn lemma44_hypothesis_violation() {
        let m = n3();
        let expr = DivisorExpression::new(vec![ExprComponent {
            class: [1.into(), 1.into()],
            coeff: Rational::new(1.into(), 2.into()),
        }])
        .unwrap();
        let ample = [
            Rational::new(1.into(), 2.into()),
            Rational::new(1.into(), 2.into()),
        ];
        let err = lemma44_check(&m, &expr, &ample).unwrap_err();
        assert!(matches!(err, Error::Hypothesis(_)));
        assert!(err.to_string().contains("C2"));
    }

    #[test]
    fn envelope_stable_under_refinement() {
        let m = n3();
        let coarse = sandwich_envelope(&m, 2_000).unwrap();
        let fine = sandwich_envelope(&m, 10_000).unwrap();
        assert!(coarse.c11 > 0.0 && coarse.c21.is_finite());
        assert!((coarse.c11 - fine.c11).abs() / fine.c11 < 0.01);
        assert!((coarse.c21 - fine.c21).abs() / fine.c21 < 0.01);
    }
}
