//! The infinite dihedral action on the divisor lattice: eigen-basis
//! L-coordinates, cone membership, and reduction of a movable class into the
//! core chamber region.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::exact::QuadExt;
use crate::model::{ConeModel, DivisorClass, Mat2};

/// Relative sign tolerance for float-mode classes.
pub const FLOAT_SIGN_TOL: f64 = 1e-12;

/// One generator of the dihedral action.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Gen {
    T1,
    T2,
}

impl Gen {
    pub fn matrix<'a>(&self, model: &'a ConeModel) -> &'a Mat2 {
        match self {
            Gen::T1 => &model.t1,
            Gen::T2 => &model.t2,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Gen::T1 => "t1",
            Gen::T2 => "t2",
        }
    }
}

/// Serializes a generator word as a string over the alphabet {"t1","t2"}.
pub fn word_to_string(word: &[Gen]) -> String {
    word.iter().map(Gen::as_str).collect()
}

pub fn word_from_string(s: &str) -> Result<Vec<Gen>> {
    let bytes = s.as_bytes();
    if bytes.len() % 2 != 0 {
        return Err(Error::Parse(format!("bad generator word {s:?}")));
    }
    bytes
        .chunks(2)
        .map(|c| match c {
            b"t1" => Ok(Gen::T1),
            b"t2" => Ok(Gen::T2),
            _ => Err(Error::Parse(format!("bad generator word {s:?}"))),
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Membership {
    NefChamber,
    MovableInterior,
    ExtremalRay,
    Exterior,
}

impl fmt::Display for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Membership::NefChamber => "nef_chamber",
            Membership::MovableInterior => "movable_interior",
            Membership::ExtremalRay => "extremal_ray",
            Membership::Exterior => "exterior",
        };
        f.write_str(s)
    }
}

/// Result of reducing a movable class into the core region.
#[derive(Clone, Debug)]
pub struct ReductionResult {
    /// Generators in application order; multiplying them left-to-right onto
    /// the reduced class reproduces the input.
    pub word: Vec<Gen>,
    pub reduced: DivisorClass,
    /// Signed index of the nef-chamber translate containing the input:
    /// 0 for the reference chamber, positive on the T₁ side.
    pub chamber: i64,
    /// False when the reduction ran in float mode under a sign tolerance.
    pub certified: bool,
}

/// Applies a 2×2 integer matrix to a divisor class.
pub fn apply_mat(m: &Mat2, d: &DivisorClass) -> DivisorClass {
    match d {
        DivisorClass::Exact { u, v } => {
            let out = m.apply_quad(&[u.clone(), v.clone()]);
            let [u, v] = out;
            DivisorClass::Exact { u, v }
        }
        DivisorClass::Float { u, v } => {
            let [u, v] = m.apply_f64([*u, *v]);
            DivisorClass::Float { u, v }
        }
    }
}

/// Applies a generator word left-to-right: `apply(w, D) = w₁·w₂·…·wₘ·D`.
pub fn apply_word(model: &ConeModel, word: &[Gen], d: &DivisorClass) -> DivisorClass {
    let mut out = d.clone();
    for g in word.iter().rev() {
        out = apply_mat(g.matrix(model), &out);
    }
    out
}

/// Exact eigen-basis coordinates of an exact class.
pub fn eigen_coords(model: &ConeModel, d: &DivisorClass) -> Result<[QuadExt; 2]> {
    match d {
        DivisorClass::Exact { u, v } => model.eigen_coords(u, v),
        DivisorClass::Float { .. } => Err(Error::Parse(
            "exact eigen-coordinates require an exact class".into(),
        )),
    }
}

/// L-coordinates L₁ = a₁a₂ and L₂ = a₁/a₂ of a class interior to the
/// movable cone, exact for exact classes.
pub fn l_coords(model: &ConeModel, d: &DivisorClass) -> Result<(QuadExt, QuadExt)> {
    let a = eigen_coords(model, d)?;
    for (i, ai) in a.iter().enumerate() {
        if ai.sign() != Ordering::Greater {
            return Err(Error::OutsideCone(format!(
                "eigen-coordinate a{} of the class is not positive",
                i + 1
            )));
        }
    }
    Ok((a[0].try_mul(&a[1])?, a[0].try_div(&a[1])?))
}

/// Float L-coordinates; works for both modes.
pub fn l_coords_f64(model: &ConeModel, d: &DivisorClass) -> Result<(f64, f64)> {
    let [u, v] = d.to_floats()?;
    let [a1, a2] = model.eigen_coords_f64(u, v)?;
    if a1 <= 0.0 || a2 <= 0.0 {
        return Err(Error::OutsideCone(
            "class is not interior to the movable cone".into(),
        ));
    }
    Ok((a1 * a2, a1 / a2))
}

/// Classifies a class by exact signs of its eigen-basis and nef coordinates.
/// The zero class is reported as exterior.
pub fn membership(model: &ConeModel, d: &DivisorClass) -> Result<Membership> {
    match d {
        DivisorClass::Exact { u, v } => {
            let [a1, a2] = model.eigen_coords(u, v)?;
            Ok(classify(
                a1.sign(),
                a2.sign(),
                u.sign(),
                v.sign(),
            ))
        }
        DivisorClass::Float { u, v } => {
            let [a1, a2] = model.eigen_coords_f64(*u, *v)?;
            let scale = a1.abs() + a2.abs();
            let tol = FLOAT_SIGN_TOL * scale.max(f64::MIN_POSITIVE);
            let sgn = |x: f64| {
                if x > tol {
                    Ordering::Greater
                } else if x < -tol {
                    Ordering::Less
                } else {
                    Ordering::Equal
                }
            };
            let nscale = u.abs() + v.abs();
            let ntol = FLOAT_SIGN_TOL * nscale.max(f64::MIN_POSITIVE);
            let nsgn = |x: f64| {
                if x > ntol {
                    Ordering::Greater
                } else if x < -ntol {
                    Ordering::Less
                } else {
                    Ordering::Equal
                }
            };
            Ok(classify(sgn(a1), sgn(a2), nsgn(*u), nsgn(*v)))
        }
    }
}

fn classify(a1: Ordering, a2: Ordering, u: Ordering, v: Ordering) -> Membership {
    use Ordering::*;
    match (a1, a2) {
        (Less, _) | (_, Less) => Membership::Exterior,
        (Equal, Equal) => Membership::Exterior,
        (Equal, _) | (_, Equal) => Membership::ExtremalRay,
        (Greater, Greater) => {
            if u != Less && v != Less {
                Membership::NefChamber
            } else {
                Membership::MovableInterior
            }
        }
    }
}

/// Upper bound on the reduction word length for a class with the given L₂.
/// Crossing one λ²-period of L₂ costs two generators.
fn word_length_cap(model: &ConeModel, l2: f64) -> usize {
    let lambda = model.lambda.to_f64().unwrap_or(f64::MAX);
    let span = (l2.abs().max(f64::MIN_POSITIVE).ln().abs() / (lambda * lambda).ln()).ceil();
    4 + 2 * span as usize
}

/// Reduces a class interior to the movable cone into the reference nef
/// chamber by repeated exact sign tests, recording the generator word.
pub fn reduce_to_core(model: &ConeModel, d: &DivisorClass) -> Result<ReductionResult> {
    match d {
        DivisorClass::Exact { .. } => reduce_exact(model, d),
        DivisorClass::Float { .. } => reduce_float(model, d),
    }
}

fn reduce_exact(model: &ConeModel, d: &DivisorClass) -> Result<ReductionResult> {
    let (_, l2) = l_coords(model, d)?; // also certifies interior membership
    let cap = word_length_cap(model, l2.to_f64().unwrap_or(f64::MAX));
    let mut word = Vec::new();
    let mut cur = d.clone();
    loop {
        let (u_sign, v_sign) = match &cur {
            DivisorClass::Exact { u, v } => (u.sign(), v.sign()),
            _ => unreachable!(),
        };
        if u_sign != Ordering::Less && v_sign != Ordering::Less {
            break;
        }
        let g = if u_sign == Ordering::Less { Gen::T2 } else { Gen::T1 };
        cur = apply_mat(g.matrix(model), &cur);
        word.push(g);
        if word.len() > cap {
            return Err(Error::BadModel(
                "chamber reduction did not converge; the generators do not reflect the chamber walls"
                    .into(),
            ));
        }
    }
    let chamber = chamber_index(&word);
    Ok(ReductionResult {
        word,
        reduced: cur,
        chamber,
        certified: true,
    })
}

fn reduce_float(model: &ConeModel, d: &DivisorClass) -> Result<ReductionResult> {
    let (_, l2) = l_coords_f64(model, d)?;
    let cap = word_length_cap(model, l2);
    let mut word = Vec::new();
    let mut cur = d.clone();
    loop {
        let (u, v) = match &cur {
            DivisorClass::Float { u, v } => (*u, *v),
            _ => unreachable!(),
        };
        let tol = FLOAT_SIGN_TOL * (u.abs() + v.abs()).max(f64::MIN_POSITIVE);
        if u >= -tol && v >= -tol {
            break;
        }
        let g = if u < -tol { Gen::T2 } else { Gen::T1 };
        cur = apply_mat(g.matrix(model), &cur);
        word.push(g);
        if word.len() > cap {
            return Err(Error::BadModel(
                "chamber reduction did not converge; the generators do not reflect the chamber walls"
                    .into(),
            ));
        }
    }
    let chamber = chamber_index(&word);
    Ok(ReductionResult {
        word,
        reduced: cur,
        chamber,
        certified: false,
    })
}

/// Signed chamber index from the reduction word: word length, positive when
/// the first applied generator was T₁.
fn chamber_index(word: &[Gen]) -> i64 {
    match word.first() {
        None => 0,
        Some(Gen::T1) => word.len() as i64,
        Some(Gen::T2) => -(word.len() as i64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Rational;
    use crate::model::build_oguiso;
    use num_bigint::BigInt;

    fn n3() -> ConeModel {
        build_oguiso(3).unwrap()
    }

    #[test]
    fn l_coords_of_ray_sum() {
        let m = n3();
        // R1 + R2 = (1,1): a1 = a2 = 1
        let d = DivisorClass::from_int(1, 1, m.disc);
        let (l1, l2) = l_coords(&m, &d).unwrap();
        assert_eq!(l1, QuadExt::one(m.disc));
        assert_eq!(l2, QuadExt::one(m.disc));
    }

    #[test]
    fn l_coords_scale_under_f() {
        let m = n3();
        let d = DivisorClass::from_int(2, 3, m.disc);
        let fd = apply_mat(&m.f, &d);
        let (l1, l2) = l_coords(&m, &d).unwrap();
        let (fl1, fl2) = l_coords(&m, &fd).unwrap();
        assert_eq!(fl1, l1);
        let lam2 = m.lambda.try_mul(&m.lambda).unwrap();
        assert_eq!(fl2, lam2.try_mul(&l2).unwrap());
    }

    #[test]
    fn l_coords_against_float_solve() {
        let m = n3();
        let d = DivisorClass::from_int(1, 1, m.disc);
        let (l1, l2) = l_coords(&m, &d).unwrap();
        let (f1, f2) = l_coords_f64(&m, &d).unwrap();
        assert!((l1.to_f64().unwrap() - f1).abs() < 1e-12);
        assert!((l2.to_f64().unwrap() - f2).abs() < 1e-12);
    }

    #[test]
    fn l_coords_outside_cone_names_coordinate() {
        let m = n3();
        let d = DivisorClass::from_int(-1, -1, m.disc);
        let err = l_coords(&m, &d).unwrap_err();
        assert!(err.to_string().contains("a1") || err.to_string().contains("a2"));
    }

    #[test]
    fn apply_examples() {
        let m = n3();
        let d = DivisorClass::from_int(1, 1, m.disc);
        assert_eq!(apply_mat(&Mat2::identity(), &d), d);
        let t1d = apply_mat(&m.t1, &d);
        assert_eq!(apply_mat(&m.t1, &t1d), d);
        let fd = apply_mat(&m.f, &d);
        assert_eq!(fd, DivisorClass::from_int(-7, 41, m.disc));
    }

    #[test]
    fn membership_classification() {
        let m = n3();
        assert_eq!(
            membership(&m, &DivisorClass::from_int(1, 1, m.disc)).unwrap(),
            Membership::NefChamber
        );
        assert_eq!(
            membership(&m, &m.r1_class()).unwrap(),
            Membership::ExtremalRay
        );
        assert_eq!(
            membership(&m, &DivisorClass::from_int(-1, -1, m.disc)).unwrap(),
            Membership::Exterior
        );
        assert_eq!(
            membership(&m, &DivisorClass::from_int(-7, 41, m.disc)).unwrap(),
            Membership::MovableInterior
        );
    }

    #[test]
    fn reduce_nef_is_empty() {
        let m = n3();
        let r = reduce_to_core(&m, &DivisorClass::from_int(1, 1, m.disc)).unwrap();
        assert!(r.word.is_empty());
        assert_eq!(r.chamber, 0);
        assert!(r.certified);
    }

    #[test]
    fn reduce_f_image() {
        let m = n3();
        let d = DivisorClass::from_int(-7, 41, m.disc);
        let r = reduce_to_core(&m, &d).unwrap();
        assert_eq!(r.word.len(), 2);
        assert_eq!(r.reduced, DivisorClass::from_int(1, 1, m.disc));
        assert_eq!(apply_word(&m, &r.word, &r.reduced), d);
        assert_eq!(word_to_string(&r.word), "t2t1");
        assert_eq!(r.chamber, -2);
    }

    #[test]
    fn reduce_deep_orbit_preserves_l1() {
        let m = n3();
        let mut d = DivisorClass::from_rational(
            Rational::from_integer(BigInt::from(2)),
            Rational::from_integer(BigInt::from(3)),
            m.disc,
        );
        let (l1_in, _) = l_coords(&m, &d).unwrap();
        for _ in 0..3 {
            d = apply_mat(&m.f, &d);
        }
        let r = reduce_to_core(&m, &d).unwrap();
        assert_eq!(r.reduced, DivisorClass::from_int(2, 3, m.disc));
        let (l1_red, _) = l_coords(&m, &r.reduced).unwrap();
        assert_eq!(l1_in, l1_red);
    }

    #[test]
    fn reduce_rejects_exterior() {
        let m = n3();
        assert!(reduce_to_core(&m, &DivisorClass::from_int(-1, -1, m.disc)).is_err());
    }

    #[test]
    fn reduce_is_idempotent() {
        let m = n3();
        let d = DivisorClass::from_int(5, 2, m.disc);
        let r = reduce_to_core(&m, &d).unwrap();
        assert!(r.word.is_empty());
        let again = reduce_to_core(&m, &r.reduced).unwrap();
        assert!(again.word.is_empty());
    }

    #[test]
    fn word_length_bound() {
        let m = n3();
        let base = DivisorClass::from_int(1, 1, m.disc);
        for k in 1..=8i64 {
            let mut d = base.clone();
            for _ in 0..k {
                d = apply_mat(&m.f, &d);
            }
            let r = reduce_to_core(&m, &d).unwrap();
            let (_, l2) = l_coords(&m, &d).unwrap();
            let lam2 = m.lambda.to_f64().unwrap().powi(2);
            let bound = 2 + 2 * (l2.to_f64().unwrap().ln().abs() / lam2.ln()).ceil() as usize + 2;
            assert!(r.word.len() <= bound, "word {} > bound {bound}", r.word.len());
        }
    }

    #[test]
    fn float_reduction_is_uncertified() {
        let m = n3();
        let d = DivisorClass::float(-7.0, 41.0);
        let r = reduce_to_core(&m, &d).unwrap();
        assert!(!r.certified);
        assert_eq!(r.word.len(), 2);
    }

    #[test]
    fn word_round_trip() {
        let w = vec![Gen::T2, Gen::T1, Gen::T1];
        assert_eq!(word_from_string(&word_to_string(&w)).unwrap(), w);
        assert!(word_from_string("t3").is_err());
    }
}
