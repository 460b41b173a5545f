//! Exact arithmetic in a fixed real quadratic field Q(√d).
//!
//! Every value is `a + b√d` with arbitrary-precision rational `a`, `b` and a
//! squarefree discriminant `d ≥ 2` shared across all values of one model.
//! Signs and comparisons are decided by integer arithmetic only; floating
//! point appears solely in the explicit conversion [`QuadExt::to_f64`].

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Splits `x` into `s² · d` with `d` squarefree; returns `(s, d)`.
///
/// Trial division up to 10⁶, then a perfect-square check on the cofactor.
/// Sufficient for discriminants arising from 64-bit trace data.
pub fn squarefree_part(x: u64) -> (u64, u64) {
    assert!(x > 0, "squarefree_part of 0");
    let mut s: u64 = 1;
    let mut d: u64 = 1;
    let mut rem = x;
    let mut p: u64 = 2;
    while p <= 1_000_000 && p * p <= rem {
        if rem % p == 0 {
            let mut e = 0u32;
            while rem % p == 0 {
                rem /= p;
                e += 1;
            }
            s *= p.pow(e / 2);
            if e % 2 == 1 {
                d *= p;
            }
        }
        p += 1;
    }
    if rem > 1 {
        let r = rem.sqrt();
        if r * r == rem {
            s *= r;
        } else {
            d *= rem;
        }
    }
    (s, d)
}

/// An element `a + b√d` of the real quadratic field Q(√d).
#[derive(Clone, PartialEq, Eq)]
pub struct QuadExt {
    a: Rational,
    b: Rational,
    d: u64,
}

impl QuadExt {
    /// `a + b√d`. `d` must be squarefree and ≥ 2.
    pub fn new(a: Rational, b: Rational, d: u64) -> Self {
        debug_assert!(d >= 2, "discriminant must be ≥ 2");
        debug_assert_eq!(squarefree_part(d).1, d, "discriminant must be squarefree");
        QuadExt { a, b, d }
    }

    pub fn from_rational(a: Rational, d: u64) -> Self {
        Self::new(a, Rational::zero(), d)
    }

    pub fn from_int(n: i64, d: u64) -> Self {
        Self::from_rational(Rational::from_integer(BigInt::from(n)), d)
    }

    pub fn zero(d: u64) -> Self {
        Self::from_int(0, d)
    }

    pub fn one(d: u64) -> Self {
        Self::from_int(1, d)
    }

    /// The rational part `a`.
    pub fn rat(&self) -> &Rational {
        &self.a
    }

    /// The coefficient `b` of √d.
    pub fn irr(&self) -> &Rational {
        &self.b
    }

    pub fn disc(&self) -> u64 {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn same_field(&self, rhs: &Self) -> Result<()> {
        if self.d != rhs.d {
            return Err(Error::DiscMismatch {
                left: self.d,
                right: rhs.d,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        self.same_field(rhs)?;
        Ok(Self::new(&self.a + &rhs.a, &self.b + &rhs.b, self.d))
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self> {
        self.same_field(rhs)?;
        Ok(Self::new(&self.a - &rhs.a, &self.b - &rhs.b, self.d))
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        self.same_field(rhs)?;
        let d = Rational::from_integer(BigInt::from(self.d));
        Ok(Self::new(
            &self.a * &rhs.a + &self.b * &rhs.b * d,
            &self.a * &rhs.b + &self.b * &rhs.a,
            self.d,
        ))
    }

    pub fn try_div(&self, rhs: &Self) -> Result<Self> {
        self.same_field(rhs)?;
        self.try_mul(&rhs.inverse()?)
    }

    /// `(a + b√d)⁻¹ = (a − b√d) / (a² − b²d)`.
    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero { disc: self.d });
        }
        let n = self.norm();
        debug_assert!(!n.is_zero(), "norm of a nonzero element cannot vanish");
        Ok(Self::new(&self.a / &n, -&self.b / &n, self.d))
    }

    /// Field norm `a² − b²d`.
    pub fn norm(&self) -> Rational {
        let d = Rational::from_integer(BigInt::from(self.d));
        &self.a * &self.a - &self.b * &self.b * d
    }

    /// Galois conjugate `a − b√d`.
    pub fn conj(&self) -> Self {
        Self::new(self.a.clone(), -&self.b, self.d)
    }

    pub fn neg(&self) -> Self {
        Self::new(-&self.a, -&self.b, self.d)
    }

    pub fn scale(&self, k: &Rational) -> Self {
        Self::new(&self.a * k, &self.b * k, self.d)
    }

    /// `self^k` for any integer `k` (negative powers invert first).
    pub fn powi(&self, k: i64) -> Result<Self> {
        let base = if k < 0 { self.inverse()? } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::one(self.d);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.try_mul(&sq)?;
            }
            sq = sq.try_mul(&sq)?;
            e >>= 1;
        }
        Ok(acc)
    }

    /// Exact sign of `a + b√d`, decided by comparing `a²` with `b²d`.
    pub fn sign(&self) -> Ordering {
        let sa = rational_sign(&self.a);
        let sb = rational_sign(&self.b);
        match (sa, sb) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (Ordering::Greater, Ordering::Greater) => Ordering::Greater,
            (Ordering::Less, Ordering::Less) => Ordering::Less,
            // mixed signs: |a| vs |b|√d decides; a² = b²d is impossible
            // because d is squarefree ≥ 2 and a, b are rational and nonzero
            (sa, _) => {
                let d = Rational::from_integer(BigInt::from(self.d));
                let lhs = &self.a * &self.a;
                let rhs = &self.b * &self.b * d;
                match lhs.cmp(&rhs) {
                    Ordering::Greater => sa,
                    Ordering::Less => sa.reverse(),
                    Ordering::Equal => unreachable!("a² = b²d with squarefree d ≥ 2"),
                }
            }
        }
    }

    pub fn is_positive(&self) -> bool {
        self.sign() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.sign() == Ordering::Less
    }

    /// Round-to-nearest double via a 128-bit fixed-point √d intermediate.
    ///
    /// When `a` and `b√d` have opposite signs the direct sum cancels and
    /// the √d truncation error is amplified by the coefficient size, so the
    /// value is computed as norm/conjugate instead: the conjugate's terms
    /// reinforce and carry no cancellation.
    pub fn to_f64(&self) -> Result<f64> {
        let mixed = rational_sign(&self.a) == Ordering::Greater
            && rational_sign(&self.b) == Ordering::Less
            || rational_sign(&self.a) == Ordering::Less
                && rational_sign(&self.b) == Ordering::Greater;
        let v = if mixed {
            let conj = self.conj().approx_rational();
            if conj.is_zero() {
                return Err(Error::FloatOverflow);
            }
            self.norm() / conj
        } else {
            self.approx_rational()
        };
        match v.to_f64() {
            Some(x) if x.is_finite() => Ok(x),
            _ => Err(Error::FloatOverflow),
        }
    }

    /// Rational approximation `a + b·⌊√(d·2²⁵⁶)⌋/2¹²⁸`.
    fn approx_rational(&self) -> Rational {
        if self.b.is_zero() {
            return self.a.clone();
        }
        let scaled: BigInt = BigInt::from(self.d) << 256;
        let root = scaled.sqrt();
        let sqrt_d = Rational::new(root, BigInt::one() << 128);
        &self.a + &self.b * sqrt_d
    }

    /// Serialization as decimal strings `[a_num, a_den, b_num, b_den]`.
    pub fn to_tuple(&self) -> [String; 4] {
        [
            self.a.numer().to_string(),
            self.a.denom().to_string(),
            self.b.numer().to_string(),
            self.b.denom().to_string(),
        ]
    }

    pub fn from_tuple(t: &[String; 4], d: u64) -> Result<Self> {
        let parse = |s: &str| -> Result<BigInt> {
            s.parse()
                .map_err(|_| Error::Parse(format!("bad integer literal {s:?}")))
        };
        let a_den = parse(&t[1])?;
        let b_den = parse(&t[3])?;
        if a_den.is_zero() || b_den.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(Self::new(
            Rational::new(parse(&t[0])?, a_den),
            Rational::new(parse(&t[2])?, b_den),
            d,
        ))
    }
}

fn rational_sign(x: &Rational) -> Ordering {
    if x.is_zero() {
        Ordering::Equal
    } else if x.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

impl PartialOrd for QuadExt {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.d != other.d {
            return None;
        }
        Some(self.try_sub(other).expect("same field").sign())
    }
}

impl fmt::Debug for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}\u{221a}{}", self.a, self.b, self.d)
    }
}

impl fmt::Display for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else {
            write!(f, "{} + {}\u{221a}{}", self.a, self.b, self.d)
        }
    }
}

macro_rules! forward_op {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl std::ops::$trait for &QuadExt {
            type Output = QuadExt;
            fn $method(self, rhs: &QuadExt) -> QuadExt {
                self.$checked(rhs).expect("field operation failed")
            }
        }
        impl std::ops::$trait for QuadExt {
            type Output = QuadExt;
            fn $method(self, rhs: QuadExt) -> QuadExt {
                (&self).$checked(&rhs).expect("field operation failed")
            }
        }
    };
}

forward_op!(Add, add, try_add);
forward_op!(Sub, sub, try_sub);
forward_op!(Mul, mul, try_mul);
forward_op!(Div, div, try_div);

impl std::ops::Neg for &QuadExt {
    type Output = QuadExt;
    fn neg(self) -> QuadExt {
        QuadExt::neg(self)
    }
}

pub fn rational_from_str(s: &str) -> Result<Rational> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    if d.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rational::new(n, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64, d: u64) -> QuadExt {
        QuadExt::new(
            Rational::from_integer(a.into()),
            Rational::from_integer(b.into()),
            d,
        )
    }

    #[test]
    fn unit_norm_product() {
        // conjugate eigenvalue pair multiplies to det f* = 1
        let lam = q(17, 12, 2);
        assert_eq!(lam.try_mul(&lam.conj()).unwrap(), q(1, 0, 2));
    }

    #[test]
    fn hand_multiplication() {
        // (3 + √5)(2 − √5) = 1 − √5
        let x = q(3, 1, 5);
        let y = q(2, -1, 5);
        assert_eq!(x.try_mul(&y).unwrap(), q(1, -1, 5));
    }

    #[test]
    fn additive_identity() {
        let x = q(7, -3, 2);
        assert_eq!(QuadExt::zero(2).try_add(&x).unwrap(), x);
    }

    #[test]
    fn exact_signs() {
        assert_eq!(q(17, 12, 2).sign(), Ordering::Greater);
        // 17² = 289 > 288 = 144·2
        assert_eq!(q(17, -12, 2).sign(), Ordering::Greater);
        // 1 < 2
        assert_eq!(q(1, -1, 2).sign(), Ordering::Less);
        assert_eq!(QuadExt::zero(3).sign(), Ordering::Equal);
    }

    #[test]
    fn float_conversion() {
        let x = q(17, 12, 2).to_f64().unwrap();
        assert!((x - 33.97056274847714).abs() < 1e-12);
        assert_eq!(QuadExt::zero(2).to_f64().unwrap(), 0.0);
        let half = QuadExt::from_rational(Rational::new(1.into(), 2.into()), 2);
        assert_eq!(half.to_f64().unwrap(), 0.5);
    }

    #[test]
    fn float_overflow_is_an_error() {
        let big = q(10, 0, 2).powi(400).unwrap();
        assert!(matches!(big.to_f64(), Err(Error::FloatOverflow)));
    }

    #[test]
    fn division_by_zero() {
        let x = q(1, 1, 2);
        assert!(matches!(
            x.try_div(&QuadExt::zero(2)),
            Err(Error::DivisionByZero { disc: 2 })
        ));
    }

    #[test]
    fn mismatched_disc() {
        assert!(matches!(
            q(1, 1, 2).try_add(&q(1, 1, 3)),
            Err(Error::DiscMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn negative_powers() {
        let lam = q(17, 12, 2);
        let inv = lam.powi(-1).unwrap();
        assert_eq!(lam.try_mul(&inv).unwrap(), QuadExt::one(2));
        assert_eq!(inv, q(17, -12, 2)); // conjugate, since the norm is 1
    }

    #[test]
    fn squarefree_parts() {
        assert_eq!(squarefree_part(8), (2, 2));
        assert_eq!(squarefree_part(15), (1, 15));
        assert_eq!(squarefree_part(36), (6, 1));
        assert_eq!(squarefree_part(1), (1, 1));
        assert_eq!(squarefree_part(35), (1, 35));
    }

    #[test]
    fn tuple_round_trip() {
        let x = QuadExt::new(
            Rational::new(BigInt::from(-7), BigInt::from(3)),
            Rational::new(BigInt::from(22), BigInt::from(5)),
            6,
        );
        let t = x.to_tuple();
        assert_eq!(QuadExt::from_tuple(&t, 6).unwrap(), x);
    }
}
