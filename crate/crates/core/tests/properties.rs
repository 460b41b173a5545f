//! Property tests for the exact field arithmetic, serialization, and the
//! reduction dynamics.

use num_bigint::BigInt;
use proptest::prelude::*;

use movcone::dynamics::{self, Membership};
use movcone::exact::{QuadExt, Rational};
use movcone::model::{build_oguiso, ConeModel, DivisorClass};

fn rational() -> impl Strategy<Value = Rational> {
    (-200i64..=200, 1i64..=40).prop_map(|(n, d)| Rational::new(BigInt::from(n), BigInt::from(d)))
}

fn quad(d: u64) -> impl Strategy<Value = QuadExt> {
    (rational(), rational()).prop_map(move |(a, b)| QuadExt::new(a, b, d))
}

fn model() -> ConeModel {
    build_oguiso(3).unwrap()
}

proptest! {
    #[test]
    fn addition_commutes(x in quad(2), y in quad(2)) {
        prop_assert_eq!(x.try_add(&y).unwrap(), y.try_add(&x).unwrap());
    }

    #[test]
    fn multiplication_associates(x in quad(2), y in quad(2), z in quad(2)) {
        let lhs = x.try_mul(&y).unwrap().try_mul(&z).unwrap();
        let rhs = x.try_mul(&y.try_mul(&z).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn distributivity(x in quad(2), y in quad(2), z in quad(2)) {
        let lhs = x.try_mul(&y.try_add(&z).unwrap()).unwrap();
        let rhs = x.try_mul(&y).unwrap().try_add(&x.try_mul(&z).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn inverse_cancels(x in quad(2)) {
        prop_assume!(!x.is_zero());
        let inv = x.inverse().unwrap();
        prop_assert_eq!(x.try_mul(&inv).unwrap(), QuadExt::one(2));
    }

    #[test]
    fn conjugation_is_multiplicative(x in quad(2), y in quad(2)) {
        let lhs = x.try_mul(&y).unwrap().conj();
        let rhs = x.conj().try_mul(&y.conj()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn sign_agrees_with_float(x in quad(2)) {
        let f = x.to_f64().unwrap();
        if f.abs() > 1e-9 {
            prop_assert_eq!(x.is_positive(), f > 0.0);
            prop_assert_eq!(x.is_negative(), f < 0.0);
        }
    }

    #[test]
    fn tuple_round_trip(x in quad(2)) {
        let t = x.to_tuple();
        let back = QuadExt::from_tuple(&t, 2).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn l1_reduction_invariance(p in 1i64..=50, q in 1i64..=50, r in 1i64..=8) {
        // push an interior class out by a power of f, then reduce back
        let m = model();
        let interior = DivisorClass::from_int(p, q, m.disc);
        if matches!(
            dynamics::membership(&m, &interior).unwrap(),
            Membership::NefChamber | Membership::MovableInterior
        ) {
            let mut far = interior.clone();
            for _ in 0..r {
                far = dynamics::apply_mat(&m.f, &far);
            }
            let (l1_before, _) = dynamics::l_coords(&m, &far).unwrap();
            let red = dynamics::reduce_to_core(&m, &far).unwrap();
            let (l1_after, _) = dynamics::l_coords(&m, &red.reduced).unwrap();
            prop_assert_eq!(l1_before, l1_after);
            // reduction is idempotent
            let again = dynamics::reduce_to_core(&m, &red.reduced).unwrap();
            prop_assert!(again.word.is_empty());
            // replaying the word recovers the input
            let replay = dynamics::apply_word(&m, &red.word, &red.reduced);
            let rf = replay.to_floats().unwrap();
            let ff = far.to_floats().unwrap();
            prop_assert!((rf[0] - ff[0]).abs() <= 1e-9 * ff[0].abs().max(1.0));
            prop_assert!((rf[1] - ff[1]).abs() <= 1e-9 * ff[1].abs().max(1.0));
        }
    }

    #[test]
    fn reduction_terminates_far_out(k in -40i64..=40, p in 1i64..=20, q in 1i64..=20) {
        // L2 of the pushed class spans lambda^(-80)..lambda^80 here
        let m = model();
        let interior = DivisorClass::from_int(p, q, m.disc);
        if matches!(
            dynamics::membership(&m, &interior).unwrap(),
            Membership::NefChamber | Membership::MovableInterior
        ) {
            let fw = if k >= 0 {
                m.f.clone()
            } else {
                m.f.inverse_unimodular()
            };
            let mut far = interior;
            for _ in 0..k.abs() {
                far = dynamics::apply_mat(&fw, &far);
            }
            let red = dynamics::reduce_to_core(&m, &far).unwrap();
            prop_assert!(matches!(
                dynamics::membership(&m, &red.reduced).unwrap(),
                Membership::NefChamber
            ));
        }
    }
}

#[test]
fn model_json_round_trip_bit_exact() {
    for n in [3u32, 5, 8] {
        let m = build_oguiso(n).unwrap();
        let json = m.to_json();
        let doc: movcone::model::ModelDoc = serde_json::from_str(&json).unwrap();
        let m2 = movcone::model::build_custom(&doc).unwrap();
        assert_eq!(m2.to_json(), json);
    }
}
