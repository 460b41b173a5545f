//! Library-level acceptance checks, shared by the integration test and the
//! CLI `suite acceptance` subcommand. Each check returns a pass flag plus a
//! human-readable detail line.

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics;
use crate::error::{Error, Result};
use crate::exact::{QuadExt, Rational};
use crate::hk::{self, HKModel};
use crate::kappa::{self, Schedule};
use crate::model::{build_oguiso, oguiso_intersection_oracle, DivisorClass, Mat2};
use crate::volume;

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn result(id: u32, name: &'static str, outcome: Result<String>) -> CriterionResult {
    match outcome {
        Ok(detail) => CriterionResult {
            id,
            name,
            pass: true,
            detail,
        },
        Err(e) => CriterionResult {
            id,
            name,
            pass: false,
            detail: e.to_string(),
        },
    }
}

fn check(cond: bool, msg: String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Parse(msg))
    }
}

/// 1. Dominant eigenvalue closed form for the product family, exact.
pub fn c1_lambda_closed_form() -> CriterionResult {
    result(1, "lambda closed form", (|| {
        for n in 3u32..=10 {
            let m = build_oguiso(n)?;
            let nn = i64::from(n);
            let (s, d0) = crate::exact::squarefree_part((nn * nn - 1) as u64);
            check(
                d0 == m.disc,
                format!("discriminant mismatch at N = {n}: {d0} vs {}", m.disc),
            )?;
            let expect = QuadExt::new(
                Rational::from_integer((2 * nn * nn - 1).into()),
                Rational::from_integer((2 * nn * s as i64).into()),
                d0,
            );
            check(
                m.lambda == expect,
                format!("lambda mismatch at N = {n}: {} vs {}", m.lambda, expect),
            )?;
        }
        Ok("exact match for N = 3..=10".into())
    })())
}

/// 2. Intersection numbers against the truncated-polynomial oracle.
pub fn c2_intersection_oracle() -> CriterionResult {
    result(2, "intersection numbers vs oracle", (|| {
        for n in 3u32..=10 {
            let m = build_oguiso(n)?;
            let oracle = oguiso_intersection_oracle(n);
            check(
                m.chambers[0].inters == oracle,
                format!("intersection mismatch at N = {n}"),
            )?;
        }
        Ok("closed form equals oracle for N = 3..=10".into())
    })())
}

/// 3. L-coordinate invariance under random short words in the generators.
pub fn c3_l_invariance(seed: u64) -> CriterionResult {
    result(3, "L-coordinate invariance", (|| {
        let m = build_oguiso(3)?;
        let lambda_sq = m.lambda.try_mul(&m.lambda)?;
        // involutions invert L2 up to a fixed unit; calibrate it once on
        // the ample class
        let amp = m.ample_class();
        let (_, l2_amp) = dynamics::l_coords(&m, &amp)?;
        let t_const = {
            let moved = apply_exact(&m.t1, &amp, m.disc)?;
            let (_, l2m) = dynamics::l_coords(&m, &moved)?;
            l2m.try_mul(&l2_amp)?
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
        for trial in 0..100 {
            // random rational class with positive eigen-coordinates
            let (cls, _) = random_interior_class(&m, &mut rng)?;
            let (l1, l2) = dynamics::l_coords(&m, &cls)?;
            // L1 is invariant under a random word in all three generators
            let len = rng.gen_range(1..=6usize);
            let mut mat = Mat2::identity();
            for _ in 0..len {
                let g = match rng.gen_range(0..3u8) {
                    0 => &m.t1,
                    1 => &m.t2,
                    _ => &m.f,
                };
                mat = g.mul(&mat);
            }
            let moved = apply_exact(&mat, &cls, m.disc)?;
            let (l1m, _) = dynamics::l_coords(&m, &moved)?;
            check(l1m == l1, format!("L1 not invariant on trial {trial}"))?;
            // f scales L2 by exactly lambda^2
            let fd = apply_exact(&m.f, &cls, m.disc)?;
            let (_, l2f) = dynamics::l_coords(&m, &fd)?;
            check(
                l2f == l2.try_mul(&lambda_sq)?,
                format!("L2 did not scale by lambda^2 under f on trial {trial}"),
            )?;
            // involutions invert L2 up to the same class-independent unit
            for t in [&m.t1, &m.t2] {
                let td = apply_exact(t, &cls, m.disc)?;
                let (_, l2t) = dynamics::l_coords(&m, &td)?;
                let prod = l2t.try_mul(&l2)?;
                check(
                    prod == t_const || prod == t_const.powi(-1)?,
                    format!("involution broke the L2 inversion law on trial {trial}"),
                )?;
            }
        }
        Ok("100 random words preserve L1; L2 scales by lambda^2 under f".into())
    })())
}

/// 4. Volume is word-invariant and degree-n homogeneous, exactly.
pub fn c4_volume_invariance(seed: u64) -> CriterionResult {
    result(4, "volume invariance and homogeneity", (|| {
        let m = build_oguiso(3)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(4));
        for trial in 0..50 {
            let (cls, _) = random_interior_class(&m, &mut rng)?;
            let base = volume::vol_movable(&m, &cls)?;
            let base = base.as_exact().cloned().expect("exact input");
            for gen in [&m.t1, &m.t2, &m.f] {
                let moved = apply_exact(gen, &cls, m.disc)?;
                let v = volume::vol_movable(&m, &moved)?;
                check(
                    v.as_exact() == Some(&base),
                    format!("volume changed under generator on trial {trial}"),
                )?;
            }
            for k in 2i64..=5 {
                let scaled = cls.scale_int(k);
                let v = volume::vol_movable(&m, &scaled)?;
                let kq = QuadExt::from_rational(Rational::from_integer(k.into()), m.disc);
                let expect = base.try_mul(&kq.powi(m.n as i64)?)?;
                check(
                    v.as_exact() == Some(&expect),
                    format!("homogeneity failed at k = {k} on trial {trial}"),
                )?;
            }
        }
        Ok("50 random classes: invariant under T1, T2, f; homogeneous up to k = 5".into())
    })())
}

fn boundary_fit(
    n: u32,
    which: u8,
    a: &DivisorClass,
) -> Result<kappa::ExponentFit> {
    let m = build_oguiso(n)?;
    let d = if which == 1 { m.r1_class() } else { m.r2_class() };
    let s = kappa::growth_series(&m, &d, a, Schedule::Dyadic { k_min: 5, k_max: 18 })?;
    kappa::fit_exponent(&s, Some(n as f64 / 2.0))
}

/// 5. Fitted boundary exponent is n/2 within 0.05 for N in 3..=6, both rays.
pub fn c5_boundary_exponent() -> CriterionResult {
    result(5, "boundary growth exponent n/2", (|| {
        let mut worst = 0.0f64;
        for n in 3u32..=6 {
            let m = build_oguiso(n)?;
            let a = m.ample_class();
            for which in [1u8, 2] {
                let fit = boundary_fit(n, which, &a)?;
                let claim = n as f64 / 2.0;
                let dev = (fit.l_hat - claim).abs();
                worst = worst.max(dev);
                check(
                    dev <= 0.05,
                    format!("N = {n}, R{which}: fitted {} vs claim {claim}", fit.l_hat),
                )?;
                let (lo, hi) = fit.envelope.expect("claim supplied");
                check(
                    lo > 0.0 && hi / lo < 1e3,
                    format!("N = {n}, R{which}: envelope band {} too wide", hi / lo),
                )?;
                let drift = fit.drift.expect("claim supplied");
                check(
                    (0.1..=10.0).contains(&drift),
                    format!("N = {n}, R{which}: drift {drift} out of range"),
                )?;
            }
        }
        Ok(format!("max |l_hat - n/2| = {worst:.4} over N = 3..=6, both rays"))
    })())
}

/// 6. Fitted exponent does not depend on the ample offset.
pub fn c6_ample_independence() -> CriterionResult {
    result(6, "independence of the ample class", (|| {
        let m = build_oguiso(3)?;
        let amples = [
            DivisorClass::from_int(1, 1, m.disc),
            DivisorClass::from_int(2, 3, m.disc),
            DivisorClass::from_int(5, 1, m.disc),
        ];
        let rep = kappa::independence_check(
            &m,
            &m.r1_class(),
            &amples,
            Schedule::Dyadic { k_min: 5, k_max: 18 },
            Some(1.5),
        )?;
        check(
            rep.max_pairwise_dev < 0.02,
            format!("pairwise deviation {} exceeds 0.02", rep.max_pairwise_dev),
        )?;
        Ok(format!(
            "three ample offsets, max pairwise deviation {:.5}",
            rep.max_pairwise_dev
        ))
    })())
}

/// 7. Fitted exponent is stable under positive multiples of D.
pub fn c7_multiples() -> CriterionResult {
    result(7, "stability under multiples", (|| {
        let m = build_oguiso(3)?;
        let rep = kappa::multiple_check(
            &m,
            &m.r1_class(),
            &[2, 3],
            &m.ample_class(),
            Schedule::Dyadic { k_min: 5, k_max: 18 },
            Some(1.5),
        )?;
        check(
            rep.max_dev < 0.02,
            format!("multiple deviation {} exceeds 0.02", rep.max_dev),
        )?;
        Ok(format!("k in {{2, 3}}, max deviation {:.5}", rep.max_dev))
    })())
}

/// 8. Floor-decomposition bounds hold exactly for random expressions.
pub fn c8_floor_bounds(seed: u64) -> CriterionResult {
    result(8, "floor decomposition bounds", (|| {
        let m = build_oguiso(3)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(8));
        for trial in 0..100 {
            let n_comp = rng.gen_range(1..=3usize);
            let mut comps = Vec::with_capacity(n_comp);
            for _ in 0..n_comp {
                // multiples of (1,1) always have positive eigen-coordinates
                let p = rng.gen_range(1..=6i64);
                let coeff = Rational::new(
                    BigInt::from(rng.gen_range(0..16i64)),
                    BigInt::from(rng.gen_range(1..=4i64)),
                );
                comps.push(volume::ExprComponent {
                    class: [BigInt::from(p), BigInt::from(p)],
                    coeff,
                });
            }
            let expr = volume::DivisorExpression::new(comps)?;
            if expr.total().iter().all(Zero::is_zero) {
                continue;
            }
            let consts = volume::floor_constants(&m, &expr)?;
            // smallest integer multiple of (1,1) that clears the hypothesis
            let mut k = 1i64;
            loop {
                let a = DivisorClass::from_int(k, k, m.disc);
                let [b1, b2] = match &a {
                    DivisorClass::Exact { u, v } => m.eigen_coords(u, v)?,
                    _ => unreachable!(),
                };
                if b1.try_sub(&consts.c2)?.is_positive()
                    && b2.try_sub(&consts.c2)?.is_positive()
                {
                    break;
                }
                k += 1;
                check(k < 10_000, format!("no ample multiple found on trial {trial}"))?;
            }
            let k = k + rng.gen_range(0..3i64);
            let ample = [
                Rational::from_integer(k.into()),
                Rational::from_integer(k.into()),
            ];
            let rep = volume::lemma44_check(&m, &expr, &ample)?;
            check(rep.pass, format!("bounds violated on trial {trial}"))?;
            check(
                rep.floor_in_movable,
                format!("floor class escaped the movable cone on trial {trial}"),
            )?;
        }
        Ok("100 random expressions satisfy the two-sided bounds".into())
    })())
}

/// 9. Boundary growth polynomial matches the Fujiki volume exactly.
pub fn c9_hk_growth(seed: u64) -> CriterionResult {
    result(9, "quadratic-form boundary growth", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(9));
        for trial in 0..20 {
            let extra = rng.gen_range(0..=2usize);
            let rho = 2 + extra;
            // hyperbolic plane plus negative diagonal directions
            let mut gram = vec![BigInt::zero(); rho * rho];
            gram[1] = BigInt::from(1);
            gram[rho] = BigInt::from(1);
            for i in 2..rho {
                gram[i * rho + i] = BigInt::from(-rng.gen_range(1..=4i64));
            }
            let c_x = Rational::new(
                BigInt::from(rng.gen_range(1..=12i64)),
                BigInt::from(rng.gen_range(1..=4i64)),
            );
            let d = rng.gen_range(1..=3u32);
            let model = HKModel::new(rho, gram, c_x, d)?;
            let mut dd = vec![Rational::zero(); rho];
            dd[0] = Rational::from_integer(1.into());
            let mut a = vec![Rational::zero(); rho];
            a[0] = Rational::from_integer(rng.gen_range(1..=5i64).into());
            a[1] = Rational::from_integer(rng.gen_range(1..=5i64).into());
            let g = hk::kappa_boundary(&model, &dd, &a)?;
            check(
                g.exponent == d,
                format!("trial {trial}: exponent {} != d = {d}", g.exponent),
            )?;
            for mm in 1i64..=100 {
                let mr = Rational::from_integer(mm.into());
                let cls: Vec<Rational> = dd
                    .iter()
                    .zip(&a)
                    .map(|(di, ai)| di * &mr + ai)
                    .collect();
                check(
                    g.eval(&mr) == model.vol_hk(&cls)?,
                    format!("trial {trial}: polynomial disagrees at m = {mm}"),
                )?;
            }
            // degenerate case: D = 0 makes the pairing vanish
            let zero = vec![Rational::zero(); rho];
            check(
                matches!(
                    hk::kappa_boundary(&model, &zero, &a),
                    Err(Error::PairingVanishes)
                ),
                format!("trial {trial}: degenerate case did not raise"),
            )?;
        }
        Ok("20 fixtures: exponent d, exact polynomial identity for m <= 100".into())
    })())
}

/// Random rational class interior to the movable cone: m1·R1 + m2·R2 with
/// random positive rational m1, m2 is irrational in general, so instead
/// draw random positive combinations of the nef generators pushed by a
/// random word.
fn random_interior_class(
    m: &crate::model::ConeModel,
    rng: &mut ChaCha8Rng,
) -> Result<(DivisorClass, usize)> {
    loop {
        let u = Rational::new(
            BigInt::from(rng.gen_range(1..=20i64)),
            BigInt::from(rng.gen_range(1..=5i64)),
        );
        let v = Rational::new(
            BigInt::from(rng.gen_range(1..=20i64)),
            BigInt::from(rng.gen_range(1..=5i64)),
        );
        let cls = DivisorClass::exact(
            QuadExt::from_rational(u, m.disc),
            QuadExt::from_rational(v, m.disc),
        );
        let (cu, cv) = match &cls {
            DivisorClass::Exact { u, v } => (u, v),
            _ => unreachable!(),
        };
        let [a1, a2] = m.eigen_coords(cu, cv)?;
        if a1.is_positive() && a2.is_positive() {
            // push into a random chamber
            let steps = rng.gen_range(0..=3usize);
            let mut mat = Mat2::identity();
            for _ in 0..steps {
                let g = if rng.gen_bool(0.5) { &m.t1 } else { &m.t2 };
                mat = g.mul(&mat);
            }
            return Ok((apply_exact(&mat, &cls, m.disc)?, steps));
        }
    }
}

fn apply_exact(mat: &Mat2, cls: &DivisorClass, _disc: u64) -> Result<DivisorClass> {
    if !cls.is_exact() {
        return Err(Error::Parse("exact class required".into()));
    }
    Ok(dynamics::apply_mat(mat, cls))
}

/// Runs criteria 1–9 (10, artifact determinism, lives in the CLI).
/// Randomized criteria derive their streams from `seed`; 0 is the
/// documented default.
pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    vec![
        c1_lambda_closed_form(),
        c2_intersection_oracle(),
        c3_l_invariance(seed),
        c4_volume_invariance(seed),
        c5_boundary_exponent(),
        c6_ample_independence(),
        c7_multiples(),
        c8_floor_bounds(seed),
        c9_hk_growth(seed),
    ]
}
