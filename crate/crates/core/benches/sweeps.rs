//! Parallel vs sequential sweep comparison on the two heavy loops: the
//! sandwich-envelope grid and exact growth-series generation.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use movcone::kappa::{growth_series, Schedule};
use movcone::model::build_oguiso;
use movcone::volume::sandwich_envelope;

fn bench_envelope(c: &mut Criterion) {
    let model = build_oguiso(3).unwrap();
    let mut g = c.benchmark_group("envelope");
    for points in [1_000usize, 10_000] {
        #[cfg(feature = "parallel")]
        g.bench_with_input(BenchmarkId::new("parallel", points), &points, |b, &p| {
            b.iter(|| sandwich_envelope(&model, p).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("sequential", points), &points, |b, &p| {
            b.iter(|| sandwich_envelope_seq(&model, p))
        });
    }
    g.finish();
}

// sequential reference path: same grid, via the always-sequential sweep;
// at L1 = 1 the envelope ratio is just the volume
fn sandwich_envelope_seq(model: &movcone::model::ConeModel, points: usize) -> (f64, f64) {
    let lambda = model.lambda.to_f64().unwrap();
    let log_span = 2.0 * lambda.ln();
    let r1 = [model.r1[0].to_f64().unwrap(), model.r1[1].to_f64().unwrap()];
    let r2 = [model.r2[0].to_f64().unwrap(), model.r2[1].to_f64().unwrap()];
    let idx: Vec<usize> = (0..points).collect();
    let ratios = movcone::sweep::map_collect_seq(&idx, |&i| {
        let l2 = (log_span * i as f64 / (points - 1) as f64).exp();
        let s = l2.sqrt();
        let cls = movcone::model::DivisorClass::float(
            s * r1[0] + r2[0] / s,
            s * r1[1] + r2[1] / s,
        );
        movcone::volume::vol_movable(model, &cls)
            .unwrap()
            .to_f64()
            .unwrap()
    });
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0f64, f64::max);
    (lo, hi)
}

fn bench_growth(c: &mut Criterion) {
    let model = build_oguiso(3).unwrap();
    let d = model.r1_class();
    let a = model.ample_class();
    let sched = Schedule::Dyadic { k_min: 5, k_max: 14 };
    let mut g = c.benchmark_group("growth_series");
    g.sample_size(10);
    g.bench_function("dyadic_5_14", |b| {
        b.iter(|| growth_series(&model, &d, &a, sched).unwrap())
    });
    g.finish();
}

criterion_group!(benches, bench_envelope, bench_growth);
criterion_main!(benches);
