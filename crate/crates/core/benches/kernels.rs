//! Hot-path benchmarks. Build twice to compare schedulers:
//!
//! ```text
//! cargo bench -p latin-ldpc
//! cargo bench -p latin-ldpc --no-default-features
//! ```
//!
//! Group names carry the active scheduler so both runs land side by side
//! in the criterion report.

use criterion::{criterion_group, criterion_main, Criterion};
use latin_ldpc::analysis::{census, count_cycles, girth, StartRegion};
use latin_ldpc::analysis::{column_distance, DEFAULT_CYCLE_BUDGET};
use latin_ldpc::convcodes::{build_base_family, materialize, ConstructionSpec, Family};
use latin_ldpc::simulate::{monte_carlo, MonteCarloConfig, Source};
use std::hint::black_box;

fn scheduler() -> &'static str {
    if cfg!(feature = "parallel") {
        "parallel"
    } else {
        "sequential"
    }
}

fn bench_girth(c: &mut Criterion) {
    let fam = ConstructionSpec::new(Family::TvTilde, 5, 3, 1)
        .unwrap()
        .build()
        .unwrap();
    let w = materialize(&fam, 20).unwrap();
    let mut g = c.benchmark_group(format!("girth/{}", scheduler()));
    g.bench_function("tilde-p5-mu3-m1-s20", |b| {
        b.iter(|| girth(black_box(&w.matrix), &StartRegion::All))
    });
    g.finish();
}

fn bench_cycles(c: &mut Criterion) {
    let fam = build_base_family(7, 4).unwrap();
    let w = materialize(&fam, 18).unwrap();
    let region = StartRegion::Cols(w.first_period_cols());
    let mut g = c.benchmark_group(format!("cycles/{}", scheduler()));
    g.bench_function("count6-p7-mu4-s18", |b| {
        b.iter(|| count_cycles(black_box(&w.matrix), 6, &region, DEFAULT_CYCLE_BUDGET).unwrap())
    });
    g.bench_function("census8-p7-mu4-s18", |b| {
        b.iter(|| census(black_box(&w.matrix), 8, &region, DEFAULT_CYCLE_BUDGET).unwrap())
    });
    g.finish();
}

fn bench_distance(c: &mut Criterion) {
    let fam = build_base_family(5, 3).unwrap();
    let mut g = c.benchmark_group(format!("distance/{}", scheduler()));
    g.bench_function("column-j4-p5-mu3", |b| {
        b.iter(|| column_distance(black_box(&fam), 4, Some(8)).unwrap())
    });
    g.finish();
}

fn bench_monte_carlo(c: &mut Criterion) {
    let fam = build_base_family(5, 3).unwrap();
    let w = materialize(&fam, 10).unwrap();
    let cfg = MonteCarloConfig {
        h: &w.matrix,
        source: Source::AllZero,
        crossovers: &[0.03],
        frames: 64,
        seed: 7,
        max_iters: 15,
    };
    let mut g = c.benchmark_group(format!("monte-carlo/{}", scheduler()));
    g.bench_function("p5-mu3-s10-64frames", |b| {
        b.iter(|| monte_carlo(black_box(&cfg)).unwrap())
    });
    g.finish();
}

criterion_group!(
    kernels,
    bench_girth,
    bench_cycles,
    bench_distance,
    bench_monte_carlo
);
criterion_main!(kernels);
