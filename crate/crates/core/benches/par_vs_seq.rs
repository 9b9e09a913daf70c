//! Criterion comparison of the data-parallel core against the sequential
//! fallback, on the workloads that dominate a verification run: the
//! divisor-path moment sum, the character-table pair sums, and the zero-swap
//! prediction integral.
//!
//! With the default `parallel` feature both schedules run (the sequential one
//! via the runtime switch); without it the two coincide.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lfmoments::{config::default_shifts, moment, par, recipe, MomentConfig};

fn bench_modes(c: &mut Criterion, name: &str, mut f: impl FnMut()) {
    let mut group = c.benchmark_group(name);
    group.sample_size(10);
    for (label, seq) in [("parallel", false), ("sequential", true)] {
        group.bench_with_input(BenchmarkId::from_parameter(label), &seq, |b, &seq| {
            par::set_force_sequential(seq);
            b.iter(&mut f);
            par::set_force_sequential(false);
        });
    }
    group.finish();
}

fn moment_sum(c: &mut Criterion) {
    let (a, b) = default_shifts(60.0, 1, 1);
    let cfg = MomentConfig::new(60.0, 1.3, a, b, 1, 1).unwrap();
    bench_modes(c, "compute_s_divisor/Q=60", || {
        criterion::black_box(moment::compute_s_divisor(&cfg));
    });
}

fn pair_sums(c: &mut Criterion) {
    bench_modes(c, "pair_sum_suite/q<=120", || {
        criterion::black_box(lfmoments::identities::pair_sum_suite(120, 8, 1, false));
    });
}

fn zero_swap(c: &mut Criterion) {
    let (a, b) = default_shifts(80.0, 1, 1);
    let cfg = MomentConfig::new(80.0, 1.2, a, b, 1, 1)
        .unwrap()
        .with_truncation(recipe::EulerTruncation::new(2000, 30, 0.4).unwrap())
        .with_quad_tol(1e-5);
    bench_modes(c, "compute_i0/Q=80", || {
        criterion::black_box(recipe::compute_i(0, 1, 1, &cfg).unwrap());
    });
}

criterion_group!(benches, moment_sum, pair_sums, zero_swap);
criterion_main!(benches);
