use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hetphase::heterodyne::{density_series, sample_with};
use hetphase::phase::{optimize_signal_split, PhaseDistribution};
use hetphase::{Execution, HeterodyneModel};
use num_complex::Complex64;

const STRATEGIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sampling(c: &mut Criterion) {
    let m = HeterodyneModel::from_parts(0.9, Complex64::new(5.0, 0.0), 1.0).unwrap();
    let mut g = c.benchmark_group("sample_1e6");
    for (name, exec) in STRATEGIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| sample_with(black_box(&m), 1_000_000, 1, exec).unwrap())
        });
    }
    g.finish();
}

fn series_grid(c: &mut Criterion) {
    let m = HeterodyneModel::from_parts(0.75, Complex64::new(1.0, 1.0), 1.0).unwrap();
    let side = 48;
    let d = 4.0 * m.variance().sqrt();
    let mut g = c.benchmark_group("density_series_grid");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                exec.map_indexed(side * side, |k| {
                    let z = m.w + Complex64::new(
                        -d + 2.0 * d * (k % side) as f64 / side as f64,
                        -d + 2.0 * d * (k / side) as f64 / side as f64,
                    );
                    density_series(z, &m, 1e-12).unwrap()
                })
            })
        });
    }
    g.finish();
}

fn phase_grid(c: &mut Criterion) {
    let m = HeterodyneModel::from_parts(0.5, Complex64::from_polar(3.0, 1.0), 0.9).unwrap();
    let mut g = c.benchmark_group("phase_dist_65536");
    for (name, exec) in STRATEGIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| PhaseDistribution::compute(black_box(&m), 65_536, exec).unwrap())
        });
    }
    g.finish();
}

fn sensitivity_sweep(c: &mut Criterion) {
    let budgets: Vec<f64> = (0..32).map(|k| 10f64.powf(1.0 + 3.0 * k as f64 / 31.0)).collect();
    let mut g = c.benchmark_group("sensitivity_sweep_32");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| exec.map_slice(&budgets, |&n| optimize_signal_split(n, 1.0).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, sampling, series_grid, phase_grid, sensitivity_sweep);
criterion_main!(benches);
