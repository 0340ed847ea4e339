//! Hot paths: the quantile distance, one implicit step, the dissipation
//! quadratures, and mollified map evaluation.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use wassdiff::counterexample::{dissipation_integrals, mollify, CounterexampleSpec};
use wassdiff::solver::{self, DtControl, SolverState};
use wassdiff::{profiles, transport, Nonlinearity, RadialDensity, RadialGrid, SolverConfig};

fn w2_uniform_balls(c: &mut Criterion) {
    let grid = RadialGrid::uniform(3, 1.2, 4096).unwrap();
    let u = RadialDensity::uniform_shell(grid.clone(), 0.0, 0.5, 1.0).unwrap();
    let v = RadialDensity::uniform_shell(grid, 0.0, 1.0, 1.0).unwrap();
    c.bench_function("w2_sq_n4096_bins16384", |b| {
        b.iter(|| transport::w2_squared(black_box(&u), black_box(&v), 16384).unwrap())
    });
}

fn implicit_step(c: &mut Criterion) {
    let grid = RadialGrid::uniform(3, 3.0, 2000).unwrap();
    let u = profiles::barenblatt_density(grid, 2.0, 0.1, 1.0).unwrap();
    let f = Nonlinearity::power(2.0).unwrap();
    let cfg = SolverConfig::implicit(1.0).with_dt(DtControl::Fixed(1e-3));
    let state = SolverState::new(u);
    c.bench_function("implicit_step_n2000", |b| {
        b.iter(|| solver::step_with_dt(black_box(&state), &f, &cfg, 1e-3).unwrap())
    });
}

fn dissipation_quadratures(c: &mut Criterion) {
    let spec = CounterexampleSpec::new(3, 1.0, 1.0, 0.1, 1e-3, 1.5, 1024).unwrap();
    let f = Nonlinearity::power(0.4).unwrap();
    c.bench_function("dissipation_integrals_flagship", |b| {
        b.iter(|| dissipation_integrals(black_box(&spec), &f).unwrap())
    });
}

fn mollified_map_eval(c: &mut Criterion) {
    let spec = CounterexampleSpec::new(3, 1.0, 1.0, 0.1, 1e-3, 1.5, 1024).unwrap();
    let map = mollify(&spec).unwrap();
    let points: Vec<f64> = (0..100_000).map(|i| 1.5 * i as f64 / 99_999.0).collect();
    c.bench_function("mollified_map_eval_100k", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for &z in &points {
                acc += map.eval(black_box(z));
            }
            acc
        })
    });
}

criterion_group!(
    benches,
    w2_uniform_balls,
    implicit_step,
    dissipation_quadratures,
    mollified_map_eval
);
criterion_main!(benches);
