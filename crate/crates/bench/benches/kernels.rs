//! Throughput of the per-step kernels: the two Helmholtz inverters, one
//! SSP-RK3 step of the regularized solver, one Godunov step of the reference.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use rblab_core::entropy::{step_entropy, EntropyRunConfig, NumericalFlux};
use rblab_core::grid::{Boundary, Grid1D, InitialDatum, Profile};
use rblab_core::regularized::{step_regularized, RegularizedRunConfig, ViscosityPolicy};
use rblab_core::{FluxModel, HelmholtzMethod, HelmholtzSolver};

fn helmholtz_solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("helmholtz_solve");
    for n in [1024usize, 4096, 16384] {
        let g = Grid1D::new(-20.0, 20.0, n, Boundary::TruncatedDirichlet).unwrap();
        let rhs: Vec<f64> = g.centers().map(|x| (-x * x).exp()).collect();
        let ell = 8.0 * g.dx();
        for (name, method) in [
            ("tridiagonal", HelmholtzMethod::Tridiagonal),
            ("green", HelmholtzMethod::GreenRecursive),
        ] {
            let solver = HelmholtzSolver::new(method, ell, &g);
            let mut out = vec![0.0; n];
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| solver.solve_into(black_box(&rhs), &mut out).unwrap());
            });
        }
    }
    group.finish();
}

fn solver_steps(c: &mut Criterion) {
    let n = 4096;
    let g = Grid1D::new(-20.0, 20.0, n, Boundary::TruncatedDirichlet).unwrap();
    let datum = InitialDatum::new(Profile::Gaussian { a: 1.0, sigma: 1.0 }).unwrap();
    let state = datum.sample(&g).unwrap();

    let rb_cfg = RegularizedRunConfig {
        flux: FluxModel::burgers(),
        grid: g.clone(),
        datum: datum.clone(),
        ell: 8.0 * g.dx(),
        viscosity: ViscosityPolicy::MeshScaled(1.0),
        t_end: 1.0,
        cfl: 0.45,
        snapshot_times: vec![1.0],
        helmholtz: HelmholtzMethod::Tridiagonal,
    };
    c.bench_function("regularized_ssprk3_step_4096", |b| {
        b.iter(|| step_regularized(&rb_cfg, black_box(&state)).unwrap());
    });

    let scl_cfg = EntropyRunConfig {
        flux: FluxModel::burgers(),
        grid: g,
        datum,
        t_end: 1.0,
        cfl: 0.45,
        viscosity: 0.0,
        snapshot_times: vec![1.0],
        numerical_flux: NumericalFlux::Godunov,
    };
    c.bench_function("godunov_step_4096", |b| {
        b.iter(|| step_entropy(&scl_cfg, black_box(&state)).unwrap());
    });
}

criterion_group!(benches, helmholtz_solvers, solver_steps);
criterion_main!(benches);
