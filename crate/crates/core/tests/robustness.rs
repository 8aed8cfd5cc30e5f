//! Slow invariants that back the solver design choices: stability of the
//! computed limits under the viscosity parameter, convergence of the entropy
//! reference under refinement, and sanity of the sweep aggregates.

use rblab_core::diagnostics::fluctuation;
use rblab_core::entropy::{run_entropy, EntropyRunConfig, NumericalFlux};
use rblab_core::grid::{lp_norm, restrict_block_mean, Boundary, Grid1D, InitialDatum, Profile, State};
use rblab_core::regularized::{run_regularized, RegularizedRunConfig, ViscosityPolicy};
use rblab_core::study::{run_rate_study, GridPolicy, StudyConfig};
use rblab_core::trajectory::Trajectory;
use rblab_core::{FluxModel, HelmholtzMethod};

fn datum() -> InitialDatum {
    InitialDatum::new(Profile::Gaussian { a: 1.0, sigma: 1.0 }).unwrap()
}

fn rb_final(n: usize, kappa: f64) -> Vec<f64> {
    let g = Grid1D::new(-20.0, 20.0, n, Boundary::TruncatedDirichlet).unwrap();
    let cfg = RegularizedRunConfig {
        flux: FluxModel::burgers(),
        grid: g,
        datum: datum(),
        ell: 0.1,
        viscosity: ViscosityPolicy::MeshScaled(kappa),
        t_end: 2.0,
        cfl: 0.45,
        snapshot_times: vec![2.0],
        helmholtz: HelmholtzMethod::Tridiagonal,
    };
    run_regularized(&cfg).unwrap().final_state().u.clone()
}

/// The computed limit object must not depend on the mesh-scaled viscosity
/// beyond an O(dx) reshuffle: eps in {dx/2, dx, 2dx} agree in L1 at O(dx),
/// and the disagreement halves with the mesh.
#[test]
fn regularized_solution_is_stable_in_the_viscosity_parameter() {
    let mut spreads = Vec::new();
    for n in [1600usize, 3200] {
        let dx = 40.0 / n as f64;
        let runs = [rb_final(n, 0.5), rb_final(n, 1.0), rb_final(n, 2.0)];
        let mut spread = 0.0_f64;
        for i in 0..3 {
            for j in i + 1..3 {
                let d: Vec<f64> = runs[i].iter().zip(&runs[j]).map(|(a, b)| a - b).collect();
                spread = spread.max(lp_norm(&d, dx, 1.0));
            }
        }
        // measured ~6.4 dx; 10 dx leaves headroom without hiding regressions
        assert!(spread <= 10.0 * dx, "n = {n}: spread = {spread:.3e}");
        spreads.push(spread);
    }
    let ratio = spreads[0] / spreads[1];
    assert!(ratio >= 1.6, "spread not O(dx): ratio = {ratio:.2}");
}

fn scl_final(n: usize, eps_in_dx: f64) -> Vec<f64> {
    let g = Grid1D::new(-20.0, 20.0, n, Boundary::TruncatedDirichlet).unwrap();
    let cfg = EntropyRunConfig {
        flux: FluxModel::burgers(),
        grid: g.clone(),
        datum: datum(),
        t_end: 2.0,
        cfl: 0.45,
        viscosity: eps_in_dx * g.dx(),
        snapshot_times: vec![2.0],
        numerical_flux: NumericalFlux::Godunov,
    };
    run_entropy(&cfg).unwrap().final_state().u.clone()
}

/// The inviscid Godunov limit agrees with its viscous perturbations at O(dx)
/// (with the usual logarithmic slack near the shock).
#[test]
fn entropy_solution_is_robust_under_vanishing_viscosity() {
    for n in [1600usize, 3200] {
        let dx = 40.0 / n as f64;
        let base = scl_final(n, 0.0);
        for (eps_in_dx, factor) in [(1.0, 15.0), (4.0, 50.0)] {
            let pert = scl_final(n, eps_in_dx);
            let d: Vec<f64> = base.iter().zip(&pert).map(|(a, b)| a - b).collect();
            let l1 = lp_norm(&d, dx, 1.0);
            assert!(
                l1 <= factor * dx,
                "n = {n}, eps = {eps_in_dx} dx: L1 = {l1:.3e} > {factor} dx"
            );
        }
    }
}

fn sup_l1_error(reference_refinement: usize) -> f64 {
    let n = 3200;
    let g = Grid1D::new(-20.0, 20.0, n, Boundary::TruncatedDirichlet).unwrap();
    let snapshots: Vec<f64> = (1..=8).map(|k| 0.25 * k as f64).collect();
    let rb_cfg = RegularizedRunConfig {
        flux: FluxModel::burgers(),
        grid: g.clone(),
        datum: datum(),
        ell: 0.1,
        viscosity: ViscosityPolicy::MeshScaled(1.0),
        t_end: 2.0,
        cfl: 0.45,
        snapshot_times: snapshots.clone(),
        helmholtz: HelmholtzMethod::Tridiagonal,
    };
    let rb = run_regularized(&rb_cfg).unwrap();
    let ref_cfg = EntropyRunConfig {
        flux: FluxModel::burgers(),
        grid: g.refined(reference_refinement).unwrap(),
        datum: datum(),
        t_end: 2.0,
        cfl: 0.45,
        viscosity: 0.0,
        snapshot_times: snapshots,
        numerical_flux: NumericalFlux::Godunov,
    };
    let reference = run_entropy(&ref_cfg).unwrap();
    let restricted = Trajectory {
        snapshots: reference
            .snapshots
            .iter()
            .map(|(t, s)| {
                (
                    *t,
                    State {
                        u: restrict_block_mean(&s.u, reference_refinement),
                        t: *t,
                    },
                )
            })
            .collect(),
        series: Vec::new(),
        singular_at: None,
        meta: Default::default(),
    };
    fluctuation(&rb, &restricted, &g, &[1])
        .iter()
        .map(|f| f.lp_err[0].1)
        .fold(0.0, f64::max)
}

/// Doubling the reference refinement moves the measured error by well under
/// 20 percent, so the reference's own error is subordinate.
#[test]
fn reference_is_converged_at_the_default_refinement() {
    let e4 = sup_l1_error(4);
    let e8 = sup_l1_error(8);
    let rel = (e4 - e8).abs() / e8;
    assert!(rel < 0.2, "err(4x) = {e4:.4e}, err(8x) = {e8:.4e}, rel diff = {rel:.3}");
}

/// Sweep sanity on a short ell list: errors shrink monotonically (10 percent
/// slack) for every measured p, and the interpolation-inequality constant
/// stays below its analytic ceiling of 2.
#[test]
fn sweep_errors_decay_monotonically() {
    let mut cfg = StudyConfig::default_study();
    cfg.ell_list = vec![0.2, 0.1, 0.05];
    cfg.grid_policy = GridPolicy::ScaledAuto;
    let result = run_rate_study(&cfg).unwrap();
    assert!(result.aborted.is_none());
    for p in &cfg.p_list {
        let errs: Vec<f64> = result
            .per_ell
            .iter()
            .map(|r| r.lp_err.iter().find(|(q, _)| q == p).unwrap().1)
            .collect();
        for w in errs.windows(2) {
            assert!(
                w[1] <= 1.1 * w[0],
                "err_l{p} rose from {:.4e} to {:.4e} as ell shrank",
                w[0],
                w[1]
            );
        }
    }
    for r in &result.per_ell {
        assert!(
            r.max_interp_const <= 2.0,
            "interpolation constant {} exceeds 2 at ell = {}",
            r.max_interp_const,
            r.ell
        );
    }
}
