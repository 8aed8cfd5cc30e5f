//! Every functional the estimates control, plus the closed-form bounds they
//! are compared against.

use crate::flux::FluxModel;
use crate::grid::{centered_derivative, lp_norm, prefix_integral, Boundary, Grid1D, State};
use crate::helmholtz::{compute_p, HelmholtzSolver};
use crate::sums::kahan_sum;
use crate::trajectory::Trajectory;
use crate::RunError;

/// One instant's worth of measured functionals.
#[derive(Clone, Debug)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `(1/2)||u||_L2^2 + (1/2) ell^2 ||u_x||_L2^2`
    pub energy: f64,
    /// `sum |u_{i+1} - u_i|`
    pub tv: f64,
    /// `max_i (u_{i+1} - u_i)/dx`, the discrete one-sided slope
    pub sup_fwd_slope: f64,
    pub linf: f64,
    /// `dx sum ell^2 P`
    pub l2p_int: f64,
    /// `dx sum ell^2 |u_x| P`
    pub l2qp_int: f64,
    /// `|u|` at the two outermost cells
    pub boundary_residual: f64,
    /// `dx sum q^2` (kept for the bracket check; not serialized)
    pub grad_l2_sq: f64,
}

fn tv_and_sup_slope(u: &[f64], g: &Grid1D) -> (f64, f64) {
    let n = u.len();
    let mut sup = f64::NEG_INFINITY;
    let mut jumps = Vec::with_capacity(n);
    for i in 0..n - 1 {
        let d = u[i + 1] - u[i];
        jumps.push(d.abs());
        sup = sup.max(d);
    }
    if g.boundary() == Boundary::Periodic {
        let d = u[0] - u[n - 1];
        jumps.push(d.abs());
        sup = sup.max(d);
    }
    (kahan_sum(jumps), sup / g.dx())
}

/// Measures a state of the regularized equation; the Helmholtz solve for `P`
/// is done here.
pub fn record(
    s: &State,
    g: &Grid1D,
    m: &FluxModel,
    ell: f64,
    h: &HelmholtzSolver,
) -> Result<DiagnosticsRecord, RunError> {
    let p = compute_p(s, g, m, h)?;
    let q = centered_derivative(&s.u, g);
    let dx = g.dx();
    let grad_l2_sq = dx * kahan_sum(q.iter().map(|x| x * x));
    let (tv, sup_fwd_slope) = tv_and_sup_slope(&s.u, g);
    Ok(DiagnosticsRecord {
        t: s.t,
        energy: 0.5 * dx * kahan_sum(s.u.iter().map(|x| x * x)) + 0.5 * ell * ell * grad_l2_sq,
        tv,
        sup_fwd_slope,
        linf: s.u.iter().fold(0.0_f64, |a, x| a.max(x.abs())),
        l2p_int: ell * ell * dx * kahan_sum(p.iter().copied()),
        l2qp_int: ell * ell * dx * kahan_sum(q.iter().zip(&p).map(|(q, p)| q.abs() * p)),
        boundary_residual: s.u[0].abs().max(s.u[s.u.len() - 1].abs()),
        grad_l2_sq,
    })
}

/// Measures a state of the plain conservation law: no nonlocal term, energy
/// reduces to `(1/2)||u||_L2^2`.
pub fn record_conservation_law(s: &State, g: &Grid1D) -> DiagnosticsRecord {
    let dx = g.dx();
    let q = centered_derivative(&s.u, g);
    let (tv, sup_fwd_slope) = tv_and_sup_slope(&s.u, g);
    DiagnosticsRecord {
        t: s.t,
        energy: 0.5 * dx * kahan_sum(s.u.iter().map(|x| x * x)),
        tv,
        sup_fwd_slope,
        linf: s.u.iter().fold(0.0_f64, |a, x| a.max(x.abs())),
        l2p_int: 0.0,
        l2qp_int: 0.0,
        boundary_residual: s.u[0].abs().max(s.u[s.u.len() - 1].abs()),
        grad_l2_sq: dx * kahan_sum(q.iter().map(|x| x * x)),
    }
}

/// One-sided slope bound for the regularized equation: `1 / (c1 t / 2 + 1/M)`.
pub fn oleinik_bound(t: f64, c1: f64, m0: f64) -> f64 {
    1.0 / (0.5 * c1 * t + 1.0 / m0)
}

/// One-sided slope bound for the viscous conservation law, with the stronger
/// constant: `1 / (c1 t + 1/M)`.
pub fn oleinik_bound_conservation_law(t: f64, c1: f64, m0: f64) -> f64 {
    1.0 / (c1 * t + 1.0 / m0)
}

/// Variation growth bound: `tv0 (c1 M t / 2 + 1)^(2 c2 / c1)`.
pub fn tv_bound(t: f64, c1: f64, c2: f64, m0: f64, tv0: f64) -> f64 {
    tv0 * (0.5 * c1 * m0 * t + 1.0).powf(2.0 * c2 / c1)
}

/// Per-snapshot discrepancy between a regularized run and the reference:
/// the anti-derivative `zeta` of `w = u_reg - u_ref` in L1, the Lp norms of
/// `w` itself, and the constant of the interpolation inequality
/// `||w||_L1 <= 2 sqrt(||zeta||_L1 (TV_reg + TV_ref))`.
#[derive(Clone, Debug)]
pub struct FluctuationRecord {
    pub t: f64,
    pub zeta_l1: f64,
    /// `(p, ||w||_Lp)` for each requested integer p
    pub lp_err: Vec<(u32, f64)>,
    pub interp_const: f64,
}

/// Computes fluctuation records for two trajectories on the same grid with
/// matching snapshot times (the reference already restricted).
pub fn fluctuation(
    regularized: &Trajectory,
    reference: &Trajectory,
    g: &Grid1D,
    p_list: &[u32],
) -> Vec<FluctuationRecord> {
    assert_eq!(
        regularized.snapshots.len(),
        reference.snapshots.len(),
        "snapshot counts must match"
    );
    let dx = g.dx();
    regularized
        .snapshots
        .iter()
        .zip(&reference.snapshots)
        .map(|((t_a, sa), (t_b, sb))| {
            assert!(
                (t_a - t_b).abs() <= 1e-9 * (1.0 + t_a.abs()),
                "snapshot times diverge: {t_a} vs {t_b}"
            );
            let w: Vec<f64> = sa.u.iter().zip(&sb.u).map(|(a, b)| a - b).collect();
            let zeta = prefix_integral(&w, g);
            let zeta_l1 = lp_norm(&zeta, dx, 1.0);
            let lp_err: Vec<(u32, f64)> =
                p_list.iter().map(|&p| (p, lp_norm(&w, dx, p as f64))).collect();
            let (tv_a, _) = tv_and_sup_slope(&sa.u, g);
            let (tv_b, _) = tv_and_sup_slope(&sb.u, g);
            let l1 = lp_err
                .iter()
                .find(|(p, _)| *p == 1)
                .map(|(_, e)| *e)
                .unwrap_or_else(|| lp_norm(&w, dx, 1.0));
            let denom = (zeta_l1 * (tv_a + tv_b)).sqrt();
            let interp_const = if denom > 1e-300 { l1 / denom } else { 0.0 };
            FluctuationRecord {
                t: *t_a,
                zeta_l1,
                lp_err,
                interp_const,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{InitialDatum, Profile};
    use crate::helmholtz::HelmholtzMethod;
    use crate::trajectory::RunMeta;

    #[test]
    fn zero_state_gives_zero_record() {
        let g = Grid1D::new(-1.0, 1.0, 64, Boundary::Periodic).unwrap();
        let m = FluxModel::burgers();
        let h = HelmholtzSolver::new(HelmholtzMethod::Tridiagonal, 0.1, &g);
        let r = record(&State::zero(&g), &g, &m, 0.1, &h).unwrap();
        assert_eq!(r.energy, 0.0);
        assert_eq!(r.tv, 0.0);
        assert_eq!(r.linf, 0.0);
        assert_eq!(r.l2p_int, 0.0);
        assert_eq!(r.l2qp_int, 0.0);
        assert_eq!(r.boundary_residual, 0.0);
    }

    #[test]
    fn gaussian_energy_matches_closed_form_at_unit_ell() {
        // (1/2) int u0^2 + (1/2) int (u0')^2 = sqrt(pi/2) for A = sigma = ell = 1;
        // the centered derivative biases int q^2 by -(dx^2/3) int u'' ^2, so the
        // grid must be fine enough for 1e-5 absolute agreement
        let g = Grid1D::new(-20.0, 20.0, 16384, Boundary::TruncatedDirichlet).unwrap();
        let m = FluxModel::burgers();
        let h = HelmholtzSolver::new(HelmholtzMethod::Tridiagonal, 1.0, &g);
        let d = InitialDatum::new(Profile::Gaussian { a: 1.0, sigma: 1.0 }).unwrap();
        let s = d.sample(&g).unwrap();
        let r = record(&s, &g, &m, 1.0, &h).unwrap();
        let expected = (std::f64::consts::PI / 2.0).sqrt();
        assert!(
            (r.energy - expected).abs() < 1e-5,
            "energy = {}, expected {expected}",
            r.energy
        );
    }

    #[test]
    fn l2p_integral_sits_in_the_convexity_bracket() {
        let g = Grid1D::new(-20.0, 20.0, 2048, Boundary::Periodic).unwrap();
        let m = FluxModel::log_cosh(1.0).unwrap();
        let ell = 0.1;
        let h = HelmholtzSolver::new(HelmholtzMethod::Tridiagonal, ell, &g);
        let d = InitialDatum::new(Profile::Gaussian { a: 1.0, sigma: 1.0 }).unwrap();
        let s = d.sample(&g).unwrap();
        let r = record(&s, &g, &m, ell, &h).unwrap();
        let lower = 0.5 * m.c1() * ell * ell * r.grad_l2_sq;
        let upper = 0.5 * m.c2() * ell * ell * r.grad_l2_sq;
        assert!(r.l2p_int >= lower - 1e-8, "{} < {lower}", r.l2p_int);
        assert!(r.l2p_int <= upper + 1e-8, "{} > {upper}", r.l2p_int);
    }

    #[test]
    fn oleinik_bound_examples() {
        assert!((oleinik_bound(0.0, 1.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((oleinik_bound(2.0, 1.0, 1.0) - 0.5).abs() < 1e-15);
        // M -> inf: bound tends to 2/(c1 t)
        assert!((oleinik_bound(2.0, 1.0, f64::INFINITY) - 1.0).abs() < 1e-15);
        assert!((oleinik_bound_conservation_law(2.0, 1.0, f64::INFINITY) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tv_bound_examples() {
        assert!((tv_bound(0.0, 1.0, 1.0, 1.0, 2.0) - 2.0).abs() < 1e-15);
        // burgers: exponent 2, so 2 (2)^2 = 8
        assert!((tv_bound(2.0, 1.0, 1.0, 1.0, 2.0) - 8.0).abs() < 1e-12);
        // c2/c1 = 2: exponent 4, so 2 (2)^4 = 32
        assert!((tv_bound(2.0, 1.0, 2.0, 1.0, 2.0) - 32.0).abs() < 1e-12);
    }

    fn tiny_traj(_g: &Grid1D, values: Vec<Vec<f64>>) -> Trajectory {
        Trajectory {
            snapshots: values
                .into_iter()
                .enumerate()
                .map(|(i, u)| (i as f64, State { u, t: i as f64 }))
                .collect(),
            series: Vec::new(),
            singular_at: None,
            meta: RunMeta::default(),
        }
    }

    #[test]
    fn fluctuation_of_identical_trajectories_is_zero() {
        let g = Grid1D::new(0.0, 8.0, 16, Boundary::TruncatedDirichlet).unwrap();
        let vals = vec![vec![1.0; 16], vec![2.0; 16]];
        let a = tiny_traj(&g, vals.clone());
        let b = tiny_traj(&g, vals);
        for r in fluctuation(&a, &b, &g, &[1, 2, 4]) {
            assert_eq!(r.zeta_l1, 0.0);
            assert!(r.lp_err.iter().all(|(_, e)| *e == 0.0));
        }
    }

    #[test]
    fn zeta_of_three_point_difference() {
        // w = (0, 2, 0) with dx = 0.5: zeta = (0, 1, 1), ||zeta||_L1 = 1
        let z = crate::sums::prefix_kahan(&[0.0, 2.0, 0.0], 0.5);
        assert_eq!(z, vec![0.0, 1.0, 1.0]);
        assert!((lp_norm(&z, 0.5, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fluctuation_zeta_example() {
        let g = Grid1D::new(0.0, 8.0, 16, Boundary::TruncatedDirichlet).unwrap();
        let mut ua = vec![0.0; 16];
        ua[1] = 2.0;
        let mut ub = vec![0.0; 16];
        ub[2] = 2.0; // w = ua - ub = (0, 2, -2, 0, ...): zeta = (0, 1, 0, 0...)
        let a = tiny_traj(&g, vec![ua]);
        let b = tiny_traj(&g, vec![ub]);
        let r = &fluctuation(&a, &b, &g, &[1])[0];
        assert!((r.zeta_l1 - 0.5).abs() < 1e-15);
        assert!((r.lp_err[0].1 - 2.0).abs() < 1e-15);
    }
}
