//! Uniform 1-D grids, discrete states, the initial-datum library, and the
//! discrete calculus primitives everything else is built from.

use crate::error::ModelError;
use crate::sums::{kahan_sum, prefix_kahan};

/// How the domain truncation treats the two ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Ghost cells hold zero; appropriate for data that decay inside the box.
    TruncatedDirichlet,
    /// Ghost cells wrap around.
    Periodic,
}

/// Uniform cell-centered grid on `[x_min, x_max]`.
#[derive(Clone, Debug)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
    boundary: Boundary,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize, boundary: Boundary) -> Result<Self, ModelError> {
        if n < 16 {
            return Err(ModelError::GridTooCoarse(n));
        }
        if !(x_max > x_min) {
            return Err(ModelError::EmptyDomain { x_min, x_max });
        }
        Ok(Grid1D {
            x_min,
            x_max,
            n,
            dx: (x_max - x_min) / n as f64,
            boundary,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Center of cell `i`: `x_min + (i + 1/2) dx`.
    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.center(i))
    }

    /// Same extent, `factor` times more cells.
    pub fn refined(&self, factor: usize) -> Result<Self, ModelError> {
        Grid1D::new(self.x_min, self.x_max, self.n * factor, self.boundary)
    }
}

/// Cell values of the unknown at one instant.
#[derive(Clone, Debug)]
pub struct State {
    pub u: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn zero(g: &Grid1D) -> Self {
        State {
            u: vec![0.0; g.len()],
            t: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|v| v.is_finite())
    }
}

/// Initial-datum shapes. All are centered at the origin and decay fast enough
/// that a truncated box captures them to below 1e-12.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    /// `A exp(-x^2 / sigma^2)`
    Gaussian { a: f64, sigma: f64 },
    /// `A sech^2(x / sigma)`
    Sech2 { a: f64, sigma: f64 },
    /// `A exp(-x^2 / sigma^2) cos(k x)`
    Packet { a: f64, sigma: f64, k: f64 },
}

/// A profile plus the analytic metadata the bounds need: the maximal initial
/// slope `M = sup u0'`, the total variation `tv0 = ||u0'||_L1`, the squared
/// H1 norm, and the radius beyond which `|u0| < 1e-12`.
#[derive(Clone, Debug)]
pub struct InitialDatum {
    profile: Profile,
    max_slope: f64,
    tv0: f64,
    h1_sq: f64,
    support_radius: f64,
}

const SUPPORT_CUTOFF: f64 = 1e-12;

impl InitialDatum {
    pub fn new(profile: Profile) -> Result<Self, ModelError> {
        let (a, sigma) = match profile {
            Profile::Gaussian { a, sigma }
            | Profile::Sech2 { a, sigma }
            | Profile::Packet { a, sigma, .. } => (a, sigma),
        };
        if !(a > 0.0) || !a.is_finite() {
            return Err(ModelError::NonPositive {
                name: "amplitude",
                value: a,
            });
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(ModelError::NonPositive {
                name: "sigma",
                value: sigma,
            });
        }

        let datum = match profile {
            Profile::Gaussian { a, sigma } => {
                // u0' = -(2Ax/sigma^2) e^{-x^2/sigma^2} peaks at x = -sigma/sqrt(2):
                //   M = (A sqrt(2)/sigma) e^{-1/2}
                // int |u0'| = 2 max u0 = 2A
                // int u0^2 = A^2 sigma sqrt(pi/2),  int (u0')^2 = (A^2/sigma) sqrt(pi/2)
                let half_pi_sqrt = (std::f64::consts::PI / 2.0).sqrt();
                InitialDatum {
                    profile,
                    max_slope: a * std::f64::consts::SQRT_2 / sigma * (-0.5_f64).exp(),
                    tv0: 2.0 * a,
                    h1_sq: a * a * half_pi_sqrt * (sigma + 1.0 / sigma),
                    support_radius: sigma * (a / SUPPORT_CUTOFF).ln().sqrt(),
                }
            }
            Profile::Sech2 { a, sigma } => {
                // u0' = -(2A/sigma) sech^2(s) tanh(s), s = x/sigma; the extremum
                // sits at tanh(s) = -1/sqrt(3), sech^2(s) = 2/3:
                //   M = 4A / (3 sqrt(3) sigma)
                // int u0^2 = (4/3) A^2 sigma, int (u0')^2 = (16/15) A^2 / sigma
                InitialDatum {
                    profile,
                    max_slope: 4.0 * a / (3.0 * 3.0_f64.sqrt() * sigma),
                    tv0: 2.0 * a,
                    h1_sq: (4.0 / 3.0) * a * a * sigma + (16.0 / 15.0) * a * a / sigma,
                    support_radius: sigma * (a / SUPPORT_CUTOFF).sqrt().acosh(),
                }
            }
            Profile::Packet { a, sigma, k } => {
                // int u0^2 and int (u0')^2 reduce to Gaussian moments:
                //   int u0^2    = (A^2 sigma / 2) sqrt(pi/2) (1 + E)
                //   int (u0')^2 = A^2 sqrt(pi/2) [ (1 + E)/(2 sigma) + k^2 sigma / 2 ]
                // with E = exp(-k^2 sigma^2 / 2). The slope extremum and the
                // variation of the oscillating profile have no closed forms;
                // both come from dense evaluation of the exact derivative.
                let e = (-0.5 * k * k * sigma * sigma).exp();
                let half_pi_sqrt = (std::f64::consts::PI / 2.0).sqrt();
                let h1_sq = 0.5 * a * a * sigma * half_pi_sqrt * (1.0 + e)
                    + a * a * half_pi_sqrt * ((1.0 + e) / (2.0 * sigma) + 0.5 * k * k * sigma);
                let support_radius = sigma * (a / SUPPORT_CUTOFF).ln().sqrt();
                let (max_slope, tv0) = packet_slope_metadata(a, sigma, k, support_radius);
                InitialDatum {
                    profile,
                    max_slope,
                    tv0,
                    h1_sq,
                    support_radius,
                }
            }
        };
        debug_assert!(datum.max_slope > 0.0);
        Ok(datum)
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    /// `M = sup u0'`, the largest initial up-slope.
    pub fn max_slope(&self) -> f64 {
        self.max_slope
    }

    /// `||u0'||_L1`, the initial total variation.
    pub fn tv0(&self) -> f64 {
        self.tv0
    }

    /// `||u0||_H1^2 = int u0^2 + int (u0')^2`.
    pub fn h1_sq(&self) -> f64 {
        self.h1_sq
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.profile {
            Profile::Gaussian { a, sigma } => a * (-(x / sigma) * (x / sigma)).exp(),
            Profile::Sech2 { a, sigma } => {
                let s = 1.0 / (x / sigma).cosh();
                a * s * s
            }
            Profile::Packet { a, sigma, k } => {
                a * (-(x / sigma) * (x / sigma)).exp() * (k * x).cos()
            }
        }
    }

    /// Exact derivative u0'.
    pub fn eval_slope(&self, x: f64) -> f64 {
        match self.profile {
            Profile::Gaussian { a, sigma } => {
                -2.0 * a * x / (sigma * sigma) * (-(x / sigma) * (x / sigma)).exp()
            }
            Profile::Sech2 { a, sigma } => {
                let s = x / sigma;
                let sech = 1.0 / s.cosh();
                -2.0 * a / sigma * sech * sech * s.tanh()
            }
            Profile::Packet { a, sigma, k } => {
                let g = (-(x / sigma) * (x / sigma)).exp();
                a * g * (-2.0 * x / (sigma * sigma) * (k * x).cos() - k * (k * x).sin())
            }
        }
    }

    /// Point-samples the profile at the cell centers of `g`. Errors if the
    /// support does not fit inside the box.
    pub fn sample(&self, g: &Grid1D) -> Result<State, ModelError> {
        if -self.support_radius < g.x_min() || self.support_radius > g.x_max() {
            return Err(ModelError::SupportTooWide {
                support: self.support_radius,
                x_min: g.x_min(),
                x_max: g.x_max(),
            });
        }
        Ok(State {
            u: g.centers().map(|x| self.eval(x)).collect(),
            t: 0.0,
        })
    }
}

/// Dense scan plus golden-section refinement for `sup u0'`, and a compensated
/// trapezoid for `||u0'||_L1`, used where no closed form exists.
fn packet_slope_metadata(a: f64, sigma: f64, k: f64, radius: f64) -> (f64, f64) {
    let slope = |x: f64| {
        let g = (-(x / sigma) * (x / sigma)).exp();
        a * g * (-2.0 * x / (sigma * sigma) * (k * x).cos() - k * (k * x).sin())
    };
    // at least ~100 samples per oscillation and per envelope width
    let n = 200_000;
    let h = 2.0 * radius / n as f64;
    let mut best_i = 0usize;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=n {
        let s = slope(-radius + i as f64 * h);
        if s > best {
            best = s;
            best_i = i;
        }
    }
    let (mut lo, mut hi) = (
        -radius + best_i.saturating_sub(1) as f64 * h,
        -radius + (best_i + 1).min(n) as f64 * h,
    );
    let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if slope(m1) > slope(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let max_slope = slope(0.5 * (lo + hi)).max(best);

    let m = 800_000;
    let hq = 2.0 * radius / m as f64;
    let tv = hq
        * (kahan_sum((1..m).map(|i| slope(-radius + i as f64 * hq).abs()))
            + 0.5 * (slope(-radius).abs() + slope(radius).abs()));
    (max_slope, tv)
}

/// Centered difference `(u_{i+1} - u_{i-1}) / (2 dx)` with ghost values taken
/// from the grid's boundary policy.
pub fn centered_derivative(u: &[f64], g: &Grid1D) -> Vec<f64> {
    let mut q = vec![0.0; u.len()];
    centered_derivative_into(u, g, &mut q);
    q
}

pub fn centered_derivative_into(u: &[f64], g: &Grid1D, q: &mut [f64]) {
    let n = u.len();
    assert_eq!(n, g.len(), "state length must match grid");
    assert_eq!(n, q.len());
    let inv2dx = 1.0 / (2.0 * g.dx());
    for i in 1..n - 1 {
        q[i] = (u[i + 1] - u[i - 1]) * inv2dx;
    }
    match g.boundary() {
        Boundary::TruncatedDirichlet => {
            q[0] = u[1] * inv2dx;
            q[n - 1] = -u[n - 2] * inv2dx;
        }
        Boundary::Periodic => {
            q[0] = (u[1] - u[n - 1]) * inv2dx;
            q[n - 1] = (u[0] - u[n - 2]) * inv2dx;
        }
    }
}

/// Left Riemann cumulative sum: `zeta_i = dx * sum_{j <= i} w_j`, the discrete
/// anti-derivative from the left end of the box.
pub fn prefix_integral(w: &[f64], g: &Grid1D) -> Vec<f64> {
    prefix_kahan(w, g.dx())
}

/// `(dx sum |v_i|^p)^(1/p)`, or `max |v_i|` for `p = inf`. Requires `p >= 1`.
pub fn lp_norm(v: &[f64], dx: f64, p: f64) -> f64 {
    assert!(p >= 1.0, "lp_norm requires p >= 1, got {p}");
    if p.is_infinite() {
        return v.iter().fold(0.0, |m, x| m.max(x.abs()));
    }
    if p == 1.0 {
        return dx * kahan_sum(v.iter().map(|x| x.abs()));
    }
    if p == 2.0 {
        return (dx * kahan_sum(v.iter().map(|x| x * x))).sqrt();
    }
    (dx * kahan_sum(v.iter().map(|x| x.abs().powf(p)))).powf(1.0 / p)
}

/// Conservative restriction: each coarse value is the mean of its block of
/// `factor` fine values.
pub fn restrict_block_mean(fine: &[f64], factor: usize) -> Vec<f64> {
    assert!(factor >= 1 && fine.len() % factor == 0);
    let inv = 1.0 / factor as f64;
    fine.chunks_exact(factor)
        .map(|block| block.iter().sum::<f64>() * inv)
        .collect()
}
