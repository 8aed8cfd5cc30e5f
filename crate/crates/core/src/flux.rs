//! Uniformly convex flux functions with exact derivatives and convexity
//! metadata.
//!
//! Every flux carries its convexity bracket `0 < c1 <= f''(u) <= c2` and the
//! sonic point `f'(u_sonic) = 0`. Both constants enter the closed-form bounds
//! the diagnostics evaluate, so fluxes are closed-form only; tabulated fluxes
//! would lose the exact bracket.

use crate::error::ModelError;

#[derive(Clone, Debug)]
enum Kind {
    /// f(u) = u^2 / 2
    Burgers,
    /// f(u) = u^2 / 2 + a log cosh u
    LogCosh { a: f64 },
}

/// A uniformly convex flux together with its first three derivatives.
#[derive(Clone, Debug)]
pub struct FluxModel {
    kind: Kind,
    name: String,
    c1: f64,
    c2: f64,
    u_sonic: f64,
}

/// Numerically stable log cosh: `|u| + log(1 + exp(-2|u|)) - log 2`.
fn ln_cosh(u: f64) -> f64 {
    let a = u.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// sech^2(u) = 4 e^{-2|u|} / (1 + e^{-2|u|})^2, avoiding cosh overflow.
fn sech2(u: f64) -> f64 {
    let e = (-2.0 * u.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

impl FluxModel {
    /// Quadratic flux, `f(u) = u^2/2`, with `c1 = c2 = 1`.
    pub fn burgers() -> Self {
        FluxModel {
            kind: Kind::Burgers,
            name: "burgers".to_string(),
            c1: 1.0,
            c2: 1.0,
            u_sonic: 0.0,
        }
    }

    /// Non-quadratic flux `f(u) = u^2/2 + a log cosh u` with a strict
    /// convexity bracket `1 <= f'' <= 1 + a` and nonzero third derivative.
    pub fn log_cosh(a: f64) -> Result<Self, ModelError> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(ModelError::NonPositive {
                name: "a",
                value: a,
            });
        }
        Ok(FluxModel {
            kind: Kind::LogCosh { a },
            name: format!("logcosh:{a}"),
            c1: 1.0,
            c2: 1.0 + a,
            u_sonic: 0.0,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Lower bound of f'' on the whole line.
    pub fn c1(&self) -> f64 {
        self.c1
    }

    /// Upper bound of f'' on the whole line.
    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// The unique minimizer of f, where f' vanishes.
    pub fn u_sonic(&self) -> f64 {
        self.u_sonic
    }

    pub fn f(&self, u: f64) -> f64 {
        match self.kind {
            Kind::Burgers => 0.5 * u * u,
            Kind::LogCosh { a } => 0.5 * u * u + a * ln_cosh(u),
        }
    }

    /// f'(u)
    pub fn df(&self, u: f64) -> f64 {
        match self.kind {
            Kind::Burgers => u,
            Kind::LogCosh { a } => u + a * u.tanh(),
        }
    }

    /// f''(u)
    pub fn d2f(&self, u: f64) -> f64 {
        match self.kind {
            Kind::Burgers => 1.0,
            Kind::LogCosh { a } => 1.0 + a * sech2(u),
        }
    }

    /// f'''(u)
    pub fn d3f(&self, u: f64) -> f64 {
        match self.kind {
            Kind::Burgers => 0.0,
            Kind::LogCosh { a } => -2.0 * a * sech2(u) * u.tanh(),
        }
    }

    /// Inverts the strictly increasing map `f'` on `[lo, hi]`: returns `u`
    /// with `|f'(u) - s| <= 1e-12`, by Newton iteration safeguarded with
    /// bisection. Strict monotonicity of f' makes the root unique.
    pub fn inverse_df(&self, s: f64, lo: f64, hi: f64) -> Result<f64, ModelError> {
        const TOL: f64 = 1e-12;
        let (mut lo, mut hi) = (lo, hi);
        let (flo, fhi) = (self.df(lo) - s, self.df(hi) - s);
        if flo > TOL || fhi < -TOL {
            return Err(ModelError::SlopeOutOfRange {
                s,
                lo: self.df(lo),
                hi: self.df(hi),
            });
        }
        let mut u = 0.5 * (lo + hi);
        for _ in 0..200 {
            let g = self.df(u) - s;
            if g.abs() <= TOL {
                return Ok(u);
            }
            if g > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let newton = u - g / self.d2f(u);
            u = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Ok(u)
    }

    /// Samples f'' on `count` points of `[lo, hi]` and checks the convexity
    /// bracket `c1 <= f'' <= c2` up to roundoff.
    pub fn check_convexity(&self, lo: f64, hi: f64, count: usize) -> bool {
        let slack = 1e-12 * self.c2.max(1.0);
        (0..count).all(|i| {
            let u = lo + (hi - lo) * i as f64 / (count - 1) as f64;
            let d2 = self.d2f(u);
            d2 >= self.c1 - slack && d2 <= self.c2 + slack
        })
    }
}
