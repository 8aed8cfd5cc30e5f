//! Compensated reductions. The bound checks compare functionals against
//! tolerances as tight as 1e-12 per step, so naive summation error (which
//! grows with the cell count) is not acceptable.

/// Kahan-compensated sum.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in xs {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Compensated running prefix sums of `xs`, each scaled by `scale`.
pub fn prefix_kahan(xs: &[f64], scale: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in xs {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        out.push(scale * sum);
    }
    out
}
