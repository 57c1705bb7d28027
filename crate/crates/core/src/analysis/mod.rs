//! Diagnostics of a running flow and of its singular behaviour.

mod singularity;
mod trace;

pub use singularity::*;
pub use trace::{FactorRow, FlowTrace, TraceRow};

use serde::{Deserialize, Serialize};

use crate::flow::FlowRhs;
use crate::grid::{d1, extend, Endpoint, Parity, ProfileState, GHOSTS};
use crate::spec::BundleSpec;

/// Arclength derivative of `f_i²` at every cell.
fn f_sq_gradient(state: &ProfileState, i: usize) -> Vec<f64> {
    let u = extend(&state.f_sq(i), Parity::Even);
    let inv = 1.0 / state.dsigma();
    (0..state.cells()).map(|j| d1(&u, j + GHOSTS, inv) / state.a[j]).collect()
}

/// `max_{i,j} |q_i H − (F_i²)'|`; vanishes on profiles satisfying the
/// Kähler condition.
pub fn kahler_residual(spec: &BundleSpec, state: &ProfileState) -> f64 {
    let mut res: f64 = 0.0;
    for i in 0..state.factors() {
        let q = spec.qf(i);
        for (j, g) in f_sq_gradient(state, i).into_iter().enumerate() {
            res = res.max((q * state.h[j] - g).abs());
        }
    }
    res
}

/// `max |∂_t F_i² − (ΔF_i² − 2k_i)|`, with `∂_t F² = 2Fḟ` taken from `rhs`.
pub fn heat_residual(spec: &BundleSpec, state: &ProfileState, rhs: &FlowRhs) -> f64 {
    let mut res: f64 = 0.0;
    for i in 0..state.factors() {
        let lap = match crate::geometry::radial_laplacian_field(spec, state, &state.f_sq(i)) {
            Ok(l) => l,
            Err(_) => return f64::NAN,
        };
        for j in 0..state.cells() {
            let dt_f2 = 2.0 * state.f[i][j] * rhs.f[i][j];
            res = res.max((dt_f2 - lap[j] + 2.0 * spec.k[i]).abs());
        }
    }
    res
}

/// `sup |∇F_i²|`.
pub fn gradient_sup(state: &ProfileState, i: usize) -> f64 {
    f_sq_gradient(state, i).into_iter().fold(0.0, |m, g| m.max(g.abs()))
}

/// Li-Yau quantity `|∇F_i²|²/F_i²` at every cell, and its supremum.
pub fn li_yau_quantity(state: &ProfileState, i: usize) -> (Vec<f64>, f64) {
    let q: Vec<f64> = f_sq_gradient(state, i)
        .into_iter()
        .zip(&state.f[i])
        .map(|(g, f)| g * g / (f * f))
        .collect();
    let sup = q.iter().cloned().fold(0.0, f64::max);
    (q, sup)
}

/// Least-squares line `y ≈ slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Fitted against predicted evolution of `F_i²` at one endpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCheck {
    pub factor: usize,
    pub endpoint: Endpoint,
    pub fitted_slope: f64,
    pub expected_slope: f64,
    /// `|fitted − expected| / (2|q_i| + 2|k_i|)`.
    pub error: f64,
}

/// Endpoint law for Kähler profiles: `d/dt F_i²` is `−2(k_i − q_i)` at the
/// left end and `−2(k_i + q_i)` at the right end.
pub fn expected_boundary_slope(spec: &BundleSpec, i: usize, end: Endpoint) -> f64 {
    match end {
        Endpoint::Left => -2.0 * (spec.k[i] - spec.qf(i)),
        Endpoint::Right => -2.0 * (spec.k[i] + spec.qf(i)),
    }
}

/// Fits a line to each endpoint series in `trace` and compares it with
/// [`expected_boundary_slope`].
pub fn boundary_linear_check(spec: &BundleSpec, trace: &FlowTrace) -> Vec<BoundaryCheck> {
    let t = trace.times();
    let mut out = Vec::new();
    for i in 0..trace.factors {
        let scale = 2.0 * spec.qf(i).abs() + 2.0 * spec.k[i].abs();
        for end in [Endpoint::Left, Endpoint::Right] {
            let y: Vec<f64> = trace
                .rows
                .iter()
                .map(|r| match end {
                    Endpoint::Left => r.factors[i].f_sq_left,
                    Endpoint::Right => r.factors[i].f_sq_right,
                })
                .collect();
            let Some((slope, _)) = linear_fit(&t, &y) else { continue };
            let expected = expected_boundary_slope(spec, i, end);
            out.push(BoundaryCheck {
                factor: i,
                endpoint: end,
                fitted_slope: slope,
                expected_slope: expected,
                error: (slope - expected).abs() / scale,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::flow_rhs;
    use crate::initial::test_b;

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|x| 6.0 - 8.0 * x).collect();
        let (m, b) = linear_fit(&x, &y).unwrap();
        assert!((m + 8.0).abs() < 1e-12 && (b - 6.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn test_b_residuals_vanish() {
        let (spec, st) = test_b(400).unwrap();
        assert!(kahler_residual(&spec, &st) < 1e-8);
        let rhs = flow_rhs(&spec, &st).unwrap();
        assert!(heat_residual(&spec, &st, &rhs) < 1e-6);
    }

    #[test]
    fn li_yau_of_test_b() {
        // |∇F²|²/F² = 4 sin² s / (4 − 2 cos s), equal to 1 at s = π/2
        let (_, st) = test_b(401).unwrap();
        let (q, sup) = li_yau_quantity(&st, 0);
        assert!((q[200] - 1.0).abs() < 1e-8);
        assert!(sup >= q[200]);
    }

    #[test]
    fn expected_slopes() {
        let (spec, _) = test_b(16).unwrap();
        assert_eq!(expected_boundary_slope(&spec, 0, Endpoint::Left), 0.0);
        assert_eq!(expected_boundary_slope(&spec, 0, Endpoint::Right), -8.0);
    }
}
