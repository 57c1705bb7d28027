//! Cell-centered profile grid, parity ghost cells and finite-difference stencils.
//!
//! The spatial parameter `σ ∈ (0, 1)` is sampled at cell centers
//! `σ_j = (j + 1/2) Δσ`, so no node sits on an endpoint where `h` vanishes.
//! Two ghost cells on each side are filled by reflection about the endpoint:
//! `h` is odd there while `a` and every `f_i` are even.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ghost cells per side, enough for the five-point stencils.
pub const GHOSTS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Left,
    Right,
}

/// Radial profiles `(a, h, f_1..f_r)` of the evolving metric
/// `a² dσ² + h² η⊗η + Σ f_i² π_i^* g_{N_i}` at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileState {
    pub t: f64,
    pub a: Vec<f64>,
    pub h: Vec<f64>,
    pub f: Vec<Vec<f64>>,
}

impl ProfileState {
    pub fn new(t: f64, a: Vec<f64>, h: Vec<f64>, f: Vec<Vec<f64>>) -> Result<Self> {
        let state = ProfileState { t, a, h, f };
        state.validate()?;
        Ok(state)
    }

    /// Checks lengths, finiteness and positivity of `a`, `h` and `f_i`.
    pub fn validate(&self) -> Result<()> {
        let m = self.a.len();
        if m < 2 * GHOSTS + 1 {
            return Err(Error::InvalidProfile(format!("need at least {} cells, got {m}", 2 * GHOSTS + 1)));
        }
        if self.h.len() != m {
            return Err(Error::LengthMismatch { expected: m, found: self.h.len() });
        }
        if self.f.is_empty() {
            return Err(Error::InvalidProfile("no conformal factors".into()));
        }
        for fi in &self.f {
            if fi.len() != m {
                return Err(Error::LengthMismatch { expected: m, found: fi.len() });
            }
        }
        if !self.t.is_finite() {
            return Err(Error::InvalidProfile("time is not finite".into()));
        }
        for j in 0..m {
            if !(self.a[j] > 0.0 && self.a[j].is_finite()) {
                return Err(Error::InvalidProfile(format!("a must be positive, a[{j}] = {}", self.a[j])));
            }
            if !(self.h[j] > 0.0 && self.h[j].is_finite()) {
                return Err(Error::InvalidProfile(format!("h must be positive, h[{j}] = {}", self.h[j])));
            }
            for (i, fi) in self.f.iter().enumerate() {
                if !(fi[j] > 0.0 && fi[j].is_finite()) {
                    return Err(Error::InvalidProfile(format!(
                        "f_{} must be positive, value {} at cell {j}",
                        i + 1,
                        fi[j]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.a.len()
    }

    pub fn factors(&self) -> usize {
        self.f.len()
    }

    pub fn dsigma(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    pub fn sigma_at(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dsigma()
    }

    pub fn sigma(&self) -> Vec<f64> {
        (0..self.cells()).map(|j| self.sigma_at(j)).collect()
    }

    /// `f_i²` sampled at cell centers.
    pub fn f_sq(&self, i: usize) -> Vec<f64> {
        self.f[i].iter().map(|f| f * f).collect()
    }

    pub(crate) fn check_cell(&self, cell: usize) -> Result<()> {
        if cell >= self.cells() {
            Err(Error::CellOutOfRange { cell, cells: self.cells() })
        } else {
            Ok(())
        }
    }

    /// Metric rescaling `g ↦ K g`: every profile is multiplied by `√K`.
    pub fn scaled(&self, factor: f64) -> ProfileState {
        let s = factor.sqrt();
        ProfileState {
            t: self.t,
            a: self.a.iter().map(|v| v * s).collect(),
            h: self.h.iter().map(|v| v * s).collect(),
            f: self.f.iter().map(|fi| fi.iter().map(|v| v * s).collect()).collect(),
        }
    }
}

/// Copies `values` into a buffer with [`GHOSTS`] reflected cells on each side.
pub fn extend(values: &[f64], parity: Parity) -> Vec<f64> {
    let m = values.len();
    let p = parity.sign();
    let mut out = Vec::with_capacity(m + 2 * GHOSTS);
    out.push(p * values[1]);
    out.push(p * values[0]);
    out.extend_from_slice(values);
    out.push(p * values[m - 1]);
    out.push(p * values[m - 2]);
    out
}

/// Fourth-order centered first derivative at extended index `k`.
#[inline]
pub(crate) fn d1(u: &[f64], k: usize, inv_d: f64) -> f64 {
    (u[k - 2] - 8.0 * u[k - 1] + 8.0 * u[k + 1] - u[k + 2]) * (inv_d / 12.0)
}

/// Fourth-order centered second derivative at extended index `k`.
#[inline]
pub(crate) fn d2(u: &[f64], k: usize, inv_d2: f64) -> f64 {
    (-u[k - 2] + 16.0 * u[k - 1] - 30.0 * u[k] + 16.0 * u[k + 1] - u[k + 2]) * (inv_d2 / 12.0)
}

/// First and second σ-derivatives of a sampled field with the given parity.
pub fn sigma_derivatives(values: &[f64], parity: Parity, dsigma: f64) -> (Vec<f64>, Vec<f64>) {
    let ext = extend(values, parity);
    let inv = 1.0 / dsigma;
    let inv2 = inv * inv;
    let first = (0..values.len()).map(|j| d1(&ext, j + GHOSTS, inv)).collect();
    let second = (0..values.len()).map(|j| d2(&ext, j + GHOSTS, inv2)).collect();
    (first, second)
}

/// Value at an endpoint of a field that is even about it, from the first two
/// cell centers. Exact for quadratics in the distance to the endpoint.
pub fn even_endpoint_value(values: &[f64], end: Endpoint) -> f64 {
    let m = values.len();
    let (u0, u1) = match end {
        Endpoint::Left => (values[0], values[1]),
        Endpoint::Right => (values[m - 1], values[m - 2]),
    };
    (9.0 * u0 - u1) / 8.0
}

/// Cumulative integral over σ of a sampled field, evaluated at every cell
/// center, together with the integral over the whole interval.
///
/// Uses cubic interpolation through ghost-extended samples, so the result is
/// fourth-order accurate for fields with the stated parity.
pub fn cumulative_integral(values: &[f64], parity: Parity, dsigma: f64) -> (Vec<f64>, f64) {
    let m = values.len();
    let u = extend(values, parity);
    let g = GHOSTS;
    // Weights of the cubic through centers at -3/2, -1/2, 1/2, 3/2 over [0, 1/2].
    const HALF: [f64; 4] = [-7.0 / 384.0, 53.0 / 384.0, 155.0 / 384.0, -9.0 / 384.0];
    let mut acc = dsigma * (HALF[0] * u[0] + HALF[1] * u[1] + HALF[2] * u[2] + HALF[3] * u[3]);
    let mut out = Vec::with_capacity(m);
    out.push(acc);
    for j in 0..m - 1 {
        let k = j + g;
        acc += dsigma / 24.0 * (-u[k - 1] + 13.0 * u[k] + 13.0 * u[k + 1] - u[k + 2]);
        out.push(acc);
    }
    let k = m - 1 + g;
    let tail = dsigma * (HALF[0] * u[k + 2] + HALF[1] * u[k + 1] + HALF[2] * u[k] + HALF[3] * u[k - 1]);
    (out, acc + tail)
}

/// Lagrange interpolant through `(nodes, values)` and its derivative at `x`.
pub fn lagrange(nodes: &[f64], values: &[f64], x: f64) -> (f64, f64) {
    let n = nodes.len();
    let mut value = 0.0;
    let mut deriv = 0.0;
    for i in 0..n {
        let mut denom = 1.0;
        let mut prod = 1.0;
        for j in 0..n {
            if j != i {
                denom *= nodes[i] - nodes[j];
                prod *= x - nodes[j];
            }
        }
        let mut dprod = 0.0;
        for l in 0..n {
            if l == i {
                continue;
            }
            let mut term = 1.0;
            for j in 0..n {
                if j != i && j != l {
                    term *= x - nodes[j];
                }
            }
            dprod += term;
        }
        value += values[i] * prod / denom;
        deriv += values[i] * dprod / denom;
    }
    (value, deriv)
}
