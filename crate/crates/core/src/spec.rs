//! Topological and geometric data of the bundle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discrete data of a circle bundle `P -> N_1 x ... x N_r` over a product of
/// Kähler-Einstein manifolds.
///
/// Each factor `N_i` has complex dimension `n[i]`, satisfies
/// `Ric(g_{N_i}) = k[i] g_{N_i}`, and the connection form twists by `q[i]`
/// (`dη = Σ q_i π_i^* ω_{N_i}`). `lambda[i]` bounds `|Rm_{N_i}|` in the
/// `g_{N_i}` norm and only enters the curvature proxy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleSpec {
    pub n: Vec<u32>,
    pub k: Vec<f64>,
    pub q: Vec<i64>,
    pub lambda: Vec<f64>,
}

impl BundleSpec {
    /// Builds a spec, defaulting each `lambda_i` to `|k_i|`.
    pub fn new(n: Vec<u32>, k: Vec<f64>, q: Vec<i64>, lambda: Option<Vec<f64>>) -> Result<Self> {
        let lambda = lambda.unwrap_or_else(|| k.iter().map(|k| k.abs()).collect());
        let spec = BundleSpec { n, k, q, lambda };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.n.len();
        if r == 0 {
            return Err(Error::InvalidSpec("at least one base factor is required".into()));
        }
        for (name, len) in [("k", self.k.len()), ("q", self.q.len()), ("lambda", self.lambda.len())] {
            if len != r {
                return Err(Error::InvalidSpec(format!(
                    "`{name}` has {len} entries but there are {r} base factors"
                )));
            }
        }
        for i in 0..r {
            if self.n[i] == 0 {
                return Err(Error::InvalidSpec(format!("n[{i}] must be at least 1")));
            }
            if self.q[i] == 0 {
                return Err(Error::InvalidSpec(format!("q[{i}] must be nonzero")));
            }
            if !self.k[i].is_finite() {
                return Err(Error::InvalidSpec(format!("k[{i}] must be finite")));
            }
            if !(self.lambda[i] >= 0.0 && self.lambda[i].is_finite()) {
                return Err(Error::InvalidSpec(format!("lambda[{i}] must be a finite nonnegative number")));
            }
        }
        Ok(())
    }

    /// Number of base factors `r`.
    pub fn factors(&self) -> usize {
        self.n.len()
    }

    /// Real dimension of the total space: interval, circle fiber and base.
    pub fn real_dimension(&self) -> u32 {
        2 + self.n.iter().map(|n| 2 * n).sum::<u32>()
    }

    pub(crate) fn qf(&self, i: usize) -> f64 {
        self.q[i] as f64
    }

    pub(crate) fn nf(&self, i: usize) -> f64 {
        self.n[i] as f64
    }
}
