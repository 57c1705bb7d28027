use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::curvature_sup_proxy;
use crate::grid::{even_endpoint_value, Endpoint, ProfileState};
use crate::spec::BundleSpec;

use super::{gradient_sup, heat_residual, kahler_residual, li_yau_quantity};

/// Per-factor quantities recorded in a trace row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorRow {
    pub f_sq_min: f64,
    pub f_sq_max: f64,
    pub grad_sup: f64,
    pub liyau_sup: f64,
    pub f_sq_left: f64,
    pub f_sq_right: f64,
}

/// Diagnostics of one recorded step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub dt: f64,
    pub kappa: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub kahler_res: f64,
    pub heat_res: f64,
    pub arclength: f64,
    /// `∫ H ds`.
    pub fiber_integral: f64,
    pub factors: Vec<FactorRow>,
}

impl TraceRow {
    /// Measures `state`; `dt` is the step that produced it.
    pub fn measure(spec: &BundleSpec, state: &ProfileState, dt: f64) -> Result<TraceRow> {
        let kappa = curvature_sup_proxy(spec, state)?.value;
        let rhs = crate::flow::flow_rhs(spec, state)?;
        let (h_min, h_max) = min_max(&state.h);
        let (_, arclength) = crate::flow::arclength(state);
        let factors = (0..state.factors())
            .map(|i| {
                let f2 = state.f_sq(i);
                let (f_sq_min, f_sq_max) = min_max(&f2);
                FactorRow {
                    f_sq_min,
                    f_sq_max,
                    grad_sup: gradient_sup(state, i),
                    liyau_sup: li_yau_quantity(state, i).1,
                    f_sq_left: even_endpoint_value(&f2, Endpoint::Left),
                    f_sq_right: even_endpoint_value(&f2, Endpoint::Right),
                }
            })
            .collect();
        Ok(TraceRow {
            t: state.t,
            dt,
            kappa,
            h_min,
            h_max,
            kahler_res: kahler_residual(spec, state),
            heat_res: heat_residual(spec, state, &rhs),
            arclength,
            fiber_integral: crate::flow::fiber_integral(state),
            factors,
        })
    }

    pub fn min_f_sq(&self) -> f64 {
        self.factors.iter().map(|f| f.f_sq_min).fold(f64::INFINITY, f64::min)
    }
}

fn min_max(u: &[f64]) -> (f64, f64) {
    u.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Time series of diagnostics for one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub factors: usize,
    pub rows: Vec<TraceRow>,
}

impl FlowTrace {
    pub fn new(factors: usize) -> Self {
        FlowTrace { factors, rows: Vec::new() }
    }

    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    /// A named scalar series, as used in the CSV outputs
    /// (`kappa`, `h_max`, `f1sq_left`, `fiber_integral`, ...).
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        let pick: Box<dyn Fn(&TraceRow) -> f64> = match name {
            "t" => Box::new(|r| r.t),
            "dt" => Box::new(|r| r.dt),
            "kappa" => Box::new(|r| r.kappa),
            "h_min" => Box::new(|r| r.h_min),
            "h_max" => Box::new(|r| r.h_max),
            "h_max_sq" => Box::new(|r| r.h_max * r.h_max),
            "kahler_res" => Box::new(|r| r.kahler_res),
            "heat_res" => Box::new(|r| r.heat_res),
            "arclength" => Box::new(|r| r.arclength),
            "fiber_integral" => Box::new(|r| r.fiber_integral),
            _ => {
                let (i, field) = parse_factor_name(name)?;
                if i >= self.factors {
                    return None;
                }
                let get: fn(&FactorRow) -> f64 = match field {
                    "sq_min" => |f| f.f_sq_min,
                    "sq_max" => |f| f.f_sq_max,
                    "sq_left" => |f| f.f_sq_left,
                    "sq_right" => |f| f.f_sq_right,
                    "grad_sup" => |f| f.grad_sup,
                    "liyau_sup" => |f| f.liyau_sup,
                    _ => return None,
                };
                Box::new(move |r| get(&r.factors[i]))
            }
        };
        Some(self.rows.iter().map(|r| pick(r)).collect())
    }
}

/// Splits `f2sq_left` into `(1, "sq_left")` and `grad_sup_1` into `(0, "grad_sup")`.
fn parse_factor_name(name: &str) -> Option<(usize, &str)> {
    if let Some(rest) = name.strip_prefix('f') {
        let digits = rest.find(|c: char| !c.is_ascii_digit())?;
        let i: usize = rest[..digits].parse().ok()?;
        let field = &rest[digits..];
        return (i >= 1 && field.starts_with("sq_")).then(|| (i - 1, field));
    }
    for field in ["grad_sup", "liyau_sup"] {
        if let Some(idx) = name.strip_prefix(field).and_then(|r| r.strip_prefix('_')) {
            let i: usize = idx.parse().ok()?;
            return (i >= 1).then_some((i - 1, field));
        }
    }
    None
}
