//! Initial profiles: templates, smooth-closure validation and presets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cumulative_integral, lagrange, Endpoint, Parity, ProfileState};
use crate::spec::BundleSpec;

/// Shape of the fiber length `H(s)` on `[0, length]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HTemplate {
    /// `H(s) = (L/π) sin(πs/L)`; satisfies every closing condition.
    Sinusoidal,
    /// `H(s) = L·(x − 2x³ + x⁴)` with `x = s/L`; closes to second order only.
    PolynomialBump,
    /// `H` at the cell centers.
    Sampled { values: Vec<f64> },
}

/// Shape of `F_i²(s)` for general (non-Kähler) profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FTemplate {
    Constant { value: f64 },
    /// `F² = mean + amplitude·cos(πs/L)`.
    Cosine { mean: f64, amplitude: f64 },
    /// `F² = Σ c_k s^k`.
    Polynomial { coefficients: Vec<f64> },
    /// `F²` at the cell centers.
    Sampled { values: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    Kahler,
    General,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileTemplate {
    pub length: f64,
    pub h: HTemplate,
    /// `F_i²` at the left endpoint (Kähler mode).
    #[serde(default)]
    pub f0: Vec<f64>,
    pub mode: ProfileMode,
    /// One template per factor (general mode).
    #[serde(default)]
    pub f_templates: Vec<FTemplate>,
}

fn analytic_h(tmpl: &HTemplate, length: f64) -> Option<Box<dyn Fn(f64) -> f64>> {
    match tmpl {
        HTemplate::Sinusoidal => Some(Box::new(move |s: f64| length / PI * (PI * s / length).sin())),
        HTemplate::PolynomialBump => Some(Box::new(move |s: f64| {
            let x = s / length;
            length * (x - 2.0 * x.powi(3) + x.powi(4))
        })),
        HTemplate::Sampled { .. } => None,
    }
}

// Five-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
    0.236_926_885_056_189_08,
];

fn gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    GL_NODES.iter().zip(GL_WEIGHTS).map(|(x, w)| w * f(c + r * x)).sum::<f64>() * r
}

/// Samples of `H` at cell centers and `∫_0^{s_j} H` for each center, plus the
/// integral over the whole interval.
fn sample_h(tmpl: &ProfileTemplate, cells: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let length = tmpl.length;
    let ds = length / cells as f64;
    let centers: Vec<f64> = (0..cells).map(|j| (j as f64 + 0.5) * ds).collect();
    match analytic_h(&tmpl.h, length) {
        Some(h) => {
            let values: Vec<f64> = centers.iter().map(|&s| h(s)).collect();
            let mut acc = 0.0;
            let mut prev = 0.0;
            let mut cumulative = Vec::with_capacity(cells);
            for &s in &centers {
                acc += gauss(&*h, prev, s);
                cumulative.push(acc);
                prev = s;
            }
            let total = acc + gauss(&*h, prev, length);
            Ok((values, cumulative, total))
        }
        None => {
            let HTemplate::Sampled { values } = &tmpl.h else { unreachable!() };
            if values.len() != cells {
                return Err(Error::InvalidTemplate(format!(
                    "sampled H has {} values for {cells} cells",
                    values.len()
                )));
            }
            let (c, total) = cumulative_integral(values, Parity::Odd, 1.0 / cells as f64);
            Ok((values.clone(), c.iter().map(|v| v * length).collect(), total * length))
        }
    }
}

fn check_template(tmpl: &ProfileTemplate, cells: usize) -> Result<()> {
    if !(tmpl.length > 0.0 && tmpl.length.is_finite()) {
        return Err(Error::InvalidTemplate("interval length must be positive".into()));
    }
    if cells < 8 {
        return Err(Error::InvalidTemplate(format!("at least 8 cells are required, got {cells}")));
    }
    Ok(())
}

/// Builds a Kähler profile: `F_i²(s) = f0_i + q_i ∫_0^s H`, in the uniform
/// arclength gauge `a ≡ length`.
pub fn build_kahler_profile(spec: &BundleSpec, tmpl: &ProfileTemplate, cells: usize) -> Result<ProfileState> {
    check_template(tmpl, cells)?;
    if tmpl.mode != ProfileMode::Kahler {
        return Err(Error::InvalidTemplate("template is not in kahler mode".into()));
    }
    let r = spec.factors();
    if tmpl.f0.len() != r {
        return Err(Error::InvalidTemplate(format!("f0 has {} entries for {r} factors", tmpl.f0.len())));
    }
    let (h, integral, total) = sample_h(tmpl, cells)?;
    let ds = tmpl.length / cells as f64;
    let mut f = Vec::with_capacity(r);
    for i in 0..r {
        let q = spec.qf(i);
        let mut fi = Vec::with_capacity(cells);
        for (j, int) in integral.iter().enumerate() {
            let f2 = tmpl.f0[i] + q * int;
            if !(f2 > 0.0) {
                return Err(Error::Positivity { factor: i + 1, s: (j as f64 + 0.5) * ds, value: f2 });
            }
            fi.push(f2.sqrt());
        }
        for (s, f2) in [(0.0, tmpl.f0[i]), (tmpl.length, tmpl.f0[i] + q * total)] {
            if !(f2 > 0.0) {
                return Err(Error::Positivity { factor: i + 1, s, value: f2 });
            }
        }
        f.push(fi);
    }
    ProfileState::new(0.0, vec![tmpl.length; cells], h, f)
}

/// Builds a profile from independent `H` and `F_i²` templates and checks that
/// it closes smoothly at both ends.
pub fn build_general_profile(spec: &BundleSpec, tmpl: &ProfileTemplate, cells: usize) -> Result<ProfileState> {
    check_template(tmpl, cells)?;
    if tmpl.mode != ProfileMode::General {
        return Err(Error::InvalidTemplate("template is not in general mode".into()));
    }
    let r = spec.factors();
    if tmpl.f_templates.len() != r {
        return Err(Error::InvalidTemplate(format!(
            "{} F templates for {r} factors",
            tmpl.f_templates.len()
        )));
    }
    let (h, _, _) = sample_h(tmpl, cells)?;
    let length = tmpl.length;
    let ds = length / cells as f64;
    let mut f = Vec::with_capacity(r);
    for (i, ft) in tmpl.f_templates.iter().enumerate() {
        let f_sq: Vec<f64> = match ft {
            FTemplate::Sampled { values } => {
                if values.len() != cells {
                    return Err(Error::InvalidTemplate(format!(
                        "sampled F_{}² has {} values for {cells} cells",
                        i + 1,
                        values.len()
                    )));
                }
                values.clone()
            }
            _ => (0..cells)
                .map(|j| {
                    let s = (j as f64 + 0.5) * ds;
                    match ft {
                        FTemplate::Constant { value } => *value,
                        FTemplate::Cosine { mean, amplitude } => mean + amplitude * (PI * s / length).cos(),
                        FTemplate::Polynomial { coefficients } => {
                            coefficients.iter().rev().fold(0.0, |acc, c| acc * s + c)
                        }
                        FTemplate::Sampled { .. } => unreachable!(),
                    }
                })
                .collect(),
        };
        if let Some(j) = f_sq.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Positivity { factor: i + 1, s: (j as f64 + 0.5) * ds, value: f_sq[j] });
        }
        f.push(f_sq.iter().map(|v| v.sqrt()).collect());
    }
    let state = ProfileState::new(0.0, vec![length; cells], h, f)?;
    let report = validate_closing(&state, ClosingReport::DEFAULT_TOLERANCE);
    if !report.passed() {
        return Err(Error::Closing(report.summary()));
    }
    Ok(state)
}

/// One closing-condition check at one endpoint.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosingCheck {
    pub condition: String,
    pub endpoint: Endpoint,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosingReport {
    pub tolerance: f64,
    pub checks: Vec<ClosingCheck>,
}

impl ClosingReport {
    pub const DEFAULT_TOLERANCE: f64 = 1e-3;

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn summary(&self) -> String {
        let failed: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} at {:?} end (residual {:.3e})", c.condition, c.endpoint, c.residual))
            .collect();
        if failed.is_empty() {
            "all closing conditions hold".into()
        } else {
            failed.join("; ")
        }
    }
}

/// Arclength at the cell centers and the total length.
pub(crate) fn cell_arclength(state: &ProfileState) -> (Vec<f64>, f64) {
    cumulative_integral(&state.a, Parity::Even, state.dsigma())
}

/// Checks the smooth-closure conditions at both ends by one-sided polynomial
/// extrapolation through the first five cells: `H → 0`, `H' → ±1`, `F_i' → 0`.
///
/// `H` is measured relative to the total arclength; the slopes are
/// dimensionless already.
pub fn validate_closing(state: &ProfileState, tolerance: f64) -> ClosingReport {
    const STENCIL: usize = 5;
    let m = state.cells();
    let (s, total) = cell_arclength(state);
    let mut checks = Vec::new();
    let mut push = |condition: String, endpoint: Endpoint, residual: f64| {
        checks.push(ClosingCheck {
            condition,
            endpoint,
            residual,
            pass: residual <= tolerance,
        });
    };
    for end in [Endpoint::Left, Endpoint::Right] {
        let idx: Vec<usize> = match end {
            Endpoint::Left => (0..STENCIL).collect(),
            Endpoint::Right => (m - STENCIL..m).collect(),
        };
        let (x, slope) = match end {
            Endpoint::Left => (0.0, 1.0),
            Endpoint::Right => (total, -1.0),
        };
        let nodes: Vec<f64> = idx.iter().map(|&j| s[j]).collect();
        let hv: Vec<f64> = idx.iter().map(|&j| state.h[j]).collect();
        let (h_end, dh_end) = lagrange(&nodes, &hv, x);
        push("H vanishes".into(), end, (h_end / total).abs());
        push(format!("H' = {slope:+}"), end, (dh_end - slope).abs());
        for (i, fi) in state.f.iter().enumerate() {
            let fv: Vec<f64> = idx.iter().map(|&j| fi[j]).collect();
            let (_, df_end) = lagrange(&nodes, &fv, x);
            push(format!("F_{}' = 0", i + 1), end, df_end.abs());
        }
    }
    ClosingReport { tolerance, checks }
}

/// The canonical test instance: one factor with `n = 1`, `k = 2`, `q = 2`,
/// `λ = 1`, `H = sin s` and `F² = 4 − 2 cos s` on `[0, π]`.
pub fn test_b(cells: usize) -> Result<(BundleSpec, ProfileState)> {
    let spec = BundleSpec::new(vec![1], vec![2.0], vec![2], Some(vec![1.0]))?;
    let tmpl = ProfileTemplate {
        length: PI,
        h: HTemplate::Sinusoidal,
        f0: vec![2.0],
        mode: ProfileMode::Kahler,
        f_templates: vec![],
    };
    let state = build_kahler_profile(&spec, &tmpl, cells)?;
    Ok((spec, state))
}

/// Parameters of the Calabi-symmetric preset on `S^{2n-1}/Z_k → CP^{n-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalabiParams {
    pub n: u32,
    pub k_lens: i64,
    /// Einstein constant of the base; defaults to `n` (`Ric(ω_FS) = n ω_FS`
    /// for `ω_FS = i∂∂̄ log|z|²` on `CP^{n-1}`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub einstein: Option<f64>,
    /// `F²` at the left endpoint; defaults to `2(k + k_lens)` so that the
    /// fibers collapse before either section contracts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl CalabiParams {
    pub fn new(n: u32, k_lens: i64) -> Self {
        CalabiParams { n, k_lens, einstein: None, f0: None, lambda: None }
    }

    pub fn einstein_constant(&self) -> f64 {
        self.einstein.unwrap_or(self.n as f64)
    }
}

/// Calabi-symmetric data: `r = 1`, `n_1 = n − 1`, `q_1 = k_lens`, with a
/// sinusoidal Kähler profile on `[0, π]`.
pub fn calabi_preset(params: &CalabiParams, cells: usize) -> Result<(BundleSpec, ProfileState)> {
    if params.n < 2 {
        return Err(Error::InvalidSpec(format!("Calabi preset needs n >= 2, got {}", params.n)));
    }
    if params.k_lens < 1 {
        return Err(Error::InvalidSpec(format!("lens order must be positive, got {}", params.k_lens)));
    }
    let k = params.einstein_constant();
    let spec = BundleSpec::new(vec![params.n - 1], vec![k], vec![params.k_lens], params.lambda.map(|l| vec![l]))?;
    let f0 = params.f0.unwrap_or(2.0 * (k.abs() + params.k_lens as f64));
    let tmpl = ProfileTemplate {
        length: PI,
        h: HTemplate::Sinusoidal,
        f0: vec![f0],
        mode: ProfileMode::Kahler,
        f_templates: vec![],
    };
    let state = build_kahler_profile(&spec, &tmpl, cells)?;
    Ok((spec, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::kahler_residual;

    fn sinus(f0: f64) -> ProfileTemplate {
        ProfileTemplate {
            length: PI,
            h: HTemplate::Sinusoidal,
            f0: vec![f0],
            mode: ProfileMode::Kahler,
            f_templates: vec![],
        }
    }

    #[test]
    fn test_b_profile_values() {
        let (_, st) = test_b(400).unwrap();
        for j in 0..st.cells() {
            let s = PI * st.sigma_at(j);
            assert!((st.h[j] - s.sin()).abs() < 1e-14);
            assert!((st.f[0][j].powi(2) - (4.0 - 2.0 * s.cos())).abs() < 1e-12);
        }
        assert!(validate_closing(&st, 1e-6).passed());
    }

    #[test]
    fn negative_twist_gives_decreasing_profile() {
        let spec = BundleSpec::new(vec![1], vec![2.0], vec![-2], None).unwrap();
        let st = build_kahler_profile(&spec, &sinus(6.0), 200).unwrap();
        for j in 0..st.cells() {
            let s = PI * st.sigma_at(j);
            assert!((st.f[0][j].powi(2) - (4.0 + 2.0 * s.cos())).abs() < 1e-12);
        }
        let f2 = st.f_sq(0);
        assert!(f2.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn rejects_vanishing_base() {
        let spec = BundleSpec::new(vec![1], vec![2.0], vec![-2], None).unwrap();
        match build_kahler_profile(&spec, &sinus(1.0), 200) {
            Err(Error::Positivity { s, .. }) => {
                // 1 − 2(1 − cos s) first hits zero at s = π/3
                assert!(s >= PI / 3.0 && s < PI / 3.0 + PI / 100.0, "s = {s}");
            }
            other => panic!("expected positivity failure, got {other:?}"),
        }
    }

    #[test]
    fn closing_fails_for_parabola() {
        let m = 200;
        let h: Vec<f64> = (0..m)
            .map(|j| {
                let s = PI * (j as f64 + 0.5) / m as f64;
                s * (PI - s)
            })
            .collect();
        let st = ProfileState::new(0.0, vec![PI; m], h, vec![vec![2.0; m]]).unwrap();
        let rep = validate_closing(&st, 1e-3);
        assert!(!rep.passed());
        let right = rep
            .checks
            .iter()
            .find(|c| c.endpoint == Endpoint::Right && c.condition.starts_with("H'"))
            .unwrap();
        assert!((right.residual - (PI - 1.0)).abs() < 1e-6);
    }

    #[test]
    fn general_profile_with_constant_f() {
        let spec = BundleSpec::new(vec![1], vec![2.0], vec![2], None).unwrap();
        let tmpl = ProfileTemplate {
            length: PI,
            h: HTemplate::Sinusoidal,
            f0: vec![],
            mode: ProfileMode::General,
            f_templates: vec![FTemplate::Constant { value: 4.0 }],
        };
        let st = build_general_profile(&spec, &tmpl, 200).unwrap();
        assert!(st.f[0].iter().all(|&f| f == 2.0));
        let res = kahler_residual(&spec, &st);
        assert!((res - 2.0).abs() < 1e-3, "{res}");
    }

    #[test]
    fn general_profile_from_kahler_samples_is_identical() {
        let (spec, kahler) = test_b(128).unwrap();
        let tmpl = ProfileTemplate {
            length: PI,
            h: HTemplate::Sampled { values: kahler.h.clone() },
            f0: vec![],
            mode: ProfileMode::General,
            f_templates: vec![FTemplate::Sampled { values: kahler.f_sq(0) }],
        };
        let general = build_general_profile(&spec, &tmpl, 128).unwrap();
        assert_eq!(general.h, kahler.h);
        for (a, b) in general.f[0].iter().zip(&kahler.f[0]) {
            assert!((a - b).abs() <= 1e-15 * b);
        }
    }

    #[test]
    fn general_profile_rejects_odd_f() {
        let spec = BundleSpec::new(vec![1], vec![2.0], vec![2], None).unwrap();
        let tmpl = ProfileTemplate {
            length: PI,
            h: HTemplate::Sinusoidal,
            f0: vec![],
            mode: ProfileMode::General,
            f_templates: vec![FTemplate::Polynomial { coefficients: vec![4.0, 0.5] }],
        };
        assert!(matches!(build_general_profile(&spec, &tmpl, 200), Err(Error::Closing(_))));
    }

    #[test]
    fn sampled_kahler_matches_analytic() {
        let (spec, analytic) = test_b(200).unwrap();
        let tmpl = ProfileTemplate {
            length: PI,
            h: HTemplate::Sampled { values: analytic.h.clone() },
            f0: vec![2.0],
            mode: ProfileMode::Kahler,
            f_templates: vec![],
        };
        let sampled = build_kahler_profile(&spec, &tmpl, 200).unwrap();
        for (a, b) in sampled.f[0].iter().zip(&analytic.f[0]) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn polynomial_bump_closes() {
        let spec = BundleSpec::new(vec![1], vec![2.0], vec![1], None).unwrap();
        let tmpl = ProfileTemplate {
            length: 2.0,
            h: HTemplate::PolynomialBump,
            f0: vec![1.0],
            mode: ProfileMode::Kahler,
            f_templates: vec![],
        };
        let st = build_kahler_profile(&spec, &tmpl, 200).unwrap();
        assert!(validate_closing(&st, 1e-4).passed());
    }

    #[test]
    fn calabi_presets() {
        let (spec, st) = calabi_preset(&CalabiParams::new(2, 1), 400).unwrap();
        assert_eq!(spec.n, vec![1]);
        assert_eq!(spec.q, vec![1]);
        assert_eq!(spec.k, vec![2.0]);
        assert!(kahler_residual(&spec, &st) <= 1e-8);
        assert!(validate_closing(&st, ClosingReport::DEFAULT_TOLERANCE).passed());

        let (spec, _) = calabi_preset(&CalabiParams::new(2, 3), 400).unwrap();
        assert_eq!(spec.q, vec![3]);
        assert_eq!(spec.n, vec![1]);

        assert!(calabi_preset(&CalabiParams::new(1, 1), 100).is_err());
    }
}
