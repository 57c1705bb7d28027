use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ProfileState;
use crate::spec::BundleSpec;

use super::{boundary_linear_check, linear_fit, BoundaryCheck, FlowTrace};

/// Thresholds used when classifying a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Type I if `max/min` of `τκ` over the final decade stays below this.
    #[serde(default = "defaults::plateau_factor")]
    pub plateau_factor: f64,
    /// Type II suspect if `τκ` grows by more than this over the window.
    #[serde(default = "defaults::growth_factor")]
    pub growth_factor: f64,
    /// Width of the growth window in decades of `τ`.
    #[serde(default = "defaults::window_decades")]
    pub window_decades: f64,
    /// A quantity has collapsed once it is below `collapse_factor·stop_floor`.
    #[serde(default = "defaults::collapse_factor")]
    pub collapse_factor: f64,
    /// Extra constant allowed in the Li-Yau bound.
    #[serde(default)]
    pub liyau_c0: f64,
}

mod defaults {
    pub fn plateau_factor() -> f64 {
        2.0
    }
    pub fn growth_factor() -> f64 {
        4.0
    }
    pub fn window_decades() -> f64 {
        2.0
    }
    pub fn collapse_factor() -> f64 {
        10.0
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            plateau_factor: defaults::plateau_factor(),
            growth_factor: defaults::growth_factor(),
            window_decades: defaults::window_decades(),
            collapse_factor: defaults::collapse_factor(),
            liyau_c0: 0.0,
        }
    }
}

/// Extrapolated singular time from one decaying series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeCandidate {
    pub series: String,
    pub t: f64,
}

/// Singular time estimates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SingularTimeEstimate {
    /// Best estimate: the floor-crossing estimate if any series decays,
    /// otherwise the curvature fit.
    pub t_hat: Option<f64>,
    /// Earliest zero of the decaying series.
    pub t_floor: Option<f64>,
    /// Earliest zero of the endpoint series of `f_i²` alone, which the
    /// Kähler endpoint laws make exactly linear.
    pub t_boundary: Option<f64>,
    /// Zero of a linear fit to `1/κ`.
    pub t_curvature: Option<f64>,
    pub candidates: Vec<TimeCandidate>,
}

/// Rows whose value lies within one decade of the last value.
fn last_decade(t: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let last = *y.last().unwrap();
    let start = y.iter().rposition(|&v| v > 10.0 * last).map_or(0, |p| p + 1);
    let start = start.min(y.len().saturating_sub(3));
    (t[start..].to_vec(), y[start..].to_vec())
}

/// Zero of a linear fit over the last decade of a positive decreasing series.
fn extrapolate_zero(t: &[f64], y: &[f64]) -> Option<f64> {
    if y.len() < 3 || y.iter().any(|v| !(*v > 0.0)) || y.last()? >= y.first()? {
        return None;
    }
    let (tw, yw) = last_decade(t, y);
    let (slope, intercept) = linear_fit(&tw, &yw)?;
    if slope >= 0.0 {
        return None;
    }
    let root = -intercept / slope;
    root.is_finite().then_some(root)
}

/// Extrapolates the time at which the flow degenerates.
///
/// Candidate series are `max h²`, each `min f_i²`, the endpoint values of
/// each `f_i²` and `∫H ds`; the earliest zero of a last-decade linear fit
/// wins, since the endpoint laws alone miss a collapsing fiber. The
/// endpoint-law zero and the zero of `1/κ` are reported alongside.
pub fn estimate_singular_time(trace: &FlowTrace) -> SingularTimeEstimate {
    let mut est = SingularTimeEstimate::default();
    if trace.rows.len() < 3 {
        return est;
    }
    let t = trace.times();
    let mut names = vec!["h_max_sq".to_string(), "fiber_integral".to_string()];
    for i in 1..=trace.factors {
        for field in ["sq_min", "sq_left", "sq_right"] {
            names.push(format!("f{i}{field}"));
        }
    }
    for name in names {
        let y = trace.series(&name).expect("known series");
        if let Some(root) = extrapolate_zero(&t, &y) {
            est.candidates.push(TimeCandidate { series: name, t: root });
        }
    }
    est.t_floor = est.candidates.iter().map(|c| c.t).reduce(f64::min);
    est.t_boundary = est
        .candidates
        .iter()
        .filter(|c| c.series.ends_with("sq_left") || c.series.ends_with("sq_right"))
        .map(|c| c.t)
        .reduce(f64::min);

    let inv_kappa: Vec<f64> = trace.rows.iter().map(|r| 1.0 / r.kappa).collect();
    est.t_curvature = extrapolate_zero(&t, &inv_kappa);
    est.t_hat = est.t_floor.or(est.t_curvature);
    est
}

/// Outcome of the blow-up rate test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    #[serde(rename = "type_i")]
    TypeI,
    #[serde(rename = "type_ii_suspect")]
    TypeIISuspect,
    NoSingularity,
    /// A singular time was found but neither test applies.
    Inconclusive,
}

/// Blow-up rate of `τκ`, `τ = T̂ − t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeClassification {
    pub verdict: Verdict,
    /// `sup τκ` over the window.
    pub typei_sup: Option<f64>,
    /// `max/min` of `τκ` over the final decade.
    pub plateau_ratio: Option<f64>,
    /// Ratio of the last to the first log-binned mean over the window.
    pub growth: Option<f64>,
    pub monotone: bool,
}

/// Classifies the blow-up rate against `t_hat`.
pub fn classify_singularity_type(trace: &FlowTrace, t_hat: Option<f64>, cfg: &AnalysisConfig) -> TypeClassification {
    let none = TypeClassification {
        verdict: Verdict::NoSingularity,
        typei_sup: None,
        plateau_ratio: None,
        growth: None,
        monotone: false,
    };
    let Some(t_hat) = t_hat else { return none };
    let pts: Vec<(f64, f64)> = trace
        .rows
        .iter()
        .filter(|r| r.t < t_hat)
        .map(|r| (t_hat - r.t, (t_hat - r.t) * r.kappa))
        .collect();
    if pts.len() < 2 {
        return TypeClassification { verdict: Verdict::Inconclusive, ..none };
    }
    let tau_min = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let window: Vec<(f64, f64)> = pts
        .iter()
        .copied()
        .filter(|p| p.0 <= tau_min * 10f64.powf(cfg.window_decades))
        .collect();
    let final_decade: Vec<f64> = pts.iter().filter(|p| p.0 <= 10.0 * tau_min).map(|p| p.1).collect();

    let typei_sup = window.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = final_decade
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let plateau_ratio = hi / lo;

    // means over quarter-decade bins of log τ, ordered from large τ to small
    let bins_n = (cfg.window_decades * 4.0).ceil().max(1.0) as usize;
    let log_min = tau_min.log10();
    let mut sums = vec![(0.0, 0usize); bins_n];
    for &(tau, v) in &window {
        let b = (((tau.log10() - log_min) * 4.0) as usize).min(bins_n - 1);
        sums[b].0 += v;
        sums[b].1 += 1;
    }
    let means: Vec<f64> = sums.iter().rev().filter(|s| s.1 > 0).map(|s| s.0 / s.1 as f64).collect();
    let monotone = means.len() >= 2 && means.windows(2).all(|w| w[1] >= w[0]);
    let growth = (means.len() >= 2).then(|| means[means.len() - 1] / means[0]);

    let verdict = if monotone && growth.is_some_and(|g| g > cfg.growth_factor) {
        Verdict::TypeIISuspect
    } else if final_decade.len() >= 2 && plateau_ratio < cfg.plateau_factor {
        Verdict::TypeI
    } else {
        Verdict::Inconclusive
    };
    TypeClassification {
        verdict,
        typei_sup: Some(typei_sup),
        plateau_ratio: Some(plateau_ratio),
        growth,
        monotone,
    }
}

/// Smallest `C` with `T̂ − t ≤ C·min_j F_j²` along the trace.
pub fn schwarz_fit(trace: &FlowTrace, t_hat: f64) -> Option<f64> {
    trace
        .rows
        .iter()
        .filter(|r| r.t < t_hat)
        .map(|r| (t_hat - r.t) / r.min_f_sq())
        .reduce(f64::max)
}

/// How the profile degenerates at the singular time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegenerationCase {
    /// The fiber shrinks while every base factor stays positive.
    FiberCollapse,
    /// Every base factor shrinks.
    Full,
    /// Some but not all base factors shrink.
    Partial,
    Indeterminate,
}

/// Per-quantity collapse flags behind a [`DegenerationCase`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Degeneration {
    pub case: DegenerationCase,
    pub fiber_collapsed: bool,
    pub factors_collapsed: Vec<bool>,
}

/// Decides which quantities collapse, comparing `final_state` with the first
/// trace row and the threshold `collapse_factor·stop_floor`.
pub fn classify_degeneration(
    final_state: &ProfileState,
    trace: &FlowTrace,
    stop_floor: f64,
    cfg: &AnalysisConfig,
) -> Degeneration {
    let threshold = cfg.collapse_factor * stop_floor;
    let first = trace.rows.first();
    let h_max = final_state.h.iter().cloned().fold(0.0, f64::max);
    let fiber_collapsed = h_max * h_max <= threshold && first.is_none_or(|r| h_max <= r.h_max);
    let factors_collapsed: Vec<bool> = (0..final_state.factors())
        .map(|i| {
            let f2 = final_state.f_sq(i).into_iter().fold(f64::INFINITY, f64::min);
            f2 <= threshold && first.is_none_or(|r| f2 <= r.factors[i].f_sq_min)
        })
        .collect();
    let collapsed = factors_collapsed.iter().filter(|c| **c).count();
    let case = match (fiber_collapsed, collapsed) {
        (true, 0) => DegenerationCase::FiberCollapse,
        (false, c) if c > 0 && c == factors_collapsed.len() => DegenerationCase::Full,
        (false, c) if c > 0 => DegenerationCase::Partial,
        _ => DegenerationCase::Indeterminate,
    };
    Degeneration { case, fiber_collapsed, factors_collapsed }
}

/// Parabolic rescaling `g ↦ K g(anchor + t/K)`: lengths grow by `√K` and the
/// time coordinate becomes `K(t − anchor)`.
pub fn blowup_rescale(state: &ProfileState, k: f64, anchor: f64) -> Result<ProfileState> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidProfile(format!("rescaling factor must be positive, got {k}")));
    }
    let mut out = state.scaled(k);
    out.t = k * (state.t - anchor);
    Ok(out)
}

/// `K_i = 1/(T̂ − t_i)` for each snapshot time before `t_hat`.
pub fn rescale_factors(snapshots: &[ProfileState], t_hat: f64) -> Vec<f64> {
    snapshots.iter().filter(|s| s.t < t_hat).map(|s| 1.0 / (t_hat - s.t)).collect()
}

/// Li-Yau monitor: the supremum along the run against `max(sup Q(0), C₀)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiYauMonitor {
    pub bound: Vec<f64>,
    pub observed: Vec<f64>,
    pub flagged: bool,
}

pub fn li_yau_monitor(trace: &FlowTrace, c0: f64) -> Option<LiYauMonitor> {
    let first = trace.rows.first()?;
    let bound: Vec<f64> = first.factors.iter().map(|f| f.liyau_sup.max(c0)).collect();
    let observed: Vec<f64> = (0..trace.factors)
        .map(|i| trace.rows.iter().map(|r| r.factors[i].liyau_sup).fold(0.0, f64::max))
        .collect();
    let flagged = observed.iter().zip(&bound).any(|(o, b)| *o > b * (1.0 + 1e-9));
    Some(LiYauMonitor { bound, observed, flagged })
}

/// Everything the analysis stage reports about a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub t_hat: Option<f64>,
    pub time_estimate: SingularTimeEstimate,
    pub verdict: Verdict,
    pub typei_sup: Option<f64>,
    pub classification: TypeClassification,
    pub schwarz_c: Option<f64>,
    pub case: DegenerationCase,
    pub degeneration: Degeneration,
    pub rescale_factors: Vec<f64>,
    pub boundary: Vec<BoundaryCheck>,
    pub li_yau: Option<LiYauMonitor>,
}

/// Runs every analysis step over a finished trace.
pub fn analyze_run(
    spec: &BundleSpec,
    trace: &FlowTrace,
    snapshots: &[ProfileState],
    stop_floor: f64,
    cfg: &AnalysisConfig,
) -> Result<SingularityReport> {
    let final_state = snapshots
        .last()
        .ok_or_else(|| Error::InvalidProfile("no snapshots to analyze".into()))?;
    let time_estimate = estimate_singular_time(trace);
    let t_hat = time_estimate.t_hat;
    let classification = classify_singularity_type(trace, t_hat, cfg);
    let degeneration = classify_degeneration(final_state, trace, stop_floor, cfg);
    Ok(SingularityReport {
        t_hat,
        verdict: classification.verdict,
        typei_sup: classification.typei_sup,
        schwarz_c: t_hat.and_then(|t| schwarz_fit(trace, t)),
        case: degeneration.case,
        rescale_factors: t_hat.map(|t| rescale_factors(snapshots, t)).unwrap_or_default(),
        boundary: boundary_linear_check(spec, trace),
        li_yau: li_yau_monitor(trace, cfg.liyau_c0),
        time_estimate,
        classification,
        degeneration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{FactorRow, TraceRow};

    /// A trace where `τκ = c·τ^{-p}` and `max h² = T − t`.
    fn synthetic(t_end: f64, p: f64) -> FlowTrace {
        let mut tr = FlowTrace::new(1);
        let mut tau: f64 = t_end;
        while tau > 1e-5 * t_end {
            let t = t_end - tau;
            tr.push(TraceRow {
                t,
                dt: 0.0,
                kappa: tau.powf(-1.0 - p),
                h_min: 0.0,
                h_max: tau.sqrt(),
                kahler_res: 0.0,
                heat_res: 0.0,
                arclength: 1.0,
                fiber_integral: tau,
                factors: vec![FactorRow {
                    f_sq_min: 2.0,
                    f_sq_max: 6.0,
                    grad_sup: 0.0,
                    liyau_sup: 1.0,
                    f_sq_left: 2.0,
                    f_sq_right: 2.0 + tau,
                }],
            });
            tau *= 0.9;
        }
        tr
    }

    #[test]
    fn recovers_singular_time() {
        let est = estimate_singular_time(&synthetic(0.5, 0.0));
        assert!((est.t_hat.unwrap() - 0.5).abs() < 1e-9);
        assert!((est.t_curvature.unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn linear_endpoint_law_root() {
        let mut tr = FlowTrace::new(1);
        for row in synthetic(0.5, 0.0).rows.iter().take(20) {
            let mut r = row.clone();
            r.h_max = 1.0;
            r.fiber_integral = 1.0;
            r.kappa = 1.0;
            r.factors[0].f_sq_right = 6.0 - 8.0 * r.t;
            tr.push(r);
        }
        let est = estimate_singular_time(&tr);
        assert!((est.t_hat.unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(est.t_hat, est.t_boundary);
        assert_eq!(est.t_curvature, None);
    }

    #[test]
    fn reciprocal_curvature_root() {
        let mut tr = FlowTrace::new(1);
        for row in synthetic(0.5, 0.0).rows {
            let mut r = row;
            r.h_max = 1.0;
            r.fiber_integral = 1.0;
            r.factors[0].f_sq_right = 2.0;
            tr.push(r);
        }
        let est = estimate_singular_time(&tr);
        assert_eq!(est.t_floor, None);
        assert!((est.t_hat.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn type_i_and_type_ii() {
        let cfg = AnalysisConfig::default();
        let c = classify_singularity_type(&synthetic(0.5, 0.0), Some(0.5), &cfg);
        assert_eq!(c.verdict, Verdict::TypeI);
        assert!((c.typei_sup.unwrap() - 1.0).abs() < 1e-9);
        let c = classify_singularity_type(&synthetic(0.5, 0.5), Some(0.5), &cfg);
        assert_eq!(c.verdict, Verdict::TypeIISuspect);
        assert!(c.monotone && c.growth.unwrap() > 4.0);
        let c = classify_singularity_type(&synthetic(0.5, 0.0), None, &cfg);
        assert_eq!(c.verdict, Verdict::NoSingularity);
    }

    #[test]
    fn no_singularity_without_decay() {
        let mut tr = FlowTrace::new(1);
        for row in synthetic(0.5, 0.0).rows.iter().take(5) {
            let mut r = row.clone();
            r.h_max = 1.0;
            r.fiber_integral = 1.0;
            r.kappa = 1.0;
            r.factors[0].f_sq_right = 2.0;
            tr.push(r);
        }
        assert_eq!(estimate_singular_time(&tr).t_hat, None);
    }

    #[test]
    fn schwarz_constant() {
        let tr = synthetic(0.5, 0.0);
        assert!((schwarz_fit(&tr, 0.5).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn degeneration_cases() {
        let cfg = AnalysisConfig::default();
        let tr = FlowTrace::new(2);
        let m = 8;
        let st = |h: f64, f1: f64, f2: f64| {
            ProfileState::new(0.0, vec![1.0; m], vec![h; m], vec![vec![f1; m], vec![f2; m]]).unwrap()
        };
        let case = |s: &ProfileState| classify_degeneration(s, &tr, 1e-3, &cfg).case;
        assert_eq!(case(&st(0.01, 1.0, 1.0)), DegenerationCase::FiberCollapse);
        assert_eq!(case(&st(1.0, 0.01, 0.01)), DegenerationCase::Full);
        assert_eq!(case(&st(1.0, 0.01, 1.0)), DegenerationCase::Partial);
        assert_eq!(case(&st(1.0, 1.0, 1.0)), DegenerationCase::Indeterminate);
    }

    #[test]
    fn rescaling() {
        let st = ProfileState::new(0.4, vec![1.0; 8], vec![0.5; 8], vec![vec![2.0; 8]]).unwrap();
        let r = blowup_rescale(&st, 4.0, 0.5).unwrap();
        assert!((r.t + 0.4).abs() < 1e-12);
        assert_eq!(r.h[0], 1.0);
        assert_eq!(r.f[0][0], 4.0);
        assert!(blowup_rescale(&st, 0.0, 0.5).is_err());
        assert_eq!(rescale_factors(&[st.clone()], 0.5), vec![1.0 / (0.5 - 0.4)]);
    }
}
