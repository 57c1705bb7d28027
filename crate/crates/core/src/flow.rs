//! Method-of-lines integration of the reduced Ricci flow.
//!
//! With `g = a² dσ² + h² η⊗η + Σ f_i² π_i^* g_{N_i}` on a fixed σ-grid, the
//! Ricci flow `∂_t g = −2 Ric` becomes a quasilinear parabolic system for
//! `(a, h, f_i)`. The right-hand side is evaluated with fourth-order
//! differences and parity ghost cells, and advanced with classical RK4
//! under a parabolic step bound.

use serde::{Deserialize, Serialize};

use crate::analysis::{FlowTrace, TraceRow};
use crate::error::{Error, Result};
use crate::grid::{cumulative_integral, d1, d2, extend, lagrange, Parity, ProfileState, GHOSTS};
use crate::initial::{cell_arclength, validate_closing};
use crate::spec::BundleSpec;

/// Integration settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default = "defaults::cells")]
    pub cells: usize,
    /// Safety factor in `dt = cfl·min(aΔσ)²`.
    #[serde(default = "defaults::cfl")]
    pub cfl: f64,
    #[serde(default = "defaults::t_end")]
    pub t_end: f64,
    /// Halt once `min f_i²` or `max h²` drops below this.
    #[serde(default = "defaults::stop_floor")]
    pub stop_floor: f64,
    /// Steps between stored snapshots; the first and last state are always kept.
    #[serde(default = "defaults::snapshot_every")]
    pub snapshot_every: usize,
    /// Steps between trace rows.
    #[serde(default = "defaults::trace_every")]
    pub trace_every: usize,
    /// Regrid to uniform arclength when `max a / min a` exceeds this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regrid_threshold: Option<f64>,
    /// Tolerance of the closing check that gates the start of a run.
    #[serde(default = "defaults::closing_tolerance")]
    pub closing_tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

mod defaults {
    pub fn cells() -> usize {
        400
    }
    pub fn cfl() -> f64 {
        0.2
    }
    pub fn t_end() -> f64 {
        10.0
    }
    pub fn stop_floor() -> f64 {
        1e-3
    }
    pub fn snapshot_every() -> usize {
        5000
    }
    pub fn trace_every() -> usize {
        50
    }
    pub fn closing_tolerance() -> f64 {
        crate::initial::ClosingReport::DEFAULT_TOLERANCE
    }
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            cells: defaults::cells(),
            cfl: defaults::cfl(),
            t_end: defaults::t_end(),
            stop_floor: defaults::stop_floor(),
            snapshot_every: defaults::snapshot_every(),
            trace_every: defaults::trace_every(),
            regrid_threshold: None,
            closing_tolerance: defaults::closing_tolerance(),
            max_steps: None,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(field, msg)| Error::InvalidFlowConfig(format!("{field}: {msg}")))
    }

    /// First violated constraint as `(field, message)`.
    pub(crate) fn check(&self) -> std::result::Result<(), (&'static str, &'static str)> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(("cfl", "must lie in (0, 1)"));
        }
        if !(self.stop_floor > 0.0) {
            return Err(("stop_floor", "must be positive"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(("t_end", "must be finite and nonnegative"));
        }
        if self.cells < 8 {
            return Err(("cells", "at least 8 cells are required"));
        }
        if self.snapshot_every == 0 {
            return Err(("snapshot_every", "must be at least 1"));
        }
        if self.trace_every == 0 {
            return Err(("trace_every", "must be at least 1"));
        }
        if self.regrid_threshold.is_some_and(|th| !(th > 1.0)) {
            return Err(("regrid_threshold", "must exceed 1"));
        }
        if !(self.closing_tolerance > 0.0) {
            return Err(("closing_tolerance", "must be positive"));
        }
        Ok(())
    }
}

/// Time derivatives `(ȧ, ḣ, ḟ_i)` at every cell.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowRhs {
    pub a: Vec<f64>,
    pub h: Vec<f64>,
    pub f: Vec<Vec<f64>>,
}

/// Profiles with ghost cells filled by parity reflection.
#[derive(Clone, Debug, PartialEq)]
pub struct GhostedState {
    pub a: Vec<f64>,
    pub h: Vec<f64>,
    pub f: Vec<Vec<f64>>,
}

/// Fills ghost cells: `h` odd, `a` and `f_i` even about each endpoint.
pub fn apply_parity_boundary(state: &ProfileState) -> GhostedState {
    GhostedState {
        a: extend(&state.a, Parity::Even),
        h: extend(&state.h, Parity::Odd),
        f: state.f.iter().map(|fi| extend(fi, Parity::Even)).collect(),
    }
}

/// Right-hand side of the reduced flow:
///
/// ```text
/// ȧ   = h_σσ/(ah) − h_σa_σ/(a²h) + Σ 2n_i (f_σσ/(af) − f_σa_σ/(a²f))
/// ḣ   = −Σ n_i q_i² h³/(2f_i⁴) + Σ 2n_i h_σ f_σ/(a²f) + h_σσ/a² − h_σa_σ/a³
/// ḟ_i = −k_i/f_i + (f_σ/a)(h_σ/(ah) + Σ 2n_j f_jσ/(a f_j))
///       + f_σσ/a² − f_σa_σ/a³ − f_σ²/(a²f) + q_i² h²/(2f³)
/// ```
pub fn flow_rhs(spec: &BundleSpec, state: &ProfileState) -> Result<FlowRhs> {
    let m = state.cells();
    let r = state.factors();
    let g = apply_parity_boundary(state);
    let inv = 1.0 / state.dsigma();
    let inv2 = inv * inv;

    let mut out = FlowRhs {
        a: vec![0.0; m],
        h: vec![0.0; m],
        f: vec![vec![0.0; m]; r],
    };
    let mut fs = vec![0.0; r];
    let mut fss = vec![0.0; r];
    for j in 0..m {
        let k = j + GHOSTS;
        let a = g.a[k];
        let a_s = d1(&g.a, k, inv);
        let h = g.h[k];
        let h_s = d1(&g.h, k, inv);
        let h_ss = d2(&g.h, k, inv2);
        let a2 = a * a;
        let a3 = a2 * a;

        let mut trace_base = 0.0; // Σ 2n f_σ/(a f)
        let mut radial_base = 0.0; // Σ 2n (f_σσ/(a f) − f_σ a_σ/(a² f))
        let mut twist = 0.0; // Σ n q² h³/(2 f⁴)
        for i in 0..r {
            let fk = &g.f[i];
            let f = fk[k];
            fs[i] = d1(fk, k, inv);
            fss[i] = d2(fk, k, inv2);
            let two_n = 2.0 * spec.nf(i);
            trace_base += two_n * fs[i] / (a * f);
            radial_base += two_n * (fss[i] / (a * f) - fs[i] * a_s / (a2 * f));
            let q = spec.qf(i);
            let f2 = f * f;
            twist += spec.nf(i) * q * q * h * h * h / (2.0 * f2 * f2);
        }

        let da = h_ss / (a * h) - h_s * a_s / (a2 * h) + radial_base;
        let dh = -twist + h_s * trace_base / a + h_ss / a2 - h_s * a_s / a3;
        if !da.is_finite() {
            return Err(Error::NonFinite { cell: j, component: "da/dt".into() });
        }
        if !dh.is_finite() {
            return Err(Error::NonFinite { cell: j, component: "dh/dt".into() });
        }
        out.a[j] = da;
        out.h[j] = dh;

        let tr = h_s / (a * h) + trace_base;
        for i in 0..r {
            let f = g.f[i][k];
            let q = spec.qf(i);
            let df = -spec.k[i] / f + fs[i] / a * tr + fss[i] / a2 - fs[i] * a_s / a3 - fs[i] * fs[i] / (a2 * f)
                + q * q * h * h / (2.0 * f * f * f);
            if !df.is_finite() {
                return Err(Error::NonFinite { cell: j, component: format!("df_{}/dt", i + 1) });
            }
            out.f[i][j] = df;
        }
    }
    Ok(out)
}

fn axpy(state: &ProfileState, rhs: &FlowRhs, dt: f64) -> ProfileState {
    let add = |u: &[f64], du: &[f64]| u.iter().zip(du).map(|(u, du)| u + dt * du).collect();
    ProfileState {
        t: state.t + dt,
        a: add(&state.a, &rhs.a),
        h: add(&state.h, &rhs.h),
        f: state.f.iter().zip(&rhs.f).map(|(u, du)| add(u, du)).collect(),
    }
}

/// Parabolic step bound `cfl·min_j (a_j Δσ)²`. The principal coefficient of
/// every second-order term is one in arclength, so no further scaling enters.
pub fn parabolic_dt(state: &ProfileState, cfl: f64) -> f64 {
    let amin = state.a.iter().cloned().fold(f64::INFINITY, f64::min);
    let dx = amin * state.dsigma();
    cfl * dx * dx
}

/// Largest step that keeps the explicit change of every `f_i²` and `h²` under 10%.
fn relative_change_cap(state: &ProfileState, rhs: &FlowRhs) -> f64 {
    let mut cap = f64::INFINITY;
    // Δ(u²)/u² ≈ 2 u̇ dt / u
    let mut limit = |u: f64, du: f64| {
        if du != 0.0 {
            cap = cap.min(0.05 * u.abs() / du.abs());
        }
    };
    for (u, du) in state.h.iter().zip(&rhs.h) {
        limit(*u, *du);
    }
    for (fi, dfi) in state.f.iter().zip(&rhs.f) {
        for (u, du) in fi.iter().zip(dfi) {
            limit(*u, *du);
        }
    }
    cap
}

/// One classical RK4 step with the parabolic and relative-change bounds,
/// never stepping past `cfg.t_end`.
pub fn step_adaptive(spec: &BundleSpec, state: &ProfileState, cfg: &FlowConfig) -> Result<(ProfileState, f64)> {
    let k1 = flow_rhs(spec, state)?;
    let dt_stable = parabolic_dt(state, cfg.cfl).min(relative_change_cap(state, &k1));
    if !(dt_stable >= 1e-14 * cfg.t_end) {
        return Err(Error::DtUnderflow { t: state.t, dt: dt_stable });
    }
    let dt = dt_stable.min(cfg.t_end - state.t);
    if dt <= 0.0 {
        return Ok((state.clone(), 0.0));
    }
    let k2 = flow_rhs(spec, &axpy(state, &k1, 0.5 * dt))?;
    let k3 = flow_rhs(spec, &axpy(state, &k2, 0.5 * dt))?;
    let k4 = flow_rhs(spec, &axpy(state, &k3, dt))?;
    let combine = |u: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..u.len())
            .map(|j| u[j] + dt / 6.0 * (a[j] + 2.0 * b[j] + 2.0 * c[j] + d[j]))
            .collect()
    };
    let next = ProfileState {
        t: state.t + dt,
        a: combine(&state.a, &k1.a, &k2.a, &k3.a, &k4.a),
        h: combine(&state.h, &k1.h, &k2.h, &k3.h, &k4.h),
        f: (0..state.factors())
            .map(|i| combine(&state.f[i], &k1.f[i], &k2.f[i], &k3.f[i], &k4.f[i]))
            .collect(),
    };
    next.validate()?;
    Ok((next, dt))
}

/// Arclength `s(σ)` at the cell centers and the total length `S`.
pub fn arclength(state: &ProfileState) -> (Vec<f64>, f64) {
    cell_arclength(state)
}

/// `∫ H ds`, the fiber-direction integral of the profile.
pub fn fiber_integral(state: &ProfileState) -> f64 {
    let ha: Vec<f64> = state.h.iter().zip(&state.a).map(|(h, a)| h * a).collect();
    cumulative_integral(&ha, Parity::Odd, state.dsigma()).1
}

/// Re-samples the profile on a grid that is uniform in arclength
/// (`a ≡ S`), using quartic interpolation in `s` with parity ghosts.
pub fn regrid_uniform(state: &ProfileState) -> ProfileState {
    let m = state.cells();
    let (s, total) = arclength(state);
    let mut nodes = Vec::with_capacity(m + 4);
    nodes.extend([-s[1], -s[0]]);
    nodes.extend_from_slice(&s);
    nodes.extend([2.0 * total - s[m - 1], 2.0 * total - s[m - 2]]);
    let eh = extend(&state.h, Parity::Odd);
    let ef: Vec<Vec<f64>> = state.f.iter().map(|fi| extend(fi, Parity::Even)).collect();

    let mut h = Vec::with_capacity(m);
    let mut f = vec![Vec::with_capacity(m); state.factors()];
    let mut lo = 0;
    for j in 0..m {
        let x = total * state.sigma_at(j);
        while lo + 1 < nodes.len() && nodes[lo + 1] <= x {
            lo += 1;
        }
        // five nodes centered on the bracket
        let start = lo.saturating_sub(2).min(nodes.len() - 5);
        let window = &nodes[start..start + 5];
        h.push(lagrange(window, &eh[start..start + 5], x).0);
        for (i, fi) in ef.iter().enumerate() {
            f[i].push(lagrange(window, &fi[start..start + 5], x).0);
        }
    }
    ProfileState { t: state.t, a: vec![total; m], h, f }
}

/// Why a run stopped.
#[derive(Debug)]
pub enum Halt {
    EndTime,
    StopFloor { quantity: String, value: f64 },
    MaxSteps,
    Failed(Error),
}

impl Halt {
    pub fn is_failure(&self) -> bool {
        matches!(self, Halt::Failed(_))
    }

    pub fn describe(&self) -> String {
        match self {
            Halt::EndTime => "reached t_end".into(),
            Halt::StopFloor { quantity, value } => format!("{quantity} fell to {value:.3e}"),
            Halt::MaxSteps => "step limit reached".into(),
            Halt::Failed(e) => format!("halted: {e}"),
        }
    }
}

/// Output of [`run_flow`]. A failed step still returns everything recorded
/// up to the failure.
#[derive(Debug)]
pub struct FlowRun {
    pub trace: FlowTrace,
    pub snapshots: Vec<ProfileState>,
    pub halt: Halt,
    pub steps: usize,
    pub regrids: usize,
}

impl FlowRun {
    pub fn final_state(&self) -> &ProfileState {
        self.snapshots.last().expect("a run always keeps its initial state")
    }
}

fn floor_breach(state: &ProfileState, floor: f64) -> Option<(String, f64)> {
    let hmax = state.h.iter().cloned().fold(0.0, f64::max);
    if hmax * hmax < floor {
        return Some(("max h^2".into(), hmax * hmax));
    }
    for (i, fi) in state.f.iter().enumerate() {
        let fmin = fi.iter().cloned().fold(f64::INFINITY, f64::min);
        if fmin * fmin < floor {
            return Some((format!("min f_{}^2", i + 1), fmin * fmin));
        }
    }
    None
}

/// Advances `state0` until `t_end`, a stop-floor breach or a step failure.
///
/// Refuses to start if `state0` does not close smoothly within
/// `cfg.closing_tolerance`.
pub fn run_flow(spec: &BundleSpec, state0: &ProfileState, cfg: &FlowConfig) -> Result<FlowRun> {
    cfg.validate()?;
    spec.validate()?;
    state0.validate()?;
    if state0.factors() != spec.factors() {
        return Err(Error::InvalidProfile(format!(
            "profile has {} factors, bundle has {}",
            state0.factors(),
            spec.factors()
        )));
    }
    let closing = validate_closing(state0, cfg.closing_tolerance);
    if !closing.passed() {
        return Err(Error::Closing(closing.summary()));
    }

    let mut trace = FlowTrace::new(spec.factors());
    trace.push(TraceRow::measure(spec, state0, 0.0)?);
    let mut snapshots = vec![state0.clone()];
    let mut state = state0.clone();
    let mut steps = 0;
    let mut regrids = 0;

    let halt = loop {
        if let Some((quantity, value)) = floor_breach(&state, cfg.stop_floor) {
            break Halt::StopFloor { quantity, value };
        }
        if state.t >= cfg.t_end {
            break Halt::EndTime;
        }
        if cfg.max_steps.is_some_and(|n| steps >= n) {
            break Halt::MaxSteps;
        }
        let (next, dt) = match step_adaptive(spec, &state, cfg) {
            Ok(v) => v,
            Err(e) => break Halt::Failed(e),
        };
        state = next;
        steps += 1;
        if let Some(th) = cfg.regrid_threshold {
            let amax = state.a.iter().cloned().fold(0.0, f64::max);
            let amin = state.a.iter().cloned().fold(f64::INFINITY, f64::min);
            if amax / amin > th {
                state = regrid_uniform(&state);
                regrids += 1;
            }
        }

        let last_step = state.t >= cfg.t_end || floor_breach(&state, cfg.stop_floor).is_some();
        let snapshot = steps % cfg.snapshot_every == 0 || last_step;
        if steps % cfg.trace_every == 0 || snapshot {
            match TraceRow::measure(spec, &state, dt) {
                Ok(row) => trace.push(row),
                Err(e) => break Halt::Failed(e),
            }
        }
        if snapshot {
            snapshots.push(state.clone());
        }
    };

    if snapshots.last().map(|s| s.t) != Some(state.t) {
        if trace.rows.last().map(|r| r.t) != Some(state.t) {
            if let Ok(row) = TraceRow::measure(spec, &state, 0.0) {
                trace.push(row);
            }
        }
        snapshots.push(state);
    }
    Ok(FlowRun { trace, snapshots, halt, steps, regrids })
}
