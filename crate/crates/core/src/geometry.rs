//! Closed-form curvature of the cohomogeneity-one ansatz
//! `g = ds² + H(s)² η⊗η + Σ F_i(s)² π_i^* g_{N_i}`.
//!
//! Everything is expressed in the orthonormal frame `{ν = ∂_s, ζ̂, X_i}` where
//! `ζ̂` is the unit fiber direction and `X_i` are unit horizontal vectors
//! tangent to the factor `N_i`. In this frame the Ricci tensor is diagonal,
//! so only the radial, fiber and per-factor horizontal slots exist.
//!
//! The pointwise formulas act on a [`RadialJet`]: values and arclength
//! derivatives of `H` and `F_i` at one point. Jets come either from analytic
//! profiles or from a [`ProfileState`] via [`jets`].

use crate::error::{Error, Result};
use crate::grid::{extend, sigma_derivatives, Endpoint, Parity, ProfileState, GHOSTS};
use crate::spec::BundleSpec;

/// `H, H', H''` and `F_i, F_i', F_i''` at one point, derivatives in arclength.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialJet {
    pub h: f64,
    pub dh: f64,
    pub d2h: f64,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    pub d2f: Vec<f64>,
}

/// Eigenvalues of the shape operator `L = ∇ν` of the hypersurface `{s} × P`.
/// `fiber` has multiplicity one, `base[i]` multiplicity `2 n_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeEigs {
    pub fiber: f64,
    pub base: Vec<f64>,
}

impl ShapeEigs {
    pub fn trace(&self, spec: &BundleSpec) -> f64 {
        self.fiber + (0..self.base.len()).map(|i| 2.0 * spec.nf(i) * self.base[i]).sum::<f64>()
    }
}

/// Ricci curvature of the hypersurface `(P, g_s)`: the `ζ*ζ*` component and
/// the horizontal coefficients with respect to `g_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubmersionRicci {
    pub fiber: f64,
    pub horizontal: Vec<f64>,
}

/// Nonzero Ricci slots of `(M, g)`.
///
/// `radial = Ric(ν,ν)`, `fiber = Ric(ζ̂,ζ̂)`, and `horizontal[i] = ρ_i` with
/// `Ric(X_i, Y_i) = ρ_i g_{N_i}(X_i, Y_i)`. Mixed components vanish
/// identically for this ansatz and have no slot.
#[derive(Clone, Debug, PartialEq)]
pub struct RicciComponents {
    pub radial: f64,
    pub fiber: f64,
    pub horizontal: Vec<f64>,
}

impl RicciComponents {
    pub fn is_finite(&self) -> bool {
        self.radial.is_finite() && self.fiber.is_finite() && self.horizontal.iter().all(|v| v.is_finite())
    }

    /// Largest relative difference over all slots.
    pub fn max_relative_diff(&self, other: &RicciComponents) -> f64 {
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        let mut worst = rel(self.radial, other.radial).max(rel(self.fiber, other.fiber));
        for (a, b) in self.horizontal.iter().zip(&other.horizontal) {
            worst = worst.max(rel(*a, *b));
        }
        worst
    }
}

/// Ricci slots from the simplified Kähler formulas, flagged when the input
/// is too far from satisfying the Kähler condition.
#[derive(Clone, Debug, PartialEq)]
pub struct KahlerRicci {
    pub ricci: RicciComponents,
    pub residual: f64,
    pub advisory: bool,
}

/// Per-factor magnitudes in the horizontal sectional curvature: the base term
/// `λ_i / F_i²` and the fiber-twist correction `q_i² H² / (4 F_i⁴)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HorizontalRm {
    pub base: f64,
    pub twist: f64,
}

impl RadialJet {
    pub fn factors(&self) -> usize {
        self.f.len()
    }

    pub fn shape_eigs(&self) -> ShapeEigs {
        ShapeEigs {
            fiber: self.dh / self.h,
            base: self.f.iter().zip(&self.df).map(|(f, df)| df / f).collect(),
        }
    }

    /// Eigenvalues of `L' = ∇_ν L`.
    pub fn shape_derivative_eigs(&self) -> ShapeEigs {
        let lh = self.dh / self.h;
        ShapeEigs {
            fiber: self.d2h / self.h - lh * lh,
            base: (0..self.factors())
                .map(|i| {
                    let l = self.df[i] / self.f[i];
                    self.d2f[i] / self.f[i] - l * l
                })
                .collect(),
        }
    }

    /// `max_i |q_i H − (F_i²)'|`, zero exactly when the metric is Kähler.
    pub fn kahler_residual(&self, spec: &BundleSpec) -> f64 {
        (0..self.factors())
            .map(|i| (spec.qf(i) * self.h - 2.0 * self.f[i] * self.df[i]).abs())
            .fold(0.0, f64::max)
    }

    /// `Δ(F_i²) = (F_i²)'' + tr L · (F_i²)'`.
    pub fn laplacian_f_sq(&self, spec: &BundleSpec, i: usize) -> f64 {
        let tr = self.shape_eigs().trace(spec);
        let d1 = 2.0 * self.f[i] * self.df[i];
        let d2 = 2.0 * (self.df[i] * self.df[i] + self.f[i] * self.d2f[i]);
        d2 + tr * d1
    }
}

/// Radial Laplacian `u'' + tr L · u'` from arclength derivatives of `u`.
pub fn laplacian_from_derivs(spec: &BundleSpec, jet: &RadialJet, du: f64, d2u: f64) -> f64 {
    d2u + jet.shape_eigs().trace(spec) * du
}

/// Ricci curvature of the circle bundle `(P, g_s) -> (N, Σ F_i² g_{N_i})`.
pub fn submersion_ricci(spec: &BundleSpec, jet: &RadialJet) -> SubmersionRicci {
    let r = jet.factors();
    let twist = |i: usize| {
        let q = spec.qf(i);
        let f2 = jet.f[i] * jet.f[i];
        q * q * jet.h * jet.h / (2.0 * f2 * f2)
    };
    SubmersionRicci {
        fiber: (0..r).map(|i| spec.nf(i) * twist(i)).sum(),
        horizontal: (0..r)
            .map(|i| spec.k[i] / (jet.f[i] * jet.f[i]) - twist(i))
            .collect(),
    }
}

/// Full Ricci curvature, valid with or without the Kähler condition.
pub fn ricci_full(spec: &BundleSpec, jet: &RadialJet) -> RicciComponents {
    let r = jet.factors();
    let eig = jet.shape_eigs();
    let tr_base: f64 = (0..r).map(|i| 2.0 * spec.nf(i) * eig.base[i]).sum();
    let h_ratio = jet.d2h / jet.h;
    let sub = submersion_ricci(spec, jet);

    let radial = -h_ratio - (0..r).map(|i| 2.0 * spec.nf(i) * jet.d2f[i] / jet.f[i]).sum::<f64>();
    let fiber = sub.fiber - eig.fiber * tr_base - h_ratio;
    let tr = eig.fiber + tr_base;
    let horizontal = (0..r)
        .map(|i| {
            let l = eig.base[i];
            let f2 = jet.f[i] * jet.f[i];
            (sub.horizontal[i] - l * tr - jet.d2f[i] / jet.f[i] + l * l) * f2
        })
        .collect();
    RicciComponents { radial, fiber, horizontal }
}

/// Ricci curvature through the Kähler simplification
/// `Ric(ν,ν) = Ric(ζ̂,ζ̂) = −Δ log H + Σ 2n_i |∇ log F_i|²` and
/// `ρ_i = k_i − ½ Δ F_i²`.
///
/// The result is flagged `advisory` when the pointwise Kähler residual
/// exceeds `threshold`.
pub fn ricci_kahler(spec: &BundleSpec, jet: &RadialJet, threshold: f64) -> KahlerRicci {
    let r = jet.factors();
    let eig = jet.shape_eigs();
    let tr_base: f64 = (0..r).map(|i| 2.0 * spec.nf(i) * eig.base[i]).sum();
    let lap_log_h = jet.d2h / jet.h + eig.fiber * tr_base;
    let grad_log_f: f64 = (0..r).map(|i| 2.0 * spec.nf(i) * eig.base[i] * eig.base[i]).sum();
    let normal = -lap_log_h + grad_log_f;
    let horizontal = (0..r)
        .map(|i| spec.k[i] - 0.5 * jet.laplacian_f_sq(spec, i))
        .collect();
    let residual = jet.kahler_residual(spec);
    KahlerRicci {
        ricci: RicciComponents { radial: normal, fiber: normal, horizontal },
        residual,
        advisory: !(residual <= threshold),
    }
}

/// `B = Σ_i |∇ log F_i|²`, which controls `|A|²` when `dω = 0`.
pub fn oneill_quantity(jet: &RadialJet) -> f64 {
    jet.f
        .iter()
        .zip(&jet.df)
        .map(|(f, df)| (df / f) * (df / f))
        .sum()
}

/// Base-curvature and twist magnitudes of `Rm(X,Y,Y,X)` for unit horizontal
/// vectors tangent to each factor.
pub fn horizontal_rm_estimate(spec: &BundleSpec, jet: &RadialJet) -> Vec<HorizontalRm> {
    (0..jet.factors())
        .map(|i| {
            let f2 = jet.f[i] * jet.f[i];
            let q = spec.qf(i);
            HorizontalRm {
                base: spec.lambda[i] / f2,
                twist: q * q * jet.h * jet.h / (4.0 * f2 * f2),
            }
        })
        .collect()
}

/// Pointwise surrogate for `|Rm|`: the largest magnitude among the radial-fiber,
/// radial-horizontal, fiber-horizontal, intra-factor and cross-factor sectional
/// pieces of the ansatz.
pub fn curvature_proxy(spec: &BundleSpec, jet: &RadialJet) -> f64 {
    let r = jet.factors();
    let mut kappa = (jet.d2h / jet.h).abs();
    // unlike f64::max, keeps a NaN once seen
    let mut take = |v: f64| {
        if v.is_nan() || v > kappa {
            kappa = v;
        }
    };
    let lh = jet.dh / jet.h;
    let est = horizontal_rm_estimate(spec, jet);
    for i in 0..r {
        let li = jet.df[i] / jet.f[i];
        take((jet.d2f[i] / jet.f[i]).abs());
        take((est[i].twist - lh * li).abs());
        take(est[i].base + 3.0 * est[i].twist + li * li);
        for j in 0..r {
            if j != i {
                take((li * jet.df[j] / jet.f[j]).abs());
            }
        }
    }
    kappa
}

/// Sup of the curvature proxy and the cell attaining it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProxySup {
    pub value: f64,
    pub cell: usize,
}

/// `sup` over cells of [`curvature_proxy`]. A non-finite value is reported as an
/// error naming the offending cell.
pub fn curvature_sup_proxy(spec: &BundleSpec, state: &ProfileState) -> Result<ProxySup> {
    let mut best = ProxySup { value: 0.0, cell: 0 };
    for (cell, jet) in jets(state).iter().enumerate() {
        let v = curvature_proxy(spec, jet);
        if !v.is_finite() {
            return Err(Error::NonFinite { cell, component: "curvature proxy".into() });
        }
        if v > best.value {
            best = ProxySup { value: v, cell };
        }
    }
    Ok(best)
}

/// σ-derivatives of all profiles, the shared input of the jets.
struct SigmaDerivs {
    a: (Vec<f64>, Vec<f64>),
    h: (Vec<f64>, Vec<f64>),
    f: Vec<(Vec<f64>, Vec<f64>)>,
}

impl SigmaDerivs {
    fn of(state: &ProfileState) -> Self {
        let d = state.dsigma();
        SigmaDerivs {
            a: sigma_derivatives(&state.a, Parity::Even, d),
            h: sigma_derivatives(&state.h, Parity::Odd, d),
            f: state.f.iter().map(|fi| sigma_derivatives(fi, Parity::Even, d)).collect(),
        }
    }

    fn jet(&self, state: &ProfileState, j: usize) -> RadialJet {
        let a = state.a[j];
        let a_s = self.a.0[j];
        // H_s = h_σ / a,  H_ss = h_σσ / a² − h_σ a_σ / a³
        let to_s = |d1: f64, d2: f64| (d1 / a, d2 / (a * a) - d1 * a_s / (a * a * a));
        let (dh, d2h) = to_s(self.h.0[j], self.h.1[j]);
        let mut df = Vec::with_capacity(state.factors());
        let mut d2f = Vec::with_capacity(state.factors());
        for (d1, d2) in &self.f {
            let (x, y) = to_s(d1[j], d2[j]);
            df.push(x);
            d2f.push(y);
        }
        RadialJet {
            h: state.h[j],
            dh,
            d2h,
            f: state.f.iter().map(|fi| fi[j]).collect(),
            df,
            d2f,
        }
    }
}

/// Jets at every cell, from fourth-order differences with parity ghosts.
pub fn jets(state: &ProfileState) -> Vec<RadialJet> {
    let d = SigmaDerivs::of(state);
    (0..state.cells()).map(|j| d.jet(state, j)).collect()
}

/// Jet at a single cell.
pub fn jet_at(state: &ProfileState, cell: usize) -> Result<RadialJet> {
    state.check_cell(cell)?;
    Ok(SigmaDerivs::of(state).jet(state, cell))
}

/// Shape-operator eigenvalues `(H'/H, [F_i'/F_i])` at a cell.
pub fn shape_operator_eigs(state: &ProfileState, cell: usize) -> Result<ShapeEigs> {
    let eig = jet_at(state, cell)?.shape_eigs();
    if !eig.fiber.is_finite() || eig.base.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { cell, component: "shape operator".into() });
    }
    Ok(eig)
}

/// Laplacian of an even radial field `u` at every cell.
pub fn radial_laplacian_field(spec: &BundleSpec, state: &ProfileState, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != state.cells() {
        return Err(Error::LengthMismatch { expected: state.cells(), found: u.len() });
    }
    let (du, d2u) = sigma_derivatives(u, Parity::Even, state.dsigma());
    let da = sigma_derivatives(&state.a, Parity::Even, state.dsigma()).0;
    Ok(jets(state)
        .iter()
        .enumerate()
        .map(|(j, jet)| {
            let a = state.a[j];
            let us = du[j] / a;
            let uss = d2u[j] / (a * a) - du[j] * da[j] / (a * a * a);
            laplacian_from_derivs(spec, jet, us, uss)
        })
        .collect())
}

/// Laplacian of an even radial field `u` at one cell.
pub fn radial_laplacian(spec: &BundleSpec, state: &ProfileState, u: &[f64], cell: usize) -> Result<f64> {
    state.check_cell(cell)?;
    Ok(radial_laplacian_field(spec, state, u)?[cell])
}

/// Limit of `Δu` at an endpoint, by even extrapolation of the cell values.
pub fn boundary_laplacian(spec: &BundleSpec, state: &ProfileState, u: &[f64], end: Endpoint) -> Result<f64> {
    let lap = radial_laplacian_field(spec, state, u)?;
    Ok(crate::grid::even_endpoint_value(&lap, end))
}

/// Curvature and diagnostic quantities at one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellCurvature {
    pub shape: ShapeEigs,
    pub shape_derivative: ShapeEigs,
    pub submersion: SubmersionRicci,
    pub ricci: RicciComponents,
    pub kahler: KahlerRicci,
    pub oneill: f64,
    pub li_yau: Vec<f64>,
    pub kappa: f64,
}

/// Curvature quantities over a whole profile.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureField {
    pub cells: Vec<CellCurvature>,
}

impl CurvatureField {
    pub fn compute(spec: &BundleSpec, state: &ProfileState, kahler_threshold: f64) -> Result<Self> {
        let d = state.dsigma();
        let f_sq_derivs: Vec<Vec<f64>> = (0..state.factors())
            .map(|i| {
                let u = extend(&state.f_sq(i), Parity::Even);
                (0..state.cells())
                    .map(|j| crate::grid::d1(&u, j + GHOSTS, 1.0 / d))
                    .collect()
            })
            .collect();
        let mut cells = Vec::with_capacity(state.cells());
        for (j, jet) in jets(state).into_iter().enumerate() {
            let ricci = ricci_full(spec, &jet);
            if !ricci.is_finite() {
                return Err(Error::NonFinite { cell: j, component: "Ricci curvature".into() });
            }
            let li_yau = (0..state.factors())
                .map(|i| {
                    let g = f_sq_derivs[i][j] / state.a[j];
                    g * g / (state.f[i][j] * state.f[i][j])
                })
                .collect();
            cells.push(CellCurvature {
                shape: jet.shape_eigs(),
                shape_derivative: jet.shape_derivative_eigs(),
                submersion: submersion_ricci(spec, &jet),
                kahler: ricci_kahler(spec, &jet, kahler_threshold),
                oneill: oneill_quantity(&jet),
                kappa: curvature_proxy(spec, &jet),
                ricci,
                li_yau,
            });
        }
        Ok(CurvatureField { cells })
    }
}
