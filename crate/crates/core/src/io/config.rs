//! Run configuration: a JSON document with `bundle`, `initial`, `flow`,
//! `analysis` and `output` sections.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisConfig;
use crate::error::{Error, Result};
use crate::flow::FlowConfig;
use crate::grid::ProfileState;
use crate::initial::{build_general_profile, build_kahler_profile, calabi_preset, test_b, CalabiParams, ProfileMode, ProfileTemplate};
use crate::spec::BundleSpec;

/// Bundle data as written in a config; `lambda` defaults to `|k|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleConfig {
    pub n: Vec<u32>,
    pub k: Vec<f64>,
    pub q: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
}

impl BundleConfig {
    pub fn to_spec(&self) -> Result<BundleSpec> {
        BundleSpec::new(self.n.clone(), self.k.clone(), self.q.clone(), self.lambda.clone())
    }
}

impl From<&BundleSpec> for BundleConfig {
    fn from(spec: &BundleSpec) -> Self {
        BundleConfig {
            n: spec.n.clone(),
            k: spec.k.clone(),
            q: spec.q.clone(),
            lambda: Some(spec.lambda.clone()),
        }
    }
}

/// Initial data: a named preset or an explicit template.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialConfig {
    /// `H = sin s`, `F² = 4 − 2 cos s` with `n = 1, k = 2, q = 2, λ = 1`.
    TestB,
    Calabi(CalabiParams),
    Template(ProfileTemplate),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    /// Render SVG plots after a run.
    #[serde(default = "default_true")]
    pub plots: bool,
}

fn default_directory() -> String {
    "run".into()
}

fn default_true() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: default_directory(), plots: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Required for templates; presets supply their own bundle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<BundleConfig>,
    pub initial: InitialConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn config_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

impl RunConfig {
    /// Parses and validates a JSON config, applying defaults.
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(if path == "." { String::new() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg.with_defaults())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// Fills in defaults that depend on other fields (`lambda = |k|`).
    fn with_defaults(mut self) -> Self {
        if let Some(b) = &mut self.bundle {
            if b.lambda.is_none() {
                b.lambda = Some(b.k.iter().map(|k| k.abs()).collect());
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.initial, &self.bundle) {
            (InitialConfig::Template(_), None) => {
                return Err(config_error("bundle", "a template needs explicit bundle data"));
            }
            (InitialConfig::TestB | InitialConfig::Calabi(_), Some(_)) => {
                return Err(config_error("bundle", "presets define their own bundle; remove this section"));
            }
            _ => {}
        }
        if let Some(b) = &self.bundle {
            validate_bundle(b)?;
        }
        if let InitialConfig::Calabi(p) = &self.initial {
            if p.n < 2 {
                return Err(config_error("initial.n", "Calabi preset needs n >= 2"));
            }
            if p.k_lens < 1 {
                return Err(config_error("initial.k_lens", "lens order must be positive"));
            }
        }
        if let InitialConfig::Template(t) = &self.initial {
            let r = self.bundle.as_ref().map_or(0, |b| b.n.len());
            let (field, len) = match t.mode {
                ProfileMode::Kahler => ("initial.f0", t.f0.len()),
                ProfileMode::General => ("initial.f_templates", t.f_templates.len()),
            };
            if len != r {
                return Err(config_error(field, format!("expected {r} entries, found {len}")));
            }
        }
        self.flow
            .check()
            .map_err(|(field, msg)| config_error(format!("flow.{field}"), msg))?;
        let a = &self.analysis;
        for (field, value, min) in [
            ("plateau_factor", a.plateau_factor, 1.0),
            ("growth_factor", a.growth_factor, 1.0),
            ("window_decades", a.window_decades, 0.0),
            ("collapse_factor", a.collapse_factor, 0.0),
        ] {
            if !(value > min && value.is_finite()) {
                return Err(config_error(format!("analysis.{field}"), format!("must be finite and exceed {min}")));
            }
        }
        if !(a.liyau_c0 >= 0.0) {
            return Err(config_error("analysis.liyau_c0", "must be nonnegative"));
        }
        Ok(())
    }

    /// Bundle data of the run.
    pub fn spec(&self) -> Result<BundleSpec> {
        match &self.initial {
            InitialConfig::TestB => Ok(test_b(8)?.0),
            InitialConfig::Calabi(p) => Ok(calabi_preset(p, 8)?.0),
            InitialConfig::Template(_) => self
                .bundle
                .as_ref()
                .ok_or_else(|| config_error("bundle", "missing"))?
                .to_spec(),
        }
    }

    /// Bundle data and the initial profile on `flow.cells` cells.
    pub fn build(&self) -> Result<(BundleSpec, ProfileState)> {
        let cells = self.flow.cells;
        match &self.initial {
            InitialConfig::TestB => test_b(cells),
            InitialConfig::Calabi(p) => calabi_preset(p, cells),
            InitialConfig::Template(t) => {
                let spec = self.spec()?;
                let state = match t.mode {
                    ProfileMode::Kahler => build_kahler_profile(&spec, t, cells)?,
                    ProfileMode::General => build_general_profile(&spec, t, cells)?,
                };
                Ok((spec, state))
            }
        }
    }
}

fn validate_bundle(b: &BundleConfig) -> Result<()> {
    let r = b.n.len();
    if r == 0 {
        return Err(config_error("bundle.n", "at least one base factor is required"));
    }
    let lambda_len = b.lambda.as_ref().map_or(r, Vec::len);
    for (name, len) in [("k", b.k.len()), ("q", b.q.len()), ("lambda", lambda_len)] {
        if len != r {
            return Err(config_error(format!("bundle.{name}"), format!("expected {r} entries, found {len}")));
        }
    }
    for i in 0..r {
        if b.n[i] == 0 {
            return Err(config_error(format!("bundle.n[{i}]"), "complex dimension must be at least 1"));
        }
        if b.q[i] == 0 {
            return Err(config_error(format!("bundle.q[{i}]"), "q_i must be a nonzero integer"));
        }
        if !b.k[i].is_finite() {
            return Err(config_error(format!("bundle.k[{i}]"), "must be finite"));
        }
    }
    if let Some(l) = &b.lambda {
        if let Some(i) = l.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(config_error(format!("bundle.lambda[{i}]"), "must be finite and nonnegative"));
        }
    }
    Ok(())
}

/// Reads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::from_json(&text)
}
