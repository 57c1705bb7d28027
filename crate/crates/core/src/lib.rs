//! Ricci flow of cohomogeneity-one metrics on `CP¹`-bundles over products of
//! Kähler-Einstein manifolds.
//!
//! The metric `ds² + H(s)² η⊗η + Σ F_i(s)² π_i^* g_{N_i}` is evolved as a
//! one-dimensional parabolic system on a cell-centered grid, and the
//! resulting trace is analysed for the blow-up rate and the way the
//! profile degenerates.

pub mod analysis;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod initial;
pub mod io;
pub mod spec;

pub use analysis::{analyze_run, AnalysisConfig, FlowTrace, SingularityReport, TraceRow, Verdict};
pub use error::{Error, Result};
pub use flow::{run_flow, FlowConfig, FlowRun, Halt};
pub use grid::{Endpoint, Parity, ProfileState};
pub use initial::{calabi_preset, test_b, CalabiParams, ProfileTemplate};
pub use spec::BundleSpec;
