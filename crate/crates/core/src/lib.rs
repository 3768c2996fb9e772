//! Centro-affine differential invariants of closed plane curves and a
//! nonlocal invariant curve flow.
//!
//! The crate samples closed star-shaped curves on a uniform periodic grid,
//! evaluates their centro-equiaffine and centro-affine invariants with
//! Fourier differentiation, and integrates two equivalent descriptions of
//! the flow
//!
//! ```text
//! ∂C/∂t = (λ + ∫₀^ξ φ dξ) C + (φ/2) C_ξ
//! ```
//!
//! either on the curve itself ([`flow::curve`]) or on the pair `(g, φ)` of
//! metric and curvature ([`flow::curvature`]). [`diagnostics`] turns the
//! known identities and inequalities of the flow into checkable verdicts;
//! [`scenario`] runs whole experiments from JSON files.

pub mod curve;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod invariants;
pub mod output;
pub mod scenario;
pub mod spectral;

pub use curve::{bracket, periodic_integral, preset, ClosedCurve, CurveFile, PeriodicField, Preset, Vec2};
pub use error::{Error, Result};
pub use invariants::{centro_affine, centro_equiaffine, phi_from_mu, InvariantField};
pub use diagnostics::{DiagnosticsRecord, Verdict};
pub use flow::curvature::CurvatureFlowState;
pub use flow::curve::{CurveFlowState, Normalization};
pub use flow::{FlowSettings, FlowTrajectory, Snapshot};
pub use output::Report;
pub use scenario::{ScenarioConfig, ScenarioOutcome};
pub use spectral::Grid;
