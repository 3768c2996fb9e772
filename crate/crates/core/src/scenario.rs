//! Scenario files: one JSON document describing a curve, a schedule and
//! where the results go.
//!
//! ```json
//! {
//!   "name": "perturbed-m3",
//!   "curve": { "preset": { "kind": "perturbed_ellipse", "a": 1, "b": 1, "amplitude": 0.05, "mode": 3 } },
//!   "N": 256, "dt": 1e-4, "t_end": 8,
//!   "flow": "both",
//!   "outputs": { "csv": "perturbed-m3.csv", "report": "perturbed-m3.json" }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curve::{preset, ClosedCurve, CurveFile, Preset};
use crate::diagnostics::{self as diag, fit_origin_ellipse, Verdict};
use crate::error::{Error, Result};
use crate::flow::curve::{self as curve_flow, CurveFlowState, Normalization};
use crate::flow::curvature::{self, CurvatureFlowState};
use crate::flow::{FlowSettings, FlowTrajectory, Snapshot, DEFAULT_BLOWUP_CEILING, DEFAULT_CFL};
use crate::invariants::{centro_affine, InvariantField};
use crate::output::{self, FailureReport, Report};

/// Output directory for relative paths when the caller gives none.
pub const OUT_DIR_ENV: &str = "CENTROFLOW_OUT_DIR";

/// Largest sup-norm gap between the two flows' φ.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSource {
    Preset(Preset),
    /// Curve JSON, relative to the scenario file.
    Path(PathBuf),
    /// `Preset::random_star_convex` with the scenario seed.
    RandomStarConvex,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    Curvature,
    Curve,
    #[default]
    Both,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub svg_dir: Option<PathBuf>,
    /// Draw every this many records of the curve flow; 0 draws only the
    /// initial and final curves.
    pub snapshot_stride: usize,
}

fn default_stride() -> usize {
    10
}

fn default_sobolev() -> u32 {
    4
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}

fn default_ceiling() -> f64 {
    DEFAULT_BLOWUP_CEILING
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub curve: CurveSource,
    #[serde(rename = "N")]
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub flow: FlowKind,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_sobolev")]
    pub sobolev_max_n: u32,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_true")]
    pub dealias: bool,
    #[serde(default = "default_ceiling")]
    pub blowup_ceiling: f64,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: u64,
}

fn config_error(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{field}`: {msg}"))
}

impl ScenarioConfig {
    /// Parses and validates; errors name the line and column or the field.
    pub fn from_json(text: &str) -> Result<ScenarioConfig> {
        let cfg: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ScenarioConfig::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            e => e,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(config_error("name", "must not be empty"));
        }
        if self.n < 16 || self.n % 2 != 0 {
            return Err(config_error("N", format!("must be even and >= 16, got {}", self.n)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(config_error("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(config_error("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if !self.lambda.is_finite() {
            return Err(config_error("lambda", "must be finite"));
        }
        if self.record_stride == 0 {
            return Err(config_error("record_stride", "must be >= 1"));
        }
        if !(self.cfl > 0.0) {
            return Err(config_error("cfl", "must be positive"));
        }
        if !(self.blowup_ceiling > 0.0) {
            return Err(config_error("blowup_ceiling", "must be positive"));
        }
        Ok(())
    }

    pub fn settings(&self) -> FlowSettings {
        FlowSettings {
            dt: self.dt,
            cfl: self.cfl,
            dealias: self.dealias,
            blowup_ceiling: self.blowup_ceiling,
            record_stride: self.record_stride,
            sobolev_max_n: self.sobolev_max_n,
            snapshot_stride: 0,
        }
    }

    /// Samples the initial curve; `base` resolves relative curve paths.
    pub fn initial_curve(&self, base: &Path) -> Result<ClosedCurve> {
        match &self.curve {
            CurveSource::Preset(p) => preset(p, self.n),
            CurveSource::RandomStarConvex => preset(&Preset::random_star_convex(self.seed), self.n),
            CurveSource::Path(p) => {
                let curve = CurveFile::read(&base.join(p))?.to_curve()?;
                if curve.len() == self.n {
                    Ok(curve)
                } else {
                    curve.resampled(self.n)
                }
            }
        }
    }
}

/// Everything a scenario run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOutcome {
    pub report: Report,
    /// Present when the flow named in `flow` ran: the curve flow's for
    /// `curve` and `both`, the curvature flow's otherwise.
    pub trajectory: FlowTrajectory,
    pub curvature_trajectory: Option<FlowTrajectory>,
    pub final_curve: Option<ClosedCurve>,
}

impl ScenarioOutcome {
    /// 0 all verdicts passed, 2 some verdict failed, 3 a flow failed.
    pub fn exit_code(&self) -> i32 {
        if self.report.error.is_some() {
            3
        } else if self.report.verdicts.iter().all(|v| v.passed) {
            0
        } else {
            2
        }
    }
}

fn failure(e: &Error) -> FailureReport {
    let t = match e {
        Error::FlowFailure { t, .. } => *t,
        _ => 0.0,
    };
    FailureReport {
        kind: e.kind().to_string(),
        t,
        message: e.to_string(),
    }
}

fn initial_verdicts(field: &InvariantField) -> Vec<Verdict> {
    let (iso, _) = diag::check_isoperimetric(field);
    vec![diag::check_mean_zero(field), iso]
}

fn trajectory_verdicts(prefix: &str, traj: &FlowTrajectory, field0: &InvariantField) -> Vec<Verdict> {
    let tag = |mut v: Verdict| {
        v.name = format!("{prefix}.{}", v.name);
        v
    };
    let mut out = vec![tag(diag::check_curvature_bounds(traj, field0.phi.min(), field0.phi.max()))];
    match diag::check_energy_identities(traj) {
        Ok((e, h)) => {
            out.push(tag(e));
            out.push(tag(h));
        }
        Err(err) => out.push(tag(Verdict::failed("energy_identity", err.to_string()))),
    }
    let (mono, integral) = diag::check_monotone_l_and_integral_e(traj);
    out.push(tag(mono));
    out.push(tag(integral));
    out.push(tag(diag::check_sobolev_bounded(traj)));
    out
}

/// φ gap between matching snapshots of the two flows.
fn consistency_verdict(curve_traj: &FlowTrajectory, scalar_traj: &FlowTrajectory) -> Result<Verdict> {
    let mut worst = 0.0_f64;
    for pair in curve_traj.snapshots.iter().zip(&scalar_traj.snapshots) {
        if let (Snapshot::Curve { curve, .. }, Snapshot::Curvature { phi, .. }) = pair {
            let f = centro_affine(curve)?;
            for (a, b) in f.phi.values().iter().zip(phi) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(Verdict::at_most(
        "consistency",
        worst,
        0.0,
        CONSISTENCY_TOLERANCE,
        format!("sup over {} recorded times of |φ_curve − φ_scalar|", curve_traj.snapshots.len()),
    ))
}

/// Runs the flows and the verdict suite without writing anything.
pub fn evaluate(cfg: &ScenarioConfig, base: &Path) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let curve0 = cfg.initial_curve(base)?;
    let field0 = centro_affine(&curve0)?;
    let mut verdicts = initial_verdicts(&field0);
    // Both flows keep matching snapshots for the consistency verdict, at
    // most about a thousand of them.
    let records = (cfg.t_end / cfg.dt).ceil() as usize / cfg.record_stride + 1;
    let settings = FlowSettings {
        snapshot_stride: if cfg.flow == FlowKind::Both { records.div_ceil(1000) } else { 0 },
        ..cfg.settings()
    };
    let mut outcome = ScenarioOutcome {
        report: Report {
            scenario: cfg.name.clone(),
            verdicts: Vec::new(),
            error: None,
        },
        trajectory: FlowTrajectory::default(),
        curvature_trajectory: None,
        final_curve: None,
    };

    let mut scalar = None;
    if cfg.flow != FlowKind::Curve {
        let state = CurvatureFlowState::from_invariants(&field0);
        match curvature::evolve(&state, cfg.t_end, &settings, |_| {}) {
            Ok((end, traj)) => {
                verdicts.extend(trajectory_verdicts("curvature", &traj, &field0));
                if cfg.flow == FlowKind::Curvature {
                    let last = traj.last().cloned();
                    let v = match last {
                        Some(r) => convergence_from_record(&r, &end),
                        None => Verdict::failed("convergence_to_ellipse", "no records"),
                    };
                    verdicts.push(v);
                }
                scalar = Some(traj);
            }
            Err(e) => {
                outcome.report.error = Some(failure(&e));
            }
        }
    }
    if cfg.flow != FlowKind::Curvature && outcome.report.error.is_none() {
        let state = CurveFlowState::new(curve0.clone(), cfg.lambda, cfg.normalization)?;
        match curve_flow::evolve(&state, cfg.t_end, &settings, |_| {}) {
            Ok((end, traj)) => {
                verdicts.extend(trajectory_verdicts("curve", &traj, &field0));
                let mut conv = diag::check_convergence_to_ellipse(&end.invariants()?, Some(end.curve()));
                conv.name = format!("curve.{}", conv.name);
                verdicts.push(conv);
                if let Some(s) = &scalar {
                    verdicts.push(consistency_verdict(&traj, s)?);
                }
                outcome.final_curve = Some(end.curve().clone());
                outcome.trajectory = traj;
            }
            Err(e) => {
                outcome.report.error = Some(failure(&e));
            }
        }
    }
    match cfg.flow {
        FlowKind::Curvature => outcome.trajectory = scalar.unwrap_or_default(),
        _ => outcome.curvature_trajectory = scalar,
    }
    // Snapshots were only kept for the consistency check.
    outcome.trajectory.snapshots.clear();
    if let Some(t) = outcome.curvature_trajectory.as_mut() {
        t.snapshots.clear();
    }
    outcome.report.verdicts = verdicts;
    Ok(outcome)
}

/// Convergence proxies for a curvature-only run.
fn convergence_from_record(last: &crate::diagnostics::DiagnosticsRecord, end: &CurvatureFlowState) -> Verdict {
    let phi = end.phi.max_abs();
    let dl = (last.perimeter - std::f64::consts::TAU).abs();
    let mut v = Verdict::at_most(
        "curvature.convergence_to_ellipse",
        phi,
        0.0,
        diag::CONVERGENCE_PHI,
        format!(
            "final max|φ|; |L − 2π| = {dl:e} (tolerance {:e}); no curve carried, fit not evaluated",
            diag::CONVERGENCE_PERIMETER
        ),
    );
    v.passed &= dl <= diag::CONVERGENCE_PERIMETER;
    v
}

/// Resolves `path` against `out_dir` unless absolute.
fn place(out_dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        out_dir.join(path)
    }
}

/// Default directory for relative output paths: `$CENTROFLOW_OUT_DIR` or `.`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from)
}

/// Writes the CSV, report and drawings of a finished run.
pub fn emit(cfg: &ScenarioConfig, base: &Path, outcome: &ScenarioOutcome, out_dir: &Path) -> Result<()> {
    let outs = &cfg.outputs;
    let csv = outs.csv.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.name)));
    output::emit_csv(&outcome.trajectory, &place(out_dir, &csv))?;
    if let Some(scalar) = &outcome.curvature_trajectory {
        let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or(&cfg.name);
        output::emit_csv(scalar, &place(out_dir, &csv.with_file_name(format!("{stem}-curvature.csv"))))?;
    }
    let report = outs.report.clone().unwrap_or_else(|| PathBuf::from(format!("{}.json", cfg.name)));
    output::emit_report(&outcome.report, &place(out_dir, &report))?;
    if let Some(dir) = &outs.svg_dir {
        let dir = place(out_dir, dir);
        let draw = |curve: &ClosedCurve, tag: &str| {
            let fit = fit_origin_ellipse(curve.points());
            output::emit_svg(curve, fit.as_ref(), &dir.join(format!("{}-{tag}.svg", cfg.name)))
        };
        draw(&cfg.initial_curve(base)?, "initial")?;
        if outs.snapshot_stride > 0 && cfg.flow != FlowKind::Curvature && outcome.report.error.is_none() {
            draw_snapshots(cfg, base, &dir)?;
        }
        if let Some(c) = &outcome.final_curve {
            draw(c, "final")?;
        }
    }
    Ok(())
}

/// Reruns the curve flow keeping snapshots, so long runs need not hold
/// every curve in memory during the verdict pass.
fn draw_snapshots(cfg: &ScenarioConfig, base: &Path, dir: &Path) -> Result<()> {
    let settings = FlowSettings {
        snapshot_stride: cfg.outputs.snapshot_stride,
        ..cfg.settings()
    };
    let state = CurveFlowState::new(cfg.initial_curve(base)?, cfg.lambda, cfg.normalization)?;
    let (_, traj) = curve_flow::evolve(&state, cfg.t_end, &settings, |_| {})?;
    for (i, snap) in traj.snapshots.iter().enumerate() {
        if let Snapshot::Curve { curve, .. } = snap {
            let fit = fit_origin_ellipse(curve.points());
            output::emit_svg(curve, fit.as_ref(), &dir.join(format!("{}-{i:05}.svg", cfg.name)))?;
        }
    }
    Ok(())
}

/// Loads, runs and writes one scenario file. Returns the exit status:
/// 0 pass, 1 config error, 2 verdict failure, 3 flow failure. A config
/// error comes back as `Err` so the caller can print it.
pub fn run_scenario(path: &Path, out_dir: &Path) -> Result<(i32, ScenarioOutcome)> {
    let cfg = ScenarioConfig::read(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let outcome = match evaluate(&cfg, base) {
        Ok(o) => o,
        // Errors before stepping, such as an inadmissible initial curve.
        Err(e) => ScenarioOutcome {
            report: Report {
                scenario: cfg.name.clone(),
                verdicts: Vec::new(),
                error: Some(failure(&e)),
            },
            trajectory: FlowTrajectory::default(),
            curvature_trajectory: None,
            final_curve: None,
        },
    };
    emit(&cfg, base, &outcome, out_dir)?;
    Ok((outcome.exit_code(), outcome))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "c",
        "curve": {"preset": {"kind": "origin_ellipse", "a": 1, "b": 1}},
        "N": 32, "dt": 1e-3, "t_end": 0.05
    }"#;

    #[test]
    fn defaults() {
        let cfg = ScenarioConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.flow, FlowKind::Both);
        assert_eq!(cfg.normalization, Normalization::UnitAreaScale);
        assert_eq!(cfg.record_stride, 10);
        assert_eq!(cfg.sobolev_max_n, 4);
        assert!(cfg.dealias);
        assert_eq!(cfg.lambda, 0.0);
    }

    #[test]
    fn parse_errors_name_line_or_field() {
        let bad_syntax = "{\n  \"name\": \"x\",\n  \"N\": ,\n}";
        let msg = ScenarioConfig::from_json(bad_syntax).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");

        let unknown = MINIMAL.replace("\"t_end\"", "\"t_stop\": 1, \"t_end\"");
        let msg = ScenarioConfig::from_json(&unknown).unwrap_err().to_string();
        assert!(msg.contains("t_stop"), "{msg}");

        let odd = MINIMAL.replace("\"N\": 32", "\"N\": 33");
        let msg = ScenarioConfig::from_json(&odd).unwrap_err().to_string();
        assert!(msg.contains("`N`"), "{msg}");

        let negative = MINIMAL.replace("\"dt\": 1e-3", "\"dt\": -1");
        let msg = ScenarioConfig::from_json(&negative).unwrap_err().to_string();
        assert!(msg.contains("`dt`"), "{msg}");
    }

    #[test]
    fn static_circle_passes() {
        let cfg = ScenarioConfig::from_json(MINIMAL).unwrap();
        let out = evaluate(&cfg, Path::new(".")).unwrap();
        assert_eq!(out.exit_code(), 0, "{:#?}", out.report);
        assert_eq!(out.trajectory.len(), 1 + 50 / 10);
        // Zero up to the roundoff of the bracket products.
        assert!(out.trajectory.records.iter().all(|r| r.energy <= 1e-24));
        assert!(out.report.verdicts.iter().any(|v| v.name == "consistency"));
    }

    #[test]
    fn stability_violation_exits_3() {
        let cfg = ScenarioConfig::from_json(&MINIMAL.replace("\"dt\": 1e-3", "\"dt\": 0.5")).unwrap();
        let out = evaluate(&cfg, Path::new(".")).unwrap();
        assert_eq!(out.exit_code(), 3);
        let err = out.report.error.unwrap();
        assert_eq!(err.kind, "StabilityViolation");
        assert_eq!(err.t, 0.0);
    }

    #[test]
    fn curve_file_source_is_resolved_against_base() {
        let dir = tempfile::tempdir().unwrap();
        let circle = preset(&Preset::OriginEllipse { a: 2.0, b: 0.5 }, 64).unwrap();
        CurveFile::from_curve("e", &circle).write(&dir.path().join("e.json")).unwrap();
        let text = MINIMAL.replace(
            r#"{"preset": {"kind": "origin_ellipse", "a": 1, "b": 1}}"#,
            r#"{"path": "e.json"}"#,
        );
        let cfg = ScenarioConfig::from_json(&text).unwrap();
        let c = cfg.initial_curve(dir.path()).unwrap();
        assert_eq!(c.len(), 32);
        assert!((c.area() - circle.area()).abs() < 1e-12);
    }

    #[test]
    fn random_source_uses_seed() {
        let text = MINIMAL.replace(
            r#"{"preset": {"kind": "origin_ellipse", "a": 1, "b": 1}}"#,
            r#""random_star_convex""#,
        );
        let mut cfg = ScenarioConfig::from_json(&text).unwrap();
        cfg.n = 64;
        cfg.seed = 3;
        let a = cfg.initial_curve(Path::new(".")).unwrap();
        let b = cfg.initial_curve(Path::new(".")).unwrap();
        assert_eq!(a, b);
        cfg.seed = 4;
        assert_ne!(a, cfg.initial_curve(Path::new(".")).unwrap());
    }
}
