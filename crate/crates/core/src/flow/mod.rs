//! Time integration of the nonlocal flow, in curve form and in curvature form.

pub mod curvature;
pub mod curve;

use serde::{Deserialize, Serialize};

use crate::curve::ClosedCurve;
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::spectral::Grid;

pub const DEFAULT_CFL: f64 = 0.5;
pub const DEFAULT_BLOWUP_CEILING: f64 = 10.0;

/// Stepping and recording parameters shared by both integrators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSettings {
    pub dt: f64,
    /// Stability factor in `dt_max = cfl · min_k (g_k 2π/N)²`.
    pub cfl: f64,
    /// Apply the 2/3-rule filter to φ before forming φ³.
    pub dealias: bool,
    /// `max|φ|` above which a step fails with `BlowUp`.
    pub blowup_ceiling: f64,
    /// Record diagnostics every this many steps (step 0 included).
    pub record_stride: usize,
    /// Highest n in the recorded `∮ φ_{ξⁿ}² dξ`; at least 2 are always kept.
    pub sobolev_max_n: u32,
    /// Keep a state snapshot every this many records; 0 disables snapshots.
    pub snapshot_stride: usize,
}

impl Default for FlowSettings {
    fn default() -> Self {
        FlowSettings {
            dt: 1e-4,
            cfl: DEFAULT_CFL,
            dealias: true,
            blowup_ceiling: DEFAULT_BLOWUP_CEILING,
            record_stride: 10,
            sobolev_max_n: 4,
            snapshot_stride: 0,
        }
    }
}

impl FlowSettings {
    pub fn with_dt(dt: f64) -> Self {
        FlowSettings {
            dt,
            ..FlowSettings::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.cfl > 0.0) {
            return Err(Error::InvalidParameter("cfl must be positive".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter("record_stride must be >= 1".into()));
        }
        Ok(())
    }

    pub(crate) fn sobolev_orders(&self) -> u32 {
        self.sobolev_max_n.max(2)
    }
}

/// Explicit diffusion limit for coefficient ½ on a spectral grid.
pub fn stability_bound(grid: &Grid, g: &[f64], cfl: f64) -> f64 {
    let gmin = g.iter().copied().fold(f64::INFINITY, f64::min);
    let h = gmin * grid.spacing();
    cfl * h * h
}

#[derive(Clone, Debug, PartialEq)]
pub enum Snapshot {
    Curvature { t: f64, g: Vec<f64>, phi: Vec<f64> },
    Curve { t: f64, curve: ClosedCurve },
}

impl Snapshot {
    pub fn t(&self) -> f64 {
        match self {
            Snapshot::Curvature { t, .. } | Snapshot::Curve { t, .. } => *t,
        }
    }
}

/// Time-ordered diagnostics records plus optional snapshots.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlowTrajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
}

impl FlowTrajectory {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn first(&self) -> Option<&DiagnosticsRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&DiagnosticsRecord> {
        self.records.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }
}

/// Number of steps of size `dt` needed to reach `t_end` from `t0`; the last
/// step is shortened when the span is not a multiple of `dt`.
pub(crate) fn step_count(t0: f64, t_end: f64, dt: f64) -> Result<usize> {
    if !(t_end > t0) {
        return Err(Error::InvalidParameter(format!(
            "t_end = {t_end} must exceed the start time {t0}"
        )));
    }
    Ok(((t_end - t0) / dt - 1e-9).ceil().max(1.0) as usize)
}

/// Step size for step `k` of `steps`, so that the last step lands on `t_end`.
pub(crate) fn step_size(k: usize, steps: usize, t0: f64, t_end: f64, dt: f64) -> (f64, f64) {
    let start = t0 + k as f64 * dt;
    let end = if k + 1 == steps {
        t_end
    } else {
        t0 + (k + 1) as f64 * dt
    };
    (start, end - start)
}
