//! The metric/curvature system
//!
//! ```text
//! g_t = ½ φ² g,     φ_t = ½ φ_ξξ − ½ φ³ + 2φ,     ∂_ξ = (1/g) ∂_p
//! ```
//!
//! on the fixed parameter grid, advanced with classical RK4.

use std::sync::Arc;

use super::{stability_bound, step_count, step_size, FlowSettings, FlowTrajectory, Snapshot};
use crate::curve::PeriodicField;
use crate::diagnostics::{fill_identity_residuals, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::invariants::{xi_derivative_unchecked, InvariantField};
use crate::spectral::Grid;

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureFlowState {
    pub t: f64,
    pub g: PeriodicField,
    pub phi: PeriodicField,
}

impl CurvatureFlowState {
    pub fn new(t: f64, g: PeriodicField, phi: PeriodicField) -> Result<Self> {
        if g.len() != phi.len() {
            return Err(Error::InvalidParameter("g and φ live on different grids".into()));
        }
        check_metric(g.values())?;
        Ok(CurvatureFlowState { t, g, phi })
    }

    /// Initial state `(g, φ)` taken from a curve's invariants at time 0.
    pub fn from_invariants(field: &InvariantField) -> Self {
        CurvatureFlowState {
            t: 0.0,
            g: field.g.clone(),
            phi: field.phi.clone(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.g.grid()
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    /// Stability bound for the current metric.
    pub fn dt_max(&self, cfl: f64) -> f64 {
        stability_bound(self.grid(), self.g.values(), cfl)
    }
}

fn check_metric(g: &[f64]) -> Result<()> {
    match g.iter().position(|&v| !(v > 0.0)) {
        Some(node) => Err(Error::DegenerateMetric {
            node,
            value: g[node],
        }),
        None => Ok(()),
    }
}

pub use crate::invariants::xi_derivative;

/// Time derivatives `(g_t, φ_t)`.
pub fn rhs(state: &CurvatureFlowState, dealias: bool) -> Result<(PeriodicField, PeriodicField)> {
    check_metric(state.g.values())?;
    let (gd, pd) = rhs_raw(state.grid(), state.g.values(), state.phi.values(), dealias);
    Ok((
        PeriodicField::from_parts(state.grid().clone(), gd),
        PeriodicField::from_parts(state.grid().clone(), pd),
    ))
}

fn rhs_raw(grid: &Arc<Grid>, g: &[f64], phi: &[f64], dealias: bool) -> (Vec<f64>, Vec<f64>) {
    let phi_xx = xi_derivative_unchecked(grid, phi, g, 2);
    let filtered;
    let cubic_base: &[f64] = if dealias {
        filtered = grid.two_thirds_filter(phi);
        &filtered
    } else {
        phi
    };
    let n = g.len();
    let mut g_dot = Vec::with_capacity(n);
    let mut phi_dot = Vec::with_capacity(n);
    for k in 0..n {
        let f = phi[k];
        let c = cubic_base[k];
        g_dot.push(0.5 * f * f * g[k]);
        phi_dot.push(0.5 * phi_xx.values()[k] - 0.5 * c * c * c + 2.0 * f);
    }
    (g_dot, phi_dot)
}

fn axpy(base: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    base.iter().zip(k).map(|(b, d)| b + h * d).collect()
}

/// One RK4 step of size `dt`.
pub fn step(state: &CurvatureFlowState, dt: f64, settings: &FlowSettings) -> Result<CurvatureFlowState> {
    let dt_max = state.dt_max(settings.cfl);
    if dt > dt_max * (1.0 + 1e-12) {
        return Err(Error::StabilityViolation { dt, dt_max });
    }
    let grid = state.grid();
    let (g0, p0) = (state.g.values(), state.phi.values());
    let dealias = settings.dealias;
    let (kg1, kp1) = rhs_raw(grid, g0, p0, dealias);
    let (g1, p1) = (axpy(g0, 0.5 * dt, &kg1), axpy(p0, 0.5 * dt, &kp1));
    check_metric(&g1)?;
    let (kg2, kp2) = rhs_raw(grid, &g1, &p1, dealias);
    let (g2, p2) = (axpy(g0, 0.5 * dt, &kg2), axpy(p0, 0.5 * dt, &kp2));
    check_metric(&g2)?;
    let (kg3, kp3) = rhs_raw(grid, &g2, &p2, dealias);
    let (g3, p3) = (axpy(g0, dt, &kg3), axpy(p0, dt, &kp3));
    check_metric(&g3)?;
    let (kg4, kp4) = rhs_raw(grid, &g3, &p3, dealias);
    let n = g0.len();
    let mut g = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    for k in 0..n {
        g.push(g0[k] + dt / 6.0 * (kg1[k] + 2.0 * kg2[k] + 2.0 * kg3[k] + kg4[k]));
        phi.push(p0[k] + dt / 6.0 * (kp1[k] + 2.0 * kp2[k] + 2.0 * kp3[k] + kp4[k]));
    }
    check_metric(&g)?;
    if let Some(node) = phi.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { node });
    }
    let peak = phi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak > settings.blowup_ceiling {
        return Err(Error::BlowUp {
            quantity: "max|phi|",
            value: peak,
            ceiling: settings.blowup_ceiling,
        });
    }
    Ok(CurvatureFlowState {
        t: state.t + dt,
        g: PeriodicField::from_parts(grid.clone(), g),
        phi: PeriodicField::from_parts(grid.clone(), phi),
    })
}

/// Diagnostics of a `(g, φ)` pair. The Euclidean area is unknown here and
/// reported as NaN.
pub fn record(state: &CurvatureFlowState, sobolev_orders: u32) -> DiagnosticsRecord {
    DiagnosticsRecord::from_metric(state.t, state.grid(), state.g.values(), state.phi.values(), sobolev_orders, f64::NAN)
}

/// Integrates to `t_end`, recording every `record_stride` steps and calling
/// `observer` on each record as it is produced. Identity residuals are filled
/// in once the run finishes. On failure the error carries the failure time.
pub fn evolve(
    state: &CurvatureFlowState,
    t_end: f64,
    settings: &FlowSettings,
    mut observer: impl FnMut(&DiagnosticsRecord),
) -> Result<(CurvatureFlowState, FlowTrajectory)> {
    settings.validate()?;
    let steps = step_count(state.t, t_end, settings.dt)?;
    let orders = settings.sobolev_orders();
    let mut traj = FlowTrajectory::default();
    let mut cur = state.clone();
    let t0 = state.t;
    let push = |cur: &CurvatureFlowState, traj: &mut FlowTrajectory, observer: &mut dyn FnMut(&DiagnosticsRecord)| {
        let rec = record(cur, orders);
        observer(&rec);
        let idx = traj.records.len();
        traj.records.push(rec);
        if settings.snapshot_stride > 0 && idx % settings.snapshot_stride == 0 {
            traj.snapshots.push(Snapshot::Curvature {
                t: cur.t,
                g: cur.g.values().to_vec(),
                phi: cur.phi.values().to_vec(),
            });
        }
    };
    push(&cur, &mut traj, &mut observer);
    for k in 0..steps {
        let (start, h) = step_size(k, steps, t0, t_end, settings.dt);
        let mut next = step(&cur, h, settings).map_err(|e| e.at_time(start))?;
        next.t = start + h;
        cur = next;
        if (k + 1) % settings.record_stride == 0 {
            push(&cur, &mut traj, &mut observer);
        }
    }
    fill_identity_residuals(&mut traj.records);
    Ok((cur, traj))
}
