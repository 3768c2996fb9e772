//! The nonlocal curve flow
//!
//! ```text
//! C_t = (λ + ∫₀^{ξ(p)} φ dξ) C + (φ/2) C_ξ,     C_ξ = C_p / g
//! ```
//!
//! The shape moves only through the component of the velocity along `C`;
//! the tangential part relabels points. Stepping the material samples
//! directly is unstable at any useful resolution: the tangential speed
//! carries a third derivative whose effect on the shape cancels only in the
//! continuum, and the discrete products break the cancellation by an amount
//! growing like `k³`. The state is advanced instead on the fixed rays of the
//! initial curve. With `A(q)` the polar angle of the initial sample `q`,
//!
//! ```text
//! R(q, t) = r(q, t) (cos A(q), sin A(q)),     r_t = pot(q) r,
//! P_t = φ / (2 g)  at q = P,
//! ```
//!
//! where `φ, g, pot` belong to the ray curve `R` and `P(p_k, t)` is the ray
//! parameter currently holding material point `p_k`, so that
//! `C(p_k) = R(P_k)` by trigonometric interpolation.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::curvature::{self, CurvatureFlowState};
use super::{stability_bound, step_count, step_size, FlowSettings, FlowTrajectory, Snapshot};
use crate::curve::{bracket, ClosedCurve, PeriodicField, Vec2};
use crate::diagnostics::{fill_identity_residuals, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::invariants::{centro_affine, InvariantField};
use crate::spectral::{Grid, TrigInterpolant};

/// Coordinates beyond this radius count as overflow.
pub const COORDINATE_CEILING: f64 = 1e100;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    /// Rescale by `√(π / area)` after every step.
    #[default]
    UnitAreaScale,
}

#[derive(Clone, Debug, PartialEq)]
struct Rays {
    /// `A(q_j) − w q_j`, periodic.
    angle: Vec<f64>,
    /// Winding of `A`, `±1`.
    winding: f64,
    r: Vec<f64>,
    /// Ray parameter of each material node.
    labels: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveFlowState {
    t: f64,
    curve: ClosedCurve,
    lambda: f64,
    normalization: Normalization,
    rays: Rays,
}

impl CurveFlowState {
    /// Starts at `t = 0` from a star-shaped curve with `ε = 1`.
    pub fn new(curve: ClosedCurve, lambda: f64, normalization: Normalization) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be finite".into()));
        }
        admissible_field(&curve)?;
        let rays = Rays::from_curve(&curve)?;
        Ok(CurveFlowState {
            t: 0.0,
            curve,
            lambda,
            normalization,
            rays,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Material samples `C(p_k, t)`.
    pub fn curve(&self) -> &ClosedCurve {
        &self.curve
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// The same shape sampled on the fixed rays.
    pub fn ray_curve(&self) -> Result<ClosedCurve> {
        self.rays.curve(self.curve.grid())
    }

    pub fn invariants(&self) -> Result<InvariantField> {
        admissible_field(&self.curve)
    }
}

/// Invariants of a star-shaped curve with `ε = 1`.
fn admissible_field(curve: &ClosedCurve) -> Result<InvariantField> {
    let field = centro_affine(curve)?;
    if field.epsilon < 0.0 {
        return Err(Error::NotConvex { node: 0 });
    }
    Ok(field)
}

/// `λ + ∫₀^{p_k} φ g dp`. The integrand's discrete mean, which vanishes for
/// closed curves up to truncation, is removed first so the potential stays
/// periodic; a leftover ramp would feed a sawtooth into `C`.
pub fn nonlocal_potential(field: &InvariantField, lambda: f64) -> PeriodicField {
    let mut integrand: Vec<f64> = field
        .phi
        .values()
        .iter()
        .zip(field.g.values())
        .map(|(f, g)| f * g)
        .collect();
    let mean = integrand.iter().sum::<f64>() / integrand.len() as f64;
    integrand.iter_mut().for_each(|v| *v -= mean);
    let values = field
        .grid()
        .cumulative_integral(&integrand)
        .into_iter()
        .map(|v| lambda + v)
        .collect();
    PeriodicField::from_parts(field.grid().clone(), values)
}

/// Same potential with the integral anchored at node `base` instead of `p = 0`.
pub fn nonlocal_potential_from(field: &InvariantField, lambda: f64, base: usize) -> Result<PeriodicField> {
    if base >= field.g.len() {
        return Err(Error::InvalidParameter(format!("base node {base} outside the grid")));
    }
    let anchored = nonlocal_potential(field, 0.0);
    let shift = anchored.values()[base];
    Ok(anchored.map(|v| lambda + v - shift))
}

/// Velocity `(λ + ∫₀^ξ φ dξ) C + (φ/2) C_ξ` at every material node.
pub fn rhs(state: &CurveFlowState) -> Result<Vec<Vec2>> {
    let curve = &state.curve;
    let field = admissible_field(curve)?;
    let potential = nonlocal_potential(&field, state.lambda);
    let cp = curve.derivative(1)?;
    Ok((0..curve.len())
        .map(|k| {
            let half_phi = 0.5 * field.phi.values()[k] / field.g.values()[k];
            curve.points()[k] * potential.values()[k] + cp[k] * half_phi
        })
        .collect())
}

impl Rays {
    fn from_curve(curve: &ClosedCurve) -> Result<Rays> {
        let grid = curve.grid();
        let pts = curve.points();
        let mut unwrapped = Vec::with_capacity(pts.len());
        unwrapped.push(pts[0].y.atan2(pts[0].x));
        for k in 1..pts.len() {
            let (u, v) = (pts[k - 1], pts[k]);
            unwrapped.push(unwrapped[k - 1] + bracket(u, v).atan2(u.x * v.x + u.y * v.y));
        }
        let winding = curve.signed_area().signum();
        Ok(Rays {
            angle: unwrapped.iter().zip(grid.nodes()).map(|(a, q)| a - winding * q).collect(),
            winding,
            r: pts.iter().map(|p| p.norm()).collect(),
            labels: grid.nodes().collect(),
        })
    }

    fn curve(&self, grid: &Arc<Grid>) -> Result<ClosedCurve> {
        ClosedCurve::new(
            grid.nodes()
                .zip(&self.angle)
                .zip(&self.r)
                .map(|((q, &a), &r)| {
                    let theta = a + self.winding * q;
                    Vec2::new(r * theta.cos(), r * theta.sin())
                })
                .collect(),
        )
    }

    fn material(&self, grid: &Arc<Grid>) -> Result<ClosedCurve> {
        let (ri, ai) = (grid.interpolant(&self.r), grid.interpolant(&self.angle));
        ClosedCurve::new(
            self.labels
                .iter()
                .map(|&q| {
                    let (r, theta) = (ri.eval(q), ai.eval(q) + self.winding * q);
                    Vec2::new(r * theta.cos(), r * theta.sin())
                })
                .collect(),
        )
    }

    fn field(&self, grid: &Arc<Grid>) -> Result<InvariantField> {
        if let Some(node) = self.r.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::NotStarShaped { node });
        }
        admissible_field(&self.curve(grid)?)
    }

    /// `(r_t, P_t)`.
    fn rates(&self, field: &InvariantField, lambda: f64) -> (Vec<f64>, Vec<f64>) {
        let grid = field.grid();
        let anchored = nonlocal_potential(field, 0.0);
        let base = TrigInterpolant::new(grid, anchored.values()).eval(self.labels[0]);
        let r_dot = anchored
            .values()
            .iter()
            .zip(&self.r)
            .map(|(&pot, &r)| (lambda + pot - base) * r)
            .collect();
        let speed: Vec<f64> = field
            .phi
            .values()
            .iter()
            .zip(field.g.values())
            .map(|(f, g)| 0.5 * f / g)
            .collect();
        let speed = TrigInterpolant::new(grid, &speed);
        let label_dot = self.labels.iter().map(|&q| speed.eval(q)).collect();
        (r_dot, label_dot)
    }

    fn advanced(&self, h: f64, r_dot: &[f64], label_dot: &[f64]) -> Rays {
        Rays {
            r: self.r.iter().zip(r_dot).map(|(r, d)| r + h * d).collect(),
            labels: self.labels.iter().zip(label_dot).map(|(l, d)| l + h * d).collect(),
            ..self.clone()
        }
    }
}

/// Largest stable step. The ray curve's metric sets the diffusion scale of
/// the stepped variables.
pub fn dt_max(state: &CurveFlowState, cfl: f64) -> Result<f64> {
    let field = state.rays.field(state.curve.grid())?;
    Ok(stability_bound(field.grid(), field.g.values(), cfl))
}

/// One RK4 step, followed by renormalization when requested.
pub fn step(state: &CurveFlowState, dt: f64, settings: &FlowSettings) -> Result<CurveFlowState> {
    let field = state.rays.field(state.curve.grid())?;
    step_with_field(state, &field, dt, settings).map(|(s, _)| s)
}

fn step_with_field(
    state: &CurveFlowState,
    field: &InvariantField,
    dt: f64,
    settings: &FlowSettings,
) -> Result<(CurveFlowState, InvariantField)> {
    let grid = state.curve.grid();
    let dt_max = stability_bound(grid, field.g.values(), settings.cfl);
    if dt > dt_max * (1.0 + 1e-12) {
        return Err(Error::StabilityViolation { dt, dt_max });
    }
    let lambda = state.lambda;
    let p0 = &state.rays;
    let (r1, l1) = p0.rates(field, lambda);
    let s1 = p0.advanced(0.5 * dt, &r1, &l1);
    let (r2, l2) = s1.rates(&s1.field(grid)?, lambda);
    let s2 = p0.advanced(0.5 * dt, &r2, &l2);
    let (r3, l3) = s2.rates(&s2.field(grid)?, lambda);
    let s3 = p0.advanced(dt, &r3, &l3);
    let (r4, l4) = s3.rates(&s3.field(grid)?, lambda);
    let combine = |a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..a.len()).map(|i| (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]) / 6.0).collect()
    };
    let mut rays = p0.advanced(dt, &combine(&r1, &r2, &r3, &r4), &combine(&l1, &l2, &l3, &l4));
    match state.normalization {
        Normalization::UnitAreaScale => {
            let scale = (PI / rays.curve(grid)?.area()).sqrt();
            rays.r.iter_mut().for_each(|r| *r *= scale);
        }
        Normalization::None => {
            let peak = rays.r.iter().fold(0.0_f64, |m, &r| m.max(r));
            if !(peak <= COORDINATE_CEILING) {
                return Err(Error::BlowUp {
                    quantity: "max|C|",
                    value: peak,
                    ceiling: COORDINATE_CEILING,
                });
            }
        }
    }
    let next_field = rays.field(grid)?;
    let peak = next_field.phi.max_abs();
    if !(peak <= settings.blowup_ceiling) {
        return Err(Error::BlowUp {
            quantity: "max|phi|",
            value: peak,
            ceiling: settings.blowup_ceiling,
        });
    }
    let curve = rays.material(grid)?;
    Ok((
        CurveFlowState {
            t: state.t + dt,
            curve,
            rays,
            ..state.clone()
        },
        next_field,
    ))
}

/// Diagnostics of the material curve.
pub fn record(state: &CurveFlowState, sobolev_orders: u32) -> Result<DiagnosticsRecord> {
    let field = state.invariants()?;
    Ok(DiagnosticsRecord::from_field(state.t, &field, sobolev_orders, state.curve.area()))
}

/// Integrates to `t_end` on the same schedule as the curvature flow.
pub fn evolve(
    state: &CurveFlowState,
    t_end: f64,
    settings: &FlowSettings,
    mut observer: impl FnMut(&DiagnosticsRecord),
) -> Result<(CurveFlowState, FlowTrajectory)> {
    settings.validate()?;
    let steps = step_count(state.t, t_end, settings.dt)?;
    let orders = settings.sobolev_orders();
    let t0 = state.t;
    let grid = state.curve.grid().clone();
    let mut traj = FlowTrajectory::default();
    let mut cur = state.clone();
    let mut push = |cur: &CurveFlowState, traj: &mut FlowTrajectory| -> Result<()> {
        let rec = record(cur, orders).map_err(|e| e.at_time(cur.t))?;
        observer(&rec);
        let idx = traj.records.len();
        traj.records.push(rec);
        if settings.snapshot_stride > 0 && idx % settings.snapshot_stride == 0 {
            traj.snapshots.push(Snapshot::Curve {
                t: cur.t,
                curve: cur.curve.clone(),
            });
        }
        Ok(())
    };
    push(&cur, &mut traj)?;
    let mut field = cur.rays.field(&grid).map_err(|e| e.at_time(t0))?;
    for k in 0..steps {
        let (start, h) = step_size(k, steps, t0, t_end, settings.dt);
        let (mut next, next_field) = step_with_field(&cur, &field, h, settings).map_err(|e| e.at_time(start))?;
        next.t = start + h;
        cur = next;
        field = next_field;
        if (k + 1) % settings.record_stride == 0 {
            push(&cur, &mut traj)?;
        }
    }
    fill_identity_residuals(&mut traj.records);
    Ok((cur, traj))
}

/// Runs both flows from `curve0` on one schedule and returns the largest
/// sup-norm gap between the curve's φ and the scalar flow's φ over all
/// recorded times.
pub fn consistency_check(
    curve0: &ClosedCurve,
    t_end: f64,
    settings: &FlowSettings,
    lambda: f64,
    normalization: Normalization,
) -> Result<f64> {
    Ok(consistency_series(curve0, t_end, settings, lambda, normalization)?
        .into_iter()
        .map(|(_, gap)| gap)
        .fold(0.0, f64::max))
}

/// `(t, sup_k |φ_curve − φ_scalar|)` at every recorded time.
pub fn consistency_series(
    curve0: &ClosedCurve,
    t_end: f64,
    settings: &FlowSettings,
    lambda: f64,
    normalization: Normalization,
) -> Result<Vec<(f64, f64)>> {
    let settings = FlowSettings {
        snapshot_stride: 1,
        ..settings.clone()
    };
    let curve_state = CurveFlowState::new(curve0.clone(), lambda, normalization)?;
    let scalar_state = CurvatureFlowState::from_invariants(&curve_state.invariants()?);
    let (_, curve_traj) = evolve(&curve_state, t_end, &settings, |_| {})?;
    let (_, scalar_traj) = curvature::evolve(&scalar_state, t_end, &settings, |_| {})?;
    curve_traj
        .snapshots
        .iter()
        .zip(&scalar_traj.snapshots)
        .map(|pair| {
            let (Snapshot::Curve { t, curve }, Snapshot::Curvature { phi, .. }) = pair else {
                unreachable!("snapshot kinds are fixed by the flow");
            };
            let field = centro_affine(curve)?;
            let gap = field
                .phi
                .values()
                .iter()
                .zip(phi)
                .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
            Ok((*t, gap))
        })
        .collect()
}
