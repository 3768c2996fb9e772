//! Diagnostics records along trajectories and pass/fail verdicts for the
//! identities, bounds and limits of the flow.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curve::{ClosedCurve, Vec2};
use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::invariants::{centro_affine, InvariantField};
use crate::spectral::Grid;

pub const MEAN_ZERO_TOLERANCE: f64 = 1e-8;
pub const ISOPERIMETRIC_TOLERANCE: f64 = 1e-8;
pub const EQUALITY_TOLERANCE: f64 = 1e-10;
pub const CURVATURE_BOUND_SLACK: f64 = 1e-6;
pub const IDENTITY_TOLERANCE: f64 = 1e-4;
pub const INTEGRAL_E_SLACK: f64 = 1e-6;
pub const CONVERGENCE_PHI: f64 = 1e-4;
pub const CONVERGENCE_PERIMETER: f64 = 1e-3;
pub const ELLIPSE_FIT_TOLERANCE: f64 = 1e-6;
pub const FAMILY_PHI_TOLERANCE: f64 = 1e-10;
pub const FAMILY_AREA_TOLERANCE: f64 = 1e-10;
pub const SOBOLEV_GROWTH_FACTOR: f64 = 10.0;

/// Scalar summary of one state along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `L = ∮ dξ`.
    pub perimeter: f64,
    /// `E = ∮ φ² dξ`.
    pub energy: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    /// `∮ φ dξ`.
    pub mean_phi: f64,
    /// `H_n = ∮ φ_{ξⁿ}² dξ` for `n = 1, 2, ...`.
    pub sobolev: Vec<f64>,
    /// `∮ φ⁴ dξ`.
    pub quartic: f64,
    /// `∮ φ² φ_ξ² dξ`.
    pub mixed: f64,
    pub energy_identity_residual: f64,
    pub h1_identity_residual: f64,
    /// Euclidean enclosed area, NaN when no curve is carried.
    pub area: f64,
}

impl DiagnosticsRecord {
    /// Record from a metric and curvature sampled on `grid`.
    pub fn from_metric(t: f64, grid: &Arc<Grid>, g: &[f64], phi: &[f64], orders: u32, area: f64) -> Self {
        let h = grid.spacing();
        let weighted = |f: &dyn Fn(usize) -> f64| h * (0..g.len()).map(|k| f(k) * g[k]).sum::<f64>();
        let mut sobolev = Vec::with_capacity(orders as usize);
        let mut cur = phi.to_vec();
        let mut first = Vec::new();
        for n in 1..=orders {
            let d = grid.derivative(&cur, 1);
            cur = d.iter().zip(g).map(|(a, b)| a / b).collect();
            sobolev.push(weighted(&|k| cur[k] * cur[k]));
            if n == 1 {
                first = cur.clone();
            }
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in phi {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        DiagnosticsRecord {
            t,
            perimeter: h * g.iter().sum::<f64>(),
            energy: weighted(&|k| phi[k] * phi[k]),
            phi_min: lo,
            phi_max: hi,
            mean_phi: weighted(&|k| phi[k]),
            quartic: weighted(&|k| phi[k].powi(4)),
            mixed: if first.is_empty() {
                f64::NAN
            } else {
                weighted(&|k| phi[k] * phi[k] * first[k] * first[k])
            },
            sobolev,
            energy_identity_residual: f64::NAN,
            h1_identity_residual: f64::NAN,
            area,
        }
    }

    pub fn from_field(t: f64, field: &InvariantField, orders: u32, area: f64) -> Self {
        DiagnosticsRecord::from_metric(t, field.grid(), field.g.values(), field.phi.values(), orders, area)
    }

    /// `H_n`, NaN when not recorded.
    pub fn h(&self, n: usize) -> f64 {
        n.checked_sub(1)
            .and_then(|i| self.sobolev.get(i))
            .copied()
            .unwrap_or(f64::NAN)
    }

    /// Right side of `dE/dt = −H1 − ½∮φ⁴ + 4E`.
    pub fn energy_rate(&self) -> f64 {
        -self.h(1) - 0.5 * self.quartic + 4.0 * self.energy
    }

    /// Right side of `dH1/dt = −H2 + 4H1 − (7/2)∮φ²φ_ξ²`.
    pub fn h1_rate(&self) -> f64 {
        -self.h(2) + 4.0 * self.h(1) - 3.5 * self.mixed
    }
}

/// Derivative at `x` of the parabola through three samples.
fn lagrange_slope(t: [f64; 3], f: [f64; 3], x: f64) -> f64 {
    f[0] * (2.0 * x - t[1] - t[2]) / ((t[0] - t[1]) * (t[0] - t[2]))
        + f[1] * (2.0 * x - t[0] - t[2]) / ((t[1] - t[0]) * (t[1] - t[2]))
        + f[2] * (2.0 * x - t[0] - t[1]) / ((t[2] - t[0]) * (t[2] - t[1]))
}

/// Time derivative of a recorded series by three-point differencing:
/// centered in the interior, one-sided at both ends.
pub fn recorded_rate(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = times.len();
    if n < 3 {
        return vec![f64::NAN; n];
    }
    (0..n)
        .map(|i| {
            let j = i.clamp(1, n - 2);
            lagrange_slope(
                [times[j - 1], times[j], times[j + 1]],
                [values[j - 1], values[j], values[j + 1]],
                times[i],
            )
        })
        .collect()
}

/// Fills the identity residuals of every record, each normalized by the
/// size of the terms involved.
pub fn fill_identity_residuals(records: &mut [DiagnosticsRecord]) {
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let e: Vec<f64> = records.iter().map(|r| r.energy).collect();
    let h1: Vec<f64> = records.iter().map(|r| r.h(1)).collect();
    let e_dot = recorded_rate(&times, &e);
    let h1_dot = recorded_rate(&times, &h1);
    for (i, r) in records.iter_mut().enumerate() {
        r.energy_identity_residual = (e_dot[i] - r.energy_rate()).abs() / (r.h(1) + r.energy + 1.0);
        r.h1_identity_residual = (h1_dot[i] - r.h1_rate()).abs() / (r.h(2) + r.h(1) + 1.0);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub context: String,
}

impl Verdict {
    /// `measured ≤ bound + tolerance`.
    pub fn at_most(name: &str, measured: f64, bound: f64, tolerance: f64, context: impl Into<String>) -> Self {
        Verdict {
            name: name.to_string(),
            passed: measured <= bound + tolerance,
            measured,
            bound,
            tolerance,
            context: context.into(),
        }
    }

    pub fn failed(name: &str, context: impl Into<String>) -> Self {
        Verdict {
            name: name.to_string(),
            passed: false,
            measured: f64::NAN,
            bound: f64::NAN,
            tolerance: f64::NAN,
            context: context.into(),
        }
    }
}

pub fn check_mean_zero(field: &InvariantField) -> Verdict {
    let l = field.perimeter();
    Verdict::at_most(
        "mean_zero",
        field.mean_integral().abs(),
        0.0,
        MEAN_ZERO_TOLERANCE * l,
        "|∮φ dξ| for a closed curve",
    )
}

/// Isoperimetric verdict plus whether the equality case `|L − 2π| ≤ 1e−10`
/// is attained.
pub fn check_isoperimetric(field: &InvariantField) -> (Verdict, bool) {
    let l = field.perimeter();
    let equality = (l - TAU).abs() <= EQUALITY_TOLERANCE;
    let context = format!("L - 2π = {:e}{}", l - TAU, if equality { "; equality case" } else { "" });
    (Verdict::at_most("isoperimetric", l, TAU, ISOPERIMETRIC_TOLERANCE, context), equality)
}

/// Every recorded extremum stays in `[min(−2, φ0_min), max(2, φ0_max)]`.
pub fn check_curvature_bounds(traj: &FlowTrajectory, phi0_min: f64, phi0_max: f64) -> Verdict {
    let lower = phi0_min.min(-2.0);
    let upper = phi0_max.max(2.0);
    let excursion = traj
        .records
        .iter()
        .map(|r| (r.phi_max - upper).max(lower - r.phi_min))
        .fold(f64::NEG_INFINITY, f64::max);
    Verdict::at_most(
        "curvature_bounds",
        excursion,
        0.0,
        CURVATURE_BOUND_SLACK,
        format!("worst excursion outside [{lower}, {upper}] over {} records", traj.len()),
    )
}

fn interior_max(traj: &FlowTrajectory, f: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
    let n = traj.len();
    traj.records[1..n - 1].iter().map(f).fold(0.0, |m: f64, v| if v.is_nan() { f64::NAN } else { m.max(v) })
}

/// Maximum normalized residuals of the `dE/dt` and `dH1/dt` identities over
/// interior records.
pub fn check_energy_identities(traj: &FlowTrajectory) -> Result<(Verdict, Verdict)> {
    if traj.len() < 5 {
        return Err(Error::InsufficientStride {
            needed: 5,
            got: traj.len(),
        });
    }
    let e = interior_max(traj, |r| r.energy_identity_residual);
    let h1 = interior_max(traj, |r| r.h1_identity_residual);
    Ok((
        Verdict::at_most(
            "energy_identity",
            e,
            0.0,
            IDENTITY_TOLERANCE,
            "max |Ė − (−H1 − ½∮φ⁴ + 4E)| / (H1 + E + 1)",
        ),
        Verdict::at_most(
            "h1_identity",
            h1,
            0.0,
            IDENTITY_TOLERANCE,
            "max |Ḣ1 − (−H2 + 4H1 − 7/2 ∮φ²φ_ξ²)| / (H2 + H1 + 1)",
        ),
    ))
}

/// Trapezoid `∫ E dt` over the recorded times.
pub fn integral_energy(traj: &FlowTrajectory) -> f64 {
    traj.records
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].energy + w[1].energy))
        .sum()
}

/// (a) `L` nondecreasing with `2 ΔL/Δt` matching the trapezoid mean of `E`;
/// (b) `∫ E dt ≤ 4π`.
pub fn check_monotone_l_and_integral_e(traj: &FlowTrajectory) -> (Verdict, Verdict) {
    let mut worst_drop = 0.0_f64;
    let mut worst_mismatch = 0.0_f64;
    for w in traj.records.windows(2) {
        let dl = w[1].perimeter - w[0].perimeter;
        worst_drop = worst_drop.max(-dl);
        let mismatch = (2.0 * dl / (w[1].t - w[0].t) - 0.5 * (w[0].energy + w[1].energy)).abs()
            / (1.0 + w[0].energy.max(w[1].energy));
        worst_mismatch = worst_mismatch.max(mismatch);
    }
    let l_scale = traj.first().map_or(1.0, |r| r.perimeter);
    let monotone = worst_drop <= 1e-12 * l_scale;
    let mut a = Verdict::at_most(
        "perimeter_monotone",
        worst_mismatch,
        0.0,
        IDENTITY_TOLERANCE,
        format!("max normalized |2ΔL/Δt − ½(E_i + E_i+1)|; largest drop of L {worst_drop:e}"),
    );
    a.passed &= monotone;
    let integral = integral_energy(traj);
    let b = Verdict::at_most(
        "integral_energy",
        integral,
        4.0 * PI,
        INTEGRAL_E_SLACK,
        format!("trapezoid ∫E dt over [{}, {}]", traj.first().map_or(0.0, |r| r.t), traj.last().map_or(0.0, |r| r.t)),
    );
    (a, b)
}

/// No recorded `H_n` exceeds ten times its maximum over the first unit of time.
pub fn check_sobolev_bounded(traj: &FlowTrajectory) -> Verdict {
    let Some(first) = traj.first() else {
        return Verdict::failed("sobolev_bounded", "empty trajectory");
    };
    let t0 = first.t;
    let orders = first.sobolev.len();
    let mut worst = 0.0_f64;
    for n in 0..orders {
        let early = traj
            .records
            .iter()
            .filter(|r| r.t <= t0 + 1.0)
            .map(|r| r.sobolev[n])
            .fold(0.0, f64::max);
        for r in &traj.records {
            let ratio = if early > 0.0 {
                r.sobolev[n] / early
            } else if r.sobolev[n] <= 1e-24 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(ratio);
        }
    }
    Verdict::at_most(
        "sobolev_bounded",
        worst,
        SOBOLEV_GROWTH_FACTOR,
        0.0,
        format!("max H_n / (max H_n over first unit of time), n = 1..{orders}"),
    )
}

/// Least-squares quadratic form `Q` with `CᵀQC ≈ 1` over the samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipseFit {
    /// `[[q11, q12], [q12, q22]]`.
    pub q: [[f64; 2]; 2],
    /// `max_k |C_kᵀ Q C_k − 1|`.
    pub residual: f64,
    pub positive_definite: bool,
}

pub fn fit_origin_ellipse(points: &[Vec2]) -> Option<EllipseFit> {
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for p in points {
        let row = [p.x * p.x, 2.0 * p.x * p.y, p.y * p.y];
        for i in 0..3 {
            rhs[i] += row[i];
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
        }
    }
    let [a, b, c] = solve3(m, rhs)?;
    let residual = points
        .iter()
        .map(|p| (a * p.x * p.x + 2.0 * b * p.x * p.y + c * p.y * p.y - 1.0).abs())
        .fold(0.0, f64::max);
    Some(EllipseFit {
        q: [[a, b], [b, c]],
        residual,
        positive_definite: a > 0.0 && a * c - b * b > 0.0,
    })
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        r.swap(col, pivot);
        for i in col + 1..3 {
            let f = m[i][col] / m[col][col];
            for j in col..3 {
                m[i][j] -= f * m[col][j];
            }
            r[i] -= f * r[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|j| m[i][j] * x[j]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Final-state convergence proxies: `max|φ|`, `|L − 2π|` and, when the curve
/// is available, the origin-centered ellipse fit.
pub fn check_convergence_to_ellipse(field_final: &InvariantField, curve_final: Option<&ClosedCurve>) -> Verdict {
    let phi = field_final.phi.max_abs();
    let dl = (field_final.perimeter() - TAU).abs();
    let fit = curve_final.map(|c| fit_origin_ellipse(c.points()));
    let (fit_ok, fit_text) = match fit {
        None => (true, "no curve carried, fit not evaluated".to_string()),
        Some(None) => (false, "ellipse fit singular".to_string()),
        Some(Some(f)) => (
            f.residual <= ELLIPSE_FIT_TOLERANCE && f.positive_definite,
            format!("fit residual {:e}, Q positive definite: {}", f.residual, f.positive_definite),
        ),
    };
    let mut v = Verdict::at_most(
        "convergence_to_ellipse",
        phi,
        0.0,
        CONVERGENCE_PHI,
        format!("final max|φ|; |L − 2π| = {dl:e} (tolerance {CONVERGENCE_PERIMETER:e}); {fit_text}"),
    );
    v.passed &= dl <= CONVERGENCE_PERIMETER && fit_ok;
    v
}

/// Scale factor `(a0 b0)^{(e^{2t} − 1)/2}` of the explicit ellipse family.
pub fn family_scale(a0: f64, b0: f64, t: f64) -> f64 {
    (a0 * b0).powf(0.5 * (2.0 * t).exp_m1())
}

/// Member of the explicit ellipse family `(a0 b0)^{(e^{2t}−1)/2} (a0 cos θ, b0 sin θ)`.
pub fn explicit_ellipse_family(a0: f64, b0: f64, t: f64, n: usize) -> Result<ClosedCurve> {
    if !(a0 > 0.0 && b0 > 0.0 && a0.is_finite() && b0.is_finite()) {
        return Err(Error::InvalidParameter(format!("family axes must be positive, got ({a0}, {b0})")));
    }
    let s = family_scale(a0, b0, t);
    ClosedCurve::from_fn(n, |p| Vec2::new(s * a0 * p.cos(), s * b0 * p.sin()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyMember {
    pub t: f64,
    pub scale: f64,
    /// Enclosed area of the sampled curve.
    pub area: f64,
    /// `π (a0 b0)^{e^{2t}}`.
    pub area_closed_form: f64,
    /// `max|∂ⁿφ/∂ξⁿ|` for `n = 0, 1, 2`.
    pub phi_sup: [f64; 3],
}

pub fn family_members(a0: f64, b0: f64, times: &[f64], n: usize) -> Result<Vec<FamilyMember>> {
    times
        .iter()
        .map(|&t| {
            let curve = explicit_ellipse_family(a0, b0, t, n)?;
            let field = centro_affine(&curve)?;
            Ok(FamilyMember {
                t,
                scale: family_scale(a0, b0, t),
                area: curve.area(),
                area_closed_form: PI * (a0 * b0).powf((2.0 * t).exp()),
                phi_sup: [0, 1, 2].map(|k| field.phi_xi(k).max_abs()),
            })
        })
        .collect()
}

/// Along decreasing `times`: `φ` and its first two ξ-derivatives vanish, the
/// area matches the closed form, and `|area − π|` never grows.
pub fn check_backward_limit_on_family(a0: f64, b0: f64, times: &[f64], n: usize) -> Result<Verdict> {
    if times.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("family times must be strictly decreasing".into()));
    }
    let members = family_members(a0, b0, times, n)?;
    let phi = members.iter().flat_map(|m| m.phi_sup).fold(0.0, f64::max);
    let area_err = members
        .iter()
        .map(|m| (m.area - m.area_closed_form).abs())
        .fold(0.0, f64::max);
    let gaps: Vec<f64> = members.iter().map(|m| (m.area - PI).abs()).collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0] + FAMILY_AREA_TOLERANCE);
    let mut v = Verdict::at_most(
        "backward_limit_family",
        phi,
        0.0,
        FAMILY_PHI_TOLERANCE,
        format!(
            "explicit family ({a0}, {b0}) stands in for an eternal solution; max|φ_ξⁿ|, n ≤ 2; \
             area error {area_err:e}; |area − π| monotone: {monotone}"
        ),
    );
    v.passed &= area_err <= FAMILY_AREA_TOLERANCE && monotone;
    Ok(v)
}
