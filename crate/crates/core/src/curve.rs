//! Closed plane curves sampled on a uniform periodic grid.

use std::f64::consts::TAU;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Grid;

/// Relative threshold below which a bracket value counts as zero in the
/// sign scans.
pub const SIGN_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Vec2 { x, y }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

/// The determinant `[a, b] = a_x b_y − a_y b_x`.
#[inline]
pub fn bracket(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// A real scalar field on the periodic grid.
#[derive(Clone, Debug)]
pub struct PeriodicField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl PartialEq for PeriodicField {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl PeriodicField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values for a grid of {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(PeriodicField { grid, values })
    }

    /// Samples `f(p_k)` at every node.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        PeriodicField::new(grid, values)
    }

    pub fn constant(grid: Arc<Grid>, value: f64) -> Result<Self> {
        let values = vec![value; grid.len()];
        PeriodicField::new(grid, values)
    }

    pub(crate) fn from_parts(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        PeriodicField { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PeriodicField {
        PeriodicField::from_parts(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &PeriodicField, f: impl Fn(f64, f64) -> f64) -> PeriodicField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        PeriodicField::from_parts(self.grid.clone(), values)
    }

    /// Spectral p-derivative; rejects order 0.
    pub fn derivative(&self, order: u32) -> Result<PeriodicField> {
        if order == 0 {
            return Err(Error::InvalidParameter("derivative order must be >= 1".into()));
        }
        Ok(PeriodicField::from_parts(
            self.grid.clone(),
            self.grid.derivative(&self.values, order),
        ))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `(2π/N) Σ values_k`, spectrally accurate for smooth periodic integrands.
pub fn periodic_integral(field: &PeriodicField) -> f64 {
    field.grid.integrate(&field.values)
}

/// Samples of `C` and its first three p-derivatives.
#[derive(Clone, Debug)]
pub struct CurveDerivatives {
    pub c: Vec<Vec2>,
    pub cp: Vec<Vec2>,
    pub cpp: Vec<Vec2>,
    pub cppp: Vec<Vec2>,
}

/// Uniform samples `C(p_k)`, `p_k = 2πk/N`, of a closed plane curve.
#[derive(Clone, Debug)]
pub struct ClosedCurve {
    grid: Arc<Grid>,
    points: Vec<Vec2>,
}

impl PartialEq for ClosedCurve {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

impl ClosedCurve {
    /// Builds a curve from samples; checks grid size and finiteness only.
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        let grid = Grid::shared(points.len())?;
        if let Some(node) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(ClosedCurve { grid, points })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> Vec2) -> Result<Self> {
        let grid = Grid::shared(n)?;
        let points = grid.nodes().map(f).collect();
        ClosedCurve::new(points)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vec2> {
        self.points
    }

    fn spectrum(&self) -> Vec<Complex64> {
        let mut spec: Vec<Complex64> = self
            .points
            .iter()
            .map(|p| Complex64::new(p.x, p.y))
            .collect();
        self.grid.forward(&mut spec);
        self.grid.chop(&mut spec);
        spec
    }

    fn unpack(z: &[Complex64]) -> Vec<Vec2> {
        z.iter().map(|c| Vec2::new(c.re, c.im)).collect()
    }

    /// Component-wise spectral derivative of order `order >= 1`.
    pub fn derivative(&self, order: u32) -> Result<Vec<Vec2>> {
        if order == 0 {
            return Err(Error::InvalidParameter("derivative order must be >= 1".into()));
        }
        let spec = self.spectrum();
        let out = self.grid.derivatives_from_spectrum(&spec, &[order]);
        Ok(Self::unpack(&out[0]))
    }

    /// `C, C_p, C_pp, C_ppp` from a single forward transform.
    pub fn derivatives(&self) -> CurveDerivatives {
        let spec = self.spectrum();
        let mut out = self.grid.derivatives_from_spectrum(&spec, &[1, 2, 3]);
        let cppp = Self::unpack(&out.pop().unwrap());
        let cpp = Self::unpack(&out.pop().unwrap());
        let cp = Self::unpack(&out.pop().unwrap());
        CurveDerivatives {
            c: self.points.clone(),
            cp,
            cpp,
            cppp,
        }
    }

    /// `[C, C_p]` at every node, the centro-equiaffine arc-length density.
    pub fn star_bracket(&self) -> Vec<f64> {
        let cp = self.derivative(1).expect("order 1");
        self.points.iter().zip(&cp).map(|(&c, &d)| bracket(c, d)).collect()
    }

    /// `[C_p, C_pp]` at every node.
    pub fn convexity_bracket(&self) -> Vec<f64> {
        let spec = self.spectrum();
        let out = self.grid.derivatives_from_spectrum(&spec, &[1, 2]);
        out[0]
            .iter()
            .zip(&out[1])
            .map(|(a, b)| a.re * b.im - a.im * b.re)
            .collect()
    }

    pub fn is_star_shaped(&self) -> bool {
        strict_sign(&self.star_bracket()).is_ok()
    }

    pub fn is_convex(&self) -> bool {
        strict_sign(&self.convexity_bracket()).is_ok()
    }

    /// Signed Euclidean area `½ ∮ [C, C_p] dp`; positive for counter-clockwise
    /// traversal.
    pub fn signed_area(&self) -> f64 {
        0.5 * self.grid.integrate(&self.star_bracket())
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Applies `x ↦ A x` to every sample, `A = [[a11, a12], [a21, a22]]`.
    pub fn transformed(&self, a: [[f64; 2]; 2]) -> Result<ClosedCurve> {
        let points = self
            .points
            .iter()
            .map(|p| Vec2::new(a[0][0] * p.x + a[0][1] * p.y, a[1][0] * p.x + a[1][1] * p.y))
            .collect();
        ClosedCurve::new(points)
    }

    pub fn scaled(&self, s: f64) -> Result<ClosedCurve> {
        self.transformed([[s, 0.0], [0.0, s]])
    }

    /// Trigonometric interpolation onto `m` nodes.
    pub fn resampled(&self, m: usize) -> Result<ClosedCurve> {
        let xs: Vec<f64> = self.points.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = self.points.iter().map(|p| p.y).collect();
        let xs = self.grid.resample(&xs, m)?;
        let ys = self.grid.resample(&ys, m)?;
        ClosedCurve::new(xs.into_iter().zip(ys).map(|(x, y)| Vec2::new(x, y)).collect())
    }

    pub fn max_radius(&self) -> f64 {
        self.points.iter().fold(0.0, |m, p| m.max(p.norm()))
    }
}

/// Returns the common sign (+1 or −1) of `values`, or the first node where a
/// value is zero within `SIGN_TOLERANCE · max|values|` or disagrees in sign.
pub fn strict_sign(values: &[f64]) -> std::result::Result<f64, usize> {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(0);
    }
    let threshold = SIGN_TOLERANCE * scale;
    let sign = values[0].signum();
    for (k, &v) in values.iter().enumerate() {
        if v.abs() <= threshold || v.signum() != sign {
            return Err(k);
        }
    }
    Ok(sign)
}

pub fn check_star_shaped(curve: &ClosedCurve) -> bool {
    curve.is_star_shaped()
}

pub fn check_convex(curve: &ClosedCurve) -> bool {
    curve.is_convex()
}

/// Curve presets. Radial presets use the polar form `r(p) (cos p, sin p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preset {
    OriginEllipse { a: f64, b: f64 },
    ShiftedEllipse { a: f64, b: f64, x0: f64, y0: f64 },
    PerturbedEllipse { a: f64, b: f64, amplitude: f64, mode: u32 },
    /// `r(p) = r0 + Σ_k (cos_k[k−1] cos kp + sin_k[k−1] sin kp)`.
    StarConvex {
        r0: f64,
        cos: Vec<f64>,
        sin: Vec<f64>,
        #[serde(default)]
        require_convex: bool,
    },
}

impl Preset {
    /// Largest Fourier mode present in the preset's radius or coordinates.
    fn highest_mode(&self) -> usize {
        match self {
            Preset::OriginEllipse { .. } | Preset::ShiftedEllipse { .. } => 1,
            Preset::PerturbedEllipse { mode, .. } => *mode as usize + 1,
            Preset::StarConvex { cos, sin, .. } => cos.len().max(sin.len()),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Preset::OriginEllipse { .. } => "origin_ellipse",
            Preset::ShiftedEllipse { .. } => "shifted_ellipse",
            Preset::PerturbedEllipse { .. } => "perturbed_ellipse",
            Preset::StarConvex { .. } => "star_convex",
        }
    }

    /// A random convex star-shaped preset with radius modes 1..=6 and
    /// amplitudes decaying like `1/k²`. Deterministic in `seed`.
    pub fn random_star_convex(seed: u64) -> Preset {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let modes = 6;
        let amp = 0.12;
        let mut cos = Vec::with_capacity(modes);
        let mut sin = Vec::with_capacity(modes);
        for k in 1..=modes {
            let bound = amp / (k * k) as f64;
            cos.push(rng.gen_range(-bound..=bound));
            sin.push(rng.gen_range(-bound..=bound));
        }
        Preset::StarConvex {
            r0: 1.0,
            cos,
            sin,
            require_convex: true,
        }
    }
}

/// Samples a preset on `n` nodes and validates it.
pub fn preset(kind: &Preset, n: usize) -> Result<ClosedCurve> {
    let grid = Grid::shared(n)?;
    if kind.highest_mode() > n / 8 {
        return Err(Error::InvalidParameter(format!(
            "{} uses mode {} above N/8 = {}",
            kind.name(),
            kind.highest_mode(),
            n / 8
        )));
    }
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
        }
    };
    let radial = |r: &dyn Fn(f64) -> f64| {
        ClosedCurve::from_fn(n, |p| {
            let rr = r(p);
            Vec2::new(rr * p.cos(), rr * p.sin())
        })
    };
    let curve = match kind {
        Preset::OriginEllipse { a, b } => {
            positive("a", *a)?;
            positive("b", *b)?;
            ClosedCurve::from_fn(n, |p| Vec2::new(a * p.cos(), b * p.sin()))?
        }
        Preset::ShiftedEllipse { a, b, x0, y0 } => {
            positive("a", *a)?;
            positive("b", *b)?;
            ClosedCurve::from_fn(n, |p| Vec2::new(x0 + a * p.cos(), y0 + b * p.sin()))?
        }
        Preset::PerturbedEllipse {
            a,
            b,
            amplitude,
            mode,
        } => {
            positive("a", *a)?;
            positive("b", *b)?;
            let m = *mode as f64;
            ClosedCurve::from_fn(n, |p| {
                let r = 1.0 + amplitude * (m * p).cos();
                Vec2::new(a * r * p.cos(), b * r * p.sin())
            })?
        }
        Preset::StarConvex {
            r0, cos, sin, ..
        } => {
            positive("r0", *r0)?;
            radial(&|p: f64| {
                let mut r = *r0;
                for (k, (c, s)) in cos.iter().zip(sin.iter()).enumerate() {
                    let kp = (k + 1) as f64 * p;
                    r += c * kp.cos() + s * kp.sin();
                }
                r
            })?
        }
    };
    if let Err(node) = strict_sign(&curve.star_bracket()) {
        return Err(Error::NotStarShaped { node });
    }
    let wants_convex = matches!(
        kind,
        Preset::StarConvex {
            require_convex: true,
            ..
        }
    );
    if wants_convex {
        if let Err(node) = strict_sign(&curve.convexity_bracket()) {
            return Err(Error::NotConvex { node });
        }
    }
    debug_assert_eq!(curve.grid().len(), grid.len());
    Ok(curve)
}

/// On-disk curve format: uniform periodic samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub name: String,
    pub points: Vec<[f64; 2]>,
}

impl CurveFile {
    pub fn from_curve(name: impl Into<String>, curve: &ClosedCurve) -> Self {
        CurveFile {
            name: name.into(),
            points: curve.points().iter().map(|&p| p.into()).collect(),
        }
    }

    pub fn to_curve(&self) -> Result<ClosedCurve> {
        ClosedCurve::new(self.points.iter().map(|&p| p.into()).collect())
    }

    pub fn read(path: &Path) -> Result<CurveFile> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Total turning of the polygon through the samples, in units of 2π.
pub fn winding_about_origin(curve: &ClosedCurve) -> f64 {
    let pts = curve.points();
    let mut total = 0.0;
    for k in 0..pts.len() {
        let a = pts[k];
        let b = pts[(k + 1) % pts.len()];
        total += bracket(a, b).atan2(a.x * b.x + a.y * b.y);
    }
    total / TAU
}
