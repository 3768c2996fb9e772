//! Centro-equiaffine and centro-affine differential invariants.
//!
//! With `s = [C, C_p]` the centro-equiaffine arc-length density, the
//! centro-equiaffine curvature is `μ = [C_p, C_pp] / s³`. The centro-affine
//! metric is `g = dξ/dp = √(ε [C_p, C_pp] / [C, C_p])` and the centro-affine
//! curvature is
//!
//! ```text
//! φ = √(ε [C, C_p] / [C_p, C_pp]) · (3/2 [C, C_pp]/[C, C_p] − 1/2 [C_p, C_ppp]/[C_p, C_pp])
//! ```
//!
//! Both invariants are unchanged by `C ↦ A C` for any invertible `A`.

use std::sync::Arc;

use crate::curve::{bracket, periodic_integral, strict_sign, ClosedCurve, PeriodicField};
use crate::error::{Error, Result};
use crate::spectral::Grid;

#[derive(Clone, Debug, PartialEq)]
pub struct CentroEquiaffine {
    /// `dσ/dp = [C, C_p]`.
    pub sigma_density: PeriodicField,
    pub mu: PeriodicField,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantField {
    pub epsilon: f64,
    pub sigma_density: PeriodicField,
    pub mu: PeriodicField,
    /// `dξ/dp`.
    pub g: PeriodicField,
    /// `ξ(p) = ∫₀^p g`.
    pub xi: PeriodicField,
    pub phi: PeriodicField,
}

fn star_density(curve: &ClosedCurve, c: &[crate::curve::Vec2], cp: &[crate::curve::Vec2]) -> Result<Vec<f64>> {
    let s: Vec<f64> = c.iter().zip(cp).map(|(&a, &b)| bracket(a, b)).collect();
    strict_sign(&s).map_err(|node| Error::NotStarShaped { node })?;
    debug_assert_eq!(s.len(), curve.len());
    Ok(s)
}

pub fn centro_equiaffine(curve: &ClosedCurve) -> Result<CentroEquiaffine> {
    let d = curve.derivatives();
    let s = star_density(curve, &d.c, &d.cp)?;
    let mu = d
        .cp
        .iter()
        .zip(&d.cpp)
        .zip(&s)
        .map(|((&a, &b), &s)| bracket(a, b) / (s * s * s))
        .collect();
    let grid = curve.grid().clone();
    Ok(CentroEquiaffine {
        sigma_density: PeriodicField::from_parts(grid.clone(), s),
        mu: PeriodicField::from_parts(grid, mu),
    })
}

/// Pointwise `|μ C + C_σσ|` using `C_σσ = (C_pp − (s_p/s) C_p)/s²` with
/// `s_p = [C, C_pp]`.
pub fn equiaffine_residual(curve: &ClosedCurve) -> Result<Vec<f64>> {
    let d = curve.derivatives();
    let s = star_density(curve, &d.c, &d.cp)?;
    Ok((0..curve.len())
        .map(|k| {
            let sk = s[k];
            let sp = bracket(d.c[k], d.cpp[k]);
            let mu = bracket(d.cp[k], d.cpp[k]) / (sk * sk * sk);
            let c_ss = (d.cpp[k] - d.cp[k] * (sp / sk)) * (1.0 / (sk * sk));
            (d.c[k] * mu + c_ss).norm()
        })
        .collect())
}

pub fn centro_affine(curve: &ClosedCurve) -> Result<InvariantField> {
    let d = curve.derivatives();
    let grid = curve.grid().clone();
    let s = star_density(curve, &d.c, &d.cp)?;
    let n = curve.len();
    let convex: Vec<f64> = (0..n).map(|k| bracket(d.cp[k], d.cpp[k])).collect();
    let ratio: Vec<f64> = convex.iter().zip(&s).map(|(&q, &s)| q / s).collect();
    let epsilon = match strict_sign(&ratio) {
        Ok(sign) => sign,
        Err(node) => {
            let scale = ratio.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            return Err(if ratio[node].abs() <= crate::curve::SIGN_TOLERANCE * scale {
                Error::DegenerateMetric {
                    node,
                    value: ratio[node],
                }
            } else {
                Error::NonConstantSign
            });
        }
    };
    let mut g = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    for k in 0..n {
        let radicand = epsilon * ratio[k];
        if radicand <= 0.0 {
            return Err(Error::DegenerateMetric {
                node: k,
                value: radicand,
            });
        }
        let gk = radicand.sqrt();
        let c_cpp = bracket(d.c[k], d.cpp[k]);
        let cp_cppp = bracket(d.cp[k], d.cppp[k]);
        g.push(gk);
        phi.push((1.5 * c_cpp / s[k] - 0.5 * cp_cppp / convex[k]) / gk);
        mu.push(convex[k] / (s[k] * s[k] * s[k]));
    }
    let xi = grid.cumulative_integral(&g);
    Ok(InvariantField {
        epsilon,
        sigma_density: PeriodicField::from_parts(grid.clone(), s),
        mu: PeriodicField::from_parts(grid.clone(), mu),
        g: PeriodicField::from_parts(grid.clone(), g),
        xi: PeriodicField::from_parts(grid.clone(), xi),
        phi: PeriodicField::from_parts(grid, phi),
    })
}

/// `φ = −(ε/2)(εμ)^{−3/2} μ_σ` with `μ_σ = μ_p / [C, C_p]`; an independent
/// route to the centro-affine curvature through centro-equiaffine quantities.
pub fn phi_from_mu(curve: &ClosedCurve) -> Result<PeriodicField> {
    let eq = centro_equiaffine(curve)?;
    let epsilon = match strict_sign(eq.mu.values()) {
        Ok(sign) => sign,
        Err(node) => {
            return Err(Error::DegenerateMetric {
                node,
                value: eq.mu.values()[node],
            })
        }
    };
    if epsilon < 0.0 {
        return Err(Error::DegenerateMetric {
            node: 0,
            value: eq.mu.values()[0],
        });
    }
    let mu_p = eq.mu.derivative(1)?;
    let values = (0..curve.len())
        .map(|k| {
            let mu = eq.mu.values()[k];
            let mu_sigma = mu_p.values()[k] / eq.sigma_density.values()[k];
            -0.5 * epsilon * (epsilon * mu).powf(-1.5) * mu_sigma
        })
        .collect();
    Ok(PeriodicField::from_parts(curve.grid().clone(), values))
}

/// `f ↦ f_p / g` applied `order` times.
pub fn xi_derivative(field: &PeriodicField, g: &PeriodicField, order: u32) -> Result<PeriodicField> {
    if order == 0 {
        return Err(Error::InvalidParameter("derivative order must be >= 1".into()));
    }
    if let Some(node) = g.values().iter().position(|&v| v <= 0.0) {
        return Err(Error::DegenerateMetric {
            node,
            value: g.values()[node],
        });
    }
    Ok(xi_derivative_unchecked(field.grid(), field.values(), g.values(), order))
}

pub(crate) fn xi_derivative_unchecked(grid: &Arc<Grid>, f: &[f64], g: &[f64], order: u32) -> PeriodicField {
    let mut cur = f.to_vec();
    for _ in 0..order {
        let d = grid.derivative(&cur, 1);
        cur = d.iter().zip(g).map(|(a, b)| a / b).collect();
    }
    PeriodicField::from_parts(grid.clone(), cur)
}

impl InvariantField {
    pub fn grid(&self) -> &Arc<Grid> {
        self.g.grid()
    }

    /// `L = ∮ g dp`.
    pub fn perimeter(&self) -> f64 {
        periodic_integral(&self.g)
    }

    /// `E = ∮ φ² g dp`.
    pub fn energy(&self) -> f64 {
        self.weighted_integral(|k| self.phi.values()[k].powi(2))
    }

    /// `∮ φ dξ`.
    pub fn mean_integral(&self) -> f64 {
        self.weighted_integral(|k| self.phi.values()[k])
    }

    /// `∮ (∂ⁿφ/∂ξⁿ)² dξ`; `n = 0` is the energy.
    pub fn sobolev_norm(&self, n: u32) -> f64 {
        if n == 0 {
            return self.energy();
        }
        let d = xi_derivative_unchecked(self.grid(), self.phi.values(), self.g.values(), n);
        self.weighted_integral(|k| d.values()[k].powi(2))
    }

    /// `∂ⁿφ/∂ξⁿ` as a field.
    pub fn phi_xi(&self, n: u32) -> PeriodicField {
        if n == 0 {
            return self.phi.clone();
        }
        xi_derivative_unchecked(self.grid(), self.phi.values(), self.g.values(), n)
    }

    fn weighted_integral(&self, f: impl Fn(usize) -> f64) -> f64 {
        let g = self.g.values();
        self.grid().spacing() * (0..g.len()).map(|k| f(k) * g[k]).sum::<f64>()
    }
}

pub fn perimeter(field: &InvariantField) -> f64 {
    field.perimeter()
}

pub fn energy(field: &InvariantField) -> f64 {
    field.energy()
}

pub fn sobolev_norm(field: &InvariantField, n: u32) -> f64 {
    field.sobolev_norm(n)
}
