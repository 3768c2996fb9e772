//! Uniform periodic grid on [0, 2π) with Fourier differentiation, quadrature
//! and antidifferentiation.
//!
//! Derivatives are computed by multiplying the discrete Fourier coefficients
//! by `(ik)^order`. The Nyquist coefficient is dropped for odd orders so that
//! real data stays real. Because every multiplier satisfies
//! `m(-k) = conj(m(k))`, two real signals can be differentiated at once by
//! packing them as the real and imaginary parts of one complex sequence.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Smallest grid accepted anywhere in the crate.
pub const MIN_GRID: usize = 16;

/// Fourier coefficients below this fraction of the largest one are treated
/// as transform round-off by [`Grid::chop`].
pub const CHOP_TOLERANCE: f64 = 1e-14;

pub struct Grid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("n", &self.n).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

fn cache() -> &'static Mutex<HashMap<usize, Arc<Grid>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Grid>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Grid {
    /// Returns the process-wide grid for `n` nodes, planning the FFTs once.
    pub fn shared(n: usize) -> Result<Arc<Grid>> {
        if n < MIN_GRID || n % 2 != 0 {
            return Err(Error::InvalidGrid { n });
        }
        let mut map = cache().lock().unwrap_or_else(|e| e.into_inner());
        Ok(map
            .entry(n)
            .or_insert_with(|| Arc::new(Grid::plan(n)))
            .clone())
    }

    fn plan(n: usize) -> Grid {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let half = n / 2;
        let wavenumbers = (0..n)
            .map(|j| {
                if j <= half {
                    j as f64
                } else {
                    j as f64 - n as f64
                }
            })
            .collect();
        Grid {
            n,
            forward,
            inverse,
            wavenumbers,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing 2π/N.
    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        TAU * k as f64 / self.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |k| self.node(k))
    }

    /// Signed wavenumber of FFT bin `j`; the Nyquist bin reports `+N/2`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        self.wavenumbers[j]
    }

    fn is_nyquist(&self, j: usize) -> bool {
        j == self.n / 2
    }

    /// Unnormalized forward DFT in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.n);
        self.forward.process(data);
    }

    /// Inverse DFT in place, normalized so that `inverse(forward(x)) == x`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.n);
        self.inverse.process(data);
        let scale = 1.0 / self.n as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    /// Zeroes coefficients below `CHOP_TOLERANCE · max|c|`. High-order
    /// derivatives amplify bin noise by `k^order`; removing the noise floor
    /// keeps band-limited data exact.
    pub fn chop(&self, spectrum: &mut [Complex64]) {
        let peak = spectrum.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
        let floor = CHOP_TOLERANCE * peak;
        for c in spectrum.iter_mut() {
            if c.norm() <= floor {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Fourier multiplier of the `order`-th derivative for bin `j`.
    pub fn derivative_multiplier(&self, j: usize, order: u32) -> Complex64 {
        if order == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if self.is_nyquist(j) && order % 2 == 1 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(0.0, self.wavenumbers[j]).powu(order)
    }

    /// Applies the derivative multipliers of each requested order to an
    /// already transformed sequence and returns the results in physical space.
    pub fn derivatives_from_spectrum(
        &self,
        spectrum: &[Complex64],
        orders: &[u32],
    ) -> Vec<Vec<Complex64>> {
        orders
            .iter()
            .map(|&order| {
                let mut out: Vec<Complex64> = spectrum
                    .iter()
                    .enumerate()
                    .map(|(j, &c)| c * self.derivative_multiplier(j, order))
                    .collect();
                self.inverse(&mut out);
                out
            })
            .collect()
    }

    /// Spectral derivative of a real sequence.
    pub fn derivative(&self, values: &[f64], order: u32) -> Vec<f64> {
        let mut spec = to_complex(values);
        self.forward(&mut spec);
        let out = self.derivatives_from_spectrum(&spec, &[order]);
        out[0].iter().map(|z| z.re).collect()
    }

    /// Spectral derivatives of two real sequences with one forward and one
    /// inverse transform.
    pub fn derivative_pair(&self, a: &[f64], b: &[f64], order: u32) -> (Vec<f64>, Vec<f64>) {
        let mut spec: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.forward(&mut spec);
        let out = self.derivatives_from_spectrum(&spec, &[order]);
        out[0].iter().map(|z| (z.re, z.im)).unzip()
    }

    /// Trapezoidal rule `(2π/N) Σ f_k`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.spacing() * values.iter().sum::<f64>()
    }

    /// Cumulative integral `∫₀^{p_k} f dp` at every node, exact for
    /// trigonometric polynomials of degree below N/2. The mean of `f`
    /// contributes the secular term `mean · p_k`.
    pub fn cumulative_integral(&self, values: &[f64]) -> Vec<f64> {
        let mut spec = to_complex(values);
        self.forward(&mut spec);
        let mean = spec[0].re / self.n as f64;
        spec[0] = Complex64::new(0.0, 0.0);
        for (j, c) in spec.iter_mut().enumerate().skip(1) {
            if self.is_nyquist(j) {
                // sin(N p / 2) vanishes at every node.
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c /= Complex64::new(0.0, self.wavenumbers[j]);
            }
        }
        self.inverse(&mut spec);
        let base = spec[0].re;
        spec.iter()
            .enumerate()
            .map(|(k, z)| mean * self.node(k) + (z.re - base))
            .collect()
    }

    /// Zeroes the upper third of the resolved wavenumbers, |k| > N/3.
    pub fn two_thirds_filter(&self, values: &[f64]) -> Vec<f64> {
        let mut spec = to_complex(values);
        self.forward(&mut spec);
        let cutoff = self.n as f64 / 3.0;
        for (j, c) in spec.iter_mut().enumerate() {
            if self.wavenumbers[j].abs() > cutoff {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        self.inverse(&mut spec);
        spec.iter().map(|z| z.re).collect()
    }

    pub fn interpolant(&self, values: &[f64]) -> TrigInterpolant {
        TrigInterpolant::new(self, values)
    }

    /// Trigonometric interpolation of `values` onto a grid of `m` nodes.
    pub fn resample(&self, values: &[f64], m: usize) -> Result<Vec<f64>> {
        let target = Grid::shared(m)?;
        let mut spec = to_complex(values);
        self.forward(&mut spec);
        let zero = Complex64::new(0.0, 0.0);
        let mut out = vec![zero; m];
        let (src_half, dst_half) = (self.n / 2, m / 2);
        for (j, &c) in spec.iter().enumerate() {
            let k = self.wavenumbers[j] as i64;
            let kabs = k.unsigned_abs() as usize;
            if m >= self.n {
                if kabs == src_half && m > self.n {
                    // Source Nyquist splits evenly between ±N/2.
                    out[src_half] += c * 0.5;
                    out[m - src_half] += c * 0.5;
                } else {
                    out[k.rem_euclid(m as i64) as usize] += c;
                }
            } else if kabs < dst_half {
                out[k.rem_euclid(m as i64) as usize] += c;
            } else if kabs == dst_half {
                // Both ±m/2 alias onto the target Nyquist bin.
                out[dst_half] += c;
            }
        }
        let scale = m as f64 / self.n as f64;
        for z in out.iter_mut() {
            *z *= scale;
        }
        target.inverse(&mut out);
        Ok(out.iter().map(|z| z.re).collect())
    }
}

/// Trigonometric interpolant of real samples, evaluable anywhere on the circle.
#[derive(Clone, Debug)]
pub struct TrigInterpolant {
    /// `c_0, ..., c_{N/2}` of `f(x) = c_0 + 2 Re Σ c_j e^{ijx} + c_{N/2} cos(N x / 2)`.
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn new(grid: &Grid, values: &[f64]) -> Self {
        let mut spec = to_complex(values);
        grid.forward(&mut spec);
        let scale = 1.0 / grid.len() as f64;
        TrigInterpolant {
            coeffs: spec[..=grid.len() / 2].iter().map(|c| c * scale).collect(),
        }
    }

    /// `(f(x), f'(x))`.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let half = self.coeffs.len() - 1;
        let step = Complex64::from_polar(1.0, x);
        let mut z = step;
        let (mut f, mut df) = (self.coeffs[0].re, 0.0);
        for (j, &c) in self.coeffs.iter().enumerate().take(half).skip(1) {
            let term = c * z;
            f += 2.0 * term.re;
            df -= 2.0 * j as f64 * term.im;
            z *= step;
        }
        let nyq = self.coeffs[half].re;
        let h = half as f64;
        f += nyq * (h * x).cos();
        df -= nyq * h * (h * x).sin();
        (f, df)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_derivative(x).0
    }
}

pub(crate) fn to_complex(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}
