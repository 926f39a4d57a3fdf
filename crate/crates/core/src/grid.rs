//! Periodic grid on [-L/2, L/2) with the integral Fourier convention
//! f̂(ξ) = ∫ e^{-ixξ} f(x) dx.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::kernels::InteractionKernel;

#[derive(Clone)]
pub struct Grid {
    inner: Arc<Inner>,
}

struct Inner {
    n: usize,
    length: f64,
    spacing: f64,
    freqs: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_points", &self.inner.n)
            .field("length", &self.inner.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.n == other.inner.n && self.inner.length == other.inner.length
    }
}

impl Grid {
    pub fn new(n_points: usize, length: f64) -> Result<Self> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 8, got {n_points}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        let dk = 2.0 * std::f64::consts::PI / length;
        let freqs = (0..n_points).map(|k| Self::signed(k, n_points) as f64 * dk).collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n_points);
        let inv = planner.plan_fft_inverse(n_points);
        Ok(Self {
            inner: Arc::new(Inner {
                n: n_points,
                length,
                spacing: length / n_points as f64,
                freqs,
                fwd,
                inv,
            }),
        })
    }

    fn signed(k: usize, n: usize) -> i64 {
        if k < n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    }

    pub fn n_points(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    /// Frequencies in transform order: slot k holds 2π·signed_index(k)/L.
    pub fn frequencies(&self) -> &[f64] {
        &self.inner.freqs
    }

    pub fn signed_index(&self, k: usize) -> i64 {
        Self::signed(k, self.inner.n)
    }

    pub fn position(&self, j: usize) -> f64 {
        -0.5 * self.inner.length + j as f64 * self.inner.spacing
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.inner.n).map(|j| self.position(j)).collect()
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.inner.n {
            return Err(Error::LengthMismatch { expected: self.inner.n, got });
        }
        Ok(())
    }

    /// Coefficients approximating ∫ e^{-ixξ_k} f(x) dx.
    pub fn forward_transform(&self, samples: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(samples.len())?;
        let mut buf = samples.to_vec();
        self.inner.fwd.process(&mut buf);
        // x_0 = -L/2 contributes e^{iξ_k L/2} = (-1)^k
        let h = self.inner.spacing;
        for (k, c) in buf.iter_mut().enumerate() {
            *c *= if self.signed_index(k) % 2 == 0 { h } else { -h };
        }
        Ok(buf)
    }

    pub fn inverse_transform(&self, coefficients: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(coefficients.len())?;
        let scale = 1.0 / self.inner.length;
        let mut buf: Vec<Complex64> = coefficients
            .iter()
            .enumerate()
            .map(|(k, &c)| c * if self.signed_index(k) % 2 == 0 { scale } else { -scale })
            .collect();
        self.inner.inv.process(&mut buf);
        Ok(buf)
    }

    pub(crate) fn fft(&self, buf: &mut [Complex64]) {
        self.inner.fwd.process(buf);
    }

    /// Unnormalized inverse DFT.
    pub(crate) fn ifft(&self, buf: &mut [Complex64]) {
        self.inner.inv.process(buf);
    }

    /// Applies a real, even multiplier given in transform order.
    pub fn apply_even_multiplier(&self, field: &[f64], mult: &[f64]) -> Result<Vec<f64>> {
        self.check_len(field.len())?;
        self.check_len(mult.len())?;
        let mut buf: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft(&mut buf);
        for (c, m) in buf.iter_mut().zip(mult) {
            *c *= *m;
        }
        self.ifft(&mut buf);
        let s = 1.0 / self.inner.n as f64;
        Ok(buf.iter().map(|c| c.re * s).collect())
    }

    /// Ŵ sampled at the grid frequencies, in transform order.
    pub fn symbol_table(&self, kernel: &InteractionKernel) -> Vec<f64> {
        self.inner.freqs.iter().map(|&xi| kernel.symbol(xi)).collect()
    }

    pub fn convolve_with_symbol(&self, field: &[f64], kernel: &InteractionKernel) -> Result<Vec<f64>> {
        if kernel.is_identity() {
            self.check_len(field.len())?;
            return Ok(field.to_vec());
        }
        self.apply_even_multiplier(field, &self.symbol_table(kernel))
    }

    /// Spectral derivative of a real field. Odd orders drop the Nyquist mode.
    pub fn differentiate(&self, field: &[f64], order: u32) -> Result<Vec<f64>> {
        self.check_len(field.len())?;
        if !(1..=3).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        let mut buf: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft(&mut buf);
        self.derivative_multiply(&mut buf, order, 0.0);
        self.ifft(&mut buf);
        let s = 1.0 / self.inner.n as f64;
        Ok(buf.iter().map(|c| c.re * s).collect())
    }

    /// Derivative of a complex field u = e^{iκx} v where `values` holds u;
    /// v is periodic and differentiated with frequencies shifted by κ.
    pub fn differentiate_twisted(&self, values: &[Complex64], order: u32, kappa: f64) -> Result<Vec<Complex64>> {
        self.check_len(values.len())?;
        if !(1..=3).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        let mut buf = self.untwist(values, kappa);
        self.fft(&mut buf);
        self.derivative_multiply(&mut buf, order, kappa);
        self.ifft(&mut buf);
        let s = 1.0 / self.inner.n as f64;
        for c in buf.iter_mut() {
            *c *= s;
        }
        Ok(self.twist(&buf, kappa))
    }

    fn derivative_multiply(&self, buf: &mut [Complex64], order: u32, kappa: f64) {
        let nyq = self.inner.n / 2;
        for (k, c) in buf.iter_mut().enumerate() {
            let xi = self.inner.freqs[k] + kappa;
            if k == nyq && order % 2 == 1 && kappa == 0.0 {
                *c = Complex64::new(0.0, 0.0);
                continue;
            }
            let m = match order {
                1 => Complex64::new(0.0, xi),
                2 => Complex64::new(-xi * xi, 0.0),
                _ => Complex64::new(0.0, -xi * xi * xi),
            };
            *c *= m;
        }
    }

    /// v = e^{-iκ(x+L/2)} u.
    pub(crate) fn untwist(&self, values: &[Complex64], kappa: f64) -> Vec<Complex64> {
        if kappa == 0.0 {
            return values.to_vec();
        }
        let h = self.inner.spacing;
        values
            .iter()
            .enumerate()
            .map(|(j, &u)| u * Complex64::from_polar(1.0, -kappa * j as f64 * h))
            .collect()
    }

    pub(crate) fn twist(&self, values: &[Complex64], kappa: f64) -> Vec<Complex64> {
        self.untwist(values, -kappa)
    }

    pub fn quadrature(&self, field: &[f64]) -> f64 {
        self.inner.spacing * field.iter().sum::<f64>()
    }

    /// Spectral antiderivative Θ with Θ(x_0) = 0 of a field whose mean is
    /// removed; the mean contributes the linear ramp mean·(x + L/2).
    pub fn antiderivative(&self, field: &[f64]) -> Result<Vec<f64>> {
        self.check_len(field.len())?;
        let n = self.inner.n;
        let mean = field.iter().sum::<f64>() / n as f64;
        let mut buf: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v - mean, 0.0)).collect();
        self.fft(&mut buf);
        for (k, c) in buf.iter_mut().enumerate() {
            let xi = self.inner.freqs[k];
            if k == 0 || k == n / 2 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c /= Complex64::new(0.0, xi);
            }
        }
        self.ifft(&mut buf);
        let s = 1.0 / n as f64;
        let base = buf[0].re * s;
        let h = self.inner.spacing;
        Ok(buf
            .iter()
            .enumerate()
            .map(|(j, c)| c.re * s - base + mean * j as f64 * h)
            .collect())
    }
}
