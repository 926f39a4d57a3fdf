//! Hydrodynamic and complex field representations, energy, momentum and
//! the a-priori bounds.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::InteractionKernel;

/// Boundary strip used by the decay checks: outer 5% of the box on each side.
pub const BOUNDARY_FRACTION: f64 = 0.05;
pub const BOUNDARY_TOL: f64 = 1e-8;

/// (η, w) = (1 − |u|², θ′) sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HydroField {
    pub grid: Grid,
    pub eta: Vec<f64>,
    pub w: Vec<f64>,
}

/// Samples of u with the total phase increment across the box.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub phase_jump: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParts {
    pub kinetic_rho: f64,
    pub kinetic_phase: f64,
    pub potential: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic_rho + self.kinetic_phase + self.potential
    }
}

fn boundary_indices(n: usize) -> impl Iterator<Item = usize> {
    let strip = ((n as f64 * BOUNDARY_FRACTION).ceil() as usize).max(1);
    (0..strip).chain(n - strip..n)
}

impl HydroField {
    pub fn new(grid: Grid, eta: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        for len in [eta.len(), w.len()] {
            if len != grid.n_points() {
                return Err(Error::LengthMismatch { expected: grid.n_points(), got: len });
            }
        }
        Ok(Self { grid, eta, w })
    }

    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.n_points();
        Self { grid: grid.clone(), eta: vec![0.0; n], w: vec![0.0; n] }
    }

    pub fn max_eta(&self) -> f64 {
        self.eta.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn check_nonvanishing(&self) -> Result<()> {
        let (j, &v) = self
            .eta
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid has points");
        if !(v < 1.0) {
            return Err(Error::VanishingModulus { x: self.grid.position(j), value: v });
        }
        Ok(())
    }

    /// max of |η| and |w| over the outer boundary strips.
    pub fn boundary_level(&self) -> f64 {
        boundary_indices(self.eta.len())
            .map(|j| self.eta[j].abs().max(self.w[j].abs()))
            .fold(0.0, f64::max)
    }

    pub fn check_boundary_decay(&self, tol: f64) -> Result<()> {
        let level = self.boundary_level();
        if !(level < tol) {
            return Err(Error::BoundaryDecay(format!(
                "|eta|,|w| reach {level:.3e} near the box edge (tol {tol:.1e}); enlarge the box"
            )));
        }
        Ok(())
    }

    /// x ↦ −x: η(−x), w(−x) on the same grid (x_j ↦ x_{N−j}).
    pub fn reflect(&self) -> Self {
        let n = self.eta.len();
        let idx = |j: usize| (n - j) % n;
        Self {
            grid: self.grid.clone(),
            eta: (0..n).map(|j| self.eta[idx(j)]).collect(),
            w: (0..n).map(|j| self.w[idx(j)]).collect(),
        }
    }
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>, phase_jump: f64) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::LengthMismatch { expected: grid.n_points(), got: values.len() });
        }
        Ok(Self { grid, values, phase_jump })
    }

    pub fn constant(grid: &Grid) -> Self {
        Self { grid: grid.clone(), values: vec![Complex64::new(1.0, 0.0); grid.n_points()], phase_jump: 0.0 }
    }

    /// Bloch wavenumber κ = phase_jump / L.
    pub fn kappa(&self) -> f64 {
        self.phase_jump / self.grid.length()
    }

    pub fn eta(&self) -> Vec<f64> {
        self.values.iter().map(|u| 1.0 - u.norm_sqr()).collect()
    }

    pub fn min_modulus(&self) -> f64 {
        self.values.iter().map(|u| u.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn derivative(&self, order: u32) -> Result<Vec<Complex64>> {
        self.grid.differentiate_twisted(&self.values, order, self.kappa())
    }

    /// max over the boundary strips of ||u| − 1|.
    pub fn boundary_modulus_error(&self) -> f64 {
        boundary_indices(self.values.len())
            .map(|j| (self.values[j].norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Gap between the linear extrapolation of the untwisted
    /// representative v = e^{−iκ(x+L/2)}u past the right edge and v(x_0).
    pub fn edge_mismatch(&self) -> f64 {
        let v = self.grid.untwist(&self.values, self.kappa());
        let n = v.len();
        (v[n - 1] * 2.0 - v[n - 2] - v[0]).norm()
    }
}

pub fn energy_parts(h: &HydroField, kernel: &InteractionKernel) -> Result<EnergyParts> {
    h.check_nonvanishing()?;
    let g = &h.grid;
    let deta = g.differentiate(&h.eta, 1)?;
    let conv = g.convolve_with_symbol(&h.eta, kernel)?;
    let mut kr = 0.0;
    let mut kp = 0.0;
    let mut pot = 0.0;
    for j in 0..h.eta.len() {
        let rho2 = 1.0 - h.eta[j];
        kr += deta[j] * deta[j] / (4.0 * rho2);
        kp += rho2 * h.w[j] * h.w[j];
        pot += conv[j] * h.eta[j];
    }
    let dx = g.spacing();
    Ok(EnergyParts { kinetic_rho: 0.5 * dx * kr, kinetic_phase: 0.5 * dx * kp, potential: 0.25 * dx * pot })
}

pub fn energy(h: &HydroField, kernel: &InteractionKernel) -> Result<f64> {
    Ok(energy_parts(h, kernel)?.total())
}

/// p = ½∫ηw.
pub fn momentum(h: &HydroField) -> f64 {
    0.5 * h.grid.spacing() * h.eta.iter().zip(&h.w).map(|(a, b)| a * b).sum::<f64>()
}

pub fn scale_phase(h: &HydroField, lambda: f64) -> HydroField {
    HydroField { grid: h.grid.clone(), eta: h.eta.clone(), w: h.w.iter().map(|v| lambda * v).collect() }
}

/// Lifts (η, w) to u = √(1−η) e^{iθ} with θ(x_0) = 0 and θ′ = w. The phase
/// is the spectral antiderivative of w plus the linear ramp carrying its mean.
pub fn reconstruct_complex(h: &HydroField) -> Result<ComplexField> {
    h.check_nonvanishing()?;
    let theta = h.grid.antiderivative(&h.w)?;
    let values = h
        .eta
        .iter()
        .zip(&theta)
        .map(|(&e, &t)| Complex64::from_polar((1.0 - e).sqrt(), t))
        .collect();
    Ok(ComplexField { grid: h.grid.clone(), values, phase_jump: h.grid.quadrature(&h.w) })
}

/// Inverse of `reconstruct_complex` for fields with |u| > 0: η = 1 − |u|²,
/// w = Im(ū u′)/|u|².
pub fn hydro_from_complex(c: &ComplexField) -> Result<HydroField> {
    let du = c.derivative(1)?;
    let mut eta = Vec::with_capacity(du.len());
    let mut w = Vec::with_capacity(du.len());
    for (j, (u, d)) in c.values.iter().zip(&du).enumerate() {
        let m2 = u.norm_sqr();
        if m2 == 0.0 {
            return Err(Error::VanishingModulus { x: c.grid.position(j), value: 1.0 });
        }
        eta.push(1.0 - m2);
        w.push((u.conj() * d).im / m2);
    }
    HydroField::new(c.grid.clone(), eta, w)
}

/// ½∫|u′|² + ¼∫(W∗η)η.
pub fn energy_complex(c: &ComplexField, kernel: &InteractionKernel) -> Result<f64> {
    let du = c.derivative(1)?;
    let eta = c.eta();
    let conv = c.grid.convolve_with_symbol(&eta, kernel)?;
    let dx = c.grid.spacing();
    let kin: f64 = du.iter().map(|d| d.norm_sqr()).sum();
    let pot: f64 = conv.iter().zip(&eta).map(|(a, b)| a * b).sum();
    Ok(0.5 * dx * kin + 0.25 * dx * pot)
}

/// Renormalized momentum ½∫η·Im(ū u′)/|u|²; meaningful while |u| > 0.
pub fn momentum_complex(c: &ComplexField) -> Result<f64> {
    let du = c.derivative(1)?;
    let s: f64 = c
        .values
        .iter()
        .zip(&du)
        .map(|(u, d)| {
            let m2 = u.norm_sqr();
            (1.0 - m2) * (u.conj() * d).im / m2
        })
        .sum();
    Ok(0.5 * c.grid.spacing() * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub energy: f64,
    pub momentum: f64,
    pub eta_sup_sq: f64,
    pub eta_l2_sq: f64,
    /// 8κ̃E(1 + 8κ̃E + 2√(2κ̃E)) with κ̃ = 3/2
    pub eta_bound: f64,
    pub sup_ok: bool,
    pub l2_ok: bool,
    /// E/(√2(1−ε)) with ε = sup|η|, when ε < 1
    pub momentum_bound: Option<f64>,
    pub momentum_ok: bool,
}

impl AprioriReport {
    pub fn ok(&self) -> bool {
        self.sup_ok && self.l2_ok && self.momentum_ok
    }
}

pub const KAPPA_TILDE: f64 = 1.5;

pub fn apriori_check(energy: f64, q: f64, h: &HydroField) -> AprioriReport {
    let sup = h.eta.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let l2 = h.grid.quadrature(&h.eta.iter().map(|v| v * v).collect::<Vec<_>>());
    let k = 8.0 * KAPPA_TILDE * energy.max(0.0);
    let bound = k * (1.0 + k + 2.0 * (2.0 * KAPPA_TILDE * energy.max(0.0)).sqrt());
    let momentum_bound = (sup < 1.0).then(|| energy / (2f64.sqrt() * (1.0 - sup)));
    AprioriReport {
        energy,
        momentum: q,
        eta_sup_sq: sup * sup,
        eta_l2_sq: l2,
        eta_bound: bound,
        sup_ok: sup * sup <= bound,
        l2_ok: l2 <= bound,
        momentum_bound,
        momentum_ok: momentum_bound.is_some_and(|b| q.abs() <= b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{gp_soliton, kdv_ansatz, kdv_predictions, KdvAnsatz};
    use std::f64::consts::PI;

    fn desk() -> Grid {
        Grid::new(8192, 256.0).unwrap()
    }

    #[test]
    fn constant_state() {
        let g = Grid::new(64, 16.0).unwrap();
        let h = HydroField::zeros(&g);
        let c = reconstruct_complex(&h).unwrap();
        assert_eq!(c.phase_jump, 0.0);
        assert!(c.values.iter().all(|u| (u - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        let k = InteractionKernel::dirac();
        assert_eq!(energy(&h, &k).unwrap(), 0.0);
        assert_eq!(momentum(&h), 0.0);
        assert_eq!(energy_complex(&ComplexField::constant(&g), &k).unwrap(), 0.0);
        let r = apriori_check(0.0, 0.0, &h);
        assert!(r.sup_ok && r.l2_ok && r.eta_bound == 0.0);
    }

    #[test]
    fn phase_jump_is_integral_of_w() {
        let g = Grid::new(1024, 64.0).unwrap();
        // ∫√π e^{−x²} = π
        let w: Vec<f64> = g.positions().iter().map(|&x| PI.sqrt() * (-x * x).exp()).collect();
        let h = HydroField::new(g.clone(), vec![0.0; 1024], w).unwrap();
        let c = reconstruct_complex(&h).unwrap();
        assert!((c.phase_jump - PI).abs() < 1e-10);
        assert!(c.boundary_modulus_error() < 1e-6);
    }

    #[test]
    fn reconstruction_matches_closed_form_soliton() {
        let g = desk();
        let s = gp_soliton(1.0, &g).unwrap();
        let c = reconstruct_complex(s.hydro.as_ref().unwrap()).unwrap();
        // global phase: align at the left edge
        let rot = s.complex.values[0] / c.values[0];
        let rot = rot / rot.norm();
        let err = c.values.iter().zip(&s.complex.values).map(|(a, b)| (a * rot - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        assert!((c.phase_jump - s.complex.phase_jump).abs() < 1e-6);
        let back = hydro_from_complex(&s.complex).unwrap();
        let h = s.hydro.unwrap();
        assert!(back.w.iter().zip(&h.w).all(|(a, b)| (a - b).abs() < 1e-8));
    }

    #[test]
    fn soliton_energy_and_momentum() {
        let g = desk();
        let k = InteractionKernel::dirac();
        let h = gp_soliton(1.0, &g).unwrap().hydro.unwrap();
        // (E, p)(1) = (1/3, π/4 − 1/2), 40-digit quadrature of the analytic integrands
        let e = energy(&h, &k).unwrap();
        assert!((e - 1.0 / 3.0).abs() < 1e-6 / 3.0, "{e}");
        assert!((momentum(&h) - (PI / 4.0 - 0.5)).abs() < 1e-10);
        let ec = energy_complex(&reconstruct_complex(&h).unwrap(), &k).unwrap();
        assert!((ec - e).abs() < 1e-8 * e);
        let r = apriori_check(e, momentum(&h), &h);
        assert!(r.ok());
        assert!(r.eta_sup_sq < r.eta_bound && r.eta_l2_sq < r.eta_bound);
        assert!(momentum(&h) < r.momentum_bound.unwrap());
    }

    #[test]
    fn kdv_energy_and_momentum() {
        let g = desk();
        let k = InteractionKernel::dirac();
        let eps: f64 = 0.2;
        let a = KdvAnsatz::new(eps, 1.0).unwrap();
        let h = kdv_ansatz(a, &g).unwrap();
        let (ep, pp) = kdv_predictions(a);
        assert!((energy(&h, &k).unwrap() - ep).abs() <= 5.0 * eps.powi(6));
        assert!((momentum(&h) - pp).abs() < 1e-8);
    }

    #[test]
    fn scale_phase_cases() {
        let g = Grid::new(2048, 256.0).unwrap();
        let h = gp_soliton(0.7, &g).unwrap().hydro.unwrap();
        let k = InteractionKernel::dirac();
        assert_eq!(scale_phase(&h, 1.0), h);
        assert_eq!(momentum(&scale_phase(&h, 0.0)), 0.0);
        let a = energy_parts(&h, &k).unwrap();
        let b = energy_parts(&scale_phase(&h, 0.5), &k).unwrap();
        assert!((b.kinetic_phase - 0.25 * a.kinetic_phase).abs() <= 1e-15 * a.kinetic_phase);
        assert_eq!(a.kinetic_rho, b.kinetic_rho);
        assert_eq!(a.potential, b.potential);
    }

    #[test]
    fn vanishing_modulus_rejected() {
        let g = Grid::new(16, 8.0).unwrap();
        let mut h = HydroField::zeros(&g);
        h.eta[3] = 1.0;
        assert!(matches!(energy(&h, &InteractionKernel::dirac()), Err(Error::VanishingModulus { .. })));
        assert!(reconstruct_complex(&h).is_err());
        assert!(HydroField::new(g, vec![0.0; 3], vec![0.0; 16]).is_err());
    }

    #[test]
    fn boundary_decay_check() {
        let g = Grid::new(64, 16.0).unwrap();
        let mut h = HydroField::zeros(&g);
        assert!(h.check_boundary_decay(BOUNDARY_TOL).is_ok());
        h.w[0] = 1e-3;
        assert!(matches!(h.check_boundary_decay(BOUNDARY_TOL), Err(Error::BoundaryDecay(_))));
    }
}
