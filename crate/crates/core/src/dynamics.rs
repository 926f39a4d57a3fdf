//! Strang split-step integration of i∂ₜΨ = ∂ₓₓΨ + Ψ(W∗(1−|Ψ|²)) on the
//! Bloch-twisted box, conservation monitoring and the stability experiment.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{energy_complex, momentum_complex, reconstruct_complex, ComplexField};
use crate::grid::Grid;
use crate::kernels::{golden_min, InteractionKernel};
use crate::minimizer::{smooth_noise, SolitonSolution};

/// Momentum is recorded only while min|Ψ| exceeds this.
pub const MOMENTUM_MODULUS_FLOOR: f64 = 0.1;
/// Abort once |E| exceeds this multiple of the initial energy.
pub const BLOWUP_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    /// steps between recorded samples
    pub record_every: usize,
    pub perturbation_amplitude: f64,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 1.0, record_every: 100, perturbation_amplitude: 0.0, seed: 0 }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Domain(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Domain(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::Domain("record_every must be at least 1".into()));
        }
        if !(self.perturbation_amplitude >= 0.0 && self.perturbation_amplitude.is_finite()) {
            return Err(Error::Domain(format!(
                "perturbation_amplitude must be >= 0, got {}",
                self.perturbation_amplitude
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }

    /// The splitting heuristic dt ≤ h²/4. Exceeding it is allowed: the
    /// linear step is exact, so this only bounds the splitting error.
    pub fn within_guard(&self, grid: &Grid) -> bool {
        self.dt <= 0.25 * grid.spacing().powi(2)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// `None` where min|Ψ| ≤ 0.1
    pub momenta: Vec<Option<f64>>,
    pub min_modulus: Vec<f64>,
    /// `None` when no reference was given
    pub distances: Vec<Option<f64>>,
}

impl TrajectorySummary {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// max |E(t) − E(0)| / |E(0)|; absolute when E(0) = 0.
    pub fn energy_drift(&self) -> f64 {
        relative_drift(self.energies.iter().copied())
    }

    /// Drift over the recorded momenta.
    pub fn momentum_drift(&self) -> f64 {
        relative_drift(self.momenta.iter().flatten().copied())
    }
}

fn relative_drift(mut it: impl Iterator<Item = f64>) -> f64 {
    let Some(first) = it.next() else { return 0.0 };
    let scale = if first == 0.0 { 1.0 } else { first.abs() };
    it.map(|v| (v - first).abs() / scale).fold(0.0, f64::max)
}

/// Precomputed propagators for a fixed grid, kernel, twist and dt.
pub struct Stepper {
    grid: Grid,
    kappa: f64,
    dt: f64,
    linear: Vec<Complex64>,
    twist: Vec<Complex64>,
    symbol: Option<Vec<f64>>,
}

impl Stepper {
    pub fn new(grid: &Grid, kernel: &InteractionKernel, phase_jump: f64, dt: f64) -> Self {
        let kappa = phase_jump / grid.length();
        let linear = grid
            .frequencies()
            .iter()
            .map(|&xi| Complex64::from_polar(1.0, dt * (xi + kappa) * (xi + kappa)))
            .collect();
        let h = grid.spacing();
        let twist = (0..grid.n_points()).map(|j| Complex64::from_polar(1.0, kappa * j as f64 * h)).collect();
        let symbol = (!kernel.is_identity()).then(|| grid.symbol_table(kernel));
        Self { grid: grid.clone(), kappa, dt, linear, twist, symbol }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn potential(&self, values: &[Complex64]) -> Vec<f64> {
        let eta: Vec<f64> = values.iter().map(|u| 1.0 - u.norm_sqr()).collect();
        match &self.symbol {
            None => eta,
            Some(s) => self.grid.apply_even_multiplier(&eta, s).expect("grid-sized buffers"),
        }
    }

    fn half_nonlinear(&self, values: &mut [Complex64], tau: f64) {
        let v = self.potential(values);
        for (u, p) in values.iter_mut().zip(v) {
            *u *= Complex64::from_polar(1.0, -tau * p);
        }
    }

    fn linear(&self, values: &mut [Complex64]) {
        for (u, t) in values.iter_mut().zip(&self.twist) {
            *u *= t.conj();
        }
        self.grid.fft(values);
        let s = 1.0 / values.len() as f64;
        for (c, m) in values.iter_mut().zip(&self.linear) {
            *c *= m * s;
        }
        self.grid.ifft(values);
        for (u, t) in values.iter_mut().zip(&self.twist) {
            *u *= t;
        }
    }

    /// One Strang step in place.
    pub fn step(&self, field: &mut ComplexField) -> Result<()> {
        if field.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        if field.kappa() != self.kappa {
            return Err(Error::Domain("stepper built for a different phase jump".into()));
        }
        self.half_nonlinear(&mut field.values, 0.5 * self.dt);
        self.linear(&mut field.values);
        self.half_nonlinear(&mut field.values, 0.5 * self.dt);
        Ok(())
    }
}

/// Half nonlinear step, exact linear step in the untwisted frame, half
/// nonlinear step.
pub fn step_strang(c: &ComplexField, kernel: &InteractionKernel, dt: f64) -> ComplexField {
    let mut out = c.clone();
    Stepper::new(&c.grid, kernel, c.phase_jump, dt)
        .step(&mut out)
        .expect("stepper built from the field");
    out
}

/// d(a, b) = ‖a′ − b′‖ + ‖|a| − |b|‖, each derivative in its own frame.
pub fn distance_d(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    distance_d_window(a, b, None)
}

/// d plus the window term sup_{|x|≤A} |a − b| when `window` is given.
pub fn distance_d_window(a: &ComplexField, b: &ComplexField, window: Option<f64>) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let da = a.derivative(1)?;
    let db = b.derivative(1)?;
    Ok(two_terms(a, b, &da, &db) + window_term(a, b, window))
}

fn two_terms(a: &ComplexField, b: &ComplexField, da: &[Complex64], db: &[Complex64]) -> f64 {
    let h = a.grid.spacing();
    let kin: f64 = da.iter().zip(db).map(|(x, y)| (x - y).norm_sqr()).sum();
    let modl: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x.norm() - y.norm()).powi(2)).sum();
    (h * kin).sqrt() + (h * modl).sqrt()
}

fn window_term(a: &ComplexField, b: &ComplexField, window: Option<f64>) -> f64 {
    let Some(half) = window else { return 0.0 };
    a.values
        .iter()
        .zip(&b.values)
        .enumerate()
        .filter(|(j, _)| a.grid.position(*j).abs() <= half)
        .map(|(_, (x, y))| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Default window half-width A = L/4.
pub fn default_window(grid: &Grid) -> f64 {
    0.25 * grid.length()
}

/// Ψ(· − y) for a real shift y, applied spectrally in the untwisted frame.
pub fn translate(c: &ComplexField, y: f64) -> ComplexField {
    let g = &c.grid;
    let kappa = c.kappa();
    let mut v = g.untwist(&c.values, kappa);
    g.fft(&mut v);
    let s = 1.0 / v.len() as f64;
    for (z, &xi) in v.iter_mut().zip(g.frequencies()) {
        *z *= Complex64::from_polar(s, -xi * y);
    }
    g.ifft(&mut v);
    let values = g.twist(&v, kappa).into_iter().map(|u| u * Complex64::from_polar(1.0, -kappa * y)).collect();
    ComplexField { grid: g.clone(), values, phase_jump: c.phase_jump }
}

/// Grid shift s maximizing Σ_j η_ref(x_j) η(x_j + s h), by FFT correlation.
fn correlation_shift(field: &ComplexField, reference: &ComplexField) -> f64 {
    let g = &field.grid;
    let n = g.n_points();
    let mut a: Vec<Complex64> = field.eta().into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let mut b: Vec<Complex64> = reference.eta().into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    g.fft(&mut a);
    g.fft(&mut b);
    let mut prod: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y.conj()).collect();
    g.ifft(&mut prod);
    let (best, _) = prod
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.re.total_cmp(&y.1.re))
        .expect("grid has points");
    let s = if best < n / 2 { best as f64 } else { best as f64 - n as f64 };
    s * g.spacing()
}

/// inf over translations y and constant phases of d(e^{iθ}Ψ(· + y), reference).
/// The coarse shift comes from the density cross-correlation and is refined
/// over ±2 grid steps.
pub fn aligned_distance(field: &ComplexField, reference: &ComplexField) -> Result<f64> {
    Ok(best_shift(field, reference)?.1)
}

/// (y, distance) at the minimizing translation: `translate(field, −y)` is
/// the aligned copy.
pub fn best_shift(field: &ComplexField, reference: &ComplexField) -> Result<(f64, f64)> {
    if field.grid != reference.grid {
        return Err(Error::GridMismatch);
    }
    let h = field.grid.spacing();
    let dref = reference.derivative(1)?;
    let eval = |y: f64| -> f64 {
        let shifted = translate(field, -y);
        match shifted.derivative(1) {
            Ok(ds) => phase_aligned(&shifted, reference, &ds, &dref),
            Err(_) => f64::INFINITY,
        }
    };
    let y0 = correlation_shift(field, reference);
    let y = golden_min(eval, y0 - 2.0 * h, y0 + 2.0 * h, 1e-6 * h);
    let (dy, d0) = (eval(y), eval(y0));
    Ok(if dy <= d0 { (y, dy) } else { (y0, d0) })
}

fn phase_aligned(a: &ComplexField, b: &ComplexField, da: &[Complex64], db: &[Complex64]) -> f64 {
    // ‖e^{iθ}a′ − b′‖ is smallest at θ = arg⟨a′, b′⟩
    let cross: Complex64 = da.iter().zip(db).map(|(x, y)| x.conj() * y).sum();
    let rot = if cross.norm() > 0.0 { cross / cross.norm() } else { Complex64::new(1.0, 0.0) };
    let rotated: Vec<Complex64> = da.iter().map(|x| x * rot).collect();
    two_terms(a, b, &rotated, db)
}

/// Distance of a recorded field to some reference.
pub type DistanceFn<'a> = &'a dyn Fn(&ComplexField) -> Result<f64>;

/// Evolves `initial`, recording every `record_every` steps and at the end.
/// `distance` is evaluated on each recorded field when given.
pub fn evolve_with(
    initial: &ComplexField,
    kernel: &InteractionKernel,
    config: &EvolutionConfig,
    distance: Option<DistanceFn<'_>>,
    mut observer: impl FnMut(f64, &ComplexField),
) -> Result<TrajectorySummary> {
    config.validate()?;
    if !config.within_guard(&initial.grid) {
        log::warn!(
            "dt = {} exceeds the splitting heuristic h²/4 = {:.3e}",
            config.dt,
            0.25 * initial.grid.spacing().powi(2)
        );
    }
    let stepper = Stepper::new(&initial.grid, kernel, initial.phase_jump, config.dt);
    let mut field = initial.clone();
    let mut out = TrajectorySummary::default();
    let n_steps = config.n_steps();
    let e0 = energy_complex(&field, kernel)?;
    for step in 0..=n_steps {
        if step > 0 {
            stepper.step(&mut field)?;
        }
        if step % config.record_every != 0 && step != n_steps {
            continue;
        }
        let t = step as f64 * config.dt;
        let e = energy_complex(&field, kernel)?;
        if !e.is_finite() || field.values.iter().any(|u| !u.re.is_finite() || !u.im.is_finite()) {
            return Err(Error::Blowup { t, reason: "non-finite field".into() });
        }
        if e.abs() > BLOWUP_FACTOR * e0.abs() && (e - e0).abs() > 1e-12 {
            return Err(Error::Blowup { t, reason: format!("energy {e:.6e} exceeds {BLOWUP_FACTOR}x initial {e0:.6e}") });
        }
        let m = field.min_modulus();
        let p = if m > MOMENTUM_MODULUS_FLOOR { Some(momentum_complex(&field)?) } else { None };
        let d = distance.map(|f| f(&field)).transpose()?;
        out.times.push(t);
        out.energies.push(e);
        out.momenta.push(p);
        out.min_modulus.push(m);
        out.distances.push(d);
        observer(t, &field);
    }
    Ok(out)
}

/// Plain evolution; distances use `distance_d` to `reference` when given.
pub fn evolve(
    initial: &ComplexField,
    kernel: &InteractionKernel,
    config: &EvolutionConfig,
    reference: Option<&ComplexField>,
) -> Result<TrajectorySummary> {
    match reference {
        Some(r) => {
            let f = |c: &ComplexField| distance_d(c, r);
            evolve_with(initial, kernel, config, Some(&f), |_, _| {})
        }
        None => evolve_with(initial, kernel, config, None, |_, _| {}),
    }
}

/// Adds amplitude·(n₁ + i n₂)·e^{−(x/ℓ)²} with n₁, n₂ smooth random fields of
/// unit sup norm and ℓ = L/32.
pub fn perturb_complex(c: &ComplexField, amplitude: f64, seed: u64) -> ComplexField {
    let g = &c.grid;
    let n1 = smooth_noise(g, seed);
    let n2 = smooth_noise(g, seed.wrapping_add(1));
    let ell = g.length() / 32.0;
    let values = c
        .values
        .iter()
        .enumerate()
        .map(|(j, &u)| {
            let env = (-(g.position(j) / ell).powi(2)).exp();
            u + Complex64::new(n1[j], n2[j]) * (amplitude * env)
        })
        .collect();
    ComplexField { grid: g.clone(), values, phase_jump: c.phase_jump }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub initial_distance: f64,
    pub max_distance: f64,
    pub summary: TrajectorySummary,
}

impl StabilityReport {
    /// max_t distance / initial distance.
    pub fn growth(&self) -> f64 {
        self.max_distance / self.initial_distance
    }
}

/// Perturbs the soliton, evolves, and tracks the translation- and
/// phase-minimized distance to it.
pub fn stability_experiment(
    sol: &SolitonSolution,
    kernel: &InteractionKernel,
    config: &EvolutionConfig,
) -> Result<StabilityReport> {
    if !sol.converged {
        return Err(Error::Domain("stability experiment needs a converged minimizer".into()));
    }
    let reference = reconstruct_complex(&sol.field)?;
    let initial = perturb_complex(&reference, config.perturbation_amplitude, config.seed);
    let f = |c: &ComplexField| aligned_distance(c, &reference);
    let summary = evolve_with(&initial, kernel, config, Some(&f), |_, _| {})?;
    let dists: Vec<f64> = summary.distances.iter().flatten().copied().collect();
    Ok(StabilityReport {
        initial_distance: dists[0],
        max_distance: dists.iter().copied().fold(0.0, f64::max),
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::gp_soliton;

    fn sup_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn constant_state_is_fixed() {
        let g = Grid::new(64, 20.0).unwrap();
        for k in [InteractionKernel::dirac(), InteractionKernel::exp_pair(0.05, 0.15).unwrap()] {
            let c = ComplexField::constant(&g);
            let out = step_strang(&c, &k, 0.01);
            assert!(sup_diff(&out.values, &c.values) < 1e-15);
        }
    }

    #[test]
    fn reverse_step_restores() {
        let g = Grid::new(512, 40.0).unwrap();
        let k = InteractionKernel::dirac();
        let c = gp_soliton(0.7, &g).unwrap().complex;
        let back = step_strang(&step_strang(&c, &k, 1e-3), &k, -1e-3);
        assert!(sup_diff(&back.values, &c.values) < 1e-10);
        assert_eq!(back.phase_jump, c.phase_jump);
    }

    #[test]
    fn distance_degeneracies() {
        let g = Grid::new(256, 30.0).unwrap();
        let a = gp_soliton(0.5, &g).unwrap().complex;
        assert_eq!(distance_d(&a, &a).unwrap(), 0.0);
        // untwisted field: adding a constant keeps it periodic and only the
        // modulus term survives
        let dip = ComplexField::new(
            g.clone(),
            g.positions().iter().map(|x| Complex64::new(1.0 - 0.5 * (-x * x).exp(), 0.2 * (-x * x).exp())).collect(),
            0.0,
        )
        .unwrap();
        let moved = ComplexField { values: dip.values.iter().map(|u| u + Complex64::new(0.3, -0.2)).collect(), ..dip.clone() };
        let d = distance_d(&dip, &moved).unwrap();
        let modl: f64 = dip.values.iter().zip(&moved.values).map(|(x, y)| (x.norm() - y.norm()).powi(2)).sum();
        assert!((d - (g.spacing() * modl).sqrt()).abs() < 1e-10);
        let one = ComplexField::constant(&g);
        let rot = ComplexField { values: vec![Complex64::from_polar(1.0, 0.7); 256], ..one.clone() };
        assert!(distance_d(&one, &rot).unwrap() < 1e-12);
    }

    #[test]
    fn translate_matches_closed_form() {
        let g = Grid::new(1024, 60.0).unwrap();
        let c = gp_soliton(0.6, &g).unwrap().complex;
        let y = 1.37;
        let moved = translate(&c, y);
        let xs = g.positions();
        let shifted_grid: Vec<Complex64> = {
            // u(x − y) from the closed form, evaluated on the same grid
            let a = ((2.0f64 - 0.36) / 2.0).sqrt();
            let k = (2.0f64 - 0.36).sqrt();
            xs.iter().map(|&x| Complex64::new(a * (0.5 * k * (x - y)).tanh(), -0.6 / 2f64.sqrt())).collect()
        };
        let inner: Vec<usize> = (0..1024).filter(|&j| xs[j].abs() < 20.0).collect();
        let err = inner.iter().map(|&j| (moved.values[j] - shifted_grid[j]).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn aligned_distance_removes_shift_and_phase() {
        let g = Grid::new(1024, 60.0).unwrap();
        let c = gp_soliton(0.8, &g).unwrap().complex;
        let mut moved = translate(&c, 0.9 * g.spacing() + 3.0);
        for u in moved.values.iter_mut() {
            *u *= Complex64::from_polar(1.0, 0.4);
        }
        assert!(distance_d(&moved, &c).unwrap() > 0.1);
        let d = aligned_distance(&moved, &c).unwrap();
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn drift_helpers() {
        let s = TrajectorySummary {
            times: vec![0.0, 1.0, 2.0],
            energies: vec![2.0, 2.002, 1.999],
            momenta: vec![Some(1.0), None, Some(1.001)],
            min_modulus: vec![1.0; 3],
            distances: vec![None; 3],
        };
        assert!((s.energy_drift() - 1e-3).abs() < 1e-12);
        assert!((s.momentum_drift() - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(EvolutionConfig::default().validate().is_ok());
        assert!(EvolutionConfig { dt: 0.0, ..Default::default() }.validate().is_err());
        assert!(EvolutionConfig { record_every: 0, ..Default::default() }.validate().is_err());
        assert!(EvolutionConfig { perturbation_amplitude: -1.0, ..Default::default() }.validate().is_err());
    }
}
