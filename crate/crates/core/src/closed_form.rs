//! Analytic references: the contact-interaction dark solitons and the
//! small-amplitude KdV ansatz.

use std::f64::consts::SQRT_2;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{ComplexField, HydroField};
use crate::grid::Grid;

fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    if c.is_finite() {
        1.0 / (c * c)
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct GpSoliton {
    pub c: f64,
    pub complex: ComplexField,
    /// `None` for the black soliton c = 0, whose modulus vanishes.
    pub hydro: Option<HydroField>,
}

struct GpProfile {
    a: f64,
    b: f64,
    k: f64,
}

impl GpProfile {
    fn new(c: f64) -> Result<Self> {
        if !(0.0..SQRT_2).contains(&c) {
            return Err(Error::Domain(format!("soliton speed must lie in [0, √2), got {c}")));
        }
        let k = (2.0 - c * c).sqrt();
        Ok(Self { a: k / SQRT_2, b: c / SQRT_2, k })
    }

    fn u(&self, x: f64) -> Complex64 {
        Complex64::new(self.a * (0.5 * self.k * x).tanh(), -self.b)
    }

    fn du(&self, x: f64) -> f64 {
        0.5 * self.a * self.k * sech2(0.5 * self.k * x)
    }

    fn eta(&self, x: f64) -> f64 {
        self.a * self.a * sech2(0.5 * self.k * x)
    }

    /// |u|² = b² + a²tanh², written out to avoid 1 − η cancelling near c = 0
    fn rho2(&self, x: f64) -> f64 {
        let t = (0.5 * self.k * x).tanh();
        self.b * self.b + self.a * self.a * t * t
    }

    /// Im(ū u′)/|u|² = (c/2)·η/(1−η)
    fn w(&self, x: f64) -> f64 {
        SQRT_2 * self.b * 0.5 * self.eta(x) / self.rho2(x)
    }
}

/// u_c(x) = √((2−c²)/2)·tanh(√(2−c²)x/2) − i c/√2 sampled on the grid.
pub fn gp_soliton(c: f64, grid: &Grid) -> Result<GpSoliton> {
    let prof = GpProfile::new(c)?;
    let xs = grid.positions();
    let values = xs.iter().map(|&x| prof.u(x)).collect();
    // arg u(+∞) − arg u(−∞), passing below the origin
    let phase_jump = 2.0 * prof.a.atan2(prof.b);
    let complex = ComplexField::new(grid.clone(), values, phase_jump)?;
    let hydro = if c > 0.0 {
        let eta = xs.iter().map(|&x| prof.eta(x)).collect();
        let w = xs.iter().map(|&x| prof.w(x)).collect();
        Some(HydroField::new(grid.clone(), eta, w)?)
    } else {
        None
    };
    Ok(GpSoliton { c, complex, hydro })
}

/// Energy and momentum of u_c with the contact kernel, by adaptive
/// quadrature of the analytic integrands.
pub fn gp_soliton_invariants(c: f64) -> Result<(f64, f64)> {
    if !(c > 0.0 && c < SQRT_2) {
        return Err(Error::Domain(format!("need 0 < c < √2, got {c}")));
    }
    let prof = GpProfile::new(c)?;
    // both integrands are even and decay like e^{-2kx}
    let x_max = 60.0 / prof.k;
    let e_density = |x: f64| {
        let d = prof.du(x);
        let e = prof.eta(x);
        0.5 * d * d + 0.25 * e * e
    };
    let p_density = |x: f64| 0.5 * prof.eta(x) * prof.w(x);
    // slow solitons concentrate the momentum density in a core of width ~c
    let core = 2.0 * prof.b / (prof.a * prof.k);
    let e = integrate_split(e_density, x_max, core);
    let p = integrate_split(p_density, x_max, core);
    Ok((2.0 * e, 2.0 * p))
}

/// ∫₀^{x_max} on pieces of a few widths each, so the double-exponential rule
/// sees smooth, well-scaled integrands. Pieces grow geometrically from `core`.
fn integrate_split(f: impl Fn(f64) -> f64, x_max: f64, core: f64) -> f64 {
    let pieces = 12;
    let first = x_max / pieces as f64;
    let mut cuts = vec![0.0];
    let mut c = core;
    while c < first {
        cuts.push(c);
        c *= 8.0;
    }
    cuts.extend((1..=pieces).map(|i| first * i as f64));
    cuts.windows(2).map(|w| quadrature::integrate(&f, w[0], w[1], 1e-14).integral).sum()
}

/// Speed c whose soliton momentum equals q (bisection; p decreases in c).
/// Clipped to the ends of [c_min, √2) when q is out of range.
pub fn gp_speed_for_momentum(q: f64, c_min: f64) -> Result<f64> {
    let p = |c: f64| gp_soliton_invariants(c).map(|r| r.1);
    let hi_c = SQRT_2 * (1.0 - 1e-9);
    if q >= p(c_min)? {
        return Ok(c_min);
    }
    if q <= p(hi_c)? {
        return Ok(hi_c);
    }
    let (mut lo, mut hi) = (c_min, hi_c);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid)? > q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KdvAnsatz {
    pub epsilon: f64,
    pub omega: f64,
}

impl KdvAnsatz {
    pub fn new(epsilon: f64, omega: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Domain(format!("epsilon must lie in [0, 1], got {epsilon}")));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Domain(format!("omega must be positive, got {omega}")));
        }
        Ok(Self { epsilon, omega })
    }
}

/// A(x) = −¼ sech²(x/(2ω)).
pub fn kdv_profile(x: f64, omega: f64) -> f64 {
    -0.25 * sech2(x / (2.0 * omega))
}

/// ρ = 1 + ε²A(εx), w = ε²φ′(εx) with φ′ = −√2A.
pub fn kdv_ansatz(a: KdvAnsatz, grid: &Grid) -> Result<HydroField> {
    let KdvAnsatz { epsilon: eps, omega } = a;
    if eps <= 0.0 || grid.length() < 40.0 * omega / eps {
        return Err(Error::Domain(format!(
            "box length {} shorter than 40ω/ε = {}",
            grid.length(),
            40.0 * omega / eps
        )));
    }
    let e2 = eps * eps;
    let mut eta = Vec::with_capacity(grid.n_points());
    let mut w = Vec::with_capacity(grid.n_points());
    for x in grid.positions() {
        let amp = kdv_profile(eps * x, omega);
        let rho = 1.0 + e2 * amp;
        eta.push(1.0 - rho * rho);
        w.push(-SQRT_2 * e2 * amp);
    }
    HydroField::new(grid.clone(), eta, w)
}

/// (E_pred, p_pred) = ((ω/3)(ε³ − ε⁵/4), (√2ω/6)(ε³ − ε⁵/10)).
pub fn kdv_predictions(a: KdvAnsatz) -> (f64, f64) {
    let (e, w) = (a.epsilon, a.omega);
    let e3 = e.powi(3);
    let e5 = e.powi(5);
    (w / 3.0 * (e3 - e5 / 4.0), SQRT_2 * w / 6.0 * (e3 - e5 / 10.0))
}

/// ε ∈ (0, 1] with p_pred(ε) = q, or 1 when q exceeds p_pred(1).
pub fn kdv_epsilon_for_momentum(q: f64, omega: f64) -> f64 {
    let p = |e: f64| kdv_predictions(KdvAnsatz { epsilon: e, omega }).1;
    if q >= p(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if p(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// K₁ = (3√2/ω)^{5/3} ω / 20.
pub fn kdv_k1(omega: f64) -> f64 {
    (3.0 * SQRT_2 / omega).powf(5.0 / 3.0) * omega / 20.0
}

/// L² norm of ω²A″ − 6A² − A for `scale`·A, A the sech² profile.
pub fn kdv_profile_residual_scaled(omega: f64, scale: f64, grid: &Grid) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    let amp: Vec<f64> = grid.positions().iter().map(|&x| scale * kdv_profile(x, omega)).collect();
    let d2 = grid.differentiate(&amp, 2)?;
    let r: Vec<f64> = amp
        .iter()
        .zip(&d2)
        .map(|(&a, &d)| {
            let v = omega * omega * d - 6.0 * a * a - a;
            v * v
        })
        .collect();
    Ok(grid.quadrature(&r).sqrt())
}

pub fn kdv_profile_residual(omega: f64, grid: &Grid) -> Result<f64> {
    kdv_profile_residual_scaled(omega, 1.0, grid)
}
