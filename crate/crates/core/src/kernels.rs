//! Interaction kernels described by their Fourier symbol Ŵ(ξ).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anything that can be evaluated as an even Fourier symbol.
pub trait FourierSymbol {
    fn symbol(&self, xi: f64) -> f64;
}

impl<F: Fn(f64) -> f64> FourierSymbol for F {
    fn symbol(&self, xi: f64) -> f64 {
        self(xi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Dirac,
    ExpPair { alpha: f64, beta: f64 },
    LogKernel { alpha: f64 },
    PerturbedLog { sigma: f64, m: u32 },
    ThreeDelta { sigma: f64 },
    Roton { a: f64, b: f64, c: f64 },
}

/// JSON form: `{"name": "exp_pair", "params": {"alpha": 0.05, "beta": 0.15}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelSpec", into = "KernelSpec")]
pub struct InteractionKernel {
    kind: KernelKind,
    scale: f64,
}

/// 3(ξ coth ξ − 1)/ξ², the symbol of -(3/π) ln(1 - e^{-π|x|}).
pub fn log_symbol(xi: f64) -> f64 {
    let a = xi.abs();
    if a < 1e-4 {
        return 1.0 - a * a / 15.0;
    }
    3.0 * (a / a.tanh() - 1.0) / (a * a)
}

impl InteractionKernel {
    pub fn new(kind: KernelKind) -> Result<Self> {
        match kind {
            KernelKind::Dirac => {}
            KernelKind::ExpPair { alpha, beta } => {
                if !(alpha > 0.0 && beta > 2.0 * alpha && beta.is_finite()) {
                    return Err(Error::Kernel(format!(
                        "exp_pair needs beta > 2 alpha > 0, got alpha={alpha}, beta={beta}"
                    )));
                }
            }
            KernelKind::LogKernel { alpha } => {
                if !(0.0..1.0).contains(&alpha) {
                    return Err(Error::Kernel(format!("log_kernel needs alpha in [0, 1), got {alpha}")));
                }
            }
            KernelKind::PerturbedLog { sigma, m } => {
                let lo = -PI * PI * (m as f64).powi(2) / 2.0;
                if m == 0 || !(sigma > lo && sigma <= 3.0) {
                    return Err(Error::Kernel(format!(
                        "perturbed_log needs m >= 1 and sigma in ({lo}, 3], got m={m}, sigma={sigma}"
                    )));
                }
            }
            KernelKind::ThreeDelta { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::Kernel(format!("three_delta needs sigma > 0, got {sigma}")));
                }
            }
            KernelKind::Roton { a, b, c } => {
                if !(a.is_finite() && b.is_finite() && c.is_finite()) {
                    return Err(Error::Kernel("roton parameters must be finite".into()));
                }
            }
        }
        let k = Self { kind, scale: 1.0 };
        let w0 = k.symbol(0.0);
        if (w0 - 1.0).abs() > 1e-12 {
            return Err(Error::Kernel(format!("normalization W(0) = {w0} != 1")));
        }
        Ok(k)
    }

    pub fn dirac() -> Self {
        Self { kind: KernelKind::Dirac, scale: 1.0 }
    }

    pub fn exp_pair(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(KernelKind::ExpPair { alpha, beta })
    }

    pub fn log_kernel(alpha: f64) -> Result<Self> {
        Self::new(KernelKind::LogKernel { alpha })
    }

    pub fn perturbed_log(sigma: f64, m: u32) -> Result<Self> {
        Self::new(KernelKind::PerturbedLog { sigma, m })
    }

    pub fn three_delta(sigma: f64) -> Result<Self> {
        Self::new(KernelKind::ThreeDelta { sigma })
    }

    pub fn roton(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(KernelKind::Roton { a, b, c })
    }

    /// Same kernel with symbol multiplied by `factor`. Leaves the catalog
    /// normalization; meant for experiments such as the sign-flipped kernel.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { kind: self.kind, scale: self.scale * factor }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            KernelKind::Dirac => "dirac",
            KernelKind::ExpPair { .. } => "exp_pair",
            KernelKind::LogKernel { .. } => "log_kernel",
            KernelKind::PerturbedLog { .. } => "perturbed_log",
            KernelKind::ThreeDelta { .. } => "three_delta",
            KernelKind::Roton { .. } => "roton",
        }
    }

    pub(crate) fn is_identity(&self) -> bool {
        matches!(self.kind, KernelKind::Dirac) && self.scale == 1.0
    }

    pub fn symbol(&self, xi: f64) -> f64 {
        let base = match self.kind {
            KernelKind::Dirac => 1.0,
            KernelKind::ExpPair { alpha, beta } => {
                beta / (beta - 2.0 * alpha) * (1.0 - 2.0 * alpha * beta / (xi * xi + beta * beta))
            }
            KernelKind::LogKernel { alpha } => (1.0 - alpha * log_symbol(xi)) / (1.0 - alpha),
            KernelKind::PerturbedLog { sigma, m } => {
                let mp2 = (m as f64 * PI).powi(2);
                2.0 * mp2 / (mp2 + 2.0 * sigma) * (1.0 - 0.5 * log_symbol(xi) + sigma / (xi * xi + mp2))
            }
            KernelKind::ThreeDelta { sigma } => 2.0 - (sigma * xi).cos(),
            KernelKind::Roton { a, b, c } => {
                let x2 = xi * xi;
                (1.0 + a * x2 + b * x2 * x2) * (-c * x2).exp()
            }
        };
        self.scale * base
    }

    /// c_* = √(2Ŵ(0)).
    pub fn speed_of_sound(&self) -> Result<f64> {
        speed_of_sound(self)
    }

    pub fn to_spec(&self) -> KernelSpec {
        let mut params = BTreeMap::new();
        match self.kind {
            KernelKind::Dirac => {}
            KernelKind::ExpPair { alpha, beta } => {
                params.insert("alpha".into(), alpha);
                params.insert("beta".into(), beta);
            }
            KernelKind::LogKernel { alpha } => {
                params.insert("alpha".into(), alpha);
            }
            KernelKind::PerturbedLog { sigma, m } => {
                params.insert("sigma".into(), sigma);
                params.insert("m".into(), m as f64);
            }
            KernelKind::ThreeDelta { sigma } => {
                params.insert("sigma".into(), sigma);
            }
            KernelKind::Roton { a, b, c } => {
                params.insert("a".into(), a);
                params.insert("b".into(), b);
                params.insert("c".into(), c);
            }
        }
        if self.scale != 1.0 {
            params.insert("scale".into(), self.scale);
        }
        KernelSpec { name: self.name().into(), params }
    }
}

impl FourierSymbol for InteractionKernel {
    fn symbol(&self, xi: f64) -> f64 {
        InteractionKernel::symbol(self, xi)
    }
}

impl TryFrom<KernelSpec> for InteractionKernel {
    type Error = Error;

    fn try_from(spec: KernelSpec) -> Result<Self> {
        let expected: &[&str] = match spec.name.as_str() {
            "dirac" => &[],
            "exp_pair" => &["alpha", "beta"],
            "log_kernel" => &["alpha"],
            "perturbed_log" => &["sigma", "m"],
            "three_delta" => &["sigma"],
            "roton" => &["a", "b", "c"],
            other => return Err(Error::Kernel(format!("unknown kernel name '{other}'"))),
        };
        for key in spec.params.keys() {
            if !expected.contains(&key.as_str()) && key != "scale" {
                return Err(Error::Kernel(format!("unknown parameter '{key}' for {}", spec.name)));
            }
        }
        let get = |k: &str| {
            spec.params
                .get(k)
                .copied()
                .ok_or_else(|| Error::Kernel(format!("missing parameter '{k}' for {}", spec.name)))
        };
        let kind = match spec.name.as_str() {
            "dirac" => KernelKind::Dirac,
            "exp_pair" => KernelKind::ExpPair { alpha: get("alpha")?, beta: get("beta")? },
            "log_kernel" => KernelKind::LogKernel { alpha: get("alpha")? },
            "perturbed_log" => {
                let m = get("m")?;
                if m.fract() != 0.0 || m < 1.0 || m > u32::MAX as f64 {
                    return Err(Error::Kernel(format!("perturbed_log m must be a positive integer, got {m}")));
                }
                KernelKind::PerturbedLog { sigma: get("sigma")?, m: m as u32 }
            }
            "three_delta" => KernelKind::ThreeDelta { sigma: get("sigma")? },
            _ => KernelKind::Roton { a: get("a")?, b: get("b")?, c: get("c")? },
        };
        let k = InteractionKernel::new(kind)?;
        match spec.params.get("scale") {
            Some(&s) if !s.is_finite() => Err(Error::Kernel(format!("scale must be finite, got {s}"))),
            Some(&s) => Ok(k.scaled(s)),
            None => Ok(k),
        }
    }
}

impl From<InteractionKernel> for KernelSpec {
    fn from(k: InteractionKernel) -> Self {
        k.to_spec()
    }
}

pub fn speed_of_sound<S: FourierSymbol + ?Sized>(kernel: &S) -> Result<f64> {
    let w0 = kernel.symbol(0.0);
    if w0 <= 0.0 {
        return Err(Error::Kernel(format!("W(0) = {w0} <= 0; no speed of sound")));
    }
    Ok((2.0 * w0).sqrt())
}

/// Bogoliubov dispersion w(ξ) = √(ξ⁴ + 2Ŵ(ξ)ξ²).
pub fn dispersion<S: FourierSymbol + ?Sized>(kernel: &S, xi: f64) -> Result<f64> {
    let x2 = xi * xi;
    let rad = x2 * x2 + 2.0 * kernel.symbol(xi) * x2;
    if rad < 0.0 {
        return Err(Error::NegativeRadicand { xi });
    }
    Ok(rad.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub xi: f64,
    pub value: f64,
    pub kind: ExtremumKind,
}

/// Golden-section search for a minimum of `f` on [a, b].
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Interior local extrema of w on [ξ_min, ξ_max], found on a uniform
/// sample and refined by golden section.
pub fn dispersion_extrema<S: FourierSymbol + ?Sized>(
    kernel: &S,
    xi_min: f64,
    xi_max: f64,
    n_samples: usize,
) -> Result<Vec<Extremum>> {
    if !(xi_min > 0.0 && xi_max > xi_min) {
        return Err(Error::Domain(format!("need 0 < xi_min < xi_max, got [{xi_min}, {xi_max}]")));
    }
    if n_samples < 3 {
        return Err(Error::Domain("need at least 3 samples".into()));
    }
    let w = |xi: f64| {
        let x2 = xi * xi;
        (x2 * x2 + 2.0 * kernel.symbol(xi) * x2).max(0.0).sqrt()
    };
    let step = (xi_max - xi_min) / (n_samples - 1) as f64;
    let xs: Vec<f64> = (0..n_samples).map(|i| xi_min + i as f64 * step).collect();
    let ws: Vec<f64> = xs.iter().map(|&x| w(x)).collect();
    let mut out = Vec::new();
    for i in 1..n_samples - 1 {
        let kind = if ws[i] > ws[i - 1] && ws[i] >= ws[i + 1] {
            ExtremumKind::Max
        } else if ws[i] < ws[i - 1] && ws[i] <= ws[i + 1] {
            ExtremumKind::Min
        } else {
            continue;
        };
        let xi = match kind {
            ExtremumKind::Max => golden_min(|x| -w(x), xs[i - 1], xs[i + 1], 1e-9),
            ExtremumKind::Min => golden_min(w, xs[i - 1], xs[i + 1], 1e-9),
        };
        out.push(Extremum { xi, value: w(xi), kind });
    }
    Ok(out)
}
