//! Numerical checks of the kernel hypotheses: nonnegativity (H0), the
//! small-frequency condition (H1), and a falsifier for (H2').

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::kernels::FourierSymbol;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct H0Report {
    pub ok: bool,
    pub worst_value: f64,
    pub worst_xi: f64,
    pub value_at_zero: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct H1Report {
    pub ok: bool,
    pub second_derivative: f64,
    /// min over |ξ| < 2 of Ŵ(ξ) − (1 − ξ²/2)
    pub worst_margin: f64,
    pub worst_margin_xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFamily {
    /// g(x) = φ_s(x − b₁) + a·φ_s(x − b₂) on x > 0, params [s, b₁, b₂, a]
    TranslatedBumps,
    /// f(x) = x e^{−x²/s²}(1 + u₁x²/s² + u₂x⁴/s⁴), params [s, u₁, u₂]
    GaussPoly,
}

/// An odd test function f, stored by family and parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestFunction {
    pub family: TestFamily,
    pub params: Vec<f64>,
}

fn bump(y: f64, s: f64) -> f64 {
    let t = y / s;
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

impl TestFunction {
    /// f on x ≥ 0; the function is extended to x < 0 by oddness.
    pub fn half_line(&self, x: f64) -> f64 {
        let p = &self.params;
        match self.family {
            TestFamily::TranslatedBumps => {
                let (s, b1, b2, a) = (p[0], p[1], p[2], p[3]);
                let g = |y: f64| bump(y - b1, s) + a * bump(y - b2, s);
                // odd antisymmetrization f(x) = g(x) − g(−x)
                g(x) - g(-x)
            }
            TestFamily::GaussPoly => {
                let (s, u1, u2) = (p[0], p[1], p[2]);
                let r = x * x / (s * s);
                x * (-r).exp() * (1.0 + u1 * r + u2 * r * r)
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.half_line(x)
        } else {
            -self.half_line(-x)
        }
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        match self.family {
            TestFamily::TranslatedBumps => vec![(0.5, 4.0), (0.0, 30.0), (0.0, 30.0), (-2.0, 2.0)],
            TestFamily::GaussPoly => vec![(0.3, 5.0), (-3.0, 3.0), (-3.0, 3.0)],
        }
    }
}

/// Half-line quadrature of I(f) = ∫₀^∞ Ŵ(|f̂_s|² − |f̂_c|²) dξ
/// = −½ Re ∫_ℝ Ŵ ĝ² dξ, with g = f·1_{x>0}.
pub struct H2Quadrature {
    h: f64,
    m: usize,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Default for H2Quadrature {
    fn default() -> Self {
        Self::new(0.01, 1 << 14)
    }
}

impl H2Quadrature {
    pub fn new(spacing: f64, n_points: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n_points);
        Self { h: spacing, m: n_points, fft }
    }

    /// Returns (I(f), ‖f‖²_{L²(ℝ)}).
    pub fn evaluate<S: FourierSymbol + ?Sized>(&self, kernel: &S, f: &TestFunction) -> (f64, f64) {
        // the padded half is left at zero so ĝ² has no wrap-around
        let support = self.m / 2;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m];
        let mut norm2 = 0.0;
        for (j, b) in buf.iter_mut().enumerate().take(support).skip(1) {
            let v = f.half_line(j as f64 * self.h);
            *b = Complex64::new(v, 0.0);
            norm2 += v * v;
        }
        norm2 *= 2.0 * self.h;
        self.fft.process(&mut buf);
        let dxi = 2.0 * PI / (self.m as f64 * self.h);
        let mut acc = 0.0;
        for (k, c) in buf.iter().enumerate() {
            let kk = if k < self.m / 2 { k as f64 } else { k as f64 - self.m as f64 };
            let ghat = c * self.h;
            acc += kernel.symbol(kk * dxi) * (ghat * ghat).re;
        }
        (-0.5 * dxi * acc, norm2)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum H2Verdict {
    VerifiedOnFamily { min_ratio: f64, evaluations: usize },
    Violated { witness: TestFunction, integral: f64, norm2: f64, evaluations: usize },
    Inconclusive { reason: String, evaluations: usize },
}

impl H2Verdict {
    pub fn is_verified(&self) -> bool {
        matches!(self, H2Verdict::VerifiedOnFamily { .. })
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, H2Verdict::Violated { .. })
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub h0: Option<H0Report>,
    pub h1: Option<H1Report>,
    pub h2prime: Option<H2Verdict>,
    pub omega: Option<f64>,
}

impl HypothesisReport {
    pub fn h0_ok(&self) -> bool {
        self.h0.as_ref().is_some_and(|r| r.ok)
    }

    pub fn h1_ok(&self) -> bool {
        self.h1.as_ref().is_some_and(|r| r.ok)
    }

    pub fn full<S: FourierSymbol + ?Sized>(kernel: &S, xi_max: f64, n_samples: usize, search_budget: usize) -> Self {
        let h1 = check_h1(kernel);
        Self {
            h0: check_h0(kernel, xi_max, n_samples).h0,
            omega: h1.omega,
            h1: h1.h1,
            h2prime: check_h2prime(kernel, search_budget).h2prime,
        }
    }
}

pub fn check_h0<S: FourierSymbol + ?Sized>(kernel: &S, xi_max: f64, n_samples: usize) -> HypothesisReport {
    let n = n_samples.max(1000);
    let mut worst = (f64::INFINITY, 0.0);
    for i in 0..n {
        let xi = xi_max * i as f64 / (n - 1) as f64;
        let v = kernel.symbol(xi);
        if !(v >= worst.0) {
            worst = (v, xi);
        }
    }
    let w0 = kernel.symbol(0.0);
    let ok = worst.0 >= -1e-12 && (w0 - 1.0).abs() <= 1e-12;
    HypothesisReport {
        h0: Some(H0Report { ok, worst_value: worst.0, worst_xi: worst.1, value_at_zero: w0 }),
        ..Default::default()
    }
}

/// Ŵ″(0) by a five-point stencil at step 1e−3 with one Richardson step.
pub fn second_derivative_at_zero<S: FourierSymbol + ?Sized>(kernel: &S) -> f64 {
    let d = |h: f64| {
        let f = |x: f64| kernel.symbol(x);
        (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h)
    };
    let h = 1e-3;
    (16.0 * d(h / 2.0) - d(h)) / 15.0
}

pub fn check_h1<S: FourierSymbol + ?Sized>(kernel: &S) -> HypothesisReport {
    let d2 = second_derivative_at_zero(kernel);
    let n = 4001;
    let mut worst = (f64::INFINITY, 0.0);
    for i in 0..n {
        // open interval |ξ| < 2
        let xi = -2.0 + 4.0 * (i as f64 + 0.5) / n as f64;
        let m = kernel.symbol(xi) - (1.0 - 0.5 * xi * xi);
        if !(m >= worst.0) {
            worst = (m, xi);
        }
    }
    let ok = d2 > -1.0 && worst.0 >= -1e-12;
    HypothesisReport {
        h1: Some(H1Report { ok, second_derivative: d2, worst_margin: worst.0, worst_margin_xi: worst.1 }),
        omega: (d2 > -1.0).then(|| (1.0 + d2).sqrt()),
        ..Default::default()
    }
}

fn starts() -> Vec<TestFunction> {
    let mut out = Vec::new();
    for &s in &[0.6, 1.5] {
        for &b1 in &[0.0f64, 2.0, 5.0] {
            for &gap in &[1.0, 2.0, 4.0, 6.0, 9.0, 14.0] {
                for &a in &[-1.0, 1.0] {
                    out.push(TestFunction { family: TestFamily::TranslatedBumps, params: vec![s, b1.max(s), b1.max(s) + gap, a] });
                }
            }
        }
    }
    for &s in &[0.5, 1.0, 2.0, 4.0] {
        for &u1 in &[-1.0, 0.0, 1.0] {
            out.push(TestFunction { family: TestFamily::GaussPoly, params: vec![s, u1, 0.0] });
        }
    }
    out
}

/// Falsifier for (H2'): multi-start coordinate descent on I(f)/‖f‖² over
/// the two test families. At most `search_budget` evaluations.
pub fn check_h2prime<S: FourierSymbol + ?Sized>(kernel: &S, search_budget: usize) -> HypothesisReport {
    let quad = H2Quadrature::default();
    let budget = search_budget.max(100);
    let mut evals = 0usize;
    let score = |f: &TestFunction, evals: &mut usize| -> Option<(f64, f64, f64)> {
        *evals += 1;
        let (i, n2) = quad.evaluate(kernel, f);
        if !i.is_finite() || !n2.is_finite() {
            return None;
        }
        if n2 <= 0.0 {
            return Some((f64::INFINITY, i, n2));
        }
        Some((i / n2, i, n2))
    };

    let mut scored = Vec::new();
    for f in starts() {
        if evals >= budget / 3 {
            break;
        }
        match score(&f, &mut evals) {
            Some(s) => scored.push((s, f)),
            None => {
                return HypothesisReport {
                    h2prime: Some(H2Verdict::Inconclusive { reason: "non-finite integral".into(), evaluations: evals }),
                    ..Default::default()
                }
            }
        }
    }
    scored.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0));
    let mut best = scored[0].clone();

    'outer: for (s0, f0) in scored.into_iter().take(4) {
        let (mut cur, mut f) = (s0, f0);
        let bounds = f.bounds();
        let mut steps: Vec<f64> = bounds.iter().map(|(lo, hi)| 0.125 * (hi - lo)).collect();
        while steps.iter().any(|&s| s > 1e-3) {
            let mut improved = false;
            for p in 0..f.params.len() {
                for dir in [1.0, -1.0] {
                    if evals >= budget {
                        break 'outer;
                    }
                    let mut g = f.clone();
                    g.params[p] = (g.params[p] + dir * steps[p]).clamp(bounds[p].0, bounds[p].1);
                    if g.params[p] == f.params[p] {
                        continue;
                    }
                    if let Some(s) = score(&g, &mut evals) {
                        if s.0 < cur.0 {
                            cur = s;
                            f = g;
                            improved = true;
                            break;
                        }
                    }
                }
            }
            if !improved {
                for s in steps.iter_mut() {
                    *s *= 0.5;
                }
            }
            if cur.0 < best.0 .0 {
                best = (cur, f.clone());
            }
        }
        if cur.0 < best.0 .0 {
            best = (cur, f.clone());
        }
    }

    let ((ratio, integral, norm2), witness) = best;
    let verdict = if ratio < -1e-9 {
        H2Verdict::Violated { witness, integral, norm2, evaluations: evals }
    } else {
        H2Verdict::VerifiedOnFamily { min_ratio: ratio, evaluations: evals }
    };
    HypothesisReport { h2prime: Some(verdict), ..Default::default() }
}
