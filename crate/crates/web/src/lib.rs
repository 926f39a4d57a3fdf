//! Browser bindings: dispersion curves, closed-form contact solitons and a
//! small-grid minimization. Every call takes and returns JSON text.

use nlgp::closed_form::{gp_soliton, gp_soliton_invariants};
use nlgp::kernels::{dispersion, dispersion_extrema, KernelSpec};
use nlgp::minimizer::{minimize, Init, MinimizerConfig};
use nlgp::{Grid, InteractionKernel};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn kernel_from(text: &str) -> Result<InteractionKernel, String> {
    let spec: KernelSpec = serde_json::from_str(text).map_err(|e| e.to_string())?;
    InteractionKernel::try_from(spec).map_err(|e| e.to_string())
}

/// ω(ξ) on n samples of [0, ξ_max] plus the interior extrema.
pub fn dispersion_json(kernel: &str, xi_max: f64, n: usize) -> Result<Value, String> {
    let k = kernel_from(kernel)?;
    if !(xi_max > 0.0 && xi_max.is_finite()) || !(3..=100_000).contains(&n) {
        return Err("need xi_max > 0 and 3 <= n <= 100000".into());
    }
    let xi: Vec<f64> = (0..n).map(|i| xi_max * i as f64 / (n - 1) as f64).collect();
    let omega = xi.iter().map(|&x| dispersion(&k, x)).collect::<nlgp::Result<Vec<_>>>().map_err(|e| e.to_string())?;
    let extrema = dispersion_extrema(&k, 1e-6 * xi_max, xi_max, n.max(200)).map_err(|e| e.to_string())?;
    Ok(json!({ "xi": xi, "omega": omega, "extrema": extrema }))
}

/// Closed-form contact soliton of speed c sampled on [−L/2, L/2).
pub fn soliton_json(c: f64, n: usize, length: f64) -> Result<Value, String> {
    let g = Grid::new(n, length).map_err(|e| e.to_string())?;
    let s = gp_soliton(c, &g).map_err(|e| e.to_string())?;
    let (e, p) = gp_soliton_invariants(c).map_err(|e| e.to_string())?;
    let u = &s.complex.values;
    Ok(json!({
        "x": g.positions(),
        "eta": s.complex.eta(),
        "re_u": u.iter().map(|z| z.re).collect::<Vec<_>>(),
        "im_u": u.iter().map(|z| z.im).collect::<Vec<_>>(),
        "E": e,
        "p": p,
    }))
}

/// Minimizer at momentum q on a small grid.
pub fn minimize_json(kernel: &str, q: f64, n: usize, length: f64) -> Result<Value, String> {
    let k = kernel_from(kernel)?;
    if n > 4096 {
        return Err("the demo keeps n <= 4096".into());
    }
    let g = Grid::new(n, length).map_err(|e| e.to_string())?;
    let cfg = MinimizerConfig { max_iter: 20_000, ..Default::default() };
    let s = minimize(&k, q, Init::Kdv, &g, &cfg).map_err(|e| e.to_string())?;
    Ok(json!({
        "x": g.positions(),
        "eta": s.field.eta,
        "w": s.field.w,
        "E": s.energy,
        "c": s.c_est,
        "residual": s.residual_norm,
        "iterations": s.iterations,
        "converged": s.converged,
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = dispersion)]
pub fn dispersion_js(kernel: &str, xi_max: f64, n: usize) -> Result<String, JsValue> {
    to_js(dispersion_json(kernel, xi_max, n))
}

#[wasm_bindgen(js_name = soliton)]
pub fn soliton_js(c: f64, n: usize, length: f64) -> Result<String, JsValue> {
    to_js(soliton_json(c, n, length))
}

#[wasm_bindgen(js_name = minimize)]
pub fn minimize_js(kernel: &str, q: f64, n: usize, length: f64) -> Result<String, JsValue> {
    to_js(minimize_json(kernel, q, n, length))
}
