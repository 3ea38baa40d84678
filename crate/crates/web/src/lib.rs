//! Browser bindings. The plain functions return flattened `f64` buffers so the
//! page can draw them straight onto a canvas.

use qworkscope::detector::{husimi_q, run_for_snapshot, DetectorConfig, GridSpec};
use qworkscope::quadrature::{linspace, logspace};
use qworkscope::spin::{
    average_works, density_profile, spin_snapshot, InitialState, SpinAmplitudes, SpinParams,
    SWEEP_TOL,
};
use wasm_bindgen::prelude::*;

fn state(coherent: bool) -> InitialState {
    if coherent {
        InitialState::CoherentGibbs
    } else {
        InitialState::Thermal
    }
}

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// `[W, total, incoherent, coherent]` per grid point.
pub fn work_profile(
    p: SpinParams,
    coherent: bool,
    w_min: f64,
    w_max: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    if points < 2 || w_max <= w_min {
        return Err("need at least two points on a non-empty W range".into());
    }
    let rows = density_profile(
        &p,
        state(coherent),
        &linspace(w_min, w_max, points),
        SWEEP_TOL,
    )
    .map_err(text)?;
    Ok(rows
        .iter()
        .flat_map(|r| [r.w, r.total, r.incoherent, r.coherent])
        .collect())
}

/// `[t', <W+> + <W->, <Wc>]` per duration on a log grid.
pub fn coherent_work_sweep(
    p: SpinParams,
    t_min: f64,
    t_max: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    if points < 2 || t_min <= 0.0 || t_max <= t_min {
        return Err("need at least two durations with 0 < t_min < t_max".into());
    }
    let mut out = Vec::with_capacity(3 * points);
    for t in logspace(t_min, t_max, points) {
        let q = p.with_t_prime(t).map_err(text)?;
        let amps = SpinAmplitudes::propagate(&q, SWEEP_TOL).map_err(text)?;
        let w = average_works(&q, &amps).map_err(text)?;
        out.extend([t, w.w_plus + w.w_minus, w.w_coherent]);
    }
    Ok(out)
}

/// Detector phase-space map after the second coupling for the coherent Gibbs
/// start: `[re_min, re_max, im_min, im_max, n_re, n_im, q...]`, row-major in Re.
pub fn husimi_map(p: SpinParams, re_points: usize, im_points: usize) -> Result<Vec<f64>, String> {
    if re_points < 2 || im_points < 2 {
        return Err("grid needs at least two points per axis".into());
    }
    let amps = SpinAmplitudes::propagate(&p, SWEEP_TOL).map_err(text)?;
    let snap = spin_snapshot(&p, &amps, InitialState::CoherentGibbs).map_err(text)?;
    let mut cfg = DetectorConfig::for_snapshot(&snap);
    cfg.grid = GridSpec {
        re_points,
        im_points,
        ..cfg.grid
    };
    let (cfg, det) = run_for_snapshot(&snap, &cfg).map_err(text)?;
    let q = husimi_q(&det, &cfg).map_err(text)?;
    let g = &cfg.grid;
    let mut out = vec![
        g.re_min,
        g.re_max,
        g.im_min,
        g.im_max,
        re_points as f64,
        im_points as f64,
    ];
    out.extend(q.values);
    Ok(out)
}

fn params(nu0: f64, nu_t: f64, t_prime: f64, beta: f64, sigma: f64) -> Result<SpinParams, JsError> {
    SpinParams::new(nu0, nu_t, t_prime, beta, sigma).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = workProfile)]
#[allow(clippy::too_many_arguments)]
pub fn work_profile_js(
    nu0: f64,
    nu_t: f64,
    t_prime: f64,
    beta: f64,
    sigma: f64,
    coherent: bool,
    w_min: f64,
    w_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    let p = params(nu0, nu_t, t_prime, beta, sigma)?;
    work_profile(p, coherent, w_min, w_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = coherentWorkSweep)]
pub fn coherent_work_sweep_js(
    nu0: f64,
    nu_t: f64,
    beta: f64,
    sigma: f64,
    t_min: f64,
    t_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    let p = params(nu0, nu_t, t_min, beta, sigma)?;
    coherent_work_sweep(p, t_min, t_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = husimiMap)]
pub fn husimi_map_js(
    nu0: f64,
    nu_t: f64,
    t_prime: f64,
    beta: f64,
    sigma: f64,
    re_points: usize,
    im_points: usize,
) -> Result<Vec<f64>, JsError> {
    let p = params(nu0, nu_t, t_prime, beta, sigma)?;
    husimi_map(p, re_points, im_points).map_err(|e| JsError::new(&e))
}
