//! Browser bindings. Every export returns a flat `Float64Array` laid out
//! row by row; the plain functions below are what the bindings call and what
//! the native tests exercise.

use riccati_expint::dense::rel_diff;
use riccati_expint::integrators::{integrate, IntegratorConfig, Scheme};
use riccati_expint::oracle::{radon_trajectory, RadonOptions};
use riccati_expint::phifun::phi_scalar;
use riccati_expint::problems::ProblemSpec;
use wasm_bindgen::prelude::*;

/// Largest grid parameter accepted by [`fdm_norms`]; keeps the page responsive.
pub const MAX_FDM_K: usize = 8;

/// Rows `(t, tanh t, ExpEuler, Erow3)` for `x' = 1 − x²`, `x(0) = 0` on `[0, t_end]`.
pub fn tanh_rows(h: f64, t_end: f64) -> Result<Vec<f64>, String> {
    let p = ProblemSpec::ScalarTanh.build(0).map_err(|e| e.to_string())?;
    let run = |scheme| {
        integrate(&p, &IntegratorConfig::new(scheme, h, t_end)).map_err(|e| e.to_string())
    };
    let ee = run(Scheme::GExpEuler)?;
    let e3 = run(Scheme::Erow3Dense)?;
    let mut out = Vec::with_capacity(4 * ee.times.len());
    for i in 0..ee.times.len() {
        let t = ee.times[i];
        out.extend([
            t,
            t.tanh(),
            ee.states[i].to_dense()[(0, 0)],
            e3.states[i].to_dense()[(0, 0)],
        ]);
    }
    Ok(out)
}

/// Rows `(z, φ₀(z), φ₁(z), φ₂(z), φ₃(z))` on `samples` equispaced points.
pub fn phi_rows(z_min: f64, z_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    if samples < 2 || !(z_min < z_max) || !z_min.is_finite() || !z_max.is_finite() {
        return Err("need z_min < z_max and at least 2 samples".into());
    }
    let mut out = Vec::with_capacity(5 * samples);
    for i in 0..samples {
        let z = z_min + (z_max - z_min) * i as f64 / (samples - 1) as f64;
        out.push(z);
        out.extend((0..4).map(|j| phi_scalar(j, z)));
    }
    Ok(out)
}

/// Rows `(t, ‖X‖_F, ‖X_ref‖_F, relative error)` on `fdm-sym:k=<k>`.
pub fn fdm_rows(k: usize, h: f64, scheme: &str, seed: u64) -> Result<Vec<f64>, String> {
    if k == 0 || k > MAX_FDM_K {
        return Err(format!("grid parameter must lie in 1..={MAX_FDM_K}"));
    }
    let scheme: Scheme = scheme.parse().map_err(|e: riccati_expint::Error| e.to_string())?;
    let p = ProblemSpec::FdmSym { k }.build(seed).map_err(|e| e.to_string())?;
    let traj = integrate(&p, &IntegratorConfig::new(scheme, h, 1.0)).map_err(|e| e.to_string())?;
    let refs = radon_trajectory(&p, &traj.times, &RadonOptions::default())
        .map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(4 * refs.len());
    for ((t, s), r) in traj.times.iter().zip(&traj.states).zip(&refs) {
        let x = s.to_dense();
        out.extend([*t, x.norm(), r.norm(), rel_diff(&x, r)]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn tanh_trajectories(h: f64, t_end: f64) -> Result<Vec<f64>, JsError> {
    tanh_rows(h, t_end).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn phi_curves(z_min: f64, z_max: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    phi_rows(z_min, z_max, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fdm_norms(k: usize, h: f64, scheme: &str, seed: u32) -> Result<Vec<f64>, JsError> {
    fdm_rows(k, h, scheme, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn scheme_names() -> Vec<String> {
    Scheme::ALL.iter().map(|s| s.name().to_string()).collect()
}
