//! Browser demo: rodeo success-probability curves, jitter suppression and
//! gate counts. Each export is a thin wrapper over a plain function so the
//! logic is testable off-wasm.

use cgnet::noise::{self, JitterMode, JitterScale};
use cgnet::pauli::{diagonalize, Level};
use cgnet::rodeo;
use cgnet::transpile::{predict_chain_counts, transpiled_count, ChainMethod};
use cgnet::varsub::{self, AnsatzParams, Axis};
use cgnet::{Circuit, NativeGateSet, PauliHamiltonian, StateVector};
use wasm_bindgen::prelude::*;

fn levels(hamiltonian: &str, state: &str) -> Result<Vec<Level>, String> {
    let h: PauliHamiltonian = hamiltonian.parse().map_err(|e| format!("hamiltonian: {e}"))?;
    let psi = StateVector::product(state).map_err(|e| format!("state: {e}"))?;
    Ok(diagonalize(&h, &psi).map_err(|e| e.to_string())?.levels)
}

fn grid(e_min: f64, e_max: f64, points: usize) -> Result<Vec<f64>, String> {
    if points < 2 || !(e_max > e_min) {
        return Err("need at least 2 points and e_max > e_min".into());
    }
    Ok((0..points).map(|i| e_min + (e_max - e_min) * i as f64 / (points - 1) as f64).collect())
}

fn jitter_mode(mode: &str) -> Result<JitterMode, String> {
    mode.parse()
}

/// Noiseless success probability on an energy grid.
pub fn success_curve(hamiltonian: &str, state: &str, sigma: f64, cycles: usize, e_min: f64, e_max: f64, points: usize) -> Result<Vec<f64>, String> {
    let lv = levels(hamiltonian, state)?;
    Ok(grid(e_min, e_max, points)?.into_iter().map(|e| rodeo::analytic_pn(e, &lv, sigma, cycles)).collect())
}

/// Success probability with Gaussian eigenvalue jitter of scale `eps`.
pub fn jitter_curve(
    hamiltonian: &str,
    state: &str,
    sigma: f64,
    cycles: usize,
    eps: f64,
    mode: &str,
    e_min: f64,
    e_max: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    let lv = levels(hamiltonian, state)?;
    let scale = JitterScale::Shared(eps);
    let mode = jitter_mode(mode)?;
    grid(e_min, e_max, points)?
        .into_iter()
        .map(|e| match mode {
            JitterMode::PerCycle => noise::noisy_pn_per_cycle(e, &lv, sigma, cycles, &scale),
            JitterMode::PerShot => noise::noisy_pn_per_shot(e, &lv, sigma, cycles, &scale),
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())
}

pub fn suppression(cycles: usize, sigma: f64, eps: f64, mode: &str) -> Result<f64, String> {
    Ok(noise::peak_suppression(cycles, sigma, eps, jitter_mode(mode)?))
}

fn builtin(name: &str) -> Result<Circuit, String> {
    let p = AnsatzParams::new(0.3, -0.5, 0.7, 0.2);
    let q = AnsatzParams::new(-0.4, 0.25, 0.1, -0.6);
    match name {
        "fig2_network" => varsub::build_network_circuit(&p, &q, Axis::Y, None).map_err(|e| e.to_string()),
        "fig4_hadamard" => varsub::build_hadamard_test_circuit(&p, &q, Axis::Y, None).map_err(|e| e.to_string()),
        "rodeo_cycle_reversal" => rodeo::rodeo_cycle_reversal(0.5, 1.0).map_err(|e| e.to_string()),
        "rodeo_cycle_naive" => rodeo::rodeo_cycle_naive(0.5, 1.0).map_err(|e| e.to_string()),
        _ => Err(format!("unknown circuit {name:?}")),
    }
}

/// `basis`, `two_qubit`, `one_qubit`, `source` lines for a built-in circuit.
pub fn gate_report(name: &str, basis: &str) -> Result<String, String> {
    let b: NativeGateSet = basis.parse().map_err(|e: cgnet::transpile::TranspileError| e.to_string())?;
    let c = transpiled_count(&builtin(name)?, b).map_err(|e| e.to_string())?;
    Ok(format!("basis: {b}\ntwo_qubit: {}\none_qubit: {}\nsource: {name}\n", c.two_qubit, c.one_qubit))
}

/// Predicted two-qubit gates per cycle on the `n`-site chain, `[naive, reversal]`.
pub fn chain_prediction(n: usize, sigma: f64, dt: f64) -> Result<Vec<f64>, String> {
    let f = |m| predict_chain_counts(n, sigma, dt, m).map(|v| v as f64).map_err(|e| e.to_string());
    Ok(vec![f(ChainMethod::NaiveControlled)?, f(ChainMethod::Reversal)?])
}

fn js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = successCurve)]
pub fn success_curve_js(hamiltonian: &str, state: &str, sigma: f64, cycles: usize, e_min: f64, e_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    js(success_curve(hamiltonian, state, sigma, cycles, e_min, e_max, points))
}

#[wasm_bindgen(js_name = jitterCurve)]
pub fn jitter_curve_js(
    hamiltonian: &str,
    state: &str,
    sigma: f64,
    cycles: usize,
    eps: f64,
    mode: &str,
    e_min: f64,
    e_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    js(jitter_curve(hamiltonian, state, sigma, cycles, eps, mode, e_min, e_max, points))
}

#[wasm_bindgen(js_name = peakSuppression)]
pub fn suppression_js(cycles: usize, sigma: f64, eps: f64, mode: &str) -> Result<f64, JsError> {
    js(suppression(cycles, sigma, eps, mode))
}

#[wasm_bindgen(js_name = gateReport)]
pub fn gate_report_js(name: &str, basis: &str) -> Result<String, JsError> {
    js(gate_report(name, basis))
}

#[wasm_bindgen(js_name = chainPrediction)]
pub fn chain_prediction_js(n: usize, sigma: f64, dt: f64) -> Result<Vec<f64>, JsError> {
    js(chain_prediction(n, sigma, dt))
}
