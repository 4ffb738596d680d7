//! wasm-bindgen bindings for the browser demo in `www/`.
//!
//! Every export takes the instance as JSON text (the same format the CLI
//! reads) and returns text: report JSON, sweep CSV or matrix CSV.

use respval::graph::DEFAULT_ROW_TOLERANCE;
use respval::io::{self, Instance};
use respval::solver::{self, SweepMethod, TruncationMode};
use respval::{DiscountFactor, RowStochasticMatrix, ZeroRowPolicy};
use wasm_bindgen::prelude::*;

fn load(instance_json: &str) -> Result<(Instance, RowStochasticMatrix), String> {
    let inst = io::parse_instance_json(instance_json).map_err(|e| e.to_string())?;
    let a = inst
        .matrix
        .resolve(DEFAULT_ROW_TOLERANCE, ZeroRowPolicy::SelfLoop)
        .map_err(|e| e.to_string())?;
    Ok((inst, a))
}

fn discount(gamma: f64) -> Result<DiscountFactor, String> {
    DiscountFactor::new(gamma).map_err(|e| e.to_string())
}

/// `{"exact": <report>, "series": <report>}` for one discount factor; the
/// series uses the strict depth for `epsilon`.
pub fn compute_reports(instance_json: &str, gamma: f64, epsilon: f64) -> Result<String, String> {
    let (inst, a) = load(instance_json)?;
    let g = discount(gamma)?;
    let exact = solver::exact_value(&a, &inst.impacts, g).map_err(|e| e.to_string())?;
    let series = solver::series_value(&a, &inst.impacts, g, epsilon, TruncationMode::Strict)
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{{\"exact\": {}, \"series\": {}}}",
        io::write_report_json(&exact).trim_end(),
        io::write_report_json(&series).trim_end()
    ))
}

/// Exact totals at `steps` interior discount factors `k/(steps+1)`, as CSV.
pub fn sweep_csv(instance_json: &str, steps: usize) -> Result<String, String> {
    let (inst, a) = load(instance_json)?;
    let grid = solver::interior_gamma_grid(steps).map_err(|e| e.to_string())?;
    let table = solver::gamma_sweep(&a, &inst.impacts, &grid, SweepMethod::Exact)
        .map_err(|e| e.to_string())?;
    Ok(io::write_sweep_csv(&table))
}

/// Propagation matrix at depth `q`, as CSV.
pub fn propagation_csv(instance_json: &str, gamma: f64, q: usize) -> Result<String, String> {
    let (_, a) = load(instance_json)?;
    let p = solver::propagation_matrix(&a, discount(gamma)?, q);
    Ok(io::write_matrix_csv(a.players(), &p))
}

#[wasm_bindgen]
pub fn compute(instance_json: &str, gamma: f64, epsilon: f64) -> Result<String, JsValue> {
    compute_reports(instance_json, gamma, epsilon).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sweep(instance_json: &str, steps: usize) -> Result<String, JsValue> {
    sweep_csv(instance_json, steps).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn propagation(instance_json: &str, gamma: f64, q: usize) -> Result<String, JsValue> {
    propagation_csv(instance_json, gamma, q).map_err(|e| JsValue::from_str(&e))
}
