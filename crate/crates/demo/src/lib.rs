//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes one JSON request string and returns a JSON string, so
//! the page needs no generated TypeScript types. The same functions are
//! callable natively through [`api`].

use wasm_bindgen::prelude::*;

pub mod api;

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Preset names, formulas and their models.
#[wasm_bindgen]
pub fn presets() -> String {
    api::presets()
}

/// `{"model": "car", "levels": [[throttle, brake], ...]}` to a trace.
#[wasm_bindgen]
pub fn simulate(request: &str) -> Result<String, JsValue> {
    js(api::simulate(request))
}

/// Like `simulate`, plus `"spec"` (preset name or formula); adds the
/// robustness of the trace.
#[wasm_bindgen]
pub fn evaluate(request: &str) -> Result<String, JsValue> {
    js(api::evaluate(request))
}

/// `{"preset": "s4", "variant": "mcts-pw", "solver": "cmaes", "seed": 1}`
/// to one trial report and the trace of its best input.
#[wasm_bindgen]
pub fn falsify(request: &str) -> Result<String, JsValue> {
    js(api::falsify(request))
}
