//! Browser bindings. Every export takes and returns JSON text; the `*_json`
//! functions hold the logic so they can be tested natively.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use specbound::classify::{classify, power_residual, star_square_norm, Form, Options};
use specbound::elop::{length, trace_vector, ElOp};
use specbound::gen;
use specbound::json::{complex_to_value, operator_to_value, parse_operator};
use specbound::matcore::{basis_vec, Tolerance};
use specbound::specnorm::{estimate_spectral_norm, orbit_family, ratio};

const BUDGET: usize = 2000;

fn to_js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Length, verdict and a lower bound for the spectral norm.
pub fn analyze_json(op: &str, seed: u64) -> Result<String, String> {
    let s = parse_operator(op).map_err(|e| e.to_string())?;
    let tol = Tolerance::default();
    let v = classify(&s, &tol, &Options::new(BUDGET, seed));
    let (lower, _) = estimate_spectral_norm(&s, BUDGET, seed);
    Ok(json!({
        "dim": s.dim(),
        "terms": s.term_count(),
        "length": length(&s, &tol),
        "verdict": v.to_json(),
        "spectral_norm_lower_bound": lower,
    })
    .to_string())
}

/// Spectral ratios `r(Sx_k)/r(x_k)` along the orbit `g_k y g_k⁻¹` built from
/// the first basis vector `ζ` with `Kζ ∉ ℂζ`, `K` the trace vector.
pub fn orbit_curve_json(op: &str) -> Result<String, String> {
    let s = parse_operator(op).map_err(|e| e.to_string())?;
    if s.dim() < 2 {
        return Err("the orbit needs n ≥ 2".into());
    }
    let n = s.dim();
    let k = trace_vector(&s);
    let (zeta, w) = (0..n)
        .map(|i| basis_vec(n, i))
        .map(|z| {
            let w = &k * &z;
            (z, w)
        })
        .find(|(z, w)| (w - z * z.dotc(w)).norm() > 1e-9 * (1.0 + w.norm()))
        .ok_or("the trace vector is scalar on the basis, so the orbit does not grow")?;
    let family = orbit_family(&zeta, &w).ok_or("orbit construction failed")?;
    let points: Vec<Value> = family
        .iter()
        .map(|(k, x)| {
            let r = ratio(&s, x).ok().flatten();
            json!({"k": k, "ratio": r})
        })
        .collect();
    Ok(Value::Array(points).to_string())
}

/// A generated form (ii) or (iii) operator with its `S*S` norm and the
/// largest sampled `‖(Sx)⁵‖` for unit `Sx`.
pub fn grid_identity_json(form: &str, n: usize, seed: u64) -> Result<String, String> {
    let form = match form {
        "ii" | "2" => Form::II,
        "iii" | "3" => Form::III,
        _ => return Err(format!("unknown form `{form}`; expected ii or iii")),
    };
    let g = gen::form_op(form, n, seed).map_err(|e| e.to_string())?;
    let s: &ElOp = &g.op;
    Ok(json!({
        "operator": operator_to_value(s),
        "lambda": g.lambdas.iter().copied().map(complex_to_value).collect::<Vec<_>>(),
        "star_square_norm": star_square_norm(s),
        "fifth_power_residual": power_residual(s, 5, 20, seed),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn analyze(op: &str, seed: u32) -> Result<String, JsValue> {
    to_js(analyze_json(op, u64::from(seed)))
}

#[wasm_bindgen]
pub fn orbit_curve(op: &str) -> Result<String, JsValue> {
    to_js(orbit_curve_json(op))
}

#[wasm_bindgen]
pub fn grid_identity(form: &str, n: u32, seed: u32) -> Result<String, JsValue> {
    to_js(grid_identity_json(form, n as usize, u64::from(seed)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHIFT: &str = r#"{"dim":2,"terms":[{"a":[[0,1],[0,0]],"b":[[1,0],[0,1]]}]}"#;
    const IDENTITY: &str = r#"{"dim":2,"terms":[{"a":[[1,0],[0,1]],"b":[[1,0],[0,1]]}]}"#;

    #[test]
    fn analyze_reports_verdicts() {
        let v: Value = serde_json::from_str(&analyze_json(IDENTITY, 0).unwrap()).unwrap();
        assert_eq!(v["verdict"]["status"], "BOUNDED");
        assert_eq!(v["length"], 1);
        let v: Value = serde_json::from_str(&analyze_json(SHIFT, 0).unwrap()).unwrap();
        assert_eq!(v["verdict"]["status"], "UNBOUNDED");
    }

    #[test]
    fn orbit_curve_grows_for_left_shift() {
        let v: Value = serde_json::from_str(&orbit_curve_json(SHIFT).unwrap()).unwrap();
        let ratios: Vec<f64> = v.as_array().unwrap().iter().filter_map(|p| p["ratio"].as_f64()).collect();
        assert!(ratios.len() > 4);
        assert!(ratios.last().unwrap() > &1e3);
    }

    #[test]
    fn grid_identity_residuals_vanish() {
        for form in ["ii", "iii"] {
            let v: Value = serde_json::from_str(&grid_identity_json(form, 4, 7).unwrap()).unwrap();
            assert!(v["star_square_norm"].as_f64().unwrap() < 1e-10);
            assert!(v["fifth_power_residual"].as_f64().unwrap() < 1e-8);
        }
        assert!(grid_identity_json("iv", 4, 0).is_err());
        assert!(grid_identity_json("ii", 3, 0).is_err());
    }

    #[test]
    fn malformed_input_is_an_error() {
        assert!(analyze_json("{}", 0).is_err());
        assert!(orbit_curve_json("not json").is_err());
    }
}
