//! The analysis report: everything recomputable from the input, the seed and
//! the tolerances.

use serde_json::{json, Value};

use specbound::classify::{classify, consequence_suite, space_summary, Options};
use specbound::elop::{length, trace_vector, ElOp};
use specbound::json::{complex_to_value, matrix_to_value};
use specbound::matcore::{scalar_of_identity, Tolerance};
use specbound::specnorm::estimate_spectral_norm;

const CONSEQUENCE_SAMPLES: usize = 20;

pub fn analyze(s: &ElOp, tol: &Tolerance, seed: u64, budget: usize, threshold: f64) -> Value {
    let k = trace_vector(s);
    let scalar = scalar_of_identity(&k, tol);
    let verdict = classify(s, tol, &Options { budget, seed, threshold });
    let consequences = consequence_suite(s, &verdict, CONSEQUENCE_SAMPLES, seed);
    let (lower, _) = estimate_spectral_norm(s, budget, seed);
    json!({
        "operator": {"dim": s.dim(), "terms": s.term_count()},
        "length": length(s, tol),
        "spaces": space_summary(s, tol, seed),
        "trace_vector": {
            "matrix": matrix_to_value(&k),
            "scalar": scalar.map(complex_to_value),
        },
        "verdict": verdict.to_json(),
        "consequences": consequences.to_json(),
        "spectral_norm_lower_bound": lower,
        "seed": seed,
        "budget": budget,
        "threshold": threshold,
        "tolerance": {"rank_rel": tol.rank_rel, "scalar_rel": tol.scalar_rel, "spec_abs": tol.spec_abs},
    })
}

pub fn text(r: &Value) -> String {
    let v = &r["verdict"];
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(format!("operator      M_{} with {} terms, length {}", r["operator"]["dim"], r["operator"]["terms"], r["length"]));
    let sp = &r["spaces"];
    line(format!(
        "spaces        L {}/{}  R {}/{}  V {}/{}  V' {}/{}  (dim/local dim)",
        sp["left"]["dim"],
        sp["left"]["local_dim"],
        sp["right"]["dim"],
        sp["right"]["local_dim"],
        sp["products"]["dim"],
        sp["products"]["local_dim"],
        sp["products_plus_identity"]["dim"],
        sp["products_plus_identity"]["local_dim"],
    ));
    line(format!(
        "trace vector  {}",
        if r["trace_vector"]["scalar"].is_null() { "not scalar".to_string() } else { format!("scalar {}", r["trace_vector"]["scalar"]) }
    ));
    let mut status = format!("status        {}", v["status"].as_str().unwrap_or("?"));
    if let Some(f) = v["form"].as_str() {
        status.push_str(&format!(", form ({f})"));
    }
    if let Some(b) = v["bound"].as_f64() {
        status.push_str(&format!(", norm ≤ {b}"));
    }
    if let Some(reason) = v["reason"].as_str() {
        status.push_str(&format!(" ({reason})"));
    }
    line(status);
    for c in v["checks"].as_array().into_iter().flatten() {
        line(format!("  check {:<22} {}", c["name"].as_str().unwrap_or("?"), if c["pass"] == true { "pass" } else { "fail" }));
    }
    if let Some(ratios) = v["certificate"]["ratios"].as_array() {
        let last = ratios.last().and_then(Value::as_f64).unwrap_or(0.0);
        line(format!("witness       {} steps, last ratio {last:.6e}", ratios.len()));
    }
    for c in r["consequences"]["checks"].as_array().into_iter().flatten() {
        line(format!("  consequence {:<16} {}", c["name"].as_str().unwrap_or("?"), if c["pass"] == true { "pass" } else { "fail" }));
    }
    line(format!("lower bound   {}", r["spectral_norm_lower_bound"]));
    out
}
