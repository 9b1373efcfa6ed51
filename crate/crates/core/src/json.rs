//! Wire formats.
//!
//! A matrix is a list of rows; each entry is either a real number or a
//! `[re, im]` pair. Operators are `{"dim": n, "terms": [{"a": M, "b": M}, …]}`.
//! Parse errors name the offending field, e.g. `terms[1].b[0][2]`.

use serde_json::{json, Map, Value};

use crate::elop::{ElOp, ProductGrid};
use crate::matcore::{CMat, CVec, C64};
use crate::specnorm::{BlowupWitness, Construction};
use crate::{Error, Result};

fn bad(field: &str, reason: impl Into<String>) -> Error {
    Error::Input { field: field.to_string(), reason: reason.into() }
}

pub fn complex_to_value(z: C64) -> Value {
    json!([num(z.re), num(z.im)])
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn real_to_value(x: f64) -> Value {
    num(x)
}

pub fn matrix_to_value(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_to_value(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn vector_to_value(v: &CVec) -> Value {
    Value::Array(v.iter().map(|&z| complex_to_value(z)).collect())
}

pub fn parse_complex(v: &Value, field: &str) -> Result<C64> {
    let z = match v {
        Value::Number(x) => C64::new(x.as_f64().ok_or_else(|| bad(field, "not a finite number"))?, 0.0),
        Value::Array(parts) if parts.len() == 2 => {
            let re = parts[0].as_f64().ok_or_else(|| bad(field, "real part is not a number"))?;
            let im = parts[1].as_f64().ok_or_else(|| bad(field, "imaginary part is not a number"))?;
            C64::new(re, im)
        }
        _ => return Err(bad(field, "expected a number or a [re, im] pair")),
    };
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(bad(field, "non-finite entry"));
    }
    Ok(z)
}

/// Parses a matrix, requiring `rows × cols` when given.
pub fn parse_matrix(v: &Value, field: &str, shape: Option<(usize, usize)>) -> Result<CMat> {
    let rows = v.as_array().ok_or_else(|| bad(field, "expected a list of rows"))?;
    let nrows = rows.len();
    let mut data: Vec<Vec<C64>> = Vec::with_capacity(nrows);
    for (i, row) in rows.iter().enumerate() {
        let f = format!("{field}[{i}]");
        let entries = row.as_array().ok_or_else(|| bad(&f, "expected a row list"))?;
        let parsed = entries
            .iter()
            .enumerate()
            .map(|(j, e)| parse_complex(e, &format!("{f}[{j}]")))
            .collect::<Result<Vec<_>>>()?;
        data.push(parsed);
    }
    let ncols = data.first().map_or(0, Vec::len);
    if let Some(i) = data.iter().position(|r| r.len() != ncols) {
        return Err(bad(&format!("{field}[{i}]"), format!("row has {} entries, expected {ncols}", data[i].len())));
    }
    if let Some((r, c)) = shape {
        if (nrows, ncols) != (r, c) {
            return Err(bad(field, format!("expected {r}x{c} matrix, got {nrows}x{ncols}")));
        }
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| data[i][j]))
}

pub fn parse_vector(v: &Value, field: &str) -> Result<CVec> {
    let items = v.as_array().ok_or_else(|| bad(field, "expected a list"))?;
    let parsed = items
        .iter()
        .enumerate()
        .map(|(i, e)| parse_complex(e, &format!("{field}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    Ok(CVec::from_vec(parsed))
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str, field: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| bad(field, format!("missing `{key}`")))
}

fn obj<'a>(v: &'a Value, field: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| bad(field, "expected an object"))
}

pub fn operator_to_value(s: &ElOp) -> Value {
    let terms: Vec<Value> =
        s.terms().iter().map(|(a, b)| json!({"a": matrix_to_value(a), "b": matrix_to_value(b)})).collect();
    json!({"dim": s.dim(), "terms": terms})
}

pub fn parse_operator_value(v: &Value) -> Result<ElOp> {
    let o = obj(v, "operator")?;
    let dim = get(o, "dim", "dim")?.as_u64().ok_or_else(|| bad("dim", "expected a non-negative integer"))? as usize;
    if dim == 0 {
        return Err(bad("dim", "must be at least 1"));
    }
    let terms = get(o, "terms", "terms")?.as_array().ok_or_else(|| bad("terms", "expected a list"))?;
    let mut out = Vec::with_capacity(terms.len());
    for (i, t) in terms.iter().enumerate() {
        let f = format!("terms[{i}]");
        let t = obj(t, &f)?;
        let a = parse_matrix(get(t, "a", &f)?, &format!("{f}.a"), Some((dim, dim)))?;
        let b = parse_matrix(get(t, "b", &f)?, &format!("{f}.b"), Some((dim, dim)))?;
        out.push((a, b));
    }
    ElOp::new(dim, out)
}

pub fn parse_operator(text: &str) -> Result<ElOp> {
    let v: Value = serde_json::from_str(text)?;
    parse_operator_value(&v)
}

pub fn grid_to_value(g: &ProductGrid) -> Value {
    let entries: Vec<Value> =
        g.entries.iter().map(|row| Value::Array(row.iter().map(matrix_to_value).collect())).collect();
    json!({"n_terms": g.n_terms, "ambient_dim": g.ambient_dim, "entries": entries})
}

pub fn parse_grid_value(v: &Value) -> Result<ProductGrid> {
    let o = obj(v, "grid")?;
    let n = get(o, "ambient_dim", "ambient_dim")?.as_u64().ok_or_else(|| bad("ambient_dim", "expected an integer"))? as usize;
    let rows = get(o, "entries", "entries")?.as_array().ok_or_else(|| bad("entries", "expected a list"))?;
    let mut entries = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let f = format!("entries[{i}]");
        let row = row.as_array().ok_or_else(|| bad(&f, "expected a list"))?;
        entries.push(
            row.iter()
                .enumerate()
                .map(|(j, m)| parse_matrix(m, &format!("{f}[{j}]"), Some((n, n))))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    ProductGrid::new(n, entries)
}

pub fn witness_to_value(w: &BlowupWitness) -> Value {
    let mut v = json!({
        "threshold": num(w.threshold),
        "ratios": w.ratios.iter().map(|&r| num(r)).collect::<Vec<_>>(),
        "xs": w.xs.iter().map(matrix_to_value).collect::<Vec<_>>(),
        "construction": w.construction.tag(),
        "seed": w.seed,
    });
    if let Construction::Orbit { zeta, image } = &w.construction {
        v["orbit"] = json!({"zeta": vector_to_value(zeta), "image": vector_to_value(image)});
    }
    v
}

pub fn parse_witness_value(v: &Value) -> Result<BlowupWitness> {
    let o = obj(v, "witness")?;
    let threshold = get(o, "threshold", "threshold")?.as_f64().ok_or_else(|| bad("threshold", "expected a number"))?;
    let ratios = get(o, "ratios", "ratios")?
        .as_array()
        .ok_or_else(|| bad("ratios", "expected a list"))?
        .iter()
        .enumerate()
        .map(|(i, r)| r.as_f64().ok_or_else(|| bad(&format!("ratios[{i}]"), "expected a number")))
        .collect::<Result<Vec<_>>>()?;
    let xs = get(o, "xs", "xs")?
        .as_array()
        .ok_or_else(|| bad("xs", "expected a list"))?
        .iter()
        .enumerate()
        .map(|(i, m)| parse_matrix(m, &format!("xs[{i}]"), None))
        .collect::<Result<Vec<_>>>()?;
    let seed = get(o, "seed", "seed")?.as_u64().ok_or_else(|| bad("seed", "expected an integer"))?;
    let construction = match get(o, "construction", "construction")?.as_str() {
        Some("random") => Construction::Random,
        Some("deterministic_family") => Construction::DeterministicFamily,
        Some("orbit") => {
            let orbit = obj(get(o, "orbit", "orbit")?, "orbit")?;
            Construction::Orbit {
                zeta: parse_vector(get(orbit, "zeta", "orbit")?, "orbit.zeta")?,
                image: parse_vector(get(orbit, "image", "orbit")?, "orbit.image")?,
            }
        }
        _ => return Err(bad("construction", "expected random, orbit or deterministic_family")),
    };
    Ok(BlowupWitness { xs, ratios, threshold, construction, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn operator_round_trip() {
        let mut r = rng::rng(1);
        let s = ElOp::new(3, (0..2).map(|_| (rng::gauss_mat(&mut r, 3, 3), rng::gauss_mat(&mut r, 3, 3))).collect()).unwrap();
        let text = serde_json::to_string(&operator_to_value(&s)).unwrap();
        assert_eq!(parse_operator(&text).unwrap(), s);
    }

    #[test]
    fn real_entries_are_accepted() {
        let s = parse_operator(r#"{"dim": 2, "terms": [{"a": [[0, 1], [0, 0]], "b": [[1, 0], [0, [1, 0]]]}]}"#).unwrap();
        assert_eq!(s.terms()[0].0[(0, 1)], C64::new(1.0, 0.0));
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse_operator(r#"{"dim": 2, "terms": [{"a": [[1,0],[0,1]], "b": [[1,0],[0,"x"]]}]}"#).unwrap_err();
        assert!(e.to_string().contains("terms[0].b[1][1]"), "{e}");
        let e = parse_operator(r#"{"dim": 2, "terms": [{"a": [[1,0,0],[0,1,0]], "b": [[1,0],[0,1]]}]}"#).unwrap_err();
        assert!(e.to_string().contains("terms[0].a"), "{e}");
        let e = parse_operator(r#"{"terms": []}"#).unwrap_err();
        assert!(e.to_string().contains("dim"), "{e}");
        assert!(parse_operator("{not json").is_err());
    }

    #[test]
    fn grid_round_trip() {
        let mut r = rng::rng(2);
        let s = ElOp::new(2, (0..2).map(|_| (rng::gauss_mat(&mut r, 2, 2), rng::gauss_mat(&mut r, 2, 2))).collect()).unwrap();
        let g = crate::elop::product_grid(&s);
        assert_eq!(parse_grid_value(&grid_to_value(&g)).unwrap(), g);
    }
}
