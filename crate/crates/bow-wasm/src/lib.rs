//! Browser bindings for the interactive demo page: parse a brane diagram,
//! explore its torus fixed points, expand a vertex function, and evaluate the
//! T*P1 mirror identity at chosen parameters. Every function takes plain
//! strings/numbers and returns a JSON string, so the page needs no framework.

use wasm_bindgen::prelude::*;

use bow::brane::BraneDiagram;
use bow::fixed_points::enumerate_fixed_points;
use bow::series::Truncation;
use bow::suites::RunConfig;
use bow::vertex::Mode;

fn err_json(e: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": e.to_string() }).to_string()
}

/// Diagram combinatorics: branes, dims, charges, weights, normal forms.
#[wasm_bindgen]
pub fn parse_diagram(dsl: &str) -> String {
    let d = match BraneDiagram::parse(dsl) {
        Ok(d) => d,
        Err(e) => return err_json(e),
    };
    let (r, c) = d.charges();
    let dual = d.dual();
    let sep = d.separate().map(|(s, _)| s.render()).unwrap_or_default();
    let cosep = d.coseparate().map(|(s, _)| s.render()).unwrap_or_default();
    serde_json::json!({
        "diagram": d.render(),
        "kinds": d.branes.iter().map(|b| match b.kind {
            bow::brane::BraneKind::Ns5 => "ns5",
            bow::brane::BraneKind::D5 => "d5",
        }).collect::<Vec<_>>(),
        "dims": d.dims,
        "r": r,
        "c": c,
        "ns5_weights": d.ns5_weights(),
        "d5_weights": d.d5_weights(),
        "nonempty": d.gale_ryser_nonempty(),
        "dual": dual.render(),
        "separated": sep,
        "coseparated": cosep,
        "fixed_point_count": enumerate_fixed_points(&d).len(),
    })
    .to_string()
}

/// Fixed points with ties, sigma, epsilon and tangent characters.
#[wasm_bindgen]
pub fn fixed_points(dsl: &str) -> String {
    let d = match BraneDiagram::parse(dsl) {
        Ok(d) => d,
        Err(e) => return err_json(e),
    };
    let mut points = vec![];
    for f in enumerate_fixed_points(&d) {
        let tangent = bow::resolutions::tangent_via_resolution(&d, &f).ok().map(|t| {
            t.weights.iter().map(|(m, k)| format!("{k} * {m}")).collect::<Vec<_>>()
        });
        points.push(serde_json::json!({
            "bct": f.bct,
            "ties": f.ties(),
            "sigma": f.sigma().ok(),
            "epsilon": f.sign_epsilon(),
            "tangent": tangent,
        }));
    }
    serde_json::json!({ "diagram": d.render(), "fixed_points": points }).to_string()
}

/// The MSver vertex series at the bundled rational parameter point.
#[wasm_bindgen]
pub fn vertex_series(dsl: &str, fixed_point: usize, q_order: u32, u_order: u32) -> String {
    let d = match BraneDiagram::parse(dsl) {
        Ok(d) => d,
        Err(e) => return err_json(e),
    };
    let points = enumerate_fixed_points(&d);
    let Some(f) = points.get(fixed_point) else {
        return err_json("fixed point index out of range");
    };
    let config = RunConfig::default();
    let params = match config.rational_point(d.n_d5()) {
        Ok(p) => p,
        Err(e) => return err_json(e),
    };
    let trunc = Truncation::new(q_order.min(6), u_order.min(6));
    match bow::vertex::msver(&d, f, &params, Mode::Expansion, trunc) {
        Ok(v) => serde_json::json!({
            "diagram": d.render(),
            "fixed_point": f.bct,
            "engine": v.provenance.engine,
            "series": v.series.to_json(),
        })
        .to_string(),
        Err(e) => err_json(e),
    }
}

/// Residuals of the two T*P1 mirror equations and the classical kernels at a
/// float parameter point.
#[wasm_bindgen]
pub fn tp1_mirror(q: f64, hbar: f64, u: f64, big_q: f64) -> String {
    match bow::mirror::tp1_mirror_sample(q, hbar, u, big_q, 200) {
        Ok(s) => serde_json::to_string(&s).unwrap_or_else(err_json),
        Err(e) => err_json(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_endpoints_work() {
        let parsed: serde_json::Value =
            serde_json::from_str(&parse_diagram("/1/2\\1\\")).unwrap();
        assert_eq!(parsed["fixed_point_count"], 2);
        assert_eq!(parsed["dual"], "\\1\\2/1/");
        let fps: serde_json::Value = serde_json::from_str(&fixed_points("/1/2\\1\\")).unwrap();
        assert_eq!(fps["fixed_points"].as_array().unwrap().len(), 2);
        let v: serde_json::Value =
            serde_json::from_str(&vertex_series("/1/2\\1\\", 0, 3, 2)).unwrap();
        assert!(v.get("error").is_none());
        let m: serde_json::Value =
            serde_json::from_str(&tp1_mirror(0.1, 1.0 / 3.0, 0.2, 1.2)).unwrap();
        assert!(m["residual_f1"].as_f64().unwrap() < 1e-8);
        let bad: serde_json::Value = serde_json::from_str(&parse_diagram("12x")).unwrap();
        assert!(bad.get("error").is_some());
    }
}
