//! Browser bindings for the demo page in `www/`.
//!
//! Every exported function returns a JSON string so the page can stay plain
//! JavaScript. The `*_json` functions hold the logic and are callable natively.

use hopshort::ackermann::inv_ackermann;
use hopshort::routing::scheme_for_tree;
use hopshort::verify::{verify_orientation, verify_stretch_hop_bounded, PairSource};
use hopshort::{arb, tw, LineMetric, Metric, RootedTree, Spanner};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest instance the page will build, to keep the tab responsive.
pub const MAX_DEMO_N: usize = 5000;

/// `alpha_k(n)` for each k in 0..=4.
pub fn alpha_table_json(n: u64) -> Result<String, String> {
    if n < 2 {
        return Err("n must be at least 2".into());
    }
    let rows: Vec<_> = (0..=4)
        .map(|k| json!({"k": k, "alpha": inv_ackermann(k, n)}))
        .collect();
    Ok(json!({"n": n, "alpha": rows}).to_string())
}

/// Build a shortcutting of a random instance, verify it, and summarize.
///
/// `construction` is one of tw2, tw3, twk, classic, line.
pub fn build_summary_json(
    construction: &str,
    n: usize,
    k: u32,
    seed: u64,
) -> Result<String, String> {
    if !(2..=MAX_DEMO_N).contains(&n) {
        return Err(format!("n must lie in 2..={MAX_DEMO_N}"));
    }
    let tree = || RootedTree::random(n, 10, seed);
    let line;
    let t;
    let (s, metric): (Spanner, &dyn Metric) = match construction {
        "line" => {
            line = LineMetric::random(n, 10, seed);
            (arb::build_line(&line, k).map_err(|e| e.to_string())?, &line)
        }
        other => {
            t = tree();
            let s = match other {
                "tw2" => tw::build_hop2(&t).0,
                "tw3" => tw::build_hop3(&t).0,
                "twk" => tw::build_hopk(&t, k).map_err(|e| e.to_string())?.0,
                "classic" => arb::classic_tree_shortcut(&t, k).map_err(|e| e.to_string())?,
                _ => return Err(format!("unknown construction {other}")),
            };
            (s, &t)
        }
    };
    let pairs = if n <= 300 {
        PairSource::All
    } else {
        PairSource::Sample { m: 20_000, seed }
    };
    let hop = s.meta.effective_k;
    let rep = verify_stretch_hop_bounded(&s, metric, hop, pairs, 1.0).map_err(|e| e.to_string())?;
    let orient = verify_orientation(&s).map_err(|e| e.to_string())?;
    Ok(json!({
        "construction": s.meta.construction,
        "n": n,
        "hop_bound": hop,
        "edges": s.num_edges(),
        "edges_per_vertex": s.num_edges() as f64 / n as f64,
        "max_in_degree": orient.measured,
        "verified": rep.pass,
        "max_hops_seen": rep.max_hops,
        "pairs_checked": rep.pairs_checked,
    })
    .to_string())
}

/// Build the 3-hop routing scheme on a random tree and route one pair.
pub fn route_pair_json(n: usize, seed: u64, u: u32, v: u32) -> Result<String, String> {
    if !(2..=MAX_DEMO_N).contains(&n) {
        return Err(format!("n must lie in 2..={MAX_DEMO_N}"));
    }
    if u as usize >= n || v as usize >= n {
        return Err("vertex out of range".into());
    }
    let t = RootedTree::random(n, 10, seed);
    let scheme = scheme_for_tree(&t, seed).map_err(|e| e.to_string())?;
    let r = scheme.route(u, v).map_err(|e| e.to_string())?;
    let mem = scheme.memory_stats();
    Ok(json!({
        "path": r.path,
        "ports": r.ports,
        "hops": r.hops,
        "weight": r.weight,
        "tree_distance": t.dist(u, v),
        "max_table_bits": mem.max_table,
        "max_label_bits": mem.max_label,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn alpha_table(n: f64) -> Result<String, JsError> {
    alpha_table_json(n as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn build_summary(construction: &str, n: usize, k: u32, seed: u32) -> Result<String, JsError> {
    build_summary_json(construction, n, k, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn route_pair(n: usize, seed: u32, u: u32, v: u32) -> Result<String, JsError> {
    route_pair_json(n, seed as u64, u, v).map_err(|e| JsError::new(&e))
}
