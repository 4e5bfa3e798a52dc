//! Parameter sweeps over the constructions, with a verifier run per cell, and a
//! Markdown summary of the resulting CSV.

use crate::ackermann::alpha;
use crate::arb;
use crate::model::{Hst, LineMetric, Metric, RootedTree, Spanner};
use crate::routing::scheme_for_tree;
use crate::tw;
use crate::verify::{
    verify_orientation, verify_stretch_hop_bounded, verify_tree_decomposition, PairSource,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

/// First line of every bench CSV.
pub const CSV_VERSION_LINE: &str = "# hopshort-bench v1";

pub const CONSTRUCTIONS: &[&str] = &[
    "tw2",
    "tw3",
    "twk",
    "line",
    "steiner-line",
    "hst",
    "classic",
    "tree-bh",
    "tree-general",
    "routing",
];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("malformed bench csv: {0}")]
    Csv(String),
    #[error("unknown construction `{0}`")]
    UnknownConstruction(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub construction: String,
    pub n: usize,
    pub k: u32,
    pub edges: usize,
    pub max_in_degree: u32,
    pub witness_width: Option<usize>,
    pub max_hops_observed: u32,
    pub max_table_bits: Option<usize>,
    pub max_label_bits: Option<usize>,
    pub seed: u64,
    pub wall_time_ms: u64,
}

fn default_input() -> String {
    "random".into()
}
fn default_eps() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_all_pairs_limit() -> usize {
    1000
}
fn default_sample() -> usize {
    20_000
}

/// A sweep: the cross product of constructions, sizes, hop bounds and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(default)]
    pub constructions: Vec<String>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub k: Vec<u32>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// `random` (seeded random trees and lines) or `path` (unit paths and lines).
    #[serde(default = "default_input")]
    pub input: String,
    /// HST separation is `1/eps`.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// When false, `wall_time_ms` is written as 0 so outputs are byte-stable.
    #[serde(default = "default_true")]
    pub timing: bool,
    /// Verify all pairs up to this size and a seeded sample beyond.
    #[serde(default = "default_all_pairs_limit")]
    pub all_pairs_limit: usize,
    #[serde(default = "default_sample")]
    pub sample_pairs: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub construction: String,
    pub n: usize,
    pub k: u32,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BenchOutput {
    pub rows: Vec<BenchRow>,
    pub failures: Vec<CellFailure>,
    /// Cells whose `k` the construction does not accept.
    pub skipped: usize,
}

/// The hop bounds a construction is run with, given the sweep's k-grid.
fn ks_for(construction: &str, grid: &[u32]) -> Vec<u32> {
    let keep = |f: &dyn Fn(u32) -> bool| grid.iter().copied().filter(|&k| f(k)).collect();
    match construction {
        "tw2" => vec![2],
        "tw3" | "routing" => vec![3],
        "twk" => keep(&|k| k >= 2),
        "line" | "hst" => keep(&|k| k >= 2 && k % 2 == 0),
        "steiner-line" | "classic" => keep(&|k| k >= 2),
        "tree-bh" => keep(&|k| k % 3 == 1),
        "tree-general" => keep(&|k| k >= 8),
        _ => Vec::new(),
    }
}

fn tree_input(spec: &SweepSpec, n: usize, seed: u64) -> RootedTree {
    if spec.input == "path" {
        RootedTree::path(n)
    } else {
        RootedTree::random(n, 10, seed)
    }
}

fn line_input(spec: &SweepSpec, n: usize, seed: u64) -> LineMetric {
    if spec.input == "path" {
        LineMetric::uniform(n)
    } else {
        LineMetric::random(n, 10, seed)
    }
}

fn pairs_for(spec: &SweepSpec, n: usize, seed: u64) -> PairSource {
    if n <= spec.all_pairs_limit {
        PairSource::All
    } else {
        PairSource::Sample {
            m: spec.sample_pairs,
            seed,
        }
    }
}

fn empty_row(c: &str, n: usize, k: u32, seed: u64) -> BenchRow {
    BenchRow {
        construction: c.into(),
        n,
        k,
        edges: 0,
        max_in_degree: 0,
        witness_width: None,
        max_hops_observed: 0,
        max_table_bits: None,
        max_label_bits: None,
        seed,
        wall_time_ms: 0,
    }
}

fn stretch_row(
    row: &mut BenchRow,
    s: &Spanner,
    metric: &dyn Metric,
    hops: u32,
    pairs: PairSource,
    stretch: f64,
) -> Result<(), String> {
    let rep =
        verify_stretch_hop_bounded(s, metric, hops, pairs, stretch).map_err(|e| e.to_string())?;
    if !rep.pass {
        return Err(format!(
            "stretch check failed at {:?}: {}",
            rep.counterexample,
            rep.detail.unwrap_or_default()
        ));
    }
    row.edges = s.num_edges();
    row.max_in_degree = verify_orientation(s).map_err(|e| e.to_string())?.measured as u32;
    row.max_hops_observed = rep.max_hops.unwrap_or(0);
    Ok(())
}

/// Builds, verifies and measures one cell.
pub fn run_cell(
    spec: &SweepSpec,
    construction: &str,
    n: usize,
    k: u32,
    seed: u64,
) -> Result<BenchRow, String> {
    let start = Instant::now();
    let mut row = empty_row(construction, n, k, seed);
    let pairs = pairs_for(spec, n, seed);
    match construction {
        "tw2" | "tw3" | "twk" => {
            let t = tree_input(spec, n, seed);
            let (s, td) = match construction {
                "tw2" => tw::build_hop2(&t),
                "tw3" => tw::build_hop3(&t),
                _ => tw::build_hopk(&t, k).map_err(|e| e.to_string())?,
            };
            let r = verify_tree_decomposition(&td, &s);
            if !r.pass {
                return Err(format!(
                    "decomposition check failed: {}",
                    r.detail.unwrap_or_default()
                ));
            }
            row.witness_width = Some(td.width());
            stretch_row(&mut row, &s, &t, k, pairs, 1.0)?;
        }
        "line" | "steiner-line" => {
            let l = line_input(spec, n, seed);
            let (s, hops) = if construction == "line" {
                (arb::build_line(&l, k).map_err(|e| e.to_string())?, k)
            } else {
                (
                    arb::steiner_line(&l, k, usize::MAX).map_err(|e| e.to_string())?,
                    2 * k,
                )
            };
            stretch_row(&mut row, &s, &l, hops, pairs, 1.0)?;
        }
        "hst" => {
            let h = Hst::random(n, 1.0 / spec.eps, 4, seed);
            let s = arb::build_hst(&h, k, spec.eps).map_err(|e| e.to_string())?;
            stretch_row(
                &mut row,
                &s,
                &h,
                k,
                pairs,
                arb::hst_stretch_bound(k, spec.eps),
            )?;
        }
        "classic" | "tree-bh" | "tree-general" => {
            let t = tree_input(spec, n, seed);
            let (s, hops) = match construction {
                "classic" => (
                    arb::classic_tree_shortcut(&t, k).map_err(|e| e.to_string())?,
                    k,
                ),
                "tree-bh" => (
                    arb::build_tree_bounded_height(&t, k).map_err(|e| e.to_string())?,
                    2 * k,
                ),
                _ => {
                    let s = arb::build_tree_general(&t, k).map_err(|e| e.to_string())?;
                    let hops = s.meta.effective_k;
                    (s, hops)
                }
            };
            stretch_row(&mut row, &s, &t, hops, pairs, 1.0)?;
        }
        "routing" => {
            let t = tree_input(spec, n, seed);
            let scheme = scheme_for_tree(&t, seed).map_err(|e| e.to_string())?;
            let list: Vec<(u32, u32)> = match pairs {
                PairSource::All => (0..n as u32)
                    .flat_map(|u| (0..n as u32).filter(move |&v| v != u).map(move |v| (u, v)))
                    .collect(),
                PairSource::Sample { m, seed } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..m)
                        .map(|_| {
                            let u = rng.gen_range(0..n as u32);
                            let v = rng.gen_range(0..n as u32 - 1);
                            (u, if v >= u { v + 1 } else { v })
                        })
                        .collect()
                }
            };
            let rep = scheme.check_pairs(&list, 3);
            if !rep.pass {
                return Err(format!(
                    "routing failed at {:?}: {}",
                    rep.counterexample,
                    rep.detail.unwrap_or_default()
                ));
            }
            let mem = scheme.memory_stats();
            let net_edges: usize = (0..n as u32).map(|v| scheme.ports.degree(v)).sum::<usize>() / 2;
            row.edges = net_edges;
            row.max_hops_observed = rep.max_hops as u32;
            row.max_table_bits = Some(mem.max_table);
            row.max_label_bits = Some(mem.max_label);
        }
        other => return Err(format!("unknown construction `{other}`")),
    }
    if spec.timing {
        row.wall_time_ms = start.elapsed().as_millis() as u64;
    }
    Ok(row)
}

/// Runs every cell of the sweep in parallel; rows come back ordered by
/// `(construction, n, k, seed)`. A cell whose verifier fails yields no row.
pub fn bench(spec: &SweepSpec) -> Result<BenchOutput, BenchError> {
    let mut cells = Vec::new();
    let mut skipped = 0;
    for c in &spec.constructions {
        if !CONSTRUCTIONS.contains(&c.as_str()) {
            return Err(BenchError::UnknownConstruction(c.clone()));
        }
        let ks = ks_for(c, &spec.k);
        if ks.is_empty() {
            skipped += spec.n.len() * spec.seeds.len() * spec.k.len().max(1);
        } else if !matches!(c.as_str(), "tw2" | "tw3" | "routing") {
            skipped += (spec.k.len() - ks.len()) * spec.n.len() * spec.seeds.len();
        }
        for &n in &spec.n {
            for &k in &ks {
                for &seed in &spec.seeds {
                    cells.push((c.clone(), n, k, seed));
                }
            }
        }
    }
    cells.sort();
    cells.dedup();
    let results: Vec<Result<BenchRow, CellFailure>> = cells
        .par_iter()
        .map(|(c, n, k, seed)| {
            run_cell(spec, c, *n, *k, *seed).map_err(|reason| CellFailure {
                construction: c.clone(),
                n: *n,
                k: *k,
                seed: *seed,
                reason,
            })
        })
        .collect();
    let mut out = BenchOutput {
        skipped,
        ..Default::default()
    };
    for r in results {
        match r {
            Ok(row) => out.rows.push(row),
            Err(f) => out.failures.push(f),
        }
    }
    Ok(out)
}

pub fn write_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "construction",
            "n",
            "k",
            "edges",
            "max_in_degree",
            "witness_width",
            "max_hops_observed",
            "max_table_bits",
            "max_label_bits",
            "seed",
            "wall_time_ms",
        ])
        .expect("in-memory write");
    }
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8");
    format!("{CSV_VERSION_LINE}\n{body}")
}

pub fn read_csv(text: &str) -> Result<Vec<BenchRow>, BenchError> {
    if !text.starts_with(CSV_VERSION_LINE) {
        return Err(BenchError::Csv(format!(
            "missing `{CSV_VERSION_LINE}` first line"
        )));
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    r.deserialize()
        .map(|row| row.map_err(|e| BenchError::Csv(e.to_string())))
        .collect()
}

/// Name of the normalized quantity the report tracks for a construction.
fn ratio_of(row: &BenchRow) -> (&'static str, f64) {
    let n = row.n.max(2);
    let l = (n as f64).log2();
    let ll = l.log2().max(1.0);
    let k = row.k as f64;
    let width = row.witness_width.unwrap_or(0) as f64;
    let indeg = row.max_in_degree as f64;
    match row.construction.as_str() {
        "tw2" => ("width/log n", width / l),
        "tw3" => ("width*loglog n/log n", width * ll / l),
        "twk" => ("width/(k log^(2/k) n)", width / (k * l.powf(2.0 / k))),
        "line" | "hst" => (
            "in-degree/alpha_(k/2+1)(n)",
            indeg / alpha(row.k / 2 + 1, n).max(1) as f64,
        ),
        "steiner-line" => ("in-degree", indeg),
        "classic" => (
            "edges/(n alpha_k(n))",
            row.edges as f64 / (n as f64 * alpha(row.k, n).max(1) as f64),
        ),
        "routing" => {
            let bits = (row.max_table_bits.unwrap_or(0) + row.max_label_bits.unwrap_or(0)) as f64;
            ("bits/(log^2 n/loglog n)", bits / (l * l / ll))
        }
        _ => ("edges/n", row.edges as f64 / n as f64),
    }
}

/// One line per (construction, k): extremes of the measured columns and of the
/// normalized ratio.
pub fn report(rows: &[BenchRow]) -> String {
    #[derive(Default)]
    struct Agg {
        rows: usize,
        n_min: usize,
        n_max: usize,
        edges_per_n: f64,
        indeg: u32,
        width: Option<usize>,
        hops: u32,
        bits: Option<usize>,
        metric: &'static str,
        ratio: f64,
    }
    let mut groups: BTreeMap<(String, u32), Agg> = BTreeMap::new();
    for r in rows {
        let (metric, ratio) = ratio_of(r);
        let g = groups
            .entry((r.construction.clone(), r.k))
            .or_insert_with(|| Agg {
                n_min: usize::MAX,
                ..Default::default()
            });
        g.rows += 1;
        g.n_min = g.n_min.min(r.n);
        g.n_max = g.n_max.max(r.n);
        g.edges_per_n = g.edges_per_n.max(r.edges as f64 / r.n.max(1) as f64);
        g.indeg = g.indeg.max(r.max_in_degree);
        g.width = g.width.max(r.witness_width);
        g.hops = g.hops.max(r.max_hops_observed);
        if let (Some(a), Some(b)) = (r.max_table_bits, r.max_label_bits) {
            g.bits = g.bits.max(Some(a + b));
        }
        g.metric = metric;
        g.ratio = g.ratio.max(ratio);
    }
    let mut out = String::from("| construction | k | rows | n | max edges/n | max in-degree | max width | max hops | max bits | ratio | max ratio |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|---|---|\n");
    let opt = |x: Option<usize>| x.map_or("-".to_string(), |v| v.to_string());
    for ((c, k), g) in &groups {
        let nr = if g.n_min == g.n_max {
            g.n_min.to_string()
        } else {
            format!("{}..{}", g.n_min, g.n_max)
        };
        out.push_str(&format!(
            "| {c} | {k} | {} | {nr} | {:.3} | {} | {} | {} | {} | {} | {:.3} |\n",
            g.rows,
            g.edges_per_n,
            g.indeg,
            opt(g.width),
            g.hops,
            opt(g.bits),
            g.metric,
            g.ratio
        ));
    }
    out
}
