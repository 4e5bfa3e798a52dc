//! Independent oracles for the claims a construction makes.
//!
//! The stretch oracle is a hop-bounded relaxation that never looks at how a
//! spanner was built. Decomposition and orientation checks work directly on the
//! serialized structures, and the two exhaustive oracles (treewidth, arboricity)
//! are only meant for graphs with a dozen vertices or fewer.

use crate::model::{approx_eq, Metric, Spanner, TreeDecomposition, NO_PARENT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("graph has {n} vertices; the exhaustive oracle supports at most {max}")]
    TooLarge { n: usize, max: usize },
    #[error("orientation has {got} entries for {edges} edges")]
    MissingOrientation { got: usize, edges: usize },
    #[error("metric has {metric} points but the spanner has {spanner} base vertices")]
    SizeMismatch { metric: usize, spanner: usize },
}

/// Outcome of one check. `counterexample` is set exactly when `pass` is false.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub check: String,
    pub pass: bool,
    /// Max stretch, width, or max in-degree depending on the check.
    pub measured: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<(u32, u32)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    /// Fewest hops that sufficed for the worst tested pair.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_hops: Option<u32>,
    #[serde(default)]
    pub pairs_checked: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_seed: Option<u64>,
}

impl VerifyReport {
    fn new(check: &str, measured: f64) -> Self {
        VerifyReport {
            check: check.to_string(),
            pass: true,
            measured,
            bound: None,
            counterexample: None,
            detail: None,
            max_hops: None,
            pairs_checked: 0,
            sample_seed: None,
        }
    }

    fn fail(mut self, pair: (u32, u32), detail: String) -> Self {
        self.pass = false;
        self.counterexample = Some(pair);
        self.detail = Some(detail);
        self
    }
}

/// Which ordered pairs a stretch check covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSource {
    All,
    /// About `m` pairs: uniformly drawn sources, each paired with a block of
    /// uniformly drawn targets, all from a ChaCha stream seeded with `seed`.
    Sample {
        m: usize,
        seed: u64,
    },
}

impl std::str::FromStr for PairSource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(PairSource::All);
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["sample", m, seed] => Ok(PairSource::Sample {
                m: m.parse().map_err(|e| format!("bad sample size: {e}"))?,
                seed: seed.parse().map_err(|e| format!("bad seed: {e}"))?,
            }),
            _ => Err(format!("expected `all` or `sample:M:SEED`, got `{s}`")),
        }
    }
}

/// Targets per sampled source.
pub const SAMPLE_BLOCK: usize = 1000;

fn sampled_pairs(n: usize, m: usize, seed: u64) -> Vec<(u32, Vec<u32>)> {
    if n < 2 || m == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = SAMPLE_BLOCK.min(n - 1);
    let mut left = m;
    let mut out = Vec::new();
    while left > 0 {
        let s = rng.gen_range(0..n as u32);
        let b = block.min(left);
        let targets = (0..b)
            .map(|_| {
                let t = rng.gen_range(0..n as u32 - 1);
                if t >= s {
                    t + 1
                } else {
                    t
                }
            })
            .collect();
        out.push((s, targets));
        left -= b;
    }
    out
}

/// Per-thread scratch for the hop-bounded relaxation.
struct Relax {
    dist: Vec<f64>,
    /// Round in which `dist` last changed, `u32::MAX` if never.
    round: Vec<u32>,
    touched: Vec<u32>,
    frontier: Vec<(u32, f64)>,
}

impl Relax {
    fn new(nv: usize) -> Self {
        Relax {
            dist: vec![f64::INFINITY; nv],
            round: vec![u32::MAX; nv],
            touched: Vec::new(),
            frontier: Vec::new(),
        }
    }

    /// Hop-bounded distances from `src`; after round `r` the callback sees the best
    /// value over paths of at most `r` edges, and `dist` ends at round `k`.
    fn run(
        &mut self,
        adj: &crate::model::Adjacency,
        src: u32,
        k: u32,
        mut each_round: impl FnMut(u32, &[f64]),
    ) {
        for &v in &self.touched {
            self.dist[v as usize] = f64::INFINITY;
            self.round[v as usize] = u32::MAX;
        }
        self.touched.clear();
        self.dist[src as usize] = 0.0;
        self.round[src as usize] = 0;
        self.touched.push(src);
        self.frontier.clear();
        self.frontier.push((src, 0.0));
        for r in 1..=k {
            if self.frontier.is_empty() {
                break;
            }
            let frontier = std::mem::take(&mut self.frontier);
            let mut next = Vec::new();
            for &(v, dv) in &frontier {
                for (u, w) in adj.neighbors(v) {
                    let cand = dv + w;
                    let ui = u as usize;
                    if cand < self.dist[ui] {
                        if self.round[ui] == u32::MAX {
                            self.touched.push(u);
                        }
                        if self.round[ui] != r {
                            next.push(u);
                        }
                        self.dist[ui] = cand;
                        self.round[ui] = r;
                    }
                }
            }
            // Snapshot values so that the next round only extends paths of exactly r hops.
            self.frontier = next
                .into_iter()
                .map(|u| (u, self.dist[u as usize]))
                .collect();
            each_round(r, &self.dist);
        }
    }
}

fn within(got: f64, want: f64, stretch: f64) -> bool {
    if !got.is_finite() {
        return false;
    }
    if stretch == 1.0 {
        if got.fract() == 0.0 && want.fract() == 0.0 {
            return got == want;
        }
        return approx_eq(got, want);
    }
    got <= stretch * want * (1.0 + crate::model::REL_TOL)
}

#[derive(Clone, Copy)]
struct SourceOutcome {
    worst_stretch: f64,
    max_hops: u32,
    fail: Option<(u32, u32, f64, f64)>,
    pairs: u64,
}

fn check_source(
    relax: &mut Relax,
    adj: &crate::model::Adjacency,
    src: u32,
    targets: &[u32],
    want: &[f64],
    k: u32,
    stretch: f64,
) -> SourceOutcome {
    // first_ok[i]: first round in which target i met the bound.
    let mut first_ok = vec![u32::MAX; targets.len()];
    relax.run(adj, src, k, |r, dist| {
        for (i, &t) in targets.iter().enumerate() {
            if first_ok[i] == u32::MAX && within(dist[t as usize], want[i], stretch) {
                first_ok[i] = r;
            }
        }
    });
    let mut out = SourceOutcome {
        worst_stretch: 1.0,
        max_hops: 0,
        fail: None,
        pairs: targets.len() as u64,
    };
    for (i, &t) in targets.iter().enumerate() {
        let got = relax.dist[t as usize];
        let ratio = if want[i] > 0.0 {
            got / want[i]
        } else if got == 0.0 {
            1.0
        } else {
            f64::INFINITY
        };
        out.worst_stretch = out.worst_stretch.max(ratio);
        if first_ok[i] == u32::MAX {
            if out.fail.is_none() {
                out.fail = Some((src, t, got, want[i]));
            }
        } else {
            out.max_hops = out.max_hops.max(first_ok[i]);
        }
    }
    out
}

/// Checks that every tested pair is joined by a path of at most `k` spanner edges
/// whose length equals the base distance.
pub fn verify_stretch_hop(
    s: &Spanner,
    metric: &dyn Metric,
    k: u32,
    pairs: PairSource,
) -> Result<VerifyReport, VerifyError> {
    verify_stretch_hop_bounded(s, metric, k, pairs, 1.0)
}

/// Like [`verify_stretch_hop`] but accepts paths up to `stretch` times the base distance.
pub fn verify_stretch_hop_bounded(
    s: &Spanner,
    metric: &dyn Metric,
    k: u32,
    pairs: PairSource,
    stretch: f64,
) -> Result<VerifyReport, VerifyError> {
    let n = s.n;
    if metric.len() != n {
        return Err(VerifyError::SizeMismatch {
            metric: metric.len(),
            spanner: n,
        });
    }
    let adj = s.adjacency();
    let nv = s.num_vertices();
    let (work, seed): (Vec<(u32, Vec<u32>)>, Option<u64>) = match pairs {
        PairSource::All => ((0..n as u32).map(|src| (src, Vec::new())).collect(), None),
        PairSource::Sample { m, seed } => (sampled_pairs(n, m, seed), Some(seed)),
    };
    let all = pairs == PairSource::All;
    let outcomes: Vec<SourceOutcome> = work
        .par_iter()
        .map_init(
            || Relax::new(nv),
            |relax, (src, targets)| {
                if all {
                    let d = metric.dists_from(*src);
                    let targets: Vec<u32> = (0..n as u32).filter(|&t| t != *src).collect();
                    let want: Vec<f64> = targets.iter().map(|&t| d[t as usize]).collect();
                    check_source(relax, &adj, *src, &targets, &want, k, stretch)
                } else {
                    let want: Vec<f64> = targets.iter().map(|&t| metric.dist(*src, t)).collect();
                    check_source(relax, &adj, *src, targets, &want, k, stretch)
                }
            },
        )
        .collect();
    let mut rep = VerifyReport::new("stretch", 1.0);
    rep.bound = Some(stretch);
    rep.sample_seed = seed;
    let mut hops = 0;
    let mut first_fail = None;
    for o in &outcomes {
        rep.measured = rep.measured.max(o.worst_stretch);
        hops = hops.max(o.max_hops);
        rep.pairs_checked += o.pairs;
        if first_fail.is_none() {
            first_fail = o.fail;
        }
    }
    rep.max_hops = Some(hops);
    Ok(match first_fail {
        Some((u, v, got, want)) => rep.fail(
            (u, v),
            format!("best path within {k} hops has length {got}, base distance {want}"),
        ),
        None => rep,
    })
}

/// Vertex coverage, edge coverage and running intersection of `td` against the
/// spanner graph; the measured value is the width.
pub fn verify_tree_decomposition(td: &TreeDecomposition, s: &Spanner) -> VerifyReport {
    let nv = s.num_vertices();
    let nb = td.bags.len();
    let rep = VerifyReport::new("td", td.width() as f64);
    if td.parent.len() != nb {
        return rep.fail(
            (0, 0),
            format!("{} parent entries for {nb} bags", td.parent.len()),
        );
    }
    for (b, &p) in td.parent.iter().enumerate() {
        if p != NO_PARENT && p as usize >= nb {
            return rep.fail(
                (b as u32, p),
                format!("bag {b} has out-of-range parent {p}"),
            );
        }
    }
    // Acyclicity: climbing from every bag must terminate within nb steps.
    let mut state = vec![0u8; nb];
    for b in 0..nb {
        let mut path = Vec::new();
        let mut x = b;
        let cycle = loop {
            match state[x] {
                1 => break true,
                2 => break false,
                _ => {}
            }
            state[x] = 1;
            path.push(x);
            match td.parent[x] {
                NO_PARENT => break false,
                p => x = p as usize,
            }
        };
        if cycle {
            return rep.fail(
                (x as u32, x as u32),
                format!("decomposition tree has a cycle through bag {x}"),
            );
        }
        for y in path {
            state[y] = 2;
        }
    }
    let mut bags_of: Vec<Vec<u32>> = vec![Vec::new(); nv];
    for (b, bag) in td.bags.iter().enumerate() {
        for &v in bag {
            if v as usize >= nv {
                return rep.fail(
                    (v, v),
                    format!("bag {b} names vertex {v} outside the graph"),
                );
            }
            bags_of[v as usize].push(b as u32);
        }
    }
    for (v, list) in bags_of.iter_mut().enumerate() {
        list.sort_unstable();
        list.dedup();
        if list.is_empty() {
            return rep.fail((v as u32, v as u32), format!("vertex {v} is in no bag"));
        }
        // Bags holding v form a subtree iff exactly one of them lacks a parent holding v.
        let tops = list
            .iter()
            .filter(|&&b| {
                let p = td.parent[b as usize];
                p == NO_PARENT || list.binary_search(&p).is_err()
            })
            .count();
        if tops != 1 {
            return rep.fail(
                (v as u32, v as u32),
                format!("bags containing vertex {v} form {tops} components"),
            );
        }
    }
    for e in &s.edges {
        let (a, b) = (&bags_of[e.u as usize], &bags_of[e.v as usize]);
        let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        if !small.iter().any(|x| large.binary_search(x).is_ok()) {
            return rep.fail((e.u, e.v), format!("edge ({}, {}) is in no bag", e.u, e.v));
        }
    }
    rep
}

/// Max in-degree `d` of the stored orientation; arboricity is at most `d + 1`.
pub fn verify_orientation(s: &Spanner) -> Result<VerifyReport, VerifyError> {
    if s.dir.len() != s.edges.len() {
        return Err(VerifyError::MissingOrientation {
            got: s.dir.len(),
            edges: s.edges.len(),
        });
    }
    let d = s.in_degrees().into_iter().max().unwrap_or(0);
    let mut rep = VerifyReport::new("orient", d as f64);
    rep.bound = Some(d as f64 + 1.0);
    Ok(rep)
}

/// Simple undirected graph on at most 32 vertices, as adjacency bitmasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmallGraph {
    adj: Vec<u32>,
}

impl SmallGraph {
    pub fn new(n: usize, edges: &[(u32, u32)]) -> Result<Self, VerifyError> {
        if n > 32 {
            return Err(VerifyError::TooLarge { n, max: 32 });
        }
        let mut adj = vec![0u32; n];
        for &(u, v) in edges {
            if u != v {
                adj[u as usize] |= 1 << v;
                adj[v as usize] |= 1 << u;
            }
        }
        Ok(SmallGraph { adj })
    }

    /// The spanner's graph including Steiner vertices.
    pub fn from_spanner(s: &Spanner) -> Result<Self, VerifyError> {
        let edges: Vec<(u32, u32)> = s.edges.iter().map(|e| (e.u, e.v)).collect();
        Self::new(s.num_vertices(), &edges)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj
            .iter()
            .map(|a| a.count_ones() as usize)
            .sum::<usize>()
            / 2
    }
}

/// Exact treewidth by dynamic programming over vertex subsets: `TW(S)` is the
/// least width of an elimination ordering that starts with the vertices of `S`.
pub fn exact_treewidth_small(g: &SmallGraph) -> Result<usize, VerifyError> {
    let n = g.n();
    if n > 12 {
        return Err(VerifyError::TooLarge { n, max: 12 });
    }
    if n == 0 {
        return Ok(0);
    }
    let full = (1u32 << n) - 1;
    // Vertices outside S + v reachable from v through S.
    let q = |s: u32, v: usize| -> u32 {
        let mut seen = 1u32 << v;
        let mut stack = vec![v];
        let mut out = 0u32;
        while let Some(x) = stack.pop() {
            let nb = g.adj[x] & !seen;
            seen |= nb;
            out |= nb & !s;
            let mut inner = nb & s;
            while inner != 0 {
                let y = inner.trailing_zeros() as usize;
                inner &= inner - 1;
                stack.push(y);
            }
        }
        out.count_ones()
    };
    let mut tw = vec![i32::MAX; 1 << n];
    tw[0] = -1;
    for s in 1..=full {
        let mut best = i32::MAX;
        let mut bits = s;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let rest = s & !(1 << v);
            best = best.min(tw[rest as usize].max(q(rest, v) as i32));
        }
        tw[s as usize] = best;
    }
    Ok(tw[full as usize].max(0) as usize)
}

/// Exact arboricity from the Nash-Williams formula over every vertex subset.
pub fn exact_arboricity_small(g: &SmallGraph) -> Result<usize, VerifyError> {
    let n = g.n();
    if n > 10 {
        return Err(VerifyError::TooLarge { n, max: 10 });
    }
    let mut best = 0;
    for s in 1u32..(1 << n) {
        let nh = s.count_ones() as usize;
        if nh < 2 {
            continue;
        }
        let mut twice = 0;
        let mut bits = s;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            twice += (g.adj[v] & s).count_ones() as usize;
        }
        best = best.max((twice / 2).div_ceil(nh - 1));
    }
    Ok(best)
}
