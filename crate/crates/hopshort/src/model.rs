//! Trees, line metrics, HSTs, spanners and decompositions shared by every construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Sentinel parent index of a root.
pub const NO_PARENT: u32 = u32::MAX;

/// Relative tolerance used when comparing float distances.
pub const REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("vertex {v} out of range (n = {n})")]
    InvalidVertex { v: u32, n: usize },
    #[error("empty tree")]
    Empty,
    #[error("expected exactly one root, found {0}")]
    RootCount(usize),
    #[error("parent array contains a cycle or is disconnected")]
    NotATree,
    #[error("parent/weight arrays have lengths {parent} and {weight}, expected n = {n}")]
    Length {
        n: usize,
        parent: usize,
        weight: usize,
    },
    #[error("weight of vertex {0} is negative or not finite")]
    BadWeight(u32),
    #[error("line points must be strictly increasing and finite (index {0})")]
    NotIncreasing(usize),
    #[error("malformed HST: {0}")]
    Hst(String),
    #[error("json: {0}")]
    Json(String),
}

/// Equality of distances up to the shared relative tolerance.
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs()).max(1.0)
}

/// A finite metric over dense ids `0..len()`.
pub trait Metric: Sync {
    fn len(&self) -> usize;
    fn dist(&self, a: u32, b: u32) -> f64;
    /// Distances from `s` to every id; implementations may override with a linear-time sweep.
    fn dists_from(&self, s: u32) -> Vec<f64> {
        (0..self.len() as u32).map(|t| self.dist(s, t)).collect()
    }
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Weighted rooted tree with cached traversal data.
///
/// Vertices are `0..n`. The cached preorder lists every parent before its children,
/// which most algorithms in this crate rely on.
#[derive(Debug, Clone)]
pub struct RootedTree {
    parent: Vec<u32>,
    weight: Vec<f64>,
    root: u32,
    child_start: Vec<u32>,
    child_list: Vec<u32>,
    preorder: Vec<u32>,
    depth: Vec<f64>,
    level: Vec<u32>,
    tin: Vec<u32>,
    tout: Vec<u32>,
    size: Vec<u32>,
    head: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeJson {
    pub n: usize,
    pub parent: Vec<i64>,
    pub weight: Vec<f64>,
}

impl RootedTree {
    pub fn new(parent: Vec<u32>, weight: Vec<f64>) -> Result<Self, ModelError> {
        let n = parent.len();
        if n == 0 {
            return Err(ModelError::Empty);
        }
        if weight.len() != n {
            return Err(ModelError::Length {
                n,
                parent: n,
                weight: weight.len(),
            });
        }
        let roots: Vec<u32> = (0..n as u32)
            .filter(|&v| parent[v as usize] == NO_PARENT)
            .collect();
        if roots.len() != 1 {
            return Err(ModelError::RootCount(roots.len()));
        }
        for (v, &p) in parent.iter().enumerate() {
            if p != NO_PARENT && p as usize >= n {
                return Err(ModelError::InvalidVertex { v: p, n });
            }
            if p as usize == v {
                return Err(ModelError::NotATree);
            }
            let w = weight[v];
            if !w.is_finite() || w < 0.0 {
                return Err(ModelError::BadWeight(v as u32));
            }
        }
        let root = roots[0];
        let mut count = vec![0u32; n + 1];
        for &p in &parent {
            if p != NO_PARENT {
                count[p as usize + 1] += 1;
            }
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let child_start = count.clone();
        let mut fill = count;
        let mut child_list = vec![0u32; n - 1];
        for (v, &p) in parent.iter().enumerate() {
            if p != NO_PARENT {
                child_list[fill[p as usize] as usize] = v as u32;
                fill[p as usize] += 1;
            }
        }
        let mut t = RootedTree {
            parent,
            weight,
            root,
            child_start,
            child_list,
            preorder: Vec::with_capacity(n),
            depth: vec![0.0; n],
            level: vec![0; n],
            tin: vec![0; n],
            tout: vec![0; n],
            size: vec![1; n],
            head: vec![0; n],
        };
        t.weight[root as usize] = 0.0;
        t.traverse()?;
        Ok(t)
    }

    fn traverse(&mut self) -> Result<(), ModelError> {
        let n = self.parent.len();
        // First pass: plain preorder to get subtree sizes.
        let mut stack = vec![self.root];
        let mut order = Vec::with_capacity(n);
        while let Some(v) = stack.pop() {
            order.push(v);
            for &c in self.children(v) {
                stack.push(c);
            }
        }
        if order.len() != n {
            return Err(ModelError::NotATree);
        }
        for &v in order.iter().rev() {
            let p = self.parent[v as usize];
            if p != NO_PARENT {
                self.size[p as usize] += self.size[v as usize];
            }
        }
        // Second pass: heavy-first preorder so heavy paths are contiguous.
        let heavy: Vec<u32> = (0..n as u32).map(|v| self.heavy_child(v)).collect();
        let mut stack = vec![self.root];
        let mut timer = 0u32;
        self.head[self.root as usize] = self.root;
        while let Some(v) = stack.pop() {
            let vi = v as usize;
            self.tin[vi] = timer;
            timer += 1;
            self.preorder.push(v);
            let p = self.parent[vi];
            if p != NO_PARENT {
                let pi = p as usize;
                self.depth[vi] = self.depth[pi] + self.weight[vi];
                self.level[vi] = self.level[pi] + 1;
                self.head[vi] = if heavy[pi] == v { self.head[pi] } else { v };
            }
            let h = heavy[vi];
            for &c in self.children(v).iter().rev() {
                if c != h {
                    stack.push(c);
                }
            }
            if h != NO_PARENT {
                stack.push(h);
            }
        }
        for v in 0..n {
            self.tout[v] = self.tin[v] + self.size[v] - 1;
        }
        Ok(())
    }

    /// Child with the largest subtree, ties to the smallest id; `NO_PARENT` for leaves.
    pub fn heavy_child(&self, v: u32) -> u32 {
        let mut best = NO_PARENT;
        let mut best_size = 0;
        for &c in self.children(v) {
            let s = self.size[c as usize];
            if s > best_size || (s == best_size && c < best) {
                best = c;
                best_size = s;
            }
        }
        best
    }

    pub fn from_json(j: &TreeJson) -> Result<Self, ModelError> {
        if j.parent.len() != j.n || j.weight.len() != j.n {
            return Err(ModelError::Length {
                n: j.n,
                parent: j.parent.len(),
                weight: j.weight.len(),
            });
        }
        let parent = j
            .parent
            .iter()
            .map(|&p| if p < 0 { NO_PARENT } else { p as u32 })
            .collect();
        Self::new(parent, j.weight.clone())
    }

    pub fn to_json(&self) -> TreeJson {
        TreeJson {
            n: self.n(),
            parent: self
                .parent
                .iter()
                .map(|&p| if p == NO_PARENT { -1 } else { p as i64 })
                .collect(),
            weight: self.weight.clone(),
        }
    }

    /// Unit-weight path `0 - 1 - ... - (n-1)` rooted at 0.
    pub fn path(n: usize) -> Self {
        let parent = (0..n)
            .map(|i| if i == 0 { NO_PARENT } else { i as u32 - 1 })
            .collect();
        let mut w = vec![1.0; n];
        w[0] = 0.0;
        Self::new(parent, w).expect("path is a tree")
    }

    /// Unit-weight star with center 0.
    pub fn star(n: usize) -> Self {
        let parent = (0..n).map(|i| if i == 0 { NO_PARENT } else { 0 }).collect();
        let mut w = vec![1.0; n];
        w[0] = 0.0;
        Self::new(parent, w).expect("star is a tree")
    }

    /// Complete `arity`-ary tree with `n` vertices in BFS numbering.
    pub fn complete(n: usize, arity: usize) -> Self {
        let parent = (0..n)
            .map(|i| {
                if i == 0 {
                    NO_PARENT
                } else {
                    ((i - 1) / arity) as u32
                }
            })
            .collect();
        let mut w = vec![1.0; n];
        w[0] = 0.0;
        Self::new(parent, w).expect("complete tree")
    }

    /// Uniform random attachment: vertex `i` picks its parent uniformly from `0..i`.
    /// Weights are integers in `1..=max_weight` (all 1 when `max_weight <= 1`).
    pub fn random(n: usize, max_weight: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut parent = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for i in 0..n {
            if i == 0 {
                parent.push(NO_PARENT);
                w.push(0.0);
            } else {
                parent.push(rng.gen_range(0..i) as u32);
                let x = if max_weight <= 1 {
                    1
                } else {
                    rng.gen_range(1..=max_weight)
                };
                w.push(x as f64);
            }
        }
        Self::new(parent, w).expect("random attachment is a tree")
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }
    pub fn root(&self) -> u32 {
        self.root
    }
    pub fn parent(&self, v: u32) -> Option<u32> {
        let p = self.parent[v as usize];
        (p != NO_PARENT).then_some(p)
    }
    pub fn parents(&self) -> &[u32] {
        &self.parent
    }
    pub fn weight(&self, v: u32) -> f64 {
        self.weight[v as usize]
    }
    pub fn weights(&self) -> &[f64] {
        &self.weight
    }
    pub fn children(&self, v: u32) -> &[u32] {
        let a = self.child_start[v as usize] as usize;
        let b = self.child_start[v as usize + 1] as usize;
        &self.child_list[a..b]
    }
    /// Heavy-first preorder; every vertex appears after its parent.
    pub fn preorder(&self) -> &[u32] {
        &self.preorder
    }
    /// Weighted distance from the root.
    pub fn depth(&self, v: u32) -> f64 {
        self.depth[v as usize]
    }
    /// Number of edges from the root.
    pub fn level(&self, v: u32) -> u32 {
        self.level[v as usize]
    }
    pub fn subtree_size(&self, v: u32) -> u32 {
        self.size[v as usize]
    }
    /// Preorder entry time; the subtree of `v` occupies `tin(v)..=tout(v)`.
    pub fn tin(&self, v: u32) -> u32 {
        self.tin[v as usize]
    }
    pub fn tout(&self, v: u32) -> u32 {
        self.tout[v as usize]
    }
    /// Top vertex of the heavy path containing `v`.
    pub fn heavy_head(&self, v: u32) -> u32 {
        self.head[v as usize]
    }
    pub fn height(&self) -> u32 {
        self.level.iter().copied().max().unwrap_or(0)
    }

    fn check(&self, v: u32) -> Result<(), ModelError> {
        if (v as usize) < self.n() {
            Ok(())
        } else {
            Err(ModelError::InvalidVertex { v, n: self.n() })
        }
    }

    /// Whether `a` lies on the root path of `b`; `is_ancestor(a, a)` is true.
    pub fn is_ancestor(&self, a: u32, b: u32) -> Result<bool, ModelError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.is_ancestor_unchecked(a, b))
    }

    #[inline]
    pub fn is_ancestor_unchecked(&self, a: u32, b: u32) -> bool {
        let (a, b) = (a as usize, b as usize);
        self.tin[a] <= self.tin[b] && self.tout[b] <= self.tout[a]
    }

    pub fn lca(&self, u: u32, v: u32) -> Result<u32, ModelError> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.lca_unchecked(u, v))
    }

    /// Heavy-path LCA in `O(log n)`.
    pub fn lca_unchecked(&self, mut u: u32, mut v: u32) -> u32 {
        loop {
            let hu = self.head[u as usize];
            let hv = self.head[v as usize];
            if hu == hv {
                return if self.level[u as usize] <= self.level[v as usize] {
                    u
                } else {
                    v
                };
            }
            if self.level[hu as usize] >= self.level[hv as usize] {
                u = self.parent[hu as usize];
            } else {
                v = self.parent[hv as usize];
            }
        }
    }

    pub fn tree_distance(&self, u: u32, v: u32) -> Result<f64, ModelError> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.dist_unchecked(u, v))
    }

    #[inline]
    pub fn dist_unchecked(&self, u: u32, v: u32) -> f64 {
        if u == v {
            return 0.0;
        }
        let a = self.lca_unchecked(u, v);
        self.depth[u as usize] + self.depth[v as usize] - 2.0 * self.depth[a as usize]
    }
}

impl Metric for RootedTree {
    fn len(&self) -> usize {
        self.n()
    }
    fn dist(&self, a: u32, b: u32) -> f64 {
        self.dist_unchecked(a, b)
    }
    fn dists_from(&self, s: u32) -> Vec<f64> {
        // Climb from s to the root, then push distances down in preorder.
        let n = self.n();
        let mut d = vec![f64::NAN; n];
        let mut v = s;
        let mut acc = 0.0;
        d[s as usize] = 0.0;
        while let Some(p) = self.parent(v) {
            acc += self.weight[v as usize];
            d[p as usize] = acc;
            v = p;
        }
        for &v in &self.preorder {
            if d[v as usize].is_nan() {
                let p = self.parent[v as usize];
                d[v as usize] = d[p as usize] + self.weight[v as usize];
            }
        }
        d
    }
}

/// Points on a line with strictly increasing coordinates.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LineMetric {
    pub points: Vec<f64>,
}

impl LineMetric {
    pub fn new(points: Vec<f64>) -> Result<Self, ModelError> {
        for i in 0..points.len() {
            if !points[i].is_finite() || (i > 0 && points[i] <= points[i - 1]) {
                return Err(ModelError::NotIncreasing(i));
            }
        }
        Ok(Self { points })
    }
    /// The uniform line `0, 1, ..., n-1`.
    pub fn uniform(n: usize) -> Self {
        Self {
            points: (0..n).map(|i| i as f64).collect(),
        }
    }
    /// Random integer gaps in `1..=max_gap`.
    pub fn random(n: usize, max_gap: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            points.push(x);
            x += rng.gen_range(1..=max_gap.max(1)) as f64;
        }
        Self { points }
    }
    pub fn n(&self) -> usize {
        self.points.len()
    }
}

impl Metric for LineMetric {
    fn len(&self) -> usize {
        self.points.len()
    }
    fn dist(&self, a: u32, b: u32) -> f64 {
        (self.points[a as usize] - self.points[b as usize]).abs()
    }
}

/// Hierarchical well-separated tree stored as a flat node array.
///
/// Leaves carry a metric point id; the points must be exactly `0..num_leaves`.
#[derive(Debug, Clone)]
pub struct Hst {
    gamma: Vec<f64>,
    children: Vec<Vec<u32>>,
    point: Vec<Option<u32>>,
    leaf_of_point: Vec<u32>,
    shape: RootedTree,
}

/// Nested JSON form: internal nodes `{"gamma", "children"}`, leaves `{"point"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HstJson {
    Leaf { point: u32 },
    Node { gamma: f64, children: Vec<HstJson> },
}

impl Hst {
    /// Builds from a parent array over nodes (node 0 need not be the root).
    pub fn new(
        parent: Vec<u32>,
        gamma: Vec<f64>,
        point: Vec<Option<u32>>,
    ) -> Result<Self, ModelError> {
        let m = parent.len();
        if gamma.len() != m || point.len() != m {
            return Err(ModelError::Hst("array lengths differ".into()));
        }
        let shape = RootedTree::new(parent, vec![1.0; m])?;
        let mut children = vec![Vec::new(); m];
        for v in 0..m as u32 {
            children[v as usize] = shape.children(v).to_vec();
        }
        let leaves = point.iter().filter(|p| p.is_some()).count();
        let mut leaf_of_point = vec![NO_PARENT; leaves];
        for v in 0..m {
            match point[v] {
                Some(p) => {
                    if !children[v].is_empty() {
                        return Err(ModelError::Hst(format!(
                            "node {v} has a point and children"
                        )));
                    }
                    if p as usize >= leaves || leaf_of_point[p as usize] != NO_PARENT {
                        return Err(ModelError::Hst(format!(
                            "point ids must be a permutation of 0..{leaves}"
                        )));
                    }
                    leaf_of_point[p as usize] = v as u32;
                }
                None => {
                    if children[v].is_empty() {
                        return Err(ModelError::Hst(format!(
                            "internal node {v} has no children"
                        )));
                    }
                    if !(gamma[v] > 0.0 && gamma[v].is_finite()) {
                        return Err(ModelError::Hst(format!(
                            "label of node {v} must be positive"
                        )));
                    }
                }
            }
        }
        let mut gamma = gamma;
        for v in 0..m {
            if point[v].is_some() {
                gamma[v] = 0.0;
            }
        }
        Ok(Self {
            gamma,
            children,
            point,
            leaf_of_point,
            shape,
        })
    }

    pub fn from_json(j: &HstJson) -> Result<Self, ModelError> {
        let mut parent = Vec::new();
        let mut gamma = Vec::new();
        let mut point = Vec::new();
        let mut stack = vec![(j, NO_PARENT)];
        while let Some((node, par)) = stack.pop() {
            let id = parent.len() as u32;
            parent.push(par);
            match node {
                HstJson::Leaf { point: p } => {
                    gamma.push(0.0);
                    point.push(Some(*p));
                }
                HstJson::Node { gamma: g, children } => {
                    gamma.push(*g);
                    point.push(None);
                    for c in children.iter().rev() {
                        stack.push((c, id));
                    }
                }
            }
        }
        Self::new(parent, gamma, point)
    }

    pub fn to_json(&self) -> HstJson {
        fn rec(h: &Hst, v: u32) -> HstJson {
            match h.point[v as usize] {
                Some(p) => HstJson::Leaf { point: p },
                None => HstJson::Node {
                    gamma: h.gamma[v as usize],
                    children: h.children[v as usize].iter().map(|&c| rec(h, c)).collect(),
                },
            }
        }
        rec(self, self.root())
    }

    /// Random HST: every internal node gets between 2 and `delta` children,
    /// labels shrink by exactly `sep` per level, and leaves are numbered left to right.
    pub fn random(num_leaves: usize, sep: f64, delta: usize, seed: u64) -> Self {
        assert!(num_leaves >= 1 && delta >= 2 && sep >= 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut parent = vec![NO_PARENT];
        let mut level = vec![0u32];
        let mut point = vec![None];
        // Split leaf budgets top-down.
        let mut work = vec![(0u32, num_leaves)];
        let mut leaves_in_order = Vec::new();
        while let Some((node, cnt)) = work.pop() {
            if cnt == 1 {
                leaves_in_order.push(node);
                continue;
            }
            let k = rng.gen_range(2..=delta.min(cnt));
            // random composition of cnt into k positive parts
            let mut cuts: Vec<usize> = Vec::new();
            while cuts.len() < k - 1 {
                let c = rng.gen_range(1..cnt);
                if !cuts.contains(&c) {
                    cuts.push(c);
                }
            }
            cuts.sort_unstable();
            let mut prev = 0;
            let mut parts = Vec::new();
            for c in cuts.into_iter().chain(std::iter::once(cnt)) {
                parts.push(c - prev);
                prev = c;
            }
            let mut ids = Vec::new();
            for &sz in &parts {
                let id = parent.len() as u32;
                parent.push(node);
                level.push(level[node as usize] + 1);
                point.push(None);
                ids.push((id, sz));
            }
            for &(id, sz) in ids.iter().rev() {
                work.push((id, sz));
            }
        }
        for (i, &leaf) in leaves_in_order.iter().enumerate() {
            point[leaf as usize] = Some(i as u32);
        }
        let max_level = *level.iter().max().unwrap();
        let gamma = level
            .iter()
            .map(|&l| sep.powi((max_level - l) as i32))
            .collect();
        Self::new(parent, gamma, point).expect("generated HST is valid")
    }

    pub fn root(&self) -> u32 {
        self.shape.root()
    }
    pub fn num_nodes(&self) -> usize {
        self.gamma.len()
    }
    pub fn num_leaves(&self) -> usize {
        self.leaf_of_point.len()
    }
    pub fn gamma(&self, v: u32) -> f64 {
        self.gamma[v as usize]
    }
    pub fn children(&self, v: u32) -> &[u32] {
        &self.children[v as usize]
    }
    pub fn point(&self, v: u32) -> Option<u32> {
        self.point[v as usize]
    }
    pub fn leaf_of_point(&self, p: u32) -> u32 {
        self.leaf_of_point[p as usize]
    }
    /// Node tree with unit weights, useful for ancestry queries.
    pub fn shape(&self) -> &RootedTree {
        &self.shape
    }

    /// Checks `gamma(parent) >= sep * gamma(child)` and the degree bound.
    pub fn check(&self, sep: f64, delta: usize) -> Result<(), ModelError> {
        for v in 0..self.num_nodes() as u32 {
            if self.children(v).len() > delta {
                return Err(ModelError::Hst(format!(
                    "node {v} has more than {delta} children"
                )));
            }
            for &c in self.children(v) {
                if self.point(c).is_none() && self.gamma(v) < sep * self.gamma(c) * (1.0 - REL_TOL)
                {
                    return Err(ModelError::Hst(format!("separation violated at node {v}")));
                }
            }
        }
        Ok(())
    }
}

impl Metric for Hst {
    fn len(&self) -> usize {
        self.num_leaves()
    }
    fn dist(&self, a: u32, b: u32) -> f64 {
        if a == b {
            return 0.0;
        }
        let x = self.leaf_of_point[a as usize];
        let y = self.leaf_of_point[b as usize];
        self.gamma[self.shape.lca_unchecked(x, y) as usize]
    }
}

/// An undirected spanner edge stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    pub w: f64,
}

/// Direction of an edge relative to its canonical `u < v` storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dir {
    /// `u -> v`
    Forward,
    /// `v -> u`
    Backward,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SteinerPoint {
    pub id: u32,
    /// Base point the Steiner vertex coincides with in the metric.
    pub host: u32,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct SpannerMeta {
    pub construction: String,
    pub k: u32,
    /// Hop bound actually realized when the requested `k` had to be rounded.
    pub effective_k: u32,
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

/// Edge set over `n` base points plus optional Steiner vertices, with an orientation per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Spanner {
    pub n: usize,
    pub edges: Vec<Edge>,
    pub dir: Vec<Dir>,
    pub steiner: Vec<SteinerPoint>,
    pub meta: SpannerMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpannerJson {
    pub n: usize,
    pub edges: Vec<(u32, u32, f64, u8)>,
    pub meta: SpannerMeta,
    pub orientation: Vec<u8>,
    #[serde(default)]
    pub steiner: Vec<SteinerPoint>,
}

impl Spanner {
    pub fn empty(n: usize, construction: &str, k: u32) -> Self {
        Spanner {
            n,
            edges: Vec::new(),
            dir: Vec::new(),
            steiner: Vec::new(),
            meta: SpannerMeta {
                construction: construction.into(),
                k,
                effective_k: k,
                ..Default::default()
            },
        }
    }

    /// Total vertex count including Steiner vertices.
    pub fn num_vertices(&self) -> usize {
        self.n + self.steiner.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Source and target of edge `i` under its orientation.
    pub fn oriented(&self, i: usize) -> (u32, u32) {
        let e = self.edges[i];
        match self.dir[i] {
            Dir::Forward => (e.u, e.v),
            Dir::Backward => (e.v, e.u),
        }
    }

    pub fn in_degrees(&self) -> Vec<u32> {
        let mut d = vec![0u32; self.num_vertices()];
        for i in 0..self.edges.len() {
            d[self.oriented(i).1 as usize] += 1;
        }
        d
    }

    pub fn degrees(&self) -> Vec<u32> {
        let mut d = vec![0u32; self.num_vertices()];
        for e in &self.edges {
            d[e.u as usize] += 1;
            d[e.v as usize] += 1;
        }
        d
    }

    /// Adjacency lists `(neighbor, weight)` in CSR form.
    pub fn adjacency(&self) -> Adjacency {
        Adjacency::new(self.num_vertices(), &self.edges)
    }

    pub fn to_json(&self) -> SpannerJson {
        SpannerJson {
            n: self.n,
            edges: self
                .edges
                .iter()
                .zip(&self.dir)
                .map(|(e, d)| (e.u, e.v, e.w, (*d == Dir::Backward) as u8))
                .collect(),
            meta: self.meta.clone(),
            orientation: self
                .dir
                .iter()
                .map(|d| (*d == Dir::Backward) as u8)
                .collect(),
            steiner: self.steiner.clone(),
        }
    }

    pub fn from_json(j: &SpannerJson) -> Result<Self, ModelError> {
        let total = j.n + j.steiner.len();
        let mut b = SpannerBuilder::new(j.n);
        b.steiner = j.steiner.clone();
        for &(u, v, w, d) in &j.edges {
            for x in [u, v] {
                if x as usize >= total {
                    return Err(ModelError::InvalidVertex { v: x, n: total });
                }
            }
            if d == 0 {
                b.add(u, v, w);
            } else {
                b.add(v, u, w);
            }
        }
        let mut s = b.finish(&j.meta.construction, j.meta.k);
        s.meta = j.meta.clone();
        Ok(s)
    }
}

/// Compressed adjacency lists.
#[derive(Debug, Clone)]
pub struct Adjacency {
    start: Vec<u32>,
    nbr: Vec<u32>,
    w: Vec<f64>,
}

impl Adjacency {
    pub fn new(n: usize, edges: &[Edge]) -> Self {
        let mut start = vec![0u32; n + 1];
        for e in edges {
            start[e.u as usize + 1] += 1;
            start[e.v as usize + 1] += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut nbr = vec![0u32; 2 * edges.len()];
        let mut w = vec![0.0; 2 * edges.len()];
        for e in edges {
            for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                let slot = fill[a as usize] as usize;
                nbr[slot] = b;
                w[slot] = e.w;
                fill[a as usize] += 1;
            }
        }
        Adjacency { start, nbr, w }
    }
    pub fn neighbors(&self, v: u32) -> impl Iterator<Item = (u32, f64)> + '_ {
        let a = self.start[v as usize] as usize;
        let b = self.start[v as usize + 1] as usize;
        self.nbr[a..b]
            .iter()
            .copied()
            .zip(self.w[a..b].iter().copied())
    }
    pub fn neighbor_ids(&self, v: u32) -> &[u32] {
        let a = self.start[v as usize] as usize;
        let b = self.start[v as usize + 1] as usize;
        &self.nbr[a..b]
    }
    pub fn degree(&self, v: u32) -> usize {
        (self.start[v as usize + 1] - self.start[v as usize]) as usize
    }
    pub fn len(&self) -> usize {
        self.start.len() - 1
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Collects oriented edges and deduplicates them on `finish`.
#[derive(Debug, Clone)]
pub struct SpannerBuilder {
    n: usize,
    raw: Vec<(u32, u32, f64)>,
    pub steiner: Vec<SteinerPoint>,
}

impl SpannerBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            raw: Vec::new(),
            steiner: Vec::new(),
        }
    }
    /// Adds the edge oriented `from -> to`; self-loops are ignored.
    #[inline]
    pub fn add(&mut self, from: u32, to: u32, w: f64) {
        if from != to {
            self.raw.push((from, to, w));
        }
    }
    pub fn len(&self) -> usize {
        self.raw.len()
    }
    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }
    pub fn reserve(&mut self, extra: usize) {
        self.raw.reserve(extra);
    }

    /// Canonicalizes to `u < v`, keeps the first orientation seen for duplicate pairs.
    pub fn finish(self, construction: &str, k: u32) -> Spanner {
        let mut keyed: Vec<(u32, u32, f64, Dir)> = self
            .raw
            .into_iter()
            .map(|(a, b, w)| {
                if a < b {
                    (a, b, w, Dir::Forward)
                } else {
                    (b, a, w, Dir::Backward)
                }
            })
            .collect();
        keyed.sort_by_key(|x| (x.0, x.1));
        keyed.dedup_by_key(|x| (x.0, x.1));
        let mut edges = Vec::with_capacity(keyed.len());
        let mut dir = Vec::with_capacity(keyed.len());
        for (u, v, w, d) in keyed {
            edges.push(Edge { u, v, w });
            dir.push(d);
        }
        Spanner {
            n: self.n,
            edges,
            dir,
            steiner: self.steiner,
            meta: SpannerMeta {
                construction: construction.into(),
                k,
                effective_k: k,
                ..Default::default()
            },
        }
    }
}

/// Tree decomposition: bags plus a parent array over bag indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TreeDecomposition {
    pub bags: Vec<Vec<u32>>,
    #[serde(with = "parent_serde")]
    pub parent: Vec<u32>,
}

mod parent_serde {
    use super::NO_PARENT;
    use serde::{Deserialize, Deserializer, Serializer};
    pub fn serialize<S: Serializer>(p: &[u32], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(
            p.iter()
                .map(|&x| if x == NO_PARENT { -1 } else { x as i64 }),
        )
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u32>, D::Error> {
        let v: Vec<i64> = Vec::deserialize(d)?;
        Ok(v.into_iter()
            .map(|x| if x < 0 { NO_PARENT } else { x as u32 })
            .collect())
    }
}

impl TreeDecomposition {
    /// Max bag size minus one; 0 for an empty decomposition.
    pub fn width(&self) -> usize {
        self.bags
            .iter()
            .map(|b| b.len())
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
    }
    pub fn push(&mut self, bag: Vec<u32>, parent: u32) -> u32 {
        self.bags.push(bag);
        self.parent.push(parent);
        (self.bags.len() - 1) as u32
    }
    pub fn len(&self) -> usize {
        self.bags.len()
    }
    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_path_dist(t: &RootedTree, u: u32, v: u32) -> f64 {
        // Walk both root paths, mark, and sum weights up to the first common vertex.
        let mut up = std::collections::HashMap::new();
        let mut x = u;
        let mut acc = 0.0;
        loop {
            up.insert(x, acc);
            match t.parent(x) {
                Some(p) => {
                    acc += t.weight(x);
                    x = p;
                }
                None => break,
            }
        }
        let mut y = v;
        let mut acc2 = 0.0;
        loop {
            if let Some(a) = up.get(&y) {
                return a + acc2;
            }
            acc2 += t.weight(y);
            y = t.parent(y).unwrap();
        }
    }

    fn naive_lca(t: &RootedTree, u: u32, v: u32) -> u32 {
        let mut marked = vec![false; t.n()];
        let mut x = Some(u);
        while let Some(a) = x {
            marked[a as usize] = true;
            x = t.parent(a);
        }
        let mut y = v;
        while !marked[y as usize] {
            y = t.parent(y).unwrap();
        }
        y
    }

    #[test]
    fn unit_path_distance() {
        let t = RootedTree::path(3);
        assert_eq!(t.tree_distance(0, 2).unwrap(), 2.0);
        assert_eq!(t.tree_distance(1, 1).unwrap(), 0.0);
    }

    #[test]
    fn star_lca_and_ancestry() {
        let t = RootedTree::star(5);
        assert_eq!(t.lca(3, 4).unwrap(), 0);
        assert_eq!(t.lca(3, 0).unwrap(), 0);
        assert!(t.is_ancestor(0, 4).unwrap());
        assert!(!t.is_ancestor(4, 0).unwrap());
        assert!(t.is_ancestor(2, 2).unwrap());
    }

    #[test]
    fn invalid_ids_are_errors() {
        let t = RootedTree::path(4);
        assert_eq!(t.lca(0, 9), Err(ModelError::InvalidVertex { v: 9, n: 4 }));
        assert!(t.tree_distance(7, 0).is_err());
        assert!(t.is_ancestor(0, 4).is_err());
    }

    #[test]
    fn rejects_malformed_parent_arrays() {
        assert_eq!(
            RootedTree::new(vec![NO_PARENT, NO_PARENT], vec![0.0, 1.0]).unwrap_err(),
            ModelError::RootCount(2)
        );
        assert_eq!(
            RootedTree::new(vec![1, 2, 1], vec![1.0; 3]).unwrap_err(),
            ModelError::RootCount(0)
        );
        assert_eq!(
            RootedTree::new(vec![NO_PARENT, 2, 1], vec![0.0, 1.0, 1.0]).unwrap_err(),
            ModelError::NotATree
        );
        assert!(RootedTree::new(vec![NO_PARENT, 0], vec![0.0, -1.0]).is_err());
    }

    #[test]
    fn random_tree_matches_naive_oracles() {
        let t = RootedTree::random(50, 7, 11);
        for u in 0..50 {
            for v in 0..50 {
                assert_eq!(t.lca(u, v).unwrap(), naive_lca(&t, u, v));
                assert_eq!(t.tree_distance(u, v).unwrap(), naive_path_dist(&t, u, v));
                assert_eq!(t.is_ancestor(u, v).unwrap(), naive_lca(&t, u, v) == u);
            }
        }
    }

    #[test]
    fn dists_from_matches_pairwise() {
        let t = RootedTree::random(200, 5, 3);
        for s in [0u32, 17, 199] {
            let d = t.dists_from(s);
            for v in 0..200u32 {
                assert_eq!(d[v as usize], t.dist(s, v));
            }
        }
    }

    #[test]
    fn tree_json_round_trip() {
        let t = RootedTree::random(20, 3, 5);
        let j = serde_json::to_string(&t.to_json()).unwrap();
        let back = RootedTree::from_json(&serde_json::from_str(&j).unwrap()).unwrap();
        assert_eq!(back.parents(), t.parents());
        assert_eq!(back.weights(), t.weights());
        assert_eq!(RootedTree::path(5).to_json().parent, vec![-1, 0, 1, 2, 3]);
    }

    #[test]
    fn line_metric_validation() {
        assert!(LineMetric::new(vec![0.0, 1.0, 1.0]).is_err());
        let l = LineMetric::new(vec![0.0, 2.5, 4.0]).unwrap();
        assert_eq!(l.dist(0, 2), 4.0);
    }

    #[test]
    fn hst_json_and_leaf_metric() {
        let j: HstJson = serde_json::from_str(
            r#"{"gamma":8,"children":[{"gamma":2,"children":[{"point":0},{"point":1}]},{"point":2}]}"#,
        )
        .unwrap();
        let h = Hst::from_json(&j).unwrap();
        assert_eq!(h.dist(0, 1), 2.0);
        assert_eq!(h.dist(0, 2), 8.0);
        assert!(h.check(4.0, 2).is_ok());
        assert!(h.check(5.0, 2).is_err());
        let again = Hst::from_json(&h.to_json()).unwrap();
        assert_eq!(again.dist(1, 2), 8.0);
    }

    #[test]
    fn random_hst_is_well_separated() {
        let h = Hst::random(300, 2.0, 4, 9);
        assert_eq!(h.num_leaves(), 300);
        h.check(2.0, 4).unwrap();
    }

    #[test]
    fn builder_dedupes_and_keeps_first_orientation() {
        let mut b = SpannerBuilder::new(3);
        b.add(2, 0, 2.0);
        b.add(0, 2, 2.0);
        b.add(1, 1, 0.0);
        b.add(0, 1, 1.0);
        let s = b.finish("t", 2);
        assert_eq!(s.edges.len(), 2);
        assert_eq!(s.oriented(1), (2, 0));
        assert_eq!(s.in_degrees(), vec![1, 1, 0]);
        let back = Spanner::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }

    proptest! {
        #[test]
        fn tree_metric_axioms(n in 2usize..80, seed in 0u64..1000, picks in proptest::collection::vec((0u32..80, 0u32..80, 0u32..80), 20)) {
            let t = RootedTree::random(n, 9, seed);
            for (a, b, c) in picks {
                let (a, b, c) = (a % n as u32, b % n as u32, c % n as u32);
                let ab = t.dist(a, b);
                prop_assert!(ab + t.dist(b, c) >= t.dist(a, c) - 1e-9);
                let l = t.lca_unchecked(a, b);
                prop_assert!(approx_eq(ab, t.dist(a, l) + t.dist(l, b)));
                prop_assert_eq!(ab, t.dist(b, a));
            }
        }

        #[test]
        fn hst_leaf_metric_is_ultrametric(n in 2usize..120, seed in 0u64..500, picks in proptest::collection::vec((0u32..120, 0u32..120, 0u32..120), 20)) {
            let h = Hst::random(n, 3.0, 5, seed);
            for (x, y, z) in picks {
                let (x, y, z) = (x % n as u32, y % n as u32, z % n as u32);
                prop_assert!(h.dist(x, z) <= h.dist(x, y).max(h.dist(y, z)));
            }
        }
    }
}
