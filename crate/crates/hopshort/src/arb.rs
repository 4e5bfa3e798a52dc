//! Shortcuttings with bounded arboricity. Every edge carries an orientation and
//! the maximum in-degree `d` of that orientation certifies arboricity at most `d + 1`.
//!
//! * [`classic_tree_shortcut`]: hop-k with `O(n alpha_k(n))` edges on any tree.
//! * [`steiner_line_hop2`], [`steiner_line`]: Steiner spanners of a line where
//!   every edge is split at a fresh Steiner vertex, so in-degrees stay constant.
//! * [`build_line`]: hop-k spanners of a line with the Steiner role played by
//!   the line's own points.
//! * [`build_hst`]: the same recursion on the leaf metric of an HST.
//! * [`build_tree_bounded_height`], [`build_tree_general`]: ancestor shortcuts on
//!   shallow trees, lifted to arbitrary trees through heavy paths.

use crate::ackermann::alpha;
use crate::decompose::{
    aux_tree, centroid_local, for_each_portal_edge, heavy_light, tree_partition_local, SubTree,
};
use crate::model::{
    Hst, LineMetric, Metric, RootedTree, Spanner, SpannerBuilder, SteinerPoint, NO_PARENT,
};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ArbError {
    #[error("hop bound k = {k} is below the minimum {min} for this construction")]
    KTooSmall { k: u32, min: u32 },
    #[error("hop bound k = {0} must be even")]
    OddK(u32),
    #[error("parameter k' = {0} must be congruent to 1 mod 3")]
    BadKPrime(u32),
    #[error("needs {needed} Steiner slots in some gap but the budget is {budget}")]
    InsufficientBudget { needed: usize, budget: usize },
    #[error("epsilon must lie in (0, 1), got {0}")]
    BadEpsilon(f64),
    #[error("malformed HST: {0}")]
    Hst(String),
}

// ---------------------------------------------------------------------------
// Shared pieces on local trees.

fn clique_sub(sb: &mut SpannerBuilder, sub: &SubTree) {
    for i in 0..sub.len() as u32 {
        let d = sub.dists_from(i);
        for j in i + 1..sub.len() as u32 {
            sb.add(sub.gid[i as usize], sub.gid[j as usize], d[j as usize]);
        }
    }
}

/// Centroid recursion: the centroid points at every other vertex of its piece.
fn centroid_stars(sb: &mut SpannerBuilder, sub: &SubTree) {
    let m = sub.len();
    if m <= 1 {
        return;
    }
    let sizes = sub.sizes();
    let c = centroid_local(sub, &sizes) as usize;
    let d = sub.dists_from(c as u32);
    for i in 0..m {
        sb.add(sub.gid[c], sub.gid[i], d[i]);
    }
    let (cs, cl) = sub.children();
    for &k in &cl[cs[c] as usize..cs[c + 1] as usize] {
        let k = k as usize;
        let members: Vec<u32> = (k as u32..(k + sizes[k] as usize) as u32).collect();
        centroid_stars(sb, &sub.induce(&members));
    }
    if c > 0 {
        let end = c + sizes[c] as usize;
        let members: Vec<u32> = (0..c as u32).chain(end as u32..m as u32).collect();
        centroid_stars(sb, &sub.induce(&members));
    }
}

// ---------------------------------------------------------------------------
// Classic sparse shortcutting.

fn classic_rec(sb: &mut SpannerBuilder, sub: &SubTree, k: u32) {
    let m = sub.len();
    if m <= 3 {
        clique_sub(sb, sub);
        return;
    }
    if k == 2 {
        centroid_stars(sb, sub);
        return;
    }
    // Components of size alpha_{k-2}(m); the cut set is small enough that a
    // (k-2)-construction on it costs O(m) edges.
    let ell = alpha(k - 2, m).clamp(1, m - 1);
    let part = tree_partition_local(sub, ell);
    let tx = aux_tree(sub, &part.in_x, &part.x);
    if k == 3 {
        clique_sub(sb, &tx);
    } else {
        classic_rec(sb, &tx, k - 2);
    }
    let depths = sub.depths();
    for comp in &part.components {
        let csub = sub.induce(&comp.members);
        for_each_portal_edge(sub, &depths, comp, &csub, |p, w, d| sb.add(p, w, d));
        classic_rec(sb, &csub, k);
    }
}

/// Hop-k stretch-1 shortcutting with `O(n alpha_k(n))` edges.
pub fn classic_tree_shortcut(t: &RootedTree, k: u32) -> Result<Spanner, ArbError> {
    if k < 2 {
        return Err(ArbError::KTooSmall { k, min: 2 });
    }
    let mut sb = SpannerBuilder::new(t.n());
    if t.n() > 0 {
        classic_rec(&mut sb, &SubTree::from_tree(t), k);
    }
    Ok(sb.finish("classic", k))
}

// ---------------------------------------------------------------------------
// Lines.

/// Indices of `c` equally spaced cut points among `m` points, where `c` is the
/// smallest count leaving intervals of at most `ell` points (and at least one cut).
fn cut_positions(m: usize, ell: usize) -> Vec<usize> {
    let ell = ell.max(1);
    let c = if m > ell {
        (m - ell).div_ceil(ell + 1)
    } else {
        1
    }
    .max(1);
    (0..c).map(|i| (i + 1) * (m + 1) / (c + 1) - 1).collect()
}

/// Intervals between consecutive cuts as `(start, end, left cut, right cut)` over
/// positions `0..m`.
fn intervals(m: usize, cuts: &[usize]) -> Vec<(usize, usize, Option<usize>, Option<usize>)> {
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut prev: Option<usize> = None;
    for &c in cuts.iter().chain(std::iter::once(&m)) {
        let start = prev.map_or(0, |p| p + 1);
        let right = (c < m).then_some(c);
        if start < c {
            out.push((start, c, prev, right));
        }
        prev = Some(c);
    }
    out
}

/// Realizes a pair of line points by two edges meeting at a host inside a gap
/// of the current point set. Hosts are either fresh Steiner vertices placed on a
/// line point, or the line points strictly inside the gap.
struct Splitter<'a> {
    pos: &'a [f64],
    ids: &'a [u32],
    fresh: Option<u32>,
    steiner: Vec<SteinerPoint>,
    cursor: HashMap<u32, usize>,
    usage: Vec<u32>,
}

impl<'a> Splitter<'a> {
    fn new(pos: &'a [f64], ids: &'a [u32], fresh_base: Option<u32>) -> Self {
        Splitter {
            pos,
            ids,
            fresh: fresh_base,
            steiner: Vec::new(),
            cursor: HashMap::new(),
            usage: vec![0; pos.len()],
        }
    }

    fn dist(&self, a: u32, b: u32) -> f64 {
        (self.pos[a as usize] - self.pos[b as usize]).abs()
    }

    /// `a` and `b` are line indices; `(gl, gr)` are consecutive points of the current set with `[gl, gr]` between them.
    fn split(&mut self, sb: &mut SpannerBuilder, a: u32, b: u32, gl: u32, gr: u32) {
        let ctr = self.cursor.entry(gl).or_insert(0);
        match self.fresh {
            Some(base) => {
                let g = gl + (*ctr % (gr - gl) as usize) as u32;
                *ctr += 1;
                self.usage[g as usize] += 1;
                let id = base + self.steiner.len() as u32;
                self.steiner.push(SteinerPoint {
                    id,
                    host: self.ids[g as usize],
                });
                sb.add(self.ids[a as usize], id, self.dist(a, g));
                sb.add(self.ids[b as usize], id, self.dist(b, g));
            }
            None => {
                let span = (gr - gl) as usize - 1;
                if span == 0 {
                    sb.add(self.ids[a as usize], self.ids[b as usize], self.dist(a, b));
                    return;
                }
                let y = gl + 1 + (*ctr % span) as u32;
                *ctr += 1;
                self.usage[y as usize] += 1;
                sb.add(self.ids[a as usize], self.ids[y as usize], self.dist(a, y));
                sb.add(self.ids[b as usize], self.ids[y as usize], self.dist(b, y));
            }
        }
    }

    /// Gap next to position `x` of `p` in the direction of position `c`.
    fn gap_toward(p: &[u32], x: usize, c: usize) -> (u32, u32) {
        if x < c {
            (p[x], p[x + 1])
        } else {
            (p[x - 1], p[x])
        }
    }
}

/// Hop-2k Steiner recursion over the sorted line indices `p`.
fn steiner_rec(sp: &mut Splitter, sb: &mut SpannerBuilder, p: &[u32], k: u32) {
    let m = p.len();
    if m <= 1 {
        return;
    }
    if m == 2 {
        sp.split(sb, p[0], p[1], p[0], p[1]);
        return;
    }
    match k {
        1 => {
            for i in 0..m {
                for j in i + 1..m {
                    sp.split(sb, p[i], p[j], p[i], p[i + 1]);
                }
            }
        }
        2 => {
            let c = (m - 1) / 2;
            for x in 0..m {
                if x != c {
                    let (gl, gr) = Splitter::gap_toward(p, x, c);
                    sp.split(sb, p[c], p[x], gl, gr);
                }
            }
            steiner_rec(sp, sb, &p[..c], 2);
            steiner_rec(sp, sb, &p[c + 1..], 2);
        }
        _ => {
            let cuts = cut_positions(m, alpha(k - 2, m));
            let cp: Vec<u32> = cuts.iter().map(|&c| p[c]).collect();
            steiner_rec(sp, sb, &cp, k - 2);
            for (s, e, lc, rc) in intervals(m, &cuts) {
                for x in s..e {
                    for c in lc.into_iter().chain(rc) {
                        let (gl, gr) = Splitter::gap_toward(p, x, c);
                        sp.split(sb, p[c], p[x], gl, gr);
                    }
                }
                steiner_rec(sp, sb, &p[s..e], k);
            }
        }
    }
}

fn steiner_common(l: &LineMetric, k: u32, budget: usize, name: &str) -> Result<Spanner, ArbError> {
    let n = l.n();
    let ids: Vec<u32> = (0..n as u32).collect();
    let mut sb = SpannerBuilder::new(n);
    let mut sp = Splitter::new(&l.points, &ids, Some(n as u32));
    steiner_rec(&mut sp, &mut sb, &ids, k);
    let needed = sp.usage.iter().copied().max().unwrap_or(0) as usize;
    if needed > budget {
        return Err(ArbError::InsufficientBudget { needed, budget });
    }
    sb.steiner = std::mem::take(&mut sp.steiner);
    let mut s = sb.finish(name, 2 * k);
    s.meta
        .params
        .insert("max_slots_per_gap".into(), needed as f64);
    Ok(s)
}

/// Hop-2 Steiner spanner of a line: a clique whose edges are each split at a fresh
/// Steiner vertex. `budget` is the number of Steiner slots available per gap.
pub fn steiner_line_hop2(l: &LineMetric, budget: usize) -> Result<Spanner, ArbError> {
    steiner_common(l, 1, budget, "steiner-line")
}

/// Hop-2k Steiner spanner of a line with in-degree at most 2 at every vertex.
pub fn steiner_line(l: &LineMetric, k: u32, budget: usize) -> Result<Spanner, ArbError> {
    if k < 2 {
        return Err(ArbError::KTooSmall { k, min: 2 });
    }
    steiner_common(l, k, budget, "steiner-line")
}

/// Hop `2j + 2` line construction on sorted line indices `p`.
fn line_rec(sp: &mut Splitter, sb: &mut SpannerBuilder, p: &[u32], j: u32) {
    let m = p.len();
    if m <= 1 {
        return;
    }
    let direct = |sp: &Splitter, sb: &mut SpannerBuilder, a: u32, b: u32| {
        sb.add(sp.ids[a as usize], sp.ids[b as usize], sp.dist(a, b));
    };
    if m <= 3 {
        for i in 0..m {
            for t in i + 1..m {
                direct(sp, sb, p[i], p[t]);
            }
        }
        return;
    }
    if j == 0 {
        let c = (m - 1) / 2;
        for x in 0..m {
            direct(sp, sb, p[c], p[x]);
        }
        line_rec(sp, sb, &p[..c], 0);
        line_rec(sp, sb, &p[c + 1..], 0);
        return;
    }
    let cuts = cut_positions(m, alpha(j, m));
    let cp: Vec<u32> = cuts.iter().map(|&c| p[c]).collect();
    steiner_rec(sp, sb, &cp, j);
    for (s, e, lc, rc) in intervals(m, &cuts) {
        for x in s..e {
            for c in lc.into_iter().chain(rc) {
                direct(sp, sb, p[c], p[x]);
            }
        }
        line_rec(sp, sb, &p[s..e], j);
    }
}

fn line_into(sb: &mut SpannerBuilder, pos: &[f64], ids: &[u32], k: u32) {
    let idx: Vec<u32> = (0..pos.len() as u32).collect();
    let mut sp = Splitter::new(pos, ids, None);
    line_rec(&mut sp, sb, &idx, k / 2 - 1);
}

/// Hop-k spanner of a line for even `k`, with in-degree `O(alpha_{k/2+1}(n))`.
pub fn build_line(l: &LineMetric, k: u32) -> Result<Spanner, ArbError> {
    if k % 2 == 1 {
        return Err(ArbError::OddK(k));
    }
    if k < 2 {
        return Err(ArbError::KTooSmall { k, min: 2 });
    }
    let ids: Vec<u32> = (0..l.n() as u32).collect();
    let mut sb = SpannerBuilder::new(l.n());
    line_into(&mut sb, &l.points, &ids, k);
    Ok(sb.finish("line", k))
}

// ---------------------------------------------------------------------------
// HSTs.

/// HST without unary internal nodes, nodes in preorder with `parent < child`.
#[derive(Debug, Clone)]
struct Ultra {
    parent: Vec<u32>,
    children: Vec<Vec<u32>>,
    /// Metric point of a leaf; `NO_PARENT` at internal nodes.
    point: Vec<u32>,
    size: Vec<u32>,
    leaves: Vec<u32>,
    rep: Vec<u32>,
}

impl Ultra {
    fn from_parts(parent: Vec<u32>, point: Vec<u32>) -> Self {
        let m = parent.len();
        let mut children = vec![Vec::new(); m];
        for v in 1..m {
            children[parent[v] as usize].push(v as u32);
        }
        let mut size = vec![1u32; m];
        let mut leaves = vec![0u32; m];
        let mut leftmost = vec![NO_PARENT; m];
        let mut rep = vec![NO_PARENT; m];
        for v in (0..m).rev() {
            if children[v].is_empty() {
                leaves[v] = 1;
                leftmost[v] = point[v];
                rep[v] = point[v];
            } else {
                let first = children[v][0] as usize;
                let last = *children[v].last().unwrap() as usize;
                leftmost[v] = leftmost[first];
                // The leftmost leaf of the last child: each leaf represents at most
                // one internal node when no internal node is unary.
                rep[v] = leftmost[last];
            }
            if v > 0 {
                let p = parent[v] as usize;
                size[p] += size[v];
                leaves[p] += leaves[v];
            }
        }
        Ultra {
            parent,
            children,
            point,
            size,
            leaves,
            rep,
        }
    }

    fn from_hst(h: &Hst) -> Self {
        let mut parent = Vec::new();
        let mut point = Vec::new();
        let mut stack = vec![(h.root(), NO_PARENT)];
        while let Some((mut v, par)) = stack.pop() {
            while h.point(v).is_none() && h.children(v).len() == 1 {
                v = h.children(v)[0];
            }
            let id = parent.len() as u32;
            parent.push(par);
            point.push(h.point(v).unwrap_or(NO_PARENT));
            for &c in h.children(v).iter().rev() {
                stack.push((c, id));
            }
        }
        Ultra::from_parts(parent, point)
    }

    fn len(&self) -> usize {
        self.parent.len()
    }
    fn is_leaf(&self, v: usize) -> bool {
        self.children[v].is_empty()
    }
    fn leaf_points(&self, v: usize) -> Vec<u32> {
        (v..v + self.size[v] as usize)
            .filter(|&u| self.is_leaf(u))
            .map(|u| self.point[u])
            .collect()
    }
    fn subtree(&self, v: usize) -> Ultra {
        let end = v + self.size[v] as usize;
        let parent = (v..end)
            .map(|u| {
                if u == v {
                    NO_PARENT
                } else {
                    self.parent[u] - v as u32
                }
            })
            .collect();
        Ultra::from_parts(parent, self.point[v..end].to_vec())
    }

    /// Maximal nodes with at most `ell` leaves.
    fn cuts(&self, ell: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&v| {
                self.leaves[v] as usize <= ell
                    && (v == 0 || self.leaves[self.parent[v] as usize] as usize > ell)
            })
            .collect()
    }

    /// The HST on heavy nodes with the cut nodes as leaves; a cut leaf stands for
    /// the representative point of its subtree.
    fn quotient(&self, ell: usize, cuts: &[usize]) -> Ultra {
        let mut map = vec![NO_PARENT; self.len()];
        let mut parent = Vec::new();
        let mut point = Vec::new();
        let mut is_cut = vec![false; self.len()];
        for &c in cuts {
            is_cut[c] = true;
        }
        for v in 0..self.len() {
            let heavy = self.leaves[v] as usize > ell;
            if !heavy && !is_cut[v] {
                continue;
            }
            map[v] = parent.len() as u32;
            parent.push(if v == 0 {
                NO_PARENT
            } else {
                map[self.parent[v] as usize]
            });
            point.push(if is_cut[v] { self.rep[v] } else { NO_PARENT });
        }
        Ultra::from_parts(parent, point)
    }

    fn as_subtree(&self) -> SubTree {
        SubTree {
            gid: (0..self.len() as u32).collect(),
            parent: self.parent.clone(),
            w: vec![1.0; self.len()],
        }
    }
}

fn ultra_clique(u: &Ultra, emit: &mut dyn FnMut(u32, u32)) {
    let pts = u.leaf_points(0);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            emit(pts[i], pts[j]);
        }
    }
}

/// Hop-2 structure: centroid recursion over the node tree. The hubs of a centroid
/// are the representatives of its children (or the centroid itself at a leaf) and
/// each hub points at every leaf of the current piece.
fn vertical_centroid(u: &Ultra, emit: &mut dyn FnMut(u32, u32)) {
    fn rec(u: &Ultra, st: &SubTree, emit: &mut dyn FnMut(u32, u32)) {
        let pts: Vec<u32> = st
            .gid
            .iter()
            .filter(|&&g| u.is_leaf(g as usize))
            .map(|&g| u.point[g as usize])
            .collect();
        if pts.len() <= 1 {
            return;
        }
        let sizes = st.sizes();
        let c = centroid_local(st, &sizes) as usize;
        let z = st.gid[c] as usize;
        let hubs: Vec<u32> = if u.is_leaf(z) {
            vec![u.point[z]]
        } else {
            u.children[z].iter().map(|&ch| u.rep[ch as usize]).collect()
        };
        for &h in &hubs {
            for &p in &pts {
                if p != h {
                    emit(h, p);
                }
            }
        }
        let (cs, cl) = st.children();
        for &k in &cl[cs[c] as usize..cs[c + 1] as usize] {
            let k = k as usize;
            let members: Vec<u32> = (k as u32..(k + sizes[k] as usize) as u32).collect();
            rec(u, &st.induce(&members), emit);
        }
        if c > 0 {
            let end = c + sizes[c] as usize;
            let members: Vec<u32> = (0..c as u32).chain(end as u32..st.len() as u32).collect();
            rec(u, &st.induce(&members), emit);
        }
    }
    rec(u, &u.as_subtree(), emit);
}

/// Sparse hop-j structure on an HST leaf metric: clique, vertical centroid, or the
/// cut recursion with representative stars.
fn sparse_hst(u: &Ultra, j: u32, emit: &mut dyn FnMut(u32, u32)) {
    let m = u.leaves[0] as usize;
    if m <= 1 {
        return;
    }
    if m <= 3 || j == 1 {
        ultra_clique(u, emit);
        return;
    }
    if j == 2 {
        vertical_centroid(u, emit);
        return;
    }
    let ell = alpha(j - 2, m);
    let cuts = u.cuts(ell);
    if cuts == [0] {
        ultra_clique(u, emit);
        return;
    }
    for &a in &cuts {
        for p in u.leaf_points(a) {
            if p != u.rep[a] {
                emit(u.rep[a], p);
            }
        }
    }
    sparse_hst(&u.quotient(ell, &cuts), j - 2, emit);
    for &a in &cuts {
        sparse_hst(&u.subtree(a), j, emit);
    }
}

fn hst_rec(u: &Ultra, k: u32, h: &Hst, sb: &mut SpannerBuilder) {
    let m = u.leaves[0] as usize;
    if m <= 1 {
        return;
    }
    let mut direct = |x: u32, y: u32| sb.add(x, y, h.dist(x, y));
    if m <= 3 {
        ultra_clique(u, &mut direct);
        return;
    }
    if k == 2 {
        vertical_centroid(u, &mut direct);
        return;
    }
    let j = k / 2 - 1;
    let ell = alpha(j, m);
    let cuts = u.cuts(ell);
    if cuts == [0] {
        ultra_clique(u, &mut direct);
        return;
    }
    let mut pool: HashMap<u32, (Vec<u32>, usize)> = HashMap::with_capacity(cuts.len());
    for &a in &cuts {
        let mut pts = u.leaf_points(a);
        for &p in &pts {
            if p != u.rep[a] {
                sb.add(u.rep[a], p, h.dist(u.rep[a], p));
            }
        }
        pts.sort_unstable();
        pool.insert(u.rep[a], (pts, 0));
    }
    // Interconnect the representatives with a hop-j structure whose edges are
    // subdivided at a leaf of the target's cut subtree.
    {
        let mut split = |x: u32, y: u32| {
            let (pts, ctr) = pool.get_mut(&y).expect("target is a cut representative");
            let host = pts[*ctr % pts.len()];
            *ctr += 1;
            if host == y {
                sb.add(x, y, h.dist(x, y));
            } else {
                sb.add(x, host, h.dist(x, host));
                sb.add(y, host, h.dist(y, host));
            }
        };
        sparse_hst(&u.quotient(ell, &cuts), j, &mut split);
    }
    for &a in &cuts {
        hst_rec(&u.subtree(a), k, h, sb);
    }
}

/// Multiplicative stretch guaranteed by [`build_hst`] for the given `k` and `eps`.
pub fn hst_stretch_bound(k: u32, eps: f64) -> f64 {
    fn sparse(j: u32) -> f64 {
        match j {
            0 | 1 => 0.0,
            2 => 1.0,
            _ => sparse(j - 2) + 2.0,
        }
    }
    if k <= 2 {
        return 1.0 + eps;
    }
    (1.0 + eps) * (1.0 + sparse(k / 2 - 1) * eps) + 2.0 * eps
}

/// Hop-k spanner (even `k`) of the leaf metric of a `(1/eps, Delta)`-HST with
/// stretch at most [`hst_stretch_bound`].
pub fn build_hst(h: &Hst, k: u32, eps: f64) -> Result<Spanner, ArbError> {
    if k % 2 == 1 {
        return Err(ArbError::OddK(k));
    }
    if k < 2 {
        return Err(ArbError::KTooSmall { k, min: 2 });
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ArbError::BadEpsilon(eps));
    }
    h.check(1.0 / eps, usize::MAX)
        .map_err(|e| ArbError::Hst(e.to_string()))?;
    let n = h.num_leaves();
    let mut sb = SpannerBuilder::new(n);
    hst_rec(&Ultra::from_hst(h), k, h, &mut sb);
    let mut s = sb.finish("hst", k);
    s.meta.params.insert("eps".into(), eps);
    s.meta
        .params
        .insert("stretch_bound".into(), hst_stretch_bound(k, eps));
    Ok(s)
}

// ---------------------------------------------------------------------------
// Trees.

/// Ancestor-to-descendant shortcuts with at most `kp` hops; every edge points
/// from the ancestor to the descendant.
fn bh_rec(sb: &mut SpannerBuilder, sub: &SubTree, kp: u32) {
    let m = sub.len();
    if m <= 1 {
        return;
    }
    let depth = sub.depths();
    let mut lv = vec![0u32; m];
    for i in 1..m {
        lv[i] = lv[sub.parent[i] as usize] + 1;
    }
    let h = *lv.iter().max().unwrap();
    let g = |i: usize| sub.gid[i];
    if kp == 1 || h <= 1 {
        for i in 1..m {
            let mut a = sub.parent[i];
            while a != NO_PARENT {
                sb.add(g(a as usize), g(i), depth[i] - depth[a as usize]);
                a = sub.parent[a as usize];
            }
        }
        return;
    }
    let groups = (kp - 1) / 3;
    let ell = ((h as f64).powf(1.0 / (groups as f64 + 1.0)).ceil() as u32).max(2);
    let is_cut: Vec<bool> = lv.iter().map(|&l| l > 0 && l % ell == 0).collect();
    let mut is_s = vec![false; m];
    for i in 1..m {
        if is_cut[i] {
            is_s[sub.parent[i] as usize] = true;
        }
    }
    // Nearest proper cut ancestor.
    let mut nca = vec![NO_PARENT; m];
    for i in 1..m {
        let p = sub.parent[i] as usize;
        nca[i] = if is_cut[p] { p as u32 } else { nca[p] };
    }
    for i in 1..m {
        if is_cut[i] {
            let p = sub.parent[i] as usize;
            sb.add(g(p), g(i), depth[i] - depth[p]);
        } else if nca[i] != NO_PARENT {
            let c = nca[i] as usize;
            sb.add(g(c), g(i), depth[i] - depth[c]);
        }
        if is_s[i] {
            let mut a = sub.parent[i];
            for _ in 0..ell - 1 {
                if a == NO_PARENT {
                    break;
                }
                sb.add(g(a as usize), g(i), depth[i] - depth[a as usize]);
                a = sub.parent[a as usize];
            }
        }
    }
    // Trees of cut vertices linked to their nearest cut ancestor.
    let mut root_of = vec![NO_PARENT; m];
    let mut groups_of: Vec<Vec<u32>> = Vec::new();
    let mut slot = vec![NO_PARENT; m];
    for i in 0..m {
        if !is_cut[i] {
            continue;
        }
        let r = if nca[i] == NO_PARENT {
            slot[i] = groups_of.len() as u32;
            groups_of.push(Vec::new());
            i as u32
        } else {
            root_of[nca[i] as usize]
        };
        root_of[i] = r;
        groups_of[slot[r as usize] as usize].push(i as u32);
    }
    let mut local = vec![NO_PARENT; m];
    for members in &groups_of {
        for (t, &c) in members.iter().enumerate() {
            local[c as usize] = t as u32;
        }
        let ct = SubTree {
            gid: members.iter().map(|&c| g(c as usize)).collect(),
            parent: members
                .iter()
                .map(|&c| {
                    if nca[c as usize] == NO_PARENT {
                        NO_PARENT
                    } else {
                        local[nca[c as usize] as usize]
                    }
                })
                .collect(),
            w: members
                .iter()
                .map(|&c| {
                    if nca[c as usize] == NO_PARENT {
                        0.0
                    } else {
                        depth[c as usize] - depth[nca[c as usize] as usize]
                    }
                })
                .collect(),
        };
        bh_rec(sb, &ct, kp - 3);
    }
    // Pieces left after removing cut vertices and their parents.
    let mut comp = vec![NO_PARENT; m];
    let mut pieces: Vec<Vec<u32>> = Vec::new();
    for i in 0..m {
        if is_cut[i] || is_s[i] {
            continue;
        }
        let p = sub.parent[i];
        if p != NO_PARENT && comp[p as usize] != NO_PARENT {
            comp[i] = comp[p as usize];
        } else {
            comp[i] = pieces.len() as u32;
            pieces.push(Vec::new());
        }
        pieces[comp[i] as usize].push(i as u32);
    }
    for piece in &pieces {
        bh_rec(sb, &sub.induce(piece), kp);
    }
}

/// Largest value `<= kp` of the form `1 + 3g`.
fn round_kprime(kp: u32) -> u32 {
    1 + 3 * ((kp.max(1) - 1) / 3)
}

/// Ancestor-descendant pairs joined within `kp` hops (any pair within `2 kp` via the LCA).
pub fn build_tree_bounded_height(t: &RootedTree, kp: u32) -> Result<Spanner, ArbError> {
    if kp == 0 || kp % 3 != 1 {
        return Err(ArbError::BadKPrime(kp));
    }
    let mut sb = SpannerBuilder::new(t.n());
    if t.n() > 0 {
        bh_rec(&mut sb, &SubTree::from_tree(t), kp);
    }
    let mut s = sb.finish("tree-bounded-height", 2 * kp);
    s.meta.params.insert("kprime".into(), kp as f64);
    Ok(s)
}

/// Hop-k spanner of an arbitrary tree through heavy-path contraction, `k >= 8`.
///
/// `k` is rounded down to the form `4k' + 4`, and `k'` further down to `1 mod 3`
/// for the shallow-tree step; the realized bound is stored as `effective_k`.
pub fn build_tree_general(t: &RootedTree, k: u32) -> Result<Spanner, ArbError> {
    if k < 8 {
        return Err(ArbError::KTooSmall { k, min: 8 });
    }
    let kp = (k - 4) / 4;
    let kp_eff = round_kprime(kp);
    let effective = 4 * kp_eff + 4;
    let mut sb = SpannerBuilder::new(t.n());
    if t.n() > 0 {
        let hl = heavy_light(t);
        let mut csb = SpannerBuilder::new(hl.paths.len());
        bh_rec(&mut csb, &SubTree::from_tree(&hl.contracted), kp_eff);
        let cs = csb.finish("contracted", kp_eff);
        for i in 0..cs.num_edges() {
            let (pa, pd) = cs.oriented(i);
            let head = hl.paths[pd as usize][0];
            let mut x = t.parent(head).expect("a non-root heavy path has a parent");
            while hl.path_of[x as usize] != pa {
                x = t
                    .parent(hl.paths[hl.path_of[x as usize] as usize][0])
                    .expect("ancestor path lies above");
            }
            sb.add(x, head, t.depth(head) - t.depth(x));
        }
        for path in &hl.paths {
            let pos: Vec<f64> = path.iter().map(|&v| t.depth(v)).collect();
            line_into(&mut sb, &pos, path, 4);
            for &v in &path[1..] {
                sb.add(path[0], v, t.depth(v) - t.depth(path[0]));
            }
        }
    }
    let mut s = sb.finish("tree-general", k);
    s.meta.effective_k = effective;
    s.meta.params.insert("kprime".into(), kp_eff as f64);
    if effective != k {
        s.meta.notes.push(format!(
            "requested k = {k} realized with hop bound {effective} (k' = {kp_eff})"
        ));
    }
    Ok(s)
}
