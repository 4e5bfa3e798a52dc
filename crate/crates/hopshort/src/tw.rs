//! Shortcuttings with bounded treewidth: hop-2 (centroid recursion), hop-3 (tree
//! partition with a frozen parameter) and hop-k for k >= 4 (partition plus an
//! auxiliary tree on the cut set, recursing with k - 2).
//!
//! Every builder emits a spanner together with a tree decomposition whose width is
//! the treewidth witness. Decompositions are assembled bottom-up: each recursive
//! call pushes a contiguous range of bags, and the portals of a component are
//! appended to every bag in that range.

use crate::decompose::{
    aux_tree, centroid_local, for_each_portal_edge, tree_partition_local, LocalComponent, SubTree,
};
use crate::model::{RootedTree, Spanner, SpannerBuilder, TreeDecomposition, NO_PARENT};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TwError {
    #[error("hop bound k = {0} is not supported here (need k >= 4)")]
    BadK(u32),
}

/// Inputs below this size skip the partition step: the log log n guard.
pub const MIN_RECURSE: usize = 16;

/// Rounded hop-3 parameter `max(2, ceil(log n / log log n))`.
pub fn ell3(n: usize) -> usize {
    if n < MIN_RECURSE {
        return n.max(2);
    }
    let l = (n as f64).log2();
    ((l / l.log2()).ceil() as usize).max(2)
}

/// Rounded hop-k parameter: `log ell = (k/(k-2))^((k-2)/2) * L^((k-2)/k)` with
/// `L = log n` for even k and `L = log n / log log n` for odd k.
pub fn ellk(n: usize, k: u32) -> usize {
    if n < MIN_RECURSE {
        return n.max(2);
    }
    let l = (n as f64).log2();
    let base = if k.is_multiple_of(2) { l } else { l / l.log2() };
    let kf = k as f64;
    let log_ell = (kf / (kf - 2.0)).powf((kf - 2.0) / 2.0) * base.powf((kf - 2.0) / kf);
    if log_ell >= 62.0 {
        return usize::MAX / 4;
    }
    (log_ell.exp2().ceil() as usize).max(2)
}

/// One recursive call of the hop-3 construction, kept for the routing scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct Hop3Call {
    pub parent: u32,
    pub depth: u32,
    /// The cut set X of the call, or all vertices of a base case.
    pub clique: Vec<u32>,
    pub is_base: bool,
}

/// A vertex's component in some call, with its portal pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortalEntry {
    pub call: u32,
    pub upper: u32,
    pub lower: u32,
}

/// Recursion trace of a hop-3 build; call ids are assigned in preorder.
#[derive(Debug, Clone, Default)]
pub struct Hop3Record {
    pub calls: Vec<Hop3Call>,
    pub clique_of: Vec<u32>,
    /// Entries ordered from the outermost call inward.
    pub portal_entries: Vec<Vec<PortalEntry>>,
}

struct Ctx {
    sb: Option<SpannerBuilder>,
    td: TreeDecomposition,
    record: Option<Hop3Record>,
}

impl Ctx {
    fn new(n: usize, emit: bool, record: bool) -> Self {
        Ctx {
            sb: emit.then(|| SpannerBuilder::new(n)),
            td: TreeDecomposition::default(),
            record: record.then(|| Hop3Record {
                calls: Vec::new(),
                clique_of: vec![NO_PARENT; n],
                portal_entries: vec![Vec::new(); n],
            }),
        }
    }
    #[inline]
    fn edge(&mut self, from: u32, to: u32, w: f64) {
        if let Some(sb) = self.sb.as_mut() {
            sb.add(from, to, w);
        }
    }
    fn emitting(&self) -> bool {
        self.sb.is_some()
    }
    fn add_to_bags(&mut self, start: usize, extra: &[u32]) {
        for b in &mut self.td.bags[start..] {
            for &x in extra {
                if !b.contains(&x) {
                    b.push(x);
                }
            }
        }
    }
}

fn clique_local(ctx: &mut Ctx, sub: &SubTree) {
    if !ctx.emitting() {
        return;
    }
    for i in 0..sub.len() as u32 {
        let d = sub.dists_from(i);
        for j in i + 1..sub.len() as u32 {
            ctx.edge(sub.gid[i as usize], sub.gid[j as usize], d[j as usize]);
        }
    }
}

fn hop2_rec(ctx: &mut Ctx, sub: &SubTree) -> u32 {
    let m = sub.len();
    let sizes = sub.sizes();
    let c = centroid_local(sub, &sizes) as usize;
    let gc = sub.gid[c];
    if ctx.emitting() {
        let d = sub.dists_from(c as u32);
        for i in 0..m {
            ctx.edge(gc, sub.gid[i], d[i]);
        }
    }
    let root = ctx.td.push(vec![gc], NO_PARENT);
    let start = ctx.td.len();
    let (cs, cl) = sub.children();
    let end_c = c + sizes[c] as usize;
    for &k in &cl[cs[c] as usize..cs[c + 1] as usize] {
        let k = k as usize;
        let members: Vec<u32> = (k as u32..(k + sizes[k] as usize) as u32).collect();
        let r = hop2_rec(ctx, &sub.induce(&members));
        ctx.td.parent[r as usize] = root;
    }
    if c > 0 {
        let members: Vec<u32> = (0..c as u32).chain(end_c as u32..m as u32).collect();
        let r = hop2_rec(ctx, &sub.induce(&members));
        ctx.td.parent[r as usize] = root;
    }
    ctx.add_to_bags(start, &[gc]);
    root
}

fn portal_edges(
    ctx: &mut Ctx,
    sub: &SubTree,
    depths: &[f64],
    comp: &LocalComponent,
    csub: &SubTree,
) {
    if let Some(sb) = ctx.sb.as_mut() {
        for_each_portal_edge(sub, depths, comp, csub, |p, w, d| sb.add(p, w, d));
    }
}

fn hop3_rec(ctx: &mut Ctx, sub: &SubTree, ell: usize, parent_call: u32, depth: u32) -> u32 {
    let m = sub.len();
    let call = ctx.record.as_ref().map_or(0, |r| r.calls.len() as u32);
    if m <= ell {
        clique_local(ctx, sub);
        if let Some(rec) = ctx.record.as_mut() {
            rec.calls.push(Hop3Call {
                parent: parent_call,
                depth,
                clique: sub.gid.clone(),
                is_base: true,
            });
            for &g in &sub.gid {
                rec.clique_of[g as usize] = call;
            }
        }
        return ctx.td.push(sub.gid.clone(), NO_PARENT);
    }
    let part = tree_partition_local(sub, m.div_ceil(ell));
    let xg: Vec<u32> = part.x.iter().map(|&x| sub.gid[x as usize]).collect();
    if let Some(rec) = ctx.record.as_mut() {
        rec.calls.push(Hop3Call {
            parent: parent_call,
            depth,
            clique: xg.clone(),
            is_base: false,
        });
        for &g in &xg {
            rec.clique_of[g as usize] = call;
        }
    }
    if ctx.emitting() {
        for (a, &x) in part.x.iter().enumerate() {
            let d = sub.dists_from(x);
            for &y in &part.x[a + 1..] {
                ctx.edge(sub.gid[x as usize], sub.gid[y as usize], d[y as usize]);
            }
        }
    }
    let depths = sub.depths();
    let root = ctx.td.push(xg, NO_PARENT);
    for comp in &part.components {
        let csub = sub.induce(&comp.members);
        let (pu, pl) = comp
            .portal_pair()
            .expect("a nonempty cut set touches every component");
        let (gu, gl) = (sub.gid[pu as usize], sub.gid[pl as usize]);
        if let Some(rec) = ctx.record.as_mut() {
            for &g in &csub.gid {
                rec.portal_entries[g as usize].push(PortalEntry {
                    call,
                    upper: gu,
                    lower: gl,
                });
            }
        }
        portal_edges(ctx, sub, &depths, comp, &csub);
        let start = ctx.td.len();
        let r = hop3_rec(ctx, &csub, ell, call, depth + 1);
        ctx.td.parent[r as usize] = root;
        ctx.add_to_bags(start, &[gu, gl]);
    }
    root
}

fn build_inner(ctx: &mut Ctx, sub: &SubTree, k: u32) -> u32 {
    match k {
        2 => hop2_rec(ctx, sub),
        3 => hop3_rec(ctx, sub, ell3(sub.len()), NO_PARENT, 0),
        _ => hopk_rec(ctx, sub, k, ellk(sub.len(), k)),
    }
}

fn hopk_rec(ctx: &mut Ctx, sub: &SubTree, k: u32, ell: usize) -> u32 {
    let m = sub.len();
    if m <= ell || m < MIN_RECURSE {
        return build_inner(ctx, sub, k - 2);
    }
    let part = tree_partition_local(sub, m.div_ceil(ell));
    let tx = aux_tree(sub, &part.in_x, &part.x);
    let sx = ctx.td.len();
    let root = build_inner(ctx, &tx, k - 2);
    let ex = ctx.td.len();
    // For every X-vertex, a bag of the auxiliary decomposition holding it together
    // with its auxiliary parent (or just itself at the auxiliary root).
    let mut pos = vec![NO_PARENT; sub.len()];
    for (i, &x) in part.x.iter().enumerate() {
        pos[x as usize] = i as u32;
    }
    let mut bag_with_parent = vec![NO_PARENT; tx.len()];
    let mut gpos = std::collections::HashMap::with_capacity(tx.len());
    for (i, &g) in tx.gid.iter().enumerate() {
        gpos.insert(g, i as u32);
    }
    for b in sx..ex {
        for &g in &ctx.td.bags[b] {
            let Some(&i) = gpos.get(&g) else { continue };
            if bag_with_parent[i as usize] != NO_PARENT {
                continue;
            }
            let p = tx.parent[i as usize];
            if p == NO_PARENT || ctx.td.bags[b].contains(&tx.gid[p as usize]) {
                bag_with_parent[i as usize] = b as u32;
            }
        }
    }
    let depths = sub.depths();
    for comp in &part.components {
        let csub = sub.induce(&comp.members);
        let (pu, pl) = comp
            .portal_pair()
            .expect("a nonempty cut set touches every component");
        let (gu, gl) = (sub.gid[pu as usize], sub.gid[pl as usize]);
        portal_edges(ctx, sub, &depths, comp, &csub);
        let attach = bag_with_parent[pos[pl as usize] as usize];
        assert!(
            attach != NO_PARENT,
            "auxiliary decomposition covers the portal edge"
        );
        let start = ctx.td.len();
        let r = hopk_rec(ctx, &csub, k, ell);
        ctx.td.parent[r as usize] = attach;
        ctx.add_to_bags(start, &[gu, gl]);
    }
    root
}

fn run(t: &RootedTree, k: u32, emit: bool, record: bool) -> Ctx {
    let mut ctx = Ctx::new(t.n(), emit, record);
    if t.n() > 0 {
        build_inner(&mut ctx, &SubTree::from_tree(t), k);
    }
    ctx
}

fn finish(ctx: Ctx, name: &str, k: u32, n: usize) -> (Spanner, TreeDecomposition) {
    let mut s = ctx.sb.expect("edges were emitted").finish(name, k);
    match k {
        2 => {}
        3 => {
            s.meta.params.insert("ell".into(), ell3(n) as f64);
        }
        _ => {
            s.meta.params.insert("ell".into(), ellk(n, k) as f64);
        }
    }
    (s, ctx.td)
}

/// Hop-2 shortcutting: connect a centroid to everything and recurse on the pieces.
pub fn build_hop2(t: &RootedTree) -> (Spanner, TreeDecomposition) {
    finish(run(t, 2, true, false), "tw2", 2, t.n())
}

/// Hop-3 shortcutting with a clique on each cut set.
pub fn build_hop3(t: &RootedTree) -> (Spanner, TreeDecomposition) {
    finish(run(t, 3, true, false), "tw3", 3, t.n())
}

/// Hop-3 shortcutting plus the recursion trace used by the routing scheme.
pub fn build_hop3_with_record(t: &RootedTree) -> (Spanner, TreeDecomposition, Hop3Record) {
    let mut ctx = run(t, 3, true, true);
    let rec = ctx.record.take().expect("record requested");
    let (s, td) = finish(ctx, "tw3", 3, t.n());
    (s, td, rec)
}

/// Hop-k shortcutting for `k >= 4`.
pub fn build_hopk(t: &RootedTree, k: u32) -> Result<(Spanner, TreeDecomposition), TwError> {
    if k < 4 {
        return Err(TwError::BadK(k));
    }
    Ok(finish(run(t, k, true, false), "twk", k, t.n()))
}

/// The decomposition a build with hop bound `k >= 2` would emit, without materializing edges.
pub fn decomposition_only(t: &RootedTree, k: u32) -> TreeDecomposition {
    assert!(k >= 2, "hop bound must be at least 2");
    run(t, k, false, false).td
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Metric;

    fn all_pairs_ok(t: &RootedTree, s: &Spanner, k: usize) -> bool {
        // Hop-bounded Bellman-Ford from every source.
        let adj = s.adjacency();
        for src in 0..t.n() as u32 {
            let exact = t.dists_from(src);
            let mut d = vec![f64::INFINITY; t.n()];
            d[src as usize] = 0.0;
            for _ in 0..k {
                let mut nd = d.clone();
                for v in 0..t.n() as u32 {
                    if d[v as usize].is_finite() {
                        for (u, w) in adj.neighbors(v) {
                            nd[u as usize] = nd[u as usize].min(d[v as usize] + w);
                        }
                    }
                }
                d = nd;
            }
            if d.iter().zip(&exact).any(|(a, b)| (a - b).abs() > 1e-9) {
                return false;
            }
        }
        true
    }

    #[test]
    fn hop2_small_paths() {
        let (s, td) = build_hop2(&RootedTree::path(3));
        let pairs: Vec<(u32, u32)> = s.edges.iter().map(|e| (e.u, e.v)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
        assert!(td.width() <= 1);
        assert_eq!(build_hop2(&RootedTree::path(7)).0.num_edges(), 10);
        let (s1, td1) = build_hop2(&RootedTree::path(1));
        assert_eq!(s1.num_edges(), 0);
        assert_eq!(td1.width(), 0);
    }

    #[test]
    fn parameters_grow_slowly() {
        assert_eq!(ell3(8), 8);
        assert_eq!(ell3(1 << 16), 4);
        assert_eq!(ellk(1 << 16, 4), 256);
        assert!(ellk(1 << 20, 5) > ell3(1 << 20));
    }

    #[test]
    fn hop3_base_case_is_clique() {
        let (s, td) = build_hop3(&RootedTree::path(6));
        assert_eq!(s.num_edges(), 15);
        assert_eq!(td.width(), 5);
    }

    #[test]
    fn small_builds_are_exact() {
        for seed in 0..6 {
            let t = RootedTree::random(120, 4, seed);
            assert!(all_pairs_ok(&t, &build_hop2(&t).0, 2));
            assert!(all_pairs_ok(&t, &build_hop3(&t).0, 3));
            for k in 4..=7 {
                assert!(
                    all_pairs_ok(&t, &build_hopk(&t, k).unwrap().0, k as usize),
                    "k={k}"
                );
            }
        }
    }

    #[test]
    fn hopk_rejects_small_k() {
        assert_eq!(
            build_hopk(&RootedTree::path(4), 3).unwrap_err(),
            TwError::BadK(3)
        );
    }

    #[test]
    fn record_covers_every_vertex_once() {
        let t = RootedTree::random(3000, 2, 1);
        let (_, _, rec) = build_hop3_with_record(&t);
        assert!(rec.clique_of.iter().all(|&c| c != NO_PARENT));
        let total: usize = rec.calls.iter().map(|c| c.clique.len()).sum();
        assert_eq!(total, t.n());
        for (v, es) in rec.portal_entries.iter().enumerate() {
            assert!(es.windows(2).all(|w| w[0].call < w[1].call));
            assert!(es.iter().all(|e| t.is_ancestor_unchecked(e.upper, e.lower)
                || t.is_ancestor_unchecked(e.lower, e.upper)));
            assert!(es.last().is_none_or(|e| e.call < rec.clique_of[v]));
        }
    }

    #[test]
    fn witness_only_matches_full_build() {
        let t = RootedTree::random(700, 1, 9);
        assert_eq!(decomposition_only(&t, 2), build_hop2(&t).1);
        assert_eq!(decomposition_only(&t, 3), build_hop3(&t).1);
        assert_eq!(decomposition_only(&t, 4), build_hopk(&t, 4).unwrap().1);
    }
}
