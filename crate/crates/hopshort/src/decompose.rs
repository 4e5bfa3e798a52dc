//! Centroids, tree partitions around a cut set, and heavy-light decomposition.
//!
//! Constructions recurse on pieces of the input tree, so most routines work on
//! [`SubTree`], a compact rooted tree whose vertices carry their global ids and
//! whose local parent index is always smaller than the child index.

use crate::model::{RootedTree, NO_PARENT};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DecomposeError {
    #[error("vertex subset is empty")]
    Empty,
    #[error("vertex subset is not connected")]
    Disconnected,
    #[error("vertex {0} out of range")]
    InvalidVertex(u32),
    #[error("partition parameter must be at least 1")]
    BadParameter,
}

/// Rooted tree over local indices `0..len()`, root 0, `parent[i] < i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubTree {
    pub gid: Vec<u32>,
    pub parent: Vec<u32>,
    /// Length of the edge to the parent (0 at the root).
    pub w: Vec<f64>,
}

impl SubTree {
    pub fn from_tree(t: &RootedTree) -> Self {
        let n = t.n();
        let mut local = vec![0u32; n];
        for (i, &v) in t.preorder().iter().enumerate() {
            local[v as usize] = i as u32;
        }
        let mut gid = Vec::with_capacity(n);
        let mut parent = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for &v in t.preorder() {
            gid.push(v);
            parent.push(t.parent(v).map_or(NO_PARENT, |p| local[p as usize]));
            w.push(t.weight(v));
        }
        SubTree { gid, parent, w }
    }

    pub fn len(&self) -> usize {
        self.gid.len()
    }
    pub fn is_empty(&self) -> bool {
        self.gid.is_empty()
    }

    /// Subtree sizes by a reverse sweep.
    pub fn sizes(&self) -> Vec<u32> {
        let mut s = vec![1u32; self.len()];
        for i in (1..self.len()).rev() {
            s[self.parent[i] as usize] += s[i];
        }
        s
    }

    /// Children lists in CSR form `(start, list)`.
    pub fn children(&self) -> (Vec<u32>, Vec<u32>) {
        let n = self.len();
        let mut start = vec![0u32; n + 1];
        for i in 1..n {
            start[self.parent[i] as usize + 1] += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut list = vec![0u32; n.saturating_sub(1)];
        for i in 1..n {
            let p = self.parent[i] as usize;
            list[fill[p] as usize] = i as u32;
            fill[p] += 1;
        }
        (start, list)
    }

    /// Distances from local vertex `s` to all local vertices in `O(len)`.
    pub fn dists_from(&self, s: u32) -> Vec<f64> {
        let n = self.len();
        let mut d = vec![f64::NAN; n];
        d[s as usize] = 0.0;
        let mut v = s as usize;
        let mut acc = 0.0;
        while self.parent[v] != NO_PARENT {
            acc += self.w[v];
            v = self.parent[v] as usize;
            d[v] = acc;
        }
        for i in 1..n {
            if d[i].is_nan() {
                d[i] = d[self.parent[i] as usize] + self.w[i];
            }
        }
        d
    }

    /// Weighted depth of every local vertex.
    pub fn depths(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.len()];
        for i in 1..self.len() {
            d[i] = d[self.parent[i] as usize] + self.w[i];
        }
        d
    }

    /// Induced subtree on a connected set of local indices given in increasing order.
    pub fn induce(&self, members: &[u32]) -> SubTree {
        debug_assert!(members.windows(2).all(|p| p[0] < p[1]));
        let mut map = std::collections::HashMap::with_capacity(members.len());
        for (i, &m) in members.iter().enumerate() {
            map.insert(m, i as u32);
        }
        let mut out = SubTree {
            gid: Vec::with_capacity(members.len()),
            parent: Vec::with_capacity(members.len()),
            w: Vec::with_capacity(members.len()),
        };
        for (i, &m) in members.iter().enumerate() {
            out.gid.push(self.gid[m as usize]);
            let p = self.parent[m as usize];
            let lp = if p == NO_PARENT {
                None
            } else {
                map.get(&p).copied()
            };
            match lp {
                Some(lp) => {
                    out.parent.push(lp);
                    out.w.push(self.w[m as usize]);
                }
                None => {
                    debug_assert_eq!(i, 0, "induced set must be connected");
                    out.parent.push(NO_PARENT);
                    out.w.push(0.0);
                }
            }
        }
        out
    }

    /// Height in edges.
    pub fn height(&self) -> u32 {
        let mut lvl = vec![0u32; self.len()];
        let mut h = 0;
        for i in 1..self.len() {
            lvl[i] = lvl[self.parent[i] as usize] + 1;
            h = h.max(lvl[i]);
        }
        h
    }
}

/// Centroid of a local tree: the vertex (smallest global id among the at most two
/// candidates) whose removal leaves components of size at most `len/2`.
pub fn centroid_local(t: &SubTree, sizes: &[u32]) -> u32 {
    let m = t.len() as u32;
    let (start, list) = t.children();
    let mut c = 0u32;
    loop {
        let kids = &list[start[c as usize] as usize..start[c as usize + 1] as usize];
        let mut heavy = None;
        for &k in kids {
            if 2 * sizes[k as usize] > m {
                heavy = Some(k);
            }
        }
        match heavy {
            Some(h) => c = h,
            None => break,
        }
    }
    let kids = &list[start[c as usize] as usize..start[c as usize + 1] as usize];
    let mut best = c;
    for &k in kids {
        if 2 * sizes[k as usize] == m && t.gid[k as usize] < t.gid[best as usize] {
            best = k;
        }
    }
    best
}

/// Centroid of a connected vertex subset of `t`.
pub fn centroid(t: &RootedTree, subset: &[u32]) -> Result<u32, DecomposeError> {
    if subset.is_empty() {
        return Err(DecomposeError::Empty);
    }
    let mut inset = vec![false; t.n()];
    for &v in subset {
        if v as usize >= t.n() {
            return Err(DecomposeError::InvalidVertex(v));
        }
        inset[v as usize] = true;
    }
    let full = SubTree::from_tree(t);
    let mut members: Vec<u32> = (0..full.len() as u32)
        .filter(|&i| inset[full.gid[i as usize] as usize])
        .collect();
    members.dedup();
    let tops = members
        .iter()
        .filter(|&&i| {
            let p = full.parent[i as usize];
            p == NO_PARENT || !inset[full.gid[p as usize] as usize]
        })
        .count();
    if tops != 1 {
        return Err(DecomposeError::Disconnected);
    }
    let sub = full.induce(&members);
    let sizes = sub.sizes();
    Ok(sub.gid[centroid_local(&sub, &sizes) as usize])
}

/// One component of `T \ X` in local indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalComponent {
    /// Members in increasing local order; the first is the top.
    pub members: Vec<u32>,
    /// X-parent of the top, if any.
    pub upper: Option<u32>,
    /// The unique X-vertex hanging below the component, if any.
    pub lower: Option<u32>,
}

impl LocalComponent {
    /// Portal pair with a single portal repeated; `None` when the component touches no X-vertex.
    pub fn portal_pair(&self) -> Option<(u32, u32)> {
        match (self.upper, self.lower) {
            (Some(u), Some(l)) => Some((u, l)),
            (Some(u), None) => Some((u, u)),
            (None, Some(l)) => Some((l, l)),
            (None, None) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalPartition {
    pub in_x: Vec<bool>,
    /// X in increasing local order (parents before children).
    pub x: Vec<u32>,
    pub components: Vec<LocalComponent>,
}

/// Tree partition with parameter `ell` on a local tree.
///
/// Bottom-up sweep: a vertex joins X when at least two X-contacts meet below it or when
/// its pending piece would exceed `ell` vertices.
pub fn tree_partition_local(t: &SubTree, ell: usize) -> LocalPartition {
    let n = t.len();
    let ell = ell.max(1) as u32;
    let mut in_x = vec![false; n];
    let mut pend = vec![0u32; n];
    let mut contacts = vec![0u32; n];
    // Accumulated from children: pending vertices and X-contacts.
    let mut acc_pend = vec![0u32; n];
    let mut acc_contacts = vec![0u32; n];
    for i in (0..n).rev() {
        let s = 1 + acc_pend[i];
        let b = acc_contacts[i];
        if b >= 2 || s > ell {
            in_x[i] = true;
        } else {
            pend[i] = s;
            contacts[i] = b;
        }
        let p = t.parent[i];
        if p != NO_PARENT {
            let p = p as usize;
            if in_x[i] {
                acc_contacts[p] += 1;
            } else {
                acc_pend[p] += pend[i];
                acc_contacts[p] += contacts[i];
            }
        }
    }
    let mut comp_of = vec![u32::MAX; n];
    let mut components: Vec<LocalComponent> = Vec::new();
    let mut x = Vec::new();
    for i in 0..n {
        if in_x[i] {
            x.push(i as u32);
            let p = t.parent[i];
            if p != NO_PARENT && !in_x[p as usize] {
                let c = comp_of[p as usize] as usize;
                debug_assert!(components[c].lower.is_none());
                components[c].lower = Some(i as u32);
            }
            continue;
        }
        let p = t.parent[i];
        if p != NO_PARENT && !in_x[p as usize] {
            let c = comp_of[p as usize];
            comp_of[i] = c;
            components[c as usize].members.push(i as u32);
        } else {
            comp_of[i] = components.len() as u32;
            components.push(LocalComponent {
                members: vec![i as u32],
                upper: (p != NO_PARENT).then_some(p),
                lower: None,
            });
        }
    }
    LocalPartition {
        in_x,
        x,
        components,
    }
}

/// Calls `f(portal, member, distance)` for every member of a component and each of
/// its portals, all in global ids. The upper portal's distances are depth differences;
/// the lower portal's come from a sweep inside the component.
pub fn for_each_portal_edge(
    sub: &SubTree,
    depths: &[f64],
    comp: &LocalComponent,
    csub: &SubTree,
    mut f: impl FnMut(u32, u32, f64),
) {
    if let Some(u) = comp.upper {
        let gu = sub.gid[u as usize];
        for &w in &comp.members {
            f(
                gu,
                sub.gid[w as usize],
                depths[w as usize] - depths[u as usize],
            );
        }
    }
    if let Some(y) = comp.lower {
        let z = sub.parent[y as usize];
        let zl = comp
            .members
            .binary_search(&z)
            .expect("lower portal hangs off its component") as u32;
        let d = csub.dists_from(zl);
        let gy = sub.gid[y as usize];
        for (i, &w) in comp.members.iter().enumerate() {
            f(gy, sub.gid[w as usize], sub.w[y as usize] + d[i]);
        }
    }
}

/// The auxiliary tree on the cut set: each X-vertex hangs below its nearest
/// X-ancestor with the exact tree distance as edge length.
pub fn aux_tree(sub: &SubTree, in_x: &[bool], x: &[u32]) -> SubTree {
    let depths = sub.depths();
    let mut nxa = vec![NO_PARENT; sub.len()];
    let mut local = vec![NO_PARENT; sub.len()];
    for (i, &v) in x.iter().enumerate() {
        local[v as usize] = i as u32;
    }
    let mut out = SubTree {
        gid: Vec::with_capacity(x.len()),
        parent: Vec::with_capacity(x.len()),
        w: Vec::with_capacity(x.len()),
    };
    for i in 0..sub.len() {
        let p = sub.parent[i];
        if p != NO_PARENT {
            nxa[i] = if in_x[p as usize] { p } else { nxa[p as usize] };
        }
        if in_x[i] {
            out.gid.push(sub.gid[i]);
            match nxa[i] {
                NO_PARENT => {
                    assert!(
                        out.parent.is_empty(),
                        "cut set must be closed under lowest common ancestors"
                    );
                    out.parent.push(NO_PARENT);
                    out.w.push(0.0);
                }
                a => {
                    out.parent.push(local[a as usize]);
                    out.w.push(depths[i] - depths[a as usize]);
                }
            }
        }
    }
    out
}

/// Serializable partition over global ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub ell: usize,
    pub x: Vec<u32>,
    pub components: Vec<Vec<u32>>,
    /// `(upper, lower)` per component.
    pub portals: Vec<(Option<u32>, Option<u32>)>,
}

/// Tree partition of a whole tree.
pub fn tree_partition(t: &RootedTree, ell: usize) -> Result<PartitionResult, DecomposeError> {
    if ell == 0 {
        return Err(DecomposeError::BadParameter);
    }
    let st = SubTree::from_tree(t);
    let lp = tree_partition_local(&st, ell);
    let g = |i: u32| st.gid[i as usize];
    let mut x: Vec<u32> = lp.x.iter().map(|&i| g(i)).collect();
    x.sort_unstable();
    Ok(PartitionResult {
        ell,
        x,
        components: lp
            .components
            .iter()
            .map(|c| {
                let mut m: Vec<u32> = c.members.iter().map(|&i| g(i)).collect();
                m.sort_unstable();
                m
            })
            .collect(),
        portals: lp
            .components
            .iter()
            .map(|c| (c.upper.map(g), c.lower.map(g)))
            .collect(),
    })
}

/// Independent validator: recomputes the components of `T \ X` by graph search and
/// checks sizes, portal counts, ancestry of portal pairs, the |X| bound and the
/// reported portals.
pub fn check_partition(t: &RootedTree, p: &PartitionResult) -> Result<(), String> {
    let n = t.n();
    let mut in_x = vec![false; n];
    for &v in &p.x {
        in_x[v as usize] = true;
    }
    if !p.x.is_empty() {
        let bound = 2.0 * n as f64 / (p.ell as f64 + 1.0) - 1.0;
        if p.x.len() as f64 > bound + 1e-9 {
            return Err(format!("|X| = {} exceeds {bound}", p.x.len()));
        }
    }
    let mut adj = vec![Vec::new(); n];
    for v in 0..n as u32 {
        if let Some(q) = t.parent(v) {
            adj[v as usize].push(q);
            adj[q as usize].push(v);
        }
    }
    let mut seen = vec![false; n];
    let mut found: Vec<(Vec<u32>, Vec<u32>)> = Vec::new();
    for s in 0..n {
        if in_x[s] || seen[s] {
            continue;
        }
        let mut comp = vec![s as u32];
        let mut xs = Vec::new();
        seen[s] = true;
        let mut i = 0;
        while i < comp.len() {
            let v = comp[i];
            i += 1;
            for &u in &adj[v as usize] {
                if in_x[u as usize] {
                    xs.push(u);
                } else if !seen[u as usize] {
                    seen[u as usize] = true;
                    comp.push(u);
                }
            }
        }
        comp.sort_unstable();
        xs.sort_unstable();
        if comp.len() > p.ell {
            return Err(format!(
                "component of size {} exceeds {}",
                comp.len(),
                p.ell
            ));
        }
        if xs.len() > 2 {
            return Err(format!("component touching {} X-edges", xs.len()));
        }
        if xs.len() == 2
            && !(t.is_ancestor_unchecked(xs[0], xs[1]) || t.is_ancestor_unchecked(xs[1], xs[0]))
        {
            return Err("portals are not ancestor-related".into());
        }
        found.push((comp, xs));
    }
    let mut reported: Vec<(Vec<u32>, Vec<u32>)> = p
        .components
        .iter()
        .zip(&p.portals)
        .map(|(c, &(u, l))| {
            let mut xs: Vec<u32> = u.into_iter().chain(l).collect();
            xs.sort_unstable();
            (c.clone(), xs)
        })
        .collect();
    found.sort();
    reported.sort();
    if found != reported {
        return Err("reported components or portals differ from recomputation".into());
    }
    for (&(u, l), c) in p.portals.iter().zip(&p.components) {
        if let (Some(u), Some(l)) = (u, l) {
            if !t.is_ancestor_unchecked(u, l) {
                return Err(format!(
                    "upper portal {u} is not an ancestor of lower portal {l}"
                ));
            }
            let top = c[0];
            let _ = top;
        }
    }
    Ok(())
}

/// Heavy-light decomposition with the contracted tree of heavy paths.
#[derive(Debug, Clone)]
pub struct HeavyLight {
    /// Heavy paths, each listed top to bottom; path 0 contains the root and
    /// every path's parent path has a smaller index.
    pub paths: Vec<Vec<u32>>,
    pub path_of: Vec<u32>,
    pub pos_in_path: Vec<u32>,
    /// One vertex per heavy path, unit weights.
    pub contracted: RootedTree,
}

pub fn heavy_light(t: &RootedTree) -> HeavyLight {
    let n = t.n();
    let mut path_of = vec![0u32; n];
    let mut pos_in_path = vec![0u32; n];
    let mut paths: Vec<Vec<u32>> = Vec::new();
    // The cached preorder visits heavy children first, so each heavy path is a
    // contiguous run starting at its head.
    for &v in t.preorder() {
        if t.heavy_head(v) == v {
            path_of[v as usize] = paths.len() as u32;
            pos_in_path[v as usize] = 0;
            paths.push(vec![v]);
        } else {
            let p = path_of[t.heavy_head(v) as usize];
            path_of[v as usize] = p;
            pos_in_path[v as usize] = paths[p as usize].len() as u32;
            paths[p as usize].push(v);
        }
    }
    let parent: Vec<u32> = paths
        .iter()
        .map(|p| t.parent(p[0]).map_or(NO_PARENT, |q| path_of[q as usize]))
        .collect();
    let mut w = vec![1.0; paths.len()];
    w[0] = 0.0;
    let contracted = RootedTree::new(parent, w).expect("contracted heavy paths form a tree");
    HeavyLight {
        paths,
        path_of,
        pos_in_path,
        contracted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_component_after_removal(t: &RootedTree, c: u32) -> u32 {
        let mut best = t.n() as u32 - t.subtree_size(c);
        for &k in t.children(c) {
            best = best.max(t.subtree_size(k));
        }
        best
    }

    #[test]
    fn centroid_small_cases() {
        assert_eq!(centroid(&RootedTree::path(3), &[0, 1, 2]).unwrap(), 1);
        assert_eq!(
            centroid(&RootedTree::star(6), &[0, 1, 2, 3, 4, 5]).unwrap(),
            0
        );
        // Path of 4 has two centroids 1 and 2; the smaller id wins.
        assert_eq!(centroid(&RootedTree::path(4), &[0, 1, 2, 3]).unwrap(), 1);
        assert_eq!(centroid(&RootedTree::path(5), &[2, 3, 4]).unwrap(), 3);
        assert_eq!(
            centroid(&RootedTree::path(5), &[0, 2]),
            Err(DecomposeError::Disconnected)
        );
        assert_eq!(
            centroid(&RootedTree::path(5), &[]),
            Err(DecomposeError::Empty)
        );
    }

    #[test]
    fn centroid_matches_exhaustive_oracle() {
        for seed in 0..20 {
            let t = RootedTree::random(30, 1, seed);
            let all: Vec<u32> = (0..30).collect();
            let c = centroid(&t, &all).unwrap();
            let best = (0..30u32)
                .filter(|&v| 2 * max_component_after_removal(&t, v) <= 30)
                .min()
                .unwrap();
            assert_eq!(c, best);
        }
    }

    #[test]
    fn centroid_half_bound_exhaustive() {
        for n in 1..=200usize {
            let t = RootedTree::random(n, 1, n as u64);
            let st = SubTree::from_tree(&t);
            let c = st.gid[centroid_local(&st, &st.sizes()) as usize];
            assert!(2 * max_component_after_removal(&t, c) as usize <= n);
        }
    }

    #[test]
    fn partition_path_ten_ell_two() {
        let t = RootedTree::path(10);
        let p = tree_partition(&t, 2).unwrap();
        check_partition(&t, &p).unwrap();
        assert!(p.x.len() <= 5);
        assert!(p.components.iter().all(|c| c.len() <= 2));
    }

    #[test]
    fn partition_degenerate_ell() {
        let t = RootedTree::random(40, 1, 4);
        let p = tree_partition(&t, 40).unwrap();
        check_partition(&t, &p).unwrap();
        assert!(p.x.is_empty());
        assert_eq!(p.components.len(), 1);
        assert_eq!(tree_partition(&t, 0), Err(DecomposeError::BadParameter));
    }

    #[test]
    fn partition_random_200() {
        for seed in 0..10 {
            let t = RootedTree::random(200, 3, seed);
            check_partition(&t, &tree_partition(&t, 10).unwrap()).unwrap();
        }
    }

    #[test]
    fn checker_rejects_bad_partitions() {
        let t = RootedTree::path(10);
        let mut p = tree_partition(&t, 3).unwrap();
        p.components[0].pop();
        assert!(check_partition(&t, &p).is_err());
        let star = RootedTree::star(5);
        let bad = PartitionResult {
            ell: 4,
            x: vec![1, 2, 3],
            components: vec![vec![0, 4]],
            portals: vec![(None, Some(1))],
        };
        assert!(check_partition(&star, &bad).is_err());
    }

    #[test]
    fn heavy_light_shapes() {
        let p = heavy_light(&RootedTree::path(9));
        assert_eq!(p.paths.len(), 1);
        assert_eq!(p.contracted.n(), 1);
        let s = heavy_light(&RootedTree::star(7));
        assert_eq!(s.paths[0], vec![0, 1]);
        assert_eq!(s.contracted.height(), 1);
        let b = heavy_light(&RootedTree::complete(15, 2));
        assert!(b.contracted.height() <= 4);
    }

    proptest! {
        #[test]
        fn partition_invariants_hold(n in 1usize..400, ell in 1usize..50, seed in 0u64..10_000) {
            let t = RootedTree::random(n, 2, seed);
            let p = tree_partition(&t, ell).unwrap();
            prop_assert!(check_partition(&t, &p).is_ok(), "{:?}", check_partition(&t, &p));
        }

        #[test]
        fn heavy_light_height_is_logarithmic(n in 1usize..2000, seed in 0u64..10_000) {
            let t = RootedTree::random(n, 1, seed);
            let h = heavy_light(&t);
            prop_assert!((h.contracted.height() as f64) <= (n as f64).log2() + 1e-9);
            let total: usize = h.paths.iter().map(|p| p.len()).sum();
            prop_assert_eq!(total, n);
            for p in &h.paths {
                for w in p.windows(2) {
                    prop_assert_eq!(t.parent(w[1]), Some(w[0]));
                }
            }
        }

        #[test]
        fn subtree_distances_match_tree(n in 2usize..200, seed in 0u64..1000, s in 0u32..200) {
            let t = RootedTree::random(n, 6, seed);
            let st = SubTree::from_tree(&t);
            let s = s % n as u32;
            let d = st.dists_from(s);
            for i in 0..n {
                prop_assert_eq!(d[i], t.dist_unchecked(st.gid[s as usize], st.gid[i]));
            }
        }
    }
}
