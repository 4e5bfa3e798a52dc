//! Lower-bound tree family for stretch-1 routing and a harness that measures the
//! routing scheme on it.
//!
//! `T0` is a complete `t`-ary tree with levels `h, h-1, ..., 0` (height of the
//! root is `h`) where each internal vertex gets `d - t - 1` dummy leaves and the
//! root `d - t`, so every internal vertex has degree `d`. The padded tree `T`
//! replaces each dummy leaf of a height-`i` vertex by a group of `q_i` leaves,
//! with `q_i = (t^i - 1) / (t - 1)` the number of non-dummy vertices below any
//! child. Non-dummy vertices carry the same ids `0..|complete tree|` in both
//! trees, numbered level by level.

use crate::model::{RootedTree, Spanner, TreeJson, NO_PARENT};
use crate::routing::{build_scheme, Hop3Network, PortAssignment, RoutingError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HardError {
    #[error("need t >= 2, h >= 1 and d >= t + 1; got t = {t}, h = {h}, d = {d}")]
    BadParams { t: u32, h: u32, d: u32 },
    #[error("instance too large: {0} vertices")]
    TooLarge(u128),
    #[error("base ports at vertex {0} are not a permutation of 1..d")]
    BadBasePorts(u32),
    #[error("block for group {group} at vertex {v} overflows its {cap} ports")]
    BlockOverflow { v: u32, group: usize, cap: u64 },
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error("instance json does not match its parameters")]
    Inconsistent,
}

/// Largest padded tree the generator will build.
pub const MAX_VERTICES: u128 = 1 << 26;

#[derive(Debug, Clone)]
pub struct HardInstance {
    pub t: u32,
    pub h: u32,
    pub d: u32,
    /// `q[i]` for `i = 0..=h`.
    pub q: Vec<u64>,
    /// The padded tree `T`.
    pub tree: RootedTree,
    /// The degree-`d` tree `T0`.
    pub base: RootedTree,
    /// Number of non-dummy vertices; they are ids `0..non_dummy` in both trees.
    pub non_dummy: usize,
    /// Height of each non-dummy vertex.
    pub height: Vec<u32>,
}

fn q_of(t: u64, i: u32) -> u64 {
    (t.pow(i) - 1) / (t - 1)
}

/// `(d - 1) (t^h - 1) / (t - 1) + 2`.
pub fn base_size(t: u32, h: u32, d: u32) -> u128 {
    (d as u128 - 1) * ((t as u128).pow(h) - 1) / (t as u128 - 1) + 2
}

/// Vertex count of the padded tree.
pub fn padded_size(t: u32, h: u32, d: u32) -> u128 {
    let (t, d) = (t as u128, d as u128);
    let complete = (t.pow(h + 1) - 1) / (t - 1);
    let q = |i: u32| (t.pow(i) - 1) / (t - 1);
    let mut total = complete + q(h);
    for i in 1..=h {
        total += t.pow(h - i) * (d - t - 1) * q(i);
    }
    total
}

/// Parameters used for the lower bound at target size `n_bar`:
/// `t = h = floor(log sqrt(n) / log log sqrt(n))` (at least 2) and `d = t^h`.
pub fn default_parameters(n_bar: f64) -> (u32, u32, u32) {
    let ls = n_bar.sqrt().log2();
    let t = ((ls / ls.log2()).floor() as u32).max(2);
    (t, t, t.pow(t))
}

pub fn gen_hard_instance(t: u32, h: u32, d: u32) -> Result<HardInstance, HardError> {
    if t < 2 || h < 1 || d < t + 1 {
        return Err(HardError::BadParams { t, h, d });
    }
    let size = (t as u128)
        .checked_pow(h + 1)
        .map(|_| padded_size(t, h, d))
        .ok_or(HardError::TooLarge(u128::MAX))?;
    if size > MAX_VERTICES {
        return Err(HardError::TooLarge(size));
    }
    let q: Vec<u64> = (0..=h).map(|i| q_of(t as u64, i)).collect();
    // Complete tree in level order: children of k are t*k+1 ..= t*k+t.
    let complete = ((t as u64).pow(h + 1) - 1) / (t as u64 - 1);
    let mut cparent = vec![NO_PARENT; complete as usize];
    let mut height = vec![h; complete as usize];
    for v in 1..complete {
        cparent[v as usize] = ((v - 1) / t as u64) as u32;
        height[v as usize] = height[cparent[v as usize] as usize] - 1;
    }
    let build = |per: &dyn Fn(u32) -> u64| {
        let mut parent = cparent.clone();
        for v in 0..complete as u32 {
            for _ in 0..per(v) {
                parent.push(v);
            }
        }
        let n = parent.len();
        RootedTree::new(parent, vec![1.0; n]).expect("generated parents form a tree")
    };
    let dt = (d - t) as u64;
    let base = build(&|v| match height[v as usize] {
        0 => 0,
        _ if v == 0 => dt,
        _ => dt - 1,
    });
    let tree = build(&|v| match height[v as usize] {
        0 => 0,
        i if v == 0 => dt * q[i as usize],
        i => (dt - 1) * q[i as usize],
    });
    Ok(HardInstance {
        t,
        h,
        d,
        q,
        tree,
        base,
        non_dummy: complete as usize,
        height,
    })
}

impl HardInstance {
    pub fn is_dummy(&self, v: u32) -> bool {
        v as usize >= self.non_dummy
    }

    /// Internal non-dummy vertices, i.e. those with positive height.
    pub fn internal(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.non_dummy as u32).filter(|&v| self.height[v as usize] > 0)
    }

    /// Neighbors of `u` in `T0`, grouped: children, then dummy leaves, then the parent.
    pub fn base_neighbors(&self, u: u32) -> Vec<u32> {
        let mut out: Vec<u32> = self.base.children(u).to_vec();
        out.sort_by_key(|&c| (self.is_dummy(c), c));
        out.extend(self.base.parent(u));
        out
    }

    /// Non-dummy child `j` (0-based) of `u`.
    fn child(&self, u: u32, j: usize) -> u32 {
        u * self.t + 1 + j as u32
    }

    pub fn to_json(&self) -> HardJson {
        HardJson {
            t: self.t,
            h: self.h,
            d: self.d,
            q: self.q.clone(),
            non_dummy: self.non_dummy,
            tree: self.tree.to_json(),
            base: self.base.to_json(),
        }
    }

    /// Regenerates from the parameters and checks the stored trees agree.
    pub fn from_json(j: &HardJson) -> Result<Self, HardError> {
        let inst = gen_hard_instance(j.t, j.h, j.d)?;
        let same = |a: &TreeJson, b: &TreeJson| a.parent == b.parent && a.n == b.n;
        if !same(&inst.tree.to_json(), &j.tree)
            || !same(&inst.base.to_json(), &j.base)
            || inst.non_dummy != j.non_dummy
        {
            return Err(HardError::Inconsistent);
        }
        Ok(inst)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardJson {
    pub t: u32,
    pub h: u32,
    pub d: u32,
    pub q: Vec<u64>,
    pub non_dummy: usize,
    pub tree: TreeJson,
    pub base: TreeJson,
}

/// Port numbers of `T0`: for each internal vertex a permutation of `1..=d`,
/// aligned with [`HardInstance::base_neighbors`]. Other vertices get empty lists.
pub fn random_base_ports(inst: &HardInstance, seed: u64) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..inst.non_dummy as u32)
        .map(|u| {
            if inst.height[u as usize] == 0 {
                return Vec::new();
            }
            let mut p: Vec<u32> = (1..=inst.d).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect()
}

/// Block port numbering on the spanner edges at every internal vertex.
///
/// At an internal `u` of height `i`, edges to non-dummy vertices under child `j`
/// take ports from block `p_j`, where `p_j` is the base port of that child and
/// block `k` is `[(k-1) q_i + 1, k q_i]`. Dummy leaves of `u` are grouped `q_i` at
/// a time in id order and group `g` uses the block of the `g`-th dummy neighbor in
/// `T0`. Every remaining edge gets the smallest unused port, in increasing
/// neighbor id order. Vertices other than internal ones are numbered randomly.
pub fn block_port_numbering(
    inst: &HardInstance,
    s: &Spanner,
    base_ports: &[Vec<u32>],
    seed: u64,
) -> Result<PortAssignment, HardError> {
    let adj = s.adjacency();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = &inst.tree;
    let mut ports: Vec<Vec<u32>> = Vec::with_capacity(s.num_vertices());
    for u in 0..s.num_vertices() as u32 {
        let nbrs = adj.neighbor_ids(u);
        let internal = (u as usize) < inst.non_dummy && inst.height[u as usize] > 0;
        if !internal {
            let mut p: Vec<u32> = (1..=nbrs.len() as u32).collect();
            p.shuffle(&mut rng);
            ports.push(p);
            continue;
        }
        let i = inst.height[u as usize] as usize;
        let qi = inst.q[i];
        let bp = &base_ports[u as usize];
        let mut sorted = bp.clone();
        sorted.sort_unstable();
        if sorted != (1..=inst.d).collect::<Vec<_>>() {
            return Err(HardError::BadBasePorts(u));
        }
        let dummies: Vec<u32> = tree
            .children(u)
            .iter()
            .copied()
            .filter(|&c| inst.is_dummy(c))
            .collect();
        let first_dummy = dummies.iter().copied().min().unwrap_or(0);
        // Group of each neighbor (index into base_neighbors order), if any.
        let group = |v: u32| -> Option<usize> {
            if inst.is_dummy(v) {
                if tree.parent(v) == Some(u) {
                    return Some(inst.t as usize + ((v - first_dummy) as u64 / qi) as usize);
                }
                return None;
            }
            if v == u || !tree.is_ancestor_unchecked(u, v) {
                return None;
            }
            (0..inst.t as usize).find(|&j| tree.is_ancestor_unchecked(inst.child(u, j), v))
        };
        let mut next_in_block = vec![0u64; inst.d as usize];
        let mut out = vec![0u32; nbrs.len()];
        let mut used = std::collections::HashSet::new();
        for (slot, &v) in nbrs.iter().enumerate() {
            if let Some(g) = group(v) {
                let k = bp[g] as u64;
                if next_in_block[g] >= qi {
                    return Err(HardError::BlockOverflow {
                        v: u,
                        group: g,
                        cap: qi,
                    });
                }
                let p = (k - 1) * qi + 1 + next_in_block[g];
                next_in_block[g] += 1;
                out[slot] = p as u32;
                used.insert(p as u32);
            }
        }
        let mut order: Vec<usize> = (0..nbrs.len()).filter(|&x| out[x] == 0).collect();
        order.sort_by_key(|&x| nbrs[x]);
        let mut free = 1u32;
        for x in order {
            while used.contains(&free) {
                free += 1;
            }
            out[x] = free;
            used.insert(free);
        }
        ports.push(out);
    }
    Ok(PortAssignment::from_ports(s, &ports)?)
}

/// Number of edges checked against the block property, or the first violation.
pub fn check_block_property(
    inst: &HardInstance,
    s: &Spanner,
    base_ports: &[Vec<u32>],
    ports: &PortAssignment,
) -> Result<usize, (u32, u32)> {
    let adj = s.adjacency();
    let mut checked = 0;
    for u in inst.internal() {
        let qi = inst.q[inst.height[u as usize] as usize];
        for &v in adj.neighbor_ids(u) {
            if inst.is_dummy(v) || v == u || !inst.tree.is_ancestor_unchecked(u, v) {
                continue;
            }
            let j = (0..inst.t as usize)
                .find(|&j| inst.tree.is_ancestor_unchecked(inst.child(u, j), v))
                .expect("descendant lies under a child");
            let p = ports.port(u, v).expect("spanner edge has a port") as u64;
            if p.div_ceil(qi) != base_ports[u as usize][j] as u64 {
                return Err((u, v));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// One measurement row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardRow {
    pub t: u32,
    pub h: u32,
    pub d: u32,
    pub seed: u64,
    pub n_base: usize,
    pub n_tree: usize,
    pub max_table_bits: usize,
    pub max_label_bits: usize,
    pub max_total_bits: usize,
    pub relaxed_pairs: u64,
    pub max_hops: usize,
    pub pass: bool,
}

pub const HARD_CSV_HEADER: &str = "t,h,d,seed,n_base,n_tree,max_table_bits,max_label_bits,max_total_bits,relaxed_pairs,max_hops,pass";

impl HardRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.h,
            self.d,
            self.seed,
            self.n_base,
            self.n_tree,
            self.max_table_bits,
            self.max_label_bits,
            self.max_total_bits,
            self.relaxed_pairs,
            self.max_hops,
            self.pass
        )
    }
}

/// Every (ancestor, non-dummy descendant) pair of the padded tree.
pub fn relaxed_pairs(inst: &HardInstance) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for v in 1..inst.non_dummy as u32 {
        let mut a = inst.tree.parent(v);
        while let Some(x) = a {
            out.push((x, v));
            a = inst.tree.parent(x);
        }
    }
    out
}

/// Builds the routing scheme on the padded tree under block numbering for each
/// seed and routes all relaxed pairs.
pub fn measure_routing_memory(
    inst: &HardInstance,
    seeds: &[u64],
) -> Result<Vec<HardRow>, HardError> {
    let net = Hop3Network::build(&inst.tree);
    let pairs = relaxed_pairs(inst);
    seeds
        .par_iter()
        .map(|&seed| {
            let base = random_base_ports(inst, seed);
            let ports = block_port_numbering(inst, &net.spanner, &base, seed)?;
            let scheme = build_scheme(&inst.tree, &net, &ports)?;
            let mem = scheme.memory_stats();
            let rep = scheme.check_pairs(&pairs, 3);
            Ok(HardRow {
                t: inst.t,
                h: inst.h,
                d: inst.d,
                seed,
                n_base: inst.base.n(),
                n_tree: inst.tree.n(),
                max_table_bits: mem.max_table,
                max_label_bits: mem.max_label,
                max_total_bits: mem.max_total,
                relaxed_pairs: rep.pairs,
                max_hops: rep.max_hops,
                pass: rep.pass,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_match_formulas() {
        let inst = gen_hard_instance(2, 2, 4).unwrap();
        assert_eq!(inst.base.n(), 11);
        assert_eq!(inst.q, vec![0, 1, 3]);
        for t in 2..5 {
            for h in 1..4 {
                for d in t + 1..t + 5 {
                    let inst = gen_hard_instance(t, h, d).unwrap();
                    assert_eq!(inst.base.n() as u128, base_size(t, h, d));
                    assert_eq!(inst.tree.n() as u128, padded_size(t, h, d));
                    for u in inst.internal() {
                        assert_eq!(inst.base_neighbors(u).len(), d as usize);
                    }
                }
            }
        }
        assert!(gen_hard_instance(1, 2, 4).is_err());
        assert!(gen_hard_instance(3, 2, 3).is_err());
    }

    #[test]
    fn small_root_dummy_group() {
        // Root of height 1 carries d - t = 1 dummy leaf group of size q_1 = 1.
        let inst = gen_hard_instance(2, 1, 3).unwrap();
        let dummies: Vec<u32> = inst
            .tree
            .children(0)
            .iter()
            .copied()
            .filter(|&c| inst.is_dummy(c))
            .collect();
        assert_eq!(dummies.len(), 1);
        assert_eq!(inst.q[1], 1);
    }

    #[test]
    fn default_parameters_small() {
        assert_eq!(default_parameters(1e4), (2, 2, 4));
        let (t, h, d) = default_parameters(1e6);
        assert_eq!((t, h, d), (3, 3, 27));
        assert_eq!(
            gen_hard_instance(t, h, d).unwrap().base.n() as u128,
            base_size(t, h, d)
        );
    }

    #[test]
    fn block_numbering_identity_ports() {
        let inst = gen_hard_instance(2, 1, 3).unwrap();
        let net = Hop3Network::build(&inst.tree);
        let base: Vec<Vec<u32>> = (0..inst.non_dummy as u32)
            .map(|u| {
                if inst.height[u as usize] > 0 {
                    (1..=3).collect()
                } else {
                    vec![]
                }
            })
            .collect();
        let ports = block_port_numbering(&inst, &net.spanner, &base, 0).unwrap();
        assert_eq!(ports.port(0, 1), Some(1));
        assert_eq!(
            check_block_property(&inst, &net.spanner, &base, &ports),
            Ok(2)
        );
    }

    #[test]
    fn block_property_random_seeds() {
        let inst = gen_hard_instance(3, 3, 6).unwrap();
        let net = Hop3Network::build(&inst.tree);
        for seed in 0..20 {
            let base = random_base_ports(&inst, seed);
            let ports = block_port_numbering(&inst, &net.spanner, &base, seed).unwrap();
            assert!(check_block_property(&inst, &net.spanner, &base, &ports).unwrap() > 0);
        }
        let mut bad = random_base_ports(&inst, 0);
        bad[0][0] = bad[0][1];
        assert_eq!(
            block_port_numbering(&inst, &net.spanner, &bad, 0).unwrap_err(),
            HardError::BadBasePorts(0)
        );
    }

    #[test]
    fn relaxed_routing_small() {
        let inst = gen_hard_instance(2, 2, 4).unwrap();
        let rows = measure_routing_memory(&inst, &[1, 2, 3]).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert!(r.pass, "{r:?}");
            assert!(r.relaxed_pairs > 0 && r.max_hops <= 3);
        }
        assert!(measure_routing_memory(&inst, &[]).unwrap().is_empty());
    }

    #[test]
    fn json_round_trip() {
        let inst = gen_hard_instance(2, 3, 5).unwrap();
        let j = inst.to_json();
        let back = HardInstance::from_json(&j).unwrap();
        assert_eq!(back.tree.n(), inst.tree.n());
        let mut broken = j.clone();
        broken.d = 6;
        assert_eq!(
            HardInstance::from_json(&broken).unwrap_err(),
            HardError::Inconsistent
        );
    }
}
