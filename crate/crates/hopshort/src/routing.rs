//! Labeled fixed-port routing over the hop-3 shortcutting of a tree.
//!
//! Every vertex stores a table and every destination has a label. A packet
//! carries the destination label as its header, unchanged, and each forwarding
//! decision is a pure function of the current table and that header
//! ([`forward`]). Any source reaches any destination in at most three hops, and
//! the path length is the exact tree distance.
//!
//! Tables and labels have a canonical bit encoding. Its length is the memory
//! measure reported by [`Scheme::memory_stats`].

use crate::model::{approx_eq, Metric, RootedTree, Spanner};
use crate::tw::{build_hop3_with_record, Hop3Record};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Bits of the count prefix in front of each variable-length section.
pub const COUNT_BITS: u32 = 8;

/// Routes longer than this are reported as failures instead of looping forever.
const HOP_GUARD: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum RoutingError {
    #[error("vertex {v} has {got} ports but degree {deg}")]
    BadPorts { v: u32, got: usize, deg: usize },
    #[error("ports at vertex {0} repeat or include 0")]
    DuplicatePort(u32),
    #[error("spanner lacks the edge ({0}, {1}) required by the scheme")]
    MissingEdge(u32, u32),
    #[error("section of {0} entries does not fit the count prefix")]
    CountOverflow(usize),
    #[error("malformed {what}: {why}")]
    Decode { what: &'static str, why: String },
    #[error("vertex {0} out of range")]
    InvalidVertex(u32),
    #[error("port {port} does not exist at vertex {v}")]
    NoSuchPort { v: u32, port: u32 },
    #[error("route from {0} to {1} did not terminate")]
    NoProgress(u32, u32),
    #[error("selector has no tree for the pair ({0}, {1})")]
    SelectorMissing(u32, u32),
    #[error("selector picks tree {index} but only {trees} trees exist")]
    SelectorOutOfRange { index: usize, trees: usize },
}

/// Per-vertex injective numbering of incident spanner edges by positive ports.
///
/// Random assignments use exactly `1..=deg`. Adversarial ones may leave gaps,
/// as when a spanner is a subgraph of a complete metric whose numbering it inherits.
#[derive(Debug, Clone)]
pub struct PortAssignment {
    /// `by_port[v][p - 1]` is the neighbor behind port `p` and the edge weight.
    by_port: Vec<Vec<Option<(u32, f64)>>>,
    /// `(neighbor, port)` sorted by neighbor.
    by_nbr: Vec<Vec<(u32, u32)>>,
}

impl PortAssignment {
    /// `ports[v][i]` is the port of the `i`-th neighbor of `v` in `s.adjacency()` order.
    pub fn from_ports(s: &Spanner, ports: &[Vec<u32>]) -> Result<Self, RoutingError> {
        let adj = s.adjacency();
        let nv = s.num_vertices();
        let mut by_port = Vec::with_capacity(nv);
        let mut by_nbr = Vec::with_capacity(nv);
        for v in 0..nv as u32 {
            let deg = adj.degree(v);
            let pv = ports.get(v as usize).map_or(&[][..], |p| &p[..]);
            if pv.len() != deg {
                return Err(RoutingError::BadPorts {
                    v,
                    got: pv.len(),
                    deg,
                });
            }
            let top = pv.iter().copied().max().unwrap_or(0) as usize;
            let mut slots: Vec<Option<(u32, f64)>> = vec![None; top];
            let mut nb = Vec::with_capacity(deg);
            for ((u, w), &p) in adj.neighbors(v).zip(pv) {
                if p == 0 || slots[p as usize - 1].is_some() {
                    return Err(RoutingError::DuplicatePort(v));
                }
                slots[p as usize - 1] = Some((u, w));
                nb.push((u, p));
            }
            nb.sort_unstable();
            by_port.push(slots);
            by_nbr.push(nb);
        }
        Ok(PortAssignment { by_port, by_nbr })
    }

    pub fn port(&self, u: u32, v: u32) -> Option<u32> {
        let nb = &self.by_nbr[u as usize];
        nb.binary_search_by_key(&v, |&(x, _)| x)
            .ok()
            .map(|i| nb[i].1)
    }

    pub fn neighbor(&self, u: u32, port: u32) -> Option<(u32, f64)> {
        *self
            .by_port
            .get(u as usize)?
            .get((port as usize).checked_sub(1)?)?
    }

    pub fn degree(&self, u: u32) -> usize {
        self.by_nbr[u as usize].len()
    }

    /// Largest port number in use anywhere; equals the max degree for permutations.
    pub fn max_port(&self) -> usize {
        self.by_port.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.by_port.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_port.is_empty()
    }
}

/// A seeded uniformly random port permutation at every vertex.
pub fn assign_ports(s: &Spanner, seed: u64) -> PortAssignment {
    let adj = s.adjacency();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ports: Vec<Vec<u32>> = (0..s.num_vertices() as u32)
        .map(|v| {
            let mut p: Vec<u32> = (1..=adj.degree(v) as u32).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    PortAssignment::from_ports(s, &ports).expect("shuffled ports are permutations")
}

/// DFS interval: `a` is an ancestor of `b` iff `a.lo <= b.lo` and `b.hi <= a.hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anc {
    pub lo: u32,
    pub hi: u32,
}

impl Anc {
    pub fn of(t: &RootedTree, v: u32) -> Self {
        Anc {
            lo: t.tin(v),
            hi: t.tout(v),
        }
    }
    pub fn is_ancestor_of(self, b: Anc) -> bool {
        self.lo <= b.lo && b.hi <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliquePeer {
    pub id: u32,
    pub port: u32,
    pub anc: Anc,
}

/// A portal of this vertex's component in one recursive call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub call: u32,
    pub portal: u32,
    /// Port from this vertex to the portal.
    pub port: u32,
    pub anc: Anc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub id: u32,
    pub anc: Anc,
    /// The single call in which this vertex sits in the clique.
    pub clique_call: u32,
    pub clique: Vec<CliquePeer>,
    /// Outermost call first; upper portal before lower within a call.
    pub entries: Vec<TableEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub call: u32,
    pub portal: u32,
    /// Port from the portal to the labeled vertex.
    pub port: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub id: u32,
    pub anc: Anc,
    pub clique_call: u32,
    pub entries: Vec<LabelEntry>,
}

/// Field widths of the canonical encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Widths {
    pub id: u32,
    pub port: u32,
    /// Width of each of the two interval ends.
    pub anc_half: u32,
    pub call: u32,
    pub count: u32,
}

fn ceil_log2(x: usize) -> u32 {
    if x <= 1 {
        0
    } else {
        usize::BITS - (x - 1).leading_zeros()
    }
}

impl Widths {
    pub fn new(n: usize, max_port: usize, calls: usize) -> Self {
        Widths {
            id: ceil_log2(n),
            port: ceil_log2(max_port),
            anc_half: ceil_log2(2 * n),
            call: ceil_log2(calls),
            count: COUNT_BITS,
        }
    }
}

/// MSB-first bit string.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bits {
    bytes: Vec<u8>,
    len: usize,
}

impl Bits {
    fn push(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            if self.len.is_multiple_of(8) {
                self.bytes.push(0);
            }
            if (value >> i) & 1 == 1 {
                *self.bytes.last_mut().unwrap() |= 0x80 >> (self.len % 8);
            }
            self.len += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    pub fn from_hex(text: &str, len: usize) -> Result<Self, RoutingError> {
        let bytes = hex::decode(text).map_err(|e| RoutingError::Decode {
            what: "hex",
            why: e.to_string(),
        })?;
        if bytes.len() != len.div_ceil(8) {
            return Err(RoutingError::Decode {
                what: "hex",
                why: format!("{} bytes for {len} bits", bytes.len()),
            });
        }
        Ok(Bits { bytes, len })
    }
}

struct Reader<'a> {
    bits: &'a Bits,
    at: usize,
    what: &'static str,
}

impl Reader<'_> {
    fn take(&mut self, width: u32) -> Result<u64, RoutingError> {
        if self.at + width as usize > self.bits.len {
            return Err(RoutingError::Decode {
                what: self.what,
                why: format!("truncated at bit {}", self.at),
            });
        }
        let mut v = 0u64;
        for _ in 0..width {
            let bit = (self.bits.bytes[self.at / 8] >> (7 - self.at % 8)) & 1;
            v = (v << 1) | bit as u64;
            self.at += 1;
        }
        Ok(v)
    }
    fn u32(&mut self, width: u32) -> Result<u32, RoutingError> {
        Ok(self.take(width)? as u32)
    }
    fn port(&mut self, w: &Widths) -> Result<u32, RoutingError> {
        Ok(self.u32(w.port)? + 1)
    }
    fn anc(&mut self, w: &Widths) -> Result<Anc, RoutingError> {
        Ok(Anc {
            lo: self.u32(w.anc_half)?,
            hi: self.u32(w.anc_half)?,
        })
    }
    fn finish(self) -> Result<(), RoutingError> {
        if self.at != self.bits.len {
            return Err(RoutingError::Decode {
                what: self.what,
                why: format!("{} trailing bits", self.bits.len - self.at),
            });
        }
        Ok(())
    }
}

fn push_count(b: &mut Bits, n: usize, w: &Widths) -> Result<(), RoutingError> {
    if n >= 1 << w.count {
        return Err(RoutingError::CountOverflow(n));
    }
    b.push(n as u64, w.count);
    Ok(())
}

fn push_anc(b: &mut Bits, a: Anc, w: &Widths) {
    b.push(a.lo as u64, w.anc_half);
    b.push(a.hi as u64, w.anc_half);
}

impl Table {
    /// `ID, anc, r_T, count, [ID, port, anc]*, count, [r_T, ID, port, anc]*`.
    pub fn encode(&self, w: &Widths) -> Result<Bits, RoutingError> {
        let mut b = Bits::default();
        b.push(self.id as u64, w.id);
        push_anc(&mut b, self.anc, w);
        b.push(self.clique_call as u64, w.call);
        push_count(&mut b, self.clique.len(), w)?;
        for p in &self.clique {
            b.push(p.id as u64, w.id);
            b.push(p.port as u64 - 1, w.port);
            push_anc(&mut b, p.anc, w);
        }
        push_count(&mut b, self.entries.len(), w)?;
        for e in &self.entries {
            b.push(e.call as u64, w.call);
            b.push(e.portal as u64, w.id);
            b.push(e.port as u64 - 1, w.port);
            push_anc(&mut b, e.anc, w);
        }
        Ok(b)
    }

    pub fn decode(bits: &Bits, w: &Widths) -> Result<Self, RoutingError> {
        let mut r = Reader {
            bits,
            at: 0,
            what: "table",
        };
        let id = r.u32(w.id)?;
        let anc = r.anc(w)?;
        let clique_call = r.u32(w.call)?;
        let nc = r.take(w.count)? as usize;
        let mut clique = Vec::with_capacity(nc);
        for _ in 0..nc {
            clique.push(CliquePeer {
                id: r.u32(w.id)?,
                port: r.port(w)?,
                anc: r.anc(w)?,
            });
        }
        let ne = r.take(w.count)? as usize;
        let mut entries = Vec::with_capacity(ne);
        for _ in 0..ne {
            entries.push(TableEntry {
                call: r.u32(w.call)?,
                portal: r.u32(w.id)?,
                port: r.port(w)?,
                anc: r.anc(w)?,
            });
        }
        r.finish()?;
        Ok(Table {
            id,
            anc,
            clique_call,
            clique,
            entries,
        })
    }
}

impl Label {
    /// `ID, anc, r_T, count, [r_T, ID, port]*`.
    pub fn encode(&self, w: &Widths) -> Result<Bits, RoutingError> {
        let mut b = Bits::default();
        b.push(self.id as u64, w.id);
        push_anc(&mut b, self.anc, w);
        b.push(self.clique_call as u64, w.call);
        push_count(&mut b, self.entries.len(), w)?;
        for e in &self.entries {
            b.push(e.call as u64, w.call);
            b.push(e.portal as u64, w.id);
            b.push(e.port as u64 - 1, w.port);
        }
        Ok(b)
    }

    pub fn decode(bits: &Bits, w: &Widths) -> Result<Self, RoutingError> {
        let mut r = Reader {
            bits,
            at: 0,
            what: "label",
        };
        let id = r.u32(w.id)?;
        let anc = r.anc(w)?;
        let clique_call = r.u32(w.call)?;
        let ne = r.take(w.count)? as usize;
        let mut entries = Vec::with_capacity(ne);
        for _ in 0..ne {
            entries.push(LabelEntry {
                call: r.u32(w.call)?,
                portal: r.u32(w.id)?,
                port: r.port(w)?,
            });
        }
        r.finish()?;
        Ok(Label {
            id,
            anc,
            clique_call,
            entries,
        })
    }
}

/// A forwarding decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hop {
    Deliver,
    Port(u32),
}

fn malformed(why: &str) -> RoutingError {
    RoutingError::Decode {
        what: "header",
        why: why.to_string(),
    }
}

/// The forwarding function. It reads nothing but the current table and the
/// destination label.
pub fn forward(tbl: &Table, lbl: &Label) -> Result<Hop, RoutingError> {
    if tbl.id == lbl.id {
        return Ok(Hop::Deliver);
    }
    // Both call lists are root-to-leaf chains in the call tree and ids follow
    // preorder, so the deepest shared call is the largest shared id.
    let mine = tbl
        .entries
        .iter()
        .map(|e| e.call)
        .chain(std::iter::once(tbl.clique_call));
    let c = mine
        .filter(|&c| c == lbl.clique_call || lbl.entries.iter().any(|e| e.call == c))
        .max()
        .ok_or_else(|| malformed("no call in common with the current vertex"))?;
    let peer = |id: u32| tbl.clique.iter().find(|p| p.id == id);
    let anc_in_clique = |id: u32| {
        if id == tbl.id {
            Some(tbl.anc)
        } else {
            peer(id).map(|p| p.anc)
        }
    };
    match (tbl.clique_call == c, lbl.clique_call == c) {
        (true, true) => peer(lbl.id)
            .map(|p| Hop::Port(p.port))
            .ok_or_else(|| malformed("destination missing from the clique")),
        (true, false) => {
            let ps: Vec<&LabelEntry> = lbl.entries.iter().filter(|e| e.call == c).collect();
            let pick = match ps.as_slice() {
                [one] => *one,
                [upper, lower] => {
                    let la = anc_in_clique(lower.portal)
                        .ok_or_else(|| malformed("portal missing from the clique"))?;
                    if la.is_ancestor_of(tbl.anc) {
                        *lower
                    } else {
                        *upper
                    }
                }
                _ => return Err(malformed("expected one or two portals per call")),
            };
            if pick.portal == tbl.id {
                Ok(Hop::Port(pick.port))
            } else {
                peer(pick.portal)
                    .map(|p| Hop::Port(p.port))
                    .ok_or_else(|| malformed("portal missing from the clique"))
            }
        }
        (false, _) => {
            let ps: Vec<&TableEntry> = tbl.entries.iter().filter(|e| e.call == c).collect();
            let pick = match ps.as_slice() {
                [one] => *one,
                [upper, lower] => {
                    if lower.anc.is_ancestor_of(lbl.anc) {
                        *lower
                    } else {
                        *upper
                    }
                }
                _ => {
                    return Err(malformed(
                        "table holds neither one nor two portals for the call",
                    ))
                }
            };
            Ok(Hop::Port(pick.port))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteResult {
    pub path: Vec<u32>,
    pub ports: Vec<u32>,
    pub hops: usize,
    pub weight: f64,
}

/// Bit counts per vertex and their maxima.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryStats {
    pub table_bits: Vec<usize>,
    pub label_bits: Vec<usize>,
    pub max_table: usize,
    pub max_label: usize,
    /// Max over vertices of table plus label.
    pub max_total: usize,
}

/// Hop-3 spanner of a tree with the recursion trace needed for tables.
#[derive(Debug, Clone)]
pub struct Hop3Network {
    pub spanner: Spanner,
    pub record: Hop3Record,
}

impl Hop3Network {
    pub fn build(t: &RootedTree) -> Self {
        let (spanner, _, record) = build_hop3_with_record(t);
        Hop3Network { spanner, record }
    }
}

/// Tables, labels and the port assignment they were built against.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub widths: Widths,
    pub tables: Vec<Table>,
    pub labels: Vec<Label>,
    pub ports: PortAssignment,
    tree: RootedTree,
}

fn port_of(ports: &PortAssignment, u: u32, v: u32) -> Result<u32, RoutingError> {
    ports.port(u, v).ok_or(RoutingError::MissingEdge(u, v))
}

/// Builds tables and labels for the hop-3 network of `t` under `ports`.
pub fn build_scheme(
    t: &RootedTree,
    net: &Hop3Network,
    ports: &PortAssignment,
) -> Result<Scheme, RoutingError> {
    let n = t.n();
    let rec = &net.record;
    let anc: Vec<Anc> = (0..n as u32).map(|v| Anc::of(t, v)).collect();
    let widths = Widths::new(n, ports.max_port(), rec.calls.len());
    let mut tables = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for v in 0..n as u32 {
        let cc = rec.clique_of[v as usize];
        let mut clique = Vec::new();
        for &p in &rec.calls[cc as usize].clique {
            if p != v {
                clique.push(CliquePeer {
                    id: p,
                    port: port_of(ports, v, p)?,
                    anc: anc[p as usize],
                });
            }
        }
        let mut entries = Vec::new();
        let mut lentries = Vec::new();
        for pe in &rec.portal_entries[v as usize] {
            let portals: &[u32] = if pe.upper == pe.lower {
                &[pe.upper][..]
            } else {
                &[pe.upper, pe.lower][..]
            };
            for &p in portals {
                entries.push(TableEntry {
                    call: pe.call,
                    portal: p,
                    port: port_of(ports, v, p)?,
                    anc: anc[p as usize],
                });
                lentries.push(LabelEntry {
                    call: pe.call,
                    portal: p,
                    port: port_of(ports, p, v)?,
                });
            }
        }
        tables.push(Table {
            id: v,
            anc: anc[v as usize],
            clique_call: cc,
            clique,
            entries,
        });
        labels.push(Label {
            id: v,
            anc: anc[v as usize],
            clique_call: cc,
            entries: lentries,
        });
    }
    let scheme = Scheme {
        widths,
        tables,
        labels,
        ports: ports.clone(),
        tree: t.clone(),
    };
    // Surface encoding overflows at build time rather than at the first route.
    for v in 0..n {
        scheme.tables[v].encode(&widths)?;
        scheme.labels[v].encode(&widths)?;
    }
    Ok(scheme)
}

/// Outcome of routing a batch of pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoutingReport {
    pub pairs: u64,
    pub max_hops: usize,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<(u32, u32)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Scheme {
    pub fn n(&self) -> usize {
        self.tables.len()
    }

    pub fn tree(&self) -> &RootedTree {
        &self.tree
    }

    /// Simulates delivery from `u` to `v`. The header is `lbl(v)` encoded once and
    /// decoded afresh at every vertex.
    pub fn route(&self, u: u32, v: u32) -> Result<RouteResult, RoutingError> {
        let n = self.n() as u32;
        for x in [u, v] {
            if x >= n {
                return Err(RoutingError::InvalidVertex(x));
            }
        }
        let header = self.labels[v as usize].encode(&self.widths)?;
        self.route_with_header(u, &header)
    }

    /// Routing driven by a raw header.
    pub fn route_with_header(&self, u: u32, header: &Bits) -> Result<RouteResult, RoutingError> {
        let mut w = u;
        let mut res = RouteResult {
            path: vec![u],
            ports: Vec::new(),
            hops: 0,
            weight: 0.0,
        };
        for _ in 0..HOP_GUARD {
            let lbl = Label::decode(header, &self.widths)?;
            match forward(&self.tables[w as usize], &lbl)? {
                Hop::Deliver => return Ok(res),
                Hop::Port(p) => {
                    let (next, wt) = self
                        .ports
                        .neighbor(w, p)
                        .ok_or(RoutingError::NoSuchPort { v: w, port: p })?;
                    if (lbl.id as usize) < self.n() {
                        let t = &self.tree;
                        debug_assert!(
                            approx_eq(t.dist(w, next) + t.dist(next, lbl.id), t.dist(w, lbl.id)),
                            "hop {w} -> {next} leaves the tree path to {}",
                            lbl.id
                        );
                    }
                    res.path.push(next);
                    res.ports.push(p);
                    res.hops += 1;
                    res.weight += wt;
                    w = next;
                }
            }
        }
        Err(RoutingError::NoProgress(
            u,
            res.path.last().copied().unwrap_or(u),
        ))
    }

    /// Routes every listed pair and checks the hop bound and exact tree distance.
    pub fn check_pairs(&self, pairs: &[(u32, u32)], max_hops: usize) -> RoutingReport {
        let results: Vec<(usize, Option<String>)> = pairs
            .par_iter()
            .map(|&(u, v)| match self.route(u, v) {
                Ok(r) => {
                    let d = self.tree.dist(u, v);
                    let ok = r.hops <= max_hops && (r.weight == d || approx_eq(r.weight, d));
                    (
                        r.hops,
                        (!ok).then(|| {
                            format!("{} hops, weight {} vs distance {d}", r.hops, r.weight)
                        }),
                    )
                }
                Err(e) => (0, Some(e.to_string())),
            })
            .collect();
        let mut rep = RoutingReport {
            pairs: pairs.len() as u64,
            max_hops: 0,
            pass: true,
            counterexample: None,
            detail: None,
        };
        for (i, (h, bad)) in results.into_iter().enumerate() {
            rep.max_hops = rep.max_hops.max(h);
            if let (Some(why), true) = (bad, rep.pass) {
                rep.pass = false;
                rep.counterexample = Some(pairs[i]);
                rep.detail = Some(why);
            }
        }
        rep
    }

    /// All ordered pairs of distinct vertices.
    pub fn check_all_pairs(&self, max_hops: usize) -> RoutingReport {
        let n = self.n() as u32;
        let pairs: Vec<(u32, u32)> = (0..n)
            .flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v)))
            .collect();
        self.check_pairs(&pairs, max_hops)
    }

    pub fn memory_stats(&self) -> MemoryStats {
        let table_bits: Vec<usize> = self
            .tables
            .iter()
            .map(|t| t.encode(&self.widths).map_or(0, |b| b.len()))
            .collect();
        let label_bits: Vec<usize> = self
            .labels
            .iter()
            .map(|l| l.encode(&self.widths).map_or(0, |b| b.len()))
            .collect();
        MemoryStats {
            max_table: table_bits.iter().copied().max().unwrap_or(0),
            max_label: label_bits.iter().copied().max().unwrap_or(0),
            max_total: table_bits
                .iter()
                .zip(&label_bits)
                .map(|(a, b)| a + b)
                .max()
                .unwrap_or(0),
            table_bits,
            label_bits,
        }
    }

    /// `vertex,table_bits,label_bits` rows with a header line.
    pub fn memory_csv(&self) -> String {
        let m = self.memory_stats();
        let mut out = String::from("vertex,table_bits,label_bits\n");
        for v in 0..self.n() {
            out.push_str(&format!("{v},{},{}\n", m.table_bits[v], m.label_bits[v]));
        }
        out
    }

    pub fn dump(&self) -> SchemeDump {
        let vertices = (0..self.n())
            .map(|v| {
                let t = self.tables[v]
                    .encode(&self.widths)
                    .expect("checked at build time");
                let l = self.labels[v]
                    .encode(&self.widths)
                    .expect("checked at build time");
                VertexDump {
                    vertex: v as u32,
                    table: t.to_hex(),
                    table_bits: t.len(),
                    label: l.to_hex(),
                    label_bits: l.len(),
                }
            })
            .collect();
        SchemeDump {
            schema: Schema {
                widths: self.widths,
                table: "id anc.lo anc.hi clique_call count{id port-1 anc.lo anc.hi} count{call portal port-1 anc.lo anc.hi}".into(),
                label: "id anc.lo anc.hi clique_call count{call portal port-1}".into(),
                bit_order: "msb-first, zero padded to whole bytes".into(),
            },
            vertices,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub widths: Widths,
    pub table: String,
    pub label: String,
    pub bit_order: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexDump {
    pub vertex: u32,
    pub table: String,
    pub table_bits: usize,
    pub label: String,
    pub label_bits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeDump {
    pub schema: Schema,
    pub vertices: Vec<VertexDump>,
}

/// Chooses, for each ordered pair, which tree of a cover to route on.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Selector {
    #[serde(default)]
    pub default: Option<usize>,
    /// `[u, v, tree]` triples.
    #[serde(default)]
    pub pairs: Vec<(u32, u32, usize)>,
    #[serde(skip)]
    index: BTreeMap<(u32, u32), usize>,
}

impl Selector {
    pub fn new(default: Option<usize>, pairs: Vec<(u32, u32, usize)>) -> Self {
        let mut s = Selector {
            default,
            pairs,
            index: BTreeMap::new(),
        };
        s.reindex();
        s
    }

    /// Rebuilds the lookup map; needed after deserializing.
    pub fn reindex(&mut self) {
        self.index = self.pairs.iter().map(|&(u, v, i)| ((u, v), i)).collect();
    }

    pub fn select(&self, u: u32, v: u32) -> Option<usize> {
        self.index.get(&(u, v)).copied().or(self.default)
    }
}

/// Routes `u -> v` on the tree the selector names for the pair; returns the tree index too.
pub fn route_over_cover(
    schemes: &[Scheme],
    selector: &Selector,
    u: u32,
    v: u32,
) -> Result<(usize, RouteResult), RoutingError> {
    let i = selector
        .select(u, v)
        .ok_or(RoutingError::SelectorMissing(u, v))?;
    let s = schemes.get(i).ok_or(RoutingError::SelectorOutOfRange {
        index: i,
        trees: schemes.len(),
    })?;
    Ok((i, s.route(u, v)?))
}

/// Convenience: hop-3 network, seeded ports and scheme in one call.
pub fn scheme_for_tree(t: &RootedTree, port_seed: u64) -> Result<Scheme, RoutingError> {
    let net = Hop3Network::build(t);
    let ports = assign_ports(&net.spanner, port_seed);
    build_scheme(t, &net, &ports)
}
