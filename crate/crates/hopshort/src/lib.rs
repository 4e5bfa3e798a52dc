//! Low-hop, distance-preserving shortcuttings of tree metrics.
//!
//! Given a tree metric, the constructions here add edges so that every pair of
//! vertices is joined by a path of at most `k` edges whose length equals the
//! tree distance. Each construction also returns a witness for a sparsity
//! parameter: a tree decomposition (treewidth family) or an edge orientation
//! (arboricity family). A compact 3-hop routing scheme is built on top of the
//! treewidth family.

pub mod ackermann;
pub mod arb;
pub mod bench;
pub mod decompose;
pub mod hard;
pub mod model;
pub mod routing;
pub mod tw;
pub mod verify;

pub use model::{
    Dir, Edge, Hst, LineMetric, Metric, ModelError, RootedTree, Spanner, SpannerMeta,
    TreeDecomposition,
};
