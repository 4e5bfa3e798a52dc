use clap::{Args, Parser, Subcommand, ValueEnum};
use hopshort::ackermann::{ackermann_a, ackermann_b, inv_ackermann};
use hopshort::bench::{bench, read_csv, report, write_csv, SweepSpec};
use hopshort::hard::{
    gen_hard_instance, measure_routing_memory, HardInstance, HardJson, HARD_CSV_HEADER,
};
use hopshort::model::{HstJson, SpannerJson, TreeJson};
use hopshort::routing::{route_over_cover, scheme_for_tree, Scheme, Selector};
use hopshort::verify::{
    exact_arboricity_small, exact_treewidth_small, verify_orientation, verify_stretch_hop_bounded,
    verify_tree_decomposition, PairSource, SmallGraph, VerifyReport,
};
use hopshort::{arb, tw, Hst, LineMetric, Metric, RootedTree, Spanner, TreeDecomposition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, CliError>;

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

/// Low-hop shortcuttings of tree metrics: build, verify, route and benchmark.
#[derive(Debug, Parser)]
#[command(name = "hopshort", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Evaluate the inverse Ackermann function alpha_k(n), or A/B(k, s) with --s.
    Ack(AckArgs),
    /// Generate an instance file.
    Gen(GenArgs),
    /// Build a shortcutting from an instance file.
    Build(BuildArgs),
    /// Check a spanner or witness; exit code 1 when the check fails.
    Verify(VerifyArgs),
    /// Build the 3-hop routing scheme on a tree and route pairs.
    Route(RouteArgs),
    /// Route over several trees on the same points using a selector file.
    RouteCover(RouteCoverArgs),
    /// Generate a lower-bound instance.
    Hard(HardArgs),
    /// Measure routing memory on a lower-bound instance.
    HardMeasure(HardMeasureArgs),
    /// Run a parameter sweep described by a JSON spec and write a CSV.
    Bench(BenchArgs),
    /// Summarize a bench CSV as a Markdown table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    A,
    B,
}

#[derive(Debug, Args)]
struct AckArgs {
    #[arg(long)]
    k: u32,
    /// Argument of alpha_k.
    #[arg(long, conflicts_with = "s")]
    n: Option<u64>,
    /// Evaluate the forward function at s instead.
    #[arg(long)]
    s: Option<u128>,
    #[arg(long, value_enum, default_value = "a")]
    family: Family,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Path,
    Star,
    RandomTree,
    Line,
    UniformLine,
    Hst,
    Hard,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Number of vertices, points or leaves (unused by `hard`).
    #[arg(long, default_value_t = 0)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest edge weight or gap for random trees and lines.
    #[arg(long, default_value_t = 10)]
    max_weight: u32,
    /// HST separation is 1/eps.
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Max children per HST node.
    #[arg(long, default_value_t = 4)]
    delta: usize,
    /// Branching, height and degree for `hard`.
    #[arg(long, default_value_t = 2)]
    t: u32,
    #[arg(long, default_value_t = 2)]
    h: u32,
    #[arg(long, default_value_t = 4)]
    d: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Alg {
    Tw2,
    Tw3,
    Twk,
    Line,
    SteinerLine,
    Hst,
    Classic,
    TreeBh,
    TreeGeneral,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[arg(long, value_enum)]
    alg: Alg,
    /// Hop bound; ignored by tw2 and tw3.
    #[arg(long, default_value_t = 4)]
    k: u32,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the tree decomposition (treewidth family only).
    #[arg(long)]
    witness: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Steiner slots per gap for steiner-line.
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Stretch,
    Td,
    Orient,
    ExactTw,
    ExactArb,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    check: Check,
    #[arg(long)]
    spanner: PathBuf,
    /// Tree decomposition for `td` and `exact-tw`.
    #[arg(long)]
    witness: Option<PathBuf>,
    /// Base metric (tree, line or HST file) for `stretch`.
    #[arg(long)]
    metric: Option<PathBuf>,
    /// Hop bound; defaults to the spanner's recorded bound.
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, default_value = "all")]
    pairs: PairSource,
}

#[derive(Debug, Args)]
struct RouteArgs {
    #[arg(long)]
    tree: PathBuf,
    /// Port assignment seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "all")]
    pairs: PairSource,
    /// Write the encoded scheme as JSON.
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Write per-vertex bit counts as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RouteCoverArgs {
    /// Directory of tree files over the same point ids, taken in file name order.
    #[arg(long)]
    trees: PathBuf,
    #[arg(long)]
    selector: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pairs to route; `selector` routes exactly the pairs listed in the selector.
    #[arg(long, default_value = "selector")]
    pairs: String,
}

#[derive(Debug, Args)]
struct HardArgs {
    #[arg(long)]
    t: u32,
    #[arg(long)]
    h: u32,
    #[arg(long)]
    d: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct HardMeasureArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Number of port seeds, 0..seeds.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// JSON sweep spec.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    csv: PathBuf,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_text(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).map_err(|source| CliError::Io {
        path: p.into(),
        source,
    })
}

fn write_text(p: &Path, text: &str) -> Result<()> {
    std::fs::write(p, text).map_err(|source| CliError::Io {
        path: p.into(),
        source,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> Result<T> {
    serde_json::from_str(&read_text(p)?).map_err(|source| CliError::Json {
        path: p.into(),
        source,
    })
}

fn write_json<T: Serialize>(p: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string(v).map_err(|source| CliError::Json {
        path: p.into(),
        source,
    })?;
    s.push('\n');
    write_text(p, &s)
}

fn print_json<T: Serialize>(v: &T) {
    use std::io::Write;
    // A closed pipe on stdout is not an error worth a panic.
    let _ = writeln!(
        std::io::stdout(),
        "{}",
        serde_json::to_string_pretty(v).expect("serializable")
    );
}

/// A base metric loaded from disk.
enum Instance {
    Tree(RootedTree),
    Line(LineMetric),
    Hst(Hst),
}

impl Instance {
    fn load(p: &Path) -> Result<Self> {
        let v: serde_json::Value = read_json(p)?;
        let json_err = |source| CliError::Json {
            path: p.into(),
            source,
        };
        if v.get("points").is_some() {
            let l: LineMetric = serde_json::from_value(v).map_err(json_err)?;
            return LineMetric::new(l.points)
                .map(Instance::Line)
                .map_err(invalid);
        }
        if v.get("gamma").is_some() || v.get("point").is_some() {
            let h: HstJson = serde_json::from_value(v).map_err(json_err)?;
            return Hst::from_json(&h).map(Instance::Hst).map_err(invalid);
        }
        let t: TreeJson = serde_json::from_value(v).map_err(json_err)?;
        RootedTree::from_json(&t)
            .map(Instance::Tree)
            .map_err(invalid)
    }

    fn metric(&self) -> &dyn Metric {
        match self {
            Instance::Tree(t) => t,
            Instance::Line(l) => l,
            Instance::Hst(h) => h,
        }
    }

    fn tree(&self, what: &str) -> Result<&RootedTree> {
        match self {
            Instance::Tree(t) => Ok(t),
            _ => Err(invalid(format!("{what} needs a tree instance"))),
        }
    }
}

fn cmd_ack(a: AckArgs) -> Result<bool> {
    match (a.n, a.s) {
        (Some(n), _) => {
            print_json(&serde_json::json!({"k": a.k, "n": n, "alpha": inv_ackermann(a.k, n)}))
        }
        (None, Some(s)) => {
            let v = match a.family {
                Family::A => ackermann_a(a.k, s),
                Family::B => ackermann_b(a.k, s),
            };
            print_json(
                &serde_json::json!({"family": format!("{:?}", a.family), "k": a.k, "s": s, "value": v.to_string()}),
            );
        }
        (None, None) => return Err(invalid("give --n or --s")),
    }
    Ok(true)
}

fn cmd_gen(a: GenArgs) -> Result<bool> {
    match a.kind {
        Kind::Path => write_json(&a.out, &RootedTree::path(a.n).to_json())?,
        Kind::Star => write_json(&a.out, &RootedTree::star(a.n).to_json())?,
        Kind::RandomTree => write_json(
            &a.out,
            &RootedTree::random(a.n, a.max_weight, a.seed).to_json(),
        )?,
        Kind::Line => write_json(&a.out, &LineMetric::random(a.n, a.max_weight, a.seed))?,
        Kind::UniformLine => write_json(&a.out, &LineMetric::uniform(a.n))?,
        Kind::Hst => {
            if !(a.eps > 0.0 && a.eps < 1.0) {
                return Err(invalid("eps must lie in (0, 1)"));
            }
            write_json(
                &a.out,
                &Hst::random(a.n, 1.0 / a.eps, a.delta.max(2), a.seed).to_json(),
            )?
        }
        Kind::Hard => write_json(
            &a.out,
            &gen_hard_instance(a.t, a.h, a.d).map_err(invalid)?.to_json(),
        )?,
    }
    Ok(true)
}

fn cmd_build(a: BuildArgs) -> Result<bool> {
    let inst = Instance::load(&a.input)?;
    let mut witness: Option<TreeDecomposition> = None;
    let s: Spanner = match a.alg {
        Alg::Tw2 | Alg::Tw3 | Alg::Twk => {
            let t = inst.tree("tw builds")?;
            let (s, td) = match a.alg {
                Alg::Tw2 => tw::build_hop2(t),
                Alg::Tw3 => tw::build_hop3(t),
                _ => tw::build_hopk(t, a.k).map_err(invalid)?,
            };
            witness = Some(td);
            s
        }
        Alg::Line | Alg::SteinerLine => {
            let Instance::Line(l) = &inst else {
                return Err(invalid("line builds need a line instance"));
            };
            if a.alg == Alg::Line {
                arb::build_line(l, a.k).map_err(invalid)?
            } else {
                arb::steiner_line(l, a.k, a.budget.unwrap_or(usize::MAX)).map_err(invalid)?
            }
        }
        Alg::Hst => {
            let Instance::Hst(h) = &inst else {
                return Err(invalid("hst builds need an HST instance"));
            };
            arb::build_hst(h, a.k, a.eps).map_err(invalid)?
        }
        Alg::Classic => arb::classic_tree_shortcut(inst.tree("classic")?, a.k).map_err(invalid)?,
        Alg::TreeBh => {
            arb::build_tree_bounded_height(inst.tree("tree-bh")?, a.k).map_err(invalid)?
        }
        Alg::TreeGeneral => {
            arb::build_tree_general(inst.tree("tree-general")?, a.k).map_err(invalid)?
        }
    };
    write_json(&a.out, &s.to_json())?;
    match (a.witness, witness) {
        (Some(p), Some(td)) => write_json(&p, &td)?,
        (Some(_), None) => {
            return Err(invalid(
                "this construction has no tree decomposition witness",
            ))
        }
        _ => {}
    }
    print_json(&serde_json::json!({
        "construction": s.meta.construction,
        "n": s.n,
        "edges": s.num_edges(),
        "steiner": s.steiner.len(),
        "effective_k": s.meta.effective_k,
    }));
    Ok(true)
}

fn cmd_verify(a: VerifyArgs) -> Result<bool> {
    let sj: SpannerJson = read_json(&a.spanner)?;
    let s = Spanner::from_json(&sj).map_err(invalid)?;
    let witness = || -> Result<TreeDecomposition> {
        read_json(
            a.witness
                .as_ref()
                .ok_or_else(|| invalid("--witness is required"))?,
        )
    };
    let small = || SmallGraph::from_spanner(&s).map_err(invalid);
    let rep: VerifyReport = match a.check {
        Check::Stretch => {
            let inst = Instance::load(
                a.metric
                    .as_ref()
                    .ok_or_else(|| invalid("--metric is required for stretch"))?,
            )?;
            let k = a.k.unwrap_or(s.meta.effective_k);
            let bound = s.meta.params.get("stretch_bound").copied().unwrap_or(1.0);
            verify_stretch_hop_bounded(&s, inst.metric(), k, a.pairs, bound).map_err(invalid)?
        }
        Check::Td => verify_tree_decomposition(&witness()?, &s),
        Check::Orient => verify_orientation(&s).map_err(invalid)?,
        Check::ExactTw => {
            let tw = exact_treewidth_small(&small()?).map_err(invalid)?;
            let w = witness()?.width();
            oracle_report("exact-tw", tw, w, tw <= w)
        }
        Check::ExactArb => {
            let arb = exact_arboricity_small(&small()?).map_err(invalid)?;
            let d = verify_orientation(&s).map_err(invalid)?.measured as usize;
            oracle_report("exact-arb", arb, d + 1, arb <= d + 1)
        }
    };
    print_json(&rep);
    Ok(rep.pass)
}

/// Report for an exact oracle value against the witness bound.
fn oracle_report(check: &str, exact: usize, bound: usize, pass: bool) -> VerifyReport {
    serde_json::from_value(serde_json::json!({
        "check": check,
        "pass": pass,
        "measured": exact,
        "bound": bound,
        "counterexample": if pass { None } else { Some((0, 0)) },
        "detail": if pass { None } else { Some(format!("exact value {exact} exceeds witness bound {bound}")) },
    }))
    .expect("report fields are well formed")
}

fn pair_list(n: usize, src: PairSource) -> Vec<(u32, u32)> {
    match src {
        PairSource::All => (0..n as u32)
            .flat_map(|u| (0..n as u32).filter(move |&v| v != u).map(move |v| (u, v)))
            .collect(),
        PairSource::Sample { m, seed } => {
            if n < 2 {
                return Vec::new();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..m)
                .map(|_| {
                    let u = rng.gen_range(0..n as u32);
                    let v = rng.gen_range(0..n as u32 - 1);
                    (u, if v >= u { v + 1 } else { v })
                })
                .collect()
        }
    }
}

fn cmd_route(a: RouteArgs) -> Result<bool> {
    let t = RootedTree::from_json(&read_json::<TreeJson>(&a.tree)?).map_err(invalid)?;
    let scheme = scheme_for_tree(&t, a.seed).map_err(invalid)?;
    let rep = scheme.check_pairs(&pair_list(t.n(), a.pairs), 3);
    let mem = scheme.memory_stats();
    if let Some(p) = &a.dump {
        write_json(p, &scheme.dump())?;
    }
    if let Some(p) = &a.csv {
        write_text(p, &scheme.memory_csv())?;
    }
    print_json(&serde_json::json!({
        "routing": rep,
        "max_table_bits": mem.max_table,
        "max_label_bits": mem.max_label,
        "max_total_bits": mem.max_total,
    }));
    Ok(rep.pass)
}

fn cmd_route_cover(a: RouteCoverArgs) -> Result<bool> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(&a.trees)
        .map_err(|source| CliError::Io {
            path: a.trees.clone(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(invalid("no tree files in the directory"));
    }
    let trees: Vec<RootedTree> = files
        .iter()
        .map(|p| RootedTree::from_json(&read_json::<TreeJson>(p)?).map_err(invalid))
        .collect::<Result<_>>()?;
    let n = trees[0].n();
    if trees.iter().any(|t| t.n() != n) {
        return Err(invalid("trees of a cover must share the same point ids"));
    }
    let schemes: Vec<Scheme> = trees
        .iter()
        .map(|t| scheme_for_tree(t, a.seed).map_err(invalid))
        .collect::<Result<_>>()?;
    let mut sel: Selector = read_json(&a.selector)?;
    sel.reindex();
    let pairs: Vec<(u32, u32)> = if a.pairs == "selector" {
        sel.pairs.iter().map(|&(u, v, _)| (u, v)).collect()
    } else {
        pair_list(n, a.pairs.parse().map_err(invalid)?)
    };
    let mut pass = true;
    let mut max_ratio: f64 = 1.0;
    let mut max_hops = 0;
    let mut per_tree = vec![0u64; schemes.len()];
    for &(u, v) in &pairs {
        let (i, r) = route_over_cover(&schemes, &sel, u, v).map_err(invalid)?;
        per_tree[i] += 1;
        max_hops = max_hops.max(r.hops);
        let exact = trees[i].dist(u, v);
        if r.hops > 3 || (r.weight - exact).abs() > 1e-9 * exact.max(1.0) {
            pass = false;
        }
        // Stretch against the best tree of the cover.
        let best = trees
            .iter()
            .map(|t| t.dist(u, v))
            .fold(f64::INFINITY, f64::min);
        if best > 0.0 {
            max_ratio = max_ratio.max(r.weight / best);
        }
    }
    print_json(&serde_json::json!({
        "pairs": pairs.len(),
        "trees": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "routes_per_tree": per_tree,
        "max_hops": max_hops,
        "max_stretch_vs_best_tree": max_ratio,
        "pass": pass,
    }));
    Ok(pass)
}

fn cmd_hard(a: HardArgs) -> Result<bool> {
    let inst = gen_hard_instance(a.t, a.h, a.d).map_err(invalid)?;
    write_json(&a.out, &inst.to_json())?;
    print_json(
        &serde_json::json!({"t": a.t, "h": a.h, "d": a.d, "base_vertices": inst.base.n(), "tree_vertices": inst.tree.n()}),
    );
    Ok(true)
}

fn cmd_hard_measure(a: HardMeasureArgs) -> Result<bool> {
    let j: HardJson = read_json(&a.input)?;
    let inst = HardInstance::from_json(&j).map_err(invalid)?;
    let seeds: Vec<u64> = (0..a.seeds).collect();
    let rows = measure_routing_memory(&inst, &seeds).map_err(invalid)?;
    let mut csv = format!("{HARD_CSV_HEADER}\n");
    for r in &rows {
        csv.push_str(&r.csv());
        csv.push('\n');
    }
    write_text(&a.csv, &csv)?;
    let pass = rows.iter().all(|r| r.pass);
    print_json(
        &serde_json::json!({"rows": rows.len(), "pass": pass, "max_total_bits": rows.iter().map(|r| r.max_total_bits).max()}),
    );
    Ok(pass)
}

fn cmd_bench(a: BenchArgs) -> Result<bool> {
    let spec: SweepSpec = read_json(&a.spec)?;
    let out = bench(&spec).map_err(invalid)?;
    write_text(&a.out, &write_csv(&out.rows))?;
    for f in &out.failures {
        eprintln!(
            "cell {} n={} k={} seed={} failed: {}",
            f.construction, f.n, f.k, f.seed, f.reason
        );
    }
    print_json(
        &serde_json::json!({"rows": out.rows.len(), "failures": out.failures.len(), "skipped": out.skipped}),
    );
    Ok(out.failures.is_empty())
}

fn cmd_report(a: ReportArgs) -> Result<bool> {
    let rows = read_csv(&read_text(&a.csv)?).map_err(invalid)?;
    let md = report(&rows);
    match a.out {
        Some(p) => write_text(&p, &md)?,
        None => {
            use std::io::Write;
            let _ = std::io::stdout().write_all(md.as_bytes());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Ack(a) => cmd_ack(a),
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Build(a) => cmd_build(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Route(a) => cmd_route(a),
        Cmd::RouteCover(a) => cmd_route_cover(a),
        Cmd::Hard(a) => cmd_hard(a),
        Cmd::HardMeasure(a) => cmd_hard_measure(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Report(a) => cmd_report(a),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
