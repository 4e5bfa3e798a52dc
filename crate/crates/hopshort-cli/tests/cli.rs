use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hopshort"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> serde_json::Value {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap_or(serde_json::Value::Null)
}

#[test]
fn gen_path_matches_expected_parents() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &["gen", "--kind", "path", "--n", "5", "--out", "p.json"],
    );
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("p.json")).unwrap()).unwrap();
    assert_eq!(v["parent"], serde_json::json!([-1, 0, 1, 2, 3]));
}

#[test]
fn gen_is_byte_identical_for_a_seed() {
    let d = tempfile::tempdir().unwrap();
    for kind in ["random-tree", "line", "hst"] {
        ok(
            d.path(),
            &[
                "gen", "--kind", kind, "--n", "50", "--seed", "9", "--out", "a.json",
            ],
        );
        ok(
            d.path(),
            &[
                "gen", "--kind", kind, "--n", "50", "--seed", "9", "--out", "b.json",
            ],
        );
        let a = std::fs::read(d.path().join("a.json")).unwrap();
        assert_eq!(a, std::fs::read(d.path().join("b.json")).unwrap(), "{kind}");
    }
}

#[test]
fn build_then_verify_every_tree_construction() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(
        p,
        &[
            "gen",
            "--kind",
            "random-tree",
            "--n",
            "9",
            "--seed",
            "4",
            "--out",
            "t.json",
        ],
    );
    for (alg, k) in [
        ("tw2", "2"),
        ("tw3", "3"),
        ("twk", "5"),
        ("classic", "3"),
        ("tree-bh", "4"),
        ("tree-general", "12"),
    ] {
        ok(
            p,
            &[
                "build", "--alg", alg, "--k", k, "--in", "t.json", "--out", "s.json",
            ],
        );
        let r = ok(
            p,
            &[
                "verify",
                "--check",
                "stretch",
                "--spanner",
                "s.json",
                "--metric",
                "t.json",
            ],
        );
        assert_eq!(r["pass"], true, "{alg}");
        let r = ok(
            p,
            &["verify", "--check", "exact-arb", "--spanner", "s.json"],
        );
        assert_eq!(r["pass"], true, "{alg}");
    }
    ok(
        p,
        &[
            "build",
            "--alg",
            "tw3",
            "--in",
            "t.json",
            "--out",
            "s.json",
            "--witness",
            "td.json",
        ],
    );
    assert_eq!(
        ok(
            p,
            &[
                "verify",
                "--check",
                "td",
                "--spanner",
                "s.json",
                "--witness",
                "td.json"
            ]
        )["pass"],
        true
    );
    assert_eq!(
        ok(
            p,
            &[
                "verify",
                "--check",
                "exact-tw",
                "--spanner",
                "s.json",
                "--witness",
                "td.json"
            ]
        )["pass"],
        true
    );
}

#[test]
fn verify_fails_with_exit_one_on_a_tampered_spanner() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(
        p,
        &["gen", "--kind", "path", "--n", "12", "--out", "t.json"],
    );
    ok(
        p,
        &["build", "--alg", "tw2", "--in", "t.json", "--out", "s.json"],
    );
    let mut s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("s.json")).unwrap()).unwrap();
    // Keep only the tree edges, so most pairs need many hops.
    let edges: Vec<_> = s["edges"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e[0].as_u64().unwrap().abs_diff(e[1].as_u64().unwrap()) == 1)
        .cloned()
        .collect();
    s["orientation"] = serde_json::json!(vec![0; edges.len()]);
    s["edges"] = serde_json::Value::Array(edges);
    std::fs::write(p.join("bad.json"), s.to_string()).unwrap();
    let out = run(
        p,
        &[
            "verify",
            "--check",
            "stretch",
            "--spanner",
            "bad.json",
            "--metric",
            "t.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["pass"], false);
    assert!(r["counterexample"].is_array());
}

#[test]
fn line_and_hst_builds_verify() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(
        p,
        &[
            "gen", "--kind", "line", "--n", "60", "--seed", "2", "--out", "l.json",
        ],
    );
    ok(
        p,
        &[
            "build", "--alg", "line", "--k", "4", "--in", "l.json", "--out", "s.json",
        ],
    );
    assert_eq!(
        ok(
            p,
            &[
                "verify",
                "--check",
                "stretch",
                "--spanner",
                "s.json",
                "--metric",
                "l.json",
                "--pairs",
                "sample:300:1"
            ]
        )["pass"],
        true
    );
    assert_eq!(
        ok(p, &["verify", "--check", "orient", "--spanner", "s.json"])["pass"],
        true
    );
    ok(
        p,
        &[
            "gen", "--kind", "hst", "--n", "40", "--seed", "2", "--out", "h.json",
        ],
    );
    ok(
        p,
        &[
            "build", "--alg", "hst", "--k", "6", "--in", "h.json", "--out", "hs.json",
        ],
    );
    assert_eq!(
        ok(
            p,
            &[
                "verify",
                "--check",
                "stretch",
                "--spanner",
                "hs.json",
                "--metric",
                "h.json"
            ]
        )["pass"],
        true
    );
}

#[test]
fn route_and_cover() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    std::fs::create_dir(p.join("cover")).unwrap();
    ok(
        p,
        &[
            "gen",
            "--kind",
            "random-tree",
            "--n",
            "40",
            "--seed",
            "1",
            "--out",
            "cover/a.json",
        ],
    );
    ok(
        p,
        &[
            "gen",
            "--kind",
            "random-tree",
            "--n",
            "40",
            "--seed",
            "2",
            "--out",
            "cover/b.json",
        ],
    );
    let r = ok(
        p,
        &[
            "route",
            "--tree",
            "cover/a.json",
            "--seed",
            "3",
            "--dump",
            "dump.json",
            "--csv",
            "mem.csv",
        ],
    );
    assert_eq!(r["routing"]["pass"], true);
    assert!(std::fs::read_to_string(p.join("mem.csv"))
        .unwrap()
        .starts_with("vertex,table_bits,label_bits"));
    std::fs::write(
        p.join("sel.json"),
        r#"{"default":0,"pairs":[[5,1,1],[2,7,0]]}"#,
    )
    .unwrap();
    let r = ok(
        p,
        &["route-cover", "--trees", "cover", "--selector", "sel.json"],
    );
    assert_eq!(r["pass"], true);
    assert_eq!(r["routes_per_tree"], serde_json::json!([1, 1]));
}

#[test]
fn hard_instance_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(
        p,
        &[
            "hard", "--t", "2", "--h", "2", "--d", "4", "--out", "h.json",
        ],
    );
    let r = ok(
        p,
        &[
            "hard-measure",
            "--in",
            "h.json",
            "--seeds",
            "2",
            "--csv",
            "h.csv",
        ],
    );
    assert_eq!(r["pass"], true);
    assert_eq!(
        std::fs::read_to_string(p.join("h.csv"))
            .unwrap()
            .lines()
            .count(),
        3
    );
}

#[test]
fn bench_and_report() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    std::fs::write(
        p.join("spec.json"),
        r#"{"constructions":["tw2","classic"],"n":[16,32],"k":[2],"seeds":[0,1],"timing":false}"#,
    )
    .unwrap();
    ok(p, &["bench", "--spec", "spec.json", "--out", "a.csv"]);
    ok(p, &["bench", "--spec", "spec.json", "--out", "b.csv"]);
    let a = std::fs::read_to_string(p.join("a.csv")).unwrap();
    assert!(a.starts_with("# hopshort-bench v1"));
    assert_eq!(a, std::fs::read_to_string(p.join("b.csv")).unwrap());
    let out = run(p, &["report", "--csv", "a.csv"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("tw2"));
}

#[test]
fn bad_input_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let out = run(
        d.path(),
        &[
            "build",
            "--alg",
            "tw2",
            "--in",
            "missing.json",
            "--out",
            "s.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = run(d.path(), &["ack", "--k", "2"]);
    assert_eq!(out.status.code(), Some(2));
}
