use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn infmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infmax"))
        .args(args)
        .env("INFMAX_WORKERS", "2")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_dir(o: &Output) -> PathBuf {
    let out = stdout(o);
    let line = out
        .lines()
        .find_map(|l| l.strip_prefix("run dir "))
        .expect("run dir line");
    PathBuf::from(line)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn path_fixture_summary_reports_the_expected_spread() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "path.txt", "0 1\n1 2\n");
    let store = dir.path().join("store");
    let o = infmax(&[
        "simulate",
        "--graph",
        &graph,
        "--seeds",
        "0",
        "--model",
        "constant:0.5",
        "--runs",
        "10000",
        "--out",
        store.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let spread: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("spread "))
        .and_then(|l| l.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((1.70..=1.80).contains(&spread), "{out}");
    assert!(out.contains(" ± "));
}

#[test]
fn usage_errors_exit_with_two() {
    let o = infmax(&["simulate", "--graph", "/missing/graph.txt", "--seeds", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/missing/graph.txt"));
    assert_eq!(infmax(&["simulate", "--graph"]).status.code(), Some(2));
    assert_eq!(
        infmax(&["compare", "/missing/a", "/missing/b"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(infmax(&["--show-config"]).status.code(), Some(0));
}

#[test]
fn malformed_graph_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "bad.txt", "0 1\noops\n");
    let o = infmax(&[
        "simulate",
        "--graph",
        &graph,
        "--seeds",
        "0",
        "--out",
        dir.path().join("s").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn export_compare_and_suggest() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(
        dir.path(),
        "g.txt",
        "0 1\n0 2\n0 3\n0 4\n4 5\n5 6\n6 7\n7 8\n8 9\n9 4\n",
    );
    let store = dir.path().join("store");
    let base = [
        "simulate",
        "--graph",
        &graph,
        "--directedness",
        "undirected",
        "--runs",
        "200",
        "--m",
        "3",
        "--layout-iterations",
        "100",
        "--out",
        store.to_str().unwrap(),
    ];
    let a = infmax(&[&base[..], &["--algorithm", "HIGHDEG", "--k", "2"]].concat());
    assert!(a.status.success(), "{}", stderr(&a));
    let b = infmax(&[&base[..], &["--algorithm", "sdisc", "--k", "2"]].concat());
    assert!(b.status.success(), "{}", stderr(&b));
    let (ra, rb) = (run_dir(&a), run_dir(&b));

    // export: header plus m rows, density sums to n
    let out = dir.path().join("export");
    let e = infmax(&[
        "export",
        ra.to_str().unwrap(),
        "--step",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(e.status.success(), "{}", stderr(&e));
    let csv = std::fs::read_to_string(out.join("density-m3.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "c0,c1,c2");
    assert_eq!(lines.len(), 4);
    let total: u32 = lines[1..]
        .iter()
        .flat_map(|l| l.split(','))
        .map(|v| v.parse::<u32>().unwrap())
        .sum();
    assert_eq!(total, 10);
    assert!(out.join("diffusion-cumulative-s1-m3.csv").is_file());
    let j = infmax(&[
        "export",
        ra.to_str().unwrap(),
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(j.status.success());
    let bad = infmax(&[
        "export",
        ra.to_str().unwrap(),
        "--step",
        "99",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(2));

    // compare: identical runs have zero deltas
    let same = infmax(&[
        "compare",
        ra.to_str().unwrap(),
        ra.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(same.status.success(), "{}", stderr(&same));
    let report: serde_json::Value = serde_json::from_str(&stdout(&same)).unwrap();
    assert_eq!(report["comparison"]["spread_delta"], 0.0);
    let text = infmax(&["compare", ra.to_str().unwrap(), rb.to_str().unwrap()]);
    assert!(stdout(&text).contains("delta"));

    // suggest: n = 0 rejected, apply creates a child run
    assert_eq!(
        infmax(&["suggest", ra.to_str().unwrap(), "--n", "0"])
            .status
            .code(),
        Some(2)
    );
    let s = infmax(&["suggest", rb.to_str().unwrap(), "--n", "1", "--apply"]);
    assert!(s.status.success(), "{}", stderr(&s));
    let out = stdout(&s);
    if !out.contains("nothing to apply") {
        let child = run_dir(&s);
        let config: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(child.join("run.json")).unwrap())
                .unwrap();
        assert_eq!(
            config["parent_run_id"].as_str(),
            rb.file_name().unwrap().to_str()
        );
    }

    // a run from another graph cannot be compared
    let other = write(dir.path(), "other.txt", "0 1\n");
    let c = infmax(&[
        "simulate",
        "--graph",
        &other,
        "--seeds",
        "0",
        "--runs",
        "10",
        "--m",
        "3",
        "--layout-iterations",
        "100",
        "--out",
        store.to_str().unwrap(),
    ]);
    let mismatch = infmax(&[
        "compare",
        ra.to_str().unwrap(),
        run_dir(&c).to_str().unwrap(),
    ]);
    assert_eq!(mismatch.status.code(), Some(2));
    assert!(stderr(&mismatch).contains("graph"));
}
