use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stable-consensus"));
    c.env_remove("STABLE_CONSENSUS_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_graph(dir: &Path, name: &str, generator: &[&str]) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, stdout(&[&["graph"], generator].concat())).unwrap();
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn sigma_goldens() {
    let dir = TempDir::new().unwrap();
    let k3 = write_graph(dir.path(), "k3.txt", &["complete", "--n", "3"]);
    let p3 = write_graph(dir.path(), "p3.txt", &["path", "--n", "3"]);
    let out = stdout(&["sigma", "--graph", p(&k3), "--alpha", "1"]);
    assert!(out.contains("# sigma_alpha_total: 1.33333333\n"), "{out}");
    assert!(out.contains("# method: closed_form_complete\n"));
    assert!(out.ends_with("total,1.33333333,,\n"));
    let out = stdout(&["sigma", "--graph", p(&p3), "--alpha", "2"]);
    assert!(out.contains("# sigma_alpha_total: 0.333333333\n"), "{out}");
    assert!(out.contains("node,sigma_alpha,beta,mu\n1,0.138888889,0,0\n"));
}

#[test]
fn skewed_gaussian_reports_beta_with_note() {
    let dir = TempDir::new().unwrap();
    let p3 = write_graph(dir.path(), "p3.txt", &["path", "--n", "3"]);
    let out = stdout(&["sigma", "--graph", p(&p3), "--alpha", "2", "--beta", "0.5"]);
    assert!(out.contains("# note:"));
    let betas: Vec<f64> = out
        .lines()
        .filter(|l| l.starts_with(|c: char| c.is_ascii_digit()))
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(betas.len(), 3);
    assert!(betas.iter().all(|&b| b > 0.0));
}

#[test]
fn sigma_json_output() {
    let dir = TempDir::new().unwrap();
    let k3 = write_graph(dir.path(), "k3.txt", &["complete", "--n", "3"]);
    let out = stdout(&["sigma", "--graph", p(&k3), "--alpha", "1", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let total = v["report"]["sigma_alpha_total"].as_f64().unwrap();
    assert!((total - 4.0 / 3.0).abs() < 1e-12);
    assert_eq!(v["report"]["method"], "closed_form_complete");
}

#[test]
fn bounds_dominate_exact_on_p3() {
    let dir = TempDir::new().unwrap();
    let p3 = write_graph(dir.path(), "p3.txt", &["path", "--n", "3"]);
    let out = stdout(&["bounds", "--graph", p(&p3), "--alpha-grid", "0.2:2:0.1"]);
    let rows: Vec<Vec<&str>> = out
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("alpha"))
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 19);
    for r in &rows {
        let exact: f64 = r[1].parse().unwrap();
        for col in [2, 3] {
            assert!(r[col].parse::<f64>().unwrap() >= exact * (1.0 - 1e-7), "{r:?}");
        }
    }
    // the near-2 column exists from α > 1 and is exact at 2
    let last = rows.last().unwrap();
    assert_eq!(last[4], last[1]);
    assert_eq!(rows[0][4], "");
}

#[test]
fn design_remove_on_g2() {
    let dir = TempDir::new().unwrap();
    let g2 = write_graph(dir.path(), "g2.txt", &["g2"]);
    let out = stdout(&["design", "remove", "--graph", p(&g2), "--alpha", "2"]);
    let argmin: Vec<&str> = out.lines().filter(|l| l.ends_with(",true")).collect();
    assert_eq!(argmin.len(), 1);
    assert!(argmin[0].starts_with("2-4,2,"), "{}", argmin[0]);
    assert!(out.contains("candidate,alpha,sigma_alpha,is_argmin\n"));
}

#[test]
fn design_add_with_candidate_file_and_crossovers() {
    let dir = TempDir::new().unwrap();
    let g1 = write_graph(dir.path(), "g1.txt", &["g1"]);
    let cand = dir.path().join("cand.txt");
    fs::write(&cand, "# pendant links\n1-4\n1-3\n3 4\n").unwrap();
    let out = stdout(&[
        "design",
        "add",
        "--graph",
        p(&g1),
        "--candidates",
        p(&cand),
        "--alpha-grid",
        "1.2,2",
        "--crossovers",
    ]);
    assert!(out.contains("# argmin at alpha = 1.2: 1-3 3-4\n"), "{out}");
    assert!(out.contains("# argmin at alpha = 2: 1-4\n"));
    assert!(out.contains("# alpha in [1.2, 1.66"), "{out}");
    let existing = dir.path().join("existing.txt");
    fs::write(&existing, "1-2\n").unwrap();
    let bad = run(&[
        "design",
        "add",
        "--graph",
        p(&g1),
        "--candidates",
        p(&existing),
        "--alpha",
        "1",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn reweight_defaults_to_budget_graph() {
    let out = stdout(&["design", "reweight", "--alpha", "2", "--b-grid", "0.1:1.9:0.1"]);
    assert!(out.contains("# optimum at alpha = 2: b = "));
    assert_eq!(out.lines().filter(|l| l.ends_with(",true")).count(), 1);
    let out = stdout(&[
        "plotdata",
        "reweight",
        "--alpha-grid",
        "0.6,1,1.4,2",
        "--b-grid",
        "0.25:1.75:0.25",
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "alpha,b,sigma_alpha");
    assert_eq!(lines.len(), 1 + 4 * 7);
}

#[test]
fn plotdata_single_point_is_two_lines() {
    let dir = TempDir::new().unwrap();
    let p3 = write_graph(dir.path(), "p3.txt", &["path", "--n", "3"]);
    let out = stdout(&["plotdata", "alpha-curve", "--graph", p(&p3), "--alpha", "2"]);
    assert_eq!(
        out,
        "graph,alpha,sigma_alpha,method\np3,2,0.333333333,closed_form_alpha2\n"
    );
    let k4 = write_graph(dir.path(), "k4.txt", &["complete", "--n", "4"]);
    let out = stdout(&[
        "plotdata",
        "tightness",
        "--graph",
        p(&k4),
        "--graph",
        p(&p3),
        "--alpha-grid",
        "0.5,1.5",
    ]);
    assert_eq!(out.lines().count(), 5);
    assert!(out.starts_with("graph,alpha,exact,thm_bound"));
}

#[test]
fn simulate_is_reproducible_across_threads() {
    let dir = TempDir::new().unwrap();
    let k5 = write_graph(dir.path(), "k5.txt", &["complete", "--n", "5"]);
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "1", "3"].iter().enumerate() {
        let summary = dir.path().join(format!("summary{k}.csv"));
        let traj = dir.path().join(format!("traj{k}.csv"));
        let status = bin()
            .args([
                "simulate",
                "--graph",
                p(&k5),
                "--alpha",
                "1.5",
                "--paths",
                "1000",
                "--seed",
                "7",
                "--horizon",
                "2",
                "--stride",
                "500",
                "--out",
                p(&summary),
                "--trajectories",
                p(&traj),
                "--threads",
                threads,
            ])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push((fs::read(&summary).unwrap(), fs::read(&traj).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let summary = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(summary.contains("node,sigma_alpha_hat,beta_hat,sigma_alpha_theory,beta_theory\n"));
}

#[test]
fn threads_from_environment() {
    let dir = TempDir::new().unwrap();
    let p3 = write_graph(dir.path(), "p3.txt", &["path", "--n", "3"]);
    let out = bin()
        .args(["sigma", "--graph", p(&p3), "--alpha", "0.7"])
        .env("STABLE_CONSENSUS_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        stdout(&["sigma", "--graph", p(&p3), "--alpha", "0.7"])
    );
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let disconnected = dir.path().join("split.txt");
    fs::write(&disconnected, "1 2 1\n3 4 1\n").unwrap();
    let malformed = dir.path().join("bad.txt");
    fs::write(&malformed, "1 two 1\n").unwrap();
    let p3 = write_graph(dir.path(), "p3.txt", &["path", "--n", "3"]);

    let out = run(&["sigma", "--graph", p(&disconnected), "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("disconnected"));
    assert_eq!(
        run(&["sigma", "--graph", p(&malformed), "--alpha", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["sigma", "--graph", "/nonexistent/g.txt", "--alpha", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["sigma", "--graph", p(&p3), "--alpha", "2.5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["sigma", "--graph", p(&p3), "--alpha", "1", "--tol", "0"])
            .status
            .code(),
        Some(2)
    );
    let beta = dir.path().join("beta.txt");
    fs::write(&beta, "0.1 0.2\n").unwrap();
    let out = run(&["sigma", "--graph", p(&p3), "--alpha", "1.5", "--beta-file", p(&beta)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["bounds", "--graph", p(&p3)]).status.code(), Some(2));
    let out = run(&["simulate", "--graph", p(&p3), "--alpha", "1.5", "--dt", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generated_graphs_round_trip() {
    let dir = TempDir::new().unwrap();
    let g = write_graph(
        dir.path(),
        "r.txt",
        &["random", "--n", "9", "--p", "0.4", "--seed", "3"],
    );
    let text = fs::read_to_string(&g).unwrap();
    let parsed = stable_consensus::graph::Graph::parse_edge_list(&text).unwrap();
    assert_eq!(parsed.to_edge_list(), text);
    let g3 = stdout(&["graph", "g3", "--b", "0.25"]);
    assert!(g3.contains("2 5 0.25\n"), "{g3}");
}
