use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ldrg::io::{parse_prob_matrix, write_dense_adjacency, write_edgelist};
use ldrg::model::sample_graph;
use ldrg::rng::rng_from_seed;
use ldrg::symmat::SymMatrix;
use ldrg::AdjMatrix;
use tempfile::TempDir;

fn ldrg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldrg")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn save(dir: &Path, name: &str, g: &AdjMatrix) -> PathBuf {
    let path = dir.join(name);
    write_edgelist(g, std::fs::File::create(&path).unwrap()).unwrap();
    path
}

fn block_model(n: usize, blocks: usize, inside: f64, outside: f64) -> SymMatrix<f64> {
    SymMatrix::from_fn(n, |i, j| match (i == j, i % blocks == j % blocks) {
        (true, _) => 0.0,
        (false, true) => inside,
        (false, false) => outside,
    })
}

fn sample_files(dir: &Path, prefix: &str, p: &SymMatrix<f64>, m: usize, seed: u64) -> Vec<String> {
    let mut r = rng_from_seed(seed);
    (0..m)
        .map(|k| {
            let g = sample_graph(p, &mut r).unwrap();
            save(dir, &format!("{prefix}{k}.txt"), &g).display().to_string()
        })
        .collect()
}

fn json_field(o: &Output, key: &str) -> serde_json::Value {
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    v[key].clone()
}

#[test]
fn identical_inputs_give_one() {
    let dir = TempDir::new().unwrap();
    let g = sample_files(dir.path(), "g", &block_model(40, 2, 0.6, 0.2), 1, 1).remove(0);
    let o = ldrg(&["test", "--a", &g, "--b", &g, "--method", "bootstrap", "--k", "2", "--reps", "50", "--seed", "3", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json_field(&o, "t"), 1.0);
    assert_eq!(json_field(&o, "p_value"), 1.0);
    assert_eq!(json_field(&o, "schema_version"), 1);

    let report = dir.path().join("r.json");
    let o = ldrg(&["test", "--a", &g, "--b", &g, "--k", "2", "--reps", "20", "--seed", "3", "--report", report.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("p_value     1.000000"), "{}", stdout(&o));
    let written: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(written["K_A"], 2);
}

#[test]
fn missing_seed_is_reported() {
    let dir = TempDir::new().unwrap();
    let g = sample_files(dir.path(), "g", &block_model(30, 2, 0.6, 0.2), 1, 2).remove(0);
    let o = ldrg(&["test", "--a", &g, "--b", &g, "--k", "2", "--reps", "10"]);
    assert!(o.status.success());
    assert!(stderr(&o).starts_with("seed: "), "{}", stderr(&o));
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "0 1 0\n0 0 1\n0 1 0\n").unwrap();
    let good = save(dir.path(), "good.txt", &AdjMatrix::complete(3));
    let other = save(dir.path(), "other.txt", &AdjMatrix::complete(4));
    let (bad, good, other) = (bad.to_str().unwrap(), good.to_str().unwrap(), other.to_str().unwrap());

    let o = ldrg(&["test", "--a", bad, "--b", good, "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.txt:2:"), "{}", stderr(&o));

    let o = ldrg(&["test", "--a", good, other, "--b", good, good, "--method", "permutation", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ldrg(&["test", "--a", good, "--b", other, "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ldrg(&["test", "--a", good, "--b", good, "--k", "zero", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ldrg(&["estimate", "--a", dir.path().join("missing.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn permutation_needs_two_graphs_per_side() {
    let dir = TempDir::new().unwrap();
    let g = sample_files(dir.path(), "g", &block_model(30, 2, 0.6, 0.2), 1, 4).remove(0);
    let o = ldrg(&["test", "--a", &g, "--b", &g, "--method", "permutation", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn rank_selection_failure_exits_4() {
    let dir = TempDir::new().unwrap();
    let empty = save(dir.path(), "empty.txt", &AdjMatrix::empty(20));
    let e = empty.to_str().unwrap();
    let o = ldrg(&["estimate", "--a", e]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("leading eigenvalues"));
}

#[test]
fn auto_profile_finds_planted_rank() {
    let dir = TempDir::new().unwrap();
    let p = block_model(150, 3, 0.8, 0.1);
    let a = sample_files(dir.path(), "a", &p, 1, 5).remove(0);
    let b = sample_files(dir.path(), "b", &p, 1, 6).remove(0);
    let o = ldrg(&["test", "--a", &a, "--b", &b, "--k", "auto-profile", "--reps", "20", "--seed", "7", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json_field(&o, "K_A"), 3);
    assert_eq!(json_field(&o, "K_B"), 3);
}

#[test]
fn estimate_complete_graph() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("k.txt");
    write_dense_adjacency(&AdjMatrix::complete(12), std::fs::File::create(&g).unwrap()).unwrap();
    let o = ldrg(&["estimate", "--a", g.to_str().unwrap(), "--k", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("K = 1"));
    let p = parse_prob_matrix(&stdout(&o), "out").unwrap();
    // J - I has top eigenpair (n - 1, 1/sqrt(n)), so its best rank-1
    // approximation is (1 - 1/n) J.
    for i in 0..12 {
        for j in 0..12 {
            let want = if i == j { 0.0 } else { 11.0 / 12.0 };
            assert!((p.get(i, j) - want).abs() <= 1e-6);
        }
    }
}

#[test]
fn estimate_on_the_eta_grid() {
    let dir = TempDir::new().unwrap();
    let files = sample_files(dir.path(), "g", &block_model(40, 2, 0.55, 0.15), 3, 8);
    let out = dir.path().join("p.txt");
    let mut args = vec!["estimate", "--k", "2", "--eta", "0.05", "--out", out.to_str().unwrap(), "--a"];
    args.extend(files.iter().map(String::as_str));
    let o = ldrg(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let p = parse_prob_matrix(&std::fs::read_to_string(out).unwrap(), "p").unwrap();
    for v in p.upper_triangle() {
        let steps = v / 0.05;
        assert!((steps - steps.round()).abs() <= 1e-4, "{v}");
    }
}

#[test]
fn estimate_averages_many_graphs() {
    let dir = TempDir::new().unwrap();
    let p = block_model(60, 2, 0.7, 0.2);
    let files = sample_files(dir.path(), "g", &p, 100, 9);
    let mut args = vec!["estimate", "--k", "2", "--a"];
    args.extend(files.iter().map(String::as_str));
    let o = ldrg(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let est = parse_prob_matrix(&stdout(&o), "out").unwrap();
    let err = est.frobenius_distance(&p).powi(2) / (60.0 * 60.0);
    assert!(err < 1e-3, "{err}");
}

#[test]
fn simulate_smoke_config() {
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/smoke.json");
    let o = ldrg(&["simulate", "--config", config]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("setting,n,eps,rho,power,mean_t,mean_dn,trials,N,seed"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let power = row.split(',').nth(4).unwrap();
        assert!(power == "0" || power == "1", "{row}");
    }
}

#[test]
fn bad_config_names_the_key() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": {"setting": "M2", "n_list": [40, "x"], "eps_list": [0], "calibration": "bootstrap",
            "trials": 1, "estimator": {"rank": {"fixed": 3}}, "seed": 1}}"#,
    )
    .unwrap();
    let o = ldrg(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("experiment.n_list[1]"), "{}", stderr(&o));
}

#[test]
fn bundled_configs_are_valid() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ldrg::io::read_run_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.experiment.validate().unwrap();
        count += 1;
    }
    assert!(count >= 6);
}
