//! Runs the `ssmlab` binary and checks that every output re-serializes to the
//! same bytes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;
use ssmlab::cli::{Document, JsonTable, NodesOutput};
use ssmlab::output::{matrix_from_csv, matrix_to_csv, Table};
use ssmlab::ssm::SsmModel;
use ssmlab::train::TrainReport;

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn ssmlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssmlab"))
        .args(args)
        .env_remove("SSMLAB_SEED")
        .output()
        .unwrap()
}

fn run_ok(args: &[&str]) -> String {
    let out = ssmlab(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn assert_csv_round_trip(text: &str) -> Table {
    let table = Table::parse(text).unwrap();
    assert_eq!(table.to_csv(), text);
    table
}

fn assert_json_round_trip<T: Serialize + DeserializeOwned>(text: &str) -> Document<T> {
    let doc: Document<T> = serde_json::from_str(text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&doc).unwrap() + "\n", text);
    doc
}

fn body(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

fn matrix_meta(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once('='))
        .filter(|(k, _)| *k != "rows" && *k != "cols")
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[test]
fn exit_codes() {
    assert_eq!(ssmlab(&["--help"]).status.code(), Some(0));
    assert_eq!(ssmlab(&["gram", "--help"]).status.code(), Some(0));
    assert_eq!(ssmlab(&["--version"]).status.code(), Some(0));
    assert_eq!(ssmlab(&["gram", "--bogus"]).status.code(), Some(2));
    assert_eq!(ssmlab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ssmlab(&["gram", "--m", "four"]).status.code(), Some(2));
    // parses, then fails numerically: Re w > 0 violates the stability hypothesis
    let out = ssmlab(&["stability", "--re", "0.5", "--L", "8", "--n-c", "4", "--n-x", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = ssmlab(&["recover", "--x", "/nonexistent/x.csv", "--y", "/nonexistent/y.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn version_and_config_are_embedded() {
    let text = run_ok(&["--seed", "7", "gram", "--m", "4"]);
    let table = assert_csv_round_trip(&text);
    assert!(table.meta_value("version").unwrap().starts_with("ssmlab 0.1.0 ("));
    assert_eq!(table.meta_value("command"), Some("gram"));
    let config: serde_json::Value = serde_json::from_str(table.meta_value("config").unwrap()).unwrap();
    assert_eq!(config["seed"], 7);
    assert_eq!(config["args"]["scheme"], "s4d-lin");
}

#[test]
fn seed_falls_back_to_environment() {
    let with_env = Command::new(env!("CARGO_BIN_EXE_ssmlab"))
        .args(["init", "--m", "4"])
        .env("SSMLAB_SEED", "42")
        .output()
        .unwrap();
    let explicit = run_ok(&["--seed", "42", "init", "--m", "4"]);
    assert_eq!(String::from_utf8(with_env.stdout).unwrap(), explicit);
}

#[test]
fn table_outputs_round_trip() {
    let dir = scratch("tables");
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("cond.csv", vec!["gram", "--scheme", "s4d-real", "--m", "2,4,6"]),
        ("cond_lin.csv", vec!["gram", "--m", "4,16"]),
        ("tradeoff.csv", vec!["tradeoff", "--ratios", "1,2,4", "--m", "4"]),
        ("spectrum.csv", vec!["spectrum", "--kind", "iid,rand", "--L", "8..32", "--samples", "50"]),
        (
            "mag.csv",
            vec!["stability", "--kind", "ou", "--L", "8,16", "--n-c", "8", "--n-x", "8", "--alpha", "0.5"],
        ),
    ];
    for (file, args) in cases {
        let path = dir.join(file);
        let mut full = args.clone();
        full.extend(["--out", path.to_str().unwrap()]);
        assert!(run_ok(&full).is_empty());
        let text = std::fs::read_to_string(&path).unwrap();
        let table = assert_csv_round_trip(&text);
        assert!(!table.rows.is_empty(), "{file}");
        // the same rows through stdout and as JSON; only the recorded `out` differs
        assert_eq!(body(&run_ok(&args)), body(&text));
        let mut json_args = vec!["--format", "json"];
        json_args.extend(&args);
        let doc: Document<JsonTable> = assert_json_round_trip(&run_ok(&json_args));
        assert_eq!(doc.body.columns, table.columns);
        assert_eq!(doc.body.rows.len(), table.rows.len());
    }
}

#[test]
fn grid_output_does_not_depend_on_jobs() {
    let args = ["stability", "--kind", "iid,rbf", "--L", "8,16", "--n-c", "8", "--n-x", "8"];
    let one = run_ok(&[&["--jobs", "1"], &args[..]].concat());
    let three = run_ok(&[&["--jobs", "3"], &args[..]].concat());
    assert_eq!(body(&one), body(&three));
}

#[test]
fn json_documents_round_trip() {
    let init = run_ok(&["init", "--m", "6", "--p", "0.5"]);
    let model: Document<SsmModel> = assert_json_round_trip(&init);
    assert_eq!(model.body.size(), 6);
    assert_eq!(model.body.state().real().iter().filter(|a| **a == 0.0).count(), 3);

    let train = run_ok(&[
        "train", "--L", "16", "--m", "4", "--steps", "20", "--eval-every", "10", "--n-train", "64", "--n-test", "64",
    ]);
    let report: Document<TrainReport> = assert_json_round_trip(&train);
    assert_eq!(report.body.eval_steps, vec![0, 10, 20]);
    assert_eq!(report.body.kernel.len(), 16);
}

#[test]
fn recovery_and_node_picking() {
    let dir = scratch("recover");
    let (n, len) = (40, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = DMatrix::from_fn(n, len, |_, _| rng.random::<f64>() - 0.5);
    let rho = DMatrix::from_fn(len, 1, |l, _| (0.8 * l as f64).cos() * 0.9f64.powi(l as i32));
    let y = ssmlab::recovery::convolve(&x, &rho);
    let (xp, yp, out) = (dir.join("x.csv"), dir.join("y.csv"), dir.join("rho.csv"));
    std::fs::write(&xp, matrix_to_csv(&x, &[])).unwrap();
    std::fs::write(&yp, matrix_to_csv(&y, &[])).unwrap();
    run_ok(&[
        "recover", "--x", xp.to_str().unwrap(), "--y", yp.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let recovered = matrix_from_csv(&text).unwrap();
    assert_eq!(matrix_to_csv(&recovered, &matrix_meta(&text)), text);
    assert!((recovered - &rho).amax() < 1e-10);

    let nodes = run_ok(&["pick-nodes", "--rho", out.to_str().unwrap(), "--m", "2", "--delta-t", "0.5"]);
    let doc: Document<NodesOutput> = assert_json_round_trip(&nodes);
    assert_eq!(doc.body.nodes.len(), 2);
    assert_eq!(doc.body.candidates.len(), 4);
    assert_eq!(doc.body.delta_t, 0.5);
}
