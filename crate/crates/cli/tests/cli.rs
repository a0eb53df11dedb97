//! End-to-end tests of the `gcnbound` binary: file formats, report
//! parity, determinism, and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gcnbound"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn gcnbound")
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("gcnbound-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn gen_graph_writes_edge_list_with_header() {
    let out = tmp("k3.txt");
    let res = run(&["gen-graph", "--kind", "complete", "--n", "3", "--out",
        out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("n=3\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with("n=")).count(), 3);
    std::fs::remove_file(out).ok();
}

#[test]
fn gen_graph_rejects_infeasible_regular() {
    let out = tmp("reg.txt");
    let res = run(&["gen-graph", "--kind", "regular", "--k", "3", "--n", "5", "--out",
        out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn gen_graph_sbm_boundary_probabilities() {
    let out = tmp("sbm.txt");
    let res = run(&["gen-graph", "--kind", "sbm", "--sizes", "4,4", "--p-in", "1", "--p-out",
        "0", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    // Two disjoint K4s: 12 edges, none crossing the block boundary.
    let edges: Vec<(usize, usize)> = text
        .lines()
        .filter(|l| !l.starts_with("n="))
        .map(|l| {
            let mut it = l.split_whitespace();
            (it.next().unwrap().parse().unwrap(), it.next().unwrap().parse().unwrap())
        })
        .collect();
    assert_eq!(edges.len(), 12);
    assert!(edges.iter().all(|&(i, j)| (i < 4) == (j < 4)));
    std::fs::remove_file(out).ok();
}

#[test]
fn bound_lowrank_tighter_than_baseline_on_lazy_walk() {
    let out = tmp("report.json");
    let res = run(&[
        "bound", "--kind", "erdos-renyi", "--n", "8", "--p", "0.6", "--prop", "lazy-rw",
        "--widths", "2,4,4,2", "--designs", "lowrank,baseline", "--samples", "16",
        "--seed", "3", "--out", out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let rows = json.as_array().unwrap();
    let term = |design: &str| -> f64 {
        rows.iter()
            .find(|r| r["design"] == design)
            .and_then(|r| r["complexity_term"].as_f64())
            .unwrap()
    };
    // K = 2 <= h ln(dh): the low-rank column must not exceed the baseline.
    assert!(term("lowrank") <= term("baseline"));
    std::fs::remove_file(out).ok();
}

#[test]
fn bound_gamma_monotonicities() {
    let report = |gamma: &str| -> serde_json::Value {
        let out = tmp(&format!("gamma{gamma}.json"));
        let res = run(&[
            "bound", "--kind", "cycle", "--n", "6", "--widths", "2,3,2", "--designs",
            "diagonal", "--samples", "24", "--seed", "11", "--gamma", gamma, "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        std::fs::remove_file(out).ok();
        v[0].clone()
    };
    let (r1, r2) = (report("1"), report("2"));
    // Larger margin: the KL chain shrinks by gamma^2, the empirical
    // margin loss can only grow.
    assert!(r2["kl_upper"].as_f64().unwrap() < r1["kl_upper"].as_f64().unwrap());
    assert!(
        r2["empirical_margin_loss"].as_f64().unwrap()
            >= r1["empirical_margin_loss"].as_f64().unwrap()
    );
}

#[test]
fn bound_spectral_identity_g_values_at_most_one() {
    let out = tmp("spectral.json");
    let res = run(&[
        "bound", "--kind", "star", "--n", "7", "--widths", "2,3,2", "--designs", "spectral",
        "--filter", "identity", "--samples", "12", "--seed", "5", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for layer in json[0]["per_layer"].as_array().unwrap() {
        let g = layer["g_value"].as_f64().unwrap();
        assert!(g <= 1.0 + 1e-9, "g = {g} > 1 on a unit-radius graph");
    }
    std::fs::remove_file(out).ok();
}

#[test]
fn bound_csv_and_json_agree() {
    let json_out = tmp("rep.json");
    let csv_out = tmp("rep.csv");
    let common = [
        "bound", "--kind", "complete", "--n", "5", "--widths", "2,3,2", "--designs",
        "diagonal,lowrank", "--samples", "16", "--seed", "9",
    ];
    let mut args_json: Vec<&str> = common.to_vec();
    args_json.extend(["--out", json_out.to_str().unwrap(), "--format", "json"]);
    assert!(run(&args_json).status.success());
    let mut args_csv: Vec<&str> = common.to_vec();
    args_csv.extend(["--out", csv_out.to_str().unwrap(), "--format", "csv"]);
    assert!(run(&args_csv).status.success());

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_out).unwrap()).unwrap();
    let csv = std::fs::read_to_string(&csv_out).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let final_idx = header.iter().position(|h| *h == "final_bound").unwrap();
    for (row, report) in lines.zip(json.as_array().unwrap()) {
        let cells: Vec<&str> = row.split(',').collect();
        let csv_value: f64 = cells[final_idx].parse().unwrap();
        let json_value = report["final_bound"].as_f64().unwrap();
        // CSV carries 6 significant digits of the 12-digit JSON value.
        let rel = (csv_value - json_value).abs() / json_value.abs().max(1.0);
        assert!(rel < 1e-5, "csv {csv_value} vs json {json_value}");
    }
    std::fs::remove_file(json_out).ok();
    std::fs::remove_file(csv_out).ok();
}

#[test]
fn verify_deterministic_and_break_flag() {
    let out1 = tmp("verify1.json");
    let out2 = tmp("verify2.json");
    for out in [&out1, &out2] {
        let res = run(&["verify", "--seed", "5", "--trials", "400", "--out",
            out.to_str().unwrap()]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "verify reports are not byte-identical");
    std::fs::remove_file(out1).ok();
    std::fs::remove_file(out2).ok();

    let res = run(&["verify", "--seed", "5", "--trials", "400", "--break-dominance"]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn mc_check_condition_passes() {
    let res = run(&[
        "mc-check", "--which", "condition", "--kind", "cycle", "--n", "6", "--design",
        "lowrank", "--trials", "500", "--seed", "2",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.starts_with("PASS"));
}

#[test]
fn unknown_design_is_a_validation_error() {
    let res = run(&[
        "bound", "--kind", "complete", "--n", "4", "--widths", "2,3,2", "--designs",
        "bogus", "--samples", "8",
    ]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn bound_reads_edge_list_and_model_files() {
    let graph_path = tmp("g.txt");
    std::fs::write(&graph_path, "# triangle plus a tail\nn=4\n0 1\n1 2\n0 2\n2 3\n").unwrap();
    let model_path = tmp("m.json");
    std::fs::write(
        &model_path,
        r#"{
  "widths": [2, 2, 2],
  "activation": "tanh",
  "weights": [
    [[0.5, -0.2], [0.1, 0.9]],
    [[1.0, 0.0], [-0.3, 0.4]]
  ]
}"#,
    )
    .unwrap();
    let res = run(&[
        "bound", "--graph", graph_path.to_str().unwrap(), "--model",
        model_path.to_str().unwrap(), "--designs", "diagonal", "--samples", "8",
        "--seed", "1",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    std::fs::remove_file(graph_path).ok();
    std::fs::remove_file(model_path).ok();
}
