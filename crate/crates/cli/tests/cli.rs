use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dqcmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqcmap"))
        .args(args)
        .env_remove("DQCMAP_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &[&str] = &["--bench", "qaoa", "--size", "10", "--gen", "line", "--sizes", "4,4,4"];

#[test]
fn map_json_report() {
    let mut args = vec!["map"];
    args.extend_from_slice(SMALL);
    args.extend(["--seed", "3"]);
    let v: Value = serde_json::from_str(&stdout(&dqcmap(&args))).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["run"]["seed"], 3);
    let red = v["reduction"].as_f64().unwrap();
    assert!(red <= 1.0);
    let segs = v["segments"].as_array().unwrap();
    assert!(!segs.is_empty());
    let sum: f64 = segs.iter().map(|s| s["cost"]["e_total"].as_f64().unwrap()).sum();
    let total = v["totals"]["e_total"].as_f64().unwrap();
    assert!((sum - total).abs() <= 1e-9 * total.max(1.0));
    let base = v["baseline"]["totals"]["e_total"].as_f64().unwrap();
    assert!((red - (base - total) / base).abs() < 1e-9);
}

#[test]
fn csv_headers() {
    let mut args = vec!["map"];
    args.extend_from_slice(SMALL);
    args.extend(["--format", "csv"]);
    let out = stdout(&dqcmap(&args));
    assert!(out.starts_with("segment,from_layer,to_layer,two_qubit_gates,e_inter,e_local,e_move,total,epr_pairs,assignment\n"));

    let mut args = vec!["ablate"];
    args.extend_from_slice(SMALL);
    args.extend(["--format", "csv", "--iters", "200"]);
    let out = stdout(&dqcmap(&args));
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(lines[0], "arm,n_segments,e_inter,e_local,e_move,total,epr_pairs,reduction");
    let arms: Vec<_> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(arms, ["baseline", "L1", "L2", "L3"]);

    let mut args = vec!["sweep-ratio"];
    args.extend_from_slice(SMALL);
    args.extend(["--ratios", "5,1", "--iters", "200"]);
    let out = stdout(&dqcmap(&args));
    assert_eq!(out.lines().count(), 3);
    assert!(out.starts_with("ratio,"));
}

#[test]
fn invalid_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.qasm", "OPENQASM 2.0;\nqreg q[2];\ncx q[0],q[5];\n");
    let o = dqcmap(&["map", "--circuit", &bad, "--gen", "line", "--sizes", "2,2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    assert_eq!(dqcmap(&["map", "--no-such-flag"]).status.code(), Some(2));
    let mut args = vec!["map"];
    args.extend_from_slice(SMALL);
    args.extend(["--ratio", "-1"]);
    assert_eq!(dqcmap(&args).status.code(), Some(2));
    assert_eq!(dqcmap(&["--help"]).status.code(), Some(0));
}

#[test]
fn too_many_qubits_exits_3() {
    let o = dqcmap(&["map", "--bench", "qft", "--size", "12", "--gen", "line", "--sizes", "4,5"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn same_seed_same_bytes() {
    let mut args = vec!["ablate"];
    args.extend_from_slice(SMALL);
    args.extend(["--seed", "9", "--iters", "300"]);
    let a = stdout(&dqcmap(&args));
    let b = stdout(&dqcmap(&args));
    assert_eq!(a, b);
}

#[test]
fn seed_falls_back_to_env() {
    let mut args = vec!["map"];
    args.extend_from_slice(SMALL);
    let explicit = {
        let mut a = args.clone();
        a.extend(["--seed", "42"]);
        stdout(&dqcmap(&a))
    };
    let from_env = Command::new(env!("CARGO_BIN_EXE_dqcmap"))
        .args(&args)
        .env("DQCMAP_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(stdout(&from_env), explicit);
}

#[test]
fn generated_files_feed_map() {
    let dir = tempfile::tempdir().unwrap();
    let qasm = dir.path().join("adder.qasm");
    let topo = dir.path().join("topo.json");
    let out = dir.path().join("report.json");
    stdout(&dqcmap(&["gen-bench", "--bench", "adder", "--size", "8", "--out", qasm.to_str().unwrap()]));
    stdout(&dqcmap(&["gen-topology", "--gen", "grid", "--sizes", "4,6", "--out", topo.to_str().unwrap()]));
    assert!(std::fs::read_to_string(&qasm).unwrap().starts_with("OPENQASM 2.0;"));
    let t: Value = serde_json::from_str(&std::fs::read_to_string(&topo).unwrap()).unwrap();
    assert_eq!(t["qpus"].as_array().unwrap().len(), 2);

    stdout(&dqcmap(&[
        "map",
        "--circuit",
        qasm.to_str().unwrap(),
        "--topology",
        topo.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["run"]["cluster"]["n_qpus"], 2);

    // the generated circuit matches the in-process bench
    let via_bench = {
        let mut a = vec!["map", "--bench", "adder", "--size", "8", "--topology", topo.to_str().unwrap()];
        a.extend(["--format", "csv"]);
        stdout(&dqcmap(&a))
    };
    let via_file = stdout(&dqcmap(&[
        "map",
        "--circuit",
        qasm.to_str().unwrap(),
        "--topology",
        topo.to_str().unwrap(),
        "--format",
        "csv",
    ]));
    assert_eq!(via_bench, via_file);
}

#[test]
fn config_costs_block() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", r#"{"costs": {"gamma1": 2.0, "remote_op_cost": 3.0}}"#);
    let mut args = vec!["map"];
    args.extend_from_slice(SMALL);
    args.extend(["--config", &good]);
    let v: Value = serde_json::from_str(&stdout(&dqcmap(&args))).unwrap();
    assert_eq!(v["run"]["config"]["cost"]["gamma1"], 2.0);
    assert_eq!(v["run"]["config"]["cost"]["remote_op_cost"], 3.0);

    let bad = write(dir.path(), "bad.json", r#"{"costs": {"gamma9": 1.0}}"#);
    let mut args = vec!["map"];
    args.extend_from_slice(SMALL);
    args.extend(["--config", &bad]);
    assert_eq!(dqcmap(&args).status.code(), Some(2));
}
