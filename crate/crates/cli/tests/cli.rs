use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = "\
N = {5}
L = {6, 8}
Nu_of_TMs_Per_TOPO = 1
Nu_of_TOPOs_Per_N_L = 2
capacity_type = {'EDGE_BETWEENNESS'}
capacity_set = {30, 35, 40}
weight_setting = {'INV_CAP'}
tm_types = {'GRAVITY'}
Network_Load = [0.5]
objectives = {'LB', 'MCR'}
candidate_paths = {1, 3}
routing_strategies = {'MULTIPATH', 'SINGLEPATH'}
";

fn telab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_telab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_grid(dir: &Path) -> std::path::PathBuf {
    let cfg = dir.join("grid.cfg");
    fs::write(&cfg, CONFIG).unwrap();
    let out = dir.join("out");
    let o = telab(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    out
}

#[test]
fn run_writes_dataset_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_grid(dir.path());
    let jsonl = fs::read_to_string(out.join("dataset.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 32);
    let csv = fs::read_to_string(out.join("dataset.csv")).unwrap();
    assert_eq!(csv.lines().count(), 33);
    assert!(csv.starts_with("n,l,avg_nodal_degree,"));
    let echo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(echo["l"], serde_json::json!([6, 8]));
}

#[test]
fn analyses_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_grid(dir.path());
    let dataset = out.join("dataset.jsonl");
    let dataset = dataset.to_str().unwrap();

    let o = telab(&[
        "analyze",
        "pathflow",
        "--dataset",
        dataset,
        "--objective",
        "MCR",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("path_index,mean,std,min,max\n"));
    assert_eq!(text.lines().count(), 4);

    let gap = dir.path().join("gap.csv");
    let o = telab(&[
        "export",
        "--analysis",
        "gap",
        "--format",
        "csv",
        "--out",
        gap.to_str().unwrap(),
        "--dataset",
        dataset,
        "--k-lo",
        "1",
        "--k-hi",
        "3",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = fs::read_to_string(&gap).unwrap();
    assert!(text.starts_with("n,l,mean_gap_pct\n5,6,"));
    assert_eq!(text.lines().count(), 3);

    let json = dir.path().join("res.json");
    let o = telab(&[
        "export",
        "--analysis",
        "residualgap",
        "--format",
        "json",
        "--out",
        json.to_str().unwrap(),
        "--dataset",
        dataset,
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["groups"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, format!("{CONFIG}colour = 'blue'\n")).unwrap();
    let o = telab(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));

    fs::write(&cfg, CONFIG.replace("L = {6, 8}", "L = {20}")).unwrap();
    let o = telab(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));

    let data = dir.path().join("d.jsonl");
    fs::write(&data, "").unwrap();
    let data = data.to_str().unwrap();
    let o = telab(&[
        "export",
        "--analysis",
        "nope",
        "--format",
        "csv",
        "--out",
        "x",
        "--dataset",
        data,
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = telab(&[
        "export",
        "--analysis",
        "gap",
        "--format",
        "xml",
        "--out",
        "x",
        "--dataset",
        data,
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(telab(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn runtime_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let o = telab(&["analyze", "gap", "--dataset", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let o = telab(&["analyze", "gap", "--dataset", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lp_export() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.cfg");
    fs::write(&cfg, CONFIG).unwrap();
    let lp = dir.path().join("m.lp");
    let o = telab(&[
        "lp",
        "--config",
        cfg.to_str().unwrap(),
        "--index",
        "3",
        "--out",
        lp.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = fs::read_to_string(&lp).unwrap();
    // index 3: LB, k = 3, single-path
    assert!(text.contains("Subject To") && text.contains("Binaries"));
    let o = telab(&[
        "lp",
        "--config",
        cfg.to_str().unwrap(),
        "--index",
        "99",
        "--out",
        lp.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}
