use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aosched::graph::{parse_graph, serialize_graph, TaskGraph};
use aosched::schedule::Schedule;

fn aosched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aosched")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn g1() -> TaskGraph {
    TaskGraph::from_weights(&[2, 3, 1], &[(0, 1, 1), (0, 2, 4)]).unwrap()
}

fn write_graph(dir: &Path, name: &str, g: &TaskGraph) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serialize_graph(g)).unwrap();
    path
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn both_models_schedule_g1_optimally() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_graph(dir.path(), "g1.dot", &g1());
    for model in ["ao", "els"] {
        let out = aosched(&["schedule", "--model", model, "--procs", "2", path_str(&graph)]);
        assert_eq!(code(&out), 0, "{model}");
        let s = Schedule::from_text(&String::from_utf8(out.stdout).unwrap()).unwrap();
        assert!(s.is_valid(&g1()));
        assert_eq!(s.length(&g1()), 6, "{model}");
    }
}

#[test]
fn schedule_writes_files_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_graph(dir.path(), "g1.dot", &g1());
    let out_dir = dir.path().join("out");
    let stats = dir.path().join("stats.json");
    let out = aosched(&[
        "schedule",
        path_str(&graph),
        "--out",
        path_str(&out_dir),
        "--stats",
        path_str(&stats),
    ]);
    assert_eq!(code(&out), 0);
    let sched = out_dir.join("g1.ao.sched");
    assert!(sched.exists());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&stats).unwrap()).unwrap();
    assert!(json.is_object());
    assert_eq!(code(&aosched(&["validate", path_str(&graph), path_str(&sched)])), 0);
}

#[test]
fn tiny_timeout_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = aosched(&[
        "gen",
        "--structure",
        "random",
        "--tasks",
        "21",
        "--ccr",
        "1",
        "--seed",
        "3",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(code(&out), 0);
    let graph = dir.path().join(String::from_utf8(out.stdout).unwrap().trim());
    let out = aosched(&["schedule", "--procs", "4", "--timeout", "0.001", path_str(&graph)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn validate_reports_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_graph(dir.path(), "g1.dot", &g1());
    let out = aosched(&["schedule", path_str(&graph)]);
    let text = String::from_utf8(out.stdout).unwrap();

    // task 1 now starts before its parent finishes
    let tampered: String = text
        .lines()
        .map(|l| if l.starts_with("1 ") { "1 0 0".to_string() } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    let bad = dir.path().join("tampered.sched");
    fs::write(&bad, tampered).unwrap();
    let out = aosched(&["validate", path_str(&graph), path_str(&bad)]);
    assert_eq!(code(&out), 4);
    assert!(!out.stdout.is_empty());

    let short: String = text.lines().filter(|l| !l.starts_with("2 ")).collect::<Vec<_>>().join("\n");
    let short_path = dir.path().join("short.sched");
    fs::write(&short_path, short).unwrap();
    assert_eq!(code(&aosched(&["validate", path_str(&graph), path_str(&short_path)])), 1);
}

#[test]
fn gen_sweep_writes_sixty_parseable_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = aosched(&[
        "gen",
        "--structure",
        "all",
        "--tasks",
        "10,16",
        "--ccr",
        "0.1,1,10",
        "--seed",
        "0",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(code(&out), 0);
    let manifest = String::from_utf8(out.stdout).unwrap();
    assert_eq!(manifest.lines().count(), 60);
    for name in manifest.lines() {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        parse_graph(&text).unwrap();
    }
}

#[test]
fn unsupported_requests_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let gen = |structure: &str, tasks: &str| {
        aosched(&["gen", "--structure", structure, "--tasks", tasks, "--out", path_str(dir.path())])
    };
    let out = gen("stencil", "2");
    assert_eq!(code(&out), 1);
    assert!(!out.stderr.is_empty());
    assert_eq!(code(&gen("spiral", "10")), 1);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);

    let graph = write_graph(dir.path(), "g1.dot", &g1());
    assert_eq!(code(&aosched(&["schedule", "--model", "ilp", path_str(&graph)])), 1);
    assert_eq!(code(&aosched(&["schedule", path_str(&dir.path().join("missing.dot"))])), 1);
    assert_eq!(code(&aosched(&["schedule", "--help"])), 0);
}

#[test]
fn compare_emits_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let out = aosched(&[
        "gen",
        "--structure",
        "fork,join",
        "--tasks",
        "6",
        "--ccr",
        "0.1,10",
        "--seed",
        "0..5",
        "--out",
        path_str(&corpus),
    ]);
    assert_eq!(code(&out), 0);
    let csv = dir.path().join("bench.csv");
    let table = dir.path().join("table.csv");
    let run = || {
        aosched(&[
            "compare",
            path_str(&corpus),
            "--clock",
            "expansions",
            "--csv",
            path_str(&csv),
            "--table",
            path_str(&table),
        ])
    };
    assert_eq!(code(&run()), 0);
    let first = fs::read_to_string(&csv).unwrap();
    let mut rows = csv::Reader::from_reader(first.as_bytes());
    let headers = rows.headers().unwrap().clone();
    assert_eq!(&headers[0], "graphFile");
    assert_eq!(&headers[headers.len() - 1], "optimalLength");
    let records: Vec<_> = rows.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 40);
    assert!(records.iter().all(|r| &r[7] == "solved"));
    assert_eq!(code(&run()), 0);
    assert_eq!(fs::read_to_string(&csv).unwrap(), first);
}
