use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn flowrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowrec"))
        .args(args)
        .env_remove("FLOWREC_CONFIG")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn core_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn repo_with(ids: &[&str]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for id in ids {
        let name = format!("wf{id}.json");
        fs::copy(core_fixture(&name), dir.path().join(&name)).unwrap();
    }
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bfs_corpus_on_941() {
    let repo = repo_with(&["941"]);
    let out = repo.path().join("corpus.txt");
    let o = flowrec(&[
        "gen-corpus",
        "--repo",
        s(repo.path()),
        "--strategy",
        "bfs",
        "--dedup",
        "--out",
        s(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = fs::read_to_string(&out).unwrap();
    let first_s1 = text.lines().find(|l| l.starts_with("s1 ")).unwrap();
    assert_eq!(first_s1, "s1 s2 s4 s6&s7");
}

#[test]
fn train_without_corpus_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    let model = dir.path().join("m.txt");
    let o = flowrec(&["train", "--corpus", s(&missing), "--out", s(&model)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.txt"));
}

#[test]
fn usage_errors_exit_one() {
    let o = flowrec(&["gen-corpus", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    assert_eq!(flowrec(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(flowrec(&["train"]).status.code(), Some(1));
    assert_eq!(flowrec(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_config_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"defaultK": 0}"#).unwrap();
    let o = flowrec(&["--config", s(&cfg), "ingest", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    fs::write(&cfg, r#"{"noSuchField": 1}"#).unwrap();
    assert_eq!(
        flowrec(&["--config", s(&cfg), "ingest", s(dir.path())])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn ingest_reports_and_normalizes() {
    let repo = repo_with(&["941", "306"]);
    fs::copy(
        core_fixture("../fixtures_xml/wf941.xml"),
        repo.path().join("dup.xml"),
    )
    .unwrap();
    // The XML file declares the same id as wf941.json.
    let o = flowrec(&["ingest", s(repo.path())]);
    assert_eq!(o.status.code(), Some(1));
    fs::remove_file(repo.path().join("dup.xml")).unwrap();
    let out = repo.path().join("norm");
    let o = flowrec(&["ingest", s(repo.path()), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("loaded 2 workflow(s)"));
    assert!(out.join("941.json").exists());
    assert_eq!(
        flowrec(&["ingest", "/definitely/not/here"]).status.code(),
        Some(2)
    );
}

#[test]
fn offline_pipeline_to_recommendation() {
    let repo = repo_with(&[
        "941", "306", "1097", "1360", "2067", "3432", "245", "232", "231", "957",
    ]);
    let d = repo.path();
    let graph = d.join("graph.tsv");
    let corpus = d.join("corpus.txt");
    let model = d.join("model.txt");
    let session = d.join("session.json");
    assert_eq!(
        flowrec(&["build-graph", "--repo", s(d), "--out", s(&graph)])
            .status
            .code(),
        Some(0)
    );
    assert!(fs::read_to_string(&graph).unwrap().contains("s7\ts10\t231"));
    assert_eq!(
        flowrec(&[
            "gen-corpus",
            "--graph",
            s(&graph),
            "--strategy",
            "pw",
            "--seed",
            "3",
            "--out",
            s(&corpus)
        ])
        .status
        .code(),
        Some(0)
    );
    assert_eq!(
        flowrec(&[
            "train",
            "--corpus",
            s(&corpus),
            "--out",
            s(&model),
            "--dim",
            "8",
            "--seed",
            "3"
        ])
        .status
        .code(),
        Some(0)
    );
    assert!(fs::read_to_string(&model)
        .unwrap()
        .starts_with("flowrec-sg v1 "));
    fs::write(&session, r#"["s1", "s2"]"#).unwrap();
    let o = flowrec(&[
        "recommend",
        "--model",
        s(&model),
        "--graph",
        s(&graph),
        "--session-file",
        s(&session),
        "--k",
        "3",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let entries: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let entries = entries.as_array().unwrap();
    assert_eq!(entries.len(), 3);
    for (i, e) in entries.iter().enumerate() {
        assert_eq!(e["rank"], i);
        assert!(e["pSuc"].is_number() && e["sim"].is_number() && e["members"].is_array());
    }

    fs::write(&session, "never_seen\n").unwrap();
    let o = flowrec(&[
        "recommend",
        "--model",
        s(&model),
        "--graph",
        s(&graph),
        "--session-file",
        s(&session),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cold start"));
}

#[test]
fn evaluate_reports_requested_cutoffs() {
    let dir = tempfile::tempdir().unwrap();
    let repo = dir.path().join("repo");
    let o = flowrec(&["synth", "--out", s(&repo), "--workflows", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let report = dir.path().join("report.json");
    let o = flowrec(&[
        "evaluate",
        "--repo",
        s(&repo),
        "--k",
        "3",
        "--k",
        "5",
        "--k",
        "10",
        "--dim",
        "10",
        "--seed",
        "9",
        "--json",
        s(&report),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    for k in ["3", "5", "10"] {
        for m in ["pre", "rec", "f1", "vmrr"] {
            assert!(v["metrics"][k][m].is_number(), "{k} {m}");
        }
    }
    assert!(v["caseCount"].is_number() && v["droppedCases"].is_number());
    assert!(String::from_utf8_lossy(&o.stderr).contains("VMRR"));

    let csv = dir.path().join("grid.csv");
    let o = flowrec(&[
        "sweep-pw",
        "--repo",
        s(&repo),
        "--l",
        "3,5",
        "--theta",
        "2",
        "--k",
        "5",
        "--dim",
        "8",
        "--out",
        s(&csv),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "l,theta,K,pre,rec,f1,vmrr");
    assert_eq!(text.lines().count(), 3);
}
