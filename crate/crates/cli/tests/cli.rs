mod common;

use std::process::Command;

use common::{fixture_config, Pipeline};

fn dupq(work: &std::path::Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dupq"))
        .args(args)
        .arg("--config")
        .arg(fixture_config())
        .arg("--work-dir")
        .arg(work)
        .arg("--threads")
        .arg("1")
        .output()
        .unwrap()
}

#[test]
fn missing_artifact_names_its_producer() {
    let dir = tempfile::tempdir().unwrap();
    let out = dupq(dir.path(), &["train-retrieval"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("run `dupq ingest` first"), "{err}");

    let out = dupq(dir.path(), &["eval-retrieval", "--method", "bm25"]);
    assert!(!out.status.success());
}

#[test]
fn bad_override_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dupq(dir.path(), &["stats", "--word2vec.no_such_key", "3"]);
    assert!(!out.status.success());
}

#[test]
fn pipeline_query_and_reports() {
    let p = Pipeline::new(1);
    p.through_retrieval().unwrap();

    let test_pair = p.planted().as_array().unwrap().iter().find(|x| x["split"] == "test").unwrap().clone();
    let tags: Vec<&str> = test_pair["tags"].as_array().unwrap().iter().map(|t| t.as_str().unwrap()).collect();
    let tags = tags.join(",");
    let out = dupq(
        &p.work(),
        &[
            "query",
            "--title",
            test_pair["anchor_title"].as_str().unwrap(),
            "--body",
            test_pair["anchor_body"].as_str().unwrap(),
            "--tags",
            &tags,
            "--created",
            "2021-06-01T00:00:00Z",
            "--top-k",
            "3",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let top: Vec<u64> = stdout
        .lines()
        .filter_map(|l| l.split('\t').nth(1).and_then(|id| id.parse().ok()))
        .collect();
    assert_eq!(top.len(), 3, "{stdout}");
    assert!(top.contains(&test_pair["master"].as_u64().unwrap()), "{stdout}");

    // Both methods report on the same anchors, and the later one compares
    // against the earlier.
    p.run(&["eval-retrieval", "--method", "bm25"]).unwrap();
    p.run(&["eval-retrieval"]).unwrap();
    let bm25 = p.json("reports/retrieval-bm25-test.json");
    let head = p.json("reports/retrieval-head-text-test.json");
    assert_eq!(bm25["report"]["anchors"], head["report"]["anchors"]);
    assert_eq!(bm25["report"]["upper_bound"], head["report"]["upper_bound"]);
    let cmp = &head["comparisons"][0];
    assert_eq!(cmp["against"], "bm25");
    let n = head["report"]["anchors"].as_f64().unwrap();
    assert_eq!(cmp["u_this"].as_f64().unwrap() + cmp["u_other"].as_f64().unwrap(), n * n);

    let out = dupq(&p.work(), &["stats"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("head-text (test)"));
}

#[test]
fn timepred_models_train_and_rank() {
    let p = Pipeline::new(2);
    p.ingest().unwrap();
    p.run(&["build-graph"]).unwrap();
    p.run(&["train-embeddings"]).unwrap();
    for model in ["mlp", "tree"] {
        p.run(&["train-timepred", "--model", model]).unwrap();
        p.run(&["eval-timepred", "--model", model]).unwrap();
        let report = p.json(&format!("reports/timepred-{model}-text.json"));
        assert!(report.is_object());
        let ranked = String::from_utf8(p.bytes(&format!("timepred/ranked-{model}-text.tsv"))).unwrap();
        assert!(ranked.lines().count() > 1);
    }
}
