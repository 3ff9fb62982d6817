mod common;

use std::fs;

use common::criteria::gvf;
use common::fixtures::fixtures_dir;

fn fx(name: &str) -> String {
    fixtures_dir().join(name).to_str().unwrap().to_string()
}

#[test]
fn pipeline_smoke() {
    common::criteria::end_to_end_smoke().unwrap();
}

#[test]
fn evaluate_prints_fixture_average() {
    let run = gvf(&["evaluate", "--gold", &fx("oeq_gold.jsonl"), "--predictions", &fx("oeq_predictions.jsonl")]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let avg = run.stdout.lines().find(|l| l.starts_with("Average")).unwrap();
    assert_eq!(avg.split_whitespace().last(), Some("0.336"));
    let counting = run.stdout.lines().find(|l| l.starts_with("Counting")).unwrap();
    assert!(counting.ends_with("0.300"), "{counting}");
}

#[test]
fn validate_reports_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let good = fs::read_to_string(fx("oeq_gold.jsonl")).unwrap();
    let mut lines: Vec<String> = good.lines().take(5).map(str::to_string).collect();
    lines[2] = lines[2].replacen("[FACT: COUNT=", "[FACT: COUNT=x", 1);
    let path = dir.path().join("bad.jsonl");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let run = gvf(&["validate", "--input", path.to_str().unwrap()]);
    assert_eq!(run.code, 1);
    let diags: Vec<&str> = run.stderr.lines().collect();
    assert_eq!(diags.len(), 1, "{}", run.stderr);
    assert!(diags[0].starts_with("line 3:"), "{}", diags[0]);

    let ok = gvf(&["validate", "--input", &fx("oeq_gold.jsonl")]);
    assert_eq!(ok.code, 0, "{}", ok.stderr);

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let run = gvf(&["validate", "--input", empty.to_str().unwrap()]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("no records"));
}

#[test]
fn score_with_zero_lambda_returns_ce() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("req.jsonl");
    fs::write(
        &input,
        concat!(
            "{\"record_id\":\"a\",\"answer\":\"There are three apples.\",\"anchors\":[\"[FACT: COUNT=2]\"],\"ce_loss\":0.8125}\n",
            "{\"record_id\":\"b\",\"answer\":\"No, there are only two.\",\"anchors\":[\"[FACT: COUNT=2]\"],\"ce_loss\":1.25}\n",
        ),
    )
    .unwrap();
    let run = gvf(&["score", "--input", input.to_str().unwrap(), "--lambda", "0"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let rows: Vec<serde_json::Value> = run.stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(rows[0].get("_provenance").is_some());
    assert_eq!(rows[1]["fcl"], 1.0);
    assert_eq!(rows[1]["total"], 0.8125);
    assert_eq!(rows[2]["total"], 1.25);

    let run = gvf(&["score", "--input", input.to_str().unwrap(), "--lambda", "2", "--gamma", "counting=3"]);
    let rows: Vec<serde_json::Value> = run.stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows[1]["total"], 0.8125 + 2.0 * 3.0);
}

#[test]
fn provenance_echoes_seed_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.jsonl");
    let run = gvf(&["augment", "--input", &fx("scenes_960.jsonl"), "--output", out.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let first = fs::read_to_string(&out).unwrap().lines().next().unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["_provenance"]["seed"], 9);
    assert_eq!(v["_provenance"]["tool"], "gvf");
    assert_eq!(v["_provenance"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let out = dir.path().join("out.jsonl");
    let m = missing.to_str().unwrap();

    assert_eq!(gvf(&["validate", "--input", m]).code, 2);
    assert_eq!(gvf(&["augment", "--input", m, "--output", out.to_str().unwrap()]).code, 2);

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"record_id\":\"x\",\"objects\":[]}\n").unwrap();
    assert_eq!(gvf(&["augment", "--input", bad.to_str().unwrap(), "--output", out.to_str().unwrap()]).code, 3);
    assert!(!out.exists(), "nothing is written on failure");

    let scenes = fx("scenes_960.jsonl");
    assert_eq!(gvf(&["augment", "--input", &scenes, "--output", out.to_str().unwrap(), "--ratio", "1.5"]).code, 4);
    assert_eq!(gvf(&["score", "--input", &scenes, "--lambda", "-1"]).code, 4);

    let cfg = dir.path().join("gvf.toml");
    fs::write(&cfg, "[scoring]\nbogus = 1\n").unwrap();
    assert_eq!(gvf(&["--config", cfg.to_str().unwrap(), "validate", "--input", &scenes]).code, 4);
    assert_eq!(gvf(&["frobnicate"]).code, 4);
    assert_eq!(gvf(&["--help"]).code, 0);
}

#[test]
fn config_file_overrides_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gvf.toml");
    fs::write(&cfg, "[scoring]\nlambda = 0.5\n").unwrap();
    let input = dir.path().join("req.jsonl");
    fs::write(
        &input,
        "{\"record_id\":\"a\",\"answer\":\"Three.\",\"anchors\":[\"[FACT: COUNT=2]\"],\"ce_loss\":1.0}\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let i = input.to_str().unwrap();
    let total = |args: &[&str]| -> f64 {
        let run = gvf(args);
        assert_eq!(run.code, 0, "{}", run.stderr);
        let row: serde_json::Value = serde_json::from_str(run.stdout.lines().nth(1).unwrap()).unwrap();
        row["total"].as_f64().unwrap()
    };
    assert_eq!(total(&["score", "--input", i]), 2.0);
    assert_eq!(total(&["--config", c, "score", "--input", i]), 1.5);
    assert_eq!(total(&["--config", c, "score", "--input", i, "--lambda", "3"]), 4.0);
}

#[test]
fn split_and_sweep_commands() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("parts");
    let run = gvf(&["split", "--input", &fx("scenes_1200.jsonl"), "--output", prefix.to_str().unwrap()]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let summary: serde_json::Value = serde_json::from_str(&run.stdout).unwrap();
    assert_eq!(summary["train_records"], 960);
    assert_eq!(summary["test_records"], 240);
    let test = fs::read_to_string(dir.path().join("parts.test.jsonl")).unwrap();
    assert_eq!(test.lines().count(), 241);

    let report = dir.path().join("report.json");
    let ev = gvf(&[
        "evaluate",
        "--gold",
        &fx("oeq_gold.jsonl"),
        "--predictions",
        &fx("oeq_predictions.jsonl"),
        "--output",
        report.to_str().unwrap(),
    ]);
    assert_eq!(ev.code, 0, "{}", ev.stderr);

    let input = dir.path().join("req.jsonl");
    fs::write(
        &input,
        concat!(
            "{\"record_id\":\"a\",\"answer\":\"Three.\",\"anchors\":[\"[FACT: COUNT=2]\"],\"ce_loss\":1.0}\n",
            "{\"record_id\":\"b\",\"answer\":\"Two.\",\"anchors\":[\"[FACT: COUNT=2]\"],\"ce_loss\":0.5}\n",
        ),
    )
    .unwrap();
    let metric = format!("0.5={}", report.display());
    let run = gvf(&["sweep", "--input", input.to_str().unwrap(), "--lambdas", "0,0.5,1", "--metrics", &metric]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let lines: Vec<&str> = run.stdout.lines().collect();
    assert!(lines[0].starts_with("# {\"_provenance\""));
    assert_eq!(lines[1], "lambda\tmean_fcl\tmean_total\toeq_proxy");
    assert_eq!(lines.len(), 5);
    assert!(lines[3].starts_with("0.5\t0.5\t1\t"), "{}", lines[3]);
}
