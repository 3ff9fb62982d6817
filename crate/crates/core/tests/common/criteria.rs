//! One check per acceptance criterion. Each returns a short detail line on
//! success and the first failure otherwise.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gvf_core::augment::{augment_dataset, split_lines, AugmentConfig, AugmentedRecord, SceneRecord, Task, Templates};
use gvf_core::dsl::{self, TokenKind};
use gvf_core::eval::{average, fmt3, ReferenceTables};
use gvf_core::fact::{PositionRelation, SizeRelation, Span};
use gvf_core::jsonl;
use gvf_core::scoring::FclBreakdown;
use gvf_core::{contradicts, pair_claims, total_loss, AnchorSet, Claim, FactValue, FactualAnchor, Lexicons, ScoringConfig, VhType};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::fixtures::{self, fixtures_dir};
use super::oracle;

pub type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, || format!("{what} took {elapsed:?}, limit {limit:?}"))
}

// ---------------------------------------------------------------------------

pub fn dsl_round_trip() -> Outcome {
    let lex = Lexicons::default_fixture();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut per_type = [0usize; 8];
    for i in 0..1000 {
        let t = VhType::ALL[i % 8];
        let value = oracle::random_value(&mut rng, t, &lex);
        let anchor = FactualAnchor::new(value).map_err(|e| e.to_string())?;
        let text = dsl::serialize(&anchor);
        let back = dsl::parse_anchor(&text, &lex).map_err(|e| format!("{text}: {e}"))?;
        ensure(back == anchor, || format!("{text} parsed to {back:?}, expected {anchor:?}"))?;
        per_type[t.index()] += 1;
    }

    let examples: [(&str, TokenKind, VhType, Option<&str>, &str); 4] = [
        ("[FACT: COUNT=2]", TokenKind::Fact, VhType::Counting, None, "2"),
        ("[FACT: EXISTENCE_APPLE=TRUE]", TokenKind::Fact, VhType::Existence, Some("apple"), "TRUE"),
        ("[FACT: COUNT=?]", TokenKind::Query, VhType::Counting, None, "?"),
        ("[CHECK_COLOR: RED]", TokenKind::Check, VhType::Color, None, "RED"),
    ];
    for (text, kind, vh_type, subject, payload) in examples {
        let tok = dsl::parse_token(text).map_err(|e| format!("{text}: {e}"))?;
        ensure(
            tok.kind == kind && tok.vh_type == vh_type && tok.subject.as_deref() == subject && tok.payload == payload,
            || format!("{text} parsed to {tok:?}"),
        )?;
    }
    let two = dsl::parse_anchor("[FACT: COUNT=2]", &lex).map_err(|e| e.to_string())?;
    ensure(*two.value() == FactValue::Counting { count: 2, subject: None }, || format!("{two:?}"))?;
    let apple = dsl::parse_anchor("[FACT: EXISTENCE_APPLE=TRUE]", &lex).map_err(|e| e.to_string())?;
    ensure(
        *apple.value()
            == FactValue::Existence {
                subject: "apple".into(),
                present: true,
            },
        || format!("{apple:?}"),
    )?;

    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1), "round trip")?;
    ensure(per_type.iter().all(|&n| n == 125), || format!("per-type counts {per_type:?}"))?;
    Ok(format!("1000 anchors (125 per type) and 4 example tokens in {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------

fn claim(v: FactValue) -> Claim {
    Claim::new(v, Span::new(0, 1))
}

fn check_pair(c: FactValue, a: FactValue, lex: &Lexicons, n: &mut usize) -> Result<(), String> {
    let anchor = FactualAnchor::new(a.clone()).map_err(|e| e.to_string())?;
    let got = contradicts(&claim(c.clone()), &anchor, lex).map_err(|e| e.to_string())?;
    let want = oracle::expected_indicator(&c, &a, lex);
    ensure(got <= 1, || format!("indicator {got} outside {{0,1}}"))?;
    ensure(got == want, || format!("claim {c:?} vs anchor {a:?}: got {got}, expected {want}"))?;
    *n += 1;
    Ok(())
}

fn vocab_words(lex: &Lexicons, t: VhType) -> (Vec<String>, Vec<String>) {
    let m = oracle::canon_map(lex, t);
    let mut canon: Vec<String> = m.values().cloned().collect::<HashSet<_>>().into_iter().collect();
    canon.sort();
    let mut all: Vec<String> = m.into_keys().collect();
    all.sort();
    (canon, all)
}

pub fn contradiction_tables() -> Outcome {
    let lex = Lexicons::default_fixture();
    let start = Instant::now();
    let mut n = 0;

    for t in [VhType::Color, VhType::Shape, VhType::Orientation] {
        let (canon, all) = vocab_words(&lex, t);
        for c in &all {
            for a in &canon {
                let mk = |v: &str| match t {
                    VhType::Color => FactValue::Color {
                        subject: "ball".into(),
                        color: v.into(),
                    },
                    VhType::Shape => FactValue::Shape {
                        subject: "ball".into(),
                        shape: v.into(),
                    },
                    _ => FactValue::Orientation {
                        subject: "ball".into(),
                        orientation: v.into(),
                    },
                };
                check_pair(mk(c), mk(a), &lex, &mut n)?;
            }
        }
    }

    for c in 0..=20u32 {
        for a in 0..=20u32 {
            check_pair(
                FactValue::Counting { count: c, subject: None },
                FactValue::Counting { count: a, subject: None },
                &lex,
                &mut n,
            )?;
        }
    }
    for c in [false, true] {
        for a in [false, true] {
            let e = |present| FactValue::Existence {
                subject: "dog".into(),
                present,
            };
            check_pair(e(c), e(a), &lex, &mut n)?;
        }
    }

    let pairs = [("dog", "cat"), ("cat", "dog")];
    for (ca, cb) in pairs {
        for rc in SizeRelation::ALL {
            for ra in SizeRelation::ALL {
                let s = |a: &str, b: &str, relation| FactValue::Size {
                    subject_a: a.into(),
                    subject_b: b.into(),
                    relation,
                };
                check_pair(s(ca, cb, rc), s("dog", "cat", ra), &lex, &mut n)?;
            }
        }
        for rc in PositionRelation::ALL {
            for ra in PositionRelation::ALL {
                let p = |a: &str, b: &str, relation| FactValue::Position {
                    subject_a: a.into(),
                    subject_b: b.into(),
                    relation,
                };
                check_pair(p(ca, cb, rc), p("dog", "cat", ra), &lex, &mut n)?;
            }
        }
    }

    // Spot rows of the flip table written out by hand.
    let p = |a: &str, b: &str, relation| FactValue::Position {
        subject_a: a.into(),
        subject_b: b.into(),
        relation,
    };
    let dog_left_of_cat = FactualAnchor::new(p("dog", "cat", PositionRelation::LeftOf)).unwrap();
    for (claim_value, want) in [
        (p("cat", "dog", PositionRelation::RightOf), 0),
        (p("cat", "dog", PositionRelation::LeftOf), 1),
        (p("cat", "dog", PositionRelation::On), 1),
        (p("dog", "cat", PositionRelation::LeftOf), 0),
    ] {
        let got = contradicts(&claim(claim_value.clone()), &dog_left_of_cat, &lex).unwrap();
        ensure(got == want, || format!("{claim_value:?} vs dog LEFT_OF cat: got {got}, expected {want}"))?;
    }

    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(5), "enumeration")?;
    Ok(format!("{n} claim/anchor pairs match the table in {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------

fn random_anchor_set<R: Rng>(rng: &mut R, lex: &Lexicons) -> Vec<FactualAnchor> {
    let k = rng.gen_range(1..=8);
    let mut out: Vec<FactualAnchor> = Vec::new();
    while out.len() < k {
        let t = *VhType::ALL.choose(rng).unwrap();
        let a = FactualAnchor::new(oracle::random_value(rng, t, lex)).unwrap();
        let clash = out.iter().any(|b| oracle::same_key(a.value(), b.value()));
        if !clash {
            out.push(a);
        }
    }
    out
}

/// A claim sharing `anchor`'s key: either the true value or a random one of the same type.
fn claim_for<R: Rng>(rng: &mut R, anchor: &FactualAnchor, lex: &Lexicons) -> FactValue {
    if rng.gen_bool(0.4) {
        let v = anchor.value().clone();
        return if rng.gen_bool(0.3) { oracle::swap_subjects(&v) } else { v };
    }
    loop {
        let mut v = oracle::random_value(rng, anchor.vh_type(), lex);
        match (&mut v, anchor.value()) {
            (
                FactValue::Size { subject_a, subject_b, .. },
                FactValue::Size {
                    subject_a: a, subject_b: b, ..
                },
            )
            | (
                FactValue::Position { subject_a, subject_b, .. },
                FactValue::Position {
                    subject_a: a, subject_b: b, ..
                },
            ) => {
                let swap = rng.gen_bool(0.3);
                *subject_a = if swap { b.clone() } else { a.clone() };
                *subject_b = if swap { a.clone() } else { b.clone() };
            }
            (FactValue::Existence { subject, .. }, _)
            | (FactValue::Shape { subject, .. }, _)
            | (FactValue::Color { subject, .. }, _)
            | (FactValue::Orientation { subject, .. }, _) => *subject = anchor.value().subject().unwrap().to_string(),
            (FactValue::Ocr { subject, .. }, _) | (FactValue::Counting { subject, .. }, _) => {
                *subject = anchor.value().subject().map(str::to_string)
            }
            _ => unreachable!("same type as the anchor"),
        }
        if oracle::same_key(&v, anchor.value()) {
            return v;
        }
    }
}

pub fn fcl_arithmetic() -> Outcome {
    let lex = Lexicons::default_fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut contradicted = 0usize;
    for case in 0..500 {
        let anchors = random_anchor_set(&mut rng, &lex);
        let mut values = Vec::new();
        for a in &anchors {
            for _ in 0..rng.gen_range(0..=2) {
                values.push(claim_for(&mut rng, a, &lex));
            }
        }
        for _ in 0..rng.gen_range(0..=3) {
            let t = *VhType::ALL.choose(&mut rng).unwrap();
            values.push(oracle::random_value(&mut rng, t, &lex));
        }
        let mut starts: Vec<usize> = (0..values.len() * 4).collect();
        starts.shuffle(&mut rng);
        let claims: Vec<Claim> = values
            .into_iter()
            .zip(starts)
            .map(|(v, s)| Claim::new(v, Span::new(s, s + 1)))
            .collect();

        let mut gamma = [0.0; 8];
        for g in &mut gamma {
            *g = rng.gen_range(0.0..5.0);
        }
        let lambda = rng.gen_range(0.0..10.0);
        let ce = rng.gen_range(0.0..8.0);
        let cfg = ScoringConfig::new(lambda, gamma).map_err(|e| e.to_string())?;

        let set = AnchorSet::new(anchors.clone()).map_err(|e| e.to_string())?;
        let fcl = FclBreakdown::from_pairings(&pair_claims(&set, &claims, &lex), &cfg);
        let (want, want_ind) = oracle::brute_force_fcl(&anchors, &claims, &gamma, &lex);
        ensure(fcl.indicators() == want_ind, || {
            format!("case {case}: indicators {:?}, expected {want_ind:?}", fcl.indicators())
        })?;
        ensure(fcl.total == want, || format!("case {case}: fcl {} != {want}", fcl.total))?;
        let total = total_loss(ce, &fcl, &cfg);
        ensure(total == ce + lambda * want, || format!("case {case}: total {total} != {}", ce + lambda * want))?;
        let zero = cfg.with_lambda(0.0).map_err(|e| e.to_string())?;
        ensure(total_loss(ce, &fcl, &zero) == ce, || format!("case {case}: λ=0 total differs from ce"))?;
        contradicted += want_ind.iter().filter(|&&i| i == 1).count();
    }
    ensure(contradicted > 100, || format!("only {contradicted} contradicted anchors; generator too weak"))?;
    Ok(format!("500 cases exact, {contradicted} contradicted anchors exercised, λ=0 reduces to ce"))
}

// ---------------------------------------------------------------------------

fn sha_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_scenes(path: &Path) -> Result<Vec<SceneRecord>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let (rows, errors) = jsonl::parse_lines::<SceneRecord>(&jsonl::data_lines(&text));
    ensure(errors.is_empty(), || format!("{errors:?}"))?;
    Ok(rows.into_iter().map(|(_, s)| s).collect())
}

fn per_type_counts<'a>(types: impl Iterator<Item = &'a VhType>) -> BTreeMap<VhType, usize> {
    let mut m = BTreeMap::new();
    for t in types {
        *m.entry(*t).or_default() += 1;
    }
    m
}

pub fn counterfactual_soundness() -> Outcome {
    let lex = Lexicons::default_fixture();
    let templates = Templates::default_fixture();
    let input = fixtures_dir().join("scenes_960.jsonl");
    let scenes = read_scenes(&input)?;
    let counts = per_type_counts(scenes.iter().map(|s| &s.vh_type));
    ensure(scenes.len() == 960 && counts.values().all(|&n| n == 120), || format!("fixture counts {counts:?}"))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = AugmentConfig::default();
    ensure(cfg.seed == 42 && cfg.counterfactual_ratio == 1.0, || format!("defaults {cfg:?}"))?;
    let mut hashes = Vec::new();
    let mut last = String::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}.jsonl"));
        augment_dataset(&input, &out, &cfg, &lex, &templates, None).map_err(|e| e.to_string())?;
        last = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
        hashes.push(sha_hex(last.as_bytes()));
    }
    ensure(hashes[0] == hashes[1], || format!("runs differ: {hashes:?}"))?;

    let (records, errors) = jsonl::parse_lines::<AugmentedRecord>(&jsonl::data_lines(&last));
    ensure(errors.is_empty(), || format!("{errors:?}"))?;
    ensure(records.len() == 1920, || format!("{} records, expected 1920", records.len()))?;

    let mut cf = 0;
    for (line, r) in &records {
        r.validate(&lex).map_err(|e| format!("line {line}: {e}"))?;
        if r.task != Task::Counterfactual {
            continue;
        }
        cf += 1;
        let anchors = r.anchor_set(&lex).map_err(|e| e.to_string())?;
        let tok = dsl::parse_token(r.check_token.as_deref().unwrap()).map_err(|e| e.to_string())?;
        let claimed = dsl::token_value(&tok, r.question_subject.as_deref(), &lex).map_err(|e| e.to_string())?;
        let hits: Vec<&FactualAnchor> = anchors
            .iter()
            .filter(|a| oracle::same_key(&claimed, a.value()) && oracle::expected_indicator(&claimed, a.value(), &lex) == 1)
            .collect();
        ensure(hits.len() == 1, || format!("{}: {} contradicted anchors", r.record_id, hits.len()))?;
        let target = hits[0];
        ensure(Some(target.anchor_id()) == r.target_anchor.as_deref(), || {
            format!("{}: contradicted {} but target is {:?}", r.record_id, target.anchor_id(), r.target_anchor)
        })?;
        ensure(claimed != *target.value(), || format!("{}: perturbed value equals truth", r.record_id))?;
    }
    ensure(cf == 960, || format!("{cf} counter-factual records, expected 960"))?;
    Ok(format!("1920 records, 960 counter-factuals each contradict one anchor, seed-42 runs identical ({})", &hashes[0][..12]))
}

// ---------------------------------------------------------------------------

pub fn split_stratification() -> Outcome {
    let text = std::fs::read_to_string(fixtures_dir().join("scenes_1200.jsonl")).map_err(|e| e.to_string())?;
    let lines = jsonl::data_lines(&text);
    let scenes = read_scenes(&fixtures_dir().join("scenes_1200.jsonl"))?;
    let counts = per_type_counts(scenes.iter().map(|s| &s.vh_type));
    ensure(counts.len() == 8 && counts.values().all(|&n| n == 150), || format!("fixture counts {counts:?}"))?;

    let (train, test, summary) = split_lines(&lines, 0.8, 42).map_err(|e| e.to_string())?;
    let type_of = |l: &str| serde_json::from_str::<SceneRecord>(l).unwrap();
    let train_types = per_type_counts(train.iter().map(|l| type_of(l).vh_type).collect::<Vec<_>>().iter());
    let test_types = per_type_counts(test.iter().map(|l| type_of(l).vh_type).collect::<Vec<_>>().iter());
    for t in VhType::ALL {
        ensure(train_types.get(&t) == Some(&120) && test_types.get(&t) == Some(&30), || {
            format!("{}: {:?} train / {:?} test", t.label(), train_types.get(&t), test_types.get(&t))
        })?;
        let s = &summary.per_type[&t];
        ensure(s.train == 120 && s.test == 30, || format!("summary for {}: {s:?}", t.label()))?;
    }
    let train_ids: HashSet<String> = train.iter().map(|l| type_of(l).record_id).collect();
    let test_ids: HashSet<String> = test.iter().map(|l| type_of(l).record_id).collect();
    ensure(train_ids.is_disjoint(&test_ids), || "train and test overlap".into())?;
    let all: HashSet<String> = scenes.iter().map(|s| s.record_id.clone()).collect();
    let union: HashSet<String> = train_ids.union(&test_ids).cloned().collect();
    ensure(union == all, || "union does not cover the input".into())?;
    Ok("120/30 per type over 8 types, disjoint, union complete".into())
}

// ---------------------------------------------------------------------------

pub fn table_fixtures() -> Outcome {
    let tables = ReferenceTables::shipped();
    let mut detail = Vec::new();
    for (name, stated) in [("oeq", ["0.229", "0.296", "0.336"]), ("ynq", ["0.557", "0.588", "0.613"])] {
        let table = tables.get(name).ok_or_else(|| format!("table {name} missing"))?;
        let columns = table.columns();
        ensure(columns.len() == 3, || format!("{name}: {} columns", columns.len()))?;
        for ((method, values), want) in columns.iter().zip(stated) {
            ensure(values.len() == 8, || format!("{name}/{method}: {} types", values.len()))?;
            let got = fmt3(average(values));
            ensure(got == want, || format!("{name}/{method}: average {got}, stated {want}"))?;
            let plain = values.values().sum::<f64>() / 8.0;
            ensure(format!("{plain:.3}") == want, || format!("{name}/{method}: plain mean {plain}"))?;
        }
        detail.push(format!("{name} {}", stated.join("/")));
    }
    Ok(detail.join(", "))
}

// ---------------------------------------------------------------------------

pub struct CliRun {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn gvf(args: &[&str]) -> CliRun {
    let out = Command::new(env!("CARGO_BIN_EXE_gvf"))
        .args(args)
        .env_remove("GVF_CONFIG")
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs");
    CliRun {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn step(args: &[&str]) -> Result<CliRun, String> {
    let run = gvf(args);
    ensure(run.code == 0, || format!("gvf {} exited {}: {}", args.join(" "), run.code, run.stderr))?;
    Ok(run)
}

/// validate → augment → validate → score → evaluate; returns hashes of every output.
fn pipeline(dir: &Path) -> Result<(Vec<String>, String), String> {
    let fx = fixtures_dir();
    let scenes = fx.join("scenes_960.jsonl");
    let aug = dir.join("augmented.jsonl");
    let scores = dir.join("scores.jsonl");
    let report = dir.join("report.json");
    let p = |p: &Path| p.to_str().unwrap().to_string();

    step(&["validate", "--input", &p(&scenes)])?;
    step(&["augment", "--input", &p(&scenes), "--output", &p(&aug), "--seed", "42"])?;
    step(&["validate", "--input", &p(&aug)])?;
    step(&["score", "--input", &p(&aug), "--output", &p(&scores)])?;
    let eval = step(&[
        "evaluate",
        "--gold",
        &p(&fx.join("oeq_gold.jsonl")),
        "--predictions",
        &p(&fx.join("oeq_predictions.jsonl")),
        "--output",
        &p(&report),
    ])?;

    let score_text = std::fs::read_to_string(&scores).map_err(|e| e.to_string())?;
    let bad = score_text.lines().skip(1).filter(|l| !l.contains("\"fcl\":0.0")).count();
    ensure(bad == 0, || format!("{bad} reference answers scored above zero"))?;

    let mut hashes = Vec::new();
    for f in [&aug, &scores, &report] {
        hashes.push(sha_hex(&std::fs::read(f).map_err(|e| e.to_string())?));
    }
    hashes.push(sha_hex(eval.stdout.as_bytes()));
    Ok((hashes, eval.stdout))
}

pub fn end_to_end_smoke() -> Outcome {
    let start = Instant::now();
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (ha, table) = pipeline(a.path())?;
    let first = start.elapsed();
    let (hb, _) = pipeline(b.path())?;
    ensure(ha == hb, || format!("output hashes differ between runs: {ha:?} vs {hb:?}"))?;
    within(first, Duration::from_secs(30), "pipeline")?;
    let avg = table
        .lines()
        .find(|l| l.starts_with("Average"))
        .and_then(|l| l.split_whitespace().last())
        .unwrap_or_default()
        .to_string();
    ensure(avg == "0.336", || format!("evaluate printed average {avg:?}"))?;
    Ok(format!("pipeline in {first:.2?}, 4 output hashes stable across runs, evaluate average {avg}"))
}

/// Fixture files on disk equal freshly generated ones.
pub fn fixtures_current() -> Outcome {
    let dir = fixtures_dir();
    let (gold, preds) = fixtures::oeq_files().map_err(|e| e.to_string())?;
    for (name, want) in [
        ("scenes_960.jsonl", fixtures::scenes_jsonl(120, "s")),
        ("scenes_1200.jsonl", fixtures::scenes_jsonl(150, "p")),
        ("oeq_gold.jsonl", gold),
        ("oeq_predictions.jsonl", preds),
    ] {
        let have = std::fs::read_to_string(dir.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(have == want, || format!("{name} is stale; run `cargo run --example make_fixtures`"))?;
    }
    Ok("4 fixture files match the generator".into())
}
