use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use log::info;
use serde::{Deserialize, Serialize};

use gvf_core::augment::{self, AugmentError, AugmentedRecord, SceneRecord};
use gvf_core::config::Settings;
use gvf_core::eval::{
    self, render_table, EvalReport, GoldRecord, Prediction, RecordLoss, ReferenceTables, SweepPoint,
};
use gvf_core::extract::QuestionContext;
use gvf_core::fact::VhType;
use gvf_core::jsonl::{self, LineError, Provenance, PROVENANCE_KEY};
use gvf_core::scoring::{score_batch, total_loss, AnchorContribution, ScoreRequest, ScoringConfig};

use super::{load_settings, Cli, CliError, Command, Metric, Weights};

/// Writes to stdout; a closed pipe (`gvf ... | head`) is not an error.
fn emit(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    jsonl::read_text(path).map_err(|e| CliError::Io(e.to_string()))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => jsonl::write_text(p, text).map_err(|e| CliError::Io(e.to_string())),
        None => {
            emit(text)
        }
    }
}

fn report_lines(errors: &[LineError]) {
    for e in errors {
        eprintln!("{e}");
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    emit(&format!("{}\n", serde_json::to_string_pretty(value).expect("summary serializes")))
}

fn apply_weights(base: &ScoringConfig, lambda: Option<f64>, gamma: &[(VhType, f64)]) -> Result<ScoringConfig, CliError> {
    let mut cfg = base.clone();
    if let Some(l) = lambda {
        cfg = cfg.with_lambda(l).map_err(|e| CliError::Config(e.to_string()))?;
    }
    for (t, w) in gamma {
        cfg = cfg.with_gamma(*t, *w).map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(cfg)
}

fn augment_error(e: AugmentError) -> CliError {
    match e {
        AugmentError::Lines(errors) => {
            report_lines(&errors);
            CliError::Data(format!("{} invalid line(s)", errors.len()))
        }
        AugmentError::Io(e) => CliError::Io(e.to_string()),
        AugmentError::BadFraction(_) | AugmentError::BadRatio(_) | AugmentError::Template(_) => {
            CliError::Config(e.to_string())
        }
        other => CliError::Data(other.to_string()),
    }
}

pub fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let mut settings = load_settings(&cli)?;
    match cli.command {
        Command::Validate { input } => validate(&input, &settings),
        Command::Augment {
            input,
            output,
            seed,
            ratio,
            style,
        } => {
            if let Some(s) = seed {
                settings.augment.seed = s;
            }
            if let Some(r) = ratio {
                settings.augment.counterfactual_ratio = r;
            }
            if let Some(s) = style {
                settings.augment.style = s;
            }
            augment_cmd(&input, &output, &settings)
        }
        Command::Split {
            input,
            output,
            fraction,
            seed,
        } => {
            if let Some(s) = seed {
                settings.augment.seed = s;
            }
            split_cmd(&input, &output, fraction, &settings)
        }
        Command::Score {
            input,
            predictions,
            output,
            weights,
        } => score_cmd(&input, predictions.as_deref(), output.as_deref(), &weights, &settings),
        Command::Evaluate {
            gold,
            predictions,
            metric,
            method,
            output,
            reference,
        } => match reference {
            Some(name) => reference_cmd(&name),
            None => evaluate_cmd(
                &gold,
                predictions.as_deref().expect("required by clap"),
                metric,
                &method,
                output.as_deref(),
                &settings,
            ),
        },
        Command::Sweep {
            input,
            lambdas,
            metrics,
            output,
            gamma,
        } => sweep_cmd(&input, &lambdas, &metrics, output.as_deref(), &gamma, &settings),
    }
}

#[derive(Serialize)]
struct ValidateSummary {
    records: usize,
    errors: usize,
}

fn validate(input: &Path, settings: &Settings) -> Result<ExitCode, CliError> {
    let text = read_input(input)?;
    let lines = jsonl::data_lines(&text);
    if lines.is_empty() {
        eprintln!("{}: no records", input.display());
        print_json(&ValidateSummary { records: 0, errors: 1 })?;
        return Ok(ExitCode::from(1));
    }
    let lex = &settings.lexicons;
    let mut errors = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for &(line, raw) in &lines {
        let value: serde_json::Value = match serde_json::from_str(raw) {
            Ok(v) => v,
            Err(e) => {
                errors.push(LineError::new(line, e.to_string()));
                continue;
            }
        };
        let result: Result<String, String> = if value.get("instruction").is_some() {
            serde_json::from_value::<AugmentedRecord>(value)
                .map_err(|e| e.to_string())
                .and_then(|r| r.validate(lex).map(|_| r.record_id).map_err(|e| e.to_string()))
        } else if value.get("objects").is_some() {
            serde_json::from_value::<SceneRecord>(value)
                .map_err(|e| e.to_string())
                .and_then(|s| augment::derive_anchors(&s, lex).map(|_| s.record_id).map_err(|e| e.to_string()))
        } else {
            Err("neither a scene record nor an augmented record".to_string())
        };
        match result {
            Ok(id) => {
                if let Some(prev) = seen.insert(id.clone(), line) {
                    errors.push(LineError::new(line, format!("duplicate record_id {id:?} (first on line {prev})")));
                }
            }
            Err(msg) => errors.push(LineError::new(line, msg)),
        }
    }
    report_lines(&errors);
    print_json(&ValidateSummary {
        records: lines.len(),
        errors: errors.len(),
    })?;
    Ok(ExitCode::from(u8::from(!errors.is_empty())))
}

fn augment_cmd(input: &Path, output: &Path, settings: &Settings) -> Result<ExitCode, CliError> {
    if !input.is_file() {
        return Err(CliError::Io(format!("input {} does not exist", input.display())));
    }
    let provenance = Provenance::new("augment", Some(settings.augment.seed), &settings.hash());
    let summary = augment::augment_dataset(
        input,
        output,
        &settings.augment,
        &settings.lexicons,
        &settings.templates,
        Some(&provenance),
    )
    .map_err(augment_error)?;
    info!("wrote {} records to {}", summary.records_out, output.display());
    print_json(&summary)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SplitOutput {
    train_path: PathBuf,
    test_path: PathBuf,
    #[serde(flatten)]
    summary: augment::SplitSummary,
}

fn split_cmd(input: &Path, prefix: &Path, fraction: f64, settings: &Settings) -> Result<ExitCode, CliError> {
    if !input.is_file() {
        return Err(CliError::Io(format!("input {} does not exist", input.display())));
    }
    let seed = settings.augment.seed;
    let provenance = Provenance::new("split", Some(seed), &settings.hash());
    let (train_path, test_path, summary) =
        augment::split_dataset(input, fraction, seed, prefix, Some(&provenance)).map_err(augment_error)?;
    info!("{} train / {} test records", summary.train_records, summary.test_records);
    print_json(&SplitOutput {
        train_path,
        test_path,
        summary,
    })?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuestionSpec {
    vh_type: VhType,
    #[serde(default)]
    subject: Option<String>,
}

/// One line of a score request file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreInput {
    record_id: String,
    answer: String,
    anchors: Vec<String>,
    #[serde(default)]
    ce_loss: Option<f64>,
    #[serde(default)]
    question: Option<QuestionSpec>,
}

#[derive(Serialize)]
struct ScoreOutput {
    record_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    fcl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ce_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    indicators: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_anchor: Option<Vec<AnchorContribution>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl ScoreOutput {
    fn error(record_id: String, error: String) -> Self {
        ScoreOutput {
            record_id,
            fcl: None,
            ce_loss: None,
            total: None,
            indicators: None,
            per_anchor: None,
            error: Some(error),
        }
    }
}

struct Requests {
    requests: Vec<ScoreRequest>,
    ce: Vec<Option<f64>>,
    /// Records that could not be turned into a request, with their position.
    rejected: Vec<(usize, ScoreOutput)>,
}

fn load_predictions(path: &Path) -> Result<Vec<Prediction>, CliError> {
    let text = read_input(path)?;
    let lines = jsonl::data_lines(&text);
    let (preds, errors) = jsonl::parse_lines::<Prediction>(&lines);
    if !errors.is_empty() {
        report_lines(&errors);
        return Err(CliError::Data(format!("{} invalid prediction line(s)", errors.len())));
    }
    Ok(preds.into_iter().map(|(_, p)| p).collect())
}

fn load_requests(input: &Path, predictions: Option<&Path>) -> Result<Requests, CliError> {
    let text = read_input(input)?;
    let lines = jsonl::data_lines(&text);
    if lines.is_empty() {
        return Err(CliError::Data(format!("{}: no records", input.display())));
    }
    let preds: Option<HashMap<String, String>> = predictions
        .map(load_predictions)
        .transpose()?
        .map(|v| v.into_iter().map(|p| (p.record_id, p.text)).collect());

    let mut out = Requests {
        requests: Vec::new(),
        ce: Vec::new(),
        rejected: Vec::new(),
    };
    let mut errors = Vec::new();
    for (pos, &(line, raw)) in lines.iter().enumerate() {
        let augmented = raw.contains("\"instruction\"");
        if augmented {
            match serde_json::from_str::<AugmentedRecord>(raw) {
                Ok(r) => {
                    let answer = match &preds {
                        Some(map) => match map.get(&r.record_id) {
                            Some(t) => t.clone(),
                            None => {
                                out.rejected
                                    .push((pos, ScoreOutput::error(r.record_id.clone(), "no prediction".into())));
                                continue;
                            }
                        },
                        None => r.expected_answer.clone(),
                    };
                    out.requests.push(ScoreRequest {
                        question: Some(r.question_context()),
                        record_id: r.record_id,
                        answer,
                        anchors: r.anchors,
                    });
                    out.ce.push(None);
                }
                Err(e) => errors.push(LineError::new(line, e.to_string())),
            }
        } else {
            match serde_json::from_str::<ScoreInput>(raw) {
                Ok(s) => {
                    if let Some(ce) = s.ce_loss {
                        if !(ce.is_finite() && ce >= 0.0) {
                            errors.push(LineError::new(line, format!("ce_loss must be non-negative, got {ce}")));
                            continue;
                        }
                    }
                    let answer = preds
                        .as_ref()
                        .and_then(|m| m.get(&s.record_id).cloned())
                        .unwrap_or(s.answer);
                    out.requests.push(ScoreRequest {
                        record_id: s.record_id,
                        answer,
                        anchors: s.anchors,
                        question: s.question.map(|q| QuestionContext {
                            vh_type: q.vh_type,
                            subject: q.subject,
                        }),
                    });
                    out.ce.push(s.ce_loss);
                }
                Err(e) => errors.push(LineError::new(line, e.to_string())),
            }
        }
    }
    if !errors.is_empty() {
        report_lines(&errors);
        return Err(CliError::Data(format!("{} invalid input line(s)", errors.len())));
    }
    Ok(out)
}

fn score_cmd(
    input: &Path,
    predictions: Option<&Path>,
    output: Option<&Path>,
    weights: &Weights,
    settings: &Settings,
) -> Result<ExitCode, CliError> {
    let cfg = apply_weights(&settings.scoring, weights.lambda, &weights.gamma)?;
    let Requests {
        requests,
        ce,
        mut rejected,
    } = load_requests(input, predictions)?;
    info!("scoring {} record(s) with lambda {}", requests.len(), cfg.lambda());
    let results = score_batch(&requests, &cfg, &settings.lexicons);

    let mut outputs: Vec<ScoreOutput> = Vec::with_capacity(results.len() + rejected.len());
    let mut failures = rejected.len();
    for ((req, result), ce) in requests.iter().zip(results).zip(ce) {
        outputs.push(match result {
            Ok(b) => ScoreOutput {
                record_id: req.record_id.clone(),
                fcl: Some(b.total),
                ce_loss: ce,
                total: ce.map(|c| total_loss(c, &b, &cfg)),
                indicators: Some(b.indicators()),
                per_anchor: Some(b.per_anchor),
                error: None,
            },
            Err(e) => {
                failures += 1;
                eprintln!("{e}");
                ScoreOutput::error(req.record_id.clone(), e.error.to_string())
            }
        });
    }
    // Put rejected records back at their input positions.
    rejected.sort_by_key(|(pos, _)| *pos);
    for (pos, o) in rejected {
        eprintln!("record {}: {}", o.record_id, o.error.as_deref().unwrap_or_default());
        outputs.insert(pos.min(outputs.len()), o);
    }

    let provenance = Provenance::new("score", Some(settings.augment.seed), &config_hash_with(settings, &cfg));
    write_output(output, &jsonl::to_jsonl(Some(&provenance), &outputs))?;
    if failures > 0 {
        return Err(CliError::Data(format!("{failures} record(s) could not be scored")));
    }
    Ok(ExitCode::SUCCESS)
}

fn config_hash_with(settings: &Settings, scoring: &ScoringConfig) -> String {
    let mut s = settings.clone();
    s.scoring = scoring.clone();
    s.hash()
}

fn reference_cmd(name: &str) -> Result<ExitCode, CliError> {
    let tables = ReferenceTables::shipped();
    let table = tables
        .get(name)
        .ok_or_else(|| CliError::Config(format!("unknown reference table {name:?} (expected oeq or ynq)")))?;
    emit(&render_table(&table.columns()))?;
    Ok(ExitCode::SUCCESS)
}

fn load_gold(args: &[String], settings: &Settings) -> Result<Vec<GoldRecord>, CliError> {
    let mut gold = Vec::new();
    for arg in args {
        let (subset, path) = match arg.split_once('=') {
            Some((name, path)) => (name.to_string(), PathBuf::from(path)),
            None => ("all".to_string(), PathBuf::from(arg)),
        };
        let text = read_input(&path)?;
        let lines = jsonl::data_lines(&text);
        let (records, errors) = jsonl::parse_lines::<AugmentedRecord>(&lines);
        if !errors.is_empty() {
            report_lines(&errors);
            return Err(CliError::Data(format!("{}: {} invalid gold line(s)", path.display(), errors.len())));
        }
        for (line, r) in records {
            let g = GoldRecord::from_augmented(&r, &settings.lexicons)
                .map_err(|e| CliError::Data(format!("{}: line {line}: {e}", path.display())))?;
            gold.push(g.with_subset(&subset));
        }
    }
    Ok(gold)
}

fn with_provenance<T: Serialize>(report: &T, provenance: &Provenance) -> String {
    let mut value = serde_json::to_value(report).expect("report serializes");
    if let Some(obj) = value.as_object_mut() {
        obj.insert(PROVENANCE_KEY.to_string(), serde_json::to_value(provenance).expect("provenance serializes"));
    }
    let mut text = serde_json::to_string_pretty(&value).expect("report serializes");
    text.push('\n');
    text
}

fn evaluate_cmd(
    gold_args: &[String],
    predictions: &Path,
    metric: Metric,
    method: &str,
    output: Option<&Path>,
    settings: &Settings,
) -> Result<ExitCode, CliError> {
    let gold = load_gold(gold_args, settings)?;
    let preds = load_predictions(predictions)?;
    let provenance = Provenance::new("evaluate", Some(settings.augment.seed), &settings.hash());
    let data_err = |e: eval::EvalError| CliError::Data(e.to_string());

    let (missing, unknown, json) = match metric {
        Metric::Oeq | Metric::Ynq => {
            let report: EvalReport = if metric == Metric::Oeq {
                eval::eval_oeq(&preds, &gold, &settings.lexicons).map_err(data_err)?
            } else {
                eval::eval_ynq(&preds, &gold).map_err(data_err)?
            };
            emit(&format!(
                "{} accuracy\n{}",
                report.metric.label(),
                render_table(&[(method.to_string(), report.accuracies())])
            ))?;
            (report.missing.len(), report.unknown.len(), with_provenance(&report, &provenance))
        }
        Metric::F1 => {
            let report = eval::eval_existence_f1(&preds, &gold).map_err(data_err)?;
            let mut table = format!("{:<12}  {:>9}  {:>6}  {:>5}\n", "Subset", "Precision", "Recall", "F1");
            for (name, s) in &report.subsets {
                let flag = if s.degenerate { "  (degenerate)" } else { "" };
                table.push_str(&format!(
                    "{name:<12}  {:>9}  {:>6}  {:>5}{flag}\n",
                    eval::fmt3(s.precision),
                    eval::fmt3(s.recall),
                    eval::fmt3(s.f1)
                ));
            }
            table.push_str(&format!("{:<12}  {:>9}  {:>6}  {:>5}\n", "Mean", "", "", eval::fmt3(report.mean_f1)));
            emit(&table)?;
            (report.missing.len(), report.unknown.len(), with_provenance(&report, &provenance))
        }
    };
    if missing > 0 {
        eprintln!("{missing} gold record(s) had no prediction and were scored as incorrect");
    }
    if unknown > 0 {
        eprintln!("{unknown} prediction(s) did not match a gold record and were ignored");
    }
    if let Some(path) = output {
        jsonl::write_text(path, &json).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep_cmd(
    input: &Path,
    lambdas: &[f64],
    metric_args: &[String],
    output: Option<&Path>,
    gamma: &[(VhType, f64)],
    settings: &Settings,
) -> Result<ExitCode, CliError> {
    let cfg = apply_weights(&settings.scoring, None, gamma)?;
    let Requests { requests, ce, rejected } = load_requests(input, None)?;
    debug_assert!(rejected.is_empty());
    let results = score_batch(&requests, &cfg, &settings.lexicons);
    let mut losses = Vec::with_capacity(results.len());
    for ((req, r), ce) in requests.iter().zip(results).zip(ce) {
        let b = r.map_err(|e| CliError::Data(e.to_string()))?;
        let ce_loss = ce.ok_or_else(|| CliError::Data(format!("record {}: sweep needs ce_loss", req.record_id)))?;
        losses.push(RecordLoss { ce_loss, fcl: b.total });
    }

    let mut metrics: BTreeMap<usize, BTreeMap<String, f64>> = BTreeMap::new();
    let mut used = HashSet::new();
    for arg in metric_args {
        let (l, path) = arg
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected LAMBDA=PATH, got {arg:?}")))?;
        let l: f64 = l.trim().parse().map_err(|_| CliError::Config(format!("bad lambda {l:?}")))?;
        let idx = lambdas
            .iter()
            .position(|x| *x == l)
            .ok_or_else(|| CliError::Config(format!("lambda {l} is not in --lambdas")))?;
        let text = read_input(Path::new(path))?;
        let report: EvalReport =
            serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
        let name = report.metric.label().to_lowercase().replace('-', "_");
        if !used.insert((idx, name.clone())) {
            return Err(CliError::Config(format!("two {name} reports for lambda {l}")));
        }
        metrics.entry(idx).or_default().insert(name, report.average);
    }

    let points: Vec<SweepPoint> = lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| SweepPoint {
            lambda,
            losses: losses.clone(),
            metrics: metrics.remove(&i).unwrap_or_default(),
        })
        .collect();
    let report = eval::sweep_lambda(&points).map_err(|e| CliError::Config(e.to_string()))?;
    let provenance = Provenance::new("sweep", Some(settings.augment.seed), &config_hash_with(settings, &cfg));
    let text = format!("# {}\n{}", provenance.header_line(), report.to_tsv());
    write_output(output, &text)?;
    Ok(ExitCode::SUCCESS)
}
