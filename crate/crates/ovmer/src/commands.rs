//! The four subcommands, as library functions the binary and tests share.

use std::fs;
use std::path::{Path, PathBuf};

use ovmer_core::grpo::{evaluate_greedy, Environment, GreedyReport};
use ovmer_core::{EmotionWheel, TrainConfig, TrainOutcome};
use serde::Serialize;

use crate::checkpoint;
use crate::coldstart::{make_coldstart, ColdStartCorpus, DescriptionRow};
use crate::config::{ReportFormat, RunConfig};
use crate::dataset::{demo_dataset, load_dataset, SampleRecord};
use crate::error::{Error, Result};
use crate::eval::{batch_evaluate, BatchReport, LabelRecord};
use crate::jsonl::to_lines;
use crate::trace_io;
use crate::wheel_file::{default_wheel, load_wheel, DEFAULT_WHEEL_JSON};

/// Writes through a sibling temporary file and a rename, so readers never see
/// a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn wheel_from(path: Option<&Path>) -> Result<EmotionWheel> {
    match path {
        Some(p) => load_wheel(&read(p)?),
        None => Ok(default_wheel()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GreedyAnswer {
    pub id: String,
    pub context: usize,
    pub text: String,
    pub labels: Vec<String>,
    pub accuracy: f64,
    pub well_formed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub iterations: usize,
    /// Mean total reward over the last (up to) 50 iterations.
    pub final_mean_reward: f64,
    pub final_format_rate: f64,
    pub greedy_accuracy: f64,
    pub greedy_format_rate: f64,
    pub kl_clamped: usize,
    pub answers: Vec<GreedyAnswer>,
}

impl TrainSummary {
    fn new(outcome: &TrainOutcome, greedy: &GreedyReport) -> Self {
        let records = &outcome.trace.records;
        let tail = &records[records.len().saturating_sub(50)..];
        let mean = |f: fn(&ovmer_core::TraceRecord) -> f64| {
            if tail.is_empty() {
                0.0
            } else {
                tail.iter().map(f).sum::<f64>() / tail.len() as f64
            }
        };
        Self {
            iterations: records.len(),
            final_mean_reward: mean(|r| r.mean_reward),
            final_format_rate: mean(|r| r.format_rate),
            greedy_accuracy: greedy.mean_accuracy,
            greedy_format_rate: greedy.format_rate,
            kl_clamped: outcome.trace.kl_clamped,
            answers: greedy
                .per_sample
                .iter()
                .map(|g| GreedyAnswer {
                    id: g.id.clone(),
                    context: g.context,
                    text: g.text.clone(),
                    labels: g.answer.as_slice().to_vec(),
                    accuracy: g.reward.accuracy,
                    well_formed: g.reward.format == 1.0,
                })
                .collect(),
        }
    }
}

fn write_trace(dir: &Path, trace: &ovmer_core::TrainTrace, config: &TrainConfig, format: ReportFormat) -> Result<()> {
    if format.csv() {
        write_atomic(&dir.join("trace.csv"), &trace_io::to_csv(trace))?;
    }
    if format.json() {
        write_atomic(&dir.join("trace.json"), &trace_io::to_json(trace, config))?;
    }
    Ok(())
}

/// Loads `config_path`, applies overrides, trains and writes every artifact
/// into the output directory. On a training failure the partial trace is
/// still written.
pub fn run_train(config_path: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<TrainSummary> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = seed {
        config.train.seed = seed;
    }
    if let Some(out) = out {
        config.output_dir = out.to_path_buf();
    }
    config.validate()?;
    let wheel = wheel_from(config.wheel.as_deref())?;
    let dataset = load_dataset(&read(&config.dataset)?)?;
    let dir = config.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_atomic(&dir.join("config.resolved.toml"), &config.to_toml())?;

    let vocab = ovmer_core::Vocab::for_wheel(&wheel)?;
    let mut checkpoint_error = None;
    let every = config.checkpoint_every;
    let result = ovmer_core::train_with_observer(&dataset, &wheel, &config.train, |record, params| {
        if every == 0 || record.iteration % every != 0 || checkpoint_error.is_some() {
            return;
        }
        let path = dir
            .join("checkpoints")
            .join(format!("iter_{:06}.json", record.iteration));
        let written = checkpoint::to_json(params, &vocab).and_then(|doc| write_atomic(&path, &doc));
        if let Err(e) = written {
            checkpoint_error = Some(e);
        }
    });
    let outcome = match result {
        Ok(outcome) => outcome,
        Err(failure) => {
            write_trace(&dir, &failure.trace, &config.train, config.report_format)?;
            return Err(failure.into());
        }
    };
    if let Some(e) = checkpoint_error {
        return Err(e);
    }
    write_trace(&dir, &outcome.trace, &config.train, config.report_format)?;
    write_atomic(
        &dir.join("checkpoint_final.json"),
        &checkpoint::to_json(&outcome.params, &outcome.vocab)?,
    )?;

    let env = Environment {
        wheel: &wheel,
        vocab: &outcome.vocab,
    };
    let greedy = evaluate_greedy(&outcome.params, env, &dataset, config.train.beta_format)?;
    let predictions: Vec<LabelRecord> = greedy
        .per_sample
        .iter()
        .map(|g| LabelRecord {
            id: g.id.clone(),
            labels: g.answer.as_slice().to_vec(),
        })
        .collect();
    write_atomic(&dir.join("predictions.jsonl"), &to_lines(&predictions))?;
    let summary = TrainSummary::new(&outcome, &greedy);
    let mut doc = serde_json::to_string_pretty(&summary).expect("summary serializes");
    doc.push('\n');
    write_atomic(&dir.join("summary.json"), &doc)?;
    Ok(summary)
}

pub fn run_eval(
    predictions: &Path,
    references: &Path,
    wheel: Option<&Path>,
    out: Option<&Path>,
    workers: usize,
) -> Result<BatchReport> {
    let wheel = wheel_from(wheel)?;
    let report = batch_evaluate(&read(predictions)?, &read(references)?, &wheel, workers)?;
    if let Some(out) = out {
        let mut doc = serde_json::to_string_pretty(&report).expect("report serializes");
        doc.push('\n');
        write_atomic(out, &doc)?;
    }
    Ok(report)
}

pub fn run_make_coldstart(input: &Path, wheel: Option<&Path>, out: &Path) -> Result<ColdStartCorpus> {
    let wheel = wheel_from(wheel)?;
    let corpus = make_coldstart(&read(input)?, &wheel)?;
    write_atomic(out, &corpus.to_jsonl())?;
    Ok(corpus)
}

/// Files written by [`run_demo`].
#[derive(Debug, Clone)]
pub struct DemoFiles {
    pub config: PathBuf,
    pub wheel: PathBuf,
    pub dataset: PathBuf,
    pub references: PathBuf,
    pub descriptions: PathBuf,
}

/// Writes a self-contained runnable example into `dir`.
pub fn run_demo(dir: &Path) -> Result<DemoFiles> {
    let files = DemoFiles {
        config: dir.join("config.toml"),
        wheel: dir.join("wheel.json"),
        dataset: dir.join("dataset.jsonl"),
        references: dir.join("references.jsonl"),
        descriptions: dir.join("descriptions.jsonl"),
    };
    let samples = demo_dataset();
    let rows: Vec<SampleRecord> = samples.iter().map(SampleRecord::from).collect();
    let refs: Vec<LabelRecord> = samples
        .iter()
        .map(|s| LabelRecord {
            id: s.id.clone(),
            labels: s.gt.as_slice().to_vec(),
        })
        .collect();
    let cues = [
        "bright smile, lively tone",
        "tearful eyes, slow speech",
        "raised voice, clenched jaw",
        "trembling hands, rapid glances",
    ];
    let descriptions: Vec<DescriptionRow> = samples
        .iter()
        .zip(cues)
        .map(|(s, cue)| DescriptionRow {
            id: s.id.clone(),
            description: cue.into(),
            labels: s.gt.as_slice().to_vec(),
        })
        .collect();
    let config = RunConfig {
        wheel: Some("wheel.json".into()),
        dataset: "dataset.jsonl".into(),
        output_dir: "run".into(),
        checkpoint_every: 100,
        report_format: ReportFormat::Both,
        train: TrainConfig::default(),
    };
    write_atomic(&files.wheel, DEFAULT_WHEEL_JSON)?;
    write_atomic(&files.dataset, &to_lines(&rows))?;
    write_atomic(&files.references, &to_lines(&refs))?;
    write_atomic(&files.descriptions, &to_lines(&descriptions))?;
    write_atomic(&files.config, &config.to_toml())?;
    Ok(files)
}
