//! Command implementations behind the `bigcn` binary.
//!
//! Every run is driven by a [`RunConfig`]: defaults, overridden by a flat
//! `key=value` config file, overridden by CLI flags. The resolved merge is
//! written to the output directory as `config.resolved`, and rerunning from
//! that file reproduces the run bit for bit (one seed governs all
//! randomness).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use bigcn::dataio::{generate_synthetic, parse_corpus, write_corpus, Corpus, SyntheticSpec};
use bigcn::eval::{compute_metrics, curve_to_csv, early_detection_curve};
use bigcn::features::{read_vocabulary, write_vocabulary, Vocabulary};
use bigcn::graph::{ClassLabel, LabelArity, Post, PropagationEvent};
use bigcn::model::{read_params, write_params, ModelConfig, ModelParams, ModelVariant};
use bigcn::training::{
    cross_validate, grad_check, write_history_csv, CvSettings, GradCheckSettings, LossConfig,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] bigcn::dataio::DataError),
    #[error(transparent)]
    Train(#[from] bigcn::training::TrainError),
    #[error(transparent)]
    Model(#[from] bigcn::model::ModelError),
    #[error(transparent)]
    Eval(#[from] bigcn::eval::EvalError),
    #[error(transparent)]
    Feature(#[from] bigcn::features::FeatureError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// The full set of knobs a run resolves to.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub synthetic: Option<String>,
    pub events: usize,
    pub classes: usize,
    pub variant: ModelVariant,
    pub root: bool,
    pub v1: usize,
    pub v2: usize,
    pub dropout: f64,
    pub dropedge: f64,
    pub learning_rate: f64,
    pub l2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub accumulate: usize,
    pub folds: usize,
    pub vocab_k: usize,
    pub vocab_full_corpus: bool,
    pub val_fraction: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub deadlines: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            synthetic: None,
            events: 200,
            classes: 4,
            variant: ModelVariant::BiGcn,
            root: true,
            v1: 64,
            v2: 64,
            dropout: 0.5,
            dropedge: 0.2,
            learning_rate: 5e-4,
            l2: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            max_epochs: 200,
            patience: 10,
            accumulate: 1,
            folds: 5,
            vocab_k: 5000,
            vocab_full_corpus: false,
            val_fraction: 0.1,
            seed: 0,
            out: None,
            deadlines: Vec::new(),
        }
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Config {
        line,
        message: format!("bad value {value:?} for {key}"),
    })
}

fn parse_finite(line: usize, key: &str, value: &str) -> Result<f64, CliError> {
    let parsed: f64 = parse_value(line, key, value)?;
    if !parsed.is_finite() {
        return Err(CliError::Config {
            line,
            message: format!("{key} must be finite, got {value:?}"),
        });
    }
    Ok(parsed)
}

impl RunConfig {
    /// Apply one `key=value` pair; `line` is used for diagnostics only.
    pub fn apply(&mut self, key: &str, value: &str, line: usize) -> Result<(), CliError> {
        let bad = |message: String| CliError::Config { line, message };
        match key {
            "data" => self.data = (!value.is_empty()).then(|| PathBuf::from(value)),
            "synthetic" => self.synthetic = (!value.is_empty()).then(|| value.to_string()),
            "events" => self.events = parse_value(line, key, value)?,
            "classes" => {
                self.classes = parse_value(line, key, value)?;
                if self.classes != 2 && self.classes != 4 {
                    return Err(bad(format!("classes must be 2 or 4, got {}", self.classes)));
                }
            }
            "variant" => {
                self.variant = ModelVariant::from_name(value)
                    .ok_or_else(|| bad(format!("unknown variant {value:?}")))?;
            }
            "root" => self.root = parse_value(line, key, value)?,
            "v1" => self.v1 = parse_value(line, key, value)?,
            "v2" => self.v2 = parse_value(line, key, value)?,
            "dropout" => self.dropout = parse_finite(line, key, value)?,
            "dropedge" => self.dropedge = parse_finite(line, key, value)?,
            "learning_rate" => self.learning_rate = parse_finite(line, key, value)?,
            "l2" => self.l2 = parse_finite(line, key, value)?,
            "beta1" => self.beta1 = parse_finite(line, key, value)?,
            "beta2" => self.beta2 = parse_finite(line, key, value)?,
            "adam_epsilon" => self.adam_epsilon = parse_finite(line, key, value)?,
            "max_epochs" => self.max_epochs = parse_value(line, key, value)?,
            "patience" => self.patience = parse_value(line, key, value)?,
            "accumulate" => self.accumulate = parse_value(line, key, value)?,
            "folds" => self.folds = parse_value(line, key, value)?,
            "vocab_k" => self.vocab_k = parse_value(line, key, value)?,
            "vocab_scope" => {
                self.vocab_full_corpus = match value {
                    "fold" => false,
                    "full" => true,
                    _ => {
                        return Err(bad(format!(
                            "vocab_scope must be fold or full, got {value:?}"
                        )))
                    }
                }
            }
            "val_fraction" => self.val_fraction = parse_finite(line, key, value)?,
            "seed" => self.seed = parse_value(line, key, value)?,
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            "deadlines" => {
                self.deadlines = if value.is_empty() {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|v| parse_finite(line, key, v.trim()))
                        .collect::<Result<_, _>>()?
                };
            }
            _ => return Err(bad(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parse a flat config file over the defaults. Blank lines and `#`
    /// comments are ignored.
    pub fn from_kv(text: &str) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::default();
        config.merge_kv(text)?;
        Ok(config)
    }

    pub fn merge_kv(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or(CliError::Config {
                line: lineno,
                message: format!("expected key=value, got {trimmed:?}"),
            })?;
            self.apply(key.trim(), value.trim(), lineno)?;
        }
        Ok(())
    }

    /// Canonical `key=value` rendering; parsing it back reproduces `self`.
    pub fn render(&self) -> String {
        let path_str = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.to_string_lossy().into_owned())
                .unwrap_or_default()
        };
        let deadlines = self
            .deadlines
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("accumulate", self.accumulate.to_string());
        kv("adam_epsilon", self.adam_epsilon.to_string());
        kv("beta1", self.beta1.to_string());
        kv("beta2", self.beta2.to_string());
        kv("classes", self.classes.to_string());
        kv("data", path_str(&self.data));
        kv("deadlines", deadlines);
        kv("dropedge", self.dropedge.to_string());
        kv("dropout", self.dropout.to_string());
        kv("events", self.events.to_string());
        kv("folds", self.folds.to_string());
        kv("l2", self.l2.to_string());
        kv("learning_rate", self.learning_rate.to_string());
        kv("max_epochs", self.max_epochs.to_string());
        kv("out", path_str(&self.out));
        kv("patience", self.patience.to_string());
        kv("root", self.root.to_string());
        kv("seed", self.seed.to_string());
        kv("synthetic", self.synthetic.clone().unwrap_or_default());
        kv("v1", self.v1.to_string());
        kv("v2", self.v2.to_string());
        kv("val_fraction", self.val_fraction.to_string());
        kv("variant", self.variant.name().to_string());
        kv("vocab_k", self.vocab_k.to_string());
        kv(
            "vocab_scope",
            if self.vocab_full_corpus {
                "full"
            } else {
                "fold"
            }
            .to_string(),
        );
        out
    }

    pub fn model_config(&self, num_classes: usize) -> ModelConfig {
        ModelConfig {
            variant: self.variant,
            root_enhancement: self.root,
            v1: self.v1,
            v2: self.v2,
            num_classes,
            dropout_rate: self.dropout,
            dropedge_rate: self.dropedge,
        }
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            l2_lambda: self.l2,
            learning_rate: self.learning_rate,
            adam_beta1: self.beta1,
            adam_beta2: self.beta2,
            adam_epsilon: self.adam_epsilon,
            max_epochs: self.max_epochs,
            patience: self.patience,
            accumulate: self.accumulate,
        }
    }

    pub fn cv_settings(&self) -> CvSettings {
        CvSettings {
            folds: self.folds,
            seed: self.seed,
            vocab_k: self.vocab_k,
            vocab_full_corpus: self.vocab_full_corpus,
            val_fraction: self.val_fraction,
        }
    }
}

fn classes_for(count: usize) -> Result<Vec<ClassLabel>, CliError> {
    match count {
        2 => Ok(LabelArity::Two.classes().to_vec()),
        4 => Ok(LabelArity::Four.classes().to_vec()),
        other => Err(CliError::Invalid(format!(
            "classes must be 2 or 4, got {other}"
        ))),
    }
}

/// Build the spec for a named preset.
pub fn synthetic_spec(
    preset: &str,
    classes: usize,
    events: usize,
    seed: u64,
) -> Result<SyntheticSpec, CliError> {
    let labels = classes_for(classes)?;
    match preset {
        "default" | "separable" => Ok(SyntheticSpec::separable(labels, events, seed)),
        "root-heavy" => Ok(SyntheticSpec::root_heavy(labels, events, seed)),
        "noisy" => Ok(SyntheticSpec::noisy(labels, events, seed)),
        other => Err(CliError::Invalid(format!(
            "unknown synthetic preset {other:?}; expected default, separable, root-heavy, or noisy"
        ))),
    }
}

fn load_corpus(config: &RunConfig) -> Result<Corpus, CliError> {
    match (&config.data, &config.synthetic) {
        (Some(path), None) => Ok(parse_corpus(path)?),
        (None, Some(preset)) => Ok(generate_synthetic(&synthetic_spec(
            preset,
            config.classes,
            config.events,
            config.seed,
        )?)?),
        (Some(_), Some(_)) => Err(CliError::Invalid(
            "provide either a dataset directory or a synthetic preset, not both".into(),
        )),
        (None, None) => Err(CliError::Invalid(
            "no input: set --data <dir> or --synthetic <preset>".into(),
        )),
    }
}

#[derive(Serialize)]
struct FoldSummary {
    fold: usize,
    accuracy: f64,
    best_val_loss: f64,
    epochs_run: usize,
}

#[derive(Serialize)]
struct Summary {
    corpus: String,
    events: usize,
    classes: usize,
    stratified: bool,
    mean_accuracy: f64,
    mean_f1_per_class: Vec<ClassF1>,
    folds: Vec<FoldSummary>,
}

#[derive(Serialize)]
struct ClassF1 {
    label: char,
    f1: f64,
}

fn write_resolved_config(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let path = out.join("config.resolved");
    fs::write(&path, config.render()).map_err(io_err(&path))?;
    Ok(())
}

/// Run stratified cross-validation and write per-fold artifacts plus the
/// summary to the output directory.
pub fn cmd_train(config: &RunConfig) -> Result<(), CliError> {
    let out = config
        .out
        .clone()
        .ok_or_else(|| CliError::Invalid("train needs an output directory (--out)".into()))?;
    let corpus = load_corpus(config)?;
    let model_config = config.model_config(corpus.label_arity.num_classes());
    let loss_config = config.loss_config();
    let cv_settings = config.cv_settings();

    write_resolved_config(config, &out)?;
    let result = cross_validate(&corpus, &model_config, &loss_config, &cv_settings)?;
    if !result.stratified {
        eprintln!("warning: a class has fewer events than folds; fold split is unstratified");
    }

    let classes = corpus.label_arity.classes();
    let mut f1_sums = vec![0.0f64; classes.len()];
    let mut fold_summaries = Vec::with_capacity(result.folds.len());
    for outcome in &result.folds {
        let fold_dir = out.join(format!("fold_{}", outcome.fold));
        fs::create_dir_all(&fold_dir).map_err(io_err(&fold_dir))?;

        let params_path = fold_dir.join("params.bin");
        let mut buf = Vec::new();
        write_params(&outcome.params, &mut buf)?;
        fs::write(&params_path, buf).map_err(io_err(&params_path))?;

        let history_path = fold_dir.join("history.csv");
        let mut buf = Vec::new();
        write_history_csv(&outcome.history, &mut buf).map_err(|source| CliError::Io {
            path: history_path.clone(),
            source,
        })?;
        fs::write(&history_path, buf).map_err(io_err(&history_path))?;

        let metrics_path = fold_dir.join("metrics.json");
        let json =
            serde_json::to_string_pretty(&outcome.metrics).expect("metrics serialize to JSON");
        fs::write(&metrics_path, json).map_err(io_err(&metrics_path))?;

        let vocab_path = fold_dir.join("vocab.txt");
        let mut buf = Vec::new();
        write_vocabulary(&outcome.vocab, &mut buf)?;
        fs::write(&vocab_path, buf).map_err(io_err(&vocab_path))?;

        for (sum, class_metrics) in f1_sums.iter_mut().zip(&outcome.metrics.per_class) {
            *sum += class_metrics.f1;
        }
        fold_summaries.push(FoldSummary {
            fold: outcome.fold,
            accuracy: outcome.metrics.accuracy,
            best_val_loss: outcome.best_val_loss,
            epochs_run: outcome.history.len(),
        });
        println!(
            "fold {}: accuracy {:.4} ({} epochs, best val loss {:.4})",
            outcome.fold,
            outcome.metrics.accuracy,
            outcome.history.len(),
            outcome.best_val_loss
        );
    }

    let summary = Summary {
        corpus: corpus.name.clone(),
        events: corpus.events.len(),
        classes: classes.len(),
        stratified: result.stratified,
        mean_accuracy: result.mean_accuracy,
        mean_f1_per_class: classes
            .iter()
            .zip(&f1_sums)
            .map(|(c, sum)| ClassF1 {
                label: c.code(),
                f1: sum / result.folds.len() as f64,
            })
            .collect(),
        folds: fold_summaries,
    };
    let summary_path = out.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes to JSON");
    fs::write(&summary_path, json).map_err(io_err(&summary_path))?;
    println!(
        "mean accuracy {:.4}; summary written to {}",
        result.mean_accuracy,
        summary_path.display()
    );
    Ok(())
}

fn load_params_and_vocab(
    params_path: &Path,
    vocab_path: Option<&Path>,
) -> Result<(ModelParams, Vocabulary), CliError> {
    let bytes = fs::read(params_path).map_err(io_err(params_path))?;
    let params = read_params(&bytes)?;
    let vocab_path = match vocab_path {
        Some(p) => p.to_path_buf(),
        None => params_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("vocab.txt"),
    };
    let text = fs::read_to_string(&vocab_path).map_err(io_err(&vocab_path))?;
    let vocab = read_vocabulary(&text)?;
    Ok((params, vocab))
}

/// Evaluate saved parameters on a dataset and print the metrics table.
pub fn cmd_eval(
    config: &RunConfig,
    params_path: &Path,
    vocab_path: Option<&Path>,
) -> Result<(), CliError> {
    let corpus = load_corpus(config)?;
    let (params, vocab) = load_params_and_vocab(params_path, vocab_path)?;
    let model_config = config.model_config(corpus.label_arity.num_classes());
    let arity = corpus.label_arity;

    let mut predictions = Vec::with_capacity(corpus.events.len());
    let mut truths = Vec::with_capacity(corpus.events.len());
    for event in &corpus.events {
        let adjacency =
            bigcn::graph::build_adjacency(event).map_err(bigcn::eval::EvalError::from)?;
        let graphs = bigcn::model::EventGraphs::prepare(&adjacency, model_config.variant)
            .map_err(bigcn::eval::EvalError::from)?;
        let x = bigcn::features::featurize_event(event, &vocab);
        let class = bigcn::model::predict(&graphs, &x, &params, &model_config)?;
        predictions.push(arity.classes()[class]);
        truths.push(event.label);
    }
    let metrics = compute_metrics(&predictions, &truths, arity.classes())?;
    print!("{}", metrics.to_table());
    if let Some(out) = &config.out {
        fs::create_dir_all(out).map_err(io_err(out))?;
        let path = out.join("metrics.json");
        let json = serde_json::to_string_pretty(&metrics).expect("metrics serialize to JSON");
        fs::write(&path, json).map_err(io_err(&path))?;
        println!("metrics written to {}", path.display());
    }
    Ok(())
}

/// Evaluate accuracy under a series of detection deadlines and emit the
/// curve as CSV (an infinite sentinel deadline is always appended).
pub fn cmd_early_detect(
    config: &RunConfig,
    params_path: &Path,
    vocab_path: Option<&Path>,
) -> Result<(), CliError> {
    if config.deadlines.is_empty() {
        return Err(CliError::Invalid(
            "early-detect needs --deadlines <m1,m2,...>".into(),
        ));
    }
    if config.deadlines.windows(2).any(|w| w[0] > w[1]) {
        return Err(CliError::Invalid(
            "deadlines must be sorted in ascending order".into(),
        ));
    }
    if config.deadlines.iter().any(|&d| d < 0.0 || !d.is_finite()) {
        return Err(CliError::Invalid(
            "deadlines must be finite and nonnegative".into(),
        ));
    }
    let corpus = load_corpus(config)?;
    let (params, vocab) = load_params_and_vocab(params_path, vocab_path)?;
    let model_config = config.model_config(corpus.label_arity.num_classes());

    let curve = early_detection_curve(
        &corpus.events,
        &params,
        &vocab,
        &model_config,
        corpus.label_arity,
        &config.deadlines,
    )?;
    let csv = curve_to_csv(&curve);
    println!("deadline_minutes  accuracy");
    for point in &curve {
        if point.deadline_minutes.is_finite() {
            println!("{:<17} {:.4}", point.deadline_minutes, point.accuracy);
        } else {
            println!("{:<17} {:.4}", "inf", point.accuracy);
        }
    }
    if let Some(out) = &config.out {
        fs::create_dir_all(out).map_err(io_err(out))?;
        let path = out.join("early_detection.csv");
        fs::write(&path, csv).map_err(io_err(&path))?;
        println!("curve written to {}", path.display());
    }
    Ok(())
}

/// Deterministic small tree used by `gradcheck`.
pub fn gradcheck_event(n: usize) -> PropagationEvent {
    let posts = (0..n)
        .map(|i| Post {
            index: i,
            delay_minutes: i as f64,
            tokens: vec![format!("tok{i}")],
        })
        .collect();
    let edges = (1..n).map(|c| ((c - 1) / 2, c)).collect();
    PropagationEvent {
        id: "gradcheck".into(),
        posts,
        edges,
        label: ClassLabel::TrueRumor,
    }
}

/// Settings for [`cmd_gradcheck`].
#[derive(Debug, Clone)]
pub struct GradCheckArgs {
    pub epsilon: f64,
    pub nodes: usize,
    pub feature_dim: usize,
    pub seed: u64,
    pub force_dropout: bool,
}

impl Default for GradCheckArgs {
    fn default() -> Self {
        GradCheckArgs {
            epsilon: 1e-5,
            nodes: 6,
            feature_dim: 12,
            seed: 0,
            force_dropout: false,
        }
    }
}

/// Run the finite-difference check for every variant and root-enhancement
/// combination. Returns `Err` when any combination exceeds the 1e-4
/// threshold, which the binary maps to exit code 1.
pub fn cmd_gradcheck(args: &GradCheckArgs) -> Result<(), CliError> {
    const THRESHOLD: f64 = 1e-4;
    let event = gradcheck_event(args.nodes);
    let settings = GradCheckSettings {
        epsilon: args.epsilon,
        feature_dim: args.feature_dim,
        seed: args.seed,
        force_dropout: args.force_dropout,
        ..GradCheckSettings::default()
    };
    let mut failures = 0usize;
    for variant in [
        ModelVariant::BiGcn,
        ModelVariant::Ud,
        ModelVariant::Td,
        ModelVariant::Bu,
    ] {
        for root in [true, false] {
            let config = ModelConfig {
                variant,
                root_enhancement: root,
                v1: 4,
                v2: 4,
                num_classes: 4,
                dropout_rate: 0.5,
                dropedge_rate: 0.2,
            };
            let report = grad_check(&event, &config, &settings)?;
            let verdict = if report.passes(THRESHOLD) {
                "ok"
            } else {
                "FAIL"
            };
            println!(
                "{:<5} root={:<5} max_rel_err={:.3e} entries={} [{verdict}]",
                variant.name(),
                root,
                report.max_rel_error,
                report.entries_checked
            );
            for m in &report.per_matrix {
                if m.entries_checked > 0 {
                    println!(
                        "    {:<10} max_rel_err={:.3e} ({} entries)",
                        m.name, m.max_rel_error, m.entries_checked
                    );
                }
            }
            if !report.passes(THRESHOLD) {
                failures += 1;
            }
        }
    }
    if failures > 0 {
        return Err(CliError::Invalid(format!(
            "gradient check failed for {failures} of 8 combinations"
        )));
    }
    println!("8/8 combinations under {THRESHOLD:e}");
    Ok(())
}

/// Generate a synthetic corpus in the dataset directory format.
pub fn cmd_synth(config: &RunConfig, preset: &str) -> Result<(), CliError> {
    let out = config
        .out
        .clone()
        .ok_or_else(|| CliError::Invalid("synth needs an output directory (--out)".into()))?;
    let spec = synthetic_spec(preset, config.classes, config.events, config.seed)?;
    let corpus = generate_synthetic(&spec)?;
    write_corpus(&corpus, &out)?;
    println!(
        "wrote {} events ({} classes) to {}",
        corpus.events.len(),
        corpus.label_arity.num_classes(),
        out.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_round_trips_through_parser() {
        let config = RunConfig {
            synthetic: Some("separable".into()),
            deadlines: vec![0.0, 60.0, 1440.0],
            seed: 42,
            out: Some(PathBuf::from("/tmp/run")),
            vocab_full_corpus: true,
            ..RunConfig::default()
        };
        let parsed = RunConfig::from_kv(&config.render()).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn parser_rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_kv("no_such_key=1\n").is_err());
        assert!(RunConfig::from_kv("v1=notanumber\n").is_err());
        assert!(RunConfig::from_kv("variant=upside-down\n").is_err());
        assert!(RunConfig::from_kv("classes=3\n").is_err());
        assert!(RunConfig::from_kv("just a line\n").is_err());
    }

    #[test]
    fn parser_ignores_comments_and_blanks() {
        let config = RunConfig::from_kv("# comment\n\nseed=7\n").unwrap();
        assert_eq!(config.seed, 7);
    }

    #[test]
    fn unknown_preset_is_rejected() {
        assert!(synthetic_spec("nope", 4, 10, 0).is_err());
        assert!(synthetic_spec("default", 4, 10, 0).is_ok());
        assert!(synthetic_spec("root-heavy", 2, 10, 0).is_ok());
    }

    #[test]
    fn gradcheck_event_is_a_valid_tree() {
        for n in 1..=8 {
            gradcheck_event(n).validate().unwrap();
        }
    }
}
