use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bigcn_cli::{
    cmd_early_detect, cmd_eval, cmd_gradcheck, cmd_synth, cmd_train, CliError, GradCheckArgs,
    RunConfig,
};

/// Bi-directional GCN rumor detection on propagation trees.
#[derive(Parser)]
#[command(name = "bigcn", version, about)]
struct Cli {
    /// Seed governing all randomness in the run.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for run artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Flat key=value config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run stratified cross-validation and write per-fold artifacts.
    Train(TrainArgs),
    /// Evaluate saved parameters on a dataset.
    Eval(EvalArgs),
    /// Accuracy under a series of detection deadlines.
    EarlyDetect(EarlyDetectArgs),
    /// Verify analytic gradients against finite differences (8 combinations).
    Gradcheck(GradcheckCmd),
    /// Generate a synthetic corpus in the dataset directory format.
    Synth(SynthArgs),
}

#[derive(Args, Clone, Default)]
struct DataArgs {
    /// Dataset directory (labels.tsv + trees/).
    #[arg(long)]
    data: Option<PathBuf>,

    /// Synthetic corpus preset: default, separable, root-heavy, or noisy.
    #[arg(long)]
    synthetic: Option<String>,

    /// Number of synthetic events.
    #[arg(long)]
    events: Option<usize>,

    /// Synthetic label arity (2 or 4).
    #[arg(long)]
    classes: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct ModelArgs {
    /// Model variant: bigcn, ud, td, or bu.
    #[arg(long)]
    variant: Option<String>,

    /// Disable root feature enhancement.
    #[arg(long)]
    no_root: bool,

    /// First hidden width.
    #[arg(long)]
    v1: Option<usize>,

    /// Second hidden width.
    #[arg(long)]
    v2: Option<usize>,

    /// Dropout rate on the hidden layers.
    #[arg(long)]
    dropout: Option<f64>,

    /// DropEdge rate during training.
    #[arg(long)]
    dropedge: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,

    #[command(flatten)]
    model: ModelArgs,

    /// Number of cross-validation folds.
    #[arg(long)]
    folds: Option<usize>,

    #[arg(long)]
    learning_rate: Option<f64>,

    /// L2 penalty weight over all parameters.
    #[arg(long)]
    l2: Option<f64>,

    #[arg(long)]
    max_epochs: Option<usize>,

    /// Epochs without validation improvement before stopping.
    #[arg(long)]
    patience: Option<usize>,

    /// Events accumulated per optimizer step.
    #[arg(long)]
    accumulate: Option<usize>,

    /// Vocabulary size cap.
    #[arg(long)]
    vocab_k: Option<usize>,

    /// Fit the vocabulary per fold or on the full corpus.
    #[arg(long, value_parser = ["fold", "full"])]
    vocab_scope: Option<String>,

    /// Fraction of the training portion held out for early stopping.
    #[arg(long)]
    val_fraction: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,

    #[command(flatten)]
    model: ModelArgs,

    /// Trained parameters file (params.bin).
    #[arg(long)]
    params: PathBuf,

    /// Vocabulary file; defaults to vocab.txt next to the params file.
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Args)]
struct EarlyDetectArgs {
    #[command(flatten)]
    data: DataArgs,

    #[command(flatten)]
    model: ModelArgs,

    /// Trained parameters file (params.bin).
    #[arg(long)]
    params: PathBuf,

    /// Vocabulary file; defaults to vocab.txt next to the params file.
    #[arg(long)]
    vocab: Option<PathBuf>,

    /// Ascending comma-separated deadlines in minutes, e.g. 0,60,1440.
    #[arg(long)]
    deadlines: Option<String>,
}

#[derive(Args)]
struct GradcheckCmd {
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,

    /// Number of nodes in the check instance.
    #[arg(long, default_value_t = 6)]
    n: usize,

    /// Feature dimension of the check instance.
    #[arg(long, default_value_t = 12)]
    d: usize,

    /// Leave dropout on (the check must then fail; harness sanity switch).
    #[arg(long)]
    force_dropout: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Corpus preset: default, separable, root-heavy, or noisy.
    #[arg(long, default_value = "default")]
    preset: String,

    /// Number of events.
    #[arg(long)]
    events: Option<usize>,

    /// Label arity (2 or 4).
    #[arg(long)]
    classes: Option<usize>,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            RunConfig::from_kv(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    Ok(config)
}

fn apply_data_args(config: &mut RunConfig, args: &DataArgs) {
    if let Some(data) = &args.data {
        config.data = Some(data.clone());
        config.synthetic = None;
    }
    if let Some(preset) = &args.synthetic {
        config.synthetic = Some(preset.clone());
        config.data = None;
    }
    if let Some(events) = args.events {
        config.events = events;
    }
    if let Some(classes) = args.classes {
        config.classes = classes;
    }
}

fn apply_model_args(config: &mut RunConfig, args: &ModelArgs) -> Result<(), CliError> {
    if let Some(variant) = &args.variant {
        config.apply("variant", variant, 0)?;
    }
    if args.no_root {
        config.root = false;
    }
    if let Some(v1) = args.v1 {
        config.v1 = v1;
    }
    if let Some(v2) = args.v2 {
        config.v2 = v2;
    }
    if let Some(dropout) = args.dropout {
        config.dropout = dropout;
    }
    if let Some(dropedge) = args.dropedge {
        config.dropedge = dropedge;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = resolve_config(&cli)?;
    match &cli.command {
        Command::Train(args) => {
            apply_data_args(&mut config, &args.data);
            apply_model_args(&mut config, &args.model)?;
            if let Some(folds) = args.folds {
                config.folds = folds;
            }
            if let Some(lr) = args.learning_rate {
                config.learning_rate = lr;
            }
            if let Some(l2) = args.l2 {
                config.l2 = l2;
            }
            if let Some(max_epochs) = args.max_epochs {
                config.max_epochs = max_epochs;
            }
            if let Some(patience) = args.patience {
                config.patience = patience;
            }
            if let Some(accumulate) = args.accumulate {
                config.accumulate = accumulate;
            }
            if let Some(vocab_k) = args.vocab_k {
                config.vocab_k = vocab_k;
            }
            if let Some(scope) = &args.vocab_scope {
                config.apply("vocab_scope", scope, 0)?;
            }
            if let Some(val_fraction) = args.val_fraction {
                config.val_fraction = val_fraction;
            }
            cmd_train(&config)
        }
        Command::Eval(args) => {
            apply_data_args(&mut config, &args.data);
            apply_model_args(&mut config, &args.model)?;
            cmd_eval(&config, &args.params, args.vocab.as_deref())
        }
        Command::EarlyDetect(args) => {
            apply_data_args(&mut config, &args.data);
            apply_model_args(&mut config, &args.model)?;
            if let Some(deadlines) = &args.deadlines {
                config.apply("deadlines", deadlines, 0)?;
            }
            cmd_early_detect(&config, &args.params, args.vocab.as_deref())
        }
        Command::Gradcheck(args) => cmd_gradcheck(&GradCheckArgs {
            epsilon: args.epsilon,
            nodes: args.n,
            feature_dim: args.d,
            seed: config.seed,
            force_dropout: args.force_dropout,
        }),
        Command::Synth(args) => {
            if let Some(events) = args.events {
                config.events = events;
            }
            if let Some(classes) = args.classes {
                config.classes = classes;
            }
            cmd_synth(&config, &args.preset)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
