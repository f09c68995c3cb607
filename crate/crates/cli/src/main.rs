use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nbproc::config::{CorpusSource, RunConfig};
use nbproc::synth::write_synthetic;
use nbproc::validate::{render_table, run_checks, ValidateOptions};
use nbproc::CliError;
use nbproc_core::corpus::{ParamPrior, SynthSettings};
use nbproc_core::models::{Fault, ModelKind};

#[derive(Parser)]
#[command(name = "nbproc", version, about = "Negative binomial process topic models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and write trace.csv, params.csv, report.json and config.json.
    Run(RunArgs),
    /// Run the identity checks and per-model Geweke tests.
    Validate(ValidateArgs),
    /// Write a synthetic gamma-NB corpus in UCI bag-of-words format.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long, requires = "vocab", conflicts_with = "synthetic")]
    docword: Option<PathBuf>,
    #[arg(long, requires = "docword")]
    vocab: Option<PathBuf>,
    /// JSON synthetic corpus settings, drawn with --synth-seed.
    #[arg(long)]
    synthetic: Option<PathBuf>,
    #[arg(long, requires = "synthetic")]
    synth_seed: Option<u64>,
    #[arg(long)]
    train_frac: Option<f64>,
    #[arg(long)]
    min_doc_freq: Option<usize>,
    #[arg(long)]
    partitions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Truncation level (default 400).
    #[arg(long = "K", visible_alias = "k")]
    num_topics: Option<usize>,
    /// Gibbs iterations (default 2500).
    #[arg(long)]
    iters: Option<usize>,
    /// Iterations before collection starts (default 1000).
    #[arg(long)]
    burnin: Option<usize>,
    /// Topic-assignment-only sweeps during initialization (default 50).
    #[arg(long)]
    init_iters: Option<usize>,
    #[arg(long)]
    collect_every: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    a0: Option<f64>,
    #[arg(long)]
    b0: Option<f64>,
    #[arg(long)]
    e0: Option<f64>,
    #[arg(long)]
    f0: Option<f64>,
    #[arg(long)]
    lda_alpha_total: Option<f64>,
    /// Resample γ₀ in CRF-HDP.
    #[arg(long)]
    crf_sample_gamma0: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Shorter Geweke chains.
    #[arg(long)]
    quick: bool,
    /// Corrupt every kernel; the Geweke checks are then expected to fail.
    #[arg(long, value_name = "r-shape|crt-shape")]
    fault_inject: Option<Fault>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict the Geweke checks to these models.
    #[arg(long, value_delimiter = ',')]
    models: Vec<ModelKind>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    k_true: usize,
    #[arg(long)]
    docs: usize,
    #[arg(long)]
    vocab: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Dirichlet parameter of the true topics.
    #[arg(long, default_value_t = 0.1)]
    topic_concentration: f64,
    /// Fixed dispersion r_k.
    #[arg(long, default_value_t = 5.0, conflicts_with = "r_gamma")]
    r: f64,
    /// Draw r_k ~ Gamma(shape, scale) instead.
    #[arg(long, num_args = 2, value_names = ["SHAPE", "SCALE"])]
    r_gamma: Option<Vec<f64>>,
    /// Fixed probability p_j.
    #[arg(long, default_value_t = 0.5, conflicts_with = "p_beta")]
    p: f64,
    /// Draw p_j ~ Beta(a, b) instead.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    p_beta: Option<Vec<f64>>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Validate(args) => validate(args),
        Command::Synth(args) => synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let mut config = build_config(args)?;
    if config.output_dir.is_none() {
        return Err(CliError::Usage("--out is required".into()));
    }
    config.config_hash = None;
    let report = nbproc::run(config)?;
    println!(
        "{} perplexity {:.4} (pooled {:.4}), active topics {}, config {}",
        report.model, report.perplexity, report.pooled_perplexity, report.active_topics, report.config_hash
    );
    Ok(())
}

fn build_config(args: RunArgs) -> Result<RunConfig, CliError> {
    let corpus = match (&args.docword, &args.vocab, &args.synthetic) {
        (Some(d), Some(v), _) => Some(CorpusSource::Files { docword: d.clone(), vocab: v.clone() }),
        (_, _, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let settings: SynthSettings =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let seed = args.synth_seed.or(args.seed).unwrap_or(0);
            Some(CorpusSource::Synthetic { settings, seed })
        }
        _ => None,
    };
    let mut config = match (&args.config, args.model, corpus.clone()) {
        (Some(path), _, _) => RunConfig::from_json_file(path)?,
        (None, Some(model), Some(corpus)) => RunConfig::new(model, corpus),
        (None, None, _) => return Err(CliError::Usage("--model is required without --config".into())),
        (None, _, None) => {
            return Err(CliError::Usage(
                "a corpus is required: --docword and --vocab, --synthetic, or --config".into(),
            ))
        }
    };
    if let Some(model) = args.model {
        config.model = model;
    }
    if let Some(corpus) = corpus {
        config.corpus = corpus;
    }
    let h = &mut config.hyper;
    macro_rules! set {
        ($($target:expr => $value:expr),* $(,)?) => {
            $(if let Some(v) = $value { $target = v; })*
        };
    }
    set!(
        h.num_topics => args.num_topics,
        h.iters => args.iters,
        h.burnin => args.burnin,
        h.init_iters => args.init_iters,
        h.collect_every => args.collect_every,
        h.c => args.c,
        h.eta => args.eta,
        h.a0 => args.a0,
        h.b0 => args.b0,
        h.e0 => args.e0,
        h.f0 => args.f0,
        h.lda_alpha_total => args.lda_alpha_total,
        config.train_frac => args.train_frac,
        config.min_doc_freq => args.min_doc_freq,
        config.partitions => args.partitions,
        config.seed => args.seed,
        config.workers => args.workers,
    );
    if args.crf_sample_gamma0 {
        config.hyper.crf_sample_gamma0 = true;
    }
    if args.out.is_some() {
        config.output_dir = args.out;
    }
    Ok(config)
}

fn validate(args: ValidateArgs) -> Result<(), CliError> {
    let opts = ValidateOptions {
        quick: args.quick,
        fault: args.fault_inject,
        seed: args.seed,
        models: if args.models.is_empty() { ModelKind::ALL.to_vec() } else { args.models },
    };
    let outcomes = run_checks(&opts)?;
    print!("{}", render_table(&outcomes));
    let failed: Vec<_> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("failing checks: {}", failed.join(", "))))
    }
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let pair = |v: &Vec<f64>| (v[0], v[1]);
    let settings = SynthSettings {
        num_topics: args.k_true,
        vocab_size: args.vocab,
        num_docs: args.docs,
        topic_concentration: args.topic_concentration,
        dispersion: match args.r_gamma.as_ref().map(pair) {
            Some((shape, scale)) => ParamPrior::Gamma { shape, scale },
            None => ParamPrior::Fixed { value: args.r },
        },
        probability: match args.p_beta.as_ref().map(pair) {
            Some((a, b)) => ParamPrior::Beta { a, b },
            None => ParamPrior::Fixed { value: args.p },
        },
    };
    let (corpus, files) = write_synthetic(&settings, args.seed, &args.out)?;
    println!(
        "wrote {} documents, {} tokens to {} and {}",
        corpus.num_docs(),
        corpus.total_tokens(),
        files.docword.display(),
        files.vocab.display()
    );
    Ok(())
}
