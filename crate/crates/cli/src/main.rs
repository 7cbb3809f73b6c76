use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{ArgAction, Args, Parser, Subcommand};
use zipfaug::augment::{Backend, Law, ResampleMode};
use zipfaug::corpus::Format;
use zipfaug::labeler::{Category, Granularity};

mod commands;
mod config;

use commands::{AugmentArgs, Ctx};
use config::{usage, CliError, RunConfig};

/// Zipf-law guided augmentation of imbalanced BIO datasets.
///
/// Every command writes its outputs under the run directory (`--out`,
/// default `runs/run-<unix seconds>`) and logs to standard error.
/// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
#[derive(Debug, Parser)]
#[command(name = "zipfaug", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Run directory for every output.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Upper bound on worker threads.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// More log output; repeat for debug level.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true)]
    quiet: bool,
}

fn parse<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

fn parse_grid(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got {s:?}"))?;
    let lo = lo.trim().parse::<i64>().map_err(|e| e.to_string())?;
    let hi = hi.trim().parse::<i64>().map_err(|e| e.to_string())?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn parse_ratios(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(format!("expected TRAIN,DEV,TEST, got {s:?}")),
    }
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Corpus file or directory.
    #[arg(long, value_name = "PATH")]
    corpus: Option<PathBuf>,
    /// `conll-bio` or `plain-lines`; inferred from the extension otherwise.
    #[arg(long, value_parser = parse::<Format>)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct LawArgs {
    /// `classical` or `extended`.
    #[arg(long, value_parser = parse::<Law>)]
    law: Option<Law>,
    /// Inclusive beta search range for the extended law, e.g. -200..0.
    #[arg(long, value_name = "LO..HI", allow_hyphen_values = true, value_parser = parse_grid)]
    beta_grid: Option<(i64, i64)>,
    /// Fixed split rank instead of the fitted one.
    #[arg(long)]
    r0: Option<usize>,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// `markov` or `remote`.
    #[arg(long, value_parser = parse::<Backend>)]
    backend: Option<Backend>,
    /// Remote generation endpoint URL.
    #[arg(long, value_name = "URL")]
    endpoint: Option<String>,
    /// Markov chain order.
    #[arg(long, value_name = "K")]
    markov_order: Option<usize>,
    /// Base seed for every random choice.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct LabelArgs {
    /// Tab-separated `surface<TAB>tag` lexicon.
    #[arg(long, value_name = "FILE")]
    pos_lexicon: Option<PathBuf>,
    /// Remote POS tagger URL; replaces the lexicon.
    #[arg(long, value_name = "URL")]
    pos_endpoint: Option<String>,
    /// Tagset the POS tags must belong to: `chinese` or `penn`.
    #[arg(long)]
    tagset: Option<String>,
    /// JSON rule list.
    #[arg(long, value_name = "FILE")]
    rules: Option<PathBuf>,
    /// JSON map from category to trigger words.
    #[arg(long, value_name = "FILE")]
    triggers: Option<PathBuf>,
    /// `word` or `character`.
    #[arg(long, value_parser = parse::<Granularity>)]
    granularity: Option<Granularity>,
    /// Keep sentences without a verified entity.
    #[arg(long)]
    keep_unlabeled: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a Zipf law to the corpus word frequencies.
    Fit {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        law: LawArgs,
    },
    /// Split sentences into common and rare.
    Classify {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        law: LawArgs,
        /// Reuse the split point of a saved fit report.
        #[arg(long, value_name = "FILE")]
        fit_report: Option<PathBuf>,
    },
    /// Generate inductive and expanded sentences.
    Generate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        law: LawArgs,
        /// Reuse the split point of a saved fit report.
        #[arg(long, value_name = "FILE")]
        fit_report: Option<PathBuf>,
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Rule-label the sentences of a corpus.
    Label {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        labeling: LabelArgs,
    },
    /// Run the full pipeline, or a resampling baseline.
    Augment {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        law: LawArgs,
        #[command(flatten)]
        gen: GenArgs,
        #[command(flatten)]
        labeling: LabelArgs,
        /// Resample the raw data (`ros` or `rus`) instead of generating.
        #[arg(long, value_parser = parse::<ResampleMode>)]
        resample: Option<ResampleMode>,
        /// Category to balance around; defaults to the rarest one.
        #[arg(long, value_parser = parse::<Category>, requires = "resample")]
        target: Option<Category>,
        /// Also write train/dev/test splits, e.g. 0.8,0.1,0.1.
        #[arg(long, value_name = "TRAIN,DEV,TEST", value_parser = parse_ratios)]
        split: Option<(f64, f64, f64)>,
    },
    /// Entity-level frequency and imbalance report for a labeled corpus.
    Report {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Deepest progressive exclusion step.
        #[arg(long, default_value_t = zipfaug::augment::EXCLUSION_MAX)]
        exclusion_max: usize,
    },
    /// Generation counts as the split point moves.
    Sweep {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        law: LawArgs,
        /// Reuse the split point of a saved fit report.
        #[arg(long, value_name = "FILE")]
        fit_report: Option<PathBuf>,
        /// Signed percentages of the rank span.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "-50,-30,-10,0,10,30,50"
        )]
        offsets: Vec<i32>,
    },
}

impl CorpusArgs {
    fn apply(&self, c: &mut RunConfig) {
        if let Some(p) = &self.corpus {
            c.corpus = Some(p.clone());
        }
        if let Some(f) = self.format {
            c.format = Some(f);
        }
    }
}

impl LawArgs {
    fn apply(&self, c: &mut RunConfig) -> Result<(), CliError> {
        let p = &mut c.pipeline;
        if let Some(law) = self.law {
            p.law = law;
        }
        if let Some(g) = self.beta_grid {
            p.beta_grid = Some(g);
        }
        if let Some(r0) = self.r0 {
            p.r0 = Some(r0);
        }
        commands::check_law(p.law, self.beta_grid.is_some())
    }
}

impl GenArgs {
    fn apply(&self, c: &mut RunConfig) {
        let g = &mut c.pipeline.generator;
        if let Some(b) = self.backend {
            g.backend = b;
        }
        if let Some(e) = &self.endpoint {
            g.remote.endpoint = e.clone();
        }
        if let Some(k) = self.markov_order {
            g.markov_order = k;
        }
        if let Some(s) = self.seed {
            g.orchestration.seed = s;
        }
    }
}

impl LabelArgs {
    fn apply(&self, c: &mut RunConfig) {
        if let Some(p) = &self.pos_lexicon {
            c.pos_lexicon = Some(p.clone());
        }
        if let Some(e) = &self.pos_endpoint {
            c.pos_endpoint = Some(e.clone());
        }
        if let Some(t) = &self.tagset {
            c.tagset = Some(t.clone());
        }
        if let Some(p) = &self.rules {
            c.rules = Some(p.clone());
        }
        if let Some(p) = &self.triggers {
            c.triggers = Some(p.clone());
        }
        if let Some(g) = self.granularity {
            c.pipeline.granularity = g;
        }
        if self.keep_unlabeled {
            c.pipeline.keep_unlabeled = true;
        }
    }
}

fn default_run_dir() -> PathBuf {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    PathBuf::from("runs").join(format!("run-{secs}"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.global.out {
        config.out = Some(out.clone());
    }
    if let Some(n) = cli.global.threads {
        config.threads = Some(n);
    }

    match &cli.command {
        Command::Fit { corpus, law }
        | Command::Classify { corpus, law, .. }
        | Command::Sweep { corpus, law, .. } => {
            corpus.apply(&mut config);
            law.apply(&mut config)?;
        }
        Command::Generate {
            corpus, law, gen, ..
        } => {
            corpus.apply(&mut config);
            law.apply(&mut config)?;
            gen.apply(&mut config);
        }
        Command::Label { corpus, labeling } => {
            corpus.apply(&mut config);
            labeling.apply(&mut config);
        }
        Command::Augment {
            corpus,
            law,
            gen,
            labeling,
            ..
        } => {
            corpus.apply(&mut config);
            law.apply(&mut config)?;
            gen.apply(&mut config);
            labeling.apply(&mut config);
        }
        Command::Report { corpus, .. } => corpus.apply(&mut config),
    }
    config.validate()?;

    if let Some(n) = config.threads {
        config.pipeline.generator.orchestration.max_workers = n;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("thread pool: {e}")))?;
    }
    let out = config.out.clone().unwrap_or_else(default_run_dir);
    let ctx = Ctx::new(config, out)?;

    match &cli.command {
        Command::Fit { .. } => commands::fit(&ctx),
        Command::Classify { fit_report, .. } => commands::classify(&ctx, fit_report.as_deref()),
        Command::Generate { fit_report, .. } => commands::generate(&ctx, fit_report.as_deref()),
        Command::Label { .. } => commands::label(&ctx),
        Command::Augment {
            resample,
            target,
            split,
            ..
        } => commands::augment(
            &ctx,
            &AugmentArgs {
                resample: *resample,
                target: *target,
                split: *split,
            },
        ),
        Command::Report { exclusion_max, .. } => commands::report(&ctx, *exclusion_max),
        Command::Sweep {
            fit_report,
            offsets,
            ..
        } => commands::sweep(&ctx, fit_report.as_deref(), offsets),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match (cli.global.quiet, cli.global.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .parse_env("ZIPFAUG_LOG")
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
