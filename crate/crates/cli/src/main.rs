use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use quotematch::behavior::LabelThresholds;
use quotematch::matcher::{MinHashParams, Verification, DEFAULT_THRESHOLD};
use quotematch::model::Hyperparams;
use quotematch::pipeline::{self, PipelineConfig, ReportInputs, ScanConfig};
use quotematch::synth::SyntheticSpec;
use quotematch::Error;

#[derive(Parser)]
#[command(
    name = "quotematch",
    version,
    about = "Fabricated-quote matching and circulator/debunker modeling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, merge or filter reference corpora.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Build the MinHash/LSH index for a corpus.
    Index(IndexArgs),
    /// Match every timeline post and write per-user stats.
    Scan(ScanArgs),
    /// Label users and balance the dataset.
    Label(LabelArgs),
    /// Encode labeled users' ties as multi-hot vectors.
    Features(FeaturesArgs),
    /// Cross-validate and fit the logistic model.
    Train(TrainArgs),
    /// Emit coefficient, category and class-summary reports.
    Report(ReportArgs),
    /// Generate a seeded synthetic dataset.
    Synth(SynthArgs),
    /// Run every stage end to end.
    Run(RunArgs),
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Load and merge one or more TSV files; earlier files win on conflicts.
    Build {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        lex: PrefixArg,
    },
    /// Merge two corpora.
    Merge {
        a: PathBuf,
        b: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        lex: PrefixArg,
    },
    /// Remove ids listed in an exclusion file.
    Filter {
        corpus: PathBuf,
        #[arg(long)]
        exclude: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        lex: PrefixArg,
    },
}

#[derive(Args, Clone)]
struct PrefixArg {
    /// Quote-introduction prefix lexicon, one phrase per line.
    #[arg(long)]
    prefixes: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct MinHashArgs {
    #[arg(long, default_value_t = MinHashParams::default().k)]
    minhash_k: usize,
    #[arg(long, default_value_t = MinHashParams::default().bands)]
    bands: usize,
    #[arg(long, default_value_t = MinHashParams::default().rows)]
    rows: usize,
    /// Seed for the MinHash family (and CV shuffles where applicable).
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Word n-gram size for shingles.
    #[arg(long, default_value_t = 1)]
    shingle_n: usize,
}

impl MinHashArgs {
    fn params(&self) -> quotematch::Result<MinHashParams> {
        MinHashParams::new(self.minhash_k, self.seed, self.bands, self.rows)
    }
}

#[derive(Args, Clone)]
struct LabelFlags {
    /// Minimum refutes for a strict debunker.
    #[arg(long, default_value_t = LabelThresholds::default().min_refutes_strict)]
    min_refutes: usize,
    /// Minimum refutes for a debunker added while balancing.
    #[arg(long, default_value_t = LabelThresholds::default().min_refutes_balance)]
    balance: usize,
}

impl LabelFlags {
    fn thresholds(&self) -> LabelThresholds {
        LabelThresholds {
            min_refutes_strict: self.min_refutes,
            min_refutes_balance: self.balance,
            ..LabelThresholds::default()
        }
    }
}

#[derive(Args, Clone)]
struct ScanFlags {
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = quotematch::behavior::DEFAULT_MAX_POSTS)]
    max_posts: usize,
    /// Score candidates by signature estimate instead of exact Jaccard.
    #[arg(long)]
    signature_only: bool,
    /// Refute-term lexicon, one phrase per line.
    #[arg(long)]
    refutes: Option<PathBuf>,
}

impl ScanFlags {
    fn config(&self, thresholds: LabelThresholds) -> ScanConfig {
        ScanConfig {
            threshold: self.threshold,
            max_posts: self.max_posts,
            verification: if self.signature_only {
                Verification::SignatureOnly
            } else {
                Verification::Exact
            },
            thresholds,
        }
    }
}

#[derive(Args, Clone)]
struct ModelFlags {
    #[arg(long, default_value_t = Hyperparams::default().l2_strength)]
    l2: f64,
    #[arg(long, default_value_t = Hyperparams::default().max_iters)]
    max_iters: usize,
    #[arg(long, default_value_t = 10)]
    cv_repeats: usize,
}

impl ModelFlags {
    fn hyperparams(&self, seed: u64) -> Hyperparams {
        Hyperparams {
            l2_strength: self.l2,
            max_iters: self.max_iters,
            seed,
            ..Hyperparams::default()
        }
    }
}

#[derive(Args)]
struct IndexArgs {
    corpus: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    minhash: MinHashArgs,
    #[command(flatten)]
    lex: PrefixArg,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    timelines: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    scan: ScanFlags,
    #[command(flatten)]
    labels: LabelFlags,
    #[command(flatten)]
    lex: PrefixArg,
}

#[derive(Args)]
struct LabelArgs {
    /// stats.csv from `scan`.
    stats: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    labels: LabelFlags,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    ties: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    /// Drop columns held by fewer users than this.
    #[arg(long, default_value_t = 0)]
    min_support: usize,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory written by `features`.
    features: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    model: ModelFlags,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    ties: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    stats: PathBuf,
    /// CSV with header `target_id,category`.
    #[arg(long)]
    categories: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    top_k: usize,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, default_value_t = SyntheticSpec::default().n_per_class)]
    n_per_class: usize,
    #[arg(long, default_value_t = SyntheticSpec::default().n_neither)]
    n_neither: usize,
    #[arg(long, default_value_t = SyntheticSpec::default().planted_per_class)]
    planted: usize,
    #[arg(long, default_value_t = SyntheticSpec::default().timeline_len)]
    timeline_len: usize,
    #[arg(long, default_value_t = SyntheticSpec::default().label_noise)]
    noise: f64,
    #[arg(long, default_value_t = SyntheticSpec::default().seed)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    /// Corpus TSV files, merged in order.
    #[arg(long = "corpus", required = true)]
    corpus_files: Vec<PathBuf>,
    #[arg(long)]
    exclude: Option<PathBuf>,
    #[arg(long)]
    timelines: PathBuf,
    #[arg(long)]
    ties: PathBuf,
    #[arg(long)]
    categories: Option<PathBuf>,
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    min_support: usize,
    #[arg(long, default_value_t = 100)]
    top_k: usize,
    #[command(flatten)]
    minhash: MinHashArgs,
    #[command(flatten)]
    scan: ScanFlags,
    #[command(flatten)]
    labels: LabelFlags,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    lex: PrefixArg,
}

fn print_json<T: Serialize>(value: &T) -> quotematch::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::MissingInput(_) => 2,
        Error::VersionMismatch(_) => 3,
        Error::Contract(_) | Error::Params(_) | Error::Parse { .. } | Error::Validation(_) | Error::Json(_) => 4,
        Error::Io { .. } => 1,
    }
}

fn configure_threads() {
    let Ok(v) = std::env::var("QUOTEMATCH_THREADS") else {
        return;
    };
    match v.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring QUOTEMATCH_THREADS={v:?}"),
    }
}

fn prefixes(lex: &PrefixArg) -> quotematch::Result<quotematch::textnorm::PrefixLexicon> {
    pipeline::prefix_lexicon(lex.prefixes.as_deref())
}

fn run(cli: Cli) -> quotematch::Result<()> {
    match cli.command {
        Command::Corpus(CorpusCommand::Build { inputs, out, lex }) => {
            print_json(&pipeline::corpus_build(&inputs, &prefixes(&lex)?, &out)?)
        }
        Command::Corpus(CorpusCommand::Merge { a, b, out, lex }) => {
            let report = pipeline::corpus_merge(&a, &b, &prefixes(&lex)?, &out)?;
            info!("{} collision(s)", report.collisions);
            print_json(&report)
        }
        Command::Corpus(CorpusCommand::Filter {
            corpus,
            exclude,
            out,
            lex,
        }) => print_json(&pipeline::corpus_filter(&corpus, &exclude, &prefixes(&lex)?, &out)?),
        Command::Index(a) => print_json(&pipeline::index_build(
            &a.corpus,
            &prefixes(&a.lex)?,
            &a.minhash.params()?,
            a.minhash.shingle_n,
            &a.out,
        )?),
        Command::Scan(a) => {
            let refutes = pipeline::refute_lexicon(a.scan.refutes.as_deref())?;
            print_json(&pipeline::scan(
                &a.corpus,
                &a.index,
                &a.timelines,
                &prefixes(&a.lex)?,
                &refutes,
                &a.scan.config(a.labels.thresholds()),
                &a.out,
            )?)
        }
        Command::Label(a) => print_json(&pipeline::label(&a.stats, &a.labels.thresholds(), &a.out)?),
        Command::Features(a) => print_json(&pipeline::features(&a.ties, &a.labels, a.min_support, &a.out)?),
        Command::Train(a) => {
            let summary = pipeline::train(&a.features, &a.model.hyperparams(a.seed), a.model.cv_repeats, &a.out)?;
            print_json(&summary.cv.mean)
        }
        Command::Report(a) => print_json(&pipeline::report(
            &ReportInputs {
                model: &a.model,
                manifest: &a.manifest,
                category_map: a.categories.as_deref(),
                ties: &a.ties,
                labels: &a.labels,
                stats: &a.stats,
                top_k: a.top_k,
            },
            &a.out,
        )?),
        Command::Synth(a) => {
            let spec = SyntheticSpec {
                n_per_class: a.n_per_class,
                n_neither: a.n_neither,
                planted_per_class: a.planted,
                timeline_len: a.timeline_len,
                label_noise: a.noise,
                seed: a.seed,
                ..SyntheticSpec::default()
            };
            pipeline::synth(&spec, &a.out)?;
            info!("wrote synthetic dataset to {}", a.out.display());
            Ok(())
        }
        Command::Run(a) => {
            let config = PipelineConfig {
                corpus_files: a.corpus_files,
                exclusion_list: a.exclude,
                prefix_lexicon: a.lex.prefixes,
                refute_lexicon: a.scan.refutes.clone(),
                timelines_dir: a.timelines,
                ties_file: a.ties,
                category_map: a.categories,
                minhash: a.minhash.params()?,
                shingle_n: a.minhash.shingle_n,
                scan: a.scan.config(a.labels.thresholds()),
                hyperparams: a.model.hyperparams(a.minhash.seed),
                cv_repeats: a.model.cv_repeats,
                min_support: a.min_support,
                top_k: a.top_k,
                output_dir: a.out,
            };
            let summary = pipeline::run_all(&config)?;
            print_json(&summary.cv_mean)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    configure_threads();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
