use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use log::info;

use docsift::app::{self, Query, RunConfig};
use docsift::classifiers::Algorithm;
use docsift::pipeline::Representation;
use docsift::recommender::Filters;
use docsift::synth::{self, HashEncoder, SynthConfig};
use docsift::Error;

/// Classify scientific abstracts and recommend similar articles.
#[derive(Parser)]
#[command(name = "docsift", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random stream; overrides the config. Defaults to 1
    /// when neither sets one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CorpusArgs {
    /// JSONL metadata file (overrides paths.corpus).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Report directory (overrides paths.output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Load, clean and label the corpus; print its statistics.
    Ingest(CorpusArgs),
    /// Fit features and a classifier, index the corpus, write an archive.
    Train {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        archive: Option<PathBuf>,
        #[arg(long)]
        representation: Option<Representation>,
        #[arg(long)]
        algorithm: Option<Algorithm>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Compare representations and algorithms on a held-out split.
    Benchmark {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Comma-separated representations.
        #[arg(long, value_delimiter = ',')]
        representations: Vec<Representation>,
        /// Comma-separated algorithms.
        #[arg(long, value_delimiter = ',')]
        algorithms: Vec<Algorithm>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Fit LDA, or sweep the number of topics and report coherence.
    Topics {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Number of topics for a single fit.
        #[arg(long)]
        k: Option<usize>,
        /// Comma-separated K values to compare.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<usize>,
    },
    /// Rank indexed articles against text, an article id, or a history.
    Recommend {
        #[arg(long)]
        archive: Option<PathBuf>,
        #[arg(long, conflicts_with_all = ["id", "profile"])]
        text: Option<String>,
        #[arg(long, conflicts_with = "profile")]
        id: Option<String>,
        /// Comma-separated article ids.
        #[arg(long, value_delimiter = ',')]
        profile: Vec<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        from: Option<NaiveDate>,
        #[arg(long)]
        to: Option<NaiveDate>,
        /// Keep articles with any of these labels (repeatable).
        #[arg(long = "label")]
        labels: Vec<String>,
    },
    /// Verify an archive and print a summary.
    Inspect {
        #[arg(long)]
        archive: Option<PathBuf>,
    },
    /// Write a synthetic arXiv-like corpus, optionally with stand-in embeddings.
    Synth {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write hashed-word-vector embeddings here.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        dim: usize,
    },
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(1);
    Ok(cfg.with_seed(seed))
}

fn apply_corpus(cfg: &mut RunConfig, args: &CorpusArgs) {
    if let Some(c) = &args.corpus {
        cfg.paths.corpus = Some(c.clone());
    }
    if let Some(o) = &args.out {
        cfg.paths.output_dir = Some(o.clone());
    }
}

fn archive_path(cfg: &RunConfig, flag: &Option<PathBuf>) -> Result<PathBuf, Error> {
    match flag {
        Some(p) => Ok(p.clone()),
        None => cfg.archive_path().map(Path::to_path_buf),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = load_config(&cli)?;
    match &cli.command {
        Command::Ingest(args) => {
            apply_corpus(&mut cfg, args);
            print_json(&app::cmd_ingest(&cfg)?)
        }
        Command::Train {
            corpus,
            archive,
            representation,
            algorithm,
            embeddings,
        } => {
            apply_corpus(&mut cfg, corpus);
            if let Some(a) = archive {
                cfg.paths.archive = Some(a.clone());
            }
            if let Some(r) = representation {
                cfg.features.representation = *r;
            }
            if let Some(a) = algorithm {
                if *a != cfg.model.algorithm() {
                    cfg.model = a.default_config().with_seed(cfg.seed()?);
                }
            }
            if let Some(e) = embeddings {
                cfg.paths.embeddings = Some(e.clone());
            }
            print_json(&app::cmd_train(&cfg)?)
        }
        Command::Benchmark {
            corpus,
            representations,
            algorithms,
            embeddings,
        } => {
            apply_corpus(&mut cfg, corpus);
            if !representations.is_empty() {
                cfg.benchmark.representations = representations.clone();
            }
            if !algorithms.is_empty() {
                cfg.benchmark.algorithms = algorithms.clone();
            }
            if let Some(e) = embeddings {
                cfg.paths.embeddings = Some(e.clone());
            }
            let table = app::cmd_benchmark(&cfg)?;
            table.write_csv(std::io::stdout())?;
            info!("wrote benchmark.csv and benchmark.json to {}", cfg.output_dir().display());
            Ok(())
        }
        Command::Topics { corpus, k, sweep } => {
            apply_corpus(&mut cfg, corpus);
            if let Some(k) = k {
                cfg.features.lda.k = *k;
            }
            let sweep = (!sweep.is_empty()).then_some(sweep.as_slice());
            print_json(&app::cmd_topics(&cfg, sweep)?)
        }
        Command::Recommend {
            archive,
            text,
            id,
            profile,
            k,
            from,
            to,
            labels,
        } => {
            let path = archive_path(&cfg, archive)?;
            let query = match (text, id) {
                (Some(t), _) => Query::Text(t.clone()),
                (_, Some(i)) => Query::Id(i.clone()),
                _ if !profile.is_empty() => Query::Profile(profile.clone()),
                _ => return Err(Error::InvalidParameter("give one of --text, --id or --profile".into())),
            };
            let filters = Filters {
                date_from: *from,
                date_to: *to,
                labels: labels.clone(),
                min_citations: None,
            };
            let k = k.unwrap_or(cfg.recommend.k);
            print_json(&app::cmd_recommend(&path, &query, k, &filters)?)
        }
        Command::Inspect { archive } => {
            let path = archive_path(&cfg, archive)?;
            print_json(&app::cmd_inspect(&path)?)
        }
        Command::Synth { n, out, embeddings, dim } => {
            let records = synth::generate(&SynthConfig {
                n_records: *n,
                seed: cfg.seed()?,
                ..Default::default()
            })?;
            synth::write_jsonl(&records, out)?;
            if let Some(path) = embeddings {
                let enc = HashEncoder {
                    dim: *dim,
                    ..Default::default()
                };
                enc.encode_records(&records)?.write(path)?;
            }
            info!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
