use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use revertrisk::classifiers::{train_final_classifier, FeatureSet, FinalClassifierConfig, PreviousRevisionIndex};
use revertrisk::corpus::ingest::{ingest, RawRevision};
use revertrisk::corpus::{apply_quality_filters, read_jsonl, slices, write_jsonl, RevisionRecord};
use revertrisk::diff::{diff_entities, ContentDelta};
use revertrisk::entity::{parse_entity, LabelMap};
use revertrisk::evaluation::{sliced_report, FairnessGroupSpec, ScoredDataset, ScoredRow};
use revertrisk::pipeline::{
    final_training_rows, load_json, prepare_corpus, run_pipeline, save_json, train_content_stage, ModelBundle,
    RevisionScorer,
};
use revertrisk::service::{self, AppConfig, ServiceOverrides};
use revertrisk::synthetic::{generate_corpus, SyntheticConfig};

type BoxError = Box<dyn std::error::Error + Send + Sync>;

/// A command line that parsed but cannot run as given.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "revertrisk", version, about = "Revert-risk scoring for knowledge-graph revisions")]
struct Cli {
    /// TOML configuration file with [pipeline], [report] and [service] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for sampling, splitting, training and bootstrap.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    content_model: PathBuf,
    #[arg(long)]
    final_model: PathBuf,
    /// Tab-separated `id<TAB>label` file.
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeatureSetArg {
    Full,
    MetadataOnly,
    ContentOnly,
}

impl From<FeatureSetArg> for FeatureSet {
    fn from(a: FeatureSetArg) -> Self {
        match a {
            FeatureSetArg::Full => FeatureSet::Full,
            FeatureSetArg::MetadataOnly => FeatureSet::MetadataOnly,
            FeatureSetArg::ContentOnly => FeatureSet::ContentOnly,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Convert raw revision dumps into canonical revision records (JSON Lines).
    Ingest {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Quality filters, negative balancing and the LMC/final/holdout split.
    Prepare {
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Stop after the quality filters and write `filtered.jsonl`.
        #[arg(long)]
        filter_only: bool,
    },
    /// Train the per-change content scorer on LMC-train records.
    TrainContent {
        input: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train the final classifier on final-train records.
    TrainFinal {
        input: PathBuf,
        #[arg(long)]
        content_model: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Full revision history for time-since-previous-edit; defaults to the input.
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "full")]
        feature_set: FeatureSetArg,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Score revision records in batch; writes scored rows (JSON Lines).
    Score {
        input: PathBuf,
        #[command(flatten)]
        models: ModelArgs,
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// AUC with bootstrap interval, filter rates, fairness and per-slice AUC.
    Evaluate {
        scored: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        resamples: Option<usize>,
        #[arg(long)]
        resample_size: Option<usize>,
    },
    /// Content deltas between two entity JSON documents.
    Diff {
        parent: PathBuf,
        current: PathBuf,
    },
    /// Render a JSON array of deltas as prefixed text.
    Textualize {
        deltas: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Run the scoring HTTP service.
    Serve {
        #[arg(long)]
        listen: Option<std::net::SocketAddr>,
        #[arg(long)]
        content_model: Option<PathBuf>,
        #[arg(long)]
        final_model: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        upstream_url: Option<String>,
        /// Upstream requests per second.
        #[arg(long)]
        rate_limit: Option<f64>,
    },
    /// Train everything and score the holdout with the full model and each baseline.
    Pipeline {
        input: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write a seeded synthetic corpus (records.jsonl, labels.tsv).
    Generate {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        revisions: Option<usize>,
    },
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), BoxError> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => {
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, value)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>, BoxError> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn read_records<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, BoxError> {
    read_jsonl(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn history_index(input: &[RevisionRecord], history: Option<&Path>) -> Result<PreviousRevisionIndex, BoxError> {
    Ok(match history {
        Some(p) => PreviousRevisionIndex::build(&read_records::<RevisionRecord>(p)?),
        None => PreviousRevisionIndex::build(input),
    })
}

fn run(cli: Cli) -> Result<(), BoxError> {
    let mut config = match &cli.config {
        Some(p) => AppConfig::load(p)?,
        None => AppConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.pipeline = config.pipeline.with_seed(seed);
        config.report.bootstrap.seed = seed;
    }
    let pipeline = &config.pipeline;

    match cli.command {
        Command::Ingest { input, output } => {
            let raw: Vec<RawRevision> = read_records(&input)?;
            let records = raw.into_iter().map(ingest).collect::<Result<Vec<_>, _>>()?;
            write_jsonl(&output, &records)?;
            eprintln!("ingested {} revisions", records.len());
        }
        Command::Prepare {
            input,
            out_dir,
            filter_only,
        } => {
            let records: Vec<RevisionRecord> = read_records(&input)?;
            std::fs::create_dir_all(&out_dir)?;
            if filter_only {
                let (kept, report) = apply_quality_filters(records, &pipeline.ui_tag);
                write_jsonl(out_dir.join("filtered.jsonl"), &kept)?;
                write_json(Some(&out_dir.join("filter_report.json")), &report)?;
            } else {
                let prepared = prepare_corpus(records, pipeline)?;
                let split = &prepared.split;
                write_jsonl(out_dir.join("lmc_train.jsonl"), &split.lmc_train)?;
                write_jsonl(out_dir.join("final_train.jsonl"), &split.final_train)?;
                write_jsonl(out_dir.join("holdout.jsonl"), &split.holdout)?;
                write_json(Some(&out_dir.join("filter_report.json")), &prepared.filter_report)?;
                eprintln!(
                    "lmc_train {} final_train {} holdout {} (cutoff {})",
                    split.lmc_train.len(),
                    split.final_train.len(),
                    split.holdout.len(),
                    split.cutoff
                );
            }
        }
        Command::TrainContent { input, labels, output } => {
            let records: Vec<RevisionRecord> = read_records(&input)?;
            let labels = LabelMap::load_tsv(&labels)?;
            let (model, report) = train_content_stage(&records, &labels, pipeline)?;
            save_json(&output, &model)?;
            write_json(None, &report)?;
        }
        Command::TrainFinal {
            input,
            content_model,
            labels,
            history,
            feature_set,
            output,
        } => {
            let records: Vec<RevisionRecord> = read_records(&input)?;
            let labels = LabelMap::load_tsv(&labels)?;
            let content = load_json(&content_model)?;
            let index = history_index(&records, history.as_deref())?;
            let (train, valid) = final_training_rows(&records, &content, &labels, &index, pipeline);
            let final_config = FinalClassifierConfig {
                feature_set: feature_set.into(),
                ..pipeline.final_model.clone()
            };
            let model = train_final_classifier(&train, &valid, &final_config)?;
            save_json(&output, &model)?;
            let g = &model.gbdt;
            eprintln!(
                "kept {} trees of {}, validation loss {:.5}",
                g.trees.len(),
                g.n_iterations,
                g.best_iteration.checked_sub(1).and_then(|i| g.validation_loss.get(i)).copied().unwrap_or(f64::NAN)
            );
        }
        Command::Score {
            input,
            models,
            history,
            output,
        } => {
            let records: Vec<RevisionRecord> = read_records(&input)?;
            let bundle = ModelBundle::load(&models.content_model, &models.final_model)?;
            let scorer = RevisionScorer::new(bundle, LabelMap::load_tsv(&models.labels)?)?;
            let index = history_index(&records, history.as_deref())?;
            let rows: Vec<ScoredRow> = records
                .iter()
                .map(|r| ScoredRow {
                    score: scorer.score_record(r, index.previous(r.revision_id)).probability,
                    label: r.reverted,
                    groups: r.slice_groups(&pipeline.newcomer),
                })
                .collect();
            write_jsonl(&output, &rows)?;
        }
        Command::Evaluate {
            scored,
            output,
            resamples,
            resample_size,
        } => {
            let data = ScoredDataset::load_jsonl(&scored).map_err(|e| format!("{}: {e}", scored.display()))?;
            let mut report_config = config.report.clone();
            if let Some(n) = resamples {
                report_config.bootstrap.n_resamples = n;
            }
            if let Some(m) = resample_size {
                report_config.bootstrap.resample_size = m;
            }
            let specs = [FairnessGroupSpec::anonymous(), FairnessGroupSpec::newcomer()];
            let names = [slices::EDITOR, slices::TENURE, slices::ENTITY, slices::CONTENT, slices::LANGUAGE];
            let report = sliced_report(&data, &specs, &names, &report_config)?;
            write_json(output.as_deref(), &report)?;
        }
        Command::Diff { parent, current } => {
            let parent = parse_entity(&read_file(&parent)?)?;
            let current = parse_entity(&read_file(&current)?)?;
            write_json(None, &diff_entities(Some(&parent), &current)?)?;
        }
        Command::Textualize { deltas, labels } => {
            let deltas: Vec<ContentDelta> = serde_json::from_slice(&read_file(&deltas)?)?;
            let labels = match labels {
                Some(p) => LabelMap::load_tsv(&p)?,
                None => LabelMap::new(),
            };
            write_json(None, &pipeline.graph2text.textualize_revision(&deltas, &labels, None))?;
        }
        Command::Serve {
            listen,
            content_model,
            final_model,
            labels,
            workers,
            upstream_url,
            rate_limit,
        } => {
            let overrides = ServiceOverrides {
                listen,
                content_model,
                final_model,
                labels,
                workers,
                upstream_url,
                rate_limit,
            };
            let resolved = AppConfig::resolve(cli.config.as_deref(), |k| std::env::var(k).ok(), &overrides)?;
            let service_config = resolved.service;
            service_config.validate().map_err(|e| UsageError(e.to_string()))?;
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(service_config.workers)
                .enable_all()
                .build()?;
            runtime.block_on(service::run(&service_config, async {
                let _ = tokio::signal::ctrl_c().await;
            }))?;
        }
        Command::Pipeline { input, labels, out_dir } => {
            let records: Vec<RevisionRecord> = read_records(&input)?;
            let labels = LabelMap::load_tsv(&labels)?;
            let outcome = run_pipeline(records, &labels, pipeline)?;
            std::fs::create_dir_all(&out_dir)?;
            let bundle = outcome
                .bundle(FeatureSet::Full, &pipeline.graph2text)
                .ok_or("full model missing")?;
            bundle.save(out_dir.join("content.json"), out_dir.join("final.json"))?;
            for (name, data) in &outcome.holdout {
                write_jsonl(out_dir.join(format!("holdout_{name}.jsonl")), data.rows())?;
                eprintln!("{name}: holdout AUC {:.4}", revertrisk::evaluation::auc(data)?);
            }
            write_json(Some(&out_dir.join("filter_report.json")), &outcome.prepared.filter_report)?;
        }
        Command::Generate { out_dir, revisions } => {
            let mut synth = SyntheticConfig {
                seed: pipeline.seed,
                ..Default::default()
            };
            if let Some(n) = revisions {
                synth.n_revisions = n;
            }
            let corpus = generate_corpus(&synth);
            std::fs::create_dir_all(&out_dir)?;
            write_jsonl(out_dir.join("records.jsonl"), &corpus.records())?;
            corpus.labels.write_tsv(BufWriter::new(File::create(out_dir.join("labels.tsv"))?))?;
            eprintln!("wrote {} revisions", corpus.revisions.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(io::stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is::<UsageError>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
