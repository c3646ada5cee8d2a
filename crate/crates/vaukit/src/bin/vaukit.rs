//! Thin command-line front end over the library: every subcommand parses
//! files with `vaukit::io`, calls one library operation, and writes the
//! result atomically. Logs are line-oriented JSON on standard error.
//!
//! Exit codes: 0 success, 2 validation/parameter/input error, 3 external
//! service failure, 4 numeric divergence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use vaukit::dataengine::{
    build_instructions, AnnotationRecord, BuildConfig, PromptPool,
};
use vaukit::io::{self, LabelRecord, SampleRecord, ScoreRecord};
use vaukit::metrics::{detection_result, evaluate_text_corpus, EvalReport, TextItem};
use vaukit::sampler::{self, BenchItem};
use vaukit::scorer::{
    train, Checkpoint, FeatureSequence, LossWeights, ModelConfig, ScorerModel, TrainConfig,
};
use vaukit::timeline::{derive_frame_labels, FrameLabels, ScoreTimeline};
use vaukit::{Error, Result};

#[derive(Parser)]
#[command(name = "vaukit", version, about = "Video anomaly understanding toolkit")]
struct Cli {
    /// TOML config file supplying defaults; flags and environment override it.
    #[arg(long, global = true, env = "VAUKIT_CONFIG")]
    config: Option<PathBuf>,
    /// Worker-thread cap for per-video stages; output order is always input
    /// order.
    #[arg(long, global = true, env = "VAUKIT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SamplerKind {
    Ats,
    Uniform,
    Topk,
}

impl SamplerKind {
    fn name(self) -> &'static str {
        match self {
            SamplerKind::Ats => "ats",
            SamplerKind::Uniform => "uniform",
            SamplerKind::Topk => "topk",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Derive binary frame labels from an event file.
    Labels {
        /// Event file: JSON array of {start_s, end_s, label}.
        #[arg(long)]
        events: PathBuf,
        /// Number of frame-level scores/labels the timeline holds.
        #[arg(long)]
        frames: usize,
        /// Video id recorded in the output (default: event file stem).
        #[arg(long)]
        video: Option<String>,
        #[arg(long, env = "VAUKIT_STRIDE")]
        stride: Option<u32>,
        #[arg(long, env = "VAUKIT_FPS")]
        fps: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample frame indices from score timelines.
    Sample {
        /// Score file: JSONL records, or a single-video CSV.
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, value_enum)]
        sampler: SamplerKind,
        #[arg(long, env = "VAUKIT_TAU")]
        tau: Option<f64>,
        #[arg(long, env = "VAUKIT_N")]
        n: Option<usize>,
        /// Stride/fps metadata when reading CSV scores.
        #[arg(long, env = "VAUKIT_STRIDE")]
        stride: Option<u32>,
        #[arg(long, env = "VAUKIT_FPS")]
        fps: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare ats/uniform/topk coverage over a corpus at several budgets.
    BenchSamplers {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Comma-separated sample budgets.
        #[arg(long)]
        budgets: Option<String>,
        #[arg(long, env = "VAUKIT_TAU")]
        tau: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: OutFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the anomaly scorer on feature files with frame labels.
    Train {
        /// Feature file, or directory of .feat/.csv feature files.
        #[arg(long)]
        features: PathBuf,
        /// Frame labels: JSONL {"video", "labels"}.
        #[arg(long)]
        labels: PathBuf,
        /// Master seed; training is bit-reproducible given the same seed.
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
        /// Disable the dual memory banks.
        #[arg(long)]
        no_memory: bool,
        /// Checkpoint output path (manifest sidecar at <out>.json).
        #[arg(long)]
        out: PathBuf,
    },
    /// Score feature files with a trained checkpoint.
    Score {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long, env = "VAUKIT_STRIDE")]
        stride: Option<u32>,
        #[arg(long, env = "VAUKIT_FPS")]
        fps: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build instruction conversations from annotation records.
    BuildInstructions {
        /// One JSON record, or JSONL with one record per line.
        #[arg(long)]
        annotations: PathBuf,
        /// Prompt pools JSON; defaults to the built-in pools.
        #[arg(long)]
        pools: Option<PathBuf>,
        /// Master seed for prompt selection.
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        split: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Review-queue output for non-decomposable summaries.
        #[arg(long)]
        review_out: Option<PathBuf>,
    },
    /// ROC-AUC and average precision of scores against frame labels.
    EvalDetect {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: OutFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// Text metrics (BLEU, ROUGE-L, CIDEr, METEOR-lite) per granularity.
    EvalText {
        /// Predictions: JSONL {"id", "type", "text"}.
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        references: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: OutFormat,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Optional defaults from the TOML config file; lowest precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    tau: Option<f64>,
    n: Option<usize>,
    stride: Option<u32>,
    fps: Option<f64>,
    budgets: Option<Vec<usize>>,
    epochs: Option<usize>,
    learning_rate: Option<f64>,
    batch_size: Option<usize>,
    hidden: Option<usize>,
    dataset: Option<String>,
    split: Option<String>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Malformed {
                path: p.display().to_string(),
                message: e.to_string(),
            })?;
            toml::from_str(&text).map_err(|e| Error::Malformed {
                path: p.display().to_string(),
                message: e.to_string(),
            })
        }
    }
}

fn log(level: &str, msg: &str) {
    eprintln!("{}", json!({"level": level, "msg": msg}));
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            log("error", &e.to_string());
            std::process::exit(e.exit_code());
        }
    }
}

/// Writes the effective configuration next to an output for reproducibility.
fn write_manifest(out: &Path, command: &str, effective: serde_json::Value) -> Result<()> {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    let manifest = json!({"command": command, "config": effective});
    io::atomic_write(&out.with_file_name(name), serde_json::to_string_pretty(&manifest)?.as_bytes())
}

/// Loads one feature file or every .feat/.csv file in a directory, sorted
/// by file name.
fn load_features(path: &Path) -> Result<Vec<FeatureSequence>> {
    let mut files = Vec::new();
    if path.is_dir() {
        for entry in std::fs::read_dir(path)? {
            let p = entry?.path();
            match p.extension().and_then(|e| e.to_str()) {
                Some("feat") | Some("csv") => files.push(p),
                _ => {}
            }
        }
        files.sort();
        if files.is_empty() {
            return Err(Error::validation(format!(
                "no .feat or .csv feature files in {}",
                path.display()
            )));
        }
    } else {
        files.push(path.to_path_buf());
    }
    files
        .iter()
        .map(|p| {
            if p.extension().and_then(|e| e.to_str()) == Some("csv") {
                io::read_features_csv(p)
            } else {
                io::read_features(p)
            }
        })
        .collect()
}

fn read_score_input(path: &Path, stride: u32, fps: f64) -> Result<Vec<ScoreRecord>> {
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        let t = io::read_scores_csv(path, stride, fps)?;
        let video = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(vec![ScoreRecord::from_timeline(video, &t)])
    } else {
        io::read_scores_jsonl(path)
    }
}

fn label_map(path: &Path) -> Result<BTreeMap<String, FrameLabels>> {
    Ok(io::read_labels_jsonl(path)?
        .into_iter()
        .map(|r| (r.video, FrameLabels::new(r.labels)))
        .collect())
}

fn run(cli: Cli) -> Result<()> {
    let file = load_file_config(cli.config.as_deref())?;
    match cli.command {
        Command::Labels { events, frames, video, stride, fps, out } => {
            let stride = stride.or(file.stride).unwrap_or(16);
            let fps = fps.or(file.fps).unwrap_or(24.0);
            let video = video.unwrap_or_else(|| {
                events.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            });
            let event_list = io::read_events(&events)?;
            let labels = derive_frame_labels(&event_list, frames, stride, fps)?;
            io::write_labels_jsonl(&out, &[LabelRecord { video, labels: labels.labels }])?;
            write_manifest(&out, "labels", json!({"frames": frames, "stride": stride, "fps": fps}))?;
            log("info", &format!("wrote labels to {}", out.display()));
            Ok(())
        }
        Command::Sample { scores, sampler, tau, n, stride, fps, out } => {
            let tau = tau.or(file.tau).unwrap_or(0.1);
            let n = n.or(file.n).unwrap_or(16);
            let stride = stride.or(file.stride).unwrap_or(16);
            let fps = fps.or(file.fps).unwrap_or(24.0);
            let records = read_score_input(&scores, stride, fps)?;
            let samples: Vec<SampleRecord> = records
                .par_iter()
                .map(|r| {
                    let t = r.timeline()?;
                    let set = match sampler {
                        SamplerKind::Ats => sampler::sample_ats(&t, tau, n),
                        SamplerKind::Uniform => sampler::sample_uniform(t.len(), n),
                        SamplerKind::Topk => sampler::sample_topk(&t, n),
                    }
                    .map_err(|e| Error::validation(format!("{}: {e}", r.video)))?;
                    Ok(SampleRecord {
                        video: r.video.clone(),
                        indices: set.indices,
                        sampler: sampler.name().to_string(),
                        tau: (sampler == SamplerKind::Ats).then_some(tau),
                        n,
                    })
                })
                .collect::<Result<_>>()?;
            io::write_samples_jsonl(&out, &samples)?;
            write_manifest(
                &out,
                "sample",
                json!({"sampler": sampler.name(), "tau": tau, "n": n}),
            )?;
            log("info", &format!("sampled {} videos", samples.len()));
            Ok(())
        }
        Command::BenchSamplers { scores, labels, budgets, tau, format, out } => {
            let tau = tau.or(file.tau).unwrap_or(0.1);
            let budgets: Vec<usize> = match budgets {
                Some(list) => list
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse()
                            .map_err(|_| Error::parameter(format!("bad budget: {s:?}")))
                    })
                    .collect::<Result<_>>()?,
                None => file.budgets.clone().unwrap_or_else(|| vec![8, 16, 32]),
            };
            let label_by_video = label_map(&labels)?;
            let corpus: Vec<BenchItem> = io::read_scores_jsonl(&scores)?
                .into_iter()
                .map(|r| {
                    let labels = label_by_video.get(&r.video).cloned().ok_or_else(|| {
                        Error::validation(format!("no labels for video {}", r.video))
                    })?;
                    Ok(BenchItem { labels, scores: r.timeline()?, video: r.video })
                })
                .collect::<Result<_>>()?;
            let rows = sampler::benchmark_samplers(&corpus, &budgets, tau)?;
            let body = match format {
                OutFormat::Json => serde_json::to_string_pretty(&rows)?,
                _ => sampler::bench_table(&rows),
            };
            io::atomic_write(&out, body.as_bytes())?;
            write_manifest(&out, "bench-samplers", json!({"tau": tau, "budgets": budgets}))?;
            log("info", &format!("benchmarked {} videos", corpus.len()));
            Ok(())
        }
        Command::Train {
            features,
            labels,
            seed,
            epochs,
            learning_rate,
            batch_size,
            hidden,
            no_memory,
            out,
        } => {
            let feats = load_features(&features)?;
            let label_by_video = label_map(&labels)?;
            let dataset: Vec<(FeatureSequence, FrameLabels)> = feats
                .into_iter()
                .map(|f| {
                    let l = label_by_video.get(&f.video).cloned().ok_or_else(|| {
                        Error::validation(format!("no labels for video {}", f.video))
                    })?;
                    Ok((f, l))
                })
                .collect::<Result<_>>()?;
            let input_dim = dataset[0].0.features.ncols();
            let mut model_cfg = ModelConfig::new(input_dim);
            if let Some(h) = hidden.or(file.hidden) {
                model_cfg.hidden = h;
            }
            if no_memory {
                model_cfg.use_memory = false;
            }
            let cfg = TrainConfig {
                learning_rate: learning_rate.or(file.learning_rate).unwrap_or(1e-4),
                epochs: epochs.or(file.epochs).unwrap_or(10),
                batch_size: batch_size.or(file.batch_size).unwrap_or(8),
                seed,
                weights: LossWeights::default(),
                model: model_cfg,
            };
            let outcome = train(&dataset, &cfg)?;
            let ckpt =
                Checkpoint { model: outcome.model, weights: cfg.weights, seed: cfg.seed };
            ckpt.save(&out)?;
            write_manifest(
                &out,
                "train",
                json!({
                    "seed": seed,
                    "epochs": cfg.epochs,
                    "learning_rate": cfg.learning_rate,
                    "batch_size": cfg.batch_size,
                    "curve": outcome.curve,
                    "diverged": outcome.diverged,
                }),
            )?;
            if outcome.diverged {
                // The last finite checkpoint is on disk; surface the failure.
                return Err(Error::Divergence(format!(
                    "training loss became non-finite after epoch {}; last finite checkpoint written to {}",
                    outcome.curve.len(),
                    out.display()
                )));
            }
            log(
                "info",
                &format!(
                    "trained {} epochs, final loss {:.6}",
                    outcome.curve.len(),
                    outcome.curve.last().copied().unwrap_or(f64::NAN)
                ),
            );
            Ok(())
        }
        Command::Score { checkpoint, features, stride, fps, out } => {
            let stride = stride.or(file.stride).unwrap_or(16);
            let fps = fps.or(file.fps).unwrap_or(24.0);
            let ckpt = Checkpoint::load(&checkpoint)?;
            let feats = load_features(&features)?;
            let records: Vec<ScoreRecord> = feats
                .par_iter()
                .map(|f| {
                    let t = score_one(&ckpt.model, f, stride, fps)?;
                    Ok(ScoreRecord::from_timeline(f.video.clone(), &t))
                })
                .collect::<Result<_>>()?;
            io::write_scores_jsonl(&out, &records)?;
            write_manifest(&out, "score", json!({"stride": stride, "fps": fps}))?;
            log("info", &format!("scored {} videos", records.len()));
            Ok(())
        }
        Command::BuildInstructions {
            annotations,
            pools,
            seed,
            dataset,
            split,
            out,
            review_out,
        } => {
            let pools = match pools {
                Some(p) => PromptPool::load(&p)?,
                None => PromptPool::builtin(),
            };
            let cfg = BuildConfig {
                dataset: dataset.or(file.dataset).unwrap_or_else(|| "ucf-crime".into()),
                split: split.or(file.split).unwrap_or_else(|| "train".into()),
            };
            let text = std::fs::read_to_string(&annotations).map_err(|e| Error::Malformed {
                path: annotations.display().to_string(),
                message: e.to_string(),
            })?;
            let malformed = |e: &dyn std::fmt::Display| Error::Malformed {
                path: annotations.display().to_string(),
                message: e.to_string(),
            };
            // Accept one record, an array of records, or JSONL.
            let records: Vec<AnnotationRecord> = if text.trim_start().starts_with('[') {
                serde_json::from_str(&text).map_err(|e| malformed(&e))?
            } else if let Ok(single) = AnnotationRecord::from_json(&text) {
                vec![single]
            } else {
                text.lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(|l| serde_json::from_str(l).map_err(|e| malformed(&e)))
                    .collect::<Result<_>>()?
            };
            let mut items = Vec::new();
            let mut review = Vec::new();
            for r in &records {
                let output = build_instructions(r, &pools, &cfg, seed)?;
                items.extend(output.items);
                review.extend(output.review);
            }
            io::atomic_write(&out, vaukit::dataengine::items_to_jsonl(&items)?.as_bytes())?;
            if let Some(rq) = &review_out {
                io::atomic_write(rq, io::jsonl(&review)?.as_bytes())?;
            }
            write_manifest(
                &out,
                "build-instructions",
                json!({
                    "seed": seed,
                    "dataset": cfg.dataset,
                    "split": cfg.split,
                    "pool_digest": pools.digest(),
                    "review": review.len(),
                }),
            )?;
            log("info", &format!("built {} items, {} queued for review", items.len(), review.len()));
            Ok(())
        }
        Command::EvalDetect { scores, labels, format, out } => {
            let label_by_video = label_map(&labels)?;
            let mut all_scores = Vec::new();
            let mut all_labels = Vec::new();
            for r in io::read_scores_jsonl(&scores)? {
                let l = label_by_video
                    .get(&r.video)
                    .ok_or_else(|| Error::validation(format!("no labels for video {}", r.video)))?;
                if l.len() != r.scores.len() {
                    return Err(Error::validation(format!(
                        "{}: {} scores but {} labels",
                        r.video,
                        r.scores.len(),
                        l.len()
                    )));
                }
                all_scores.extend_from_slice(&r.scores);
                all_labels.extend_from_slice(&l.labels);
            }
            let result = detection_result(&all_scores, &all_labels)?;
            let body = match format {
                OutFormat::Csv | OutFormat::Table => format!(
                    "auc,ap,positives,negatives\n{},{},{},{}\n",
                    result.auc, result.ap, result.positives, result.negatives
                ),
                OutFormat::Json => serde_json::to_string_pretty(&result)?,
            };
            io::atomic_write(&out, body.as_bytes())?;
            write_manifest(&out, "eval-detect", json!({"frames": all_scores.len()}))?;
            log("info", &format!("auc {:.4} ap {:.4}", result.auc, result.ap));
            Ok(())
        }
        Command::EvalText { predictions, references, format, out } => {
            let preds: Vec<TextItem> = io::parse_jsonl(&predictions)?;
            let refs: Vec<TextItem> = io::parse_jsonl(&references)?;
            let report = EvalReport { text: evaluate_text_corpus(&preds, &refs)?, detection: None };
            let body = match format {
                OutFormat::Csv | OutFormat::Table => report.to_csv(),
                OutFormat::Json => serde_json::to_string_pretty(&report)?,
            };
            io::atomic_write(&out, body.as_bytes())?;
            write_manifest(&out, "eval-text", json!({"items": preds.len()}))?;
            log("info", &format!("evaluated {} items", preds.len()));
            Ok(())
        }
    }
}

fn score_one(
    model: &ScorerModel,
    f: &FeatureSequence,
    stride: u32,
    fps: f64,
) -> Result<ScoreTimeline> {
    model
        .score(f, stride, fps)
        .map_err(|e| Error::validation(format!("{}: {e}", f.video)))
}
