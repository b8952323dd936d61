//! `fidget`: command-line driver for synthesis, feature extraction, training,
//! LOSO evaluation, prediction and overlay rendering.
//!
//! Every command writes into a staging directory next to its output
//! directory and only moves the results into place once it succeeds.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use fidget_core::classify::{Dataset, SegmentModel};
use fidget_core::fusion::FusionModel;
use fidget_core::pipeline::{self, Video};
use fidget_core::synth::{self, Cohort, SyntheticSubject, CANVAS};
use fidget_core::viz::{render_sequence, FrameSource, MaskSource};
use fidget_core::{io, Behavior, Error, FmLabel, PipelineConfig, SubjectProfile, VideoAnnotation};

#[derive(Parser, Debug)]
#[command(name = "fidget", version, about = "Body-part fidgety movement detection")]
struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory (defaults to the configured one).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic cohort (keypoints, annotations, behaviours).
    Synth {
        /// Generate one subject with the same behaviour on every part instead.
        #[arg(long)]
        single: Option<BehaviorArg>,
        #[arg(long, default_value = "x01", requires = "single")]
        subject_id: String,
    },
    /// Extract fused features from a data directory into features.csv.
    Extract {
        /// Data directory (defaults to the configured one).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Train the segment and fusion models on every subject.
    Train {
        /// Features CSV; extracted from the data directory when omitted.
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Leave-one-subject-out evaluation.
    Eval {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Score one subject with trained models.
    Predict {
        /// Directory holding segment_model.json and fusion_model.json.
        #[arg(long)]
        models: PathBuf,
        /// Keypoint JSON of the subject.
        #[arg(long)]
        keypoints: PathBuf,
    },
    /// Render overlay frames with FM- body parts tinted.
    Visualize {
        #[arg(long)]
        keypoints: PathBuf,
        /// Segment predictions CSV (as written by predict or eval).
        #[arg(long)]
        predictions: PathBuf,
        /// Frame directory; a blank canvas is used when neither this nor the config names one.
        #[arg(long)]
        frames: Option<PathBuf>,
        /// Segmentation mask directory; capsule masks are drawn when absent.
        #[arg(long)]
        masks: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BehaviorArg {
    Fidgety,
    Monotonous,
    Still,
}

impl From<BehaviorArg> for Behavior {
    fn from(b: BehaviorArg) -> Self {
        match b {
            BehaviorArg::Fidgety => Behavior::Fidgety,
            BehaviorArg::Monotonous => Behavior::Monotonous,
            BehaviorArg::Still => Behavior::Still,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FIDGET_LOG", "error")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let class = e.downcast_ref::<Error>().map_or("Error", Error::class);
            let message = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {class}: {message}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("--config is required".into()))?;
    let config_path = std::path::absolute(config_path).map_err(|e| Error::io(config_path, e))?;
    let mut cfg = PipelineConfig::load(&config_path)?;
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = std::path::absolute(out).map_err(|e| Error::io(out, e))?;
    }
    cfg.validate()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::InvalidConfig("--jobs must be >= 1".into()).into());
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().context("building thread pool")?;
    let out_given = cli.out.is_some();
    pool.install(|| dispatch(cli.command, cfg, out_given))
}

fn dispatch(command: Command, mut cfg: PipelineConfig, out_given: bool) -> anyhow::Result<()> {
    match command {
        Command::Synth { single, subject_id } => {
            // synth writes a data directory, so it defaults there
            if !out_given {
                cfg.out_dir = cfg.data_dir.clone();
            }
            let out = cfg.out_dir.clone();
            staged(&out, &cfg, |dir| {
                synth_cmd(&cfg, single.map(Behavior::from), &subject_id, dir)
            })
        }
        Command::Extract { data } => {
            override_dir(&mut cfg.data_dir, data)?;
            require_dir(&cfg.data_dir)?;
            staged(&cfg.out_dir.clone(), &cfg, |dir| {
                let ds = load_dataset(&cfg)?;
                io::write_features(&dir.join("features.csv"), ds.features())?;
                Ok(())
            })
        }
        Command::Train { features, data } => {
            override_dir(&mut cfg.data_dir, data)?;
            if features.is_none() {
                require_dir(&cfg.data_dir)?;
            }
            staged(&cfg.out_dir.clone(), &cfg, |dir| {
                train_cmd(&cfg, features.as_deref(), dir)
            })
        }
        Command::Eval { data } => {
            override_dir(&mut cfg.data_dir, data)?;
            require_dir(&cfg.data_dir)?;
            staged(&cfg.out_dir.clone(), &cfg, |dir| {
                let ds = load_dataset(&cfg)?;
                let report = pipeline::run_loso(&ds, &cfg.segment_ensemble, &cfg.fusion_ensemble, &fingerprint(&cfg)?)?;
                let m = &report.video_metrics;
                log::info!(
                    "accuracy {:?} sensitivity {:?} specificity {:?}",
                    m.accuracy,
                    m.sensitivity,
                    m.specificity
                );
                pipeline::write_eval_outputs(&report, dir)?;
                Ok(())
            })
        }
        Command::Predict { models, keypoints } => {
            require_dir(&models)?;
            require_file(&keypoints)?;
            staged(&cfg.out_dir.clone(), &cfg, |dir| {
                predict_cmd(&cfg, &models, &keypoints, dir)
            })
        }
        Command::Visualize {
            keypoints,
            predictions,
            frames,
            masks,
        } => {
            require_file(&keypoints)?;
            require_file(&predictions)?;
            let frames = frames.or_else(|| cfg.frames_dir.clone());
            let masks = masks.or_else(|| cfg.masks_dir.clone());
            for d in frames.iter().chain(&masks) {
                require_dir(d)?;
            }
            staged(&cfg.out_dir.clone(), &cfg, |dir| {
                let topology = cfg.load_topology()?;
                let pose = io::load_keypoints(&keypoints, &topology, &cfg.joint_remap)?;
                let preds = io::read_segment_predictions(&predictions)?;
                let frames = match frames {
                    Some(d) => FrameSource::Dir(d),
                    None => FrameSource::Blank {
                        width: CANVAS.0,
                        height: CANVAS.1,
                        color: [255, 255, 255],
                    },
                };
                let masks = masks.map_or(MaskSource::Capsules(cfg.radius), MaskSource::Dir);
                let report = render_sequence(&frames, &pose, &masks, &preds, &cfg.segmentation, &cfg.overlay, dir)?;
                log::info!("rendered {} frames", report.frames.len());
                Ok(())
            })
        }
    }
}

fn override_dir(target: &mut PathBuf, value: Option<PathBuf>) -> anyhow::Result<()> {
    if let Some(v) = value {
        *target = std::path::absolute(&v).map_err(|e| Error::io(&v, e))?;
    }
    Ok(())
}

fn require_dir(path: &Path) -> Result<(), Error> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "directory {} does not exist",
            path.display()
        )))
    }
}

fn require_file(path: &Path) -> Result<(), Error> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("file {} does not exist", path.display())))
    }
}

/// Runs `body` against a fresh staging directory, writes the resolved config
/// next to its outputs and moves everything into `out` on success. On failure
/// the staging directory is removed and `out` is left untouched.
fn staged(out: &Path, cfg: &PipelineConfig, body: impl FnOnce(&Path) -> anyhow::Result<()>) -> anyhow::Result<()> {
    let name = out
        .file_name()
        .map_or("out".into(), |n| n.to_string_lossy().into_owned());
    let parent = out.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    let staging = parent.join(format!(".{name}.staging-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    fs::create_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;

    let result = body(&staging).and_then(|()| {
        let path = staging.join("config.json");
        fs::write(&path, cfg.to_json() + "\n").map_err(|e| Error::io(&path, e))?;
        commit(&staging, out)
    });
    if result.is_err() {
        let _ = fs::remove_dir_all(&staging);
    }
    result
}

fn commit(staging: &Path, out: &Path) -> anyhow::Result<()> {
    if !out.exists() {
        fs::rename(staging, out).map_err(|e| Error::io(out, e))?;
        return Ok(());
    }
    for entry in fs::read_dir(staging).map_err(|e| Error::io(staging, e))? {
        let entry = entry.map_err(|e| Error::io(staging, e))?;
        let target = out.join(entry.file_name());
        if target.is_dir() {
            fs::remove_dir_all(&target).map_err(|e| Error::io(&target, e))?;
        } else if target.exists() {
            fs::remove_file(&target).map_err(|e| Error::io(&target, e))?;
        }
        fs::rename(entry.path(), &target).map_err(|e| Error::io(&target, e))?;
    }
    fs::remove_dir(staging).map_err(|e| Error::io(staging, e))?;
    Ok(())
}

fn fingerprint(cfg: &PipelineConfig) -> anyhow::Result<String> {
    Ok(pipeline::feature_fingerprint(
        &*cfg.load_topology()?,
        &cfg.histogram,
        &cfg.segmentation,
    ))
}

fn load_dataset(cfg: &PipelineConfig) -> anyhow::Result<Dataset> {
    let topology = cfg.load_topology()?;
    let videos = pipeline::load_videos(&cfg.data_dir, &topology, &cfg.joint_remap)?;
    log::info!("loaded {} videos from {}", videos.len(), cfg.data_dir.display());
    Ok(pipeline::extract_dataset(&videos, &cfg.segmentation, &cfg.histogram)?)
}

fn synth_cmd(cfg: &PipelineConfig, single: Option<Behavior>, subject_id: &str, dir: &Path) -> anyhow::Result<()> {
    let topology = cfg.load_topology()?;
    let cohort = match single {
        Some(behavior) => {
            let profile = SubjectProfile {
                noise: cfg.cohort.noise,
                ..SubjectProfile::uniform(subject_id, behavior, cfg.cohort.frames, cfg.seed)
            };
            let (sequence, annotation) = synth::generate_subject(&profile, &topology)?;
            Cohort {
                subjects: vec![SyntheticSubject {
                    profile,
                    sequence,
                    annotation,
                }],
            }
        }
        None => {
            let cohort = synth::generate_cohort(&cfg.cohort, &topology)?;
            let problems = synth::check_cohort(&cohort, &cfg.segmentation, &cfg.histogram)?;
            if let Some(first) = problems.first() {
                return Err(Error::InvalidProfile(format!(
                    "generated cohort fails {} separability checks, first: {first}",
                    problems.len()
                ))
                .into());
            }
            cohort
        }
    };
    log::info!(
        "synthesized {} subjects, fingerprint {}",
        cohort.subjects.len(),
        cohort.fingerprint()
    );
    pipeline::write_cohort(&cohort, dir)?;
    Ok(())
}

fn train_cmd(cfg: &PipelineConfig, features: Option<&Path>, dir: &Path) -> anyhow::Result<()> {
    let ds = match features {
        Some(path) => {
            let features = io::read_features(path)?;
            let annotations: BTreeMap<String, FmLabel> =
                features.iter().map(|f| (f.subject_id.clone(), f.label)).collect();
            Dataset::new(features, annotations)?
        }
        None => load_dataset(cfg)?,
    };
    let models = pipeline::train_models(&ds, &cfg.segment_ensemble, &cfg.fusion_ensemble, &fingerprint(cfg)?)?;
    io::write_json(&dir.join("segment_model.json"), &models.segment)?;
    io::write_json(&dir.join("fusion_model.json"), &models.fusion)?;
    io::write_scores(&dir.join("train_scores.csv"), &models.train_scores)?;
    Ok(())
}

fn predict_cmd(cfg: &PipelineConfig, models: &Path, keypoints: &Path, dir: &Path) -> anyhow::Result<()> {
    let segment: SegmentModel = io::read_json(&models.join("segment_model.json"))?;
    let fusion: FusionModel = io::read_json(&models.join("fusion_model.json"))?;
    let expected = fingerprint(cfg)?;
    if segment.topology_fingerprint != expected {
        return Err(Error::InvalidConfig(format!(
            "segment model was trained on feature layout {}, config gives {expected}",
            segment.topology_fingerprint
        ))
        .into());
    }
    let topology = cfg.load_topology()?;
    let sequence = io::load_keypoints(keypoints, &topology, &cfg.joint_remap)?;
    let subject_id = sequence.subject_id().to_string();
    // the label only tags the extracted rows; it is not used for prediction
    let video = Video {
        sequence,
        annotation: VideoAnnotation {
            subject_id,
            label: FmLabel::FmPlus,
        },
    };
    let ds = pipeline::extract_dataset(std::slice::from_ref(&video), &cfg.segmentation, &cfg.histogram)?;
    let prediction = pipeline::predict_subject(&segment, &fusion, ds.features(), None)?;
    io::write_segment_predictions(&dir.join("segment_predictions.csv"), &prediction.segments)?;
    io::write_scores(&dir.join("scores.csv"), std::slice::from_ref(&prediction.scores))?;
    io::write_verdicts(&dir.join("verdicts.csv"), std::slice::from_ref(&prediction.verdict))?;
    println!(
        "{} {} {}",
        prediction.verdict.subject_id,
        prediction.verdict.label,
        prediction.verdict.verdict()
    );
    Ok(())
}
