//! End-to-end stages shared by the CLI and the tests: loading a data
//! directory, feature extraction, two-stage training, prediction and
//! leave-one-subject-out evaluation.
//!
//! Data directory layout: `annotations.csv` plus `keypoints/{subject}.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::classify::{
    compute_metrics, loso_folds, predict_segments, train_segment_classifier, Dataset, EnsembleConfig, Metrics,
    SegmentModel, SegmentPrediction,
};
use crate::error::{Error, Result};
use crate::features::{extract_features, FusedFeature, HistogramConfig, SegmentationScheme};
use crate::fusion::{
    part_scores, predict_video, score_vectors, train_late_fusion, FusionModel, ScoreVector, VideoVerdict,
};
use crate::io;
use crate::rng;
use crate::skeleton::{normalize_sequence, BodyPart, FmLabel, PoseSequence, SkeletonTopology, VideoAnnotation};
use crate::synth::Cohort;

#[derive(Clone, Debug, PartialEq)]
pub struct Video {
    pub sequence: PoseSequence,
    pub annotation: VideoAnnotation,
}

/// Identifies the feature layout a model was trained on.
pub fn feature_fingerprint(topology: &SkeletonTopology, hist: &HistogramConfig, scheme: &SegmentationScheme) -> String {
    let mut h = Sha256::new();
    h.update(topology.fingerprint().as_bytes());
    h.update(serde_json::to_vec(hist).expect("config serializes"));
    h.update(serde_json::to_vec(scheme).expect("config serializes"));
    hex::encode(h.finalize())
}

pub fn keypoint_path(data_dir: &Path, subject: &str) -> std::path::PathBuf {
    data_dir.join("keypoints").join(format!("{subject}.json"))
}

/// Writes a synthetic cohort as keypoint files, `annotations.csv` and `behaviors.csv`.
pub fn write_cohort(cohort: &Cohort, data_dir: &Path) -> Result<()> {
    let kp = data_dir.join("keypoints");
    fs::create_dir_all(&kp).map_err(|e| Error::io(&kp, e))?;
    cohort
        .subjects
        .par_iter()
        .try_for_each(|s| io::write_keypoints(&keypoint_path(data_dir, &s.profile.subject_id), &s.sequence))?;
    let labels: BTreeMap<String, FmLabel> = cohort
        .subjects
        .iter()
        .map(|s| (s.annotation.subject_id.clone(), s.annotation.label))
        .collect();
    io::write_annotations(&data_dir.join("annotations.csv"), &labels)?;
    let behaviors: Vec<_> = cohort
        .subjects
        .iter()
        .flat_map(|s| BodyPart::ALL.map(|p| (s.profile.subject_id.clone(), p, s.profile.behavior(p))))
        .collect();
    io::write_behaviors(&data_dir.join("behaviors.csv"), &behaviors)
}

pub fn load_videos(
    data_dir: &Path,
    topology: &Arc<SkeletonTopology>,
    remap: &BTreeMap<String, String>,
) -> Result<Vec<Video>> {
    let labels = io::read_annotations(&data_dir.join("annotations.csv"))?;
    labels
        .par_iter()
        .map(|(subject, &label)| {
            let path = keypoint_path(data_dir, subject);
            let sequence = io::load_keypoints(&path, topology, remap)?.with_subject_id(subject.clone());
            Ok(Video {
                sequence,
                annotation: VideoAnnotation {
                    subject_id: subject.clone(),
                    label,
                },
            })
        })
        .collect()
}

/// Normalizes each video and extracts its fused features, in video order.
pub fn extract_dataset(videos: &[Video], scheme: &SegmentationScheme, hist: &HistogramConfig) -> Result<Dataset> {
    let per_video = videos
        .par_iter()
        .map(|v| extract_features(&normalize_sequence(&v.sequence)?, &v.annotation, scheme, hist))
        .collect::<Result<Vec<_>>>()?;
    let annotations = videos
        .iter()
        .map(|v| (v.annotation.subject_id.clone(), v.annotation.label))
        .collect();
    Dataset::new(per_video.into_iter().flatten().collect(), annotations)
}

/// Both stages trained on one set of subjects.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModels {
    pub segment: SegmentModel,
    pub fusion: FusionModel,
    /// Score vectors the fusion stage was trained on, built with `segment`.
    pub train_scores: Vec<ScoreVector>,
}

pub fn train_models(
    ds: &Dataset,
    segment_cfg: &EnsembleConfig,
    fusion_cfg: &EnsembleConfig,
    fingerprint: &str,
) -> Result<TrainedModels> {
    let segment = train_segment_classifier(ds, segment_cfg, fingerprint)?;
    let preds = predict_segments(&segment, ds.features())?;
    let train_scores = score_vectors(&part_scores(&preds)?, ds.annotations())?;
    let fusion = train_late_fusion(&train_scores, fusion_cfg)?;
    Ok(TrainedModels {
        segment,
        fusion,
        train_scores,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubjectPrediction {
    pub segments: Vec<SegmentPrediction>,
    pub scores: ScoreVector,
    pub verdict: VideoVerdict,
}

/// Runs both stages on the features of a single subject.
pub fn predict_subject(
    segment: &SegmentModel,
    fusion: &FusionModel,
    features: &[FusedFeature],
    label: Option<FmLabel>,
) -> Result<SubjectPrediction> {
    let subject = features.first().ok_or(Error::EmptyInput)?.subject_id.clone();
    if features.iter().any(|f| f.subject_id != subject) {
        return Err(Error::InvalidConfig("features of more than one subject".into()));
    }
    let segments = predict_segments(segment, features)?;
    let labels: BTreeMap<String, FmLabel> = label.map(|l| (subject.clone(), l)).into_iter().collect();
    let scores = score_vectors(&part_scores(&segments)?, &labels)?
        .pop()
        .expect("one subject in, one vector out");
    let verdict = predict_video(fusion, &scores)?;
    Ok(SubjectPrediction {
        segments,
        scores,
        verdict,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldResult {
    pub test_subject: String,
    pub train_subjects: Vec<String>,
    /// Subjects whose features actually entered training.
    pub train_feature_subjects: BTreeSet<String>,
    pub models: TrainedModels,
    pub truth: FmLabel,
    pub test: SubjectPrediction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub folds: Vec<FoldResult>,
    pub video_metrics: Metrics,
    /// Held-out segment predictions scored against the video labels.
    pub segment_metrics: Metrics,
}

impl EvalReport {
    pub fn segment_predictions(&self) -> Vec<SegmentPrediction> {
        self.folds
            .iter()
            .flat_map(|f| f.test.segments.iter().cloned())
            .collect()
    }

    pub fn verdicts(&self) -> Vec<VideoVerdict> {
        self.folds.iter().map(|f| f.test.verdict.clone()).collect()
    }

    pub fn held_out_scores(&self) -> Vec<ScoreVector> {
        self.folds.iter().map(|f| f.test.scores.clone()).collect()
    }
}

fn fold_config(cfg: &EnsembleConfig, test_subject: &str) -> EnsembleConfig {
    EnsembleConfig {
        seed: rng::derive_seed(cfg.seed, &[rng::tag_str(test_subject)]),
        ..*cfg
    }
}

/// Leave-one-subject-out evaluation. Each fold retrains the segment model and
/// the fusion model without the held-out subject; the fusion stage's training
/// scores come from that fold's own segment model.
pub fn run_loso(
    ds: &Dataset,
    segment_cfg: &EnsembleConfig,
    fusion_cfg: &EnsembleConfig,
    fingerprint: &str,
) -> Result<EvalReport> {
    let folds = loso_folds(ds)?;
    let results = folds
        .par_iter()
        .map(|fold| {
            let test = fold.test_subject.as_str();
            let train = ds.restrict(&fold.train_subjects);
            let train_feature_subjects: BTreeSet<String> =
                train.features().iter().map(|f| f.subject_id.clone()).collect();
            assert!(
                !train_feature_subjects.contains(test),
                "held-out subject {test} in training features"
            );
            log::debug!("fold {test}: training on {} subjects", fold.train_subjects.len());

            let models = train_models(
                &train,
                &fold_config(segment_cfg, test),
                &fold_config(fusion_cfg, test),
                fingerprint,
            )?;
            assert!(
                models.train_scores.iter().all(|v| v.subject_id != test),
                "held-out subject {test} in fusion training scores"
            );
            let truth = ds
                .label_of(test)
                .ok_or_else(|| Error::MissingAnnotation(test.to_string()))?;
            let features: Vec<FusedFeature> = ds.features_of(test).cloned().collect();
            let prediction = predict_subject(&models.segment, &models.fusion, &features, Some(truth))?;
            Ok(FoldResult {
                test_subject: fold.test_subject.clone(),
                train_subjects: fold.train_subjects.clone(),
                train_feature_subjects,
                models,
                truth,
                test: prediction,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let video_pairs: Vec<_> = results.iter().map(|f| (f.test.verdict.label, f.truth)).collect();
    let segment_pairs: Vec<_> = results
        .iter()
        .flat_map(|f| f.test.segments.iter().map(move |s| (s.predicted, f.truth)))
        .collect();
    Ok(EvalReport {
        video_metrics: compute_metrics(&video_pairs)?,
        segment_metrics: compute_metrics(&segment_pairs)?,
        folds: results,
    })
}

#[derive(Serialize)]
struct FoldSummary<'a> {
    test_subject: &'a str,
    label: FmLabel,
    predicted: FmLabel,
    vote_fraction: f64,
    correct: bool,
}

#[derive(Serialize)]
struct CountsAndRatios {
    accuracy: Option<f64>,
    sensitivity: Option<f64>,
    specificity: Option<f64>,
    tp: usize,
    tn: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
}

impl From<&Metrics> for CountsAndRatios {
    fn from(m: &Metrics) -> Self {
        CountsAndRatios {
            accuracy: m.accuracy.map(io::round4),
            sensitivity: m.sensitivity.map(io::round4),
            specificity: m.specificity.map(io::round4),
            tp: m.tp,
            tn: m.tn,
            fp: m.fp,
            fn_: m.fn_,
        }
    }
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    #[serde(flatten)]
    video: CountsAndRatios,
    per_fold: Vec<FoldSummary<'a>>,
    segment: CountsAndRatios,
}

/// Metrics JSON with ratios rounded to 4 decimal places.
pub fn metrics_json(report: &EvalReport) -> serde_json::Value {
    let file = MetricsFile {
        video: (&report.video_metrics).into(),
        per_fold: report
            .folds
            .iter()
            .map(|f| FoldSummary {
                test_subject: &f.test_subject,
                label: f.truth,
                predicted: f.test.verdict.label,
                vote_fraction: io::round4(f.test.verdict.vote_fraction),
                correct: f.test.verdict.label == f.truth,
            })
            .collect(),
        segment: (&report.segment_metrics).into(),
    };
    serde_json::to_value(file).expect("metrics serialize")
}

/// Writes metrics, held-out predictions and every fold's models under `out_dir`.
pub fn write_eval_outputs(report: &EvalReport, out_dir: &Path) -> Result<()> {
    io::write_json(&out_dir.join("metrics.json"), &metrics_json(report))?;
    io::write_segment_predictions(&out_dir.join("segment_predictions.csv"), &report.segment_predictions())?;
    io::write_verdicts(&out_dir.join("video_predictions.csv"), &report.verdicts())?;
    io::write_scores(&out_dir.join("scores.csv"), &report.held_out_scores())?;
    for fold in &report.folds {
        let dir = out_dir.join("folds").join(&fold.test_subject);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        io::write_json(&dir.join("segment_model.json"), &fold.models.segment)?;
        io::write_json(&dir.join("fusion_model.json"), &fold.models.fusion)?;
        io::write_scores(&dir.join("train_scores.csv"), &fold.models.train_scores)?;
    }
    Ok(())
}
