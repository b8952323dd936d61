//! Segment-level FM classification and leave-one-subject-out evaluation.

mod forest;
mod loso;
mod metrics;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use forest::{Ensemble, EnsembleConfig, Node, Tree, Vote};
pub use loso::{loso_folds, Fold};
pub use metrics::{compute_metrics, Metrics};

use crate::error::{Error, Result};
use crate::features::FusedFeature;
use crate::skeleton::{BodyPart, FmLabel};

pub const MODEL_VERSION: u32 = 1;

/// Stream tag separating the segment stage from the fusion stage.
pub(crate) const STAGE_SEGMENT: u64 = 1;
pub(crate) const STAGE_FUSION: u64 = 2;

/// Fused features plus the video-level annotation of every subject.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    features: Vec<FusedFeature>,
    annotations: BTreeMap<String, FmLabel>,
}

impl Dataset {
    pub fn new(features: Vec<FusedFeature>, annotations: BTreeMap<String, FmLabel>) -> Result<Self> {
        if let Some(f) = features.iter().find(|f| !annotations.contains_key(&f.subject_id)) {
            return Err(Error::MissingAnnotation(f.subject_id.clone()));
        }
        Ok(Dataset { features, annotations })
    }

    pub fn features(&self) -> &[FusedFeature] {
        &self.features
    }

    pub fn annotations(&self) -> &BTreeMap<String, FmLabel> {
        &self.annotations
    }

    /// Subject ids in sorted order.
    pub fn subjects(&self) -> Vec<String> {
        self.annotations.keys().cloned().collect()
    }

    pub fn label_of(&self, subject: &str) -> Option<FmLabel> {
        self.annotations.get(subject).copied()
    }

    /// Sub-dataset holding only `subjects`.
    pub fn restrict(&self, subjects: &[String]) -> Dataset {
        let keep: BTreeSet<&str> = subjects.iter().map(String::as_str).collect();
        Dataset {
            features: self
                .features
                .iter()
                .filter(|f| keep.contains(f.subject_id.as_str()))
                .cloned()
                .collect(),
            annotations: self
                .annotations
                .iter()
                .filter(|(s, _)| keep.contains(s.as_str()))
                .map(|(s, l)| (s.clone(), *l))
                .collect(),
        }
    }

    pub fn features_of<'a>(&'a self, subject: &'a str) -> impl Iterator<Item = &'a FusedFeature> + 'a {
        self.features.iter().filter(move |f| f.subject_id == subject)
    }
}

/// Segment classifier: one bagged ensemble per body part, since parts have
/// different feature lengths. Segments of every time position train the same
/// per-part ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentModel {
    pub version: u32,
    pub config: EnsembleConfig,
    pub topology_fingerprint: String,
    pub parts: BTreeMap<BodyPart, Ensemble>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentPrediction {
    pub subject_id: String,
    pub part: BodyPart,
    pub segment_index: usize,
    pub predicted: FmLabel,
    pub votes_fm_minus: f64,
}

pub fn train_segment_classifier(
    train: &Dataset,
    cfg: &EnsembleConfig,
    topology_fingerprint: &str,
) -> Result<SegmentModel> {
    if train.features.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut parts = BTreeMap::new();
    for part in BodyPart::ALL {
        let rows: Vec<&FusedFeature> = train.features.iter().filter(|f| f.part == part).collect();
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let x: Vec<&[f64]> = rows.iter().map(|f| f.vector.as_slice()).collect();
        let y: Vec<FmLabel> = rows.iter().map(|f| f.label).collect();
        let ensemble = Ensemble::fit(&x, &y, cfg, &[STAGE_SEGMENT, part.index() as u64])?;
        parts.insert(part, ensemble);
    }
    Ok(SegmentModel {
        version: MODEL_VERSION,
        config: *cfg,
        topology_fingerprint: topology_fingerprint.to_string(),
        parts,
    })
}

pub fn predict_segment(model: &SegmentModel, f: &FusedFeature) -> Result<SegmentPrediction> {
    let ensemble = model.parts.get(&f.part).ok_or(Error::EmptyDataset)?;
    let vote = ensemble.vote(&f.vector)?;
    Ok(SegmentPrediction {
        subject_id: f.subject_id.clone(),
        part: f.part,
        segment_index: f.segment_index,
        predicted: vote.label,
        votes_fm_minus: vote.fm_minus_fraction,
    })
}

pub fn predict_segments<'a>(
    model: &SegmentModel,
    features: impl IntoIterator<Item = &'a FusedFeature>,
) -> Result<Vec<SegmentPrediction>> {
    features.into_iter().map(|f| predict_segment(model, f)).collect()
}
