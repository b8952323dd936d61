//! Per-part scores and the video-level late-fusion classifier.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::{Ensemble, EnsembleConfig, SegmentPrediction, MODEL_VERSION, STAGE_FUSION};
use crate::error::{Error, Result};
use crate::skeleton::{BodyPart, FmLabel};

/// Mean 0/1-coded segment decision of one body part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyPartScore {
    pub subject_id: String,
    pub part: BodyPart,
    pub s: f64,
    pub n_segments: usize,
    /// Number of segments predicted FM-, so that `s == fm_minus / n_segments`.
    pub fm_minus: usize,
}

/// The five part scores of one video, in [`BodyPart::ALL`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub subject_id: String,
    pub scores: [f64; 5],
    pub label: Option<FmLabel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionModel {
    pub version: u32,
    pub config: EnsembleConfig,
    pub ensemble: Ensemble,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoVerdict {
    pub subject_id: String,
    pub label: FmLabel,
    /// Fraction of fusion trees voting abnormal.
    pub vote_fraction: f64,
}

impl VideoVerdict {
    pub fn verdict(&self) -> &'static str {
        self.label.verdict()
    }
}

/// One score per (subject, part), ordered by subject then part. Averages the
/// predicted labels, not the vote fractions.
pub fn part_scores(preds: &[SegmentPrediction]) -> Result<Vec<BodyPartScore>> {
    let mut tally: BTreeMap<&str, [(usize, usize); 5]> = BTreeMap::new();
    for p in preds {
        let slot = &mut tally.entry(p.subject_id.as_str()).or_default()[p.part.index()];
        slot.0 += p.predicted.code() as usize;
        slot.1 += 1;
    }
    let mut out = Vec::with_capacity(tally.len() * 5);
    for (subject, counts) in tally {
        for part in BodyPart::ALL {
            let (fm_minus, n) = counts[part.index()];
            if n == 0 {
                return Err(Error::MissingPart {
                    subject: subject.to_string(),
                    part,
                });
            }
            out.push(BodyPartScore {
                subject_id: subject.to_string(),
                part,
                s: fm_minus as f64 / n as f64,
                n_segments: n,
                fm_minus,
            });
        }
    }
    Ok(out)
}

/// Groups part scores into per-subject vectors, attaching labels when known.
pub fn score_vectors(scores: &[BodyPartScore], labels: &BTreeMap<String, FmLabel>) -> Result<Vec<ScoreVector>> {
    let mut grouped: BTreeMap<&str, [Option<f64>; 5]> = BTreeMap::new();
    for s in scores {
        grouped.entry(s.subject_id.as_str()).or_default()[s.part.index()] = Some(s.s);
    }
    grouped
        .into_iter()
        .map(|(subject, vals)| {
            let mut scores = [0.0; 5];
            for part in BodyPart::ALL {
                scores[part.index()] = vals[part.index()].ok_or_else(|| Error::MissingPart {
                    subject: subject.to_string(),
                    part,
                })?;
            }
            Ok(ScoreVector {
                subject_id: subject.to_string(),
                scores,
                label: labels.get(subject).copied(),
            })
        })
        .collect()
}

pub fn train_late_fusion(vectors: &[ScoreVector], cfg: &EnsembleConfig) -> Result<FusionModel> {
    if vectors.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let x: Vec<&[f64]> = vectors.iter().map(|v| v.scores.as_slice()).collect();
    let y = vectors
        .iter()
        .map(|v| v.label.ok_or_else(|| Error::MissingAnnotation(v.subject_id.clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok(FusionModel {
        version: MODEL_VERSION,
        config: *cfg,
        ensemble: Ensemble::fit(&x, &y, cfg, &[STAGE_FUSION])?,
    })
}

pub fn predict_video(model: &FusionModel, v: &ScoreVector) -> Result<VideoVerdict> {
    let vote = model.ensemble.vote(&v.scores)?;
    Ok(VideoVerdict {
        subject_id: v.subject_id.clone(),
        label: vote.label,
        vote_fraction: vote.fm_minus_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{Node, Tree};

    fn preds(subject: &str, part: BodyPart, labels: &[FmLabel]) -> Vec<SegmentPrediction> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| SegmentPrediction {
                subject_id: subject.into(),
                part,
                segment_index: i,
                predicted: l,
                votes_fm_minus: if l == FmLabel::FmMinus { 0.6 } else { 0.4 },
            })
            .collect()
    }

    fn full(subject: &str, labels: &[FmLabel]) -> Vec<SegmentPrediction> {
        BodyPart::ALL.iter().flat_map(|&p| preds(subject, p, labels)).collect()
    }

    #[test]
    fn score_means() {
        use FmLabel::*;
        let all_minus = part_scores(&full("a", &[FmMinus; 10])).unwrap();
        assert!(all_minus.iter().all(|s| s.s == 1.0 && s.n_segments == 10));
        let all_plus = part_scores(&full("a", &[FmPlus; 10])).unwrap();
        assert!(all_plus.iter().all(|s| s.s == 0.0));
        let half: Vec<FmLabel> = (0..10).map(|i| if i < 5 { FmMinus } else { FmPlus }).collect();
        assert!(part_scores(&full("a", &half)).unwrap().iter().all(|s| s.s == 0.5));
    }

    #[test]
    fn missing_part_is_an_error() {
        let p = preds("a", BodyPart::LeftArm, &[FmLabel::FmMinus]);
        assert!(matches!(part_scores(&p), Err(Error::MissingPart { .. })));
    }

    fn separable_vectors() -> Vec<ScoreVector> {
        (0..12)
            .map(|i| {
                let abnormal = i % 3 == 0;
                let base = if abnormal {
                    0.8 + 0.02 * (i % 5) as f64
                } else {
                    0.2 - 0.03 * (i % 4) as f64
                };
                ScoreVector {
                    subject_id: format!("s{i:02}"),
                    scores: [base; 5],
                    label: Some(if abnormal { FmLabel::FmMinus } else { FmLabel::FmPlus }),
                }
            })
            .collect()
    }

    #[test]
    fn late_fusion_separates_and_is_deterministic() {
        let v = separable_vectors();
        let cfg = EnsembleConfig::default();
        let model = train_late_fusion(&v, &cfg).unwrap();
        for sv in &v {
            assert_eq!(Some(predict_video(&model, sv).unwrap().label), sv.label);
        }
        let again = train_late_fusion(&v, &cfg).unwrap();
        assert_eq!(serde_json::to_vec(&model).unwrap(), serde_json::to_vec(&again).unwrap());

        let zeros = ScoreVector {
            subject_id: "z".into(),
            scores: [0.0; 5],
            label: None,
        };
        let ones = ScoreVector {
            scores: [1.0; 5],
            ..zeros.clone()
        };
        assert_eq!(predict_video(&model, &zeros).unwrap().verdict(), "normal");
        assert_eq!(predict_video(&model, &ones).unwrap().verdict(), "abnormal");
    }

    #[test]
    fn single_class_fusion_rejected() {
        let v: Vec<ScoreVector> = separable_vectors()
            .into_iter()
            .filter(|v| v.label == Some(FmLabel::FmPlus))
            .collect();
        assert!(matches!(
            train_late_fusion(&v, &EnsembleConfig::default()),
            Err(Error::SingleClass(_))
        ));
        assert!(matches!(
            train_late_fusion(&[], &EnsembleConfig::default()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn tie_is_abnormal() {
        let leaf = |l| Tree {
            nodes: vec![Node::Leaf { leaf_label: l }],
        };
        let model = FusionModel {
            version: MODEL_VERSION,
            config: EnsembleConfig::default(),
            ensemble: Ensemble {
                n_features: 5,
                trees: vec![leaf(FmLabel::FmPlus), leaf(FmLabel::FmMinus)],
            },
        };
        let v = ScoreVector {
            subject_id: "t".into(),
            scores: [0.5; 5],
            label: None,
        };
        assert_eq!(predict_video(&model, &v).unwrap().verdict(), "abnormal");
    }
}
