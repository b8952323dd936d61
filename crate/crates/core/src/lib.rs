//! Body-part fidgety movement detection from 2D skeletal keypoints.
//!
//! Each video is cut into fixed-length segments; every (body part, segment)
//! gets a fused orientation/displacement histogram that a bagged tree
//! ensemble labels FM+ or FM-. Per-part means of those labels feed a second
//! ensemble that calls the whole video normal or abnormal, and the flagged
//! parts can be rendered in red over the source frames.

pub mod classify;
pub mod error;
pub mod features;
pub mod fusion;
pub mod io;
pub mod pipeline;
pub mod rng;
pub mod skeleton;
pub mod synth;
pub mod viz;

pub use classify::{
    compute_metrics, loso_folds, predict_segment, train_segment_classifier, Dataset, EnsembleConfig, Metrics,
    SegmentModel, SegmentPrediction,
};
pub use error::{Error, Result};
pub use features::{
    extract_features, hojd2d, hojo2d, segment_windows, FusedFeature, HistogramConfig, SegmentationScheme,
};
pub use fusion::{
    part_scores, predict_video, train_late_fusion, BodyPartScore, FusionModel, ScoreVector, VideoVerdict,
};
pub use io::PipelineConfig;
pub use skeleton::{
    default_topology, normalize_sequence, BodyPart, FmLabel, Point, PoseSequence, SkeletonTopology, VideoAnnotation,
};
pub use synth::{generate_cohort, generate_subject, Behavior, CohortSpec, SubjectProfile};
pub use viz::{render_overlay, split_mask_lr, OverlaySpec, PartMask};
