//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use fidget_core::classify::Dataset;
use fidget_core::pipeline::{self, Video};
use fidget_core::synth::generate_cohort;
use fidget_core::{default_topology, CohortSpec, HistogramConfig, SegmentationScheme};

/// Synthetic cohort as videos, ready for extraction.
pub fn cohort_videos(spec: &CohortSpec) -> Vec<Video> {
    let topo = Arc::new(default_topology());
    generate_cohort(spec, &topo)
        .expect("valid cohort spec")
        .subjects
        .into_iter()
        .map(|s| Video {
            sequence: s.sequence,
            annotation: s.annotation,
        })
        .collect()
}

/// Extracted features of the default cohort.
pub fn default_dataset() -> Dataset {
    pipeline::extract_dataset(
        &cohort_videos(&CohortSpec::default()),
        &SegmentationScheme::default(),
        &HistogramConfig::default(),
    )
    .expect("default cohort extracts")
}
