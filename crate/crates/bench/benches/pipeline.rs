use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fidget_bench::{cohort_videos, default_dataset};
use fidget_core::pipeline;
use fidget_core::synth::CANVAS;
use fidget_core::viz::{capsule_masks, RadiusConfig};
use fidget_core::{
    extract_features, normalize_sequence, train_segment_classifier, CohortSpec, EnsembleConfig, HistogramConfig,
    SegmentationScheme,
};

fn extraction(c: &mut Criterion) {
    let videos = cohort_videos(&CohortSpec {
        n_normal: 1,
        n_abnormal: 1,
        ..Default::default()
    });
    let v = &videos[0];
    let seq = normalize_sequence(&v.sequence).unwrap();
    let (scheme, hist) = (SegmentationScheme::default(), HistogramConfig::default());
    c.bench_function("extract_features/1000 frames", |b| {
        b.iter(|| extract_features(black_box(&seq), &v.annotation, &scheme, &hist).unwrap())
    });
}

fn training(c: &mut Criterion) {
    let ds = default_dataset();
    let cfg = EnsembleConfig::default();
    c.bench_function("train_segment_classifier/12 subjects", |b| {
        b.iter(|| train_segment_classifier(black_box(&ds), &cfg, "bench").unwrap())
    });
    let mut group = c.benchmark_group("loso");
    group.sample_size(10);
    group.bench_function("run_loso/12 folds", |b| {
        b.iter(|| pipeline::run_loso(black_box(&ds), &cfg, &cfg, "bench").unwrap())
    });
    group.finish();
}

fn rasterization(c: &mut Criterion) {
    let videos = cohort_videos(&CohortSpec {
        n_normal: 1,
        n_abnormal: 1,
        frames: 100,
        ..Default::default()
    });
    let seq = &videos[0].sequence;
    let radius = RadiusConfig::default();
    c.bench_function("capsule_masks/640x480", |b| {
        b.iter(|| capsule_masks(black_box(seq.frame(0)), seq.topology(), &radius, CANVAS.0, CANVAS.1))
    });
}

criterion_group!(benches, extraction, training, rasterization);
criterion_main!(benches);
