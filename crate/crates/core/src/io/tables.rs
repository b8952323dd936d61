//! CSV tables: annotations, features, segment predictions, scores, verdicts.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::classify::SegmentPrediction;
use crate::error::{Error, Result};
use crate::features::FusedFeature;
use crate::fusion::{ScoreVector, VideoVerdict};
use crate::skeleton::{BodyPart, FmLabel};
use crate::synth::Behavior;

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::WriterBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::parse(path, e))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, e))
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| Error::parse(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| Error::parse(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// Reads every record, checking the header against `expected`.
fn read_rows(path: &Path, expected: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = reader(path)?;
    let got = r.headers().map_err(|e| Error::parse(path, e))?.clone();
    if got.len() < expected.len() || expected.iter().zip(got.iter()).any(|(a, b)| *a != b) {
        return Err(Error::schema(
            path,
            format!("expected header starting {}", expected.join(",")),
        ));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| rec.map_err(|e| Error::parse(path, format!("row {}: {e}", i + 1))))
        .collect()
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec
        .get(i)
        .ok_or_else(|| Error::schema(path, format!("missing column {what}")))?;
    raw.parse()
        .map_err(|e| Error::schema(path, format!("bad {what} {raw:?}: {e}")))
}

pub fn write_annotations(path: &Path, labels: &BTreeMap<String, FmLabel>) -> Result<()> {
    write_rows(
        path,
        &header(&["subject_id", "label"]),
        labels.iter().map(|(s, l)| vec![s.clone(), l.to_string()]),
    )
}

pub fn read_annotations(path: &Path) -> Result<BTreeMap<String, FmLabel>> {
    let mut out = BTreeMap::new();
    for rec in read_rows(path, &["subject_id", "label"])? {
        let subject: String = field(path, &rec, 0, "subject_id")?;
        let label = field(path, &rec, 1, "label")?;
        if out.insert(subject.clone(), label).is_some() {
            return Err(Error::schema(path, format!("subject {subject} annotated twice")));
        }
    }
    Ok(out)
}

pub fn write_behaviors(path: &Path, rows: &[(String, BodyPart, Behavior)]) -> Result<()> {
    write_rows(
        path,
        &header(&["subject_id", "part", "behavior"]),
        rows.iter()
            .map(|(s, p, b)| vec![s.clone(), p.to_string(), format!("{b:?}")]),
    )
}

/// Header `subject_id,part,segment_index,label,v0..`; shorter vectors leave
/// their trailing cells empty.
pub fn write_features(path: &Path, features: &[FusedFeature]) -> Result<()> {
    let width = features.iter().map(|f| f.vector.len()).max().unwrap_or(0);
    let mut head = header(&["subject_id", "part", "segment_index", "label"]);
    head.extend((0..width).map(|i| format!("v{i}")));
    write_rows(
        path,
        &head,
        features.iter().map(|f| {
            let mut row = vec![
                f.subject_id.clone(),
                f.part.to_string(),
                f.segment_index.to_string(),
                f.label.to_string(),
            ];
            row.extend(f.vector.iter().map(|v| v.to_string()));
            row.resize(4 + width, String::new());
            row
        }),
    )
}

pub fn read_features(path: &Path) -> Result<Vec<FusedFeature>> {
    read_rows(path, &["subject_id", "part", "segment_index", "label"])?
        .into_iter()
        .map(|rec| {
            let vector = rec
                .iter()
                .skip(4)
                .take_while(|c| !c.is_empty())
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|e| Error::schema(path, format!("bad value {c:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(FusedFeature {
                subject_id: field(path, &rec, 0, "subject_id")?,
                part: field(path, &rec, 1, "part")?,
                segment_index: field(path, &rec, 2, "segment_index")?,
                label: field(path, &rec, 3, "label")?,
                vector,
            })
        })
        .collect()
}

pub fn write_segment_predictions(path: &Path, preds: &[SegmentPrediction]) -> Result<()> {
    write_rows(
        path,
        &header(&["subject_id", "part", "segment_index", "predicted", "votes_fm_minus"]),
        preds.iter().map(|p| {
            vec![
                p.subject_id.clone(),
                p.part.to_string(),
                p.segment_index.to_string(),
                p.predicted.to_string(),
                p.votes_fm_minus.to_string(),
            ]
        }),
    )
}

pub fn read_segment_predictions(path: &Path) -> Result<Vec<SegmentPrediction>> {
    read_rows(
        path,
        &["subject_id", "part", "segment_index", "predicted", "votes_fm_minus"],
    )?
    .into_iter()
    .map(|rec| {
        Ok(SegmentPrediction {
            subject_id: field(path, &rec, 0, "subject_id")?,
            part: field(path, &rec, 1, "part")?,
            segment_index: field(path, &rec, 2, "segment_index")?,
            predicted: field(path, &rec, 3, "predicted")?,
            votes_fm_minus: field(path, &rec, 4, "votes_fm_minus")?,
        })
    })
    .collect()
}

const SCORE_HEADER: [&str; 7] = [
    "subject_id",
    "left_arm",
    "right_arm",
    "left_leg",
    "right_leg",
    "head_torso",
    "label",
];

pub fn write_scores(path: &Path, vectors: &[ScoreVector]) -> Result<()> {
    write_rows(
        path,
        &header(&SCORE_HEADER),
        vectors.iter().map(|v| {
            let mut row = vec![v.subject_id.clone()];
            row.extend(v.scores.iter().map(|s| s.to_string()));
            row.push(v.label.map(|l| l.to_string()).unwrap_or_default());
            row
        }),
    )
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreVector>> {
    read_rows(path, &SCORE_HEADER)?
        .into_iter()
        .map(|rec| {
            let mut scores = [0.0; 5];
            for (i, s) in scores.iter_mut().enumerate() {
                *s = field(path, &rec, i + 1, SCORE_HEADER[i + 1])?;
            }
            let label = match rec.get(6).unwrap_or("") {
                "" => None,
                _ => Some(field(path, &rec, 6, "label")?),
            };
            Ok(ScoreVector {
                subject_id: field(path, &rec, 0, "subject_id")?,
                scores,
                label,
            })
        })
        .collect()
}

pub fn write_verdicts(path: &Path, verdicts: &[VideoVerdict]) -> Result<()> {
    write_rows(
        path,
        &header(&["subject_id", "verdict", "vote_fraction"]),
        verdicts.iter().map(|v| {
            vec![
                v.subject_id.clone(),
                v.verdict().to_string(),
                v.vote_fraction.to_string(),
            ]
        }),
    )
}

pub fn read_verdicts(path: &Path) -> Result<Vec<VideoVerdict>> {
    read_rows(path, &["subject_id", "verdict", "vote_fraction"])?
        .into_iter()
        .map(|rec| {
            Ok(VideoVerdict {
                subject_id: field(path, &rec, 0, "subject_id")?,
                label: field(path, &rec, 1, "verdict")?,
                vote_fraction: field(path, &rec, 2, "vote_fraction")?,
            })
        })
        .collect()
}
