use serde::{Deserialize, Serialize};

use crate::classify::Dataset;
use crate::error::{Error, Result};

/// One leave-one-subject-out split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub test_subject: String,
    pub train_subjects: Vec<String>,
}

/// One fold per subject, ordered by subject id.
pub fn loso_folds(ds: &Dataset) -> Result<Vec<Fold>> {
    let subjects = ds.subjects();
    if subjects.len() < 2 {
        return Err(Error::TooFewSubjects(subjects.len()));
    }
    Ok(subjects
        .iter()
        .map(|test| Fold {
            test_subject: test.clone(),
            train_subjects: subjects.iter().filter(|s| *s != test).cloned().collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::skeleton::FmLabel;

    fn dataset(n: usize) -> Dataset {
        let annotations: BTreeMap<String, FmLabel> = (0..n)
            .map(|i| {
                (
                    format!("s{i:02}"),
                    if i % 3 == 0 { FmLabel::FmMinus } else { FmLabel::FmPlus },
                )
            })
            .collect();
        Dataset::new(Vec::new(), annotations).unwrap()
    }

    #[test]
    fn twelve_subjects_twelve_folds() {
        let folds = loso_folds(&dataset(12)).unwrap();
        assert_eq!(folds.len(), 12);
        for f in &folds {
            assert_eq!(f.train_subjects.len(), 11);
            assert!(!f.train_subjects.contains(&f.test_subject));
        }
        let tests: Vec<_> = folds.iter().map(|f| f.test_subject.clone()).collect();
        assert_eq!(tests, dataset(12).subjects());
    }

    #[test]
    fn minimal_and_too_few() {
        assert_eq!(loso_folds(&dataset(2)).unwrap().len(), 2);
        assert!(matches!(loso_folds(&dataset(1)), Err(Error::TooFewSubjects(1))));
    }
}
