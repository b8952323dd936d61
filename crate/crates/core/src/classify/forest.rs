//! Bagged CART trees (Gini impurity, axis-aligned thresholds) with a majority
//! vote. Used both for segment classification and for late fusion.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::skeleton::FmLabel;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Bootstrap sample size as a fraction of the training set, drawn with replacement.
    pub bootstrap_fraction: f64,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n_trees: 25,
            max_depth: 4,
            min_samples_leaf: 2,
            bootstrap_fraction: 1.0,
            seed: 0,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be >= 1".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidConfig("max_depth must be >= 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidConfig("min_samples_leaf must be >= 1".into()));
        }
        if self.bootstrap_fraction.is_nan() || self.bootstrap_fraction <= 0.0 {
            return Err(Error::InvalidConfig("bootstrap_fraction must be > 0".into()));
        }
        Ok(())
    }

    /// Candidate features examined at each split.
    pub fn features_per_split(n_features: usize) -> usize {
        ((n_features as f64).sqrt().ceil() as usize).clamp(1, n_features.max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    /// Samples with `x[feature_idx] <= threshold` go to `left`.
    Split {
        feature_idx: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        leaf_label: FmLabel,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> FmLabel {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { leaf_label } => return leaf_label,
                Node::Split {
                    feature_idx,
                    threshold,
                    left,
                    right,
                } => i = if x[feature_idx] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

/// Outcome of a majority vote.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vote {
    pub label: FmLabel,
    /// Fraction of trees voting FM-.
    pub fm_minus_fraction: f64,
}

impl Vote {
    /// Ties go to FM-.
    pub fn from_counts(fm_minus: usize, total: usize) -> Self {
        let label = if 2 * fm_minus >= total {
            FmLabel::FmMinus
        } else {
            FmLabel::FmPlus
        };
        Vote {
            label,
            fm_minus_fraction: fm_minus as f64 / total as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

impl Ensemble {
    /// Trains `cfg.n_trees` trees. Tree `i` draws from the stream keyed by
    /// `(cfg.seed, tags.., i)`, so serial and parallel training agree.
    pub fn fit(x: &[&[f64]], y: &[FmLabel], cfg: &EnsembleConfig, tags: &[u64]) -> Result<Self> {
        cfg.validate()?;
        if x.is_empty() {
            return Err(Error::EmptyDataset);
        }
        assert_eq!(x.len(), y.len(), "one label per sample");
        let n_features = x[0].len();
        if let Some(bad) = x.iter().find(|v| v.len() != n_features) {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                got: bad.len(),
            });
        }
        if let Some(only) = single_class(y) {
            return Err(Error::SingleClass(only.to_string()));
        }

        let trees = (0..cfg.n_trees)
            .into_par_iter()
            .map(|i| {
                let mut key = tags.to_vec();
                key.push(i as u64);
                let mut rng = rng::stream(cfg.seed, &key);
                let n_boot = ((x.len() as f64 * cfg.bootstrap_fraction).round() as usize).max(1);
                let rows: Vec<usize> = (0..n_boot).map(|_| rng.random_range(0..x.len())).collect();
                TreeBuilder {
                    x,
                    y,
                    cfg,
                    n_features,
                    rng,
                    nodes: Vec::new(),
                }
                .build(rows)
            })
            .collect();
        Ok(Ensemble { n_features, trees })
    }

    pub fn vote(&self, x: &[f64]) -> Result<Vote> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let minus = self.trees.iter().filter(|t| t.predict(x) == FmLabel::FmMinus).count();
        Ok(Vote::from_counts(minus, self.trees.len()))
    }
}

fn single_class(y: &[FmLabel]) -> Option<FmLabel> {
    let first = *y.first()?;
    y.iter().all(|&l| l == first).then_some(first)
}

fn majority(y: &[FmLabel], rows: &[usize]) -> FmLabel {
    let minus = rows.iter().filter(|&&r| y[r] == FmLabel::FmMinus).count();
    Vote::from_counts(minus, rows.len()).label
}

/// `n · gini` for a node holding `minus` FM- samples out of `n`.
fn weighted_gini(minus: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (a, b) = (minus as f64, (n - minus) as f64);
    n as f64 - (a * a + b * b) / n as f64
}

struct TreeBuilder<'a> {
    x: &'a [&'a [f64]],
    y: &'a [FmLabel],
    cfg: &'a EnsembleConfig,
    n_features: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

struct Split {
    feature_idx: usize,
    threshold: f64,
    impurity: f64,
}

impl TreeBuilder<'_> {
    fn build(mut self, rows: Vec<usize>) -> Tree {
        self.grow(rows, 0);
        Tree { nodes: self.nodes }
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let leaf = Node::Leaf {
            leaf_label: majority(self.y, &rows),
        };
        self.nodes.push(leaf);

        let pure = single_class(&rows.iter().map(|&r| self.y[r]).collect::<Vec<_>>()).is_some();
        if pure || depth >= self.cfg.max_depth || rows.len() < 2 * self.cfg.min_samples_leaf {
            return id;
        }
        let Some(split) = self.best_split(&rows) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| self.x[i][split.feature_idx] <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature_idx: split.feature_idx,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<Split> {
        let n = rows.len();
        let total_minus = rows.iter().filter(|&&r| self.y[r] == FmLabel::FmMinus).count();
        let parent = weighted_gini(total_minus, n);
        let m = EnsembleConfig::features_per_split(self.n_features);
        let candidates = sample(&mut self.rng, self.n_features, m).into_vec();
        let min_leaf = self.cfg.min_samples_leaf;

        let mut best: Option<Split> = None;
        let mut order = rows.to_vec();
        for f in candidates {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left_minus = 0;
            for k in 1..n {
                if self.y[order[k - 1]] == FmLabel::FmMinus {
                    left_minus += 1;
                }
                let (lo, hi) = (self.x[order[k - 1]][f], self.x[order[k]][f]);
                if lo == hi || k < min_leaf || n - k < min_leaf {
                    continue;
                }
                let impurity = weighted_gini(left_minus, k) + weighted_gini(total_minus - left_minus, n - k);
                if impurity < parent - 1e-12 && best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(Split {
                        feature_idx: f,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }
}
