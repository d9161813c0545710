use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Dense labelled samples with stable identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    n_classes: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
    ids: Vec<usize>,
    index: HashMap<usize, usize>,
}

impl Dataset {
    /// `features` is row-major with `dim` columns.
    pub fn new(
        dim: usize,
        n_classes: usize,
        features: Vec<f64>,
        labels: Vec<usize>,
        ids: Vec<usize>,
    ) -> Result<Self> {
        if dim == 0 || labels.is_empty() {
            return Err(Error::EmptyInput("dataset"));
        }
        if features.len() != dim * labels.len() || ids.len() != labels.len() {
            return Err(Error::ConfigInvalid(format!(
                "dataset shape mismatch: {} features, {} labels, {} ids, dim {dim}",
                features.len(),
                labels.len(),
                ids.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::ConfigInvalid(format!(
                "label {l} outside the {n_classes} declared classes"
            )));
        }
        let index: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        if index.len() != ids.len() {
            return Err(Error::ConfigInvalid("duplicate sample ids".into()));
        }
        Ok(Dataset {
            dim,
            n_classes,
            features,
            labels,
            ids,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    /// Row position of a sample id.
    pub fn position(&self, id: usize) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at the given positions, in the given order.
    pub fn subset(&self, positions: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(positions.len() * self.dim);
        for &p in positions {
            features.extend_from_slice(self.row(p));
        }
        Dataset::new(
            self.dim,
            self.n_classes,
            features,
            positions.iter().map(|&p| self.labels[p]).collect(),
            positions.iter().map(|&p| self.ids[p]).collect(),
        )
        .expect("subset of a valid dataset")
    }
}

/// Centre of the minority class; the majority class sits at the origin.
pub const MINORITY_CENTER: [f64; 2] = [2.5, 2.5];

/// Two isotropic unit-variance Gaussian blobs in 2-D.
///
/// Class 1 holds `round(n * positive_fraction)` samples. Row order is
/// shuffled; ids are the row positions.
pub fn gen_synthetic(n: usize, positive_fraction: f64, seed: u64) -> Result<Dataset> {
    if !(positive_fraction > 0.0 && positive_fraction < 1.0) {
        return Err(Error::BadFraction(positive_fraction));
    }
    if n < 2 {
        return Err(Error::ConfigInvalid(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    let n_pos = (n as f64 * positive_fraction).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<usize> = (0..n).map(|i| usize::from(i < n_pos)).collect();
    labels.shuffle(&mut rng);
    let mut features = Vec::with_capacity(2 * n);
    for &l in &labels {
        let center = if l == 1 { MINORITY_CENTER } else { [0.0, 0.0] };
        for c in center {
            let z: f64 = rng.sample(StandardNormal);
            features.push(c + z);
        }
    }
    Dataset::new(2, 2, features, labels, (0..n).collect())
}

/// Stratified split into `(D_AL, D_E)` with `round(n_c * eval_fraction)`
/// samples of each class `c` going to the evaluation side.
pub fn split_eval(ds: &Dataset, eval_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
        return Err(Error::BadFraction(eval_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eval_pos = Vec::new();
    let mut al_pos = Vec::new();
    for class in 0..ds.n_classes() {
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| ds.label(i) == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::TooSmallClass {
                class,
                count: members.len(),
            });
        }
        members.shuffle(&mut rng);
        let k =
            ((members.len() as f64 * eval_fraction).round() as usize).clamp(1, members.len() - 1);
        eval_pos.extend_from_slice(&members[..k]);
        al_pos.extend_from_slice(&members[k..]);
    }
    eval_pos.sort_unstable();
    al_pos.sort_unstable();
    Ok((ds.subset(&al_pos), ds.subset(&eval_pos)))
}
