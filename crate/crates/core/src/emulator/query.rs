use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cluster::{kmeans, pca_project, sq_dist};
use super::{Classifier, Dataset};
use crate::error::{Error, Result};

/// Target dimension of the PCA step before clustering.
pub const PCA_DIM: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QueryMethod {
    #[serde(rename = "rand")]
    Random,
    #[serde(rename = "ratio_max")]
    RatioMax,
    #[serde(rename = "kmeans")]
    KMeans,
}

impl QueryMethod {
    pub fn id(self) -> &'static str {
        match self {
            QueryMethod::Random => "rand",
            QueryMethod::RatioMax => "ratio_max",
            QueryMethod::KMeans => "kmeans",
        }
    }
}

impl fmt::Display for QueryMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for QueryMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rand" | "random" => Ok(QueryMethod::Random),
            "ratio_max" => Ok(QueryMethod::RatioMax),
            "kmeans" | "k_means" => Ok(QueryMethod::KMeans),
            other => Err(Error::ConfigInvalid(format!(
                "unknown query method '{other}'"
            ))),
        }
    }
}

/// Labelled / unlabelled partition of the AL pool, keyed by sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct ALState {
    pub labelled: BTreeSet<usize>,
    pub unlabelled: BTreeSet<usize>,
    pub iteration: usize,
}

impl ALState {
    pub fn new(pool: &Dataset, initial: &[usize]) -> Self {
        let labelled: BTreeSet<usize> = initial.iter().copied().collect();
        let unlabelled = pool
            .ids()
            .iter()
            .copied()
            .filter(|id| !labelled.contains(id))
            .collect();
        ALState {
            labelled,
            unlabelled,
            iteration: 0,
        }
    }

    /// Moves the queried ids to the labelled set.
    pub fn update(&mut self, query: &[usize]) {
        for id in query {
            let moved = self.unlabelled.remove(id);
            debug_assert!(moved, "queried id {id} was not unlabelled");
            self.labelled.insert(*id);
        }
        self.iteration += 1;
    }
}

fn check_size(state: &ALState, k: usize) -> Result<()> {
    if k > state.unlabelled.len() {
        return Err(Error::QueryTooLarge {
            requested: k,
            available: state.unlabelled.len(),
        });
    }
    Ok(())
}

/// Number of samples chosen by the method itself; the rest are random.
pub fn informed_count(k: usize, random_mix: f64) -> usize {
    (((1.0 - random_mix) * k as f64) - 1e-9).ceil().max(0.0) as usize
}

fn sample_ids<R: Rng + ?Sized>(pool: &[usize], k: usize, rng: &mut R) -> Vec<usize> {
    rand::seq::index::sample(rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

pub fn qm_random<R: Rng + ?Sized>(state: &ALState, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    check_size(state, k)?;
    let pool: Vec<usize> = state.unlabelled.iter().copied().collect();
    Ok(sample_ids(&pool, k, rng))
}

/// Ratio-max uncertainty of one sample: the largest `1 - |2 p_c - 1|` over classes.
pub fn ratio_max_score(probabilities: &[f64]) -> f64 {
    probabilities
        .iter()
        .map(|p| 1.0 - (2.0 * p - 1.0).abs())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Top `informed_count(k, random_mix)` by score (ties to the smaller id),
/// topped up with uniform draws from the remaining ids.
pub fn select_by_score<R: Rng + ?Sized>(
    scored: &[(usize, f64)],
    k: usize,
    random_mix: f64,
    rng: &mut R,
) -> Vec<usize> {
    let mut ranked = scored.to_vec();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let top = informed_count(k, random_mix).min(k);
    let mut query: Vec<usize> = ranked[..top].iter().map(|s| s.0).collect();
    let mut rest: Vec<usize> = ranked[top..].iter().map(|s| s.0).collect();
    rest.sort_unstable();
    query.extend(sample_ids(&rest, k - top, rng));
    query
}

pub fn qm_ratio_max<R: Rng + ?Sized>(
    state: &ALState,
    pool: &Dataset,
    model: &Classifier,
    k: usize,
    random_mix: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_size(state, k)?;
    let scored: Vec<(usize, f64)> = state
        .unlabelled
        .iter()
        .map(|&id| {
            let row = pool.row(pool.position(id).expect("id in pool"));
            (id, ratio_max_score(&model.predict_proba(row)))
        })
        .collect();
    Ok(select_by_score(&scored, k, random_mix, rng))
}

/// Diversity sampling: PCA to at most five dimensions, k-means with one
/// cluster per informed query slot, nearest unlabelled sample per centroid.
pub fn qm_kmeans<R: Rng + ?Sized>(
    state: &ALState,
    pool: &Dataset,
    k: usize,
    random_mix: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_size(state, k)?;
    let ids: Vec<usize> = state.unlabelled.iter().copied().collect();
    let n_clusters = informed_count(k, random_mix).min(k);
    let mut taken = vec![false; ids.len()];
    let mut query = Vec::with_capacity(k);
    if n_clusters > 0 {
        let rows: Vec<Vec<f64>> = ids
            .iter()
            .map(|&id| pool.row(pool.position(id).expect("id in pool")).to_vec())
            .collect();
        let projected = pca_project(&rows, PCA_DIM.min(pool.dim()));
        let centroids = kmeans(&projected, n_clusters, rng);
        for c in &centroids {
            let mut order: Vec<(f64, usize)> = projected
                .iter()
                .enumerate()
                .map(|(i, p)| (sq_dist(p, c), i))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some(&(_, i)) = order.iter().find(|(_, i)| !taken[*i]) {
                taken[i] = true;
                query.push(ids[i]);
            }
        }
    }
    let rest: Vec<usize> = ids
        .iter()
        .zip(&taken)
        .filter(|(_, &t)| !t)
        .map(|(&id, _)| id)
        .collect();
    let missing = k - query.len();
    query.extend(sample_ids(&rest, missing, rng));
    Ok(query)
}
