use std::time::Instant;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::query::{qm_kmeans, qm_random, qm_ratio_max, ALState, QueryMethod};
use super::{macro_f1, train_logreg, Dataset, TrainerConfig};
use crate::curve::{build_curve, CurvePoint, LearningCurve};
use crate::error::{Error, Result};

/// Offset separating the query stream from the initial-draw stream of a seed.
const QUERY_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmulationConfig {
    pub initial_budget: usize,
    pub query_size: usize,
    /// Labelled-set size at which the loop stops; `None` runs until the pool is exhausted.
    pub stop_budget: Option<usize>,
    pub qm: QueryMethod,
    pub random_mix: f64,
    pub seeds: Vec<u64>,
    pub trainer: TrainerConfig,
}

impl EmulationConfig {
    pub fn new(qm: QueryMethod, budget: usize, seeds: Vec<u64>) -> Self {
        EmulationConfig {
            initial_budget: budget,
            query_size: budget,
            stop_budget: None,
            qm,
            random_mix: 0.05,
            seeds,
            trainer: TrainerConfig::default(),
        }
    }

    fn validate(&self, pool: &Dataset) -> Result<usize> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.initial_budget == 0 || self.initial_budget > pool.len() {
            return bad(format!(
                "initial budget {} must lie in [1, {}]",
                self.initial_budget,
                pool.len()
            ));
        }
        if self.query_size == 0 {
            return bad("query size must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.random_mix) {
            return bad(format!("random_mix {} outside [0, 1]", self.random_mix));
        }
        let stop = self.stop_budget.unwrap_or(pool.len());
        if stop < self.initial_budget || stop > pool.len() {
            return bad(format!(
                "stop budget {stop} must lie in [{}, {}]",
                self.initial_budget,
                pool.len()
            ));
        }
        Ok(stop)
    }
}

/// Per-iteration records of one query method over all seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentLog {
    pub qm_id: String,
    pub points: Vec<CurvePoint>,
}

impl ExperimentLog {
    pub fn to_curve(&self) -> Result<LearningCurve> {
        build_curve(&self.points, &self.qm_id)
    }
}

/// Initial labelled set: one random sample of every class when the budget
/// allows it, the rest drawn uniformly.
fn initial_draw(pool: &Dataset, budget: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(budget);
    let present: Vec<usize> = (0..pool.n_classes())
        .filter(|&c| pool.labels().contains(&c))
        .collect();
    if budget >= present.len() {
        for c in present {
            let members: Vec<usize> = (0..pool.len()).filter(|&i| pool.label(i) == c).collect();
            chosen.push(*members.choose(rng).expect("class is present"));
        }
    }
    let mut rest: Vec<usize> = (0..pool.len()).filter(|i| !chosen.contains(i)).collect();
    rest.shuffle(rng);
    chosen.extend(rest.into_iter().take(budget - chosen.len()));
    chosen.into_iter().map(|p| pool.ids()[p]).collect()
}

fn train_and_score(
    pool: &Dataset,
    eval: &Dataset,
    state: &ALState,
    trainer: &TrainerConfig,
) -> Result<(super::Classifier, f64)> {
    // Ascending id order makes training independent of query order.
    let positions: Vec<usize> = state
        .labelled
        .iter()
        .map(|&id| pool.position(id).expect("labelled id in pool"))
        .collect();
    let model = train_logreg(&pool.subset(&positions), trainer)?;
    let score = macro_f1(&model, eval);
    Ok((model, score))
}

fn run_seed(
    config: &EmulationConfig,
    pool: &Dataset,
    eval: &Dataset,
    stop: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut query_rng = ChaCha8Rng::seed_from_u64(seed ^ QUERY_STREAM);
    let initial = initial_draw(pool, config.initial_budget, &mut init_rng);
    let mut state = ALState::new(pool, &initial);

    let mut points = Vec::new();
    let mut last_query_time = 0.0;
    loop {
        let (model, performance) = train_and_score(pool, eval, &state, &config.trainer)?;
        if model.is_degenerate() {
            log::debug!(
                "seed {seed} iteration {}: single-class labelled set",
                state.iteration
            );
        }
        points.push(CurvePoint {
            x: (state.labelled.len() - config.initial_budget) as f64,
            performance,
            seed,
            qm_time: Some(last_query_time),
        });
        let k = config
            .query_size
            .min(stop - state.labelled.len())
            .min(state.unlabelled.len());
        if k == 0 {
            break;
        }
        let started = Instant::now();
        let query = match config.qm {
            QueryMethod::Random => qm_random(&state, k, &mut query_rng)?,
            QueryMethod::RatioMax => {
                qm_ratio_max(&state, pool, &model, k, config.random_mix, &mut query_rng)?
            }
            QueryMethod::KMeans => qm_kmeans(&state, pool, k, config.random_mix, &mut query_rng)?,
        };
        last_query_time = started.elapsed().as_secs_f64();
        state.update(&query);
    }
    Ok(points)
}

/// Runs the active-learning loop for every configured seed.
///
/// Each seed draws its initial set from its own stream, so every query
/// method starts from the same labelled samples for a given seed.
pub fn run_al(config: &EmulationConfig, pool: &Dataset, eval: &Dataset) -> Result<ExperimentLog> {
    let stop = config.validate(pool)?;
    let per_seed: Vec<Vec<CurvePoint>> = config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, pool, eval, stop, seed))
        .collect::<Result<_>>()?;
    Ok(ExperimentLog {
        qm_id: config.qm.id().to_string(),
        points: per_seed.into_iter().flatten().collect(),
    })
}

/// Performance of the model trained on the whole pool.
pub fn ceiling_performance(pool: &Dataset, eval: &Dataset, trainer: &TrainerConfig) -> Result<f64> {
    let positions: Vec<usize> = {
        let mut ids: Vec<(usize, usize)> = pool
            .ids()
            .iter()
            .copied()
            .enumerate()
            .map(|(p, id)| (id, p))
            .collect();
        ids.sort_unstable();
        ids.into_iter().map(|(_, p)| p).collect()
    };
    let model = train_logreg(&pool.subset(&positions), trainer)?;
    Ok(macro_f1(&model, eval))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emulator::{gen_synthetic, split_eval};

    fn small() -> (Dataset, Dataset) {
        let ds = gen_synthetic(200, 0.2, 4).unwrap();
        split_eval(&ds, 0.5, 4).unwrap()
    }

    #[test]
    fn zero_iterations_when_stop_equals_initial() {
        let (pool, eval) = small();
        let mut cfg = EmulationConfig::new(QueryMethod::Random, 10, vec![1]);
        cfg.stop_budget = Some(10);
        let log = run_al(&cfg, &pool, &eval).unwrap();
        assert_eq!(log.points.len(), 1);
        assert_eq!(log.points[0].x, 0.0);
    }

    #[test]
    fn x_advances_by_query_size_until_exhaustion() {
        let (pool, eval) = small();
        let mut cfg = EmulationConfig::new(QueryMethod::RatioMax, 7, vec![2]);
        cfg.trainer.max_epochs = 200;
        let log = run_al(&cfg, &pool, &eval).unwrap();
        let xs: Vec<f64> = log.points.iter().map(|p| p.x).collect();
        assert_eq!(xs[0], 0.0);
        for w in xs.windows(2) {
            assert!(w[1] - w[0] == 7.0 || w[1] == (pool.len() - 7) as f64);
        }
        assert_eq!(*xs.last().unwrap(), (pool.len() - 7) as f64);
        assert!(log.points.iter().all(|p| p.qm_time.unwrap() >= 0.0));
    }

    #[test]
    fn endpoints_agree_across_methods() {
        let (pool, eval) = small();
        let mut results = Vec::new();
        for qm in [
            QueryMethod::Random,
            QueryMethod::RatioMax,
            QueryMethod::KMeans,
        ] {
            let mut cfg = EmulationConfig::new(qm, 10, vec![5]);
            cfg.trainer.max_epochs = 300;
            let log = run_al(&cfg, &pool, &eval).unwrap();
            let first = log.points.first().unwrap().performance;
            let last = log.points.last().unwrap().performance;
            results.push((first, last));
        }
        assert!(results.windows(2).all(|w| w[0] == w[1]), "{results:?}");
        let trainer = TrainerConfig {
            max_epochs: 300,
            ..Default::default()
        };
        assert_eq!(
            ceiling_performance(&pool, &eval, &trainer).unwrap(),
            results[0].1
        );
    }

    #[test]
    fn initial_draw_covers_classes() {
        let (pool, _) = small();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ids = initial_draw(&pool, 2, &mut rng);
            let classes: Vec<usize> = ids
                .iter()
                .map(|&id| pool.label(pool.position(id).unwrap()))
                .collect();
            assert!(classes.contains(&0) && classes.contains(&1));
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let (pool, eval) = small();
        let mut cfg = EmulationConfig::new(QueryMethod::Random, 10, vec![1]);
        cfg.stop_budget = Some(pool.len() + 1);
        assert!(matches!(
            run_al(&cfg, &pool, &eval),
            Err(Error::ConfigInvalid(_))
        ));
        cfg.stop_budget = None;
        cfg.seeds.clear();
        assert!(matches!(
            run_al(&cfg, &pool, &eval),
            Err(Error::ConfigInvalid(_))
        ));
    }
}
