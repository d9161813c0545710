//! Desk-scale active-learning emulation on a synthetic binary dataset.
//!
//! The pool is split into an AL set and an evaluation set; each iteration
//! trains a logistic-regression model on the labelled samples, scores it by
//! macro F1 on the evaluation set and lets the query method pick the next
//! batch.

mod cluster;
mod dataset;
mod f1;
mod logreg;
mod query;
mod run;

pub use cluster::{kmeans, pca_project};
pub use dataset::{gen_synthetic, split_eval, Dataset, MINORITY_CENTER};
pub use f1::{macro_f1, macro_f1_from_predictions, per_class_f1};
pub use logreg::{train_logreg, Classifier, TrainerConfig};
pub use query::{
    informed_count, qm_kmeans, qm_random, qm_ratio_max, ratio_max_score, select_by_score, ALState,
    QueryMethod, PCA_DIM,
};
pub use run::{ceiling_performance, run_al, EmulationConfig, ExperimentLog};
