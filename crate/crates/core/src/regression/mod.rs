//! Boosted-tree regression of cube scores and their roll-up to video scores.

pub mod ensemble;
pub mod gbdt;

pub use ensemble::{ensemble_scores, median, ScoreReport};
pub use gbdt::{train_gbdt, train_gbdt_traced, GbdtModel, Node, TrainConfig, TrainTrace, Tree};
