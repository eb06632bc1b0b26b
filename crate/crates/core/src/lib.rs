//! Preference-guided multi-objective training with the multiple-gradient
//! descent algorithm (MGDA).
//!
//! The crate is organized bottom-up:
//!
//! - [`minnorm`]: min-norm point of the convex hull of gradients (Frank-Wolfe).
//! - [`mgda`]: the descent loop, with optional preference weights on the simplex.
//! - [`posterior`]: frontier exploration driven by metric granularity.
//! - [`prior`]: search for a solution satisfying metric constraints.
//! - [`forecast`]: demand-forecasting losses, metrics and models.
//! - [`datagen`]: synthetic demand panels.
//! - [`baselines`]: static loss scaling and grid search for comparison.

pub mod baselines;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod forecast;
pub mod mgda;
pub mod minnorm;
pub mod posterior;
pub mod prior;
pub mod toys;
pub mod types;

pub use error::{Error, Result};
pub use mgda::{
    optimize, DescentRule, MultiObjectiveProblem, Optimizer, StopReason, TrainConfig, TrainTrace,
};
pub use minnorm::{frank_wolfe_solve, FwConfig, MinNormResult};
pub use posterior::{explore_frontier, ExploreConfig, FrontierArchive};
pub use types::{
    GradientSet, MetricBounds, MetricSense, MetricVector, ObjectiveValues, ParamVector,
    PreferenceWeights, SimplexWeights,
};
