//! Demand-forecasting objectives: surrogate losses, business metrics, small
//! differentiable models and the windowed dataset they train on.

mod loss;
mod metric;
mod model;
mod problem;
mod window;

pub use loss::{loss_mse, loss_qrl, mse_grad, qrl_grad, Loss};
pub use metric::{horizon_totals, metric_acc, metric_sl, Metric};
pub use model::{Activation, Model, ModelKind, ModelSpec};
pub use problem::{ForecastConfig, ForecastProblem, LossMetricBinding};
pub use window::{split_bounds, SeriesBatch, Split, Standardizer, WindowConfig};
