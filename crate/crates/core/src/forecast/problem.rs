use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::Loss;
use super::metric::Metric;
use super::model::{Model, ModelSpec};
use super::window::{SeriesBatch, Split, Standardizer, WindowConfig};
use crate::datagen::DemandPanel;
use crate::error::{Error, Result};
use crate::mgda::MultiObjectiveProblem;
use crate::types::{GradientSet, MetricVector, ObjectiveValues, ParamVector};

/// Rows per parallel work unit. Fixed so that sums are reproducible.
const CHUNK_ROWS: usize = 256;

/// Ordered `(loss, metric)` pairs; objective `t` is trained with loss `t`
/// and judged by metric `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossMetricBinding {
    pub pairs: Vec<(Loss, Metric)>,
}

impl LossMetricBinding {
    /// `[(MSE, ACC), (QRL q, SL)]`.
    pub fn standard(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::contract("quantile must lie in (0, 1)"));
        }
        Ok(Self {
            pairs: vec![
                (Loss::Mse, Metric::Accuracy),
                (Loss::Quantile { q }, Metric::ServiceLevel),
            ],
        })
    }
}

impl Default for LossMetricBinding {
    fn default() -> Self {
        Self::standard(0.9).expect("0.9 is a valid quantile")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastConfig {
    pub window: WindowConfig,
    pub model: ModelSpec,
    pub binding: LossMetricBinding,
    /// Divide each loss by `horizon * sigma^p` on top of the `1/N` average,
    /// where `sigma` is the training target spread and `p` the loss's scale power.
    pub normalize_losses: bool,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            window: WindowConfig::default(),
            model: ModelSpec::default(),
            binding: LossMetricBinding::default(),
            normalize_losses: true,
        }
    }
}

/// A model trained on the train split and judged on the validation split.
#[derive(Clone, Debug)]
pub struct ForecastProblem {
    model: Model,
    train: SeriesBatch,
    validation: SeriesBatch,
    test: SeriesBatch,
    binding: LossMetricBinding,
    loss_scales: Vec<f64>,
}

impl ForecastProblem {
    pub fn new(panel: &DemandPanel, cfg: &ForecastConfig) -> Result<Self> {
        if cfg.binding.pairs.is_empty() {
            return Err(Error::contract("at least one loss/metric pair is required"));
        }
        let mut train = SeriesBatch::from_panel(panel, &cfg.window, Split::Train)?;
        let mut validation = SeriesBatch::from_panel(panel, &cfg.window, Split::Validation)?;
        let mut test = SeriesBatch::from_panel(panel, &cfg.window, Split::Test)?;
        if train.is_empty() || validation.is_empty() {
            return Err(Error::contract(format!(
                "panel too short for k={} g={}: {} train and {} validation windows",
                cfg.window.input_weeks, cfg.window.horizon, train.n, validation.n
            )));
        }
        let standardizer = Standardizer::fit(&train)?;
        standardizer.apply(&mut train);
        standardizer.apply(&mut validation);
        standardizer.apply(&mut test);

        let count = train.targets.len() as f64;
        let mean = train.targets.iter().sum::<f64>() / count;
        let var = train.targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / count;
        let sigma = if var > 0.0 { var.sqrt() } else { 1.0 };

        let model = Model::new(cfg.model, train.input_width, train.horizon)?
            .with_output_affine(sigma, mean);
        let n = train.n as f64;
        let loss_scales = cfg
            .binding
            .pairs
            .iter()
            .map(|(loss, _)| {
                if cfg.normalize_losses {
                    1.0 / (n * train.horizon as f64 * sigma.powi(loss.scale_power()))
                } else {
                    1.0 / n
                }
            })
            .collect();
        Ok(Self {
            model,
            train,
            validation,
            test,
            binding: cfg.binding.clone(),
            loss_scales,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn binding(&self) -> &LossMetricBinding {
        &self.binding
    }

    pub fn batch(&self, split: Split) -> &SeriesBatch {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    pub fn predict(&self, theta: &[f64], split: Split) -> Result<Vec<f64>> {
        let batch = self.batch(split);
        self.forward_par(theta, batch)
    }

    /// Metrics of `theta` on any split.
    pub fn metrics_on(&self, theta: &[f64], split: Split) -> Result<MetricVector> {
        let batch = self.batch(split);
        if batch.is_empty() {
            return Err(Error::contract("split has no windows"));
        }
        let yhat = self.forward_par(theta, batch)?;
        if yhat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("predictions"));
        }
        let values = self
            .binding
            .pairs
            .iter()
            .map(|(_, metric)| metric.eval(&batch.targets, &yhat, batch.horizon))
            .collect::<Result<Vec<_>>>()?;
        MetricVector::new(values)
    }

    fn forward_par(&self, theta: &[f64], batch: &SeriesBatch) -> Result<Vec<f64>> {
        let parts: Vec<Vec<f64>> = batch
            .inputs
            .par_chunks(CHUNK_ROWS * batch.input_width)
            .map(|x| self.model.forward(theta, x))
            .collect::<Result<_>>()?;
        Ok(parts.concat())
    }
}

impl MultiObjectiveProblem for ForecastProblem {
    fn num_objectives(&self) -> usize {
        self.binding.pairs.len()
    }

    fn num_params(&self) -> usize {
        self.model.num_params()
    }

    fn initial_params(&self, seed: u64) -> ParamVector {
        self.model.init(seed)
    }

    fn evaluate(&self, theta: &ParamVector) -> Result<(ObjectiveValues, GradientSet)> {
        let batch = &self.train;
        let yhat = self.forward_par(theta, batch)?;
        if yhat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("predictions"));
        }
        let mut losses = Vec::with_capacity(self.binding.pairs.len());
        let mut rows = Vec::with_capacity(self.binding.pairs.len());
        for ((loss, _), &scale) in self.binding.pairs.iter().zip(&self.loss_scales) {
            losses.push(scale * loss.value(&batch.targets, &yhat));
            let dy: Vec<f64> = loss
                .grad(&batch.targets, &yhat)
                .into_iter()
                .map(|v| v * scale)
                .collect();
            let partials: Vec<Vec<f64>> = batch
                .inputs
                .par_chunks(CHUNK_ROWS * batch.input_width)
                .zip(dy.par_chunks(CHUNK_ROWS * batch.horizon))
                .map(|(x, d)| self.model.backward(theta, x, d))
                .collect::<Result<_>>()?;
            let mut grad = vec![0.0; theta.len()];
            for p in partials {
                grad.iter_mut().zip(p).for_each(|(g, v)| *g += v);
            }
            if grad.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("gradient"));
            }
            rows.push(grad);
        }
        if losses.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("losses"));
        }
        Ok((ObjectiveValues::new(losses)?, GradientSet::new(rows)?))
    }

    fn metrics(&self, theta: &ParamVector) -> Result<MetricVector> {
        self.metrics_on(theta, Split::Validation)
    }
}
