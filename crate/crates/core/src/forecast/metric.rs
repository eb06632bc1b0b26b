use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-series horizon totals `(Y_n, Yhat_n)` with forecasts clamped at zero.
///
/// `y` and `yhat` hold `horizon` consecutive values per series.
pub fn horizon_totals(y: &[f64], yhat: &[f64], horizon: usize) -> Vec<(f64, f64)> {
    assert!(horizon > 0 && y.len() == yhat.len() && y.len() % horizon == 0);
    y.chunks(horizon)
        .zip(yhat.chunks(horizon))
        .map(|(a, b)| (a.iter().sum(), b.iter().map(|v| v.max(0.0)).sum()))
        .collect()
}

/// `sum_n Y_n min(Y_n, Yhat_n) / sum_n Y_n max(Y_n, Yhat_n)` over series with `Y_n > 0`.
pub fn metric_acc(y: &[f64], yhat: &[f64], horizon: usize) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (ty, tf) in horizon_totals(y, yhat, horizon) {
        if ty > 0.0 {
            num += ty * ty.min(tf);
            den += ty * ty.max(tf);
        }
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Error::UndefinedMetric("ACC"))
    }
}

/// `sum_n min(Yhat_n, Y_n) / sum_n Y_n` over series with `Y_n > 0`.
pub fn metric_sl(y: &[f64], yhat: &[f64], horizon: usize) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (ty, tf) in horizon_totals(y, yhat, horizon) {
        if ty > 0.0 {
            num += tf.min(ty);
            den += ty;
        }
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Error::UndefinedMetric("SL"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    ServiceLevel,
}

impl Metric {
    pub fn eval(self, y: &[f64], yhat: &[f64], horizon: usize) -> Result<f64> {
        match self {
            Metric::Accuracy => metric_acc(y, yhat, horizon),
            Metric::ServiceLevel => metric_sl(y, yhat, horizon),
        }
    }
}
