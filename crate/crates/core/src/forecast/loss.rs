use serde::{Deserialize, Serialize};

/// Sum of squared errors.
pub fn loss_mse(y: &[f64], yhat: &[f64]) -> f64 {
    y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum()
}

/// `2 (yhat - y)`.
pub fn mse_grad(y: &[f64], yhat: &[f64]) -> Vec<f64> {
    y.iter().zip(yhat).map(|(a, b)| 2.0 * (b - a)).collect()
}

/// Pinball loss summed over all points.
pub fn loss_qrl(y: &[f64], yhat: &[f64], q: f64) -> f64 {
    y.iter()
        .zip(yhat)
        .map(|(a, b)| {
            let r = a - b;
            (q * r).max((q - 1.0) * r)
        })
        .sum()
}

/// Subgradient of [`loss_qrl`]; zero where the forecast is exact.
pub fn qrl_grad(y: &[f64], yhat: &[f64], q: f64) -> Vec<f64> {
    y.iter()
        .zip(yhat)
        .map(|(a, b)| {
            if b < a {
                -q
            } else if b > a {
                1.0 - q
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Loss {
    Mse,
    Quantile { q: f64 },
}

impl Loss {
    pub fn value(&self, y: &[f64], yhat: &[f64]) -> f64 {
        match *self {
            Loss::Mse => loss_mse(y, yhat),
            Loss::Quantile { q } => loss_qrl(y, yhat, q),
        }
    }

    pub fn grad(&self, y: &[f64], yhat: &[f64]) -> Vec<f64> {
        match *self {
            Loss::Mse => mse_grad(y, yhat),
            Loss::Quantile { q } => qrl_grad(y, yhat, q),
        }
    }

    /// Power of the target scale the loss grows with (2 for squared error).
    pub fn scale_power(&self) -> i32 {
        match self {
            Loss::Mse => 2,
            Loss::Quantile { .. } => 1,
        }
    }
}
