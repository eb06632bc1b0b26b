use serde::{Deserialize, Serialize};

use crate::datagen::DemandPanel;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Input weeks `k`.
    pub input_weeks: usize,
    /// Forecast horizon `g`.
    pub horizon: usize,
    /// Weeks between consecutive window starts.
    pub stride: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            input_weeks: 26,
            horizon: 26,
            stride: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// Week ranges `[start, end)` holding the targets of each split, 8:1:1 in time.
pub fn split_bounds(weeks: usize) -> [(usize, usize); 3] {
    let a = (weeks as f64 * 0.8).round() as usize;
    let b = (weeks as f64 * 0.9).round() as usize;
    [(0, a), (a, b), (b, weeks)]
}

/// Windowed samples: `n` rows of `input_width` inputs and `horizon` targets.
///
/// Each input step holds `log1p(demand)` followed by the panel's features, so
/// `input_width = k * step_width`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesBatch {
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub n: usize,
    pub step_width: usize,
    pub input_width: usize,
    pub horizon: usize,
    /// Panel index of the series each row came from.
    pub series: Vec<usize>,
}

impl SeriesBatch {
    /// Windows whose targets lie entirely inside `split`. Inputs may reach back
    /// into earlier weeks but never past the first target week.
    pub fn from_panel(panel: &DemandPanel, cfg: &WindowConfig, split: Split) -> Result<Self> {
        if cfg.input_weeks == 0 || cfg.horizon == 0 || cfg.stride == 0 {
            return Err(Error::contract("window sizes and stride must be positive"));
        }
        let step_width = 1 + panel.feature_names.len();
        let input_width = cfg.input_weeks * step_width;
        let mut batch = Self {
            inputs: Vec::new(),
            targets: Vec::new(),
            n: 0,
            step_width,
            input_width,
            horizon: cfg.horizon,
            series: Vec::new(),
        };
        for (idx, s) in panel.series.iter().enumerate() {
            let bounds = split_bounds(s.weeks());
            let (lo, hi) = match split {
                Split::Train => bounds[0],
                Split::Validation => bounds[1],
                Split::Test => bounds[2],
            };
            let mut start = lo.max(cfg.input_weeks);
            while start + cfg.horizon <= hi {
                for t in start - cfg.input_weeks..start {
                    batch.inputs.push(s.demand[t].ln_1p());
                    batch.inputs.extend_from_slice(&s.features[t]);
                }
                batch.targets.extend_from_slice(&s.demand[start..start + cfg.horizon]);
                batch.series.push(idx);
                batch.n += 1;
                start += cfg.stride;
            }
        }
        Ok(batch)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn target_row(&self, i: usize) -> &[f64] {
        &self.targets[i * self.horizon..(i + 1) * self.horizon]
    }
}

/// Per-feature mean and standard deviation over every input step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(batch: &SeriesBatch) -> Result<Self> {
        if batch.is_empty() {
            return Err(Error::contract("cannot fit a standardizer on an empty batch"));
        }
        let w = batch.step_width;
        let count = (batch.inputs.len() / w) as f64;
        let mut mean = vec![0.0; w];
        for step in batch.inputs.chunks(w) {
            mean.iter_mut().zip(step).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![0.0; w];
        for step in batch.inputs.chunks(w) {
            for ((s, v), m) in var.iter_mut().zip(step).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / count).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, batch: &mut SeriesBatch) {
        for step in batch.inputs.chunks_mut(batch.step_width) {
            for ((v, m), s) in step.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, DemandClass, GenSpec};

    fn panel() -> DemandPanel {
        generate(&GenSpec {
            series: 3,
            weeks: 100,
            class: DemandClass::Mixed,
            ..GenSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn splits_are_eight_one_one() {
        assert_eq!(split_bounds(100), [(0, 80), (80, 90), (90, 100)]);
    }

    #[test]
    fn targets_stay_inside_their_split() {
        let p = panel();
        let cfg = WindowConfig {
            input_weeks: 8,
            horizon: 4,
            stride: 1,
        };
        let train = SeriesBatch::from_panel(&p, &cfg, Split::Train).unwrap();
        let val = SeriesBatch::from_panel(&p, &cfg, Split::Validation).unwrap();
        // Train targets start at 8..=76, validation at 80..=86.
        assert_eq!(train.n, 3 * 69);
        assert_eq!(val.n, 3 * 7);
        assert_eq!(train.input_width, 8 * 5);
        let first_val = &p.series[0].demand[80..84];
        assert_eq!(val.target_row(0), first_val);
        // The last input step of the first validation window is week 79.
        let last_step = &val.inputs[7 * 5..8 * 5];
        assert_eq!(last_step[0], p.series[0].demand[79].ln_1p());
    }

    #[test]
    fn standardized_train_inputs_are_centered() {
        let p = panel();
        let cfg = WindowConfig {
            input_weeks: 4,
            horizon: 4,
            stride: 2,
        };
        let mut train = SeriesBatch::from_panel(&p, &cfg, Split::Train).unwrap();
        let s = Standardizer::fit(&train).unwrap();
        s.apply(&mut train);
        let again = Standardizer::fit(&train).unwrap();
        for (m, sd) in again.mean.iter().zip(&again.std) {
            assert!(m.abs() < 1e-9);
            assert!((sd - 1.0).abs() < 1e-9);
        }
    }
}
