//! Value types shared by the optimizers, plus Pareto dominance and
//! stationarity predicates.
//!
//! Every type validates on construction and is immutable afterwards.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minnorm::{frank_wolfe_solve, FwConfig};

/// Tolerance on `sum(alpha) == 1` after normalization.
pub const SIMPLEX_TOL: f64 = 1e-9;

fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

macro_rules! deref_slice {
    ($ty:ty) => {
        impl Deref for $ty {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl AsRef<[f64]> for $ty {
            fn as_ref(&self) -> &[f64] {
                &self.0
            }
        }
    };
}

/// Flat model parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::contract("parameter vector must have at least one entry"));
        }
        if !all_finite(&values) {
            return Err(Error::NonFinite("parameter vector"));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

deref_slice!(ParamVector);

/// One gradient row per objective, all of the same dimension.
///
/// Stored row-major in a single buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    data: Vec<f64>,
    dim: usize,
    count: usize,
}

impl GradientSet {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let count = rows.len();
        if count == 0 {
            return Err(Error::contract("gradient set needs at least one objective"));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::contract("gradient dimension must be at least 1"));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::contract("gradient rows differ in length"));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        Self::from_flat(data, count)
    }

    /// Builds from a row-major buffer holding `count` rows.
    pub fn from_flat(data: Vec<f64>, count: usize) -> Result<Self> {
        if count == 0 || data.is_empty() || data.len() % count != 0 {
            return Err(Error::contract(format!(
                "buffer of length {} cannot hold {count} equal gradient rows",
                data.len()
            )));
        }
        if !all_finite(&data) {
            return Err(Error::NonFinite("gradient"));
        }
        let dim = data.len() / count;
        Ok(Self { data, dim, count })
    }

    /// Number of objectives `T`.
    pub fn num_objectives(&self) -> usize {
        self.count
    }

    /// Parameter dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// `sum_t weights[t] * row(t)`.
    pub fn combine(&self, weights: &[f64]) -> Vec<f64> {
        debug_assert_eq!(weights.len(), self.count);
        let mut out = vec![0.0; self.dim];
        for (row, &w) in self.rows().zip(weights) {
            if w == 0.0 {
                continue;
            }
            for (o, g) in out.iter_mut().zip(row) {
                *o += w * g;
            }
        }
        out
    }

    /// Returns a copy with rows reordered so that row `i` of the result is row `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.count {
            return Err(Error::contract("permutation length differs from objective count"));
        }
        let mut data = Vec::with_capacity(self.data.len());
        for &i in order {
            data.extend_from_slice(self.row(i));
        }
        Self::from_flat(data, self.count)
    }
}

/// Convex-combination weights over objectives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    /// Validates nonnegativity and rescales onto the simplex.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::contract("simplex weights must be non-empty"));
        }
        if !all_finite(&alpha) {
            return Err(Error::NonFinite("simplex weights"));
        }
        if alpha.iter().any(|&a| a < 0.0) {
            return Err(Error::contract("simplex weights must be nonnegative"));
        }
        let sum: f64 = alpha.iter().sum();
        if sum <= 0.0 {
            return Err(Error::contract("simplex weights sum to zero"));
        }
        let alpha = if (sum - 1.0).abs() <= f64::EPSILON {
            alpha
        } else {
            alpha.into_iter().map(|a| a / sum).collect()
        };
        debug_assert!((alpha.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL);
        Ok(Self(alpha))
    }

    pub fn uniform(t: usize) -> Self {
        assert!(t > 0, "uniform simplex weights need t >= 1");
        Self(vec![1.0 / t as f64; t])
    }

    pub fn vertex(t: usize, index: usize) -> Self {
        let mut alpha = vec![0.0; t];
        alpha[index] = 1.0;
        Self(alpha)
    }

    /// Construction path for values already known to lie on the simplex.
    pub(crate) fn from_raw(alpha: Vec<f64>) -> Self {
        Self(alpha)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

deref_slice!(SimplexWeights);

/// Empirical loss per objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValues(Vec<f64>);

impl ObjectiveValues {
    pub fn new(losses: Vec<f64>) -> Result<Self> {
        if losses.is_empty() {
            return Err(Error::contract("objective values must be non-empty"));
        }
        if !all_finite(&losses) {
            return Err(Error::NonFinite("objective values"));
        }
        if losses.iter().any(|&l| l < 0.0) {
            return Err(Error::contract("losses must be nonnegative"));
        }
        Ok(Self(losses))
    }
}

deref_slice!(ObjectiveValues);

/// Metric values as the decision maker sees them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricVector(Vec<f64>);

impl MetricVector {
    pub fn new(metrics: Vec<f64>) -> Result<Self> {
        if metrics.is_empty() {
            return Err(Error::contract("metric vector must be non-empty"));
        }
        if !all_finite(&metrics) {
            return Err(Error::NonFinite("metric vector"));
        }
        Ok(Self(metrics))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

deref_slice!(MetricVector);

/// Whether larger or smaller values of a metric are preferred.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MetricSense {
    #[default]
    Maximize,
    Minimize,
}

impl MetricSense {
    /// True if `candidate` beats `incumbent` by more than `min_delta`.
    pub fn improves(self, candidate: f64, incumbent: f64, min_delta: f64) -> bool {
        match self {
            MetricSense::Maximize => candidate > incumbent + min_delta,
            MetricSense::Minimize => candidate < incumbent - min_delta,
        }
    }
}

/// Per-metric knowledge box `lo[t] <= M[t] <= hi[t]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricBounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl MetricBounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::contract("bounds need matching, non-empty lo/hi"));
        }
        if !all_finite(&lo) || !all_finite(&hi) {
            return Err(Error::NonFinite("metric bounds"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
            return Err(Error::contract("every lower bound must be below its upper bound"));
        }
        Ok(Self { lo, hi })
    }

    /// `[0, 1]` for each of `t` metrics.
    pub fn unit(t: usize) -> Self {
        Self {
            lo: vec![0.0; t],
            hi: vec![1.0; t],
        }
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn clip(&self, t: usize, value: f64) -> f64 {
        value.clamp(self.lo[t], self.hi[t])
    }
}

/// Subjective per-objective weights used to bias the min-norm combination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreferenceWeights(Vec<f64>);

impl PreferenceWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::contract("preference weights must be non-empty"));
        }
        if !all_finite(&w) {
            return Err(Error::NonFinite("preference weights"));
        }
        if w.iter().any(|&x| x <= 0.0) {
            return Err(Error::contract("preference weights must be strictly positive"));
        }
        Ok(Self(w))
    }

    /// `(1/T, ..., 1/T)`.
    pub fn uniform(t: usize) -> Self {
        assert!(t > 0, "uniform preference weights need t >= 1");
        Self(vec![1.0 / t as f64; t])
    }

    /// True when every component is identical.
    pub fn is_uniform(&self) -> bool {
        self.0.iter().all(|&w| w == self.0[0])
    }

    /// Rescaled to sum to one. Uniform weights map to exactly `1/T`.
    pub fn normalized(&self) -> Self {
        if self.is_uniform() {
            return Self::uniform(self.0.len());
        }
        let sum: f64 = self.0.iter().sum();
        Self(self.0.iter().map(|w| w / sum).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

deref_slice!(PreferenceWeights);

/// Pareto dominance on losses (smaller is better): `a <= b` everywhere and `a != b`.
pub fn dominates(a: &ObjectiveValues, b: &ObjectiveValues) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::contract(format!(
            "cannot compare objective vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b.iter()).all(|(x, y)| x <= y) && a != b)
}

/// Dominance on metric vectors with per-metric sense.
///
/// `a` dominates `b` when it is no worse on every metric and better by more
/// than `tol` on at least one.
pub fn metric_dominates(
    a: &MetricVector,
    b: &MetricVector,
    senses: &[MetricSense],
    tol: f64,
) -> Result<bool> {
    if a.len() != b.len() || a.len() != senses.len() {
        return Err(Error::contract("metric vectors and senses differ in length"));
    }
    let mut no_worse = true;
    let mut strictly = false;
    for ((&x, &y), sense) in a.iter().zip(b.iter()).zip(senses) {
        let (x, y) = match sense {
            MetricSense::Maximize => (x, y),
            MetricSense::Minimize => (-x, -y),
        };
        if x < y {
            no_worse = false;
            break;
        }
        if x > y + tol {
            strictly = true;
        }
    }
    Ok(no_worse && strictly)
}

/// True iff the min-norm element of the gradient hull has norm at most `tol`.
pub fn is_pareto_stationary(g: &GradientSet, tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::contract("stationarity tolerance must be positive"));
    }
    let sol = frank_wolfe_solve(g, &FwConfig::default())?;
    Ok(sol.sq_norm.sqrt() <= tol)
}
