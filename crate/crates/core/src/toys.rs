//! Closed-form test problems with known Pareto sets.
//!
//! [`QuadraticBowls`] has a convex frontier (the segment between minimizers
//! maps onto a curve that bulges away from the origin in metric space).
//! [`FonsecaFleming`] has a concave frontier in metric space, which weighted
//! sums of the losses cannot reach except near its ends.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mgda::MultiObjectiveProblem;
use crate::types::{GradientSet, MetricBounds, MetricVector, ObjectiveValues, ParamVector};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// `L_t(theta) = ||theta - c_t||^2` for a set of centers `c_t`.
///
/// Metrics are `D^2 / (D^2 + L_t)` where `D` is the largest distance between
/// two centers: 1 at the center, smooth and never flat.
#[derive(Clone, Debug)]
pub struct QuadraticBowls {
    centers: Vec<Vec<f64>>,
    scale: f64,
    init_radius: f64,
}

impl QuadraticBowls {
    pub fn new(centers: Vec<Vec<f64>>) -> Result<Self> {
        let dim = centers.first().map(Vec::len).unwrap_or(0);
        if dim == 0 || centers.iter().any(|c| c.len() != dim) {
            return Err(Error::contract("centers must be non-empty and equally sized"));
        }
        let mut scale: f64 = 0.0;
        for (i, a) in centers.iter().enumerate() {
            for b in &centers[i + 1..] {
                scale = scale.max(sq_dist(a, b));
            }
        }
        if scale == 0.0 {
            scale = 1.0;
        }
        Ok(Self {
            centers,
            scale,
            init_radius: scale.sqrt(),
        })
    }

    pub fn pair(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::new(vec![a, b])
    }

    /// Half-width of the box around the centroid used for cold starts.
    pub fn with_init_radius(mut self, radius: f64) -> Self {
        self.init_radius = radius;
        self
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    /// Euclidean distance from `theta` to the segment between the first two centers.
    pub fn distance_to_segment(&self, theta: &[f64]) -> f64 {
        let a = &self.centers[0];
        let b = self.centers.get(1).unwrap_or(a);
        let ab: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        let len2: f64 = ab.iter().map(|x| x * x).sum();
        let s = if len2 == 0.0 {
            0.0
        } else {
            let at: f64 = theta.iter().zip(a).zip(&ab).map(|((t, a), d)| (t - a) * d).sum();
            (at / len2).clamp(0.0, 1.0)
        };
        let proj: Vec<f64> = a.iter().zip(&ab).map(|(a, d)| a + s * d).collect();
        sq_dist(theta, &proj).sqrt()
    }

    /// Metric values of the frontier for a pair span `[1/2, 1]`.
    pub fn frontier_bounds(&self) -> MetricBounds {
        MetricBounds::new(vec![0.5; self.centers.len()], vec![1.0; self.centers.len()])
            .expect("static bounds are valid")
    }

    pub fn metrics_at(&self, theta: &[f64]) -> Vec<f64> {
        self.centers
            .iter()
            .map(|c| self.scale / (self.scale + sq_dist(theta, c)))
            .collect()
    }
}

impl MultiObjectiveProblem for QuadraticBowls {
    fn num_objectives(&self) -> usize {
        self.centers.len()
    }

    fn num_params(&self) -> usize {
        self.dim()
    }

    fn initial_params(&self, seed: u64) -> ParamVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.centers.len() as f64;
        let values = (0..self.dim())
            .map(|j| {
                let centroid = self.centers.iter().map(|c| c[j]).sum::<f64>() / n;
                centroid + rng.gen_range(-self.init_radius..=self.init_radius)
            })
            .collect();
        ParamVector::new(values).expect("finite by construction")
    }

    fn evaluate(&self, theta: &ParamVector) -> Result<(ObjectiveValues, GradientSet)> {
        let losses = self.centers.iter().map(|c| sq_dist(theta, c)).collect();
        let grads = self
            .centers
            .iter()
            .flat_map(|c| theta.iter().zip(c).map(|(t, c)| 2.0 * (t - c)))
            .collect();
        Ok((
            ObjectiveValues::new(losses)?,
            GradientSet::from_flat(grads, self.centers.len())?,
        ))
    }

    fn metrics(&self, theta: &ParamVector) -> Result<MetricVector> {
        MetricVector::new(self.metrics_at(theta))
    }
}

/// Two-objective Fonseca-Fleming problem in `n` dimensions.
///
/// Cold starts jitter around the origin, the middle of the Pareto set.
///
/// `f_1 = 1 - exp(-||x - c||^2)`, `f_2 = 1 - exp(-||x + c||^2)` with
/// `c = (1/sqrt(n), ..., 1/sqrt(n))`. Metrics are `1 - f_t`.
#[derive(Clone, Debug)]
pub struct FonsecaFleming {
    n: usize,
    init_radius: f64,
}

impl FonsecaFleming {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::contract("dimension must be at least 1"));
        }
        Ok(Self {
            n,
            init_radius: 0.05,
        })
    }

    pub fn with_init_radius(mut self, radius: f64) -> Self {
        self.init_radius = radius;
        self
    }

    fn offset(&self) -> f64 {
        1.0 / (self.n as f64).sqrt()
    }

    /// Metric pair at position `s in [-1, 1]` along the Pareto set
    /// (`s = 1` is the minimizer of `f_1`).
    pub fn frontier_point(&self, s: f64) -> [f64; 2] {
        let c = self.offset();
        let x = s * c;
        let n = self.n as f64;
        [(-n * (x - c).powi(2)).exp(), (-n * (x + c).powi(2)).exp()]
    }

    pub fn metrics_at(&self, x: &[f64]) -> [f64; 2] {
        let c = self.offset();
        let d1: f64 = x.iter().map(|v| (v - c).powi(2)).sum();
        let d2: f64 = x.iter().map(|v| (v + c).powi(2)).sum();
        [(-d1).exp(), (-d2).exp()]
    }
}

impl MultiObjectiveProblem for FonsecaFleming {
    fn num_objectives(&self) -> usize {
        2
    }

    fn num_params(&self) -> usize {
        self.n
    }

    fn initial_params(&self, seed: u64) -> ParamVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..self.n)
            .map(|_| rng.gen_range(-self.init_radius..=self.init_radius))
            .collect();
        ParamVector::new(values).expect("finite by construction")
    }

    fn evaluate(&self, theta: &ParamVector) -> Result<(ObjectiveValues, GradientSet)> {
        let c = self.offset();
        let [e1, e2] = self.metrics_at(theta);
        let mut grads = Vec::with_capacity(2 * self.n);
        grads.extend(theta.iter().map(|x| 2.0 * (x - c) * e1));
        grads.extend(theta.iter().map(|x| 2.0 * (x + c) * e2));
        Ok((
            ObjectiveValues::new(vec![1.0 - e1, 1.0 - e2])?,
            GradientSet::from_flat(grads, 2)?,
        ))
    }

    fn metrics(&self, theta: &ParamVector) -> Result<MetricVector> {
        MetricVector::new(self.metrics_at(theta).to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i] += h;
                m[i] -= h;
                (f(&p) - f(&m)) / (2.0 * h)
            })
            .collect()
    }

    fn check_gradients(problem: &dyn MultiObjectiveProblem, theta: &[f64]) {
        let p = ParamVector::new(theta.to_vec()).unwrap();
        let (_, g) = problem.evaluate(&p).unwrap();
        for t in 0..problem.num_objectives() {
            let fd = central_diff(
                |x| problem.evaluate(&ParamVector::new(x.to_vec()).unwrap()).unwrap().0[t],
                theta,
                1e-5,
            );
            for (a, n) in g.row(t).iter().zip(&fd) {
                assert!((a - n).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {n}");
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let q = QuadraticBowls::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, -1.0, 0.5], vec![3.0, 0.0, 0.0]])
            .unwrap();
        check_gradients(&q, &[0.3, -0.2, 1.7]);
        let ff = FonsecaFleming::new(3).unwrap();
        check_gradients(&ff, &[0.1, -0.4, 0.25]);
    }

    #[test]
    fn segment_distance() {
        let q = QuadraticBowls::pair(vec![0.0, 0.0], vec![2.0, 0.0]).unwrap();
        assert_eq!(q.distance_to_segment(&[1.0, 0.5]), 0.5);
        assert_eq!(q.distance_to_segment(&[3.0, 0.0]), 1.0);
        assert_eq!(q.distance_to_segment(&[-1.0, 0.0]), 1.0);
    }

    #[test]
    fn quadratic_metric_range_on_segment() {
        let q = QuadraticBowls::pair(vec![0.0, 0.0], vec![2.0, 0.0]).unwrap();
        assert_eq!(q.metrics_at(&[0.0, 0.0]), vec![1.0, 0.5]);
        assert_eq!(q.metrics_at(&[1.0, 0.0]), vec![0.8, 0.8]);
    }

    #[test]
    fn fonseca_fleming_frontier_is_concave() {
        let ff = FonsecaFleming::new(2).unwrap();
        let a = ff.frontier_point(1.0);
        let b = ff.frontier_point(-1.0);
        let mid = ff.frontier_point(0.0);
        // The middle of the frontier sits below the chord between its ends.
        assert!(mid[0] < 0.5 * (a[0] + b[0]));
        assert!(mid[1] < 0.5 * (a[1] + b[1]));
        assert!((a[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cold_start_is_seeded() {
        let ff = FonsecaFleming::new(2).unwrap();
        assert_eq!(ff.initial_params(3), ff.initial_params(3));
        assert_ne!(ff.initial_params(3), ff.initial_params(4));
    }
}
