//! Multiple gradient descent training loop.
//!
//! Each step solves the min-norm problem over the per-objective gradients,
//! biases the resulting simplex weights by the caller's preference weights,
//! and moves the parameters against the combined direction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minnorm::{frank_wolfe_solve, FwConfig};
use crate::types::{
    GradientSet, MetricSense, MetricVector, ObjectiveValues, ParamVector, PreferenceWeights,
    SimplexWeights,
};

/// A differentiable multi-objective problem: a model plus its data.
///
/// Losses and gradients come from the training split; metrics from the
/// evaluation split. Implementations must be deterministic.
pub trait MultiObjectiveProblem: Sync {
    fn num_objectives(&self) -> usize;

    fn num_params(&self) -> usize;

    /// Initial parameters for a cold start.
    fn initial_params(&self, seed: u64) -> ParamVector;

    /// Training losses and their gradients, one row per objective.
    fn evaluate(&self, theta: &ParamVector) -> Result<(ObjectiveValues, GradientSet)>;

    /// Decision-maker metrics, one per objective, in the same order.
    fn metrics(&self, theta: &ParamVector) -> Result<MetricVector>;

    fn metric_senses(&self) -> Vec<MetricSense> {
        vec![MetricSense::Maximize; self.num_objectives()]
    }
}

impl<P: MultiObjectiveProblem + ?Sized> MultiObjectiveProblem for &P {
    fn num_objectives(&self) -> usize {
        (**self).num_objectives()
    }
    fn num_params(&self) -> usize {
        (**self).num_params()
    }
    fn initial_params(&self, seed: u64) -> ParamVector {
        (**self).initial_params(seed)
    }
    fn evaluate(&self, theta: &ParamVector) -> Result<(ObjectiveValues, GradientSet)> {
        (**self).evaluate(theta)
    }
    fn metrics(&self, theta: &ParamVector) -> Result<MetricVector> {
        (**self).metrics(theta)
    }
    fn metric_senses(&self) -> Vec<MetricSense> {
        (**self).metric_senses()
    }
}

/// How the per-step descent direction is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DescentRule {
    /// Min-norm simplex weights, reweighted by the preference weights.
    #[default]
    Mgda,
    /// Fixed convex coefficients: the normalized preference weights.
    StaticScaling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_steps: usize,
    /// Steps without a new best on any metric before stopping.
    pub patience: usize,
    /// Stop once the squared norm of the min-norm element falls to this value.
    pub stationarity_tol: f64,
    /// A metric counts as improved only if it beats its best by more than this.
    pub min_improvement: f64,
    /// Seed for cold-start initialization.
    pub seed: u64,
    /// Start each run from the previous run's final parameters.
    pub warm_start: bool,
    #[serde(skip)]
    pub fw: FwConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            max_steps: 2000,
            patience: 20,
            stationarity_tol: 1e-8,
            min_improvement: 0.0,
            seed: 0,
            warm_start: false,
            fw: FwConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::contract("learning_rate must be positive"));
        }
        if self.max_steps == 0 {
            return Err(Error::contract("max_steps must be at least 1"));
        }
        if self.patience == 0 {
            return Err(Error::contract("patience must be at least 1"));
        }
        if !(self.stationarity_tol >= 0.0) {
            return Err(Error::contract("stationarity_tol must be nonnegative"));
        }
        if !(self.min_improvement >= 0.0) {
            return Err(Error::contract("min_improvement must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Training losses at the parameters the step started from.
    pub losses: ObjectiveValues,
    /// Evaluation metrics at the same parameters.
    pub metrics: MetricVector,
    /// Weights actually applied to the gradients.
    pub alpha: SimplexWeights,
    /// Squared norm of the min-norm element (MGDA) or of the combined gradient (static).
    pub sq_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Stationary,
    MetricsStalled,
    StepLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<StepRecord>,
    pub final_params: ParamVector,
    pub stop: StopReason,
}

impl TrainTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// `alpha_t * w_t / sum_s alpha_s * w_s`. Uniform weights return `alpha` unchanged.
pub fn reweight_alpha(alpha: &SimplexWeights, w: &PreferenceWeights) -> Result<SimplexWeights> {
    if alpha.len() != w.len() {
        return Err(Error::contract("alpha and preference weights differ in length"));
    }
    if w.is_uniform() {
        return Ok(alpha.clone());
    }
    let products: Vec<f64> = alpha.iter().zip(w.iter()).map(|(a, w)| a * w).collect();
    let sum: f64 = products.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::contract("reweighted alpha has zero mass"));
    }
    Ok(SimplexWeights::from_raw(
        products.into_iter().map(|p| p / sum).collect(),
    ))
}

/// `theta - lr * sum_t alpha_t g_t`.
pub fn mgda_step(
    theta: &ParamVector,
    g: &GradientSet,
    alpha: &SimplexWeights,
    lr: f64,
) -> Result<ParamVector> {
    if theta.len() != g.dim() || alpha.len() != g.num_objectives() {
        return Err(Error::contract("parameter, gradient and alpha dimensions disagree"));
    }
    let direction = g.combine(alpha);
    let next: Vec<f64> = theta
        .iter()
        .zip(&direction)
        .map(|(t, d)| t - lr * d)
        .collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("parameter update"));
    }
    ParamVector::new(next)
}

/// Cold-start MGDA run with preference weights `w`.
pub fn optimize<P: MultiObjectiveProblem + ?Sized>(
    problem: &P,
    w: &PreferenceWeights,
    cfg: &TrainConfig,
) -> Result<(MetricVector, TrainTrace)> {
    let theta0 = problem.initial_params(cfg.seed);
    optimize_from(problem, theta0, w, cfg, DescentRule::Mgda)
}

/// Runs the descent loop from `theta0` under the given rule.
///
/// On divergence the returned [`Error::Diverged`] carries the trace up to the
/// failing step.
pub fn optimize_from<P: MultiObjectiveProblem + ?Sized>(
    problem: &P,
    theta0: ParamVector,
    w: &PreferenceWeights,
    cfg: &TrainConfig,
    rule: DescentRule,
) -> Result<(MetricVector, TrainTrace)> {
    let t = problem.num_objectives();
    if w.len() != t {
        return Err(Error::contract(format!(
            "{} preference weights for {t} objectives",
            w.len()
        )));
    }
    let w = w.normalized();
    let direction = match rule {
        DescentRule::Mgda => Direction::MinNorm(w),
        DescentRule::StaticScaling => Direction::Fixed(SimplexWeights::new(w.into_inner())?),
    };
    descend(problem, theta0, cfg, &direction)
}

/// Plain gradient descent on `sum_t c_t L_t`, with the same stopping rules as
/// [`optimize_from`]. Unlike preference weights, `c` may contain zeros.
pub fn optimize_scalarized<P: MultiObjectiveProblem + ?Sized>(
    problem: &P,
    theta0: ParamVector,
    c: &SimplexWeights,
    cfg: &TrainConfig,
) -> Result<(MetricVector, TrainTrace)> {
    if c.len() != problem.num_objectives() {
        return Err(Error::contract("one coefficient per objective is required"));
    }
    descend(problem, theta0, cfg, &Direction::Fixed(c.clone()))
}

enum Direction {
    MinNorm(PreferenceWeights),
    Fixed(SimplexWeights),
}

fn descend<P: MultiObjectiveProblem + ?Sized>(
    problem: &P,
    theta0: ParamVector,
    cfg: &TrainConfig,
    direction: &Direction,
) -> Result<(MetricVector, TrainTrace)> {
    cfg.validate()?;
    if theta0.len() != problem.num_params() {
        return Err(Error::contract("initial parameters have the wrong length"));
    }
    let senses = problem.metric_senses();

    let mut theta = theta0;
    let mut records: Vec<StepRecord> = Vec::new();
    let mut best: Option<Vec<f64>> = None;
    let mut stalled = 0usize;
    let mut stop = StopReason::StepLimit;

    let diverged = |step: usize, records: &[StepRecord], theta: &ParamVector| Error::Diverged {
        step,
        trace: Box::new(TrainTrace {
            records: records.to_vec(),
            final_params: theta.clone(),
            stop: StopReason::StepLimit,
        }),
    };

    for step in 0..cfg.max_steps {
        let (losses, grads) = match problem.evaluate(&theta) {
            Ok(v) => v,
            Err(Error::NonFinite(_)) => return Err(diverged(step, &records, &theta)),
            Err(e) => return Err(e),
        };
        let metrics = match problem.metrics(&theta) {
            Ok(m) => m,
            Err(Error::NonFinite(_)) => return Err(diverged(step, &records, &theta)),
            Err(e) => return Err(e),
        };

        let (alpha, sq_norm) = match direction {
            Direction::MinNorm(w) => {
                let sol = frank_wolfe_solve(&grads, &cfg.fw)?;
                (reweight_alpha(&sol.alpha, w)?, sol.sq_norm)
            }
            Direction::Fixed(c) => {
                let d = grads.combine(c);
                (c.clone(), d.iter().map(|x| x * x).sum())
            }
        };

        let improved = match &mut best {
            None => {
                best = Some(metrics.to_vec());
                true
            }
            Some(best) => {
                let mut any = false;
                for ((b, &m), sense) in best.iter_mut().zip(metrics.iter()).zip(&senses) {
                    if sense.improves(m, *b, cfg.min_improvement) {
                        *b = m;
                        any = true;
                    }
                }
                any
            }
        };
        stalled = if improved { 0 } else { stalled + 1 };

        records.push(StepRecord {
            step,
            losses,
            metrics,
            alpha: alpha.clone(),
            sq_norm,
        });

        if sq_norm <= cfg.stationarity_tol {
            stop = StopReason::Stationary;
            break;
        }
        if stalled >= cfg.patience {
            stop = StopReason::MetricsStalled;
            break;
        }

        theta = match mgda_step(&theta, &grads, &alpha, cfg.learning_rate) {
            Ok(next) => next,
            Err(Error::NonFinite(_)) => return Err(diverged(step + 1, &records, &theta)),
            Err(e) => return Err(e),
        };
    }

    let final_metrics = if stop == StopReason::StepLimit {
        match problem.metrics(&theta) {
            Ok(m) => m,
            Err(Error::NonFinite(_)) => return Err(diverged(cfg.max_steps, &records, &theta)),
            Err(e) => return Err(e),
        }
    } else {
        records
            .last()
            .map(|r| r.metrics.clone())
            .expect("at least one step was recorded")
    };

    Ok((
        final_metrics,
        TrainTrace {
            records,
            final_params: theta,
            stop,
        },
    ))
}

/// Repeated optimize calls sharing a problem, config and descent rule.
///
/// Handles the cold/warm start choice so the outer search loops don't have to.
pub struct Optimizer<'a, P: MultiObjectiveProblem + ?Sized> {
    problem: &'a P,
    cfg: TrainConfig,
    rule: DescentRule,
    last_params: Option<ParamVector>,
    runs: usize,
}

impl<'a, P: MultiObjectiveProblem + ?Sized> Optimizer<'a, P> {
    pub fn new(problem: &'a P, cfg: TrainConfig, rule: DescentRule) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            problem,
            cfg,
            rule,
            last_params: None,
            runs: 0,
        })
    }

    pub fn problem(&self) -> &'a P {
        self.problem
    }

    pub fn rule(&self) -> DescentRule {
        self.rule
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    /// Number of completed optimize runs.
    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn run(&mut self, w: &PreferenceWeights) -> Result<(MetricVector, TrainTrace)> {
        let theta0 = self.start();
        let (m, trace) = optimize_from(self.problem, theta0, w, &self.cfg, self.rule)?;
        Ok(self.finish(m, trace))
    }

    /// Static scalarization with coefficients `c`, regardless of the rule.
    pub fn run_scalarized(&mut self, c: &SimplexWeights) -> Result<(MetricVector, TrainTrace)> {
        let theta0 = self.start();
        let (m, trace) = optimize_scalarized(self.problem, theta0, c, &self.cfg)?;
        Ok(self.finish(m, trace))
    }

    fn start(&self) -> ParamVector {
        match (&self.last_params, self.cfg.warm_start) {
            (Some(p), true) => p.clone(),
            _ => self.problem.initial_params(self.cfg.seed),
        }
    }

    fn finish(&mut self, m: MetricVector, trace: TrainTrace) -> (MetricVector, TrainTrace) {
        self.last_params = Some(trace.final_params.clone());
        self.runs += 1;
        (m, trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toys::QuadraticBowls;

    fn sw(a: &[f64]) -> SimplexWeights {
        SimplexWeights::new(a.to_vec()).unwrap()
    }

    fn pw(a: &[f64]) -> PreferenceWeights {
        PreferenceWeights::new(a.to_vec()).unwrap()
    }

    #[test]
    fn reweight_examples() {
        assert_eq!(
            reweight_alpha(&sw(&[0.25, 0.75]), &pw(&[1.0, 1.0])).unwrap(),
            sw(&[0.25, 0.75])
        );
        let r = reweight_alpha(&sw(&[0.5, 0.5]), &pw(&[0.8, 0.2])).unwrap();
        assert!((r[0] - 0.8).abs() < 1e-15 && (r[1] - 0.2).abs() < 1e-15);
        assert_eq!(
            reweight_alpha(&sw(&[1.0, 0.0]), &pw(&[0.1, 10.0])).unwrap(),
            sw(&[1.0, 0.0])
        );
    }

    #[test]
    fn step_examples() {
        let theta = ParamVector::new(vec![1.0, 1.0]).unwrap();
        let g = GradientSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let next = mgda_step(&theta, &g, &sw(&[0.5, 0.5]), 0.1).unwrap();
        assert!((next[0] - 0.95).abs() < 1e-15 && (next[1] - 0.95).abs() < 1e-15);

        let cancel = GradientSet::new(vec![vec![1.0, -2.0], vec![-1.0, 2.0]]).unwrap();
        assert_eq!(mgda_step(&theta, &cancel, &sw(&[0.5, 0.5]), 0.3).unwrap(), theta);

        let single = GradientSet::new(vec![vec![2.0]]).unwrap();
        let next = mgda_step(&ParamVector::new(vec![0.0]).unwrap(), &single, &sw(&[1.0]), 0.5)
            .unwrap();
        assert_eq!(&*next, &[-1.0]);
    }

    #[test]
    fn step_overflow_is_reported() {
        let theta = ParamVector::new(vec![f64::MAX]).unwrap();
        let g = GradientSet::new(vec![vec![-f64::MAX]]).unwrap();
        assert!(matches!(
            mgda_step(&theta, &g, &sw(&[1.0]), 10.0),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn uniform_preferences_land_on_segment() {
        let toy = QuadraticBowls::pair(vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]).unwrap();
        let (_, trace) = optimize(&toy, &PreferenceWeights::uniform(2), &TrainConfig::default())
            .unwrap();
        assert!(toy.distance_to_segment(&trace.final_params) < 1e-2);
        assert_eq!(trace.stop, StopReason::Stationary);
    }

    #[test]
    fn strong_preference_pulls_toward_favoured_minimizer() {
        let a = vec![0.0, 0.0, 0.0];
        let toy = QuadraticBowls::pair(a.clone(), vec![1.0, 0.0, 0.0]).unwrap();
        let cfg = TrainConfig::default();
        let (_, uni) = optimize(&toy, &PreferenceWeights::uniform(2), &cfg).unwrap();
        let (_, fav) = optimize(&toy, &pw(&[1000.0, 1.0]), &cfg).unwrap();
        let dist = |p: &[f64]| p.iter().zip(&a).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!(dist(&fav.final_params) < 0.1);
        assert!(dist(&fav.final_params) < dist(&uni.final_params));
    }

    #[test]
    fn single_objective_matches_gradient_descent() {
        let toy = QuadraticBowls::new(vec![vec![0.5, -1.0]]).unwrap();
        let cfg = TrainConfig {
            max_steps: 50,
            stationarity_tol: 0.0,
            patience: 1000,
            ..TrainConfig::default()
        };
        let (_, trace) = optimize(&toy, &PreferenceWeights::uniform(1), &cfg).unwrap();
        let mut theta = toy.initial_params(cfg.seed).into_inner();
        for record in &trace.records {
            let (losses, g) = toy.evaluate(&ParamVector::new(theta.clone()).unwrap()).unwrap();
            assert_eq!(losses, record.losses);
            for (x, d) in theta.iter_mut().zip(g.row(0)) {
                *x -= cfg.learning_rate * d;
            }
        }
        assert_eq!(&*trace.final_params, theta.as_slice());
        assert!(trace.records.last().unwrap().losses[0] <= trace.records[0].losses[0]);
    }

    #[test]
    fn trace_respects_step_limit() {
        let toy = QuadraticBowls::pair(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let cfg = TrainConfig {
            max_steps: 7,
            stationarity_tol: 0.0,
            ..TrainConfig::default()
        };
        let (_, trace) = optimize(&toy, &PreferenceWeights::uniform(2), &cfg).unwrap();
        assert!(trace.len() <= 7);
    }

    #[test]
    fn divergence_carries_trace() {
        let toy = QuadraticBowls::pair(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e154,
            stationarity_tol: 0.0,
            ..TrainConfig::default()
        };
        match optimize(&toy, &PreferenceWeights::uniform(2), &cfg) {
            Err(Error::Diverged { step, trace }) => {
                // Every step before the non-finite one is recorded.
                assert_eq!(trace.len(), step);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let toy = QuadraticBowls::pair(vec![0.0], vec![1.0]).unwrap();
        for cfg in [
            TrainConfig {
                learning_rate: 0.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                max_steps: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                patience: 0,
                ..TrainConfig::default()
            },
        ] {
            assert!(optimize(&toy, &PreferenceWeights::uniform(2), &cfg).is_err());
        }
    }
}
