//! Comparison baselines built on static loss scaling, plus frontier statistics.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mgda::{
    optimize_scalarized, DescentRule, MultiObjectiveProblem, Optimizer, TrainConfig, TrainTrace,
};
use crate::posterior::{explore_with, ExploreConfig, FrontierArchive};
use crate::prior::{solve_preferred_with, ConstraintSet, PriorConfig, PriorOutcome};
use crate::types::{MetricVector, SimplexWeights};

/// Cold-start gradient descent on `sum_t c_t L_t`.
pub fn static_scaling_optimize<P: MultiObjectiveProblem + ?Sized>(
    problem: &P,
    c: &SimplexWeights,
    train_cfg: &TrainConfig,
) -> Result<(MetricVector, TrainTrace)> {
    optimize_scalarized(problem, problem.initial_params(train_cfg.seed), c, train_cfg)
}

/// Frontier exploration where each round scalarizes the losses with the
/// normalized preference weights instead of running MGDA.
pub fn static_scaling_posterior<P: MultiObjectiveProblem + ?Sized>(
    problem: &P,
    cfg: &ExploreConfig,
    train_cfg: &TrainConfig,
) -> Result<FrontierArchive> {
    let mut optimizer = Optimizer::new(problem, train_cfg.clone(), DescentRule::StaticScaling)?;
    explore_with(&mut optimizer, cfg)
}

/// Constraint search with static scaling in place of MGDA.
pub fn static_scaling_prior<P: MultiObjectiveProblem + ?Sized>(
    problem: &P,
    constraints: &ConstraintSet,
    cfg: &PriorConfig,
    train_cfg: &TrainConfig,
) -> Result<PriorOutcome> {
    let mut optimizer = Optimizer::new(problem, train_cfg.clone(), DescentRule::StaticScaling)?;
    solve_preferred_with(&mut optimizer, constraints, cfg)
}

/// Every point of the simplex whose coordinates are multiples of
/// `1 / (resolution - 1)`, ordered lexicographically by coordinates.
pub fn simplex_grid(objectives: usize, resolution: usize) -> Result<Vec<SimplexWeights>> {
    if objectives == 0 {
        return Err(Error::contract("need at least one objective"));
    }
    if resolution < 2 {
        return Err(Error::contract("grid resolution must be at least 2"));
    }
    let steps = resolution - 1;
    let mut out = Vec::new();
    let mut parts = vec![0usize; objectives];
    compositions(steps, 0, &mut parts, &mut |p| {
        let c = p.iter().map(|&k| k as f64 / steps as f64).collect();
        out.push(SimplexWeights::new(c).expect("grid points lie on the simplex"));
    });
    Ok(out)
}

fn compositions(left: usize, idx: usize, parts: &mut [usize], emit: &mut dyn FnMut(&[usize])) {
    if idx == parts.len() - 1 {
        parts[idx] = left;
        emit(parts);
        return;
    }
    for k in 0..=left {
        parts[idx] = k;
        compositions(left - k, idx + 1, parts, emit);
    }
}

/// Static-scaling run at every simplex grid point, in parallel. Archive order
/// follows [`simplex_grid`].
pub fn grid_search<P: MultiObjectiveProblem + ?Sized>(
    problem: &P,
    resolution: usize,
    train_cfg: &TrainConfig,
) -> Result<FrontierArchive> {
    train_cfg.validate()?;
    let grid = simplex_grid(problem.num_objectives(), resolution)?;
    let results: Vec<Result<MetricVector>> = grid
        .par_iter()
        .map(|c| static_scaling_optimize(problem, c, train_cfg).map(|(m, _)| m))
        .collect();
    let mut archive = FrontierArchive::new();
    for (c, result) in grid.into_iter().zip(results) {
        match result {
            Ok(m) => archive.push(c.into_inner(), m),
            Err(source) => {
                return Err(Error::Exploration {
                    archive,
                    source: Box::new(source),
                })
            }
        }
    }
    Ok(archive)
}

/// Whether `p` maximizes `c p_0 + (1 - c) p_1` over `set` for some
/// `c in [0, 1]`, within `tol`. Points that pass lie on the upper-right
/// boundary of the convex hull of `set`; `set` should contain `p`.
pub fn is_supported(p: [f64; 2], set: &[[f64; 2]], tol: f64) -> bool {
    // slack(c) = min_q (c (p0 - q0) + (1 - c)(p1 - q1)) is concave and
    // piecewise linear, so its maximum sits at an end or where two pieces cross.
    let lines: Vec<(f64, f64)> = set
        .iter()
        .map(|q| {
            let at0 = p[1] - q[1];
            let at1 = p[0] - q[0];
            (at0, at1 - at0)
        })
        .collect();
    let slack = |c: f64| {
        lines
            .iter()
            .map(|(b, m)| b + m * c)
            .fold(f64::INFINITY, f64::min)
    };
    let mut candidates = vec![0.0, 1.0];
    for (i, (b1, m1)) in lines.iter().enumerate() {
        for (b2, m2) in &lines[i + 1..] {
            if m1 != m2 {
                let c = (b2 - b1) / (m1 - m2);
                if (0.0..=1.0).contains(&c) {
                    candidates.push(c);
                }
            }
        }
    }
    candidates.into_iter().any(|c| slack(c) >= -tol)
}

/// Metric pairs of a two-metric archive.
pub fn metric_pairs(archive: &FrontierArchive) -> Result<Vec<[f64; 2]>> {
    archive
        .entries()
        .iter()
        .map(|e| match *e.metrics {
            [a, b] => Ok([a, b]),
            _ => Err(Error::contract("hull tests need exactly two metrics")),
        })
        .collect()
}
