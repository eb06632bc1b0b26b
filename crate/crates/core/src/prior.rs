//! A-priori preference solver.
//!
//! The decision maker states hard per-metric constraints. The solver trains
//! once with uniform weights, then walks the feasible subsets of the
//! constraint set in priority order, nudging one preference weight per round
//! until the trained metrics land inside the subset.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mgda::{DescentRule, MultiObjectiveProblem, Optimizer, TrainConfig};
use crate::types::{MetricVector, PreferenceWeights};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Condition {
    Ge { a: f64 },
    Le { b: f64 },
    Eq { c: f64 },
    /// `lo <= M <= hi`.
    Between { lo: f64, hi: f64 },
}

/// A condition on a single metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomicCondition {
    pub metric: usize,
    pub condition: Condition,
}

impl AtomicCondition {
    pub fn new(metric: usize, condition: Condition) -> Result<Self> {
        let finite = match condition {
            Condition::Ge { a: v } | Condition::Le { b: v } | Condition::Eq { c: v } => {
                v.is_finite()
            }
            Condition::Between { lo, hi } => {
                if lo > hi {
                    return Err(Error::InvalidConstraint(format!(
                        "empty range [{lo}, {hi}] on metric {}",
                        metric + 1
                    )));
                }
                lo.is_finite() && hi.is_finite()
            }
        };
        if !finite {
            return Err(Error::InvalidConstraint("bounds must be finite".into()));
        }
        Ok(Self { metric, condition })
    }

    pub fn ge(metric: usize, a: f64) -> Result<Self> {
        Self::new(metric, Condition::Ge { a })
    }

    pub fn le(metric: usize, b: f64) -> Result<Self> {
        Self::new(metric, Condition::Le { b })
    }

    pub fn eq(metric: usize, c: f64) -> Result<Self> {
        Self::new(metric, Condition::Eq { c })
    }

    pub fn between(metric: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(metric, Condition::Between { lo, hi })
    }

    pub fn is_inequality(&self) -> bool {
        !matches!(self.condition, Condition::Eq { .. })
    }

    pub fn holds(&self, value: f64, eq_tol: f64) -> bool {
        match self.condition {
            Condition::Ge { a } => value >= a,
            Condition::Le { b } => value <= b,
            Condition::Eq { c } => (value - c).abs() <= eq_tol,
            Condition::Between { lo, hi } => lo <= value && value <= hi,
        }
    }

    /// Boundary value of the condition; for a range, the endpoint nearer `current`.
    pub fn extreme(&self, current: f64) -> f64 {
        match self.condition {
            Condition::Ge { a } => a,
            Condition::Le { b } => b,
            Condition::Eq { c } => c,
            Condition::Between { lo, hi } => {
                if (current - lo).abs() <= (current - hi).abs() {
                    lo
                } else {
                    hi
                }
            }
        }
    }
}

impl fmt::Display for AtomicCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.metric + 1;
        match self.condition {
            Condition::Ge { a } => write!(f, "m{m}>={a}"),
            Condition::Le { b } => write!(f, "m{m}<={b}"),
            Condition::Eq { c } => write!(f, "m{m}=={c}"),
            Condition::Between { lo, hi } => write!(f, "m{m}in[{lo},{hi}]"),
        }
    }
}

/// A conjunction over metrics of per-metric disjunctions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    clauses: Vec<Vec<AtomicCondition>>,
}

/// Gaps closer than this count as ties.
const TIE_TOL: f64 = 1e-12;

/// Named metrics accepted by the parser, 0-based.
pub const METRIC_ALIASES: [(&str, usize); 2] = [("acc", 0), ("sl", 1)];

impl ConstraintSet {
    /// Each clause is a disjunction over one metric; clauses name distinct metrics.
    pub fn new(clauses: Vec<Vec<AtomicCondition>>) -> Result<Self> {
        if clauses.is_empty() {
            return Err(Error::InvalidConstraint("no constraints given".into()));
        }
        let mut seen = Vec::new();
        for clause in &clauses {
            let first = clause
                .first()
                .ok_or_else(|| Error::InvalidConstraint("empty disjunction".into()))?;
            if clause.iter().any(|c| c.metric != first.metric) {
                return Err(Error::InvalidConstraint(format!(
                    "a disjunction may only mention one metric (m{})",
                    first.metric + 1
                )));
            }
            if seen.contains(&first.metric) {
                return Err(Error::InvalidConstraint(format!(
                    "metric m{} is constrained twice",
                    first.metric + 1
                )));
            }
            seen.push(first.metric);
        }
        Ok(Self { clauses })
    }

    pub fn clauses(&self) -> &[Vec<AtomicCondition>] {
        &self.clauses
    }

    /// Metrics touched by the constraints, in clause order.
    pub fn metrics(&self) -> Vec<usize> {
        self.clauses.iter().map(|c| c[0].metric).collect()
    }

    /// True when every clause has at least one holding alternative.
    pub fn satisfied_by(&self, m: &[f64], eq_tol: f64) -> bool {
        self.clauses
            .iter()
            .all(|clause| clause.iter().any(|c| c.holds(m[c.metric], eq_tol)))
    }

    /// Parses whitespace- or `;`-separated tokens such as `sl>=0.95`,
    /// `m1<=0.3|m1==0.5` or `m2in[0.6,0.8]`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut clauses = Vec::new();
        for (i, token) in text
            .split(|c: char| c.is_whitespace() || c == ';')
            .filter(|t| !t.is_empty())
            .enumerate()
        {
            let position = i + 1;
            let clause = token
                .split('|')
                .map(|atom| parse_atom(atom, token, position))
                .collect::<Result<Vec<_>>>()?;
            clauses.push(clause);
        }
        if clauses.is_empty() {
            return Err(Error::ConstraintParse {
                token: text.to_string(),
                position: 0,
                reason: "no constraint tokens".into(),
            });
        }
        Self::new(clauses)
    }
}

impl FromStr for ConstraintSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

fn parse_atom(atom: &str, token: &str, position: usize) -> Result<AtomicCondition> {
    let fail = |reason: String| Error::ConstraintParse {
        token: token.to_string(),
        position,
        reason,
    };
    let atom = atom.trim();
    let name_len = atom
        .find(|c: char| !c.is_ascii_alphanumeric() && c != '_')
        .unwrap_or(atom.len());
    let (name, rest) = atom.split_at(name_len);
    let (name, rest) = match name.strip_suffix("in") {
        Some(stem) if rest.starts_with('[') && !stem.is_empty() => (stem, &atom[stem.len()..]),
        _ => (name, rest),
    };
    let metric = metric_index(name).ok_or_else(|| {
        fail(format!("unknown metric `{name}`; use m<i> (1-based), acc or sl"))
    })?;
    let number = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| fail(format!("`{s}` is not a number")))
    };
    let rest = rest.trim_start();
    let condition = if let Some(v) = rest.strip_prefix(">=") {
        Condition::Ge { a: number(v)? }
    } else if let Some(v) = rest.strip_prefix("<=") {
        Condition::Le { b: number(v)? }
    } else if let Some(v) = rest.strip_prefix("==") {
        Condition::Eq { c: number(v)? }
    } else if let Some(range) = rest.strip_prefix("in") {
        let inner = range
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| fail("range must look like in[lo,hi]".into()))?;
        let (lo, hi) = inner
            .split_once(',')
            .ok_or_else(|| fail("range must look like in[lo,hi]".into()))?;
        let (lo, hi) = (number(lo)?, number(hi)?);
        if lo > hi {
            return Err(fail(format!("empty range [{lo}, {hi}]")));
        }
        Condition::Between { lo, hi }
    } else {
        return Err(fail(format!(
            "expected >=, <=, == or in[lo,hi] after `{name}`, found `{rest}`"
        )));
    };
    AtomicCondition::new(metric, condition).map_err(|e| fail(e.to_string()))
}

fn metric_index(name: &str) -> Option<usize> {
    let lower = name.to_ascii_lowercase();
    if let Some((_, i)) = METRIC_ALIASES.iter().find(|(a, _)| *a == lower) {
        return Some(*i);
    }
    let digits = lower.strip_prefix('m')?;
    match digits.parse::<usize>() {
        Ok(i) if i >= 1 => Some(i - 1),
        _ => None,
    }
}

/// One alternative chosen from every clause.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSubset {
    pub conditions: Vec<AtomicCondition>,
    /// Index of the chosen alternative within each clause.
    pub choice: Vec<usize>,
    /// Boundary point over the constrained metrics, in condition order.
    pub extreme_point: Vec<f64>,
}

impl FeasibleSubset {
    pub fn inequality_count(&self) -> usize {
        self.conditions.iter().filter(|c| c.is_inequality()).count()
    }

    /// Extreme point recomputed against `m`; only ranges can move.
    pub fn extreme_for(&self, m: &[f64]) -> Vec<f64> {
        self.conditions.iter().map(|c| c.extreme(m[c.metric])).collect()
    }
}

/// Distance between `m` and the subset's extreme point over constrained metrics.
pub fn euclidean_gap(m: &[f64], s: &FeasibleSubset) -> f64 {
    s.conditions
        .iter()
        .zip(&s.extreme_point)
        .map(|(c, p)| (m[c.metric] - p).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn satisfies(m: &[f64], s: &FeasibleSubset, eq_tol: f64) -> bool {
    s.conditions.iter().all(|c| c.holds(m[c.metric], eq_tol))
}

/// Cartesian product of the clauses, most inequalities first, then nearest
/// to `m`, then by alternative indices.
pub fn enumerate_feasible_subsets(c: &ConstraintSet, m: &[f64]) -> Result<Vec<FeasibleSubset>> {
    if let Some(bad) = c.metrics().into_iter().find(|&t| t >= m.len()) {
        return Err(Error::InvalidConstraint(format!(
            "metric m{} does not exist; there are {} metrics",
            bad + 1,
            m.len()
        )));
    }
    let mut choices: Vec<Vec<usize>> = vec![Vec::new()];
    for clause in c.clauses() {
        choices = choices
            .into_iter()
            .flat_map(|prefix| {
                (0..clause.len()).map(move |i| {
                    let mut next = prefix.clone();
                    next.push(i);
                    next
                })
            })
            .collect();
    }
    let mut subsets: Vec<(FeasibleSubset, f64)> = choices
        .into_iter()
        .map(|choice| {
            let conditions: Vec<AtomicCondition> = choice
                .iter()
                .zip(c.clauses())
                .map(|(&i, clause)| clause[i])
                .collect();
            let extreme_point = conditions.iter().map(|a| a.extreme(m[a.metric])).collect();
            let s = FeasibleSubset {
                conditions,
                choice,
                extreme_point,
            };
            let gap = euclidean_gap(m, &s);
            (s, gap)
        })
        .collect();
    subsets.sort_by(|(a, ga), (b, gb)| {
        b.inequality_count()
            .cmp(&a.inequality_count())
            .then(ga.total_cmp(gb))
            .then_with(|| a.choice.cmp(&b.choice))
    });
    Ok(subsets.into_iter().map(|(s, _)| s).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    /// Factor (> 1) applied to one weight per round.
    pub pace: f64,
    pub max_rounds_per_subset: usize,
    pub eq_tol: f64,
    /// `coupling[t]` is the objective whose weight steers metric `t`.
    /// Empty means metric `t` steers objective `t`.
    pub coupling: Vec<usize>,
    /// Weights are clamped into this range after every update.
    pub weight_range: (f64, f64),
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            pace: 1.25,
            max_rounds_per_subset: 25,
            eq_tol: 1e-3,
            coupling: Vec::new(),
            weight_range: (1e-6, 1e6),
        }
    }
}

impl PriorConfig {
    pub fn validate(&self, objectives: usize) -> Result<()> {
        if !(self.pace > 1.0) || !self.pace.is_finite() {
            return Err(Error::contract("pace must be greater than 1"));
        }
        if !(self.eq_tol > 0.0) {
            return Err(Error::contract("eq_tol must be positive"));
        }
        if self.max_rounds_per_subset == 0 {
            return Err(Error::contract("round limit must be at least 1"));
        }
        if self.coupling.iter().any(|&o| o >= objectives) {
            return Err(Error::contract("coupling names a missing objective"));
        }
        let (lo, hi) = self.weight_range;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::contract("weight range must be positive and ordered"));
        }
        Ok(())
    }

    fn objective_for(&self, metric: usize) -> usize {
        self.coupling.get(metric).copied().unwrap_or(metric)
    }
}

/// Scales the weight of the objective coupled to the worst failing metric:
/// divided by `pace` when the metric is above its extreme point, multiplied
/// otherwise.
pub fn reweighting2(
    p: &[f64],
    m: &[f64],
    w: &PreferenceWeights,
    s: &FeasibleSubset,
    cfg: &PriorConfig,
) -> Result<PreferenceWeights> {
    if p.len() != s.conditions.len() {
        return Err(Error::contract("extreme point does not match the subset"));
    }
    let mut t_hat: Option<(usize, f64)> = None;
    for (c, &pt) in s.conditions.iter().zip(p) {
        if c.holds(m[c.metric], cfg.eq_tol) {
            continue;
        }
        let gap = (pt - m[c.metric]).abs();
        let better = match t_hat {
            None => true,
            Some((prev, g)) => gap > g + TIE_TOL || ((gap - g).abs() <= TIE_TOL && c.metric < prev),
        };
        if better {
            t_hat = Some((c.metric, gap));
        }
    }
    let (metric, _) =
        t_hat.ok_or_else(|| Error::contract("reweighting called on a satisfied subset"))?;
    let target = s
        .conditions
        .iter()
        .zip(p)
        .find(|(c, _)| c.metric == metric)
        .map(|(_, &pt)| pt)
        .expect("metric comes from the subset");

    let objective = cfg.objective_for(metric);
    if objective >= w.len() {
        return Err(Error::contract("metric has no coupled objective"));
    }
    let mut next = w.to_vec();
    if m[metric] > target {
        next[objective] /= cfg.pace;
    } else {
        next[objective] *= cfg.pace;
    }
    let (lo, hi) = cfg.weight_range;
    next[objective] = next[objective].clamp(lo, hi);
    PreferenceWeights::new(next)
}

/// Result of [`solve_preferred`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorOutcome {
    pub metrics: MetricVector,
    pub weights: PreferenceWeights,
    pub satisfied: bool,
    /// Priority index of the subset that was satisfied, if any.
    pub subset: Option<usize>,
    /// Total optimize runs, including the initial uniform one.
    pub rounds: usize,
}

/// MGDA a-priori search.
pub fn solve_preferred<P: MultiObjectiveProblem + ?Sized>(
    problem: &P,
    constraints: &ConstraintSet,
    cfg: &PriorConfig,
    train_cfg: &TrainConfig,
) -> Result<PriorOutcome> {
    let mut optimizer = Optimizer::new(problem, train_cfg.clone(), DescentRule::Mgda)?;
    solve_preferred_with(&mut optimizer, constraints, cfg)
}

/// The search loop over any optimizer; the static-scaling baseline reuses it.
///
/// Every subset starts again from uniform weights and the uniform-weight metrics.
pub fn solve_preferred_with<P: MultiObjectiveProblem + ?Sized>(
    optimizer: &mut Optimizer<'_, P>,
    constraints: &ConstraintSet,
    cfg: &PriorConfig,
) -> Result<PriorOutcome> {
    let t = optimizer.problem().num_objectives();
    cfg.validate(t)?;
    let uniform = PreferenceWeights::uniform(t);
    let (m0, _) = optimizer.run(&uniform)?;
    let subsets = enumerate_feasible_subsets(constraints, &m0)?;
    let mut rounds = 1;

    if constraints.satisfied_by(&m0, cfg.eq_tol) {
        let subset = subsets.iter().position(|s| satisfies(&m0, s, cfg.eq_tol));
        return Ok(PriorOutcome {
            metrics: m0,
            weights: uniform,
            satisfied: true,
            subset,
            rounds,
        });
    }

    let mut last = (m0.clone(), uniform.clone());
    for (index, subset) in subsets.iter().enumerate() {
        let mut w = uniform.clone();
        let mut m = m0.clone();
        for _ in 0..cfg.max_rounds_per_subset {
            let p = subset.extreme_for(&m);
            w = reweighting2(&p, &m, &w, subset, cfg)?;
            m = optimizer.run(&w)?.0;
            rounds += 1;
            if satisfies(&m, subset, cfg.eq_tol) {
                return Ok(PriorOutcome {
                    metrics: m,
                    weights: w,
                    satisfied: true,
                    subset: Some(index),
                    rounds,
                });
            }
        }
        last = (m, w);
    }
    Ok(PriorOutcome {
        metrics: last.0,
        weights: last.1,
        satisfied: false,
        subset: None,
        rounds,
    })
}
