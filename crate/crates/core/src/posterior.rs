//! A-posteriori frontier exploration.
//!
//! Repeatedly trains with adjusted preference weights, memorizing every
//! `(weights, metrics)` pair, until the archived metric points cover each
//! metric's knowledge range to the requested granularity.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mgda::{DescentRule, MultiObjectiveProblem, Optimizer, TrainConfig};
use crate::types::{MetricBounds, MetricVector, PreferenceWeights};

/// Points closer than this are treated as one when measuring gaps.
pub const DEDUP_TOL: f64 = 1e-9;

/// Granularities or gaps closer than this count as ties.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    /// Preference weights, or scalarization coefficients for grid search.
    pub weights: Vec<f64>,
    pub metrics: MetricVector,
}

/// Memorized `(W_k, M_k)` pairs in production order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrontierArchive {
    entries: Vec<ArchiveEntry>,
}

impl FrontierArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, weights: impl Into<Vec<f64>>, metrics: MetricVector) {
        self.entries.push(ArchiveEntry {
            weights: weights.into(),
            metrics,
        });
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Raw values of metric `t` across entries.
    pub fn metric_values(&self, t: usize) -> Vec<f64> {
        self.entries.iter().map(|e| e.metrics[t]).collect()
    }

    fn num_objectives(&self) -> Option<usize> {
        self.entries.first().map(|e| e.metrics.len())
    }

    /// CSV with header `round,w_1..w_T,m_1..m_T`; rounds count from 1.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let t = self.num_objectives().unwrap_or(0);
        let mut header = vec!["round".to_string()];
        header.extend((1..=t).map(|i| format!("w_{i}")));
        header.extend((1..=t).map(|i| format!("m_{i}")));
        out.write_record(&header)?;
        for (k, e) in self.entries.iter().enumerate() {
            let mut row = vec![(k + 1).to_string()];
            row.extend(e.weights.iter().map(|v| v.to_string()));
            row.extend(e.metrics.iter().map(|v| v.to_string()));
            out.write_record(&row)?;
        }
        out.flush().map_err(|e| Error::io("<archive>", e))?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(reader: R, source: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.clone();
        let cols = header.len();
        if cols < 3 || (cols - 1) % 2 != 0 || &header[0] != "round" {
            return Err(Error::Parse {
                path: source.to_path_buf(),
                line: 1,
                reason: "expected header round,w_1..w_T,m_1..m_T".into(),
            });
        }
        let t = (cols - 1) / 2;
        let mut archive = Self::new();
        for (i, record) in rdr.records().enumerate() {
            let line = i as u64 + 2;
            let record = record?;
            let parse_err = |reason: String| Error::Parse {
                path: source.to_path_buf(),
                line,
                reason,
            };
            let values: Vec<f64> = record
                .iter()
                .skip(1)
                .map(|f| f.trim().parse::<f64>().map_err(|e| parse_err(format!("`{f}`: {e}"))))
                .collect::<Result<_>>()?;
            let weights = values[..t].to_vec();
            if weights.iter().any(|&w| !(w >= 0.0)) {
                return Err(parse_err("weights must be non-negative".into()));
            }
            let metrics =
                MetricVector::new(values[t..].to_vec()).map_err(|e| parse_err(e.to_string()))?;
            archive.push(weights, metrics);
        }
        Ok(archive)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), path)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExploreConfig {
    pub bounds: MetricBounds,
    /// Target granularity per metric.
    pub granularity_target: Vec<f64>,
    /// Factor (> 1) applied to a weight when probing toward a bound.
    pub pace: f64,
    pub max_rounds: usize,
}

impl ExploreConfig {
    pub fn validate(&self) -> Result<()> {
        if self.granularity_target.len() != self.bounds.len() {
            return Err(Error::contract("granularity target and bounds differ in length"));
        }
        if self.granularity_target.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::contract("granularity targets must be positive"));
        }
        if !(self.pace > 1.0) || !self.pace.is_finite() {
            return Err(Error::contract("pace must be greater than 1"));
        }
        if self.max_rounds == 0 {
            return Err(Error::contract("max_rounds must be at least 1"));
        }
        Ok(())
    }
}

/// One position in the sorted sequence `{lo} ∪ points ∪ {hi}`.
///
/// `owner` is the archive entry whose metric sits here, `None` for a bare bound.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Node {
    value: f64,
    owner: Option<usize>,
}

/// Sorted, deduplicated sequence for one metric, with bounds included.
fn sorted_nodes(points: &[f64], lo: f64, hi: f64) -> Vec<Node> {
    let mut raw: Vec<Node> = Vec::with_capacity(points.len() + 2);
    raw.push(Node {
        value: lo,
        owner: None,
    });
    raw.extend(points.iter().enumerate().map(|(i, &p)| Node {
        value: p.clamp(lo, hi),
        owner: Some(i),
    }));
    raw.push(Node {
        value: hi,
        owner: None,
    });
    raw.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then_with(|| match (a.owner, b.owner) {
                (None, None) => std::cmp::Ordering::Equal,
                (None, Some(_)) => std::cmp::Ordering::Less,
                (Some(_), None) => std::cmp::Ordering::Greater,
                (Some(x), Some(y)) => x.cmp(&y),
            })
    });

    let mut nodes: Vec<Node> = Vec::with_capacity(raw.len());
    for node in raw {
        match nodes.last_mut() {
            Some(last) if node.value - last.value <= DEDUP_TOL => {
                // A bound keeps its exact value; the lowest-index entry owns the group.
                if node.owner.is_none() {
                    last.value = node.value;
                }
                if last.owner.is_none() {
                    last.owner = node.owner;
                }
            }
            _ => nodes.push(node),
        }
    }
    nodes
}

/// Average gap between adjacent elements of `{lo} ∪ points ∪ {hi}`, after
/// clipping points into `[lo, hi]` and collapsing duplicates.
pub fn granularity(points: &[f64], lo: f64, hi: f64) -> f64 {
    assert!(lo < hi, "granularity needs lo < hi");
    let nodes = sorted_nodes(points, lo, hi);
    if nodes.len() < 2 {
        return 0.0;
    }
    (nodes[nodes.len() - 1].value - nodes[0].value) / (nodes.len() - 1) as f64
}

/// Granularity of each metric over the archive.
pub fn achieved_granularity(archive: &FrontierArchive, bounds: &MetricBounds) -> Vec<f64> {
    (0..bounds.len())
        .map(|t| granularity(&archive.metric_values(t), bounds.lo()[t], bounds.hi()[t]))
        .collect()
}

/// `max - min` of each metric over the archive, clipped to the bounds.
pub fn coverage_span(archive: &FrontierArchive, bounds: &MetricBounds) -> Vec<f64> {
    (0..bounds.len())
        .map(|t| {
            let clipped: Vec<f64> = archive
                .metric_values(t)
                .into_iter()
                .map(|v| bounds.clip(t, v))
                .collect();
            let max = clipped.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = clipped.iter().cloned().fold(f64::INFINITY, f64::min);
            if clipped.is_empty() {
                0.0
            } else {
                max - min
            }
        })
        .collect()
}

/// Next preference weights to try, or `None` once every metric meets its
/// granularity target.
pub fn reweighting1(
    archive: &FrontierArchive,
    cfg: &ExploreConfig,
) -> Result<Option<PreferenceWeights>> {
    if archive.is_empty() {
        return Err(Error::contract("reweighting needs a non-empty archive"));
    }
    let t_count = cfg.bounds.len();
    if archive
        .entries()
        .iter()
        .any(|e| e.metrics.len() != t_count || e.weights.len() != t_count)
    {
        return Err(Error::contract("archive entries do not match the bounds dimension"));
    }
    if cfg.granularity_target.len() != t_count {
        return Err(Error::contract("granularity target and bounds differ in length"));
    }

    let per_metric: Vec<Vec<Node>> = (0..t_count)
        .map(|t| sorted_nodes(&archive.metric_values(t), cfg.bounds.lo()[t], cfg.bounds.hi()[t]))
        .collect();
    let grains: Vec<f64> = per_metric
        .iter()
        .map(|nodes| {
            (nodes[nodes.len() - 1].value - nodes[0].value) / (nodes.len() - 1).max(1) as f64
        })
        .collect();
    if grains
        .iter()
        .zip(&cfg.granularity_target)
        .all(|(g, phi)| g <= phi)
    {
        return Ok(None);
    }

    let mut t_hat = 0;
    for (t, &g) in grains.iter().enumerate().skip(1) {
        if g > grains[t_hat] + TIE_TOL {
            t_hat = t;
        }
    }

    let nodes = &per_metric[t_hat];
    let mut widest = 0;
    for i in 1..nodes.len() - 1 {
        let gap = nodes[i + 1].value - nodes[i].value;
        if gap > nodes[widest + 1].value - nodes[widest].value + TIE_TOL {
            widest = i;
        }
    }
    let (left, right) = (nodes[widest], nodes[widest + 1]);
    let entries = archive.entries();

    let next = match (left.owner, right.owner) {
        (None, Some(j)) => {
            let mut w = entries[j].weights.clone();
            w[t_hat] /= cfg.pace;
            w
        }
        (Some(i), None) => {
            let mut w = entries[i].weights.clone();
            w[t_hat] *= cfg.pace;
            w
        }
        (Some(i), Some(j)) => entries[i]
            .weights
            .iter()
            .zip(entries[j].weights.iter())
            .map(|(a, b)| 0.5 * (a + b))
            .collect(),
        (None, None) => unreachable!("a non-empty archive always owns a node"),
    };
    Ok(Some(PreferenceWeights::new(next)?))
}

/// MGDA frontier exploration starting from uniform weights.
pub fn explore_frontier<P: MultiObjectiveProblem + ?Sized>(
    problem: &P,
    cfg: &ExploreConfig,
    train_cfg: &TrainConfig,
) -> Result<FrontierArchive> {
    let mut optimizer = Optimizer::new(problem, train_cfg.clone(), DescentRule::Mgda)?;
    explore_with(&mut optimizer, cfg)
}

/// Exploration loop over any optimizer; the static-scaling baseline reuses it.
pub fn explore_with<P: MultiObjectiveProblem + ?Sized>(
    optimizer: &mut Optimizer<'_, P>,
    cfg: &ExploreConfig,
) -> Result<FrontierArchive> {
    cfg.validate()?;
    let t = optimizer.problem().num_objectives();
    if cfg.bounds.len() != t {
        return Err(Error::contract(format!(
            "bounds cover {} metrics but the problem has {t}",
            cfg.bounds.len()
        )));
    }

    let mut archive = FrontierArchive::new();
    let mut w = PreferenceWeights::uniform(t);
    loop {
        let metrics = match optimizer.run(&w) {
            Ok((m, _)) => m,
            Err(source) => {
                return Err(Error::Exploration {
                    archive,
                    source: Box::new(source),
                })
            }
        };
        archive.push(w.to_vec(), metrics);
        if archive.len() >= cfg.max_rounds {
            break;
        }
        match reweighting1(&archive, cfg)? {
            Some(next) => w = next,
            None => break,
        }
    }
    Ok(archive)
}
