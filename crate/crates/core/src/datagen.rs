//! Synthetic weekly service-parts demand.
//!
//! Intermittent series draw an occurrence per week and a discretized lognormal
//! size. Non-intermittent series follow a life-cycle curve (logistic growth,
//! plateau, exponential decline) with yearly seasonality and noise. Each series
//! draws its own life length and launch week, so phases overlap across series.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const WEEKS_PER_YEAR: f64 = 52.0;

/// Feature columns written after `demand`, in order.
pub const FEATURE_NAMES: [&str; 4] = ["lag_demand", "woy_sin", "woy_cos", "phase"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DemandClass {
    Intermittent,
    NonIntermittent,
    /// Alternates series by index, starting with non-intermittent.
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Growth,
    Maturity,
    Decline,
}

impl Phase {
    /// Numeric phase indicator used as a feature.
    pub fn code(self) -> f64 {
        match self {
            Phase::Growth => 0.0,
            Phase::Maturity => 0.5,
            Phase::Decline => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub seed: u64,
    pub series: usize,
    pub weeks: usize,
    pub class: DemandClass,
    /// Weekly occurrence probability of intermittent series.
    pub occurrence: f64,
    /// Lognormal size parameters of intermittent demand.
    pub size_mu: f64,
    pub size_sigma: f64,
    /// Fractions of a life cycle spent growing and at maturity; the rest declines.
    pub growth_frac: f64,
    pub maturity_frac: f64,
    /// Life-cycle length range, as multiples of `weeks`.
    pub life_range: (f64, f64),
    /// Peak weekly level is drawn uniformly from this range.
    pub peak_range: (f64, f64),
    pub seasonal_amplitude: f64,
    /// Standard deviation of multiplicative noise.
    pub noise: f64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            series: 50,
            weeks: 120,
            class: DemandClass::NonIntermittent,
            occurrence: 0.3,
            size_mu: 1.5,
            size_sigma: 0.6,
            growth_frac: 0.25,
            maturity_frac: 0.45,
            life_range: (0.75, 2.0),
            peak_range: (20.0, 80.0),
            seasonal_amplitude: 0.2,
            noise: 0.15,
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.occurrence > 0.0 && self.occurrence <= 1.0) {
            return Err(Error::contract("occurrence probability must lie in (0, 1]"));
        }
        if !(self.size_sigma >= 0.0) || !self.size_mu.is_finite() {
            return Err(Error::contract("invalid lognormal size parameters"));
        }
        if !(self.growth_frac >= 0.0 && self.maturity_frac >= 0.0)
            || self.growth_frac + self.maturity_frac > 1.0
        {
            return Err(Error::contract("phase fractions must be non-negative and sum to at most 1"));
        }
        let (llo, lhi) = self.life_range;
        if !(llo > 0.0 && llo <= lhi && lhi.is_finite()) {
            return Err(Error::contract("life range must be positive and ordered"));
        }
        let (lo, hi) = self.peak_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::contract("peak range must be positive and ordered"));
        }
        if !(self.seasonal_amplitude >= 0.0 && self.seasonal_amplitude < 1.0) {
            return Err(Error::contract("seasonal amplitude must lie in [0, 1)"));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::contract("noise must be non-negative"));
        }
        Ok(())
    }
}

/// One weekly series with its per-week feature rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandSeries {
    pub id: String,
    pub demand: Vec<f64>,
    /// `features[w]` follows [`DemandPanel::feature_names`].
    pub features: Vec<Vec<f64>>,
}

impl DemandSeries {
    pub fn weeks(&self) -> usize {
        self.demand.len()
    }
}

/// A set of weekly series sharing one feature layout.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DemandPanel {
    pub feature_names: Vec<String>,
    pub series: Vec<DemandSeries>,
}

impl DemandPanel {
    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    /// Total row count in CSV form.
    pub fn rows(&self) -> usize {
        self.series.iter().map(DemandSeries::weeks).sum()
    }

    /// Shortest series length, 0 for an empty panel.
    pub fn min_weeks(&self) -> usize {
        self.series.iter().map(DemandSeries::weeks).min().unwrap_or(0)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["series_id".to_string(), "week".into(), "demand".into()];
        header.extend(self.feature_names.iter().cloned());
        out.write_record(&header)?;
        for s in &self.series {
            for (week, (d, f)) in s.demand.iter().zip(&s.features).enumerate() {
                let mut row = vec![s.id.clone(), week.to_string(), format_sig9(*d)];
                row.extend(f.iter().map(|v| format_sig9(*v)));
                out.write_record(&row)?;
            }
        }
        out.flush().map_err(|e| Error::io("<panel>", e))?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Rows of a series must be contiguous and in week order starting at 0.
    pub fn read_csv<R: Read>(reader: R, source: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        let mut records = rdr.records();
        let parse_err = |line: u64, reason: String| Error::Parse {
            path: source.to_path_buf(),
            line,
            reason,
        };

        let header = match records.next() {
            None => return Ok(Self::default()),
            Some(h) => h?,
        };
        if header.len() < 3
            || &header[0] != "series_id"
            || &header[1] != "week"
            || &header[2] != "demand"
        {
            return Err(parse_err(1, "expected header series_id,week,demand,...".into()));
        }
        let feature_names: Vec<String> = header.iter().skip(3).map(str::to_string).collect();

        let mut panel = Self {
            feature_names,
            series: Vec::new(),
        };
        for (i, record) in records.enumerate() {
            let line = i as u64 + 2;
            let record = record?;
            if record.len() != header.len() {
                return Err(parse_err(
                    line,
                    format!("expected {} fields, found {}", header.len(), record.len()),
                ));
            }
            let id = &record[0];
            let week: usize = record[1]
                .trim()
                .parse()
                .map_err(|e| parse_err(line, format!("week `{}`: {e}", &record[1])))?;
            let number = |field: &str| -> Result<f64> {
                match field.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    Ok(_) => Err(parse_err(line, format!("non-finite value `{field}`"))),
                    Err(e) => Err(parse_err(line, format!("`{field}`: {e}"))),
                }
            };
            let demand = number(&record[2])?;
            if demand < 0.0 {
                return Err(parse_err(line, format!("negative demand {demand} in series `{id}`")));
            }
            let features = record.iter().skip(3).map(number).collect::<Result<Vec<_>>>()?;

            let fresh = panel.series.last().map_or(true, |s| s.id != id);
            if fresh {
                if panel.series.iter().any(|s| s.id == id) {
                    return Err(parse_err(line, format!("rows of series `{id}` are not contiguous")));
                }
                panel.series.push(DemandSeries {
                    id: id.to_string(),
                    demand: Vec::new(),
                    features: Vec::new(),
                });
            }
            let series = panel.series.last_mut().expect("pushed above");
            if week != series.demand.len() {
                return Err(parse_err(
                    line,
                    format!("series `{id}` expected week {}, found {week}", series.demand.len()),
                ));
            }
            series.demand.push(demand);
            series.features.push(features);
        }
        Ok(panel)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), path)
    }
}

/// Decimal text with 9 significant digits, trailing zeros trimmed.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{:.8e}", x);
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..=15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        trim_zeros(&fixed)
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Timing of one series' life cycle, in weeks relative to week 0.
#[derive(Clone, Copy, Debug)]
struct LifeCycle {
    start: f64,
    growth: f64,
    maturity_end: f64,
    decline: f64,
}

impl LifeCycle {
    /// Launch falls anywhere from well before week 0 to 30% into the panel,
    /// so any window of weeks mixes phases across series.
    fn draw(rng: &mut ChaCha8Rng, spec: &GenSpec) -> Self {
        let weeks = spec.weeks as f64;
        let (lo, hi) = spec.life_range;
        let life = if lo < hi { rng.gen_range(lo..hi) } else { lo } * weeks;
        let start = rng.gen_range(-0.6 * life..=0.3 * weeks);
        let growth = (spec.growth_frac * life).max(1.0);
        let maturity_end = growth + spec.maturity_frac * life;
        Self {
            start,
            growth,
            maturity_end,
            decline: (life - maturity_end).max(1.0),
        }
    }

    fn phase(&self, week: usize) -> Phase {
        let age = week as f64 - self.start;
        if age < self.growth {
            Phase::Growth
        } else if age < self.maturity_end {
            Phase::Maturity
        } else {
            Phase::Decline
        }
    }

    /// Level relative to the peak, in `[0, 1]`.
    fn level(&self, week: usize) -> f64 {
        let age = week as f64 - self.start;
        let rise = 1.0 / (1.0 + (-10.0 * (age / self.growth - 0.5)).exp());
        if age < self.maturity_end {
            rise
        } else {
            rise * (-2.0 * (age - self.maturity_end) / self.decline).exp()
        }
    }
}

fn seasonal(week: usize, phase_offset: f64, amplitude: f64) -> f64 {
    1.0 + amplitude * (2.0 * PI * week as f64 / WEEKS_PER_YEAR + phase_offset).sin()
}

fn week_features(week: usize, lag: f64, phase: Phase) -> Vec<f64> {
    let angle = 2.0 * PI * (week as f64 % WEEKS_PER_YEAR) / WEEKS_PER_YEAR;
    vec![lag, angle.sin(), angle.cos(), phase.code()]
}

fn intermittent_series(rng: &mut ChaCha8Rng, spec: &GenSpec) -> Vec<f64> {
    let sizes = LogNormal::new(spec.size_mu, spec.size_sigma).expect("validated parameters");
    (0..spec.weeks)
        .map(|_| {
            let occurs = rng.gen_bool(spec.occurrence);
            let size = sizes.sample(rng).round().max(1.0);
            if occurs {
                size
            } else {
                0.0
            }
        })
        .collect()
}

fn smooth_series(rng: &mut ChaCha8Rng, spec: &GenSpec, cycle: &LifeCycle) -> Vec<f64> {
    let (lo, hi) = spec.peak_range;
    let peak = if lo < hi { rng.gen_range(lo..hi) } else { lo };
    let offset = rng.gen_range(0.0..2.0 * PI);
    let noise = Normal::new(0.0, spec.noise).expect("validated noise");
    (0..spec.weeks)
        .map(|w| {
            let level = peak * cycle.level(w) * seasonal(w, offset, spec.seasonal_amplitude);
            let eps: f64 = noise.sample(rng);
            (level * (1.0 + eps)).round().max(0.0)
        })
        .collect()
}

/// Deterministic panel for `spec`.
pub fn generate(spec: &GenSpec) -> Result<DemandPanel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = spec.series.max(1).to_string().len();
    let series = (0..spec.series)
        .map(|i| {
            let intermittent = match spec.class {
                DemandClass::Intermittent => true,
                DemandClass::NonIntermittent => false,
                DemandClass::Mixed => i % 2 == 1,
            };
            let cycle = LifeCycle::draw(&mut rng, spec);
            let demand = if intermittent {
                intermittent_series(&mut rng, spec)
            } else {
                smooth_series(&mut rng, spec, &cycle)
            };
            let features = (0..spec.weeks)
                .map(|w| {
                    let lag = if w == 0 { 0.0 } else { demand[w - 1] };
                    week_features(w, lag, cycle.phase(w))
                })
                .collect();
            DemandSeries {
                id: format!("S{:0width$}", i, width = width),
                demand,
                features,
            }
        })
        .collect();
    Ok(DemandPanel {
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        series,
    })
}
