//! Ground-truth evaluation: reconstruction error against the true joints,
//! synthetic datasets, and per-phase timing.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::advisor::{with_pool, PhaseTimings};
use crate::data::{joint_of_column, AttributeDomain, Column, Dataset, JointDistribution, Summary};
use crate::error::{Error, Result};
use crate::masking::{inverse_image, masked_joint_with, MaskingConfiguration};
use crate::reconstruction::{reconstruct, sampling_reconstruct, ConstraintSet, IpfSettings};
use crate::rng;
use crate::utility::{absolute_difference, utility, Measure};

/// Total variation distance between two tables, each normalized by its own
/// total. Cells are matched by (row value, column value); a cell missing from
/// one table counts as zero there.
pub fn tvd(p: &JointDistribution, q: &JointDistribution) -> Result<f64> {
    let (np, nq) = (p.total(), q.total());
    if np <= 0.0 || nq <= 0.0 {
        return Err(Error::ZeroTotal);
    }
    let mut diff: IndexMap<(&str, &str), f64> = IndexMap::new();
    for (t, n, sign) in [(p, np, 1.0), (q, nq, -1.0)] {
        for (r, rv) in t.row_domain().values().iter().enumerate() {
            for (c, cv) in t.col_domain().values().iter().enumerate() {
                *diff.entry((rv.as_str(), cv.as_str())).or_insert(0.0) += sign * t.get(r, c) / n;
            }
        }
    }
    let d = 0.5 * diff.values().map(|v| v.abs()).sum::<f64>();
    Ok(d.clamp(0.0, 1.0))
}

/// Knobs of the synthetic dataset generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub rows: usize,
    pub attributes: usize,
    pub domain_size: usize,
    pub label_classes: usize,
    /// Attribute-label coupling: 0 is independence, 1 is a deterministic mode per class.
    pub gamma: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rows", self.rows),
            ("attributes", self.attributes),
            ("domain size", self.domain_size),
            ("label classes", self.label_classes),
        ] {
            if v == 0 {
                return Err(Error::InvalidSynthSpec(format!("{name} must be at least 1")));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidSynthSpec(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Name of the `i`-th synthetic attribute.
pub fn synth_attribute_name(i: usize, attributes: usize) -> String {
    let width = attributes.saturating_sub(1).to_string().len();
    format!("a{i:0width$}")
}

pub const SYNTH_LABEL: &str = "label";

/// Compacts raw codes to the observed values, in canonical order.
fn compact_column(name: &str, labels: &[String], raw: Vec<u32>) -> Result<Column> {
    let mut seen = vec![false; labels.len()];
    for &c in &raw {
        seen[c as usize] = true;
    }
    let observed: Vec<String> = labels
        .iter()
        .zip(&seen)
        .filter(|(_, &s)| s)
        .map(|(l, _)| l.clone())
        .collect();
    let domain = AttributeDomain::new(name, observed)?;
    let remap: Vec<u32> = labels
        .iter()
        .map(|l| domain.index_of(l).map_or(u32::MAX, |i| i as u32))
        .collect();
    Column::from_codes(domain, raw.into_iter().map(|c| remap[c as usize]).collect())
}

/// Draws a dataset with integer-valued attributes `0..domain_size` and labels
/// `c0..`.
///
/// Labels are uniform over classes. Each attribute has a fixed random mode per
/// class (distinct across classes when the domain is large enough); a record's
/// value is that mode with probability `gamma`, otherwise uniform over the
/// domain. Every column draws from its own stream.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let value_labels: Vec<String> = (0..spec.domain_size).map(|v| v.to_string()).collect();
    let class_labels: Vec<String> = (0..spec.label_classes).map(|c| format!("c{c}")).collect();

    let mut r = rng::stream(spec.seed, &[u64::MAX]);
    let labels: Vec<u32> = (0..spec.rows)
        .map(|_| r.gen_range(0..spec.label_classes) as u32)
        .collect();

    let features = (0..spec.attributes)
        .into_par_iter()
        .map(|j| {
            let mut mode_rng = rng::stream(spec.seed, &[0, j as u64]);
            let modes: Vec<u32> = if spec.domain_size >= spec.label_classes {
                sample(&mut mode_rng, spec.domain_size, spec.label_classes)
                    .into_iter()
                    .map(|v| v as u32)
                    .collect()
            } else {
                (0..spec.label_classes)
                    .map(|_| mode_rng.gen_range(0..spec.domain_size) as u32)
                    .collect()
            };
            let mut r = rng::stream(spec.seed, &[1, j as u64]);
            let codes: Vec<u32> = labels
                .iter()
                .map(|&y| {
                    if r.gen::<f64>() < spec.gamma {
                        modes[y as usize]
                    } else {
                        r.gen_range(0..spec.domain_size) as u32
                    }
                })
                .collect();
            compact_column(&synth_attribute_name(j, spec.attributes), &value_labels, codes)
        })
        .collect::<Result<Vec<_>>>()?;
    let label = compact_column(SYNTH_LABEL, &class_labels, labels)?;
    Dataset::from_columns(features, label)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ipf-with-1d")]
    IpfWithMarginals,
    #[serde(rename = "ipf-no-1d")]
    IpfNoMarginals,
    #[serde(rename = "sampling")]
    Sampling,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::IpfWithMarginals, Method::IpfNoMarginals, Method::Sampling];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::IpfWithMarginals => "ipf-with-1d",
            Method::IpfNoMarginals => "ipf-no-1d",
            Method::Sampling => "sampling",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected ipf-with-1d, ipf-no-1d or sampling)"))
    }
}

/// Per-phase wall time of one record, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMillis {
    pub masking: f64,
    pub reconstruction: f64,
    pub utility: f64,
}

impl From<PhaseTimings> for PhaseMillis {
    fn from(t: PhaseTimings) -> Self {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        Self {
            masking: ms(t.masking),
            reconstruction: ms(t.reconstruction),
            utility: ms(t.utility),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub config_id: String,
    pub attribute: String,
    pub method: Method,
    pub tvd: f64,
    pub iterations: usize,
    /// Constraint residual of the fractional IPF fit; absent for sampling.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    /// |utility(reconstruction) - utility(masked)| per measure.
    pub deviations: BTreeMap<Measure, f64>,
    #[serde(skip)]
    pub timings: PhaseTimings,
}

#[derive(Debug, Clone)]
pub struct BenchmarkSettings {
    pub methods: Vec<Method>,
    pub measures: Vec<Measure>,
    pub ipf: IpfSettings,
    /// Master seed; every (configuration, attribute, method) derives its own.
    pub seed: u64,
    pub jobs: usize,
}

impl Default for BenchmarkSettings {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            measures: Measure::ALL.to_vec(),
            ipf: IpfSettings::default(),
            seed: 0,
            jobs: 0,
        }
    }
}

/// Reconstructs every (configuration, attribute) pair with every method and
/// scores it against the true joint. Records come back ordered by
/// (configuration, attribute, method) in input order.
pub fn run_benchmark(
    d: &Dataset,
    configs: &[MaskingConfiguration],
    settings: &BenchmarkSettings,
) -> Result<Vec<EvalRecord>> {
    settings.ipf.validate()?;
    for c in configs {
        c.validate_for_dataset(d)?;
    }
    let summary = Summary::of_dataset(d)?;
    let tasks: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|ci| (0..d.num_attributes()).map(move |ai| (ci, ai)))
        .collect();
    let run = |&(ci, ai): &(usize, usize)| -> Result<Vec<EvalRecord>> {
        let config = &configs[ci];
        let col = &d.features()[ai];
        evaluate_pair(d, col, config, &summary, settings, ci, ai).map_err(|e| e.annotate(&config.id, col.name()))
    };
    let results: Vec<Result<Vec<EvalRecord>>> = with_pool(settings.jobs, || tasks.par_iter().map(run).collect())?;
    let mut records = Vec::with_capacity(tasks.len() * settings.methods.len());
    for r in results {
        records.extend(r?);
    }
    Ok(records)
}

fn evaluate_pair(
    d: &Dataset,
    col: &Column,
    config: &MaskingConfiguration,
    summary: &Summary,
    settings: &BenchmarkSettings,
    ci: usize,
    ai: usize,
) -> Result<Vec<EvalRecord>> {
    let start = Instant::now();
    let f = config.function(col.name()).expect("validated");
    let inverse = inverse_image(f, col.domain())?;
    let masked = masked_joint_with(col, d.label(), &inverse)?;
    let masking = start.elapsed();

    let truth = joint_of_column(col, d.label())?;
    let marginal = summary.get(col.name()).expect("summary covers every feature");
    let masked_utility: BTreeMap<Measure, f64> = settings
        .measures
        .iter()
        .map(|&m| utility(m, &masked).map(|u| (m, u)))
        .collect::<Result<_>>()?;

    settings
        .methods
        .iter()
        .enumerate()
        .map(|(mi, &method)| {
            let seed = rng::derive_seed(settings.seed, &[ci as u64, ai as u64, mi as u64]);
            let start = Instant::now();
            let (integral, iterations, residual) = match method {
                Method::Sampling => (sampling_reconstruct(&masked, &inverse, seed)?, 0, None),
                Method::IpfWithMarginals | Method::IpfNoMarginals => {
                    let m = (method == Method::IpfWithMarginals).then_some(marginal);
                    let c = ConstraintSet::new(&masked, &inverse, m)?;
                    let r = reconstruct(&c, &settings.ipf.with_seed(seed))?;
                    (r.integral, r.iterations, Some(r.residual))
                }
            };
            let reconstruction = start.elapsed();

            let start = Instant::now();
            let deviations = settings
                .measures
                .iter()
                .map(|&m| utility(m, &integral).map(|u| (m, absolute_difference(u, masked_utility[&m]))))
                .collect::<Result<_>>()?;
            let utility_time = start.elapsed();

            Ok(EvalRecord {
                config_id: config.id.clone(),
                attribute: col.name().to_string(),
                method,
                tvd: tvd(&truth, &integral)?,
                iterations,
                residual,
                deviations,
                timings: PhaseTimings {
                    masking,
                    reconstruction,
                    utility: utility_time,
                },
            })
        })
        .collect()
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TvdSummary {
    pub median_tvd: f64,
    pub p25: f64,
    pub p75: f64,
    pub count: usize,
}

/// TVD quartiles per method.
pub fn summarize(records: &[EvalRecord]) -> BTreeMap<Method, TvdSummary> {
    let mut by_method: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_method.entry(r.method).or_default().push(r.tvd);
    }
    by_method
        .into_iter()
        .map(|(m, mut v)| {
            v.sort_by(f64::total_cmp);
            (
                m,
                TvdSummary {
                    median_tvd: quantile(&v, 0.5),
                    p25: quantile(&v, 0.25),
                    p75: quantile(&v, 0.75),
                    count: v.len(),
                },
            )
        })
        .collect()
}

/// Timing totals per phase over a set of records. The masking phase is shared
/// by every method of a pair, so it is counted once per pair.
pub fn total_timings(records: &[EvalRecord]) -> PhaseTimings {
    let mut t = PhaseTimings::default();
    let mut last_pair: Option<(&str, &str)> = None;
    for r in records {
        let pair = (r.config_id.as_str(), r.attribute.as_str());
        if last_pair != Some(pair) {
            t.masking += r.timings.masking;
            last_pair = Some(pair);
        }
        t.reconstruction += r.timings.reconstruction;
        t.utility += r.timings.utility;
    }
    t
}
