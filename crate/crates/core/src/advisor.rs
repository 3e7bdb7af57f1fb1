//! Selecting the configuration with the smallest predictive-utility deviation.
//!
//! For each configuration and each attribute the original joint is
//! reconstructed from the masked joint, and the chosen measure is compared
//! between the reconstruction and the masked joint. Per-attribute deviations
//! are averaged over the attributes; the lowest average wins, ties going to
//! the lowest configuration id.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, JointDistribution, MarginalDistribution, Summary};
use crate::error::{Error, Result};
use crate::masking::{inverse_image, masked_joint_with, InverseImage, MaskingConfiguration};
use crate::reconstruction::{self, ConstraintSet, IpfSettings, Reconstruction};
pub use crate::reconstruction::Case;
use crate::rng;
use crate::utility::{absolute_difference, reconstruction_utility, utility, Measure};

/// Everything the advisor needs about one attribute under one configuration.
#[derive(Debug, Clone)]
pub struct AttributeInput {
    pub attribute: String,
    pub masked_joint: JointDistribution,
    pub inverse: InverseImage,
    pub marginal: Option<MarginalDistribution>,
}

#[derive(Debug, Clone)]
pub struct ConfigInputs {
    pub config_id: String,
    pub attributes: Vec<AttributeInput>,
}

/// Something that turns a constraint set into a reconstruction.
pub trait Reconstructor: Sync {
    fn reconstruct(&self, constraints: &ConstraintSet, settings: &IpfSettings) -> Result<Reconstruction>;
}

/// Iterative proportional fitting followed by randomized rounding.
#[derive(Debug, Clone, Copy, Default)]
pub struct Ipf;

impl Reconstructor for Ipf {
    fn reconstruct(&self, constraints: &ConstraintSet, settings: &IpfSettings) -> Result<Reconstruction> {
        reconstruction::reconstruct(constraints, settings)
    }
}

/// Wall time spent per phase, summed over all tasks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub masking: Duration,
    pub reconstruction: Duration,
    pub utility: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.masking + self.reconstruction + self.utility
    }

    pub fn add(&mut self, other: &PhaseTimings) {
        self.masking += other.masking;
        self.reconstruction += other.reconstruction;
        self.utility += other.utility;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeDeviation {
    pub attribute: String,
    /// Utility of the reconstructed joint.
    pub utility_original: f64,
    /// Utility of the masked joint.
    pub utility_masked: f64,
    pub deviation: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDeviation {
    pub config_id: String,
    pub per_attribute: Vec<AttributeDeviation>,
    pub total_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisoryReport {
    pub measure: Measure,
    pub case: Case,
    pub per_config: Vec<ConfigDeviation>,
    pub selected: String,
}

impl AdvisoryReport {
    pub fn selected_config(&self) -> &ConfigDeviation {
        self.per_config
            .iter()
            .find(|c| c.config_id == self.selected)
            .expect("selected id comes from per_config")
    }

    /// Aligned text table, one line per configuration, selected one marked.
    pub fn render_table(&self) -> String {
        let id_width = self
            .per_config
            .iter()
            .map(|c| c.config_id.len())
            .max()
            .unwrap_or(0)
            .max("config".len());
        let mut out = String::new();
        let _ = writeln!(out, "measure: {}   case: {}", self.measure, self.case);
        let _ = writeln!(
            out,
            "  {:<id_width$}  {:>15}  {:>15}  {:>10}",
            "config", "total-deviation", "max-attribute", "attributes"
        );
        for c in &self.per_config {
            let worst = c
                .per_attribute
                .iter()
                .max_by(|a, b| a.deviation.total_cmp(&b.deviation).then_with(|| b.attribute.cmp(&a.attribute)));
            let marker = if c.config_id == self.selected { '*' } else { ' ' };
            let _ = writeln!(
                out,
                "{marker} {:<id_width$}  {:>15.6e}  {:>15}  {:>10}",
                c.config_id,
                c.total_deviation,
                worst.map_or("-", |w| w.attribute.as_str()),
                c.per_attribute.len()
            );
        }
        let _ = writeln!(out, "selected: {}", self.selected);
        out
    }
}

fn validate_inputs(inputs: &[ConfigInputs], case: Case) -> Result<()> {
    let Some(first) = inputs.first() else {
        return Err(Error::MissingInput("no configurations to compare".into()));
    };
    let mut expected: Vec<&str> = first.attributes.iter().map(|a| a.attribute.as_str()).collect();
    expected.sort_unstable();
    if expected.is_empty() {
        return Err(Error::MissingInput(format!("configuration `{}` has no attributes", first.config_id)));
    }
    let mut ids: Vec<&str> = Vec::with_capacity(inputs.len());
    for c in inputs {
        let mut names: Vec<&str> = c.attributes.iter().map(|a| a.attribute.as_str()).collect();
        names.sort_unstable();
        if names != expected {
            return Err(Error::MissingInput(format!(
                "configuration `{}` covers attributes {names:?}, expected {expected:?}",
                c.config_id
            )));
        }
        if case == Case::WithMarginals {
            if let Some(a) = c.attributes.iter().find(|a| a.marginal.is_none()) {
                return Err(Error::MissingInput(format!(
                    "configuration `{}`, attribute `{}`: with-1d needs a histogram",
                    c.config_id, a.attribute
                )));
            }
        }
        ids.push(&c.config_id);
    }
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidConfiguration {
            id: w[0].to_string(),
            reason: "duplicate configuration id".into(),
        });
    }
    Ok(())
}

/// Runs the advisor with IPF reconstruction on up to `jobs` threads.
pub fn advise(
    inputs: &[ConfigInputs],
    measure: Measure,
    case: Case,
    settings: &IpfSettings,
    jobs: usize,
) -> Result<AdvisoryReport> {
    advise_with(inputs, measure, case, settings, jobs, &Ipf).map(|(r, _)| r)
}

/// Like [`advise`], with a caller-supplied reconstructor, also returning the
/// reconstruction and utility time.
///
/// Attribute `j` of configuration `i` rounds with a seed derived from
/// `(settings.rounding_seed, i, j)`, and results are gathered in input order,
/// so the report does not depend on `jobs`.
pub fn advise_with<R: Reconstructor>(
    inputs: &[ConfigInputs],
    measure: Measure,
    case: Case,
    settings: &IpfSettings,
    jobs: usize,
    reconstructor: &R,
) -> Result<(AdvisoryReport, PhaseTimings)> {
    settings.validate()?;
    validate_inputs(inputs, case)?;

    let tasks: Vec<(usize, usize)> = inputs
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| (0..c.attributes.len()).map(move |ai| (ci, ai)))
        .collect();
    let run = |&(ci, ai): &(usize, usize)| -> Result<(AttributeDeviation, PhaseTimings)> {
        let config = &inputs[ci];
        let input = &config.attributes[ai];
        evaluate_attribute(input, measure, case, settings, ci, ai, reconstructor)
            .map_err(|e| e.annotate(&config.config_id, &input.attribute))
    };
    let results: Vec<Result<(AttributeDeviation, PhaseTimings)>> = with_pool(jobs, || tasks.par_iter().map(run).collect())?;

    let mut timings = PhaseTimings::default();
    let mut per_config: Vec<ConfigDeviation> = inputs
        .iter()
        .map(|c| ConfigDeviation {
            config_id: c.config_id.clone(),
            per_attribute: Vec::with_capacity(c.attributes.len()),
            total_deviation: 0.0,
        })
        .collect();
    for (&(ci, _), result) in tasks.iter().zip(results) {
        let (dev, t) = result?;
        timings.add(&t);
        per_config[ci].per_attribute.push(dev);
    }
    for c in &mut per_config {
        let sum: f64 = c.per_attribute.iter().map(|a| a.deviation).sum();
        c.total_deviation = sum / c.per_attribute.len() as f64;
    }
    let selected = select(&per_config);
    Ok((
        AdvisoryReport {
            measure,
            case,
            per_config,
            selected,
        },
        timings,
    ))
}

/// Lowest total deviation; ties go to the lowest id.
pub fn select(per_config: &[ConfigDeviation]) -> String {
    per_config
        .iter()
        .min_by(|a, b| {
            a.total_deviation
                .total_cmp(&b.total_deviation)
                .then_with(|| a.config_id.cmp(&b.config_id))
        })
        .map(|c| c.config_id.clone())
        .unwrap_or_default()
}

fn evaluate_attribute<R: Reconstructor>(
    input: &AttributeInput,
    measure: Measure,
    case: Case,
    settings: &IpfSettings,
    config_index: usize,
    attribute_index: usize,
    reconstructor: &R,
) -> Result<(AttributeDeviation, PhaseTimings)> {
    let mut t = PhaseTimings::default();
    let start = Instant::now();
    let marginal = match case {
        Case::WithMarginals => input.marginal.as_ref(),
        Case::NoMarginals => None,
    };
    let constraints = ConstraintSet::new(&input.masked_joint, &input.inverse, marginal)?;
    let seed = rng::derive_seed(settings.rounding_seed, &[config_index as u64, attribute_index as u64]);
    let rec = reconstructor.reconstruct(&constraints, &settings.with_seed(seed))?;
    t.reconstruction = start.elapsed();

    let start = Instant::now();
    let utility_original = reconstruction_utility(measure, &rec)?;
    let utility_masked = utility(measure, &input.masked_joint)?;
    t.utility = start.elapsed();
    Ok((
        AttributeDeviation {
            attribute: input.attribute.clone(),
            utility_original,
            utility_masked,
            deviation: absolute_difference(utility_original, utility_masked),
            iterations: rec.iterations,
            converged: rec.converged,
        },
        t,
    ))
}

/// Runs `f` on a dedicated pool of `jobs` threads (0 = rayon's default).
pub fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidSettings(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Builds advisor inputs from raw data: masked joints are counted directly
/// from the attribute codes, histograms come from the data when `case` is
/// with-1d. Also returns the time spent (the masking phase).
pub fn provider_inputs(
    d: &Dataset,
    configs: &[MaskingConfiguration],
    case: Case,
    jobs: usize,
) -> Result<(Vec<ConfigInputs>, Duration)> {
    for c in configs {
        c.validate_for_dataset(d)?;
    }
    let marginals: Option<Summary> = match case {
        Case::WithMarginals => Some(Summary::of_dataset(d)?),
        Case::NoMarginals => None,
    };
    let tasks: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|ci| (0..d.num_attributes()).map(move |ai| (ci, ai)))
        .collect();
    let run = |&(ci, ai): &(usize, usize)| -> Result<(AttributeInput, Duration)> {
        let start = Instant::now();
        let col = &d.features()[ai];
        let f = configs[ci].function(col.name()).expect("validated");
        let inverse = inverse_image(f, col.domain()).map_err(|e| e.annotate(&configs[ci].id, col.name()))?;
        let masked_joint = masked_joint_with(col, d.label(), &inverse)?;
        let marginal = marginals
            .as_ref()
            .map(|s| s.get(col.name()).expect("summary covers every feature").clone());
        Ok((
            AttributeInput {
                attribute: col.name().to_string(),
                masked_joint,
                inverse,
                marginal,
            },
            start.elapsed(),
        ))
    };
    let results: Vec<Result<(AttributeInput, Duration)>> = with_pool(jobs, || tasks.par_iter().map(run).collect())?;
    let mut inputs: Vec<ConfigInputs> = configs
        .iter()
        .map(|c| ConfigInputs {
            config_id: c.id.clone(),
            attributes: Vec::with_capacity(d.num_attributes()),
        })
        .collect();
    let mut elapsed = Duration::ZERO;
    for (&(ci, _), r) in tasks.iter().zip(results) {
        let (input, t) = r?;
        elapsed += t;
        inputs[ci].attributes.push(input);
    }
    Ok((inputs, elapsed))
}
