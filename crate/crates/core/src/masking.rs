//! Masking functions and configurations.
//!
//! A masking function maps each value of an attribute's domain to a masked
//! value. Because masking is value-based, its effect on any distribution is
//! fully described by the [`InverseImage`]: the partition of the original
//! domain by masked output. Masked marginals and joints are computed by
//! aggregating over that partition, never by rewriting the dataset.

use std::collections::HashMap;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{format_number, AttributeDomain, Column, Dataset, JointDistribution, MarginalDistribution};
use crate::error::{Error, Result};
use crate::rng;

/// Value emitted by suppression.
pub const SUPPRESSED: &str = "*";

/// A deterministic value-to-value map applied to one attribute.
///
/// Serialized as `{"kind": "...", "params": {...}}`; `identity` and
/// `suppress` carry no params.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MaskingFunction {
    Identity,
    Suppress,
    /// Half-open numeric buckets `[origin + k*width, origin + (k+1)*width)`.
    Bucketize {
        width: f64,
        #[serde(default)]
        origin: f64,
    },
    Generalize(GeneralizeRules),
    /// Rounds to the nearest multiple; exact midpoints go to the lower multiple.
    BlurNumeric { multiple: f64 },
    /// Keeps `keep` leading characters and replaces every other character by `*`.
    BlurPrefix { keep: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneralizeRules {
    /// Explicit value-to-category table.
    Mapping(IndexMap<String, String>),
    /// Numeric ranges, lower bound inclusive, upper bound exclusive; a missing
    /// bound is unbounded. The first matching rule wins.
    Ranges(Vec<RangeRule>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    pub category: String,
}

impl RangeRule {
    pub fn new(lo: Option<f64>, hi: Option<f64>, category: impl Into<String>) -> Self {
        Self {
            lo,
            hi,
            category: category.into(),
        }
    }

    fn contains(&self, x: f64) -> bool {
        self.lo.is_none_or(|lo| x >= lo) && self.hi.is_none_or(|hi| x < hi)
    }
}

fn numeric(value: &str, kind: &'static str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::NotNumeric {
            value: value.to_string(),
            kind,
        })
}

impl MaskingFunction {
    pub fn kind(&self) -> MaskKind {
        match self {
            Self::Identity => MaskKind::Identity,
            Self::Suppress => MaskKind::Suppress,
            Self::Bucketize { .. } => MaskKind::Bucketize,
            Self::Generalize(_) => MaskKind::Generalize,
            Self::BlurNumeric { .. } => MaskKind::BlurNumeric,
            Self::BlurPrefix { .. } => MaskKind::BlurPrefix,
        }
    }

    /// Checks parameter ranges.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Bucketize { width, origin } => {
                if !(width.is_finite() && *width > 0.0 && origin.is_finite()) {
                    return Err(Error::InvalidMask(format!(
                        "bucketize needs a positive width and finite origin, got width={width} origin={origin}"
                    )));
                }
            }
            Self::BlurNumeric { multiple } => {
                if !(multiple.is_finite() && *multiple > 0.0) {
                    return Err(Error::InvalidMask(format!(
                        "blur-numeric needs a positive multiple, got {multiple}"
                    )));
                }
            }
            Self::Generalize(GeneralizeRules::Ranges(rules)) => {
                if rules.is_empty() {
                    return Err(Error::InvalidMask("generalize needs at least one range".into()));
                }
                for r in rules {
                    if let (Some(lo), Some(hi)) = (r.lo, r.hi) {
                        if lo.is_nan() || hi.is_nan() || lo >= hi {
                            return Err(Error::InvalidMask(format!(
                                "empty range [{lo},{hi}) for `{}`",
                                r.category
                            )));
                        }
                    }
                }
            }
            Self::Generalize(GeneralizeRules::Mapping(map)) => {
                if map.is_empty() {
                    return Err(Error::InvalidMask("generalize mapping is empty".into()));
                }
            }
            Self::Identity | Self::Suppress | Self::BlurPrefix { .. } => {}
        }
        Ok(())
    }

    /// Masks a single value.
    pub fn apply(&self, value: &str) -> Result<String> {
        match self {
            Self::Identity => Ok(value.to_string()),
            Self::Suppress => Ok(SUPPRESSED.to_string()),
            Self::Bucketize { width, origin } => {
                let x = numeric(value, "bucketize")?;
                let k = ((x - origin) / width).floor();
                let lo = origin + k * width;
                let hi = origin + (k + 1.0) * width;
                Ok(format!("[{},{})", format_number(lo), format_number(hi)))
            }
            Self::Generalize(GeneralizeRules::Mapping(map)) => map
                .get(value)
                .cloned()
                .ok_or_else(|| Error::GeneralizeMiss(value.to_string())),
            Self::Generalize(GeneralizeRules::Ranges(rules)) => {
                let x = numeric(value, "generalize ranges")?;
                rules
                    .iter()
                    .find(|r| r.contains(x))
                    .map(|r| r.category.clone())
                    .ok_or_else(|| Error::GeneralizeMiss(value.to_string()))
            }
            Self::BlurNumeric { multiple } => {
                let x = numeric(value, "blur-numeric")?;
                let q = x / multiple;
                let lower = q.floor();
                let k = if q - lower > 0.5 { lower + 1.0 } else { lower };
                Ok(format_number(k * multiple))
            }
            Self::BlurPrefix { keep } => Ok(value
                .chars()
                .enumerate()
                .map(|(i, c)| if i < *keep { c } else { '*' })
                .collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskKind {
    Identity,
    Suppress,
    Bucketize,
    Generalize,
    BlurNumeric,
    BlurPrefix,
}

/// Partition of an attribute's domain by masked value.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseImage {
    original: AttributeDomain,
    masked: AttributeDomain,
    preimages: Vec<Vec<usize>>,
    group_of: Vec<usize>,
}

impl InverseImage {
    /// Builds the partition from an explicit original-value to masked-value map.
    pub fn from_assignment(original: AttributeDomain, masked_values: &[String]) -> Result<Self> {
        if masked_values.len() != original.len() {
            return Err(Error::DomainMismatch(format!(
                "{} masked values for a domain of {}",
                masked_values.len(),
                original.len()
            )));
        }
        let masked = AttributeDomain::from_observed(original.name(), masked_values.iter().cloned())?;
        let mut preimages = vec![Vec::new(); masked.len()];
        let group_of: Vec<usize> = masked_values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let g = masked.index_of(v).unwrap();
                preimages[g].push(i);
                g
            })
            .collect();
        Ok(Self {
            original,
            masked,
            preimages,
            group_of,
        })
    }

    /// Each original value is its own group.
    pub fn identity(original: AttributeDomain) -> Self {
        let n = original.len();
        Self {
            masked: original.clone(),
            original,
            preimages: (0..n).map(|i| vec![i]).collect(),
            group_of: (0..n).collect(),
        }
    }

    pub fn original_domain(&self) -> &AttributeDomain {
        &self.original
    }

    pub fn masked_domain(&self) -> &AttributeDomain {
        &self.masked
    }

    /// Indices into the original domain that map to masked value `group`.
    pub fn preimage(&self, group: usize) -> &[usize] {
        &self.preimages[group]
    }

    pub fn preimages(&self) -> &[Vec<usize>] {
        &self.preimages
    }

    /// Masked-value index of original value `i`.
    pub fn group_of(&self, i: usize) -> usize {
        self.group_of[i]
    }

    /// Preimage of a masked value, as values.
    pub fn preimage_values(&self, masked_value: &str) -> Option<Vec<&str>> {
        self.masked
            .index_of(masked_value)
            .map(|g| self.preimages[g].iter().map(|&i| self.original.value(i)).collect())
    }

    /// True when every masked value has exactly one preimage.
    pub fn is_injective(&self) -> bool {
        self.preimages.iter().all(|p| p.len() == 1)
    }
}

/// Groups `domain` by masked output.
pub fn inverse_image(f: &MaskingFunction, domain: &AttributeDomain) -> Result<InverseImage> {
    let masked = domain
        .values()
        .iter()
        .map(|v| f.apply(v))
        .collect::<Result<Vec<_>>>()?;
    InverseImage::from_assignment(domain.clone(), &masked)
}

/// Sums joint rows into masked-value rows.
pub fn aggregate_joint(j: &JointDistribution, inv: &InverseImage) -> Result<JointDistribution> {
    if !j.row_domain().same_values(inv.original_domain()) {
        return Err(Error::DomainMismatch(format!(
            "joint rows of `{}` do not match the inverse image's original domain",
            j.row_domain().name()
        )));
    }
    let nc = j.n_cols();
    let mut cells = vec![0.0; inv.masked_domain().len() * nc];
    for r in 0..j.n_rows() {
        let g = inv.group_of(r);
        for (acc, v) in cells[g * nc..(g + 1) * nc].iter_mut().zip(j.row(r)) {
            *acc += v;
        }
    }
    JointDistribution::new(inv.masked_domain().clone(), j.col_domain().clone(), cells)
}

/// Joint of the masked attribute and the label, counted in one pass over the
/// attribute's codes without producing masked values per record.
pub fn masked_joint(d: &Dataset, attribute: &str, f: &MaskingFunction) -> Result<JointDistribution> {
    let col = d.feature(attribute)?;
    let inv = inverse_image(f, col.domain())?;
    masked_joint_with(col, d.label(), &inv)
}

pub(crate) fn masked_joint_with(col: &Column, label: &Column, inv: &InverseImage) -> Result<JointDistribution> {
    let nc = label.domain().len();
    let mut counts = vec![0u64; inv.masked_domain().len() * nc];
    for (&a, &y) in col.codes().iter().zip(label.codes()) {
        counts[inv.group_of(a as usize) * nc + y as usize] += 1;
    }
    JointDistribution::new(
        inv.masked_domain().clone(),
        label.domain().clone(),
        counts.into_iter().map(|c| c as f64).collect(),
    )
}

/// Histogram of the masked attribute.
pub fn masked_marginal(m: &MarginalDistribution, inv: &InverseImage) -> Result<MarginalDistribution> {
    if !m.domain().same_values(inv.original_domain()) {
        return Err(Error::DomainMismatch(format!(
            "histogram of `{}` does not match the inverse image's original domain",
            m.domain().name()
        )));
    }
    let mut counts = vec![0u64; inv.masked_domain().len()];
    for (i, &c) in m.counts().iter().enumerate() {
        counts[inv.group_of(i)] += c;
    }
    MarginalDistribution::new(inv.masked_domain().clone(), counts)
}

/// One masking function per attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskingConfiguration {
    pub id: String,
    pub assignments: Vec<Assignment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub attribute: String,
    #[serde(flatten)]
    pub function: MaskingFunction,
}

impl MaskingConfiguration {
    pub fn new(id: impl Into<String>, assignments: Vec<(String, MaskingFunction)>) -> Self {
        Self {
            id: id.into(),
            assignments: assignments
                .into_iter()
                .map(|(attribute, function)| Assignment { attribute, function })
                .collect(),
        }
    }

    /// Every attribute masked with the identity.
    pub fn identity<S: AsRef<str>>(id: impl Into<String>, attributes: &[S]) -> Self {
        Self::new(
            id,
            attributes
                .iter()
                .map(|a| (a.as_ref().to_string(), MaskingFunction::Identity))
                .collect(),
        )
    }

    pub fn function(&self, attribute: &str) -> Option<&MaskingFunction> {
        self.assignments
            .iter()
            .find(|a| a.attribute == attribute)
            .map(|a| &a.function)
    }

    pub fn attributes(&self) -> impl Iterator<Item = &str> {
        self.assignments.iter().map(|a| a.attribute.as_str())
    }

    /// Checks that the configuration assigns exactly one valid function to each
    /// of `attributes` and never touches `label`.
    pub fn validate_for<S: AsRef<str>>(&self, attributes: &[S], label: Option<&str>) -> Result<()> {
        let invalid = |reason: String| Error::InvalidConfiguration {
            id: self.id.clone(),
            reason,
        };
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for a in &self.assignments {
            if Some(a.attribute.as_str()) == label {
                return Err(invalid(format!("the label `{}` cannot be masked", a.attribute)));
            }
            if !attributes.iter().any(|x| x.as_ref() == a.attribute) {
                return Err(invalid(format!("unknown attribute `{}`", a.attribute)));
            }
            *seen.entry(&a.attribute).or_default() += 1;
            a.function.validate().map_err(|e| invalid(e.to_string()))?;
        }
        for x in attributes {
            match seen.get(x.as_ref()) {
                None => return Err(invalid(format!("no assignment for attribute `{}`", x.as_ref()))),
                Some(n) if *n > 1 => {
                    return Err(invalid(format!("attribute `{}` assigned {n} times", x.as_ref())))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn validate_for_dataset(&self, d: &Dataset) -> Result<()> {
        self.validate_for(&d.attribute_names(), Some(d.label_name()))
    }
}

/// Parses a configuration-set file (a JSON array) and checks id uniqueness.
pub fn parse_configurations(text: &str) -> Result<Vec<MaskingConfiguration>> {
    let configs: Vec<MaskingConfiguration> = serde_json::from_str(text)?;
    check_unique_ids(&configs)?;
    for c in &configs {
        for a in &c.assignments {
            a.function.validate().map_err(|e| Error::InvalidConfiguration {
                id: c.id.clone(),
                reason: e.to_string(),
            })?;
        }
    }
    Ok(configs)
}

pub fn check_unique_ids(configs: &[MaskingConfiguration]) -> Result<()> {
    let mut ids: Vec<&str> = configs.iter().map(|c| c.id.as_str()).collect();
    ids.sort_unstable();
    match ids.windows(2).find(|w| w[0] == w[1]) {
        Some(w) => Err(Error::InvalidConfiguration {
            id: w[0].to_string(),
            reason: "duplicate configuration id".into(),
        }),
        None => Ok(()),
    }
}

/// Applies a configuration record by record. Export path and test oracle only.
pub fn materialize_masked(d: &Dataset, config: &MaskingConfiguration) -> Result<Dataset> {
    config.validate_for_dataset(d)?;
    let features = d
        .features()
        .iter()
        .map(|col| {
            let f = config.function(col.name()).expect("validated");
            let masked: Vec<String> = (0..col.len())
                .map(|row| f.apply(col.value(row)))
                .collect::<Result<_>>()?;
            Column::from_values(col.name(), &masked)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::from_columns(features, d.label().clone())
}

/// Which functions the configuration generator may draw, and their parameter ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorPolicy {
    /// Kinds allowed on attributes whose every value is numeric.
    pub numeric_kinds: Vec<MaskKind>,
    /// Kinds allowed on all other attributes.
    pub categorical_kinds: Vec<MaskKind>,
    /// Probability that an attribute is suppressed outright.
    pub suppression_probability: f64,
    /// Central quantile masses whose spans become bucket widths.
    pub bucket_quantile_spans: Vec<f64>,
    pub blur_multiples: Vec<f64>,
    /// Upper bound on categories produced by a generated generalization.
    pub max_generalize_groups: usize,
}

impl Default for GeneratorPolicy {
    fn default() -> Self {
        Self {
            numeric_kinds: vec![
                MaskKind::Identity,
                MaskKind::Bucketize,
                MaskKind::Generalize,
                MaskKind::BlurNumeric,
            ],
            categorical_kinds: vec![MaskKind::Identity, MaskKind::Generalize, MaskKind::BlurPrefix],
            suppression_probability: 0.1,
            bucket_quantile_spans: vec![0.1, 0.25, 0.5],
            blur_multiples: vec![5.0, 10.0, 100.0],
            max_generalize_groups: 4,
        }
    }
}

impl GeneratorPolicy {
    /// A policy that can only produce the all-identity configuration.
    pub fn identity_only() -> Self {
        Self {
            numeric_kinds: vec![MaskKind::Identity],
            categorical_kinds: vec![MaskKind::Identity],
            suppression_probability: 0.0,
            ..Self::default()
        }
    }
}

/// Per-attribute facts the generator needs, computed once.
struct AttributeProfile<'a> {
    name: &'a str,
    domain: &'a AttributeDomain,
    /// Sorted numeric values with their frequencies, for numeric attributes.
    numeric: Option<Vec<(f64, u64)>>,
    max_len: usize,
}

impl<'a> AttributeProfile<'a> {
    fn new(col: &'a Column) -> Self {
        let domain = col.domain();
        let numeric = domain.is_numeric().then(|| {
            let mut counts = vec![0u64; domain.len()];
            for &c in col.codes() {
                counts[c as usize] += 1;
            }
            domain
                .values()
                .iter()
                .map(|v| v.trim().parse::<f64>().unwrap())
                .zip(counts)
                .collect()
        });
        Self {
            name: col.name(),
            domain,
            numeric,
            max_len: domain.values().iter().map(|v| v.chars().count()).max().unwrap_or(0),
        }
    }

    fn applicable(&self, kind: MaskKind, policy: &GeneratorPolicy) -> bool {
        match kind {
            MaskKind::Identity | MaskKind::Suppress => true,
            MaskKind::Bucketize => self.numeric.is_some() && !policy.bucket_quantile_spans.is_empty(),
            MaskKind::BlurNumeric => self.numeric.is_some() && !policy.blur_multiples.is_empty(),
            MaskKind::Generalize => self.domain.len() >= 2 && policy.max_generalize_groups >= 1,
            MaskKind::BlurPrefix => self.max_len >= 2,
        }
    }

    /// Weighted quantile over the observed numeric values.
    fn quantile(&self, p: f64) -> f64 {
        let values = self.numeric.as_ref().expect("numeric attribute");
        let total: u64 = values.iter().map(|(_, c)| c).sum();
        let target = p.clamp(0.0, 1.0) * total as f64;
        let mut acc = 0u64;
        for &(v, c) in values {
            acc += c;
            if acc as f64 >= target {
                return v;
            }
        }
        values.last().unwrap().0
    }

    fn draw(&self, kind: MaskKind, policy: &GeneratorPolicy, rng: &mut impl Rng) -> MaskingFunction {
        match kind {
            MaskKind::Identity => MaskingFunction::Identity,
            MaskKind::Suppress => MaskingFunction::Suppress,
            MaskKind::Bucketize => {
                let span = *policy.bucket_quantile_spans.choose(rng).unwrap();
                let width = self.quantile(0.5 + span / 2.0) - self.quantile(0.5 - span / 2.0);
                let (min, max) = (self.quantile(0.0), self.quantile(1.0));
                let width = if width > 0.0 {
                    width
                } else if max > min {
                    (max - min) / 4.0
                } else {
                    1.0
                };
                MaskingFunction::Bucketize { width, origin: min }
            }
            MaskKind::BlurNumeric => MaskingFunction::BlurNumeric {
                multiple: *policy.blur_multiples.choose(rng).unwrap(),
            },
            MaskKind::BlurPrefix => MaskingFunction::BlurPrefix {
                keep: rng.gen_range(1..self.max_len),
            },
            MaskKind::Generalize => {
                let max_groups = policy.max_generalize_groups.min(self.domain.len()).max(1);
                let groups = if max_groups >= 2 { rng.gen_range(2..=max_groups) } else { 1 };
                match &self.numeric {
                    Some(values) => {
                        // Cut points at distinct interior values, so every range is non-empty.
                        let mut cuts: Vec<f64> = values[1..].iter().map(|(v, _)| *v).collect();
                        cuts.shuffle(rng);
                        cuts.truncate(groups - 1);
                        cuts.sort_by(f64::total_cmp);
                        let mut bounds = vec![None];
                        bounds.extend(cuts.into_iter().map(Some));
                        bounds.push(None);
                        let rules = bounds
                            .windows(2)
                            .map(|w| {
                                let label = match (w[0], w[1]) {
                                    (None, Some(hi)) => format!("<{}", format_number(hi)),
                                    (Some(lo), None) => format!(">={}", format_number(lo)),
                                    (Some(lo), Some(hi)) => {
                                        format!("[{},{})", format_number(lo), format_number(hi))
                                    }
                                    (None, None) => "all".to_string(),
                                };
                                RangeRule::new(w[0], w[1], label)
                            })
                            .collect();
                        MaskingFunction::Generalize(GeneralizeRules::Ranges(rules))
                    }
                    None => {
                        let mut values: Vec<&String> = self.domain.values().iter().collect();
                        values.shuffle(rng);
                        // The first `groups` values seed distinct groups; the rest land anywhere.
                        let mapping = values
                            .into_iter()
                            .enumerate()
                            .map(|(i, v)| {
                                let g = if i < groups { i } else { rng.gen_range(0..groups) };
                                (v.clone(), format!("group-{g}"))
                            })
                            .collect();
                        MaskingFunction::Generalize(GeneralizeRules::Mapping(mapping))
                    }
                }
            }
        }
    }
}

const MAX_ATTEMPTS: u64 = 64;

/// Generates `k` distinct configurations with ids `cfg-000`, `cfg-001`, ...
///
/// Each (configuration, attribute, attempt) triple draws from its own random
/// stream, so the output depends only on the inputs, not on evaluation order.
pub fn generate_configurations(
    d: &Dataset,
    k: usize,
    seed: u64,
    policy: &GeneratorPolicy,
) -> Result<Vec<MaskingConfiguration>> {
    if k == 0 {
        return Err(Error::Generator("k must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&policy.suppression_probability) {
        return Err(Error::Generator("suppression probability must lie in [0, 1]".into()));
    }
    let profiles: Vec<AttributeProfile> = d.features().iter().map(AttributeProfile::new).collect();
    let candidates: Vec<Vec<MaskKind>> = profiles
        .iter()
        .map(|p| {
            let allowed = if p.numeric.is_some() {
                &policy.numeric_kinds
            } else {
                &policy.categorical_kinds
            };
            let mut kinds: Vec<MaskKind> = allowed
                .iter()
                .copied()
                .filter(|&kind| p.applicable(kind, policy))
                .collect();
            kinds.dedup();
            kinds
        })
        .collect();
    for (p, kinds) in profiles.iter().zip(&candidates) {
        if kinds.is_empty() && policy.suppression_probability == 0.0 {
            return Err(Error::Generator(format!(
                "policy allows no masking function for attribute `{}`",
                p.name
            )));
        }
    }

    let width = (k - 1).to_string().len().max(3);
    let mut configs: Vec<MaskingConfiguration> = Vec::with_capacity(k);
    for ci in 0..k {
        let id = format!("cfg-{ci:0width$}");
        let mut attempt = 0;
        let config = loop {
            let assignments = profiles
                .iter()
                .zip(&candidates)
                .enumerate()
                .map(|(ai, (p, kinds))| {
                    let mut r = rng::stream(seed, &[ci as u64, ai as u64, attempt]);
                    let suppress = kinds.is_empty() || r.gen_bool(policy.suppression_probability);
                    let kind = if suppress {
                        MaskKind::Suppress
                    } else {
                        *kinds.choose(&mut r).unwrap()
                    };
                    (p.name.to_string(), p.draw(kind, policy, &mut r))
                })
                .collect();
            let candidate = MaskingConfiguration::new(id.clone(), assignments);
            if !configs.iter().any(|c| c.assignments == candidate.assignments) {
                break candidate;
            }
            attempt += 1;
            if attempt == MAX_ATTEMPTS {
                return Err(Error::Generator(format!(
                    "could not find {k} distinct configurations under this policy (stuck at {id})"
                )));
            }
        };
        configs.push(config);
    }
    Ok(configs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn young_old() -> MaskingFunction {
        MaskingFunction::Generalize(GeneralizeRules::Ranges(vec![
            RangeRule::new(Some(10.0), Some(45.0), "Young"),
            RangeRule::new(Some(45.0), None, "Old"),
        ]))
    }

    fn domain(values: &[&str]) -> AttributeDomain {
        AttributeDomain::new("A", values.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn apply_examples() {
        assert_eq!(young_old().apply("43").unwrap(), "Young");
        assert_eq!(young_old().apply("45").unwrap(), "Old");
        assert!(matches!(young_old().apply("5"), Err(Error::GeneralizeMiss(_))));
        let blur = MaskingFunction::BlurNumeric { multiple: 10.0 };
        assert_eq!(blur.apply("53.5").unwrap(), "50");
        assert_eq!(blur.apply("55").unwrap(), "50");
        assert_eq!(blur.apply("55.01").unwrap(), "60");
        assert_eq!(blur.apply("-3").unwrap(), "0");
        assert_eq!(
            MaskingFunction::BlurPrefix { keep: 3 }.apply("12345").unwrap(),
            "123**"
        );
        assert_eq!(MaskingFunction::BlurPrefix { keep: 9 }.apply("12").unwrap(), "12");
        assert_eq!(MaskingFunction::Identity.apply("v").unwrap(), "v");
        assert_eq!(MaskingFunction::Suppress.apply("v").unwrap(), "*");
        let b = MaskingFunction::Bucketize { width: 5.0, origin: 0.0 };
        assert_eq!(b.apply("30").unwrap(), "[30,35)");
        assert_eq!(b.apply("34.9").unwrap(), "[30,35)");
        assert_eq!(b.apply("-1").unwrap(), "[-5,0)");
        assert!(matches!(b.apply("abc"), Err(Error::NotNumeric { .. })));
    }

    #[test]
    fn inverse_image_examples() {
        let age = domain(&["10", "17", "43", "55", "60", "65", "75", "80"]);
        let inv = inverse_image(&young_old(), &age).unwrap();
        assert_eq!(inv.masked_domain().values(), ["Old", "Young"]);
        assert_eq!(inv.preimage_values("Young").unwrap(), ["10", "17", "43"]);
        assert_eq!(inv.preimage_values("Old").unwrap(), ["55", "60", "65", "75", "80"]);

        let inv = inverse_image(&MaskingFunction::Suppress, &age).unwrap();
        assert_eq!(inv.masked_domain().values(), ["*"]);
        assert_eq!(inv.preimage(0).len(), 8);

        let inv = inverse_image(&MaskingFunction::Identity, &age).unwrap();
        assert!(inv.is_injective());
        assert_eq!(inv, InverseImage::identity(age));
    }

    #[test]
    fn config_json_format() {
        let text = r#"[{"id":"c1","assignments":[
            {"attribute":"Age","kind":"generalize","params":{"ranges":[{"lo":10,"hi":45,"category":"Young"},{"lo":45,"category":"Old"}]}},
            {"attribute":"Weight","kind":"bucketize","params":{"width":5}},
            {"attribute":"Zip","kind":"identity"}]}]"#;
        let cs = parse_configurations(text).unwrap();
        assert_eq!(cs[0].function("Age"), Some(&young_old()));
        assert_eq!(
            cs[0].function("Weight"),
            Some(&MaskingFunction::Bucketize { width: 5.0, origin: 0.0 })
        );
        let again = parse_configurations(&serde_json::to_string(&cs).unwrap()).unwrap();
        assert_eq!(again, cs);

        let unknown = text.replace("\"identity\"", "\"shuffle\"");
        assert!(parse_configurations(&unknown).is_err());
        let bad_width = text.replace("\"width\":5", "\"width\":0");
        assert!(parse_configurations(&bad_width).is_err());
        let dup = format!("[{0},{0}]", &text[1..text.len() - 1]);
        assert!(parse_configurations(&dup).is_err());
    }

    #[test]
    fn config_validation() {
        let c = MaskingConfiguration::identity("c", &["A", "B"]);
        assert!(c.validate_for(&["A", "B"], Some("Y")).is_ok());
        assert!(c.validate_for(&["A", "B", "C"], Some("Y")).is_err());
        assert!(c.validate_for(&["A"], Some("Y")).is_err());
        assert!(c.validate_for(&["A", "B"], Some("B")).is_err());
        let twice = MaskingConfiguration::identity("c", &["A", "A"]);
        assert!(twice.validate_for(&["A"], None).is_err());
    }

    #[test]
    fn masked_marginal_domain_mismatch() {
        let m = MarginalDistribution::from_counts("A", [("1", 2), ("2", 3)]).unwrap();
        let inv = InverseImage::identity(domain(&["1", "3"]));
        assert!(matches!(masked_marginal(&m, &inv), Err(Error::DomainMismatch(_))));
    }
}
