//! Datasets, attribute domains, and frequency distributions.
//!
//! A [`Dataset`] is stored column-wise: every column keeps its
//! [`AttributeDomain`] (distinct observed values in canonical order) and one
//! `u32` code per record. Marginals and joints are plain counting passes over
//! those codes.

use std::collections::HashMap;
use std::io::{Read, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when checking that a table's cells add up to its total.
pub const TOTAL_TOLERANCE: f64 = 1e-6;

fn parse_finite(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Sorts values canonically: numeric ascending when every value parses as a
/// finite number, lexicographic otherwise.
pub fn canonical_sort(values: &mut [String]) {
    let numeric: Option<Vec<f64>> = values.iter().map(|v| parse_finite(v)).collect();
    match numeric {
        Some(_) => values.sort_by(|a, b| {
            let (x, y) = (parse_finite(a).unwrap(), parse_finite(b).unwrap());
            x.total_cmp(&y).then_with(|| a.cmp(b))
        }),
        None => values.sort(),
    }
}

/// Ordered set of the distinct values an attribute takes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DomainRepr", into = "DomainRepr")]
pub struct AttributeDomain {
    name: String,
    values: Vec<String>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct DomainRepr {
    name: String,
    values: Vec<String>,
}

impl TryFrom<DomainRepr> for AttributeDomain {
    type Error = Error;

    fn try_from(r: DomainRepr) -> Result<Self> {
        AttributeDomain::new(r.name, r.values)
    }
}

impl From<AttributeDomain> for DomainRepr {
    fn from(d: AttributeDomain) -> Self {
        DomainRepr {
            name: d.name,
            values: d.values,
        }
    }
}

impl PartialEq for AttributeDomain {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.values == other.values
    }
}

impl AttributeDomain {
    /// Builds a domain from distinct values, putting them in canonical order.
    pub fn new(name: impl Into<String>, mut values: Vec<String>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::InvalidDomain {
                attribute: name,
                reason: "domain is empty".into(),
            });
        }
        canonical_sort(&mut values);
        if let Some(w) = values.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidDomain {
                attribute: name,
                reason: format!("duplicate value `{}`", w[0]),
            });
        }
        let index = values
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        Ok(Self {
            name,
            values,
            index,
        })
    }

    /// Builds a domain from observed values, dropping repeats.
    pub fn from_observed<I, S>(name: impl Into<String>, values: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v: Vec<String> = values.into_iter().map(Into::into).collect();
        v.sort();
        v.dedup();
        Self::new(name, v)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, value: &str) -> Option<usize> {
        self.index.get(value).copied()
    }

    pub fn value(&self, i: usize) -> &str {
        &self.values[i]
    }

    /// True when every value parses as a finite number.
    pub fn is_numeric(&self) -> bool {
        self.values.iter().all(|v| parse_finite(v).is_some())
    }

    /// Same values under a different name.
    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            values: self.values.clone(),
            index: self.index.clone(),
        }
    }

    pub(crate) fn same_values(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

/// One column of a dataset: its domain plus a code per record.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    domain: AttributeDomain,
    codes: Vec<u32>,
}

impl Column {
    /// Encodes raw string values, building the observed domain.
    pub fn from_values<S: AsRef<str>>(name: impl Into<String>, raw: &[S]) -> Result<Self> {
        let mut first_seen: HashMap<&str, u32> = HashMap::new();
        let mut seen_values: Vec<String> = Vec::new();
        let mut provisional = Vec::with_capacity(raw.len());
        for v in raw {
            let v = v.as_ref();
            let next = first_seen.len() as u32;
            let code = *first_seen.entry(v).or_insert_with(|| {
                seen_values.push(v.to_string());
                next
            });
            provisional.push(code);
        }
        let domain = AttributeDomain::new(name, seen_values.clone())?;
        let remap: Vec<u32> = seen_values
            .iter()
            .map(|v| domain.index_of(v).unwrap() as u32)
            .collect();
        let codes = provisional.into_iter().map(|c| remap[c as usize]).collect();
        Ok(Self { domain, codes })
    }

    /// Wraps pre-encoded data. Every code must index into `domain`.
    pub fn from_codes(domain: AttributeDomain, codes: Vec<u32>) -> Result<Self> {
        if let Some(bad) = codes.iter().find(|&&c| c as usize >= domain.len()) {
            return Err(Error::InvalidDomain {
                attribute: domain.name().to_string(),
                reason: format!("code {bad} out of range"),
            });
        }
        Ok(Self { domain, codes })
    }

    pub fn name(&self) -> &str {
        self.domain.name()
    }

    pub fn domain(&self) -> &AttributeDomain {
        &self.domain
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn value(&self, row: usize) -> &str {
        self.domain.value(self.codes[row] as usize)
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

/// Options applied while loading a CSV file.
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Discretize every all-numeric feature column into this many equal-width bins.
    pub bins: Option<usize>,
}

/// A labelled dataset with `m` discrete feature columns and one label column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Column>,
    label: Column,
}

impl Dataset {
    pub fn from_columns(features: Vec<Column>, label: Column) -> Result<Self> {
        if label.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = label.len();
        for c in &features {
            if c.len() != n {
                return Err(Error::InvalidDomain {
                    attribute: c.name().to_string(),
                    reason: format!("column has {} rows, label has {n}", c.len()),
                });
            }
        }
        let mut names: Vec<&str> = features.iter().map(Column::name).collect();
        names.push(label.name());
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidDomain {
                attribute: w[0].to_string(),
                reason: "duplicate column name".into(),
            });
        }
        Ok(Self { features, label })
    }

    /// Builds a dataset from row-major string records.
    pub fn from_records<S: AsRef<str>>(
        attribute_names: &[S],
        label_name: &str,
        records: &[(Vec<String>, String)],
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let m = attribute_names.len();
        for (i, (xs, _)) in records.iter().enumerate() {
            if xs.len() != m {
                return Err(Error::RaggedRow {
                    line: i as u64 + 1,
                    expected: m + 1,
                    found: xs.len() + 1,
                });
            }
        }
        let features = (0..m)
            .map(|j| {
                let raw: Vec<&str> = records.iter().map(|(xs, _)| xs[j].as_str()).collect();
                Column::from_values(attribute_names[j].as_ref(), &raw)
            })
            .collect::<Result<Vec<_>>>()?;
        let labels: Vec<&str> = records.iter().map(|(_, y)| y.as_str()).collect();
        let label = Column::from_values(label_name, &labels)?;
        Self::from_columns(features, label)
    }

    pub fn len(&self) -> usize {
        self.label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.label.is_empty()
    }

    pub fn num_attributes(&self) -> usize {
        self.features.len()
    }

    pub fn attribute_names(&self) -> Vec<&str> {
        self.features.iter().map(Column::name).collect()
    }

    pub fn label_name(&self) -> &str {
        self.label.name()
    }

    pub fn features(&self) -> &[Column] {
        &self.features
    }

    pub fn label(&self) -> &Column {
        &self.label
    }

    pub fn feature(&self, name: &str) -> Result<&Column> {
        self.features
            .iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.features
            .iter()
            .position(|c| c.name() == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    /// A feature or the label column.
    pub fn column(&self, name: &str) -> Result<&Column> {
        if self.label.name() == name {
            Ok(&self.label)
        } else {
            self.feature(name)
        }
    }

    /// Feature values and label of one record.
    pub fn record(&self, row: usize) -> (Vec<&str>, &str) {
        (
            self.features.iter().map(|c| c.value(row)).collect(),
            self.label.value(row),
        )
    }

    /// Writes the dataset as CSV, features first in column order, then the label.
    /// Writes features then the label as CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut order = self.attribute_names();
        order.push(self.label_name());
        self.write_csv_ordered(writer, &order)
    }

    /// Writes the named columns (features or label), in the given order, as CSV.
    pub fn write_csv_ordered<W: Write, S: AsRef<str>>(&self, writer: W, order: &[S]) -> Result<()> {
        let columns: Vec<&Column> = order.iter().map(|n| self.column(n.as_ref())).collect::<Result<_>>()?;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(columns.iter().map(|c| c.name()))?;
        let mut rec: Vec<&str> = Vec::with_capacity(columns.len());
        for row in 0..self.len() {
            rec.clear();
            rec.extend(columns.iter().map(|c| c.value(row)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads a comma-separated file with a header row. The column named
/// `label_name` becomes the label; every other column is a feature, in
/// header order. Values are trimmed and kept as string tokens.
pub fn load_dataset<R: Read>(source: R, label_name: &str, options: &LoadOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::EmptyDataset);
    }
    let label_pos = header
        .iter()
        .position(|h| h == label_name)
        .ok_or_else(|| Error::MissingLabel(label_name.to_string()))?;

    let mut columns: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::RaggedRow {
                line: rec.position().map_or(0, |p| p.line()),
                expected: header.len(),
                found: rec.len(),
            });
        }
        for (col, field) in columns.iter_mut().zip(rec.iter()) {
            col.push(field.to_string());
        }
    }
    if columns[0].is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut features = Vec::with_capacity(header.len() - 1);
    let mut label = None;
    for (i, (name, raw)) in header.iter().zip(columns).enumerate() {
        if i == label_pos {
            label = Some(Column::from_values(name.as_str(), &raw)?);
            continue;
        }
        let raw = match options.bins {
            Some(bins) => discretize_equal_width(raw, bins)?,
            None => raw,
        };
        features.push(Column::from_values(name.as_str(), &raw)?);
    }
    Dataset::from_columns(features, label.expect("label position is within header"))
}

/// Equal-width binning of an all-numeric column; other columns pass through.
/// Bins are labelled `[lo,hi)`, the last one closed as `[lo,hi]`.
pub fn discretize_equal_width(raw: Vec<String>, bins: usize) -> Result<Vec<String>> {
    if bins == 0 {
        return Err(Error::InvalidDomain {
            attribute: String::new(),
            reason: "bin count must be positive".into(),
        });
    }
    let Some(nums) = raw.iter().map(|v| parse_finite(v)).collect::<Option<Vec<f64>>>() else {
        return Ok(raw);
    };
    let lo = nums.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = nums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Ok(vec![format!("[{},{}]", format_number(lo), format_number(hi)); raw.len()]);
    }
    let width = (hi - lo) / bins as f64;
    let label = |b: usize| {
        let a = lo + b as f64 * width;
        if b + 1 == bins {
            format!("[{},{}]", format_number(a), format_number(hi))
        } else {
            format!("[{},{})", format_number(a), format_number(lo + (b + 1) as f64 * width))
        }
    };
    Ok(nums
        .iter()
        .map(|&x| label((((x - lo) / width) as usize).min(bins - 1)))
        .collect())
}

/// Renders a number without trailing zeros and without float noise in the
/// last few digits (`0.30000000000000004` becomes `0.3`).
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.abs() >= 1e15 || x.abs() < 1e-9 {
        return format!("{x}");
    }
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Frequency histogram of one attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalDistribution {
    domain: AttributeDomain,
    counts: Vec<u64>,
    total: u64,
}

impl MarginalDistribution {
    /// `counts[i]` is the frequency of `domain.values()[i]`.
    pub fn new(domain: AttributeDomain, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != domain.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} counts for a domain of {} values",
                counts.len(),
                domain.len()
            )));
        }
        let total = counts.iter().sum();
        Ok(Self {
            domain,
            counts,
            total,
        })
    }

    /// Builds a histogram from a value-to-count map; the domain is the key set.
    pub fn from_counts<S: AsRef<str>>(
        name: impl Into<String>,
        counts: impl IntoIterator<Item = (S, u64)>,
    ) -> Result<Self> {
        let pairs: Vec<(String, u64)> = counts
            .into_iter()
            .map(|(k, v)| (k.as_ref().to_string(), v))
            .collect();
        let domain = AttributeDomain::new(name, pairs.iter().map(|(k, _)| k.clone()).collect())?;
        let mut dense = vec![0; domain.len()];
        for (k, v) in pairs {
            dense[domain.index_of(&k).unwrap()] = v;
        }
        Self::new(domain, dense)
    }

    pub fn domain(&self) -> &AttributeDomain {
        &self.domain
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Frequency of `value`; 0 when the value is outside the domain.
    pub fn count(&self, value: &str) -> u64 {
        self.domain.index_of(value).map_or(0, |i| self.counts[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.domain
            .values()
            .iter()
            .map(String::as_str)
            .zip(self.counts.iter().copied())
    }
}

/// Histogram of a feature or of the label.
pub fn marginal(d: &Dataset, attribute: &str) -> Result<MarginalDistribution> {
    let col = d.column(attribute)?;
    let mut counts = vec![0u64; col.domain().len()];
    for &c in col.codes() {
        counts[c as usize] += 1;
    }
    MarginalDistribution::new(col.domain().clone(), counts)
}

/// Dense attribute-by-label contingency table with real-valued cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointRepr", into = "JointRepr")]
pub struct JointDistribution {
    rows: AttributeDomain,
    cols: AttributeDomain,
    cells: Vec<f64>,
    total: f64,
}

#[derive(Serialize, Deserialize)]
struct JointRepr {
    row_domain: DomainRepr,
    col_domain: DomainRepr,
    total: f64,
    cells: Vec<f64>,
}

impl TryFrom<JointRepr> for JointDistribution {
    type Error = Error;

    /// Cells are given row-major in the listed value order, which need not be
    /// canonical; they are permuted into canonical order here.
    fn try_from(r: JointRepr) -> Result<Self> {
        let (nr, nc) = (r.row_domain.values.len(), r.col_domain.values.len());
        if r.cells.len() != nr * nc {
            return Err(Error::InvalidDistribution(format!(
                "{} cells for a {nr}x{nc} table",
                r.cells.len()
            )));
        }
        let rows = AttributeDomain::new(r.row_domain.name, r.row_domain.values.clone())?;
        let cols = AttributeDomain::new(r.col_domain.name, r.col_domain.values.clone())?;
        let mut cells = vec![0.0; nr * nc];
        for (i, rv) in r.row_domain.values.iter().enumerate() {
            let ri = rows.index_of(rv).unwrap();
            for (j, cv) in r.col_domain.values.iter().enumerate() {
                cells[ri * nc + cols.index_of(cv).unwrap()] = r.cells[i * nc + j];
            }
        }
        let j = JointDistribution::new(rows, cols, cells)?;
        if (j.total - r.total).abs() > TOTAL_TOLERANCE * r.total.abs().max(1.0) {
            return Err(Error::InvalidDistribution(format!(
                "declared total {} but cells sum to {}",
                r.total, j.total
            )));
        }
        Ok(j)
    }
}

impl From<JointDistribution> for JointRepr {
    fn from(j: JointDistribution) -> Self {
        JointRepr {
            row_domain: j.rows.into(),
            col_domain: j.cols.into(),
            total: j.total,
            cells: j.cells,
        }
    }
}

impl JointDistribution {
    /// `cells` is row-major with `rows.len() * cols.len()` finite, non-negative entries.
    pub fn new(rows: AttributeDomain, cols: AttributeDomain, cells: Vec<f64>) -> Result<Self> {
        if cells.len() != rows.len() * cols.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} cells for a {}x{} table",
                cells.len(),
                rows.len(),
                cols.len()
            )));
        }
        if let Some(bad) = cells.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidDistribution(format!("invalid cell value {bad}")));
        }
        let total = cells.iter().sum();
        Ok(Self {
            rows,
            cols,
            cells,
            total,
        })
    }

    /// Table from nested rows, mainly for tests and fixtures.
    pub fn from_rows(rows: AttributeDomain, cols: AttributeDomain, table: &[Vec<f64>]) -> Result<Self> {
        let cells = table.iter().flatten().copied().collect();
        Self::new(rows, cols, cells)
    }

    pub fn row_domain(&self) -> &AttributeDomain {
        &self.rows
    }

    pub fn col_domain(&self) -> &AttributeDomain {
        &self.cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.cols.len() + col]
    }

    /// Cell addressed by value; 0 when either value is outside the domains.
    pub fn get_by_value(&self, row: &str, col: &str) -> f64 {
        match (self.rows.index_of(row), self.cols.index_of(col)) {
            (Some(r), Some(c)) => self.get(r, c),
            _ => 0.0,
        }
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let nc = self.cols.len();
        &self.cells[row * nc..(row + 1) * nc]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.cells
            .chunks_exact(self.cols.len())
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols.len()];
        for r in self.cells.chunks_exact(self.cols.len()) {
            for (s, v) in sums.iter_mut().zip(r) {
                *s += v;
            }
        }
        sums
    }

    /// True when every cell is a whole number (within `tol`).
    pub fn is_integral(&self, tol: f64) -> bool {
        self.cells.iter().all(|c| (c - c.round()).abs() <= tol)
    }

    /// Multiplies every cell by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.rows.clone(),
            self.cols.clone(),
            self.cells.iter().map(|v| v * c).collect(),
        )
    }

    /// Replaces the cells, keeping both domains.
    pub fn with_cells(&self, cells: Vec<f64>) -> Result<Self> {
        Self::new(self.rows.clone(), self.cols.clone(), cells)
    }

    /// Row marginal as an integral histogram; fails on fractional row sums.
    pub fn row_marginal(&self) -> Result<MarginalDistribution> {
        let counts = self
            .row_sums()
            .into_iter()
            .map(|s| {
                if (s - s.round()).abs() > 1e-9 {
                    Err(Error::NonIntegral)
                } else {
                    Ok(s.round() as u64)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        MarginalDistribution::new(self.rows.clone(), counts)
    }
}

/// Attribute-by-label contingency table of a dataset.
pub fn joint(d: &Dataset, attribute: &str) -> Result<JointDistribution> {
    let col = d.feature(attribute)?;
    joint_of_column(col, d.label())
}

pub(crate) fn joint_of_column(col: &Column, label: &Column) -> Result<JointDistribution> {
    let nc = label.domain().len();
    let mut counts = vec![0u64; col.domain().len() * nc];
    for (&a, &y) in col.codes().iter().zip(label.codes()) {
        counts[a as usize * nc + y as usize] += 1;
    }
    JointDistribution::new(
        col.domain().clone(),
        label.domain().clone(),
        counts.into_iter().map(|c| c as f64).collect(),
    )
}

/// Per-attribute histograms as written to and read from a summary file:
/// `{"<attribute>": {"<value>": count, ...}, ..., "total": N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub marginals: Vec<MarginalDistribution>,
    pub total: u64,
}

impl Summary {
    /// Histograms of every feature followed by the label.
    pub fn of_dataset(d: &Dataset) -> Result<Self> {
        let mut marginals = d
            .attribute_names()
            .into_iter()
            .map(|a| marginal(d, a))
            .collect::<Result<Vec<_>>>()?;
        marginals.push(marginal(d, d.label_name())?);
        Ok(Self {
            marginals,
            total: d.len() as u64,
        })
    }

    pub fn get(&self, attribute: &str) -> Option<&MarginalDistribution> {
        self.marginals.iter().find(|m| m.domain().name() == attribute)
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        let mut obj = serde_json::Map::new();
        for m in &self.marginals {
            if m.domain().name() == "total" {
                return Err(Error::InvalidDistribution(
                    "an attribute named `total` collides with the summary total field".into(),
                ));
            }
            let counts: serde_json::Map<String, serde_json::Value> =
                m.iter().map(|(v, c)| (v.to_string(), c.into())).collect();
            obj.insert(m.domain().name().to_string(), counts.into());
        }
        obj.insert("total".into(), self.total.into());
        Ok(obj.into())
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::InvalidDistribution("summary must be a JSON object".into()))?;
        let total = obj
            .get("total")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::InvalidDistribution("summary lacks an integer `total`".into()))?;
        let mut marginals = Vec::new();
        for (name, counts) in obj.iter().filter(|(k, _)| k.as_str() != "total") {
            let counts: IndexMap<String, u64> = serde_json::from_value(counts.clone())?;
            let m = MarginalDistribution::from_counts(name.as_str(), counts)?;
            if m.total() != total {
                return Err(Error::InvalidDistribution(format!(
                    "histogram of `{name}` sums to {} but total is {total}",
                    m.total()
                )));
            }
            marginals.push(m);
        }
        Ok(Self { marginals, total })
    }
}
