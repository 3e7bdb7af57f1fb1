//! Model-agnostic predictive-utility measures over attribute-label joints.

use serde::{Deserialize, Serialize};

use crate::data::JointDistribution;
use crate::error::{Error, Result};
use crate::reconstruction::Reconstruction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    MutualInformation,
    ChiSquare,
    G3,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::MutualInformation, Measure::ChiSquare, Measure::G3];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::MutualInformation => "mutual-information",
            Measure::ChiSquare => "chi-square",
            Measure::G3 => "g3",
        }
    }

    /// Short name used on the command line.
    pub fn flag(self) -> &'static str {
        match self {
            Measure::MutualInformation => "mi",
            Measure::ChiSquare => "chi2",
            Measure::G3 => "g3",
        }
    }

    /// g3 counts records, so it is evaluated on integral tables.
    pub fn needs_integral(self) -> bool {
        self == Measure::G3
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mi" | "mutual-information" => Ok(Measure::MutualInformation),
            "chi2" | "chi-square" => Ok(Measure::ChiSquare),
            "g3" => Ok(Measure::G3),
            other => Err(format!("unknown measure `{other}` (expected mi, chi2 or g3)")),
        }
    }
}

fn check_total(j: &JointDistribution) -> Result<f64> {
    let n = j.total();
    if n > 0.0 {
        Ok(n)
    } else {
        Err(Error::ZeroTotal)
    }
}

/// Mutual information in bits. Empty cells contribute nothing.
pub fn mutual_information(j: &JointDistribution) -> Result<f64> {
    let n = check_total(j)?;
    let rows = j.row_sums();
    let cols = j.col_sums();
    let mut mi = 0.0;
    for (r, &rs) in rows.iter().enumerate() {
        for (c, &cs) in cols.iter().enumerate() {
            let o = j.get(r, c);
            if o > 0.0 {
                // p(a,y) / (p(a) p(y)) = o * n / (rs * cs)
                mi += (o / n) * (o * n / (rs * cs)).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Pearson's chi-square with expected counts from the table's own marginals.
/// Cells with zero expectation are skipped.
pub fn chi_square(j: &JointDistribution) -> Result<f64> {
    let n = check_total(j)?;
    let rows = j.row_sums();
    let cols = j.col_sums();
    let mut chi = 0.0;
    for (r, &rs) in rows.iter().enumerate() {
        for (c, &cs) in cols.iter().enumerate() {
            let e = rs * cs / n;
            if e > 0.0 {
                let d = j.get(r, c) - e;
                chi += d * d / e;
            }
        }
    }
    Ok(chi)
}

/// Fraction of records to delete so that the attribute functionally
/// determines the label: `(N - sum over rows of the row max) / N`.
pub fn g3(j: &JointDistribution) -> Result<f64> {
    let n = check_total(j)?;
    if !j.is_integral(1e-9) {
        return Err(Error::NonIntegral);
    }
    let kept: f64 = (0..j.n_rows())
        .map(|r| j.row(r).iter().copied().fold(0.0, f64::max))
        .sum();
    Ok((n - kept) / n)
}

/// Dispatches to the requested measure. g3 rejects fractional tables.
pub fn utility(measure: Measure, j: &JointDistribution) -> Result<f64> {
    match measure {
        Measure::MutualInformation => mutual_information(j),
        Measure::ChiSquare => chi_square(j),
        Measure::G3 => g3(j),
    }
}

/// Utility of a reconstruction, measured on its rounded integral table.
pub fn reconstruction_utility(measure: Measure, reconstruction: &Reconstruction) -> Result<f64> {
    utility(measure, &reconstruction.integral)
}

/// Relative size below which a utility difference is treated as rounding noise.
pub const DEVIATION_NOISE: f64 = 1e-9;

/// `|a - b|`, or exactly 0 when the difference is floating-point noise
/// relative to the operands.
pub fn absolute_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d <= DEVIATION_NOISE * a.abs().max(b.abs()).max(1.0) {
        0.0
    } else {
        d
    }
}

/// `|utility(reconstructed) - utility(masked)|`. Both tables must share the
/// label domain.
pub fn deviation(measure: Measure, reconstructed: &JointDistribution, masked: &JointDistribution) -> Result<f64> {
    if !reconstructed.col_domain().same_values(masked.col_domain()) {
        return Err(Error::DomainMismatch("tables have different label domains".into()));
    }
    Ok(absolute_difference(utility(measure, reconstructed)?, utility(measure, masked)?))
}
