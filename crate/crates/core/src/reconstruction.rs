//! Reconstruction of an attribute-label joint from its masked view.
//!
//! The unknown table `F(A, Y)` is constrained by:
//!
//! - row targets, the attribute's 1D histogram (available in the with-1d case);
//! - block targets, one per (masked value, label) pair, read off the masked
//!   joint: the cells `{(a, y) : a in preimage(a')}` must add up to
//!   `F(a', y)`;
//! - group targets per masked value, implied by the block targets.
//!
//! Starting from the uniform table, iterative proportional fitting alternates
//! block scaling and row scaling until every constraint holds within
//! tolerance. The fractional fit is then rounded cell by cell at random, up
//! with probability equal to the fractional part.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{AttributeDomain, JointDistribution, MarginalDistribution};
use crate::error::{Error, Result};
use crate::masking::InverseImage;
use crate::rng;

/// Whether the attribute's 1D histogram takes part in the reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    #[serde(rename = "with-1d")]
    WithMarginals,
    #[serde(rename = "no-1d")]
    NoMarginals,
}

impl Case {
    pub fn as_str(self) -> &'static str {
        match self {
            Case::WithMarginals => "with-1d",
            Case::NoMarginals => "no-1d",
        }
    }
}

impl std::str::FromStr for Case {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "with-1d" => Ok(Case::WithMarginals),
            "no-1d" => Ok(Case::NoMarginals),
            other => Err(format!("unknown case `{other}` (expected with-1d or no-1d)")),
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpfSettings {
    /// Convergence threshold on the max constraint residual, relative to N.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub rounding_seed: u64,
}

impl Default for IpfSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 1000,
            rounding_seed: 0,
        }
    }
}

impl IpfSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return Err(Error::InvalidSettings(format!(
                "tolerance must be non-negative, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidSettings("max-iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(self, rounding_seed: u64) -> Self {
        Self {
            rounding_seed,
            ..self
        }
    }
}

/// Targets that a reconstruction of one attribute must meet.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    inverse: InverseImage,
    label: AttributeDomain,
    /// Row-major (masked value, label) targets, rows in the inverse's masked order.
    blocks: Vec<f64>,
    groups: Vec<f64>,
    rows: Option<Vec<f64>>,
    total: f64,
}

impl ConstraintSet {
    /// Reads block targets from `masked_joint` and, when given, row targets from
    /// `marginal`.
    ///
    /// The masked joint's rows are aligned to the inverse image's masked domain
    /// by value; masked values absent from the joint get zero targets. The
    /// histogram is aligned to the original domain the same way. A histogram
    /// whose mass under some masked value differs from that value's masked
    /// total is rejected as infeasible.
    pub fn new(
        masked_joint: &JointDistribution,
        inverse: &InverseImage,
        marginal: Option<&MarginalDistribution>,
    ) -> Result<Self> {
        let attribute = inverse.original_domain().name().to_string();
        let masked_dom = inverse.masked_domain();
        let nc = masked_joint.n_cols();
        let mut blocks = vec![0.0; masked_dom.len() * nc];
        for (r, value) in masked_joint.row_domain().values().iter().enumerate() {
            let Some(g) = masked_dom.index_of(value) else {
                return Err(Error::DomainMismatch(format!(
                    "masked value `{value}` of `{attribute}` is not produced by the masking function"
                )));
            };
            blocks[g * nc..(g + 1) * nc].copy_from_slice(masked_joint.row(r));
        }
        let groups: Vec<f64> = blocks.chunks_exact(nc).map(|r| r.iter().sum()).collect();
        let total = masked_joint.total();
        if total <= 0.0 {
            return Err(Error::ZeroTotal);
        }

        let rows = match marginal {
            None => None,
            Some(m) => {
                let orig = inverse.original_domain();
                let mut rows = vec![0.0; orig.len()];
                for (value, count) in m.iter() {
                    let i = orig.index_of(value).ok_or_else(|| {
                        Error::DomainMismatch(format!(
                            "histogram value `{value}` is outside the domain of `{attribute}`"
                        ))
                    })?;
                    rows[i] = count as f64;
                }
                let slack = 1e-9 * total.max(1.0);
                for (g, &target) in groups.iter().enumerate() {
                    let mass: f64 = inverse.preimage(g).iter().map(|&i| rows[i]).sum();
                    if (mass - target).abs() > slack {
                        return Err(Error::Infeasible {
                            attribute,
                            masked_value: masked_dom.value(g).to_string(),
                            marginal: mass,
                            masked: target,
                        });
                    }
                }
                Some(rows)
            }
        };

        Ok(Self {
            inverse: inverse.clone(),
            label: masked_joint.col_domain().clone(),
            blocks,
            groups,
            rows,
            total,
        })
    }

    pub fn case(&self) -> Case {
        if self.rows.is_some() {
            Case::WithMarginals
        } else {
            Case::NoMarginals
        }
    }

    pub fn inverse(&self) -> &InverseImage {
        &self.inverse
    }

    pub fn label_domain(&self) -> &AttributeDomain {
        &self.label
    }

    pub fn block_target(&self, group: usize, label: usize) -> f64 {
        self.blocks[group * self.label.len() + label]
    }

    pub fn group_targets(&self) -> &[f64] {
        &self.groups
    }

    pub fn row_targets(&self) -> Option<&[f64]> {
        self.rows.as_deref()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    fn attribute(&self) -> &str {
        self.inverse.original_domain().name()
    }

    /// Max over block and row constraints of |achieved - target| / N.
    pub fn residual(&self, table: &JointDistribution) -> f64 {
        self.block_residual(table.cells())
            .max(self.row_residual(table.cells()))
    }

    fn block_residual(&self, cells: &[f64]) -> f64 {
        let nc = self.label.len();
        let mut worst: f64 = 0.0;
        for (g, pre) in self.inverse.preimages().iter().enumerate() {
            for y in 0..nc {
                let s: f64 = pre.iter().map(|&a| cells[a * nc + y]).sum();
                worst = worst.max((s - self.blocks[g * nc + y]).abs());
            }
        }
        worst / self.total
    }

    fn row_residual(&self, cells: &[f64]) -> f64 {
        let Some(rows) = &self.rows else { return 0.0 };
        let nc = self.label.len();
        rows.iter()
            .zip(cells.chunks_exact(nc))
            .map(|(t, r)| (r.iter().sum::<f64>() - t).abs())
            .fold(0.0, f64::max)
            / self.total
    }
}

/// Outcome of one reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub fractional: JointDistribution,
    pub integral: JointDistribution,
    pub case: Case,
    /// Sweeps performed.
    pub iterations: usize,
    /// Max constraint residual of `fractional`, relative to N.
    pub residual: f64,
    pub converged: bool,
    pub seed: u64,
    /// Residual after each sweep.
    pub history: Vec<f64>,
}

/// Serializable form: the integral table plus how it was obtained.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionMetadata {
    pub case: Case,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructedJoint {
    #[serde(flatten)]
    pub joint: JointDistribution,
    pub metadata: ReconstructionMetadata,
}

impl Reconstruction {
    pub fn metadata(&self) -> ReconstructionMetadata {
        ReconstructionMetadata {
            case: self.case,
            iterations: self.iterations,
            residual: self.residual,
            converged: self.converged,
            seed: self.seed,
        }
    }

    pub fn to_serializable(&self) -> ReconstructedJoint {
        ReconstructedJoint {
            joint: self.integral.clone(),
            metadata: self.metadata(),
        }
    }
}

/// The table with `n` spread evenly over every cell.
pub fn uniform_init(rows: &AttributeDomain, cols: &AttributeDomain, n: f64) -> Result<JointDistribution> {
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::InvalidDomain {
            attribute: rows.name().to_string(),
            reason: "empty domain".into(),
        });
    }
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::ZeroTotal);
    }
    let cells = rows.len() * cols.len();
    JointDistribution::new(rows.clone(), cols.clone(), vec![n / cells as f64; cells])
}

/// Fits the constraints by iterative proportional fitting, then rounds.
///
/// Each sweep first rescales every block to its target, then (with-1d only)
/// every row to its histogram count. Zero targets zero their cells before the
/// first sweep. Iteration stops once the residual is within tolerance or after
/// `max_iterations` sweeps, in which case the best iterate is returned with
/// `converged = false`.
pub fn reconstruct(constraints: &ConstraintSet, settings: &IpfSettings) -> Result<Reconstruction> {
    settings.validate()?;
    let inverse = &constraints.inverse;
    let nc = constraints.label.len();
    let nr = inverse.original_domain().len();
    let table = uniform_init(inverse.original_domain(), &constraints.label, constraints.total)?;
    let mut cells = table.cells().to_vec();

    for (g, pre) in inverse.preimages().iter().enumerate() {
        for y in 0..nc {
            if constraints.blocks[g * nc + y] == 0.0 {
                for &a in pre {
                    cells[a * nc + y] = 0.0;
                }
            }
        }
    }
    if let Some(rows) = &constraints.rows {
        for (a, &t) in rows.iter().enumerate() {
            if t == 0.0 {
                cells[a * nc..(a + 1) * nc].fill(0.0);
            }
        }
    }

    let mut history = Vec::new();
    let mut best = (f64::INFINITY, cells.clone());
    let mut converged = false;
    for _ in 0..settings.max_iterations {
        scale_blocks(constraints, &mut cells)?;
        if let Some(rows) = &constraints.rows {
            scale_rows(constraints.attribute(), rows, nc, &mut cells)?;
        }
        let residual = constraints
            .block_residual(&cells)
            .max(constraints.row_residual(&cells));
        history.push(residual);
        if residual < best.0 {
            best = (residual, cells.clone());
        }
        if residual <= settings.tolerance {
            converged = true;
            break;
        }
    }
    debug_assert_eq!(best.1.len(), nr * nc);

    let fractional = table.with_cells(best.1)?;
    let integral = randomized_round(&fractional, settings.rounding_seed)?;
    Ok(Reconstruction {
        fractional,
        integral,
        case: constraints.case(),
        iterations: history.len(),
        residual: best.0,
        converged,
        seed: settings.rounding_seed,
        history,
    })
}

fn scale_blocks(c: &ConstraintSet, cells: &mut [f64]) -> Result<()> {
    let nc = c.label.len();
    for (g, pre) in c.inverse.preimages().iter().enumerate() {
        for y in 0..nc {
            let target = c.blocks[g * nc + y];
            if target == 0.0 {
                continue;
            }
            let current: f64 = pre.iter().map(|&a| cells[a * nc + y]).sum();
            if current <= 0.0 {
                return Err(Error::Degenerate {
                    attribute: c.attribute().to_string(),
                    what: format!(
                        "block ({}, {})",
                        c.inverse.masked_domain().value(g),
                        c.label.value(y)
                    ),
                    target,
                });
            }
            let factor = target / current;
            for &a in pre {
                cells[a * nc + y] *= factor;
            }
        }
    }
    Ok(())
}

fn scale_rows(attribute: &str, rows: &[f64], nc: usize, cells: &mut [f64]) -> Result<()> {
    for (a, (&target, row)) in rows.iter().zip(cells.chunks_exact_mut(nc)).enumerate() {
        if target == 0.0 {
            continue;
        }
        let current: f64 = row.iter().sum();
        if current <= 0.0 {
            return Err(Error::Degenerate {
                attribute: attribute.to_string(),
                what: format!("row {a}"),
                target,
            });
        }
        let factor = target / current;
        row.iter_mut().for_each(|v| *v *= factor);
    }
    Ok(())
}

/// Rounds every cell independently to its floor or ceiling, up with
/// probability equal to the fractional part. Cell `i` draws from stream `i`
/// under `seed`. The grand total is not repaired.
pub fn randomized_round(j: &JointDistribution, seed: u64) -> Result<JointDistribution> {
    let cells = j
        .cells()
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let floor = c.floor();
            let frac = c - floor;
            if frac == 0.0 {
                floor
            } else if rng::stream(seed, &[i as u64]).gen::<f64>() < frac {
                floor + 1.0
            } else {
                floor
            }
        })
        .collect();
    j.with_cells(cells)
}

/// Sampling baseline: every unit of masked count in cell (a', y) is assigned
/// to an original value drawn uniformly, with replacement, from the preimage
/// of a'.
pub fn sampling_reconstruct(
    masked_joint: &JointDistribution,
    inverse: &InverseImage,
    seed: u64,
) -> Result<JointDistribution> {
    if !masked_joint.row_domain().same_values(inverse.masked_domain()) {
        return Err(Error::DomainMismatch(format!(
            "masked joint rows of `{}` do not match the inverse image's masked domain",
            masked_joint.row_domain().name()
        )));
    }
    if !masked_joint.is_integral(1e-9) {
        return Err(Error::NonIntegral);
    }
    let nc = masked_joint.n_cols();
    let mut cells = vec![0.0; inverse.original_domain().len() * nc];
    for g in 0..masked_joint.n_rows() {
        let pre = inverse.preimage(g);
        for y in 0..nc {
            let count = masked_joint.get(g, y).round() as u64;
            if pre.len() == 1 {
                cells[pre[0] * nc + y] += count as f64;
                continue;
            }
            let mut r = rng::stream(seed, &[g as u64, y as u64]);
            for _ in 0..count {
                let a = pre[r.gen_range(0..pre.len())];
                cells[a * nc + y] += 1.0;
            }
        }
    }
    JointDistribution::new(
        inverse.original_domain().clone(),
        masked_joint.col_domain().clone(),
        cells,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masking::{aggregate_joint, inverse_image, GeneralizeRules, MaskingFunction, RangeRule};

    fn dom(name: &str, values: &[&str]) -> AttributeDomain {
        AttributeDomain::new(name, values.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn age() -> AttributeDomain {
        dom("Age", &["10", "17", "43", "55", "60", "65", "75", "80"])
    }

    fn health() -> AttributeDomain {
        dom("Health", &["VP", "P", "M", "G", "VG"])
    }

    /// The running-example Age x Health counts in canonical label order (G, M, P, VG, VP).
    fn table2() -> JointDistribution {
        let rows_vp_to_vg = [
            [0., 0., 0., 1., 3.],
            [0., 0., 0., 4., 8.],
            [0., 0., 1., 2., 1.],
            [2., 8., 10., 8., 2.],
            [4., 6., 9., 1., 0.],
            [2., 3., 5., 0., 0.],
            [2., 5., 3., 0., 0.],
            [5., 3., 2., 0., 0.],
        ];
        let h = health();
        let order = ["VP", "P", "M", "G", "VG"];
        let mut cells = vec![0.0; 40];
        for (r, row) in rows_vp_to_vg.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                cells[r * 5 + h.index_of(order[k]).unwrap()] = *v;
            }
        }
        JointDistribution::new(age(), h, cells).unwrap()
    }

    fn young_old_inverse() -> InverseImage {
        let f = MaskingFunction::Generalize(GeneralizeRules::Ranges(vec![
            RangeRule::new(Some(10.0), Some(45.0), "Young"),
            RangeRule::new(Some(45.0), None, "Old"),
        ]));
        inverse_image(&f, &age()).unwrap()
    }

    #[test]
    fn uniform_init_examples() {
        let u = uniform_init(&dom("A", &["a", "b", "c", "d"]), &health(), 100.0).unwrap();
        assert!(u.cells().iter().all(|&c| c == 5.0));
        let u = uniform_init(&dom("A", &["a"]), &dom("Y", &["y"]), 7.0).unwrap();
        assert_eq!(u.cells(), [7.0]);
        let u = uniform_init(&age(), &health(), 100.0).unwrap();
        assert!(u.cells().iter().all(|&c| c == 2.5));
        assert_eq!(u.total(), 100.0);
        assert!(uniform_init(&age(), &health(), 0.0).is_err());
    }

    #[test]
    fn case_two_single_sweep_block_uniform() {
        let inv = young_old_inverse();
        let masked = aggregate_joint(&table2(), &inv).unwrap();
        let c = ConstraintSet::new(&masked, &inv, None).unwrap();
        let r = reconstruct(&c, &IpfSettings::default()).unwrap();
        assert_eq!(r.case, Case::NoMarginals);
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        assert!(r.residual <= 1e-15);
        let f = &r.fractional;
        for a in ["10", "17", "43"] {
            assert!((f.get_by_value(a, "VG") - 4.0).abs() < 1e-12);
        }
        for a in ["55", "60", "65", "75", "80"] {
            assert!((f.get_by_value(a, "M") - 5.8).abs() < 1e-12);
        }
    }

    #[test]
    fn case_one_identity_mask_is_exact() {
        let t = table2();
        let inv = InverseImage::identity(age());
        let m = t.row_marginal().unwrap();
        let c = ConstraintSet::new(&t, &inv, Some(&m)).unwrap();
        let r = reconstruct(&c, &IpfSettings::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.fractional.cells(), t.cells());
        assert_eq!(r.integral.cells(), t.cells());
    }

    #[test]
    fn case_one_running_example_residuals() {
        let t = table2();
        let inv = young_old_inverse();
        let masked = aggregate_joint(&t, &inv).unwrap();
        let m = t.row_marginal().unwrap();
        let c = ConstraintSet::new(&masked, &inv, Some(&m)).unwrap();
        let r = reconstruct(&c, &IpfSettings::default()).unwrap();
        assert!(r.converged);
        let rows = r.fractional.row_sums();
        for (got, want) in rows.iter().zip([4., 12., 4., 30., 20., 10., 10., 10.]) {
            assert!((got - want).abs() <= 1e-9 * 100.0);
        }
        let back = aggregate_joint(&r.fractional, &inv).unwrap();
        for (got, want) in back.cells().iter().zip(masked.cells()) {
            assert!((got - want).abs() <= 1e-9 * 100.0);
        }
    }

    #[test]
    fn infeasible_marginal_names_masked_value() {
        let t = table2();
        let inv = young_old_inverse();
        let masked = aggregate_joint(&t, &inv).unwrap();
        let m = MarginalDistribution::from_counts(
            "Age",
            [("10", 5), ("17", 12), ("43", 4), ("55", 29), ("60", 20), ("65", 10), ("75", 10), ("80", 10)],
        )
        .unwrap();
        match ConstraintSet::new(&masked, &inv, Some(&m)) {
            Err(Error::Infeasible { masked_value, .. }) => assert_eq!(masked_value, "Old"),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn zero_targets_stay_zero() {
        let inv = young_old_inverse();
        let masked = aggregate_joint(&table2(), &inv).unwrap();
        let c = ConstraintSet::new(&masked, &inv, None).unwrap();
        let r = reconstruct(&c, &IpfSettings::default()).unwrap();
        for a in ["10", "17", "43"] {
            assert_eq!(r.fractional.get_by_value(a, "VP"), 0.0);
            assert_eq!(r.integral.get_by_value(a, "P"), 0.0);
        }
    }

    #[test]
    fn masked_values_missing_from_joint_get_zero_targets() {
        let inv = young_old_inverse();
        let masked = JointDistribution::new(dom("Age", &["Old"]), dom("Y", &["n", "y"]), vec![3.0, 5.0]).unwrap();
        let c = ConstraintSet::new(&masked, &inv, None).unwrap();
        let r = reconstruct(&c, &IpfSettings::default()).unwrap();
        assert_eq!(r.fractional.get_by_value("10", "y"), 0.0);
        assert!((r.fractional.get_by_value("80", "y") - 1.0).abs() < 1e-12);

        let stray = JointDistribution::new(dom("Age", &["Teen"]), dom("Y", &["n"]), vec![3.0]).unwrap();
        assert!(matches!(ConstraintSet::new(&stray, &inv, None), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn settings_validation() {
        let inv = InverseImage::identity(age());
        let c = ConstraintSet::new(&table2(), &inv, None).unwrap();
        let bad = IpfSettings { tolerance: -1e-9, ..IpfSettings::default() };
        assert!(reconstruct(&c, &bad).is_err());
        let exact = IpfSettings { tolerance: 0.0, ..IpfSettings::default() };
        assert!(reconstruct(&c, &exact).unwrap().converged);
        let bad = IpfSettings { max_iterations: 0, ..IpfSettings::default() };
        assert!(reconstruct(&c, &bad).is_err());
    }

    #[test]
    fn rounding_is_floor_or_ceiling_and_seeded() {
        let j = JointDistribution::new(dom("A", &["a", "b"]), dom("Y", &["y", "z"]), vec![0.25, 1.5, 2.0, 3.75])
            .unwrap();
        let a = randomized_round(&j, 11).unwrap();
        let b = randomized_round(&j, 11).unwrap();
        assert_eq!(a, b);
        for (r, f) in a.cells().iter().zip(j.cells()) {
            assert!(*r == f.floor() || *r == f.ceil());
        }
        assert_eq!(a.get(1, 0), 2.0);
    }

    #[test]
    fn sampling_examples() {
        let inv = young_old_inverse();
        let masked = aggregate_joint(&table2(), &inv).unwrap();
        let s = sampling_reconstruct(&masked, &inv, 3).unwrap();
        assert_eq!(s, sampling_reconstruct(&masked, &inv, 3).unwrap());
        assert_eq!(s.total(), 100.0);
        assert_eq!(s.col_sums(), masked.col_sums());
        let vp = s.col_domain().index_of("VP").unwrap();
        let old_vp: f64 = ["55", "60", "65", "75", "80"]
            .iter()
            .map(|a| s.get(s.row_domain().index_of(a).unwrap(), vp))
            .sum();
        assert_eq!(old_vp, 15.0);

        let id = InverseImage::identity(age());
        assert_eq!(sampling_reconstruct(&table2(), &id, 9).unwrap(), table2());
    }

    #[test]
    fn metadata_serializes_with_joint() {
        let inv = young_old_inverse();
        let masked = aggregate_joint(&table2(), &inv).unwrap();
        let c = ConstraintSet::new(&masked, &inv, None).unwrap();
        let r = reconstruct(&c, &IpfSettings::default().with_seed(4)).unwrap();
        let v = serde_json::to_value(r.to_serializable()).unwrap();
        assert_eq!(v["metadata"]["case"], "no-1d");
        assert_eq!(v["metadata"]["iterations"], 1);
        assert_eq!(v["metadata"]["seed"], 4);
        assert_eq!(v["cells"].as_array().unwrap().len(), 40);
    }
}
