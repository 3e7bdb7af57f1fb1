//! Masking-configuration advisor for tabular ML datasets.
//!
//! Given a set of candidate masking configurations, the advisor estimates how
//! much predictive utility each one destroys without training any downstream
//! model. For every (configuration, attribute) pair the original
//! attribute-label joint distribution is reconstructed from the masked joint
//! (and, when available, the attribute's 1D histogram) by iterative
//! proportional fitting. A correlation measure is then compared between the
//! reconstruction and the masked joint, and the configuration with the smallest
//! mean deviation wins.
//!
//! Module map:
//!
//! - [`data`]: datasets, domains, marginal and joint distributions.
//! - [`masking`]: masking functions, configurations, inverse images and masked
//!   distributions.
//! - [`reconstruction`]: constraint sets, IPF reconstruction, randomized
//!   rounding, and the sampling baseline.
//! - [`utility`]: mutual information, chi-square, g3 and deviation.
//! - [`advisor`]: configuration selection over a configuration set.
//! - [`evaluation`]: TVD, synthetic data, and the benchmark harness.

pub mod advisor;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod masking;
pub mod reconstruction;
pub mod rng;
pub mod utility;

pub use advisor::{advise, advise_with, AdvisoryReport, AttributeInput, Case, ConfigInputs};
pub use data::{AttributeDomain, Dataset, JointDistribution, LoadOptions, MarginalDistribution};
pub use error::{Error, Result};
pub use masking::{InverseImage, MaskingConfiguration, MaskingFunction};
pub use reconstruction::{ConstraintSet, IpfSettings, Reconstruction};
pub use utility::Measure;
