//! Run manifests written next to every command's output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use mask_advisor::{Case, IpfSettings, Measure};

/// What a run consumed and produced. Thread counts and wall times are left
/// out so that reruns produce the same manifest.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub inputs: BTreeMap<&'static str, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<Measure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<Case>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ipf: Option<IpfManifest>,
    /// Command-specific knobs.
    pub parameters: serde_json::Value,
    pub outputs: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct IpfManifest {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl From<&IpfSettings> for IpfManifest {
    fn from(s: &IpfSettings) -> Self {
        Self {
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
        }
    }
}

impl RunManifest {
    pub fn new(command: &'static str) -> Self {
        Self {
            tool: env!("CARGO_BIN_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs: BTreeMap::new(),
            label: None,
            measure: None,
            case: None,
            seed: None,
            ipf: None,
            parameters: serde_json::Value::Object(Default::default()),
            outputs: Vec::new(),
        }
    }

    pub fn input(mut self, name: &'static str, path: &Path) -> Self {
        self.inputs.insert(name, path.display().to_string());
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.display().to_string());
        self
    }
}

/// `report.json` becomes `report.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    sibling(out, "manifest.json")
}

/// `out` with its extension replaced by `suffix`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}
