use std::path::{Path, PathBuf};

use cil_core::data::{DatasetFormat, SyntheticSpec};
use cil_core::ActivationSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "CIL_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSource {
    /// Gaussian classes generated per seed.
    Synthetic { num_classes: usize, dim: usize, per_class: usize, separation: f64 },
    /// Pre-extracted embeddings; the format defaults to the file extension.
    Files {
        train: PathBuf,
        test: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<DatasetFormat>,
    },
}

impl DatasetSource {
    pub fn synthetic_spec(&self, seed: u64) -> Option<SyntheticSpec> {
        match *self {
            DatasetSource::Synthetic { num_classes, dim, per_class, separation } => {
                Some(SyntheticSpec { num_classes, dim, per_class, separation, seed })
            }
            DatasetSource::Files { .. } => None,
        }
    }
}

/// Full description of an experiment. Everything except `output_dir` is
/// echoed into each report, which is enough to reproduce the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    pub increment: usize,
    pub buffer_per_class: usize,
    pub lambda: f64,
    pub clamp_epsilon: f64,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_classes: Option<usize>,
    #[serde(default)]
    pub disable_buffer: bool,
    #[serde(default)]
    pub disable_oversampling: bool,
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::Synthetic { num_classes: 10, dim: 16, per_class: 250, separation: 8.0 },
            increment: 2,
            buffer_per_class: 20,
            lambda: 0.01,
            clamp_epsilon: 0.05,
            seeds: vec![0],
            max_classes: None,
            disable_buffer: false,
            disable_oversampling: false,
            output_dir: default_output_dir(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {}", e.message())))
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.increment == 0 {
            return fail("increment must be positive".into());
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be positive and finite, got {}", self.lambda));
        }
        ActivationSpec::logistic(self.clamp_epsilon).map_err(|e| CliError::Config(e.to_string()))?;
        if self.seeds.is_empty() {
            return fail("at least one seed is required".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return fail("seeds must be distinct".into());
        }
        if self.max_classes == Some(0) {
            return fail("max_classes must be positive".into());
        }
        if let DatasetSource::Synthetic { num_classes, dim, per_class, separation } = self.dataset {
            if num_classes == 0 || dim == 0 || per_class == 0 {
                return fail("synthetic dataset needs positive num_classes, dim and per_class".into());
            }
            if !(separation >= 0.0 && separation.is_finite()) {
                return fail(format!("separation must be finite and non-negative, got {separation}"));
            }
        }
        Ok(())
    }

    /// Per-class buffer capacity after applying the ablation flag.
    pub fn effective_buffer(&self) -> usize {
        if self.disable_buffer {
            0
        } else {
            self.buffer_per_class
        }
    }

    pub fn activation(&self) -> ActivationSpec {
        ActivationSpec { clamp_epsilon: self.clamp_epsilon, ..ActivationSpec::default() }
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialises")
    }

    /// Short hash of the echoed configuration without its seed list, so runs
    /// of the same setup under different seeds group together.
    pub fn hash(&self) -> String {
        config_hash(&self.echo())
    }
}

pub fn config_hash(echo: &serde_json::Value) -> String {
    let mut v = echo.clone();
    if let Some(map) = v.as_object_mut() {
        map.remove("seeds");
    }
    let digest = Sha256::digest(v.to_string().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Independent RNG streams for one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedStreams {
    pub data: u64,
    pub split: u64,
    pub buffer: u64,
}

impl SeedStreams {
    pub fn derive(seed: u64) -> Self {
        Self { data: splitmix(seed ^ 0xD1B5_4A32_D192_ED03), split: splitmix(seed ^ 0x8CB9_2BA7_2F3D_8DD7), buffer: splitmix(seed ^ 0x9E37_79B9_7F4A_7C15) }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
