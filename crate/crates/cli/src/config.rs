//! Run configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use pinfluence::factorize::NmfConfig;
use pinfluence::influence::InfluenceMetric;
use pinfluence::ingest::{ColumnOrder, DEFAULT_SNAPSHOTS};
use pinfluence::similarity::SimilarityMeasure;
use pinfluence::synth::{PlantedSpec, Shape};
use pinfluence::uniqueness::{EpsilonThresholds, DEFAULT_RHOS};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixFormat {
    #[default]
    Csv,
    Bin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InputConfig {
    /// Temporal edge list, plain or gzip.
    pub edges: Option<PathBuf>,
    /// Precomputed aligned matrix (`.csv` or `.bin`), e.g. from `synth`.
    pub matrix: Option<PathBuf>,
    pub columns: ColumnOrder,
    pub drop_self_loops: bool,
    /// Label written into `h.json`; defaults to the input file stem.
    pub name: Option<String>,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            edges: None,
            matrix: None,
            columns: ColumnOrder::default(),
            drop_self_loops: true,
            name: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidateConfig {
    pub rhos: Vec<usize>,
    pub seed: u64,
    pub thresholds: EpsilonThresholds,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            rhos: DEFAULT_RHOS.to_vec(),
            seed: pinfluence::factorize::DEFAULT_SEED,
            thresholds: EpsilonThresholds::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    /// `name,category,path` list of H files.
    pub manifest: Option<PathBuf>,
    /// H file of the network to classify.
    pub query: Option<PathBuf>,
    pub measures: Vec<SimilarityMeasure>,
    pub classify_measure: SimilarityMeasure,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            manifest: None,
            query: None,
            measures: SimilarityMeasure::ALL.to_vec(),
            classify_measure: SimilarityMeasure::DtwAveraged,
        }
    }
}

fn default_planted() -> PlantedSpec {
    PlantedSpec {
        n: 200,
        t: DEFAULT_SNAPSHOTS,
        k: 1,
        shape: Shape::Decay,
        noise_level: 0.0,
        seed: pinfluence::factorize::DEFAULT_SEED,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub snapshot_count: usize,
    pub metric: InfluenceMetric,
    pub input: InputConfig,
    pub nmf: NmfConfig,
    pub validate: ValidateConfig,
    pub compare: CompareConfig,
    pub synth: PlantedSpec,
    /// Also write the aligned matrix; CSV always carries the fingerprint.
    pub export_matrix: Option<MatrixFormat>,
    pub plot: bool,
    /// Not embedded in artifacts, so outputs do not depend on where they land.
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            snapshot_count: DEFAULT_SNAPSHOTS,
            metric: InfluenceMetric::Degree,
            input: InputConfig::default(),
            nmf: NmfConfig::default(),
            validate: ValidateConfig::default(),
            compare: CompareConfig::default(),
            synth: default_planted(),
            export_matrix: None,
            plot: false,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&bytes)
    }

    /// Accepts a bare config or an artifact carrying one under `config`.
    pub fn from_json(bytes: &[u8]) -> CliResult<Self> {
        let mut value: serde_json::Value =
            serde_json::from_slice(bytes).map_err(pinfluence::Error::from)?;
        if value.get("config_fingerprint").is_some() {
            if let Some(inner) = value.get_mut("config") {
                value = inner.take();
            }
        }
        Ok(serde_json::from_value(value).map_err(pinfluence::Error::from)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The config as embedded in artifacts: everything except `output_dir`.
    pub fn embedded(&self) -> RunConfig {
        RunConfig {
            output_dir: None,
            ..self.clone()
        }
    }

    /// Hex SHA-256 of the compact JSON of [`RunConfig::embedded`].
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(&self.embedded()).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
