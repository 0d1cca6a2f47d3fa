//! The JSON run configuration. Every section is optional; flags override
//! whatever the file sets.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::decoder::DecodeConfig;
use crate::dep_linearizer::PenmanMode;
use crate::probe::ProbeConfig;
use crate::scorers::Smoothing;
use crate::textprep::{Granularity, DEFAULT_VOCAB_SIZE};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed for every stochastic step; required by those steps.
    pub seed: Option<u64>,
    /// Decoding threads (0 = all cores).
    pub workers: Option<usize>,
    pub paths: Paths,
    pub prep: PrepConfig,
    pub lm: LmConfig,
    pub scorer: ScorerConfig,
    pub decode: DecodeConfig,
    pub eval: EvalConfig,
    pub sensitivity: SensitivityConfig,
    pub sweep: SweepConfig,
    pub linearize: LinearizeConfig,
    pub probe: ProbeConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub merges: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub trees: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub probe: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrepConfig {
    pub vocab_size: usize,
    pub granularity: Granularity,
    /// Extra permuted copies per training sentence.
    pub augment: usize,
    pub ptb_normalize: bool,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self {
            vocab_size: DEFAULT_VOCAB_SIZE,
            granularity: Granularity::Word,
            augment: 0,
            ptb_normalize: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LmConfig {
    pub order: usize,
    pub smoothing: Smoothing,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            order: 3,
            smoothing: Smoothing::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScorerConfig {
    /// Command launched as a wire-protocol scorer instead of an n-gram model.
    pub external: Option<String>,
    pub timeout_secs: u64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            external: None,
            timeout_secs: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub bin_width: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            bin_width: crate::evalkit::DEFAULT_BIN_WIDTH,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivityConfig {
    pub seeds: Vec<u64>,
    pub granularity: Granularity,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            seeds: Vec::new(),
            granularity: Granularity::Word,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub beams: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            beams: vec![5, 64, 512],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearizeConfig {
    pub mode: PenmanMode,
    pub p_pos: Option<f64>,
    pub p_dep: Option<f64>,
}

impl Default for LinearizeConfig {
    fn default() -> Self {
        Self {
            mode: PenmanMode::Full,
            p_pos: None,
            p_dep: None,
        }
    }
}
