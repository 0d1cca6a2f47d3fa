//! Structural probe: a learned rank-k squared distance over word
//! representations, decoded into trees by minimum spanning tree and
//! scored by undirected attachment.

pub mod features;
pub mod mst;
pub mod train;

pub use features::{dataset_from_records, read_features, word_features, FeatureRecord};
pub use mst::{attachment_counts, mst, tree_distances, uuas};
pub use train::{
    dataset_loss, evaluate, sentence_loss, sentence_loss_grad, train_probe, ProbeConfig,
    ProbeDataset, ProbeModel, ProbeSentence, TrainLog,
};

use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProbeError {
    #[error("sentence {id}: bad word spans: {detail}")]
    Spans { id: u64, detail: String },
    #[error("sentence {id}: {detail}")]
    Dims { id: u64, detail: String },
    #[error("feature file line {line}: {detail}")]
    Format { line: usize, detail: String },
    #[error("{features} feature records for {trees} trees")]
    Count { features: usize, trees: usize },
    #[error("empty probe dataset")]
    EmptyDataset,
    #[error("rank {rank} must be between 1 and the feature dimension {dim}")]
    Rank { rank: usize, dim: usize },
    #[error("batch size must be positive")]
    BatchSize,
    #[error(
        "non-finite loss at epoch {epoch}, batch {batch}: loss {loss}, gradient norm {grad_norm}"
    )]
    NonFinite {
        epoch: usize,
        batch: usize,
        loss: f64,
        grad_norm: f64,
    },
    #[error("model {model} has no layers")]
    NoLayers { model: String },
}

/// Train and evaluation data for one layer of one model.
#[derive(Clone, Debug)]
pub struct LayerData {
    pub train: ProbeDataset,
    pub eval: ProbeDataset,
}

#[derive(Clone, Debug)]
pub struct ModelLayers {
    pub name: String,
    pub layers: Vec<LayerData>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelScore {
    pub name: String,
    pub layer_uuas: Vec<f64>,
    pub mean_uuas: f64,
    /// Relative to the first model.
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub models: Vec<ModelScore>,
}

impl std::fmt::Display for ProbeReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let w = self
            .models
            .iter()
            .map(|m| m.name.len())
            .max()
            .unwrap_or(0)
            .max(5);
        writeln!(f, "{:<w$} {:>7} {:>7}  layers", "model", "UUAS", "delta")?;
        for m in &self.models {
            let layers: Vec<String> = m
                .layer_uuas
                .iter()
                .map(|u| format!("{:.2}", 100.0 * u))
                .collect();
            writeln!(
                f,
                "{:<w$} {:>7.2} {:>+7.2}  {}",
                m.name,
                100.0 * m.mean_uuas,
                100.0 * m.delta,
                layers.join(" ")
            )?;
        }
        Ok(())
    }
}

/// Trains one probe per layer (layers in parallel) and averages the
/// evaluation UUAS per model.
pub fn probe_report(
    models: &[ModelLayers],
    config: &ProbeConfig,
) -> Result<ProbeReport, ProbeError> {
    let mut out: Vec<ModelScore> = Vec::with_capacity(models.len());
    for m in models {
        if m.layers.is_empty() {
            return Err(ProbeError::NoLayers {
                model: m.name.clone(),
            });
        }
        let layer_uuas = m
            .layers
            .par_iter()
            .map(|l| train_probe(&l.train, config).map(|(p, _)| evaluate(&p, &l.eval)))
            .collect::<Result<Vec<_>, _>>()?;
        let mean_uuas = layer_uuas.iter().sum::<f64>() / layer_uuas.len() as f64;
        let delta = out.first().map_or(0.0, |b| mean_uuas - b.mean_uuas);
        out.push(ModelScore {
            name: m.name.clone(),
            layer_uuas,
            mean_uuas,
            delta,
        });
    }
    Ok(ProbeReport { models: out })
}
