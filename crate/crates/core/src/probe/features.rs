//! Per-sentence feature files and word-level feature averaging.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{ProbeDataset, ProbeError};
use crate::dep_linearizer::DepTree;

/// One line of a feature file: subword vectors for one sentence and the
/// half-open subword span `[start, end)` of every word.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureRecord {
    pub id: u64,
    pub subword_dims: usize,
    pub vectors: Vec<Vec<f64>>,
    pub word_spans: Vec<[usize; 2]>,
}

impl FeatureRecord {
    pub fn subword_matrix(&self) -> Result<Array2<f64>, ProbeError> {
        let t = self.vectors.len();
        let d = self.subword_dims;
        let mut flat = Vec::with_capacity(t * d);
        for (i, v) in self.vectors.iter().enumerate() {
            if v.len() != d {
                return Err(ProbeError::Dims {
                    id: self.id,
                    detail: format!("vector {i} has {} dims, expected {d}", v.len()),
                });
            }
            flat.extend_from_slice(v);
        }
        Ok(Array2::from_shape_vec((t, d), flat).expect("shape checked"))
    }

    pub fn word_matrix(&self) -> Result<Array2<f64>, ProbeError> {
        let spans: Vec<(usize, usize)> = self.word_spans.iter().map(|s| (s[0], s[1])).collect();
        word_features(self.subword_matrix()?.view(), &spans).map_err(|e| match e {
            ProbeError::Spans { detail, .. } => ProbeError::Spans {
                id: self.id,
                detail,
            },
            e => e,
        })
    }
}

/// Parses a line-delimited feature file.
pub fn read_features(text: &str) -> Result<Vec<FeatureRecord>, ProbeError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ProbeError::Format {
                line: i + 1,
                detail: e.to_string(),
            })
        })
        .collect()
}

/// Pairs records with trees by id (record `id` k goes with tree k) and
/// builds a probe dataset.
pub fn dataset_from_records(
    records: &[FeatureRecord],
    trees: &[DepTree],
) -> Result<ProbeDataset, ProbeError> {
    if records.len() != trees.len() {
        return Err(ProbeError::Count {
            features: records.len(),
            trees: trees.len(),
        });
    }
    let mut slots: Vec<Option<Array2<f64>>> = vec![None; trees.len()];
    for r in records {
        let slot = usize::try_from(r.id)
            .ok()
            .and_then(|i| slots.get_mut(i))
            .ok_or_else(|| ProbeError::Dims {
                id: r.id,
                detail: format!("id outside 0..{}", trees.len()),
            })?;
        if slot.is_some() {
            return Err(ProbeError::Dims {
                id: r.id,
                detail: "duplicate id".to_string(),
            });
        }
        *slot = Some(r.word_matrix()?);
    }
    ProbeDataset::new(
        slots
            .into_iter()
            .map(|m| m.expect("all ids seen"))
            .collect(),
        trees,
    )
}

/// Averages subword rows over each word's span. Spans must tile
/// `0..T` in order without gaps or overlaps.
///
/// The caller chooses which subword vectors to pass; for decoder states
/// that is usually the state that predicts each token.
pub fn word_features(
    subwords: ArrayView2<f64>,
    spans: &[(usize, usize)],
) -> Result<Array2<f64>, ProbeError> {
    let t = subwords.nrows();
    let bad = |detail: String| ProbeError::Spans { id: 0, detail };
    let mut expect = 0;
    for (i, &(s, e)) in spans.iter().enumerate() {
        if s != expect {
            return Err(bad(format!("span {i} starts at {s}, expected {expect}")));
        }
        if e <= s {
            return Err(bad(format!("span {i} is empty")));
        }
        expect = e;
    }
    if expect != t {
        return Err(bad(format!("spans cover {expect} of {t} subwords")));
    }
    let mut out = Array2::zeros((spans.len(), subwords.ncols()));
    for (i, &(s, e)) in spans.iter().enumerate() {
        let mean = subwords
            .slice(ndarray::s![s..e, ..])
            .mean_axis(Axis(0))
            .expect("non-empty span");
        out.row_mut(i).assign(&mean);
    }
    Ok(out)
}
