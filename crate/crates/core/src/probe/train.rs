//! The rank-k probe, its L1 objective and training.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::mst::{attachment_counts, mst, tree_distances};
use super::ProbeError;
use crate::dep_linearizer::DepTree;
use crate::rng::SeededRng;

/// Distance `d_B(i, j) = ||B (h_i - h_j)||^2` with `B` of shape `k x d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeModel {
    b: Array2<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeFile {
    rank: usize,
    dim: usize,
    b: Vec<Vec<f64>>,
}

impl ProbeModel {
    pub fn new(b: Array2<f64>) -> Self {
        Self { b }
    }

    /// Entries uniform in `[-1/sqrt(d), 1/sqrt(d))`.
    pub fn random(rank: usize, dim: usize, seed: u64) -> Self {
        let mut rng = SeededRng::new(seed);
        let a = 1.0 / (dim as f64).sqrt();
        Self {
            b: Array2::from_shape_simple_fn((rank, dim), || rng.uniform(-a, a)),
        }
    }

    pub fn rank(&self) -> usize {
        self.b.nrows()
    }

    pub fn dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn b(&self) -> ArrayView2<'_, f64> {
        self.b.view()
    }

    pub fn distance(&self, hi: ArrayView1<f64>, hj: ArrayView1<f64>) -> f64 {
        let delta = &hi - &hj;
        let p = self.b.dot(&delta);
        p.dot(&p)
    }

    /// All pairwise distances between the rows of `h`.
    pub fn distances(&self, h: ArrayView2<f64>) -> Array2<f64> {
        pairwise(&h.dot(&self.b.t()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ProbeFile {
            rank: self.rank(),
            dim: self.dim(),
            b: self.b.outer_iter().map(|r| r.to_vec()).collect(),
        })
        .expect("probe serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ProbeError> {
        let f: ProbeFile = serde_json::from_str(text).map_err(|e| ProbeError::Format {
            line: 1,
            detail: e.to_string(),
        })?;
        let flat: Vec<f64> = f.b.iter().flatten().copied().collect();
        if f.b.len() != f.rank || flat.len() != f.rank * f.dim {
            return Err(ProbeError::Format {
                line: 1,
                detail: format!("matrix is not {} x {}", f.rank, f.dim),
            });
        }
        Ok(Self::new(
            Array2::from_shape_vec((f.rank, f.dim), flat).expect("shape checked"),
        ))
    }
}

/// Squared Euclidean distances between the rows of `p`.
fn pairwise(p: &Array2<f64>) -> Array2<f64> {
    let n = p.nrows();
    let sq: Array1<f64> = p.map_axis(Axis(1), |r| r.dot(&r));
    let g = p.dot(&p.t());
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[[i, j]] = (sq[i] + sq[j] - 2.0 * g[[i, j]]).max(0.0);
            }
        }
    }
    d
}

/// `(1/n^2) sum_ij |gold_ij - d_B(i, j)|`.
pub fn sentence_loss(b: ArrayView2<f64>, h: ArrayView2<f64>, gold: ArrayView2<f64>) -> f64 {
    let n = h.nrows() as f64;
    let d = pairwise(&h.dot(&b.t()));
    (&gold - &d).mapv(f64::abs).sum() / (n * n)
}

/// Loss and its gradient with respect to `B`.
pub fn sentence_loss_grad(
    b: ArrayView2<f64>,
    h: ArrayView2<f64>,
    gold: ArrayView2<f64>,
) -> (f64, Array2<f64>) {
    let n = h.nrows();
    let nn = (n * n) as f64;
    let p = h.dot(&b.t());
    let d = pairwise(&p);
    let resid = &gold - &d;
    let loss = resid.mapv(f64::abs).sum() / nn;
    // w_ij = -sign(gold - d) / n^2 ; grad = 4 P^T (diag(W 1) - W) H
    let w = resid.mapv(|r| -sign(r) / nn);
    let mut lap = -&w;
    for (i, s) in w.sum_axis(Axis(1)).iter().enumerate() {
        lap[[i, i]] += s;
    }
    let grad = p.t().dot(&lap.dot(&h)) * 4.0;
    (loss, grad)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub rank: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            rank: 32,
            epochs: 30,
            batch_size: 40,
            lr: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProbeSentence {
    pub features: Array2<f64>,
    pub tree: DepTree,
    pub distances: Array2<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct ProbeDataset {
    pub sentences: Vec<ProbeSentence>,
}

impl ProbeDataset {
    pub fn new(features: Vec<Array2<f64>>, trees: &[DepTree]) -> Result<Self, ProbeError> {
        if features.len() != trees.len() {
            return Err(ProbeError::Count {
                features: features.len(),
                trees: trees.len(),
            });
        }
        let dim = features.first().map(|f| f.ncols());
        let mut sentences = Vec::with_capacity(trees.len());
        for (i, (f, t)) in features.into_iter().zip(trees).enumerate() {
            if f.nrows() != t.len() || Some(f.ncols()) != dim {
                return Err(ProbeError::Dims {
                    id: i as u64,
                    detail: format!(
                        "{} x {} features for a {}-word tree (dim {})",
                        f.nrows(),
                        f.ncols(),
                        t.len(),
                        dim.unwrap_or(0)
                    ),
                });
            }
            sentences.push(ProbeSentence {
                distances: tree_distances(t),
                features: f,
                tree: t.clone(),
            });
        }
        Ok(Self { sentences })
    }

    pub fn dim(&self) -> Option<usize> {
        self.sentences.first().map(|s| s.features.ncols())
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrainLog {
    /// Mean per-sentence loss over the training set, before training and
    /// after every epoch.
    pub epoch_losses: Vec<f64>,
}

pub fn dataset_loss(b: ArrayView2<f64>, data: &ProbeDataset) -> f64 {
    let total: f64 = data
        .sentences
        .iter()
        .map(|s| sentence_loss(b, s.features.view(), s.distances.view()))
        .sum();
    total / data.len().max(1) as f64
}

/// Mini-batch Adam on the mean per-sentence loss.
pub fn train_probe(
    data: &ProbeDataset,
    config: &ProbeConfig,
) -> Result<(ProbeModel, TrainLog), ProbeError> {
    let d = data.dim().ok_or(ProbeError::EmptyDataset)?;
    if config.rank < 1 || config.rank > d {
        return Err(ProbeError::Rank {
            rank: config.rank,
            dim: d,
        });
    }
    if config.batch_size == 0 {
        return Err(ProbeError::BatchSize);
    }
    let mut rng = SeededRng::new(config.seed);
    let mut model = ProbeModel::random(config.rank, d, rng.next_u64());
    let (beta1, beta2, eps) = (0.9, 0.999, 1e-8);
    let mut m = Array2::<f64>::zeros(model.b.raw_dim());
    let mut v = Array2::<f64>::zeros(model.b.raw_dim());
    let mut step = 0i32;
    let mut log = TrainLog {
        epoch_losses: vec![dataset_loss(model.b(), data)],
    };
    for epoch in 0..config.epochs {
        let order = rng.permutation(data.len());
        for (bi, batch) in order.chunks(config.batch_size).enumerate() {
            let mut grad = Array2::<f64>::zeros(model.b.raw_dim());
            let mut loss = 0.0;
            for &i in batch {
                let s = &data.sentences[i];
                let (l, g) = sentence_loss_grad(model.b(), s.features.view(), s.distances.view());
                loss += l;
                grad += &g;
            }
            let scale = 1.0 / batch.len() as f64;
            loss *= scale;
            grad *= scale;
            if !loss.is_finite() || grad.iter().any(|x| !x.is_finite()) {
                return Err(ProbeError::NonFinite {
                    epoch,
                    batch: bi,
                    loss,
                    grad_norm: grad.iter().map(|x| x * x).sum::<f64>().sqrt(),
                });
            }
            step += 1;
            m = &m * beta1 + &grad * (1.0 - beta1);
            v = &v * beta2 + &grad.mapv(|g| g * g) * (1.0 - beta2);
            let mc = 1.0 - beta1.powi(step);
            let vc = 1.0 - beta2.powi(step);
            let lr = config.lr;
            ndarray::Zip::from(&mut model.b)
                .and(&m)
                .and(&v)
                .for_each(|b, &mi, &vi| *b -= lr * (mi / mc) / ((vi / vc).sqrt() + eps));
        }
        let l = dataset_loss(model.b(), data);
        log::debug!("probe epoch {}: loss {l:.5}", epoch + 1);
        log.epoch_losses.push(l);
    }
    Ok((model, log))
}

/// Corpus UUAS of the probe's minimum spanning trees, micro-averaged
/// over gold edges.
pub fn evaluate(model: &ProbeModel, data: &ProbeDataset) -> f64 {
    let (mut hit, mut total) = (0, 0);
    for s in &data.sentences {
        let pred = mst(model.distances(s.features.view()).view());
        let (h, t) = attachment_counts(&pred, &s.tree);
        hit += h;
        total += t;
    }
    if total == 0 {
        1.0
    } else {
        hit as f64 / total as f64
    }
}
