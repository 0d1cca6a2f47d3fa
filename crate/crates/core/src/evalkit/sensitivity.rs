//! Permutation sensitivity: decode K differently shuffled copies of a dev
//! set and report the spread of BLEU.

use serde::Serialize;

use super::bleu::corpus_bleu;
use super::EvalError;
use crate::rng::derive_seed;
use crate::textprep::{detokenize, permute, Example, Granularity};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub seeds: Vec<u64>,
    pub bleus: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl SensitivityReport {
    pub fn from_bleus(seeds: Vec<u64>, bleus: Vec<f64>) -> Self {
        let k = bleus.len() as f64;
        // shifted by the first value so identical scores give exactly 0
        let shift = bleus.first().copied().unwrap_or(0.0);
        let dev: Vec<f64> = bleus.iter().map(|b| b - shift).collect();
        let mean_dev = dev.iter().sum::<f64>() / k;
        let var = dev.iter().map(|d| (d - mean_dev).powi(2)).sum::<f64>() / k;
        Self {
            seeds,
            bleus,
            mean: shift + mean_dev,
            std: var.sqrt(),
        }
    }

    /// `mean (std)`, e.g. `41.50 (1.118)`.
    pub fn summary(&self) -> String {
        format!("{:.2} ({:.3})", self.mean, self.std)
    }
}

impl std::fmt::Display for SensitivityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (s, b) in self.seeds.iter().zip(&self.bleus) {
            writeln!(f, "seed {s:>6}  BLEU {b:.2}")?;
        }
        writeln!(f, "{}", self.summary())
    }
}

/// Re-shuffles an example's input words. Subword granularity keeps the
/// word grouping in the bag column so constraints can still be built.
pub fn permute_example(ex: &Example, seed: u64, granularity: Granularity) -> Example {
    let words = ex.constraint_words();
    match granularity {
        Granularity::Word => Example {
            input: permute(&words, seed).into_iter().flatten().collect(),
            target: ex.target.clone(),
            bag: None,
        },
        Granularity::Subword => {
            let flat: Vec<String> = words.iter().flatten().cloned().collect();
            Example {
                input: permute(&flat, seed),
                target: ex.target.clone(),
                bag: Some(flat),
            }
        }
    }
}

/// Dev set number `seed`: sentence `i` is shuffled with sub-stream `i`.
pub fn permuted_dev_set(dev: &[Example], seed: u64, granularity: Granularity) -> Vec<Example> {
    dev.iter()
        .enumerate()
        .map(|(i, ex)| permute_example(ex, derive_seed(seed, i as u64), granularity))
        .collect()
}

/// `decode` maps a dev set to one word sequence per example; BLEU is
/// computed against the de-segmented targets.
pub fn sensitivity<F, E>(
    dev: &[Example],
    mut decode: F,
    seeds: &[u64],
    granularity: Granularity,
) -> Result<SensitivityReport, EvalError>
where
    F: FnMut(&[Example]) -> Result<Vec<Vec<String>>, E>,
    E: std::fmt::Display,
{
    if seeds.len() < 2 {
        return Err(EvalError::TooFewSeeds(seeds.len()));
    }
    let refs: Vec<Vec<String>> = dev.iter().map(|ex| detokenize(&ex.target)).collect();
    let mut bleus = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let set = permuted_dev_set(dev, s, granularity);
        let hyps = decode(&set).map_err(|e| EvalError::Decode(e.to_string()))?;
        bleus.push(corpus_bleu(&hyps, &refs)?.bleu);
    }
    Ok(SensitivityReport::from_bleus(seeds.to_vec(), bleus))
}
