//! BLEU over a grid of beam sizes and decoding settings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::bleu::corpus_bleu;
use super::lexical::{lexical_errors, DEFAULT_BIN_WIDTH};
use super::EvalError;
use crate::decoder::{DecodeConfig, SearchSpace};
use crate::pipeline::Orderer;
use crate::scorers::Scorer;
use crate::textprep::{detokenize, Example};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSetting {
    pub name: String,
    pub mode: SearchSpace,
    pub null_input: bool,
}

impl SweepSetting {
    pub fn new(name: &str, mode: SearchSpace, null_input: bool) -> Self {
        Self {
            name: name.to_string(),
            mode,
            null_input,
        }
    }

    /// Conditional and unconditional scoring, each in both search spaces.
    pub fn standard() -> Vec<Self> {
        vec![
            Self::new("cond-constrained", SearchSpace::Constrained, false),
            Self::new("cond-unconstrained", SearchSpace::Unconstrained, false),
            Self::new("uncond-constrained", SearchSpace::Constrained, true),
            Self::new("uncond-unconstrained", SearchSpace::Unconstrained, true),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub setting: String,
    pub beam: usize,
    pub bleu: f64,
    pub missing_rate: f64,
    pub redundant_rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepTable {
    pub beams: Vec<usize>,
    pub settings: Vec<String>,
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn get(&self, setting: &str, beam: usize) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.setting == setting && c.beam == beam)
    }
}

impl std::fmt::Display for SweepTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let w = self
            .settings
            .iter()
            .map(|s| s.len())
            .max()
            .unwrap_or(0)
            .max(7);
        let mut line = format!("{:<w$}", "setting");
        for b in &self.beams {
            let _ = write!(line, " {:>8}", format!("B={b}"));
        }
        writeln!(f, "{}", line.trim_end())?;
        for s in &self.settings {
            let mut line = format!("{s:<w$}");
            for &b in &self.beams {
                match self.get(s, b) {
                    Some(c) => {
                        let _ = write!(line, " {:>8.2}", c.bleu);
                    }
                    None => {
                        let _ = write!(line, " {:>8}", "-");
                    }
                }
            }
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Decodes `dataset` once per `(setting, beam)`. Unconstrained settings
/// use length normalization.
pub fn beam_sweep(
    dataset: &[Example],
    scorer: &dyn Scorer,
    beams: &[usize],
    settings: &[SweepSetting],
    workers: usize,
) -> Result<SweepTable, EvalError> {
    let mut table = SweepTable {
        beams: beams.to_vec(),
        settings: settings.iter().map(|s| s.name.clone()).collect(),
        cells: Vec::new(),
    };
    if beams.is_empty() || dataset.is_empty() {
        return Ok(table);
    }
    let refs: Vec<Vec<String>> = dataset.iter().map(|ex| detokenize(&ex.target)).collect();
    for s in settings {
        for &beam in beams {
            let config = DecodeConfig {
                beam_size: beam,
                mode: s.mode,
                null_input: s.null_input,
                ..DecodeConfig::default()
            };
            let out = Orderer::new(scorer, config)
                .order_all(dataset, workers)
                .map_err(|e| EvalError::Decode(e.to_string()))?;
            let hyps: Vec<Vec<String>> = out.into_iter().map(|o| o.words).collect();
            let bleu = corpus_bleu(&hyps, &refs)?;
            let lex = lexical_errors(&hyps, &refs, DEFAULT_BIN_WIDTH)?;
            log::info!("sweep {} B={beam}: BLEU {:.2}", s.name, bleu.bleu);
            table.cells.push(SweepCell {
                setting: s.name.clone(),
                beam,
                bleu: bleu.bleu,
                missing_rate: lex.missing_rate,
                redundant_rate: lex.redundant_rate,
            });
        }
    }
    Ok(table)
}
