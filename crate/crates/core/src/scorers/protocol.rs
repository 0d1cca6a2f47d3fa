//! Line-delimited JSON wire protocol for external scorers.
//!
//! ```text
//! -> {"id": 1, "method": "hello", "version": 1}
//! <- {"id": 1, "vocab": ["<s>", "</s>", "<unk>", "<null>", ...]}
//! -> {"id": 2, "method": "next_logprobs", "prefix": [0, 5], "input": [7, 5]}
//! <- {"id": 2, "logprobs": [-1.2, null, ...]}
//! <- {"id": 2, "error": "message"}
//! ```
//!
//! Log-probabilities are natural logs normalized over the vocabulary;
//! `null` encodes negative infinity.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::Scorer;
use crate::textprep::TokenId;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Request {
    Hello {
        id: u64,
        version: u32,
    },
    NextLogprobs {
        id: u64,
        prefix: Vec<TokenId>,
        input: Vec<TokenId>,
    },
}

impl Request {
    pub fn id(&self) -> u64 {
        match self {
            Request::Hello { id, .. } | Request::NextLogprobs { id, .. } => *id,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logprobs: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn encode_logprobs(lp: &[f64]) -> Vec<Option<f64>> {
    lp.iter()
        .map(|&x| if x.is_finite() { Some(x) } else { None })
        .collect()
}

/// Answers protocol requests from `reader` with `scorer` until EOF.
///
/// This is the reference server used by the conformance tests; any
/// external implementation must behave the same way on the wire.
pub fn serve<R: BufRead, W: Write>(
    scorer: &dyn Scorer,
    reader: R,
    mut writer: W,
) -> std::io::Result<()> {
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<Request>(&line) {
            Err(e) => Reply {
                id: serde_json::from_str::<serde_json::Value>(&line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(|i| i.as_u64()))
                    .unwrap_or(0),
                error: Some(format!("bad request: {e}")),
                ..Reply::default()
            },
            Ok(Request::Hello { id, version }) if version != PROTOCOL_VERSION => Reply {
                id,
                error: Some(format!("unsupported protocol version {version}")),
                ..Reply::default()
            },
            Ok(Request::Hello { id, .. }) => Reply {
                id,
                version: Some(PROTOCOL_VERSION),
                vocab: Some(scorer.vocab().tokens().to_vec()),
                ..Reply::default()
            },
            Ok(Request::NextLogprobs { id, prefix, input }) => {
                match scorer.next_logprobs(&prefix, &input) {
                    Ok(lp) => Reply {
                        id,
                        logprobs: Some(encode_logprobs(&lp)),
                        ..Reply::default()
                    },
                    Err(e) => Reply {
                        id,
                        error: Some(e.to_string()),
                        ..Reply::default()
                    },
                }
            }
        };
        serde_json::to_writer(&mut writer, &reply)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
    }
    Ok(())
}
