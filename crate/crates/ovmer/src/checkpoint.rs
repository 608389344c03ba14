//! Policy checkpoints as versioned JSON: shape, vocabulary and row-major
//! logits. Floats are written in shortest round-trip form, so a load gives
//! back bit-identical parameters.

use ovmer_core::{ParamTensor, PolicyParams, Vocab};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT: &str = "ovmer-policy";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointDoc {
    format: String,
    version: u32,
    num_contexts: usize,
    max_positions: usize,
    max_len: usize,
    vocab: Vec<String>,
    logits: Vec<f64>,
}

pub fn to_json(params: &PolicyParams, vocab: &Vocab) -> Result<String> {
    if params.vocab_size() != vocab.len() || params.eos() != vocab.eos() {
        return Err(Error::Checkpoint("vocabulary does not match parameters".into()));
    }
    let doc = CheckpointDoc {
        format: FORMAT.into(),
        version: VERSION,
        num_contexts: params.num_contexts(),
        max_positions: params.max_positions(),
        max_len: params.max_len(),
        vocab: vocab.tokens().to_vec(),
        logits: params.logits().as_slice().to_vec(),
    };
    let mut out = serde_json::to_string(&doc).expect("checkpoint serializes");
    out.push('\n');
    Ok(out)
}

pub fn from_json(text: &str) -> Result<(PolicyParams, Vocab)> {
    let doc: CheckpointDoc = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if doc.format != FORMAT || doc.version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format `{}` version {}",
            doc.format, doc.version
        )));
    }
    let vocab = Vocab::from_tokens(doc.vocab)?;
    let logits = ParamTensor::from_vec([doc.num_contexts, doc.max_positions, vocab.len()], doc.logits)?;
    let params = PolicyParams::new(logits, doc.max_len, vocab.eos())?;
    Ok((params, vocab))
}
