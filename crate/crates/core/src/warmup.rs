//! Supervised format warm-up (cold start) for the toy policy.
//!
//! Under the strict binary format reward a uniform policy over a few dozen
//! tokens essentially never emits a well-formed output, so every group is
//! degenerate and reinforcement learning has no signal. The warm-up fits the
//! policy by maximum likelihood to template-shaped targets whose answer labels
//! are drawn uniformly from the wheel, independent of any ground truth. It
//! teaches the template, not the answers.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grpo::ColdStartConfig;
use crate::policy::{accumulate_grad_sequence_logprob, unit_f64, ParamTensor, PolicyParams, TokenSeq, Vocab};
use crate::rewards::{check_format, ANSWER_CLOSE, ANSWER_OPEN, THINK_CLOSE, THINK_OPEN};

fn choose(ids: &[usize], rng: &mut ChaCha8Rng) -> usize {
    let i = (unit_f64(rng) * ids.len() as f64) as usize;
    ids[i.min(ids.len() - 1)]
}

/// Token ids of every canonical label (everything that is not structural,
/// separator or filler).
pub fn label_ids(vocab: &Vocab) -> Vec<usize> {
    let fillers = vocab.filler_ids();
    let reserved = [
        THINK_OPEN,
        THINK_CLOSE,
        ANSWER_OPEN,
        ANSWER_CLOSE,
        crate::policy::EOS,
        crate::policy::SEPARATOR,
    ];
    (0..vocab.len())
        .filter(|id| !fillers.contains(id))
        .filter(|&id| !reserved.contains(&vocab.text(id).unwrap_or_default()))
        .collect()
}

/// `<think> filler* </think> <answer> label </answer> <eos>` for one context.
pub fn template_sequence(
    vocab: &Vocab,
    context: usize,
    think_len: usize,
    label_pool: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<TokenSeq> {
    let id = |t: &str| vocab.id(t).ok_or_else(|| Error::InvalidVocab(format!("missing `{t}`")));
    let fillers = vocab.filler_ids();
    if (think_len > 0 && fillers.is_empty()) || label_pool.is_empty() {
        return Err(Error::InvalidVocab("no filler or label tokens".into()));
    }
    let mut tokens = Vec::with_capacity(think_len + 6);
    tokens.push(id(THINK_OPEN)?);
    for _ in 0..think_len {
        tokens.push(choose(&fillers, rng));
    }
    tokens.push(id(THINK_CLOSE)?);
    tokens.push(id(ANSWER_OPEN)?);
    tokens.push(choose(label_pool, rng));
    tokens.push(id(ANSWER_CLOSE)?);
    tokens.push(vocab.eos());
    Ok(TokenSeq { context, tokens })
}

/// Runs `config.steps` full-batch gradient-ascent steps on the mean target
/// log-likelihood, for every context of `params`.
pub fn cold_start(
    params: &mut PolicyParams,
    vocab: &Vocab,
    config: &ColdStartConfig,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    if config.steps == 0 {
        return Ok(());
    }
    let labels = label_ids(vocab);
    let mut corpus = Vec::with_capacity(params.num_contexts() * config.corpus_size);
    for context in 0..params.num_contexts() {
        for _ in 0..config.corpus_size {
            let seq = template_sequence(vocab, context, config.think_len, &labels, rng)?;
            debug_assert!(check_format(&vocab.detokenize(&seq)).well_formed);
            corpus.push(seq);
        }
    }
    let scale = 1.0 / config.corpus_size as f64;
    for _ in 0..config.steps {
        let mut grad = ParamTensor::zeros(params.logits().shape());
        for seq in &corpus {
            accumulate_grad_sequence_logprob(params, seq, scale, &mut grad)?;
        }
        params.logits_mut().axpy(config.learning_rate, &grad)?;
    }
    Ok(())
}
