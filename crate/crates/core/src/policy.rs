//! Toy sequence policy standing in for the language model.
//!
//! Each (context, position) pair owns an independent row of logits over the
//! vocabulary; the token at position `p` is drawn from `softmax(row)` without
//! looking at the prefix. Generation stops at the end token or at `max_len`.
//! All log-probabilities and gradients are exact.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rewards::{ANSWER_CLOSE, ANSWER_OPEN, THINK_CLOSE, THINK_OPEN};
use crate::wheel::EmotionWheel;

pub const EOS: &str = "<eos>";
pub const SEPARATOR: &str = ",";
/// Rendering of the separator token in detokenized text.
pub const SEPARATOR_TEXT: &str = ", ";
pub const DEFAULT_FILLERS: [&str; 4] = ["cue", "tone", "gaze", "pause"];

/// Token inventory: structural tags, separator, filler "thought" words and
/// every canonical wheel label, each a single token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocab {
    /// Validates an explicit token list (e.g. one read from a checkpoint).
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() {
                return Err(Error::InvalidVocab(format!("token {i} is empty")));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::InvalidVocab(format!("duplicate token `{t}`")));
            }
        }
        for required in [THINK_OPEN, THINK_CLOSE, ANSWER_OPEN, ANSWER_CLOSE, EOS, SEPARATOR] {
            if !index.contains_key(required) {
                return Err(Error::InvalidVocab(format!("missing token `{required}`")));
            }
        }
        Ok(Self { tokens, index })
    }

    /// Structural tokens, separator, the default fillers, then the wheel's
    /// canonical labels in cluster order.
    pub fn for_wheel(wheel: &EmotionWheel) -> Result<Self> {
        let mut tokens: Vec<String> = [THINK_OPEN, THINK_CLOSE, ANSWER_OPEN, ANSWER_CLOSE, EOS, SEPARATOR]
            .iter()
            .chain(DEFAULT_FILLERS.iter())
            .map(|s| s.to_string())
            .collect();
        tokens.extend(wheel.canonical_labels().map(String::from));
        Self::from_tokens(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn text(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn eos(&self) -> usize {
        self.index[EOS]
    }

    /// Filler token ids present in this vocabulary.
    pub fn filler_ids(&self) -> Vec<usize> {
        DEFAULT_FILLERS.iter().filter_map(|f| self.id(f)).collect()
    }

    /// Concatenates token texts up to (excluding) the end token.
    pub fn detokenize(&self, seq: &TokenSeq) -> String {
        let eos = self.eos();
        let mut out = String::new();
        for &t in seq.tokens.iter().take_while(|&&t| t != eos) {
            match self.tokens.get(t).map(String::as_str) {
                Some(SEPARATOR) => out.push_str(SEPARATOR_TEXT),
                Some(text) => out.push_str(text),
                None => {}
            }
        }
        out
    }
}

/// Dense row-major tensor of shape `[contexts, positions, vocab]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    shape: [usize; 3],
    data: Vec<f64>,
}

impl ParamTensor {
    pub fn zeros(shape: [usize; 3]) -> Self {
        Self {
            shape,
            data: vec![0.0; shape[0] * shape[1] * shape[2]],
        }
    }

    pub fn from_vec(shape: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if data.len() != shape[0] * shape[1] * shape[2] {
            return Err(Error::ShapeMismatch(format!(
                "{} values for shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn offset(&self, context: usize, position: usize) -> usize {
        (context * self.shape[1] + position) * self.shape[2]
    }

    pub fn row(&self, context: usize, position: usize) -> &[f64] {
        let o = self.offset(context, position);
        &self.data[o..o + self.shape[2]]
    }

    pub fn row_mut(&mut self, context: usize, position: usize) -> &mut [f64] {
        let o = self.offset(context, position);
        let v = self.shape[2];
        &mut self.data[o..o + v]
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &ParamTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", self.shape, other.shape)));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Logits of the toy policy plus its generation limits.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    logits: ParamTensor,
    max_len: usize,
    eos: usize,
}

impl PolicyParams {
    /// All-zero logits, i.e. the uniform policy.
    pub fn uniform(num_contexts: usize, max_len: usize, vocab_size: usize, eos: usize) -> Result<Self> {
        Self::new(ParamTensor::zeros([num_contexts, max_len, vocab_size]), max_len, eos)
    }

    pub fn new(logits: ParamTensor, max_len: usize, eos: usize) -> Result<Self> {
        let [c, p, v] = logits.shape();
        if c == 0 {
            return Err(Error::ShapeMismatch("policy needs at least one context".into()));
        }
        if v == 0 || eos >= v {
            return Err(Error::InvalidToken {
                token: eos,
                vocab_size: v,
            });
        }
        if max_len == 0 || max_len > p {
            return Err(Error::InvalidConfig {
                field: "max_len",
                reason: format!("must be in 1..={p}, got {max_len}"),
            });
        }
        if !logits.is_finite() {
            return Err(Error::ShapeMismatch("logits must be finite".into()));
        }
        Ok(Self { logits, max_len, eos })
    }

    pub fn logits(&self) -> &ParamTensor {
        &self.logits
    }

    /// Mutable access for optimizers; callers keep the entries finite.
    pub fn logits_mut(&mut self) -> &mut ParamTensor {
        &mut self.logits
    }

    pub fn num_contexts(&self) -> usize {
        self.logits.shape()[0]
    }

    pub fn max_positions(&self) -> usize {
        self.logits.shape()[1]
    }

    pub fn vocab_size(&self) -> usize {
        self.logits.shape()[2]
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn eos(&self) -> usize {
        self.eos
    }

    fn check_row(&self, context: usize, position: usize) -> Result<()> {
        if context >= self.num_contexts() {
            return Err(Error::ContextOutOfRange {
                context,
                num_contexts: self.num_contexts(),
            });
        }
        if position >= self.max_len {
            return Err(Error::PositionOutOfRange {
                position,
                max_len: self.max_len,
            });
        }
        Ok(())
    }

    fn check_seq(&self, seq: &TokenSeq) -> Result<()> {
        if seq.tokens.is_empty() {
            return Err(Error::InvalidSequence("empty sequence".into()));
        }
        if seq.tokens.len() > self.max_len {
            return Err(Error::InvalidSequence(format!(
                "length {} exceeds max_len {}",
                seq.tokens.len(),
                self.max_len
            )));
        }
        self.check_row(seq.context, 0)?;
        let v = self.vocab_size();
        for (i, &t) in seq.tokens.iter().enumerate() {
            if t >= v {
                return Err(Error::InvalidToken {
                    token: t,
                    vocab_size: v,
                });
            }
            if t == self.eos && i + 1 != seq.tokens.len() {
                return Err(Error::InvalidSequence(format!("token after end token at {i}")));
            }
        }
        Ok(())
    }
}

/// One generated output: a context and its tokens, ending at the first end
/// token or at `max_len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    pub context: usize,
    pub tokens: Vec<usize>,
}

/// Numerically stable softmax (max subtraction).
fn softmax_into(row: &[f64], out: &mut Vec<f64>) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.clear();
    out.extend(row.iter().map(|&x| libm::exp(x - max)));
    let total: f64 = out.iter().sum();
    for p in out.iter_mut() {
        *p /= total;
    }
}

fn log_softmax_at(row: &[f64], token: usize) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = row.iter().map(|&x| libm::exp(x - max)).sum();
    row[token] - max - libm::log(total)
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
pub(crate) fn unit_f64(rng: &mut impl Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) fn pick(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_positive
}

pub fn token_distribution(params: &PolicyParams, context: usize, position: usize) -> Result<Vec<f64>> {
    params.check_row(context, position)?;
    let mut out = Vec::with_capacity(params.vocab_size());
    softmax_into(params.logits.row(context, position), &mut out);
    Ok(out)
}

/// Ancestral sampling; the same `seed` always yields the same sequence.
pub fn sample_sequence(params: &PolicyParams, context: usize, seed: u64) -> Result<TokenSeq> {
    params.check_row(context, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probs = Vec::with_capacity(params.vocab_size());
    let mut tokens = Vec::with_capacity(params.max_len);
    for position in 0..params.max_len {
        softmax_into(params.logits.row(context, position), &mut probs);
        let token = pick(&probs, unit_f64(&mut rng));
        tokens.push(token);
        if token == params.eos {
            break;
        }
    }
    Ok(TokenSeq { context, tokens })
}

/// Argmax decoding; ties go to the lowest token id.
pub fn greedy_decode(params: &PolicyParams, context: usize) -> Result<TokenSeq> {
    params.check_row(context, 0)?;
    let mut tokens = Vec::with_capacity(params.max_len);
    for position in 0..params.max_len {
        let row = params.logits.row(context, position);
        let mut best = 0;
        for (i, &x) in row.iter().enumerate() {
            if x > row[best] {
                best = i;
            }
        }
        tokens.push(best);
        if best == params.eos {
            break;
        }
    }
    Ok(TokenSeq { context, tokens })
}

/// `log pi(seq | context)`, summed over positions.
pub fn sequence_logprob(params: &PolicyParams, seq: &TokenSeq) -> Result<f64> {
    params.check_seq(seq)?;
    Ok(seq
        .tokens
        .iter()
        .enumerate()
        .map(|(pos, &t)| log_softmax_at(params.logits.row(seq.context, pos), t))
        .sum())
}

/// `grad += scale * d log pi(seq) / d logits`. Each visited row receives
/// `scale * (onehot(token) - softmax(row))`.
pub fn accumulate_grad_sequence_logprob(
    params: &PolicyParams,
    seq: &TokenSeq,
    scale: f64,
    grad: &mut ParamTensor,
) -> Result<()> {
    params.check_seq(seq)?;
    if grad.shape() != params.logits.shape() {
        return Err(Error::ShapeMismatch(format!(
            "gradient {:?} vs logits {:?}",
            grad.shape(),
            params.logits.shape()
        )));
    }
    let mut probs = Vec::with_capacity(params.vocab_size());
    for (pos, &t) in seq.tokens.iter().enumerate() {
        softmax_into(params.logits.row(seq.context, pos), &mut probs);
        let row = grad.row_mut(seq.context, pos);
        for (g, p) in row.iter_mut().zip(&probs) {
            *g -= scale * p;
        }
        row[t] += scale;
    }
    Ok(())
}

pub fn grad_sequence_logprob(params: &PolicyParams, seq: &TokenSeq) -> Result<ParamTensor> {
    let mut grad = ParamTensor::zeros(params.logits.shape());
    accumulate_grad_sequence_logprob(params, seq, 1.0, &mut grad)?;
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_from(c: usize, p: usize, v: usize, f: impl Fn(usize) -> f64) -> PolicyParams {
        let data = (0..c * p * v).map(f).collect();
        PolicyParams::new(ParamTensor::from_vec([c, p, v], data).unwrap(), p, v - 1).unwrap()
    }

    #[test]
    fn zero_logits_are_uniform() {
        let params = PolicyParams::uniform(1, 3, 5, 4).unwrap();
        let d = token_distribution(&params, 0, 1).unwrap();
        assert!(d.iter().all(|&p| (p - 0.2).abs() < 1e-15));
    }

    #[test]
    fn extreme_logit_is_stable() {
        let params = params_from(1, 1, 4, |i| if i == 2 { 1000.0 } else { 0.0 });
        let d = token_distribution(&params, 0, 0).unwrap();
        // by hand: exp(0 - 1000) underflows to 0, so p = [0, 0, 1, 0]
        assert_eq!(d, vec![0.0, 0.0, 1.0, 0.0]);
        let params = params_from(1, 1, 4, |i| if i == 2 { -1000.0 } else { 1000.0 });
        let d = token_distribution(&params, 0, 0).unwrap();
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(d.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn shift_invariance() {
        let a = params_from(1, 1, 5, |i| i as f64 * 0.3 - 0.7);
        let b = params_from(1, 1, 5, |i| i as f64 * 0.3 - 0.7 + 42.0);
        let da = token_distribution(&a, 0, 0).unwrap();
        let db = token_distribution(&b, 0, 0).unwrap();
        for (x, y) in da.iter().zip(&db) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_rows_are_errors() {
        let params = PolicyParams::uniform(2, 3, 4, 3).unwrap();
        assert!(matches!(
            token_distribution(&params, 2, 0),
            Err(Error::ContextOutOfRange { .. })
        ));
        assert!(matches!(
            token_distribution(&params, 0, 3),
            Err(Error::PositionOutOfRange { .. })
        ));
    }

    #[test]
    fn sampling_is_seeded() {
        let params = params_from(2, 6, 5, |i| (i as f64 * 0.37).sin());
        assert_eq!(
            sample_sequence(&params, 1, 99).unwrap(),
            sample_sequence(&params, 1, 99).unwrap()
        );
    }

    #[test]
    fn certain_eos_stops_immediately() {
        let params = params_from(1, 5, 4, |i| if i % 4 == 3 { 1000.0 } else { 0.0 });
        let seq = sample_sequence(&params, 0, 7).unwrap();
        assert_eq!(seq.tokens, vec![3]);
    }

    #[test]
    fn uniform_logprob_is_length_times_log_v() {
        let params = PolicyParams::uniform(1, 4, 6, 5).unwrap();
        let seq = TokenSeq {
            context: 0,
            tokens: vec![0, 1, 2, 3],
        };
        let lp = sequence_logprob(&params, &seq).unwrap();
        assert!((lp + 4.0 * libm::log(6.0)).abs() < 1e-12);
    }

    #[test]
    fn invalid_sequences_are_rejected() {
        let params = PolicyParams::uniform(1, 3, 4, 3).unwrap();
        let bad = [
            TokenSeq {
                context: 0,
                tokens: vec![],
            },
            TokenSeq {
                context: 0,
                tokens: vec![0, 0, 0, 0],
            },
            TokenSeq {
                context: 0,
                tokens: vec![9],
            },
            TokenSeq {
                context: 0,
                tokens: vec![3, 0],
            },
            TokenSeq {
                context: 1,
                tokens: vec![0],
            },
        ];
        for seq in &bad {
            assert!(sequence_logprob(&params, seq).is_err(), "{seq:?}");
            assert!(grad_sequence_logprob(&params, seq).is_err());
        }
    }

    #[test]
    fn gradient_rows() {
        let params = params_from(2, 4, 5, |i| (i as f64 * 0.91).cos());
        let seq = TokenSeq {
            context: 1,
            tokens: vec![2, 0],
        };
        let g = grad_sequence_logprob(&params, &seq).unwrap();
        for c in 0..2 {
            for p in 0..4 {
                let row = g.row(c, p);
                if c == 1 && p < 2 {
                    assert!(row.iter().sum::<f64>().abs() < 1e-12);
                } else {
                    assert!(row.iter().all(|&x| x == 0.0));
                }
            }
        }
    }

    #[test]
    fn greedy_breaks_ties_low() {
        let params = PolicyParams::uniform(1, 3, 4, 3).unwrap();
        assert_eq!(greedy_decode(&params, 0).unwrap().tokens, vec![0, 0, 0]);
    }

    #[test]
    fn pick_handles_rounding_tail() {
        assert_eq!(pick(&[0.5, 0.5, 0.0], 0.999_999_999_999_999_9), 1);
    }
}
