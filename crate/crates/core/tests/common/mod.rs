#![allow(dead_code)]

use ovmer_core::{EmotionWheel, LabelSet, Sample};

pub fn wheel() -> EmotionWheel {
    let clusters = [
        ("joy", &["joy", "happy", "joyful", "cheerful", "delighted"]),
        ("sadness", &["sadness", "sad", "grief", "sorrowful", "gloomy"]),
        ("anger", &["anger", "angry", "furious", "irritated", "annoyed"]),
        ("fear", &["fear", "fearful", "afraid", "anxious", "scared"]),
        (
            "surprise",
            &["surprise", "surprised", "amazed", "astonished", "shocked"],
        ),
        ("disgust", &["disgust", "disgusted", "repulsed", "contempt", "revolted"]),
        ("trust", &["trust", "calm", "relaxed", "grateful", "admiring"]),
        (
            "anticipation",
            &["anticipation", "hopeful", "eager", "curious", "expectant"],
        ),
    ];
    EmotionWheel::new(
        clusters
            .iter()
            .map(|(name, labels)| (name.to_string(), labels.iter().map(|l| l.to_string()).collect(), None)),
        [("glad".to_string(), "happy".to_string())],
    )
    .unwrap()
}

pub fn sample(id: &str, context: usize, labels: &[&str]) -> Sample {
    Sample {
        id: id.to_string(),
        context,
        query: "What emotions does the speaker express?".to_string(),
        gt: LabelSet::from_raw(labels),
    }
}

pub fn four_context_task() -> Vec<Sample> {
    vec![
        sample("s0", 0, &["happy", "cheerful"]),
        sample("s1", 1, &["sad", "grief"]),
        sample("s2", 2, &["angry"]),
        sample("s3", 3, &["anxious", "fearful"]),
    ]
}

use ovmer_core::{ParamTensor, PolicyParams, TokenSeq};
use rand_chacha::rand_core::Rng;
use rand_chacha::ChaCha8Rng;

pub fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

pub fn below(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Logits uniform in [-scale, scale]; the last token is the end token.
pub fn random_params(rng: &mut ChaCha8Rng, contexts: usize, max_len: usize, vocab: usize, scale: f64) -> PolicyParams {
    let data = (0..contexts * max_len * vocab)
        .map(|_| (2.0 * unit(rng) - 1.0) * scale)
        .collect();
    PolicyParams::new(
        ParamTensor::from_vec([contexts, max_len, vocab], data).unwrap(),
        max_len,
        vocab - 1,
    )
    .unwrap()
}

/// A valid sequence: random non-end tokens, optionally closed by the end token.
pub fn random_seq(rng: &mut ChaCha8Rng, params: &PolicyParams) -> TokenSeq {
    let len = 1 + below(rng, params.max_len());
    let v = params.vocab_size();
    let mut tokens: Vec<usize> = (0..len).map(|_| below(rng, v - 1)).collect();
    if below(rng, 2) == 0 {
        tokens[len - 1] = params.eos();
    }
    TokenSeq {
        context: below(rng, params.num_contexts()),
        tokens,
    }
}

/// Every sequence the policy can emit: stops at the end token or at max_len.
pub fn enumerate_sequences(context: usize, vocab: usize, eos: usize, max_len: usize) -> Vec<TokenSeq> {
    let mut done = Vec::new();
    let mut frontier = vec![Vec::<usize>::new()];
    while let Some(prefix) = frontier.pop() {
        for t in 0..vocab {
            let mut next = prefix.clone();
            next.push(t);
            if t == eos || next.len() == max_len {
                done.push(TokenSeq { context, tokens: next });
            } else {
                frontier.push(next);
            }
        }
    }
    done
}

/// Relative error between two flat vectors in the max norm.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|x| x.abs()).fold(0.0, f64::max);
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

/// Central finite differences of `f` over every logit.
pub fn finite_diff(params: &PolicyParams, step: f64, f: impl Fn(&PolicyParams) -> f64) -> Vec<f64> {
    let n = params.logits().as_slice().len();
    (0..n)
        .map(|i| {
            let mut plus = params.clone();
            plus.logits_mut().as_mut_slice()[i] += step;
            let mut minus = params.clone();
            minus.logits_mut().as_mut_slice()[i] -= step;
            (f(&plus) - f(&minus)) / (2.0 * step)
        })
        .collect()
}
