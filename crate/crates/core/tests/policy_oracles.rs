mod common;

use common::{enumerate_sequences, finite_diff, random_params, random_seq, rel_err};
use ovmer_core::{
    grad_sequence_logprob, sample_sequence, sequence_logprob, token_distribution, ParamTensor, PolicyParams,
};
use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn sequence_space_probabilities_sum_to_one() {
    // 3-token vocabulary, max_len 2: exhaustive enumeration of all outputs
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = random_params(&mut rng, 1, 2, 3, 2.0);
    let seqs = enumerate_sequences(0, 3, params.eos(), 2);
    assert_eq!(seqs.len(), 1 + 2 * 3);
    let total: f64 = seqs.iter().map(|s| sequence_logprob(&params, s).unwrap().exp()).sum();
    assert!((total - 1.0).abs() < 1e-9, "{total}");

    for vocab in 2..=4 {
        for max_len in 1..=3 {
            for scale in [0.5, 5.0, 1000.0] {
                let params = random_params(&mut rng, 2, max_len, vocab, scale);
                for ctx in 0..2 {
                    let total: f64 = enumerate_sequences(ctx, vocab, params.eos(), max_len)
                        .iter()
                        .map(|s| sequence_logprob(&params, s).unwrap().exp())
                        .sum();
                    assert!(
                        (total - 1.0).abs() < 1e-9,
                        "v={vocab} len={max_len} scale={scale}: {total}"
                    );
                }
            }
        }
    }
}

#[test]
fn first_token_frequencies_match_distribution() {
    let data = vec![1.2, -0.3, 0.0, 0.7, -2.0];
    let params = PolicyParams::new(ParamTensor::from_vec([1, 1, 5], data).unwrap(), 1, 4).unwrap();
    let probs = token_distribution(&params, 0, 0).unwrap();
    let n = 100_000usize;
    let mut counts = [0usize; 5];
    for seed in 0..n as u64 {
        counts[sample_sequence(&params, 0, seed).unwrap().tokens[0]] += 1;
    }
    for (c, p) in counts.iter().zip(&probs) {
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((*c as f64 - n as f64 * p).abs() <= 3.0 * sigma, "count {c} vs p {p}");
    }
}

#[test]
fn logprob_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..25 {
        let vocab = 2 + common::below(&mut rng, 5);
        let max_len = 1 + common::below(&mut rng, 4);
        let params = random_params(&mut rng, 2, max_len, vocab, 2.0);
        let seq = random_seq(&mut rng, &params);
        let analytic = grad_sequence_logprob(&params, &seq).unwrap();
        let numeric = finite_diff(&params, 1e-5, |p| sequence_logprob(p, &seq).unwrap());
        let err = rel_err(analytic.as_slice(), &numeric);
        assert!(err < 1e-5, "relative error {err}");
    }
}

#[test]
fn sampled_sequences_have_nonpositive_logprob() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = random_params(&mut rng, 3, 6, 7, 3.0);
    for seed in 0..200 {
        let seq = sample_sequence(&params, (seed % 3) as usize, seed).unwrap();
        assert!(seq.tokens.len() <= 6);
        let lp = sequence_logprob(&params, &seq).unwrap();
        assert!(lp.is_finite() && lp <= 0.0);
    }
}

proptest! {
    #[test]
    fn distributions_normalize(row in prop::collection::vec(-1e3f64..1e3, 2..12)) {
        let v = row.len();
        let params = PolicyParams::new(ParamTensor::from_vec([1, 1, v], row).unwrap(), 1, v - 1).unwrap();
        let d = token_distribution(&params, 0, 0).unwrap();
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(d.iter().all(|p| p.is_finite() && *p >= 0.0));
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>(), ctx in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let params = random_params(&mut rng, 3, 5, 6, 4.0);
        prop_assert_eq!(sample_sequence(&params, ctx, seed).unwrap(), sample_sequence(&params, ctx, seed).unwrap());
    }
}
