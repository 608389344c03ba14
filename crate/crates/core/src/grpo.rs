//! Group Relative Policy Optimization over the toy policy.
//!
//! For each sample the old policy draws a group of `G` outputs. Their rewards
//! are normalized within the group to give advantages
//!
//! ```text
//! A_i = (r_i - mean(r)) / std(r)          (population std)
//! ```
//!
//! and the policy minimizes
//!
//! ```text
//! L = -(1/G) * sum_i [ min(rho_i * A_i, clip(rho_i, 1-eps, 1+eps) * A_i)
//!                      - beta_kl * KL_i ]
//! rho_i = pi_theta(o_i) / pi_old(o_i)      (whole-sequence ratio)
//! KL_i  = t - ln t - 1,  t = pi_ref(o_i) / pi_theta(o_i)
//! ```
//!
//! with plain gradient descent. The reference policy is the policy as it
//! stood when reinforcement learning began (after the format warm-up).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metric::LabelSet;
use crate::policy::{
    accumulate_grad_sequence_logprob, greedy_decode, sample_sequence, sequence_logprob, ParamTensor, PolicyParams,
    TokenSeq, Vocab,
};
use crate::rewards::{combined_reward, RewardBreakdown};
use crate::warmup::cold_start;
use crate::wheel::EmotionWheel;

/// Log-ratio bound applied before exponentiating in the KL estimator.
pub const KL_LOG_RATIO_CLAMP: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ColdStartConfig {
    /// Full-batch likelihood steps; 0 starts reinforcement learning from the
    /// uniform policy.
    pub steps: usize,
    pub learning_rate: f64,
    /// Template targets per context.
    pub corpus_size: usize,
    /// Filler tokens inside the think block of each target.
    pub think_len: usize,
}

impl Default for ColdStartConfig {
    fn default() -> Self {
        Self {
            steps: 100,
            learning_rate: 1.0,
            corpus_size: 64,
            think_len: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub group_size: usize,
    pub clip_eps: f64,
    pub beta_format: f64,
    pub beta_kl: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub inner_epochs: usize,
    pub seed: u64,
    pub std_floor: f64,
    pub max_len: usize,
    pub cold_start: ColdStartConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            group_size: 8,
            clip_eps: 0.2,
            beta_format: 0.5,
            beta_kl: 0.01,
            learning_rate: 0.5,
            iterations: 500,
            inner_epochs: 1,
            seed: 7,
            std_floor: 1e-8,
            max_len: 10,
            cold_start: ColdStartConfig::default(),
        }
    }
}

fn invalid(field: &'static str, reason: String) -> Error {
    Error::InvalidConfig { field, reason }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.group_size < 2 {
            return Err(invalid("group_size", format!("must be >= 2, got {}", self.group_size)));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return Err(invalid("clip_eps", format!("must be in (0, 1), got {}", self.clip_eps)));
        }
        for (field, value) in [
            ("beta_format", self.beta_format),
            ("beta_kl", self.beta_kl),
            ("learning_rate", self.learning_rate),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(invalid(field, format!("must be finite and >= 0, got {value}")));
            }
        }
        if self.inner_epochs == 0 {
            return Err(invalid("inner_epochs", "must be >= 1".into()));
        }
        if !(self.std_floor > 0.0 && self.std_floor.is_finite()) {
            return Err(invalid("std_floor", format!("must be > 0, got {}", self.std_floor)));
        }
        if self.max_len == 0 {
            return Err(invalid("max_len", "must be >= 1".into()));
        }
        let cs = &self.cold_start;
        if cs.steps > 0 {
            if cs.corpus_size == 0 {
                return Err(invalid("cold_start.corpus_size", "must be >= 1".into()));
            }
            if !(cs.learning_rate > 0.0 && cs.learning_rate.is_finite()) {
                return Err(invalid(
                    "cold_start.learning_rate",
                    format!("must be > 0, got {}", cs.learning_rate),
                ));
            }
            if cs.think_len + 6 > self.max_len {
                return Err(invalid(
                    "cold_start.think_len",
                    format!("think_len + 6 must fit in max_len {}", self.max_len),
                ));
            }
        }
        Ok(())
    }
}

/// One training or evaluation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    /// Index of the (video, message) pair this sample is conditioned on.
    pub context: usize,
    pub query: String,
    pub gt: LabelSet,
}

/// Group-normalized advantages. A group whose population std is below
/// `std_floor` gets all-zero advantages.
pub fn compute_advantages(rewards: &[f64], std_floor: f64) -> Result<Vec<f64>> {
    if rewards.len() < 2 {
        return Err(Error::GroupTooSmall(rewards.len()));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var);
    if std.is_nan() || std < std_floor {
        return Ok(alloc::vec![0.0; rewards.len()]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlTerm {
    pub value: f64,
    /// d value / d logp_theta, i.e. `1 - t`.
    pub grad: f64,
    pub clamped: bool,
}

pub fn kl_term(logp_theta: f64, logp_ref: f64) -> KlTerm {
    let raw = logp_ref - logp_theta;
    let log_ratio = raw.clamp(-KL_LOG_RATIO_CLAMP, KL_LOG_RATIO_CLAMP);
    let t = libm::exp(log_ratio);
    KlTerm {
        value: t - log_ratio - 1.0,
        grad: 1.0 - t,
        clamped: log_ratio != raw,
    }
}

/// Per-sample estimate `t - ln t - 1` with `t = exp(logp_ref - logp_theta)`.
/// Non-negative, and exactly zero when the two log-probabilities agree.
pub fn kl_estimate(logp_theta: f64, logp_ref: f64) -> f64 {
    kl_term(logp_theta, logp_ref).value
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Surrogate {
    pub value: f64,
    /// d value / d ratio: the advantage on the unclipped branch, 0 on the
    /// clipped (constant) branch.
    pub ratio_slope: f64,
}

/// `min(ratio * adv, clip(ratio, 1 - eps, 1 + eps) * adv)`. Exact ties select
/// the unclipped branch.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip_eps: f64) -> Surrogate {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * advantage;
    if unclipped <= clipped {
        Surrogate {
            value: unclipped,
            ratio_slope: advantage,
        }
    } else {
        Surrogate {
            value: clipped,
            ratio_slope: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub tokens: TokenSeq,
    pub text: String,
    pub reward: RewardBreakdown,
    /// Under the sampling policy; equals `logprob_old` when recorded.
    pub logprob_theta: f64,
    pub logprob_old: f64,
    pub logprob_ref: f64,
    pub advantage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutGroup {
    pub context: usize,
    pub rollouts: Vec<Rollout>,
}

impl RolloutGroup {
    pub fn len(&self) -> usize {
        self.rollouts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rollouts.is_empty()
    }

    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.rollouts.iter().map(|r| r.reward.total)
    }
}

/// What rollouts are scored against.
#[derive(Debug, Clone, Copy)]
pub struct Environment<'a> {
    pub wheel: &'a EmotionWheel,
    pub vocab: &'a Vocab,
}

/// Samples `config.group_size` outputs from `theta_old`, scores them and
/// fills in group-normalized advantages.
pub fn rollout_group(
    env: Environment<'_>,
    theta_old: &PolicyParams,
    reference: &PolicyParams,
    context: usize,
    gt: &LabelSet,
    config: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<RolloutGroup> {
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let mut rollouts = Vec::with_capacity(config.group_size);
    for _ in 0..config.group_size {
        let tokens = sample_sequence(theta_old, context, rng.next_u64())?;
        let text = env.vocab.detokenize(&tokens);
        let reward = combined_reward(&text, gt, env.wheel, config.beta_format)?;
        let logprob_old = sequence_logprob(theta_old, &tokens)?;
        let logprob_ref = sequence_logprob(reference, &tokens)?;
        rollouts.push(Rollout {
            tokens,
            text,
            reward,
            logprob_theta: logprob_old,
            logprob_old,
            logprob_ref,
            advantage: 0.0,
        });
    }
    let rewards: Vec<f64> = rollouts.iter().map(|r| r.reward.total).collect();
    let advantages = compute_advantages(&rewards, config.std_floor)?;
    for (r, a) in rollouts.iter_mut().zip(advantages) {
        r.advantage = a;
    }
    Ok(RolloutGroup { context, rollouts })
}

/// Loss of one group at `theta`, its gradient and KL diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GrpoStep {
    pub loss: f64,
    pub grad: ParamTensor,
    /// Mean per-rollout KL estimate at `theta`.
    pub mean_kl: f64,
    /// Rollouts whose KL log-ratio hit the clamp.
    pub kl_clamped: usize,
}

fn objective(
    group: &RolloutGroup,
    theta: &PolicyParams,
    config: &TrainConfig,
    mut grad: Option<&mut ParamTensor>,
) -> Result<(f64, f64, usize)> {
    if group.is_empty() {
        return Err(Error::GroupTooSmall(0));
    }
    let g = group.len() as f64;
    let mut total = 0.0;
    let mut kl_sum = 0.0;
    let mut clamped = 0;
    for (i, r) in group.rollouts.iter().enumerate() {
        let logp = sequence_logprob(theta, &r.tokens)?;
        let ratio = libm::exp(logp - r.logprob_old);
        let surrogate = clipped_surrogate(ratio, r.advantage, config.clip_eps);
        let kl = kl_term(logp, r.logprob_ref);
        let term = surrogate.value - config.beta_kl * kl.value;
        let slope = surrogate.ratio_slope * ratio - config.beta_kl * kl.grad;
        if !(ratio.is_finite() && term.is_finite() && slope.is_finite()) {
            return Err(Error::NonFinite { rollout: i });
        }
        total += term;
        kl_sum += kl.value;
        clamped += usize::from(kl.clamped);
        if let Some(grad) = grad.as_deref_mut() {
            accumulate_grad_sequence_logprob(theta, &r.tokens, -slope / g, grad)?;
        }
    }
    Ok((-total / g, kl_sum / g, clamped))
}

/// Clipped-surrogate loss with KL penalty for one group, evaluated at
/// `theta` against the old and reference log-probabilities stored in the
/// group.
pub fn grpo_loss(group: &RolloutGroup, theta: &PolicyParams, config: &TrainConfig) -> Result<f64> {
    objective(group, theta, config, None).map(|(loss, _, _)| loss)
}

pub fn grpo_loss_and_grad(group: &RolloutGroup, theta: &PolicyParams, config: &TrainConfig) -> Result<GrpoStep> {
    let mut grad = ParamTensor::zeros(theta.logits().shape());
    let (loss, mean_kl, kl_clamped) = objective(group, theta, config, Some(&mut grad))?;
    Ok(GrpoStep {
        loss,
        grad,
        mean_kl,
        kl_clamped,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceRecord {
    pub iteration: usize,
    pub mean_reward: f64,
    pub mean_accuracy: f64,
    pub format_rate: f64,
    pub mean_kl: f64,
    /// Summed group loss of the first inner epoch.
    pub loss: f64,
    /// Norm of the first inner epoch's summed gradient.
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
    /// KL evaluations whose log-ratio was clamped.
    pub kl_clamped: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    /// Frozen anchor of the KL penalty.
    pub reference: PolicyParams,
    pub vocab: Vocab,
    pub trace: TrainTrace,
}

/// A failed run, carrying everything recorded before the failure.
#[derive(Debug, Clone, thiserror::Error)]
#[error("training failed after {} iterations: {error}", trace.records.len())]
pub struct TrainFailure {
    pub error: Error,
    pub trace: TrainTrace,
}

fn fail(error: Error, trace: &TrainTrace) -> TrainFailure {
    TrainFailure {
        error,
        trace: trace.clone(),
    }
}

pub fn num_contexts(dataset: &[Sample]) -> Result<usize> {
    let max = dataset.iter().map(|s| s.context).max().ok_or(Error::EmptyDataset)?;
    Ok(max + 1)
}

/// The warmed-up starting policy for `dataset` (also the KL reference).
pub fn initial_policy(
    dataset: &[Sample],
    vocab: &Vocab,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<PolicyParams> {
    let mut params = PolicyParams::uniform(num_contexts(dataset)?, config.max_len, vocab.len(), vocab.eos())?;
    cold_start(&mut params, vocab, &config.cold_start, rng)?;
    Ok(params)
}

pub fn train(
    dataset: &[Sample],
    wheel: &EmotionWheel,
    config: &TrainConfig,
) -> core::result::Result<TrainOutcome, TrainFailure> {
    train_with_observer(dataset, wheel, config, |_, _| {})
}

/// Like [`train`], calling `observer` after every completed iteration.
pub fn train_with_observer<F>(
    dataset: &[Sample],
    wheel: &EmotionWheel,
    config: &TrainConfig,
    mut observer: F,
) -> core::result::Result<TrainOutcome, TrainFailure>
where
    F: FnMut(&TraceRecord, &PolicyParams),
{
    let mut trace = TrainTrace::default();
    let setup = || -> Result<(Vocab, PolicyParams, ChaCha8Rng)> {
        config.validate()?;
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if dataset.iter().any(|s| s.gt.is_empty()) {
            return Err(Error::EmptyGroundTruth);
        }
        let vocab = Vocab::for_wheel(wheel)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = initial_policy(dataset, &vocab, config, &mut rng)?;
        Ok((vocab, params, rng))
    };
    let (vocab, mut params, mut rng) = setup().map_err(|e| fail(e, &trace))?;
    let reference = params.clone();
    let env = Environment { wheel, vocab: &vocab };

    for iteration in 1..=config.iterations {
        let old = params.clone();
        let mut groups = Vec::with_capacity(dataset.len());
        for sample in dataset {
            let group = rollout_group(env, &old, &reference, sample.context, &sample.gt, config, &mut rng)
                .map_err(|e| fail(e, &trace))?;
            groups.push(group);
        }

        let mut first = None;
        for _ in 0..config.inner_epochs {
            let mut grad = ParamTensor::zeros(params.logits().shape());
            let mut loss = 0.0;
            let mut kl = 0.0;
            let mut clamped = 0;
            for group in &groups {
                let step = grpo_loss_and_grad(group, &params, config).map_err(|e| fail(e, &trace))?;
                loss += step.loss;
                kl += step.mean_kl;
                clamped += step.kl_clamped;
                grad.axpy(1.0, &step.grad).map_err(|e| fail(e, &trace))?;
            }
            trace.kl_clamped += clamped;
            if !loss.is_finite() {
                return Err(fail(Error::NonFinite { rollout: 0 }, &trace));
            }
            if first.is_none() {
                first = Some((loss, kl / groups.len() as f64, grad.norm()));
            }
            params
                .logits_mut()
                .axpy(-config.learning_rate, &grad)
                .map_err(|e| fail(e, &trace))?;
            if !params.logits().is_finite() {
                return Err(fail(Error::NonFiniteParams { iteration }, &trace));
            }
        }

        let (loss, mean_kl, grad_norm) = first.unwrap_or_default();
        let n = (groups.len() * config.group_size) as f64;
        let all = || groups.iter().flat_map(|g| g.rollouts.iter());
        let record = TraceRecord {
            iteration,
            mean_reward: all().map(|r| r.reward.total).sum::<f64>() / n,
            mean_accuracy: all().map(|r| r.reward.accuracy).sum::<f64>() / n,
            format_rate: all().map(|r| r.reward.format).sum::<f64>() / n,
            mean_kl,
            loss,
            grad_norm,
        };
        observer(&record, &params);
        trace.records.push(record);
    }

    Ok(TrainOutcome {
        params,
        reference,
        vocab,
        trace,
    })
}

/// Greedy decode of one sample's context, scored against its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyResult {
    pub id: String,
    pub context: usize,
    pub text: String,
    pub answer: LabelSet,
    pub reward: RewardBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyReport {
    pub per_sample: Vec<GreedyResult>,
    pub mean_accuracy: f64,
    pub format_rate: f64,
}

pub fn evaluate_greedy(
    params: &PolicyParams,
    env: Environment<'_>,
    dataset: &[Sample],
    beta_format: f64,
) -> Result<GreedyReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut per_sample = Vec::with_capacity(dataset.len());
    for sample in dataset {
        let seq = greedy_decode(params, sample.context)?;
        let text = env.vocab.detokenize(&seq);
        let reward = combined_reward(&text, &sample.gt, env.wheel, beta_format)?;
        let answer = crate::rewards::extract_answer(&crate::rewards::check_format(&text));
        per_sample.push(GreedyResult {
            id: sample.id.clone(),
            context: sample.context,
            text,
            answer,
            reward,
        });
    }
    let n = per_sample.len() as f64;
    Ok(GreedyReport {
        mean_accuracy: per_sample.iter().map(|r| r.reward.accuracy).sum::<f64>() / n,
        format_rate: per_sample.iter().map(|r| r.reward.format).sum::<f64>() / n,
        per_sample,
    })
}
