//! Open-vocabulary emotion recognition rewards and a GRPO training engine.
//!
//! The crate is `no_std` (it needs `alloc`). Everything that touches files,
//! JSON or the command line lives in the `ovmer` companion crate.
//!
//! Layout:
//! - [`wheel`]: the emotion-wheel taxonomy and label normalization
//! - [`metric`]: the wheel-based precision/recall score between label sets
//! - [`rewards`]: template parsing, format and accuracy rewards
//! - [`policy`]: a position-wise softmax sequence policy with exact gradients
//! - [`grpo`]: group-normalized advantages, the clipped objective and training
//! - [`warmup`]: supervised format warm-up run before reinforcement learning
#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod grpo;
pub mod metric;
pub mod policy;
pub mod rewards;
pub mod warmup;
pub mod wheel;

pub use error::{Error, Result};
pub use grpo::{
    clipped_surrogate, compute_advantages, grpo_loss, grpo_loss_and_grad, kl_estimate, rollout_group, train,
    train_with_observer, ColdStartConfig, Rollout, RolloutGroup, Sample, TraceRecord, TrainConfig, TrainFailure,
    TrainOutcome, TrainTrace,
};
pub use metric::{aggregate, ew_score, LabelSet, MetricReport};
pub use policy::{
    grad_sequence_logprob, greedy_decode, sample_sequence, sequence_logprob, token_distribution, ParamTensor,
    PolicyParams, TokenSeq, Vocab,
};
pub use rewards::{
    check_format, combined_reward, extract_answer, format_cold_start_target, RewardBreakdown, StructuredOutput,
};
pub use wheel::{normalize_label, Cluster, ClusterId, EmotionWheel};
