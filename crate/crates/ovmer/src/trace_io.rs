use ovmer_core::{TrainConfig, TrainTrace};
use serde::Serialize;

pub const CSV_HEADER: &str = "iteration,mean_reward,mean_accuracy,format_rate,mean_kl,loss,grad_norm";

pub fn to_csv(trace: &TrainTrace) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.iteration, r.mean_reward, r.mean_accuracy, r.format_rate, r.mean_kl, r.loss, r.grad_norm
        ));
    }
    out
}

#[derive(Serialize)]
struct TraceDoc<'a> {
    config: &'a TrainConfig,
    #[serde(flatten)]
    trace: &'a TrainTrace,
}

/// Trace records with the hyperparameters that produced them.
pub fn to_json(trace: &TrainTrace, config: &TrainConfig) -> String {
    let mut out = serde_json::to_string_pretty(&TraceDoc { config, trace }).expect("trace serializes");
    out.push('\n');
    out
}
