use rayon::prelude::*;
use serde::Serialize;

use balis_core::{two_stage, ArrivalPolicy, HashedGraph, Params, Result, Seed};

/// Metrics of one greedy trial. `seed` is the full path that replays it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub experiment: &'static str,
    pub trial: u64,
    pub seed: String,
    pub n: usize,
    pub policy: String,
    pub final_size: u64,
    pub size_l: u64,
    pub size_r: u64,
    pub t_f: usize,
    pub t_b: usize,
    pub tau: usize,
    pub balanced: bool,
    pub independent: bool,
    pub reached_target: bool,
}

/// Runs the two-stage greedy on the graph keyed by `seed/graph:0` with the
/// run keyed by `seed/run:0`.
pub fn greedy_trial(params: &Params, policy: &ArrivalPolicy, seed: &Seed) -> Result<TrialRecord> {
    let th = balis_core::compute_thresholds(params)?;
    let g = HashedGraph::new(params.n, params.p, &seed.derive("graph", 0));
    let trace = two_stage(&g, policy, params, &seed.derive("run", 0))?;
    let set = &trace.final_set;
    Ok(TrialRecord {
        experiment: "greedy",
        trial: seed.path().last().map_or(0, |(_, i)| *i),
        seed: seed.to_string(),
        n: params.n,
        policy: policy.name().to_string(),
        final_size: set.size(),
        size_l: set.l_count(),
        size_r: set.r_count(),
        t_f: trace.t_f,
        t_b: trace.t_b,
        tau: trace.tau,
        balanced: set.is_balanced(&params.gamma),
        independent: set.is_independent(&g),
        reached_target: set.size() == th.t1 + th.t2,
    })
}

/// Trials `master/trial:0 .. master/trial:{count-1}`, in index order.
pub fn greedy_trials(params: &Params, policy: &ArrivalPolicy, master: &Seed, count: usize) -> Result<Vec<TrialRecord>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| greedy_trial(params, policy, &master.derive("trial", i)))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Quantiles {
    pub min: u64,
    pub median: u64,
    pub max: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub n: usize,
    pub p: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub mu: f64,
    pub policy: String,
    pub trials: usize,
}

impl ConfigEcho {
    pub fn new(params: &Params, policy: &ArrivalPolicy, trials: usize) -> Self {
        ConfigEcho {
            n: params.n,
            p: params.p,
            gamma: params.gamma.value(),
            epsilon: params.epsilon,
            mu: params.mu,
            policy: policy.name().to_string(),
            trials,
        }
    }
}

/// Aggregate over a batch of trials.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: &'static str,
    pub seed: String,
    pub config: ConfigEcho,
    pub mean_size: f64,
    pub stderr_size: f64,
    pub size_quantiles: Quantiles,
    pub freq_target: f64,
    pub freq_balanced: f64,
    pub freq_independent: f64,
    pub mean_t_f: f64,
    pub max_t_f: usize,
    /// Only present when timing was requested; excluded from replay checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<u128>,
}

pub fn mean_and_stderr(xs: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let xs: Vec<f64> = xs.into_iter().collect();
    let k = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

pub fn summarize(records: &[TrialRecord], config: ConfigEcho, master: &Seed) -> Summary {
    let k = records.len() as f64;
    let freq = |f: fn(&TrialRecord) -> bool| records.iter().filter(|r| f(r)).count() as f64 / k;
    let (mean_size, stderr_size) = mean_and_stderr(records.iter().map(|r| r.final_size as f64));
    let mut sizes: Vec<u64> = records.iter().map(|r| r.final_size).collect();
    sizes.sort_unstable();
    Summary {
        experiment: "greedy-summary",
        seed: master.to_string(),
        config,
        mean_size,
        stderr_size,
        size_quantiles: Quantiles {
            min: sizes.first().copied().unwrap_or(0),
            median: sizes.get(sizes.len() / 2).copied().unwrap_or(0),
            max: sizes.last().copied().unwrap_or(0),
        },
        freq_target: freq(|r| r.reached_target),
        freq_balanced: freq(|r| r.balanced),
        freq_independent: freq(|r| r.independent),
        mean_t_f: mean_and_stderr(records.iter().map(|r| r.t_f as f64)).0,
        max_t_f: records.iter().map(|r| r.t_f).max().unwrap_or(0),
        wall_clock_ms: None,
    }
}
