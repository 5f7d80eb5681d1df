//! Correlated graph families, success-event estimation, overlap profiles
//! and forbidden-tuple counting at small scale.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Adjacency, BipartiteGraph, HashedGraph, Provenance, Side};
use crate::online::{ledger_at, run_online, run_online_until, ArrivalPolicy, Arrivals, OnlineAlgorithm, RevealedLedger, RunTrace};
use crate::oracle::enumerate_balanced_independent_sets;
use crate::params::{is_gamma_balanced, Gamma, Params};
use crate::seed::Seed;
use crate::set::BalancedSet;

pub use crate::online::stopping_time_tau;

pub const MAX_HISTOGRAM_N: usize = 20;
pub const MAX_HISTOGRAM_SETS: usize = 20_000;
pub const MAX_FORBIDDEN_N: usize = 8;
pub const MAX_FORBIDDEN_M: usize = 2;
pub const MAX_REFERENCE_N: usize = 6;

/// How a family is built: edge probability for resampled pairs, the τ
/// target recorded in the base trace, the step T and the copy count m.
#[derive(Debug, Clone, Copy)]
pub struct FamilyConfig {
    pub p: f64,
    pub tau_target: u64,
    pub t: usize,
    pub m: usize,
}

/// m graphs sharing every pair revealed by the first T rounds on `base`.
#[derive(Debug, Clone)]
pub struct CorrelatedFamily {
    pub base: BipartiteGraph,
    pub t: usize,
    pub m: usize,
    pub ledger: RevealedLedger,
    /// `copies[0]` is the base graph.
    pub copies: Vec<BipartiteGraph>,
    /// Seed of the base run; rerunning with it replays the shared prefix.
    pub run_seed: Seed,
    /// The base run cut at round T.
    pub prefix: RunTrace,
}

impl CorrelatedFamily {
    pub fn n(&self) -> usize {
        self.base.n()
    }

    /// Whether both endpoints of `(u, v)` were exposed by round T.
    pub fn on_ledger(&self, u: usize, v: usize) -> bool {
        self.ledger.exposure.exposed_l.contains(u) && self.ledger.exposure.exposed_r.contains(v)
    }
}

/// Builds G_1^(T), ..., G_m^(T) around `base`.
///
/// The algorithm is run on `base` under `run_seed` for T rounds. Copy 0 is
/// `base`; copy i >= 1 keeps the status of every pair inside V_A(T) and
/// draws every other pair afresh from `resample_seed/copy:i`.
pub fn build_family(
    base: &BipartiteGraph,
    algorithm: &dyn OnlineAlgorithm,
    policy: &ArrivalPolicy,
    config: FamilyConfig,
    run_seed: &Seed,
    resample_seed: &Seed,
) -> Result<CorrelatedFamily> {
    let n = base.n();
    let FamilyConfig { p, tau_target, t, m } = config;
    if t == 0 || t > 2 * n {
        return Err(Error::Param(format!("T = {t} must lie in [1, {}]", 2 * n)));
    }
    if m == 0 {
        return Err(Error::Param("m must be at least 1".into()));
    }
    let prefix = run_online_until(base, algorithm, Arrivals::Policy(policy), tau_target, run_seed, Some(t))?;
    let ledger = ledger_at(&prefix, base, t)?;
    let exposure = &ledger.exposure;

    let mut copies = Vec::with_capacity(m);
    copies.push(base.clone());
    for i in 1..m {
        let copy_seed = resample_seed.derive("copy", i as u64);
        let fresh = HashedGraph::new(n, p, &copy_seed);
        let copy = BipartiteGraph::from_fn(n, |u, v| {
            if exposure.exposed_l.contains(u) && exposure.exposed_r.contains(v) {
                base.has_edge(u, v)
            } else {
                fresh.has_edge(u, v)
            }
        });
        copies.push(copy.with_provenance(Provenance::Sampled { p, seed: copy_seed }));
    }
    Ok(CorrelatedFamily { base: base.clone(), t, m, ledger, copies, run_seed: run_seed.clone(), prefix })
}

/// Success-event estimation setup.
#[derive(Debug, Clone, Copy)]
pub struct SuccessConfig {
    pub n: usize,
    pub p: f64,
    pub gamma: Gamma,
    pub tau_target: u64,
    pub m: usize,
    pub k: u64,
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuccessEstimate {
    /// Frequency of S: every copy's output is a γ-balanced independent set
    /// of size at least k.
    pub p_hat_s: f64,
    /// Frequency of E: the same for the base output alone.
    pub p_hat_e: f64,
    pub stderr_s: f64,
    pub stderr_e: f64,
    pub trials: usize,
    pub m: usize,
    pub k: u64,
}

impl SuccessEstimate {
    /// Delta-method standard error of `p_hat_s - p_hat_e^m`.
    pub fn combined_stderr(&self) -> f64 {
        let m = self.m as i32;
        let de = m as f64 * self.p_hat_e.powi(m - 1) * self.stderr_e;
        (self.stderr_s.powi(2) + de.powi(2)).sqrt()
    }
}

/// Outcome of a single success trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuccessTrial {
    pub tau: usize,
    pub sizes: Vec<u64>,
    pub success_all: bool,
    pub success_base: bool,
}

/// One trial: sample the base graph, run to τ, build the family at T = τ and
/// run the algorithm to completion on every copy.
pub fn success_trial(
    config: &SuccessConfig,
    algorithm: &dyn OnlineAlgorithm,
    policy: &ArrivalPolicy,
    seed: &Seed,
) -> Result<SuccessTrial> {
    let base = HashedGraph::new(config.n, config.p, &seed.derive("graph", 0)).to_dense();
    let run_seed = seed.derive("run", 0);
    let base_trace = run_online(&base, algorithm, Arrivals::Policy(policy), config.tau_target, &run_seed)?;
    let tau = base_trace.tau;
    let family = build_family(
        &base,
        algorithm,
        policy,
        FamilyConfig { p: config.p, tau_target: config.tau_target, t: tau, m: config.m },
        &run_seed,
        &seed.derive("family", 0),
    )?;
    let succeeds = |g: &BipartiteGraph, set: &BalancedSet| {
        set.size() >= config.k && set.is_balanced(&config.gamma) && set.is_independent(g)
    };
    let mut sizes = vec![base_trace.final_size()];
    let mut success_all = succeeds(&base, &base_trace.final_set);
    let success_base = success_all;
    for copy in &family.copies[1..] {
        let trace = run_online(copy, algorithm, Arrivals::Policy(policy), config.tau_target, &run_seed)?;
        success_all &= succeeds(copy, &trace.final_set);
        sizes.push(trace.final_size());
    }
    Ok(SuccessTrial { tau, sizes, success_all, success_base })
}

/// Monte Carlo frequencies of S and E over `trials` independent trials,
/// trial i seeded by `seed/trial:i`.
pub fn estimate_success_probability(
    config: &SuccessConfig,
    algorithm: &dyn OnlineAlgorithm,
    policy: &ArrivalPolicy,
    seed: &Seed,
) -> Result<SuccessEstimate> {
    if config.trials == 0 {
        return Err(Error::Param("trials must be at least 1".into()));
    }
    let outcomes = (0..config.trials)
        .into_par_iter()
        .map(|i| success_trial(config, algorithm, policy, &seed.derive("trial", i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let trials = config.trials as f64;
    let freq = |f: fn(&SuccessTrial) -> bool| outcomes.iter().filter(|o| f(o)).count() as f64 / trials;
    let p_hat_s = freq(|o| o.success_all);
    let p_hat_e = freq(|o| o.success_base);
    let se = |q: f64| (q * (1.0 - q) / trials).sqrt();
    Ok(SuccessEstimate {
        p_hat_s,
        p_hat_e,
        stderr_s: se(p_hat_s),
        stderr_e: se(p_hat_e),
        trials: config.trials,
        m: config.m,
        k: config.k,
    })
}

/// `(|I ∩ J ∩ L|, |I ∩ J ∩ R|)`.
pub fn overlap_profile(i: &BalancedSet, j: &BalancedSet) -> (u64, u64) {
    (
        i.lpart.intersection(&j.lpart).count() as u64,
        i.rpart.intersection(&j.rpart).count() as u64,
    )
}

/// Overlap profiles over unordered pairs of distinct γ-balanced
/// independent sets with size in `[alpha - size_slack, alpha]`.
pub fn overlap_histogram(g: &BipartiteGraph, gamma: &Gamma, alpha: u64, size_slack: u64) -> Result<BTreeMap<(u64, u64), u64>> {
    if g.n() > MAX_HISTOGRAM_N {
        return Err(Error::Guard { what: "n", value: g.n(), limit: MAX_HISTOGRAM_N });
    }
    let sets = enumerate_balanced_independent_sets(g, gamma, alpha.saturating_sub(size_slack), alpha, MAX_HISTOGRAM_SETS)?;
    let masks: Vec<(u32, u32)> = sets.iter().map(|s| (mask(&s.left_ids()), mask(&s.right_ids()))).collect();
    let rows: Vec<BTreeMap<(u64, u64), u64>> = (0..masks.len())
        .into_par_iter()
        .map(|a| {
            let mut row = BTreeMap::new();
            let (la, ra) = masks[a];
            for &(lb, rb) in &masks[a + 1..] {
                *row.entry(((la & lb).count_ones() as u64, (ra & rb).count_ones() as u64)).or_insert(0) += 1;
            }
            row
        })
        .collect();
    let mut hist = BTreeMap::new();
    for row in rows {
        for (key, count) in row {
            *hist.entry(key).or_insert(0) += count;
        }
    }
    Ok(hist)
}

fn mask(ids: &[usize]) -> u32 {
    ids.iter().fold(0, |m, &i| m | 1 << i)
}

/// The parameters of a forbidden m-tuple: target sizes `a`, the
/// off-side count β inside V_A(T), and the side η.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ForbiddenTupleQuery {
    pub a: Vec<u64>,
    pub beta: u64,
    pub eta: Side,
}

impl ForbiddenTupleQuery {
    /// Checks `ceil((1+ε)α_COMP) <= a_i <= 2n` and `β <= tau_target`.
    pub fn validate(&self, params: &Params, tau_target: u64) -> Result<()> {
        let lower = params.above_comp_target()?;
        let upper = 2 * params.n as u64;
        if let Some(a) = self.a.iter().find(|&&a| a < lower || a > upper) {
            return Err(Error::Param(format!("a_i = {a} outside [{lower}, {upper}]")));
        }
        if self.beta > tau_target {
            return Err(Error::Param(format!("beta = {} exceeds tau_target = {tau_target}", self.beta)));
        }
        Ok(())
    }
}

fn check_forbidden(family: &CorrelatedFamily, query: &ForbiddenTupleQuery, max_n: usize) -> Result<()> {
    if family.n() > max_n {
        return Err(Error::Guard { what: "n", value: family.n(), limit: max_n });
    }
    if family.m > MAX_FORBIDDEN_M {
        return Err(Error::Guard { what: "m", value: family.m, limit: MAX_FORBIDDEN_M });
    }
    if query.a.len() != family.m {
        return Err(Error::Param(format!("query has {} sizes for {} copies", query.a.len(), family.m)));
    }
    Ok(())
}

fn exposure_masks(family: &CorrelatedFamily) -> (u32, u32) {
    let e = &family.ledger.exposure;
    (mask(&e.exposed_l.ones().collect::<Vec<_>>()), mask(&e.exposed_r.ones().collect::<Vec<_>>()))
}

fn adjacency_masks(g: &BipartiteGraph) -> Vec<u32> {
    (0..g.n()).map(|u| mask(&g.row(u).ones().collect::<Vec<_>>())).collect()
}

/// Number of m-tuples (I_1, ..., I_m) such that I_i is a γ-balanced
/// independent set of size a_i in copy i, all I_i have the same trace on
/// V_A(T), and that trace has `tau_target` vertices on side η and β on the
/// other side.
pub fn count_forbidden_tuples(family: &CorrelatedFamily, query: &ForbiddenTupleQuery, gamma: &Gamma, tau_target: u64) -> Result<u64> {
    check_forbidden(family, query, MAX_FORBIDDEN_N)?;
    let n = family.n();
    let (el, er) = exposure_masks(family);
    let (eta_mask_is_l, want_eta, want_other) = (query.eta == Side::L, tau_target, query.beta);

    // per copy: trace (L ∩ V_A, R ∩ V_A) -> number of qualifying sets
    let mut tallies: Vec<BTreeMap<(u32, u32), u64>> = Vec::with_capacity(family.m);
    for (copy, &a) in family.copies.iter().zip(&query.a) {
        let rows = adjacency_masks(copy);
        let mut tally = BTreeMap::new();
        for lmask in 0u32..1 << n {
            let l = lmask.count_ones() as u64;
            if l > a || !is_gamma_balanced(l, a - l, gamma) {
                continue;
            }
            let adm = (0..n).filter(|&u| lmask >> u & 1 == 1).fold((1u32 << n) - 1, |acc, u| acc & !rows[u]);
            crate::oracle::for_each_k_subset(adm, (a - l) as u32, |rmask| {
                let (tl, tr) = (lmask & el, rmask & er);
                let (on_eta, off_eta) = if eta_mask_is_l { (tl, tr) } else { (tr, tl) };
                if on_eta.count_ones() as u64 == want_eta && off_eta.count_ones() as u64 == want_other {
                    *tally.entry((tl, tr)).or_insert(0) += 1;
                }
            });
        }
        tallies.push(tally);
    }
    let (first, rest) = tallies.split_first().expect("m >= 1");
    Ok(first
        .iter()
        .map(|(key, &count)| rest.iter().fold(count, |acc, t| acc * t.get(key).copied().unwrap_or(0)))
        .sum())
}

/// The same count by direct nested enumeration over all m-tuples of vertex
/// subsets, checking every condition literally. Limited to n <= 6.
pub fn count_forbidden_tuples_reference(
    family: &CorrelatedFamily,
    query: &ForbiddenTupleQuery,
    gamma: &Gamma,
    tau_target: u64,
) -> Result<u64> {
    check_forbidden(family, query, MAX_REFERENCE_N)?;
    let n = family.n();
    let (el, er) = exposure_masks(family);
    let full = 1u32 << (2 * n);
    let split = |s: u32| (s & ((1 << n) - 1), s >> n);
    let qualifies = |copy: &BipartiteGraph, s: u32, a: u64| -> bool {
        let (l, r) = split(s);
        let size = s.count_ones() as u64;
        if size != a || !is_gamma_balanced(l.count_ones() as u64, r.count_ones() as u64, gamma) {
            return false;
        }
        let independent = (0..n).all(|u| l >> u & 1 == 0 || (0..n).all(|v| r >> v & 1 == 0 || !copy.has_edge(u, v)));
        let (tl, tr) = (l & el, r & er);
        let (on_eta, off_eta) = match query.eta {
            Side::L => (tl, tr),
            Side::R => (tr, tl),
        };
        independent && on_eta.count_ones() as u64 == tau_target && off_eta.count_ones() as u64 == query.beta
    };
    let trace = |s: u32| {
        let (l, r) = split(s);
        (l & el, r & er)
    };
    let mut count = 0;
    match family.m {
        1 => {
            count = (0..full).filter(|&s| qualifies(&family.copies[0], s, query.a[0])).count() as u64;
        }
        _ => {
            for s1 in 0..full {
                if !qualifies(&family.copies[0], s1, query.a[0]) {
                    continue;
                }
                for s2 in 0..full {
                    if trace(s1) == trace(s2) && qualifies(&family.copies[1], s2, query.a[1]) {
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(count)
}
