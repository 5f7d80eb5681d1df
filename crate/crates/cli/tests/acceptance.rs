//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use balis_cli::records::{greedy_trial, greedy_trials, TrialRecord};
use balis_cli::run_command;
use balis_core::moments::{log_first_moment, overlap_exponent_q, q_grid, second_moment_ratio};
use balis_core::ogp::{
    build_family, count_forbidden_tuples, count_forbidden_tuples_reference, estimate_success_probability, FamilyConfig,
    ForbiddenTupleQuery, SuccessConfig,
};
use balis_core::oracle::{count_balanced_independent_sets, max_and_counts_via_right, max_balanced_independent_set};
use balis_core::seed::{bounded, stream_at};
use balis_core::{
    compute_thresholds, moments::first_moment_crossing, run_online, Adjacency, ArrivalPolicy, Arrivals, Gamma,
    GreedyConfig, HashedGraph, Params, Seed, TwoStageGreedy,
};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    check(elapsed < limit, format!("{detail}; {:.3}s (limit {:.0?})", elapsed.as_secs_f64(), limit))
}

fn half() -> Gamma {
    Gamma::new(0.5).unwrap()
}

fn c1_thresholds() -> Outcome {
    let start = Instant::now();
    let th = compute_thresholds(&Params::new(1024, 0.5, 0.5, 0.2).unwrap()).unwrap();
    let elapsed = start.elapsed();
    let detail = format!("alpha_stat={} alpha_comp={} t1={} t2={}", th.alpha_stat, th.alpha_comp, th.t1, th.t2);
    let exact = (th.alpha_stat - 40.0).abs() < 1e-9 && (th.alpha_comp - 20.0).abs() < 1e-9 && th.t1 == 8 && th.t2 == 8;
    check(exact, detail.clone())?;
    within(elapsed, Duration::from_millis(1), detail)
}

fn c2_first_moment() -> Outcome {
    let start = Instant::now();
    let value = log_first_moment(10, 0.5, &half(), 4).unwrap();
    let elapsed = start.elapsed();
    let want = (2025.0f64 / 16.0).ln();
    let rel = ((value - want) / want).abs();
    let detail = format!("ln E[Z_4]={value:.12} want {want:.12} rel {rel:.1e}");
    check(rel < 1e-9, detail.clone())?;
    within(elapsed, Duration::from_millis(1), detail)
}

fn c3_ratio_trend() -> Outcome {
    let start = Instant::now();
    let ns = [1_000u64, 10_000, 100_000, 1_000_000];
    let rs: Vec<f64> = ns.iter().map(|&n| second_moment_ratio(n, 0.5, &half(), 0.5).unwrap()).collect();
    let elapsed = start.elapsed();
    let detail = format!("ratios {rs:?}");
    let ok = rs.iter().all(|&r| r >= 1.0) && rs.windows(2).all(|w| w[1] < w[0]) && rs[3] <= 1.05;
    check(ok, detail.clone())?;
    within(elapsed, Duration::from_secs(1), detail)
}

fn c4_q_grid() -> Outcome {
    let start = Instant::now();
    let (n, p, eps) = (1_000_000, 0.5, 0.5);
    let origin = overlap_exponent_q(n, p, &half(), eps, 0, 0).unwrap();
    let grid = q_grid(n, p, &half(), eps).unwrap();
    let elapsed = start.elapsed();
    let (i1, i2, max) = grid
        .iter()
        .filter(|(i1, i2, _)| (*i1, *i2) != (0, 0))
        .copied()
        .fold((0, 0, f64::NEG_INFINITY), |best, cur| if cur.2 > best.2 { cur } else { best });
    let axis = overlap_exponent_q(n, p, &half(), eps, 0, 1).unwrap();
    let detail = format!("q(0,0)={origin}; max off-origin q={max:.3e} at ({i1},{i2}); q(0,1)={axis:.3e}");
    check(origin == 1.0 && max < 1e-3, detail.clone())?;
    within(elapsed, Duration::from_secs(1), detail)
}

fn c5_oracle_routes() -> Outcome {
    let start = Instant::now();
    let gammas = [half(), Gamma::new(1.0 / 3.0).unwrap()];
    let mut mismatches = 0;
    for j in 0..100u64 {
        let seed = Seed::new(5).derive("instance", j);
        let n = 2 + (j % 9) as usize;
        let p = 0.2 + 0.6 * (bounded(stream_at(seed.value(), 0), 1000) as f64 / 1000.0);
        let g = HashedGraph::new(n, p, &seed.derive("graph", 0)).to_dense();
        let gamma = &gammas[(j % 2) as usize];
        let left = max_balanced_independent_set(&g, gamma).unwrap();
        let (max_right, z_right) = max_and_counts_via_right(&g, gamma).unwrap();
        let z_left: Vec<u64> = left.z_counts.unwrap().into_values().collect();
        if left.max_size != max_right || z_left != z_right {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    let detail = format!("100 instances, {mismatches} mismatches");
    check(mismatches == 0, detail.clone())?;
    within(elapsed, Duration::from_secs(10), detail)
}

fn c6_greedy_validity() -> Outcome {
    let start = Instant::now();
    let params = Params::new(4096, 0.5, 0.5, 0.3).unwrap();
    let th = compute_thresholds(&params).unwrap();
    let records = greedy_trials(&params, &ArrivalPolicy::UniformRandom, &Seed::new(6), 10_000).unwrap();
    let elapsed = start.elapsed();
    let violations = records
        .iter()
        .filter(|r| !r.independent || (r.t_b <= 2 * r.n && (!r.balanced || r.final_size != th.t1 + th.t2)))
        .count();
    let completed = records.iter().filter(|r| r.t_b <= 2 * r.n).count();
    let detail = format!("10000 trials, {completed} completed stage two, {violations} violations");
    check(violations == 0, detail.clone())?;
    within(elapsed, Duration::from_secs(120), detail)
}

struct ScaleRuns {
    uniform: Vec<TrialRecord>,
    l_first: Vec<TrialRecord>,
    target: u64,
    elapsed: Duration,
}

fn scale_runs() -> ScaleRuns {
    let start = Instant::now();
    let params = Params::new(1 << 16, 0.5, 0.5, 0.3).unwrap();
    let th = compute_thresholds(&params).unwrap();
    let uniform = greedy_trials(&params, &ArrivalPolicy::UniformRandom, &Seed::new(7).derive("policy", 0), 200).unwrap();
    let l_first = greedy_trials(&params, &ArrivalPolicy::LFirst, &Seed::new(7).derive("policy", 1), 200).unwrap();
    ScaleRuns { uniform, l_first, target: th.t1 + th.t2, elapsed: start.elapsed() }
}

fn c7_achievability(runs: &ScaleRuns) -> Outcome {
    let freq = |rs: &[TrialRecord]| rs.iter().filter(|r| r.final_size == runs.target).count() as f64 / rs.len() as f64;
    let (fu, fl) = (freq(&runs.uniform), freq(&runs.l_first));
    let detail = format!("size {} reached: uniform {fu:.3}, l-first {fl:.3}", runs.target);
    check(fu >= 0.95 && fl >= 0.95, detail.clone())?;
    within(runs.elapsed, Duration::from_secs(300), detail)
}

fn c8_stage_one_time(runs: &ScaleRuns) -> Outcome {
    let bound = (65536f64).powf(1.0 - 0.3 / 2.0);
    let all: Vec<&TrialRecord> = runs.uniform.iter().chain(&runs.l_first).collect();
    let late = all.iter().filter(|r| r.t_f as f64 > bound).count();
    let max = all.iter().map(|r| r.t_f).max().unwrap();
    check(late == 0, format!("bound n^(1-eps/2)={bound:.0}; {late}/400 above it; max T_f={max}"))
}

fn c9_impossibility() -> Outcome {
    let start = Instant::now();
    let params = Params::new(1 << 16, 0.5, 0.5, 0.1).unwrap();
    let k = params.above_comp_target().unwrap();
    let records = greedy_trials(&params, &ArrivalPolicy::UniformRandom, &Seed::new(9), 1000).unwrap();
    let hits = records.iter().filter(|r| r.final_size >= k).count();
    let max = records.iter().map(|r| r.final_size).max().unwrap();
    let detail = format!("k={k}; {hits}/1000 outputs reach k; largest output {max}");
    check(hits == 0, detail.clone())?;
    within(start.elapsed(), Duration::from_secs(300), detail)
}

fn c10_markov() -> Outcome {
    let start = Instant::now();
    let alpha = first_moment_crossing(20, 0.5, &half(), 0.01).unwrap().unwrap();
    let hits = (0..500u64)
        .filter(|&i| {
            let g = HashedGraph::new(20, 0.5, &Seed::new(10).derive("instance", i)).to_dense();
            count_balanced_independent_sets(&g, &half(), alpha).unwrap() > 0
        })
        .count();
    let frac = hits as f64 / 500.0;
    let detail = format!("alpha°={alpha}; {hits}/500 instances contain a balanced independent set of that size ({frac:.3})");
    check(frac <= 0.03, detail.clone())?;
    within(start.elapsed(), Duration::from_secs(60), detail)
}

fn small_greedy(params: &Params) -> (TwoStageGreedy, u64) {
    let th = compute_thresholds(params).unwrap();
    (TwoStageGreedy::new(GreedyConfig::from_thresholds(&th)), th.tau_target)
}

fn c11_marginals() -> Outcome {
    let start = Instant::now();
    let (n, m, t, p) = (8usize, 3usize, 6usize, 0.3);
    let params = Params::new(n, p, 0.5, 0.2).unwrap();
    let (algorithm, tau_target) = small_greedy(&params);
    // [copy][u][v] -> (present, samples) over off-ledger occurrences
    let mut tally = vec![vec![(0u32, 0u32); n * n]; m];
    let mut ledger_mismatches = 0;
    for s in 0..2000u64 {
        let seed = Seed::new(11).derive("family", s);
        let base = HashedGraph::new(n, p, &seed.derive("graph", 0)).to_dense();
        let config = FamilyConfig { p, tau_target, t, m };
        let family = build_family(
            &base,
            &algorithm,
            &ArrivalPolicy::UniformRandom,
            config,
            &seed.derive("run", 0),
            &seed.derive("resample", 0),
        )
        .unwrap();
        for (i, copy) in family.copies.iter().enumerate() {
            for &(u, v, present) in &family.ledger.revealed {
                ledger_mismatches += usize::from(copy.has_edge(u, v) != present);
            }
            for u in 0..n {
                for v in 0..n {
                    if !family.on_ledger(u, v) {
                        let cell = &mut tally[i][u * n + v];
                        cell.0 += u32::from(copy.has_edge(u, v));
                        cell.1 += 1;
                    }
                }
            }
        }
    }
    let worst = tally
        .iter()
        .flatten()
        .filter(|c| c.1 > 0)
        .map(|&(hit, total)| (hit as f64 / total as f64 - p).abs())
        .fold(0.0, f64::max);
    let min_samples = tally.iter().flatten().map(|c| c.1).min().unwrap();
    let detail = format!("worst |freq - p| = {worst:.4} (min {min_samples} samples per cell); {ledger_mismatches} ledger mismatches");
    check(worst <= 0.05 && ledger_mismatches == 0, detail.clone())?;
    within(start.elapsed(), Duration::from_secs(30), detail)
}

fn c12_prefix_identity() -> Outcome {
    let (n, m, p) = (16usize, 3usize, 0.5);
    let params = Params::new(n, p, 0.5, 0.2).unwrap();
    let (algorithm, tau_target) = small_greedy(&params);
    let policy = ArrivalPolicy::UniformRandom;
    let mut broken = 0;
    for s in 0..100u64 {
        let seed = Seed::new(12).derive("family", s);
        let t = 1 + bounded(stream_at(seed.value(), 0), 2 * n as u64) as usize;
        let base = HashedGraph::new(n, p, &seed.derive("graph", 0)).to_dense();
        let run_seed = seed.derive("run", 0);
        let config = FamilyConfig { p, tau_target, t, m };
        let family = build_family(&base, &algorithm, &policy, config, &run_seed, &seed.derive("resample", 0)).unwrap();
        for copy in &family.copies {
            let trace = run_online(copy, &algorithm, Arrivals::Policy(&policy), tau_target, &run_seed).unwrap();
            broken += usize::from(!trace.same_prefix(&family.prefix, t));
        }
    }
    check(broken == 0, format!("100 families x {m} copies; {broken} traces differ before T"))
}

fn c13_success_correlation() -> Outcome {
    let params = Params::new(8, 0.5, 0.5, 0.2).unwrap();
    let th = compute_thresholds(&params).unwrap();
    let (algorithm, tau_target) = small_greedy(&params);
    let config = SuccessConfig { n: 8, p: 0.5, gamma: half(), tau_target, m: 2, k: th.t1 + th.t2, trials: 5000 };
    let est = estimate_success_probability(&config, &algorithm, &ArrivalPolicy::UniformRandom, &Seed::new(13)).unwrap();
    let se = est.combined_stderr();
    let detail = format!(
        "k={}; p_S={:.4} p_E={:.4} p_E^2={:.4} combined se={:.4}",
        est.k,
        est.p_hat_s,
        est.p_hat_e,
        est.p_hat_e.powi(2),
        se
    );
    check(est.p_hat_s >= est.p_hat_e.powi(2) - 3.0 * se, detail)
}

fn c14_forbidden() -> Outcome {
    let start = Instant::now();
    let p = 0.8;
    let policy = ArrivalPolicy::UniformRandom;
    let (mut mismatches, mut nonzero) = (0, 0);
    for j in 0..20u64 {
        let n = 4 + (j % 3) as usize;
        let m = 1 + (j % 2) as usize;
        let params = Params::new(n, p, 0.5, 0.2).unwrap();
        let (algorithm, tau_target) = small_greedy(&params);
        let seed = Seed::new(14).derive("instance", j);
        let t = 1 + bounded(stream_at(seed.value(), 0), 2 * n as u64) as usize;
        let base = HashedGraph::new(n, p, &seed.derive("graph", 0)).to_dense();
        let run_seed = seed.derive("run", 0);
        let full = run_online(&base, &algorithm, Arrivals::Policy(&policy), tau_target, &run_seed).unwrap();
        let config = FamilyConfig { p, tau_target, t, m };
        let family = build_family(&base, &algorithm, &policy, config, &run_seed, &seed.derive("resample", 0)).unwrap();
        let lower = params.above_comp_target().unwrap();
        let a = (0..m as u64).map(|i| lower + (j + i) % 2).collect();
        let query = ForbiddenTupleQuery { a, beta: j % 2, eta: full.majority };
        query.validate(&params, tau_target).map_err(|e| e.to_string())?;
        let fast = count_forbidden_tuples(&family, &query, &half(), tau_target).unwrap();
        let slow = count_forbidden_tuples_reference(&family, &query, &half(), tau_target).unwrap();
        mismatches += usize::from(fast != slow);
        nonzero += usize::from(fast > 0);
    }
    let detail = format!("20 instances ({nonzero} with nonzero counts); {mismatches} mismatches");
    check(mismatches == 0, detail.clone())?;
    within(start.elapsed(), Duration::from_secs(60), detail)
}

fn cli(args: &[&str]) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_command(std::iter::once("balis").chain(args.iter().copied()), &mut out, &mut err);
    (code, out)
}

fn c15_replay() -> Outcome {
    let args = [
        "greedy", "--n", "4096", "--p", "0.5", "--gamma", "0.5", "--epsilon", "0.3", "--trials", "300", "--seed", "15",
    ];
    let (code_a, first) = cli(&args);
    let (code_b, second) = cli(&args);
    if code_a != 0 || code_b != 0 || first != second {
        return Err(format!("exit codes {code_a}/{code_b}; JSONL identical: {}", first == second));
    }
    let text = String::from_utf8(first).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| l.contains("\"experiment\":\"greedy\"")).collect();
    let params = Params::new(4096, 0.5, 0.5, 0.3).unwrap();
    let failing: Vec<&str> = lines.iter().copied().filter(|l| l.contains("\"reached_target\":false")).collect();
    let mut replay_mismatches = 0;
    for line in &failing {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        let path = record["seed"].as_str().unwrap();
        let (code, replayed) = cli(&[
            "greedy", "--n", "4096", "--p", "0.5", "--gamma", "0.5", "--epsilon", "0.3", "--replay", path,
        ]);
        let direct = greedy_trial(&params, &ArrivalPolicy::UniformRandom, &path.parse().unwrap()).unwrap();
        let direct = serde_json::to_string(&direct).unwrap();
        replay_mismatches += usize::from(code != 0 || String::from_utf8(replayed).unwrap().trim_end() != *line || direct != *line);
    }
    check(
        replay_mismatches == 0,
        format!("JSONL byte-identical across runs; {} failing trials replayed, {replay_mismatches} mismatches", failing.len()),
    )
}

fn main() {
    let quiet: Box<dyn Fn(&panic::PanicHookInfo<'_>) + Sync + Send> = Box::new(|_| {});
    let default_hook = panic::take_hook();
    panic::set_hook(quiet);
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut run = |id: u32, name: &'static str, f: &dyn Fn() -> Outcome| {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {id:>2} [{tag}] {name}: {detail}");
        results.push((id, name, outcome));
    };
    run(1, "threshold arithmetic", &c1_thresholds);
    run(2, "first moment exactness", &c2_first_moment);
    run(3, "second-moment trend", &c3_ratio_trend);
    run(4, "q-grid negativity", &c4_q_grid);
    run(5, "oracle L/R equivalence", &c5_oracle_routes);
    run(6, "greedy validity at n=4096", &c6_greedy_validity);
    let runs = scale_runs();
    run(7, "achievability at n=2^16", &|| c7_achievability(&runs));
    run(8, "stage-one stopping time", &|| c8_stage_one_time(&runs));
    run(9, "impossibility direction", &c9_impossibility);
    run(10, "first-moment Markov check", &c10_markov);
    run(11, "correlated-family marginals", &c11_marginals);
    run(12, "prefix identity", &c12_prefix_identity);
    run(13, "success-event correlation", &c13_success_correlation);
    run(14, "forbidden-tuple oracle equivalence", &c14_forbidden);
    run(15, "replay determinism", &c15_replay);
    panic::set_hook(default_hook);

    let failed: Vec<u32> = results.iter().filter(|r| r.2.is_err()).map(|r| r.0).collect();
    println!("acceptance: {} passed, {} failed {:?}", results.len() - failed.len(), failed.len(), failed);
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
