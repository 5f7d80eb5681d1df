//! The `balis` experiment harness: argument parsing, dispatch to the core
//! library, and JSONL/CSV emission.

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use balis_core::graph::HashedGraph;
use balis_core::moments;
use balis_core::ogp::{self, FamilyConfig, ForbiddenTupleQuery, SuccessConfig};
use balis_core::oracle;
use balis_core::{
    compute_thresholds, load_graph, run_online, save_graph, ArrivalPolicy, Arrivals, BipartiteGraph, Error, Gamma,
    GreedyConfig, Params, Result, Seed, Side, TwoStageGreedy,
};

pub mod plot;
pub mod records;
pub mod sweep;

use plot::{emit_plot_data, PlotData, PlotKind};
use records::{greedy_trial, greedy_trials, summarize, ConfigEcho};
use sweep::{SweepGrid, SweepRow};

#[derive(Debug, Parser)]
#[command(name = "balis", version, about = "Balanced independent sets in random bipartite graphs")]
pub struct Cli {
    /// Write results here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// α_STAT, α_COMP, t1, t2 and the τ target.
    Thresholds(ModelArgs),
    /// Sample a graph and write it in the text format.
    Gen {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        seed: SeedArgs,
    },
    /// Run the two-stage greedy algorithm.
    Greedy(GreedyArgs),
    /// Exact maximum γ-balanced independent set (n <= 26).
    Oracle {
        #[command(flatten)]
        source: GraphArgs,
    },
    /// Exact count Z_α of γ-balanced independent sets of size α.
    Count {
        #[command(flatten)]
        source: GraphArgs,
        #[arg(long)]
        alpha: u64,
    },
    /// First moment, second-moment ratio and q grid.
    Moments(MomentArgs),
    /// Pairwise overlap histogram of near-maximum sets (CSV).
    Overlaps(OverlapArgs),
    /// Correlated families and the overlap-gap experiments.
    Ogp {
        #[command(subcommand)]
        command: OgpCommand,
    },
    /// Greedy over a parameter grid (CSV).
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    /// Defaults to ε²/2.
    #[arg(long)]
    pub mu: Option<f64>,
}

impl ModelArgs {
    pub fn params(&self) -> Result<Params> {
        let params = Params::new(self.n, self.p, self.gamma, self.epsilon)?;
        match self.mu {
            Some(mu) => params.with_mu(mu),
            None => Ok(params),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SeedArgs {
    /// Master seed; falls back to BALIS_SEED, then to a fresh seed that is
    /// reported on standard error.
    #[arg(long, env = "BALIS_SEED")]
    pub seed: Option<u64>,
}

impl SeedArgs {
    pub fn resolve(&self) -> Seed {
        Seed::new(self.seed.unwrap_or_else(|| {
            let fresh = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_nanos() as u64);
            eprintln!("seed: {fresh}");
            fresh
        }))
    }
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Read the graph from a file instead of sampling it.
    #[arg(long, conflicts_with_all = ["n", "p"])]
    pub graph: Option<PathBuf>,
    #[arg(long, required_unless_present = "graph")]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[command(flatten)]
    pub seed: SeedArgs,
}

impl GraphArgs {
    /// The graph file, or G_bip(n, p) keyed by `seed/graph:0`.
    pub fn graph(&self) -> Result<BipartiteGraph> {
        match (&self.graph, self.n) {
            (Some(path), _) => load_graph(BufReader::new(File::open(path)?)),
            (None, Some(n)) => {
                check_p(self.p)?;
                Ok(HashedGraph::new(n, self.p, &self.seed.resolve().derive("graph", 0)).to_dense())
            }
            (None, None) => Err(Error::Config("either --graph or --n is required".into())),
        }
    }

    pub fn gamma(&self) -> Result<Gamma> {
        Gamma::new(self.gamma)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Param(format!("p = {p} must lie in [0, 1]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct GreedyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long, default_value = "uniform-random")]
    pub policy: String,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Rerun the single trial with this seed path (as printed in a record).
    #[arg(long, conflicts_with = "trials")]
    pub replay: Option<String>,
    /// Write the per-round trace of trial 0 (or of the replayed trial) as JSONL.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Add wall-clock time to the summary record.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MomentArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    /// Set size for the first moment; rounded to the nearest α with an
    /// integral split. Defaults to the rounded α_ε.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Crossing threshold for E[Z_α].
    #[arg(long, default_value_t = 1.0)]
    pub threshold: f64,
    /// Also write the q grid as CSV to this path.
    #[arg(long)]
    pub q_grid: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OverlapArgs {
    #[command(flatten)]
    pub source: GraphArgs,
    #[arg(long)]
    pub alpha: u64,
    #[arg(long, default_value_t = 0)]
    pub slack: u64,
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long, default_value = "uniform-random")]
    pub policy: String,
    /// Step T; defaults to τ of the base run.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
}

#[derive(Debug, Subcommand)]
pub enum OgpCommand {
    /// Build a family and write each copy as a graph file.
    Family {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Estimate P(S) and P(E).
    Success {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        seed: SeedArgs,
        #[arg(long, default_value = "uniform-random")]
        policy: String,
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Defaults to ceil((1+ε)α_COMP).
        #[arg(long)]
        k: Option<u64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Same as the top-level `overlaps`.
    Overlaps(OverlapArgs),
    /// Count forbidden m-tuples in a small family.
    Forbidden {
        #[command(flatten)]
        family: FamilyArgs,
        /// Target sizes, one per copy.
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<u64>,
        #[arg(long, default_value_t = 0)]
        beta: u64,
        /// Side η; defaults to the majority side ζ of the base run.
        #[arg(long)]
        eta: Option<String>,
        /// Skip the (1+ε)α_COMP <= a_i <= 2n membership check.
        #[arg(long)]
        any_a: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long = "n", value_delimiter = ',', num_args = 1.., required = true)]
    pub ns: Vec<usize>,
    #[arg(long = "p", value_delimiter = ',', default_value = "0.5")]
    pub ps: Vec<f64>,
    #[arg(long = "gamma", value_delimiter = ',', default_value = "0.5")]
    pub gammas: Vec<f64>,
    #[arg(long = "epsilon", value_delimiter = ',', default_value = "0.2")]
    pub epsilons: Vec<f64>,
    #[arg(long, default_value = "uniform-random")]
    pub policy: String,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 100_000)]
    pub max_runs: usize,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Emit a plot table instead of the full aggregate table.
    #[arg(long)]
    pub plot: Option<PlotKind>,
}

/// Process exit status for an error: 3 for size guards, 2 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_guard() {
        3
    } else {
        2
    }
}

fn json_line(out: &mut Vec<u8>, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer(&mut *out, value).map_err(std::io::Error::from)?;
    out.push(b'\n');
    Ok(())
}

fn create(path: &PathBuf) -> Result<File> {
    File::create(path).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

/// Executes a parsed command and returns the bytes to emit.
pub fn run(cli: &Cli) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    match &cli.command {
        Command::Thresholds(model) => {
            let params = model.params()?;
            let th = compute_thresholds(&params)?;
            json_line(
                &mut out,
                &json!({
                    "n": params.n, "p": params.p, "gamma": params.gamma.value(),
                    "epsilon": params.epsilon, "mu": params.mu,
                    "alpha_stat": th.alpha_stat, "alpha_comp": th.alpha_comp,
                    "t1": th.t1, "t2": th.t2, "tau_target": th.tau_target,
                }),
            )?;
        }
        Command::Gen { model, seed } => {
            check_p(model.p)?;
            let g = HashedGraph::new(model.n, model.p, &seed.resolve().derive("graph", 0)).to_dense();
            save_graph(&g, &mut out)?;
        }
        Command::Greedy(args) => greedy(args, &mut out)?,
        Command::Oracle { source } => {
            let g = source.graph()?;
            let result = oracle::max_balanced_independent_set(&g, &source.gamma()?)?;
            json_line(&mut out, &result)?;
        }
        Command::Count { source, alpha } => {
            let g = source.graph()?;
            let count = oracle::count_balanced_independent_sets(&g, &source.gamma()?, *alpha)?;
            json_line(&mut out, &json!({ "alpha": alpha, "count": count }))?;
        }
        Command::Moments(args) => moments_command(args, &mut out)?,
        Command::Overlaps(args) | Command::Ogp { command: OgpCommand::Overlaps(args) } => {
            let g = args.source.graph()?;
            let hist = ogp::overlap_histogram(&g, &args.source.gamma()?, args.alpha, args.slack)?;
            out.extend(emit_plot_data(PlotData::Overlaps(&hist), PlotKind::OverlapHeatmap)?.bytes());
        }
        Command::Ogp { command } => ogp_command(command, &mut out)?,
        Command::Sweep(args) => {
            let grid = SweepGrid {
                ns: args.ns.clone(),
                ps: args.ps.clone(),
                gammas: args.gammas.clone(),
                epsilons: args.epsilons.clone(),
                trials: args.trials,
                max_runs: args.max_runs,
            };
            let rows = sweep::sweep(&grid, &ArrivalPolicy::from_name(&args.policy)?, &args.seed.resolve())?;
            let table = match args.plot {
                Some(kind) => emit_plot_data(PlotData::Sweep(&rows), kind)?,
                None => plot::to_csv::<&SweepRow>(rows.iter())?,
            };
            out.extend(table.bytes());
        }
    }
    Ok(out)
}

fn greedy(args: &GreedyArgs, out: &mut Vec<u8>) -> Result<()> {
    let params = args.model.params()?;
    let policy = ArrivalPolicy::from_name(&args.policy)?;
    policy.validate(params.n)?;
    let started = Instant::now();
    if let Some(path) = &args.replay {
        let seed: Seed = path.parse().map_err(|e: balis_core::SeedParseError| Error::Config(e.to_string()))?;
        json_line(out, &greedy_trial(&params, &policy, &seed)?)?;
        if let Some(trace_path) = &args.trace {
            write_trace(&params, &policy, &seed, trace_path)?;
        }
        return Ok(());
    }
    if args.trials == 0 {
        return Err(Error::Config("--trials must be at least 1".into()));
    }
    let master = args.seed.resolve();
    let records = greedy_trials(&params, &policy, &master, args.trials)?;
    for rec in &records {
        json_line(out, rec)?;
    }
    let mut summary = summarize(&records, ConfigEcho::new(&params, &policy, args.trials), &master);
    if args.timing {
        summary.wall_clock_ms = Some(started.elapsed().as_millis());
    }
    json_line(out, &summary)?;
    if let Some(trace_path) = &args.trace {
        write_trace(&params, &policy, &master.derive("trial", 0), trace_path)?;
    }
    Ok(())
}

fn write_trace(params: &Params, policy: &ArrivalPolicy, seed: &Seed, path: &PathBuf) -> Result<()> {
    let g = HashedGraph::new(params.n, params.p, &seed.derive("graph", 0));
    let trace = balis_core::two_stage(&g, policy, params, &seed.derive("run", 0))?;
    let mut file = create(path)?;
    balis_core::online::write_trace_jsonl(&trace, &mut file)
}

fn moments_command(args: &MomentArgs, out: &mut Vec<u8>) -> Result<()> {
    let gamma = Gamma::new(args.gamma)?;
    let alpha_eps = moments::alpha_epsilon_split(args.n, args.p, &gamma, args.epsilon)?;
    let requested = args.alpha.unwrap_or((alpha_eps.0 + alpha_eps.1) as f64);
    if requested.is_nan() || requested < 0.0 {
        return Err(Error::Param(format!("alpha = {requested} must be non-negative")));
    }
    let alpha = match gamma.split_step() {
        Some(step) => step * (requested / step as f64).round() as u64,
        None => return Err(Error::Param("moments need a rational gamma with denominator <= 64".into())),
    };
    let report = moments::moment_report(args.n, args.p, &gamma, args.epsilon, alpha, args.threshold)?;
    json_line(
        out,
        &json!({
            "n": args.n, "p": args.p, "gamma": args.gamma, "epsilon": args.epsilon,
            "alpha_requested": requested, "alpha": alpha, "alpha_adjusted": alpha as f64 != requested,
            "logE": report.log_first_moment, "ratio": report.ratio, "log_ratio": report.log_ratio, "crossing": report.crossing_alpha,
            "threshold": args.threshold, "alpha_eps": [report.alpha_eps_split.0, report.alpha_eps_split.1],
        }),
    )?;
    if let Some(path) = &args.q_grid {
        let csv = emit_plot_data(PlotData::QGrid(&report.q_grid), PlotKind::QGrid)?;
        create(path)?.write_all(csv.as_bytes())?;
    }
    Ok(())
}

/// Base graph `seed/graph:0`, run seed `seed/run:0`, resampling seed
/// `seed/family:0`; the same layout as a success trial.
fn family_from(args: &FamilyArgs) -> Result<(ogp::CorrelatedFamily, Params, balis_core::RunTrace)> {
    let params = args.model.params()?;
    let th = compute_thresholds(&params)?;
    let policy = ArrivalPolicy::from_name(&args.policy)?;
    policy.validate(params.n)?;
    let seed = args.seed.resolve();
    let base = HashedGraph::new(params.n, params.p, &seed.derive("graph", 0)).to_dense();
    let algorithm = TwoStageGreedy::new(GreedyConfig::from_thresholds(&th));
    let run_seed = seed.derive("run", 0);
    let full = run_online(&base, &algorithm, Arrivals::Policy(&policy), th.tau_target, &run_seed)?;
    let config = FamilyConfig { p: params.p, tau_target: th.tau_target, t: args.t.unwrap_or(full.tau), m: args.m };
    let family = ogp::build_family(&base, &algorithm, &policy, config, &run_seed, &seed.derive("family", 0))?;
    Ok((family, params, full))
}

fn ogp_command(command: &OgpCommand, out: &mut Vec<u8>) -> Result<()> {
    match command {
        OgpCommand::Family { family: args, out_dir } => {
            let (family, _, full) = family_from(args)?;
            fs::create_dir_all(out_dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", out_dir.display())))?;
            let mut files = Vec::new();
            for (i, copy) in family.copies.iter().enumerate() {
                let path = out_dir.join(format!("copy_{i}.graph"));
                save_graph(copy, &mut create(&path)?)?;
                files.push(path.display().to_string());
            }
            json_line(
                out,
                &json!({
                    "T": family.t, "m": family.m, "tau": full.tau,
                    "exposed_L": family.ledger.exposure.exposed_l.ones().collect::<Vec<_>>(),
                    "exposed_R": family.ledger.exposure.exposed_r.ones().collect::<Vec<_>>(),
                    "revealed_pairs": family.ledger.revealed.len(),
                    "run_seed": family.run_seed.to_string(),
                    "files": files,
                }),
            )?;
        }
        OgpCommand::Success { model, seed, policy, m, k, trials } => {
            let params = model.params()?;
            let th = compute_thresholds(&params)?;
            let policy = ArrivalPolicy::from_name(policy)?;
            policy.validate(params.n)?;
            let config = SuccessConfig {
                n: params.n,
                p: params.p,
                gamma: params.gamma,
                tau_target: th.tau_target,
                m: *m,
                k: match k {
                    Some(k) => *k,
                    None => params.above_comp_target()?,
                },
                trials: *trials,
            };
            let algorithm = TwoStageGreedy::new(GreedyConfig::from_thresholds(&th));
            let estimate = ogp::estimate_success_probability(&config, &algorithm, &policy, &seed.resolve())?;
            json_line(out, &estimate)?;
        }
        OgpCommand::Forbidden { family: args, a, beta, eta, any_a } => {
            let (family, params, full) = family_from(args)?;
            let th = compute_thresholds(&params)?;
            let eta = match eta.as_deref() {
                None => full.majority,
                Some("L" | "l") => Side::L,
                Some("R" | "r") => Side::R,
                Some(other) => return Err(Error::Config(format!("unknown side `{other}` (L or R)"))),
            };
            let query = ForbiddenTupleQuery { a: a.clone(), beta: *beta, eta };
            if !any_a {
                query.validate(&params, th.tau_target)?;
            }
            let count = ogp::count_forbidden_tuples(&family, &query, &params.gamma, th.tau_target)?;
            json_line(
                out,
                &json!({ "T": family.t, "m": family.m, "a": a, "beta": beta, "eta": eta, "tau_target": th.tau_target, "count": count }),
            )?;
        }
        OgpCommand::Overlaps(_) => unreachable!("handled with the top-level overlaps command"),
    }
    Ok(())
}

/// Parses `argv`, runs the command and writes its output. Returns the
/// process exit code.
pub fn run_command<I, T>(argv: I, stdout: &mut impl Write, stderr: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    let result = run(&cli).and_then(|bytes| match &cli.output {
        Some(path) => Ok(create(path)?.write_all(&bytes)?),
        None => Ok(stdout.write_all(&bytes)?),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
