//! The online information model: 2n rounds, one vertex exposed per round,
//! and decisions made from the revealed ledger alone.
//!
//! Algorithms never see a graph. They receive a [`LedgerView`], which
//! answers only for cross pairs whose endpoints are both exposed and returns
//! [`Error::ContractViolation`] for anything else.

use std::io::Write;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Adjacency, Side, Vertex};
use crate::seed::{bounded, stream_at, Seed};
use crate::set::BalancedSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArrivalPolicy {
    UniformRandom,
    LFirst,
    RFirst,
    Alternating,
    /// A permutation of all 2n vertices.
    FixedSequence(Vec<Vertex>),
}

impl ArrivalPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            ArrivalPolicy::UniformRandom => "uniform-random",
            ArrivalPolicy::LFirst => "l-first",
            ArrivalPolicy::RFirst => "r-first",
            ArrivalPolicy::Alternating => "alternating",
            ArrivalPolicy::FixedSequence(_) => "fixed-sequence",
        }
    }

    /// Parses the names accepted on the command line (not fixed-sequence).
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "uniform-random" | "uniform" => ArrivalPolicy::UniformRandom,
            "l-first" => ArrivalPolicy::LFirst,
            "r-first" => ArrivalPolicy::RFirst,
            "alternating" => ArrivalPolicy::Alternating,
            other => return Err(Error::Config(format!("unknown arrival policy `{other}`"))),
        })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let ArrivalPolicy::FixedSequence(seq) = self {
            let mut seen = FixedBitSet::with_capacity(2 * n);
            for v in seq {
                if v.id >= n || seen.put(v.index(n)) {
                    return Err(Error::Config("fixed-sequence payload is not a permutation of the 2n vertices".into()));
                }
            }
            if seq.len() != 2 * n {
                return Err(Error::Config("fixed-sequence payload is not a permutation of the 2n vertices".into()));
            }
        }
        Ok(())
    }
}

/// The exposed vertices V_A(t), split by side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exposure {
    n: usize,
    pub exposed_l: FixedBitSet,
    pub exposed_r: FixedBitSet,
}

impl Exposure {
    pub fn new(n: usize) -> Self {
        Exposure { n, exposed_l: FixedBitSet::with_capacity(n), exposed_r: FixedBitSet::with_capacity(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, v: Vertex) -> bool {
        match v.side {
            Side::L => self.exposed_l.contains(v.id),
            Side::R => self.exposed_r.contains(v.id),
        }
    }

    pub fn expose(&mut self, v: Vertex) {
        match v.side {
            Side::L => self.exposed_l.insert(v.id),
            Side::R => self.exposed_r.insert(v.id),
        }
    }

    pub fn count(&self, side: Side) -> usize {
        match side {
            Side::L => self.exposed_l.count_ones(..),
            Side::R => self.exposed_r.count_ones(..),
        }
    }

    pub fn len(&self) -> usize {
        self.count(Side::L) + self.count(Side::R)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn first_unexposed(&self, side: Side) -> Option<Vertex> {
        let set = match side {
            Side::L => &self.exposed_l,
            Side::R => &self.exposed_r,
        };
        set.zeroes().next().map(|id| Vertex { side, id })
    }
}

/// Picks the vertex arriving at round `t` (1-based) given the exposed set.
///
/// Uniform-random draws uniformly from the unexposed vertices using word `t`
/// of the stream keyed by `seed`; the other policies ignore the seed.
pub fn next_arrival(policy: &ArrivalPolicy, state: &Exposure, seed: &Seed, t: usize) -> Result<Vertex> {
    let n = state.n();
    let remaining = 2 * n - state.len();
    if remaining == 0 {
        return Err(Error::Config("all 2n vertices are already exposed".into()));
    }
    Ok(match policy {
        ArrivalPolicy::UniformRandom => {
            let k = bounded(stream_at(seed.value(), t as u64), remaining as u64) as usize;
            (0..2 * n)
                .map(|i| Vertex::from_index(i, n))
                .filter(|v| !state.contains(*v))
                .nth(k)
                .expect("k < remaining")
        }
        ArrivalPolicy::LFirst => state.first_unexposed(Side::L).or_else(|| state.first_unexposed(Side::R)).unwrap(),
        ArrivalPolicy::RFirst => state.first_unexposed(Side::R).or_else(|| state.first_unexposed(Side::L)).unwrap(),
        ArrivalPolicy::Alternating => {
            let prefer = if state.count(Side::L) <= state.count(Side::R) { Side::L } else { Side::R };
            state.first_unexposed(prefer).or_else(|| state.first_unexposed(prefer.other())).unwrap()
        }
        ArrivalPolicy::FixedSequence(seq) => {
            policy.validate(n)?;
            *seq.iter().find(|v| !state.contains(**v)).unwrap()
        }
    })
}

/// Incremental form of [`next_arrival`] for a run whose exposed set is
/// exactly what the stream has produced so far.
pub struct ArrivalStream<'a> {
    policy: &'a ArrivalPolicy,
    n: usize,
    key: u64,
    remaining: Fenwick,
    left: usize,
    right: usize,
    cursor: usize,
    t: usize,
}

impl<'a> ArrivalStream<'a> {
    pub fn new(policy: &'a ArrivalPolicy, n: usize, seed: &Seed) -> Result<Self> {
        policy.validate(n)?;
        let remaining = if matches!(policy, ArrivalPolicy::UniformRandom) { Fenwick::full(2 * n) } else { Fenwick::full(0) };
        Ok(ArrivalStream { policy, n, key: seed.value(), remaining, left: 0, right: 0, cursor: 0, t: 0 })
    }
}

impl Iterator for ArrivalStream<'_> {
    type Item = Vertex;

    fn next(&mut self) -> Option<Vertex> {
        let n = self.n;
        if self.t == 2 * n {
            return None;
        }
        self.t += 1;
        let take_l = match self.policy {
            ArrivalPolicy::UniformRandom => {
                let k = bounded(stream_at(self.key, self.t as u64), (2 * n - self.t + 1) as u64) as usize;
                let index = self.remaining.kth(k);
                self.remaining.remove(index);
                return Some(Vertex::from_index(index, n));
            }
            ArrivalPolicy::FixedSequence(seq) => {
                self.cursor += 1;
                return Some(seq[self.cursor - 1]);
            }
            ArrivalPolicy::LFirst => self.left < n,
            ArrivalPolicy::RFirst => self.right == n,
            ArrivalPolicy::Alternating => (self.left <= self.right && self.left < n) || self.right == n,
        };
        Some(if take_l {
            self.left += 1;
            Vertex::l(self.left - 1)
        } else {
            self.right += 1;
            Vertex::r(self.right - 1)
        })
    }
}

/// Binary indexed tree over 0/1 slots, for k-th remaining lookups.
struct Fenwick {
    tree: Vec<u32>,
}

impl Fenwick {
    fn full(len: usize) -> Self {
        let mut tree = vec![0u32; len + 1];
        for i in 1..=len {
            tree[i] += 1;
            let j = i + (i & i.wrapping_neg());
            if j <= len {
                tree[j] += tree[i];
            }
        }
        Fenwick { tree }
    }

    fn remove(&mut self, index: usize) {
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] -= 1;
            i += i & i.wrapping_neg();
        }
    }

    /// 0-based position of the (k+1)-th occupied slot.
    fn kth(&self, k: usize) -> usize {
        let len = self.tree.len() - 1;
        let mut pos = 0;
        let mut rem = k as u32 + 1;
        let mut step = len.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= len && self.tree[next] < rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

/// Read-only access to E_A(t): the statuses of cross pairs with both
/// endpoints exposed.
pub struct LedgerView<'a> {
    graph: &'a dyn Adjacency,
    exposure: &'a Exposure,
}

impl<'a> LedgerView<'a> {
    pub fn new(graph: &'a dyn Adjacency, exposure: &'a Exposure) -> Self {
        LedgerView { graph, exposure }
    }

    pub fn exposure(&self) -> &Exposure {
        self.exposure
    }

    pub fn n(&self) -> usize {
        self.exposure.n()
    }

    /// Status of the pair `{a, b}`. Same-side pairs are never edges.
    pub fn edge(&self, a: Vertex, b: Vertex) -> Result<bool> {
        if a.side == b.side {
            return Ok(false);
        }
        let (l, r) = if a.side == Side::L { (a, b) } else { (b, a) };
        if !(self.exposure.contains(l) && self.exposure.contains(r)) {
            return Err(Error::ContractViolation { u: l.id, v: r.id });
        }
        Ok(self.graph.has_edge(l.id, r.id))
    }
}

/// The set I_t built so far, with members listed per side in acceptance order.
#[derive(Debug, Clone, Default)]
pub struct CurrentSet {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl CurrentSet {
    pub fn members(&self, side: Side) -> &[usize] {
        match side {
            Side::L => &self.left,
            Side::R => &self.right,
        }
    }

    pub fn count(&self, side: Side) -> u64 {
        self.members(side).len() as u64
    }

    pub fn len(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// N_t(v) ∩ I = ∅, read through the ledger.
    pub fn conflicts_with(&self, view: &LedgerView<'_>, v: Vertex) -> Result<bool> {
        let other = v.side.other();
        for &id in self.members(other) {
            if view.edge(v, Vertex { side: other, id })? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn push(&mut self, v: Vertex) {
        match v.side {
            Side::L => self.left.push(v.id),
            Side::R => self.right.push(v.id),
        }
    }
}

/// Stage boundaries an algorithm may report for the trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Milestones {
    pub t_f: Option<usize>,
    pub t_b: Option<usize>,
    pub stage_one_side: Option<Side>,
}

/// A deterministic online algorithm: all of its randomness comes from the
/// seed handed to [`OnlineAlgorithm::start`].
pub trait OnlineAlgorithm: Sync {
    fn start(&self, n: usize, seed: &Seed) -> Box<dyn AlgorithmRun + '_>;
}

pub trait AlgorithmRun {
    /// Include or exclude `v`, which has just been exposed at round `t`.
    fn decide(&mut self, view: &LedgerView<'_>, set: &CurrentSet, v: Vertex, t: usize) -> Result<bool>;

    /// Vertex choice for self-selecting runs ([`Arrivals::SelfSelected`]).
    fn select(&mut self, _view: &LedgerView<'_>, _set: &CurrentSet, _t: usize) -> Option<Vertex> {
        None
    }

    fn milestones(&self) -> Milestones {
        Milestones::default()
    }
}

/// Who picks v_t: an external policy, or the algorithm itself.
#[derive(Debug, Clone, Copy)]
pub enum Arrivals<'a> {
    Policy(&'a ArrivalPolicy),
    SelfSelected,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunTrace {
    pub n: usize,
    pub arrivals: Vec<Vertex>,
    pub decisions: Vec<bool>,
    /// `(|I_t ∩ L|, |I_t ∩ R|)` after round t.
    pub sizes: Vec<(u32, u32)>,
    /// Stage-one stop, or [`RunTrace::sentinel`].
    pub t_f: usize,
    /// Stage-two cap hit, or [`RunTrace::sentinel`].
    pub t_b: usize,
    pub tau: usize,
    pub tau_target: u64,
    /// ζ: L if |I_τ ∩ L| > |I_τ ∩ R|, else R.
    pub majority: Side,
    pub stage_one_side: Option<Side>,
    pub final_set: BalancedSet,
}

impl RunTrace {
    pub fn sentinel(&self) -> usize {
        2 * self.n + 1
    }

    pub fn final_size(&self) -> u64 {
        self.final_set.size()
    }

    pub fn stage_two_completed(&self) -> bool {
        self.t_b <= 2 * self.n
    }

    /// Whether rounds `1..=t` coincide with `other`.
    pub fn same_prefix(&self, other: &RunTrace, t: usize) -> bool {
        self.arrivals[..t] == other.arrivals[..t] && self.decisions[..t] == other.decisions[..t]
    }
}

/// τ: the first round at which either side count reaches `tau_target`,
/// clamped to 2n.
pub fn stopping_time_tau(sizes: &[(u32, u32)], tau_target: u64) -> usize {
    sizes
        .iter()
        .position(|&(l, r)| l.max(r) as u64 >= tau_target)
        .map_or(sizes.len(), |i| i + 1)
}

/// ζ at round τ.
pub fn majority_at(sizes: &[(u32, u32)], tau: usize) -> Side {
    match tau.checked_sub(1).and_then(|i| sizes.get(i)) {
        Some(&(l, r)) if l > r => Side::L,
        _ => Side::R,
    }
}

/// Runs `algorithm` for 2n rounds on `g`.
///
/// Round t exposes v_t (revealing its pairs to every previously exposed
/// vertex) and then asks the algorithm to decide. The arrival stream is keyed
/// by `seed/arrival:0` and the algorithm by `seed/algorithm:0`.
pub fn run_online(
    g: &dyn Adjacency,
    algorithm: &dyn OnlineAlgorithm,
    arrivals: Arrivals<'_>,
    tau_target: u64,
    seed: &Seed,
) -> Result<RunTrace> {
    run_online_until(g, algorithm, arrivals, tau_target, seed, None)
}

/// As [`run_online`], optionally stopping after `limit` rounds.
pub fn run_online_until(
    g: &dyn Adjacency,
    algorithm: &dyn OnlineAlgorithm,
    arrivals: Arrivals<'_>,
    tau_target: u64,
    seed: &Seed,
    limit: Option<usize>,
) -> Result<RunTrace> {
    let n = g.side_len();
    let rounds = limit.map_or(2 * n, |l| l.min(2 * n));
    let mut run = algorithm.start(n, &seed.derive("algorithm", 0));
    let arrival_seed = seed.derive("arrival", 0);
    let mut stream = match arrivals {
        Arrivals::Policy(policy) => Some(ArrivalStream::new(policy, n, &arrival_seed)?),
        Arrivals::SelfSelected => None,
    };

    let mut exposure = Exposure::new(n);
    let mut set = CurrentSet::default();
    let mut final_set = BalancedSet::empty(n);
    let mut trace_arrivals = Vec::with_capacity(rounds);
    let mut decisions = Vec::with_capacity(rounds);
    let mut sizes = Vec::with_capacity(rounds);

    for t in 1..=rounds {
        let v = match stream.as_mut() {
            Some(stream) => stream.next().expect("stream yields 2n vertices"),
            None => {
                let view = LedgerView::new(g, &exposure);
                let v = run
                    .select(&view, &set, t)
                    .ok_or_else(|| Error::Config("self-selected run but the algorithm chose no vertex".into()))?;
                if v.id >= n || exposure.contains(v) {
                    return Err(Error::Config(format!("algorithm selected {v}, which is exposed or out of range")));
                }
                v
            }
        };
        exposure.expose(v);
        let view = LedgerView::new(g, &exposure);
        let accept = run.decide(&view, &set, v, t)?;
        if accept {
            set.push(v);
            final_set.insert(v);
        }
        trace_arrivals.push(v);
        decisions.push(accept);
        sizes.push((set.left.len() as u32, set.right.len() as u32));
    }

    let milestones = run.milestones();
    let sentinel = 2 * n + 1;
    let tau = stopping_time_tau(&sizes, tau_target);
    Ok(RunTrace {
        n,
        majority: majority_at(&sizes, tau),
        arrivals: trace_arrivals,
        decisions,
        sizes,
        t_f: milestones.t_f.unwrap_or(sentinel),
        t_b: milestones.t_b.unwrap_or(sentinel),
        tau,
        tau_target,
        stage_one_side: milestones.stage_one_side,
        final_set,
    })
}

/// V_A(T) and E_A(T) with statuses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevealedLedger {
    pub exposure: Exposure,
    /// `(u, v, present)` for every exposed cross pair, ascending.
    pub revealed: Vec<(usize, usize, bool)>,
}

/// Reconstructs the ledger after the first `t` rounds of `trace`.
pub fn ledger_at(trace: &RunTrace, g: &dyn Adjacency, t: usize) -> Result<RevealedLedger> {
    let n = trace.n;
    if t > trace.arrivals.len() {
        return Err(Error::StepOutOfRange { step: t, max: trace.arrivals.len() });
    }
    let mut exposure = Exposure::new(n);
    trace.arrivals[..t].iter().for_each(|&v| exposure.expose(v));
    let mut revealed = Vec::new();
    for u in exposure.exposed_l.ones() {
        for v in exposure.exposed_r.ones() {
            revealed.push((u, v, g.has_edge(u, v)));
        }
    }
    Ok(RevealedLedger { exposure, revealed })
}

#[derive(Serialize)]
struct StepRecord {
    t: usize,
    vertex: usize,
    side: Side,
    accepted: bool,
    #[serde(rename = "sizeL")]
    size_l: u32,
    #[serde(rename = "sizeR")]
    size_r: u32,
}

#[derive(Serialize)]
struct SummaryRecord {
    #[serde(rename = "T_f")]
    t_f: usize,
    #[serde(rename = "T_b")]
    t_b: usize,
    tau: usize,
    majority: Side,
    final_size: u64,
}

/// One JSON object per round, then a summary object.
pub fn write_trace_jsonl(trace: &RunTrace, sink: &mut impl Write) -> Result<()> {
    let mut out = Vec::new();
    for (i, ((v, accepted), (size_l, size_r))) in trace.arrivals.iter().zip(&trace.decisions).zip(&trace.sizes).enumerate() {
        let rec = StepRecord { t: i + 1, vertex: v.id, side: v.side, accepted: *accepted, size_l: *size_l, size_r: *size_r };
        serde_json::to_writer(&mut out, &rec).map_err(std::io::Error::from)?;
        out.push(b'\n');
    }
    let summary = SummaryRecord {
        t_f: trace.t_f,
        t_b: trace.t_b,
        tau: trace.tau,
        majority: trace.majority,
        final_size: trace.final_size(),
    };
    serde_json::to_writer(&mut out, &summary).map_err(std::io::Error::from)?;
    out.push(b'\n');
    sink.write_all(&out)?;
    Ok(())
}
