//! Two-stage online greedy for γ-balanced independent sets.
//!
//! Stage one accepts every arriving vertex with no revealed edge into the
//! current set, until one side holds `t1` vertices. That side is then
//! frozen, and stage two accepts only vertices of the other (deficient) side,
//! again greedily, until the deficient side holds `t2`. The truncation at
//! `(t1, t2)` is what makes the final set γ-balanced.

use crate::error::{Error, Result};
use crate::graph::{Adjacency, Side, Vertex};
use crate::online::{run_online, AlgorithmRun, Arrivals, ArrivalPolicy, CurrentSet, LedgerView, Milestones, OnlineAlgorithm, RunTrace};
use crate::params::{compute_thresholds, is_gamma_balanced, Gamma, Params, Thresholds};
use crate::seed::Seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GreedyConfig {
    pub t1: u64,
    pub t2: u64,
}

impl GreedyConfig {
    pub fn new(t1: u64, t2: u64, gamma: &Gamma) -> Result<Self> {
        if t1 == 0 {
            return Err(Error::Param("t1 must be at least 1".into()));
        }
        if !is_gamma_balanced(t1, t2, gamma) {
            return Err(Error::Param(format!("targets ({t1}, {t2}) are not balanced at gamma = {}", gamma.value())));
        }
        Ok(GreedyConfig { t1, t2 })
    }

    pub fn from_thresholds(th: &Thresholds) -> Self {
        GreedyConfig { t1: th.t1, t2: th.t2 }
    }

    pub fn target_size(&self) -> u64 {
        self.t1 + self.t2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOne {
    Accept,
    Reject,
    /// Accepted, and its side now holds t1 vertices.
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageTwo {
    Accept,
    Reject,
    /// The deficient side already holds t2 vertices.
    Done,
}

pub fn stage_one_decision(view: &LedgerView<'_>, set: &CurrentSet, v: Vertex, t1: u64) -> Result<StageOne> {
    debug_assert!(set.count(Side::L).max(set.count(Side::R)) < t1);
    if set.conflicts_with(view, v)? {
        return Ok(StageOne::Reject);
    }
    Ok(if set.count(v.side) + 1 >= t1 { StageOne::Complete } else { StageOne::Accept })
}

pub fn stage_two_decision(view: &LedgerView<'_>, set: &CurrentSet, v: Vertex, deficient: Side, t2: u64) -> Result<StageTwo> {
    if set.count(deficient) >= t2 {
        return Ok(StageTwo::Done);
    }
    if v.side != deficient || set.conflicts_with(view, v)? {
        return Ok(StageTwo::Reject);
    }
    Ok(StageTwo::Accept)
}

#[derive(Debug, Clone, Copy)]
pub struct TwoStageGreedy {
    pub config: GreedyConfig,
}

impl TwoStageGreedy {
    pub fn new(config: GreedyConfig) -> Self {
        TwoStageGreedy { config }
    }
}

enum Stage {
    One,
    Two { deficient: Side },
    Finished,
}

struct GreedyRun {
    config: GreedyConfig,
    stage: Stage,
    milestones: Milestones,
}

impl OnlineAlgorithm for TwoStageGreedy {
    fn start(&self, _n: usize, _seed: &Seed) -> Box<dyn AlgorithmRun + '_> {
        Box::new(GreedyRun { config: self.config, stage: Stage::One, milestones: Milestones::default() })
    }
}

impl AlgorithmRun for GreedyRun {
    fn decide(&mut self, view: &LedgerView<'_>, set: &CurrentSet, v: Vertex, t: usize) -> Result<bool> {
        let GreedyConfig { t1, t2 } = self.config;
        match self.stage {
            Stage::One => match stage_one_decision(view, set, v, t1)? {
                StageOne::Reject => Ok(false),
                StageOne::Accept => Ok(true),
                StageOne::Complete => {
                    let deficient = v.side.other();
                    self.milestones.t_f = Some(t);
                    self.milestones.stage_one_side = Some(v.side);
                    if set.count(deficient) >= t2 {
                        self.milestones.t_b = Some(t);
                        self.stage = Stage::Finished;
                    } else {
                        self.stage = Stage::Two { deficient };
                    }
                    Ok(true)
                }
            },
            Stage::Two { deficient } => match stage_two_decision(view, set, v, deficient, t2)? {
                StageTwo::Accept => {
                    if set.count(deficient) + 1 >= t2 {
                        self.milestones.t_b = Some(t);
                        self.stage = Stage::Finished;
                    }
                    Ok(true)
                }
                StageTwo::Reject => Ok(false),
                StageTwo::Done => {
                    self.stage = Stage::Finished;
                    Ok(false)
                }
            },
            Stage::Finished => Ok(false),
        }
    }

    fn milestones(&self) -> Milestones {
        self.milestones
    }
}

/// Runs both stages in one online pass with targets and τ-target from `params`.
pub fn two_stage(g: &dyn Adjacency, policy: &ArrivalPolicy, params: &Params, seed: &Seed) -> Result<RunTrace> {
    let th = compute_thresholds(params)?;
    two_stage_with(g, policy, GreedyConfig::from_thresholds(&th), th.tau_target, seed)
}

/// Runs both stages with explicit targets.
pub fn two_stage_with(g: &dyn Adjacency, policy: &ArrivalPolicy, config: GreedyConfig, tau_target: u64, seed: &Seed) -> Result<RunTrace> {
    run_online(g, &TwoStageGreedy::new(config), Arrivals::Policy(policy), tau_target, seed)
}
