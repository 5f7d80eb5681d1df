//! Balanced independent sets in dense random bipartite graphs: seeded graph
//! sampling, an online runtime, the two-stage greedy algorithm, an exact
//! oracle, moment formulas and the overlap-gap apparatus.

pub mod error;
pub mod graph;
pub mod greedy;
pub mod moments;
pub mod oracle;
pub mod ogp;
pub mod online;
pub mod params;
pub mod seed;
pub mod set;

pub use error::{Error, Result, SeedParseError};
pub use graph::{generate_graph, load_graph, save_graph, Adjacency, BipartiteGraph, HashedGraph, Provenance, Side, Vertex};
pub use greedy::{two_stage, two_stage_with, GreedyConfig, TwoStageGreedy};
pub use online::{run_online, ArrivalPolicy, Arrivals, OnlineAlgorithm, RunTrace};
pub use params::{compute_thresholds, is_gamma_balanced, Gamma, Params, Thresholds};
pub use seed::{derive_subseed, Seed};
pub use set::BalancedSet;
