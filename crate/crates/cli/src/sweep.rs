use serde::Serialize;

use balis_core::{ArrivalPolicy, Error, Params, Result, Seed};

use crate::records::{greedy_trials, mean_and_stderr};

/// Cartesian grid for greedy sweeps.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub ns: Vec<usize>,
    pub ps: Vec<f64>,
    pub gammas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub trials: usize,
    pub max_runs: usize,
}

impl SweepGrid {
    pub fn points(&self) -> Vec<(usize, f64, f64, f64)> {
        let mut out = Vec::new();
        for &n in &self.ns {
            for &p in &self.ps {
                for &gamma in &self.gammas {
                    for &epsilon in &self.epsilons {
                        out.push((n, p, gamma, epsilon));
                    }
                }
            }
        }
        out
    }
}

/// One aggregate row per grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub point: usize,
    pub seed: String,
    pub n: usize,
    pub p: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub policy: String,
    pub trials: usize,
    pub t1: u64,
    pub t2: u64,
    pub mean_size: f64,
    pub stderr: f64,
    pub freq_target: f64,
    pub freq_valid: f64,
    pub mean_t_f: f64,
    pub max_t_f: usize,
}

impl SweepRow {
    #[cfg(test)]
    pub(crate) fn example(n: usize) -> Self {
        SweepRow {
            point: 0,
            seed: "0/point:0".into(),
            n,
            p: 0.5,
            gamma: 0.5,
            epsilon: 0.2,
            policy: "l-first".into(),
            trials: 1,
            t1: 8,
            t2: 8,
            mean_size: 16.0,
            stderr: 0.0,
            freq_target: 1.0,
            freq_valid: 1.0,
            mean_t_f: 8.0,
            max_t_f: 8,
        }
    }
}

/// Runs every grid point; point j uses `master/point:j` and its trials
/// `master/point:j/trial:i`.
pub fn sweep(grid: &SweepGrid, policy: &ArrivalPolicy, master: &Seed) -> Result<Vec<SweepRow>> {
    let points = grid.points();
    if points.is_empty() || grid.trials == 0 {
        return Err(Error::Config("empty sweep".into()));
    }
    let runs = points.len() * grid.trials;
    if runs > grid.max_runs {
        return Err(Error::Guard { what: "sweep runs", value: runs, limit: grid.max_runs });
    }
    let mut rows = Vec::with_capacity(points.len());
    for (j, &(n, p, gamma, epsilon)) in points.iter().enumerate() {
        let params = Params::new(n, p, gamma, epsilon)?;
        let th = balis_core::compute_thresholds(&params)?;
        let seed = master.derive("point", j as u64);
        let records = greedy_trials(&params, policy, &seed, grid.trials)?;
        let k = records.len() as f64;
        let (mean_size, stderr) = mean_and_stderr(records.iter().map(|r| r.final_size as f64));
        rows.push(SweepRow {
            point: j,
            seed: seed.to_string(),
            n,
            p,
            gamma,
            epsilon,
            policy: policy.name().to_string(),
            trials: grid.trials,
            t1: th.t1,
            t2: th.t2,
            mean_size,
            stderr,
            freq_target: records.iter().filter(|r| r.reached_target).count() as f64 / k,
            freq_valid: records.iter().filter(|r| r.independent && (r.balanced || r.t_b > 2 * n)).count() as f64 / k,
            mean_t_f: mean_and_stderr(records.iter().map(|r| r.t_f as f64)).0,
            max_t_f: records.iter().map(|r| r.t_f).max().unwrap_or(0),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(ns: Vec<usize>) -> SweepGrid {
        SweepGrid { ns, ps: vec![0.5], gammas: vec![0.5], epsilons: vec![0.3], trials: 3, max_runs: 100 }
    }

    #[test]
    fn one_row_per_point() {
        let ns: Vec<usize> = (6..=9).map(|k| 1 << k).collect();
        let rows = sweep(&grid(ns), &ArrivalPolicy::LFirst, &Seed::new(1)).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[2].seed, "1/point:2");
        assert!(rows.iter().all(|r| r.freq_valid == 1.0));
    }

    #[test]
    fn empty_and_oversized() {
        let err = sweep(&grid(vec![]), &ArrivalPolicy::LFirst, &Seed::new(1)).unwrap_err();
        assert!(err.to_string().contains("empty sweep"));
        let mut big = grid(vec![64; 40]);
        big.max_runs = 100;
        assert!(sweep(&big, &ArrivalPolicy::LFirst, &Seed::new(1)).unwrap_err().is_guard());
    }

    #[test]
    fn deterministic() {
        let a = sweep(&grid(vec![128, 256]), &ArrivalPolicy::UniformRandom, &Seed::new(4)).unwrap();
        let b = sweep(&grid(vec![128, 256]), &ArrivalPolicy::UniformRandom, &Seed::new(4)).unwrap();
        assert_eq!(a, b);
    }
}
