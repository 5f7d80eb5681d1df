//! Exhaustive oracles for small graphs.
//!
//! Every subset `S ⊆ L` is independent (no edges inside a side), and the
//! vertices of R that can join it are exactly the common non-neighbours of
//! `S`. Walking all `2^n` subsets with that kernel gives the maximum
//! γ-balanced independent set and the counts Z_α. The same walk over
//! subsets of R is kept as an independent second route.

use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Adjacency, BipartiteGraph};
use crate::params::{is_gamma_balanced, Gamma};
use crate::set::BalancedSet;

pub const MAX_ORACLE_N: usize = 26;
pub const MAX_ENUMERATED_SETS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub max_size: u64,
    pub witness: BalancedSet,
    /// Z_α for α = 0..=2n.
    pub z_counts: Option<BTreeMap<u64, u64>>,
}

impl Serialize for OracleResult {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("OracleResult", 4)?;
        st.serialize_field("max_size", &self.max_size)?;
        st.serialize_field("witness_L", &self.witness.left_ids())?;
        st.serialize_field("witness_R", &self.witness.right_ids())?;
        let z: BTreeMap<String, u64> = self
            .z_counts
            .iter()
            .flatten()
            .filter(|(_, c)| **c > 0)
            .map(|(a, c)| (a.to_string(), *c))
            .collect();
        st.serialize_field("Z", &z)?;
        st.end()
    }
}

/// Vertices of R adjacent to no member of `s ⊆ L`.
pub fn common_non_neighbors(g: &BipartiteGraph, s: &FixedBitSet) -> FixedBitSet {
    let mut out = FixedBitSet::with_capacity(g.n());
    out.insert_range(..);
    for u in s.ones() {
        out.difference_with(g.row(u));
    }
    out
}

fn guard(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::Guard { what: "n", value: n, limit });
    }
    Ok(())
}

/// Bitmask adjacency rows: `rows[u]` has bit v set iff (u, v) is an edge.
fn mask_rows(g: &dyn Adjacency) -> Vec<u32> {
    let n = g.side_len();
    (0..n).map(|u| (0..n).filter(|&v| g.has_edge(u, v)).fold(0u32, |m, v| m | (1 << v))).collect()
}

fn mask_cols(g: &dyn Adjacency) -> Vec<u32> {
    let n = g.side_len();
    (0..n).map(|v| (0..n).filter(|&u| g.has_edge(u, v)).fold(0u32, |m, u| m | (1 << u))).collect()
}

/// Calls `f(subset, admissible)` for every subset of `0..rows.len()` in
/// lexicographic order of the sorted member lists. `admissible` is the mask of
/// opposite-side vertices with no edge into `subset`.
fn walk_subsets(rows: &[u32], mut f: impl FnMut(u32, u32)) {
    let n = rows.len();
    let all = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    fn rec(rows: &[u32], next: usize, subset: u32, admissible: u32, f: &mut impl FnMut(u32, u32)) {
        f(subset, admissible);
        for i in next..rows.len() {
            rec(rows, i + 1, subset | (1 << i), admissible & !rows[i], f);
        }
    }
    rec(rows, 0, 0, all, &mut f);
}

/// `table[own][avail]`: largest partner count ≤ avail balanced with `own`,
/// with own-side counts always on the L position of the predicate.
fn best_partner_table(n: usize, gamma: &Gamma, own_is_left: bool) -> Vec<Vec<Option<u64>>> {
    (0..=n as u64)
        .map(|own| {
            (0..=n as u64)
                .map(|avail| {
                    (0..=avail).rev().find(|&r| {
                        if own_is_left {
                            is_gamma_balanced(own, r, gamma)
                        } else {
                            is_gamma_balanced(r, own, gamma)
                        }
                    })
                })
                .collect()
        })
        .collect()
}

fn binomials(n: usize) -> Vec<Vec<u64>> {
    let mut c = vec![vec![0u64; n + 1]; n + 1];
    for i in 0..=n {
        c[i][0] = 1;
        for j in 1..=i {
            c[i][j] = c[i - 1][j - 1] + c[i - 1][j];
        }
    }
    c
}

fn lowest_bits(mask: u32, k: u64) -> u32 {
    let mut out = 0;
    let mut m = mask;
    for _ in 0..k {
        let bit = m & m.wrapping_neg();
        out |= bit;
        m &= !bit;
    }
    out
}

fn mask_to_set(n: usize, left: u32, right: u32) -> BalancedSet {
    BalancedSet::from_ids(n, (0..n).filter(|i| left >> i & 1 == 1), (0..n).filter(|i| right >> i & 1 == 1))
}

/// Maximum γ-balanced independent set by enumerating subsets of L.
///
/// The witness is the lexicographically smallest L-part among optima,
/// completed with the smallest admissible R ids.
pub fn max_balanced_independent_set(g: &BipartiteGraph, gamma: &Gamma) -> Result<OracleResult> {
    let n = g.n();
    guard(n, MAX_ORACLE_N)?;
    let rows = mask_rows(g);
    let best = best_partner_table(n, gamma, true);
    let choose = binomials(n);
    let mut z = vec![0u64; 2 * n + 1];
    let mut top: Option<(u64, u32, u32)> = None;
    walk_subsets(&rows, |s, adm| {
        let l = s.count_ones() as u64;
        let c = adm.count_ones() as u64;
        for r in 0..=c {
            if is_gamma_balanced(l, r, gamma) {
                z[(l + r) as usize] += choose[c as usize][r as usize];
            }
        }
        if let Some(r) = best[l as usize][c as usize] {
            if top.is_none_or(|(size, _, _)| l + r > size) {
                top = Some((l + r, s, lowest_bits(adm, r)));
            }
        }
    });
    // the empty set is balanced, so some candidate always exists
    let (max_size, left, right) = top.expect("empty set is balanced");
    Ok(OracleResult {
        max_size,
        witness: mask_to_set(n, left, right),
        z_counts: Some(z.into_iter().enumerate().map(|(a, c)| (a as u64, c)).collect()),
    })
}

/// Z_α: number of γ-balanced independent sets of size `alpha`.
pub fn count_balanced_independent_sets(g: &BipartiteGraph, gamma: &Gamma, alpha: u64) -> Result<u64> {
    let n = g.n();
    guard(n, MAX_ORACLE_N)?;
    let rows = mask_rows(g);
    let choose = binomials(n);
    let mut total = 0u64;
    walk_subsets(&rows, |s, adm| {
        let l = s.count_ones() as u64;
        if l > alpha {
            return;
        }
        let r = alpha - l;
        let c = adm.count_ones() as u64;
        if r <= c && is_gamma_balanced(l, r, gamma) {
            total += choose[c as usize][r as usize];
        }
    });
    Ok(total)
}

/// Second route: enumerate subsets of R and complete from L.
/// Returns `(max_size, Z_α for α = 0..=2n)`.
pub fn max_and_counts_via_right(g: &BipartiteGraph, gamma: &Gamma) -> Result<(u64, Vec<u64>)> {
    let n = g.n();
    guard(n, MAX_ORACLE_N)?;
    let cols = mask_cols(g);
    let best = best_partner_table(n, gamma, false);
    let choose = binomials(n);
    let mut z = vec![0u64; 2 * n + 1];
    let mut max_size = 0;
    walk_subsets(&cols, |s, adm| {
        let r = s.count_ones() as u64;
        let c = adm.count_ones() as u64;
        for l in 0..=c {
            if is_gamma_balanced(l, r, gamma) {
                z[(l + r) as usize] += choose[c as usize][l as usize];
            }
        }
        if let Some(l) = best[r as usize][c as usize] {
            max_size = max_size.max(l + r);
        }
    });
    Ok((max_size, z))
}

/// All γ-balanced independent sets with size in `[min_size, max_size]`.
pub fn enumerate_balanced_independent_sets(
    g: &BipartiteGraph,
    gamma: &Gamma,
    min_size: u64,
    max_size: u64,
    limit: usize,
) -> Result<Vec<BalancedSet>> {
    let n = g.n();
    guard(n, MAX_ORACLE_N)?;
    let rows = mask_rows(g);
    let mut out = Vec::new();
    let mut overflow = false;
    walk_subsets(&rows, |s, adm| {
        if overflow {
            return;
        }
        let l = s.count_ones() as u64;
        let c = adm.count_ones() as u64;
        for r in min_size.saturating_sub(l)..=max_size.saturating_sub(l).min(c) {
            if l + r < min_size || l + r > max_size || !is_gamma_balanced(l, r, gamma) {
                continue;
            }
            for_each_k_subset(adm, r as u32, |right| {
                if out.len() < limit {
                    out.push(mask_to_set(n, s, right));
                } else {
                    overflow = true;
                }
            });
        }
    });
    if overflow {
        return Err(Error::Guard { what: "enumerated sets", value: limit + 1, limit });
    }
    Ok(out)
}

/// Every `k`-element submask of `mask`.
pub(crate) fn for_each_k_subset(mask: u32, k: u32, mut f: impl FnMut(u32)) {
    let bits: Vec<u32> = (0..32).filter(|i| mask >> i & 1 == 1).collect();
    fn rec(bits: &[u32], start: usize, left: u32, acc: u32, f: &mut impl FnMut(u32)) {
        if left == 0 {
            f(acc);
            return;
        }
        for i in start..bits.len() {
            if bits.len() - i < left as usize {
                break;
            }
            rec(bits, i + 1, left - 1, acc | (1 << bits[i]), f);
        }
    }
    if k as usize <= bits.len() {
        rec(&bits, 0, k, 0, &mut f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::HashedGraph;
    use crate::seed::Seed;
    use proptest::prelude::*;

    fn half() -> Gamma {
        Gamma::new(0.5).unwrap()
    }

    /// 1-based edges (l1,r1), (l1,r2), (l2,r1), (l3,r3).
    fn example() -> BipartiteGraph {
        BipartiteGraph::from_edges(3, [(0, 0), (0, 1), (1, 0), (2, 2)])
    }

    /// Plain enumeration of all (L-subset, R-subset) pairs.
    fn brute(g: &BipartiteGraph, gamma: &Gamma) -> (u64, Vec<u64>) {
        let n = g.n();
        let mut z = vec![0u64; 2 * n + 1];
        for a in 0u32..1 << n {
            for b in 0u32..1 << n {
                let s = mask_to_set(n, a, b);
                if s.is_independent(g) && s.is_balanced(gamma) {
                    z[s.size() as usize] += 1;
                }
            }
        }
        let max = z.iter().rposition(|c| *c > 0).unwrap() as u64;
        (max, z)
    }

    #[test]
    fn common_non_neighbor_examples() {
        let g = example();
        let all = common_non_neighbors(&g, &FixedBitSet::with_capacity(3));
        assert_eq!(all.ones().collect::<Vec<_>>(), vec![0, 1, 2]);
        let mut s = FixedBitSet::with_capacity(3);
        s.insert(1);
        s.insert(2);
        assert_eq!(common_non_neighbors(&g, &s).ones().collect::<Vec<_>>(), vec![1]);
        let mut s0 = FixedBitSet::with_capacity(3);
        s0.insert(0);
        assert_eq!(common_non_neighbors(&BipartiteGraph::complete(3), &s0).count_ones(..), 0);
    }

    #[test]
    fn max_set_examples() {
        let empty = max_balanced_independent_set(&BipartiteGraph::empty(2), &half()).unwrap();
        assert_eq!(empty.max_size, 4);
        assert_eq!(empty.witness, BalancedSet::from_ids(2, [0, 1], [0, 1]));

        let complete = max_balanced_independent_set(&BipartiteGraph::complete(2), &half()).unwrap();
        assert_eq!(complete.max_size, 1);

        let ex = max_balanced_independent_set(&example(), &half()).unwrap();
        assert_eq!(ex.max_size, 3);
        assert!(ex.witness.is_independent(&example()) && ex.witness.is_balanced(&half()));
        // [0, 1] is the first optimal L-part in lexicographic order
        assert_eq!(ex.witness, BalancedSet::from_ids(3, [0, 1], [2]));
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_balanced_independent_sets(&BipartiteGraph::empty(2), &half(), 2).unwrap(), 4);
        assert_eq!(count_balanced_independent_sets(&BipartiteGraph::complete(2), &half(), 2).unwrap(), 0);
        assert_eq!(count_balanced_independent_sets(&example(), &half(), 3).unwrap(), 4);
    }

    #[test]
    fn size_guard() {
        let g = BipartiteGraph::empty(MAX_ORACLE_N + 1);
        assert!(max_balanced_independent_set(&g, &half()).unwrap_err().is_guard());
        assert!(count_balanced_independent_sets(&g, &half(), 2).unwrap_err().is_guard());
    }

    #[test]
    fn enumeration_matches_counts() {
        let g = HashedGraph::new(6, 0.4, &Seed::new(8)).to_dense();
        let gamma = Gamma::new(1.0 / 3.0).unwrap();
        let res = max_balanced_independent_set(&g, &gamma).unwrap();
        let z = res.z_counts.unwrap();
        for alpha in 0..=12u64 {
            let sets = enumerate_balanced_independent_sets(&g, &gamma, alpha, alpha, 100_000).unwrap();
            assert_eq!(sets.len() as u64, z[&alpha]);
            assert!(sets.iter().all(|s| s.is_independent(&g) && s.is_balanced(&gamma) && s.size() == alpha));
        }
        assert!(enumerate_balanced_independent_sets(&g, &gamma, 0, 12, 3).unwrap_err().is_guard());
    }

    #[test]
    fn k_subsets() {
        let mut seen = Vec::new();
        for_each_k_subset(0b1011, 2, |m| seen.push(m));
        assert_eq!(seen, vec![0b0011, 0b1001, 0b1010]);
        let mut none = 0;
        for_each_k_subset(0b1, 2, |_| none += 1);
        assert_eq!(none, 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn agrees_with_brute_force(n in 1usize..=5, p in 0.0f64..=1.0, master: u64, den in 2u64..=5) {
            let g = HashedGraph::new(n, p, &Seed::new(master)).to_dense();
            let gamma = Gamma::new(1.0 / den as f64).unwrap();
            let res = max_balanced_independent_set(&g, &gamma).unwrap();
            let (max, z) = brute(&g, &gamma);
            prop_assert_eq!(res.max_size, max);
            let counts: Vec<u64> = res.z_counts.unwrap().values().copied().collect();
            prop_assert_eq!(counts, z);
        }

        #[test]
        fn transpose_symmetry_and_monotonicity(n in 1usize..=8, p in 0.1f64..0.9, master: u64, u in 0usize..8, v in 0usize..8) {
            let g = HashedGraph::new(n, p, &Seed::new(master)).to_dense();
            let gamma = Gamma::new(0.4).unwrap();
            let base = max_balanced_independent_set(&g, &gamma).unwrap().max_size;
            // transposing swaps which side carries gamma; the disjunctive
            // predicate is symmetric, so the optimum is unchanged
            prop_assert_eq!(max_balanced_independent_set(&g.transpose(), &gamma).unwrap().max_size, base);
            let (u, v) = (u % n, v % n);
            prop_assert!(max_balanced_independent_set(&g.with_edge(u, v, true), &gamma).unwrap().max_size <= base);
            prop_assert!(max_balanced_independent_set(&g.with_edge(u, v, false), &gamma).unwrap().max_size >= base);
        }

        #[test]
        fn left_and_right_routes_agree(n in 1usize..=10, p in 0.05f64..0.95, master: u64) {
            let g = HashedGraph::new(n, p, &Seed::new(master)).to_dense();
            let gamma = Gamma::new(0.5).unwrap();
            let res = max_balanced_independent_set(&g, &gamma).unwrap();
            let (max, z) = max_and_counts_via_right(&g, &gamma).unwrap();
            prop_assert_eq!(res.max_size, max);
            let zl = res.z_counts.unwrap();
            prop_assert_eq!(zl.values().copied().collect::<Vec<_>>(), z);
            prop_assert_eq!(res.max_size, zl.iter().filter(|(_, c)| **c > 0).map(|(a, _)| *a).max().unwrap());
        }
    }
}
