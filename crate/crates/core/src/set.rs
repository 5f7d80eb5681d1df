use fixedbitset::FixedBitSet;
use serde::{Serialize, Serializer};

use crate::graph::{Adjacency, Side, Vertex};
use crate::params::{is_gamma_balanced, Gamma};

/// Candidate solution: a subset of L and a subset of R.
#[derive(Clone, PartialEq, Eq)]
pub struct BalancedSet {
    pub lpart: FixedBitSet,
    pub rpart: FixedBitSet,
}

impl BalancedSet {
    pub fn empty(n: usize) -> Self {
        BalancedSet { lpart: FixedBitSet::with_capacity(n), rpart: FixedBitSet::with_capacity(n) }
    }

    pub fn from_ids(n: usize, left: impl IntoIterator<Item = usize>, right: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(n);
        left.into_iter().for_each(|u| s.lpart.insert(u));
        right.into_iter().for_each(|v| s.rpart.insert(v));
        s
    }

    pub fn insert(&mut self, v: Vertex) {
        match v.side {
            Side::L => self.lpart.insert(v.id),
            Side::R => self.rpart.insert(v.id),
        }
    }

    pub fn contains(&self, v: Vertex) -> bool {
        match v.side {
            Side::L => self.lpart.contains(v.id),
            Side::R => self.rpart.contains(v.id),
        }
    }

    pub fn l_count(&self) -> u64 {
        self.lpart.count_ones(..) as u64
    }

    pub fn r_count(&self) -> u64 {
        self.rpart.count_ones(..) as u64
    }

    pub fn size(&self) -> u64 {
        self.l_count() + self.r_count()
    }

    pub fn count(&self, side: Side) -> u64 {
        match side {
            Side::L => self.l_count(),
            Side::R => self.r_count(),
        }
    }

    pub fn is_balanced(&self, gamma: &Gamma) -> bool {
        is_gamma_balanced(self.l_count(), self.r_count(), gamma)
    }

    /// Checked pair by pair, so it works for lazily evaluated graphs too.
    pub fn is_independent(&self, g: &(impl Adjacency + ?Sized)) -> bool {
        self.lpart.ones().all(|u| self.rpart.ones().all(|v| !g.has_edge(u, v)))
    }

    pub fn left_ids(&self) -> Vec<usize> {
        self.lpart.ones().collect()
    }

    pub fn right_ids(&self) -> Vec<usize> {
        self.rpart.ones().collect()
    }
}

impl std::fmt::Debug for BalancedSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{L{:?} R{:?}}}", self.left_ids(), self.right_ids())
    }
}

impl Serialize for BalancedSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("BalancedSet", 2)?;
        st.serialize_field("L", &self.left_ids())?;
        st.serialize_field("R", &self.right_ids())?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BipartiteGraph;

    #[test]
    fn sizes_and_membership() {
        let s = BalancedSet::from_ids(4, [0, 2], [1]);
        assert_eq!((s.l_count(), s.r_count(), s.size()), (2, 1, 3));
        assert!(s.contains(Vertex::l(2)) && !s.contains(Vertex::r(2)));
        assert!(s.is_balanced(&Gamma::new(0.5).unwrap()));
    }

    #[test]
    fn independence() {
        let g = BipartiteGraph::from_edges(3, [(0, 0)]);
        assert!(BalancedSet::from_ids(3, [0], [1, 2]).is_independent(&g));
        assert!(!BalancedSet::from_ids(3, [0], [0]).is_independent(&g));
    }
}
