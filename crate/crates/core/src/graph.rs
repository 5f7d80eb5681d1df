//! Bipartite graphs with parts `L = {l0..l(n-1)}` and `R = {r0..r(n-1)}`.
//!
//! Two representations share the [`Adjacency`] trait: the dense
//! [`BipartiteGraph`] (one bitset row per L vertex) and the on-demand
//! [`HashedGraph`], which evaluates each edge indicator straight from the
//! seeded stream. Materializing a `HashedGraph` yields exactly the graph
//! [`generate_graph`] returns for the same seed, so large instances can be
//! simulated without ever allocating n² bits.

use std::fmt;
use std::io::{BufRead, Write};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::seed::{stream_at, Seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::L => Side::R,
            Side::R => Side::L,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::L => "L",
            Side::R => "R",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub side: Side,
    pub id: usize,
}

impl Vertex {
    pub fn l(id: usize) -> Self {
        Vertex { side: Side::L, id }
    }

    pub fn r(id: usize) -> Self {
        Vertex { side: Side::R, id }
    }

    /// Position in the canonical order `l0..l(n-1), r0..r(n-1)`.
    pub fn index(self, n: usize) -> usize {
        match self.side {
            Side::L => self.id,
            Side::R => n + self.id,
        }
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        if index < n {
            Vertex::l(index)
        } else {
            Vertex::r(index - n)
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.side {
            Side::L => write!(f, "l{}", self.id),
            Side::R => write!(f, "r{}", self.id),
        }
    }
}

/// Read access to the cross edges of a bipartite graph.
pub trait Adjacency: Sync {
    /// Vertices per side.
    fn side_len(&self) -> usize;

    /// Whether `(l_u, r_v)` is an edge.
    fn has_edge(&self, u: usize, v: usize) -> bool;

    /// Whether two vertices are adjacent; same-side pairs never are.
    fn adjacent(&self, a: Vertex, b: Vertex) -> bool {
        match (a.side, b.side) {
            (Side::L, Side::R) => self.has_edge(a.id, b.id),
            (Side::R, Side::L) => self.has_edge(b.id, a.id),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Sampled { p: f64, seed: Seed },
    Loaded { p: f64, seed: Option<u64> },
    Manual,
}

/// Dense, immutable bipartite graph.
#[derive(Clone)]
pub struct BipartiteGraph {
    n: usize,
    rows: Vec<FixedBitSet>,
    provenance: Provenance,
}

impl PartialEq for BipartiteGraph {
    /// Edge sets only; provenance is metadata.
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.rows == other.rows
    }
}

impl Eq for BipartiteGraph {}

impl fmt::Debug for BipartiteGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BipartiteGraph(n={}, edges={}, {:?})", self.n, self.edge_count(), self.provenance)?;
        if self.n <= 16 {
            for row in &self.rows {
                let line: String = (0..self.n).map(|v| if row.contains(v) { '1' } else { '.' }).collect();
                writeln!(f, "  {line}")?;
            }
        }
        Ok(())
    }
}

impl BipartiteGraph {
    pub fn empty(n: usize) -> Self {
        BipartiteGraph { n, rows: vec![FixedBitSet::with_capacity(n); n], provenance: Provenance::Manual }
    }

    pub fn complete(n: usize) -> Self {
        Self::from_fn(n, |_, _| true)
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let rows = (0..n)
            .map(|u| {
                let mut row = FixedBitSet::with_capacity(n);
                for v in 0..n {
                    if f(u, v) {
                        row.insert(v);
                    }
                }
                row
            })
            .collect();
        BipartiteGraph { n, rows, provenance: Provenance::Manual }
    }

    /// Builds from `(u, v)` pairs; panics on out-of-range ids.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Self::empty(n);
        for (u, v) in edges {
            assert!(u < n && v < n, "edge ({u}, {v}) out of range for n = {n}");
            g.rows[u].insert(v);
        }
        g
    }

    pub fn materialize(source: &impl Adjacency) -> Self {
        Self::from_fn(source.side_len(), |u, v| source.has_edge(u, v))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Neighbours in R of `l_u`.
    pub fn row(&self, u: usize) -> &FixedBitSet {
        &self.rows[u]
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones(..)).sum()
    }

    /// Edges in ascending lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().enumerate().flat_map(|(u, row)| row.ones().map(move |v| (u, v)))
    }

    /// The graph with L and R exchanged.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |u, v| self.has_edge(v, u))
    }

    /// Copy with one pair toggled to `present`.
    pub fn with_edge(&self, u: usize, v: usize, present: bool) -> Self {
        let mut g = self.clone();
        g.rows[u].set(v, present);
        g.provenance = Provenance::Manual;
        g
    }

    /// Edge density, used as `p` for graphs without a sampling record.
    pub fn density(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.edge_count() as f64 / (self.n * self.n) as f64
        }
    }

    /// Whether the given vertices form an independent set.
    pub fn is_independent(&self, lpart: &FixedBitSet, rpart: &FixedBitSet) -> bool {
        lpart.ones().all(|u| self.rows[u].is_disjoint(rpart))
    }
}

impl Adjacency for BipartiteGraph {
    fn side_len(&self) -> usize {
        self.n
    }

    #[inline]
    fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u].contains(v)
    }
}

/// Lazily evaluated G_bip(n, p): edge `(l_u, r_v)` is present iff word
/// `u*n + v` of the stream keyed by the seed falls below `p * 2^64`.
#[derive(Debug, Clone)]
pub struct HashedGraph {
    n: usize,
    p: f64,
    key: u64,
    threshold: Threshold,
    seed: Seed,
}

#[derive(Debug, Clone, Copy)]
enum Threshold {
    Never,
    Always,
    Below(u64),
}

impl HashedGraph {
    pub fn new(n: usize, p: f64, seed: &Seed) -> Self {
        let threshold = if p <= 0.0 {
            Threshold::Never
        } else if p >= 1.0 {
            Threshold::Always
        } else {
            Threshold::Below((p * 18_446_744_073_709_551_616.0) as u64)
        };
        HashedGraph { n, p, key: seed.value(), threshold, seed: seed.clone() }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> &Seed {
        &self.seed
    }

    pub fn to_dense(&self) -> BipartiteGraph {
        BipartiteGraph::materialize(self).with_provenance(Provenance::Sampled { p: self.p, seed: self.seed.clone() })
    }
}

impl Adjacency for HashedGraph {
    fn side_len(&self) -> usize {
        self.n
    }

    #[inline]
    fn has_edge(&self, u: usize, v: usize) -> bool {
        match self.threshold {
            Threshold::Never => false,
            Threshold::Always => true,
            Threshold::Below(t) => stream_at(self.key, (u * self.n + v) as u64) < t,
        }
    }
}

/// Samples G_bip(n, p) from the seeded stream.
pub fn generate_graph(params: &Params, seed: &Seed) -> BipartiteGraph {
    HashedGraph::new(params.n, params.p, seed).to_dense()
}

const MAGIC: &str = "balis-graph v1";

/// Writes the v1 text format.
pub fn save_graph(g: &BipartiteGraph, sink: &mut impl Write) -> Result<()> {
    let (p, seed) = match &g.provenance {
        Provenance::Sampled { p, seed } => (*p, Some(seed.value())),
        Provenance::Loaded { p, seed } => (*p, *seed),
        Provenance::Manual => (g.density(), None),
    };
    let seed = seed.map_or_else(|| "none".to_owned(), |s| s.to_string());
    let mut out = String::with_capacity(32 + 12 * g.edge_count());
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("n={} p={} seed={}\n", g.n, p, seed));
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    sink.write_all(out.as_bytes())?;
    Ok(())
}

pub fn load_graph(source: impl BufRead) -> Result<BipartiteGraph> {
    let bad = |line: usize, msg: String| Error::GraphFormat { line, msg };
    let mut lines = source.lines();

    let magic = lines.next().transpose()?.ok_or_else(|| bad(1, "missing header".into()))?;
    if magic != MAGIC {
        return Err(bad(1, format!("malformed header: expected `{MAGIC}`")));
    }
    let meta = lines.next().transpose()?.ok_or_else(|| bad(2, "missing parameter line".into()))?;
    let fields: Vec<&str> = meta.split(' ').collect();
    let [n, p, seed] = fields.as_slice() else {
        return Err(bad(2, "malformed header: expected `n=<int> p=<decimal> seed=<uint64|none>`".into()));
    };
    let field = |tok: &str, key: &str| -> Result<String> {
        tok.strip_prefix(key)
            .and_then(|v| v.strip_prefix('='))
            .map(str::to_owned)
            .ok_or_else(|| bad(2, format!("malformed header: expected `{key}=`")))
    };
    let n: usize = field(n, "n")?.parse().map_err(|_| bad(2, "malformed header: bad n".into()))?;
    let p: f64 = field(p, "p")?.parse().map_err(|_| bad(2, "malformed header: bad p".into()))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(bad(2, "malformed header: p outside [0, 1]".into()));
    }
    let seed = match field(seed, "seed")?.as_str() {
        "none" => None,
        s => Some(s.parse::<u64>().map_err(|_| bad(2, "malformed header: bad seed".into()))?),
    };

    let mut g = BipartiteGraph::empty(n);
    let mut prev: Option<(usize, usize)> = None;
    for (i, line) in lines.enumerate() {
        let lineno = i + 3;
        let line = line?;
        let mut toks = line.split(' ');
        let (Some(u), Some(v), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(bad(lineno, format!("malformed edge line `{line}`")));
        };
        let parse = |s: &str| s.parse::<usize>().map_err(|_| bad(lineno, format!("malformed edge line `{line}`")));
        let (u, v) = (parse(u)?, parse(v)?);
        if u >= n || v >= n {
            return Err(bad(lineno, format!("vertex id out of range in `{line}` (n = {n})")));
        }
        if let Some(prev) = prev {
            if (u, v) == prev {
                return Err(bad(lineno, format!("duplicate edge `{line}`")));
            }
            if (u, v) < prev {
                return Err(bad(lineno, format!("edge `{line}` out of ascending order")));
            }
        }
        prev = Some((u, v));
        g.rows[u].insert(v);
    }
    Ok(g.with_provenance(Provenance::Loaded { p, seed }))
}
