//! Weighted MaxCut instances.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng};

/// Retries allowed when a sampled graph comes out disconnected.
pub const MAX_CONNECT_RETRIES: u32 = 1000;

/// Largest graph [`brute_force_maxcut`] will enumerate.
pub const BRUTE_FORCE_CAP: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Undirected graph with strictly positive edge weights.
///
/// Edges are stored with `i < j`, without duplicates, in insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Validates and builds a graph. Edges given as `(j, i)` are normalized to
    /// `(i, j)`. Connectivity is not required here; see [`Self::is_connected`].
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (a, b, w) in edges {
            let (i, j) = if a <= b { (a, b) } else { (b, a) };
            if i == j {
                return Err(Error::InvalidGraph(format!("self loop on node {i}")));
            }
            if j >= n {
                return Err(Error::InvalidGraph(format!("edge ({i}, {j}) out of range for n={n}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidGraph(format!("edge ({i}, {j}) has weight {w}")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
            out.push(Edge { i, j, w });
        }
        Ok(Self { n, edges: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn is_connected(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = self.n;
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components == 1
    }

    /// Cut value of an assignment given as one bool per node.
    pub fn cut_value(&self, z: &[bool]) -> Result<f64> {
        if z.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: z.len() });
        }
        Ok(self.edges.iter().filter(|e| z[e.i] != z[e.j]).map(|e| e.w).sum())
    }

    /// Cut value of the assignment whose bit `i` is node `i`.
    pub fn cut_value_of_index(&self, z: u64) -> f64 {
        self.edges
            .iter()
            .filter(|e| ((z >> e.i) ^ (z >> e.j)) & 1 == 1)
            .map(|e| e.w)
            .sum()
    }
}

/// An assignment together with its cut value.
///
/// `bits` uses the little-endian convention: bit `i` is node `i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutResult {
    pub n: usize,
    pub bits: u64,
    pub cut_value: f64,
}

impl CutResult {
    pub fn assignment(&self) -> Vec<bool> {
        (0..self.n).map(|i| (self.bits >> i) & 1 == 1).collect()
    }
}

impl fmt::Display for CutResult {
    /// Node 0 first, e.g. `010` for node 1 alone on one side.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            f.write_str(if (self.bits >> i) & 1 == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Flips every bit when node 0 is set, so both members of a cut pair map to
/// the same representative.
pub fn canonical(bits: u64, n: usize) -> u64 {
    if bits & 1 == 1 {
        !bits & mask(n)
    } else {
        bits
    }
}

pub(crate) fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Samples a connected weighted G(n, p_graph).
///
/// Each pair is kept with probability `p_graph` and weighted from U(0, 1) with
/// exact zeros rejected. Disconnected samples are redrawn from sub-seeds
/// `derive_seed(seed, attempt)`.
pub fn gen_erdos_renyi(n: usize, p_graph: f64, seed: u64) -> Result<WeightedGraph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2, got {n}")));
    }
    if !(p_graph > 0.0 && p_graph <= 1.0) {
        return Err(Error::InvalidParameter(format!("p_graph must be in (0, 1], got {p_graph}")));
    }
    for attempt in 0..MAX_CONNECT_RETRIES {
        let mut rng = rng(derive_seed(seed, attempt as u64));
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p_graph {
                    let w = loop {
                        let w: f64 = rng.random();
                        if w > 0.0 {
                            break w;
                        }
                    };
                    edges.push((i, j, w));
                }
            }
        }
        let g = WeightedGraph::new(n, edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::Disconnected { n, p_graph, retries: MAX_CONNECT_RETRIES })
}

/// Exhaustive MaxCut. Node 0 is pinned to side 0 and ties go to the lowest
/// assignment index.
pub fn brute_force_maxcut(g: &WeightedGraph) -> Result<CutResult> {
    if g.n > BRUTE_FORCE_CAP {
        return Err(Error::TooManyQubits { n: g.n, cap: BRUTE_FORCE_CAP });
    }
    let mut best = CutResult { n: g.n, bits: 0, cut_value: g.cut_value_of_index(0) };
    for half in 1..(1u64 << (g.n - 1)) {
        let z = half << 1;
        let v = g.cut_value_of_index(z);
        if v > best.cut_value {
            best = CutResult { n: g.n, bits: z, cut_value: v };
        }
    }
    Ok(best)
}

/// A graph plus the generator inputs that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub graph: WeightedGraph,
    pub seed: u64,
    pub p_graph: f64,
}

impl Instance {
    pub fn generate(n: usize, p_graph: f64, seed: u64) -> Result<Self> {
        Ok(Self { graph: gen_erdos_renyi(n, p_graph, seed)?, seed, p_graph })
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            n: self.graph.n,
            edges: self.graph.edges.iter().map(|e| (e.i, e.j, e.w)).collect(),
            seed: self.seed,
            p_graph: self.p_graph,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Loads an instance file. Disconnected graphs are rejected when
    /// `require_connected` is set.
    pub fn load(path: &Path, require_connected: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: InstanceFile = serde_json::from_str(&text)?;
        file.into_instance(require_connected)
    }
}

/// On-disk instance: `{"n": .., "edges": [[i, j, w], ..], "seed": .., "p_graph": ..}`.
///
/// serde_json writes the shortest decimal that round-trips, so weights reload
/// bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub seed: u64,
    pub p_graph: f64,
}

impl InstanceFile {
    pub fn into_instance(self, require_connected: bool) -> Result<Instance> {
        let graph = WeightedGraph::new(self.n, self.edges)?;
        if require_connected && !graph.is_connected() {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(Instance { graph, seed: self.seed, p_graph: self.p_graph })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn triangle() -> WeightedGraph {
        WeightedGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    #[test]
    fn triangle_cuts() {
        let g = triangle();
        assert_eq!(g.cut_value(&[false, false, false]).unwrap(), 0.0);
        // node order 0,1,2 -> "001" puts node 2 alone
        assert_eq!(g.cut_value(&[false, false, true]).unwrap(), 2.0);
        assert!(matches!(
            g.cut_value(&[false, true]),
            Err(Error::LengthMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn brute_force_small_graphs() {
        assert_eq!(brute_force_maxcut(&triangle()).unwrap().cut_value, 2.0);

        let edge = WeightedGraph::new(2, [(0, 1, 0.37)]).unwrap();
        assert_eq!(brute_force_maxcut(&edge).unwrap().cut_value, 0.37);

        let path = WeightedGraph::new(3, [(0, 1, 0.3), (1, 2, 0.9)]).unwrap();
        let best = brute_force_maxcut(&path).unwrap();
        assert!((best.cut_value - 1.2).abs() < 1e-15);
        assert_eq!(best.to_string(), "010");
        assert_eq!(best.bits, 0b010);
    }

    #[test]
    fn brute_force_guard() {
        let g = WeightedGraph::new(25, [(0, 1, 1.0)]).unwrap();
        assert!(matches!(brute_force_maxcut(&g), Err(Error::TooManyQubits { .. })));
    }

    #[test]
    fn generator_edge_counts() {
        let g = gen_erdos_renyi(2, 1.0, 11).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert_eq!((g.edges()[0].i, g.edges()[0].j), (0, 1));
        let w = g.edges()[0].w;
        assert!(w > 0.0 && w < 1.0);

        assert_eq!(gen_erdos_renyi(5, 1.0, 3).unwrap().edges().len(), 10);
    }

    #[test]
    fn generator_rejects_bad_inputs() {
        assert!(gen_erdos_renyi(1, 0.5, 0).is_err());
        assert!(gen_erdos_renyi(8, 0.0, 0).is_err());
        assert!(gen_erdos_renyi(8, 1.5, 0).is_err());
        // 40 nodes at this density are essentially never connected
        assert!(matches!(gen_erdos_renyi(40, 0.001, 0), Err(Error::Disconnected { .. })));
    }

    #[test]
    fn generator_benchmark_sizes_are_connected() {
        for &n in &[8, 12] {
            for &p in &[0.5, 0.75, 1.0] {
                for seed in 0..5 {
                    let g = gen_erdos_renyi(n, p, seed).unwrap();
                    assert!(g.is_connected());
                    assert!(g.edges().iter().all(|e| e.i < e.j && e.j < n && e.w > 0.0 && e.w < 1.0));
                }
            }
        }
    }

    #[test]
    fn graph_validation() {
        assert!(WeightedGraph::new(3, [(0, 0, 1.0)]).is_err());
        assert!(WeightedGraph::new(3, [(0, 3, 1.0)]).is_err());
        assert!(WeightedGraph::new(3, [(0, 1, 0.0)]).is_err());
        assert!(WeightedGraph::new(3, [(0, 1, f64::NAN)]).is_err());
        assert!(WeightedGraph::new(3, [(0, 1, 1.0), (1, 0, 2.0)]).is_err());
        let g = WeightedGraph::new(3, [(2, 1, 1.0)]).unwrap();
        assert_eq!((g.edges()[0].i, g.edges()[0].j), (1, 2));
        assert!(!g.is_connected());
    }

    #[test]
    fn instance_file_round_trip() {
        let inst = Instance::generate(8, 0.75, 42).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        inst.save(&path).unwrap();
        let back = Instance::load(&path, true).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn loader_connectivity_check() {
        let file = InstanceFile { n: 3, edges: vec![(0, 1, 0.5)], seed: 0, p_graph: 0.5 };
        assert!(file.clone().into_instance(true).is_err());
        assert!(file.into_instance(false).is_ok());
    }

    proptest! {
        #[test]
        fn cut_symmetric_and_bounded(seed in 0u64..500, z in 0u64..256) {
            let g = gen_erdos_renyi(8, 0.6, seed).unwrap();
            let v = g.cut_value_of_index(z);
            let flipped = g.cut_value_of_index(!z & 0xff);
            prop_assert_eq!(v, flipped);
            prop_assert!(v >= 0.0 && v <= g.total_weight() + 1e-12);
            let bools: Vec<bool> = (0..8).map(|i| (z >> i) & 1 == 1).collect();
            prop_assert_eq!(g.cut_value(&bools).unwrap(), v);
        }

        #[test]
        fn brute_force_dominates(seed in 0u64..200, z in 0u64..1024) {
            let g = gen_erdos_renyi(10, 0.5, seed).unwrap();
            let best = brute_force_maxcut(&g).unwrap();
            prop_assert!(best.cut_value >= g.cut_value_of_index(z));
            prop_assert_eq!(best.bits & 1, 0);
        }

        #[test]
        fn generator_reproducible(seed in any::<u64>(), p in 0.3f64..=1.0) {
            let a = gen_erdos_renyi(8, p, seed).unwrap();
            let b = gen_erdos_renyi(8, p, seed).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
