//! Canonical weighted hypergraphs.
//!
//! Hyperedges are stored sorted lexicographically by node list, with strictly
//! increasing node indices and merged duplicates. The node-by-hyperedge incidence
//! structure is kept in both orientations so that per-hyperedge sums
//! (`Bᵀu`) and per-node accumulations (`B x`) are single linear passes.

mod io;
mod normalizer;

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub use io::{load_hyperedge_list, parse_hyperedge_list, write_hyperedge_list};
pub use normalizer::{
    constant_c, constant_c_prime, kappa, ln_binom, log_kappa, ModelConstants,
};

/// Sparse 0/1 node-by-hyperedge incidence matrix, stored column-major
/// (hyperedge → nodes) and row-major (node → hyperedges).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incidence {
    edge_offsets: Vec<usize>,
    edge_nodes: Vec<usize>,
    node_offsets: Vec<usize>,
    node_edges: Vec<usize>,
}

impl Incidence {
    fn build(num_nodes: usize, edges: &[Vec<usize>]) -> Self {
        let mut edge_offsets = Vec::with_capacity(edges.len() + 1);
        let mut edge_nodes = Vec::with_capacity(edges.iter().map(Vec::len).sum());
        let mut counts = vec![0usize; num_nodes];
        edge_offsets.push(0);
        for e in edges {
            edge_nodes.extend_from_slice(e);
            edge_offsets.push(edge_nodes.len());
            for &i in e {
                counts[i] += 1;
            }
        }
        let mut node_offsets = Vec::with_capacity(num_nodes + 1);
        node_offsets.push(0);
        for c in &counts {
            node_offsets.push(node_offsets.last().unwrap() + c);
        }
        let mut cursor = node_offsets[..num_nodes].to_vec();
        let mut node_edges = vec![0usize; edge_nodes.len()];
        for (e, nodes) in edges.iter().enumerate() {
            for &i in nodes {
                node_edges[cursor[i]] = e;
                cursor[i] += 1;
            }
        }
        Self {
            edge_offsets,
            edge_nodes,
            node_offsets,
            node_edges,
        }
    }

    /// Nodes of hyperedge `e` (column `e` of B), strictly increasing.
    pub fn column(&self, e: usize) -> &[usize] {
        &self.edge_nodes[self.edge_offsets[e]..self.edge_offsets[e + 1]]
    }

    /// Hyperedges containing node `i` (row `i` of B), increasing.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.node_edges[self.node_offsets[i]..self.node_offsets[i + 1]]
    }

    pub fn nnz(&self) -> usize {
        self.edge_nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    num_nodes: usize,
    max_size: usize,
    weights: Vec<u64>,
    incidence: Incidence,
}

impl Hypergraph {
    /// Builds a canonical hypergraph. Node lists may be unordered; duplicates are
    /// merged by summing weights. `num_nodes` defaults to one past the largest index.
    pub fn from_edges<I>(num_nodes: Option<usize>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, u64)>,
    {
        let mut merged: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
        let mut max_index = None::<usize>;
        for (mut nodes, weight) in edges {
            if weight == 0 {
                return Err(Error::InvalidHypergraph(format!(
                    "hyperedge {nodes:?} has zero weight"
                )));
            }
            nodes.sort_unstable();
            if nodes.windows(2).any(|p| p[0] == p[1]) {
                return Err(Error::InvalidHypergraph(format!(
                    "hyperedge {nodes:?} repeats a node"
                )));
            }
            if nodes.len() < 2 {
                return Err(Error::InvalidHypergraph(format!(
                    "hyperedge {nodes:?} has fewer than 2 nodes"
                )));
            }
            let last = *nodes.last().unwrap();
            max_index = Some(max_index.map_or(last, |m| m.max(last)));
            let slot = merged.entry(nodes).or_insert(0);
            *slot = slot.checked_add(weight).ok_or_else(|| {
                Error::InvalidHypergraph("hyperedge weight overflow".to_string())
            })?;
        }
        let inferred = max_index.map_or(0, |m| m + 1);
        let num_nodes = match num_nodes {
            Some(n) if n < inferred => {
                return Err(Error::InvalidHypergraph(format!(
                    "declared {n} nodes but index {} occurs",
                    inferred - 1
                )))
            }
            Some(n) => n,
            None => inferred,
        };
        if num_nodes == 0 {
            return Err(Error::InvalidHypergraph("no nodes".to_string()));
        }
        let (edges, weights): (Vec<Vec<usize>>, Vec<u64>) = merged.into_iter().unzip();
        let max_size = edges.iter().map(Vec::len).max().unwrap_or(2);
        let incidence = Incidence::build(num_nodes, &edges);
        Ok(Self {
            num_nodes,
            max_size,
            weights,
            incidence,
        })
    }

    /// Raises the maximum hyperedge size `D` used by the model constants.
    pub fn with_max_size(mut self, max_size: usize) -> Result<Self> {
        let observed = self.observed_max_size();
        if max_size < observed.max(2) {
            return Err(Error::Domain(format!(
                "maximum size {max_size} below observed size {observed}"
            )));
        }
        if max_size > self.num_nodes {
            return Err(Error::Domain(format!(
                "maximum size {max_size} exceeds node count {}",
                self.num_nodes
            )));
        }
        self.max_size = max_size;
        Ok(self)
    }

    /// Keeps only hyperedges with at most `max_size` nodes and sets `D = max_size`.
    pub fn truncate_to_size(&self, max_size: usize) -> Result<Self> {
        if max_size < 2 || max_size > self.num_nodes {
            return Err(Error::Domain(format!(
                "maximum size {max_size} outside [2, {}]",
                self.num_nodes
            )));
        }
        let kept = self
            .iter()
            .filter(|(e, _)| e.len() <= max_size)
            .map(|(e, a)| (e.to_vec(), a));
        let mut h = Hypergraph::from_edges(Some(self.num_nodes), kept)?;
        h.max_size = max_size;
        Ok(h)
    }

    /// Sub-hypergraph on the given hyperedge indices; keeps `N` and `D`.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let kept = indices.iter().map(|&e| (self.edge(e).to_vec(), self.weight(e)));
        let mut h = Hypergraph::from_edges(Some(self.num_nodes), kept)?;
        h.max_size = self.max_size;
        Ok(h)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// The model's maximum hyperedge size `D`.
    pub fn max_size(&self) -> usize {
        self.max_size
    }

    /// Largest stored hyperedge cardinality (0 for an empty hypergraph).
    pub fn observed_max_size(&self) -> usize {
        (0..self.num_edges()).map(|e| self.edge(e).len()).max().unwrap_or(0)
    }

    pub fn edge(&self, e: usize) -> &[usize] {
        self.incidence.column(e)
    }

    pub fn weight(&self, e: usize) -> u64 {
        self.weights[e]
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn incidence(&self) -> &Incidence {
        &self.incidence
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], u64)> + '_ {
        (0..self.num_edges()).map(move |e| (self.edge(e), self.weights[e]))
    }

    /// Position of the hyperedge with exactly these (sorted) nodes.
    pub fn find(&self, nodes: &[usize]) -> Option<usize> {
        // edges are stored in lexicographic order
        let mut lo = 0;
        let mut hi = self.num_edges();
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.edge(mid).cmp(nodes) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains(&self, nodes: &[usize]) -> bool {
        self.find(nodes).is_some()
    }

    /// Weighted degrees `d_i = Σ_{e∋i} A_e`.
    pub fn degree_sequence(&self) -> Vec<u64> {
        (0..self.num_nodes)
            .map(|i| self.incidence.row(i).iter().map(|&e| self.weights[e]).sum())
            .collect()
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    /// Number of stored hyperedges of each size, indexed by size.
    pub fn size_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0usize; self.observed_max_size() + 1];
        for e in 0..self.num_edges() {
            hist[self.edge(e).len()] += 1;
        }
        hist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Hypergraph {
        Hypergraph::from_edges(None, vec![(vec![0, 1], 1), (vec![2, 1, 0], 1)]).unwrap()
    }

    #[test]
    fn canonical_structure() {
        let h = toy();
        assert_eq!(h.num_nodes(), 3);
        assert_eq!(h.num_edges(), 2);
        assert_eq!(h.max_size(), 3);
        assert_eq!(h.edge(1), &[0, 1, 2]);
        assert_eq!(h.incidence().row(2), &[1]);
        assert_eq!(h.incidence().row(0), &[0, 1]);
        assert_eq!(h.incidence().nnz(), 5);
        assert_eq!(h.find(&[0, 1, 2]), Some(1));
        assert!(!h.contains(&[1, 2]));
    }

    #[test]
    fn duplicates_merge() {
        let h = Hypergraph::from_edges(None, vec![(vec![0, 1], 1), (vec![1, 0], 1)]).unwrap();
        assert_eq!(h.num_edges(), 1);
        assert_eq!(h.weight(0), 2);
    }

    #[test]
    fn rejects_invalid_edges() {
        assert!(Hypergraph::from_edges(None, vec![(vec![0, 1, 1], 1)]).is_err());
        assert!(Hypergraph::from_edges(None, vec![(vec![3], 1)]).is_err());
        assert!(Hypergraph::from_edges(None, vec![(vec![0, 1], 0)]).is_err());
        assert!(Hypergraph::from_edges(Some(2), vec![(vec![0, 2], 1)]).is_err());
    }

    #[test]
    fn degree_examples() {
        assert_eq!(toy().degree_sequence(), vec![2, 2, 1]);
        let h = Hypergraph::from_edges(None, vec![(vec![0, 1], 5)]).unwrap();
        assert_eq!(h.degree_sequence(), vec![5, 5]);
        let empty = Hypergraph::from_edges(Some(4), Vec::new()).unwrap();
        assert_eq!(empty.degree_sequence(), vec![0; 4]);
    }

    #[test]
    fn max_size_override_and_truncation() {
        let h = toy().with_max_size(3).unwrap();
        assert_eq!(h.max_size(), 3);
        assert!(toy().with_max_size(2).is_err());
        assert!(toy().with_max_size(4).is_err());
        let t = toy().truncate_to_size(2).unwrap();
        assert_eq!(t.num_edges(), 1);
        assert_eq!(t.max_size(), 2);
        assert_eq!(t.num_nodes(), 3);
    }

    #[test]
    fn size_histogram_counts() {
        assert_eq!(toy().size_histogram(), vec![0, 0, 1, 1]);
    }
}
