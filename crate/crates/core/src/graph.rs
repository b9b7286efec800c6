//! Interaction graphs for the two-spin random ensemble.
//!
//! A graph `G = (V, E)` carries one spin-1/2 per vertex and a two-body
//! coupling per edge. The strength functions `mu` (per edge) and `lambda`
//! (per vertex) set the average magnitude of bond and field terms. Vertices
//! are 1-based throughout the public API.
//!
//! The topological data of a connected graph fixes the parameter count of a
//! gauge-canonical form: with `N` vertices, `M` edges and cycle rank
//! `L = M - N + 1`, the orbit representative has `K = 6M + 3N + 3L - 3`
//! free parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TsreError};

/// Undirected interaction graph with bond/field strength functions.
///
/// Invariants (enforced at construction): no self-loops, no duplicate
/// edges, all vertices in `1..=n`, connected, `mu` defined per edge and
/// `lambda` per vertex, all strengths finite and non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionGraph {
    n: usize,
    /// Normalized `(min, max)` pairs, sorted lexicographically.
    edges: Vec<(usize, usize)>,
    /// Average bond strength, parallel to `edges`.
    mu: Vec<f64>,
    /// Average field strength, `lambda[j-1]` for vertex `j`.
    lambda: Vec<f64>,
}

/// Vertex/edge counts and the derived topological invariants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub n_vertices: usize,
    pub n_edges: usize,
    /// First Betti number `L = M - N + 1` of the connected graph.
    pub cycle_rank: usize,
    /// Canonical-form parameter count `K = 6M + 3N + 3L - 3`.
    pub parameter_count: usize,
}

impl InteractionGraph {
    /// Builds a graph from an explicit edge list with per-edge and per-vertex
    /// strengths. Edges may be given in either orientation.
    pub fn new(n: usize, edges: &[(usize, usize)], mu: &[f64], lambda: &[f64]) -> Result<Self> {
        if n == 0 {
            return Err(TsreError::InvalidSize("graph needs at least one vertex".into()));
        }
        if mu.len() != edges.len() {
            return Err(TsreError::InvalidStrength(format!(
                "mu has {} entries for {} edges",
                mu.len(),
                edges.len()
            )));
        }
        if lambda.len() != n {
            return Err(TsreError::InvalidStrength(format!(
                "lambda has {} entries for {} vertices",
                lambda.len(),
                n
            )));
        }
        for &s in mu.iter().chain(lambda.iter()) {
            if !s.is_finite() || s < 0.0 {
                return Err(TsreError::InvalidStrength(format!(
                    "strengths must be finite and non-negative, got {s}"
                )));
            }
        }

        let mut keyed: Vec<((usize, usize), f64)> = Vec::with_capacity(edges.len());
        for (&(j, k), &m) in edges.iter().zip(mu.iter()) {
            if j == k {
                return Err(TsreError::InvalidGraph(format!("self-loop at vertex {j}")));
            }
            if j < 1 || j > n || k < 1 || k > n {
                return Err(TsreError::InvalidGraph(format!(
                    "edge ({j},{k}) outside vertex range 1..={n}"
                )));
            }
            keyed.push(((j.min(k), j.max(k)), m));
        }
        keyed.sort_by_key(|&(e, _)| e);
        for w in keyed.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(TsreError::InvalidGraph(format!(
                    "duplicate edge ({},{})",
                    w[0].0 .0, w[0].0 .1
                )));
            }
        }

        let g = Self {
            n,
            edges: keyed.iter().map(|&(e, _)| e).collect(),
            mu: keyed.iter().map(|&(_, m)| m).collect(),
            lambda: lambda.to_vec(),
        };
        if !g.is_connected() {
            return Err(TsreError::Disconnected);
        }
        Ok(g)
    }

    /// Open chain `1 - 2 - ... - N` with constant strengths. Requires `N >= 2`.
    pub fn build_chain(n: usize, mu_const: f64, lambda_const: f64) -> Result<Self> {
        if n < 2 {
            return Err(TsreError::InvalidSize(format!(
                "a chain needs at least 2 vertices, got {n}"
            )));
        }
        let edges: Vec<(usize, usize)> = (1..n).map(|j| (j, j + 1)).collect();
        Self::new(n, &edges, &vec![mu_const; n - 1], &vec![lambda_const; n])
    }

    /// Ring: the chain plus the closing edge `(N, 1)`. Requires `N >= 3`.
    pub fn build_ring(n: usize, mu_const: f64, lambda_const: f64) -> Result<Self> {
        if n < 3 {
            return Err(TsreError::InvalidSize(format!(
                "a ring needs at least 3 vertices, got {n}"
            )));
        }
        let mut edges: Vec<(usize, usize)> = (1..n).map(|j| (j, j + 1)).collect();
        edges.push((n, 1));
        Self::new(n, &edges, &vec![mu_const; n], &vec![lambda_const; n])
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as normalized `(min, max)` pairs in lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Average bond strength of the edge at index `idx` of [`edges`](Self::edges).
    pub fn mu_at(&self, idx: usize) -> f64 {
        self.mu[idx]
    }

    /// Average field strength at vertex `j` (1-based).
    pub fn lambda_at(&self, j: usize) -> f64 {
        self.lambda[j - 1]
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    /// Number of independent (primitive) cycles, `L = M - N + 1`.
    pub fn cycle_rank(&self) -> usize {
        // Connectivity is a construction invariant, so the first Betti
        // number reduces to M - N + 1.
        self.edges.len() + 1 - self.n
    }

    /// Canonical-form parameter count `K = 6M + 3N + 3L - 3`.
    pub fn parameter_count(&self) -> usize {
        6 * self.edges.len() + 3 * self.n + 3 * self.cycle_rank() - 3
    }

    pub fn topology_report(&self) -> TopologyReport {
        TopologyReport {
            n_vertices: self.n,
            n_edges: self.edges.len(),
            cycle_rank: self.cycle_rank(),
            parameter_count: self.parameter_count(),
        }
    }

    /// True if the edge set is exactly `{(j, j+1)}` for `j = 1..N-1`.
    pub fn is_chain(&self) -> bool {
        self.n >= 2
            && self.edges.len() == self.n - 1
            && self.edges.iter().enumerate().all(|(i, &e)| e == (i + 1, i + 2))
    }

    /// True if the edge set is the chain plus the closing edge `(1, N)`.
    pub fn is_ring(&self) -> bool {
        if self.n < 3 || self.edges.len() != self.n {
            return false;
        }
        let mut expect: Vec<(usize, usize)> = (1..self.n).map(|j| (j, j + 1)).collect();
        expect.push((1, self.n));
        expect.sort_unstable();
        self.edges == expect
    }

    pub fn is_tree(&self) -> bool {
        self.cycle_rank() == 0
    }

    /// Neighbors of vertex `j` in ascending order, paired with the index of
    /// the connecting edge in [`edges`](Self::edges).
    pub fn neighbors(&self, j: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (idx, &(a, b)) in self.edges.iter().enumerate() {
            if a == j {
                out.push((b, idx));
            } else if b == j {
                out.push((a, idx));
            }
        }
        out.sort_unstable();
        out
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n + 1];
        let mut stack = vec![1usize];
        seen[1] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(a, b) in &self.edges {
                let w = if a == v {
                    b
                } else if b == v {
                    a
                } else {
                    continue;
                };
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }
}

/// JSON graph configuration accepted by the CLI and the sweep harness.
///
/// ```json
/// { "type": "chain", "n": 8, "mu": 1.0, "lambda": 0.5 }
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphConfig {
    #[serde(rename = "type")]
    pub kind: GraphKind,
    pub n: usize,
    #[serde(default = "StrengthSpec::unit")]
    pub mu: StrengthSpec,
    #[serde(default = "StrengthSpec::unit")]
    pub lambda: StrengthSpec,
    /// Edge list, `custom` graphs only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Chain,
    Ring,
    Custom,
}

/// A constant strength or an explicit per-element list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrengthSpec {
    Uniform(f64),
    PerElement(Vec<f64>),
}

impl StrengthSpec {
    fn unit() -> Self {
        StrengthSpec::Uniform(1.0)
    }

    fn resolve(&self, count: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            StrengthSpec::Uniform(v) => Ok(vec![*v; count]),
            StrengthSpec::PerElement(vs) => {
                if vs.len() != count {
                    Err(TsreError::InvalidStrength(format!(
                        "{what} list has {} entries, expected {count}",
                        vs.len()
                    )))
                } else {
                    Ok(vs.clone())
                }
            }
        }
    }
}

impl GraphConfig {
    /// Shorthand for a constant-strength chain config.
    pub fn chain(n: usize, mu: f64, lambda: f64) -> Self {
        Self {
            kind: GraphKind::Chain,
            n,
            mu: StrengthSpec::Uniform(mu),
            lambda: StrengthSpec::Uniform(lambda),
            edges: None,
        }
    }

    /// Shorthand for a constant-strength ring config.
    pub fn ring(n: usize, mu: f64, lambda: f64) -> Self {
        Self {
            kind: GraphKind::Ring,
            n,
            mu: StrengthSpec::Uniform(mu),
            lambda: StrengthSpec::Uniform(lambda),
            edges: None,
        }
    }

    pub fn build(&self) -> Result<InteractionGraph> {
        match self.kind {
            GraphKind::Chain => {
                if self.n < 2 {
                    return Err(TsreError::InvalidSize(format!(
                        "a chain needs at least 2 vertices, got {}",
                        self.n
                    )));
                }
                let edges: Vec<(usize, usize)> = (1..self.n).map(|j| (j, j + 1)).collect();
                InteractionGraph::new(
                    self.n,
                    &edges,
                    &self.mu.resolve(edges.len(), "mu")?,
                    &self.lambda.resolve(self.n, "lambda")?,
                )
            }
            GraphKind::Ring => {
                if self.n < 3 {
                    return Err(TsreError::InvalidSize(format!(
                        "a ring needs at least 3 vertices, got {}",
                        self.n
                    )));
                }
                let mut edges: Vec<(usize, usize)> = (1..self.n).map(|j| (j, j + 1)).collect();
                edges.push((self.n, 1));
                InteractionGraph::new(
                    self.n,
                    &edges,
                    &self.mu.resolve(edges.len(), "mu")?,
                    &self.lambda.resolve(self.n, "lambda")?,
                )
            }
            GraphKind::Custom => {
                let edges = self.edges.as_ref().ok_or_else(|| {
                    TsreError::InvalidGraph("custom graph config needs an edge list".into())
                })?;
                InteractionGraph::new(
                    self.n,
                    edges,
                    &self.mu.resolve(edges.len(), "mu")?,
                    &self.lambda.resolve(self.n, "lambda")?,
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_has_consecutive_edges() {
        let g = InteractionGraph::build_chain(4, 1.0, 0.5).unwrap();
        assert_eq!(g.edges(), &[(1, 2), (2, 3), (3, 4)]);
        assert!(g.is_chain());
        assert!(!g.is_ring());
        assert_eq!(g.lambda_at(2), 0.5);
    }

    #[test]
    fn chain_of_two_has_one_edge() {
        let g = InteractionGraph::build_chain(2, 1.0, 0.0).unwrap();
        assert_eq!(g.edges(), &[(1, 2)]);
    }

    #[test]
    fn chain_of_one_is_rejected() {
        assert!(matches!(
            InteractionGraph::build_chain(1, 1.0, 0.0),
            Err(TsreError::InvalidSize(_))
        ));
    }

    #[test]
    fn ring_of_three() {
        let g = InteractionGraph::build_ring(3, 1.0, 1.0).unwrap();
        assert_eq!(g.edges(), &[(1, 2), (1, 3), (2, 3)]);
        assert!(g.is_ring());
    }

    #[test]
    fn ring_of_six_counts() {
        let g = InteractionGraph::build_ring(6, 1.0, 1.0).unwrap();
        assert_eq!(g.n_edges(), 6);
        assert_eq!(g.cycle_rank(), 1);
    }

    #[test]
    fn ring_of_two_is_rejected() {
        assert!(InteractionGraph::build_ring(2, 1.0, 1.0).is_err());
    }

    #[test]
    fn chain_cycle_rank_zero() {
        let g = InteractionGraph::build_chain(10, 1.0, 0.0).unwrap();
        assert_eq!(g.cycle_rank(), 0);
        assert!(g.is_tree());
    }

    #[test]
    fn ring_cycle_rank_one() {
        let g = InteractionGraph::build_ring(10, 1.0, 0.0).unwrap();
        assert_eq!(g.cycle_rank(), 1);
    }

    /// Independent cycle-rank oracle: dimension of the GF(2) cycle space,
    /// `M - rank(incidence matrix)`, computed by elimination.
    fn cycle_space_dimension(n: usize, edges: &[(usize, usize)]) -> usize {
        let mut rows: Vec<u64> = edges
            .iter()
            .map(|&(j, k)| (1u64 << (j - 1)) | (1u64 << (k - 1)))
            .collect();
        let mut rank = 0;
        for col in 0..n {
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r] >> col & 1 == 1) else {
                continue;
            };
            rows.swap(rank, pivot);
            for r in 0..rows.len() {
                if r != rank && rows[r] >> col & 1 == 1 {
                    rows[r] ^= rows[rank];
                }
            }
            rank += 1;
        }
        edges.len() - rank
    }

    #[test]
    fn complete_graph_on_four_vertices_has_rank_three() {
        let edges = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];
        let g = InteractionGraph::new(4, &edges, &[1.0; 6], &[0.0; 4]).unwrap();
        assert_eq!(g.cycle_rank(), 3);
        assert_eq!(cycle_space_dimension(4, &edges), 3);
    }

    #[test]
    fn cycle_rank_matches_gf2_cycle_space_on_assorted_graphs() {
        let cases: Vec<(usize, Vec<(usize, usize)>)> = vec![
            (5, vec![(1, 2), (2, 3), (3, 4), (4, 5)]),
            (5, vec![(1, 2), (2, 3), (3, 4), (4, 5), (5, 1)]),
            (6, vec![(1, 2), (2, 3), (3, 1), (3, 4), (4, 5), (5, 6), (6, 4)]),
            (4, vec![(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]),
        ];
        for (n, edges) in cases {
            let g =
                InteractionGraph::new(n, &edges, &vec![1.0; edges.len()], &vec![0.0; n]).unwrap();
            assert_eq!(g.cycle_rank(), cycle_space_dimension(n, &edges));
        }
    }

    #[test]
    fn parameter_count_chain_and_ring_forms() {
        // chain: K = 6M - 3 + 3N; ring: K = 6M + 3N
        for n in 2..=12 {
            let g = InteractionGraph::build_chain(n, 1.0, 1.0).unwrap();
            assert_eq!(g.parameter_count(), 6 * g.n_edges() - 3 + 3 * n);
        }
        for n in 3..=12 {
            let g = InteractionGraph::build_ring(n, 1.0, 1.0).unwrap();
            assert_eq!(g.parameter_count(), 6 * g.n_edges() + 3 * n);
        }
    }

    #[test]
    fn parameter_count_chain_of_two_is_nine() {
        let g = InteractionGraph::build_chain(2, 1.0, 1.0).unwrap();
        assert_eq!(g.parameter_count(), 9);
    }

    #[test]
    fn canonical_count_is_raw_count_minus_gauge_dimension() {
        // Raw 9M+3N parameters minus the 3N-dimensional gauge action leaves
        // 9M for every connected graph; with L = M-N+1 the spec formula
        // 6M+3N+3L-3 collapses to exactly that.
        for n in 3..=10 {
            for g in [
                InteractionGraph::build_chain(n, 1.0, 1.0).unwrap(),
                InteractionGraph::build_ring(n, 1.0, 1.0).unwrap(),
            ] {
                let m = g.n_edges();
                assert_eq!(g.parameter_count(), (9 * m + 3 * n) - 3 * n);
            }
        }
    }

    #[test]
    fn chain_plus_closing_edge_matches_ring_report() {
        for n in 3..=8 {
            let mut edges: Vec<(usize, usize)> = (1..n).map(|j| (j, j + 1)).collect();
            edges.push((n, 1));
            let built = InteractionGraph::new(n, &edges, &vec![1.0; n], &vec![1.0; n]).unwrap();
            let ring = InteractionGraph::build_ring(n, 1.0, 1.0).unwrap();
            assert_eq!(built.topology_report(), ring.topology_report());
        }
    }

    #[test]
    fn two_triangles_sharing_a_vertex_add_cycle_ranks() {
        let edges = [(1, 2), (2, 3), (3, 1), (1, 4), (4, 5), (5, 1)];
        let g = InteractionGraph::new(5, &edges, &[1.0; 6], &[0.0; 5]).unwrap();
        assert_eq!(g.cycle_rank(), 2);
    }

    #[test]
    fn rejects_self_loop_duplicate_and_disconnected() {
        assert!(InteractionGraph::new(3, &[(1, 1), (2, 3)], &[1.0; 2], &[0.0; 3]).is_err());
        assert!(InteractionGraph::new(3, &[(1, 2), (2, 1), (2, 3)], &[1.0; 3], &[0.0; 3]).is_err());
        assert!(matches!(
            InteractionGraph::new(4, &[(1, 2), (3, 4)], &[1.0; 2], &[0.0; 4]),
            Err(TsreError::Disconnected)
        ));
    }

    #[test]
    fn rejects_negative_strengths() {
        assert!(InteractionGraph::build_chain(3, -1.0, 0.0).is_err());
        assert!(InteractionGraph::build_chain(3, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn graph_config_round_trip() {
        let cfg: GraphConfig = serde_json::from_str(
            r#"{ "type": "chain", "n": 4, "mu": 1.0, "lambda": [0.0, 0.1, 0.2, 0.3] }"#,
        )
        .unwrap();
        let g = cfg.build().unwrap();
        assert!(g.is_chain());
        assert_eq!(g.lambda_at(3), 0.2);

        let cfg: GraphConfig = serde_json::from_str(
            r#"{ "type": "custom", "n": 4, "edges": [[1,2],[2,3],[3,4],[4,1],[1,3]] }"#,
        )
        .unwrap();
        assert_eq!(cfg.build().unwrap().cycle_rank(), 2);

        let bad: GraphConfig = serde_json::from_str(r#"{ "type": "custom", "n": 3 }"#).unwrap();
        assert!(bad.build().is_err());
    }
}
