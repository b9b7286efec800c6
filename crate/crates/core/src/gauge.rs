//! Local SO(3) gauge action and canonical (orbit-representative) forms.
//!
//! Rotating every spin's coordinate frame by its own `O_j` maps a sample to
//! a physically equivalent one:
//!
//! ```text
//! A^(j,k) -> O_j^T A^(j,k) O_k,      b^(j) -> O_j^T b^(j)
//! ```
//!
//! The orbit of a generic sample under this action has a distinguished
//! representative. For a chain, propagating `O_{j+1} = R_j O_j` with
//! `R_j = V U^T` from the SVD `A^(j,j+1) = U D V^T` makes every transformed
//! bond symmetric, and the free choice `O_1 = U^(1,2)` diagonalizes the
//! first bond. Trees work the same way along a rooted traversal. On a ring
//! the loop closes on one designated bond, which instead factors as a
//! symmetric matrix times a leftover "topological" rotation.
//!
//! Uniqueness of the representative requires non-degenerate singular values
//! on every bond; degenerate inputs are still canonicalized but flagged.

use nalgebra::{Matrix3, Vector3};


use crate::ensemble::{BondMatrix, TsreSample};
use crate::error::{Result, TsreError};

/// Orthogonality / unit-determinant tolerance for rotation inputs.
const ROTATION_TOL: f64 = 1e-12;
/// Relative singular-value separation below which a bond is flagged.
const DEGENERACY_TOL: f64 = 1e-9;

/// One rotation per vertex, `rotations[j-1]` acting on the frame of spin `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRotationSet {
    pub rotations: Vec<Matrix3<f64>>,
}

impl LocalRotationSet {
    pub fn identity(n: usize) -> Self {
        Self {
            rotations: vec![Matrix3::identity(); n],
        }
    }

    /// Validates that every matrix is orthogonal with determinant +1.
    pub fn new(rotations: Vec<Matrix3<f64>>) -> Result<Self> {
        for (j, o) in rotations.iter().enumerate() {
            let ortho = (o.transpose() * o - Matrix3::identity()).abs().max();
            if ortho > ROTATION_TOL {
                return Err(TsreError::InvalidRotation(format!(
                    "matrix for vertex {} deviates from orthogonality by {ortho:.3e}",
                    j + 1
                )));
            }
            let det = o.determinant();
            if (det - 1.0).abs() > ROTATION_TOL {
                return Err(TsreError::InvalidRotation(format!(
                    "matrix for vertex {} has determinant {det}",
                    j + 1
                )));
            }
        }
        Ok(Self { rotations })
    }

    /// Haar-ish random rotations (normalized quaternions from a keyed
    /// Gaussian stream), reproducible per `(seed, tag)`.
    pub fn random(n: usize, seed: u64, tag: u64) -> Self {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut rng = crate::ensemble::element_rng(seed, tag, 0x3000_0000);
        let rotations = (0..n)
            .map(|_| {
                let q = nalgebra::Quaternion::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                );
                nalgebra::UnitQuaternion::from_quaternion(q)
                    .to_rotation_matrix()
                    .into_inner()
            })
            .collect();
        Self { rotations }
    }
}

/// Gauge-transforms a sample: `A -> O_j^T A O_k` on every edge `(j,k)` and
/// `b -> O_j^T b` on every vertex. Leaves the spectrum and all entanglement
/// data of the Hamiltonian unchanged.
pub fn apply_gauge(s: &TsreSample, o: &LocalRotationSet) -> Result<TsreSample> {
    if o.rotations.len() != s.graph.n_vertices() {
        return Err(TsreError::InvalidRotation(format!(
            "rotation set covers {} vertices, graph has {}",
            o.rotations.len(),
            s.graph.n_vertices()
        )));
    }
    // Re-validate: callers may have constructed the set directly.
    let o = LocalRotationSet::new(o.rotations.clone())?;
    let bonds = s
        .graph
        .edges()
        .iter()
        .zip(s.bonds.iter())
        .map(|(&(j, k), a)| o.rotations[j - 1].transpose() * a * o.rotations[k - 1])
        .collect();
    let fields = s
        .fields
        .iter()
        .enumerate()
        .map(|(i, b)| o.rotations[i].transpose() * b)
        .collect();
    Ok(TsreSample {
        graph: s.graph.clone(),
        bonds,
        fields,
        seed: s.seed,
        realization_index: s.realization_index,
    })
}

/// SO(3)-constrained singular value decomposition `a = U diag(d) V^T` with
/// `det U = det V = +1`, `|d1| >= |d2| >= |d3|`, and at most `d3` negative
/// carrying `sign(det a)`.
pub fn svd_so3(a: &BondMatrix) -> (Matrix3<f64>, Vector3<f64>, Matrix3<f64>) {
    let svd = a.svd(true, true);
    let u0 = svd.u.unwrap();
    let v0 = svd.v_t.unwrap().transpose();
    let s = svd.singular_values;

    // descending by magnitude (plain SVD values are non-negative)
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap());
    let mut d = Vector3::new(s[order[0]], s[order[1]], s[order[2]]);
    let mut u = Matrix3::zeros();
    let mut v = Matrix3::zeros();
    for (new_col, &old_col) in order.iter().enumerate() {
        u.set_column(new_col, &u0.column(old_col));
        v.set_column(new_col, &v0.column(old_col));
    }

    // restore det = +1 on both factors, pushing any leftover sign into d3
    if u.determinant() < 0.0 {
        u.column_mut(2).neg_mut();
        d[2] = -d[2];
    }
    if v.determinant() < 0.0 {
        v.column_mut(2).neg_mut();
        d[2] = -d[2];
    }
    (u, d, v)
}

/// Gauge-fixed representative of a sample's orbit.
#[derive(Debug, Clone)]
pub struct CanonicalForm {
    /// The gauge-transformed sample.
    pub sample: TsreSample,
    /// The rotations that realize it from the original sample.
    pub rotations: LocalRotationSet,
    /// Edge whose transformed bond is diagonal.
    pub first_bond: (usize, usize),
    /// Diagonal of the first bond, descending by magnitude.
    pub first_bond_singular_values: Vector3<f64>,
    /// One leftover rotation per independent cycle (rings: exactly one, on
    /// the closing bond `{1, N}` stored as `bond = symmetric * R`).
    pub topological_rotations: Vec<Matrix3<f64>>,
    /// Largest `|A' - A'^T|` entry over all bonds required to be symmetric.
    pub max_asymmetry: f64,
    /// Smallest relative singular-value separation over all bonds.
    pub min_singular_separation: f64,
    /// Set when any bond's singular values are degenerate within tolerance;
    /// the form is still returned but is not a unique orbit representative.
    pub degenerate: bool,
}

impl CanonicalForm {
    /// Number of free real parameters in the stored representation, after
    /// symmetry/diagonality constraints: 3 for the diagonal first bond, 6
    /// per remaining symmetric bond, 9 per cycle-closing bond (6 symmetric
    /// + 3 rotation), plus 3N field components.
    pub fn free_parameter_count(&self) -> usize {
        let m = self.sample.graph.n_edges();
        let n = self.sample.graph.n_vertices();
        let l = self.topological_rotations.len();
        3 + 6 * (m - l - 1) + 9 * l + 3 * n
    }

    fn diagnostics_json(&self) -> serde_json::Value {
        serde_json::json!({
            "max_asymmetry": self.max_asymmetry,
            "min_singular_separation": self.min_singular_separation,
            "degenerate": self.degenerate,
            "free_parameter_count": self.free_parameter_count(),
        })
    }

    /// JSON document with the transformed sample, realizing rotations, and
    /// residual diagnostics.
    pub fn to_json(&self, graph_config: &crate::graph::GraphConfig) -> serde_json::Value {
        let rot: Vec<Vec<f64>> = self
            .rotations
            .rotations
            .iter()
            .map(|o| o.transpose().iter().cloned().collect()) // row-major
            .collect();
        let topo: Vec<Vec<f64>> = self
            .topological_rotations
            .iter()
            .map(|o| o.transpose().iter().cloned().collect())
            .collect();
        serde_json::json!({
            "sample": self.sample.to_document(graph_config),
            "rotations": rot,
            "first_bond": self.first_bond,
            "first_bond_singular_values": [
                self.first_bond_singular_values[0],
                self.first_bond_singular_values[1],
                self.first_bond_singular_values[2],
            ],
            "topological_rotations": topo,
            "diagnostics": self.diagnostics_json(),
        })
    }
}

fn separation(d: &Vector3<f64>) -> f64 {
    let mags = [d[0].abs(), d[1].abs(), d[2].abs()];
    let largest = mags[0].max(mags[1]).max(mags[2]);
    if largest == 0.0 {
        return 0.0;
    }
    let mut gaps = [
        (mags[0] - mags[1]).abs(),
        (mags[1] - mags[2]).abs(),
        (mags[0] - mags[2]).abs(),
    ];
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    gaps[0] / largest
}

/// Canonicalizes along a spanning traversal rooted at the lexicographically
/// smallest edge, which ends up diagonal. Handles trees exactly; for rings
/// the caller passes the closing-edge index to leave out of the traversal.
fn canonicalize_spanning(s: &TsreSample, skip_edge: Option<usize>) -> CanonicalForm {
    let g = &s.graph;
    let n = g.n_vertices();
    let mut rotations = vec![None::<Matrix3<f64>>; n + 1];
    let mut min_sep = f64::INFINITY;

    // root edge: smallest not-skipped edge
    let (root_idx, &(ra, rb)) = g
        .edges()
        .iter()
        .enumerate()
        .find(|&(i, _)| Some(i) != skip_edge)
        .expect("graph has at least one traversal edge");
    let (u, d, v) = svd_so3(&s.bonds[root_idx]);
    min_sep = min_sep.min(separation(&d));
    rotations[ra] = Some(u);
    rotations[rb] = Some(v);
    let first_bond = (ra, rb);
    let first_values = d;

    // propagate outward; neighbor order makes the traversal deterministic
    let mut queue = std::collections::VecDeque::from([ra, rb]);
    while let Some(p) = queue.pop_front() {
        for (c, edge_idx) in g.neighbors(p) {
            if Some(edge_idx) == skip_edge || rotations[c].is_some() {
                continue;
            }
            let a = &s.bonds[edge_idx];
            let (u, d, v) = svd_so3(a);
            min_sep = min_sep.min(separation(&d));
            let op = rotations[p].as_ref().unwrap();
            let (j, k) = g.edges()[edge_idx];
            // stored orientation is (j, k); symmetrize O_j^T A O_k
            let oc = if p == j {
                // child is k: O_k = V U^T O_j
                v * u.transpose() * op
            } else {
                debug_assert_eq!(p, k);
                // child is j: O_j = U V^T O_k
                u * v.transpose() * op
            };
            rotations[c] = Some(oc);
            queue.push_back(c);
        }
    }

    let rotation_set = LocalRotationSet {
        rotations: (1..=n).map(|j| rotations[j].unwrap()).collect(),
    };
    let mut transformed = apply_gauge(s, &rotation_set).expect("constructed rotations are proper");

    // ring: factor the closing bond into symmetric * topological rotation
    let mut topological = Vec::new();
    if let Some(skip) = skip_edge {
        let b = transformed.bonds[skip];
        let (u, d, v) = svd_so3(&b);
        min_sep = min_sep.min(separation(&d));
        let sym = u * Matrix3::from_diagonal(&d) * u.transpose();
        let r = u * v.transpose();
        topological.push(r);
        // store the factored product so downstream users see a bond whose
        // Hamiltonian is unchanged
        transformed.bonds[skip] = sym * r;
    }

    let mut max_asym = 0.0f64;
    for (idx, b) in transformed.bonds.iter().enumerate() {
        if Some(idx) == skip_edge {
            continue;
        }
        max_asym = max_asym.max((b - b.transpose()).abs().max());
    }

    CanonicalForm {
        sample: transformed,
        rotations: rotation_set,
        first_bond,
        first_bond_singular_values: first_values,
        topological_rotations: topological,
        max_asymmetry: max_asym,
        min_singular_separation: min_sep,
        degenerate: min_sep < DEGENERACY_TOL,
    }
}

/// Canonical form of a sample on an open chain: every bond symmetric, the
/// first bond diagonal with entries descending by magnitude.
pub fn canonicalize_chain(s: &TsreSample) -> Result<CanonicalForm> {
    if !s.graph.is_chain() {
        return Err(TsreError::UnsupportedTopology(
            "canonicalize_chain needs a chain graph".into(),
        ));
    }
    Ok(canonicalize_spanning(s, None))
}

/// Canonical form on a tree: the lexicographically smallest edge is the
/// designated first bond and gets diagonalized; every other bond comes out
/// symmetric along the rooted traversal.
pub fn canonicalize_tree(s: &TsreSample) -> Result<CanonicalForm> {
    if !s.graph.is_tree() {
        return Err(TsreError::UnsupportedTopology(
            "canonicalize_tree needs a graph with cycle rank 0".into(),
        ));
    }
    Ok(canonicalize_spanning(s, None))
}

/// Canonical form on a ring: bonds `(1,2) ... (N-1,N)` symmetric with the
/// first diagonal; the closing bond `{1, N}` carries the topological
/// rotation, stored as `symmetric * R`.
pub fn canonicalize_ring(s: &TsreSample) -> Result<CanonicalForm> {
    if !s.graph.is_ring() {
        return Err(TsreError::UnsupportedTopology(
            "canonicalize_ring needs a ring graph".into(),
        ));
    }
    let n = s.graph.n_vertices();
    let closing = s
        .graph
        .edges()
        .iter()
        .position(|&e| e == (1, n))
        .expect("ring has closing edge (1, N)");
    Ok(canonicalize_spanning(s, Some(closing)))
}

/// Dispatches on the sample's topology. Cycle rank >= 2 is supported only
/// at the level of parameter counting, not canonicalization.
pub fn canonicalize(s: &TsreSample) -> Result<CanonicalForm> {
    if s.graph.is_ring() {
        canonicalize_ring(s)
    } else if s.graph.is_tree() {
        canonicalize_tree(s)
    } else {
        Err(TsreError::UnsupportedTopology(format!(
            "no canonical form implemented for cycle rank {}",
            s.graph.cycle_rank()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::sample;
    use crate::graph::InteractionGraph;
    use approx::assert_abs_diff_eq;

    fn mat_close(a: &Matrix3<f64>, b: &Matrix3<f64>, tol: f64) -> bool {
        (a - b).abs().max() < tol
    }

    #[test]
    fn svd_so3_identity_and_diagonal() {
        let (u, d, v) = svd_so3(&Matrix3::identity());
        assert!(mat_close(&u, &Matrix3::identity(), 1e-12) || u.determinant() > 0.0);
        assert_abs_diff_eq!(d[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d[2], 1.0, epsilon = 1e-12);
        assert!(v.determinant() > 0.0);

        let a = Matrix3::from_diagonal(&Vector3::new(3.0, 2.0, 1.0));
        let (_, d, _) = svd_so3(&a);
        assert_abs_diff_eq!(d[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn svd_so3_negative_determinant_carries_signed_d3() {
        let a = Matrix3::from_diagonal(&Vector3::new(3.0, 2.0, -1.0));
        let (u, d, v) = svd_so3(&a);
        assert_abs_diff_eq!(d[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d[2], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u.determinant(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.determinant(), 1.0, epsilon = 1e-12);
        let rec = u * Matrix3::from_diagonal(&d) * v.transpose();
        assert!(mat_close(&rec, &a, 1e-12));
    }

    #[test]
    fn svd_so3_reconstructs_random_matrices() {
        for r in 0..50 {
            let g = InteractionGraph::build_chain(2, 1.0, 0.0).unwrap();
            let s = sample(&g, 1000 + r, 0);
            let a = s.bonds[0];
            let (u, d, v) = svd_so3(&a);
            assert!(u.determinant() > 0.0 && v.determinant() > 0.0);
            assert!(d[0].abs() >= d[1].abs() && d[1].abs() >= d[2].abs());
            assert!(d[0] >= 0.0 && d[1] >= 0.0);
            assert_eq!(d[2] < 0.0, a.determinant() < 0.0);
            let rec = u * Matrix3::from_diagonal(&d) * v.transpose();
            assert!(mat_close(&rec, &a, 1e-12), "residual {}", (rec - a).abs().max());
        }
    }

    #[test]
    fn svd_so3_zero_matrix() {
        let (u, d, v) = svd_so3(&Matrix3::zeros());
        assert_abs_diff_eq!(u.determinant(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.determinant(), 1.0, epsilon = 1e-12);
        assert_eq!(d, Vector3::zeros());
    }

    #[test]
    fn identity_gauge_is_identity() {
        let g = InteractionGraph::build_chain(5, 1.0, 0.4).unwrap();
        let s = sample(&g, 3, 0);
        let t = apply_gauge(&s, &LocalRotationSet::identity(5)).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn apply_gauge_rejects_improper_rotations() {
        let g = InteractionGraph::build_chain(2, 1.0, 0.0).unwrap();
        let s = sample(&g, 3, 0);
        let mut rots = vec![Matrix3::identity(); 2];
        rots[0][(0, 0)] = 2.0;
        let o = LocalRotationSet { rotations: rots };
        assert!(matches!(
            apply_gauge(&s, &o),
            Err(TsreError::InvalidRotation(_))
        ));
        // reflection: orthogonal but det = -1
        let mut rots = vec![Matrix3::identity(); 2];
        rots[1][(2, 2)] = -1.0;
        let o = LocalRotationSet { rotations: rots };
        assert!(apply_gauge(&s, &o).is_err());
    }

    #[test]
    fn chain_of_two_canonical_bond_is_diagonal_svd() {
        let g = InteractionGraph::build_chain(2, 1.0, 0.0).unwrap();
        let s = sample(&g, 17, 0);
        let (_, d, _) = svd_so3(&s.bonds[0]);
        let cf = canonicalize_chain(&s).unwrap();
        let b = cf.sample.bonds[0];
        assert!(mat_close(&b, &Matrix3::from_diagonal(&d), 1e-12));
        assert_eq!(cf.free_parameter_count(), 3 + 3 * 2); // 6M-3+3N with M=1, N=2
    }

    #[test]
    fn chain_canonical_form_is_symmetric_with_diagonal_first_bond() {
        let g = InteractionGraph::build_chain(8, 1.0, 0.6).unwrap();
        let s = sample(&g, 21, 4);
        let cf = canonicalize_chain(&s).unwrap();
        assert!(cf.max_asymmetry < 1e-10, "asymmetry {}", cf.max_asymmetry);
        assert!(!cf.degenerate);
        let first = cf.sample.bonds[0];
        for r in 0..3 {
            for c in 0..3 {
                if r != c {
                    assert!(first[(r, c)].abs() < 1e-10);
                }
            }
        }
        // descending magnitudes on the diagonal
        assert!(first[(0, 0)].abs() >= first[(1, 1)].abs());
        assert!(first[(1, 1)].abs() >= first[(2, 2)].abs());
        // applying the stored rotations to the original reproduces the form
        let again = apply_gauge(&s, &cf.rotations).unwrap();
        for (a, b) in again.bonds.iter().zip(cf.sample.bonds.iter()) {
            assert!(mat_close(a, b, 1e-10));
        }
        // chain free parameters: 6M-3+3N
        let (m, n) = (g.n_edges(), g.n_vertices());
        assert_eq!(cf.free_parameter_count(), 6 * m - 3 + 3 * n);
    }

    #[test]
    fn symmetrization_preserves_bond_singular_values() {
        let g = InteractionGraph::build_chain(6, 1.0, 0.0).unwrap();
        let s = sample(&g, 33, 1);
        let cf = canonicalize_chain(&s).unwrap();
        for (orig, canon) in s.bonds.iter().zip(cf.sample.bonds.iter()) {
            let (_, d0, _) = svd_so3(orig);
            let (_, d1, _) = svd_so3(canon);
            for i in 0..3 {
                assert_abs_diff_eq!(d0[i].abs(), d1[i].abs(), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn tree_star_graph_canonical_form() {
        let g = InteractionGraph::new(
            4,
            &[(1, 2), (1, 3), (1, 4)],
            &[1.0; 3],
            &[0.2; 4],
        )
        .unwrap();
        let s = sample(&g, 8, 0);
        let cf = canonicalize_tree(&s).unwrap();
        assert_eq!(cf.first_bond, (1, 2));
        assert!(cf.max_asymmetry < 1e-10);
        // root bond diagonal
        let b = cf.sample.bonds[0];
        for r in 0..3 {
            for c in 0..3 {
                if r != c {
                    assert!(b[(r, c)].abs() < 1e-10);
                }
            }
        }
        // 6M-3+3N free parameters
        assert_eq!(cf.free_parameter_count(), 6 * 3 - 3 + 3 * 4);
    }

    #[test]
    fn path_tree_matches_chain_canonicalization() {
        let g = InteractionGraph::build_chain(6, 1.0, 0.3).unwrap();
        let s = sample(&g, 55, 2);
        let a = canonicalize_chain(&s).unwrap();
        let b = canonicalize_tree(&s).unwrap();
        for (x, y) in a.sample.bonds.iter().zip(b.sample.bonds.iter()) {
            assert!(mat_close(x, y, 1e-14));
        }
        assert_eq!(a.first_bond, b.first_bond);
    }

    #[test]
    fn ring_closing_bond_factors_into_symmetric_times_rotation() {
        let g = InteractionGraph::build_ring(6, 1.0, 0.5).unwrap();
        let s = sample(&g, 70, 3);
        let cf = canonicalize_ring(&s).unwrap();
        assert!(cf.max_asymmetry < 1e-10);
        assert_eq!(cf.topological_rotations.len(), 1);
        let r = cf.topological_rotations[0];
        assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-10);
        let closing = s.graph.edges().iter().position(|&e| e == (1, 6)).unwrap();
        let b = cf.sample.bonds[closing];
        let sym = b * r.transpose();
        assert!(mat_close(&sym, &sym.transpose(), 1e-10));
        // ring free parameters: 6M+3N
        assert_eq!(cf.free_parameter_count(), 6 * 6 + 3 * 6);
    }

    /// Reverse-engineered ring whose closing bond already fits the chain
    /// recursion: pick A^(1,N) = O_1 S O_N^T with S symmetric positive
    /// definite, so the transformed closing bond is S and R = identity.
    #[test]
    fn ring_with_consistent_closing_bond_has_identity_topological_rotation() {
        let n = 5;
        let g = InteractionGraph::build_ring(n, 1.0, 0.0).unwrap();
        let mut s = sample(&g, 123, 0);
        let chain_g = InteractionGraph::build_chain(n, 1.0, 0.0).unwrap();
        let mut chain_s = sample(&chain_g, 123, 0);
        // keep chain bonds identical to the ring's traversal bonds
        let ring_edges = g.edges();
        for (i, &e) in chain_g.edges().iter().enumerate() {
            let idx = ring_edges.iter().position(|&f| f == e).unwrap();
            chain_s.bonds[i] = s.bonds[idx];
        }
        let chain_cf = canonicalize_chain(&chain_s).unwrap();
        let o1 = chain_cf.rotations.rotations[0];
        let on = chain_cf.rotations.rotations[n - 1];
        // SPD symmetric factor
        let c = sample(&chain_g, 321, 0).bonds[0];
        let spd = c.transpose() * c + Matrix3::identity() * 0.5;
        let closing = ring_edges.iter().position(|&e| e == (1, n)).unwrap();
        s.bonds[closing] = o1 * spd * on.transpose();

        let cf = canonicalize_ring(&s).unwrap();
        let r = cf.topological_rotations[0];
        assert!(
            mat_close(&r, &Matrix3::identity(), 1e-9),
            "topological rotation deviates by {}",
            (r - Matrix3::identity()).abs().max()
        );
        let b = cf.sample.bonds[closing];
        assert!(mat_close(&b, &b.transpose(), 1e-9));
    }

    #[test]
    fn canonicalize_rejects_higher_cycle_rank() {
        let edges = [(1, 2), (2, 3), (3, 1), (1, 4), (4, 2)];
        let g = InteractionGraph::new(4, &edges, &[1.0; 5], &[0.0; 4]).unwrap();
        let s = sample(&g, 2, 0);
        assert!(matches!(
            canonicalize(&s),
            Err(TsreError::UnsupportedTopology(_))
        ));
    }

    #[test]
    fn degenerate_singular_values_are_flagged() {
        let g = InteractionGraph::build_chain(2, 1.0, 0.0).unwrap();
        let mut s = sample(&g, 5, 0);
        s.bonds[0] = Matrix3::from_diagonal(&Vector3::new(2.0, 2.0, 1.0));
        let cf = canonicalize_chain(&s).unwrap();
        assert!(cf.degenerate);
    }

    #[test]
    fn idempotence_of_canonicalization() {
        let g = InteractionGraph::build_chain(7, 1.0, 0.2).unwrap();
        let s = sample(&g, 61, 0);
        let cf = canonicalize_chain(&s).unwrap();
        let cf2 = canonicalize_chain(&cf.sample).unwrap();
        for (a, b) in cf.sample.bonds.iter().zip(cf2.sample.bonds.iter()) {
            assert!(mat_close(a, b, 1e-10));
        }
        // realized by (near-)identity rotations, up to axis sign flips that
        // stabilize an already-diagonal first bond
        for o in &cf2.rotations.rotations {
            let fixed = o.abs();
            assert!(mat_close(&fixed, &Matrix3::identity(), 1e-8));
        }
    }
}
