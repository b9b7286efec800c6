//! Sampling of two-spin random ensemble members.
//!
//! One ensemble member assigns an i.i.d. standard-normal 3x3 bond matrix to
//! every edge and an i.i.d. standard-normal 3-vector field to every vertex.
//! The correlators are
//!
//! ```text
//! <A_ab A_a'b'> = d_jj' d_kk' d_aa' d_bb',   <b_a b_a'> = d_jj' d_aa',   <A b> = 0
//! ```
//!
//! Reproducibility contract: every matrix/vector element is drawn from its
//! own ChaCha12 stream keyed by `(seed, realization_index, element tag)`,
//! so realizations can be generated on any worker in any order and still
//! come out bit-for-bit identical. The uniform-bits -> normal transform is
//! the ziggurat sampler of `rand_distr::StandardNormal`; both the generator
//! and the transform are frozen by the lockfile.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TsreError};
use crate::graph::{GraphConfig, InteractionGraph};

/// 3x3 real coupling between the spin components at the two ends of an edge.
pub type BondMatrix = Matrix3<f64>;

/// Real 3-vector coupling a spin to the random external field.
pub type FieldVector = Vector3<f64>;

/// One member of the ensemble on a fixed interaction graph.
#[derive(Debug, Clone, PartialEq)]
pub struct TsreSample {
    pub graph: InteractionGraph,
    /// Bond matrix per edge, parallel to `graph.edges()`. The matrix for
    /// edge `(j, k)` with `j < k` couples `sigma_j . A . sigma_k`.
    pub bonds: Vec<BondMatrix>,
    /// Field vector per vertex, index `j-1` for vertex `j`.
    pub fields: Vec<FieldVector>,
    pub seed: u64,
    pub realization_index: u64,
}

// splitmix64; used only to key per-element generator streams.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// ChaCha12 stream for one keyed element of one realization.
pub(crate) fn element_rng(seed: u64, realization: u64, tag: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    let mut state = seed ^ 0x7472_7365_2d65_6e73; // domain constant
    let mut words = [0u64; 4];
    words[0] = splitmix64(&mut state);
    state ^= realization.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1);
    words[1] = splitmix64(&mut state);
    state ^= tag.wrapping_mul(0xd134_2543_de82_ef95).wrapping_add(3);
    words[2] = splitmix64(&mut state);
    words[3] = splitmix64(&mut state);
    for (i, w) in words.iter().enumerate() {
        key[8 * i..8 * (i + 1)].copy_from_slice(&w.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

const TAG_BOND: u64 = 0x1000_0000;
const TAG_FIELD: u64 = 0x2000_0000;

/// Draws one ensemble member: independent standard normals for every bond
/// entry (row-major per edge) and every field entry.
pub fn sample(graph: &InteractionGraph, seed: u64, realization_index: u64) -> TsreSample {
    let bonds = (0..graph.n_edges())
        .map(|e| {
            let mut rng = element_rng(seed, realization_index, TAG_BOND + e as u64);
            let mut a = Matrix3::zeros();
            for r in 0..3 {
                for c in 0..3 {
                    a[(r, c)] = rng.sample(StandardNormal);
                }
            }
            a
        })
        .collect();
    let fields = (0..graph.n_vertices())
        .map(|v| {
            let mut rng = element_rng(seed, realization_index, TAG_FIELD + v as u64);
            Vector3::new(
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            )
        })
        .collect();
    TsreSample {
        graph: graph.clone(),
        bonds,
        fields,
        seed,
        realization_index,
    }
}

/// Strength-weighted couplings as consumed by the Hamiltonian builder:
/// `mu(j,k) * A^(j,k)` per edge and `lambda(j) * b^(j)` per vertex.
pub fn scaled_hamiltonian_inputs(s: &TsreSample) -> (Vec<BondMatrix>, Vec<FieldVector>) {
    let bonds = s
        .bonds
        .iter()
        .enumerate()
        .map(|(e, a)| a * s.graph.mu_at(e))
        .collect();
    let fields = s
        .fields
        .iter()
        .zip(s.graph.lambdas())
        .map(|(b, &l)| b * l)
        .collect();
    (bonds, fields)
}

/// JSON form of a sample: row-major 9-element bond arrays keyed by edge,
/// 3-element field arrays keyed by vertex, plus the seed metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleDocument {
    pub graph: GraphConfig,
    pub seed: u64,
    pub realization_index: u64,
    pub bonds: Vec<BondEntry>,
    pub fields: Vec<FieldEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BondEntry {
    pub edge: (usize, usize),
    /// Row-major entries of the 3x3 bond matrix.
    pub a: [f64; 9],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldEntry {
    pub vertex: usize,
    pub b: [f64; 3],
}

impl TsreSample {
    pub fn to_document(&self, graph_config: &GraphConfig) -> SampleDocument {
        SampleDocument {
            graph: graph_config.clone(),
            seed: self.seed,
            realization_index: self.realization_index,
            bonds: self
                .graph
                .edges()
                .iter()
                .zip(self.bonds.iter())
                .map(|(&edge, a)| {
                    let mut row = [0.0; 9];
                    for r in 0..3 {
                        for c in 0..3 {
                            row[3 * r + c] = a[(r, c)];
                        }
                    }
                    BondEntry { edge, a: row }
                })
                .collect(),
            fields: self
                .fields
                .iter()
                .enumerate()
                .map(|(i, b)| FieldEntry {
                    vertex: i + 1,
                    b: [b[0], b[1], b[2]],
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &SampleDocument) -> Result<Self> {
        let graph = doc.graph.build()?;
        if doc.bonds.len() != graph.n_edges() || doc.fields.len() != graph.n_vertices() {
            return Err(TsreError::InvalidGraph(
                "sample document does not match its graph's edge/vertex sets".into(),
            ));
        }
        let mut bonds = vec![Matrix3::zeros(); graph.n_edges()];
        let mut filled = vec![false; graph.n_edges()];
        for entry in &doc.bonds {
            let key = (entry.edge.0.min(entry.edge.1), entry.edge.0.max(entry.edge.1));
            let idx = graph
                .edges()
                .iter()
                .position(|&e| e == key)
                .ok_or_else(|| {
                    TsreError::InvalidGraph(format!("bond for unknown edge {:?}", entry.edge))
                })?;
            let mut a = Matrix3::zeros();
            for r in 0..3 {
                for c in 0..3 {
                    a[(r, c)] = entry.a[3 * r + c];
                }
            }
            // entries listed against the reversed orientation transpose in
            if key != entry.edge {
                a = a.transpose();
            }
            bonds[idx] = a;
            filled[idx] = true;
        }
        if filled.iter().any(|&f| !f) {
            return Err(TsreError::InvalidGraph("missing bond entries".into()));
        }
        let mut fields = vec![Vector3::zeros(); graph.n_vertices()];
        for entry in &doc.fields {
            if entry.vertex < 1 || entry.vertex > graph.n_vertices() {
                return Err(TsreError::InvalidGraph(format!(
                    "field for unknown vertex {}",
                    entry.vertex
                )));
            }
            fields[entry.vertex - 1] = Vector3::new(entry.b[0], entry.b[1], entry.b[2]);
        }
        Ok(Self {
            graph,
            bonds,
            fields,
            seed: doc.seed,
            realization_index: doc.realization_index,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::InteractionGraph;

    #[test]
    fn identical_keys_reproduce_bitwise() {
        let g = InteractionGraph::build_chain(6, 1.0, 0.7).unwrap();
        let a = sample(&g, 42, 3);
        let b = sample(&g, 42, 3);
        assert_eq!(a, b);
        let c = sample(&g, 42, 4);
        assert_ne!(a, c);
        let d = sample(&g, 43, 3);
        assert_ne!(a, d);
    }

    /// Moment checks over 1e5 draws. Estimator spread: the sample mean of n
    /// standard normals has sd 1/sqrt(n) ~ 3.2e-3, so +-0.02 is ~6.3 sigma;
    /// the sample variance has sd sqrt(2/n) ~ 4.5e-3, so [0.98, 1.02] is
    /// ~4.4 sigma. Both bounds hold deterministically for the pinned seed.
    #[test]
    fn entry_moments_match_standard_normal() {
        let g = InteractionGraph::build_chain(2, 1.0, 1.0).unwrap();
        let n_draws = 100_000usize;
        let mut sums = [0.0f64; 12];
        let mut sq_sums = [0.0f64; 12];
        let mut cross_ab = 0.0f64; // A_11 vs b_1 on vertex 1
        for r in 0..n_draws {
            let s = sample(&g, 7, r as u64);
            let a = &s.bonds[0];
            let b = &s.fields[0];
            for (i, v) in a.iter().enumerate() {
                sums[i] += v;
                sq_sums[i] += v * v;
            }
            for i in 0..3 {
                sums[9 + i] += b[i];
                sq_sums[9 + i] += b[i] * b[i];
            }
            cross_ab += a[(0, 0)] * b[0];
        }
        for i in 0..12 {
            let mean = sums[i] / n_draws as f64;
            let var = sq_sums[i] / n_draws as f64 - mean * mean;
            assert!(mean.abs() <= 0.02, "entry {i} mean {mean}");
            assert!((0.98..=1.02).contains(&var), "entry {i} variance {var}");
        }
        let cross = cross_ab / n_draws as f64;
        assert!(cross.abs() <= 0.02, "A/b cross-correlation {cross}");
    }

    /// Condition (i): the ensemble's first and second moments are unchanged
    /// under fixed two-sided rotations of A (and one-sided of b).
    #[test]
    fn moments_invariant_under_fixed_rotations() {
        use nalgebra::Rotation3;
        let g = InteractionGraph::build_chain(2, 1.0, 1.0).unwrap();
        let o = Rotation3::from_euler_angles(0.3, -1.1, 2.4).into_inner();
        let o2 = Rotation3::from_euler_angles(-0.8, 0.2, 0.9).into_inner();
        let n_draws = 100_000usize;
        let mut mean = Matrix3::zeros();
        let mut var = Matrix3::zeros();
        let mut cross = 0.0f64; // rotated entries (0,1) vs (2,2)
        for r in 0..n_draws {
            let s = sample(&g, 11, r as u64);
            let t = o * s.bonds[0] * o2;
            mean += t;
            var += t.component_mul(&t);
            cross += t[(0, 1)] * t[(2, 2)];
        }
        mean /= n_draws as f64;
        var = var / (n_draws as f64) - mean.component_mul(&mean);
        for i in 0..9 {
            assert!(mean[i].abs() <= 0.02, "rotated mean {}", mean[i]);
            assert!((0.98..=1.02).contains(&var[i]), "rotated variance {}", var[i]);
        }
        assert!((cross / n_draws as f64).abs() <= 0.02);
    }

    #[test]
    fn scaling_weights_couplings() {
        let g = InteractionGraph::new(
            3,
            &[(1, 2), (2, 3)],
            &[2.0, 1.0],
            &[0.0, 0.0, 0.0],
        )
        .unwrap();
        let s = sample(&g, 5, 0);
        let (bonds, fields) = scaled_hamiltonian_inputs(&s);
        assert_eq!(bonds[0], s.bonds[0] * 2.0);
        assert_eq!(bonds[1], s.bonds[1]);
        assert!(fields.iter().all(|f| f.norm() == 0.0));

        let g1 = InteractionGraph::build_chain(3, 1.0, 1.0).unwrap();
        let s1 = sample(&g1, 5, 0);
        let (b1, f1) = scaled_hamiltonian_inputs(&s1);
        assert_eq!(b1, s1.bonds);
        assert_eq!(f1, s1.fields);
    }

    #[test]
    fn sample_document_round_trip() {
        let cfg = GraphConfig::ring(5, 1.0, 0.3);
        let g = cfg.build().unwrap();
        let s = sample(&g, 99, 12);
        let doc = s.to_document(&cfg);
        let json = serde_json::to_string(&doc).unwrap();
        let back = TsreSample::from_document(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(s, back);
    }
}
