//! Ground-state observables: bipartite entanglement, effective Schmidt
//! rank, and spin-spin correlation fluctuations.
//!
//! Entanglement entropy of a cut after site `c`: reshape the state into a
//! `2^c x 2^(N-c)` matrix, take singular values `s_i`, set `p_i = s_i^2`
//! and `S = -sum p_i log2 p_i`.
//!
//! Plain correlators `<sigma_j^a sigma_k^b>` average to zero over the
//! ensemble by gauge invariance, so the meaningful probe is the fluctuation
//!
//! ```text
//! C(j,k) = < | <0|s_j^a s_k^b|0> - <0|s_j^a|0><0|s_k^b|0> |^2 >
//! ```
//!
//! whose ensemble mean does not depend on the component pair (a, b); the
//! per-realization value here is averaged over the nine pairs to improve
//! statistics, and the harness averages over realizations.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TsreError};
use crate::graph::InteractionGraph;
use crate::hamiltonian::{spin_matrices, SpinConvention, SpinState};
use crate::linalg::dot;

type C = Complex64;

/// Schmidt weights below this are dropped before the entropy sum.
const SCHMIDT_FLOOR: f64 = 1e-14;
const NORM_TOL: f64 = 1e-10;

/// Entropy of one bipartition, with the full Schmidt spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntropyResult {
    /// Base-2 von Neumann entropy of either reduced half.
    pub entropy_bits: f64,
    /// Descending reduced-density-matrix weights, summing to one.
    pub schmidt_spectrum: Vec<f64>,
    pub cut_position: usize,
}

impl EntropyResult {
    /// Recomputes the entropy from the stored spectrum (consistency check).
    pub fn entropy_from_spectrum(&self) -> f64 {
        entropy_bits_of(&self.schmidt_spectrum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Distance-resolved correlation fluctuation on a ring.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationProfile {
    /// `c_of_r[r-1]` is `C(r)` for `r = 1 ..= N-1` (r = 0 excluded).
    pub c_of_r: Vec<f64>,
    pub boundary: Boundary,
}

fn entropy_bits_of(ps: &[f64]) -> f64 {
    -ps.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Schmidt spectrum across the cut after site `cut` (sites `1..=cut`
/// against the rest), descending.
pub fn schmidt_spectrum(psi: &SpinState, cut: usize) -> Result<Vec<f64>> {
    if cut < 1 || cut >= psi.n_spins {
        return Err(TsreError::Domain(format!(
            "cut {cut} outside 1..={}",
            psi.n_spins - 1
        )));
    }
    psi.check_normalized(NORM_TOL)?;
    let rows = 1usize << cut;
    let cols = 1usize << (psi.n_spins - cut);
    // spin j is bit j-1, so the left block is the fast (row) index
    let m = DMatrix::<C>::from_fn(rows, cols, |l, r| psi.amplitudes[l + (r << cut)]);
    let svd = m.svd(false, false);
    let mut ps: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|s| s * s)
        .filter(|&p| p >= SCHMIDT_FLOOR)
        .collect();
    ps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(ps)
}

/// Von Neumann entropy (base 2) of the bipartition after site `cut`.
pub fn entanglement_entropy(psi: &SpinState, cut: usize) -> Result<EntropyResult> {
    let ps = schmidt_spectrum(psi, cut)?;
    Ok(EntropyResult {
        entropy_bits: entropy_bits_of(&ps),
        schmidt_spectrum: ps,
        cut_position: cut,
    })
}

/// Smallest number of Schmidt weights capturing all but `epsilon` of the
/// reduced density matrix: `min { chi : sum_{i<=chi} p_i >= 1 - epsilon }`.
pub fn effective_rank(spectrum: &[f64], epsilon: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&epsilon) || epsilon == 0.0 {
        return Err(TsreError::Domain(format!(
            "epsilon must lie strictly in (0, 1), got {epsilon}"
        )));
    }
    let mut acc = 0.0;
    for (i, &p) in spectrum.iter().enumerate() {
        acc += p;
        if acc >= 1.0 - epsilon {
            return Ok(i + 1);
        }
    }
    Ok(spectrum.len())
}

/// `s_j^alpha |psi>` for one site (1-based `j`).
fn apply_single_site(psi: &SpinState, j: usize, block: &[[C; 2]; 2]) -> Vec<C> {
    let dim = psi.dim();
    let mask = 1usize << (j - 1);
    let mut out = vec![C::new(0.0, 0.0); dim];
    for i in 0..dim {
        let b = usize::from(i & mask != 0);
        let base = i & !mask;
        out[i] = block[b][0] * psi.amplitudes[base] + block[b][1] * psi.amplitudes[base | mask];
    }
    out
}

/// Per-realization correlation fluctuation between vertices `j` and `k`:
/// the squared connected correlator averaged over the nine component pairs.
pub fn correlation_fluctuation(
    psi: &SpinState,
    j: usize,
    k: usize,
    convention: SpinConvention,
) -> Result<f64> {
    if j == k {
        return Err(TsreError::Domain(
            "correlation fluctuation needs two distinct vertices".into(),
        ));
    }
    let n = psi.n_spins;
    if j < 1 || j > n || k < 1 || k > n {
        return Err(TsreError::Domain(format!(
            "vertices ({j},{k}) outside 1..={n}"
        )));
    }
    psi.check_normalized(NORM_TOL)?;
    let s = spin_matrices(convention);
    let zj: Vec<Vec<C>> = (0..3).map(|a| apply_single_site(psi, j, &s[a])).collect();
    let zk: Vec<Vec<C>> = (0..3).map(|b| apply_single_site(psi, k, &s[b])).collect();
    let mj: Vec<C> = zj.iter().map(|z| dot(&psi.amplitudes, z)).collect();
    let mk: Vec<C> = zk.iter().map(|z| dot(&psi.amplitudes, z)).collect();
    let mut acc = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            // <psi| s_j^a s_k^b |psi> = <s_j^a psi, s_k^b psi>
            let corr = dot(&zj[a], &zk[b]);
            acc += (corr - mj[a] * mk[b]).norm_sqr();
        }
    }
    Ok(acc / 9.0)
}

/// Ring-averaged correlation fluctuation profile
/// `C(r) = (1/N) sum_i C(i, i+r)` with indices mod N, for `r = 1..=N-1`.
pub fn ring_correlation_profile(
    psi: &SpinState,
    graph: &InteractionGraph,
    convention: SpinConvention,
) -> Result<CorrelationProfile> {
    if !graph.is_ring() {
        return Err(TsreError::BoundaryMismatch(
            "correlation profile needs a ring (periodic) graph".into(),
        ));
    }
    if graph.n_vertices() != psi.n_spins {
        return Err(TsreError::ShapeMismatch {
            expected: 1 << graph.n_vertices(),
            got: psi.dim(),
        });
    }
    psi.check_normalized(NORM_TOL)?;
    let n = psi.n_spins;
    let s = spin_matrices(convention);

    // cache s_i^a |psi> for every site and component
    let z: Vec<[Vec<C>; 3]> = (1..=n)
        .map(|i| {
            [
                apply_single_site(psi, i, &s[0]),
                apply_single_site(psi, i, &s[1]),
                apply_single_site(psi, i, &s[2]),
            ]
        })
        .collect();
    let m: Vec<[C; 3]> = z
        .iter()
        .map(|zi| {
            [
                dot(&psi.amplitudes, &zi[0]),
                dot(&psi.amplitudes, &zi[1]),
                dot(&psi.amplitudes, &zi[2]),
            ]
        })
        .collect();

    let mut c_of_r = Vec::with_capacity(n - 1);
    for r in 1..n {
        let mut total = 0.0;
        for i in 0..n {
            let k = (i + r) % n;
            let mut pair = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    let corr = dot(&z[i][a], &z[k][b]);
                    pair += (corr - m[i][a] * m[k][b]).norm_sqr();
                }
            }
            total += pair / 9.0;
        }
        c_of_r.push(total / n as f64);
    }
    Ok(CorrelationProfile {
        c_of_r,
        boundary: Boundary::Periodic,
    })
}
