//! Matrix product states for open chains.
//!
//! Site tensors are `(left bond, physical = 2, right bond)` with boundary
//! bonds of dimension one. The state is kept in mixed-canonical form:
//! tensors strictly left of `center` are left isometries, tensors strictly
//! right of it are right isometries.

use nalgebra::DMatrix;
use ndarray::Array3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TsreError};
use crate::hamiltonian::{spin_matrices, SpinConvention, SpinState};

type C = Complex64;

#[derive(Debug, Clone)]
pub struct MatrixProductState {
    pub tensors: Vec<Array3<C>>,
    /// Mixed-canonical center site (0-based).
    pub center: usize,
    pub n_sites: usize,
}

pub(crate) fn tensor_to_matrix(t: &Array3<C>, split_after_phys: bool) -> DMatrix<C> {
    let (a, s, b) = t.dim();
    if split_after_phys {
        // (a*s) x b
        DMatrix::from_fn(a * s, b, |row, col| t[(row / s, row % s, col)])
    } else {
        // a x (s*b)
        DMatrix::from_fn(a, s * b, |row, col| t[(row, col / b, col % b)])
    }
}

fn matrix_to_tensor(m: &DMatrix<C>, dims: (usize, usize, usize), split_after_phys: bool) -> Array3<C> {
    let (a, s, b) = dims;
    if split_after_phys {
        assert_eq!(m.nrows(), a * s);
        assert_eq!(m.ncols(), b);
        Array3::from_shape_fn((a, s, b), |(ia, is, ib)| m[(ia * s + is, ib)])
    } else {
        assert_eq!(m.nrows(), a);
        assert_eq!(m.ncols(), s * b);
        Array3::from_shape_fn((a, s, b), |(ia, is, ib)| m[(ia, is * b + ib)])
    }
}

impl MatrixProductState {
    /// Random MPS with bond dimensions capped at `chi`, right-canonicalized
    /// and normalized; entries keyed by `(seed, tag)`.
    pub fn random(n_sites: usize, chi: usize, seed: u64, tag: u64) -> Self {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut rng = crate::ensemble::element_rng(seed, tag, 0x6000_0000);
        let dims = bond_dims(n_sites, chi);
        let tensors: Vec<Array3<C>> = (0..n_sites)
            .map(|i| {
                Array3::from_shape_fn((dims[i], 2, dims[i + 1]), |_| {
                    C::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                })
            })
            .collect();
        let mut mps = Self {
            tensors,
            center: n_sites - 1,
            n_sites,
        };
        // bring to right-canonical form with center at site 0, normalized
        for site in (1..n_sites).rev() {
            mps.shift_center_left(site);
        }
        mps.center = 0;
        mps.normalize_center();
        mps
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        let mut out = vec![self.tensors[0].dim().0];
        for t in &self.tensors {
            out.push(t.dim().2);
        }
        out
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    fn normalize_center(&mut self) {
        let t = &mut self.tensors[self.center];
        let n = t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 0.0 {
            t.mapv_inplace(|z| z / n);
        }
    }

    /// QR-pushes the center one site to the right (center must be `site`).
    fn shift_center_right(&mut self, site: usize) {
        let t = &self.tensors[site];
        let (a, s, b) = t.dim();
        let m = tensor_to_matrix(t, true);
        let qr = m.qr();
        let q = qr.q();
        let r = qr.r();
        let rank = q.ncols();
        self.tensors[site] = matrix_to_tensor(&q, (a, s, rank), true);
        let next = &self.tensors[site + 1];
        let (_, s2, b2) = next.dim();
        let nm = tensor_to_matrix(next, false);
        let prod = &r * nm;
        self.tensors[site + 1] = matrix_to_tensor(&prod, (rank, s2, b2), false);
        let _ = b;
        self.center = site + 1;
    }

    /// QR-pushes the center one site to the left (center must be `site`).
    fn shift_center_left(&mut self, site: usize) {
        let t = &self.tensors[site];
        let (a, s, b) = t.dim();
        // M = (a) x (s b); adjoint-QR gives M = R^H Q^H with Q^H having
        // orthonormal rows
        let m = tensor_to_matrix(t, false);
        let qr = m.adjoint().qr();
        let q = qr.q();
        let r = qr.r();
        let rank = q.ncols();
        let qh = q.adjoint(); // rank x (s b)
        self.tensors[site] = matrix_to_tensor(&qh, (rank, s, b), false);
        let prev = &self.tensors[site - 1];
        let (a0, s0, _) = prev.dim();
        let pm = tensor_to_matrix(prev, true);
        let prod = pm * r.adjoint(); // (a0 s0) x rank
        self.tensors[site - 1] = matrix_to_tensor(&prod, (a0, s0, rank), true);
        let _ = a;
        self.center = site - 1;
    }

    /// Moves the mixed-canonical center to `site`.
    pub fn move_center_to(&mut self, site: usize) {
        while self.center < site {
            self.shift_center_right(self.center);
        }
        while self.center > site {
            self.shift_center_left(self.center);
        }
    }

    /// Schmidt weights across the bond after 1-based site `cut` (left block
    /// `1..=cut`), descending and floored like the state-vector path.
    pub fn schmidt_weights(&mut self, cut: usize) -> Result<Vec<f64>> {
        if cut < 1 || cut >= self.n_sites {
            return Err(TsreError::Domain(format!(
                "cut {cut} outside 1..={}",
                self.n_sites - 1
            )));
        }
        self.move_center_to(cut - 1);
        let t = &self.tensors[cut - 1];
        let m = tensor_to_matrix(t, true);
        let svd = m.svd(false, false);
        let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
        let mut ps: Vec<f64> = svd
            .singular_values
            .iter()
            .map(|s| s * s / total)
            .filter(|&p| p >= 1e-14)
            .collect();
        ps.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(ps)
    }

    /// Expands the MPS into a full state vector (exponential in N; used for
    /// cross-validation at small N).
    pub fn to_state_vector(&self) -> Result<SpinState> {
        if self.n_sites > 24 {
            return Err(TsreError::ResourceLimit(format!(
                "state-vector expansion guarded to N <= 24, got {}",
                self.n_sites
            )));
        }
        // acc[r][c]: amplitude of bit pattern r with open right bond c
        let first = &self.tensors[0];
        let mut acc: Vec<Vec<C>> = (0..2)
            .map(|s| (0..first.dim().2).map(|b| first[(0, s, b)]).collect())
            .collect();
        for site in 1..self.n_sites {
            let t = &self.tensors[site];
            let (a, _, b) = t.dim();
            let mut next: Vec<Vec<C>> = vec![vec![C::new(0.0, 0.0); b]; acc.len() * 2];
            for (r, row) in acc.iter().enumerate() {
                for s in 0..2 {
                    let out = &mut next[r + (s << site)];
                    for ia in 0..a {
                        let amp = row[ia];
                        if amp == C::new(0.0, 0.0) {
                            continue;
                        }
                        for ib in 0..b {
                            out[ib] += amp * t[(ia, s, ib)];
                        }
                    }
                }
            }
            acc = next;
        }
        let amplitudes: Vec<C> = acc.into_iter().map(|row| row[0]).collect();
        SpinState::from_amplitudes(self.n_sites, amplitudes)
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &Self) -> C {
        assert_eq!(self.n_sites, other.n_sites);
        // env[a_self][a_other]
        let mut env = DMatrix::<C>::from_element(1, 1, C::new(1.0, 0.0));
        for site in 0..self.n_sites {
            let bra = &self.tensors[site];
            let ket = &other.tensors[site];
            let (ab, _, bb) = bra.dim();
            let (ak, _, bk) = ket.dim();
            let mut next = DMatrix::<C>::zeros(bb, bk);
            for s in 0..2 {
                // tmp[bb][ak] = sum_ab conj(bra[ab,s,bb]) env[ab,ak]
                let mut tmp = DMatrix::<C>::zeros(bb, ak);
                for ia in 0..ab {
                    for ib in 0..bb {
                        let c = bra[(ia, s, ib)].conj();
                        if c == C::new(0.0, 0.0) {
                            continue;
                        }
                        for j in 0..ak {
                            tmp[(ib, j)] += c * env[(ia, j)];
                        }
                    }
                }
                // next[bb][bk] += sum_ak tmp[bb,ak] ket[ak,s,bk]
                for ib in 0..bb {
                    for j in 0..ak {
                        let c = tmp[(ib, j)];
                        if c == C::new(0.0, 0.0) {
                            continue;
                        }
                        for jb in 0..bk {
                            next[(ib, jb)] += c * ket[(j, s, jb)];
                        }
                    }
                }
            }
            env = next;
        }
        env[(0, 0)]
    }

    pub fn norm(&self) -> f64 {
        self.overlap(self).re.sqrt()
    }

    /// `<s_j^a>` for every component at a single 1-based site.
    fn single_site_expectations(&mut self, j: usize, convention: SpinConvention) -> [C; 3] {
        self.move_center_to(j - 1);
        let t = &self.tensors[j - 1];
        let (a, _, b) = t.dim();
        let s = spin_matrices(convention);
        let mut out = [C::new(0.0, 0.0); 3];
        for (alpha, sm) in s.iter().enumerate() {
            let mut acc = C::new(0.0, 0.0);
            for ia in 0..a {
                for ib in 0..b {
                    for so in 0..2 {
                        for si in 0..2 {
                            acc += t[(ia, so, ib)].conj() * sm[so][si] * t[(ia, si, ib)];
                        }
                    }
                }
            }
            out[alpha] = acc;
        }
        out
    }

    /// `<s_j^a s_k^b>` for all nine component pairs (1-based sites). The
    /// identity transfer between the two insertion points runs once per
    /// left component.
    fn pair_expectations(&mut self, j: usize, k: usize, convention: SpinConvention) -> [[C; 3]; 3] {
        assert_ne!(j, k);
        let (lo, hi, swapped) = if j < k { (j, k, false) } else { (k, j, true) };
        self.move_center_to(lo - 1);
        let s = spin_matrices(convention);
        let mut out = [[C::new(0.0, 0.0); 3]; 3];
        for op_lo in 0..3 {
            // insertion at the center site
            let t = &self.tensors[lo - 1];
            let (al, _, bl) = t.dim();
            let mut env = DMatrix::<C>::zeros(bl, bl);
            for ia in 0..al {
                for ib in 0..bl {
                    for jb in 0..bl {
                        for so in 0..2 {
                            for si in 0..2 {
                                env[(ib, jb)] +=
                                    t[(ia, so, ib)].conj() * s[op_lo][so][si] * t[(ia, si, jb)];
                            }
                        }
                    }
                }
            }
            // identity transfer up to the right insertion point
            for site in lo..hi - 1 {
                let t = &self.tensors[site];
                let (ta, _, tb) = t.dim();
                let mut next = DMatrix::<C>::zeros(tb, tb);
                for so in 0..2 {
                    for ia in 0..ta {
                        for ib in 0..tb {
                            let c = t[(ia, so, ib)].conj();
                            if c == C::new(0.0, 0.0) {
                                continue;
                            }
                            for ja in 0..ta {
                                let e = env[(ia, ja)];
                                if e == C::new(0.0, 0.0) {
                                    continue;
                                }
                                for jb in 0..tb {
                                    next[(ib, jb)] += c * e * t[(ja, so, jb)];
                                }
                            }
                        }
                    }
                }
                env = next;
            }
            for op_hi in 0..3 {
                let t = &self.tensors[hi - 1];
                let (ta, _, tb) = t.dim();
                let mut acc = C::new(0.0, 0.0);
                for so in 0..2 {
                    for si in 0..2 {
                        let w = s[op_hi][so][si];
                        if w == C::new(0.0, 0.0) {
                            continue;
                        }
                        for ia in 0..ta {
                            for ja in 0..ta {
                                let e = env[(ia, ja)];
                                if e == C::new(0.0, 0.0) {
                                    continue;
                                }
                                for ib in 0..tb {
                                    acc += t[(ia, so, ib)].conj() * w * e * t[(ja, si, ib)];
                                }
                            }
                        }
                    }
                }
                if swapped {
                    out[op_hi][op_lo] = acc;
                } else {
                    out[op_lo][op_hi] = acc;
                }
            }
        }
        out
    }
}

/// Entropy of the bipartition after 1-based site `cut`, from the MPS
/// Schmidt spectrum.
pub fn mps_entropy(mps: &mut MatrixProductState, cut: usize) -> Result<crate::observables::EntropyResult> {
    let ps = mps.schmidt_weights(cut)?;
    let entropy_bits = -ps
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>();
    Ok(crate::observables::EntropyResult {
        entropy_bits,
        schmidt_spectrum: ps,
        cut_position: cut,
    })
}

/// Correlation fluctuation between 1-based sites `j` and `k` by transfer
/// contraction: squared connected correlator averaged over component pairs.
pub fn mps_correlation(
    mps: &mut MatrixProductState,
    j: usize,
    k: usize,
    convention: SpinConvention,
) -> Result<f64> {
    if j == k {
        return Err(TsreError::Domain(
            "correlation fluctuation needs two distinct sites".into(),
        ));
    }
    let n = mps.n_sites;
    if j < 1 || j > n || k < 1 || k > n {
        return Err(TsreError::Domain(format!("sites ({j},{k}) outside 1..={n}")));
    }
    let mj = mps.single_site_expectations(j, convention);
    let mk = mps.single_site_expectations(k, convention);
    let pairs = mps.pair_expectations(j, k, convention);
    let mut acc = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            acc += (pairs[a][b] - mj[a] * mk[b]).norm_sqr();
        }
    }
    Ok(acc / 9.0)
}

fn bond_dims(n_sites: usize, chi: usize) -> Vec<usize> {
    (0..=n_sites)
        .map(|i| {
            let left = 1usize << i.min(30);
            let right = 1usize << (n_sites - i).min(30);
            left.min(right).min(chi)
        })
        .collect()
}

/// Checkpoint: little-endian complex tensor dump plus a JSON manifest with
/// shapes and provenance, written side by side.
#[derive(Debug, Serialize, Deserialize)]
pub struct MpsManifest {
    pub n_sites: usize,
    pub center: usize,
    pub shapes: Vec<(usize, usize, usize)>,
    pub seed: Option<u64>,
    pub sweep_energies: Vec<f64>,
}

pub fn save_checkpoint(
    mps: &MatrixProductState,
    manifest_extra: (Option<u64>, &[f64]),
    path_prefix: &std::path::Path,
) -> std::io::Result<()> {
    use std::io::Write;
    let manifest = MpsManifest {
        n_sites: mps.n_sites,
        center: mps.center,
        shapes: mps.tensors.iter().map(|t| t.dim()).collect(),
        seed: manifest_extra.0,
        sweep_energies: manifest_extra.1.to_vec(),
    };
    let mut mf = std::fs::File::create(path_prefix.with_extension("json"))?;
    mf.write_all(serde_json::to_string_pretty(&manifest).unwrap().as_bytes())?;
    let mut bf = std::fs::File::create(path_prefix.with_extension("bin"))?;
    for t in &mps.tensors {
        for z in t.iter() {
            bf.write_all(&z.re.to_le_bytes())?;
            bf.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_checkpoint(path_prefix: &std::path::Path) -> Result<MatrixProductState> {
    let manifest: MpsManifest = serde_json::from_str(
        &std::fs::read_to_string(path_prefix.with_extension("json"))
            .map_err(|e| TsreError::Domain(format!("checkpoint manifest: {e}")))?,
    )
    .map_err(|e| TsreError::Domain(format!("checkpoint manifest: {e}")))?;
    let raw = std::fs::read(path_prefix.with_extension("bin"))
        .map_err(|e| TsreError::Domain(format!("checkpoint data: {e}")))?;
    let mut off = 0usize;
    let mut tensors = Vec::with_capacity(manifest.n_sites);
    for &(a, s, b) in &manifest.shapes {
        let count = a * s * b;
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            let re = f64::from_le_bytes(raw[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(raw[off + 8..off + 16].try_into().unwrap());
            off += 16;
            data.push(C::new(re, im));
        }
        tensors.push(Array3::from_shape_vec((a, s, b), data).unwrap());
    }
    Ok(MatrixProductState {
        tensors,
        center: manifest.center,
        n_sites: manifest.n_sites,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm};
    use crate::observables;
    use approx::assert_abs_diff_eq;

    #[test]
    fn random_mps_is_normalized_and_canonical() {
        let mps = MatrixProductState::random(6, 8, 3, 0);
        assert_abs_diff_eq!(mps.norm(), 1.0, epsilon = 1e-10);
        assert_eq!(mps.center, 0);
        let v = mps.to_state_vector().unwrap();
        assert_abs_diff_eq!(norm(&v.amplitudes), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn center_moves_preserve_the_state() {
        let mut mps = MatrixProductState::random(7, 6, 5, 1);
        let before = mps.to_state_vector().unwrap();
        mps.move_center_to(6);
        mps.move_center_to(2);
        let after = mps.to_state_vector().unwrap();
        let fidelity = dot(&before.amplitudes, &after.amplitudes).norm();
        assert_abs_diff_eq!(fidelity, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn overlap_matches_state_vector_inner_product() {
        let a = MatrixProductState::random(5, 4, 1, 0);
        let b = MatrixProductState::random(5, 4, 2, 0);
        let via_mps = a.overlap(&b);
        let va = a.to_state_vector().unwrap();
        let vb = b.to_state_vector().unwrap();
        let direct = dot(&va.amplitudes, &vb.amplitudes);
        assert!((via_mps - direct).norm() < 1e-10);
    }

    #[test]
    fn product_mps_has_zero_entropy() {
        // all bond dims 1
        let mut mps = MatrixProductState::random(5, 1, 7, 0);
        let e = mps_entropy(&mut mps, 2).unwrap();
        assert_abs_diff_eq!(e.entropy_bits, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn mps_entropy_matches_state_vector_entropy() {
        let mut mps = MatrixProductState::random(8, 6, 11, 2);
        for cut in [2usize, 4, 6] {
            let e_mps = mps_entropy(&mut mps, cut).unwrap();
            let v = mps.to_state_vector().unwrap();
            let e_sv = observables::entanglement_entropy(&v, cut).unwrap();
            assert_abs_diff_eq!(e_mps.entropy_bits, e_sv.entropy_bits, epsilon = 1e-8);
        }
    }

    #[test]
    fn mps_correlation_matches_state_vector_and_is_symmetric() {
        let mut mps = MatrixProductState::random(7, 6, 13, 0);
        let v = mps.to_state_vector().unwrap();
        for (j, k) in [(1usize, 4usize), (2, 7), (3, 5)] {
            let via_mps = mps_correlation(&mut mps, j, k, SpinConvention::SpinHalf).unwrap();
            let via_sv =
                observables::correlation_fluctuation(&v, j, k, SpinConvention::SpinHalf).unwrap();
            assert_abs_diff_eq!(via_mps, via_sv, epsilon = 1e-10);
            let swapped = mps_correlation(&mut mps, k, j, SpinConvention::SpinHalf).unwrap();
            assert_abs_diff_eq!(via_mps, swapped, epsilon = 1e-12);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = std::env::temp_dir().join("tsre_mps_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let prefix = dir.join("state");
        let mps = MatrixProductState::random(6, 5, 21, 3);
        save_checkpoint(&mps, (Some(21), &[-1.0, -1.5]), &prefix).unwrap();
        let back = load_checkpoint(&prefix).unwrap();
        assert_eq!(back.n_sites, mps.n_sites);
        let fidelity = mps.overlap(&back).norm();
        assert_abs_diff_eq!(fidelity, 1.0, epsilon = 1e-12);
    }
}
