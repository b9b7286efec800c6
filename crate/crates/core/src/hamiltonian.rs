//! The ensemble Hamiltonian as a matrix-free operator on the 2^N spin space.
//!
//! ```text
//! H = sum_(j,k) mu(j,k) sigma_j . A^(j,k) sigma_k  +  sum_j lambda(j) b^(j) . sigma_j
//! ```
//!
//! Spin operators: the component algebra `[s^a, s^b] = i eps_abc s^c` is the
//! spin-1/2 normalization `s = pauli / 2`, which is the default here. The
//! `Pauli` convention (eigenvalues +-1, `[.,.] = 2i eps`) is available as a
//! switch; dimensionless observables do not depend on the choice, but the
//! absolute lambda scale does.
//!
//! Basis convention: computational basis, spin `j` is bit `j-1` counting
//! from the least significant bit, bit value 0 is the +1 eigenstate of the
//! third spin component.
//!
//! Every bond contributes nine two-site component pairs; these are folded
//! into one 4x4 block per edge so an apply costs four complex multiplies
//! per basis state per bond. Application order is fixed (bonds in edge
//! order, then fields in vertex order) so reruns are bit-identical.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{scaled_hamiltonian_inputs, TsreSample};
use crate::error::{Result, TsreError};
use crate::linalg::{dot, norm};

/// Largest N for which dense 2^N x 2^N matrices may be materialized.
pub const DENSE_MAX_SPINS: usize = 12;

/// Spin-operator normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinConvention {
    /// `s = pauli/2`, satisfying `[s^a, s^b] = i eps_abc s^c`.
    #[default]
    SpinHalf,
    /// Bare Pauli matrices, eigenvalues +-1.
    Pauli,
}

impl SpinConvention {
    pub fn factor(self) -> f64 {
        match self {
            SpinConvention::SpinHalf => 0.5,
            SpinConvention::Pauli => 1.0,
        }
    }
}

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// The three spin component matrices in the stored basis, scaled by the
/// convention factor.
pub fn spin_matrices(convention: SpinConvention) -> [[[C; 2]; 2]; 3] {
    let f = convention.factor();
    [
        // s^1
        [[c(0.0, 0.0), c(f, 0.0)], [c(f, 0.0), c(0.0, 0.0)]],
        // s^2
        [[c(0.0, 0.0), c(0.0, -f)], [c(0.0, f), c(0.0, 0.0)]],
        // s^3
        [[c(f, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-f, 0.0)]],
    ]
}

/// State vector over the computational basis of `n_spins` spins.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    pub amplitudes: Vec<C>,
    pub n_spins: usize,
}

impl SpinState {
    pub fn zero(n_spins: usize) -> Self {
        Self {
            amplitudes: vec![C::new(0.0, 0.0); 1 << n_spins],
            n_spins,
        }
    }

    pub fn from_amplitudes(n_spins: usize, amplitudes: Vec<C>) -> Result<Self> {
        if amplitudes.len() != 1 << n_spins {
            return Err(TsreError::ShapeMismatch {
                expected: 1 << n_spins,
                got: amplitudes.len(),
            });
        }
        Ok(Self { amplitudes, n_spins })
    }

    /// Computational basis state with the given bit pattern.
    pub fn basis_state(n_spins: usize, bits: usize) -> Self {
        let mut s = Self::zero(n_spins);
        s.amplitudes[bits] = C::new(1.0, 0.0);
        s
    }

    /// Deterministic pseudo-random unit vector keyed by `(seed, tag)`.
    pub fn random_unit(n_spins: usize, seed: u64, tag: u64) -> Self {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut rng = crate::ensemble::element_rng(seed, tag, 0x4000_0000);
        let mut amplitudes: Vec<C> = (0..1usize << n_spins)
            .map(|_| {
                c(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                )
            })
            .collect();
        let n = norm(&amplitudes);
        for a in amplitudes.iter_mut() {
            *a /= n;
        }
        Self { amplitudes, n_spins }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let dev = (self.norm() - 1.0).abs();
        if dev > tol {
            Err(TsreError::NotNormalized(dev))
        } else {
            Ok(())
        }
    }
}

struct BondTerm {
    mask_j: usize,
    mask_k: usize,
    /// `block[row][col]` with `row = 2*bit_j + bit_k` of the output state
    /// and `col` likewise for the input state.
    block: [[C; 4]; 4],
}

struct FieldTerm {
    mask_j: usize,
    block: [[C; 2]; 2],
}

/// Matrix-free Hermitian operator for one ensemble member.
pub struct HamiltonianOperator {
    n_spins: usize,
    convention: SpinConvention,
    bond_terms: Vec<BondTerm>,
    field_terms: Vec<FieldTerm>,
    /// Strength-weighted couplings kept for the dense oracle path.
    effective_bonds: Vec<crate::ensemble::BondMatrix>,
    effective_fields: Vec<crate::ensemble::FieldVector>,
    edges: Vec<(usize, usize)>,
}

impl HamiltonianOperator {
    pub fn new(sample: &TsreSample, convention: SpinConvention) -> Self {
        let (bonds, fields) = scaled_hamiltonian_inputs(sample);
        let s = spin_matrices(convention);
        let n = sample.graph.n_vertices();

        let bond_terms = sample
            .graph
            .edges()
            .iter()
            .zip(bonds.iter())
            .map(|(&(j, k), a)| {
                let mut block = [[c(0.0, 0.0); 4]; 4];
                for (bj_out, bk_out, bj_in, bk_in) in
                    bit_quadruples()
                {
                    let row = 2 * bj_out + bk_out;
                    let col = 2 * bj_in + bk_in;
                    let mut acc = c(0.0, 0.0);
                    for alpha in 0..3 {
                        for beta in 0..3 {
                            acc += s[alpha][bj_out][bj_in]
                                * s[beta][bk_out][bk_in]
                                * a[(alpha, beta)];
                        }
                    }
                    block[row][col] = acc;
                }
                BondTerm {
                    mask_j: 1 << (j - 1),
                    mask_k: 1 << (k - 1),
                    block,
                }
            })
            .collect();

        let field_terms = (1..=n)
            .zip(fields.iter())
            .filter(|(_, f)| f.norm() != 0.0)
            .map(|(j, f)| {
                let mut block = [[c(0.0, 0.0); 2]; 2];
                for b_out in 0..2 {
                    for b_in in 0..2 {
                        let mut acc = c(0.0, 0.0);
                        for alpha in 0..3 {
                            acc += s[alpha][b_out][b_in] * f[alpha];
                        }
                        block[b_out][b_in] = acc;
                    }
                }
                FieldTerm {
                    mask_j: 1 << (j - 1),
                    block,
                }
            })
            .collect();

        Self {
            n_spins: n,
            convention,
            bond_terms,
            field_terms,
            effective_bonds: bonds,
            effective_fields: fields,
            edges: sample.graph.edges().to_vec(),
        }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }

    pub fn convention(&self) -> SpinConvention {
        self.convention
    }

    /// y = H x on raw slices; `x` and `y` must both have length 2^N.
    pub fn apply_slice(&self, x: &[C], y: &mut [C]) {
        let dim = self.dim();
        debug_assert_eq!(x.len(), dim);
        debug_assert_eq!(y.len(), dim);
        y.fill(c(0.0, 0.0));
        for t in &self.bond_terms {
            let (mj, mk) = (t.mask_j, t.mask_k);
            let both = mj | mk;
            for i in 0..dim {
                let bj = usize::from(i & mj != 0);
                let bk = usize::from(i & mk != 0);
                let row = &t.block[2 * bj + bk];
                let base = i & !both;
                y[i] += row[0] * x[base]
                    + row[1] * x[base | mk]
                    + row[2] * x[base | mj]
                    + row[3] * x[base | both];
            }
        }
        for t in &self.field_terms {
            let mj = t.mask_j;
            for i in 0..dim {
                let bj = usize::from(i & mj != 0);
                let row = &t.block[bj];
                let base = i & !mj;
                y[i] += row[0] * x[base] + row[1] * x[base | mj];
            }
        }
    }

    /// y = H x without materializing H.
    pub fn apply(&self, x: &SpinState) -> Result<SpinState> {
        if x.dim() != self.dim() {
            return Err(TsreError::ShapeMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        let mut y = SpinState::zero(self.n_spins);
        self.apply_slice(&x.amplitudes, &mut y.amplitudes);
        Ok(y)
    }

    /// Explicit Hermitian matrix, built independently of the matrix-free
    /// path by Kronecker products of single-site operators. Guarded to
    /// N <= 12.
    pub fn dense(&self) -> Result<DMatrix<C>> {
        if self.n_spins > DENSE_MAX_SPINS {
            return Err(TsreError::ResourceLimit(format!(
                "dense matrix for N = {} exceeds the N <= {DENSE_MAX_SPINS} guard",
                self.n_spins
            )));
        }
        let dim = self.dim();
        let s = spin_matrices(self.convention);
        let site = |alpha: usize| {
            DMatrix::from_fn(2, 2, |r, col| s[alpha][r][col])
        };
        let eye = DMatrix::<C>::identity(2, 2);
        // site 1 is the fastest index, so it sits rightmost in the product
        let embed = |ops: &[(usize, &DMatrix<C>)]| -> DMatrix<C> {
            let mut acc = DMatrix::<C>::identity(1, 1);
            for j in 1..=self.n_spins {
                let m = ops
                    .iter()
                    .find(|&&(site_idx, _)| site_idx == j)
                    .map(|&(_, m)| m)
                    .unwrap_or(&eye);
                acc = m.kronecker(&acc);
            }
            acc
        };

        let mut h = DMatrix::<C>::zeros(dim, dim);
        for (&(j, k), a) in self.edges.iter().zip(self.effective_bonds.iter()) {
            for alpha in 0..3 {
                for beta in 0..3 {
                    let w = a[(alpha, beta)];
                    if w == 0.0 {
                        continue;
                    }
                    let sj = site(alpha);
                    let sk = site(beta);
                    h += embed(&[(j, &sj), (k, &sk)]) * c(w, 0.0);
                }
            }
        }
        for (j, f) in (1..=self.n_spins).zip(self.effective_fields.iter()) {
            for alpha in 0..3 {
                let w = f[alpha];
                if w == 0.0 {
                    continue;
                }
                let sj = site(alpha);
                h += embed(&[(j, &sj)]) * c(w, 0.0);
            }
        }
        Ok(h)
    }

    /// Full dense spectrum in ascending order. Same N guard as [`dense`](Self::dense).
    pub fn dense_spectrum(&self) -> Result<Vec<f64>> {
        let h = self.dense()?;
        let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(ev)
    }

    /// Anti-unitary time reversal `T: sigma -> -sigma`, realized as the
    /// product of single-site second-component rotations composed with
    /// complex conjugation in the computational basis.
    pub fn time_reversal(x: &SpinState) -> SpinState {
        let n = x.n_spins;
        let mask = (1usize << n) - 1;
        let mut out = SpinState::zero(n);
        for i in 0..x.dim() {
            let sign = if (n - (i.count_ones() as usize)) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            out.amplitudes[i ^ mask] = c(sign, 0.0) * x.amplitudes[i].conj();
        }
        out
    }

    /// Estimates `|| H T - T H ||` by the largest residual over a handful of
    /// deterministic random unit vectors, without materializing anything.
    pub fn time_reversal_commutator_norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for probe in 0..8u64 {
            let x = SpinState::random_unit(self.n_spins, 0x5eed, probe);
            let hx = self.apply(&x).expect("dimension matches");
            let thx = Self::time_reversal(&hx);
            let tx = Self::time_reversal(&x);
            let htx = self.apply(&tx).expect("dimension matches");
            let mut diff = 0.0f64;
            for (a, b) in htx.amplitudes.iter().zip(thx.amplitudes.iter()) {
                diff += (a - b).norm_sqr();
            }
            worst = worst.max(diff.sqrt());
        }
        worst
    }

    /// `<x|H|y>` without materializing H.
    pub fn expectation(&self, x: &SpinState, y: &SpinState) -> Result<C> {
        let hy = self.apply(y)?;
        Ok(dot(&x.amplitudes, &hy.amplitudes))
    }
}

// all sixteen (bj_out, bk_out, bj_in, bk_in) combinations
fn bit_quadruples() -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..16).map(|i| ((i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::sample;
    use crate::graph::InteractionGraph;
    use approx::assert_abs_diff_eq;
    use nalgebra::{Matrix3, Vector3};

    fn zero_field_sample(n: usize, seed: u64) -> TsreSample {
        let g = InteractionGraph::build_chain(n, 1.0, 0.0).unwrap();
        sample(&g, seed, 0)
    }

    #[test]
    fn spin_algebra_commutators() {
        for (conv, scale) in [(SpinConvention::SpinHalf, 1.0), (SpinConvention::Pauli, 2.0)] {
            let s = spin_matrices(conv);
            let m = |a: &[[C; 2]; 2]| DMatrix::from_fn(2, 2, |r, c_| a[r][c_]);
            for (a, b, g) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
                let comm = m(&s[a]) * m(&s[b]) - m(&s[b]) * m(&s[a]);
                let target = m(&s[g]) * c(0.0, scale);
                assert!((comm - target).norm() < 1e-14, "{conv:?} algebra");
            }
        }
    }

    /// N=2, diagonal bond (a1,a2,a3), lambda=0: the Bell basis diagonalizes
    /// each term, giving levels {a1-a2+a3, -a1+a2+a3, a1+a2-a3, -a1-a2-a3}
    /// scaled by the convention factor squared.
    #[test]
    fn two_spin_diagonal_bond_levels() {
        let g = InteractionGraph::build_chain(2, 1.0, 0.0).unwrap();
        let mut s = sample(&g, 1, 0);
        let (a1, a2, a3) = (3.0, 2.0, 1.0);
        s.bonds[0] = Matrix3::from_diagonal(&Vector3::new(a1, a2, a3));
        for conv in [SpinConvention::SpinHalf, SpinConvention::Pauli] {
            let f2 = conv.factor() * conv.factor();
            let h = HamiltonianOperator::new(&s, conv);
            let got = h.dense_spectrum().unwrap();
            let mut want = [
                a1 - a2 + a3,
                -a1 + a2 + a3,
                a1 + a2 - a3,
                -a1 - a2 - a3,
            ]
            .map(|e| e * f2);
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (g_, w) in got.iter().zip(want.iter()) {
                assert_abs_diff_eq!(g_, w, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn apply_is_linear() {
        let s = zero_field_sample(5, 9);
        let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf);
        let x = SpinState::random_unit(5, 1, 0);
        let y = SpinState::random_unit(5, 1, 1);
        let (alpha, beta) = (c(0.7, -0.3), c(-1.1, 0.4));
        let mut combo = SpinState::zero(5);
        for i in 0..combo.dim() {
            combo.amplitudes[i] = alpha * x.amplitudes[i] + beta * y.amplitudes[i];
        }
        let lhs = h.apply(&combo).unwrap();
        let hx = h.apply(&x).unwrap();
        let hy = h.apply(&y).unwrap();
        for i in 0..lhs.dim() {
            let rhs = alpha * hx.amplitudes[i] + beta * hy.amplitudes[i];
            assert!((lhs.amplitudes[i] - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn apply_matches_dense_at_small_n() {
        for n in 2..=6 {
            let g = InteractionGraph::build_chain(n, 1.0, 0.8).unwrap();
            let s = sample(&g, 100 + n as u64, 0);
            let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf);
            let dense = h.dense().unwrap();
            let x = SpinState::random_unit(n, 2, n as u64);
            let xv = nalgebra::DVector::from_column_slice(&x.amplitudes);
            let want = &dense * &xv;
            let got = h.apply(&x).unwrap();
            for i in 0..got.dim() {
                assert!(
                    (got.amplitudes[i] - want[i]).norm() < 1e-12,
                    "N={n} deviation {}",
                    (got.amplitudes[i] - want[i]).norm()
                );
            }
        }
    }

    #[test]
    fn dense_zero_sample_is_zero_matrix() {
        let g = InteractionGraph::build_chain(2, 1.0, 1.0).unwrap();
        let mut s = sample(&g, 4, 0);
        s.bonds[0] = Matrix3::zeros();
        s.fields[0] = Vector3::zeros();
        s.fields[1] = Vector3::zeros();
        let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf);
        assert_eq!(h.dense().unwrap().norm(), 0.0);
    }

    #[test]
    fn dense_is_hermitian_and_traceless() {
        let g = InteractionGraph::build_ring(4, 1.0, 0.9).unwrap();
        let s = sample(&g, 12, 0);
        let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf).dense().unwrap();
        let herm_dev = (&h - h.adjoint()).norm();
        assert!(herm_dev < 1e-14);
        assert!(h.trace().norm() < 1e-12);
    }

    #[test]
    fn hermiticity_spot_check_matrix_free() {
        let g = InteractionGraph::build_chain(7, 1.0, 0.5).unwrap();
        let s = sample(&g, 31, 0);
        let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf);
        for t in 0..4 {
            let x = SpinState::random_unit(7, 5, 2 * t);
            let y = SpinState::random_unit(7, 5, 2 * t + 1);
            let xy = h.expectation(&x, &y).unwrap();
            let yx = h.expectation(&y, &x).unwrap();
            assert!((xy - yx.conj()).norm() < 1e-10);
        }
    }

    /// trace(H^2)/2^N = f^4 sum_e |B_e|_F^2 + f^2 sum_v |f_v|^2 with f the
    /// convention factor; checked against the dense trace at N=4.
    #[test]
    fn energy_scale_identity() {
        let g = InteractionGraph::build_chain(4, 1.0, 0.7).unwrap();
        let s = sample(&g, 77, 0);
        for conv in [SpinConvention::SpinHalf, SpinConvention::Pauli] {
            let f = conv.factor();
            let h = HamiltonianOperator::new(&s, conv);
            let dense = h.dense().unwrap();
            let tr_h2 = (&dense * &dense).trace().re / dense.nrows() as f64;
            let (bonds, fields) = scaled_hamiltonian_inputs(&s);
            let b2: f64 = bonds.iter().map(|b| b.norm_squared()).sum();
            let f2: f64 = fields.iter().map(|v| v.norm_squared()).sum();
            let want = f.powi(4) * b2 + f.powi(2) * f2;
            assert_abs_diff_eq!(tr_h2, want, epsilon = 1e-10 * want.abs().max(1.0));
        }
    }

    #[test]
    fn time_reversal_commutes_iff_no_field() {
        let s = zero_field_sample(6, 41);
        let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf);
        assert!(h.time_reversal_commutator_norm() < 1e-10);

        let g = InteractionGraph::build_chain(6, 1.0, 1.0).unwrap();
        let s = sample(&g, 41, 0);
        let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf);
        assert!(h.time_reversal_commutator_norm() > 0.1);
    }

    #[test]
    fn time_reversal_squares_to_minus_one_for_odd_n() {
        // T^2 = (-1)^N; for odd N this drives Kramers degeneracy
        let x = SpinState::random_unit(5, 3, 0);
        let ttx = HamiltonianOperator::time_reversal(&HamiltonianOperator::time_reversal(&x));
        for i in 0..x.dim() {
            assert!((ttx.amplitudes[i] + x.amplitudes[i]).norm() < 1e-14);
        }
        let x = SpinState::random_unit(4, 3, 1);
        let ttx = HamiltonianOperator::time_reversal(&HamiltonianOperator::time_reversal(&x));
        for i in 0..x.dim() {
            assert!((ttx.amplitudes[i] - x.amplitudes[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn kramers_degeneracy_odd_n_dense() {
        let s = zero_field_sample(5, 13);
        let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf);
        let ev = h.dense_spectrum().unwrap();
        let range = ev.last().unwrap() - ev.first().unwrap();
        for pair in ev.chunks(2) {
            assert!(
                (pair[1] - pair[0]).abs() < 1e-9 * range,
                "pair split {} exceeds tolerance",
                pair[1] - pair[0]
            );
        }
    }

    #[test]
    fn apply_rejects_wrong_dimension() {
        let s = zero_field_sample(4, 2);
        let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf);
        let x = SpinState::random_unit(3, 1, 0);
        assert!(matches!(
            h.apply(&x),
            Err(TsreError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn dense_guard_rejects_large_n() {
        let g = InteractionGraph::build_chain(13, 1.0, 0.0).unwrap();
        let s = sample(&g, 1, 0);
        let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf);
        assert!(matches!(h.dense(), Err(TsreError::ResourceLimit(_))));
    }
}
