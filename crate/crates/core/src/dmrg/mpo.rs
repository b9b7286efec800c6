//! Matrix product operator encoding of the open-chain Hamiltonian.
//!
//! Operator bond dimension 5: channel 0 is the identity flow (nothing
//! placed yet), channels 1..3 carry a half-finished bond whose left factor
//! `s^a` was emitted at the previous site, channel 4 is the completed flow.
//! Site `j+1` closes the bond opened at site `j` with `sum_b A_ab s^b`, and
//! field terms hop straight from channel 0 to 4.

use nalgebra::DMatrix;
use ndarray::Array4;
use num_complex::Complex64;

use crate::ensemble::{scaled_hamiltonian_inputs, TsreSample};
use crate::error::{Result, TsreError};
use crate::hamiltonian::{spin_matrices, SpinConvention};

type C = Complex64;

const W: usize = 5;

/// MPO tensors indexed `(w_left, w_right, s_out, s_in)`. Boundary sites
/// carry trimmed bond dimensions (1, 5, ...) and (5, 1, ...).
pub struct MatrixProductOperator {
    pub tensors: Vec<Array4<C>>,
    pub n_sites: usize,
    pub convention: SpinConvention,
    /// Crude upper bound on the operator norm, used to scale penalties.
    pub norm_bound: f64,
}

/// Exact MPO for the Hamiltonian of an open-chain sample.
pub fn build_mpo(sample: &TsreSample, convention: SpinConvention) -> Result<MatrixProductOperator> {
    if !sample.graph.is_chain() {
        return Err(TsreError::UnsupportedTopology(
            "the MPO encoding needs an open chain".into(),
        ));
    }
    let n = sample.graph.n_vertices();
    let (bonds, fields) = scaled_hamiltonian_inputs(sample);
    let s = spin_matrices(convention);
    let zero = C::new(0.0, 0.0);

    // dense 5x5 operator-valued template per site, then trim boundaries
    let mut tensors = Vec::with_capacity(n);
    for site in 0..n {
        let mut w = Array4::<C>::from_elem((W, W, 2, 2), zero);
        // identity flows
        for (so, si) in [(0usize, 0usize), (1, 1)] {
            w[(0, 0, so, si)] = C::new(1.0, 0.0);
            w[(4, 4, so, si)] = C::new(1.0, 0.0);
        }
        // field term on the diagonal flow
        let f = &fields[site];
        for so in 0..2 {
            for si in 0..2 {
                let mut acc = zero;
                for alpha in 0..3 {
                    acc += s[alpha][so][si] * f[alpha];
                }
                w[(0, 4, so, si)] = acc;
            }
        }
        // open a bond to the right: emit s^alpha into channel alpha
        if site + 1 < n {
            for alpha in 0..3 {
                for so in 0..2 {
                    for si in 0..2 {
                        w[(0, 1 + alpha, so, si)] = s[alpha][so][si];
                    }
                }
            }
        }
        // close the bond opened at the previous site: edge (site, site+1)
        // in 1-based vertex labels is edge index site-1
        if site > 0 {
            let a = &bonds[site - 1];
            for alpha in 0..3 {
                for so in 0..2 {
                    for si in 0..2 {
                        let mut acc = zero;
                        for beta in 0..3 {
                            acc += s[beta][so][si] * a[(alpha, beta)];
                        }
                        w[(1 + alpha, 4, so, si)] = acc;
                    }
                }
            }
        }

        // trim boundary bond dimensions
        let t = if site == 0 {
            let mut t = Array4::<C>::from_elem((1, W, 2, 2), zero);
            for x in 0..W {
                for so in 0..2 {
                    for si in 0..2 {
                        t[(0, x, so, si)] = w[(0, x, so, si)];
                    }
                }
            }
            t
        } else if site == n - 1 {
            let mut t = Array4::<C>::from_elem((W, 1, 2, 2), zero);
            for v in 0..W {
                for so in 0..2 {
                    for si in 0..2 {
                        t[(v, 0, so, si)] = w[(v, 4, so, si)];
                    }
                }
            }
            t
        } else {
            w
        };
        tensors.push(t);
    }

    // norm bound: sum of term norms; each s^a has norm f = convention factor
    let f = convention.factor();
    let mut bound = 0.0;
    for a in &bonds {
        bound += f * f * a.iter().map(|x| x.abs()).sum::<f64>();
    }
    for b in &fields {
        bound += f * b.iter().map(|x| x.abs()).sum::<f64>();
    }

    Ok(MatrixProductOperator {
        tensors,
        n_sites: n,
        convention,
        norm_bound: bound,
    })
}

impl MatrixProductOperator {
    /// Contracts the MPO over all sites into a dense matrix (small N only).
    pub fn to_dense(&self) -> Result<DMatrix<C>> {
        if self.n_sites > crate::hamiltonian::DENSE_MAX_SPINS {
            return Err(TsreError::ResourceLimit(format!(
                "dense MPO contraction guarded to N <= {}",
                crate::hamiltonian::DENSE_MAX_SPINS
            )));
        }
        // acc[x] = operator on sites contracted so far, for right MPO index x
        let first = &self.tensors[0];
        let x_dim = first.dim().1;
        let mut acc: Vec<DMatrix<C>> = (0..x_dim)
            .map(|x| DMatrix::from_fn(2, 2, |r, c| first[(0, x, r, c)]))
            .collect();
        for site in 1..self.n_sites {
            let w = &self.tensors[site];
            let (wl, wr, _, _) = w.dim();
            assert_eq!(wl, acc.len());
            let dim = acc[0].nrows();
            let mut next: Vec<DMatrix<C>> = (0..wr)
                .map(|_| DMatrix::zeros(2 * dim, 2 * dim))
                .collect();
            for x in 0..wl {
                for y in 0..wr {
                    let block = DMatrix::from_fn(2, 2, |r, c| w[(x, y, r, c)]);
                    if block.iter().all(|z| z.norm_sqr() == 0.0) {
                        continue;
                    }
                    // higher site index = slower bits, so the new site is
                    // the left Kronecker factor
                    next[y] += block.kronecker(&acc[x]);
                }
            }
            acc = next;
        }
        assert_eq!(acc.len(), 1);
        Ok(acc.pop().unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::sample;
    use crate::graph::InteractionGraph;
    use crate::hamiltonian::HamiltonianOperator;
    use nalgebra::{Matrix3, Vector3};

    #[test]
    fn mpo_contraction_matches_dense_hamiltonian() {
        for (n, lambda) in [(2usize, 0.7), (4, 0.7), (5, 0.0)] {
            let g = InteractionGraph::build_chain(n, 1.0, lambda).unwrap();
            let s = sample(&g, 400 + n as u64, 0);
            let mpo = build_mpo(&s, SpinConvention::SpinHalf).unwrap();
            let dense_mpo = mpo.to_dense().unwrap();
            let dense_h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf)
                .dense()
                .unwrap();
            let dev = (&dense_mpo - &dense_h).norm();
            assert!(dev < 1e-10, "N={n} lambda={lambda} deviation {dev}");
        }
    }

    #[test]
    fn zero_field_leaves_identity_flow_empty() {
        let g = InteractionGraph::build_chain(4, 1.0, 0.0).unwrap();
        let s = sample(&g, 9, 0);
        let mpo = build_mpo(&s, SpinConvention::SpinHalf).unwrap();
        // interior sites: the (0 -> 4) block must vanish at lambda = 0
        for site in 1..3 {
            let w = &mpo.tensors[site];
            for so in 0..2 {
                for si in 0..2 {
                    assert_eq!(w[(0, 4, so, si)], C::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn zero_sample_contracts_to_zero_operator() {
        let g = InteractionGraph::build_chain(3, 1.0, 1.0).unwrap();
        let mut s = sample(&g, 1, 0);
        for b in s.bonds.iter_mut() {
            *b = Matrix3::zeros();
        }
        for f in s.fields.iter_mut() {
            *f = Vector3::zeros();
        }
        let mpo = build_mpo(&s, SpinConvention::SpinHalf).unwrap();
        assert_eq!(mpo.to_dense().unwrap().norm(), 0.0);
    }

    #[test]
    fn mpo_rejects_rings() {
        let g = InteractionGraph::build_ring(4, 1.0, 0.0).unwrap();
        let s = sample(&g, 2, 0);
        assert!(matches!(
            build_mpo(&s, SpinConvention::SpinHalf),
            Err(TsreError::UnsupportedTopology(_))
        ));
    }
}
