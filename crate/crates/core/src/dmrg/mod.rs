//! Finite-size DMRG for open disordered chains: matrix-product-state
//! ground and first-excited states beyond the exact-diagonalization
//! ceiling, cross-validated against the Krylov solver at small N.

mod ground;
mod mpo;
mod mps;

pub use ground::{
    default_penalty_weight, dmrg_first_excited, dmrg_ground, expectation_mpo, DmrgDiagnostics,
    DmrgOptions, DmrgResult,
};
pub use mpo::{build_mpo, MatrixProductOperator};
pub use mps::{
    load_checkpoint, mps_correlation, mps_entropy, save_checkpoint, MatrixProductState,
    MpsManifest,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::{lowest_two, SolverOptions};
    use crate::ensemble::sample;
    use crate::graph::InteractionGraph;
    use crate::hamiltonian::{HamiltonianOperator, SpinConvention};
    use crate::linalg::dot;
    use crate::observables;
    use approx::assert_abs_diff_eq;

    fn chain_sample(n: usize, lambda: f64, seed: u64) -> crate::ensemble::TsreSample {
        let g = InteractionGraph::build_chain(n, 1.0, lambda).unwrap();
        sample(&g, seed, 0)
    }

    #[test]
    fn mpo_expectation_matches_dense_on_random_mps() {
        let s = chain_sample(5, 0.8, 71);
        let mpo = build_mpo(&s, SpinConvention::SpinHalf).unwrap();
        let mps = MatrixProductState::random(5, 6, 9, 4);
        let via_env = expectation_mpo(&mps, &mpo);

        let v = mps.to_state_vector().unwrap();
        let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf);
        let hv = h.apply(&v).unwrap();
        let direct = dot(&v.amplitudes, &hv.amplitudes).re;
        assert_abs_diff_eq!(via_env, direct, epsilon = 1e-10);
    }

    #[test]
    fn ground_state_matches_exact_diagonalization() {
        for (n, lambda, seed) in [(6usize, 1.0, 5u64), (8, 0.0, 6), (10, 1.0, 7)] {
            let s = chain_sample(n, lambda, seed);
            let mpo = build_mpo(&s, SpinConvention::SpinHalf).unwrap();
            let opts = DmrgOptions {
                chi_max: 64,
                seed_key: (seed, 0),
                ..DmrgOptions::default()
            };
            let result = dmrg_ground(&mpo, &opts).unwrap();
            assert!(result.diagnostics.converged);

            let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf);
            let exact = lowest_two(&h, &SolverOptions::with_key(seed, 0)).unwrap();
            assert_abs_diff_eq!(result.energy, exact.e0, epsilon = 1e-6);
        }
    }

    #[test]
    fn sweep_energies_are_monotone_after_ramp() {
        let s = chain_sample(10, 0.7, 11);
        let mpo = build_mpo(&s, SpinConvention::SpinHalf).unwrap();
        let opts = DmrgOptions {
            chi_max: 64,
            seed_key: (11, 0),
            ..DmrgOptions::default()
        };
        let result = dmrg_ground(&mpo, &opts).unwrap();
        let e = &result.diagnostics.sweep_energies;
        assert!(e.len() >= 4);
        let scale = e.last().unwrap().abs().max(1.0);
        for w in e.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12 * scale,
                "energy rose from {} to {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn larger_bond_dimension_never_raises_converged_energy() {
        let s = chain_sample(10, 0.5, 23);
        let mpo = build_mpo(&s, SpinConvention::SpinHalf).unwrap();
        let mut last = f64::INFINITY;
        for chi in [8usize, 16, 32, 64] {
            let opts = DmrgOptions {
                chi_max: chi,
                seed_key: (23, 0),
                ..DmrgOptions::default()
            };
            let result = dmrg_ground(&mpo, &opts).unwrap();
            assert!(
                result.energy <= last + 1e-10,
                "chi={chi} energy {} above {}",
                result.energy,
                last
            );
            last = result.energy;
        }
    }

    #[test]
    fn product_state_cap_stays_above_true_ground_energy() {
        let s = chain_sample(6, 2.0, 31);
        let mpo = build_mpo(&s, SpinConvention::SpinHalf).unwrap();
        let opts = DmrgOptions {
            chi_max: 1,
            seed_key: (31, 0),
            ..DmrgOptions::default()
        };
        let result = dmrg_ground(&mpo, &opts).unwrap();
        let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf);
        let exact = lowest_two(&h, &SolverOptions::with_key(31, 0)).unwrap();
        assert!(result.energy >= exact.e0 - 1e-9);
    }

    #[test]
    fn excited_state_matches_exact_and_is_orthogonal() {
        let s = chain_sample(8, 1.0, 41);
        let mpo = build_mpo(&s, SpinConvention::SpinHalf).unwrap();
        let opts = DmrgOptions {
            chi_max: 32,
            seed_key: (41, 0),
            ..DmrgOptions::default()
        };
        let ground = dmrg_ground(&mpo, &opts).unwrap();
        let w = default_penalty_weight(&ground, &mpo);
        let excited = dmrg_first_excited(&mpo, &ground, w, &opts).unwrap();

        let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf);
        let exact = lowest_two(&h, &SolverOptions::with_key(41, 0)).unwrap();
        assert_abs_diff_eq!(ground.energy, exact.e0, epsilon = 1e-7);
        assert_abs_diff_eq!(excited.energy, exact.e1, epsilon = 1e-5);
        assert!(ground.mps.overlap(&excited.mps).norm() < 1e-6);
    }

    #[test]
    fn undersized_penalty_collapses_to_ground_and_errors() {
        let s = chain_sample(6, 1.0, 43);
        let mpo = build_mpo(&s, SpinConvention::SpinHalf).unwrap();
        let opts = DmrgOptions {
            chi_max: 16,
            seed_key: (43, 0),
            ..DmrgOptions::default()
        };
        let ground = dmrg_ground(&mpo, &opts).unwrap();
        // a penalty far below the gap scale cannot keep the search away
        // from the ground state
        match dmrg_first_excited(&mpo, &ground, 1e-12, &opts) {
            Err(crate::TsreError::ExcitedStateFailure { overlap }) => {
                assert!(overlap > 0.5);
            }
            other => panic!("expected excited-state failure, got {:?}", other.map(|r| r.energy)),
        }
    }

    #[test]
    fn dmrg_entropy_matches_exact_ground_state() {
        let s = chain_sample(10, 1.0, 53);
        let mpo = build_mpo(&s, SpinConvention::SpinHalf).unwrap();
        let opts = DmrgOptions {
            chi_max: 64,
            seed_key: (53, 0),
            ..DmrgOptions::default()
        };
        let mut result = dmrg_ground(&mpo, &opts).unwrap();
        let e_mps = mps_entropy(&mut result.mps, 5).unwrap();

        let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf);
        let exact = lowest_two(&h, &SolverOptions::with_key(53, 0)).unwrap();
        let e_sv = observables::entanglement_entropy(&exact.psi0, 5).unwrap();
        assert_abs_diff_eq!(e_mps.entropy_bits, e_sv.entropy_bits, epsilon = 1e-4);
    }
}
