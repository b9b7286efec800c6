//! Rough per-solve timings across sizes, for sizing ensemble runs.

use std::time::Instant;
use tsre_core::eigensolver::{lowest_one, lowest_two, SolverOptions};
use tsre_core::ensemble::sample;
use tsre_core::graph::InteractionGraph;
use tsre_core::hamiltonian::{HamiltonianOperator, SpinConvention};
use tsre_core::observables;

fn main() {
    for (n, lambda, reps, ring) in [
        (10usize, 1.0f64, 5usize, false),
        (10, 0.0, 5, false),
        (12, 1.0, 3, false),
        (12, 0.0, 3, false),
        (14, 1.0, 2, false),
        (14, 0.0, 2, false),
        (16, 1.0, 2, true),
        (16, 0.0, 2, true),
    ] {
        let g = if ring {
            InteractionGraph::build_ring(n, 1.0, lambda).unwrap()
        } else {
            InteractionGraph::build_chain(n, 1.0, lambda).unwrap()
        };
        // lowest_two timing
        let t0 = Instant::now();
        let mut iters = 0;
        for r in 0..reps {
            let s = sample(&g, 1000 + r as u64, r as u64);
            let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf);
            let sol = lowest_two(&h, &SolverOptions::with_key(s.seed, s.realization_index));
            match sol {
                Ok(sol) => iters += sol.iterations,
                Err(e) => println!("  solve failed: {e}"),
            }
        }
        let dt2 = t0.elapsed().as_secs_f64() / reps as f64;
        // ground-only timing + profile when ring
        let t0 = Instant::now();
        for r in 0..reps {
            let s = sample(&g, 2000 + r as u64, r as u64);
            let h = HamiltonianOperator::new(&s, SpinConvention::SpinHalf);
            if let Ok((_, psi, _)) = lowest_one(&h, &SolverOptions::with_key(s.seed, s.realization_index)) {
                if ring {
                    let _ = observables::ring_correlation_profile(&psi, &g, SpinConvention::SpinHalf).unwrap();
                } else {
                    let _ = observables::entanglement_entropy(&psi, n / 2).unwrap();
                }
            }
        }
        let dt1 = t0.elapsed().as_secs_f64() / reps as f64;
        println!(
            "N={n:2} lambda={lambda} ring={ring}: lowest_two {dt2:7.3}s (avg iters {}), ground+obs {dt1:7.3}s",
            iters / reps
        );
    }
}
