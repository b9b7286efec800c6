//! Ensemble orchestration: sweeps over `(N, lambda)` with reproducible
//! per-realization seeding, record collection, and the statistics and fits
//! used by the analyses.
//!
//! Determinism contract: every record is a pure function of
//! `(master_seed, N, lambda, realization)`, so a sweep produces an
//! identical record set regardless of worker count or completion order.
//! Failed realizations are recorded with their failure cause, never
//! dropped.

pub mod fits;
pub mod io;
pub mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dmrg;
use crate::eigensolver::{self, SolverOptions};
use crate::ensemble::{sample, TsreSample};
use crate::error::{Result, TsreError};
use crate::graph::InteractionGraph;
use crate::hamiltonian::{HamiltonianOperator, SpinConvention};
use crate::observables;

pub use fits::{
    fit_correlation_length, fit_entropy_saturation_divergence, fit_entropy_scaling,
    fit_entropy_scaling_even_odd, fit_gap_scaling, fit_log_lambda_divergence, DecayBase,
    EntropyScalingMode, FitModel, FitParameter, FitResult, GapScalingMode,
    SaturationDivergenceFit,
};
pub use stats::{
    gue_surmise_cdf, gue_surmise_density, ks_distance, mean_se, normalized_gap_histogram,
    poisson_cdf, poisson_density, Histogram,
};

/// Effective-rank threshold used for the recorded chi_eff.
pub const CHI_EFF_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepTopology {
    Chain,
    Ring,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum SolverChoice {
    Exact {
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
        #[serde(default = "default_basis_cap")]
        basis_cap: usize,
    },
    Dmrg {
        #[serde(default = "default_chi_max")]
        chi_max: usize,
        #[serde(default = "default_sweeps")]
        sweeps: usize,
        #[serde(default = "default_energy_tol")]
        energy_tol: f64,
    },
}

fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    800
}
fn default_basis_cap() -> usize {
    80
}
fn default_chi_max() -> usize {
    64
}
fn default_sweeps() -> usize {
    30
}
fn default_energy_tol() -> f64 {
    1e-9
}

impl Default for SolverChoice {
    fn default() -> Self {
        SolverChoice::Exact {
            tol: default_tol(),
            max_iter: default_max_iter(),
            basis_cap: default_basis_cap(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableToggles {
    #[serde(default = "yes")]
    pub gap: bool,
    #[serde(default = "yes")]
    pub entropy: bool,
    #[serde(default)]
    pub correlation: bool,
}

fn yes() -> bool {
    true
}

impl Default for ObservableToggles {
    fn default() -> Self {
        Self {
            gap: true,
            entropy: true,
            correlation: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizationOverride {
    pub n: usize,
    pub realizations: usize,
}

/// One sweep: the cross product of `n_list` and `lambda_list`, with
/// `realizations` members per cell (overridable per size).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub topology: SweepTopology,
    #[serde(default = "one")]
    pub mu: f64,
    pub n_list: Vec<usize>,
    pub lambda_list: Vec<f64>,
    pub realizations: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub realizations_per_n: Vec<RealizationOverride>,
    pub master_seed: u64,
    #[serde(default)]
    pub solver: SolverChoice,
    #[serde(default)]
    pub observables: ObservableToggles,
    #[serde(default)]
    pub convention: SpinConvention,
}

fn one() -> f64 {
    1.0
}

impl SweepConfig {
    pub fn realizations_for(&self, n: usize) -> usize {
        self.realizations_per_n
            .iter()
            .find(|o| o.n == n)
            .map(|o| o.realizations)
            .unwrap_or(self.realizations)
    }

    /// Validates the config; returns non-fatal warnings (Kramers cells).
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.realizations < 1 {
            return Err(TsreError::InvalidSize("realizations must be >= 1".into()));
        }
        if self.n_list.is_empty() || self.lambda_list.is_empty() {
            return Err(TsreError::InvalidSize(
                "n_list and lambda_list must be non-empty".into(),
            ));
        }
        if self.lambda_list.iter().any(|&l| l < 0.0 || !l.is_finite()) {
            return Err(TsreError::InvalidStrength(
                "lambda values must be finite and non-negative".into(),
            ));
        }
        for &n in &self.n_list {
            let min = match self.topology {
                SweepTopology::Chain => 2,
                SweepTopology::Ring => 3,
            };
            if n < min {
                return Err(TsreError::InvalidSize(format!(
                    "N = {n} too small for the requested topology"
                )));
            }
        }
        if matches!(self.solver, SolverChoice::Dmrg { .. })
            && self.topology == SweepTopology::Ring
        {
            return Err(TsreError::UnsupportedTopology(
                "the DMRG solver handles open chains only".into(),
            ));
        }
        if self.observables.correlation && self.topology != SweepTopology::Ring {
            return Err(TsreError::BoundaryMismatch(
                "the ring correlation profile needs the ring topology".into(),
            ));
        }
        let mut warnings = Vec::new();
        for &n in &self.n_list {
            if n % 2 == 1 && self.lambda_list.iter().any(|&l| l == 0.0) {
                warnings.push(format!(
                    "N = {n} with lambda = 0 is Kramers-degenerate; records will be flagged \
                     and excluded from gap statistics"
                ));
            }
        }
        Ok(warnings)
    }

    fn graph_for(&self, n: usize, lambda: f64) -> Result<InteractionGraph> {
        match self.topology {
            SweepTopology::Chain => InteractionGraph::build_chain(n, self.mu, lambda),
            SweepTopology::Ring => InteractionGraph::build_ring(n, self.mu, lambda),
        }
    }
}

/// Per-realization observables with solver diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub n: usize,
    pub lambda: f64,
    pub realization: u64,
    pub method: String,
    pub e0: Option<f64>,
    pub e1: Option<f64>,
    pub gap: Option<f64>,
    /// Symmetric-cut entanglement entropy of the ground state.
    pub entropy_bits: Option<f64>,
    /// Entropy of the second member of a flagged degenerate pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_bits_excited: Option<f64>,
    pub chi_eff: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_of_r: Option<Vec<f64>>,
    pub degenerate_flag: bool,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual1: Option<f64>,
    pub error: Option<String>,
}

impl EnsembleRecord {
    pub fn is_success(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub records: Vec<EnsembleRecord>,
    pub warnings: Vec<String>,
    pub n_failures: usize,
}

fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one `(N, lambda)` cell: realizations inside the cell use it
/// with their own realization index, so cells are statistically
/// independent and records reproducible in isolation.
pub fn cell_seed(master_seed: u64, n: usize, lambda: f64) -> u64 {
    mix(mix(master_seed, n as u64), lambda.to_bits())
}

/// Runs the sweep: one record per `(N, lambda, realization)`, ordered by
/// that key, deterministic for a fixed `master_seed`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome> {
    let warnings = cfg.validate()?;
    let mut tasks = Vec::new();
    for &n in &cfg.n_list {
        for &lambda in &cfg.lambda_list {
            for r in 0..cfg.realizations_for(n) {
                tasks.push((n, lambda, r as u64));
            }
        }
    }
    let mut records: Vec<EnsembleRecord> = tasks
        .into_par_iter()
        .map(|(n, lambda, r)| compute_record(cfg, n, lambda, r))
        .collect();
    records.sort_by(|a, b| {
        (a.n, a.lambda.to_bits(), a.realization).cmp(&(b.n, b.lambda.to_bits(), b.realization))
    });
    let n_failures = records.iter().filter(|r| !r.is_success()).count();
    Ok(SweepOutcome {
        records,
        warnings,
        n_failures,
    })
}

fn compute_record(cfg: &SweepConfig, n: usize, lambda: f64, realization: u64) -> EnsembleRecord {
    let mut record = EnsembleRecord {
        n,
        lambda,
        realization,
        method: match cfg.solver {
            SolverChoice::Exact { .. } => "exact".into(),
            SolverChoice::Dmrg { .. } => "dmrg".into(),
        },
        e0: None,
        e1: None,
        gap: None,
        entropy_bits: None,
        entropy_bits_excited: None,
        chi_eff: None,
        c_of_r: None,
        degenerate_flag: false,
        iterations: 0,
        residual0: None,
        residual1: None,
        error: None,
    };
    let graph = match cfg.graph_for(n, lambda) {
        Ok(g) => g,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let seed = cell_seed(cfg.master_seed, n, lambda);
    let s = sample(&graph, seed, realization);
    match &cfg.solver {
        SolverChoice::Exact {
            tol,
            max_iter,
            basis_cap,
        } => exact_record(cfg, &s, *tol, *max_iter, *basis_cap, &mut record),
        SolverChoice::Dmrg {
            chi_max,
            sweeps,
            energy_tol,
        } => dmrg_record(cfg, &s, *chi_max, *sweeps, *energy_tol, &mut record),
    }
    record
}

fn exact_record(
    cfg: &SweepConfig,
    s: &TsreSample,
    tol: f64,
    max_iter: usize,
    basis_cap: usize,
    record: &mut EnsembleRecord,
) {
    let h = HamiltonianOperator::new(s, cfg.convention);
    let opts = SolverOptions {
        tol,
        max_iter,
        basis_cap,
        start_key: (s.seed, s.realization_index),
    };
    let (psi0, psi1) = if cfg.observables.gap {
        match eigensolver::lowest_two(&h, &opts) {
            Ok(sol) => {
                record.e0 = Some(sol.e0);
                record.e1 = Some(sol.e1);
                record.gap = Some(sol.gap);
                record.degenerate_flag = sol.degenerate_flag;
                record.iterations = sol.iterations;
                record.residual0 = Some(sol.residual_norms.0);
                record.residual1 = Some(sol.residual_norms.1);
                (Some(sol.psi0), Some(sol.psi1))
            }
            Err(TsreError::Convergence {
                iterations,
                residual0,
                residual1,
                best,
            }) => {
                record.e0 = Some(best.e0);
                record.e1 = Some(best.e1);
                record.gap = Some(best.gap);
                record.degenerate_flag = best.degenerate_flag;
                record.iterations = iterations;
                record.residual0 = Some(residual0);
                record.residual1 = Some(residual1);
                record.error = Some("eigensolver did not converge".into());
                (None, None)
            }
            Err(e) => {
                record.error = Some(e.to_string());
                (None, None)
            }
        }
    } else {
        match eigensolver::lowest_one(&h, &opts) {
            Ok((e0, psi0, _)) => {
                record.e0 = Some(e0);
                (Some(psi0), None)
            }
            Err(TsreError::Convergence {
                iterations,
                residual0,
                ..
            }) => {
                record.iterations = iterations;
                record.residual0 = Some(residual0);
                record.error = Some("eigensolver did not converge".into());
                (None, None)
            }
            Err(e) => {
                record.error = Some(e.to_string());
                (None, None)
            }
        }
    };

    let Some(psi0) = psi0 else { return };
    let n = record.n;
    if cfg.observables.entropy {
        match observables::entanglement_entropy(&psi0, n / 2) {
            Ok(res) => {
                record.entropy_bits = Some(res.entropy_bits);
                record.chi_eff =
                    observables::effective_rank(&res.schmidt_spectrum, CHI_EFF_EPSILON).ok();
            }
            Err(e) => record.error = Some(format!("entropy: {e}")),
        }
        if record.degenerate_flag {
            if let Some(psi1) = &psi1 {
                record.entropy_bits_excited = observables::entanglement_entropy(psi1, n / 2)
                    .ok()
                    .map(|r| r.entropy_bits);
            }
        }
    }
    if cfg.observables.correlation {
        match observables::ring_correlation_profile(&psi0, &s.graph, cfg.convention) {
            Ok(profile) => record.c_of_r = Some(profile.c_of_r),
            Err(e) => record.error = Some(format!("correlation: {e}")),
        }
    }
}

fn dmrg_record(
    cfg: &SweepConfig,
    s: &TsreSample,
    chi_max: usize,
    sweeps: usize,
    energy_tol: f64,
    record: &mut EnsembleRecord,
) {
    let mpo = match dmrg::build_mpo(s, cfg.convention) {
        Ok(m) => m,
        Err(e) => {
            record.error = Some(e.to_string());
            return;
        }
    };
    let opts = dmrg::DmrgOptions {
        chi_max,
        max_sweeps: sweeps,
        energy_tol,
        seed_key: (s.seed, s.realization_index),
        ..dmrg::DmrgOptions::default()
    };
    let ground = match dmrg::dmrg_ground(&mpo, &opts) {
        Ok(g) => g,
        Err(e) => {
            record.error = Some(e.to_string());
            return;
        }
    };
    record.e0 = Some(ground.energy);
    record.iterations = ground.diagnostics.sweeps_run;
    if !ground.diagnostics.converged {
        record.error = Some("dmrg ground sweep did not converge".into());
    }
    if cfg.observables.gap && record.error.is_none() {
        let weight = dmrg::default_penalty_weight(&ground, &mpo);
        match dmrg::dmrg_first_excited(&mpo, &ground, weight, &opts) {
            Ok(excited) => {
                record.e1 = Some(excited.energy);
                record.gap = Some((excited.energy - ground.energy).max(0.0));
            }
            Err(e) => record.error = Some(e.to_string()),
        }
    }
    if cfg.observables.entropy {
        let mut mps = ground.mps;
        match dmrg::mps_entropy(&mut mps, record.n / 2) {
            Ok(res) => {
                record.entropy_bits = Some(res.entropy_bits);
                record.chi_eff =
                    observables::effective_rank(&res.schmidt_spectrum, CHI_EFF_EPSILON).ok();
            }
            Err(e) => record.error = Some(format!("entropy: {e}")),
        }
    }
}

/// Gap histogram for one `(N, lambda)` group of records; rejects mixed
/// groups, skips failed or flagged-degenerate records.
pub fn gap_histogram(records: &[EnsembleRecord], bins: usize) -> Result<Histogram> {
    let mut key: Option<(usize, u64)> = None;
    let mut gaps = Vec::new();
    for r in records {
        let k = (r.n, r.lambda.to_bits());
        match key {
            None => key = Some(k),
            Some(existing) if existing != k => {
                return Err(TsreError::MixedGroup(format!(
                    "(N={}, lambda={}) and (N={}, lambda={})",
                    existing.0,
                    f64::from_bits(existing.1),
                    r.n,
                    r.lambda
                )));
            }
            _ => {}
        }
        if r.is_success() && !r.degenerate_flag {
            if let Some(g) = r.gap {
                gaps.push(g);
            }
        }
    }
    normalized_gap_histogram(&gaps, bins)
}

/// Groups successful records by `(N, lambda)`, preserving key order.
pub fn group_records(
    records: &[EnsembleRecord],
) -> Vec<((usize, f64), Vec<&EnsembleRecord>)> {
    let mut out: Vec<((usize, f64), Vec<&EnsembleRecord>)> = Vec::new();
    for r in records {
        let key = (r.n, r.lambda);
        match out
            .iter_mut()
            .find(|(k, _)| k.0 == key.0 && k.1.to_bits() == key.1.to_bits())
        {
            Some((_, v)) => v.push(r),
            None => out.push((key, vec![r])),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> SweepConfig {
        SweepConfig {
            topology: SweepTopology::Chain,
            mu: 1.0,
            n_list: vec![4, 6],
            lambda_list: vec![1.0],
            realizations: 3,
            realizations_per_n: vec![],
            master_seed: 7,
            solver: SolverChoice::default(),
            observables: ObservableToggles::default(),
            convention: SpinConvention::SpinHalf,
        }
    }

    #[test]
    fn sweep_produces_one_record_per_cell_and_is_reproducible() {
        let cfg = tiny_config();
        let out1 = run_sweep(&cfg).unwrap();
        assert_eq!(out1.records.len(), 6);
        assert_eq!(out1.n_failures, 0);
        let out2 = run_sweep(&cfg).unwrap();
        let a = serde_json::to_string(&out1.records).unwrap();
        let b = serde_json::to_string(&out2.records).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_is_deterministic_across_worker_counts() {
        let cfg = tiny_config();
        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let pool2 = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let r1 = pool1.install(|| run_sweep(&cfg)).unwrap();
        let r2 = pool2.install(|| run_sweep(&cfg)).unwrap();
        assert_eq!(
            serde_json::to_string(&r1.records).unwrap(),
            serde_json::to_string(&r2.records).unwrap()
        );
    }

    #[test]
    fn kramers_cells_warn_and_flag() {
        let mut cfg = tiny_config();
        cfg.n_list = vec![5];
        cfg.lambda_list = vec![0.0];
        let out = run_sweep(&cfg).unwrap();
        assert!(!out.warnings.is_empty());
        assert!(out.records.iter().all(|r| r.degenerate_flag));
    }

    #[test]
    fn per_n_realization_override() {
        let mut cfg = tiny_config();
        cfg.realizations_per_n = vec![RealizationOverride {
            n: 6,
            realizations: 1,
        }];
        let out = run_sweep(&cfg).unwrap();
        assert_eq!(out.records.len(), 3 + 1);
    }

    #[test]
    fn config_validation_catches_bad_combinations() {
        let mut cfg = tiny_config();
        cfg.observables.correlation = true;
        assert!(run_sweep(&cfg).is_err());

        let mut cfg = tiny_config();
        cfg.topology = SweepTopology::Ring;
        cfg.solver = SolverChoice::Dmrg {
            chi_max: 16,
            sweeps: 10,
            energy_tol: 1e-8,
        };
        assert!(run_sweep(&cfg).is_err());

        let mut cfg = tiny_config();
        cfg.lambda_list = vec![-1.0];
        assert!(run_sweep(&cfg).is_err());
    }

    #[test]
    fn dmrg_sweep_records_match_exact_sweep() {
        let mut cfg = tiny_config();
        cfg.n_list = vec![6];
        cfg.realizations = 2;
        let exact = run_sweep(&cfg).unwrap();
        cfg.solver = SolverChoice::Dmrg {
            chi_max: 16,
            sweeps: 20,
            energy_tol: 1e-10,
        };
        let dmrg = run_sweep(&cfg).unwrap();
        for (a, b) in exact.records.iter().zip(dmrg.records.iter()) {
            assert_eq!(a.realization, b.realization);
            let (ea, eb) = (a.e0.unwrap(), b.e0.unwrap());
            assert!((ea - eb).abs() < 1e-6, "e0 {ea} vs {eb}");
            let (ga, gb) = (a.gap.unwrap(), b.gap.unwrap());
            assert!((ga - gb).abs() < 1e-5, "gap {ga} vs {gb}");
            let (sa, sb) = (a.entropy_bits.unwrap(), b.entropy_bits.unwrap());
            assert!((sa - sb).abs() < 1e-4, "entropy {sa} vs {sb}");
        }
    }

    #[test]
    fn gap_histogram_rejects_mixed_groups() {
        let cfg = tiny_config();
        let out = run_sweep(&cfg).unwrap();
        assert!(matches!(
            gap_histogram(&out.records, 40),
            Err(TsreError::MixedGroup(_))
        ));
        let only_n4: Vec<EnsembleRecord> = out
            .records
            .iter()
            .filter(|r| r.n == 4)
            .cloned()
            .collect();
        let h = gap_histogram(&only_n4, 40).unwrap();
        assert!((h.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aggregation_is_permutation_invariant() {
        let cfg = tiny_config();
        let out = run_sweep(&cfg).unwrap();
        let gaps: Vec<f64> = out
            .records
            .iter()
            .filter(|r| r.n == 4)
            .map(|r| r.gap.unwrap())
            .collect();
        let (m1, s1) = mean_se(&gaps).unwrap();
        let mut reversed = gaps.clone();
        reversed.reverse();
        let (m2, s2) = mean_se(&reversed).unwrap();
        assert!((m1 - m2).abs() < 1e-12);
        assert!((s1 - s2).abs() < 1e-12);
    }
}
