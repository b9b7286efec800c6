//! Desk-scale sweep presets, one per figure-style analysis, so a full
//! reproduction run is a single command each.

use tsre_core::harness::{
    ObservableToggles, RealizationOverride, SolverChoice, SweepConfig, SweepTopology,
};

pub const PRESET_NAMES: &[&str] = &[
    "fig1-desk",
    "fig2-desk",
    "fig3-desk",
    "fig4-desk",
    "fig56-desk",
];

pub fn preset(name: &str, master_seed: u64) -> Option<SweepConfig> {
    let base = SweepConfig {
        topology: SweepTopology::Chain,
        mu: 1.0,
        n_list: vec![],
        lambda_list: vec![],
        realizations: 1,
        realizations_per_n: vec![],
        master_seed,
        solver: SolverChoice::default(),
        observables: ObservableToggles {
            gap: true,
            entropy: false,
            correlation: false,
        },
        convention: Default::default(),
    };
    let cfg = match name {
        // normalized gap distribution vs the GUE surmise
        "fig1-desk" => SweepConfig {
            n_list: vec![8, 10],
            lambda_list: vec![1.0],
            realizations: 2000,
            ..base
        },
        // gap scaling with system size, field on and off
        "fig2-desk" => SweepConfig {
            n_list: vec![8, 10, 12, 14],
            lambda_list: vec![0.0, 1.0],
            realizations: 500,
            ..base
        },
        // entanglement entropy scaling with size
        "fig3-desk" => SweepConfig {
            n_list: vec![8, 10, 12, 14, 16],
            lambda_list: vec![0.0, 1.0],
            realizations: 300,
            realizations_per_n: vec![
                RealizationOverride {
                    n: 12,
                    realizations: 250,
                },
                RealizationOverride {
                    n: 14,
                    realizations: 250,
                },
                RealizationOverride {
                    n: 16,
                    realizations: 200,
                },
            ],
            observables: ObservableToggles {
                gap: true,
                entropy: true,
                correlation: false,
            },
            ..base
        },
        // ring correlation fluctuation profiles
        "fig4-desk" => SweepConfig {
            topology: SweepTopology::Ring,
            n_list: vec![12, 16],
            lambda_list: vec![0.0, 1.0],
            realizations: 200,
            observables: ObservableToggles {
                gap: false,
                entropy: false,
                correlation: true,
            },
            ..base
        },
        // correlation length and entropy saturation vs field strength
        "fig56-desk" => SweepConfig {
            topology: SweepTopology::Ring,
            n_list: vec![8, 10, 12],
            lambda_list: vec![0.25, 0.5, 1.0, 2.0],
            realizations: 150,
            observables: ObservableToggles {
                gap: false,
                entropy: true,
                correlation: true,
            },
            ..base
        },
        _ => return None,
    };
    Some(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for name in PRESET_NAMES {
            let cfg = preset(name, 42).unwrap();
            cfg.validate().unwrap();
        }
        assert!(preset("fig9-desk", 42).is_none());
    }
}
