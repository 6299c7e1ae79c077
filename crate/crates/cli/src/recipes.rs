//! Named preconfigured experiments. Each recipe is a complete experiment
//! config that runs to success on defaults, so the catalog doubles as an
//! end-to-end verification harness.

use crate::config::ExperimentConfig;
use serde_json::json;

pub const RECIPE_NAMES: [&str; 12] = [
    "sync-n2",
    "desync-lemma5",
    "roundoff-sync",
    "soft-decay",
    "circle-shrink",
    "ly-tripling",
    "perturb-sharpness",
    "tau-composed-convergence",
    "meanfield-lebesgue",
    "meanfield-orbit",
    "diag-lemma",
    "G-contraction",
];

pub fn recipe(name: &str) -> Option<ExperimentConfig> {
    let value = match name {
        "sync-n2" => json!({
            "kind": "ensemble",
            "params": {
                "sim": {
                    "space": {"topology": "circle"},
                    "map": {"kind": "doubling"},
                    "rule": {"mode": "threshold", "epsilon": 0.01, "gamma": 0.0},
                    "init": {"random": {"n": 2}},
                    "horizon": 100000,
                    "sync_tolerance": 0.0
                },
                "trials": 1000,
                "expect_synced_fraction": 1.0,
                "expect_mean_hit_between": [25.0, 100.0]
            },
            "seed": 20240901u64
        }),
        "desync-lemma5" => json!({
            "kind": "lemma5",
            "params": {
                "mode": "distance",
                "a0": "9/1000",
                "b0": "2/1000",
                "epsilon": "1/100",
                "steps": 10000
            },
            "seed": 1u64
        }),
        "roundoff-sync" => json!({
            "kind": "lemma5",
            "params": {
                "mode": "position",
                "a0": "9/1000",
                "b0": "2/1000",
                "epsilon": "1/100",
                "steps": 5000,
                "arithmetic": {"quantized": {"bits": 10}},
                "trials": 12,
                "exact_horizon": 1000
            },
            "seed": 1234u64
        }),
        "soft-decay" => json!({
            "kind": "ensemble",
            "params": {
                "sim": {
                    "space": {"topology": "circle"},
                    "map": {"kind": "doubling"},
                    "rule": {"mode": "threshold", "epsilon": 0.01, "gamma": 0.4},
                    "init": {"random_cluster": {"n": 3, "spread": 0.01}},
                    "horizon": 50,
                    "arithmetic": "rational"
                },
                "trials": 100,
                "verify_decay_factor": 0.8
            },
            "seed": 31337u64
        }),
        "circle-shrink" => json!({
            "kind": "shrink",
            "params": { "n_values": [3, 4, 5, 6, 7, 8, 9, 10, 11, 12] }
        }),
        "ly-tripling" => json!({
            "kind": "ly_check",
            "params": {
                "map": {"kind": "tripling"},
                "n_bins": 243,
                "trials": 1000
            },
            "seed": 987654321u64
        }),
        "perturb-sharpness" => json!({
            "kind": "perturb_check",
            "params": {
                "intervals": [["1/4", "1/2"]],
                "slopes": ["1/2"],
                "n_bins": 16,
                "trials": 200
            },
            "seed": 2718u64
        }),
        "tau-composed-convergence" => json!({
            "kind": "convergence_study",
            "params": {
                "base": {"kind": "full_branch", "branches": 8},
                "interval_start": "1/4",
                "slope": "2/3",
                "deltas": ["1/10", "1/20", "1/40"],
                "n_bins": 480
            }
        }),
        "meanfield-lebesgue" => json!({
            "kind": "meanfield",
            "params": {
                "epsilon": 0.1,
                "gamma": 0.5,
                "init": "lebesgue",
                "n_bins": 256,
                "resolutions": [16, 64],
                "steps": 1,
                "check_lebesgue_residual": true
            }
        }),
        "meanfield-orbit" => json!({
            "kind": "meanfield",
            "params": {
                "epsilon": 0.1,
                "gamma": 0.5,
                "init": {"orbit": {"x0": "1/3", "period": 2}},
                "steps": 5,
                "expect_invariant": true
            }
        }),
        "diag-lemma" => json!({
            "kind": "diag_bounds",
            "params": {
                "n_bins": 100,
                "n_particles": 2,
                "epsilon": 0.1,
                "samples": 1000000,
                "expect_lower_sum": 0.1,
                "expect_mc": [0.19, 0.01]
            },
            "seed": 424242u64
        }),
        "G-contraction" => json!({
            "kind": "contraction_check",
            "params": {}
        }),
        _ => return None,
    };
    let config: ExperimentConfig =
        serde_json::from_value(value).expect("recipe configs are well-formed");
    Some(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_recipes_resolve() {
        for name in RECIPE_NAMES {
            assert!(recipe(name).is_some(), "recipe {name} missing");
        }
        assert_eq!(RECIPE_NAMES.len(), 12);
        assert!(recipe("nonsense").is_none());
    }
}
