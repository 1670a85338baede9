//! Named configurations of AOS methods from the literature.
//!
//! Each literature preset pins the component choices and the
//! hyper-parameters its source fixes. Values the source leaves open come
//! from the tuned versions where those give one, and otherwise from the
//! defaults of the parameter structs (the middle of each tuning range).
//!
//! The tuned versions (`RecPM-AOS`, `PM-AdapSS-NN`, `F-AUC-MAB-tuned`,
//! `Compass-tuned`, `U-AOS-FW`) carry their tuned values verbatim.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::config::AosConfig;
use crate::engine::{DeParams, MutationStrategy};
use crate::metrics::OffspringMetric as Om;
use crate::policy::{
    ProbabilityChoice, ProbabilityKind as Pk, ProbabilityParams, QualityChoice, QualityKind as Qk, QualityParams,
    SelectionChoice, SelectionKind as Sk,
};
use crate::reward::{RewardChoice, RewardKind as Rk, RewardParams};
use crate::{Error, Result};

pub const CATALOG: [&str; 31] = [
    "Hybrid",
    "Op-adapt",
    "PDP",
    "ADOPP",
    "ADOPP-ext",
    "Adapt-NN",
    "Dyn-GEPv1",
    "Dyn-GEPv2",
    "SaDE",
    "MMRDE",
    "Compass",
    "PD-PM",
    "PR-PM",
    "Proj-PM",
    "F-AUC-MAB",
    "F-SR-MAB",
    "F-AUC-AP",
    "F-SR-AP",
    "F-AUC-PM",
    "F-SR-PM",
    "RecPM-AOS",
    "MAENSm",
    "PM-AdapSS-AA",
    "PM-AdapSS-N",
    "Ex-PM",
    "Ex-AP",
    "Ex-MAB",
    "PM-AdapSS-NN",
    "F-AUC-MAB-tuned",
    "Compass-tuned",
    "U-AOS-FW",
];

/// Presets whose DE parameters come from a tuned configuration.
pub const TUNED: [&str; 5] = [
    "RecPM-AOS",
    "PM-AdapSS-NN",
    "F-AUC-MAB-tuned",
    "Compass-tuned",
    "U-AOS-FW",
];

/// Starting configurations handed to the tuner.
pub const TUNER_SEEDS: [&str; 4] = ["RecPM-AOS", "PM-AdapSS-NN", "F-AUC-MAB-tuned", "Compass-tuned"];

pub fn preset(name: &str) -> Result<(AosConfig, DeParams)> {
    preset_with_strategies(name, &MutationStrategy::ALL)
}

/// Same as [`preset`] with a restricted strategy set.
pub fn preset_with_strategies(name: &str, strategies: &[MutationStrategy]) -> Result<(AosConfig, DeParams)> {
    let k = strategies.len();
    let b = Builder::new(strategies);
    let (aos, de) = match name {
        "Hybrid" => b
            .metric(Om::OffspringFitness)
            .reward(Rk::Best2Gen, |r| {
                r.alpha = 0;
                r.beta = 0;
                r.c_scale = 1.0;
            })
            .quality(Qk::Bellman, |q| {
                q.c1 = 0.5;
                q.c2 = 0.5;
                q.gamma_b = 0.0;
            })
            .probability(Pk::NormalisedQuality, |p| {
                p.p_min = 0.0;
                p.eps_p = 0.0;
            })
            .done(),
        "Op-adapt" => b
            .metric(Om::BestParentImprovement)
            .reward(Rk::NormSuccessSumGen, |_| {})
            .quality(Qk::WeightedNormalisedSum, |_| {})
            .probability(Pk::Identity, |_| {})
            .done(),
        "PDP" => b
            .reward(Rk::SuccessRate, |r| {
                r.gamma_sr = 2;
                r.max_gen = 1;
                r.frac = 0.0;
                r.eps_noise = 0.0;
            })
            .quality(Qk::Identity, |_| {})
            .probability(Pk::NormalisedQuality, |p| {
                p.eps_p = 0.0;
                p.p_min = 0.2 / k as f64;
            })
            .done(),
        "ADOPP" | "ADOPP-ext" => b
            .metric(Om::MedianImprovement)
            .reward(Rk::SuccessRate, |r| {
                r.eps_noise = 0.0;
                r.gamma_sr = 1;
                r.max_gen = 1;
                if name == "ADOPP" {
                    r.frac = 0.0;
                }
            })
            .quality(Qk::Identity, |_| {})
            .probability(Pk::NormalisedQuality, zero_floor_and_noise)
            .done(),
        "Adapt-NN" => b
            .reward(Rk::SuccessSum, |_| {})
            .quality(Qk::WeightedNormalisedSum, |q| q.q_min = 0.0)
            .probability(Pk::NormalisedQuality, |p| p.eps_p = 0.0)
            .done(),
        "Dyn-GEPv1" => b
            .reward(Rk::SuccessSum, |r| r.max_gen = 1)
            .quality(Qk::Bellman, |q| {
                q.c1 = 1.0;
                q.gamma_b = 0.0;
            })
            .probability(Pk::NormalisedQuality, |p| p.p_min = 0.0)
            .done(),
        "Dyn-GEPv2" => b
            .reward(Rk::NormBestSum, |r| {
                r.rho = 3;
                r.alpha = 0;
                r.max_gen = 1;
            })
            .quality(Qk::Bellman, |q| {
                q.c1 = 1.0;
                q.gamma_b = 0.0;
            })
            .probability(Pk::NormalisedQuality, |p| p.p_min = 0.0)
            .done(),
        "SaDE" => b
            .reward(Rk::SuccessRate, |r| {
                r.gamma_sr = 1;
                r.frac = 0.0;
            })
            .quality(Qk::Identity, |_| {})
            .probability(Pk::NormalisedQuality, zero_floor_and_noise)
            .done(),
        "MMRDE" => b
            .reward(Rk::SuccessRate, |r| {
                r.max_gen = 1;
                r.gamma_sr = 1;
                r.frac = 0.0;
                r.eps_noise = 0.0;
            })
            .quality(Qk::Identity, |_| {})
            .probability(Pk::NormalisedQuality, |p| p.eps_p = 0.0)
            .done(),
        "Compass" => b
            .de(0.51, 0.95, 163, 0.64)
            .reward(Rk::CompassProjection, |r| {
                r.fix_appl = 66;
                r.theta = 90.0;
            })
            .quality(Qk::Identity, |_| {})
            .probability(Pk::NormalisedQuality, |p| {
                p.p_min = 0.0;
                p.eps_p = 0.55;
            })
            .done(),
        "PD-PM" | "PR-PM" | "Proj-PM" => {
            let kind = match name {
                "PD-PM" => Rk::ParetoDominance,
                "PR-PM" => Rk::ParetoRank,
                _ => Rk::CompassProjection,
            };
            b.reward(kind, |_| {})
                .quality(Qk::WeightedSum, |_| {})
                .probability(Pk::NormalisedQuality, |p| p.eps_p = 0.0)
                .done()
        }
        "F-AUC-MAB" => b
            .de(0.45, 0.21, 57, 0.73)
            .reward(Rk::Auc, |r| {
                r.window_w = 138;
                r.decay_d = 0.47;
            })
            .quality(Qk::Ucb, |q| q.c_ucb = 0.04)
            .probability(Pk::NormalisedQuality, zero_floor_and_noise)
            .selection(Sk::Greedy)
            .done(),
        "F-SR-MAB" => b
            .reward(Rk::SumOfRank, |_| {})
            .quality(Qk::Ucb, |_| {})
            .probability(Pk::NormalisedQuality, zero_floor_and_noise)
            .selection(Sk::Greedy)
            .done(),
        "F-AUC-AP" | "F-SR-AP" | "F-AUC-PM" | "F-SR-PM" => {
            let reward = if name.starts_with("F-AUC") {
                Rk::Auc
            } else {
                Rk::SumOfRank
            };
            let probability = if name.ends_with("AP") {
                Pk::BiasedRule
            } else {
                Pk::NormalisedQuality
            };
            b.reward(reward, |_| {})
                .quality(Qk::WeightedSum, |_| {})
                .probability(probability, |_| {})
                .done()
        }
        "RecPM-AOS" => b
            .de(0.57, 0.93, 154, 0.05)
            .reward(Rk::ImmediateSuccess, |_| {})
            .quality(Qk::Bellman, |q| {
                q.c1 = 0.57;
                q.c2 = 0.96;
                q.gamma_b = 0.43;
            })
            .probability(Pk::NormalisedQuality, |p| {
                p.p_min = 0.08;
                p.eps_p = 0.26;
            })
            .done(),
        "MAENSm" => b
            .metric(Om::OffspringFitness)
            .reward(Rk::SuccessRate, |r| {
                r.max_gen = 1;
                r.gamma_sr = 1;
                r.frac = 0.0;
                r.eps_noise = 0.0;
            })
            .quality(Qk::Ucb, |_| {})
            .probability(Pk::NormalisedQuality, |_| {})
            .done(),
        "PM-AdapSS-AA" | "PM-AdapSS-N" => {
            let omega = u32::from(name == "PM-AdapSS-N");
            let b = if omega == 1 { b.de(0.47, 0.96, 329, 0.07) } else { b };
            b.metric(Om::RelativeImprovement)
                .reward(Rk::NormSuccessSumWindow, |r| {
                    r.omega = omega;
                    r.window_w = 73;
                })
                .quality(Qk::WeightedSum, |q| q.delta = 0.07)
                .probability(Pk::NormalisedQuality, |p| {
                    p.eps_p = 0.0;
                    p.p_min = 0.06;
                })
                .done()
        }
        "Ex-PM" | "Ex-AP" | "Ex-MAB" => {
            let b = b.reward(Rk::NormBestSum, |r| {
                r.rho = 1;
                r.alpha = 0;
            });
            match name {
                "Ex-PM" => b
                    .quality(Qk::WeightedSum, |_| {})
                    .probability(Pk::NormalisedQuality, |_| {}),
                "Ex-AP" => b.quality(Qk::WeightedSum, |_| {}).probability(Pk::BiasedRule, |_| {}),
                _ => b
                    .quality(Qk::Ucb, |_| {})
                    .probability(Pk::NormalisedQuality, zero_floor_and_noise)
                    .selection(Sk::Greedy),
            }
            .done()
        }
        "PM-AdapSS-NN" => b
            .de(0.47, 0.96, 329, 0.07)
            .reward(Rk::NormSuccessSumWindow, |r| {
                r.window_w = 73;
                r.omega = 1;
            })
            .quality(Qk::WeightedSum, |q| q.delta = 0.07)
            .probability(Pk::NormalisedQuality, |p| {
                p.p_min = 0.06;
                p.eps_p = 0.53;
            })
            .done(),
        "F-AUC-MAB-tuned" => b
            .de(0.45, 0.21, 57, 0.73)
            .reward(Rk::Auc, |r| {
                r.window_w = 138;
                r.decay_d = 0.47;
            })
            .quality(Qk::Ucb, |q| q.c_ucb = 0.04)
            .probability(Pk::NormalisedQuality, |p| {
                p.p_min = 0.02;
                p.eps_p = 0.72;
            })
            .selection(Sk::Greedy)
            .done(),
        "Compass-tuned" => b
            .de(0.51, 0.95, 163, 0.64)
            .reward(Rk::CompassProjection, |r| {
                r.fix_appl = 66;
                r.theta = 90.0;
            })
            .quality(Qk::Identity, |_| {})
            .probability(Pk::NormalisedQuality, |p| {
                p.p_min = 0.08;
                p.eps_p = 0.55;
            })
            .done(),
        "U-AOS-FW" => b
            .de(0.41, 0.91, 262, 0.02)
            .reward(Rk::ImmediateSuccess, |_| {})
            .quality(Qk::Bellman, |q| {
                q.c1 = 0.66;
                q.c2 = 0.45;
                q.gamma_b = 0.54;
            })
            .probability(Pk::NormalisedQuality, |p| {
                p.p_min = 0.04;
                p.eps_p = 0.22;
            })
            .done(),
        _ => {
            return Err(Error::UnknownPreset {
                name: name.to_string(),
                catalog: CATALOG.to_vec(),
            })
        }
    };
    aos.validate()?;
    Ok((aos, de))
}

fn zero_floor_and_noise(p: &mut ProbabilityParams) {
    p.p_min = 0.0;
    p.eps_p = 0.0;
}

struct Builder {
    aos: AosConfig,
    de: DeParams,
}

impl Builder {
    fn new(strategies: &[MutationStrategy]) -> Self {
        Self {
            aos: AosConfig {
                metric: Om::ParentImprovement,
                reward: RewardChoice {
                    kind: Rk::SuccessRate,
                    params: RewardParams::default(),
                },
                quality: QualityChoice {
                    kind: Qk::Identity,
                    params: QualityParams::default(),
                },
                probability: ProbabilityChoice {
                    kind: Pk::NormalisedQuality,
                    params: ProbabilityParams::default(),
                },
                selection: SelectionChoice {
                    kind: Sk::Proportional,
                    eps: 0.5,
                },
                strategies: strategies.to_vec(),
            },
            de: DeParams::default(),
        }
    }

    fn de(mut self, f_scale: f64, cr: f64, np: usize, top_np: f64) -> Self {
        self.de = DeParams {
            f_scale,
            cr,
            np,
            top_np,
        };
        self
    }

    fn metric(mut self, m: Om) -> Self {
        self.aos.metric = m;
        self
    }

    fn reward(mut self, kind: Rk, set: impl FnOnce(&mut RewardParams)) -> Self {
        self.aos.reward.kind = kind;
        set(&mut self.aos.reward.params);
        self
    }

    fn quality(mut self, kind: Qk, set: impl FnOnce(&mut QualityParams)) -> Self {
        self.aos.quality.kind = kind;
        set(&mut self.aos.quality.params);
        self
    }

    fn probability(mut self, kind: Pk, set: impl FnOnce(&mut ProbabilityParams)) -> Self {
        self.aos.probability.kind = kind;
        set(&mut self.aos.probability.params);
        self
    }

    fn selection(mut self, kind: Sk) -> Self {
        self.aos.selection.kind = kind;
        self
    }

    fn done(self) -> (AosConfig, DeParams) {
        (self.aos, self.de)
    }
}

/// Every catalogued preset, in catalog order.
pub fn all_presets() -> Vec<(&'static str, AosConfig, DeParams)> {
    CATALOG
        .iter()
        .map(|&name| {
            let (aos, de) = preset(name).expect("catalog presets are valid");
            (name, aos, de)
        })
        .collect()
}
