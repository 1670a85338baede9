//! A complete AOS method: one choice per component plus its hyper-parameters.

use alloc::vec::Vec;

use crate::engine::MutationStrategy;
use crate::error::config as invalid;
use crate::metrics::OffspringMetric;
use crate::policy::{
    ProbabilityChoice, ProbabilityKind, ProbabilityParams, QualityChoice, QualityKind, QualityParams, SelectionChoice,
    SelectionKind,
};
use crate::reward::{RewardChoice, RewardKind, RewardParams};
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct AosConfig {
    pub metric: OffspringMetric,
    pub reward: RewardChoice,
    pub quality: QualityChoice,
    pub probability: ProbabilityChoice,
    pub selection: SelectionChoice,
    #[cfg_attr(feature = "serde", serde(default = "all_strategies"))]
    pub strategies: Vec<MutationStrategy>,
}

fn all_strategies() -> Vec<MutationStrategy> {
    MutationStrategy::ALL.to_vec()
}

/// Component choices without hyper-parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComponentTuple {
    pub metric: OffspringMetric,
    pub reward: RewardKind,
    pub quality: QualityKind,
    pub probability: ProbabilityKind,
    pub selection: SelectionKind,
}

/// Every combination of the five components, metric-major.
pub fn all_component_tuples() -> Vec<ComponentTuple> {
    let mut out = Vec::with_capacity(5400);
    for metric in OffspringMetric::ALL {
        for reward in RewardKind::ALL {
            for quality in QualityKind::ALL {
                for probability in ProbabilityKind::ALL {
                    for selection in SelectionKind::ALL {
                        out.push(ComponentTuple {
                            metric,
                            reward,
                            quality,
                            probability,
                            selection,
                        });
                    }
                }
            }
        }
    }
    out
}

impl AosConfig {
    /// Components with default hyper-parameters and all nine strategies.
    pub fn from_components(t: ComponentTuple) -> Self {
        Self {
            metric: t.metric,
            reward: RewardChoice {
                kind: t.reward,
                params: RewardParams::default(),
            },
            quality: QualityChoice {
                kind: t.quality,
                params: QualityParams::default(),
            },
            probability: ProbabilityChoice {
                kind: t.probability,
                params: ProbabilityParams::default(),
            },
            selection: SelectionChoice {
                kind: t.selection,
                eps: 0.5,
            },
            strategies: all_strategies(),
        }
    }

    pub fn components(&self) -> ComponentTuple {
        ComponentTuple {
            metric: self.metric,
            reward: self.reward.kind,
            quality: self.quality.kind,
            probability: self.probability.kind,
            selection: self.selection.kind,
        }
    }

    pub fn operator_count(&self) -> usize {
        self.strategies.len()
    }

    /// Structural checks: the values every formula needs to stay well
    /// defined. Tuning ranges are narrower and live in the tuner's space.
    pub fn validate(&self) -> Result<()> {
        let k = self.strategies.len();
        if k == 0 {
            return Err(invalid("strategies", "at least one strategy must be enabled"));
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if self.strategies[..i].contains(s) {
                return Err(invalid("strategies", "duplicate strategy"));
            }
        }

        let r = &self.reward.params;
        at_least_one("reward.fix_appl", r.fix_appl)?;
        at_least_one("reward.max_gen", r.max_gen)?;
        at_least_one("reward.window_w", r.window_w)?;
        finite("reward.theta", r.theta)?;
        unit("reward.decay_d", r.decay_d)?;
        non_negative("reward.frac", r.frac)?;
        non_negative("reward.eps_noise", r.eps_noise)?;
        non_negative("reward.c_scale", r.c_scale)?;
        binary("reward.omega", r.omega)?;
        binary("reward.alpha", r.alpha)?;
        binary("reward.beta", r.beta)?;
        if !(1..=2).contains(&r.gamma_sr) {
            return Err(invalid("reward.gamma_sr", "must be 1 or 2"));
        }
        if !(1..=3).contains(&r.rho) {
            return Err(invalid("reward.rho", "must be 1, 2 or 3"));
        }

        let q = &self.quality.params;
        unit("quality.delta", q.delta)?;
        non_negative("quality.c_ucb", q.c_ucb)?;
        unit("quality.q_min", q.q_min)?;
        unit("quality.c1", q.c1)?;
        unit("quality.c2", q.c2)?;
        unit("quality.gamma_b", q.gamma_b)?;
        if q.gamma_b >= 1.0 {
            return Err(invalid("quality.gamma_b", "must be below 1 for the Bellman solve"));
        }

        let p = &self.probability.params;
        unit("probability.p_min", p.p_min)?;
        non_negative("probability.eps_p", p.eps_p)?;
        unit("probability.mu", p.mu)?;
        unit("probability.p_max", p.p_max)?;
        if k as f64 * p.p_min >= 1.0 {
            return Err(invalid("probability.p_min", "K * p_min must be below 1"));
        }
        if self.probability.kind == ProbabilityKind::BiasedRule && p.p_min >= p.p_max {
            return Err(invalid("probability.p_min", "must be below p_max"));
        }

        unit("selection.eps", self.selection.eps)
    }
}

fn finite(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, "must be finite"))
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<()> {
    finite(field, v)?;
    if v < 0.0 {
        return Err(invalid(field, "must be non-negative"));
    }
    Ok(())
}

fn unit(field: &'static str, v: f64) -> Result<()> {
    non_negative(field, v)?;
    if v > 1.0 {
        return Err(invalid(field, "must lie in [0, 1]"));
    }
    Ok(())
}

fn at_least_one(field: &'static str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(invalid(field, "must be at least 1"));
    }
    Ok(())
}

fn binary(field: &'static str, v: u32) -> Result<()> {
    if v > 1 {
        return Err(invalid(field, "must be 0 or 1"));
    }
    Ok(())
}

impl core::fmt::Display for ComponentTuple {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "{}/{}/{}/{}/{}",
            self.metric.name(),
            self.reward.name(),
            self.quality.name(),
            self.probability.name(),
            self.selection.name()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn enumeration_is_complete_and_unique() {
        let all = all_component_tuples();
        assert_eq!(all.len(), 6 * 12 * 5 * 3 * 5);
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 5400);
    }

    #[test]
    fn defaults_validate_for_every_tuple() {
        for t in all_component_tuples() {
            AosConfig::from_components(t).validate().unwrap();
        }
    }

    #[test]
    fn rejects_too_large_floor() {
        let mut c = AosConfig::from_components(all_component_tuples()[0]);
        c.probability.params.p_min = 0.2;
        assert!(matches!(c.validate(), Err(Error::InvalidConfig { field, .. }) if field == "probability.p_min"));
        c.strategies.truncate(4);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unit_discount() {
        let mut c = AosConfig::from_components(all_component_tuples()[0]);
        c.quality.params.gamma_b = 1.0;
        assert!(c.validate().is_err());
    }
}
