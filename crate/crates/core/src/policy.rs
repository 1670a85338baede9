//! Decision layer: rewards to qualities, qualities to probabilities,
//! probabilities to one operator choice.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{discounted_solve, Matrix};
use crate::memory::OperatorId;
use crate::rng::RandomStream;

/// Per-operator adaptive state carried between generations.
#[derive(Clone, Debug, PartialEq)]
pub struct AosState {
    /// Reward computed after the latest generation.
    pub reward: Vec<f64>,
    /// Reward computed one generation earlier.
    pub prev_reward: Vec<f64>,
    pub quality: Vec<f64>,
    pub probability: Vec<f64>,
    pub total_applications: Vec<u64>,
}

impl AosState {
    pub fn new(k: usize) -> Self {
        Self {
            reward: vec![0.0; k],
            prev_reward: vec![0.0; k],
            quality: vec![0.0; k],
            probability: vec![1.0 / k as f64; k],
            total_applications: vec![0; k],
        }
    }

    pub fn operator_count(&self) -> usize {
        self.probability.len()
    }

    /// Shifts the current reward into `prev_reward` and stores the new one.
    pub fn push_reward(&mut self, reward: Vec<f64>) {
        self.prev_reward = core::mem::replace(&mut self.reward, reward);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum QualityKind {
    WeightedSum,
    Ucb,
    Identity,
    WeightedNormalisedSum,
    Bellman,
}

impl QualityKind {
    pub const ALL: [QualityKind; 5] = [
        QualityKind::WeightedSum,
        QualityKind::Ucb,
        QualityKind::Identity,
        QualityKind::WeightedNormalisedSum,
        QualityKind::Bellman,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            QualityKind::WeightedSum => "WeightedSum",
            QualityKind::Ucb => "Ucb",
            QualityKind::Identity => "Identity",
            QualityKind::WeightedNormalisedSum => "WeightedNormalisedSum",
            QualityKind::Bellman => "Bellman",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct QualityParams {
    pub delta: f64,
    pub c_ucb: f64,
    pub q_min: f64,
    pub c1: f64,
    pub c2: f64,
    pub gamma_b: f64,
}

impl Default for QualityParams {
    fn default() -> Self {
        Self {
            delta: 0.5,
            c_ucb: 0.5,
            q_min: 0.5,
            c1: 0.5,
            c2: 0.5,
            gamma_b: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct QualityChoice {
    pub kind: QualityKind,
    #[cfg_attr(feature = "serde", serde(default))]
    pub params: QualityParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ProbabilityKind {
    NormalisedQuality,
    BiasedRule,
    Identity,
}

impl ProbabilityKind {
    pub const ALL: [ProbabilityKind; 3] = [
        ProbabilityKind::NormalisedQuality,
        ProbabilityKind::BiasedRule,
        ProbabilityKind::Identity,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ProbabilityKind::NormalisedQuality => "NormalisedQuality",
            ProbabilityKind::BiasedRule => "BiasedRule",
            ProbabilityKind::Identity => "Identity",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ProbabilityParams {
    pub p_min: f64,
    pub eps_p: f64,
    pub mu: f64,
    pub p_max: f64,
}

impl Default for ProbabilityParams {
    fn default() -> Self {
        Self {
            p_min: 0.05,
            eps_p: 0.5,
            mu: 0.5,
            p_max: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ProbabilityChoice {
    pub kind: ProbabilityKind,
    #[cfg_attr(feature = "serde", serde(default))]
    pub params: ProbabilityParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SelectionKind {
    Proportional,
    Greedy,
    EpsilonGreedy,
    LinearAnnealed,
    ProportionalGreedy,
}

impl SelectionKind {
    pub const ALL: [SelectionKind; 5] = [
        SelectionKind::Proportional,
        SelectionKind::Greedy,
        SelectionKind::EpsilonGreedy,
        SelectionKind::LinearAnnealed,
        SelectionKind::ProportionalGreedy,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SelectionKind::Proportional => "Proportional",
            SelectionKind::Greedy => "Greedy",
            SelectionKind::EpsilonGreedy => "EpsilonGreedy",
            SelectionKind::LinearAnnealed => "LinearAnnealed",
            SelectionKind::ProportionalGreedy => "ProportionalGreedy",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SelectionChoice {
    pub kind: SelectionKind,
    #[cfg_attr(feature = "serde", serde(default = "default_eps"))]
    pub eps: f64,
}

#[cfg(feature = "serde")]
fn default_eps() -> f64 {
    0.5
}

/// New quality vector from the state's current and previous rewards.
pub fn update_quality(choice: &QualityChoice, state: &AosState, counts_in_scope: &[usize]) -> Vec<f64> {
    let p = &choice.params;
    let r = &state.reward;
    let q_prev = &state.quality;
    match choice.kind {
        QualityKind::WeightedSum => r
            .iter()
            .zip(q_prev)
            .map(|(r, q)| p.delta * r + (1.0 - p.delta) * q)
            .collect(),
        QualityKind::Ucb => {
            let total: usize = counts_in_scope.iter().sum();
            let log_total = if total > 0 { libm::log(total as f64) } else { 0.0 };
            r.iter()
                .zip(counts_in_scope)
                .map(|(r, &n)| {
                    if n == 0 {
                        f64::INFINITY
                    } else {
                        r + p.c_ucb * libm::sqrt(log_total.max(0.0) / n as f64)
                    }
                })
                .collect()
        }
        QualityKind::Identity => r.clone(),
        QualityKind::WeightedNormalisedSum => {
            let sum: f64 = r.iter().sum();
            r.iter()
                .zip(q_prev)
                .map(|(r, q)| {
                    let share = if sum != 0.0 { (r / sum).max(p.q_min) } else { p.q_min };
                    p.delta * share + (1.0 - p.delta) * q
                })
                .collect()
        }
        QualityKind::Bellman => bellman_quality(p, state),
    }
}

fn bellman_quality(p: &QualityParams, state: &AosState) -> Vec<f64> {
    let k = state.operator_count();
    let target: Vec<f64> = state
        .reward
        .iter()
        .zip(&state.prev_reward)
        .map(|(now, before)| p.c1 * now + p.c2 * before)
        .collect();
    let mut transition = Matrix::zeros(k);
    for i in 0..k {
        for j in 0..k {
            transition.set(i, j, state.probability[j]);
        }
    }
    // spectral radius of gamma * P is gamma < 1 for a simplex row, so this
    // only fails on a corrupted probability vector
    let q = discounted_solve(&transition, p.gamma_b, &target).unwrap_or(target);
    // negative rewards can push values below zero; shift those back up
    let min = q.iter().copied().fold(f64::INFINITY, f64::min);
    if min < 0.0 {
        q.into_iter().map(|v| v - min).collect()
    } else {
        q
    }
}

/// New probability vector; always a valid simplex.
pub fn update_probability(choice: &ProbabilityChoice, quality: &[f64], prev_prob: &[f64]) -> Vec<f64> {
    let k = quality.len();
    let p = &choice.params;
    let infinite: Vec<bool> = quality.iter().map(|q| *q == f64::INFINITY).collect();
    let any_infinite = infinite.iter().any(|&b| b);
    let raw: Vec<f64> = match choice.kind {
        ProbabilityKind::NormalisedQuality => {
            let spread = 1.0 - k as f64 * p.p_min;
            if any_infinite {
                let n_inf = infinite.iter().filter(|&&b| b).count() as f64;
                infinite
                    .iter()
                    .map(|&inf| p.p_min + if inf { spread / n_inf } else { 0.0 })
                    .collect()
            } else {
                let clamped: Vec<f64> = quality.iter().map(|q| q.max(0.0)).collect();
                let total: f64 = clamped.iter().sum::<f64>() + p.eps_p;
                if total > 0.0 {
                    clamped
                        .iter()
                        .map(|q| p.p_min + spread * (q + p.eps_p) / total)
                        .collect()
                } else {
                    vec![1.0; k]
                }
            }
        }
        ProbabilityKind::BiasedRule => {
            let best = argmax(quality);
            prev_prob
                .iter()
                .enumerate()
                .map(|(i, prev)| {
                    let target = if i == best { p.p_max } else { p.p_min };
                    p.mu * target + (1.0 - p.mu) * prev
                })
                .collect()
        }
        ProbabilityKind::Identity => {
            if any_infinite {
                infinite.iter().map(|&inf| if inf { 1.0 } else { 0.0 }).collect()
            } else {
                quality.iter().map(|q| q.max(0.0)).collect()
            }
        }
    };
    normalise(raw)
}

fn normalise(raw: Vec<f64>) -> Vec<f64> {
    let k = raw.len();
    let sum: f64 = raw.iter().sum();
    if sum > 0.0 && sum.is_finite() && raw.iter().all(|v| *v >= 0.0) {
        raw.into_iter().map(|v| v / sum).collect()
    } else {
        vec![1.0 / k as f64; k]
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn proportional(prob: &[f64], rng: &mut RandomStream) -> usize {
    let u = rng.uniform();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in prob.iter().enumerate() {
        if *p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left the cumulative sum slightly below one
    last_positive
}

pub fn select_operator(
    choice: &SelectionChoice,
    prob: &[f64],
    budget_fraction: f64,
    rng: &mut RandomStream,
) -> OperatorId {
    let k = prob.len();
    let epsilon_greedy = |eps: f64, rng: &mut RandomStream| {
        if rng.uniform() < eps {
            rng.below(k)
        } else {
            argmax(prob)
        }
    };
    let idx = match choice.kind {
        SelectionKind::Proportional => proportional(prob, rng),
        SelectionKind::Greedy => argmax(prob),
        SelectionKind::EpsilonGreedy => epsilon_greedy(choice.eps, rng),
        SelectionKind::LinearAnnealed => epsilon_greedy(1.0 - budget_fraction.clamp(0.0, 1.0), rng),
        SelectionKind::ProportionalGreedy => {
            if rng.uniform() < choice.eps {
                proportional(prob, rng)
            } else {
                argmax(prob)
            }
        }
    };
    OperatorId(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn state(reward: &[f64], prev: &[f64], quality: &[f64], prob: &[f64]) -> AosState {
        AosState {
            reward: reward.to_vec(),
            prev_reward: prev.to_vec(),
            quality: quality.to_vec(),
            probability: prob.to_vec(),
            total_applications: vec![0; reward.len()],
        }
    }

    fn quality(kind: QualityKind, params: QualityParams) -> QualityChoice {
        QualityChoice { kind, params }
    }

    fn probability(kind: ProbabilityKind, p_min: f64, eps_p: f64, mu: f64, p_max: f64) -> ProbabilityChoice {
        ProbabilityChoice {
            kind,
            params: ProbabilityParams {
                p_min,
                eps_p,
                mu,
                p_max,
            },
        }
    }

    #[test]
    fn weighted_sum_example() {
        let c = quality(
            QualityKind::WeightedSum,
            QualityParams {
                delta: 0.3,
                ..Default::default()
            },
        );
        let q = update_quality(&c, &state(&[2.0], &[0.0], &[1.0], &[1.0]), &[1]);
        assert!((q[0] - 1.3).abs() < 1e-15);
    }

    #[test]
    fn ucb_example() {
        let c = quality(
            QualityKind::Ucb,
            QualityParams {
                c_ucb: 1.0,
                ..Default::default()
            },
        );
        let s = state(&[0.5, 0.0], &[0.0, 0.0], &[0.0, 0.0], &[0.5, 0.5]);
        let q = update_quality(&c, &s, &[10, 90]);
        // 0.5 + sqrt(ln(100) / 10), evaluated at 30 digits
        let want = 1.178_614_042_441_511_2;
        assert!((q[0] - want).abs() < 1e-12, "{}", q[0]);
        assert!((q[0] - 1.1786).abs() < 1e-4);
    }

    #[test]
    fn ucb_unplayed_is_infinite() {
        let c = quality(QualityKind::Ucb, QualityParams::default());
        let q = update_quality(&c, &state(&[1.0, 1.0], &[0.0; 2], &[0.0; 2], &[0.5; 2]), &[3, 0]);
        assert!(q[0].is_finite());
        assert_eq!(q[1], f64::INFINITY);
        let p = update_probability(
            &probability(ProbabilityKind::NormalisedQuality, 0.1, 0.0, 0.5, 0.5),
            &q,
            &[0.5; 2],
        );
        assert!(p[1] > p[0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bellman_without_discount_is_weighted_sum() {
        let c = quality(
            QualityKind::Bellman,
            QualityParams {
                c1: 0.6,
                c2: 0.2,
                gamma_b: 0.0,
                ..Default::default()
            },
        );
        let q = update_quality(&c, &state(&[1.0], &[0.5], &[0.0], &[1.0]), &[1]);
        assert!((q[0] - 0.7).abs() < 1e-15);
        let q = update_quality(&c, &state(&[1.0, 0.0], &[0.5, 0.0], &[0.0; 2], &[0.5; 2]), &[1, 1]);
        assert_eq!(q, [0.6 + 0.1, 0.0]);
    }

    #[test]
    fn bellman_shifts_negative_values() {
        let c = quality(
            QualityKind::Bellman,
            QualityParams {
                c1: 1.0,
                c2: 0.0,
                gamma_b: 0.0,
                ..Default::default()
            },
        );
        let q = update_quality(&c, &state(&[-2.0, 1.0], &[0.0; 2], &[0.0; 2], &[0.5; 2]), &[1, 1]);
        assert_eq!(q, [0.0, 3.0]);
    }

    #[test]
    fn weighted_normalised_sum_floor() {
        let c = quality(
            QualityKind::WeightedNormalisedSum,
            QualityParams {
                delta: 0.5,
                q_min: 0.1,
                ..Default::default()
            },
        );
        let q = update_quality(
            &c,
            &state(&[3.0, 1.0, 0.0], &[0.0; 3], &[0.0; 3], &[1.0 / 3.0; 3]),
            &[1; 3],
        );
        assert_eq!(q, [0.375, 0.125, 0.05]);
        let q = update_quality(&c, &state(&[0.0, 0.0], &[0.0; 2], &[1.0, 0.0], &[0.5; 2]), &[1; 2]);
        assert_eq!(q, [0.55, 0.05]);
    }

    #[test]
    fn normalised_quality_example() {
        let c = probability(ProbabilityKind::NormalisedQuality, 0.1, 0.0, 0.5, 0.5);
        let p = update_probability(&c, &[3.0, 1.0], &[0.5, 0.5]);
        assert!((p[0] - 0.7).abs() < 1e-15 && (p[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn normalised_quality_zero_is_uniform() {
        let c = probability(ProbabilityKind::NormalisedQuality, 0.0, 0.0, 0.5, 0.5);
        assert_eq!(update_probability(&c, &[0.0; 4], &[0.25; 4]), [0.25; 4]);
    }

    #[test]
    fn biased_rule_example() {
        let c = probability(ProbabilityKind::BiasedRule, 0.05, 0.0, 0.5, 0.9);
        let p = update_probability(&c, &[2.0, 1.0], &[0.5, 0.5]);
        let sum = 0.70 + 0.275;
        assert!((p[0] - 0.70 / sum).abs() < 1e-15);
        assert!((p[1] - 0.275 / sum).abs() < 1e-15);
        assert!((p[0] - 0.717_948_717_948_718).abs() < 1e-12);
    }

    #[test]
    fn biased_rule_tie_prefers_lowest_index() {
        let c = probability(ProbabilityKind::BiasedRule, 0.05, 0.0, 1.0, 0.9);
        let p = update_probability(&c, &[1.0, 1.0], &[0.5, 0.5]);
        assert!(p[0] > p[1]);
    }

    #[test]
    fn identity_probability_example() {
        let c = probability(ProbabilityKind::Identity, 0.0, 0.0, 0.5, 0.5);
        assert_eq!(
            update_probability(&c, &[2.0, 2.0, 4.0], &[1.0 / 3.0; 3]),
            [0.25, 0.25, 0.5]
        );
    }

    #[test]
    fn greedy_examples() {
        let mut rng = RandomStream::new(0);
        let greedy = SelectionChoice {
            kind: SelectionKind::Greedy,
            eps: 0.0,
        };
        assert_eq!(select_operator(&greedy, &[0.2, 0.5, 0.3], 0.0, &mut rng), OperatorId(1));
        assert_eq!(select_operator(&greedy, &[0.4, 0.2, 0.4], 0.0, &mut rng), OperatorId(0));
    }

    #[test]
    fn epsilon_zero_is_greedy() {
        let mut rng = RandomStream::new(1);
        let c = SelectionChoice {
            kind: SelectionKind::EpsilonGreedy,
            eps: 0.0,
        };
        for _ in 0..100 {
            assert_eq!(select_operator(&c, &[0.1, 0.6, 0.3], 0.3, &mut rng), OperatorId(1));
        }
    }

    #[test]
    fn annealed_end_points() {
        let mut rng = RandomStream::new(2);
        let c = SelectionChoice {
            kind: SelectionKind::LinearAnnealed,
            eps: 0.0,
        };
        for _ in 0..100 {
            assert_eq!(select_operator(&c, &[0.1, 0.6, 0.3], 1.0, &mut rng), OperatorId(1));
        }
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            counts[select_operator(&c, &[0.1, 0.6, 0.3], 0.0, &mut rng).0] += 1;
        }
        for c in counts {
            assert!((c as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.02, "{counts:?}");
        }
    }

    // Pearson chi-square against the exact multinomial; 1 degree of freedom,
    // 10.83 is the 0.999 quantile.
    #[test]
    fn proportional_frequencies() {
        let mut rng = RandomStream::new(42);
        let c = SelectionChoice {
            kind: SelectionKind::Proportional,
            eps: 0.0,
        };
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| select_operator(&c, &[0.7, 0.3], 0.0, &mut rng) == OperatorId(0))
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.7).abs() < 0.01);
        let e0 = 0.7 * n as f64;
        let e1 = 0.3 * n as f64;
        let o0 = hits as f64;
        let o1 = (n - hits) as f64;
        let chi2 = (o0 - e0).powi(2) / e0 + (o1 - e1).powi(2) / e1;
        assert!(chi2 < 10.83, "chi2 {chi2}");
    }

    #[test]
    fn proportional_never_picks_zero_mass() {
        let mut rng = RandomStream::new(3);
        let c = SelectionChoice {
            kind: SelectionKind::Proportional,
            eps: 0.0,
        };
        for _ in 0..10_000 {
            assert_ne!(select_operator(&c, &[0.5, 0.0, 0.5], 0.0, &mut rng), OperatorId(1));
        }
    }

    fn any_probability() -> impl Strategy<Value = ProbabilityChoice> {
        (0usize..3, 0.0f64..0.1, 0.0f64..1.0, 0.0f64..1.0, 0.1f64..1.0)
            .prop_map(|(k, p_min, eps_p, mu, p_max)| probability(ProbabilityKind::ALL[k], p_min, eps_p, mu, p_max))
    }

    proptest! {
        #[test]
        fn probabilities_form_a_simplex(choice in any_probability(),
                                        q in proptest::collection::vec(-10.0f64..10.0, 9)) {
            let prev = vec![1.0 / 9.0; 9];
            let p = update_probability(&choice, &q, &prev);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|v| *v >= 0.0));
        }

        #[test]
        fn normalised_quality_floor(p_min in 0.0f64..0.11, q in proptest::collection::vec(0.0f64..10.0, 9)) {
            let c = probability(ProbabilityKind::NormalisedQuality, p_min, 0.0, 0.5, 0.5);
            let p = update_probability(&c, &q, &[1.0 / 9.0; 9]);
            for v in p {
                prop_assert!(v >= p_min - 1e-12);
            }
        }

        #[test]
        fn biased_rule_floor(p_min in 0.0f64..0.05, mu in 0.0f64..1.0,
                             q in proptest::collection::vec(0.0f64..10.0, 9)) {
            let c = probability(ProbabilityKind::BiasedRule, p_min, 0.0, mu, 0.5);
            let mut prev = vec![1.0 / 9.0; 9];
            for _ in 0..20 {
                prev = update_probability(&c, &q, &prev);
            }
            for v in prev {
                prop_assert!(v >= p_min - 1e-12);
            }
        }

        #[test]
        fn greedy_argmax_invariance(p in proptest::collection::vec(0.01f64..1.0, 2..10)) {
            let mut rng = RandomStream::new(0);
            let c = SelectionChoice { kind: SelectionKind::Greedy, eps: 0.0 };
            let a = select_operator(&c, &p, 0.5, &mut rng);
            let transformed: Vec<f64> = p.iter().map(|v| libm::exp(3.0 * v) + 7.0).collect();
            prop_assert_eq!(a, select_operator(&c, &transformed, 0.5, &mut rng));
        }

        #[test]
        fn bellman_solver_always_succeeds(gamma in 0.01f64..0.99,
                                          r in proptest::collection::vec(-5.0f64..5.0, 4),
                                          raw_p in proptest::collection::vec(0.0f64..1.0, 4)) {
            let s: f64 = raw_p.iter().sum::<f64>() + 1e-9;
            let prob: Vec<f64> = raw_p.iter().map(|v| (v + 1e-9 / 4.0) / s).collect();
            let c = quality(QualityKind::Bellman, QualityParams { c1: 0.5, c2: 0.3, gamma_b: gamma, ..Default::default() });
            let st = state(&r, &[0.0; 4], &[0.0; 4], &prob);
            let q = update_quality(&c, &st, &[1; 4]);
            prop_assert!(q.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }
}
