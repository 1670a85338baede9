//! Reward choices: turn credit memories into one reward per operator.
//!
//! The twelve choices fall into five families:
//!
//! | family                        | choices                                            | memory            |
//! |-------------------------------|----------------------------------------------------|-------------------|
//! | fitness diversity and quality | `ParetoDominance`, `ParetoRank`, `CompassProjection` | last `fix_appl` applications |
//! | comparison (rank)             | `Auc`, `SumOfRank`                                 | window            |
//! | successful applications       | `SuccessRate`, `ImmediateSuccess`                  | generations       |
//! | fitness sum                   | `SuccessSum`, `NormSuccessSumWindow`, `NormSuccessSumGen` | generations / window |
//! | best offspring                | `Best2Gen`, `NormBestSum`                          | generations       |
//!
//! Every function here is total: a zero denominator yields a zero reward
//! (or, for the two `Best2Gen` denominator factors, a factor of one).

use alloc::vec;
use alloc::vec::Vec;

use crate::memory::{GenerationMemory, OperatorId, WindowMemory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RewardKind {
    ParetoDominance,
    ParetoRank,
    CompassProjection,
    Auc,
    SumOfRank,
    SuccessRate,
    ImmediateSuccess,
    SuccessSum,
    NormSuccessSumWindow,
    NormSuccessSumGen,
    Best2Gen,
    NormBestSum,
}

impl RewardKind {
    pub const ALL: [RewardKind; 12] = [
        RewardKind::ParetoDominance,
        RewardKind::ParetoRank,
        RewardKind::CompassProjection,
        RewardKind::Auc,
        RewardKind::SumOfRank,
        RewardKind::SuccessRate,
        RewardKind::ImmediateSuccess,
        RewardKind::SuccessSum,
        RewardKind::NormSuccessSumWindow,
        RewardKind::NormSuccessSumGen,
        RewardKind::Best2Gen,
        RewardKind::NormBestSum,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            RewardKind::ParetoDominance => "ParetoDominance",
            RewardKind::ParetoRank => "ParetoRank",
            RewardKind::CompassProjection => "CompassProjection",
            RewardKind::Auc => "Auc",
            RewardKind::SumOfRank => "SumOfRank",
            RewardKind::SuccessRate => "SuccessRate",
            RewardKind::ImmediateSuccess => "ImmediateSuccess",
            RewardKind::SuccessSum => "SuccessSum",
            RewardKind::NormSuccessSumWindow => "NormSuccessSumWindow",
            RewardKind::NormSuccessSumGen => "NormSuccessSumGen",
            RewardKind::Best2Gen => "Best2Gen",
            RewardKind::NormBestSum => "NormBestSum",
        }
    }

    /// Credit store the reward reads, which also scopes UCB's counts.
    pub fn scope(self) -> Scope {
        match self {
            RewardKind::ParetoDominance | RewardKind::ParetoRank | RewardKind::CompassProjection => {
                Scope::RecentApplications
            }
            RewardKind::Auc | RewardKind::SumOfRank | RewardKind::NormSuccessSumWindow => Scope::Window,
            _ => Scope::Generations,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    RecentApplications,
    Window,
    Generations,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RewardParams {
    pub fix_appl: usize,
    pub max_gen: usize,
    /// Projection angle in degrees.
    pub theta: f64,
    pub window_w: usize,
    pub decay_d: f64,
    pub gamma_sr: u32,
    pub frac: f64,
    pub eps_noise: f64,
    pub omega: u32,
    pub c_scale: f64,
    pub alpha: u32,
    pub beta: u32,
    pub rho: u32,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            fix_appl: 30,
            max_gen: 25,
            theta: 36.0,
            window_w: 85,
            decay_d: 0.5,
            gamma_sr: 1,
            frac: 0.5,
            eps_noise: 0.5,
            omega: 0,
            c_scale: 0.5,
            alpha: 0,
            beta: 0,
            rho: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct RewardChoice {
    pub kind: RewardKind,
    #[cfg_attr(feature = "serde", serde(default))]
    pub params: RewardParams,
}

/// Spread and level of an operator's recent credit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorCoordinate {
    pub diversity: f64,
    pub quality: f64,
}

impl OperatorCoordinate {
    pub fn new(diversity: f64, quality: f64) -> Self {
        Self { diversity, quality }
    }

    fn dominates(&self, other: &OperatorCoordinate) -> bool {
        self.diversity >= other.diversity
            && self.quality >= other.quality
            && (self.diversity > other.diversity || self.quality > other.quality)
    }
}

/// Population standard deviation and mean over the last `fix_appl`
/// applications of `op` (failures count as 0).
pub fn operator_coordinate(mem: &GenerationMemory, op: OperatorId, fix_appl: usize) -> OperatorCoordinate {
    let recent = mem.recent(op);
    let n = fix_appl.max(1).min(recent.len());
    if n == 0 {
        return OperatorCoordinate::new(0.0, 0.0);
    }
    let values = recent.iter().skip(recent.len() - n);
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    OperatorCoordinate::new(libm::sqrt(var), mean)
}

pub fn diversity_quality_reward(kind: RewardKind, coords: &[OperatorCoordinate], theta_deg: f64) -> Vec<f64> {
    match kind {
        RewardKind::ParetoDominance => {
            let counts: Vec<f64> = coords
                .iter()
                .map(|a| coords.iter().filter(|b| a.dominates(b)).count() as f64)
                .collect();
            normalise_or_zero(counts)
        }
        RewardKind::ParetoRank => {
            let counts: Vec<f64> = coords
                .iter()
                .map(|a| coords.iter().filter(|b| b.dominates(a)).count() as f64)
                .collect();
            normalise_or_zero(counts)
        }
        RewardKind::CompassProjection => {
            let theta = theta_deg.to_radians();
            let proj: Vec<f64> = coords
                .iter()
                .map(|c| {
                    let norm = libm::hypot(c.diversity, c.quality);
                    // atan2 gives the div -> 0 limit of atan(qual / div) for free
                    let alpha = libm::atan2(c.quality, c.diversity) - theta;
                    norm * libm::cos(alpha)
                })
                .collect();
            let min = proj.iter().copied().fold(f64::INFINITY, f64::min);
            proj.into_iter().map(|p| p - min).collect()
        }
        _ => panic!("{} is not a diversity/quality reward", kind.name()),
    }
}

fn normalise_or_zero(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.into_iter().map(|x| x / s).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// Window entries grouped by equal credit, best first, each group holding
/// its member operators and the averaged rank weight `D^r (W - r)`.
fn rank_groups(win: &WindowMemory, decay_d: f64) -> Vec<(f64, Vec<OperatorId>)> {
    let mut scored: Vec<(f64, OperatorId)> = win.entries().map(|e| (win.value(e), e.op)).collect();
    // stable: equal values keep window order
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let capacity = win.capacity() as f64;
    let weight = |r: usize| libm::pow(decay_d, r as f64) * (capacity - r as f64);
    let mut groups = Vec::new();
    let mut i = 0;
    while i < scored.len() {
        let mut j = i + 1;
        while j < scored.len() && scored[j].0 == scored[i].0 {
            j += 1;
        }
        let total: f64 = (i + 1..=j).map(weight).sum();
        let members = scored[i..j].iter().map(|s| s.1).collect();
        groups.push((total / (j - i) as f64, members));
        i = j;
    }
    groups
}

pub fn rank_reward(kind: RewardKind, win: &WindowMemory, op: OperatorId, decay_d: f64) -> f64 {
    let groups = rank_groups(win, decay_d);
    match kind {
        RewardKind::SumOfRank => {
            let mut own = 0.0;
            let mut total = 0.0;
            for (w, members) in &groups {
                own += w * members.iter().filter(|&&m| m == op).count() as f64;
                total += w * members.len() as f64;
            }
            if total > 0.0 {
                own / total
            } else {
                0.0
            }
        }
        RewardKind::Auc => {
            // ROC-style curve: own entries step up, others step right; a tie
            // group mixing both is a diagonal segment.
            let mut height = 0.0;
            let mut width = 0.0;
            let mut area = 0.0;
            for (w, members) in &groups {
                let own = members.iter().filter(|&&m| m == op).count() as f64;
                let up = w * own;
                let right = w * (members.len() as f64 - own);
                area += right * (height + 0.5 * up);
                height += up;
                width += right;
            }
            if height <= 0.0 {
                0.0
            } else if width <= 0.0 {
                1.0
            } else {
                area / (height * width)
            }
        }
        _ => panic!("{} is not a rank reward", kind.name()),
    }
}

pub fn success_reward(
    kind: RewardKind,
    mem: &GenerationMemory,
    op: OperatorId,
    params: &RewardParams,
    np: usize,
) -> f64 {
    match kind {
        RewardKind::SuccessRate => {
            let sum: f64 = mem
                .horizon(params.max_gen.max(1))
                .iter()
                .map(|g| {
                    let apps = g.applications(op);
                    if apps == 0 {
                        return 0.0;
                    }
                    let own = g.n_succ[op.0] as f64;
                    let all: usize = g.n_succ.iter().sum();
                    (libm::pow(own, f64::from(params.gamma_sr)) + params.frac * all as f64) / apps as f64
                })
                .sum();
            sum + params.eps_noise
        }
        RewardKind::ImmediateSuccess => match mem.history().last() {
            Some(g) if np > 0 => g.n_succ[op.0] as f64 / np as f64,
            _ => 0.0,
        },
        _ => panic!("{} is not a success reward", kind.name()),
    }
}

pub fn fitness_sum_reward(
    kind: RewardKind,
    mem: &GenerationMemory,
    win: &WindowMemory,
    op: OperatorId,
    params: &RewardParams,
) -> f64 {
    let metric = mem.metric();
    match kind {
        RewardKind::SuccessSum => {
            let (mut num, mut den) = (0.0, 0usize);
            for g in mem.horizon(params.max_gen.max(1)) {
                num += g.credit_sum(op, metric);
                den += g.applications(op);
            }
            if den == 0 {
                0.0
            } else {
                num / den as f64
            }
        }
        RewardKind::NormSuccessSumGen => mem
            .horizon(params.max_gen.max(1))
            .iter()
            .map(|g| {
                let apps = g.applications(op);
                if apps == 0 {
                    0.0
                } else {
                    g.credit_sum(op, metric) / apps as f64
                }
            })
            .sum(),
        RewardKind::NormSuccessSumWindow => {
            let means = window_means(win, mem.operator_count().max(op.0 + 1));
            let Some(own) = means[op.0] else {
                return 0.0;
            };
            if params.omega == 0 {
                return own;
            }
            let best = means.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
            if best == 0.0 || !best.is_finite() {
                0.0
            } else {
                own / best
            }
        }
        _ => panic!("{} is not a fitness-sum reward", kind.name()),
    }
}

fn window_means(win: &WindowMemory, k: usize) -> Vec<Option<f64>> {
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for e in win.entries() {
        if e.op.0 < k {
            sums[e.op.0] += win.value(e);
            counts[e.op.0] += 1;
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &c)| (c > 0).then(|| s / c as f64))
        .collect()
}

pub fn best_offspring_reward(kind: RewardKind, mem: &GenerationMemory, op: OperatorId, params: &RewardParams) -> f64 {
    let metric = mem.metric();
    match kind {
        RewardKind::Best2Gen => {
            let last_two = mem.horizon(2);
            let (prev, cur) = match last_two {
                [cur] => (None, cur),
                [prev, cur] => (Some(prev), cur),
                _ => return 0.0,
            };
            let b_cur = cur.best_credit(op, metric);
            let b_prev = prev.map_or(0.0, |g| g.best_credit(op, metric));
            let a_cur = cur.applications(op) as f64;
            let a_prev = prev.map_or(0.0, |g| g.applications(op) as f64);
            let best_factor = guarded_power(b_prev, params.alpha);
            let count_factor = guarded_power(libm::fabs(a_cur - a_prev), params.beta);
            params.c_scale * (b_cur - b_prev) / (best_factor * count_factor)
        }
        RewardKind::NormBestSum => {
            let horizon = mem.horizon(params.max_gen.max(1));
            let max_gen = params.max_gen.max(1) as f64;
            let own: f64 = horizon
                .iter()
                .map(|g| libm::pow(g.best_credit(op, metric), f64::from(params.rho)))
                .sum::<f64>()
                / max_gen;
            if params.alpha == 0 {
                return own;
            }
            let best = (0..mem.operator_count())
                .map(|j| {
                    horizon
                        .iter()
                        .map(|g| g.best_credit(OperatorId(j), metric))
                        .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            if best == 0.0 || !best.is_finite() {
                0.0
            } else {
                own / best
            }
        }
        _ => panic!("{} is not a best-offspring reward", kind.name()),
    }
}

// A zero base contributes a factor of one instead of a zero divisor.
fn guarded_power(base: f64, exp: u32) -> f64 {
    if exp == 0 || base == 0.0 {
        1.0
    } else {
        libm::pow(base, f64::from(exp))
    }
}

/// Reward of every operator after the latest committed generation.
pub fn compute_rewards(choice: &RewardChoice, mem: &GenerationMemory, win: &WindowMemory, np: usize) -> Vec<f64> {
    let k = mem.operator_count();
    let p = &choice.params;
    let ops = (0..k).map(OperatorId);
    let rewards: Vec<f64> = match choice.kind {
        RewardKind::ParetoDominance | RewardKind::ParetoRank | RewardKind::CompassProjection => {
            let coords: Vec<_> = ops.map(|op| operator_coordinate(mem, op, p.fix_appl)).collect();
            diversity_quality_reward(choice.kind, &coords, p.theta)
        }
        RewardKind::Auc | RewardKind::SumOfRank => ops.map(|op| rank_reward(choice.kind, win, op, p.decay_d)).collect(),
        RewardKind::SuccessRate | RewardKind::ImmediateSuccess => {
            ops.map(|op| success_reward(choice.kind, mem, op, p, np)).collect()
        }
        RewardKind::SuccessSum | RewardKind::NormSuccessSumWindow | RewardKind::NormSuccessSumGen => {
            ops.map(|op| fitness_sum_reward(choice.kind, mem, win, op, p)).collect()
        }
        RewardKind::Best2Gen | RewardKind::NormBestSum => {
            ops.map(|op| best_offspring_reward(choice.kind, mem, op, p)).collect()
        }
    };
    rewards
        .into_iter()
        .map(|r| if r.is_finite() { r } else { 0.0 })
        .collect()
}

/// Per-operator application counts within the reward's memory scope, as used
/// by the UCB quality.
pub fn counts_in_scope(choice: &RewardChoice, mem: &GenerationMemory, win: &WindowMemory) -> Vec<usize> {
    let k = mem.operator_count();
    match choice.kind.scope() {
        Scope::RecentApplications => (0..k)
            .map(|op| mem.recent(OperatorId(op)).len().min(choice.params.fix_appl.max(1)))
            .collect(),
        Scope::Window => win.counts(k),
        Scope::Generations => (0..k)
            .map(|op| mem.applications_in_horizon(OperatorId(op), choice.params.max_gen).succ)
            .collect(),
    }
}
