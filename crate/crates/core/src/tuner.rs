//! Offline configurator: iterated racing over components, AOS
//! hyper-parameters and DE parameters.
//!
//! Each iteration samples candidates around the current elites, races them
//! instance by instance and drops any candidate whose mean rank trails the
//! leader by at least `margin`. Elimination uses average ranks in place of a
//! Friedman test.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::bench::Problem;
use crate::config::AosConfig;
use crate::engine::{run_with, DeParams, MutationStrategy, RunOptions};
use crate::metrics::OffspringMetric;
use crate::policy::{ProbabilityKind, QualityKind, SelectionKind};
use crate::reward::RewardKind;
use crate::rng::{mix_seed, RandomStream};
use crate::{Error, Result};

/// Parameter name to value. Categorical values are stored as their code.
pub type Assignment = BTreeMap<String, f64>;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Domain {
    Real { lo: f64, hi: f64 },
    Integer { lo: i64, hi: i64 },
    Categorical { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Condition {
    pub parent: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ParamDef {
    pub name: String,
    pub domain: Domain,
    #[cfg_attr(feature = "serde", serde(default))]
    pub condition: Option<Condition>,
}

/// Parameters in dependency order: a condition may only refer to an earlier
/// parameter.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ParameterSpace {
    pub parameters: Vec<ParamDef>,
}

fn real(name: &str, lo: f64, hi: f64, cond: Option<Condition>) -> ParamDef {
    ParamDef {
        name: name.to_string(),
        domain: Domain::Real { lo, hi },
        condition: cond,
    }
}

fn int(name: &str, lo: i64, hi: i64, cond: Option<Condition>) -> ParamDef {
    ParamDef {
        name: name.to_string(),
        domain: Domain::Integer { lo, hi },
        condition: cond,
    }
}

fn cat(name: &str, values: &[f64], cond: Option<Condition>) -> ParamDef {
    ParamDef {
        name: name.to_string(),
        domain: Domain::Categorical {
            values: values.to_vec(),
        },
        condition: cond,
    }
}

fn when(parent: &str, kinds: &[usize]) -> Option<Condition> {
    Some(Condition {
        parent: parent.to_string(),
        values: kinds.iter().map(|&k| k as f64).collect(),
    })
}

fn codes(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64).collect()
}

impl Default for ParameterSpace {
    /// The full tuning space. Open intervals are closed at 0.01 from the
    /// excluded end; `p_min` stops at 0.1 so that nine operators keep
    /// `K * p_min < 1`.
    fn default() -> Self {
        use RewardKind as R;
        let r = |k: &[R]| when("reward", &k.iter().map(|k| k.index()).collect::<Vec<_>>());
        let q = |k: &[QualityKind]| when("quality", &k.iter().map(|k| k.index()).collect::<Vec<_>>());
        let p = |k: &[ProbabilityKind]| when("probability", &k.iter().map(|k| k.index()).collect::<Vec<_>>());
        let s = |k: &[SelectionKind]| when("selection", &k.iter().map(|k| k.index()).collect::<Vec<_>>());
        let parameters = vec![
            real("F", 0.1, 2.0, None),
            real("CR", 0.1, 1.0, None),
            int("NP", 50, 400, None),
            real("top_NP", 0.02, 1.0, None),
            cat("om", &codes(6), None),
            cat("reward", &codes(12), None),
            cat("quality", &codes(5), None),
            cat("probability", &codes(3), None),
            cat("selection", &codes(5), None),
            int(
                "fix_appl",
                10,
                50,
                r(&[R::ParetoDominance, R::ParetoRank, R::CompassProjection]),
            ),
            int(
                "max_gen",
                1,
                50,
                r(&[R::SuccessRate, R::SuccessSum, R::NormSuccessSumGen, R::NormBestSum]),
            ),
            cat("theta", &[36.0, 45.0, 54.0, 90.0], r(&[R::CompassProjection])),
            int("window_w", 20, 150, r(&[R::Auc, R::SumOfRank, R::NormSuccessSumWindow])),
            real("decay_d", 0.0, 1.0, r(&[R::Auc, R::SumOfRank])),
            cat("gamma_sr", &[1.0, 2.0], r(&[R::SuccessRate])),
            real("frac", 0.0, 1.0, r(&[R::SuccessRate])),
            real("eps_noise", 0.0, 1.0, r(&[R::SuccessRate])),
            cat("omega", &[0.0, 1.0], r(&[R::NormSuccessSumWindow])),
            real("c_scale", 0.001, 1.0, r(&[R::Best2Gen])),
            cat("alpha", &[0.0, 1.0], r(&[R::Best2Gen, R::NormBestSum])),
            cat("beta", &[0.0, 1.0], r(&[R::Best2Gen])),
            cat("rho", &[1.0, 2.0, 3.0], r(&[R::NormBestSum])),
            real(
                "delta",
                0.01,
                0.99,
                q(&[QualityKind::WeightedSum, QualityKind::WeightedNormalisedSum]),
            ),
            real("c_ucb", 0.01, 0.99, q(&[QualityKind::Ucb])),
            real("q_min", 0.01, 1.0, q(&[QualityKind::WeightedNormalisedSum])),
            real("c1", 0.01, 0.99, q(&[QualityKind::Bellman])),
            real("c2", 0.01, 0.99, q(&[QualityKind::Bellman])),
            real("gamma_b", 0.01, 0.99, q(&[QualityKind::Bellman])),
            real(
                "p_min",
                0.0,
                0.1,
                p(&[ProbabilityKind::NormalisedQuality, ProbabilityKind::BiasedRule]),
            ),
            real("eps_p", 0.01, 0.99, p(&[ProbabilityKind::NormalisedQuality])),
            real("mu", 0.01, 0.99, p(&[ProbabilityKind::BiasedRule])),
            real("p_max", 0.11, 0.99, p(&[ProbabilityKind::BiasedRule])),
            real(
                "eps",
                0.0,
                1.0,
                s(&[SelectionKind::EpsilonGreedy, SelectionKind::ProportionalGreedy]),
            ),
        ];
        Self { parameters }
    }
}

impl ParameterSpace {
    pub fn get(&self, name: &str) -> Option<&ParamDef> {
        self.parameters.iter().find(|p| p.name == name)
    }

    /// True when `def` is active under the values assigned so far.
    pub fn is_active(def: &ParamDef, assigned: &Assignment) -> bool {
        match &def.condition {
            None => true,
            Some(c) => assigned.get(&c.parent).is_some_and(|v| c.values.contains(v)),
        }
    }

    /// Checks names, ranges and condition ordering.
    pub fn validate(&self) -> Result<()> {
        for (i, def) in self.parameters.iter().enumerate() {
            let mut scratch = (
                AosConfig::from_components(crate::config::all_component_tuples()[0]),
                DeParams::default(),
            );
            set_param(&mut scratch.0, &mut scratch.1, &def.name, 0.0)
                .map(|_| ())
                .or_else(|e| match e {
                    Error::UnknownParameter(_) => Err(e),
                    _ => Ok(()),
                })?;
            let ok = match &def.domain {
                Domain::Real { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
                Domain::Integer { lo, hi } => lo <= hi,
                Domain::Categorical { values } => !values.is_empty(),
            };
            if !ok {
                return Err(Error::config(def.name.clone(), "empty domain"));
            }
            if let Some(c) = &def.condition {
                if !self.parameters[..i].iter().any(|p| p.name == c.parent) {
                    return Err(Error::config(
                        def.name.clone(),
                        "condition refers to a later or unknown parameter",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Applies one parameter to a configuration.
pub fn set_param(aos: &mut AosConfig, de: &mut DeParams, name: &str, v: f64) -> Result<()> {
    let idx = |n: usize| -> Result<usize> {
        let i = libm::round(v);
        if i < 0.0 || i as usize >= n || i != v {
            return Err(Error::config(name.to_string(), "component code out of range"));
        }
        Ok(i as usize)
    };
    let count = |v: f64| libm::round(v).max(0.0) as usize;
    let bit = |v: f64| libm::round(v).max(0.0) as u32;
    let r = &mut aos.reward.params;
    let q = &mut aos.quality.params;
    let p = &mut aos.probability.params;
    match name {
        "F" => de.f_scale = v,
        "CR" => de.cr = v,
        "NP" => de.np = count(v),
        "top_NP" => de.top_np = v,
        "om" => aos.metric = OffspringMetric::ALL[idx(6)?],
        "reward" => aos.reward.kind = RewardKind::ALL[idx(12)?],
        "quality" => aos.quality.kind = QualityKind::ALL[idx(5)?],
        "probability" => aos.probability.kind = ProbabilityKind::ALL[idx(3)?],
        "selection" => aos.selection.kind = SelectionKind::ALL[idx(5)?],
        "fix_appl" => r.fix_appl = count(v),
        "max_gen" => r.max_gen = count(v),
        "theta" => r.theta = v,
        "window_w" => r.window_w = count(v),
        "decay_d" => r.decay_d = v,
        "gamma_sr" => r.gamma_sr = bit(v),
        "frac" => r.frac = v,
        "eps_noise" => r.eps_noise = v,
        "omega" => r.omega = bit(v),
        "c_scale" => r.c_scale = v,
        "alpha" => r.alpha = bit(v),
        "beta" => r.beta = bit(v),
        "rho" => r.rho = bit(v),
        "delta" => q.delta = v,
        "c_ucb" => q.c_ucb = v,
        "q_min" => q.q_min = v,
        "c1" => q.c1 = v,
        "c2" => q.c2 = v,
        "gamma_b" => q.gamma_b = v,
        "p_min" => p.p_min = v,
        "eps_p" => p.eps_p = v,
        "mu" => p.mu = v,
        "p_max" => p.p_max = v,
        "eps" => aos.selection.eps = v,
        _ => return Err(Error::UnknownParameter(name.to_string())),
    }
    Ok(())
}

/// Reads one parameter from a configuration.
pub fn get_param(aos: &AosConfig, de: &DeParams, name: &str) -> Result<f64> {
    let r = &aos.reward.params;
    let q = &aos.quality.params;
    let p = &aos.probability.params;
    Ok(match name {
        "F" => de.f_scale,
        "CR" => de.cr,
        "NP" => de.np as f64,
        "top_NP" => de.top_np,
        "om" => aos.metric.index() as f64,
        "reward" => aos.reward.kind.index() as f64,
        "quality" => aos.quality.kind.index() as f64,
        "probability" => aos.probability.kind.index() as f64,
        "selection" => aos.selection.kind.index() as f64,
        "fix_appl" => r.fix_appl as f64,
        "max_gen" => r.max_gen as f64,
        "theta" => r.theta,
        "window_w" => r.window_w as f64,
        "decay_d" => r.decay_d,
        "gamma_sr" => f64::from(r.gamma_sr),
        "frac" => r.frac,
        "eps_noise" => r.eps_noise,
        "omega" => f64::from(r.omega),
        "c_scale" => r.c_scale,
        "alpha" => f64::from(r.alpha),
        "beta" => f64::from(r.beta),
        "rho" => f64::from(r.rho),
        "delta" => q.delta,
        "c_ucb" => q.c_ucb,
        "q_min" => q.q_min,
        "c1" => q.c1,
        "c2" => q.c2,
        "gamma_b" => q.gamma_b,
        "p_min" => p.p_min,
        "eps_p" => p.eps_p,
        "mu" => p.mu,
        "p_max" => p.p_max,
        "eps" => aos.selection.eps,
        _ => return Err(Error::UnknownParameter(name.to_string())),
    })
}

/// Builds a configuration from an assignment; unassigned parameters keep
/// their defaults. `base` supplies those defaults and the strategy set.
pub fn config_from_assignment(a: &Assignment, base: &(AosConfig, DeParams)) -> Result<(AosConfig, DeParams)> {
    let (mut aos, mut de) = base.clone();
    // components first so that later parameters land on the right choice
    for (name, v) in a {
        if matches!(name.as_str(), "om" | "reward" | "quality" | "probability" | "selection") {
            set_param(&mut aos, &mut de, name, *v)?;
        }
    }
    for (name, v) in a {
        set_param(&mut aos, &mut de, name, *v)?;
    }
    Ok((aos, de))
}

/// Active parameters of `space` read from a configuration.
pub fn assignment_from_config(space: &ParameterSpace, aos: &AosConfig, de: &DeParams) -> Result<Assignment> {
    let mut a = Assignment::new();
    for def in &space.parameters {
        if ParameterSpace::is_active(def, &a) {
            a.insert(def.name.clone(), get_param(aos, de, &def.name)?);
        }
    }
    Ok(a)
}

/// Default base for sampled configurations: all nine strategies, default
/// hyper-parameters.
pub fn default_base() -> (AosConfig, DeParams) {
    (
        AosConfig::from_components(crate::config::all_component_tuples()[0]),
        DeParams::default(),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub id: usize,
    pub assignment: Assignment,
    pub aos: AosConfig,
    pub de: DeParams,
    /// Cost per instance step, in race order.
    pub costs: Vec<f64>,
    pub alive: bool,
}

impl Candidate {
    pub fn mean_cost(&self) -> f64 {
        if self.costs.is_empty() {
            f64::INFINITY
        } else {
            self.costs.iter().sum::<f64>() / self.costs.len() as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerOptions {
    /// Standard deviation of numeric perturbations as a fraction of the range.
    pub sigma_fraction: f64,
    /// Probability that a categorical keeps the elite's value.
    pub keep_probability: f64,
    /// Resampling attempts before a duplicate or invalid draw is dropped.
    pub max_attempts: usize,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            sigma_fraction: 0.2,
            keep_probability: 0.7,
            max_attempts: 100,
        }
    }
}

fn round2(v: f64) -> f64 {
    libm::round(v * 100.0) / 100.0
}

fn truncated_normal(mean: f64, sd: f64, lo: f64, hi: f64, rng: &mut RandomStream) -> f64 {
    if sd <= 0.0 || lo >= hi {
        return mean.clamp(lo, hi);
    }
    for _ in 0..1000 {
        let v = mean + sd * rng.normal();
        if v >= lo && v <= hi {
            return v;
        }
    }
    mean.clamp(lo, hi)
}

/// Draws one value of `def`; `centre` is the elite's value when it has one.
pub fn sample_value(def: &ParamDef, centre: Option<f64>, opts: &SamplerOptions, rng: &mut RandomStream) -> f64 {
    match &def.domain {
        Domain::Real { lo, hi } => {
            let v = match centre {
                Some(c) => truncated_normal(c, opts.sigma_fraction * (hi - lo), *lo, *hi, rng),
                None => rng.range(*lo, *hi),
            };
            round2(v).clamp(*lo, *hi)
        }
        Domain::Integer { lo, hi } => {
            let (lo, hi) = (*lo as f64, *hi as f64);
            let v = match centre {
                Some(c) => truncated_normal(c, opts.sigma_fraction * (hi - lo + 1.0), lo - 0.5, hi + 0.5, rng),
                None => rng.range(lo - 0.5, hi + 0.5),
            };
            libm::round(v).clamp(lo, hi)
        }
        Domain::Categorical { values } => match centre {
            Some(c) if values.contains(&c) && rng.uniform() < opts.keep_probability => c,
            _ => values[rng.below(values.len())],
        },
    }
}

fn sample_assignment(
    space: &ParameterSpace,
    parent: Option<&Assignment>,
    opts: &SamplerOptions,
    rng: &mut RandomStream,
) -> Assignment {
    let mut a = Assignment::new();
    for def in &space.parameters {
        if ParameterSpace::is_active(def, &a) {
            let centre = parent.and_then(|p| p.get(&def.name)).copied();
            a.insert(def.name.clone(), sample_value(def, centre, opts, rng));
        }
    }
    a
}

/// Samples up to `n` new valid candidates, distinct from each other and
/// from `existing`. Elites act as centres with rank-based weights (first is
/// best); without elites every marginal is uniform.
#[allow(clippy::too_many_arguments)]
pub fn sample_candidates(
    space: &ParameterSpace,
    n: usize,
    elites: &[Candidate],
    existing: &[Assignment],
    base: &(AosConfig, DeParams),
    opts: &SamplerOptions,
    next_id: &mut usize,
    rng: &mut RandomStream,
) -> Vec<Candidate> {
    let ne = elites.len();
    let weight_total = (ne * (ne + 1) / 2) as f64;
    let mut out: Vec<Candidate> = Vec::new();
    for _ in 0..n {
        for _ in 0..opts.max_attempts.max(1) {
            let parent = if ne == 0 {
                None
            } else {
                let mut u = rng.uniform() * weight_total;
                let mut pick = ne - 1;
                for (rank, _) in elites.iter().enumerate() {
                    let w = (ne - rank) as f64;
                    if u < w {
                        pick = rank;
                        break;
                    }
                    u -= w;
                }
                Some(&elites[pick].assignment)
            };
            let a = sample_assignment(space, parent, opts, rng);
            let duplicate = existing.contains(&a)
                || elites.iter().any(|e| e.assignment == a)
                || out.iter().any(|c| c.assignment == a);
            if duplicate {
                continue;
            }
            let Ok((aos, de)) = config_from_assignment(&a, base) else {
                continue;
            };
            if aos.validate().is_err() || de.validate(&aos.strategies).is_err() {
                continue;
            }
            out.push(Candidate {
                id: *next_id,
                assignment: a,
                aos,
                de,
                costs: Vec::new(),
                alive: true,
            });
            *next_id += 1;
            break;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RaceBudget {
    /// Total target-algorithm runs allowed.
    pub total_runs: usize,
    pub min_instances: usize,
    pub survivors_floor: usize,
    /// Mean-rank gap to the leader at which a candidate is dropped.
    pub margin: f64,
}

impl Default for RaceBudget {
    fn default() -> Self {
        Self {
            total_runs: 1000,
            min_instances: 5,
            survivors_floor: 1,
            margin: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub iteration: usize,
    pub candidate: usize,
    pub instance: usize,
    pub cost: f64,
    /// Still alive after the elimination step of this instance.
    pub alive: bool,
}

/// Average ranks (1 = best) of `values`; ties share their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Mean rank of each listed candidate over instance steps `0..steps`.
fn mean_ranks(cands: &[Candidate], members: &[usize], steps: usize) -> Vec<f64> {
    let mut sums = vec![0.0; members.len()];
    for t in 0..steps {
        let costs: Vec<f64> = members.iter().map(|&m| cands[m].costs[t]).collect();
        for (s, r) in sums.iter_mut().zip(average_ranks(&costs)) {
            *s += r;
        }
    }
    sums.into_iter().map(|s| s / steps.max(1) as f64).collect()
}

/// Races `cands` over instance steps `0, 1, ...`, spending at most
/// `max_runs` evaluations. Costs already present are reused. Returns the
/// number of runs spent. `eval(candidate, step)` returns one cost.
pub fn race<E>(
    cands: &mut [Candidate],
    budget: &RaceBudget,
    max_runs: usize,
    iteration: usize,
    log: &mut Vec<LogRow>,
    eval: &mut E,
) -> Result<usize>
where
    E: FnMut(&Candidate, usize) -> Result<f64>,
{
    if cands.len() < 2 {
        return Err(Error::TooFewCandidates(cands.len()));
    }
    let min_inst = budget.min_instances.max(1);
    let needed: usize = cands.iter().map(|c| min_inst.saturating_sub(c.costs.len())).sum();
    if max_runs < needed {
        return Err(Error::RaceBudget {
            total_runs: max_runs,
            needed,
        });
    }
    for c in cands.iter_mut() {
        c.alive = true;
    }
    let floor = budget.survivors_floor.max(1);
    let mut spent = 0usize;
    let mut t = 0usize;
    loop {
        let alive: Vec<usize> = (0..cands.len()).filter(|&i| cands[i].alive).collect();
        if t >= min_inst && alive.len() <= floor {
            break;
        }
        let missing = alive.iter().filter(|&&i| cands[i].costs.len() <= t).count();
        if spent + missing > max_runs {
            break;
        }
        for &i in &alive {
            if cands[i].costs.len() <= t {
                debug_assert_eq!(cands[i].costs.len(), t);
                let cost = eval(&cands[i], t)?;
                cands[i].costs.push(cost);
                spent += 1;
            }
        }
        t += 1;
        if t >= min_inst {
            let ranks = mean_ranks(cands, &alive, t);
            let best = ranks.iter().copied().fold(f64::INFINITY, f64::min);
            let mut order: Vec<usize> = (0..alive.len()).collect();
            // worst first, ties broken towards later candidates
            order.sort_by(|&a, &b| ranks[b].total_cmp(&ranks[a]).then(b.cmp(&a)));
            let mut remaining = alive.len();
            for o in order {
                if remaining <= floor || ranks[o] - best < budget.margin {
                    break;
                }
                cands[alive[o]].alive = false;
                remaining -= 1;
            }
        }
        for &i in &alive {
            log.push(LogRow {
                iteration,
                candidate: cands[i].id,
                instance: t - 1,
                cost: cands[i].costs[t - 1],
                alive: cands[i].alive,
            });
        }
        if alive.len() == 1 {
            break;
        }
    }
    // costs recorded beyond the common prefix of survivors are dropped so
    // that elites carry aligned histories
    let alive_len = cands
        .iter()
        .filter(|c| c.alive)
        .map(|c| c.costs.len())
        .min()
        .unwrap_or(0);
    for c in cands.iter_mut().filter(|c| c.alive) {
        c.costs.truncate(alive_len);
    }
    Ok(spent)
}

/// Alive candidates sorted by mean rank, best first.
pub fn ranked_survivors(cands: &[Candidate]) -> Vec<Candidate> {
    let members: Vec<usize> = (0..cands.len()).filter(|&i| cands[i].alive).collect();
    let steps = members.iter().map(|&i| cands[i].costs.len()).min().unwrap_or(0);
    let ranks = mean_ranks(cands, &members, steps);
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| {
        ranks[a]
            .total_cmp(&ranks[b])
            .then(cands[members[a]].id.cmp(&cands[members[b]].id))
    });
    order.into_iter().map(|o| cands[members[o]].clone()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneOptions {
    pub budget: RaceBudget,
    pub sampler: SamplerOptions,
    /// Elites carried between iterations.
    pub elites: usize,
    /// Iteration count; `None` uses `2 + log2(parameter count)`.
    pub iterations: Option<usize>,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            budget: RaceBudget::default(),
            sampler: SamplerOptions::default(),
            elites: 3,
            iterations: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneOutcome {
    pub best: Candidate,
    pub runs_used: usize,
    pub log: Vec<LogRow>,
    pub iterations: usize,
}

/// Iterated racing. `starting` configurations join the first race;
/// `eval(candidate, step)` returns the cost of one run.
pub fn tune<E>(
    space: &ParameterSpace,
    starting: &[(AosConfig, DeParams)],
    base: &(AosConfig, DeParams),
    options: &TuneOptions,
    seed: u64,
    mut eval: E,
) -> Result<TuneOutcome>
where
    E: FnMut(&Candidate, usize) -> Result<f64>,
{
    space.validate()?;
    let budget = &options.budget;
    let min_inst = budget.min_instances.max(1);
    let mut rng = RandomStream::new(seed);
    let n_params = space.parameters.len().max(1);
    let iterations = options
        .iterations
        .unwrap_or(2 + (usize::BITS - n_params.leading_zeros()) as usize - 1)
        .max(1);
    let mut next_id = 0usize;
    let mut log = Vec::new();
    let mut used = 0usize;
    let mut elites: Vec<Candidate> = Vec::new();
    let mut seen: Vec<Assignment> = Vec::new();

    let mut initial: Vec<Candidate> = Vec::new();
    for (aos, de) in starting {
        let assignment = assignment_from_config(space, aos, de)?;
        if initial.iter().any(|c| c.assignment == assignment) {
            continue;
        }
        initial.push(Candidate {
            id: next_id,
            assignment,
            aos: aos.clone(),
            de: de.clone(),
            costs: Vec::new(),
            alive: true,
        });
        next_id += 1;
    }

    let mut done_iterations = 0;
    for j in 1..=iterations {
        let remaining = budget.total_runs - used;
        let iter_budget = remaining / (iterations - j + 1);
        let per_candidate = min_inst + j.min(5);
        let target = (iter_budget / per_candidate).max(2);
        let mut cands: Vec<Candidate> = elites.clone();
        if j == 1 {
            cands.append(&mut initial);
        }
        let fresh_needed = target.saturating_sub(cands.len());
        seen.extend(cands.iter().map(|c| c.assignment.clone()));
        let mut fresh = sample_candidates(
            space,
            fresh_needed,
            &elites,
            &seen,
            base,
            &options.sampler,
            &mut next_id,
            &mut rng,
        );
        seen.extend(fresh.iter().map(|c| c.assignment.clone()));
        cands.append(&mut fresh);

        if cands.len() == 1 {
            // nothing to race against: settle the lone candidate's costs
            let c = &mut cands[0];
            while c.costs.len() < min_inst {
                if used >= budget.total_runs {
                    return Err(Error::RaceBudget {
                        total_runs: budget.total_runs,
                        needed: min_inst,
                    });
                }
                let cost = eval(c, c.costs.len())?;
                log.push(LogRow {
                    iteration: j,
                    candidate: c.id,
                    instance: c.costs.len(),
                    cost,
                    alive: true,
                });
                c.costs.push(cost);
                used += 1;
            }
            elites = cands;
            done_iterations = j;
            break;
        }
        if cands.is_empty() {
            break;
        }
        let needed: usize = cands.iter().map(|c| min_inst.saturating_sub(c.costs.len())).sum();
        let race_budget = if j == iterations {
            remaining
        } else {
            iter_budget.max(needed)
        };
        if race_budget > remaining || needed > race_budget {
            if elites.is_empty() {
                return Err(Error::RaceBudget {
                    total_runs: remaining,
                    needed,
                });
            }
            break;
        }
        used += race(&mut cands, budget, race_budget, j, &mut log, &mut eval)?;
        let mut survivors = ranked_survivors(&cands);
        survivors.truncate(options.elites.max(1));
        elites = survivors;
        done_iterations = j;
    }

    let best = elites.into_iter().next().ok_or(Error::TooFewCandidates(0))?;
    Ok(TuneOutcome {
        best,
        runs_used: used,
        log,
        iterations: done_iterations,
    })
}

/// Precision cost of one run: `log10(max(best - f_opt, 1e-8))`.
pub fn precision_cost(best: f64, f_opt: f64) -> f64 {
    libm::log10((best - f_opt).max(1e-8))
}

/// Cost sent to the racing loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostKind {
    /// `log10(max(best - f_opt, 1e-8))`
    Precision,
    /// Raw best fitness.
    BestFitness,
}

/// Tunes on benchmark problems. Instance step `t` runs problem
/// `train[t % len]` with a seed derived from `seed` and `t`. `base` fills
/// parameters the space leaves out.
#[allow(clippy::too_many_arguments)]
pub fn tune_problems(
    space: &ParameterSpace,
    train: &[Problem],
    run_budget_per_dim: u64,
    starting: &[(AosConfig, DeParams)],
    base: &(AosConfig, DeParams),
    options: &TuneOptions,
    cost: CostKind,
    seed: u64,
) -> Result<TuneOutcome> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let run_options = RunOptions {
        target_precision: Some(crate::engine::TARGET_PRECISION),
        record_trace: false,
    };
    tune(space, starting, base, options, seed, |c, t| {
        let p = &train[t % train.len()];
        let budget = run_budget_per_dim * p.dim as u64;
        let r = run_with(
            p,
            &c.de,
            &c.aos,
            budget.max(c.de.np as u64),
            mix_seed(&[seed, t as u64]),
            &run_options,
        )?;
        Ok(match cost {
            CostKind::Precision => precision_cost(r.best_fitness, p.f_opt),
            CostKind::BestFitness => r.best_fitness,
        })
    })
}

/// The four tuned starting configurations, all nine strategies enabled.
pub fn starting_configurations() -> Vec<(AosConfig, DeParams)> {
    crate::presets::TUNER_SEEDS
        .iter()
        .map(|n| crate::presets::preset_with_strategies(n, &MutationStrategy::ALL).expect("seed preset"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn candidate(id: usize) -> Candidate {
        let (aos, de) = default_base();
        Candidate {
            id,
            assignment: Assignment::new(),
            aos,
            de,
            costs: Vec::new(),
            alive: true,
        }
    }

    #[test]
    fn default_space_is_consistent() {
        let s = ParameterSpace::default();
        s.validate().unwrap();
        assert_eq!(s.parameters.len(), 33);
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), [3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn dominant_candidate_eliminates_the_other() {
        let mut cands = vec![candidate(0), candidate(1)];
        let budget = RaceBudget {
            total_runs: 100,
            min_instances: 3,
            survivors_floor: 1,
            margin: 1.0,
        };
        let mut log = Vec::new();
        let spent = race(&mut cands, &budget, 100, 1, &mut log, &mut |c, _| Ok(c.id as f64)).unwrap();
        assert_eq!(spent, 6);
        assert!(cands[0].alive && !cands[1].alive);
    }

    #[test]
    fn identical_candidates_survive() {
        let mut cands = vec![candidate(0), candidate(1), candidate(2)];
        let budget = RaceBudget {
            total_runs: 30,
            min_instances: 2,
            survivors_floor: 1,
            margin: 1.0,
        };
        let spent = race(&mut cands, &budget, 30, 1, &mut Vec::new(), &mut |_, _| Ok(1.0)).unwrap();
        assert!(cands.iter().all(|c| c.alive));
        assert_eq!(spent, 30);
    }

    #[test]
    fn survivors_floor_holds() {
        let mut cands: Vec<Candidate> = (0..10).map(candidate).collect();
        let budget = RaceBudget {
            total_runs: 1000,
            min_instances: 2,
            survivors_floor: 3,
            margin: 0.5,
        };
        race(&mut cands, &budget, 1000, 1, &mut Vec::new(), &mut |c, _| {
            Ok(c.id as f64)
        })
        .unwrap();
        assert_eq!(cands.iter().filter(|c| c.alive).count(), 3);
    }

    #[test]
    fn race_budget_checked_up_front() {
        let mut cands = vec![candidate(0), candidate(1)];
        let budget = RaceBudget {
            total_runs: 5,
            min_instances: 3,
            ..RaceBudget::default()
        };
        let mut calls = 0;
        let r = race(&mut cands, &budget, 5, 1, &mut Vec::new(), &mut |_, _| {
            calls += 1;
            Ok(0.0)
        });
        assert_eq!(
            r,
            Err(Error::RaceBudget {
                total_runs: 5,
                needed: 6
            })
        );
        assert_eq!(calls, 0);
        assert!(matches!(
            race(&mut cands[..1], &budget, 5, 1, &mut Vec::new(), &mut |_, _| Ok(0.0)),
            Err(Error::TooFewCandidates(1))
        ));
    }

    #[test]
    fn single_value_categorical_is_fixed() {
        let space = ParameterSpace {
            parameters: vec![cat("selection", &[1.0], None), real("F", 0.1, 2.0, None)],
        };
        let mut rng = RandomStream::new(0);
        let mut id = 0;
        let c = sample_candidates(
            &space,
            50,
            &[],
            &[],
            &default_base(),
            &SamplerOptions::default(),
            &mut id,
            &mut rng,
        );
        assert!(c
            .iter()
            .all(|c| c.assignment["selection"] == 1.0 && c.aos.selection.kind == SelectionKind::Greedy));
    }

    // Uniform categorical: each of 5 selection codes within 3 sigma of
    // n/5 under the exact multinomial.
    #[test]
    fn uniform_categorical_frequencies() {
        let space = ParameterSpace {
            parameters: vec![cat("selection", &codes(5), None)],
        };
        let def = &space.parameters[0];
        let mut rng = RandomStream::new(1);
        let n = 10_000;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            counts[sample_value(def, None, &SamplerOptions::default(), &mut rng) as usize] += 1;
        }
        let p = 0.2;
        let sd = libm::sqrt(n as f64 * p * (1.0 - p));
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    // Mean of N(0.5, 0.2) truncated to [0.1, 2.0]:
    // mu + sigma * (phi(a) - phi(b)) / (Phi(b) - Phi(a)).
    #[test]
    fn truncated_normal_mean_near_elite() {
        let def = real("F", 0.1, 2.0, None);
        let opts = SamplerOptions {
            sigma_fraction: 0.2 / 1.9,
            ..SamplerOptions::default()
        };
        let mut rng = RandomStream::new(2);
        let n = 1000;
        let mean = (0..n)
            .map(|_| sample_value(&def, Some(0.5), &opts, &mut rng))
            .sum::<f64>()
            / n as f64;
        let phi = |x: f64| libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * core::f64::consts::PI);
        let cdf = |x: f64| 0.5 * (1.0 + libm::erf(x / core::f64::consts::SQRT_2));
        let (a, b) = ((0.1 - 0.5) / 0.2, (2.0 - 0.5) / 0.2);
        let exact = 0.5 + 0.2 * (phi(a) - phi(b)) / (cdf(b) - cdf(a));
        assert!((mean - 0.5).abs() < 0.1);
        assert!((mean - exact).abs() < 0.03, "{mean} vs {exact}");
    }

    #[test]
    fn samples_respect_ranges_and_conditions() {
        let space = ParameterSpace::default();
        let mut rng = RandomStream::new(3);
        let mut id = 0;
        let cands = sample_candidates(
            &space,
            300,
            &[],
            &[],
            &default_base(),
            &SamplerOptions::default(),
            &mut id,
            &mut rng,
        );
        assert!(cands.len() >= 290);
        for c in &cands {
            for def in &space.parameters {
                let active = ParameterSpace::is_active(def, &c.assignment);
                assert_eq!(active, c.assignment.contains_key(&def.name), "{}", def.name);
                if let Some(v) = c.assignment.get(&def.name) {
                    match &def.domain {
                        Domain::Real { lo, hi } => assert!(v >= lo && v <= hi),
                        Domain::Integer { lo, hi } => assert!(*v >= *lo as f64 && *v <= *hi as f64),
                        Domain::Categorical { values } => assert!(values.contains(v)),
                    }
                }
            }
            c.aos.validate().unwrap();
        }
    }

    #[test]
    fn assignment_round_trip() {
        let space = ParameterSpace::default();
        for (aos, de) in starting_configurations() {
            let a = assignment_from_config(&space, &aos, &de).unwrap();
            let (aos2, de2) = config_from_assignment(&a, &(aos.clone(), de.clone())).unwrap();
            assert_eq!((aos2, de2), (aos, de));
        }
    }

    #[test]
    fn collapsed_space_returns_its_configuration() {
        let (aos, de) = crate::presets::preset("U-AOS-FW").unwrap();
        let space = ParameterSpace {
            parameters: vec![cat("selection", &[0.0], None), cat("quality", &[4.0], None)],
        };
        let opts = TuneOptions {
            budget: RaceBudget {
                total_runs: 20,
                min_instances: 3,
                ..RaceBudget::default()
            },
            ..TuneOptions::default()
        };
        let mut calls = 0;
        let out = tune(
            &space,
            &[(aos.clone(), de.clone())],
            &(aos.clone(), de.clone()),
            &opts,
            5,
            |_, t| {
                calls += 1;
                Ok(t as f64)
            },
        )
        .unwrap();
        assert_eq!((out.best.aos, out.best.de), (aos, de));
        assert_eq!(out.best.costs.len(), 3);
        assert_eq!(calls, 3);
    }

    #[test]
    fn tune_respects_budget_and_races_all_starting_points() {
        let space = ParameterSpace::default();
        let opts = TuneOptions {
            budget: RaceBudget {
                total_runs: 300,
                min_instances: 3,
                survivors_floor: 1,
                margin: 1.0,
            },
            ..TuneOptions::default()
        };
        let starting = starting_configurations();
        let mut calls = 0usize;
        let out = tune(&space, &starting, &default_base(), &opts, 9, |c, t| {
            calls += 1;
            Ok(c.de.f_scale + (t % 3) as f64)
        })
        .unwrap();
        assert!(calls <= 300 && out.runs_used == calls);
        for id in 0..4 {
            assert!(out.log.iter().any(|r| r.iteration == 1 && r.candidate == id));
        }
        let again = tune(&space, &starting, &default_base(), &opts, 9, |c, t| {
            Ok(c.de.f_scale + (t % 3) as f64)
        })
        .unwrap();
        assert_eq!(out, again);
    }
}
