//! Differential evolution host for an AOS method.

use alloc::vec;
use alloc::vec::Vec;

use crate::config::AosConfig;
use crate::error::config as invalid;
use crate::memory::{GenerationMemory, OmRecord, OperatorId, Solution, WindowMemory};
use crate::metrics::{compute_om, population_refs};
use crate::policy::{select_operator, update_probability, update_quality, AosState};
use crate::reward::{compute_rewards, counts_in_scope};
use crate::rng::RandomStream;
use crate::{Error, Result};

/// Default stopping precision relative to a known optimum.
pub const TARGET_PRECISION: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum MutationStrategy {
    Rand1,
    Rand2,
    RandToBest2,
    CurrToRand1,
    CurrToPbest1,
    CurrToPbest1Archived,
    Best1,
    Best2,
    CurrToBest1,
}

impl MutationStrategy {
    pub const ALL: [MutationStrategy; 9] = [
        MutationStrategy::Rand1,
        MutationStrategy::Rand2,
        MutationStrategy::RandToBest2,
        MutationStrategy::CurrToRand1,
        MutationStrategy::CurrToPbest1,
        MutationStrategy::CurrToPbest1Archived,
        MutationStrategy::Best1,
        MutationStrategy::Best2,
        MutationStrategy::CurrToBest1,
    ];

    /// The four classic strategies used by four-operator AOS experiments.
    pub const CLASSIC_FOUR: [MutationStrategy; 4] = [
        MutationStrategy::Rand1,
        MutationStrategy::Rand2,
        MutationStrategy::RandToBest2,
        MutationStrategy::CurrToRand1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MutationStrategy::Rand1 => "rand/1",
            MutationStrategy::Rand2 => "rand/2",
            MutationStrategy::RandToBest2 => "rand-to-best/2",
            MutationStrategy::CurrToRand1 => "curr-to-rand/1",
            MutationStrategy::CurrToPbest1 => "curr-to-pbest/1",
            MutationStrategy::CurrToPbest1Archived => "curr-to-pbest/1(archived)",
            MutationStrategy::Best1 => "best/1",
            MutationStrategy::Best2 => "best/2",
            MutationStrategy::CurrToBest1 => "curr-to-best/1",
        }
    }

    /// Random indices drawn distinct from each other and from the target.
    pub fn random_indices(self) -> usize {
        match self {
            MutationStrategy::Rand2 | MutationStrategy::RandToBest2 => 5,
            MutationStrategy::Best2 => 4,
            MutationStrategy::Rand1 | MutationStrategy::CurrToRand1 => 3,
            MutationStrategy::CurrToPbest1 | MutationStrategy::Best1 | MutationStrategy::CurrToBest1 => 2,
            // one from the population, one from population plus archive
            MutationStrategy::CurrToPbest1Archived => 2,
        }
    }

    pub fn min_population(self) -> usize {
        self.random_indices() + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DeParams {
    pub f_scale: f64,
    pub cr: f64,
    pub np: usize,
    pub top_np: f64,
}

impl Default for DeParams {
    fn default() -> Self {
        Self {
            f_scale: 1.05,
            cr: 0.55,
            np: 225,
            top_np: 0.51,
        }
    }
}

impl DeParams {
    pub fn validate(&self, strategies: &[MutationStrategy]) -> Result<()> {
        if !(self.f_scale.is_finite() && self.f_scale > 0.0) {
            return Err(invalid("de.f_scale", "must be positive and finite"));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(invalid("de.cr", "must lie in [0, 1]"));
        }
        if !(self.top_np > 0.0 && self.top_np <= 1.0) {
            return Err(invalid("de.top_np", "must lie in (0, 1]"));
        }
        for &s in strategies {
            if self.np < s.min_population() {
                return Err(Error::PopulationTooSmall {
                    strategy: s.name(),
                    np: self.np,
                    needed: s.min_population(),
                });
            }
        }
        Ok(())
    }

    /// Size of the pbest pool, at least one.
    pub fn pbest_count(&self) -> usize {
        let n = libm::ceil(self.top_np * self.np as f64) as usize;
        n.clamp(1, self.np)
    }
}

/// Black-box minimisation target on a box domain.
pub trait Objective {
    fn dim(&self) -> usize;
    /// Lower and upper bound shared by every coordinate.
    fn bounds(&self) -> (f64, f64);
    fn evaluate(&self, x: &[f64]) -> f64;
    /// Known optimal value, used for the precision stop.
    fn optimum(&self) -> Option<f64> {
        None
    }
}

/// Objective from a closure.
pub struct FnObjective<F> {
    pub dim: usize,
    pub bounds: (f64, f64),
    pub optimum: Option<f64>,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn optimum(&self) -> Option<f64> {
        self.optimum
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub members: Vec<Solution>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn fitnesses(&self) -> Vec<f64> {
        self.members.iter().map(|s| s.fitness).collect()
    }

    /// Index of the best member; the lowest index wins ties.
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, s) in self.members.iter().enumerate() {
            if s.fitness < self.members[best].fitness {
                best = i;
            }
        }
        best
    }

    fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.members[a].fitness.total_cmp(&self.members[b].fitness));
        idx
    }

    fn position(&self, i: usize) -> &[f64] {
        &self.members[i].position
    }
}

/// Replaced parents kept for the archived pbest strategy.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Archive {
    pub entries: Vec<Vec<f64>>,
    pub capacity: usize,
}

impl Archive {
    pub fn new(capacity: usize) -> Self {
        Self {
            entries: Vec::new(),
            capacity,
        }
    }

    /// Adds a position, evicting a random entry when full.
    pub fn push(&mut self, position: Vec<f64>, rng: &mut RandomStream) {
        if self.capacity == 0 {
            return;
        }
        if self.entries.len() < self.capacity {
            self.entries.push(position);
        } else {
            let j = rng.below(self.entries.len());
            self.entries[j] = position;
        }
    }
}

fn distinct_indices(n: usize, exclude: usize, count: usize, rng: &mut RandomStream) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(count);
    while out.len() < count {
        let r = rng.below(n);
        if r != exclude && !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

/// Donor vector for target `i`.
pub fn mutate(
    strategy: MutationStrategy,
    pop: &Population,
    i: usize,
    params: &DeParams,
    archive: &Archive,
    rng: &mut RandomStream,
) -> Vec<f64> {
    let f = params.f_scale;
    let np = pop.len();
    let r = distinct_indices(np, i, strategy.random_indices().min(np - 1), rng);
    let x = |k: usize| pop.position(k);
    let best = pop.best_index();
    let dim = pop.position(i).len();
    let combine = |base: &[f64], terms: &[(&[f64], f64)]| -> Vec<f64> {
        (0..dim)
            .map(|d| base[d] + f * terms.iter().map(|(v, s)| s * v[d]).sum::<f64>())
            .collect()
    };
    match strategy {
        MutationStrategy::Rand1 => combine(x(r[0]), &[(x(r[1]), 1.0), (x(r[2]), -1.0)]),
        MutationStrategy::Rand2 => combine(
            x(r[0]),
            &[(x(r[1]), 1.0), (x(r[2]), -1.0), (x(r[3]), 1.0), (x(r[4]), -1.0)],
        ),
        MutationStrategy::RandToBest2 => combine(
            x(r[0]),
            &[
                (x(best), 1.0),
                (x(r[0]), -1.0),
                (x(r[1]), 1.0),
                (x(r[2]), -1.0),
                (x(r[3]), 1.0),
                (x(r[4]), -1.0),
            ],
        ),
        MutationStrategy::CurrToRand1 => {
            combine(x(i), &[(x(r[0]), 1.0), (x(i), -1.0), (x(r[1]), 1.0), (x(r[2]), -1.0)])
        }
        MutationStrategy::CurrToPbest1 => {
            let pbest = pick_pbest(pop, params, rng);
            combine(x(i), &[(x(pbest), 1.0), (x(i), -1.0), (x(r[0]), 1.0), (x(r[1]), -1.0)])
        }
        MutationStrategy::CurrToPbest1Archived => {
            let pbest = pick_pbest(pop, params, rng);
            let r1 = r[0];
            // subtrahend from population plus archive, distinct from i and r1
            let union = np + archive.entries.len();
            let other = loop {
                let k = rng.below(union);
                if k != i && k != r1 {
                    break k;
                }
            };
            let sub: &[f64] = if other < np {
                x(other)
            } else {
                &archive.entries[other - np]
            };
            combine(x(i), &[(x(pbest), 1.0), (x(i), -1.0), (x(r1), 1.0), (sub, -1.0)])
        }
        MutationStrategy::Best1 => combine(x(best), &[(x(r[0]), 1.0), (x(r[1]), -1.0)]),
        MutationStrategy::Best2 => combine(
            x(best),
            &[(x(r[0]), 1.0), (x(r[1]), -1.0), (x(r[2]), 1.0), (x(r[3]), -1.0)],
        ),
        MutationStrategy::CurrToBest1 => {
            combine(x(i), &[(x(best), 1.0), (x(i), -1.0), (x(r[0]), 1.0), (x(r[1]), -1.0)])
        }
    }
}

fn pick_pbest(pop: &Population, params: &DeParams, rng: &mut RandomStream) -> usize {
    let ranked = pop.ranked();
    let pool = params.pbest_count().min(ranked.len());
    ranked[rng.below(pool)]
}

/// Binomial crossover with one forced donor dimension.
pub fn crossover(parent: &[f64], donor: &[f64], cr: f64, rng: &mut RandomStream) -> Vec<f64> {
    assert_eq!(parent.len(), donor.len(), "crossover length mismatch");
    let j_rand = rng.below(parent.len());
    parent
        .iter()
        .zip(donor)
        .enumerate()
        .map(|(j, (p, d))| if j == j_rand || rng.uniform() < cr { *d } else { *p })
        .collect()
}

/// Mirrors coordinates that left `[lo, hi]` back into the box.
pub fn reflect(x: &mut [f64], lo: f64, hi: f64) {
    let width = hi - lo;
    for v in x.iter_mut() {
        if *v >= lo && *v <= hi {
            continue;
        }
        if !v.is_finite() || width <= 0.0 {
            *v = if *v < lo { lo } else { hi };
            continue;
        }
        let period = 2.0 * width;
        let mut y = libm::fmod(*v - lo, period);
        if y < 0.0 {
            y += period;
        }
        if y > width {
            y = period - y;
        }
        *v = lo + y;
    }
}

/// True when the offspring replaces its parent (ties favour the offspring).
pub fn survival_select(parent: &Solution, offspring: &Solution) -> bool {
    offspring.fitness <= parent.fitness
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    /// Stop once `best - optimum` falls to this value; `None` disables it.
    pub target_precision: Option<f64>,
    pub record_trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            target_precision: Some(TARGET_PRECISION),
            record_trace: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub generation: usize,
    /// Evaluations used at the end of this generation.
    pub evaluations: u64,
    pub best_fitness: f64,
    pub applications: Vec<usize>,
    /// Probabilities the generation's selections were drawn from.
    pub probabilities: Vec<f64>,
    /// Rewards computed at the end of the generation.
    pub rewards: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub best_fitness: f64,
    pub best_position: Vec<f64>,
    pub evaluations_used: u64,
    pub generations: usize,
    pub trace: RunTrace,
    /// Every strict improvement of the best-so-far value as
    /// `(evaluation number, new best)`.
    pub improvements: Vec<(u64, f64)>,
}

pub fn run(problem: &dyn Objective, de: &DeParams, aos: &AosConfig, budget: u64, seed: u64) -> Result<RunResult> {
    run_with(problem, de, aos, budget, seed, &RunOptions::default())
}

struct Evaluator<'a> {
    problem: &'a dyn Objective,
    used: u64,
    best: f64,
    best_position: Vec<f64>,
    improvements: Vec<(u64, f64)>,
}

impl Evaluator<'_> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        let value = self.problem.evaluate(x);
        self.used += 1;
        if !value.is_finite() {
            return Err(Error::NonFiniteFitness {
                value,
                evaluation: self.used,
            });
        }
        if value < self.best {
            self.best = value;
            self.best_position = x.to_vec();
            self.improvements.push((self.used, value));
        }
        Ok(value)
    }

    fn reached(&self, target: Option<f64>) -> bool {
        match (target, self.problem.optimum()) {
            (Some(eps), Some(opt)) => self.best - opt <= eps,
            _ => false,
        }
    }
}

pub fn run_with(
    problem: &dyn Objective,
    de: &DeParams,
    aos: &AosConfig,
    budget: u64,
    seed: u64,
    options: &RunOptions,
) -> Result<RunResult> {
    aos.validate()?;
    de.validate(&aos.strategies)?;
    let np = de.np;
    if budget < np as u64 {
        return Err(Error::BudgetTooSmall { budget, np });
    }
    let dim = problem.dim();
    if dim == 0 {
        return Err(Error::EmptyInput("problem dimension"));
    }
    let (lo, hi) = problem.bounds();
    let k = aos.operator_count();
    let mut rng = RandomStream::new(seed);
    let mut ev = Evaluator {
        problem,
        used: 0,
        best: f64::INFINITY,
        best_position: Vec::new(),
        improvements: Vec::new(),
    };

    let mut members = Vec::with_capacity(np);
    for _ in 0..np {
        let position: Vec<f64> = (0..dim).map(|_| rng.range(lo, hi)).collect();
        let fitness = ev.eval(&position)?;
        members.push(Solution { position, fitness });
    }
    let mut pop = Population { members };

    let uses_archive = aos.strategies.contains(&MutationStrategy::CurrToPbest1Archived);
    let mut archive = Archive::new(if uses_archive { np } else { 0 });
    let reward_params = &aos.reward.params;
    let mut memory = GenerationMemory::new(k, aos.metric, reward_params.fix_appl.max(1));
    let mut window = WindowMemory::new(reward_params.window_w.max(1), aos.metric);
    let mut state = AosState::new(k);
    let mut trace = RunTrace::default();
    let mut generation = 0usize;

    // only whole generations run, so a budget that is not a multiple of NP
    // leaves its remainder unspent
    while ev.used + np as u64 <= budget && !ev.reached(options.target_precision) {
        let refs = population_refs(&pop.fitnesses(), ev.best)?;
        let probabilities = state.probability.clone();
        let mut applications = vec![0usize; k];
        let mut records = Vec::with_capacity(np);
        let mut offspring = Vec::with_capacity(np);

        for i in 0..np {
            let op = choose_operator(aos, &mut state, ev.used as f64 / budget as f64, &mut rng);
            applications[op.0] += 1;
            let strategy = aos.strategies[op.0];
            let donor = mutate(strategy, &pop, i, de, &archive, &mut rng);
            let mut trial = crossover(&pop.members[i].position, &donor, de.cr, &mut rng);
            reflect(&mut trial, lo, hi);
            let fitness = ev.eval(&trial)?;
            records.push(OmRecord::new(
                op,
                generation,
                compute_om(pop.members[i].fitness, fitness, &refs),
            ));
            offspring.push(Solution {
                position: trial,
                fitness,
            });
        }

        for rec in &records {
            if rec.improved {
                window.insert(rec.clone())?;
            }
        }
        memory.commit(records)?;

        for (i, child) in offspring.into_iter().enumerate() {
            if survival_select(&pop.members[i], &child) {
                let old = core::mem::replace(&mut pop.members[i], child);
                if uses_archive {
                    archive.push(old.position, &mut rng);
                }
            }
        }

        let rewards = compute_rewards(&aos.reward, &memory, &window, np);
        state.push_reward(rewards);
        let counts = counts_in_scope(&aos.reward, &memory, &window);
        state.quality = update_quality(&aos.quality, &state, &counts);
        state.probability = update_probability(&aos.probability, &state.quality, &state.probability);

        generation += 1;
        if options.record_trace {
            trace.rows.push(TraceRow {
                generation,
                evaluations: ev.used,
                best_fitness: ev.best,
                applications,
                probabilities,
                rewards: state.reward.clone(),
            });
        }
    }

    Ok(RunResult {
        best_fitness: ev.best,
        best_position: ev.best_position,
        evaluations_used: ev.used,
        generations: generation,
        trace,
        improvements: ev.improvements,
    })
}

// Operators never applied so far are tried first, uniformly.
fn choose_operator(aos: &AosConfig, state: &mut AosState, budget_fraction: f64, rng: &mut RandomStream) -> OperatorId {
    let unused: Vec<usize> = (0..state.operator_count())
        .filter(|&op| state.total_applications[op] == 0)
        .collect();
    let op = if unused.is_empty() {
        select_operator(&aos.selection, &state.probability, budget_fraction, rng)
    } else {
        OperatorId(unused[rng.below(unused.len())])
    };
    state.total_applications[op.0] += 1;
    op
}
