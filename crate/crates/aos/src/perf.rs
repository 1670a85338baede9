//! Fixed-target performance measures: target grid, ECDF and average
//! running time.

use aos_core::rng::RandomStream;
use serde::{Deserialize, Serialize};

/// Precision targets, strictly decreasing and log-uniform.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetGrid {
    pub targets: Vec<f64>,
}

impl Default for TargetGrid {
    /// 51 targets from 1e2 down to 1e-8.
    fn default() -> Self {
        Self::log_uniform(2.0, -8.0, 51)
    }
}

impl TargetGrid {
    pub fn log_uniform(hi_exp: f64, lo_exp: f64, n: usize) -> Self {
        let step = if n > 1 { (hi_exp - lo_exp) / (n - 1) as f64 } else { 0.0 };
        let targets = (0..n).map(|i| 10f64.powf(hi_exp - step * i as f64)).collect();
        Self { targets }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// One run as seen by post-processing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    #[serde(default)]
    pub problem: String,
    #[serde(default)]
    pub seed: u64,
    pub best_fitness: f64,
    /// Best precision, `best_fitness - f_opt`.
    #[serde(default)]
    pub precision: f64,
    pub evaluations: u64,
    /// Evaluation budget the run was given.
    pub budget: u64,
    /// Evaluation at which each grid target was first reached.
    pub targets_hit: Vec<Option<u64>>,
}

/// First evaluation reaching each target, from the improvement history.
pub fn hits_from_improvements(improvements: &[(u64, f64)], f_opt: f64, grid: &TargetGrid) -> Vec<Option<u64>> {
    grid.targets
        .iter()
        .map(|&t| improvements.iter().find(|(_, f)| f - f_opt <= t).map(|(e, _)| *e))
        .collect()
}

/// `n` budgets log-spaced from 1 to `max_budget`.
pub fn log_budgets(max_budget: u64, n: usize) -> Vec<f64> {
    let top = (max_budget.max(1) as f64).log10();
    if n <= 1 {
        return vec![max_budget.max(1) as f64];
    }
    let mut budgets: Vec<f64> = (0..n).map(|i| 10f64.powf(top * i as f64 / (n - 1) as f64)).collect();
    budgets[n - 1] = max_budget.max(1) as f64;
    budgets
}

/// Fraction of (run, target) pairs reached within each budget.
pub fn compute_ecdf(summaries: &[RunSummary], budgets: &[f64]) -> Vec<(f64, f64)> {
    let pairs: usize = summaries.iter().map(|s| s.targets_hit.len()).sum();
    if pairs == 0 {
        return Vec::new();
    }
    let mut hits: Vec<u64> = summaries
        .iter()
        .flat_map(|s| s.targets_hit.iter().flatten().copied())
        .collect();
    hits.sort_unstable();
    budgets
        .iter()
        .map(|&b| {
            let reached = hits.partition_point(|&h| h as f64 <= b);
            (b, reached as f64 / pairs as f64)
        })
        .collect()
}

/// Average running time to reach grid target `index`: evaluations of the
/// successes plus budgets of the failures, over the number of successes.
pub fn compute_art(summaries: &[RunSummary], index: usize) -> f64 {
    let mut total = 0.0;
    let mut successes = 0usize;
    for s in summaries {
        match s.targets_hit.get(index).copied().flatten() {
            Some(e) => {
                total += e as f64;
                successes += 1;
            }
            None => total += s.budget as f64,
        }
    }
    if successes == 0 {
        f64::INFINITY
    } else {
        total / successes as f64
    }
}

/// Simulated-restart runtimes: draw trials with replacement until one
/// succeeds, summing failed budgets and the success's evaluations. Returns
/// one runtime per sample, or none when no trial succeeds.
pub fn bootstrap_runtimes(summaries: &[RunSummary], index: usize, samples: usize, seed: u64) -> Option<Vec<f64>> {
    let outcome: Vec<Result<u64, u64>> = summaries
        .iter()
        .map(|s| s.targets_hit.get(index).copied().flatten().ok_or(s.budget))
        .collect();
    if !outcome.iter().any(|o| o.is_ok()) {
        return None;
    }
    let mut rng = RandomStream::new(seed);
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut cost = 0.0;
        loop {
            match outcome[rng.below(outcome.len())] {
                Ok(e) => {
                    cost += e as f64;
                    break;
                }
                Err(b) => cost += b as f64,
            }
        }
        out.push(cost);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(budget: u64, hits: Vec<Option<u64>>) -> RunSummary {
        RunSummary {
            problem: String::new(),
            seed: 0,
            best_fitness: 0.0,
            precision: 0.0,
            evaluations: budget,
            budget,
            targets_hit: hits,
        }
    }

    #[test]
    fn grid_shape() {
        let g = TargetGrid::default();
        assert_eq!(g.len(), 51);
        assert_eq!(g.targets[0], 100.0);
        assert!((g.targets[50] - 1e-8).abs() < 1e-22);
        assert!((g.targets[1] / g.targets[0] - 10f64.powf(-0.2)).abs() < 1e-12);
        assert!(g.targets.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn hits_follow_improvements() {
        let g = TargetGrid {
            targets: vec![10.0, 1.0, 0.1],
        };
        let h = hits_from_improvements(&[(5, 20.0), (9, 3.0), (12, 1.5), (30, 0.7)], 0.5, &g);
        assert_eq!(h, [Some(9), Some(12), None]);
    }

    #[test]
    fn art_examples() {
        let two = [summary(1000, vec![Some(100)]), summary(1000, vec![Some(300)])];
        assert_eq!(compute_art(&two, 0), 200.0);
        let mixed = [summary(1000, vec![Some(100)]), summary(1000, vec![None])];
        assert_eq!(compute_art(&mixed, 0), 1100.0);
        assert_eq!(compute_art(&[summary(1000, vec![None])], 0), f64::INFINITY);
    }

    #[test]
    fn ecdf_saturates_and_stays_flat() {
        let all = [summary(100, vec![Some(1); 51])];
        let e = compute_ecdf(&all, &log_budgets(100, 5));
        assert_eq!(e[0], (1.0, 1.0));
        let none = [summary(100, vec![None; 51])];
        assert!(compute_ecdf(&none, &log_budgets(100, 5)).iter().all(|&(_, f)| f == 0.0));
        assert!(compute_ecdf(&[], &[1.0]).is_empty());
    }

    #[test]
    fn bootstrap_of_always_successful_trials_is_their_mix() {
        let s = [summary(1000, vec![Some(100)]), summary(1000, vec![Some(300)])];
        let r = bootstrap_runtimes(&s, 0, 200, 1).unwrap();
        assert!(r.iter().all(|&v| v == 100.0 || v == 300.0));
        assert!(bootstrap_runtimes(&[summary(10, vec![None])], 0, 5, 1).is_none());
    }
}
