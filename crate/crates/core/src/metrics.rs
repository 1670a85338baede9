//! Offspring metrics: how much an offspring achieved relative to a reference.
//!
//! All six metrics are oriented so that larger is better for a minimisation
//! problem. The four difference-based metrics and the relative metric are
//! clamped at zero.

use alloc::vec::Vec;

use crate::{Error, Result};

pub const METRIC_COUNT: usize = 6;

/// Below this magnitude the offspring fitness is not used as a divisor.
pub const RELATIVE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum OffspringMetric {
    /// `-f(u)`
    OffspringFitness,
    /// `max{0, f(x) - f(u)}`
    ParentImprovement,
    /// `max{0, f_best - f(u)}`
    BestParentImprovement,
    /// `max{0, f_bsf - f(u)}`
    BestSoFarImprovement,
    /// `max{0, f_median - f(u)}`
    MedianImprovement,
    /// `(f_bsf / f(u)) * max{0, f(x) - f(u)}`
    RelativeImprovement,
}

impl OffspringMetric {
    pub const ALL: [OffspringMetric; METRIC_COUNT] = [
        OffspringMetric::OffspringFitness,
        OffspringMetric::ParentImprovement,
        OffspringMetric::BestParentImprovement,
        OffspringMetric::BestSoFarImprovement,
        OffspringMetric::MedianImprovement,
        OffspringMetric::RelativeImprovement,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            OffspringMetric::OffspringFitness => "OffspringFitness",
            OffspringMetric::ParentImprovement => "ParentImprovement",
            OffspringMetric::BestParentImprovement => "BestParentImprovement",
            OffspringMetric::BestSoFarImprovement => "BestSoFarImprovement",
            OffspringMetric::MedianImprovement => "MedianImprovement",
            OffspringMetric::RelativeImprovement => "RelativeImprovement",
        }
    }
}

/// Population reference points, taken from the parents before survival.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PopulationRefs {
    pub f_best: f64,
    pub f_bsf: f64,
    pub f_median: f64,
}

pub fn population_refs(parent_fitnesses: &[f64], bsf_so_far: f64) -> Result<PopulationRefs> {
    if parent_fitnesses.is_empty() {
        return Err(Error::EmptyInput("population_refs"));
    }
    let mut sorted: Vec<f64> = parent_fitnesses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let f_median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let f_best = sorted[0];
    Ok(PopulationRefs {
        f_best,
        f_bsf: bsf_so_far.min(f_best),
        f_median,
    })
}

pub fn compute_om(parent_f: f64, offspring_f: f64, refs: &PopulationRefs) -> [f64; METRIC_COUNT] {
    let gain = (parent_f - offspring_f).max(0.0);
    [
        -offspring_f,
        gain,
        (refs.f_best - offspring_f).max(0.0),
        (refs.f_bsf - offspring_f).max(0.0),
        (refs.f_median - offspring_f).max(0.0),
        relative_ratio(refs.f_bsf, offspring_f) * gain,
    ]
}

// The ratio f_bsf / f(u) is only meaningful for positive, same-signed values;
// otherwise the metric falls back to the plain parent improvement.
fn relative_ratio(f_bsf: f64, offspring_f: f64) -> f64 {
    if offspring_f <= RELATIVE_EPS || f_bsf < 0.0 {
        1.0
    } else {
        f_bsf / offspring_f
    }
}
