//! Credit stores: the append-only generation memory and the sliding window
//! of improving applications.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::metrics::{OffspringMetric, METRIC_COUNT};
use crate::{Error, Result};

/// Index of an enabled mutation strategy, in `[0, K)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OperatorId(pub usize);

impl OperatorId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub position: Vec<f64>,
    pub fitness: f64,
}

/// All six metric values of one operator application.
#[derive(Clone, Debug, PartialEq)]
pub struct OmRecord {
    pub op: OperatorId,
    pub generation: usize,
    pub metrics: [f64; METRIC_COUNT],
    /// Offspring strictly better than its parent.
    pub improved: bool,
}

impl OmRecord {
    pub fn new(op: OperatorId, generation: usize, metrics: [f64; METRIC_COUNT]) -> Self {
        Self {
            op,
            generation,
            improved: metrics[OffspringMetric::ParentImprovement.index()] > 0.0,
            metrics,
        }
    }

    /// Credit carried by this application under `metric`; an application
    /// that did not improve on its parent is worth 0.
    pub fn credit(&self, metric: OffspringMetric) -> f64 {
        if self.improved {
            self.metrics[metric.index()]
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationStats {
    pub n_succ: Vec<usize>,
    pub n_fail: Vec<usize>,
    pub records: Vec<OmRecord>,
}

impl GenerationStats {
    pub fn applications(&self, op: OperatorId) -> usize {
        self.n_succ[op.0] + self.n_fail[op.0]
    }

    pub fn credit_sum(&self, op: OperatorId, metric: OffspringMetric) -> f64 {
        self.records
            .iter()
            .filter(|r| r.op == op)
            .map(|r| r.credit(metric))
            .sum()
    }

    /// Best credit among the successful applications of `op`, or 0 if none.
    pub fn best_credit(&self, op: OperatorId, metric: OffspringMetric) -> f64 {
        self.records
            .iter()
            .filter(|r| r.op == op && r.improved)
            .map(|r| r.credit(metric))
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
            .unwrap_or(0.0)
    }
}

/// Aggregate of one operator over a generation horizon.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HorizonSummary {
    pub succ: usize,
    pub fail: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct GenerationMemory {
    k: usize,
    metric: OffspringMetric,
    recent_capacity: usize,
    history: Vec<GenerationStats>,
    recent: Vec<VecDeque<f64>>,
}

impl GenerationMemory {
    pub fn new(k: usize, metric: OffspringMetric, recent_capacity: usize) -> Self {
        let recent_capacity = recent_capacity.max(1);
        Self {
            k,
            metric,
            recent_capacity,
            history: Vec::new(),
            recent: vec![VecDeque::with_capacity(recent_capacity); k],
        }
    }

    pub fn operator_count(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> OffspringMetric {
        self.metric
    }

    pub fn recent_capacity(&self) -> usize {
        self.recent_capacity
    }

    pub fn history(&self) -> &[GenerationStats] {
        &self.history
    }

    pub fn completed(&self) -> usize {
        self.history.len()
    }

    /// The last `min(max_gen, completed)` generations, oldest first.
    pub fn horizon(&self, max_gen: usize) -> &[GenerationStats] {
        let n = self.history.len();
        &self.history[n - max_gen.min(n)..]
    }

    /// Credit values of the most recent applications of `op`, oldest first.
    pub fn recent(&self, op: OperatorId) -> &VecDeque<f64> {
        &self.recent[op.0]
    }

    pub fn commit(&mut self, records: Vec<OmRecord>) -> Result<()> {
        let expected = self.history.len();
        let mut n_succ = vec![0; self.k];
        let mut n_fail = vec![0; self.k];
        for r in &records {
            if r.generation != expected {
                return Err(Error::MixedGeneration {
                    expected,
                    found: r.generation,
                });
            }
            if r.op.0 >= self.k {
                return Err(Error::OperatorOutOfRange { op: r.op.0, k: self.k });
            }
        }
        for r in &records {
            if r.improved {
                n_succ[r.op.0] += 1;
            } else {
                n_fail[r.op.0] += 1;
            }
            let q = &mut self.recent[r.op.0];
            if q.len() == self.recent_capacity {
                q.pop_front();
            }
            q.push_back(r.credit(self.metric));
        }
        self.history.push(GenerationStats {
            n_succ,
            n_fail,
            records,
        });
        Ok(())
    }

    pub fn applications_in_horizon(&self, op: OperatorId, max_gen: usize) -> HorizonSummary {
        let mut out = HorizonSummary::default();
        for g in self.horizon(max_gen.max(1)) {
            out.succ += g.n_succ[op.0];
            out.fail += g.n_fail[op.0];
            out.values
                .extend(g.records.iter().filter(|r| r.op == op).map(|r| r.credit(self.metric)));
        }
        out
    }
}

/// Fixed-capacity store of improving applications, newest first.
#[derive(Clone, Debug)]
pub struct WindowMemory {
    capacity: usize,
    metric: OffspringMetric,
    entries: VecDeque<OmRecord>,
}

impl WindowMemory {
    pub fn new(capacity: usize, metric: OffspringMetric) -> Self {
        let capacity = capacity.max(1);
        Self {
            capacity,
            metric,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn metric(&self) -> OffspringMetric {
        self.metric
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries, newest first.
    pub fn entries(&self) -> impl ExactSizeIterator<Item = &OmRecord> + '_ {
        self.entries.iter()
    }

    pub fn value(&self, rec: &OmRecord) -> f64 {
        rec.credit(self.metric)
    }

    pub fn counts(&self, k: usize) -> Vec<usize> {
        let mut c = vec![0; k];
        for e in &self.entries {
            if e.op.0 < k {
                c[e.op.0] += 1;
            }
        }
        c
    }

    /// Inserts an improving record, returning the evicted entry if any.
    ///
    /// When full, the oldest entry of the same operator leaves; if that
    /// operator has no entry, the worst entry leaves (oldest on ties).
    pub fn insert(&mut self, rec: OmRecord) -> Result<Option<OmRecord>> {
        if !rec.improved {
            return Err(Error::NotImproved);
        }
        let mut evicted = None;
        if self.entries.len() >= self.capacity {
            let victim = match self.entries.iter().rposition(|e| e.op == rec.op) {
                Some(i) => i,
                None => self.worst_index(),
            };
            evicted = self.entries.remove(victim);
        }
        self.entries.push_front(rec);
        Ok(evicted)
    }

    fn worst_index(&self) -> usize {
        let mut worst = 0;
        for (i, e) in self.entries.iter().enumerate() {
            // `<=` walks towards the back, so ties resolve to the oldest.
            if self.value(e) <= self.value(&self.entries[worst]) {
                worst = i;
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(op: usize, generation: usize, gain: f64) -> OmRecord {
        OmRecord::new(OperatorId(op), generation, [-1.0, gain, gain, gain, gain, gain])
    }

    fn ops_gens(w: &WindowMemory) -> Vec<(usize, usize)> {
        w.entries().map(|e| (e.op.0, e.generation)).collect()
    }

    #[test]
    fn commit_counts_successes_and_failures() {
        let mut m = GenerationMemory::new(2, OffspringMetric::ParentImprovement, 10);
        let records = [3.0, 0.0, 1.0, 0.0].iter().map(|&g| rec(0, 0, g)).collect();
        m.commit(records).unwrap();
        let g = &m.history()[0];
        assert_eq!(g.n_succ[0], 2);
        assert_eq!(g.n_fail[0], 2);
        assert_eq!(
            m.recent(OperatorId(0)).iter().copied().collect::<Vec<_>>(),
            [3.0, 0.0, 1.0, 0.0]
        );
    }

    #[test]
    fn commit_empty_generation() {
        let mut m = GenerationMemory::new(3, OffspringMetric::ParentImprovement, 10);
        m.commit(Vec::new()).unwrap();
        assert_eq!(m.history()[0].n_succ, [0, 0, 0]);
        assert_eq!(m.history()[0].n_fail, [0, 0, 0]);
    }

    #[test]
    fn commit_split_population() {
        let mut m = GenerationMemory::new(2, OffspringMetric::ParentImprovement, 10);
        let mut records: Vec<_> = (0..7).map(|_| rec(0, 0, 1.0)).collect();
        records.extend((0..3).map(|_| rec(1, 0, 2.0)));
        m.commit(records).unwrap();
        assert_eq!(m.history()[0].n_succ, [7, 3]);
        assert_eq!(m.history()[0].n_fail, [0, 0]);
    }

    #[test]
    fn commit_rejects_mixed_generations() {
        let mut m = GenerationMemory::new(2, OffspringMetric::ParentImprovement, 10);
        let err = m.commit(alloc::vec![rec(0, 0, 1.0), rec(0, 1, 1.0)]).unwrap_err();
        assert_eq!(err, Error::MixedGeneration { expected: 0, found: 1 });
        assert_eq!(m.completed(), 0);
    }

    #[test]
    fn horizon_aggregates() {
        let mut m = GenerationMemory::new(1, OffspringMetric::ParentImprovement, 10);
        m.commit(alloc::vec![rec(0, 0, 1.0), rec(0, 0, 1.0)]).unwrap();
        m.commit(alloc::vec![rec(0, 1, 1.0), rec(0, 1, 2.0), rec(0, 1, 3.0)])
            .unwrap();
        let h = m.applications_in_horizon(OperatorId(0), 2);
        assert_eq!(h.succ, 5);
        let h = m.applications_in_horizon(OperatorId(0), 1);
        assert_eq!((h.succ, h.fail), (3, 0));
        assert_eq!(h.values, [1.0, 2.0, 3.0]);
        let empty = GenerationMemory::new(1, OffspringMetric::ParentImprovement, 10);
        assert_eq!(
            empty.applications_in_horizon(OperatorId(0), 4),
            HorizonSummary::default()
        );
    }

    #[test]
    fn recent_is_bounded() {
        let mut m = GenerationMemory::new(1, OffspringMetric::ParentImprovement, 3);
        for g in 0..4 {
            m.commit(alloc::vec![rec(0, g, g as f64 + 1.0)]).unwrap();
        }
        assert_eq!(
            m.recent(OperatorId(0)).iter().copied().collect::<Vec<_>>(),
            [2.0, 3.0, 4.0]
        );
    }

    #[test]
    fn window_fifo_per_operator() {
        let mut w = WindowMemory::new(3, OffspringMetric::ParentImprovement);
        w.insert(rec(1, 3, 1.0)).unwrap();
        w.insert(rec(0, 4, 1.0)).unwrap();
        w.insert(rec(1, 5, 1.0)).unwrap();
        assert_eq!(ops_gens(&w), [(1, 5), (0, 4), (1, 3)]);
        let ev = w.insert(rec(1, 6, 1.0)).unwrap().unwrap();
        assert_eq!((ev.op.0, ev.generation), (1, 3));
        assert_eq!(ops_gens(&w), [(1, 6), (1, 5), (0, 4)]);
    }

    #[test]
    fn window_evicts_worst_when_operator_absent() {
        let mut w = WindowMemory::new(3, OffspringMetric::ParentImprovement);
        w.insert(rec(1, 3, 5.0)).unwrap();
        w.insert(rec(0, 4, 0.5)).unwrap();
        w.insert(rec(1, 5, 2.0)).unwrap();
        let ev = w.insert(rec(2, 6, 1.0)).unwrap().unwrap();
        assert_eq!(ev.op.0, 0);
        assert_eq!(ops_gens(&w), [(2, 6), (1, 5), (1, 3)]);
    }

    #[test]
    fn window_worst_tie_evicts_oldest() {
        let mut w = WindowMemory::new(3, OffspringMetric::ParentImprovement);
        w.insert(rec(0, 1, 1.0)).unwrap();
        w.insert(rec(1, 2, 1.0)).unwrap();
        w.insert(rec(2, 3, 4.0)).unwrap();
        w.insert(rec(3, 4, 9.0)).unwrap();
        assert_eq!(ops_gens(&w), [(3, 4), (2, 3), (1, 2)]);
    }

    #[test]
    fn window_below_capacity_never_evicts() {
        let mut w = WindowMemory::new(3, OffspringMetric::ParentImprovement);
        w.insert(rec(0, 0, 1.0)).unwrap();
        w.insert(rec(0, 0, 1.0)).unwrap();
        assert_eq!(w.insert(rec(4, 1, 1.0)).unwrap(), None);
        assert_eq!(w.len(), 3);
    }

    #[test]
    fn window_rejects_non_improving() {
        let mut w = WindowMemory::new(3, OffspringMetric::ParentImprovement);
        assert_eq!(w.insert(rec(0, 0, 0.0)), Err(Error::NotImproved));
        assert!(w.is_empty());
    }
}
