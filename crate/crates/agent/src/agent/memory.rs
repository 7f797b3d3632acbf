use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use swarm_tuner_core::HyperParams;

use crate::runlog::RunMetrics;

/// One executed proposal: the server runs it was scored on, their mean
/// metrics (timing dropped) and the advisor's rationale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningRecord {
    pub iteration: usize,
    pub run_ids: Vec<u64>,
    pub hyper: HyperParams,
    pub p_iter: usize,
    pub seeds: Vec<u64>,
    pub metrics: RunMetrics,
    pub rationale: String,
}

/// Records in execution order, iterations numbered from 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Memory {
    records: Vec<TuningRecord>,
}

impl Memory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_iteration(&self) -> usize {
        self.records.len() + 1
    }

    /// Appends `record`, which must carry [`next_iteration`](Self::next_iteration).
    pub fn push(&mut self, record: TuningRecord) {
        assert_eq!(record.iteration, self.next_iteration(), "iterations must be contiguous");
        self.records.push(record);
    }

    pub fn records(&self) -> &[TuningRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TuningRecord> {
        self.records.last()
    }

    /// Highest min-sum-rate; the earliest wins ties.
    pub fn best(&self) -> Option<&TuningRecord> {
        self.records.iter().fold(None, |best: Option<&TuningRecord>, r| match best {
            Some(b) if b.metrics.min_sum_rate >= r.metrics.min_sum_rate => Some(b),
            _ => Some(r),
        })
    }

    pub fn has_tried(&self, h: &HyperParams) -> bool {
        self.records.iter().any(|r| r.hyper == *h)
    }

    /// Plain-text table in the layout of a hyper-parameter tuning log.
    pub fn table(&self) -> String {
        let mut s = String::from(
            "| iter | p_num | k1 | k2 | k3 | k4 | omega | c1 | c2 | min_sum_rate | fitness |\n\
             |---|---|---|---|---|---|---|---|---|---|---|\n",
        );
        for r in &self.records {
            let h = &r.hyper;
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {:.4} | {:.4} |",
                r.iteration,
                h.p_num,
                h.k1,
                h.k2,
                h.k3,
                h.k4,
                h.omega,
                h.c1,
                h.c2,
                r.metrics.min_sum_rate,
                r.metrics.f_value
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(iteration: usize, t: f64) -> TuningRecord {
        TuningRecord {
            iteration,
            run_ids: vec![iteration as u64 + 10],
            hyper: HyperParams::baseline1(),
            p_iter: 1,
            seeds: vec![0],
            metrics: RunMetrics {
                min_sum_rate: t,
                f_value: t,
                s_value: 0.0,
                a_value: 0.0,
                c_value: 0.0,
                wall_ms: None,
            },
            rationale: String::new(),
        }
    }

    #[test]
    fn best_prefers_the_earliest_of_equals() {
        let mut m = Memory::new();
        assert!(m.best().is_none());
        for (i, t) in [1.0, 3.0, 2.0, 3.0].into_iter().enumerate() {
            m.push(rec(i + 1, t));
        }
        assert_eq!(m.best().unwrap().iteration, 2);
        assert_eq!(m.table().lines().count(), 2 + 4);
    }

    #[test]
    #[should_panic(expected = "contiguous")]
    fn gaps_are_rejected() {
        let mut m = Memory::new();
        m.push(rec(2, 1.0));
    }
}
