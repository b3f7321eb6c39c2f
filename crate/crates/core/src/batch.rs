//! Monte Carlo batches over independent seeded missions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::engine::{run_mission_with, MissionRecord, Outcome, RunOptions, ScenarioConfig};
use crate::guidance::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub runs: usize,
    pub successes: usize,
    pub initialise_visits: usize,
    pub system_faults: usize,
    pub actuator_fault_runs: usize,
    pub grasper_drop_runs: usize,
    pub total_time: f64,
    pub total_time_sq: f64,
    pub total_flight_time: f64,
    /// Transition counts, zero-based mode indices.
    pub transitions: Vec<Vec<usize>>,
    pub dwell: Vec<f64>,
    pub visits: Vec<usize>,
    pub failures: BTreeMap<String, usize>,
}

impl Default for BatchStats {
    fn default() -> Self {
        Self {
            runs: 0,
            successes: 0,
            initialise_visits: 0,
            system_faults: 0,
            actuator_fault_runs: 0,
            grasper_drop_runs: 0,
            total_time: 0.0,
            total_time_sq: 0.0,
            total_flight_time: 0.0,
            transitions: vec![vec![0; 17]; 17],
            dwell: vec![0.0; 17],
            visits: vec![0; 17],
            failures: BTreeMap::new(),
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl BatchStats {
    pub fn from_record(r: &MissionRecord) -> Self {
        let c = &r.counters;
        let mut failures = BTreeMap::new();
        if let Outcome::Failure(reason) = r.outcome {
            failures.insert(format!("{reason:?}"), 1);
        }
        Self {
            runs: 1,
            successes: usize::from(r.outcome.is_success()),
            initialise_visits: c.initialise_visits,
            system_faults: c.system_faults,
            actuator_fault_runs: usize::from(c.actuator_fault),
            grasper_drop_runs: usize::from(c.grasper_drops > 0),
            total_time: r.duration,
            total_time_sq: r.duration * r.duration,
            total_flight_time: c.flight_time,
            transitions: c.transitions.clone(),
            dwell: c.dwell.clone(),
            visits: c.visits.clone(),
            failures,
        }
    }

    /// Adds another batch. Counts merge exactly; float sums depend on the
    /// merge order, which callers keep fixed.
    pub fn merge(&mut self, o: &BatchStats) {
        self.runs += o.runs;
        self.successes += o.successes;
        self.initialise_visits += o.initialise_visits;
        self.system_faults += o.system_faults;
        self.actuator_fault_runs += o.actuator_fault_runs;
        self.grasper_drop_runs += o.grasper_drop_runs;
        self.total_time += o.total_time;
        self.total_time_sq += o.total_time_sq;
        self.total_flight_time += o.total_flight_time;
        for i in 0..17 {
            self.dwell[i] += o.dwell[i];
            self.visits[i] += o.visits[i];
            for j in 0..17 {
                self.transitions[i][j] += o.transitions[i][j];
            }
        }
        for (k, v) in &o.failures {
            *self.failures.entry(k.clone()).or_default() += v;
        }
    }

    pub fn success_rate(&self) -> f64 {
        ratio(self.successes, self.runs)
    }

    /// System faults per visit to Initialise.
    pub fn system_fault_rate(&self) -> f64 {
        ratio(self.system_faults, self.initialise_visits)
    }

    /// Fraction of missions with an actuator fault.
    pub fn actuator_fault_rate(&self) -> f64 {
        ratio(self.actuator_fault_runs, self.runs)
    }

    /// Fraction of missions where a grasper fault dropped a target.
    pub fn grasper_drop_rate(&self) -> f64 {
        ratio(self.grasper_drop_runs, self.runs)
    }

    pub fn mean_time(&self) -> f64 {
        if self.runs == 0 {
            0.0
        } else {
            self.total_time / self.runs as f64
        }
    }

    pub fn time_std(&self) -> f64 {
        if self.runs < 2 {
            return 0.0;
        }
        let n = self.runs as f64;
        let mean = self.total_time / n;
        ((self.total_time_sq / n - mean * mean).max(0.0) * n / (n - 1.0)).sqrt()
    }

    /// Mean seconds per visit of a mode.
    pub fn mean_dwell(&self, m: Mode) -> f64 {
        let v = self.visits[m.index()];
        if v == 0 {
            0.0
        } else {
            self.dwell[m.index()] / v as f64
        }
    }

    /// Transition probabilities normalised over each source mode's
    /// recorded outgoing transitions.
    pub fn transition_probabilities(&self) -> Vec<Vec<f64>> {
        self.transitions
            .iter()
            .map(|row| {
                let total: usize = row.iter().sum();
                row.iter().map(|&c| ratio(c, total)).collect()
            })
            .collect()
    }

    pub fn transition_probability(&self, from: Mode, to: Mode) -> f64 {
        self.transition_probabilities()[from.index()][to.index()]
    }
}

/// Runs `n` missions and aggregates them in run-index order, so the result
/// does not depend on `workers`. `workers = None` uses rayon's default pool.
pub fn monte_carlo(cfg: &ScenarioConfig, n: usize, workers: Option<usize>) -> BatchStats {
    monte_carlo_with(cfg, n, workers, |_| ())
}

/// As [`monte_carlo`], calling `inspect` on every record (from worker threads).
pub fn monte_carlo_with<F>(cfg: &ScenarioConfig, n: usize, workers: Option<usize>, inspect: F) -> BatchStats
where
    F: Fn(&MissionRecord) + Sync,
{
    let opts = RunOptions { record_trajectory: false };
    let job = || -> Vec<BatchStats> {
        (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let rec = run_mission_with(cfg, i, opts);
                inspect(&rec);
                BatchStats::from_record(&rec)
            })
            .collect()
    };
    let per_run = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map(|pool| pool.install(job))
            .unwrap_or_else(|_| job()),
        None => job(),
    };
    per_run.iter().fold(BatchStats::default(), |mut acc, s| {
        acc.merge(s);
        acc
    })
}
