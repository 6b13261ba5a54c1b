//! Repeated indistinguishability comparisons over a fixed family of index
//! subsets and weight splits.

use std::io::Write;

use rayon::prelude::*;

use crate::csv;
use crate::error::Result;
use crate::micro::{indistinguishability_runs, Indistinguishability, MicroOptions};
use crate::ode::Sampling;

use super::scenario::Scenario;
use super::sweep::SAMPLES;

/// How the subset weight is redistributed in the second run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    /// Everything on the first member.
    AllOnOne,
    Uniform,
    /// Shares `3, 1, 3, 1, ...`.
    Alternating,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::AllOnOne => "all_on_one",
            Split::Uniform => "uniform",
            Split::Alternating => "alternating",
        }
    }

    pub fn shares(self, len: usize) -> Vec<f64> {
        match self {
            Split::AllOnOne => (0..len).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect(),
            Split::Uniform => vec![1.0; len],
            Split::Alternating => (0..len).map(|k| if k % 2 == 0 { 3.0 } else { 1.0 }).collect(),
        }
    }
}

/// Subset and split of trial `k` on `n` agents. Trial 0 pairs agent 0 with
/// agent 3, which straddles the leader block of the shipped leader scenarios.
pub fn trial_design(k: usize, n: usize) -> (Vec<usize>, Split) {
    let size = (2 + k % 4).min(n);
    let stride = 3 + 2 * (k % 3);
    let start = (7 * k) % n;
    let mut subset = Vec::with_capacity(size);
    let mut j = 0;
    while subset.len() < size && j < n {
        let i = (start + j * stride) % n;
        if !subset.contains(&i) {
            subset.push(i);
        }
        j += 1;
    }
    // Fall back to consecutive indices when the stride cycles early.
    let mut i = start;
    while subset.len() < size {
        if !subset.contains(&i) {
            subset.push(i);
        }
        i = (i + 1) % n;
    }
    let split = [Split::AllOnOne, Split::Uniform, Split::Alternating][k % 3];
    (subset, split)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditTrial {
    pub trial: usize,
    pub subset: Vec<usize>,
    pub split: Split,
    pub verdict: Indistinguishability,
    pub equal_position_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub scenario: String,
    pub agents: usize,
    /// Whether the law is expected to preserve indistinguishability.
    pub expect_preserved: bool,
    pub trials: Vec<AuditTrial>,
    pub drift_tolerance: f64,
}

impl AuditReport {
    pub fn preserved(&self) -> usize {
        self.trials.iter().filter(|t| t.verdict.is_preserved()).count()
    }

    pub fn violations(&self) -> usize {
        self.trials.len() - self.preserved()
    }

    pub fn max_drift(&self) -> f64 {
        self.trials.iter().map(|t| t.equal_position_drift).fold(0.0, f64::max)
    }

    /// All preserved for indistinguishable laws, at least one witness
    /// otherwise; equal positions persist in every run. An empty audit passes.
    pub fn passed(&self) -> bool {
        if self.trials.is_empty() {
            return true;
        }
        let verdicts = if self.expect_preserved {
            self.violations() == 0
        } else {
            self.violations() > 0
        };
        verdicts && self.max_drift() <= self.drift_tolerance
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        csv::write_row(
            w,
            ["trial", "subset", "split", "verdict", "time", "index", "condition", "deviation", "equal_position_drift"]
                .map(String::from),
        )?;
        for t in &self.trials {
            let subset = t.subset.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" ");
            let tail = match &t.verdict {
                Indistinguishability::Preserved { max_deviation } => {
                    ["preserved".into(), String::new(), String::new(), String::new(), csv::float(*max_deviation)]
                }
                Indistinguishability::Violated {
                    time,
                    index,
                    condition,
                    deviation,
                } => [
                    "violated".into(),
                    csv::float(*time),
                    (index + 1).to_string(),
                    condition.to_string(),
                    csv::float(*deviation),
                ],
            };
            let row = [t.trial.to_string(), subset, t.split.name().into()]
                .into_iter()
                .chain(tail)
                .chain(std::iter::once(csv::float(t.equal_position_drift)));
            csv::write_row(w, row)?;
        }
        Ok(())
    }
}

/// Runs `trials` comparisons on the scenario's default agent count.
pub fn run_indistinguishability_audit(sc: &Scenario, trials: usize) -> Result<AuditReport> {
    let n = sc.default_agents();
    let law = sc.law()?;
    let kernel = sc.kernel();
    let base = sc.ensemble(n)?;
    let opts = MicroOptions::new(sc.horizon, sc.dt)
        .sampling(Sampling::Uniform(SAMPLES))
        .tolerances(sc.tolerances());
    let trials = if n < 2 { Vec::new() } else { (0..trials).collect() };
    let results = trials
        .par_iter()
        .map(|&k| {
            let (subset, split) = trial_design(k, n);
            let runs = indistinguishability_runs(&base, &kernel, &law, &subset, &split.shares(subset.len()), &opts)?;
            Ok(AuditTrial {
                trial: k,
                equal_position_drift: runs.equal_position_drift(),
                verdict: runs.verdict,
                subset,
                split,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AuditReport {
        scenario: sc.name.clone(),
        agents: n,
        expect_preserved: law.preserves_indistinguishability(),
        trials: results,
        drift_tolerance: sc.tolerances.equal_position,
    })
}
