//! Benchmark generators, exact verification and scoring metrics.

mod coloring;
mod family;
mod scheduling;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiscreteAssignment, Instance};

pub use coloring::{gen_coloring, random_regular_graph, Coloring, ColoringSpec, COLOR_GRID, NODE_GRID};
pub use family::{expression_family, FamilyCase};
pub use scheduling::{
    gen_scheduling, greedy_schedule, sample_dependencies, Scheduling, SchedulingSpec, RATIO_GRID,
    WORKER_GRID,
};

/// Penalized average runtime: solved runs within the limit count their time,
/// all others count `2 * limit`.
pub fn par2(runtimes: &[f64], solved: &[bool], limit: f64) -> Result<f64> {
    if runtimes.len() != solved.len() {
        return Err(Error::Shape(format!(
            "{} runtimes but {} solved flags",
            runtimes.len(),
            solved.len()
        )));
    }
    if runtimes.is_empty() {
        return Err(Error::Shape("no runs".into()));
    }
    let total: f64 = runtimes
        .iter()
        .zip(solved)
        .map(|(&t, &s)| par2_term(t, s, limit))
        .sum();
    Ok(total / runtimes.len() as f64)
}

/// One run's contribution to the PAR-2 sum.
pub fn par2_term(time: f64, solved: bool, limit: f64) -> f64 {
    if solved && time <= limit {
        time
    } else {
        2.0 * limit
    }
}

/// `(1 + cost) / (1 + best)`; 1 means matching the best known cost.
pub fn relative_score(cost: f64, best: f64) -> f64 {
    (1.0 + cost) / (1.0 + best)
}

/// Exact scoring of an assignment: satisfied hard constraints and the
/// weighted cost of violated soft constraints.
pub fn verify(instance: &Instance, assignment: &DiscreteAssignment) -> Result<(usize, f64)> {
    let v = instance.verify(assignment)?;
    Ok((v.hard_satisfied, v.soft_cost))
}

/// One benchmark run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub instance: String,
    pub seed: u64,
    pub solved: bool,
    pub time_s: f64,
    pub hard_violations: usize,
    pub soft_cost: f64,
    pub par2_contrib: f64,
    /// Against the best-known cost, when one is available.
    pub relative_score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub instances: usize,
    pub solved: usize,
    pub par2: f64,
    pub mean_relative_score: Option<f64>,
    /// Runs matching or beating the best-known cost.
    pub wins: usize,
}

pub fn summarize(rows: &[ScoreRow], limit: f64) -> Result<ScoreSummary> {
    let times: Vec<f64> = rows.iter().map(|r| r.time_s).collect();
    let solved: Vec<bool> = rows.iter().map(|r| r.solved).collect();
    let scores: Vec<f64> = rows.iter().filter_map(|r| r.relative_score).collect();
    Ok(ScoreSummary {
        instances: rows.len(),
        solved: solved.iter().filter(|s| **s).count(),
        par2: par2(&times, &solved, limit)?,
        mean_relative_score: (!scores.is_empty())
            .then(|| scores.iter().sum::<f64>() / scores.len() as f64),
        wins: scores.iter().filter(|s| **s <= 1.0).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par2_examples() {
        assert_eq!(par2(&[0.0, 0.0], &[true, true], 1000.0).unwrap(), 0.0);
        assert_eq!(par2(&[5.0, 7.0], &[false, false], 1000.0).unwrap(), 2000.0);
        assert_eq!(par2(&[500.0, 1000.0], &[true, false], 1000.0).unwrap(), 1250.0);
        // solved but over the limit is penalized
        assert_eq!(par2(&[1001.0], &[true], 1000.0).unwrap(), 2000.0);
        assert!(par2(&[1.0], &[], 1.0).is_err());
    }

    #[test]
    fn relative_score_examples() {
        assert_eq!(relative_score(4.0, 4.0), 1.0);
        assert_eq!(relative_score(0.0, 0.0), 1.0);
        assert_eq!(relative_score(3.0, 1.0), 2.0);
    }
}
