use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pga::pga;
use super::{RoundingMode, SolverConfig};
use crate::cop::{CompileOptions, Objective, RowMatrix, SimplexPoint};
use crate::error::Result;
use crate::model::{DiscreteAssignment, Instance, Verification};

/// Draws a discrete assignment from `point`.
pub fn round(point: &SimplexPoint, mode: RoundingMode, rng: &mut impl Rng) -> DiscreteAssignment {
    let values = (0..point.rows())
        .map(|i| {
            let row = point.row(i);
            match mode {
                RoundingMode::Argmax => {
                    let mut best = 0;
                    for (j, &x) in row.iter().enumerate() {
                        if x > row[best] {
                            best = j;
                        }
                    }
                    best as u32
                }
                RoundingMode::Randomized => {
                    let u: f64 = rng.gen();
                    let mut acc = 0.0;
                    let mut last_positive = 0;
                    for (j, &x) in row.iter().enumerate() {
                        if x > 0.0 {
                            last_positive = j;
                        }
                        acc += x;
                        if u < acc {
                            return j as u32;
                        }
                    }
                    // rows summing to slightly below 1
                    last_positive as u32
                }
            }
        })
        .collect();
    DiscreteAssignment::new(values)
}

/// Row-wise symmetric Dirichlet(1) sample.
pub fn random_start(shape: &[usize], rng: &mut impl Rng) -> SimplexPoint {
    let mut m = RowMatrix::zeros(shape);
    for i in 0..m.rows() {
        let row = m.row_mut(i);
        for x in row.iter_mut() {
            let u: f64 = rng.gen();
            *x = -(1.0 - u).ln();
        }
        let t: f64 = row.iter().sum();
        if t > 0.0 {
            row.iter_mut().for_each(|x| *x /= t);
        } else {
            row.fill(1.0 / row.len() as f64);
        }
    }
    SimplexPoint::new_unchecked(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub index: usize,
    pub iterations: usize,
    pub converged: bool,
    /// `||g||` at the final point.
    pub final_grad_map_norm: f64,
    /// `C` at the final point.
    pub final_value: f64,
    /// Best rounded assignment of this restart.
    pub hard_satisfied: usize,
    pub soft_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Every hard constraint holds for `assignment`.
    pub satisfied: bool,
    pub timed_out: bool,
    pub seed: u64,
    pub assignment: Vec<u32>,
    pub hard_satisfied: usize,
    pub hard_total: usize,
    pub soft_cost: f64,
    /// Weighted objective at the one-hot point of `assignment`, i.e. the
    /// total weight of satisfied constraints.
    pub objective: f64,
    pub restarts: Vec<RestartSummary>,
    /// Omitted in deterministic mode.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_s: Option<f64>,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

pub fn cls_solve(instance: &Instance, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let options = CompileOptions {
        order: config.order.clone(),
        batch: config.batch,
        ..Default::default()
    };
    let objective = Objective::compile(instance, &options)?;
    cls_solve_compiled(instance, &objective, config)
}

struct RestartResult {
    summary: RestartSummary,
    best: (DiscreteAssignment, Verification),
    timed_out: bool,
}

fn rng_for(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

fn run_restart(
    instance: &Instance,
    objective: &Objective,
    config: &SolverConfig,
    index: usize,
    deadline: Instant,
) -> Result<RestartResult> {
    let mut rng = rng_for(config.seed, index);
    let start = if index == 0 {
        SimplexPoint::uniform(objective.shape())
    } else {
        random_start(objective.shape(), &mut rng)
    };
    let out = pga(
        objective,
        start,
        config.step_size,
        config.max_iter,
        config.eps,
        Some(deadline),
        false,
    )?;
    let draws = match config.rounding {
        RoundingMode::Argmax => 1,
        RoundingMode::Randomized => config.samples,
    };
    let mut best: Option<(DiscreteAssignment, Verification)> = None;
    for _ in 0..draws {
        let x = round(&out.point, config.rounding, &mut rng);
        let v = instance.verify(&x)?;
        let better = best.as_ref().is_none_or(|(_, b)| v.is_better_than(b));
        if better {
            let done = v.all_satisfied();
            best = Some((x, v));
            if done {
                break;
            }
        }
    }
    let best = best.expect("at least one draw");
    Ok(RestartResult {
        summary: RestartSummary {
            index,
            iterations: out.iterations,
            converged: out.converged,
            final_grad_map_norm: out.grad_map_norm,
            final_value: out.value,
            hard_satisfied: best.1.hard_satisfied,
            soft_cost: best.1.soft_cost,
        },
        best,
        timed_out: out.timed_out,
    })
}

/// The restart loop. Restarts run in parallel waves but are accounted in
/// index order: the incumbent only changes on strict improvement and
/// everything after the first restart that satisfies all constraints is
/// discarded, so the report does not depend on the thread count.
pub fn cls_solve_compiled(
    instance: &Instance,
    objective: &Objective,
    config: &SolverConfig,
) -> Result<SolveReport> {
    config.validate()?;
    let started = Instant::now();
    let deadline = started + config.time_budget;
    let wave = rayon::current_num_threads().max(1);

    let mut summaries = Vec::new();
    let mut incumbent: Option<(DiscreteAssignment, Verification)> = None;
    let mut timed_out = false;
    let mut next = 0;
    'outer: while next < config.restarts {
        if next > 0 && Instant::now() >= deadline {
            timed_out = true;
            break;
        }
        let end = (next + wave).min(config.restarts);
        let results: Vec<Result<RestartResult>> = (next..end)
            .into_par_iter()
            .map(|i| run_restart(instance, objective, config, i, deadline))
            .collect();
        next = end;
        for r in results {
            let r = r?;
            timed_out |= r.timed_out;
            summaries.push(r.summary);
            let better = incumbent
                .as_ref()
                .is_none_or(|(_, v)| r.best.1.is_better_than(v));
            if better {
                incumbent = Some(r.best);
            }
            if incumbent.as_ref().unwrap().1.all_satisfied() {
                break 'outer;
            }
        }
    }

    let (assignment, v) = incumbent.expect("at least one restart");
    let objective_value = instance
        .constraints()
        .iter()
        .filter(|c| c.is_satisfied(&assignment))
        .map(|c| c.weight)
        .sum();
    Ok(SolveReport {
        satisfied: v.all_hard_satisfied(),
        timed_out,
        seed: config.seed,
        assignment: assignment.values().to_vec(),
        hard_satisfied: v.hard_satisfied,
        hard_total: v.hard_total,
        soft_cost: v.soft_cost,
        objective: objective_value,
        restarts: summaries,
        wall_time_s: (!config.deterministic).then(|| started.elapsed().as_secs_f64()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::format::parse_instance;

    #[test]
    fn one_hot_rounds_deterministically() {
        let p = SimplexPoint::one_hot(&[3, 2, 4], &[2, 0, 3]);
        let mut rng = rng_for(1, 0);
        for mode in [RoundingMode::Randomized, RoundingMode::Argmax] {
            for _ in 0..20 {
                assert_eq!(round(&p, mode, &mut rng).values(), &[2, 0, 3]);
            }
        }
    }

    #[test]
    fn argmax_breaks_ties_low() {
        let p = SimplexPoint::uniform(&[2, 3]);
        let mut rng = rng_for(0, 0);
        assert_eq!(round(&p, RoundingMode::Argmax, &mut rng).values(), &[0, 0]);
    }

    #[test]
    fn randomized_rounding_frequency() {
        let p = SimplexPoint::uniform(&[2]);
        let mut rng = rng_for(42, 0);
        let n = 100_000;
        let ones = (0..n)
            .filter(|_| round(&p, RoundingMode::Randomized, &mut rng).values()[0] == 1)
            .count();
        let f = ones as f64 / n as f64;
        assert!((0.495..=0.505).contains(&f), "{f}");
    }

    #[test]
    fn dirichlet_start_is_on_simplex() {
        let mut rng = rng_for(3, 1);
        let p = random_start(&[2, 5, 8], &mut rng);
        SimplexPoint::new(p.matrix().clone()).unwrap();
    }

    #[test]
    fn solves_toy_and_reports_unsat() {
        let sat = parse_instance("var x1 3\nvar x2 3\ncon expr x1 < x2\ncon expr x2 < 2\n").unwrap();
        let r = cls_solve(&sat, &SolverConfig::default()).unwrap();
        assert!(r.satisfied);
        assert_eq!(r.hard_satisfied, 2);
        assert_eq!(r.restarts.len(), 1);
        assert_eq!(r.assignment, vec![0, 1]);

        let unsat = parse_instance("var x1 2\ncon expr x1 = 0\ncon expr x1 = 1\n").unwrap();
        let config = SolverConfig {
            restarts: 4,
            max_iter: 100,
            ..Default::default()
        };
        let r = cls_solve(&unsat, &config).unwrap();
        assert!(!r.satisfied);
        assert_eq!(r.hard_satisfied, 1);
        assert_eq!(r.hard_total, 2);
        assert_eq!(r.restarts.len(), 4);
    }

    #[test]
    fn invalid_config_rejected() {
        let inst = parse_instance("var x1 2\ncon expr x1\n").unwrap();
        let bad = SolverConfig {
            eps: 0.0,
            ..Default::default()
        };
        assert!(cls_solve(&inst, &bad).is_err());
    }
}
