//! Random precedence-constrained scheduling.
//!
//! `|V| = T * S / 2` tasks each get a clock cycle `t_v in 0..T` and a worker
//! `s_v in 0..S`. For indices `u < v` a dependency `u -> v` is drawn with
//! probability `5^(u - v)`; dependencies require `t_u < t_v` and every other
//! pair must differ in cycle or worker.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    Constraint, DiscreteAssignment, Instance, ObjectiveMode, StructuredKind, VariableId,
    VariableTable,
};

pub const WORKER_GRID: [u32; 5] = [32, 64, 128, 256, 512];
pub const RATIO_GRID: [u32; 3] = [4, 8, 16];

/// Regeneration attempts when a draw has no greedy schedule.
const MAX_ATTEMPTS: u64 = 64;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct SchedulingSpec {
    /// `T`, the domain size of every `t_v`.
    pub cycles: u32,
    /// `S`, the domain size of every `s_v`.
    pub workers: u32,
    pub seed: u64,
}

impl SchedulingSpec {
    /// Grid parameterization: `jobs = ratio * n_workers` tasks over
    /// `T = n_workers` cycles and `S = 2 * ratio` worker slots.
    pub fn from_grid(n_workers: u32, ratio: u32, seed: u64) -> Self {
        Self {
            cycles: n_workers,
            workers: 2 * ratio,
            seed,
        }
    }

    pub fn tasks(&self) -> usize {
        (self.cycles as usize * self.workers as usize) / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.cycles < 2 || self.workers < 2 {
            return Err(Error::Config("cycles and workers must be at least 2".into()));
        }
        if !(self.cycles as u64 * self.workers as u64).is_multiple_of(2) {
            return Err(Error::Config("cycles * workers must be even".into()));
        }
        Ok(())
    }
}

/// Dependency edges `(u, v)` with `u < v`, 0-based task indices.
pub fn sample_dependencies(tasks: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for v in 0..tasks {
        for u in 0..v {
            let p = 5f64.powi(-((v - u) as i32));
            if rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Greedy list schedule: tasks in index order, each at the earliest cycle
/// after its predecessors with a free worker. Returns `(t, s)` per task.
pub fn greedy_schedule(
    tasks: usize,
    edges: &[(usize, usize)],
    cycles: u32,
    workers: u32,
) -> Option<Vec<(u32, u32)>> {
    let mut preds = vec![Vec::new(); tasks];
    for &(u, v) in edges {
        preds[v].push(u);
    }
    let mut used = vec![0u32; cycles as usize];
    let mut out: Vec<(u32, u32)> = Vec::with_capacity(tasks);
    for pv in &preds {
        let ready = pv.iter().map(|&u| out[u].0 + 1).max().unwrap_or(0);
        let t = (ready..cycles).find(|&t| used[t as usize] < workers)?;
        out.push((t, used[t as usize]));
        used[t as usize] += 1;
    }
    Some(out)
}

pub struct Scheduling {
    pub instance: Instance,
    pub edges: Vec<(usize, usize)>,
    /// A feasible assignment, certifying satisfiability.
    pub witness: DiscreteAssignment,
}

fn t_var(v: usize) -> VariableId {
    VariableId::from_row(v)
}

fn s_var(tasks: usize, v: usize) -> VariableId {
    VariableId::from_row(tasks + v)
}

/// Generates an instance; draws with no greedy schedule are redrawn.
pub fn gen_scheduling(spec: &SchedulingSpec) -> Result<Scheduling> {
    spec.validate()?;
    let n = spec.tasks();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(attempt);
        let edges = sample_dependencies(n, &mut rng);
        let Some(schedule) = greedy_schedule(n, &edges, spec.cycles, spec.workers) else {
            continue;
        };
        let mut vars = VariableTable::new();
        for v in 0..n {
            vars.add(format!("t{}", v + 1), spec.cycles)?;
        }
        for v in 0..n {
            vars.add(format!("s{}", v + 1), spec.workers)?;
        }
        let mut is_edge = vec![false; n * n];
        for &(u, v) in &edges {
            is_edge[u * n + v] = true;
        }
        let mut constraints = Vec::with_capacity(n * (n - 1) / 2);
        for v in 0..n {
            for u in 0..v {
                let kind = if is_edge[u * n + v] {
                    StructuredKind::LessThan {
                        u: t_var(u),
                        v: t_var(v),
                    }
                } else {
                    StructuredKind::NeqPairDisjunction {
                        t_u: t_var(u),
                        t_v: t_var(v),
                        s_u: s_var(n, u),
                        s_v: s_var(n, v),
                    }
                };
                constraints.push(Constraint::structured(kind));
            }
        }
        let instance = Instance::new(vars, constraints, ObjectiveMode::Satisfy)?;
        let mut values: Vec<u32> = schedule.iter().map(|(t, _)| *t).collect();
        values.extend(schedule.iter().map(|(_, s)| *s));
        return Ok(Scheduling {
            instance,
            edges,
            witness: DiscreteAssignment::new(values),
        });
    }
    Err(Error::Generation(format!(
        "no schedulable draw in {MAX_ATTEMPTS} attempts for {spec:?}"
    )))
}
