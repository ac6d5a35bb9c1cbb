use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::projection::project_in_place;
use super::StepSize;
use crate::cop::{Objective, RowMatrix, SimplexPoint};
use crate::error::{Error, Result};

/// `1 / (W * sqrt(N))`.
pub fn auto_step_size(total_weight: f64, total_domain_size: usize) -> f64 {
    1.0 / (total_weight * (total_domain_size as f64).sqrt())
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// `C(P_t)`.
    pub value: f64,
    /// `||g(P_t)||`.
    pub grad_map_norm: f64,
}

#[derive(Clone, Debug)]
pub struct PgaOutcome {
    pub point: SimplexPoint,
    /// Steps taken.
    pub iterations: usize,
    /// `C` at the final point.
    pub value: f64,
    /// `||g||` at the final point.
    pub grad_map_norm: f64,
    /// Stopped because `||g||^2 <= eps`.
    pub converged: bool,
    pub timed_out: bool,
    /// One entry per evaluated point, the final point included; empty unless
    /// requested.
    pub trace: Vec<TraceEntry>,
}

/// First trial step of the line search.
const INITIAL_STEP: f64 = 1.0;
const MAX_STEP: f64 = 1e6;
/// Halvings before a step is taken regardless.
const MAX_BACKTRACKS: usize = 40;

/// `q = proj(p + eta * grad)` row by row; returns `||q - p||^2`.
fn projected_step(p: &RowMatrix, grad: &RowMatrix, eta: f64, q: &mut RowMatrix, scratch: &mut Vec<f64>) -> f64 {
    let mut dist_sq = 0.0;
    for i in 0..p.rows() {
        let (pr, gr) = (p.row(i), grad.row(i));
        let qr = q.row_mut(i);
        for j in 0..qr.len() {
            qr[j] = pr[j] + eta * gr[j];
        }
        project_in_place(qr, scratch);
        dist_sq += qr.iter().zip(pr).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    dist_sq
}

/// Iterates `P <- proj(P + eta * grad C(P))` until `||g(P)||^2 <= eps`,
/// `max_iter` steps, or the deadline.
pub fn pga(
    objective: &Objective,
    start: SimplexPoint,
    step: StepSize,
    max_iter: usize,
    eps: f64,
    deadline: Option<Instant>,
    record_trace: bool,
) -> Result<PgaOutcome> {
    let mut eta = match step {
        StepSize::Auto => auto_step_size(objective.total_weight(), objective.total_domain_size()),
        StepSize::Fixed(v) => v,
        StepSize::Backtracking => INITIAL_STEP,
    };
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Config(format!("step size {eta} must be positive")));
    }
    let backtracking = step == StepSize::Backtracking;
    let mut p = start.into_matrix();
    let mut grad = RowMatrix::zeros(objective.shape());
    let mut next_grad = grad.clone();
    let mut q = p.clone();
    let mut scratch = Vec::new();
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut value = objective.value_and_gradient_into(&p, &mut grad)?;
    loop {
        if grad.data().iter().any(|x| x.is_nan()) {
            return Err(Error::NotANumber);
        }
        let dist_sq = projected_step(&p, &grad, eta, &mut q, &mut scratch);
        let gn_sq = dist_sq / (eta * eta);
        if record_trace {
            trace.push(TraceEntry {
                value,
                grad_map_norm: gn_sq.sqrt(),
            });
        }
        let converged = gn_sq <= eps;
        let timed_out = !converged && deadline.is_some_and(|d| Instant::now() >= d);
        if converged || timed_out || iterations == max_iter {
            return Ok(PgaOutcome {
                point: SimplexPoint::new_unchecked(p),
                iterations,
                value,
                grad_map_norm: gn_sq.sqrt(),
                converged,
                timed_out,
                trace,
            });
        }
        let mut dist_sq = dist_sq;
        let mut next = objective.value_and_gradient_into(&q, &mut next_grad)?;
        if backtracking {
            // accept once C(q) >= C(p) + <grad, q - p> - ||q - p||^2 / (2 eta)
            for _ in 0..MAX_BACKTRACKS {
                let lin: f64 = q.data().iter().zip(p.data()).zip(grad.data())
                    .map(|((a, b), g)| (a - b) * g)
                    .sum();
                if next >= value + lin - dist_sq / (2.0 * eta) - 1e-12 * value.abs() {
                    break;
                }
                eta *= 0.5;
                dist_sq = projected_step(&p, &grad, eta, &mut q, &mut scratch);
                next = objective.value_and_gradient_into(&q, &mut next_grad)?;
            }
        }
        std::mem::swap(&mut p, &mut q);
        std::mem::swap(&mut grad, &mut next_grad);
        value = next;
        if backtracking {
            eta = (2.0 * eta).min(MAX_STEP);
        }
        iterations += 1;
    }
}
