//! Closed-form COPs for the structured constraint kinds.
//!
//! Each formula is the exact multilinear polynomial
//! `sum_{x satisfying} prod_i p[i][x_i]`, written with row sums `S_i` so
//! that it also holds off the simplex (where finite differences evaluate
//! it). On the simplex every `S_i` is 1 and the formulas reduce to the
//! familiar ones, e.g. `1 - P[u = v]` for `u != v`.

use super::{Gradient, RowMatrix};
use crate::error::{Error, Result};
use crate::model::{StructuredKind, VariableId};

/// COP of `kind` at `p` and its gradient over the full point shape.
pub fn closed_form_cop(kind: &StructuredKind, p: &RowMatrix) -> Result<(f64, Gradient)> {
    let mut grad = RowMatrix::zeros(&p.shape());
    let cop = closed_form_accumulate(kind, p, 1.0, &mut grad)?;
    Ok((cop, grad))
}

fn check(kind: &StructuredKind, p: &RowMatrix) -> Result<()> {
    for v in kind.variables() {
        if v.row() >= p.rows() {
            return Err(Error::Shape(format!("point has no row for {v}")));
        }
    }
    Ok(())
}

/// Adds `weight * gradient` into `grad` and returns the COP.
pub fn closed_form_accumulate(
    kind: &StructuredKind,
    p: &RowMatrix,
    weight: f64,
    grad: &mut RowMatrix,
) -> Result<f64> {
    check(kind, p)?;
    Ok(match kind {
        StructuredKind::LessThan { u, v } => less_than(p, *u, *v, weight, grad),
        StructuredKind::NotEqual { u, v } => not_equal(p, *u, *v, weight, grad),
        StructuredKind::NeqPairDisjunction { t_u, t_v, s_u, s_v } => {
            neq_pair(p, [*t_u, *t_v, *s_u, *s_v], weight, grad)
        }
        StructuredKind::ParityOfSum { vars } => parity(p, vars, weight, grad),
    })
}

fn row_sum(p: &RowMatrix, v: VariableId) -> f64 {
    p.row(v.row()).iter().sum()
}

/// `P[u < v] = sum_j p_v(j) * F_u(j - 1)` with `F_u` the running CDF of `u`.
fn less_than(p: &RowMatrix, u: VariableId, v: VariableId, w: f64, grad: &mut RowMatrix) -> f64 {
    let pu = p.row(u.row());
    let pv = p.row(v.row());
    let mut cop = 0.0;
    // d/dp_v(j) = F_u(j - 1)
    let mut cdf = 0.0;
    {
        let gv = grad.row_mut(v.row());
        for j in 0..pv.len() {
            gv[j] += w * cdf;
            cop += pv[j] * cdf;
            if j < pu.len() {
                cdf += pu[j];
            }
        }
    }
    // d/dp_u(i) = sum_{j > i} p_v(j)
    let gu = grad.row_mut(u.row());
    let mut tail: f64 = pv.iter().skip(pu.len()).sum();
    for i in (0..pu.len()).rev() {
        gu[i] += w * tail;
        if i < pv.len() {
            tail += pv[i];
        }
    }
    cop
}

/// `S_u S_v - P[u = v]`.
fn not_equal(p: &RowMatrix, u: VariableId, v: VariableId, w: f64, grad: &mut RowMatrix) -> f64 {
    let (su, sv) = (row_sum(p, u), row_sum(p, v));
    let pu = p.row(u.row()).to_vec();
    let pv = p.row(v.row()).to_vec();
    let eq: f64 = pu.iter().zip(&pv).map(|(a, b)| a * b).sum();
    let gu = grad.row_mut(u.row());
    for (i, g) in gu.iter_mut().enumerate() {
        *g += w * (sv - pv.get(i).copied().unwrap_or(0.0));
    }
    let gv = grad.row_mut(v.row());
    for (i, g) in gv.iter_mut().enumerate() {
        *g += w * (su - pu.get(i).copied().unwrap_or(0.0));
    }
    su * sv - eq
}

/// `S_tu S_tv S_su S_sv - P[t_u = t_v] P[s_u = s_v]`.
fn neq_pair(p: &RowMatrix, vars: [VariableId; 4], w: f64, grad: &mut RowMatrix) -> f64 {
    let rows: Vec<Vec<f64>> = vars.iter().map(|v| p.row(v.row()).to_vec()).collect();
    let sums: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let a = dot(&rows[0], &rows[1]);
    let b = dot(&rows[2], &rows[3]);
    let all: f64 = sums.iter().product();
    for k in 0..4 {
        let others: f64 = (0..4).filter(|&o| o != k).map(|o| sums[o]).product();
        // partner in the same equality and the other equality's probability
        let partner = &rows[k ^ 1];
        let other_eq = if k < 2 { b } else { a };
        let g = grad.row_mut(vars[k].row());
        for (i, gi) in g.iter_mut().enumerate() {
            *gi += w * (others - partner.get(i).copied().unwrap_or(0.0) * other_eq);
        }
    }
    all - a * b
}

/// `(prod_i S_i - prod_i (E_i - O_i)) / 2` where `E_i`, `O_i` are the masses
/// on even and odd values; on the simplex this is `(1 - prod (1 - 2 q_i)) / 2`.
fn parity(p: &RowMatrix, vars: &[VariableId], w: f64, grad: &mut RowMatrix) -> f64 {
    let k = vars.len();
    let mut s = Vec::with_capacity(k);
    let mut d = Vec::with_capacity(k);
    for v in vars {
        let row = p.row(v.row());
        let (mut even, mut odd) = (0.0, 0.0);
        for (j, x) in row.iter().enumerate() {
            if j % 2 == 0 {
                even += x;
            } else {
                odd += x;
            }
        }
        s.push(even + odd);
        d.push(even - odd);
    }
    // prefix/suffix products exclude each factor without dividing
    let excl = |f: &[f64]| -> (f64, Vec<f64>) {
        let mut out = vec![1.0; k];
        let mut acc = 1.0;
        for i in 0..k {
            out[i] = acc;
            acc *= f[i];
        }
        let total = acc;
        let mut acc = 1.0;
        for i in (0..k).rev() {
            out[i] *= acc;
            acc *= f[i];
        }
        (total, out)
    };
    let (s_all, s_excl) = excl(&s);
    let (d_all, d_excl) = excl(&d);
    for (i, v) in vars.iter().enumerate() {
        let g = grad.row_mut(v.row());
        for (j, gj) in g.iter_mut().enumerate() {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            *gj += w * 0.5 * (s_excl[i] - sign * d_excl[i]);
        }
    }
    0.5 * (s_all - d_all)
}
