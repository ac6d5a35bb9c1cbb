//! Exhaustive reference implementations. Slow by design; every fast path in
//! the crate is tested against these.

use super::{Constraint, DiscreteAssignment, Instance, VariableId};
use crate::cop::RowMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

fn product_size(sizes: impl Iterator<Item = usize>) -> u128 {
    sizes.fold(1u128, |acc, s| acc.saturating_mul(s as u128))
}

/// Calls `visit` for every assignment of `vars`, other rows held at 0.
fn for_each_assignment(
    n: usize,
    vars: &[VariableId],
    sizes: &[usize],
    mut visit: impl FnMut(&DiscreteAssignment),
) {
    let mut values = vec![0u32; n];
    loop {
        visit(&DiscreteAssignment::new(values.clone()));
        let mut k = 0;
        loop {
            if k == vars.len() {
                return;
            }
            let row = vars[k].row();
            values[row] += 1;
            if (values[row] as usize) < sizes[k] {
                break;
            }
            values[row] = 0;
            k += 1;
        }
    }
}

/// Circuit-output probability by enumeration over the constraint's atoms:
/// the sum of `prod p[i][x_i]` over all satisfying `x`.
///
/// `point` need not lie on the simplex (finite differences step off it).
pub fn brute_force_cop(constraint: &Constraint, point: &RowMatrix, cap: u64) -> Result<f64> {
    let vars = constraint.variables();
    for v in &vars {
        if v.row() >= point.rows() {
            return Err(Error::Shape(format!("point has no row for {v}")));
        }
    }
    let sizes: Vec<usize> = vars.iter().map(|v| point.row(v.row()).len()).collect();
    let size = product_size(sizes.iter().copied());
    if size > cap as u128 {
        return Err(Error::EnumerationCap { size, cap });
    }
    let mut total = 0.0;
    for_each_assignment(point.rows(), &vars, &sizes, |x| {
        if constraint.is_satisfied(x) {
            total += vars
                .iter()
                .map(|v| point.row(v.row())[x.value(*v) as usize])
                .product::<f64>();
        }
    });
    Ok(total)
}

/// Every assignment satisfying all hard constraints, in lexicographic order
/// with the last variable varying slowest.
pub fn enumerate_satisfying(instance: &Instance, cap: u64) -> Result<Vec<DiscreteAssignment>> {
    let shape = instance.shape();
    let size = product_size(shape.iter().copied());
    if size > cap as u128 {
        return Err(Error::EnumerationCap { size, cap });
    }
    let vars: Vec<VariableId> = (0..shape.len()).map(VariableId::from_row).collect();
    let hard: Vec<&Constraint> = instance.constraints().iter().filter(|c| !c.soft).collect();
    let mut out = Vec::new();
    for_each_assignment(shape.len(), &vars, &shape, |x| {
        if hard.iter().all(|c| c.is_satisfied(x)) {
            out.push(x.clone());
        }
    });
    Ok(out)
}
