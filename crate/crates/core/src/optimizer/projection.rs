use crate::cop::{Gradient, RowMatrix, SimplexPoint};
use crate::error::{Error, Result};

/// Euclidean projection of `row` onto the probability simplex by sorting
/// and thresholding.
pub fn project_simplex(row: &[f64]) -> Result<Vec<f64>> {
    if row.iter().any(|x| x.is_nan()) {
        return Err(Error::NotANumber);
    }
    if row.is_empty() {
        return Err(Error::Shape("empty row".into()));
    }
    let mut out = row.to_vec();
    project_in_place(&mut out, &mut Vec::new());
    Ok(out)
}

/// In-place projection; `scratch` is reused between calls. Inputs must be
/// finite.
pub(crate) fn project_in_place(row: &mut [f64], scratch: &mut Vec<f64>) {
    scratch.clear();
    scratch.extend_from_slice(row);
    scratch.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in scratch.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    for x in row.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Projects every row of `q` onto its simplex.
pub fn project_point(q: &RowMatrix) -> Result<SimplexPoint> {
    if q.data().iter().any(|x| x.is_nan()) {
        return Err(Error::NotANumber);
    }
    let mut out = q.clone();
    let mut scratch = Vec::new();
    for i in 0..out.rows() {
        project_in_place(out.row_mut(i), &mut scratch);
    }
    Ok(SimplexPoint::new_unchecked(out))
}

/// `(proj(P + eta * grad) - P) / eta`.
pub fn gradient_mapping(point: &SimplexPoint, grad: &Gradient, eta: f64) -> Result<RowMatrix> {
    if eta.is_nan() || eta <= 0.0 {
        return Err(Error::Config(format!("step size {eta} must be positive")));
    }
    let p = point.matrix();
    if !p.same_shape(grad) {
        return Err(Error::Shape("gradient shape differs from point".into()));
    }
    let mut q = p.clone();
    q.add_scaled(grad, eta);
    let mut g = project_point(&q)?.into_matrix();
    g.add_scaled(p, -1.0);
    g.scale(1.0 / eta);
    Ok(g)
}
