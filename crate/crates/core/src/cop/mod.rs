//! Circuit-output probability: the probability that a constraint holds when
//! every variable is drawn independently from its probability row.
//!
//! For a diagram, a top-down pass pushes path mass from the root and a
//! bottom-up pass pulls satisfaction probability from the TRUE terminal. The
//! partial derivative with respect to `p[i][j]` is the sum, over nodes `v`
//! testing variable `i`, of `top_down[v] * bottom_up[child_j(v)]`.

mod closed;
mod objective;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdd::{Mdd, NodeRef};

pub use closed::{closed_form_accumulate, closed_form_cop};
pub use objective::{Compiled, CompileOptions, Objective};

/// Ragged matrix with one row per variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowMatrix {
    data: Vec<f64>,
    /// `offsets[i]..offsets[i + 1]` is row `i`.
    offsets: Vec<usize>,
}

/// Partial derivatives, shaped like the point.
pub type Gradient = RowMatrix;

impl RowMatrix {
    pub fn zeros(shape: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(shape.len() + 1);
        offsets.push(0);
        for s in shape {
            offsets.push(offsets.last().unwrap() + s);
        }
        Self {
            data: vec![0.0; *offsets.last().unwrap()],
            offsets,
        }
    }

    pub fn uniform(shape: &[usize]) -> Self {
        let mut m = Self::zeros(shape);
        for i in 0..m.rows() {
            let row = m.row_mut(i);
            let v = 1.0 / row.len() as f64;
            row.fill(v);
        }
        m
    }

    /// Point mass on `values[i]` in row `i`.
    pub fn one_hot(shape: &[usize], values: &[u32]) -> Self {
        let mut m = Self::zeros(shape);
        for (i, &v) in values.iter().enumerate() {
            m.row_mut(i)[v as usize] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.iter().any(|r| r.is_empty()) {
            return Err(Error::Shape("empty row".into()));
        }
        let shape: Vec<usize> = rows.iter().map(Vec::len).collect();
        let mut m = Self::zeros(&shape);
        for (i, r) in rows.iter().enumerate() {
            m.row_mut(i).copy_from_slice(r);
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn same_shape(&self, other: &RowMatrix) -> bool {
        self.offsets == other.offsets
    }

    /// Start of each row in [`RowMatrix::data`].
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows()).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, other: &RowMatrix, a: f64) {
        assert!(self.same_shape(other), "shape mismatch");
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for x in &mut self.data {
            *x *= a;
        }
    }

    pub fn max_abs_diff(&self, other: &RowMatrix) -> f64 {
        assert!(self.same_shape(other), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl AsRef<RowMatrix> for RowMatrix {
    fn as_ref(&self) -> &RowMatrix {
        self
    }
}

/// A [`RowMatrix`] whose rows are probability vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint(RowMatrix);

pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

impl SimplexPoint {
    /// Validates that every entry is non-negative and every row sums to 1
    /// within [`SIMPLEX_TOLERANCE`].
    pub fn new(m: RowMatrix) -> Result<Self> {
        for i in 0..m.rows() {
            let row = m.row(i);
            if row.iter().any(|x| x.is_nan()) {
                return Err(Error::NotANumber);
            }
            if row.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                return Err(Error::Shape(format!("row {i} has an entry outside [0, 1]")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > SIMPLEX_TOLERANCE {
                return Err(Error::Shape(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: RowMatrix) -> Self {
        Self(m)
    }

    pub fn uniform(shape: &[usize]) -> Self {
        Self(RowMatrix::uniform(shape))
    }

    pub fn one_hot(shape: &[usize], values: &[u32]) -> Self {
        Self(RowMatrix::one_hot(shape, values))
    }

    pub fn matrix(&self) -> &RowMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> RowMatrix {
        self.0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.0.shape()
    }
}

impl AsRef<RowMatrix> for SimplexPoint {
    fn as_ref(&self) -> &RowMatrix {
        &self.0
    }
}

/// Per-node messages, indexed by [`Mdd::slot`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MessageState {
    pub top_down: Vec<f64>,
    pub bottom_up: Vec<f64>,
}

impl MessageState {
    /// `top_down[TRUE] + top_down[FALSE]`; 1 on every diagram when the point
    /// is on the simplex.
    pub fn terminal_mass(&self, mdd: &Mdd) -> f64 {
        self.top_down[mdd.slot(NodeRef::True)] + self.top_down[mdd.slot(NodeRef::False)]
    }

    /// Runs the top-down pass into the reusable buffer; returns COP.
    pub fn run_top_down(&mut self, mdd: &Mdd, p: &RowMatrix) -> f64 {
        let td = &mut self.top_down;
        td.clear();
        td.resize(mdd.slots(), 0.0);
        td[mdd.slot(mdd.root())] = 1.0;
        for (i, node) in mdd.nodes().iter().enumerate() {
            let mass = td[i];
            if mass == 0.0 {
                continue;
            }
            let row = p.row(node.var.row());
            for (j, c) in node.children.iter().enumerate() {
                td[mdd.slot(*c)] += mass * row[j];
            }
        }
        td[mdd.slot(NodeRef::True)]
    }

    /// Runs the bottom-up pass into the reusable buffer; returns COP.
    pub fn run_bottom_up(&mut self, mdd: &Mdd, p: &RowMatrix) -> f64 {
        let bu = &mut self.bottom_up;
        bu.clear();
        bu.resize(mdd.slots(), 0.0);
        bu[mdd.slot(NodeRef::True)] = 1.0;
        for (i, node) in mdd.nodes().iter().enumerate().rev() {
            let row = p.row(node.var.row());
            let mut acc = 0.0;
            for (j, c) in node.children.iter().enumerate() {
                acc += row[j] * bu[mdd.slot(*c)];
            }
            bu[i] = acc;
        }
        bu[mdd.slot(mdd.root())]
    }

    /// Adds `weight * dCOP/dp` into `grad` from messages of both passes.
    ///
    /// COP is the polynomial `sum_X f(X) prod_i p[i][x_i]` over every
    /// variable of the diagram, so an edge that skips levels still carries a
    /// factor `sum_j p[k][j]` for each skipped level `k`. On the simplex
    /// those factors are 1 and each contributes its edge mass uniformly to
    /// row `k` of the gradient.
    pub fn accumulate_gradient(&self, mdd: &Mdd, p: &RowMatrix, weight: f64, grad: &mut RowMatrix) {
        let levels = mdd.node_levels();
        let depth = mdd.levels().len();
        // difference array over levels: mass of edges spanning each level
        let mut skip = vec![0.0; depth + 1];
        let root_level = mdd.level_at(mdd.root(), &levels);
        if root_level > 0 {
            let mass = weight * self.bottom_up[mdd.slot(mdd.root())];
            skip[0] += mass;
            skip[root_level] -= mass;
        }
        for (i, node) in mdd.nodes().iter().enumerate() {
            let mass = weight * self.top_down[i];
            if mass == 0.0 {
                continue;
            }
            let row = p.row(node.var.row());
            let below = levels[i] + 1;
            let g = grad.row_mut(node.var.row());
            for (j, c) in node.children.iter().enumerate() {
                let bu = self.bottom_up[mdd.slot(*c)];
                g[j] += mass * bu;
                let to = mdd.level_at(*c, &levels);
                if to > below && bu != 0.0 {
                    let m = mass * row[j] * bu;
                    skip[below] += m;
                    skip[to] -= m;
                }
            }
        }
        let mut acc = 0.0;
        for (k, level) in mdd.levels().iter().enumerate() {
            acc += skip[k];
            if acc != 0.0 {
                grad.row_mut(level.var.row()).iter_mut().for_each(|x| *x += acc);
            }
        }
    }
}

pub(crate) fn check_shape(mdd: &Mdd, p: &RowMatrix) -> Result<()> {
    for l in mdd.levels() {
        let r = l.var.row();
        if r >= p.rows() {
            return Err(Error::Shape(format!("point has no row for {}", l.var)));
        }
        if p.row(r).len() != l.size as usize {
            return Err(Error::Shape(format!(
                "row for {} has length {}, diagram expects {}",
                l.var,
                p.row(r).len(),
                l.size
            )));
        }
    }
    Ok(())
}

/// COP by the top-down pass; returns the messages as well.
pub fn top_down(mdd: &Mdd, point: impl AsRef<RowMatrix>) -> Result<(f64, MessageState)> {
    let p = point.as_ref();
    check_shape(mdd, p)?;
    let mut s = MessageState::default();
    let cop = s.run_top_down(mdd, p);
    Ok((cop, s))
}

/// COP by the bottom-up pass; returns the messages as well.
pub fn bottom_up(mdd: &Mdd, point: impl AsRef<RowMatrix>) -> Result<(f64, MessageState)> {
    let p = point.as_ref();
    check_shape(mdd, p)?;
    let mut s = MessageState::default();
    let cop = s.run_bottom_up(mdd, p);
    Ok((cop, s))
}

/// COP and its gradient over the full point shape (rows of variables not in
/// the diagram are zero).
pub fn cop_gradient(mdd: &Mdd, point: impl AsRef<RowMatrix>) -> Result<(f64, Gradient)> {
    let p = point.as_ref();
    check_shape(mdd, p)?;
    let mut s = MessageState::default();
    s.run_top_down(mdd, p);
    let cop = s.run_bottom_up(mdd, p);
    let mut grad = RowMatrix::zeros(&p.shape());
    s.accumulate_gradient(mdd, p, 1.0, &mut grad);
    Ok((cop, grad))
}
