//! Level-synchronous traversal of many diagrams at once.
//!
//! Every diagram is flattened to its edge table and zero-padded to a common
//! row count `R`. A top-down sweep walks row index `r = 0..R` and, for each
//! table, propagates `m_td[cid] += m_td[nid] * p[pointer[vid] + eid]`;
//! padding rows (`vid == 0`) are skipped. The bottom-up sweep walks rows in
//! reverse with `m_bu[nid] += m_bu[cid] * p[...]`. Because each table lists
//! its rows in topological source order, row `r` only reads messages that
//! are final before row `r`, so the row-sequential schedule is exact.
//!
//! Tables are split into fixed chunks that run in parallel; each chunk owns
//! a disjoint slice of the message buffers, and per-chunk gradient partials
//! are merged in chunk order, so results do not depend on thread count.

use rayon::prelude::*;

use crate::cop::{check_shape, Gradient, RowMatrix};
use crate::error::{Error, Result};
use crate::mdd::{EdgeRow, Mdd};

const MAX_CHUNKS: usize = 64;
const MIN_CHUNK: usize = 32;

#[derive(Clone, Debug)]
pub struct Batch {
    /// `k * R` rows, table-major.
    rows: Vec<EdgeRow>,
    rows_per_table: usize,
    /// `pointer[vid]` is the offset of variable `vid`'s row in the flat
    /// probability vector; `pointer[0]` is unused.
    pointer: Vec<usize>,
    /// Per table: offset of its message slots; node id `i` lives at
    /// `offset + i`.
    node_offset: Vec<usize>,
    root: Vec<u32>,
    true_id: Vec<u32>,
    total_slots: usize,
    shape: Vec<usize>,
    /// Per table, the flat-point row of each level, outermost first.
    level_rows: Vec<Vec<usize>>,
    /// Parallel to `rows`: the half-open level range an edge skips.
    skipped: Vec<(u32, u32)>,
    /// Per table, the levels above the root.
    root_level: Vec<u32>,
}

impl Batch {
    /// Packs diagrams over a point of the given shape.
    pub fn pack(mdds: &[Mdd], shape: &[usize]) -> Result<Batch> {
        if mdds.is_empty() {
            return Err(Error::Config("cannot pack an empty batch".into()));
        }
        let probe = RowMatrix::zeros(shape);
        let r = mdds.iter().map(Mdd::edge_count).max().unwrap();
        let mut rows = Vec::with_capacity(r * mdds.len());
        let mut node_offset = Vec::with_capacity(mdds.len());
        let mut root = Vec::with_capacity(mdds.len());
        let mut true_id = Vec::with_capacity(mdds.len());
        let mut total_slots = 0;
        let mut level_rows = Vec::with_capacity(mdds.len());
        let mut skipped = Vec::with_capacity(r * mdds.len());
        let mut root_level = Vec::with_capacity(mdds.len());
        for m in mdds {
            check_shape(m, &probe)?;
            let t = m.to_edge_table(r)?;
            let levels = m.node_levels();
            // ids 1..=K are nodes, K+1 and K+2 the terminals
            let level_of_id = |id: u32| -> u32 {
                levels.get(id as usize - 1).map_or(m.levels().len(), |&l| l) as u32
            };
            for row in &t.rows {
                skipped.push(if row.is_padding() {
                    (0, 0)
                } else {
                    (level_of_id(row.nid) + 1, level_of_id(row.cid))
                });
            }
            level_rows.push(m.levels().iter().map(|l| l.var.row()).collect());
            root_level.push(level_of_id(t.root));
            rows.extend_from_slice(&t.rows);
            node_offset.push(total_slots);
            // ids run 1..=K+2; slot 0 is unused
            total_slots += m.node_count() + 3;
            root.push(t.root);
            true_id.push(t.true_id);
        }
        let mut pointer = vec![0];
        pointer.extend_from_slice(&probe.offsets()[..shape.len()]);
        Ok(Batch {
            rows,
            rows_per_table: r,
            pointer,
            node_offset,
            root,
            true_id,
            total_slots,
            shape: shape.to_vec(),
            level_rows,
            skipped,
            root_level,
        })
    }

    pub fn len(&self) -> usize {
        self.root.len()
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_empty()
    }

    /// Common row count `R`.
    pub fn rows_per_table(&self) -> usize {
        self.rows_per_table
    }

    pub fn table(&self, t: usize) -> &[EdgeRow] {
        &self.rows[t * self.rows_per_table..(t + 1) * self.rows_per_table]
    }

    pub fn pointer(&self) -> &[usize] {
        &self.pointer
    }

    fn check(&self, p: &RowMatrix) -> Result<()> {
        if p.shape() != self.shape {
            return Err(Error::Shape("point shape differs from batch shape".into()));
        }
        Ok(())
    }

    fn chunk_len(&self) -> usize {
        self.len().div_ceil(MAX_CHUNKS).max(MIN_CHUNK)
    }

    /// Table ranges and the message-buffer range each chunk owns.
    fn chunks(&self) -> Vec<(std::ops::Range<usize>, std::ops::Range<usize>)> {
        let c = self.chunk_len();
        (0..self.len())
            .step_by(c)
            .map(|start| {
                let end = (start + c).min(self.len());
                let lo = self.node_offset[start];
                let hi = if end == self.len() {
                    self.total_slots
                } else {
                    self.node_offset[end]
                };
                (start..end, lo..hi)
            })
            .collect()
    }

    fn top_down_into(&self, p: &[f64], m_td: &mut [f64]) {
        let chunks = self.chunks();
        let mut slices = split_by(m_td, chunks.iter().map(|c| c.1.len()));
        slices
            .par_iter_mut()
            .zip(&chunks)
            .for_each(|(buf, (tables, slots))| {
                for t in tables.clone() {
                    buf[self.node_offset[t] - slots.start + self.root[t] as usize] = 1.0;
                }
                for r in 0..self.rows_per_table {
                    for t in tables.clone() {
                        let row = self.rows[t * self.rows_per_table + r];
                        if row.vid == 0 {
                            continue;
                        }
                        let base = self.node_offset[t] - slots.start;
                        let prob = p[self.pointer[row.vid as usize] + row.eid as usize];
                        buf[base + row.cid as usize] += buf[base + row.nid as usize] * prob;
                    }
                }
            });
    }

    fn bottom_up_into(&self, p: &[f64], m_bu: &mut [f64]) {
        let chunks = self.chunks();
        let mut slices = split_by(m_bu, chunks.iter().map(|c| c.1.len()));
        slices
            .par_iter_mut()
            .zip(&chunks)
            .for_each(|(buf, (tables, slots))| {
                for t in tables.clone() {
                    buf[self.node_offset[t] - slots.start + self.true_id[t] as usize] = 1.0;
                }
                for r in (0..self.rows_per_table).rev() {
                    for t in tables.clone() {
                        let row = self.rows[t * self.rows_per_table + r];
                        if row.vid == 0 {
                            continue;
                        }
                        let base = self.node_offset[t] - slots.start;
                        let prob = p[self.pointer[row.vid as usize] + row.eid as usize];
                        buf[base + row.nid as usize] += buf[base + row.cid as usize] * prob;
                    }
                }
            });
    }

    /// COP of every table by the batched top-down sweep.
    pub fn top_down(&self, point: impl AsRef<RowMatrix>) -> Result<Vec<f64>> {
        let p = point.as_ref();
        self.check(p)?;
        let mut m_td = vec![0.0; self.total_slots];
        self.top_down_into(p.data(), &mut m_td);
        Ok((0..self.len())
            .map(|t| m_td[self.node_offset[t] + self.true_id[t] as usize])
            .collect())
    }

    /// COP of every table by the batched bottom-up sweep.
    pub fn bottom_up(&self, point: impl AsRef<RowMatrix>) -> Result<Vec<f64>> {
        let p = point.as_ref();
        self.check(p)?;
        let mut m_bu = vec![0.0; self.total_slots];
        self.bottom_up_into(p.data(), &mut m_bu);
        Ok((0..self.len())
            .map(|t| m_bu[self.node_offset[t] + self.root[t] as usize])
            .collect())
    }

    /// Per-table COPs and the unweighted sum of their gradients.
    pub fn gradient(&self, point: impl AsRef<RowMatrix>) -> Result<(Vec<f64>, Gradient)> {
        self.weighted_gradient(point, &vec![1.0; self.len()])
    }

    /// Per-table COPs and `sum_t weights[t] * grad COP_t`.
    pub fn weighted_gradient(
        &self,
        point: impl AsRef<RowMatrix>,
        weights: &[f64],
    ) -> Result<(Vec<f64>, Gradient)> {
        let p = point.as_ref();
        self.check(p)?;
        if weights.len() != self.len() {
            return Err(Error::Shape(format!(
                "{} weights for {} tables",
                weights.len(),
                self.len()
            )));
        }
        let mut m_td = vec![0.0; self.total_slots];
        let mut m_bu = vec![0.0; self.total_slots];
        self.top_down_into(p.data(), &mut m_td);
        self.bottom_up_into(p.data(), &mut m_bu);
        let cops = (0..self.len())
            .map(|t| m_td[self.node_offset[t] + self.true_id[t] as usize])
            .collect();

        let partials: Vec<Vec<f64>> = self
            .chunks()
            .into_par_iter()
            .map(|(tables, _)| {
                let mut g = vec![0.0; p.data().len()];
                let mut skip = Vec::new();
                for t in tables {
                    let base = self.node_offset[t];
                    let w = weights[t];
                    // mass of edges spanning each level, as a difference array
                    skip.clear();
                    skip.resize(self.level_rows[t].len() + 1, 0.0);
                    let root_level = self.root_level[t] as usize;
                    if root_level > 0 {
                        let mass = w * m_bu[base + self.root[t] as usize];
                        skip[0] += mass;
                        skip[root_level] -= mass;
                    }
                    let first = t * self.rows_per_table;
                    for (k, row) in self.table(t).iter().enumerate() {
                        if row.vid == 0 {
                            continue;
                        }
                        let idx = self.pointer[row.vid as usize] + row.eid as usize;
                        let mass = w * m_td[base + row.nid as usize];
                        let bu = m_bu[base + row.cid as usize];
                        g[idx] += mass * bu;
                        let (from, to) = self.skipped[first + k];
                        if to > from && bu != 0.0 {
                            let m = mass * p.data()[idx] * bu;
                            skip[from as usize] += m;
                            skip[to as usize] -= m;
                        }
                    }
                    let mut acc = 0.0;
                    for (k, &var_row) in self.level_rows[t].iter().enumerate() {
                        acc += skip[k];
                        if acc != 0.0 {
                            let off = self.pointer[var_row + 1];
                            for x in &mut g[off..off + self.shape[var_row]] {
                                *x += acc;
                            }
                        }
                    }
                }
                g
            })
            .collect();
        let mut grad = RowMatrix::zeros(&self.shape);
        for part in &partials {
            for (a, b) in grad.data_mut().iter_mut().zip(part) {
                *a += b;
            }
        }
        Ok((cops, grad))
    }

    /// Verifies that the row-sequential schedule is sound: in every table,
    /// each node's incoming rows precede all of its outgoing rows, so the
    /// top-down sweep reads `m_td[nid]` only after its last write and the
    /// reverse sweep reads `m_bu[cid]` only after its last write.
    pub fn check_row_schedule(&self) -> Result<()> {
        for t in 0..self.len() {
            let rows = self.table(t);
            let slots = if t + 1 < self.len() {
                self.node_offset[t + 1] - self.node_offset[t]
            } else {
                self.total_slots - self.node_offset[t]
            };
            let mut last_in = vec![None::<usize>; slots];
            let mut first_out = vec![None::<usize>; slots];
            for (r, row) in rows.iter().enumerate() {
                if row.vid == 0 {
                    continue;
                }
                last_in[row.cid as usize] = Some(r);
                first_out[row.nid as usize].get_or_insert(r);
            }
            for id in 0..slots {
                if let (Some(w), Some(rd)) = (last_in[id], first_out[id]) {
                    if w >= rd {
                        return Err(Error::MddFormat(format!(
                            "table {t}: node {id} is read at row {rd} before its last write at row {w}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn split_by(mut buf: &mut [f64], lens: impl Iterator<Item = usize>) -> Vec<&mut [f64]> {
    let mut out = Vec::new();
    for len in lens {
        let (head, tail) = std::mem::take(&mut buf).split_at_mut(len);
        out.push(head);
        buf = tail;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cop::{cop_gradient, top_down};
    use crate::mdd::{build_atomic, VariableOrder};
    use crate::model::format::parse_instance;
    use crate::SimplexPoint;

    fn mdds(text: &str) -> (Vec<Mdd>, Vec<usize>) {
        let inst = parse_instance(text).unwrap();
        let ms = inst
            .constraints()
            .iter()
            .map(|c| build_atomic(c, inst.variables(), &VariableOrder::Instance).unwrap())
            .collect();
        (ms, inst.shape())
    }

    const TEXT: &str = "\
var x1 3
var x2 3
var x3 3
var x4 3
con expr x1 & x2 & x3 & x4 = 1
con expr x1 & (x2 < x3) & x4 = 1
con expr (x1 < x2) ^ (x3 > x4)
con expr x2 < 3
";

    #[test]
    fn matches_serial_traversal() {
        let (ms, shape) = mdds(TEXT);
        let b = Batch::pack(&ms, &shape).unwrap();
        let widest = ms.iter().map(|m| m.edge_count()).max().unwrap();
        assert_eq!(b.rows_per_table(), widest);
        b.check_row_schedule().unwrap();
        let p = SimplexPoint::new(
            RowMatrix::from_rows(vec![
                vec![0.2, 0.5, 0.3],
                vec![0.1, 0.1, 0.8],
                vec![0.6, 0.3, 0.1],
                vec![0.25, 0.25, 0.5],
            ])
            .unwrap(),
        )
        .unwrap();
        let td = b.top_down(&p).unwrap();
        let bu = b.bottom_up(&p).unwrap();
        let (cops, grad) = b.gradient(&p).unwrap();
        let mut expected = RowMatrix::zeros(&shape);
        for (i, m) in ms.iter().enumerate() {
            let (c, _) = top_down(m, &p).unwrap();
            assert!((td[i] - c).abs() < 1e-12);
            assert!((bu[i] - c).abs() < 1e-12);
            assert!((cops[i] - c).abs() < 1e-12);
            expected.add_scaled(&cop_gradient(m, &p).unwrap().1, 1.0);
        }
        // the constant table is all padding and reports TRUE
        assert_eq!(td[3], 1.0);
        assert!(grad.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn copies_scale_the_gradient() {
        let (ms, shape) = mdds(TEXT);
        let one = Batch::pack(&ms[1..2], &shape).unwrap();
        let many = Batch::pack(&vec![ms[1].clone(); 70], &shape).unwrap();
        let p = SimplexPoint::uniform(&shape);
        let (_, g1) = one.gradient(&p).unwrap();
        let (cops, g70) = many.gradient(&p).unwrap();
        assert!(cops.windows(2).all(|w| w[0] == w[1]));
        let mut scaled = g1.clone();
        scaled.scale(70.0);
        assert!(g70.max_abs_diff(&scaled) < 1e-12);
    }

    #[test]
    fn empty_batch_rejected() {
        assert!(Batch::pack(&[], &[2]).is_err());
    }
}
