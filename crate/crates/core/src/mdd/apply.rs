use std::collections::HashMap;

use super::build::Builder;
use super::{Level, Mdd, NodeRef};
use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum ApplyOp {
    And,
    Or,
    Xor,
}

impl ApplyOp {
    fn eval(self, a: bool, b: bool) -> bool {
        match self {
            ApplyOp::And => a && b,
            ApplyOp::Or => a || b,
            ApplyOp::Xor => a != b,
        }
    }

    /// Result when one operand is the terminal `t`, if it does not depend on
    /// the other operand.
    fn absorbs(self, t: bool) -> Option<bool> {
        match (self, t) {
            (ApplyOp::And, false) => Some(false),
            (ApplyOp::Or, true) => Some(true),
            _ => None,
        }
    }
}

/// Interleaves two variable orders, preserving the relative order of each.
/// Fails if they order some pair of variables differently.
pub fn merge_orders(left: &[Level], right: &[Level]) -> Result<Vec<Level>> {
    let pos_right: HashMap<_, _> = right.iter().enumerate().map(|(i, l)| (l.var, i)).collect();
    let mut out = Vec::with_capacity(left.len() + right.len());
    let mut j = 0;
    for l in left {
        if let Some(&k) = pos_right.get(&l.var) {
            if k < j {
                return Err(Error::OrderConflict(format!(
                    "{} is ordered inconsistently",
                    l.var
                )));
            }
            if right[k].size != l.size {
                return Err(Error::OrderConflict(format!(
                    "{} has domain sizes {} and {}",
                    l.var, l.size, right[k].size
                )));
            }
            out.extend_from_slice(&right[j..k]);
            j = k + 1;
        }
        out.push(*l);
    }
    out.extend_from_slice(&right[j..]);
    // a variable of `right` placed before a shared one must not occur in `left` later
    let mut seen = std::collections::HashSet::new();
    for l in &out {
        if !seen.insert(l.var) {
            return Err(Error::OrderConflict(format!("{} is ordered inconsistently", l.var)));
        }
    }
    Ok(out)
}

/// Combines two diagrams pointwise under `op`. The result uses the merged
/// variable order and is fully reduced.
pub fn apply(left: &Mdd, right: &Mdd, op: ApplyOp) -> Result<Mdd> {
    let levels = merge_orders(left.levels(), right.levels())?;
    let pos: HashMap<_, _> = levels.iter().enumerate().map(|(i, l)| (l.var, i)).collect();
    let mut ctx = Ctx {
        left,
        right,
        op,
        levels: &levels,
        pos,
        builder: Builder::new(levels.clone(), usize::MAX),
        memo: HashMap::new(),
    };
    let root = ctx.go(left.root(), right.root());
    Ok(ctx.builder.finish(root))
}

struct Ctx<'a> {
    left: &'a Mdd,
    right: &'a Mdd,
    op: ApplyOp,
    levels: &'a [Level],
    pos: HashMap<crate::model::VariableId, usize>,
    builder: Builder,
    memo: HashMap<(NodeRef, NodeRef), NodeRef>,
}

impl Ctx<'_> {
    fn depth(&self, m: &Mdd, r: NodeRef) -> usize {
        match m.node(r) {
            Some(n) => self.pos[&n.var],
            None => self.levels.len(),
        }
    }

    fn go(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        let as_bool = |r: NodeRef| match r {
            NodeRef::True => Some(true),
            NodeRef::False => Some(false),
            NodeRef::Node(_) => None,
        };
        match (as_bool(a), as_bool(b)) {
            (Some(x), Some(y)) => return NodeRef::terminal(self.op.eval(x, y)),
            (Some(t), None) | (None, Some(t)) => {
                if let Some(v) = self.op.absorbs(t) {
                    return NodeRef::terminal(v);
                }
            }
            _ => {}
        }
        if let Some(&hit) = self.memo.get(&(a, b)) {
            return hit;
        }
        let da = self.depth(self.left, a);
        let db = self.depth(self.right, b);
        let top = da.min(db);
        let Level { var, size } = self.levels[top];
        let mut children = Vec::with_capacity(size as usize);
        for v in 0..size as usize {
            let ca = if da == top { self.left.node(a).unwrap().children[v] } else { a };
            let cb = if db == top { self.right.node(b).unwrap().children[v] } else { b };
            children.push(self.go(ca, cb));
        }
        let out = self.builder.make(var, children).expect("unbounded builder");
        self.memo.insert((a, b), out);
        out
    }
}
