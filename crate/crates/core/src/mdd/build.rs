use std::collections::HashMap;

use super::{canonicalize, Level, Mdd, MddNode, NodeRef};
use crate::error::{Error, Result};
use crate::model::{Constraint, DiscreteAssignment, Expr, VariableId, VariableTable};

/// How the levels of a constraint's diagram are ordered.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum VariableOrder {
    /// Ascending variable index.
    #[default]
    Instance,
    /// Order of first occurrence in the expression, left to right.
    FirstUse,
    /// The given sequence restricted to the constraint's atoms; it must
    /// mention every atom.
    Explicit(Vec<VariableId>),
}

impl VariableOrder {
    pub fn resolve(&self, expr: &Expr) -> Result<Vec<VariableId>> {
        let mut atoms = expr.variables();
        match self {
            VariableOrder::FirstUse => Ok(atoms),
            VariableOrder::Instance => {
                atoms.sort_unstable();
                Ok(atoms)
            }
            VariableOrder::Explicit(seq) => {
                let order: Vec<VariableId> =
                    seq.iter().copied().filter(|v| atoms.contains(v)).collect();
                atoms.retain(|v| !order.contains(v));
                if let Some(missing) = atoms.first() {
                    return Err(Error::OrderConflict(format!(
                        "explicit order does not mention {missing}"
                    )));
                }
                Ok(order)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct BuildLimits {
    /// Constraints over more atoms are rejected.
    pub max_atoms: usize,
    pub max_nodes: usize,
    /// Cofactor memo entries before switching to the truth-table builder.
    pub max_memo: usize,
    /// The truth-table builder handles at most this many atoms...
    pub truth_table_atoms: usize,
    /// ...and at most this many assignments.
    pub truth_table_cap: u64,
}

impl Default for BuildLimits {
    fn default() -> Self {
        Self {
            max_atoms: 64,
            max_nodes: 1 << 22,
            max_memo: 1 << 21,
            truth_table_atoms: 16,
            truth_table_cap: 10_000_000,
        }
    }
}

/// Hash-consing node store.
pub(crate) struct Builder {
    levels: Vec<Level>,
    raw: Vec<MddNode>,
    unique: HashMap<MddNode, u32>,
    max_nodes: usize,
}

impl Builder {
    pub(crate) fn new(levels: Vec<Level>, max_nodes: usize) -> Self {
        Self {
            levels,
            raw: Vec::new(),
            unique: HashMap::new(),
            max_nodes,
        }
    }

    /// Node with redundant-node elimination.
    pub(crate) fn make(&mut self, var: VariableId, children: Vec<NodeRef>) -> Result<NodeRef> {
        if children.windows(2).all(|w| w[0] == w[1]) {
            return Ok(children[0]);
        }
        self.make_keep(var, children)
    }

    /// Node without redundant-node elimination; isomorphic nodes are shared.
    pub(crate) fn make_keep(&mut self, var: VariableId, children: Vec<NodeRef>) -> Result<NodeRef> {
        let node = MddNode { var, children };
        if let Some(&i) = self.unique.get(&node) {
            return Ok(NodeRef::Node(i));
        }
        if self.raw.len() >= self.max_nodes {
            return Err(Error::MddCap(format!("more than {} nodes", self.max_nodes)));
        }
        let i = self.raw.len() as u32;
        self.raw.push(node.clone());
        self.unique.insert(node, i);
        Ok(NodeRef::Node(i))
    }

    pub(crate) fn finish(self, root: NodeRef) -> Mdd {
        canonicalize(self.levels, &self.raw, root)
    }
}

fn levels_for(order: &[VariableId], vars: &VariableTable) -> Result<Vec<Level>> {
    order
        .iter()
        .map(|&v| {
            vars.get(v)
                .map(|var| Level {
                    var: v,
                    size: var.domain.size(),
                })
                .ok_or_else(|| Error::Instance(format!("unknown variable {v}")))
        })
        .collect()
}

pub fn build_atomic(constraint: &Constraint, vars: &VariableTable, order: &VariableOrder) -> Result<Mdd> {
    build_atomic_with(constraint, vars, order, &BuildLimits::default())
}

/// Compiles one constraint by recursive cofactoring. Residual expressions
/// (after substitution and constant folding) are memoized per level, so
/// equal residuals share a node. If the memo outgrows its limit the
/// truth-table builder takes over for small scopes.
pub fn build_atomic_with(
    constraint: &Constraint,
    vars: &VariableTable,
    order: &VariableOrder,
    limits: &BuildLimits,
) -> Result<Mdd> {
    let expr = constraint.to_expr();
    let order = order.resolve(&expr)?;
    if order.len() > limits.max_atoms {
        return Err(Error::MddCap(format!(
            "constraint has {} atoms, limit is {}",
            order.len(),
            limits.max_atoms
        )));
    }
    let levels = levels_for(&order, vars)?;
    let mut cof = Cofactor {
        builder: Builder::new(levels.clone(), limits.max_nodes),
        levels: &levels,
        memo: HashMap::new(),
        max_memo: limits.max_memo,
    };
    match cof.build(0, expr.clone()) {
        Ok(root) => Ok(cof.builder.finish(root)),
        Err(Error::MddCap(msg)) if cof.memo.len() > limits.max_memo => {
            drop(cof);
            if levels.len() > limits.truth_table_atoms {
                return Err(Error::MddCap(msg));
            }
            truth_table(&expr, vars.len(), levels, limits)
        }
        Err(e) => Err(e),
    }
}

struct Cofactor<'a> {
    builder: Builder,
    levels: &'a [Level],
    memo: HashMap<(usize, Expr), NodeRef>,
    max_memo: usize,
}

impl Cofactor<'_> {
    fn build(&mut self, mut pos: usize, e: Expr) -> Result<NodeRef> {
        if let Some(c) = e.as_const() {
            return Ok(NodeRef::terminal(c != 0));
        }
        while !e.mentions(self.levels[pos].var) {
            pos += 1;
        }
        let key = (pos, e);
        if let Some(&hit) = self.memo.get(&key) {
            return Ok(hit);
        }
        let Level { var, size } = self.levels[pos];
        let mut children = Vec::with_capacity(size as usize);
        for value in 0..size {
            children.push(self.build(pos + 1, key.1.assign(var, value as i64))?);
        }
        let node = self.builder.make(var, children)?;
        self.memo.insert(key, node);
        if self.memo.len() > self.max_memo {
            return Err(Error::MddCap("cofactor memo limit".into()));
        }
        Ok(node)
    }
}

/// Builds the diagram of `expr` from its full truth table over `levels`.
pub fn build_truth_table(expr: &Expr, num_vars: usize, levels: Vec<Level>) -> Result<Mdd> {
    truth_table(expr, num_vars, levels, &BuildLimits::default())
}

fn truth_table(expr: &Expr, num_vars: usize, levels: Vec<Level>, limits: &BuildLimits) -> Result<Mdd> {
    let total = levels
        .iter()
        .fold(1u128, |acc, l| acc.saturating_mul(l.size as u128));
    if total > limits.truth_table_cap as u128 {
        return Err(Error::EnumerationCap {
            size: total,
            cap: limits.truth_table_cap,
        });
    }
    // first level most significant, so the odometer visits indices in order
    let mut values = vec![0u32; num_vars];
    let mut layer = Vec::with_capacity(total as usize);
    'outer: loop {
        let x = DiscreteAssignment::new(values.clone());
        layer.push(NodeRef::terminal(expr.eval(&x) != 0));
        for l in levels.iter().rev() {
            let v = &mut values[l.var.row()];
            *v += 1;
            if *v < l.size {
                continue 'outer;
            }
            *v = 0;
        }
        break;
    }
    let mut b = Builder::new(levels.clone(), limits.max_nodes);
    for l in levels.iter().rev() {
        let size = l.size as usize;
        let mut next = Vec::with_capacity(layer.len() / size);
        for chunk in layer.chunks(size) {
            next.push(b.make(l.var, chunk.to_vec())?);
        }
        layer = next;
    }
    Ok(b.finish(layer[0]))
}
