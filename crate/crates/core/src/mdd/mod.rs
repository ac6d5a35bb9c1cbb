//! Ordered multi-valued decision diagrams.
//!
//! Diagrams produced by [`build_atomic`] and [`apply`] are fully reduced:
//! isomorphic nodes are shared and nodes whose children all coincide are
//! removed, so an edge may skip levels. [`Mdd::reduce`] only merges
//! isomorphic nodes and [`Mdd::quasi_reduce`] re-inserts redundant nodes so
//! that every edge descends exactly one level.
//!
//! Nodes are stored in canonical order: grouped by level, and within a level
//! in breadth-first discovery order from the root (children visited by
//! ascending edge label). This order is topological and is the order used by
//! the `.mdd` edge-table format.

mod apply;
mod build;
mod table;

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::model::{DiscreteAssignment, VariableId};

pub use apply::{apply, merge_orders, ApplyOp};
pub use build::{build_atomic, build_atomic_with, build_truth_table, BuildLimits, VariableOrder};
pub use table::{read_mdd_file, write_mdd_file, EdgeRow, EdgeTable};

/// Reference to a node or terminal.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeRef {
    False,
    True,
    /// Index into [`Mdd::nodes`].
    Node(u32),
}

impl NodeRef {
    pub fn terminal(value: bool) -> Self {
        if value {
            NodeRef::True
        } else {
            NodeRef::False
        }
    }

    pub fn is_terminal(self) -> bool {
        !matches!(self, NodeRef::Node(_))
    }
}

/// One level of the variable order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Level {
    pub var: VariableId,
    pub size: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MddNode {
    pub var: VariableId,
    /// One child per domain value.
    pub children: Vec<NodeRef>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mdd {
    levels: Vec<Level>,
    nodes: Vec<MddNode>,
    root: NodeRef,
}

impl Mdd {
    pub fn constant(value: bool, levels: Vec<Level>) -> Self {
        Self {
            levels,
            nodes: Vec::new(),
            root: NodeRef::terminal(value),
        }
    }

    /// Variable order, outermost first.
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn nodes(&self) -> &[MddNode] {
        &self.nodes
    }

    pub fn node(&self, r: NodeRef) -> Option<&MddNode> {
        match r {
            NodeRef::Node(i) => self.nodes.get(i as usize),
            _ => None,
        }
    }

    pub fn root(&self) -> NodeRef {
        self.root
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of edges, which is the unpadded edge-table row count.
    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).sum()
    }

    pub fn is_constant(&self) -> Option<bool> {
        match self.root {
            NodeRef::True => Some(true),
            NodeRef::False => Some(false),
            NodeRef::Node(_) => None,
        }
    }

    pub fn level_of(&self, var: VariableId) -> Option<usize> {
        self.levels.iter().position(|l| l.var == var)
    }

    /// Index of a node in message arrays: nodes first, then FALSE, then TRUE.
    #[inline]
    pub fn slot(&self, r: NodeRef) -> usize {
        match r {
            NodeRef::Node(i) => i as usize,
            NodeRef::False => self.nodes.len(),
            NodeRef::True => self.nodes.len() + 1,
        }
    }

    /// Level position of every node; terminals sit at `levels().len()`.
    pub fn node_levels(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut pos = 0;
        for n in &self.nodes {
            while self.levels[pos].var != n.var {
                pos += 1;
            }
            out.push(pos);
        }
        out
    }

    /// Level position of a reference given [`Mdd::node_levels`].
    #[inline]
    pub fn level_at(&self, r: NodeRef, node_levels: &[usize]) -> usize {
        match r {
            NodeRef::Node(i) => node_levels[i as usize],
            _ => self.levels.len(),
        }
    }

    /// Length of message arrays.
    pub fn slots(&self) -> usize {
        self.nodes.len() + 2
    }

    /// Follows the path selected by `x`.
    pub fn eval(&self, x: &DiscreteAssignment) -> bool {
        let mut cur = self.root;
        while let NodeRef::Node(i) = cur {
            let node = &self.nodes[i as usize];
            cur = node.children[x.value(node.var) as usize];
        }
        cur == NodeRef::True
    }

    /// Merges isomorphic nodes; redundant nodes are kept.
    pub fn reduce(&self) -> Mdd {
        self.rebuild(false)
    }

    /// Merges isomorphic nodes and removes nodes whose children all coincide.
    pub fn eliminate_redundant(&self) -> Mdd {
        self.rebuild(true)
    }

    fn rebuild(&self, eliminate: bool) -> Mdd {
        let mut b = build::Builder::new(self.levels.clone(), usize::MAX);
        let mut map = vec![NodeRef::False; self.nodes.len()];
        let remap = |r: NodeRef, map: &[NodeRef]| match r {
            NodeRef::Node(i) => map[i as usize],
            t => t,
        };
        for i in (0..self.nodes.len()).rev() {
            let node = &self.nodes[i];
            let children = node.children.iter().map(|c| remap(*c, &map)).collect();
            map[i] = if eliminate {
                b.make(node.var, children)
            } else {
                b.make_keep(node.var, children)
            }
            .expect("unbounded builder");
        }
        b.finish(remap(self.root, &map))
    }

    /// Equivalent diagram in which every edge descends exactly one level, so
    /// every root-to-terminal path tests every variable of the order.
    pub fn quasi_reduce(&self) -> Mdd {
        let mut b = build::Builder::new(self.levels.clone(), usize::MAX);
        let mut memo: HashMap<(NodeRef, usize), NodeRef> = HashMap::new();
        let root = self.quasi(self.root, 0, &mut b, &mut memo);
        b.finish(root)
    }

    fn quasi(
        &self,
        r: NodeRef,
        pos: usize,
        b: &mut build::Builder,
        memo: &mut HashMap<(NodeRef, usize), NodeRef>,
    ) -> NodeRef {
        if pos == self.levels.len() {
            debug_assert!(r.is_terminal());
            return r;
        }
        if let Some(&hit) = memo.get(&(r, pos)) {
            return hit;
        }
        let level = self.levels[pos];
        let children = match self.node(r) {
            Some(node) if node.var == level.var => node
                .children
                .iter()
                .map(|c| self.quasi(*c, pos + 1, b, memo))
                .collect(),
            _ => {
                let c = self.quasi(r, pos + 1, b, memo);
                vec![c; level.size as usize]
            }
        };
        let out = b.make_keep(level.var, children).expect("unbounded builder");
        memo.insert((r, pos), out);
        out
    }

    /// True iff every edge descends exactly one level.
    pub fn is_quasi_reduced(&self) -> bool {
        let depth = |r: NodeRef| match self.node(r) {
            Some(n) => self.level_of(n.var).unwrap(),
            None => self.levels.len(),
        };
        if depth(self.root) != 0 {
            return false;
        }
        self.nodes.iter().all(|n| {
            let here = self.level_of(n.var).unwrap();
            n.children.iter().all(|c| depth(*c) == here + 1)
        })
    }

    /// Checks structural invariants: ordered, complete, topologically stored.
    pub fn check(&self) -> Result<()> {
        let mut sizes = HashMap::new();
        for (pos, l) in self.levels.iter().enumerate() {
            if sizes.insert(l.var, (pos, l.size)).is_some() {
                return Err(Error::MddFormat(format!("{} appears twice in the order", l.var)));
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            let Some(&(pos, size)) = sizes.get(&n.var) else {
                return Err(Error::MddFormat(format!("node {i} tests {} outside the order", n.var)));
            };
            if n.children.len() != size as usize {
                return Err(Error::MddFormat(format!("node {i} has {} edges", n.children.len())));
            }
            for c in &n.children {
                if let Some(child) = self.node(*c) {
                    let NodeRef::Node(ci) = c else { unreachable!() };
                    if *ci as usize <= i {
                        return Err(Error::MddFormat(format!("node {i} is not stored before its child {ci}")));
                    }
                    if sizes[&child.var].0 <= pos {
                        return Err(Error::MddFormat(format!("edge from node {i} violates the order")));
                    }
                } else if let NodeRef::Node(ci) = c {
                    return Err(Error::MddFormat(format!("dangling child {ci}")));
                }
            }
        }
        Ok(())
    }
}

/// Renumbers the nodes reachable from `root` into canonical order.
pub(crate) fn canonicalize(levels: Vec<Level>, raw: &[MddNode], root: NodeRef) -> Mdd {
    let pos: HashMap<VariableId, usize> =
        levels.iter().enumerate().map(|(i, l)| (l.var, i)).collect();
    let mut discovered: Vec<u32> = Vec::new();
    let mut seen = vec![false; raw.len()];
    let mut queue = VecDeque::new();
    if let NodeRef::Node(i) = root {
        seen[i as usize] = true;
        queue.push_back(i);
    }
    while let Some(i) = queue.pop_front() {
        discovered.push(i);
        for c in &raw[i as usize].children {
            if let NodeRef::Node(ci) = *c {
                if !seen[ci as usize] {
                    seen[ci as usize] = true;
                    queue.push_back(ci);
                }
            }
        }
    }
    // stable sort keeps discovery order within a level
    discovered.sort_by_key(|&i| pos[&raw[i as usize].var]);
    let mut new_index = vec![u32::MAX; raw.len()];
    for (new, &old) in discovered.iter().enumerate() {
        new_index[old as usize] = new as u32;
    }
    let remap = |r: NodeRef| match r {
        NodeRef::Node(i) => NodeRef::Node(new_index[i as usize]),
        t => t,
    };
    let nodes = discovered
        .iter()
        .map(|&old| {
            let n = &raw[old as usize];
            MddNode {
                var: n.var,
                children: n.children.iter().map(|c| remap(*c)).collect(),
            }
        })
        .collect();
    Mdd {
        levels,
        nodes,
        root: remap(root),
    }
}
