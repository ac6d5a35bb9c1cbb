//! Flattened `(vid, nid, eid, cid)` edge tables and the `.mdd` text format.
//!
//! Internal nodes are numbered `1..=K` in canonical order, then FALSE is
//! `K + 1` and TRUE is `K + 2`. Rows are grouped by source node in that order
//! and sorted by edge label, so the source order is topological. Padding rows
//! are `0 0 0 0`. The writer appends a trailer comment
//! `# true=<id> false=<id> levels=<vid>:<size>,...` (plus `root=<id>` for a
//! constant diagram, which has no rows); readers accept files without it.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use super::{canonicalize, Level, Mdd, MddNode, NodeRef};
use crate::error::{Error, Result};
use crate::model::VariableId;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct EdgeRow {
    pub vid: u32,
    pub nid: u32,
    pub eid: u32,
    pub cid: u32,
}

impl EdgeRow {
    pub const PADDING: EdgeRow = EdgeRow {
        vid: 0,
        nid: 0,
        eid: 0,
        cid: 0,
    };

    pub fn is_padding(&self) -> bool {
        self.vid == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeTable {
    pub rows: Vec<EdgeRow>,
    /// Rows before padding.
    pub edge_count: usize,
    pub root: u32,
    pub true_id: u32,
    pub false_id: u32,
    /// Declared variable order, including variables no node tests.
    pub levels: Option<Vec<Level>>,
}

fn fmt_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::MddFormat(format!("line {line}: {msg}"))
}

impl Mdd {
    /// Edge table padded with `(0,0,0,0)` rows to `pad_to` rows (at least the
    /// edge count; pass `0` for no padding).
    pub fn to_edge_table(&self, pad_to: usize) -> Result<EdgeTable> {
        let edges = self.edge_count();
        if pad_to != 0 && pad_to < edges {
            return Err(Error::PadTooSmall {
                rows: edges,
                pad_to,
            });
        }
        let k = self.nodes.len() as u32;
        let id = |r: NodeRef| match r {
            NodeRef::Node(i) => i + 1,
            NodeRef::False => k + 1,
            NodeRef::True => k + 2,
        };
        let mut rows = Vec::with_capacity(pad_to.max(edges));
        for (i, n) in self.nodes.iter().enumerate() {
            for (eid, c) in n.children.iter().enumerate() {
                rows.push(EdgeRow {
                    vid: n.var.index(),
                    nid: i as u32 + 1,
                    eid: eid as u32,
                    cid: id(*c),
                });
            }
        }
        rows.resize(pad_to.max(edges), EdgeRow::PADDING);
        Ok(EdgeTable {
            rows,
            edge_count: edges,
            root: id(self.root),
            true_id: k + 2,
            false_id: k + 1,
            levels: Some(self.levels.clone()),
        })
    }
}

impl EdgeTable {
    pub fn to_text(&self) -> String {
        let mut out = String::from("# vid, nid, eid, cid\n");
        for r in &self.rows {
            writeln!(out, "{} {} {} {}", r.vid, r.nid, r.eid, r.cid).unwrap();
        }
        write!(out, "# true={} false={}", self.true_id, self.false_id).unwrap();
        if self.edge_count == 0 {
            write!(out, " root={}", self.root).unwrap();
        }
        if let Some(levels) = &self.levels {
            let list: Vec<String> = levels.iter().map(|l| format!("{}:{}", l.var.index(), l.size)).collect();
            write!(out, " levels={}", list.join(",")).unwrap();
        }
        out.push('\n');
        out
    }

    /// Parses and validates a table. Without a trailer, the two ids that
    /// occur only as children are the terminals, the smaller being FALSE.
    pub fn parse(text: &str) -> Result<EdgeTable> {
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        let mut trailer: Option<Trailer> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(t) = parse_trailer(comment) {
                    trailer = Some(t.map_err(|m| fmt_err(line_no, m))?);
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let nums: Option<Vec<u32>> = fields.iter().map(|f| f.parse().ok()).collect();
            let Some(nums) = nums.filter(|n| n.len() == 4) else {
                return Err(fmt_err(line_no, format!("malformed row `{line}`")));
            };
            let row = EdgeRow {
                vid: nums[0],
                nid: nums[1],
                eid: nums[2],
                cid: nums[3],
            };
            if row.is_padding() && row != EdgeRow::PADDING {
                return Err(fmt_err(line_no, "padding rows must be all zero"));
            }
            if !row.is_padding() && (row.nid == 0 || row.cid == 0) {
                return Err(fmt_err(line_no, "node ids start at 1"));
            }
            if let Some(prev) = rows.last() {
                if EdgeRow::is_padding(prev) && !row.is_padding() {
                    return Err(fmt_err(line_no, "edge row after padding"));
                }
            }
            rows.push(row);
            lines.push(line_no);
        }
        let edge_count = rows.iter().take_while(|r| !r.is_padding()).count();
        if edge_count == 0 {
            // a constant diagram needs the trailer to name its root
            let Some(Trailer { true_id, false_id, root: Some(root), levels }) = trailer else {
                return Err(Error::MddFormat("no rows".into()));
            };
            if root != true_id && root != false_id {
                return Err(Error::MddFormat(format!("root {root} of an empty table is not a terminal")));
            }
            return Ok(EdgeTable { rows, edge_count, root, true_id, false_id, levels });
        }

        // group rows by source node; groups must be contiguous
        let mut group_of: HashMap<u32, usize> = HashMap::new();
        let mut groups: Vec<(u32, u32, Vec<Option<u32>>)> = Vec::new(); // (nid, vid, children by eid)
        for (r, &line) in rows[..edge_count].iter().zip(&lines) {
            let g = match group_of.get(&r.nid) {
                Some(&g) if g + 1 == groups.len() => g,
                Some(_) => return Err(fmt_err(line, format!("rows of node {} are not contiguous", r.nid))),
                None => {
                    group_of.insert(r.nid, groups.len());
                    groups.push((r.nid, r.vid, Vec::new()));
                    groups.len() - 1
                }
            };
            let (_, vid, children) = &mut groups[g];
            if *vid != r.vid {
                return Err(fmt_err(line, format!("node {} tests two variables", r.nid)));
            }
            let e = r.eid as usize;
            if children.len() <= e {
                children.resize(e + 1, None);
            }
            if children[e].replace(r.cid).is_some() {
                return Err(fmt_err(
                    line,
                    format!("nondeterministic: node {} has two edges labelled {}", r.nid, r.eid),
                ));
            }
        }
        for (nid, _, children) in &groups {
            if let Some(e) = children.iter().position(Option::is_none) {
                return Err(Error::MddFormat(format!("node {nid} has no edge labelled {e}")));
            }
        }

        let sinks: Vec<u32> = {
            let mut s: Vec<u32> = rows[..edge_count]
                .iter()
                .map(|r| r.cid)
                .filter(|c| !group_of.contains_key(c))
                .collect::<HashSet<_>>()
                .into_iter()
                .collect();
            s.sort_unstable();
            s
        };
        let declared = trailer.as_ref().and_then(|t| t.levels.clone());
        let (true_id, false_id) = match trailer.map(|t| (t.true_id, t.false_id)) {
            Some((t, f)) => {
                if t == f || group_of.contains_key(&t) || group_of.contains_key(&f) {
                    return Err(Error::MddFormat("trailer terminals clash with node ids".into()));
                }
                if let Some(d) = sinks.iter().find(|s| **s != t && **s != f) {
                    return Err(Error::MddFormat(format!("dangling child id {d}")));
                }
                (t, f)
            }
            None => match sinks[..] {
                [f, t] => (t, f),
                [_] => {
                    return Err(Error::MddFormat(
                        "only one terminal is referenced and no `# true= false=` trailer is given".into(),
                    ))
                }
                _ => {
                    return Err(Error::MddFormat(format!(
                        "dangling child ids among {sinks:?}"
                    )))
                }
            },
        };

        // children must belong to later groups; otherwise report a cycle or an order violation
        for (g, (nid, _, children)) in groups.iter().enumerate() {
            for c in children.iter().flatten() {
                if let Some(&cg) = group_of.get(c) {
                    if cg <= g {
                        let cyclic = reaches(&groups, &group_of, cg, g);
                        return Err(Error::MddFormat(if cyclic {
                            format!("cyclic structure through node {nid}")
                        } else {
                            format!("rows are not in topological order: node {c} precedes its parent {nid}")
                        }));
                    }
                }
            }
        }
        // everything reachable from the root (first group)
        let mut seen = vec![false; groups.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(g) = stack.pop() {
            for c in groups[g].2.iter().flatten() {
                if let Some(&cg) = group_of.get(c) {
                    if !seen[cg] {
                        seen[cg] = true;
                        stack.push(cg);
                    }
                }
            }
        }
        if let Some(g) = seen.iter().position(|s| !s) {
            return Err(Error::MddFormat(format!("node {} is unreachable from the root", groups[g].0)));
        }

        let table = EdgeTable {
            root: groups[0].0,
            rows,
            edge_count,
            true_id,
            false_id,
            levels: declared,
        };
        table.variable_order()?;
        Ok(table)
    }

    /// Declared variable order if present, checked against the edges;
    /// otherwise the order the edges imply. Fails if two paths disagree.
    fn variable_order(&self) -> Result<Vec<Level>> {
        let implied = self.implied_order()?;
        let Some(declared) = &self.levels else {
            return Ok(implied);
        };
        let mut it = declared.iter();
        for l in &implied {
            if !it.any(|d| d == l) {
                return Err(Error::MddFormat(format!(
                    "variable {} with {} edges does not fit the declared levels",
                    l.var.index(),
                    l.size
                )));
            }
        }
        Ok(declared.clone())
    }

    fn implied_order(&self) -> Result<Vec<Level>> {
        let mut node_var: HashMap<u32, (u32, u32)> = HashMap::new();
        for r in self.edges() {
            let e = node_var.entry(r.nid).or_insert((r.vid, 0));
            e.1 = e.1.max(r.eid + 1);
        }
        // precedence graph over variables, in first-appearance order
        let mut vars: Vec<u32> = Vec::new();
        let mut size: HashMap<u32, u32> = HashMap::new();
        for r in self.edges() {
            let s = node_var[&r.nid].1;
            match size.get(&r.vid) {
                None => {
                    vars.push(r.vid);
                    size.insert(r.vid, s);
                }
                Some(&old) if old != s => {
                    return Err(Error::MddFormat(format!(
                        "variable {} has {old} and {s} edges at different nodes",
                        r.vid
                    )))
                }
                _ => {}
            }
        }
        let mut succ: HashMap<u32, HashSet<u32>> = HashMap::new();
        let mut indeg: HashMap<u32, usize> = vars.iter().map(|v| (*v, 0)).collect();
        for r in self.edges() {
            if let Some(&(cv, _)) = node_var.get(&r.cid) {
                if cv == r.vid {
                    return Err(Error::MddFormat(format!(
                        "variable {} is tested twice on one path",
                        r.vid
                    )));
                }
                if succ.entry(r.vid).or_default().insert(cv) {
                    *indeg.get_mut(&cv).unwrap() += 1;
                }
            }
        }
        let mut order = Vec::with_capacity(vars.len());
        let mut done = HashSet::new();
        while order.len() < vars.len() {
            let Some(&v) = vars.iter().find(|v| !done.contains(*v) && indeg[*v] == 0) else {
                return Err(Error::MddFormat("edges do not respect a single variable order".into()));
            };
            done.insert(v);
            for s in succ.get(&v).into_iter().flatten() {
                *indeg.get_mut(s).unwrap() -= 1;
            }
            order.push(Level {
                var: VariableId::new(v).unwrap(),
                size: size[&v],
            });
        }
        Ok(order)
    }

    pub fn edges(&self) -> &[EdgeRow] {
        &self.rows[..self.edge_count]
    }

    /// Converts to a diagram; node ids are renumbered canonically.
    pub fn to_mdd(&self) -> Result<Mdd> {
        let levels = self.variable_order()?;
        let mut index: HashMap<u32, u32> = HashMap::new();
        let mut raw: Vec<MddNode> = Vec::new();
        for r in self.edges() {
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry(r.nid) {
                e.insert(raw.len() as u32);
                raw.push(MddNode {
                    var: VariableId::new(r.vid).unwrap(),
                    children: Vec::new(),
                });
            }
        }
        let resolve = |id: u32| -> NodeRef {
            if id == self.true_id {
                NodeRef::True
            } else if id == self.false_id {
                NodeRef::False
            } else {
                NodeRef::Node(index[&id])
            }
        };
        for r in self.edges() {
            let node = &mut raw[index[&r.nid] as usize];
            let e = r.eid as usize;
            if node.children.len() <= e {
                node.children.resize(e + 1, NodeRef::False);
            }
            node.children[e] = resolve(r.cid);
        }
        Ok(canonicalize(levels, &raw, resolve(self.root)))
    }
}

struct Trailer {
    true_id: u32,
    false_id: u32,
    root: Option<u32>,
    levels: Option<Vec<Level>>,
}

fn parse_levels(value: &str) -> Option<Vec<Level>> {
    if value.is_empty() {
        return Some(Vec::new());
    }
    value
        .split(',')
        .map(|item| {
            let (v, size) = item.split_once(':')?;
            let var = VariableId::new(v.parse().ok()?)?;
            let size: u32 = size.parse().ok()?;
            (size >= 1).then_some(Level { var, size })
        })
        .collect()
}

fn parse_trailer(comment: &str) -> Option<std::result::Result<Trailer, String>> {
    let comment = comment.trim();
    if !comment.starts_with("true=") && !comment.starts_with("false=") {
        return None;
    }
    let malformed = || Some(Err(format!("malformed trailer `{comment}`")));
    let (mut t, mut f, mut root, mut levels) = (None, None, None, None);
    for part in comment.split_whitespace() {
        let Some((key, value)) = part.split_once('=') else {
            return malformed();
        };
        if key == "levels" {
            let Some(l) = parse_levels(value) else {
                return malformed();
            };
            levels = Some(l);
            continue;
        }
        let Ok(value) = value.parse::<u32>() else {
            return malformed();
        };
        match key {
            "true" => t = Some(value),
            "false" => f = Some(value),
            "root" => root = Some(value),
            _ => return Some(Err(format!("unknown trailer key `{key}`"))),
        }
    }
    match (t, f) {
        (Some(true_id), Some(false_id)) => Some(Ok(Trailer {
            true_id,
            false_id,
            root,
            levels,
        })),
        _ => Some(Err("trailer needs both true= and false=".into())),
    }
}

fn reaches(
    groups: &[(u32, u32, Vec<Option<u32>>)],
    group_of: &HashMap<u32, usize>,
    from: usize,
    target: usize,
) -> bool {
    let mut seen = vec![false; groups.len()];
    let mut stack = vec![from];
    while let Some(g) = stack.pop() {
        if g == target {
            return true;
        }
        if std::mem::replace(&mut seen[g], true) {
            continue;
        }
        for c in groups[g].2.iter().flatten() {
            if let Some(&cg) = group_of.get(c) {
                stack.push(cg);
            }
        }
    }
    false
}

pub fn read_mdd_file(path: impl AsRef<Path>) -> Result<Mdd> {
    EdgeTable::parse(&std::fs::read_to_string(path)?)?.to_mdd()
}

/// Writes the edge table of `mdd`, padded to `pad_to` rows (`0` for none).
pub fn write_mdd_file(path: impl AsRef<Path>, mdd: &Mdd, pad_to: usize) -> Result<()> {
    std::fs::write(path, mdd.to_edge_table(pad_to)?.to_text())?;
    Ok(())
}
