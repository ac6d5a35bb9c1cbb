//! Graph coloring with parity side constraints.
//!
//! A random `2C`-regular graph on `|V|` vertices must be properly colored
//! with `C` colors (hard, weight `|H|`), and `|H| = |V|` soft constraints
//! each ask the color sum over a random half of the vertices to be odd
//! (weight 1).

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Constraint, Instance, ObjectiveMode, StructuredKind, VariableId, VariableTable};

pub const NODE_GRID: [u32; 4] = [512, 1024, 2048, 4096];
pub const COLOR_GRID: [u32; 4] = [8, 16, 32, 64];

const MAX_GRAPH_ATTEMPTS: usize = 100;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct ColoringSpec {
    pub nodes: u32,
    pub colors: u32,
    pub seed: u64,
}

impl ColoringSpec {
    pub fn degree(&self) -> u32 {
        2 * self.colors
    }

    pub fn validate(&self) -> Result<()> {
        if self.colors < 2 {
            return Err(Error::Config("at least 2 colors are needed".into()));
        }
        if self.degree() >= self.nodes {
            return Err(Error::Config(format!(
                "degree {} must be below the node count {}",
                self.degree(),
                self.nodes
            )));
        }
        if !(self.nodes as u64 * self.degree() as u64).is_multiple_of(2) {
            return Err(Error::Config("nodes * degree must be even".into()));
        }
        Ok(())
    }
}

/// Uniform-ish random `d`-regular simple graph by incremental pairing of
/// vertex stubs, rejecting loops and repeated edges as they arise and
/// restarting when no valid pair remains.
pub fn random_regular_graph(n: usize, d: usize, rng: &mut impl Rng) -> Result<Vec<(usize, usize)>> {
    if d >= n || !(n * d).is_multiple_of(2) {
        return Err(Error::Generation(format!("no {d}-regular graph on {n} vertices")));
    }
    'attempt: for _ in 0..MAX_GRAPH_ATTEMPTS {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        let mut edges = HashSet::with_capacity(n * d / 2);
        let mut out = Vec::with_capacity(n * d / 2);
        while !stubs.is_empty() {
            let mut paired = false;
            for _ in 0..(50 + 4 * stubs.len()) {
                let i = rng.gen_range(0..stubs.len());
                let j = rng.gen_range(0..stubs.len());
                let (a, b) = (stubs[i], stubs[j]);
                if a == b || edges.contains(&(a.min(b), a.max(b))) {
                    continue;
                }
                edges.insert((a.min(b), a.max(b)));
                out.push((a.min(b), a.max(b)));
                let (hi, lo) = (i.max(j), i.min(j));
                stubs.swap_remove(hi);
                stubs.swap_remove(lo);
                paired = true;
                break;
            }
            if !paired {
                continue 'attempt;
            }
        }
        out.sort_unstable();
        return Ok(out);
    }
    Err(Error::Generation(format!(
        "failed to sample a {d}-regular graph on {n} vertices"
    )))
}

pub struct Coloring {
    pub instance: Instance,
    pub edges: Vec<(usize, usize)>,
}

pub fn gen_coloring(spec: &ColoringSpec) -> Result<Coloring> {
    spec.validate()?;
    let n = spec.nodes as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let edges = random_regular_graph(n, spec.degree() as usize, &mut rng)?;
    let hashes = n;
    let mut vars = VariableTable::new();
    for v in 0..n {
        vars.add(format!("x{}", v + 1), spec.colors)?;
    }
    let mut constraints = Vec::with_capacity(edges.len() + hashes);
    for &(u, v) in &edges {
        constraints.push(
            Constraint::structured(StructuredKind::NotEqual {
                u: VariableId::from_row(u),
                v: VariableId::from_row(v),
            })
            .with_weight(hashes as f64),
        );
    }
    for _ in 0..hashes {
        let mut scope: Vec<usize> = sample(&mut rng, n, n / 2).into_vec();
        scope.sort_unstable();
        constraints.push(
            Constraint::structured(StructuredKind::ParityOfSum {
                vars: scope.into_iter().map(VariableId::from_row).collect(),
            })
            .soft(),
        );
    }
    let instance = Instance::new(vars, constraints, ObjectiveMode::MinViolations)?;
    Ok(Coloring { instance, edges })
}
