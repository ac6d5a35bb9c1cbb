//! CSP data model: variables, constraints, instances and exact discrete
//! semantics.

mod expr;
pub mod format;
pub mod oracle;
mod parser;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use expr::{BinOp, Expr};
pub use parser::parse_expression;

/// 1-based variable index. `0` is reserved for padding rows in edge tables.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VariableId(u32);

impl VariableId {
    pub fn new(index: u32) -> Option<Self> {
        (index >= 1).then_some(Self(index))
    }

    #[inline]
    pub fn index(self) -> u32 {
        self.0
    }

    /// Row of this variable in a [`crate::RowMatrix`].
    #[inline]
    pub fn row(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn from_row(row: usize) -> Self {
        Self(row as u32 + 1)
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Finite domain `{0, .., size-1}`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Domain(u32);

impl Domain {
    pub fn new(size: u32) -> Result<Self> {
        if size < 2 {
            return Err(Error::Instance(format!("domain size {size} is below 2")));
        }
        Ok(Self(size))
    }

    #[inline]
    pub fn size(self) -> u32 {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub domain: Domain,
}

/// Named variables with a name index.
#[derive(Clone, Debug, Default)]
pub struct VariableTable {
    vars: Vec<Variable>,
    by_name: HashMap<String, VariableId>,
}

impl VariableTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, size: u32) -> Result<VariableId> {
        let name = name.into();
        if !is_identifier(&name) {
            return Err(Error::Instance(format!("`{name}` is not a valid variable name")));
        }
        if self.by_name.contains_key(&name) {
            return Err(Error::Instance(format!("variable `{name}` declared twice")));
        }
        let domain = Domain::new(size)?;
        let id = VariableId::from_row(self.vars.len());
        self.by_name.insert(name.clone(), id);
        self.vars.push(Variable { name, domain });
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<VariableId> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, id: VariableId) -> Option<&Variable> {
        self.vars.get(id.row())
    }

    pub fn name(&self, id: VariableId) -> &str {
        &self.vars[id.row()].name
    }

    pub fn domain(&self, id: VariableId) -> Domain {
        self.vars[id.row()].domain
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VariableId, &Variable)> {
        self.vars
            .iter()
            .enumerate()
            .map(|(i, v)| (VariableId::from_row(i), v))
    }

    /// Domain sizes in row order; the shape of every point and gradient.
    pub fn shape(&self) -> Vec<usize> {
        self.vars.iter().map(|v| v.domain.size() as usize).collect()
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Constraint families with closed-form circuit-output probabilities.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StructuredKind {
    /// `u < v`.
    LessThan { u: VariableId, v: VariableId },
    /// `(t_u != t_v) | (s_u != s_v)`.
    NeqPairDisjunction {
        t_u: VariableId,
        t_v: VariableId,
        s_u: VariableId,
        s_v: VariableId,
    },
    /// `u != v`.
    NotEqual { u: VariableId, v: VariableId },
    /// `sum(vars) mod 2 = 1`.
    ParityOfSum { vars: Vec<VariableId> },
}

impl StructuredKind {
    pub fn variables(&self) -> Vec<VariableId> {
        match self {
            StructuredKind::LessThan { u, v } | StructuredKind::NotEqual { u, v } => vec![*u, *v],
            StructuredKind::NeqPairDisjunction { t_u, t_v, s_u, s_v } => {
                vec![*t_u, *t_v, *s_u, *s_v]
            }
            StructuredKind::ParityOfSum { vars } => vars.clone(),
        }
    }

    pub fn is_satisfied(&self, assignment: &DiscreteAssignment) -> bool {
        let val = |v: &VariableId| assignment.value(*v);
        match self {
            StructuredKind::LessThan { u, v } => val(u) < val(v),
            StructuredKind::NeqPairDisjunction { t_u, t_v, s_u, s_v } => {
                val(t_u) != val(t_v) || val(s_u) != val(s_v)
            }
            StructuredKind::NotEqual { u, v } => val(u) != val(v),
            StructuredKind::ParityOfSum { vars } => {
                vars.iter().map(|v| val(v) as u64).sum::<u64>() % 2 == 1
            }
        }
    }

    /// The same constraint written in the expression language.
    pub fn to_expr(&self) -> Expr {
        let var = |v: &VariableId| Expr::Var(*v);
        match self {
            StructuredKind::LessThan { u, v } => Expr::binary(BinOp::Lt, var(u), var(v)),
            StructuredKind::NotEqual { u, v } => Expr::binary(BinOp::Ne, var(u), var(v)),
            StructuredKind::NeqPairDisjunction { t_u, t_v, s_u, s_v } => Expr::binary(
                BinOp::Or,
                Expr::binary(BinOp::Ne, var(t_u), var(t_v)),
                Expr::binary(BinOp::Ne, var(s_u), var(s_v)),
            ),
            StructuredKind::ParityOfSum { vars } => {
                let sum = vars
                    .iter()
                    .map(var)
                    .reduce(|acc, e| Expr::binary(BinOp::Add, acc, e))
                    .expect("parity scope is non-empty");
                Expr::binary(BinOp::Mod, sum, Expr::Const(2))
            }
        }
    }

    fn validate(&self, vars: &VariableTable) -> Result<()> {
        let scope = self.variables();
        if scope.is_empty() {
            return Err(Error::Instance("structured constraint with empty scope".into()));
        }
        for v in &scope {
            if vars.get(*v).is_none() {
                return Err(Error::Instance(format!("unknown variable {v}")));
            }
        }
        let mut sorted = scope.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != scope.len() {
            // The closed forms assume independent rows.
            return Err(Error::Instance(format!(
                "structured constraint repeats a variable: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConstraintBody {
    Expr(Expr),
    Structured(StructuredKind),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub body: ConstraintBody,
    pub weight: f64,
    pub soft: bool,
}

impl Constraint {
    pub fn hard(body: ConstraintBody) -> Self {
        Self {
            body,
            weight: 1.0,
            soft: false,
        }
    }

    pub fn expr(expr: Expr) -> Self {
        Self::hard(ConstraintBody::Expr(expr))
    }

    pub fn structured(kind: StructuredKind) -> Self {
        Self::hard(ConstraintBody::Structured(kind))
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn soft(mut self) -> Self {
        self.soft = true;
        self
    }

    /// Atom set, sorted and deduplicated.
    pub fn variables(&self) -> Vec<VariableId> {
        let mut vars = match &self.body {
            ConstraintBody::Expr(e) => e.variables(),
            ConstraintBody::Structured(k) => k.variables(),
        };
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    /// Exact discrete truth value.
    pub fn is_satisfied(&self, assignment: &DiscreteAssignment) -> bool {
        match &self.body {
            ConstraintBody::Expr(e) => e.eval(assignment) != 0,
            ConstraintBody::Structured(k) => k.is_satisfied(assignment),
        }
    }

    /// Expression form of the body (structured kinds are expanded).
    pub fn to_expr(&self) -> Expr {
        match &self.body {
            ConstraintBody::Expr(e) => e.clone(),
            ConstraintBody::Structured(k) => k.to_expr(),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveMode {
    Satisfy,
    MinViolations,
}

#[derive(Clone, Debug)]
pub struct Instance {
    vars: VariableTable,
    constraints: Vec<Constraint>,
    objective: ObjectiveMode,
}

impl Instance {
    pub fn new(
        vars: VariableTable,
        constraints: Vec<Constraint>,
        objective: ObjectiveMode,
    ) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::Instance("no variables".into()));
        }
        if constraints.is_empty() {
            return Err(Error::Instance("no constraints".into()));
        }
        for (i, c) in constraints.iter().enumerate() {
            if !(c.weight.is_finite() && c.weight > 0.0) {
                return Err(Error::Instance(format!(
                    "constraint {} has non-positive weight {}",
                    i + 1,
                    c.weight
                )));
            }
            match &c.body {
                ConstraintBody::Expr(e) => {
                    for v in e.variables() {
                        if vars.get(v).is_none() {
                            return Err(Error::Instance(format!("unknown variable {v}")));
                        }
                    }
                }
                ConstraintBody::Structured(k) => k.validate(&vars)?,
            }
        }
        Ok(Self {
            vars,
            constraints,
            objective,
        })
    }

    pub fn variables(&self) -> &VariableTable {
        &self.vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> ObjectiveMode {
        self.objective
    }

    pub fn num_variables(&self) -> usize {
        self.vars.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.vars.shape()
    }

    /// `N`: total number of probability entries.
    pub fn total_domain_size(&self) -> usize {
        self.shape().iter().sum()
    }

    pub fn parse_expression(&self, text: &str) -> Result<Expr> {
        parse_expression(text, &self.vars)
    }

    pub fn hard_count(&self) -> usize {
        self.constraints.iter().filter(|c| !c.soft).count()
    }

    /// Exact discrete scoring; independent of any probability machinery.
    pub fn verify(&self, assignment: &DiscreteAssignment) -> Result<Verification> {
        assignment.check_shape(self)?;
        let mut v = Verification::default();
        for c in &self.constraints {
            let ok = c.is_satisfied(assignment);
            if c.soft {
                v.soft_total += 1;
                if ok {
                    v.soft_satisfied += 1;
                } else {
                    v.soft_cost += c.weight;
                }
            } else {
                v.hard_total += 1;
                if ok {
                    v.hard_satisfied += 1;
                } else {
                    v.hard_cost += c.weight;
                }
            }
        }
        Ok(v)
    }
}

/// Outcome of exact discrete scoring.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub hard_satisfied: usize,
    pub hard_total: usize,
    /// Weighted cost of violated hard constraints.
    pub hard_cost: f64,
    pub soft_satisfied: usize,
    pub soft_total: usize,
    /// Weighted cost of violated soft constraints.
    pub soft_cost: f64,
}

impl Verification {
    pub fn all_hard_satisfied(&self) -> bool {
        self.hard_satisfied == self.hard_total
    }

    pub fn all_satisfied(&self) -> bool {
        self.all_hard_satisfied() && self.soft_satisfied == self.soft_total
    }

    pub fn hard_violations(&self) -> usize {
        self.hard_total - self.hard_satisfied
    }

    /// Lexicographic comparison: fewer hard violations, then lower soft cost.
    pub fn is_better_than(&self, other: &Verification) -> bool {
        match self.hard_satisfied.cmp(&other.hard_satisfied) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => self.soft_cost < other.soft_cost,
        }
    }
}

/// One value per variable, in row order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscreteAssignment(Vec<u32>);

impl DiscreteAssignment {
    pub fn new(values: Vec<u32>) -> Self {
        Self(values)
    }

    #[inline]
    pub fn value(&self, v: VariableId) -> u32 {
        self.0[v.row()]
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_shape(&self, instance: &Instance) -> Result<()> {
        if self.0.len() != instance.num_variables() {
            return Err(Error::Shape(format!(
                "assignment has {} values, instance has {} variables",
                self.0.len(),
                instance.num_variables()
            )));
        }
        for (id, var) in instance.variables().iter() {
            if self.value(id) >= var.domain.size() {
                return Err(Error::Shape(format!(
                    "value {} out of domain for `{}`",
                    self.value(id),
                    var.name
                )));
            }
        }
        Ok(())
    }
}

impl From<Vec<u32>> for DiscreteAssignment {
    fn from(values: Vec<u32>) -> Self {
        Self(values)
    }
}
