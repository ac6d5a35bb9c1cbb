use std::fmt;

use super::{DiscreteAssignment, VariableId, VariableTable};

/// Binary operators of the constraint language.
///
/// Values are non-negative integers. `&`, `|` and `^` are bitwise, comparisons
/// yield `0`/`1`, `+` is integer addition and `%` is the remainder by a
/// literal divisor. A constraint holds iff its expression is non-zero.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Or,
    Xor,
    And,
    Eq,
    Ne,
    Lt,
    Gt,
    Add,
    Mod,
}

impl BinOp {
    /// Binding strength; larger binds tighter. Unary `!` binds tighter than all.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::Xor => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Gt => 4,
            BinOp::Add => 5,
            BinOp::Mod => 6,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "|",
            BinOp::Xor => "^",
            BinOp::And => "&",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Add => "+",
            BinOp::Mod => "%",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Gt)
    }

    #[inline]
    pub fn apply(self, a: i64, b: i64) -> i64 {
        match self {
            BinOp::Or => a | b,
            BinOp::Xor => a ^ b,
            BinOp::And => a & b,
            BinOp::Eq => (a == b) as i64,
            BinOp::Ne => (a != b) as i64,
            BinOp::Lt => (a < b) as i64,
            BinOp::Gt => (a > b) as i64,
            BinOp::Add => a.wrapping_add(b),
            BinOp::Mod => {
                if b == 0 {
                    0
                } else {
                    a.rem_euclid(b)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(i64),
    Var(VariableId),
    Not(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn negate(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn eval(&self, x: &DiscreteAssignment) -> i64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => x.value(*v) as i64,
            Expr::Not(e) => (e.eval(x) == 0) as i64,
            Expr::Binary { op, lhs, rhs } => op.apply(lhs.eval(x), rhs.eval(x)),
        }
    }

    /// Variables in order of first occurrence (left to right), deduplicated.
    pub fn variables(&self) -> Vec<VariableId> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<VariableId>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Expr::Not(e) => e.collect_vars(out),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
        }
    }

    pub fn mentions(&self, var: VariableId) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Not(e) => e.mentions(var),
            Expr::Binary { lhs, rhs, .. } => lhs.mentions(var) || rhs.mentions(var),
        }
    }

    pub fn as_const(&self) -> Option<i64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Substitutes `var := value` and folds constants. The result is the
    /// residual function used as a memo key during MDD compilation, so equal
    /// residual functions should fold to equal trees as often as possible.
    pub fn assign(&self, var: VariableId, value: i64) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(v) if *v == var => Expr::Const(value),
            Expr::Var(v) => Expr::Var(*v),
            Expr::Not(e) => match e.assign(var, value) {
                Expr::Const(c) => Expr::Const((c == 0) as i64),
                other => Expr::negate(other),
            },
            Expr::Binary { op, lhs, rhs } => {
                if !self.mentions(var) {
                    return self.clone();
                }
                fold(*op, lhs.assign(var, value), rhs.assign(var, value))
            }
        }
    }

    /// Renders with the instance's variable names.
    pub fn display_with<'a>(&'a self, vars: &'a VariableTable) -> impl fmt::Display + 'a {
        Named { expr: self, vars: Some(vars) }
    }
}

fn fold(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    match (lhs.as_const(), rhs.as_const()) {
        (Some(a), Some(b)) => return Expr::Const(op.apply(a, b)),
        // every value is non-negative, so 0 absorbs bitwise and
        (Some(0), _) | (_, Some(0)) if op == BinOp::And => return Expr::Const(0),
        (_, Some(m)) if op == BinOp::Mod && m > 0 => {
            return Expr::binary(op, reduce_sum_constant(lhs, m), rhs);
        }
        _ => {}
    }
    Expr::binary(op, lhs, rhs)
}

/// Within `(c + rest) % m`, replaces the leading constant `c` by `c mod m`.
/// Substitution in variable order folds prefixes of a left-associated sum
/// into its leftmost leaf.
fn reduce_sum_constant(e: Expr, m: i64) -> Expr {
    match e {
        Expr::Binary {
            op: BinOp::Add,
            lhs,
            rhs,
        } => {
            let lhs = match *lhs {
                Expr::Const(c) => Expr::Const(c.rem_euclid(m)),
                other => reduce_sum_constant(other, m),
            };
            Expr::binary(BinOp::Add, lhs, *rhs)
        }
        other => other,
    }
}

struct Named<'a> {
    expr: &'a Expr,
    vars: Option<&'a VariableTable>,
}

impl Named<'_> {
    fn write(&self, e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match e {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => match self.vars.and_then(|t| t.get(*v)) {
                Some(var) => f.write_str(&var.name),
                None => write!(f, "{v}"),
            },
            Expr::Not(inner) => {
                f.write_str("!")?;
                self.write_operand(inner, u8::MAX, f)
            }
            Expr::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                self.write_operand(lhs, p, f)?;
                write!(f, " {} ", op.symbol())?;
                // left associative: an equal-precedence right operand needs parentheses
                self.write_operand(rhs, p + 1, f)
            }
        }
    }

    fn write_operand(&self, e: &Expr, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let needs_parens = match e {
            Expr::Binary { op, .. } => op.precedence() < min_prec,
            _ => false,
        };
        if needs_parens {
            f.write_str("(")?;
            self.write(e, f)?;
            f.write_str(")")
        } else {
            self.write(e, f)
        }
    }
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.expr, f)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Named { expr: self, vars: None }.fmt(f)
    }
}
