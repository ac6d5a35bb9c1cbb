//! Line-oriented instance text format.
//!
//! ```text
//! # comment
//! var x1 3
//! var x2 3
//! objective satisfy
//! con expr x1 < x2
//! con weight=2.5 soft neq x1 x2
//! con lt x1 x2
//! con neq2 t1 t2 s1 s2
//! con parity 3 x1 x2 x3
//! ```
//!
//! Variables must be declared before they are referenced. `objective`
//! defaults to `satisfy`.

use std::fmt::Write as _;
use std::path::Path;

use super::{
    parse_expression, Constraint, ConstraintBody, Instance, ObjectiveMode, StructuredKind,
    VariableId, VariableTable,
};
use crate::error::{Error, Result};

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut vars = VariableTable::new();
    let mut constraints = Vec::new();
    let mut objective = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (keyword, rest) = split_word(line);
        match keyword {
            "var" => {
                let fields: Vec<&str> = rest.split_whitespace().collect();
                let [name, size] = fields[..] else {
                    return Err(err(line_no, "expected `var <name> <domain_size>`"));
                };
                let size: u32 = size
                    .parse()
                    .map_err(|_| err(line_no, format!("invalid domain size `{size}`")))?;
                vars.add(name, size).map_err(|e| err(line_no, e.to_string()))?;
            }
            "objective" => {
                if objective.is_some() {
                    return Err(err(line_no, "objective given twice"));
                }
                objective = Some(match rest.trim() {
                    "satisfy" => ObjectiveMode::Satisfy,
                    "min-violations" => ObjectiveMode::MinViolations,
                    other => {
                        return Err(err(
                            line_no,
                            format!("unknown objective `{other}` (expected satisfy or min-violations)"),
                        ))
                    }
                });
            }
            "con" => constraints.push(parse_constraint(rest, &vars, line_no)?),
            other => return Err(err(line_no, format!("unknown directive `{other}`"))),
        }
    }
    Instance::new(vars, constraints, objective.unwrap_or(ObjectiveMode::Satisfy))
}

fn split_word(s: &str) -> (&str, &str) {
    let s = s.trim_start();
    match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], &s[i..]),
        None => (s, ""),
    }
}

fn parse_constraint(mut rest: &str, vars: &VariableTable, line: usize) -> Result<Constraint> {
    let mut weight = 1.0;
    let mut soft = false;
    loop {
        let (word, tail) = split_word(rest);
        if let Some(w) = word.strip_prefix("weight=") {
            weight = w
                .parse::<f64>()
                .ok()
                .filter(|w| w.is_finite() && *w > 0.0)
                .ok_or_else(|| err(line, format!("invalid weight `{w}`")))?;
        } else if word == "soft" {
            soft = true;
        } else {
            break;
        }
        rest = tail;
    }

    let (kind, args) = split_word(rest);
    let body = if kind == "expr" {
        let expr = parse_expression(args, vars).map_err(|e| err(line, e.to_string()))?;
        ConstraintBody::Expr(expr)
    } else {
        let names: Vec<&str> = args.split_whitespace().collect();
        let ids = |names: &[&str]| -> Result<Vec<VariableId>> {
            names
                .iter()
                .map(|n| {
                    vars.lookup(n)
                        .ok_or_else(|| err(line, format!("unknown variable `{n}`")))
                })
                .collect()
        };
        let arity = |n: usize| -> Result<Vec<VariableId>> {
            if names.len() != n {
                return Err(err(line, format!("`{kind}` takes {n} variables, got {}", names.len())));
            }
            ids(&names)
        };
        let structured = match kind {
            "lt" => {
                let v = arity(2)?;
                StructuredKind::LessThan { u: v[0], v: v[1] }
            }
            "neq" => {
                let v = arity(2)?;
                StructuredKind::NotEqual { u: v[0], v: v[1] }
            }
            "neq2" => {
                let v = arity(4)?;
                StructuredKind::NeqPairDisjunction {
                    t_u: v[0],
                    t_v: v[1],
                    s_u: v[2],
                    s_v: v[3],
                }
            }
            "parity" => {
                let Some((k, scope)) = names.split_first() else {
                    return Err(err(line, "`parity` needs a count and variables"));
                };
                let k: usize = k
                    .parse()
                    .map_err(|_| err(line, format!("invalid parity count `{k}`")))?;
                if k == 0 || k != scope.len() {
                    return Err(err(
                        line,
                        format!("parity count {k} does not match {} variables", scope.len()),
                    ));
                }
                StructuredKind::ParityOfSum { vars: ids(scope)? }
            }
            "" => return Err(err(line, "missing constraint body")),
            other => return Err(err(line, format!("unknown constraint kind `{other}`"))),
        };
        ConstraintBody::Structured(structured)
    };
    Ok(Constraint { body, weight, soft })
}

pub fn write_instance(instance: &Instance) -> String {
    let vars = instance.variables();
    let mut out = String::new();
    for (_, v) in vars.iter() {
        writeln!(out, "var {} {}", v.name, v.domain.size()).unwrap();
    }
    let objective = match instance.objective() {
        ObjectiveMode::Satisfy => "satisfy",
        ObjectiveMode::MinViolations => "min-violations",
    };
    writeln!(out, "objective {objective}").unwrap();
    let name = |v: &VariableId| vars.name(*v);
    for c in instance.constraints() {
        out.push_str("con");
        if c.weight != 1.0 {
            write!(out, " weight={}", c.weight).unwrap();
        }
        if c.soft {
            out.push_str(" soft");
        }
        match &c.body {
            ConstraintBody::Expr(e) => write!(out, " expr {}", e.display_with(vars)).unwrap(),
            ConstraintBody::Structured(k) => match k {
                StructuredKind::LessThan { u, v } => {
                    write!(out, " lt {} {}", name(u), name(v)).unwrap()
                }
                StructuredKind::NotEqual { u, v } => {
                    write!(out, " neq {} {}", name(u), name(v)).unwrap()
                }
                StructuredKind::NeqPairDisjunction { t_u, t_v, s_u, s_v } => write!(
                    out,
                    " neq2 {} {} {} {}",
                    name(t_u),
                    name(t_v),
                    name(s_u),
                    name(s_v)
                )
                .unwrap(),
                StructuredKind::ParityOfSum { vars: scope } => {
                    write!(out, " parity {}", scope.len()).unwrap();
                    for v in scope {
                        write!(out, " {}", name(v)).unwrap();
                    }
                }
            },
        }
        out.push('\n');
    }
    out
}

pub fn read_instance_file(path: impl AsRef<Path>) -> Result<Instance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

pub fn write_instance_file(path: impl AsRef<Path>, instance: &Instance) -> Result<()> {
    std::fs::write(path, write_instance(instance))?;
    Ok(())
}
