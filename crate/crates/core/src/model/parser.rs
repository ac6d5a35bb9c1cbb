//! Precedence-climbing parser for constraint expressions.
//!
//! Precedence, tightest first: `!`, `%`, `+`, comparisons (`< > = !=`), `&`,
//! `^`, `|`. All binary operators are left associative. `==` is accepted as a
//! spelling of `=`.

use super::{BinOp, Expr, VariableTable};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Op(BinOp),
    Bang,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(text: &'a str) -> Result<Vec<(usize, Tok)>> {
        let mut lx = Lexer {
            src: text.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        while let Some(t) = lx.next()? {
            out.push(t);
        }
        Ok(out)
    }

    fn next(&mut self) -> Result<Option<(usize, Tok)>> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok(None);
        };
        let peek = self.src.get(self.pos + 1).copied();
        let (tok, len) = match c {
            b'&' => (Tok::Op(BinOp::And), 1),
            b'|' => (Tok::Op(BinOp::Or), 1),
            b'^' => (Tok::Op(BinOp::Xor), 1),
            b'<' => (Tok::Op(BinOp::Lt), 1),
            b'>' => (Tok::Op(BinOp::Gt), 1),
            b'+' => (Tok::Op(BinOp::Add), 1),
            b'%' => (Tok::Op(BinOp::Mod), 1),
            b'=' if peek == Some(b'=') => (Tok::Op(BinOp::Eq), 2),
            b'=' => (Tok::Op(BinOp::Eq), 1),
            b'!' if peek == Some(b'=') => (Tok::Op(BinOp::Ne), 2),
            b'!' => (Tok::Bang, 1),
            b'(' => (Tok::LParen, 1),
            b')' => (Tok::RParen, 1),
            b'0'..=b'9' => {
                let mut end = self.pos;
                while end < self.src.len() && self.src[end].is_ascii_digit() {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                let value = text.parse::<i64>().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("integer literal `{text}` too large"),
                })?;
                (Tok::Int(value), end - self.pos)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                (Tok::Ident(text.to_string()), end - self.pos)
            }
            _ => {
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("unexpected character `{}`", c as char),
                })
            }
        };
        self.pos += len;
        Ok(Some((start, tok)))
    }
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    idx: usize,
    end: usize,
    vars: &'a VariableTable,
}

/// Parses `text` against the variables of `vars`.
pub fn parse_expression(text: &str, vars: &VariableTable) -> Result<Expr> {
    let mut p = Parser {
        toks: Lexer::tokens(text)?,
        idx: 0,
        end: text.len(),
        vars,
    };
    let e = p.expr(1)?;
    if let Some((off, t)) = p.toks.get(p.idx) {
        return Err(Error::Syntax {
            offset: *off,
            message: format!("unexpected token {t:?}"),
        });
    }
    Ok(e)
}

impl Parser<'_> {
    fn offset(&self) -> usize {
        self.toks.get(self.idx).map_or(self.end, |(o, _)| *o)
    }

    fn peek_op(&self) -> Option<BinOp> {
        match self.toks.get(self.idx) {
            Some((_, Tok::Op(op))) => Some(*op),
            _ => None,
        }
    }

    fn expr(&mut self, min_prec: u8) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let op_offset = self.offset();
            self.idx += 1;
            let rhs = self.expr(prec + 1)?;
            self.check(op, &lhs, &rhs, op_offset)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        let offset = self.offset();
        let Some((_, tok)) = self.toks.get(self.idx).cloned() else {
            return Err(Error::Syntax {
                offset,
                message: "unexpected end of expression".into(),
            });
        };
        self.idx += 1;
        match tok {
            Tok::Bang => Ok(Expr::negate(self.unary()?)),
            Tok::Int(v) => Ok(Expr::Const(v)),
            Tok::Ident(name) => self
                .vars
                .lookup(&name)
                .map(Expr::Var)
                .ok_or(Error::UnknownVariable(name)),
            Tok::LParen => {
                let e = self.expr(1)?;
                match self.toks.get(self.idx) {
                    Some((_, Tok::RParen)) => {
                        self.idx += 1;
                        Ok(e)
                    }
                    _ => Err(Error::Syntax {
                        offset: self.offset(),
                        message: "expected `)`".into(),
                    }),
                }
            }
            other => Err(Error::Syntax {
                offset,
                message: format!("expected operand, found {other:?}"),
            }),
        }
    }

    fn check(&self, op: BinOp, lhs: &Expr, rhs: &Expr, offset: usize) -> Result<()> {
        if op == BinOp::Mod && !matches!(rhs, Expr::Const(m) if *m >= 2) {
            return Err(Error::Syntax {
                offset,
                message: "modulus must be an integer literal >= 2".into(),
            });
        }
        if op.is_comparison() {
            let pair = match (lhs, rhs) {
                (Expr::Var(v), Expr::Const(c)) | (Expr::Const(c), Expr::Var(v)) => Some((*v, *c)),
                _ => None,
            };
            if let Some((v, c)) = pair {
                let size = self.vars.domain(v).size();
                // `x < m` is meaningful, `x = m` never holds
                let limit = match op {
                    BinOp::Lt | BinOp::Gt => size as i64,
                    _ => size as i64 - 1,
                };
                if c > limit {
                    return Err(Error::LiteralOutOfRange {
                        variable: self.vars.name(v).to_string(),
                        value: c,
                        size,
                    });
                }
            }
        }
        Ok(())
    }
}
