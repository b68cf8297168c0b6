//! Arithmetic expressions for realisation probabilities.
//!
//! Grammar (standard precedence, left associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | atom
//! atom   := number | identifier | '(' expr ')'
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ProbExpr {
    Num(f64),
    Param(String),
    Neg(Box<ProbExpr>),
    Bin(Box<ProbExpr>, BinOp, Box<ProbExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

impl ProbExpr {
    pub fn num(value: f64) -> Self {
        ProbExpr::Num(value)
    }

    /// Parses `text`. Error columns are 1-based offsets into `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut parser = Parser {
            chars: text.char_indices().collect(),
            pos: 0,
        };
        let expr = parser.expr()?;
        parser.skip_ws();
        if let Some(&(offset, c)) = parser.chars.get(parser.pos) {
            return Err(parse_error(offset, format!("unexpected '{c}'")));
        }
        Ok(expr)
    }

    pub fn eval(&self, binding: &BTreeMap<String, f64>) -> Result<f64> {
        let value = match self {
            ProbExpr::Num(v) => *v,
            ProbExpr::Param(name) => *binding
                .get(name)
                .ok_or_else(|| Error::MissingParameter(name.clone()))?,
            ProbExpr::Neg(inner) => -inner.eval(binding)?,
            ProbExpr::Bin(lhs, op, rhs) => {
                let (l, r) = (lhs.eval(binding)?, rhs.eval(binding)?);
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFinite(self.to_string()))
        }
    }

    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self {
            ProbExpr::Num(_) => {}
            ProbExpr::Param(name) => {
                out.insert(name.clone());
            }
            ProbExpr::Neg(inner) => inner.collect_params(out),
            ProbExpr::Bin(lhs, _, rhs) => {
                lhs.collect_params(out);
                rhs.collect_params(out);
            }
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8, right: bool) -> fmt::Result {
        match self {
            ProbExpr::Num(v) => write!(f, "{v:?}"),
            ProbExpr::Param(name) => f.write_str(name),
            ProbExpr::Neg(inner) => {
                f.write_str("-")?;
                inner.fmt_prec(f, 3, false)
            }
            ProbExpr::Bin(lhs, op, rhs) => {
                let prec = op.precedence();
                let paren = prec < parent || (right && prec == parent);
                if paren {
                    f.write_str("(")?;
                }
                lhs.fmt_prec(f, prec, false)?;
                write!(f, " {} ", op.symbol())?;
                rhs.fmt_prec(f, prec, true)?;
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for ProbExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0, false)
    }
}

fn parse_error(offset: usize, message: String) -> Error {
    Error::Parse {
        line: 1,
        column: offset + 1,
        message,
    }
}

struct Parser {
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl Parser {
    fn skip_ws(&mut self) {
        while matches!(self.chars.get(self.pos), Some((_, c)) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars
            .get(self.pos)
            .map(|&(o, _)| o)
            .unwrap_or_else(|| self.chars.last().map(|&(o, c)| o + c.len_utf8()).unwrap_or(0))
    }

    fn expr(&mut self) -> Result<ProbExpr> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            let rhs = self.term()?;
            lhs = ProbExpr::Bin(Box::new(lhs), op, Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ProbExpr> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            let rhs = self.unary()?;
            lhs = ProbExpr::Bin(Box::new(lhs), op, Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ProbExpr> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(ProbExpr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<ProbExpr> {
        let offset = self.offset();
        match self.peek() {
            None => Err(parse_error(offset, "unexpected end of expression".into())),
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(parse_error(self.offset(), "expected ')'".into()));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while let Some(&(_, c)) = self.chars.get(self.pos) {
                    let exponent_sign = (c == '-' || c == '+')
                        && self.pos > start
                        && matches!(self.chars[self.pos - 1].1, 'e' | 'E');
                    if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exponent_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let text: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
                text.parse::<f64>()
                    .map(ProbExpr::Num)
                    .map_err(|_| parse_error(offset, format!("invalid number '{text}'")))
            }
            Some(c) if c.is_alphabetic() || c == '_' => {
                let start = self.pos;
                while matches!(self.chars.get(self.pos), Some((_, c)) if c.is_alphanumeric() || *c == '_')
                {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
                Ok(ProbExpr::Param(name))
            }
            Some(c) => Err(parse_error(offset, format!("unexpected '{c}'"))),
        }
    }
}
