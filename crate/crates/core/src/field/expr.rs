//! Scalar expressions over chart coordinates.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)*
//! exponent:= ['+' | '-'] INT | '(' ['+' | '-'] INT ')'
//! primary := NUMBER | coord | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Coordinates are `x1..xn` or any name declared for the chart. Functions are
//! `exp`, `log`, `sin`, `cos`, `sqrt`.

use std::fmt;

use super::dual::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }
}

/// Parsed scalar expression. `Coord(l)` is the zero-based coordinate `x_{l+1}`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    Const(f64),
    Coord(usize),
    Neg(Box<ScalarExpr>),
    Binary(BinOp, Box<ScalarExpr>, Box<ScalarExpr>),
    Pow(Box<ScalarExpr>, i32),
    Call(Func, Box<ScalarExpr>),
}

impl ScalarExpr {
    /// Largest coordinate index referenced, if any.
    pub fn max_coord(&self) -> Option<usize> {
        match self {
            ScalarExpr::Const(_) => None,
            ScalarExpr::Coord(l) => Some(*l),
            ScalarExpr::Neg(e) | ScalarExpr::Pow(e, _) | ScalarExpr::Call(_, e) => e.max_coord(),
            ScalarExpr::Binary(_, a, b) => match (a.max_coord(), b.max_coord()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    pub fn is_constant(&self) -> bool {
        self.max_coord().is_none()
    }

    /// Evaluates on any [`Scalar`]. Domain violations are reported as messages;
    /// callers attach the component and point.
    pub fn eval<S: Scalar>(&self, x: &[S]) -> std::result::Result<S, String> {
        let v = match self {
            ScalarExpr::Const(c) => S::constant(*c),
            ScalarExpr::Coord(l) => *x
                .get(*l)
                .ok_or_else(|| format!("coordinate x{} not supplied", l + 1))?,
            ScalarExpr::Neg(e) => -e.eval(x)?,
            ScalarExpr::Binary(op, a, b) => {
                let a = a.eval(x)?;
                let b = b.eval(x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.re() == 0.0 {
                            return Err("division by zero".into());
                        }
                        a / b
                    }
                }
            }
            ScalarExpr::Pow(e, k) => {
                let b = e.eval(x)?;
                if *k < 0 && b.re() == 0.0 {
                    return Err("zero raised to a negative power".into());
                }
                b.powi(*k)
            }
            ScalarExpr::Call(f, e) => {
                let a = e.eval(x)?;
                match f {
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if !(a.re() > 0.0) {
                            return Err(format!("log of nonpositive value {}", a.re()));
                        }
                        a.ln()
                    }
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sqrt => {
                        if !(a.re() >= 0.0) {
                            return Err(format!("sqrt of negative value {}", a.re()));
                        }
                        a.sqrt()
                    }
                }
            }
        };
        if !v.is_finite() {
            return Err("non-finite result".into());
        }
        Ok(v)
    }
}

impl fmt::Display for ScalarExpr {
    /// Fully parenthesized; parses back to an equivalent tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarExpr::Const(c) if *c < 0.0 => write!(f, "(-{:?})", -c),
            ScalarExpr::Const(c) => write!(f, "{c:?}"),
            ScalarExpr::Coord(l) => write!(f, "x{}", l + 1),
            ScalarExpr::Neg(e) => write!(f, "(-{e})"),
            ScalarExpr::Binary(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({a} {s} {b})")
            }
            ScalarExpr::Pow(e, k) => write!(f, "({e}^({k}))"),
            ScalarExpr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v, _) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push((Tok::Plus, start)),
            b'-' => out.push((Tok::Minus, start)),
            b'*' => out.push((Tok::Star, start)),
            b'/' => out.push((Tok::Slash, start)),
            b'^' => out.push((Tok::Caret, start)),
            b'(' => out.push((Tok::LParen, start)),
            b')' => out.push((Tok::RParen, start)),
            b'0'..=b'9' | b'.' => {
                let mut integral = true;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    integral &= bytes[i] != b'.';
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        integral = false;
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push((Tok::Num(v, integral), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    dim: usize,
    names: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T> {
        Err(Error::Syntax {
            offset: self.offset(),
            message: format!("expected {wanted}, found {}", self.peek().describe()),
        })
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.unexpected(wanted)
        }
    }

    fn expr(&mut self) -> Result<ScalarExpr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = ScalarExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<ScalarExpr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = ScalarExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<ScalarExpr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(ScalarExpr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ScalarExpr> {
        let mut base = self.primary()?;
        while *self.peek() == Tok::Caret {
            self.bump();
            let k = self.exponent()?;
            base = ScalarExpr::Pow(Box::new(base), k);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32> {
        let parens = *self.peek() == Tok::LParen;
        if parens {
            self.bump();
        }
        let sign = match self.peek() {
            Tok::Minus => {
                self.bump();
                -1
            }
            Tok::Plus => {
                self.bump();
                1
            }
            _ => 1,
        };
        let k = match self.peek() {
            Tok::Num(v, true) if *v <= i32::MAX as f64 => *v as i32,
            _ => return self.unexpected("an integer exponent"),
        };
        self.bump();
        if parens {
            self.expect(Tok::RParen, "`)`")?;
        }
        Ok(sign * k)
    }

    fn primary(&mut self) -> Result<ScalarExpr> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(v, _) => Ok(ScalarExpr::Const(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(ScalarExpr::Call(f, Box::new(arg)));
                }
                self.coordinate(name, at)
            }
            other => Err(Error::Syntax {
                offset: at,
                message: format!("expected an operand, found {}", other.describe()),
            }),
        }
    }

    fn coordinate(&self, name: String, offset: usize) -> Result<ScalarExpr> {
        if let Some(l) = self.names.iter().position(|n| *n == name) {
            return Ok(ScalarExpr::Coord(l));
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                return match digits.parse::<usize>() {
                    Ok(l) if l >= 1 && l <= self.dim => Ok(ScalarExpr::Coord(l - 1)),
                    _ => Err(Error::CoordinateOutOfRange {
                        name,
                        offset,
                        dim: self.dim,
                    }),
                };
            }
        }
        Err(Error::UnknownIdentifier { name, offset })
    }
}

/// Parses an expression over the coordinates `x1..x{dim}`.
pub fn parse_expr(src: &str, dim: usize) -> Result<ScalarExpr> {
    parse_expr_with_names(src, dim, &[])
}

/// Parses an expression; `names[l]` is an extra alias for coordinate `x{l+1}`.
pub fn parse_expr_with_names(src: &str, dim: usize, names: &[String]) -> Result<ScalarExpr> {
    if src.trim().is_empty() {
        return Err(Error::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        dim,
        names,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.unexpected("an operator or end of input");
    }
    Ok(e)
}
