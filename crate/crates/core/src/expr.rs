//! Closed-form scalar expressions: parsing, printing, and evaluation over
//! any [`Scalar`] (plain reals or dual numbers through one code path).
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          -- right-associative
//! atom    := number | variable | func '(' sum ')' | '(' sum ')'
//! func    := neg | exp | sin | cos | log | sqrt
//! ```
//!
//! Exponentiation binds tighter than unary minus (`-x1^2` is `-(x1^2)`), and
//! the exponent may itself be signed (`x1^-2`). Variables are `x1..xd` on the
//! base space, plus `u1..ud` in the tangent-space scheme. Numbers accept
//! decimal and scientific notation.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::autodiff::{Dual, EvalError, FieldFn, Scalar, ScalarField};

/// Which variables an expression may reference, and how names map to
/// coordinate slots of the evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarScheme {
    /// `x1..xd` ↦ slots `0..d`.
    Base { dim: usize },
    /// `x1..xd` ↦ slots `0..d`, `u1..ud` ↦ slots `d..2d`.
    Tangent { dim: usize },
}

impl VarScheme {
    /// Number of coordinates of an evaluation point.
    pub fn total_dim(&self) -> usize {
        match self {
            VarScheme::Base { dim } => *dim,
            VarScheme::Tangent { dim } => 2 * dim,
        }
    }

    fn resolve(&self, name: &str) -> Option<usize> {
        let (prefix, rest) = name.split_at(1);
        if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if rest.len() > 1 && rest.starts_with('0') {
            return None;
        }
        let k: usize = rest.parse().ok()?;
        if k == 0 {
            return None;
        }
        match (self, prefix) {
            (VarScheme::Base { dim }, "x") if k <= *dim => Some(k - 1),
            (VarScheme::Tangent { dim }, "x") if k <= *dim => Some(k - 1),
            (VarScheme::Tangent { dim }, "u") if k <= *dim => Some(dim + k - 1),
            _ => None,
        }
    }

    fn name(&self, slot: usize) -> String {
        match self {
            VarScheme::Base { .. } => format!("x{}", slot + 1),
            VarScheme::Tangent { dim } => {
                if slot < *dim {
                    format!("x{}", slot + 1)
                } else {
                    format!("u{}", slot - dim + 1)
                }
            }
        }
    }
}

/// Unary operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Sin,
    Cos,
    Log,
    Sqrt,
}

impl UnaryOp {
    fn func_name(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "neg" => UnaryOp::Neg,
            "exp" => UnaryOp::Exp,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            _ => return None,
        })
    }

    fn as_str(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Exp => "exp",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
        }
    }
}

/// Binary operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Abstract syntax tree of a parsed expression. Variables are resolved to
/// coordinate slots at parse time.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

/// Parse failure, with the byte position in the source text.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("unexpected character `{ch}` at position {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("malformed number at position {pos}")]
    MalformedNumber { pos: usize },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("expected {expected} at position {pos}, found `{found}`")]
    Unexpected {
        expected: String,
        found: String,
        pos: usize,
    },
    #[error("unexpected end of input at position {pos}, expected {expected}")]
    UnexpectedEnd { expected: String, pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "{v}"),
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Star => write!(f, "*"),
            Tok::Slash => write!(f, "/"),
            Tok::Caret => write!(f, "^"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            b'/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            b'^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                        return Err(ParseError::MalformedNumber { pos: start });
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| ParseError::MalformedNumber { pos: start })?;
                toks.push((Tok::Num(v), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric())
                {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::UnexpectedChar { ch, pos: i });
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    scheme: &'a VarScheme,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(Tok, usize)> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn end_err(&self, expected: &str) -> ParseError {
        ParseError::UnexpectedEnd {
            expected: expected.to_string(),
            pos: self.end,
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.bump() {
            Some((Tok::RParen, _)) => Ok(()),
            Some((t, pos)) => Err(ParseError::Unexpected {
                expected: "`)`".to_string(),
                found: t.to_string(),
                pos,
            }),
            None => Err(self.end_err("`)`")),
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some((Tok::Plus, _)) => BinOp::Add,
                Some((Tok::Minus, _)) => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some((Tok::Star, _)) => BinOp::Mul,
                Some((Tok::Slash, _)) => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some((Tok::Minus, _)) = self.peek() {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some((Tok::Caret, _)) = self.peek() {
            self.bump();
            // The exponent re-enters at `unary`, which makes `^` bind tighter
            // than unary minus, keeps it right-associative, and allows signed
            // exponents.
            let exponent = self.unary()?;
            return Ok(Expr::Binary(
                BinOp::Pow,
                Box::new(base),
                Box::new(exponent),
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.bump() {
            Some((Tok::Num(v), _)) => Ok(Expr::Num(v)),
            Some((Tok::Ident(name), pos)) => {
                if let Some(op) = UnaryOp::func_name(&name) {
                    if matches!(self.peek(), Some((Tok::LParen, _))) {
                        self.bump();
                        let arg = self.sum()?;
                        self.expect_rparen()?;
                        return Ok(Expr::Unary(op, Box::new(arg)));
                    }
                }
                match self.scheme.resolve(&name) {
                    Some(slot) => Ok(Expr::Var(slot)),
                    None => Err(ParseError::UnknownIdentifier { name, pos }),
                }
            }
            Some((Tok::LParen, _)) => {
                let inner = self.sum()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some((t, pos)) => Err(ParseError::Unexpected {
                expected: "a number, variable, function, or `(`".to_string(),
                found: t.to_string(),
                pos,
            }),
            None => Err(self.end_err("a number, variable, function, or `(`")),
        }
    }
}

/// Parses `src` against the variable scheme.
pub fn parse(src: &str, scheme: &VarScheme) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        scheme,
        end: src.len(),
    };
    let expr = p.sum()?;
    if let Some((t, pos)) = p.peek() {
        return Err(ParseError::Unexpected {
            expected: "end of input".to_string(),
            found: t.to_string(),
            pos: *pos,
        });
    }
    Ok(expr)
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Num(_) | Expr::Var(_) => 5,
        Expr::Unary(UnaryOp::Neg, _) => 3,
        Expr::Unary(_, _) => 5,
        Expr::Binary(BinOp::Add | BinOp::Sub, _, _) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, _, _) => 2,
        Expr::Binary(BinOp::Pow, _, _) => 4,
    }
}

fn print_into(e: &Expr, scheme: &VarScheme, ctx: u8, out: &mut String) {
    let mine = prec(e);
    let wrap = mine < ctx;
    if wrap {
        out.push('(');
    }
    match e {
        Expr::Num(v) => {
            out.push_str(&format!("{v}"));
        }
        Expr::Var(slot) => out.push_str(&scheme.name(*slot)),
        Expr::Unary(UnaryOp::Neg, inner) => {
            out.push('-');
            print_into(inner, scheme, 3, out);
        }
        Expr::Unary(op, inner) => {
            out.push_str(op.as_str());
            out.push('(');
            print_into(inner, scheme, 0, out);
            out.push(')');
        }
        Expr::Binary(op, l, r) => {
            let (sym, lp, rp) = match op {
                BinOp::Add => (" + ", 1, 2),
                BinOp::Sub => (" - ", 1, 2),
                BinOp::Mul => (" * ", 2, 3),
                BinOp::Div => (" / ", 2, 3),
                BinOp::Pow => ("^", 5, 4),
            };
            print_into(l, scheme, lp, out);
            out.push_str(sym);
            print_into(r, scheme, rp, out);
        }
    }
    if wrap {
        out.push(')');
    }
}

/// Renders an expression so that reparsing yields the identical tree
/// (for trees whose numeric literals are non-negative and finite).
pub fn print(e: &Expr, scheme: &VarScheme) -> String {
    let mut out = String::new();
    print_into(e, scheme, 0, &mut out);
    out
}

/// Evaluates an expression at a point. `scheme` is used to render offending
/// subexpressions in domain errors.
pub fn eval<T: Scalar>(e: &Expr, point: &[T], scheme: &VarScheme) -> Result<T, EvalError> {
    match e {
        Expr::Num(v) => Ok(point[0].const_like(*v)),
        Expr::Var(slot) => {
            point
                .get(*slot)
                .cloned()
                .ok_or(EvalError::DimensionMismatch {
                    expected: scheme.total_dim(),
                    got: point.len(),
                })
        }
        Expr::Unary(op, inner) => {
            let v = eval(inner, point, scheme)?;
            match op {
                UnaryOp::Neg => Ok(-v),
                UnaryOp::Exp => Ok(v.exp()),
                UnaryOp::Sin => Ok(v.sin()),
                UnaryOp::Cos => Ok(v.cos()),
                UnaryOp::Log => {
                    if v.value() <= 0.0 {
                        Err(domain(e, scheme, "logarithm of a non-positive value"))
                    } else {
                        Ok(v.ln())
                    }
                }
                UnaryOp::Sqrt => {
                    if v.value() < 0.0 {
                        Err(domain(e, scheme, "square root of a negative value"))
                    } else {
                        Ok(v.sqrt())
                    }
                }
            }
        }
        Expr::Binary(op, l, r) => {
            let a = eval(l, point, scheme)?;
            match op {
                BinOp::Add => Ok(a + eval(r, point, scheme)?),
                BinOp::Sub => Ok(a - eval(r, point, scheme)?),
                BinOp::Mul => Ok(a * eval(r, point, scheme)?),
                BinOp::Div => {
                    let b = eval(r, point, scheme)?;
                    if b.value() == 0.0 {
                        Err(domain(e, scheme, "division by zero"))
                    } else {
                        Ok(a / b)
                    }
                }
                BinOp::Pow => {
                    // Constant integer exponents use the integer-power rule,
                    // which is defined for negative bases as well.
                    let literal = match &**r {
                        Expr::Num(c) => Some(*c),
                        Expr::Unary(UnaryOp::Neg, inner) => match &**inner {
                            Expr::Num(c) => Some(-c),
                            _ => None,
                        },
                        _ => None,
                    };
                    if let Some(c) = literal {
                        if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
                            let n = c as i32;
                            if n < 0 && a.value() == 0.0 {
                                return Err(domain(
                                    e,
                                    scheme,
                                    "zero raised to a negative power",
                                ));
                            }
                            return Ok(a.powi(n));
                        }
                    }
                    let b = eval(r, point, scheme)?;
                    if a.value() <= 0.0 {
                        Err(domain(
                            e,
                            scheme,
                            "non-integer power of a non-positive base",
                        ))
                    } else {
                        Ok(a.powf(b))
                    }
                }
            }
        }
    }
}

fn domain(e: &Expr, scheme: &VarScheme, reason: &str) -> EvalError {
    EvalError::Domain {
        expr: print(e, scheme),
        reason: reason.to_string(),
    }
}

struct ExprField {
    expr: Arc<Expr>,
    scheme: VarScheme,
}

impl FieldFn for ExprField {
    fn dim(&self) -> usize {
        self.scheme.total_dim()
    }
    fn eval_f64(&self, x: &[f64]) -> Result<f64, EvalError> {
        if x.len() != self.dim() {
            return Err(EvalError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        eval(&self.expr, x, &self.scheme)
    }
    fn eval_dual(&self, x: &[Dual]) -> Result<Dual, EvalError> {
        if x.len() != self.dim() {
            return Err(EvalError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        eval(&self.expr, x, &self.scheme)
    }
}

/// Wraps a parsed expression as a [`ScalarField`].
pub fn field(expr: Expr, scheme: VarScheme) -> ScalarField {
    ScalarField::from_field_fn(Arc::new(ExprField {
        expr: Arc::new(expr),
        scheme,
    }))
}

/// Parses `src` and wraps it as a [`ScalarField`] in one step.
pub fn parse_field(src: &str, scheme: &VarScheme) -> Result<ScalarField, ParseError> {
    Ok(field(parse(src, scheme)?, *scheme))
}
