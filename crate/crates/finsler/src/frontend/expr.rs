//! Expression DSL for user-defined energy functions.
//!
//! Grammar (highest precedence first):
//!
//! ```text
//! power   :=  atom ^ power | atom            (right associative, constant exponent)
//! unary   :=  - unary | power
//! term    :=  unary (('*' | '/') unary)*
//! expr    :=  term (('+' | '-') term)*
//! atom    :=  number | x<i> | y<i> | '(' expr ')' | sqrt '(' expr ')'
//! ```
//!
//! Identifiers are `x1..xn` and `y1..yn`. Exponents must fold to a constant
//! at parse time. Transcendental functions other than `sqrt` are not part of
//! the grammar; square roots plus rational operations already express every
//! built-in energy family.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::jets::{ScalarField, Taylor};
use crate::Error as CrateError;

#[derive(Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("parse error at {line}:{column}: found {found}, expected {}", expected.join(", "))]
    Parse {
        line: usize,
        column: usize,
        found: String,
        expected: Vec<String>,
    },
    #[error("unknown identifier {name:?} at {line}:{column}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("coordinate {name} exceeds the declared dimension {dim}")]
    DimensionMismatch { name: String, dim: usize },
    #[error("exponent at {line}:{column} must be a constant expression")]
    NonConstantExponent { line: usize, column: usize },
}

/// Expression AST. Coordinates are zero-based indices into x and y.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Constant(f64),
    BaseCoord(usize),
    FiberCoord(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, f64),
    Sqrt(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Number(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "identifier {s:?}"),
            Tok::Plus => write!(f, "'+'"),
            Tok::Minus => write!(f, "'-'"),
            Tok::Star => write!(f, "'*'"),
            Tok::Slash => write!(f, "'/'"),
            Tok::Caret => write!(f, "'^'"),
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    column: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = *self.src.get(self.pos)?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn tokens(mut self) -> Result<(Vec<Spanned>, (usize, usize)), ExprError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.src.get(self.pos), Some(b' ' | b'\t' | b'\r' | b'\n')) {
                self.bump();
            }
            let (line, column) = (self.line, self.column);
            let Some(&c) = self.src.get(self.pos) else {
                return Ok((out, (self.line, self.column)));
            };
            let tok = match c {
                b'+' => {
                    self.bump();
                    Tok::Plus
                }
                b'-' => {
                    self.bump();
                    Tok::Minus
                }
                b'*' => {
                    self.bump();
                    Tok::Star
                }
                b'/' => {
                    self.bump();
                    Tok::Slash
                }
                b'^' => {
                    self.bump();
                    Tok::Caret
                }
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b'0'..=b'9' | b'.' => {
                    let start = self.pos;
                    while matches!(self.src.get(self.pos), Some(b'0'..=b'9' | b'.')) {
                        self.bump();
                    }
                    if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
                        let mark = self.pos;
                        self.bump();
                        if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                            self.bump();
                        }
                        if matches!(self.src.get(self.pos), Some(b'0'..=b'9')) {
                            while matches!(self.src.get(self.pos), Some(b'0'..=b'9')) {
                                self.bump();
                            }
                        } else {
                            self.pos = mark;
                        }
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    let value: f64 = text.parse().map_err(|_| ExprError::Parse {
                        line,
                        column,
                        found: format!("{text:?}"),
                        expected: vec!["a numeric literal".into()],
                    })?;
                    Tok::Number(value)
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    let start = self.pos;
                    while matches!(
                        self.src.get(self.pos),
                        Some(b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'_')
                    ) {
                        self.bump();
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    Tok::Ident(text.to_string())
                }
                other => {
                    return Err(ExprError::Parse {
                        line,
                        column,
                        found: format!("{:?}", other as char),
                        expected: vec!["a token".into()],
                    })
                }
            };
            out.push((tok, line, column));
        }
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    n: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn err_here(&self, expected: &[&str]) -> ExprError {
        let (found, line, column) = match self.peek() {
            Some((t, l, c)) => (t.to_string(), *l, *c),
            None => ("end of input".to_string(), self.end.0, self.end.1),
        };
        ExprError::Parse {
            line,
            column,
            found,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if matches!(self.peek(), Some((t, _, _)) if t == tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(&Tok::Minus) {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(&Tok::Star) {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(&Tok::Slash) {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(&Tok::Minus) {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat(&Tok::Caret) {
            let (line, column) = match self.peek() {
                Some((_, l, c)) => (*l, *c),
                None => self.end,
            };
            // exponent binds as a unary so -2 and (3/2) both work
            let exp_expr = self.unary_exponent()?;
            let exponent =
                fold_constant(&exp_expr).ok_or(ExprError::NonConstantExponent { line, column })?;
            return Ok(Expr::Pow(Box::new(base), exponent));
        }
        Ok(base)
    }

    fn unary_exponent(&mut self) -> Result<Expr, ExprError> {
        if self.eat(&Tok::Minus) {
            Ok(Expr::Neg(Box::new(self.unary_exponent()?)))
        } else {
            let base = self.atom()?;
            if self.eat(&Tok::Caret) {
                let (line, column) = match self.peek() {
                    Some((_, l, c)) => (*l, *c),
                    None => self.end,
                };
                let exp = self.unary_exponent()?;
                let exponent =
                    fold_constant(&exp).ok_or(ExprError::NonConstantExponent { line, column })?;
                return Ok(Expr::Pow(Box::new(base), exponent));
            }
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek().cloned() {
            Some((Tok::Number(v), _, _)) => {
                self.pos += 1;
                Ok(Expr::Constant(v))
            }
            Some((Tok::LParen, _, _)) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(&Tok::RParen) {
                    return Err(self.err_here(&["')'"]));
                }
                Ok(inner)
            }
            Some((Tok::Ident(name), line, column)) => {
                self.pos += 1;
                if name == "sqrt" {
                    if !self.eat(&Tok::LParen) {
                        return Err(self.err_here(&["'(' after sqrt"]));
                    }
                    let inner = self.expr()?;
                    if !self.eat(&Tok::RParen) {
                        return Err(self.err_here(&["')'"]));
                    }
                    return Ok(Expr::Sqrt(Box::new(inner)));
                }
                self.coordinate(&name, line, column)
            }
            _ => Err(self.err_here(&["a number", "a coordinate", "'('", "sqrt", "'-'"])),
        }
    }

    fn coordinate(&self, name: &str, line: usize, column: usize) -> Result<Expr, ExprError> {
        let (kind, rest) = name.split_at(1);
        let index: usize = match rest.parse::<usize>() {
            Ok(i) if i >= 1 => i,
            _ => {
                return Err(ExprError::UnknownIdentifier {
                    name: name.to_string(),
                    line,
                    column,
                });
            }
        };
        let node = match kind {
            "x" => Expr::BaseCoord(index - 1),
            "y" => Expr::FiberCoord(index - 1),
            _ => {
                return Err(ExprError::UnknownIdentifier {
                    name: name.to_string(),
                    line,
                    column,
                });
            }
        };
        if index > self.n {
            return Err(ExprError::DimensionMismatch {
                name: name.to_string(),
                dim: self.n,
            });
        }
        Ok(node)
    }
}

fn fold_constant(e: &Expr) -> Option<f64> {
    match e {
        Expr::Constant(v) => Some(*v),
        Expr::Neg(a) => Some(-fold_constant(a)?),
        Expr::Add(a, b) => Some(fold_constant(a)? + fold_constant(b)?),
        Expr::Sub(a, b) => Some(fold_constant(a)? - fold_constant(b)?),
        Expr::Mul(a, b) => Some(fold_constant(a)? * fold_constant(b)?),
        Expr::Div(a, b) => Some(fold_constant(a)? / fold_constant(b)?),
        Expr::Pow(a, p) => Some(fold_constant(a)?.powf(*p)),
        Expr::Sqrt(a) => Some(fold_constant(a)?.sqrt()),
        Expr::BaseCoord(_) | Expr::FiberCoord(_) => None,
    }
}

/// Parse an energy expression over `x1..xn, y1..yn`.
pub fn parse_energy(source: &str, n: usize) -> Result<Expr, ExprError> {
    let (toks, end) = Lexer::new(source).tokens()?;
    let mut parser = Parser {
        toks,
        pos: 0,
        n,
        end,
    };
    if parser.peek().is_none() {
        return Err(parser.err_here(&["an expression"]));
    }
    let expr = parser.expr()?;
    if parser.peek().is_some() {
        return Err(parser.err_here(&["end of input", "an operator"]));
    }
    Ok(expr)
}

/// Render with explicit parentheses so the output reparses to the same AST.
pub fn pretty_print(e: &Expr) -> String {
    fn go(e: &Expr, out: &mut String) {
        match e {
            Expr::Constant(v) => {
                if *v < 0.0 {
                    write!(out, "({v})").unwrap();
                } else {
                    write!(out, "{v}").unwrap();
                }
            }
            Expr::BaseCoord(i) => write!(out, "x{}", i + 1).unwrap(),
            Expr::FiberCoord(i) => write!(out, "y{}", i + 1).unwrap(),
            Expr::Add(a, b) => {
                out.push('(');
                go(a, out);
                out.push_str(" + ");
                go(b, out);
                out.push(')');
            }
            Expr::Sub(a, b) => {
                out.push('(');
                go(a, out);
                out.push_str(" - ");
                go(b, out);
                out.push(')');
            }
            Expr::Mul(a, b) => {
                out.push('(');
                go(a, out);
                out.push_str(" * ");
                go(b, out);
                out.push(')');
            }
            Expr::Div(a, b) => {
                out.push('(');
                go(a, out);
                out.push_str(" / ");
                go(b, out);
                out.push(')');
            }
            Expr::Neg(a) => {
                out.push_str("(-");
                go(a, out);
                out.push(')');
            }
            Expr::Pow(a, p) => {
                out.push('(');
                go(a, out);
                if *p < 0.0 {
                    write!(out, "^({p})").unwrap();
                } else {
                    write!(out, "^{p}").unwrap();
                }
                out.push(')');
            }
            Expr::Sqrt(a) => {
                out.push_str("sqrt(");
                go(a, out);
                out.push(')');
            }
        }
    }
    let mut s = String::new();
    go(e, &mut s);
    s
}

/// An energy defined by a parsed expression.
pub struct ExprField {
    n: usize,
    ast: Expr,
}

impl ExprField {
    pub fn new(ast: Expr, n: usize) -> Arc<ExprField> {
        Arc::new(ExprField { n, ast })
    }

    pub fn parse(source: &str, n: usize) -> Result<Arc<ExprField>, ExprError> {
        Ok(Self::new(parse_energy(source, n)?, n))
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }
}

impl ScalarField for ExprField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, coords: &[Taylor]) -> Result<Taylor, CrateError> {
        fn go(e: &Expr, coords: &[Taylor], n: usize) -> Result<Taylor, CrateError> {
            Ok(match e {
                Expr::Constant(v) => {
                    Taylor::constant(coords[0].basis().clone(), *v, coords[0].order())
                }
                Expr::BaseCoord(i) => coords[*i].clone(),
                Expr::FiberCoord(i) => coords[n + *i].clone(),
                Expr::Add(a, b) => go(a, coords, n)?.add(&go(b, coords, n)?),
                Expr::Sub(a, b) => go(a, coords, n)?.sub(&go(b, coords, n)?),
                Expr::Mul(a, b) => go(a, coords, n)?.mul(&go(b, coords, n)?),
                Expr::Div(a, b) => go(a, coords, n)?.div(&go(b, coords, n)?)?,
                Expr::Neg(a) => go(a, coords, n)?.neg(),
                Expr::Pow(a, p) => go(a, coords, n)?.powf(*p)?,
                Expr::Sqrt(a) => go(a, coords, n)?.sqrt()?,
            })
        }
        go(&self.ast, coords, self.n)
    }
}
