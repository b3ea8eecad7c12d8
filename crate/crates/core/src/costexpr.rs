//! Payoff expressions `Φ(x1, x2)`.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | 'x1' | 'x2' | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: `abs(a)`, `max(a, b)`, `min(a, b)`, `call(a, k) = max(a − k, 0)`
//! and `put(a, k) = max(k − a, 0)`.

use std::fmt;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Divisors smaller than this in magnitude are rejected.
pub const MIN_DIVISOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at column {column}: {message}")]
pub struct ParseError {
    /// 1-based character column.
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X1,
    X2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
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
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Abs,
    Max,
    Min,
    Call,
    Put,
}

impl Func {
    fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "abs" => Func::Abs,
            "max" => Func::Max,
            "min" => Func::Min,
            "call" => Func::Call,
            "put" => Func::Put,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Max => "max",
            Func::Min => "min",
            Func::Call => "call",
            Func::Put => "put",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Abs => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var(Var),
    Num(f64),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Func(Func, Vec<Expr>),
}

impl Expr {
    fn depends_on_var(&self) -> bool {
        match self {
            Expr::Var(_) => true,
            Expr::Num(_) => false,
            Expr::Neg(e) => e.depends_on_var(),
            Expr::Bin(_, a, b) => a.depends_on_var() || b.depends_on_var(),
            Expr::Func(_, args) => args.iter().any(Expr::depends_on_var),
        }
    }

    fn eval<T: Scalar>(&self, x1: &T, x2: &T) -> Result<T> {
        Ok(match self {
            Expr::Var(Var::X1) => x1.clone(),
            Expr::Var(Var::X2) => x2.clone(),
            Expr::Num(v) => T::from_f64(*v).ok_or_else(|| Error::Eval(format!("literal {v}")))?,
            Expr::Neg(e) => -e.eval(x1, x2)?,
            Expr::Bin(op, a, b) => {
                let a = a.eval(x1, x2)?;
                let b = b.eval(x1, x2)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        let tiny = if T::EXACT { T::zero() } else { T::from_f64_lossy(MIN_DIVISOR) };
                        if b.abs() <= tiny || b.is_zero() {
                            return Err(Error::Eval("division by zero".into()));
                        }
                        a / b
                    }
                }
            }
            Expr::Func(f, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(a.eval(x1, x2)?);
                }
                let first = vals[0].clone();
                match f {
                    Func::Abs => first.abs(),
                    Func::Max => first.max_of(vals[1].clone()),
                    Func::Min => first.min_of(vals[1].clone()),
                    Func::Call => (first - vals[1].clone()).max_of(T::zero()),
                    Func::Put => (vals[1].clone() - first).max_of(T::zero()),
                }
            }
        })
    }

    fn lint(&self) -> Option<&'static str> {
        match self {
            Expr::Var(_) | Expr::Num(_) => None,
            Expr::Neg(e) => e.lint(),
            Expr::Bin(op, a, b) => {
                if *op == BinOp::Mul && a.depends_on_var() && b.depends_on_var() {
                    return Some("product of variable terms");
                }
                if *op == BinOp::Div && b.depends_on_var() {
                    return Some("division by a variable term");
                }
                a.lint().or_else(|| b.lint())
            }
            Expr::Func(_, args) => args.iter().find_map(Expr::lint),
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, top: bool) -> fmt::Result {
        match self {
            Expr::Var(Var::X1) => write!(f, "x1"),
            Expr::Var(Var::X2) => write!(f, "x2"),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.write(f, false)
            }
            Expr::Bin(op, a, b) => {
                if !top {
                    write!(f, "(")?;
                }
                a.write(f, false)?;
                write!(f, " {} ", op.symbol())?;
                b.write(f, false)?;
                if !top {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Expr::Func(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    a.write(f, true)?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Result of [`PayoffExpr::lint_linear_growth`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GrowthLint {
    Ok,
    Warn(String),
}

/// Parsed payoff `Φ(x1, x2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffExpr {
    ast: Expr,
}

impl PayoffExpr {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let ast = p.expr()?;
        let (tok, col) = p.peek();
        if *tok != Tok::End {
            return Err(ParseError {
                column: col,
                message: format!("unexpected {}", tok.describe()),
            });
        }
        Ok(Self { ast })
    }

    pub fn from_ast(ast: Expr) -> Self {
        Self { ast }
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    /// `-Φ`.
    pub fn negated(&self) -> Self {
        Self {
            ast: Expr::Neg(Box::new(self.ast.clone())),
        }
    }

    pub fn eval<T: Scalar>(&self, x1: &T, x2: &T) -> Result<T> {
        let v = self.ast.eval(x1, x2)?;
        if !v.is_finite_value() {
            return Err(Error::Eval(format!("non-finite value at ({x1}, {x2})")));
        }
        Ok(v)
    }

    /// Syntactic check for super-linear growth.
    pub fn lint_linear_growth(&self) -> GrowthLint {
        match self.ast.lint() {
            None => GrowthLint::Ok,
            Some(reason) => GrowthLint::Warn(reason.to_string()),
        }
    }
}

impl fmt::Display for PayoffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.write(f, true)
    }
}

impl std::str::FromStr for PayoffExpr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        Self::parse(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, col));
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let v: f64 = lit.parse().map_err(|_| ParseError {
                column: col,
                message: format!("malformed number '{lit}'"),
            })?;
            if !v.is_finite() {
                return Err(ParseError {
                    column: col,
                    message: format!("number '{lit}' is out of range"),
                });
            }
            out.push((Tok::Num(v), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else {
            return Err(ParseError {
                column: col,
                message: format!("unexpected character '{c}'"),
            });
        }
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> (&Tok, usize) {
        let (t, c) = &self.tokens[self.pos];
        (t, *c)
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.tokens[self.pos].clone();
        if t.0 != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn unexpected<X>(&self) -> Result<X, ParseError> {
        let (tok, column) = self.peek();
        Err(ParseError {
            column,
            message: format!("unexpected {}", tok.describe()),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek().0 == want {
            self.bump();
            Ok(())
        } else {
            let (tok, column) = self.peek();
            Err(ParseError {
                column,
                message: format!("expected {} but found {}", want.describe(), tok.describe()),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().0 {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().0 {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek().0 == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().0.clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let (_, column) = self.bump();
                match name.as_str() {
                    "x1" => return Ok(Expr::Var(Var::X1)),
                    "x2" => return Ok(Expr::Var(Var::X2)),
                    _ => {}
                }
                let func = Func::lookup(&name).ok_or_else(|| ParseError {
                    column,
                    message: format!("unknown identifier '{name}'"),
                })?;
                self.expect(Tok::LParen)?;
                let mut args = vec![self.expr()?];
                while *self.peek().0 == Tok::Comma {
                    self.bump();
                    args.push(self.expr()?);
                }
                self.expect(Tok::RParen)?;
                if args.len() != func.arity() {
                    return Err(ParseError {
                        column,
                        message: format!(
                            "{} takes {} argument(s), got {}",
                            func.name(),
                            func.arity(),
                            args.len()
                        ),
                    });
                }
                Ok(Expr::Func(func, args))
            }
            _ => self.unexpected(),
        }
    }
}
