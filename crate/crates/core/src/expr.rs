//! A small arithmetic expression language for vector fields and ODE right-hand sides.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | variable | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Variables are `x, y1, ..., y{n-1}` for `n` coordinates, with `y` an alias of `y1`
//! when `n = 2`. Functions: `sin`, `cos`, `exp`, `tanh`. Powers are right-associative
//! and bind tighter than unary minus, so `-y^2 = -(y^2)`.

use std::fmt;
use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Tanh => "tanh",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Tanh => v.tanh(),
        }
    }
}

/// Parse tree. `Var(0)` is `x`, `Var(i)` is `y{i}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownIdentifier(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte range in the source.
    pub span: Range<usize>,
    /// 1-based line.
    pub line: usize,
    /// 1-based column, in characters.
    pub column: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match &self.kind {
            ParseErrorKind::Syntax(m) => m.clone(),
            ParseErrorKind::UnknownIdentifier(id) => format!("unknown identifier `{id}`"),
        };
        write!(f, "line {}, column {}: {}", self.line, self.column, msg)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, Range<usize>)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, Range<usize>)>, ParseError> {
        let mut lx = Lexer { src, toks: Vec::new() };
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = src[i..].chars().next().unwrap();
            if c.is_whitespace() {
                i += c.len_utf8();
                continue;
            }
            let start = i;
            if c.is_ascii_digit() || c == '.' {
                i = lx.number_end(i);
                let text = &src[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| error_at(src, start..i, ParseErrorKind::Syntax(format!("malformed number `{text}`"))))?;
                lx.toks.push((Tok::Num(v), start..i));
            } else if c.is_ascii_alphabetic() || c == '_' {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                lx.toks.push((Tok::Ident(src[start..i].to_string()), start..i));
            } else {
                i += c.len_utf8();
                let tok = match c {
                    '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    _ => {
                        return Err(error_at(src, start..i, ParseErrorKind::Syntax(format!("unexpected character `{c}`"))));
                    }
                };
                lx.toks.push((tok, start..i));
            }
        }
        lx.toks.push((Tok::End, src.len()..src.len()));
        Ok(lx.toks)
    }

    fn number_end(&self, mut i: usize) -> usize {
        let b = self.src.as_bytes();
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i < b.len() && b[i] == b'.' {
            i += 1;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                j += 1;
            }
            if j < b.len() && b[j].is_ascii_digit() {
                while j < b.len() && b[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        i
    }
}

fn error_at(src: &str, span: Range<usize>, kind: ParseErrorKind) -> ParseError {
    let before = &src[..span.start.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    ParseError { kind, span, line, column }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, Range<usize>)>,
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Range<usize> {
        self.toks[self.pos].1.clone()
    }

    fn bump(&mut self) -> (Tok, Range<usize>) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(error_at(self.src, self.span(), ParseErrorKind::Syntax(msg.into())))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
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
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return self.fail("expected `)`");
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                let (_, span) = self.bump();
                if let Some(func) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return self.fail(format!("expected `(` after `{name}`"));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    if *self.peek() != Tok::RParen {
                        return self.fail("expected `)`");
                    }
                    self.bump();
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                match resolve_variable(&name, self.dim) {
                    Some(i) => Ok(Expr::Var(i)),
                    None => Err(error_at(self.src, span, ParseErrorKind::UnknownIdentifier(name))),
                }
            }
            Tok::End => self.fail("unexpected end of input"),
            Tok::Op(c) => self.fail(format!("unexpected operator `{c}`")),
            Tok::RParen => self.fail("unexpected `)`"),
        }
    }
}

fn resolve_variable(name: &str, dim: usize) -> Option<usize> {
    if name == "x" && dim >= 1 {
        return Some(0);
    }
    if name == "y" && dim == 2 {
        return Some(1);
    }
    let idx: usize = name.strip_prefix('y')?.parse().ok()?;
    if name.starts_with("y0") || idx == 0 || idx >= dim {
        return None;
    }
    Some(idx)
}

/// Parses `src` over `dim` coordinates (`x` plus `dim - 1` y-variables).
pub fn parse_expression(src: &str, dim: usize) -> Result<Expr, ParseError> {
    let toks = Lexer::run(src)?;
    let mut p = Parser { src, toks, pos: 0, dim };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("unexpected trailing input");
    }
    Ok(e)
}

fn num(v: f64) -> Expr {
    Expr::Num(v)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), _) if *x == 0.0 => b,
        (_, Expr::Num(y)) if *y == 0.0 => a,
        (Expr::Num(x), Expr::Num(y)) => num(x + y),
        _ => Expr::Bin(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Num(y)) if *y == 0.0 => a,
        (Expr::Num(x), _) if *x == 0.0 => neg(b),
        (Expr::Num(x), Expr::Num(y)) => num(x - y),
        _ => Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), _) | (_, Expr::Num(x)) if *x == 0.0 => num(0.0),
        (Expr::Num(x), _) if *x == 1.0 => b,
        (_, Expr::Num(y)) if *y == 1.0 => a,
        (Expr::Num(x), Expr::Num(y)) => num(x * y),
        _ => Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), _) if *x == 0.0 => num(0.0),
        (_, Expr::Num(y)) if *y == 1.0 => a,
        _ => Expr::Bin(BinOp::Div, Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(x) => num(-x),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Num(y)) if *y == 1.0 => a,
        (_, Expr::Num(y)) if *y == 0.0 => num(1.0),
        _ => Expr::Bin(BinOp::Pow, Box::new(a), Box::new(b)),
    }
}

impl Expr {
    pub fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => vars[*i],
            Expr::Neg(e) => -e.eval(vars),
            Expr::Bin(op, l, r) => {
                let (a, b) = (l.eval(vars), r.eval(vars));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => {
                        if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
                            a.powi(b as i32)
                        } else {
                            a.powf(b)
                        }
                    }
                }
            }
            Expr::Call(f, e) => f.apply(e.eval(vars)),
        }
    }

    pub fn depends_on(&self, var: usize) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(i) => *i == var,
            Expr::Neg(e) | Expr::Call(_, e) => e.depends_on(var),
            Expr::Bin(_, l, r) => l.depends_on(var) || r.depends_on(var),
        }
    }

    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(e) | Expr::Call(_, e) => e.max_var(),
            Expr::Bin(_, l, r) => l.max_var().max(r.max_var()),
        }
    }

    /// Symbolic partial derivative. `None` for powers with a variable exponent.
    pub fn derivative(&self, var: usize) -> Option<Expr> {
        if !self.depends_on(var) {
            return Some(num(0.0));
        }
        Some(match self {
            Expr::Num(_) => num(0.0),
            Expr::Var(i) => num(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(e) => neg(e.derivative(var)?),
            Expr::Bin(op, l, r) => {
                let (l, r) = (l.as_ref(), r.as_ref());
                match op {
                    BinOp::Add => add(l.derivative(var)?, r.derivative(var)?),
                    BinOp::Sub => sub(l.derivative(var)?, r.derivative(var)?),
                    BinOp::Mul => add(mul(l.derivative(var)?, r.clone()), mul(l.clone(), r.derivative(var)?)),
                    BinOp::Div => div(
                        sub(mul(l.derivative(var)?, r.clone()), mul(l.clone(), r.derivative(var)?)),
                        pow(r.clone(), num(2.0)),
                    ),
                    BinOp::Pow => {
                        if r.depends_on(var) {
                            return None;
                        }
                        let lowered = match r {
                            Expr::Num(k) => num(k - 1.0),
                            _ => sub(r.clone(), num(1.0)),
                        };
                        mul(mul(r.clone(), pow(l.clone(), lowered)), l.derivative(var)?)
                    }
                }
            }
            Expr::Call(f, e) => {
                let inner = e.derivative(var)?;
                let outer = match f {
                    Func::Sin => Expr::Call(Func::Cos, e.clone()),
                    Func::Cos => neg(Expr::Call(Func::Sin, e.clone())),
                    Func::Exp => Expr::Call(Func::Exp, e.clone()),
                    Func::Tanh => sub(num(1.0), pow(Expr::Call(Func::Tanh, e.clone()), num(2.0))),
                };
                mul(outer, inner)
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }

    /// Renders with the variable names for `dim` coordinates.
    pub fn display(&self, dim: usize) -> Display<'_> {
        Display { expr: self, dim }
    }
}

pub struct Display<'a> {
    expr: &'a Expr,
    dim: usize,
}

impl Display<'_> {
    fn child(&self, f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
        let d = Display { expr: e, dim: self.dim };
        if e.precedence() < min_prec {
            write!(f, "({d})")
        } else {
            write!(f, "{d}")
        }
    }
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(0) => write!(f, "x"),
            Expr::Var(i) if self.dim == 2 => {
                debug_assert_eq!(*i, 1);
                write!(f, "y")
            }
            Expr::Var(i) => write!(f, "y{i}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                self.child(f, e, 3)
            }
            Expr::Bin(op, l, r) => {
                let (sym, lp, rp) = match op {
                    BinOp::Add => ("+", 1, 2),
                    BinOp::Sub => ("-", 1, 2),
                    BinOp::Mul => ("*", 2, 3),
                    BinOp::Div => ("/", 2, 3),
                    BinOp::Pow => ("^", 5, 3),
                };
                self.child(f, l, lp)?;
                write!(f, " {sym} ")?;
                self.child(f, r, rp)
            }
            Expr::Call(func, e) => {
                write!(f, "{}(", func.name())?;
                self.child(f, e, 0)?;
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_zero() {
        assert_eq!(parse_expression("0", 2).unwrap(), Expr::Num(0.0));
    }

    #[test]
    fn square_at_half() {
        let e = parse_expression("y^2", 2).unwrap();
        assert_eq!(e.eval(&[0.0, 0.5]), 0.25);
    }

    #[test]
    fn sin_x_times_y_at_pi() {
        let e = parse_expression("sin(x)*y", 2).unwrap();
        assert!(e.eval(&[std::f64::consts::PI, 2.0]).abs() <= 1e-15);
    }

    #[test]
    fn precedence_rules() {
        let e = parse_expression("-y^2", 2).unwrap();
        assert_eq!(e.eval(&[0.0, 3.0]), -9.0);
        let e = parse_expression("2^3^2", 2).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]), 512.0);
        let e = parse_expression("1 - 2 - 3", 2).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]), -4.0);
        let e = parse_expression("8 / 4 / 2 + 2 * -3", 2).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]), -5.0);
        let e = parse_expression("2^-1", 2).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]), 0.5);
    }

    #[test]
    fn variables_by_dimension() {
        assert!(parse_expression("y1 + y2 * x", 3).is_ok());
        let err = parse_expression("y", 3).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("y".into()));
        let err = parse_expression("x + y3", 3).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("y3".into()));
        assert_eq!(err.column, 5);
        assert!(parse_expression("y1", 2).is_ok());
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_expression("sin(x", 2).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
        assert_eq!((err.line, err.column), (1, 6));
        let err = parse_expression("x +\n  * y", 2).unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
        let err = parse_expression("x $ y", 2).unwrap_err();
        assert_eq!(err.column, 3);
        assert!(parse_expression("", 2).is_err());
        assert!(parse_expression("x y", 2).is_err());
        let err = parse_expression("foo(x)", 2).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("foo".into()));
    }

    #[test]
    fn scientific_literals() {
        let e = parse_expression("1.5e-3 * y", 2).unwrap();
        assert!((e.eval(&[0.0, 2.0]) - 3e-3).abs() < 1e-18);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let srcs = ["sin(x)*y", "y^2", "exp(y/(1+x^2)) - tanh(2*y)", "cos(x*y)^3", "-y^2 / (x + 3)"];
        let p = [0.4, -0.7];
        for src in srcs {
            let e = parse_expression(src, 2).unwrap();
            for var in 0..2 {
                let d = e.derivative(var).unwrap();
                let h = 1e-6;
                let mut pp = p;
                pp[var] += h;
                let mut pm = p;
                pm[var] -= h;
                let fd = (e.eval(&pp) - e.eval(&pm)) / (2.0 * h);
                assert!((d.eval(&p) - fd).abs() < 1e-8, "{src} d/d{var}");
            }
        }
    }

    #[test]
    fn variable_exponent_has_no_symbolic_derivative() {
        let e = parse_expression("y^x", 2).unwrap();
        assert!(e.derivative(0).is_none());
        assert!(e.derivative(1).is_some());
    }

    #[test]
    fn display_round_trips() {
        for src in ["-y^2", "(1 - y) * -x", "2^3^2", "(2^3)^2", "(-x)^2", "x - (y - 1)", "sin(x) / (y * 2)", "--x"] {
            let e = parse_expression(src, 2).unwrap();
            let printed = e.display(2).to_string();
            assert_eq!(parse_expression(&printed, 2).unwrap(), e, "{src} -> {printed}");
        }
    }
}
