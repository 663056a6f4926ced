//! Closed-form scalar expressions in chart coordinates.
//!
//! Expressions are parsed from a small infix language and evaluated over any
//! [`Scalar`] type, which covers plain `f64` values and [`Jet`]s.

use std::fmt::Write as _;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::jet::Jet;

/// Arithmetic needed to evaluate an [`Expr`].
pub trait Scalar: Clone {
    fn lift(&self, v: f64) -> Self;
    fn value(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Result<Self>;
    fn neg(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Result<Self>;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn powi(&self, k: i32) -> Result<Self>;
    fn powf(&self, p: f64) -> Result<Self>;
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Eval(format!("{what} produced {v}")))
    }
}

impl Scalar for f64 {
    fn lift(&self, v: f64) -> f64 {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, o: &f64) -> f64 {
        self + o
    }
    fn sub(&self, o: &f64) -> f64 {
        self - o
    }
    fn mul(&self, o: &f64) -> f64 {
        self * o
    }
    fn div(&self, o: &f64) -> Result<f64> {
        if *o == 0.0 {
            return Err(Error::Eval("division by zero".into()));
        }
        Ok(self / o)
    }
    fn neg(&self) -> f64 {
        -self
    }
    fn exp(&self) -> f64 {
        f64::exp(*self)
    }
    fn ln(&self) -> Result<f64> {
        if *self <= 0.0 {
            return Err(Error::Eval(format!("log of non-positive value {self}")));
        }
        Ok(f64::ln(*self))
    }
    fn sin(&self) -> f64 {
        f64::sin(*self)
    }
    fn cos(&self) -> f64 {
        f64::cos(*self)
    }
    fn sinh(&self) -> f64 {
        f64::sinh(*self)
    }
    fn cosh(&self) -> f64 {
        f64::cosh(*self)
    }
    fn powi(&self, k: i32) -> Result<f64> {
        finite(f64::powi(*self, k), "power")
    }
    fn powf(&self, p: f64) -> Result<f64> {
        if p.fract() == 0.0 && p.abs() < 64.0 {
            return Scalar::powi(self, p as i32);
        }
        if *self < 0.0 {
            return Err(Error::Eval(format!("non-integer power {p} of {self}")));
        }
        finite(f64::powf(*self, p), "power")
    }
}

impl Scalar for Jet {
    fn lift(&self, v: f64) -> Jet {
        Jet::lift(self, v)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn add(&self, o: &Jet) -> Jet {
        self + o
    }
    fn sub(&self, o: &Jet) -> Jet {
        self - o
    }
    fn mul(&self, o: &Jet) -> Jet {
        self.mul_jet(o)
    }
    fn div(&self, o: &Jet) -> Result<Jet> {
        self.div_jet(o)
    }
    fn neg(&self) -> Jet {
        -self
    }
    fn exp(&self) -> Jet {
        Jet::exp(self)
    }
    fn ln(&self) -> Result<Jet> {
        Jet::ln(self)
    }
    fn sin(&self) -> Jet {
        Jet::sin(self)
    }
    fn cos(&self) -> Jet {
        Jet::cos(self)
    }
    fn sinh(&self) -> Jet {
        Jet::sinh(self)
    }
    fn cosh(&self) -> Jet {
        Jet::cosh(self)
    }
    fn powi(&self, k: i32) -> Result<Jet> {
        Jet::powi(self, k)
    }
    fn powf(&self, p: f64) -> Result<Jet> {
        Jet::powf(self, p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num() == Some(0.0)
    }

    pub fn pow(self, e: Expr) -> Expr {
        match (self.as_num(), e.as_num()) {
            (_, Some(1.0)) => self,
            (_, Some(0.0)) => Expr::Num(1.0),
            (Some(a), Some(p)) => Expr::Num(a.powf(p)),
            _ => Expr::Bin(BinOp::Pow, Box::new(self), Box::new(e)),
        }
    }

    pub fn powf(self, p: f64) -> Expr {
        self.pow(Expr::Num(p))
    }

    pub fn call(self, f: Func) -> Expr {
        Expr::Call(f, Box::new(self))
    }

    pub fn exp(self) -> Expr {
        self.call(Func::Exp)
    }

    pub fn sqrt(self) -> Expr {
        self.call(Func::Sqrt)
    }

    /// `Σ_i x_i²` over the given coordinate indices.
    pub fn sum_of_squares(vars: impl IntoIterator<Item = usize>) -> Expr {
        vars.into_iter()
            .map(|i| Expr::var(i).powf(2.0))
            .fold(Expr::num(0.0), |a, b| a + b)
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Call(_, a) => a.max_var(),
            Expr::Bin(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn eval<T: Scalar>(&self, vars: &[T]) -> Result<T> {
        match self {
            Expr::Num(v) => Ok(vars
                .first()
                .map(|x| x.lift(*v))
                .ok_or_else(|| Error::Eval("expression needs at least one coordinate".into()))?),
            Expr::Var(i) => vars
                .get(*i)
                .cloned()
                .ok_or_else(|| Error::Eval(format!("coordinate index {i} out of range"))),
            Expr::Neg(a) => Ok(Scalar::neg(&a.eval(vars)?)),
            Expr::Bin(op, a, b) => {
                if *op == BinOp::Pow {
                    let base = a.eval(vars)?;
                    return match b.as_num() {
                        Some(p) => Scalar::powf(&base, p),
                        None => {
                            let e = b.eval(vars)?;
                            Ok(Scalar::exp(&Scalar::mul(&e, &Scalar::ln(&base)?)))
                        }
                    };
                }
                let x = a.eval(vars)?;
                let y = b.eval(vars)?;
                match op {
                    BinOp::Add => Ok(Scalar::add(&x, &y)),
                    BinOp::Sub => Ok(Scalar::sub(&x, &y)),
                    BinOp::Mul => Ok(Scalar::mul(&x, &y)),
                    BinOp::Div => Scalar::div(&x, &y),
                    BinOp::Pow => unreachable!(),
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval(vars)?;
                match f {
                    Func::Exp => Ok(Scalar::exp(&x)),
                    Func::Log => Scalar::ln(&x),
                    Func::Sin => Ok(Scalar::sin(&x)),
                    Func::Cos => Ok(Scalar::cos(&x)),
                    Func::Sinh => Ok(Scalar::sinh(&x)),
                    Func::Cosh => Ok(Scalar::cosh(&x)),
                    Func::Sqrt => Scalar::powf(&x, 0.5),
                }
            }
        }
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<f64> {
        let v = self.eval(point)?;
        finite(v, "expression")
    }

    /// Parses `text` with the given coordinate names.
    pub fn parse(text: &str, coords: &[String]) -> std::result::Result<Expr, String> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0, coords };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(format!("unexpected token {:?}", p.tokens[p.pos]));
        }
        Ok(e)
    }

    /// Renders the expression in the syntax accepted by [`Expr::parse`].
    pub fn render(&self, coords: &[String]) -> String {
        let mut out = String::new();
        self.write(&mut out, coords, 0);
        out
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            Expr::Num(v) if *v < 0.0 => 3,
            _ => 5,
        }
    }

    fn write(&self, out: &mut String, coords: &[String], min_prec: u8) {
        let prec = self.precedence();
        let paren = prec < min_prec;
        if paren {
            out.push('(');
        }
        match self {
            Expr::Num(v) => {
                let _ = write!(out, "{v:?}");
            }
            Expr::Var(i) => out.push_str(&coords[*i]),
            Expr::Neg(a) => {
                out.push('-');
                a.write(out, coords, 4);
            }
            Expr::Bin(op, a, b) => {
                let (sym, lp, rp) = match op {
                    BinOp::Add => (" + ", 1, 2),
                    BinOp::Sub => (" - ", 1, 2),
                    BinOp::Mul => (" * ", 2, 3),
                    BinOp::Div => (" / ", 2, 3),
                    BinOp::Pow => ("^", 5, 4),
                };
                a.write(out, coords, lp);
                out.push_str(sym);
                b.write(out, coords, rp);
            }
            Expr::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write(out, coords, 0);
                out.push(')');
            }
        }
        if paren {
            out.push(')');
        }
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self.as_num(), rhs.as_num()) {
            (Some(a), Some(b)) => Expr::Num(a + b),
            (Some(0.0), _) => rhs,
            (_, Some(0.0)) => self,
            _ => Expr::Bin(BinOp::Add, Box::new(self), Box::new(rhs)),
        }
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        match (self.as_num(), rhs.as_num()) {
            (Some(a), Some(b)) => Expr::Num(a - b),
            (Some(0.0), _) => -rhs,
            (_, Some(0.0)) => self,
            _ => Expr::Bin(BinOp::Sub, Box::new(self), Box::new(rhs)),
        }
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self.as_num(), rhs.as_num()) {
            (Some(a), Some(b)) => Expr::Num(a * b),
            (Some(0.0), _) | (_, Some(0.0)) => Expr::Num(0.0),
            (Some(1.0), _) => rhs,
            (_, Some(1.0)) => self,
            _ => Expr::Bin(BinOp::Mul, Box::new(self), Box::new(rhs)),
        }
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match (self.as_num(), rhs.as_num()) {
            (Some(a), Some(b)) if b != 0.0 => Expr::Num(a / b),
            (Some(0.0), _) => Expr::Num(0.0),
            (_, Some(1.0)) => self,
            _ => Expr::Bin(BinOp::Div, Box::new(self), Box::new(rhs)),
        }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(-v),
            Expr::Neg(a) => *a,
            other => Expr::Neg(Box::new(other)),
        }
    }
}

impl Mul<Expr> for f64 {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Num(self) * rhs
    }
}

impl Add<f64> for Expr {
    type Output = Expr;
    fn add(self, rhs: f64) -> Expr {
        self + Expr::Num(rhs)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> std::result::Result<Vec<Token>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
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
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| format!("bad number '{s}'"))?;
            tokens.push(Token::Num(v));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            tokens.push(Token::Op(c));
            i += 1;
        } else {
            return Err(format!("unexpected character '{c}'"));
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    coords: &'a [String],
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, c: char) -> std::result::Result<(), String> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!("expected '{c}'"))
        }
    }

    fn expr(&mut self) -> std::result::Result<Expr, String> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> std::result::Result<Expr, String> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> std::result::Result<Expr, String> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Num(v) => Expr::Num(-v),
                other => Expr::Neg(Box::new(other)),
            });
        }
        if self.peek_op() == Some('+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<Expr, String> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> std::result::Result<Expr, String> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| "unexpected end of expression".to_string())?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Num(v)),
            Token::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Token::Op(c) => Err(format!("unexpected '{c}'")),
            Token::Ident(name) => {
                if self.peek_op() == Some('(') {
                    self.pos += 1;
                    let first = self.expr()?;
                    if name == "pow" {
                        self.expect(',')?;
                        let second = self.expr()?;
                        self.expect(')')?;
                        return Ok(Expr::Bin(BinOp::Pow, Box::new(first), Box::new(second)));
                    }
                    self.expect(')')?;
                    let f = Func::from_name(&name).ok_or_else(|| format!("unknown function '{name}'"))?;
                    return Ok(Expr::Call(f, Box::new(first)));
                }
                if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    return Ok(Expr::Var(i));
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "e" => Ok(Expr::Num(std::f64::consts::E)),
                    _ => Err(format!("unknown identifier '{name}'")),
                }
            }
        }
    }
}
