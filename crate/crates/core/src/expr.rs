//! Arithmetic expressions for configuration strings.
//!
//! Grammar: `+ − * / ^`, unary minus, parentheses, the functions `sin`,
//! `cos`, `exp`, `atan`, `sqrt`, the constants `pi` and `e`, and variables
//! bound by name at parse time. `^` is right-associative and binds tighter
//! than unary minus, so `-t^2 = -(t^2)`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Atan,
    Sqrt,
}

impl Func {
    fn parse(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "atan" => Func::Atan,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Atan => "atan",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Atan => x.atan(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Index into the variable list given at parse time.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut k = i + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    i = k;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::Expression(format!("bad number '{text}' at {start}")))?;
            out.push((start, Token::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Token::Ident(src[start..i].to_string())));
        } else if "+-*/^".contains(c) {
            out.push((i, Token::Op(c)));
            i += 1;
        } else if c == '(' {
            out.push((i, Token::LParen));
            i += 1;
        } else if c == ')' {
            out.push((i, Token::RParen));
            i += 1;
        } else {
            return Err(Error::Expression(format!("unexpected character '{c}' at {i}")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    vars: &'a [&'a str],
    len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn at(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.len, |(p, _)| *p)
    }

    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Expression(format!("{msg} at {}", self.at())))
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == '+' { Expr::Add(lhs.into(), rhs.into()) } else { Expr::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    // term := unary (('*'|'/') unary)*
    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == '*' { Expr::Mul(lhs.into(), rhs.into()) } else { Expr::Div(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    // unary := ('-'|'+') unary | power
    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(self.unary()?.into()))
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    // power := atom ('^' unary)?
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(base.into(), exp.into()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(&Token::RParen) {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(e)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                if let Some(k) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Expr::Var(k));
                }
                match name.as_str() {
                    "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
                    "e" => return Ok(Expr::Num(std::f64::consts::E)),
                    _ => {}
                }
                let Some(func) = Func::parse(&name) else {
                    self.pos -= 1;
                    return self.err(&format!("unknown name '{name}' (variables: {})", self.vars.join(", ")));
                };
                if self.peek() != Some(&Token::LParen) {
                    return self.err(&format!("expected '(' after {name}"));
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(&Token::RParen) {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(Expr::Call(func, arg.into()))
            }
            Some(Token::Op(c)) => self.err(&format!("unexpected '{c}'")),
            Some(Token::RParen) => self.err("unexpected ')'"),
            None => self.err("unexpected end of input"),
        }
    }
}

impl Expr {
    /// Parses `src` with the given variable names (which shadow `pi`, `e`).
    pub fn parse(src: &str, vars: &[&str]) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, vars, len: src.len() };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return p.err("trailing input");
        }
        Ok(e)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(k) => x[*k],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => match **b {
                Expr::Num(n) if n == n.trunc() && n.abs() <= 64.0 => a.eval(x).powi(n as i32),
                _ => a.eval(x).powf(b.eval(x)),
            },
            Expr::Call(f, a) => f.apply(a.eval(x)),
        }
    }

    pub fn depends_on(&self, var: usize) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(k) => *k == var,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
        }
    }

    /// Symbolic partial derivative with respect to variable `var`; `None` for
    /// a power whose exponent depends on `var` (the grammar has no `ln`).
    pub fn derivative(&self, var: usize) -> Option<Expr> {
        use Expr::*;
        let num = |v| Box::new(Num(v));
        let d = |e: &Expr| e.derivative(var).map(Box::new);
        Some(match self {
            Num(_) => Num(0.0),
            Var(k) => Num(if *k == var { 1.0 } else { 0.0 }),
            Neg(a) => Neg(d(a)?).simplify(),
            Add(a, b) => Add(d(a)?, d(b)?).simplify(),
            Sub(a, b) => Sub(d(a)?, d(b)?).simplify(),
            Mul(a, b) => Add(Mul(d(a)?, b.clone()).simplify().into(), Mul(a.clone(), d(b)?).simplify().into()).simplify(),
            Div(a, b) => Div(
                Sub(Mul(d(a)?, b.clone()).simplify().into(), Mul(a.clone(), d(b)?).simplify().into()).simplify().into(),
                Pow(b.clone(), num(2.0)).into(),
            )
            .simplify(),
            Pow(_, b) if b.depends_on(var) => return None,
            // d(a^c) = c·a^(c−1)·a'
            Pow(a, b) => Mul(Mul(b.clone(), Pow(a.clone(), Sub(b.clone(), num(1.0)).into()).into()).into(), d(a)?).simplify(),
            Call(f, a) => {
                let outer = match f {
                    Func::Sin => Call(Func::Cos, a.clone()),
                    Func::Cos => Neg(Call(Func::Sin, a.clone()).into()),
                    Func::Exp => Call(Func::Exp, a.clone()),
                    Func::Atan => Div(num(1.0), Add(num(1.0), Pow(a.clone(), num(2.0)).into()).into()),
                    Func::Sqrt => Div(num(0.5), Call(Func::Sqrt, a.clone()).into()),
                };
                Mul(outer.into(), d(a)?).simplify()
            }
        })
    }

    /// Removes additions of zero and multiplications by zero or one.
    fn simplify(self) -> Expr {
        use Expr::*;
        let is = |e: &Expr, v: f64| matches!(e, Num(x) if *x == v);
        match self {
            Add(a, b) if is(&a, 0.0) => *b,
            Add(a, b) if is(&b, 0.0) => *a,
            Sub(a, b) if is(&b, 0.0) => *a,
            Sub(a, b) if is(&a, 0.0) => Neg(b),
            Mul(a, b) if is(&a, 0.0) || is(&b, 0.0) => Num(0.0),
            Mul(a, b) if is(&a, 1.0) => *b,
            Mul(a, b) if is(&b, 1.0) => *a,
            Div(a, b) if is(&a, 0.0) && !is(&b, 0.0) => Num(0.0),
            Neg(a) if is(&a, 0.0) => Num(0.0),
            e => e,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(k) => write!(f, "x{k}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(g, a) => write!(f, "{}({a})", g.name()),
        }
    }
}
