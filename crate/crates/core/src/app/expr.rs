//! Arithmetic expressions in `x` and `y` for analytic fields.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('+' | '-') unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'x' | 'y' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func  := 'sin' | 'cos' | 'exp'
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so
//! `-2^2 = -4` and `2^3^2 = 512`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser { src, pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Y => y,
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Expr::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Expr::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Expr::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Expr::Pow(a, b) => a.eval(x, y).powf(b.eval(x, y)),
            Expr::Call(f, a) => {
                let v = a.eval(x, y);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                }
            }
        }
    }

    /// The value if the expression does not depend on `x` or `y`.
    pub fn constant(&self) -> Option<f64> {
        match self {
            Expr::X | Expr::Y => None,
            Expr::Num(v) => Some(*v),
            Expr::Neg(a) | Expr::Call(_, a) => a.constant().map(|_| self.eval(0.0, 0.0)),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.constant().and(b.constant()).map(|_| self.eval(0.0, 0.0))
            }
        }
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "({v})"),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::X => write!(f, "x"),
            Expr::Y => write!(f, "y"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => {
                let name = match func {
                    Func::Sin => "sin",
                    Func::Cos => "cos",
                    Func::Exp => "exp",
                };
                write!(f, "{name}({a})")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Expression {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    /// Consume `c` after optional whitespace.
    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                let func = match name {
                    "x" => return Ok(Expr::X),
                    "y" => return Ok(Expr::Y),
                    "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    _ => {
                        self.pos = start;
                        return Err(self.error(&format!("unknown identifier '{name}'")));
                    }
                };
                if !self.eat('(') {
                    return Err(self.error(&format!("expected '(' after '{name}'")));
                }
                let arg = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Some(c) => Err(self.error(&format!("unexpected character '{c}'"))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while matches!(p.peek(), Some(c) if c.is_ascii_digit()) {
                p.pos += 1;
            }
        };
        digits(self);
        if self.peek() == Some('.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                digits(self);
            } else {
                self.pos = mark;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>().map(Expr::Num).map_err(|_| Error::Expression {
            offset: start,
            message: format!("malformed number '{text}'"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn ev(s: &str) -> f64 {
        Expr::parse(s).unwrap().eval(0.3, -1.7)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3"), 7.0);
        assert_eq!(ev("(1 + 2) * 3"), 9.0);
        assert_eq!(ev("8 / 4 / 2"), 1.0);
        assert_eq!(ev("10 - 4 - 3"), 3.0);
        assert_eq!(ev("2^3^2"), 512.0);
        assert_eq!(ev("-2^2"), -4.0);
        assert_eq!(ev("2*-3"), -6.0);
        assert_eq!(ev("2^-1"), 0.5);
    }

    #[test]
    fn variables_functions_and_constants() {
        let (x, y) = (0.3, -1.7f64);
        assert_eq!(ev("x"), x);
        assert_eq!(ev("y"), y);
        assert_eq!(ev("pi"), PI);
        assert!((ev("sin(2*pi*x) * cos(y) + exp(-x^2)") - ((2.0 * PI * x).sin() * y.cos() + (-x * x).exp())).abs() < 1e-15);
        assert_eq!(ev("1.5e2 + .5 + 2."), 152.5);
        assert_eq!(ev("  3\t*\n2 "), 6.0);
    }

    #[test]
    fn errors_carry_offsets() {
        let cases = [("1 +", 3), ("foo(1)", 0), ("sin 1", 4), ("(1 + 2", 6), ("1 2", 2), ("2 $ 3", 2), ("", 0)];
        for (src, offset) in cases {
            match Expr::parse(src) {
                Err(Error::Expression { offset: o, .. }) => assert_eq!(o, offset, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn constant_folding_detects_dependence() {
        assert_eq!(Expr::parse("2 * pi").unwrap().constant(), Some(2.0 * PI));
        assert_eq!(Expr::parse("2 * x").unwrap().constant(), None);
        assert_eq!(Expr::parse("-exp(0)").unwrap().constant(), Some(-1.0));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-10.0f64..10.0).prop_map(|v| Expr::Num((v * 8.0).round() / 8.0)),
            Just(Expr::X),
            Just(Expr::Y),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                inner.prop_map(|a| Expr::Call(Func::Sin, Box::new(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_round_trips(e in arb_expr(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let back = Expr::parse(&e.to_string()).unwrap();
            let (a, b) = (e.eval(x, y), back.eval(x, y));
            prop_assert!(a == b || (a.is_nan() && b.is_nan()));
        }
    }
}
