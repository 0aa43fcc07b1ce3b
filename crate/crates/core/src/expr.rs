//! Exact real constants given as small expressions, e.g. `"e^2"`, `"1/6"`,
//! `"sqrt(2)*e"`. They are kept symbolic and evaluated at whatever precision
//! the caller needs.

use std::fmt;
use std::str::FromStr;

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const GUARD_BITS: u32 = 32;

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Rational(Rational),
    Value(Float),
    E,
    Pi,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Sqrt(Box<Node>),
    Ln(Box<Node>),
    Exp(Box<Node>),
}

/// A real number kept as an expression tree over rationals, `e` and `pi`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactReal {
    src: String,
    node: Node,
}

impl ExactReal {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser { src, pos: 0 };
        let node = p.expr()?;
        p.skip_ws();
        if p.pos != src.len() {
            return Err(p.error("trailing input"));
        }
        Ok(ExactReal { src: src.trim().to_string(), node })
    }

    pub fn from_rational(q: Rational) -> Self {
        ExactReal { src: q.to_string(), node: Node::Rational(q) }
    }

    pub fn from_int(v: i64) -> Self {
        Self::from_rational(Rational::from(v))
    }

    /// Wraps an already computed value; it is used as is at every precision.
    pub fn from_float(v: Float) -> Self {
        let src = v.to_string_radix(10, None);
        ExactReal { src, node: Node::Value(v) }
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    /// The exact rational value, when the expression has one.
    pub fn as_rational(&self) -> Option<Rational> {
        fn go(n: &Node) -> Option<Rational> {
            Some(match n {
                Node::Rational(q) => q.clone(),
                Node::Neg(a) => -go(a)?,
                Node::Add(a, b) => go(a)? + go(b)?,
                Node::Sub(a, b) => go(a)? - go(b)?,
                Node::Mul(a, b) => go(a)? * go(b)?,
                Node::Div(a, b) => {
                    let d = go(b)?;
                    if d == 0 {
                        return None;
                    }
                    go(a)? / d
                }
                _ => return None,
            })
        }
        go(&self.node)
    }

    /// Value rounded to `prec` bits.
    pub fn eval(&self, prec: u32) -> Float {
        let v = eval(&self.node, prec + GUARD_BITS);
        Float::with_val(prec, v)
    }

    /// Natural log rounded to `prec` bits. Expressions of the form `e^q` and
    /// `exp(q)` are unwrapped so that `ln` of them is exact.
    pub fn ln(&self, prec: u32) -> Float {
        let w = prec + GUARD_BITS;
        let v = match &self.node {
            Node::E => Float::with_val(w, 1),
            Node::Exp(a) => eval(a, w),
            Node::Pow(b, q) if matches!(**b, Node::E) => eval(q, w),
            n => eval(n, w).ln(),
        };
        Float::with_val(prec, v)
    }
}

fn eval(n: &Node, w: u32) -> Float {
    match n {
        Node::Rational(q) => Float::with_val(w, q),
        Node::Value(v) => v.clone(),
        Node::E => Float::with_val(w, 1).exp(),
        Node::Pi => Float::with_val(w, Constant::Pi),
        Node::Neg(a) => -eval(a, w),
        Node::Add(a, b) => eval(a, w) + eval(b, w),
        Node::Sub(a, b) => eval(a, w) - eval(b, w),
        Node::Mul(a, b) => eval(a, w) * eval(b, w),
        Node::Div(a, b) => eval(a, w) / eval(b, w),
        Node::Pow(a, b) => {
            if let Node::Rational(q) = &**b {
                if q.denom() == &1u32 {
                    if let Some(k) = q.numer().to_i32() {
                        return Float::with_val(w, eval(a, w).pow(k));
                    }
                }
            }
            if matches!(**a, Node::E) {
                return eval(b, w).exp();
            }
            (eval(a, w).ln() * eval(b, w)).exp()
        }
        Node::Sqrt(a) => eval(a, w).sqrt(),
        Node::Ln(a) => eval(a, w).ln(),
        Node::Exp(a) => eval(a, w).exp(),
    }
}

fn fmt_node(n: &Node) -> String {
    match n {
        Node::Rational(q) => q.to_string(),
        Node::Value(v) => v.to_string_radix(10, None),
        Node::E => "e".into(),
        Node::Pi => "pi".into(),
        Node::Neg(a) => format!("-({})", fmt_node(a)),
        Node::Add(a, b) => format!("({}+{})", fmt_node(a), fmt_node(b)),
        Node::Sub(a, b) => format!("({}-{})", fmt_node(a), fmt_node(b)),
        Node::Mul(a, b) => format!("({}*{})", fmt_node(a), fmt_node(b)),
        Node::Div(a, b) => format!("({}/{})", fmt_node(a), fmt_node(b)),
        Node::Pow(a, b) => format!("({})^({})", fmt_node(a), fmt_node(b)),
        Node::Sqrt(a) => format!("sqrt({})", fmt_node(a)),
        Node::Ln(a) => format!("ln({})", fmt_node(a)),
        Node::Exp(a) => format!("exp({})", fmt_node(a)),
    }
}

impl fmt::Display for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.src.is_empty() {
            write!(f, "{}", fmt_node(&self.node))
        } else {
            f.write_str(&self.src)
        }
    }
}

impl FromStr for ExactReal {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExactReal::parse(s)
    }
}

impl Serialize for ExactReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExactReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
            Num(f64),
        }
        let src = match Raw::deserialize(d)? {
            Raw::Str(s) => s,
            Raw::Int(i) => i.to_string(),
            Raw::Num(x) => format!("{x:?}"),
        };
        ExactReal::parse(&src).map_err(serde::de::Error::custom)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, reason: &str) -> Error {
        Error::Parse { input: self.src.to_string(), reason: format!("{reason} at byte {}", self.pos) }
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

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        self.skip_ws();
        let c = self.peek().ok_or_else(|| self.error("unexpected end"))?;
        if c == '(' {
            self.pos += 1;
            let n = self.expr()?;
            if !self.eat(')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(n);
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() {
            let start = self.pos;
            while matches!(self.peek(), Some(ch) if ch.is_ascii_alphanumeric() || ch == '_') {
                self.pos += 1;
            }
            let ident = &self.src[start..self.pos];
            return match ident {
                "e" => Ok(Node::E),
                "pi" => Ok(Node::Pi),
                "sqrt" | "ln" | "log" | "exp" => {
                    if !self.eat('(') {
                        return Err(self.error("expected `(`"));
                    }
                    let arg = Box::new(self.expr()?);
                    if !self.eat(')') {
                        return Err(self.error("expected `)`"));
                    }
                    Ok(match ident {
                        "sqrt" => Node::Sqrt(arg),
                        "exp" => Node::Exp(arg),
                        _ => Node::Ln(arg),
                    })
                }
                _ => Err(self.error(&format!("unknown identifier `{ident}`"))),
            };
        }
        Err(self.error(&format!("unexpected `{c}`")))
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
            self.pos += 1;
        }
        let mantissa = &self.src[start..self.pos];
        let mut exponent: i64 = 0;
        // scientific suffix only when digits follow, so `2*e` still reads the constant
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let mut q = self.pos + 1;
            if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                q += 1;
            }
            if q < bytes.len() && bytes[q].is_ascii_digit() {
                let exp_start = self.pos + 1;
                while q < bytes.len() && bytes[q].is_ascii_digit() {
                    q += 1;
                }
                exponent = self.src[exp_start..q].parse().map_err(|_| self.error("bad exponent"))?;
                self.pos = q;
            }
        }
        let (int_part, frac_part) = match mantissa.split_once('.') {
            Some((i, f)) => (i, f),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(self.error("bad number"));
        }
        let digits = format!("{int_part}{frac_part}");
        let numer: rug::Integer = digits.parse().map_err(|_| self.error("bad number"))?;
        let scale = exponent - frac_part.len() as i64;
        let ten = rug::Integer::from(10);
        let q = if scale >= 0 {
            Rational::from(numer * ten.pow(scale as u32))
        } else {
            Rational::from((numer, ten.pow((-scale) as u32)))
        };
        Ok(Node::Rational(q))
    }
}
