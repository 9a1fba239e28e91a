//! Expressions in ξ, ψ-classes and boundary classes.
//!
//! Grammar, loosest binding first:
//!   sum    := term (('+' | '-') term)*
//!   term   := unary ('*' unary)*
//!   unary  := '-' unary | power
//!   power  := atom ('^' unary)?        right-associative, integer exponent
//!   atom   := number | number '/' number | 'xi' | 'psi(' int ')'
//!           | 'D(' int (',' int)* (';' int)? ')' | 'D()' | '(' sum ')'

use std::fmt;

use num::{BigInt, BigRational, One, Zero};
use strata::degeneration_graph::EnhancedProfile;
use strata::taut_ring::TautClass;
use strata::{GeneralisedStratum, Result as StrataResult};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(BigRational),
    Xi,
    Psi(u32),
    D(Vec<usize>, usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
}

/// A syntax error at a 1-based column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { column: self.pos + 1, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected an integer");
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("digits are ASCII");
        Ok(text.parse().expect("digits parse"))
    }

    fn small(&mut self) -> Result<usize, ParseError> {
        let at = self.pos;
        let n = self.integer()?;
        usize::try_from(n).or_else(|_| {
            self.pos = at;
            self.err("integer out of range")
        })
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.term()?;
        loop {
            if self.eat(b'+') {
                e = Expr::Add(Box::new(e), Box::new(self.term()?));
            } else if self.eat(b'-') {
                e = Expr::Sub(Box::new(e), Box::new(self.term()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.unary()?;
        while self.eat(b'*') {
            e = Expr::Mul(Box::new(e), Box::new(self.unary()?));
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        self.skip_ws();
        let at = self.pos;
        let exp = self.unary()?;
        match constant(&exp).and_then(|c| c.is_integer().then(|| c.to_integer())).and_then(|n| u32::try_from(n).ok()) {
            Some(k) => Ok(Expr::Pow(Box::new(base), k)),
            None => {
                self.pos = at;
                self.err("exponent must be a non-negative integer")
            }
        }
    }

    fn word(&mut self) -> &'a [u8] {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let p = self.integer()?;
                // A slash directly after the numerator makes a rational literal.
                if self.src.get(self.pos) == Some(&b'/') {
                    self.pos += 1;
                    let at = self.pos;
                    let q = self.integer()?;
                    if q.is_zero() {
                        self.pos = at;
                        return self.err("zero denominator");
                    }
                    return Ok(Expr::Num(BigRational::new(p, q)));
                }
                Ok(Expr::Num(BigRational::from_integer(p)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let at = self.pos;
                match self.word() {
                    b"xi" => Ok(Expr::Xi),
                    b"psi" => {
                        self.expect(b'(')?;
                        let i = self.small()?;
                        self.expect(b')')?;
                        u32::try_from(i).map(Expr::Psi).or_else(|_| self.err("leg out of range"))
                    }
                    b"D" => {
                        self.expect(b'(')?;
                        let mut profile = Vec::new();
                        let mut component = 0;
                        if !self.eat(b')') {
                            if self.peek() != Some(b';') {
                                profile.push(self.small()?);
                                while self.eat(b',') {
                                    profile.push(self.small()?);
                                }
                            }
                            if self.eat(b';') {
                                component = self.small()?;
                            }
                            self.expect(b')')?;
                        }
                        Ok(Expr::D(profile, component))
                    }
                    w => {
                        self.pos = at;
                        self.err(format!("unknown name '{}'", String::from_utf8_lossy(w)))
                    }
                }
            }
            Some(c) => self.err(format!("unexpected '{}'", c as char)),
            None => self.err("unexpected end of expression"),
        }
    }
}

/// The value of an expression without classes.
fn constant(e: &Expr) -> Option<BigRational> {
    Some(match e {
        Expr::Num(n) => n.clone(),
        Expr::Add(a, b) => constant(a)? + constant(b)?,
        Expr::Sub(a, b) => constant(a)? - constant(b)?,
        Expr::Mul(a, b) => constant(a)? * constant(b)?,
        Expr::Neg(a) => -constant(a)?,
        Expr::Pow(a, k) => num::pow(constant(a)?, *k as usize),
        Expr::Xi | Expr::Psi(_) | Expr::D(..) => return None,
    })
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.sum()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// The class of `e` in the tautological ring of `x`.
pub fn to_class(x: &GeneralisedStratum, e: &Expr) -> StrataResult<TautClass> {
    Ok(match e {
        Expr::Num(n) => x.one().scaled(n),
        Expr::Xi => (*x.xi()?).clone(),
        Expr::Psi(i) => x.psi(*i)?,
        Expr::D(p, c) => {
            let ordered = x.ordered_profile(p).ok_or_else(|| strata::StrataError::UnknownProfile(p.clone()))?;
            x.taut_from_graph(&EnhancedProfile::new(ordered, *c))?
        }
        Expr::Add(a, b) => x.add(&to_class(x, a)?, &to_class(x, b)?)?,
        Expr::Sub(a, b) => x.sub(&to_class(x, a)?, &to_class(x, b)?)?,
        Expr::Mul(a, b) => x.mul(&to_class(x, a)?, &to_class(x, b)?)?,
        Expr::Neg(a) => to_class(x, a)?.scaled(&-BigRational::one()),
        Expr::Pow(a, k) => x.pow(&to_class(x, a)?, *k)?,
    })
}
