//! Mixed-sign polynomial relations to positive form.
//!
//! The input may use subtraction, rational coefficients, implicit
//! multiplication (`4x`, `2xy`), natural powers and parentheses. Variables
//! are `x`, `y`, `z`, `w` (indices 0..4) or `x1`, `x2`, .... Both sides are
//! expanded exactly over the rationals; monomials with negative coefficient
//! are moved to the other side.

use indexmap::IndexMap;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Formula, FormulaError, Relation, Result, Term};

type Monomial = Vec<u32>;

/// Polynomial with exact coefficients; keys keep first-appearance order.
#[derive(Debug, Clone, Default)]
struct Poly(IndexMap<Monomial, BigRational>);

fn trim(m: &[u32]) -> Monomial {
    let mut m = m.to_vec();
    while m.last() == Some(&0) {
        m.pop();
    }
    m
}

impl Poly {
    fn constant(c: BigRational) -> Self {
        let mut p = Poly::default();
        p.push(Vec::new(), c);
        p
    }

    fn variable(i: usize) -> Self {
        let mut m = vec![0; i + 1];
        m[i] = 1;
        let mut p = Poly::default();
        p.push(m, BigRational::one());
        p
    }

    fn push(&mut self, m: Monomial, c: BigRational) {
        let m = trim(&m);
        let entry = self.0.entry(m).or_insert_with(BigRational::zero);
        *entry += c;
    }

    fn add(mut self, other: &Poly, sign: i32) -> Self {
        for (m, c) in &other.0 {
            self.push(m.clone(), if sign < 0 { -c.clone() } else { c.clone() });
        }
        self
    }

    fn mul(&self, other: &Poly) -> Self {
        let mut out = Poly::default();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &other.0 {
                let n = ma.len().max(mb.len());
                let m: Monomial = (0..n)
                    .map(|k| ma.get(k).copied().unwrap_or(0) + mb.get(k).copied().unwrap_or(0))
                    .collect();
                out.push(m, ca * cb);
            }
        }
        out
    }

    fn pow(&self, e: u32) -> Self {
        let mut acc = Poly::constant(BigRational::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    LParen,
    RParen,
    Rel(Relation, bool),
}

fn not_poly(msg: impl Into<String>) -> FormulaError {
    FormulaError::NotPolynomial(msg.into())
}

fn decimal(lit: &str) -> Result<BigRational> {
    let (int, frac) = lit.split_once('.').unwrap_or((lit, ""));
    let digits = format!("{int}{frac}");
    let digits = if digits.is_empty() { "0".to_string() } else { digits };
    let num: BigInt = digits.parse().map_err(|_| not_poly(format!("bad number `{lit}`")))?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    Ok(BigRational::new(num, den))
}

fn lex(text: &str) -> Result<Vec<Tok>> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' | '-' | '*' | '^' | '/' | '(' | ')' => {
                out.push(match c {
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '^' => Tok::Caret,
                    '/' => Tok::Slash,
                    '(' => Tok::LParen,
                    _ => Tok::RParen,
                });
                i += 1;
            }
            '=' => {
                out.push(Tok::Rel(Relation::Eq, false));
                i += 1;
            }
            '<' | '>' if b.get(i + 1) == Some(&b'=') => {
                out.push(Tok::Rel(Relation::Leq, c == '>'));
                i += 2;
            }
            '0'..='9' | '.' => {
                let s = i;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                out.push(Tok::Num(decimal(&text[s..i])?));
            }
            'x' | 'y' | 'z' | 'w' => {
                i += 1;
                let s = i;
                while c == 'x' && i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                let idx = if i > s {
                    let k: usize = text[s..i].parse().map_err(|_| not_poly("variable index too large"))?;
                    if k == 0 {
                        return Err(not_poly("variables are numbered from x1"));
                    }
                    k - 1
                } else {
                    "xyzw".find(c).unwrap_or(0)
                };
                out.push(Tok::Var(idx));
            }
            _ => return Err(not_poly(format!("unexpected character `{c}` at byte {i}"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut sign = 1;
        if self.eat(&Tok::Minus) {
            sign = -1;
        } else {
            self.eat(&Tok::Plus);
        }
        let mut acc = Poly::default().add(&self.product()?, sign);
        loop {
            let sign = if self.eat(&Tok::Plus) {
                1
            } else if self.eat(&Tok::Minus) {
                -1
            } else {
                return Ok(acc);
            };
            acc = acc.add(&self.product()?, sign);
        }
    }

    fn product(&mut self) -> Result<Poly> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(&Tok::Star) || matches!(self.peek(), Some(Tok::Var(_) | Tok::LParen | Tok::Num(_))) {
                acc = acc.mul(&self.factor()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Poly> {
        let base = self.base()?;
        if !self.eat(&Tok::Caret) {
            return Ok(base);
        }
        match self.peek().cloned() {
            Some(Tok::Num(n)) if n.is_integer() && !n.is_negative() => {
                self.pos += 1;
                let e = n.to_integer().to_u32().ok_or_else(|| not_poly("exponent too large"))?;
                Ok(base.pow(e))
            }
            _ => Err(not_poly("exponents must be natural numbers")),
        }
    }

    fn base(&mut self) -> Result<Poly> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                if self.eat(&Tok::Slash) {
                    match self.peek().cloned() {
                        Some(Tok::Num(d)) if !d.is_zero() => {
                            self.pos += 1;
                            Ok(Poly::constant(n / d))
                        }
                        _ => Err(not_poly("division is only allowed between numeric literals")),
                    }
                } else {
                    Ok(Poly::constant(n))
                }
            }
            Some(Tok::Var(i)) => {
                self.pos += 1;
                Ok(Poly::variable(i))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let p = self.expr()?;
                if !self.eat(&Tok::RParen) {
                    return Err(not_poly("missing `)`"));
                }
                Ok(p)
            }
            other => Err(not_poly(format!("unexpected token {other:?}"))),
        }
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn monomial_term(m: &Monomial, coeff: &BigRational) -> Term {
    let mut factors = Vec::new();
    if !coeff.is_one() {
        factors.push(Term::Const(rational_to_f64(coeff)));
    }
    for (i, &e) in m.iter().enumerate() {
        match e {
            0 => {}
            1 => factors.push(Term::Var(i)),
            e => factors.push(Term::Var(i).pow(f64::from(e))),
        }
    }
    Term::product_of(factors).unwrap_or(Term::Const(1.0))
}

fn side(monomials: &[(Monomial, BigRational)]) -> Term {
    Term::sum_of(monomials.iter().map(|(m, c)| monomial_term(m, c))).unwrap_or(Term::Const(0.0))
}

/// Rewrites `p REL q` (rational coefficients, any signs) as an atom whose
/// two sides have only positive coefficients.
///
/// An empty side becomes the literal `0`.
pub fn normalize_polynomial(text: &str) -> Result<Formula> {
    let toks = lex(text)?;
    let rel_at = toks.iter().position(|t| matches!(t, Tok::Rel(..)));
    let (rel, swap, lhs_toks, rhs_toks) = match rel_at {
        Some(k) => {
            let Tok::Rel(rel, swap) = toks[k] else { unreachable!() };
            if toks[k + 1..].iter().any(|t| matches!(t, Tok::Rel(..))) {
                return Err(not_poly("more than one relation"));
            }
            (rel, swap, toks[..k].to_vec(), toks[k + 1..].to_vec())
        }
        None => return Err(not_poly("expected `=`, `<=` or `>=`")),
    };
    let parse_side = |toks: Vec<Tok>| -> Result<Poly> {
        let mut p = Parser { toks, pos: 0 };
        let poly = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(not_poly("unexpected trailing tokens"));
        }
        Ok(poly)
    };
    let (mut lhs, mut rhs) = (parse_side(lhs_toks)?, parse_side(rhs_toks)?);
    if swap {
        std::mem::swap(&mut lhs, &mut rhs);
    }
    let diff = lhs.add(&rhs, -1);
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (m, c) in diff.0 {
        if c.is_positive() {
            pos.push((m, c));
        } else if c.is_negative() {
            neg.push((m, -c));
        }
    }
    Ok(Formula::Atom { rel, lhs: side(&pos), rhs: side(&neg) })
}
