use std::fmt;

use crate::formula::{Formula, Relation, Term};

use super::{compare_with_tolerance, DequantError, Result};

/// Max-plus term.
#[derive(Debug, Clone, PartialEq)]
pub enum TropicalTerm {
    Var(usize),
    /// A dequantized positive constant.
    Zero,
    /// The dequantized literal `0`, i.e. the tropical additive identity.
    NegInf,
    Max(Vec<TropicalTerm>),
    Plus(Box<TropicalTerm>, Box<TropicalTerm>),
    Scale(f64, Box<TropicalTerm>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TropicalFormula {
    Atom { rel: Relation, lhs: TropicalTerm, rhs: TropicalTerm },
    And(Vec<TropicalFormula>),
    Or(Vec<TropicalFormula>),
    Exists(usize, Box<TropicalFormula>),
    Forall(usize, Box<TropicalFormula>),
}

fn collect_summands<'a>(term: &'a Term, out: &mut Vec<&'a Term>) {
    match term {
        Term::Sum(a, b) => {
            collect_summands(a, out);
            collect_summands(b, out);
        }
        other => out.push(other),
    }
}

fn plus(a: TropicalTerm, b: TropicalTerm) -> TropicalTerm {
    match (a, b) {
        (TropicalTerm::NegInf, _) | (_, TropicalTerm::NegInf) => TropicalTerm::NegInf,
        (TropicalTerm::Zero, x) | (x, TropicalTerm::Zero) => x,
        (a, b) => TropicalTerm::Plus(Box::new(a), Box::new(b)),
    }
}

fn scale(c: f64, a: TropicalTerm) -> TropicalTerm {
    match a {
        TropicalTerm::Zero => TropicalTerm::Zero,
        a if c == 1.0 => a,
        a => TropicalTerm::Scale(c, Box::new(a)),
    }
}

/// Max-plus skeleton of a term.
///
/// Nested sums become a single `Max`; identity operations introduced by
/// constants are folded, nothing else is simplified.
pub fn dequantize_term(term: &Term) -> TropicalTerm {
    match term {
        Term::Var(i) => TropicalTerm::Var(*i),
        Term::Param(_) => TropicalTerm::Zero,
        Term::Const(c) if *c > 0.0 => TropicalTerm::Zero,
        Term::Const(_) => TropicalTerm::NegInf,
        Term::Sum(..) => {
            let mut parts = Vec::new();
            collect_summands(term, &mut parts);
            let args: Vec<_> = parts
                .into_iter()
                .map(dequantize_term)
                .filter(|t| *t != TropicalTerm::NegInf)
                .collect();
            match args.len() {
                0 => TropicalTerm::NegInf,
                1 => args.into_iter().next().unwrap(),
                _ => TropicalTerm::Max(args),
            }
        }
        Term::Product(a, b) => plus(dequantize_term(a), dequantize_term(b)),
        Term::Power(a, e) => scale(*e, dequantize_term(a)),
    }
}

/// Applies [`dequantize_term`] to every atom of a positive formula.
pub fn dequantize_formula(f: &Formula) -> Result<TropicalFormula> {
    Ok(match f {
        Formula::Atom { rel, lhs, rhs } => {
            TropicalFormula::Atom { rel: *rel, lhs: dequantize_term(lhs), rhs: dequantize_term(rhs) }
        }
        Formula::And(fs) => TropicalFormula::And(fs.iter().map(dequantize_formula).collect::<Result<_>>()?),
        Formula::Or(fs) => TropicalFormula::Or(fs.iter().map(dequantize_formula).collect::<Result<_>>()?),
        Formula::Not(_) => return Err(DequantError::NonPositiveFormula),
        Formula::Exists(v, g) => TropicalFormula::Exists(*v, Box::new(dequantize_formula(g)?)),
        Formula::Forall(v, g) => TropicalFormula::Forall(*v, Box::new(dequantize_formula(g)?)),
    })
}

/// Max-plus value of `tt` at `point`. Missing coordinates panic.
pub fn eval_tropical_term(tt: &TropicalTerm, point: &[f64]) -> f64 {
    match tt {
        TropicalTerm::Var(i) => point[*i],
        TropicalTerm::Zero => 0.0,
        TropicalTerm::NegInf => f64::NEG_INFINITY,
        TropicalTerm::Max(args) => args.iter().map(|a| eval_tropical_term(a, point)).fold(f64::NEG_INFINITY, f64::max),
        TropicalTerm::Plus(a, b) => eval_tropical_term(a, point) + eval_tropical_term(b, point),
        TropicalTerm::Scale(c, a) => {
            if *c == 0.0 {
                0.0
            } else {
                c * eval_tropical_term(a, point)
            }
        }
    }
}

/// Truth value of a quantifier-free tropical formula at `point`.
pub fn eval_tropical_formula(f: &TropicalFormula, point: &[f64], tau: f64) -> Result<bool> {
    Ok(match f {
        TropicalFormula::Atom { rel, lhs, rhs } => {
            compare_with_tolerance(*rel, eval_tropical_term(lhs, point), eval_tropical_term(rhs, point), tau)
        }
        TropicalFormula::And(fs) => {
            for g in fs {
                if !eval_tropical_formula(g, point, tau)? {
                    return Ok(false);
                }
            }
            true
        }
        TropicalFormula::Or(fs) => {
            for g in fs {
                if eval_tropical_formula(g, point, tau)? {
                    return Ok(true);
                }
            }
            false
        }
        TropicalFormula::Exists(..) | TropicalFormula::Forall(..) => return Err(DequantError::QuantifiedFormula),
    })
}

impl TropicalTerm {
    pub fn arity(&self) -> usize {
        match self {
            TropicalTerm::Var(i) => i + 1,
            TropicalTerm::Zero | TropicalTerm::NegInf => 0,
            TropicalTerm::Max(args) => args.iter().map(|a| a.arity()).max().unwrap_or(0),
            TropicalTerm::Plus(a, b) => a.arity().max(b.arity()),
            TropicalTerm::Scale(_, a) => a.arity(),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            TropicalTerm::Var(i) => write!(f, "x{}", i + 1),
            TropicalTerm::Zero => write!(f, "0"),
            TropicalTerm::NegInf => write!(f, "-inf"),
            TropicalTerm::Max(args) => {
                write!(f, "max(")?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    a.fmt_prec(f, 0)?;
                }
                write!(f, ")")
            }
            TropicalTerm::Plus(a, b) => {
                if prec > 0 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 0)?;
                write!(f, " + ")?;
                b.fmt_prec(f, 1)?;
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            TropicalTerm::Scale(c, a) => {
                write!(f, "{c}*")?;
                a.fmt_prec(f, 1)
            }
        }
    }
}

impl fmt::Display for TropicalTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl TropicalFormula {
    pub fn arity(&self) -> usize {
        match self {
            TropicalFormula::Atom { lhs, rhs, .. } => lhs.arity().max(rhs.arity()),
            TropicalFormula::And(fs) | TropicalFormula::Or(fs) => fs.iter().map(|g| g.arity()).max().unwrap_or(0),
            TropicalFormula::Exists(v, g) | TropicalFormula::Forall(v, g) => g.arity().max(v + 1),
        }
    }

    /// Atoms in left-to-right order.
    pub fn atoms(&self) -> Vec<(Relation, &TropicalTerm, &TropicalTerm)> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<(Relation, &'a TropicalTerm, &'a TropicalTerm)>) {
        match self {
            TropicalFormula::Atom { rel, lhs, rhs } => out.push((*rel, lhs, rhs)),
            TropicalFormula::And(fs) | TropicalFormula::Or(fs) => fs.iter().for_each(|g| g.collect_atoms(out)),
            TropicalFormula::Exists(_, g) | TropicalFormula::Forall(_, g) => g.collect_atoms(out),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, fs: &[TropicalFormula], sep: &str, inner: u8, paren: bool| {
            if paren {
                write!(f, "(")?;
            }
            for (k, g) in fs.iter().enumerate() {
                if k > 0 {
                    write!(f, " {sep} ")?;
                }
                g.fmt_prec(f, inner)?;
            }
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        };
        match self {
            TropicalFormula::Atom { rel, lhs, rhs } => write!(f, "{lhs} {rel} {rhs}"),
            TropicalFormula::Or(fs) => list(f, fs, "|", 2, prec >= 2),
            TropicalFormula::And(fs) => list(f, fs, "&", 3, prec >= 3),
            TropicalFormula::Exists(v, g) | TropicalFormula::Forall(v, g) => {
                let q = if matches!(self, TropicalFormula::Exists(..)) { "E" } else { "A" };
                if prec > 0 {
                    write!(f, "(")?;
                }
                write!(f, "{q} x{} . ", v + 1)?;
                g.fmt_prec(f, 0)?;
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for TropicalFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}
