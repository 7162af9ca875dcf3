//! Terms and formulas of the ordered semiring language with real powers.
//!
//! The language has no subtraction and no division: terms are built from
//! variables, named positive parameters, non-negative literals, `+`, `*`
//! and `^` with a real exponent. Formulas combine `=` / `<=` atoms with
//! `&`, `|`, `!` and the quantifiers `E` / `A`.
//!
//! Mixed-sign polynomial input goes through [`normalize_polynomial`], which
//! moves negative monomials across the relation.

mod normalize;
mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use normalize::normalize_polynomial;
pub use parser::{parse_formula, parse_term};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulaError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("negative literal at byte {pos}: the language has no subtraction, use normalize_polynomial")]
    NegativeLiteral { pos: usize },
    #[error("variable x{} is bound by a quantifier and also occurs free", .0 + 1)]
    BoundVariableClash(usize),
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("parameter `{name}` must be strictly positive, got {value}")]
    NonPositiveParameter { name: String, value: f64 },
    #[error("point has dimension {got} but the formula uses x{}", .needed)]
    DimensionTooSmall { needed: usize, got: usize },
    #[error("not a polynomial: {0}")]
    NotPolynomial(String),
}

pub type Result<T> = std::result::Result<T, FormulaError>;

/// A term of the language.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// `x{index+1}`.
    Var(usize),
    /// Named positive constant, resolved through a [`ParameterEnvironment`].
    Param(String),
    /// Literal constant. Always finite and `>= 0`; zero only arises as the
    /// empty side of a normalized polynomial relation.
    Const(f64),
    Sum(Box<Term>, Box<Term>),
    Product(Box<Term>, Box<Term>),
    /// Real power; the exponent is finite.
    Power(Box<Term>, f64),
}

#[allow(clippy::should_implement_trait)]
impl Term {
    pub fn var(index: usize) -> Self {
        Term::Var(index)
    }

    pub fn param(name: impl Into<String>) -> Self {
        Term::Param(name.into())
    }

    pub fn add(self, rhs: Term) -> Self {
        Term::Sum(Box::new(self), Box::new(rhs))
    }

    pub fn mul(self, rhs: Term) -> Self {
        Term::Product(Box::new(self), Box::new(rhs))
    }

    pub fn pow(self, exponent: f64) -> Self {
        Term::Power(Box::new(self), exponent)
    }

    /// Largest variable index + 1 (0 for closed terms).
    pub fn arity(&self) -> usize {
        match self {
            Term::Var(i) => i + 1,
            Term::Param(_) | Term::Const(_) => 0,
            Term::Sum(a, b) | Term::Product(a, b) => a.arity().max(b.arity()),
            Term::Power(a, _) => a.arity(),
        }
    }

    pub fn variables(&self, out: &mut BTreeSet<usize>) {
        match self {
            Term::Var(i) => {
                out.insert(*i);
            }
            Term::Param(_) | Term::Const(_) => {}
            Term::Sum(a, b) | Term::Product(a, b) => {
                a.variables(out);
                b.variables(out);
            }
            Term::Power(a, _) => a.variables(out),
        }
    }

    pub fn parameters(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Param(p) => {
                out.insert(p.clone());
            }
            Term::Var(_) | Term::Const(_) => {}
            Term::Sum(a, b) | Term::Product(a, b) => {
                a.parameters(out);
                b.parameters(out);
            }
            Term::Power(a, _) => a.parameters(out),
        }
    }

    /// Sum of a non-empty list, left associated.
    pub fn sum_of(terms: impl IntoIterator<Item = Term>) -> Option<Term> {
        terms.into_iter().reduce(Term::add)
    }

    /// Product of a non-empty list, left associated.
    pub fn product_of(terms: impl IntoIterator<Item = Term>) -> Option<Term> {
        terms.into_iter().reduce(Term::mul)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Eq,
    Leq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relation::Eq => f.write_str("="),
            Relation::Leq => f.write_str("<="),
        }
    }
}

/// A first-order formula.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Atom { rel: Relation, lhs: Term, rhs: Term },
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    Exists(usize, Box<Formula>),
    Forall(usize, Box<Formula>),
}

impl Formula {
    pub fn eq(lhs: Term, rhs: Term) -> Self {
        Formula::Atom { rel: Relation::Eq, lhs, rhs }
    }

    pub fn leq(lhs: Term, rhs: Term) -> Self {
        Formula::Atom { rel: Relation::Leq, lhs, rhs }
    }

    /// True iff no `Not` node occurs.
    pub fn is_positive(&self) -> bool {
        match self {
            Formula::Atom { .. } => true,
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(Formula::is_positive),
            Formula::Not(_) => false,
            Formula::Exists(_, f) | Formula::Forall(_, f) => f.is_positive(),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Atom { .. } => true,
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(Formula::is_quantifier_free),
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::Exists(..) | Formula::Forall(..) => false,
        }
    }

    pub fn free_variables(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<usize>, out: &mut BTreeSet<usize>) {
        match self {
            Formula::Atom { lhs, rhs, .. } => {
                let mut vars = BTreeSet::new();
                lhs.variables(&mut vars);
                rhs.variables(&mut vars);
                out.extend(vars.into_iter().filter(|v| !bound.contains(v)));
            }
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_free(bound, out);
                }
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                bound.push(*v);
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    fn bound_variables(&self, out: &mut BTreeSet<usize>) {
        match self {
            Formula::Atom { .. } => {}
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.bound_variables(out)),
            Formula::Not(f) => f.bound_variables(out),
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                out.insert(*v);
                f.bound_variables(out);
            }
        }
    }

    /// Checks that no quantified variable also occurs free.
    pub fn validate(&self) -> Result<()> {
        let free = self.free_variables();
        let mut bound = BTreeSet::new();
        self.bound_variables(&mut bound);
        match free.intersection(&bound).next() {
            Some(&v) => Err(FormulaError::BoundVariableClash(v)),
            None => Ok(()),
        }
    }

    /// Largest free or bound variable index + 1.
    pub fn arity(&self) -> usize {
        match self {
            Formula::Atom { lhs, rhs, .. } => lhs.arity().max(rhs.arity()),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(Formula::arity).max().unwrap_or(0),
            Formula::Not(f) => f.arity(),
            Formula::Exists(v, f) | Formula::Forall(v, f) => (v + 1).max(f.arity()),
        }
    }

    pub fn parameters(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |_, l, r| {
            l.parameters(&mut out);
            r.parameters(&mut out);
        });
        out
    }

    /// Calls `f` on every atom, in left-to-right order.
    pub fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(Relation, &'a Term, &'a Term)) {
        match self {
            Formula::Atom { rel, lhs, rhs } => f(*rel, lhs, rhs),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|g| g.visit_atoms(f)),
            Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => g.visit_atoms(f),
        }
    }

    pub fn equality_atoms(&self) -> Vec<(&Term, &Term)> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |rel, l, r| {
            if rel == Relation::Eq {
                out.push((l, r));
            }
        });
        out
    }
}

/// Values of the named parameters. All values are strictly positive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParameterEnvironment {
    values: BTreeMap<String, f64>,
}

impl ParameterEnvironment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Result<Self> {
        self.insert(name, value)?;
        Ok(self)
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        pairs.into_iter().try_fold(Self::new(), |env, (k, v)| env.with(k, v))
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) -> Result<()> {
        let name = name.into();
        if !(value.is_finite() && value > 0.0) {
            return Err(FormulaError::NonPositiveParameter { name, value });
        }
        self.values.insert(name, value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        self.values
            .get(name)
            .copied()
            .ok_or_else(|| FormulaError::UnboundParameter(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Errors if some parameter of `formula` is missing.
    pub fn check_covers(&self, formula: &Formula) -> Result<()> {
        formula.parameters().iter().try_for_each(|p| self.get(p).map(|_| ()))
    }
}

// Printing. The output re-parses to a structurally equal AST.

fn fmt_number(v: f64) -> String {
    format!("{v}")
}

impl Term {
    // 0 = sum, 1 = product, 2 = power/atom
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Term::Var(i) => write!(f, "x{}", i + 1),
            Term::Param(p) => f.write_str(p),
            Term::Const(c) => f.write_str(&fmt_number(*c)),
            Term::Sum(a, b) => {
                if prec > 0 {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 0)?;
                f.write_str(" + ")?;
                b.fmt_prec(f, 1)?;
                if prec > 0 {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Term::Product(a, b) => {
                if prec > 1 {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 1)?;
                f.write_str("*")?;
                b.fmt_prec(f, 2)?;
                if prec > 1 {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Term::Power(a, e) => {
                match **a {
                    Term::Var(_) | Term::Param(_) | Term::Const(_) => a.fmt_prec(f, 2)?,
                    _ => {
                        f.write_str("(")?;
                        a.fmt_prec(f, 0)?;
                        f.write_str(")")?;
                    }
                }
                write!(f, "^{}", fmt_number(*e))
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Formula {
    // 0 = top (quantifier bodies), 2 = disjunct, 3 = conjunct, 4 = negated operand
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Formula::Atom { rel, lhs, rhs } => {
                if prec >= 4 {
                    write!(f, "({lhs} {rel} {rhs})")
                } else {
                    write!(f, "{lhs} {rel} {rhs}")
                }
            }
            Formula::Or(fs) => fmt_joined(f, fs, " | ", prec >= 2, 2),
            Formula::And(fs) => fmt_joined(f, fs, " & ", prec >= 3, 3),
            Formula::Not(g) => {
                f.write_str("!")?;
                g.fmt_prec(f, 4)
            }
            Formula::Exists(v, g) | Formula::Forall(v, g) => {
                let q = if matches!(self, Formula::Exists(..)) { "E" } else { "A" };
                if prec > 0 {
                    f.write_str("(")?;
                }
                write!(f, "{q} x{} . ", v + 1)?;
                g.fmt_prec(f, 0)?;
                if prec > 0 {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

fn fmt_joined(
    f: &mut fmt::Formatter<'_>,
    items: &[Formula],
    sep: &str,
    paren: bool,
    child_prec: u8,
) -> fmt::Result {
    if paren {
        f.write_str("(")?;
    }
    for (k, item) in items.iter().enumerate() {
        if k > 0 {
            f.write_str(sep)?;
        }
        item.fmt_prec(f, child_prec)?;
    }
    if paren {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> Formula {
        parse_formula("x1^2 + x2^2 + a1 = a2*x1 + a3*x2").unwrap()
    }

    #[test]
    fn positivity() {
        assert!(circle().is_positive());
        assert!(!parse_formula("!(x1 <= a1)").unwrap().is_positive());
        let f = parse_formula("x1 <= a1 & (x2 <= a1 | x1 = x2)").unwrap();
        assert!(matches!(&f, Formula::And(v) if matches!(v[1], Formula::Or(_))));
        assert!(f.is_positive());
        assert!(!parse_formula("x1 <= a1 & E x2 . !(x2 <= x1)").unwrap().is_positive());
    }

    #[test]
    fn free_variables_examples() {
        assert_eq!(circle().free_variables(), BTreeSet::from([0, 1]));
        let f = Formula::Exists(1, Box::new(parse_formula("x1 <= x2").unwrap()));
        assert_eq!(f.free_variables(), BTreeSet::from([0]));
        let closed = parse_formula("E x1 . A x2 . x1 <= x2").unwrap();
        assert!(closed.free_variables().is_empty());
    }

    #[test]
    fn bound_and_free_clash_rejected() {
        let err = parse_formula("x1 <= a & E x1 . x1 = a").unwrap_err();
        assert_eq!(err, FormulaError::BoundVariableClash(0));
    }

    #[test]
    fn environment_rejects_non_positive() {
        assert!(ParameterEnvironment::new().with("a", 0.0).is_err());
        assert!(ParameterEnvironment::new().with("a", -1.0).is_err());
        assert!(ParameterEnvironment::new().with("a", f64::NAN).is_err());
        let env = ParameterEnvironment::from_pairs([("a1", 2.0)]).unwrap();
        assert_eq!(env.get("a1"), Ok(2.0));
        assert_eq!(env.get("b"), Err(FormulaError::UnboundParameter("b".into())));
        assert!(env.check_covers(&circle()).is_err());
    }

    #[test]
    fn printing_parenthesizes_structure() {
        let t = Term::var(0).add(Term::var(1).add(Term::var(2)));
        assert_eq!(t.to_string(), "x1 + (x2 + x3)");
        let t = Term::var(0).add(Term::var(1)).pow(0.5);
        assert_eq!(t.to_string(), "(x1 + x2)^0.5");
        let f = parse_formula("!(x1 <= a1)").unwrap();
        assert_eq!(f.to_string(), "!(x1 <= a1)");
        let f = parse_formula("x1 <= a & (E x2 . x2 = x1 | x1 = a)").unwrap();
        assert_eq!(f.to_string(), "x1 <= a & (E x2 . x2 = x1 | x1 = a)");
    }
}
