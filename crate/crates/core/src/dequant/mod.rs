//! Classical, deformed and tropical semantics of the language.
//!
//! For `t` in `(0, 1)` the map `log_{1/t}` conjugates `(R_{>0}, +, *)` to the
//! deformed semifield `(R, ⊕_t, +)` with
//! `x ⊕_t y = log_{1/t}(t^{-x} + t^{-y})`. As `t -> 0` this converges to
//! `(R, max, +)`. Dequantization replaces a term by its max-plus skeleton:
//! sums become maxima, products become sums, powers become scalings and
//! every positive constant becomes `0`.

mod tropical;

use thiserror::Error;

use crate::formula::{Formula, FormulaError, ParameterEnvironment, Relation, Term};

pub use tropical::{
    dequantize_formula, dequantize_term, eval_tropical_formula, eval_tropical_term, TropicalFormula,
    TropicalTerm,
};

/// Default absolute tolerance for comparing sides of an atom.
pub const DEFAULT_TAU_EQ: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DequantError {
    #[error("formula contains a negation; only positive formulas can be dequantized")]
    NonPositiveFormula,
    #[error("formula has quantifiers; membership is only defined for quantifier-free formulas")]
    QuantifiedFormula,
    #[error("deformation parameter t = {0} is outside (0, 1)")]
    InvalidT(f64),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

pub type Result<T> = std::result::Result<T, DequantError>;

/// `-ln t`, the scale that turns natural logarithms into `log_{1/t}`.
pub fn log_scale(t: f64) -> Result<f64> {
    if t > 0.0 && t < 1.0 {
        Ok(-t.ln())
    } else {
        Err(DequantError::InvalidT(t))
    }
}

/// `x ⊕_t y` given `scale = -ln t`, in the overflow-free form
/// `max(x, y) + log_{1/t}(1 + t^{|x - y|})`.
pub fn oplus_t(x: f64, y: f64, scale: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return y;
    }
    if y == f64::NEG_INFINITY {
        return x;
    }
    let m = x.max(y);
    m + (-(x - y).abs() * scale).exp().ln_1p() / scale
}

fn point_value(point: &[f64], i: usize) -> std::result::Result<f64, FormulaError> {
    point.get(i).copied().ok_or(FormulaError::DimensionTooSmall { needed: i + 1, got: point.len() })
}

fn power_of_log(v: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        0.0
    } else {
        alpha * v
    }
}

/// Value of `term` at a point of the open orthant.
pub fn eval_classical(term: &Term, point: &[f64], env: &ParameterEnvironment) -> Result<f64> {
    Ok(match term {
        Term::Var(i) => point_value(point, *i)?,
        Term::Param(p) => env.get(p)?,
        Term::Const(c) => *c,
        Term::Sum(a, b) => eval_classical(a, point, env)? + eval_classical(b, point, env)?,
        Term::Product(a, b) => eval_classical(a, point, env)? * eval_classical(b, point, env)?,
        Term::Power(a, e) => eval_classical(a, point, env)?.powf(*e),
    })
}

/// Value of `term` in the deformed semifield `R^t` at a point of `R^n`.
///
/// Constants are read through `log_{1/t}`.
pub fn eval_t(term: &Term, point: &[f64], t: f64, env: &ParameterEnvironment) -> Result<f64> {
    let scale = log_scale(t)?;
    eval_scaled(term, point, scale, env)
}

/// [`eval_t`] with `scale = -ln t` precomputed.
pub fn eval_scaled(term: &Term, point: &[f64], scale: f64, env: &ParameterEnvironment) -> Result<f64> {
    Ok(match term {
        Term::Var(i) => point_value(point, *i)?,
        Term::Param(p) => env.get(p)?.ln() / scale,
        Term::Const(c) => c.ln() / scale,
        Term::Sum(a, b) => oplus_t(eval_scaled(a, point, scale, env)?, eval_scaled(b, point, scale, env)?, scale),
        Term::Product(a, b) => eval_scaled(a, point, scale, env)? + eval_scaled(b, point, scale, env)?,
        Term::Power(a, e) => power_of_log(eval_scaled(a, point, scale, env)?, *e),
    })
}

/// Compares two values under `rel` with absolute tolerance `tau`.
pub fn compare_with_tolerance(rel: Relation, lhs: f64, rhs: f64, tau: f64) -> bool {
    if lhs == rhs {
        return true;
    }
    match rel {
        Relation::Eq => (lhs - rhs).abs() <= tau,
        Relation::Leq => lhs <= rhs + tau,
    }
}

fn eval_connectives(
    f: &Formula,
    atom: &mut impl FnMut(Relation, &Term, &Term) -> Result<bool>,
) -> Result<bool> {
    match f {
        Formula::Atom { rel, lhs, rhs } => atom(*rel, lhs, rhs),
        Formula::And(fs) => {
            for g in fs {
                if !eval_connectives(g, atom)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::Or(fs) => {
            for g in fs {
                if eval_connectives(g, atom)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Not(g) => Ok(!eval_connectives(g, atom)?),
        Formula::Exists(..) | Formula::Forall(..) => Err(DequantError::QuantifiedFormula),
    }
}

/// Truth value of a quantifier-free formula in the deformed semantics.
pub fn eval_formula_t(
    f: &Formula,
    point: &[f64],
    t: f64,
    env: &ParameterEnvironment,
    tau: f64,
) -> Result<bool> {
    let scale = log_scale(t)?;
    eval_connectives(f, &mut |rel, l, r| {
        Ok(compare_with_tolerance(rel, eval_scaled(l, point, scale, env)?, eval_scaled(r, point, scale, env)?, tau))
    })
}

/// Truth value of a quantifier-free formula on `(R_{>0})^n`.
///
/// Equalities hold when `|u - v| <= eta * max(u, v)`; inequalities are exact.
pub fn eval_formula_classical(f: &Formula, point: &[f64], env: &ParameterEnvironment, eta: f64) -> Result<bool> {
    eval_connectives(f, &mut |rel, l, r| {
        let (u, v) = (eval_classical(l, point, env)?, eval_classical(r, point, env)?);
        Ok(match rel {
            Relation::Eq => u == v || (u - v).abs() <= eta * u.max(v),
            Relation::Leq => u <= v,
        })
    })
}

/// Multiplicative constant `C` with `U_t <= U_0 + log_{1/t} C`, following
/// the structural recursion: variables give 1, a constant `a` gives `a`,
/// `v^α` gives `C_v^α`, products multiply and sums give `2 max(C_v, C_w)`.
///
/// The matching lower bound `U_0 <= U_t` needs every constant `>= 1` and
/// every exponent `>= 0`; see [`sandwich_bounds`] for the general case.
pub fn sandwich_constant(term: &Term, env: &ParameterEnvironment) -> Result<f64> {
    Ok(match term {
        Term::Var(_) => 1.0,
        Term::Param(p) => env.get(p)?,
        Term::Const(c) if *c > 0.0 => *c,
        Term::Const(_) => 1.0,
        Term::Power(a, e) => sandwich_constant(a, env)?.powf(*e),
        Term::Product(a, b) => sandwich_constant(a, env)? * sandwich_constant(b, env)?,
        Term::Sum(a, b) => 2.0 * sandwich_constant(a, env)?.max(sandwich_constant(b, env)?),
    })
}

/// Two-sided constants `(lo, hi)` with
/// `U_0 + log_{1/t} lo <= U_t <= U_0 + log_{1/t} hi` for every `t` and
/// every point, valid for arbitrary positive constants and real exponents.
pub fn sandwich_bounds(term: &Term, env: &ParameterEnvironment) -> Result<(f64, f64)> {
    Ok(match term {
        Term::Var(_) => (1.0, 1.0),
        Term::Param(p) => {
            let a = env.get(p)?;
            (a, a)
        }
        Term::Const(c) if *c > 0.0 => (*c, *c),
        Term::Const(_) => (1.0, 1.0),
        Term::Power(a, e) => {
            let (lo, hi) = sandwich_bounds(a, env)?;
            if *e >= 0.0 {
                (lo.powf(*e), hi.powf(*e))
            } else {
                (hi.powf(*e), lo.powf(*e))
            }
        }
        Term::Product(a, b) => {
            let (la, ha) = sandwich_bounds(a, env)?;
            let (lb, hb) = sandwich_bounds(b, env)?;
            (la * lb, ha * hb)
        }
        Term::Sum(a, b) => {
            let (la, ha) = sandwich_bounds(a, env)?;
            let (lb, hb) = sandwich_bounds(b, env)?;
            (la.min(lb), 2.0 * ha.max(hb))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, parse_term};

    fn env(pairs: &[(&str, f64)]) -> ParameterEnvironment {
        ParameterEnvironment::from_pairs(pairs.iter().map(|(k, v)| (*k, *v))).unwrap()
    }

    #[test]
    fn classical_examples() {
        let e = ParameterEnvironment::new();
        assert_eq!(eval_classical(&parse_term("x1*x2").unwrap(), &[2.0, 3.0], &e).unwrap(), 6.0);
        assert_eq!(eval_classical(&parse_term("x1^0.5").unwrap(), &[4.0], &e).unwrap(), 2.0);
        // 2^2 + 3^2 + 27/4 = 79/4
        let lhs = parse_term("x1^2 + x2^2 + a1").unwrap();
        let v = eval_classical(&lhs, &[2.0, 3.0], &env(&[("a1", 6.75)])).unwrap();
        assert_eq!(v, 79.0 / 4.0);
    }

    #[test]
    fn deformed_examples() {
        let e = ParameterEnvironment::new();
        let v = eval_t(&parse_term("x1 + x2").unwrap(), &[0.0, 0.0], 0.1, &e).unwrap();
        assert!((v - 2f64.log10()).abs() < 1e-15);
        for t in [0.5, 0.1, 1e-8] {
            let v = eval_t(&parse_term("x1*x2").unwrap(), &[1.0, 2.0], t, &e).unwrap();
            assert_eq!(v, 3.0);
        }
        let v = eval_t(&parse_term("a").unwrap(), &[], 0.1, &env(&[("a", 5.0)])).unwrap();
        assert!((v - 5f64.log10()).abs() < 1e-15);
    }

    #[test]
    fn deformed_sum_does_not_overflow() {
        let e = ParameterEnvironment::new();
        let v = eval_t(&parse_term("x1 + x2").unwrap(), &[800.0, 799.0], 0.1, &e).unwrap();
        assert!((v - (800.0 + (1.0 + 0.1f64).log10())).abs() < 1e-12);
        assert!(eval_t(&parse_term("x1").unwrap(), &[1.0], 1.0, &e).is_err());
        assert!(eval_t(&parse_term("x1").unwrap(), &[1.0], 0.0, &e).is_err());
    }

    #[test]
    fn unknown_parameter_and_short_point_are_errors() {
        let e = ParameterEnvironment::new();
        assert!(eval_classical(&parse_term("b").unwrap(), &[], &e).is_err());
        assert!(eval_classical(&parse_term("x3").unwrap(), &[1.0], &e).is_err());
    }

    #[test]
    fn sandwich_constant_examples() {
        let e = env(&[("a1", 5.0)]);
        assert_eq!(sandwich_constant(&parse_term("x1").unwrap(), &e).unwrap(), 1.0);
        assert_eq!(sandwich_constant(&parse_term("a1").unwrap(), &e).unwrap(), 5.0);
        assert_eq!(sandwich_constant(&parse_term("x1 + x2").unwrap(), &e).unwrap(), 2.0);
        assert_eq!(sandwich_constant(&parse_term("(x1 + a1)^2").unwrap(), &e).unwrap(), 100.0);
    }

    #[test]
    fn formula_t_examples() {
        let e = env(&[("a1", 6.75), ("a2", 4.0), ("a3", 6.0)]);
        let circle = parse_formula("x1^2 + x2^2 + a1 = a2*x1 + a3*x2").unwrap();
        // (2, 3 + 5/2) lies on the circle; its image lies on the amoeba
        let t: f64 = 0.01;
        let p = [2f64.ln() / -t.ln(), 5.5f64.ln() / -t.ln()];
        assert!(eval_formula_t(&circle, &p, t, &e, 1e-12).unwrap());
        assert!(!eval_formula_t(&circle, &[0.0, 0.0], t, &e, 1e-12).unwrap());
        let q = parse_formula("E x2 . x1 = x2").unwrap();
        assert_eq!(eval_formula_t(&q, &[0.0], t, &e, 1e-9), Err(DequantError::QuantifiedFormula));
        let taut = parse_formula("x1 + a2 = x1 + a2").unwrap();
        assert!(eval_formula_t(&taut, &[3.0], t, &e, 0.0).unwrap());
    }

    #[test]
    fn classical_thickening() {
        let f = parse_formula("x1 = a1").unwrap();
        let e = env(&[("a1", 2.0)]);
        assert!(eval_formula_classical(&f, &[2.001], &e, 1e-3).unwrap());
        assert!(!eval_formula_classical(&f, &[2.01], &e, 1e-3).unwrap());
        let g = parse_formula("!(x1 <= a1)").unwrap();
        assert!(eval_formula_classical(&g, &[3.0], &e, 0.0).unwrap());
    }
}
