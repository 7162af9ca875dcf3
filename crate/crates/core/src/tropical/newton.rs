use std::collections::HashSet;

use crate::formula::{Formula, Term};
use crate::sphere::{self, DirectionCloud};

use super::{AffineForm, Constraint, PolyhedralComplex, Polyhedron, Result, TropicalError};

/// A support with one weight per exponent vector. The tropical polynomial
/// is `x -> max_ω (⟨ω, x⟩ + weight_ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonData {
    pub support: Vec<Vec<i64>>,
    pub weights: Vec<f64>,
}

impl NewtonData {
    pub fn new(support: Vec<Vec<i64>>, weights: Vec<f64>) -> Result<Self> {
        let dim = support.first().map(|w| w.len()).ok_or_else(|| TropicalError::InvalidNewtonData("empty support".into()))?;
        if weights.len() != support.len() {
            return Err(TropicalError::InvalidNewtonData("one weight per exponent vector required".into()));
        }
        if support.iter().any(|w| w.len() != dim) {
            return Err(TropicalError::InvalidNewtonData("exponent vectors of different lengths".into()));
        }
        let mut seen = HashSet::new();
        if let Some(w) = support.iter().find(|w| !seen.insert(*w)) {
            return Err(TropicalError::InvalidNewtonData(format!("duplicate exponent vector {w:?}")));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(TropicalError::InvalidNewtonData("non-finite weight".into()));
        }
        Ok(NewtonData { support, weights })
    }

    /// Zero-weight support of a polynomial equation written with positive
    /// coefficients on both sides.
    pub fn from_equation(f: &Formula, dim: usize) -> Result<Self> {
        let Formula::Atom { lhs, rhs, .. } = f else {
            return Err(TropicalError::InvalidNewtonData("expected a single polynomial equation".into()));
        };
        let mut support = Vec::new();
        for side in [lhs, rhs] {
            let mut terms = Vec::new();
            summands(side, &mut terms);
            for t in terms {
                let mut w = vec![0i64; dim];
                if monomial(t, &mut w)? {
                    support.push(w);
                }
            }
        }
        let n = support.len();
        NewtonData::new(support, vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.support[0].len()
    }

    fn form(&self, i: usize) -> AffineForm {
        AffineForm::new(self.support[i].iter().map(|&v| v as f64).collect(), self.weights[i])
    }
}

fn summands<'a>(t: &'a Term, out: &mut Vec<&'a Term>) {
    match t {
        Term::Sum(a, b) => {
            summands(a, out);
            summands(b, out);
        }
        other => out.push(other),
    }
}

/// Adds the exponents of a monomial to `w`; `false` for the zero literal.
fn monomial(t: &Term, w: &mut [i64]) -> Result<bool> {
    let bad = || TropicalError::InvalidNewtonData(format!("not a monomial: {t}"));
    match t {
        Term::Const(c) => Ok(*c != 0.0),
        Term::Param(_) => Ok(true),
        Term::Var(i) => {
            *w.get_mut(*i).ok_or_else(bad)? += 1;
            Ok(true)
        }
        Term::Product(a, b) => Ok(monomial(a, w)? & monomial(b, w)?),
        Term::Power(a, e) if e.fract() == 0.0 => {
            let mut inner = vec![0i64; w.len()];
            let nonzero = monomial(a, &mut inner)?;
            w.iter_mut().zip(inner).for_each(|(x, y)| *x += y * *e as i64);
            Ok(nonzero)
        }
        _ => Err(bad()),
    }
}

/// Points where the weighted maximum is attained at least twice.
/// A single-point support has none.
pub fn dual_fan(nd: &NewtonData) -> PolyhedralComplex {
    let dim = nd.dim();
    let forms: Vec<AffineForm> = (0..nd.support.len()).map(|i| nd.form(i)).collect();
    let mut candidates = Vec::new();
    for i in 0..forms.len() {
        for j in i + 1..forms.len() {
            let mut cs = vec![Constraint::eq(forms[i].sub(&forms[j]))];
            for (k, f) in forms.iter().enumerate() {
                if k != i && k != j {
                    cs.push(Constraint::leq(f.sub(&forms[i])));
                }
            }
            candidates.push(Polyhedron { dim, constraints: cs });
        }
    }
    PolyhedralComplex::from_candidates(dim, candidates)
}

/// Brute-force check of each direction: with `a` the maximizing exponent,
/// `min_b (f_a - f_b)(x) / |ω_a - ω_b|` is the distance from `x` to the
/// boundary of the region where `a` wins. Directions with distance at most
/// `tol` are kept.
pub fn attained_twice_oracle(nd: &NewtonData, directions: &[Vec<f64>], tol: f64) -> DirectionCloud {
    let forms: Vec<AffineForm> = (0..nd.support.len()).map(|i| nd.form(i)).collect();
    let kept = directions
        .iter()
        .filter(|x| {
            let vals: Vec<f64> = forms.iter().map(|f| f.eval(x)).collect();
            let Some(a) = (0..vals.len()).max_by(|&i, &j| vals[i].total_cmp(&vals[j])) else { return false };
            (0..vals.len())
                .filter(|&b| b != a)
                .map(|b| (vals[a] - vals[b]) / sphere::norm(&forms[a].sub(&forms[b]).coeffs))
                .any(|gap| gap <= tol)
        })
        .cloned()
        .collect();
    DirectionCloud { dim: nd.dim(), directions: kept, origin_member: true }
}
