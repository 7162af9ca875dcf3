//! Exact feasibility of linear systems by Fourier–Motzkin elimination.
//!
//! Every finite `f64` is a dyadic rational, so converting the data to
//! `BigRational` loses nothing and the answer is exact for the given floats.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::formula::Relation;

use super::Constraint;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Eq,
    Le,
    Lt,
}

/// `a · x + b  (=, <=, <)  0`.
#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub a: Vec<BigRational>,
    pub b: BigRational,
    pub kind: Kind,
}

pub(crate) fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite coefficient")
}

pub(crate) fn rows_of(constraints: &[Constraint]) -> Vec<Row> {
    constraints
        .iter()
        .map(|c| Row {
            a: c.form.coeffs.iter().map(|&v| exact(v)).collect(),
            b: exact(c.form.constant),
            kind: match c.rel {
                Relation::Eq => Kind::Eq,
                Relation::Leq => Kind::Le,
            },
        })
        .collect()
}

/// Drops trivially true rows, normalizes and deduplicates the rest.
/// `None` if a trivially false row is found.
fn simplify(rows: Vec<Row>) -> Option<Vec<Row>> {
    let mut seen: HashMap<(Vec<BigRational>, BigRational), Kind> = HashMap::new();
    let mut order = Vec::new();
    for r in rows {
        let Some(lead) = r.a.iter().find(|c| !c.is_zero()).map(|c| c.abs()) else {
            let ok = match r.kind {
                Kind::Eq => r.b.is_zero(),
                Kind::Le => !r.b.is_positive(),
                Kind::Lt => r.b.is_negative(),
            };
            if ok {
                continue;
            }
            return None;
        };
        let key = (r.a.iter().map(|c| c / &lead).collect::<Vec<_>>(), &r.b / &lead);
        match seen.get_mut(&key) {
            Some(k) => {
                if r.kind == Kind::Lt {
                    *k = Kind::Lt;
                }
            }
            None => {
                order.push(key.clone());
                seen.insert(key, r.kind);
            }
        }
    }
    Some(
        order
            .into_iter()
            .map(|key| {
                let kind = seen[&key];
                Row { a: key.0, b: key.1, kind }
            })
            .collect(),
    )
}

/// Whether some real point satisfies every row.
pub(crate) fn feasible(mut rows: Vec<Row>) -> bool {
    let n = rows.first().map_or(0, |r| r.a.len());
    while let Some(k) = rows.iter().position(|r| r.kind == Kind::Eq) {
        let eq = rows.swap_remove(k);
        match eq.a.iter().position(|c| !c.is_zero()) {
            None if !eq.b.is_zero() => return false,
            None => {}
            Some(j) => {
                for r in rows.iter_mut() {
                    if r.a[j].is_zero() {
                        continue;
                    }
                    let f = &r.a[j] / &eq.a[j];
                    for k in 0..n {
                        let d = &f * &eq.a[k];
                        r.a[k] -= d;
                    }
                    let d = &f * &eq.b;
                    r.b -= d;
                }
            }
        }
    }
    let Some(mut rows) = simplify(rows) else { return false };
    loop {
        // eliminate the variable producing the fewest new rows
        let mut best: Option<(usize, usize)> = None;
        for j in 0..n {
            let pos = rows.iter().filter(|r| r.a[j].is_positive()).count();
            let neg = rows.iter().filter(|r| r.a[j].is_negative()).count();
            if pos + neg == 0 {
                continue;
            }
            let cost = pos * neg;
            if best.is_none_or(|(_, c)| cost < c) {
                best = Some((j, cost));
            }
        }
        let Some((j, _)) = best else { return true };
        let (mut pos, mut neg, mut next) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            if r.a[j].is_positive() {
                pos.push(r);
            } else if r.a[j].is_negative() {
                neg.push(r);
            } else {
                next.push(r);
            }
        }
        for p in &pos {
            for q in &neg {
                let (cp, cq) = (-&q.a[j], p.a[j].clone());
                let a = p.a.iter().zip(&q.a).map(|(x, y)| x * &cp + y * &cq).collect();
                let b = &p.b * &cp + &q.b * &cq;
                let kind = if p.kind == Kind::Lt || q.kind == Kind::Lt { Kind::Lt } else { Kind::Le };
                next.push(Row { a, b, kind });
            }
        }
        match simplify(next) {
            Some(r) => rows = r,
            None => return false,
        }
    }
}

/// For each `<=` constraint, whether it holds with equality on the whole
/// (assumed non-empty) polyhedron.
pub(crate) fn implicit_equalities(constraints: &[Constraint]) -> Vec<bool> {
    let rows = rows_of(constraints);
    (0..rows.len())
        .map(|i| {
            if rows[i].kind == Kind::Eq {
                return true;
            }
            let mut strict = rows.clone();
            strict[i].kind = Kind::Lt;
            !feasible(strict)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn integer(v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    fn row(a: &[i64], b: i64, kind: Kind) -> Row {
        Row { a: a.iter().map(|&v| integer(v)).collect(), b: integer(b), kind }
    }

    #[test]
    fn small_systems() {
        // x <= 0, -x <= 0 is the point 0
        assert!(feasible(vec![row(&[1], 0, Kind::Le), row(&[-1], 0, Kind::Le)]));
        assert!(!feasible(vec![row(&[1], 0, Kind::Lt), row(&[-1], 0, Kind::Le)]));
        // x + y = 1, x >= 1, y > 0
        assert!(!feasible(vec![row(&[1, 1], -1, Kind::Eq), row(&[-1, 0], 1, Kind::Le), row(&[0, -1], 0, Kind::Lt)]));
        assert!(feasible(vec![row(&[1, 1], -1, Kind::Eq), row(&[-1, 0], 1, Kind::Le), row(&[0, -1], 0, Kind::Le)]));
        assert!(feasible(vec![]));
        assert!(!feasible(vec![row(&[0, 0], 1, Kind::Le)]));
    }

    #[test]
    fn dyadic_conversion_is_exact() {
        assert_eq!(exact(0.5) + exact(0.25), BigRational::new(integer(3).to_integer(), BigInt::from(4)));
        assert_ne!(exact(0.1), BigRational::new(BigInt::from(1), BigInt::from(10)));
    }
}
