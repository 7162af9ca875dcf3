use crate::dequant::{TropicalFormula, TropicalTerm};
use crate::formula::Relation;

use super::{AffineForm, Constraint, PolyhedralComplex, Polyhedron, Result, TropicalError};

fn push_unique(out: &mut Vec<AffineForm>, f: AffineForm) {
    if !out.contains(&f) {
        out.push(f);
    }
}

/// Writes `tt` as the maximum of the returned affine forms on `R^dim`.
/// An empty list stands for `-inf`.
///
/// Negative scalings are only accepted on single forms, where they stay
/// affine.
pub fn flatten(tt: &TropicalTerm, dim: usize) -> Result<Vec<AffineForm>> {
    Ok(match tt {
        TropicalTerm::Var(i) => {
            if *i >= dim {
                return Err(TropicalError::DimensionMismatch { expected: dim, got: i + 1 });
            }
            vec![AffineForm::coordinate(dim, *i)]
        }
        TropicalTerm::Zero => vec![AffineForm::constant(dim, 0.0)],
        TropicalTerm::NegInf => Vec::new(),
        TropicalTerm::Max(args) => {
            let mut out = Vec::new();
            for a in args {
                for f in flatten(a, dim)? {
                    push_unique(&mut out, f);
                }
            }
            out
        }
        TropicalTerm::Plus(a, b) => {
            let (fa, fb) = (flatten(a, dim)?, flatten(b, dim)?);
            let mut out = Vec::new();
            for x in &fa {
                for y in &fb {
                    push_unique(&mut out, x.add(y));
                }
            }
            out
        }
        TropicalTerm::Scale(c, a) => {
            if *c == 0.0 {
                return Ok(vec![AffineForm::constant(dim, 0.0)]);
            }
            let fa = flatten(a, dim)?;
            if *c < 0.0 && fa.len() != 1 {
                return Err(TropicalError::NotFlattenable(tt.to_string()));
            }
            fa.iter().map(|f| f.scale(*c)).collect()
        }
    })
}

/// Argmax cells of one atom `max_i l_i (=, <=) max_j m_j`.
pub fn tropical_atom_cells(atom: &TropicalFormula, dim: usize) -> Result<PolyhedralComplex> {
    let TropicalFormula::Atom { rel, lhs, rhs } = atom else {
        return formula_cells(atom, dim);
    };
    let (l, m) = (flatten(lhs, dim)?, flatten(rhs, dim)?);
    let dominates = |forms: &[AffineForm], top: usize| -> Vec<Constraint> {
        (0..forms.len()).filter(|&k| k != top).map(|k| Constraint::leq(forms[k].sub(&forms[top]))).collect()
    };
    let mut candidates = Vec::new();
    match rel {
        Relation::Eq => {
            if l.is_empty() || m.is_empty() {
                return Ok(if l.is_empty() && m.is_empty() {
                    PolyhedralComplex { dim, cells: vec![Polyhedron::whole_space(dim)] }
                } else {
                    PolyhedralComplex::empty(dim)
                });
            }
            for i in 0..l.len() {
                for j in 0..m.len() {
                    let mut cs = vec![Constraint::eq(l[i].sub(&m[j]))];
                    cs.extend(dominates(&l, i));
                    cs.extend(dominates(&m, j));
                    candidates.push(Polyhedron { dim, constraints: cs });
                }
            }
        }
        Relation::Leq => {
            if l.is_empty() {
                return Ok(PolyhedralComplex { dim, cells: vec![Polyhedron::whole_space(dim)] });
            }
            for j in 0..m.len() {
                let mut cs: Vec<Constraint> = l.iter().map(|f| Constraint::leq(f.sub(&m[j]))).collect();
                cs.extend(dominates(&m, j));
                candidates.push(Polyhedron { dim, constraints: cs });
            }
        }
    }
    Ok(PolyhedralComplex::from_candidates(dim, candidates))
}

/// Cells of a quantifier-free tropical formula: unions for `|`, pairwise
/// intersections for `&`.
pub fn formula_cells(f: &TropicalFormula, dim: usize) -> Result<PolyhedralComplex> {
    match f {
        TropicalFormula::Atom { .. } => tropical_atom_cells(f, dim),
        TropicalFormula::Or(fs) => {
            let mut out = PolyhedralComplex::empty(dim);
            for g in fs {
                out = out.union(formula_cells(g, dim)?);
            }
            Ok(out)
        }
        TropicalFormula::And(fs) => {
            let mut acc = vec![Polyhedron::whole_space(dim)];
            for g in fs {
                let part = formula_cells(g, dim)?;
                let candidates = acc.iter().flat_map(|a| part.cells.iter().map(move |b| a.intersect(b))).collect();
                acc = PolyhedralComplex::from_candidates(dim, candidates).cells;
            }
            Ok(PolyhedralComplex { dim, cells: acc })
        }
        TropicalFormula::Exists(..) | TropicalFormula::Forall(..) => Err(TropicalError::QuantifiedFormula),
    }
}
