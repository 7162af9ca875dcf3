//! Floating point projections onto H-polyhedra.
//!
//! The nearest point of a polyhedron lies in the relative interior of some
//! face, and there it is the projection onto the affine hull cut out by at
//! most `n` linearly independent active constraints. Enumerating those
//! active sets and keeping the nearest feasible candidate is exact up to
//! rounding and cheap in the small dimensions used here.

use nalgebra::{DMatrix, DVector};

use crate::formula::Relation;
use crate::sphere;

use super::Polyhedron;

const INDEPENDENCE_TOL: f64 = 1e-10;

pub(crate) fn rank(rows: &[&[f64]], dim: usize) -> usize {
    if rows.is_empty() || dim == 0 {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
    let scale = m.amax().max(f64::MIN_POSITIVE);
    m.svd(false, false).rank(1e-9 * scale)
}

/// Orthonormal basis grown by Gram–Schmidt.
#[derive(Clone)]
struct Basis(Vec<Vec<f64>>);

impl Basis {
    fn try_push(&self, row: &[f64]) -> Option<Basis> {
        let n = sphere::norm(row);
        if n == 0.0 {
            return None;
        }
        let mut r: Vec<f64> = row.iter().map(|v| v / n).collect();
        for q in &self.0 {
            let c = sphere::dot(&r, q);
            r.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
        let rn = sphere::norm(&r);
        if rn <= INDEPENDENCE_TOL {
            return None;
        }
        r.iter_mut().for_each(|a| *a /= rn);
        let mut next = self.clone();
        next.0.push(r);
        Some(next)
    }
}

fn feasible_tol(x: &[f64]) -> f64 {
    1e-9 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Projection of `x` onto `{y : a_i · y + b_i = 0, i in active}`.
fn project_affine(p: &Polyhedron, active: &[usize], x: &[f64]) -> Option<Vec<f64>> {
    if active.is_empty() {
        return Some(x.to_vec());
    }
    let n = p.dim;
    let m = DMatrix::from_fn(active.len(), n, |i, j| p.constraints[active[i]].form.coeffs[j]);
    let xv = DVector::from_column_slice(x);
    let r = DVector::from_fn(active.len(), |i, _| p.constraints[active[i]].form.eval(x));
    let gram = &m * m.transpose();
    let lambda = gram.lu().solve(&r)?;
    let y = xv - m.transpose() * lambda;
    Some(y.iter().copied().collect())
}

pub(crate) fn project(p: &Polyhedron, x: &[f64]) -> Option<Vec<f64>> {
    let tol = feasible_tol(x);
    if p.contains(x, tol) {
        return Some(x.to_vec());
    }
    let mut basis = Basis(Vec::new());
    let mut base = Vec::new();
    let mut ineqs = Vec::new();
    for (i, c) in p.constraints.iter().enumerate() {
        if sphere::norm(&c.form.coeffs) == 0.0 {
            if c.violation(x) > 0.0 {
                return None;
            }
            continue;
        }
        match c.rel {
            Relation::Eq => {
                if let Some(b) = basis.try_push(&c.form.coeffs) {
                    basis = b;
                    base.push(i);
                }
            }
            Relation::Leq => ineqs.push(i),
        }
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut active = base.clone();
    search(p, x, &ineqs, 0, &basis, &mut active, &mut best);
    best.map(|(_, y)| y)
}

fn search(
    p: &Polyhedron,
    x: &[f64],
    ineqs: &[usize],
    start: usize,
    basis: &Basis,
    active: &mut Vec<usize>,
    best: &mut Option<(f64, Vec<f64>)>,
) {
    if let Some(y) = project_affine(p, active, x) {
        let d: f64 = y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        let better = best.as_ref().is_none_or(|(bd, _)| d < *bd);
        if better && p.contains(&y, feasible_tol(&y)) {
            *best = Some((d, y));
        }
    }
    if basis.0.len() == p.dim {
        return;
    }
    for k in start..ineqs.len() {
        let i = ineqs[k];
        if let Some(next) = basis.try_push(&p.constraints[i].form.coeffs) {
            active.push(i);
            search(p, x, ineqs, k + 1, &next, active, best);
            active.pop();
        }
    }
}

/// Generalized cross product: a vector orthogonal to the `n - 1` rows.
fn null_vector(rows: &[&[f64]], n: usize) -> Vec<f64> {
    (0..n)
        .map(|skip| {
            let minor = DMatrix::from_fn(n - 1, n - 1, |i, j| rows[i][if j < skip { j } else { j + 1 }]);
            let sign = if skip % 2 == 0 { 1.0 } else { -1.0 };
            sign * minor.determinant()
        })
        .collect()
}

fn extreme_rays(cone: &Polyhedron) -> Vec<Vec<f64>> {
    let n = cone.dim;
    let rows: Vec<&[f64]> = cone
        .constraints
        .iter()
        .map(|c| c.form.coeffs.as_slice())
        .filter(|r| sphere::norm(r) > 0.0)
        .collect();
    let mut out = Vec::new();
    if n == 1 {
        for r in [vec![1.0], vec![-1.0]] {
            if cone.contains(&r, 1e-12) {
                out.push(r);
            }
        }
        return out;
    }
    let mut chosen = Vec::new();
    collect_rays(cone, &rows, 0, &Basis(Vec::new()), &mut chosen, &mut out);
    out
}

fn collect_rays<'a>(
    cone: &Polyhedron,
    rows: &[&'a [f64]],
    start: usize,
    basis: &Basis,
    chosen: &mut Vec<&'a [f64]>,
    out: &mut Vec<Vec<f64>>,
) {
    let n = cone.dim;
    if chosen.len() == n - 1 {
        if let Some(r) = sphere::normalize(&null_vector(chosen, n)) {
            for cand in [r.clone(), r.iter().map(|v| -v).collect()] {
                if cone.contains(&cand, 1e-10) {
                    out.push(cand);
                }
            }
        }
        return;
    }
    for k in start..rows.len() {
        if let Some(next) = basis.try_push(rows[k]) {
            chosen.push(rows[k]);
            collect_rays(cone, rows, k + 1, &next, chosen, out);
            chosen.pop();
        }
    }
}

pub(crate) fn direction_distance(cone: &Polyhedron, d: &[f64]) -> Option<f64> {
    let p = project(cone, d)?;
    if sphere::norm(&p) > 1e-12 {
        return Some(sphere::geodesic(d, &sphere::normalize(&p)?));
    }
    // d is in the polar cone: the best direction is an extreme ray, or any
    // direction of the lineality space
    let rows: Vec<&[f64]> = cone.constraints.iter().map(|c| c.form.coeffs.as_slice()).collect();
    if rank(&rows, cone.dim) < cone.dim {
        return Some(std::f64::consts::FRAC_PI_2);
    }
    extreme_rays(cone).iter().map(|r| sphere::geodesic(d, r)).reduce(f64::min)
}

#[cfg(test)]
mod tests {
    use super::super::{basic_cone, AffineForm, Constraint};
    use super::*;

    #[test]
    fn projection_onto_quadrant_and_band() {
        let q = Polyhedron::new(2, vec![Constraint::leq(AffineForm::coordinate(2, 0)), Constraint::leq(AffineForm::coordinate(2, 1))]).unwrap();
        assert_eq!(project(&q, &[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(project(&q, &[1.0, -2.0]).unwrap(), vec![0.0, -2.0]);
        assert_eq!(project(&q, &[-1.0, -2.0]).unwrap(), vec![-1.0, -2.0]);
        // the line x1 + x2 = 1 with x1 <= 0
        let l = Polyhedron::new(
            2,
            vec![Constraint::eq(AffineForm::new(vec![1.0, 1.0], -1.0)), Constraint::leq(AffineForm::coordinate(2, 0))],
        )
        .unwrap();
        let y = project(&l, &[3.0, 3.0]).unwrap();
        assert!((y[0] - 0.0).abs() < 1e-12 && (y[1] - 1.0).abs() < 1e-12);
        let y = project(&l, &[-3.0, 0.0]).unwrap();
        assert!((y[0] + 1.0).abs() < 1e-12 && (y[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_projection_is_none() {
        let e = Polyhedron::new(1, vec![Constraint::leq(AffineForm::new(vec![1.0], 1.0)), Constraint::leq(AffineForm::new(vec![-1.0], 1.0))]).unwrap();
        assert!(project(&e, &[0.0]).is_none());
    }

    #[test]
    fn rays_of_a_basic_cone() {
        let mut rays = extreme_rays(&basic_cone(&[2]));
        rays.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rays.dedup();
        let s = 5f64.sqrt();
        assert_eq!(rays.len(), 2);
        assert!(sphere::geodesic(&rays[0], &[-1.0 / s, -2.0 / s]) < 1e-12);
        assert!(sphere::geodesic(&rays[1], &[0.0, -1.0]) < 1e-12);
    }
}
