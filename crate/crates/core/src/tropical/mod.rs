//! Polyhedral complexes in H-representation and the tropical sets built
//! from them: argmax cells of max-plus atoms, basic cones and dual fans of
//! weighted supports.

mod cells;
mod fm;
mod geometry;
mod newton;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Relation;
use crate::sphere::{self, DirectionCloud};

pub use cells::{flatten, formula_cells, tropical_atom_cells};
pub use newton::{attained_twice_oracle, dual_fan, NewtonData};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TropicalError {
    #[error("term cannot be written as a maximum of affine forms: {0}")]
    NotFlattenable(String),
    #[error("quantified formulas have no cell decomposition")]
    QuantifiedFormula,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid Newton data: {0}")]
    InvalidNewtonData(String),
    #[error("invalid complex: {0}")]
    InvalidComplex(String),
}

pub type Result<T> = std::result::Result<T, TropicalError>;

/// `x -> ⟨coeffs, x⟩ + constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineForm {
    pub coeffs: Vec<f64>,
    #[serde(rename = "const")]
    pub constant: f64,
}

impl AffineForm {
    pub fn new(coeffs: Vec<f64>, constant: f64) -> Self {
        AffineForm { coeffs, constant }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        AffineForm { coeffs: vec![0.0; dim], constant: c }
    }

    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut coeffs = vec![0.0; dim];
        coeffs[i] = 1.0;
        AffineForm { coeffs, constant: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        sphere::dot(&self.coeffs, x) + self.constant
    }

    pub fn sub(&self, other: &AffineForm) -> AffineForm {
        AffineForm {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
            constant: self.constant - other.constant,
        }
    }

    pub fn add(&self, other: &AffineForm) -> AffineForm {
        AffineForm {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
            constant: self.constant + other.constant,
        }
    }

    pub fn scale(&self, c: f64) -> AffineForm {
        AffineForm { coeffs: self.coeffs.iter().map(|a| a * c).collect(), constant: self.constant * c }
    }
}

/// `form(x) = 0` or `form(x) <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    #[serde(flatten)]
    pub form: AffineForm,
    pub rel: Relation,
}

impl Constraint {
    pub fn eq(form: AffineForm) -> Self {
        Constraint { form, rel: Relation::Eq }
    }

    pub fn leq(form: AffineForm) -> Self {
        Constraint { form, rel: Relation::Leq }
    }

    /// Violation scaled by the norm of the normal; 0 when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let v = self.form.eval(x);
        let n = sphere::norm(&self.form.coeffs).max(f64::MIN_POSITIVE);
        match self.rel {
            Relation::Eq => v.abs() / n,
            Relation::Leq => v.max(0.0) / n,
        }
    }
}

/// An H-polyhedron. The empty constraint list is the whole space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Constraint>", try_from = "Vec<Constraint>")]
pub struct Polyhedron {
    pub dim: usize,
    pub constraints: Vec<Constraint>,
}

impl Polyhedron {
    pub fn new(dim: usize, constraints: Vec<Constraint>) -> Result<Self> {
        for c in &constraints {
            if c.form.dim() != dim {
                return Err(TropicalError::DimensionMismatch { expected: dim, got: c.form.dim() });
            }
            if !c.form.coeffs.iter().chain([&c.form.constant]).all(|v| v.is_finite()) {
                return Err(TropicalError::InvalidComplex("non-finite coefficient".into()));
            }
        }
        Ok(Polyhedron { dim, constraints })
    }

    pub fn whole_space(dim: usize) -> Self {
        Polyhedron { dim, constraints: Vec::new() }
    }

    pub fn intersect(&self, other: &Polyhedron) -> Polyhedron {
        let mut constraints = self.constraints.clone();
        constraints.extend(other.constraints.iter().cloned());
        Polyhedron { dim: self.dim, constraints }
    }

    /// Exact feasibility of the constraint system.
    pub fn is_feasible(&self) -> bool {
        fm::feasible(fm::rows_of(&self.constraints))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.constraints.iter().all(|c| c.violation(x) <= tol)
    }

    pub fn is_cone(&self) -> bool {
        self.constraints.iter().all(|c| c.form.constant == 0.0)
    }

    /// The same constraints with constants dropped. For a non-empty
    /// polyhedron this is its recession cone.
    pub fn recession_cone(&self) -> Polyhedron {
        Polyhedron {
            dim: self.dim,
            constraints: self
                .constraints
                .iter()
                .map(|c| Constraint { form: AffineForm::new(c.form.coeffs.clone(), 0.0), rel: c.rel })
                .collect(),
        }
    }

    /// Flags for the inequalities that hold with equality everywhere.
    pub fn implicit_equalities(&self) -> Vec<bool> {
        fm::implicit_equalities(&self.constraints)
    }

    /// Dimension of the (assumed non-empty) polyhedron.
    pub fn dimension(&self) -> usize {
        let implicit = self.implicit_equalities();
        let rows: Vec<&[f64]> = self
            .constraints
            .iter()
            .zip(&implicit)
            .filter(|(_, &imp)| imp)
            .map(|(c, _)| c.form.coeffs.as_slice())
            .collect();
        self.dim - geometry::rank(&rows, self.dim)
    }

    /// Whether `x` lies in the relative interior: every implicit equality
    /// holds within `tol` and every other inequality with margin `tol`.
    pub fn relative_interior_contains(&self, x: &[f64], tol: f64) -> bool {
        let implicit = self.implicit_equalities();
        self.constraints.iter().zip(implicit).all(|(c, imp)| {
            if imp {
                c.violation(x) <= tol
            } else {
                let n = sphere::norm(&c.form.coeffs).max(f64::MIN_POSITIVE);
                c.form.eval(x) / n < -tol
            }
        })
    }

    /// Euclidean projection of `x`, `None` for an empty polyhedron.
    pub fn project(&self, x: &[f64]) -> Option<Vec<f64>> {
        geometry::project(self, x)
    }

    pub fn distance(&self, x: &[f64]) -> Option<f64> {
        self.project(x).map(|p| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    }

    /// Geodesic distance from the unit vector `d` to the recession cone
    /// intersected with the sphere; `None` when that intersection is empty.
    pub fn direction_distance(&self, d: &[f64]) -> Option<f64> {
        geometry::direction_distance(&self.recession_cone(), d)
    }
}

impl From<Polyhedron> for Vec<Constraint> {
    fn from(p: Polyhedron) -> Self {
        if p.constraints.is_empty() {
            // keeps the dimension recoverable
            vec![Constraint::leq(AffineForm::constant(p.dim, 0.0))]
        } else {
            p.constraints
        }
    }
}

impl TryFrom<Vec<Constraint>> for Polyhedron {
    type Error = TropicalError;

    fn try_from(constraints: Vec<Constraint>) -> Result<Self> {
        let dim = constraints
            .first()
            .map(|c| c.form.dim())
            .ok_or_else(|| TropicalError::InvalidComplex("cell without constraints".into()))?;
        Polyhedron::new(dim, constraints)
    }
}

/// A finite union of polyhedra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Polyhedron>", try_from = "Vec<Polyhedron>")]
pub struct PolyhedralComplex {
    pub dim: usize,
    pub cells: Vec<Polyhedron>,
}

impl From<PolyhedralComplex> for Vec<Polyhedron> {
    fn from(c: PolyhedralComplex) -> Self {
        c.cells
    }
}

impl TryFrom<Vec<Polyhedron>> for PolyhedralComplex {
    type Error = TropicalError;

    fn try_from(cells: Vec<Polyhedron>) -> Result<Self> {
        let dim = cells.first().map_or(0, |c| c.dim);
        if let Some(c) = cells.iter().find(|c| c.dim != dim) {
            return Err(TropicalError::DimensionMismatch { expected: dim, got: c.dim });
        }
        Ok(PolyhedralComplex { dim, cells })
    }
}

impl PolyhedralComplex {
    pub fn empty(dim: usize) -> Self {
        PolyhedralComplex { dim, cells: Vec::new() }
    }

    /// Keeps the feasible cells, checked in parallel.
    pub fn from_candidates(dim: usize, candidates: Vec<Polyhedron>) -> Self {
        let cells = candidates.into_par_iter().filter(|c| c.is_feasible()).collect();
        PolyhedralComplex { dim, cells }
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn union(mut self, other: PolyhedralComplex) -> Self {
        self.cells.extend(other.cells);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("complex serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| TropicalError::InvalidComplex(e.to_string()))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.cells.iter().any(|c| c.contains(x, tol))
    }

    /// Directions of the complex sampled by projecting `probes` onto the
    /// recession cone of every cell.
    pub fn sphere_samples(&self, probes: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.cells
            .par_iter()
            .flat_map_iter(|cell| {
                let cone = cell.recession_cone();
                probes.iter().filter_map(move |g| cone.project(g).and_then(|p| unit_if_nonzero(&p))).collect::<Vec<_>>()
            })
            .collect()
    }

    /// Geodesic distance from a unit vector to the complex's directions.
    pub fn direction_distance(&self, d: &[f64]) -> Option<f64> {
        self.cells.iter().filter_map(|c| c.direction_distance(d)).reduce(f64::min)
    }
}

fn unit_if_nonzero(p: &[f64]) -> Option<Vec<f64>> {
    if sphere::norm(p) > 1e-9 {
        sphere::normalize(p)
    } else {
        None
    }
}

/// Membership within `tol` and the Euclidean distance to the nearest cell
/// (infinite for an empty complex).
pub fn complex_membership(x: &[f64], complex: &PolyhedralComplex, tol: f64) -> Result<(bool, f64)> {
    if x.len() != complex.dim && !complex.is_empty() {
        return Err(TropicalError::DimensionMismatch { expected: complex.dim, got: x.len() });
    }
    let d = complex.cells.iter().filter_map(|c| c.distance(x)).fold(f64::INFINITY, f64::min);
    Ok((d <= tol, d))
}

/// Symmetric geodesic Hausdorff distance between a direction cloud and the
/// directions of a complex of cones. The complex side is sampled with
/// `probes` unit vectors projected onto each cell.
pub fn hausdorff_to_complex(cloud: &DirectionCloud, complex: &PolyhedralComplex, probes: usize, seed: u64) -> Result<f64> {
    if !complex.is_empty() && cloud.dim != complex.dim {
        return Err(TropicalError::DimensionMismatch { expected: complex.dim, got: cloud.dim });
    }
    let grid = sphere::sphere_grid(cloud.dim, probes, seed);
    let samples = complex.sphere_samples(&grid);
    match (cloud.directions.is_empty(), samples.is_empty()) {
        (true, true) => return Ok(0.0),
        (true, false) | (false, true) => return Ok(std::f64::consts::PI),
        _ => {}
    }
    let forward = cloud
        .directions
        .par_iter()
        .map(|d| complex.direction_distance(d).unwrap_or(std::f64::consts::PI))
        .reduce(|| 0.0, f64::max);
    let backward = samples
        .par_iter()
        .map(|y| sphere::distance_to_cloud(y, &cloud.directions))
        .reduce(|| 0.0, f64::max);
    Ok(forward.max(backward))
}

/// `B_N = {x : x_i <= 0, x_{i+1} <= N_i x_i}` in dimension `N.len() + 1`.
pub fn basic_cone(n: &[u32]) -> Polyhedron {
    let dim = n.len() + 1;
    let mut constraints: Vec<Constraint> = (0..dim).map(|i| Constraint::leq(AffineForm::coordinate(dim, i))).collect();
    for (i, &ni) in n.iter().enumerate() {
        let mut coeffs = vec![0.0; dim];
        coeffs[i + 1] = 1.0;
        coeffs[i] = -(ni as f64);
        constraints.push(Constraint::leq(AffineForm::new(coeffs, 0.0)));
    }
    Polyhedron { dim, constraints }
}

/// Membership in `E_{N,h} = {0 < x_i <= h, x_{i+1} <= x_i^{N_i}}`.
pub fn exponential_cone_membership(x: &[f64], n: &[u32], h: f64) -> bool {
    x.len() == n.len() + 1
        && x.iter().all(|&v| v > 0.0 && v <= h)
        && n.iter().enumerate().all(|(i, &ni)| x[i + 1] <= x[i].powi(ni as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_cone_examples() {
        let b = basic_cone(&[1]);
        assert_eq!(b.constraints.len(), 3);
        assert!(b.contains(&[-1.0, -2.0], 0.0));
        assert!(!b.contains(&[-2.0, -1.0], 0.0));
        assert!(basic_cone(&[2, 3]).contains(&[-1.0, -2.0, -6.0], 0.0));
        assert!(!basic_cone(&[2, 3]).contains(&[-1.0, -2.0, -5.0], 0.0));
        // B_{N'} ⊆ B_N for N' >= N, checked on a grid of B_{(3, 4)}
        let (small, big) = (basic_cone(&[3, 4]), basic_cone(&[2, 3]));
        for i in 0..20 {
            for j in 0..20 {
                for k in 0..20 {
                    let x = [-(i as f64) / 4.0, -(j as f64), -(k as f64) * 3.0];
                    if small.contains(&x, 0.0) {
                        assert!(big.contains(&x, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn exponential_cone_examples() {
        assert!(exponential_cone_membership(&[0.1, 0.001], &[2], 0.5));
        assert!(!exponential_cone_membership(&[0.1, 0.02], &[2], 0.5));
        assert!(exponential_cone_membership(&[0.5, 0.5, 0.5], &[1, 1], 0.5));
        assert!(!exponential_cone_membership(&[0.0, 0.0], &[1], 0.5));
    }

    #[test]
    fn json_round_trip_and_shape() {
        let c = PolyhedralComplex { dim: 2, cells: vec![basic_cone(&[1]), Polyhedron::whole_space(2)] };
        let text = c.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v[0][0]["rel"], "leq");
        assert_eq!(v[0][0]["const"], 0.0);
        let back = PolyhedralComplex::from_json(&text).unwrap();
        assert_eq!(back.cells[0], c.cells[0]);
        assert!(back.cells[1].contains(&[5.0, -7.0], 0.0));
        assert!(PolyhedralComplex::from_json("[[]]").is_err());
    }

    #[test]
    fn membership_examples() {
        // tropical circle: {x1 = 0, x2 <= 0} ∪ {x2 = 0, x1 <= 0}
        let ray = |i: usize| {
            let j = 1 - i;
            Polyhedron::new(
                2,
                vec![Constraint::eq(AffineForm::coordinate(2, i)), Constraint::leq(AffineForm::coordinate(2, j))],
            )
            .unwrap()
        };
        let c = PolyhedralComplex { dim: 2, cells: vec![ray(0), ray(1)] };
        assert_eq!(complex_membership(&[0.0, -3.0], &c, 1e-9).unwrap(), (true, 0.0));
        let (inside, d) = complex_membership(&[1.0, 1.0], &c, 1e-9).unwrap();
        assert!(!inside);
        assert!((d - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(complex_membership(&[0.0, 0.0], &c, 0.0).unwrap(), (true, 0.0));
        assert!(complex_membership(&[0.0], &c, 0.0).is_err());
    }

    #[test]
    fn dimension_and_relative_interior() {
        let b = basic_cone(&[1]);
        assert_eq!(b.dimension(), 2);
        assert!(b.relative_interior_contains(&[-1.0, -2.0], 1e-9));
        assert!(!b.relative_interior_contains(&[-1.0, -1.0], 1e-9));
        let mut ray = b.clone();
        ray.constraints.push(Constraint::leq(AffineForm::new(vec![1.0, -1.0], 0.0)));
        assert_eq!(ray.dimension(), 1);
        assert!(ray.relative_interior_contains(&[-1.0, -1.0], 1e-9));
    }

    #[test]
    fn direction_distance_to_cones() {
        let b = basic_cone(&[1]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(b.direction_distance(&[-s, -s]).unwrap() < 1e-12);
        assert!(b.direction_distance(&[0.0, -1.0]).unwrap() < 1e-12);
        assert!((b.direction_distance(&[1.0, 0.0]).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        assert!((b.direction_distance(&[0.0, 1.0]).unwrap() - 3.0 * std::f64::consts::FRAC_PI_4).abs() < 1e-9);
        assert!((b.direction_distance(&[s, s]).unwrap() - 3.0 * std::f64::consts::FRAC_PI_4).abs() < 1e-9);
        let origin = Polyhedron::new(2, vec![Constraint::eq(AffineForm::coordinate(2, 0)), Constraint::eq(AffineForm::coordinate(2, 1))]).unwrap();
        assert_eq!(origin.direction_distance(&[1.0, 0.0]), None);
    }

    #[test]
    fn hausdorff_against_basic_cone() {
        let c = PolyhedralComplex { dim: 2, cells: vec![basic_cone(&[1])] };
        let arc: Vec<Vec<f64>> = (0..=100)
            .map(|k| {
                let a = -3.0 * std::f64::consts::FRAC_PI_4 + std::f64::consts::FRAC_PI_4 * k as f64 / 100.0;
                vec![a.cos(), a.sin()]
            })
            .collect();
        let cloud = DirectionCloud { dim: 2, directions: arc, origin_member: true };
        assert!(hausdorff_to_complex(&cloud, &c, 3600, 0).unwrap() < 0.01);
        let half = DirectionCloud { dim: 2, directions: vec![vec![-1.0, 0.0]], origin_member: true };
        let h = hausdorff_to_complex(&half, &c, 3600, 0).unwrap();
        assert!((h - std::f64::consts::FRAC_PI_2).abs() < 0.01);
    }
}
