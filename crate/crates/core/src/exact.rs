//! Guard formulas cutting open cones out of a limit set, and assembly of
//! formulas whose dequantization is exactly the logarithmic limit set.

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amoeba::{PointCloud, Space};
use crate::dequant::{dequantize_formula, eval_tropical_formula, DequantError};
use crate::formula::{Formula, Term};
use crate::tropical::{AffineForm, Constraint, PolyhedralComplex, Polyhedron};

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("invalid cone: {0}")]
    InvalidCone(String),
    #[error("cone {0} of the cover still meets the sample")]
    ExhaustionFailed(usize),
    #[error("formula is not positive")]
    NotPositive,
    #[error("expected a cloud of points of (R_>0)^{expected}, got dimension {got}")]
    BadSample { expected: usize, got: usize },
    #[error(transparent)]
    Dequant(#[from] DequantError),
}

pub type Result<T> = std::result::Result<T, ExactError>;

/// Threshold parameter of guard formulas.
pub const THRESHOLD: &str = "y";

/// Thresholds tried by [`find_threshold`], largest first.
pub const THRESHOLDS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// An open convex cone `C` presented in coordinates `z = Bx` as
/// `{z_n < 0, a_i·(z_1..z_{n-1}) + z_n < 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCone", into = "RawCone")]
pub struct ConeSpec {
    matrix: Vec<Vec<f64>>,
    faces: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawCone {
    matrix: Vec<Vec<f64>>,
    #[serde(default)]
    faces: Vec<Vec<f64>>,
}

impl TryFrom<RawCone> for ConeSpec {
    type Error = ExactError;

    fn try_from(r: RawCone) -> Result<Self> {
        ConeSpec::new(r.matrix, r.faces)
    }
}

impl From<ConeSpec> for RawCone {
    fn from(c: ConeSpec) -> Self {
        RawCone { matrix: c.matrix, faces: c.faces }
    }
}

fn exact(v: f64) -> Option<BigRational> {
    BigRational::from_float(v)
}

fn determinant_is_zero(m: &[Vec<f64>]) -> Option<bool> {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m.iter().map(|r| r.iter().map(|&v| exact(v)).collect::<Option<_>>()).collect::<Option<_>>()?;
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else { return Some(true) };
        a.swap(col, p);
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &a[col][col];
            for c in col..n {
                let d = &f * &a[col][c];
                a[r][c] -= d;
            }
        }
    }
    Some(false)
}

impl ConeSpec {
    /// Checks that `B` is invertible and that the closure of `B(C)` meets
    /// `{z_n = 0}` only at the origin.
    pub fn new(matrix: Vec<Vec<f64>>, faces: Vec<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        if n == 0 || matrix.iter().any(|r| r.len() != n) {
            return Err(ExactError::InvalidCone("matrix must be square and nonempty".into()));
        }
        if let Some(f) = faces.iter().find(|f| f.len() != n - 1) {
            return Err(ExactError::InvalidCone(format!("face normal {f:?} must have {} entries", n - 1)));
        }
        if matrix.iter().chain(&faces).flatten().any(|v| !v.is_finite()) {
            return Err(ExactError::InvalidCone("non-finite entry".into()));
        }
        if determinant_is_zero(&matrix) != Some(false) {
            return Err(ExactError::InvalidCone("matrix is singular".into()));
        }
        // {w : a_i·w <= 0} must be {0}
        let m = n - 1;
        for j in 0..m {
            for s in [1.0, -1.0] {
                let mut cs: Vec<Constraint> = faces.iter().map(|a| Constraint::leq(AffineForm::new(a.clone(), 0.0))).collect();
                let mut e = vec![0.0; m];
                e[j] = -s;
                cs.push(Constraint::leq(AffineForm::new(e, 1.0)));
                if (Polyhedron { dim: m, constraints: cs }).is_feasible() {
                    return Err(ExactError::InvalidCone("closure is not contained in an open half-space".into()));
                }
            }
        }
        Ok(ConeSpec { matrix, faces })
    }

    /// Open planar sector `{n1·x < 0, n2·x < 0}` of angle less than `π`.
    pub fn sector_2d(n1: [f64; 2], n2: [f64; 2]) -> Result<Self> {
        let matrix = vec![vec![n1[0] - n2[0], n1[1] - n2[1]], vec![n1[0] + n2[0], n1[1] + n2[1]]];
        Self::new(matrix, vec![vec![1.0], vec![-1.0]])
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn faces(&self) -> &[Vec<f64>] {
        &self.faces
    }

    /// Linear forms in `x` whose strict negativity defines `C`: the last
    /// row of `B`, then `(a_i, 1)ᵀ B`. They are also the exponent vectors
    /// of the guard monomials.
    pub fn exponents(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let combine = |c: &[f64]| -> Vec<f64> { (0..n).map(|j| (0..n).map(|k| c[k] * self.matrix[k][j]).sum()).collect() };
        let mut out = vec![self.matrix[n - 1].clone()];
        for a in &self.faces {
            let mut c = a.clone();
            c.push(1.0);
            out.push(combine(&c));
        }
        out
    }

    /// Closure of `C`.
    pub fn closure(&self) -> Polyhedron {
        let cs = self.exponents().into_iter().map(|e| Constraint::leq(AffineForm::new(e, 0.0))).collect();
        Polyhedron { dim: self.dim(), constraints: cs }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.exponents().iter().all(|e| e.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() < 0.0)
    }

    /// Membership of a point of `(R_{>0})^n` in `E_h(C)`, with the
    /// monomials compared in log space.
    pub fn in_exhaustion_set(&self, x: &[f64], h: f64) -> bool {
        let lh = h.ln();
        let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        self.exponents().iter().all(|e| e.iter().zip(&lx).map(|(a, b)| a * b).sum::<f64>() < lh)
    }
}

fn monomial(e: &[f64]) -> Term {
    let factors = e.iter().enumerate().filter(|(_, &a)| a != 0.0).map(|(j, &a)| if a == 1.0 { Term::var(j) } else { Term::var(j).pow(a) });
    Term::product_of(factors).unwrap_or(Term::Const(1.0))
}

/// `φ^C(x, y) = ¬(y <= m_0(x) ∨ … ∨ y <= m_k(x))`, where `m_i` are the
/// monomials with exponents [`ConeSpec::exponents`]; `{x | φ^C(x, h)}` is
/// `E_h(C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GuardFormula {
    pub formula: Formula,
    pub threshold: String,
}

pub fn guard_formula(c: &ConeSpec) -> GuardFormula {
    let formula = Formula::Not(Box::new(negated_guard(c, Term::param(THRESHOLD))));
    GuardFormula { formula, threshold: THRESHOLD.to_string() }
}

/// The positive form of `¬φ^C` with the threshold replaced by `y`.
pub fn negated_guard(c: &ConeSpec, y: Term) -> Formula {
    Formula::Or(c.exponents().iter().map(|e| Formula::leq(y.clone(), monomial(e))).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustionReport {
    pub passed: bool,
    /// Sample points lying in `E_h(C)`.
    pub hits: usize,
    /// Passed only because the sample was empty.
    pub vacuous: bool,
}

/// Whether no sampled point of `V` lies in `E_h(C)`. Sound only up to the
/// density of the sample.
pub fn exhaustion_check(sample: &PointCloud, c: &ConeSpec, h: f64) -> Result<ExhaustionReport> {
    check_sample(sample, c)?;
    let hits = sample.points.par_iter().filter(|p| c.in_exhaustion_set(p, h)).count();
    Ok(ExhaustionReport { passed: hits == 0, hits, vacuous: sample.points.is_empty() })
}

fn check_sample(sample: &PointCloud, c: &ConeSpec) -> Result<()> {
    if sample.space != Space::Classical || sample.dim != c.dim() {
        return Err(ExactError::BadSample { expected: c.dim(), got: sample.dim });
    }
    Ok(())
}

/// Largest threshold in [`THRESHOLDS`] passing the exhaustion check.
pub fn find_threshold(sample: &PointCloud, c: &ConeSpec) -> Result<Option<f64>> {
    for h in THRESHOLDS {
        if exhaustion_check(sample, c, h)?.passed {
            return Ok(Some(h));
        }
    }
    Ok(None)
}

/// `ψ = φ ∧ ⋀_i ¬φ^{C_i}(·, h)` with the guards in positive form and `h`
/// written as a literal.
pub fn assemble_exact(phi: &Formula, cover: &[ConeSpec], h: f64, sample: &PointCloud) -> Result<Formula> {
    if !phi.is_positive() {
        return Err(ExactError::NotPositive);
    }
    if cover.is_empty() {
        return Ok(phi.clone());
    }
    let mut parts = match phi {
        Formula::And(fs) => fs.clone(),
        other => vec![other.clone()],
    };
    for (i, c) in cover.iter().enumerate() {
        if !exhaustion_check(sample, c, h)?.passed {
            return Err(ExactError::ExhaustionFailed(i));
        }
        parts.push(negated_guard(c, Term::Const(h)));
    }
    Ok(Formula::And(parts))
}

/// Square grid `[lo, hi]^2` with `n` points per side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { lo: -2.0, hi: 2.0, n: 401 }
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<[f64; 2]> {
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        // snapped so that decimal grid lines are hit exactly
        let at = |k: usize| {
            let v = self.lo + step * k as f64;
            (v * 1e12).round() / 1e12
        };
        (0..self.n).flat_map(|i| (0..self.n).map(move |j| [at(i), at(j)])).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactnessReport {
    pub checked: usize,
    /// Grid points where `ψ_0` and the target disagree.
    pub disagreements: Vec<[f64; 2]>,
}

/// Compares the dequantization of `ψ` with `target` on a planar grid.
pub fn verify_exactness(psi: &Formula, target: &PolyhedralComplex, grid: &GridSpec) -> Result<ExactnessReport> {
    let trop = dequantize_formula(psi)?;
    let pts = grid.points();
    let flags: Vec<Option<[f64; 2]>> = pts
        .par_iter()
        .map(|p| {
            let a = eval_tropical_formula(&trop, p, 1e-9)?;
            let b = target.contains(p, 1e-9);
            Ok((a != b).then_some(*p))
        })
        .collect::<Result<_>>()?;
    Ok(ExactnessReport { checked: pts.len(), disagreements: flags.into_iter().flatten().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dequant::{dequantize_formula, eval_formula_classical};
    use crate::formula::{parse_formula, ParameterEnvironment};

    fn cubic_target() -> PolyhedralComplex {
        let a = Polyhedron {
            dim: 2,
            constraints: vec![Constraint::eq(AffineForm::coordinate(2, 0)), Constraint::leq(AffineForm::coordinate(2, 1))],
        };
        let b = Polyhedron {
            dim: 2,
            constraints: vec![
                Constraint::leq(AffineForm::new(vec![-1.0, 0.0], 0.0)),
                Constraint::eq(AffineForm::new(vec![-3.0, 2.0], 0.0)),
            ],
        };
        PolyhedralComplex { dim: 2, cells: vec![a, b] }
    }

    fn cloud(points: Vec<Vec<f64>>) -> PointCloud {
        PointCloud::new(points[0].len(), points, Space::Classical).unwrap()
    }

    #[test]
    fn half_line_guard() {
        let c = ConeSpec::new(vec![vec![1.0]], vec![]).unwrap();
        assert_eq!(guard_formula(&c).formula.to_string(), "!(y <= x1)");
    }

    #[test]
    fn guard_atoms_with_two_faces() {
        let c = ConeSpec::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![2.0], vec![-2.0]]).unwrap();
        assert_eq!(guard_formula(&c).formula.to_string(), "!(y <= x2 | y <= x1^2*x2 | y <= x1^-2*x2)");
    }

    #[test]
    fn invalid_cones() {
        assert!(ConeSpec::new(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![vec![1.0], vec![-1.0]]).is_err());
        // both faces on one side: closure contains (1, 0)
        assert!(ConeSpec::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![1.0], vec![2.0]]).is_err());
        assert!(ConeSpec::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![]).is_err());
        assert!(ConeSpec::new(vec![vec![1.0, 0.0]], vec![]).is_err());
        // sector wider than a half-plane
        assert!(ConeSpec::sector_2d([1.0, 0.0], [-1.0, 0.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = ConeSpec::sector_2d([1.0, 1.0], [1.0, -1.0]).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ConeSpec>(&text).unwrap(), c);
        assert!(serde_json::from_str::<ConeSpec>(r#"{"matrix": [[1, 2], [2, 4]], "faces": [[1], [-1]]}"#).is_err());
    }

    #[test]
    fn sector_matches_its_normals() {
        let c = ConeSpec::sector_2d([1.0, 1.0], [1.0, -1.0]).unwrap();
        for (p, inside) in [([-1.0, 0.0], true), ([-1.0, 0.9], true), ([-1.0, 1.1], false), ([0.0, -1.0], false)] {
            assert_eq!(c.contains(&p), inside, "{p:?}");
        }
        assert!(c.closure().is_cone());
    }

    #[test]
    fn tropical_negated_guard_is_the_closed_complement() {
        let c = ConeSpec::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![2.0], vec![-2.0]]).unwrap();
        let neg = negated_guard(&c, Term::param(THRESHOLD));
        assert!(neg.is_positive());
        let trop = dequantize_formula(&neg).unwrap();
        for i in -20..=20 {
            for j in -20..=20 {
                let x = [i as f64 / 10.0, j as f64 / 10.0];
                let expected = x[1] >= 0.0 || 2.0 * x[0] + x[1] >= 0.0 || -2.0 * x[0] + x[1] >= 0.0;
                assert_eq!(eval_tropical_formula(&trop, &x, 1e-12).unwrap(), expected, "{x:?}");
                assert_eq!(!c.contains(&x), expected);
            }
        }
    }

    #[test]
    fn guard_formula_defines_the_exhaustion_set() {
        let c = ConeSpec::sector_2d([-1.0, 3.0], [2.0, -3.0]).unwrap();
        let g = guard_formula(&c);
        for h in [0.5, 1e-3] {
            let env = ParameterEnvironment::new().with(THRESHOLD, h).unwrap();
            for i in -30..=30 {
                for j in -30..=30 {
                    let x = [10f64.powf(i as f64 / 5.0), 10f64.powf(j as f64 / 5.0)];
                    let by_formula = eval_formula_classical(&g.formula, &x, &env, 0.0).unwrap();
                    assert_eq!(by_formula, c.in_exhaustion_set(&x, h), "{x:?} h={h}");
                }
            }
        }
    }

    #[test]
    fn exhaustion_sets_shrink_with_h() {
        let c = ConeSpec::sector_2d([1.0, 1.0], [1.0, -1.0]).unwrap();
        for i in -40..=40 {
            for j in -40..=40 {
                let x = [10f64.powf(i as f64 / 4.0), 10f64.powf(j as f64 / 4.0)];
                for w in THRESHOLDS.windows(2) {
                    assert!(!c.in_exhaustion_set(&x, w[1]) || c.in_exhaustion_set(&x, w[0]));
                }
            }
        }
    }

    #[test]
    fn empty_sample_is_vacuous() {
        let c = ConeSpec::new(vec![vec![1.0]], vec![]).unwrap();
        let r = exhaustion_check(&PointCloud { dim: 1, points: vec![], space: Space::Classical }, &c, 0.1).unwrap();
        assert!(r.passed && r.vacuous);
    }

    #[test]
    fn cubic_exact_description() {
        // points of the cubic branch in the positive orthant have x1 >= 1
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|k| {
                let x1 = 1.0 + k as f64 * 0.25;
                // x2^2 - 2 x2 + (1 + x1^2 - x1^3) = 0, larger root
                let x2 = 1.0 + (x1.powi(3) - x1.powi(2)).sqrt();
                vec![x1, x2]
            })
            .collect();
        let sample = cloud(pts);
        let cone = ConeSpec::sector_2d([1.0, 1.0], [1.0, -1.0]).unwrap();
        assert_eq!(find_threshold(&sample, &cone).unwrap(), Some(0.1));
        let phi = parse_formula("x1^2 + x2^2 + 1 = 2*x2 + x1^3").unwrap();
        let psi = assemble_exact(&phi, &[cone.clone()], 0.1, &sample).unwrap();
        assert!(psi.is_positive());
        let target = cubic_target();
        let grid = GridSpec::default();
        assert!(verify_exactness(&psi, &target, &grid).unwrap().disagreements.is_empty());
        let plain = verify_exactness(&phi, &target, &grid).unwrap();
        assert_eq!(plain.disagreements.len(), 200);
        assert!(plain.disagreements.iter().all(|p| p[1] == 0.0 && p[0] < 0.0));
        // the hand-written guard gives the same set
        let paper = parse_formula("x1^2 + x2^2 + 1 = 2*x2 + x1^3 & 1/2 <= x1").unwrap();
        assert!(verify_exactness(&paper, &target, &grid).unwrap().disagreements.is_empty());
        assert_eq!(assemble_exact(&phi, &[], 0.1, &sample).unwrap(), phi);
        let bad = ConeSpec::sector_2d([-1.0, 0.5], [0.5, -1.0]).unwrap();
        assert!(matches!(assemble_exact(&phi, &[bad], 0.5, &sample), Err(ExactError::ExhaustionFailed(0))));
    }

    #[test]
    fn tautology_matches_the_whole_space() {
        let psi = parse_formula("x1 <= x1").unwrap();
        let whole = PolyhedralComplex { dim: 2, cells: vec![Polyhedron::whole_space(2)] };
        let r = verify_exactness(&psi, &whole, &GridSpec { lo: -1.0, hi: 1.0, n: 21 }).unwrap();
        assert_eq!((r.checked, r.disagreements.len()), (441, 0));
    }
}
