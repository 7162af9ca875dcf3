//! Checks over the fixtures. Each returns a report that the paper suite
//! turns into a table row and the acceptance harness inspects directly.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use loglimit::amoeba::{
    estimate_limit_directions, hausdorff_directions, sample_members, write_directions, DirectionTarget, LimitEstimate, SamplerConfig,
    Source,
};
use loglimit::dequant::{
    dequantize_formula, dequantize_term, eval_t, eval_tropical_formula, eval_tropical_term, sandwich_bounds, sandwich_constant,
    TropicalFormula, TropicalTerm,
};
use loglimit::exact::{assemble_exact, find_threshold, verify_exactness, ConeSpec, GridSpec};
use loglimit::formula::{normalize_polynomial, Formula, ParameterEnvironment, Relation, Term};
use loglimit::nonarch::{lambda_membership_hypersurface, log_map, LambdaMembership, MembershipConfig, NonarchError, PuiseuxPolynomial, PuiseuxSeries, DEFAULT_TRUNCATION};
use loglimit::sphere::{self, geodesic, DirectionCloud};
use loglimit::tropical::{attained_twice_oracle, complex_membership, dual_fan, formula_cells, tropical_atom_cells, NewtonData, PolyhedralComplex};
use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fixtures::{self, CloudFixture, FormulaFixture};

/// Hausdorff tolerance for limit set reproductions, in radians.
pub const DIRECTION_TOL: f64 = 0.05;
/// Base allowance of the containment check; the clustering radius is added.
pub const CONTAINMENT_TOL: f64 = 0.02;
/// Minimum distance from a certified tropical direction to the estimate.
pub const STRICT_GAP: f64 = 0.3;
pub const SANDWICH_SLACK: f64 = 1e-9;

fn directions_csv(d: &DirectionCloud) -> String {
    let mut buf = Vec::new();
    write_directions(d, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("utf8")
}

#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub id: String,
    pub estimate: LimitEstimate,
    pub hausdorff: f64,
    pub elapsed: Duration,
}

impl EstimateReport {
    pub fn csv(&self) -> String {
        directions_csv(&self.estimate.estimate)
    }
}

#[derive(Debug, Clone)]
pub struct FormulaReport {
    pub base: EstimateReport,
    /// Largest geodesic distance from an estimated direction to the
    /// tropical set of `φ_0`.
    pub containment: f64,
    pub containment_tol: f64,
    pub dequantized: String,
    /// Distance from a certified tropical direction to the estimate, for
    /// the fixtures where the containment is strict.
    pub strict_gap: Option<f64>,
}

pub fn tropical_set(f: &Formula) -> Result<(TropicalFormula, PolyhedralComplex), String> {
    let trop = dequantize_formula(f).map_err(|e| e.to_string())?;
    let cells = formula_cells(&trop, f.arity()).map_err(|e| e.to_string())?;
    Ok((trop, cells))
}

fn estimate(id: &str, source: Source<'_>, cfg: &SamplerConfig, target: &PolyhedralComplex) -> Result<EstimateReport, String> {
    let start = Instant::now();
    let estimate = estimate_limit_directions(source, cfg).map_err(|e| format!("{id}: {e}"))?;
    let elapsed = start.elapsed();
    let hausdorff = hausdorff_directions(&estimate.estimate, DirectionTarget::Complex(target)).map_err(|e| e.to_string())?;
    Ok(EstimateReport { id: id.to_string(), estimate, hausdorff, elapsed })
}

/// Direction certified to lie in the tropical set but not in the limit set.
fn strict_witness(id: &str) -> Option<[f64; 2]> {
    match id {
        "circle r=3/2" | "cubic" => Some([-1.0, 0.0]),
        _ => None,
    }
}

pub fn run_formula(fx: &FormulaFixture) -> Result<FormulaReport, String> {
    let base = estimate(&fx.id, Source::Formula { formula: &fx.formula, env: &fx.env }, &fx.config, &fx.target)?;
    let (trop, cells) = tropical_set(&fx.formula)?;
    let containment = base
        .estimate
        .estimate
        .directions
        .iter()
        .map(|d| cells.direction_distance(d).unwrap_or(std::f64::consts::PI))
        .fold(0.0, f64::max);
    let strict_gap = match strict_witness(&fx.id) {
        Some(w) => {
            if cells.direction_distance(&w).is_none_or(|d| d > 1e-9) {
                return Err(format!("{}: witness {w:?} is not in the tropical set", fx.id));
            }
            Some(sphere::distance_to_cloud(&w, &base.estimate.estimate.directions))
        }
        None => None,
    };
    Ok(FormulaReport {
        base,
        containment,
        containment_tol: CONTAINMENT_TOL + fx.config.cluster_tolerance,
        dequantized: trop.to_string(),
        strict_gap,
    })
}

impl FormulaReport {
    pub fn containment_ok(&self) -> bool {
        self.containment <= self.containment_tol && self.strict_gap.is_none_or(|g| g >= STRICT_GAP)
    }
}

pub fn run_cloud(fx: &CloudFixture) -> Result<EstimateReport, String> {
    estimate(&fx.id, Source::Points(&fx.cloud), &fx.config, &fx.target)
}

#[derive(Debug, Clone)]
pub struct UmbrellaReport {
    pub base: EstimateReport,
    /// `(-1, 0, 0)` lies in the relative interior of a 2-cell of the fan.
    pub ray_in_two_cell: bool,
    /// Largest distance from an estimated direction to `(-1, 0, 0)`.
    pub spread: f64,
    /// Distance from the fan direction `(-1, 0, 1)/√2` to the estimate.
    pub fan_gap: f64,
    pub fan_direction_in_fan: bool,
}

impl UmbrellaReport {
    pub fn passed(&self) -> bool {
        self.ray_in_two_cell
            && self.fan_direction_in_fan
            && !self.base.estimate.estimate.is_empty()
            && self.spread <= DIRECTION_TOL
            && self.base.hausdorff <= DIRECTION_TOL
            && self.fan_gap >= STRICT_GAP
    }
}

pub fn umbrella(seed: u64) -> Result<UmbrellaReport, String> {
    let fx = fixtures::umbrella(seed);
    let base = run_cloud(&fx)?;
    let f = normalize_polynomial(fixtures::UMBRELLA_POLYNOMIAL).map_err(|e| e.to_string())?;
    let nd = NewtonData::from_equation(&f, 3).map_err(|e| e.to_string())?;
    let fan = dual_fan(&nd);
    let ray = [-1.0, 0.0, 0.0];
    let ray_in_two_cell = fan.cells.iter().any(|c| c.dimension() == 2 && c.relative_interior_contains(&ray, 1e-9));
    let spread = base.estimate.estimate.directions.iter().map(|d| geodesic(d, &ray)).fold(0.0, f64::max);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let other = [-s, 0.0, s];
    let fan_direction_in_fan = fan.direction_distance(&other).is_some_and(|d| d < 1e-9);
    let fan_gap = sphere::distance_to_cloud(&other, &base.estimate.estimate.directions);
    Ok(UmbrellaReport { base, ray_in_two_cell, spread, fan_gap, fan_direction_in_fan })
}

const SANDWICH_PARAMS: [&str; 3] = ["a", "b", "c"];
const SANDWICH_EXPONENTS: [f64; 4] = [2.0, 0.5, 1.5, 3.0];

fn random_term(rng: &mut impl Rng, nvars: usize, depth: u32) -> Term {
    if depth == 0 || rng.random_bool(0.3) {
        return if rng.random_bool(0.6) {
            Term::var(rng.random_range(0..nvars))
        } else {
            Term::param(SANDWICH_PARAMS[rng.random_range(0..SANDWICH_PARAMS.len())])
        };
    }
    match rng.random_range(0..3) {
        0 => random_term(rng, nvars, depth - 1).add(random_term(rng, nvars, depth - 1)),
        1 => random_term(rng, nvars, depth - 1).mul(random_term(rng, nvars, depth - 1)),
        _ => random_term(rng, nvars, depth - 1).pow(SANDWICH_EXPONENTS[rng.random_range(0..SANDWICH_EXPONENTS.len())]),
    }
}

#[derive(Debug, Clone, Default)]
pub struct SandwichReport {
    pub terms: usize,
    pub evaluations: usize,
    /// `U_t - U_0 > log_{1/t} C`.
    pub upper_violations: usize,
    /// `U_t - U_0 < 0`.
    pub lower_violations: usize,
    /// Lower violations in terms using a parameter below 1.
    pub lower_with_small_param: usize,
    /// Violations of the two-sided bound from `sandwich_bounds`.
    pub two_sided_violations: usize,
    pub elapsed: Duration,
}

impl SandwichReport {
    pub fn stated_bound_holds(&self) -> bool {
        self.upper_violations == 0 && self.lower_violations == 0
    }

    /// Every failure is a lower-bound failure caused by a parameter below 1.
    pub fn failures_explained(&self) -> bool {
        self.upper_violations == 0 && self.lower_violations == self.lower_with_small_param
    }

    pub fn csv(&self) -> String {
        format!(
            "terms,evaluations,upper_violations,lower_violations,lower_with_small_param,two_sided_violations\n{},{},{},{},{},{}\n",
            self.terms, self.evaluations, self.upper_violations, self.lower_violations, self.lower_with_small_param, self.two_sided_violations
        )
    }
}

/// Random positive terms of depth at most 5 in three variables, parameters
/// in `(0, 10]`, points in `[-5, 5]^3` and `t = 1e-1, …, 1e-6`.
pub fn sandwich(seed: u64, terms: usize, points_per_term: usize) -> Result<SandwichReport, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = SandwichReport { terms, ..SandwichReport::default() };
    for _ in 0..terms {
        let u = random_term(&mut rng, 3, 5);
        let mut env = ParameterEnvironment::new();
        for p in SANDWICH_PARAMS {
            // (0, 10]
            env.insert(p, 10.0 - rng.random_range(0.0..10.0)).map_err(|e| e.to_string())?;
        }
        let mut used = BTreeSet::new();
        u.parameters(&mut used);
        let small = used.iter().any(|p| env.get(p).is_ok_and(|v| v < 1.0));
        let c = sandwich_constant(&u, &env).map_err(|e| e.to_string())?;
        let (lo, hi) = sandwich_bounds(&u, &env).map_err(|e| e.to_string())?;
        let u0 = dequantize_term(&u);
        for _ in 0..points_per_term {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..=5.0)).collect();
            let base = eval_tropical_term(&u0, &x);
            for k in 1..=6 {
                let t = 10f64.powi(-k);
                let s = -t.ln();
                let d = eval_t(&u, &x, t, &env).map_err(|e| e.to_string())? - base;
                r.evaluations += 1;
                if d > c.ln() / s + SANDWICH_SLACK {
                    r.upper_violations += 1;
                }
                if d < -SANDWICH_SLACK {
                    r.lower_violations += 1;
                    if small {
                        r.lower_with_small_param += 1;
                    }
                }
                if d < lo.ln() / s - SANDWICH_SLACK || d > hi.ln() / s + SANDWICH_SLACK {
                    r.two_sided_violations += 1;
                }
            }
        }
    }
    r.elapsed = start.elapsed();
    Ok(r)
}

#[derive(Debug, Clone, Default)]
pub struct ValuationReport {
    pub cases: usize,
    pub product: usize,
    pub sum: usize,
    pub order: usize,
}

impl ValuationReport {
    pub fn violations(&self) -> usize {
        self.product + self.sum + self.order
    }

    pub fn csv(&self) -> String {
        format!("cases,product,sum,order\n{},{},{},{}\n", self.cases, self.product, self.sum, self.order)
    }
}

fn random_series(rng: &mut impl Rng) -> PuiseuxSeries {
    loop {
        let n = rng.random_range(1..6);
        let terms: Vec<(Rational64, f64)> = (0..n)
            .map(|_| {
                let d = [1i64, 2, 3, 4, 6, 12][rng.random_range(0..6)];
                let e = Rational64::new(rng.random_range(-12..72), 2 * d);
                let c = rng.random_range(0.1..10.0) * if rng.random_bool(0.5) { -1.0 } else { 1.0 };
                (e, c)
            })
            .collect();
        if let Ok(s) = PuiseuxSeries::new(terms, Rational64::from_integer(DEFAULT_TRUNCATION)) {
            return s;
        }
    }
}

/// Valuation axioms on random truncated series: `v(ab) = v(a) + v(b)`,
/// `v(a + b) >= min` with equality for distinct valuations, and
/// `a < b => v(b) <= v(a)` on positive series.
pub fn valuation(seed: u64, cases: usize) -> ValuationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = ValuationReport { cases, ..ValuationReport::default() };
    for _ in 0..cases {
        let (a, b) = (random_series(&mut rng), random_series(&mut rng));
        match a.mul(&b) {
            Ok(p) if p.valuation() == a.valuation() + b.valuation() => {}
            _ => r.product += 1,
        }
        let m = a.valuation().min(b.valuation());
        let sum_ok = match a.add(&b) {
            Ok(s) => s.valuation() >= m && (a.valuation() == b.valuation() || s.valuation() == m),
            Err(NonarchError::ZeroBelowTruncation) => a.valuation() == b.valuation(),
            Err(_) => false,
        };
        if !sum_ok {
            r.sum += 1;
        }
        let pa = if a.is_positive() { a } else { a.neg() };
        let pb = if b.is_positive() { b } else { b.neg() };
        let order_ok = match pa.compare(&pb) {
            Ok(std::cmp::Ordering::Less) => pb.valuation() <= pa.valuation(),
            Ok(_) => pa.valuation() <= pb.valuation(),
            Err(NonarchError::Indeterminate) => true,
            Err(_) => false,
        };
        if !order_ok {
            r.order += 1;
        }
    }
    r
}

#[derive(Debug, Clone)]
pub struct DualFanReport {
    pub supports: Vec<NewtonData>,
    pub per_support: Vec<usize>,
    pub directions: usize,
    pub resolution: f64,
    /// Directions, over all supports, where the fan and the oracle disagree
    /// by more than the grid resolution.
    pub mismatches: usize,
}

impl DualFanReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("support,points,mismatches\n");
        for (i, (nd, m)) in self.supports.iter().zip(&self.per_support).enumerate() {
            out.push_str(&format!("{i},{},{m}\n", nd.support.len()));
        }
        out.push_str(&format!("total,{},{}\n", self.directions, self.mismatches));
        out
    }
}

fn random_support(rng: &mut impl Rng) -> NewtonData {
    let mut all: Vec<Vec<i64>> = (0..=4).flat_map(|i| (0..=4).map(move |j| vec![i, j])).collect();
    all.shuffle(rng);
    let k = rng.random_range(2..=6);
    let support: Vec<Vec<i64>> = all.into_iter().take(k).collect();
    let weights = (0..k).map(|_| rng.random_range(-8..=8) as f64 / rng.random_range(1..=4) as f64).collect();
    NewtonData::new(support, weights).expect("distinct support")
}

/// Compares `dual_fan` with the brute-force oracle on the unit circle.
/// A direction counts as a mismatch when the two disagree and its distance
/// to the fan differs from the resolution by more than `1e-9`.
pub fn dual_fan_vs_oracle(seed: u64, supports: usize, directions: usize) -> Result<DualFanReport, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = sphere::sphere_grid(2, directions, seed);
    let res = sphere::grid_resolution(2, directions);
    let mut per_support = Vec::new();
    let mut all = Vec::new();
    for _ in 0..supports {
        let nd = random_support(&mut rng);
        let fan = dual_fan(&nd);
        let kept = attained_twice_oracle(&nd, &grid, res);
        let kept: BTreeSet<Vec<u64>> = kept.directions.iter().map(|d| d.iter().map(|v| v.to_bits()).collect()).collect();
        let mut mismatches = 0;
        for d in &grid {
            let dist = complex_membership(d, &fan, 0.0).map_err(|e| e.to_string())?.1;
            let in_oracle = kept.contains(&d.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            if (dist - res).abs() > 1e-9 && in_oracle != (dist <= res) {
                mismatches += 1;
            }
        }
        all.push(nd);
        per_support.push(mismatches);
    }
    let mismatches = per_support.iter().sum();
    Ok(DualFanReport { supports: all, per_support, directions, resolution: res, mismatches })
}

#[derive(Debug, Clone)]
pub struct CellsReport {
    pub atoms: Vec<String>,
    pub checked: usize,
    pub disagreements: usize,
}

impl CellsReport {
    pub fn csv(&self) -> String {
        format!("atoms,checked,disagreements\n{},{},{}\n", self.atoms.len(), self.checked, self.disagreements)
    }
}

fn random_form(rng: &mut impl Rng) -> TropicalTerm {
    let mut acc: Option<TropicalTerm> = None;
    for i in 0..2 {
        let c = rng.random_range(-4..=6) as f64 / 2.0;
        if c == 0.0 {
            continue;
        }
        let v = TropicalTerm::Scale(c, Box::new(TropicalTerm::Var(i)));
        acc = Some(match acc {
            None => v,
            Some(a) => TropicalTerm::Plus(Box::new(a), Box::new(v)),
        });
    }
    acc.unwrap_or(TropicalTerm::Zero)
}

fn random_atom(rng: &mut impl Rng) -> TropicalFormula {
    let side = |rng: &mut ChaCha8Rng| {
        let n = rng.random_range(1..=5);
        let forms: Vec<TropicalTerm> = (0..n).map(|_| random_form(rng)).collect();
        if forms.len() == 1 {
            forms.into_iter().next().unwrap()
        } else {
            TropicalTerm::Max(forms)
        }
    };
    let mut r = ChaCha8Rng::seed_from_u64(rng.random());
    let rel = if r.random_bool(0.5) { Relation::Eq } else { Relation::Leq };
    TropicalFormula::Atom { rel, lhs: side(&mut r), rhs: side(&mut r) }
}

/// Grid comparison of `tropical_atom_cells` with direct evaluation for the
/// circle and cubic atoms and `random` random atoms.
pub fn cells_vs_evaluation(seed: u64, random: usize) -> Result<CellsReport, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut atoms = Vec::new();
    for text in [fixtures::CIRCLE_FORMULA, fixtures::CUBIC_FORMULA] {
        atoms.push(tropical_set(&loglimit::formula::parse_formula(text).map_err(|e| e.to_string())?)?.0);
    }
    atoms.extend((0..random).map(|_| random_atom(&mut rng)));
    let pts = GridSpec::default().points();
    let mut disagreements = 0;
    for a in &atoms {
        let cells = tropical_atom_cells(a, 2).map_err(|e| e.to_string())?;
        for p in &pts {
            let by_eval = eval_tropical_formula(a, p, 1e-9).map_err(|e| e.to_string())?;
            if cells.contains(p, 1e-9) != by_eval {
                disagreements += 1;
            }
        }
    }
    Ok(CellsReport { atoms: atoms.iter().map(|a| a.to_string()).collect(), checked: pts.len() * atoms.len(), disagreements })
}

#[derive(Debug, Clone)]
pub struct ExactReport {
    pub sample: usize,
    pub threshold: f64,
    pub psi: String,
    pub psi_disagreements: usize,
    pub plain_disagreements: Vec<[f64; 2]>,
    /// Grid points with `x2 = 0, x1 < 0`.
    pub half_line_points: usize,
}

impl ExactReport {
    pub fn plain_on_half_line(&self) -> bool {
        self.plain_disagreements.len() == self.half_line_points && self.plain_disagreements.iter().all(|p| p[1] == 0.0 && p[0] < 0.0)
    }

    pub fn passed(&self) -> bool {
        self.psi_disagreements == 0 && self.plain_on_half_line()
    }

    pub fn csv(&self) -> String {
        let mut out = format!("# threshold={}\n# psi={}\nx1,x2\n", self.threshold, self.psi);
        for p in &self.plain_disagreements {
            out.push_str(&format!("{},{}\n", p[0], p[1]));
        }
        out
    }
}

/// The guard cone around `(-1, 0)` removing the extra half-line of the
/// cubic's tropical set.
pub fn cubic_cover() -> ConeSpec {
    ConeSpec::sector_2d([1.0, 1.0], [1.0, -1.0]).expect("valid sector")
}

pub fn exact_cubic(seed: u64) -> Result<ExactReport, String> {
    let fx = fixtures::cubic(seed);
    // bisected roots only: thickened equalities admit points near (0, 1),
    // which lies on the curve but outside the open orthant
    let cfg = SamplerConfig { rng_seed: seed, eta0: f64::MIN_POSITIVE, ..SamplerConfig::default() };
    let sample = sample_members(&fx.formula, &fx.env, &cfg).map_err(|e| e.to_string())?;
    let cone = cubic_cover();
    let threshold = find_threshold(&sample, &cone).map_err(|e| e.to_string())?.ok_or("no threshold clears the sample")?;
    let psi = assemble_exact(&fx.formula, &[cone], threshold, &sample).map_err(|e| e.to_string())?;
    let grid = GridSpec::default();
    let checked = verify_exactness(&psi, &fx.target, &grid).map_err(|e| e.to_string())?;
    let plain = verify_exactness(&fx.formula, &fx.target, &grid).map_err(|e| e.to_string())?;
    let half_line_points = grid.points().iter().filter(|p| p[1] == 0.0 && p[0] < 0.0).count();
    Ok(ExactReport {
        sample: sample.len(),
        threshold,
        psi: psi.to_string(),
        psi_disagreements: checked.disagreements.len(),
        plain_disagreements: plain.disagreements,
        half_line_points,
    })
}

#[derive(Debug, Clone)]
pub struct PatchworkReport {
    pub t: f64,
    pub root: f64,
    pub log_root: f64,
    pub yes_at_minus_one: bool,
    pub no_at_zero: bool,
    pub series_log: Vec<Rational64>,
}

impl PatchworkReport {
    pub fn passed(&self) -> bool {
        (self.log_root + 1.0).abs() <= 0.02 && self.yes_at_minus_one && self.no_at_zero
    }

    pub fn csv(&self) -> String {
        format!("t,root,log_root,yes_at_-1,no_at_0\n{:e},{:e},{},{},{}\n", self.t, self.root, self.log_root, self.yes_at_minus_one, self.no_at_zero)
    }
}

pub const PATCHWORK_POLYNOMIAL: &str = "omega = (2); coeff = 1\nomega = (1); coeff = 1\nomega = (0); coeff = -t\n";

/// `x^2 + x - t` at `t = 1e-6`.
pub fn patchwork() -> Result<PatchworkReport, String> {
    let f = PuiseuxPolynomial::parse(PATCHWORK_POLYNOMIAL).map_err(|e| e.to_string())?;
    let t = 1e-6;
    let roots = f.instantiate(t).and_then(|p| p.positive_roots()).map_err(|e| e.to_string())?;
    let &[root] = roots.as_slice() else {
        return Err(format!("expected one positive root, found {}", roots.len()));
    };
    let cfg = MembershipConfig::default();
    let at = |l: i64| lambda_membership_hypersurface(&f, &[Rational64::from_integer(l)], &cfg).map_err(|e| e.to_string());
    let yes_at_minus_one = matches!(at(-1)?, LambdaMembership::Yes(_));
    let no_at_zero = at(0)? == LambdaMembership::No;
    // x(t) = 2t / (1 + (1 + 4t)^{1/2}) as a series
    let s = |text: &str| loglimit::nonarch::parse_series(text, Rational64::from_integer(DEFAULT_TRUNCATION)).map_err(|e| e.to_string());
    let one = s("1")?;
    let x = s("1 + 4*t")?
        .pow(Rational64::new(1, 2))
        .and_then(|r| r.sub(&one))
        .and_then(|r| r.scale(0.5))
        .map_err(|e| e.to_string())?;
    let series_log = log_map(&loglimit::nonarch::ValuedPoint(vec![x]));
    Ok(PatchworkReport { t, root, log_root: root.ln() / (1.0 / t).ln(), yes_at_minus_one, no_at_zero, series_log })
}
