//! The worked examples: formulas, parameter values, sampler settings,
//! target limit sets and generated point clouds.

use std::f64::consts::PI;

use loglimit::amoeba::{PointCloud, SamplerConfig, Space, TSchedule};
use loglimit::formula::{parse_formula, Formula, ParameterEnvironment};
use loglimit::tropical::{basic_cone, exponential_cone_membership, AffineForm, Constraint, PolyhedralComplex, Polyhedron};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct FormulaFixture {
    pub id: String,
    pub formula: Formula,
    pub env: ParameterEnvironment,
    pub config: SamplerConfig,
    pub target: PolyhedralComplex,
}

pub struct CloudFixture {
    pub id: String,
    pub cloud: PointCloud,
    pub config: SamplerConfig,
    pub target: PolyhedralComplex,
}

/// `t = 10^{-10k}`, `k = 1..6`.
pub fn deep_schedule() -> TSchedule {
    TSchedule { t0: 1e-10, ratio: 1e-10, count: 6 }
}

pub fn deep_config(seed: u64) -> SamplerConfig {
    SamplerConfig { t_schedule: deep_schedule(), rng_seed: seed, ..SamplerConfig::default() }
}

/// Polyhedron from rows `(coeffs, rel)` with zero constants; `true` marks
/// an equality.
pub fn cone(dim: usize, rows: &[(&[f64], bool)]) -> Polyhedron {
    let constraints = rows
        .iter()
        .map(|(c, eq)| {
            let f = AffineForm::new(c.to_vec(), 0.0);
            if *eq { Constraint::eq(f) } else { Constraint::leq(f) }
        })
        .collect();
    Polyhedron { dim, constraints }
}

fn complex(dim: usize, cells: Vec<Polyhedron>) -> PolyhedralComplex {
    PolyhedralComplex { dim, cells }
}

/// `{x1^2 <= x2 <= x1^{1/2}}`, limit set `{2x1 <= x2 <= x1/2}`.
pub fn pow(seed: u64) -> FormulaFixture {
    FormulaFixture {
        id: "pow".into(),
        formula: parse_formula("x1^2 <= x2 & x2 <= x1^(1/2)").unwrap(),
        env: ParameterEnvironment::new(),
        config: SamplerConfig { rng_seed: seed, ..SamplerConfig::default() },
        target: complex(2, vec![cone(2, &[(&[2.0, -1.0], false), (&[-0.5, 1.0], false)])]),
    }
}

pub const CIRCLE_FORMULA: &str = "x1^2 + x2^2 + a1 = a2*x1 + a3*x2";

/// Radii of the circle trio, as `(label, r)`.
pub const CIRCLE_RADII: [(&str, f64); 3] = [("3/2", 1.5), ("5/2", 2.5), ("7/2", 3.5)];

/// Circle of radius `r` about `(2, 3)`: `a1 = 13 - r^2`, `a2 = 4`, `a3 = 6`.
pub fn circle(label: &str, r: f64, seed: u64) -> FormulaFixture {
    let env = ParameterEnvironment::from_pairs([("a1", 13.0 - r * r), ("a2", 4.0), ("a3", 6.0)]).unwrap();
    let west = cone(2, &[(&[0.0, 1.0], true), (&[1.0, 0.0], false)]);
    let south = cone(2, &[(&[1.0, 0.0], true), (&[0.0, 1.0], false)]);
    let cells = match label {
        "3/2" => vec![],
        "5/2" => vec![west],
        _ => vec![west, south],
    };
    FormulaFixture {
        id: format!("circle r={label}"),
        formula: parse_formula(CIRCLE_FORMULA).unwrap(),
        env,
        config: deep_config(seed),
        target: complex(2, cells),
    }
}

pub const CUBIC_FORMULA: &str = "x1^2 + x2^2 + 1 = 2*x2 + x1^3";

/// `{x1 = 0, x2 <= 0} ∪ {x1 >= 0, 2x2 = 3x1}`.
pub fn cubic_target() -> PolyhedralComplex {
    complex(
        2,
        vec![
            cone(2, &[(&[1.0, 0.0], true), (&[0.0, 1.0], false)]),
            cone(2, &[(&[-1.0, 0.0], false), (&[-3.0, 2.0], true)]),
        ],
    )
}

pub fn cubic(seed: u64) -> FormulaFixture {
    FormulaFixture {
        id: "cubic".into(),
        formula: parse_formula(CUBIC_FORMULA).unwrap(),
        env: ParameterEnvironment::new(),
        config: deep_config(seed),
        target: cubic_target(),
    }
}

pub const UMBRELLA_POLYNOMIAL: &str = "x^2*(1 - (z - 2)^2) - x^4 - (y - 1)^2 = 0";

/// Points of the umbrella `x^2 (1 - (z - 2)^2) = x^4 + (y - 1)^2`, solved
/// for `y = 1 ± x sqrt(1 - (z - 2)^2 - x^2)` with `x` log-spaced down to
/// `1e-300` and `z ∈ (1, 3)`.
pub fn umbrella_points() -> PointCloud {
    let mut pts = Vec::new();
    for i in 0..=600 {
        let x = 10f64.powf(-0.1 - 299.9 * i as f64 / 600.0);
        for j in 1..40 {
            let z = 1.0 + 2.0 * j as f64 / 40.0;
            let w = 1.0 - (z - 2.0) * (z - 2.0) - x * x;
            if w <= 0.0 {
                continue;
            }
            let d = x * w.sqrt();
            pts.push(vec![x, 1.0 + d, z]);
            pts.push(vec![x, 1.0 - d, z]);
        }
    }
    classical(3, pts)
}

/// Real limit set: the ray `(-1, 0, 0)`.
pub fn umbrella(seed: u64) -> CloudFixture {
    let target = complex(3, vec![cone(3, &[(&[0.0, 1.0, 0.0], true), (&[0.0, 0.0, 1.0], true), (&[1.0, 0.0, 0.0], false)])]);
    cloud_fixture("umbrella", umbrella_points(), target, seed)
}

fn classical(dim: usize, points: Vec<Vec<f64>>) -> PointCloud {
    let points = points.into_iter().filter(|p| p.iter().all(|v| v.is_normal() && *v > 0.0)).collect();
    PointCloud::new(dim, points, Space::Classical).expect("generated points are positive")
}

/// `y = sin x + 2` for `x ∈ (0, 5]`, with `x` log-spaced down to `1e-300`.
pub fn sin_points() -> PointCloud {
    let n = 3000;
    let lo = -(5f64.log10());
    let pts = (0..n)
        .map(|k| {
            let u = lo + (300.0 - lo) * k as f64 / (n - 1) as f64;
            let x = 10f64.powf(-u);
            vec![x, x.sin() + 2.0]
        })
        .collect();
    classical(2, pts)
}

/// `y = exp(-1/x^2)` for `x` log-spaced in `[0.0376, 1e300]`; below that
/// range `y` underflows.
pub fn exp_points() -> PointCloud {
    let n = 3000;
    let lo = 0.0376f64.log10();
    let pts = (0..n)
        .map(|k| {
            let s = lo + (300.0 - lo) * k as f64 / (n - 1) as f64;
            let x = 10f64.powf(s);
            vec![x, (-1.0 / (x * x)).exp()]
        })
        .collect();
    classical(2, pts)
}

/// `y = sin(1/x)` restricted to `y > 0`.
///
/// Near `x = 0` the points are `x = 1/(2πk + δ)`, `y = sin δ` for integer
/// `k` up to `1e60` and `δ` down to `1e-300`: the value `y` is taken from
/// `δ` rather than recomputed from the rounded `x`, which would lose all
/// digits of `δ`. For `x > 1/π` the curve is sampled directly.
pub fn sininv_points() -> PointCloud {
    let mut pts = Vec::new();
    for m in 0..=240 {
        let k = 10f64.powf(m as f64 / 4.0).round();
        let deltas = std::iter::once(PI / 2.0).chain((2..=600).map(|j| 10f64.powf(-(j as f64) / 2.0)));
        for d in deltas {
            pts.push(vec![1.0 / (2.0 * PI * k + d), d.sin()]);
        }
    }
    for i in 0..=1000 {
        let x = 10f64.powf(300.0 * i as f64 / 1000.0).max(0.5);
        pts.push(vec![x, (1.0 / x).sin()]);
    }
    classical(2, pts)
}

fn cloud_fixture(id: &str, cloud: PointCloud, target: PolyhedralComplex, seed: u64) -> CloudFixture {
    CloudFixture { id: id.to_string(), cloud, config: deep_config(seed), target }
}

pub fn sin(seed: u64) -> CloudFixture {
    let target = complex(2, vec![cone(2, &[(&[0.0, 1.0], true), (&[1.0, 0.0], false)])]);
    cloud_fixture("sin", sin_points(), target, seed)
}

/// `{x2 = 0, x1 >= 0} ∪ {x1 = 0, x2 <= 0}`.
pub fn exp(seed: u64) -> CloudFixture {
    let target = complex(
        2,
        vec![cone(2, &[(&[0.0, 1.0], true), (&[-1.0, 0.0], false)]), cone(2, &[(&[1.0, 0.0], true), (&[0.0, 1.0], false)])],
    );
    cloud_fixture("exp", exp_points(), target, seed)
}

/// `{x1 <= 0, x2 <= 0} ∪ {x1 >= 0, x2 = -x1}`.
pub fn sininv(seed: u64) -> CloudFixture {
    let target = complex(
        2,
        vec![cone(2, &[(&[1.0, 0.0], false), (&[0.0, 1.0], false)]), cone(2, &[(&[-1.0, 0.0], false), (&[1.0, 1.0], true)])],
    );
    cloud_fixture("sininv", sininv_points(), target, seed)
}

/// Points of `E_{N,h}` drawn uniformly from the `log10` box `[-100, 0]^n`.
pub fn exponential_cone_points(n: &[u32], h: f64, count: usize, seed: u64) -> PointCloud {
    let dim = n.len() + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = (0..count)
        .map(|_| (0..dim).map(|_| 10f64.powf(rng.random_range(-100.0..0.0))).collect::<Vec<f64>>())
        .filter(|x| exponential_cone_membership(x, n, h))
        .collect();
    classical(dim, pts)
}

pub fn basic_cone_fixture(n: &'static [u32], seed: u64) -> CloudFixture {
    let id = if n.len() == 1 { "basic-cone N=(2)" } else { "basic-cone N=(2,3)" };
    let cloud = exponential_cone_points(n, 0.5, 200_000, seed);
    cloud_fixture(id, cloud, complex(n.len() + 1, vec![basic_cone(n)]), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use loglimit::dequant::eval_formula_classical;
    use loglimit::formula::normalize_polynomial;

    #[test]
    fn generated_clouds_lie_on_their_curves() {
        for p in &sin_points().points {
            assert!(p[0] <= 5.0 + 1e-12 && (p[1] - p[0].sin() - 2.0).abs() < 1e-15);
        }
        for p in &exp_points().points {
            assert!((p[1] - (-1.0 / (p[0] * p[0])).exp()).abs() <= 1e-15 * p[1].max(1e-300));
        }
        let s = sininv_points();
        assert!(s.points.iter().all(|p| p[1] > 0.0 && p[1] <= 1.0));
        // small k: the recomputed value agrees
        for p in s.points.iter().filter(|p| p[0] > 0.01 && p[1] > 1e-6) {
            assert!(((1.0 / p[0]).sin() - p[1]).abs() < 1e-9, "{p:?}");
        }
    }

    #[test]
    fn circle_points_satisfy_the_fixture() {
        for (label, r) in CIRCLE_RADII {
            let f = circle(label, r, 0);
            // leftmost point of the circle
            let x = [2.0 - r, 3.0];
            if x[0] > 0.0 {
                assert!(eval_formula_classical(&f.formula, &x, &f.env, 1e-12).unwrap());
            }
        }
    }

    #[test]
    fn umbrella_points_satisfy_the_equation() {
        let f = normalize_polynomial(UMBRELLA_POLYNOMIAL).unwrap();
        let env = ParameterEnvironment::new();
        for p in umbrella_points().points.iter().filter(|p| p[0] > 1e-4) {
            assert!(eval_formula_classical(&f, p, &env, 1e-9).unwrap(), "{p:?}");
        }
    }

    #[test]
    fn exponential_cone_points_are_members() {
        let c = exponential_cone_points(&[2, 3], 0.5, 20_000, 1);
        assert!(c.points.len() > 100);
        assert!(c.points.iter().all(|x| exponential_cone_membership(x, &[2, 3], 0.5)));
    }
}
