use loglimit::amoeba::{PointCloud, Space};
use loglimit::dequant::{eval_formula_classical, eval_formula_t};
use loglimit::exact::{assemble_exact, exhaustion_check, negated_guard, ConeSpec, THRESHOLDS};
use loglimit::formula::{parse_formula, ParameterEnvironment, Term};
use proptest::prelude::*;

fn sector() -> impl Strategy<Value = ConeSpec> {
    (0.0f64..std::f64::consts::TAU, 0.2f64..3.0).prop_filter_map("invalid sector", |(a, w)| {
        // outward normals of the edges at angles a and a + w
        let n1 = [(a + std::f64::consts::FRAC_PI_2).cos(), (a + std::f64::consts::FRAC_PI_2).sin()];
        let n2 = [(a + w - std::f64::consts::FRAC_PI_2).cos(), (a + w - std::f64::consts::FRAC_PI_2).sin()];
        let r = |v: f64| (v * 8.0).round() / 8.0;
        ConeSpec::sector_2d([r(n1[0]), r(n1[1])], [r(n2[0]), r(n2[1])]).ok()
    })
}

/// Points of the cubic `x1^2 + x2^2 + 1 = 2 x2 + x1^3` on both branches.
fn cubic_points() -> PointCloud {
    let mut pts = Vec::new();
    for k in 0..400 {
        let x1 = 1.0 + 10f64.powf(-6.0 + 12.0 * k as f64 / 399.0);
        let d = (x1.powi(3) - x1.powi(2)).sqrt();
        pts.push(vec![x1, 1.0 + d]);
        if 1.0 - d > 0.0 {
            pts.push(vec![x1, 1.0 - d]);
        }
    }
    PointCloud::new(2, pts, Space::Classical).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn negated_guards_are_positive_and_t_independent(c in sector(), x in prop::collection::vec(-3.0f64..3.0, 3)) {
        let neg = negated_guard(&c, Term::var(2));
        prop_assert!(neg.is_positive());
        let env = ParameterEnvironment::new();
        let first = eval_formula_t(&neg, &x, 0.1, &env, 0.0).unwrap();
        for t in [1e-2, 1e-4, 1e-8] {
            prop_assert_eq!(eval_formula_t(&neg, &x, t, &env, 0.0).unwrap(), first);
        }
    }

    #[test]
    fn exhaustion_sets_are_monotone(c in sector(), u in prop::collection::vec(-20.0f64..5.0, 2)) {
        let x: Vec<f64> = u.iter().map(|v| 10f64.powf(*v)).collect();
        for w in THRESHOLDS.windows(2) {
            prop_assert!(!c.in_exhaustion_set(&x, w[1]) || c.in_exhaustion_set(&x, w[0]));
        }
    }

    #[test]
    fn assembly_keeps_every_sampled_point(c in sector(), hi in 0usize..6) {
        let sample = cubic_points();
        let phi = parse_formula("x1^2 + x2^2 + 1 = 2*x2 + x1^3").unwrap();
        let h = THRESHOLDS[hi];
        let report = exhaustion_check(&sample, &c, h).unwrap();
        prop_assume!(report.passed);
        let psi = assemble_exact(&phi, &[c], h, &sample).unwrap();
        prop_assert!(psi.is_positive());
        let env = ParameterEnvironment::new();
        for p in &sample.points {
            prop_assert!(eval_formula_classical(&psi, p, &env, 1e-9).unwrap(), "{:?} fails {}", p, psi);
        }
    }
}
