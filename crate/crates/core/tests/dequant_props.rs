mod common;

use loglimit::dequant::{
    dequantize_term, eval_classical, eval_t, eval_tropical_term, sandwich_bounds, sandwich_constant,
};
use loglimit::formula::{parse_term, ParameterEnvironment, Term};
use proptest::prelude::*;

fn env_strategy(lo: f64, hi: f64) -> impl Strategy<Value = ParameterEnvironment> {
    prop::collection::vec(lo..=hi, 3).prop_map(|vals| {
        ParameterEnvironment::from_pairs(common::PARAMS.iter().copied().zip(vals)).unwrap()
    })
}

fn t_strategy() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
}

fn slack(t: f64) -> f64 {
    1e-9 * (1.0 + 1.0 / -t.ln())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn semifield_isomorphism(
        u in common::term(3, 5, vec![2.0, 0.5, -1.0, 1.5], true),
        x in prop::collection::vec(-1.0f64..1.0, 3),
        t in 0.001f64..0.9,
        env in env_strategy(0.1, 10.0),
    ) {
        let s = -t.ln();
        let classical_point: Vec<f64> = x.iter().map(|v| (v * s).exp()).collect();
        let c = eval_classical(&u, &classical_point, &env).unwrap();
        prop_assume!(c.is_finite() && c > 0.0 && c.ln().abs() < 600.0);
        let expected = c.ln() / s;
        let got = eval_t(&u, &x, t, &env).unwrap();
        prop_assert!((got - expected).abs() <= 1e-9 * expected.abs().max(1.0), "{} : {} vs {}", u, got, expected);
    }

    #[test]
    fn two_sided_bounds_hold_for_all_parameters_and_exponents(
        u in common::term(3, 5, vec![2.0, 0.5, -1.0, 1.5, -0.5], true),
        x in prop::collection::vec(-5.0f64..5.0, 3),
        t in t_strategy(),
        env in env_strategy(1e-3, 10.0),
    ) {
        let (lo, hi) = sandwich_bounds(&u, &env).unwrap();
        let s = -t.ln();
        let d = eval_t(&u, &x, t, &env).unwrap() - eval_tropical_term(&dequantize_term(&u), &x);
        prop_assert!(d >= lo.ln() / s - slack(t), "{}: {} < {}", u, d, lo.ln() / s);
        prop_assert!(d <= hi.ln() / s + slack(t), "{}: {} > {}", u, d, hi.ln() / s);
    }

    #[test]
    fn stated_bound_holds_for_parameters_at_least_one(
        u in common::term(3, 5, vec![2.0, 0.5, 1.5, 3.0], false),
        x in prop::collection::vec(-5.0f64..5.0, 3),
        t in t_strategy(),
        env in env_strategy(1.0, 10.0),
    ) {
        let c = sandwich_constant(&u, &env).unwrap();
        let s = -t.ln();
        let d = eval_t(&u, &x, t, &env).unwrap() - eval_tropical_term(&dequantize_term(&u), &x);
        prop_assert!(d >= -slack(t), "{}: {}", u, d);
        prop_assert!(d <= c.ln() / s + slack(t), "{}: {} > {}", u, d, c.ln() / s);
    }
}

#[test]
fn stated_lower_bound_fails_for_small_parameters() {
    // U_t = log_{1/t} 0.5 < 0 = U_0
    let env = ParameterEnvironment::new().with("a", 0.5).unwrap();
    let u = Term::param("a");
    let d = eval_t(&u, &[], 0.1, &env).unwrap() - eval_tropical_term(&dequantize_term(&u), &[]);
    assert!(d < -0.3);
}

#[test]
fn convergence_is_uniform_and_monotone_on_paper_terms() {
    let env = ParameterEnvironment::from_pairs([("a1", 6.75), ("a2", 4.0), ("a3", 6.0)]).unwrap();
    for text in ["x1^2 + x2^2 + a1", "a2*x1 + a3*x2", "x1^2 + x2^2 + 1", "(x1 + x2)^3 * (x1 + 1)"] {
        let u = parse_term(text).unwrap();
        let u0 = dequantize_term(&u);
        let c = sandwich_constant(&u, &env).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..=6 {
            let t = 10f64.powi(-k);
            let mut sup = f64::NEG_INFINITY;
            for i in 0..=40 {
                for j in 0..=40 {
                    let x = [-5.0 + i as f64 * 0.25, -5.0 + j as f64 * 0.25];
                    sup = sup.max(eval_t(&u, &x, t, &env).unwrap() - eval_tropical_term(&u0, &x));
                }
            }
            assert!(sup <= prev + 1e-12, "{text}: not monotone at t = {t}");
            assert!(sup <= c.ln() / -t.ln() + 1e-9, "{text}: {sup} above bound");
            prev = sup;
        }
    }
}
