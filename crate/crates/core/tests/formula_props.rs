mod common;

use loglimit::dequant::eval_formula_classical;
use loglimit::formula::{normalize_polynomial, parse_formula, parse_term, ParameterEnvironment};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn term_print_parse_round_trip(t in common::term(4, 5, vec![2.0, 0.5, -1.0, 1.25, 3.0, 0.1], true)) {
        let text = t.to_string();
        prop_assert_eq!(parse_term(&text).unwrap(), t, "{}", text);
    }

    #[test]
    fn formula_print_parse_round_trip(f in common::formula(3)) {
        let text = f.to_string();
        prop_assert_eq!(parse_formula(&text).unwrap(), f, "{}", text);
    }
}

/// Monomials as (coefficient, exponents of x and y).
fn poly_text(side: &[(i64, u32, u32)]) -> String {
    if side.is_empty() {
        return "0".into();
    }
    let mut s = String::new();
    for (k, (c, ex, ey)) in side.iter().enumerate() {
        if k == 0 {
            if *c < 0 {
                s.push('-');
            }
        } else {
            s.push_str(if *c < 0 { " - " } else { " + " });
        }
        s.push_str(&format!("{}*x^{}*y^{}", c.abs(), ex, ey));
    }
    s
}

fn poly_value(side: &[(i64, u32, u32)], x: f64, y: f64) -> f64 {
    side.iter().map(|(c, ex, ey)| *c as f64 * x.powi(*ex as i32) * y.powi(*ey as i32)).sum()
}

fn side() -> impl Strategy<Value = Vec<(i64, u32, u32)>> {
    prop::collection::vec(((-6i64..=6).prop_filter("nonzero", |c| *c != 0), 0u32..4, 0u32..4), 0..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn normalization_preserves_truth(lhs in side(), rhs in side(), leq in prop::bool::ANY, pts in prop::collection::vec((1u32..5, 1u32..5), 10)) {
        let rel = if leq { "<=" } else { "=" };
        let text = format!("{} {} {}", poly_text(&lhs), rel, poly_text(&rhs));
        let f = match normalize_polynomial(&text) {
            Ok(f) => f,
            Err(e) => return Err(TestCaseError::fail(format!("{text}: {e}"))),
        };
        let env = ParameterEnvironment::new();
        for (x, y) in pts {
            let (x, y) = (x as f64, y as f64);
            let (p, q) = (poly_value(&lhs, x, y), poly_value(&rhs, x, y));
            let expected = if leq { p <= q } else { p == q };
            let got = eval_formula_classical(&f, &[x, y], &env, 0.0).unwrap();
            prop_assert_eq!(got, expected, "{} -> {} at ({}, {})", text, f, x, y);
        }
    }
}
