#![allow(dead_code)]

use loglimit::formula::{Formula, Relation, Term};
use proptest::prelude::*;

pub const PARAMS: [&str; 3] = ["a", "b1", "c"];

fn leaf(nvars: usize, with_consts: bool) -> BoxedStrategy<Term> {
    let var = (0..nvars).prop_map(Term::Var);
    let param = prop::sample::select(&PARAMS[..]).prop_map(Term::param);
    if with_consts {
        prop_oneof![3 => var, 2 => param, 1 => (1u32..40).prop_map(|k| Term::Const(k as f64 / 4.0))].boxed()
    } else {
        prop_oneof![3 => var, 2 => param].boxed()
    }
}

/// Random terms of depth at most `depth` over `nvars` variables with
/// exponents drawn from `exponents`.
pub fn term(nvars: usize, depth: u32, exponents: Vec<f64>, with_consts: bool) -> BoxedStrategy<Term> {
    leaf(nvars, with_consts)
        .prop_recursive(depth, 64, 2, move |inner| {
            let ex = exponents.clone();
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(b)),
                (inner, prop::sample::select(ex)).prop_map(|(a, e)| a.pow(e)),
            ]
        })
        .boxed()
}

pub fn formula(nvars: usize) -> impl Strategy<Value = Formula> {
    let atom = (
        prop::bool::ANY,
        term(nvars, 3, vec![2.0, 0.5, -1.0, 1.5, 3.0], true),
        term(nvars, 3, vec![2.0, 0.5, -1.0, 1.5, 3.0], true),
    )
        .prop_map(|(eq, l, r)| Formula::Atom { rel: if eq { Relation::Eq } else { Relation::Leq }, lhs: l, rhs: r });
    let body = atom.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::And),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::Or),
            inner.prop_map(|g| Formula::Not(Box::new(g))),
        ]
    });
    (body, 0u8..3).prop_map(move |(b, q)| match q {
        0 => b,
        1 => Formula::Exists(nvars, Box::new(b)),
        _ => Formula::Forall(nvars, Box::new(b)),
    })
}
