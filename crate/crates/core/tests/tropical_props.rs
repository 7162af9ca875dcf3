use loglimit::dequant::{eval_tropical_formula, TropicalFormula, TropicalTerm};
use loglimit::formula::Relation;
use loglimit::sphere::{grid_resolution, sphere_grid};
use loglimit::tropical::{attained_twice_oracle, complex_membership, dual_fan, tropical_atom_cells, NewtonData};
use proptest::prelude::*;

fn form() -> impl Strategy<Value = TropicalTerm> {
    prop::collection::vec(-4i32..=6, 2).prop_map(|c| {
        let parts: Vec<TropicalTerm> = c
            .iter()
            .enumerate()
            .filter(|(_, k)| **k != 0)
            .map(|(i, k)| TropicalTerm::Scale(*k as f64 / 2.0, Box::new(TropicalTerm::Var(i))))
            .collect();
        parts.into_iter().reduce(|a, b| TropicalTerm::Plus(Box::new(a), Box::new(b))).unwrap_or(TropicalTerm::Zero)
    })
}

fn side() -> impl Strategy<Value = TropicalTerm> {
    prop::collection::vec(form(), 1..=5).prop_map(|mut v| if v.len() == 1 { v.pop().unwrap() } else { TropicalTerm::Max(v) })
}

fn atom() -> impl Strategy<Value = TropicalFormula> {
    (any::<bool>(), side(), side()).prop_map(|(eq, lhs, rhs)| TropicalFormula::Atom {
        rel: if eq { Relation::Eq } else { Relation::Leq },
        lhs,
        rhs,
    })
}

fn support() -> impl Strategy<Value = NewtonData> {
    (prop::collection::btree_set((0i64..=4, 0i64..=4), 2..=6), prop::collection::vec((-8i32..=8, 1i32..=4), 6)).prop_map(|(pts, w)| {
        let support: Vec<Vec<i64>> = pts.into_iter().map(|(a, b)| vec![a, b]).collect();
        let weights = w.iter().take(support.len()).map(|(n, d)| *n as f64 / *d as f64).collect();
        NewtonData::new(support, weights).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn atom_cells_agree_with_evaluation(a in atom()) {
        let cells = tropical_atom_cells(&a, 2).unwrap();
        // zero constants: every cell is a cone
        prop_assert!(cells.cells.iter().all(|c| c.is_cone()));
        for i in 0..=40 {
            for j in 0..=40 {
                let p = [(i as f64 - 20.0) / 10.0, (j as f64 - 20.0) / 10.0];
                prop_assert_eq!(cells.contains(&p, 1e-9), eval_tropical_formula(&a, &p, 1e-9).unwrap(), "{} at {:?}", a, p);
            }
        }
    }

    #[test]
    fn dual_fan_matches_the_oracle(nd in support()) {
        let grid = sphere_grid(2, 4000, 1);
        let res = grid_resolution(2, 4000);
        let fan = dual_fan(&nd);
        let kept = attained_twice_oracle(&nd, &grid, res);
        for d in &grid {
            let dist = complex_membership(d, &fan, 0.0).unwrap().1;
            if (dist - res).abs() > 1e-9 {
                prop_assert_eq!(kept.directions.contains(d), dist <= res, "{:?} {}", d, dist);
            }
        }
    }
}
