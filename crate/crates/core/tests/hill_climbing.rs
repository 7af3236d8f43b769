mod common;

use common::*;
use mctsbn_core::{
    hc_order_constrained, hc_unconstrained, is_consistent, parse_bif, BdeuScorer, Dag, Dataset,
    HcOptions, PartialOrder,
};
use proptest::prelude::*;

fn chain_data() -> Dataset {
    parse_bif(&chain_bif())
        .unwrap()
        .forward_sample(5000, 7)
        .unwrap()
}

fn best_of(d: &Dataset, dags: &[Dag]) -> (f64, Vec<Dag>) {
    let scores: Vec<f64> = dags.iter().map(|g| oracle_total(d, g, 1.0)).collect();
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let argmax = dags
        .iter()
        .zip(&scores)
        .filter(|(_, &s)| (s - best).abs() <= 1e-9 * best.abs())
        .map(|(g, _)| g.clone())
        .collect();
    (best, argmax)
}

#[test]
fn independent_binaries_give_empty_graph() {
    let text = "network ind {\n}\n".to_string()
        + &(1..=4)
            .map(|i| format!("variable X{i} {{\n  type discrete [ 2 ] {{ a, b }};\n}}\nprobability ( X{i} ) {{\n  table 0.5, 0.5;\n}}\n"))
            .collect::<String>();
    let d = parse_bif(&text).unwrap().forward_sample(5000, 3).unwrap();
    let s = BdeuScorer::new(&d, 1.0).unwrap();
    let out = hc_unconstrained(&s, HcOptions::default(), None).unwrap();
    assert_eq!(out.dag.arc_count(), 0);
    let empty = Dag::empty(d.names().to_vec()).unwrap();
    let base = oracle_total(&d, &empty, 1.0);
    for p in 0..4 {
        for c in 0..4 {
            if p != c {
                let one = Dag::from_arcs(d.names().to_vec(), [(p, c)]).unwrap();
                assert!(oracle_total(&d, &one, 1.0) <= base);
            }
        }
    }
}

#[test]
fn chain_reaches_enumerated_optimum() {
    let d = chain_data();
    let s = BdeuScorer::new(&d, 1.0).unwrap();
    let dags = all_dags(d.names());
    assert_eq!(dags.len(), 25);
    let (best, argmax) = best_of(&d, &dags);
    let out = hc_unconstrained(&s, HcOptions::default(), None).unwrap();
    assert!((out.score - best).abs() <= 1e-9 * best.abs());
    assert!(argmax.contains(&out.dag));
    // chain equivalence class: skeleton X1-X2-X3, no collider at X2
    assert_eq!(out.dag.arc_count(), 2);
    assert!(!(out.dag.has_arc(0, 1) && out.dag.has_arc(2, 1)));
    assert!(out.dag.has_arc(0, 1) || out.dag.has_arc(1, 0));
    assert!(out.dag.has_arc(1, 2) || out.dag.has_arc(2, 1));
    assert!(out.trajectory.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn seeded_at_optimum_is_a_fixed_point() {
    let d = chain_data();
    let s = BdeuScorer::new(&d, 1.0).unwrap();
    let (_, argmax) = best_of(&d, &all_dags(d.names()));
    for start in &argmax {
        let out = hc_unconstrained(&s, HcOptions::default(), Some(start)).unwrap();
        assert_eq!(&out.dag, start);
        assert!(out.moves.is_empty());
    }
}

#[test]
fn constrained_matches_order_enumeration() {
    let d = chain_data();
    let s = BdeuScorer::new(&d, 1.0).unwrap();
    let (unconstrained_best, _) = best_of(&d, &all_dags(d.names()));

    let forward = [0, 1, 2];
    let consistent = order_consistent_dags(d.names(), &forward);
    assert_eq!(consistent.len(), 8);
    let (best, _) = best_of(&d, &consistent);
    let order = PartialOrder::new(3, forward.to_vec()).unwrap();
    let out = hc_order_constrained(&s, &order, HcOptions::default()).unwrap();
    assert!((out.score - best).abs() <= 1e-9 * best.abs());
    assert_eq!(out.dag.arcs(), vec![(0, 1), (1, 2)]);

    let backward = [2, 1, 0];
    let (best_back, _) = best_of(&d, &order_consistent_dags(d.names(), &backward));
    let order = PartialOrder::new(3, backward.to_vec()).unwrap();
    let out = hc_order_constrained(&s, &order, HcOptions::default()).unwrap();
    assert!(is_consistent(&out.dag, &order).unwrap());
    assert!((out.score - best_back).abs() <= 1e-9 * best_back.abs());
    assert!(out.score <= unconstrained_best + 1e-9 * unconstrained_best.abs());
}

fn small_problem() -> impl Strategy<Value = (Vec<usize>, Vec<Vec<usize>>, Vec<usize>)> {
    prop::collection::vec(2usize..=3, 2..=4).prop_flat_map(|cards| {
        let n = cards.len();
        let row = cards.iter().map(|&k| 0..k).collect::<Vec<_>>();
        (
            Just(cards),
            prop::collection::vec(row, 1..=40),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
        )
    })
}

fn dataset(cards: &[usize], rows: &[Vec<usize>]) -> Dataset {
    let columns = (0..cards.len())
        .map(|v| rows.iter().map(|r| r[v] as u32).collect())
        .collect();
    let states = cards
        .iter()
        .map(|&k| (0..k).map(|s| s.to_string()).collect())
        .collect();
    Dataset::from_codes(names(cards.len()), states, columns).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn constrained_never_beats_enumeration((cards, rows, order) in small_problem()) {
        let d = dataset(&cards, &rows);
        let s = BdeuScorer::new(&d, 1.0).unwrap();
        let po = PartialOrder::new(cards.len(), order.clone()).unwrap();
        let out = hc_order_constrained(&s, &po, HcOptions::default()).unwrap();
        prop_assert!(is_consistent(&out.dag, &po).unwrap());
        prop_assert!(out.trajectory.windows(2).all(|w| w[1] > w[0]));
        let (best_consistent, _) = best_of(&d, &order_consistent_dags(d.names(), &order));
        let (best_any, _) = best_of(&d, &all_dags(d.names()));
        let tol = 1e-9 * best_any.abs();
        prop_assert!(out.score <= best_consistent + tol);
        prop_assert!(best_consistent <= best_any + tol);
    }

    #[test]
    fn unconstrained_is_a_local_optimum((cards, rows, _order) in small_problem()) {
        let d = dataset(&cards, &rows);
        let s = BdeuScorer::new(&d, 1.0).unwrap();
        let out = hc_unconstrained(&s, HcOptions::default(), None).unwrap();
        let n = cards.len();
        for p in 0..n {
            for c in 0..n {
                if p == c { continue; }
                let mut g = out.dag.clone();
                let moved = if g.has_arc(p, c) {
                    g.remove_arc(p, c).is_ok()
                } else {
                    g.add_arc(p, c).is_ok()
                };
                if moved {
                    prop_assert!(s.total(&g).unwrap() <= out.score + 1e-9);
                }
                let mut r = out.dag.clone();
                if r.has_arc(p, c) && r.reverse_arc(p, c).is_ok() {
                    prop_assert!(s.total(&r).unwrap() <= out.score + 1e-9);
                }
            }
        }
    }
}
