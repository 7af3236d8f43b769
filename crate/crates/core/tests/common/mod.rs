#![allow(dead_code)]

//! Test-only oracles, deliberately independent of the library's scoring
//! path: dense per-configuration tallies and log-gamma ratios expanded as
//! rising factorials.

use mctsbn_core::{Dag, Dataset};

/// Row-major copy of the dataset codes.
pub fn rows(d: &Dataset) -> Vec<Vec<usize>> {
    (0..d.n_rows())
        .map(|r| (0..d.len()).map(|v| d.code(r, v) as usize).collect())
        .collect()
}

/// ln Γ(a + n) − ln Γ(a) = Σ_{t<n} ln(a + t)
pub fn ln_rising(a: f64, n: usize) -> f64 {
    (0..n).map(|t| (a + t as f64).ln()).sum()
}

pub fn oracle_local(
    rows: &[Vec<usize>],
    cards: &[usize],
    child: usize,
    parents: &[usize],
    ess: f64,
) -> f64 {
    let q: usize = parents.iter().map(|&p| cards[p]).product();
    let r = cards[child];
    let a_j = ess / q as f64;
    let a_jk = ess / (r * q) as f64;
    let mut score = 0.0;
    for j in 0..q {
        // decode configuration j, last parent fastest
        let mut rem = j;
        let mut config = vec![0; parents.len()];
        for i in (0..parents.len()).rev() {
            config[i] = rem % cards[parents[i]];
            rem /= cards[parents[i]];
        }
        let mut n_jk = vec![0usize; r];
        for row in rows {
            if parents.iter().zip(&config).all(|(&p, &s)| row[p] == s) {
                n_jk[row[child]] += 1;
            }
        }
        let n_j: usize = n_jk.iter().sum();
        score -= ln_rising(a_j, n_j);
        for &n in &n_jk {
            score += ln_rising(a_jk, n);
        }
    }
    score
}

pub fn oracle_total(d: &Dataset, dag: &Dag, ess: f64) -> f64 {
    let rows = rows(d);
    let cards = d.cardinalities();
    (0..dag.len())
        .map(|v| oracle_local(&rows, &cards, v, dag.parents(v), ess))
        .sum()
}

/// Every DAG over `names` (exhaustive over arc subsets; fine up to 4 nodes).
pub fn all_dags(names: &[String]) -> Vec<Dag> {
    let n = names.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|p| (0..n).filter(move |&c| c != p).map(move |c| (p, c)))
        .collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let arcs = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &a)| a);
        if let Ok(d) = Dag::from_arcs(names.to_vec(), arcs) {
            out.push(d);
        }
    }
    out
}

/// Every DAG whose arcs all point forward in `order`.
pub fn order_consistent_dags(names: &[String], order: &[usize]) -> Vec<Dag> {
    let pairs: Vec<(usize, usize)> = (0..order.len())
        .flat_map(|i| (i + 1..order.len()).map(move |j| (order[i], order[j])))
        .collect();
    (0u32..(1 << pairs.len()))
        .map(|mask| {
            let arcs = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &a)| a);
            Dag::from_arcs(names.to_vec(), arcs).unwrap()
        })
        .collect()
}

pub fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("X{i}")).collect()
}

/// Binary chain X1 → X2 → X3 with strong dependence.
pub fn chain_bif() -> String {
    "network chain {\n}\n\
     variable X1 {\n  type discrete [ 2 ] { a, b };\n}\n\
     variable X2 {\n  type discrete [ 2 ] { a, b };\n}\n\
     variable X3 {\n  type discrete [ 2 ] { a, b };\n}\n\
     probability ( X1 ) {\n  table 0.3, 0.7;\n}\n\
     probability ( X2 | X1 ) {\n  (a) 0.9, 0.1;\n  (b) 0.2, 0.8;\n}\n\
     probability ( X3 | X2 ) {\n  (a) 0.85, 0.15;\n  (b) 0.1, 0.9;\n}\n"
        .to_string()
}

pub fn alarm_bif() -> String {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/alarm.bif");
    std::fs::read_to_string(path).expect("data/alarm.bif")
}
