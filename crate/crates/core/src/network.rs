//! Discrete Bayesian networks: structure plus conditional probability tables,
//! topological-order sampling and ancestral (forward) sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::graph::{Dag, GraphError, VarId};
use crate::order::PartialOrder;

/// Rows whose sum is off by at most this much are renormalized.
pub const ROW_SUM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("variable `{0}` needs at least two states")]
    TooFewStates(String),
    #[error("variable `{0}` has duplicate state `{1}`")]
    DuplicateState(String, String),
    #[error("CPT of `{child}` has {got} entries, expected {expected}")]
    TableSize {
        child: String,
        got: usize,
        expected: usize,
    },
    #[error("CPT of `{child}` row {row} sums to {sum}")]
    RowSum { child: String, row: usize, sum: f64 },
    #[error("CPT of `{child}` has an invalid probability {value}")]
    BadProbability { child: String, value: f64 },
    #[error("CPT parents of `{0}` do not match its parents in the graph")]
    ParentMismatch(String),
    #[error("variable/order mismatch: {0}")]
    OrderMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, states: Vec<String>) -> Result<Self, NetworkError> {
        let name = name.into();
        if states.len() < 2 {
            return Err(NetworkError::TooFewStates(name));
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].contains(s) {
                return Err(NetworkError::DuplicateState(name, s.clone()));
            }
        }
        Ok(Variable { name, states })
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }
}

/// P(child | parents) as a row-major table. Rows are parent configurations in
/// mixed-radix order with the last parent varying fastest; columns are child
/// states.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    child: VarId,
    parents: Vec<VarId>,
    arity: usize,
    probs: Vec<f64>,
}

impl Cpt {
    /// Validates shape and row sums; rows within [`ROW_SUM_TOLERANCE`] of 1
    /// are renormalized.
    pub fn new(
        variables: &[Variable],
        child: VarId,
        parents: Vec<VarId>,
        mut probs: Vec<f64>,
    ) -> Result<Self, NetworkError> {
        let child_name = &variables[child].name;
        let arity = variables[child].cardinality();
        let rows: usize = parents
            .iter()
            .map(|&p| variables[p].cardinality())
            .product();
        if probs.len() != rows * arity {
            return Err(NetworkError::TableSize {
                child: child_name.clone(),
                got: probs.len(),
                expected: rows * arity,
            });
        }
        if let Some(&value) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(NetworkError::BadProbability {
                child: child_name.clone(),
                value,
            });
        }
        for (row, chunk) in probs.chunks_mut(arity).enumerate() {
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(NetworkError::RowSum {
                    child: child_name.clone(),
                    row,
                    sum,
                });
            }
            if (sum - 1.0).abs() > 1e-12 {
                chunk.iter_mut().for_each(|p| *p /= sum);
            }
        }
        Ok(Cpt {
            child,
            parents,
            arity,
            probs,
        })
    }

    pub fn child(&self) -> VarId {
        self.child
    }

    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn row_count(&self) -> usize {
        self.probs.len() / self.arity
    }

    pub fn row(&self, config: usize) -> &[f64] {
        &self.probs[config * self.arity..(config + 1) * self.arity]
    }
}

#[derive(Debug, Clone)]
pub struct BayesianNetwork {
    name: String,
    variables: Vec<Variable>,
    dag: Dag,
    cpts: Vec<Cpt>,
}

impl BayesianNetwork {
    /// `cpts` must hold exactly one table per variable, in variable order.
    pub fn new(
        name: impl Into<String>,
        variables: Vec<Variable>,
        cpts: Vec<Cpt>,
    ) -> Result<Self, NetworkError> {
        let names: Vec<String> = variables.iter().map(|v| v.name.clone()).collect();
        let mut dag = Dag::empty(names)?;
        if cpts.len() != variables.len() {
            return Err(NetworkError::OrderMismatch(format!(
                "{} tables for {} variables",
                cpts.len(),
                variables.len()
            )));
        }
        for (i, cpt) in cpts.iter().enumerate() {
            if cpt.child != i {
                return Err(NetworkError::ParentMismatch(variables[i].name.clone()));
            }
            for &p in &cpt.parents {
                dag.add_arc(p, i)?;
            }
        }
        for (i, cpt) in cpts.iter().enumerate() {
            let mut ps = cpt.parents.clone();
            ps.sort_unstable();
            if ps != dag.parents(i) {
                return Err(NetworkError::ParentMismatch(variables[i].name.clone()));
            }
        }
        Ok(BayesianNetwork {
            name: name.into(),
            variables,
            dag,
            cpts,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn cpt(&self, v: VarId) -> &Cpt {
        &self.cpts[v]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    /// Ancestral sampling of `n` complete instances. Identical inputs give a
    /// bit-identical dataset.
    pub fn forward_sample(&self, n: usize, seed: u64) -> Result<Dataset, DatasetError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let order = self.dag.topological_order();
        let nv = self.len();
        let mut columns: Vec<Vec<u32>> = vec![Vec::with_capacity(n); nv];
        let mut row = vec![0u32; nv];
        for _ in 0..n {
            for &v in &order {
                let cpt = &self.cpts[v];
                let mut config = 0usize;
                for &p in &cpt.parents {
                    config = config * self.variables[p].cardinality() + row[p] as usize;
                }
                row[v] = draw(cpt.row(config), rng.gen::<f64>());
            }
            for (col, &code) in columns.iter_mut().zip(&row) {
                col.push(code);
            }
        }
        Dataset::from_codes(
            self.variables.iter().map(|v| v.name.clone()).collect(),
            self.variables.iter().map(|v| v.states.clone()).collect(),
            columns,
        )
    }
}

fn draw(probs: &[f64], u: f64) -> u32 {
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_nonzero = k;
            if u < acc {
                return k as u32;
            }
        }
    }
    last_nonzero as u32
}

/// Draws a complete topological order of `dag` by repeatedly picking,
/// uniformly at random, one of the variables whose parents are all placed.
pub fn sample_topological_order(dag: &Dag, seed: u64) -> PartialOrder {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_topological_order_with(dag, &mut rng)
}

pub fn sample_topological_order_with<R: Rng + ?Sized>(dag: &Dag, rng: &mut R) -> PartialOrder {
    let n = dag.len();
    let mut indeg: Vec<usize> = (0..n).map(|v| dag.parents(v).len()).collect();
    let mut ready: Vec<VarId> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut seq = Vec::with_capacity(n);
    while !ready.is_empty() {
        let v = ready.swap_remove(rng.gen_range(0..ready.len()));
        seq.push(v);
        for &c in dag.children(v) {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.push(c);
            }
        }
    }
    PartialOrder::new(n, seq).expect("Kahn's algorithm visits each variable once")
}

/// True iff every arc of `dag` goes from an earlier to a later variable of
/// `order`, which must be a complete order over the graph's variables.
pub fn is_consistent(dag: &Dag, order: &PartialOrder) -> Result<bool, NetworkError> {
    if order.universe() != dag.len() || !order.is_complete() {
        return Err(NetworkError::OrderMismatch(format!(
            "order covers {} of {} variables (universe {})",
            order.len(),
            dag.len(),
            order.universe()
        )));
    }
    let pos = order.positions();
    Ok(dag
        .arcs()
        .into_iter()
        .all(|(p, c)| pos[p].unwrap() < pos[c].unwrap()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("X{i}")).collect()
    }

    fn order(seq: &[usize]) -> PartialOrder {
        PartialOrder::new(seq.len(), seq.iter().map(|x| x - 1).collect()).unwrap()
    }

    /// X1→X4, X1→X7, X7→X2, X2→X5, X5→X6, X2→X3, X2→X6
    fn seven_node_dag() -> Dag {
        let arcs = [(1, 4), (1, 7), (7, 2), (2, 5), (5, 6), (2, 3), (2, 6)];
        Dag::from_arcs(names(7), arcs.iter().map(|&(p, c)| (p - 1, c - 1))).unwrap()
    }

    #[test]
    fn chain_has_one_order() {
        let chain = Dag::from_arcs(names(3), [(0, 1), (1, 2)]).unwrap();
        for seed in 0..20 {
            assert_eq!(sample_topological_order(&chain, seed), order(&[1, 2, 3]));
        }
        assert!(is_consistent(&chain, &order(&[1, 2, 3])).unwrap());
        assert!(!is_consistent(&chain, &order(&[3, 2, 1])).unwrap());
    }

    #[test]
    fn seven_node_orders() {
        let g = seven_node_dag();
        assert!(is_consistent(&g, &order(&[1, 4, 7, 2, 5, 3, 6])).unwrap());
        assert!(is_consistent(&g, &order(&[1, 7, 2, 3, 5, 6, 4])).unwrap());
        assert!(is_consistent(&g, &order(&[1, 7, 4, 2, 5, 3, 6])).unwrap());
        assert!(!is_consistent(&g, &order(&[1, 2, 7, 4, 5, 3, 6])).unwrap());
        for seed in 0..50 {
            assert!(is_consistent(&g, &sample_topological_order(&g, seed)).unwrap());
        }
    }

    #[test]
    fn arcless_orders_vary() {
        let g = Dag::empty(names(4)).unwrap();
        let a = sample_topological_order(&g, 1);
        let distinct = (2..40).any(|s| sample_topological_order(&g, s) != a);
        assert!(distinct);
        assert!(is_consistent(&g, &a).unwrap());
    }

    #[test]
    fn consistency_rejects_mismatched_orders() {
        let g = seven_node_dag();
        assert!(is_consistent(&g, &order(&[1, 2, 3])).is_err());
        let partial = PartialOrder::new(7, vec![0, 1]).unwrap();
        assert!(is_consistent(&g, &partial).is_err());
    }

    #[test]
    fn cpt_validation() {
        let vars = vec![
            Variable::new("A", vec!["a".into(), "b".into()]).unwrap(),
            Variable::new("B", vec!["x".into(), "y".into(), "z".into()]).unwrap(),
        ];
        assert!(matches!(
            Cpt::new(&vars, 0, vec![], vec![0.5, 0.6]),
            Err(NetworkError::RowSum { .. })
        ));
        assert!(matches!(
            Cpt::new(&vars, 1, vec![0], vec![0.2, 0.8]),
            Err(NetworkError::TableSize { .. })
        ));
        let cpt = Cpt::new(&vars, 0, vec![], vec![0.33333, 0.66666]).unwrap();
        assert!((cpt.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(Variable::new("C", vec!["only".into()]).is_err());
        assert!(Variable::new("C", vec!["s".into(), "s".into()]).is_err());
    }

    fn deterministic_net() -> BayesianNetwork {
        let bin = || vec!["f".to_string(), "t".to_string()];
        let vars = vec![
            Variable::new("A", bin()).unwrap(),
            Variable::new("B", bin()).unwrap(),
            Variable::new("C", bin()).unwrap(),
        ];
        let cpts = vec![
            Cpt::new(&vars, 0, vec![], vec![0.0, 1.0]).unwrap(),
            Cpt::new(&vars, 1, vec![0], vec![0.0, 1.0, 1.0, 0.0]).unwrap(),
            Cpt::new(
                &vars,
                2,
                vec![0, 1],
                vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0],
            )
            .unwrap(),
        ];
        BayesianNetwork::new("det", vars, cpts).unwrap()
    }

    #[test]
    fn deterministic_tables_force_every_row() {
        let net = deterministic_net();
        let d = net.forward_sample(50, 9).unwrap();
        assert_eq!(d.n_rows(), 50);
        // A = t(1), B | A=t → f(0), C | A=t,B=f → t(1)
        for r in 0..50 {
            assert_eq!(d.code(r, 0), 1);
            assert_eq!(d.code(r, 1), 0);
            assert_eq!(d.code(r, 2), 1);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let net = deterministic_net();
        let a = net.forward_sample(10, 3).unwrap();
        let b = net.forward_sample(10, 3).unwrap();
        assert_eq!(a.columns(), b.columns());
        assert_eq!(net.forward_sample(0, 3).unwrap().n_rows(), 0);
    }
}
