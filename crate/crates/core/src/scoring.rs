//! Decomposable BDeu score with a memoized local-score table.

use std::collections::HashMap;

use parking_lot::Mutex;
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::graph::{Dag, VarId};

pub const DEFAULT_ESS: f64 = 1.0;

/// Families with more parent configurations than this are rejected.
pub const DEFAULT_MAX_CONFIGURATIONS: u64 = 1 << 31;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error(transparent)]
    Data(#[from] DatasetError),
    #[error("equivalent sample size must be positive and finite, got {0}")]
    BadEss(f64),
    #[error(
        "family of variable {child} has {configurations} parent configurations (limit {limit})"
    )]
    InfeasibleFamily {
        child: VarId,
        configurations: u128,
        limit: u64,
    },
    #[error("graph variables do not match the dataset: {0}")]
    VariableMismatch(String),
    #[error("normalized score undefined on an empty dataset")]
    EmptyDataset,
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// BDeu scorer bound to one dataset. Local scores are cached keyed by
/// `(child, sorted parent set)`; the cache is mutex-guarded, so a scorer can
/// be shared by concurrent searches.
pub struct BdeuScorer<'d> {
    data: &'d Dataset,
    ess: f64,
    max_configurations: u64,
    cache: Mutex<HashMap<(VarId, Vec<VarId>), f64>>,
}

impl<'d> BdeuScorer<'d> {
    pub fn new(data: &'d Dataset, ess: f64) -> Result<Self, ScoreError> {
        if !(ess > 0.0 && ess.is_finite()) {
            return Err(ScoreError::BadEss(ess));
        }
        Ok(BdeuScorer {
            data,
            ess,
            max_configurations: DEFAULT_MAX_CONFIGURATIONS,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_max_configurations(mut self, limit: u64) -> Self {
        self.max_configurations = limit;
        self
    }

    pub fn dataset(&self) -> &'d Dataset {
        self.data
    }

    pub fn ess(&self) -> f64 {
        self.ess
    }

    pub fn n_vars(&self) -> usize {
        self.data.len()
    }

    pub fn names(&self) -> &[String] {
        self.data.names()
    }

    pub fn cached_families(&self) -> usize {
        self.cache.lock().len()
    }

    pub fn clear_cache(&self) {
        self.cache.lock().clear();
    }

    /// Log BDeu of `child` given the parent set `parents` (order irrelevant).
    pub fn local(&self, child: VarId, parents: &[VarId]) -> Result<f64, ScoreError> {
        let mut key_parents = parents.to_vec();
        key_parents.sort_unstable();
        let key = (child, key_parents);
        if let Some(&s) = self.cache.lock().get(&key) {
            return Ok(s);
        }
        let score = self.compute(child, &key.1)?;
        self.cache.lock().insert(key, score);
        Ok(score)
    }

    fn compute(&self, child: VarId, parents: &[VarId]) -> Result<f64, ScoreError> {
        let n = self.data.len();
        if child >= n {
            return Err(DatasetError::InvalidVariable(child, n).into());
        }
        if let Some(&p) = parents.iter().find(|&&p| p >= n) {
            return Err(DatasetError::InvalidVariable(p, n).into());
        }
        let q_exact: u128 = parents
            .iter()
            .map(|&p| self.data.cardinality(p) as u128)
            .try_fold(1u128, |acc, c| acc.checked_mul(c))
            .unwrap_or(u128::MAX);
        if q_exact > self.max_configurations as u128 {
            return Err(ScoreError::InfeasibleFamily {
                child,
                configurations: q_exact,
                limit: self.max_configurations,
            });
        }
        let counts = self.data.counts(child, parents)?;
        let r = counts.arity as f64;
        let q = counts.configurations as f64;
        let a_j = self.ess / q;
        let a_jk = self.ess / (r * q);
        let lg_a_j = ln_gamma(a_j);
        let lg_a_jk = ln_gamma(a_jk);
        let mut score = 0.0;
        for (_, hist) in counts.iter() {
            let n_j: u32 = hist.iter().sum();
            score += lg_a_j - ln_gamma(a_j + n_j as f64);
            for &n_jk in hist {
                if n_jk > 0 {
                    score += ln_gamma(a_jk + n_jk as f64) - lg_a_jk;
                }
            }
        }
        Ok(score)
    }

    fn check_dag(&self, dag: &Dag) -> Result<(), ScoreError> {
        if dag.names() != self.data.names() {
            return Err(ScoreError::VariableMismatch(format!(
                "graph has {} variables, dataset has {}",
                dag.len(),
                self.data.len()
            )));
        }
        Ok(())
    }

    /// Sum of local scores over all families, child-major in ascending id.
    pub fn total(&self, dag: &Dag) -> Result<f64, ScoreError> {
        self.check_dag(dag)?;
        (0..dag.len()).try_fold(0.0, |acc, v| Ok(acc + self.local(v, dag.parents(v))?))
    }

    /// BDeu divided by the number of instances.
    pub fn normalized(&self, dag: &Dag) -> Result<f64, ScoreError> {
        self.check_dag(dag)?;
        if self.data.n_rows() == 0 {
            return Err(ScoreError::EmptyDataset);
        }
        Ok(self.total(dag)? / self.data.n_rows() as f64)
    }

    /// Normalizes an already computed total.
    pub fn normalize(&self, total: f64) -> Result<f64, ScoreError> {
        if self.data.n_rows() == 0 {
            return Err(ScoreError::EmptyDataset);
        }
        Ok(total / self.data.n_rows() as f64)
    }
}
