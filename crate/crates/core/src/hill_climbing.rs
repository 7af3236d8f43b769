//! Greedy hill climbing over DAGs, either unconstrained (add, delete and
//! reverse) or restricted to arcs that agree with a fixed total order (add
//! and delete).
//!
//! Each child keeps a row of score deltas, one per candidate parent, for
//! toggling that parent in or out. Only the rows of children whose parent set
//! changed in the last accepted move are rescored.

use thiserror::Error;

use crate::graph::{Dag, GraphError, VarId};
use crate::order::PartialOrder;
use crate::scoring::{BdeuScorer, ScoreError};

/// Minimum score gain for a move to count as an improvement.
pub const MIN_IMPROVEMENT: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum HcError {
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("no search operator enabled")]
    NoOperators,
    #[error("order covers {0} of {1} variables")]
    IncompleteOrder(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HcOptions {
    /// `None` means unbounded.
    pub max_parents: Option<usize>,
    pub add: bool,
    pub delete: bool,
    pub reverse: bool,
    /// `None` means run to a local optimum.
    pub max_iterations: Option<usize>,
}

impl Default for HcOptions {
    fn default() -> Self {
        HcOptions {
            max_parents: None,
            add: true,
            delete: true,
            reverse: true,
            max_iterations: None,
        }
    }
}

impl HcOptions {
    /// Unbounded parents up to 100 variables, at most 8 beyond that.
    pub fn for_variables(n: usize) -> Self {
        HcOptions {
            max_parents: if n <= 100 { None } else { Some(8) },
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<(), HcError> {
        if self.add || self.delete || self.reverse {
            Ok(())
        } else {
            Err(HcError::NoOperators)
        }
    }

    fn parent_room(&self, current: usize) -> bool {
        self.max_parents.is_none_or(|m| current < m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Operator {
    Add,
    Delete,
    Reverse,
}

#[derive(Debug, Clone)]
pub struct HcOutcome {
    pub dag: Dag,
    /// Total BDeu of `dag`.
    pub score: f64,
    /// Accepted moves in order.
    pub moves: Vec<(Operator, VarId, VarId)>,
    /// Total score after the start structure and after each accepted move.
    pub trajectory: Vec<f64>,
}

struct Climber<'s, 'd> {
    scorer: &'s BdeuScorer<'d>,
    opts: HcOptions,
    n: usize,
    parents: Vec<Vec<VarId>>,
    children: Vec<Vec<VarId>>,
    local: Vec<f64>,
    /// `delta[c][p]`: gain from toggling arc p -> c; `None` when p is not a
    /// candidate parent of c or the family is infeasible.
    delta: Vec<Vec<Option<f64>>>,
    /// Restricts arcs to p before c when set.
    position: Option<Vec<usize>>,
    seen: Vec<u32>,
    stamp: u32,
}

impl<'s, 'd> Climber<'s, 'd> {
    fn new(
        scorer: &'s BdeuScorer<'d>,
        opts: HcOptions,
        parents: Vec<Vec<VarId>>,
        position: Option<Vec<usize>>,
    ) -> Result<Self, HcError> {
        let n = scorer.n_vars();
        let mut children = vec![Vec::new(); n];
        for (c, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        let mut local = Vec::with_capacity(n);
        for (c, ps) in parents.iter().enumerate() {
            local.push(scorer.local(c, ps)?);
        }
        let mut climber = Climber {
            scorer,
            opts,
            n,
            parents,
            children,
            local,
            delta: vec![vec![None; n]; n],
            position,
            seen: vec![0; n],
            stamp: 0,
        };
        for c in 0..n {
            climber.rescore_row(c)?;
        }
        Ok(climber)
    }

    fn allowed(&self, p: VarId, c: VarId) -> bool {
        p != c && self.position.as_ref().is_none_or(|pos| pos[p] < pos[c])
    }

    fn rescore_row(&mut self, c: VarId) -> Result<(), HcError> {
        let base = self.local[c];
        let mut family = self.parents[c].clone();
        for p in 0..self.n {
            if !self.allowed(p, c) {
                self.delta[c][p] = None;
                continue;
            }
            let present = self.parents[c].binary_search(&p);
            match present {
                Ok(i) => {
                    family.remove(i);
                }
                Err(i) => family.insert(i, p),
            }
            self.delta[c][p] = match self.scorer.local(c, &family) {
                Ok(s) => Some(s - base),
                Err(ScoreError::InfeasibleFamily { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            match present {
                Ok(i) => family.insert(i, p),
                Err(i) => {
                    family.remove(i);
                }
            }
        }
        Ok(())
    }

    /// True if `to` is reachable from `from`, ignoring the arc `skip`.
    fn reaches(&mut self, from: VarId, to: VarId, skip: Option<(VarId, VarId)>) -> bool {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.stamp = 1;
        }
        let mut stack = vec![from];
        self.seen[from] = self.stamp;
        while let Some(v) = stack.pop() {
            for &c in &self.children[v] {
                if skip == Some((v, c)) {
                    continue;
                }
                if c == to {
                    return true;
                }
                if self.seen[c] != self.stamp {
                    self.seen[c] = self.stamp;
                    stack.push(c);
                }
            }
        }
        false
    }

    fn has_arc(&self, p: VarId, c: VarId) -> bool {
        self.parents[c].binary_search(&p).is_ok()
    }

    fn candidates(&self) -> Vec<(f64, Operator, VarId, VarId)> {
        let mut out = Vec::new();
        for c in 0..self.n {
            for p in 0..self.n {
                let Some(d) = self.delta[c][p] else { continue };
                if self.has_arc(p, c) {
                    if self.opts.delete && d > MIN_IMPROVEMENT {
                        out.push((d, Operator::Delete, p, c));
                    }
                    if self.opts.reverse
                        && self.position.is_none()
                        && self.opts.parent_room(self.parents[p].len())
                    {
                        if let Some(back) = self.delta[p][c] {
                            let total = d + back;
                            if total > MIN_IMPROVEMENT {
                                out.push((total, Operator::Reverse, p, c));
                            }
                        }
                    }
                } else if self.opts.add
                    && d > MIN_IMPROVEMENT
                    && self.opts.parent_room(self.parents[c].len())
                {
                    out.push((d, Operator::Add, p, c));
                }
            }
        }
        // best gain first; equal gains by (operator, parent, child)
        out.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
                .then(a.3.cmp(&b.3))
        });
        out
    }

    fn valid(&mut self, op: Operator, p: VarId, c: VarId) -> bool {
        match op {
            Operator::Delete => true,
            Operator::Add => self.position.is_some() || !self.reaches(c, p, None),
            Operator::Reverse => !self.reaches(p, c, Some((p, c))),
        }
    }

    fn toggle(&mut self, p: VarId, c: VarId) -> Result<(), HcError> {
        match self.parents[c].binary_search(&p) {
            Ok(i) => {
                self.parents[c].remove(i);
                let j = self.children[p].iter().position(|&x| x == c).unwrap();
                self.children[p].swap_remove(j);
            }
            Err(i) => {
                self.parents[c].insert(i, p);
                self.children[p].push(c);
            }
        }
        self.local[c] = self.scorer.local(c, &self.parents[c])?;
        Ok(())
    }

    fn apply(&mut self, op: Operator, p: VarId, c: VarId) -> Result<(), HcError> {
        match op {
            Operator::Add | Operator::Delete => {
                self.toggle(p, c)?;
                self.rescore_row(c)?;
            }
            Operator::Reverse => {
                self.toggle(p, c)?;
                self.toggle(c, p)?;
                self.rescore_row(c)?;
                self.rescore_row(p)?;
            }
        }
        Ok(())
    }

    fn current_total(&self) -> f64 {
        self.local.iter().sum()
    }

    fn run(mut self) -> Result<HcOutcome, HcError> {
        let mut moves = Vec::new();
        let mut trajectory = vec![self.current_total()];
        while self.opts.max_iterations.is_none_or(|m| moves.len() < m) {
            let chosen = self
                .candidates()
                .into_iter()
                .find(|&(_, op, p, c)| self.valid(op, p, c));
            let Some((_, op, p, c)) = chosen else { break };
            self.apply(op, p, c)?;
            moves.push((op, p, c));
            let total = self.current_total();
            debug_assert!(
                total > *trajectory.last().unwrap(),
                "hill-climbing score must strictly increase"
            );
            trajectory.push(total);
        }
        let dag = Dag::from_parent_sets(self.scorer.names().to_vec(), self.parents)?;
        let score = self.scorer.total(&dag)?;
        Ok(HcOutcome {
            dag,
            score,
            moves,
            trajectory,
        })
    }
}

/// Hill climbing in DAG space from `start` (the empty graph by default).
/// Stops at a local optimum of the enabled operators.
pub fn hc_unconstrained(
    scorer: &BdeuScorer<'_>,
    opts: HcOptions,
    start: Option<&Dag>,
) -> Result<HcOutcome, HcError> {
    opts.validate()?;
    let n = scorer.n_vars();
    let parents = match start {
        Some(dag) => {
            if dag.names() != scorer.names() {
                return Err(ScoreError::VariableMismatch("start structure".into()).into());
            }
            (0..n).map(|v| dag.parents(v).to_vec()).collect()
        }
        None => vec![Vec::new(); n],
    };
    Climber::new(scorer, opts, parents, None)?.run()
}

/// Hill climbing from the empty graph over DAGs whose arcs all point forward
/// in `order`. Reversal is never applicable under a total order, so only
/// add and delete are used.
pub fn hc_order_constrained(
    scorer: &BdeuScorer<'_>,
    order: &PartialOrder,
    opts: HcOptions,
) -> Result<HcOutcome, HcError> {
    let n = scorer.n_vars();
    if order.universe() != n || !order.is_complete() {
        return Err(HcError::IncompleteOrder(order.len(), n));
    }
    let opts = HcOptions {
        reverse: false,
        ..opts
    };
    opts.validate()?;
    let position = order
        .positions()
        .into_iter()
        .map(|p| p.expect("complete order"))
        .collect();
    Climber::new(scorer, opts, vec![Vec::new(); n], Some(position))?.run()
}
