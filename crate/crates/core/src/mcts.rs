//! Monte Carlo tree search over variable orders.
//!
//! A tree state is a partial order; an action appends one unplaced variable.
//! Every node carries a guide order (a complete topological order of a base
//! network) that fixes the sequence in which its actions are expanded and
//! completes its state for rollouts. A rollout learns a network with
//! order-constrained hill climbing and returns its per-instance BDeu
//! (nBDeu). Rewards are standardized against the statistics of the first
//! full expansion of the root before they enter the tree.

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Dag, VarId};
use crate::hill_climbing::{hc_order_constrained, HcError, HcOptions};
use crate::network::sample_topological_order_with;
use crate::order::{OrderError, PartialOrder};
use crate::scoring::{BdeuScorer, ScoreError};

/// Exploration constant for standardized rewards.
pub const DEFAULT_EXPLORATION: f64 = SQRT_2 / 100.0;
pub const DEFAULT_BUDGET: usize = 1000;
pub const DEFAULT_POOL_SIZE: usize = 10;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    Hc(#[from] HcError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error("reward statistics need at least two variables, found {0}")]
    TooFewVariables(usize),
    #[error("reward statistics not initialized")]
    Uninitialized,
    #[error("root already initialized")]
    AlreadyInitialized,
    #[error("UCT undefined for an action with zero visits")]
    ZeroVisits,
    #[error("guide pool is empty")]
    EmptyPool,
    #[error("guide order {0} is not a complete order over {1} variables")]
    BadGuide(usize, usize),
    #[error("node {0} is terminal")]
    Terminal(NodeId),
    #[error("node {0} is fully expanded")]
    FullyExpanded(NodeId),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub exploration: f64,
    /// Iterations after the initial expansion of the root.
    pub budget: usize,
    pub pool_size: usize,
    pub seed: u64,
    pub hc: HcOptions,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            exploration: DEFAULT_EXPLORATION,
            budget: DEFAULT_BUDGET,
            pool_size: DEFAULT_POOL_SIZE,
            seed: 0,
            hc: HcOptions::default(),
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<(), SearchError> {
        if !(self.exploration >= 0.0 && self.exploration.is_finite()) {
            return Err(SearchError::Config(format!(
                "exploration constant must be finite and non-negative, got {}",
                self.exploration
            )));
        }
        if self.pool_size == 0 {
            return Err(SearchError::Config(
                "guide pool size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Mean and standard deviation of the initial-expansion rewards, frozen for
/// the rest of the search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardStats {
    pub mean: f64,
    pub std: f64,
}

impl RewardStats {
    /// Sample mean and (n − 1) standard deviation. A zero spread is replaced
    /// by 1.
    pub fn from_rewards(rewards: &[f64]) -> Result<Self, SearchError> {
        let n = rewards.len();
        if n < 2 {
            return Err(SearchError::TooFewVariables(n));
        }
        let mean = rewards.iter().sum::<f64>() / n as f64;
        let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        let degenerate = !std.is_finite() || std <= 1e-12 * mean.abs().max(1.0);
        Ok(RewardStats {
            mean,
            std: if degenerate { 1.0 } else { std },
        })
    }

    pub fn standardize(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }
}

/// Standardizes `x`, failing when statistics have not been computed yet.
pub fn standardize(x: f64, stats: Option<&RewardStats>) -> Result<f64, SearchError> {
    stats
        .map(|s| s.standardize(x))
        .ok_or(SearchError::Uninitialized)
}

/// `mean + c·sqrt(ln N(S) / N_a(S))`.
pub fn uct_value(
    mean: f64,
    node_visits: f64,
    action_visits: u64,
    c: f64,
) -> Result<f64, SearchError> {
    if action_visits == 0 {
        return Err(SearchError::ZeroVisits);
    }
    Ok(mean + c * (node_visits.ln() / action_visits as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub action: VarId,
    pub child: NodeId,
    pub visits: u64,
    /// Running mean of standardized rewards through this edge.
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub state: PartialOrder,
    pub parent: Option<NodeId>,
    pub visits: u64,
    /// Index into the guide pool.
    pub guide: usize,
    /// Actions in the order the guide dictates; `edges[i]` expands
    /// `expansion[i]`.
    pub expansion: Vec<VarId>,
    pub edges: Vec<Edge>,
}

impl TreeNode {
    pub fn is_terminal(&self) -> bool {
        self.state.is_complete()
    }

    pub fn is_fully_expanded(&self) -> bool {
        self.edges.len() == self.expansion.len()
    }

    pub fn cursor(&self) -> usize {
        self.edges.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Init,
    Search,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::Search => "search",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub phase: Phase,
    pub iteration: usize,
    pub rollout_nbdeu: f64,
    pub best_nbdeu: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTrace {
    pub records: Vec<TraceRecord>,
}

impl ScoreTrace {
    pub const HEADER: &'static str = "phase,iteration,rollout_nbdeu,best_nbdeu,elapsed_ms";

    /// CSV rendering. Without `timing` the elapsed column is left empty so
    /// the file depends only on the inputs.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(Self::HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = write!(
                out,
                "{},{},{:?},{:?},",
                r.phase.as_str(),
                r.iteration,
                r.rollout_nbdeu,
                r.best_nbdeu
            );
            if timing {
                let _ = write!(out, "{:.3}", r.elapsed_ms);
            }
            out.push('\n');
        }
        out
    }

    pub fn init_records(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(|r| r.phase == Phase::Init)
    }

    pub fn search_records(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(|r| r.phase == Phase::Search)
    }

    pub fn best_is_monotone(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].best_nbdeu >= w[0].best_nbdeu)
    }
}

/// Evaluates a complete order, returning the learned network and its
/// per-instance score.
pub trait RolloutEvaluator {
    fn evaluate(&self, order: &PartialOrder) -> Result<(Dag, f64), SearchError>;
}

/// Order-constrained hill climbing scored by nBDeu.
pub struct HcEvaluator<'s, 'd> {
    scorer: &'s BdeuScorer<'d>,
    opts: HcOptions,
}

impl<'s, 'd> HcEvaluator<'s, 'd> {
    pub fn new(scorer: &'s BdeuScorer<'d>, opts: HcOptions) -> Self {
        HcEvaluator { scorer, opts }
    }
}

impl RolloutEvaluator for HcEvaluator<'_, '_> {
    fn evaluate(&self, order: &PartialOrder) -> Result<(Dag, f64), SearchError> {
        let out = hc_order_constrained(self.scorer, order, self.opts)?;
        let nbdeu = self.scorer.normalize(out.score)?;
        Ok((out.dag, nbdeu))
    }
}

impl<F> RolloutEvaluator for F
where
    F: Fn(&PartialOrder) -> Result<(Dag, f64), SearchError>,
{
    fn evaluate(&self, order: &PartialOrder) -> Result<(Dag, f64), SearchError> {
        self(order)
    }
}

#[derive(Debug, Clone)]
pub struct Best {
    pub order: PartialOrder,
    pub dag: Dag,
    pub nbdeu: f64,
}

/// Edges traversed by selection; `leaf` is where it stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub path: Vec<(NodeId, usize)>,
    pub leaf: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationOutcome {
    /// Actions along the selected path, including the newly expanded one.
    pub actions: Vec<VarId>,
    pub evaluated: NodeId,
    pub rollout_nbdeu: f64,
    pub reward: f64,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best_order: PartialOrder,
    pub best_dag: Dag,
    pub best_nbdeu: f64,
    pub stats: RewardStats,
    pub trace: ScoreTrace,
    pub tree_size: usize,
}

/// Draws `size` topological orders of `dag`.
pub fn guide_pool_from_dag(dag: &Dag, size: usize, seed: u64) -> Vec<PartialOrder> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..size)
        .map(|_| sample_topological_order_with(dag, &mut rng))
        .collect()
}

type RewardTransform = Box<dyn Fn(f64) -> f64>;

pub struct Engine<E> {
    evaluator: E,
    n: usize,
    pool: Vec<PartialOrder>,
    config: SearchConfig,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
    stats: Option<RewardStats>,
    best: Option<Best>,
    trace: ScoreTrace,
    transform: Option<RewardTransform>,
    started: Instant,
    iterations: usize,
}

impl<E: RolloutEvaluator> Engine<E> {
    pub fn new(
        evaluator: E,
        pool: Vec<PartialOrder>,
        config: SearchConfig,
    ) -> Result<Self, SearchError> {
        config.validate()?;
        let n = pool.first().ok_or(SearchError::EmptyPool)?.universe();
        for (i, g) in pool.iter().enumerate() {
            if g.universe() != n || !g.is_complete() {
                return Err(SearchError::BadGuide(i, n));
            }
        }
        let mut engine = Engine {
            evaluator,
            n,
            pool,
            config,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            nodes: Vec::new(),
            stats: None,
            best: None,
            trace: ScoreTrace::default(),
            transform: None,
            started: Instant::now(),
            iterations: 0,
        };
        let root = engine.make_node(PartialOrder::empty(n), None);
        engine.nodes.push(root);
        Ok(engine)
    }

    /// Applies `f` to every raw reward before standardization. The trace and
    /// the best-so-far tracking keep the raw values.
    pub fn with_reward_transform(mut self, f: impl Fn(f64) -> f64 + 'static) -> Self {
        self.transform = Some(Box::new(f));
        self
    }

    pub const ROOT: NodeId = 0;

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn stats(&self) -> Option<&RewardStats> {
        self.stats.as_ref()
    }

    pub fn best(&self) -> Option<&Best> {
        self.best.as_ref()
    }

    pub fn trace(&self) -> &ScoreTrace {
        &self.trace
    }

    pub fn pool(&self) -> &[PartialOrder] {
        &self.pool
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn make_node(&mut self, state: PartialOrder, parent: Option<NodeId>) -> TreeNode {
        let guide = self.rng.gen_range(0..self.pool.len());
        let expansion = self.pool[guide].project(&state.remaining()).into_vec();
        TreeNode {
            state,
            parent,
            visits: 0,
            guide,
            expansion,
            edges: Vec::new(),
        }
    }

    fn shaped(&self, raw: f64) -> f64 {
        match &self.transform {
            Some(f) => f(raw),
            None => raw,
        }
    }

    fn elapsed_ms(&self) -> f64 {
        self.started.elapsed().as_secs_f64() * 1e3
    }

    fn record(&mut self, phase: Phase, iteration: usize, rollout: f64) {
        let best = self.best.as_ref().map_or(rollout, |b| b.nbdeu);
        let elapsed_ms = self.elapsed_ms();
        self.trace.records.push(TraceRecord {
            phase,
            iteration,
            rollout_nbdeu: rollout,
            best_nbdeu: best,
            elapsed_ms,
        });
    }

    /// Adds a child for the next action in the node's guide sequence.
    /// Returns the child and the index of the new edge.
    pub fn expand(&mut self, id: NodeId) -> Result<(NodeId, usize), SearchError> {
        let node = &self.nodes[id];
        if node.is_terminal() {
            return Err(SearchError::Terminal(id));
        }
        if node.is_fully_expanded() {
            return Err(SearchError::FullyExpanded(id));
        }
        let action = node.expansion[node.cursor()];
        let state = node.state.extend(action)?;
        let child = self.make_node(state, Some(id));
        let child_id = self.nodes.len();
        self.nodes.push(child);
        let edges = &mut self.nodes[id].edges;
        edges.push(Edge {
            action,
            child: child_id,
            visits: 0,
            mean: 0.0,
        });
        Ok((child_id, edges.len() - 1))
    }

    /// Completes the node's state with its guide, learns a constrained
    /// network and returns its nBDeu. Updates the best network on strict
    /// improvement.
    pub fn rollout(&mut self, id: NodeId) -> Result<f64, SearchError> {
        let node = &self.nodes[id];
        let order = node.state.complete_with_guide(&self.pool[node.guide])?;
        let (dag, nbdeu) = self.evaluator.evaluate(&order)?;
        if self.best.as_ref().is_none_or(|b| nbdeu > b.nbdeu) {
            self.best = Some(Best { order, dag, nbdeu });
        }
        Ok(nbdeu)
    }

    /// Adds `reward` to every edge on the path and one visit to every node
    /// the reward passed through, including `leaf`.
    pub fn backpropagate(&mut self, path: &[(NodeId, usize)], leaf: NodeId, reward: f64) {
        for &(id, e) in path {
            let node = &mut self.nodes[id];
            node.visits += 1;
            let edge = &mut node.edges[e];
            edge.visits += 1;
            edge.mean += (reward - edge.mean) / edge.visits as f64;
        }
        self.nodes[leaf].visits += 1;
    }

    /// Expands every root action, evaluates each child once and freezes the
    /// reward statistics; the initial rewards are then standardized and
    /// backpropagated like any other.
    pub fn initialize_root(&mut self) -> Result<RewardStats, SearchError> {
        if self.stats.is_some() {
            return Err(SearchError::AlreadyInitialized);
        }
        if self.n < 2 {
            return Err(SearchError::TooFewVariables(self.n));
        }
        self.started = Instant::now();
        let mut evaluated = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let (child, edge) = self.expand(Self::ROOT)?;
            let raw = self.rollout(child)?;
            self.record(Phase::Init, i, raw);
            evaluated.push((child, edge, raw));
        }
        let shaped: Vec<f64> = evaluated.iter().map(|&(_, _, r)| self.shaped(r)).collect();
        let stats = RewardStats::from_rewards(&shaped)?;
        self.stats = Some(stats);
        for (&(child, edge, _), &s) in evaluated.iter().zip(&shaped) {
            self.backpropagate(&[(Self::ROOT, edge)], child, stats.standardize(s));
        }
        Ok(stats)
    }

    /// Follows the best UCT edge from the root through fully expanded nodes;
    /// stops at the first node with unexpanded actions or at a terminal
    /// node. Ties go to the earliest action in the node's guide sequence.
    pub fn select(&self) -> Selection {
        let c = self.config.exploration;
        let mut path = Vec::new();
        let mut id = Self::ROOT;
        loop {
            let node = &self.nodes[id];
            if node.is_terminal() || !node.is_fully_expanded() {
                return Selection { path, leaf: id };
            }
            let parent_visits = node.visits as f64;
            let mut best: Option<(usize, f64)> = None;
            for (i, e) in node.edges.iter().enumerate() {
                let v = uct_value(e.mean, parent_visits, e.visits, c).unwrap_or(f64::INFINITY);
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
            let (edge, _) = best.expect("fully expanded non-terminal node has edges");
            path.push((id, edge));
            id = node.edges[edge].child;
        }
    }

    /// One select → expand → rollout → backpropagate cycle.
    pub fn iterate(&mut self) -> Result<IterationOutcome, SearchError> {
        let stats = *self.stats.as_ref().ok_or(SearchError::Uninitialized)?;
        let Selection { mut path, leaf } = self.select();
        let evaluated = if self.nodes[leaf].is_terminal() {
            leaf
        } else {
            let (child, edge) = self.expand(leaf)?;
            path.push((leaf, edge));
            child
        };
        let raw = self.rollout(evaluated)?;
        let reward = stats.standardize(self.shaped(raw));
        self.backpropagate(&path, evaluated, reward);
        self.record(Phase::Search, self.iterations, raw);
        self.iterations += 1;
        let actions = path
            .iter()
            .map(|&(id, e)| self.nodes[id].edges[e].action)
            .collect();
        Ok(IterationOutcome {
            actions,
            evaluated,
            rollout_nbdeu: raw,
            reward,
        })
    }

    /// Initializes the root and runs the configured number of iterations.
    pub fn run(&mut self) -> Result<SearchResult, SearchError> {
        let stats = self.initialize_root()?;
        for _ in 0..self.config.budget {
            self.iterate()?;
        }
        let best = self
            .best
            .clone()
            .expect("initialization evaluates every root child");
        Ok(SearchResult {
            best_order: best.order,
            best_dag: best.dag,
            best_nbdeu: best.nbdeu,
            stats,
            trace: self.trace.clone(),
            tree_size: self.nodes.len(),
        })
    }
}

/// Runs a full search with hill-climbing rollouts.
pub fn search(
    scorer: &BdeuScorer<'_>,
    pool: Vec<PartialOrder>,
    config: SearchConfig,
) -> Result<SearchResult, SearchError> {
    Engine::new(HcEvaluator::new(scorer, config.hc), pool, config)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("X{i}")).collect()
    }

    /// Reward depends only on the completed order: variables placed at
    /// their own index score best.
    fn stub(n: usize) -> impl Fn(&PartialOrder) -> Result<(Dag, f64), SearchError> {
        move |o: &PartialOrder| {
            let hits = o
                .as_slice()
                .iter()
                .enumerate()
                .filter(|(i, &v)| *i == v)
                .count();
            let penalty: f64 = o
                .as_slice()
                .iter()
                .enumerate()
                .map(|(i, &v)| (i as f64 - v as f64).abs() * 0.01)
                .sum();
            Ok((Dag::empty(names(n)).unwrap(), hits as f64 - penalty))
        }
    }

    fn pool7() -> Vec<PartialOrder> {
        vec![PartialOrder::new(7, vec![0, 3, 6, 1, 4, 2, 5]).unwrap()]
    }

    #[test]
    fn reward_stats_and_degenerate_spread() {
        let s = RewardStats::from_rewards(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(s.standardize(2.0), 0.0);
        assert_eq!(s.standardize(3.0), 1.0);
        let flat = RewardStats::from_rewards(&[-4.2; 5]).unwrap();
        assert_eq!(flat.std, 1.0);
        assert!(RewardStats::from_rewards(&[1.0]).is_err());
        assert!(matches!(
            standardize(1.0, None),
            Err(SearchError::Uninitialized)
        ));
    }

    #[test]
    fn uct_formula() {
        assert_eq!(uct_value(0.37, 50.0, 3, 0.0).unwrap(), 0.37);
        let v = uct_value(0.5, std::f64::consts::E, 1, DEFAULT_EXPLORATION).unwrap();
        assert!((v - (0.5 + SQRT_2 / 100.0)).abs() < 1e-15);
        assert!(matches!(
            uct_value(0.0, 1.0, 0, 1.0),
            Err(SearchError::ZeroVisits)
        ));
    }

    #[test]
    fn uct_two_action_comparison() {
        // 0.2 + 0.0141421·sqrt(ln 11 / 10) = 0.2069252
        // 0.1 + 0.0141421·sqrt(ln 11 / 1)  = 0.1218993
        let a = uct_value(0.2, 11.0, 10, DEFAULT_EXPLORATION).unwrap();
        let b = uct_value(0.1, 11.0, 1, DEFAULT_EXPLORATION).unwrap();
        assert!((a - 0.206_925_2).abs() < 1e-6, "{a}");
        assert!((b - 0.121_899_3).abs() < 1e-6, "{b}");
        assert!(a > b);
    }

    #[test]
    fn expansion_follows_guide() {
        let mut e = Engine::new(stub(7), pool7(), SearchConfig::default()).unwrap();
        // σ = ⟨X5⟩ under guide ⟨X1,X4,X7,X2,X5,X3,X6⟩
        let (x5, _) = {
            let root_seq = e.node(0).expansion.clone();
            let pos = root_seq.iter().position(|&v| v == 4).unwrap();
            for _ in 0..pos {
                e.expand(0).unwrap();
            }
            e.expand(0).unwrap()
        };
        assert_eq!(e.node(x5).state.as_slice(), &[4]);
        let added: Vec<VarId> = (0..3)
            .map(|_| {
                let (c, _) = e.expand(x5).unwrap();
                *e.node(c).state.as_slice().last().unwrap()
            })
            .collect();
        assert_eq!(added, vec![0, 3, 6]);
    }

    #[test]
    fn expand_errors_on_terminal_and_exhausted_nodes() {
        let pool = vec![PartialOrder::identity(2)];
        let mut e = Engine::new(stub(2), pool, SearchConfig::default()).unwrap();
        let (a, _) = e.expand(0).unwrap();
        let (_, _) = e.expand(0).unwrap();
        assert!(matches!(e.expand(0), Err(SearchError::FullyExpanded(0))));
        let (leaf, _) = e.expand(a).unwrap();
        assert!(e.node(a).is_fully_expanded());
        assert!(matches!(e.expand(leaf), Err(SearchError::Terminal(_))));
    }

    #[test]
    fn initialization_standardizes_rewards() {
        let mut e = Engine::new(stub(7), pool7(), SearchConfig::default()).unwrap();
        let stats = e.initialize_root().unwrap();
        assert_eq!(e.node(0).edges.len(), 7);
        assert_eq!(e.node(0).visits, 7);
        assert_eq!(e.trace().init_records().count(), 7);
        let means: Vec<f64> = e.node(0).edges.iter().map(|x| x.mean).collect();
        let m = means.iter().sum::<f64>() / 7.0;
        let sd = (means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 6.0).sqrt();
        assert!(
            m.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9,
            "{m} {sd} {stats:?}"
        );
        assert!(matches!(
            e.initialize_root(),
            Err(SearchError::AlreadyInitialized)
        ));
    }

    #[test]
    fn first_selection_stops_at_best_child() {
        let mut e = Engine::new(stub(7), pool7(), SearchConfig::default()).unwrap();
        e.initialize_root().unwrap();
        let sel = e.select();
        assert_eq!(sel.path.len(), 1);
        let root = e.node(0);
        let best = root
            .edges
            .iter()
            .map(|x| x.mean)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(root.edges[sel.path[0].1].mean, best);
        assert_eq!(sel.leaf, root.edges[sel.path[0].1].child);
    }

    #[test]
    fn backpropagation_bookkeeping() {
        let pool = vec![PartialOrder::identity(4)];
        let mut e = Engine::new(stub(4), pool, SearchConfig::default()).unwrap();
        let (a, ea) = e.expand(0).unwrap();
        let (b, eb) = e.expand(a).unwrap();
        let (c, ec) = e.expand(b).unwrap();
        let path = [(0, ea), (a, eb), (b, ec)];
        e.backpropagate(&path, c, 0.8);
        assert_eq!(e.node(0).edges[ea].mean, 0.8);
        e.backpropagate(&path, c, -0.2);
        for &(id, ed) in &path {
            assert_eq!(e.node(id).edges[ed].visits, 2);
            assert!((e.node(id).edges[ed].mean - 0.3).abs() < 1e-15);
            assert_eq!(e.node(id).visits, 2);
        }
        assert_eq!(e.node(c).visits, 2);
    }

    #[test]
    fn rejects_bad_pools() {
        assert!(matches!(
            Engine::new(stub(3), vec![], SearchConfig::default()),
            Err(SearchError::EmptyPool)
        ));
        let partial = PartialOrder::new(3, vec![0]).unwrap();
        assert!(matches!(
            Engine::new(stub(3), vec![partial], SearchConfig::default()),
            Err(SearchError::BadGuide(0, 3))
        ));
        let cfg = SearchConfig {
            exploration: -1.0,
            ..Default::default()
        };
        assert!(Engine::new(stub(3), vec![PartialOrder::identity(3)], cfg).is_err());
    }

    #[test]
    fn single_variable_cannot_initialize() {
        let mut e = Engine::new(
            stub(1),
            vec![PartialOrder::identity(1)],
            SearchConfig::default(),
        )
        .unwrap();
        assert!(matches!(
            e.initialize_root(),
            Err(SearchError::TooFewVariables(1))
        ));
    }

    #[test]
    fn trace_csv_layout() {
        let trace = ScoreTrace {
            records: vec![TraceRecord {
                phase: Phase::Init,
                iteration: 0,
                rollout_nbdeu: -1.5,
                best_nbdeu: -1.5,
                elapsed_ms: 2.25,
            }],
        };
        assert_eq!(
            trace.to_csv(true),
            "phase,iteration,rollout_nbdeu,best_nbdeu,elapsed_ms\ninit,0,-1.5,-1.5,2.250\n"
        );
        assert_eq!(
            trace.to_csv(false),
            "phase,iteration,rollout_nbdeu,best_nbdeu,elapsed_ms\ninit,0,-1.5,-1.5,\n"
        );
    }
}
