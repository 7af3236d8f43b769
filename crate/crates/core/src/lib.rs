//! Bayesian network structure learning by Monte Carlo tree search over
//! variable orders.
//!
//! The pipeline: parse a reference network ([`bif`]), draw datasets from it
//! ([`network`]), score structures with BDeu ([`scoring`]), learn a base
//! network with hill climbing ([`hill_climbing`]), then search the space of
//! variable orders with [`mcts`], completing partial orders with guide orders
//! sampled from the base network ([`order`]).

pub mod arclist;
pub mod bif;
pub mod dataset;
pub mod graph;
pub mod hill_climbing;
pub mod mcts;
pub mod network;
pub mod order;
pub mod scoring;

pub use arclist::{parse_arc_list, write_arc_list};
pub use bif::{parse_bif, write_bif};
pub use dataset::{CountQueryResult, Dataset, Schema};
pub use graph::{Dag, VarId};
pub use hill_climbing::{hc_order_constrained, hc_unconstrained, HcOptions, HcOutcome};
pub use mcts::{search, Engine, SearchConfig, SearchResult};
pub use network::{is_consistent, sample_topological_order, BayesianNetwork};
pub use order::{count_partial_orders, PartialOrder, VarSet};
pub use scoring::BdeuScorer;
