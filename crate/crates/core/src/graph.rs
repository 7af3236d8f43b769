//! Directed acyclic graphs over a fixed, named variable universe.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Dense variable index into a network or dataset.
pub type VarId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("variable id {0} out of range for {1} variables")]
    UnknownVariable(VarId, usize),
    #[error("self-arc on variable {0}")]
    SelfArc(VarId),
    #[error("arc {0} -> {1} would create a directed cycle")]
    Cycle(VarId, VarId),
    #[error("arc {0} -> {1} already present")]
    DuplicateArc(VarId, VarId),
    #[error("arc {0} -> {1} not present")]
    MissingArc(VarId, VarId),
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("unknown variable name `{0}`")]
    UnknownName(String),
    #[error("variable sets differ: {0}")]
    VariableMismatch(String),
}

/// A DAG whose acyclicity is checked on every mutation.
///
/// Parent and child lists are kept sorted by id so iteration order, and
/// therefore everything derived from it, is reproducible.
#[derive(Clone, PartialEq, Eq)]
pub struct Dag {
    names: Vec<String>,
    parents: Vec<Vec<VarId>>,
    children: Vec<Vec<VarId>>,
}

impl Dag {
    /// An arcless graph over the given variable names.
    pub fn empty(names: Vec<String>) -> Result<Self, GraphError> {
        let mut seen = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if seen.insert(name.as_str(), i).is_some() {
                return Err(GraphError::DuplicateName(name.clone()));
            }
        }
        let n = names.len();
        Ok(Dag {
            names,
            parents: vec![Vec::new(); n],
            children: vec![Vec::new(); n],
        })
    }

    /// Builds a graph from an arc list, rejecting cycles and self-arcs.
    pub fn from_arcs(
        names: Vec<String>,
        arcs: impl IntoIterator<Item = (VarId, VarId)>,
    ) -> Result<Self, GraphError> {
        let mut dag = Dag::empty(names)?;
        for (p, c) in arcs {
            dag.add_arc(p, c)?;
        }
        Ok(dag)
    }

    /// Builds a graph from per-child parent lists. Used by the learners, whose
    /// output is acyclic by construction; acyclicity is still verified once.
    pub fn from_parent_sets(
        names: Vec<String>,
        parent_sets: Vec<Vec<VarId>>,
    ) -> Result<Self, GraphError> {
        let mut dag = Dag::empty(names)?;
        if parent_sets.len() != dag.len() {
            return Err(GraphError::VariableMismatch(format!(
                "{} parent sets for {} variables",
                parent_sets.len(),
                dag.len()
            )));
        }
        for (child, mut ps) in parent_sets.into_iter().enumerate() {
            ps.sort_unstable();
            ps.dedup();
            for &p in &ps {
                dag.check_id(p)?;
                if p == child {
                    return Err(GraphError::SelfArc(p));
                }
                dag.children[p].push(child);
            }
            dag.parents[child] = ps;
        }
        for ch in &mut dag.children {
            ch.sort_unstable();
        }
        if let Some((p, c)) = dag.find_cycle_arc() {
            return Err(GraphError::Cycle(p, c));
        }
        Ok(dag)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v]
    }

    pub fn index_of(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn parents(&self, v: VarId) -> &[VarId] {
        &self.parents[v]
    }

    pub fn children(&self, v: VarId) -> &[VarId] {
        &self.children[v]
    }

    pub fn has_arc(&self, p: VarId, c: VarId) -> bool {
        self.parents
            .get(c)
            .is_some_and(|ps| ps.binary_search(&p).is_ok())
    }

    pub fn arc_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// All arcs as (parent, child), sorted by parent then child.
    pub fn arcs(&self) -> Vec<(VarId, VarId)> {
        let mut arcs: Vec<_> = self
            .children
            .iter()
            .enumerate()
            .flat_map(|(p, cs)| cs.iter().map(move |&c| (p, c)))
            .collect();
        arcs.sort_unstable();
        arcs
    }

    fn check_id(&self, v: VarId) -> Result<(), GraphError> {
        if v < self.len() {
            Ok(())
        } else {
            Err(GraphError::UnknownVariable(v, self.len()))
        }
    }

    /// True if `to` is reachable from `from` along directed arcs.
    pub fn reaches(&self, from: VarId, to: VarId) -> bool {
        if from == to {
            return true;
        }
        let mut seen = vec![false; self.len()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(v) = stack.pop() {
            for &c in &self.children[v] {
                if c == to {
                    return true;
                }
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        false
    }

    pub fn add_arc(&mut self, p: VarId, c: VarId) -> Result<(), GraphError> {
        self.check_id(p)?;
        self.check_id(c)?;
        if p == c {
            return Err(GraphError::SelfArc(p));
        }
        if self.has_arc(p, c) {
            return Err(GraphError::DuplicateArc(p, c));
        }
        if self.reaches(c, p) {
            return Err(GraphError::Cycle(p, c));
        }
        insert_sorted(&mut self.parents[c], p);
        insert_sorted(&mut self.children[p], c);
        Ok(())
    }

    pub fn remove_arc(&mut self, p: VarId, c: VarId) -> Result<(), GraphError> {
        self.check_id(p)?;
        self.check_id(c)?;
        let Ok(pi) = self.parents[c].binary_search(&p) else {
            return Err(GraphError::MissingArc(p, c));
        };
        self.parents[c].remove(pi);
        let ci = self.children[p]
            .binary_search(&c)
            .expect("parent/child lists out of sync");
        self.children[p].remove(ci);
        Ok(())
    }

    /// Replaces `p -> c` with `c -> p`; the graph is unchanged on error.
    pub fn reverse_arc(&mut self, p: VarId, c: VarId) -> Result<(), GraphError> {
        self.remove_arc(p, c)?;
        if let Err(e) = self.add_arc(c, p) {
            self.add_arc(p, c).expect("restoring a removed arc");
            return Err(e);
        }
        Ok(())
    }

    /// A topological order (Kahn's algorithm, smallest id first).
    pub fn topological_order(&self) -> Vec<VarId> {
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<VarId>> = indeg
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(v, _)| std::cmp::Reverse(v))
            .collect();
        let mut out = Vec::with_capacity(self.len());
        while let Some(std::cmp::Reverse(v)) = ready.pop() {
            out.push(v);
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.push(std::cmp::Reverse(c));
                }
            }
        }
        out
    }

    fn find_cycle_arc(&self) -> Option<(VarId, VarId)> {
        if self.topological_order().len() == self.len() {
            return None;
        }
        self.arcs().into_iter().find(|&(p, c)| self.reaches(c, p))
    }

    /// Re-indexes this graph onto `names`, which must be a permutation of
    /// this graph's variable names.
    pub fn reindex(&self, names: &[String]) -> Result<Dag, GraphError> {
        let mut map = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            map.insert(n.as_str(), i);
        }
        if names.len() != self.len() {
            return Err(GraphError::VariableMismatch(format!(
                "graph has {} variables, target has {}",
                self.len(),
                names.len()
            )));
        }
        let mut arcs = Vec::with_capacity(self.arc_count());
        for (p, c) in self.arcs() {
            let np = *map
                .get(self.name(p))
                .ok_or_else(|| GraphError::UnknownName(self.name(p).to_string()))?;
            let nc = *map
                .get(self.name(c))
                .ok_or_else(|| GraphError::UnknownName(self.name(c).to_string()))?;
            arcs.push((np, nc));
        }
        for n in &self.names {
            if !map.contains_key(n.as_str()) {
                return Err(GraphError::UnknownName(n.clone()));
            }
        }
        Dag::from_arcs(names.to_vec(), arcs)
    }
}

fn insert_sorted(v: &mut Vec<VarId>, x: VarId) {
    if let Err(i) = v.binary_search(&x) {
        v.insert(i, x);
    }
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arcs: Vec<String> = self
            .arcs()
            .into_iter()
            .map(|(p, c)| format!("{}->{}", self.names[p], self.names[c]))
            .collect();
        f.debug_struct("Dag")
            .field("nodes", &self.len())
            .field("arcs", &arcs)
            .finish()
    }
}
