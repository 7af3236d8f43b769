//! Partial orders over a fixed variable universe and the operators used to
//! complete them: append, projection and concatenation.

use std::fmt;

use thiserror::Error;

use crate::graph::VarId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrderError {
    #[error("variable {0} already in order")]
    Duplicate(VarId),
    #[error("variable id {0} out of range for universe of {1}")]
    OutOfUniverse(VarId, usize),
    #[error("orders over different universes ({0} vs {1})")]
    UniverseMismatch(usize, usize),
    #[error("order is incomplete: {0} of {1} variables")]
    Incomplete(usize, usize),
    #[error("unknown variable name `{0}`")]
    UnknownName(String),
    #[error("partial-order count overflows for n = {0}")]
    Overflow(usize),
}

/// A subset of a variable universe.
#[derive(Clone, PartialEq, Eq)]
pub struct VarSet {
    members: Vec<bool>,
}

impl VarSet {
    pub fn empty(universe: usize) -> Self {
        VarSet {
            members: vec![false; universe],
        }
    }

    pub fn full(universe: usize) -> Self {
        VarSet {
            members: vec![true; universe],
        }
    }

    pub fn from_ids(
        universe: usize,
        ids: impl IntoIterator<Item = VarId>,
    ) -> Result<Self, OrderError> {
        let mut s = VarSet::empty(universe);
        for v in ids {
            s.insert(v)?;
        }
        Ok(s)
    }

    pub fn universe(&self) -> usize {
        self.members.len()
    }

    pub fn insert(&mut self, v: VarId) -> Result<(), OrderError> {
        let n = self.members.len();
        *self
            .members
            .get_mut(v)
            .ok_or(OrderError::OutOfUniverse(v, n))? = true;
        Ok(())
    }

    pub fn remove(&mut self, v: VarId) {
        if let Some(m) = self.members.get_mut(v) {
            *m = false;
        }
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.members.get(v).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }

    pub fn intersection(&self, other: &VarSet) -> VarSet {
        VarSet {
            members: self
                .members
                .iter()
                .zip(&other.members)
                .map(|(&a, &b)| a && b)
                .collect(),
        }
    }

    pub fn complement(&self) -> VarSet {
        VarSet {
            members: self.members.iter().map(|&m| !m).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = VarId> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i)
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// An ordered list of distinct variables; the search state of the tree.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PartialOrder {
    seq: Vec<VarId>,
    universe: usize,
}

impl PartialOrder {
    pub fn empty(universe: usize) -> Self {
        PartialOrder {
            seq: Vec::new(),
            universe,
        }
    }

    pub fn new(universe: usize, seq: Vec<VarId>) -> Result<Self, OrderError> {
        let mut seen = vec![false; universe];
        for &v in &seq {
            match seen.get_mut(v) {
                None => return Err(OrderError::OutOfUniverse(v, universe)),
                Some(true) => return Err(OrderError::Duplicate(v)),
                Some(s) => *s = true,
            }
        }
        Ok(PartialOrder { seq, universe })
    }

    /// The identity order ⟨0, 1, …, n−1⟩.
    pub fn identity(universe: usize) -> Self {
        PartialOrder {
            seq: (0..universe).collect(),
            universe,
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn as_slice(&self) -> &[VarId] {
        &self.seq
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.seq.len() == self.universe
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.seq.contains(&v)
    }

    pub fn vars(&self) -> VarSet {
        let mut s = VarSet::empty(self.universe);
        for &v in &self.seq {
            s.members[v] = true;
        }
        s
    }

    /// Variables not yet placed, i.e. the actions available at this state.
    pub fn remaining(&self) -> VarSet {
        self.vars().complement()
    }

    /// Position of each variable, `None` for variables not in the order.
    pub fn positions(&self) -> Vec<Option<usize>> {
        let mut pos = vec![None; self.universe];
        for (i, &v) in self.seq.iter().enumerate() {
            pos[v] = Some(i);
        }
        pos
    }

    /// Appends `v`.
    pub fn extend(&self, v: VarId) -> Result<PartialOrder, OrderError> {
        if v >= self.universe {
            return Err(OrderError::OutOfUniverse(v, self.universe));
        }
        if self.contains(v) {
            return Err(OrderError::Duplicate(v));
        }
        let mut seq = Vec::with_capacity(self.seq.len() + 1);
        seq.extend_from_slice(&self.seq);
        seq.push(v);
        Ok(PartialOrder {
            seq,
            universe: self.universe,
        })
    }

    /// The subsequence of variables that belong to `set`, in this order's
    /// relative order.
    pub fn project(&self, set: &VarSet) -> PartialOrder {
        PartialOrder {
            seq: self
                .seq
                .iter()
                .copied()
                .filter(|&v| set.contains(v))
                .collect(),
            universe: self.universe,
        }
    }

    pub fn concat(&self, other: &PartialOrder) -> Result<PartialOrder, OrderError> {
        if self.universe != other.universe {
            return Err(OrderError::UniverseMismatch(self.universe, other.universe));
        }
        let mine = self.vars();
        if let Some(&v) = other.seq.iter().find(|&&v| mine.contains(v)) {
            return Err(OrderError::Duplicate(v));
        }
        let mut seq = self.seq.clone();
        seq.extend_from_slice(&other.seq);
        Ok(PartialOrder {
            seq,
            universe: self.universe,
        })
    }

    /// Completes this order with the unplaced variables in the relative
    /// order `guide` gives them.
    pub fn complete_with_guide(&self, guide: &PartialOrder) -> Result<PartialOrder, OrderError> {
        if !guide.is_complete() {
            return Err(OrderError::Incomplete(guide.len(), guide.universe));
        }
        self.concat(&guide.project(&self.remaining()))
    }

    pub fn into_vec(self) -> Vec<VarId> {
        self.seq
    }

    /// Comma-separated variable names, the on-disk order format.
    pub fn to_names_line(&self, names: &[String]) -> String {
        self.seq
            .iter()
            .map(|&v| names[v].as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_names_line(line: &str, names: &[String]) -> Result<PartialOrder, OrderError> {
        let line = line.trim();
        let mut seq = Vec::new();
        if !line.is_empty() {
            for tok in line.split(',') {
                let tok = tok.trim();
                let id = names
                    .iter()
                    .position(|n| n == tok)
                    .ok_or_else(|| OrderError::UnknownName(tok.to_string()))?;
                seq.push(id);
            }
        }
        PartialOrder::new(names.len(), seq)
    }
}

impl fmt::Debug for PartialOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨")?;
        for (i, v) in self.seq.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "⟩")
    }
}

/// Number of partial orders (including the empty one) over `n` variables:
/// Σ_{k=0}^{n} k!·C(n,k) = Σ_k n!/(n−k)!.
pub fn count_partial_orders(n: usize) -> Result<u128, OrderError> {
    let mut total: u128 = 1;
    let mut term: u128 = 1;
    for k in 0..n {
        term = term
            .checked_mul((n - k) as u128)
            .ok_or(OrderError::Overflow(n))?;
        total = total.checked_add(term).ok_or(OrderError::Overflow(n))?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    // X1..X7 are ids 0..6.
    fn o(seq: &[usize]) -> PartialOrder {
        PartialOrder::new(7, seq.iter().map(|x| x - 1).collect()).unwrap()
    }

    #[test]
    fn extend_appends() {
        let e = PartialOrder::empty(7);
        assert_eq!(e.extend(4).unwrap(), o(&[5]));
        assert_eq!(o(&[5, 1]).extend(1).unwrap(), o(&[5, 1, 2]));
        assert_eq!(o(&[5, 1]).extend(0), Err(OrderError::Duplicate(0)));
        assert!(e.extend(7).is_err());
    }

    #[test]
    fn projection_worked_example() {
        let guide = o(&[1, 4, 7, 2, 5, 3, 6]);
        let a = VarSet::from_ids(7, [2, 3, 5, 6]).unwrap();
        assert_eq!(guide.project(&a), o(&[4, 7, 3, 6]));
        assert_eq!(guide.project(&VarSet::full(7)), guide);
        assert_eq!(guide.project(&VarSet::empty(7)), PartialOrder::empty(7));
    }

    #[test]
    fn concatenation() {
        assert_eq!(
            o(&[5, 1, 2]).concat(&o(&[4, 7, 3, 6])).unwrap(),
            o(&[5, 1, 2, 4, 7, 3, 6])
        );
        assert_eq!(
            PartialOrder::empty(7).concat(&o(&[3, 1])).unwrap(),
            o(&[3, 1])
        );
        assert_eq!(o(&[1, 2]).concat(&o(&[2])), Err(OrderError::Duplicate(1)));
        assert!(o(&[1]).concat(&PartialOrder::empty(3)).is_err());
    }

    #[test]
    fn guided_completion() {
        let guide = o(&[1, 4, 7, 2, 5, 3, 6]);
        assert_eq!(
            o(&[5, 1, 2]).complete_with_guide(&guide).unwrap(),
            o(&[5, 1, 2, 4, 7, 3, 6])
        );
        assert_eq!(
            PartialOrder::empty(7).complete_with_guide(&guide).unwrap(),
            guide
        );
        let full = o(&[7, 6, 5, 4, 3, 2, 1]);
        assert_eq!(full.complete_with_guide(&guide).unwrap(), full);
        assert!(full.complete_with_guide(&o(&[1])).is_err());
    }

    #[test]
    fn partial_order_counts() {
        assert_eq!(count_partial_orders(0).unwrap(), 1);
        assert_eq!(count_partial_orders(1).unwrap(), 2);
        assert_eq!(count_partial_orders(3).unwrap(), 16);
        assert_eq!(count_partial_orders(4).unwrap(), 65);
        assert!(count_partial_orders(40).is_err());
    }

    #[test]
    fn names_line_round_trip() {
        let names: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let ord = PartialOrder::new(3, vec![2, 0, 1]).unwrap();
        let line = ord.to_names_line(&names);
        assert_eq!(line, "C,A,B");
        assert_eq!(PartialOrder::parse_names_line(&line, &names).unwrap(), ord);
        assert!(PartialOrder::parse_names_line("A,A", &names).is_err());
        assert!(PartialOrder::parse_names_line("A,Z", &names).is_err());
    }
}
