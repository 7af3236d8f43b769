//! Complete categorical datasets and the contingency counts BDeu needs.
//!
//! Count queries are memoized in a bounded LRU cache keyed by
//! `(child, sorted parent set)`. The cache sits behind a mutex, so a
//! `Dataset` can be shared across threads and queried concurrently.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::Arc;

use lru::LruCache;
use parking_lot::Mutex;
use thiserror::Error;

use crate::graph::VarId;

/// Default number of cached count tables.
pub const DEFAULT_COUNT_CACHE: usize = 1_000_000;

/// Dense counting is used while `q * r` stays below this many cells.
const DENSE_LIMIT: u64 = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DatasetError {
    #[error("line {line}: expected {expected} cells, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("dataset has no rows and no schema; cardinalities are unknown")]
    EmptyWithoutSchema,
    #[error("missing header row")]
    MissingHeader,
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("line {line}: empty cell in column `{column}`")]
    MissingValue { line: usize, column: String },
    #[error("line {line}: label `{label}` not in schema for `{column}`")]
    UnknownLabel {
        line: usize,
        column: String,
        label: String,
    },
    #[error("schema: {0}")]
    Schema(String),
    #[error("variable id {0} out of range for {1} columns")]
    InvalidVariable(VarId, usize),
    #[error("child {0} also listed as a parent")]
    ChildInParents(VarId),
    #[error("duplicate parent {0}")]
    DuplicateParent(VarId),
    #[error("column {column}: code {code} exceeds cardinality {cardinality}")]
    CodeOutOfRange {
        column: usize,
        code: u32,
        cardinality: usize,
    },
    #[error("columns have unequal lengths")]
    ColumnLength,
    #[error("parent configuration count overflows")]
    ConfigOverflow,
    #[error("csv: {0}")]
    Csv(String),
}

/// Explicit state lists per variable, read from a `name:s1|s2|...` sidecar.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schema {
    entries: Vec<(String, Vec<String>)>,
}

impl Schema {
    pub fn new(entries: Vec<(String, Vec<String>)>) -> Self {
        Schema { entries }
    }

    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, states) = line
                .split_once(':')
                .ok_or_else(|| DatasetError::Schema(format!("line {}: missing `:`", i + 1)))?;
            let states: Vec<String> = states.split('|').map(|s| s.trim().to_string()).collect();
            if states.iter().any(String::is_empty) {
                return Err(DatasetError::Schema(format!(
                    "line {}: empty state label",
                    i + 1
                )));
            }
            entries.push((name.trim().to_string(), states));
        }
        Ok(Schema { entries })
    }

    pub fn states(&self, name: &str) -> Option<&[String]> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.as_slice())
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(n, s)| format!("{n}:{}\n", s.join("|")))
            .collect()
    }
}

/// Sufficient statistics of one family: for every observed parent
/// configuration, the histogram of child states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountQueryResult {
    pub child: VarId,
    pub parents: Vec<VarId>,
    /// Number of child states.
    pub arity: usize,
    /// Number of parent configurations, observed or not.
    pub configurations: u64,
    configs: Vec<u64>,
    counts: Vec<u32>,
}

impl CountQueryResult {
    /// Observed configurations in ascending index order with their histograms.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &[u32])> {
        self.configs
            .iter()
            .copied()
            .zip(self.counts.chunks(self.arity.max(1)))
    }

    pub fn get(&self, config: u64) -> Option<&[u32]> {
        self.configs
            .binary_search(&config)
            .ok()
            .map(|i| &self.counts[i * self.arity..(i + 1) * self.arity])
    }

    pub fn observed_configurations(&self) -> usize {
        self.configs.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

type FamilyKey = (VarId, Vec<VarId>);

pub struct Dataset {
    names: Vec<String>,
    states: Vec<Vec<String>>,
    columns: Vec<Vec<u32>>,
    n_rows: usize,
    cache: Mutex<LruCache<FamilyKey, Arc<CountQueryResult>>>,
    cache_capacity: usize,
}

impl std::fmt::Debug for Dataset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dataset")
            .field("names", &self.names)
            .field("cardinalities", &self.cardinalities())
            .field("n_rows", &self.n_rows)
            .finish()
    }
}

impl Clone for Dataset {
    fn clone(&self) -> Self {
        Dataset::build(
            self.names.clone(),
            self.states.clone(),
            self.columns.clone(),
            self.cache_capacity,
        )
    }
}

impl Dataset {
    fn build(
        names: Vec<String>,
        states: Vec<Vec<String>>,
        columns: Vec<Vec<u32>>,
        cache_capacity: usize,
    ) -> Self {
        let n_rows = columns.first().map_or(0, Vec::len);
        let cap = NonZeroUsize::new(cache_capacity.max(1)).unwrap();
        Dataset {
            names,
            states,
            columns,
            n_rows,
            cache: Mutex::new(LruCache::new(cap)),
            cache_capacity: cap.get(),
        }
    }

    /// Wraps already-coded columns; `states[i]` labels the codes of column `i`.
    pub fn from_codes(
        names: Vec<String>,
        states: Vec<Vec<String>>,
        columns: Vec<Vec<u32>>,
    ) -> Result<Self, DatasetError> {
        if names.len() != states.len() || names.len() != columns.len() {
            return Err(DatasetError::ColumnLength);
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(DatasetError::DuplicateColumn(n.clone()));
            }
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        for (i, col) in columns.iter().enumerate() {
            if col.len() != n_rows {
                return Err(DatasetError::ColumnLength);
            }
            if let Some(&code) = col.iter().find(|&&c| c as usize >= states[i].len()) {
                return Err(DatasetError::CodeOutOfRange {
                    column: i,
                    code,
                    cardinality: states[i].len(),
                });
            }
        }
        Ok(Dataset::build(names, states, columns, DEFAULT_COUNT_CACHE))
    }

    /// Parses comma-separated text with a header row. Codes follow first
    /// appearance unless `schema` lists the states of a column.
    pub fn load_csv(text: &str, schema: Option<&Schema>) -> Result<Self, DatasetError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut records = reader.records();
        let header = match records.next() {
            Some(r) => r.map_err(|e| DatasetError::Csv(e.to_string()))?,
            None => return Err(DatasetError::MissingHeader),
        };
        let names: Vec<String> = header.iter().map(str::to_string).collect();
        if names.is_empty() || names.iter().all(String::is_empty) {
            return Err(DatasetError::MissingHeader);
        }
        let width = names.len();

        let mut states: Vec<Vec<String>> = Vec::with_capacity(width);
        let mut fixed = Vec::with_capacity(width);
        for n in &names {
            match schema.and_then(|s| s.states(n)) {
                Some(s) => {
                    states.push(s.to_vec());
                    fixed.push(true);
                }
                None => {
                    states.push(Vec::new());
                    fixed.push(false);
                }
            }
        }
        let mut lookup: Vec<HashMap<String, u32>> = states
            .iter()
            .map(|s| {
                s.iter()
                    .enumerate()
                    .map(|(i, l)| (l.clone(), i as u32))
                    .collect()
            })
            .collect();

        let mut columns: Vec<Vec<u32>> = vec![Vec::new(); width];
        for record in records {
            let record = record.map_err(|e| DatasetError::Csv(e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() == 1 && record.get(0) == Some("") {
                continue;
            }
            if record.len() != width {
                return Err(DatasetError::RaggedRow {
                    line,
                    expected: width,
                    found: record.len(),
                });
            }
            for (j, cell) in record.iter().enumerate() {
                if cell.is_empty() {
                    return Err(DatasetError::MissingValue {
                        line,
                        column: names[j].clone(),
                    });
                }
                let code = match lookup[j].get(cell) {
                    Some(&c) => c,
                    None if fixed[j] => {
                        return Err(DatasetError::UnknownLabel {
                            line,
                            column: names[j].clone(),
                            label: cell.to_string(),
                        })
                    }
                    None => {
                        let c = states[j].len() as u32;
                        states[j].push(cell.to_string());
                        lookup[j].insert(cell.to_string(), c);
                        c
                    }
                };
                columns[j].push(code);
            }
        }
        if columns[0].is_empty() && fixed.iter().any(|f| !f) {
            return Err(DatasetError::EmptyWithoutSchema);
        }
        Dataset::from_codes(names, states, columns)
    }

    /// Replaces the count cache with an empty one of the given capacity.
    pub fn with_cache_capacity(mut self, capacity: usize) -> Self {
        let cap = NonZeroUsize::new(capacity.max(1)).unwrap();
        self.cache = Mutex::new(LruCache::new(cap));
        self.cache_capacity = cap.get();
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.names.join(",");
        out.push('\n');
        for r in 0..self.n_rows {
            let row: Vec<&str> = (0..self.len())
                .map(|j| self.states[j][self.columns[j][r] as usize].as_str())
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn schema(&self) -> Schema {
        Schema::new(
            self.names
                .iter()
                .cloned()
                .zip(self.states.iter().cloned())
                .collect(),
        )
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn states(&self, v: VarId) -> &[String] {
        &self.states[v]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn cardinality(&self, v: VarId) -> usize {
        self.states[v].len()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.states.iter().map(Vec::len).collect()
    }

    pub fn columns(&self) -> &[Vec<u32>] {
        &self.columns
    }

    pub fn code(&self, row: usize, v: VarId) -> u32 {
        self.columns[v][row]
    }

    /// Number of parent configurations, or `None` on overflow.
    pub fn configuration_count(&self, parents: &[VarId]) -> Option<u64> {
        parents
            .iter()
            .try_fold(1u64, |q, &p| q.checked_mul(self.cardinality(p) as u64))
    }

    pub fn cached_families(&self) -> usize {
        self.cache.lock().len()
    }

    pub fn clear_cache(&self) {
        self.cache.lock().clear();
    }

    fn validate(&self, child: VarId, parents: &[VarId]) -> Result<(), DatasetError> {
        let n = self.len();
        if child >= n {
            return Err(DatasetError::InvalidVariable(child, n));
        }
        for (i, &p) in parents.iter().enumerate() {
            if p >= n {
                return Err(DatasetError::InvalidVariable(p, n));
            }
            if p == child {
                return Err(DatasetError::ChildInParents(child));
            }
            if parents[..i].contains(&p) {
                return Err(DatasetError::DuplicateParent(p));
            }
        }
        Ok(())
    }

    /// Contingency counts of `child` against `parents`. Configuration indices
    /// encode parent codes in mixed radix, last parent fastest, in the order
    /// `parents` is given.
    pub fn counts(
        &self,
        child: VarId,
        parents: &[VarId],
    ) -> Result<Arc<CountQueryResult>, DatasetError> {
        self.validate(child, parents)?;
        let mut sorted = parents.to_vec();
        sorted.sort_unstable();
        let key = (child, sorted);
        let cached = self.cache.lock().get(&key).cloned();
        let base = match cached {
            Some(hit) => hit,
            None => {
                let fresh = Arc::new(self.tally(child, &key.1)?);
                self.cache.lock().put(key.clone(), Arc::clone(&fresh));
                fresh
            }
        };
        if parents == key.1.as_slice() {
            Ok(base)
        } else {
            Ok(Arc::new(self.permute(&base, parents)))
        }
    }

    /// Single pass over the rows.
    fn tally(&self, child: VarId, parents: &[VarId]) -> Result<CountQueryResult, DatasetError> {
        let q = self
            .configuration_count(parents)
            .ok_or(DatasetError::ConfigOverflow)?;
        let r = self.cardinality(child);
        let mut index = vec![0u64; self.n_rows];
        for &p in parents {
            let card = self.cardinality(p) as u64;
            for (ix, &code) in index.iter_mut().zip(&self.columns[p]) {
                *ix = *ix * card + code as u64;
            }
        }
        let child_col = &self.columns[child];
        let (configs, counts) = if q.saturating_mul(r as u64) <= DENSE_LIMIT.max(self.n_rows as u64)
        {
            let mut dense = vec![0u32; q as usize * r];
            for (&ix, &c) in index.iter().zip(child_col) {
                dense[ix as usize * r + c as usize] += 1;
            }
            let mut configs = Vec::new();
            let mut counts = Vec::new();
            for (j, hist) in dense.chunks(r).enumerate() {
                if hist.iter().any(|&c| c > 0) {
                    configs.push(j as u64);
                    counts.extend_from_slice(hist);
                }
            }
            (configs, counts)
        } else {
            let mut sparse: HashMap<u64, Vec<u32>> = HashMap::new();
            for (&ix, &c) in index.iter().zip(child_col) {
                sparse.entry(ix).or_insert_with(|| vec![0; r])[c as usize] += 1;
            }
            let mut entries: Vec<_> = sparse.into_iter().collect();
            entries.sort_unstable_by_key(|(k, _)| *k);
            let configs = entries.iter().map(|(k, _)| *k).collect();
            let counts = entries.into_iter().flat_map(|(_, v)| v).collect();
            (configs, counts)
        };
        Ok(CountQueryResult {
            child,
            parents: parents.to_vec(),
            arity: r,
            configurations: q,
            configs,
            counts,
        })
    }

    /// Re-expresses counts computed for `base.parents` in the parent order
    /// `target`, a permutation of it.
    fn permute(&self, base: &CountQueryResult, target: &[VarId]) -> CountQueryResult {
        let cards: Vec<u64> = base
            .parents
            .iter()
            .map(|&p| self.cardinality(p) as u64)
            .collect();
        let slot: Vec<usize> = target
            .iter()
            .map(|p| base.parents.iter().position(|b| b == p).unwrap())
            .collect();
        let mut digits = vec![0u64; cards.len()];
        let mut entries: Vec<(u64, &[u32])> = base
            .iter()
            .map(|(ix, hist)| {
                let mut rem = ix;
                for i in (0..cards.len()).rev() {
                    digits[i] = rem % cards[i];
                    rem /= cards[i];
                }
                let new_ix = slot.iter().fold(0u64, |acc, &s| acc * cards[s] + digits[s]);
                (new_ix, hist)
            })
            .collect();
        entries.sort_unstable_by_key(|(k, _)| *k);
        CountQueryResult {
            child: base.child,
            parents: target.to_vec(),
            arity: base.arity,
            configurations: base.configurations,
            configs: entries.iter().map(|(k, _)| *k).collect(),
            counts: entries
                .iter()
                .flat_map(|(_, h)| h.iter().copied())
                .collect(),
        }
    }
}
