//! Plain-text DAG format shared by learned networks and externally produced
//! guide structures:
//!
//! ```text
//! variables: A,B,C
//! A -> B
//! B -> C
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use thiserror::Error;

use crate::graph::{Dag, GraphError};

#[derive(Debug, Error)]
pub enum ArcListError {
    #[error("missing `variables:` header")]
    MissingHeader,
    #[error("line {0}: expected `parent -> child`")]
    BadArc(usize),
    #[error("line {line}: {source}")]
    Graph { line: usize, source: GraphError },
    #[error(transparent)]
    Header(GraphError),
}

pub fn write_arc_list(dag: &Dag) -> String {
    let mut out = format!("variables: {}\n", dag.names().join(","));
    for (p, c) in dag.arcs() {
        out.push_str(dag.name(p));
        out.push_str(" -> ");
        out.push_str(dag.name(c));
        out.push('\n');
    }
    out
}

pub fn parse_arc_list(text: &str) -> Result<Dag, ArcListError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or(ArcListError::MissingHeader)?;
    let vars = header
        .strip_prefix("variables:")
        .ok_or(ArcListError::MissingHeader)?;
    let names: Vec<String> = vars
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    let mut dag = Dag::empty(names).map_err(ArcListError::Header)?;
    for (line, text) in lines {
        let (p, c) = text.split_once("->").ok_or(ArcListError::BadArc(line))?;
        let (p, c) = (p.trim(), c.trim());
        let lookup = |name: &str| {
            dag.index_of(name).ok_or_else(|| ArcListError::Graph {
                line,
                source: GraphError::UnknownName(name.to_string()),
            })
        };
        let (pi, ci) = (lookup(p)?, lookup(c)?);
        dag.add_arc(pi, ci)
            .map_err(|source| ArcListError::Graph { line, source })?;
    }
    Ok(dag)
}
