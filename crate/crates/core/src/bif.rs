//! Reader and writer for the discrete subset of the BIF interchange format
//! used by the public network repositories.
//!
//! Supported: `network`, `variable` blocks with `type discrete [ k ] { ... }`,
//! `probability` blocks with either a `table` entry or one row per parent
//! configuration, `property` entries (ignored), and `//` / `/* */` comments.
//! For a `table` entry on a node with parents, values are listed child-state
//! major: all configurations for the first child state, then the second, etc.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::VarId;
use crate::network::{BayesianNetwork, Cpt, NetworkError, Variable};

type Pos = (usize, usize);

#[derive(Debug, Error)]
pub enum BifError {
    #[error("{line}:{col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("{0}")]
    Semantic(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, BifError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l0, c0) = (line, col);
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(BifError::Parse {
                        line: l0,
                        col: c0,
                        msg: "unterminated block comment".into(),
                    });
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
        } else if c == '"' {
            let (l0, c0) = (line, col);
            bump!();
            let mut s = String::new();
            while i < chars.len() && chars[i] != '"' {
                s.push(chars[i]);
                bump!();
            }
            if i >= chars.len() {
                return Err(BifError::Parse {
                    line: l0,
                    col: c0,
                    msg: "unterminated string".into(),
                });
            }
            bump!();
            out.push(Token {
                tok: Tok::Word(s),
                line: l0,
                col: c0,
            });
        } else if "{}()[];,|".contains(c) {
            out.push(Token {
                tok: Tok::Punct(c),
                line,
                col,
            });
            bump!();
        } else if c.is_alphanumeric() || "_-.+".contains(c) {
            let (l0, c0) = (line, col);
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_alphanumeric() || "_-.+".contains(chars[i])) {
                s.push(chars[i]);
                bump!();
            }
            let is_property = s == "property";
            out.push(Token {
                tok: Tok::Word(s),
                line: l0,
                col: c0,
            });
            // property values are free text up to the next `;`
            if is_property {
                while i < chars.len() && chars[i] != ';' {
                    bump!();
                }
            }
        } else {
            return Err(BifError::Parse {
                line,
                col,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

enum Entry {
    Table(Vec<f64>),
    Row(Vec<String>, Vec<f64>),
}

struct ProbBlock {
    child: String,
    parents: Vec<String>,
    entries: Vec<Entry>,
    at: (usize, usize),
}

impl Parser {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, BifError> {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map(|t| (t.line, t.col))
            .unwrap_or(self.end);
        Err(BifError::Parse {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|t| (t.line, t.col))
            .unwrap_or(self.end)
    }

    fn word(&mut self) -> Result<String, BifError> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            Some(Tok::Punct(c)) => {
                let c = *c;
                self.err(format!("expected a name, found `{c}`"))
            }
            None => self.err("expected a name, found end of input"),
        }
    }

    fn punct(&mut self, want: char) -> Result<(), BifError> {
        match self.peek() {
            Some(Tok::Punct(c)) if *c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(Tok::Punct(c)) => {
                let c = *c;
                self.err(format!("expected `{want}`, found `{c}`"))
            }
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.err(format!("expected `{want}`, found `{w}`"))
            }
            None => self.err(format!("expected `{want}`, found end of input")),
        }
    }

    fn eat(&mut self, want: char) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(c)) if *c == want) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn skip_to_semicolon(&mut self) -> Result<(), BifError> {
        while let Some(t) = self.peek() {
            let done = *t == Tok::Punct(';');
            self.pos += 1;
            if done {
                return Ok(());
            }
        }
        self.err("expected `;`")
    }

    fn number(&mut self) -> Result<f64, BifError> {
        let at = self.pos;
        let w = self.word()?;
        w.parse::<f64>().or_else(|_| {
            self.pos = at;
            self.err(format!("expected a probability, found `{w}`"))
        })
    }

    /// Numbers separated by commas and/or whitespace, terminated by `;`.
    fn number_list(&mut self) -> Result<Vec<f64>, BifError> {
        let mut vals = Vec::new();
        loop {
            if self.eat(';') {
                return Ok(vals);
            }
            vals.push(self.number()?);
            self.eat(',');
        }
    }

    fn network(&mut self) -> Result<String, BifError> {
        let name = self.word()?;
        self.punct('{')?;
        while !self.eat('}') {
            match self.word()?.as_str() {
                "property" => self.skip_to_semicolon()?,
                other => {
                    self.pos -= 1;
                    return self.err(format!("unsupported construct `{other}` in network block"));
                }
            }
        }
        Ok(name)
    }

    /// Name, states and the position of the declaration.
    fn variable(&mut self) -> Result<(String, Vec<String>, Pos), BifError> {
        let at = self.here();
        let name = self.word()?;
        self.punct('{')?;
        let mut states = None;
        while !self.eat('}') {
            match self.word()?.as_str() {
                "property" => self.skip_to_semicolon()?,
                "type" => {
                    let kind = self.word()?;
                    if kind != "discrete" {
                        self.pos -= 1;
                        return self.err(format!("unsupported construct `type {kind}`"));
                    }
                    self.punct('[')?;
                    let at_k = self.pos;
                    let k = self.word()?;
                    let k: usize = match k.parse() {
                        Ok(k) => k,
                        Err(_) => {
                            self.pos = at_k;
                            return self.err(format!("expected a state count, found `{k}`"));
                        }
                    };
                    self.punct(']')?;
                    self.punct('{')?;
                    let mut labels = Vec::new();
                    while !self.eat('}') {
                        labels.push(self.word()?);
                        self.eat(',');
                    }
                    self.punct(';')?;
                    if labels.len() != k {
                        return Err(BifError::Semantic(format!(
                            "variable `{name}` declares {k} states but lists {}",
                            labels.len()
                        )));
                    }
                    states = Some(labels);
                }
                other => {
                    self.pos -= 1;
                    return self.err(format!("unsupported construct `{other}` in variable block"));
                }
            }
        }
        match states {
            Some(s) => Ok((name, s, at)),
            None => Err(BifError::Semantic(format!(
                "variable `{name}` has no type declaration"
            ))),
        }
    }

    fn probability(&mut self) -> Result<ProbBlock, BifError> {
        let at = self.here();
        self.punct('(')?;
        let child = self.word()?;
        let mut parents = Vec::new();
        if self.eat('|') {
            loop {
                parents.push(self.word()?);
                if !self.eat(',') {
                    break;
                }
            }
        }
        self.punct(')')?;
        self.punct('{')?;
        let mut entries = Vec::new();
        while !self.eat('}') {
            match self.peek() {
                Some(Tok::Punct('(')) => {
                    self.pos += 1;
                    let mut labels = Vec::new();
                    while !self.eat(')') {
                        labels.push(self.word()?);
                        self.eat(',');
                    }
                    entries.push(Entry::Row(labels, self.number_list()?));
                }
                Some(Tok::Word(w)) if w == "table" => {
                    self.pos += 1;
                    entries.push(Entry::Table(self.number_list()?));
                }
                Some(Tok::Word(w)) if w == "property" => {
                    self.pos += 1;
                    self.skip_to_semicolon()?;
                }
                Some(Tok::Word(w)) => {
                    let w = w.clone();
                    return self.err(format!("unsupported construct `{w}` in probability block"));
                }
                Some(Tok::Punct(c)) => {
                    let c = *c;
                    return self.err(format!("unexpected `{c}` in probability block"));
                }
                None => return self.err("unterminated probability block"),
            }
        }
        Ok(ProbBlock {
            child,
            parents,
            entries,
            at,
        })
    }
}

/// Parses a BIF document. Variables keep their declaration order.
pub fn parse_bif(text: &str) -> Result<BayesianNetwork, BifError> {
    let toks = tokenize(text)?;
    let end = toks.last().map(|t| (t.line, t.col + 1)).unwrap_or((1, 1));
    let mut p = Parser { toks, pos: 0, end };

    let mut net_name = String::from("unknown");
    let mut vars: Vec<Variable> = Vec::new();
    let mut index: HashMap<String, VarId> = HashMap::new();
    let mut blocks = Vec::new();

    while p.peek().is_some() {
        match p.word()?.as_str() {
            "network" => net_name = p.network()?,
            "variable" => {
                let (name, states, (line, col)) = p.variable()?;
                if index.contains_key(&name) {
                    return Err(BifError::Parse {
                        line,
                        col,
                        msg: format!("variable `{name}` declared twice"),
                    });
                }
                index.insert(name.clone(), vars.len());
                vars.push(Variable::new(name, states)?);
            }
            "probability" => blocks.push(p.probability()?),
            other => {
                p.pos -= 1;
                return p.err(format!("unsupported construct `{other}`"));
            }
        }
    }

    let lookup = |name: &str| -> Result<VarId, BifError> {
        index
            .get(name)
            .copied()
            .ok_or_else(|| BifError::Semantic(format!("reference to undeclared variable `{name}`")))
    };

    let mut tables: Vec<Option<Cpt>> = vec![None; vars.len()];
    for block in blocks {
        let child = lookup(&block.child)?;
        let parents = block
            .parents
            .iter()
            .map(|n| lookup(n))
            .collect::<Result<Vec<_>, _>>()?;
        if tables[child].is_some() {
            return Err(BifError::Semantic(format!(
                "variable `{}` has two probability blocks (line {})",
                block.child, block.at.0
            )));
        }
        let probs = assemble_table(&vars, child, &parents, block.entries)?;
        tables[child] = Some(Cpt::new(&vars, child, parents, probs)?);
    }
    let cpts = tables
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            t.ok_or_else(|| {
                BifError::Semantic(format!(
                    "variable `{}` has no probability block",
                    vars[i].name
                ))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BayesianNetwork::new(net_name, vars, cpts)?)
}

fn assemble_table(
    vars: &[Variable],
    child: VarId,
    parents: &[VarId],
    entries: Vec<Entry>,
) -> Result<Vec<f64>, BifError> {
    let child_name = &vars[child].name;
    let arity = vars[child].cardinality();
    let cards: Vec<usize> = parents.iter().map(|&p| vars[p].cardinality()).collect();
    let rows: usize = cards.iter().product();
    let mut probs = vec![f64::NAN; rows * arity];
    let mut filled = vec![false; rows];

    for entry in entries {
        match entry {
            Entry::Table(vals) => {
                if vals.len() != rows * arity {
                    return Err(BifError::Semantic(format!(
                        "table for `{child_name}` has {} values, expected {}",
                        vals.len(),
                        rows * arity
                    )));
                }
                // child-state major on disk, configuration major in memory
                for k in 0..arity {
                    for j in 0..rows {
                        probs[j * arity + k] = vals[k * rows + j];
                    }
                }
                filled.iter_mut().for_each(|f| *f = true);
            }
            Entry::Row(labels, vals) => {
                if labels.len() != parents.len() {
                    return Err(BifError::Semantic(format!(
                        "row for `{child_name}` names {} parent states, expected {}",
                        labels.len(),
                        parents.len()
                    )));
                }
                if vals.len() != arity {
                    return Err(BifError::Semantic(format!(
                        "row for `{child_name}` has {} values, expected {arity}",
                        vals.len()
                    )));
                }
                let mut config = 0;
                for ((label, &p), &card) in labels.iter().zip(parents).zip(&cards) {
                    let code = vars[p]
                        .states
                        .iter()
                        .position(|s| s == label)
                        .ok_or_else(|| {
                            BifError::Semantic(format!(
                                "unknown state `{label}` of `{}` in table of `{child_name}`",
                                vars[p].name
                            ))
                        })?;
                    config = config * card + code;
                }
                probs[config * arity..(config + 1) * arity].copy_from_slice(&vals);
                filled[config] = true;
            }
        }
    }
    if let Some(missing) = filled.iter().position(|f| !f) {
        return Err(BifError::Semantic(format!(
            "table of `{child_name}` is missing parent configuration {missing}"
        )));
    }
    Ok(probs)
}

/// Serializes a network; per-configuration rows for nodes with parents and a
/// `table` entry for root nodes.
pub fn write_bif(bn: &BayesianNetwork) -> String {
    let vars = bn.variables();
    let mut out = String::new();
    let _ = writeln!(out, "network {} {{\n}}", quote_if_needed(bn.name()));
    for v in vars {
        let _ = writeln!(
            out,
            "variable {} {{\n  type discrete [ {} ] {{ {} }};\n}}",
            v.name,
            v.cardinality(),
            v.states.join(", ")
        );
    }
    for (i, v) in vars.iter().enumerate() {
        let cpt = bn.cpt(i);
        let fmt_row = |row: &[f64]| {
            row.iter()
                .map(|p| format!("{p:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        if cpt.parents().is_empty() {
            let _ = writeln!(
                out,
                "probability ( {} ) {{\n  table {};\n}}",
                v.name,
                fmt_row(cpt.row(0))
            );
            continue;
        }
        let pnames: Vec<&str> = cpt
            .parents()
            .iter()
            .map(|&p| vars[p].name.as_str())
            .collect();
        let _ = writeln!(out, "probability ( {} | {} ) {{", v.name, pnames.join(", "));
        let cards: Vec<usize> = cpt
            .parents()
            .iter()
            .map(|&p| vars[p].cardinality())
            .collect();
        for config in 0..cpt.row_count() {
            let mut rem = config;
            let mut labels = vec![""; cards.len()];
            for (slot, (&p, &card)) in cpt.parents().iter().zip(&cards).enumerate().rev() {
                labels[slot] = vars[p].states[rem % card].as_str();
                rem /= card;
            }
            let _ = writeln!(
                out,
                "  ({}) {};",
                labels.join(", "),
                fmt_row(cpt.row(config))
            );
        }
        out.push_str("}\n");
    }
    out
}

fn quote_if_needed(name: &str) -> String {
    if !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_alphanumeric() || "_-.+".contains(c))
    {
        name.to_string()
    } else {
        format!("\"{name}\"")
    }
}
