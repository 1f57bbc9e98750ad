use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EncodeError, Result};
use crate::bn::{BayesianNetwork, VarId};

/// DIMACS literal: `v` or `-v` for CNF variable `v >= 1`.
pub type Lit = i32;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CnfFormula {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
}

impl CnfFormula {
    pub fn new(num_vars: u32) -> Self {
        CnfFormula {
            num_vars,
            clauses: Vec::new(),
        }
    }

    /// Panics on an empty clause or an undeclared variable.
    pub fn add_clause(&mut self, clause: Vec<Lit>) {
        assert!(!clause.is_empty(), "empty clause");
        assert!(
            clause.iter().all(|&l| l != 0 && l.unsigned_abs() <= self.num_vars),
            "literal out of range in {clause:?}"
        );
        self.clauses.push(clause);
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// DIMACS text with the variable map as `c map` comment lines.
    pub fn to_dimacs(&self, map: &VarMap) -> String {
        let mut out = String::new();
        for (i, sym) in map.symbols().iter().enumerate() {
            let _ = writeln!(out, "c map {} {}", i + 1, sym);
        }
        let _ = writeln!(out, "p cnf {} {}", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                let _ = write!(out, "{l} ");
            }
            out.push_str("0\n");
        }
        out
    }

    /// Parses DIMACS text, recovering the variable map from `c map` lines
    /// when present.
    pub fn from_dimacs(text: &str) -> Result<(CnfFormula, Option<VarMap>)> {
        let mut cnf: Option<CnfFormula> = None;
        let mut symbols: Vec<(u32, Symbol)> = Vec::new();
        let mut pending: Vec<Lit> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            let bad = |m: String| EncodeError::Dimacs { line: n + 1, message: m };
            if let Some(rest) = line.strip_prefix("c map ") {
                let (v, sym) = rest.split_once(' ').ok_or_else(|| bad("malformed map line".into()))?;
                let v: u32 = v.parse().map_err(|_| bad(format!("bad variable `{v}`")))?;
                symbols.push((v, sym.parse().map_err(bad)?));
                continue;
            }
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("p cnf") {
                let nums: Vec<u32> = rest
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| bad(format!("bad header field `{t}`"))))
                    .collect::<Result<_>>()?;
                if nums.len() != 2 {
                    return Err(bad("header needs variable and clause counts".into()));
                }
                cnf = Some(CnfFormula::new(nums[0]));
                continue;
            }
            let f = cnf.as_mut().ok_or_else(|| bad("clause before header".into()))?;
            for tok in line.split_whitespace() {
                let l: Lit = tok.parse().map_err(|_| bad(format!("bad literal `{tok}`")))?;
                if l == 0 {
                    if pending.is_empty() {
                        return Err(bad("empty clause".into()));
                    }
                    if pending.iter().any(|x| x.unsigned_abs() > f.num_vars) {
                        return Err(bad("literal exceeds declared variable count".into()));
                    }
                    f.clauses.push(std::mem::take(&mut pending));
                } else {
                    pending.push(l);
                }
            }
        }
        let cnf = cnf.ok_or(EncodeError::Dimacs {
            line: 0,
            message: "missing `p cnf` header".into(),
        })?;
        let map = if symbols.is_empty() {
            None
        } else {
            symbols.sort_by_key(|(v, _)| *v);
            let mut m = VarMap::new();
            for (k, (v, s)) in symbols.into_iter().enumerate() {
                if v as usize != k + 1 {
                    return Err(EncodeError::Dimacs {
                        line: 0,
                        message: format!("map does not cover variable {}", k + 1),
                    });
                }
                m.push(s);
            }
            Some(m)
        };
        Ok((cnf, map))
    }
}

/// Meaning of a CNF variable, by name so that maps survive serialization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Indicator { variable: String, value: String },
    /// `θ_{value | row}` of `child`'s CPT; `value` is a value index.
    Parameter { child: String, row: usize, value: usize },
    Intermediate { gate: usize },
}

impl Symbol {
    pub fn indicator(variable: &str, value: &str) -> Self {
        Symbol::Indicator {
            variable: variable.to_string(),
            value: value.to_string(),
        }
    }

    pub fn is_indicator(&self) -> bool {
        matches!(self, Symbol::Indicator { .. })
    }
}

impl std::fmt::Display for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Symbol::Indicator { variable, value } => write!(f, "indicator {variable}={value}"),
            Symbol::Parameter { child, row, value } => write!(f, "param {child} {row} {value}"),
            Symbol::Intermediate { gate } => write!(f, "aux {gate}"),
        }
    }
}

impl std::str::FromStr for Symbol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (tag, rest) = s.split_once(' ').ok_or_else(|| format!("malformed symbol `{s}`"))?;
        match tag {
            "indicator" => {
                let (var, val) = rest
                    .rsplit_once('=')
                    .ok_or_else(|| format!("malformed indicator `{rest}`"))?;
                Ok(Symbol::indicator(var, val))
            }
            "param" => {
                let parts: Vec<&str> = rest.rsplitn(3, ' ').collect();
                if parts.len() != 3 {
                    return Err(format!("malformed parameter `{rest}`"));
                }
                let num = |t: &str| t.parse::<usize>().map_err(|_| format!("bad number `{t}`"));
                Ok(Symbol::Parameter {
                    child: parts[2].to_string(),
                    row: num(parts[1])?,
                    value: num(parts[0])?,
                })
            }
            "aux" => Ok(Symbol::Intermediate {
                gate: rest.parse().map_err(|_| format!("bad gate `{rest}`"))?,
            }),
            other => Err(format!("unknown symbol tag `{other}`")),
        }
    }
}

/// Bijection between CNF variables (1-based) and symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<Symbol>", into = "Vec<Symbol>")]
pub struct VarMap {
    symbols: Vec<Symbol>,
    index: HashMap<Symbol, u32>,
}

impl From<Vec<Symbol>> for VarMap {
    fn from(symbols: Vec<Symbol>) -> Self {
        let index = symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32 + 1))
            .collect();
        VarMap { symbols, index }
    }
}

impl From<VarMap> for Vec<Symbol> {
    fn from(map: VarMap) -> Self {
        map.symbols
    }
}

impl VarMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a symbol and returns its CNF variable. Panics on duplicates.
    pub fn push(&mut self, sym: Symbol) -> u32 {
        let v = self.symbols.len() as u32 + 1;
        let prev = self.index.insert(sym.clone(), v);
        assert!(prev.is_none(), "duplicate symbol {sym}");
        self.symbols.push(sym);
        v
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn symbol(&self, var: u32) -> &Symbol {
        &self.symbols[var as usize - 1]
    }

    pub fn lookup(&self, sym: &Symbol) -> Option<u32> {
        self.index.get(sym).copied()
    }

    /// Resolves every symbol against `bn`.
    pub fn roles(&self, bn: &BayesianNetwork) -> Result<Vec<Role>> {
        self.symbols
            .iter()
            .map(|s| match s {
                Symbol::Indicator { variable, value } => {
                    let var = bn.require_var(variable)?;
                    let value = bn.value_index(var, value)?;
                    Ok(Role::Indicator { var, value })
                }
                Symbol::Parameter { child, row, value } => {
                    let var = bn.require_var(child)?;
                    if bn.is_deterministic(var) || *row >= bn.num_rows(var) || *value >= bn.cardinality(var) {
                        return Err(EncodeError::TagMismatch(format!("parameter {s} does not exist in the network")));
                    }
                    Ok(Role::Parameter {
                        index: bn.param_index(var, *row, *value),
                        var,
                        row: *row,
                        value: *value,
                    })
                }
                Symbol::Intermediate { .. } => Ok(Role::Intermediate),
            })
            .collect()
    }
}

/// A symbol resolved against a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Indicator { var: VarId, value: usize },
    Parameter { index: usize, var: VarId, row: usize, value: usize },
    Intermediate,
}

impl Role {
    pub fn is_indicator(&self) -> bool {
        matches!(self, Role::Indicator { .. })
    }

    pub fn network_var(&self) -> Option<VarId> {
        match *self {
            Role::Indicator { var, .. } | Role::Parameter { var, .. } => Some(var),
            Role::Intermediate => None,
        }
    }
}
