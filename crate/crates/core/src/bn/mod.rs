//! Discrete causal Bayesian networks.
//!
//! A network is a DAG of discrete variables with one mechanism per variable.
//! Mechanisms are either dense conditional probability tables or, for the
//! prediction node of an augmented network, a reference to a Boolean decision
//! circuit whose CPT is the deterministic indicator `1[ŷ = F(x)]`.
//!
//! Parent instantiations are indexed with the last-listed parent varying
//! fastest. This row order is used everywhere a row key appears: BIF rows,
//! parameter indices, witnesses and the canonical dump.

pub mod bif;
pub mod dump;
mod augment;
mod intervene;
mod validate;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::classifier::BooleanCircuit;

pub use augment::materialize_deterministic;
pub use intervene::RowReplacement;
pub use validate::{ValidationReport, Violation};

/// Index of a variable inside its network.
pub type VarId = usize;

/// Absolute tolerance on CPT row sums. Rows within it are renormalized.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum BnError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{variable}` has no value `{value}`")]
    UnknownValue { variable: String, value: String },
    #[error("row length mismatch in CPT of `{variable}`: expected {expected} entries, found {found}")]
    RowLength {
        variable: String,
        expected: usize,
        found: usize,
    },
    #[error("unsupported BIF construct: {0}")]
    Unsupported(String),
    #[error("invalid network:\n{0}")]
    Invalid(ValidationReport),
    #[error("CPT of `{variable}` has no row {row}")]
    UnknownRow { variable: String, row: usize },
    #[error("invalid distribution for `{variable}` row {row}: {reason}")]
    InvalidDistribution {
        variable: String,
        row: usize,
        reason: String,
    },
    #[error("intervention would create a cycle through `{0}`")]
    Cycle(String),
    #[error("new CPT for `{variable}` has parents {found:?}, context requires {expected:?}")]
    ParentMismatch {
        variable: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("instantiation does not assign `{0}`")]
    MissingAssignment(String),
    #[error("variable `{0}` assigned twice")]
    DuplicateAssignment(String),
    #[error("name `{0}` already used in the network")]
    NameCollision(String),
    #[error("invalid intervention: {0}")]
    InvalidIntervention(String),
    #[error("evidence syntax: {0}")]
    EvidenceSyntax(String),
    #[error("decision circuit is not functional on parent row {row}: {satisfied} predictions satisfy it")]
    NonFunctional { row: usize, satisfied: usize },
    #[error(transparent)]
    Circuit(#[from] crate::classifier::CircuitError),
}

pub type Result<T> = std::result::Result<T, BnError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub values: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, values: &[&str]) -> Self {
        Variable {
            name: name.into(),
            values: values.iter().map(|v| v.to_string()).collect(),
        }
    }

    pub fn cardinality(&self) -> usize {
        self.values.len()
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v == label)
    }
}

/// Deterministic mechanism of an augmented prediction node.
///
/// Rows are never stored as probabilities. The decision for a parent row is
/// computed from the circuit on demand and cached per row once requested.
#[derive(Debug)]
pub struct DeterministicCpt {
    pub(crate) circuit: Arc<BooleanCircuit>,
    /// For each circuit input: `Some((parent position, value))` for feature
    /// indicators, `None` for prediction indicators (value in `target_value`).
    pub(crate) bindings: Vec<InputBinding>,
    pub(crate) decisions: OnceLock<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum InputBinding {
    Parent { position: usize, value: usize },
    Target { value: usize },
}

impl Clone for DeterministicCpt {
    fn clone(&self) -> Self {
        let decisions = OnceLock::new();
        if let Some(d) = self.decisions.get() {
            let _ = decisions.set(d.clone());
        }
        DeterministicCpt {
            circuit: Arc::clone(&self.circuit),
            bindings: self.bindings.clone(),
            decisions,
        }
    }
}

impl DeterministicCpt {
    pub fn circuit(&self) -> &Arc<BooleanCircuit> {
        &self.circuit
    }
}

#[derive(Debug, Clone)]
pub enum CptTable {
    /// One probability vector over the child's values per parent row.
    Dense(Vec<Vec<f64>>),
    Deterministic(DeterministicCpt),
}

#[derive(Debug, Clone)]
pub struct Cpt {
    pub child: VarId,
    pub parents: Vec<VarId>,
    pub table: CptTable,
}

impl Cpt {
    pub fn dense(child: VarId, parents: Vec<VarId>, rows: Vec<Vec<f64>>) -> Self {
        Cpt {
            child,
            parents,
            table: CptTable::Dense(rows),
        }
    }

    pub fn rows(&self) -> Option<&[Vec<f64>]> {
        match &self.table {
            CptTable::Dense(rows) => Some(rows),
            CptTable::Deterministic(_) => None,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.table, CptTable::Deterministic(_))
    }
}

/// A discrete Bayesian network `(G, Θ)`. Immutable once built.
#[derive(Debug, Clone)]
pub struct BayesianNetwork {
    name: String,
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
    index: HashMap<String, VarId>,
    param_offsets: Vec<usize>,
    num_params: usize,
}

impl BayesianNetwork {
    /// Builds and validates a network. Rows whose sums are within
    /// [`ROW_SUM_TOLERANCE`] of one are renormalized; other violations fail.
    pub fn new(name: impl Into<String>, variables: Vec<Variable>, mut cpts: Vec<Cpt>) -> Result<Self> {
        for cpt in &mut cpts {
            if let CptTable::Dense(rows) = &mut cpt.table {
                for row in rows.iter_mut() {
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() <= ROW_SUM_TOLERANCE && sum > 0.0 && sum != 1.0 {
                        row.iter_mut().for_each(|p| *p /= sum);
                    }
                }
            }
        }
        let bn = Self::from_parts_unchecked(name, variables, cpts);
        let report = bn.validate();
        if report.is_empty() {
            Ok(bn)
        } else {
            Err(BnError::Invalid(report))
        }
    }

    /// Assembles a network without any checks. Used for building deliberately
    /// broken inputs to [`BayesianNetwork::validate`].
    #[doc(hidden)]
    pub fn from_parts_unchecked(name: impl Into<String>, variables: Vec<Variable>, mut cpts: Vec<Cpt>) -> Self {
        cpts.sort_by_key(|c| c.child);
        let index = variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
        let mut param_offsets = Vec::with_capacity(cpts.len());
        let mut offset = 0;
        for cpt in &cpts {
            param_offsets.push(offset);
            if let CptTable::Dense(rows) = &cpt.table {
                offset += rows.iter().map(|r| r.len()).sum::<usize>();
            }
        }
        BayesianNetwork {
            name: name.into(),
            variables,
            cpts,
            index,
            param_offsets,
            num_params: offset,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn require_var(&self, name: &str) -> Result<VarId> {
        self.var_id(name)
            .ok_or_else(|| BnError::UnknownVariable(name.to_string()))
    }

    pub fn value_index(&self, var: VarId, label: &str) -> Result<usize> {
        self.variables[var]
            .value_index(label)
            .ok_or_else(|| BnError::UnknownValue {
                variable: self.variables[var].name.clone(),
                value: label.to_string(),
            })
    }

    pub fn cardinality(&self, id: VarId) -> usize {
        self.variables[id].values.len()
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, id: VarId) -> &Cpt {
        &self.cpts[id]
    }

    pub fn parents(&self, id: VarId) -> &[VarId] {
        &self.cpts[id].parents
    }

    pub fn children(&self, id: VarId) -> Vec<VarId> {
        (0..self.num_vars())
            .filter(|&c| self.cpts[c].parents.contains(&id))
            .collect()
    }

    /// The prediction node of an augmented network, if any.
    pub fn target(&self) -> Option<VarId> {
        self.cpts.iter().position(|c| c.is_deterministic())
    }

    pub fn is_deterministic(&self, id: VarId) -> bool {
        self.cpts[id].is_deterministic()
    }

    /// Kahn's algorithm, always taking the lowest-index ready variable.
    /// Returns `None` when the parent relation has a cycle.
    pub fn try_topological_order(&self) -> Option<Vec<VarId>> {
        topological_order(self.num_vars(), |v| &self.cpts[v].parents)
    }

    pub fn topological_order(&self) -> Vec<VarId> {
        self.try_topological_order()
            .expect("validated networks are acyclic")
    }

    pub fn num_rows(&self, id: VarId) -> usize {
        self.cpts[id]
            .parents
            .iter()
            .map(|&p| self.cardinality(p))
            .product()
    }

    /// Row index of a parent instantiation (last parent fastest).
    pub fn row_index(&self, id: VarId, parent_values: &[usize]) -> usize {
        let mut row = 0;
        for (&p, &v) in self.cpts[id].parents.iter().zip(parent_values) {
            row = row * self.cardinality(p) + v;
        }
        row
    }

    /// Row index for `id` given a full or partial assignment indexed by
    /// variable. Panics if a parent is unassigned.
    pub fn row_of(&self, id: VarId, assignment: &[usize]) -> usize {
        let mut row = 0;
        for &p in &self.cpts[id].parents {
            row = row * self.cardinality(p) + assignment[p];
        }
        row
    }

    /// Decodes a row index into parent values (in parent order).
    pub fn row_values(&self, id: VarId, mut row: usize) -> Vec<usize> {
        let parents = &self.cpts[id].parents;
        let mut values = vec![0; parents.len()];
        for (k, &p) in parents.iter().enumerate().rev() {
            let card = self.cardinality(p);
            values[k] = row % card;
            row /= card;
        }
        values
    }

    /// Human-readable row label, e.g. `(Adult, Prole)`.
    pub fn row_label(&self, id: VarId, row: usize) -> String {
        let parents = &self.cpts[id].parents;
        let labels: Vec<&str> = self
            .row_values(id, row)
            .iter()
            .zip(parents)
            .map(|(&v, &p)| self.variables[p].values[v].as_str())
            .collect();
        format!("({})", labels.join(", "))
    }

    /// `θ_{value | row}`; deterministic mechanisms return 0 or 1.
    pub fn prob(&self, id: VarId, value: usize, row: usize) -> f64 {
        match &self.cpts[id].table {
            CptTable::Dense(rows) => rows[row][value],
            CptTable::Deterministic(det) => {
                if self.decision(det, id, row) == value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Predicted value of the deterministic node `id` on parent row `row`.
    pub fn decision_for_row(&self, id: VarId, row: usize) -> Option<usize> {
        match &self.cpts[id].table {
            CptTable::Deterministic(det) => Some(self.decision(det, id, row)),
            CptTable::Dense(_) => None,
        }
    }

    fn decision(&self, det: &DeterministicCpt, id: VarId, row: usize) -> usize {
        if let Some(table) = det.decisions.get() {
            return table[row] as usize;
        }
        augment::decide_row(self, det, id, row).expect("augmented circuits are checked for functionality")
    }

    /// Offset of the first parameter of `id` in the global parameter layout.
    pub fn param_offset(&self, id: VarId) -> usize {
        self.param_offsets[id]
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    /// Global index of `θ_{value | row}` for a dense CPT.
    pub fn param_index(&self, id: VarId, row: usize, value: usize) -> usize {
        debug_assert!(!self.is_deterministic(id));
        self.param_offsets[id] + row * self.cardinality(id) + value
    }

    /// Inverse of [`BayesianNetwork::param_index`].
    pub fn param_location(&self, index: usize) -> (VarId, usize, usize) {
        let var = match self.param_offsets.binary_search(&index) {
            Ok(mut v) => {
                // Deterministic CPTs share the offset of their successor.
                while self.is_deterministic(v) {
                    v += 1;
                }
                v
            }
            Err(v) => v - 1,
        };
        let local = index - self.param_offsets[var];
        let card = self.cardinality(var);
        (var, local / card, local % card)
    }

    /// All dense CPT entries in the global parameter layout.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params);
        for cpt in &self.cpts {
            if let CptTable::Dense(rows) = &cpt.table {
                for row in rows {
                    out.extend_from_slice(row);
                }
            }
        }
        out
    }

    /// `Π_i θ_{v_i | u_i}` for a full instantiation.
    pub fn joint_probability(&self, instantiation: &Evidence) -> Result<f64> {
        let mut values = Vec::with_capacity(self.num_vars());
        for v in 0..self.num_vars() {
            match instantiation.get(v) {
                Some(x) => values.push(x),
                None => return Err(BnError::MissingAssignment(self.variables[v].name.clone())),
            }
        }
        Ok(self.joint_probability_dense(&values))
    }

    /// Same as [`BayesianNetwork::joint_probability`] for a dense value vector.
    pub fn joint_probability_dense(&self, values: &[usize]) -> f64 {
        let mut p = 1.0;
        for v in 0..self.num_vars() {
            p *= self.prob(v, values[v], self.row_of(v, values));
            if p == 0.0 {
                break;
            }
        }
        p
    }

    /// Number of full instantiations (product of cardinalities).
    pub fn state_space_size(&self) -> f64 {
        self.variables
            .iter()
            .map(|v| v.values.len() as f64)
            .product()
    }

    /// Replaces the dense rows of `id`, keeping everything else. Internal
    /// helper for interventions; distributions are checked by callers.
    pub(crate) fn with_cpt(&self, cpt: Cpt) -> BayesianNetwork {
        let mut cpts = self.cpts.clone();
        let child = cpt.child;
        cpts[child] = cpt;
        BayesianNetwork::from_parts_unchecked(self.name.clone(), self.variables.clone(), cpts)
    }
}

pub(crate) fn topological_order<'a, F>(n: usize, parents: F) -> Option<Vec<usize>>
where
    F: Fn(usize) -> &'a [usize],
{
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for v in 0..n {
        for &p in parents(v) {
            if p >= n {
                return None;
            }
            indegree[v] += 1;
            children[p].push(v);
        }
    }
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// A partial assignment of network variables.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Evidence {
    values: BTreeMap<VarId, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `Var=value,Var=value`. Whitespace around tokens is ignored and
    /// an empty string yields empty evidence.
    pub fn parse(bn: &BayesianNetwork, text: &str) -> Result<Self> {
        let mut ev = Evidence::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| BnError::EvidenceSyntax(format!("expected Var=value, got `{item}`")))?;
            let var = bn.require_var(name.trim())?;
            let value = bn.value_index(var, value.trim())?;
            ev.insert(bn, var, value)?;
        }
        Ok(ev)
    }

    pub fn from_pairs(bn: &BayesianNetwork, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut ev = Evidence::new();
        for (name, value) in pairs {
            let var = bn.require_var(name)?;
            let value = bn.value_index(var, value)?;
            ev.insert(bn, var, value)?;
        }
        Ok(ev)
    }

    /// Full instantiation from a dense value vector.
    pub fn full(values: &[usize]) -> Self {
        Evidence {
            values: values.iter().copied().enumerate().collect(),
        }
    }

    pub fn insert(&mut self, bn: &BayesianNetwork, var: VarId, value: usize) -> Result<()> {
        if value >= bn.cardinality(var) {
            return Err(BnError::UnknownValue {
                variable: bn.variable(var).name.clone(),
                value: value.to_string(),
            });
        }
        if self.values.insert(var, value).is_some() {
            return Err(BnError::DuplicateAssignment(bn.variable(var).name.clone()));
        }
        Ok(())
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.values.get(&var).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_dense(&self, num_vars: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; num_vars];
        for (&k, &v) in &self.values {
            if k < num_vars {
                out[k] = Some(v);
            }
        }
        out
    }

    /// Canonical `Var=value` rendering in variable order.
    pub fn display(&self, bn: &BayesianNetwork) -> String {
        self.values
            .iter()
            .map(|(&k, &v)| format!("{}={}", bn.variable(k).name, bn.variable(k).values[v]))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionKind {
    Parametric,
    Structural,
}

/// The adversary's power: which mechanisms may change and, for structural
/// interventions, the new parent set of each intervenable variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterventionSpec {
    pub kind: InterventionKind,
    /// Sorted, duplicate free.
    pub intervenable: Vec<VarId>,
    /// Structural only: `W -> C_W(W)`.
    pub contexts: BTreeMap<VarId, Vec<VarId>>,
}

impl InterventionSpec {
    pub fn empty() -> Self {
        InterventionSpec {
            kind: InterventionKind::Parametric,
            intervenable: Vec::new(),
            contexts: BTreeMap::new(),
        }
    }

    pub fn parametric(bn: &BayesianNetwork, names: &[&str]) -> Result<Self> {
        let mut intervenable = names
            .iter()
            .map(|n| bn.require_var(n))
            .collect::<Result<Vec<_>>>()?;
        intervenable.sort_unstable();
        intervenable.dedup();
        let spec = InterventionSpec {
            kind: InterventionKind::Parametric,
            intervenable,
            contexts: BTreeMap::new(),
        };
        spec.validate(bn)?;
        Ok(spec)
    }

    /// `contexts` pairs each intervenable name with its new parent names.
    /// Intervenable variables without an entry keep their original parents.
    pub fn structural(bn: &BayesianNetwork, names: &[&str], contexts: &[(&str, &[&str])]) -> Result<Self> {
        let mut intervenable = names
            .iter()
            .map(|n| bn.require_var(n))
            .collect::<Result<Vec<_>>>()?;
        intervenable.sort_unstable();
        intervenable.dedup();
        let mut map = BTreeMap::new();
        for (w, parents) in contexts {
            let w = bn.require_var(w)?;
            let ps = parents
                .iter()
                .map(|p| bn.require_var(p))
                .collect::<Result<Vec<_>>>()?;
            map.insert(w, ps);
        }
        for &w in &intervenable {
            map.entry(w).or_insert_with(|| bn.parents(w).to_vec());
        }
        let spec = InterventionSpec {
            kind: InterventionKind::Structural,
            intervenable,
            contexts: map,
        };
        spec.validate(bn)?;
        Ok(spec)
    }

    /// Parses a context string of the form `W:[P1,P2]`.
    pub fn parse_context(text: &str) -> Result<(String, Vec<String>)> {
        let (w, rest) = text
            .split_once(':')
            .ok_or_else(|| BnError::InvalidIntervention(format!("context `{text}` lacks `:`")))?;
        let inner = rest
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| BnError::InvalidIntervention(format!("context `{text}` must list parents in brackets")))?;
        let parents = inner
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        Ok((w.trim().to_string(), parents))
    }

    pub fn is_empty(&self) -> bool {
        self.intervenable.is_empty()
    }

    pub fn is_structural(&self) -> bool {
        self.kind == InterventionKind::Structural
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.intervenable.binary_search(&var).is_ok()
    }

    /// Parents of `var` after the intervention (`pa_G'`).
    pub fn parents_after<'a>(&'a self, bn: &'a BayesianNetwork, var: VarId) -> &'a [VarId] {
        if self.is_structural() {
            if let Some(ctx) = self.contexts.get(&var) {
                return ctx;
            }
        }
        bn.parents(var)
    }

    pub fn validate(&self, bn: &BayesianNetwork) -> Result<()> {
        for &w in &self.intervenable {
            if w >= bn.num_vars() {
                return Err(BnError::InvalidIntervention(format!("variable index {w} out of range")));
            }
            if bn.is_deterministic(w) {
                return Err(BnError::InvalidIntervention(format!(
                    "prediction node `{}` cannot be intervened on",
                    bn.variable(w).name
                )));
            }
        }
        if self.kind == InterventionKind::Parametric {
            if !self.contexts.is_empty() {
                return Err(BnError::InvalidIntervention("parametric specs carry no contexts".into()));
            }
            return Ok(());
        }
        for (&w, ctx) in &self.contexts {
            if !self.contains(w) {
                return Err(BnError::InvalidIntervention(format!(
                    "context given for non-intervenable `{}`",
                    bn.variable(w).name
                )));
            }
            if ctx.contains(&w) {
                return Err(BnError::Cycle(bn.variable(w).name.clone()));
            }
        }
        let acyclic = topological_order(bn.num_vars(), |v| self.parents_after(bn, v)).is_some();
        if !acyclic {
            let w = self.intervenable.first().copied().unwrap_or(0);
            return Err(BnError::Cycle(bn.variable(w).name.clone()));
        }
        Ok(())
    }

    /// Human-readable form used in reports, e.g. `structural{W:[X]}`.
    pub fn display(&self, bn: &BayesianNetwork) -> String {
        let names = |vs: &[VarId]| {
            vs.iter()
                .map(|&v| bn.variable(v).name.as_str())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self.kind {
            InterventionKind::Parametric => format!("parametric{{{}}}", names(&self.intervenable)),
            InterventionKind::Structural => {
                let parts: Vec<String> = self
                    .intervenable
                    .iter()
                    .map(|&w| format!("{}:[{}]", bn.variable(w).name, names(self.parents_after(bn, w))))
                    .collect();
                format!("structural{{{}}}", parts.join(";"))
            }
        }
    }
}

impl fmt::Display for InterventionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterventionKind::Parametric => f.write_str("parametric"),
            InterventionKind::Structural => f.write_str("structural"),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn chain() -> BayesianNetwork {
        let vars = vec![Variable::new("X", &["0", "1"]), Variable::new("Y", &["0", "1"])];
        let cpts = vec![
            Cpt::dense(0, vec![], vec![vec![0.5, 0.5]]),
            Cpt::dense(1, vec![0], vec![vec![0.8, 0.2], vec![0.4, 0.6]]),
        ];
        BayesianNetwork::new("chain", vars, cpts).unwrap()
    }

    #[test]
    fn joint_probability_of_chain() {
        let bn = chain();
        let p = bn.joint_probability(&Evidence::full(&[0, 0])).unwrap();
        assert!((p - 0.40).abs() < 1e-15);
    }

    #[test]
    fn joint_probability_requires_full_instantiation() {
        let bn = chain();
        let mut ev = Evidence::new();
        ev.insert(&bn, 0, 1).unwrap();
        assert!(matches!(bn.joint_probability(&ev), Err(BnError::MissingAssignment(n)) if n == "Y"));
    }

    #[test]
    fn row_indexing_last_parent_fastest() {
        let vars = vec![
            Variable::new("A", &["a0", "a1"]),
            Variable::new("B", &["b0", "b1", "b2"]),
            Variable::new("C", &["c0", "c1"]),
        ];
        let rows = (0..6).map(|_| vec![0.5, 0.5]).collect();
        let cpts = vec![
            Cpt::dense(0, vec![], vec![vec![0.5, 0.5]]),
            Cpt::dense(1, vec![], vec![vec![0.2, 0.3, 0.5]]),
            Cpt::dense(2, vec![0, 1], rows),
        ];
        let bn = BayesianNetwork::new("t", vars, cpts).unwrap();
        assert_eq!(bn.row_index(2, &[1, 0]), 3);
        assert_eq!(bn.row_index(2, &[0, 2]), 2);
        assert_eq!(bn.row_values(2, 4), vec![1, 1]);
        assert_eq!(bn.row_label(2, 5), "(a1, b2)");
        for idx in 0..bn.num_params() {
            let (v, r, x) = bn.param_location(idx);
            assert_eq!(bn.param_index(v, r, x), idx);
        }
    }

    #[test]
    fn evidence_parsing() {
        let bn = chain();
        let ev = Evidence::parse(&bn, "X=1, Y=0").unwrap();
        assert_eq!(ev.get(0), Some(1));
        assert_eq!(ev.get(1), Some(0));
        assert_eq!(ev.display(&bn), "X=1,Y=0");
        assert!(matches!(Evidence::parse(&bn, "X=1,X=0"), Err(BnError::DuplicateAssignment(_))));
        assert!(matches!(Evidence::parse(&bn, "X=7"), Err(BnError::UnknownValue { .. })));
        assert!(matches!(Evidence::parse(&bn, "Q=1"), Err(BnError::UnknownVariable(_))));
        assert!(Evidence::parse(&bn, "").unwrap().is_empty());
    }

    #[test]
    fn structural_spec_rejects_cycles() {
        let bn = chain();
        // Y already depends on X, so giving X the context {Y} closes a cycle.
        let err = InterventionSpec::structural(&bn, &["X"], &[("X", &["Y"])]).unwrap_err();
        assert!(matches!(err, BnError::Cycle(_)));
        let ok = InterventionSpec::structural(&bn, &["Y"], &[("Y", &[])]).unwrap();
        assert_eq!(ok.parents_after(&bn, 1), &[] as &[usize]);
    }

    #[test]
    fn context_parsing() {
        let (w, ps) = InterventionSpec::parse_context("W:[X, Z]").unwrap();
        assert_eq!(w, "W");
        assert_eq!(ps, vec!["X", "Z"]);
        assert_eq!(InterventionSpec::parse_context("W:[]").unwrap().1.len(), 0);
        assert!(InterventionSpec::parse_context("W[X]").is_err());
    }
}
