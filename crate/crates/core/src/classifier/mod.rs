//! Decision functions as Boolean circuits over indicator inputs.
//!
//! A decision circuit is true on `(x, ŷ)` exactly when `ŷ = F(x)`. Inputs are
//! indicators `Var=value`; the circuits produced by the builders here also
//! enforce that every feature and the prediction take exactly one value, so
//! the satisfying input assignments are precisely the pairs `(x, F(x))`.

mod naive_bayes;
mod netlist;
mod tabulate;
mod tseitin;

use std::collections::HashMap;
use std::fmt;

pub use naive_bayes::{nb_to_circuit, NaiveBayesModel};
pub use netlist::{parse_circuit, write_circuit};
pub use tabulate::tabulate_to_circuit;
pub use tseitin::tseitin;

#[derive(Debug, thiserror::Error)]
pub enum CircuitError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: operand `{operand}` is not declared before use")]
    ForwardReference { line: usize, operand: String },
    #[error("line {line}: `{text}` is not a `Var=value` indicator")]
    UnknownIndicator { line: usize, text: String },
    #[error("line {line}: second OUT declaration")]
    MultipleOutputs { line: usize },
    #[error("netlist has no OUT declaration")]
    MissingOutput,
    #[error("indicator `{0}` declared twice")]
    DuplicateInput(String),
    #[error("{satisfied} predictions satisfy the circuit on the given features")]
    NonFunctional { satisfied: usize },
    #[error("decision table has no entry for feature values {0:?}")]
    PartialTable(Vec<String>),
    #[error("naive Bayes target must be binary, `{0}` has {1} values")]
    NonBinaryTarget(String, usize),
    #[error("classifier needs at least one feature")]
    EmptyFeatures,
    #[error("feature `{0}` is not assigned")]
    MissingAssignment(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

pub type Result<T> = std::result::Result<T, CircuitError>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Indicator {
    pub variable: String,
    pub value: String,
}

impl Indicator {
    pub fn new(variable: impl Into<String>, value: impl Into<String>) -> Self {
        Indicator {
            variable: variable.into(),
            value: value.into(),
        }
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.variable, self.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operand {
    Input(usize),
    Gate(usize),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Input(i) => write!(f, "I{i}"),
            Operand::Gate(g) => write!(f, "G{g}"),
        }
    }
}

/// An empty AND is true and an empty OR is false.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Gate {
    And(Vec<Operand>),
    Or(Vec<Operand>),
    Not(Operand),
}

impl Gate {
    pub fn operands(&self) -> &[Operand] {
        match self {
            Gate::And(ops) | Gate::Or(ops) => ops,
            Gate::Not(op) => std::slice::from_ref(op),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanCircuit {
    inputs: Vec<Indicator>,
    gates: Vec<Gate>,
    output: Operand,
}

impl BooleanCircuit {
    /// Checks that operands point backward and inputs are unique.
    pub fn new(inputs: Vec<Indicator>, gates: Vec<Gate>, output: Operand) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for ind in &inputs {
            if !seen.insert(ind) {
                return Err(CircuitError::DuplicateInput(ind.to_string()));
            }
        }
        let ok = |op: &Operand, limit: usize| match *op {
            Operand::Input(i) => i < inputs.len(),
            Operand::Gate(g) => g < limit,
        };
        for (k, gate) in gates.iter().enumerate() {
            if let Some(op) = gate.operands().iter().find(|op| !ok(op, k)) {
                return Err(CircuitError::ForwardReference {
                    line: k + 1,
                    operand: op.to_string(),
                });
            }
        }
        if !ok(&output, gates.len()) {
            return Err(CircuitError::ForwardReference {
                line: gates.len() + 1,
                operand: output.to_string(),
            });
        }
        Ok(BooleanCircuit { inputs, gates, output })
    }

    pub fn inputs(&self) -> &[Indicator] {
        &self.inputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output(&self) -> Operand {
        self.output
    }

    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    /// Values of `variable` mentioned by the inputs, in order of appearance.
    pub fn values_of(&self, variable: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for ind in &self.inputs {
            if ind.variable == variable && !out.contains(&ind.value) {
                out.push(ind.value.clone());
            }
        }
        out
    }

    /// Variables mentioned by the inputs other than `target`, in order of
    /// first appearance.
    pub fn feature_names(&self, target: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for ind in &self.inputs {
            if ind.variable != target && !out.contains(&ind.variable) {
                out.push(ind.variable.clone());
            }
        }
        out
    }

    pub fn input_index(&self, variable: &str, value: &str) -> Option<usize> {
        self.inputs
            .iter()
            .position(|i| i.variable == variable && i.value == value)
    }

    /// Evaluates the circuit on a truth assignment to its inputs.
    pub fn eval(&self, inputs: &[bool]) -> bool {
        let mut vals = vec![false; self.gates.len()];
        let get = |vals: &[bool], op: &Operand| match *op {
            Operand::Input(i) => inputs[i],
            Operand::Gate(g) => vals[g],
        };
        for (k, gate) in self.gates.iter().enumerate() {
            vals[k] = match gate {
                Gate::And(ops) => ops.iter().all(|op| get(&vals, op)),
                Gate::Or(ops) => ops.iter().any(|op| get(&vals, op)),
                Gate::Not(op) => !get(&vals, op),
            };
        }
        get(&vals, &self.output)
    }

    /// The unique prediction for a feature assignment given as `Var -> value`.
    pub fn predict(&self, target: &str, features: &HashMap<String, String>) -> Result<String> {
        let mut inputs = vec![false; self.inputs.len()];
        for (slot, ind) in inputs.iter_mut().zip(&self.inputs) {
            if ind.variable != target {
                let v = features
                    .get(&ind.variable)
                    .ok_or_else(|| CircuitError::MissingAssignment(ind.variable.clone()))?;
                *slot = *v == ind.value;
            }
        }
        let mut hits = Vec::new();
        for y in self.values_of(target) {
            for (slot, ind) in inputs.iter_mut().zip(&self.inputs) {
                if ind.variable == target {
                    *slot = ind.value == y;
                }
            }
            if self.eval(&inputs) {
                hits.push(y);
            }
        }
        if hits.len() == 1 {
            Ok(hits.pop().unwrap())
        } else {
            Err(CircuitError::NonFunctional { satisfied: hits.len() })
        }
    }
}

/// Free-function form of [`BooleanCircuit::predict`].
pub fn eval_circuit(circuit: &BooleanCircuit, target: &str, features: &HashMap<String, String>) -> Result<String> {
    circuit.predict(target, features)
}

/// Incremental circuit construction with structural hashing and constant
/// folding. Constants are represented by the gates `AND()` and `OR()`.
#[derive(Debug, Default)]
pub struct CircuitBuilder {
    inputs: Vec<Indicator>,
    input_index: HashMap<Indicator, usize>,
    gates: Vec<Gate>,
    gate_index: HashMap<Gate, usize>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn input(&mut self, variable: &str, value: &str) -> Operand {
        let ind = Indicator::new(variable, value);
        if let Some(&i) = self.input_index.get(&ind) {
            return Operand::Input(i);
        }
        let i = self.inputs.len();
        self.inputs.push(ind.clone());
        self.input_index.insert(ind, i);
        Operand::Input(i)
    }

    fn gate(&mut self, gate: Gate) -> Operand {
        if let Some(&g) = self.gate_index.get(&gate) {
            return Operand::Gate(g);
        }
        let g = self.gates.len();
        self.gates.push(gate.clone());
        self.gate_index.insert(gate, g);
        Operand::Gate(g)
    }

    pub fn constant(&mut self, value: bool) -> Operand {
        if value {
            self.gate(Gate::And(Vec::new()))
        } else {
            self.gate(Gate::Or(Vec::new()))
        }
    }

    fn as_constant(&self, op: Operand) -> Option<bool> {
        match op {
            Operand::Gate(g) => match &self.gates[g] {
                Gate::And(v) if v.is_empty() => Some(true),
                Gate::Or(v) if v.is_empty() => Some(false),
                _ => None,
            },
            Operand::Input(_) => None,
        }
    }

    pub fn and(&mut self, ops: Vec<Operand>) -> Operand {
        self.nary(ops, true)
    }

    pub fn or(&mut self, ops: Vec<Operand>) -> Operand {
        self.nary(ops, false)
    }

    fn nary(&mut self, ops: Vec<Operand>, is_and: bool) -> Operand {
        // For AND the absorbing constant is false; for OR it is true.
        let absorbing = !is_and;
        let mut kept = Vec::with_capacity(ops.len());
        for op in ops {
            match self.as_constant(op) {
                Some(c) if c == absorbing => return self.constant(absorbing),
                Some(_) => {}
                None => {
                    if !kept.contains(&op) {
                        kept.push(op);
                    }
                }
            }
        }
        match kept.len() {
            0 => self.constant(is_and),
            1 => kept[0],
            _ => {
                kept.sort_unstable();
                self.gate(if is_and { Gate::And(kept) } else { Gate::Or(kept) })
            }
        }
    }

    pub fn not(&mut self, op: Operand) -> Operand {
        if let Some(c) = self.as_constant(op) {
            return self.constant(!c);
        }
        if let Operand::Gate(g) = op {
            if let Gate::Not(inner) = self.gates[g] {
                return inner;
            }
        }
        self.gate(Gate::Not(op))
    }

    /// `λ_1 ∨ … ∨ λ_k` together with pairwise exclusion.
    pub fn exactly_one(&mut self, variable: &str, values: &[&str]) -> Operand {
        let lits: Vec<Operand> = values.iter().map(|v| self.input(variable, v)).collect();
        let alo = self.or(lits.clone());
        let mut pairs = Vec::new();
        for i in 0..lits.len() {
            for j in i + 1..lits.len() {
                pairs.push(self.and(vec![lits[i], lits[j]]));
            }
        }
        let any_pair = self.or(pairs);
        let amo = self.not(any_pair);
        self.and(vec![alo, amo])
    }

    /// Finishes a binary decision circuit: the prediction takes
    /// `target_values[1]` where `f` holds and `target_values[0]` elsewhere.
    pub fn decision(mut self, features: &[(&str, &[&str])], target: &str, target_values: &[&str], f: Operand) -> BooleanCircuit {
        assert_eq!(target_values.len(), 2, "binary decision needs two prediction values");
        let not_f = self.not(f);
        self.decision_multi(features, target, target_values, vec![not_f, f])
    }

    /// Finishes a multi-class decision circuit. `class_fns[k]` must hold
    /// exactly when the prediction is `target_values[k]`, for every
    /// consistent feature assignment.
    pub fn decision_multi(
        mut self,
        features: &[(&str, &[&str])],
        target: &str,
        target_values: &[&str],
        class_fns: Vec<Operand>,
    ) -> BooleanCircuit {
        // Register prediction indicators in domain order first so that the
        // augmented node's value order follows `target_values`.
        let ys: Vec<Operand> = target_values.iter().map(|v| self.input(target, v)).collect();
        let mut parts = Vec::new();
        for (name, values) in features {
            parts.push(self.exactly_one(name, values));
        }
        parts.push(self.exactly_one(target, target_values));
        let terms: Vec<Operand> = ys
            .iter()
            .zip(class_fns)
            .map(|(&y, f)| self.and(vec![y, f]))
            .collect();
        let link = self.or(terms);
        parts.push(link);
        let out = self.and(parts);
        self.finish(out)
    }

    /// Builds the circuit rooted at `output`, dropping unreachable gates.
    /// All declared inputs are kept.
    pub fn finish(self, output: Operand) -> BooleanCircuit {
        let mut reachable = vec![false; self.gates.len()];
        if let Operand::Gate(g) = output {
            reachable[g] = true;
        }
        for k in (0..self.gates.len()).rev() {
            if reachable[k] {
                for op in self.gates[k].operands() {
                    if let Operand::Gate(h) = *op {
                        reachable[h] = true;
                    }
                }
            }
        }
        let mut remap = vec![usize::MAX; self.gates.len()];
        let mut gates = Vec::new();
        let map_op = |op: Operand, remap: &[usize]| match op {
            Operand::Gate(g) => Operand::Gate(remap[g]),
            i => i,
        };
        for (k, gate) in self.gates.iter().enumerate() {
            if !reachable[k] {
                continue;
            }
            remap[k] = gates.len();
            gates.push(match gate {
                Gate::And(ops) => Gate::And(ops.iter().map(|&o| map_op(o, &remap)).collect()),
                Gate::Or(ops) => Gate::Or(ops.iter().map(|&o| map_op(o, &remap)).collect()),
                Gate::Not(o) => Gate::Not(map_op(*o, &remap)),
            });
        }
        let output = map_op(output, &remap);
        BooleanCircuit::new(self.inputs, gates, output).expect("builder output is well formed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assignment(pairs: &[(&str, &str)]) -> HashMap<String, String> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn or_decision_circuit_is_functional() {
        let mut b = CircuitBuilder::new();
        let x = b.input("X", "1");
        let w = b.input("W", "1");
        let f = b.or(vec![x, w]);
        let c = b.decision(&[("X", &["0", "1"]), ("W", &["0", "1"])], "Yhat", &["0", "1"], f);
        assert_eq!(c.values_of("Yhat"), vec!["0", "1"]);
        assert_eq!(c.feature_names("Yhat"), vec!["X", "W"]);
        for (x, w, y) in [("0", "0", "0"), ("0", "1", "1"), ("1", "0", "1"), ("1", "1", "1")] {
            assert_eq!(c.predict("Yhat", &assignment(&[("X", x), ("W", w)])).unwrap(), y);
        }
    }

    #[test]
    fn builder_folds_constants() {
        let mut b = CircuitBuilder::new();
        let x = b.input("X", "1");
        let t = b.constant(true);
        let f = b.constant(false);
        assert_eq!(b.and(vec![x, t]), x);
        assert_eq!(b.and(vec![x, f]), f);
        assert_eq!(b.or(vec![x, t]), t);
        let nx = b.not(x);
        assert_eq!(b.not(nx), x);
        assert_eq!(b.not(t), f);
    }

    #[test]
    fn non_functional_circuit_is_reported() {
        // True everywhere: both predictions satisfy it.
        let mut b = CircuitBuilder::new();
        b.input("Yhat", "0");
        b.input("Yhat", "1");
        b.input("X", "1");
        let t = b.constant(true);
        let c = b.finish(t);
        let err = c.predict("Yhat", &assignment(&[("X", "1")])).unwrap_err();
        assert!(matches!(err, CircuitError::NonFunctional { satisfied: 2 }));
    }

    #[test]
    fn rejects_forward_references() {
        let err = BooleanCircuit::new(
            vec![Indicator::new("X", "1")],
            vec![Gate::Not(Operand::Gate(0))],
            Operand::Gate(0),
        )
        .unwrap_err();
        assert!(matches!(err, CircuitError::ForwardReference { .. }));
    }
}
