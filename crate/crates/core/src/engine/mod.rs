//! Evaluation of arithmetic circuits: marginals, parameter derivatives and
//! the max-at-intervened-splits upper bound.
//!
//! Every call allocates its own buffers; circuits are never mutated, so one
//! circuit can serve concurrent queries.

use crate::bn::{BayesianNetwork, Evidence, InterventionSpec, VarId};
use crate::encoder::{ordering_constraints, EncodeError, OrderingMode};
use crate::kc::{check_ordering, AcNode, ArithmeticCircuit};

/// Sum nodes with more children than this use compensated summation.
pub const COMPENSATION_FAN_IN: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("evidence refers to variable {var} value {value}, which the circuit does not have")]
    UnknownEvidence { var: VarId, value: usize },
    #[error("{found} parameter values given, circuit has {expected}")]
    ParamCount { expected: usize, found: usize },
    #[error("circuit violates ordering constraints {violations:?}; the bound would be unsound")]
    OrderingViolated { violations: Vec<(String, String)> },
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

pub type Result<T> = std::result::Result<T, EngineError>;

/// One value per parameter leaf, in the network's global parameter layout.
/// Rows need not sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterAssignment(Vec<f64>);

impl ParameterAssignment {
    pub fn from_network(bn: &BayesianNetwork) -> Self {
        ParameterAssignment(bn.parameters())
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        ParameterAssignment(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Overwrites row `row` of `var`'s CPT.
    pub fn set_row(&mut self, bn: &BayesianNetwork, var: VarId, row: usize, dist: &[f64]) {
        let start = bn.param_index(var, row, 0);
        self.0[start..start + dist.len()].copy_from_slice(dist);
    }
}

/// Root value plus the value of every node.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub node_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub value: f64,
    /// `∂p(e)/∂θ` indexed by global parameter index.
    pub partials: Vec<f64>,
}

fn dense_evidence(ac: &ArithmeticCircuit, evidence: &Evidence) -> Result<Vec<Option<usize>>> {
    let cards = ac.cardinalities();
    let mut out = vec![None; cards.len()];
    for (var, value) in evidence.iter() {
        if var >= cards.len() || value >= cards[var] {
            return Err(EngineError::UnknownEvidence { var, value });
        }
        out[var] = Some(value);
    }
    Ok(out)
}

fn check_params(ac: &ArithmeticCircuit, params: &ParameterAssignment) -> Result<()> {
    if params.len() != ac.num_params() {
        return Err(EngineError::ParamCount {
            expected: ac.num_params(),
            found: params.len(),
        });
    }
    Ok(())
}

#[inline]
fn indicator(ev: &[Option<usize>], var: VarId, value: usize) -> f64 {
    match ev[var] {
        Some(x) if x != value => 0.0,
        _ => 1.0,
    }
}

fn add_children(vals: &[f64], children: &[u32]) -> f64 {
    if children.len() <= COMPENSATION_FAN_IN {
        return children.iter().fold(0.0, |acc, &c| acc + vals[c as usize]);
    }
    // Neumaier's variant of Kahan summation.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &c in children {
        let x = vals[c as usize];
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Bottom-up pass. Sums splitting a variable in `max_at` take the maximum
/// (first child on ties); parameter leaves of variables in `unit_params`
/// evaluate to one.
fn forward(ac: &ArithmeticCircuit, ev: &[Option<usize>], params: &[f64], max_at: &[bool], unit_params: &[bool]) -> Vec<f64> {
    let mut vals = Vec::with_capacity(ac.nodes().len());
    for node in ac.nodes() {
        let v = match node {
            AcNode::Indicator { var, value } => indicator(ev, *var, *value),
            AcNode::Parameter { index, var } => {
                if unit_params[*var] {
                    1.0
                } else {
                    params[*index]
                }
            }
            AcNode::One => 1.0,
            AcNode::Zero => 0.0,
            AcNode::Product(c) => c.iter().fold(1.0, |acc, &k| acc * vals[k as usize]),
            AcNode::Sum { children, split } => match split {
                Some(s) if max_at[*s] => {
                    let mut best = vals[children[0] as usize];
                    for &k in &children[1..] {
                        if vals[k as usize] > best {
                            best = vals[k as usize];
                        }
                    }
                    best
                }
                _ => add_children(&vals, children),
            },
        };
        vals.push(v);
    }
    vals
}

fn log_forward(ac: &ArithmeticCircuit, ev: &[Option<usize>], params: &[f64]) -> Vec<f64> {
    let mut vals: Vec<f64> = Vec::with_capacity(ac.nodes().len());
    for node in ac.nodes() {
        let v = match node {
            AcNode::Indicator { var, value } => indicator(ev, *var, *value).ln(),
            AcNode::Parameter { index, .. } => params[*index].ln(),
            AcNode::One => 0.0,
            AcNode::Zero => f64::NEG_INFINITY,
            AcNode::Product(c) => c.iter().map(|&k| vals[k as usize]).sum(),
            AcNode::Sum { children, .. } => log_sum_exp(children.iter().map(|&k| vals[k as usize])),
        };
        vals.push(v);
    }
    vals
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[inline]
fn underflowed(x: f64) -> bool {
    x < f64::MIN_POSITIVE
}

/// The log domain only represents nonnegative parameters; outside it the
/// linear pass is used as is.
fn log_domain_ok(value: f64, params: &[f64]) -> bool {
    value >= 0.0 && underflowed(value) && params.iter().all(|&p| p >= 0.0)
}

/// `p(e)` under `params`. A root value that underflows to a subnormal or zero
/// is recomputed in the log domain.
pub fn evaluate(ac: &ArithmeticCircuit, evidence: &Evidence, params: &ParameterAssignment) -> Result<f64> {
    Ok(evaluate_nodes(ac, evidence, params)?.value)
}

/// [`evaluate`], keeping every node's value.
pub fn evaluate_nodes(ac: &ArithmeticCircuit, evidence: &Evidence, params: &ParameterAssignment) -> Result<Evaluation> {
    check_params(ac, params)?;
    let ev = dense_evidence(ac, evidence)?;
    let off = vec![false; ac.cardinalities().len()];
    let node_values = forward(ac, &ev, params.values(), &off, &off);
    let mut value = node_values[ac.root() as usize];
    if log_domain_ok(value, params.values()) {
        let lv = log_forward(ac, &ev, params.values())[ac.root() as usize];
        value = lv.exp();
    }
    Ok(Evaluation { value, node_values })
}

/// `ln p(e)`, computed entirely in the log domain.
pub fn log_evaluate(ac: &ArithmeticCircuit, evidence: &Evidence, params: &ParameterAssignment) -> Result<f64> {
    check_params(ac, params)?;
    let ev = dense_evidence(ac, evidence)?;
    Ok(log_forward(ac, &ev, params.values())[ac.root() as usize])
}

/// `p(e)` and all `∂p(e)/∂θ` by one upward and one downward pass. Product
/// nodes pass sibling products computed from prefix and suffix products, so
/// zero-valued siblings need no division.
pub fn gradients(ac: &ArithmeticCircuit, evidence: &Evidence, params: &ParameterAssignment) -> Result<Gradients> {
    check_params(ac, params)?;
    let ev = dense_evidence(ac, evidence)?;
    let off = vec![false; ac.cardinalities().len()];
    let vals = forward(ac, &ev, params.values(), &off, &off);
    let value = vals[ac.root() as usize];
    if log_domain_ok(value, params.values()) && (value > 0.0 || any_underflow(&vals)) {
        return Ok(log_gradients(ac, &ev, params.values()));
    }
    let mut d = vec![0.0; vals.len()];
    d[ac.root() as usize] = 1.0;
    let mut scratch = Vec::new();
    for i in (0..ac.nodes().len()).rev() {
        let di = d[i];
        if di == 0.0 {
            continue;
        }
        match &ac.nodes()[i] {
            AcNode::Sum { children, .. } => children.iter().for_each(|&c| d[c as usize] += di),
            AcNode::Product(children) => {
                // scratch[j] = product of children after j.
                scratch.clear();
                scratch.resize(children.len() + 1, 1.0);
                for j in (0..children.len()).rev() {
                    scratch[j] = scratch[j + 1] * vals[children[j] as usize];
                }
                let mut prefix = 1.0;
                for (j, &c) in children.iter().enumerate() {
                    d[c as usize] += di * prefix * scratch[j + 1];
                    prefix *= vals[c as usize];
                }
            }
            _ => {}
        }
    }
    let mut partials = vec![0.0; ac.num_params()];
    for (i, node) in ac.nodes().iter().enumerate() {
        if let AcNode::Parameter { index, .. } = node {
            partials[*index] += d[i];
        }
    }
    Ok(Gradients { value, partials })
}

/// True when some nonzero-input product collapsed to zero, so that a zero
/// root may be an underflow artifact.
fn any_underflow(vals: &[f64]) -> bool {
    vals.iter().any(|&v| v > 0.0 && underflowed(v))
}

fn log_gradients(ac: &ArithmeticCircuit, ev: &[Option<usize>], params: &[f64]) -> Gradients {
    let lv = log_forward(ac, ev, params);
    let ninf = f64::NEG_INFINITY;
    let mut ld = vec![ninf; lv.len()];
    ld[ac.root() as usize] = 0.0;
    let mut scratch = Vec::new();
    for i in (0..ac.nodes().len()).rev() {
        let di = ld[i];
        if di == ninf {
            continue;
        }
        match &ac.nodes()[i] {
            AcNode::Sum { children, .. } => {
                for &c in children {
                    ld[c as usize] = log_add(ld[c as usize], di);
                }
            }
            AcNode::Product(children) => {
                scratch.clear();
                scratch.resize(children.len() + 1, 0.0);
                for j in (0..children.len()).rev() {
                    scratch[j] = scratch[j + 1] + lv[children[j] as usize];
                }
                let mut prefix = 0.0;
                for (j, &c) in children.iter().enumerate() {
                    ld[c as usize] = log_add(ld[c as usize], di + prefix + scratch[j + 1]);
                    prefix += lv[c as usize];
                }
            }
            _ => {}
        }
    }
    let mut partials = vec![ninf; ac.num_params()];
    for (i, node) in ac.nodes().iter().enumerate() {
        if let AcNode::Parameter { index, .. } = node {
            partials[*index] = log_add(partials[*index], ld[i]);
        }
    }
    Gradients {
        value: lv[ac.root() as usize].exp(),
        partials: partials.into_iter().map(f64::exp).collect(),
    }
}

/// Upper bound on `max p(e)` over the interventions of `spec`: parameters of
/// intervened variables become one and sums splitting them take the maximum.
/// `bn` is the network the circuit was compiled from; the circuit must
/// satisfy the minimal ordering constraints of `spec`, or the call fails.
pub fn upper_bound(ac: &ArithmeticCircuit, bn: &BayesianNetwork, evidence: &Evidence, spec: &InterventionSpec) -> Result<f64> {
    upper_bound_with(ac, bn, evidence, spec, &ParameterAssignment::from_network(bn))
}

/// [`upper_bound`] with explicit values for the non-intervened parameters.
pub fn upper_bound_with(
    ac: &ArithmeticCircuit,
    bn: &BayesianNetwork,
    evidence: &Evidence,
    spec: &InterventionSpec,
    params: &ParameterAssignment,
) -> Result<f64> {
    check_params(ac, params)?;
    let ev = dense_evidence(ac, evidence)?;
    let n = ac.cardinalities().len();
    let mut w = vec![false; n];
    if !spec.is_empty() {
        let constraints = ordering_constraints(bn, OrderingMode::Minimal, Some(spec))?;
        let report = check_ordering(ac, &constraints);
        if !report.passed() {
            return Err(EngineError::OrderingViolated {
                violations: report
                    .violations
                    .iter()
                    .map(|v| (bn.variable(v.above).name.clone(), bn.variable(v.below).name.clone()))
                    .collect(),
            });
        }
        for &v in &spec.intervenable {
            w[v] = true;
        }
    }
    Ok(forward(ac, &ev, params.values(), &w, &w)[ac.root() as usize])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single() -> ArithmeticCircuit {
        // λx·θx + λx̄·θx̄
        let nodes = vec![
            AcNode::Indicator { var: 0, value: 0 },
            AcNode::Parameter { index: 0, var: 0 },
            AcNode::Indicator { var: 0, value: 1 },
            AcNode::Parameter { index: 1, var: 0 },
            AcNode::Product(vec![0, 1]),
            AcNode::Product(vec![2, 3]),
            AcNode::Sum {
                children: vec![4, 5],
                split: Some(0),
            },
        ];
        ArithmeticCircuit::from_parts(nodes, 6, vec![2], 2).unwrap()
    }

    #[test]
    fn evaluate_and_gradient_of_a_root() {
        let ac = single();
        let p = ParameterAssignment::from_vec(vec![0.3, 0.7]);
        assert_eq!(evaluate(&ac, &Evidence::new(), &p).unwrap(), 1.0);
        let ev = Evidence::full(&[0]);
        assert_eq!(evaluate(&ac, &ev, &p).unwrap(), 0.3);
        let g = gradients(&ac, &ev, &p).unwrap();
        assert_eq!(g.partials, vec![1.0, 0.0]);
        assert!(matches!(
            evaluate(&ac, &Evidence::full(&[5]), &p),
            Err(EngineError::UnknownEvidence { var: 0, value: 5 })
        ));
        assert!(matches!(
            evaluate(&ac, &ev, &ParameterAssignment::from_vec(vec![1.0])),
            Err(EngineError::ParamCount { .. })
        ));
    }

    #[test]
    fn underflow_falls_back_to_logs() {
        let ac = single();
        let p = ParameterAssignment::from_vec(vec![1e-320, 0.0]);
        let ev = Evidence::full(&[0]);
        assert!(evaluate(&ac, &ev, &p).unwrap() > 0.0);
        assert!((log_evaluate(&ac, &ev, &p).unwrap() - 1e-320f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn negative_parameters_stay_linear() {
        let ac = single();
        let p = ParameterAssignment::from_vec(vec![-0.2, 0.7]);
        assert_eq!(evaluate(&ac, &Evidence::full(&[0]), &p).unwrap(), -0.2);
        assert_eq!(gradients(&ac, &Evidence::full(&[0]), &p).unwrap().partials, vec![1.0, 0.0]);
    }

    #[test]
    fn compensated_sum_is_accurate() {
        let vals = vec![1.0, 1e-16, 1e-16, 1e-16, 1e-16, 1e-16, 1e-16, 1e-16, 1e-16, 1e-16];
        let ids: Vec<u32> = (0..10).collect();
        assert_eq!(vals.iter().sum::<f64>(), 1.0);
        assert!(add_children(&vals, &ids) > 1.0);
    }
}
