use std::sync::{Arc, OnceLock};

use super::{BayesianNetwork, BnError, Cpt, CptTable, DeterministicCpt, InputBinding, Result, VarId, Variable};
use crate::classifier::BooleanCircuit;

/// Parent spaces up to this size are checked for functionality on `augment`.
const EAGER_CHECK_ROWS: usize = 1 << 20;

impl BayesianNetwork {
    /// Adds the prediction node `target` whose parents are the features read by
    /// `circuit` and whose CPT is `1[ŷ = F(x)]`. The domain of the new node is
    /// the list of its values in the order the circuit first mentions them.
    pub fn augment(&self, circuit: Arc<BooleanCircuit>, target: &str) -> Result<BayesianNetwork> {
        if self.var_id(target).is_some() {
            return Err(BnError::NameCollision(target.to_string()));
        }
        let target_values = circuit.values_of(target);
        if target_values.is_empty() {
            return Err(BnError::InvalidIntervention(format!(
                "circuit has no indicator for prediction `{target}`"
            )));
        }
        let mut parents: Vec<VarId> = Vec::new();
        for ind in circuit.inputs() {
            if ind.variable == target {
                continue;
            }
            let v = self.require_var(&ind.variable)?;
            self.value_index(v, &ind.value)?;
            if !parents.contains(&v) {
                parents.push(v);
            }
        }
        parents.sort_unstable();
        let bindings = circuit
            .inputs()
            .iter()
            .map(|ind| {
                if ind.variable == target {
                    let value = target_values.iter().position(|t| *t == ind.value).unwrap();
                    InputBinding::Target { value }
                } else {
                    let v = self.var_id(&ind.variable).unwrap();
                    InputBinding::Parent {
                        position: parents.iter().position(|&p| p == v).unwrap(),
                        value: self.value_index(v, &ind.value).unwrap(),
                    }
                }
            })
            .collect();
        let id = self.num_vars();
        let mut variables = self.variables.clone();
        variables.push(Variable {
            name: target.to_string(),
            values: target_values,
        });
        let mut cpts = self.cpts.clone();
        cpts.push(Cpt {
            child: id,
            parents,
            table: CptTable::Deterministic(DeterministicCpt {
                circuit,
                bindings,
                decisions: OnceLock::new(),
            }),
        });
        let out = BayesianNetwork::from_parts_unchecked(self.name.clone(), variables, cpts);
        let rows = out.num_rows(id);
        if rows <= EAGER_CHECK_ROWS {
            let CptTable::Deterministic(det) = &out.cpt(id).table else {
                unreachable!()
            };
            for row in 0..rows {
                decide_row(&out, det, id, row)?;
            }
        }
        Ok(out)
    }

    /// Computes (once) and returns the decision of the prediction node `id` for
    /// every parent row.
    pub fn decisions(&self, id: VarId) -> Result<&[u32]> {
        let CptTable::Deterministic(det) = &self.cpt(id).table else {
            return Err(BnError::InvalidIntervention(format!(
                "`{}` is not a prediction node",
                self.variable(id).name
            )));
        };
        if let Some(d) = det.decisions.get() {
            return Ok(d);
        }
        let table = (0..self.num_rows(id))
            .map(|r| decide_row(self, det, id, r).map(|d| d as u32))
            .collect::<Result<Vec<_>>>()?;
        Ok(det.decisions.get_or_init(|| table))
    }
}

/// Explicit `|rows| × |dom(Ŷ)|` table of a deterministic CPT. Intended for
/// oracle tests on small feature spaces.
pub fn materialize_deterministic(bn: &BayesianNetwork, id: VarId) -> Result<Vec<Vec<f64>>> {
    let decisions = bn.decisions(id)?;
    let card = bn.cardinality(id);
    Ok(decisions
        .iter()
        .map(|&d| (0..card).map(|v| if v == d as usize { 1.0 } else { 0.0 }).collect())
        .collect())
}

pub(crate) fn decide_row(bn: &BayesianNetwork, det: &DeterministicCpt, id: VarId, row: usize) -> Result<usize> {
    let parent_values = bn.row_values(id, row);
    let mut inputs = vec![false; det.bindings.len()];
    let mut found = None;
    let mut satisfied = 0;
    for y in 0..bn.cardinality(id) {
        for (slot, b) in inputs.iter_mut().zip(&det.bindings) {
            *slot = match *b {
                InputBinding::Parent { position, value } => parent_values[position] == value,
                InputBinding::Target { value } => value == y,
            };
        }
        if det.circuit.eval(&inputs) {
            satisfied += 1;
            found.get_or_insert(y);
        }
    }
    match (satisfied, found) {
        (1, Some(y)) => Ok(y),
        _ => Err(BnError::NonFunctional { row, satisfied }),
    }
}
