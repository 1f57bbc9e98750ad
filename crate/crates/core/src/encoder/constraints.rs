use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EncodeError, Result};
use crate::bn::{BayesianNetwork, InterventionSpec, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingMode {
    None,
    Minimal,
    Topological,
    StructuralTopological,
}

impl fmt::Display for OrderingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderingMode::None => "none",
            OrderingMode::Minimal => "minimal",
            OrderingMode::Topological => "topological",
            OrderingMode::StructuralTopological => "structural_topological",
        })
    }
}

impl FromStr for OrderingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(OrderingMode::None),
            "minimal" => Ok(OrderingMode::Minimal),
            "topological" => Ok(OrderingMode::Topological),
            "structural_topological" => Ok(OrderingMode::StructuralTopological),
            other => Err(format!("unknown ordering mode `{other}`")),
        }
    }
}

/// Pairs `(V_j, V_i)`: no sum node splitting `V_j` may lie below a sum node
/// splitting `V_i`. In elimination terms, every indicator of `V_i` is
/// eliminated before any indicator of `V_j`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingConstraintSet {
    pairs: BTreeSet<(VarId, VarId)>,
}

impl OrderingConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, VarId)>) -> Self {
        OrderingConstraintSet {
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, above: VarId, below: VarId) {
        self.pairs.insert((above, below));
    }

    pub fn contains(&self, above: VarId, below: VarId) -> bool {
        self.pairs.contains(&(above, below))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (VarId, VarId)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// True when every pair of `other` is also in `self`.
    pub fn covers(&self, other: &OrderingConstraintSet) -> bool {
        other.pairs.is_subset(&self.pairs)
    }

    pub fn display(&self, bn: &BayesianNetwork) -> Vec<(String, String)> {
        self.pairs
            .iter()
            .map(|&(a, b)| (bn.variable(a).name.clone(), bn.variable(b).name.clone()))
            .collect()
    }

    /// Variables on a cycle of the constraint graph, if any.
    pub fn find_cycle(&self, num_vars: usize) -> Option<Vec<VarId>> {
        let mut preds: Vec<Vec<VarId>> = vec![Vec::new(); num_vars];
        for &(a, b) in &self.pairs {
            preds[b].push(a);
        }
        match crate::bn::topological_order(num_vars, |v| &preds[v]) {
            Some(_) => None,
            None => {
                // Every variable left with positive in-degree after peeling
                // sources lies on or downstream of a cycle.
                let mut indeg: Vec<usize> = preds.iter().map(Vec::len).collect();
                let mut succ: Vec<Vec<VarId>> = vec![Vec::new(); num_vars];
                for &(a, b) in &self.pairs {
                    succ[a].push(b);
                }
                let mut stack: Vec<VarId> = (0..num_vars).filter(|&v| indeg[v] == 0).collect();
                while let Some(v) = stack.pop() {
                    for &s in &succ[v] {
                        indeg[s] -= 1;
                        if indeg[s] == 0 {
                            stack.push(s);
                        }
                    }
                }
                Some((0..num_vars).filter(|&v| indeg[v] > 0).collect())
            }
        }
    }
}

/// Constraints for a compilation mode. `minimal` and
/// `structural_topological` need a spec; `topological` ignores it.
pub fn ordering_constraints(
    bn: &BayesianNetwork,
    mode: OrderingMode,
    spec: Option<&InterventionSpec>,
) -> Result<OrderingConstraintSet> {
    let mut set = OrderingConstraintSet::new();
    match mode {
        OrderingMode::None => {}
        OrderingMode::Minimal => {
            let spec = spec.ok_or(EncodeError::MissingSpec(mode))?;
            for &w in &spec.intervenable {
                for &p in spec.parents_after(bn, w) {
                    set.insert(p, w);
                }
            }
        }
        OrderingMode::Topological | OrderingMode::StructuralTopological => {
            for v in 0..bn.num_vars() {
                for &p in bn.parents(v) {
                    set.insert(p, v);
                }
            }
            if mode == OrderingMode::StructuralTopological {
                let spec = spec.ok_or(EncodeError::MissingSpec(mode))?;
                for &w in &spec.intervenable {
                    for &c in spec.parents_after(bn, w) {
                        set.insert(c, w);
                    }
                }
            }
        }
    }
    if let Some(cycle) = set.find_cycle(bn.num_vars()) {
        return Err(EncodeError::Infeasible(
            cycle.iter().map(|&v| bn.variable(v).name.clone()).collect(),
        ));
    }
    Ok(set)
}
