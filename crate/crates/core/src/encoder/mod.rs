//! CNF encoding of networks and classifiers, ordering constraints,
//! constrained elimination orders and dtrees.

mod bitset;
mod cnf;
mod constraints;
mod dtree;
mod order;

use crate::bn::{BayesianNetwork, BnError, CptTable};

pub(crate) use bitset::BitSet;
pub use cnf::{CnfFormula, Lit, Role, Symbol, VarMap};
pub use constraints::{ordering_constraints, OrderingConstraintSet, OrderingMode};
pub use dtree::{build_dtree, Dtree, DtreeNode};
pub use order::{constrained_minfill, order_width};

#[derive(Debug, thiserror::Error)]
pub enum EncodeError {
    #[error("DIMACS line {line}: {message}")]
    Dimacs { line: usize, message: String },
    #[error("symbol mismatch: {0}")]
    TagMismatch(String),
    #[error("classifier shares no feature indicators with the network")]
    Disjoint,
    #[error("classifier introduces more than one new variable: {0:?}")]
    MultipleNewVariables(Vec<String>),
    #[error("ordering constraints are cyclic through {0:?}")]
    Infeasible(Vec<String>),
    #[error("ordering mode `{0}` needs an intervention spec")]
    MissingSpec(OrderingMode),
    #[error(transparent)]
    Bn(#[from] BnError),
}

pub type Result<T> = std::result::Result<T, EncodeError>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EncodeOptions {
    /// Emit only `λ_v ∧ λ_u ⇒ θ_{v|u}` for each parameter.
    pub drop_reverse: bool,
}

/// Indicator and parameter clauses of every non-deterministic variable.
/// CNF variables are numbered with all indicators first (network order), then
/// all parameters in the global parameter layout.
pub fn encode_bn(bn: &BayesianNetwork, options: EncodeOptions) -> (CnfFormula, VarMap) {
    let mut map = VarMap::new();
    let mut ind = vec![Vec::new(); bn.num_vars()];
    for v in 0..bn.num_vars() {
        if bn.is_deterministic(v) {
            continue;
        }
        let var = bn.variable(v);
        for value in &var.values {
            ind[v].push(map.push(Symbol::indicator(&var.name, value)) as Lit);
        }
    }
    let mut params = Vec::new();
    for v in 0..bn.num_vars() {
        let CptTable::Dense(rows) = &bn.cpt(v).table else {
            continue;
        };
        for (r, row) in rows.iter().enumerate() {
            for x in 0..row.len() {
                let p = map.push(Symbol::Parameter {
                    child: bn.variable(v).name.clone(),
                    row: r,
                    value: x,
                }) as Lit;
                params.push((v, r, x, p));
            }
        }
    }
    let mut cnf = CnfFormula::new(map.len() as u32);
    for lits in ind.iter().filter(|l| !l.is_empty()) {
        cnf.add_clause(lits.clone());
        for i in 0..lits.len() {
            for j in i + 1..lits.len() {
                cnf.add_clause(vec![-lits[i], -lits[j]]);
            }
        }
    }
    for (v, r, x, p) in params {
        let parents = bn.parents(v);
        let pvals = bn.row_values(v, r);
        let mut body = vec![ind[v][x]];
        body.extend(parents.iter().zip(&pvals).map(|(&u, &val)| ind[u][val]));
        let mut forward: Vec<Lit> = body.iter().map(|l| -l).collect();
        forward.push(p);
        cnf.add_clause(forward);
        if !options.drop_reverse {
            for l in body {
                cnf.add_clause(vec![-p, l]);
            }
        }
    }
    (cnf, map)
}

/// Conjoins a network CNF with a classifier CNF. Shared variables are the
/// feature indicators; the classifier may add indicators of exactly one new
/// variable (the prediction) plus its intermediates.
pub fn join(cnf_bn: &CnfFormula, map_bn: &VarMap, cnf_f: &CnfFormula, map_f: &VarMap) -> Result<(CnfFormula, VarMap)> {
    let bn_vars: std::collections::HashSet<&str> = map_bn
        .symbols()
        .iter()
        .filter_map(|s| match s {
            Symbol::Indicator { variable, .. } => Some(variable.as_str()),
            _ => None,
        })
        .collect();
    let mut map = map_bn.clone();
    let mut remap = vec![0 as Lit; map_f.len() + 1];
    let mut shared = 0;
    let mut new_vars: Vec<String> = Vec::new();
    for (i, sym) in map_f.symbols().iter().enumerate() {
        let v = match sym {
            Symbol::Indicator { variable, value } if bn_vars.contains(variable.as_str()) => {
                match map_bn.lookup(sym) {
                    Some(v) => {
                        shared += 1;
                        v
                    }
                    None => {
                        return Err(EncodeError::TagMismatch(format!(
                            "network variable `{variable}` has no value `{value}`"
                        )))
                    }
                }
            }
            Symbol::Indicator { variable, .. } => {
                if !new_vars.contains(variable) {
                    new_vars.push(variable.clone());
                }
                map.push(sym.clone())
            }
            Symbol::Parameter { .. } => {
                return Err(EncodeError::TagMismatch(format!("classifier CNF carries parameter {sym}")))
            }
            Symbol::Intermediate { .. } => {
                if map_bn.lookup(sym).is_some() {
                    return Err(EncodeError::TagMismatch(format!("{sym} appears on both sides")));
                }
                map.push(sym.clone())
            }
        };
        remap[i + 1] = v as Lit;
    }
    if shared == 0 {
        return Err(EncodeError::Disjoint);
    }
    if new_vars.len() > 1 {
        return Err(EncodeError::MultipleNewVariables(new_vars));
    }
    let mut cnf = CnfFormula::new(map.len() as u32);
    for c in cnf_bn.clauses() {
        cnf.add_clause(c.clone());
    }
    for c in cnf_f.clauses() {
        cnf.add_clause(
            c.iter()
                .map(|&l| remap[l.unsigned_abs() as usize] * l.signum())
                .collect(),
        );
    }
    Ok((cnf, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn::{Cpt, Variable};

    fn root() -> BayesianNetwork {
        BayesianNetwork::new(
            "r",
            vec![Variable::new("X", &["0", "1"])],
            vec![Cpt::dense(0, vec![], vec![vec![0.5, 0.5]])],
        )
        .unwrap()
    }

    #[test]
    fn binary_root_counts() {
        let (cnf, map) = encode_bn(&root(), EncodeOptions::default());
        assert_eq!(map.len(), 4);
        assert_eq!(map.symbols().iter().filter(|s| s.is_indicator()).count(), 2);
        // One at-least-one clause, one exclusion pair, two clauses per
        // parameter in each direction.
        assert_eq!(cnf.num_clauses(), 2 + 4);
        let (cnf, _) = encode_bn(&root(), EncodeOptions { drop_reverse: true });
        assert_eq!(cnf.num_clauses(), 2 + 2);
    }
}
