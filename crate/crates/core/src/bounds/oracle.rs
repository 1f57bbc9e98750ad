//! Exhaustive oracles and baselines for small instances.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::br::initial_network;
use super::{context_rows, one_hot, ve_marginal, Backend, BoundsError, InterventionWitness, Result};
use crate::bn::{BayesianNetwork, Cpt, Evidence, InterventionSpec, VarId};
use crate::engine::{gradients, ParameterAssignment};

pub const DEFAULT_WITNESS_CAP: f64 = 1e7;

/// `Π_{W,u} |dom(W)|`: the number of deterministic interventions.
pub fn witness_space(bn: &BayesianNetwork, spec: &InterventionSpec) -> f64 {
    spec.intervenable
        .iter()
        .map(|&w| (bn.cardinality(w) as f64).powi(context_rows(bn, spec, w) as i32))
        .product()
}

fn check_cap(required: f64, cap: f64) -> Result<()> {
    if required > cap {
        return Err(BoundsError::CapExceeded { required, cap });
    }
    Ok(())
}

/// Larger value wins; on ties the lower index.
fn better(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Exact `max p(e)` over all deterministic interventions of `spec`, with the
/// lowest-numbered maximizing witness.
pub fn brute_force_max(
    bn: &BayesianNetwork,
    evidence: &Evidence,
    spec: &InterventionSpec,
    cap: f64,
) -> Result<(f64, InterventionWitness)> {
    spec.validate(bn)?;
    let space = witness_space(bn, spec);
    check_cap(space, cap)?;
    let digits: Vec<(VarId, usize)> = spec
        .intervenable
        .iter()
        .map(|&w| (w, context_rows(bn, spec, w)))
        .collect();
    let decode = |mut i: u64| -> InterventionWitness {
        let mut choices = BTreeMap::new();
        for &(w, rows) in digits.iter().rev() {
            let card = bn.cardinality(w) as u64;
            let mut r = vec![0; rows];
            for slot in r.iter_mut().rev() {
                *slot = (i % card) as usize;
                i /= card;
            }
            choices.insert(w, r);
        }
        InterventionWitness { choices }
    };
    let (value, index) = (0..space as u64)
        .into_par_iter()
        .map(|i| Ok::<_, BoundsError>((ve_marginal(&decode(i).apply(bn, spec), evidence)?, i)))
        .try_reduce(|| (f64::NEG_INFINITY, u64::MAX), |a, b| Ok(better(a, b)))?;
    Ok((value, decode(index)))
}

/// Best do-intervention: each `W` fixed to one value regardless of its
/// parents.
pub fn do_search(
    bn: &BayesianNetwork,
    evidence: &Evidence,
    spec: &InterventionSpec,
    cap: f64,
) -> Result<(f64, BTreeMap<VarId, usize>)> {
    spec.validate(bn)?;
    let ws = &spec.intervenable;
    let space: f64 = ws.iter().map(|&w| bn.cardinality(w) as f64).product();
    check_cap(space, cap)?;
    let decode = |mut i: u64| -> BTreeMap<VarId, usize> {
        let mut out = BTreeMap::new();
        for &w in ws.iter().rev() {
            let c = bn.cardinality(w) as u64;
            out.insert(w, (i % c) as usize);
            i /= c;
        }
        out
    };
    let (value, index) = (0..space as u64)
        .into_par_iter()
        .map(|i| {
            let mut net = bn.clone();
            for (w, x) in decode(i) {
                let rows = vec![one_hot(bn.cardinality(w), x); bn.num_rows(w)];
                net = net.with_cpt(Cpt::dense(w, bn.parents(w).to_vec(), rows));
            }
            Ok::<_, BoundsError>((ve_marginal(&net, evidence)?, i))
        })
        .try_reduce(|| (f64::NEG_INFINITY, u64::MAX), |a, b| Ok(better(a, b)))?;
    Ok((value, decode(index)))
}

/// First-order sensitivity estimate. Carries no soundness guarantee.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderEstimate {
    pub value: f64,
    pub warning: &'static str,
}

const SA_WARNING: &str = "first-order approximation; not a bound";

/// `Σ_W Σ_u max_w ∂p(e)/∂θ_{w|u}` at the network's parameters (the
/// projected ones for structural specs).
pub fn sa_first_order(
    bn: &BayesianNetwork,
    evidence: &Evidence,
    spec: &InterventionSpec,
    backend: Backend<'_>,
) -> Result<FirstOrderEstimate> {
    let net = initial_network(bn, spec)?;
    let mut total = 0.0;
    let partials = match backend {
        Backend::Ac(ac) if ac.num_params() != net.num_params() => {
            return Err(BoundsError::BackendMismatch(
                "circuit and network parameter layouts differ".into(),
            ))
        }
        Backend::Ac(ac) => Some(gradients(ac, evidence, &ParameterAssignment::from_network(&net))?.partials),
        Backend::Ve => None,
    };
    for &w in &spec.intervenable {
        let card = net.cardinality(w);
        let base = net.cpt(w).rows().expect("intervened CPTs are dense").to_vec();
        for r in 0..net.num_rows(w) {
            let best = match &partials {
                Some(g) => (0..card)
                    .map(|x| g[net.param_index(w, r, x)])
                    .fold(f64::NEG_INFINITY, f64::max),
                None => {
                    // p(e) is linear in the row: the derivative is the value
                    // with a one-hot row minus the value with a zero row.
                    let at = |row: Vec<f64>| -> Result<f64> {
                        let mut table = base.clone();
                        table[r] = row;
                        ve_marginal(&net.with_cpt(Cpt::dense(w, net.parents(w).to_vec(), table)), evidence)
                    };
                    let zero = at(vec![0.0; card])?;
                    let mut best = f64::NEG_INFINITY;
                    for x in 0..card {
                        best = best.max(at(one_hot(card, x))? - zero);
                    }
                    best
                }
            };
            total += best;
        }
    }
    Ok(FirstOrderEstimate {
        value: total,
        warning: SA_WARNING,
    })
}
