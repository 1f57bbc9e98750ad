//! Lower bounds by best response, exact oracles over deterministic
//! interventions, do-intervention and first-order baselines, and the
//! robustness decision.

mod br;
mod oracle;
mod ve;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use br::{lower_bound_br, Backend, BrOptions, BrOutcome};
pub use oracle::{
    brute_force_max, do_search, sa_first_order, witness_space, FirstOrderEstimate, DEFAULT_WITNESS_CAP,
};
pub use ve::ve_marginal;

use crate::bn::{BayesianNetwork, BnError, Cpt, Evidence, InterventionSpec, VarId};
use crate::engine::{self, EngineError};
use crate::pipeline::CompiledModel;

/// Strict-improvement threshold for best response.
pub const IMPROVEMENT_EPS: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum BoundsError {
    #[error("search space of {required:.0} witnesses exceeds the cap of {cap:.0}")]
    CapExceeded { required: f64, cap: f64 },
    #[error("backend mismatch: {0}")]
    BackendMismatch(String),
    #[error("evidence refers to variable {var} value {value}, which the network does not have")]
    UnknownEvidence { var: VarId, value: usize },
    #[error(transparent)]
    Bn(#[from] BnError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

pub type Result<T> = std::result::Result<T, BoundsError>;

/// A deterministic intervention: for each intervened `W` and each row of its
/// post-intervention parent set, the chosen value of `W`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterventionWitness {
    pub choices: BTreeMap<VarId, Vec<usize>>,
}

impl InterventionWitness {
    /// The network with every witnessed CPT replaced by its one-hot rows over
    /// the spec's parent sets.
    pub fn apply(&self, bn: &BayesianNetwork, spec: &InterventionSpec) -> BayesianNetwork {
        let mut out = bn.clone();
        for (&w, rows) in &self.choices {
            let card = bn.cardinality(w);
            let table = rows.iter().map(|&x| one_hot(card, x)).collect();
            out = out.with_cpt(Cpt::dense(w, spec.parents_after(bn, w).to_vec(), table));
        }
        out
    }

    /// `{W: {"(u1, u2)": value}}` with names, for reports.
    pub fn named(&self, bn: &BayesianNetwork, spec: &InterventionSpec) -> BTreeMap<String, BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for (&w, rows) in &self.choices {
            let ctx = spec.parents_after(bn, w);
            let var = bn.variable(w);
            let mut m = BTreeMap::new();
            for (r, &x) in rows.iter().enumerate() {
                m.insert(context_label(bn, ctx, r), var.values[x].clone());
            }
            out.insert(var.name.clone(), m);
        }
        out
    }
}

pub(crate) fn one_hot(card: usize, x: usize) -> Vec<f64> {
    (0..card).map(|v| if v == x { 1.0 } else { 0.0 }).collect()
}

/// Value labels of row `row` over the parents `ctx`, last parent fastest.
pub(crate) fn context_label(bn: &BayesianNetwork, ctx: &[VarId], mut row: usize) -> String {
    let mut labels = vec![""; ctx.len()];
    for (k, &p) in ctx.iter().enumerate().rev() {
        let c = bn.cardinality(p);
        labels[k] = bn.variable(p).values[row % c].as_str();
        row /= c;
    }
    format!("({})", labels.join(", "))
}

/// Rows of an intervened CPT over its post-intervention parents.
pub(crate) fn context_rows(bn: &BayesianNetwork, spec: &InterventionSpec, w: VarId) -> usize {
    spec.parents_after(bn, w).iter().map(|&p| bn.cardinality(p)).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Decision {
    Robust,
    NotRobust,
    Inconclusive,
}

impl Decision {
    /// Process exit code for the decision.
    pub fn exit_code(self) -> i32 {
        match self {
            Decision::Robust => 0,
            Decision::NotRobust => 1,
            Decision::Inconclusive => 3,
        }
    }

    pub fn from_bounds(lb: f64, ub: f64, epsilon: f64) -> Self {
        if ub <= epsilon {
            Decision::Robust
        } else if lb > epsilon {
            Decision::NotRobust
        } else {
            Decision::Inconclusive
        }
    }
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Decision::Robust => "ROBUST",
            Decision::NotRobust => "NOT_ROBUST",
            Decision::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub query: String,
    pub spec: String,
    pub lb: f64,
    pub ub: f64,
    pub gap: f64,
    pub witness: BTreeMap<String, BTreeMap<String, String>>,
    pub iterations: usize,
    pub seconds: f64,
    pub backend: String,
    pub decision: Decision,
}

pub(crate) fn round_seconds(start: Instant) -> f64 {
    (start.elapsed().as_secs_f64() * 1000.0).round() / 1000.0
}

/// Upper bound from the compiled circuit, lower bound by best response, and
/// the decision against `epsilon`.
pub fn verify(
    model: &CompiledModel,
    evidence: &Evidence,
    spec: &InterventionSpec,
    epsilon: f64,
    use_ac: bool,
    options: &BrOptions,
) -> Result<(Decision, BoundsReport)> {
    let start = Instant::now();
    let bn = &model.network;
    let ub = engine::upper_bound(&model.ac, bn, evidence, spec)?;
    let backend = if use_ac { Backend::Ac(&model.ac) } else { Backend::Ve };
    let lb = lower_bound_br(bn, evidence, spec, backend, options)?;
    let decision = Decision::from_bounds(lb.value, ub, epsilon);
    let report = BoundsReport {
        query: evidence.display(bn),
        spec: spec.display(bn),
        lb: lb.value,
        ub,
        gap: ub - lb.value,
        witness: lb.witness.named(bn, spec),
        iterations: lb.sweeps,
        seconds: round_seconds(start),
        backend: lb.backend.to_string(),
        decision,
    };
    Ok((decision, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decisions_partition_outcomes() {
        assert_eq!(Decision::from_bounds(0.1, 0.2, 0.2), Decision::Robust);
        assert_eq!(Decision::from_bounds(0.3, 0.4, 0.2), Decision::NotRobust);
        assert_eq!(Decision::from_bounds(0.1, 0.4, 0.2), Decision::Inconclusive);
        assert_eq!(serde_json::to_string(&Decision::NotRobust).unwrap(), "\"NOT_ROBUST\"");
        let codes: Vec<i32> = [Decision::Robust, Decision::NotRobust, Decision::Inconclusive]
            .iter()
            .map(|d| d.exit_code())
            .collect();
        assert_eq!(codes, vec![0, 1, 3]);
    }
}
