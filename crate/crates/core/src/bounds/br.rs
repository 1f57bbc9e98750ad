//! Best-response dynamics over the rows of intervenable CPTs.
//!
//! `p(e)` is linear in the parameters of any single CPT, and the coefficient
//! of `θ_{w|u}` does not depend on that CPT. One scoring pass per CPT (a
//! gradient pass on the circuit, or `|dom(W)|` marginals per row by
//! elimination) therefore ranks every row's deterministic choices exactly,
//! and both backends make identical moves.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{context_rows, one_hot, ve_marginal, BoundsError, InterventionWitness, Result, IMPROVEMENT_EPS};
use crate::bn::{BayesianNetwork, Cpt, Evidence, InterventionSpec, VarId};
use crate::engine::{evaluate, gradients, ParameterAssignment};
use crate::kc::ArithmeticCircuit;

#[derive(Debug, Clone, Copy)]
pub enum Backend<'a> {
    Ve,
    /// A circuit compiled from the network being intervened on.
    Ac(&'a ArithmeticCircuit),
}

impl Backend<'_> {
    pub fn tag(&self) -> &'static str {
        match self {
            Backend::Ve => "ve",
            Backend::Ac(_) => "ac",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BrOptions {
    pub max_sweeps: usize,
    /// Extra runs from uniformly sampled deterministic witnesses.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for BrOptions {
    fn default() -> Self {
        BrOptions {
            max_sweeps: 1000,
            restarts: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrOutcome {
    pub value: f64,
    pub witness: InterventionWitness,
    pub sweeps: usize,
    /// Value before the first sweep, then after every sweep.
    pub trace: Vec<f64>,
    /// False when `max_sweeps` stopped the run first.
    pub converged: bool,
    pub backend: &'static str,
}

/// Network best response starts from: the original one, or for structural
/// specs the rewired one whose new CPTs are `P(w | C_W)` of the original
/// (uniform where the context has probability zero).
pub(crate) fn initial_network(bn: &BayesianNetwork, spec: &InterventionSpec) -> Result<BayesianNetwork> {
    spec.validate(bn)?;
    if !spec.is_structural() {
        return Ok(bn.clone());
    }
    let mut cpts = BTreeMap::new();
    for &w in &spec.intervenable {
        let ctx = spec.parents_after(bn, w);
        if ctx == bn.parents(w) {
            continue;
        }
        let card = bn.cardinality(w);
        let mut rows = Vec::new();
        for r in 0..context_rows(bn, spec, w) {
            let mut ev = Evidence::new();
            let mut rest = r;
            for &p in ctx.iter().rev() {
                ev.insert(bn, p, rest % bn.cardinality(p))?;
                rest /= bn.cardinality(p);
            }
            let pc = ve_marginal(bn, &ev)?;
            let row = if pc > 0.0 {
                let mut row = Vec::with_capacity(card);
                for x in 0..card {
                    let mut e = ev.clone();
                    e.insert(bn, w, x)?;
                    row.push(ve_marginal(bn, &e)? / pc);
                }
                let s: f64 = row.iter().sum();
                row.iter().map(|p| p / s).collect()
            } else {
                vec![1.0 / card as f64; card]
            };
            rows.push(row);
        }
        cpts.insert(w, rows);
    }
    Ok(bn.apply_structural(spec, &cpts)?)
}

struct Run<'a> {
    net: BayesianNetwork,
    evidence: &'a Evidence,
    backend: Backend<'a>,
    order: Vec<VarId>,
    choice: BTreeMap<VarId, Vec<Option<usize>>>,
}

impl Run<'_> {
    fn value(&self) -> Result<f64> {
        match self.backend {
            Backend::Ve => ve_marginal(&self.net, self.evidence),
            Backend::Ac(ac) => Ok(evaluate(ac, self.evidence, &ParameterAssignment::from_network(&self.net))?),
        }
    }

    /// Per row of `w`, the coefficient of each deterministic choice, up to a
    /// row-wise constant.
    fn scores(&self, w: VarId) -> Result<Vec<Vec<f64>>> {
        let card = self.net.cardinality(w);
        let rows = self.net.num_rows(w);
        match self.backend {
            Backend::Ac(ac) => {
                let g = gradients(ac, self.evidence, &ParameterAssignment::from_network(&self.net))?;
                let start = self.net.param_index(w, 0, 0);
                Ok(g.partials[start..start + rows * card].chunks(card).map(<[f64]>::to_vec).collect())
            }
            Backend::Ve => {
                let base = self.net.cpt(w).rows().expect("intervened CPTs are dense").to_vec();
                let mut out = Vec::with_capacity(rows);
                for r in 0..rows {
                    let mut s = Vec::with_capacity(card);
                    for x in 0..card {
                        let mut table = base.clone();
                        table[r] = one_hot(card, x);
                        let net = self.net.with_cpt(Cpt::dense(w, self.net.parents(w).to_vec(), table));
                        s.push(ve_marginal(&net, self.evidence)?);
                    }
                    out.push(s);
                }
                Ok(out)
            }
        }
    }

    /// One pass over all intervenable CPTs. True if some row improved by more
    /// than the threshold.
    fn sweep(&mut self) -> Result<bool> {
        let mut improved = false;
        for k in 0..self.order.len() {
            let w = self.order[k];
            let scores = self.scores(w)?;
            let card = self.net.cardinality(w);
            let current = self.net.cpt(w).rows().expect("intervened CPTs are dense").to_vec();
            let choice = self.choice.get_mut(&w).unwrap();
            let mut table = Vec::with_capacity(scores.len());
            for (r, s) in scores.iter().enumerate() {
                let mut best = 0;
                for x in 1..card {
                    if s[x] > s[best] {
                        best = x;
                    }
                }
                let now: f64 = match choice[r] {
                    Some(c) => s[c],
                    None => current[r].iter().zip(s).map(|(t, g)| t * g).sum(),
                };
                let gain = s[best] - now;
                let pick = match choice[r] {
                    Some(c) if gain <= IMPROVEMENT_EPS => c,
                    _ => best,
                };
                if gain > IMPROVEMENT_EPS {
                    improved = true;
                }
                choice[r] = Some(pick);
                table.push(one_hot(card, pick));
            }
            self.net = self.net.with_cpt(Cpt::dense(w, self.net.parents(w).to_vec(), table));
        }
        Ok(improved)
    }

    fn run(mut self, max_sweeps: usize) -> Result<BrOutcome> {
        let mut trace = vec![self.value()?];
        let mut sweeps = 0;
        let mut converged = self.order.is_empty();
        while !converged && sweeps < max_sweeps.max(1) {
            let improved = self.sweep()?;
            sweeps += 1;
            trace.push(self.value()?);
            converged = !improved;
        }
        let witness = InterventionWitness {
            choices: self
                .choice
                .iter()
                .map(|(&w, rows)| (w, rows.iter().map(|c| c.expect("every row is decided after a sweep")).collect()))
                .collect(),
        };
        Ok(BrOutcome {
            value: *trace.last().unwrap(),
            witness,
            sweeps,
            trace,
            converged,
            backend: self.backend.tag(),
        })
    }
}

/// Best-response lower bound on `max p(e)` over the interventions of `spec`.
/// Every value in the returned trace is attained by some intervention.
pub fn lower_bound_br(
    bn: &BayesianNetwork,
    evidence: &Evidence,
    spec: &InterventionSpec,
    backend: Backend<'_>,
    options: &BrOptions,
) -> Result<BrOutcome> {
    let net = initial_network(bn, spec)?;
    if let Backend::Ac(ac) = backend {
        if ac.num_params() != net.num_params() {
            return Err(BoundsError::BackendMismatch(format!(
                "circuit has {} parameters, the network to intervene on has {}; \
                 structural specs need a circuit compiled for the rewired network",
                ac.num_params(),
                net.num_params()
            )));
        }
    }
    let order: Vec<VarId> = net.topological_order().into_iter().filter(|&v| spec.contains(v)).collect();
    let blank: BTreeMap<VarId, Vec<Option<usize>>> =
        order.iter().map(|&w| (w, vec![None; net.num_rows(w)])).collect();
    let mut starts = vec![(net.clone(), blank)];
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    for _ in 0..options.restarts {
        let mut n = net.clone();
        let mut choice = BTreeMap::new();
        for &w in &order {
            let card = n.cardinality(w);
            let rows: Vec<usize> = (0..n.num_rows(w)).map(|_| rng.gen_range(0..card)).collect();
            let table = rows.iter().map(|&x| one_hot(card, x)).collect();
            n = n.with_cpt(Cpt::dense(w, n.parents(w).to_vec(), table));
            choice.insert(w, rows.into_iter().map(Some).collect());
        }
        starts.push((n, choice));
    }
    let outcomes: Vec<BrOutcome> = starts
        .into_par_iter()
        .map(|(net, choice)| {
            Run {
                net,
                evidence,
                backend,
                order: order.clone(),
                choice,
            }
            .run(options.max_sweeps)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.value > outcomes[best].value {
            best = i;
        }
    }
    Ok(outcomes.into_iter().nth(best).unwrap())
}
