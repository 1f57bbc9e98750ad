//! Variable elimination over dense factors.

use super::{BoundsError, Result};
use crate::bn::{BayesianNetwork, CptTable, Evidence, VarId, ROW_SUM_TOLERANCE};

/// Table over `vars` (ascending), last variable fastest.
#[derive(Debug, Clone)]
struct Factor {
    vars: Vec<VarId>,
    table: Vec<f64>,
}

/// Product of `factors`, with `elim` summed out when given.
fn combine(factors: &[Factor], elim: Option<VarId>, card: &[usize]) -> Factor {
    let mut union: Vec<VarId> = factors.iter().flat_map(|f| f.vars.iter().copied()).collect();
    union.sort_unstable();
    union.dedup();
    let out_vars: Vec<VarId> = union.iter().copied().filter(|&v| Some(v) != elim).collect();
    let strides_of = |vars: &[VarId]| -> Vec<usize> {
        let mut s = vec![0; union.len()];
        let mut acc = 1;
        for &v in vars.iter().rev() {
            let k = union.binary_search(&v).unwrap();
            s[k] = acc;
            acc *= card[v];
        }
        s
    };
    let fs: Vec<Vec<usize>> = factors.iter().map(|f| strides_of(&f.vars)).collect();
    let rs = strides_of(&out_vars);
    let out_size: usize = out_vars.iter().map(|&v| card[v]).product();
    let mut out = vec![0.0; out_size];
    let mut digits = vec![0usize; union.len()];
    let mut idx = vec![0usize; factors.len()];
    let mut ridx = 0usize;
    loop {
        let mut p = 1.0;
        for (f, &i) in factors.iter().zip(&idx) {
            p *= f.table[i];
        }
        out[ridx] += p;
        // Odometer increment, last variable fastest.
        let mut k = union.len();
        loop {
            if k == 0 {
                return Factor {
                    vars: out_vars,
                    table: out,
                };
            }
            k -= 1;
            let c = card[union[k]];
            if digits[k] + 1 < c {
                digits[k] += 1;
                for (i, s) in idx.iter_mut().zip(&fs) {
                    *i += s[k];
                }
                ridx += rs[k];
                break;
            }
            for (i, s) in idx.iter_mut().zip(&fs) {
                *i -= s[k] * (c - 1);
            }
            ridx -= rs[k] * (c - 1);
            digits[k] = 0;
        }
    }
}

fn rows_normalized(bn: &BayesianNetwork, v: VarId) -> bool {
    match &bn.cpt(v).table {
        CptTable::Dense(rows) => rows
            .iter()
            .all(|r| (r.iter().sum::<f64>() - 1.0).abs() <= ROW_SUM_TOLERANCE),
        CptTable::Deterministic(_) => true,
    }
}

/// CPT of `v` restricted to the evidence.
fn cpt_factor(bn: &BayesianNetwork, v: VarId, ev: &[Option<usize>]) -> Factor {
    let parents = bn.parents(v);
    let mut vars: Vec<VarId> = parents.iter().copied().chain([v]).filter(|&u| ev[u].is_none()).collect();
    vars.sort_unstable();
    let card: Vec<usize> = vars.iter().map(|&u| bn.cardinality(u)).collect();
    let size: usize = card.iter().product();
    let mut values: Vec<usize> = ev.iter().map(|x| x.unwrap_or(0)).collect();
    let mut table = Vec::with_capacity(size);
    let mut pv = vec![0; parents.len()];
    for mut i in 0..size {
        for (k, &u) in vars.iter().enumerate().rev() {
            values[u] = i % card[k];
            i /= card[k];
        }
        for (slot, &p) in pv.iter_mut().zip(parents) {
            *slot = values[p];
        }
        table.push(bn.prob(v, values[v], bn.row_index(v, &pv)));
    }
    Factor { vars, table }
}

/// Greedy min-fill over the interaction graph of `vars`; ties to the lowest
/// variable.
fn minfill_order(n: usize, scopes: &[Vec<VarId>], vars: &[VarId]) -> Vec<VarId> {
    let mut adj = vec![std::collections::BTreeSet::new(); n];
    for s in scopes {
        for &a in s {
            for &b in s {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }
    let mut left: std::collections::BTreeSet<VarId> = vars.iter().copied().collect();
    let mut order = Vec::with_capacity(vars.len());
    while !left.is_empty() {
        let fill = |v: VarId| -> usize {
            let nb: Vec<_> = adj[v].iter().copied().collect();
            let mut f = 0;
            for i in 0..nb.len() {
                for j in i + 1..nb.len() {
                    if !adj[nb[i]].contains(&nb[j]) {
                        f += 1;
                    }
                }
            }
            f
        };
        let v = *left.iter().min_by_key(|&&v| (fill(v), adj[v].len(), v)).unwrap();
        let nb: Vec<VarId> = adj[v].iter().copied().collect();
        for &a in &nb {
            adj[a].remove(&v);
            for &b in &nb {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
        adj[v].clear();
        left.remove(&v);
        order.push(v);
    }
    order
}

/// Exact `p(e)` by variable elimination. Variables that are neither
/// ancestors of the evidence nor of an unnormalized CPT are dropped first.
pub fn ve_marginal(bn: &BayesianNetwork, evidence: &Evidence) -> Result<f64> {
    let n = bn.num_vars();
    let mut ev = vec![None; n];
    for (var, value) in evidence.iter() {
        if var >= n || value >= bn.cardinality(var) {
            return Err(BoundsError::UnknownEvidence { var, value });
        }
        ev[var] = Some(value);
    }
    let mut keep = vec![false; n];
    let mut stack: Vec<VarId> = (0..n).filter(|&v| ev[v].is_some() || !rows_normalized(bn, v)).collect();
    while let Some(v) = stack.pop() {
        if keep[v] {
            continue;
        }
        keep[v] = true;
        stack.extend(bn.parents(v).iter().copied().filter(|&p| !keep[p]));
    }
    for v in (0..n).filter(|&v| keep[v] && bn.is_deterministic(v)) {
        bn.decisions(v)?;
    }
    let mut factors: Vec<Factor> = (0..n).filter(|&v| keep[v]).map(|v| cpt_factor(bn, v, &ev)).collect();
    let card: Vec<usize> = (0..n).map(|v| bn.cardinality(v)).collect();
    let free: Vec<VarId> = (0..n).filter(|&v| keep[v] && ev[v].is_none()).collect();
    let scopes: Vec<Vec<VarId>> = factors.iter().map(|f| f.vars.clone()).collect();
    for v in minfill_order(n, &scopes, &free) {
        let (hit, rest): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.vars.contains(&v));
        factors = rest;
        if !hit.is_empty() {
            factors.push(combine(&hit, Some(v), &card));
        }
    }
    Ok(factors.iter().map(|f| f.table[0]).product())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn::tests::chain;

    fn enumerate(bn: &BayesianNetwork, ev: &Evidence) -> f64 {
        let n = bn.num_vars();
        let total = bn.state_space_size() as usize;
        let mut sum = 0.0;
        for mut i in 0..total {
            let mut vals = vec![0; n];
            for v in (0..n).rev() {
                vals[v] = i % bn.cardinality(v);
                i /= bn.cardinality(v);
            }
            if ev.iter().all(|(v, x)| vals[v] == x) {
                sum += bn.joint_probability_dense(&vals);
            }
        }
        sum
    }

    #[test]
    fn matches_enumeration_on_a_chain() {
        let bn = chain();
        for text in ["", "X=1", "Y=0", "X=0,Y=1"] {
            let ev = Evidence::parse(&bn, text).unwrap();
            let got = ve_marginal(&bn, &ev).unwrap();
            assert!((got - enumerate(&bn, &ev)).abs() < 1e-12, "{text}");
        }
    }

    #[test]
    fn unnormalized_rows_are_not_pruned() {
        let bn = chain();
        let last = bn.num_vars() - 1;
        let zeroed = bn.with_cpt(crate::bn::Cpt::dense(
            last,
            bn.parents(last).to_vec(),
            vec![vec![0.0; bn.cardinality(last)]; bn.num_rows(last)],
        ));
        assert_eq!(ve_marginal(&zeroed, &Evidence::new()).unwrap(), 0.0);
    }
}
