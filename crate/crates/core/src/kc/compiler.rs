//! Top-down d-DNNF compiler: DPLL with unit propagation, dynamic
//! decomposition into connected components and component caching.
//!
//! Decisions follow a static priority taken from the dtree's elimination
//! order: the variable eliminated last is decided first. Indicator variables
//! are always preferred; any other decision is counted in the statistics
//! and later rejected by `to_ac`.

use std::collections::HashMap;

use super::ddnnf::{Ddnnf, NnfBuilder, NnfNode, NodeId};
use super::{KcError, Result};
use crate::encoder::{CnfFormula, Dtree, Lit, VarMap};

pub const DEFAULT_EDGE_BUDGET: usize = 50_000_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CompilerStats {
    pub decisions: u64,
    pub non_indicator_decisions: u64,
    pub cache_hits: u64,
    pub cache_entries: u64,
    pub nodes: u64,
    pub edges: u64,
}

struct Compiler<'a> {
    clauses: &'a [Vec<Lit>],
    occ: Vec<Vec<u32>>,
    assign: Vec<i8>,
    trail: Vec<Lit>,
    rank: Vec<u32>,
    is_indicator: Vec<bool>,
    builder: NnfBuilder,
    cache: HashMap<Box<[u32]>, NodeId>,
    budget: usize,
    stats: CompilerStats,
    // Scratch space for component detection.
    uf: Vec<u32>,
    comp_slot: Vec<u32>,
    stamp: Vec<u32>,
    epoch: u32,
}

#[inline]
fn lit_index(l: Lit) -> usize {
    2 * (l.unsigned_abs() as usize) + usize::from(l < 0)
}

impl<'a> Compiler<'a> {
    #[inline]
    fn value(&self, l: Lit) -> i8 {
        let a = self.assign[l.unsigned_abs() as usize];
        if l > 0 {
            a
        } else {
            -a
        }
    }

    #[inline]
    fn set(&mut self, l: Lit) {
        self.assign[l.unsigned_abs() as usize] = if l > 0 { 1 } else { -1 };
        self.trail.push(l);
    }

    fn undo(&mut self, mark: usize) {
        for &l in &self.trail[mark..] {
            self.assign[l.unsigned_abs() as usize] = 0;
        }
        self.trail.truncate(mark);
    }

    /// Unit propagation from trail position `from`. False on conflict.
    fn propagate(&mut self, from: usize) -> bool {
        let mut i = from;
        while i < self.trail.len() {
            let l = self.trail[i];
            i += 1;
            let k = lit_index(-l);
            for j in 0..self.occ[k].len() {
                let c = self.occ[k][j] as usize;
                let mut unassigned = 0;
                let mut last = 0;
                let mut sat = false;
                for &x in &self.clauses[c] {
                    match self.value(x) {
                        1 => {
                            sat = true;
                            break;
                        }
                        0 => {
                            unassigned += 1;
                            last = x;
                        }
                        _ => {}
                    }
                }
                if sat {
                    continue;
                }
                match unassigned {
                    0 => return false,
                    1 => self.set(last),
                    _ => {}
                }
            }
        }
        true
    }

    fn satisfied(&self, c: u32) -> bool {
        self.clauses[c as usize].iter().any(|&x| self.value(x) == 1)
    }

    fn find(&mut self, mut v: u32) -> u32 {
        while self.uf[v as usize] != v {
            let p = self.uf[v as usize];
            self.uf[v as usize] = self.uf[p as usize];
            v = p;
        }
        v
    }

    fn touch(&mut self, v: u32) {
        if self.stamp[v as usize] != self.epoch {
            self.stamp[v as usize] = self.epoch;
            self.uf[v as usize] = v;
            self.comp_slot[v as usize] = u32::MAX;
        }
    }

    /// Splits the unsatisfied clauses among `clauses` into connected
    /// components over their unassigned variables.
    fn decompose(&mut self, clauses: &[u32]) -> Vec<(Vec<u32>, Vec<u32>)> {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = u32::MAX);
            self.epoch = 1;
        }
        let active: Vec<u32> = clauses.iter().copied().filter(|&c| !self.satisfied(c)).collect();
        for &c in &active {
            let mut first: Option<u32> = None;
            for idx in 0..self.clauses[c as usize].len() {
                let x = self.clauses[c as usize][idx];
                if self.value(x) != 0 {
                    continue;
                }
                let v = x.unsigned_abs();
                self.touch(v);
                match first {
                    None => first = Some(v),
                    Some(f) => {
                        let (a, b) = (self.find(f), self.find(v));
                        if a != b {
                            self.uf[a as usize] = b;
                        }
                    }
                }
            }
        }
        let mut comps: Vec<(Vec<u32>, Vec<u32>)> = Vec::new();
        for &c in &active {
            let v = self.clauses[c as usize]
                .iter()
                .find(|&&x| self.value(x) == 0)
                .expect("unsatisfied clauses keep an unassigned literal after propagation")
                .unsigned_abs();
            let r = self.find(v);
            let slot = if self.comp_slot[r as usize] == u32::MAX {
                self.comp_slot[r as usize] = comps.len() as u32;
                comps.push((Vec::new(), Vec::new()));
                comps.len() - 1
            } else {
                self.comp_slot[r as usize] as usize
            };
            comps[slot].0.push(c);
        }
        // Collect each component's variables once.
        self.epoch = self.epoch.wrapping_add(1);
        for comp in comps.iter_mut() {
            for &c in &comp.0 {
                for &x in &self.clauses[c as usize] {
                    let v = x.unsigned_abs();
                    if self.value(x) == 0 && self.stamp[v as usize] != self.epoch {
                        self.stamp[v as usize] = self.epoch;
                        comp.1.push(v);
                    }
                }
            }
            comp.1.sort_unstable();
        }
        comps
    }

    fn compile_component(&mut self, clauses: Vec<u32>, vars: Vec<u32>) -> Result<NodeId> {
        let mut key = Vec::with_capacity(clauses.len() + vars.len() + 1);
        key.extend_from_slice(&clauses);
        key.push(u32::MAX);
        key.extend_from_slice(&vars);
        let key = key.into_boxed_slice();
        if let Some(&n) = self.cache.get(&key) {
            self.stats.cache_hits += 1;
            return Ok(n);
        }
        let best_indicator = vars
            .iter()
            .copied()
            .filter(|&v| self.is_indicator[v as usize])
            .max_by_key(|&v| self.rank[v as usize]);
        let d = match best_indicator {
            Some(d) => d,
            None => {
                let d = vars
                    .iter()
                    .copied()
                    .max_by_key(|&v| self.rank[v as usize])
                    .expect("components have variables");
                self.stats.non_indicator_decisions += 1;
                d
            }
        };
        self.stats.decisions += 1;
        let mut branches = [0 as NodeId; 2];
        for (b, lit) in [d as Lit, -(d as Lit)].into_iter().enumerate() {
            let mark = self.trail.len();
            self.set(lit);
            branches[b] = if self.propagate(mark) {
                self.conjoin_residual(mark, &clauses)?
            } else {
                self.builder.false_node()
            };
            self.undo(mark);
        }
        let node = self.builder.or(d, branches[0], branches[1]);
        if self.builder.edges > self.budget {
            return Err(KcError::BudgetExceeded {
                edges: self.builder.edges,
                nodes: self.builder.nodes.len(),
                budget: self.budget,
            });
        }
        self.cache.insert(key, node);
        Ok(node)
    }

    /// AND of the literals assigned since `mark` and the compiled residual
    /// components of `clauses`.
    fn conjoin_residual(&mut self, mark: usize, clauses: &[u32]) -> Result<NodeId> {
        let lits: Vec<Lit> = self.trail[mark..].to_vec();
        let comps = self.decompose(clauses);
        let mut children: Vec<NodeId> = lits.iter().map(|&l| self.builder.add(NnfNode::Lit(l))).collect();
        for (cs, vs) in comps {
            let n = self.compile_component(cs, vs)?;
            if self.builder.is_false(n) {
                return Ok(self.builder.false_node());
            }
            children.push(n);
        }
        Ok(self.builder.and(children))
    }
}

/// Compiles `cnf` to d-DNNF. `map` tells indicator variables apart; the
/// dtree supplies the decision priority.
pub fn compile(cnf: &CnfFormula, map: &VarMap, dtree: &Dtree, edge_budget: usize) -> Result<(Ddnnf, CompilerStats)> {
    let n = cnf.num_vars() as usize;
    let mut occ = vec![Vec::new(); 2 * n + 2];
    for (i, c) in cnf.clauses().iter().enumerate() {
        for &l in c {
            occ[lit_index(l)].push(i as u32);
        }
    }
    let mut rank = vec![0u32; n + 1];
    for (pos, &v) in dtree.order().iter().enumerate() {
        rank[v as usize] = pos as u32 + 1;
    }
    let mut is_indicator = vec![false; n + 1];
    for v in 1..=n {
        is_indicator[v] = map.symbol(v as u32).is_indicator();
    }
    let mut c = Compiler {
        clauses: cnf.clauses(),
        occ,
        assign: vec![0; n + 1],
        trail: Vec::new(),
        rank,
        is_indicator,
        builder: NnfBuilder::default(),
        cache: HashMap::new(),
        budget: edge_budget,
        stats: CompilerStats::default(),
        uf: vec![0; n + 1],
        comp_slot: vec![u32::MAX; n + 1],
        stamp: vec![0; n + 1],
        epoch: 0,
    };
    let mut conflict = false;
    for cl in cnf.clauses() {
        if cl.len() == 1 {
            match c.value(cl[0]) {
                0 => c.set(cl[0]),
                -1 => conflict = true,
                _ => {}
            }
        }
    }
    let root = if conflict || !c.propagate(0) {
        c.builder.false_node()
    } else {
        let all: Vec<u32> = (0..cnf.num_clauses() as u32).collect();
        c.conjoin_residual(0, &all)?
    };
    c.stats.cache_entries = c.cache.len() as u64;
    let d = c.builder.finish(root, cnf.num_vars());
    c.stats.nodes = d.nodes().len() as u64;
    c.stats.edges = d.num_edges() as u64;
    Ok((d, c.stats))
}
