use std::collections::HashMap;
use std::fmt::Write as _;

use super::{KcError, Result};
use crate::encoder::{BitSet, Lit};

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NnfNode {
    True,
    False,
    Lit(Lit),
    And(Vec<NodeId>),
    /// Binary disjunction whose children disagree on `decision`.
    Or { decision: u32, children: [NodeId; 2] },
}

/// A d-DNNF in topological order (children before parents).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ddnnf {
    nodes: Vec<NnfNode>,
    root: NodeId,
    num_vars: u32,
}

/// Hash-consing node store used by the compiler and importer.
#[derive(Debug, Default)]
pub(crate) struct NnfBuilder {
    pub nodes: Vec<NnfNode>,
    index: HashMap<NnfNode, NodeId>,
    pub edges: usize,
}

impl NnfBuilder {
    pub fn add(&mut self, node: NnfNode) -> NodeId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        self.edges += match &node {
            NnfNode::And(c) => c.len(),
            NnfNode::Or { .. } => 2,
            _ => 0,
        };
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node.clone());
        self.index.insert(node, id);
        id
    }

    pub fn false_node(&mut self) -> NodeId {
        self.add(NnfNode::False)
    }

    pub fn is_false(&self, id: NodeId) -> bool {
        self.nodes[id as usize] == NnfNode::False
    }

    /// Conjunction with constant folding and flattening of nested ANDs.
    pub fn and(&mut self, children: Vec<NodeId>) -> NodeId {
        let mut kept = Vec::with_capacity(children.len());
        for c in children {
            match &self.nodes[c as usize] {
                NnfNode::False => return self.false_node(),
                NnfNode::True => {}
                NnfNode::And(inner) => kept.extend_from_slice(inner),
                _ => kept.push(c),
            }
        }
        kept.sort_unstable();
        kept.dedup();
        match kept.len() {
            0 => self.add(NnfNode::True),
            1 => kept[0],
            _ => self.add(NnfNode::And(kept)),
        }
    }

    /// Decision node; a false branch collapses to the other one.
    pub fn or(&mut self, decision: u32, hi: NodeId, lo: NodeId) -> NodeId {
        match (self.is_false(hi), self.is_false(lo)) {
            (true, true) => self.false_node(),
            (true, false) => lo,
            (false, true) => hi,
            _ => self.add(NnfNode::Or {
                decision,
                children: [hi, lo],
            }),
        }
    }

    pub fn finish(self, root: NodeId, num_vars: u32) -> Ddnnf {
        Ddnnf::from_raw(self.nodes, root, num_vars).compact()
    }
}

impl Ddnnf {
    pub(crate) fn from_raw(nodes: Vec<NnfNode>, root: NodeId, num_vars: u32) -> Self {
        Ddnnf { nodes, root, num_vars }
    }

    pub fn nodes(&self) -> &[NnfNode] {
        &self.nodes
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn num_edges(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n {
                NnfNode::And(c) => c.len(),
                NnfNode::Or { .. } => 2,
                _ => 0,
            })
            .sum()
    }

    pub fn is_false(&self) -> bool {
        self.nodes[self.root as usize] == NnfNode::False
    }

    /// Drops nodes unreachable from the root, keeping topological order.
    fn compact(self) -> Self {
        let mut reach = vec![false; self.nodes.len()];
        reach[self.root as usize] = true;
        for i in (0..self.nodes.len()).rev() {
            if !reach[i] {
                continue;
            }
            match &self.nodes[i] {
                NnfNode::And(c) => c.iter().for_each(|&k| reach[k as usize] = true),
                NnfNode::Or { children, .. } => children.iter().for_each(|&k| reach[k as usize] = true),
                _ => {}
            }
        }
        let mut remap = vec![u32::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, n) in self.nodes.into_iter().enumerate() {
            if !reach[i] {
                continue;
            }
            remap[i] = nodes.len() as u32;
            nodes.push(match n {
                NnfNode::And(c) => NnfNode::And(c.iter().map(|&k| remap[k as usize]).collect()),
                NnfNode::Or { decision, children } => NnfNode::Or {
                    decision,
                    children: [remap[children[0] as usize], remap[children[1] as usize]],
                },
                other => other,
            });
        }
        Ddnnf {
            root: remap[self.root as usize],
            nodes,
            num_vars: self.num_vars,
        }
    }

    /// Decision variables of all OR nodes.
    pub fn decision_vars(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                NnfNode::Or { decision, .. } => Some(*decision),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn var_sets(&self) -> Vec<BitSet> {
        let n = self.num_vars as usize + 1;
        let mut sets: Vec<BitSet> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let mut s = BitSet::new(n);
            match node {
                NnfNode::Lit(l) => s.insert(l.unsigned_abs() as usize),
                NnfNode::And(c) => c.iter().for_each(|&k| s.union_with(&sets[k as usize])),
                NnfNode::Or { children, .. } => children.iter().for_each(|&k| s.union_with(&sets[k as usize])),
                _ => {}
            }
            sets.push(s);
        }
        sets
    }

    /// Does node `id` syntactically entail literal `lit` (the literal itself
    /// or a conjunction containing it)? Disjunctions are not looked into.
    fn entails(&self, id: NodeId, lit: Lit) -> bool {
        match &self.nodes[id as usize] {
            NnfNode::Lit(l) => *l == lit,
            NnfNode::False => true,
            NnfNode::And(c) => c.iter().any(|&k| self.entails(k, lit)),
            NnfNode::Or { .. } | NnfNode::True => false,
        }
    }

    /// Checks decomposability of every AND and determinism of every OR
    /// (children must entail opposite literals of the decision variable).
    pub fn check(&self) -> Result<()> {
        let sets = self.var_sets();
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                NnfNode::And(c) => {
                    let mut seen = BitSet::new(self.num_vars as usize + 1);
                    for &k in c {
                        if seen.intersects(&sets[k as usize]) {
                            return Err(KcError::NotDecomposable { node: i });
                        }
                        seen.union_with(&sets[k as usize]);
                    }
                }
                NnfNode::Or { decision, children } => {
                    let d = *decision as Lit;
                    let ok = (self.entails(children[0], d) && self.entails(children[1], -d))
                        || (self.entails(children[0], -d) && self.entails(children[1], d));
                    if *decision == 0 || !ok {
                        return Err(KcError::NotDeterministic { node: i });
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Evaluates the formula on a complete assignment (`values[v]` for v ≥ 1).
    pub fn eval(&self, values: &[bool]) -> bool {
        let mut out = vec![false; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            out[i] = match node {
                NnfNode::True => true,
                NnfNode::False => false,
                NnfNode::Lit(l) => values[l.unsigned_abs() as usize] == (*l > 0),
                NnfNode::And(c) => c.iter().all(|&k| out[k as usize]),
                NnfNode::Or { children, .. } => children.iter().any(|&k| out[k as usize]),
            };
        }
        out[self.root as usize]
    }

    /// Number of assignments to `projection` that extend to a model. Every
    /// decision variable must be in the projection; variables outside it are
    /// existentially quantified, which is exact when they are functionally
    /// determined by the projected ones.
    pub fn model_count(&self, projection: &[u32]) -> Result<u128> {
        let mut pos = vec![usize::MAX; self.num_vars as usize + 1];
        for (i, &v) in projection.iter().enumerate() {
            pos[v as usize] = i;
        }
        for d in self.decision_vars() {
            if pos[d as usize] == usize::MAX {
                return Err(KcError::ProjectionMissesDecision(d));
            }
        }
        let p = projection.len();
        let mut sets: Vec<BitSet> = Vec::with_capacity(self.nodes.len());
        let mut counts: Vec<u128> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let mut s = BitSet::new(p);
            let c = match node {
                NnfNode::True => 1,
                NnfNode::False => 0,
                NnfNode::Lit(l) => {
                    let i = pos[l.unsigned_abs() as usize];
                    if i != usize::MAX {
                        s.insert(i);
                    }
                    1
                }
                NnfNode::And(ch) => {
                    let mut c: u128 = 1;
                    for &k in ch {
                        s.union_with(&sets[k as usize]);
                        c = c.saturating_mul(counts[k as usize]);
                    }
                    c
                }
                NnfNode::Or { children, .. } => {
                    for &k in children {
                        s.union_with(&sets[k as usize]);
                    }
                    let total = s.count();
                    children
                        .iter()
                        .map(|&k| {
                            let gap = total - sets[k as usize].count();
                            counts[k as usize].saturating_mul(1u128 << gap)
                        })
                        .fold(0u128, u128::saturating_add)
                }
            };
            sets.push(s);
            counts.push(c);
        }
        let r = self.root as usize;
        let gap = p - sets[r].count();
        Ok(counts[r].saturating_mul(1u128 << gap))
    }

    /// c2d-compatible NNF text.
    pub fn to_nnf(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nnf {} {} {}", self.nodes.len(), self.num_edges(), self.num_vars);
        for node in &self.nodes {
            match node {
                NnfNode::True => out.push_str("A 0\n"),
                NnfNode::False => out.push_str("O 0 0\n"),
                NnfNode::Lit(l) => {
                    let _ = writeln!(out, "L {l}");
                }
                NnfNode::And(c) => {
                    let _ = write!(out, "A {}", c.len());
                    for k in c {
                        let _ = write!(out, " {k}");
                    }
                    out.push('\n');
                }
                NnfNode::Or { decision, children } => {
                    let _ = writeln!(out, "O {decision} 2 {} {}", children[0], children[1]);
                }
            }
        }
        out
    }
}

/// Parses c2d NNF text. The last node is the root. The result is checked for
/// decomposability and determinism.
pub fn import_nnf(text: &str) -> Result<Ddnnf> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('c'));
    let bad = |line: usize, message: String| KcError::NnfSyntax { line, message };
    let (hl, header) = lines.next().ok_or_else(|| bad(0, "empty file".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 || h[0] != "nnf" {
        return Err(bad(hl, "expected `nnf v e n` header".into()));
    }
    let num = |line: usize, t: &str| t.parse::<i64>().map_err(|_| bad(line, format!("bad number `{t}`")));
    let count = num(hl, h[1])? as usize;
    let num_vars = num(hl, h[3])? as u32;
    let mut nodes: Vec<NnfNode> = Vec::with_capacity(count);
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let child = |t: &str, nodes: &Vec<NnfNode>| -> Result<NodeId> {
            let k = num(ln, t)?;
            if k < 0 || k as usize >= nodes.len() {
                return Err(bad(ln, format!("child {k} is not an earlier node")));
            }
            Ok(k as NodeId)
        };
        let node = match toks.first().copied() {
            Some("L") if toks.len() == 2 => {
                let l = num(ln, toks[1])?;
                if l == 0 || l.unsigned_abs() > num_vars as u64 {
                    return Err(bad(ln, format!("literal {l} out of range")));
                }
                NnfNode::Lit(l as Lit)
            }
            Some("A") if toks.len() >= 2 => {
                let k = num(ln, toks[1])? as usize;
                if toks.len() != k + 2 {
                    return Err(bad(ln, format!("AND declares {k} children")));
                }
                if k == 0 {
                    NnfNode::True
                } else {
                    NnfNode::And(toks[2..].iter().map(|t| child(t, &nodes)).collect::<Result<_>>()?)
                }
            }
            Some("O") if toks.len() >= 3 => {
                let j = num(ln, toks[1])?;
                let k = num(ln, toks[2])? as usize;
                if toks.len() != k + 3 {
                    return Err(bad(ln, format!("OR declares {k} children")));
                }
                match k {
                    0 => NnfNode::False,
                    2 => NnfNode::Or {
                        decision: j as u32,
                        children: [child(toks[3], &nodes)?, child(toks[4], &nodes)?],
                    },
                    _ => return Err(bad(ln, format!("OR with {k} children is not a decision node"))),
                }
            }
            _ => return Err(bad(ln, format!("malformed line `{line}`"))),
        };
        nodes.push(node);
    }
    if nodes.len() != count || nodes.is_empty() {
        return Err(bad(0, format!("header declares {count} nodes, found {}", nodes.len())));
    }
    let root = nodes.len() as NodeId - 1;
    let d = Ddnnf::from_raw(nodes, root, num_vars);
    d.check()?;
    Ok(d)
}
