use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ddnnf::{Ddnnf, NnfNode};
use super::{KcError, Result};
use crate::bn::{BayesianNetwork, VarId};
use crate::encoder::{BitSet, OrderingConstraintSet, Role, VarMap};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AcNode {
    Indicator { var: VarId, value: usize },
    /// Leaf for CPT entry `index` of the global parameter layout of `var`.
    Parameter { index: usize, var: VarId },
    One,
    Zero,
    Product(Vec<u32>),
    Sum { children: Vec<u32>, split: Option<VarId> },
}

/// Arithmetic circuit over indicator and parameter leaves, children before
/// parents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArithmeticCircuit {
    pub(crate) nodes: Vec<AcNode>,
    pub(crate) root: u32,
    /// Cardinality of every network variable.
    pub(crate) cards: Vec<usize>,
    pub(crate) num_params: usize,
}

#[derive(Default)]
struct AcBuilder {
    nodes: Vec<AcNode>,
    index: HashMap<AcNode, u32>,
}

impl AcBuilder {
    fn add(&mut self, node: AcNode) -> u32 {
        if let Some(&i) = self.index.get(&node) {
            return i;
        }
        let i = self.nodes.len() as u32;
        self.nodes.push(node.clone());
        self.index.insert(node, i);
        i
    }

    fn product(&mut self, children: Vec<u32>) -> u32 {
        let mut kept = Vec::with_capacity(children.len());
        for c in children {
            match self.nodes[c as usize] {
                AcNode::Zero => return self.add(AcNode::Zero),
                AcNode::One => {}
                _ => kept.push(c),
            }
        }
        kept.sort_unstable();
        match kept.len() {
            0 => self.add(AcNode::One),
            1 => kept[0],
            _ => self.add(AcNode::Product(kept)),
        }
    }

    fn sum(&mut self, children: Vec<u32>, split: Option<VarId>) -> u32 {
        let kept: Vec<u32> = children
            .into_iter()
            .filter(|&c| self.nodes[c as usize] != AcNode::Zero)
            .collect();
        match kept.len() {
            0 => self.add(AcNode::Zero),
            1 => kept[0],
            _ => self.add(AcNode::Sum { children: kept, split }),
        }
    }
}

impl ArithmeticCircuit {
    /// Checks that children precede parents and leaves are in range.
    pub fn from_parts(nodes: Vec<AcNode>, root: u32, cards: Vec<usize>, num_params: usize) -> Result<Self> {
        let bad = |m: String| Err(KcError::InvalidCircuit(m));
        if root as usize >= nodes.len() {
            return bad(format!("root {root} out of range"));
        }
        for (i, n) in nodes.iter().enumerate() {
            match n {
                AcNode::Indicator { var, value } if *var >= cards.len() || *value >= cards[*var] => {
                    return bad(format!("node {i}: indicator out of range"))
                }
                AcNode::Parameter { index, var } if *index >= num_params || *var >= cards.len() => {
                    return bad(format!("node {i}: parameter out of range"))
                }
                AcNode::Product(c) | AcNode::Sum { children: c, .. } if c.iter().any(|&k| k as usize >= i) => {
                    return bad(format!("node {i} references a later node"))
                }
                AcNode::Sum { children, .. } if children.is_empty() => return bad(format!("node {i}: empty sum")),
                _ => {}
            }
        }
        Ok(ArithmeticCircuit {
            nodes,
            root,
            cards,
            num_params,
        })
    }

    pub fn nodes(&self) -> &[AcNode] {
        &self.nodes
    }

    pub fn root(&self) -> u32 {
        self.root
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn num_edges(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n {
                AcNode::Product(c) | AcNode::Sum { children: c, .. } => c.len(),
                _ => 0,
            })
            .sum()
    }

    pub fn children(&self, id: u32) -> &[u32] {
        match &self.nodes[id as usize] {
            AcNode::Product(c) | AcNode::Sum { children: c, .. } => c,
            _ => &[],
        }
    }

    /// Network variables split by any sum node.
    pub fn split_vars(&self) -> Vec<VarId> {
        let mut out: Vec<VarId> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                AcNode::Sum { split: Some(v), .. } => Some(*v),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Indicator variables mentioned below every node.
    fn mentioned(&self) -> Vec<BitSet> {
        let n = self.cards.len();
        let mut sets: Vec<BitSet> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let mut s = BitSet::new(n);
            match node {
                AcNode::Indicator { var, .. } => s.insert(*var),
                AcNode::Product(c) | AcNode::Sum { children: c, .. } => {
                    c.iter().for_each(|&k| s.union_with(&sets[k as usize]))
                }
                _ => {}
            }
            sets.push(s);
        }
        sets
    }

    /// Split variables of sum nodes strictly below each node.
    fn splits_below(&self) -> Vec<BitSet> {
        let n = self.cards.len();
        let mut sets: Vec<BitSet> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let mut s = BitSet::new(n);
            for &k in self.children_of(node) {
                s.union_with(&sets[k as usize]);
                if let AcNode::Sum { split: Some(v), .. } = self.nodes[k as usize] {
                    s.insert(v);
                }
            }
            sets.push(s);
        }
        sets
    }

    fn children_of<'n>(&self, node: &'n AcNode) -> &'n [u32] {
        match node {
            AcNode::Product(c) | AcNode::Sum { children: c, .. } => c,
            _ => &[],
        }
    }

    /// A root-to-node path, if `target` is reachable.
    fn path(&self, from: u32, target: u32) -> Option<Vec<u32>> {
        let mut parent: HashMap<u32, u32> = HashMap::new();
        let mut stack = vec![from];
        let mut seen = std::collections::HashSet::new();
        seen.insert(from);
        while let Some(n) = stack.pop() {
            if n == target {
                let mut p = vec![n];
                let mut cur = n;
                while let Some(&q) = parent.get(&cur) {
                    p.push(q);
                    cur = q;
                }
                p.reverse();
                return Some(p);
            }
            for &c in self.children(n) {
                if seen.insert(c) {
                    parent.insert(c, n);
                    stack.push(c);
                }
            }
        }
        None
    }
}

/// d-DNNF to arithmetic circuit. Every OR must decide an indicator.
pub fn to_ac(ddnnf: &Ddnnf, map: &VarMap, bn: &BayesianNetwork) -> Result<ArithmeticCircuit> {
    let roles = map.roles(bn)?;
    let role = |v: u32| roles[v as usize - 1];
    let mut b = AcBuilder::default();
    let mut out = Vec::with_capacity(ddnnf.nodes().len());
    for (i, node) in ddnnf.nodes().iter().enumerate() {
        let id = match node {
            NnfNode::True => b.add(AcNode::One),
            NnfNode::False => b.add(AcNode::Zero),
            NnfNode::Lit(l) if *l < 0 => b.add(AcNode::One),
            NnfNode::Lit(l) => match role(*l as u32) {
                Role::Indicator { var, value } => b.add(AcNode::Indicator { var, value }),
                Role::Parameter { index, var, .. } => b.add(AcNode::Parameter { index, var }),
                Role::Intermediate => b.add(AcNode::One),
            },
            NnfNode::And(c) => b.product(c.iter().map(|&k| out[k as usize]).collect()),
            NnfNode::Or { decision, children } => {
                let Role::Indicator { var, .. } = role(*decision) else {
                    return Err(KcError::NonIndicatorSplit {
                        node: i,
                        symbol: map.symbol(*decision).to_string(),
                    });
                };
                b.sum(children.iter().map(|&k| out[k as usize]).collect(), Some(var))
            }
        };
        out.push(id);
    }
    let root = out[ddnnf.root() as usize];
    Ok(compact(
        b.nodes,
        root,
        (0..bn.num_vars()).map(|v| bn.cardinality(v)).collect(),
        bn.num_params(),
    ))
}

fn compact(nodes: Vec<AcNode>, root: u32, cards: Vec<usize>, num_params: usize) -> ArithmeticCircuit {
    let mut reach = vec![false; nodes.len()];
    reach[root as usize] = true;
    for i in (0..nodes.len()).rev() {
        if reach[i] {
            if let AcNode::Product(c) | AcNode::Sum { children: c, .. } = &nodes[i] {
                c.iter().for_each(|&k| reach[k as usize] = true);
            }
        }
    }
    let mut remap = vec![u32::MAX; nodes.len()];
    let mut kept = Vec::new();
    for (i, n) in nodes.into_iter().enumerate() {
        if !reach[i] {
            continue;
        }
        remap[i] = kept.len() as u32;
        kept.push(match n {
            AcNode::Product(c) => AcNode::Product(c.iter().map(|&k| remap[k as usize]).collect()),
            AcNode::Sum { children, split } => AcNode::Sum {
                children: children.iter().map(|&k| remap[k as usize]).collect(),
                split,
            },
            other => other,
        });
    }
    ArithmeticCircuit {
        root: remap[root as usize],
        nodes: kept,
        cards,
        num_params,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrderingViolation {
    /// `V_j`, whose sum node sits too low.
    pub above: VarId,
    /// `V_i`, whose sum node dominates it.
    pub below: VarId,
    /// Root to the `V_i` sum node, then on to the `V_j` sum node.
    pub path: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct OrderingReport {
    pub violations: Vec<OrderingViolation>,
}

impl OrderingReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For each constraint `(V_j, V_i)`, verifies that no sum splitting `V_j`
/// is a descendant of a sum splitting `V_i`. One violation is reported per
/// violated constraint.
pub fn check_ordering(ac: &ArithmeticCircuit, constraints: &OrderingConstraintSet) -> OrderingReport {
    let below = ac.splits_below();
    let mut report = OrderingReport::default();
    for (vj, vi) in constraints.pairs() {
        if vj >= ac.cards.len() || vi >= ac.cards.len() {
            continue;
        }
        let hit = ac.nodes.iter().enumerate().find(|(i, n)| {
            matches!(n, AcNode::Sum { split: Some(s), .. } if *s == vi) && below[*i].contains(vj)
        });
        if let Some((upper, _)) = hit {
            let upper = upper as u32;
            let lower = (0..ac.nodes.len() as u32)
                .find(|&k| {
                    matches!(ac.nodes[k as usize], AcNode::Sum { split: Some(s), .. } if s == vj)
                        && k < upper
                        && ac.path(upper, k).is_some()
                })
                .expect("a splitting descendant exists");
            let mut path = ac.path(ac.root, upper).unwrap_or_default();
            if let Some(rest) = ac.path(upper, lower) {
                path.extend_from_slice(&rest[1..]);
            }
            report.violations.push(OrderingViolation {
                above: vj,
                below: vi,
                path,
            });
        }
    }
    report
}

/// Makes every sum node smooth: each child mentions the same network
/// variables. Missing variables are added with `Σ_v λ_{V=v}` gadgets, which
/// must not end up below a sum splitting some `V_i` with `(V, V_i)`
/// constrained. Returns the input unchanged when it is already smooth.
pub fn ensure_smooth(ac: &ArithmeticCircuit, constraints: &OrderingConstraintSet) -> Result<ArithmeticCircuit> {
    let mentioned = ac.mentioned();
    let needs = ac.nodes.iter().enumerate().any(|(i, n)| match n {
        AcNode::Sum { children, .. } => children
            .iter()
            .any(|&c| mentioned[c as usize].count() != mentioned[i].count()),
        _ => false,
    });
    if !needs {
        return Ok(ac.clone());
    }
    // Splits on any path from the root down to each node, inclusive.
    let n = ac.cards.len();
    let mut above: Vec<BitSet> = vec![BitSet::new(n); ac.nodes.len()];
    for i in (0..ac.nodes.len()).rev() {
        let mut here = above[i].clone();
        if let AcNode::Sum { split: Some(s), .. } = ac.nodes[i] {
            here.insert(s);
        }
        for &c in ac.children(i as u32) {
            above[c as usize].union_with(&here);
        }
    }
    let mut b = AcBuilder::default();
    let mut map = Vec::with_capacity(ac.nodes.len());
    let mut gadgets: HashMap<VarId, u32> = HashMap::new();
    for (i, node) in ac.nodes.iter().enumerate() {
        let id = match node {
            AcNode::Product(c) => b.product(c.iter().map(|&k| map[k as usize]).collect()),
            AcNode::Sum { children, split } => {
                let mut kids = Vec::with_capacity(children.len());
                for &c in children {
                    let missing: Vec<VarId> = mentioned[i]
                        .iter()
                        .filter(|&v| !mentioned[c as usize].contains(v))
                        .collect();
                    let mut factors = vec![map[c as usize]];
                    for v in missing {
                        let mut ctx = above[i].clone();
                        if let Some(s) = split {
                            ctx.insert(*s);
                        }
                        if let Some((_, vi)) = constraints.pairs().find(|&(vj, vi)| vj == v && ctx.contains(vi)) {
                            return Err(KcError::SmoothingViolation { var: v, above: vi });
                        }
                        let g = *gadgets.entry(v).or_insert_with(|| {
                            let leaves = (0..ac.cards[v])
                                .map(|x| b.add(AcNode::Indicator { var: v, value: x }))
                                .collect();
                            b.sum(leaves, Some(v))
                        });
                        factors.push(g);
                    }
                    kids.push(b.product(factors));
                }
                b.sum(kids, *split)
            }
            leaf => b.add(leaf.clone()),
        };
        map.push(id);
    }
    Ok(compact(b.nodes, map[ac.root as usize], ac.cards.clone(), ac.num_params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ac(nodes: Vec<AcNode>, cards: Vec<usize>) -> ArithmeticCircuit {
        let root = nodes.len() as u32 - 1;
        ArithmeticCircuit {
            nodes,
            root,
            cards,
            num_params: 0,
        }
    }

    /// Sum over X with a W split below each branch: X at the root.
    fn nested() -> ArithmeticCircuit {
        use AcNode::*;
        ac(
            vec![
                Indicator { var: 0, value: 0 },
                Indicator { var: 0, value: 1 },
                Indicator { var: 1, value: 0 },
                Indicator { var: 1, value: 1 },
                Sum {
                    children: vec![2, 3],
                    split: Some(1),
                },
                Product(vec![0, 4]),
                Product(vec![1, 4]),
                Sum {
                    children: vec![5, 6],
                    split: Some(0),
                },
            ],
            vec![2, 2],
        )
    }

    #[test]
    fn ordering_checks() {
        let c = nested();
        assert!(check_ordering(&c, &OrderingConstraintSet::from_pairs([(0, 1)])).passed());
        let r = check_ordering(&c, &OrderingConstraintSet::from_pairs([(1, 0)]));
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].path.first(), Some(&c.root()));
        let flat = ac(vec![AcNode::Indicator { var: 0, value: 0 }], vec![2]);
        assert!(check_ordering(&flat, &OrderingConstraintSet::from_pairs([(0, 0)])).passed());
    }

    #[test]
    fn smooth_circuit_is_unchanged() {
        let c = nested();
        assert_eq!(ensure_smooth(&c, &OrderingConstraintSet::new()).unwrap(), c);
    }

    #[test]
    fn smoothing_adds_gadget() {
        use AcNode::*;
        // λx0·λw0 + λx1: the second branch lacks W.
        let c = ac(
            vec![
                Indicator { var: 0, value: 0 },
                Indicator { var: 0, value: 1 },
                Indicator { var: 1, value: 0 },
                Product(vec![0, 2]),
                Sum {
                    children: vec![3, 1],
                    split: Some(0),
                },
            ],
            vec![2, 2],
        );
        let s = ensure_smooth(&c, &OrderingConstraintSet::new()).unwrap();
        assert!(s.nodes().iter().any(|n| matches!(n, Sum { split: Some(1), .. })));
        // W's gadget would sit below the X split; forbidden if W must be above X.
        let err = ensure_smooth(&c, &OrderingConstraintSet::from_pairs([(1, 0)])).unwrap_err();
        assert!(matches!(err, KcError::SmoothingViolation { var: 1, above: 0 }));
    }
}
