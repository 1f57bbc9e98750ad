use super::{BitSet, CnfFormula};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtreeNode {
    Leaf { clause: usize },
    Internal { left: usize, right: usize },
}

/// Binary tree over the clauses of a CNF, built from an elimination order.
#[derive(Debug, Clone)]
pub struct Dtree {
    nodes: Vec<DtreeNode>,
    root: Option<usize>,
    order: Vec<u32>,
    num_vars: usize,
    vars: Vec<BitSet>,
}

impl Dtree {
    pub fn nodes(&self) -> &[DtreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    /// The elimination order the tree was built from.
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    /// CNF variables (1-based) appearing under `node`.
    pub fn vars(&self, node: usize) -> Vec<u32> {
        self.vars[node].iter().map(|v| v as u32 + 1).collect()
    }

    /// Cutset of every node: variables shared by the two children and not
    /// already cut by an ancestor. Leaves have empty cutsets.
    pub fn cutsets(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        let Some(root) = self.root else {
            return out;
        };
        let mut stack = vec![(root, BitSet::new(self.num_vars))];
        while let Some((n, above)) = stack.pop() {
            if let DtreeNode::Internal { left, right } = self.nodes[n] {
                let shared = self.vars[left].intersection(&self.vars[right]);
                let cut: Vec<usize> = shared.iter().filter(|&v| !above.contains(v)).collect();
                out[n] = cut.iter().map(|&v| v as u32 + 1).collect();
                let mut below = above.clone();
                for v in cut {
                    below.insert(v);
                }
                stack.push((left, below.clone()));
                stack.push((right, below));
            }
        }
        out
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, DtreeNode::Leaf { .. }))
            .count()
    }
}

/// Bucket-elimination construction: for each variable in order, the trees
/// mentioning it are composed into one.
pub fn build_dtree(cnf: &CnfFormula, order: &[u32]) -> Dtree {
    let n = cnf.num_vars() as usize;
    let mut nodes = Vec::new();
    let mut vars = Vec::new();
    let mut pool: Vec<usize> = Vec::new();
    for (i, c) in cnf.clauses().iter().enumerate() {
        let mut set = BitSet::new(n);
        for &l in c {
            set.insert(l.unsigned_abs() as usize - 1);
        }
        nodes.push(DtreeNode::Leaf { clause: i });
        vars.push(set);
        pool.push(i);
    }
    let compose = |trees: Vec<usize>, nodes: &mut Vec<DtreeNode>, vars: &mut Vec<BitSet>| -> usize {
        // Pairwise rounds keep the composition balanced.
        let mut level = trees;
        while level.len() > 1 {
            let mut next = Vec::with_capacity(level.len().div_ceil(2));
            for pair in level.chunks(2) {
                if let [a, b] = *pair {
                    let mut s = vars[a].clone();
                    s.union_with(&vars[b]);
                    nodes.push(DtreeNode::Internal { left: a, right: b });
                    vars.push(s);
                    next.push(nodes.len() - 1);
                } else {
                    next.push(pair[0]);
                }
            }
            level = next;
        }
        level[0]
    };
    for &v in order {
        let v = v as usize - 1;
        let (hit, rest): (Vec<usize>, Vec<usize>) = pool.iter().partition(|&&t| vars[t].contains(v));
        if hit.len() > 1 {
            let t = compose(hit, &mut nodes, &mut vars);
            pool = rest;
            pool.push(t);
        }
    }
    let root = if pool.is_empty() {
        None
    } else {
        Some(compose(pool, &mut nodes, &mut vars))
    };
    Dtree {
        nodes,
        root,
        order: order.to_vec(),
        num_vars: n,
        vars,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_clauses_sharing_a_variable() {
        let mut f = CnfFormula::new(3);
        f.add_clause(vec![1, 2]);
        f.add_clause(vec![-2, 3]);
        let t = build_dtree(&f, &[1, 3, 2]);
        assert_eq!(t.nodes().len(), 3);
        let root = t.root().unwrap();
        assert_eq!(t.cutsets()[root], vec![2]);
        assert_eq!(t.num_leaves(), 2);
    }

    #[test]
    fn single_clause_is_a_leaf() {
        let mut f = CnfFormula::new(2);
        f.add_clause(vec![1, 2]);
        let t = build_dtree(&f, &[1, 2]);
        assert_eq!(t.nodes().len(), 1);
        assert!(matches!(t.nodes()[t.root().unwrap()], DtreeNode::Leaf { clause: 0 }));
    }
}
