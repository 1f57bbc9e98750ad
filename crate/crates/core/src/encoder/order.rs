use super::{BitSet, CnfFormula, EncodeError, OrderingConstraintSet, Result, Role};

fn interaction_graph(cnf: &CnfFormula) -> Vec<BitSet> {
    let n = cnf.num_vars() as usize;
    let mut adj = vec![BitSet::new(n); n];
    for c in cnf.clauses() {
        for (i, &a) in c.iter().enumerate() {
            for &b in &c[i + 1..] {
                let (a, b) = (a.unsigned_abs() as usize - 1, b.unsigned_abs() as usize - 1);
                if a != b {
                    adj[a].insert(b);
                    adj[b].insert(a);
                }
            }
        }
    }
    adj
}

fn fill_in(adj: &[BitSet], v: usize) -> usize {
    let nbrs: Vec<usize> = adj[v].iter().collect();
    let mut missing = 0;
    for &a in &nbrs {
        // Neighbours of v not adjacent to a, excluding a itself.
        missing += adj[v].difference_count(&adj[a]) - 1;
    }
    missing / 2
}

/// Removes `v`, connecting its neighbours. Returns true if edges were added.
fn eliminate(adj: &mut [BitSet], v: usize) -> bool {
    let nbrs: Vec<usize> = adj[v].iter().collect();
    let mut added = false;
    for &a in &nbrs {
        let before = adj[a].count();
        let nv = adj[v].clone();
        adj[a].union_with(&nv);
        adj[a].remove(a);
        adj[a].remove(v);
        added |= adj[a].count() + 1 != before;
    }
    adj[v] = BitSet::new(adj.len());
    added
}

/// Constrained min-fill. Phases are strict: parameters, then intermediates,
/// then indicators. Within the indicator phase, the indicators of a network
/// variable `V_j` become eligible only once every `V_i` with `(V_j, V_i)` in
/// `constraints` is fully eliminated. Ties go to the lowest CNF variable.
/// Returns CNF variables (1-based) in elimination order.
pub fn constrained_minfill(cnf: &CnfFormula, roles: &[Role], constraints: &OrderingConstraintSet) -> Result<Vec<u32>> {
    let n = cnf.num_vars() as usize;
    assert_eq!(roles.len(), n, "one role per CNF variable");
    let num_net = roles
        .iter()
        .filter_map(Role::network_var)
        .chain(constraints.pairs().flat_map(|(a, b)| [a, b]))
        .max()
        .map_or(0, |m| m + 1);
    if let Some(cycle) = constraints.find_cycle(num_net) {
        return Err(EncodeError::Infeasible(cycle.iter().map(|v| v.to_string()).collect()));
    }
    let phase = |r: &Role| match r {
        Role::Parameter { .. } => 0,
        Role::Intermediate => 1,
        Role::Indicator { .. } => 2,
    };
    // remaining[V]: indicators of V not yet eliminated.
    let mut remaining = vec![0usize; num_net];
    for r in roles {
        if let Role::Indicator { var, .. } = r {
            remaining[*var] += 1;
        }
    }
    let mut blockers: Vec<Vec<usize>> = vec![Vec::new(); num_net];
    for (above, below) in constraints.pairs() {
        blockers[above].push(below);
    }
    let mut adj = interaction_graph(cnf);
    let mut fill: Vec<usize> = (0..n).map(|v| fill_in(&adj, v)).collect();
    let mut dirty = vec![false; n];
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for current in 0..3 {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for v in 0..n {
                if done[v] || phase(&roles[v]) != current {
                    continue;
                }
                if let Role::Indicator { var, .. } = roles[v] {
                    if blockers[var].iter().any(|&b| remaining[b] > 0) {
                        continue;
                    }
                }
                if dirty[v] {
                    fill[v] = fill_in(&adj, v);
                    dirty[v] = false;
                }
                if best.is_none_or(|(f, _)| fill[v] < f) {
                    best = Some((fill[v], v));
                }
            }
            let Some((_, v)) = best else {
                break;
            };
            let nbrs: Vec<usize> = adj[v].iter().collect();
            let added = eliminate(&mut adj, v);
            for &a in &nbrs {
                dirty[a] = true;
                if added {
                    for b in adj[a].iter() {
                        dirty[b] = true;
                    }
                }
            }
            done[v] = true;
            if let Role::Indicator { var, .. } = roles[v] {
                remaining[var] -= 1;
            }
            order.push(v as u32 + 1);
        }
    }
    if order.len() != n {
        // Only reachable if an indicator is blocked forever.
        return Err(EncodeError::Infeasible(Vec::new()));
    }
    Ok(order)
}

/// Largest number of neighbours a variable has when it is eliminated.
pub fn order_width(cnf: &CnfFormula, order: &[u32]) -> usize {
    let mut adj = interaction_graph(cnf);
    let mut width = 0;
    for &v in order {
        let v = v as usize - 1;
        width = width.max(adj[v].count());
        eliminate(&mut adj, v);
    }
    width
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cnf(n: u32, clauses: &[&[i32]]) -> CnfFormula {
        let mut f = CnfFormula::new(n);
        for c in clauses {
            f.add_clause(c.to_vec());
        }
        f
    }

    fn indicators(n: usize) -> Vec<Role> {
        (0..n).map(|v| Role::Indicator { var: v, value: 0 }).collect()
    }

    #[test]
    fn chain_width() {
        let f = cnf(3, &[&[1, 2], &[2, 3]]);
        assert_eq!(order_width(&f, &[1, 2, 3]), 1);
    }

    #[test]
    fn clique_width() {
        let f = cnf(4, &[&[1, 2, 3, 4]]);
        assert_eq!(order_width(&f, &[2, 4, 1, 3]), 3);
        assert_eq!(order_width(&f, &[1, 2, 3, 4]), 3);
    }

    #[test]
    fn clique_has_zero_fill() {
        let f = cnf(3, &[&[1, 2, 3]]);
        let order = constrained_minfill(&f, &indicators(3), &OrderingConstraintSet::new()).unwrap();
        assert_eq!(order, vec![1, 2, 3]);
    }

    #[test]
    fn cyclic_constraints_are_infeasible() {
        let f = cnf(2, &[&[1, 2]]);
        let c = OrderingConstraintSet::from_pairs([(0, 1), (1, 0)]);
        assert!(matches!(
            constrained_minfill(&f, &indicators(2), &c),
            Err(EncodeError::Infeasible(_))
        ));
    }

    #[test]
    fn constraints_and_phases_hold() {
        // Star around variable 1 would be eliminated late by min-fill; the
        // constraint (A=var0 above B=var1) forces 2 (var1) before 1 (var0).
        let f = cnf(4, &[&[1, 2], &[1, 3], &[1, 4], &[3, 4]]);
        let roles = vec![
            Role::Indicator { var: 0, value: 0 },
            Role::Indicator { var: 1, value: 0 },
            Role::Intermediate,
            Role::Parameter {
                index: 0,
                var: 0,
                row: 0,
                value: 0,
            },
        ];
        let c = OrderingConstraintSet::from_pairs([(0, 1)]);
        let order = constrained_minfill(&f, &roles, &c).unwrap();
        assert_eq!(order, vec![4, 3, 2, 1]);
    }
}
