use super::{BooleanCircuit, Gate, Operand};
use crate::encoder::{CnfFormula, Symbol, VarMap};

/// Tseitin encoding. CNF variables `1..=m` are the circuit inputs in order,
/// followed by one variable per gate. The output is asserted by a unit clause.
pub fn tseitin(circuit: &BooleanCircuit) -> (CnfFormula, VarMap) {
    let mut map = VarMap::new();
    for ind in circuit.inputs() {
        map.push(Symbol::indicator(&ind.variable, &ind.value));
    }
    let first_gate = map.len() as i32 + 1;
    for k in 0..circuit.num_gates() {
        map.push(Symbol::Intermediate { gate: k });
    }
    let lit = |op: &Operand| match *op {
        Operand::Input(i) => i as i32 + 1,
        Operand::Gate(g) => first_gate + g as i32,
    };
    let mut cnf = CnfFormula::new(map.len() as u32);
    for (k, gate) in circuit.gates().iter().enumerate() {
        let g = first_gate + k as i32;
        match gate {
            Gate::And(ops) => {
                for op in ops {
                    cnf.add_clause(vec![-g, lit(op)]);
                }
                let mut big: Vec<i32> = ops.iter().map(|op| -lit(op)).collect();
                big.push(g);
                cnf.add_clause(big);
            }
            Gate::Or(ops) => {
                for op in ops {
                    cnf.add_clause(vec![g, -lit(op)]);
                }
                let mut big: Vec<i32> = ops.iter().map(lit).collect();
                big.push(-g);
                cnf.add_clause(big);
            }
            Gate::Not(op) => {
                cnf.add_clause(vec![-g, -lit(op)]);
                cnf.add_clause(vec![g, lit(op)]);
            }
        }
    }
    cnf.add_clause(vec![lit(&circuit.output())]);
    (cnf, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::parse_circuit;

    /// Projected models by brute force over all assignments.
    fn projected_models(cnf: &CnfFormula, inputs: usize) -> Vec<Vec<bool>> {
        let n = cnf.num_vars() as usize;
        let mut out = Vec::new();
        for mask in 0u64..(1 << n) {
            let val = |l: i32| {
                let b = mask >> (l.unsigned_abs() - 1) & 1 == 1;
                if l > 0 {
                    b
                } else {
                    !b
                }
            };
            if cnf.clauses().iter().all(|c| c.iter().any(|&l| val(l))) {
                let proj: Vec<bool> = (0..inputs).map(|i| mask >> i & 1 == 1).collect();
                if !out.contains(&proj) {
                    out.push(proj);
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn or_gate_clauses() {
        let c = parse_circuit("I X=1\nI W=1\nG0 OR I0 I1\nOUT G0").unwrap();
        let (cnf, map) = tseitin(&c);
        assert_eq!(cnf.num_vars(), 3);
        assert_eq!(map.symbol(3), &Symbol::Intermediate { gate: 0 });
        // Three defining clauses and the output assertion.
        assert_eq!(cnf.num_clauses(), 4);
        let models = projected_models(&cnf, 2);
        assert_eq!(models, vec![vec![false, true], vec![true, false], vec![true, true]]);
    }

    #[test]
    fn not_gate() {
        let c = parse_circuit("I X=1\nG0 NOT I0\nOUT G0").unwrap();
        let (cnf, _) = tseitin(&c);
        assert_eq!(cnf.num_clauses(), 3);
        assert_eq!(projected_models(&cnf, 1), vec![vec![false]]);
    }

    #[test]
    fn projection_equals_truth_table() {
        let text = "I A=1\nI B=1\nI C=1\nG0 AND I0 I1\nG1 NOT I2\nG2 OR G0 G1\nG3 AND\nG4 AND G2 G3\nOUT G4";
        let c = parse_circuit(text).unwrap();
        let (cnf, _) = tseitin(&c);
        let mut expected = Vec::new();
        for m in 0..8u32 {
            let x: Vec<bool> = (0..3).map(|i| m >> i & 1 == 1).collect();
            if c.eval(&x) {
                expected.push(x);
            }
        }
        expected.sort();
        assert_eq!(projected_models(&cnf, 3), expected);
    }
}
