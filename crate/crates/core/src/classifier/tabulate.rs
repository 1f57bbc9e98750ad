use std::collections::BTreeMap;

use super::{BooleanCircuit, CircuitBuilder, CircuitError, Operand, Result};
use crate::bn::Variable;

/// Builds a decision circuit from an explicit table `x -> ŷ` (value indices).
/// Each class gets a disjunction with one conjunction term per row.
pub fn tabulate_to_circuit(
    features: &[Variable],
    target: &Variable,
    table: &BTreeMap<Vec<usize>, usize>,
) -> Result<BooleanCircuit> {
    if features.is_empty() {
        return Err(CircuitError::EmptyFeatures);
    }
    let mut b = CircuitBuilder::new();
    for v in &target.values {
        b.input(&target.name, v);
    }
    let mut terms: Vec<Vec<Operand>> = vec![Vec::new(); target.values.len()];
    let mut x = vec![0usize; features.len()];
    loop {
        let Some(&y) = table.get(&x) else {
            let labels = x
                .iter()
                .zip(features)
                .map(|(&v, f)| format!("{}={}", f.name, f.values[v]))
                .collect();
            return Err(CircuitError::PartialTable(labels));
        };
        if y >= target.values.len() {
            return Err(CircuitError::InvalidModel(format!("prediction index {y} out of range")));
        }
        let lits = x
            .iter()
            .zip(features)
            .map(|(&v, f)| b.input(&f.name, &f.values[v]))
            .collect();
        let term = b.and(lits);
        terms[y].push(term);
        // Odometer, last feature fastest.
        let mut k = features.len();
        loop {
            if k == 0 {
                let class_fns = terms.into_iter().map(|t| b.or(t)).collect();
                let feats: Vec<(&str, Vec<&str>)> = features
                    .iter()
                    .map(|f| (f.name.as_str(), f.values.iter().map(String::as_str).collect()))
                    .collect();
                let feats: Vec<(&str, &[&str])> = feats.iter().map(|(n, v)| (*n, v.as_slice())).collect();
                let tv: Vec<&str> = target.values.iter().map(String::as_str).collect();
                return Ok(b.decision_multi(&feats, &target.name, &tv, class_fns));
            }
            k -= 1;
            x[k] += 1;
            if x[k] < features[k].values.len() {
                break;
            }
            x[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn bin(name: &str) -> Variable {
        Variable::new(name, &["0", "1"])
    }

    #[test]
    fn xor_table() {
        let table: BTreeMap<Vec<usize>, usize> = [(vec![0, 0], 0), (vec![0, 1], 1), (vec![1, 0], 1), (vec![1, 1], 0)]
            .into_iter()
            .collect();
        let c = tabulate_to_circuit(&[bin("A"), bin("B")], &bin("Y"), &table).unwrap();
        for (x, y) in &table {
            let a: HashMap<String, String> = [("A".to_string(), x[0].to_string()), ("B".to_string(), x[1].to_string())]
                .into_iter()
                .collect();
            assert_eq!(c.predict("Y", &a).unwrap(), y.to_string());
        }
    }

    #[test]
    fn partial_table_is_an_error() {
        let table: BTreeMap<Vec<usize>, usize> = [(vec![0], 0)].into_iter().collect();
        assert!(matches!(
            tabulate_to_circuit(&[bin("A")], &bin("Y"), &table),
            Err(CircuitError::PartialTable(_))
        ));
    }
}
