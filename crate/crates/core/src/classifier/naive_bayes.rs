use std::collections::HashMap;

use super::{BooleanCircuit, CircuitBuilder, CircuitError, Operand, Result};
use crate::bn::{BayesianNetwork, Evidence, Variable};

/// Floor applied to probabilities before taking logs.
pub const PROBABILITY_FLOOR: f64 = 1e-12;
/// Partial sums closer than this are treated as equal.
const MERGE_TOLERANCE: f64 = 1e-12;
const MAX_SUFFIX_SUMS: usize = 1 << 24;

/// Binary naive Bayes classifier. Class 1 is `target.values[1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel {
    pub target: Variable,
    pub prior: [f64; 2],
    pub features: Vec<Variable>,
    /// `conditionals[i][x][y] = p(X_i = x | Y = y)`.
    pub conditionals: Vec<Vec<[f64; 2]>>,
    /// Predict class 1 when `p(y=1 | x) >= threshold`.
    pub threshold: f64,
}

impl NaiveBayesModel {
    pub fn new(
        target: Variable,
        prior: [f64; 2],
        features: Vec<Variable>,
        conditionals: Vec<Vec<[f64; 2]>>,
        threshold: f64,
    ) -> Result<Self> {
        if target.values.len() != 2 {
            return Err(CircuitError::NonBinaryTarget(target.name.clone(), target.values.len()));
        }
        if features.is_empty() {
            return Err(CircuitError::EmptyFeatures);
        }
        if conditionals.len() != features.len() {
            return Err(CircuitError::InvalidModel("one conditional table per feature required".into()));
        }
        let valid = |p: &[f64]| {
            p.iter().all(|x| (0.0..=1.0).contains(x)) && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9
        };
        if !valid(&prior) {
            return Err(CircuitError::InvalidModel("prior is not a distribution".into()));
        }
        for (f, table) in features.iter().zip(&conditionals) {
            if table.len() != f.values.len() {
                return Err(CircuitError::InvalidModel(format!("conditional of `{}` has wrong length", f.name)));
            }
            for y in 0..2 {
                let col: Vec<f64> = table.iter().map(|r| r[y]).collect();
                if !valid(&col) {
                    return Err(CircuitError::InvalidModel(format!(
                        "p({} | class {y}) is not a distribution",
                        f.name
                    )));
                }
            }
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err(CircuitError::InvalidModel(format!("threshold {threshold} outside [0, 1]")));
        }
        Ok(NaiveBayesModel {
            target,
            prior,
            features,
            conditionals,
            threshold,
        })
    }

    /// Extracts the prior and per-feature conditionals from a network by exact
    /// inference.
    pub fn from_network(
        bn: &BayesianNetwork,
        target: &str,
        features: &[&str],
        threshold: f64,
    ) -> std::result::Result<Self, crate::Error> {
        let t = bn.require_var(target)?;
        if bn.cardinality(t) != 2 {
            return Err(CircuitError::NonBinaryTarget(target.into(), bn.cardinality(t)).into());
        }
        let mut prior = [0.0; 2];
        for (y, p) in prior.iter_mut().enumerate() {
            let mut ev = Evidence::new();
            ev.insert(bn, t, y)?;
            *p = crate::bounds::ve_marginal(bn, &ev)?;
        }
        let mut vars = Vec::new();
        let mut conditionals = Vec::new();
        for name in features {
            let f = bn.require_var(name)?;
            let mut table = vec![[0.0; 2]; bn.cardinality(f)];
            for (x, row) in table.iter_mut().enumerate() {
                for y in 0..2 {
                    let mut ev = Evidence::new();
                    ev.insert(bn, t, y)?;
                    ev.insert(bn, f, x)?;
                    row[y] = if prior[y] > 0.0 {
                        crate::bounds::ve_marginal(bn, &ev)? / prior[y]
                    } else {
                        1.0 / bn.cardinality(f) as f64
                    };
                }
            }
            vars.push(bn.variable(f).clone());
            conditionals.push(table);
        }
        Ok(NaiveBayesModel::new(bn.variable(t).clone(), prior, vars, conditionals, threshold)?)
    }

    fn ln(p: f64) -> f64 {
        p.max(PROBABILITY_FLOOR).ln()
    }

    /// `s_i(x) = log p(x|1) − log p(x|0)`.
    pub fn feature_score(&self, feature: usize, value: usize) -> f64 {
        let r = self.conditionals[feature][value];
        Self::ln(r[1]) - Self::ln(r[0])
    }

    /// `t = log(threshold / (1 − threshold)) − log(p(1) / p(0))`.
    pub fn score_threshold(&self) -> f64 {
        let logit = self.threshold.ln() - (1.0 - self.threshold).ln();
        logit - (Self::ln(self.prior[1]) - Self::ln(self.prior[0]))
    }

    pub fn score(&self, x: &[usize]) -> f64 {
        x.iter().enumerate().map(|(i, &v)| self.feature_score(i, v)).sum()
    }

    pub fn posterior(&self, x: &[usize]) -> f64 {
        let mut l = [Self::ln(self.prior[0]), Self::ln(self.prior[1])];
        for (i, &v) in x.iter().enumerate() {
            for (y, ly) in l.iter_mut().enumerate() {
                *ly += Self::ln(self.conditionals[i][v][y]);
            }
        }
        1.0 / (1.0 + (l[0] - l[1]).exp())
    }

    /// Direct scoring rule; ties go to class 1.
    pub fn decide(&self, x: &[usize]) -> usize {
        usize::from(self.score(x) >= self.score_threshold() - MERGE_TOLERANCE)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    Const(bool),
    Inner(usize),
}

/// Builds the decision circuit of `nb` for a prediction node named
/// `prediction`, via an ordered decision diagram over the features in model
/// order. Nodes at level `i` are classes of partial sums that no completion
/// can tell apart.
pub fn nb_to_circuit(nb: &NaiveBayesModel, prediction: &str) -> Result<BooleanCircuit> {
    let n = nb.features.len();
    if n == 0 {
        return Err(CircuitError::EmptyFeatures);
    }
    let t = nb.score_threshold();
    let scores: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..nb.features[i].values.len()).map(|v| nb.feature_score(i, v)).collect())
        .collect();
    // thresholds[i]: sorted distinct values of t − c over suffix sums c of
    // features i.., so a partial sum S sends completion c to class 1 iff
    // S ≥ t − c.
    let mut suffix = vec![0.0f64];
    let mut thresholds: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
    thresholds[n] = vec![t];
    for i in (0..n).rev() {
        let mut next: Vec<f64> = Vec::with_capacity(suffix.len() * scores[i].len());
        for &s in &scores[i] {
            next.extend(suffix.iter().map(|c| s + c));
        }
        next.sort_by(f64::total_cmp);
        next.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOLERANCE);
        if next.len() > MAX_SUFFIX_SUMS {
            return Err(CircuitError::InvalidModel(format!(
                "decision diagram level {i} needs {} partial-sum classes",
                next.len()
            )));
        }
        let mut th: Vec<f64> = next.iter().map(|c| t - c).collect();
        th.sort_by(f64::total_cmp);
        thresholds[i] = th;
        suffix = next;
    }
    let classify = |level: usize, s: f64| -> Result<usize> {
        let th = &thresholds[level];
        Ok(th.partition_point(|&x| s >= x - MERGE_TOLERANCE))
    };
    // Breadth-first construction of the diagram.
    let mut nodes: Vec<(usize, f64)> = Vec::new();
    let mut children: Vec<Vec<Node>> = Vec::new();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut resolve = |level: usize, s: f64, nodes: &mut Vec<(usize, f64)>| -> Result<Node> {
        let key = classify(level, s)?;
        if key == thresholds[level].len() {
            return Ok(Node::Const(true));
        }
        if key == 0 {
            return Ok(Node::Const(false));
        }
        Ok(Node::Inner(*index.entry((level, key)).or_insert_with(|| {
            nodes.push((level, s));
            nodes.len() - 1
        })))
    };
    let root = resolve(0, 0.0, &mut nodes)?;
    let mut k = 0;
    while k < nodes.len() {
        let (level, s) = nodes[k];
        let mut kids = Vec::with_capacity(scores[level].len());
        for &sv in &scores[level] {
            kids.push(resolve(level + 1, s + sv, &mut nodes)?);
        }
        children.push(kids);
        k += 1;
    }
    let mut b = CircuitBuilder::new();
    for v in &nb.target.values {
        b.input(prediction, v);
    }
    let mut gate_of: Vec<Option<Operand>> = vec![None; nodes.len()];
    let t_op = b.constant(true);
    let f_op = b.constant(false);
    // Children always sit at a deeper level, so reverse discovery order is a
    // valid bottom-up order.
    for k in (0..nodes.len()).rev() {
        let level = nodes[k].0;
        let feature = &nb.features[level];
        let kid_ops: Vec<Operand> = children[k]
            .iter()
            .map(|c| match c {
                Node::Const(true) => t_op,
                Node::Const(false) => f_op,
                Node::Inner(j) => gate_of[*j].expect("children are built first"),
            })
            .collect();
        let op = if kid_ops.iter().all(|&o| o == kid_ops[0]) {
            kid_ops[0]
        } else {
            let terms = kid_ops
                .iter()
                .enumerate()
                .map(|(v, &child)| {
                    let lit = b.input(&feature.name, &feature.values[v]);
                    b.and(vec![lit, child])
                })
                .collect();
            b.or(terms)
        };
        gate_of[k] = Some(op);
    }
    let f = match root {
        Node::Const(c) => b.constant(c),
        Node::Inner(j) => gate_of[j].unwrap(),
    };
    let feats: Vec<(&str, Vec<&str>)> = nb
        .features
        .iter()
        .map(|f| (f.name.as_str(), f.values.iter().map(String::as_str).collect()))
        .collect();
    let feats: Vec<(&str, &[&str])> = feats.iter().map(|(n, v)| (*n, v.as_slice())).collect();
    let tv: Vec<&str> = nb.target.values.iter().map(String::as_str).collect();
    Ok(b.decision(&feats, prediction, &tv, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn predict(c: &BooleanCircuit, nb: &NaiveBayesModel, x: &[usize]) -> usize {
        let a: HashMap<String, String> = nb
            .features
            .iter()
            .zip(x)
            .map(|(f, &v)| (f.name.clone(), f.values[v].clone()))
            .collect();
        let y = c.predict("Yhat", &a).unwrap();
        nb.target.value_index(&y).unwrap()
    }

    #[test]
    fn uniform_model_is_constant_class_one() {
        let nb = NaiveBayesModel::new(
            Variable::new("Y", &["n", "p"]),
            [0.5, 0.5],
            vec![Variable::new("A", &["0", "1"])],
            vec![vec![[0.5, 0.5], [0.5, 0.5]]],
            0.5,
        )
        .unwrap();
        let c = nb_to_circuit(&nb, "Yhat").unwrap();
        assert_eq!(predict(&c, &nb, &[0]), 1);
        assert_eq!(predict(&c, &nb, &[1]), 1);
    }

    #[test]
    fn single_feature_follows_indicator() {
        // s(1) = +1, s(0) = −1, t = 0.
        let e = std::f64::consts::E;
        let p1 = e / (1.0 + e);
        let nb = NaiveBayesModel::new(
            Variable::new("Y", &["n", "p"]),
            [0.5, 0.5],
            vec![Variable::new("A", &["0", "1"])],
            vec![vec![[p1, 1.0 - p1], [1.0 - p1, p1]]],
            0.5,
        )
        .unwrap();
        assert!((nb.feature_score(0, 1) - 1.0).abs() < 1e-12);
        let c = nb_to_circuit(&nb, "Yhat").unwrap();
        assert_eq!(predict(&c, &nb, &[0]), 0);
        assert_eq!(predict(&c, &nb, &[1]), 1);
    }

    #[test]
    fn rejects_non_binary_target() {
        let err = NaiveBayesModel::new(
            Variable::new("Y", &["a", "b", "c"]),
            [0.5, 0.5],
            vec![Variable::new("A", &["0", "1"])],
            vec![vec![[0.5, 0.5], [0.5, 0.5]]],
            0.5,
        )
        .unwrap_err();
        assert!(matches!(err, CircuitError::NonBinaryTarget(..)));
    }

    #[test]
    fn matches_direct_scoring_exhaustively() {
        let feats = vec![
            Variable::new("A", &["0", "1", "2"]),
            Variable::new("B", &["0", "1"]),
            Variable::new("C", &["0", "1", "2", "3"]),
        ];
        let conds = vec![
            vec![[0.2, 0.5], [0.3, 0.4], [0.5, 0.1]],
            vec![[0.9, 0.35], [0.1, 0.65]],
            vec![[0.1, 0.4], [0.2, 0.3], [0.3, 0.2], [0.4, 0.1]],
        ];
        for &threshold in &[0.05, 0.2, 0.5, 0.8, 0.97] {
            let nb = NaiveBayesModel::new(
                Variable::new("Y", &["n", "p"]),
                [0.7, 0.3],
                feats.clone(),
                conds.clone(),
                threshold,
            )
            .unwrap();
            let c = nb_to_circuit(&nb, "Yhat").unwrap();
            for a in 0..3 {
                for bb in 0..2 {
                    for cc in 0..4 {
                        let x = [a, bb, cc];
                        let direct = usize::from(nb.posterior(&x) >= threshold - 1e-12);
                        assert_eq!(predict(&c, &nb, &x), direct, "x={x:?} t={threshold}");
                        assert_eq!(nb.decide(&x), direct);
                    }
                }
            }
        }
    }
}
