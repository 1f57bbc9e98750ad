#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use introbust::bn::bif::read_bif;
use introbust::bn::Cpt;
use introbust::classifier::{parse_circuit, tabulate_to_circuit};
use introbust::{BayesianNetwork, BooleanCircuit, Evidence, InterventionSpec, Variable};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn network(name: &str) -> BayesianNetwork {
    read_bif(data(name)).unwrap()
}

pub fn circuit(name: &str) -> Arc<BooleanCircuit> {
    Arc::new(parse_circuit(&std::fs::read_to_string(data(name)).unwrap()).unwrap())
}

pub fn three_node() -> (BayesianNetwork, Arc<BooleanCircuit>) {
    (network("three_node.bif"), circuit("three_node_x_or_w.circuit"))
}

pub fn toy() -> (BayesianNetwork, Arc<BooleanCircuit>) {
    (network("toy_insurance.bif"), circuit("toy_c1.circuit"))
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn random_row(rng: &mut impl Rng, card: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..card).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

/// Random DAG over `n` variables in index order, at most three parents each.
pub fn random_network(rng: &mut impl Rng, n: usize, max_card: usize) -> BayesianNetwork {
    let mut vars = Vec::new();
    for v in 0..n {
        let card = rng.gen_range(2..=max_card);
        let values: Vec<String> = (0..card).map(|x| format!("v{x}")).collect();
        let refs: Vec<&str> = values.iter().map(String::as_str).collect();
        vars.push(Variable::new(format!("N{v}"), &refs));
    }
    let mut cpts = Vec::new();
    for v in 0..n {
        let mut parents: Vec<usize> = (0..v).filter(|_| rng.gen_bool(0.4)).collect();
        parents.shuffle(rng);
        parents.truncate(3);
        parents.sort_unstable();
        let rows: usize = parents.iter().map(|&p| vars[p].cardinality()).product();
        let table = (0..rows).map(|_| random_row(rng, vars[v].cardinality())).collect();
        cpts.push(Cpt::dense(v, parents, table));
    }
    BayesianNetwork::new("random", vars, cpts).unwrap()
}

/// Random binary classifier `Yhat` over one to three features.
pub fn random_classifier(rng: &mut impl Rng, bn: &BayesianNetwork) -> Arc<BooleanCircuit> {
    let mut ids: Vec<usize> = (0..bn.num_vars()).collect();
    ids.shuffle(rng);
    ids.truncate(rng.gen_range(1..=3.min(bn.num_vars())));
    ids.sort_unstable();
    let features: Vec<Variable> = ids.iter().map(|&v| bn.variable(v).clone()).collect();
    let target = Variable::new("Yhat", &["no", "yes"]);
    let mut table = BTreeMap::new();
    let cards: Vec<usize> = features.iter().map(Variable::cardinality).collect();
    let total: usize = cards.iter().product();
    for mut i in 0..total {
        let mut x = vec![0; cards.len()];
        for k in (0..cards.len()).rev() {
            x[k] = i % cards[k];
            i /= cards[k];
        }
        table.insert(x, usize::from(rng.gen_bool(0.5)));
    }
    Arc::new(tabulate_to_circuit(&features, &target, &table).unwrap())
}

/// Up to `max` random network variables as a parametric spec.
pub fn random_parametric(rng: &mut impl Rng, bn: &BayesianNetwork, max: usize) -> InterventionSpec {
    let mut ids: Vec<usize> = (0..bn.num_vars()).filter(|&v| !bn.is_deterministic(v)).collect();
    ids.shuffle(rng);
    ids.truncate(rng.gen_range(0..=max));
    let names: Vec<&str> = ids.iter().map(|&v| bn.variable(v).name.as_str()).collect();
    InterventionSpec::parametric(bn, &names).unwrap()
}

/// Random partial evidence; each variable observed with probability `p`.
pub fn random_evidence(rng: &mut impl Rng, bn: &BayesianNetwork, p: f64) -> Evidence {
    let mut ev = Evidence::new();
    for v in 0..bn.num_vars() {
        if rng.gen_bool(p) {
            ev.insert(bn, v, rng.gen_range(0..bn.cardinality(v))).unwrap();
        }
    }
    ev
}

/// Every full instantiation of `bn`, last variable fastest.
pub fn instantiations(bn: &BayesianNetwork) -> Vec<Vec<usize>> {
    let cards: Vec<usize> = (0..bn.num_vars()).map(|v| bn.cardinality(v)).collect();
    let total: usize = cards.iter().product();
    (0..total)
        .map(|mut i| {
            let mut x = vec![0; cards.len()];
            for k in (0..cards.len()).rev() {
                x[k] = i % cards[k];
                i /= cards[k];
            }
            x
        })
        .collect()
}

/// `p(e)` by summing the joint over all consistent instantiations.
pub fn enumerate_marginal(bn: &BayesianNetwork, ev: &Evidence) -> f64 {
    instantiations(bn)
        .iter()
        .filter(|x| ev.iter().all(|(v, value)| x[v] == value))
        .map(|x| bn.joint_probability_dense(x))
        .sum()
}

/// A compiled random network with a random classifier, a parametric spec
/// whose witness space is at most `cap`, and random evidence.
pub struct Instance {
    pub model: introbust::CompiledModel,
    pub spec: InterventionSpec,
    pub evidence: Evidence,
}

pub fn random_instance(rng: &mut impl Rng, vars: std::ops::RangeInclusive<usize>, max_card: usize, cap: f64) -> Instance {
    loop {
        let n = rng.gen_range(vars.clone());
        let bn = random_network(rng, n, max_card);
        let circuit = random_classifier(rng, &bn);
        let model = introbust::compile_model(&bn, circuit, "Yhat", &introbust::CompileOptions::default()).unwrap();
        let net = &model.network;
        for _ in 0..20 {
            let spec = random_parametric(rng, net, 2);
            if introbust::bounds::witness_space(net, &spec) <= cap {
                let evidence = random_evidence(rng, net, 0.3);
                return Instance { model, spec, evidence };
            }
        }
    }
}

/// Expected CNF variable count `n + n' - |λ_X|` of a compiled instance,
/// from separate encodings of the network and the classifier.
pub fn expected_cnf_vars(model: &introbust::CompiledModel) -> usize {
    let net = &model.network;
    let target = net.variable(model.target).name.clone();
    let introbust::bn::CptTable::Deterministic(det) = &net.cpt(model.target).table else {
        panic!("prediction node is not deterministic");
    };
    let circuit = det.circuit();
    let (cnf_bn, _) = introbust::encoder::encode_bn(net, introbust::encoder::EncodeOptions::default());
    let (cnf_f, _) = introbust::classifier::tseitin(circuit);
    let shared: usize = circuit
        .feature_names(&target)
        .iter()
        .map(|f| net.cardinality(net.require_var(f).unwrap()))
        .sum();
    cnf_bn.num_vars() as usize + cnf_f.num_vars() as usize - shared
}
