mod common;

use introbust::bn::Cpt;
use introbust::classifier::{nb_to_circuit, tseitin, NaiveBayesModel};
use introbust::encoder::Role;
use introbust::{compile_model, BayesianNetwork, CompileOptions, OrderingMode};

const WIN95_FEATURES: [&str; 16] = [
    "Problem3", "Problem2", "PrtStatMem", "PrtStatToner", "Problem6", "PrtFile", "PrtStatOff", "PrtIcon",
    "Problem1", "REPEAT", "HrglssDrtnAftrPrnt", "TstpsTxt", "PSERRMEM", "Problem5", "Problem4", "PrtStatPaper",
];

/// The sixteen-feature printer classifier as a naive Bayes threshold rule.
/// Its circuit differs from the trained one of the benchmark, so only the
/// counts that hold for any circuit over these features are checked.
#[test]
fn sixteen_feature_printer_classifier() {
    let bn = common::network("win95pts.bif");
    let nb = NaiveBayesModel::from_network(&bn, "PTROFFLINE", &WIN95_FEATURES, 0.5).unwrap();
    let circuit = nb_to_circuit(&nb, "Yhat").unwrap();
    let (_, map) = tseitin(&circuit);
    let indicators = map.symbols().iter().filter(|s| s.is_indicator()).count();
    assert_eq!(map.len() - indicators, circuit.num_gates());

    // Independent uniform features, so the joint CNF is the classifier's
    // plus the feature encodings.
    let vars: Vec<_> = WIN95_FEATURES.iter().map(|f| bn.variable(bn.require_var(f).unwrap()).clone()).collect();
    let cpts = vars
        .iter()
        .enumerate()
        .map(|(i, v)| Cpt::dense(i, vec![], vec![vec![1.0 / v.cardinality() as f64; v.cardinality()]]))
        .collect();
    let features = BayesianNetwork::new("features", vars, cpts).unwrap();
    let options = CompileOptions {
        ordering: OrderingMode::None,
        ..CompileOptions::default()
    };
    let model = compile_model(&features, std::sync::Arc::new(circuit), "Yhat", &options).unwrap();
    let roles = model.map.roles(&model.network).unwrap();
    let projection: Vec<u32> = (1..=roles.len() as u32)
        .filter(|&v| matches!(roles[v as usize - 1], Role::Indicator { .. }))
        .collect();
    let states: u128 = (0..16).map(|v| features.cardinality(v) as u128).product();
    assert_eq!(model.ddnnf.as_ref().unwrap().model_count(&projection).unwrap(), states);
}
