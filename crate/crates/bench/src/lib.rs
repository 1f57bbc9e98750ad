//! Fixtures shared by the benchmarks.

use std::path::PathBuf;
use std::sync::Arc;

use introbust::bn::bif::read_bif;
use introbust::classifier::{nb_to_circuit, parse_circuit, NaiveBayesModel};
use introbust::{BayesianNetwork, BooleanCircuit, Evidence, InterventionSpec};

pub struct Fixture {
    pub name: &'static str,
    pub bn: BayesianNetwork,
    pub circuit: Arc<BooleanCircuit>,
    pub target: &'static str,
    pub evidence: &'static str,
    pub intervene: &'static [&'static str],
}

impl Fixture {
    /// Evidence and a parametric spec over the augmented network.
    pub fn query(&self, net: &BayesianNetwork) -> (Evidence, InterventionSpec) {
        (
            Evidence::parse(net, self.evidence).unwrap(),
            InterventionSpec::parametric(net, self.intervene).unwrap(),
        )
    }
}

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn circuit(name: &str) -> Arc<BooleanCircuit> {
    Arc::new(parse_circuit(&std::fs::read_to_string(data(name)).unwrap()).unwrap())
}

pub fn three_node() -> Fixture {
    Fixture {
        name: "three_node",
        bn: read_bif(data("three_node.bif")).unwrap(),
        circuit: circuit("three_node_x_or_w.circuit"),
        target: "Yhat",
        evidence: "Y=0,Yhat=1",
        intervene: &["W"],
    }
}

pub fn toy() -> Fixture {
    Fixture {
        name: "toy",
        bn: read_bif(data("toy_insurance.bif")).unwrap(),
        circuit: circuit("toy_c1.circuit"),
        target: "C1",
        evidence: "accident=1,C1=low",
        intervene: &["model", "class"],
    }
}

/// Insurance with the three-feature naive Bayes classifier at threshold 0.12.
pub fn insurance() -> Fixture {
    let bn = read_bif(data("insurance.bif")).unwrap();
    let nb = NaiveBayesModel::from_network(&bn, "MedCost", &["Age", "MakeModel", "DrivHist"], 0.12).unwrap();
    Fixture {
        name: "insurance",
        circuit: Arc::new(nb_to_circuit(&nb, "Pred").unwrap()),
        bn,
        target: "Pred",
        evidence: "MedCost=AboveThousand,Pred=BelowThousand",
        intervene: &["MakeModel", "Cushioning"],
    }
}
