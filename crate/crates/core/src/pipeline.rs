//! Network + classifier to arithmetic circuit, end to end.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bn::{dump::canonical_dump, BayesianNetwork, InterventionSpec, VarId};
use crate::classifier::{tseitin, write_circuit, BooleanCircuit};
use crate::encoder::{
    build_dtree, constrained_minfill, encode_bn, join, order_width, ordering_constraints, CnfFormula, EncodeOptions,
    OrderingConstraintSet, OrderingMode, VarMap,
};
use crate::kc::{self, check_ordering, ensure_smooth, to_ac, AcCache, ArithmeticCircuit, Ddnnf, KcError};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileOptions {
    pub ordering: OrderingMode,
    /// Needed by the `minimal` and `structural_topological` modes.
    pub spec: Option<InterventionSpec>,
    pub drop_reverse: bool,
    pub edge_budget: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            ordering: OrderingMode::Topological,
            spec: None,
            drop_reverse: false,
            edge_budget: kc::DEFAULT_EDGE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CompileStats {
    /// Variables of the joint CNF.
    pub cnf_vars: usize,
    pub cnf_clauses: usize,
    pub network_cnf_vars: usize,
    pub classifier_cnf_vars: usize,
    /// Feature indicators the two encodings share.
    pub shared_indicators: usize,
    pub order_width: usize,
    pub nnf_nodes: usize,
    pub nnf_edges: usize,
    pub ac_nodes: usize,
    pub ac_edges: usize,
    pub decisions: u64,
    pub non_indicator_decisions: u64,
    pub cache_hits: u64,
    pub smoothed: bool,
    pub seconds: f64,
}

/// Everything produced by [`compile_model`].
#[derive(Debug, Clone)]
pub struct CompiledModel {
    /// The augmented network; the prediction node is its last variable.
    pub network: BayesianNetwork,
    pub target: VarId,
    /// Absent when loaded from a cache.
    pub cnf: Option<CnfFormula>,
    pub map: VarMap,
    pub constraints: OrderingConstraintSet,
    pub ddnnf: Option<Ddnnf>,
    pub ac: ArithmeticCircuit,
    pub stats: CompileStats,
}

impl CompiledModel {
    pub fn to_cache(&self, digest: u64) -> AcCache {
        AcCache {
            ac: self.ac.clone(),
            map: self.map.clone(),
            constraints: self.constraints.clone(),
            digest,
        }
    }
}

/// FNV-1a digest of the inputs of a compilation, for cache validation.
pub fn input_digest(bn: &BayesianNetwork, circuit: &BooleanCircuit, target: &str, options: &CompileOptions) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let opts = serde_json::to_string(options).expect("options serialize");
    for part in [canonical_dump(bn), write_circuit(circuit), target.to_string(), opts] {
        for b in part.bytes().chain([0xff]) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// The augmented network and its joint CNF, before compilation.
pub struct JointEncoding {
    pub network: BayesianNetwork,
    pub cnf: CnfFormula,
    pub map: VarMap,
    pub network_vars: usize,
    pub classifier_vars: usize,
}

/// Augments `bn` with the classifier and joins the network and classifier
/// encodings on their shared feature indicators.
pub fn encode_joint(
    bn: &BayesianNetwork,
    circuit: Arc<BooleanCircuit>,
    target: &str,
    drop_reverse: bool,
) -> Result<JointEncoding> {
    let network = bn.augment(circuit.clone(), target)?;
    let (cnf_bn, map_bn) = encode_bn(&network, EncodeOptions { drop_reverse });
    let (cnf_f, map_f) = tseitin(&circuit);
    let (cnf, map) = join(&cnf_bn, &map_bn, &cnf_f, &map_f)?;
    Ok(JointEncoding {
        network,
        cnf,
        map,
        network_vars: map_bn.len(),
        classifier_vars: map_f.len(),
    })
}

/// Augments `bn` with the classifier, encodes and compiles the joint CNF
/// under the requested ordering constraints, and converts to a smooth
/// arithmetic circuit.
pub fn compile_model(
    bn: &BayesianNetwork,
    circuit: Arc<BooleanCircuit>,
    target: &str,
    options: &CompileOptions,
) -> Result<CompiledModel> {
    let start = Instant::now();
    let JointEncoding {
        network,
        cnf,
        map,
        network_vars,
        classifier_vars,
    } = encode_joint(bn, circuit, target, options.drop_reverse)?;
    let target_id = network.num_vars() - 1;
    if let Some(spec) = &options.spec {
        spec.validate(&network)?;
    }
    let roles = map.roles(&network)?;
    let constraints = ordering_constraints(&network, options.ordering, options.spec.as_ref())?;
    let order = constrained_minfill(&cnf, &roles, &constraints)?;
    let dtree = build_dtree(&cnf, &order);
    let (ddnnf, kstats) = kc::compile(&cnf, &map, &dtree, options.edge_budget)?;
    let raw = to_ac(&ddnnf, &map, &network)?;
    let ac = ensure_smooth(&raw, &constraints)?;
    let report = check_ordering(&ac, &constraints);
    if let Some(v) = report.violations.first() {
        // The constrained order should rule this out; surface it rather than
        // hand out a circuit whose bounds would be unsound.
        return Err(KcError::InvalidCircuit(format!(
            "a split on `{}` lies below a split on `{}`",
            network.variable(v.above).name,
            network.variable(v.below).name
        ))
        .into());
    }
    let stats = CompileStats {
        cnf_vars: cnf.num_vars() as usize,
        cnf_clauses: cnf.num_clauses(),
        network_cnf_vars: network_vars,
        classifier_cnf_vars: classifier_vars,
        shared_indicators: network_vars + classifier_vars - map.len(),
        order_width: order_width(&cnf, &order),
        nnf_nodes: kstats.nodes as usize,
        nnf_edges: kstats.edges as usize,
        ac_nodes: ac.nodes().len(),
        ac_edges: ac.num_edges(),
        decisions: kstats.decisions,
        non_indicator_decisions: kstats.non_indicator_decisions,
        cache_hits: kstats.cache_hits,
        smoothed: ac != raw,
        seconds: crate::bounds::round_seconds(start),
    };
    Ok(CompiledModel {
        network,
        target: target_id,
        cnf: Some(cnf),
        map,
        constraints,
        ddnnf: Some(ddnnf),
        ac,
        stats,
    })
}

/// Rebuilds a model from a cache written for the same inputs. The CNF and
/// d-DNNF are not stored.
pub fn model_from_cache(
    bn: &BayesianNetwork,
    circuit: Arc<BooleanCircuit>,
    target: &str,
    cache: AcCache,
) -> Result<CompiledModel> {
    let network = bn.augment(circuit, target)?;
    let roles = cache.map.roles(&network)?;
    if cache.ac.num_params() != network.num_params() || roles.len() != cache.map.len() {
        return Err(KcError::Cache("cache does not match the network".into()).into());
    }
    let target_id = network.num_vars() - 1;
    let stats = CompileStats {
        cnf_vars: cache.map.len(),
        ac_nodes: cache.ac.nodes().len(),
        ac_edges: cache.ac.num_edges(),
        ..CompileStats::default()
    };
    Ok(CompiledModel {
        network,
        target: target_id,
        cnf: None,
        map: cache.map,
        constraints: cache.constraints,
        ddnnf: None,
        ac: cache.ac,
        stats,
    })
}
