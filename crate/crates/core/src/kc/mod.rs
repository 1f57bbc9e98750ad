//! Knowledge compilation: CNF to d-DNNF, d-DNNF to arithmetic circuit,
//! smoothing and ordering checks, NNF and binary cache formats.

mod ac;
mod cache;
mod compiler;
mod ddnnf;

pub use ac::{check_ordering, ensure_smooth, to_ac, AcNode, ArithmeticCircuit, OrderingReport, OrderingViolation};
pub use cache::{read_cache, write_cache, AcCache, CACHE_VERSION};
pub use compiler::{compile, CompilerStats, DEFAULT_EDGE_BUDGET};
pub use ddnnf::{import_nnf, Ddnnf, NnfNode, NodeId};

use crate::bn::VarId;
use crate::encoder::EncodeError;

#[derive(Debug, thiserror::Error)]
pub enum KcError {
    #[error("NNF line {line}: {message}")]
    NnfSyntax { line: usize, message: String },
    #[error("node {node} is not decomposable")]
    NotDecomposable { node: usize },
    #[error("node {node} is not deterministic")]
    NotDeterministic { node: usize },
    #[error("projection omits decision variable {0}")]
    ProjectionMissesDecision(u32),
    #[error("edge budget {budget} exceeded ({edges} edges, {nodes} nodes so far); raise --budget-edges to resume")]
    BudgetExceeded { edges: usize, nodes: usize, budget: usize },
    #[error("OR node {node} decides non-indicator `{symbol}`")]
    NonIndicatorSplit { node: usize, symbol: String },
    #[error("smoothing would put a gadget for variable {var} below a split on variable {above}")]
    SmoothingViolation { var: VarId, above: VarId },
    #[error("malformed arithmetic circuit: {0}")]
    InvalidCircuit(String),
    #[error("AC cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

pub type Result<T> = std::result::Result<T, KcError>;
