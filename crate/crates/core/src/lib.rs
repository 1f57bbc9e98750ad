//! Interventional robustness of classifiers on causal Bayesian networks.
//!
//! The network and a Boolean decision circuit for the classifier are encoded
//! jointly in CNF, compiled to d-DNNF and then to an arithmetic circuit. The
//! circuit yields an upper bound on the worst-case probability of an event
//! under a set of interventions; best-response search on the network yields
//! a matching lower bound.

pub mod bn;
pub mod bounds;
pub mod classifier;
pub mod encoder;
pub mod engine;
pub mod kc;
pub mod pipeline;

use std::path::{Path, PathBuf};

pub use bn::{BayesianNetwork, Evidence, InterventionKind, InterventionSpec, VarId, Variable};
pub use bounds::{BoundsReport, Decision};
pub use classifier::BooleanCircuit;
pub use encoder::{CnfFormula, OrderingConstraintSet, OrderingMode, VarMap};
pub use engine::ParameterAssignment;
pub use kc::{ArithmeticCircuit, Ddnnf};
pub use pipeline::{compile_model, CompileOptions, CompileStats, CompiledModel};

/// Errors surfaced by the library as a whole.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Bn(#[from] bn::BnError),
    #[error(transparent)]
    Circuit(#[from] classifier::CircuitError),
    #[error(transparent)]
    Encode(#[from] encoder::EncodeError),
    #[error(transparent)]
    Compile(#[from] kc::KcError),
    #[error(transparent)]
    Engine(#[from] engine::EngineError),
    #[error(transparent)]
    Bounds(#[from] bounds::BoundsError),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
