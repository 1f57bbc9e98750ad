//! Loaded inputs of a run and access to its compiled circuit, going through
//! the on-disk cache when one is configured.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use introbust::bn::bif::read_bif;
use introbust::classifier::{nb_to_circuit, parse_circuit, NaiveBayesModel};
use introbust::kc::{read_cache, write_cache};
use introbust::pipeline::{input_digest, model_from_cache};
use introbust::{compile_model, BayesianNetwork, BooleanCircuit, CompileOptions, CompiledModel, Evidence, InterventionSpec};

use crate::config::{ClassifierConfig, RunConfig, SpecConfig};

pub const CACHE_DIR_VAR: &str = "INTROBUST_CACHE_DIR";

pub struct Session {
    pub config: RunConfig,
    /// The network as read, without the prediction node.
    pub bn: BayesianNetwork,
    pub circuit: Arc<BooleanCircuit>,
    pub target: String,
    pub augmented: BayesianNetwork,
}

impl Session {
    pub fn open(config: RunConfig) -> Result<Self> {
        let bn = read_bif(&config.network)?;
        let circuit = match &config.classifier {
            ClassifierConfig::Circuit { path, target, features } => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("cannot read circuit {}", path.display()))?;
                let circuit = parse_circuit(&text).with_context(|| format!("in {}", path.display()))?;
                if let Some(expected) = features {
                    let had: BTreeSet<String> = circuit.feature_names(target).into_iter().collect();
                    let want: BTreeSet<String> = expected.iter().cloned().collect();
                    if had != want {
                        bail!("circuit features {had:?} differ from the configured {want:?}");
                    }
                }
                circuit
            }
            ClassifierConfig::NaiveBayes {
                class,
                features,
                threshold,
                target,
            } => {
                let names: Vec<&str> = features.iter().map(String::as_str).collect();
                let nb = NaiveBayesModel::from_network(&bn, class, &names, *threshold)?;
                nb_to_circuit(&nb, target)?
            }
        };
        let circuit = Arc::new(circuit);
        let target = config.classifier.target().to_string();
        let augmented = bn.augment(circuit.clone(), &target)?;
        Ok(Session {
            config,
            bn,
            circuit,
            target,
            augmented,
        })
    }

    pub fn spec(&self, spec: &SpecConfig) -> Result<InterventionSpec> {
        spec.build(&self.augmented).context("invalid intervention spec")
    }

    pub fn evidence(&self, text: &str) -> Result<Evidence> {
        Evidence::parse(&self.augmented, text).with_context(|| format!("invalid evidence `{text}`"))
    }

    pub fn compile_options(&self, spec: &InterventionSpec, edge_budget: usize) -> CompileOptions {
        CompileOptions {
            ordering: self.config.ordering.mode(spec),
            spec: (!spec.is_empty()).then(|| spec.clone()),
            drop_reverse: self.config.drop_reverse,
            edge_budget,
        }
    }

    pub fn digest(&self, options: &CompileOptions) -> u64 {
        input_digest(&self.bn, &self.circuit, &self.target, options)
    }

    /// Configured cache file first, then the shared cache directory.
    pub fn cache_paths(&self, digest: u64) -> Vec<PathBuf> {
        let mut out: Vec<PathBuf> = self.config.output.cache.iter().cloned().collect();
        if let Some(dir) = std::env::var_os(CACHE_DIR_VAR).filter(|d| !d.is_empty()) {
            out.push(PathBuf::from(dir).join(format!("{digest:016x}.irac")));
        }
        out
    }

    pub fn compile(&self, options: &CompileOptions) -> Result<CompiledModel> {
        let model = compile_model(&self.bn, self.circuit.clone(), &self.target, options)?;
        let digest = self.digest(options);
        let bytes = write_cache(&model.to_cache(digest));
        for path in self.cache_paths(digest) {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            }
            std::fs::write(&path, &bytes).with_context(|| format!("cannot write cache {}", path.display()))?;
        }
        Ok(model)
    }

    /// A cached circuit for these inputs if one exists, else a fresh compile.
    pub fn model(&self, options: &CompileOptions) -> Result<CompiledModel> {
        let digest = self.digest(options);
        for path in self.cache_paths(digest) {
            let Ok(bytes) = std::fs::read(&path) else { continue };
            // A stale or damaged cache is not an error; it is rebuilt.
            let Ok(cache) = read_cache(&bytes) else { continue };
            if cache.digest == digest {
                return Ok(model_from_cache(&self.bn, self.circuit.clone(), &self.target, cache)?);
            }
        }
        self.compile(options)
    }
}
