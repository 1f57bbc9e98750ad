//! Run configuration: one JSON document per run. Relative paths resolve
//! against the directory holding the config file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use introbust::bn::InterventionKind;
use introbust::bounds::DEFAULT_WITNESS_CAP;
use introbust::kc::DEFAULT_EDGE_BUDGET;
use introbust::{BayesianNetwork, InterventionSpec, OrderingMode};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: PathBuf,
    pub classifier: ClassifierConfig,
    /// `Var=value,Var=value`.
    #[serde(default)]
    pub evidence: String,
    #[serde(default)]
    pub spec: SpecConfig,
    #[serde(default)]
    pub ordering: Ordering,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub backend: BackendChoice,
    #[serde(default)]
    pub drop_reverse: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Outputs,
    /// Rows for `table`: every spec against every query.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableConfig>,
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierConfig {
    /// A netlist file deciding `target`.
    Circuit {
        path: PathBuf,
        target: String,
        /// When given, must equal the circuit's feature set.
        #[serde(default)]
        features: Option<Vec<String>>,
    },
    /// Naive Bayes extracted from the network for the binary variable
    /// `class`; its predictions become the node `target`.
    NaiveBayes {
        class: String,
        features: Vec<String>,
        threshold: f64,
        target: String,
    },
}

impl ClassifierConfig {
    pub fn target(&self) -> &str {
        match self {
            ClassifierConfig::Circuit { target, .. } | ClassifierConfig::NaiveBayes { target, .. } => target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub kind: InterventionKind,
    #[serde(default)]
    pub variables: Vec<String>,
    /// `W:[P1,P2]`, structural only.
    #[serde(default)]
    pub contexts: Vec<String>,
}

impl Default for SpecConfig {
    fn default() -> Self {
        SpecConfig {
            kind: InterventionKind::Parametric,
            variables: Vec::new(),
            contexts: Vec::new(),
        }
    }
}

impl SpecConfig {
    pub fn build(&self, bn: &BayesianNetwork) -> Result<InterventionSpec> {
        let names: Vec<&str> = self.variables.iter().map(String::as_str).collect();
        match self.kind {
            InterventionKind::Parametric => {
                if !self.contexts.is_empty() {
                    bail!("contexts are only allowed for structural specs");
                }
                Ok(InterventionSpec::parametric(bn, &names)?)
            }
            InterventionKind::Structural => {
                let parsed = self
                    .contexts
                    .iter()
                    .map(|c| InterventionSpec::parse_context(c))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                let refs: Vec<Vec<&str>> = parsed.iter().map(|(_, ps)| ps.iter().map(String::as_str).collect()).collect();
                let contexts: Vec<(&str, &[&str])> =
                    parsed.iter().zip(&refs).map(|((w, _), ps)| (w.as_str(), ps.as_slice())).collect();
                Ok(InterventionSpec::structural(bn, &names, &contexts)?)
            }
        }
    }
}

/// Constraint mode for compilation. `auto` picks `structural_topological`
/// for structural specs and `topological` otherwise; both cover every spec
/// the upper bound accepts on that circuit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    #[default]
    Auto,
    None,
    Minimal,
    Topological,
    StructuralTopological,
}

impl Ordering {
    pub fn mode(self, spec: &InterventionSpec) -> OrderingMode {
        match self {
            Ordering::Auto if spec.is_structural() && !spec.is_empty() => OrderingMode::StructuralTopological,
            Ordering::Auto | Ordering::Topological => OrderingMode::Topological,
            Ordering::None => OrderingMode::None,
            Ordering::Minimal => OrderingMode::Minimal,
            Ordering::StructuralTopological => OrderingMode::StructuralTopological,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    #[serde(default = "default_edges")]
    pub edges: usize,
    #[serde(default = "default_witness_cap")]
    pub witness_cap: f64,
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
    #[serde(default)]
    pub restarts: usize,
}

fn default_edges() -> usize {
    DEFAULT_EDGE_BUDGET
}

fn default_witness_cap() -> f64 {
    DEFAULT_WITNESS_CAP
}

fn default_sweeps() -> usize {
    1000
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            edges: default_edges(),
            witness_cap: default_witness_cap(),
            max_sweeps: default_sweeps(),
            restarts: 0,
        }
    }
}

/// Engine for best response. `auto` uses the circuit for parametric specs
/// and elimination for structural ones, whose rewired network the circuit
/// does not represent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    #[default]
    Auto,
    Ac,
    Ve,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub report: Option<PathBuf>,
    pub stats: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub specs: Vec<NamedSpec>,
    pub queries: Vec<NamedQuery>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSpec {
    pub name: String,
    #[serde(flatten)]
    pub spec: SpecConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedQuery {
    pub name: String,
    pub evidence: String,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        config.resolve(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    /// Makes every relative path absolute with respect to `base`.
    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.network);
        if let ClassifierConfig::Circuit { path, .. } = &mut self.classifier {
            fix(path);
        }
        for p in [
            &mut self.output.report,
            &mut self.output.stats,
            &mut self.output.cache,
            &mut self.output.csv,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_resolution() {
        let text = r#"{
            "network": "net.bif",
            "classifier": {"type": "circuit", "path": "c.circuit", "target": "Yhat"},
            "output": {"report": "/abs/r.json"}
        }"#;
        let mut c: RunConfig = serde_json::from_str(text).unwrap();
        c.resolve(Path::new("/cfg"));
        assert_eq!(c.network, PathBuf::from("/cfg/net.bif"));
        assert_eq!(c.output.report, Some(PathBuf::from("/abs/r.json")));
        assert_eq!(c.ordering, Ordering::Auto);
        assert_eq!(c.budgets.max_sweeps, 1000);
        assert!(c.spec.variables.is_empty());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"network": "n", "classifier": {"type": "circuit", "path": "c", "target": "T"}, "epsilom": 1}"#;
        assert!(serde_json::from_str::<RunConfig>(text).is_err());
    }
}
