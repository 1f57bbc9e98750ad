use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use introbust::bounds::{
    brute_force_max, do_search, lower_bound_br, sa_first_order, ve_marginal, verify, witness_space, Backend,
    BrOptions,
};
use introbust::engine::upper_bound;
use introbust::kc::check_ordering;
use introbust::pipeline::encode_joint;
use introbust::{CompileStats, CompiledModel, Decision, Evidence, InterventionSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BackendChoice, NamedQuery, NamedSpec, RunConfig};
use crate::session::Session;

/// Flags shared by every command. They override the config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub budget_edges: Option<usize>,
}

fn seconds(start: Instant) -> f64 {
    (start.elapsed().as_secs_f64() * 1000.0).round() / 1000.0
}

/// Pretty JSON with a trailing newline, to `out` if given and to stdout.
fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    if let Some(path) = out {
        write_file(path, text.as_bytes())?;
    }
    print!("{text}");
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

struct Run {
    session: Session,
    over: Overrides,
}

impl Run {
    fn open(config: RunConfig, over: &Overrides) -> Result<Self> {
        Ok(Run {
            session: Session::open(config)?,
            over: over.clone(),
        })
    }

    fn config(&self) -> &RunConfig {
        &self.session.config
    }

    fn edge_budget(&self) -> usize {
        self.over.budget_edges.unwrap_or(self.config().budgets.edges)
    }

    fn br_options(&self) -> BrOptions {
        BrOptions {
            max_sweeps: self.config().budgets.max_sweeps,
            restarts: self.config().budgets.restarts,
            seed: self.over.seed.unwrap_or(self.config().seed),
        }
    }

    fn use_ac(&self, spec: &InterventionSpec) -> bool {
        match self.config().backend {
            BackendChoice::Auto => !spec.is_structural(),
            BackendChoice::Ac => true,
            BackendChoice::Ve => false,
        }
    }

    fn model(&self, spec: &InterventionSpec) -> Result<CompiledModel> {
        self.session.model(&self.session.compile_options(spec, self.edge_budget()))
    }
}

#[derive(Serialize)]
struct CompileRecord<'a> {
    network: String,
    target: &'a str,
    ordering: String,
    digest: String,
    constraints: Vec<(String, String)>,
    ordering_check_passed: bool,
    #[serde(flatten)]
    stats: &'a CompileStats,
}

pub fn compile(config: RunConfig, over: &Overrides) -> Result<i32> {
    let run = Run::open(config, over)?;
    let s = &run.session;
    let spec = s.spec(&run.config().spec)?;
    let options = s.compile_options(&spec, run.edge_budget());
    let model = s.compile(&options)?;
    let record = CompileRecord {
        network: run.config().network.display().to_string(),
        target: &s.target,
        ordering: options.ordering.to_string(),
        digest: format!("{:016x}", s.digest(&options)),
        constraints: model.constraints.display(&model.network),
        ordering_check_passed: check_ordering(&model.ac, &model.constraints).passed(),
        stats: &model.stats,
    };
    let out = over.out.clone().or_else(|| run.config().output.stats.clone());
    emit(&record, out.as_deref())?;
    Ok(0)
}

pub fn export_cnf(config: RunConfig, over: &Overrides) -> Result<i32> {
    let s = Session::open(config)?;
    let joint = encode_joint(&s.bn, s.circuit.clone(), &s.target, s.config.drop_reverse)?;
    let text = joint.cnf.to_dimacs(&joint.map);
    match &over.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(0)
}

pub fn verify_cmd(config: RunConfig, over: &Overrides) -> Result<i32> {
    let run = Run::open(config, over)?;
    let s = &run.session;
    let spec = s.spec(&run.config().spec)?;
    let ev = s.evidence(&run.config().evidence)?;
    let model = run.model(&spec)?;
    let (decision, report) = verify(&model, &ev, &spec, run.config().epsilon, run.use_ac(&spec), &run.br_options())?;
    let out = over.out.clone().or_else(|| run.config().output.report.clone());
    emit(&report, out.as_deref())?;
    Ok(decision.exit_code())
}

#[derive(Serialize)]
struct LbReport {
    query: String,
    spec: String,
    value: f64,
    witness: BTreeMap<String, BTreeMap<String, String>>,
    sweeps: usize,
    trace: Vec<f64>,
    converged: bool,
    backend: String,
    seconds: f64,
}

pub fn lb(config: RunConfig, over: &Overrides) -> Result<i32> {
    let run = Run::open(config, over)?;
    let s = &run.session;
    let spec = s.spec(&run.config().spec)?;
    let ev = s.evidence(&run.config().evidence)?;
    let model = if run.use_ac(&spec) { Some(run.model(&spec)?) } else { None };
    let start = Instant::now();
    let backend = match &model {
        Some(m) => Backend::Ac(&m.ac),
        None => Backend::Ve,
    };
    let out = lower_bound_br(&s.augmented, &ev, &spec, backend, &run.br_options())?;
    let report = LbReport {
        query: ev.display(&s.augmented),
        spec: spec.display(&s.augmented),
        value: out.value,
        witness: out.witness.named(&s.augmented, &spec),
        sweeps: out.sweeps,
        trace: out.trace,
        converged: out.converged,
        backend: out.backend.to_string(),
        seconds: seconds(start),
    };
    let path = over.out.clone().or_else(|| run.config().output.report.clone());
    emit(&report, path.as_deref())?;
    Ok(0)
}

#[derive(Serialize)]
struct UbReport {
    query: String,
    spec: String,
    value: f64,
    ac_edges: usize,
    seconds: f64,
}

pub fn ub(config: RunConfig, over: &Overrides) -> Result<i32> {
    let run = Run::open(config, over)?;
    let s = &run.session;
    let spec = s.spec(&run.config().spec)?;
    let ev = s.evidence(&run.config().evidence)?;
    let model = run.model(&spec)?;
    let start = Instant::now();
    let value = upper_bound(&model.ac, &model.network, &ev, &spec)?;
    let report = UbReport {
        query: ev.display(&s.augmented),
        spec: spec.display(&s.augmented),
        value,
        ac_edges: model.ac.num_edges(),
        seconds: seconds(start),
    };
    let path = over.out.clone().or_else(|| run.config().output.report.clone());
    emit(&report, path.as_deref())?;
    Ok(0)
}

#[derive(Serialize)]
struct Exact {
    value: f64,
    witness: BTreeMap<String, BTreeMap<String, String>>,
}

#[derive(Serialize)]
struct DoReport {
    value: f64,
    values: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct FirstOrder {
    value: f64,
    warning: String,
}

#[derive(Serialize)]
struct OracleReport {
    query: String,
    spec: String,
    marginal: f64,
    witness_space: f64,
    exact: Exact,
    do_intervention: DoReport,
    first_order: FirstOrder,
    seconds: f64,
}

pub fn oracle(config: RunConfig, over: &Overrides) -> Result<i32> {
    let run = Run::open(config, over)?;
    let s = &run.session;
    let net = &s.augmented;
    let spec = s.spec(&run.config().spec)?;
    let ev = s.evidence(&run.config().evidence)?;
    let cap = run.config().budgets.witness_cap;
    let start = Instant::now();
    let (bf, witness) = brute_force_max(net, &ev, &spec, cap)?;
    let (dv, fixed) = do_search(net, &ev, &spec, cap)?;
    let sa = sa_first_order(net, &ev, &spec, Backend::Ve)?;
    let report = OracleReport {
        query: ev.display(net),
        spec: spec.display(net),
        marginal: ve_marginal(net, &ev)?,
        witness_space: witness_space(net, &spec),
        exact: Exact {
            value: bf,
            witness: witness.named(net, &spec),
        },
        do_intervention: DoReport {
            value: dv,
            values: fixed
                .into_iter()
                .map(|(w, x)| (net.variable(w).name.clone(), net.variable(w).values[x].clone()))
                .collect(),
        },
        first_order: FirstOrder {
            value: sa.value,
            warning: sa.warning.to_string(),
        },
        seconds: seconds(start),
    };
    let path = over.out.clone().or_else(|| run.config().output.report.clone());
    emit(&report, path.as_deref())?;
    Ok(0)
}

#[derive(Serialize)]
struct NetworkInfo {
    name: String,
    variables: usize,
    edges: usize,
    parameters: usize,
    state_space: f64,
}

#[derive(Serialize)]
struct ClassifierInfo {
    target: String,
    features: Vec<String>,
    inputs: usize,
    gates: usize,
}

#[derive(Serialize)]
struct Info {
    network: NetworkInfo,
    classifier: ClassifierInfo,
    evidence: String,
    spec: String,
    witness_space: f64,
    marginal: f64,
}

pub fn info(config: RunConfig, over: &Overrides) -> Result<i32> {
    let run = Run::open(config, over)?;
    let s = &run.session;
    let spec = s.spec(&run.config().spec)?;
    let ev = s.evidence(&run.config().evidence)?;
    let report = Info {
        network: NetworkInfo {
            name: s.bn.name().to_string(),
            variables: s.bn.num_vars(),
            edges: (0..s.bn.num_vars()).map(|v| s.bn.parents(v).len()).sum(),
            parameters: s.bn.num_params(),
            state_space: s.bn.state_space_size(),
        },
        classifier: ClassifierInfo {
            target: s.target.clone(),
            features: s.circuit.feature_names(&s.target),
            inputs: s.circuit.inputs().len(),
            gates: s.circuit.num_gates(),
        },
        evidence: ev.display(&s.augmented),
        spec: spec.display(&s.augmented),
        witness_space: witness_space(&s.augmented, &spec),
        marginal: ve_marginal(&s.augmented, &ev)?,
    };
    emit(&report, over.out.as_deref())?;
    Ok(0)
}

pub const TABLE_HEADER: [&str; 16] = [
    "config",
    "network",
    "spec_name",
    "spec",
    "query_name",
    "query",
    "lb",
    "ub",
    "gap",
    "decision",
    "backend",
    "sweeps",
    "compile_seconds",
    "bound_seconds",
    "ac_edges",
    "error",
];

#[derive(Debug, Clone, Default)]
struct Row {
    config: String,
    network: String,
    spec_name: String,
    spec: String,
    query_name: String,
    query: String,
    result: Option<RowResult>,
    error: String,
}

#[derive(Debug, Clone)]
struct RowResult {
    lb: f64,
    ub: f64,
    decision: Decision,
    backend: String,
    sweeps: usize,
    compile_seconds: f64,
    bound_seconds: f64,
    ac_edges: usize,
}

impl Row {
    fn record(&self) -> Vec<String> {
        let num = |f: fn(&RowResult) -> String| self.result.as_ref().map(f).unwrap_or_default();
        vec![
            self.config.clone(),
            self.network.clone(),
            self.spec_name.clone(),
            self.spec.clone(),
            self.query_name.clone(),
            self.query.clone(),
            num(|r| r.lb.to_string()),
            num(|r| r.ub.to_string()),
            num(|r| (r.ub - r.lb).to_string()),
            num(|r| r.decision.to_string()),
            num(|r| r.backend.clone()),
            num(|r| r.sweeps.to_string()),
            num(|r| format!("{:.3}", r.compile_seconds)),
            num(|r| format!("{:.3}", r.bound_seconds)),
            num(|r| r.ac_edges.to_string()),
            self.error.clone(),
        ]
    }
}

type Cells = HashMap<(usize, u64), OnceLock<std::result::Result<(CompiledModel, f64), String>>>;

struct Task {
    run: usize,
    spec: NamedSpec,
    query: NamedQuery,
}

/// Bounds every spec of every config against every query, one CSV row each.
/// A row that fails records its error and the table carries on.
pub fn table(configs: &[PathBuf], over: &Overrides) -> Result<i32> {
    let workers = over.workers.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("cannot start worker pool")?;
    let mut runs: Vec<std::result::Result<Run, String>> = Vec::new();
    let mut names = Vec::new();
    let mut tasks = Vec::new();
    for path in configs {
        names.push(path.display().to_string());
        let index = runs.len();
        let opened = RunConfig::load(path).and_then(|c| Run::open(c, over));
        match &opened {
            Ok(run) => {
                let c = run.config();
                let (specs, queries) = match &c.table {
                    Some(t) => (t.specs.clone(), t.queries.clone()),
                    None => (
                        vec![NamedSpec {
                            name: String::new(),
                            spec: c.spec.clone(),
                        }],
                        vec![NamedQuery {
                            name: String::new(),
                            evidence: c.evidence.clone(),
                        }],
                    ),
                };
                for spec in &specs {
                    for query in &queries {
                        tasks.push(Task {
                            run: index,
                            spec: spec.clone(),
                            query: query.clone(),
                        });
                    }
                }
            }
            Err(_) => tasks.push(Task {
                run: index,
                spec: NamedSpec {
                    name: String::new(),
                    spec: Default::default(),
                },
                query: NamedQuery {
                    name: String::new(),
                    evidence: String::new(),
                },
            }),
        }
        runs.push(opened.map_err(|e| format!("{e:#}")));
    }

    // One compile per distinct circuit; rows sharing it wait on the same cell.
    let cells: Cells = tasks
        .iter()
        .filter_map(|t| {
            let run = runs[t.run].as_ref().ok()?;
            let spec = run.session.spec(&t.spec.spec).ok()?;
            let digest = run.session.digest(&run.session.compile_options(&spec, run.edge_budget()));
            Some(((t.run, digest), OnceLock::new()))
        })
        .collect();

    let rows: Vec<Row> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let mut row = Row {
                    config: names[t.run].clone(),
                    spec_name: t.spec.name.clone(),
                    query_name: t.query.name.clone(),
                    ..Row::default()
                };
                let run = match &runs[t.run] {
                    Ok(run) => run,
                    Err(e) => {
                        row.error = e.clone();
                        return row;
                    }
                };
                row.network = run.config().network.display().to_string();
                if let Err(e) = table_row(run, t, &cells, &mut row) {
                    row.error = format!("{e:#}");
                }
                row
            })
            .collect()
    });

    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    writer.write_record(TABLE_HEADER)?;
    for row in &rows {
        writer.write_record(row.record())?;
    }
    let bytes = writer.into_inner().context("cannot finish CSV")?;
    let out = over.out.clone().or_else(|| {
        runs.iter()
            .filter_map(|r| r.as_ref().ok())
            .find_map(|r| r.config().output.csv.clone())
    });
    if let Some(path) = &out {
        write_file(path, &bytes)?;
    }
    print!("{}", String::from_utf8(bytes)?);
    Ok(0)
}

fn table_row(run: &Run, t: &Task, cells: &Cells, row: &mut Row) -> Result<()> {
    let s = &run.session;
    let spec = s.spec(&t.spec.spec)?;
    row.spec = spec.display(&s.augmented);
    let ev: Evidence = s.evidence(&t.query.evidence)?;
    row.query = ev.display(&s.augmented);
    let options = s.compile_options(&spec, run.edge_budget());
    let Some(cell) = cells.get(&(t.run, s.digest(&options))) else {
        bail!("no circuit slot for this row");
    };
    let compiled = cell.get_or_init(|| {
        let start = Instant::now();
        s.model(&options).map(|m| (m, seconds(start))).map_err(|e| format!("{e:#}"))
    });
    let (model, compile_seconds) = match compiled {
        Ok(m) => m,
        Err(e) => bail!("{e}"),
    };
    let (decision, report) = verify(model, &ev, &spec, run.config().epsilon, run.use_ac(&spec), &run.br_options())?;
    row.result = Some(RowResult {
        lb: report.lb,
        ub: report.ub,
        decision,
        backend: report.backend,
        sweeps: report.iterations,
        compile_seconds: *compile_seconds,
        bound_seconds: report.seconds,
        ac_edges: model.ac.num_edges(),
    });
    Ok(())
}
