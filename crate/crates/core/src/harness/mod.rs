//! Experiment runner behind the `irs` binary: config loading and validation,
//! training runs at partition or system scope, value-iteration tables, CSV
//! reports, and the partition-versus-system comparison.

mod csv_report;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

pub use csv_report::{csv_body, read_report, write_report, COLUMNS};

use crate::dsl::{
    assemble_model, initial_state, parse_action_set, parse_initial_state, parse_termination,
    parse_topology, parse_weights, DslError, InitialStateDoc,
};
use crate::env::{decompose, Environment, ExactModel, PartitionEnv, SystemEnv, DEFAULT_BIT_CAP};
use crate::model::{Diagnostic, SystemModel, SystemState};
use crate::nn::{Checkpoint, MlpSpec};
use crate::solvers::{
    dqn_train, dqn_train_from, q_learn_tabular, value_iteration, warm_start, ExactProbe,
    Hyperparams, SolverError, TrainOptions, TrainingReport,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    /// 2 for configuration problems, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Runtime(_) => 3,
        }
    }
}

impl From<DslError> for HarnessError {
    fn from(e: DslError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<SolverError> for HarnessError {
    fn from(e: SolverError) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

/// Locations of the five configuration documents.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigPaths {
    pub topology: PathBuf,
    pub actions: PathBuf,
    pub termination: PathBuf,
    pub weights: PathBuf,
    /// Optional; every variable starts false when absent.
    pub init_state: Option<PathBuf>,
}

impl ConfigPaths {
    /// The conventional file names inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        ConfigPaths {
            topology: dir.join("topology-containers.yml"),
            actions: dir.join("action-set-containers.yml"),
            termination: dir.join("termination.yml"),
            weights: dir.join("weights.yml"),
            init_state: Some(dir.join("init-state.yml")),
        }
    }
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: Result<T, DslError>) -> Result<T, HarnessError> {
    r.map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: SystemModel,
    pub initial: SystemState,
    pub warnings: Vec<Diagnostic>,
}

enum LoadFailure {
    Model(Vec<Diagnostic>),
    Other(HarnessError),
}

impl From<HarnessError> for LoadFailure {
    fn from(e: HarnessError) -> Self {
        LoadFailure::Other(e)
    }
}

fn load(paths: &ConfigPaths) -> Result<LoadedModel, LoadFailure> {
    let topology = in_file(&paths.topology, parse_topology(&read(&paths.topology)?))?;
    let actions = in_file(&paths.actions, parse_action_set(&read(&paths.actions)?))?;
    let termination = in_file(&paths.termination, parse_termination(&read(&paths.termination)?))?;
    let weights = in_file(&paths.weights, parse_weights(&read(&paths.weights)?))?;
    let init_doc = match &paths.init_state {
        Some(p) => in_file(p, parse_initial_state(&read(p)?))?,
        None => InitialStateDoc::default(),
    };
    let assembled = match assemble_model(&topology, &actions, &termination, &weights) {
        Ok(a) => a,
        Err(DslError::Model(ds)) => return Err(LoadFailure::Model(ds)),
        Err(e) => return Err(LoadFailure::Other(e.into())),
    };
    let initial = initial_state(&assembled.model, &init_doc).map_err(HarnessError::from)?;
    Ok(LoadedModel {
        model: assembled.model,
        initial,
        warnings: assembled.warnings,
    })
}

pub fn load_model(paths: &ConfigPaths) -> Result<LoadedModel, HarnessError> {
    load(paths).map_err(|f| match f {
        LoadFailure::Model(ds) => DslError::Model(ds).into(),
        LoadFailure::Other(e) => e,
    })
}

/// Result of `irs validate`.
#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub diagnostics: Vec<Diagnostic>,
}

impl Validation {
    pub fn is_clean(&self) -> bool {
        !self.diagnostics.iter().any(Diagnostic::is_error)
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_clean() {
            0
        } else {
            2
        }
    }
}

/// Parses and assembles every document, collecting all findings.
pub fn validate_configs(paths: &ConfigPaths) -> Validation {
    let diagnostics = match load(paths) {
        Ok(loaded) => loaded.warnings,
        Err(LoadFailure::Model(ds)) => ds,
        Err(LoadFailure::Other(e)) => vec![Diagnostic::error("config", e.to_string())],
    };
    Validation { diagnostics }
}

/// What to train or solve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    /// One named partition.
    Partition(String),
    /// Every partition, each with its own learner.
    Partitions,
    /// One learner over the joint state and action space.
    System,
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "system" => Ok(Scope::System),
            "partitions" => Ok(Scope::Partitions),
            _ => match s.strip_prefix("partition:") {
                Some(name) if !name.is_empty() => Ok(Scope::Partition(name.to_string())),
                _ => Err(format!(
                    "expected `partition:<name>`, `partitions` or `system`, got `{s}`"
                )),
            },
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Partition(n) => write!(f, "partition:{n}"),
            Scope::Partitions => f.write_str("partitions"),
            Scope::System => f.write_str("system"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Vi,
    Q,
    Dqn,
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "vi" => Ok(SolverKind::Vi),
            "q" => Ok(SolverKind::Q),
            "dqn" => Ok(SolverKind::Dqn),
            _ => Err(format!("expected `vi`, `q` or `dqn`, got `{s}`")),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Vi => "vi",
            SolverKind::Q => "q",
            SolverKind::Dqn => "dqn",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub paths: ConfigPaths,
    pub solver: SolverKind,
    pub scope: Scope,
    pub hyper: Hyperparams,
    pub hidden_size: usize,
    pub layers: usize,
    pub learning_rate: f64,
    /// Tabular step size.
    pub alpha: f64,
    pub seed: u64,
    pub eval_every: usize,
    pub eval_episodes: usize,
    /// Relative distance to the value-iteration optimum that counts as converged.
    pub threshold: f64,
    pub stop_at_threshold: bool,
    pub record_wall_clock: bool,
    /// Parallel trainers for the `partitions` scope; defaults to one per partition.
    pub workers: Option<usize>,
    /// Report file, or a directory for the `partitions` scope.
    pub out: Option<PathBuf>,
    pub warm_start: Option<PathBuf>,
    pub save_checkpoint: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(paths: ConfigPaths, solver: SolverKind, scope: Scope) -> Self {
        ExperimentConfig {
            paths,
            solver,
            scope,
            hyper: Hyperparams::default(),
            hidden_size: 64,
            layers: 2,
            learning_rate: 0.1,
            alpha: 0.01,
            seed: 0,
            eval_every: 25,
            eval_episodes: 20,
            threshold: 0.05,
            stop_at_threshold: false,
            record_wall_clock: false,
            workers: None,
            out: None,
            warm_start: None,
            save_checkpoint: None,
        }
    }

    fn mlp(&self) -> MlpSpec {
        MlpSpec {
            input_size: 1,
            hidden_size: self.hidden_size,
            layers: self.layers,
            output_size: 1,
            learning_rate: self.learning_rate,
        }
    }

    /// Resolved settings, one `key: value` per line, for report headers.
    pub fn describe(&self) -> Vec<String> {
        let h = &self.hyper;
        let p = &self.paths;
        let mut lines = vec![
            format!("solver: {}", self.solver),
            format!("scope: {}", self.scope),
            format!("seed: {}", self.seed),
            format!("topology: {}", p.topology.display()),
            format!("actions: {}", p.actions.display()),
            format!("termination: {}", p.termination.display()),
            format!("weights: {}", p.weights.display()),
            format!(
                "init-state: {}",
                p.init_state.as_ref().map_or("-".into(), |x| x.display().to_string())
            ),
            format!(
                "hyperparams: gamma={} epochs={} max_step={} epsilon_start={} epsilon_zero_epoch={} replay_capacity={} batch_size={} target_sync_interval={}",
                h.gamma, h.epochs, h.max_step, h.epsilon_start, h.epsilon_zero_epoch, h.replay_capacity, h.batch_size, h.target_sync_interval
            ),
        ];
        match self.solver {
            SolverKind::Dqn => lines.push(format!(
                "network: hidden_size={} layers={} learning_rate={}",
                self.hidden_size, self.layers, self.learning_rate
            )),
            SolverKind::Q => lines.push(format!("alpha: {}", self.alpha)),
            SolverKind::Vi => {}
        }
        lines.push(format!(
            "evaluation: every={} episodes={} threshold={}",
            self.eval_every, self.eval_episodes, self.threshold
        ));
        if let Some(w) = &self.warm_start {
            lines.push(format!("warm-start: {}", w.display()));
        }
        lines.push(format!(
            "wall_clock_ms: {}",
            if self.record_wall_clock { "recorded" } else { "not recorded (enable with --wall-clock)" }
        ));
        lines
    }
}

/// A training run for one scope label (a partition name or `system`).
#[derive(Debug, Clone, PartialEq)]
pub struct ScopeRun {
    pub label: String,
    pub report: TrainingReport,
    pub checkpoint: Option<Checkpoint>,
}

/// Value-iteration output for one scope label.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub label: String,
    pub bit_labels: Vec<String>,
    pub action_labels: Vec<String>,
    pub initial: Vec<bool>,
    pub initial_value: f64,
    pub iterations: usize,
    /// `(state bits, value, greedy action)`; terminal states have no action.
    pub rows: Vec<(Vec<bool>, f64, Option<usize>)>,
}

impl ValueTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("# scope: {}\n# bits: {}\n", self.label, self.bit_labels.join(" "));
        out.push_str(&format!(
            "# initial: {} value={} iterations={}\n",
            bit_string(&self.initial),
            self.initial_value,
            self.iterations
        ));
        out.push_str("state,value,action\n");
        for (bits, v, a) in &self.rows {
            let action = a.map_or("", |a| self.action_labels[a].as_str());
            out.push_str(&format!("{},{v},{action}\n", bit_string(bits)));
        }
        out
    }
}

pub fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutput {
    Trained(Vec<ScopeRun>),
    Values(Vec<ValueTable>),
}

fn vi_table<M: ExactModel + Environment>(
    env: &M,
    label: String,
    gamma: f64,
) -> Result<ValueTable, HarnessError> {
    let vi = value_iteration(env, gamma, 1e-10)?;
    let initial = ExactModel::initial(env);
    Ok(ValueTable {
        label,
        bit_labels: env.observation_labels(),
        action_labels: env.action_labels(),
        initial_value: vi.value_of(&initial),
        initial,
        iterations: vi.iterations(),
        rows: (0..vi.space.len())
            .map(|s| (vi.space.bits_of(s), vi.values[s], vi.policy[s]))
            .collect(),
    })
}

/// Builds the exact convergence probe when the scope is small enough to solve.
pub fn probe_for<M>(env: &M, gamma: f64, threshold: f64) -> Result<Option<ExactProbe>, HarnessError>
where
    M: ExactModel + Clone + Send + Sync + 'static,
{
    if env.state_bits() > DEFAULT_BIT_CAP {
        return Ok(None);
    }
    let vi = value_iteration(env, gamma, 1e-10)?;
    Ok(Some(ExactProbe {
        reference: vi.value_of(&env.initial()),
        model: Box::new(env.clone()),
        gamma,
        relative_tolerance: threshold,
        absolute_tolerance: 0.0,
    }))
}

fn train_env<E>(cfg: &ExperimentConfig, mut env: E, label: String) -> Result<ScopeRun, HarnessError>
where
    E: Environment + ExactModel + Clone + Send + Sync + 'static,
{
    let opts = TrainOptions {
        eval_every: cfg.eval_every,
        eval_episodes: cfg.eval_episodes,
        record_wall_clock: cfg.record_wall_clock,
        probe: probe_for(&env, cfg.hyper.gamma, cfg.threshold)?,
        stop_at_threshold: cfg.stop_at_threshold,
    };
    let (q, report) = match cfg.solver {
        SolverKind::Q => q_learn_tabular(&mut env, &cfg.hyper, cfg.alpha, cfg.seed, &opts)?,
        SolverKind::Dqn => match &cfg.warm_start {
            Some(path) => {
                let cp = Checkpoint::from_text(&read(path)?)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                let mut net = warm_start(&cp, &env, cfg.seed)?;
                net.set_learning_rate(cfg.learning_rate);
                dqn_train_from(&mut env, net, &cfg.hyper, cfg.seed, &opts)?
            }
            None => dqn_train(&mut env, cfg.mlp(), &cfg.hyper, cfg.seed, &opts)?,
        },
        SolverKind::Vi => unreachable!("value iteration does not train"),
    };
    let checkpoint = q.checkpoint(env.observation_labels(), env.action_labels());
    Ok(ScopeRun {
        label,
        report,
        checkpoint,
    })
}

fn partition_envs(cfg: &ExperimentConfig, loaded: &LoadedModel) -> Vec<PartitionEnv> {
    decompose(&loaded.model, &loaded.initial, cfg.seed, cfg.hyper.max_step)
}

fn named_partition(loaded: &LoadedModel, name: &str) -> Result<usize, HarnessError> {
    loaded
        .model
        .partition(name)
        .map(|(i, _)| i)
        .ok_or_else(|| {
            HarnessError::Config(format!(
                "unknown partition `{name}`; valid partitions: {}",
                loaded.model.partition_names().join(", ")
            ))
        })
}

/// Runs `job` over `0..n` on up to `workers` threads, keeping results in index order.
fn parallel<T: Send>(
    n: usize,
    workers: usize,
    job: impl Fn(usize) -> Result<T, HarnessError> + Sync,
) -> Result<Vec<T>, HarnessError> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<T, HarnessError>>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let r = job(i);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every index is processed"))
        .collect()
}

/// Solves or trains the configured scope without writing anything.
pub fn execute(cfg: &ExperimentConfig, loaded: &LoadedModel) -> Result<RunOutput, HarnessError> {
    let gamma = cfg.hyper.gamma;
    if cfg.solver == SolverKind::Vi {
        let tables = match &cfg.scope {
            Scope::Partition(name) => {
                let i = named_partition(loaded, name)?;
                let env = partition_envs(cfg, loaded).swap_remove(i);
                vec![vi_table(&env, name.clone(), gamma)?]
            }
            Scope::Partitions => partition_envs(cfg, loaded)
                .into_iter()
                .map(|env| {
                    let label = env.name().to_string();
                    vi_table(&env, label, gamma)
                })
                .collect::<Result<_, _>>()?,
            Scope::System => {
                let env = SystemEnv::new(&loaded.model, &loaded.initial, cfg.seed, cfg.hyper.max_step);
                vec![vi_table(&env, "system".into(), gamma)?]
            }
        };
        return Ok(RunOutput::Values(tables));
    }
    cfg.hyper.validate()?;
    if cfg.warm_start.is_some() && !matches!(cfg.scope, Scope::Partition(_)) {
        return Err(HarnessError::Config("--warm-start needs a single-partition scope".into()));
    }
    let runs = match &cfg.scope {
        Scope::Partition(name) => {
            let i = named_partition(loaded, name)?;
            let env = partition_envs(cfg, loaded).swap_remove(i);
            vec![train_env(cfg, env, name.clone())?]
        }
        Scope::Partitions => {
            let envs = partition_envs(cfg, loaded);
            let workers = cfg.workers.unwrap_or(envs.len());
            parallel(envs.len(), workers, |i| {
                let env = envs[i].clone();
                let label = env.name().to_string();
                train_env(cfg, env, label)
            })?
        }
        Scope::System => {
            let env = SystemEnv::new(&loaded.model, &loaded.initial, cfg.seed, cfg.hyper.max_step);
            vec![train_env(cfg, env, "system".into())?]
        }
    };
    Ok(RunOutput::Trained(runs))
}

fn write_file(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| HarnessError::Runtime(format!("{}: {e}", path.display())))
}

fn output_path(cfg: &ExperimentConfig, out: &Path, label: &str) -> PathBuf {
    if cfg.scope == Scope::Partitions {
        out.join(format!("{label}.csv"))
    } else {
        out.to_path_buf()
    }
}

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis())
}

/// Loads the model, runs the experiment and writes reports, value tables and
/// checkpoints where configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let loaded = load_model(&cfg.paths)?;
    let started = unix_ms();
    let output = execute(cfg, &loaded)?;
    if let (Some(path), RunOutput::Trained(runs)) = (&cfg.save_checkpoint, &output) {
        if let Some(cp) = runs.iter().find_map(|r| r.checkpoint.as_ref()) {
            write_file(path, &cp.to_text())?;
        }
    }
    let Some(out) = &cfg.out else {
        return Ok(output);
    };
    match &output {
        RunOutput::Values(tables) => {
            for t in tables {
                write_file(&output_path(cfg, out, &t.label), &t.to_csv())?;
            }
        }
        RunOutput::Trained(runs) => {
            for run in runs {
                let mut header = vec!["irs training report".to_string()];
                header.extend(cfg.describe());
                if cfg.scope == Scope::Partitions {
                    header.push(format!("partition: {}", run.label));
                }
                header.push(format!("started_unix_ms: {started}"));
                let text = write_report(&run.report, &header)?;
                write_file(&output_path(cfg, out, &run.label), &text)?;
            }
        }
    }
    Ok(output)
}

/// Steps and time one scope needed to reach its threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    pub seed: u64,
    /// `None` when the threshold was not reached within the budget.
    pub env_steps: Option<u64>,
    pub wall_clock_ms: Option<u64>,
    pub reference_value: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Partition-scope median steps ≤ system-scope median.
    PartitionFirst,
    SystemFirst,
    /// Neither scope reached its threshold.
    NotReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub partition_scope: Scope,
    pub partition: Vec<ThresholdResult>,
    pub system: Vec<ThresholdResult>,
    pub partition_median_steps: Option<u64>,
    pub system_median_steps: Option<u64>,
    pub verdict: Verdict,
}

/// Lower median with "not reached" ranked after every reached value.
pub fn median_steps(results: &[ThresholdResult]) -> Option<u64> {
    if results.is_empty() {
        return None;
    }
    let mut v: Vec<Option<u64>> = results.iter().map(|r| r.env_steps).collect();
    v.sort_by_key(|s| (s.is_none(), *s));
    v[(v.len() - 1) / 2]
}

/// A multi-partition run counts the environment steps of all its learners
/// and, since they train in parallel, the slowest learner's time.
fn threshold_of(seed: u64, runs: &[ScopeRun]) -> ThresholdResult {
    let hits: Option<Vec<_>> = runs.iter().map(|r| r.report.summary.threshold).collect();
    let refs: Option<Vec<f64>> = runs.iter().map(|r| r.report.summary.reference_value).collect();
    ThresholdResult {
        seed,
        env_steps: hits.as_ref().map(|h| h.iter().map(|t| t.env_steps).sum()),
        wall_clock_ms: hits.and_then(|h| h.iter().map(|t| t.wall_clock_ms).try_fold(0, |m, w| w.map(|w| w.max(m)))),
        reference_value: refs.map(|r| r.iter().sum()),
    }
}

/// Trains `partition_scope` and the system scope under every seed and
/// compares environment steps to each scope's own threshold.
pub fn compare_partition_vs_system(
    base: &ExperimentConfig,
    partition_scope: Scope,
    seeds: &[u64],
) -> Result<Comparison, HarnessError> {
    if partition_scope == Scope::System {
        return Err(HarnessError::Config("the partition side of a comparison cannot be `system`".into()));
    }
    if base.solver == SolverKind::Vi {
        return Err(HarnessError::Config("compare needs a training solver (q or dqn)".into()));
    }
    let loaded = load_model(&base.paths)?;
    let mut partition = Vec::new();
    let mut system = Vec::new();
    for &seed in seeds {
        for (scope, sink) in [(&partition_scope, &mut partition), (&Scope::System, &mut system)] {
            let cfg = ExperimentConfig {
                scope: scope.clone(),
                seed,
                out: None,
                stop_at_threshold: true,
                record_wall_clock: true,
                ..base.clone()
            };
            let RunOutput::Trained(runs) = execute(&cfg, &loaded)? else {
                unreachable!("training solvers produce reports");
            };
            sink.push(threshold_of(seed, &runs));
        }
    }
    let pm = median_steps(&partition);
    let sm = median_steps(&system);
    let verdict = match (pm, sm) {
        (None, None) => Verdict::NotReached,
        (Some(_), None) => Verdict::PartitionFirst,
        (None, Some(_)) => Verdict::SystemFirst,
        (Some(p), Some(s)) if p <= s => Verdict::PartitionFirst,
        _ => Verdict::SystemFirst,
    };
    Ok(Comparison {
        partition_scope,
        partition,
        system,
        partition_median_steps: pm,
        system_median_steps: sm,
        verdict,
    })
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let steps = |s: Option<u64>| s.map_or("not reached".to_string(), |s| s.to_string());
        let ms = |s: Option<u64>| s.map_or("-".to_string(), |s| format!("{s} ms"));
        writeln!(f, "seed\tscope\tenv_steps\twall_clock")?;
        for (p, s) in self.partition.iter().zip(&self.system) {
            writeln!(f, "{}\t{}\t{}\t{}", p.seed, self.partition_scope, steps(p.env_steps), ms(p.wall_clock_ms))?;
            writeln!(f, "{}\tsystem\t{}\t{}", s.seed, steps(s.env_steps), ms(s.wall_clock_ms))?;
        }
        writeln!(
            f,
            "median env steps: {} {}, system {}",
            self.partition_scope,
            steps(self.partition_median_steps),
            steps(self.system_median_steps)
        )?;
        let verdict = match self.verdict {
            Verdict::PartitionFirst => "partition scope reaches its threshold no later than system scope",
            Verdict::SystemFirst => "system scope reaches its threshold first",
            Verdict::NotReached => "neither scope reached its threshold",
        };
        write!(f, "verdict: {verdict}")
    }
}
