use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use irs_core::harness::{
    compare_partition_vs_system, run_experiment, validate_configs, ConfigPaths, ExperimentConfig,
    HarnessError, RunOutput, Scope, SolverKind,
};
use irs_core::solvers::Hyperparams;

#[derive(Parser)]
#[command(name = "irs", version, about = "Train and evaluate intrusion-response agents on partitioned system models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate the configuration documents.
    Validate(Files),
    /// Solve a scope exactly and write its values and greedy policy.
    Vi(Run),
    /// Train an agent and write a CSV training report.
    Train(Run),
    /// Train partition scope and system scope and compare steps to threshold.
    Compare(Compare),
}

#[derive(Args, Clone)]
struct Files {
    /// Directory holding the five documents under their conventional names.
    #[arg(long)]
    config_dir: Option<PathBuf>,
    #[arg(long)]
    topology: Option<PathBuf>,
    #[arg(long)]
    actions: Option<PathBuf>,
    #[arg(long)]
    termination: Option<PathBuf>,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    init_state: Option<PathBuf>,
}

impl Files {
    fn resolve(&self) -> Result<ConfigPaths, HarnessError> {
        let base = self.config_dir.as_ref().map(ConfigPaths::in_dir);
        let pick = |explicit: &Option<PathBuf>, from_dir: Option<PathBuf>, flag: &str| {
            explicit
                .clone()
                .or(from_dir)
                .ok_or_else(|| HarnessError::Config(format!("missing --{flag} (or --config-dir)")))
        };
        let init_state = match (&self.init_state, &base) {
            (Some(p), _) => Some(p.clone()),
            (None, Some(b)) => b.init_state.clone().filter(|p| p.exists()),
            (None, None) => None,
        };
        Ok(ConfigPaths {
            topology: pick(&self.topology, base.as_ref().map(|b| b.topology.clone()), "topology")?,
            actions: pick(&self.actions, base.as_ref().map(|b| b.actions.clone()), "actions")?,
            termination: pick(&self.termination, base.as_ref().map(|b| b.termination.clone()), "termination")?,
            weights: pick(&self.weights, base.as_ref().map(|b| b.weights.clone()), "weights")?,
            init_state,
        })
    }
}

#[derive(Args, Clone)]
struct Run {
    #[command(flatten)]
    files: Files,
    /// `partition:<name>`, `partitions` or `system`.
    #[arg(long)]
    scope: Scope,
    /// `vi`, `q` or `dqn`; `irs vi` always uses `vi`.
    #[arg(long, default_value = "dqn")]
    solver: SolverKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.99)]
    gamma: f64,
    #[arg(long, default_value_t = 2000)]
    epochs: usize,
    #[arg(long, default_value_t = 50)]
    max_step: usize,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 1500)]
    epsilon_zero_epoch: usize,
    #[arg(long, default_value_t = 5000)]
    replay_capacity: usize,
    #[arg(long, default_value_t = 128)]
    batch_size: usize,
    #[arg(long, default_value_t = 200)]
    target_sync: usize,
    #[arg(long, default_value_t = 64)]
    hidden_size: usize,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    /// Tabular Q-learning step size.
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 25)]
    eval_every: usize,
    #[arg(long, default_value_t = 20)]
    eval_episodes: usize,
    /// Relative distance to the optimum that counts as converged.
    #[arg(long, default_value_t = 0.05)]
    threshold: f64,
    /// Stop training once the threshold is reached.
    #[arg(long)]
    stop_at_threshold: bool,
    /// Fill the wall_clock_ms column (makes reports run-dependent).
    #[arg(long)]
    wall_clock: bool,
    /// Parallel trainers for the `partitions` scope.
    #[arg(long)]
    workers: Option<usize>,
    /// Start from a saved network (single-partition DQN runs).
    #[arg(long)]
    warm_start: Option<PathBuf>,
    /// Save the trained network.
    #[arg(long)]
    save_net: Option<PathBuf>,
    /// Report file, or a directory for the `partitions` scope.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Run {
    fn config(&self, solver: SolverKind) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = ExperimentConfig::new(self.files.resolve()?, solver, self.scope.clone());
        cfg.hyper = Hyperparams {
            gamma: self.gamma,
            epsilon_start: self.epsilon,
            epsilon_zero_epoch: self.epsilon_zero_epoch,
            replay_capacity: self.replay_capacity,
            batch_size: self.batch_size,
            max_step: self.max_step,
            epochs: self.epochs,
            target_sync_interval: self.target_sync,
        };
        cfg.hyper
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.hidden_size = self.hidden_size;
        cfg.layers = self.layers;
        cfg.learning_rate = self.learning_rate;
        cfg.alpha = self.alpha;
        cfg.seed = self.seed;
        cfg.eval_every = self.eval_every;
        cfg.eval_episodes = self.eval_episodes;
        cfg.threshold = self.threshold;
        cfg.stop_at_threshold = self.stop_at_threshold;
        cfg.record_wall_clock = self.wall_clock;
        cfg.workers = self.workers;
        cfg.warm_start = self.warm_start.clone();
        cfg.save_checkpoint = self.save_net.clone();
        cfg.out = self.out.clone();
        Ok(cfg)
    }
}

#[derive(Args)]
struct Compare {
    #[command(flatten)]
    run: Run,
    /// Seeds to run; overrides --seed.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.6}"))
}

fn print_output(output: &RunOutput) {
    match output {
        RunOutput::Values(tables) => {
            for t in tables {
                println!(
                    "{}: V(initial) = {:.6} after {} sweeps ({} states)",
                    t.label,
                    t.initial_value,
                    t.iterations,
                    t.rows.len()
                );
            }
        }
        RunOutput::Trained(runs) => {
            for r in runs {
                let s = &r.report.summary;
                let steps = r.report.rows.last().map_or(0, |row| row.env_steps);
                let threshold = s.threshold.map_or("not reached".into(), |t| {
                    format!("epoch {} ({} env steps)", t.epoch, t.env_steps)
                });
                println!(
                    "{}: epochs={} env_steps={} best_eval={} greedy_value={} optimum={} threshold={}",
                    r.label,
                    r.report.rows.len(),
                    steps,
                    fmt_opt(s.best_eval_return),
                    fmt_opt(s.final_greedy_value),
                    fmt_opt(s.reference_value),
                    threshold
                );
            }
        }
    }
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Validate(files) => {
            let v = validate_configs(&files.resolve()?);
            for d in &v.diagnostics {
                eprintln!("{d}");
            }
            if v.is_clean() {
                println!("ok ({} warning(s))", v.diagnostics.len());
            }
            Ok(v.exit_code())
        }
        Command::Vi(r) => {
            print_output(&run_experiment(&r.config(SolverKind::Vi)?)?);
            Ok(0)
        }
        Command::Train(r) => {
            if r.solver == SolverKind::Vi {
                return Err(HarnessError::Config("use `irs vi` for value iteration".into()));
            }
            print_output(&run_experiment(&r.config(r.solver)?)?);
            Ok(0)
        }
        Command::Compare(c) => {
            let seeds = if c.seeds.is_empty() { vec![c.run.seed] } else { c.seeds.clone() };
            let cfg = c.run.config(c.run.solver)?;
            let scope = if cfg.scope == Scope::System { Scope::Partitions } else { cfg.scope.clone() };
            let cmp = compare_partition_vs_system(&cfg, scope, &seeds)?;
            println!("{cmp}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("irs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
