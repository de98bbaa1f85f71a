use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::solvers::{evaluate_policy, ExactProbe, Policy, SolverError};

/// One CSV row per training epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub epoch: u64,
    pub env_steps: u64,
    pub wall_clock_ms: Option<u64>,
    pub episode_return: f64,
    pub eval_return: Option<f64>,
}

/// First evaluation at which the greedy policy met the probe's tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdHit {
    pub epoch: u64,
    pub env_steps: u64,
    /// Present only when wall-clock recording is on.
    pub wall_clock_ms: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub best_eval_return: Option<f64>,
    /// Optimal value from value iteration, when the state space is enumerable.
    pub reference_value: Option<f64>,
    /// Exact value of the final greedy policy, when a probe was supplied.
    pub final_greedy_value: Option<f64>,
    pub threshold: Option<ThresholdHit>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingReport {
    pub rows: Vec<ReportRow>,
    pub summary: ReportSummary,
}

/// Evaluation cadence and the optional convergence probe.
#[derive(Debug)]
pub struct TrainOptions {
    /// Greedy evaluation every this many epochs (and after the last one); 0 disables.
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub record_wall_clock: bool,
    pub probe: Option<ExactProbe>,
    /// Stop as soon as the probe reports convergence.
    pub stop_at_threshold: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            eval_every: 25,
            eval_episodes: 20,
            record_wall_clock: false,
            probe: None,
            stop_at_threshold: false,
        }
    }
}

pub(crate) const EVAL_STREAM: u64 = 0x6576_616c;

pub(crate) struct Recorder<'a> {
    opts: &'a TrainOptions,
    epochs: usize,
    eval_seed: u64,
    started: Instant,
    pub(crate) report: TrainingReport,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(opts: &'a TrainOptions, epochs: usize, seed: u64) -> Self {
        let mut report = TrainingReport::default();
        report.summary.reference_value = opts.probe.as_ref().map(|p| p.reference);
        Recorder {
            opts,
            epochs,
            eval_seed: seed ^ EVAL_STREAM,
            started: Instant::now(),
            report,
        }
    }

    fn elapsed_ms(&self) -> u64 {
        self.started.elapsed().as_millis() as u64
    }

    /// Records an epoch; returns true when training should stop.
    pub(crate) fn epoch<E, P>(
        &mut self,
        epoch: usize,
        env_steps: u64,
        episode_return: f64,
        env: &E,
        policy: &P,
    ) -> Result<bool, SolverError>
    where
        E: Environment + Clone,
        P: Policy + ?Sized,
    {
        let due = self.opts.eval_every > 0
            && ((epoch + 1) % self.opts.eval_every == 0 || epoch + 1 == self.epochs);
        let mut eval_return = None;
        let mut stop = false;
        if due {
            let summary = evaluate_policy(env, policy, self.opts.eval_episodes, self.eval_seed)?;
            let m = summary.mean();
            eval_return = Some(m);
            let best = &mut self.report.summary.best_eval_return;
            *best = Some(best.map_or(m, |b: f64| b.max(m)));
            if let Some(probe) = &self.opts.probe {
                let v = probe.value(policy)?;
                self.report.summary.final_greedy_value = Some(v);
                if probe.within(v) && self.report.summary.threshold.is_none() {
                    self.report.summary.threshold = Some(ThresholdHit {
                        epoch: epoch as u64,
                        env_steps,
                        wall_clock_ms: self.opts.record_wall_clock.then(|| self.elapsed_ms()),
                    });
                }
                stop = self.opts.stop_at_threshold && self.report.summary.threshold.is_some();
            }
        }
        let wall_clock_ms = self.opts.record_wall_clock.then(|| self.elapsed_ms());
        self.report.rows.push(ReportRow {
            epoch: epoch as u64,
            env_steps,
            wall_clock_ms,
            episode_return,
            eval_return,
        });
        Ok(stop)
    }

    pub(crate) fn finish<P: Policy + ?Sized>(mut self, policy: &P) -> Result<TrainingReport, SolverError> {
        if let Some(probe) = &self.opts.probe {
            self.report.summary.final_greedy_value = Some(probe.value(policy)?);
        }
        Ok(self.report)
    }
}
