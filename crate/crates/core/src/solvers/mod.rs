//! Planners and learners over a partition (or the whole system): exact
//! value iteration, tabular Q-learning and deep Q-learning with experience
//! replay, plus greedy-policy evaluation and warm starts.

mod dqn;
mod eval;
mod replay;
mod report;
mod tabular;
mod vi;

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

pub use dqn::{dqn_train, dqn_train_from, warm_start};
pub use eval::{evaluate_policy, policy_value, EvalSummary, ExactProbe};
pub use replay::{ReplayBuffer, Transition};
pub use report::{ReportRow, ReportSummary, ThresholdHit, TrainOptions, TrainingReport};
pub use tabular::q_learn_tabular;
pub use vi::{value_iteration, value_iteration_capped, FiniteMdp, ViResult};

use crate::env::EnvError;
use crate::nn::{Checkpoint, Mlp, NnError};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid hyperparameters: {0}")]
    Hyperparams(String),
    #[error("the environment has no actions")]
    NoActions,
    #[error("{bits}-bit observations cannot be tabulated (limit {limit})")]
    NotEnumerable { bits: usize, limit: usize },
    #[error("value iteration did not reach tolerance {tolerance} within {iterations} iterations")]
    NotConverged { tolerance: f64, iterations: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hyperparams {
    /// Discount factor, strictly between 0 and 1.
    pub gamma: f64,
    pub epsilon_start: f64,
    /// First epoch at which exploration is fully off.
    pub epsilon_zero_epoch: usize,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub max_step: usize,
    pub epochs: usize,
    /// Environment steps between copies of the online network into the target.
    pub target_sync_interval: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            gamma: 0.99,
            epsilon_start: 0.01,
            epsilon_zero_epoch: 1500,
            replay_capacity: 5000,
            batch_size: 128,
            max_step: crate::env::DEFAULT_MAX_STEP,
            epochs: 2000,
            target_sync_interval: 200,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), SolverError> {
        let fail = |m: String| Err(SolverError::Hyperparams(m));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) {
            return fail(format!("epsilon must lie in [0, 1], got {}", self.epsilon_start));
        }
        if self.replay_capacity == 0 || self.batch_size == 0 || self.target_sync_interval == 0 {
            return fail("replay capacity, batch size and target sync interval must be at least 1".into());
        }
        if self.batch_size > self.replay_capacity {
            return fail(format!(
                "batch size {} exceeds replay capacity {}",
                self.batch_size, self.replay_capacity
            ));
        }
        if self.max_step == 0 {
            return fail("max step must be at least 1".into());
        }
        Ok(())
    }
}

/// Exploration rate: `epsilon_start` at epoch 0, falling linearly to 0 at
/// `epsilon_zero_epoch` and staying there.
pub fn epsilon(epoch: usize, h: &Hyperparams) -> f64 {
    if epoch >= h.epsilon_zero_epoch {
        return 0.0;
    }
    h.epsilon_start * (1.0 - epoch as f64 / h.epsilon_zero_epoch as f64)
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn encode(obs: &[bool]) -> Vec<f64> {
    obs.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect()
}

/// Packs up to 64 bits, first bit most significant.
pub fn state_key(obs: &[bool]) -> u64 {
    obs.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

/// Maps an observation to an action index.
pub trait Policy {
    fn action(&self, obs: &[bool]) -> usize;
}

impl<F: Fn(&[bool]) -> usize> Policy for F {
    fn action(&self, obs: &[bool]) -> usize {
        self(obs)
    }
}

/// Tabular action values; unseen entries read as 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TabularQ {
    pub actions: usize,
    pub table: HashMap<u64, Vec<f64>>,
}

impl TabularQ {
    pub fn new(actions: usize) -> Self {
        TabularQ {
            actions,
            table: HashMap::new(),
        }
    }

    pub fn get(&self, obs: &[bool], action: usize) -> f64 {
        self.table
            .get(&state_key(obs))
            .map_or(0.0, |row| row[action])
    }

    pub fn row_mut(&mut self, obs: &[bool]) -> &mut Vec<f64> {
        let n = self.actions;
        self.table.entry(state_key(obs)).or_insert_with(|| vec![0.0; n])
    }

    pub fn values(&self, obs: &[bool]) -> Vec<f64> {
        self.table
            .get(&state_key(obs))
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.actions])
    }

    pub fn is_all_zero(&self) -> bool {
        self.table.values().flatten().all(|&v| v == 0.0)
    }
}

/// Online network plus the frozen copy used for bootstrap targets.
#[derive(Debug, Clone, PartialEq)]
pub struct NetQ {
    pub online: Mlp,
    pub target: Mlp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QFunction {
    Tabular(TabularQ),
    Net(NetQ),
}

impl QFunction {
    pub fn values(&self, obs: &[bool]) -> Vec<f64> {
        match self {
            QFunction::Tabular(t) => t.values(obs),
            QFunction::Net(n) => n
                .online
                .forward(&encode(obs))
                .expect("observation matches network input"),
        }
    }

    pub fn greedy_action(&self, obs: &[bool]) -> usize {
        argmax(&self.values(obs))
    }

    /// Saves the online network with the environment's labels.
    pub fn checkpoint(&self, input_labels: Vec<String>, output_labels: Vec<String>) -> Option<Checkpoint> {
        match self {
            QFunction::Net(n) => Some(Checkpoint {
                net: n.online.clone(),
                input_labels,
                output_labels,
            }),
            QFunction::Tabular(_) => None,
        }
    }
}

impl Policy for QFunction {
    fn action(&self, obs: &[bool]) -> usize {
        self.greedy_action(obs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_schedule() {
        let h = Hyperparams::default();
        assert_eq!(epsilon(0, &h), 0.01);
        assert_eq!(epsilon(750, &h), 0.005);
        assert_eq!(epsilon(1500, &h), 0.0);
        assert_eq!(epsilon(10_000, &h), 0.0);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[-1.0, -1.0]), 0);
    }

    #[test]
    fn hyperparams_reject_bad_values() {
        let ok = Hyperparams::default();
        assert!(ok.validate().is_ok());
        for bad in [
            Hyperparams { gamma: 1.0, ..ok },
            Hyperparams { gamma: 0.0, ..ok },
            Hyperparams { batch_size: 0, ..ok },
            Hyperparams { batch_size: 6000, ..ok },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
