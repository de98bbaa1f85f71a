//! Stochastic dynamics: pre-condition gating, Bernoulli effects, the
//! time/cost reward, termination tests, exact enumeration for the planners,
//! and decomposition of a system into per-partition environments.

mod dynamics;
mod partition;
mod system;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use dynamics::PartitionDynamics;
pub use partition::{PartitionEnv, Step};
pub use system::{JointStep, SystemDynamics, SystemEnv};

use crate::model::{
    ActionSpec, PartitionState, RewardWeights, SystemModel, SystemState, TerminationSpec,
};

/// Default ceiling on enumerable state bits.
pub const DEFAULT_BIT_CAP: usize = 20;

/// Penalty returned whenever the acting partition's state does not change.
pub const NO_CHANGE_PENALTY: f64 = -2.0;

/// Default episode length.
pub const DEFAULT_MAX_STEP: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("partition `{partition}` has no action `{action}`")]
    UnknownAction { partition: String, action: String },
    #[error("partition `{partition}` has {replication} component(s); index {component} is out of range")]
    ComponentOutOfRange {
        partition: String,
        component: usize,
        replication: usize,
    },
    #[error("action index {index} out of range ({count} actions)")]
    ActionIndex { index: usize, count: usize },
    #[error("episode already finished; call reset first")]
    Finished,
    #[error("state space of {bits} bits exceeds the enumeration cap of {cap} bits")]
    StateSpaceTooLarge { bits: usize, cap: usize },
    #[error("expected {expected} action slots, got {got}")]
    SlotCount { expected: usize, got: usize },
    #[error("invalid action slots: {}", .0.iter().map(|(p, e)| format!("{p}: {e}")).collect::<Vec<_>>().join("; "))]
    Slots(Vec<(String, EnvError)>),
}

/// An action name applied to component `component` of a partition.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AgentAction {
    pub action: String,
    pub component: usize,
}

impl AgentAction {
    pub fn new(action: impl Into<String>, component: usize) -> Self {
        AgentAction {
            action: action.into(),
            component,
        }
    }
}

impl fmt::Display for AgentAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.action, self.component)
    }
}

/// Exact successor distribution of one (state, action) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDist {
    pub outcomes: Vec<(PartitionState, f64)>,
}

impl TransitionDist {
    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|(_, p)| p).sum()
    }

    pub fn probability_of(&self, state: &PartitionState) -> f64 {
        self.outcomes
            .iter()
            .filter(|(s, _)| s == state)
            .map(|(_, p)| p)
            .sum()
    }
}

/// One successor with its probability and reward.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub next: Vec<bool>,
    pub probability: f64,
    pub reward: f64,
}

/// All `2^bits` states in lexicographic order (`false < true`, first bit most
/// significant).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    bits: usize,
}

impl StateSpace {
    pub fn new(bits: usize, cap: usize) -> Result<Self, EnvError> {
        if bits > cap || bits >= usize::BITS as usize {
            return Err(EnvError::StateSpaceTooLarge { bits, cap });
        }
        Ok(StateSpace { bits })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn len(&self) -> usize {
        1usize << self.bits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn state(&self, index: usize) -> PartitionState {
        PartitionState(self.bits_of(index))
    }

    pub fn bits_of(&self, index: usize) -> Vec<bool> {
        (0..self.bits)
            .map(|i| (index >> (self.bits - 1 - i)) & 1 == 1)
            .collect()
    }

    pub fn index_of(&self, bits: &[bool]) -> usize {
        debug_assert_eq!(bits.len(), self.bits);
        bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = PartitionState> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }
}

/// Enumerates a partition's state space, refusing more than `cap` bits.
pub fn enumerate(dynamics: &PartitionDynamics, cap: usize) -> Result<StateSpace, EnvError> {
    StateSpace::new(dynamics.state_bits(), cap)
}

/// Time/cost reward: `-2` if the state did not change, otherwise
/// `-wE·E(a)/eMax - wC·C(a)/cMax`.
pub fn reward(
    prev: &PartitionState,
    action: &ActionSpec,
    next: &PartitionState,
    w: &RewardWeights,
) -> f64 {
    if prev == next {
        NO_CHANGE_PENALTY
    } else {
        -(w.time_weight * action.execution_time / w.max_time) - w.cost_weight * action.cost / w.max_cost
    }
}

pub fn is_terminal_partition(
    spec: &TerminationSpec,
    partition: &crate::model::Partition,
    state: &PartitionState,
) -> bool {
    spec.is_terminal_partition(partition, state)
}

pub fn is_terminal_system(spec: &TerminationSpec, model: &SystemModel, state: &SystemState) -> bool {
    spec.is_terminal_system(model, state)
}

/// Splits a model into one environment per partition. Partition `i` draws
/// from stream `i` of the master seed.
pub fn decompose(
    model: &SystemModel,
    initial: &SystemState,
    seed: u64,
    max_step: usize,
) -> Vec<PartitionEnv> {
    assert!(model.state_matches(initial), "initial state does not match the model");
    (0..model.partitions.len())
        .map(|i| {
            PartitionEnv::new(
                Arc::new(PartitionDynamics::new(model, i)),
                initial.partitions[i].clone(),
                seed,
                max_step,
            )
        })
        .collect()
}

/// What an environment reports after one action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feedback {
    pub reward: f64,
    /// Reached a secure state.
    pub terminal: bool,
    /// Hit the step limit without reaching a secure state.
    pub truncated: bool,
}

impl Feedback {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

/// Episodic interface the learners train against. Actions are dense indices.
pub trait Environment {
    fn observation_len(&self) -> usize;
    fn action_count(&self) -> usize;
    fn observation(&self) -> Vec<bool>;
    fn observation_labels(&self) -> Vec<String>;
    fn action_labels(&self) -> Vec<String>;
    /// Back to the configured initial state.
    fn reset(&mut self);
    /// Restarts the random stream from `seed` (and resets).
    fn reseed(&mut self, seed: u64);
    fn act(&mut self, action: usize) -> Result<Feedback, EnvError>;
    fn is_terminal(&self) -> bool;
    fn max_step(&self) -> usize;
}

/// Exact dynamics over flat bit vectors, for planners and policy evaluation.
pub trait ExactModel {
    fn state_bits(&self) -> usize;
    fn action_count(&self) -> usize;
    fn is_terminal(&self, bits: &[bool]) -> bool;
    fn outcomes(&self, bits: &[bool], action: usize) -> Vec<Outcome>;
    fn initial(&self) -> Vec<bool>;
}
