use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::{AgentAction, EnvError, Environment, ExactModel, Feedback, Outcome, PartitionDynamics};
use crate::model::PartitionState;

/// Result of [`PartitionEnv::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: PartitionState,
    pub reward: f64,
    pub done: bool,
}

/// One partition's episodic environment with its own random stream.
#[derive(Debug, Clone)]
pub struct PartitionEnv {
    dynamics: Arc<PartitionDynamics>,
    initial: PartitionState,
    state: PartitionState,
    step_count: usize,
    max_step: usize,
    rng: ChaCha8Rng,
}

pub(crate) fn stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

impl PartitionEnv {
    pub fn new(
        dynamics: Arc<PartitionDynamics>,
        initial: PartitionState,
        seed: u64,
        max_step: usize,
    ) -> Self {
        assert_eq!(initial.len(), dynamics.state_bits(), "initial state shape");
        let rng = stream(seed, dynamics.index());
        PartitionEnv {
            dynamics,
            state: initial.clone(),
            initial,
            step_count: 0,
            max_step,
            rng,
        }
    }

    pub fn dynamics(&self) -> &Arc<PartitionDynamics> {
        &self.dynamics
    }

    pub fn name(&self) -> &str {
        self.dynamics.name()
    }

    pub fn state(&self) -> &PartitionState {
        &self.state
    }

    pub fn initial_state(&self) -> &PartitionState {
        &self.initial
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn set_max_step(&mut self, max_step: usize) {
        self.max_step = max_step;
    }

    /// Overrides the current state without touching the step counter.
    pub fn set_state(&mut self, state: PartitionState) {
        assert_eq!(state.len(), self.dynamics.state_bits());
        self.state = state;
    }

    pub fn is_finished(&self) -> bool {
        self.dynamics.is_terminal(&self.state) || self.step_count >= self.max_step
    }

    /// Applies the action without episode bookkeeping; returns the reward.
    pub(crate) fn advance(&mut self, flat: usize) -> f64 {
        let next = self.dynamics.sample(&self.state, flat, &mut self.rng);
        let r = self.dynamics.reward(&self.state, flat, &next);
        self.state = next;
        r
    }

    pub fn step(&mut self, action: &AgentAction) -> Result<Step, EnvError> {
        let flat = self.dynamics.flat_index(action)?;
        self.step_index(flat)
    }

    pub fn step_index(&mut self, flat: usize) -> Result<Step, EnvError> {
        let count = self.dynamics.action_count();
        if flat >= count {
            return Err(EnvError::ActionIndex { index: flat, count });
        }
        if self.is_finished() {
            return Err(EnvError::Finished);
        }
        let reward = self.advance(flat);
        self.step_count += 1;
        Ok(Step {
            state: self.state.clone(),
            reward,
            done: self.is_finished(),
        })
    }
}

impl Environment for PartitionEnv {
    fn observation_len(&self) -> usize {
        self.dynamics.state_bits()
    }

    fn action_count(&self) -> usize {
        self.dynamics.action_count()
    }

    fn observation(&self) -> Vec<bool> {
        self.state.0.clone()
    }

    fn observation_labels(&self) -> Vec<String> {
        self.dynamics
            .partition()
            .bit_labels()
    }

    fn action_labels(&self) -> Vec<String> {
        self.dynamics.action_labels()
    }

    fn reset(&mut self) {
        self.state = self.initial.clone();
        self.step_count = 0;
    }

    fn reseed(&mut self, seed: u64) {
        self.rng = stream(seed, self.dynamics.index());
        self.reset();
    }

    fn act(&mut self, action: usize) -> Result<Feedback, EnvError> {
        let step = self.step_index(action)?;
        let terminal = self.dynamics.is_terminal(&step.state);
        Ok(Feedback {
            reward: step.reward,
            terminal,
            truncated: !terminal && self.step_count >= self.max_step,
        })
    }

    fn is_terminal(&self) -> bool {
        self.dynamics.is_terminal(&self.state)
    }

    fn max_step(&self) -> usize {
        self.max_step
    }
}

impl ExactModel for PartitionEnv {
    fn state_bits(&self) -> usize {
        self.dynamics.state_bits()
    }

    fn action_count(&self) -> usize {
        self.dynamics.action_count()
    }

    fn is_terminal(&self, bits: &[bool]) -> bool {
        self.dynamics.is_terminal_bits(bits)
    }

    fn outcomes(&self, bits: &[bool], action: usize) -> Vec<Outcome> {
        self.dynamics.outcomes_bits(bits, action)
    }

    fn initial(&self) -> Vec<bool> {
        self.initial.0.clone()
    }
}
