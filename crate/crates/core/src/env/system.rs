use std::sync::Arc;

use crate::env::{
    decompose, AgentAction, EnvError, Environment, ExactModel, Feedback, Outcome,
    PartitionDynamics, PartitionEnv,
};
use crate::model::{SystemModel, SystemState};

/// Exact joint dynamics of all partitions acting in parallel.
///
/// A joint action holds one slot per partition, encoded mixed-radix with
/// partition 0 most significant. Partitions that are already secure ignore
/// their slot and contribute reward 0; the others contribute their own
/// reward, and the joint reward is the sum.
#[derive(Debug, Clone)]
pub struct SystemDynamics {
    parts: Vec<Arc<PartitionDynamics>>,
    offsets: Vec<usize>,
    bits: usize,
}

impl SystemDynamics {
    pub fn new(parts: Vec<Arc<PartitionDynamics>>) -> Self {
        let mut offsets = Vec::with_capacity(parts.len());
        let mut bits = 0;
        for p in &parts {
            offsets.push(bits);
            bits += p.state_bits();
        }
        SystemDynamics {
            parts,
            offsets,
            bits,
        }
    }

    pub fn from_model(model: &SystemModel) -> Self {
        SystemDynamics::new(
            (0..model.partitions.len())
                .map(|i| Arc::new(PartitionDynamics::new(model, i)))
                .collect(),
        )
    }

    pub fn parts(&self) -> &[Arc<PartitionDynamics>] {
        &self.parts
    }

    pub fn state_bits(&self) -> usize {
        self.bits
    }

    fn radix(&self, i: usize) -> usize {
        self.parts[i].action_count().max(1)
    }

    pub fn action_count(&self) -> usize {
        if self.parts.iter().all(|p| p.action_count() == 0) {
            return 0;
        }
        (0..self.parts.len()).map(|i| self.radix(i)).product()
    }

    /// Per-partition flat action indices of a joint action.
    pub fn decode(&self, joint: usize) -> Vec<Option<usize>> {
        let mut rest = joint;
        let mut slots = vec![None; self.parts.len()];
        for i in (0..self.parts.len()).rev() {
            let r = self.radix(i);
            if self.parts[i].action_count() > 0 {
                slots[i] = Some(rest % r);
            }
            rest /= r;
        }
        slots
    }

    pub fn slice<'a>(&self, bits: &'a [bool], i: usize) -> &'a [bool] {
        &bits[self.offsets[i]..self.offsets[i] + self.parts[i].state_bits()]
    }

    pub fn is_terminal_bits(&self, bits: &[bool]) -> bool {
        (0..self.parts.len()).all(|i| self.parts[i].is_terminal_bits(self.slice(bits, i)))
    }

    pub fn outcomes_bits(&self, bits: &[bool], joint: usize) -> Vec<Outcome> {
        let slots = self.decode(joint);
        let mut acc = vec![Outcome {
            next: Vec::with_capacity(self.bits),
            probability: 1.0,
            reward: 0.0,
        }];
        for (i, part) in self.parts.iter().enumerate() {
            let local = self.slice(bits, i);
            let sub = match slots[i] {
                Some(a) if !part.is_terminal_bits(local) => part.outcomes_bits(local, a),
                _ => vec![Outcome {
                    next: local.to_vec(),
                    probability: 1.0,
                    reward: 0.0,
                }],
            };
            let mut next = Vec::with_capacity(acc.len() * sub.len());
            for a in &acc {
                for o in &sub {
                    let mut bits = a.next.clone();
                    bits.extend_from_slice(&o.next);
                    next.push(Outcome {
                        next: bits,
                        probability: a.probability * o.probability,
                        reward: a.reward + o.reward,
                    });
                }
            }
            acc = next;
        }
        acc
    }

    pub fn action_labels(&self) -> Vec<String> {
        let per: Vec<Vec<String>> = self.parts.iter().map(|p| p.action_labels()).collect();
        (0..self.action_count())
            .map(|j| {
                self.decode(j)
                    .iter()
                    .zip(&self.parts)
                    .zip(&per)
                    .map(|((slot, p), labels)| match slot {
                        Some(a) => format!("{}:{}", p.name(), labels[*a]),
                        None => format!("{}:-", p.name()),
                    })
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect()
    }
}

/// Result of [`SystemEnv::joint_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct JointStep {
    pub state: SystemState,
    /// `(partition index, reward)` for every non-empty slot.
    pub rewards: Vec<(usize, f64)>,
    pub done: bool,
}

/// Whole-system environment built from per-partition environments, each
/// keeping its own random stream.
#[derive(Debug, Clone)]
pub struct SystemEnv {
    dynamics: SystemDynamics,
    parts: Vec<PartitionEnv>,
    labels: Vec<String>,
    step_count: usize,
    max_step: usize,
}

impl SystemEnv {
    pub fn new(model: &SystemModel, initial: &SystemState, seed: u64, max_step: usize) -> Self {
        let parts = decompose(model, initial, seed, max_step);
        let dynamics = SystemDynamics::new(parts.iter().map(|p| p.dynamics().clone()).collect());
        let labels = model
            .partitions
            .iter()
            .flat_map(|p| p.bit_labels())
            .collect();
        SystemEnv {
            dynamics,
            parts,
            labels,
            step_count: 0,
            max_step,
        }
    }

    pub fn dynamics(&self) -> &SystemDynamics {
        &self.dynamics
    }

    pub fn partitions(&self) -> &[PartitionEnv] {
        &self.parts
    }

    pub fn state(&self) -> SystemState {
        SystemState {
            partitions: self.parts.iter().map(|p| p.state().clone()).collect(),
        }
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn is_finished(&self) -> bool {
        Environment::is_terminal(self) || self.step_count >= self.max_step
    }

    /// Applies at most one action per partition. Every slot is validated
    /// before any is applied.
    pub fn joint_step(&mut self, slots: &[Option<AgentAction>]) -> Result<JointStep, EnvError> {
        if slots.len() != self.parts.len() {
            return Err(EnvError::SlotCount {
                expected: self.parts.len(),
                got: slots.len(),
            });
        }
        let mut flats = Vec::with_capacity(slots.len());
        let mut errors = Vec::new();
        for (p, slot) in self.parts.iter().zip(slots) {
            match slot {
                None => flats.push(None),
                Some(a) => match p.dynamics().flat_index(a) {
                    Ok(f) => flats.push(Some(f)),
                    Err(e) => errors.push((p.name().to_string(), e)),
                },
            }
        }
        if !errors.is_empty() {
            return Err(EnvError::Slots(errors));
        }
        if self.is_finished() {
            return Err(EnvError::Finished);
        }
        let mut rewards = Vec::new();
        for (i, flat) in flats.into_iter().enumerate() {
            if let Some(f) = flat {
                rewards.push((i, self.parts[i].advance(f)));
            }
        }
        self.step_count += 1;
        Ok(JointStep {
            state: self.state(),
            rewards,
            done: Environment::is_terminal(self),
        })
    }
}

impl Environment for SystemEnv {
    fn observation_len(&self) -> usize {
        self.dynamics.state_bits()
    }

    fn action_count(&self) -> usize {
        self.dynamics.action_count()
    }

    fn observation(&self) -> Vec<bool> {
        self.parts.iter().flat_map(|p| p.state().0.iter().copied()).collect()
    }

    fn observation_labels(&self) -> Vec<String> {
        self.labels.clone()
    }

    fn action_labels(&self) -> Vec<String> {
        self.dynamics.action_labels()
    }

    fn reset(&mut self) {
        self.parts.iter_mut().for_each(Environment::reset);
        self.step_count = 0;
    }

    fn reseed(&mut self, seed: u64) {
        self.parts.iter_mut().for_each(|p| p.reseed(seed));
        self.step_count = 0;
    }

    fn act(&mut self, action: usize) -> Result<Feedback, EnvError> {
        let count = self.dynamics.action_count();
        if action >= count {
            return Err(EnvError::ActionIndex { index: action, count });
        }
        if self.is_finished() {
            return Err(EnvError::Finished);
        }
        let mut reward = 0.0;
        for (p, slot) in self.parts.iter_mut().zip(self.dynamics.decode(action)) {
            if let Some(f) = slot {
                if !Environment::is_terminal(p) {
                    reward += p.advance(f);
                }
            }
        }
        self.step_count += 1;
        let terminal = Environment::is_terminal(self);
        Ok(Feedback {
            reward,
            terminal,
            truncated: !terminal && self.step_count >= self.max_step,
        })
    }

    fn is_terminal(&self) -> bool {
        self.parts.iter().all(Environment::is_terminal)
    }

    fn max_step(&self) -> usize {
        self.max_step
    }
}

impl ExactModel for SystemEnv {
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
        self.parts
            .iter()
            .flat_map(|p| p.initial_state().0.iter().copied())
            .collect()
    }
}
