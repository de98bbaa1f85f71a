use std::collections::HashMap;

use rand::Rng;

use crate::env::{AgentAction, EnvError, Outcome, TransitionDist};
use crate::model::{
    ActionSpec, ConditionExpr, Partition, PartitionState, RewardWeights, SystemModel,
};

/// Condition compiled against a component's variable offsets.
#[derive(Debug, Clone)]
enum Bound {
    Var(usize, bool),
    And(Box<Bound>, Box<Bound>),
    Or(Box<Bound>, Box<Bound>),
    Not(Box<Bound>),
}

impl Bound {
    fn compile(expr: &ConditionExpr, partition: &Partition) -> Bound {
        let ty = &partition.component_type;
        match expr {
            ConditionExpr::VarEquals { variable, value } => Bound::Var(
                ty.variable_index(variable)
                    .expect("validated model binds every condition variable"),
                *value,
            ),
            ConditionExpr::And(l, r) => Bound::And(
                Box::new(Bound::compile(l, partition)),
                Box::new(Bound::compile(r, partition)),
            ),
            ConditionExpr::Or(l, r) => Bound::Or(
                Box::new(Bound::compile(l, partition)),
                Box::new(Bound::compile(r, partition)),
            ),
            ConditionExpr::Not(c) => Bound::Not(Box::new(Bound::compile(c, partition))),
        }
    }

    fn eval(&self, bits: &[bool], base: usize) -> bool {
        match self {
            Bound::Var(v, want) => bits[base + v] == *want,
            Bound::And(l, r) => l.eval(bits, base) && r.eval(bits, base),
            Bound::Or(l, r) => l.eval(bits, base) || r.eval(bits, base),
            Bound::Not(c) => !c.eval(bits, base),
        }
    }
}

#[derive(Debug, Clone)]
struct BoundAction {
    spec: ActionSpec,
    pre: Bound,
    /// `(probability, variable index, value)`.
    effects: Vec<(f64, usize, bool)>,
}

/// Immutable per-partition dynamics: the partition's own variables, the
/// catalog actions bound to its type, its termination constraints and the
/// reward weights.
///
/// Agent actions are flattened component-major: index
/// `component * actions_per_component + action`.
#[derive(Debug, Clone)]
pub struct PartitionDynamics {
    partition: Partition,
    index: usize,
    actions: Vec<BoundAction>,
    termination: Vec<(usize, bool)>,
    weights: RewardWeights,
}

impl PartitionDynamics {
    pub fn new(model: &SystemModel, index: usize) -> Self {
        let partition = model.partitions[index].clone();
        let actions = partition
            .component_type
            .actions
            .iter()
            .map(|name| {
                let spec = model
                    .action(name)
                    .expect("validated model binds every type action")
                    .clone();
                let pre = Bound::compile(&spec.precondition, &partition);
                let effects = spec
                    .effects
                    .iter()
                    .map(|e| {
                        let v = partition
                            .component_type
                            .variable_index(&e.variable)
                            .expect("validated model binds every effect variable");
                        (e.probability, v, e.value)
                    })
                    .collect();
                BoundAction { spec, pre, effects }
            })
            .collect();
        let termination = model.termination.constraints_for(&partition);
        PartitionDynamics {
            partition,
            index,
            actions,
            termination,
            weights: model.weights,
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn name(&self) -> &str {
        self.partition.name()
    }

    /// Position of this partition in the model.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn weights(&self) -> &RewardWeights {
        &self.weights
    }

    pub fn state_bits(&self) -> usize {
        self.partition.state_bits()
    }

    pub fn actions_per_component(&self) -> usize {
        self.actions.len()
    }

    pub fn action_count(&self) -> usize {
        self.actions.len() * self.partition.component_type.replication
    }

    pub fn action_spec(&self, flat: usize) -> &ActionSpec {
        &self.actions[flat % self.actions.len()].spec
    }

    pub fn agent_action(&self, flat: usize) -> AgentAction {
        let n = self.actions.len();
        AgentAction {
            action: self.actions[flat % n].spec.name.clone(),
            component: flat / n,
        }
    }

    pub fn flat_index(&self, action: &AgentAction) -> Result<usize, EnvError> {
        let a = self
            .actions
            .iter()
            .position(|b| b.spec.name == action.action)
            .ok_or_else(|| EnvError::UnknownAction {
                partition: self.name().to_string(),
                action: action.action.clone(),
            })?;
        let replication = self.partition.component_type.replication;
        if action.component >= replication {
            return Err(EnvError::ComponentOutOfRange {
                partition: self.name().to_string(),
                component: action.component,
                replication,
            });
        }
        Ok(action.component * self.actions.len() + a)
    }

    /// Labels such as `restart@1` for every flattened action.
    pub fn action_labels(&self) -> Vec<String> {
        (0..self.action_count())
            .map(|f| {
                let a = self.agent_action(f);
                format!("{}@{}", a.action, a.component)
            })
            .collect()
    }

    fn base(&self, flat: usize) -> usize {
        (flat / self.actions.len()) * self.partition.component_type.variables.len()
    }

    pub fn precondition(&self, state: &PartitionState, flat: usize) -> bool {
        self.actions[flat % self.actions.len()]
            .pre
            .eval(state.bits(), self.base(flat))
    }

    pub fn is_terminal(&self, state: &PartitionState) -> bool {
        self.is_terminal_bits(state.bits())
    }

    pub fn is_terminal_bits(&self, bits: &[bool]) -> bool {
        self.termination.iter().all(|&(b, want)| bits[b] == want)
    }

    pub fn reward(&self, prev: &PartitionState, flat: usize, next: &PartitionState) -> f64 {
        crate::env::reward(prev, self.action_spec(flat), next, &self.weights)
    }

    /// Samples the successor state: one uniform draw per effect, in order.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        state: &PartitionState,
        flat: usize,
        rng: &mut R,
    ) -> PartitionState {
        let mut next = state.clone();
        if !self.precondition(state, flat) {
            return next;
        }
        let base = self.base(flat);
        for &(p, v, value) in &self.actions[flat % self.actions.len()].effects {
            if rng.gen::<f64>() < p {
                next.set(base + v, value);
            }
        }
        next
    }

    /// Exact successor distribution, merging outcomes that land on the same state.
    pub fn transition_dist(&self, state: &PartitionState, flat: usize) -> TransitionDist {
        if !self.precondition(state, flat) {
            return TransitionDist {
                outcomes: vec![(state.clone(), 1.0)],
            };
        }
        let base = self.base(flat);
        let mut branches = vec![(state.clone(), 1.0)];
        for &(p, v, value) in &self.actions[flat % self.actions.len()].effects {
            if p >= 1.0 {
                branches.iter_mut().for_each(|(s, _)| s.set(base + v, value));
            } else if p > 0.0 {
                let mut next = Vec::with_capacity(branches.len() * 2);
                for (s, q) in branches {
                    let mut fired = s.clone();
                    fired.set(base + v, value);
                    next.push((fired, q * p));
                    next.push((s, q * (1.0 - p)));
                }
                branches = next;
            }
        }
        let mut index: HashMap<PartitionState, usize> = HashMap::new();
        let mut outcomes: Vec<(PartitionState, f64)> = Vec::new();
        for (s, q) in branches {
            match index.get(&s) {
                Some(&i) => outcomes[i].1 += q,
                None => {
                    index.insert(s.clone(), outcomes.len());
                    outcomes.push((s, q));
                }
            }
        }
        TransitionDist { outcomes }
    }

    pub(crate) fn outcomes_bits(&self, bits: &[bool], flat: usize) -> Vec<Outcome> {
        let prev = PartitionState(bits.to_vec());
        self.transition_dist(&prev, flat)
            .outcomes
            .into_iter()
            .map(|(next, probability)| Outcome {
                reward: self.reward(&prev, flat, &next),
                next: next.0,
                probability,
            })
            .collect()
    }
}
