use crate::env::{ExactModel, StateSpace, DEFAULT_BIT_CAP};
use crate::solvers::SolverError;

const MAX_ITERATIONS: usize = 1_000_000;

/// Fully tabulated MDP: every (state, action) with its outcome list.
#[derive(Debug, Clone)]
pub struct FiniteMdp {
    pub space: StateSpace,
    pub actions: usize,
    pub terminal: Vec<bool>,
    /// Indexed by `state * actions + action`: `(next, probability, reward)`.
    pub transitions: Vec<Vec<(usize, f64, f64)>>,
}

impl FiniteMdp {
    pub fn build<M: ExactModel + ?Sized>(model: &M, cap: usize) -> Result<Self, SolverError> {
        let space = StateSpace::new(model.state_bits(), cap)?;
        let actions = model.action_count();
        if actions == 0 {
            return Err(SolverError::NoActions);
        }
        let mut terminal = Vec::with_capacity(space.len());
        let mut transitions = Vec::with_capacity(space.len() * actions);
        for s in 0..space.len() {
            let bits = space.bits_of(s);
            let is_terminal = model.is_terminal(&bits);
            terminal.push(is_terminal);
            for a in 0..actions {
                if is_terminal {
                    transitions.push(Vec::new());
                    continue;
                }
                transitions.push(
                    model
                        .outcomes(&bits, a)
                        .into_iter()
                        .map(|o| (space.index_of(&o.next), o.probability, o.reward))
                        .collect(),
                );
            }
        }
        Ok(FiniteMdp {
            space,
            actions,
            terminal,
            transitions,
        })
    }

    pub fn q_value(&self, values: &[f64], s: usize, a: usize, gamma: f64) -> f64 {
        self.transitions[s * self.actions + a]
            .iter()
            .map(|&(n, p, r)| p * (r + gamma * values[n]))
            .sum()
    }
}

/// Optimal values and greedy policy. Terminal states have value 0 and no action.
#[derive(Debug, Clone)]
pub struct ViResult {
    pub space: StateSpace,
    pub values: Vec<f64>,
    pub policy: Vec<Option<usize>>,
    pub residual: f64,
    /// Sup-norm change of every sweep, in order.
    pub residuals: Vec<f64>,
    pub gamma: f64,
}

impl ViResult {
    pub fn value_of(&self, bits: &[bool]) -> f64 {
        self.values[self.space.index_of(bits)]
    }

    pub fn action_of(&self, bits: &[bool]) -> Option<usize> {
        self.policy[self.space.index_of(bits)]
    }

    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    /// Whether following the greedy policy from `start` reaches a terminal
    /// state with positive probability.
    pub fn reaches_terminal(&self, mdp: &FiniteMdp, start: &[bool]) -> bool {
        let mut seen = vec![false; self.space.len()];
        let mut stack = vec![self.space.index_of(start)];
        while let Some(s) = stack.pop() {
            if std::mem::replace(&mut seen[s], true) {
                continue;
            }
            if mdp.terminal[s] {
                return true;
            }
            let a = self.policy[s].expect("non-terminal states have an action");
            for &(n, p, _) in &mdp.transitions[s * mdp.actions + a] {
                if p > 0.0 && !seen[n] {
                    stack.push(n);
                }
            }
        }
        false
    }
}

/// Synchronous Bellman-optimality sweeps until the sup-norm change is at
/// most `tolerance`, using the default enumeration cap.
pub fn value_iteration<M: ExactModel + ?Sized>(
    model: &M,
    gamma: f64,
    tolerance: f64,
) -> Result<ViResult, SolverError> {
    value_iteration_capped(model, gamma, tolerance, DEFAULT_BIT_CAP)
}

pub fn value_iteration_capped<M: ExactModel + ?Sized>(
    model: &M,
    gamma: f64,
    tolerance: f64,
    cap: usize,
) -> Result<ViResult, SolverError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(SolverError::Hyperparams(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let mdp = FiniteMdp::build(model, cap)?;
    solve(&mdp, gamma, tolerance)
}

pub(crate) fn solve(mdp: &FiniteMdp, gamma: f64, tolerance: f64) -> Result<ViResult, SolverError> {
    let n = mdp.space.len();
    let mut values = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut residuals = Vec::new();
    loop {
        let mut residual: f64 = 0.0;
        for s in 0..n {
            next[s] = if mdp.terminal[s] {
                0.0
            } else {
                (0..mdp.actions)
                    .map(|a| mdp.q_value(&values, s, a, gamma))
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            residual = residual.max((next[s] - values[s]).abs());
        }
        std::mem::swap(&mut values, &mut next);
        residuals.push(residual);
        if residual <= tolerance {
            break;
        }
        if residuals.len() >= MAX_ITERATIONS {
            return Err(SolverError::NotConverged {
                tolerance,
                iterations: residuals.len(),
            });
        }
    }
    let policy = (0..n)
        .map(|s| {
            if mdp.terminal[s] {
                return None;
            }
            let q: Vec<f64> = (0..mdp.actions).map(|a| mdp.q_value(&values, s, a, gamma)).collect();
            Some(crate::solvers::argmax(&q))
        })
        .collect();
    Ok(ViResult {
        space: mdp.space,
        values,
        policy,
        residual: *residuals.last().unwrap(),
        residuals,
        gamma,
    })
}
