use std::collections::HashMap;

use crate::env::{Environment, ExactModel};
use crate::solvers::{Policy, SolverError};

/// Per-episode undiscounted returns of greedy rollouts.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub returns: Vec<f64>,
    pub steps: Vec<usize>,
}

impl EvalSummary {
    pub fn mean(&self) -> f64 {
        if self.returns.is_empty() {
            return 0.0;
        }
        self.returns.iter().sum::<f64>() / self.returns.len() as f64
    }

    pub fn std_error(&self) -> f64 {
        let n = self.returns.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let m = self.mean();
        let var = self.returns.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Rolls out `policy` from the configured initial state on a copy of `env`
/// reseeded with `seed`. Episodes stop at a secure state or the step limit.
pub fn evaluate_policy<E, P>(env: &E, policy: &P, episodes: usize, seed: u64) -> Result<EvalSummary, SolverError>
where
    E: Environment + Clone,
    P: Policy + ?Sized,
{
    let mut env = env.clone();
    env.reseed(seed);
    let mut returns = Vec::with_capacity(episodes);
    let mut steps = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        env.reset();
        let mut total = 0.0;
        let mut n = 0;
        while !env.is_terminal() && n < env.max_step() {
            let fb = env.act(policy.action(&env.observation()))?;
            total += fb.reward;
            n += 1;
            if fb.done() {
                break;
            }
        }
        returns.push(total);
        steps.push(n);
    }
    Ok(EvalSummary { returns, steps })
}

const MAX_REACHABLE: usize = 1 << 22;

/// Exact expected discounted return of a deterministic policy from the
/// model's initial state, solved over the states the policy can reach.
pub fn policy_value<M, P>(model: &M, policy: &P, gamma: f64, tolerance: f64) -> Result<f64, SolverError>
where
    M: ExactModel + ?Sized,
    P: Policy + ?Sized,
{
    if model.action_count() == 0 {
        return Err(SolverError::NoActions);
    }
    let mut index: HashMap<Vec<bool>, usize> = HashMap::new();
    let mut states: Vec<Vec<bool>> = Vec::new();
    let mut edges: Vec<Vec<(usize, f64, f64)>> = Vec::new();
    let start = model.initial();
    index.insert(start.clone(), 0);
    states.push(start);
    let mut cursor = 0;
    while cursor < states.len() {
        let bits = states[cursor].clone();
        let mut out = Vec::new();
        if !model.is_terminal(&bits) {
            let a = policy.action(&bits);
            for o in model.outcomes(&bits, a) {
                let next = match index.get(&o.next) {
                    Some(&i) => i,
                    None => {
                        if states.len() >= MAX_REACHABLE {
                            return Err(SolverError::NotEnumerable {
                                bits: model.state_bits(),
                                limit: MAX_REACHABLE.trailing_zeros() as usize,
                            });
                        }
                        index.insert(o.next.clone(), states.len());
                        states.push(o.next);
                        states.len() - 1
                    }
                };
                out.push((next, o.probability, o.reward));
            }
        }
        edges.push(out);
        cursor += 1;
    }
    let mut values = vec![0.0; states.len()];
    let mut iterations = 0;
    loop {
        let mut residual: f64 = 0.0;
        for s in 0..states.len() {
            if edges[s].is_empty() {
                continue;
            }
            let v: f64 = edges[s].iter().map(|&(n, p, r)| p * (r + gamma * values[n])).sum();
            residual = residual.max((v - values[s]).abs());
            values[s] = v;
        }
        iterations += 1;
        if residual <= tolerance {
            break;
        }
        if iterations >= 1_000_000 {
            return Err(SolverError::NotConverged { tolerance, iterations });
        }
    }
    Ok(values[0])
}

/// Exact greedy-policy value check against a reference (usually the value
/// iteration optimum). A value passes when it is within either tolerance.
pub struct ExactProbe {
    pub model: Box<dyn ExactModel + Send + Sync>,
    pub gamma: f64,
    pub reference: f64,
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
}

impl ExactProbe {
    pub fn value<P: Policy + ?Sized>(&self, policy: &P) -> Result<f64, SolverError> {
        policy_value(self.model.as_ref(), policy, self.gamma, 1e-9)
    }

    pub fn within(&self, value: f64) -> bool {
        let gap = (value - self.reference).abs();
        gap <= self.relative_tolerance * self.reference.abs() || gap <= self.absolute_tolerance
    }
}

impl std::fmt::Debug for ExactProbe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExactProbe")
            .field("gamma", &self.gamma)
            .field("reference", &self.reference)
            .field("relative_tolerance", &self.relative_tolerance)
            .field("absolute_tolerance", &self.absolute_tolerance)
            .finish()
    }
}
