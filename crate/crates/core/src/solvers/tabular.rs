use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::Environment;
use crate::solvers::report::Recorder;
use crate::solvers::{
    argmax, epsilon, state_key, Hyperparams, QFunction, SolverError, TabularQ, TrainOptions, TrainingReport,
};

/// Stream offset separating agent randomness from environment randomness.
pub(crate) const AGENT_STREAM: u64 = 1 << 32;

pub(crate) fn agent_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(AGENT_STREAM);
    rng
}

/// Epsilon-greedy action. The uniform is drawn every step so the random
/// stream does not depend on the schedule.
pub(crate) fn explore<R: Rng>(rng: &mut R, eps: f64, actions: usize, greedy: impl FnOnce() -> usize) -> usize {
    let u: f64 = rng.gen();
    if u < eps {
        rng.gen_range(0..actions)
    } else {
        greedy()
    }
}

/// One-step Q-learning with a table keyed by the observation bits.
/// Unvisited entries start at 0. The n-th update of a pair uses step size
/// `max(alpha, 1/n)`: a running mean at first, then a constant floor.
pub fn q_learn_tabular<E>(
    env: &mut E,
    h: &Hyperparams,
    alpha: f64,
    seed: u64,
    opts: &TrainOptions,
) -> Result<(QFunction, TrainingReport), SolverError>
where
    E: Environment + Clone,
{
    h.validate()?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(SolverError::Hyperparams(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if env.observation_len() > 64 {
        return Err(SolverError::NotEnumerable {
            bits: env.observation_len(),
            limit: 64,
        });
    }
    let actions = env.action_count();
    if actions == 0 {
        return Err(SolverError::NoActions);
    }
    env.reseed(seed);
    let mut rng = agent_rng(seed);
    let mut q = TabularQ::new(actions);
    let mut visits: HashMap<(u64, usize), u64> = HashMap::new();
    let mut recorder = Recorder::new(opts, h.epochs, seed);
    let mut env_steps = 0u64;
    for epoch in 0..h.epochs {
        env.reset();
        let eps = epsilon(epoch, h);
        let mut total = 0.0;
        let mut steps = 0;
        while !env.is_terminal() && steps < h.max_step {
            let s = env.observation();
            let a = explore(&mut rng, eps, actions, || argmax(&q.values(&s)));
            let fb = env.act(a)?;
            let s2 = env.observation();
            let bootstrap = if fb.terminal {
                0.0
            } else {
                q.values(&s2).into_iter().fold(f64::NEG_INFINITY, f64::max)
            };
            let n = visits.entry((state_key(&s), a)).or_insert(0);
            *n += 1;
            let step = alpha.max(1.0 / *n as f64);
            let entry = &mut q.row_mut(&s)[a];
            *entry += step * (fb.reward + h.gamma * bootstrap - *entry);
            total += fb.reward;
            steps += 1;
            env_steps += 1;
            if fb.done() {
                break;
            }
        }
        let policy = |obs: &[bool]| argmax(&q.values(obs));
        if recorder.epoch(epoch, env_steps, total, env, &policy)? {
            break;
        }
    }
    let q = QFunction::Tabular(q);
    let report = recorder.finish(&q)?;
    Ok((q, report))
}
