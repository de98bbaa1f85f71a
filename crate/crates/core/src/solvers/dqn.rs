use crate::env::Environment;
use crate::nn::{Checkpoint, Mlp, MlpSpec};
use crate::solvers::report::Recorder;
use crate::solvers::tabular::{agent_rng, explore};
use crate::solvers::{
    argmax, encode, epsilon, Hyperparams, NetQ, QFunction, ReplayBuffer, SolverError, TrainOptions,
    TrainingReport, Transition,
};

/// Deep Q-learning from a freshly initialized network. The network's input and
/// output sizes are overwritten with the environment's.
pub fn dqn_train<E>(
    env: &mut E,
    spec: MlpSpec,
    h: &Hyperparams,
    seed: u64,
    opts: &TrainOptions,
) -> Result<(QFunction, TrainingReport), SolverError>
where
    E: Environment + Clone,
{
    let spec = MlpSpec {
        input_size: env.observation_len(),
        output_size: env.action_count(),
        ..spec
    };
    let net = Mlp::new(spec, seed)?;
    dqn_train_from(env, net, h, seed, opts)
}

/// Rebuilds a saved network for `env`'s layout, copying weights for every
/// observation bit and action whose label is unchanged.
pub fn warm_start<E: Environment>(checkpoint: &Checkpoint, env: &E, seed: u64) -> Result<Mlp, SolverError> {
    Ok(checkpoint.remap(&env.observation_labels(), &env.action_labels(), seed)?)
}

/// Deep Q-learning with experience replay and a periodically synced target
/// network, starting from `net`.
pub fn dqn_train_from<E>(
    env: &mut E,
    net: Mlp,
    h: &Hyperparams,
    seed: u64,
    opts: &TrainOptions,
) -> Result<(QFunction, TrainingReport), SolverError>
where
    E: Environment + Clone,
{
    h.validate()?;
    let actions = env.action_count();
    if actions == 0 {
        return Err(SolverError::NoActions);
    }
    let spec = net.spec();
    if spec.input_size != env.observation_len() || spec.output_size != actions {
        return Err(SolverError::Hyperparams(format!(
            "network is {}x{} but the environment needs {}x{}",
            spec.input_size,
            spec.output_size,
            env.observation_len(),
            actions
        )));
    }
    env.reseed(seed);
    let mut rng = agent_rng(seed);
    let mut q = NetQ {
        target: net.clone(),
        online: net,
    };
    let mut replay = ReplayBuffer::new(h.replay_capacity);
    let mut recorder = Recorder::new(opts, h.epochs, seed);
    let mut env_steps = 0u64;
    let mut inputs = Vec::with_capacity(h.batch_size);
    let mut targets = Vec::with_capacity(h.batch_size);
    for epoch in 0..h.epochs {
        env.reset();
        let eps = epsilon(epoch, h);
        let mut total = 0.0;
        let mut steps = 0;
        while !env.is_terminal() && steps < h.max_step {
            let s = env.observation();
            let a = explore(&mut rng, eps, actions, || {
                argmax(&q.online.forward(&encode(&s)).expect("shape checked"))
            });
            let fb = env.act(a)?;
            replay.push(Transition {
                state: s,
                action: a,
                reward: fb.reward,
                next_state: env.observation(),
                done: fb.terminal,
            });
            total += fb.reward;
            steps += 1;
            env_steps += 1;

            if replay.len() >= h.batch_size {
                inputs.clear();
                targets.clear();
                for t in replay.sample(h.batch_size, &mut rng) {
                    let x = encode(&t.state);
                    let mut y = q.online.forward(&x)?;
                    let bootstrap = if t.done {
                        0.0
                    } else {
                        q.target
                            .forward(&encode(&t.next_state))?
                            .into_iter()
                            .fold(f64::NEG_INFINITY, f64::max)
                    };
                    y[t.action] = t.reward + h.gamma * bootstrap;
                    inputs.push(x);
                    targets.push(y);
                }
                q.online.train_batch(&inputs, &targets)?;
            }
            if env_steps % h.target_sync_interval as u64 == 0 {
                q.target = q.online.clone();
            }
            if fb.done() {
                break;
            }
        }
        let policy = |obs: &[bool]| argmax(&q.online.forward(&encode(obs)).expect("shape checked"));
        if recorder.epoch(epoch, env_steps, total, env, &policy)? {
            break;
        }
    }
    let q = QFunction::Net(q);
    let report = recorder.finish(&q)?;
    Ok((q, report))
}
