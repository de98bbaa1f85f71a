mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{frontend, model_from, ob, ob_partition, toy};
use irs_core::env::{
    decompose, reward, AgentAction, EnvError, Environment, ExactModel, PartitionDynamics, StateSpace,
    SystemEnv, DEFAULT_MAX_STEP, NO_CHANGE_PENALTY,
};
use irs_core::model::{ActionSpec, ConditionExpr, PartitionState, RewardWeights};

fn spec(e: f64, c: f64) -> ActionSpec {
    ActionSpec {
        name: "a".into(),
        execution_time: e,
        cost: c,
        precondition: ConditionExpr::var("x", false),
        effects: vec![],
        applicable_types: vec![],
    }
}

fn st(bits: &str) -> PartitionState {
    PartitionState(bits.chars().map(|c| c == '1').collect())
}

// Frontend bit order: start active restarted corrupted shellCorrupted.
const FE_RESTART: usize = 1;
const FE_HEAL: usize = 2;

#[test]
fn unchanged_state_costs_exactly_two() {
    let s = st("10010");
    assert_eq!(reward(&s, &spec(300.0, 100.0), &s, &RewardWeights::default()), NO_CHANGE_PENALTY);
    assert_eq!(NO_CHANGE_PENALTY, -2.0);
}

#[test]
fn start_reward_is_exactly_minus_point_two() {
    let r = reward(&st("0"), &spec(300.0, 100.0), &st("1"), &RewardWeights::default());
    assert_eq!(r, -0.2);
}

#[test]
fn zero_weights_give_zero() {
    let w = RewardWeights {
        time_weight: 0.0,
        cost_weight: 0.0,
        ..RewardWeights::default()
    };
    assert_eq!(reward(&st("0"), &spec(300.0, 100.0), &st("1"), &w), 0.0);
}

#[test]
fn infeasible_action_leaves_state_and_costs_two() {
    let mut env = frontend(0);
    // initial has active=false, so restart's precondition fails
    let before = env.state().clone();
    let step = env.step_index(FE_RESTART).unwrap();
    assert_eq!(step.state, before);
    assert_eq!(step.reward, -2.0);
}

#[test]
fn named_actions_and_errors() {
    let mut env = frontend(0);
    let s = env.step(&AgentAction::new("start", 0)).unwrap();
    assert_eq!(s.reward, -0.2);
    assert!(matches!(
        env.step(&AgentAction::new("enablePassword", 0)),
        Err(EnvError::UnknownAction { .. })
    ));
    assert!(matches!(
        env.step(&AgentAction::new("heal", 1)),
        Err(EnvError::ComponentOutOfRange { .. })
    ));
    assert!(matches!(env.step_index(99), Err(EnvError::ActionIndex { .. })));
}

#[test]
fn stepping_a_finished_episode_fails() {
    let mut env = toy();
    env.step_index(0).unwrap();
    assert!(Environment::is_terminal(&env));
    assert!(matches!(env.step_index(0), Err(EnvError::Finished)));
    env.reset();
    assert!(env.step_index(0).is_ok());
}

#[test]
fn transition_distributions_sum_to_one() {
    for name in ["frontend-service", "redis-service"] {
        let env = ob_partition(name, 0);
        let d = env.dynamics();
        let space = StateSpace::new(d.state_bits(), 20).unwrap();
        for s in space.iter() {
            for a in 0..d.action_count() {
                let dist = d.transition_dist(&s, a);
                assert!((dist.total_probability() - 1.0).abs() < 1e-12, "{name} {s} {a}");
                assert!(dist.outcomes.iter().all(|(_, p)| *p > 0.0 && *p <= 1.0));
            }
        }
    }
}

#[test]
fn restart_distribution_matches_table() {
    let env = frontend(0);
    let dist = env.dynamics().transition_dist(&st("11010"), FE_RESTART);
    assert_eq!(dist.outcomes.len(), 2);
    assert!((dist.probability_of(&st("11100")) - 0.75).abs() < 1e-15);
    assert!((dist.probability_of(&st("11110")) - 0.25).abs() < 1e-15);
}

#[test]
fn restart_frequency_is_three_quarters() {
    let mut env = frontend(7);
    let n = 100_000;
    let mut cleaned = 0;
    for _ in 0..n {
        env.reset();
        env.set_state(st("11010"));
        let s = env.step_index(FE_RESTART).unwrap();
        cleaned += usize::from(!s.state.get(3));
    }
    let f = cleaned as f64 / n as f64;
    assert!((f - 0.75).abs() <= 0.01, "{f}");
}

#[test]
fn sampling_agrees_with_transition_dist() {
    // restrictAccess with intVuln unset: one sure effect and one at 0.7
    let env = ob_partition("redis-service", 0);
    let d = env.dynamics();
    let ra = d.action_labels().iter().position(|l| l == "restrictAccess@0").unwrap();
    let s = st("11010000");
    let dist = d.transition_dist(&s, ra);
    assert_eq!(dist.outcomes.len(), 2);
    assert!((dist.probability_of(&st("11011001")) - 0.7).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 40_000;
    let mut counts = vec![0usize; dist.outcomes.len()];
    for _ in 0..n {
        let next = d.sample(&s, ra, &mut rng);
        let i = dist.outcomes.iter().position(|(o, _)| *o == next).expect("sample is a listed outcome");
        counts[i] += 1;
    }
    let chi2: f64 = dist
        .outcomes
        .iter()
        .zip(&counts)
        .map(|((_, p), &c)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    // 1 degree of freedom, p = 0.001
    assert!(chi2 < 10.83, "chi2 = {chi2}");
}

#[test]
fn rewards_stay_in_range() {
    for name in ["frontend-service", "redis-service"] {
        let env = ob_partition(name, 0);
        let d = env.dynamics();
        for s in StateSpace::new(d.state_bits(), 20).unwrap().iter() {
            for a in 0..d.action_count() {
                for o in env.outcomes(s.bits(), a) {
                    let r = o.reward;
                    assert!(r == -2.0 || (-1.0..=0.0).contains(&r), "{name} {s} {a}: {r}");
                }
            }
        }
    }
}

#[test]
fn same_seed_same_trajectory() {
    let run = |seed| {
        let mut env = frontend(seed);
        let mut trace = Vec::new();
        for i in 0..200 {
            if env.is_finished() {
                env.reset();
            }
            let s = env.step_index(i % 3).unwrap();
            trace.push((s.state.to_string(), s.reward));
        }
        trace
    };
    assert_eq!(run(11), run(11));
    let mut env = frontend(11);
    env.set_state(st("11010"));
    let a: Vec<bool> = (0..64)
        .map(|_| {
            env.reset();
            env.set_state(st("11010"));
            env.step_index(FE_RESTART).unwrap().state.get(3)
        })
        .collect();
    env.reseed(11);
    let b: Vec<bool> = (0..64)
        .map(|_| {
            env.reset();
            env.set_state(st("11010"));
            env.step_index(FE_RESTART).unwrap().state.get(3)
        })
        .collect();
    assert_eq!(a, b);
}

#[test]
fn heal_clears_both_corruptions() {
    let env = frontend(0);
    let dist = env.dynamics().transition_dist(&st("11011"), FE_HEAL);
    assert_eq!(dist.outcomes, vec![(st("11000"), 1.0)]);
}

#[test]
fn system_steps_match_independent_partitions() {
    let m = ob();
    let mut sys = SystemEnv::new(&m.model, &m.initial, 5, 1000);
    let mut parts = decompose(&m.model, &m.initial, 5, 1000);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    use rand::Rng;
    for _ in 0..300 {
        if sys.is_finished() {
            break;
        }
        let slots: Vec<Option<AgentAction>> = parts
            .iter()
            .map(|p| {
                let d = p.dynamics();
                if p.is_finished() {
                    return None;
                }
                rng.gen_bool(0.8).then(|| d.agent_action(rng.gen_range(0..d.action_count())))
            })
            .collect();
        let joint = sys.joint_step(&slots).unwrap();
        let mut expected_rewards = Vec::new();
        for (i, (p, slot)) in parts.iter_mut().zip(&slots).enumerate() {
            if let Some(a) = slot {
                expected_rewards.push((i, p.step(a).unwrap().reward));
            }
        }
        let flat: Vec<bool> = parts.iter().flat_map(|p| p.state().0.clone()).collect();
        assert_eq!(joint.state.flatten(), flat);
        assert_eq!(joint.rewards, expected_rewards);
    }
}

#[test]
fn joint_step_reports_every_bad_slot() {
    let m = ob();
    let mut sys = SystemEnv::new(&m.model, &m.initial, 0, 50);
    let err = sys
        .joint_step(&[Some(AgentAction::new("nope", 0)), Some(AgentAction::new("start", 3))])
        .unwrap_err();
    match err {
        EnvError::Slots(v) => assert_eq!(v.len(), 2),
        e => panic!("{e:?}"),
    }
    assert!(matches!(sys.joint_step(&[None]), Err(EnvError::SlotCount { .. })));
}

#[test]
fn joint_action_index_decodes_mixed_radix() {
    let m = ob();
    let sys = SystemEnv::new(&m.model, &m.initial, 0, 50);
    let d = sys.dynamics();
    assert_eq!(d.action_count(), 3 * 6);
    assert_eq!(d.decode(0), vec![Some(0), Some(0)]);
    assert_eq!(d.decode(7), vec![Some(1), Some(1)]);
    assert_eq!(d.decode(17), vec![Some(2), Some(5)]);
}

#[test]
fn terminal_partitions_ignore_their_slot() {
    let m = ob();
    let mut sys = SystemEnv::new(&m.model, &m.initial, 0, 50);
    let mut s = m.initial.clone();
    s.partitions[0] = st("11000");
    let flat = s.flatten();
    // joint action (start frontend, start redis): frontend is secure so only redis moves
    let outs = sys.outcomes(&flat, 0);
    assert_eq!(outs.len(), 1);
    assert_eq!(outs[0].reward, -0.2);
    assert_eq!(&outs[0].next[..5], &flat[..5]);
    sys.reset();
    assert_eq!(Environment::observation(&sys), m.initial.flatten());
}

#[test]
fn replicated_components_get_their_own_actions() {
    let topo = "svc:\n  replication: 3\n  state:\n    - active\n";
    let (m, s) = model_from(topo, common::TOY_ACTIONS, common::TOY_TERMINATION, None);
    let mut env = decompose(&m, &s, 0, DEFAULT_MAX_STEP).swap_remove(0);
    assert_eq!(Environment::action_count(&env), 3);
    assert_eq!(env.observation_labels(), ["svc[0].active", "svc[1].active", "svc[2].active"]);
    env.step(&AgentAction::new("start", 1)).unwrap();
    assert_eq!(env.state().to_string(), "010");
    assert!(!Environment::is_terminal(&env));
    env.step(&AgentAction::new("start", 0)).unwrap();
    env.step(&AgentAction::new("start", 2)).unwrap();
    assert!(Environment::is_terminal(&env));
}

#[test]
fn too_many_bits_are_refused() {
    assert!(matches!(StateSpace::new(21, 20), Err(EnvError::StateSpaceTooLarge { .. })));
}

fn arb_system_state() -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
    (prop::collection::vec(any::<bool>(), 5), prop::collection::vec(any::<bool>(), 8))
}

proptest! {
    #[test]
    fn state_index_is_a_bijection(bits in 1usize..14, raw in any::<u64>()) {
        let space = StateSpace::new(bits, 20).unwrap();
        let i = (raw % space.len() as u64) as usize;
        prop_assert_eq!(space.index_of(&space.bits_of(i)), i);
        let b = space.bits_of(i);
        prop_assert_eq!(space.bits_of(space.index_of(&b)), b);
    }

    #[test]
    fn system_termination_is_the_conjunction((fe, rs) in arb_system_state()) {
        let m = ob();
        let sys = SystemEnv::new(&m.model, &m.initial, 0, 50);
        let parts = decompose(&m.model, &m.initial, 0, 50);
        let flat: Vec<bool> = fe.iter().chain(&rs).copied().collect();
        let each = parts[0].dynamics().is_terminal_bits(&fe) && parts[1].dynamics().is_terminal_bits(&rs);
        prop_assert_eq!(ExactModel::is_terminal(&sys, &flat), each);
        let ss = irs_core::model::SystemState { partitions: vec![PartitionState(fe), PartitionState(rs)] };
        prop_assert_eq!(m.model.termination.is_terminal_system(&m.model, &ss), each);
    }

    #[test]
    fn partitions_are_disjoint_and_cover_the_system(reps in prop::collection::vec(1usize..4, 1..4)) {
        let mut topo = String::new();
        for (i, r) in reps.iter().enumerate() {
            topo.push_str(&format!("t{i}:\n  replication: {r}\n  state:\n    - active\n    - v{i}\n"));
        }
        let types: Vec<String> = (0..reps.len()).map(|i| format!("    - t{i}\n")).collect();
        let actions = common::TOY_ACTIONS.replace("    - svc\n", &types.concat());
        let (m, s) = model_from(&topo, &actions, common::TOY_TERMINATION, None);
        let parts = decompose(&m, &s, 0, 50);
        let mut labels: Vec<String> = parts.iter().flat_map(|p| p.observation_labels()).collect();
        let total = labels.len();
        prop_assert_eq!(total, m.state_bits());
        labels.sort();
        labels.dedup();
        prop_assert_eq!(labels.len(), total);
        let sys = SystemEnv::new(&m, &s, 0, 50);
        prop_assert_eq!(sys.observation_labels().len(), total);
    }
}

#[test]
fn dynamics_can_be_built_per_partition() {
    let m = ob();
    let d = PartitionDynamics::new(&m.model, 1);
    assert_eq!(d.name(), "redis-service");
    assert_eq!(d.action_count(), 6);
    assert_eq!(d.state_bits(), 8);
}
