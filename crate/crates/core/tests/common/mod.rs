#![allow(dead_code)]

use std::path::PathBuf;

use irs_core::dsl::{
    assemble_model, initial_state, parse_action_set, parse_initial_state, parse_termination,
    parse_topology, parse_weights,
};
use irs_core::env::{decompose, PartitionEnv, DEFAULT_MAX_STEP};
use irs_core::harness::{load_model, ConfigPaths, LoadedModel};
use irs_core::model::{SystemModel, SystemState};

pub fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn ob_paths() -> ConfigPaths {
    ConfigPaths::in_dir(repo_path("configs/ob-subsystem"))
}

pub fn ob() -> LoadedModel {
    load_model(&ob_paths()).expect("shipped configs load")
}

pub fn ob_partition(name: &str, seed: u64) -> PartitionEnv {
    let m = ob();
    let i = m.model.partition(name).expect("partition exists").0;
    decompose(&m.model, &m.initial, seed, DEFAULT_MAX_STEP).swap_remove(i)
}

pub fn frontend(seed: u64) -> PartitionEnv {
    ob_partition("frontend-service", seed)
}

/// Builds a model from inline documents (initial state optional).
pub fn model_from(
    topology: &str,
    actions: &str,
    termination: &str,
    init: Option<&str>,
) -> (SystemModel, SystemState) {
    let weights = parse_weights("wE: 0.5\nwC: 0.5\neMax: 1000\ncMax: 1000\n").unwrap();
    let a = assemble_model(
        &parse_topology(topology).unwrap(),
        &parse_action_set(actions).unwrap(),
        &parse_termination(termination).unwrap(),
        &weights,
    )
    .unwrap();
    let doc = parse_initial_state(init.unwrap_or("")).unwrap();
    let s = initial_state(&a.model, &doc).unwrap();
    (a.model, s)
}

pub const TOY_TOPOLOGY: &str = "svc:\n  replication: 1\n  state:\n    - active\n";
pub const TOY_ACTIONS: &str = "start:
  execution-time: 300
  execution-cost: 100
  pre-condition: state[active] == false
  post-condition: P=1 -> state[active] = true
  components:
    - svc
";
pub const TOY_TERMINATION: &str = "active: true\n";

/// One variable, one action: `start` flips `active` at reward -0.2.
pub fn toy() -> PartitionEnv {
    let (m, s) = model_from(TOY_TOPOLOGY, TOY_ACTIONS, TOY_TERMINATION, None);
    decompose(&m, &s, 0, DEFAULT_MAX_STEP).swap_remove(0)
}

/// Random two-partition model as YAML documents. Each type has its own
/// variables, so the partitions share nothing.
pub fn random_model_docs(seed: u64, max_bits: usize) -> [String; 4] {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut topo, mut actions, mut term, mut init) = (String::new(), String::new(), String::new(), String::new());
    for t in 0..2 {
        let replication = rng.gen_range(1..=2usize);
        let vars = rng.gen_range(1..=(max_bits / replication).clamp(1, 4));
        let name = |v: usize| format!("t{t}v{v}");
        topo.push_str(&format!("t{t}:\n  replication: {replication}\n  state:\n"));
        for v in 0..vars {
            topo.push_str(&format!("    - {}\n", name(v)));
            init.push_str(&format!("{}: {}\n", name(v), rng.gen_bool(0.5)));
        }
        for v in 0..rng.gen_range(1..=vars) {
            term.push_str(&format!("{}: {}\n", name(v), rng.gen_bool(0.5)));
        }
        for a in 0..rng.gen_range(1..=3) {
            let literal = |rng: &mut rand_chacha::ChaCha8Rng| {
                format!("state[{}] == {}", name(rng.gen_range(0..vars)), rng.gen_bool(0.5))
            };
            let mut pre = literal(&mut rng);
            if rng.gen_bool(0.5) {
                let op = if rng.gen_bool(0.5) { "&&" } else { "||" };
                pre = format!("{pre} {op} {}", literal(&mut rng));
            }
            let effects: Vec<String> = (0..rng.gen_range(1..=2))
                .map(|_| {
                    let p = [1.0, 0.75, 0.5, 0.25][rng.gen_range(0..4)];
                    format!("P={p} -> state[{}] = {}", name(rng.gen_range(0..vars)), rng.gen_bool(0.5))
                })
                .collect();
            actions.push_str(&format!(
                "a{t}x{a}:\n  execution-time: {}\n  execution-cost: {}\n  pre-condition: {pre}\n  post-condition: {}\n  components:\n    - t{t}\n\n",
                rng.gen_range(1..=1000),
                rng.gen_range(1..=1000),
                effects.join("; ")
            ));
        }
    }
    [topo, actions, term, init]
}

pub fn random_model(seed: u64, max_bits: usize) -> (SystemModel, SystemState) {
    let [t, a, term, init] = random_model_docs(seed, max_bits);
    model_from(&t, &a, &term, Some(&init))
}

/// Straightforward forward pass, also returning every hidden pre-activation.
pub fn reference_forward(layers: &[irs_core::nn::Dense], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut a = x.to_vec();
    let mut pre = Vec::new();
    for (i, l) in layers.iter().enumerate() {
        let mut z = vec![0.0; l.outputs];
        for (r, zr) in z.iter_mut().enumerate() {
            *zr = l.bias[r];
            for (c, ac) in a.iter().enumerate() {
                *zr += l.weights[r * l.inputs + c] * ac;
            }
        }
        if i + 1 < layers.len() {
            pre.extend(&z);
            a = z.into_iter().map(|v| if v > 0.0 { v } else { 0.0 }).collect();
        } else {
            a = z;
        }
    }
    (a, pre)
}

/// Relative error between analytic and central-difference gradients of a
/// random small network (at most 3 layers of 8 units) on a random batch, or
/// `None` when an input lands within 1e-3 of a ReLU kink.
pub fn gradient_check(seed: u64) -> Option<f64> {
    use irs_core::nn::{Mlp, MlpSpec};
    use rand::{Rng, SeedableRng};
    let eps = 1e-5;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let spec = MlpSpec {
        input_size: rng.gen_range(1..=8),
        hidden_size: rng.gen_range(1..=8),
        layers: rng.gen_range(0..=2),
        output_size: rng.gen_range(1..=8),
        learning_rate: 0.01,
    };
    let mut net = Mlp::new(spec, seed).unwrap();
    for l in net.layers_mut() {
        l.bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
    }
    let xs: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..spec.input_size).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let ts: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..spec.output_size).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    if xs
        .iter()
        .any(|x| reference_forward(net.layers(), x).1.iter().any(|z| z.abs() < 1e-3))
    {
        return None;
    }
    let analytic = net.gradients(&xs, &ts).unwrap().1.flatten();
    let numeric: Vec<f64> = (0..analytic.len())
        .map(|p| {
            let mut plus = net.clone();
            *plus.parameter_mut(p) += eps;
            let mut minus = net.clone();
            *minus.parameter_mut(p) -= eps;
            (plus.loss(&xs, &ts).unwrap() - minus.loss(&xs, &ts).unwrap()) / (2.0 * eps)
        })
        .collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, n)| a - n).collect();
    let scale = norm(&analytic) + norm(&numeric);
    Some(if scale == 0.0 { 0.0 } else { norm(&diff) / scale })
}
