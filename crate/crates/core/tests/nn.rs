mod common;

use common::{gradient_check, reference_forward};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use irs_core::nn::{Checkpoint, Mlp, MlpSpec, NnError};

fn spec(i: usize, h: usize, l: usize, o: usize, lr: f64) -> MlpSpec {
    MlpSpec {
        input_size: i,
        hidden_size: h,
        layers: l,
        output_size: o,
        learning_rate: lr,
    }
}

fn batch(rng: &mut ChaCha8Rng, n: usize, i: usize, o: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let xs = (0..n).map(|_| (0..i).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let ts = (0..n).map(|_| (0..o).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    (xs, ts)
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

#[test]
fn gradients_match_central_differences() {
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 100 {
        seed += 1;
        if let Some(rel) = gradient_check(seed) {
            assert!(rel < 1e-4, "seed {seed}: relative error {rel}");
            checked += 1;
        }
    }
}

#[test]
fn least_squares_converges() {
    // a linear target is representable exactly by the output layer alone
    let mut net = Mlp::new(spec(3, 8, 0, 2, 0.1), 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let xs: Vec<Vec<f64>> = (0..32).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let ts: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| vec![0.5 * x[0] - x[1] + 0.2, x[2] - 0.3 * x[0]])
        .collect();
    let first = net.loss(&xs, &ts).unwrap();
    for _ in 0..500 {
        net.train_batch(&xs, &ts).unwrap();
    }
    let last = net.loss(&xs, &ts).unwrap();
    assert!(last < 1e-3, "loss {first} -> {last}");
}

#[test]
fn hidden_network_fits_a_small_batch() {
    let mut net = Mlp::new(spec(2, 16, 2, 1, 0.05), 2).unwrap();
    let xs = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
    let ts = vec![vec![-1.0], vec![1.0], vec![1.0], vec![-1.0]];
    for _ in 0..500 {
        net.train_batch(&xs, &ts).unwrap();
    }
    assert!(net.loss(&xs, &ts).unwrap() < 1e-3);
}

#[test]
fn zero_step_leaves_weights_bit_identical() {
    let mut net = Mlp::new(spec(4, 6, 2, 3, 0.01), 8).unwrap();
    let before = net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (xs, ts) = batch(&mut rng, 5, 4, 3);
    let (_, g) = net.gradients(&xs, &ts).unwrap();
    assert!(g.flatten().iter().any(|v| *v != 0.0));
    net.apply_gradients(&g, 0.0);
    let bits = |n: &Mlp| n.parameters().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&net), bits(&before));
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(matches!(Mlp::new(spec(4, 6, 2, 3, 0.0), 0), Err(NnError::Spec(_))));
    assert!(matches!(Mlp::new(spec(4, 6, 2, 3, f64::NAN), 0), Err(NnError::Spec(_))));
    assert!(matches!(Mlp::new(spec(0, 6, 2, 3, 0.1), 0), Err(NnError::Spec(_))));
    assert!(matches!(Mlp::new(spec(4, 0, 2, 3, 0.1), 0), Err(NnError::Spec(_))));
}

#[test]
fn bad_batches_are_rejected() {
    let mut net = Mlp::new(spec(2, 3, 1, 1, 0.1), 0).unwrap();
    assert!(matches!(net.train_batch(&[], &[]), Err(NnError::Batch { .. })));
    assert!(matches!(
        net.train_batch(&[vec![0.0, 0.0]], &[vec![0.0], vec![1.0]]),
        Err(NnError::Batch { .. })
    ));
    assert!(matches!(
        net.train_batch(&[vec![0.0, 0.0]], &[vec![0.0, 1.0]]),
        Err(NnError::Shape { expected: 1, got: 2 })
    ));
}

#[test]
fn checkpoint_round_trip_preserves_outputs() {
    let net = Mlp::new(spec(5, 7, 2, 4, 0.01), 3).unwrap();
    let ck = Checkpoint {
        net: net.clone(),
        input_labels: labels("in", 5),
        output_labels: labels("out", 4),
    };
    let back = Checkpoint::from_text(&ck.to_text()).unwrap();
    assert_eq!(back, ck);
    let x = [0.3, -1.0, 1.0, 0.25, -0.7];
    assert_eq!(back.net.forward(&x).unwrap(), net.forward(&x).unwrap());
}

#[test]
fn remap_with_identical_labels_is_a_copy() {
    let net = Mlp::new(spec(3, 4, 1, 2, 0.01), 5).unwrap();
    let ck = Checkpoint {
        net: net.clone(),
        input_labels: labels("in", 3),
        output_labels: labels("out", 2),
    };
    assert_eq!(ck.remap(&labels("in", 3), &labels("out", 2), 99).unwrap(), net);
}

#[test]
fn remap_carries_matching_rows_and_columns() {
    let net = Mlp::new(spec(2, 4, 1, 2, 0.01), 5).unwrap();
    let ck = Checkpoint {
        net: net.clone(),
        input_labels: vec!["a".into(), "b".into()],
        output_labels: vec!["x".into(), "y".into()],
    };
    let ins: Vec<String> = ["b", "new", "a"].iter().map(|s| s.to_string()).collect();
    let outs: Vec<String> = ["y", "z", "x"].iter().map(|s| s.to_string()).collect();
    let m = ck.remap(&ins, &outs, 1).unwrap();
    let (old0, new0) = (&net.layers()[0], &m.layers()[0]);
    for r in 0..4 {
        assert_eq!(new0.weight(r, 0), old0.weight(r, 1));
        assert_eq!(new0.weight(r, 2), old0.weight(r, 0));
        assert_eq!(new0.bias[r], old0.bias[r]);
    }
    let (old1, new1) = (&net.layers()[1], &m.layers()[1]);
    for c in 0..4 {
        assert_eq!(new1.weight(0, c), old1.weight(1, c));
        assert_eq!(new1.weight(2, c), old1.weight(0, c));
    }
    assert_eq!(new1.bias[0], old1.bias[1]);
    assert_eq!(new1.bias[2], old1.bias[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn forward_matches_reference(
        i in 1usize..8, h in 1usize..10, l in 0usize..4, o in 1usize..6,
        seed in any::<u64>(),
        raw in prop::collection::vec(-2.0f64..2.0, 8),
    ) {
        let net = Mlp::new(spec(i, h, l, o, 0.01), seed).unwrap();
        let x = &raw[..i];
        let got = net.forward(x).unwrap();
        let (want, _) = reference_forward(net.layers(), x);
        prop_assert_eq!(got.len(), o);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-10);
        }
    }

    #[test]
    fn forward_is_pure(seed in any::<u64>(), raw in prop::collection::vec(-2.0f64..2.0, 4)) {
        let net = Mlp::new(spec(4, 5, 2, 3, 0.01), seed).unwrap();
        let before = net.clone();
        let a = net.forward(&raw).unwrap();
        let b = net.forward(&raw).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(net, before);
    }

    #[test]
    fn loss_is_nonnegative_and_zero_on_own_outputs(seed in any::<u64>(), raw in prop::collection::vec(-2.0f64..2.0, 3)) {
        let net = Mlp::new(spec(3, 4, 1, 2, 0.01), seed).unwrap();
        let y = net.forward(&raw).unwrap();
        prop_assert_eq!(net.loss(&[raw.clone()], &[y.clone()]).unwrap(), 0.0);
        let shifted: Vec<f64> = y.iter().map(|v| v + 1.0).collect();
        prop_assert!((net.loss(&[raw], &[shifted]).unwrap() - 2.0).abs() < 1e-12);
    }
}
