use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::Rng as _;

use super::*;
use crate::rng::seeded;

fn gan_shapes(net: &DenseNetwork) -> Vec<(usize, usize)> {
    net.layers().iter().map(|l| l.weights.dim()).collect()
}

#[test]
fn init_shapes_match_architectures() {
    let mut rng = seeded(1);
    let g = DenseNetwork::init(
        &[81, 64, 128, 81],
        &[Activation::Relu, Activation::Relu, Activation::Sigmoid],
        &mut rng,
    )
    .unwrap();
    assert_eq!(gan_shapes(&g), vec![(64, 81), (128, 64), (81, 128)]);
    let d = DenseNetwork::init(
        &[81, 128, 64, 1],
        &[Activation::Relu, Activation::Relu, Activation::Sigmoid],
        &mut rng,
    )
    .unwrap();
    assert_eq!(gan_shapes(&d), vec![(128, 81), (64, 128), (1, 64)]);
    assert!(d
        .layers()
        .iter()
        .all(|l| l.biases.iter().all(|&b| b == 0.0)));
    let limit = (6.0f64 / (81 + 128) as f64).sqrt();
    assert!(d.layers()[0].weights.iter().all(|w| w.abs() <= limit));
}

#[test]
fn init_is_deterministic_and_validates() {
    let acts = [Activation::Relu, Activation::Sigmoid];
    let a = DenseNetwork::init(&[3, 4, 1], &acts, &mut seeded(9)).unwrap();
    let b = DenseNetwork::init(&[3, 4, 1], &acts, &mut seeded(9)).unwrap();
    assert_eq!(a, b);
    assert!(DenseNetwork::init(&[3, 0, 1], &acts, &mut seeded(9)).is_err());
    assert!(DenseNetwork::init(&[3, 4, 1], &acts[..1], &mut seeded(9)).is_err());
}

fn single_unit(w: f64, b: f64) -> DenseNetwork {
    DenseNetwork::from_layers(vec![DenseLayer {
        weights: array![[w]],
        biases: array![b],
        activation: Activation::Sigmoid,
    }])
    .unwrap()
}

#[test]
fn forward_examples() {
    let mut net = DenseNetwork::init(
        &[3, 5, 2],
        &[Activation::Relu, Activation::Sigmoid],
        &mut seeded(3),
    )
    .unwrap();
    for l in net.layers_mut() {
        l.weights.fill(0.0);
    }
    let out = net.forward(&Array2::from_elem((4, 3), 0.7).view()).unwrap();
    assert!(out.iter().all(|&p| p == 0.5));

    let relu = DenseNetwork::from_layers(vec![DenseLayer {
        weights: array![[-1.0]],
        biases: array![0.0],
        activation: Activation::Relu,
    }])
    .unwrap();
    assert_eq!(relu.forward(&array![[2.0]].view()).unwrap()[[0, 0]], 0.0);

    let p = single_unit(2.0, -1.0)
        .forward(&array![[1.0]].view())
        .unwrap()[[0, 0]];
    // sigma(1) = 1 / (1 + e^-1)
    assert!((p - 0.7310585786300049).abs() < 1e-12);
    assert!((p - 0.731059).abs() < 1e-6);

    assert!(net.forward(&Array2::zeros((1, 2)).view()).is_err());
}

#[test]
fn forward_is_pure() {
    let net = DenseNetwork::init(
        &[4, 6, 1],
        &[Activation::Relu, Activation::Sigmoid],
        &mut seeded(5),
    )
    .unwrap();
    let x = Array2::from_shape_fn((7, 4), |(i, j)| (i * 4 + j) as f64 / 28.0);
    let a = net.forward(&x.view()).unwrap();
    let b = net.forward(&x.view()).unwrap();
    assert!(a
        .iter()
        .zip(b.iter())
        .all(|(p, q)| p.to_bits() == q.to_bits()));
    assert!(a.iter().all(|&p| p > 0.0 && p < 1.0));
}

#[test]
fn bce_examples() {
    assert!((bce_loss(&[0.5], &[1.0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    assert!(bce_loss(&[1.0, 0.0], &[1.0, 0.0]).unwrap() <= 1.2e-7);
    let hand = |t: f64| -(t * t.ln() + (1.0 - t) * (1.0 - t).ln());
    let expected = (hand(0.9) + hand(0.1)) / 2.0;
    assert!((bce_loss(&[0.9, 0.1], &[0.9, 0.1]).unwrap() - expected).abs() < 1e-15);
    assert!(bce_loss(&[0.5], &[1.0, 0.0]).is_err());
}

#[test]
fn backward_zero_at_clamped_perfect_prediction() {
    let net = single_unit(50.0, 0.0);
    let (_, grads) = net
        .bce_gradients(&array![[1.0]].view(), &array![[1.0]])
        .unwrap();
    assert!(grads.layers[0].weights[[0, 0]].abs() < 1e-6);
    assert!(grads.layers[0].biases[0].abs() < 1e-6);
}

#[test]
fn backward_sigmoid_logit_gradient_is_p_minus_t() {
    let net = single_unit(0.7, -0.2);
    let x = array![[0.4]];
    let t = array![[1.0]];
    let (_, grads) = net.bce_gradients(&x.view(), &t).unwrap();
    let p = sigmoid(0.7 * 0.4 - 0.2);
    // dL/db = dL/dz
    assert!((grads.layers[0].biases[0] - (p - 1.0)).abs() < 1e-15);
    let h = 1e-6;
    let loss_at = |b: f64| bce_loss(&[sigmoid(0.7 * 0.4 + b)], &[1.0]).unwrap();
    let fd = (loss_at(-0.2 + h) - loss_at(-0.2 - h)) / (2.0 * h);
    assert!((fd - (p - 1.0)).abs() < 1e-8);
}

#[test]
fn backward_dead_relu_unit_has_zero_gradient() {
    let net = DenseNetwork::from_layers(vec![
        DenseLayer {
            weights: array![[1.0], [-1.0]],
            biases: array![0.0, 0.0],
            activation: Activation::Relu,
        },
        DenseLayer {
            weights: array![[0.5, 0.5]],
            biases: array![0.0],
            activation: Activation::Sigmoid,
        },
    ])
    .unwrap();
    let (_, g) = net
        .bce_gradients(&array![[2.0]].view(), &array![[1.0]])
        .unwrap();
    assert_eq!(g.layers[0].weights[[1, 0]], 0.0);
    assert_eq!(g.layers[0].biases[1], 0.0);
    assert_ne!(g.layers[0].weights[[0, 0]], 0.0);
}

/// Central finite differences over every parameter. Returns (analytic, numeric) pairs.
fn finite_difference_pairs(
    net: &DenseNetwork,
    x: &Array2<f64>,
    t: &Array2<f64>,
    h: f64,
) -> Vec<(f64, f64)> {
    let (_, grads) = net.bce_gradients(&x.view(), t).unwrap();
    let loss = |n: &DenseNetwork| {
        let p = n.forward(&x.view()).unwrap();
        bce_loss(
            &p.iter().copied().collect::<Vec<_>>(),
            &t.iter().copied().collect::<Vec<_>>(),
        )
        .unwrap()
    };
    let mut pairs = Vec::new();
    for (li, layer) in net.layers().iter().enumerate() {
        for idx in 0..layer.weights.len() {
            let (r, c) = (idx / layer.weights.ncols(), idx % layer.weights.ncols());
            let mut plus = net.clone();
            plus.layers_mut()[li].weights[[r, c]] += h;
            let mut minus = net.clone();
            minus.layers_mut()[li].weights[[r, c]] -= h;
            pairs.push((
                grads.layers[li].weights[[r, c]],
                (loss(&plus) - loss(&minus)) / (2.0 * h),
            ));
        }
        for b in 0..layer.biases.len() {
            let mut plus = net.clone();
            plus.layers_mut()[li].biases[b] += h;
            let mut minus = net.clone();
            minus.layers_mut()[li].biases[b] -= h;
            pairs.push((
                grads.layers[li].biases[b],
                (loss(&plus) - loss(&minus)) / (2.0 * h),
            ));
        }
    }
    pairs
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = seeded(42);
    let mut total = 0;
    let mut good = 0;
    for _ in 0..5 {
        let sizes = [3, rng.random_range(2..8), rng.random_range(2..8), 2];
        let net = DenseNetwork::init(
            &sizes,
            &[Activation::Relu, Activation::Relu, Activation::Sigmoid],
            &mut rng,
        )
        .unwrap();
        let x = Array2::from_shape_simple_fn((6, 3), || rng.random::<f64>());
        let t = Array2::from_shape_simple_fn((6, 2), || rng.random::<f64>());
        for (a, n) in finite_difference_pairs(&net, &x, &t, 1e-5) {
            total += 1;
            let scale = a.abs().max(n.abs());
            if scale < 1e-10 || (a - n).abs() / scale <= 1e-4 {
                good += 1;
            }
        }
    }
    assert!(good as f64 >= 0.99 * total as f64, "{good}/{total}");
}

#[test]
fn input_gradient_matches_finite_differences() {
    let net = DenseNetwork::init(
        &[3, 5, 1],
        &[Activation::Relu, Activation::Sigmoid],
        &mut seeded(8),
    )
    .unwrap();
    let x = array![[0.2, 0.5, 0.9]];
    let t = array![[1.0]];
    let (_, g) = net.bce_gradients(&x.view(), &t).unwrap();
    let h = 1e-6;
    for j in 0..3 {
        let mut xp = x.clone();
        xp[[0, j]] += h;
        let mut xm = x.clone();
        xm[[0, j]] -= h;
        let l =
            |x: &Array2<f64>| bce_loss(&[net.forward(&x.view()).unwrap()[[0, 0]]], &[1.0]).unwrap();
        let fd = (l(&xp) - l(&xm)) / (2.0 * h);
        assert!(
            (fd - g.input[[0, j]]).abs() < 1e-7,
            "{fd} vs {}",
            g.input[[0, j]]
        );
    }
}

fn grads_filled(net: &DenseNetwork, value: f64) -> Vec<LayerGrad> {
    net.layers()
        .iter()
        .map(|l| {
            let mut g = LayerGrad::zeros_like(l);
            g.weights.fill(value);
            g.biases.fill(value);
            g
        })
        .collect()
}

#[test]
fn adam_first_step_is_lr_scaled_sign() {
    let net0 = DenseNetwork::init(
        &[2, 3, 1],
        &[Activation::Relu, Activation::Sigmoid],
        &mut seeded(0),
    )
    .unwrap();
    for &g in &[1e-3, 0.5, -2.0, 1e4] {
        let mut net = net0.clone();
        let mut state = AdamState::new(&net, AdamConfig::default());
        let grads = grads_filled(&net, g);
        state.step(&mut net, &grads).unwrap();
        let expected = 0.001 * g.abs() / (g.abs() + 1e-8);
        for (a, b) in net.layers().iter().zip(net0.layers()) {
            for (p, q) in a.weights.iter().zip(b.weights.iter()) {
                assert!(((q - p).abs() - expected).abs() < 1e-12);
                assert_eq!((q - p).signum(), g.signum());
            }
        }
        assert_eq!(state.t, 1);
    }
}

#[test]
fn adam_zero_gradient_and_zero_lr_leave_params() {
    let net0 = DenseNetwork::init(
        &[2, 3, 1],
        &[Activation::Relu, Activation::Sigmoid],
        &mut seeded(0),
    )
    .unwrap();
    let mut net = net0.clone();
    let mut state = AdamState::new(&net, AdamConfig::default());
    let grads = grads_filled(&net, 0.0);
    state.step(&mut net, &grads).unwrap();
    assert_eq!(net, net0);

    let mut state = AdamState::new(
        &net,
        AdamConfig {
            lr: 0.0,
            ..AdamConfig::default()
        },
    );
    let grads = grads_filled(&net, 3.0);
    state.step(&mut net, &grads).unwrap();
    assert_eq!(net, net0);
}

#[test]
fn adam_rejects_non_finite_gradient() {
    let mut net = DenseNetwork::init(&[2, 1], &[Activation::Sigmoid], &mut seeded(0)).unwrap();
    let before = net.clone();
    let mut state = AdamState::new(&net, AdamConfig::default());
    let g = grads_filled(&net, f64::NAN);
    assert!(matches!(
        state.step(&mut net, &g),
        Err(Error::NonFiniteGradient { layer: 0 })
    ));
    assert_eq!(net, before);
    assert_eq!(state.t, 0);
}

#[test]
fn adam_trajectories_are_bitwise_reproducible() {
    let run = || {
        let mut rng = seeded(17);
        let mut net = DenseNetwork::init(
            &[3, 4, 1],
            &[Activation::Relu, Activation::Sigmoid],
            &mut rng,
        )
        .unwrap();
        let mut state = AdamState::new(&net, AdamConfig::default());
        let x = Array2::from_shape_simple_fn((8, 3), || rng.random::<f64>());
        let t = Array2::from_shape_simple_fn((8, 1), || f64::from(rng.random::<bool>()));
        for _ in 0..50 {
            let (_, g) = net.bce_gradients(&x.view(), &t).unwrap();
            state.step(&mut net, &g.layers).unwrap();
        }
        Checkpoint::capture(&net, Some(&state)).to_json()
    };
    assert_eq!(run(), run());
}

#[test]
fn parameters_stay_finite_over_many_updates() {
    let mut rng = seeded(23);
    let mut net = DenseNetwork::init(
        &[4, 8, 8, 1],
        &[Activation::Relu, Activation::Relu, Activation::Sigmoid],
        &mut rng,
    )
    .unwrap();
    let mut state = AdamState::new(
        &net,
        AdamConfig {
            lr: 0.01,
            ..AdamConfig::default()
        },
    );
    for _ in 0..10_000 {
        let x = Array2::from_shape_simple_fn((4, 4), || rng.random::<f64>());
        let t = Array2::from_shape_simple_fn((4, 1), || f64::from(rng.random::<bool>()));
        let (loss, g) = net.bce_gradients(&x.view(), &t).unwrap();
        assert!(loss.is_finite());
        state.step(&mut net, &g.layers).unwrap();
    }
    assert!(net.layers().iter().all(|l| l
        .weights
        .iter()
        .chain(l.biases.iter())
        .all(|v| v.is_finite())));
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let mut rng = seeded(31);
    let mut net = DenseNetwork::init(
        &[5, 7, 1],
        &[Activation::Relu, Activation::Sigmoid],
        &mut rng,
    )
    .unwrap();
    let mut state = AdamState::new(&net, AdamConfig::default());
    let x = Array2::from_shape_simple_fn((3, 5), || rng.random::<f64>());
    let (_, g) = net
        .bce_gradients(&x.view(), &Array2::from_elem((3, 1), 0.9))
        .unwrap();
    state.step(&mut net, &g.layers).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.json");
    save_checkpoint(&path, &net, Some(&state)).unwrap();
    let (net2, state2) = load_checkpoint(&path).unwrap();
    assert_eq!(net2, net);
    assert_eq!(state2.unwrap(), state);

    std::fs::write(&path, "{\"format\":\"other\"}").unwrap();
    assert!(load_checkpoint(&path).is_err());
}

proptest! {
    #[test]
    fn bce_is_non_negative(p in 0.0f64..=1.0, t in 0.0f64..=1.0) {
        prop_assert!(bce_loss(&[p], &[t]).unwrap() >= 0.0);
    }

    #[test]
    fn bce_at_half_is_ln2(label in 0u8..=1) {
        let l = bce_loss(&[0.5], &[f64::from(label)]).unwrap();
        prop_assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
