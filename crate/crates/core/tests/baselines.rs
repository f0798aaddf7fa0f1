use afeng::baselines::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn xor() -> Vec<(SparseVector, usize)> {
    [([0.0, 0.0], 0), ([1.0, 1.0], 0), ([0.0, 1.0], 1), ([1.0, 0.0], 1)]
        .iter()
        .map(|(x, y)| (SparseVector::from_dense(x), *y))
        .collect()
}

fn accuracy(data: &[(SparseVector, usize)], predict: impl Fn(&SparseVector) -> usize) -> f64 {
    data.iter().filter(|(x, y)| predict(x) == *y).count() as f64 / data.len() as f64
}

#[test]
fn separable_two_class_set_is_learned() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let data: Vec<_> = (0..40)
        .map(|i| {
            let y = i % 2;
            let offset = if y == 0 { -1.0 } else { 1.0 };
            let x = [offset + rng.random_range(-0.5..0.5), rng.random_range(-1.0..1.0)];
            (SparseVector::from_dense(&x), y)
        })
        .collect();
    for kind in [LinearKind::Logistic, LinearKind::Hinge] {
        let m = train_linear(&data, 2, kind, &LinearConfig::default()).unwrap();
        assert_eq!(accuracy(&data, |x| m.predict(x)), 1.0, "{kind:?}");
    }
}

#[test]
fn mlp_solves_xor_where_linear_cannot() {
    let data = xor();
    let config = MlpConfig {
        learning_rate: 0.1,
        epochs: 500,
        seed: 3,
        ..Default::default()
    };
    let mlp = train_mlp(&data, 2, &config).unwrap();
    assert_eq!(accuracy(&data, |x| mlp.predict(x)), 1.0);
    for kind in [LinearKind::Logistic, LinearKind::Hinge] {
        let m = train_linear(&data, 2, kind, &LinearConfig::default()).unwrap();
        assert!(accuracy(&data, |x| m.predict(x)) <= 0.75);
    }
}

#[test]
fn mlp_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data: Vec<_> = (0..6)
        .map(|i| {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            (SparseVector::from_dense(&x), i % 3)
        })
        .collect();
    let mut mlp = Mlp::new(4, 5, 3, 11);
    for b in mlp.b1.iter_mut().chain(mlp.b2.iter_mut()) {
        *b = rng.random_range(-0.5..0.5);
    }
    let grads = mlp.gradients(&data);
    let h = 1e-5;
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
    let mut worst: f64 = 0.0;

    macro_rules! check {
        ($slot:expr, $analytic:expr) => {{
            let orig = $slot;
            $slot = orig + h;
            let up = mlp.loss(&data);
            $slot = orig - h;
            let down = mlp.loss(&data);
            $slot = orig;
            worst = worst.max(rel($analytic, (up - down) / (2.0 * h)));
        }};
    }
    for i in 0..mlp.b1.len() {
        check!(mlp.b1[i], grads.b1[i]);
    }
    for i in 0..mlp.w2.len() {
        check!(mlp.w2[i], grads.w2[i]);
    }
    for i in 0..mlp.b2.len() {
        check!(mlp.b2[i], grads.b2[i]);
    }
    for f in 0..4 {
        for j in 0..5 {
            check!(mlp.w1_row_mut(f)[j], grads.w1[&f][j]);
        }
    }
    assert!(worst <= 1e-4, "max relative error {worst:e}");
}

#[test]
fn training_is_deterministic_under_seed() {
    let data = xor();
    let config = LinearConfig::default();
    assert_eq!(
        train_linear(&data, 2, LinearKind::Logistic, &config).unwrap(),
        train_linear(&data, 2, LinearKind::Logistic, &config).unwrap()
    );
    let mlp = MlpConfig {
        epochs: 5,
        ..Default::default()
    };
    assert_eq!(train_mlp(&data, 2, &mlp).unwrap(), train_mlp(&data, 2, &mlp).unwrap());
}

fn tokens() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[a-e]{1,3}", 0..12)
}

proptest! {
    #[test]
    fn normalized_vectors_have_unit_norm(docs in prop::collection::vec(tokens(), 1..6), probe in tokens()) {
        for mode in [VectorizerMode::Tfidf, VectorizerMode::Hashing] {
            let mut v = Vectorizer::new(mode);
            v.fit(&docs);
            let x = v.transform(&probe).unwrap();
            prop_assert!(x.nnz() == 0 || (x.norm() - 1.0).abs() <= 1e-12);
            prop_assert!(x.indices().windows(2).all(|w| w[0] < w[1]));
            prop_assert!(x.values().iter().all(|&v| v != 0.0));
        }
    }

    #[test]
    fn positive_rescaling_keeps_linear_decisions(scale in 0.01f64..100.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<_> = (0..9)
            .map(|i| (SparseVector::from_dense(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]), i % 3))
            .collect();
        let m = train_linear(&data, 3, LinearKind::Logistic, &LinearConfig { epochs: 3, seed, ..Default::default() }).unwrap();
        let mut scaled = m.clone();
        scaled.weights.iter_mut().chain(scaled.bias.iter_mut()).for_each(|w| *w *= scale);
        for (x, _) in &data {
            prop_assert_eq!(m.predict(x), scaled.predict(x));
        }
    }
}
