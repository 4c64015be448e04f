//! Property tests over the numeric core: interpolation algebra, output
//! ranges, forest bounds, IDX round trips, and serialization exactness.

use proptest::prelude::*;

use catebench::data::{ExperimentData, OutcomeKind, Truth};
use catebench::forest::{fit_forest, ForestParams, TreeParams};
use catebench::matrix::Matrix;
use catebench::mnist_io::{idx_bytes, parse_idx, IdxArray};
use catebench::nn::{
    interpolate_params, loss_mse, Activation, DenseNetwork, NetworkConfig, OutputKind,
};
use catebench::seed::rng_from_seed;

fn small_net(seed: u64, output: OutputKind) -> DenseNetwork {
    let cfg = NetworkConfig {
        input_dim: 3,
        hidden: vec![5, 4],
        activation: Activation::Elu,
        output,
        zero_init_output: false,
    };
    DenseNetwork::new(&cfg, &mut rng_from_seed(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// interpolate(a,b,eps) + interpolate(b,a,eps) = a + b per coordinate.
    #[test]
    fn interpolation_is_affine_in_eps(
        seed_a in 0u64..1000,
        seed_b in 1000u64..2000,
        eps in proptest::collection::vec(0.0f64..=1.0, 3),
    ) {
        let a = small_net(seed_a, OutputKind::Identity);
        let b = small_net(seed_b, OutputKind::Identity);
        let ab = interpolate_params(&a, &b, &eps).unwrap();
        let ba = interpolate_params(&b, &a, &eps).unwrap();
        for l in 0..a.num_layers() {
            let (la, lb) = (&a.layers()[l], &b.layers()[l]);
            let (lab, lba) = (&ab.layers()[l], &ba.layers()[l]);
            for i in 0..la.weights.as_slice().len() {
                let want = la.weights.as_slice()[i] + lb.weights.as_slice()[i];
                let got = lab.weights.as_slice()[i] + lba.weights.as_slice()[i];
                prop_assert!((want - got).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn logistic_outputs_stay_inside_unit_interval(
        seed in 0u64..500,
        rows in proptest::collection::vec(
            proptest::collection::vec(-50.0f64..50.0, 3), 1..20),
    ) {
        let net = small_net(seed, OutputKind::Logistic);
        let x = Matrix::from_rows(&rows).unwrap();
        let preds = net.forward(&x).unwrap();
        prop_assert!(preds.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn mse_is_nonnegative_and_zero_only_on_identical(
        pairs in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..30),
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let loss = loss_mse(&a, &b).unwrap();
        prop_assert!(loss >= 0.0);
        prop_assert_eq!(loss == 0.0, a == b);
        prop_assert_eq!(loss_mse(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn forest_predictions_stay_within_target_range(
        seed in 0u64..100,
        targets in proptest::collection::vec(-10.0f64..10.0, 20..60),
    ) {
        let mut rng = rng_from_seed(seed);
        let rows: Vec<Vec<f64>> = (0..targets.len())
            .map(|_| vec![rand::Rng::random_range(&mut rng, -3.0..3.0)])
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let forest = fit_forest(
            &x,
            &targets,
            &ForestParams {
                n_trees: 8,
                tree: TreeParams { min_leaf_size: 2, ..TreeParams::default() },
                ..ForestParams::default()
            },
            seed,
        )
        .unwrap();
        let lo = targets.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = targets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let probe = Matrix::from_rows(&[vec![-100.0], vec![0.0], vec![100.0]]).unwrap();
        for p in forest.predict(&probe).unwrap() {
            prop_assert!(p >= lo && p <= hi);
        }
    }

    /// write(parse(bytes)) == bytes for arbitrary well-formed IDX payloads.
    #[test]
    fn idx_round_trip_is_byte_identical(
        dims in proptest::collection::vec(1usize..6, 1..4),
        fill in 0u8..=255,
    ) {
        let len: usize = dims.iter().product();
        let data: Vec<u8> = (0..len).map(|i| fill.wrapping_add(i as u8)).collect();
        let arr = IdxArray::new(dims, data).unwrap();
        let bytes = idx_bytes(&arr).unwrap();
        let parsed = parse_idx(&bytes).unwrap();
        prop_assert_eq!(&parsed, &arr);
        prop_assert_eq!(idx_bytes(&parsed).unwrap(), bytes);
    }

    /// The columnar CSV format reproduces every float bit-exactly.
    #[test]
    fn experiment_csv_round_trip_is_exact(
        seed in 0u64..200,
        n in 2usize..30,
    ) {
        let mut rng = rng_from_seed(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![
                rand::Rng::random_range(&mut rng, -1.0..1.0),
                rand::Rng::random_range(&mut rng, -1.0..1.0),
            ])
            .collect();
        let w: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let y: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -2.0..2.0)).collect();
        let mu0: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0.0..1.0)).collect();
        let mu1: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0.0..1.0)).collect();
        let data = ExperimentData::new(
            Matrix::from_rows(&rows).unwrap(),
            w,
            y,
            OutcomeKind::Continuous,
            Some(Truth::from_surfaces(mu0, mu1)),
        )
        .unwrap();
        let dir = std::env::temp_dir().join("catebench_prop_csv");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("e{seed}_{n}.csv"));
        data.write_csv(&path, true).unwrap();
        let back = ExperimentData::read_csv(&path).unwrap();
        prop_assert_eq!(&back.x, &data.x);
        prop_assert_eq!(&back.w, &data.w);
        for (a, b) in back.y_obs.iter().zip(&data.y_obs) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        let (ta, tb) = (back.truth.as_ref().unwrap(), data.truth.as_ref().unwrap());
        for (a, b) in ta.tau.iter().zip(&tb.tau) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        std::fs::remove_file(&path).ok();
    }
}

#[test]
fn training_determinism_is_bitwise() {
    use catebench::nn::train::{train_regression, TrainConfig};
    let mut rng = rng_from_seed(77);
    let rows: Vec<Vec<f64>> = (0..64)
        .map(|_| vec![rand::Rng::random_range(&mut rng, -1.0..1.0); 3])
        .collect();
    let y: Vec<f64> = rows.iter().map(|r| r[0] - 2.0 * r[1]).collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let cfg = TrainConfig {
        max_steps: 500,
        ..TrainConfig::default()
    };
    let fit = |seed: u64| {
        let arch = NetworkConfig::regression(3, OutputKind::Identity);
        let mut rng = rng_from_seed(seed);
        let mut net = DenseNetwork::new(&arch, &mut rng).unwrap();
        train_regression(&mut net, &x, &y, &cfg, &mut rng).unwrap();
        net
    };
    assert!(catebench::nn::params_bitwise_eq(&fit(5), &fit(5)));
}
