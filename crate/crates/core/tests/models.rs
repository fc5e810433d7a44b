use gaudy_core::models::{
    gabor_filter, load_checkpoint, r_squared, save_checkpoint, Activation, ActivationKind,
    Checkpoint, GaborParams, Glm, Mlp, TrainConfig,
};
use gaudy_core::rng::{tag, Stream};
use gaudy_core::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn activation(code: u8) -> Activation {
    match code % 3 {
        0 => Activation::LINEAR,
        1 => Activation::RELU,
        _ => Activation::new(ActivationKind::Sigmoid, 2.0).unwrap(),
    }
}

fn data(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = Stream::new(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.normal())
}

proptest! {
    #[test]
    fn checkpoints_round_trip_exactly(seed in 0u64..1000, depth in 0usize..4, act in 0u8..3) {
        let root = Stream::new(seed);
        let nets: Vec<Mlp> = (0..3)
            .map(|m| Mlp::readout(5, 4, depth, 2, activation(act), &mut root.child(m, tag::MEMBER)))
            .collect();
        let glm = Glm::random(7, activation(act), &mut root.child(9, tag::INIT));
        for ckpt in [
            Checkpoint::Glm(glm),
            Checkpoint::Mlp(nets[0].clone()),
            Checkpoint::Ensemble(nets),
        ] {
            prop_assert_eq!(Checkpoint::from_bytes(&ckpt.to_bytes()).unwrap(), ckpt);
        }
    }

    #[test]
    fn perfect_predictions_score_one(seed in 0u64..1000, rows in 1usize..5, cols in 2usize..30) {
        let truth = data(rows, cols, seed);
        let r = r_squared(&truth, &truth).unwrap();
        prop_assert!((r.mean - 1.0).abs() < 1e-12);
        prop_assert!(r.min() <= r.median() && r.median() <= r.max());
    }

    #[test]
    fn mean_predictions_score_zero(seed in 0u64..1000, cols in 2usize..30) {
        let truth = data(1, cols, seed);
        let pred = DMatrix::from_element(1, cols, truth.mean());
        prop_assert!(r_squared(&pred, &truth).unwrap().mean.abs() < 1e-12);
    }

    #[test]
    fn training_is_reproducible(seed in 0u64..200) {
        let x = data(4, 40, seed);
        let y = data(1, 40, seed + 1);
        let cfg = TrainConfig { epochs_per_session: 2, batch_size: 8, learning_rate: 0.05, ..TrainConfig::default() };
        let run = || {
            let mut net = Mlp::readout(4, 6, 1, 1, Activation::RELU, &mut Stream::new(seed));
            net.train_session(&x, &y, &cfg, &mut Stream::new(seed + 2)).unwrap();
            net
        };
        prop_assert_eq!(run(), run());
    }
}

#[test]
fn regression_fits_a_linear_target() {
    let x = data(3, 200, 1);
    let w = DMatrix::from_row_slice(1, 3, &[0.5, -1.0, 2.0]);
    let y = &w * &x;
    let mut net = Mlp::readout(3, 8, 1, 1, Activation::LINEAR, &mut Stream::new(2));
    let cfg = TrainConfig {
        epochs_per_session: 20,
        batch_size: 16,
        learning_rate: 0.05,
        ..TrainConfig::default()
    };
    let before = net.backward(&x, &y).unwrap().loss;
    let after = net
        .train_session(&x, &y, &cfg, &mut Stream::new(3))
        .unwrap();
    assert!(after < before * 1e-3, "loss {before} -> {after}");
    let r = r_squared(&net.forward_batch(&x).unwrap(), &y).unwrap();
    assert!(r.mean > 0.99, "R² {}", r.mean);
}

#[test]
fn glm_recovers_its_teacher() {
    let x = data(5, 300, 4);
    let teacher = Glm::random(5, Activation::RELU, &mut Stream::new(5));
    let y: Vec<f64> = teacher.forward_batch(&x).unwrap().iter().copied().collect();
    let mut student = Glm::random(5, Activation::RELU, &mut Stream::new(6));
    let cfg = TrainConfig {
        epochs_per_session: 50,
        batch_size: 10,
        learning_rate: 0.05,
        ..TrainConfig::default()
    };
    student
        .train_session(&x, &y, &cfg, &mut Stream::new(7))
        .unwrap();
    let pred = student.forward_batch(&x).unwrap();
    let truth = DMatrix::from_row_slice(1, y.len(), &y);
    assert!(r_squared(&pred, &truth).unwrap().mean > 0.95);
}

#[test]
fn diverging_training_reports_non_finite() {
    let x = data(3, 50, 1) * 1e3;
    let y = data(1, 50, 2);
    let mut net = Mlp::readout(3, 4, 1, 1, Activation::LINEAR, &mut Stream::new(0));
    let cfg = TrainConfig {
        learning_rate: 1e30,
        ..TrainConfig::default()
    };
    let err = net
        .train_session(&x, &y, &cfg, &mut Stream::new(1))
        .unwrap_err();
    assert!(matches!(err, Error::NonFinite(_)), "{err}");
}

#[test]
fn gabor_filter_peaks_at_its_center() {
    let f = gabor_filter(&GaborParams::standard(28)).unwrap();
    assert_eq!(f.shape(), (28, 28));
    assert!((f[(14, 14)] - 1.0).abs() < 1e-12);
    assert!(f.iter().all(|v| v.abs() <= 1.0 + 1e-12));
    // 180 degrees apart describes the same field
    let turned = GaborParams {
        orientation: 225.0,
        ..GaborParams::standard(28)
    };
    let g = gabor_filter(&turned).unwrap();
    assert!((f - g).amax() < 1e-12);
}

#[test]
fn checkpoint_files_round_trip_and_reject_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.ckpt");
    let net = Mlp::readout(3, 4, 2, 1, Activation::RELU, &mut Stream::new(1));
    save_checkpoint(&Checkpoint::Mlp(net.clone()), &path).unwrap();
    assert_eq!(load_checkpoint(&path).unwrap(), Checkpoint::Mlp(net));
    assert!(Checkpoint::from_bytes(b"NOTACKPT").is_err());
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.truncate(bytes.len() - 3);
    assert!(Checkpoint::from_bytes(&bytes).is_err());
}
