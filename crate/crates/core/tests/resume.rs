use gaudy_core::active::{
    run_experiment, Dataset, Ensemble, GaborTeacher, RunState, SessionModel, StrategyParams,
    StrategyRegistry,
};
use gaudy_core::corpus::synthetic_image;
use gaudy_core::image::to_grayscale;
use gaudy_core::models::{gabor_filter, Activation, ActivationKind, GaborParams, Glm, TrainConfig};
use gaudy_core::oed::NoiseModel;
use gaudy_core::rng::Stream;
use gaudy_core::Error;

const SIDE: usize = 10;

fn world() -> (Dataset, GaborTeacher) {
    let images = (0..600u64)
        .map(|i| to_grayscale(&synthetic_image(2, i, SIDE)))
        .collect();
    let filter = gabor_filter(&GaborParams::standard(SIDE)).unwrap();
    let teacher = GaborTeacher::new(&filter, Activation::RELU, NoiseModel::new(0.5).unwrap());
    let data = Dataset::new(images, &teacher, 60, 0).unwrap();
    (data, teacher)
}

fn cfg(sessions: usize) -> TrainConfig {
    TrainConfig {
        sessions,
        images_per_session: 40,
        epochs_per_session: 2,
        batch_size: 8,
        learning_rate: 1e-8,
        momentum: 0.7,
        mix_fraction: 0.5,
        seed: 11,
    }
}

fn ensemble(seed: u64) -> Ensemble {
    let act = Activation::plain(ActivationKind::Relu);
    Ensemble::readouts(2, SIDE * SIDE, 6, 1, 1, act, &Stream::new(seed)).unwrap()
}

fn glm(seed: u64) -> Glm {
    Glm::random(SIDE * SIDE, Activation::RELU, &mut Stream::new(seed))
}

/// Saved state bytes after every session of an uninterrupted run.
fn trace(
    strategy: &str,
    model: &mut dyn SessionModel,
    sessions: usize,
    resume: Option<RunState>,
) -> Vec<Vec<u8>> {
    let (data, teacher) = world();
    let s = StrategyRegistry::new(StrategyParams {
        pool: 80,
        shortlist: 30,
    })
    .build(strategy)
    .unwrap();
    let mut states = Vec::new();
    run_experiment(
        &cfg(sessions),
        s.as_ref(),
        &data,
        &teacher,
        model,
        resume,
        &mut |snap| {
            states.push(snap.state().to_bytes());
            Ok(())
        },
    )
    .unwrap();
    states
}

#[test]
fn resumed_runs_match_uninterrupted_runs() {
    for strategy in ["normal", "gaudy", "pool-ensdis", "coreset"] {
        let full = trace(strategy, &mut ensemble(1), 4, None);
        assert_eq!(full.len(), 4);
        for cut in 1..4 {
            let state = RunState::from_bytes(&full[cut - 1]).unwrap();
            assert_eq!(state.to_bytes(), full[cut - 1]);
            // a differently initialized model is overwritten by the state
            let rest = trace(strategy, &mut ensemble(99), 4, Some(state));
            assert_eq!(rest, full[cut..], "{strategy} resumed after {cut}");
        }
    }
    let full = trace("gaudy", &mut glm(1), 3, None);
    let rest = trace(
        "gaudy",
        &mut glm(2),
        3,
        Some(RunState::from_bytes(&full[0]).unwrap()),
    );
    assert_eq!(rest, full[1..]);
}

#[test]
fn a_finished_state_trains_no_further() {
    let full = trace("normal", &mut glm(1), 2, None);
    let state = RunState::from_bytes(&full[1]).unwrap();
    assert!(trace("normal", &mut glm(1), 2, Some(state)).is_empty());
}

#[test]
fn mismatched_states_are_rejected() {
    let (data, teacher) = world();
    let normal = StrategyRegistry::default().build("normal").unwrap();
    let full = trace("normal", &mut ensemble(1), 3, None);
    let run = |model: &mut dyn SessionModel, sessions: usize| {
        let state = RunState::from_bytes(&full[2]).unwrap();
        run_experiment(
            &cfg(sessions),
            normal.as_ref(),
            &data,
            &teacher,
            model,
            Some(state),
            &mut |_| Ok(()),
        )
    };
    assert!(matches!(run(&mut glm(1), 3), Err(Error::Checkpoint(_))));
    let wider = Ensemble::readouts(
        3,
        SIDE * SIDE,
        6,
        1,
        1,
        Activation::plain(ActivationKind::Relu),
        &Stream::new(1),
    )
    .unwrap();
    assert!(matches!(run(&mut { wider }, 3), Err(Error::Checkpoint(_))));
    assert!(matches!(
        run(&mut ensemble(1), 2),
        Err(Error::Checkpoint(_))
    ));

    let bytes = &full[2];
    assert!(RunState::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(
        RunState::from_bytes(&bad),
        Err(Error::Checkpoint(_))
    ));
    let mut longer = bytes.clone();
    longer.push(0);
    assert!(RunState::from_bytes(&longer).is_err());
}

#[test]
fn state_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.ckpt");
    let full = trace("coreset", &mut ensemble(3), 2, None);
    let state = RunState::from_bytes(&full[1]).unwrap();
    state.save(&path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), full[1]);
    assert_eq!(RunState::load(&path).unwrap().sessions(), 2);
    assert!(!path.with_extension("tmp").exists());
}
