mod common;

use common::gradcheck::{draw, random_dataset, relative_error, TOLERANCE};
use fedsim::model::{client_update, init_params, mean_loss, LocalTrainSpec, ModelSpec, OptConfig};
use fedsim::rng::Rng;

#[test]
fn analytic_gradient_matches_central_differences() {
    let mut rng = Rng::new(2024);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let inst = draw(&mut rng);
        let rel = relative_error(&inst);
        worst = worst.max(rel);
        assert!(
            rel <= TOLERANCE,
            "case {case} ({}): relative error {rel:e}",
            inst.spec.describe()
        );
    }
    println!("worst relative gradient error over 50 instances: {worst:e}");
}

#[test]
fn local_training_reduces_training_loss() {
    let mut rng = Rng::new(77);
    let spec = ModelSpec::mlp(5, 8, 3);
    let data = random_dataset(&mut rng, 60, 5, 3);
    let all: Vec<usize> = (0..data.len()).collect();
    let start = init_params(&spec, &mut rng).unwrap();
    let before = mean_loss(&spec, &start, &data, &all).unwrap();
    let train = LocalTrainSpec {
        epochs: 20,
        batch_size: 10,
        ..LocalTrainSpec::default()
    };
    let out = client_update(
        &spec,
        &start,
        &data,
        &all,
        &train,
        &OptConfig::default(),
        None,
        &mut rng,
    )
    .unwrap();
    let after = mean_loss(&spec, &out.params, &data, &all).unwrap();
    assert!(after < before, "{after} >= {before}");
    assert_eq!(out.steps, 20 * 6);
}
