use std::fs::{self, File};

use cablecal_core::error_model::objective;
use cablecal_core::formats::{irb120, read_dataset, write_dataset, GroundTruth, RobotConfig};
use cablecal_core::kinematics::apply_deviation;
use cablecal_core::{NoiseKind, Scenario};
use tempfile::TempDir;

#[test]
fn simulated_campaign_survives_disk_round_trip() {
    let robot = irb120();
    let scenario = Scenario {
        n_samples: 50,
        noise: NoiseKind::None,
        ..Scenario::default()
    };
    let sim = scenario.generate(&robot.table, &robot.p0, 9).unwrap();

    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("dataset.csv");
    write_dataset(File::create(&path).unwrap(), &sim.dataset).unwrap();
    let back = read_dataset(&path, robot.p0).unwrap();
    assert_eq!(back, sim.dataset);

    // the true deviation explains the reloaded data exactly
    assert!(objective(&robot.table, &sim.true_delta, &back).unwrap() < 1e-20);
    assert!(
        objective(
            &apply_deviation(&robot.table, &sim.true_delta),
            &Default::default(),
            &back
        )
        .unwrap()
            < 1e-18
    );
}

#[test]
fn robot_config_file_round_trip() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("robot.toml");
    let robot = irb120();
    fs::write(&path, robot.to_toml_string()).unwrap();
    assert_eq!(RobotConfig::load(&path).unwrap(), robot);
}

#[test]
fn ground_truth_file_round_trip() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("ground_truth.toml");
    let truth = GroundTruth {
        seed: 1,
        n_samples: 10,
        noise: "gaussian:0.1".into(),
        noise_seed: u64::MAX,
        deviation_seed: 2,
        config_seed: 3,
        max_a_mm: 1.0,
        max_d_mm: 1.0,
        max_alpha_rad: 0.01,
        max_theta_rad: 0.01,
        true_delta: (0..24).map(|i| (i as f64 - 11.5) * 1e-3 / 7.0).collect(),
    };
    fs::write(&path, truth.to_toml_string()).unwrap();
    let back = GroundTruth::load(&path).unwrap();
    assert_eq!(back, truth);
    assert_eq!(
        back.delta().unwrap().as_slice(),
        truth.true_delta.as_slice()
    );
}

#[test]
fn missing_dataset_file_is_an_error() {
    let tmp = TempDir::new().unwrap();
    assert!(read_dataset(&tmp.path().join("absent.csv"), irb120().p0).is_err());
}
