//! Fixtures shared by the benchmarks.

use cablecal_core::formats::{irb120, RobotConfig};
use cablecal_core::sim::SimulatedDataset;
use cablecal_core::{NoiseKind, Scenario};

pub fn robot() -> RobotConfig {
    irb120()
}

/// A noisy campaign of `n` samples on the bundled robot.
pub fn campaign(n: usize, seed: u64) -> SimulatedDataset {
    let robot = robot();
    let scenario = Scenario {
        n_samples: n,
        noise: NoiseKind::Gaussian { sigma: 0.1 },
        ..Scenario::default()
    };
    scenario
        .generate(&robot.table, &robot.p0, seed)
        .expect("default scenario generates")
}

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}
