use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::json;

use cablecal_core::error_model::predicted_length;
use cablecal_core::formats::{
    sig9, write_dataset, write_ekf_trace, write_optimizer_trace, GroundTruth, RobotConfig,
};
use cablecal_core::kinematics::{apply_deviation, forward_kinematics};
use cablecal_core::pipeline::{self, CalibrationResult, MethodTrace, MetricsReport};
use cablecal_core::sim::Scenario;
use cablecal_core::{DeviationVector, JointVector, ParamGroup, NUM_PARAMS};

use crate::manifest::{self, Run};
use crate::{load_dataset, CalibrateArgs, CompareArgs, FkArgs, SimulateArgs};

struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write_with(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> Result<()>,
    ) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        body(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush()?;
        self.written.push(path.display().to_string());
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        self.write_with(name, |w| Ok(w.write_all(text.as_bytes())?))
    }
}

fn param_name(i: usize) -> String {
    let (group, link) = ParamGroup::of_index(i);
    format!("{}{}", group.label(), link + 1)
}

fn named_delta(delta: &DeviationVector) -> serde_json::Value {
    (0..NUM_PARAMS)
        .map(|i| json!({ "name": param_name(i), "value": delta[i] }))
        .collect()
}

fn robot_source(robot: &Option<PathBuf>) -> String {
    robot
        .as_ref()
        .map_or_else(|| "bundled:irb120".to_string(), |p| p.display().to_string())
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let started = Instant::now();
    let robot = a.robot.load()?;
    let scenario = Scenario {
        n_samples: a.n as usize,
        noise: a.noise,
        max_a: a.max_length,
        max_d: a.max_length,
        max_alpha: a.max_angle,
        max_theta: a.max_angle,
    };
    let sim = scenario.generate(&robot.table, &robot.p0, a.seed)?;
    let [config_seed, deviation_seed, noise_seed] = Scenario::stream_seeds(a.seed);
    let truth = GroundTruth {
        seed: a.seed,
        n_samples: scenario.n_samples,
        noise: scenario.noise.to_string(),
        noise_seed,
        deviation_seed,
        config_seed,
        max_a_mm: scenario.max_a,
        max_d_mm: scenario.max_d,
        max_alpha_rad: scenario.max_alpha,
        max_theta_rad: scenario.max_theta,
        true_delta: sim.true_delta.as_slice().to_vec(),
    };

    let mut out = OutDir::create(&a.out)?;
    out.write_with("dataset.csv", |w| Ok(write_dataset(w, &sim.dataset)?))?;
    out.write_text("ground_truth.toml", &truth.to_toml_string())?;
    manifest::write(
        &out.dir,
        Run {
            command: "simulate",
            settings: json!({ "robot": robot_source(&a.robot.robot), "scenario": scenario, "seed": a.seed }),
            inputs: a
                .robot
                .robot
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
            outputs: out.written.clone(),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    )?;
    println!(
        "simulated {} samples ({} noise) into {}",
        sim.dataset.len(),
        scenario.noise,
        out.dir.display()
    );
    Ok(())
}

fn metrics_json(m: &MetricsReport) -> serde_json::Value {
    json!({ "rmse_mm": m.rmse, "std_mm": m.std, "max_mm": m.max, "n": m.n })
}

fn stop_of(trace: &MethodTrace) -> serde_json::Value {
    match trace {
        MethodTrace::Search { stop, .. } | MethodTrace::FilterThenSearch { stop, .. } => {
            json!(stop)
        }
        MethodTrace::Filter { .. } => serde_json::Value::Null,
    }
}

/// Deterministic part of a calibration result.
fn result_json(res: &CalibrationResult) -> serde_json::Value {
    json!({
        "method": res.method,
        "before": metrics_json(&res.before),
        "after": metrics_json(&res.after),
        "train_objective_mm2": res.train_objective,
        "search_iterations": res.trace.search().map(|t| t.len()),
        "stop": stop_of(&res.trace),
        "delta_hat": named_delta(&res.delta_hat),
    })
}

fn metrics_table(rows: &[(&str, &MetricsReport)]) -> String {
    let mut s = format!(
        "{:<14} {:>14} {:>14} {:>14}\n",
        "Model", "RMSE (mm)", "Std (mm)", "Max (mm)"
    );
    for (label, m) in rows {
        s += &format!(
            "{:<14} {:>14} {:>14} {:>14}\n",
            label,
            sig9(m.rmse),
            sig9(m.std),
            sig9(m.max)
        );
    }
    s
}

fn write_traces(out: &mut OutDir, trace: &MethodTrace) -> Result<()> {
    if let Some(entries) = trace.filter() {
        out.write_with("ekf_trace.csv", |w| Ok(write_ekf_trace(w, entries)?))?;
    }
    if let Some(entries) = trace.search() {
        out.write_with("trace.csv", |w| Ok(write_optimizer_trace(w, entries)?))?;
    }
    Ok(())
}

/// One convergence trace per method: the search trace when the method runs
/// a search, the filter trace otherwise.
fn write_method_trace(out: &mut OutDir, res: &CalibrationResult) -> Result<()> {
    let name = format!("trace_{}.csv", res.method);
    match (res.trace.search(), res.trace.filter()) {
        (Some(entries), _) => out.write_with(&name, |w| Ok(write_optimizer_trace(w, entries)?)),
        (None, Some(entries)) => out.write_with(&name, |w| Ok(write_ekf_trace(w, entries)?)),
        (None, None) => Ok(()),
    }
}

pub fn calibrate(a: &CalibrateArgs) -> Result<()> {
    let started = Instant::now();
    let robot = a.robot.load()?;
    let data = load_dataset(&a.data, &robot)?;
    let cfg = a.tuning.resolve()?;
    let res = pipeline::calibrate(a.method, &robot.table, &data, &cfg, a.seed)?;

    let calibrated = RobotConfig {
        name: format!("{} (calibrated, {})", robot.name, a.method),
        table: apply_deviation(&robot.table, &res.delta_hat),
        p0: robot.p0,
    };
    let mut report = result_json(&res);
    report["seed"] = json!(a.seed);
    report["train_fraction"] = json!(cfg.train_fraction.0);

    let mut out = OutDir::create(&a.out)?;
    out.write_text(
        "report.json",
        &(serde_json::to_string_pretty(&report)? + "\n"),
    )?;
    out.write_text("calibrated.toml", &calibrated.to_toml_string())?;
    write_traces(&mut out, &res.trace)?;
    manifest::write(
        &out.dir,
        Run {
            command: "calibrate",
            settings: json!({
                "robot": robot_source(&a.robot.robot),
                "method": a.method,
                "seed": a.seed,
                "calibration": cfg,
            }),
            inputs: std::iter::once(a.data.display().to_string())
                .chain(a.robot.robot.iter().map(|p| p.display().to_string()))
                .collect(),
            outputs: out.written.clone(),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    )?;
    print!(
        "{}",
        metrics_table(&[("Before", &res.before), (res.method.label(), &res.after)])
    );
    Ok(())
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let started = Instant::now();
    let robot = a.robot.load()?;
    let scenario = match &a.scenario {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading scenario {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing scenario {}", path.display()))?
        }
        None => Scenario::default(),
    };
    let cfg = a.tuning.resolve()?;
    let cmp = pipeline::compare(
        &a.methods,
        &robot.table,
        &robot.p0,
        &scenario,
        a.trials as usize,
        a.seed,
        &cfg,
    )?;

    let table = cmp.table();
    let report = json!({
        "summary": cmp.summary,
        "trials": cmp.trials.iter().map(|t| json!({
            "id": t.id,
            "data_seed": t.data_seed,
            "calibration_seed": t.calibration_seed,
            "before": metrics_json(&t.before),
            "results": t.results.iter().map(result_json).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    });

    let mut out = OutDir::create(&a.out)?;
    out.write_text("table.txt", &table)?;
    out.write_text(
        "comparison.json",
        &(serde_json::to_string_pretty(&report)? + "\n"),
    )?;
    for res in &cmp.trials[0].results {
        write_method_trace(&mut out, res)?;
    }
    manifest::write(
        &out.dir,
        Run {
            command: "compare",
            settings: json!({
                "robot": robot_source(&a.robot.robot),
                "scenario": scenario,
                "methods": a.methods,
                "trials": a.trials,
                "seed": a.seed,
                "calibration": cfg,
            }),
            inputs: a
                .scenario
                .iter()
                .chain(a.robot.robot.iter())
                .map(|p| p.display().to_string())
                .collect(),
            outputs: out.written.clone(),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    )?;
    print!("{table}");
    Ok(())
}

pub fn fk(a: &FkArgs) -> Result<()> {
    let robot = a.robot.load()?;
    let p0 = match &a.p0 {
        Some(v) => nalgebra::Vector3::new(v[0], v[1], v[2]),
        None => robot.p0,
    };
    let mut q = [0.0; 6];
    q.copy_from_slice(&a.q);
    let q = JointVector(q);
    let pose = forward_kinematics(&robot.table, &q)?;
    let row = |v: [f64; 3]| v.map(sig9).join(" ");
    println!(
        "position_mm {}",
        row([pose.position.x, pose.position.y, pose.position.z])
    );
    println!("rotation");
    for r in 0..3 {
        println!(
            "  {}",
            row([
                pose.rotation[(r, 0)],
                pose.rotation[(r, 1)],
                pose.rotation[(r, 2)]
            ])
        );
    }
    println!(
        "cable_length_mm {}",
        sig9(predicted_length(&robot.table, &q, &p0))
    );
    Ok(())
}
