//! File formats: robot config (TOML), measurement datasets (CSV), the
//! ground-truth sidecar written next to simulated datasets (TOML), and the
//! optimizer and filter trace exports (CSV).

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::beetle::TraceEntry;
use crate::ekf::EkfTraceEntry;
use crate::error::{Error, Result};
use crate::error_model::{Dataset, MeasurementSample};
use crate::kinematics::{
    DeviationVector, DhTable, JointLimit, JointVector, LinkParams, NUM_JOINTS,
};

const IRB120_TOML: &str = include_str!("../fixtures/irb120.toml");

/// Column names of a dataset file, in order.
pub const DATASET_HEADER: [&str; 7] = ["q1", "q2", "q3", "q4", "q5", "q6", "y_mm"];

/// Nominal robot model plus the draw-wire anchor point.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotConfig {
    pub name: String,
    pub table: DhTable,
    /// Anchor point in mm, base frame.
    pub p0: Vector3<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkRecord {
    a_mm: f64,
    d_mm: f64,
    theta_offset_rad: f64,
    alpha_rad: f64,
    joint_limits_rad: [f64; 2],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotFile {
    #[serde(default)]
    name: String,
    p0_mm: [f64; 3],
    links: Vec<LinkRecord>,
}

/// The bundled nominal ABB IRB 120 model with anchor at (1000, 0, 0) mm.
pub fn irb120() -> RobotConfig {
    RobotConfig::from_toml_str(IRB120_TOML, "irb120.toml").expect("bundled fixture parses")
}

impl RobotConfig {
    pub fn from_toml_str(text: &str, file: &str) -> Result<Self> {
        let parse_err = |line: Option<u64>, message: String| Error::Parse {
            file: file.to_string(),
            line,
            message,
        };
        let raw: RobotFile = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].matches('\n').count() as u64 + 1);
            parse_err(line, e.message().to_string())
        })?;
        if raw.links.len() != NUM_JOINTS {
            return Err(parse_err(
                None,
                format!(
                    "links: expected {NUM_JOINTS} link records, got {}",
                    raw.links.len()
                ),
            ));
        }
        if !raw.p0_mm.iter().all(|v| v.is_finite()) {
            return Err(parse_err(None, "p0_mm: coordinates must be finite".into()));
        }
        let mut links = [LinkParams::default(); NUM_JOINTS];
        let mut limits = [JointLimit::new(0.0, 1.0); NUM_JOINTS];
        for (i, rec) in raw.links.iter().enumerate() {
            links[i] = LinkParams::new(rec.a_mm, rec.d_mm, rec.theta_offset_rad, rec.alpha_rad);
            if !links[i].is_finite() {
                return Err(parse_err(
                    None,
                    format!("links[{i}]: parameters must be finite"),
                ));
            }
            let [min, max] = rec.joint_limits_rad;
            if !(min.is_finite() && max.is_finite() && min < max) {
                return Err(parse_err(
                    None,
                    format!(
                        "links[{i}].joint_limits_rad: need finite min < max, got [{min}, {max}]"
                    ),
                ));
            }
            limits[i] = JointLimit::new(min, max);
        }
        Ok(Self {
            name: raw.name,
            table: DhTable::new(links, limits)?,
            p0: Vector3::from(raw.p0_mm),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        let raw = RobotFile {
            name: self.name.clone(),
            p0_mm: [self.p0.x, self.p0.y, self.p0.z],
            links: self
                .table
                .links()
                .iter()
                .zip(self.table.joint_limits())
                .map(|(l, lim)| LinkRecord {
                    a_mm: l.a,
                    d_mm: l.d,
                    theta_offset_rad: l.theta_offset,
                    alpha_rad: l.alpha,
                    joint_limits_rad: [lim.min, lim.max],
                })
                .collect(),
        };
        toml::to_string(&raw).expect("robot config serializes")
    }
}

/// Parses a dataset: header `q1..q6,y_mm`, `#` comment lines, joint angles in
/// rad and cable lengths in mm. The anchor point comes from the robot config.
pub fn parse_dataset<R: Read>(reader: R, file: &str, p0: Vector3<f64>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let err = |line: Option<u64>, message: String| Error::Parse {
        file: file.to_string(),
        line,
        message,
    };
    let header = rdr
        .headers()
        .map_err(|e| err(e.position().map(|p| p.line()), e.to_string()))?;
    if header.iter().ne(DATASET_HEADER.iter().copied()) {
        return Err(err(
            Some(1),
            format!("expected header {}", DATASET_HEADER.join(",")),
        ));
    }
    let mut samples = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| {
            err(
                e.position().map(|p| p.line()),
                format!("row {}: {e}", row + 1),
            )
        })?;
        let line = record.position().map(|p| p.line());
        let mut values = [0.0; 7];
        for (j, v) in values.iter_mut().enumerate() {
            let field = &record[j];
            *v = field.parse::<f64>().map_err(|_| {
                err(
                    line,
                    format!(
                        "row {}: column {} is not a number: '{field}'",
                        row + 1,
                        DATASET_HEADER[j]
                    ),
                )
            })?;
            if !v.is_finite() {
                return Err(err(
                    line,
                    format!(
                        "row {}: column {} is not finite",
                        row + 1,
                        DATASET_HEADER[j]
                    ),
                ));
            }
        }
        if values[6] < 0.0 {
            return Err(err(line, format!("row {}: negative cable length", row + 1)));
        }
        let mut q = [0.0; NUM_JOINTS];
        q.copy_from_slice(&values[..NUM_JOINTS]);
        samples.push(MeasurementSample {
            q: JointVector(q),
            y: values[6],
        });
    }
    if samples.is_empty() {
        return Err(err(None, "dataset has no rows".into()));
    }
    Dataset::new(samples, p0)
}

pub fn read_dataset(path: &Path, p0: Vector3<f64>) -> Result<Dataset> {
    let file = fs::File::open(path)?;
    parse_dataset(file, &path.display().to_string(), p0)
}

/// Writes a dataset with shortest round-trip float formatting, so a file
/// read back reproduces the in-memory dataset exactly.
pub fn write_dataset<W: Write>(mut w: W, data: &Dataset) -> Result<()> {
    writeln!(
        w,
        "# anchor p0_mm = {},{},{}",
        data.p0().x,
        data.p0().y,
        data.p0().z
    )?;
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(DATASET_HEADER).map_err(csv_io)?;
    for s in data.samples() {
        let mut row: Vec<String> = s.q.0.iter().map(|v| v.to_string()).collect();
        row.push(s.y.to_string());
        wtr.write_record(&row).map_err(csv_io)?;
    }
    wtr.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Sidecar describing how a simulated dataset was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub n_samples: usize,
    /// Noise spec in `KIND:PARAMS` form.
    pub noise: String,
    pub noise_seed: u64,
    pub deviation_seed: u64,
    pub config_seed: u64,
    pub max_a_mm: f64,
    pub max_d_mm: f64,
    pub max_alpha_rad: f64,
    pub max_theta_rad: f64,
    /// `[Δa₁..Δa₆, Δd₁..Δd₆, Δα₁..Δα₆, Δθ₁..Δθ₆]`.
    pub true_delta: Vec<f64>,
}

impl GroundTruth {
    pub fn delta(&self) -> Result<DeviationVector> {
        DeviationVector::from_slice(&self.true_delta)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            file: path.display().to_string(),
            line: None,
            message: e.message().to_string(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("ground truth serializes")
    }
}

/// Formats `x` with 9 significant digits.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.8e}")
    }
}

pub fn write_optimizer_trace<W: Write>(mut w: W, trace: &[TraceEntry]) -> Result<()> {
    writeln!(w, "iteration,best_value,cumulative_evaluations,wall_ms")?;
    for e in trace {
        writeln!(
            w,
            "{},{},{},{}",
            e.iteration,
            sig9(e.best_value),
            e.evaluations,
            sig9(e.wall_ms)
        )?;
    }
    Ok(())
}

pub fn write_ekf_trace<W: Write>(mut w: W, trace: &[EkfTraceEntry]) -> Result<()> {
    writeln!(w, "k,innovation,innovation_variance,trace_P")?;
    for e in trace {
        writeln!(
            w,
            "{},{},{},{}",
            e.k,
            sig9(e.innovation),
            sig9(e.innovation_variance),
            sig9(e.trace_p)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_robot_loads() {
        let r = irb120();
        assert_eq!(r.table.links()[1].a, 270.0);
        assert_eq!(r.p0, Vector3::new(1000.0, 0.0, 0.0));
        let again = RobotConfig::from_toml_str(&r.to_toml_string(), "round-trip").unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn robot_errors_name_the_field() {
        let text = IRB120_TOML.replacen(
            "[-1.9198621771937625, 1.2217304763960306]",
            "[1.0, -1.0]",
            1,
        );
        let msg = RobotConfig::from_toml_str(&text, "x.toml")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("links[2].joint_limits_rad"), "{msg}");

        let text = IRB120_TOML.replacen("a_mm = 270.0", "a_mm = \"wide\"", 1);
        let msg = RobotConfig::from_toml_str(&text, "x.toml")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("line"), "{msg}");

        let text = IRB120_TOML.replacen("p0_mm", "anchor", 1);
        assert!(RobotConfig::from_toml_str(&text, "x.toml").is_err());
    }

    #[test]
    fn dataset_round_trip_is_exact() {
        let r = irb120();
        let data = crate::sim::Scenario::default()
            .generate(&r.table, &r.p0, 3)
            .unwrap()
            .dataset;
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        let back = parse_dataset(buf.as_slice(), "mem", r.p0).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn malformed_row_is_located() {
        let text = "# comment\nq1,q2,q3,q4,q5,q6,y_mm\n0,0,0,0,0,0,500\n0,0,x,0,0,0,500\n";
        let msg = parse_dataset(text.as_bytes(), "d.csv", Vector3::zeros())
            .unwrap_err()
            .to_string();
        assert!(
            msg.contains("row 2") && msg.contains("line 4") && msg.contains("q3"),
            "{msg}"
        );

        let short = "q1,q2,q3,q4,q5,q6,y_mm\n0,0,0,0,0,0\n";
        let msg = parse_dataset(short.as_bytes(), "d.csv", Vector3::zeros())
            .unwrap_err()
            .to_string();
        assert!(msg.contains("row 1"), "{msg}");

        let header = "a,b\n1,2\n";
        assert!(parse_dataset(header.as_bytes(), "d.csv", Vector3::zeros()).is_err());
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(std::f64::consts::SQRT_2), "1.41421356");
        assert_eq!(sig9(2.0), "2.00000000");
        assert_eq!(sig9(1234.56789012), "1234.56789");
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.5e-7), "1.50000000e-7");
    }
}
