//! Train/test splitting, accuracy metrics, the four calibration methods and
//! the paired multi-trial comparison.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beetle::{optimize, BeetleConfig, StopReason, TraceEntry, Variant};
use crate::ekf::{run_ekf_passes, Covariance, EkfConfig, EkfNoiseConfig, EkfTraceEntry};
use crate::error::{Error, Result};
use crate::error_model::{objective, residuals, Dataset};
use crate::formats::sig9;
use crate::kinematics::{DeviationVector, DhTable, ParamGroup, NUM_PARAMS};
use crate::sim::{derive_seeds, Scenario};

/// Seeded shuffle, then the first `⌊n·train_fraction⌋` samples train and the
/// rest test.
pub fn split_dataset(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = data.len();
    if n < 2 {
        return Err(Error::invalid("need at least 2 samples to split"));
    }
    let n_train = (n as f64 * train_fraction).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::invalid(format!(
            "train fraction {train_fraction} leaves an empty side with {n} samples"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((
        data.subset(&order[..n_train])?,
        data.subset(&order[n_train..])?,
    ))
}

/// Cable-length accuracy over a set of residuals (mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rmse: f64,
    /// Mean absolute residual. Named after the column it fills in the
    /// comparison table, not a standard deviation.
    pub std: f64,
    pub max: f64,
    pub n: usize,
}

pub fn metrics(residuals: &[f64]) -> Result<MetricsReport> {
    if residuals.is_empty() {
        return Err(Error::invalid("metrics of an empty residual set"));
    }
    let n = residuals.len() as f64;
    let mut sq = 0.0;
    let mut abs = 0.0;
    let mut max: f64 = 0.0;
    for &e in residuals {
        sq += e * e;
        abs += e.abs();
        max = max.max(e.abs());
    }
    Ok(MetricsReport {
        rmse: (sq / n).sqrt(),
        std: abs / n,
        max,
        n: residuals.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ekf,
    Bas,
    Qibas,
    EkfQibas,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ekf, Method::Bas, Method::Qibas, Method::EkfQibas];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ekf => "ekf",
            Method::Bas => "bas",
            Method::Qibas => "qibas",
            Method::EkfQibas => "ekf-qibas",
        }
    }

    /// Row label used in the comparison table.
    pub fn label(self) -> &'static str {
        match self {
            Method::Ekf => "M1 EKF",
            Method::Bas => "M2 BAS",
            Method::Qibas => "M8 QIBAS",
            Method::EkfQibas => "M9 EKF-QIBAS",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown method '{s}' (expected one of ekf, bas, qibas, ekf-qibas)"
                ))
            })
    }
}

/// Filter settings in scalar form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EkfSettings {
    /// Sensor standard deviation (mm).
    pub measurement_sigma: f64,
    /// Process noise added to every diagonal entry of `P` per measurement.
    pub process_noise: f64,
    /// Prior standard deviation of the length deviations (mm).
    pub prior_sigma_length: f64,
    /// Prior standard deviation of the angle deviations (rad).
    pub prior_sigma_angle: f64,
    pub relinearize: bool,
    pub passes: usize,
}

impl Default for EkfSettings {
    fn default() -> Self {
        Self {
            measurement_sigma: 0.1,
            process_noise: 1e-12,
            prior_sigma_length: 1.0,
            prior_sigma_angle: 0.1,
            relinearize: true,
            passes: 1,
        }
    }
}

impl EkfSettings {
    pub fn to_config(&self) -> Result<EkfConfig> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.measurement_sigma)
            && ok(self.prior_sigma_length)
            && ok(self.prior_sigma_angle))
        {
            return Err(Error::invalid("EKF standard deviations must be positive"));
        }
        if !(self.process_noise.is_finite() && self.process_noise >= 0.0) {
            return Err(Error::invalid("EKF process noise must be non-negative"));
        }
        if self.passes == 0 {
            return Err(Error::invalid("EKF needs at least one pass"));
        }
        let mut noise = EkfNoiseConfig::with_measurement_sigma(self.measurement_sigma);
        noise.process = Covariance::identity() * self.process_noise;
        for i in 0..NUM_PARAMS {
            let s = if ParamGroup::of_index(i).0.is_angular() {
                self.prior_sigma_angle
            } else {
                self.prior_sigma_length
            };
            noise.initial_cov[(i, i)] = s * s;
        }
        Ok(EkfConfig {
            noise,
            relinearize: self.relinearize,
            passes: self.passes,
        })
    }
}

/// Beetle search settings. Searches run in box-normalized coordinates, so
/// the step and antenna are fractions of each parameter's box width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub max_iters: usize,
    /// Global bound on every length deviation: `±bound_length` mm.
    pub bound_length: f64,
    /// Global bound on every angle deviation: `±bound_angle` rad.
    pub bound_angle: f64,
    /// Initial step and antenna length as a fraction of the box width.
    pub step_fraction: f64,
    /// Additive decay floors as a fraction of the box width.
    pub floor_fraction: f64,
    pub mu: f64,
    pub tau: f64,
    pub v0: f64,
    pub rel_tol: f64,
    pub patience: usize,
    pub constant_steps: bool,
    /// EKF-QIBAS box half-width in posterior standard deviations.
    pub box_sigmas: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            bound_length: 5.0,
            bound_angle: 0.05,
            step_fraction: 0.1,
            floor_fraction: 1e-4,
            mu: 0.95,
            tau: 0.95,
            v0: 1e-10,
            rel_tol: 1e-12,
            patience: 50,
            constant_steps: false,
            box_sigmas: 3.0,
        }
    }
}

impl SearchSettings {
    fn global_bounds(&self) -> Vec<(f64, f64)> {
        (0..NUM_PARAMS)
            .map(|i| {
                let b = if ParamGroup::of_index(i).0.is_angular() {
                    self.bound_angle
                } else {
                    self.bound_length
                };
                (-b, b)
            })
            .collect()
    }

    fn beetle_config(&self, seed: u64) -> BeetleConfig {
        // The normalized box is [−1, 1] in every dimension: width 2.
        let mut cfg = BeetleConfig::uniform(NUM_PARAMS, -1.0, 1.0);
        cfg.delta0 = 2.0 * self.step_fraction;
        cfg.m0 = 2.0 * self.step_fraction;
        cfg.delta_floor = 2.0 * self.floor_fraction;
        cfg.m_floor = 2.0 * self.floor_fraction;
        cfg.mu = self.mu;
        cfg.tau = self.tau;
        cfg.v0 = self.v0;
        cfg.max_iters = self.max_iters;
        cfg.rel_tol = self.rel_tol;
        cfg.patience = self.patience;
        cfg.constant_steps = self.constant_steps;
        cfg.seed = seed;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub train_fraction: TrainFraction,
    pub ekf: EkfSettings,
    pub search: SearchSettings,
}

/// Fraction of samples used for identification; defaults to 0.8.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrainFraction(pub f64);

impl Default for TrainFraction {
    fn default() -> Self {
        TrainFraction(0.8)
    }
}

/// What a method recorded while it ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MethodTrace {
    Filter {
        entries: Vec<EkfTraceEntry>,
    },
    Search {
        /// Objective at the starting point.
        initial: f64,
        entries: Vec<TraceEntry>,
        stop: StopReason,
    },
    FilterThenSearch {
        filter: Vec<EkfTraceEntry>,
        /// Objective at the filter estimate.
        initial: f64,
        search: Vec<TraceEntry>,
        stop: StopReason,
    },
}

impl MethodTrace {
    pub fn filter(&self) -> Option<&[EkfTraceEntry]> {
        match self {
            MethodTrace::Filter { entries } => Some(entries),
            MethodTrace::FilterThenSearch { filter, .. } => Some(filter),
            MethodTrace::Search { .. } => None,
        }
    }

    /// Search objective at the starting point, if a search ran.
    pub fn initial_value(&self) -> Option<f64> {
        match self {
            MethodTrace::Search { initial, .. } | MethodTrace::FilterThenSearch { initial, .. } => {
                Some(*initial)
            }
            MethodTrace::Filter { .. } => None,
        }
    }

    pub fn search(&self) -> Option<&[TraceEntry]> {
        match self {
            MethodTrace::Search { entries, .. } => Some(entries),
            MethodTrace::FilterThenSearch { search, .. } => Some(search),
            MethodTrace::Filter { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub method: Method,
    pub delta_hat: DeviationVector,
    /// Test-split accuracy of the nominal table.
    pub before: MetricsReport,
    /// Test-split accuracy of the calibrated table.
    pub after: MetricsReport,
    /// Mean squared residual on the train split at `delta_hat` (mm²).
    pub train_objective: f64,
    pub trace: MethodTrace,
    /// Elapsed time; the only field that varies between identical runs.
    pub wall_ms: f64,
}

/// Maps `u ∈ [−1, 1]` per dimension onto `[lo, hi]`.
struct BoxMap {
    mid: Vec<f64>,
    half: Vec<f64>,
}

impl BoxMap {
    fn new(bounds: &[(f64, f64)]) -> Self {
        Self {
            mid: bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect(),
            half: bounds.iter().map(|(lo, hi)| 0.5 * (hi - lo)).collect(),
        }
    }

    fn to_delta(&self, u: &[f64]) -> DeviationVector {
        let mut d = DeviationVector::zeros();
        for i in 0..NUM_PARAMS {
            d[i] = self.mid[i] + self.half[i] * u[i];
        }
        d
    }

    fn to_unit(&self, delta: &DeviationVector) -> Vec<f64> {
        (0..NUM_PARAMS)
            .map(|i| ((delta[i] - self.mid[i]) / self.half[i]).clamp(-1.0, 1.0))
            .collect()
    }
}

fn search(
    nominal: &DhTable,
    train: &Dataset,
    bounds: &[(f64, f64)],
    init: &DeviationVector,
    settings: &SearchSettings,
    variant: Variant,
    seed: u64,
) -> Result<(DeviationVector, Vec<TraceEntry>, StopReason)> {
    let map = BoxMap::new(bounds);
    let f = |u: &[f64]| objective(nominal, &map.to_delta(u), train).unwrap_or(f64::NAN);
    let out = optimize(
        f,
        &settings.beetle_config(seed),
        variant,
        &map.to_unit(init),
    )?;
    Ok((map.to_delta(&out.best_position), out.trace, out.stop))
}

/// EKF-QIBAS search box: the filter estimate ± `box_sigmas` posterior
/// standard deviations, intersected with the global bounds.
fn posterior_box(
    estimate: &DeviationVector,
    covariance: &Covariance,
    settings: &SearchSettings,
) -> Vec<(f64, f64)> {
    settings
        .global_bounds()
        .into_iter()
        .enumerate()
        .map(|(i, (glo, ghi))| {
            let min_half = 1e-9 * (ghi - glo);
            let half = (settings.box_sigmas * covariance[(i, i)].max(0.0).sqrt()).max(min_half);
            let c = estimate[i].clamp(glo, ghi);
            let lo = (c - half).max(glo);
            let hi = (c + half).min(ghi);
            if hi - lo < min_half {
                // Estimate pinned at a global bound.
                if c >= ghi {
                    (ghi - min_half, ghi)
                } else {
                    (glo, glo + min_half)
                }
            } else {
                (lo, hi)
            }
        })
        .collect()
}

/// Identifies the deviation on the train split and scores it on the test
/// split.
pub fn calibrate(
    method: Method,
    nominal: &DhTable,
    data: &Dataset,
    cfg: &CalibrationConfig,
    seed: u64,
) -> Result<CalibrationResult> {
    let ctx = |e: Error| e.context(format!("{method} calibration"));
    let [split_seed, search_seed] = derive_seeds(seed);
    let (train, test) = split_dataset(data, cfg.train_fraction.0, split_seed).map_err(ctx)?;
    let started = Instant::now();
    let (delta_hat, trace) = identify(method, nominal, &train, cfg, search_seed).map_err(ctx)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(CalibrationResult {
        method,
        delta_hat,
        before: metrics(&residuals(nominal, &DeviationVector::zeros(), &test)?)?,
        after: metrics(&residuals(nominal, &delta_hat, &test)?)?,
        train_objective: objective(nominal, &delta_hat, &train)?,
        trace,
        wall_ms,
    })
}

fn identify(
    method: Method,
    nominal: &DhTable,
    train: &Dataset,
    cfg: &CalibrationConfig,
    seed: u64,
) -> Result<(DeviationVector, MethodTrace)> {
    let s = &cfg.search;
    match method {
        Method::Ekf => {
            let run = run_ekf_passes(nominal, train, &cfg.ekf.to_config()?)?;
            Ok((run.estimate, MethodTrace::Filter { entries: run.trace }))
        }
        Method::Bas | Method::Qibas => {
            let variant = if method == Method::Bas {
                Variant::Bas
            } else {
                Variant::Qibas
            };
            let zero = DeviationVector::zeros();
            let (delta, entries, stop) =
                search(nominal, train, &s.global_bounds(), &zero, s, variant, seed)?;
            let initial = objective(nominal, &zero, train)?;
            Ok((
                delta,
                MethodTrace::Search {
                    initial,
                    entries,
                    stop,
                },
            ))
        }
        Method::EkfQibas => {
            let run = run_ekf_passes(nominal, train, &cfg.ekf.to_config()?)?;
            let bounds = posterior_box(&run.estimate, &run.covariance, s);
            let (refined, search_trace, stop) = search(
                nominal,
                train,
                &bounds,
                &run.estimate,
                s,
                Variant::Qibas,
                seed,
            )?;
            // The filter estimate may sit outside the search box; keep
            // whichever point fits the train split better.
            let initial = objective(nominal, &run.estimate, train)?;
            let delta = if objective(nominal, &refined, train)? <= initial {
                refined
            } else {
                run.estimate
            };
            Ok((
                delta,
                MethodTrace::FilterThenSearch {
                    filter: run.trace,
                    initial,
                    search: search_trace,
                    stop,
                },
            ))
        }
    }
}

/// Median and interquartile range of one metric across trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            median: quantile(&v, 0.5),
            q1: quantile(&v, 0.25),
            q3: quantile(&v, 0.75),
        }
    }
}

/// Linear-interpolated quantile of sorted, nonempty data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if sorted[lo] == sorted[hi] {
        // Also covers runs of infinities, where interpolation gives NaN.
        return sorted[lo];
    }
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// "Before" or the method label.
    pub label: String,
    pub method: Option<Method>,
    pub rmse: Spread,
    pub std: Spread,
    pub max: Spread,
}

impl SummaryRow {
    fn of(label: &str, method: Option<Method>, reports: &[MetricsReport]) -> Self {
        let col =
            |f: fn(&MetricsReport) -> f64| Spread::of(&reports.iter().map(f).collect::<Vec<_>>());
        Self {
            label: label.to_string(),
            method,
            rmse: col(|r| r.rmse),
            std: col(|r| r.std),
            max: col(|r| r.max),
        }
    }
}

/// One simulated campaign calibrated by every compared method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub id: usize,
    pub data_seed: u64,
    pub calibration_seed: u64,
    pub before: MetricsReport,
    pub results: Vec<CalibrationResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub methods: Vec<Method>,
    pub trials: Vec<Trial>,
    /// "Before" first, then one row per method in the requested order.
    pub summary: Vec<SummaryRow>,
}

impl Comparison {
    /// Results of `method` across trials, in trial order.
    pub fn results(&self, method: Method) -> Vec<&CalibrationResult> {
        self.trials
            .iter()
            .flat_map(|t| t.results.iter().filter(move |r| r.method == method))
            .collect()
    }

    pub fn row(&self, method: Method) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.method == Some(method))
    }

    /// Fixed-width table of medians with the RMSE interquartile range.
    pub fn table(&self) -> String {
        let mut out = format!(
            "Calibration error on held-out samples, median over {} trial(s)\n",
            self.trials.len()
        );
        out += &format!(
            "{:<14} {:>14} {:>14} {:>14} {:>31}\n",
            "Model", "RMSE (mm)", "Std (mm)", "Max (mm)", "RMSE IQR (mm)"
        );
        for row in &self.summary {
            out += &format!(
                "{:<14} {:>14} {:>14} {:>14} {:>31}\n",
                row.label,
                sig9(row.rmse.median),
                sig9(row.std.median),
                sig9(row.max.median),
                format!("[{}, {}]", sig9(row.rmse.q1), sig9(row.rmse.q3)),
            );
        }
        out
    }
}

/// Runs `trials` independent campaigns. Within a trial every method sees the
/// same data and the same calibration seed, so methods are compared pairwise.
pub fn compare(
    methods: &[Method],
    nominal: &DhTable,
    p0: &Vector3<f64>,
    scenario: &Scenario,
    trials: usize,
    seed: u64,
    cfg: &CalibrationConfig,
) -> Result<Comparison> {
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    if methods.is_empty() {
        return Err(Error::invalid("need at least one method"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<(u64, u64)> = (0..trials).map(|_| (rng.random(), rng.random())).collect();

    let mut outcomes: Vec<Trial> = seeds
        .into_par_iter()
        .enumerate()
        .map(|(id, (data_seed, calibration_seed))| -> Result<Trial> {
            let sim = scenario
                .generate(nominal, p0, data_seed)
                .map_err(|e| e.context(format!("trial {id}")))?;
            let results = methods
                .iter()
                .map(|&m| calibrate(m, nominal, &sim.dataset, cfg, calibration_seed))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.context(format!("trial {id}")))?;
            Ok(Trial {
                id,
                data_seed,
                calibration_seed,
                before: results[0].before,
                results,
            })
        })
        .collect::<Result<_>>()?;
    outcomes.sort_by_key(|t| t.id);

    let befores: Vec<MetricsReport> = outcomes.iter().map(|t| t.before).collect();
    let mut summary = vec![SummaryRow::of("Before", None, &befores)];
    for (k, &m) in methods.iter().enumerate() {
        let afters: Vec<MetricsReport> = outcomes.iter().map(|t| t.results[k].after).collect();
        summary.push(SummaryRow::of(m.label(), Some(m), &afters));
    }
    Ok(Comparison {
        methods: methods.to_vec(),
        trials: outcomes,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::irb120;
    use crate::sim::NoiseKind;

    fn scenario(noise: NoiseKind) -> Scenario {
        Scenario {
            noise,
            ..Default::default()
        }
    }

    /// Settings for noise-free data: a near-exact sensor, no process noise
    /// and repeated frozen-linearization sweeps.
    pub(crate) fn exact_config() -> CalibrationConfig {
        CalibrationConfig {
            ekf: EkfSettings {
                measurement_sigma: 1e-5,
                process_noise: 0.0,
                relinearize: false,
                passes: 8,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn metrics_examples() {
        let m = metrics(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!((m.rmse, m.std, m.max, m.n), (1.0, 1.0, 1.0, 4));
        let m = metrics(&[0.0, 2.0]).unwrap();
        assert_eq!(m.rmse, 2f64.sqrt());
        assert_eq!((m.std, m.max), (1.0, 2.0));
        let m = metrics(&[-3.0, 1.0]).unwrap();
        assert_eq!((m.std, m.max), (2.0, 3.0));
        assert!(metrics(&[]).is_err());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let r = irb120();
        let data = Scenario::default()
            .generate(&r.table, &r.p0, 1)
            .unwrap()
            .dataset;
        let (train, test) = split_dataset(&data, 0.8, 3).unwrap();
        assert_eq!((train.len(), test.len()), (96, 24));
        let (train2, test2) = split_dataset(&data, 0.8, 3).unwrap();
        assert_eq!((&train, &test), (&train2, &test2));
        let (train3, _) = split_dataset(&data, 0.8, 4).unwrap();
        assert_ne!(train, train3);

        let mut all: Vec<_> = train
            .samples()
            .iter()
            .chain(test.samples())
            .map(|s| s.y)
            .collect();
        let mut orig: Vec<_> = data.samples().iter().map(|s| s.y).collect();
        all.sort_by(f64::total_cmp);
        orig.sort_by(f64::total_cmp);
        assert_eq!(all, orig);

        let (_, test) = split_dataset(&data, 119.5 / 120.0, 3).unwrap();
        assert_eq!(test.len(), 1);
        assert!(split_dataset(&data, 1.0, 3).is_err());
        assert!(split_dataset(&data, 0.0, 3).is_err());
        let one = Dataset::new(vec![data.samples()[0]], r.p0).unwrap();
        assert!(split_dataset(&one, 0.5, 3).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("EKF-QIBAS".parse::<Method>().unwrap(), Method::EkfQibas);
        assert!("lm".parse::<Method>().is_err());
    }

    #[test]
    fn zero_deviation_noise_free_stays_exact() {
        let r = irb120();
        let sc = Scenario {
            noise: NoiseKind::None,
            max_a: 1e-300,
            max_d: 1e-300,
            max_alpha: 1e-300,
            max_theta: 1e-300,
            ..Default::default()
        };
        let data = sc.generate(&r.table, &r.p0, 2).unwrap().dataset;
        for m in Method::ALL {
            let mut cfg = CalibrationConfig::default();
            cfg.search.max_iters = 50;
            let res = calibrate(m, &r.table, &data, &cfg, 1).unwrap();
            assert!(res.before.rmse <= 1e-9, "{m}: {:?}", res.before);
            assert!(res.after.rmse <= 1e-6, "{m}: {:?}", res.after);
        }
    }

    #[test]
    fn ekf_qibas_noise_free_recovery() {
        let r = irb120();
        let data = scenario(NoiseKind::None)
            .generate(&r.table, &r.p0, 11)
            .unwrap()
            .dataset;
        let res = calibrate(Method::EkfQibas, &r.table, &data, &exact_config(), 5).unwrap();
        assert!(res.after.rmse <= 1e-6, "{:?}", res.after);
        assert_eq!(res.after.n, 24);
    }

    #[test]
    fn ekf_qibas_never_worse_than_ekf_on_train() {
        let r = irb120();
        let cfg = CalibrationConfig::default();
        for seed in 0..3 {
            let data = Scenario::default()
                .generate(&r.table, &r.p0, seed)
                .unwrap()
                .dataset;
            let ekf = calibrate(Method::Ekf, &r.table, &data, &cfg, seed).unwrap();
            let both = calibrate(Method::EkfQibas, &r.table, &data, &cfg, seed).unwrap();
            assert!(both.train_objective <= ekf.train_objective);
            assert_eq!(ekf.before, both.before);
        }
    }

    #[test]
    fn calibrate_is_deterministic() {
        let r = irb120();
        let data = Scenario::default()
            .generate(&r.table, &r.p0, 4)
            .unwrap()
            .dataset;
        let mut cfg = CalibrationConfig::default();
        cfg.search.max_iters = 200;
        for m in Method::ALL {
            let mut a = calibrate(m, &r.table, &data, &cfg, 9).unwrap();
            let mut b = calibrate(m, &r.table, &data, &cfg, 9).unwrap();
            a.wall_ms = 0.0;
            b.wall_ms = 0.0;
            strip_wall(&mut a.trace);
            strip_wall(&mut b.trace);
            assert_eq!(a, b, "{m}");
        }
    }

    pub(crate) fn strip_wall(trace: &mut MethodTrace) {
        match trace {
            MethodTrace::Search { entries, .. }
            | MethodTrace::FilterThenSearch {
                search: entries, ..
            } => entries.iter_mut().for_each(|e| e.wall_ms = 0.0),
            MethodTrace::Filter { .. } => {}
        }
    }

    #[test]
    fn single_trial_single_method_table() {
        let r = irb120();
        let mut cfg = CalibrationConfig::default();
        cfg.search.max_iters = 100;
        let cmp = compare(
            &[Method::Bas],
            &r.table,
            &r.p0,
            &Scenario::default(),
            1,
            3,
            &cfg,
        )
        .unwrap();
        assert_eq!(cmp.trials.len(), 1);
        assert_eq!(cmp.summary.len(), 2);
        let row = cmp.row(Method::Bas).unwrap();
        assert_eq!(row.rmse.median, cmp.trials[0].results[0].after.rmse);
        let table = cmp.table();
        assert!(table.contains("Before") && table.contains("M2 BAS"));
        assert_eq!(table.lines().count(), 4);
        assert!(compare(
            &[Method::Bas],
            &r.table,
            &r.p0,
            &Scenario::default(),
            0,
            3,
            &cfg
        )
        .is_err());
    }

    #[test]
    fn spread_quantiles() {
        let s = Spread::of(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!((s.median, s.q1, s.q3), (2.5, 1.75, 3.25));
        let s = Spread::of(&[1.0, f64::INFINITY, f64::INFINITY]);
        assert_eq!((s.median, s.q3), (f64::INFINITY, f64::INFINITY));
        let s = Spread::of(&[7.0]);
        assert_eq!((s.median, s.q1, s.q3), (7.0, 7.0, 7.0));
    }

    #[test]
    fn config_toml_accepts_partial_tables() {
        let cfg: CalibrationConfig =
            toml::from_str("train_fraction = 0.75\n[ekf]\npasses = 3\n").unwrap();
        assert_eq!(cfg.train_fraction.0, 0.75);
        assert_eq!(cfg.ekf.passes, 3);
        assert_eq!(cfg.search, SearchSettings::default());
        assert!(toml::from_str::<CalibrationConfig>("[ekf]\nbogus = 1\n").is_err());
    }
}
