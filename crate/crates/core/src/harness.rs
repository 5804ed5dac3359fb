//! Monte-Carlo experiments, complexity reports and threshold sweeps.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexity::{
    characteristic_time_bounds, lower_bound_samples, solve_complexity, ComplexitySolution,
};
use crate::error::{Error, Result};
use crate::model::{optimal_arm, replication_seed, BanditInstance, GaussianEnv, Setting};
use crate::policies::{run_trial, Algorithm, BetaKind, StoppingConfig};

/// Environment variable holding the default number of worker threads.
pub const THREADS_ENV: &str = "TBANDIT_THREADS";

/// Pull budget per run; hitting it is reported as an error rather than a result.
pub const MAX_PULLS: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: BanditInstance,
    pub algorithms: Vec<Algorithm>,
    pub delta: f64,
    #[serde(default)]
    pub beta_kind: BetaKind,
    pub replications: u64,
    pub master_seed: u64,
    /// Worker threads; falls back to `TBANDIT_THREADS`, then to the available cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
    /// Free-form label copied to the summary rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_id: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.parallelism == Some(0) {
            return Err(Error::Config("parallelism must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithm to run".into()));
        }
        for alg in &self.algorithms {
            alg.validate()?;
        }
        let star = optimal_arm(&self.instance).map_err(|e| Error::Config(e.to_string()))?;
        if !star.is_unique() {
            return Err(Error::Config("the instance has several arms equally close to the threshold".into()));
        }
        Ok(())
    }

    fn stopping(&self) -> Result<StoppingConfig> {
        StoppingConfig::new(self.delta, self.beta_kind, self.instance.setting())
    }

    fn threads(&self) -> usize {
        self.parallelism.unwrap_or_else(default_parallelism)
    }
}

/// `TBANDIT_THREADS` if set to a positive integer, else the number of available cores.
pub fn default_parallelism() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub algorithm: String,
    pub replication: u64,
    pub tau: u64,
    pub recommended: usize,
    pub correct: bool,
    pub seed: u64,
}

/// One summary row; field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algorithm: String,
    pub setting: Setting,
    pub problem_id: String,
    pub delta: f64,
    pub replications: u64,
    pub mean_tau: f64,
    pub stderr_tau: f64,
    pub error_rate: f64,
    pub master_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<Summary>,
}

/// Mean, standard error (sample deviation over `sqrt(n)`) and error frequency of
/// one algorithm's records.
pub fn summarize(cfg: &ExperimentConfig, algorithm: &str, records: &[TrialRecord]) -> Summary {
    let n = records.len() as f64;
    let mean = records.iter().map(|r| r.tau as f64).sum::<f64>() / n;
    let var = if records.len() > 1 {
        records.iter().map(|r| (r.tau as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let errors = records.iter().filter(|r| !r.correct).count() as f64;
    Summary {
        algorithm: algorithm.to_string(),
        setting: cfg.instance.setting(),
        problem_id: cfg.problem_id.clone().unwrap_or_default(),
        delta: cfg.delta,
        replications: records.len() as u64,
        mean_tau: mean,
        stderr_tau: (var / n).sqrt(),
        error_rate: errors / n,
        master_seed: cfg.master_seed,
    }
}

/// Runs every configured algorithm on the same reward streams. Records come back in
/// configuration order, then by replication, whatever the number of threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let stopping = cfg.stopping()?;
    let star = optimal_arm(&cfg.instance)?.index;
    let env = GaussianEnv::new(cfg.instance.clone(), cfg.master_seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads())
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for alg in &cfg.algorithms {
        let label = alg.label();
        let batch: Vec<TrialRecord> = pool.install(|| {
            (0..cfg.replications)
                .into_par_iter()
                .map(|rep| {
                    let out = run_trial(&env, rep, alg, &stopping, MAX_PULLS)?;
                    Ok(TrialRecord {
                        algorithm: label.to_string(),
                        replication: rep,
                        tau: out.tau,
                        recommended: out.recommended,
                        correct: out.recommended == star,
                        seed: replication_seed(cfg.master_seed, rep),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        summaries.push(summarize(cfg, label, &batch));
        records.extend(batch);
    }
    Ok(ExperimentResult { records, summaries })
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub const SUMMARY_HEADER: &str =
    "algorithm,setting,problem_id,delta,replications,mean_tau,stderr_tau,error_rate,master_seed";

pub fn summaries_csv(summaries: &[Summary]) -> Result<String> {
    if summaries.is_empty() {
        return Ok(format!("{SUMMARY_HEADER}\n"));
    }
    to_csv(summaries)
}

pub fn records_csv(records: &[TrialRecord]) -> Result<String> {
    if records.is_empty() {
        return Ok("algorithm,replication,tau,recommended,correct,seed\n".into());
    }
    to_csv(records)
}

/// Characteristic time and the quantities derived from it, for JSON output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub mu: Vec<f64>,
    pub threshold: f64,
    pub setting: Setting,
    pub delta: f64,
    pub optimal_arm: usize,
    #[serde(flatten)]
    pub solution: ComplexitySolution,
    /// `T* ln(1/delta)`, the scale of the expected stopping time.
    #[serde(serialize_with = "finite_or_null")]
    pub t_star_log_inv_delta: f64,
    /// `T* kl(delta, 1 - delta)`, below which no `delta`-correct algorithm can stop on
    /// average.
    #[serde(serialize_with = "finite_or_null")]
    pub lower_bound: f64,
    /// Gap-based bracket of `T*`, for increasing instances with an interior optimal arm.
    pub time_bounds: Option<(f64, f64)>,
}

fn finite_or_null<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

pub fn complexity_report(instance: &BanditInstance, delta: f64) -> Result<ComplexityReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
    }
    let star = optimal_arm(instance)?;
    let solution = solve_complexity(instance);
    // kl(delta, 1 - delta) is symmetric around 1/2
    let lower_bound = lower_bound_samples(instance, delta.min(1.0 - delta))?;
    let time_bounds = match instance.setting() {
        Setting::Increasing if star.is_unique() => characteristic_time_bounds(instance).ok(),
        _ => None,
    };
    Ok(ComplexityReport {
        mu: instance.mu().to_vec(),
        threshold: instance.threshold(),
        setting: instance.setting(),
        delta,
        optimal_arm: star.index,
        t_star_log_inv_delta: solution.t_star * (1.0 / delta).ln(),
        solution,
        lower_bound,
        time_bounds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub threshold: f64,
    pub inverse_time: f64,
    pub weights: Vec<f64>,
}

/// Thresholds `smin, smin + step, ...` up to `smax` (inclusive, up to rounding).
pub fn threshold_grid(smin: f64, smax: f64, step: f64) -> Result<Vec<f64>> {
    if !(smin.is_finite() && smax.is_finite() && step > 0.0 && step.is_finite() && smax >= smin) {
        return Err(Error::Config(format!("invalid grid smin={smin} smax={smax} step={step}")));
    }
    let n = ((smax - smin) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| smin + i as f64 * step).collect())
}

/// `T*^-1` and optimal weights along a grid of thresholds; ties give zero rows.
pub fn curve_sweep(mu: &[f64], setting: Setting, grid: &[f64]) -> Result<Vec<CurveRow>> {
    grid.iter()
        .map(|&s| {
            let instance = BanditInstance::new(mu.to_vec(), s, setting)?;
            let sol = solve_complexity(&instance);
            Ok(CurveRow { threshold: s, inverse_time: sol.f_value, weights: sol.weights.into_vec() })
        })
        .collect()
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let k = rows.first().map_or(0, |r| r.weights.len());
    let mut out = String::from("threshold,inverse_time");
    for a in 0..k {
        out.push_str(&format!(",w{a}"));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{}", r.threshold, r.inverse_time));
        for w in &r.weights {
            out.push_str(&format!(",{w}"));
        }
        out.push('\n');
    }
    out
}

pub fn problem_one(setting: Setting) -> BanditInstance {
    BanditInstance::new(vec![0.5, 1.1, 1.2, 1.3, 1.4, 5.0], 1.0, setting).expect("valid instance")
}

pub fn problem_two(setting: Setting) -> BanditInstance {
    BanditInstance::new(vec![1.0, 2.0, 2.5], 1.55, setting).expect("valid instance")
}

/// Reference Monte-Carlo experiments: both problems, both settings, the four
/// sampling rules, `delta = 0.1` and the practical threshold. APT's `epsilon` is a tenth
/// of the smallest distance to the threshold.
pub fn table1_configs(replications: u64, master_seed: u64, parallelism: Option<usize>) -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for (id, make) in [("1", problem_one as fn(Setting) -> BanditInstance), ("2", problem_two)] {
        for setting in [Setting::NonMonotonic, Setting::Increasing] {
            let instance = make(setting);
            let gap = instance
                .mu()
                .iter()
                .map(|m| (m - instance.threshold()).abs())
                .fold(f64::INFINITY, f64::min);
            out.push(ExperimentConfig {
                algorithms: vec![
                    Algorithm::DirectTracking { cadence: 1 },
                    Algorithm::BestChallenger,
                    Algorithm::Racing,
                    Algorithm::Apt { epsilon: gap / 10.0 },
                ],
                instance,
                delta: 0.1,
                beta_kind: BetaKind::Practical,
                replications,
                master_seed,
                parallelism,
                problem_id: Some(id.to_string()),
            });
        }
    }
    out
}
