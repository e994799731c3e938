//! Iteration-count sweeps over generated instances, one record per
//! (trial, strategy), with geometric-mean aggregates.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacksim::{generate_instance, ObservabilityLevel};
use crate::error::{Error, Result};
use crate::estimator::{
    conflict_iteration_bound, estimate, trivial_iteration_bound, EstimatorConfig, Outcome,
};
use crate::theory::Strategy;

/// Iteration cap applied when a sweep does not set one.
pub const DEFAULT_BENCH_CAP: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<usize> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub n: usize,
    pub p: usize,
    pub s: OneOrMany,
    pub s_bar: usize,
    #[serde(default = "all_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "one")]
    pub trials: usize,
    /// Falls back to the spec-wide default seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub max_iterations: Option<u64>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_level")]
    pub level: ObservabilityLevel,
}

fn all_strategies() -> Vec<Strategy> {
    vec![
        Strategy::Trivial,
        Strategy::Conflict,
        Strategy::ConflictAgree,
    ]
}

fn one() -> usize {
    1
}

fn default_level() -> ObservabilityLevel {
    ObservabilityLevel::TwoSBar
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    #[serde(default)]
    pub sweeps: Vec<Sweep>,
    #[serde(default)]
    pub default_seed: u64,
}

impl BenchSpec {
    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub sweep: usize,
    pub trial: usize,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub s_bar: usize,
    pub strategy: Strategy,
    pub seed: u64,
    pub iterations: u64,
    /// The run hit the iteration cap; `iterations` is then a lower bound.
    pub capped: bool,
    pub feasible: bool,
    /// Returned support contains the true one.
    pub support_ok: bool,
    pub wall_time: f64,
    /// `||x - x*|| / ||x*||` at the window start.
    pub estimation_error: f64,
    /// Noiseless worst case for the strategy, saturated at `u128::MAX`.
    pub theoretical_bound: u128,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub sweep: usize,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub s_bar: usize,
    pub strategy: Strategy,
    pub trials: usize,
    pub geo_mean_iterations: f64,
    pub max_iterations: u64,
    pub capped: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BenchReport {
    pub trials: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl BenchReport {
    /// Aggregate for one point, if it was run.
    pub fn aggregate(&self, sweep: usize, s: usize, strategy: Strategy) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.sweep == sweep && a.s == s && a.strategy == strategy)
    }

    /// Noiseless runs whose iteration count exceeds the strategy's bound.
    pub fn bound_violations(&self) -> Vec<&TrialRecord> {
        self.trials
            .iter()
            .filter(|t| t.error.is_none() && t.iterations as u128 > t.theoretical_bound)
            .collect()
    }
}

pub fn geometric_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

/// Worst-case noiseless iterations. The agree certificate only ever shortens a
/// conflict run, so it shares the conflict bound.
pub fn theoretical_bound(strategy: Strategy, p: usize, s_bar: usize) -> u128 {
    match strategy {
        Strategy::Trivial => trivial_iteration_bound(p, s_bar),
        Strategy::Conflict | Strategy::ConflictAgree => conflict_iteration_bound(p, s_bar),
    }
}

/// Seed of one generated instance; every strategy in a trial sees the same instance.
pub fn trial_seed(base: u64, s: usize, trial: usize) -> u64 {
    base.wrapping_mul(1_000_003)
        .wrapping_add((s as u64) << 32)
        .wrapping_add(trial as u64)
}

struct Job {
    default_seed: u64,
    sweep: usize,
    s: usize,
    trial: usize,
}

fn validate(spec: &BenchSpec) -> Result<()> {
    for (i, sw) in spec.sweeps.iter().enumerate() {
        if sw.strategies.is_empty() {
            return Err(Error::InvalidArgument(format!("sweep {i}: no strategies")));
        }
        for s in sw.s.values() {
            if s > sw.s_bar || sw.s_bar > sw.p {
                return Err(Error::InvalidArgument(format!(
                    "sweep {i}: need s <= s_bar <= p, got s = {s}, s_bar = {}, p = {}",
                    sw.s_bar, sw.p
                )));
            }
        }
        if !(sw.epsilon.is_finite() && sw.epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sweep {i}: epsilon must be finite and >= 0"
            )));
        }
    }
    Ok(())
}

/// Run every trial of `spec` on `jobs` worker threads. Records come back sorted
/// by (sweep, s, trial, strategy order in the sweep) whatever the scheduling.
pub fn run_bench(spec: &BenchSpec, jobs: usize) -> Result<BenchReport> {
    validate(spec)?;
    let mut work = Vec::new();
    for (sweep, sw) in spec.sweeps.iter().enumerate() {
        for s in sw.s.values() {
            for trial in 0..sw.trials {
                work.push(Job {
                    default_seed: spec.default_seed,
                    sweep,
                    s,
                    trial,
                });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let mut trials: Vec<TrialRecord> = pool.install(|| {
        work.par_iter()
            .flat_map_iter(|job| run_trial(&spec.sweeps[job.sweep], job))
            .collect()
    });
    trials.sort_by_key(|t| {
        let order = spec.sweeps[t.sweep]
            .strategies
            .iter()
            .position(|&s| s == t.strategy);
        (t.sweep, t.s, t.trial, order)
    });
    let aggregates = aggregate(spec, &trials);
    Ok(BenchReport { trials, aggregates })
}

fn run_trial(sw: &Sweep, job: &Job) -> Vec<TrialRecord> {
    let seed = trial_seed(sw.seed.unwrap_or(job.default_seed), job.s, job.trial);
    let base = |strategy| TrialRecord {
        sweep: job.sweep,
        trial: job.trial,
        n: sw.n,
        p: sw.p,
        s: job.s,
        s_bar: sw.s_bar,
        strategy,
        seed,
        iterations: 0,
        capped: false,
        feasible: false,
        support_ok: false,
        wall_time: 0.0,
        estimation_error: f64::NAN,
        theoretical_bound: theoretical_bound(strategy, sw.p, sw.s_bar),
        error: None,
    };
    let inst = match generate_instance(sw.n, sw.p, job.s, sw.s_bar, sw.level, Vec::new(), seed) {
        Ok(g) => g,
        Err(e) => {
            return sw
                .strategies
                .iter()
                .map(|&st| TrialRecord {
                    error: Some(e.to_string()),
                    ..base(st)
                })
                .collect();
        }
    };
    let cap = sw.max_iterations.unwrap_or(DEFAULT_BENCH_CAP);
    let mut truth = inst.attacked.clone();
    truth.sort_unstable();
    sw.strategies
        .iter()
        .map(|&strategy| {
            let config = EstimatorConfig {
                epsilon: sw.epsilon,
                max_iterations: Some(cap),
                // p > 3 s_bar still needs the stronger observability for the agree certificate
                agree_sound: Some(sw.level == ObservabilityLevel::ThreeSBar),
                ..EstimatorConfig::with_strategy(strategy)
            };
            let started = Instant::now();
            let result = estimate(&inst.model, &inst.stack, &inst.window, &config);
            let mut rec = TrialRecord {
                wall_time: started.elapsed().as_secs_f64(),
                ..base(strategy)
            };
            match result {
                Ok(Outcome::Feasible(e)) => {
                    rec.iterations = e.iterations;
                    rec.feasible = true;
                    let supp = e.support();
                    rec.support_ok = truth.iter().all(|i| supp.contains(i));
                    let scale = inst.x0.norm().max(f64::MIN_POSITIVE);
                    rec.estimation_error = (&e.x - &inst.x0).norm() / scale;
                }
                Ok(Outcome::Infeasible(r)) => rec.iterations = r.iterations,
                Err(Error::IterationCap(c)) => {
                    rec.iterations = c;
                    rec.capped = true;
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            rec
        })
        .collect()
}

fn aggregate(spec: &BenchSpec, trials: &[TrialRecord]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for (sweep, sw) in spec.sweeps.iter().enumerate() {
        for s in sw.s.values() {
            for &strategy in &sw.strategies {
                let rows: Vec<&TrialRecord> = trials
                    .iter()
                    .filter(|t| {
                        t.sweep == sweep && t.s == s && t.strategy == strategy && t.error.is_none()
                    })
                    .collect();
                let its: Vec<f64> = rows.iter().map(|t| t.iterations.max(1) as f64).collect();
                out.push(Aggregate {
                    sweep,
                    n: sw.n,
                    p: sw.p,
                    s,
                    s_bar: sw.s_bar,
                    strategy,
                    trials: rows.len(),
                    geo_mean_iterations: geometric_mean(&its),
                    max_iterations: rows.iter().map(|t| t.iterations).max().unwrap_or(0),
                    capped: rows.iter().filter(|t| t.capped).count(),
                    failures: trials
                        .iter()
                        .filter(|t| {
                            t.sweep == sweep
                                && t.s == s
                                && t.strategy == strategy
                                && t.error.is_some()
                        })
                        .count(),
                });
            }
        }
    }
    out
}
