//! The lazy SMT loop: the SAT core proposes an attack support, the theory solver
//! checks the complement, and failed checks come back as learned certificates.

use std::time::{Duration, Instant};

use nalgebra::DVector;
use serde::Serialize;

use crate::combinatorics::{binomial, binomial_prefix_sum, DEFAULT_SUBSET_CAP};
use crate::error::{Error, Result};
use crate::linmodel::{
    roll_forward, ObservabilityStack, RobustnessConstants, StackedWindow, SystemModel,
};
use crate::sat::{PbConstraint, SatInstance, SatOutcome, SatStats};
use crate::theory::{Certificate, CheckStatus, Strategy, TheorySolver};

pub const MAX_ITERATIONS_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub strategy: Strategy,
    pub epsilon: f64,
    /// Safety cap on SAT/theory round trips; [`default_max_iterations`] when absent.
    pub max_iterations: Option<u64>,
    pub shrink_conflict: bool,
    /// Whether the model is known to be `3 s_bar`-sparse observable, which the agree
    /// certificate needs. Computed by enumeration (under `observability_cap`) when absent.
    pub agree_sound: Option<bool>,
    pub observability_cap: u128,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            strategy: Strategy::ConflictAgree,
            epsilon: 0.0,
            max_iterations: None,
            shrink_conflict: true,
            agree_sound: None,
            observability_cap: DEFAULT_SUBSET_CAP,
        }
    }
}

impl EstimatorConfig {
    pub fn with_strategy(strategy: Strategy) -> Self {
        EstimatorConfig {
            strategy,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon = {} must be finite and >= 0",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// `10 * max(C(p, p - 2 s_bar + 1), sum_{s <= s_bar} C(p, s))`, capped at 10^7.
pub fn default_max_iterations(p: usize, s_bar: usize) -> u64 {
    let bound = conflict_iteration_bound(p, s_bar)
        .max(trivial_iteration_bound(p, s_bar))
        .saturating_mul(10);
    bound.min(MAX_ITERATIONS_CAP as u128).max(1) as u64
}

/// Worst-case iteration count of the trivial strategy in noiseless mode.
pub fn trivial_iteration_bound(p: usize, s_bar: usize) -> u128 {
    binomial_prefix_sum(p, s_bar)
}

/// Worst-case iteration count of the conflict strategy in noiseless mode. With
/// `s_bar = 0` the seed covers every sensor, no conflict search runs and the
/// trivial bound applies.
pub fn conflict_iteration_bound(p: usize, s_bar: usize) -> u128 {
    if s_bar == 0 {
        return trivial_iteration_bound(p, 0);
    }
    binomial(p, (p + 1).saturating_sub(2 * s_bar))
}

/// Iterations remaining after the first all-unattacked certificate, `sum_{s <= s_bar} C(2 s_bar, s)`.
pub fn agree_iteration_bound(s_bar: usize) -> u128 {
    binomial_prefix_sum(2 * s_bar, s_bar)
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iteration: u64,
    /// Sensors the SAT core proposed as attacked.
    pub proposed_support: Vec<usize>,
    pub status: CheckStatus,
    pub residual_sq: f64,
    pub certificates: Vec<Certificate>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Timings {
    pub sat: Duration,
    pub theory: Duration,
    pub total: Duration,
}

#[derive(Debug, Clone)]
pub struct Estimate {
    /// State at the start of the window.
    pub x: DVector<f64>,
    /// `x` rolled forward to the last sample of the window.
    pub x_current: DVector<f64>,
    pub b: Vec<bool>,
    pub iterations: u64,
    pub trace: Vec<IterationRecord>,
    pub residual_sq: f64,
    /// Budget the winning run used.
    pub s_bar: usize,
    /// Iteration at which the first all-unattacked certificate was learned.
    pub agree_fired_at: Option<u64>,
    pub sat_stats: SatStats,
    pub theory_checks: u64,
    pub timings: Timings,
}

impl Estimate {
    pub fn support(&self) -> Vec<usize> {
        self.b
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn certificates(&self) -> impl Iterator<Item = &Certificate> {
        self.trace.iter().flat_map(|r| r.certificates.iter())
    }
}

#[derive(Debug, Clone)]
pub struct InfeasibleRun {
    pub iterations: u64,
    pub trace: Vec<IterationRecord>,
    pub s_bar: usize,
    pub timings: Timings,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Feasible(Estimate),
    Infeasible(InfeasibleRun),
}

impl Outcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Outcome::Feasible(_))
    }

    pub fn feasible(self) -> Option<Estimate> {
        match self {
            Outcome::Feasible(e) => Some(e),
            Outcome::Infeasible(_) => None,
        }
    }

    pub fn iterations(&self) -> u64 {
        match self {
            Outcome::Feasible(e) => e.iterations,
            Outcome::Infeasible(r) => r.iterations,
        }
    }

    /// JSON run report.
    pub fn report(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Outcome::Feasible(e) => json!({
                "status": "feasible",
                "x": e.x.iter().collect::<Vec<_>>(),
                "x_current": e.x_current.iter().collect::<Vec<_>>(),
                "b": e.b.iter().map(|&v| v as u8).collect::<Vec<_>>(),
                "support": e.support(),
                "s_bar": e.s_bar,
                "iterations": e.iterations,
                "residual_sq": e.residual_sq,
                "agree_fired_at": e.agree_fired_at,
                "theory_checks": e.theory_checks,
                "sat_stats": e.sat_stats,
                "timings_s": timings_json(&e.timings),
                "trace": e.trace,
            }),
            Outcome::Infeasible(r) => json!({
                "status": "infeasible",
                "s_bar": r.s_bar,
                "iterations": r.iterations,
                "timings_s": timings_json(&r.timings),
                "trace": r.trace,
            }),
        }
    }
}

fn timings_json(t: &Timings) -> serde_json::Value {
    serde_json::json!({
        "sat": t.sat.as_secs_f64(),
        "theory": t.theory.as_secs_f64(),
        "total": t.total.as_secs_f64(),
    })
}

fn resolve_agree(stack: &ObservabilityStack, s_bar: usize, config: &EstimatorConfig) -> bool {
    if config.strategy != Strategy::ConflictAgree || stack.p() <= 3 * s_bar {
        return false;
    }
    match config.agree_sound {
        Some(v) => v,
        None => stack
            .is_sparse_observable(3 * s_bar, config.observability_cap)
            .unwrap_or(false),
    }
}

/// Solve for `(x, b)` with `|supp b| <= model.s_bar()` on one window.
pub fn estimate(
    model: &SystemModel,
    stack: &ObservabilityStack,
    window: &StackedWindow,
    config: &EstimatorConfig,
) -> Result<Outcome> {
    config.validate()?;
    let agree = resolve_agree(stack, model.s_bar(), config);
    run(model, stack, window, model.s_bar(), config, agree)
}

fn run(
    model: &SystemModel,
    stack: &ObservabilityStack,
    window: &StackedWindow,
    s_bar: usize,
    config: &EstimatorConfig,
    agree_sound: bool,
) -> Result<Outcome> {
    let started = Instant::now();
    let p = stack.p();
    let theory = TheorySolver::new(stack, window, model.noise_bounds(), config.epsilon)?;
    let mut sat = SatInstance::new(p, s_bar)?;
    let cap = config
        .max_iterations
        .unwrap_or_else(|| default_max_iterations(p, s_bar));
    let mut timings = Timings::default();
    let mut trace = Vec::new();
    let mut agree_fired_at = None;
    let mut iteration = 0u64;

    loop {
        let t0 = Instant::now();
        let proposal = sat.solve();
        timings.sat += t0.elapsed();
        let assignment = match proposal {
            SatOutcome::Sat(a) => a,
            SatOutcome::Unsat => {
                timings.total = started.elapsed();
                return Ok(Outcome::Infeasible(InfeasibleRun {
                    iterations: iteration,
                    trace,
                    s_bar,
                    timings,
                }));
            }
        };
        if iteration >= cap {
            return Err(Error::IterationCap(cap));
        }
        iteration += 1;
        let honest = assignment.unattacked();
        let proposed_support = assignment.support();

        if honest.is_empty() {
            // every sensor is excused; any state explains the data
            trace.push(IterationRecord {
                iteration,
                proposed_support,
                status: CheckStatus::Sat,
                residual_sq: 0.0,
                certificates: Vec::new(),
                notes: vec!["all sensors assumed attacked".into()],
            });
            let x = DVector::zeros(stack.n);
            return finish(
                model,
                window,
                x,
                assignment.b,
                0.0,
                iteration,
                trace,
                s_bar,
                agree_fired_at,
                &sat,
                &theory,
                timings,
                started,
            );
        }

        let t0 = Instant::now();
        let check = theory.check(&honest)?;
        if check.is_sat() {
            timings.theory += t0.elapsed();
            trace.push(IterationRecord {
                iteration,
                proposed_support,
                status: CheckStatus::Sat,
                residual_sq: check.residual_sq,
                certificates: Vec::new(),
                notes: Vec::new(),
            });
            return finish(
                model,
                window,
                check.x,
                assignment.b,
                check.residual_sq,
                iteration,
                trace,
                s_bar,
                agree_fired_at,
                &sat,
                &theory,
                timings,
                started,
            );
        }
        let learned = theory.certificate(
            &check,
            s_bar,
            config.strategy,
            config.shrink_conflict,
            agree_sound,
        )?;
        timings.theory += t0.elapsed();
        for cert in &learned.certificates {
            if cert.kind == crate::theory::CertificateKind::AllUnattacked
                && agree_fired_at.is_none()
            {
                agree_fired_at = Some(iteration);
            }
            sat.add_constraint(PbConstraint::from(cert))?;
        }
        trace.push(IterationRecord {
            iteration,
            proposed_support,
            status: CheckStatus::Unsat,
            residual_sq: check.residual_sq,
            certificates: learned.certificates,
            notes: learned.notes,
        });
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    model: &SystemModel,
    window: &StackedWindow,
    x: DVector<f64>,
    b: Vec<bool>,
    residual_sq: f64,
    iterations: u64,
    trace: Vec<IterationRecord>,
    s_bar: usize,
    agree_fired_at: Option<u64>,
    sat: &SatInstance,
    theory: &TheorySolver,
    mut timings: Timings,
    started: Instant,
) -> Result<Outcome> {
    let tau = model.tau();
    let x_current = roll_forward(model, &x, &window.raw_inputs[..tau - 1])?;
    timings.total = started.elapsed();
    Ok(Outcome::Feasible(Estimate {
        x,
        x_current,
        b,
        iterations,
        trace,
        residual_sq,
        s_bar,
        agree_fired_at,
        sat_stats: sat.stats(),
        theory_checks: theory.checks_run(),
        timings,
    }))
}

/// Smallest attack support explaining the window. Runs the estimator at budget
/// `s_bar`, then again with the budget set one below the support just found,
/// until the SAT core reports infeasible. Each budget gets a fresh SAT instance.
pub fn minimal_support_estimate(
    model: &SystemModel,
    stack: &ObservabilityStack,
    window: &StackedWindow,
    config: &EstimatorConfig,
) -> Result<Outcome> {
    config.validate()?;
    let first = run(
        model,
        stack,
        window,
        model.s_bar(),
        config,
        resolve_agree(stack, model.s_bar(), config),
    )?;
    let mut best = match first {
        Outcome::Feasible(e) => e,
        infeasible => return Ok(infeasible),
    };
    let mut total_iterations = best.iterations;
    while let Some(budget) = best.support().len().checked_sub(1) {
        match run(
            model,
            stack,
            window,
            budget,
            config,
            resolve_agree(stack, budget, config),
        )? {
            Outcome::Feasible(e) => {
                total_iterations += e.iterations;
                best = e;
            }
            Outcome::Infeasible(r) => {
                total_iterations += r.iterations;
                break;
            }
        }
    }
    best.iterations = total_iterations;
    Ok(Outcome::Feasible(best))
}

/// Detection threshold and error guarantees for one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaBound {
    /// Minimum attack power `(2/(1-delta_s)) ||Psi||^2 + eps/(1-delta_s)` guaranteed to be detected.
    pub detection_threshold: f64,
    /// `o_bar ||Psi||^2`, the squared state error when every attack is detected.
    pub detected_delta: f64,
    /// `2 o_bar (1 + 2/(1-delta_s)) ||Psi||^2 + 2 o_bar eps/(1-delta_s)`, the squared state
    /// error bound when attacks go undetected.
    pub undetected_bound: f64,
}

pub fn delta_bound(
    model: &SystemModel,
    constants: &RobustnessConstants,
    epsilon: f64,
) -> Result<DeltaBound> {
    delta_bound_from(model.noise_norm_sq(), constants, epsilon)
}

/// [`delta_bound`] from an explicit `||Psi||^2`.
pub fn delta_bound_from(
    noise_norm_sq: f64,
    constants: &RobustnessConstants,
    epsilon: f64,
) -> Result<DeltaBound> {
    let RobustnessConstants { o_bar, delta_s } = *constants;
    if !(delta_s < 1.0) {
        return Err(Error::Precondition(format!(
            "delta_s = {delta_s} must be below 1"
        )));
    }
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon = {epsilon} must be finite and >= 0"
        )));
    }
    let gap = 1.0 - delta_s;
    Ok(DeltaBound {
        detection_threshold: 2.0 / gap * noise_norm_sq + epsilon / gap,
        detected_delta: o_bar * noise_norm_sq,
        undetected_bound: 2.0 * o_bar * (1.0 + 2.0 / gap) * noise_norm_sq
            + 2.0 * o_bar * epsilon / gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmodel::build_observability;
    use crate::theory::tests::four_lines;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn four_lines_model() -> SystemModel {
        let rows = [[1.0, 1.0], [-1.0, 1.0], [0.0, 1.0], [-2.0, 1.0]];
        let c = DMatrix::from_fn(4, 2, |i, j| rows[i][j]);
        SystemModel::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 0),
            c,
            1,
            1,
            vec![0.0; 4],
        )
        .unwrap()
    }

    #[test]
    fn four_lines_recovers_attacked_sensor() {
        let model = four_lines_model();
        let (stack, window) = four_lines();
        for strategy in [
            Strategy::Trivial,
            Strategy::Conflict,
            Strategy::ConflictAgree,
        ] {
            let cfg = EstimatorConfig {
                agree_sound: Some(true),
                ..EstimatorConfig::with_strategy(strategy)
            };
            let est = estimate(&model, &stack, &window, &cfg)
                .unwrap()
                .feasible()
                .unwrap();
            assert_eq!(est.support(), vec![2], "{strategy}");
            assert_relative_eq!(est.x[0], 2.0, epsilon = 1e-9);
            assert_relative_eq!(est.x[1], 6.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn attack_free_first_iteration() {
        let model = four_lines_model();
        let stack = build_observability(&model).unwrap();
        // all four lines through (2, 6)
        let window = StackedWindow {
            blocks: [8.0, 4.0, 6.0, 2.0]
                .iter()
                .map(|&v| DVector::from_vec(vec![v]))
                .collect(),
            raw_inputs: vec![DVector::zeros(0)],
        };
        let out = estimate(&model, &stack, &window, &EstimatorConfig::default()).unwrap();
        let est = out.feasible().unwrap();
        assert_eq!(est.iterations, 1);
        assert!(est.support().is_empty());
    }

    #[test]
    fn infeasible_when_budget_too_small() {
        let model = four_lines_model().with_s_bar(0).unwrap();
        let (stack, window) = four_lines();
        let out = estimate(&model, &stack, &window, &EstimatorConfig::default()).unwrap();
        assert!(!out.is_feasible());
        assert_eq!(out.report()["status"], "infeasible");
    }

    #[test]
    fn minimal_support_descends() {
        let model = four_lines_model().with_s_bar(2).unwrap();
        let (stack, window) = four_lines();
        let est = minimal_support_estimate(&model, &stack, &window, &EstimatorConfig::default())
            .unwrap()
            .feasible()
            .unwrap();
        assert_eq!(est.support(), vec![2]);
        assert!(est.s_bar >= 1);
    }

    #[test]
    fn delta_bound_toy_values() {
        let c = RobustnessConstants {
            o_bar: 0.5,
            delta_s: 0.5,
        };
        let d = delta_bound_from(0.2, &c, 0.01).unwrap();
        assert_relative_eq!(d.detection_threshold, 0.82, epsilon = 1e-12);
        assert_relative_eq!(d.detected_delta, 0.1, epsilon = 1e-12);
        assert_relative_eq!(d.undetected_bound, 1.02, epsilon = 1e-12);
        let zero = delta_bound_from(0.0, &c, 0.0).unwrap();
        assert_eq!(
            (
                zero.detection_threshold,
                zero.detected_delta,
                zero.undetected_bound
            ),
            (0.0, 0.0, 0.0)
        );
        let doubled = delta_bound_from(0.4, &c, 0.01).unwrap();
        assert_relative_eq!(
            doubled.detected_delta,
            2.0 * d.detected_delta,
            epsilon = 1e-12
        );
        assert!(delta_bound_from(
            0.2,
            &RobustnessConstants {
                o_bar: 0.5,
                delta_s: 1.0
            },
            0.0
        )
        .is_err());
    }

    #[test]
    fn iteration_cap_defaults() {
        assert_eq!(default_max_iterations(4, 1), 50);
        assert_eq!(default_max_iterations(60, 20), MAX_ITERATIONS_CAP);
        assert_eq!(default_max_iterations(5, 0), 10);
        assert_eq!(conflict_iteration_bound(4, 1), 4);
        assert_eq!(trivial_iteration_bound(4, 1), 5);
        assert_eq!(agree_iteration_bound(1), 3);
    }

    #[test]
    fn rejects_negative_epsilon() {
        let model = four_lines_model();
        let (stack, window) = four_lines();
        let cfg = EstimatorConfig {
            epsilon: -1.0,
            ..Default::default()
        };
        assert!(matches!(
            estimate(&model, &stack, &window, &cfg),
            Err(Error::InvalidArgument(_))
        ));
    }
}
