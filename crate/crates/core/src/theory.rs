//! Convex side of the lazy SMT loop.
//!
//! A hypothesis "the sensors in `I` are honest" is checked by solving the
//! unconstrained least-squares problem over the stacked blocks of `I` and comparing
//! the residual with the aggregated noise bound plus tolerance. On failure the
//! certificate generators turn the failed check into a learned Boolean constraint.

use std::cell::Cell;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::linmodel::{ObservabilityStack, StackedWindow};

/// Relative slack added to every check, scaled by `||Y_I||`, absorbing floating-point
/// round-off so that exactly consistent data is reported SAT in noiseless mode.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Sat,
    Unsat,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub status: CheckStatus,
    pub sensors: Vec<usize>,
    pub x: DVector<f64>,
    /// `||Y_I - O_I x||^2`.
    pub residual_sq: f64,
    /// `(i, ||Y_i - O_i x||^2 / ||O_i||^2)` for each `i` in the checked set.
    pub per_sensor_residuals: Vec<(usize, f64)>,
    /// `O_I` was numerically rank deficient and `x` is the minimum-norm solution.
    pub rank_deficient: bool,
    /// Right-hand side the residual norm was compared against.
    pub bound: f64,
}

impl CheckResult {
    pub fn is_sat(&self) -> bool {
        self.status == CheckStatus::Sat
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CertificateKind {
    /// `sum_{i in S} b_i >= 1`
    AtLeastOneAttacked,
    /// `sum_{i in S} b_i = 0`
    AllUnattacked,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    /// For at-least-one certificates, most suspicious first; the SAT core
    /// tries members in this order.
    pub sensors: Vec<usize>,
}

impl Certificate {
    pub fn at_least_one(sensors: Vec<usize>) -> Self {
        Certificate {
            kind: CertificateKind::AtLeastOneAttacked,
            sensors,
        }
    }

    pub fn all_unattacked(mut sensors: Vec<usize>) -> Self {
        sensors.sort_unstable();
        Certificate {
            kind: CertificateKind::AllUnattacked,
            sensors,
        }
    }

    /// Evaluate against an indicator vector.
    pub fn holds(&self, b: &[bool]) -> bool {
        match self.kind {
            CertificateKind::AtLeastOneAttacked => self.sensors.iter().any(|&i| b[i]),
            CertificateKind::AllUnattacked => self.sensors.iter().all(|&i| !b[i]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Trivial,
    Conflict,
    ConflictAgree,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "trivial" => Ok(Strategy::Trivial),
            "conflict" => Ok(Strategy::Conflict),
            "conflict_agree" | "conflictagree" => Ok(Strategy::ConflictAgree),
            other => Err(Error::InvalidArgument(format!(
                "unknown strategy '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Trivial => "trivial",
            Strategy::Conflict => "conflict",
            Strategy::ConflictAgree => "conflict_agree",
        })
    }
}

/// Certificates learned from one failed check, plus notes on fallbacks taken.
#[derive(Debug, Clone, Default)]
pub struct CertificateOutcome {
    pub certificates: Vec<Certificate>,
    pub notes: Vec<String>,
}

/// Least-squares theory solver bound to one window of data.
#[derive(Debug)]
pub struct TheorySolver<'a> {
    stack: &'a ObservabilityStack,
    window: &'a StackedWindow,
    noise_bounds: &'a [f64],
    epsilon: f64,
    rel_tol: f64,
    checks: Cell<u64>,
}

impl<'a> TheorySolver<'a> {
    pub fn new(
        stack: &'a ObservabilityStack,
        window: &'a StackedWindow,
        noise_bounds: &'a [f64],
        epsilon: f64,
    ) -> Result<Self> {
        if window.p() != stack.p() || noise_bounds.len() != stack.p() {
            return Err(Error::Dimension(format!(
                "stack has {} sensors, window {} and noise bounds {}",
                stack.p(),
                window.p(),
                noise_bounds.len()
            )));
        }
        if window.blocks.iter().any(|b| b.len() != stack.tau) {
            return Err(Error::Dimension(format!(
                "window blocks must have length tau = {}",
                stack.tau
            )));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon = {epsilon} must be finite and >= 0"
            )));
        }
        Ok(TheorySolver {
            stack,
            window,
            noise_bounds,
            epsilon,
            rel_tol: DEFAULT_REL_TOL,
            checks: Cell::new(0),
        })
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn p(&self) -> usize {
        self.stack.p()
    }

    pub fn stack(&self) -> &ObservabilityStack {
        self.stack
    }

    /// Number of least-squares checks run so far.
    pub fn checks_run(&self) -> u64 {
        self.checks.get()
    }

    /// `||Y_i - O_i x||^2 / ||O_i||^2`; a zero block ranks as `+inf`.
    pub fn normalized_residual(&self, i: usize, x: &DVector<f64>) -> f64 {
        let norm = self.stack.block_norms[i];
        if norm == 0.0 {
            return f64::INFINITY;
        }
        let r = &self.window.blocks[i] - &self.stack.blocks[i] * x;
        r.norm_squared() / (norm * norm)
    }

    /// Least-squares consistency check over `sensors`.
    pub fn check(&self, sensors: &[usize]) -> Result<CheckResult> {
        if sensors.is_empty() {
            return Err(Error::EmptySensorSet);
        }
        if let Some(&i) = sensors.iter().find(|&&i| i >= self.p()) {
            return Err(Error::InvalidArgument(format!("sensor {i} out of range")));
        }
        self.checks.set(self.checks.get() + 1);
        let o = self.stack.stacked(sensors);
        let y = self.window.stacked(sensors);
        let ls = linalg::least_squares(&o, &y);
        let residual = &y - &o * &ls.x;
        let residual_sq = residual.norm_squared();
        let psi: f64 = sensors
            .iter()
            .map(|&i| self.noise_bounds[i].powi(2))
            .sum::<f64>()
            .sqrt();
        let bound = psi + self.epsilon + self.rel_tol * y.norm();
        let status = if residual_sq.sqrt() <= bound {
            CheckStatus::Sat
        } else {
            CheckStatus::Unsat
        };
        let per_sensor_residuals = sensors
            .iter()
            .map(|&i| (i, self.normalized_residual(i, &ls.x)))
            .collect();
        Ok(CheckResult {
            status,
            sensors: sensors.to_vec(),
            x: ls.x,
            residual_sq,
            per_sensor_residuals,
            rank_deficient: ls.rank < self.stack.n,
            bound,
        })
    }

    /// Sensors of `check` sorted by ascending normalized residual, ties by index.
    fn ranked(check: &CheckResult) -> Vec<usize> {
        let mut r = check.per_sensor_residuals.clone();
        r.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        r.into_iter().map(|(i, _)| i).collect()
    }

    fn seed_len(&self, s_bar: usize) -> usize {
        self.p().saturating_sub(2 * s_bar)
    }

    fn require_unsat_context(&self, check: &CheckResult, s_bar: usize) -> Result<()> {
        if check.is_sat() {
            return Err(Error::Precondition(
                "certificate requested for a SAT check".into(),
            ));
        }
        if check.sensors.len() <= self.seed_len(s_bar) {
            return Err(Error::Precondition(format!(
                "checked set has {} sensors, need more than p - 2 s_bar = {}",
                check.sensors.len(),
                self.seed_len(s_bar)
            )));
        }
        Ok(())
    }

    /// Seed with the `p - 2 s_bar` lowest-residual sensors, then add remaining sensors one at a
    /// time from the largest residual down until the union fails the check.
    pub fn certificate_conflict(
        &self,
        check: &CheckResult,
        s_bar: usize,
        shrink: bool,
    ) -> Result<Certificate> {
        self.require_unsat_context(check, s_bar)?;
        let ranked = Self::ranked(check);
        let seed_len = self.seed_len(s_bar);
        let (seed, rest) = ranked.split_at(seed_len);

        let mut conflict = None;
        for &cand in rest.iter().rev() {
            let mut trial = seed.to_vec();
            trial.push(cand);
            if !self.check(&trial)?.is_sat() {
                conflict = Some(trial);
                break;
            }
        }
        let conflict = conflict.ok_or(Error::NoConflictFound {
            candidates: rest.len(),
        })?;
        let by_residual = |mut set: Vec<usize>| {
            set.sort_by_key(|i| std::cmp::Reverse(ranked.iter().position(|r| r == i)));
            Certificate::at_least_one(set)
        };
        if !shrink {
            return Ok(by_residual(conflict));
        }

        // drop the highest-kernel-dimension members while the set stays inconsistent
        let mut ordered = conflict;
        ordered.sort_by_key(|&i| (self.stack.block_kernel_dims[i], i));
        while ordered.len() > 1 {
            let trial = &ordered[..ordered.len() - 1];
            if self.check(trial)?.is_sat() {
                break;
            }
            ordered.pop();
        }
        Ok(by_residual(ordered))
    }

    /// All-unattacked certificate over the `p - 2 s_bar` lowest-residual sensors, when
    /// those sensors are mutually consistent.
    pub fn certificate_agree(
        &self,
        check: &CheckResult,
        s_bar: usize,
    ) -> Result<Option<Certificate>> {
        self.require_unsat_context(check, s_bar)?;
        let seed_len = self.seed_len(s_bar);
        if seed_len == 0 {
            return Ok(None);
        }
        let seed: Vec<usize> = Self::ranked(check).into_iter().take(seed_len).collect();
        Ok(if self.check(&seed)?.is_sat() {
            Some(Certificate::all_unattacked(seed))
        } else {
            None
        })
    }

    /// Dispatch on `strategy`. The agree certificate is attempted only when `p > 3 s_bar`
    /// and `agree_sound` (the model is known to be `3 s_bar`-sparse observable).
    pub fn certificate(
        &self,
        check: &CheckResult,
        s_bar: usize,
        strategy: Strategy,
        shrink: bool,
        agree_sound: bool,
    ) -> Result<CertificateOutcome> {
        if check.is_sat() {
            return Err(Error::Precondition(
                "certificate requested for a SAT check".into(),
            ));
        }
        let mut out = CertificateOutcome::default();
        let trivial = Certificate::at_least_one(check.sensors.clone());
        if strategy == Strategy::Trivial {
            out.certificates.push(trivial);
            return Ok(out);
        }
        if check.sensors.len() <= self.seed_len(s_bar) {
            out.notes.push(format!(
                "checked set of {} sensors too small for a conflict search; using the trivial certificate",
                check.sensors.len()
            ));
            out.certificates.push(trivial);
            return Ok(out);
        }
        match self.certificate_conflict(check, s_bar, shrink) {
            Ok(cert) => out.certificates.push(cert),
            Err(Error::NoConflictFound { candidates }) => {
                out.notes.push(format!(
                    "conflict walk over {candidates} candidates found no inconsistent subset; using the trivial certificate"
                ));
                out.certificates.push(trivial);
            }
            Err(e) => return Err(e),
        }
        if strategy == Strategy::ConflictAgree && self.p() > 3 * s_bar {
            if agree_sound {
                if let Some(cert) = self.certificate_agree(check, s_bar)? {
                    out.certificates.push(cert);
                }
            } else {
                out.notes.push(
                    "agree certificate skipped: 3*s_bar-sparse observability not verified".into(),
                );
            }
        }
        Ok(out)
    }
}
