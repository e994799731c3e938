//! Exhaustive reference solver: checks the complement of every candidate
//! attack support, smallest first.

use nalgebra::DVector;

use crate::combinatorics::{binomial_prefix_sum, check_cap, complement, subsets_by_size};
use crate::error::{Error, Result};
use crate::linmodel::{ObservabilityStack, StackedWindow};
use crate::theory::TheorySolver;

/// Largest subset count the oracle will enumerate.
pub const ORACLE_CAP: u128 = 100_000;

#[derive(Debug, Clone)]
pub struct FeasibleSupport {
    pub support: Vec<usize>,
    pub x: DVector<f64>,
    pub residual_sq: f64,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Every support of size at most `s_bar` whose complement passes the check,
    /// by ascending size then lexicographically.
    pub supports: Vec<FeasibleSupport>,
    pub checked: u64,
}

impl OracleResult {
    /// Feasible supports of minimum cardinality.
    pub fn minimal(&self) -> Vec<&FeasibleSupport> {
        match self.supports.first() {
            None => Vec::new(),
            Some(first) => {
                let k = first.support.len();
                self.supports
                    .iter()
                    .take_while(|s| s.support.len() == k)
                    .collect()
            }
        }
    }

    pub fn is_feasible(&self) -> bool {
        !self.supports.is_empty()
    }

    pub fn unique_minimal(&self) -> Option<&FeasibleSupport> {
        match self.minimal().as_slice() {
            [only] => Some(only),
            _ => None,
        }
    }

    pub fn contains(&self, support: &[usize]) -> bool {
        self.supports.iter().any(|s| s.support == support)
    }
}

pub fn brute_force(
    stack: &ObservabilityStack,
    window: &StackedWindow,
    noise_bounds: &[f64],
    s_bar: usize,
    epsilon: f64,
) -> Result<OracleResult> {
    brute_force_capped(stack, window, noise_bounds, s_bar, epsilon, ORACLE_CAP)
}

pub fn brute_force_capped(
    stack: &ObservabilityStack,
    window: &StackedWindow,
    noise_bounds: &[f64],
    s_bar: usize,
    epsilon: f64,
    cap: u128,
) -> Result<OracleResult> {
    let p = stack.p();
    if s_bar > p {
        return Err(Error::InvalidArgument(format!(
            "s_bar = {s_bar} exceeds p = {p}"
        )));
    }
    check_cap(binomial_prefix_sum(p, s_bar), cap)?;
    let theory = TheorySolver::new(stack, window, noise_bounds, epsilon)?;
    let mut supports = Vec::new();
    let mut checked = 0;
    for support in subsets_by_size(p, 0..=s_bar) {
        let honest = complement(p, &support);
        checked += 1;
        if honest.is_empty() {
            supports.push(FeasibleSupport {
                support,
                x: DVector::zeros(stack.n),
                residual_sq: 0.0,
            });
            continue;
        }
        let check = theory.check(&honest)?;
        if check.is_sat() {
            supports.push(FeasibleSupport {
                support,
                x: check.x,
                residual_sq: check.residual_sq,
            });
        }
    }
    Ok(OracleResult { supports, checked })
}
