//! Linear plant model, per-sensor observability blocks over a measurement window,
//! and the design-time robustness constants `o_bar` and `delta_s`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::combinatorics::{self, check_cap, count_subsets, Combinations};
use crate::error::{Error, Result};
use crate::linalg;

/// Discrete-time plant `x+ = A x + B u`, `y = C x + a + psi`, together with the
/// estimation window length, the attack budget and per-sensor noise bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct SystemModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    tau: usize,
    s_bar: usize,
    noise_bounds: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawModel {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    tau: usize,
    s_bar: usize,
    noise_bounds: Vec<f64>,
}

fn matrix_from_rows(
    name: &str,
    rows: &[Vec<f64>],
    ncols_hint: Option<usize>,
) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).or(ncols_hint).unwrap_or(0);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::Dimension(format!(
            "{name}: row {i} has {} entries, expected {ncols}",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().cloned().collect())
        .collect()
}

impl TryFrom<RawModel> for SystemModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let a = matrix_from_rows("A", &raw.a, None)?;
        let b = matrix_from_rows("B", &raw.b, Some(0))?;
        let c = matrix_from_rows("C", &raw.c, Some(a.nrows()))?;
        SystemModel::new(a, b, c, raw.tau, raw.s_bar, raw.noise_bounds)
    }
}

impl From<SystemModel> for RawModel {
    fn from(m: SystemModel) -> Self {
        RawModel {
            a: rows_of(&m.a),
            b: rows_of(&m.b),
            c: rows_of(&m.c),
            tau: m.tau,
            s_bar: m.s_bar,
            noise_bounds: m.noise_bounds,
        }
    }
}

impl SystemModel {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        tau: usize,
        s_bar: usize,
        noise_bounds: Vec<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || n == 0 {
            return Err(Error::Dimension(format!(
                "A must be square and non-empty, got {:?}",
                a.shape()
            )));
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!(
                "B has {} rows, expected {n}",
                b.nrows()
            )));
        }
        if c.ncols() != n {
            return Err(Error::Dimension(format!(
                "C has {} columns, expected {n}",
                c.ncols()
            )));
        }
        let p = c.nrows();
        if p == 0 {
            return Err(Error::Dimension("C has no sensor rows".into()));
        }
        if noise_bounds.len() != p {
            return Err(Error::Dimension(format!(
                "noise_bounds has {} entries, expected {p}",
                noise_bounds.len()
            )));
        }
        if let Some(v) = noise_bounds.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidModel(format!(
                "noise bound {v} is not a finite non-negative number"
            )));
        }
        if tau == 0 || tau > n {
            return Err(Error::InvalidModel(format!(
                "tau = {tau} must satisfy 1 <= tau <= n = {n}"
            )));
        }
        if s_bar > p {
            return Err(Error::InvalidModel(format!(
                "s_bar = {s_bar} exceeds p = {p}"
            )));
        }
        if [&a, &b, &c]
            .iter()
            .any(|m| m.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidModel(
                "matrices must contain finite values".into(),
            ));
        }
        Ok(SystemModel {
            a,
            b,
            c,
            tau,
            s_bar,
            noise_bounds,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn tau(&self) -> usize {
        self.tau
    }
    pub fn s_bar(&self) -> usize {
        self.s_bar
    }
    pub fn noise_bounds(&self) -> &[f64] {
        &self.noise_bounds
    }
    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    /// Number of sensors.
    pub fn p(&self) -> usize {
        self.c.nrows()
    }
    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Same plant with a different attack budget.
    pub fn with_s_bar(&self, s_bar: usize) -> Result<Self> {
        SystemModel::new(
            self.a.clone(),
            self.b.clone(),
            self.c.clone(),
            self.tau,
            s_bar,
            self.noise_bounds.clone(),
        )
    }

    pub fn with_noise_bounds(&self, noise_bounds: Vec<f64>) -> Result<Self> {
        SystemModel::new(
            self.a.clone(),
            self.b.clone(),
            self.c.clone(),
            self.tau,
            self.s_bar,
            noise_bounds,
        )
    }

    /// Whether the budget leaves room for a unique reconstruction, `s_bar <= (p - 1) / 2`.
    pub fn budget_admits_uniqueness(&self) -> bool {
        2 * self.s_bar < self.p()
    }

    /// `||Psi||^2 = sum_i noise_bounds[i]^2`.
    pub fn noise_norm_sq(&self) -> f64 {
        self.noise_bounds.iter().map(|v| v * v).sum()
    }

    pub fn noise_norm_sq_over(&self, sensors: &[usize]) -> f64 {
        sensors
            .iter()
            .map(|&i| self.noise_bounds[i] * self.noise_bounds[i])
            .sum()
    }

    /// `A^k` for `k = 0..count`.
    fn powers(&self, count: usize) -> Vec<DMatrix<f64>> {
        let n = self.n();
        let mut out = Vec::with_capacity(count);
        let mut acc = DMatrix::identity(n, n);
        for _ in 0..count {
            out.push(acc.clone());
            acc = &self.a * acc;
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Per-sensor observability blocks `O_i = [C_i; C_i A; ...; C_i A^{tau-1}]`.
#[derive(Debug, Clone)]
pub struct ObservabilityStack {
    pub blocks: Vec<DMatrix<f64>>,
    pub full: DMatrix<f64>,
    pub block_kernel_dims: Vec<usize>,
    /// Spectral norm of each block.
    pub block_norms: Vec<f64>,
    /// `O_i^T O_i` for each block.
    pub grams: Vec<DMatrix<f64>>,
    pub tau: usize,
    pub n: usize,
}

impl ObservabilityStack {
    pub fn p(&self) -> usize {
        self.blocks.len()
    }

    /// Stacked `O_I` over `sensors`, in the given order.
    pub fn stacked(&self, sensors: &[usize]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(sensors.len() * self.tau, self.n);
        for (k, &i) in sensors.iter().enumerate() {
            out.view_mut((k * self.tau, 0), (self.tau, self.n))
                .copy_from(&self.blocks[i]);
        }
        out
    }

    /// `sum_{i in sensors} O_i^T O_i`.
    pub fn gram(&self, sensors: &[usize]) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.n, self.n);
        for &i in sensors {
            g += &self.grams[i];
        }
        g
    }

    pub fn rank_of(&self, sensors: &[usize]) -> usize {
        linalg::numerical_rank(&self.stacked(sensors))
    }

    /// True iff every removal of `s` sensors leaves `O` with rank `n`.
    pub fn is_sparse_observable(&self, s: usize, cap: u128) -> Result<bool> {
        let p = self.p();
        if s > p {
            return Err(Error::InvalidArgument(format!("s = {s} exceeds p = {p}")));
        }
        if s == p {
            return Ok(false);
        }
        // removing s sensors == keeping p - s of them
        check_cap(combinatorics::binomial(p, s), cap)?;
        Ok(Combinations::new(p, p - s).all(|keep| self.rank_of(&keep) == self.n))
    }
}

pub fn build_observability(model: &SystemModel) -> Result<ObservabilityStack> {
    let (n, p, tau) = (model.n(), model.p(), model.tau());
    let powers = model.powers(tau);
    let mut blocks = Vec::with_capacity(p);
    for i in 0..p {
        let ci = model.c().row(i).into_owned();
        let mut blk = DMatrix::zeros(tau, n);
        for (j, apow) in powers.iter().enumerate() {
            blk.set_row(j, &(&ci * apow));
        }
        blocks.push(blk);
    }
    let mut full = DMatrix::zeros(p * tau, n);
    for (i, blk) in blocks.iter().enumerate() {
        full.view_mut((i * tau, 0), (tau, n)).copy_from(blk);
    }
    let block_kernel_dims = blocks
        .iter()
        .map(|b| n - linalg::numerical_rank(b))
        .collect();
    let block_norms = blocks.iter().map(linalg::spectral_norm).collect();
    let grams = blocks.iter().map(|b| b.transpose() * b).collect();
    Ok(ObservabilityStack {
        blocks,
        full,
        block_kernel_dims,
        block_norms,
        grams,
        tau,
        n,
    })
}

/// Input-compensated stacked outputs `Y_i = Ytilde_i - F_i U`, one length-`tau` vector per sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedWindow {
    pub blocks: Vec<DVector<f64>>,
    pub raw_inputs: Vec<DVector<f64>>,
}

impl StackedWindow {
    pub fn p(&self) -> usize {
        self.blocks.len()
    }

    pub fn stacked(&self, sensors: &[usize]) -> DVector<f64> {
        let tau = self.blocks.first().map_or(0, |b| b.len());
        let mut out = DVector::zeros(sensors.len() * tau);
        for (k, &i) in sensors.iter().enumerate() {
            out.rows_mut(k * tau, tau).copy_from(&self.blocks[i]);
        }
        out
    }
}

/// Build the stacked window from `tau` output samples (each of length `p`) and `tau`
/// input samples (each of length `m`), oldest first. The last input does not enter
/// the compensation and only sets the window's record of applied inputs.
pub fn stack_window(
    model: &SystemModel,
    outputs: &[DVector<f64>],
    inputs: &[DVector<f64>],
) -> Result<StackedWindow> {
    let (tau, p, m) = (model.tau(), model.p(), model.m());
    if outputs.len() != tau {
        return Err(Error::SampleCount {
            expected: tau,
            got: outputs.len(),
        });
    }
    if inputs.len() != tau {
        return Err(Error::SampleCount {
            expected: tau,
            got: inputs.len(),
        });
    }
    if let Some(y) = outputs.iter().find(|y| y.len() != p) {
        return Err(Error::Dimension(format!(
            "output sample has length {}, expected {p}",
            y.len()
        )));
    }
    if let Some(u) = inputs.iter().find(|u| u.len() != m) {
        return Err(Error::Dimension(format!(
            "input sample has length {}, expected {m}",
            u.len()
        )));
    }
    // impulse[k] = C A^k B, p x m
    let powers = model.powers(tau.saturating_sub(1));
    let impulse: Vec<DMatrix<f64>> = powers.iter().map(|ak| model.c() * ak * model.b()).collect();
    let mut blocks = vec![DVector::zeros(tau); p];
    for j in 0..tau {
        let mut comp = DVector::zeros(p);
        for (k, u) in inputs.iter().enumerate().take(j) {
            comp += &impulse[j - 1 - k] * u;
        }
        for (i, blk) in blocks.iter_mut().enumerate() {
            blk[j] = outputs[j][i] - comp[i];
        }
    }
    Ok(StackedWindow {
        blocks,
        raw_inputs: inputs.to_vec(),
    })
}

/// Subset-count-limited check of `s`-sparse observability.
pub fn check_sparse_observability(model: &SystemModel, s: usize, cap: u128) -> Result<bool> {
    build_observability(model)?.is_sparse_observable(s, cap)
}

/// `max ||O_I^+||^2` over all `I` with `|I| >= min_card`.
pub fn compute_o_bar(stack: &ObservabilityStack, min_card: usize, cap: u128) -> Result<f64> {
    let p = stack.p();
    let lo = min_card.max(1);
    if lo > p {
        return Err(Error::InvalidArgument(format!(
            "min_card = {min_card} exceeds p = {p}"
        )));
    }
    check_cap(count_subsets(p, lo..=p), cap)?;
    Ok(combinatorics::subsets_by_size(p, lo..=p)
        .map(|set| linalg::pinv_norm_sq(&stack.stacked(&set)))
        .fold(0.0, f64::max))
}

/// Options for the attack-leakage constant.
#[derive(Debug, Clone, Default)]
pub struct DeltaOptions {
    /// Restrict attack subsets to these sensors; all sensors when absent.
    pub attackable: Option<Vec<usize>>,
    /// Use the pseudo-inverse for rank-deficient `sum_{i in I} O_i^T O_i` instead of failing.
    pub allow_singular: bool,
    pub cap: Option<u128>,
}

/// `max lambda_max{ (sum_{Gamma} O_i^T O_i)(sum_{I} O_i^T O_i)^{-1} }` over
/// `Gamma ⊂ I`, `|Gamma| <= s_bar`, `|I| >= p - s_bar`.
pub fn compute_delta_s(stack: &ObservabilityStack, s_bar: usize, cap: u128) -> Result<f64> {
    compute_delta_s_with(
        stack,
        s_bar,
        &DeltaOptions {
            cap: Some(cap),
            ..Default::default()
        },
    )
}

pub fn compute_delta_s_with(
    stack: &ObservabilityStack,
    s_bar: usize,
    opts: &DeltaOptions,
) -> Result<f64> {
    let p = stack.p();
    if s_bar > p {
        return Err(Error::InvalidArgument(format!(
            "s_bar = {s_bar} exceeds p = {p}"
        )));
    }
    let cap = opts.cap.unwrap_or(combinatorics::DEFAULT_SUBSET_CAP);
    let lo = p - s_bar;
    let mut attackable = vec![opts.attackable.is_none(); p];
    if let Some(list) = &opts.attackable {
        for &i in list {
            if i >= p {
                return Err(Error::InvalidArgument(format!(
                    "attackable sensor {i} out of range"
                )));
            }
            attackable[i] = true;
        }
    }

    // (Gamma, I) pair count, for the cap
    let mut pairs: u128 = 0;
    for k in lo.max(1)..=p {
        let per_i = count_subsets(k, 0..=s_bar.min(k.saturating_sub(1)));
        pairs = pairs.saturating_add(combinatorics::binomial(p, k).saturating_mul(per_i));
    }
    check_cap(pairs, cap)?;

    let mut best: f64 = 0.0;
    for set in combinatorics::subsets_by_size(p, lo.max(1)..=p) {
        let members: Vec<usize> = set.iter().cloned().filter(|&i| attackable[i]).collect();
        if members.is_empty() {
            continue;
        }
        let g_i = stack.gram(&set);
        // proper subsets only; the empty Gamma contributes zero
        let max_gamma = s_bar.min(set.len() - 1).min(members.len());
        for k in 1..=max_gamma {
            for pos in Combinations::new(members.len(), k) {
                let gamma = combinatorics::select(&members, &pos);
                let g_gamma = stack.gram(&gamma);
                let lam = linalg::max_generalized_eigenvalue(&g_gamma, &g_i, opts.allow_singular)
                    .map_err(|_| Error::SingularGram {
                    sensors: set.clone(),
                })?;
                best = best.max(lam);
            }
        }
    }
    Ok(best)
}

/// Design-time constants converting noise and tolerance into error and detection bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessConstants {
    pub o_bar: f64,
    pub delta_s: f64,
}

impl RobustnessConstants {
    /// `o_bar` over `|I| >= p - s_bar` and `delta_s` at budget `s_bar`.
    pub fn compute(stack: &ObservabilityStack, s_bar: usize, cap: u128) -> Result<Self> {
        let o_bar = compute_o_bar(stack, stack.p() - s_bar, cap)?;
        let delta_s = compute_delta_s(stack, s_bar, cap)?;
        Ok(RobustnessConstants { o_bar, delta_s })
    }
}

/// `x(t) = A^{tau-1} x_delayed + sum_k A^{tau-2-k} B u_k` over the `tau - 1` most recent inputs.
pub fn roll_forward(
    model: &SystemModel,
    x_delayed: &DVector<f64>,
    inputs: &[DVector<f64>],
) -> Result<DVector<f64>> {
    let steps = model.tau() - 1;
    if inputs.len() != steps {
        return Err(Error::SampleCount {
            expected: steps,
            got: inputs.len(),
        });
    }
    if x_delayed.len() != model.n() {
        return Err(Error::Dimension(format!(
            "state has length {}, expected {}",
            x_delayed.len(),
            model.n()
        )));
    }
    let mut x = x_delayed.clone();
    for u in inputs {
        if u.len() != model.m() {
            return Err(Error::Dimension(format!(
                "input has length {}, expected {}",
                u.len(),
                model.m()
            )));
        }
        x = model.a() * x + model.b() * u;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_sensors(p: usize) -> SystemModel {
        SystemModel::new(
            DMatrix::identity(1, 1),
            DMatrix::zeros(1, 0),
            DMatrix::from_element(p, 1, 1.0),
            1,
            1,
            vec![0.0; p],
        )
        .unwrap()
    }

    #[test]
    fn identity_dynamics_repeat_rows() {
        let model = SystemModel::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 1),
            DMatrix::identity(2, 2),
            2,
            0,
            vec![0.0, 0.0],
        )
        .unwrap();
        let stack = build_observability(&model).unwrap();
        assert_eq!(
            stack.blocks[0],
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0])
        );
        assert_eq!(
            stack.blocks[1],
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0])
        );
        assert_eq!(stack.block_kernel_dims, vec![1, 1]);
        assert_eq!(stack.full.shape(), (4, 2));
    }

    #[test]
    fn zero_sensor_row_sees_nothing() {
        let a = DMatrix::from_row_slice(3, 3, &[0.5, 0.1, 0.0, 0.2, 0.3, 0.7, -0.4, 0.0, 0.9]);
        let c = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let model = SystemModel::new(a, DMatrix::zeros(3, 1), c, 3, 0, vec![0.0; 2]).unwrap();
        let stack = build_observability(&model).unwrap();
        assert_eq!(stack.block_kernel_dims[1], 3);
        assert_eq!(stack.block_norms[1], 0.0);
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        let bad = SystemModel::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(3, 1),
            DMatrix::identity(2, 2),
            1,
            0,
            vec![0.0; 2],
        );
        assert!(matches!(bad, Err(Error::Dimension(_))));
        let bad_tau = SystemModel::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 1),
            DMatrix::identity(2, 2),
            3,
            0,
            vec![0.0; 2],
        );
        assert!(matches!(bad_tau, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn full_removal_is_never_observable() {
        let model = scalar_sensors(3);
        assert!(!check_sparse_observability(&model, 3, 1000).unwrap());
        assert!(check_sparse_observability(&model, 2, 1000).unwrap());
    }

    #[test]
    fn sparse_observability_cap_is_distinct_error() {
        let model = scalar_sensors(30);
        let err = check_sparse_observability(&model, 15, 1000).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
    }

    #[test]
    fn o_bar_of_scalar_sensors() {
        let stack = build_observability(&scalar_sensors(4)).unwrap();
        assert_relative_eq!(
            compute_o_bar(&stack, 2, 1000).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            compute_o_bar(&stack, 1, 1000).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn delta_s_of_scalar_sensors() {
        let stack = build_observability(&scalar_sensors(3)).unwrap();
        assert_relative_eq!(
            compute_delta_s(&stack, 1, 1000).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        // empty Gamma only
        assert_eq!(compute_delta_s(&stack, 0, 1000).unwrap(), 0.0);
    }

    #[test]
    fn delta_s_singular_gram_is_reported() {
        // second state only seen by sensor 2; removing it leaves a singular Gram
        let model = SystemModel::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 0),
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]),
            1,
            1,
            vec![0.0; 3],
        )
        .unwrap();
        let stack = build_observability(&model).unwrap();
        assert!(matches!(
            compute_delta_s(&stack, 1, 1000),
            Err(Error::SingularGram { .. })
        ));
        let relaxed = compute_delta_s_with(
            &stack,
            1,
            &DeltaOptions {
                allow_singular: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(relaxed <= 1.0 + 1e-12);
    }

    #[test]
    fn roll_forward_trivial_cases() {
        let model = SystemModel::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 1),
            DMatrix::identity(2, 2),
            2,
            0,
            vec![0.0; 2],
        )
        .unwrap();
        let x = DVector::from_vec(vec![1.5, -2.0]);
        let u = DVector::from_vec(vec![3.0]);
        assert_eq!(roll_forward(&model, &x, std::slice::from_ref(&u)).unwrap(), x);
        assert!(matches!(
            roll_forward(&model, &x, &[]),
            Err(Error::SampleCount { .. })
        ));

        let one_step = SystemModel::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 1),
            DMatrix::identity(2, 2),
            1,
            0,
            vec![0.0; 2],
        )
        .unwrap();
        assert_eq!(roll_forward(&one_step, &x, &[]).unwrap(), x);
    }

    #[test]
    fn json_round_trip() {
        let model = SystemModel::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 0.9]),
            DMatrix::from_row_slice(2, 1, &[0.0, 0.125]),
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0]),
            2,
            1,
            vec![0.1, 0.2, 0.3],
        )
        .unwrap();
        let back = SystemModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn json_rejects_ragged_rows() {
        let text = r#"{"A": [[1, 0], [0]], "B": [[0], [1]], "C": [[1, 0]], "tau": 1, "s_bar": 0, "noise_bounds": [0]}"#;
        let err = SystemModel::from_json(text).unwrap_err();
        assert!(err.to_string().contains("A: row 1"), "{err}");
    }
}
