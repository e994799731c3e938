//! Random systems that are sparse observable by construction, with planted attacks.
//!
//! `A = Q diag(lambda) Q^T` with a random orthogonal `Q` and distinct eigenvalues in
//! `[-1, 1]`. Each sensor row is either a random direction (its two-sample block has
//! rank 2, kernel `n - 2`) or an eigenvector of `A` (rank 1, kernel `n - 1`).

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::sample_in_ball;
use crate::combinatorics::binomial;
use crate::error::{Error, Result};
use crate::linmodel::{
    build_observability, stack_window, ObservabilityStack, StackedWindow, SystemModel,
};

/// Window length of generated instances; `min(GENERATOR_TAU, n)` when `n` is smaller.
pub const GENERATOR_TAU: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservabilityLevel {
    TwoSBar,
    ThreeSBar,
}

impl ObservabilityLevel {
    pub fn sensors_removable(self, s_bar: usize) -> usize {
        match self {
            ObservabilityLevel::TwoSBar => 2 * s_bar,
            ObservabilityLevel::ThreeSBar => 3 * s_bar,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorOptions {
    /// Number of inputs.
    pub m: usize,
    /// Attack vectors have norm `attack_scale * U[0.5, 1.5]`.
    pub attack_scale: f64,
    /// Enumerate all removals when there are at most this many; otherwise sample.
    pub verify_cap: u128,
    pub spot_checks: usize,
    pub max_tries: usize,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions {
            m: 1,
            attack_scale: 10.0,
            verify_cap: 100_000,
            spot_checks: 200,
            max_tries: 1000,
        }
    }
}

/// How the requested sparse observability was confirmed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verification {
    Exhaustive,
    /// Worst-case structural subset plus this many random ones.
    Sampled(usize),
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub model: SystemModel,
    pub stack: ObservabilityStack,
    /// State at the start of the window.
    pub x0: DVector<f64>,
    pub inputs: Vec<DVector<f64>>,
    /// Attack-free, noise-free output samples, one length-`p` vector per time step.
    pub clean_outputs: Vec<DVector<f64>>,
    pub attacked: Vec<usize>,
    /// Per-sensor length-`tau` attack; zero off `attacked`.
    pub attack: Vec<DVector<f64>>,
    /// Per-sensor length-`tau` noise with `||noise[i]|| <= noise_bounds[i]`.
    pub noise: Vec<DVector<f64>>,
    pub window: StackedWindow,
    pub eigen_sensors: Vec<usize>,
    pub verification: Verification,
}

impl GeneratedInstance {
    /// Window built from the clean outputs plus the given per-sensor attack and noise.
    pub fn window_with(
        &self,
        attack: &[DVector<f64>],
        noise: &[DVector<f64>],
    ) -> Result<StackedWindow> {
        let outputs = corrupt(&self.clean_outputs, attack, noise);
        stack_window(&self.model, &outputs, &self.inputs)
    }

    pub fn outputs(&self) -> Vec<DVector<f64>> {
        corrupt(&self.clean_outputs, &self.attack, &self.noise)
    }

    pub fn true_b(&self) -> Vec<bool> {
        let mut b = vec![false; self.model.p()];
        for &i in &self.attacked {
            b[i] = true;
        }
        b
    }
}

fn corrupt(
    clean: &[DVector<f64>],
    attack: &[DVector<f64>],
    noise: &[DVector<f64>],
) -> Vec<DVector<f64>> {
    clean
        .iter()
        .enumerate()
        .map(|(t, y)| DVector::from_fn(y.len(), |i, _| y[i] + attack[i][t] + noise[i][t]))
        .collect()
}

pub fn generate_instance(
    n: usize,
    p: usize,
    s: usize,
    s_bar: usize,
    level: ObservabilityLevel,
    noise_bounds: Vec<f64>,
    seed: u64,
) -> Result<GeneratedInstance> {
    generate_instance_with(
        n,
        p,
        s,
        s_bar,
        level,
        noise_bounds,
        seed,
        &GeneratorOptions::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn generate_instance_with(
    n: usize,
    p: usize,
    s: usize,
    s_bar: usize,
    level: ObservabilityLevel,
    noise_bounds: Vec<f64>,
    seed: u64,
    opts: &GeneratorOptions,
) -> Result<GeneratedInstance> {
    let tau = GENERATOR_TAU.min(n);
    if n == 0 || p == 0 {
        return Err(Error::InvalidArgument("n and p must be positive".into()));
    }
    if s > s_bar {
        return Err(Error::InvalidArgument(format!(
            "s = {s} exceeds s_bar = {s_bar}"
        )));
    }
    let removable = level.sensors_removable(s_bar);
    if removable >= p {
        return Err(Error::InvalidArgument(format!(
            "{removable}-sparse observability is impossible with p = {p} sensors"
        )));
    }
    let keep = p - removable;
    // any keep-set holds at most `e` rank-one sensors; each other sensor adds two rows
    if tau * keep < n {
        return Err(Error::InvalidArgument(format!(
            "{keep} remaining sensors with window {tau} cannot observe n = {n} states"
        )));
    }
    let noise_bounds = if noise_bounds.is_empty() {
        vec![0.0; p]
    } else {
        noise_bounds
    };
    if noise_bounds.len() != p {
        return Err(Error::Dimension(format!(
            "{} noise bounds for p = {p}",
            noise_bounds.len()
        )));
    }
    let e_max = n.min(p).min(tau * keep - n);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..opts.max_tries {
        let (a, q) = random_dynamics(&mut rng, n);
        let b = gaussian_matrix(&mut rng, n, opts.m);
        let e = rng.random_range(0..=e_max);
        let mut eigen_sensors = index::sample(&mut rng, p, e).into_vec();
        eigen_sensors.sort_unstable();
        let eigen_dirs = index::sample(&mut rng, n, e).into_vec();
        let mut c = DMatrix::zeros(p, n);
        let mut next_dir = 0;
        for i in 0..p {
            let row: DVector<f64> = if eigen_sensors.binary_search(&i).is_ok() {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let v = q.column(eigen_dirs[next_dir]) * sign;
                next_dir += 1;
                v
            } else {
                let g = gaussian_vector(&mut rng, n);
                let norm = g.norm();
                g / norm
            };
            c.set_row(i, &row.transpose());
        }
        let model = SystemModel::new(a, b, c, tau, s_bar, noise_bounds.clone())?;
        let stack = build_observability(&model)?;
        if !kernel_dims_ok(&stack, n) {
            continue;
        }
        let Some(verification) = verify(&stack, removable, keep, &eigen_sensors, opts, &mut rng)?
        else {
            continue;
        };

        let x0 = gaussian_vector(&mut rng, n);
        let inputs: Vec<DVector<f64>> = (0..tau)
            .map(|_| gaussian_vector(&mut rng, opts.m))
            .collect();
        let mut clean_outputs = Vec::with_capacity(tau);
        let mut x = x0.clone();
        for u in &inputs {
            clean_outputs.push(model.c() * &x);
            x = model.a() * &x + model.b() * u;
        }
        let mut attacked = index::sample(&mut rng, p, s).into_vec();
        attacked.sort_unstable();
        let mut attack = vec![DVector::zeros(tau); p];
        for &i in &attacked {
            let dir = gaussian_vector(&mut rng, tau);
            let norm = opts.attack_scale * rng.random_range(0.5..1.5);
            attack[i] = dir.normalize() * norm;
        }
        let noise: Vec<DVector<f64>> = noise_bounds
            .iter()
            .map(|&r| sample_in_ball(&mut rng, tau, r))
            .collect();
        let outputs = corrupt(&clean_outputs, &attack, &noise);
        let window = stack_window(&model, &outputs, &inputs)?;
        return Ok(GeneratedInstance {
            model,
            stack,
            x0,
            inputs,
            clean_outputs,
            attacked,
            attack,
            noise,
            window,
            eigen_sensors,
            verification,
        });
    }
    Err(Error::GenerationFailed(opts.max_tries))
}

fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

fn gaussian_matrix<R: Rng>(rng: &mut R, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// `(A, Q)` with `A = Q diag(lambda) Q^T`, eigenvalues distinct in `[-1, 1]`.
fn random_dynamics<R: Rng>(rng: &mut R, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let min_gap = 1.0 / (4.0 * n as f64 * n as f64);
    let lambda = loop {
        let mut l: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        l.sort_by(f64::total_cmp);
        if l.windows(2).all(|w| w[1] - w[0] >= min_gap) {
            break l;
        }
    };
    let q = gaussian_matrix(rng, n, n).qr().q();
    let a = &q * DMatrix::from_diagonal(&DVector::from_vec(lambda)) * q.transpose();
    (a, q)
}

fn kernel_dims_ok(stack: &ObservabilityStack, n: usize) -> bool {
    stack
        .block_kernel_dims
        .iter()
        .all(|&k| k + 1 == n || k + 2 == n || (n == 1 && k == 0))
}

fn verify<R: Rng>(
    stack: &ObservabilityStack,
    removable: usize,
    keep: usize,
    eigen_sensors: &[usize],
    opts: &GeneratorOptions,
    rng: &mut R,
) -> Result<Option<Verification>> {
    let p = stack.p();
    if binomial(p, removable) <= opts.verify_cap {
        return Ok(stack
            .is_sparse_observable(removable, opts.verify_cap)?
            .then_some(Verification::Exhaustive));
    }
    // the rank-one sensors first, then generic ones: the smallest generic rank
    let mut worst: Vec<usize> = eigen_sensors.iter().cloned().take(keep).collect();
    worst.extend(
        (0..p)
            .filter(|i| eigen_sensors.binary_search(i).is_err())
            .take(keep - worst.len()),
    );
    if stack.rank_of(&worst) < stack.n {
        return Ok(None);
    }
    for _ in 0..opts.spot_checks {
        let set = index::sample(rng, p, keep).into_vec();
        if stack.rank_of(&set) < stack.n {
            return Ok(None);
        }
    }
    Ok(Some(Verification::Sampled(opts.spot_checks)))
}
