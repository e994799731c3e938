//! Vehicle tracking a square path while an attacker corrupts the wheel encoders.
//!
//! Each step measures the current state, corrupts the measurement, estimates the
//! state from the trailing two-sample window and applies state feedback toward
//! the current leg's end point. Legs are 1-D: rotation at the corners is a pause.

use std::io::Write;

use nalgebra::{DVector, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ugv::{discretize_ugv_with, place_poles, UgvModel, UgvParams, UGV_TAU};
use crate::error::{Error, Result};
use crate::estimator::{estimate, EstimatorConfig, Outcome};
use crate::linmodel::{build_observability, stack_window};
use crate::theory::Strategy;

fn default_delay() -> usize {
    150
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AttackKind {
    /// Uniform in `[-amplitude, amplitude]`, fresh each step.
    RandomNoise { amplitude: f64 },
    /// `step` for `switch_time` seconds after the phase starts, then growing by `slope` per second.
    StepThenRamp {
        step: f64,
        slope: f64,
        switch_time: f64,
    },
    /// Report the sensor's genuine reading from `delay` steps earlier; inactive until that history exists.
    Replay {
        #[serde(default = "default_delay")]
        delay: usize,
    },
}

/// Attack on one sensor over steps `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackPhase {
    pub sensor: usize,
    pub start: usize,
    pub end: usize,
    pub kind: AttackKind,
}

fn default_leg_length() -> f64 {
    5.0
}
fn default_leg_steps() -> usize {
    200
}
fn default_poles() -> [f64; 2] {
    [0.8, 0.85]
}
fn default_strategy() -> Strategy {
    Strategy::ConflictAgree
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackScenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub params: UgvParams,
    pub steps: usize,
    #[serde(default = "default_leg_length")]
    pub leg_length: f64,
    /// Steps spent on each leg, including the stop at its end.
    #[serde(default = "default_leg_steps")]
    pub leg_steps: usize,
    #[serde(default = "default_poles")]
    pub poles: [f64; 2],
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub noise: bool,
    #[serde(default)]
    pub phases: Vec<AttackPhase>,
}

impl AttackScenario {
    pub fn attack_free(steps: usize) -> Self {
        AttackScenario {
            name: "attack_free".into(),
            params: UgvParams::default(),
            steps,
            leg_length: default_leg_length(),
            leg_steps: default_leg_steps(),
            poles: default_poles(),
            strategy: default_strategy(),
            epsilon: 0.0,
            seed: 0,
            noise: true,
            phases: Vec::new(),
        }
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Every sensor some phase attacks, sorted.
    pub fn attacked(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.phases.iter().map(|p| p.sensor).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Phases must not put two sensors into one estimation window.
    pub fn validate(&self) -> Result<()> {
        if self.steps < UGV_TAU {
            return Err(Error::InvalidArgument(format!(
                "steps = {} is shorter than the window",
                self.steps
            )));
        }
        if self.leg_steps == 0 {
            return Err(Error::InvalidArgument("leg_steps must be positive".into()));
        }
        for ph in &self.phases {
            if ph.sensor >= 3 {
                return Err(Error::InvalidArgument(format!(
                    "phase sensor {} out of range",
                    ph.sensor
                )));
            }
            if ph.start >= ph.end {
                return Err(Error::InvalidArgument(format!(
                    "phase {}..{} is empty",
                    ph.start, ph.end
                )));
            }
        }
        for (i, a) in self.phases.iter().enumerate() {
            for b in &self.phases[i + 1..] {
                let gap = if a.sensor == b.sensor { 0 } else { UGV_TAU - 1 };
                if a.start < b.end + gap && b.start < a.end + gap {
                    return Err(Error::InvalidArgument(format!(
                        "phases {}..{} (sensor {}) and {}..{} (sensor {}) share a window",
                        a.start, a.end, a.sensor, b.start, b.end, b.sensor
                    )));
                }
            }
        }
        Ok(())
    }

    fn phase_at(&self, sensor: usize, step: usize) -> Option<&AttackPhase> {
        self.phases
            .iter()
            .find(|p| p.sensor == sensor && p.start <= step && step < p.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub t: f64,
    pub x_true: [f64; 2],
    /// Estimate of the current state used by the controller.
    pub x_est: [f64; 2],
    /// True state and estimate at the start of the window; absent before the first window.
    pub x_true_start: Option<[f64; 2]>,
    pub x_est_start: Option<[f64; 2]>,
    pub y: [f64; 3],
    pub a: [f64; 3],
    pub noise: [f64; 3],
    /// Indicators from the estimator; absent before the first window or when infeasible.
    pub b: Option<[bool; 3]>,
    /// `||E_i||^2` over the current window.
    pub window_attack_sq: [f64; 3],
    pub feasible: bool,
    pub iterations: u64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

pub const TRACE_HEADER: &str = "t,x_true,v_true,x_est,v_est,y1,y2,y3,a1,a2,a3,b1,b2,b3,u";

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// One row per step; floats with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in &self.rows {
            let b = r.b.unwrap_or([false; 3]);
            let mut fields: Vec<String> = Vec::with_capacity(15);
            fields.push(fmt_f64(r.t));
            fields.extend(
                r.x_true
                    .iter()
                    .chain(&r.x_est)
                    .chain(&r.y)
                    .chain(&r.a)
                    .map(|&v| fmt_f64(v)),
            );
            fields.extend(b.iter().map(|&v| (v as u8).to_string()));
            fields.push(fmt_f64(r.u));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Round-trip exact formatting of a double.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn attack_value<R: Rng>(
    kind: &AttackKind,
    phase_start: usize,
    step: usize,
    dt: f64,
    genuine_history: &[f64],
    genuine_now: f64,
    rng: &mut R,
) -> f64 {
    match *kind {
        AttackKind::RandomNoise { amplitude } => rng.random_range(-1.0..=1.0) * amplitude,
        AttackKind::StepThenRamp {
            step: level,
            slope,
            switch_time,
        } => {
            let elapsed = (step - phase_start) as f64 * dt;
            if elapsed < switch_time {
                level
            } else {
                level + slope * (elapsed - switch_time)
            }
        }
        AttackKind::Replay { delay } => {
            if step >= delay && delay > 0 {
                genuine_history[step - delay] - genuine_now
            } else {
                0.0
            }
        }
    }
}

/// Run `scenario` with its own parameters, strategy and seed.
pub fn simulate(scenario: &AttackScenario) -> Result<Trace> {
    let ugv = discretize_ugv_with(scenario.params)?;
    let config = EstimatorConfig {
        strategy: scenario.strategy,
        epsilon: scenario.epsilon,
        agree_sound: Some(false),
        ..Default::default()
    };
    run_closed_loop(&ugv, scenario, scenario.steps, &config, scenario.seed)
}

pub fn run_closed_loop(
    ugv: &UgvModel,
    scenario: &AttackScenario,
    steps: usize,
    config: &EstimatorConfig,
    seed: u64,
) -> Result<Trace> {
    scenario.validate()?;
    if steps < UGV_TAU {
        return Err(Error::InvalidArgument(format!(
            "steps = {steps} is shorter than the window"
        )));
    }
    let model = &ugv.model;
    let stack = build_observability(model)?;
    let gain = place_poles(&ugv.a, &ugv.b, scenario.poles)?;
    let c = Vector3::new(0usize, 1, 1);
    let bounds = ugv.per_sample_noise_bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut x = Vector2::zeros();
    let mut x_hat = Vector2::zeros();
    let mut prev: Option<(Vector2<f64>, DVector<f64>, f64, [f64; 3])> = None;
    let mut genuine_history: [Vec<f64>; 3] = Default::default();
    let mut rows = Vec::with_capacity(steps);

    for step in 0..steps {
        let mut noise = [0.0; 3];
        let mut genuine = [0.0; 3];
        let mut a = [0.0; 3];
        for i in 0..3 {
            if scenario.noise {
                noise[i] = rng.random_range(-1.0..=1.0) * bounds[i];
            }
            genuine[i] = x[c[i]] + noise[i];
            genuine_history[i].push(genuine[i]);
            if let Some(ph) = scenario.phase_at(i, step) {
                a[i] = attack_value(
                    &ph.kind,
                    ph.start,
                    step,
                    ugv.params.dt,
                    &genuine_history[i],
                    genuine[i],
                    &mut rng,
                );
            }
        }
        let y_now = DVector::from_fn(3, |i, _| genuine[i] + a[i]);

        let mut row_b = None;
        let mut feasible = false;
        let mut iterations = 0;
        let mut x_true_start = None;
        let mut x_est_start = None;
        let mut window_attack_sq = a.map(|v| v * v);
        match &prev {
            Some((x_prev, y_prev, u_prev, a_prev)) => {
                for i in 0..3 {
                    window_attack_sq[i] += a_prev[i] * a_prev[i];
                }
                x_true_start = Some([x_prev[0], x_prev[1]]);
                let inputs = [DVector::from_element(1, *u_prev), DVector::zeros(1)];
                let window = stack_window(model, &[y_prev.clone(), y_now.clone()], &inputs)?;
                let outcome = estimate(model, &stack, &window, config)?;
                iterations = outcome.iterations();
                match outcome {
                    Outcome::Feasible(e) => {
                        feasible = true;
                        x_est_start = Some([e.x[0], e.x[1]]);
                        x_hat = Vector2::new(e.x_current[0], e.x_current[1]);
                        row_b = Some([e.b[0], e.b[1], e.b[2]]);
                    }
                    Outcome::Infeasible(_) => {
                        // coast on the model
                        x_hat = ugv.a * x_hat + ugv.b * *u_prev;
                    }
                }
            }
            None => {
                // the initial state is known
                x_hat = x;
            }
        }

        let leg = step / scenario.leg_steps;
        let target = Vector2::new(scenario.leg_length * (leg + 1) as f64, 0.0);
        let u = -(gain * (x_hat - target))[0];

        rows.push(TraceRow {
            step,
            t: step as f64 * ugv.params.dt,
            x_true: [x[0], x[1]],
            x_est: [x_hat[0], x_hat[1]],
            x_true_start,
            x_est_start,
            y: [y_now[0], y_now[1], y_now[2]],
            a,
            noise,
            b: row_b,
            window_attack_sq,
            feasible,
            iterations,
            u,
        });
        prev = Some((x, y_now, u, a));
        x = ugv.a * x + ugv.b * u;
    }
    Ok(Trace { rows })
}
