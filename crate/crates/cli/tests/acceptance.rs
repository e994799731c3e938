//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p sse-cli --test acceptance`.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sse_core::attacksim::{
    discretize_ugv_with, generate_instance, simulate, AttackScenario, GeneratedInstance,
    ObservabilityLevel,
};
use sse_core::bench::{geometric_mean, run_bench, BenchSpec};
use sse_core::combinatorics::DEFAULT_SUBSET_CAP;
use sse_core::estimator::{
    conflict_iteration_bound, delta_bound, trivial_iteration_bound, DeltaBound,
};
use sse_core::linalg::spectral_helper_check;
use sse_core::linmodel::{
    build_observability, compute_delta_s, compute_delta_s_with, compute_o_bar, stack_window,
    DeltaOptions,
};
use sse_core::oracle::brute_force;
use sse_core::sat::enumerate_models;
use sse_core::{
    estimate, minimal_support_estimate, EstimatorConfig, Outcome, PbConstraint,
    RobustnessConstants, SatInstance, SatOutcome, Strategy, SystemModel,
};

// pinned tolerances
const NOISELESS_REL_ERR: f64 = 1e-6;
const ORACLE_STATE_TOL: f64 = 1e-9;
const CLOSED_FORM_TOL: f64 = 1e-12;
const TRIVIAL_CAP: u64 = 2000;
const MIN_TRIVIAL_OVER_CONFLICT: f64 = 5.0;
const MIN_TRIVIAL_OVER_AGREE: f64 = 8.0;
const MIN_DETECTION_RATE: f64 = 0.99;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// One noiseless run, kept for the iteration-bound check.
struct RunRecord {
    p: usize,
    s_bar: usize,
    strategy: Strategy,
    iterations: u64,
}

fn rel_err(x: &DVector<f64>, truth: &DVector<f64>) -> f64 {
    (x - truth).norm() / truth.norm().max(f64::MIN_POSITIVE)
}

fn config(strategy: Strategy, agree_sound: bool, epsilon: f64) -> EstimatorConfig {
    EstimatorConfig {
        epsilon,
        agree_sound: Some(agree_sound),
        ..EstimatorConfig::with_strategy(strategy)
    }
}

/// Dimensions with `s <= s_bar`, `p > 2 s_bar` and `2 (p - 2 s_bar) >= n`.
fn random_dims(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    max_p: usize,
    max_s_bar: usize,
) -> (usize, usize, usize, usize) {
    loop {
        let n = rng.random_range(1..=max_n);
        let s_bar = rng.random_range(0..=max_s_bar);
        let p_min = 2 * s_bar + n.div_ceil(2).max(1);
        if p_min > max_p {
            continue;
        }
        let p = rng.random_range(p_min..=max_p);
        let s = rng.random_range(0..=s_bar);
        return (n, p, s, s_bar);
    }
}

fn noiseless_completeness(runs: &mut Vec<RunRecord>) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut count, mut worst, mut failures, mut three) = (0, 0.0f64, Vec::new(), 0);
    while count < 500 {
        let (n, p, s, s_bar) = random_dims(&mut rng, 25, 60, 20);
        let seed = rng.random::<u64>();
        let strategy = match count % 3 {
            0 if trivial_iteration_bound(p, s_bar) <= 5000 => Strategy::Trivial,
            2 => Strategy::ConflictAgree,
            _ => Strategy::Conflict,
        };
        // the agree certificate needs 3 s_bar-sparse observability
        let three_ok =
            strategy == Strategy::ConflictAgree && 3 * s_bar < p && 2 * (p - 3 * s_bar) >= n;
        let level = if three_ok {
            ObservabilityLevel::ThreeSBar
        } else {
            ObservabilityLevel::TwoSBar
        };
        let Ok(g) = generate_instance(n, p, s, s_bar, level, vec![], seed) else {
            continue;
        };
        count += 1;
        three += three_ok as usize;
        let out = estimate(
            &g.model,
            &g.stack,
            &g.window,
            &config(strategy, three_ok, 0.0),
        );
        match out {
            Ok(Outcome::Feasible(e)) => {
                runs.push(RunRecord {
                    p,
                    s_bar,
                    strategy,
                    iterations: e.iterations,
                });
                let err = rel_err(&e.x, &g.x0);
                worst = worst.max(err);
                let covers = g.attacked.iter().all(|&i| e.b[i]);
                if !covers || err > NOISELESS_REL_ERR {
                    failures.push(format!(
                        "n={n} p={p} s={s} s_bar={s_bar} seed={seed}: err {err:.2e}"
                    ));
                }
            }
            other => failures.push(format!(
                "n={n} p={p} s={s} s_bar={s_bar} seed={seed}: {other:?}"
            )),
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{count} instances ({three} 3s_bar-observable), worst relative error {worst:.2e}, {} failures{}",
            failures.len(),
            first(&failures)
        ),
    )
}

fn first(failures: &[String]) -> String {
    failures
        .first()
        .map(|f| format!("; first: {f}"))
        .unwrap_or_default()
}

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut count, mut worst, mut failures) = (0, 0.0f64, Vec::new());
    while count < 200 {
        let (n, p, s, s_bar) = random_dims(&mut rng, 6, 10, 2);
        let seed = rng.random::<u64>();
        let Ok(g) = generate_instance(n, p, s, s_bar, ObservabilityLevel::TwoSBar, vec![], seed)
        else {
            continue;
        };
        count += 1;
        let est = minimal_support_estimate(
            &g.model,
            &g.stack,
            &g.window,
            &config(Strategy::Conflict, false, 0.0),
        );
        let orc = brute_force(&g.stack, &g.window, g.model.noise_bounds(), s_bar, 0.0);
        let tag = format!("n={n} p={p} s={s} s_bar={s_bar} seed={seed}");
        match (est, orc) {
            (Ok(Outcome::Feasible(e)), Ok(o)) => match o.unique_minimal() {
                Some(m) if m.support == e.support() => {
                    let d = rel_err(&e.x, &m.x);
                    worst = worst.max(d);
                    if d > ORACLE_STATE_TOL {
                        failures.push(format!("{tag}: state differs by {d:.2e}"));
                    }
                }
                _ => failures.push(format!(
                    "{tag}: support {:?} vs oracle minimal {:?}",
                    e.support(),
                    o.minimal().len()
                )),
            },
            (e, o) => failures.push(format!(
                "{tag}: {:?} / {:?}",
                e.map(|x| x.is_feasible()),
                o.map(|x| x.checked)
            )),
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{count} instances, worst state mismatch {worst:.2e}, {} failures{}",
            failures.len(),
            first(&failures)
        ),
    )
}

fn iteration_bounds(runs: &mut Vec<RunRecord>) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut violations = Vec::new();
    let mut extra = 0;
    while extra < 300 {
        let (n, p, s, s_bar) = random_dims(&mut rng, 4, 10, 4);
        if p < 3 {
            continue;
        }
        let seed = rng.random::<u64>();
        let Ok(g) = generate_instance(n, p, s, s_bar, ObservabilityLevel::TwoSBar, vec![], seed)
        else {
            continue;
        };
        extra += 1;
        for strategy in [Strategy::Trivial, Strategy::Conflict] {
            match estimate(&g.model, &g.stack, &g.window, &config(strategy, false, 0.0)) {
                Ok(Outcome::Feasible(e)) => runs.push(RunRecord {
                    p,
                    s_bar,
                    strategy,
                    iterations: e.iterations,
                }),
                other => violations.push(format!(
                    "p={p} s_bar={s_bar} {strategy:?}: {:?}",
                    other.map(|o| o.iterations())
                )),
            }
        }
    }
    let mut checked = 0;
    for r in runs.iter() {
        let bound = match r.strategy {
            Strategy::Trivial => trivial_iteration_bound(r.p, r.s_bar),
            Strategy::Conflict => conflict_iteration_bound(r.p, r.s_bar),
            Strategy::ConflictAgree => continue,
        };
        checked += 1;
        if r.iterations as u128 > bound {
            violations.push(format!(
                "p={} s_bar={} {:?}: {} > {bound}",
                r.p, r.s_bar, r.strategy, r.iterations
            ));
        }
    }
    verdict(
        violations.is_empty() && checked > 0,
        format!(
            "{checked} trivial/conflict runs checked, {} violations{}",
            violations.len(),
            first(&violations)
        ),
    )
}

fn heuristic_trend() -> Verdict {
    // trivial runs stop at the cap, so their counts are lower bounds; the
    // certificate strategies run to completion on the same instances
    let sweep = |strategies: &str, cap: u64| {
        format!(
            r#"{{"n": 25, "p": 60, "s_bar": 20, "s": {:?}, "trials": 5, "strategies": {strategies}, "max_iterations": {cap}}}"#,
            (1..=20).collect::<Vec<_>>()
        )
    };
    let spec = BenchSpec::from_json(&format!(
        r#"{{"default_seed": 404, "sweeps": [{}, {}]}}"#,
        sweep(r#"["trivial"]"#, TRIVIAL_CAP),
        sweep(r#"["conflict", "conflict_agree"]"#, 1_000_000)
    ))
    .expect("bench spec parses");
    let jobs = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let report = match run_bench(&spec, jobs) {
        Ok(r) => r,
        Err(e) => return verdict(false, format!("bench failed: {e}")),
    };
    let mut problems = Vec::new();
    for t in &report.trials {
        let capped_trivial = t.capped && t.strategy == Strategy::Trivial;
        if !capped_trivial && !(t.feasible && t.support_ok) {
            problems.push(format!(
                "s={} trial {} {:?} failed: {:?}",
                t.s, t.trial, t.strategy, t.error
            ));
        }
    }
    let (mut r_conf, mut r_agree) = (Vec::new(), Vec::new());
    let mut trivial_capped = 0;
    for s in 1..=20 {
        let mean = |st| {
            let sweep = if st == Strategy::Trivial { 0 } else { 1 };
            report
                .aggregate(sweep, s, st)
                .map(|a| a.geo_mean_iterations)
                .unwrap_or(f64::NAN)
        };
        let (t, c, ca) = (
            mean(Strategy::Trivial),
            mean(Strategy::Conflict),
            mean(Strategy::ConflictAgree),
        );
        trivial_capped += report
            .aggregate(0, s, Strategy::Trivial)
            .map(|a| a.capped)
            .unwrap_or(0);
        r_conf.push(t / c);
        r_agree.push(t / ca);
        if !(ca <= c * (1.0 + 1e-12)) {
            problems.push(format!(
                "s={s}: conflict+agree mean {ca:.1} above conflict {c:.1}"
            ));
        }
    }
    let (gc, ga) = (geometric_mean(&r_conf), geometric_mean(&r_agree));
    if !(gc >= MIN_TRIVIAL_OVER_CONFLICT) {
        problems.push(format!(
            "trivial/conflict {gc:.1} < {MIN_TRIVIAL_OVER_CONFLICT}"
        ));
    }
    if !(ga >= MIN_TRIVIAL_OVER_AGREE) {
        problems.push(format!(
            "trivial/conflict+agree {ga:.1} < {MIN_TRIVIAL_OVER_AGREE}"
        ));
    }
    verdict(
        problems.is_empty(),
        format!(
            "{} trials, trivial/conflict {gc:.1}x, trivial/conflict+agree {ga:.1}x ({trivial_capped} trivial runs at cap {TRIVIAL_CAP}){}",
            report.trials.len(),
            first(&problems)
        ),
    )
}

/// Noisy instance with its robustness constants.
struct Noisy {
    g: GeneratedInstance,
    bound: DeltaBound,
    o_bar: f64,
    epsilon: f64,
}

fn noisy_instance(rng: &mut ChaCha8Rng) -> Option<Noisy> {
    let s_bar = rng.random_range(1..=2);
    let p = rng.random_range(2 * s_bar + 2..=8);
    let n = rng.random_range(1..=(2 * (p - 2 * s_bar)).min(4));
    let s = rng.random_range(1..=s_bar);
    let bounds: Vec<f64> = (0..p).map(|_| rng.random_range(0.05..0.5)).collect();
    let g = generate_instance(
        n,
        p,
        s,
        s_bar,
        ObservabilityLevel::TwoSBar,
        bounds,
        rng.random(),
    )
    .ok()?;
    let o_bar = compute_o_bar(&g.stack, p - s_bar, DEFAULT_SUBSET_CAP).ok()?;
    let delta_s = compute_delta_s(&g.stack, s_bar, DEFAULT_SUBSET_CAP).ok()?;
    let epsilon = if rng.random_bool(0.5) {
        0.0
    } else {
        1e-2 * g.model.noise_norm_sq()
    };
    let bound = delta_bound(&g.model, &RobustnessConstants { o_bar, delta_s }, epsilon).ok()?;
    Some(Noisy {
        g,
        bound,
        o_bar,
        epsilon,
    })
}

fn unit(v: &DVector<f64>, rng: &mut ChaCha8Rng) -> DVector<f64> {
    if v.norm() > 0.0 {
        v / v.norm()
    } else {
        let w = DVector::from_fn(v.len(), |_, _| rng.random_range(-1.0..1.0));
        &w / w.norm()
    }
}

fn noisy_detection() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (mut count, mut failures, mut worst_ratio) = (0, Vec::new(), 0.0f64);
    while count < 200 {
        let Some(Noisy {
            g,
            bound,
            o_bar,
            epsilon,
        }) = noisy_instance(&mut rng)
        else {
            continue;
        };
        count += 1;
        let mut attack = g.attack.clone();
        for &i in &g.attacked {
            let energy = bound.detection_threshold * rng.random_range(1.05..4.0);
            attack[i] = unit(&g.attack[i], &mut rng) * energy.sqrt();
        }
        let window = g.window_with(&attack, &g.noise).expect("window builds");
        let tag = format!(
            "n={} p={} attacked={:?}",
            g.model.n(),
            g.model.p(),
            g.attacked
        );
        match estimate(
            &g.model,
            &g.stack,
            &window,
            &config(Strategy::Conflict, false, epsilon),
        ) {
            Ok(Outcome::Feasible(e)) => {
                let err = (&e.x - &g.x0).norm_squared();
                let allowed = o_bar * g.model.noise_norm_sq();
                worst_ratio = worst_ratio.max(err / allowed);
                if !g.attacked.iter().all(|&i| e.b[i]) {
                    failures.push(format!("{tag}: support {:?} misses an attack", e.support()));
                } else if err > allowed {
                    failures.push(format!("{tag}: error {err:.3e} > {allowed:.3e}"));
                }
            }
            other => failures.push(format!("{tag}: {:?}", other.map(|o| o.is_feasible()))),
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{count} instances, worst error / o_bar||Psi||^2 = {worst_ratio:.3}, {} failures{}",
            failures.len(),
            first(&failures)
        ),
    )
}

fn undetected_bound() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (mut count, mut failures, mut worst_ratio) = (0, Vec::new(), 0.0f64);
    while count < 200 {
        let Some(Noisy {
            g, bound, epsilon, ..
        }) = noisy_instance(&mut rng)
        else {
            continue;
        };
        count += 1;
        let n = g.model.n();
        let mut attack: Vec<DVector<f64>> =
            g.attack.iter().map(|a| DVector::zeros(a.len())).collect();
        let stealthy = count % 2 == 0;
        if stealthy {
            // consistent with a shifted state on the attacked sensors
            let d = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            for &i in &g.attacked {
                attack[i] = &g.stack.blocks[i] * &d;
            }
        } else {
            for &i in &g.attacked {
                attack[i] = DVector::from_fn(attack[i].len(), |_, _| rng.random_range(-1.0..1.0));
            }
        }
        let total: f64 = attack.iter().map(|a| a.norm_squared()).sum();
        if total == 0.0 {
            continue;
        }
        let scale = (bound.detection_threshold * rng.random_range(0.0..1.0) / total).sqrt();
        for a in &mut attack {
            *a *= scale;
        }
        let window = g.window_with(&attack, &g.noise).expect("window builds");
        let tag = format!(
            "n={n} p={} attacked={:?} stealthy={stealthy}",
            g.model.p(),
            g.attacked
        );
        match estimate(
            &g.model,
            &g.stack,
            &window,
            &config(Strategy::Conflict, false, epsilon),
        ) {
            Ok(Outcome::Feasible(e)) => {
                let err = (&e.x - &g.x0).norm_squared();
                worst_ratio = worst_ratio.max(err / bound.undetected_bound);
                if err > bound.undetected_bound {
                    failures.push(format!(
                        "{tag}: error {err:.3e} > {:.3e}",
                        bound.undetected_bound
                    ));
                }
            }
            other => failures.push(format!("{tag}: {:?}", other.map(|o| o.is_feasible()))),
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{count} instances, worst error / bound = {worst_ratio:.3}, {} failures{}",
            failures.len(),
            first(&failures)
        ),
    )
}

fn random_psd(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> DMatrix<f64> {
    let f = DMatrix::from_fn(dim, rank, |_, _| rng.random_range(-1.0..1.0));
    let m = &f * f.transpose();
    (&m + m.transpose()) * 0.5
}

fn spectral_helper() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let (mut worst, mut failures) = (0.0f64, Vec::new());
    for k in 0..1000 {
        let dim = rng.random_range(1..=8);
        let rank = rng.random_range(0..=dim);
        let a = random_psd(&mut rng, dim, rank);
        let b = random_psd(&mut rng, dim, dim)
            + DMatrix::identity(dim, dim) * rng.random_range(1e-3..1.0);
        match spectral_helper_check(&a, &b) {
            Ok(l) if l < 1.0 => worst = worst.max(l),
            other => failures.push(format!("pair {k} dim {dim}: {other:?}")),
        }
    }
    for dim in 1..=8 {
        let b = random_psd(&mut rng, dim, dim) + DMatrix::identity(dim, dim);
        let zero = spectral_helper_check(&DMatrix::zeros(dim, dim), &b);
        let same = spectral_helper_check(&b, &b);
        match (zero, same) {
            (Ok(z), Ok(h)) if z.abs() <= CLOSED_FORM_TOL && (h - 0.5).abs() <= CLOSED_FORM_TOL => {}
            other => failures.push(format!("closed form dim {dim}: {other:?}")),
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "1000 random pairs, largest value {worst:.6}, closed forms 0 and 1/2 checked{}",
            first(&failures)
        ),
    )
}

fn closed_loop() -> Verdict {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/ugv_attack_run.json");
    let scenario =
        AttackScenario::from_json(&std::fs::read_to_string(&path).expect("scenario file"))
            .expect("scenario parses");
    let ugv = discretize_ugv_with(scenario.params).expect("vehicle model");
    let stack = build_observability(&ugv.model).expect("stack");
    let s_bar = ugv.model.s_bar();
    let o_bar = compute_o_bar(&stack, ugv.model.p() - s_bar, DEFAULT_SUBSET_CAP).expect("o_bar");
    // only the encoders are attackable; their blocks are rank-deficient
    let opts = DeltaOptions {
        attackable: Some(vec![1, 2]),
        allow_singular: true,
        cap: None,
    };
    let delta_s = compute_delta_s_with(&stack, s_bar, &opts).expect("delta_s");
    let bound = delta_bound(
        &ugv.model,
        &RobustnessConstants { o_bar, delta_s },
        scenario.epsilon,
    )
    .expect("bound");

    let trace = simulate(&scenario).expect("simulation runs");
    let (mut strong, mut identified, mut worst) = (0, 0, 0.0f64);
    for r in &trace.rows {
        if let Some(i) = (0..3).find(|&i| r.window_attack_sq[i] > bound.detection_threshold) {
            strong += 1;
            let expected: [bool; 3] = std::array::from_fn(|k| k == i);
            identified += (r.b == Some(expected)) as usize;
        }
        if let (Some(xt), Some(xe)) = (r.x_true_start, r.x_est_start) {
            worst = worst.max((xt[0] - xe[0]).powi(2) + (xt[1] - xe[1]).powi(2));
        }
        worst = worst.max((r.x_true[0] - r.x_est[0]).powi(2));
    }
    let rate = if strong == 0 {
        0.0
    } else {
        identified as f64 / strong as f64
    };

    let quiet = AttackScenario {
        phases: Vec::new(),
        ..scenario.clone()
    };
    let clean = simulate(&quiet).expect("attack-free run");
    let false_alarms = clean
        .rows
        .iter()
        .skip(1)
        .filter(|r| r.b != Some([false; 3]))
        .count();

    verdict(
        strong > 0 && rate >= MIN_DETECTION_RATE && worst <= bound.undetected_bound && false_alarms == 0,
        format!(
            "threshold {:.2}: {identified}/{strong} strong-attack steps flagged exactly, worst squared error {worst:.3} (bound {:.2}), {false_alarms} flagged steps without attack",
            bound.detection_threshold, bound.undetected_bound
        ),
    )
}

fn sat_completeness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let (mut sets, mut sat, mut failures) = (0, 0, Vec::new());
    while sets < 1000 {
        let p = rng.random_range(1..=10);
        let s_bar = rng.random_range(0..=p);
        let mut inst = SatInstance::new(p, s_bar).expect("instance");
        for _ in 0..rng.random_range(1..=8) {
            let size = rng.random_range(1..=p);
            let members = rand::seq::index::sample(&mut rng, p, size).into_vec();
            let c = if rng.random_bool(0.15) {
                PbConstraint::AllZero(members)
            } else {
                PbConstraint::AtLeastOne(members)
            };
            inst.add_constraint(c).expect("constraint in range");
            let models = enumerate_models(p, inst.constraints());
            sets += 1;
            let ok = match inst.solve() {
                SatOutcome::Sat(a) => {
                    sat += 1;
                    inst.satisfies(&a.b) && models.contains(&a.b)
                }
                SatOutcome::Unsat => models.is_empty(),
            };
            if !ok {
                failures.push(format!(
                    "p={p} s_bar={s_bar} constraints {:?}",
                    inst.constraints()
                ));
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{sets} constraint sets ({sat} satisfiable), {} disagreements{}",
            failures.len(),
            first(&failures)
        ),
    )
}

/// Two groups of `s_bar` sensors that see different first state components and
/// extra sensors blind to that component: both groups are minimal attack sets.
fn ambiguous_instance(
    rng: &mut ChaCha8Rng,
) -> (SystemModel, Vec<DVector<f64>>, Vec<usize>, Vec<usize>) {
    let n = rng.random_range(2..=4);
    let s_bar = rng.random_range(1..=2);
    let extra = rng.random_range(0..=10 - 2 * s_bar);
    let p = 2 * s_bar + extra;
    let mut eig: Vec<f64> = (0..n)
        .map(|k| 0.5 + 0.3 * k as f64 + rng.random_range(0.0..0.2))
        .collect();
    eig.reverse();
    let a = DMatrix::from_diagonal(&DVector::from_vec(eig));
    let c = DMatrix::from_fn(p, n, |i, j| {
        if i >= 2 * s_bar && j == 0 {
            0.0
        } else {
            let v: f64 = rng.random_range(0.3..1.5);
            if rng.random_bool(0.5) {
                v
            } else {
                -v
            }
        }
    });
    let model =
        SystemModel::new(a, DMatrix::zeros(n, 1), c, n, s_bar, vec![0.0; p]).expect("model");
    let x1 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let mut x2 = x1.clone();
    x2[0] += rng.random_range(0.5..2.0);
    let mut outputs = Vec::new();
    let (mut s1, mut s2) = (x1, x2);
    for _ in 0..n {
        outputs.push(DVector::from_fn(p, |i, _| {
            let x = if i >= s_bar && i < 2 * s_bar {
                &s2
            } else {
                &s1
            };
            (model.c().row(i) * x)[0]
        }));
        s1 = model.a() * &s1;
        s2 = model.a() * &s2;
    }
    (
        model,
        outputs,
        (0..s_bar).collect(),
        (s_bar..2 * s_bar).collect(),
    )
}

fn uniqueness_boundary() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut failures = Vec::new();
    for k in 0..100 {
        let (model, outputs, g1, g2) = ambiguous_instance(&mut rng);
        let stack = build_observability(&model).expect("stack");
        let inputs = vec![DVector::zeros(1); model.tau()];
        let window = stack_window(&model, &outputs, &inputs).expect("window");
        let s_bar = model.s_bar();
        if stack
            .is_sparse_observable(2 * s_bar, DEFAULT_SUBSET_CAP)
            .unwrap_or(true)
        {
            failures.push(format!(
                "constructed instance {k} is 2s_bar-sparse observable"
            ));
            continue;
        }
        match brute_force(&stack, &window, model.noise_bounds(), s_bar, 0.0) {
            Ok(o) => {
                let minimal: Vec<&Vec<usize>> = o.minimal().iter().map(|m| &m.support).collect();
                if minimal.len() < 2 || !minimal.contains(&&g1) || !minimal.contains(&&g2) {
                    failures.push(format!(
                        "constructed instance {k}: minimal supports {minimal:?}"
                    ));
                }
            }
            Err(e) => failures.push(format!("constructed instance {k}: {e}")),
        }
    }
    let mut count = 0;
    while count < 200 {
        let (n, p, s, s_bar) = random_dims(&mut rng, 6, 10, 3);
        let Ok(g) = generate_instance(
            n,
            p,
            s,
            s_bar,
            ObservabilityLevel::TwoSBar,
            vec![],
            rng.random(),
        ) else {
            continue;
        };
        count += 1;
        match brute_force(&g.stack, &g.window, g.model.noise_bounds(), s_bar, 0.0) {
            Ok(o) if o.unique_minimal().map(|m| &m.support) == Some(&g.attacked) => {}
            Ok(o) => failures.push(format!(
                "generated n={n} p={p} s_bar={s_bar}: {} minimal",
                o.minimal().len()
            )),
            Err(e) => failures.push(format!("generated n={n} p={p} s_bar={s_bar}: {e}")),
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "100 constructed instances with two minimal supports, {count} generated with one, {} failures{}",
            failures.len(),
            first(&failures)
        ),
    )
}

fn main() -> ExitCode {
    let mut runs = Vec::new();
    let mut all_pass = true;
    let mut report = |k: usize, name: &str, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        all_pass &= v.pass;
        println!(
            "criterion {k:>2} {name:<28} {} ({:.1}s) {}",
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
    };
    report(1, "noiseless completeness", &mut || {
        noiseless_completeness(&mut runs)
    });
    report(2, "oracle equivalence", &mut oracle_equivalence);
    report(3, "iteration bounds", &mut || iteration_bounds(&mut runs));
    report(4, "certificate iteration trend", &mut heuristic_trend);
    report(5, "noisy detection threshold", &mut noisy_detection);
    report(6, "undetected attack bound", &mut undetected_bound);
    report(7, "spectral helper bound", &mut spectral_helper);
    report(8, "vehicle closed loop", &mut closed_loop);
    report(9, "sat completeness", &mut sat_completeness);
    report(10, "uniqueness boundary", &mut uniqueness_boundary);
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
