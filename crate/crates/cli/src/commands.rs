use anyhow::anyhow;
use serde_json::json;
use sse_core::attacksim::{simulate as run_scenario, AttackScenario};
use sse_core::bench::{run_bench, BenchReport, BenchSpec};
use sse_core::estimator::{delta_bound, estimate as run_estimate, minimal_support_estimate};
use sse_core::linmodel::{build_observability, compute_delta_s_with, compute_o_bar, DeltaOptions};
use sse_core::oracle::brute_force_capped;
use sse_core::{EstimatorConfig, Outcome, RobustnessConstants};

use crate::io::{emit, emit_json, fmt_f64, read_json, read_model, read_trace, window_from_trace};
use crate::{
    BenchArgs, CliResult, EstimateArgs, Failure, ObservabilityArgs, OracleArgs, SimulateArgs,
};

pub fn observability(args: &ObservabilityArgs) -> CliResult<()> {
    let model = read_model(&args.model)?;
    let stack = build_observability(&model)?;
    let p = model.p();
    let s_bar = model.s_bar();
    let mut warnings = Vec::new();
    if !model.budget_admits_uniqueness() {
        warnings.push(format!(
            "s_bar = {s_bar} is at least p/2 = {}: with that many attacked sensors the state cannot be reconstructed uniquely",
            p as f64 / 2.0
        ));
    }

    let max_s = args
        .max_s
        .unwrap_or(p.saturating_sub(1))
        .min(p.saturating_sub(1));
    let mut largest = None;
    for s in 0..=max_s {
        if stack.is_sparse_observable(s, args.cap)? {
            largest = Some(s);
        } else {
            break;
        }
    }
    match largest {
        None => warnings.push("the model is not observable from all sensors over the window".into()),
        Some(s) if s < 2 * s_bar && 2 * s_bar <= max_s => warnings.push(format!(
            "only {s}-sparse observable; unique recovery under budget {s_bar} needs {}-sparse observability",
            2 * s_bar
        )),
        _ => {}
    }

    let o_bar = compute_o_bar(&stack, p - s_bar, args.cap)?;
    let opts = DeltaOptions {
        attackable: args.attackable.clone(),
        allow_singular: args.allow_singular,
        cap: Some(args.cap),
    };
    let delta_s = compute_delta_s_with(&stack, s_bar, &opts)?;
    let constants = RobustnessConstants { o_bar, delta_s };
    let bounds = match delta_bound(&model, &constants, args.epsilon) {
        Ok(b) => json!(b),
        Err(e) => {
            warnings.push(format!("no detection threshold: {e}"));
            serde_json::Value::Null
        }
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    emit_json(
        args.out.as_deref(),
        &json!({
            "n": model.n(),
            "p": p,
            "m": model.m(),
            "tau": model.tau(),
            "s_bar": s_bar,
            "kernel_dims": stack.block_kernel_dims,
            "max_s_tested": max_s,
            "sparse_observability": largest,
            "noise_norm_sq": model.noise_norm_sq(),
            "o_bar": o_bar,
            "delta_s": delta_s,
            "bounds": bounds,
            "warnings": warnings,
        }),
    )
}

pub fn estimate(args: &EstimateArgs) -> CliResult<()> {
    let model = read_model(&args.model)?;
    let data = read_trace(&args.trace, model.p(), model.m())?;
    let window = window_from_trace(&model, &data, args.end_row)?;
    let stack = build_observability(&model)?;
    let config = EstimatorConfig {
        epsilon: args.epsilon,
        max_iterations: args.max_iterations,
        shrink_conflict: !args.no_shrink,
        ..EstimatorConfig::with_strategy(args.strategy.into())
    };
    let outcome = if args.minimal_support {
        minimal_support_estimate(&model, &stack, &window, &config)?
    } else {
        run_estimate(&model, &stack, &window, &config)?
    };
    emit_json(args.out.as_deref(), &outcome.report())?;
    match outcome {
        Outcome::Feasible(_) => Ok(()),
        Outcome::Infeasible(r) => Err(Failure::Infeasible(format!(
            "no attack support of size <= {} explains the window ({} iterations)",
            r.s_bar, r.iterations
        ))),
    }
}

pub fn simulate(args: &SimulateArgs, seed: Option<u64>) -> CliResult<()> {
    let mut scenario: AttackScenario = read_json(&args.scenario)?;
    if let Some(steps) = args.steps {
        scenario.steps = steps;
    }
    if let Some(st) = args.strategy {
        scenario.strategy = st.into();
    }
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let trace = run_scenario(&scenario)?;
    emit(args.out.as_deref(), &trace.to_csv_string())
}

pub fn bench(args: &BenchArgs, seed: Option<u64>) -> CliResult<()> {
    let mut spec: BenchSpec = read_json(&args.spec)?;
    spec.default_seed = seed.unwrap_or(spec.default_seed);
    let report = run_bench(&spec, args.jobs)?;
    for t in report.trials.iter().filter(|t| t.error.is_some()) {
        log::warn!(
            "sweep {} s {} trial {} {:?}: {}",
            t.sweep,
            t.s,
            t.trial,
            t.strategy,
            t.error.as_deref().unwrap_or("")
        );
    }
    emit(args.out.as_deref(), &bench_csv(&report)?)
}

pub const BENCH_HEADER: [&str; 19] = [
    "kind",
    "sweep",
    "trial",
    "n",
    "p",
    "s",
    "s_bar",
    "strategy",
    "seed",
    "iterations",
    "capped",
    "feasible",
    "support_ok",
    "wall_time",
    "estimation_error",
    "theoretical_bound",
    "geo_mean_iterations",
    "max_iterations",
    "error",
];

fn strategy_name(s: sse_core::Strategy) -> String {
    serde_json::to_value(s)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

/// Per-trial rows, then one aggregate row per (sweep, s, strategy).
pub fn bench_csv(report: &BenchReport) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Failure::Other(e.into());
    w.write_record(BENCH_HEADER).map_err(fail)?;
    for t in &report.trials {
        w.write_record([
            "trial".to_string(),
            t.sweep.to_string(),
            t.trial.to_string(),
            t.n.to_string(),
            t.p.to_string(),
            t.s.to_string(),
            t.s_bar.to_string(),
            strategy_name(t.strategy),
            t.seed.to_string(),
            t.iterations.to_string(),
            t.capped.to_string(),
            t.feasible.to_string(),
            t.support_ok.to_string(),
            fmt_f64(t.wall_time),
            fmt_f64(t.estimation_error),
            t.theoretical_bound.to_string(),
            String::new(),
            String::new(),
            t.error.clone().unwrap_or_default(),
        ])
        .map_err(fail)?;
    }
    for a in &report.aggregates {
        w.write_record([
            "aggregate".to_string(),
            a.sweep.to_string(),
            String::new(),
            a.n.to_string(),
            a.p.to_string(),
            a.s.to_string(),
            a.s_bar.to_string(),
            strategy_name(a.strategy),
            String::new(),
            String::new(),
            a.capped.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            sse_core::bench::theoretical_bound(a.strategy, a.p, a.s_bar).to_string(),
            fmt_f64(a.geo_mean_iterations),
            a.max_iterations.to_string(),
            if a.failures > 0 {
                format!("{} failed trials", a.failures)
            } else {
                String::new()
            },
        ])
        .map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Other(anyhow!("{e}")))?;
    String::from_utf8(bytes).map_err(|e| Failure::Other(e.into()))
}

pub fn oracle(args: &OracleArgs) -> CliResult<()> {
    let model = read_model(&args.model)?;
    let data = read_trace(&args.trace, model.p(), model.m())?;
    let window = window_from_trace(&model, &data, args.end_row)?;
    let stack = build_observability(&model)?;
    let s_bar = args.s_bar.unwrap_or(model.s_bar());
    let res = brute_force_capped(
        &stack,
        &window,
        model.noise_bounds(),
        s_bar,
        args.epsilon,
        args.cap,
    )?;
    let supports: Vec<_> = res
        .supports
        .iter()
        .map(|s| json!({"support": s.support, "x": s.x.iter().collect::<Vec<_>>(), "residual_sq": s.residual_sq}))
        .collect();
    let minimal: Vec<_> = res.minimal().iter().map(|s| s.support.clone()).collect();
    emit_json(
        args.out.as_deref(),
        &json!({
            "s_bar": s_bar,
            "checked": res.checked,
            "feasible": res.is_feasible(),
            "minimal": minimal,
            "unique_minimal": res.unique_minimal().is_some(),
            "supports": supports,
        }),
    )?;
    if res.is_feasible() {
        Ok(())
    } else {
        Err(Failure::Infeasible(format!(
            "no support of size <= {s_bar} explains the window"
        )))
    }
}
