use serde_json::{json, Value};

use qbd2d_core::efficiency::{find_lambda_star_with, table_sweep_with, EfficiencyResult};
use qbd2d_core::model::{validate_with, DEFAULT_IRREDUCIBILITY_LEVELS};
use qbd2d_core::simulate::{empirical_drift, occupancy_probe, ChainVariant, SimState, Start};
use qbd2d_core::stability::{
    classify_with, drift_axis_with, drift_plus, Axis, AxisDrift, DriftVector, StabilityOptions, Verdict,
};

use crate::args::{CommonArgs, EfficiencyArgs, Format, SimulateArgs, TableArgs, Tolerances, Variant};
use crate::output::{num, Report};
use crate::source::{self, resolve};

pub const EXIT_ERROR: u8 = 1;
pub const EXIT_INCONCLUSIVE: u8 = 2;

/// A finished command, ready to render.
pub struct Run {
    pub command: &'static str,
    pub model: String,
    pub params: Value,
    pub format: Format,
    pub report: Report,
    pub status: u8,
    /// One-line summary for stderr when `status` is nonzero.
    pub complaint: Option<String>,
}

fn options(t: &Tolerances) -> StabilityOptions {
    let mut opts = StabilityOptions { eps: t.eps, ..StabilityOptions::default() };
    if let Some(levels) = t.trunc {
        opts.axis_levels = levels;
    }
    opts
}

/// Nine decimals for humans; round-off noise prints as zero.
fn show(d: DriftVector) -> String {
    let clean = |x: f64| if x.abs() < 5e-10 { 0.0 } else { x };
    format!("({:.9}, {:.9})", clean(d.a1), clean(d.a2))
}

fn drift_fields(d: DriftVector) -> [String; 2] {
    [num(d.a1), num(d.a2)]
}

pub fn validate(args: CommonArgs) -> Result<Run, String> {
    let src = resolve(&args.model)?;
    let levels = args.tolerances.trunc.unwrap_or(DEFAULT_IRREDUCIBILITY_LEVELS);
    let report = validate_with(&src.model, levels);
    let mut out = Report { header: vec!["kind", "message"], ..Report::default() };
    out.line(if report.is_valid() { "valid" } else { "invalid" });
    for v in &report.violations {
        out.line(format!("violation: {v}"));
        out.row(vec!["violation".into(), v.to_string()]);
    }
    for w in &report.warnings {
        out.line(format!("warning: {w}"));
        out.row(vec!["warning".into(), w.to_string()]);
    }
    out.record(json!({
        "valid": report.is_valid(),
        "violations": report.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        "warnings": report.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
    }));
    let complaint = report.violations.first().map(|v| {
        format!("{} violation(s), first: {v}", report.violations.len())
    });
    Ok(Run {
        command: "validate",
        model: src.name().to_string(),
        params: src.params,
        format: args.format,
        report: out,
        status: if report.is_valid() { 0 } else { EXIT_ERROR },
        complaint,
    })
}

pub fn drift(args: CommonArgs) -> Result<Run, String> {
    let src = resolve(&args.model)?;
    let opts = options(&args.tolerances);
    let plus = drift_plus(&src.model).map_err(|e| e.to_string())?;
    let mut out = Report { header: vec!["chain", "a1", "a2", "status"], ..Report::default() };
    out.line(format!("plus:   {}", show(plus)));
    let [a1, a2] = drift_fields(plus);
    out.row(vec!["plus".into(), a1, a2, "defined".into()]);
    out.record(json!({ "chain": "plus", "drift": plus }));
    for axis in [Axis::One, Axis::Two] {
        let chain = format!("axis{axis}");
        match drift_axis_with(&src.model, axis, &opts).map_err(|e| e.to_string())? {
            AxisDrift::Defined { drift, .. } => {
                out.line(format!("{chain}:  {}", show(drift)));
                let [a1, a2] = drift_fields(drift);
                out.row(vec![chain.clone(), a1, a2, "defined".into()]);
                out.record(json!({ "chain": chain, "drift": drift }));
            }
            AxisDrift::Undefined(reason) => {
                out.line(format!("{chain}:  undefined ({reason})"));
                out.row(vec![chain.clone(), String::new(), String::new(), reason.to_string()]);
                out.record(json!({ "chain": chain, "drift": null, "reason": reason.to_string() }));
            }
        }
    }
    Ok(Run {
        command: "drift",
        model: src.name().to_string(),
        params: src.params,
        format: args.format,
        report: out,
        status: 0,
        complaint: None,
    })
}

pub fn classify(args: CommonArgs) -> Result<Run, String> {
    let src = resolve(&args.model)?;
    let c = classify_with(&src.model, &options(&args.tolerances)).map_err(|e| e.to_string())?;
    let mut out = Report {
        header: vec!["verdict", "case", "plus_a1", "plus_a2", "axis1_a1", "axis2_a2"],
        ..Report::default()
    };
    out.line(c.to_string());
    out.line(format!("  plus drift:   {}", show(c.plus)));
    let maybe = |d: Option<DriftVector>| d.map_or("undefined".to_string(), show);
    out.line(format!("  axis-1 drift: {}", maybe(c.axis1)));
    out.line(format!("  axis-2 drift: {}", maybe(c.axis2)));
    let [p1, p2] = drift_fields(c.plus);
    out.row(vec![
        c.verdict.to_string(),
        c.case.label().to_string(),
        p1,
        p2,
        c.axis1.map_or(String::new(), |d| num(d.a1)),
        c.axis2.map_or(String::new(), |d| num(d.a2)),
    ]);
    out.record(json!({ "classification": c.to_string(), "result": c }));
    let inconclusive = c.verdict == Verdict::Inconclusive;
    Ok(Run {
        command: "classify",
        model: src.name().to_string(),
        params: src.params,
        format: args.format,
        report: out,
        status: if inconclusive { EXIT_INCONCLUSIVE } else { 0 },
        complaint: inconclusive.then(|| c.to_string()),
    })
}

const TABLE_HEADER: [&str; 4] = ["fixed_rate", "lambda_star", "rho_star", "drift_residual"];

fn result_row(r: &EfficiencyResult) -> Vec<String> {
    vec![num(r.fixed_rate), num(r.lambda_star), num(r.rho_star), num(r.drift_at_root)]
}

pub fn efficiency(args: EfficiencyArgs) -> Result<Run, String> {
    let (family, params) = source::family(&args.model, args.scan)?;
    let bracket = match (args.lo, args.hi) {
        (None, None) => None,
        (lo, hi) => {
            let (dlo, dhi) = family.default_bracket();
            Some((lo.unwrap_or(dlo), hi.unwrap_or(dhi)))
        }
    };
    let r = find_lambda_star_with(&family, bracket, args.bisection_tol, &options(&args.tolerances))
        .map_err(|e| e.to_string())?;
    let mut out = Report { header: TABLE_HEADER.to_vec(), ..Report::default() };
    out.line(format!("lambda* = {}", r.lambda_star));
    out.line(format!("rho*    = {}", r.rho_star));
    out.line(format!("throughput = ({}, {})", r.throughput.0, r.throughput.1));
    out.line(format!("drift at root = {:e} after {} bisection steps", r.drift_at_root, r.iterations));
    out.row(result_row(&r));
    out.record(json!({ "result": r }));
    Ok(Run {
        command: "efficiency",
        model: family.name.clone(),
        params,
        format: args.format,
        report: out,
        status: 0,
        complaint: None,
    })
}

pub fn table(args: TableArgs) -> Result<Run, String> {
    let (family, mut params) = source::family(&args.model, args.scan)?;
    let grid = args.grid.map_or_else(|| source::default_grid(args.model.builtin), |g| g.0);
    params.as_object_mut().expect("object").remove(match args.scan {
        crate::args::Scan::L1 => "l2",
        crate::args::Scan::L2 => "l1",
    });
    params["grid"] = json!(grid);
    let rows = table_sweep_with(&family, &grid, None, args.bisection_tol, &options(&args.tolerances));
    let mut out = Report { header: TABLE_HEADER.to_vec(), ..Report::default() };
    out.line(format!("{:>10}  {:>12}  {:>10}  {:>14}", "fixed", "lambda*", "rho*", "drift residual"));
    let mut failures = Vec::new();
    for row in &rows {
        match &row.result {
            Ok(r) => {
                out.line(format!(
                    "{:>10}  {:>12.6}  {:>10.6}  {:>14.3e}",
                    r.fixed_rate, r.lambda_star, r.rho_star, r.drift_at_root
                ));
                out.row(result_row(r));
                out.record(json!({ "result": r }));
            }
            Err(e) => {
                out.line(format!("{:>10}  error: {e}", row.fixed_rate));
                out.row(vec![num(row.fixed_rate), String::new(), String::new(), String::new()]);
                out.record(json!({ "fixed_rate": row.fixed_rate, "error": e.to_string() }));
                failures.push(format!("fixed rate {}: {e}", row.fixed_rate));
            }
        }
    }
    Ok(Run {
        command: "table",
        model: family.name.clone(),
        params,
        format: args.format,
        report: out,
        status: if failures.is_empty() { 0 } else { EXIT_ERROR },
        complaint: (!failures.is_empty()).then(|| format!("{} row(s) failed, first: {}", failures.len(), failures[0])),
    })
}

pub fn simulate(args: SimulateArgs) -> Result<Run, String> {
    let src = resolve(&args.model)?;
    let mut out = Report::default();
    let mut params = src.params.clone();
    params["seed"] = json!(args.seed);
    if args.occupancy {
        let s = occupancy_probe(&src.model, args.steps, args.burn_in, args.seed).map_err(|e| e.to_string())?;
        out.header = vec!["samples", "mean_l1", "mean_l2", "origin_fraction", "early_l1", "early_l2", "late_l1", "late_l2"];
        out.line(format!("samples:         {}", s.samples));
        out.line(format!("mean levels:     ({}, {})", s.mean_l1, s.mean_l2));
        out.line(format!("origin fraction: {}", s.origin_fraction));
        out.line(format!("first 10%:       ({}, {})", s.early_mean.0, s.early_mean.1));
        out.line(format!("last 10%:        ({}, {})", s.late_mean.0, s.late_mean.1));
        out.row(vec![
            s.samples.to_string(),
            num(s.mean_l1),
            num(s.mean_l2),
            num(s.origin_fraction),
            num(s.early_mean.0),
            num(s.early_mean.1),
            num(s.late_mean.0),
            num(s.late_mean.1),
        ]);
        out.record(json!({ "occupancy": s, "burn_in": args.burn_in }));
    } else {
        let (variant, analytic) = match args.variant {
            Variant::Full => (ChainVariant::Full, None),
            Variant::Plus => (ChainVariant::Plus, drift_plus(&src.model).ok()),
            Variant::Axis1 => (ChainVariant::Axis1, drift_axis_with(&src.model, Axis::One, &StabilityOptions::default()).ok().and_then(|d| d.drift())),
            Variant::Axis2 => (ChainVariant::Axis2, drift_axis_with(&src.model, Axis::Two, &StabilityOptions::default()).ok().and_then(|d| d.drift())),
        };
        let start = match variant {
            ChainVariant::Full => Start::At(SimState::new(0, 0, 0)),
            _ => Start::Stationary,
        };
        let est = empirical_drift(&src.model, start, variant, args.steps, args.trials, args.seed)
            .map_err(|e| e.to_string())?;
        out.header = vec!["variant", "k", "trials", "nu", "mean_a1", "mean_a2", "stderr_a1", "stderr_a2"];
        out.line(format!("empirical drift: {} (stderr {})", show(est.mean), show(est.stderr)));
        if let Some(a) = analytic {
            out.line(format!("analytic drift:  {} ({:.2} stderr away)", show(a), est.z_score(a)));
        }
        out.line(format!("k = {}, trials = {}, nu = {}", est.k, est.trials, est.nu));
        out.row(vec![
            format!("{variant:?}").to_lowercase(),
            est.k.to_string(),
            est.trials.to_string(),
            num(est.nu),
            num(est.mean.a1),
            num(est.mean.a2),
            num(est.stderr.a1),
            num(est.stderr.a2),
        ]);
        out.record(json!({ "variant": format!("{variant:?}").to_lowercase(), "estimate": est, "analytic": analytic }));
    }
    Ok(Run {
        command: "simulate",
        model: src.name().to_string(),
        params,
        format: args.format,
        report: out,
        status: 0,
        complaint: None,
    })
}
