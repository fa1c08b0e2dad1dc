//! End-to-end acceptance checks. Prints one `[PASS]`/`[FAIL]` line per
//! criterion and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use qbd2d_core::ctmc;
use qbd2d_core::efficiency::{find_lambda_star, ModelFamily, ScanRate, DEFAULT_TOLERANCE};
use qbd2d_core::model::{build_additional_server, build_priority_setup, BlockKey, BlockSet, Matrix, PhaseLayout};
use qbd2d_core::qbd::{minimal_rate_matrix, solve_qbd};
use qbd2d_core::simulate::{empirical_drift, ChainVariant, Start};
use qbd2d_core::stability::{
    classify, classify_axis_chain, drift_axis, drift_plus, induced_axis, Axis, AxisClassStructure, AxisDrift,
    DriftVector, StabilityError, StabilityOptions, Verdict,
};
use qbd2d_core::QbdModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIORITY_SETUP_L1: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const PRIORITY_SETUP_L2: [f64; 9] = [0.821, 0.678, 0.557, 0.453, 0.361, 0.278, 0.202, 0.131, 0.064];
const PRIORITY_SETUP_RHO: [f64; 9] = [0.922, 0.878, 0.857, 0.853, 0.861, 0.878, 0.902, 0.931, 0.964];
const ADDITIONAL_SERVER_L1: [f64; 9] = [1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9];
const ADDITIONAL_SERVER_L2: [f64; 9] = [1.610, 1.550, 1.488, 1.424, 1.357, 1.289, 1.219, 1.147, 1.074];
const ADDITIONAL_SERVER_RHO: [f64; 9] = [0.903, 0.917, 0.929, 0.941, 0.952, 0.963, 0.973, 0.982, 0.991];

const TABLE_TOLERANCE: f64 = 1e-3;
const DRAWS: usize = 100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn table(family: &ModelFamily, l1: &[f64], l2: &[f64], rho: &[f64]) -> Outcome {
    let start = Instant::now();
    let mut worst = (0.0_f64, 0.0_f64);
    let mut failures = Vec::new();
    for ((&fixed, &want_l2), &want_rho) in l1.iter().zip(l2).zip(rho) {
        match find_lambda_star(&family.with_fixed_rate(fixed), None, DEFAULT_TOLERANCE) {
            Ok(r) => {
                let (e_l, e_r) = ((r.lambda_star - want_l2).abs(), (r.rho_star - want_rho).abs());
                worst = (worst.0.max(e_l), worst.1.max(e_r));
                if e_l > TABLE_TOLERANCE || e_r > TABLE_TOLERANCE {
                    failures.push(format!("l1={fixed}: l2*={:.4} rho*={:.4}", r.lambda_star, r.rho_star));
                }
            }
            Err(e) => failures.push(format!("l1={fixed}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    let slow = elapsed > Duration::from_secs(5);
    let mut detail = format!(
        "max |dl2*| = {:.2e}, max |drho*| = {:.2e}, {:.2?}",
        worst.0, worst.1, elapsed
    );
    if slow {
        detail.push_str(" (over 5 s)");
    }
    if !failures.is_empty() {
        detail = format!("{detail}; {}", failures.join("; "));
    }
    outcome(failures.is_empty() && !slow, detail)
}

fn random_priority_setup(rng: &mut ChaCha8Rng) -> (QbdModel, [f64; 6]) {
    let p = [
        rng.random_range(0.05..1.5),
        rng.random_range(0.05..1.5),
        rng.random_range(0.5..2.0),
        rng.random_range(0.5..2.0),
        rng.random_range(0.5..4.0),
        rng.random_range(0.5..4.0),
    ];
    (build_priority_setup(p[0], p[1], p[2], p[3], p[4], p[5]).unwrap(), p)
}

fn random_additional_server(rng: &mut ChaCha8Rng) -> (QbdModel, [f64; 4]) {
    let p = [
        rng.random_range(0.05..3.0),
        rng.random_range(0.05..2.0),
        rng.random_range(0.5..2.0),
        rng.random_range(0.5..2.0),
    ];
    (build_additional_server(p[0], p[1], p[2], p[3]).unwrap(), p)
}

fn ac3_exact_plus_drift() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0_f64;
    let mut failures = 0;
    for _ in 0..DRAWS {
        let checks = [
            {
                let (m, p) = random_priority_setup(&mut rng);
                (m, DriftVector::new(p[0] - p[2], p[1]))
            },
            {
                let (m, p) = random_additional_server(&mut rng);
                (m, DriftVector::new(p[0] - 2.0 * p[2], p[1] - p[3]))
            },
        ];
        for (model, want) in checks {
            let scale = model.max_rate();
            match drift_plus(&model) {
                Ok(got) => {
                    let err = (got.a1 - want.a1).abs().max((got.a2 - want.a2).abs()) / scale;
                    worst = worst.max(err);
                    if err > 1e-14 {
                        failures += 1;
                    }
                }
                Err(_) => failures += 1,
            }
        }
    }
    outcome(
        failures == 0,
        format!("{} models, max error {worst:.1e} x max rate, {failures} failures", 2 * DRAWS),
    )
}

/// Runs AC4 and records every rate-matrix residual seen along the way.
fn ac4_consistency(residuals: &mut Vec<f64>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut defined, mut worst, mut errors) = (0, 0.0_f64, Vec::new());
    for _ in 0..DRAWS {
        let models = [random_priority_setup(&mut rng).0, random_additional_server(&mut rng).0];
        for model in &models {
            for axis in [Axis::One, Axis::Two] {
                match drift_axis(model, axis) {
                    Ok(AxisDrift::Defined { drift, solution }) => {
                        defined += 1;
                        worst = worst.max(drift.get(axis.other()).abs());
                        let spec = induced_axis(model, axis).unwrap();
                        residuals.push(solution.r.residual(&spec.aup, &spec.a0, &spec.adown));
                    }
                    Ok(AxisDrift::Undefined(_)) => {}
                    Err(e) => errors.push(format!("{}: {e}", model.name())),
                }
            }
        }
    }
    let pass = errors.is_empty() && worst <= 1e-8 && defined > 0;
    let mut detail = format!("{defined} defined axis drifts, max orthogonal component {worst:.1e}");
    if !errors.is_empty() {
        detail = format!("{detail}; {} errors, first: {}", errors.len(), errors[0]);
    }
    outcome(pass, detail)
}

fn ac5_rate_matrix(residuals: &mut Vec<f64>) -> Outcome {
    let mut mm1 = 0.0_f64;
    for (lambda, mu) in [(0.3, 1.0), (0.5, 1.0), (0.9, 1.0), (1.7, 2.5)] {
        let s = |v: f64| Matrix::from_element(1, 1, v);
        let r = minimal_rate_matrix(&s(lambda), &s(-(lambda + mu)), &s(mu)).unwrap();
        mm1 = mm1.max((r.r[(0, 0)] - lambda / mu).abs());
    }
    let model = build_priority_setup(0.1, 0.5, 1.0, 1.0, 2.0, 2.0).unwrap();
    let spec = induced_axis(&model, Axis::Two).unwrap();
    let r = minimal_rate_matrix(&spec.aup, &spec.a0, &spec.adown).unwrap();
    residuals.push(r.residual(&spec.aup, &spec.a0, &spec.adown));
    for (l1, l2) in PRIORITY_SETUP_L1.iter().zip(PRIORITY_SETUP_L2) {
        let model = build_priority_setup(*l1, l2 - 0.01, 1.0, 1.0, 2.0, 2.0).unwrap();
        if let Ok(AxisDrift::Defined { solution, .. }) = drift_axis(&model, Axis::Two) {
            let spec = induced_axis(&model, Axis::Two).unwrap();
            residuals.push(solution.r.residual(&spec.aup, &spec.a0, &spec.adown));
        }
    }
    let worst = residuals.iter().fold(0.0_f64, |m, r| m.max(*r));
    outcome(
        worst <= 1e-10 && mm1 <= 1e-12,
        format!("{} solves, max residual {worst:.1e}; M/M/1 max |R - l/m| = {mm1:.1e}", residuals.len()),
    )
}

fn ac6_truncation() -> Outcome {
    let model = build_priority_setup(0.1, 0.5, 1.0, 1.0, 2.0, 2.0).unwrap();
    let spec = induced_axis(&model, Axis::Two).unwrap();
    let sol = solve_qbd(&spec).unwrap();
    let g = spec.truncated_generator(60);
    let dense = ctmc::stationary(&g).unwrap();
    let (sb, si) = (spec.boundary_phases(), spec.interior_phases());
    let mut tv = 0.0;
    for l in 0..=5 {
        let exact = sol.level_distribution(l);
        let offset = if l == 0 { 0 } else { sb + (l - 1) * si };
        for (i, p) in exact.iter().enumerate() {
            tv += (p - dense[offset + i]).abs();
        }
    }
    tv /= 2.0;
    outcome(tv <= 1e-6, format!("total variation on levels 0-5 = {tv:.1e}"))
}

/// Compares an empirical drift with its analytic value, retrying once with
/// a fresh seed.
fn agrees(model: &QbdModel, variant: ChainVariant, want: DriftVector, seed: u64) -> Result<f64, String> {
    let mut z = f64::INFINITY;
    for attempt in 0..2 {
        let est = empirical_drift(model, Start::Stationary, variant, 100_000, 200, seed + attempt)
            .map_err(|e| e.to_string())?;
        z = est.z_score(want);
        if z <= 3.0 {
            return Ok(z);
        }
    }
    Err(format!("{} {variant:?}: {z:.2} stderr", model.name()))
}

fn ac7_simulation() -> Outcome {
    let start = Instant::now();
    let models = [
        build_priority_setup(0.1, 0.5, 1.0, 1.0, 2.0, 2.0).unwrap(),
        build_priority_setup(0.4, 0.3, 1.0, 1.0, 2.0, 2.0).unwrap(),
        build_additional_server(1.5, 0.8, 1.0, 1.0).unwrap(),
        build_additional_server(0.8, 1.2, 1.0, 1.0).unwrap(),
    ];
    let (mut comparisons, mut worst, mut failures) = (0, 0.0_f64, Vec::new());
    for (i, model) in models.iter().enumerate() {
        let mut targets = vec![(ChainVariant::Plus, drift_plus(model).unwrap())];
        for (axis, variant) in [(Axis::One, ChainVariant::Axis1), (Axis::Two, ChainVariant::Axis2)] {
            if let Some(d) = drift_axis(model, axis).unwrap().drift() {
                targets.push((variant, d));
            }
        }
        for (j, (variant, want)) in targets.into_iter().enumerate() {
            comparisons += 1;
            match agrees(model, variant, want, 1000 * i as u64 + 10 * j as u64) {
                Ok(z) => worst = worst.max(z),
                Err(e) => failures.push(e),
            }
        }
    }
    let elapsed = start.elapsed();
    let slow = elapsed > Duration::from_secs(60);
    let mut detail = format!("{comparisons} comparisons, max {worst:.2} stderr, {elapsed:.2?}");
    if slow {
        detail.push_str(" (over 60 s)");
    }
    if !failures.is_empty() {
        detail = format!("{detail}; {}", failures.join("; "));
    }
    outcome(failures.is_empty() && !slow && comparisons >= 8, detail)
}

fn ac8_boundary() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0;
    let cases = PRIORITY_SETUP_L1
        .iter()
        .zip(PRIORITY_SETUP_L2)
        .map(|(&l1, l2)| (l1, l2, true))
        .chain(ADDITIONAL_SERVER_L1.iter().zip(ADDITIONAL_SERVER_L2).map(|(&l1, l2)| (l1, l2, false)));
    for (l1, l2, first) in cases {
        for (offset, want) in [(-0.01, Verdict::PositiveRecurrent), (0.01, Verdict::Transient)] {
            let model = if first {
                build_priority_setup(l1, l2 + offset, 1.0, 1.0, 2.0, 2.0)
            } else {
                build_additional_server(l1, l2 + offset, 1.0, 1.0)
            }
            .unwrap();
            checked += 1;
            match classify(&model) {
                Ok(c) if c.verdict == want => {}
                Ok(c) => failures.push(format!("{} ({l1}, {:.3}): {c}", model.name(), l2 + offset)),
                Err(e) => failures.push(format!("{} ({l1}, {:.3}): {e}", model.name(), l2 + offset)),
            }
        }
    }
    let mut detail = format!("{checked} classifications");
    if !failures.is_empty() {
        detail = format!("{detail}; {}", failures.join("; "));
    }
    outcome(failures.is_empty(), detail)
}

/// Interior phases that never switch: two closed classes.
fn two_class_model() -> QbdModel {
    let mut b = BlockSet::zeros(PhaseLayout::new(1, 1, 1, 2).unwrap());
    let s = |v: f64| Matrix::from_element(1, 1, v);
    let d = |a: f64, c: f64| Matrix::from_row_slice(1, 2, &[a, c]);
    let col = |a: f64, c: f64| Matrix::from_row_slice(2, 1, &[a, c]);
    let diag = |a: f64, c: f64| Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![a, c]));
    let (lambda, mu) = (0.3, 1.0);
    b.set(BlockKey::plus(1, 0), diag(lambda, lambda)).unwrap();
    b.set(BlockKey::plus(0, 1), diag(lambda, lambda)).unwrap();
    b.set(BlockKey::plus(-1, 0), diag(mu, mu)).unwrap();
    b.set(BlockKey::plus(0, -1), diag(mu, mu)).unwrap();
    b.set(BlockKey::plus(0, 0), diag(-2.0 * (lambda + mu), -2.0 * (lambda + mu))).unwrap();
    b.set(BlockKey::origin(0, 0), s(-2.0 * lambda)).unwrap();
    b.set(BlockKey::origin(1, 0), s(lambda)).unwrap();
    b.set(BlockKey::origin(0, 1), s(lambda)).unwrap();
    b.set(BlockKey::origin(-1, 0), s(mu)).unwrap();
    b.set(BlockKey::origin(0, -1), s(mu)).unwrap();
    b.set(BlockKey::axis1(0, 0), s(-(2.0 * lambda + mu))).unwrap();
    b.set(BlockKey::axis1(1, 0), s(lambda)).unwrap();
    b.set(BlockKey::axis1(-1, 0), s(mu)).unwrap();
    b.set(BlockKey::axis1(0, 1), d(lambda / 2.0, lambda / 2.0)).unwrap();
    b.set(BlockKey::axis2(0, 0), s(-(2.0 * lambda + mu))).unwrap();
    b.set(BlockKey::axis2(0, 1), s(lambda)).unwrap();
    b.set(BlockKey::axis2(0, -1), s(mu)).unwrap();
    b.set(BlockKey::axis2(1, 0), d(lambda / 2.0, lambda / 2.0)).unwrap();
    b.set(BlockKey::axis1(0, -1), col(mu, mu)).unwrap();
    b.set(BlockKey::axis2(-1, 0), col(mu, mu)).unwrap();
    b.build("two-class").unwrap()
}

fn ac9_assumptions() -> Outcome {
    let two = two_class_model();
    let plus = drift_plus(&two);
    let classified = classify(&two);
    let rejects = matches!(plus, Err(StabilityError::Assumption2 { closed_classes: 2 }))
        && matches!(classified, Err(StabilityError::Assumption2 { closed_classes: 2 }));

    let model = build_priority_setup(0.1, 0.5, 1.0, 1.0, 2.0, 2.0).unwrap();
    let structure = classify_axis_chain(&model, Axis::One, StabilityOptions::default().axis_levels);
    let axis1 = drift_axis(&model, Axis::One);
    let absent = matches!(structure, Ok(AxisClassStructure::NoIrreducibleClass))
        && matches!(axis1, Ok(AxisDrift::Undefined(_)));
    outcome(
        rejects && absent,
        format!(
            "two-class model: {}; priority-setup axis 1: {:?}, drift {}",
            match &classified {
                Err(e) => e.to_string(),
                Ok(c) => c.to_string(),
            },
            structure,
            if absent { "absent" } else { "present" }
        ),
    )
}

fn main() -> ExitCode {
    let mut residuals = Vec::new();
    let t1 = ModelFamily::priority_setup(ScanRate::Lambda2, 0.1, 1.0, 1.0, 2.0, 2.0);
    let t2 = ModelFamily::additional_server(ScanRate::Lambda2, 1.1, 1.0, 1.0);
    let results = [
        ("AC1 priority-setup efficiency table", table(&t1, &PRIORITY_SETUP_L1, &PRIORITY_SETUP_L2, &PRIORITY_SETUP_RHO)),
        ("AC2 additional-server efficiency table", table(&t2, &ADDITIONAL_SERVER_L1, &ADDITIONAL_SERVER_L2, &ADDITIONAL_SERVER_RHO)),
        ("AC3 exact interior drift", ac3_exact_plus_drift()),
        ("AC4 orthogonal axis drift vanishes", ac4_consistency(&mut residuals)),
        ("AC5 rate-matrix residual", ac5_rate_matrix(&mut residuals)),
        ("AC6 truncation oracle", ac6_truncation()),
        ("AC7 simulation agrees with analysis", ac7_simulation()),
        ("AC8 classification flips at the boundary", ac8_boundary()),
        ("AC9 assumption violations", ac9_assumptions()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
