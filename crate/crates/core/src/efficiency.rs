//! Maximum throughput of two-queue model families.
//!
//! One arrival rate is held fixed and the other is scanned. The stability
//! boundary is the root of the relevant axis drift, found by bisection; the
//! traffic intensity there is the efficiency `ρ* = (λ1·h1 + λ2·h2) / c`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{
    build_additional_server, build_independent_pair, build_priority_setup, build_priority_setup_mapph, Map,
    ModelError, PhaseType, QbdModel,
};
use crate::stability::{drift_axis_with, Axis, AxisDrift, StabilityError, StabilityOptions, UndefinedReason};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Gap between the default bracket and both zero and the `ρ = 1` bound.
pub const BRACKET_MARGIN: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum EfficiencyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error("axis-{axis} drift is undefined at scanned rate {rate}: {reason}")]
    DriftUndefined { rate: f64, axis: Axis, reason: UndefinedReason },
    #[error("no sign change in bracket [{lo}, {hi}]: drift is {f_lo} and {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("invalid bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },
}

/// Which arrival rate is scanned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScanRate {
    Lambda1,
    Lambda2,
}

impl ScanRate {
    /// Axis whose drift decides stability when this rate grows.
    pub fn axis(self) -> Axis {
        match self {
            ScanRate::Lambda1 => Axis::One,
            ScanRate::Lambda2 => Axis::Two,
        }
    }
}

impl fmt::Display for ScanRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanRate::Lambda1 => "l1",
            ScanRate::Lambda2 => "l2",
        })
    }
}

type Constructor = dyn Fn(f64, f64) -> Result<QbdModel, ModelError> + Send + Sync;

/// Models indexed by the arrival-rate pair `(λ1, λ2)`.
#[derive(Clone)]
pub struct ModelFamily {
    pub name: String,
    pub scan: ScanRate,
    pub fixed_rate: f64,
    /// Mean service times `(h1, h2)`.
    pub service_means: (f64, f64),
    pub servers: f64,
    constructor: Arc<Constructor>,
}

impl fmt::Debug for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelFamily")
            .field("name", &self.name)
            .field("scan", &self.scan)
            .field("fixed_rate", &self.fixed_rate)
            .field("service_means", &self.service_means)
            .field("servers", &self.servers)
            .finish_non_exhaustive()
    }
}

impl ModelFamily {
    pub fn new(
        name: impl Into<String>,
        scan: ScanRate,
        fixed_rate: f64,
        service_means: (f64, f64),
        servers: f64,
        constructor: impl Fn(f64, f64) -> Result<QbdModel, ModelError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            scan,
            fixed_rate,
            service_means,
            servers,
            constructor: Arc::new(constructor),
        }
    }

    /// Two queues with a single server, class-1 priority and setup times.
    pub fn priority_setup(scan: ScanRate, fixed_rate: f64, mu1: f64, mu2: f64, g1: f64, g2: f64) -> Self {
        Self::new("priority-setup", scan, fixed_rate, (1.0 / mu1, 1.0 / mu2), 1.0, move |l1, l2| {
            build_priority_setup(l1, l2, mu1, mu2, g1, g2)
        })
    }

    /// As [`ModelFamily::priority_setup`] with Erlang-`k` inter-arrival,
    /// service and setup times of the same means.
    pub fn priority_setup_mapph(
        scan: ScanRate,
        fixed_rate: f64,
        k: usize,
        mu1: f64,
        mu2: f64,
        g1: f64,
        g2: f64,
    ) -> Self {
        Self::new("priority-setup-mapph", scan, fixed_rate, (1.0 / mu1, 1.0 / mu2), 1.0, move |l1, l2| {
            let arrivals = |rate: f64| -> Result<Map, ModelError> {
                Map::renewal(&PhaseType::erlang(k, 1.0 / crate::model::check_rate("arrival rate", rate)?)?)
            };
            build_priority_setup_mapph(
                &arrivals(l1)?,
                &arrivals(l2)?,
                &PhaseType::erlang(k, 1.0 / mu1)?,
                &PhaseType::erlang(k, 1.0 / mu2)?,
                &PhaseType::erlang(k, 1.0 / g1)?,
                &PhaseType::erlang(k, 1.0 / g2)?,
            )
        })
    }

    /// Two queues with one dedicated server each and a shared third server.
    pub fn additional_server(scan: ScanRate, fixed_rate: f64, mu1: f64, mu2: f64) -> Self {
        Self::new("additional-server", scan, fixed_rate, (1.0 / mu1, 1.0 / mu2), 3.0, move |l1, l2| {
            build_additional_server(l1, l2, mu1, mu2)
        })
    }

    /// Two independent M/M/1 queues.
    pub fn independent_pair(scan: ScanRate, fixed_rate: f64, mu1: f64, mu2: f64) -> Self {
        Self::new("independent-pair", scan, fixed_rate, (1.0 / mu1, 1.0 / mu2), 2.0, move |l1, l2| {
            build_independent_pair(l1, l2, mu1, mu2)
        })
    }

    pub fn with_fixed_rate(&self, fixed_rate: f64) -> Self {
        Self { fixed_rate, ..self.clone() }
    }

    /// `(λ1, λ2)` with the scanned rate set to `rate`.
    pub fn rates(&self, rate: f64) -> (f64, f64) {
        match self.scan {
            ScanRate::Lambda1 => (rate, self.fixed_rate),
            ScanRate::Lambda2 => (self.fixed_rate, rate),
        }
    }

    pub fn model(&self, rate: f64) -> Result<QbdModel, ModelError> {
        let (l1, l2) = self.rates(rate);
        (self.constructor)(l1, l2)
    }

    pub fn traffic_intensity(&self, rate: f64) -> f64 {
        let (l1, l2) = self.rates(rate);
        (l1 * self.service_means.0 + l2 * self.service_means.1) / self.servers
    }

    /// Scanned rate at which the traffic intensity reaches 1.
    pub fn saturation_rate(&self) -> f64 {
        let (h_fixed, h_scan) = match self.scan {
            ScanRate::Lambda1 => (self.service_means.1, self.service_means.0),
            ScanRate::Lambda2 => (self.service_means.0, self.service_means.1),
        };
        (self.servers - self.fixed_rate * h_fixed) / h_scan
    }

    pub fn default_bracket(&self) -> (f64, f64) {
        (BRACKET_MARGIN, self.saturation_rate() - BRACKET_MARGIN)
    }
}

/// The axis drift that decides stability as the scanned rate varies.
pub fn drift_of_lambda(family: &ModelFamily, rate: f64) -> Result<f64, EfficiencyError> {
    drift_of_lambda_with(family, rate, &StabilityOptions::default())
}

pub fn drift_of_lambda_with(family: &ModelFamily, rate: f64, opts: &StabilityOptions) -> Result<f64, EfficiencyError> {
    let model = family.model(rate)?;
    let axis = family.scan.axis();
    match drift_axis_with(&model, axis, opts)? {
        AxisDrift::Defined { drift, .. } => Ok(drift.get(axis)),
        AxisDrift::Undefined(reason) => Err(EfficiencyError::DriftUndefined { rate, axis, reason }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyResult {
    pub fixed_rate: f64,
    pub lambda_star: f64,
    pub rho_star: f64,
    /// `(λ1, λ2)` at the root.
    pub throughput: (f64, f64),
    pub drift_at_root: f64,
    pub iterations: usize,
}

/// Bisects the axis drift on `bracket` (default: [`ModelFamily::default_bracket`])
/// until the bracket is at most `tol` wide.
pub fn find_lambda_star(
    family: &ModelFamily,
    bracket: Option<(f64, f64)>,
    tol: f64,
) -> Result<EfficiencyResult, EfficiencyError> {
    find_lambda_star_with(family, bracket, tol, &StabilityOptions::default())
}

pub fn find_lambda_star_with(
    family: &ModelFamily,
    bracket: Option<(f64, f64)>,
    tol: f64,
    opts: &StabilityOptions,
) -> Result<EfficiencyResult, EfficiencyError> {
    let drift_of_lambda = |family: &ModelFamily, rate: f64| drift_of_lambda_with(family, rate, opts);
    let (mut lo, mut hi) = bracket.unwrap_or_else(|| family.default_bracket());
    if !(lo.is_finite() && hi.is_finite() && lo < hi && lo > 0.0 && tol > 0.0) {
        return Err(EfficiencyError::InvalidBracket { lo, hi });
    }
    let f_lo = drift_of_lambda(family, lo)?;
    let f_hi = drift_of_lambda(family, hi)?;
    if f_lo == 0.0 {
        return Ok(result(family, lo, 0.0, 0));
    }
    if f_hi == 0.0 {
        return Ok(result(family, hi, 0.0, 0));
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(EfficiencyError::NoSignChange { lo, hi, f_lo, f_hi });
    }
    let lo_negative = f_lo < 0.0;
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = drift_of_lambda(family, mid)?;
        iterations += 1;
        if f_mid == 0.0 {
            return Ok(result(family, mid, 0.0, iterations));
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let drift_at_root = drift_of_lambda(family, root)?;
    Ok(result(family, root, drift_at_root, iterations))
}

fn result(family: &ModelFamily, root: f64, drift_at_root: f64, iterations: usize) -> EfficiencyResult {
    EfficiencyResult {
        fixed_rate: family.fixed_rate,
        lambda_star: root,
        rho_star: family.traffic_intensity(root),
        throughput: family.rates(root),
        drift_at_root,
        iterations,
    }
}

#[derive(Debug)]
pub struct TableRow {
    pub fixed_rate: f64,
    pub result: Result<EfficiencyResult, EfficiencyError>,
}

/// One [`find_lambda_star`] per fixed rate in `grid`, evaluated in parallel,
/// rows in grid order. Failures are kept in their row.
pub fn table_sweep(family: &ModelFamily, grid: &[f64], bracket: Option<(f64, f64)>, tol: f64) -> Vec<TableRow> {
    table_sweep_with(family, grid, bracket, tol, &StabilityOptions::default())
}

pub fn table_sweep_with(
    family: &ModelFamily,
    grid: &[f64],
    bracket: Option<(f64, f64)>,
    tol: f64,
    opts: &StabilityOptions,
) -> Vec<TableRow> {
    grid.par_iter()
        .map(|&fixed_rate| TableRow {
            fixed_rate,
            result: find_lambda_star_with(&family.with_fixed_rate(fixed_rate), bracket, tol, opts),
        })
        .collect()
}
