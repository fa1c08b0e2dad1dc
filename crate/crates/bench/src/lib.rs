//! Fixtures shared by the benchmarks.

use qbd2d_core::efficiency::{ModelFamily, ScanRate};
use qbd2d_core::model::{build_additional_server, build_priority_setup, build_priority_setup_mapph, Map, PhaseType};
use qbd2d_core::stability::{induced_axis, Axis};
use qbd2d_core::qbd::QbdSpec;
use qbd2d_core::QbdModel;

/// Priority-setup models at increasing fractions of the stability boundary
/// `λ2* ≈ 0.821` for `λ1 = 0.1`.
pub fn priority_setup_loads() -> Vec<(f64, QbdModel)> {
    [0.5, 0.9, 0.99]
        .into_iter()
        .map(|frac| (frac, build_priority_setup(0.1, frac * 0.821, 1.0, 1.0, 2.0, 2.0).unwrap()))
        .collect()
}

pub fn axis_two_spec(model: &QbdModel) -> QbdSpec {
    induced_axis(model, Axis::Two).unwrap()
}

pub fn additional_server() -> QbdModel {
    build_additional_server(1.5, 1.2, 1.0, 1.0).unwrap()
}

/// Priority-setup with Erlang-`k` arrivals, services and setups.
pub fn erlang_priority_setup(k: usize) -> QbdModel {
    let arrivals = |rate: f64| Map::renewal(&PhaseType::erlang(k, 1.0 / rate).unwrap()).unwrap();
    let ph = |rate: f64| PhaseType::erlang(k, 1.0 / rate).unwrap();
    build_priority_setup_mapph(&arrivals(0.1), &arrivals(0.4), &ph(1.0), &ph(1.0), &ph(2.0), &ph(2.0)).unwrap()
}

pub fn priority_setup_family() -> ModelFamily {
    ModelFamily::priority_setup(ScanRate::Lambda2, 0.1, 1.0, 1.0, 2.0, 2.0)
}

pub fn additional_server_family() -> ModelFamily {
    ModelFamily::additional_server(ScanRate::Lambda2, 1.1, 1.0, 1.0)
}

pub fn grid(first: f64) -> Vec<f64> {
    (0..9).map(|i| first + 0.1 * i as f64).collect()
}
