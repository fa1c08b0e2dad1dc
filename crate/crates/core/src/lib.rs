//! Stability classification and efficiency analysis of two-dimensional
//! quasi-birth-and-death processes.

pub mod ctmc;
pub mod efficiency;
pub mod model;
pub mod qbd;
pub mod simulate;
pub mod stability;

pub use model::{BlockKey, Matrix, ModelError, PhaseLayout, QbdModel, Region};
pub use stability::{classify, drift_axis, drift_plus, Axis, Classification, DriftVector, Verdict};
pub use efficiency::{find_lambda_star, table_sweep, EfficiencyResult, ModelFamily, ScanRate};
pub use simulate::{empirical_drift, occupancy_probe, ChainVariant, EmpiricalDrift, SimState, Simulator, Start};
