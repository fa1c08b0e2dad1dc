//! Induced chains, mean drift vectors and the stability verdict.
//!
//! Removing both boundaries leaves the phase process on the interior phases
//! (generator `A+_{*,*}`). Removing only the l2-axis boundary keeps `l2` as a
//! level and lets `l1` run free; this is the axis-1 chain, a one-dimensional
//! QBD whose boundary phases are the l1-axis phases. The axis-2 chain is the
//! mirror image.

use std::fmt;

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::ctmc::{self, CtmcError};
use crate::model::{BlockKey, Matrix, QbdModel, Region};
use crate::qbd::{solve_qbd, QbdError, QbdSolution, QbdSpec};

/// Tolerance of the identity that the orthogonal axis drift vanishes.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("Assumption 2 violated: the interior phase process has {closed_classes} closed classes, expected exactly one")]
    Assumption2 { closed_classes: usize },
    #[error("Assumption 3 violated: the axis-{axis} chain has {closed_classes} irreducible classes, expected at most one")]
    Assumption3 { axis: Axis, closed_classes: usize },
    #[error("axis-{axis} chain: {source}")]
    Qbd { axis: Axis, source: QbdError },
    #[error("axis-{axis} drift: orthogonal component {value:e} should vanish")]
    Inconsistent { axis: Axis, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DriftVector {
    pub a1: f64,
    pub a2: f64,
}

impl DriftVector {
    pub fn new(a1: f64, a2: f64) -> Self {
        Self { a1, a2 }
    }

    pub fn get(&self, axis: Axis) -> f64 {
        match axis {
            Axis::One => self.a1,
            Axis::Two => self.a2,
        }
    }
}

impl fmt::Display for DriftVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a1, self.a2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Axis {
    One,
    Two,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::One => Axis::Two,
            Axis::Two => Axis::One,
        }
    }

    fn region(self) -> Region {
        match self {
            Axis::One => Region::Axis1,
            Axis::Two => Region::Axis2,
        }
    }

    /// Block of `region` for a step of `free` along this axis and `level`
    /// along the other one.
    fn key(self, region: Region, free: i64, level: i64) -> BlockKey {
        let (k1, k2) = match self {
            Axis::One => (free, level),
            Axis::Two => (level, free),
        };
        BlockKey::new(region, k1, k2).expect("steps are in {-1,0,1}")
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::One => "1",
            Axis::Two => "2",
        })
    }
}

/// `A+_{*,*}`, the sum of all interior blocks.
pub fn induced_plus(model: &QbdModel) -> Matrix {
    let n = model.layout().splus;
    model
        .blocks()
        .filter(|(k, _)| k.region() == Region::Interior)
        .fold(Matrix::zeros(n, n), |acc, (_, m)| acc + m)
}

/// Sum of `weight(k1, k2) · A+_{k1,k2} · 1`.
fn weighted_exit(model: &QbdModel, region: Region, weight: impl Fn(i64, i64) -> f64) -> DVector<f64> {
    let mut out: Option<DVector<f64>> = None;
    for (key, m) in model.blocks().filter(|(k, _)| k.region() == region) {
        let w = weight(key.k1(), key.k2());
        let v = m * DVector::from_element(m.ncols(), w);
        out = Some(match out {
            Some(acc) => acc + v,
            None => v,
        });
    }
    out.expect("every region has nine blocks")
}

pub fn drift_plus(model: &QbdModel) -> Result<DriftVector, StabilityError> {
    let pi = ctmc::stationary(&induced_plus(model)).map_err(|e| match e {
        CtmcError::ClosedClassCount { found } => StabilityError::Assumption2 { closed_classes: found },
        other => unreachable!("interior phase generator is square: {other}"),
    })?;
    let a1 = pi.dot(&weighted_exit(model, Region::Interior, |k1, _| k1 as f64));
    let a2 = pi.dot(&weighted_exit(model, Region::Interior, |_, k2| k2 as f64));
    Ok(DriftVector { a1, a2 })
}

/// One-dimensional QBD obtained by letting `axis` run free. Its level is
/// the other coordinate.
pub fn induced_axis(model: &QbdModel, axis: Axis) -> Result<QbdSpec, StabilityError> {
    let sum = |region: Region, level: i64| {
        (-1..=1)
            .map(|free| model.block(axis.key(region, free, level)).clone())
            .reduce(|a, b| a + b)
            .expect("three steps")
    };
    let boundary = axis.region();
    QbdSpec::new(
        sum(boundary, 0),
        sum(boundary, 1),
        sum(boundary, -1),
        sum(Region::Interior, -1),
        sum(Region::Interior, 0),
        sum(Region::Interior, 1),
    )
    .map_err(|source| StabilityError::Qbd { axis, source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AxisClassStructure {
    NoIrreducibleClass,
    OneIrreducibleClass,
    ViolatesAssumption3 { classes: usize },
}

impl fmt::Display for AxisClassStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisClassStructure::NoIrreducibleClass => f.write_str("NoIrreducibleClass"),
            AxisClassStructure::OneIrreducibleClass => f.write_str("OneIrreducibleClass"),
            AxisClassStructure::ViolatesAssumption3 { classes } => {
                write!(f, "ViolatesAssumption3 ({classes} irreducible classes)")
            }
        }
    }
}

/// Counts irreducible classes of the axis chain on a level truncation.
///
/// A closed class of the truncated chain is kept if it reaches every level up
/// to the cap (an infinite irreducible class always does). A class confined
/// to low levels is a finite irreducible class. A class that only lives near
/// the cap is produced by the truncation itself (mass escaping upward) and is
/// ignored.
pub fn classify_axis_chain(model: &QbdModel, axis: Axis, levels: usize) -> Result<AxisClassStructure, StabilityError> {
    let spec = induced_axis(model, axis)?;
    let levels = levels.max(2);
    let g = spec.truncated_generator(levels);
    let (sb, si) = (spec.boundary_phases(), spec.interior_phases());
    let level_of = |s: usize| if s < sb { 0 } else { (s - sb) / si + 1 };

    let mut genuine = 0;
    for class in ctmc::closed_classes_tol(&g, 1e-13 * g.amax()) {
        let mut seen = vec![false; levels + 1];
        for &s in &class {
            seen[level_of(s)] = true;
        }
        if !seen[levels] || seen.iter().all(|&x| x) {
            genuine += 1;
        }
    }
    Ok(match genuine {
        0 => AxisClassStructure::NoIrreducibleClass,
        1 => AxisClassStructure::OneIrreducibleClass,
        classes => AxisClassStructure::ViolatesAssumption3 { classes },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum UndefinedReason {
    /// The plus-chain drift along the level coordinate is not negative, so
    /// the axis chain is null recurrent or transient.
    LevelDriftNotNegative { value: f64 },
    NoIrreducibleClass,
}

impl fmt::Display for UndefinedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UndefinedReason::LevelDriftNotNegative { value } => {
                write!(f, "level-direction drift {value} is not negative")
            }
            UndefinedReason::NoIrreducibleClass => f.write_str("the chain has no irreducible class"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AxisDrift {
    Defined { drift: DriftVector, solution: Box<QbdSolution> },
    Undefined(UndefinedReason),
}

impl AxisDrift {
    pub fn drift(&self) -> Option<DriftVector> {
        match self {
            AxisDrift::Defined { drift, .. } => Some(*drift),
            AxisDrift::Undefined(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityOptions {
    /// Zero band for sign tests, relative to the model's largest rate.
    pub eps: f64,
    /// Level cap of the truncation used by [`classify_axis_chain`].
    pub axis_levels: usize,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { eps: 1e-9, axis_levels: 40 }
    }
}

pub fn drift_axis(model: &QbdModel, axis: Axis) -> Result<AxisDrift, StabilityError> {
    drift_axis_with(model, axis, &StabilityOptions::default())
}

pub fn drift_axis_with(model: &QbdModel, axis: Axis, opts: &StabilityOptions) -> Result<AxisDrift, StabilityError> {
    let plus = drift_plus(model)?;
    let level_drift = plus.get(axis.other());
    if Sign::of(level_drift, model, opts.eps) != Sign::Negative {
        return Ok(AxisDrift::Undefined(UndefinedReason::LevelDriftNotNegative { value: level_drift }));
    }
    match classify_axis_chain(model, axis, opts.axis_levels)? {
        AxisClassStructure::NoIrreducibleClass => {
            return Ok(AxisDrift::Undefined(UndefinedReason::NoIrreducibleClass));
        }
        AxisClassStructure::ViolatesAssumption3 { classes } => {
            return Err(StabilityError::Assumption3 { axis, closed_classes: classes });
        }
        AxisClassStructure::OneIrreducibleClass => {}
    }

    let spec = induced_axis(model, axis)?;
    let sol = solve_qbd(&spec).map_err(|source| StabilityError::Qbd { axis, source })?;

    // Mean rate of change of the free coordinate (weight = free step) and of
    // the level coordinate (weight = level step), split into the boundary
    // level, level 1 and the geometric tail from level 2 on.
    let component = |weight: &dyn Fn(i64, i64) -> f64| {
        let boundary = axis.region();
        let exit = |region: Region, levels: &[i64]| -> DVector<f64> {
            let mut acc: Option<DVector<f64>> = None;
            for free in -1..=1 {
                for &level in levels {
                    let m = model.block(axis.key(region, free, level));
                    let v = m * DVector::from_element(m.ncols(), weight(free, level));
                    acc = Some(match acc {
                        Some(a) => a + v,
                        None => v,
                    });
                }
            }
            acc.expect("nonempty")
        };
        let at0 = exit(boundary, &[0, 1]);
        let at1 = exit(boundary, &[-1]) + exit(Region::Interior, &[0, 1]);
        let tail = exit(Region::Interior, &[-1, 0, 1]);
        sol.pi0.dot(&at0) + sol.pi1.dot(&at1) + sol.pi2.dot(&(sol.tail_factor() * tail))
    };
    let along = component(&|free, _| free as f64);
    let across = component(&|_, level| level as f64);

    if across.abs() > CONSISTENCY_TOLERANCE * model.max_rate().max(1.0) {
        return Err(StabilityError::Inconsistent { axis, value: across });
    }
    let drift = match axis {
        Axis::One => DriftVector::new(along, across),
        Axis::Two => DriftVector::new(across, along),
    };
    Ok(AxisDrift::Defined { drift, solution: Box::new(sol) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    /// Sign of `value` with a zero band of `eps` times the largest rate.
    pub fn of(value: f64, model: &QbdModel, eps: f64) -> Sign {
        let band = eps * model.max_rate();
        if value < -band {
            Sign::Negative
        } else if value > band {
            Sign::Positive
        } else {
            Sign::Zero
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    PositiveRecurrent,
    Transient,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::PositiveRecurrent => "PositiveRecurrent",
            Verdict::Transient => "Transient",
            Verdict::Inconclusive => "Inconclusive",
        })
    }
}

/// Which branch of the drift criterion decided the verdict.
///
/// `I` to `IV` are the four decisive sign patterns; `A1`, `A2`, `B`, `C`, `D`
/// are the excluded boundary patterns where some drift is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    I,
    II,
    III,
    IV,
    A1,
    A2,
    B,
    C,
    D,
    /// A required axis drift does not exist because its chain has no
    /// irreducible class.
    AxisDriftUndefined,
}

impl CaseTag {
    pub fn label(&self) -> &'static str {
        match self {
            CaseTag::I => "i",
            CaseTag::II => "ii",
            CaseTag::III => "iii",
            CaseTag::IV => "iv",
            CaseTag::A1 => "a-1",
            CaseTag::A2 => "a-2",
            CaseTag::B => "b",
            CaseTag::C => "c",
            CaseTag::D => "d",
            CaseTag::AxisDriftUndefined => "axis drift undefined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub case: CaseTag,
    pub plus: DriftVector,
    pub axis1: Option<DriftVector>,
    pub axis2: Option<DriftVector>,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.case {
            CaseTag::I | CaseTag::II | CaseTag::III | CaseTag::IV => {
                write!(f, "{} (Theorem 1, case {})", self.verdict, self.case.label())
            }
            CaseTag::AxisDriftUndefined => write!(f, "{} (axis drift undefined)", self.verdict),
            _ => write!(f, "{} (excluded case {})", self.verdict, self.case.label()),
        }
    }
}

pub fn classify(model: &QbdModel) -> Result<Classification, StabilityError> {
    classify_with(model, &StabilityOptions::default())
}

pub fn classify_with(model: &QbdModel, opts: &StabilityOptions) -> Result<Classification, StabilityError> {
    use Sign::*;

    let plus = drift_plus(model)?;
    let sign = |v: f64| Sign::of(v, model, opts.eps);
    let mut out = Classification {
        verdict: Verdict::Inconclusive,
        case: CaseTag::D,
        plus,
        axis1: None,
        axis2: None,
    };
    let axis = |a: Axis, out: &mut Classification| -> Result<Option<Sign>, StabilityError> {
        let d = drift_axis_with(model, a, opts)?.drift();
        match a {
            Axis::One => out.axis1 = d,
            Axis::Two => out.axis2 = d,
        }
        Ok(d.map(|d| sign(d.get(a))))
    };
    let set = |out: &mut Classification, verdict, case| {
        out.verdict = verdict;
        out.case = case;
    };

    match (sign(plus.a1), sign(plus.a2)) {
        (Negative, Negative) => {
            let x = axis(Axis::One, &mut out)?;
            let y = axis(Axis::Two, &mut out)?;
            match (x, y) {
                (Some(Positive), _) | (_, Some(Positive)) => set(&mut out, Verdict::Transient, CaseTag::I),
                (None, _) | (_, None) => set(&mut out, Verdict::Inconclusive, CaseTag::AxisDriftUndefined),
                (Some(Negative), Some(Negative)) => set(&mut out, Verdict::PositiveRecurrent, CaseTag::I),
                (Some(Zero), _) => set(&mut out, Verdict::Inconclusive, CaseTag::A1),
                (_, Some(Zero)) => set(&mut out, Verdict::Inconclusive, CaseTag::A2),
            }
        }
        (Zero | Positive, Negative) => match axis(Axis::One, &mut out)? {
            Some(Negative) => set(&mut out, Verdict::PositiveRecurrent, CaseTag::II),
            Some(Positive) => set(&mut out, Verdict::Transient, CaseTag::II),
            Some(Zero) => set(&mut out, Verdict::Inconclusive, CaseTag::B),
            None => set(&mut out, Verdict::Inconclusive, CaseTag::AxisDriftUndefined),
        },
        (Negative, Zero | Positive) => match axis(Axis::Two, &mut out)? {
            Some(Negative) => set(&mut out, Verdict::PositiveRecurrent, CaseTag::III),
            Some(Positive) => set(&mut out, Verdict::Transient, CaseTag::III),
            Some(Zero) => set(&mut out, Verdict::Inconclusive, CaseTag::C),
            None => set(&mut out, Verdict::Inconclusive, CaseTag::AxisDriftUndefined),
        },
        (Zero, Zero) => set(&mut out, Verdict::Inconclusive, CaseTag::D),
        _ => set(&mut out, Verdict::Transient, CaseTag::IV),
    }
    Ok(out)
}
