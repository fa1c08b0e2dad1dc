use std::fmt;

use super::{assemble_truncated_generator, Archetype, BlockKey, QbdModel};

/// Levels per axis of the truncation used for the irreducibility heuristic.
pub const DEFAULT_IRREDUCIBILITY_LEVELS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// A rate that must be nonnegative (or a diagonal entry that must be
    /// negative) is not.
    Sign {
        key: BlockKey,
        row: usize,
        col: usize,
        value: f64,
    },
    /// A generator row leaving a level of `archetype` does not sum to zero.
    RowSum {
        archetype: Archetype,
        phase: usize,
        residual: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// The truncated generator is not a single communicating class.
    Reducible { levels: usize, closed_classes: usize, states: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Sign { key, row, col, value } => {
                write!(f, "sign pattern: {key} entry ({row},{col}) = {value}")
            }
            Violation::RowSum { archetype, phase, residual } => write!(
                f,
                "row sum: archetype {archetype}, phase {phase} sums to {residual:e} instead of 0"
            ),
        }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::Reducible { levels, closed_classes, states } => write!(
                f,
                "Assumption 1 (irreducibility) may fail: the {levels}x{levels}-level truncation \
                 ({states} states) is not irreducible ({closed_classes} closed class(es))"
            ),
        }
    }
}

/// Outcome of [`validate`]. Block shapes are enforced when a [`QbdModel`] is
/// constructed, so only sign, conservation and irreducibility are reported.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate(model: &QbdModel) -> ValidationReport {
    validate_with(model, DEFAULT_IRREDUCIBILITY_LEVELS)
}

pub fn validate_with(model: &QbdModel, levels: usize) -> ValidationReport {
    let mut report = ValidationReport::default();

    for (key, block) in model.blocks() {
        let local = key.k1() == 0 && key.k2() == 0;
        for row in 0..block.nrows() {
            for col in 0..block.ncols() {
                let value = block[(row, col)];
                let ok = if local && row == col { value < 0.0 } else { value >= 0.0 };
                if !ok {
                    report.violations.push(Violation::Sign { key, row, col, value });
                }
            }
        }
    }

    let tol = 1e-12 * model.max_rate().max(f64::MIN_POSITIVE);
    for archetype in Archetype::ALL {
        let phases = model.layout().phases(archetype.region());
        let mut sums = vec![0.0; phases];
        for (_, _, key) in archetype.outgoing() {
            let block = model.block(key);
            for (i, s) in sums.iter_mut().enumerate() {
                *s += block.row(i).sum();
            }
        }
        for (phase, residual) in sums.into_iter().enumerate() {
            if residual.is_nan() || residual.abs() > tol {
                report.violations.push(Violation::RowSum { archetype, phase, residual });
            }
        }
    }

    if report.violations.is_empty() {
        let levels = levels.max(2);
        if let Ok(t) = assemble_truncated_generator(model, levels, levels) {
            let classes = crate::ctmc::closed_classes(t.generator());
            let states = t.len();
            if classes.len() != 1 || classes[0].len() != states {
                report.warnings.push(Warning::Reducible {
                    levels,
                    closed_classes: classes.len(),
                    states,
                });
            }
        }
    }
    report
}
