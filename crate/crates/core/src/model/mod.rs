//! Two-dimensional QBD models.
//!
//! A model is a phase layout `(s0, s1, s2, s+)` plus 36 dense rate blocks
//! `A^(i)_{k1,k2}`, one per region `i ∈ {0, 1, 2, +}` and step
//! `(k1, k2) ∈ {-1, 0, 1}²`. Which block governs a transition from a level
//! `(l1, l2)` is decided by [`governing_block`]; everything else (shapes,
//! validation, truncation, simulation) is derived from that one rule.

mod builders;
pub mod io;
mod kron;
mod mapph;
mod servers;
mod truncate;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builders::{
    build_additional_server, build_independent_pair, build_priority_setup,
};
pub use kron::{kron_product, kron_sum};
pub use mapph::{build_priority_setup_mapph, Map, PhaseType};
pub use truncate::{assemble_truncated_generator, TruncatedGenerator};
pub use validate::{validate, validate_with, ValidationReport, Violation, Warning, DEFAULT_IRREDUCIBILITY_LEVELS};

/// Dense real matrix used for every rate block.
pub type Matrix = DMatrix<f64>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("phase count {name} must be at least 1")]
    EmptyPhaseSet { name: &'static str },
    #[error("step ({k1},{k2}) is outside {{-1,0,1}}²")]
    InvalidStep { k1: i64, k2: i64 },
    #[error("unknown region label {0:?} (expected one of \"0\", \"1\", \"2\", \"+\")")]
    InvalidRegion(String),
    #[error("malformed block key {0:?} (expected \"<region>:<k1>,<k2>\")")]
    InvalidKey(String),
    #[error("block {key} is missing; all 36 blocks must be given explicitly")]
    MissingBlock { key: BlockKey },
    #[error("block {key} has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        key: BlockKey,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("rate {name} must be positive and finite, got {value}")]
    NonPositiveRate { name: &'static str, value: f64 },
    #[error("malformed MAP representation: {0}")]
    MalformedMap(String),
    #[error("malformed phase-type representation: {0}")]
    MalformedPhaseType(String),
    #[error("kron_sum needs square operands, got {0:?} and {1:?}")]
    NotSquare((usize, usize), (usize, usize)),
    #[error("truncation caps must be at least 2, got ({0}, {1})")]
    TruncationTooSmall(usize, usize),
    #[error("ragged row {row} in block {key}")]
    RaggedRow { key: String, row: usize },
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Phase-set cardinalities of the four regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseLayout {
    pub s0: usize,
    pub s1: usize,
    pub s2: usize,
    pub splus: usize,
}

impl PhaseLayout {
    pub fn new(s0: usize, s1: usize, s2: usize, splus: usize) -> Result<Self, ModelError> {
        for (name, v) in [("s0", s0), ("s1", s1), ("s2", s2), ("splus", splus)] {
            if v == 0 {
                return Err(ModelError::EmptyPhaseSet { name });
            }
        }
        Ok(Self { s0, s1, s2, splus })
    }

    pub fn phases(&self, region: Region) -> usize {
        match region {
            Region::Origin => self.s0,
            Region::Axis1 => self.s1,
            Region::Axis2 => self.s2,
            Region::Interior => self.splus,
        }
    }

    /// Layout with the roles of the two level coordinates exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            s0: self.s0,
            s1: self.s2,
            s2: self.s1,
            splus: self.splus,
        }
    }
}

/// The four parts of the state space: origin, the two axes, the interior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Origin,
    Axis1,
    Axis2,
    Interior,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::Origin, Region::Axis1, Region::Axis2, Region::Interior];

    /// Region containing level `(l1, l2)`; both coordinates must be nonnegative.
    pub fn at(l1: i64, l2: i64) -> Region {
        debug_assert!(l1 >= 0 && l2 >= 0);
        match (l1 > 0, l2 > 0) {
            (false, false) => Region::Origin,
            (true, false) => Region::Axis1,
            (false, true) => Region::Axis2,
            (true, true) => Region::Interior,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Region::Origin => "0",
            Region::Axis1 => "1",
            Region::Axis2 => "2",
            Region::Interior => "+",
        }
    }

    pub fn parse(s: &str) -> Result<Region, ModelError> {
        match s {
            "0" => Ok(Region::Origin),
            "1" => Ok(Region::Axis1),
            "2" => Ok(Region::Axis2),
            "+" => Ok(Region::Interior),
            other => Err(ModelError::InvalidRegion(other.to_string())),
        }
    }

    fn swapped(&self) -> Region {
        match self {
            Region::Axis1 => Region::Axis2,
            Region::Axis2 => Region::Axis1,
            r => *r,
        }
    }
}

/// Identifies one of the 36 blocks `A^(region)_{k1,k2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockKey {
    region: Region,
    k1: i8,
    k2: i8,
}

impl BlockKey {
    pub fn new(region: Region, k1: i64, k2: i64) -> Result<Self, ModelError> {
        if !(-1..=1).contains(&k1) || !(-1..=1).contains(&k2) {
            return Err(ModelError::InvalidStep { k1, k2 });
        }
        Ok(Self {
            region,
            k1: k1 as i8,
            k2: k2 as i8,
        })
    }

    /// `A^(0)_{k1,k2}`. Panics if a step is outside `{-1,0,1}`.
    pub fn origin(k1: i64, k2: i64) -> Self {
        Self::new(Region::Origin, k1, k2).expect("step outside {-1,0,1}")
    }

    /// `A^(1)_{k1,k2}`. Panics if a step is outside `{-1,0,1}`.
    pub fn axis1(k1: i64, k2: i64) -> Self {
        Self::new(Region::Axis1, k1, k2).expect("step outside {-1,0,1}")
    }

    /// `A^(2)_{k1,k2}`. Panics if a step is outside `{-1,0,1}`.
    pub fn axis2(k1: i64, k2: i64) -> Self {
        Self::new(Region::Axis2, k1, k2).expect("step outside {-1,0,1}")
    }

    /// `A^(+)_{k1,k2}`. Panics if a step is outside `{-1,0,1}`.
    pub fn plus(k1: i64, k2: i64) -> Self {
        Self::new(Region::Interior, k1, k2).expect("step outside {-1,0,1}")
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn k1(&self) -> i64 {
        self.k1 as i64
    }

    pub fn k2(&self) -> i64 {
        self.k2 as i64
    }

    /// All 36 keys, ordered by region then `k1` then `k2`.
    pub fn all() -> impl Iterator<Item = BlockKey> {
        Region::ALL.into_iter().flat_map(|region| {
            (-1..=1).flat_map(move |k1| (-1..=1).map(move |k2| BlockKey::new(region, k1, k2).unwrap()))
        })
    }

    pub fn index(&self) -> usize {
        let r = match self.region {
            Region::Origin => 0,
            Region::Axis1 => 1,
            Region::Axis2 => 2,
            Region::Interior => 3,
        };
        r * 9 + (self.k1 + 1) as usize * 3 + (self.k2 + 1) as usize
    }

    /// A source level at which this block governs the step `(k1, k2)`.
    pub fn representative_source(&self) -> (i64, i64) {
        let (k1, k2) = (self.k1(), self.k2());
        match self.region {
            Region::Interior => (2, 2),
            Region::Axis1 => (2, if k2 == -1 { 1 } else { 0 }),
            Region::Axis2 => (if k1 == -1 { 1 } else { 0 }, 2),
            // Steps into (or across) the origin start one level out along
            // each negative step direction.
            Region::Origin => ((k1 == -1) as i64, (k2 == -1) as i64),
        }
    }

    /// The key text used in model files, e.g. `"+:-1,0"`.
    pub fn file_key(&self) -> String {
        format!("{}:{},{}", self.region.label(), self.k1, self.k2)
    }

    pub fn parse(s: &str) -> Result<Self, ModelError> {
        let bad = || ModelError::InvalidKey(s.to_string());
        let (region, steps) = s.split_once(':').ok_or_else(bad)?;
        let (k1, k2) = steps.split_once(',').ok_or_else(bad)?;
        let k1: i64 = k1.trim().parse().map_err(|_| bad())?;
        let k2: i64 = k2.trim().parse().map_err(|_| bad())?;
        BlockKey::new(Region::parse(region.trim())?, k1, k2).map_err(|_| bad())
    }

    fn swapped(&self) -> BlockKey {
        BlockKey {
            region: self.region.swapped(),
            k1: self.k2,
            k2: self.k1,
        }
    }
}

impl fmt::Display for BlockKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A({})[{},{}]", self.region.label(), self.k1, self.k2)
    }
}

/// Shape `(rows, cols)` of a block: phases of the source region by phases of
/// the destination region, taken at the block's representative source level.
pub fn block_shape(key: BlockKey, layout: &PhaseLayout) -> (usize, usize) {
    let (l1, l2) = key.representative_source();
    let src = Region::at(l1, l2);
    let dst = Region::at(l1 + key.k1(), l2 + key.k2());
    (layout.phases(src), layout.phases(dst))
}

/// The block governing a step `(k1, k2)` out of level `(l1, l2)`, or `None`
/// when the move leaves the quarter plane.
///
/// Levels here are the true levels of the full process; both must be `>= 0`.
pub fn governing_block(l1: i64, l2: i64, k1: i64, k2: i64) -> Option<BlockKey> {
    let (d1, d2) = (l1 + k1, l2 + k2);
    if d1 < 0 || d2 < 0 || !(-1..=1).contains(&k1) || !(-1..=1).contains(&k2) {
        return None;
    }
    if (l1 == 0 && l2 == 0) || (d1 == 0 && d2 == 0) {
        return Some(BlockKey::origin(k1, k2));
    }
    // Diagonal jumps between the two unit levels of the axes.
    if (l1, l2, k1, k2) == (1, 0, -1, 1) || (l1, l2, k1, k2) == (0, 1, 1, -1) {
        return Some(BlockKey::origin(k1, k2));
    }
    let region = if l1 >= 1 && (l2 == 0 || (l2 == 1 && k2 == -1)) {
        Region::Axis1
    } else if l2 >= 1 && (l1 == 0 || (l1 == 1 && k1 == -1)) {
        Region::Axis2
    } else {
        Region::Interior
    };
    Some(BlockKey::new(region, k1, k2).unwrap())
}

/// The nine boundary/interior position classes that fully determine the
/// outgoing blocks of a level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Archetype {
    Origin,
    OneZero,
    FarAxis1,
    ZeroOne,
    FarAxis2,
    OneOne,
    OneFar,
    FarOne,
    Interior,
}

impl Archetype {
    pub const ALL: [Archetype; 9] = [
        Archetype::Origin,
        Archetype::OneZero,
        Archetype::FarAxis1,
        Archetype::ZeroOne,
        Archetype::FarAxis2,
        Archetype::OneOne,
        Archetype::OneFar,
        Archetype::FarOne,
        Archetype::Interior,
    ];

    /// Archetype of level `(l1, l2)`.
    pub fn of(l1: i64, l2: i64) -> Archetype {
        match (l1.min(2), l2.min(2)) {
            (0, 0) => Archetype::Origin,
            (1, 0) => Archetype::OneZero,
            (_, 0) => Archetype::FarAxis1,
            (0, 1) => Archetype::ZeroOne,
            (0, _) => Archetype::FarAxis2,
            (1, 1) => Archetype::OneOne,
            (1, _) => Archetype::OneFar,
            (_, 1) => Archetype::FarOne,
            _ => Archetype::Interior,
        }
    }

    /// Smallest level belonging to the archetype.
    pub fn representative(&self) -> (i64, i64) {
        match self {
            Archetype::Origin => (0, 0),
            Archetype::OneZero => (1, 0),
            Archetype::FarAxis1 => (2, 0),
            Archetype::ZeroOne => (0, 1),
            Archetype::FarAxis2 => (0, 2),
            Archetype::OneOne => (1, 1),
            Archetype::OneFar => (1, 2),
            Archetype::FarOne => (2, 1),
            Archetype::Interior => (2, 2),
        }
    }

    pub fn region(&self) -> Region {
        let (l1, l2) = self.representative();
        Region::at(l1, l2)
    }

    /// `(k1, k2, block)` for every step leaving a level of this archetype.
    pub fn outgoing(&self) -> Vec<(i64, i64, BlockKey)> {
        let (l1, l2) = self.representative();
        let mut out = Vec::with_capacity(9);
        for k1 in -1..=1 {
            for k2 in -1..=1 {
                if let Some(key) = governing_block(l1, l2, k1, k2) {
                    out.push((k1, k2, key));
                }
            }
        }
        out
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Archetype::Origin => "(0,0)",
            Archetype::OneZero => "(1,0)",
            Archetype::FarAxis1 => "(l1>=2,0)",
            Archetype::ZeroOne => "(0,1)",
            Archetype::FarAxis2 => "(0,l2>=2)",
            Archetype::OneOne => "(1,1)",
            Archetype::OneFar => "(1,l2>=2)",
            Archetype::FarOne => "(l1>=2,1)",
            Archetype::Interior => "(l1>=2,l2>=2)",
        };
        f.write_str(s)
    }
}

/// A two-dimensional QBD process: layout plus all 36 rate blocks.
///
/// Immutable once built; every block is present with its [`block_shape`].
#[derive(Debug, Clone, PartialEq)]
pub struct QbdModel {
    name: String,
    layout: PhaseLayout,
    blocks: Vec<Matrix>,
}

impl QbdModel {
    /// Builds a model from an explicit map of all 36 blocks.
    pub fn new(
        name: impl Into<String>,
        layout: PhaseLayout,
        mut blocks: BTreeMap<BlockKey, Matrix>,
    ) -> Result<Self, ModelError> {
        let mut ordered = Vec::with_capacity(36);
        for key in BlockKey::all() {
            let m = blocks.remove(&key).ok_or(ModelError::MissingBlock { key })?;
            let expected = block_shape(key, &layout);
            let found = m.shape();
            if found != expected {
                return Err(ModelError::ShapeMismatch { key, expected, found });
            }
            ordered.push(m);
        }
        Ok(Self {
            name: name.into(),
            layout,
            blocks: ordered,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layout(&self) -> &PhaseLayout {
        &self.layout
    }

    pub fn block(&self, key: BlockKey) -> &Matrix {
        &self.blocks[key.index()]
    }

    pub fn blocks(&self) -> impl Iterator<Item = (BlockKey, &Matrix)> {
        BlockKey::all().map(move |k| (k, &self.blocks[k.index()]))
    }

    /// Largest absolute entry over all blocks.
    pub fn max_rate(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|m| m.iter())
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Every rate multiplied by `c` (a time rescaling).
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            name: self.name.clone(),
            layout: self.layout,
            blocks: self.blocks.iter().map(|m| m * c).collect(),
        }
    }

    /// The same process with the two level coordinates exchanged.
    pub fn swap_axes(&self) -> Self {
        let mut blocks = vec![Matrix::zeros(0, 0); 36];
        for key in BlockKey::all() {
            blocks[key.swapped().index()] = self.blocks[key.index()].clone();
        }
        Self {
            name: format!("{} (axes swapped)", self.name),
            layout: self.layout.swapped(),
            blocks,
        }
    }
}

/// Incremental construction of the 36 blocks, starting from explicit zeros.
#[derive(Debug, Clone)]
pub struct BlockSet {
    layout: PhaseLayout,
    blocks: BTreeMap<BlockKey, Matrix>,
}

impl BlockSet {
    pub fn zeros(layout: PhaseLayout) -> Self {
        let blocks = BlockKey::all()
            .map(|k| {
                let (r, c) = block_shape(k, &layout);
                (k, Matrix::zeros(r, c))
            })
            .collect();
        Self { layout, blocks }
    }

    pub fn set(&mut self, key: BlockKey, m: Matrix) -> Result<&mut Self, ModelError> {
        let expected = block_shape(key, &self.layout);
        if m.shape() != expected {
            return Err(ModelError::ShapeMismatch {
                key,
                expected,
                found: m.shape(),
            });
        }
        self.blocks.insert(key, m);
        Ok(self)
    }

    pub fn get(&self, key: BlockKey) -> &Matrix {
        &self.blocks[&key]
    }

    pub fn build(self, name: impl Into<String>) -> Result<QbdModel, ModelError> {
        QbdModel::new(name, self.layout, self.blocks)
    }
}

pub(crate) fn check_rate(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ModelError::NonPositiveRate { name, value })
    }
}
