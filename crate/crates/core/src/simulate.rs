//! Uniformized discrete-time simulation of a 2d-QBD and Monte Carlo
//! estimates of its mean increment vectors.
//!
//! Every trial owns a ChaCha8 stream: the generator is seeded with
//! `seed_from_u64(seed)` and moved to stream `trial` with `set_stream`, so
//! trials are independent of one another and of how rayon schedules them.
//! Per-trial results are collected in trial order and summed sequentially,
//! which keeps estimates bit-identical for a fixed seed.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ctmc;
use crate::model::{governing_block, Archetype, QbdModel, Region};
use crate::qbd::QbdSolution;
use crate::stability::{drift_axis, drift_plus, induced_plus, Axis, AxisDrift, DriftVector, StabilityError};

/// Safety factor applied to the largest exit rate when choosing `ν`.
pub const UNIFORMIZATION_FACTOR: f64 = 1.05;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("{what} must be at least 1")]
    ZeroCount { what: &'static str },
    #[error("need n > burn_in, got n = {n}, burn_in = {burn_in}")]
    BurnIn { n: u64, burn_in: u64 },
    #[error("the full chain has no closed-form stationary start")]
    NoStationaryStart,
    #[error("axis-{axis} chain has no stationary distribution to start from")]
    UndefinedAxisChain { axis: Axis },
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

/// Which chain to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ChainVariant {
    /// The process itself, with both boundaries.
    Full,
    /// Both boundaries removed: interior blocks everywhere.
    Plus,
    /// The `l1 = 0` boundary removed; `l1` ranges over all integers.
    Axis1,
    /// The `l2 = 0` boundary removed; `l2` ranges over all integers.
    Axis2,
}

impl ChainVariant {
    /// Level used to pick the governing blocks. Coordinates without a
    /// boundary behave as if they were far from it.
    fn effective(self, l1: i64, l2: i64) -> (i64, i64) {
        match self {
            ChainVariant::Full => (l1, l2),
            ChainVariant::Plus => (2, 2),
            ChainVariant::Axis1 => (2, l2.min(2)),
            ChainVariant::Axis2 => (l1.min(2), 2),
        }
    }
}

/// A state `(l1, l2, phase)`. Levels are signed so that the free coordinates
/// of the boundary-removed chains can go negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SimState {
    pub l1: i64,
    pub l2: i64,
    pub phase: usize,
}

impl SimState {
    pub fn new(l1: i64, l2: i64, phase: usize) -> Self {
        Self { l1, l2, phase }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Move {
    cumulative: f64,
    k1: i8,
    k2: i8,
    phase: u32,
}

/// One row of the uniformized kernel as `(k1, k2, next phase, probability)`.
pub type KernelRow = Vec<(i64, i64, usize, f64)>;

/// Sampler for the uniformized kernel `P = I + Q/ν` of one chain variant.
#[derive(Debug, Clone)]
pub struct Simulator {
    variant: ChainVariant,
    nu: f64,
    /// Indexed by archetype, then source phase.
    moves: Vec<Vec<Vec<Move>>>,
}

/// `1.05 · max |diagonal|` over the local blocks of all four regions.
pub fn uniformization_rate(model: &QbdModel) -> f64 {
    let bound = model
        .blocks()
        .filter(|(k, _)| k.k1() == 0 && k.k2() == 0)
        .flat_map(|(_, m)| m.diagonal().iter().map(|d| d.abs()).collect::<Vec<_>>())
        .fold(0.0_f64, f64::max);
    if bound == 0.0 {
        1.0
    } else {
        UNIFORMIZATION_FACTOR * bound
    }
}

impl Simulator {
    pub fn new(model: &QbdModel, variant: ChainVariant) -> Self {
        let nu = uniformization_rate(model);
        let moves = Archetype::ALL
            .iter()
            .map(|archetype| {
                let (l1, l2) = archetype.representative();
                let phases = model.layout().phases(archetype.region());
                (0..phases)
                    .map(|i| {
                        let mut row = Vec::new();
                        let mut total = 0.0;
                        for k1 in -1..=1_i64 {
                            for k2 in -1..=1_i64 {
                                let Some(key) = governing_block(l1, l2, k1, k2) else { continue };
                                let block = model.block(key);
                                for j in 0..block.ncols() {
                                    let mut p = block[(i, j)] / nu;
                                    if k1 == 0 && k2 == 0 && i == j {
                                        p += 1.0;
                                    }
                                    if p > 0.0 {
                                        total += p;
                                        row.push(Move { cumulative: total, k1: k1 as i8, k2: k2 as i8, phase: j as u32 });
                                    }
                                }
                            }
                        }
                        if let Some(last) = row.last_mut() {
                            last.cumulative = f64::INFINITY;
                        }
                        row
                    })
                    .collect()
            })
            .collect();
        Self { variant, nu, moves }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn variant(&self) -> ChainVariant {
        self.variant
    }

    fn row(&self, state: SimState) -> &[Move] {
        let (e1, e2) = self.variant.effective(state.l1, state.l2);
        // `Archetype::ALL` lists the variants in declaration order.
        &self.moves[Archetype::of(e1, e2) as usize][state.phase]
    }

    /// The kernel row out of `state`, self-loop included.
    pub fn kernel_row(&self, state: SimState) -> KernelRow {
        let mut prev = 0.0;
        let row = self.row(state);
        row.iter()
            .enumerate()
            .map(|(idx, m)| {
                let c = if idx + 1 == row.len() { 1.0 } else { m.cumulative };
                let p = c - prev;
                prev = c;
                (m.k1 as i64, m.k2 as i64, m.phase as usize, p)
            })
            .collect()
    }

    pub fn step<R: Rng + ?Sized>(&self, state: SimState, rng: &mut R) -> SimState {
        let row = self.row(state);
        if row.is_empty() {
            return state;
        }
        let u: f64 = rng.random();
        let m = row[row.partition_point(|m| m.cumulative <= u)];
        SimState {
            l1: state.l1 + m.k1 as i64,
            l2: state.l2 + m.k2 as i64,
            phase: m.phase as usize,
        }
    }

    /// Runs `k` steps and returns the final state.
    pub fn run<R: Rng + ?Sized>(&self, mut state: SimState, k: u64, rng: &mut R) -> SimState {
        for _ in 0..k {
            state = self.step(state, rng);
        }
        state
    }
}

/// One step of the full chain. Builds the kernel on every call; use
/// [`Simulator`] for repeated sampling.
pub fn step<R: Rng + ?Sized>(model: &QbdModel, state: SimState, rng: &mut R) -> SimState {
    Simulator::new(model, ChainVariant::Full).step(state, rng)
}

/// Stream for `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Where trials start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start {
    At(SimState),
    /// Drawn from the chain's stationary law (interior phase law for
    /// [`ChainVariant::Plus`], level-and-phase law for the axis chains).
    /// The free coordinates start at 0.
    Stationary,
}

impl From<SimState> for Start {
    fn from(s: SimState) -> Self {
        Start::At(s)
    }
}

enum Sampler {
    Fixed(SimState),
    Phase(Vec<f64>),
    Levels { axis: Axis, cumulative: Vec<f64>, phases: Vec<Vec<f64>> },
}

fn cumulative(p: impl IntoIterator<Item = f64>) -> Vec<f64> {
    p.into_iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

fn pick(cum: &[f64], u: f64) -> usize {
    let total = *cum.last().expect("nonempty");
    cum.partition_point(|&c| c <= u * total).min(cum.len() - 1)
}

/// Stops expanding the geometric tail once this much mass is left.
const TAIL_MASS: f64 = 1e-12;
const MAX_START_LEVELS: usize = 100_000;

fn level_sampler(axis: Axis, sol: &QbdSolution) -> Sampler {
    let mut masses = vec![sol.pi0.sum()];
    let mut phases = vec![cumulative(sol.pi0.iter().copied())];
    let mut v: DVector<f64> = sol.pi1.clone();
    let mut total = masses[0];
    while masses.len() < MAX_START_LEVELS {
        let mass = v.sum();
        masses.push(mass);
        phases.push(cumulative(v.iter().copied()));
        total += mass;
        if 1.0 - total <= TAIL_MASS || mass == 0.0 {
            break;
        }
        v = sol.r.r.tr_mul(&v);
    }
    Sampler::Levels { axis, cumulative: cumulative(masses), phases }
}

impl Sampler {
    fn new(model: &QbdModel, variant: ChainVariant, start: Start) -> Result<Self, SimulateError> {
        if let Start::At(s) = start {
            return Ok(Sampler::Fixed(s));
        }
        match variant {
            ChainVariant::Full => Err(SimulateError::NoStationaryStart),
            ChainVariant::Plus => {
                drift_plus(model)?;
                let pi = ctmc::stationary(&induced_plus(model)).expect("one closed class was just checked");
                Ok(Sampler::Phase(cumulative(pi.iter().copied())))
            }
            ChainVariant::Axis1 | ChainVariant::Axis2 => {
                let axis = if variant == ChainVariant::Axis1 { Axis::One } else { Axis::Two };
                match drift_axis(model, axis)? {
                    AxisDrift::Defined { solution, .. } => Ok(level_sampler(axis, &solution)),
                    AxisDrift::Undefined(_) => Err(SimulateError::UndefinedAxisChain { axis }),
                }
            }
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> SimState {
        match self {
            Sampler::Fixed(s) => *s,
            Sampler::Phase(cum) => SimState::new(0, 0, pick(cum, rng.random())),
            Sampler::Levels { axis, cumulative, phases } => {
                let level = pick(cumulative, rng.random());
                let phase = pick(&phases[level], rng.random());
                match axis {
                    Axis::One => SimState::new(0, level as i64, phase),
                    Axis::Two => SimState::new(level as i64, 0, phase),
                }
            }
        }
    }
}

/// Monte Carlo estimate of a mean increment vector, in rate units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalDrift {
    pub mean: DriftVector,
    /// Standard error of each coordinate; zero when `trials == 1`.
    pub stderr: DriftVector,
    pub k: u64,
    pub trials: u64,
    pub nu: f64,
}

impl EmpiricalDrift {
    /// Largest coordinate distance to `target`, in standard errors.
    pub fn z_score(&self, target: DriftVector) -> f64 {
        let z = |m: f64, t: f64, s: f64| (m - t).abs() / s;
        z(self.mean.a1, target.a1, self.stderr.a1).max(z(self.mean.a2, target.a2, self.stderr.a2))
    }
}

/// Averages `ν·(L_k − L_0)/k` over independent trials of `variant`.
pub fn empirical_drift(
    model: &QbdModel,
    start: impl Into<Start>,
    variant: ChainVariant,
    k: u64,
    trials: u64,
    seed: u64,
) -> Result<EmpiricalDrift, SimulateError> {
    if k == 0 {
        return Err(SimulateError::ZeroCount { what: "k" });
    }
    if trials == 0 {
        return Err(SimulateError::ZeroCount { what: "trials" });
    }
    let sim = Simulator::new(model, variant);
    let sampler = Sampler::new(model, variant, start.into())?;
    let scale = sim.nu() / k as f64;
    let samples: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let s0 = sampler.draw(&mut rng);
            let s = sim.run(s0, k, &mut rng);
            ((s.l1 - s0.l1) as f64 * scale, (s.l2 - s0.l2) as f64 * scale)
        })
        .collect();

    let n = trials as f64;
    let (s1, s2) = samples.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let mean = DriftVector::new(s1 / n, s2 / n);
    let stderr = if trials < 2 {
        DriftVector::default()
    } else {
        let (v1, v2) = samples.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
            (a + (x - mean.a1).powi(2), b + (y - mean.a2).powi(2))
        });
        DriftVector::new((v1 / (n - 1.0) / n).sqrt(), (v2 / (n - 1.0) / n).sqrt())
    };
    Ok(EmpiricalDrift { mean, stderr, k, trials, nu: sim.nu() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupancySummary {
    pub mean_l1: f64,
    pub mean_l2: f64,
    pub origin_fraction: f64,
    /// Mean levels over the first and last tenth of the recorded steps.
    pub early_mean: (f64, f64),
    pub late_mean: (f64, f64),
    pub samples: u64,
}

/// Time averages of the full chain started empty at phase 0, recorded over
/// steps `burn_in + 1 ..= n`.
pub fn occupancy_probe(model: &QbdModel, n: u64, burn_in: u64, seed: u64) -> Result<OccupancySummary, SimulateError> {
    if n <= burn_in {
        return Err(SimulateError::BurnIn { n, burn_in });
    }
    let sim = Simulator::new(model, ChainVariant::Full);
    let mut rng = trial_rng(seed, 0);
    let mut state = sim.run(SimState::new(0, 0, 0), burn_in, &mut rng);
    let samples = n - burn_in;
    let window = (samples / 10).max(1);
    let (mut sum1, mut sum2, mut origin) = (0.0, 0.0, 0u64);
    let (mut early, mut late) = ((0.0, 0.0), (0.0, 0.0));
    for i in 0..samples {
        state = sim.step(state, &mut rng);
        let (l1, l2) = (state.l1 as f64, state.l2 as f64);
        sum1 += l1;
        sum2 += l2;
        if Region::at(state.l1, state.l2) == Region::Origin {
            origin += 1;
        }
        if i < window {
            early = (early.0 + l1, early.1 + l2);
        }
        if i >= samples - window {
            late = (late.0 + l1, late.1 + l2);
        }
    }
    let s = samples as f64;
    let w = window as f64;
    Ok(OccupancySummary {
        mean_l1: sum1 / s,
        mean_l2: sum2 / s,
        origin_fraction: origin as f64 / s,
        early_mean: (early.0 / w, early.1 / w),
        late_mean: (late.0 / w, late.1 / w),
        samples,
    })
}
