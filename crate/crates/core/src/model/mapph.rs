//! Priority queue with setup times driven by MAP arrivals and PH service
//! and setup times.
//!
//! Phases are ordered lexicographically as (class-1 arrival phase, class-2
//! arrival phase, server phase). Server phases are the concatenation
//! `[serve 1, setup 1, serve 2, setup 2]` in the interior, `[serve 1, setup 1]`
//! on the l1-axis and `[serve 2, setup 2]` on the l2-axis; the origin carries
//! only the arrival phases.

use super::kron::{kron_product, kron_sum};
use super::{BlockKey, BlockSet, Matrix, ModelError, PhaseLayout, QbdModel};

const TOL: f64 = 1e-10;

/// Markovian arrival process `(C, D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Map {
    c: Matrix,
    d: Matrix,
}

impl Map {
    pub fn new(c: Matrix, d: Matrix) -> Result<Self, ModelError> {
        let bad = |msg: String| Err(ModelError::MalformedMap(msg));
        if !c.is_square() || c.shape() != d.shape() || c.nrows() == 0 {
            return bad(format!("C is {:?} and D is {:?}; both must be the same square shape", c.shape(), d.shape()));
        }
        let scale = c.amax().max(d.amax()).max(1.0);
        for i in 0..c.nrows() {
            if c[(i, i)] >= 0.0 {
                return bad(format!("C[{i},{i}] = {} must be negative", c[(i, i)]));
            }
            for j in 0..c.ncols() {
                if i != j && c[(i, j)] < 0.0 {
                    return bad(format!("C[{i},{j}] = {} is negative", c[(i, j)]));
                }
                if d[(i, j)] < 0.0 {
                    return bad(format!("D[{i},{j}] = {} is negative", d[(i, j)]));
                }
            }
            let s = c.row(i).sum() + d.row(i).sum();
            if s.abs() > TOL * scale {
                return bad(format!("row {i} of C+D sums to {s}, expected 0"));
            }
        }
        Ok(Self { c, d })
    }

    /// Poisson process of the given rate.
    pub fn poisson(rate: f64) -> Result<Self, ModelError> {
        Self::renewal(&PhaseType::exponential(rate)?)
    }

    /// Renewal process with PH inter-arrival times.
    pub fn renewal(ph: &PhaseType) -> Result<Self, ModelError> {
        Self::new(ph.u.clone(), ph.exit_rates() * &ph.beta)
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn d(&self) -> &Matrix {
        &self.d
    }

    pub fn order(&self) -> usize {
        self.c.nrows()
    }

    /// Long-run arrival rate `θ D 1`, with `θ` stationary for `C + D`.
    pub fn mean_rate(&self) -> Result<f64, ModelError> {
        let theta = crate::ctmc::stationary(&(&self.c + &self.d))
            .map_err(|e| ModelError::MalformedMap(format!("phase process: {e}")))?;
        Ok((theta.transpose() * &self.d).sum())
    }

    /// The same process sped up so that its mean rate becomes `rate`.
    pub fn with_rate(&self, rate: f64) -> Result<Self, ModelError> {
        let rate = super::check_rate("arrival rate", rate)?;
        let f = rate / self.mean_rate()?;
        Ok(Self {
            c: &self.c * f,
            d: &self.d * f,
        })
    }
}

/// Phase-type distribution `(U, β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseType {
    u: Matrix,
    beta: Matrix,
}

impl PhaseType {
    pub fn new(u: Matrix, beta: Vec<f64>) -> Result<Self, ModelError> {
        let bad = |msg: String| Err(ModelError::MalformedPhaseType(msg));
        let n = u.nrows();
        if !u.is_square() || n == 0 || beta.len() != n {
            return bad(format!("U is {:?} and β has length {}", u.shape(), beta.len()));
        }
        if beta.iter().any(|b| *b < 0.0) || (beta.iter().sum::<f64>() - 1.0).abs() > TOL {
            return bad(format!("β = {beta:?} is not a probability vector"));
        }
        let scale = u.amax().max(1.0);
        for i in 0..n {
            if u[(i, i)] >= 0.0 {
                return bad(format!("U[{i},{i}] = {} must be negative", u[(i, i)]));
            }
            for j in 0..n {
                if i != j && u[(i, j)] < 0.0 {
                    return bad(format!("U[{i},{j}] = {} is negative", u[(i, j)]));
                }
            }
            if u.row(i).sum() > TOL * scale {
                return bad(format!("row {i} of U has positive sum {}", u.row(i).sum()));
            }
        }
        Ok(Self {
            u,
            beta: Matrix::from_row_slice(1, n, &beta),
        })
    }

    pub fn exponential(rate: f64) -> Result<Self, ModelError> {
        let rate = super::check_rate("rate", rate)?;
        Self::new(Matrix::from_element(1, 1, -rate), vec![1.0])
    }

    /// Erlang distribution with `k` stages and the given mean.
    pub fn erlang(k: usize, mean: f64) -> Result<Self, ModelError> {
        let mean = super::check_rate("mean", mean)?;
        if k == 0 {
            return Err(ModelError::MalformedPhaseType("Erlang order must be at least 1".into()));
        }
        let r = k as f64 / mean;
        let mut u = Matrix::from_diagonal_element(k, k, -r);
        for i in 0..k - 1 {
            u[(i, i + 1)] = r;
        }
        let mut beta = vec![0.0; k];
        beta[0] = 1.0;
        Self::new(u, beta)
    }

    pub fn u(&self) -> &Matrix {
        &self.u
    }

    /// Initial distribution as a `1 × n` row.
    pub fn beta(&self) -> &Matrix {
        &self.beta
    }

    pub fn order(&self) -> usize {
        self.u.nrows()
    }

    /// Exit-rate column `u = −U 1`.
    pub fn exit_rates(&self) -> Matrix {
        let n = self.order();
        -(&self.u * Matrix::from_element(n, 1, 1.0))
    }

    /// Mean `β (−U)⁻¹ 1`.
    pub fn mean(&self) -> Result<f64, ModelError> {
        let n = self.order();
        let inv = (-&self.u)
            .try_inverse()
            .ok_or_else(|| ModelError::MalformedPhaseType("U is singular".into()))?;
        Ok((&self.beta * inv * Matrix::from_element(n, 1, 1.0))[(0, 0)])
    }
}

/// Places blocks on a grid of row/column partitions.
fn grid(rows: &[usize], cols: &[usize], parts: &[(usize, usize, Matrix)]) -> Matrix {
    let offset = |sizes: &[usize], k: usize| sizes[..k].iter().sum::<usize>();
    let mut out = Matrix::zeros(rows.iter().sum(), cols.iter().sum());
    for (r, c, m) in parts {
        debug_assert_eq!(m.shape(), (rows[*r], cols[*c]));
        out.view_mut((offset(rows, *r), offset(cols, *c)), m.shape()).copy_from(m);
    }
    out
}

pub fn build_priority_setup_mapph(
    map1: &Map,
    map2: &Map,
    ph1: &PhaseType,
    ph2: &PhaseType,
    set1: &PhaseType,
    set2: &PhaseType,
) -> Result<QbdModel, ModelError> {
    let (m1, m2) = (map1.order(), map2.order());
    let (p1, q1, p2, q2) = (ph1.order(), set1.order(), ph2.order(), set2.order());
    let arrivals = m1 * m2;
    let layout = PhaseLayout::new(arrivals, arrivals * (p1 + q1), arrivals * (p2 + q2), arrivals * (p1 + q1 + p2 + q2))?;

    let eye = |n: usize| Matrix::identity(n, n);
    let (u1, u2) = (ph1.exit_rates(), ph2.exit_rates());
    let (u1s, u2s) = (set1.exit_rates(), set2.exit_rates());
    let (b1, b2) = (ph1.beta(), ph2.beta());
    let (b1s, b2s) = (set1.beta(), set2.beta());

    let plus = [p1, q1, p2, q2];
    let ax1 = [p1, q1];
    let ax2 = [p2, q2];
    let one = [1];

    // I ⊗ I ⊗ S, D1 ⊗ I ⊗ S, I ⊗ D2 ⊗ S
    let idle = |s: &Matrix| kron_product(&eye(arrivals), s);
    let arrive1 = |s: &Matrix| kron_product(&kron_product(map1.d(), &eye(m2)), s);
    let arrive2 = |s: &Matrix| kron_product(&kron_product(&eye(m1), map2.d()), s);
    let c12 = kron_sum(map1.c(), map2.c())?;
    let local = |s: &Matrix| kron_sum(&c12, s);

    let mut b = BlockSet::zeros(layout);

    b.set(BlockKey::plus(-1, 0), idle(&grid(&plus, &plus, &[(0, 0, &u1 * b1)])))?
        .set(
            BlockKey::plus(0, 0),
            local(&grid(
                &plus,
                &plus,
                &[
                    (0, 0, ph1.u().clone()),
                    (1, 0, &u1s * b1),
                    (1, 1, set1.u().clone()),
                    (2, 2, ph2.u().clone()),
                    (3, 2, &u2s * b2),
                    (3, 3, set2.u().clone()),
                ],
            ))?,
        )?
        .set(BlockKey::plus(0, -1), idle(&grid(&plus, &plus, &[(2, 1, &u2 * b1s)])))?
        .set(BlockKey::plus(1, 0), arrive1(&eye(p1 + q1 + p2 + q2)))?
        .set(BlockKey::plus(0, 1), arrive2(&eye(p1 + q1 + p2 + q2)))?;

    b.set(BlockKey::axis1(-1, 0), idle(&grid(&ax1, &ax1, &[(0, 0, &u1 * b1)])))?
        .set(
            BlockKey::axis1(0, 0),
            local(&grid(
                &ax1,
                &ax1,
                &[(0, 0, ph1.u().clone()), (1, 0, &u1s * b1), (1, 1, set1.u().clone())],
            ))?,
        )?
        .set(BlockKey::axis1(1, 0), arrive1(&eye(p1 + q1)))?
        .set(
            BlockKey::axis1(0, 1),
            arrive2(&grid(&ax1, &plus, &[(0, 0, eye(p1)), (1, 1, eye(q1))])),
        )?
        .set(BlockKey::axis1(0, -1), idle(&grid(&plus, &ax1, &[(2, 1, &u2 * b1s)])))?;

    b.set(
        BlockKey::axis2(1, 0),
        arrive1(&grid(&ax2, &plus, &[(0, 2, eye(p2)), (1, 3, eye(q2))])),
    )?
    .set(BlockKey::axis2(-1, 0), idle(&grid(&plus, &ax2, &[(0, 1, &u1 * b2s)])))?
    .set(
        BlockKey::axis2(0, 0),
        local(&grid(
            &ax2,
            &ax2,
            &[(0, 0, ph2.u().clone()), (1, 0, &u2s * b2), (1, 1, set2.u().clone())],
        ))?,
    )?
    .set(BlockKey::axis2(0, -1), idle(&grid(&ax2, &ax2, &[(0, 0, &u2 * b2)])))?
    .set(BlockKey::axis2(0, 1), arrive2(&eye(p2 + q2)))?;

    b.set(BlockKey::origin(-1, 0), idle(&grid(&ax1, &one, &[(0, 0, u1.clone())])))?
        .set(BlockKey::origin(0, 0), c12.clone())?
        .set(BlockKey::origin(0, -1), idle(&grid(&ax2, &one, &[(0, 0, u2.clone())])))?
        .set(BlockKey::origin(1, 0), arrive1(&grid(&one, &ax1, &[(0, 1, b1s.clone())])))?
        .set(BlockKey::origin(0, 1), arrive2(&grid(&one, &ax2, &[(0, 1, b2s.clone())])))?;

    b.build("priority-setup-mapph")
}
