//! Level-independent one-dimensional QBDs with a single boundary level.
//!
//! Level 0 has its own phase set; levels `l ≥ 1` share the interior phase
//! set. The generator is block tridiagonal:
//!
//! ```text
//! [ B0     Bup                    ]
//! [ Bdown  A0     Aup             ]
//! [        Adown  A0     Aup      ]
//! [               ...    ...  ... ]
//! ```

use nalgebra::DVector;
use thiserror::Error;

use crate::ctmc::{self, CtmcError};
use crate::model::Matrix;

/// Successive-iterate tolerance of the rate-matrix fixed point.
pub const R_TOLERANCE: f64 = 1e-14;
pub const R_MAX_ITERATIONS: usize = 1_000_000;
/// Spectral radii at or above `1 - SPECTRAL_MARGIN` count as not positive
/// recurrent.
pub const SPECTRAL_MARGIN: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QbdError {
    #[error("block {name} has shape {found:?}, expected {expected:?}")]
    Shape {
        name: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("rows of {which} do not sum to zero (largest residual {residual:e})")]
    RowSum { which: &'static str, residual: f64 },
    #[error("the local block A0 is singular")]
    SingularA0,
    #[error("rate-matrix iteration did not converge in {iterations} steps")]
    IterationCap { iterations: usize },
    #[error("spectral radius of R is {spectral_radius}; the chain is not positive recurrent")]
    NotPositiveRecurrent { spectral_radius: f64 },
    #[error("Assumption 3: boundary balance has {closed_classes} closed classes instead of one")]
    BoundaryNullSpace { closed_classes: usize },
    #[error("fundamental matrix (-A0 - R·Adown) is singular")]
    Singular,
}

/// Blocks of a level-independent QBD with one boundary level.
#[derive(Debug, Clone, PartialEq)]
pub struct QbdSpec {
    pub b0: Matrix,
    pub bup: Matrix,
    pub bdown: Matrix,
    pub adown: Matrix,
    pub a0: Matrix,
    pub aup: Matrix,
}

fn ones(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0)
}

/// Row vector times matrix, with both vectors stored as columns.
fn vm(v: &DVector<f64>, m: &Matrix) -> DVector<f64> {
    m.tr_mul(v)
}

impl QbdSpec {
    pub fn new(
        b0: Matrix,
        bup: Matrix,
        bdown: Matrix,
        adown: Matrix,
        a0: Matrix,
        aup: Matrix,
    ) -> Result<Self, QbdError> {
        let sb = b0.nrows();
        let si = a0.nrows();
        for (name, m, expected) in [
            ("B0", &b0, (sb, sb)),
            ("Bup", &bup, (sb, si)),
            ("Bdown", &bdown, (si, sb)),
            ("Adown", &adown, (si, si)),
            ("A0", &a0, (si, si)),
            ("Aup", &aup, (si, si)),
        ] {
            if m.shape() != expected {
                return Err(QbdError::Shape { name, expected, found: m.shape() });
            }
        }
        let scale = [&b0, &bup, &bdown, &adown, &a0, &aup]
            .iter()
            .fold(0.0_f64, |s, m| s.max(m.amax()))
            .max(f64::MIN_POSITIVE);
        let tol = 1e-10 * scale;
        for (which, sum) in [
            ("B0 + Bup", &b0 * ones(sb) + &bup * ones(si)),
            ("Bdown + A0 + Aup", &bdown * ones(sb) + (&a0 + &aup) * ones(si)),
            ("Adown + A0 + Aup", (&adown + &a0 + &aup) * ones(si)),
        ] {
            let residual = sum.amax();
            if residual > tol {
                return Err(QbdError::RowSum { which, residual });
            }
        }
        Ok(Self { b0, bup, bdown, adown, a0, aup })
    }

    pub fn boundary_phases(&self) -> usize {
        self.b0.nrows()
    }

    pub fn interior_phases(&self) -> usize {
        self.a0.nrows()
    }

    /// Generator on levels `0..=levels`; up-rates out of the top level are
    /// folded into its diagonal.
    pub fn truncated_generator(&self, levels: usize) -> Matrix {
        let sb = self.boundary_phases();
        let si = self.interior_phases();
        let n = sb + levels * si;
        let at = |l: usize| if l == 0 { 0 } else { sb + (l - 1) * si };
        let mut g = Matrix::zeros(n, n);
        g.view_mut((0, 0), (sb, sb)).copy_from(&self.b0);
        if levels == 0 {
            for i in 0..sb {
                g[(i, i)] += self.bup.row(i).sum();
            }
            return g;
        }
        g.view_mut((0, at(1)), (sb, si)).copy_from(&self.bup);
        for l in 1..=levels {
            let r = at(l);
            g.view_mut((r, r), (si, si)).copy_from(&self.a0);
            if l == 1 {
                g.view_mut((r, 0), (si, sb)).copy_from(&self.bdown);
            } else {
                g.view_mut((r, at(l - 1)), (si, si)).copy_from(&self.adown);
            }
            if l < levels {
                g.view_mut((r, at(l + 1)), (si, si)).copy_from(&self.aup);
            } else {
                for i in 0..si {
                    g[(r + i, r + i)] += self.aup.row(i).sum();
                }
            }
        }
        g
    }
}

/// Minimal nonnegative solution of `R²·Adown + R·A0 + Aup = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    pub r: Matrix,
    pub iterations: usize,
    pub spectral_radius: f64,
}

impl RateMatrix {
    /// `‖R²·Adown + R·A0 + Aup‖∞`.
    pub fn residual(&self, aup: &Matrix, a0: &Matrix, adown: &Matrix) -> f64 {
        let r = &self.r;
        (r * r * adown + r * a0 + aup).amax()
    }
}

/// Iterates `R₀ = 0`, `Rₙ₊₁ = (Aup + Rₙ²·Adown)·(−A0)⁻¹`.
#[derive(Debug, Clone)]
pub struct RateIterates {
    r: Matrix,
    aup: Matrix,
    adown: Matrix,
    neg_a0_inv: Matrix,
}

impl RateIterates {
    pub fn new(aup: &Matrix, a0: &Matrix, adown: &Matrix) -> Result<Self, QbdError> {
        let neg_a0_inv = (-a0).try_inverse().ok_or(QbdError::SingularA0)?;
        Ok(Self {
            r: Matrix::zeros(a0.nrows(), a0.ncols()),
            aup: aup.clone(),
            adown: adown.clone(),
            neg_a0_inv,
        })
    }
}

impl Iterator for RateIterates {
    type Item = Matrix;

    fn next(&mut self) -> Option<Matrix> {
        let next = (&self.aup + &self.r * &self.r * &self.adown) * &self.neg_a0_inv;
        self.r = next.clone();
        Some(next)
    }
}

pub fn spectral_radius(m: &Matrix) -> f64 {
    if m.amax() == 0.0 {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .fold(0.0_f64, |s, z| s.max(z.norm()))
}

pub fn minimal_rate_matrix(aup: &Matrix, a0: &Matrix, adown: &Matrix) -> Result<RateMatrix, QbdError> {
    let mut iterates = RateIterates::new(aup, a0, adown)?;
    let mut r = Matrix::zeros(a0.nrows(), a0.ncols());
    for iterations in 1..=R_MAX_ITERATIONS {
        let next = iterates.next().expect("iterates are unbounded");
        let delta = (&next - &r).amax();
        r = next;
        if delta <= R_TOLERANCE {
            let spectral_radius = spectral_radius(&r);
            return Ok(RateMatrix { r, iterations, spectral_radius });
        }
    }
    Err(QbdError::IterationCap { iterations: R_MAX_ITERATIONS })
}

/// Stationary distribution of a positive recurrent QBD in matrix-geometric
/// form: `π_l = π₁·R^(l−1)` for `l ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QbdSolution {
    pub pi0: DVector<f64>,
    pub pi1: DVector<f64>,
    pub pi2: DVector<f64>,
    pub r: RateMatrix,
    /// `(−A0 − R·Adown)⁻¹`
    pub n: Matrix,
}

impl QbdSolution {
    pub fn level_distribution(&self, l: usize) -> DVector<f64> {
        match l {
            0 => self.pi0.clone(),
            _ => {
                let mut v = self.pi1.clone();
                for _ in 1..l {
                    v = vm(&v, &self.r.r);
                }
                v
            }
        }
    }

    /// `Σ_{l≥1} π_l = π₁·(I − R)⁻¹`.
    pub fn interior_mass(&self) -> DVector<f64> {
        vm(&self.pi1, &self.tail_factor())
    }

    /// `(I − R)⁻¹`.
    pub fn tail_factor(&self) -> Matrix {
        let n = self.r.r.nrows();
        (Matrix::identity(n, n) - &self.r.r)
            .try_inverse()
            .expect("I - R is invertible when sp(R) < 1")
    }
}

pub fn solve_qbd(spec: &QbdSpec) -> Result<QbdSolution, QbdError> {
    let r = minimal_rate_matrix(&spec.aup, &spec.a0, &spec.adown)?;
    if r.spectral_radius >= 1.0 - SPECTRAL_MARGIN {
        return Err(QbdError::NotPositiveRecurrent { spectral_radius: r.spectral_radius });
    }
    let n = (-&spec.a0 - &r.r * &spec.adown)
        .try_inverse()
        .ok_or(QbdError::Singular)?;
    let up_n = &spec.bup * &n;
    let censored = &spec.b0 + &up_n * &spec.bdown;
    let tol = 1e-13 * censored.amax();
    let pi0 = ctmc::stationary_tol(&censored, tol).map_err(|e| match e {
        CtmcError::ClosedClassCount { found } => QbdError::BoundaryNullSpace { closed_classes: found },
        _ => QbdError::Singular,
    })?;

    let si = spec.interior_phases();
    let tail = (Matrix::identity(si, si) - &r.r)
        .try_inverse()
        .ok_or(QbdError::Singular)?;
    let pi1_unscaled = vm(&pi0, &up_n);
    let mass = 1.0 + vm(&pi1_unscaled, &tail).sum();
    let pi0 = pi0 / mass;
    let pi1 = pi1_unscaled / mass;
    let pi2 = vm(&pi1, &r.r);
    Ok(QbdSolution { pi0, pi1, pi2, r, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn s(v: f64) -> Matrix {
        Matrix::from_element(1, 1, v)
    }

    fn mm1(lambda: f64, mu: f64) -> QbdSpec {
        QbdSpec::new(s(-lambda), s(lambda), s(mu), s(mu), s(-(lambda + mu)), s(lambda)).unwrap()
    }

    #[test]
    fn scalar_rate_matrix_is_the_smaller_root() {
        let r = minimal_rate_matrix(&s(1.0), &s(-3.0), &s(2.0)).unwrap();
        assert_abs_diff_eq!(r.r[(0, 0)], 0.5, epsilon = 1e-12);
        assert!(r.residual(&s(1.0), &s(-3.0), &s(2.0)) <= 1e-10);
    }

    #[test]
    fn zero_up_rates_give_zero_r() {
        let r = minimal_rate_matrix(&Matrix::zeros(2, 2), &Matrix::from_diagonal_element(2, 2, -1.0), &Matrix::identity(2, 2)).unwrap();
        assert_eq!(r.r, Matrix::zeros(2, 2));
        assert_eq!(r.spectral_radius, 0.0);
    }

    #[test]
    fn mm1_is_geometric() {
        let sol = solve_qbd(&mm1(1.0, 2.0)).unwrap();
        assert_abs_diff_eq!(sol.pi0[0], 0.5, epsilon = 1e-12);
        for l in 0..10 {
            assert_abs_diff_eq!(sol.level_distribution(l)[0], 0.5 * 0.5f64.powi(l as i32), epsilon = 1e-12);
        }
        assert_eq!(sol.level_distribution(2), sol.pi2);
    }

    #[test]
    fn unstable_and_malformed_specs_are_rejected() {
        assert!(matches!(
            solve_qbd(&mm1(2.0, 1.0)),
            Err(QbdError::NotPositiveRecurrent { .. })
        ));
        assert!(matches!(
            QbdSpec::new(s(-1.0), s(1.0), s(2.0), s(2.0), s(-3.0), s(2.0)),
            Err(QbdError::RowSum { .. })
        ));
        assert!(matches!(
            QbdSpec::new(s(-1.0), s(1.0), s(2.0), Matrix::zeros(2, 2), s(-3.0), s(1.0)),
            Err(QbdError::Shape { name: "Adown", .. })
        ));
    }

    #[test]
    fn second_root_dominates_the_minimal_one() {
        // μR² − (λ+μ)R + λ = 0 has roots λ/μ and 1.
        for (l, m) in [(0.3, 1.0), (1.0, 4.0), (2.0, 2.5)] {
            let r = minimal_rate_matrix(&s(l), &s(-(l + m)), &s(m)).unwrap();
            assert_abs_diff_eq!(r.r[(0, 0)], l / m, epsilon = 1e-12);
            assert!(r.r[(0, 0)] <= 1.0);
        }
    }

    /// Random positive recurrent QBD: every interior phase moves down faster
    /// than it moves up.
    fn random_spec() -> impl Strategy<Value = QbdSpec> {
        (1usize..4, 1usize..4).prop_flat_map(|(sb, si)| {
            (
                prop::collection::vec(0.0..1.0f64, sb * sb),
                prop::collection::vec(0.1..1.0f64, sb * si),
                prop::collection::vec(0.1..1.0f64, si * sb),
                prop::collection::vec(0.0..1.0f64, si * si),
                prop::collection::vec(0.0..0.45 / si as f64, si * si),
                prop::collection::vec(0.5..1.5f64, si),
            )
                .prop_map(move |(b0, bup, bd, a0, aup, down)| {
                    let mut b0 = Matrix::from_row_slice(sb, sb, &b0);
                    let bup = Matrix::from_row_slice(sb, si, &bup);
                    let mut a0 = Matrix::from_row_slice(si, si, &a0);
                    let aup = Matrix::from_row_slice(si, si, &aup);
                    let adown = Matrix::from_diagonal(&DVector::from_vec(down));
                    let mut bdown = Matrix::from_row_slice(si, sb, &bd);
                    for i in 0..si {
                        let w = bdown.row(i).sum();
                        let d = adown[(i, i)];
                        bdown.row_mut(i).iter_mut().for_each(|x| *x *= d / w);
                        a0[(i, i)] = 0.0;
                        a0[(i, i)] = -(a0.row(i).sum() + aup.row(i).sum() + d);
                    }
                    for i in 0..sb {
                        b0[(i, i)] = 0.0;
                        b0[(i, i)] = -(b0.row(i).sum() + bup.row(i).sum());
                    }
                    QbdSpec::new(b0, bup, bdown, adown, a0, aup).unwrap()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn iterates_increase_monotonically(spec in random_spec()) {
            let mut prev = Matrix::zeros(spec.interior_phases(), spec.interior_phases());
            for next in RateIterates::new(&spec.aup, &spec.a0, &spec.adown).unwrap().take(200) {
                prop_assert!((&next - &prev).min() >= -1e-15);
                prev = next;
            }
        }

        #[test]
        fn solution_balances_the_truncated_generator(spec in random_spec()) {
            let sol = solve_qbd(&spec).unwrap();
            prop_assert!(sol.r.residual(&spec.aup, &spec.a0, &spec.adown) <= 1e-10);
            prop_assert!(sol.pi0.min() >= 0.0 && sol.pi1.min() >= -1e-15);
            let total = sol.pi0.sum() + sol.interior_mass().sum();
            prop_assert!((total - 1.0).abs() <= 1e-10);

            // Balance at levels 0..=5 holds exactly for the infinite chain.
            let levels = 7;
            let g = spec.truncated_generator(levels);
            let mut pi = DVector::zeros(g.nrows());
            pi.rows_mut(0, spec.boundary_phases()).copy_from(&sol.pi0);
            for l in 1..=levels {
                let at = spec.boundary_phases() + (l - 1) * spec.interior_phases();
                pi.rows_mut(at, spec.interior_phases()).copy_from(&sol.level_distribution(l));
            }
            let flow = g.tr_mul(&pi);
            let checked = spec.boundary_phases() + 5 * spec.interior_phases();
            prop_assert!(flow.rows(0, checked).amax() <= 1e-10);
        }
    }
}
