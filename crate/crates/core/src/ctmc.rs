//! Finite continuous-time Markov chains given by dense generators.

use nalgebra::DVector;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::model::Matrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CtmcError {
    #[error("generator must be square, got {0:?}")]
    NotSquare((usize, usize)),
    #[error("Assumption 2 violated: expected exactly one irreducible (closed) class, found {found}")]
    ClosedClassCount { found: usize },
    #[error("stationary system is singular")]
    Singular,
    #[error("uniformization rate {nu} is below the largest exit rate {bound}")]
    UniformizationRate { nu: f64, bound: f64 },
}

/// Closed communicating classes, each sorted, ordered by smallest member.
/// An edge `i → j` exists iff `G[i,j] > 0`.
pub fn closed_classes(g: &Matrix) -> Vec<Vec<usize>> {
    closed_classes_tol(g, 0.0)
}

/// As [`closed_classes`], with edges only for rates above `tol`.
pub fn closed_classes_tol(g: &Matrix, tol: f64) -> Vec<Vec<usize>> {
    let n = g.nrows();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, n * 4);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && g[(i, j)] > tol {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let sccs = tarjan_scc(&graph);
    let mut component = vec![0; n];
    for (c, scc) in sccs.iter().enumerate() {
        for v in scc {
            component[v.index()] = c;
        }
    }
    let mut closed: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(c, scc)| {
            scc.iter()
                .all(|v| graph.neighbors(*v).all(|w| component[w.index()] == *c))
        })
        .map(|(_, scc)| {
            let mut members: Vec<usize> = scc.iter().map(|v| v.index()).collect();
            members.sort_unstable();
            members
        })
        .collect();
    closed.sort_unstable_by_key(|c| c[0]);
    closed
}

/// Stationary distribution of a generator with exactly one closed class.
/// States outside that class get probability exactly zero.
pub fn stationary(g: &Matrix) -> Result<DVector<f64>, CtmcError> {
    stationary_tol(g, 0.0)
}

/// As [`stationary`], ignoring rates at or below `tol` when locating the
/// closed class. Meant for generators assembled in floating point.
pub fn stationary_tol(g: &Matrix, tol: f64) -> Result<DVector<f64>, CtmcError> {
    if !g.is_square() {
        return Err(CtmcError::NotSquare(g.shape()));
    }
    let classes = closed_classes_tol(g, tol);
    if classes.len() != 1 {
        return Err(CtmcError::ClosedClassCount { found: classes.len() });
    }
    let class = &classes[0];
    let m = class.len();
    // Balance equations πG = 0 transposed, last one replaced by π·1 = 1.
    let mut a = Matrix::from_fn(m, m, |i, j| g[(class[j], class[i])]);
    a.row_mut(m - 1).fill(1.0);
    let mut b = DVector::zeros(m);
    b[m - 1] = 1.0;
    let pi = a.lu().solve(&b).ok_or(CtmcError::Singular)?;

    let mut out = DVector::zeros(g.nrows());
    for (k, &s) in class.iter().enumerate() {
        out[s] = pi[k].max(0.0);
    }
    let total = out.sum();
    Ok(out / total)
}

/// `P = I + G/ν`. With `nu = None`, ν is 1.05 times the largest exit rate
/// (or 1 for the zero generator).
pub fn uniformize(g: &Matrix, nu: Option<f64>) -> Result<(Matrix, f64), CtmcError> {
    if !g.is_square() {
        return Err(CtmcError::NotSquare(g.shape()));
    }
    let bound = g.diagonal().iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let nu = match nu {
        Some(nu) if nu.is_nan() || nu < bound || nu <= 0.0 => {
            return Err(CtmcError::UniformizationRate { nu, bound });
        }
        Some(nu) => nu,
        None if bound == 0.0 => 1.0,
        None => 1.05 * bound,
    };
    let n = g.nrows();
    Ok((Matrix::identity(n, n) + g / nu, nu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn m(r: usize, c: usize, v: &[f64]) -> Matrix {
        Matrix::from_row_slice(r, c, v)
    }

    fn priority_setup_plus() -> Matrix {
        // μ2 = 1, γ1 = γ2 = 2; arrivals cancel in the sum over all steps
        let (mu2, g1, g2) = (1.0, 2.0, 2.0);
        #[rustfmt::skip]
        let g = m(4, 4, &[
            0.0, 0.0, 0.0, 0.0,
            g1, -g1, 0.0, 0.0,
            0.0, mu2, -mu2, 0.0,
            0.0, 0.0, g2, -g2,
        ]);
        g
    }

    #[test]
    fn closed_classes_examples() {
        assert_eq!(closed_classes(&priority_setup_plus()), vec![vec![0]]);
        assert_eq!(closed_classes(&Matrix::zeros(2, 2)), vec![vec![0], vec![1]]);
        assert_eq!(closed_classes(&m(2, 2, &[0.0, 0.0, 1.0, -1.0])), vec![vec![0]]);
        let g = m(3, 3, &[-1.0, 1.0, 0.0, 1.0, -1.0, 0.0, 0.0, 2.0, -2.0]);
        assert_eq!(closed_classes(&g), vec![vec![0, 1]]);
    }

    #[test]
    fn stationary_examples() {
        let pi = stationary(&priority_setup_plus()).unwrap();
        assert_eq!(pi.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(stationary(&Matrix::zeros(1, 1)).unwrap()[0], 1.0);
        let (a, b) = (0.7, 1.9);
        let pi = stationary(&m(2, 2, &[-a, a, b, -b])).unwrap();
        assert_abs_diff_eq!(pi[0], b / (a + b), epsilon = 1e-15);
        assert_abs_diff_eq!(pi[1], a / (a + b), epsilon = 1e-15);
    }

    #[test]
    fn two_closed_classes_are_rejected() {
        assert_eq!(
            stationary(&Matrix::zeros(2, 2)),
            Err(CtmcError::ClosedClassCount { found: 2 })
        );
    }

    #[test]
    fn uniformize_examples() {
        let (p, nu) = uniformize(&Matrix::zeros(1, 1), Some(1.0)).unwrap();
        assert_eq!((p[(0, 0)], nu), (1.0, 1.0));
        let (p, _) = uniformize(&m(2, 2, &[-1.0, 1.0, 1.0, -1.0]), Some(2.0)).unwrap();
        assert_eq!(p, m(2, 2, &[0.5; 4]));
        let (_, nu) = uniformize(&m(2, 2, &[-1.0, 1.0, 2.0, -2.0]), None).unwrap();
        assert_abs_diff_eq!(nu, 2.1, epsilon = 1e-15);
        assert!(matches!(
            uniformize(&m(2, 2, &[-1.0, 1.0, 2.0, -2.0]), Some(1.5)),
            Err(CtmcError::UniformizationRate { .. })
        ));
    }

    fn irreducible_generator() -> impl Strategy<Value = Matrix> {
        (2usize..7).prop_flat_map(|n| {
            prop::collection::vec(0.05..3.0f64, n * n).prop_map(move |v| {
                let mut g = Matrix::from_row_slice(n, n, &v);
                for i in 0..n {
                    g[(i, i)] = 0.0;
                    g[(i, i)] = -g.row(i).sum();
                }
                g
            })
        })
    }

    /// Generator with random zero entries (possibly reducible).
    fn sparse_generator() -> impl Strategy<Value = Matrix> {
        (2usize..8).prop_flat_map(|n| {
            prop::collection::vec(prop_oneof![Just(0.0), 0.1..2.0f64], n * n).prop_map(move |v| {
                let mut g = Matrix::from_row_slice(n, n, &v);
                for i in 0..n {
                    g[(i, i)] = 0.0;
                    g[(i, i)] = -g.row(i).sum();
                }
                g
            })
        })
    }

    proptest! {
        #[test]
        fn stationary_matches_the_dense_null_space(g in irreducible_generator()) {
            let pi = stationary(&g).unwrap();
            let residual = (pi.transpose() * &g).amax();
            prop_assert!(residual <= 1e-12 * g.amax());

            let svd = g.transpose().svd(false, true);
            let k = svd.singular_values.imin();
            let v = svd.v_t.unwrap().row(k).transpose();
            let v = &v / v.sum();
            prop_assert!((&pi - v).amax() < 1e-10);
        }

        #[test]
        fn closed_classes_only_reach_themselves(g in sparse_generator()) {
            let classes = closed_classes(&g);
            prop_assert!(!classes.is_empty());
            for class in &classes {
                for &i in class {
                    for j in 0..g.ncols() {
                        if g[(i, j)] > 0.0 && i != j {
                            prop_assert!(class.contains(&j));
                        }
                    }
                }
            }
        }

        #[test]
        fn uniformization_preserves_stationarity(g in irreducible_generator()) {
            let (p, _) = uniformize(&g, None).unwrap();
            for i in 0..p.nrows() {
                prop_assert!((p.row(i).sum() - 1.0).abs() < 1e-14);
                prop_assert!(p.row(i).iter().all(|x| (0.0..=1.0).contains(x)));
            }
            let pi = stationary(&g).unwrap();
            prop_assert!((pi.transpose() * &p - pi.transpose()).amax() < 1e-12);
        }
    }
}
