use super::{Matrix, ModelError};

/// Kronecker product `a ⊗ b`.
pub fn kron_product(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Kronecker sum `a ⊕ b = a ⊗ I + I ⊗ b` of two square matrices.
pub fn kron_sum(a: &Matrix, b: &Matrix) -> Result<Matrix, ModelError> {
    if !a.is_square() || !b.is_square() {
        return Err(ModelError::NotSquare(a.shape(), b.shape()));
    }
    let ia = Matrix::identity(a.nrows(), a.nrows());
    let ib = Matrix::identity(b.nrows(), b.nrows());
    Ok(a.kronecker(&ib) + ia.kronecker(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_matrix(max: usize) -> impl Strategy<Value = Matrix> {
        (1..=max, 1..=max).prop_flat_map(|(r, c)| {
            prop::collection::vec(-3.0..3.0f64, r * c)
                .prop_map(move |v| Matrix::from_row_slice(r, c, &v))
        })
    }

    fn generator(n: usize) -> impl Strategy<Value = Matrix> {
        prop::collection::vec(0.0..2.0f64, n * n).prop_map(move |v| {
            let mut m = Matrix::from_row_slice(n, n, &v);
            for i in 0..n {
                m[(i, i)] = 0.0;
                let s: f64 = m.row(i).sum();
                m[(i, i)] = -s;
            }
            m
        })
    }

    #[test]
    fn identity_and_scalar_cases() {
        let i6 = kron_product(&Matrix::identity(2, 2), &Matrix::identity(3, 3));
        assert_eq!(i6, Matrix::identity(6, 6));

        let s = kron_sum(&Matrix::from_element(1, 1, -1.0), &Matrix::from_element(1, 1, -2.0)).unwrap();
        assert_eq!(s, Matrix::from_element(1, 1, -3.0));

        let a = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let p = kron_product(&a, &Matrix::from_element(1, 1, 2.0));
        assert_eq!(p, Matrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]));
    }

    #[test]
    fn kron_sum_rejects_rectangular_operands() {
        let r = kron_sum(&Matrix::zeros(2, 3), &Matrix::identity(2, 2));
        assert!(matches!(r, Err(ModelError::NotSquare(..))));
    }

    proptest! {
        #[test]
        fn kron_product_is_associative(a in small_matrix(3), b in small_matrix(3), c in small_matrix(2)) {
            let left = kron_product(&kron_product(&a, &b), &c);
            let right = kron_product(&a, &kron_product(&b, &c));
            prop_assert!((left - right).amax() < 1e-12);
        }

        #[test]
        fn kron_product_is_bilinear(
            a in small_matrix(3),
            b in small_matrix(3),
            s in -2.0..2.0f64,
        ) {
            let a2 = a.map(|v| v * 0.5 + 1.0);
            let lhs = kron_product(&(&a * s + &a2), &b);
            let rhs = kron_product(&a, &b) * s + kron_product(&a2, &b);
            prop_assert!((lhs - rhs).amax() < 1e-10);
        }

        #[test]
        fn kron_sum_of_generators_is_a_generator(a in generator(3), b in generator(2)) {
            let s = kron_sum(&a, &b).unwrap();
            for i in 0..s.nrows() {
                prop_assert!(s.row(i).sum().abs() < 1e-12);
                for j in 0..s.ncols() {
                    if i != j {
                        prop_assert!(s[(i, j)] >= 0.0);
                    }
                }
            }
        }
    }
}
