//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use num_traits::Float;

use crate::ratmat::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct SymmetricEigen<F> {
    /// Ascending.
    pub values: Vec<F>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: Matrix<F>,
    pub sweeps: usize,
}

/// Diagonalises a symmetric matrix by cyclic Jacobi rotations until the
/// off-diagonal Frobenius norm drops below `tol` (relative to the matrix norm,
/// floored at one).
pub fn jacobi_eigen<F: Float + Scalar>(a: &Matrix<F>, tol: F, max_sweeps: usize) -> SymmetricEigen<F> {
    assert!(a.is_square(), "jacobi_eigen needs a square matrix");
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::<F>::identity(n);
    let frob = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .fold(F::zero(), |acc, (i, j)| acc + m[(i, j)] * m[(i, j)])
        .sqrt();
    let threshold = tol * frob.max(F::one());
    let two = F::one() + F::one();
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        let off = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(F::zero(), |acc, (i, j)| acc + m[(i, j)] * m[(i, j)])
            .sqrt();
        if off <= threshold {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == F::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + F::one()).sqrt());
                let c = F::one() / (t * t + F::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = v.select_columns(&order);
    SymmetricEigen { values, vectors, sweeps }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonalises_path_laplacian() {
        let l = Matrix::from_rows(vec![vec![1.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 1.0]], 3).unwrap();
        let e = jacobi_eigen(&l, 1e-14, 100);
        let expected = [0.0, 1.0, 3.0];
        for (got, want) in e.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        // L v = λ v for each column
        let lv = l.mul(&e.vectors).unwrap();
        for k in 0..3 {
            for r in 0..3 {
                assert!((lv[(r, k)] - e.values[k] * e.vectors[(r, k)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn works_in_f32() {
        let m = Matrix::from_rows(vec![vec![2.0f32, 1.0], vec![1.0, 2.0]], 2).unwrap();
        let e = jacobi_eigen(&m, 1e-6, 50);
        assert!((e.values[0] - 1.0).abs() < 1e-5);
        assert!((e.values[1] - 3.0).abs() < 1e-5);
    }
}
