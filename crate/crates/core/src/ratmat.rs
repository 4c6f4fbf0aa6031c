//! Dense linear algebra over any [`Scalar`].
//!
//! Every routine is written once and used both with exact rationals (the
//! analysis path) and with floats (simulation, eigenvalue fallback). With
//! [`Rational`] entries all results are exact: `M * M⁻¹ == I` holds with
//! equality, RREF is canonical, and orthogonality checks are equality tests.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::scalar::{format_float, format_rational, Rational, Scalar};

#[derive(Clone, PartialEq, Debug)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from row vectors. All rows must have equal length;
    /// `cols` is needed to describe a matrix with zero rows.
    pub fn from_rows(rows: Vec<Vec<T>>, cols: usize) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return invalid(format!("row {i} has {} entries, expected {cols}", row.len()));
            }
            data.extend(row);
        }
        Ok(Matrix { rows: n, cols, data })
    }

    /// Builds a matrix whose columns are the given vectors, each of length `rows`.
    pub fn from_columns(columns: &[Vec<T>], rows: usize) -> Result<Self> {
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return invalid(format!("column {j} has {} entries, expected {rows}", c.len()));
            }
        }
        Ok(Self::from_fn(rows, columns.len(), |r, c| columns[c][r].clone()))
    }

    pub fn diagonal(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = v.clone();
        }
        m
    }

    pub fn column_vector(values: &[T]) -> Self {
        Matrix { rows: values.len(), cols: 1, data: values.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn row_vecs(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn column_vecs(&self) -> Vec<Vec<T>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(|x| x.to_f64())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_negligible())
    }

    pub fn scale(&self, k: &T) -> Self {
        self.map(|x| x.clone() * k.clone())
    }

    pub fn mul(&self, rhs: &Matrix<T>) -> Result<Self> {
        if self.cols != rhs.rows {
            return invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            ));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    out[(i, j)] = out[(i, j)].clone() + a.clone() * b.clone();
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if self.cols != v.len() {
            return invalid(format!(
                "cannot multiply {}x{} by a vector of length {}",
                self.rows,
                self.cols,
                v.len()
            ));
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), v)).collect())
    }

    pub fn add(&self, rhs: &Matrix<T>) -> Result<Self> {
        self.zip(rhs, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, rhs: &Matrix<T>) -> Result<Self> {
        self.zip(rhs, |a, b| a.clone() - b.clone())
    }

    fn zip(&self, rhs: &Matrix<T>, f: impl Fn(&T, &T) -> T) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return invalid(format!(
                "shape mismatch {}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            ));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| f(a, b)).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), self.cols, |r, c| self[(idx[r], c)].clone())
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |r, c| self[(r, idx[c])].clone())
    }

    pub fn hstack(&self, rhs: &Matrix<T>) -> Result<Self> {
        if self.rows != rhs.rows {
            return invalid("hstack needs equal row counts");
        }
        Ok(Self::from_fn(self.rows, self.cols + rhs.cols, |r, c| {
            if c < self.cols { self[(r, c)].clone() } else { rhs[(r, c - self.cols)].clone() }
        }))
    }

    pub fn vstack(&self, rhs: &Matrix<T>) -> Result<Self> {
        if self.cols != rhs.cols {
            return invalid("vstack needs equal column counts");
        }
        let mut data = self.data.clone();
        data.extend(rhs.data.iter().cloned());
        Ok(Matrix { rows: self.rows + rhs.rows, cols: self.cols, data })
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows).map(|r| self.row(r).iter().cloned().fold(T::zero(), |a, b| a + b)).collect()
    }

    /// Sum of all rows (a row vector of column totals).
    pub fn column_sums(&self) -> Vec<T> {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)].clone()).fold(T::zero(), |a, b| a + b))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|r| (0..r).all(|c| (self[(r, c)].clone() - self[(c, r)].clone()).is_negligible()))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of bounds");
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of bounds");
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Display for Matrix<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_aligned(f, self, format_rational)
    }
}

impl fmt::Display for Matrix<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_aligned(f, self, |x| format_float(*x))
    }
}

fn write_aligned<T>(f: &mut fmt::Formatter<'_>, m: &Matrix<T>, show: impl Fn(&T) -> String) -> fmt::Result {
    let cells: Vec<Vec<String>> =
        (0..m.rows).map(|r| (0..m.cols).map(|c| show(&m.data[r * m.cols + c])).collect()).collect();
    let width = cells.iter().flatten().map(|s| s.len()).max().unwrap_or(1);
    for row in &cells {
        let line: Vec<String> = row.iter().map(|s| format!("{s:>width$}")).collect();
        writeln!(f, "[ {} ]", line.join("  "))?;
    }
    Ok(())
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Reduced row-echelon form and the (strictly increasing) pivot columns.
pub fn rref<T: Scalar>(m: &Matrix<T>) -> (Matrix<T>, Vec<usize>) {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..a.cols {
        if row == a.rows {
            break;
        }
        // largest magnitude pivot; for rationals any nonzero would do
        let mut best: Option<usize> = None;
        for r in row..a.rows {
            if a[(r, col)].is_negligible() {
                continue;
            }
            match best {
                Some(b) if a[(b, col)].magnitude() >= a[(r, col)].magnitude() => {}
                _ => best = Some(r),
            }
        }
        let Some(p) = best else {
            for r in row..a.rows {
                a[(r, col)] = T::zero();
            }
            continue;
        };
        if p != row {
            for c in 0..a.cols {
                a.data.swap(p * a.cols + c, row * a.cols + c);
            }
        }
        let inv = T::one() / a[(row, col)].clone();
        for c in col..a.cols {
            a[(row, c)] = a[(row, c)].clone() * inv.clone();
        }
        for r in 0..a.rows {
            if r == row || a[(r, col)].is_zero() {
                continue;
            }
            let factor = a[(r, col)].clone();
            for c in col..a.cols {
                let v = a[(r, c)].clone() - factor.clone() * a[(row, c)].clone();
                a[(r, c)] = v;
            }
            a[(r, col)] = T::zero();
        }
        pivots.push(col);
        row += 1;
    }
    (a, pivots)
}

pub fn rank<T: Scalar>(m: &Matrix<T>) -> usize {
    rref(m).1.len()
}

/// Basis of `{x : M x = 0}`: one vector per free column, with that free
/// variable set to one and the other free variables set to zero.
pub fn nullspace<T: Scalar>(m: &Matrix<T>) -> Vec<Vec<T>> {
    let (r, pivots) = rref(m);
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![T::zero(); m.cols];
            v[f] = T::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -r[(i, f)].clone();
            }
            v
        })
        .collect()
}

pub fn inverse<T: Scalar>(m: &Matrix<T>) -> Result<Matrix<T>> {
    if !m.is_square() {
        return invalid(format!("inverse of non-square {}x{} matrix", m.rows, m.cols));
    }
    let n = m.rows;
    let aug = m.hstack(&Matrix::identity(n))?;
    let (r, pivots) = rref(&aug);
    let rank = pivots.iter().filter(|&&p| p < n).count();
    if rank < n {
        return Err(Error::SingularMatrix { size: n, rank });
    }
    Ok(Matrix::from_fn(n, n, |i, j| r[(i, n + j)].clone()))
}

/// Solves `M x = b` for square nonsingular `M`.
pub fn solve<T: Scalar>(m: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    inverse(m)?.mul_vec(b)
}

/// Kronecker product of two column vectors, first factor major:
/// `(u1,u2) ⊗ (a,b) = (u1 a, u1 b, u2 a, u2 b)`.
pub fn kron<T: Scalar>(u: &[T], v: &[T]) -> Vec<T> {
    u.iter().flat_map(|x| v.iter().map(move |y| x.clone() * y.clone())).collect()
}

pub fn hadamard<T: Scalar>(a: &[T], b: &[T]) -> Result<Vec<T>> {
    if a.len() != b.len() {
        return invalid(format!("hadamard product of lengths {} and {}", a.len(), b.len()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x.clone() * y.clone()).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Orthogonalized<T> {
    /// Pairwise-orthogonal, unnormalised columns.
    pub columns: Vec<Vec<T>>,
    pub squared_norms: Vec<T>,
    /// Input columns that were linearly dependent on earlier ones.
    pub dropped: usize,
}

/// Classical Gram–Schmidt without normalisation, so rational input stays rational.
pub fn gram_schmidt<T: Scalar>(cols: &[Vec<T>]) -> Orthogonalized<T> {
    let mut columns: Vec<Vec<T>> = Vec::new();
    let mut squared_norms: Vec<T> = Vec::new();
    let mut dropped = 0;
    for c in cols {
        let mut v = c.clone();
        for (q, qq) in columns.iter().zip(&squared_norms) {
            let coef = dot(c, q) / qq.clone();
            if coef.is_zero() {
                continue;
            }
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi = vi.clone() - coef.clone() * qi.clone();
            }
        }
        let nn = dot(&v, &v);
        let input = dot(c, c);
        // relative test so that float callers do not keep rounding noise
        let negligible = nn.is_negligible() || (input.to_f64() > 0.0 && nn.to_f64() <= 1e-24 * input.to_f64());
        if negligible {
            dropped += 1;
        } else {
            columns.push(v);
            squared_norms.push(nn);
        }
    }
    Orthogonalized { columns, squared_norms, dropped }
}

/// Schur complement of `M` onto the index set `keep`:
/// `M_kk − M_ke · M_ee⁻¹ · M_ek`.
pub fn schur_complement<T: Scalar>(m: &Matrix<T>, keep: &[usize]) -> Result<Matrix<T>> {
    if !m.is_square() {
        return invalid("schur complement needs a square matrix");
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= m.rows) {
        return invalid(format!("keep index {bad} out of range"));
    }
    let elim: Vec<usize> = (0..m.rows).filter(|i| !keep.contains(i)).collect();
    let kk = m.select_rows(keep).select_columns(keep);
    if elim.is_empty() {
        return Ok(kk);
    }
    let ke = m.select_rows(keep).select_columns(&elim);
    let ek = m.select_rows(&elim).select_columns(keep);
    let ee = m.select_rows(&elim).select_columns(&elim);
    let ee_inv = inverse(&ee)?;
    kk.sub(&ke.mul(&ee_inv)?.mul(&ek)?)
}

impl Serialize for Matrix<Rational> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> =
            self.row_vecs().iter().map(|r| r.iter().map(format_rational).collect()).collect();
        rows.serialize(s)
    }
}

impl Serialize for Matrix<f64> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> =
            self.row_vecs().iter().map(|r| r.iter().map(|x| format_float(*x)).collect()).collect();
        rows.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    fn q(rows: &[&[i64]]) -> Matrix<Rational> {
        let cols = rows.first().map_or(0, |r| r.len());
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect(), cols).unwrap()
    }

    #[test]
    fn rref_of_identity() {
        let (r, p) = rref(&Matrix::<Rational>::identity(3));
        assert_eq!(r, Matrix::identity(3));
        assert_eq!(p, vec![0, 1, 2]);
    }

    #[test]
    fn rref_rank_one() {
        let (r, p) = rref(&q(&[&[1, 2], &[2, 4]]));
        assert_eq!(r, q(&[&[1, 2], &[0, 0]]));
        assert_eq!(p, vec![0]);
    }

    #[test]
    fn nullspace_of_triangle_laplacian() {
        let l = q(&[&[2, -1, -1], &[-1, 2, -1], &[-1, -1, 2]]);
        let ns = nullspace(&l);
        assert_eq!(ns, vec![vec![int(1), int(1), int(1)]]);
        assert_eq!(rank(&l), 2);
    }

    #[test]
    fn inverse_identity_and_singular() {
        let i4 = Matrix::<Rational>::identity(4);
        assert_eq!(inverse(&i4).unwrap(), i4);
        match inverse(&q(&[&[1, 2], &[2, 4]])) {
            Err(Error::SingularMatrix { size: 2, rank: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inverse_is_exact() {
        let m = q(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        let inv = inverse(&m).unwrap();
        assert_eq!(m.mul(&inv).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn kron_and_hadamard() {
        let u = [int(2), int(3)];
        let i = [int(5), int(7)];
        assert_eq!(kron(&u, &i), vec![int(10), int(14), int(15), int(21)]);
        assert_eq!(hadamard(&u, &i).unwrap(), vec![int(10), int(21)]);
        assert_eq!(kron(&u, &[int(1)]), u.to_vec());
        assert!(hadamard(&u, &[int(1)]).is_err());
    }

    #[test]
    fn gram_schmidt_examples() {
        let g = gram_schmidt(&[vec![int(1), int(1), int(1)]]);
        assert_eq!(g.squared_norms, vec![int(3)]);
        let g = gram_schmidt(&[vec![int(1), int(0)], vec![int(1), int(1)]]);
        assert_eq!(g.columns, vec![vec![int(1), int(0)], vec![int(0), int(1)]]);
        let g = gram_schmidt(&[vec![int(1), int(2)], vec![int(2), int(4)]]);
        assert_eq!(g.columns.len(), 1);
        assert_eq!(g.dropped, 1);
    }

    #[test]
    fn schur_scalar_and_block_diagonal() {
        let m = q(&[&[5, 2], &[2, 3]]);
        let s = schur_complement(&m, &[0]).unwrap();
        assert_eq!(s[(0, 0)], int(5) - ratio(4, 3));
        let bd = q(&[&[1, 0, 0], &[0, 2, 0], &[0, 0, 3]]);
        assert_eq!(schur_complement(&bd, &[0, 2]).unwrap(), q(&[&[1, 0], &[0, 3]]));
    }

    #[test]
    fn series_conductances_via_schur() {
        // path a - m - b with conductances g1, g2; eliminating m
        let (g1, g2) = (ratio(3, 1), ratio(5, 1));
        let l = Matrix::from_rows(
            vec![
                vec![g1.clone(), -g1.clone(), int(0)],
                vec![-g1.clone(), g1.clone() + g2.clone(), -g2.clone()],
                vec![int(0), -g2.clone(), g2.clone()],
            ],
            3,
        )
        .unwrap();
        let s = schur_complement(&l, &[0, 2]).unwrap();
        let series = g1.clone() * g2.clone() / (g1 + g2);
        assert_eq!(s[(0, 1)], -series.clone());
        assert_eq!(s[(0, 0)], series);
    }

    #[test]
    fn schur_singular_block() {
        let m = q(&[&[1, 1], &[1, 0]]);
        assert!(matches!(schur_complement(&m, &[0]), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn float_rref_drops_rounding_noise() {
        let m = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0 + 1e-15]], 2).unwrap();
        assert_eq!(rank(&m), 1);
    }
}
