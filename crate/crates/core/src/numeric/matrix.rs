use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::{Num, Policy, Rational, Scalar, FLOAT_TOL};
use crate::error::{BellError, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> DenseMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(BellError::DimensionMismatch { expected: n_cols, got: row.len() });
            }
            data.extend(row);
        }
        Ok(Self { rows: n_rows, cols: n_cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: T) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

impl<T: Num> DenseMatrix<T> {
    pub fn identity(n: usize) -> Self {
        let mut m = Self::filled(n, n, T::zero());
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }
}

impl DenseMatrix<Scalar> {
    /// Converts to an exact matrix; fails on float or mixed entries.
    pub fn to_exact(&self) -> Result<DenseMatrix<Rational>> {
        match Scalar::common_policy(&self.data)? {
            Some(Policy::Float) => Err(BellError::NotExact),
            _ => Ok(DenseMatrix {
                rows: self.rows,
                cols: self.cols,
                data: self.data.iter().map(Rational::from_scalar).collect::<Result<_>>()?,
            }),
        }
    }
}

/// Exact determinant by fraction-free (Bareiss) elimination.
///
/// Each row is scaled to integers first; the integer determinant is then
/// divided by the product of the row scales.
pub fn det_exact(m: &DenseMatrix<Rational>) -> Result<Rational> {
    if m.rows != m.cols {
        return Err(BellError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let n = m.rows;
    if n == 0 {
        return Ok(<Rational as One>::one());
    }
    let mut scale = BigInt::one();
    let mut a: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for r in 0..n {
        let row = m.row(r);
        let lcm = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        a.push(row.iter().map(|x| x.numer() * (&lcm / x.denom())).collect());
        scale *= lcm;
    }
    let det = bareiss(&mut a);
    Ok(Rational::new(det, scale))
}

fn bareiss(a: &mut [Vec<BigInt>]) -> BigInt {
    let n = a.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Exact determinant of a dynamically typed matrix; float entries are rejected.
pub fn det_exact_scalar(m: &DenseMatrix<Scalar>) -> Result<Scalar> {
    det_exact(&m.to_exact()?).map(Scalar::Exact)
}

/// Matrix rank. Rational pivots are the first nonzero entry; float pivots
/// are the largest in magnitude and must exceed `FLOAT_TOL`.
pub fn rank<T: Num>(m: &DenseMatrix<T>) -> usize {
    let mut a = m.clone();
    let (rows, cols) = (a.rows, a.cols);
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let pivot = match T::POLICY {
            Policy::Exact => (rank..rows).find(|&r| !a.get(r, c).near_zero(0.0)),
            Policy::Float => (rank..rows)
                .max_by(|&x, &y| {
                    a.get(x, c)
                        .abs_val()
                        .partial_cmp(&a.get(y, c).abs_val())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .filter(|&r| !a.get(r, c).near_zero(FLOAT_TOL)),
        };
        let Some(p) = pivot else { continue };
        a.swap_rows(rank, p);
        let pv = a.get(rank, c).clone();
        for r in rank + 1..rows {
            let factor = a.get(r, c).clone() / pv.clone();
            if factor.near_zero(0.0) {
                continue;
            }
            for k in c..cols {
                let v = a.get(r, k).clone() - factor.clone() * a.get(rank, k).clone();
                a.set(r, k, v);
            }
        }
        rank += 1;
    }
    rank
}

/// Rank of the difference vectors `p_i - p_0`.
pub fn affine_rank<T: Num>(points: &[Vec<T>]) -> Result<usize> {
    let first = points.first().ok_or(BellError::Empty("point list"))?;
    let dim = first.len();
    let mut diffs = Vec::with_capacity(points.len().saturating_sub(1));
    for p in &points[1..] {
        if p.len() != dim {
            return Err(BellError::DimensionMismatch { expected: dim, got: p.len() });
        }
        diffs.push(p.iter().zip(first).map(|(x, y)| x.clone() - y.clone()).collect::<Vec<_>>());
    }
    if diffs.is_empty() {
        return Ok(0);
    }
    Ok(rank(&DenseMatrix::from_rows(diffs)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::q;
    use proptest::prelude::*;

    fn rat_matrix(rows: &[&[i64]]) -> DenseMatrix<Rational> {
        DenseMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| Rational::from_i64(v)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_det() {
        assert_eq!(det_exact(&DenseMatrix::<Rational>::identity(12)).unwrap(), q(1, 1));
    }

    #[test]
    fn repeated_row_is_singular() {
        let m = rat_matrix(&[&[1, 2, 3], &[4, 5, 6], &[1, 2, 3]]);
        assert_eq!(det_exact(&m).unwrap(), q(0, 1));
    }

    #[test]
    fn needs_pivot_swap() {
        let m = rat_matrix(&[&[0, 1], &[1, 0]]);
        assert_eq!(det_exact(&m).unwrap(), q(-1, 1));
        let m = rat_matrix(&[&[2, 0, 1], &[0, 0, 3], &[1, 4, 0]]);
        // cofactor expansion: 2(0-12) - 0 + 1(0-0) = -24
        assert_eq!(det_exact(&m).unwrap(), q(-24, 1));
    }

    #[test]
    fn fractional_entries() {
        let m = DenseMatrix::from_rows(vec![vec![q(1, 2), q(1, 3)], vec![q(1, 4), q(1, 5)]]).unwrap();
        assert_eq!(det_exact(&m).unwrap(), q(1, 10) - q(1, 12));
    }

    #[test]
    fn non_square_and_float_rejected() {
        let m = rat_matrix(&[&[1, 2, 3], &[4, 5, 6]]);
        assert!(matches!(det_exact(&m), Err(BellError::NotSquare { .. })));
        let f = DenseMatrix::from_rows(vec![vec![Scalar::Float(1.0)]]).unwrap();
        assert!(matches!(det_exact_scalar(&f), Err(BellError::NotExact)));
    }

    #[test]
    fn affine_rank_examples() {
        assert_eq!(affine_rank(&[vec![q(1, 2), q(3, 1)]]).unwrap(), 0);
        let collinear = vec![vec![q(0, 1), q(0, 1)], vec![q(1, 1), q(2, 1)], vec![q(3, 1), q(6, 1)]];
        assert_eq!(affine_rank(&collinear).unwrap(), 1);
        let float = vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![3.0, 6.0 + 1e-12]];
        assert_eq!(affine_rank(&float).unwrap(), 1);
        assert!(affine_rank::<f64>(&[]).is_err());
    }

    fn small_rat() -> impl Strategy<Value = Rational> {
        (-6i64..=6, 1i64..=4).prop_map(|(n, d)| q(n, d))
    }

    proptest! {
        #[test]
        fn block_triangular_det_is_product(
            a in proptest::collection::vec(small_rat(), 9),
            b in proptest::collection::vec(small_rat(), 4),
            c in proptest::collection::vec(small_rat(), 6),
        ) {
            // [[A, C], [0, B]] with A 3x3, B 2x2, C 3x2
            let mut rows = Vec::new();
            for i in 0..3 {
                let mut r: Vec<Rational> = a[i * 3..i * 3 + 3].to_vec();
                r.extend_from_slice(&c[i * 2..i * 2 + 2]);
                rows.push(r);
            }
            for i in 0..2 {
                let mut r = vec![q(0, 1); 3];
                r.extend_from_slice(&b[i * 2..i * 2 + 2]);
                rows.push(r);
            }
            let full = det_exact(&DenseMatrix::from_rows(rows).unwrap()).unwrap();
            let da = det_exact(&DenseMatrix::from_rows(a.chunks(3).map(<[_]>::to_vec).collect()).unwrap()).unwrap();
            let db = det_exact(&DenseMatrix::from_rows(b.chunks(2).map(<[_]>::to_vec).collect()).unwrap()).unwrap();
            prop_assert_eq!(full, da * db);
        }

        #[test]
        fn affine_rank_invariant_under_permutation_and_translation(
            pts in proptest::collection::vec(proptest::collection::vec(small_rat(), 4), 1..7),
            shift in proptest::collection::vec(small_rat(), 4),
            rot in 0usize..7,
        ) {
            let base = affine_rank(&pts).unwrap();
            let mut perm = pts.clone();
            let k = rot % perm.len();
            perm.rotate_left(k);
            perm.reverse();
            prop_assert_eq!(affine_rank(&perm).unwrap(), base);
            let moved: Vec<Vec<Rational>> = pts
                .iter()
                .map(|p| p.iter().zip(&shift).map(|(x, s)| x + s).collect())
                .collect();
            prop_assert_eq!(affine_rank(&moved).unwrap(), base);
        }
    }
}
