//! Small dense complex matrices and reduced row echelon forms.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

/// Default relative threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        DenseMatrix { rows, cols, data }
    }

    pub fn column_vector(v: &[Complex64]) -> Self {
        DenseMatrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
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

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "vector length differs");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn conj_transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: Complex64) -> DenseMatrix {
        self.map(|z| z * s)
    }

    pub fn add(&self, rhs: &DenseMatrix) -> DenseMatrix {
        self.zip(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> DenseMatrix {
        self.zip(rhs, |a, b| a - b)
    }

    fn map(&self, f: impl Fn(Complex64) -> Complex64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    fn zip(&self, rhs: &DenseMatrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shapes differ");
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        vec_norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Entries with magnitude above `threshold`.
    pub fn count_nonzero(&self, threshold: f64) -> usize {
        self.data.iter().filter(|z| z.norm() > threshold).count()
    }

    /// Sets entries with `|z| ≤ threshold` to exact zero.
    pub fn chop(&mut self, threshold: f64) {
        for z in &mut self.data {
            if z.norm() <= threshold {
                *z = ZERO;
            }
        }
    }

    /// Submatrix on the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(rows.len(), cols.len(), |r, c| self[(rows[r], cols[c])])
    }

    /// Largest entry-wise distance to `rhs`, relative to the larger max-abs.
    pub fn rel_distance(&self, rhs: &DenseMatrix) -> f64 {
        let scale = self.max_abs().max(rhs.max_abs());
        if scale == 0.0 {
            0.0
        } else {
            self.sub(rhs).max_abs() / scale
        }
    }

    /// Reduced row echelon form with columns eliminated from last to first.
    ///
    /// Pivoting is partial (largest magnitude in the column); an entry counts
    /// as zero when `|z| ≤ rel_tol · max|entry|`. Because columns are taken in
    /// reverse, every free column `f` is the first nonzero coordinate of its
    /// kernel vector.
    pub fn lower_rref(&self, rel_tol: f64) -> Echelon {
        let mut r = self.clone();
        let threshold = rel_tol * self.max_abs();
        let mut pivots = Vec::new();
        let mut free = Vec::new();
        let mut next_row = 0;
        for col in (0..self.cols).rev() {
            let best = (next_row..self.rows)
                .map(|row| (row, r[(row, col)].norm()))
                .fold(None, |acc: Option<(usize, f64)>, (row, mag)| match acc {
                    Some((_, m)) if m >= mag => acc,
                    _ => Some((row, mag)),
                });
            let Some((prow, _)) = best.filter(|&(_, mag)| mag > threshold) else {
                free.push(col);
                continue;
            };
            r.swap_rows(prow, next_row);
            let inv = ONE / r[(next_row, col)];
            for c in 0..self.cols {
                r[(next_row, c)] *= inv;
            }
            r[(next_row, col)] = ONE;
            for row in 0..self.rows {
                if row == next_row {
                    continue;
                }
                let factor = r[(row, col)];
                if factor == ZERO {
                    continue;
                }
                for c in 0..self.cols {
                    let sub = factor * r[(next_row, c)];
                    r[(row, c)] -= sub;
                }
                r[(row, col)] = ZERO;
            }
            pivots.push((next_row, col));
            next_row += 1;
        }
        free.reverse();
        Echelon {
            reduced: r,
            pivots,
            free,
        }
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        self.lower_rref(rel_tol).pivots.len()
    }

    pub fn nullity(&self, rel_tol: f64) -> usize {
        self.cols - self.rank(rel_tol)
    }

    /// Null-space basis; see [`Echelon::kernel`].
    pub fn kernel(&self, rel_tol: f64) -> Vec<Vec<Complex64>> {
        self.lower_rref(rel_tol).kernel()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        assert!(r < self.rows && c < self.cols, "index out of bounds");
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        assert!(r < self.rows && c < self.cols, "index out of bounds");
        &mut self.data[r * self.cols + c]
    }
}

/// Output of [`DenseMatrix::lower_rref`].
#[derive(Clone, Debug)]
pub struct Echelon {
    pub reduced: DenseMatrix,
    /// `(row, column)` of each pivot, in elimination order.
    pub pivots: Vec<(usize, usize)>,
    /// Free columns, ascending.
    pub free: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// One vector per free column `f`, with coordinate `f` equal to 1 and
    /// all coordinates before `f` zero. Ordered by ascending `f`.
    pub fn kernel(&self) -> Vec<Vec<Complex64>> {
        let n = self.reduced.cols;
        self.free
            .iter()
            .map(|&f| {
                let mut v = vec![ZERO; n];
                v[f] = ONE;
                for &(row, col) in &self.pivots {
                    v[col] = -self.reduced[(row, f)];
                }
                v
            })
            .collect()
    }
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
