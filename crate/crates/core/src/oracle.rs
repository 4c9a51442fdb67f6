//! Reference evaluations of the permanent and determinant.
//!
//! These are the independent routes the spin-operator sweep is checked
//! against: the `n!` definition, Ryser's inclusion-exclusion formula, and
//! Gaussian elimination.

use crate::error::{Error, Result};
use crate::exec::{map_chunks, Execution};
use crate::matrix::SquareMatrix;
use crate::opcount::OpCount;
use crate::scalar::Scalar;

pub const NAIVE_MAX_N: usize = 10;
pub const RYSER_MAX_N: usize = 30;

const RYSER_CHUNK: u64 = 1 << 14;

/// Sum over all `n!` permutations of `Π w[i][σ(i)]`.
pub fn permanent_naive<T: Scalar>(m: &SquareMatrix<T>) -> Result<T> {
    permutation_sum(m, false)
}

/// Signed permutation sum; used as a determinant oracle in tests.
pub fn determinant_naive<T: Scalar>(m: &SquareMatrix<T>) -> Result<T> {
    permutation_sum(m, true)
}

fn permutation_sum<T: Scalar>(m: &SquareMatrix<T>, signed: bool) -> Result<T> {
    let n = m.n();
    if n > NAIVE_MAX_N {
        return Err(Error::SizeGuard {
            what: "naive permutation sum",
            n,
            max: NAIVE_MAX_N,
        });
    }
    // Heap's algorithm; every swap flips the signature.
    let mut perm: Vec<usize> = (0..n).collect();
    let mut stack = vec![0usize; n];
    let mut negative = false;
    // Terms with a zero factor are skipped; this matters for sparse exact
    // inputs, where big-rational products dominate.
    let term = |perm: &[usize]| {
        let mut acc = T::one();
        for (r, &c) in perm.iter().enumerate() {
            let w = m.get(r, c);
            if w.is_zero() {
                return T::zero();
            }
            acc = acc * w.clone();
        }
        acc
    };
    let mut total = term(&perm);
    let mut i = 1;
    while i < n {
        if stack[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(stack[i], i);
            }
            negative = !negative;
            let t = term(&perm);
            if !t.is_zero() {
                total = if signed && negative { total - t } else { total + t };
            }
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    Ok(total)
}

/// Ryser's formula with Gray-code subset traversal.
pub fn permanent_ryser<T: Scalar>(m: &SquareMatrix<T>) -> Result<T> {
    permanent_ryser_with(m, Execution::default())
}

pub fn permanent_ryser_with<T: Scalar>(m: &SquareMatrix<T>, exec: Execution) -> Result<T> {
    let n = ryser_guard(m)?;
    let steps = (1u64 << n) - 1;
    let chunks = steps.div_ceil(RYSER_CHUNK);
    let partials = map_chunks(exec, chunks as usize, |c| {
        let start = 1 + c as u64 * RYSER_CHUNK;
        let end = (start + RYSER_CHUNK).min(steps + 1);
        ryser_range(m, start, end, None)
    });
    let (mut total, mut carry) = (T::zero(), T::zero());
    for p in partials {
        T::accumulate(&mut total, &mut carry, p);
    }
    let total = total + carry;
    Ok(if n % 2 == 1 { -total } else { total })
}

/// Sequential Ryser sweep that tallies every multiplication and addition.
///
/// Singleton subsets copy their column, all other subsets update `n` row
/// sums, each product costs `n - 1` multiplications and the `2ⁿ - 1` signed
/// terms are accumulated with `2ⁿ - 2` additions.
pub fn permanent_ryser_counted<T: Scalar>(m: &SquareMatrix<T>) -> Result<(T, OpCount)> {
    let n = ryser_guard(m)?;
    let mut ops = OpCount::default();
    let total = ryser_range(m, 1, 1u64 << n, Some(&mut ops));
    Ok((if n % 2 == 1 { -total } else { total }, ops))
}

fn ryser_guard<T: Scalar>(m: &SquareMatrix<T>) -> Result<usize> {
    let n = m.n();
    if n > RYSER_MAX_N {
        return Err(Error::SizeGuard {
            what: "Ryser permanent",
            n,
            max: RYSER_MAX_N,
        });
    }
    Ok(n)
}

/// Signed partial sum `Σ (-1)^{|S|} Π_i Σ_{j∈S} w[i][j]` over Gray-code
/// steps `start..end`. Row sums and the running total are compensated, so
/// float results stay accurate under the heavy cancellation at large n.
fn ryser_range<T: Scalar>(
    m: &SquareMatrix<T>,
    start: u64,
    end: u64,
    mut ops: Option<&mut OpCount>,
) -> T {
    let n = m.n();
    // Row sums carry a compensation term so the Gray-code updates do not drift.
    let mut sums: Vec<T> = vec![T::zero(); n];
    let mut carries: Vec<T> = vec![T::zero(); n];
    // Compensated: the signed terms cancel heavily for large n.
    let (mut acc, mut carry) = (T::zero(), T::zero());
    for k in start..end {
        let gray = k ^ (k >> 1);
        if gray.count_ones() == 1 {
            let j = gray.trailing_zeros() as usize;
            for i in 0..n {
                sums[i] = m.get(i, j).clone();
                carries[i] = T::zero();
            }
        } else if k == start {
            for i in 0..n {
                carries[i] = T::zero();
                sums[i] = T::zero();
                for j in (0..n).filter(|&j| gray >> j & 1 == 1) {
                    T::accumulate(&mut sums[i], &mut carries[i], m.get(i, j).clone());
                }
            }
        } else {
            let j = k.trailing_zeros() as usize;
            let added = gray >> j & 1 == 1;
            for i in 0..n {
                let w = m.get(i, j).clone();
                T::accumulate(&mut sums[i], &mut carries[i], if added { w } else { -w });
            }
            if let Some(ops) = ops.as_deref_mut() {
                ops.additions += n as u64;
            }
        }
        T::accumulate_product(&mut acc, &mut carry, &sums, &carries, gray.count_ones() % 2 == 1);
        if let Some(ops) = ops.as_deref_mut() {
            ops.multiplications += n as u64 - 1;
            if k > start {
                ops.additions += 1;
            }
        }
    }
    acc + carry
}

/// Determinant by Gaussian elimination with partial pivoting.
///
/// Returns exactly zero when a column has no nonzero pivot candidate.
pub fn determinant_gauss<T: Scalar>(m: &SquareMatrix<T>) -> T {
    let n = m.n();
    let mut a = m.clone();
    let mut det = T::one();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !a.get(r, col).is_zero())
            .max_by(|&x, &y| a.get(x, col).magnitude().total_cmp(&a.get(y, col).magnitude()));
        let Some(pivot) = pivot else {
            return T::zero();
        };
        if pivot != col {
            a.swap_rows(pivot, col);
            det = -det;
        }
        let p = a.get(col, col).clone();
        for r in col + 1..n {
            if a.get(r, col).is_zero() {
                continue;
            }
            let factor = a.get(r, col).clone() / p.clone();
            for c in col..n {
                let v = a.get(r, c).clone() - factor.clone() * a.get(col, c).clone();
                a.set(r, c, v);
            }
        }
        det = det * p;
    }
    det
}

/// Result of the fixed-order reduction to lower-triangular form.
#[derive(Clone, Debug)]
pub struct LowerTriangular<T> {
    /// Final lower-triangular matrix.
    pub matrix: SquareMatrix<T>,
    /// Matrix after each round; round `k` (1-based) is `rounds[k - 1]`.
    pub rounds: Vec<SquareMatrix<T>>,
}

impl<T: Scalar> LowerTriangular<T> {
    pub fn diagonal_product(&self) -> T {
        (0..self.matrix.n()).fold(T::one(), |acc, i| acc * self.matrix.get(i, i).clone())
    }
}

/// Eliminates the upper triangle column by column from the right, without
/// pivoting.
///
/// Entries that are already zero need no pivot; a nonzero entry above a
/// vanishing pivot is a [`Error::ZeroPivot`].
///
/// Round `k` clears column `n - k` in rows `0..n-k-1` by subtracting from
/// each row a multiple of the (unmodified) row below it:
/// `w'[r][c] = w[r][c] - w[r][n-k] · w[r+1][c] / w[r+1][n-k]`.
pub fn lower_triangular_reduce<T: Scalar>(m: &SquareMatrix<T>) -> Result<LowerTriangular<T>> {
    let n = m.n();
    let mut cur = m.clone();
    let mut rounds = Vec::with_capacity(n.saturating_sub(1));
    for round in 1..n {
        let col = n - round;
        let prev = cur.clone();
        for r in 0..col {
            if prev.get(r, col).is_zero() {
                continue;
            }
            let pivot = prev.get(r + 1, col);
            if pivot.is_zero() {
                return Err(Error::ZeroPivot {
                    round,
                    detail: format!("w{}_{{{},{}}} = 0", "'".repeat(round - 1), r + 1, col),
                });
            }
            let factor = prev.get(r, col).clone() / pivot.clone();
            for c in 0..=col {
                let v = prev.get(r, c).clone() - factor.clone() * prev.get(r + 1, c).clone();
                cur.set(r, c, v);
            }
            cur.set(r, col, T::zero());
        }
        rounds.push(cur.clone());
    }
    Ok(LowerTriangular {
        matrix: cur,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{random_matrix, random_zero_one, RandomKind};
    use crate::opcount::ryser_ops;
    use crate::scalar::{rel_diff, Exact};
    use num_complex::Complex64;

    fn m2() -> SquareMatrix {
        SquareMatrix::parse_csv("1,2\n3,4").unwrap()
    }

    fn re(z: Complex64) -> f64 {
        assert_eq!(z.im, 0.0);
        z.re
    }

    #[test]
    fn naive_examples() {
        assert_eq!(re(permanent_naive(&SquareMatrix::identity(3)).unwrap()), 1.0);
        assert_eq!(re(permanent_naive(&SquareMatrix::ones(3)).unwrap()), 6.0);
        assert_eq!(re(permanent_naive(&m2()).unwrap()), 10.0);
        assert_eq!(re(determinant_naive(&m2()).unwrap()), -2.0);
        assert!(matches!(
            permanent_naive(&SquareMatrix::<Complex64>::identity(11)),
            Err(Error::SizeGuard { max: 10, .. })
        ));
    }

    #[test]
    fn ryser_examples() {
        assert_eq!(re(permanent_ryser(&SquareMatrix::ones(4)).unwrap()), 24.0);
        assert_eq!(re(permanent_ryser(&SquareMatrix::identity(5)).unwrap()), 1.0);
        assert_eq!(re(permanent_ryser(&m2()).unwrap()), 10.0);
        let m = SquareMatrix::<Complex64>::identity(1);
        assert_eq!(re(permanent_ryser(&m).unwrap()), 1.0);
        assert!(matches!(
            permanent_ryser(&SquareMatrix::<Complex64>::identity(31)),
            Err(Error::SizeGuard { max: 30, .. })
        ));
    }

    #[test]
    fn ryser_matches_naive_random() {
        let m = random_matrix(6, 42, RandomKind::ComplexGaussian);
        let a = permanent_ryser(&m).unwrap();
        let b = permanent_naive(&m).unwrap();
        assert!(rel_diff(a, b) < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn ryser_chunking_is_deterministic() {
        // 2^15 - 1 steps span two chunks.
        let m = random_matrix(15, 3, RandomKind::RealUniform);
        let seq = permanent_ryser_with(&m, Execution::Sequential).unwrap();
        let par = permanent_ryser_with(&m, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
        // The unchunked sweep accumulates in a different order; Ryser's
        // alternating sum cancels heavily on positive matrices.
        let (counted, _) = permanent_ryser_counted(&m).unwrap();
        assert!(rel_diff(seq, counted) < 1e-8, "{}", rel_diff(seq, counted));
    }

    #[test]
    fn ryser_counts_match_closed_form() {
        for n in 1..=12usize {
            let m = random_matrix(n, n as u64, RandomKind::RealUniform);
            let (_, ops) = permanent_ryser_counted(&m).unwrap();
            assert_eq!(ops.total(), ryser_ops(n as u32), "n = {n}");
        }
        // n = 3: 3·16 - 16 = 32.
        assert_eq!(ryser_ops(3), 32);
    }

    #[test]
    fn exact_ryser_equals_naive() {
        for seed in 0..5 {
            let m = random_zero_one::<Exact>(5, seed);
            assert_eq!(permanent_ryser(&m).unwrap(), permanent_naive(&m).unwrap());
        }
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(re(determinant_gauss(&m2())), -2.0);
        assert_eq!(re(determinant_gauss(&SquareMatrix::ones(2))), 0.0);
        let singular = SquareMatrix::<Complex64>::parse_csv("0,1,2\n0,3,4\n0,5,6").unwrap();
        assert_eq!(determinant_gauss(&singular), Complex64::new(0.0, 0.0));
        let e = SquareMatrix::<Exact>::parse_csv("2,1\n1,1").unwrap();
        assert_eq!(determinant_gauss(&e), Exact::from_i64(1));
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let m = random_matrix(3, 17, RandomKind::ComplexGaussian);
        let w = |r, c| *m.get(r, c);
        let cofactor = w(0, 0) * (w(1, 1) * w(2, 2) - w(1, 2) * w(2, 1))
            - w(0, 1) * (w(1, 0) * w(2, 2) - w(1, 2) * w(2, 0))
            + w(0, 2) * (w(1, 0) * w(2, 1) - w(1, 1) * w(2, 0));
        assert!(rel_diff(determinant_gauss(&m), cofactor) < 1e-13);
    }

    #[test]
    fn lower_triangular_primed_weights() {
        let m = random_matrix(3, 3, RandomKind::ComplexGaussian);
        let w = |r, c| *m.get(r, c);
        let lt = lower_triangular_reduce(&m).unwrap();
        let r1 = &lt.rounds[0];
        let w00p = w(0, 0) - w(0, 2) * w(1, 0) / w(1, 2);
        let w01p = w(0, 1) - w(0, 2) * w(1, 1) / w(1, 2);
        let w10p = w(1, 0) - w(1, 2) * w(2, 0) / w(2, 2);
        let w11p = w(1, 1) - w(1, 2) * w(2, 1) / w(2, 2);
        assert!(rel_diff(*r1.get(0, 0), w00p) < 1e-12);
        assert!(rel_diff(*r1.get(0, 1), w01p) < 1e-12);
        assert!(rel_diff(*r1.get(1, 0), w10p) < 1e-12);
        assert!(rel_diff(*r1.get(1, 1), w11p) < 1e-12);
        let w00pp = w00p - w01p * w10p / w11p;
        assert!(rel_diff(*lt.rounds[1].get(0, 0), w00pp) < 1e-12);
        assert!(rel_diff(lt.diagonal_product(), determinant_gauss(&m)) < 1e-10);
        for r in 0..3 {
            for c in r + 1..3 {
                assert_eq!(*lt.matrix.get(r, c), Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn lower_triangular_identity_and_zero_pivot() {
        let id = SquareMatrix::<Complex64>::identity(3);
        let lt = lower_triangular_reduce(&id).unwrap();
        assert_eq!(lt.matrix, id);
        assert_eq!(lt.diagonal_product(), Complex64::new(1.0, 0.0));

        let m = SquareMatrix::<Complex64>::parse_csv("1,2,3\n4,5,0\n7,8,9").unwrap();
        let err = lower_triangular_reduce(&m).unwrap_err();
        assert_eq!(
            err,
            Error::ZeroPivot {
                round: 1,
                detail: "w_{1,2} = 0".into()
            }
        );
    }
}
