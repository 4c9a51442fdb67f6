//! The spin-1/2 branching operator and its level-by-level application.
//!
//! From a state `i` at Hamming level `h`, the operator flips every empty site
//! `j` with weight `w[h][j]` (times the Jordan-Wigner sign for fermionic
//! statistics). Applying it `n` times to the vacuum accumulates every
//! permutation product, leaving the permanent (bosonic) or determinant
//! (fermionic) as the vacuum amplitude.
//!
//! Two closures of the cycle are supported: [`Variant::Tilde`] walks up to
//! the fully occupied state and returns with unit weight, [`Variant::Breve`]
//! returns straight from level `n - 1` using the last row of weights.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{dense_index, jw_negative, BasisState};
use crate::combinadic::{next_same_weight, Binomials};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::exec::{for_each_chunk_mut, Execution};
use crate::matrix::SquareMatrix;
use crate::opcount::OpCount;
use crate::scalar::Scalar;

/// Largest site count the level sweep accepts.
pub const MAX_SITES: usize = 34;
/// Largest site count for which the operator is materialized densely.
pub const DENSE_MAX_N: usize = 12;

const LEVEL_CHUNK: usize = 1 << 12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Tilde,
    #[default]
    Breve,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistics {
    #[default]
    Bosonic,
    Fermionic,
}

/// Amplitudes of one Hamming level, indexed by combinadic rank.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelVector<T = Complex64> {
    n: usize,
    level: usize,
    amplitudes: Vec<T>,
}

impl<T: Scalar> LevelVector<T> {
    pub fn zeros(n: usize, level: usize) -> Self {
        let len = Binomials::new(n).get(n, level) as usize;
        LevelVector {
            n,
            level,
            amplitudes: vec![T::zero(); len],
        }
    }

    /// Unit amplitude on `state`.
    pub fn unit(state: BasisState) -> Self {
        let mut v = Self::zeros(state.n(), state.level());
        let rank = Binomials::new(state.n()).rank(state.mask()) as usize;
        v.amplitudes[rank] = T::one();
        v
    }

    pub fn from_amplitudes(n: usize, level: usize, amplitudes: Vec<T>) -> Result<Self> {
        let expected = Binomials::new(n).get(n, level) as usize;
        if amplitudes.len() != expected {
            return Err(Error::Dimension {
                expected,
                found: amplitudes.len(),
            });
        }
        Ok(LevelVector {
            n,
            level,
            amplitudes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn amplitudes(&self) -> &[T] {
        &self.amplitudes
    }

    pub fn amplitude(&self, state: BasisState) -> T {
        if state.level() != self.level {
            return T::zero();
        }
        let rank = Binomials::new(self.n).rank(state.mask()) as usize;
        self.amplitudes[rank].clone()
    }

    /// `(state, amplitude)` pairs in rank order.
    pub fn iter(&self) -> impl Iterator<Item = (BasisState, &T)> + '_ {
        let b = Binomials::new(self.n);
        self.amplitudes
            .iter()
            .enumerate()
            .map(move |(r, a)| (BasisState::new(self.n, b.unrank(self.level, r as u64)), a))
    }
}

/// One weighted transition of the operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge<T> {
    pub source: BasisState,
    pub target: BasisState,
    /// Weight-matrix entry `(row, col)` the edge carries; `None` for the unit
    /// return edge of [`Variant::Tilde`].
    pub weight_index: Option<(usize, usize)>,
    /// Jordan-Wigner sign applied.
    pub negative: bool,
    pub weight: T,
}

/// Implicit sparse operator over the `2ⁿ` occupation states.
#[derive(Clone, Debug)]
pub struct SpinOperator<'a, T = Complex64> {
    matrix: &'a SquareMatrix<T>,
    variant: Variant,
    statistics: Statistics,
    binomials: Binomials,
}

impl<'a, T: Scalar> SpinOperator<'a, T> {
    pub fn new(matrix: &'a SquareMatrix<T>, variant: Variant, statistics: Statistics) -> Result<Self> {
        let n = matrix.n();
        if n > MAX_SITES {
            return Err(Error::SizeGuard {
                what: "spin operator",
                n,
                max: MAX_SITES,
            });
        }
        Ok(SpinOperator {
            matrix,
            variant,
            statistics,
            binomials: Binomials::new(n),
        })
    }

    pub fn breve(matrix: &'a SquareMatrix<T>, statistics: Statistics) -> Result<Self> {
        Self::new(matrix, Variant::Breve, statistics)
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn matrix(&self) -> &SquareMatrix<T> {
        self.matrix
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    /// Hilbert-space dimension: `2ⁿ` (tilde) or `2ⁿ - 1` (breve).
    pub fn dimension(&self) -> usize {
        match self.variant {
            Variant::Tilde => 1 << self.n(),
            Variant::Breve => (1 << self.n()) - 1,
        }
    }

    /// Number of applications that return the vacuum to itself.
    pub fn period(&self) -> usize {
        match self.variant {
            Variant::Tilde => self.n() + 1,
            Variant::Breve => self.n(),
        }
    }

    #[inline]
    fn signed(&self, source_mask: u64, site: usize) -> bool {
        self.statistics == Statistics::Fermionic && jw_negative(source_mask, site)
    }

    fn check_vector(&self, v: &LevelVector<T>) -> Result<()> {
        if v.n != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                found: v.n,
            });
        }
        Ok(())
    }

    /// Raises a level-`h` vector to level `h + 1`.
    pub fn apply_level(&self, v: &LevelVector<T>, ops: &mut OpCount) -> Result<LevelVector<T>> {
        self.apply_level_with(v, ops, Execution::default())
    }

    pub fn apply_level_with(
        &self,
        v: &LevelVector<T>,
        ops: &mut OpCount,
        exec: Execution,
    ) -> Result<LevelVector<T>> {
        self.check_vector(v)?;
        let n = self.n();
        let top = match self.variant {
            Variant::Tilde => n - 1,
            Variant::Breve => n.saturating_sub(2),
        };
        if v.level > top || (self.variant == Variant::Breve && n < 2) {
            return Err(Error::LevelMismatch {
                expected: top,
                found: v.level,
            });
        }
        let (out, counted) = self.raise(v, exec);
        *ops += counted;
        Ok(out)
    }

    /// Pull-form raise: each target accumulates over its occupied sites, so
    /// chunks of targets are written independently.
    fn raise(&self, v: &LevelVector<T>, exec: Execution) -> (LevelVector<T>, OpCount) {
        let n = self.n();
        let h = v.level;
        let k = h + 1;
        let b = &self.binomials;
        let weights = self.matrix.row(h);
        let fermionic = self.statistics == Statistics::Fermionic;
        let mut out = vec![T::zero(); b.get(n, k) as usize];
        let counts = for_each_chunk_mut(exec, &mut out, LEVEL_CHUNK, |ci, chunk| {
            let mut ops = OpCount::default();
            let mut mask = b.unrank(k, (ci * LEVEL_CHUNK) as u64);
            for slot in chunk.iter_mut() {
                // Rank of `mask` with its m-th set bit removed is
                // Σ_{i<m} C(p_i, i) + Σ_{i>m} C(p_i, i-1).
                let mut above = 0u64;
                let mut bits = mask;
                let mut i = 1;
                while bits != 0 {
                    above += b.get(bits.trailing_zeros() as usize, i - 1);
                    bits &= bits - 1;
                    i += 1;
                }
                let mut below = 0u64;
                let (mut acc, mut carry) = (T::zero(), T::zero());
                let mut bits = mask;
                let mut m = 1;
                while bits != 0 {
                    let p = bits.trailing_zeros() as usize;
                    above -= b.get(p, m - 1);
                    let src = (below + above) as usize;
                    let term = weights[p].clone() * v.amplitudes[src].clone();
                    // k - m occupied sites lie above p in the source state.
                    let term = if fermionic && (k - m) % 2 == 1 { -term } else { term };
                    T::accumulate(&mut acc, &mut carry, term);
                    below += b.get(p, m);
                    bits &= bits - 1;
                    m += 1;
                }
                ops.fma(k as u64);
                *slot = acc + carry;
                mask = next_same_weight(mask);
            }
            ops
        });
        let ops = counts.into_iter().sum();
        (
            LevelVector {
                n,
                level: k,
                amplitudes: out,
            },
            ops,
        )
    }

    /// Breve return edges from level `n - 1` to the vacuum.
    pub fn apply_closing(&self, v: &LevelVector<T>, ops: &mut OpCount) -> Result<T> {
        self.check_vector(v)?;
        let n = self.n();
        if self.variant != Variant::Breve || v.level != n - 1 {
            return Err(Error::LevelMismatch {
                expected: n - 1,
                found: v.level,
            });
        }
        let full = (1u64 << n) - 1;
        let weights = self.matrix.row(n - 1);
        let (mut acc, mut carry) = (T::zero(), T::zero());
        for (state, amp) in v.iter() {
            let site = (full ^ state.mask()).trailing_zeros() as usize;
            let term = weights[site].clone() * amp.clone();
            let term = if self.signed(state.mask(), site) { -term } else { term };
            T::accumulate(&mut acc, &mut carry, term);
        }
        ops.fma(n as u64);
        Ok(acc + carry)
    }

    /// One application of the operator to a level vector.
    pub fn step(&self, v: &LevelVector<T>, ops: &mut OpCount, exec: Execution) -> Result<LevelVector<T>> {
        let n = self.n();
        match (self.variant, v.level) {
            (Variant::Breve, h) if h + 1 == n => {
                let amp = self.apply_closing(v, ops)?;
                Ok(LevelVector {
                    n,
                    level: 0,
                    amplitudes: vec![amp],
                })
            }
            (Variant::Tilde, h) if h == n => {
                self.check_vector(v)?;
                Ok(LevelVector {
                    n,
                    level: 0,
                    amplitudes: v.amplitudes.clone(),
                })
            }
            _ => self.apply_level_with(v, ops, exec),
        }
    }

    /// `⟨0| Opᵖ |0⟩` over a full period: the permanent (bosonic) or the
    /// determinant (fermionic), with the operation tally.
    pub fn evaluate(&self) -> (T, OpCount) {
        self.evaluate_with(Execution::default())
    }

    pub fn evaluate_with(&self, exec: Execution) -> (T, OpCount) {
        let mut ops = OpCount::default();
        let mut v = LevelVector::unit(BasisState::vacuum(self.n()));
        for _ in 0..self.period() {
            v = self
                .step(&v, &mut ops, exec)
                .expect("level sweep stays within the operator's levels");
        }
        (v.amplitudes.swap_remove(0), ops)
    }

    /// `Opᵖ |0⟩` as a level vector; the vacuum amplitude after a full period.
    pub fn operator_power_on_zero(&self, p: usize) -> Result<LevelVector<T>> {
        if p > self.period() {
            return Err(Error::Range {
                what: "power",
                value: p,
                max: self.period(),
            });
        }
        let mut ops = OpCount::default();
        let mut v = LevelVector::unit(BasisState::vacuum(self.n()));
        for _ in 0..p {
            v = self.step(&v, &mut ops, Execution::default())?;
        }
        Ok(v)
    }

    /// All transitions, grouped by source level.
    pub fn edges(&self) -> Vec<Edge<T>> {
        let n = self.n();
        let full = (1u64 << n) - 1;
        let mut edges = Vec::with_capacity(n << (n - 1));
        for h in 0..n {
            let mut mask = (1u64 << h) - 1;
            for _ in 0..self.binomials.get(n, h) {
                let source = BasisState::new(n, mask);
                for site in (0..n).filter(|&j| mask >> j & 1 == 0) {
                    let target_mask = if self.variant == Variant::Breve && h + 1 == n {
                        0
                    } else {
                        mask | 1 << site
                    };
                    let negative = self.signed(mask, site);
                    let w = self.matrix.get(h, site).clone();
                    edges.push(Edge {
                        source,
                        target: BasisState::new(n, target_mask),
                        weight_index: Some((h, site)),
                        negative,
                        weight: if negative { -w } else { w },
                    });
                }
                mask = if mask == 0 { break } else { next_same_weight(mask) };
            }
        }
        if self.variant == Variant::Tilde {
            edges.push(Edge {
                source: BasisState::new(n, full),
                target: BasisState::vacuum(n),
                weight_index: None,
                negative: false,
                weight: T::one(),
            });
        }
        edges
    }

    /// Dense adjacency matrix in lexicographic basis order; entry
    /// `(target, source)` holds the edge weight.
    pub fn dense_operator(&self) -> Result<DenseMatrix> {
        let n = self.n();
        if n > DENSE_MAX_N {
            return Err(Error::SizeGuard {
                what: "dense operator",
                n,
                max: DENSE_MAX_N,
            });
        }
        let d = self.dimension();
        let mut m = DenseMatrix::zeros(d, d);
        for e in self.edges() {
            let t = dense_index(n, e.target.mask());
            let s = dense_index(n, e.source.mask());
            m[(t, s)] += e.weight.to_c64();
        }
        Ok(m)
    }
}

/// Scatters a level vector into the dense basis of the given dimension.
pub fn level_to_dense<T: Scalar>(v: &LevelVector<T>, dimension: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); dimension];
    for (state, amp) in v.iter() {
        out[state.dense_index()] = amp.to_c64();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{random_matrix, RandomKind};
    use crate::opcount::spin_sweep_ops;
    use crate::oracle::{determinant_gauss, permanent_ryser};
    use crate::scalar::rel_diff;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn st(s: &str) -> BasisState {
        BasisState::parse(s).unwrap()
    }

    fn labelled3() -> SquareMatrix {
        // w[r][c] = 10 r + c + 1 keeps every weight distinct.
        SquareMatrix::from_fn(3, |r, col| c((10 * r + col + 1) as f64))
    }

    #[test]
    fn first_level_from_vacuum() {
        let m = labelled3();
        let op = SpinOperator::breve(&m, Statistics::Bosonic).unwrap();
        let mut ops = OpCount::default();
        let v = op.apply_level(&LevelVector::unit(st("000")), &mut ops).unwrap();
        assert_eq!(v.level(), 1);
        assert_eq!(v.amplitude(st("100")), *m.get(0, 0));
        assert_eq!(v.amplitude(st("010")), *m.get(0, 1));
        assert_eq!(v.amplitude(st("001")), *m.get(0, 2));
        assert_eq!(ops.total(), 6);
    }

    #[test]
    fn fermionic_signs_on_second_level() {
        let m = labelled3();
        let op = SpinOperator::breve(&m, Statistics::Fermionic).unwrap();
        let mut ops = OpCount::default();
        let v = op.apply_level(&LevelVector::unit(st("010")), &mut ops).unwrap();
        assert_eq!(v.amplitude(st("110")), -*m.get(1, 0));
        assert_eq!(v.amplitude(st("011")), *m.get(1, 2));
        assert_eq!(v.amplitude(st("101")), c(0.0));
    }

    #[test]
    fn identity_kills_off_diagonal_edges() {
        let m = SquareMatrix::<Complex64>::identity(3);
        let op = SpinOperator::breve(&m, Statistics::Bosonic).unwrap();
        let v = op
            .apply_level(&LevelVector::unit(st("100")), &mut OpCount::default())
            .unwrap();
        assert_eq!(v.amplitude(st("110")), c(1.0));
        assert_eq!(v.amplitude(st("101")), c(0.0));
        assert_eq!(v.amplitude(st("011")), c(0.0));
    }

    #[test]
    fn closing_edges() {
        let m = labelled3();
        let w = |r, col| *m.get(r, col);
        let (a, b, cc) = (c(2.0), c(3.0), c(5.0));
        let mut amps = vec![c(0.0); 3];
        // Rank order of weight-2 masks: 0b011 (110), 0b101 (101), 0b110 (011).
        amps[0] = a;
        amps[1] = b;
        amps[2] = cc;
        let v = LevelVector::from_amplitudes(3, 2, amps).unwrap();
        let bos = SpinOperator::breve(&m, Statistics::Bosonic).unwrap();
        let fer = SpinOperator::breve(&m, Statistics::Fermionic).unwrap();
        let mut ops = OpCount::default();
        assert_eq!(
            bos.apply_closing(&v, &mut ops).unwrap(),
            a * w(2, 2) + b * w(2, 1) + cc * w(2, 0)
        );
        assert_eq!(
            fer.apply_closing(&v, &mut ops).unwrap(),
            a * w(2, 2) - b * w(2, 1) + cc * w(2, 0)
        );
        let zero = LevelVector::zeros(3, 2);
        assert_eq!(bos.apply_closing(&zero, &mut ops).unwrap(), c(0.0));
    }

    #[test]
    fn level_guards() {
        let m = labelled3();
        let op = SpinOperator::breve(&m, Statistics::Bosonic).unwrap();
        let mut ops = OpCount::default();
        let top = LevelVector::<Complex64>::zeros(3, 2);
        assert!(matches!(
            op.apply_level(&top, &mut ops),
            Err(Error::LevelMismatch { .. })
        ));
        let low = LevelVector::<Complex64>::zeros(3, 1);
        assert!(matches!(
            op.apply_closing(&low, &mut ops),
            Err(Error::LevelMismatch { expected: 2, found: 1 })
        ));
        let tilde = SpinOperator::new(&m, Variant::Tilde, Statistics::Bosonic).unwrap();
        assert!(tilde.apply_level(&top, &mut ops).is_ok());
        let wrong_n = LevelVector::<Complex64>::zeros(4, 1);
        assert!(matches!(op.apply_level(&wrong_n, &mut ops), Err(Error::Dimension { .. })));
    }

    #[test]
    fn evaluate_examples() {
        let ones = SquareMatrix::<Complex64>::ones(4);
        let (p, ops) = SpinOperator::breve(&ones, Statistics::Bosonic).unwrap().evaluate();
        assert_eq!(p, c(24.0));
        assert_eq!(ops.total(), 64);

        let m2 = SquareMatrix::<Complex64>::parse_csv("1,2\n3,4").unwrap();
        let (d, _) = SpinOperator::breve(&m2, Statistics::Fermionic).unwrap().evaluate();
        assert_eq!(d, c(-2.0));

        let m = random_matrix(7, 11, RandomKind::ComplexGaussian);
        let (p, _) = SpinOperator::breve(&m, Statistics::Bosonic).unwrap().evaluate();
        assert!(rel_diff(p, permanent_ryser(&m).unwrap()) < 1e-11);

        let one = SquareMatrix::<Complex64>::from_fn(1, |_, _| c(7.0));
        for stats in [Statistics::Bosonic, Statistics::Fermionic] {
            for variant in [Variant::Tilde, Variant::Breve] {
                let (p, ops) = SpinOperator::new(&one, variant, stats).unwrap().evaluate();
                assert_eq!(p, c(7.0));
                assert_eq!(ops.total(), 2);
            }
        }
    }

    #[test]
    fn variants_agree_and_count() {
        for n in 2..=7 {
            let m = random_matrix(n, 100 + n as u64, RandomKind::ComplexGaussian);
            for stats in [Statistics::Bosonic, Statistics::Fermionic] {
                let (b, bops) = SpinOperator::new(&m, Variant::Breve, stats).unwrap().evaluate();
                let (t, tops) = SpinOperator::new(&m, Variant::Tilde, stats).unwrap().evaluate();
                assert!(rel_diff(b, t) < 1e-12);
                assert_eq!(bops.total(), spin_sweep_ops(n as u32));
                assert_eq!(tops, bops);
                assert_eq!(bops.multiplications, bops.additions);
            }
            let (d, _) = SpinOperator::breve(&m, Statistics::Fermionic).unwrap().evaluate();
            assert!(rel_diff(d, determinant_gauss(&m)) < 1e-11);
        }
    }

    #[test]
    fn sequential_and_parallel_identical() {
        let m = random_matrix(15, 5, RandomKind::ComplexGaussian);
        let op = SpinOperator::breve(&m, Statistics::Fermionic).unwrap();
        assert_eq!(op.evaluate_with(Execution::Sequential), op.evaluate_with(Execution::Parallel));
    }

    #[test]
    fn powers_on_vacuum() {
        let m = random_matrix(3, 2, RandomKind::ComplexGaussian);
        let op = SpinOperator::breve(&m, Statistics::Fermionic).unwrap();
        let p0 = op.operator_power_on_zero(0).unwrap();
        assert_eq!(p0.amplitudes(), &[c(1.0)]);
        let p3 = op.operator_power_on_zero(3).unwrap();
        assert_eq!(p3.level(), 0);
        assert!(rel_diff(p3.amplitudes()[0], determinant_gauss(&m)) < 1e-12);
        assert!(matches!(op.operator_power_on_zero(4), Err(Error::Range { .. })));
        let tilde = SpinOperator::new(&m, Variant::Tilde, Statistics::Bosonic).unwrap();
        assert_eq!(tilde.operator_power_on_zero(3).unwrap().level(), 3);
        assert_eq!(tilde.operator_power_on_zero(4).unwrap().level(), 0);
    }

    #[test]
    fn dense_n2_breve() {
        let m = SquareMatrix::<Complex64>::parse_csv("2,3\n5,7").unwrap();
        let op = SpinOperator::breve(&m, Statistics::Bosonic).unwrap();
        let d = op.dense_operator().unwrap();
        assert_eq!(d.rows(), 3);
        // Basis order 00, 01, 10; site 0 is the left character.
        assert_eq!(d[(2, 0)], c(2.0)); // 00 -> 10, w00
        assert_eq!(d[(1, 0)], c(3.0)); // 00 -> 01, w01
        assert_eq!(d[(0, 2)], c(7.0)); // 10 -> 00, w11
        assert_eq!(d[(0, 1)], c(5.0)); // 01 -> 00, w10
        assert_eq!(d.count_nonzero(0.0), 4);
        let (p, _) = op.evaluate();
        assert_eq!(p, c(2.0 * 7.0 + 3.0 * 5.0));
    }

    #[test]
    fn dense_n3_support_and_signs() {
        let m = labelled3();
        let bos = SpinOperator::breve(&m, Statistics::Bosonic).unwrap().dense_operator().unwrap();
        let fer = SpinOperator::breve(&m, Statistics::Fermionic).unwrap().dense_operator().unwrap();
        assert_eq!((bos.rows(), bos.cols()), (7, 7));
        assert_eq!(bos.count_nonzero(0.0), 12);
        let mut negatives = 0;
        for r in 0..7 {
            for col in 0..7 {
                assert_eq!(bos[(r, col)] == c(0.0), fer[(r, col)] == c(0.0));
                if fer[(r, col)] != bos[(r, col)] {
                    assert_eq!(fer[(r, col)], -bos[(r, col)]);
                    negatives += 1;
                }
            }
        }
        assert_eq!(negatives, 4);
        let idx = |s: &str| st(s).dense_index();
        assert_eq!(fer[(idx("110"), idx("010"))], -*m.get(1, 0));
        assert_eq!(fer[(idx("000"), idx("101"))], -*m.get(2, 1));
        let tilde = SpinOperator::new(&m, Variant::Tilde, Statistics::Bosonic)
            .unwrap()
            .dense_operator()
            .unwrap();
        assert_eq!(tilde.rows(), 8);
        assert_eq!(tilde[(0, 7)], c(1.0));
        assert_eq!(tilde.count_nonzero(0.0), 13);
        let big = SquareMatrix::<Complex64>::identity(13);
        assert!(SpinOperator::breve(&big, Statistics::Bosonic)
            .unwrap()
            .dense_operator()
            .is_err());
    }
}
