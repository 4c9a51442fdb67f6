//! Spectral structure of the spin operator at desk scale.
//!
//! Everything is verified through closed-form eigenvectors, residuals and
//! ranks; there is no general eigensolver. The operator's nonzero
//! eigenvalues are the `p`-th roots of the permanent (or determinant), where
//! `p` is the operator's period (`n` for breve, `n + 1` for tilde).

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::basis::BasisState;
use crate::dense::{vec_norm, DenseMatrix, RANK_TOL};
use crate::error::{Error, Result};
use crate::spin::{level_to_dense, SpinOperator, Statistics, Variant};

/// Largest site count for the dense spectral checks.
pub const SPECTRAL_MAX_N: usize = 10;
/// Default relative residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;

/// A vector over the operator's full dense basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FullStateVector {
    pub n: usize,
    #[serde(serialize_with = "complex_list")]
    pub amplitudes: Vec<Complex64>,
}

impl FullStateVector {
    pub fn zeros(n: usize, dimension: usize) -> Self {
        FullStateVector {
            n,
            amplitudes: vec![Complex64::new(0.0, 0.0); dimension],
        }
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }

    pub fn amplitude(&self, state: BasisState) -> Complex64 {
        self.amplitudes
            .get(state.dense_index())
            .copied()
            .unwrap_or_default()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Eigenpair {
    pub k: usize,
    #[serde(serialize_with = "complex")]
    pub eigenvalue: Complex64,
    /// `‖Mφ − λφ‖ / (|λ| ‖φ‖)`.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub n: usize,
    pub variant: Variant,
    pub statistics: Statistics,
    pub dimension: usize,
    #[serde(serialize_with = "complex")]
    pub permanent: Complex64,
    #[serde(serialize_with = "complex")]
    pub principal_root: Complex64,
    pub eigenpairs: Vec<Eigenpair>,
    /// Rank and nullity of the operator raised to its period, whose nonzero
    /// part is exactly the closed-form eigenspace.
    pub rank: usize,
    pub nullity: usize,
    /// Rank of the operator itself.
    pub operator_rank: usize,
    pub generalized_kernel_ranks: Vec<usize>,
    pub tol: f64,
}

fn complex<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

fn complex_list<S: Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|z| [z.re, z.im]))
}

fn guard(op: &SpinOperator<'_>) -> Result<()> {
    if op.n() > SPECTRAL_MAX_N {
        return Err(Error::SizeGuard {
            what: "spectral check",
            n: op.n(),
            max: SPECTRAL_MAX_N,
        });
    }
    Ok(())
}

fn nonzero_permanent(op: &SpinOperator<'_>) -> Result<Complex64> {
    let (p, _) = op.evaluate();
    if p == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroPermanent);
    }
    Ok(p)
}

/// Principal `period`-th root of `p`.
pub fn principal_root(p: Complex64, period: usize) -> Complex64 {
    Complex64::from_polar(p.norm().powf(1.0 / period as f64), p.arg() / period as f64)
}

/// `λ_k = e^{−2πik/p} · P^{1/p}`.
pub fn eigenvalue(p: Complex64, period: usize, k: usize) -> Complex64 {
    Complex64::from_polar(1.0, -TAU * k as f64 / period as f64) * principal_root(p, period)
}

/// `φ(k) = e^{−2πik/p} Σ_j e^{2πijk/p} (M/P^{1/p})^j |0⟩` for `j < p`.
pub fn build_eigenvector(op: &SpinOperator<'_>, k: usize, p: Complex64) -> Result<FullStateVector> {
    let period = op.period();
    if k >= period {
        return Err(Error::Range {
            what: "k",
            value: k,
            max: period - 1,
        });
    }
    if p == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroPermanent);
    }
    let root = principal_root(p, period);
    let dim = op.dimension();
    let mut out = FullStateVector::zeros(op.n(), dim);
    for j in 0..period {
        let phase = TAU * ((j as f64 - 1.0) * k as f64) / period as f64;
        let coeff = Complex64::from_polar(1.0, phase) / root.powu(j as u32);
        let level = level_to_dense(&op.operator_power_on_zero(j)?, dim);
        // Powers below the period land on distinct levels, so no overlap.
        for (o, a) in out.amplitudes.iter_mut().zip(level) {
            *o += coeff * a;
        }
    }
    Ok(out)
}

/// Sparse action of the operator on the columns of a dense matrix.
struct EdgeList {
    dim: usize,
    // (target, source, weight)
    entries: Vec<(usize, usize, Complex64)>,
}

impl EdgeList {
    fn new(op: &SpinOperator<'_>) -> Self {
        let entries = op
            .edges()
            .into_iter()
            .map(|e| (e.target.dense_index(), e.source.dense_index(), e.weight))
            .collect();
        EdgeList {
            dim: op.dimension(),
            entries,
        }
    }

    /// `M · X`.
    fn left_apply(&self, x: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.dim, x.cols());
        for &(t, s, w) in &self.entries {
            for c in 0..x.cols() {
                let v = x[(s, c)];
                if v != Complex64::new(0.0, 0.0) {
                    out[(t, c)] += w * v;
                }
            }
        }
        out
    }

    /// `v · M` for a row vector `v`.
    fn right_apply_row(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for &(t, s, w) in &self.entries {
            out[s] += v[t] * w;
        }
        out
    }

    fn to_dense(&self) -> DenseMatrix {
        self.left_apply(&DenseMatrix::identity(self.dim))
    }

    /// `M^p` as a dense matrix.
    fn power(&self, p: usize) -> DenseMatrix {
        (0..p).fold(DenseMatrix::identity(self.dim), |acc, _| self.left_apply(&acc))
    }
}

/// Builds every closed-form eigenpair, checks residuals against `tol`, and
/// records the rank structure.
pub fn verify_spectrum(op: &SpinOperator<'_>, tol: f64) -> Result<SpectrumReport> {
    guard(op)?;
    let period = op.period();
    let p = nonzero_permanent(op)?;
    let edges = EdgeList::new(op);
    let dense = edges.to_dense();
    let mut eigenpairs = Vec::with_capacity(period);
    let mut vectors = DenseMatrix::zeros(op.dimension(), period);
    for k in 0..period {
        let phi = build_eigenvector(op, k, p)?;
        let lambda = eigenvalue(p, period, k);
        let image = dense.mul_vec(&phi.amplitudes);
        let diff: Vec<Complex64> = image
            .iter()
            .zip(&phi.amplitudes)
            .map(|(a, b)| a - lambda * b)
            .collect();
        let residual = vec_norm(&diff) / (lambda.norm() * phi.norm());
        if residual.is_nan() || residual > tol {
            return Err(Error::SpectralMismatch { k, residual, tol });
        }
        let power_gap = (lambda.powu(period as u32) - p).norm() / p.norm();
        if power_gap > period as f64 * tol {
            return Err(Error::SpectralMismatch {
                k,
                residual: power_gap,
                tol,
            });
        }
        for (r, a) in phi.amplitudes.iter().enumerate() {
            vectors[(r, k)] = *a;
        }
        eigenpairs.push(Eigenpair {
            k,
            eigenvalue: lambda,
            residual,
        });
    }
    if vectors.rank(RANK_TOL) != period {
        return Err(Error::Consistency(
            "closed-form eigenvectors are linearly dependent".into(),
        ));
    }
    let rank = edges.power(period).rank(RANK_TOL);
    let nullity = op.dimension() - rank;
    let generalized_kernel_ranks = kernel_ranks(op, &edges)?;
    if rank != period {
        return Err(Error::Consistency(format!(
            "operator power has rank {rank}, expected {period}"
        )));
    }
    Ok(SpectrumReport {
        n: op.n(),
        variant: op.variant(),
        statistics: op.statistics(),
        dimension: op.dimension(),
        permanent: p,
        principal_root: principal_root(p, period),
        eigenpairs,
        rank,
        nullity,
        operator_rank: dense.rank(RANK_TOL),
        generalized_kernel_ranks,
        tol,
    })
}

/// One diagonal block of the operator raised to its period.
#[derive(Clone, Debug)]
pub struct LevelBlock {
    pub level: usize,
    pub states: Vec<BasisState>,
    pub block: DenseMatrix,
}

/// Splits `M^p` into its Hamming-level blocks and checks each equals the
/// rank-one outer product `M^m|0⟩⟨0|M^{p−m}` with trace `P`.
pub fn block_decompose(op: &SpinOperator<'_>) -> Result<Vec<LevelBlock>> {
    guard(op)?;
    let n = op.n();
    let period = op.period();
    let (p, _) = op.evaluate();
    let edges = EdgeList::new(op);
    let power = edges.power(period);
    let scale = power.max_abs().max(p.norm());
    let tol = RANK_TOL * scale;
    let dim = op.dimension();
    let states: Vec<BasisState> = (0..dim).map(|i| BasisState::from_dense_index(n, i)).collect();
    for r in 0..dim {
        for c in 0..dim {
            if states[r].level() != states[c].level() && power[(r, c)].norm() > tol {
                return Err(Error::BlockStructure(format!(
                    "entry ({}, {}) couples levels {} and {}",
                    states[r],
                    states[c],
                    states[r].level(),
                    states[c].level()
                )));
            }
        }
    }
    // ⟨0| M^j for j = 0..period, as row vectors.
    let mut rows = Vec::with_capacity(period + 1);
    let mut row = vec![Complex64::new(0.0, 0.0); dim];
    row[0] = Complex64::new(1.0, 0.0);
    rows.push(row.clone());
    for _ in 0..period {
        row = edges.right_apply_row(&row);
        rows.push(row.clone());
    }
    let mut blocks = Vec::with_capacity(period);
    for m in 0..period {
        let idx: Vec<usize> = (0..dim).filter(|&i| states[i].level() == m).collect();
        let block = power.select(&idx, &idx);
        let column = level_to_dense(&op.operator_power_on_zero(m)?, dim);
        let outer = DenseMatrix::from_fn(idx.len(), idx.len(), |r, c| {
            column[idx[r]] * rows[period - m][idx[c]]
        });
        if block.sub(&outer).max_abs() > tol {
            return Err(Error::BlockStructure(format!(
                "level {m} block differs from its outer-product form"
            )));
        }
        if block.rank(RANK_TOL) != 1 {
            return Err(Error::BlockStructure(format!("level {m} block is not rank one")));
        }
        if (block.trace() - p).norm() > tol {
            return Err(Error::BlockStructure(format!(
                "level {m} block trace {} differs from {p}",
                block.trace()
            )));
        }
        blocks.push(LevelBlock {
            level: m,
            states: idx.iter().map(|&i| states[i]).collect(),
            block,
        });
    }
    Ok(blocks)
}

/// `(M_R, M_I)` with `M_R = ½(Mᵖ + M†ᵖ)` and `M_I = (Mᵖ − M†ᵖ)/(2i)`, so that
/// `M_R|0⟩ = Re(P)|0⟩` and `M_I|0⟩ = Im(P)|0⟩`.
pub fn hermitian_parts(op: &SpinOperator<'_>) -> Result<(DenseMatrix, DenseMatrix)> {
    guard(op)?;
    let (p, _) = op.evaluate();
    let power = EdgeList::new(op).power(op.period());
    let adjoint = power.conj_transpose();
    let real = power.add(&adjoint).scale(Complex64::new(0.5, 0.0));
    let imag = power.sub(&adjoint).scale(Complex64::new(0.0, -0.5));
    let tol = 1e-12 * power.max_abs().max(1.0);
    for (name, h) in [("real", &real), ("imaginary", &imag)] {
        if h.sub(&h.conj_transpose()).max_abs() > tol {
            return Err(Error::Consistency(format!("{name} part is not Hermitian")));
        }
    }
    let e0 = vacuum_column(op.dimension());
    let check = |h: &DenseMatrix, value: f64, name: &str| {
        let image = h.mul_vec(&e0);
        let expected: Vec<Complex64> = e0.iter().map(|z| z * value).collect();
        let gap = image
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if gap > 1e-10 * p.norm().max(1.0) {
            Err(Error::Consistency(format!(
                "{name} part does not have the vacuum eigenvalue"
            )))
        } else {
            Ok(())
        }
    };
    check(&real, p.re, "real")?;
    check(&imag, p.im, "imaginary")?;
    Ok((real, imag))
}

fn vacuum_column(dim: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[0] = Complex64::new(1.0, 0.0);
    v
}

/// `r_m = nullity(M^m) − nullity(M^{m−1})` for `m = 1..p−1`, the number of
/// generalized zero eigenvectors of each rank.
pub fn generalized_kernel_ranks(op: &SpinOperator<'_>) -> Result<Vec<usize>> {
    guard(op)?;
    nonzero_permanent(op)?;
    kernel_ranks(op, &EdgeList::new(op))
}

fn kernel_ranks(op: &SpinOperator<'_>, edges: &EdgeList) -> Result<Vec<usize>> {
    let period = op.period();
    let dim = op.dimension();
    let mut ranks = Vec::with_capacity(period - 1);
    let mut power = DenseMatrix::identity(dim);
    let mut previous = 0;
    for _ in 1..period {
        power = edges.left_apply(&power);
        let nullity = power.nullity(RANK_TOL);
        ranks.push(nullity - previous);
        previous = nullity;
    }
    let total = period + ranks.iter().sum::<usize>();
    if total != dim {
        return Err(Error::Consistency(format!(
            "{period} + Σ r_m = {total}, expected {dim}"
        )));
    }
    Ok(ranks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{random_matrix, RandomKind, SquareMatrix};
    use crate::scalar::rel_diff;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_cube_roots() {
        let m = SquareMatrix::<Complex64>::identity(3);
        let op = SpinOperator::breve(&m, Statistics::Bosonic).unwrap();
        let report = verify_spectrum(&op, DEFAULT_TOL).unwrap();
        let expected = [0.0, 1.0, 2.0].map(|k: f64| Complex64::from_polar(1.0, -TAU * k / 3.0));
        for (pair, want) in report.eigenpairs.iter().zip(expected) {
            assert!((pair.eigenvalue - want).norm() < 1e-14);
        }
        assert_eq!((report.rank, report.nullity), (3, 4));
    }

    #[test]
    fn vacuum_term_of_eigenvector() {
        let m = random_matrix(4, 1, RandomKind::ComplexGaussian);
        let op = SpinOperator::breve(&m, Statistics::Bosonic).unwrap();
        let (p, _) = op.evaluate();
        let phi = build_eigenvector(&op, 0, p).unwrap();
        assert_eq!(phi.dimension(), 15);
        assert!((phi.amplitudes[0] - c(1.0)).norm() < 1e-15);
        let dense = op.dense_operator().unwrap();
        for k in 0..4 {
            let phi = build_eigenvector(&op, k, p).unwrap();
            let lambda = eigenvalue(p, 4, k);
            let image = dense.mul_vec(&phi.amplitudes);
            let diff: Vec<_> = image.iter().zip(&phi.amplitudes).map(|(a, b)| a - lambda * b).collect();
            assert!(vec_norm(&diff) <= 1e-8 * phi.norm());
        }
        assert!(matches!(
            build_eigenvector(&op, 0, c(0.0)),
            Err(Error::ZeroPermanent)
        ));
        assert!(matches!(build_eigenvector(&op, 4, p), Err(Error::Range { .. })));
    }

    #[test]
    fn tilde_fourth_roots() {
        let m = random_matrix(3, 4, RandomKind::ComplexGaussian);
        let op = SpinOperator::new(&m, Variant::Tilde, Statistics::Bosonic).unwrap();
        let report = verify_spectrum(&op, DEFAULT_TOL).unwrap();
        assert_eq!(report.eigenpairs.len(), 4);
        for pair in &report.eigenpairs {
            assert!(rel_diff(pair.eigenvalue.powu(4), report.permanent) < 1e-12);
        }
        assert_eq!(report.rank + report.nullity, 8);
    }

    #[test]
    fn fermionic_cube_roots_of_determinant() {
        let m = random_matrix(3, 8, RandomKind::ComplexGaussian);
        let op = SpinOperator::breve(&m, Statistics::Fermionic).unwrap();
        let report = verify_spectrum(&op, DEFAULT_TOL).unwrap();
        let d = crate::oracle::determinant_gauss(&m);
        for pair in &report.eigenpairs {
            assert!(rel_diff(pair.eigenvalue.powu(3), d) < 1e-12);
        }
    }

    #[test]
    fn zero_permanent_is_rejected() {
        let m = SquareMatrix::<Complex64>::parse_csv("1,1\n1,1").unwrap();
        let op = SpinOperator::breve(&m, Statistics::Fermionic).unwrap();
        assert!(matches!(verify_spectrum(&op, DEFAULT_TOL), Err(Error::ZeroPermanent)));
        assert!(matches!(generalized_kernel_ranks(&op), Err(Error::ZeroPermanent)));
    }

    #[test]
    fn blocks() {
        let m = random_matrix(4, 2, RandomKind::ComplexGaussian);
        let op = SpinOperator::breve(&m, Statistics::Bosonic).unwrap();
        let (p, _) = op.evaluate();
        let blocks = block_decompose(&op).unwrap();
        assert_eq!(blocks.len(), 4);
        assert_eq!(blocks.iter().map(|b| b.states.len()).collect::<Vec<_>>(), [1, 4, 6, 4]);
        assert!(rel_diff(blocks[0].block[(0, 0)], p) < 1e-12);
    }

    #[test]
    fn hermitian() {
        let m = random_matrix(3, 6, RandomKind::ComplexGaussian);
        let op = SpinOperator::breve(&m, Statistics::Bosonic).unwrap();
        let (p, _) = op.evaluate();
        let (re, im) = hermitian_parts(&op).unwrap();
        assert!((re[(0, 0)] - c(p.re)).norm() < 1e-10);
        assert!((im[(0, 0)] - c(p.im)).norm() < 1e-10);
        assert!(re.sub(&re.conj_transpose()).max_abs() <= 1e-12);

        let real = random_matrix(3, 6, RandomKind::RealUniform);
        let op = SpinOperator::breve(&real, Statistics::Bosonic).unwrap();
        let (_, im) = hermitian_parts(&op).unwrap();
        assert!(vec_norm(&im.column(0)) < 1e-14);
    }

    #[test]
    fn kernel_rank_profiles() {
        let m3 = random_matrix(3, 21, RandomKind::ComplexGaussian);
        let m4 = random_matrix(4, 21, RandomKind::ComplexGaussian);
        let ranks = |m, s| generalized_kernel_ranks(&SpinOperator::breve(m, s).unwrap()).unwrap();
        assert_eq!(ranks(&m3, Statistics::Bosonic), [2, 2]);
        assert_eq!(ranks(&m3, Statistics::Fermionic), [3, 1]);
        assert_eq!(ranks(&m4, Statistics::Bosonic)[0], 5);
    }
}
