//! Iterative removal of the operator's generalized zero eigenspace.
//!
//! Each round writes the current operator as `A·B`, where `B` annihilates
//! the kernel and `A` is the operator with the kernel's leading columns
//! deleted, then continues with `B·A`. The nonzero spectrum is preserved
//! while the dimension drops by the nullity, until an `n`-dimensional cycle
//! remains whose entry product is the permanent (or determinant).
//!
//! For fermions the reweighted entries are exactly those produced by
//! fixed-order Gaussian elimination; for bosons every round creates fill-in.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::basis::BasisState;
use crate::dense::{DenseMatrix, RANK_TOL};
use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::oracle::{determinant_gauss, lower_triangular_reduce};
use crate::scalar::rel_diff;
use crate::spectral::SPECTRAL_MAX_N;
use crate::spin::{SpinOperator, Statistics, Variant};

/// Relative tolerance under which a reduced weight counts as unchanged.
pub const UNCHANGED_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Edge bookkeeping of one round, comparing the output operator with its
/// input on shared `(source, target)` state pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FillStats {
    pub reweighted: usize,
    pub unchanged: usize,
    pub new: usize,
}

impl FillStats {
    pub fn total(&self) -> usize {
        self.reweighted + self.unchanged + self.new
    }
}

/// The result of one round. Round 0 holds the original operator.
#[derive(Clone, Debug)]
pub struct ReductionState {
    pub round: usize,
    /// Operator produced by this round, over `basis`.
    pub operator: DenseMatrix,
    pub basis: Vec<BasisState>,
    /// Kernel vectors of the previous operator, in its basis.
    pub kernel_vectors: Vec<Vec<Complex64>>,
    /// `(d − r) × d` kernel-annihilating factor.
    pub b: DenseMatrix,
    /// `d × (d − r)` previous operator with the leading columns removed.
    pub a: DenseMatrix,
    pub removed: Vec<BasisState>,
    pub fill_stats: FillStats,
}

impl ReductionState {
    pub fn initial(op: &SpinOperator<'_>) -> Result<Self> {
        if op.variant() != Variant::Breve {
            return Err(Error::Unsupported(
                "row reduction works on the breve operator".into(),
            ));
        }
        let operator = op.dense_operator()?;
        let d = operator.rows();
        Ok(ReductionState {
            round: 0,
            basis: (0..d).map(|i| BasisState::from_dense_index(op.n(), i)).collect(),
            b: DenseMatrix::identity(d),
            a: DenseMatrix::identity(d),
            operator,
            kernel_vectors: Vec::new(),
            removed: Vec::new(),
            fill_stats: FillStats::default(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Operator entry for the edge `source → target`; zero when either
    /// state is no longer in the basis.
    pub fn entry(&self, source: BasisState, target: BasisState) -> Complex64 {
        let pos = |s| self.basis.iter().position(|&b| b == s);
        match (pos(source), pos(target)) {
            (Some(c), Some(r)) => self.operator[(r, c)],
            _ => ZERO,
        }
    }

    /// Nonzero entries as `(source, target, weight)`.
    pub fn edges(&self) -> Vec<(BasisState, BasisState, Complex64)> {
        let d = self.dimension();
        let mut out = Vec::new();
        for c in 0..d {
            for r in 0..d {
                let w = self.operator[(r, c)];
                if w != ZERO {
                    out.push((self.basis[c], self.basis[r], w));
                }
            }
        }
        out
    }
}

/// Null-space basis, each vector with leading coordinate 1, in ascending
/// order of that coordinate. Coordinates below `tol · max|v|` are zeroed.
pub fn kernel_basis(operator: &DenseMatrix, tol: f64) -> Vec<Vec<Complex64>> {
    let mut kernel = operator.lower_rref(tol).kernel();
    for v in &mut kernel {
        let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for z in v.iter_mut() {
            if z.norm() <= tol * scale {
                *z = ZERO;
            }
        }
    }
    kernel
}

fn leading(v: &[Complex64]) -> usize {
    v.iter().position(|z| *z != ZERO).expect("kernel vectors are nonzero")
}

/// One `A·B → B·A` round.
pub fn factor_round(state: &ReductionState) -> Result<ReductionState> {
    let op = &state.operator;
    let d = op.rows();
    let kernel = kernel_basis(op, RANK_TOL);
    if kernel.is_empty() {
        return Err(Error::Consistency(format!(
            "round {}: operator has a trivial kernel",
            state.round + 1
        )));
    }
    let leads: Vec<usize> = kernel.iter().map(|v| leading(v)).collect();
    let keep: Vec<usize> = (0..d).filter(|i| !leads.contains(i)).collect();
    let mut b = DenseMatrix::zeros(keep.len(), d);
    for (row, &i) in keep.iter().enumerate() {
        b[(row, i)] = Complex64::new(1.0, 0.0);
        for (v, &lead) in kernel.iter().zip(&leads) {
            b[(row, lead)] -= v[i];
        }
    }
    let all: Vec<usize> = (0..d).collect();
    let a = op.select(&all, &keep);
    let mut next = b.matmul(&a);
    next.chop(RANK_TOL * next.max_abs());
    let basis: Vec<BasisState> = keep.iter().map(|&i| state.basis[i]).collect();
    let fill_stats = fill_stats(op, &state.basis, &next, &basis);
    Ok(ReductionState {
        round: state.round + 1,
        operator: next,
        basis,
        kernel_vectors: kernel,
        b,
        a,
        removed: leads.iter().map(|&i| state.basis[i]).collect(),
        fill_stats,
    })
}

/// Classifies every nonzero entry of `next` against `prev` on the same
/// `(source, target)` state pair.
pub fn fill_stats(
    prev: &DenseMatrix,
    prev_basis: &[BasisState],
    next: &DenseMatrix,
    next_basis: &[BasisState],
) -> FillStats {
    let index: HashMap<BasisState, usize> =
        prev_basis.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut stats = FillStats::default();
    for (r, target) in next_basis.iter().enumerate() {
        for (c, source) in next_basis.iter().enumerate() {
            let w = next[(r, c)];
            if w == ZERO {
                continue;
            }
            let old = match (index.get(target), index.get(source)) {
                (Some(&pr), Some(&pc)) => prev[(pr, pc)],
                _ => ZERO,
            };
            if old == ZERO {
                stats.new += 1;
            } else if rel_diff(w, old) <= UNCHANGED_TOL {
                stats.unchanged += 1;
            } else {
                stats.reweighted += 1;
            }
        }
    }
    stats
}

/// One edge of the final cycle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleEntry {
    pub source: BasisState,
    pub target: BasisState,
    pub weight: Complex64,
}

#[derive(Clone, Debug)]
pub struct ReductionTrace {
    pub n: usize,
    pub statistics: Statistics,
    /// Round 0 is the unreduced operator.
    pub rounds: Vec<ReductionState>,
    pub cycle: Vec<CycleEntry>,
    pub final_product: Complex64,
}

impl ReductionTrace {
    pub fn final_state(&self) -> &ReductionState {
        self.rounds.last().expect("trace holds round 0")
    }

    pub fn final_operator(&self) -> &DenseMatrix {
        &self.final_state().operator
    }

    pub fn removed_sets(&self) -> Vec<Vec<String>> {
        self.rounds[1..]
            .iter()
            .map(|s| s.removed.iter().map(ToString::to_string).collect())
            .collect()
    }

    pub fn to_json(&self) -> Value {
        let c = |z: Complex64| json!([z.re, z.im]);
        json!({
            "n": self.n,
            "statistics": self.statistics,
            "rounds": self.rounds[1..].iter().map(|s| json!({
                "round": s.round,
                "removed": s.removed.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "dimension": s.dimension(),
                "fill_stats": s.fill_stats,
                "nonzeros": s.fill_stats.total(),
            })).collect::<Vec<_>>(),
            "final_basis": self.final_state().basis.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "cycle": self.cycle.iter().map(|e| json!({
                "source": e.source.to_string(),
                "target": e.target.to_string(),
                "weight": c(e.weight),
            })).collect::<Vec<_>>(),
            "final_product": c(self.final_product),
        })
    }
}

/// Runs rounds until the kernel is gone and reads off the final cycle.
pub fn reduce_fully(op: &SpinOperator<'_>) -> Result<ReductionTrace> {
    let n = op.n();
    if n > SPECTRAL_MAX_N {
        return Err(Error::SizeGuard {
            what: "row reduction",
            n,
            max: SPECTRAL_MAX_N,
        });
    }
    let mut rounds = vec![ReductionState::initial(op)?];
    loop {
        let current = rounds.last().expect("nonempty");
        if current.operator.nullity(RANK_TOL) == 0 {
            break;
        }
        let next = factor_round(current)?;
        rounds.push(next);
    }
    let last = rounds.last().expect("nonempty");
    let cycle = read_cycle(last, n)?;
    let final_product = cycle.iter().map(|e| e.weight).product();
    Ok(ReductionTrace {
        n,
        statistics: op.statistics(),
        rounds,
        cycle,
        final_product,
    })
}

/// Follows the single outgoing edge of each state from the vacuum.
fn read_cycle(state: &ReductionState, n: usize) -> Result<Vec<CycleEntry>> {
    let fail = |detail: String| Error::ZeroPivot {
        round: state.round,
        detail,
    };
    let d = state.dimension();
    if d != n {
        return Err(fail(format!(
            "reduction stalled at dimension {d}, expected {n}"
        )));
    }
    let nonzero = state.operator.count_nonzero(0.0);
    if nonzero != n {
        return Err(fail(format!("final operator has {nonzero} nonzero entries, expected {n}")));
    }
    let vacuum = BasisState::vacuum(n);
    let mut col = state
        .basis
        .iter()
        .position(|&s| s == vacuum)
        .ok_or_else(|| fail("vacuum state was removed".into()))?;
    let mut cycle = Vec::with_capacity(n);
    for _ in 0..n {
        let source = state.basis[col];
        let row = (0..d)
            .find(|&r| state.operator[(r, col)] != ZERO)
            .ok_or_else(|| fail(format!("no surviving edge out of |{source}⟩")))?;
        cycle.push(CycleEntry {
            source,
            target: state.basis[row],
            weight: state.operator[(row, col)],
        });
        col = row;
    }
    if state.basis[col] != vacuum
        || cycle
            .iter()
            .enumerate()
            .any(|(h, e)| e.source.level() != h)
    {
        return Err(fail("final entries do not form a single level cycle".into()));
    }
    Ok(cycle)
}

/// `B·φ` for the factor of the given round.
pub fn eigenvector_pushforward(
    trace: &ReductionTrace,
    phi: &[Complex64],
    round: usize,
) -> Result<Vec<Complex64>> {
    if round == 0 || round >= trace.rounds.len() {
        return Err(Error::Range {
            what: "round",
            value: round,
            max: trace.rounds.len() - 1,
        });
    }
    let b = &trace.rounds[round].b;
    if phi.len() != b.cols() {
        return Err(Error::Dimension {
            expected: b.cols(),
            found: phi.len(),
        });
    }
    Ok(b.mul_vec(phi))
}

/// A reduced operator entry identified by its `n = 3` closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedEntry {
    pub round: usize,
    pub source: BasisState,
    pub target: BasisState,
    /// Display label, including any sign carried by the edge.
    pub label: &'static str,
    /// Expected edge weight (sign included).
    pub value: Complex64,
}

/// Closed forms of the reweighted and new `n = 3` entries.
///
/// Fermions: `w'_{r,c} = w_{r,c} − w_{r,2} w_{r+1,c} / w_{r+1,2}` and
/// `w''_{0,0} = w'_{0,0} − w'_{0,1} w'_{1,0} / w'_{1,1}`. Bosons flip the
/// minus signs to plus, gain `x = (w_{1,0} w_{2,1} + w_{1,1} w_{2,0}) / w_{2,2}`
/// and use `w'_{0,0} = w_{0,0} + (w_{0,1} w'_{1,0} + w_{0,2} x) / w'_{1,1}`.
pub fn named_entries(m: &SquareMatrix, statistics: Statistics) -> Result<Vec<NamedEntry>> {
    if m.n() != 3 {
        return Err(Error::Unsupported("named entries exist for n = 3 only".into()));
    }
    let w = |r: usize, c: usize| *m.get(r, c);
    let div = |num: Complex64, den: Complex64, name: &str, round: usize| {
        if den == ZERO {
            Err(Error::ZeroPivot {
                round,
                detail: format!("{name} = 0"),
            })
        } else {
            Ok(num / den)
        }
    };
    let st = |s: &str| BasisState::parse(s).expect("valid literal");
    let entry = |round, source, target, label, value| NamedEntry {
        round,
        source: st(source),
        target: st(target),
        label,
        value,
    };
    Ok(match statistics {
        Statistics::Fermionic => {
            let w00 = w(0, 0) - div(w(0, 2) * w(1, 0), w(1, 2), "w_{1,2}", 1)?;
            let w01 = w(0, 1) - div(w(0, 2) * w(1, 1), w(1, 2), "w_{1,2}", 1)?;
            let w10 = w(1, 0) - div(w(1, 2) * w(2, 0), w(2, 2), "w_{2,2}", 1)?;
            let w11 = w(1, 1) - div(w(1, 2) * w(2, 1), w(2, 2), "w_{2,2}", 1)?;
            let w00pp = w00 - div(w01 * w10, w11, "w'_{1,1}", 2)?;
            vec![
                entry(1, "000", "100", "w'_{0,0}", w00),
                entry(1, "000", "010", "w'_{0,1}", w01),
                entry(1, "010", "110", "-w'_{1,0}", -w10),
                entry(1, "100", "110", "w'_{1,1}", w11),
                entry(2, "000", "100", "w''_{0,0}", w00pp),
            ]
        }
        Statistics::Bosonic => {
            let w10 = w(1, 0) + div(w(1, 2) * w(2, 0), w(2, 2), "w_{2,2}", 1)?;
            let w11 = w(1, 1) + div(w(1, 2) * w(2, 1), w(2, 2), "w_{2,2}", 1)?;
            let x = div(w(1, 0) * w(2, 1) + w(1, 1) * w(2, 0), w(2, 2), "w_{2,2}", 1)?;
            let w00 = w(0, 0) + div(w(0, 1) * w10 + w(0, 2) * x, w11, "w'_{1,1}", 2)?;
            vec![
                entry(1, "001", "110", "x", x),
                entry(1, "010", "110", "w'_{1,0}", w10),
                entry(1, "100", "110", "w'_{1,1}", w11),
                entry(2, "000", "100", "w'_{0,0}", w00),
            ]
        }
    })
}

/// One compared quantity.
#[derive(Clone, Debug, Serialize)]
pub struct EntryCheck {
    pub name: String,
    pub reduced: [f64; 2],
    pub gaussian: [f64; 2],
    pub rel_diff: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GaussianComparison {
    pub entries: Vec<EntryCheck>,
    pub passed: bool,
}

/// Compares the fermionic reduction with fixed-order Gaussian elimination.
///
/// For `n = 3` the four round-one weights and the round-two weight are
/// checked entry by entry (1e-10); otherwise the final product is compared
/// with the determinant (1e-9). States removed by the reduction contribute
/// zero entries.
pub fn fermionic_matches_gaussian(m: &SquareMatrix) -> Result<GaussianComparison> {
    let n = m.n();
    let lt = lower_triangular_reduce(m)?;
    let op = SpinOperator::breve(m, Statistics::Fermionic)?;
    let trace = reduce_fully(&op)?;
    let check = |name: &str, reduced: Complex64, gaussian: Complex64, tol: f64| {
        let d = rel_diff(reduced, gaussian);
        EntryCheck {
            name: name.to_string(),
            reduced: [reduced.re, reduced.im],
            gaussian: [gaussian.re, gaussian.im],
            rel_diff: d,
            pass: d <= tol,
        }
    };
    let entries = if n == 3 {
        let st = |s: &str| BasisState::parse(s).expect("valid literal");
        let at = |round: usize, source: &str, target: &str| {
            trace
                .rounds
                .get(round)
                .map_or(ZERO, |s| s.entry(st(source), st(target)))
        };
        let primed = &lt.rounds[0];
        let doubled = &lt.rounds[1];
        vec![
            check("w'_{0,0}", at(1, "000", "100"), *primed.get(0, 0), 1e-10),
            check("w'_{0,1}", at(1, "000", "010"), *primed.get(0, 1), 1e-10),
            check("w'_{1,0}", -at(1, "010", "110"), *primed.get(1, 0), 1e-10),
            check("w'_{1,1}", at(1, "100", "110"), *primed.get(1, 1), 1e-10),
            check("w''_{0,0}", at(2, "000", "100"), *doubled.get(0, 0), 1e-10),
        ]
    } else {
        vec![check("final_product", trace.final_product, determinant_gauss(m), 1e-9)]
    };
    let passed = entries.iter().all(|e| e.pass);
    Ok(GaussianComparison { entries, passed })
}
