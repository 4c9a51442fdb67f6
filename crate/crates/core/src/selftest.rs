//! Quick invariant suite at small sizes, run by the `selftest` command.

use num_complex::Complex64;
use serde::Serialize;

use crate::graph::{export_dot, graph_from_operator, parse_dot, path_sum, DotOptions};
use crate::matrix::{random_matrix, random_zero_one, RandomKind};
use crate::opcount::{ryser_ops, spin_sweep_ops};
use crate::oracle::{determinant_gauss, permanent_naive, permanent_ryser, permanent_ryser_counted};
use crate::reduction::{fermionic_matches_gaussian, named_entries, reduce_fully};
use crate::scalar::{rel_diff, Exact};
use crate::spectral::{block_decompose, generalized_kernel_ranks, hermitian_parts, verify_spectrum};
use crate::spin::{SpinOperator, Statistics, Variant};
use crate::Result;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

const STATS: [Statistics; 2] = [Statistics::Bosonic, Statistics::Fermionic];

fn check(name: &'static str, f: impl FnOnce() -> Result<std::result::Result<(), String>>) -> CheckResult {
    let (passed, detail) = match f() {
        Ok(Ok(())) => (true, String::new()),
        Ok(Err(why)) => (false, why),
        Err(e) => (false, e.to_string()),
    };
    CheckResult { name, passed, detail }
}

fn close(a: Complex64, b: Complex64, tol: f64, what: &str) -> std::result::Result<(), String> {
    let d = rel_diff(a, b);
    if d <= tol {
        Ok(())
    } else {
        Err(format!("{what}: {a} vs {b} (rel diff {d:e})"))
    }
}

macro_rules! ensure {
    ($e:expr) => {
        if let Err(why) = $e {
            return Ok(Err(why));
        }
    };
}

/// Runs every check at sizes up to six sites; `tol` is the spectral
/// residual tolerance.
pub fn run(tol: f64) -> Vec<CheckResult> {
    let max_n = 6;
    vec![
        check("permanent: sweep = Ryser = naive", || {
            for n in 2..=max_n {
                for seed in 0..5 {
                    let m = random_matrix(n, seed, RandomKind::ComplexGaussian);
                    let (p, _) = SpinOperator::breve(&m, Statistics::Bosonic)?.evaluate();
                    ensure!(close(p, permanent_ryser(&m)?, 1e-11, "ryser"));
                    ensure!(close(p, permanent_naive(&m)?, 1e-11, "naive"));
                }
                let e = random_zero_one::<Exact>(n, 7);
                let (p, _) = SpinOperator::breve(&e, Statistics::Bosonic)?.evaluate();
                if p != permanent_ryser(&e)? {
                    return Ok(Err(format!("exact n = {n} disagrees")));
                }
            }
            Ok(Ok(()))
        }),
        check("determinant: sweep = Gaussian elimination", || {
            for n in 2..=max_n {
                for seed in 0..5 {
                    let m = random_matrix(n, seed, RandomKind::ComplexGaussian);
                    let (d, _) = SpinOperator::breve(&m, Statistics::Fermionic)?.evaluate();
                    ensure!(close(d, determinant_gauss(&m), 1e-11, "gauss"));
                }
            }
            Ok(Ok(()))
        }),
        check("operation counts: n·2ⁿ and n·2ⁿ⁺¹ − (n+1)²", || {
            for n in 1..=12 {
                let m = random_matrix(n, 1, RandomKind::ComplexGaussian);
                let (_, ops) = SpinOperator::breve(&m, Statistics::Bosonic)?.evaluate();
                let (_, r) = permanent_ryser_counted(&m)?;
                if ops.total() != spin_sweep_ops(n as u32) || r.total() != ryser_ops(n as u32) {
                    return Ok(Err(format!("n = {n}: {} / {}", ops.total(), r.total())));
                }
            }
            Ok(Ok(()))
        }),
        check("spectrum: eigenpairs, ranks, blocks, Hermitian parts", || {
            for n in 3..=4 {
                for s in STATS {
                    for variant in [Variant::Breve, Variant::Tilde] {
                        let m = random_matrix(n, 11, RandomKind::ComplexGaussian);
                        let op = SpinOperator::new(&m, variant, s)?;
                        let report = verify_spectrum(&op, tol)?;
                        if report.rank + report.nullity != report.dimension {
                            return Ok(Err("rank + nullity ≠ dimension".into()));
                        }
                        block_decompose(&op)?;
                        hermitian_parts(&op)?;
                    }
                }
            }
            Ok(Ok(()))
        }),
        check("generalized kernel ranks", || {
            let m3 = random_matrix(3, 2, RandomKind::ComplexGaussian);
            let m4 = random_matrix(4, 2, RandomKind::ComplexGaussian);
            let b3 = generalized_kernel_ranks(&SpinOperator::breve(&m3, Statistics::Bosonic)?)?;
            let f3 = generalized_kernel_ranks(&SpinOperator::breve(&m3, Statistics::Fermionic)?)?;
            let b4 = generalized_kernel_ranks(&SpinOperator::breve(&m4, Statistics::Bosonic)?)?;
            if b3 != [2, 2] || f3 != [3, 1] || b4[0] != 5 {
                return Ok(Err(format!("{b3:?} {f3:?} {b4:?}")));
            }
            Ok(Ok(()))
        }),
        check("fermionic reduction = Gaussian elimination", || {
            for n in 3..=max_n {
                let m = random_matrix(n, 5, RandomKind::ComplexGaussian);
                let cmp = fermionic_matches_gaussian(&m)?;
                if !cmp.passed {
                    return Ok(Err(format!("n = {n}: {:?}", cmp.entries)));
                }
            }
            Ok(Ok(()))
        }),
        check("bosonic reduction: product and closed forms", || {
            let m = random_matrix(3, 5, RandomKind::ComplexGaussian);
            let t = reduce_fully(&SpinOperator::breve(&m, Statistics::Bosonic)?)?;
            ensure!(close(t.final_product, permanent_ryser(&m)?, 1e-10, "product"));
            for e in named_entries(&m, Statistics::Bosonic)? {
                ensure!(close(t.rounds[e.round].entry(e.source, e.target), e.value, 1e-10, e.label));
            }
            Ok(Ok(()))
        }),
        check("graph: path sums and DOT round trip", || {
            for n in 2..=max_n {
                for s in STATS {
                    let m = random_matrix(n, 3, RandomKind::ComplexGaussian);
                    let op = SpinOperator::breve(&m, s)?;
                    let g = graph_from_operator(&op)?;
                    let (sum, paths) = path_sum(&g)?;
                    ensure!(close(sum, op.evaluate().0, 1e-11, "path sum"));
                    if paths != (1..=n as u64).product::<u64>() {
                        return Ok(Err(format!("n = {n}: {paths} paths")));
                    }
                    let dot = export_dot(&g, DotOptions { show_signs: true, numeric_weights: false });
                    let parsed = parse_dot(&dot)?;
                    if parsed.nodes.len() != g.nodes.len() || parsed.edges.len() != g.edges.len() {
                        return Ok(Err("DOT round trip lost lines".into()));
                    }
                }
            }
            Ok(Ok(()))
        }),
    ]
}
