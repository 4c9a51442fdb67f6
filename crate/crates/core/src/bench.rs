//! Operation-count and wall-time comparison of the level sweep and Ryser.

use std::ops::RangeInclusive;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{random_matrix, RandomKind};
use crate::opcount::{ryser_ops, spin_sweep_ops};
use crate::oracle::{permanent_ryser, permanent_ryser_counted};
use crate::spin::{SpinOperator, Statistics};

pub const BENCH_MAX_N: usize = 26;
pub const CSV_HEADER: &str = "n,method,ops,median_ns";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub method: &'static str,
    pub ops: u64,
    pub median_ns: u128,
}

/// Median of the recorded durations (mean of the middle pair when even).
pub fn median(mut samples: Vec<Duration>) -> Duration {
    assert!(!samples.is_empty(), "median of no samples");
    samples.sort();
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        (samples[mid - 1] + samples[mid]) / 2
    }
}

fn time<R>(repeats: usize, mut f: impl FnMut() -> R) -> (R, Duration) {
    let mut samples = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats {
        let start = Instant::now();
        last = Some(std::hint::black_box(f()));
        samples.push(start.elapsed());
    }
    (last.expect("at least one repeat"), median(samples))
}

/// One `spin` and one `ryser` row per size. Counted operations are checked
/// against `n · 2ⁿ` and `n · 2ⁿ⁺¹ − (n+1)²`; repeats run sequentially.
pub fn bench_suite(n_range: RangeInclusive<usize>, repeats: usize) -> Result<Vec<BenchRow>> {
    let (&lo, &hi) = (n_range.start(), n_range.end());
    if hi > BENCH_MAX_N {
        return Err(Error::SizeGuard {
            what: "bench",
            n: hi,
            max: BENCH_MAX_N,
        });
    }
    if lo == 0 || lo > hi || repeats == 0 {
        return Err(Error::Malformed(format!(
            "bench needs 1 ≤ n_min ≤ n_max and repeats ≥ 1, got {lo}..={hi} x {repeats}"
        )));
    }
    let mut rows = Vec::with_capacity(2 * (hi - lo + 1));
    for n in n_range {
        let m = random_matrix(n, n as u64, RandomKind::ComplexGaussian);
        let op = SpinOperator::breve(&m, Statistics::Bosonic)?;
        let ((_, spin), spin_time) = time(repeats, || op.evaluate());
        if spin.total() != spin_sweep_ops(n as u32) {
            return Err(Error::Consistency(format!(
                "n = {n}: level sweep counted {} operations",
                spin.total()
            )));
        }
        let (_, ryser) = permanent_ryser_counted(&m)?;
        if ryser.total() != ryser_ops(n as u32) {
            return Err(Error::Consistency(format!(
                "n = {n}: Ryser counted {} operations",
                ryser.total()
            )));
        }
        let (_, ryser_time) = time(repeats, || permanent_ryser(&m));
        rows.push(BenchRow {
            n,
            method: "spin",
            ops: spin.total(),
            median_ns: spin_time.as_nanos(),
        });
        rows.push(BenchRow {
            n,
            method: "ryser",
            ops: ryser.total(),
            median_ns: ryser_time.as_nanos(),
        });
    }
    Ok(rows)
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.n, r.method, r.ops, r.median_ns));
    }
    out
}
