//! Square input matrices: construction, parsing, generation and formatting.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An `n × n` matrix with row-major entries `w[r][c]`.
///
/// The row index is the Hamming level at which the weight is used and the
/// column index is the site it flips.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<T = Complex64> {
    n: usize,
    entries: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let mut entries = Vec::with_capacity(n * n);
        for (row, values) in rows.into_iter().enumerate() {
            if values.len() != n {
                return Err(Error::RaggedRow {
                    row,
                    expected: n,
                    found: values.len(),
                });
            }
            entries.extend(values);
        }
        Ok(SquareMatrix { n, entries })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(n >= 1, "matrix dimension must be positive");
        let entries = (0..n * n).map(|k| f(k / n, k % n)).collect();
        SquareMatrix { n, entries }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |r, c| if r == c { T::one() } else { T::zero() })
    }

    pub fn ones(n: usize) -> Self {
        Self::from_fn(n, |_, _| T::one())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.entries[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.entries[row * self.n + col] = value;
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.entries[row * self.n..(row + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |r, c| self.get(c, r).clone())
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.n {
            self.entries.swap(a * self.n + c, b * self.n + c);
        }
    }

    /// Reorders columns so that new column `c` is old column `perm[c]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        Self::from_fn(self.n, |r, c| self.get(r, perm[c]).clone())
    }

    pub fn to_c64(&self) -> SquareMatrix<Complex64> {
        SquareMatrix {
            n: self.n,
            entries: self.entries.iter().map(Scalar::to_c64).collect(),
        }
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(Scalar::magnitude).fold(0.0, f64::max)
    }

    pub fn parse(source: &str, format: MatrixFormat) -> Result<Self> {
        match format {
            MatrixFormat::Csv => Self::parse_csv(source),
            MatrixFormat::Json => Self::parse_json(source),
        }
    }

    /// One row per line, comma-separated complex literals. Blank lines are
    /// skipped.
    pub fn parse_csv(source: &str) -> Result<Self> {
        let rows = source
            .lines()
            .map(str::trim)
            .filter(|line| !line.is_empty())
            .map(|line| line.split(',').map(T::parse_literal).collect::<Result<Vec<T>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }

    /// `{"n": int, "rows": [[str|number, ...], ...]}`.
    pub fn parse_json(source: &str) -> Result<Self> {
        let doc: JsonMatrix =
            serde_json::from_str(source).map_err(|e| Error::Malformed(e.to_string()))?;
        let rows = doc
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|cell| match cell {
                        serde_json::Value::String(s) => T::parse_literal(s),
                        serde_json::Value::Number(num) => T::parse_literal(&num.to_string()),
                        other => Err(Error::BadToken {
                            token: other.to_string(),
                        }),
                    })
                    .collect::<Result<Vec<T>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let m = Self::from_rows(rows)?;
        if let Some(n) = doc.n {
            if n != m.n {
                return Err(Error::Malformed(format!(
                    "declared n = {n} but found {} rows",
                    m.n
                )));
            }
        }
        Ok(m)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.n {
            let line: Vec<String> = self.row(r).iter().map(Scalar::to_literal).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<String>> = (0..self.n)
            .map(|r| self.row(r).iter().map(Scalar::to_literal).collect())
            .collect();
        serde_json::json!({ "n": self.n, "rows": rows })
    }
}

impl<T: Scalar> fmt::Display for SquareMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv())
    }
}

#[derive(Deserialize)]
struct JsonMatrix {
    n: Option<usize>,
    rows: Vec<Vec<serde_json::Value>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomKind {
    ComplexGaussian,
    RealUniform,
    ZeroOne,
}

impl FromStr for RandomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complex_gaussian" => Ok(RandomKind::ComplexGaussian),
            "real_uniform" => Ok(RandomKind::RealUniform),
            "zero_one" => Ok(RandomKind::ZeroOne),
            other => Err(Error::BadToken {
                token: other.to_string(),
            }),
        }
    }
}

/// Deterministic random matrix for a fixed `(n, seed, kind)`.
pub fn random_matrix(n: usize, seed: u64, kind: RandomKind) -> SquareMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SquareMatrix::from_fn(n, |_, _| match kind {
        RandomKind::ComplexGaussian => {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        }
        RandomKind::RealUniform => Complex64::new(rng.random::<f64>(), 0.0),
        RandomKind::ZeroOne => Complex64::new(if rng.random::<bool>() { 1.0 } else { 0.0 }, 0.0),
    })
}

/// Integer-valued random 0/1 matrix in any backend.
pub fn random_zero_one<T: Scalar>(n: usize, seed: u64) -> SquareMatrix<T> {
    let m = random_matrix(n, seed, RandomKind::ZeroOne);
    SquareMatrix::from_fn(n, |r, c| T::from_i64(m.get(r, c).re as i64))
}
