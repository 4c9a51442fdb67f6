//! Scalar backends: complex double precision and exact rational complex.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact complex rational scalar.
pub type Exact = Complex<BigRational>;

/// Field operations shared by the floating and exact backends.
pub trait Scalar: Num + Neg<Output = Self> + Clone + Debug + Send + Sync + 'static {
    fn from_i64(v: i64) -> Self;

    /// Lossy conversion used for reporting and cross-backend checks.
    fn to_c64(&self) -> Complex64;

    /// Parses a complex literal `a`, `a+bi`, `a-bj` or `bi`.
    fn parse_literal(token: &str) -> Result<Self>;

    /// Formats as a literal that [`Scalar::parse_literal`] reads back.
    fn to_literal(&self) -> String;

    fn magnitude(&self) -> f64 {
        self.to_c64().norm()
    }

    /// Adds `x` to `sum`, keeping lost low-order bits in `carry`; the total
    /// is `sum + carry`. Exact backends just add.
    fn accumulate(sum: &mut Self, carry: &mut Self, x: Self) {
        let _ = carry;
        *sum = std::mem::replace(sum, Self::zero()) + x;
    }

    /// Adds `±Π (hi[i] + lo[i])` to the compensated sum `(sum, carry)`.
    fn accumulate_product(sum: &mut Self, carry: &mut Self, hi: &[Self], lo: &[Self], negate: bool) {
        let product = hi
            .iter()
            .zip(lo)
            .map(|(h, l)| h.clone() + l.clone())
            .reduce(|a, b| a * b)
            .unwrap_or_else(Self::one);
        Self::accumulate(sum, carry, if negate { -product } else { product });
    }
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi) / 2`.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    (s, (a - (s - v)) + (b - v))
}

fn split(a: f64) -> (f64, f64) {
    let c = 134_217_729.0 * a;
    let h = c - (c - a);
    (h, a - h)
}

/// Dekker's exact product without fused multiply-add.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl Dd {
    fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Dd { hi, lo }
    }

    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        Dd::new(s, e + self.lo + o.lo)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        Dd::new(p, e + self.hi * o.lo + self.lo * o.hi)
    }
}

/// Neumaier's compensated step on one real component.
fn neumaier(sum: &mut f64, carry: &mut f64, x: f64) {
    let t = *sum + x;
    *carry += if sum.abs() >= x.abs() {
        (*sum - t) + x
    } else {
        (x - t) + *sum
    };
    *sum = t;
}

impl Scalar for Complex64 {
    fn accumulate(sum: &mut Self, carry: &mut Self, x: Self) {
        neumaier(&mut sum.re, &mut carry.re, x.re);
        neumaier(&mut sum.im, &mut carry.im, x.im);
    }

    /// The product is formed in double-double arithmetic, so each term is
    /// rounded once rather than once per factor.
    fn accumulate_product(sum: &mut Self, carry: &mut Self, hi: &[Self], lo: &[Self], negate: bool) {
        let mut re = Dd::from(1.0);
        let mut im = Dd::from(0.0);
        for (h, l) in hi.iter().zip(lo) {
            let (c, d) = (Dd::new(h.re, l.re), Dd::new(h.im, l.im));
            (re, im) = (re.mul(c).sub(im.mul(d)), re.mul(d).add(im.mul(c)));
        }
        if negate {
            (re, im) = (re.neg(), im.neg());
        }
        neumaier(&mut sum.re, &mut carry.re, re.hi);
        neumaier(&mut sum.re, &mut carry.re, re.lo);
        neumaier(&mut sum.im, &mut carry.im, im.hi);
        neumaier(&mut sum.im, &mut carry.im, im.lo);
    }

    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }

    fn parse_literal(token: &str) -> Result<Self> {
        let (re, im) = split_literal(token)?;
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| bad(token))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(token))
            }
        };
        let re = re.map(parse).transpose()?.unwrap_or(0.0);
        let im = im.map(parse).transpose()?.unwrap_or(0.0);
        Ok(Complex64::new(re, im))
    }

    fn to_literal(&self) -> String {
        format_parts(
            self.re.to_string(),
            self.im.to_string(),
            self.im == 0.0,
            self.im < 0.0,
        )
    }
}

impl Scalar for Exact {
    fn from_i64(v: i64) -> Self {
        Complex::new(BigRational::from_integer(BigInt::from(v)), BigRational::zero())
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    fn parse_literal(token: &str) -> Result<Self> {
        let (re, im) = split_literal(token)?;
        let parse = |s: &str| parse_decimal(s).ok_or_else(|| bad(token));
        let re = re.map(parse).transpose()?.unwrap_or_else(BigRational::zero);
        let im = im.map(parse).transpose()?.unwrap_or_else(BigRational::zero);
        Ok(Complex::new(re, im))
    }

    fn to_literal(&self) -> String {
        format_parts(
            self.re.to_string(),
            self.im.to_string(),
            self.im.is_zero(),
            self.im.is_negative(),
        )
    }
}

fn format_parts(re: String, im: String, im_zero: bool, im_negative: bool) -> String {
    if im_zero {
        re
    } else if im_negative {
        format!("{re}{im}i")
    } else {
        format!("{re}+{im}i")
    }
}

fn bad(token: &str) -> Error {
    Error::BadToken {
        token: token.to_string(),
    }
}

/// Splits a complex literal into its real and imaginary text parts.
fn split_literal(token: &str) -> Result<(Option<&str>, Option<&str>)> {
    let s = token.trim();
    if s.is_empty() {
        return Err(bad(token));
    }
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return Ok((Some(s), None));
    };
    // The real/imaginary separator is the last sign that is neither leading
    // nor part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (Some(&body[..k]), &body[k..]),
        None => (None, body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    if re.is_some_and(|r| r.is_empty()) {
        return Err(bad(token));
    }
    Ok((re, Some(im)))
}

/// Parses a decimal literal (optionally with exponent) or a `p/q` fraction
/// into an exact rational.
pub fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let q = parse_decimal(q)?;
        return if q.is_zero() { None } else { Some(parse_decimal(p)? / q) };
    }
    let (negative, rest) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exponent) = match rest.find(['e', 'E']) {
        Some(k) => (&rest[..k], rest[k + 1..].parse::<i64>().ok()?),
        None => (rest, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(k) => (&mantissa[..k], &mantissa[k + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str_radix(&digits, 10).ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i64;
    if scale.unsigned_abs() > 10_000 {
        return None;
    }
    let pow = num_traits::pow(BigInt::from(10), scale.unsigned_abs() as usize);
    Some(if scale >= 0 {
        BigRational::from_integer(numer * pow)
    } else {
        BigRational::new(numer, pow)
    })
}

/// Relative distance `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_diff(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_literals() {
        let c = |s| Complex64::parse_literal(s).unwrap();
        assert_eq!(c("1"), Complex64::new(1.0, 0.0));
        assert_eq!(c("1+2i"), Complex64::new(1.0, 2.0));
        assert_eq!(c("4-1i"), Complex64::new(4.0, -1.0));
        assert_eq!(c("-1.5e-3+2E+1j"), Complex64::new(-1.5e-3, 20.0));
        assert_eq!(c("3i"), Complex64::new(0.0, 3.0));
        assert_eq!(c("-i"), Complex64::new(0.0, -1.0));
        assert_eq!(c(" 2 "), Complex64::new(2.0, 0.0));
        assert!(Complex64::parse_literal("abc").is_err());
        assert!(Complex64::parse_literal("1+").is_err());
        assert!(Complex64::parse_literal("nan").is_err());
        assert!(Complex64::parse_literal("").is_err());
    }

    #[test]
    fn exact_literals() {
        let e = Exact::parse_literal("0.1-2.5e1i").unwrap();
        assert_eq!(e.re, BigRational::new(1.into(), 10.into()));
        assert_eq!(e.im, BigRational::from_integer((-25).into()));
        assert_eq!(Exact::parse_literal("7").unwrap(), Exact::from_i64(7));
        assert!(Exact::parse_literal("1.2.3").is_err());
    }

    #[test]
    fn literal_roundtrip() {
        for z in [
            Complex64::new(1.0, 2.0),
            Complex64::new(-0.25, -3.5e-7),
            Complex64::new(3.0, 0.0),
        ] {
            assert_eq!(Complex64::parse_literal(&z.to_literal()).unwrap(), z);
        }
        let e = Exact::new(
            BigRational::new(1.into(), 3.into()),
            BigRational::new((-2).into(), 7.into()),
        );
        assert_eq!(e.to_literal(), "1/3-2/7i");
        assert_eq!(Exact::parse_literal("1/3-2/7i").unwrap(), e);
    }
}
