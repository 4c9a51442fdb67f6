//! Occupation basis states and the Jordan-Wigner sign.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// An `n`-site occupation string. Bit `b` of `mask` is site `b`; the text
/// form writes site 0 leftmost, so sites {0, 2} of four render as `1010`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    n: u32,
    mask: u64,
}

impl BasisState {
    pub fn new(n: usize, mask: u64) -> Self {
        assert!((1..64).contains(&n), "site count out of range");
        assert!(mask >> n == 0, "mask has bits beyond site {}", n - 1);
        BasisState { n: n as u32, mask }
    }

    pub fn vacuum(n: usize) -> Self {
        Self::new(n, 0)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let n = text.len();
        if n == 0 || n >= 64 {
            return Err(Error::Malformed(format!("bad bitstring {text:?}")));
        }
        let mut mask = 0;
        for (site, ch) in text.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => mask |= 1 << site,
                _ => return Err(Error::Malformed(format!("bad bitstring {text:?}"))),
            }
        }
        Ok(Self::new(n, mask))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn mask(&self) -> u64 {
        self.mask
    }

    /// Hamming weight.
    #[inline]
    pub fn level(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_occupied(&self, site: usize) -> bool {
        self.mask >> site & 1 == 1
    }

    /// Position in the dense basis ordering (lexicographic by text).
    pub fn dense_index(&self) -> usize {
        dense_index(self.n(), self.mask)
    }

    pub fn from_dense_index(n: usize, index: usize) -> Self {
        Self::new(n, dense_index(n, index as u64) as u64)
    }

    /// Sign picked up when a fermion is created at `site`.
    pub fn jw_sign(&self, site: usize) -> Result<i8> {
        if self.is_occupied(site) {
            return Err(Error::OccupiedSite {
                state: self.to_string(),
                site,
            });
        }
        Ok(if jw_negative(self.mask, site) { -1 } else { 1 })
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for site in 0..self.n() {
            f.write_str(if self.is_occupied(site) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for BasisState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Odd number of occupied sites above `site`.
#[inline]
pub fn jw_negative(mask: u64, site: usize) -> bool {
    (mask >> site >> 1).count_ones() % 2 == 1
}

/// Bit reversal over `n` sites. Maps a mask to its dense index and back.
#[inline]
pub fn dense_index(n: usize, mask: u64) -> usize {
    (mask.reverse_bits() >> (64 - n)) as usize
}
