//! Combinadic ranking of fixed-weight bit masks.
//!
//! Weight-`k` masks are ranked in ascending numeric order (colexicographic
//! order of their set-bit positions): `rank = Σ_i C(p_i, i)` for set bits
//! `p_1 < p_2 < … < p_k`.

/// Pascal table `C(a, b)` for `a, b ≤ max`.
#[derive(Clone, Debug)]
pub struct Binomials {
    max: usize,
    table: Vec<u64>,
}

impl Binomials {
    pub fn new(max: usize) -> Self {
        let width = max + 1;
        let mut table = vec![0u64; width * width];
        for a in 0..width {
            table[a * width] = 1;
            for b in 1..=a {
                table[a * width + b] = table[(a - 1) * width + b - 1]
                    + if b < a { table[(a - 1) * width + b] } else { 0 };
            }
        }
        Binomials { max, table }
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> u64 {
        if a > self.max || b > a {
            0
        } else {
            self.table[a * (self.max + 1) + b]
        }
    }

    pub fn rank(&self, mask: u64) -> u64 {
        let mut rank = 0;
        let mut bits = mask;
        let mut i = 1;
        while bits != 0 {
            let p = bits.trailing_zeros() as usize;
            rank += self.get(p, i);
            bits &= bits - 1;
            i += 1;
        }
        rank
    }

    /// The weight-`k` mask with the given rank.
    pub fn unrank(&self, k: usize, mut rank: u64) -> u64 {
        let mut mask = 0u64;
        let mut top = self.max;
        for i in (1..=k).rev() {
            let mut c = top.min(self.max);
            while self.get(c, i) > rank {
                c -= 1;
            }
            mask |= 1 << c;
            rank -= self.get(c, i);
            top = c.saturating_sub(1);
        }
        mask
    }
}

/// Next larger integer with the same popcount (Gosper's hack).
#[inline]
pub fn next_same_weight(mask: u64) -> u64 {
    let c = mask & mask.wrapping_neg();
    let r = mask + c;
    (((r ^ mask) >> 2) / c) | r
}
