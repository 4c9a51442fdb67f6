use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

/// Arithmetic operation tally.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCount {
    pub multiplications: u64,
    pub additions: u64,
}

impl OpCount {
    pub fn total(&self) -> u64 {
        self.multiplications + self.additions
    }

    /// One multiply and one accumulate.
    #[inline]
    pub fn fma(&mut self, times: u64) {
        self.multiplications += times;
        self.additions += times;
    }
}

impl Add for OpCount {
    type Output = OpCount;

    fn add(self, rhs: OpCount) -> OpCount {
        OpCount {
            multiplications: self.multiplications + rhs.multiplications,
            additions: self.additions + rhs.additions,
        }
    }
}

impl AddAssign for OpCount {
    fn add_assign(&mut self, rhs: OpCount) {
        *self = *self + rhs;
    }
}

impl Sum for OpCount {
    fn sum<I: Iterator<Item = OpCount>>(iter: I) -> OpCount {
        iter.fold(OpCount::default(), Add::add)
    }
}

/// `n · 2ⁿ`, the operation count of one full level sweep.
pub fn spin_sweep_ops(n: u32) -> u64 {
    u64::from(n) << n
}

/// `n · 2ⁿ⁺¹ − (n+1)²`, the Gray-code Ryser operation count.
pub fn ryser_ops(n: u32) -> u64 {
    let n64 = u64::from(n);
    (n64 << (n + 1)) - (n64 + 1) * (n64 + 1)
}
