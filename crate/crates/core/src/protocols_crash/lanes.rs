//! Per-instance bit vectors for running several binary instances in lock step.

use std::fmt;

use fixedbitset::FixedBitSet;

/// Values for the instances ("lanes") present in `mask`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaneBits {
    pub mask: FixedBitSet,
    pub values: FixedBitSet,
}

impl LaneBits {
    pub fn new(mask: FixedBitSet, values: FixedBitSet) -> Self {
        Self { mask, values }
    }

    pub fn lanes(&self) -> usize {
        self.mask.len()
    }

    pub fn present(&self) -> usize {
        self.mask.count_ones(..)
    }

    /// One bit per present lane, plus a `ceil(lg n)`-bit header when several
    /// instances share the message.
    pub fn bit_size(&self, header: u64) -> u64 {
        if self.lanes() == 1 {
            1
        } else {
            self.present() as u64 + header
        }
    }
}

/// Decisions of every lane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaneValues(pub FixedBitSet);

impl LaneValues {
    pub fn single(value: bool) -> Self {
        let mut bits = FixedBitSet::with_capacity(1);
        bits.set(0, value);
        Self(bits)
    }

    /// The value of a single-lane decision.
    pub fn bit(&self) -> bool {
        self.0.contains(0)
    }

    /// The value of lane `i`.
    pub fn lane(&self, i: usize) -> bool {
        self.0.contains(i)
    }

    /// Lanes decided 1.
    pub fn ones(&self) -> Vec<usize> {
        self.0.ones().collect()
    }
}

impl fmt::Display for LaneValues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", u8::from(self.bit()));
        }
        let ids: Vec<String> = self.0.ones().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", ids.join(" "))
    }
}
