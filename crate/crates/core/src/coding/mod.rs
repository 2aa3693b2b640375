//! Per-user bit pipeline: `[7,5]` convolutional code with zero tail, seeded
//! interleaver and Gray-labelled constellation, plus the max-log-MAP decoder
//! that closes the soft loop.
//!
//! Bits are `u8` values in `{0, 1}`. LLRs follow `log P(+1) / P(-1)` with bit
//! 0 mapped to `+1`, so a positive LLR favours bit 0.

mod constellation;
mod convolutional;
mod interleaver;

pub use constellation::Constellation;
pub use convolutional::{
    encode, maxlog_map_decode, ConvCode, DecoderOutput, CODE_MEMORY, GENERATORS,
};
pub use interleaver::Interleaver;

/// Magnitude at which LLRs are clipped before any exponential or `tanh`.
pub const LLR_CLIP: f64 = 30.0;

#[inline]
pub fn clip_llr(llr: f64) -> f64 {
    llr.clamp(-LLR_CLIP, LLR_CLIP)
}

/// Antipodal value of a bit: `0 -> +1`, `1 -> -1`.
#[inline]
pub fn bit_sign(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Hard decision on an LLR. Zero maps to bit 0.
#[inline]
pub fn hard_bit(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

/// What an [`LlrFrame`] holds relative to the soft loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlrRole {
    APriori,
    APosteriori,
    Extrinsic,
}

/// A block of per-bit LLRs tagged with its role.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrFrame {
    pub values: Vec<f64>,
    pub role: LlrRole,
}

impl LlrFrame {
    pub fn new(values: Vec<f64>, role: LlrRole) -> Self {
        Self { values, role }
    }

    pub fn zeros(len: usize, role: LlrRole) -> Self {
        Self::new(vec![0.0; len], role)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Copy with every value clipped to `±LLR_CLIP`.
    pub fn clipped(&self) -> Self {
        Self::new(
            self.values.iter().map(|&l| clip_llr(l)).collect(),
            self.role,
        )
    }

    pub fn hard_decisions(&self) -> Vec<u8> {
        self.values.iter().map(|&l| hard_bit(l)).collect()
    }
}
