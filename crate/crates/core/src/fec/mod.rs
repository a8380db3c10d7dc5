//! Coding side of the receiver: convolutional codes, BCJR, interleaving
//! and the symbol/bit soft-information conversions.

mod bcjr;
mod conv;
mod interleave;
mod mapping;

pub use bcjr::{bcjr_decode, max_star, BcjrOutput};
pub use conv::{conv_encode, free_distance, BitBlock, BitRole, ConvCode, MAX_SEARCH_MEMORY};
pub use interleave::Interleaver;
pub use mapping::{beliefs_to_bit_llr, bit_llr_to_beliefs, hard_bits_of, map_symbols, Modulation, ModulationAlphabet};

use crate::error::{Error, Result};

/// Magnitude every LLR is clamped to.
pub const LLR_MAX: f64 = 50.0;

/// Bit LLRs, `ln P(0)/P(1)`, clamped to `±LLR_MAX`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LlrBlock(Vec<f64>);

impl LlrBlock {
    /// Clamps into `±LLR_MAX`; infinities saturate, NaN is rejected.
    pub fn clamped(mut values: Vec<f64>) -> Result<Self> {
        for v in values.iter_mut() {
            if v.is_nan() {
                return Err(Error::NonFinite("LLR block"));
            }
            *v = v.clamp(-LLR_MAX, LLR_MAX);
        }
        Ok(Self(values))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bit 1 where the LLR is negative; zero decides 0.
    pub fn hard_bits(&self) -> Vec<u8> {
        self.0.iter().map(|&l| u8::from(l < 0.0)).collect()
    }

    pub fn mean_abs(&self) -> f64 {
        if self.0.is_empty() {
            0.0
        } else {
            self.0.iter().map(|v| v.abs()).sum::<f64>() / self.0.len() as f64
        }
    }
}
