//! Iterative detection and decoding.
//!
//! Each iteration runs the soft detector with priors built from the decoder's
//! last extrinsic output, strips those priors from the detector's bit LLRs,
//! deinterleaves, runs BCJR, and interleaves the decoder's extrinsic LLRs to
//! become the next priors. Bits are decided from the final BCJR information
//! posterior.

use num_complex::Complex64;

use super::spa::{SoftDetector, SpaDetector, SpaParams};
use crate::channel::EffectiveChannel;
use crate::daft::DaftFrame;
use crate::error::{Error, Result};
use crate::fec::{bcjr_decode, beliefs_to_bit_llr, bit_llr_to_beliefs, ConvCode, Interleaver, LlrBlock, ModulationAlphabet};

/// Per-iteration diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationStats {
    pub iteration: usize,
    pub detector_sweeps: usize,
    /// Mean `|LLR|` of the extrinsic information handed to the decoder.
    pub detector_extrinsic: f64,
    /// Mean `|LLR|` of the information-bit posterior.
    pub decoder_posterior: f64,
    /// Symbol errors of the detector's hard decision, when the truth is known.
    pub symbol_errors: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct TurboOutput {
    pub info_bits: Vec<u8>,
    pub info_llr: LlrBlock,
    pub history: Vec<IterationStats>,
}

/// Runs `iterations` detector/decoder rounds with any soft detector.
///
/// `genie` optionally holds the transmitted alphabet indices for diagnostics.
pub fn turbo_decode_with(
    detector: &dyn SoftDetector,
    y: &[Complex64],
    code: &ConvCode,
    perm: &Interleaver,
    n0: f64,
    iterations: usize,
    genie: Option<&[usize]>,
) -> Result<TurboOutput> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("at least one turbo iteration is required".into()));
    }
    let alph = detector.alphabet();
    let coded = detector.n() * alph.bits_per_symbol();
    if perm.len() != coded {
        return Err(Error::LengthMismatch {
            expected: coded,
            actual: perm.len(),
        });
    }
    if code.info_len_for(coded).is_none() {
        return Err(Error::InvalidArgument(format!(
            "{coded} code bits do not fit a terminated {code} trellis"
        )));
    }
    let mut prior = LlrBlock::zeros(coded);
    let mut history = Vec::with_capacity(iterations);
    let mut info_llr = LlrBlock::empty();
    for iteration in 1..=iterations {
        let priors = bit_llr_to_beliefs(&prior, alph)?;
        let det = detector.detect(y, &priors, n0)?;
        let post = beliefs_to_bit_llr(&det.posterior, alph)?;
        let extrinsic = LlrBlock::clamped(post.values().iter().zip(prior.values()).map(|(p, a)| p - a).collect())?;
        let dec = bcjr_decode(&LlrBlock::clamped(perm.deinterleave(extrinsic.values())?)?, &LlrBlock::empty(), code)?;
        prior = LlrBlock::clamped(perm.interleave(dec.extrinsic.values())?)?;
        history.push(IterationStats {
            iteration,
            detector_sweeps: det.sweeps,
            detector_extrinsic: extrinsic.mean_abs(),
            decoder_posterior: dec.info_posterior.mean_abs(),
            symbol_errors: genie.map(|truth| {
                det.posterior
                    .argmax()
                    .iter()
                    .zip(truth)
                    .filter(|(a, b)| a != b)
                    .count()
            }),
        });
        info_llr = dec.info_posterior;
    }
    Ok(TurboOutput {
        info_bits: info_llr.hard_bits(),
        info_llr,
        history,
    })
}

/// AFDM turbo receiver with `t_turbo` rounds of `i_spa`-sweep detection.
#[allow(clippy::too_many_arguments)]
pub fn turbo_decode(
    y: &DaftFrame,
    chan: &EffectiveChannel,
    code: &ConvCode,
    perm: &Interleaver,
    alph: &ModulationAlphabet,
    n0: f64,
    t_turbo: usize,
    i_spa: usize,
) -> Result<TurboOutput> {
    let det = SpaDetector::afdm(chan, alph, SpaParams::with_sweeps(i_spa))?;
    turbo_decode_with(&det, y.as_slice(), code, perm, n0, t_turbo, None)
}
