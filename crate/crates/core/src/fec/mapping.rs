use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::LlrBlock;
use crate::beliefs::SymbolBeliefs;
use crate::daft::DaftFrame;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Modulation {
    Bpsk,
    Qam4,
}

impl FromStr for Modulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Self::Bpsk),
            "4qam" | "qam4" | "qpsk" => Ok(Self::Qam4),
            other => Err(Error::Parse(format!("unknown modulation {other:?}"))),
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bpsk => "BPSK",
            Self::Qam4 => "4QAM",
        })
    }
}

/// Unit-energy Gray-labelled constellation.
///
/// Point `a` carries `labels[a]`, most significant bit first. BPSK maps
/// 0 → +1 and 1 → −1. 4QAM uses labels 00, 01, 11, 10 going around the
/// quadrants, the first bit choosing the sign of I and the second of Q.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulationAlphabet {
    kind: Modulation,
    points: Vec<Complex64>,
    labels: Vec<u32>,
    bits: usize,
}

impl ModulationAlphabet {
    pub fn new(kind: Modulation) -> Self {
        match kind {
            Modulation::Bpsk => Self {
                kind,
                points: vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
                labels: vec![0, 1],
                bits: 1,
            },
            Modulation::Qam4 => {
                let s = FRAC_1_SQRT_2;
                Self {
                    kind,
                    points: vec![
                        Complex64::new(s, s),
                        Complex64::new(s, -s),
                        Complex64::new(-s, -s),
                        Complex64::new(-s, s),
                    ],
                    labels: vec![0b00, 0b01, 0b11, 0b10],
                    bits: 2,
                }
            }
        }
    }

    pub fn bpsk() -> Self {
        Self::new(Modulation::Bpsk)
    }

    pub fn qam4() -> Self {
        Self::new(Modulation::Qam4)
    }

    pub fn kind(&self) -> Modulation {
        self.kind
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    /// Bit `b` (0 = first) of the label of point `a`.
    #[inline]
    pub fn label_bit(&self, a: usize, b: usize) -> u8 {
        ((self.labels[a] >> (self.bits - 1 - b)) & 1) as u8
    }

    pub fn index_of_label(&self, label: u32) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }
}

/// Gray-maps `bits` onto a frame, `bits_per_symbol` bits per symbol.
pub fn map_symbols(bits: &[u8], alph: &ModulationAlphabet) -> Result<DaftFrame> {
    let bps = alph.bits_per_symbol();
    if !bits.len().is_multiple_of(bps) {
        return Err(Error::InvalidArgument(format!(
            "{} bits do not split into {bps}-bit symbols",
            bits.len()
        )));
    }
    let symbols = bits
        .chunks(bps)
        .map(|chunk| {
            let label = chunk.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
            let a = alph
                .index_of_label(label)
                .ok_or_else(|| Error::InvalidArgument("bits must be 0 or 1".into()))?;
            Ok(alph.points()[a])
        })
        .collect::<Result<Vec<_>>>()?;
    DaftFrame::new(symbols)
}

/// Label bits of a sequence of alphabet indices.
pub fn hard_bits_of(indices: &[usize], alph: &ModulationAlphabet) -> Vec<u8> {
    indices
        .iter()
        .flat_map(|&a| (0..alph.bits_per_symbol()).map(move |b| alph.label_bit(a, b)))
        .collect()
}

/// Marginal bit LLRs of each symbol distribution.
pub fn beliefs_to_bit_llr(beliefs: &SymbolBeliefs, alph: &ModulationAlphabet) -> Result<LlrBlock> {
    if beliefs.q() != alph.size() {
        return Err(Error::LengthMismatch {
            expected: alph.size(),
            actual: beliefs.q(),
        });
    }
    let bps = alph.bits_per_symbol();
    let mut out = Vec::with_capacity(beliefs.n() * bps);
    for row in beliefs.rows() {
        for b in 0..bps {
            let (mut p0, mut p1) = (0.0, 0.0);
            for (a, &p) in row.iter().enumerate() {
                if alph.label_bit(a, b) == 0 {
                    p0 += p;
                } else {
                    p1 += p;
                }
            }
            out.push(p0.ln() - p1.ln());
        }
    }
    LlrBlock::clamped(out)
}

/// Symbol distributions from independent bit LLRs.
pub fn bit_llr_to_beliefs(llr: &LlrBlock, alph: &ModulationAlphabet) -> Result<SymbolBeliefs> {
    let bps = alph.bits_per_symbol();
    if !llr.len().is_multiple_of(bps) {
        return Err(Error::InvalidArgument(format!(
            "{} LLRs do not split into {bps}-bit symbols",
            llr.len()
        )));
    }
    let q = alph.size();
    let mut logs = Vec::with_capacity(llr.len() / bps * q);
    for chunk in llr.values().chunks(bps) {
        for a in 0..q {
            let v: f64 = chunk
                .iter()
                .enumerate()
                .map(|(b, &l)| if alph.label_bit(a, b) == 0 { 0.5 * l } else { -0.5 * l })
                .sum();
            logs.push(v);
        }
    }
    SymbolBeliefs::from_log_weights(q, &logs)
}
