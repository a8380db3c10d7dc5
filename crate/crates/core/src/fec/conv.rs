//! Feedforward rate-1/2 convolutional codes with zero-tail termination.
//!
//! Generators use the usual left-justified octal notation: the most
//! significant bit of a `memory + 1` bit wide polynomial taps the current
//! input, the least significant bit taps the oldest register stage. Every
//! input bit emits the first generator's bit and then the second's.

use std::collections::BinaryHeap;
use std::cmp::Reverse;
use std::fmt;

use crate::error::{Error, Result};

/// Role of a bit vector inside the transmit chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitRole {
    Info,
    Coded,
    Interleaved,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitBlock {
    bits: Vec<u8>,
    role: BitRole,
}

impl BitBlock {
    pub fn new(bits: Vec<u8>, role: BitRole) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("bits must be 0 or 1".into()));
        }
        Ok(Self { bits, role })
    }

    pub fn info(bits: Vec<u8>) -> Result<Self> {
        Self::new(bits, BitRole::Info)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn role(&self) -> BitRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }
}

/// Largest memory accepted by [`free_distance`].
pub const MAX_SEARCH_MEMORY: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvCode {
    generators: [u32; 2],
    memory: usize,
}

impl ConvCode {
    /// Generators given as plain integers (already converted from octal).
    pub fn new(g0: u32, g1: u32) -> Result<Self> {
        if g0 == 0 || g1 == 0 {
            return Err(Error::InvalidArgument("generator polynomials must be nonzero".into()));
        }
        let width = 32 - g0.max(g1).leading_zeros() as usize;
        Ok(Self {
            generators: [g0, g1],
            memory: width - 1,
        })
    }

    pub fn from_octal(g0: &str, g1: &str) -> Result<Self> {
        let parse = |s: &str| {
            u32::from_str_radix(s, 8).map_err(|_| Error::Parse(format!("bad octal generator {s:?}")))
        };
        Self::new(parse(g0)?, parse(g1)?)
    }

    /// Registry: `A` = (3,1), `B` = (5,7), `C` = (51,77), all octal.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "A" | "a" => Self::from_octal("3", "1"),
            "B" | "b" => Self::from_octal("5", "7"),
            "C" | "c" => Self::from_octal("51", "77"),
            other => Err(Error::InvalidArgument(format!("unknown code {other:?}"))),
        }
    }

    pub fn generators(&self) -> [u32; 2] {
        self.generators
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn states(&self) -> usize {
        1 << self.memory
    }

    /// Coded length for `k` information bits, tail included.
    pub fn coded_len(&self, k: usize) -> usize {
        2 * (k + self.memory)
    }

    /// Information bits that fill exactly `coded` code bits, if any.
    pub fn info_len_for(&self, coded: usize) -> Option<usize> {
        (coded.is_multiple_of(2) && coded / 2 > self.memory).then(|| coded / 2 - self.memory)
    }

    pub fn rate(&self, k: usize) -> f64 {
        k as f64 / self.coded_len(k) as f64
    }

    /// Output pair and next state for `input` leaving `state`.
    ///
    /// `state` holds the previous `memory` inputs, most recent in the top bit.
    #[inline]
    pub fn step(&self, state: usize, input: u8) -> ([u8; 2], usize) {
        let reg = ((input as u32) << self.memory) | state as u32;
        let out = [
            ((reg & self.generators[0]).count_ones() & 1) as u8,
            ((reg & self.generators[1]).count_ones() & 1) as u8,
        ];
        (out, (reg >> 1) as usize)
    }
}

impl fmt::Display for ConvCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:o},{:o})", self.generators[0], self.generators[1])
    }
}

/// Encodes `u` followed by `memory` zero tail bits.
pub fn conv_encode(u: &BitBlock, code: &ConvCode) -> Result<BitBlock> {
    if u.is_empty() {
        return Err(Error::InvalidArgument("cannot encode an empty block".into()));
    }
    let mut state = 0;
    let mut out = Vec::with_capacity(code.coded_len(u.len()));
    let tail = std::iter::repeat_n(0u8, code.memory());
    for b in u.bits().iter().copied().chain(tail) {
        let (pair, next) = code.step(state, b);
        out.extend_from_slice(&pair);
        state = next;
    }
    BitBlock::new(out, BitRole::Coded)
}

/// Free distance and the matching BPSK squared Euclidean distance `4·d_free`.
///
/// Dijkstra over the trellis for the lightest path that leaves the zero
/// state and first returns to it.
pub fn free_distance(code: &ConvCode) -> Result<(usize, usize)> {
    if code.memory() > MAX_SEARCH_MEMORY {
        return Err(Error::SearchBound(format!(
            "memory {} exceeds {MAX_SEARCH_MEMORY}",
            code.memory()
        )));
    }
    let weight = |p: [u8; 2]| (p[0] + p[1]) as usize;
    let (first, start) = code.step(0, 1);
    if start == 0 {
        return Ok((weight(first), 4 * weight(first)));
    }
    let mut dist = vec![usize::MAX; code.states()];
    let mut heap = BinaryHeap::new();
    dist[start] = weight(first);
    heap.push(Reverse((dist[start], start)));
    while let Some(Reverse((d, s))) = heap.pop() {
        if s == 0 {
            return Ok((d, 4 * d));
        }
        if d > dist[s] {
            continue;
        }
        for input in [0, 1] {
            let (pair, next) = code.step(s, input);
            let nd = d + weight(pair);
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(Reverse((nd, next)));
            }
        }
    }
    Err(Error::SearchBound("no path returns to the zero state".into()))
}
