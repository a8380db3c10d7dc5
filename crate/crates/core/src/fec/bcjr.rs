//! Log-domain BCJR (exact MAP) decoding of zero-tail terminated codes.

use super::conv::ConvCode;
use super::LlrBlock;
use crate::error::{Error, Result};

/// `ln(e^a + e^b)` with the exact correction term.
#[inline]
pub fn max_star(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    a.max(b) + (-(a - b).abs()).exp().ln_1p()
}

/// Result of one BCJR pass.
#[derive(Clone, Debug, PartialEq)]
pub struct BcjrOutput {
    /// APP LLRs of every code bit (tail included).
    pub posterior: LlrBlock,
    /// `posterior - channel` on the code bits.
    pub extrinsic: LlrBlock,
    /// APP LLRs of the information bits.
    pub info_posterior: LlrBlock,
}

/// Exact symbol-by-symbol MAP decoding.
///
/// `channel` carries one LLR per code bit (`2(K + memory)` values) and `prior`
/// either `K` a-priori LLRs on the information bits or nothing (all zero).
/// LLRs follow `ln P(0)/P(1)`.
pub fn bcjr_decode(channel: &LlrBlock, prior: &LlrBlock, code: &ConvCode) -> Result<BcjrOutput> {
    let m = code.memory();
    let ch = channel.values();
    if !ch.len().is_multiple_of(2) || ch.len() / 2 <= m {
        return Err(Error::InvalidArgument(format!(
            "{} code-bit LLRs do not fit a terminated trellis with memory {m}",
            ch.len()
        )));
    }
    let steps = ch.len() / 2;
    let k = steps - m;
    let pr = prior.values();
    if !pr.is_empty() && pr.len() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            actual: pr.len(),
        });
    }
    let ns = code.states();
    // Precomputed trellis: (output pair, next state) per (state, input).
    let trellis: Vec<[([u8; 2], usize); 2]> =
        (0..ns).map(|s| [code.step(s, 0), code.step(s, 1)]).collect();

    let half = |l: f64, bit: u8| if bit == 0 { 0.5 * l } else { -0.5 * l };
    let gamma = |t: usize, input: u8, out: [u8; 2]| {
        let mut g = half(ch[2 * t], out[0]) + half(ch[2 * t + 1], out[1]);
        if t < k {
            if let Some(&l) = pr.get(t) {
                g += half(l, input);
            }
        }
        g
    };
    let inputs = |t: usize| if t < k { 2 } else { 1 };

    let neg = f64::NEG_INFINITY;
    let mut alpha = vec![neg; (steps + 1) * ns];
    alpha[0] = 0.0;
    for t in 0..steps {
        let (cur, next) = alpha.split_at_mut((t + 1) * ns);
        let cur = &cur[t * ns..];
        let next = &mut next[..ns];
        for s in 0..ns {
            if cur[s] == neg {
                continue;
            }
            for input in 0..inputs(t) {
                let (out, ns2) = trellis[s][input];
                next[ns2] = max_star(next[ns2], cur[s] + gamma(t, input as u8, out));
            }
        }
    }
    let mut beta = vec![neg; (steps + 1) * ns];
    beta[steps * ns] = 0.0;
    for t in (0..steps).rev() {
        let (cur, next) = beta.split_at_mut((t + 1) * ns);
        let cur = &mut cur[t * ns..];
        let next = &next[..ns];
        for s in 0..ns {
            let mut acc = neg;
            for input in 0..inputs(t) {
                let (out, ns2) = trellis[s][input];
                if next[ns2] != neg {
                    acc = max_star(acc, gamma(t, input as u8, out) + next[ns2]);
                }
            }
            cur[s] = acc;
        }
    }

    let mut post = vec![0.0; 2 * steps];
    let mut info = vec![0.0; k];
    for t in 0..steps {
        // [bit value][position]: position 0/1 = code bits, 2 = input.
        let mut acc = [[neg; 3]; 2];
        for s in 0..ns {
            let a = alpha[t * ns + s];
            if a == neg {
                continue;
            }
            for input in 0..inputs(t) {
                let (out, ns2) = trellis[s][input];
                let b = beta[(t + 1) * ns + ns2];
                if b == neg {
                    continue;
                }
                let metric = a + gamma(t, input as u8, out) + b;
                acc[out[0] as usize][0] = max_star(acc[out[0] as usize][0], metric);
                acc[out[1] as usize][1] = max_star(acc[out[1] as usize][1], metric);
                acc[input][2] = max_star(acc[input][2], metric);
            }
        }
        post[2 * t] = acc[0][0] - acc[1][0];
        post[2 * t + 1] = acc[0][1] - acc[1][1];
        if t < k {
            info[t] = acc[0][2] - acc[1][2];
        }
    }
    let posterior = LlrBlock::clamped(post)?;
    let extrinsic = LlrBlock::clamped(
        posterior
            .values()
            .iter()
            .zip(ch)
            .map(|(p, c)| p - c)
            .collect(),
    )?;
    Ok(BcjrOutput {
        posterior,
        extrinsic,
        info_posterior: LlrBlock::clamped(info)?,
    })
}
