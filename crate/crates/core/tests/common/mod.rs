//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use afdm_core::sim::report::Series;
use afdm_core::sim::{run_fer, SimConfig};
use afdm_core::{CMatrix, ModulationAlphabet};
use num_complex::Complex64;

/// Set to `1` to run the long campaigns at full statistics.
pub const EXTENDED_ENV: &str = "AFDM_EXTENDED";

pub fn extended() -> bool {
    std::env::var(EXTENDED_ENV).is_ok_and(|v| v.trim() == "1")
}

/// Per-position posteriors of `y = H x + w` by enumerating every `x`.
pub fn exhaustive_marginals(y: &[Complex64], h: &CMatrix, n0: f64, alph: &ModulationAlphabet) -> Vec<Vec<f64>> {
    let n = y.len();
    let q = alph.size();
    let pts = alph.points();
    let total = q.pow(n as u32);
    let mut digits = vec![0usize; n];
    let mut logw = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for _ in 0..total {
        let mut dist = 0.0;
        for r in 0..n {
            let mut acc = y[r];
            for (c, &d) in digits.iter().enumerate() {
                acc -= h[(r, c)] * pts[d];
            }
            dist += acc.norm_sqr();
        }
        logw.push(-dist / n0);
        labels.push(digits.clone());
        for d in digits.iter_mut() {
            *d += 1;
            if *d < q {
                break;
            }
            *d = 0;
        }
    }
    let peak = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut marg = vec![vec![0.0; q]; n];
    let mut z = 0.0;
    for (lw, lab) in logw.iter().zip(&labels) {
        let w = (lw - peak).exp();
        z += w;
        for (m, &d) in lab.iter().enumerate() {
            marg[m][d] += w;
        }
    }
    for row in marg.iter_mut() {
        row.iter_mut().for_each(|v| *v /= z);
    }
    marg
}

pub fn argmax(row: &[f64]) -> usize {
    row.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}

/// Eigenvalues of a Hermitian matrix, ascending, by cyclic Jacobi rotations on
/// its real symmetric embedding `[[Re, -Im], [Im, Re]]`.
pub fn jacobi_hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let p = a.nrows();
    let n = 2 * p;
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..p {
        for j in 0..p {
            let v = a[(i, j)];
            m[i][j] = v.re;
            m[i + p][j + p] = v.re;
            m[i][j + p] = -v.im;
            m[i + p][j] = v.im;
        }
    }
    let scale: f64 = m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum::<f64>()
            .sqrt();
        if off < 1e-15 * scale {
            break;
        }
        for i in 0..n {
            for j in i + 1..n {
                if m[i][j].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[j][j] - m[i][i]) / (2.0 * m[i][j]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mki, mkj) = (m[k][i], m[k][j]);
                    m[k][i] = c * mki - s * mkj;
                    m[k][j] = s * mki + c * mkj;
                }
                for k in 0..n {
                    let (mik, mjk) = (m[i][k], m[j][k]);
                    m[i][k] = c * mik - s * mjk;
                    m[j][k] = s * mik + c * mjk;
                }
            }
        }
    }
    let mut diag: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    diag.sort_by(f64::total_cmp);
    // Every eigenvalue appears twice in the embedding.
    diag.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
}

/// Rate-1/2 feedforward encoder written directly from the generator taps:
/// the most significant tap multiplies the current input.
pub fn reference_encode(u: &[u8], g: [u32; 2], memory: usize) -> Vec<u8> {
    let mut hist = vec![0u8; memory + 1];
    let mut out = Vec::new();
    for &b in u.iter().chain(std::iter::repeat_n(&0, memory)) {
        hist.rotate_right(1);
        hist[0] = b;
        for gen in g {
            let mut bit = 0;
            for (j, &h) in hist.iter().enumerate() {
                if (gen >> (memory - j)) & 1 == 1 {
                    bit ^= h;
                }
            }
            out.push(bit);
        }
    }
    out
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Bitwise MAP LLRs (`ln P(0)/P(1)`) of the information and code bits by
/// enumerating all `2^K` messages.
pub fn brute_force_app(channel: &[f64], prior: &[f64], g: [u32; 2], memory: usize, k: usize) -> (Vec<f64>, Vec<f64>) {
    let half = |l: f64, b: u8| if b == 0 { 0.5 * l } else { -0.5 * l };
    let mut info = vec![(Vec::new(), Vec::new()); k];
    let mut code = vec![(Vec::new(), Vec::new()); channel.len()];
    for msg in 0..(1usize << k) {
        let u: Vec<u8> = (0..k).map(|i| ((msg >> i) & 1) as u8).collect();
        let c = reference_encode(&u, g, memory);
        let mut metric: f64 = c.iter().zip(channel).map(|(&b, &l)| half(l, b)).sum();
        if !prior.is_empty() {
            metric += u.iter().zip(prior).map(|(&b, &l)| half(l, b)).sum::<f64>();
        }
        for (slot, &b) in info.iter_mut().zip(&u) {
            if b == 0 { slot.0.push(metric) } else { slot.1.push(metric) }
        }
        for (slot, &b) in code.iter_mut().zip(&c) {
            if b == 0 { slot.0.push(metric) } else { slot.1.push(metric) }
        }
    }
    let llr = |s: &(Vec<f64>, Vec<f64>)| (log_sum_exp(&s.0) - log_sum_exp(&s.1)).clamp(-50.0, 50.0);
    (info.iter().map(llr).collect(), code.iter().map(llr).collect())
}

/// Smallest output weight over nonzero terminated messages of up to `max_len`
/// bits starting with a one.
pub fn min_terminated_weight(g: [u32; 2], memory: usize, max_len: usize) -> usize {
    let mut best = usize::MAX;
    for len in 1..=max_len {
        for tail in 0..(1usize << (len - 1)) {
            let mut u = vec![1u8];
            u.extend((0..len - 1).map(|i| ((tail >> i) & 1) as u8));
            let w = reference_encode(&u, g, memory).iter().filter(|&&b| b == 1).count();
            best = best.min(w);
        }
    }
    best
}

/// Runs a campaign in memory and returns its FER series.
pub fn fer_series(cfg: &SimConfig) -> Series {
    let records = run_fer(cfg).expect("campaign runs");
    let mut s = Series::new(&cfg.series_label(), records.iter().map(|r| (r.snr_db, r.fer)).collect());
    s.fingerprint = cfg.fingerprint();
    s
}

/// Builds a config from `key=value` overrides on top of the defaults.
pub fn config(overrides: &[&str]) -> SimConfig {
    let mut cfg = SimConfig::default();
    for kv in overrides {
        cfg.apply_override(kv).expect("valid override");
    }
    cfg.validate().expect("valid config");
    cfg
}
