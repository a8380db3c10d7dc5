//! Doubly selective channel: path sampling, time-domain and DAFT-domain
//! matrices, and the text record used for regression fixtures.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use num_traits::Zero;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::daft::{AfdmConfig, CMatrix, DaftTransform, TimeFrame};
use crate::error::{Error, Result};

/// One propagation path: gain, integer delay and Doppler `alpha + beta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSpec {
    pub gain: Complex64,
    pub delay: usize,
    pub doppler_int: i64,
    pub doppler_frac: f64,
}

impl PathSpec {
    pub fn new(gain: Complex64, delay: usize, doppler_int: i64, doppler_frac: f64) -> Result<Self> {
        if !(doppler_frac > -0.5 && doppler_frac <= 0.5) {
            return Err(Error::InvalidArgument(format!(
                "fractional Doppler {doppler_frac} outside (-1/2, 1/2]"
            )));
        }
        if !(gain.re.is_finite() && gain.im.is_finite()) {
            return Err(Error::NonFinite("path gain"));
        }
        Ok(Self {
            gain,
            delay,
            doppler_int,
            doppler_frac,
        })
    }

    /// Integer-Doppler path.
    pub fn integer(gain: Complex64, delay: usize, doppler_int: i64) -> Self {
        Self {
            gain,
            delay,
            doppler_int,
            doppler_frac: 0.0,
        }
    }

    pub fn doppler(&self) -> f64 {
        self.doppler_int as f64 + self.doppler_frac
    }

    pub fn has_fractional_doppler(&self) -> bool {
        self.doppler_frac != 0.0
    }
}

/// Support bounds the realization was drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChannelStats {
    pub paths: usize,
    pub l_max: usize,
    pub alpha_max: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    paths: Vec<PathSpec>,
    stats: ChannelStats,
}

impl ChannelRealization {
    pub fn new(paths: Vec<PathSpec>, l_max: usize, alpha_max: usize) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidArgument("channel needs at least one path".into()));
        }
        for p in &paths {
            if p.delay > l_max {
                return Err(Error::InvalidArgument(format!(
                    "delay {} exceeds l_max {l_max}",
                    p.delay
                )));
            }
            if p.doppler_int.unsigned_abs() as usize > alpha_max {
                return Err(Error::InvalidArgument(format!(
                    "Doppler {} exceeds alpha_max {alpha_max}",
                    p.doppler_int
                )));
            }
        }
        let stats = ChannelStats {
            paths: paths.len(),
            l_max,
            alpha_max,
        };
        Ok(Self { paths, stats })
    }

    /// Single unit-gain path, handy for degenerate checks.
    pub fn single(delay: usize, doppler_int: i64) -> Self {
        let path = PathSpec::integer(Complex64::new(1.0, 0.0), delay, doppler_int);
        Self {
            paths: vec![path],
            stats: ChannelStats {
                paths: 1,
                l_max: delay,
                alpha_max: doppler_int.unsigned_abs() as usize,
            },
        }
    }

    pub fn paths(&self) -> &[PathSpec] {
        &self.paths
    }

    pub fn stats(&self) -> ChannelStats {
        self.stats
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn gains(&self) -> Vec<Complex64> {
        self.paths.iter().map(|p| p.gain).collect()
    }

    pub fn is_integer_doppler(&self) -> bool {
        self.paths.iter().all(|p| !p.has_fractional_doppler())
    }

    /// Same geometry with different gains.
    pub fn with_gains(&self, gains: &[Complex64]) -> Result<Self> {
        if gains.len() != self.paths.len() {
            return Err(Error::LengthMismatch {
                expected: self.paths.len(),
                actual: gains.len(),
            });
        }
        let mut out = self.clone();
        for (p, g) in out.paths.iter_mut().zip(gains) {
            p.gain = *g;
        }
        Ok(out)
    }

    /// Line-based record: `P l_max alpha_max`, then `re im delay alpha beta`
    /// per path. Floats use the shortest round-trip representation.
    pub fn to_record(&self) -> String {
        let mut out = format!(
            "{} {} {}\n",
            self.stats.paths, self.stats.l_max, self.stats.alpha_max
        );
        for p in &self.paths {
            let _ = writeln!(
                out,
                "{:e} {:e} {} {} {:e}",
                p.gain.re, p.gain.im, p.delay, p.doppler_int, p.doppler_frac
            );
        }
        out
    }

    /// Parses [`to_record`](Self::to_record) output. A header with only `P`
    /// is accepted; the bounds are then taken from the paths themselves.
    pub fn from_record(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty record".into()))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header token {t:?}"))))
            .collect::<Result<_>>()?;
        let count = *head.first().ok_or_else(|| Error::Parse("missing path count".into()))?;
        let mut paths = Vec::with_capacity(count);
        for _ in 0..count {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("record ends before all paths".into()))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(Error::Parse(format!("expected 5 fields, got {line:?}")));
            }
            let pf = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad float {s:?}")));
            let re = pf(f[0])?;
            let im = pf(f[1])?;
            let delay = f[2].parse().map_err(|_| Error::Parse(format!("bad delay {:?}", f[2])))?;
            let alpha = f[3].parse().map_err(|_| Error::Parse(format!("bad Doppler {:?}", f[3])))?;
            let beta = pf(f[4])?;
            paths.push(PathSpec::new(Complex64::new(re, im), delay, alpha, beta)?);
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing lines after paths".into()));
        }
        let (l_max, alpha_max) = match head.as_slice() {
            [_, l, a] => (*l, *a),
            [_] => (
                paths.iter().map(|p| p.delay).max().unwrap_or(0),
                paths.iter().map(|p| p.doppler_int.unsigned_abs() as usize).max().unwrap_or(0),
            ),
            _ => return Err(Error::Parse(format!("bad header {header:?}"))),
        };
        Self::new(paths, l_max, alpha_max)
    }
}

/// Knobs for [`sample_channel_with`].
#[derive(Clone, Copy, Debug, Default)]
pub struct SamplerOptions {
    /// Permit two paths with the same `(delay, Doppler)` pair.
    pub allow_collisions: bool,
}

/// Circular complex Gaussian with total variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Rayleigh realization with `P` separable paths: gains `CN(0, 1/P)`, delays
/// uniform on `0..=l_max`, integer Dopplers uniform on `-alpha_max..=alpha_max`.
pub fn sample_channel<R: Rng + ?Sized>(
    p: usize,
    l_max: usize,
    alpha_max: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    sample_channel_with(p, l_max, alpha_max, SamplerOptions::default(), rng)
}

pub fn sample_channel_with<R: Rng + ?Sized>(
    p: usize,
    l_max: usize,
    alpha_max: usize,
    opts: SamplerOptions,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if p == 0 {
        return Err(Error::InvalidArgument("number of paths must be positive".into()));
    }
    let support = (l_max + 1) * (2 * alpha_max + 1);
    if !opts.allow_collisions && p > support {
        return Err(Error::InvalidArgument(format!(
            "{p} distinct paths requested but only {support} delay-Doppler bins exist"
        )));
    }
    let a = alpha_max as i64;
    let mut seen = HashSet::with_capacity(p);
    let mut geometry = Vec::with_capacity(p);
    while geometry.len() < p {
        let l = rng.random_range(0..=l_max);
        let alpha = rng.random_range(-a..=a);
        if opts.allow_collisions || seen.insert((l, alpha)) {
            geometry.push((l, alpha));
        }
    }
    let var = 1.0 / p as f64;
    let paths = geometry
        .into_iter()
        .map(|(l, alpha)| PathSpec::integer(complex_gaussian(rng, var), l, alpha))
        .collect();
    ChannelRealization::new(paths, l_max, alpha_max)
}

fn doppler_phases(doppler: f64, n: usize) -> impl Iterator<Item = Complex64> {
    (0..n).map(move |k| Complex64::from_polar(1.0, -2.0 * PI * doppler * k as f64 / n as f64))
}

/// `H̃ = Δ(ν) Π^l`: row `k` has `exp(-j2πνk/N)` at column `(k - l) mod N`.
pub fn time_subchannel(path: &PathSpec, n: usize) -> Result<CMatrix> {
    if path.delay >= n {
        return Err(Error::InvalidArgument(format!(
            "delay {} must be below frame length {n}",
            path.delay
        )));
    }
    let mut h = CMatrix::zeros(n, n);
    for (k, ph) in doppler_phases(path.doppler(), n).enumerate() {
        h[(k, (k + n - path.delay) % n)] = ph;
    }
    Ok(h)
}

fn check_delays(chan: &ChannelRealization, n: usize) -> Result<()> {
    match chan.paths().iter().find(|p| p.delay >= n) {
        Some(p) => Err(Error::InvalidArgument(format!(
            "delay {} must be below frame length {n}",
            p.delay
        ))),
        None => Ok(()),
    }
}

/// Adds `gain · Δ(ν) Π^l s` into `out`.
fn accumulate_path(path: &PathSpec, gain: Complex64, s: &[Complex64], out: &mut [Complex64]) {
    let n = s.len();
    for (k, ph) in doppler_phases(path.doppler(), n).enumerate() {
        out[k] += gain * ph * s[(k + n - path.delay) % n];
    }
}

/// `H̃ s` without noise.
pub fn apply_channel_noiseless(s: &[Complex64], chan: &ChannelRealization) -> Result<Vec<Complex64>> {
    check_delays(chan, s.len())?;
    let mut d = vec![Complex64::zero(); s.len()];
    for p in chan.paths() {
        accumulate_path(p, p.gain, s, &mut d);
    }
    Ok(d)
}

/// `d = H̃ s + v` with `v ~ CN(0, N0 I)`.
///
/// A unit-variance noise vector is always drawn and then scaled, so the number
/// of random draws does not depend on `N0`.
pub fn apply_channel<R: Rng + ?Sized>(
    s: &TimeFrame,
    chan: &ChannelRealization,
    n0: f64,
    rng: &mut R,
) -> Result<TimeFrame> {
    let noise: Vec<Complex64> = (0..s.len()).map(|_| complex_gaussian(rng, 1.0)).collect();
    apply_channel_with_noise(s, chan, n0, &noise)
}

/// Like [`apply_channel`] with caller-supplied unit-variance noise.
pub fn apply_channel_with_noise(
    s: &TimeFrame,
    chan: &ChannelRealization,
    n0: f64,
    unit_noise: &[Complex64],
) -> Result<TimeFrame> {
    if !(n0 >= 0.0) || !n0.is_finite() {
        return Err(Error::InvalidArgument(format!("noise power {n0} must be >= 0")));
    }
    if unit_noise.len() != s.len() {
        return Err(Error::LengthMismatch {
            expected: s.len(),
            actual: unit_noise.len(),
        });
    }
    let mut d = apply_channel_noiseless(s.as_slice(), chan)?;
    let sigma = n0.sqrt();
    for (v, w) in d.iter_mut().zip(unit_noise) {
        *v += w * sigma;
    }
    TimeFrame::new(d)
}

/// DAFT-domain channel: dense `H_eff` plus the per-path index indicators.
#[derive(Clone, Debug)]
pub struct EffectiveChannel {
    pub matrix: CMatrix,
    /// `loc_i` per path, present when every path has integer Doppler and
    /// `2N c1` is an integer.
    pub indicators: Option<Vec<usize>>,
    /// Unit-gain `H_i` per path, when requested.
    pub per_path: Option<Vec<CMatrix>>,
}

impl EffectiveChannel {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// `H_eff x`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let v = nalgebra::DVector::from_column_slice(x);
        (&self.matrix * v).as_slice().to_vec()
    }
}

/// `loc = (alpha + 2N c1 · l) mod N`; row `m` of `H_i` is nonzero only at
/// column `(m + loc) mod N`.
pub fn index_indicator(path: &PathSpec, cfg: &AfdmConfig) -> Result<usize> {
    let k = cfg.two_n_c1().ok_or_else(|| {
        Error::InvalidArgument(format!("2N c1 = {} is not an integer", cfg.c1() * 2 * cfg.n() as i64))
    })?;
    let n = cfg.n() as i64;
    Ok((path.doppler_int + k * path.delay as i64).rem_euclid(n) as usize)
}

/// Builds `H_eff = Σ h_i A H̃_i Aᴴ` column by column with the fast transform.
pub fn effective_channel(chan: &ChannelRealization, cfg: &AfdmConfig) -> Result<EffectiveChannel> {
    build_effective(chan, cfg, false)
}

/// [`effective_channel`] that also keeps every unit-gain `H_i`.
pub fn effective_channel_with_paths(
    chan: &ChannelRealization,
    cfg: &AfdmConfig,
) -> Result<EffectiveChannel> {
    build_effective(chan, cfg, true)
}

fn build_effective(chan: &ChannelRealization, cfg: &AfdmConfig, keep: bool) -> Result<EffectiveChannel> {
    let n = cfg.n();
    check_delays(chan, n)?;
    let t = DaftTransform::new(cfg);
    let paths = chan.paths();
    let mut heff = CMatrix::zeros(n, n);
    let mut per_path = keep.then(|| vec![CMatrix::zeros(n, n); paths.len()]);
    let mut col = vec![Complex64::zero(); n];
    let mut work = vec![Complex64::zero(); n];
    for q in 0..n {
        col.iter_mut().for_each(|v| *v = Complex64::zero());
        col[q] = Complex64::new(1.0, 0.0);
        t.inverse_in_place(&mut col);
        if let Some(hs) = per_path.as_mut() {
            for (p, h) in paths.iter().zip(hs.iter_mut()) {
                work.iter_mut().for_each(|v| *v = Complex64::zero());
                accumulate_path(p, Complex64::new(1.0, 0.0), &col, &mut work);
                t.forward_in_place(&mut work);
                for (r, v) in work.iter().enumerate() {
                    h[(r, q)] = *v;
                    heff[(r, q)] += p.gain * v;
                }
            }
        } else {
            work.iter_mut().for_each(|v| *v = Complex64::zero());
            for p in paths {
                accumulate_path(p, p.gain, &col, &mut work);
            }
            t.forward_in_place(&mut work);
            heff.column_mut(q).copy_from_slice(&work);
        }
    }
    let indicators = if chan.is_integer_doppler() && cfg.two_n_c1().is_some() {
        Some(
            paths
                .iter()
                .map(|p| index_indicator(p, cfg))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(EffectiveChannel {
        matrix: heff,
        indicators,
        per_path,
    })
}

/// One path of `H_eff` in sparse form: row `r` holds `gains[r]` at column
/// `(r + indicator) mod N`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathTaps {
    pub indicator: usize,
    pub gains: Vec<Complex64>,
}

/// Row gains of every `h_i A H̃_i Aᴴ` without forming `H_eff`.
///
/// Each `H_i` has one nonzero per row, so applying it to the all-ones vector
/// returns exactly those entries; this costs one transform pair per path.
pub fn effective_taps(chan: &ChannelRealization, cfg: &AfdmConfig) -> Result<Vec<PathTaps>> {
    let n = cfg.n();
    check_delays(chan, n)?;
    if !chan.is_integer_doppler() || cfg.two_n_c1().is_none() {
        return Err(Error::FractionalDoppler);
    }
    let t = DaftTransform::new(cfg);
    let mut ones = vec![Complex64::new(1.0, 0.0); n];
    t.inverse_in_place(&mut ones);
    chan.paths()
        .iter()
        .map(|p| {
            let mut gains = vec![Complex64::zero(); n];
            accumulate_path(p, p.gain, &ones, &mut gains);
            t.forward_in_place(&mut gains);
            Ok(PathTaps {
                indicator: index_indicator(p, cfg)?,
                gains,
            })
        })
        .collect()
}
