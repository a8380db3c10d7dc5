//! Discrete affine Fourier transform (DAFT) and the AFDM modem built on it.
//!
//! The DAFT matrix is `A = Λ(c2) · F · Λ(c1)` with `F` the unitary DFT and
//! `Λ(c) = diag(exp(-j2π c n²))`. Modulation is `s = Aᴴ x`, demodulation
//! is `y = A d`. Everything is in normalized units: delays in samples and
//! Doppler in subcarrier spacings.
//!
//! `c1` is held as an exact rational. Chirp phases `c1·n²` are reduced
//! modulo one in integer arithmetic so large `n` does not leak rounding
//! into the phase.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Fractional part of the golden ratio, the irrational seed of the default `c2`.
pub const GOLDEN_FRACTION: f64 = 0.618_033_988_749_894_9;

/// How the chirp-periodic prefix is represented.
///
/// Only the implicit form exists: the channel acts circularly on the frame,
/// which is what a long-enough prefix buys, so no prefix samples are ever
/// generated or stripped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PrefixModel {
    #[default]
    ImplicitCircular,
}

/// Frame length and chirp parameters that define one DAFT pair.
#[derive(Clone, Debug, PartialEq)]
pub struct AfdmConfig {
    n: usize,
    c1: Rational64,
    c2: f64,
    k_nu: usize,
    prefix: PrefixModel,
}

impl AfdmConfig {
    pub fn new(n: usize, c1: Rational64, c2: f64, k_nu: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!("frame length {n} < 2")));
        }
        if c1 < Rational64::zero() {
            return Err(Error::InvalidConfig(format!("c1 = {c1} is negative")));
        }
        if !c2.is_finite() {
            return Err(Error::InvalidConfig("c2 is not finite".into()));
        }
        Ok(Self {
            n,
            c1,
            c2,
            k_nu,
            prefix: PrefixModel::ImplicitCircular,
        })
    }

    /// Configuration achieving full diversity for channels with integer Doppler
    /// up to `alpha_max`: `c1 = (2(alpha_max + k_nu) + 1) / 2N` and the default
    /// irrational `c2`.
    pub fn full_diversity(n: usize, alpha_max: usize, k_nu: usize) -> Result<Self> {
        let c1 = default_c1(n, alpha_max, k_nu)?;
        Self::new(n, c1, default_c2(n), k_nu)
    }

    /// `c1 = c2 = 0`, which turns the DAFT into the plain DFT (OFDM).
    pub fn ofdm(n: usize) -> Result<Self> {
        Self::new(n, Rational64::zero(), 0.0, 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c1(&self) -> Rational64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn k_nu(&self) -> usize {
        self.k_nu
    }

    pub fn prefix(&self) -> PrefixModel {
        self.prefix
    }

    pub fn with_c2(mut self, c2: f64) -> Result<Self> {
        if !c2.is_finite() {
            return Err(Error::InvalidConfig("c2 is not finite".into()));
        }
        self.c2 = c2;
        Ok(self)
    }

    /// `2N·c1` when it is an integer, which is the condition for the DAFT-domain
    /// path responses to be pure circular shifts.
    pub fn two_n_c1(&self) -> Option<i64> {
        let scaled = self.c1 * Rational64::from_integer(2 * self.n as i64);
        scaled.is_integer().then(|| scaled.to_integer())
    }
}

impl fmt::Display for AfdmConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "N={} c1={} c2={:e} k_nu={}",
            self.n, self.c1, self.c2, self.k_nu
        )
    }
}

/// `(2(alpha_max + k_nu) + 1) / (2N)` as an exact rational.
pub fn default_c1(n: usize, alpha_max: usize, k_nu: usize) -> Result<Rational64> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("frame length {n} < 2")));
    }
    let num = 2 * (alpha_max + k_nu) as i64 + 1;
    Ok(Rational64::new(num, 2 * n as i64))
}

/// Default second chirp parameter: the golden-ratio fraction scaled by `1/2N`.
pub fn default_c2(n: usize) -> f64 {
    GOLDEN_FRACTION / (2.0 * n as f64)
}

/// Diagonal of `Λ(c1)` for an exact rational slope.
pub(crate) fn rational_chirp(c: Rational64, n: usize) -> Vec<Complex64> {
    let num = *c.numer() as i128;
    let den = *c.denom() as i128;
    (0..n)
        .map(|k| {
            let k2 = (k as i128) * (k as i128);
            let r = (num * k2).rem_euclid(den);
            Complex64::from_polar(1.0, -2.0 * PI * (r as f64) / (den as f64))
        })
        .collect()
}

/// Diagonal of `Λ(c2)` for a real parameter.
pub(crate) fn real_chirp(c: f64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let x = c * (k * k) as f64;
            Complex64::from_polar(1.0, -2.0 * PI * (x - x.floor()))
        })
        .collect()
}

fn check_finite(values: &[Complex64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

macro_rules! frame_type {
    ($(#[$m:meta])* $name:ident, $what:literal) => {
        $(#[$m])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name(Vec<Complex64>);

        impl $name {
            pub fn new(values: Vec<Complex64>) -> Result<Self> {
                check_finite(&values, $what)?;
                Ok(Self(values))
            }

            pub fn zeros(n: usize) -> Self {
                Self(vec![Complex64::zero(); n])
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn as_slice(&self) -> &[Complex64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<Complex64> {
                self.0
            }

            pub fn norm(&self) -> f64 {
                self.0.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
            }
        }

        impl std::ops::Index<usize> for $name {
            type Output = Complex64;
            fn index(&self, i: usize) -> &Complex64 {
                &self.0[i]
            }
        }
    };
}

frame_type!(
    /// DAFT-domain symbols (transmitted `x` or received `y`).
    DaftFrame,
    "DAFT frame"
);
frame_type!(
    /// Time-domain samples (transmitted `s` or received `d`).
    TimeFrame,
    "time frame"
);

/// Precomputed chirps and FFT plans for one configuration.
///
/// The fast path runs `Λ(c1)`, an FFT and `Λ(c2)` in `O(N log N)`; the dense
/// [`daft_matrix`] is the reference it is tested against.
#[derive(Clone)]
pub struct DaftTransform {
    cfg: AfdmConfig,
    chirp1: Vec<Complex64>,
    chirp2: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl fmt::Debug for DaftTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DaftTransform").field("cfg", &self.cfg).finish()
    }
}

impl DaftTransform {
    pub fn new(cfg: &AfdmConfig) -> Self {
        let n = cfg.n();
        let mut planner = FftPlanner::new();
        Self {
            cfg: cfg.clone(),
            chirp1: rational_chirp(cfg.c1(), n),
            chirp2: real_chirp(cfg.c2(), n),
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn config(&self) -> &AfdmConfig {
        &self.cfg
    }

    pub fn n(&self) -> usize {
        self.cfg.n()
    }

    /// `A·d` in place.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n());
        for (v, c) in buf.iter_mut().zip(&self.chirp1) {
            *v *= c;
        }
        self.fft.process(buf);
        for (v, c) in buf.iter_mut().zip(&self.chirp2) {
            *v *= c * self.scale;
        }
    }

    /// `Aᴴ·x` in place.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n());
        for (v, c) in buf.iter_mut().zip(&self.chirp2) {
            *v *= c.conj();
        }
        self.ifft.process(buf);
        for (v, c) in buf.iter_mut().zip(&self.chirp1) {
            *v *= c.conj() * self.scale;
        }
    }

    pub fn modulate(&self, x: &DaftFrame) -> Result<TimeFrame> {
        self.check_len(x.len())?;
        let mut buf = x.as_slice().to_vec();
        self.inverse_in_place(&mut buf);
        Ok(TimeFrame(buf))
    }

    pub fn demodulate(&self, d: &TimeFrame) -> Result<DaftFrame> {
        self.check_len(d.len())?;
        let mut buf = d.as_slice().to_vec();
        self.forward_in_place(&mut buf);
        Ok(DaftFrame(buf))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                actual: len,
            });
        }
        Ok(())
    }
}

/// Dense DAFT matrix `A = Λ(c2) F Λ(c1)`, built entrywise.
pub fn daft_matrix(cfg: &AfdmConfig) -> CMatrix {
    let n = cfg.n();
    let l1 = rational_chirp(cfg.c1(), n);
    let l2 = real_chirp(cfg.c2(), n);
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |m, k| {
        // m·k mod N keeps the DFT phase exact for large frames.
        let mk = (m * k) % n;
        let f = Complex64::from_polar(scale, -2.0 * PI * mk as f64 / n as f64);
        l2[m] * f * l1[k]
    })
}

/// `s = Aᴴ x`.
pub fn modulate(x: &DaftFrame, cfg: &AfdmConfig) -> Result<TimeFrame> {
    DaftTransform::new(cfg).modulate(x)
}

/// `y = A d`.
pub fn demodulate(d: &TimeFrame, cfg: &AfdmConfig) -> Result<DaftFrame> {
    DaftTransform::new(cfg).demodulate(d)
}

/// Dense reference for [`modulate`].
pub fn modulate_dense(x: &DaftFrame, cfg: &AfdmConfig) -> Result<TimeFrame> {
    let a = daft_matrix(cfg);
    if x.len() != cfg.n() {
        return Err(Error::LengthMismatch {
            expected: cfg.n(),
            actual: x.len(),
        });
    }
    let v = nalgebra::DVector::from_column_slice(x.as_slice());
    let s = a.adjoint() * v;
    Ok(TimeFrame(s.as_slice().to_vec()))
}

/// Dense reference for [`demodulate`].
pub fn demodulate_dense(d: &TimeFrame, cfg: &AfdmConfig) -> Result<DaftFrame> {
    let a = daft_matrix(cfg);
    if d.len() != cfg.n() {
        return Err(Error::LengthMismatch {
            expected: cfg.n(),
            actual: d.len(),
        });
    }
    let v = nalgebra::DVector::from_column_slice(d.as_slice());
    let y = a * v;
    Ok(DaftFrame(y.as_slice().to_vec()))
}

/// Chirp subcarrier `φ_m[n] = exp(j2π(c1 n² + c2 m² + n m / N)) / √N`.
pub fn chirp_subcarrier(cfg: &AfdmConfig, m: usize) -> Vec<Complex64> {
    let n = cfg.n();
    let c1 = cfg.c1().to_f64().unwrap_or(0.0);
    (0..n)
        .map(|k| {
            let phase = c1 * (k * k) as f64 + cfg.c2() * (m * m) as f64 + (k * m) as f64 / n as f64;
            Complex64::from_polar(1.0 / (n as f64).sqrt(), 2.0 * PI * phase)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_frame(n: usize, rng: &mut impl Rng) -> DaftFrame {
        DaftFrame::new(
            (0..n)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect(),
        )
        .unwrap()
    }

    fn unitarity_defect(a: &CMatrix) -> f64 {
        let n = a.nrows();
        (a * a.adjoint() - CMatrix::identity(n, n)).norm()
    }

    #[test]
    fn default_c1_values() {
        assert_eq!(default_c1(128, 3, 0).unwrap(), Rational64::new(7, 256));
        assert_eq!(default_c1(8, 1, 0).unwrap(), Rational64::new(3, 16));
        assert_eq!(default_c1(2, 0, 0).unwrap(), Rational64::new(1, 4));
        assert!(default_c1(0, 0, 0).is_err());
        assert!(default_c1(1, 0, 0).is_err());
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(AfdmConfig::new(1, Rational64::zero(), 0.0, 0).is_err());
        assert!(AfdmConfig::new(4, Rational64::new(-1, 8), 0.0, 0).is_err());
        assert!(AfdmConfig::new(4, Rational64::zero(), f64::NAN, 0).is_err());
        let cfg = AfdmConfig::full_diversity(16, 3, 0).unwrap();
        assert_eq!(cfg.two_n_c1(), Some(7));
        assert_eq!(cfg.prefix(), PrefixModel::ImplicitCircular);
    }

    #[test]
    fn daft_matrix_is_unitary() {
        for n in [2, 3, 8, 17, 32, 64] {
            for alpha in [0, 1, 3] {
                let cfg = AfdmConfig::full_diversity(n, alpha, 0).unwrap();
                assert!(unitarity_defect(&daft_matrix(&cfg)) < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn zero_chirps_give_dft() {
        let cfg = AfdmConfig::ofdm(8).unwrap();
        let a = daft_matrix(&cfg);
        for m in 0..8 {
            for k in 0..8 {
                let f = Complex64::from_polar(1.0 / 8f64.sqrt(), -2.0 * PI * (m * k) as f64 / 8.0);
                assert!((a[(m, k)] - f).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hand_expanded_four_point_case() {
        // Λ(1/8) on n² = 0, 1, 4, 9 gives phases 0, -π/4, -π, -9π/4.
        let cfg = AfdmConfig::new(4, Rational64::new(1, 8), 0.0, 0).unwrap();
        let a = daft_matrix(&cfg);
        let diag = [0.0, -PI / 4.0, -PI, -9.0 * PI / 4.0];
        for m in 0..4 {
            for k in 0..4 {
                let f = Complex64::from_polar(0.5, -2.0 * PI * (m * k) as f64 / 4.0);
                let expected = f * Complex64::from_polar(1.0, diag[k]);
                assert!((a[(m, k)] - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_impulse_modulates_to_chirp_subcarrier() {
        let cfg = AfdmConfig::full_diversity(16, 2, 0).unwrap();
        for m in [0, 1, 5, 15] {
            let mut x = vec![Complex64::zero(); 16];
            x[m] = Complex64::new(1.0, 0.0);
            let s = modulate(&DaftFrame::new(x).unwrap(), &cfg).unwrap();
            let phi = chirp_subcarrier(&cfg, m);
            for (a, b) in s.as_slice().iter().zip(&phi) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn fast_path_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2, 5, 16, 128] {
            let cfg = AfdmConfig::full_diversity(n, 1, 1).unwrap();
            let x = random_frame(n, &mut rng);
            let fast = modulate(&x, &cfg).unwrap();
            let dense = modulate_dense(&x, &cfg).unwrap();
            for (a, b) in fast.as_slice().iter().zip(dense.as_slice()) {
                assert!((a - b).norm() < 1e-9);
            }
            let d = TimeFrame::new(x.as_slice().to_vec()).unwrap();
            let fast = demodulate(&d, &cfg).unwrap();
            let dense = demodulate_dense(&d, &cfg).unwrap();
            for (a, b) in fast.as_slice().iter().zip(dense.as_slice()) {
                assert!((a - b).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn zeros_and_impulse_columns() {
        let cfg = AfdmConfig::full_diversity(8, 1, 0).unwrap();
        let s = modulate(&DaftFrame::zeros(8), &cfg).unwrap();
        assert!(s.norm() == 0.0);

        let a = daft_matrix(&cfg);
        let first_col: Vec<Complex64> = a.adjoint().column(0).iter().copied().collect();
        let y = demodulate(&TimeFrame::new(first_col).unwrap(), &cfg).unwrap();
        assert!((y[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(y.as_slice()[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let cfg = AfdmConfig::full_diversity(8, 1, 0).unwrap();
        assert_eq!(
            modulate(&DaftFrame::zeros(7), &cfg),
            Err(Error::LengthMismatch {
                expected: 8,
                actual: 7
            })
        );
        assert!(demodulate(&TimeFrame::zeros(9), &cfg).is_err());
    }

    #[test]
    fn non_finite_frames_are_rejected() {
        assert!(DaftFrame::new(vec![Complex64::new(f64::INFINITY, 0.0)]).is_err());
    }

    #[test]
    fn white_noise_keeps_its_variance() {
        use rand_distr::{Distribution, StandardNormal};
        let n = 256;
        let cfg = AfdmConfig::full_diversity(n, 3, 0).unwrap();
        let t = DaftTransform::new(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (mut pin, mut pout) = (0.0, 0.0);
        for _ in 0..200 {
            let d: Vec<Complex64> = (0..n)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im) * 0.5f64.sqrt()
                })
                .collect();
            pin += d.iter().map(|v| v.norm_sqr()).sum::<f64>();
            let y = t.demodulate(&TimeFrame::new(d).unwrap()).unwrap();
            pout += y.as_slice().iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        let var_in = pin / (200.0 * n as f64);
        let var_out = pout / (200.0 * n as f64);
        assert!((var_in - var_out).abs() < 1e-9);
        assert!((var_out - 1.0).abs() < 0.02);
    }
}
