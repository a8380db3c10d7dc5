//! Pairwise error probability and coding gain of AFDM.
//!
//! For a codeword difference `e = x - x'` the received difference is
//! `Φ(e) h` with `Φ(e) = [H_1 e, …, H_P e]`. The eigenvalues of
//! `Ω = Φᴴ Φ` drive every bound here: the conditional PEP
//! `Q(sqrt(‖Φh‖² / 2N0))`, its Chernoff bound, the product bound, the
//! high-SNR Rayleigh expression and the conditional coding gain
//! `(Π λ_i)^(1/P) / P`.

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use num_traits::Zero;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{sample_channel, ChannelRealization, PathSpec};
use crate::daft::{AfdmConfig, CMatrix, DaftTransform};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Eigenvalues this far below zero are treated as rounding noise.
pub const NEGATIVE_CLIP: f64 = 1e-9;
/// Eigenvalues below `RANK_TOL · λ_1` do not count towards the rank.
pub const RANK_TOL: f64 = 1e-8;

/// `e = x - x'` with its squared Euclidean distance.
#[derive(Clone, Debug, PartialEq)]
pub struct CodewordDifference {
    e: Vec<Complex64>,
    d_e2: f64,
}

impl CodewordDifference {
    pub fn new(e: Vec<Complex64>) -> Result<Self> {
        if e.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("codeword difference"));
        }
        let d_e2: f64 = e.iter().map(|v| v.norm_sqr()).sum();
        if d_e2 == 0.0 {
            return Err(Error::InvalidArgument("codeword difference is zero".into()));
        }
        Ok(Self { e, d_e2 })
    }

    /// BPSK-style difference: `±2` at `d_e2 / 4` distinct random positions.
    pub fn random_bpsk<R: Rng + ?Sized>(n: usize, d_e2: usize, rng: &mut R) -> Result<Self> {
        if d_e2 == 0 || !d_e2.is_multiple_of(4) || d_e2 / 4 > n {
            return Err(Error::InvalidArgument(format!(
                "squared distance {d_e2} is not 4k with 0 < k <= {n}"
            )));
        }
        let mut e = vec![Complex64::zero(); n];
        for pos in sample(rng, n, d_e2 / 4) {
            let sign = if rng.random::<bool>() { 2.0 } else { -2.0 };
            e[pos] = Complex64::new(sign, 0.0);
        }
        Self::new(e)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.e
    }

    pub fn d_e2(&self) -> f64 {
        self.d_e2
    }
}

/// Descending, nonnegative eigenvalues of `Ω` plus the rotation `h̃ = U h`.
#[derive(Clone, Debug)]
pub struct EigenSpectrum {
    lambda: Vec<f64>,
    rank: usize,
    // Columns are eigenvectors of Ω, ordered like `lambda`.
    vectors: CMatrix,
}

impl EigenSpectrum {
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn trace(&self) -> f64 {
        self.lambda.iter().sum()
    }

    /// `h̃ = U h`, the gains in the eigenbasis of `Ω`.
    pub fn rotate(&self, h: &[Complex64]) -> Result<Vec<Complex64>> {
        if h.len() != self.lambda.len() {
            return Err(Error::LengthMismatch {
                expected: self.lambda.len(),
                actual: h.len(),
            });
        }
        let v = DVector::from_column_slice(h);
        Ok((self.vectors.adjoint() * v).as_slice().to_vec())
    }
}

/// Applies `H_i = A H̃_i Aᴴ` of single paths through the fast transform.
pub struct PathResponder {
    transform: DaftTransform,
}

impl PathResponder {
    pub fn new(cfg: &AfdmConfig) -> Self {
        Self {
            transform: DaftTransform::new(cfg),
        }
    }

    pub fn n(&self) -> usize {
        self.transform.n()
    }

    /// `Φ(e)` as an `N × P` matrix (unit gains; path gains are ignored).
    pub fn codeword_matrix(&self, e: &[Complex64], paths: &[PathSpec]) -> Result<CMatrix> {
        let n = self.n();
        if e.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: e.len(),
            });
        }
        if let Some(p) = paths.iter().find(|p| p.delay >= n) {
            return Err(Error::InvalidArgument(format!(
                "delay {} must be below frame length {n}",
                p.delay
            )));
        }
        let mut s = e.to_vec();
        self.transform.inverse_in_place(&mut s);
        let mut phi = CMatrix::zeros(n, paths.len());
        let mut work = vec![Complex64::zero(); n];
        for (col, p) in paths.iter().enumerate() {
            let nu = p.doppler();
            for (k, w) in work.iter_mut().enumerate() {
                let ph = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * nu * k as f64 / n as f64);
                *w = ph * s[(k + n - p.delay) % n];
            }
            self.transform.forward_in_place(&mut work);
            phi.column_mut(col).copy_from_slice(&work);
        }
        Ok(phi)
    }
}

/// `Φ_{τ,κ}(e) = [H_1 e, …, H_P e]` for the delay-Doppler geometry of `chan`.
pub fn codeword_matrix(e: &[Complex64], chan: &ChannelRealization, cfg: &AfdmConfig) -> Result<CMatrix> {
    PathResponder::new(cfg).codeword_matrix(e, chan.paths())
}

/// Eigen-decomposition of `Ω = Φᴴ Φ`.
pub fn diff_spectrum(phi: &CMatrix) -> Result<EigenSpectrum> {
    let p = phi.ncols();
    if p > phi.nrows() {
        return Err(Error::InvalidArgument(format!(
            "{p} paths exceed frame length {}",
            phi.nrows()
        )));
    }
    if phi.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("codeword matrix"));
    }
    let omega = phi.adjoint() * phi;
    let eig = SymmetricEigen::new(omega);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = order.first().map(|&i| eig.eigenvalues[i]).unwrap_or(0.0);
    let floor = -NEGATIVE_CLIP * top.max(1.0);
    let mut lambda = Vec::with_capacity(p);
    let mut vectors = CMatrix::zeros(p, p);
    for (dst, &src) in order.iter().enumerate() {
        let v = eig.eigenvalues[src];
        if v < floor {
            return Err(Error::InvalidArgument(format!(
                "eigenvalue {v:e} of a Gram matrix is negative beyond rounding"
            )));
        }
        lambda.push(v.max(0.0));
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    let rank = lambda.iter().filter(|&&v| v > RANK_TOL * top).count();
    Ok(EigenSpectrum {
        lambda,
        rank,
        vectors,
    })
}

/// Gaussian tail `Q(x) = erfc(x / √2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn check_n0(n0: f64) -> Result<()> {
    if n0 > 0.0 && n0.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("noise power {n0} must be positive")))
    }
}

/// Exact conditional PEP `Q(sqrt(‖Φ(e) h‖² / 2N0))`.
pub fn conditional_pep(
    e: &CodewordDifference,
    h: &[Complex64],
    chan: &ChannelRealization,
    cfg: &AfdmConfig,
    n0: f64,
) -> Result<f64> {
    check_n0(n0)?;
    let phi = codeword_matrix(e.as_slice(), chan, cfg)?;
    conditional_pep_from_matrix(&phi, h, n0)
}

/// [`conditional_pep`] for an already computed `Φ(e)`.
pub fn conditional_pep_from_matrix(phi: &CMatrix, h: &[Complex64], n0: f64) -> Result<f64> {
    check_n0(n0)?;
    if h.len() != phi.ncols() {
        return Err(Error::LengthMismatch {
            expected: phi.ncols(),
            actual: h.len(),
        });
    }
    let energy = (phi * DVector::from_column_slice(h)).norm_squared();
    Ok(q_function((energy / (2.0 * n0)).sqrt()))
}

/// Upper bounds on the conditional PEP.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PepBounds {
    /// `exp(-Σ λ_i |h̃_i|² / 4N0)`.
    pub chernoff: f64,
    /// `Π 1 / (1 + λ_i |h̃_i|² / 4N0)`.
    pub product: f64,
    /// `[(1/4N0)^P Π λ_i / P]^-1`; `None` when any eigenvalue vanishes.
    pub high_snr: Option<f64>,
}

pub fn pep_bounds(spectrum: &EigenSpectrum, h_tilde: &[Complex64], n0: f64, p: usize) -> Result<PepBounds> {
    check_n0(n0)?;
    let lambda = spectrum.lambda();
    if h_tilde.len() != lambda.len() || p != lambda.len() {
        return Err(Error::LengthMismatch {
            expected: lambda.len(),
            actual: h_tilde.len().min(p),
        });
    }
    let snr = 1.0 / (4.0 * n0);
    let terms: Vec<f64> = lambda
        .iter()
        .zip(h_tilde)
        .map(|(l, h)| l * h.norm_sqr() * snr)
        .collect();
    let chernoff = (-terms.iter().sum::<f64>()).exp();
    let product = terms.iter().map(|t| 1.0 / (1.0 + t)).product();
    Ok(PepBounds {
        chernoff,
        product,
        high_snr: high_snr_expression(spectrum, n0, p).ok(),
    })
}

/// Rayleigh high-SNR expression `[(1/4N0)^P Π (λ_i / P)]^-1`.
pub fn high_snr_expression(spectrum: &EigenSpectrum, n0: f64, p: usize) -> Result<f64> {
    check_n0(n0)?;
    let lambda = spectrum.lambda();
    if lambda.iter().any(|&l| l <= 0.0) || lambda.len() != p {
        return Err(Error::RankDeficient {
            rank: spectrum.rank(),
            paths: p,
        });
    }
    let log: f64 = p as f64 * (1.0 / (4.0 * n0)).ln() + lambda.iter().map(|l| (l / p as f64).ln()).sum::<f64>();
    Ok((-log).exp())
}

/// `(Π λ_i)^(1/P) / P`; requires full rank.
pub fn conditional_coding_gain(spectrum: &EigenSpectrum, p: usize) -> Result<f64> {
    let lambda = spectrum.lambda();
    if p == 0 || lambda.len() != p {
        return Err(Error::LengthMismatch {
            expected: lambda.len(),
            actual: p,
        });
    }
    if spectrum.rank() < p || lambda.iter().any(|&l| l <= 0.0) {
        return Err(Error::RankDeficient {
            rank: spectrum.rank(),
            paths: p,
        });
    }
    let mean_log = lambda.iter().map(|l| l.ln()).sum::<f64>() / p as f64;
    Ok(mean_log.exp() / p as f64)
}

/// Monte Carlo mean of the conditional coding gain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl GainEstimate {
    pub fn mean_db(&self) -> f64 {
        10.0 * self.mean.log10()
    }
}

/// Average of [`conditional_coding_gain`] over random geometries and random
/// BPSK differences of squared distance `d_e2`.
///
/// Trial `t` draws from stream `t` of `seed`, so cells that differ only in
/// `d_e2` or `P` reuse the same random numbers and reruns are bit-identical.
pub fn average_coding_gain(
    d_e2: usize,
    p: usize,
    l_max: usize,
    alpha_max: usize,
    trials: usize,
    cfg: &AfdmConfig,
    seed: u64,
) -> Result<GainEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    if d_e2 == 0 || !d_e2.is_multiple_of(4) || d_e2 / 4 > cfg.n() {
        return Err(Error::InvalidArgument(format!(
            "squared distance {d_e2} is not 4k with 0 < k <= {}",
            cfg.n()
        )));
    }
    if l_max >= cfg.n() {
        return Err(Error::InvalidArgument(format!("l_max {l_max} does not fit the frame")));
    }
    let responder = PathResponder::new(cfg);
    let gains: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            let chan = sample_channel(p, l_max, alpha_max, &mut rng)?;
            let e = CodewordDifference::random_bpsk(cfg.n(), d_e2, &mut rng)?;
            let phi = responder.codeword_matrix(e.as_slice(), chan.paths())?;
            conditional_coding_gain(&diff_spectrum(&phi)?, p)
        })
        .collect::<Result<_>>()?;
    let n = gains.len() as f64;
    let mean = gains.iter().sum::<f64>() / n;
    let var = if gains.len() > 1 {
        gains.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(GainEstimate {
        mean,
        stderr: (var / n).sqrt(),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_gaussian, effective_channel_with_paths};
    use crate::rng::stream_rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Gaussian tail by composite Simpson integration of the density.
    fn q_by_quadrature(x: f64) -> f64 {
        let upper = x + 40.0;
        let steps = 200_000;
        let h = (upper - x) / steps as f64;
        let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = f(x) + f(upper);
        for k in 1..steps {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(x + k as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn q_function_matches_quadrature() {
        for x in [0.0, 0.5, std::f64::consts::SQRT_2, 3.0, 5.0] {
            let q = q_function(x);
            assert!((q - q_by_quadrature(x)).abs() < 1e-12 + 1e-9 * q, "x={x}");
        }
        assert!((q_function(2f64.sqrt()) - 0.0786496).abs() < 5e-8);
    }

    #[test]
    fn single_identity_path() {
        let cfg = AfdmConfig::full_diversity(8, 1, 0).unwrap();
        let e = vec![c(2.0, 0.0), c(0.0, 0.0), c(-2.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let phi = codeword_matrix(&e, &ChannelRealization::single(0, 0), &cfg).unwrap();
        assert_eq!(phi.ncols(), 1);
        for (a, b) in phi.column(0).iter().zip(&e) {
            assert!((a - b).norm() < 1e-12);
        }
        let spec = diff_spectrum(&phi).unwrap();
        assert!((spec.lambda()[0] - 9.0).abs() < 1e-10);
        assert!((conditional_coding_gain(&spec, 1).unwrap() - 9.0).abs() < 1e-10);
    }

    #[test]
    fn columns_have_norm_of_e_and_match_heff() {
        let cfg = AfdmConfig::full_diversity(32, 3, 0).unwrap();
        for t in 0..20 {
            let mut rng = stream_rng(21, t);
            let chan = sample_channel(3, 3, 3, &mut rng).unwrap();
            let e = CodewordDifference::random_bpsk(32, 24, &mut rng).unwrap();
            let phi = codeword_matrix(e.as_slice(), &chan, &cfg).unwrap();
            for col in phi.column_iter() {
                assert!((col.norm_squared() - e.d_e2()).abs() < 1e-10);
            }
            let eff = effective_channel_with_paths(&chan, &cfg).unwrap();
            let via_heff = eff.apply(e.as_slice());
            let via_phi = &phi * DVector::from_vec(chan.gains());
            for (a, b) in via_heff.iter().zip(via_phi.iter()) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn trace_identity_and_gain_ceiling() {
        let cfg = AfdmConfig::full_diversity(16, 2, 0).unwrap();
        for t in 0..200 {
            let mut rng = stream_rng(4, t);
            let p = 1 + (t as usize % 4);
            let chan = sample_channel(p, 2, 2, &mut rng).unwrap();
            let e = CodewordDifference::random_bpsk(16, 4 * (1 + t as usize % 16), &mut rng).unwrap();
            let spec = diff_spectrum(&codeword_matrix(e.as_slice(), &chan, &cfg).unwrap()).unwrap();
            assert!((spec.trace() - p as f64 * e.d_e2()).abs() < 1e-6);
            assert!(spec.lambda().windows(2).all(|w| w[0] >= w[1]));
            let gain = conditional_coding_gain(&spec, p).unwrap();
            assert!(gain <= e.d_e2() / p as f64 + 1e-9);
        }
    }

    #[test]
    fn equal_eigenvalues_give_the_ceiling() {
        // A single nonzero entry is moved to distinct positions by each path,
        // so Φ has orthogonal columns of norm 2.
        let cfg = AfdmConfig::full_diversity(16, 1, 0).unwrap();
        let mut e = vec![c(0.0, 0.0); 16];
        e[5] = c(2.0, 0.0);
        let chan = ChannelRealization::new(
            vec![
                PathSpec::integer(c(1.0, 0.0), 0, 0),
                PathSpec::integer(c(1.0, 0.0), 1, -1),
                PathSpec::integer(c(1.0, 0.0), 1, 1),
            ],
            1,
            1,
        )
        .unwrap();
        let spec = diff_spectrum(&codeword_matrix(&e, &chan, &cfg).unwrap()).unwrap();
        for l in spec.lambda() {
            assert!((l - 4.0).abs() < 1e-10);
        }
        assert!((conditional_coding_gain(&spec, 3).unwrap() - 4.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn rank_deficiency_is_signaled() {
        let cfg = AfdmConfig::full_diversity(8, 1, 0).unwrap();
        let p = PathSpec::integer(c(1.0, 0.0), 1, 1);
        let chan = ChannelRealization::new(vec![p, p], 1, 1).unwrap();
        let e = CodewordDifference::random_bpsk(8, 8, &mut stream_rng(1, 1)).unwrap();
        let spec = diff_spectrum(&codeword_matrix(e.as_slice(), &chan, &cfg).unwrap()).unwrap();
        assert_eq!(spec.rank(), 1);
        assert!(matches!(
            conditional_coding_gain(&spec, 2),
            Err(Error::RankDeficient { rank: 1, paths: 2 })
        ));
        let b = pep_bounds(&spec, &[c(0.3, 0.0), c(0.1, 0.2)], 0.1, 2).unwrap();
        assert!(b.high_snr.is_none());
    }

    #[test]
    fn pep_examples() {
        let cfg = AfdmConfig::full_diversity(8, 1, 0).unwrap();
        let chan = ChannelRealization::single(0, 0);
        let mut e = vec![c(0.0, 0.0); 8];
        e[3] = c(2.0, 0.0);
        let e = CodewordDifference::new(e).unwrap();
        let pep = conditional_pep(&e, &[c(1.0, 0.0)], &chan, &cfg, 1.0).unwrap();
        assert!((pep - q_function(2f64.sqrt())).abs() < 1e-14);
        assert_eq!(conditional_pep(&e, &[c(0.0, 0.0)], &chan, &cfg, 1.0).unwrap(), 0.5);
        assert!(conditional_pep(&e, &[c(1.0, 0.0)], &chan, &cfg, 0.0).is_err());

        let mut last = 1.0;
        for snr_db in [0.0, 3.0, 6.0, 9.0, 12.0] {
            let n0 = 10f64.powf(-snr_db / 10.0);
            let p = conditional_pep(&e, &[c(0.6, -0.2)], &chan, &cfg, n0).unwrap();
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn bounds_examples() {
        let phi = CMatrix::from_element(1, 1, c(2.0, 0.0));
        let spec = diff_spectrum(&phi).unwrap();
        let b = pep_bounds(&spec, &[c(0.0, 0.0)], 0.25, 1).unwrap();
        assert_eq!((b.chernoff, b.product), (1.0, 1.0));
        assert!((b.high_snr.unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn bound_chain_holds() {
        let cfg = AfdmConfig::full_diversity(16, 2, 0).unwrap();
        for t in 0..300 {
            let mut rng = stream_rng(77, t);
            let p = 1 + (t as usize % 3);
            let chan = sample_channel(p, 2, 2, &mut rng).unwrap();
            let e = CodewordDifference::random_bpsk(16, 4 * (1 + t as usize % 8), &mut rng).unwrap();
            let h: Vec<Complex64> = (0..p).map(|_| complex_gaussian(&mut rng, 1.0 / p as f64)).collect();
            let n0 = 10f64.powf(-((t % 25) as f64) / 10.0);
            let phi = codeword_matrix(e.as_slice(), &chan, &cfg).unwrap();
            let spec = diff_spectrum(&phi).unwrap();
            let exact = conditional_pep_from_matrix(&phi, &h, n0).unwrap();
            let b = pep_bounds(&spec, &spec.rotate(&h).unwrap(), n0, p).unwrap();
            assert!(exact <= b.chernoff + 1e-12);
            assert!(b.chernoff <= b.product + 1e-12);
        }
    }

    #[test]
    fn average_gain_is_reproducible() {
        let cfg = AfdmConfig::full_diversity(32, 1, 0).unwrap();
        let a = average_coding_gain(16, 2, 1, 1, 200, &cfg, 3).unwrap();
        let b = average_coding_gain(16, 2, 1, 1, 200, &cfg, 3).unwrap();
        assert_eq!(a, b);
        assert!(average_coding_gain(6, 2, 1, 1, 10, &cfg, 3).is_err());
        assert!(average_coding_gain(0, 2, 1, 1, 10, &cfg, 3).is_err());
        assert!(average_coding_gain(4 * 33, 2, 1, 1, 10, &cfg, 3).is_err());
    }
}
