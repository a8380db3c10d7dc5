//! OFDM and OTFS reference systems over the same channel and coding chain.
//!
//! OFDM is the DAFT with `c1 = c2 = 0` and is detected one subcarrier at a
//! time from the diagonal of its frequency-domain channel, leaving all
//! inter-carrier interference untreated. OTFS places symbols on an
//! `M_delay × N_doppler` delay-Doppler grid, maps them to time-frequency with
//! the ISFFT and to time with a rectangular-pulse Heisenberg transform, and is
//! detected with the generic sparse SPA over its effective matrix.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::Zero;
use rustfft::{Fft, FftPlanner};

use crate::beliefs::SymbolBeliefs;
use crate::channel::{apply_channel_noiseless, effective_channel, ChannelRealization};
use crate::daft::{AfdmConfig, CMatrix, DaftFrame, DaftTransform, TimeFrame};
use crate::detect::{check_inputs, Detection, SoftDetector, SpaDetector, SpaParams, SUPPORT_THRESHOLD};
use crate::error::{Error, Result};
use crate::fec::ModulationAlphabet;

pub fn ofdm_modulate(x: &DaftFrame) -> Result<TimeFrame> {
    DaftTransform::new(&AfdmConfig::ofdm(x.len())?).modulate(x)
}

pub fn ofdm_demodulate(d: &TimeFrame) -> Result<DaftFrame> {
    DaftTransform::new(&AfdmConfig::ofdm(d.len())?).demodulate(d)
}

/// Frequency-domain channel `F H̃ Fᴴ`.
pub fn ofdm_effective_matrix(chan: &ChannelRealization, n: usize) -> Result<CMatrix> {
    Ok(effective_channel(chan, &AfdmConfig::ofdm(n)?)?.matrix)
}

/// Per-subcarrier detector that sees only the diagonal of the channel.
#[derive(Clone, Debug)]
pub struct OfdmSingleTap {
    diag: Vec<Complex64>,
    alph: ModulationAlphabet,
}

impl OfdmSingleTap {
    pub fn new(h_freq: &CMatrix, alph: &ModulationAlphabet) -> Result<Self> {
        if h_freq.nrows() != h_freq.ncols() {
            return Err(Error::InvalidArgument("channel matrix must be square".into()));
        }
        Ok(Self {
            diag: h_freq.diagonal().iter().copied().collect(),
            alph: alph.clone(),
        })
    }
}

impl SoftDetector for OfdmSingleTap {
    fn alphabet(&self) -> &ModulationAlphabet {
        &self.alph
    }

    fn n(&self) -> usize {
        self.diag.len()
    }

    fn detect(&self, y: &[Complex64], priors: &SymbolBeliefs, n0: f64) -> Result<Detection> {
        let q = self.alph.size();
        check_inputs(y, priors, n0, self.diag.len(), q)?;
        let mut likelihood = Vec::with_capacity(y.len() * q);
        let mut posterior = Vec::with_capacity(y.len() * q);
        for ((yk, hk), prior) in y.iter().zip(&self.diag).zip(priors.rows()) {
            for (p, pr) in self.alph.points().iter().zip(prior) {
                let l = -(yk - hk * p).norm_sqr() / n0;
                likelihood.push(l);
                posterior.push(l + pr.max(1e-300).ln());
            }
        }
        Ok(Detection {
            posterior: SymbolBeliefs::from_log_weights(q, &posterior)?,
            extrinsic: SymbolBeliefs::from_log_weights(q, &likelihood)?,
            sweeps: 1,
        })
    }
}

pub fn ofdm_single_tap_detect(
    y: &[Complex64],
    h_freq: &CMatrix,
    priors: &SymbolBeliefs,
    n0: f64,
    alph: &ModulationAlphabet,
) -> Result<SymbolBeliefs> {
    Ok(OfdmSingleTap::new(h_freq, alph)?.detect(y, priors, n0)?.posterior)
}

/// Delay-Doppler grid; symbol `(k, l)` (Doppler `k`, delay `l`) sits at `k·M + l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OtfsGrid {
    m_delay: usize,
    n_doppler: usize,
}

impl OtfsGrid {
    pub fn new(m_delay: usize, n_doppler: usize) -> Result<Self> {
        if m_delay == 0 || n_doppler == 0 {
            return Err(Error::InvalidConfig("OTFS grid dimensions must be positive".into()));
        }
        Ok(Self { m_delay, n_doppler })
    }

    /// Grid for an `n`-sample frame: 16 × 8 at 128, otherwise a power-of-two
    /// split with the delay axis at least as long as the Doppler axis.
    pub fn for_frame(n: usize) -> Result<Self> {
        if n == 128 {
            return Self::new(16, 8);
        }
        let mut nd = 1;
        while nd * nd * 2 <= n && n.is_multiple_of(nd * 2) {
            nd *= 2;
        }
        Self::new(n / nd, nd)
    }

    pub fn m_delay(&self) -> usize {
        self.m_delay
    }

    pub fn n_doppler(&self) -> usize {
        self.n_doppler
    }

    pub fn n(&self) -> usize {
        self.m_delay * self.n_doppler
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                actual: len,
            });
        }
        Ok(())
    }
}

impl fmt::Display for OtfsGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.m_delay, self.n_doppler)
    }
}

/// FFT plans for one grid.
#[derive(Clone)]
pub struct OtfsModem {
    grid: OtfsGrid,
    fft_m: Arc<dyn Fft<f64>>,
    ifft_m: Arc<dyn Fft<f64>>,
    fft_n: Arc<dyn Fft<f64>>,
    ifft_n: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for OtfsModem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OtfsModem").field("grid", &self.grid).finish()
    }
}

impl OtfsModem {
    pub fn new(grid: OtfsGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            fft_m: planner.plan_fft_forward(grid.m_delay),
            ifft_m: planner.plan_fft_inverse(grid.m_delay),
            fft_n: planner.plan_fft_forward(grid.n_doppler),
            ifft_n: planner.plan_fft_inverse(grid.n_doppler),
        }
    }

    pub fn grid(&self) -> OtfsGrid {
        self.grid
    }

    /// ISFFT to time-frequency, then one M-point IDFT per time slot.
    pub fn modulate_in_place(&self, buf: &mut [Complex64]) {
        let (m, n) = (self.grid.m_delay, self.grid.n_doppler);
        // ISFFT: IDFT along Doppler (k → slot), DFT along delay (l → subcarrier).
        self.along_doppler(buf, &self.ifft_n);
        for row in buf.chunks_mut(m) {
            self.fft_m.process(row);
        }
        // Heisenberg transform with a rectangular pulse.
        for row in buf.chunks_mut(m) {
            self.ifft_m.process(row);
        }
        let scale = 1.0 / ((m * n) as f64).sqrt() / (m as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    /// Adjoint chain: Wigner transform then SFFT.
    pub fn demodulate_in_place(&self, buf: &mut [Complex64]) {
        let (m, n) = (self.grid.m_delay, self.grid.n_doppler);
        for row in buf.chunks_mut(m) {
            self.fft_m.process(row);
        }
        for row in buf.chunks_mut(m) {
            self.ifft_m.process(row);
        }
        self.along_doppler(buf, &self.fft_n);
        let scale = 1.0 / ((m * n) as f64).sqrt() / (m as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    fn along_doppler(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let (m, n) = (self.grid.m_delay, self.grid.n_doppler);
        let mut column = vec![Complex64::zero(); n];
        for l in 0..m {
            for k in 0..n {
                column[k] = buf[k * m + l];
            }
            plan.process(&mut column);
            for k in 0..n {
                buf[k * m + l] = column[k];
            }
        }
    }

    pub fn modulate(&self, x_dd: &DaftFrame) -> Result<TimeFrame> {
        self.grid.check(x_dd.len())?;
        let mut buf = x_dd.as_slice().to_vec();
        self.modulate_in_place(&mut buf);
        TimeFrame::new(buf)
    }

    pub fn demodulate(&self, d: &TimeFrame) -> Result<DaftFrame> {
        self.grid.check(d.len())?;
        let mut buf = d.as_slice().to_vec();
        self.demodulate_in_place(&mut buf);
        DaftFrame::new(buf)
    }
}

pub fn otfs_modulate(x_dd: &DaftFrame, grid: OtfsGrid) -> Result<TimeFrame> {
    OtfsModem::new(grid).modulate(x_dd)
}

pub fn otfs_demodulate(d: &TimeFrame, grid: OtfsGrid) -> Result<DaftFrame> {
    OtfsModem::new(grid).demodulate(d)
}

/// Delay-Doppler channel `B H̃ Bᴴ`, built one column at a time.
pub fn otfs_effective_matrix(chan: &ChannelRealization, grid: OtfsGrid) -> Result<CMatrix> {
    let n = grid.n();
    let modem = OtfsModem::new(grid);
    let mut out = CMatrix::zeros(n, n);
    let mut col = vec![Complex64::zero(); n];
    for q in 0..n {
        col.iter_mut().for_each(|v| *v = Complex64::zero());
        col[q] = Complex64::new(1.0, 0.0);
        modem.modulate_in_place(&mut col);
        let mut r = apply_channel_noiseless(&col, chan)?;
        modem.demodulate_in_place(&mut r);
        out.set_column(q, &nalgebra::DVector::from_vec(r));
    }
    Ok(out)
}

/// Generic SPA over the OTFS matrix.
///
/// If a row's support makes the enumeration exceed `params.max_combinations`,
/// detection retries once with the budget raised to `fallback_budget`.
pub fn otfs_detector(
    h_dd: &CMatrix,
    alph: &ModulationAlphabet,
    params: SpaParams,
    max_support: usize,
    fallback_budget: usize,
) -> Result<SpaDetector> {
    match SpaDetector::from_matrix(h_dd, alph, params, SUPPORT_THRESHOLD, max_support) {
        Err(Error::EnumerationBudget { .. }) if fallback_budget > params.max_combinations => {
            let wider = SpaParams {
                max_combinations: fallback_budget,
                ..params
            };
            SpaDetector::from_matrix(h_dd, alph, wider, SUPPORT_THRESHOLD, max_support)
        }
        other => other,
    }
}
