//! Monte Carlo frame error rate campaigns.
//!
//! Frame `f` of a campaign draws everything from stream `f` of the seed in a
//! fixed order (channel, unit noise, information bits), so every SNR point
//! and every waveform sees the same channels and noise shapes at the same
//! frame index. Frames are simulated in parallel batches but counted in frame
//! order, and a point stops at the first frame where the stopping rule holds,
//! so results do not depend on the worker count or the batch size.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::config::{SimConfig, Waveform};
use crate::baselines::{ofdm_effective_matrix, otfs_detector, otfs_effective_matrix, OfdmSingleTap, OtfsModem};
use crate::beliefs::SymbolBeliefs;
use crate::channel::{apply_channel_with_noise, complex_gaussian, effective_taps, sample_channel, ChannelRealization};
use crate::daft::{AfdmConfig, DaftTransform, TimeFrame};
use crate::detect::{turbo_decode_with, DetectorGeometry, SoftDetector, SpaDetector, SpaParams};
use crate::error::{Error, Result};
use crate::fec::{conv_encode, hard_bits_of, map_symbols, BitBlock, ConvCode, Interleaver, ModulationAlphabet};
use crate::rng::{campaign_rng, stream_rng};

pub const FER_SCHEMA: &str = "afdm-lab/fer/v1";
pub const FER_COLUMNS: &[&str] = &[
    "fingerprint",
    "series",
    "snr_db",
    "frames",
    "frame_errors",
    "bit_errors",
    "fer",
    "ber",
];
pub const EBN0_CONVENTION: &str = "1/N0 = (Eb/N0) * rate * bits_per_symbol, unit-energy symbols";

/// Stream id of the interleaver draw.
const INTERLEAVER_PURPOSE: u64 = 1;
/// Frames simulated per parallel batch.
const BATCH: usize = 32;

/// Result of one SNR point.
#[derive(Clone, Debug, PartialEq)]
pub struct FerRecord {
    pub fingerprint: String,
    pub series: String,
    pub snr_db: f64,
    pub frames: usize,
    pub frame_errors: usize,
    pub bit_errors: usize,
    pub fer: f64,
    pub ber: f64,
    /// Elapsed time; reported in logs only, never persisted.
    pub wall_seconds: f64,
}

impl FerRecord {
    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.fingerprint.clone(),
            self.series.clone(),
            self.snr_db.to_string(),
            self.frames.to_string(),
            self.frame_errors.to_string(),
            self.bit_errors.to_string(),
            format!("{:e}", self.fer),
            format!("{:e}", self.ber),
        ]
    }

    fn from_csv(rec: &csv::StringRecord) -> Result<Self> {
        if rec.len() != FER_COLUMNS.len() {
            return Err(Error::Parse(format!("expected {} columns, found {}", FER_COLUMNS.len(), rec.len())));
        }
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| Error::Parse(format!("bad number {:?} in column {}", &rec[i], FER_COLUMNS[i])))
        };
        let int = |i: usize| -> Result<usize> {
            rec[i].parse().map_err(|_| Error::Parse(format!("bad count {:?} in column {}", &rec[i], FER_COLUMNS[i])))
        };
        Ok(Self {
            fingerprint: rec[0].to_string(),
            series: rec[1].to_string(),
            snr_db: num(2)?,
            frames: int(3)?,
            frame_errors: int(4)?,
            bit_errors: int(5)?,
            fer: num(6)?,
            ber: num(7)?,
            wall_seconds: 0.0,
        })
    }
}

/// Per-frame result.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameOutcome {
    pub bit_errors: usize,
}

impl FrameOutcome {
    pub fn is_error(&self) -> bool {
        self.bit_errors > 0
    }
}

enum Modem {
    Daft(DaftTransform),
    Otfs(OtfsModem),
}

impl Modem {
    fn modulate(&self, x: &mut [Complex64]) {
        match self {
            Self::Daft(t) => t.inverse_in_place(x),
            Self::Otfs(m) => m.modulate_in_place(x),
        }
    }

    fn demodulate(&self, d: &mut [Complex64]) {
        match self {
            Self::Daft(t) => t.forward_in_place(d),
            Self::Otfs(m) => m.demodulate_in_place(d),
        }
    }
}

/// Everything fixed for one configuration.
pub struct Campaign {
    cfg: SimConfig,
    alph: ModulationAlphabet,
    code: Option<ConvCode>,
    info_bits: usize,
    perm: Option<Interleaver>,
    afdm: AfdmConfig,
    modem: Modem,
    fingerprint: String,
}

impl Campaign {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let alph = cfg.alphabet();
        let coded = cfg.n * alph.bits_per_symbol();
        let (info_bits, perm) = match &cfg.code {
            Some(code) => {
                let k = code.info_len_for(coded).expect("validated");
                let perm = Interleaver::random(coded, &mut campaign_rng(cfg.seed, INTERLEAVER_PURPOSE));
                (k, Some(perm))
            }
            None => (coded, None),
        };
        let afdm = match cfg.waveform {
            Waveform::Ofdm => AfdmConfig::ofdm(cfg.n)?,
            _ => AfdmConfig::full_diversity(cfg.n, cfg.alpha_max, cfg.k_nu)?,
        };
        let modem = match cfg.waveform {
            Waveform::Otfs => Modem::Otfs(OtfsModem::new(cfg.grid()?)),
            _ => Modem::Daft(DaftTransform::new(&afdm)),
        };
        Ok(Self {
            cfg: cfg.clone(),
            alph,
            code: cfg.code,
            info_bits,
            perm,
            afdm,
            modem,
            fingerprint: cfg.fingerprint(),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn info_bits(&self) -> usize {
        self.info_bits
    }

    /// Information bits per transmitted code bit.
    pub fn rate(&self) -> f64 {
        match &self.code {
            Some(c) => c.rate(self.info_bits),
            None => 1.0,
        }
    }

    pub fn interleaver(&self) -> Option<&Interleaver> {
        self.perm.as_ref()
    }

    /// Noise power for an E_b/N0 in dB under [`EBN0_CONVENTION`].
    pub fn n0_for(&self, ebn0_db: f64) -> f64 {
        let ebn0 = 10f64.powf(ebn0_db / 10.0);
        1.0 / (ebn0 * self.rate() * self.alph.bits_per_symbol() as f64)
    }

    fn detector(&self, chan: &ChannelRealization) -> Result<Box<dyn SoftDetector>> {
        let params = SpaParams {
            max_sweeps: self.cfg.i_spa,
            max_combinations: self.cfg.spa_budget,
            ..SpaParams::default()
        };
        Ok(match self.cfg.waveform {
            Waveform::Afdm => {
                let geom = DetectorGeometry::from_taps(self.cfg.n, &effective_taps(chan, &self.afdm)?)?;
                Box::new(SpaDetector::from_geometry(&geom, &self.alph, params)?)
            }
            Waveform::Ofdm => Box::new(OfdmSingleTap::new(&ofdm_effective_matrix(chan, self.cfg.n)?, &self.alph)?),
            Waveform::Otfs => {
                let h = otfs_effective_matrix(chan, self.cfg.grid()?)?;
                Box::new(otfs_detector(&h, &self.alph, params, self.cfg.n, self.cfg.spa_budget.saturating_mul(16))?)
            }
        })
    }

    /// Random draws of frame `index`: channel, unit-variance noise, then
    /// information bits. Channel and noise depend only on the seed, the path
    /// geometry and `N`, so waveform and code sweeps are paired.
    pub fn frame_draws(&self, index: u64) -> Result<(ChannelRealization, Vec<Complex64>, Vec<u8>)> {
        let mut rng = stream_rng(self.cfg.seed, index);
        let chan = sample_channel(self.cfg.paths, self.cfg.l_max, self.cfg.alpha_max, &mut rng)?;
        let noise: Vec<Complex64> = (0..self.cfg.n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let u: Vec<u8> = (0..self.info_bits).map(|_| rng.random_range(0..2u8)).collect();
        Ok((chan, noise, u))
    }

    /// Simulates frame `index` at noise power `n0`.
    pub fn simulate_frame(&self, n0: f64, index: u64) -> Result<FrameOutcome> {
        let n = self.cfg.n;
        let (chan, noise, u) = self.frame_draws(index)?;

        let v = match (&self.code, &self.perm) {
            (Some(code), Some(perm)) => perm.interleave(conv_encode(&BitBlock::info(u.clone())?, code)?.bits())?,
            _ => u.clone(),
        };
        let mut s = map_symbols(&v, &self.alph)?.into_inner();
        self.modem.modulate(&mut s);
        let d = apply_channel_with_noise(&TimeFrame::new(s)?, &chan, n0, &noise)?;
        let mut y = d.into_inner();
        self.modem.demodulate(&mut y);

        let det = self.detector(&chan)?;
        let decided = match (&self.code, &self.perm) {
            (Some(code), Some(perm)) => {
                turbo_decode_with(det.as_ref(), &y, code, perm, n0, self.cfg.t_turbo, None)?.info_bits
            }
            _ => {
                let post = det.detect(&y, &SymbolBeliefs::uniform(n, self.alph.size()), n0)?.posterior;
                hard_bits_of(&post.argmax(), &self.alph)
            }
        };
        Ok(FrameOutcome {
            bit_errors: decided.iter().zip(&u).filter(|(a, b)| a != b).count(),
        })
    }

    /// Runs one SNR point until the stopping rule holds.
    pub fn run_point(&self, snr_db: f64) -> Result<FerRecord> {
        let start = Instant::now();
        let n0 = self.n0_for(snr_db);
        let (mut frames, mut frame_errors, mut bit_errors) = (0usize, 0usize, 0usize);
        'outer: while frames < self.cfg.max_frames {
            let end = (frames + BATCH).min(self.cfg.max_frames);
            let outcomes: Vec<FrameOutcome> = (frames..end)
                .into_par_iter()
                .map(|f| self.simulate_frame(n0, f as u64))
                .collect::<Result<_>>()?;
            for o in outcomes {
                frames += 1;
                bit_errors += o.bit_errors;
                frame_errors += usize::from(o.is_error());
                if frames >= self.cfg.min_frames && frame_errors >= self.cfg.min_frame_errors {
                    break 'outer;
                }
            }
        }
        Ok(FerRecord {
            fingerprint: self.fingerprint.clone(),
            series: self.cfg.series_label(),
            snr_db,
            frames,
            frame_errors,
            bit_errors,
            fer: frame_errors as f64 / frames as f64,
            ber: bit_errors as f64 / (frames * self.info_bits) as f64,
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    }
}

/// Runs every SNR point of `cfg` in memory.
pub fn run_fer(cfg: &SimConfig) -> Result<Vec<FerRecord>> {
    let campaign = Campaign::new(cfg)?;
    cfg.snr_db.iter().map(|&s| campaign.run_point(s)).collect()
}

/// Header lines of a FER CSV file.
pub fn fer_csv_header() -> String {
    format!("# schema={FER_SCHEMA}\n# ebn0: {EBN0_CONVENTION}\n{}\n", FER_COLUMNS.join(","))
}

fn csv_line(fields: &[String]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(fields).map_err(|e| Error::Io(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Formats records as a complete FER CSV document.
pub fn fer_csv(records: &[FerRecord]) -> Result<String> {
    let mut out = fer_csv_header();
    for r in records {
        out.push_str(&csv_line(&r.csv_fields())?);
    }
    Ok(out)
}

/// Reads a FER CSV file, checking the schema line.
pub fn read_fer_csv<R: std::io::Read>(reader: R) -> Result<Vec<FerRecord>> {
    let mut buf = BufReader::new(reader);
    let mut first = String::new();
    buf.read_line(&mut first)?;
    if first.trim_end() != format!("# schema={FER_SCHEMA}") {
        return Err(Error::Parse(format!("not a {FER_SCHEMA} file (first line {:?})", first.trim_end())));
    }
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(buf);
    let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if headers.iter().ne(FER_COLUMNS.iter().copied()) {
        return Err(Error::Parse(format!("unexpected columns {:?}", headers)));
    }
    rdr.records()
        .map(|r| FerRecord::from_csv(&r.map_err(|e| Error::Parse(e.to_string()))?))
        .collect()
}

/// Runs `cfg` into an append-only CSV at `path`.
///
/// Points already present for this configuration's fingerprint are skipped,
/// so an interrupted campaign resumes where it stopped. Returns this
/// configuration's records in grid order.
pub fn run_fer_to_csv(cfg: &SimConfig, path: &Path, mut on_record: impl FnMut(&FerRecord)) -> Result<Vec<FerRecord>> {
    let campaign = Campaign::new(cfg)?;
    let fingerprint = cfg.fingerprint();
    let existing = if path.exists() && std::fs::metadata(path)?.len() > 0 {
        read_fer_csv(File::open(path)?)?
    } else {
        std::fs::write(path, fer_csv_header())?;
        Vec::new()
    };
    let mut done: Vec<FerRecord> = existing.into_iter().filter(|r| r.fingerprint == fingerprint).collect();
    let seen: HashSet<u64> = done.iter().map(|r| r.snr_db.to_bits()).collect();
    let mut file = OpenOptions::new().append(true).open(path)?;
    for &snr in &cfg.snr_db {
        if seen.contains(&snr.to_bits()) {
            continue;
        }
        let rec = campaign.run_point(snr)?;
        file.write_all(csv_line(&rec.csv_fields())?.as_bytes())?;
        file.flush()?;
        on_record(&rec);
        done.push(rec);
    }
    let order = |s: f64| cfg.snr_db.iter().position(|&v| v.to_bits() == s.to_bits()).unwrap_or(usize::MAX);
    done.retain(|r| order(r.snr_db) != usize::MAX);
    done.sort_by_key(|r| order(r.snr_db));
    Ok(done)
}
