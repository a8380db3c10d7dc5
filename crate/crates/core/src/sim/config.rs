//! Campaign configuration: a flat `key = value` text format with overrides.

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::baselines::OtfsGrid;
use crate::error::{Error, Result};
use crate::fec::{ConvCode, Modulation, ModulationAlphabet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Waveform {
    Afdm,
    Ofdm,
    Otfs,
}

impl FromStr for Waveform {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "afdm" => Ok(Self::Afdm),
            "ofdm" => Ok(Self::Ofdm),
            "otfs" => Ok(Self::Otfs),
            other => Err(Error::Parse(format!("unknown waveform {other:?}"))),
        }
    }
}

impl fmt::Display for Waveform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Afdm => "afdm",
            Self::Ofdm => "ofdm",
            Self::Otfs => "otfs",
        })
    }
}

/// Registry name of a code, or its octal generators when unnamed.
pub fn code_label(code: Option<&ConvCode>) -> String {
    let Some(code) = code else {
        return "none".into();
    };
    for name in ["A", "B", "C"] {
        if ConvCode::by_name(name).ok().as_ref() == Some(code) {
            return name.into();
        }
    }
    let [g0, g1] = code.generators();
    format!("{g0:o}/{g1:o}")
}

/// `none`, a registry name, or `g0/g1` in octal.
pub fn parse_code(s: &str) -> Result<Option<ConvCode>> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("none") || s == "-" {
        return Ok(None);
    }
    if let Some((g0, g1)) = s.split_once('/') {
        return ConvCode::from_octal(g0.trim(), g1.trim()).map(Some);
    }
    ConvCode::by_name(s).map(Some)
}

/// Comma list (`0,2,4`) or inclusive range (`0:2:10`) of E_b/N0 values in dB.
pub fn parse_snr_grid(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse(format!("bad SNR value {t:?}")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if step <= 0.0 || stop < start {
                return Err(Error::Parse(format!("empty SNR range {s:?}")));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| start + step * i as f64).collect()
        }
        [_] => s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect::<Result<_>>()?,
        _ => return Err(Error::Parse(format!("bad SNR grid {s:?}"))),
    };
    Ok(grid)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub waveform: Waveform,
    pub n: usize,
    pub modulation: Modulation,
    pub code: Option<ConvCode>,
    pub paths: usize,
    pub l_max: usize,
    pub alpha_max: usize,
    pub k_nu: usize,
    /// E_b/N0 points in dB.
    pub snr_db: Vec<f64>,
    pub min_frames: usize,
    pub max_frames: usize,
    pub min_frame_errors: usize,
    pub t_turbo: usize,
    pub i_spa: usize,
    pub seed: u64,
    /// Delay × Doppler split for OTFS; derived from `n` when absent.
    pub otfs_grid: Option<OtfsGrid>,
    /// Largest per-message enumeration the SPA may perform.
    pub spa_budget: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            waveform: Waveform::Afdm,
            n: 128,
            modulation: Modulation::Qam4,
            code: Some(ConvCode::by_name("A").expect("registry code")),
            paths: 2,
            l_max: 3,
            alpha_max: 3,
            k_nu: 0,
            snr_db: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0],
            min_frames: 100,
            max_frames: 10_000,
            min_frame_errors: 100,
            t_turbo: 3,
            i_spa: 5,
            seed: 1,
            otfs_grid: None,
            spa_budget: 4096,
        }
    }
}

/// Keys in canonical order.
pub const CONFIG_KEYS: &[&str] = &[
    "waveform",
    "n",
    "modulation",
    "code",
    "paths",
    "l_max",
    "alpha_max",
    "k_nu",
    "snr_db",
    "min_frames",
    "max_frames",
    "min_frame_errors",
    "t_turbo",
    "i_spa",
    "seed",
    "otfs_grid",
    "spa_budget",
];

impl SimConfig {
    /// Parses a `key = value` file on top of the defaults. `#` starts a comment.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", no + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| Error::Parse(format!("line {}: {e}", no + 1)))?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("override {kv:?} is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn int<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Parse(format!("{key}: bad integer {v:?}")))
        }
        match key {
            "waveform" => self.waveform = value.parse()?,
            "n" => self.n = int(key, value)?,
            "modulation" => self.modulation = value.parse()?,
            "code" => self.code = parse_code(value)?,
            "paths" | "p" => self.paths = int(key, value)?,
            "l_max" => self.l_max = int(key, value)?,
            "alpha_max" => self.alpha_max = int(key, value)?,
            "k_nu" => self.k_nu = int(key, value)?,
            "snr_db" => self.snr_db = parse_snr_grid(value)?,
            "min_frames" => self.min_frames = int(key, value)?,
            "max_frames" => self.max_frames = int(key, value)?,
            "min_frame_errors" => self.min_frame_errors = int(key, value)?,
            "t_turbo" => self.t_turbo = int(key, value)?,
            "i_spa" => self.i_spa = int(key, value)?,
            "seed" => self.seed = int(key, value)?,
            "otfs_grid" => {
                self.otfs_grid = if value == "auto" {
                    None
                } else {
                    let (m, n) = value
                        .split_once('x')
                        .ok_or_else(|| Error::Parse(format!("otfs_grid {value:?} is not MxN")))?;
                    Some(OtfsGrid::new(int(key, m)?, int(key, n)?)?)
                }
            }
            "spa_budget" => self.spa_budget = int(key, value)?,
            other => return Err(Error::Parse(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "waveform" => self.waveform.to_string(),
            "n" => self.n.to_string(),
            "modulation" => self.modulation.to_string(),
            "code" => code_label(self.code.as_ref()),
            "paths" => self.paths.to_string(),
            "l_max" => self.l_max.to_string(),
            "alpha_max" => self.alpha_max.to_string(),
            "k_nu" => self.k_nu.to_string(),
            "snr_db" => self.snr_db.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
            "min_frames" => self.min_frames.to_string(),
            "max_frames" => self.max_frames.to_string(),
            "min_frame_errors" => self.min_frame_errors.to_string(),
            "t_turbo" => self.t_turbo.to_string(),
            "i_spa" => self.i_spa.to_string(),
            "seed" => self.seed.to_string(),
            "otfs_grid" => self.otfs_grid.map_or("auto".into(), |g| g.to_string()),
            "spa_budget" => self.spa_budget.to_string(),
            _ => return None,
        })
    }

    /// Every key in canonical order, one `key = value` per line.
    pub fn to_kv_text(&self) -> String {
        CONFIG_KEYS
            .iter()
            .map(|k| format!("{k} = {}\n", self.get(k).expect("known key")))
            .collect()
    }

    /// Hash of everything except the SNR grid, so extending the grid keeps
    /// the same series identity.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for k in CONFIG_KEYS.iter().filter(|&&k| k != "snr_db") {
            h.update(format!("{k}={}\n", self.get(k).expect("known key")).as_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }

    /// Short series name such as `afdm/4QAM/A/P2`.
    pub fn series_label(&self) -> String {
        format!(
            "{}/{}/{}/P{}",
            self.waveform,
            self.modulation,
            code_label(self.code.as_ref()),
            self.paths
        )
    }

    pub fn alphabet(&self) -> ModulationAlphabet {
        ModulationAlphabet::new(self.modulation)
    }

    pub fn grid(&self) -> Result<OtfsGrid> {
        match self.otfs_grid {
            Some(g) => Ok(g),
            None => OtfsGrid::for_frame(self.n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n < 2 {
            return bad(format!("n = {} must be at least 2", self.n));
        }
        if self.paths == 0 {
            return bad("paths must be positive".into());
        }
        if self.l_max >= self.n {
            return bad(format!("l_max = {} must be below n = {}", self.l_max, self.n));
        }
        let bins = (self.l_max + 1) * (2 * self.alpha_max + 1);
        if self.paths > bins {
            return bad(format!("{} paths do not fit {bins} delay-Doppler bins", self.paths));
        }
        if self.waveform == Waveform::Afdm && (self.l_max + 1) * (2 * (self.alpha_max + self.k_nu) + 1) > self.n {
            return bad(format!(
                "n = {} is too short to separate l_max = {} and alpha_max = {}",
                self.n, self.l_max, self.alpha_max
            ));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|v| !v.is_finite()) {
            return bad("snr_db must list at least one finite value".into());
        }
        if self.min_frames == 0 || self.max_frames < self.min_frames {
            return bad("need max_frames >= min_frames >= 1".into());
        }
        if self.min_frame_errors == 0 {
            return bad("min_frame_errors must be positive".into());
        }
        if self.t_turbo == 0 || self.i_spa == 0 {
            return bad("t_turbo and i_spa must be positive".into());
        }
        if let Some(code) = &self.code {
            let coded = self.n * self.alphabet().bits_per_symbol();
            if code.info_len_for(coded).is_none() {
                return bad(format!("{coded} code bits cannot carry a terminated {code} codeword"));
            }
        }
        if self.waveform == Waveform::Otfs && self.grid()?.n() != self.n {
            return bad(format!("OTFS grid {} does not cover n = {}", self.grid()?, self.n));
        }
        Ok(())
    }
}

impl fmt::Display for SimConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_kv_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = SimConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.n, 128);
        assert_eq!((cfg.l_max, cfg.alpha_max, cfg.k_nu), (3, 3, 0));
        assert_eq!(cfg.series_label(), "afdm/4QAM/A/P2");
    }

    #[test]
    fn parse_file_with_comments_and_overrides() {
        let text = "# campaign\nwaveform = otfs\nn=64\ncode = none  # uncoded\nsnr_db = 0:5:15\notfs_grid = 16x4\n";
        let mut cfg = SimConfig::from_kv_text(text).unwrap();
        assert_eq!(cfg.waveform, Waveform::Otfs);
        assert_eq!(cfg.code, None);
        assert_eq!(cfg.snr_db, vec![0.0, 5.0, 10.0, 15.0]);
        cfg.validate().unwrap();
        cfg.apply_override("code=5/7").unwrap();
        assert_eq!(code_label(cfg.code.as_ref()), "B");
        cfg.apply_override("code=23/35").unwrap();
        assert_eq!(code_label(cfg.code.as_ref()), "23/35");
        assert!(cfg.apply_override("colour=red").is_err());
        assert!(cfg.apply_override("n").is_err());
        assert!(SimConfig::from_kv_text("n = many").is_err());
    }

    #[test]
    fn validation_failures() {
        let with = |kv: &str| {
            let mut c = SimConfig::default();
            c.apply_override(kv).unwrap();
            c.validate()
        };
        assert!(with("paths=0").is_err());
        assert!(with("paths=29").is_err());
        assert!(with("n=16").is_err());
        assert!(with("min_frames=0").is_err());
        assert!(with("max_frames=10").is_err());
        assert!(with("t_turbo=0").is_err());
        let mut c = SimConfig::default();
        c.snr_db.clear();
        assert!(c.validate().is_err());
        assert!(parse_snr_grid("3:1:0").is_err());
    }

    #[test]
    fn fingerprint_ignores_only_the_grid() {
        let a = SimConfig::default();
        let mut b = a.clone();
        b.snr_db = vec![1.0];
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.seed = 2;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }

    proptest! {
        #[test]
        fn canonical_text_round_trips(
            n in 2usize..512,
            paths in 1usize..8,
            seed in any::<u64>(),
            snr in prop::collection::vec(-20.0f64..40.0, 1..6),
            wf in 0usize..3,
            code in 0usize..4,
        ) {
            let cfg = SimConfig {
                waveform: [Waveform::Afdm, Waveform::Ofdm, Waveform::Otfs][wf],
                n,
                paths,
                seed,
                snr_db: snr,
                code: ["none", "A", "B", "C"].get(code).map(|c| parse_code(c).unwrap()).unwrap(),
                ..SimConfig::default()
            };
            let back = SimConfig::from_kv_text(&cfg.to_kv_text()).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
