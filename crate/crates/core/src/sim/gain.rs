//! Coding-gain sweeps, single-instance PEP reports and the code table.

use num_complex::Complex64;

use crate::channel::sample_channel;
use crate::daft::AfdmConfig;
use crate::error::{Error, Result};
use crate::fec::{free_distance, ConvCode};
use crate::pep::{
    average_coding_gain, codeword_matrix, conditional_coding_gain, conditional_pep_from_matrix, diff_spectrum,
    pep_bounds, CodewordDifference, GainEstimate, PepBounds,
};
use crate::rng::stream_rng;

pub const GAIN_SCHEMA: &str = "afdm-lab/coding-gain/v1";
pub const GAIN_COLUMNS: &[&str] = &[
    "P",
    "l_max",
    "alpha_max",
    "d_E2",
    "trials",
    "mean_gain_linear",
    "mean_gain_db",
    "stderr",
    "delta_d_E2",
    "delta_P",
];

/// Grid of `(P, d_E², geometry)` cells.
#[derive(Clone, Debug, PartialEq)]
pub struct GainSweep {
    pub n: usize,
    pub p_values: Vec<usize>,
    pub d_e2_values: Vec<usize>,
    /// `(l_max, alpha_max)` pairs.
    pub geometries: Vec<(usize, usize)>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for GainSweep {
    fn default() -> Self {
        Self {
            n: 128,
            p_values: (1..=6).collect(),
            d_e2_values: (1..=16).map(|k| 4 * k).collect(),
            geometries: vec![(1, 1), (2, 2), (3, 3)],
            trials: 10_000,
            seed: 1,
        }
    }
}

impl GainSweep {
    pub fn validate(&self) -> Result<()> {
        if self.p_values.is_empty() || self.d_e2_values.is_empty() || self.geometries.is_empty() {
            return Err(Error::InvalidConfig("every sweep axis needs at least one value".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be positive".into()));
        }
        for &d in &self.d_e2_values {
            if d == 0 || d % 4 != 0 || d / 4 > self.n {
                return Err(Error::InvalidConfig(format!("d_E2 = {d} is not 4k with 0 < k <= {}", self.n)));
            }
        }
        for &(l, a) in &self.geometries {
            let bins = (l + 1) * (2 * a + 1);
            if bins > self.n {
                return Err(Error::InvalidConfig(format!("(l_max, alpha_max) = ({l}, {a}) does not fit N = {}", self.n)));
            }
            if let Some(&p) = self.p_values.iter().find(|&&p| p == 0 || p > bins) {
                return Err(Error::InvalidConfig(format!("P = {p} does not fit {bins} delay-Doppler bins")));
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.p_values.len() * self.d_e2_values.len() * self.geometries.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainRow {
    pub p: usize,
    pub l_max: usize,
    pub alpha_max: usize,
    pub d_e2: usize,
    pub estimate: GainEstimate,
}

/// Evaluates every cell, ordered by geometry, then `P`, then `d_E²`.
///
/// All cells share the seed, so trial `t` uses the same random stream
/// everywhere and differences between cells are paired.
pub fn run_coding_gain(sweep: &GainSweep) -> Result<Vec<GainRow>> {
    sweep.validate()?;
    let mut rows = Vec::with_capacity(sweep.cells());
    for &(l_max, alpha_max) in &sweep.geometries {
        let cfg = AfdmConfig::full_diversity(sweep.n, alpha_max, 0)?;
        for &p in &sweep.p_values {
            for &d_e2 in &sweep.d_e2_values {
                let estimate = average_coding_gain(d_e2, p, l_max, alpha_max, sweep.trials, &cfg, sweep.seed)?;
                rows.push(GainRow {
                    p,
                    l_max,
                    alpha_max,
                    d_e2,
                    estimate,
                });
            }
        }
    }
    Ok(rows)
}

/// CSV with the schema line; the delta columns hold the change from the
/// previous `d_E²` (same `P`) and previous `P` (same `d_E²`) in the sweep.
pub fn gain_csv(rows: &[GainRow]) -> String {
    let mut out = format!("# schema={GAIN_SCHEMA}\n# gains are linear unless the column says db\n{}\n", GAIN_COLUMNS.join(","));
    let find = |r: &GainRow, p: usize, d: usize| {
        rows.iter()
            .find(|o| o.l_max == r.l_max && o.alpha_max == r.alpha_max && o.p == p && o.d_e2 == d)
            .map(|o| o.estimate.mean)
    };
    let prev = |values: Vec<usize>, cur: usize| values.into_iter().filter(|&v| v < cur).max();
    for r in rows {
        let ds: Vec<usize> = rows.iter().filter(|o| o.p == r.p).map(|o| o.d_e2).collect();
        let ps: Vec<usize> = rows.iter().filter(|o| o.d_e2 == r.d_e2).map(|o| o.p).collect();
        let delta = |other: Option<f64>| other.map_or(String::new(), |o| format!("{:e}", r.estimate.mean - o));
        out.push_str(&format!(
            "{},{},{},{},{},{:e},{:.6},{:e},{},{}\n",
            r.p,
            r.l_max,
            r.alpha_max,
            r.d_e2,
            r.estimate.trials,
            r.estimate.mean,
            r.estimate.mean_db(),
            r.estimate.stderr,
            delta(prev(ds, r.d_e2).and_then(|d| find(r, r.p, d))),
            delta(prev(ps, r.p).and_then(|p| find(r, p, r.d_e2))),
        ));
    }
    out
}

/// One random `(e, channel)` instance and every quantity derived from it.
#[derive(Clone, Debug, PartialEq)]
pub struct PepReport {
    pub n: usize,
    pub p: usize,
    pub d_e2: usize,
    pub n0: f64,
    pub lambda: Vec<f64>,
    pub rank: usize,
    pub exact: f64,
    pub bounds: PepBounds,
    pub coding_gain: Option<f64>,
    pub channel_record: String,
}

#[allow(clippy::too_many_arguments)]
pub fn pep_instance_report(
    n: usize,
    p: usize,
    l_max: usize,
    alpha_max: usize,
    d_e2: usize,
    snr_db: f64,
    seed: u64,
) -> Result<PepReport> {
    let cfg = AfdmConfig::full_diversity(n, alpha_max, 0)?;
    let mut rng = stream_rng(seed, 0);
    let chan = sample_channel(p, l_max, alpha_max, &mut rng)?;
    let e = CodewordDifference::random_bpsk(n, d_e2, &mut rng)?;
    let phi = codeword_matrix(e.as_slice(), &chan, &cfg)?;
    let spectrum = diff_spectrum(&phi)?;
    let n0 = 10f64.powf(-snr_db / 10.0);
    let h: Vec<Complex64> = chan.gains();
    let h_tilde = spectrum.rotate(&h)?;
    Ok(PepReport {
        n,
        p,
        d_e2,
        n0,
        lambda: spectrum.lambda().to_vec(),
        rank: spectrum.rank(),
        exact: conditional_pep_from_matrix(&phi, &h, n0)?,
        bounds: pep_bounds(&spectrum, &h_tilde, n0, p)?,
        coding_gain: conditional_coding_gain(&spectrum, p).ok(),
        channel_record: chan.to_record(),
    })
}

impl PepReport {
    pub fn to_kv_text(&self) -> String {
        let lambda: Vec<String> = self.lambda.iter().map(|l| format!("{l:e}")).collect();
        let opt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:e}"));
        format!(
            "n = {}\npaths = {}\nd_E2 = {}\nn0 = {:e}\neigenvalues = {}\nrank = {}\npep_exact = {:e}\nchernoff_bound = {:e}\nproduct_bound = {:e}\nhigh_snr_expression = {}\ncoding_gain = {}\n",
            self.n,
            self.p,
            self.d_e2,
            self.n0,
            lambda.join(","),
            self.rank,
            self.exact,
            self.bounds.chernoff,
            self.bounds.product,
            opt(self.bounds.high_snr),
            opt(self.coding_gain),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeRow {
    pub name: String,
    pub generators: String,
    pub memory: usize,
    pub d_free: usize,
    pub d_min_e2: usize,
}

/// Free distances of the registry codes.
pub fn code_table() -> Result<Vec<CodeRow>> {
    ["A", "B", "C"]
        .iter()
        .map(|&name| {
            let code = ConvCode::by_name(name)?;
            let (d_free, d_min_e2) = free_distance(&code)?;
            Ok(CodeRow {
                name: name.into(),
                generators: code.to_string(),
                memory: code.memory(),
                d_free,
                d_min_e2,
            })
        })
        .collect()
}
