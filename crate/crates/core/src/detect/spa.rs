//! Symbol-wise sum-product detection.
//!
//! Each received sample `y[r]` is an observation node tied to the few
//! symbols its row of the channel matrix touches. The message from
//! observation `r` to symbol `m` is `Pr{x[m] | y[r]}`: the Gaussian likelihood
//! of `y[r]` marginalized over every combination of the other symbols in the
//! row, each weighted by its extrinsic belief (prior times the messages from
//! all of its *other* observations). The posterior of `x[m]` is its prior
//! times all incoming messages.
//!
//! Sweeps visit edge slot `i` of every symbol `m = 0..N` before slot `i + 1`,
//! and messages are overwritten in place so later updates see earlier ones.
//! For AFDM, slot `i` of symbol `m` is the observation `(m - loc_i) mod N`
//! with the paths ordered by ascending `loc_i`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::beliefs::{normalize_log_row, SymbolBeliefs};
use crate::channel::{EffectiveChannel, PathTaps};
use crate::daft::DaftFrame;
use crate::error::{Error, Result};
use crate::fec::ModulationAlphabet;

/// Probabilities below this are treated as this value in the log domain.
const PROB_FLOOR: f64 = 1e-300;

/// Relative magnitude below which a matrix entry is not part of the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaParams {
    /// Maximum number of sweeps (`I_max`).
    pub max_sweeps: usize,
    /// Stop early once no posterior entry moves by more than this.
    pub tolerance: f64,
    /// Weight of the previous message when updating; zero disables damping.
    pub damping: f64,
    /// Largest `|A|^(S-1)` enumeration allowed per message.
    pub max_combinations: usize,
}

impl Default for SpaParams {
    fn default() -> Self {
        Self {
            max_sweeps: 5,
            tolerance: 1e-4,
            damping: 0.0,
            max_combinations: 4096,
        }
    }
}

impl SpaParams {
    pub fn with_sweeps(max_sweeps: usize) -> Self {
        Self {
            max_sweeps,
            ..Self::default()
        }
    }
}

/// Output of one detector call.
#[derive(Clone, Debug)]
pub struct Detection {
    /// `Pr{x[m] | y}` including the prior.
    pub posterior: SymbolBeliefs,
    /// Product of incoming messages only (prior excluded).
    pub extrinsic: SymbolBeliefs,
    pub sweeps: usize,
}

/// Soft-in soft-out symbol detector.
pub trait SoftDetector: Sync {
    fn alphabet(&self) -> &ModulationAlphabet;

    fn n(&self) -> usize;

    fn detect(&self, y: &[Complex64], priors: &SymbolBeliefs, n0: f64) -> Result<Detection>;
}

/// AFDM detector geometry: sorted index indicators and the taps they address.
#[derive(Clone, Debug)]
pub struct DetectorGeometry {
    n: usize,
    indicators: Vec<usize>,
    /// `taps[r][j] = H_eff[r, (r + loc_j) mod N]`.
    taps: Vec<Vec<Complex64>>,
}

/// Received indices `y_m` and, per observation, the interfering symbol indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborSets {
    pub observations: Vec<usize>,
    pub interferers: Vec<Vec<usize>>,
}

impl DetectorGeometry {
    /// Requires integer Doppler and pairwise distinct indicators.
    pub fn from_channel(chan: &EffectiveChannel) -> Result<Self> {
        let mut indicators = chan.indicators.clone().ok_or(Error::FractionalDoppler)?;
        indicators.sort_unstable();
        if indicators.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "two paths share an index indicator and cannot be separated".into(),
            ));
        }
        Self::new(chan.n(), indicators, &chan.matrix)
    }

    /// Same geometry as [`Self::from_channel`], built from [`crate::channel::effective_taps`].
    pub fn from_taps(n: usize, paths: &[PathTaps]) -> Result<Self> {
        let mut order: Vec<&PathTaps> = paths.iter().collect();
        order.sort_unstable_by_key(|p| p.indicator);
        if order.windows(2).any(|w| w[0].indicator == w[1].indicator) {
            return Err(Error::InvalidArgument(
                "two paths share an index indicator and cannot be separated".into(),
            ));
        }
        if order.is_empty() || order.iter().any(|p| p.indicator >= n || p.gains.len() != n) {
            return Err(Error::InvalidArgument("path taps must have N gains and indicators in 0..N".into()));
        }
        let indicators = order.iter().map(|p| p.indicator).collect();
        let taps = (0..n).map(|r| order.iter().map(|p| p.gains[r]).collect()).collect();
        Ok(Self { n, indicators, taps })
    }

    pub fn new(n: usize, indicators: Vec<usize>, heff: &DMatrix<Complex64>) -> Result<Self> {
        if heff.nrows() != n || heff.ncols() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: heff.nrows(),
            });
        }
        if indicators.is_empty() || indicators.iter().any(|&l| l >= n) {
            return Err(Error::InvalidArgument("indicators must lie in 0..N".into()));
        }
        let taps = (0..n)
            .map(|r| indicators.iter().map(|&l| heff[(r, (r + l) % n)]).collect())
            .collect();
        Ok(Self { n, indicators, taps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn paths(&self) -> usize {
        self.indicators.len()
    }

    pub fn indicators(&self) -> &[usize] {
        &self.indicators
    }

    pub fn row_gain(&self, row: usize, path: usize) -> Complex64 {
        self.taps[row][path]
    }

    pub fn neighbor_sets(&self, m: usize) -> NeighborSets {
        neighbor_sets(m, self.n, &self.indicators)
    }

    fn graph(&self) -> FactorGraph {
        let n = self.n;
        let rows = (0..n)
            .map(|r| {
                self.indicators
                    .iter()
                    .zip(&self.taps[r])
                    .map(|(&l, &g)| ((r + l) % n, g))
                    .collect()
            })
            .collect();
        FactorGraph::new(n, rows)
    }
}

/// `y_m = {(m - loc_i) mod N}` and `x_m^(i) = {(m - loc_i + loc_j) mod N : j ≠ i}`.
pub fn neighbor_sets(m: usize, n: usize, indicators: &[usize]) -> NeighborSets {
    let observations: Vec<usize> = indicators.iter().map(|&l| (m + n - l % n) % n).collect();
    let interferers = observations
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            indicators
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &lj)| (r + lj) % n)
                .collect()
        })
        .collect();
    NeighborSets {
        observations,
        interferers,
    }
}

/// Bipartite graph between observations (rows) and symbols (columns).
#[derive(Clone, Debug)]
struct FactorGraph {
    n: usize,
    /// `(column, gain)` per row, in slot order.
    rows: Vec<Vec<(usize, Complex64)>>,
    /// Global edge id of `(row, slot)`.
    row_edges: Vec<Vec<usize>>,
    /// Rows of each symbol, in schedule order; edge id = `edge_start[m] + i`.
    sym_rows: Vec<Vec<usize>>,
    edge_start: Vec<usize>,
    edges: usize,
}

impl FactorGraph {
    fn new(n: usize, rows: Vec<Vec<(usize, Complex64)>>) -> Self {
        // Slot order of a symbol's rows is ascending (m - r) mod N.
        let mut sym_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (r, taps) in rows.iter().enumerate() {
            for &(c, _) in taps {
                sym_rows[c].push(r);
            }
        }
        for (m, rs) in sym_rows.iter_mut().enumerate() {
            rs.sort_by_key(|&r| (m + n - r) % n);
        }
        let mut edge_start = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for rs in &sym_rows {
            edge_start.push(acc);
            acc += rs.len();
        }
        edge_start.push(acc);
        let row_edges = rows
            .iter()
            .enumerate()
            .map(|(r, taps)| {
                taps.iter()
                    .map(|&(c, _)| {
                        let slot = sym_rows[c].iter().position(|&x| x == r).expect("edge exists");
                        edge_start[c] + slot
                    })
                    .collect()
            })
            .collect();
        Self {
            n,
            rows,
            row_edges,
            sym_rows,
            edge_start,
            edges: acc,
        }
    }

    fn max_row_support(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn max_degree(&self) -> usize {
        self.sym_rows.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Sum-product detector over any sparse channel matrix.
#[derive(Clone, Debug)]
pub struct SpaDetector {
    graph: FactorGraph,
    alph: ModulationAlphabet,
    params: SpaParams,
}

impl SpaDetector {
    /// AFDM detector addressed through the index indicators.
    pub fn afdm(chan: &EffectiveChannel, alph: &ModulationAlphabet, params: SpaParams) -> Result<Self> {
        let geom = DetectorGeometry::from_channel(chan)?;
        Self::from_geometry(&geom, alph, params)
    }

    pub fn from_geometry(geom: &DetectorGeometry, alph: &ModulationAlphabet, params: SpaParams) -> Result<Self> {
        Self::build(geom.graph(), alph, params)
    }

    /// Detector whose graph is the thresholded support of `h`
    /// (entries above `threshold · max|h|`), rejecting rows wider than `max_support`.
    pub fn from_matrix(
        h: &DMatrix<Complex64>,
        alph: &ModulationAlphabet,
        params: SpaParams,
        threshold: f64,
        max_support: usize,
    ) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n {
            return Err(Error::InvalidArgument("channel matrix must be square".into()));
        }
        if h.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("channel matrix"));
        }
        let peak = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let cut = threshold * peak;
        let mut rows = Vec::with_capacity(n);
        for r in 0..n {
            // Slot order matches the AFDM geometry: ascending (c - r) mod N.
            let mut taps: Vec<(usize, Complex64)> = (0..n)
                .filter(|&c| h[(r, c)].norm() > cut)
                .map(|c| (c, h[(r, c)]))
                .collect();
            taps.sort_by_key(|&(c, _)| (c + n - r) % n);
            if taps.len() > max_support {
                return Err(Error::SupportOverflow {
                    row: r,
                    support: taps.len(),
                    limit: max_support,
                });
            }
            rows.push(taps);
        }
        Self::build(FactorGraph::new(n, rows), alph, params)
    }

    fn build(graph: FactorGraph, alph: &ModulationAlphabet, params: SpaParams) -> Result<Self> {
        if params.max_sweeps == 0 {
            return Err(Error::InvalidArgument("at least one sweep is required".into()));
        }
        if !(0.0..1.0).contains(&params.damping) {
            return Err(Error::InvalidArgument("damping must lie in [0, 1)".into()));
        }
        let support = graph.max_row_support();
        let combos = alph.size().checked_pow(support.saturating_sub(1) as u32).unwrap_or(usize::MAX);
        if combos > params.max_combinations {
            return Err(Error::EnumerationBudget {
                combinations: combos,
                budget: params.max_combinations,
            });
        }
        Ok(Self {
            graph,
            alph: alph.clone(),
            params,
        })
    }

    pub fn params(&self) -> SpaParams {
        self.params
    }

    /// Widest observation row in the graph.
    pub fn max_row_support(&self) -> usize {
        self.graph.max_row_support()
    }
}

/// Log of a probability with the floor applied.
#[inline]
fn ln_floor(p: f64) -> f64 {
    p.max(PROB_FLOOR).ln()
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

struct Workspace {
    /// Normalized log messages, `edges × q`.
    msgs: Vec<f64>,
    log_prior: Vec<f64>,
    scratch_belief: Vec<f64>,
    scratch_terms: Vec<f64>,
}

impl SpaDetector {
    /// Extrinsic log belief of the symbol on `edge` of `sym`, excluding that edge.
    fn extrinsic_log_belief(&self, ws: &Workspace, sym: usize, skip_edge: usize, out: &mut [f64]) {
        let q = self.alph.size();
        out.copy_from_slice(&ws.log_prior[sym * q..(sym + 1) * q]);
        for e in self.graph.edge_start[sym]..self.graph.edge_start[sym + 1] {
            if e == skip_edge {
                continue;
            }
            for (o, m) in out.iter_mut().zip(&ws.msgs[e * q..(e + 1) * q]) {
                *o += m;
            }
        }
        let lse = log_sum_exp(out);
        out.iter_mut().for_each(|v| *v -= lse);
    }

    /// Recomputes the message on edge `slot` of symbol `m`.
    fn update_edge(&self, ws: &mut Workspace, y: &[Complex64], n0: f64, m: usize, slot: usize) {
        let q = self.alph.size();
        let points = self.alph.points();
        let r = self.graph.sym_rows[m][slot];
        let edge = self.graph.edge_start[m] + slot;
        let taps = &self.graph.rows[r];
        let mut own_gain = Complex64::new(0.0, 0.0);
        let mut others: Vec<(Complex64, Vec<f64>)> = Vec::with_capacity(taps.len());
        let mut belief = std::mem::take(&mut ws.scratch_belief);
        belief.resize(q, 0.0);
        for (&(c, g), &e) in taps.iter().zip(&self.graph.row_edges[r]) {
            if e == edge {
                own_gain = g;
                continue;
            }
            self.extrinsic_log_belief(ws, c, e, &mut belief);
            others.push((g, belief.clone()));
        }
        ws.scratch_belief = belief;

        let combos = q.pow(others.len() as u32);
        let mut terms = std::mem::take(&mut ws.scratch_terms);
        terms.clear();
        terms.resize(q * combos, 0.0);
        let mut digits = vec![0usize; others.len()];
        for k in 0..combos {
            let mut interference = Complex64::new(0.0, 0.0);
            let mut log_w = 0.0;
            for (d, (g, lb)) in digits.iter().zip(&others) {
                interference += g * points[*d];
                log_w += lb[*d];
            }
            let residual = y[r] - interference;
            for (a, p) in points.iter().enumerate() {
                terms[a * combos + k] = log_w - (residual - own_gain * p).norm_sqr() / n0;
            }
            for d in digits.iter_mut() {
                *d += 1;
                if *d < q {
                    break;
                }
                *d = 0;
            }
        }
        let mut fresh: Vec<f64> = (0..q).map(|a| log_sum_exp(&terms[a * combos..(a + 1) * combos])).collect();
        ws.scratch_terms = terms;
        let lse = log_sum_exp(&fresh);
        fresh.iter_mut().for_each(|v| *v -= lse);
        let slot_msgs = &mut ws.msgs[edge * q..(edge + 1) * q];
        if self.params.damping > 0.0 {
            let w = self.params.damping;
            let mixed: Vec<f64> = fresh
                .iter()
                .zip(slot_msgs.iter())
                .map(|(f, o)| ln_floor((1.0 - w) * f.exp() + w * o.exp()))
                .collect();
            slot_msgs.copy_from_slice(&mixed);
        } else {
            slot_msgs.copy_from_slice(&fresh);
        }
    }

    fn beliefs(&self, ws: &Workspace, with_prior: bool) -> Result<SymbolBeliefs> {
        let q = self.alph.size();
        let n = self.graph.n;
        let mut logs = vec![0.0; n * q];
        for m in 0..n {
            let row = &mut logs[m * q..(m + 1) * q];
            if with_prior {
                row.copy_from_slice(&ws.log_prior[m * q..(m + 1) * q]);
            }
            for e in self.graph.edge_start[m]..self.graph.edge_start[m + 1] {
                for (o, v) in row.iter_mut().zip(&ws.msgs[e * q..(e + 1) * q]) {
                    *o += v;
                }
            }
        }
        let mut probs = vec![0.0; n * q];
        for (dst, src) in probs.chunks_mut(q).zip(logs.chunks(q)) {
            normalize_log_row(src, dst)?;
        }
        SymbolBeliefs::from_weights(q, probs)
    }
}

impl SoftDetector for SpaDetector {
    fn alphabet(&self) -> &ModulationAlphabet {
        &self.alph
    }

    fn n(&self) -> usize {
        self.graph.n
    }

    fn detect(&self, y: &[Complex64], priors: &SymbolBeliefs, n0: f64) -> Result<Detection> {
        let n = self.graph.n;
        let q = self.alph.size();
        check_inputs(y, priors, n0, n, q)?;
        let mut ws = Workspace {
            msgs: vec![-(q as f64).ln(); self.graph.edges * q],
            log_prior: priors.rows().flatten().map(|&p| ln_floor(p)).collect(),
            scratch_belief: Vec::with_capacity(q),
            scratch_terms: Vec::new(),
        };
        let mut previous = self.beliefs(&ws, true)?;
        let mut sweeps = 0;
        for _ in 0..self.params.max_sweeps {
            sweeps += 1;
            for slot in 0..self.graph.max_degree() {
                for m in 0..n {
                    if slot < self.graph.sym_rows[m].len() {
                        self.update_edge(&mut ws, y, n0, m, slot);
                    }
                }
            }
            let current = self.beliefs(&ws, true)?;
            let change = current.max_abs_diff(&previous);
            previous = current;
            if change < self.params.tolerance {
                break;
            }
        }
        Ok(Detection {
            posterior: previous,
            extrinsic: self.beliefs(&ws, false)?,
            sweeps,
        })
    }
}

pub(crate) fn check_inputs(y: &[Complex64], priors: &SymbolBeliefs, n0: f64, n: usize, q: usize) -> Result<()> {
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise power {n0} must be positive")));
    }
    if y.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if priors.n() != n || priors.q() != q {
        return Err(Error::LengthMismatch {
            expected: n * q,
            actual: priors.n() * priors.q(),
        });
    }
    Ok(())
}

/// AFDM symbol-wise SPA detection, returning `Pr{x[m] | y}`.
pub fn spa_detect(
    y: &DaftFrame,
    chan: &EffectiveChannel,
    priors: &SymbolBeliefs,
    n0: f64,
    max_sweeps: usize,
    alph: &ModulationAlphabet,
) -> Result<SymbolBeliefs> {
    let det = SpaDetector::afdm(chan, alph, SpaParams::with_sweeps(max_sweeps))?;
    Ok(det.detect(y.as_slice(), priors, n0)?.posterior)
}

/// Same message passing over the thresholded support of an arbitrary matrix.
pub fn generic_sparse_spa(
    y: &DaftFrame,
    h: &DMatrix<Complex64>,
    priors: &SymbolBeliefs,
    n0: f64,
    max_sweeps: usize,
    alph: &ModulationAlphabet,
    max_support: usize,
) -> Result<SymbolBeliefs> {
    let det = SpaDetector::from_matrix(h, alph, SpaParams::with_sweeps(max_sweeps), SUPPORT_THRESHOLD, max_support)?;
    Ok(det.detect(y.as_slice(), priors, n0)?.posterior)
}

/// Most probable alphabet point per position (lowest index on ties).
pub fn hard_decision(beliefs: &SymbolBeliefs, alph: &ModulationAlphabet) -> DaftFrame {
    let pts = alph.points();
    DaftFrame::new(beliefs.argmax().into_iter().map(|a| pts[a]).collect()).expect("alphabet points are finite")
}
