//! Monte Carlo over circuit realizations and the observables derived from
//! the averaged single-qubit SRE profile.
//!
//! Samples are grouped into a fixed number of contiguous batches. Each batch
//! is reduced sequentially and batches are merged in index order, so results
//! do not depend on the number of worker threads. Batches are also the unit
//! of the bootstrap used for error bars on fitted quantities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{lightcone_contains, sample_rng, BrickworkSchedule, Circuit, GateKind, HeisenbergFrame};
use crate::error::{Error, Result};
use crate::magic_state::ProductState;
use crate::sre::{classify_exact, single_qubit_sre, SingleQubitClass};

/// Upper bound on the number of batches a run is split into.
pub const MAX_BATCHES: u64 = 1000;
/// Default cap on `L · T · N`.
pub const DEFAULT_MAX_WORK: f64 = 1e11;

/// Everything that determines a run and its analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_sites: usize,
    pub depth: usize,
    pub samples: u64,
    pub seed: u64,
    pub magic_sites: Vec<usize>,
    pub gate_kind: GateKind,
    #[serde(default)]
    pub windows: Windows,
    #[serde(default = "default_margin")]
    pub interior_margin: usize,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_max_work")]
    pub max_work: f64,
}

fn default_margin() -> usize {
    2
}

fn default_resamples() -> usize {
    200
}

fn default_max_work() -> f64 {
    DEFAULT_MAX_WORK
}

/// Optional overrides of the fit windows, inclusive `[lo, hi]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Windows {
    pub gamma: Option<(usize, usize)>,
    pub residual: Option<(usize, usize)>,
    pub alpha: Option<(usize, usize)>,
    pub beta: Option<(usize, usize)>,
}

impl RunConfig {
    pub fn new(n_sites: usize, depth: usize, samples: u64, seed: u64, magic_sites: Vec<usize>, gate_kind: GateKind) -> Self {
        Self {
            n_sites,
            depth,
            samples,
            seed,
            magic_sites,
            gate_kind,
            windows: Windows::default(),
            interior_margin: default_margin(),
            bootstrap_resamples: default_resamples(),
            max_work: DEFAULT_MAX_WORK,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.n_sites < 2 || self.n_sites % 2 == 1 {
            return Err(Error::OddLength(self.n_sites));
        }
        if self.samples == 0 {
            return cfg("samples must be at least 1".into());
        }
        if self.magic_sites.is_empty() {
            return cfg("at least one magic site is required".into());
        }
        let mut sorted = self.magic_sites.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.magic_sites.len() {
            return cfg("magic sites must be distinct".into());
        }
        if let Some(&m) = sorted.last() {
            if m >= self.n_sites {
                return Err(Error::SiteOutOfRange { site: m, n_sites: self.n_sites });
            }
        }
        let w = &self.windows;
        for (name, win) in [("gamma", w.gamma), ("residual", w.residual), ("alpha", w.alpha), ("beta", w.beta)] {
            if let Some((lo, hi)) = win {
                if lo > hi || hi > self.depth {
                    return cfg(format!("{name} window [{lo}, {hi}] not inside [0, {}]", self.depth));
                }
            }
        }
        let work = self.n_sites as f64 * self.depth.max(1) as f64 * self.samples as f64;
        if work > self.max_work {
            return Err(Error::ResourceCap(format!("L*T*N = {work:e} exceeds cap {:e}", self.max_work)));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<BrickworkSchedule> {
        BrickworkSchedule::new(self.n_sites, self.depth, self.gate_kind)
    }

    /// Number of batches the samples are split into.
    pub fn n_batches(&self) -> u64 {
        self.samples.min(MAX_BATCHES)
    }

    /// Sample index range of batch `b`.
    pub fn batch_range(&self, b: u64) -> std::ops::Range<u64> {
        let nb = self.n_batches();
        let n = self.samples as u128;
        let lo = (b as u128 * n / nb as u128) as u64;
        let hi = ((b as u128 + 1) * n / nb as u128) as u64;
        lo..hi
    }

    /// Last time before the light cone wraps around the ring.
    pub fn prewrap_time(&self) -> usize {
        (self.n_sites - 2) / 2
    }

    pub fn gamma_window(&self) -> (usize, usize) {
        self.windows.gamma.unwrap_or((4, 12.min(self.prewrap_time()).min(self.depth)))
    }

    pub fn residual_window(&self) -> (usize, usize) {
        self.windows.residual.unwrap_or((4, 10.min(self.prewrap_time()).min(self.depth)))
    }

    pub fn alpha_window(&self) -> (usize, usize) {
        self.windows.alpha.unwrap_or_else(|| {
            let (lo, hi) = self.gamma_window();
            (lo, hi.min(self.depth.saturating_sub(1)))
        })
    }
}

/// Raw sums over the samples of one batch.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats {
    pub count: u64,
    /// `Σ M_i(t)`, index `t·L + i`.
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
    /// `Σ_samples Σ_i M_i(t)` and its square, index `t`.
    pub total_sum: Vec<f64>,
    pub total_sq: Vec<f64>,
    /// Spectrum classes seen, in [`CLASS_NAMES`] order.
    pub classes: [u64; 5],
    /// Nonzero SRE outside every magic light cone (must stay 0).
    pub cone_violations: u64,
}

pub const CLASS_NAMES: [&str; 5] = ["maximally-mixed", "pure-stabilizer", "half-magic", "full-magic", "other"];

impl BatchStats {
    pub fn zeros(n_sites: usize, depth: usize) -> Self {
        let cells = (depth + 1) * n_sites;
        Self {
            count: 0,
            sum: vec![0.0; cells],
            sum_sq: vec![0.0; cells],
            total_sum: vec![0.0; depth + 1],
            total_sq: vec![0.0; depth + 1],
            classes: [0; 5],
            cone_violations: 0,
        }
    }
}

fn class_slot(c: Result<SingleQubitClass>) -> usize {
    match c {
        Ok(SingleQubitClass::MaximallyMixed) => 0,
        Ok(SingleQubitClass::PureStabilizer) => 1,
        Ok(SingleQubitClass::HalfMagic) => 2,
        Ok(SingleQubitClass::FullMagic) => 3,
        Err(_) => 4,
    }
}

/// Per-worker scratch reused across samples.
struct Worker {
    circuit: Circuit,
    frame: HeisenbergFrame,
    state: ProductState,
    in_cone: Vec<bool>,
    row: Vec<f64>,
}

impl Worker {
    fn new(config: &RunConfig) -> Result<Self> {
        let schedule = config.schedule()?;
        let (n, depth) = (config.n_sites, config.depth);
        let mut in_cone = vec![false; (depth + 1) * n];
        for t in 0..=depth {
            for i in 0..n {
                in_cone[t * n + i] = config.magic_sites.iter().any(|&m| lightcone_contains(i, t, m, n));
            }
        }
        Ok(Self {
            circuit: Circuit::from_gates(schedule, vec![crate::circuit::GateChoice::Identity; depth * n / 2])?,
            frame: HeisenbergFrame::new(n),
            state: ProductState::with_magic(n, &config.magic_sites)?,
            in_cone,
            row: vec![0.0; n],
        })
    }

    fn run_sample(&mut self, config: &RunConfig, index: u64, acc: &mut BatchStats) {
        let n = config.n_sites;
        let mut rng = sample_rng(config.seed, index);
        self.circuit.resample(&mut rng);
        self.frame.reset();
        for t in 0..=config.depth {
            if t > 0 {
                self.frame.apply_layer(self.circuit.layer(t));
            }
            let mut total = 0.0;
            for i in 0..n {
                let spec = self.frame.site_expectations(&self.state, i);
                let m = single_qubit_sre(spec);
                self.row[i] = m;
                total += m;
                acc.classes[class_slot(classify_exact(spec))] += 1;
                if m != 0.0 && !self.in_cone[t * n + i] {
                    acc.cone_violations += 1;
                }
            }
            let base = t * n;
            for i in 0..n {
                let m = self.row[i];
                acc.sum[base + i] += m;
                acc.sum_sq[base + i] += m * m;
            }
            acc.total_sum[t] += total;
            acc.total_sq[t] += total * total;
        }
        acc.count += 1;
    }
}

fn run_batch(config: &RunConfig, b: u64) -> Result<BatchStats> {
    let mut worker = Worker::new(config)?;
    let mut acc = BatchStats::zeros(config.n_sites, config.depth);
    for s in config.batch_range(b) {
        worker.run_sample(config, s, &mut acc);
    }
    Ok(acc)
}

/// Runs all samples on the global rayon pool.
pub fn run_monte_carlo(config: &RunConfig) -> Result<SpreadProfile> {
    config.validate()?;
    let batches: Result<Vec<BatchStats>> =
        (0..config.n_batches()).into_par_iter().map(|b| run_batch(config, b)).collect();
    SpreadProfile::from_batches(config.clone(), batches?)
}

/// Runs all samples on a dedicated pool of `threads` workers.
pub fn run_monte_carlo_with_threads(config: &RunConfig, threads: usize) -> Result<SpreadProfile> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ResourceCap(e.to_string()))?;
    pool.install(|| run_monte_carlo(config))
}

/// Means and standard errors merged from a multiset of batches.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileStats {
    pub n_sites: usize,
    pub depth: usize,
    pub count: u64,
    /// `M̄_i(t)`, index `[t][i]`.
    pub mean: Vec<Vec<f64>>,
    pub sem: Vec<Vec<f64>>,
    /// `𝓜(t)` and its standard error.
    pub total: Vec<f64>,
    pub total_sem: Vec<f64>,
}

impl ProfileStats {
    /// Merges `batches[k]` with multiplicity `weights[k]` (all 1 if `None`),
    /// always in index order.
    pub fn from_batches(n_sites: usize, depth: usize, batches: &[BatchStats], weights: Option<&[u32]>) -> Self {
        let cells = (depth + 1) * n_sites;
        let mut sum = vec![0.0; cells];
        let mut sq = vec![0.0; cells];
        let mut tsum = vec![0.0; depth + 1];
        let mut tsq = vec![0.0; depth + 1];
        let mut count = 0u64;
        for (k, b) in batches.iter().enumerate() {
            let w = weights.map_or(1, |w| w[k]);
            if w == 0 {
                continue;
            }
            let wf = f64::from(w);
            count += b.count * u64::from(w);
            for c in 0..cells {
                sum[c] += wf * b.sum[c];
                sq[c] += wf * b.sum_sq[c];
            }
            for t in 0..=depth {
                tsum[t] += wf * b.total_sum[t];
                tsq[t] += wf * b.total_sq[t];
            }
        }
        let n = count as f64;
        let moments = |s: f64, q: f64| -> (f64, f64) {
            let mean = s / n;
            if count < 2 {
                return (mean, 0.0);
            }
            let var = ((q - s * mean) / (n - 1.0)).max(0.0);
            (mean, (var / n).sqrt())
        };
        let mut mean = vec![vec![0.0; n_sites]; depth + 1];
        let mut sem = vec![vec![0.0; n_sites]; depth + 1];
        for t in 0..=depth {
            for i in 0..n_sites {
                let (m, e) = moments(sum[t * n_sites + i], sq[t * n_sites + i]);
                mean[t][i] = m;
                sem[t][i] = e;
            }
        }
        let (total, total_sem) = (0..=depth).map(|t| moments(tsum[t], tsq[t])).unzip();
        Self { n_sites, depth, count, mean, sem, total, total_sem }
    }
}

/// Result of a Monte Carlo run: the raw batches plus merged statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct SpreadProfile {
    pub config: RunConfig,
    pub batches: Vec<BatchStats>,
    pub stats: ProfileStats,
    pub classes: [u64; 5],
    pub cone_violations: u64,
}

impl SpreadProfile {
    pub fn from_batches(config: RunConfig, batches: Vec<BatchStats>) -> Result<Self> {
        let cells = (config.depth + 1) * config.n_sites;
        if batches.len() as u64 != config.n_batches()
            || batches.iter().any(|b| b.sum.len() != cells || b.total_sum.len() != config.depth + 1)
        {
            return Err(Error::Config("batch data does not match the configuration".into()));
        }
        let stats = ProfileStats::from_batches(config.n_sites, config.depth, &batches, None);
        let mut classes = [0u64; 5];
        let mut cone_violations = 0;
        for b in &batches {
            for (c, v) in classes.iter_mut().zip(b.classes) {
                *c += v;
            }
            cone_violations += b.cone_violations;
        }
        Ok(Self { config, batches, stats, classes, cone_violations })
    }

    pub fn mean(&self, t: usize, i: usize) -> f64 {
        self.stats.mean[t][i]
    }

    pub fn sem(&self, t: usize, i: usize) -> f64 {
        self.stats.sem[t][i]
    }
}

/// One point of `𝓜(t)`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: usize,
    pub value: f64,
    pub sem: f64,
}

/// `𝓜(t) = Σ_i M̄_i(t)` with standard errors from the per-sample totals.
pub fn total_sre_curve(stats: &ProfileStats) -> Vec<CurvePoint> {
    (0..=stats.depth).map(|t| CurvePoint { t, value: stats.total[t], sem: stats.total_sem[t] }).collect()
}

/// Ordinary least-squares line.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::Fit(format!("need at least 2 points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit { slope, intercept, r_squared, n_points: n })
}

/// Decay rate `Γ = -slope` of `ln 𝓜(t)` over `window`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub gamma: f64,
    pub window: (usize, usize),
    pub fit: LinearFit,
}

pub fn fit_decay_rate(curve: &[f64], window: (usize, usize)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if hi >= curve.len() || lo > hi {
        return Err(Error::Fit(format!("window [{lo}, {hi}] outside curve of length {}", curve.len())));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (t, &v) in curve.iter().enumerate().take(hi + 1).skip(lo) {
        if v <= 0.0 {
            return Err(Error::Fit(format!("non-positive total SRE {v} at t = {t}")));
        }
        xs.push(t as f64);
        ys.push(v.ln());
    }
    let fit = linear_fit(&xs, &ys)?;
    Ok(DecayFit { gamma: -fit.slope, window, fit })
}

/// `a_i(t) = M̄_i(t)/𝓜(t)` with per-time inclusion flags.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedProfile {
    pub a: Vec<Vec<f64>>,
    pub included: Vec<bool>,
}

/// Times with `𝓜(t) < threshold · SE(𝓜(t))` are excluded.
pub const NORMALIZATION_THRESHOLD: f64 = 10.0;

pub fn normalize_profile(stats: &ProfileStats) -> NormalizedProfile {
    let mut a = Vec::with_capacity(stats.depth + 1);
    let mut included = Vec::with_capacity(stats.depth + 1);
    for t in 0..=stats.depth {
        let total: f64 = stats.mean[t].iter().sum();
        let ok = total > 0.0 && total >= NORMALIZATION_THRESHOLD * stats.total_sem[t];
        included.push(ok);
        a.push(if total > 0.0 { stats.mean[t].iter().map(|m| m / total).collect() } else { vec![0.0; stats.n_sites] });
    }
    NormalizedProfile { a, included }
}

/// Signed minimal-image displacement `i - m` on a ring of `n`.
pub fn displacement(i: usize, m: usize, n: usize) -> isize {
    let n = n as isize;
    let d = (i as isize - m as isize).rem_euclid(n);
    if d > n / 2 {
        d - n
    } else {
        d
    }
}

fn nearest_distance(i: usize, magic: &[usize], n: usize) -> usize {
    magic.iter().map(|&m| displacement(i, m, n).unsigned_abs()).min().unwrap_or(usize::MAX)
}

/// Sites with `|i - m| < t - margin` for the nearest magic site `m`.
pub fn interior_sites(t: usize, magic: &[usize], n: usize, margin: usize) -> Vec<usize> {
    (0..n).filter(|&i| nearest_distance(i, magic, n) + margin < t).collect()
}

/// `r_i(t) = a_i(t) - ½[a_{i-1}(t-1) + a_{i+1}(t-1)]` on interior sites.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualStats {
    pub t: usize,
    pub sites: Vec<usize>,
    pub residuals: Vec<f64>,
    pub max_abs: f64,
    pub l1: f64,
}

pub fn diffusion_residual(a: &NormalizedProfile, t: usize, magic: &[usize], margin: usize) -> Result<ResidualStats> {
    if t == 0 {
        return Err(Error::ZeroTime);
    }
    if !a.included.get(t).copied().unwrap_or(false) || !a.included[t - 1] {
        return Err(Error::Fit(format!("t = {t} or t - 1 excluded from normalization")));
    }
    let n = a.a[t].len();
    let sites = interior_sites(t, magic, n, margin);
    if sites.is_empty() {
        return Err(Error::Fit(format!("no interior sites at t = {t}")));
    }
    let residuals: Vec<f64> = sites
        .iter()
        .map(|&i| a.a[t][i] - 0.5 * (a.a[t - 1][(i + n - 1) % n] + a.a[t - 1][(i + 1) % n]))
        .collect();
    let max_abs = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let l1 = residuals.iter().map(|r| r.abs()).sum();
    Ok(ResidualStats { t, sites, residuals, max_abs, l1 })
}

/// One gate of layer `t + 1` on the bond `(i, j)`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct GateRatio {
    pub t: usize,
    pub i: usize,
    pub j: usize,
    /// `None` when the input sum is below threshold.
    pub ratio: Option<f64>,
    pub interior: bool,
}

/// `α(i,t) = [M̄_i(t+1) + M̄_j(t+1)] / [M̄_i(t) + M̄_j(t)]` for every gate of
/// layer `t + 1`; entries whose input is below ten standard errors are
/// flagged undefined.
pub fn gate_io_ratio(stats: &ProfileStats, magic: &[usize], margin: usize) -> Vec<GateRatio> {
    let n = stats.n_sites;
    let mut out = Vec::new();
    for t in 0..stats.depth {
        let interior = interior_sites(t, magic, n, margin);
        for (i, j) in crate::circuit::pairs_for_layer(t + 1, n).expect("even length") {
            let den = stats.mean[t][i] + stats.mean[t][j];
            let den_se = stats.sem[t][i].hypot(stats.sem[t][j]);
            let num = stats.mean[t + 1][i] + stats.mean[t + 1][j];
            let ratio = (den > 0.0 && den >= NORMALIZATION_THRESHOLD * den_se).then(|| num / den);
            let interior = interior.contains(&i) && interior.contains(&j);
            out.push(GateRatio { t, i, j, ratio, interior });
        }
    }
    out
}

/// `Δ = M̄_i(t+1) - M̄_j(t+1)` at the output of each gate of layer `t + 1`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct SwapDelta {
    pub t: usize,
    pub i: usize,
    pub j: usize,
    pub delta: f64,
    /// `Δ` over its bootstrap standard error (filled in by [`analyze`]).
    pub z: Option<f64>,
}

pub fn swap_symmetry_check(stats: &ProfileStats) -> Vec<SwapDelta> {
    let n = stats.n_sites;
    let mut out = Vec::new();
    for t in 0..stats.depth {
        for (i, j) in crate::circuit::pairs_for_layer(t + 1, n).expect("even length") {
            let delta = stats.mean[t + 1][i] - stats.mean[t + 1][j];
            out.push(SwapDelta { t, i, j, delta, z: None });
        }
    }
    out
}

/// `σ(t)` of `a_i(t)` about its centroid, positions measured from `center`.
/// `None` for excluded times.
pub fn profile_width(a: &NormalizedProfile, center: usize) -> Vec<Option<f64>> {
    a.a.iter()
        .zip(&a.included)
        .map(|(row, &inc)| {
            if !inc {
                return None;
            }
            let n = row.len();
            let d: Vec<f64> = (0..n).map(|i| displacement(i, center, n) as f64).collect();
            let mean: f64 = row.iter().zip(&d).map(|(w, x)| w * x).sum();
            let var: f64 = row.iter().zip(&d).map(|(w, x)| w * (x - mean).powi(2)).sum();
            Some(var.max(0.0).sqrt())
        })
        .collect()
}

/// Power law `σ ∝ t^β` fitted on a log-log scale.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct WidthFit {
    pub beta: f64,
    pub window: (usize, usize),
    pub fit: LinearFit,
}

pub fn fit_width_exponent(sigma: &[Option<f64>], window: (usize, usize)) -> Result<WidthFit> {
    let (xs, ys) = window_points(sigma, window)?;
    if ys.iter().any(|&s| s <= 0.0) || xs[0] <= 0.0 {
        return Err(Error::Fit("zero width or time in window".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(WidthFit { beta: fit.slope, window, fit })
}

/// Slope of `σ(t)²` against `t`.
pub fn fit_variance_slope(sigma: &[Option<f64>], window: (usize, usize)) -> Result<LinearFit> {
    let (xs, ys) = window_points(sigma, window)?;
    let v: Vec<f64> = ys.iter().map(|s| s * s).collect();
    linear_fit(&xs, &v)
}

fn window_points(sigma: &[Option<f64>], (lo, hi): (usize, usize)) -> Result<(Vec<f64>, Vec<f64>)> {
    if hi >= sigma.len() || lo > hi {
        return Err(Error::Fit(format!("window [{lo}, {hi}] outside series of length {}", sigma.len())));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (t, s) in sigma.iter().enumerate().take(hi + 1).skip(lo) {
        match s {
            Some(s) => {
                xs.push(t as f64);
                ys.push(*s);
            }
            None => return Err(Error::Fit(format!("t = {t} excluded from the width window"))),
        }
    }
    Ok((xs, ys))
}

/// Default width window: from the first time with `σ ≥ 1` to the last
/// included time, capped at the pre-wrap time.
pub fn default_beta_window(sigma: &[Option<f64>], prewrap: usize) -> Option<(usize, usize)> {
    let lo = sigma.iter().position(|s| s.is_some_and(|s| s >= 1.0))?.max(1);
    let mut hi = lo;
    while hi < prewrap && sigma.get(hi + 1).is_some_and(|s| s.is_some()) {
        hi += 1;
    }
    (hi > lo).then_some((lo, hi))
}

/// Quantities re-derived on every bootstrap resample.
#[derive(Clone, Debug)]
struct Derived {
    gamma: Option<f64>,
    alpha_mean: Option<f64>,
    beta: Option<f64>,
    variance_slope: Option<f64>,
    sigma: Vec<Option<f64>>,
    // `t·L + i`
    residual: Vec<Option<f64>>,
    alpha: Vec<Option<f64>>,
    swap: Vec<Option<f64>>,
}

struct Plan {
    gamma_window: (usize, usize),
    residual_window: (usize, usize),
    alpha_window: (usize, usize),
    beta_window: Option<(usize, usize)>,
}

fn mean_interior_alpha(ratios: &[GateRatio], window: (usize, usize)) -> Option<f64> {
    let vals: Vec<f64> = ratios
        .iter()
        .filter(|g| g.interior && g.t >= window.0 && g.t <= window.1)
        .filter_map(|g| g.ratio)
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

fn derive(stats: &ProfileStats, config: &RunConfig, plan: &Plan) -> Derived {
    let n = stats.n_sites;
    let cells = (stats.depth + 1) * n;
    let curve: Vec<f64> = stats.total.clone();
    let gamma = fit_decay_rate(&curve, plan.gamma_window).ok().map(|f| f.gamma);
    let norm = normalize_profile(stats);
    let center = config.magic_sites[0];
    let sigma = profile_width(&norm, center);
    let (beta, variance_slope) = match plan.beta_window {
        Some(w) => (
            fit_width_exponent(&sigma, w).ok().map(|f| f.beta),
            fit_variance_slope(&sigma, w).ok().map(|f| f.slope),
        ),
        None => (None, None),
    };
    let mut residual = vec![None; cells];
    for t in plan.residual_window.0.max(1)..=plan.residual_window.1 {
        if let Ok(r) = diffusion_residual(&norm, t, &config.magic_sites, config.interior_margin) {
            for (&i, &v) in r.sites.iter().zip(&r.residuals) {
                residual[t * n + i] = Some(v);
            }
        }
    }
    let ratios = gate_io_ratio(stats, &config.magic_sites, config.interior_margin);
    let mut alpha = vec![None; cells];
    for g in &ratios {
        alpha[g.t * n + g.i] = g.ratio;
    }
    let mut swap = vec![None; cells];
    for s in swap_symmetry_check(stats) {
        swap[s.t * n + s.i] = Some(s.delta);
    }
    Derived {
        gamma,
        alpha_mean: mean_interior_alpha(&ratios, plan.alpha_window),
        beta,
        variance_slope,
        sigma,
        residual,
        alpha,
        swap,
    }
}

/// Running mean and variance of an optional quantity over resamples.
#[derive(Copy, Clone, Default)]
struct Spread {
    n: u32,
    sum: f64,
    sq: f64,
}

impl Spread {
    fn push(&mut self, v: Option<f64>) {
        if let Some(v) = v {
            self.n += 1;
            self.sum += v;
            self.sq += v * v;
        }
    }

    fn std(&self) -> Option<f64> {
        (self.n >= 2).then(|| {
            let n = f64::from(self.n);
            let m = self.sum / n;
            ((self.sq - n * m * m) / (n - 1.0)).max(0.0).sqrt()
        })
    }
}

fn spreads(len: usize) -> Vec<Spread> {
    vec![Spread::default(); len]
}

/// Summary of residuals at one time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualSummary {
    pub t: usize,
    pub sites: Vec<usize>,
    pub residuals: Vec<f64>,
    pub stderr: Vec<Option<f64>>,
    pub max_abs: f64,
    pub l1: f64,
    /// Interior sites with `|r| ≤ 3·SE`.
    pub within_3se: usize,
}

/// Fitted quantities with bootstrap standard errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub samples: u64,
    pub total_sre: Vec<CurvePoint>,
    pub gamma: Option<DecayFit>,
    pub gamma_stderr: Option<f64>,
    pub normalization_included: Vec<bool>,
    pub residual_window: (usize, usize),
    pub residuals: Vec<ResidualSummary>,
    /// Fraction of interior residuals within three standard errors.
    pub residual_fraction_within_3se: Option<f64>,
    pub alpha_window: (usize, usize),
    pub alpha: Vec<GateRatio>,
    pub alpha_stderr: Vec<Option<f64>>,
    pub alpha_interior_mean: Option<f64>,
    pub alpha_interior_mean_stderr: Option<f64>,
    pub swap: Vec<SwapDelta>,
    pub sigma: Vec<Option<f64>>,
    pub sigma_stderr: Vec<Option<f64>>,
    pub beta: Option<WidthFit>,
    pub beta_stderr: Option<f64>,
    pub variance_slope: Option<LinearFit>,
    pub variance_slope_stderr: Option<f64>,
    pub interior_margin: usize,
    pub bootstrap_resamples: usize,
    pub classes: Vec<(String, u64)>,
    pub cone_violations: u64,
}

/// Seed of the bootstrap stream, fixed by the run seed.
fn bootstrap_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(u64::MAX);
    rng
}

/// Runs every fit on the merged profile and bootstraps over batches.
pub fn analyze(profile: &SpreadProfile) -> FitReport {
    let config = &profile.config;
    let stats = &profile.stats;
    let n = stats.n_sites;
    let norm = normalize_profile(stats);
    let sigma = profile_width(&norm, config.magic_sites[0]);
    let beta_window = config.windows.beta.or_else(|| default_beta_window(&sigma, config.prewrap_time()));
    let plan = Plan {
        gamma_window: config.gamma_window(),
        residual_window: config.residual_window(),
        alpha_window: config.alpha_window(),
        beta_window,
    };
    let point = derive(stats, config, &plan);

    // bootstrap over batches
    let cells = (stats.depth + 1) * n;
    let (mut s_gamma, mut s_alpha_mean, mut s_beta, mut s_var) =
        (Spread::default(), Spread::default(), Spread::default(), Spread::default());
    let mut s_sigma = spreads(stats.depth + 1);
    let mut s_res = spreads(cells);
    let mut s_alpha = spreads(cells);
    let mut s_swap = spreads(cells);
    let nb = profile.batches.len();
    if nb >= 2 {
        let mut rng = bootstrap_rng(config.seed);
        let mut weights = vec![0u32; nb];
        for _ in 0..config.bootstrap_resamples {
            weights.iter_mut().for_each(|w| *w = 0);
            for _ in 0..nb {
                weights[rng.random_range(0..nb)] += 1;
            }
            let rs = ProfileStats::from_batches(n, stats.depth, &profile.batches, Some(&weights));
            let d = derive(&rs, config, &plan);
            s_gamma.push(d.gamma);
            s_alpha_mean.push(d.alpha_mean);
            s_beta.push(d.beta);
            s_var.push(d.variance_slope);
            for (s, v) in s_sigma.iter_mut().zip(&d.sigma) {
                s.push(*v);
            }
            for c in 0..cells {
                s_res[c].push(d.residual[c]);
                s_alpha[c].push(d.alpha[c]);
                s_swap[c].push(d.swap[c]);
            }
        }
    }

    let mut residuals = Vec::new();
    let (mut within, mut total) = (0usize, 0usize);
    for t in plan.residual_window.0.max(1)..=plan.residual_window.1 {
        if let Ok(r) = diffusion_residual(&norm, t, &config.magic_sites, config.interior_margin) {
            let stderr: Vec<Option<f64>> = r.sites.iter().map(|&i| s_res[t * n + i].std()).collect();
            let ok = r
                .residuals
                .iter()
                .zip(&stderr)
                .filter(|(v, se)| se.is_some_and(|se| v.abs() <= 3.0 * se))
                .count();
            within += ok;
            total += r.sites.len();
            residuals.push(ResidualSummary {
                t,
                sites: r.sites,
                residuals: r.residuals,
                stderr,
                max_abs: r.max_abs,
                l1: r.l1,
                within_3se: ok,
            });
        }
    }

    let alpha = gate_io_ratio(stats, &config.magic_sites, config.interior_margin);
    let alpha_stderr = alpha.iter().map(|g| s_alpha[g.t * n + g.i].std()).collect();
    let swap = swap_symmetry_check(stats)
        .into_iter()
        .map(|mut s| {
            s.z = s_swap[s.t * n + s.i].std().filter(|&se| se > 0.0).map(|se| s.delta / se);
            s
        })
        .collect();

    FitReport {
        samples: stats.count,
        total_sre: total_sre_curve(stats),
        gamma: fit_decay_rate(&stats.total, plan.gamma_window).ok(),
        gamma_stderr: s_gamma.std(),
        normalization_included: norm.included.clone(),
        residual_window: plan.residual_window,
        residuals,
        residual_fraction_within_3se: (total > 0).then(|| within as f64 / total as f64),
        alpha_window: plan.alpha_window,
        alpha,
        alpha_stderr,
        alpha_interior_mean: point.alpha_mean,
        alpha_interior_mean_stderr: s_alpha_mean.std(),
        swap,
        sigma: point.sigma,
        sigma_stderr: s_sigma.iter().map(Spread::std).collect(),
        beta: beta_window.and_then(|w| fit_width_exponent(&sigma, w).ok()),
        beta_stderr: s_beta.std(),
        variance_slope: beta_window.and_then(|w| fit_variance_slope(&sigma, w).ok()),
        variance_slope_stderr: s_var.std(),
        interior_margin: config.interior_margin,
        bootstrap_resamples: config.bootstrap_resamples,
        classes: CLASS_NAMES.iter().map(|s| s.to_string()).zip(profile.classes).collect(),
        cone_violations: profile.cone_violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sre::LN_4_3;

    fn binomial_profiles(n: usize, center: usize, depth: usize) -> NormalizedProfile {
        let mut a = vec![vec![0.0; n]; depth + 1];
        a[0][center] = 1.0;
        for t in 1..=depth {
            for i in 0..n {
                a[t][i] = 0.5 * (a[t - 1][(i + n - 1) % n] + a[t - 1][(i + 1) % n]);
            }
        }
        NormalizedProfile { a, included: vec![true; depth + 1] }
    }

    #[test]
    fn decay_fit_on_exact_exponential() {
        let curve: Vec<f64> = (0..20).map(|t| (-0.5 * t as f64).exp()).collect();
        let f = fit_decay_rate(&curve, (4, 12)).unwrap();
        assert!((f.gamma - 0.5).abs() < 1e-12);
        assert!((f.fit.r_squared - 1.0).abs() < 1e-12);
        let mut bad = curve.clone();
        bad[6] = 0.0;
        assert!(fit_decay_rate(&bad, (4, 12)).is_err());
    }

    #[test]
    fn random_walk_family() {
        let a = binomial_profiles(200, 100, 64);
        for t in 1..=64 {
            let r = diffusion_residual(&a, t, &[100], 0).unwrap();
            assert!(r.max_abs < 1e-15);
        }
        let sigma = profile_width(&a, 100);
        assert_eq!(sigma[0], Some(0.0));
        let w = fit_width_exponent(&sigma, (4, 64)).unwrap();
        assert!((w.beta - 0.5).abs() < 0.02);
        let v = fit_variance_slope(&sigma, (4, 64)).unwrap();
        assert!((v.slope - 1.0).abs() < 1e-9);
    }

    #[test]
    fn displacement_wraps() {
        assert_eq!(displacement(1, 29, 30), 2);
        assert_eq!(displacement(28, 2, 30), -4);
        assert_eq!(displacement(15, 15, 30), 0);
        assert_eq!(interior_sites(4, &[15], 30, 2), vec![14, 15, 16]);
    }

    #[test]
    fn identity_override_freezes_profile() {
        let cfg = RunConfig::new(8, 4, 3, 1, vec![3], GateKind::Identity);
        let p = run_monte_carlo(&cfg).unwrap();
        for t in 0..=4 {
            for i in 0..8 {
                let expected = if i == 3 { LN_4_3 } else { 0.0 };
                assert!((p.mean(t, i) - expected).abs() < 1e-15);
                assert!(p.sem(t, i) < 1e-15);
            }
            assert!((p.stats.total[t] - LN_4_3).abs() < 1e-15);
        }
        for s in swap_symmetry_check(&p.stats) {
            if s.i != 3 && s.j != 3 {
                assert_eq!(s.delta, 0.0);
            }
        }
    }

    #[test]
    fn initial_totals_are_additive() {
        let cfg = RunConfig::new(10, 3, 20, 4, vec![2, 7], GateKind::FullClifford);
        let p = run_monte_carlo(&cfg).unwrap();
        assert!((p.stats.total[0] - 2.0 * LN_4_3).abs() < 1e-15);
        assert_eq!(p.cone_violations, 0);
        let norm = normalize_profile(&p.stats);
        for t in (0..=3).filter(|&t| norm.included[t]) {
            assert!((norm.a[t].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let cfg = RunConfig::new(6, 4, 200, 99, vec![2], GateKind::FullClifford);
        let a = run_monte_carlo_with_threads(&cfg, 1).unwrap();
        let b = run_monte_carlo_with_threads(&cfg, 2).unwrap();
        let c = run_monte_carlo_with_threads(&cfg, 8).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn config_validation() {
        let mut cfg = RunConfig::new(8, 4, 10, 0, vec![3], GateKind::FullClifford);
        assert!(cfg.validate().is_ok());
        cfg.magic_sites = vec![3, 3];
        assert!(cfg.validate().is_err());
        cfg.magic_sites = vec![8];
        assert!(cfg.validate().is_err());
        cfg.magic_sites = vec![1];
        cfg.n_sites = 7;
        assert!(cfg.validate().is_err());
        cfg.n_sites = 8;
        cfg.max_work = 10.0;
        assert!(matches!(cfg.validate(), Err(Error::ResourceCap(_))));
    }

    #[test]
    fn batches_cover_samples() {
        let cfg = RunConfig::new(8, 4, 2501, 0, vec![3], GateKind::FullClifford);
        let nb = cfg.n_batches();
        assert_eq!(nb, 1000);
        let covered: u64 = (0..nb).map(|b| cfg.batch_range(b).count() as u64).sum();
        assert_eq!(covered, 2501);
        assert_eq!(cfg.batch_range(nb - 1).end, 2501);
    }
}
