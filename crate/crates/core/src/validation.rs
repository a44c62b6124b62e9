//! Monte Carlo ensembles, Kolmogorov-Smirnov distances, power-law fits and
//! potential estimates.
//!
//! Every estimator here is a deterministic function of its configuration
//! and seed: path `k` always draws from stream `k`, results are collected in
//! path order and reduced by pairwise summation, so the worker count never
//! changes a result.

use rayon::prelude::*;

use crate::ctrw_chain::{self, ChainStepper, StreamState};
use crate::error::{Error, Result};
use crate::grid::GridMeasure;
use crate::limit_sampler::{self, PairStepper, ProbeCursor};
use crate::model::ModelSpec;
use crate::rng::{path_rng, with_workers};
use crate::special::pairwise_sum;

/// Extra attempts for a path that runs out of horizon; each doubles it.
pub const RETRY_BUDGET: usize = 3;

/// Largest tolerated fraction of paths still exhausted after retries.
pub const MAX_DROPPED_FRACTION: f64 = 1e-3;

/// Asymptotic KS critical value `sqrt(-ln(alpha / 2) / 2)` (1.628 at 99%).
pub fn ks_critical(alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt()
}

/// One-sample 99% threshold `1.628 / sqrt(n)`.
pub fn ks_threshold_one(n: usize) -> f64 {
    ks_critical(0.01) / (n as f64).sqrt()
}

/// Two-sample 99% threshold `1.628 sqrt((n + m) / (n m))`.
pub fn ks_threshold_two(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    ks_critical(0.01) * ((n + m) / (n * m)).sqrt()
}

/// Simulation engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    /// Pre-limit chain at scale `c`.
    Chain { c: f64 },
    /// Limit pair on operational-time steps `dr`.
    Limit { dr: f64 },
}

/// Where a sample came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub spec: String,
    pub t: f64,
    pub paths: usize,
    pub seed: u64,
}

/// Finite sample of points in `R^dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    pub dim: usize,
    pub values: Vec<f64>,
    /// Optional weights, nonnegative and summing to one.
    pub weights: Option<Vec<f64>>,
    pub provenance: Provenance,
}

impl EmpiricalSample {
    pub fn new(dim: usize, values: Vec<f64>, weights: Option<Vec<f64>>, provenance: Provenance) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::config("sample length is not a multiple of its dimension"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("sample values must be finite"));
        }
        if let Some(w) = &weights {
            if w.len() * dim != values.len() || w.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::domain("weights must be nonnegative, one per point"));
            }
            if (pairwise_sum(w) - 1.0).abs() > 1e-9 {
                return Err(Error::domain("weights must sum to one"));
            }
        }
        Ok(Self {
            dim,
            values,
            weights,
            provenance,
        })
    }

    /// Unweighted one-dimensional sample.
    pub fn scalars(values: Vec<f64>) -> Result<Self> {
        let provenance = Provenance {
            spec: String::new(),
            t: f64::NAN,
            paths: values.len(),
            seed: 0,
        };
        Self::new(1, values, None, provenance)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Coordinate `k` of every point.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.values.iter().skip(k).step_by(self.dim).copied().collect()
    }

    fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.len() as f64,
        }
    }

    /// Mean of coordinate `k`.
    pub fn mean(&self, k: usize) -> f64 {
        let c = self.component(k);
        let terms: Vec<f64> = c.iter().enumerate().map(|(i, v)| self.weight(i) * v).collect();
        pairwise_sum(&terms)
    }

    /// Variance of coordinate `k` (unbiased for unweighted samples).
    pub fn variance(&self, k: usize) -> f64 {
        let m = self.mean(k);
        let c = self.component(k);
        let terms: Vec<f64> = c
            .iter()
            .enumerate()
            .map(|(i, v)| self.weight(i) * (v - m).powi(2))
            .collect();
        let n = self.len() as f64;
        match self.weights {
            None if n > 1.0 => pairwise_sum(&terms) * n / (n - 1.0),
            _ => pairwise_sum(&terms),
        }
    }

    /// Second moment of the Euclidean norm.
    pub fn mean_square_norm(&self) -> f64 {
        let terms: Vec<f64> = self
            .values
            .chunks(self.dim)
            .enumerate()
            .map(|(i, p)| self.weight(i) * p.iter().map(|v| v * v).sum::<f64>())
            .collect();
        pairwise_sum(&terms)
    }

    /// Weighted fraction of points satisfying `pred`.
    pub fn fraction_where(&self, pred: impl Fn(&[f64]) -> bool) -> f64 {
        let terms: Vec<f64> = self
            .values
            .chunks(self.dim)
            .enumerate()
            .map(|(i, p)| if pred(p) { self.weight(i) } else { 0.0 })
            .collect();
        pairwise_sum(&terms)
    }

    /// Sorted `(value, weight)` pairs of a one-dimensional sample.
    fn sorted_1d(&self) -> Result<Vec<(f64, f64)>> {
        if self.dim != 1 {
            return Err(Error::unsupported("KS distances are one-dimensional"));
        }
        if self.is_empty() {
            return Err(Error::Empty("sample"));
        }
        let mut pts: Vec<(f64, f64)> = (0..self.len()).map(|i| (self.values[i], self.weight(i))).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(pts)
    }
}

/// Reference law for [`ks_distance`].
pub enum KsReference<'a> {
    Sample(&'a EmpiricalSample),
    Cdf(&'a dyn Fn(f64) -> f64),
    /// Time level `j` of a grid measure, normalized.
    Slice(&'a GridMeasure, usize),
}

/// `sup_x |F_sample(x) - F_reference(x)|`.
pub fn ks_distance(sample: &EmpiricalSample, reference: KsReference<'_>) -> Result<f64> {
    match reference {
        KsReference::Sample(other) => ks_two_sample(sample, other),
        KsReference::Cdf(cdf) => ks_one_sample(sample, cdf),
        KsReference::Slice(m, j) => {
            if j >= m.t.n {
                return Err(Error::config("slice index outside the time grid"));
            }
            if !(m.level_mass(j) > 0.0) {
                return Err(Error::Empty("grid measure slice"));
            }
            let cdf = crate::forward::slice_cdf(m, j);
            ks_one_sample(sample, &cdf)
        }
    }
}

fn ks_one_sample(sample: &EmpiricalSample, cdf: &dyn Fn(f64) -> f64) -> Result<f64> {
    let pts = sample.sorted_1d()?;
    let mut below = 0.0;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < pts.len() {
        let x = pts[i].0;
        let mut w = 0.0;
        while i < pts.len() && pts[i].0 == x {
            w += pts[i].1;
            i += 1;
        }
        let f = cdf(x);
        worst = worst.max((f - below).abs()).max((below + w - f).abs());
        below += w;
    }
    Ok(worst.min(1.0))
}

fn ks_two_sample(a: &EmpiricalSample, b: &EmpiricalSample) -> Result<f64> {
    let (pa, pb) = (a.sorted_1d()?, b.sorted_1d()?);
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0, 0.0);
    let mut worst: f64 = 0.0;
    while i < pa.len() || j < pb.len() {
        let x = match (pa.get(i), pb.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        while i < pa.len() && pa[i].0 == x {
            fa += pa[i].1;
            i += 1;
        }
        while j < pb.len() && pb[j].0 == x {
            fb += pb[j].1;
            j += 1;
        }
        worst = worst.max((fa - fb).abs());
    }
    Ok(worst.min(1.0))
}

/// Laws of `X(t)` (and optionally `Y(t)`) at sorted probe times.
#[derive(Debug, Clone)]
pub struct LawEstimate {
    pub times: Vec<f64>,
    /// One sample per probe time.
    pub x: Vec<EmpiricalSample>,
    pub y: Option<Vec<EmpiricalSample>>,
    /// Paths that needed at least one horizon extension.
    pub retried: usize,
    /// Paths dropped after the retry budget.
    pub dropped: usize,
}

/// Ensemble configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub n_paths: usize,
    pub seed: u64,
    pub workers: Option<usize>,
    pub engine: Engine,
    /// Also record the overshooting process `Y` (limit engine only).
    pub octrw: bool,
}

struct PathOut {
    xs: Vec<f64>,
    ys: Vec<f64>,
    retries: usize,
}

/// i.i.d. samples of `X^c(t)` or `X(t)` started at `(x0, s0)`, at each of
/// the increasing probe times.
pub fn mc_law_estimate(spec: &ModelSpec, x0: &[f64], s0: f64, times: &[f64], ens: &Ensemble) -> Result<LawEstimate> {
    if ens.n_paths == 0 {
        return Err(Error::config("n_paths must be at least 1"));
    }
    if times.is_empty() {
        return Err(Error::Empty("probe times"));
    }
    if times.windows(2).any(|w| !(w[1] >= w[0])) || !(times[0] >= s0) {
        return Err(Error::domain("probe times must be sorted and not before s0"));
    }
    if ens.octrw && matches!(ens.engine, Engine::Chain { .. }) {
        return Err(Error::unsupported(
            "the overshooting process is sampled from the limit engine",
        ));
    }
    let horizon = times[times.len() - 1] - s0;
    let run = |k: usize| -> Result<Option<PathOut>> {
        let mut rng = path_rng(ens.seed, k as u64);
        let mut xs = Vec::with_capacity(times.len() * x0.len());
        let mut ys = Vec::new();
        let mut retries = 0;
        match ens.engine {
            Engine::Limit { dr } => {
                let mut stepper = PairStepper::new(spec, x0, s0, dr)?;
                let mut cursor = ProbeCursor::default();
                let mut r_max = initial_operational_horizon(spec, horizon);
                loop {
                    let y = ens.octrw.then_some(&mut ys);
                    match limit_sampler::stream_probes(&mut stepper, &mut cursor, times, r_max, &mut rng, &mut xs, y) {
                        Ok(()) => break,
                        Err(Error::Horizon { .. }) if retries < RETRY_BUDGET => {
                            retries += 1;
                            r_max *= 2.0;
                        }
                        Err(Error::Horizon { .. }) => return Ok(None),
                        Err(e) => return Err(e),
                    }
                }
            }
            Engine::Chain { c } => {
                let mut stepper = ChainStepper::new(spec, c)?;
                let mut state = StreamState::start(&mut stepper, x0, s0, &mut rng)?;
                let mut budget = initial_chain_budget(c, horizon);
                loop {
                    match ctrw_chain::stream_probes(&mut stepper, &mut state, times, &mut rng, budget, &mut xs) {
                        Ok(()) => break,
                        Err(Error::Horizon { .. }) if retries < RETRY_BUDGET => {
                            retries += 1;
                            budget *= 2;
                        }
                        Err(Error::Horizon { .. }) => return Ok(None),
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        Ok(Some(PathOut { xs, ys, retries }))
    };
    let outs: Vec<Result<Option<PathOut>>> =
        with_workers(ens.workers, || (0..ens.n_paths).into_par_iter().map(run).collect())?;
    let d = x0.len();
    let nt = times.len();
    let mut xcols: Vec<Vec<f64>> = vec![Vec::with_capacity(ens.n_paths * d); nt];
    let mut ycols: Vec<Vec<f64>> = vec![Vec::new(); if ens.octrw { nt } else { 0 }];
    let (mut dropped, mut retried) = (0, 0);
    for out in outs {
        match out? {
            None => dropped += 1,
            Some(p) => {
                retried += usize::from(p.retries > 0);
                for (k, col) in xcols.iter_mut().enumerate() {
                    col.extend_from_slice(&p.xs[k * d..(k + 1) * d]);
                }
                for (k, col) in ycols.iter_mut().enumerate() {
                    col.extend_from_slice(&p.ys[k * d..(k + 1) * d]);
                }
            }
        }
    }
    if dropped as f64 > MAX_DROPPED_FRACTION * ens.n_paths as f64 {
        return Err(Error::Exhausted {
            dropped,
            total: ens.n_paths,
        });
    }
    if dropped == ens.n_paths {
        return Err(Error::Exhausted {
            dropped,
            total: ens.n_paths,
        });
    }
    let kept = ens.n_paths - dropped;
    let wrap = |cols: Vec<Vec<f64>>| -> Result<Vec<EmpiricalSample>> {
        cols.into_iter()
            .zip(times)
            .map(|(v, &t)| {
                let prov = Provenance {
                    spec: spec.name.clone(),
                    t,
                    paths: kept,
                    seed: ens.seed,
                };
                EmpiricalSample::new(d, v, None, prov)
            })
            .collect()
    };
    Ok(LawEstimate {
        times: times.to_vec(),
        x: wrap(xcols)?,
        y: if ens.octrw { Some(wrap(ycols)?) } else { None },
        retried,
        dropped,
    })
}

/// Single-time convenience wrapper around [`mc_law_estimate`].
pub fn mc_law_at(spec: &ModelSpec, x0: &[f64], s0: f64, t: f64, ens: &Ensemble) -> Result<EmpiricalSample> {
    Ok(mc_law_estimate(spec, x0, s0, &[t], ens)?.x.remove(0))
}

/// Operational time comfortably past `E(s0 + horizon)` for typical paths.
fn initial_operational_horizon(spec: &ModelSpec, horizon: f64) -> f64 {
    let beta = spec.tail.beta_at(&vec![0.0; spec.dim()]).unwrap_or(1.0);
    let h = horizon.max(1.0);
    let gamma = spec.coeffs.gamma.as_constant().unwrap_or(0.0);
    let by_drift = if gamma > 0.0 { horizon / gamma } else { 0.0 };
    (64.0 * h.powf(beta.max(0.5))).max(by_drift * 1.01 + 1.0)
}

fn initial_chain_budget(c: f64, horizon: f64) -> usize {
    (64.0 * c * horizon.max(1.0)).ceil() as usize + 1024
}

/// Least-squares fit of `log v = a + p log t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    pub stderr: f64,
    pub prefactor: f64,
}

/// Log-log slope of `values` against `ts`, with its standard error.
pub fn fit_power_exponent(ts: &[f64], values: &[f64]) -> Result<PowerFit> {
    if ts.len() != values.len() {
        return Err(Error::config("times and values differ in length"));
    }
    if ts.len() < 3 {
        return Err(Error::domain("power fit needs at least three points"));
    }
    if ts.iter().chain(values).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::domain("power fit needs positive finite times and values"));
    }
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = pairwise_sum(&lx) / n;
    let my = pairwise_sum(&ly) / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("power fit needs distinct times"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let p = sxy / sxx;
    let a = my - p * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - a - p * x).powi(2)).sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(PowerFit {
        exponent: p,
        stderr,
        prefactor: a.exp(),
    })
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct McMean {
    pub mean: f64,
    pub stderr: f64,
    pub paths: usize,
    pub warnings: Vec<String>,
}

fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = pairwise_sum(v) / n;
    let sq: Vec<f64> = v.iter().map(|x| (x - m).powi(2)).collect();
    let var = if n > 1.0 { pairwise_sum(&sq) / (n - 1.0) } else { 0.0 };
    (m, (var / n).sqrt())
}

/// Potential `U F(x, s) = E int_0^{r_max} F(A_r, D_r) dr` over limit paths.
/// `F` must vanish for times above `clear_level`; paths whose clock has
/// not passed it by `r_max` are reported in a warning.
#[allow(clippy::too_many_arguments)]
pub fn potential_estimate(
    spec: &ModelSpec,
    big_f: &(dyn Fn(&[f64], f64) -> f64 + Sync),
    x: &[f64],
    s: f64,
    clear_level: f64,
    r_max: f64,
    dr: f64,
    ens_paths: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<McMean> {
    if ens_paths == 0 {
        return Err(Error::config("n_paths must be at least 1"));
    }
    let run = |k: usize| -> Result<(f64, bool)> {
        let mut rng = path_rng(seed, k as u64);
        let mut stepper = PairStepper::new(spec, x, s, dr)?;
        limit_sampler::potential_integral(&mut stepper, big_f, clear_level, r_max, &mut rng)
    };
    let outs: Vec<Result<(f64, bool)>> = with_workers(workers, || (0..ens_paths).into_par_iter().map(run).collect())?;
    let mut vals = Vec::with_capacity(ens_paths);
    let mut stuck = 0usize;
    for o in outs {
        let (v, cleared) = o?;
        vals.push(v);
        stuck += usize::from(!cleared);
    }
    let (mean, stderr) = mean_and_stderr(&vals);
    let mut warnings = Vec::new();
    if stuck as f64 > 0.01 * ens_paths as f64 {
        warnings.push(format!(
            "horizon warning: {stuck} of {ens_paths} paths did not clear s = {clear_level} by r = {r_max}"
        ));
    }
    Ok(McMean {
        mean,
        stderr,
        paths: ens_paths,
        warnings,
    })
}

/// `E int g(t) f(X_t) dt` over limit paths started at `(x0, s0)`, with `G`
/// the antiderivative of `g` and `g = 0` above `t_hi`. This is the
/// probabilistic side of the backward equation.
#[allow(clippy::too_many_arguments)]
pub fn time_integral_estimate(
    spec: &ModelSpec,
    big_g: &(dyn Fn(f64) -> f64 + Sync),
    t_hi: f64,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    x0: &[f64],
    s0: f64,
    dr: f64,
    ens_paths: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<McMean> {
    if ens_paths == 0 {
        return Err(Error::config("n_paths must be at least 1"));
    }
    let horizon = t_hi - s0;
    let run = |k: usize| -> Result<Option<f64>> {
        let rng = path_rng(seed, k as u64);
        let mut r_max = initial_operational_horizon(spec, horizon);
        for _ in 0..=RETRY_BUDGET {
            let mut stepper = PairStepper::new(spec, x0, s0, dr)?;
            let mut local = rng.clone();
            match limit_sampler::path_integral(&mut stepper, big_g, t_hi, f, r_max, &mut local) {
                Ok(v) => return Ok(Some(v)),
                Err(Error::Horizon { .. }) => r_max *= 2.0,
                Err(e) => return Err(e),
            }
        }
        Ok(None)
    };
    let outs: Vec<Result<Option<f64>>> = with_workers(workers, || (0..ens_paths).into_par_iter().map(run).collect())?;
    let mut vals = Vec::with_capacity(ens_paths);
    let mut dropped = 0;
    for o in outs {
        match o? {
            Some(v) => vals.push(v),
            None => dropped += 1,
        }
    }
    if dropped as f64 > MAX_DROPPED_FRACTION * ens_paths as f64 || vals.is_empty() {
        return Err(Error::Exhausted {
            dropped,
            total: ens_paths,
        });
    }
    let (mean, stderr) = mean_and_stderr(&vals);
    Ok(McMean {
        mean,
        stderr,
        paths: vals.len(),
        warnings: Vec::new(),
    })
}

/// One-sided two-proportion z statistic for `p2 > p1`.
pub fn two_proportion_z(p1: f64, n1: usize, p2: f64, n2: usize) -> f64 {
    let (n1, n2) = (n1 as f64, n2 as f64);
    let pooled = (p1 * n1 + p2 * n2) / (n1 + n2);
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)).sqrt();
    if se == 0.0 {
        return if p2 > p1 { f64::INFINITY } else { 0.0 };
    }
    (p2 - p1) / se
}

/// Pass/fail outcome of one check.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Verdict {
    pub check_id: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Verdict {
    /// Passes when `statistic <= threshold`.
    pub fn at_most(id: &str, statistic: f64, threshold: f64) -> Self {
        Self {
            check_id: id.into(),
            statistic,
            threshold,
            pass: statistic <= threshold,
        }
    }

    /// Passes when `statistic >= threshold`.
    pub fn at_least(id: &str, statistic: f64, threshold: f64) -> Self {
        Self {
            check_id: id.into(),
            statistic,
            threshold,
            pass: statistic >= threshold,
        }
    }
}

/// Sizes for [`subdiffusion_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub workers: Option<usize>,
    pub dr: f64,
    pub grid_x: usize,
    pub grid_t: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            seed: 1,
            workers: None,
            dr: 1e-2,
            grid_x: 401,
            grid_t: 2001,
        }
    }
}

/// Checks for driftless `beta = 1/2` subdiffusion with `a = 1` from the
/// origin: variance at `t = 1`, the variance exponent, forward solver
/// against Monte Carlo, and `X = Y` in law.
pub fn subdiffusion_suite(cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    use crate::forward::{solve_fpe, InitialMeasure};
    use crate::grid::Grid1d;
    use crate::model::{subdiffusion_preset, ScalarField};
    let spec = subdiffusion_preset(0.5, ScalarField::zero())?;
    let ts = [1.0, 2.0, 4.0, 8.0, 16.0];
    let ens = Ensemble {
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        workers: cfg.workers,
        engine: Engine::Limit { dr: cfg.dr },
        octrw: true,
    };
    let law = mc_law_estimate(&spec, &[0.0], 0.0, &ts, &ens)?;
    let exact = 1.0 / crate::special::gamma(1.5);
    let var1 = law.x[0].variance(0);
    let mut out = vec![Verdict::at_most(
        "variance_t1_rel_error",
        (var1 / exact - 1.0).abs(),
        0.03,
    )];
    let vars: Vec<f64> = law.x.iter().map(|s| s.variance(0)).collect();
    let fit = fit_power_exponent(&ts, &vars)?;
    out.push(Verdict::at_most(
        "variance_exponent_error",
        (fit.exponent - 0.5).abs(),
        0.05,
    ));
    let x = Grid1d::centered(8.0, cfg.grid_x)?;
    let t = Grid1d::new(0.0, 1.0, cfg.grid_t)?;
    let sol = solve_fpe(&spec, &InitialMeasure::Point(0.0), 0.0, x, t, &Default::default())?;
    let ks = ks_distance(&law.x[0], KsReference::Slice(&sol.measure, t.n - 1))?;
    out.push(Verdict::at_most("ks_forward_vs_mc", ks, 0.02));
    let y = law.y.as_ref().expect("octrw requested");
    let ks_xy = ks_distance(&law.x[0], KsReference::Sample(&y[0]))?;
    out.push(Verdict::at_most(
        "ks_ctrw_vs_octrw",
        ks_xy,
        ks_threshold_two(law.x[0].len(), y[0].len()),
    ));
    Ok(out)
}
