//! Limit space-time pair `(A_r, D_r)`, the inverse time change
//! `E(t) = inf{u : D_u > t}` and the limits `X(t) = A(E(t)-)`,
//! `Y(t) = A(E(t))`.
//!
//! Paths are built from steps. Each step runs a continuous segment (drift,
//! diffusion, temporal drift and small-jump compensators) from
//! `(r0, A0, D0)` to `(r1, A_pre, D_pre)` and then a jump at `r1` to
//! `(A1, D1)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{
    psd_cholesky, stable_small_jump_mean, stable_tail, Coupling, DirectionWeights, ModelSpec, TabulatedTail,
    TemporalTail,
};
use crate::rng::open_unit;
use crate::special::compensated_sum;

/// Default operational-time step.
pub const DEFAULT_DR: f64 = 1e-3;

/// Largest number of steps a stored path may hold.
pub const MAX_STORED_STEPS: f64 = 1e8;

/// `dr^{1/beta} S` with `E exp(-lambda S) = exp(-lambda^beta)`, by the
/// Chambers-Mallows-Stuck transform.
pub fn sample_stable_increment<R: Rng + ?Sized>(beta: f64, dr: f64, rng: &mut R) -> f64 {
    if dr <= 0.0 {
        return 0.0;
    }
    dr.powf(1.0 / beta) * standard_positive_stable(beta, rng)
}

#[inline]
fn standard_positive_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let u = PI * open_unit(rng);
    let w: f64 = Exp1.sample(rng);
    let num = (beta * u).sin();
    let den = u.sin().powf(1.0 / beta);
    num / den * ((1.0 - beta) * u).sin().powf((1.0 - beta) / beta) * w.powf(-(1.0 - beta) / beta)
}

/// One step of the pair, with the positions held by the stepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub r0: f64,
    pub d0: f64,
    pub r1: f64,
    pub d_pre: f64,
    pub d1: f64,
}

impl Step {
    pub fn jump(&self) -> f64 {
        self.d1 - self.d_pre
    }
}

enum Clock {
    /// Stable subordinator increments per step, order frozen at the step start.
    Stable,
    /// Compound Poisson from a tabulated tail.
    Tabulated(TabulatedTail),
}

enum Mode {
    Uncoupled {
        clock: Clock,
        diffusive: bool,
    },
    /// Jumps above `delta` are events; smaller ones are compensated.
    LevyWalk {
        dirs: DirectionWeights,
        delta: f64,
        tabulated: Option<TabulatedTail>,
        drift: bool,
    },
}

/// Advances `(A_r, D_r)` one step at a time.
pub struct PairStepper<'a> {
    spec: &'a ModelSpec,
    dr: f64,
    mode: Mode,
    step: Step,
    a0: Vec<f64>,
    a_pre: Vec<f64>,
    a1: Vec<f64>,
    theta: Vec<f64>,
    buf: Vec<f64>,
    diff: Vec<f64>,
    chol: Vec<f64>,
    noise: Vec<f64>,
    mean_dir: Vec<f64>,
    jump_size: f64,
}

impl<'a> PairStepper<'a> {
    pub fn new(spec: &'a ModelSpec, x0: &[f64], s0: f64, dr: f64) -> Result<Self> {
        if !(dr > 0.0 && dr.is_finite()) {
            return Err(Error::config(format!("step dr = {dr} must be positive")));
        }
        if x0.len() != spec.dim() || x0.iter().any(|v| !v.is_finite()) || !s0.is_finite() {
            return Err(Error::domain(
                "initial state must be finite and match the model dimension",
            ));
        }
        let d = spec.dim();
        let mode = match &spec.coupling {
            Coupling::Uncoupled => {
                let clock = match &spec.tail {
                    TemporalTail::Custom(t) => Clock::Tabulated(t.clone()),
                    _ => Clock::Stable,
                };
                Mode::Uncoupled {
                    clock,
                    diffusive: !spec.coeffs.diffusion.is_identically_zero(),
                }
            }
            Coupling::LevyWalk(dirs) => Mode::LevyWalk {
                dirs: dirs.clone(),
                delta: dr * dr,
                tabulated: match &spec.tail {
                    TemporalTail::Custom(t) => Some(t.clone()),
                    _ => None,
                },
                drift: !spec.coeffs.drift.iter().all(|b| b.is_identically_zero()),
            },
        };
        let mut mean_dir = vec![0.0; d];
        if let Coupling::LevyWalk(dirs) = &spec.coupling {
            dirs.mean(&mut mean_dir);
        }
        Ok(Self {
            spec,
            dr,
            mode,
            step: Step {
                r0: 0.0,
                d0: s0,
                r1: 0.0,
                d_pre: s0,
                d1: s0,
            },
            a0: x0.to_vec(),
            a_pre: x0.to_vec(),
            a1: x0.to_vec(),
            theta: vec![0.0; d],
            buf: vec![0.0; d],
            diff: vec![0.0; d * d],
            chol: vec![0.0; d * d],
            noise: vec![0.0; d],
            mean_dir,
            jump_size: 0.0,
        })
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    /// Current operational time.
    pub fn r(&self) -> f64 {
        self.step.r1
    }

    /// Current clock value `D_r`.
    pub fn d(&self) -> f64 {
        self.step.d1
    }

    pub fn last(&self) -> &Step {
        &self.step
    }

    /// `A` at the start of the last step.
    pub fn a0(&self) -> &[f64] {
        &self.a0
    }

    /// `A` just before the jump closing the last step.
    pub fn a_pre(&self) -> &[f64] {
        &self.a_pre
    }

    /// `A` after the last step.
    pub fn a1(&self) -> &[f64] {
        &self.a1
    }

    /// Size `w` of the clock jump closing the last step (0 if none).
    pub fn jump_size(&self) -> f64 {
        self.jump_size
    }

    /// Paired spatial displacement `w theta` of the last jump.
    pub fn jump_displacement(&self) -> impl Iterator<Item = f64> + '_ {
        self.theta.iter().map(move |t| t * self.jump_size)
    }

    /// Small-jump cutoff of the Levy-walk clock.
    pub fn cutoff(&self) -> Option<f64> {
        match self.mode {
            Mode::LevyWalk {
                delta, tabulated: None, ..
            } => Some(delta),
            _ => None,
        }
    }

    /// Mean of the truncated jumps per unit operational time.
    pub fn cutoff_rate(&self) -> f64 {
        match self.cutoff() {
            Some(delta) => stable_small_jump_mean(self.spec.tail.beta_at(&self.a1).unwrap(), delta),
            None => 0.0,
        }
    }

    /// Advances one step, never beyond `r_limit` (if larger than `r`).
    pub fn advance<R: Rng + ?Sized>(&mut self, r_limit: f64, rng: &mut R) -> Result<&Step> {
        std::mem::swap(&mut self.a0, &mut self.a1);
        let (r0, d0) = (self.step.r1, self.step.d1);
        let x = &self.a0;
        let d = x.len();
        let gamma = self.spec.coeffs.gamma_at(x, d0);
        self.spec.coeffs.drift_at(x, d0, &mut self.buf);
        let mut h = self.dr;
        if r_limit > r0 {
            h = h.min(r_limit - r0);
        }
        let (d_pre, d1);
        match &self.mode {
            Mode::Uncoupled { clock, diffusive } => {
                let sq = h.sqrt();
                self.a_pre.copy_from_slice(x);
                for i in 0..d {
                    self.a_pre[i] += self.buf[i] * h;
                }
                if *diffusive {
                    self.spec.coeffs.diffusion.matrix(x, d0, &mut self.diff);
                    psd_cholesky(&self.diff, d, &mut self.chol)
                        .ok_or_else(|| Error::domain("diffusion matrix is not positive semidefinite"))?;
                    for z in self.noise.iter_mut() {
                        *z = rng.sample(StandardNormal);
                    }
                    for i in 0..d {
                        let mut acc = 0.0;
                        for j in 0..=i {
                            acc += self.chol[i * d + j] * self.noise[j];
                        }
                        self.a_pre[i] += sq * acc;
                    }
                }
                d_pre = d0 + gamma * h;
                let jump = match clock {
                    Clock::Stable => {
                        let beta = self.spec.tail.beta_at(x).unwrap();
                        sample_stable_increment(beta, h, rng)
                    }
                    Clock::Tabulated(t) => {
                        let rate = t.total_mass() * h;
                        if rate > 0.0 {
                            let n = Poisson::new(rate).map(|p| p.sample(rng)).unwrap_or(0.0) as usize;
                            compensated_sum((0..n).map(|_| t.inverse(open_unit(rng))))
                        } else {
                            0.0
                        }
                    }
                };
                d1 = d_pre + jump;
                self.jump_size = jump;
                self.theta.iter_mut().for_each(|t| *t = 0.0);
                self.a1.copy_from_slice(&self.a_pre);
            }
            Mode::LevyWalk {
                dirs,
                delta,
                tabulated,
                drift,
            } => {
                let (rate, comp) = match tabulated {
                    Some(t) => (t.total_mass(), 0.0),
                    None => {
                        let beta = self.spec.tail.beta_at(x).unwrap();
                        (stable_tail(beta, *delta), stable_small_jump_mean(beta, *delta))
                    }
                };
                let wait = if rate > 0.0 {
                    {
                        let e: f64 = Exp1.sample(rng);
                        e / rate
                    }
                } else {
                    f64::INFINITY
                };
                let mut seg = if *drift { h } else { f64::INFINITY };
                if r_limit > r0 {
                    seg = seg.min(r_limit - r0);
                }
                let event = wait < seg;
                h = if event { wait } else { seg };
                if !h.is_finite() {
                    return Err(Error::config(
                        "Levy-walk path without events needs a finite operational horizon",
                    ));
                }
                for i in 0..d {
                    self.a_pre[i] = x[i] + (self.buf[i] + comp * self.mean_dir[i]) * h;
                }
                d_pre = d0 + (gamma + comp) * h;
                self.a1.copy_from_slice(&self.a_pre);
                if event {
                    let w = match tabulated {
                        Some(t) => t.inverse(open_unit(rng)),
                        None => {
                            let beta = self.spec.tail.beta_at(x).unwrap();
                            delta * open_unit(rng).powf(-1.0 / beta)
                        }
                    };
                    dirs.sample(rng, &mut self.theta);
                    for i in 0..d {
                        self.a1[i] += w * self.theta[i];
                    }
                    d1 = d_pre + w;
                    self.jump_size = w;
                } else {
                    d1 = d_pre;
                    self.jump_size = 0.0;
                }
            }
        }
        self.step = Step {
            r0,
            d0,
            r1: r0 + h,
            d_pre,
            d1,
        };
        Ok(&self.step)
    }
}

/// Record of a clock jump in a stored path.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    /// Node index at which the jump occurs.
    pub node: usize,
    pub size: f64,
    /// Paired spatial jump (zero for uncoupled models).
    pub displacement: Vec<f64>,
}

/// Stored realization of `(A_r, D_r)` on `[0, r_max]`.
#[derive(Debug, Clone)]
pub struct SpaceTimePath {
    dim: usize,
    dr: f64,
    r: Vec<f64>,
    d_pre: Vec<f64>,
    d: Vec<f64>,
    a_pre: Vec<f64>,
    a: Vec<f64>,
    jumps: Vec<JumpRecord>,
    cutoff_bound: f64,
}

/// Samples `(A_r, D_r)` for `r` in `[0, r_max]`.
pub fn sample_pair_path<R: Rng + ?Sized>(
    spec: &ModelSpec,
    x0: &[f64],
    s0: f64,
    r_max: f64,
    dr: f64,
    rng: &mut R,
) -> Result<SpaceTimePath> {
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::config(format!("r_max = {r_max} must be positive")));
    }
    if !(dr > 0.0) || r_max / dr > MAX_STORED_STEPS {
        return Err(Error::config(format!(
            "r_max / dr = {} exceeds the stored-path limit {MAX_STORED_STEPS:e}",
            r_max / dr
        )));
    }
    let mut stepper = PairStepper::new(spec, x0, s0, dr)?;
    let d = x0.len();
    let mut path = SpaceTimePath {
        dim: d,
        dr,
        r: vec![0.0],
        d_pre: vec![s0],
        d: vec![s0],
        a_pre: x0.to_vec(),
        a: x0.to_vec(),
        jumps: Vec::new(),
        cutoff_bound: 0.0,
    };
    let mut bound = Vec::new();
    while stepper.r() < r_max * (1.0 - 1e-15) {
        let rate = stepper.cutoff_rate();
        let step = *stepper.advance(r_max, rng)?;
        bound.push(rate * (step.r1 - step.r0));
        path.r.push(step.r1);
        path.d_pre.push(step.d_pre);
        path.d.push(step.d1);
        path.a_pre.extend_from_slice(stepper.a_pre());
        path.a.extend_from_slice(stepper.a1());
        if stepper.jump_size() > 0.0 {
            let node = path.r.len() - 1;
            let displacement = stepper.jump_displacement().collect();
            path.jumps.push(JumpRecord {
                node,
                size: stepper.jump_size(),
                displacement,
            });
        }
    }
    path.cutoff_bound = compensated_sum(bound);
    Ok(path)
}

impl SpaceTimePath {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn r(&self, k: usize) -> f64 {
        self.r[k]
    }

    /// `D(r_k)`.
    pub fn d(&self, k: usize) -> f64 {
        self.d[k]
    }

    /// `D(r_k-)`.
    pub fn d_pre(&self, k: usize) -> f64 {
        self.d_pre[k]
    }

    /// `A(r_k)`.
    pub fn a(&self, k: usize) -> &[f64] {
        &self.a[k * self.dim..(k + 1) * self.dim]
    }

    /// `A(r_k-)`.
    pub fn a_pre(&self, k: usize) -> &[f64] {
        &self.a_pre[k * self.dim..(k + 1) * self.dim]
    }

    pub fn jump_log(&self) -> &[JumpRecord] {
        &self.jumps
    }

    /// `r_max * int_0^delta w h_beta(w) dw`: bound on the clock mass carried
    /// by compensated small jumps.
    pub fn cutoff_error_bound(&self) -> f64 {
        self.cutoff_bound
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    fn locate(&self, t: f64) -> Result<(usize, bool)> {
        if t < self.d[0] {
            return Err(Error::domain(format!("t = {t} precedes the start time {}", self.d[0])));
        }
        let k = self.d.partition_point(|&d| d <= t);
        if k == self.d.len() {
            return Err(Error::Horizon {
                requested: t,
                available: *self.d.last().unwrap(),
            });
        }
        Ok((k, t >= self.d_pre[k]))
    }

    /// `E(t)`; interpolates inside continuous segments of the clock.
    pub fn inverse_time_change(&self, t: f64) -> Result<f64> {
        let (k, at_jump) = self.locate(t)?;
        if at_jump {
            return Ok(self.r[k]);
        }
        let span = self.d_pre[k] - self.d[k - 1];
        let frac = ((t - self.d[k - 1]) / span).clamp(0.0, 1.0);
        Ok(self.r[k - 1] + frac * (self.r[k] - self.r[k - 1]))
    }

    fn value(&self, t: f64, octrw: bool) -> Result<Vec<f64>> {
        let (k, at_jump) = self.locate(t)?;
        if at_jump {
            return Ok(if octrw { self.a(k) } else { self.a_pre(k) }.to_vec());
        }
        let frac = ((t - self.d[k - 1]) / (self.d_pre[k] - self.d[k - 1])).clamp(0.0, 1.0);
        Ok(self
            .a(k - 1)
            .iter()
            .zip(self.a_pre(k))
            .map(|(a, b)| a + frac * (b - a))
            .collect())
    }

    /// `X(t) = A(E(t)-)`: the walker waits at its pre-jump position.
    pub fn ctrw_limit_value(&self, t: f64) -> Result<Vec<f64>> {
        self.value(t, false)
    }

    /// `Y(t) = A(E(t))`.
    pub fn octrw_limit_value(&self, t: f64) -> Result<Vec<f64>> {
        self.value(t, true)
    }
}

pub fn inverse_time_change(path: &SpaceTimePath, t: f64) -> Result<f64> {
    path.inverse_time_change(t)
}

pub fn ctrw_limit_value(path: &SpaceTimePath, t: f64) -> Result<Vec<f64>> {
    path.ctrw_limit_value(t)
}

pub fn octrw_limit_value(path: &SpaceTimePath, t: f64) -> Result<Vec<f64>> {
    path.octrw_limit_value(t)
}

/// Position of the next unanswered probe for [`stream_probes`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ProbeCursor {
    pub next: usize,
}

/// Streams the pair and appends `X(t)` (and `Y(t)` if requested) for each
/// sorted probe, without storing the path. Returns a horizon error once the
/// operational time reaches `r_max`; calling again with a larger `r_max`
/// resumes the same path.
pub fn stream_probes<R: Rng + ?Sized>(
    stepper: &mut PairStepper<'_>,
    cursor: &mut ProbeCursor,
    probes: &[f64],
    r_max: f64,
    rng: &mut R,
    xs: &mut Vec<f64>,
    mut ys: Option<&mut Vec<f64>>,
) -> Result<()> {
    while cursor.next < probes.len() {
        let t = probes[cursor.next];
        let st = *stepper.last();
        if t < st.d0 && st.r1 == 0.0 {
            return Err(Error::domain(format!("t = {t} precedes the start time {}", st.d0)));
        }
        if t < st.d1 {
            if t >= st.d_pre {
                xs.extend_from_slice(stepper.a_pre());
                if let Some(y) = ys.as_deref_mut() {
                    y.extend_from_slice(stepper.a1());
                }
            } else {
                let frac = ((t - st.d0) / (st.d_pre - st.d0)).clamp(0.0, 1.0);
                let start = xs.len();
                xs.extend(
                    stepper
                        .a0()
                        .iter()
                        .zip(stepper.a_pre())
                        .map(|(a, b)| a + frac * (b - a)),
                );
                if let Some(y) = ys.as_deref_mut() {
                    y.extend_from_slice(&xs[start..]);
                }
            }
            cursor.next += 1;
            continue;
        }
        if stepper.r() >= r_max {
            return Err(Error::Horizon {
                requested: t,
                available: st.d1,
            });
        }
        stepper.advance(f64::INFINITY, rng)?;
    }
    Ok(())
}

/// `int g(t) f(X_t) dt` along one limit path, with `G` the antiderivative
/// of `g` and `g` vanishing above `t_hi`. Piecewise-constant stretches of
/// `X` are integrated exactly; continuous stretches by the midpoint rule.
pub fn path_integral<R: Rng + ?Sized>(
    stepper: &mut PairStepper<'_>,
    big_g: &dyn Fn(f64) -> f64,
    t_hi: f64,
    f: &dyn Fn(&[f64]) -> f64,
    r_max: f64,
    rng: &mut R,
) -> Result<f64> {
    let mut parts = Vec::new();
    let mut mid = vec![0.0; stepper.a0().len()];
    while stepper.d() < t_hi {
        if stepper.r() >= r_max {
            return Err(Error::Horizon {
                requested: t_hi,
                available: stepper.d(),
            });
        }
        let st = *stepper.advance(f64::INFINITY, rng)?;
        if st.d_pre > st.d0 {
            for (m, (a, b)) in mid.iter_mut().zip(stepper.a0().iter().zip(stepper.a_pre())) {
                *m = 0.5 * (a + b);
            }
            parts.push(f(&mid) * (big_g(st.d_pre) - big_g(st.d0)));
        }
        if st.d1 > st.d_pre {
            parts.push(f(stepper.a_pre()) * (big_g(st.d1) - big_g(st.d_pre)));
        }
    }
    Ok(compensated_sum(parts))
}

/// `int_0^{r_max} F(A_r, D_r) dr` along one path by the midpoint rule on
/// the continuous part of each step. Returns the integral and whether the
/// clock cleared `clear_level` before `r_max`.
pub fn potential_integral<R: Rng + ?Sized>(
    stepper: &mut PairStepper<'_>,
    big_f: &dyn Fn(&[f64], f64) -> f64,
    clear_level: f64,
    r_max: f64,
    rng: &mut R,
) -> Result<(f64, bool)> {
    let mut parts = Vec::new();
    let mut mid = vec![0.0; stepper.a0().len()];
    while stepper.r() < r_max * (1.0 - 1e-15) {
        if stepper.d() > clear_level {
            return Ok((compensated_sum(parts), true));
        }
        let st = *stepper.advance(r_max, rng)?;
        for (m, (a, b)) in mid.iter_mut().zip(stepper.a0().iter().zip(stepper.a_pre())) {
            *m = 0.5 * (a + b);
        }
        parts.push(big_f(&mid, 0.5 * (st.d0 + st.d_pre)) * (st.r1 - st.r0));
    }
    let cleared = stepper.d() > clear_level;
    Ok((compensated_sum(parts), cleared))
}
