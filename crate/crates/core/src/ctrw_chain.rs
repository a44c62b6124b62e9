//! Pre-limit space-time chain `(A^c(n), D^c(n))` and the CTRW read-off
//! `X^c(t) = A^c(n)` for `D^c(n) <= t < D^c(n+1)`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{psd_cholesky, Coupling, ModelSpec, SpatialJumps, TemporalTail};
use crate::rng::{open_unit, PathRng};
use crate::special::gamma;

/// Default number of steps sampled per lazy extension.
pub const DEFAULT_BLOCK: usize = 4096;

/// Waiting time with `P(W > w) = 1 ^ [H_beta(w) / c]`, by inversion of `u`.
pub fn sample_waiting_time(c: f64, beta: f64, u: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::domain(format!("scale c = {c} must be positive")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain(format!("beta = {beta} must lie in (0, 1)")));
    }
    if !(u > 0.0 && u <= 1.0) {
        return Err(Error::domain(format!("uniform variate u = {u} must lie in (0, 1]")));
    }
    Ok((gamma(1.0 - beta) * c * u).powf(-1.0 / beta))
}

enum WaitRule {
    /// `W = k u^{-1/beta}` with `k = (Gamma(1 - beta) c)^{-1/beta}`.
    Constant {
        k: f64,
        inv_beta: f64,
    },
    Variable,
}

/// Reusable single-path stepper for the chain at scale `c`.
pub struct ChainStepper<'a> {
    spec: &'a ModelSpec,
    c: f64,
    dx: f64,
    wait: WaitRule,
    buf: Vec<f64>,
    chol: Vec<f64>,
    noise: Vec<f64>,
}

impl<'a> ChainStepper<'a> {
    pub fn new(spec: &'a ModelSpec, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain(format!("scale c = {c} must be positive")));
        }
        if !spec.coeffs.gamma.is_identically_zero() {
            return Err(Error::unsupported(
                "the pre-limit chain is defined for gamma = 0 models only",
            ));
        }
        let wait = match &spec.tail {
            TemporalTail::Stable { beta } => WaitRule::Constant {
                k: (gamma(1.0 - beta) * c).powf(-1.0 / beta),
                inv_beta: 1.0 / beta,
            },
            TemporalTail::VariableStable { .. } => WaitRule::Variable,
            TemporalTail::Custom(_) => {
                return Err(Error::unsupported(
                    "the pre-limit chain needs a stable or variable-order tail",
                ))
            }
        };
        let d = spec.dim();
        Ok(Self {
            spec,
            c,
            dx: spec.lattice_spacing(c),
            wait,
            buf: vec![0.0; d],
            chol: vec![0.0; d * d],
            noise: vec![0.0; d],
        })
    }

    pub fn scale(&self) -> f64 {
        self.c
    }

    /// Lattice spacing at this scale.
    pub fn dx(&self) -> f64 {
        self.dx
    }

    #[inline]
    fn waiting_time(&self, x: &[f64], u: f64) -> Result<f64> {
        match self.wait {
            WaitRule::Constant { k, inv_beta } => Ok(k * u.powf(-inv_beta)),
            WaitRule::Variable => sample_waiting_time(self.c, self.spec.tail.beta_at(x).unwrap(), u),
        }
    }

    /// Advances `x` in place and returns the new time `s + W`.
    pub fn step<R: Rng + ?Sized>(&mut self, x: &mut [f64], s: f64, rng: &mut R) -> Result<f64> {
        let w = self.waiting_time(x, open_unit(rng))?;
        let s_next = s + w;
        match &self.spec.coupling {
            Coupling::LevyWalk(dirs) => {
                self.spec.coeffs.drift_at(x, s, &mut self.buf);
                dirs.sample(rng, &mut self.noise);
                for i in 0..x.len() {
                    x[i] += w * self.noise[i] + self.buf[i] / self.c;
                }
            }
            Coupling::Uncoupled => match self.spec.spatial_jumps {
                SpatialJumps::None => {}
                SpatialJumps::Lattice => {
                    let (l, _) = self.spec.lattice_probabilities(x, s_next, self.dx)?;
                    let u: f64 = rng.random();
                    x[0] += if u < l { -self.dx } else { self.dx };
                }
                SpatialJumps::Gaussian => {
                    let d = x.len();
                    self.spec.coeffs.drift_at(x, s_next, &mut self.buf);
                    let mut a = vec![0.0; d * d];
                    self.spec.coeffs.diffusion.matrix(x, s_next, &mut a);
                    a.iter_mut().for_each(|v| *v /= self.c);
                    psd_cholesky(&a, d, &mut self.chol)
                        .ok_or_else(|| Error::domain("diffusion matrix is not positive semidefinite"))?;
                    for z in self.noise.iter_mut() {
                        *z = rng.sample(StandardNormal);
                    }
                    for i in 0..d {
                        let mut jump = self.buf[i] / self.c;
                        for j in 0..=i {
                            jump += self.chol[i * d + j] * self.noise[j];
                        }
                        x[i] += jump;
                    }
                }
            },
        }
        Ok(s_next)
    }
}

/// One step of the chain from `(x, s)`.
pub fn step_chain<R: Rng + ?Sized>(
    spec: &ModelSpec,
    c: f64,
    x: &[f64],
    s: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    let mut stepper = ChainStepper::new(spec, c)?;
    let mut next = x.to_vec();
    let s_next = stepper.step(&mut next, s, rng)?;
    Ok((next, s_next))
}

/// Lazily extended realization of the chain.
pub struct DiscreteChain<'a> {
    stepper: ChainStepper<'a>,
    rng: PathRng,
    dim: usize,
    block: usize,
    times: Vec<f64>,
    positions: Vec<f64>,
}

impl<'a> DiscreteChain<'a> {
    /// Chain at `(x0, s0)` with no steps sampled yet.
    pub fn new(spec: &'a ModelSpec, c: f64, x0: &[f64], s0: f64, rng: PathRng) -> Result<Self> {
        if x0.len() != spec.dim() {
            return Err(Error::domain("initial position has the wrong dimension"));
        }
        if !s0.is_finite() || x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("initial state must be finite"));
        }
        Ok(Self {
            stepper: ChainStepper::new(spec, c)?,
            rng,
            dim: spec.dim(),
            block: DEFAULT_BLOCK,
            times: vec![s0],
            positions: x0.to_vec(),
        })
    }

    pub fn with_block(mut self, block: usize) -> Self {
        self.block = block.max(1);
        self
    }

    pub fn scale(&self) -> f64 {
        self.stepper.scale()
    }

    /// Number of sampled jumps.
    pub fn len(&self) -> usize {
        self.times.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, n: usize) -> f64 {
        self.times[n]
    }

    pub fn position(&self, n: usize) -> &[f64] {
        &self.positions[n * self.dim..(n + 1) * self.dim]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Last sampled jump time `D_N`.
    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Samples one more block of steps.
    pub fn extend_block(&mut self) -> Result<()> {
        let mut x = self.position(self.len()).to_vec();
        let mut s = self.horizon();
        self.times.reserve(self.block);
        self.positions.reserve(self.block * self.dim);
        for _ in 0..self.block {
            s = self.stepper.step(&mut x, s, &mut self.rng)?;
            self.times.push(s);
            self.positions.extend_from_slice(&x);
        }
        Ok(())
    }

    /// Extends until `D_N > t` or `max_steps` jumps have been sampled.
    pub fn extend_until(&mut self, t: f64, max_steps: usize) -> Result<()> {
        while self.horizon() <= t {
            if self.len() >= max_steps {
                return Err(Error::Horizon {
                    requested: t,
                    available: self.horizon(),
                });
            }
            self.extend_block()?;
        }
        Ok(())
    }

    /// `X^c(t)`: the position `A_n` with `D_n <= t < D_{n+1}`.
    pub fn evaluate(&self, t: f64) -> Result<&[f64]> {
        if t < self.times[0] {
            return Err(Error::domain(format!(
                "t = {t} precedes the start time {}",
                self.times[0]
            )));
        }
        if t >= self.horizon() {
            return Err(Error::Horizon {
                requested: t,
                available: self.horizon(),
            });
        }
        let n = self.times.partition_point(|&d| d <= t) - 1;
        Ok(self.position(n))
    }

    pub fn trajectory(&self) -> CtrwTrajectory<'_, 'a> {
        CtrwTrajectory { chain: self }
    }
}

/// Right-continuous piecewise-constant CTRW path read from a chain.
pub struct CtrwTrajectory<'c, 'a> {
    chain: &'c DiscreteChain<'a>,
}

impl CtrwTrajectory<'_, '_> {
    pub fn value(&self, t: f64) -> Result<&[f64]> {
        self.chain.evaluate(t)
    }
}

/// `X^c(t)` from a sampled chain.
pub fn evaluate_ctrw<'c>(chain: &'c DiscreteChain<'_>, t: f64) -> Result<&'c [f64]> {
    chain.evaluate(t)
}

/// Streams the chain from `(x0, s0)` and writes `X^c(t)` for each sorted
/// probe into `out` (row-major, `dim` per probe), without storing the path.
/// Stops with a horizon error after `max_steps` jumps; the state reached so
/// far is kept in `state` so the caller may resume with a larger budget.
pub fn stream_probes<R: Rng + ?Sized>(
    stepper: &mut ChainStepper<'_>,
    state: &mut StreamState,
    probes: &[f64],
    rng: &mut R,
    max_steps: usize,
    out: &mut Vec<f64>,
) -> Result<()> {
    let d = state.x.len();
    while state.next_probe < probes.len() {
        let t = probes[state.next_probe];
        if state.next_s > t {
            out.extend_from_slice(&state.x);
            state.next_probe += 1;
            continue;
        }
        if state.steps >= max_steps {
            return Err(Error::Horizon {
                requested: t,
                available: state.next_s,
            });
        }
        // the walker sits at x until next_s, then jumps
        state.x.copy_from_slice(&state.x_next);
        state.next_s = stepper.step(&mut state.x_next, state.next_s, rng)?;
        state.steps += 1;
        debug_assert_eq!(state.x.len(), d);
    }
    Ok(())
}

/// Resumable state for [`stream_probes`].
#[derive(Debug, Clone)]
pub struct StreamState {
    /// Position held on `[D_n, D_{n+1})`.
    x: Vec<f64>,
    /// `A_{n+1}`.
    x_next: Vec<f64>,
    /// `D_{n+1}`.
    next_s: f64,
    steps: usize,
    next_probe: usize,
}

impl StreamState {
    /// Starts at `(x0, s0)`; the first jump is sampled immediately.
    pub fn start<R: Rng + ?Sized>(stepper: &mut ChainStepper<'_>, x0: &[f64], s0: f64, rng: &mut R) -> Result<Self> {
        let mut x_next = x0.to_vec();
        let next_s = stepper.step(&mut x_next, s0, rng)?;
        Ok(Self {
            x: x0.to_vec(),
            x_next,
            next_s,
            steps: 1,
            next_probe: 0,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{levy_walk_preset, subdiffusion_preset, DirectionWeights, ScalarField};
    use crate::rng::path_rng;

    #[test]
    fn waiting_time_examples() {
        let w = sample_waiting_time(1.0, 0.5, 0.5).unwrap();
        assert!((w - 1.273_239_544_735_162_7).abs() < 1e-12);
        let cut = sample_waiting_time(7.0, 0.3, 1.0).unwrap();
        assert!((cut - (gamma(0.7) * 7.0).powf(-1.0 / 0.3)).abs() < 1e-15);
        assert!(sample_waiting_time(1.0, 0.5, 0.0).is_err());
        assert!(sample_waiting_time(1.0, 0.5, 1e-12).unwrap() > 1e20);
    }

    #[test]
    fn waiting_time_tail_is_exact() {
        // P(W > w) = u-measure of {u : (g c u)^{-1/b} > w} = H(w)/c
        let (c, beta) = (3.0, 0.6);
        for w in [0.5, 1.0, 3.0] {
            let u_star = crate::model::stable_tail(beta, w) / c;
            let below = sample_waiting_time(c, beta, u_star * 0.999).unwrap();
            let above = sample_waiting_time(c, beta, u_star * 1.001).unwrap();
            assert!(below > w && above < w);
        }
    }

    #[test]
    fn lattice_bias_frequencies() {
        let spec = subdiffusion_preset(0.5, ScalarField::constant(1.0)).unwrap();
        let c = 100.0;
        let mut stepper = ChainStepper::new(&spec, c).unwrap();
        let mut rng = path_rng(11, 0);
        let n = 200_000;
        let mut right = 0usize;
        for _ in 0..n {
            let mut x = [0.0];
            stepper.step(&mut x, 0.0, &mut rng).unwrap();
            if x[0] > 0.0 {
                right += 1;
            }
        }
        let diff = (2.0 * right as f64 - n as f64) / n as f64;
        // r - l = b dx = 0.1, standard error ~ 2 / sqrt(n)
        assert!((diff - 0.1).abs() < 4.0 * 2.0 / (n as f64).sqrt() * 0.5);
    }

    #[test]
    fn levy_walk_jump_equals_wait() {
        let spec = levy_walk_preset(0.5, vec![ScalarField::zero()], DirectionWeights::symmetric_1d()).unwrap();
        let mut chain = DiscreteChain::new(&spec, 10.0, &[0.0], 0.0, path_rng(3, 1))
            .unwrap()
            .with_block(256);
        chain.extend_block().unwrap();
        for n in 0..chain.len() {
            let (x0, x1) = (chain.position(n)[0], chain.position(n + 1)[0]);
            let (s0, s1) = (chain.time(n), chain.time(n + 1));
            // equal up to the rounding of the two running sums
            let tol = 2.0 * f64::EPSILON * (x0.abs() + x1.abs() + s0 + s1);
            assert!(((x1 - x0).abs() - (s1 - s0)).abs() <= tol);
        }
        let total: f64 = (0..chain.len())
            .map(|n| (chain.position(n + 1)[0] - chain.position(n)[0]).abs())
            .sum();
        assert!((total - chain.horizon()).abs() <= 1e-12 * chain.horizon().max(1.0) * chain.len() as f64);
    }

    #[test]
    fn evaluate_is_right_continuous() {
        let spec = subdiffusion_preset(0.5, ScalarField::zero()).unwrap();
        let mut chain = DiscreteChain::new(&spec, 10.0, &[0.25], 0.5, path_rng(5, 2)).unwrap();
        chain.extend_until(3.0, 1 << 20).unwrap();
        assert_eq!(chain.evaluate(0.5).unwrap(), &[0.25]);
        let d1 = chain.time(1);
        assert_eq!(chain.evaluate(d1 * (1.0 - 1e-12)).unwrap(), &[0.25]);
        assert_eq!(chain.evaluate(d1).unwrap(), chain.position(1));
        assert!(chain.times().windows(2).all(|w| w[1] > w[0]));
        assert!(matches!(chain.evaluate(chain.horizon()), Err(Error::Horizon { .. })));
        assert!(chain.evaluate(0.4).is_err());
    }

    #[test]
    fn streaming_matches_stored_chain() {
        let spec = subdiffusion_preset(0.5, ScalarField::space_time(|x, s| 0.3 * (x[0] - s).sin())).unwrap();
        let probes = [0.0, 0.1, 0.5, 1.0, 2.0];
        let mut chain = DiscreteChain::new(&spec, 50.0, &[0.0], 0.0, path_rng(9, 9))
            .unwrap()
            .with_block(1);
        chain.extend_until(2.0, usize::MAX).unwrap();

        let mut stepper = ChainStepper::new(&spec, 50.0).unwrap();
        let mut rng = path_rng(9, 9);
        let mut state = StreamState::start(&mut stepper, &[0.0], 0.0, &mut rng).unwrap();
        let mut out = Vec::new();
        stream_probes(&mut stepper, &mut state, &probes, &mut rng, usize::MAX, &mut out).unwrap();
        for (t, v) in probes.iter().zip(&out) {
            assert_eq!(chain.evaluate(*t).unwrap()[0], *v);
        }
    }

    #[test]
    fn streaming_resumes_after_budget() {
        let spec = subdiffusion_preset(0.5, ScalarField::zero()).unwrap();
        let mut stepper = ChainStepper::new(&spec, 100.0).unwrap();
        let mut rng = path_rng(1, 1);
        let mut state = StreamState::start(&mut stepper, &[0.0], 0.0, &mut rng).unwrap();
        let mut out = Vec::new();
        let first = stream_probes(&mut stepper, &mut state, &[5.0], &mut rng, 2, &mut out);
        assert!(matches!(first, Err(Error::Horizon { .. })));
        stream_probes(&mut stepper, &mut state, &[5.0], &mut rng, usize::MAX, &mut out).unwrap();
        assert_eq!(out.len(), 1);
    }
}
