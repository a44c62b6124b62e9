//! Fokker-Planck solver `d_t P* = L* (Psi*)^{-1} P* + mu (x) delta_s` for
//! uncoupled one-dimensional models.
//!
//! The march works on `F = (Psi*)^{-1} u`. With `rho` the discrete `Psi*`
//! weights, `u = rho * F` and `sigma = (1 - z) / rho(z)`, each level solves
//!
//! ```text
//! (sigma_0 - dt D) F_n = -sum_{k>=1} sigma_k F_{n-k} + dt B F_{n-1} + inj_n
//! u_n = u_{n-1} + dt (D F_n + B F_{n-1}) + inj_n
//! ```
//!
//! where `D = 1/2 d_y^2 (a .)` is implicit and `B = -d_y (b .)` is an
//! upwinded explicit drift. For stable clocks `sigma` is `dt^{1-beta}` times
//! the GL weights of order `beta`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::frac_ops::{gl_weights, talbot_invert, TALBOT_NODES};
use crate::grid::{Grid1d, GridMeasure};
use crate::model::{ModelSpec, TemporalTail};
use crate::special::{compensated_sum, gamma, pairwise_sum};

/// Solver tolerances and switches.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOptions {
    /// Allowed negativity relative to the injected mass.
    pub negativity_tol: f64,
    /// Boundary leakage above which a warning is recorded.
    pub leak_tol: f64,
    /// Keep only this many history levels (opt-in approximation).
    pub memory_levels: Option<usize>,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self {
            negativity_tol: 1e-12,
            leak_tol: 1e-4,
            memory_levels: None,
        }
    }
}

/// Initial spatial measure.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialMeasure {
    /// Unit mass at the node nearest to the point.
    Point(f64),
    /// Density values on the spatial grid.
    Density(Vec<f64>),
}

/// Solution of the forward equation.
#[derive(Debug, Clone)]
pub struct ForwardSolution {
    /// `u(x, t)`: density in `x` at each level, zero before injection.
    pub measure: GridMeasure,
    pub injection_level: usize,
    pub initial_mass: f64,
    /// `mu(R) - mass(t_j)` per level.
    pub leakage: Vec<f64>,
    pub min_value: f64,
    /// Neglected history weight when memory is truncated.
    pub truncated_weight: f64,
    pub warnings: Vec<String>,
}

/// `sigma` weights per spatial node.
enum Sigma {
    Shared(Vec<f64>),
    PerNode(Vec<Vec<f64>>),
}

impl Sigma {
    #[inline]
    fn get(&self, i: usize, k: usize) -> f64 {
        match self {
            Sigma::Shared(s) => s[k],
            Sigma::PerNode(s) => s[i][k],
        }
    }
}

/// `(1 - z) / rho(z)` by series division.
fn sigma_from_rho(rho: &[f64]) -> Result<Vec<f64>> {
    let n = rho.len();
    let mut inv = vec![0.0; n];
    inv[0] = 1.0 / rho[0];
    for k in 1..n {
        let acc = compensated_sum((1..=k).map(|j| rho[j] * inv[k - j]));
        inv[k] = -acc / rho[0];
    }
    let mut sigma = vec![0.0; n];
    sigma[0] = inv[0];
    for k in 1..n {
        sigma[k] = inv[k] - inv[k - 1];
    }
    if sigma[1..].iter().any(|s| *s > 1e-14 * sigma[0]) {
        return Err(Error::unsupported(
            "tail table gives a sign-indefinite memory stencil; positivity is not guaranteed",
        ));
    }
    Ok(sigma)
}

fn node_sigma(spec: &ModelSpec, y: f64, dt: f64, n: usize) -> Result<Vec<f64>> {
    let x = [y];
    let g = spec.coeffs.gamma_at(&x, 0.0);
    match (&spec.tail, g == 0.0) {
        (TemporalTail::Custom(_), _) | (_, false) => {
            let mut rho: Vec<f64> = (0..n)
                .map(|k| {
                    let (a, b) = (k as f64 * dt, (k + 1) as f64 * dt);
                    spec.tail.antiderivative(&x, b) - spec.tail.antiderivative(&x, a)
                })
                .collect();
            rho[0] += g;
            if !(rho[0] > 0.0) {
                return Err(Error::domain("gamma = 0 and H = 0 leave the clock frozen"));
            }
            sigma_from_rho(&rho)
        }
        _ => {
            let beta = spec.tail.beta_at(&x).unwrap();
            let scale = dt.powf(1.0 - beta);
            Ok(gl_weights(beta, n - 1).into_iter().map(|w| w * scale).collect())
        }
    }
}

fn build_sigma(spec: &ModelSpec, x: &Grid1d, dt: f64, n: usize) -> Result<Sigma> {
    let uniform = matches!(spec.tail, TemporalTail::Stable { .. } | TemporalTail::Custom(_))
        && spec.coeffs.gamma.as_constant().is_some();
    if uniform {
        Ok(Sigma::Shared(node_sigma(spec, x.point(0), dt, n)?))
    } else {
        Ok(Sigma::PerNode(
            (0..x.n)
                .map(|i| node_sigma(spec, x.point(i), dt, n))
                .collect::<Result<_>>()?,
        ))
    }
}

/// Tridiagonal solve; `sub[i]` couples `i` to `i - 1`, `sup[i]` to `i + 1`.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64], work: &mut [f64]) {
    let n = diag.len();
    work[0] = sup[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * work[i - 1];
        work[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= work[i] * rhs[i + 1];
    }
}

fn check_forward_spec(spec: &ModelSpec) -> Result<()> {
    if spec.is_coupled() {
        return Err(Error::unsupported(
            "the forward equation is solved for uncoupled models only; the coupled Levy-walk \
             generator has no split into a spatial and a temporal part (use Monte Carlo)",
        ));
    }
    if spec.dim() != 1 {
        return Err(Error::unsupported("the forward solver is one-dimensional"));
    }
    if !spec.coeffs.gamma.is_time_homogeneous() {
        return Err(Error::unsupported(
            "time-dependent gamma or H: no memory kernel inversion available",
        ));
    }
    Ok(())
}

/// Solves the forward equation on `x` (zero boundary values) and the time
/// levels `t`, injecting `mu` at time `s` (a level of `t`).
pub fn solve_fpe(
    spec: &ModelSpec,
    mu: &InitialMeasure,
    s: f64,
    x: Grid1d,
    t: Grid1d,
    opts: &ForwardOptions,
) -> Result<ForwardSolution> {
    check_forward_spec(spec)?;
    let j0 = t.index_of(s)?;
    if j0 + 1 >= t.n {
        return Err(Error::config("injection time must lie below the top of the window"));
    }
    let (nx, dy, dt) = (x.n, x.step, t.step);
    if nx < 3 {
        return Err(Error::config("need at least three spatial nodes"));
    }
    let mut inj = vec![0.0; nx];
    match mu {
        InitialMeasure::Point(p) => {
            let i = x
                .nearest(*p)
                .filter(|i| *i > 0 && *i < nx - 1)
                .ok_or_else(|| Error::config(format!("initial point {p} outside the interior")))?;
            inj[i] = 1.0 / dy;
        }
        InitialMeasure::Density(d) => {
            if d.len() != nx {
                return Err(Error::config("initial density does not match the spatial grid"));
            }
            if d.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::domain("initial density must be finite and nonnegative"));
            }
            inj.copy_from_slice(d);
            inj[0] = 0.0;
            inj[nx - 1] = 0.0;
        }
    }
    let initial_mass = pairwise_sum(&inj) * dy;
    let levels = t.n - j0;
    let sigma = build_sigma(spec, &x, dt, levels)?;

    let ys = x.points();
    let drift_zero = spec.coeffs.drift[0].is_identically_zero();
    // explicit drift stability: dt |b| / dy <= -sigma_1
    let mut bmax_ratio: f64 = 0.0;
    let mut suggested = f64::INFINITY;
    if !drift_zero {
        for (i, &y) in ys.iter().enumerate() {
            for j in (j0..t.n).step_by((t.n / 64).max(1)) {
                let b = spec.coeffs.drift[0].eval(&[y], t.point(j)).abs();
                let room = -sigma.get(i, 1);
                bmax_ratio = bmax_ratio.max(dt * b / dy / room);
                if b > 0.0 {
                    let beta = spec.tail.beta_at(&[y]).unwrap_or(1.0);
                    suggested = suggested.min((beta * dy / b).powf(1.0 / beta));
                }
            }
        }
        if bmax_ratio > 1.0 {
            return Err(Error::Stability {
                message: format!("explicit drift violates dt |b| / dy <= -sigma_1 by a factor {bmax_ratio:.3}"),
                suggested_dt: suggested,
            });
        }
    }

    let m = nx - 2;
    let mut density = ndarray::Array2::<f64>::zeros((nx, t.n));
    let mut hist = vec![0.0; levels * nx];
    let mut u = vec![0.0; nx];
    let mut rhs = vec![0.0; m];
    let mut work = vec![0.0; m];
    let (mut sub, mut diag, mut sup) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut a_node = vec![0.0; nx];
    let mut bf = vec![0.0; nx];
    let mut leakage = vec![0.0; t.n];
    let mut min_value: f64 = 0.0;
    let mut warnings = Vec::new();
    let mut truncated_weight: f64 = 0.0;
    let inv_dy2 = 1.0 / (dy * dy);

    for n in 0..levels {
        let tn = t.point(j0 + n);
        for (i, &y) in ys.iter().enumerate() {
            a_node[i] = spec.coeffs.diffusion.scalar(&[y], tn);
        }
        // explicit drift on F_{n-1}
        bf.iter_mut().for_each(|v| *v = 0.0);
        if n > 0 && !drift_zero {
            let prev = &hist[(n - 1) * nx..n * nx];
            let tp = t.point(j0 + n - 1);
            let b: Vec<f64> = ys.iter().map(|&y| spec.coeffs.drift[0].eval(&[y], tp)).collect();
            let flux = |i: usize| b[i].max(0.0) * prev[i] + b[i + 1].min(0.0) * prev[i + 1];
            for i in 1..nx - 1 {
                bf[i] = -(flux(i) - flux(i - 1)) / dy;
            }
        }
        let kmax = match opts.memory_levels {
            Some(l) => n.min(l),
            None => n,
        };
        for r in 0..m {
            let i = r + 1;
            let mut acc = 0.0;
            for k in 1..=kmax {
                acc += sigma.get(i, k) * hist[(n - k) * nx + i];
            }
            rhs[r] = -acc + dt * bf[i] + if n == 0 { inj[i] } else { 0.0 };
            diag[r] = sigma.get(i, 0) + dt * a_node[i] * inv_dy2;
            sub[r] = if r > 0 {
                -0.5 * dt * a_node[i - 1] * inv_dy2
            } else {
                0.0
            };
            sup[r] = if r + 1 < m {
                -0.5 * dt * a_node[i + 1] * inv_dy2
            } else {
                0.0
            };
        }
        if kmax < n {
            let tail: f64 = (kmax + 1..=n).map(|k| sigma.get(1, k).abs()).sum();
            truncated_weight = truncated_weight.max(tail);
        }
        thomas(&sub, &diag, &sup, &mut rhs, &mut work);
        let f = &mut hist[n * nx..(n + 1) * nx];
        f[0] = 0.0;
        f[nx - 1] = 0.0;
        f[1..nx - 1].copy_from_slice(&rhs);
        for i in 1..nx - 1 {
            let d = 0.5 * (a_node[i + 1] * f[i + 1] - 2.0 * a_node[i] * f[i] + a_node[i - 1] * f[i - 1]) * inv_dy2;
            u[i] += dt * (d + bf[i]) + if n == 0 { inj[i] } else { 0.0 };
        }
        let mass = pairwise_sum(&u) * dy;
        let lowest = u.iter().cloned().fold(f64::INFINITY, f64::min);
        min_value = min_value.min(lowest);
        if lowest < -opts.negativity_tol * initial_mass.max(f64::MIN_POSITIVE) {
            let at = u.iter().position(|v| *v == lowest).unwrap();
            return Err(Error::Invariant(format!(
                "negative density {lowest:e} at x = {}, t = {tn}",
                x.point(at)
            )));
        }
        leakage[j0 + n] = initial_mass - mass;
        density.column_mut(j0 + n).iter_mut().zip(&u).for_each(|(d, v)| *d = *v);
    }
    let worst_leak = leakage.iter().cloned().fold(0.0f64, f64::max);
    if worst_leak > opts.leak_tol * initial_mass {
        warnings.push(format!(
            "boundary leakage {worst_leak:e} exceeds {:e}; widen the spatial domain",
            opts.leak_tol * initial_mass
        ));
    }
    Ok(ForwardSolution {
        measure: GridMeasure { x, t, density },
        injection_level: j0,
        initial_mass,
        leakage,
        min_value,
        truncated_weight,
        warnings,
    })
}

/// Moments of a time slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub mass: f64,
}

/// Mean, variance (of the normalized slice) and total mass at level time `t`.
pub fn solution_moments(sol: &ForwardSolution, t: f64) -> Result<Moments> {
    let j = sol.measure.t.index_of(t)?;
    if j <= sol.injection_level {
        return Err(Error::domain(format!(
            "moments are defined after the injection time {}",
            sol.measure.t.point(sol.injection_level)
        )));
    }
    Ok(slice_moments(&sol.measure, j))
}

pub(crate) fn slice_moments(m: &GridMeasure, j: usize) -> Moments {
    let dy = m.x.step;
    let col = m.slice(j);
    let w: Vec<f64> = col.to_vec();
    let mass = pairwise_sum(&w) * dy;
    let mean = pairwise_sum(&w.iter().enumerate().map(|(i, v)| v * m.x.point(i)).collect::<Vec<_>>()) * dy / mass;
    let variance = pairwise_sum(
        &w.iter()
            .enumerate()
            .map(|(i, v)| v * (m.x.point(i) - mean).powi(2))
            .collect::<Vec<_>>(),
    ) * dy
        / mass;
    Moments { mean, variance, mass }
}

/// Cumulative distribution of a slice, piecewise linear between nodes
/// (trapezoid masses), normalized to 1.
pub fn slice_cdf(m: &GridMeasure, j: usize) -> impl Fn(f64) -> f64 + '_ {
    let dy = m.x.step;
    let col: Vec<f64> = m.slice(j).to_vec();
    let mut cum = vec![0.0; col.len()];
    for i in 1..col.len() {
        cum[i] = cum[i - 1] + 0.5 * (col[i] + col[i - 1]) * dy;
    }
    let total = *cum.last().unwrap();
    move |y: f64| {
        let pos = (y - m.x.lo) / dy;
        if pos <= 0.0 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        if i + 1 >= cum.len() {
            return 1.0;
        }
        let w = pos - i as f64;
        // exact integral of the linear interpolant over the partial cell
        let (a, b) = (col[i], col[i + 1]);
        let part = (a * w + 0.5 * (b - a) * w * w) * dy;
        (cum[i] + part) / total
    }
}

/// Density of `W(a E(t))` for driftless subdiffusion with constant `a`:
/// `p(y, t) = int_0^inf phi(y; a u) q_beta(u, t) du`, where `q_beta` is the
/// density of `E(t)`. Closed-form `q` for `beta = 1/2`, Talbot inversion
/// otherwise.
pub fn subordination_oracle(beta: f64, a: f64, t: f64, ys: &[f64]) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta < 1.0) || !(a > 0.0) || !(t > 0.0) {
        return Err(Error::domain("oracle needs beta in (0, 1), a > 0, t > 0"));
    }
    let q: Box<dyn Fn(f64) -> f64> = if (beta - 0.5).abs() < 1e-15 {
        Box::new(move |u: f64| (PI * t).powf(-0.5) * (-u * u / (4.0 * t)).exp())
    } else {
        Box::new(move |u: f64| inverse_clock_density(beta, u, t))
    };
    // u = w^2 removes the u^{-1/2} singularity of the heat kernel
    let w_max = oracle_cutoff(&*q, t, beta);
    let n = 8000;
    let hw = w_max / n as f64;
    let out = ys
        .iter()
        .map(|&y| {
            let f = |w: f64| {
                if w == 0.0 {
                    return if y == 0.0 {
                        2.0 / (2.0 * PI * a).sqrt() * q(0.0)
                    } else {
                        0.0
                    };
                }
                let u = w * w;
                2.0 * w * (-y * y / (2.0 * a * u)).exp() / (2.0 * PI * a * u).sqrt() * q(u)
            };
            let mut acc = f(0.0) + f(w_max);
            for k in 1..n {
                acc += f(k as f64 * hw) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc * hw / 3.0
        })
        .collect();
    Ok(out)
}

fn oracle_cutoff(q: &dyn Fn(f64) -> f64, t: f64, beta: f64) -> f64 {
    let peak = q(0.0).max(1e-300);
    let mut u = t.powf(beta);
    while q(u) > 1e-13 * peak && u < 1e6 * t.powf(beta).max(1.0) {
        u *= 1.25;
    }
    u.sqrt()
}

/// Density of `E(t)` at `u` by Talbot inversion of
/// `int e^{-lambda t} q(u, t) dt = lambda^{beta-1} exp(-u lambda^beta)`.
pub fn inverse_clock_density(beta: f64, u: f64, t: f64) -> f64 {
    let v = talbot_invert(|l| l.powf(beta - 1.0) * (-u * l.powf(beta)).exp(), t, TALBOT_NODES);
    v.max(0.0)
}

/// Gaussian heat kernel with variance `var`.
pub fn heat_kernel(y: f64, var: f64) -> f64 {
    (-y * y / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// Half-width of a spatial domain holding the law up to time `horizon`.
pub fn suggested_half_width(spec: &ModelSpec, horizon: f64) -> f64 {
    let probes = crate::model::probe_grid(1, -10.0, 10.0, 41, &[0.0, horizon]);
    let (mut amax, mut bmax, mut betamax): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (x, s) in &probes {
        amax = amax.max(spec.coeffs.diffusion.scalar(x, *s));
        bmax = bmax.max(spec.coeffs.drift[0].eval(x, *s).abs());
        betamax = betamax.max(spec.tail.beta_at(x).unwrap_or(1.0));
    }
    let h = horizon.max(1e-3);
    let clock = h.powf(betamax) / gamma(1.0 + betamax);
    10.0 * (amax * clock).sqrt() + 2.0 * bmax * clock + 1.0
}
