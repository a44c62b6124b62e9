//! Discrete fractional operators: Grunwald-Letnikov stencils, the negative
//! Riemann-Liouville integral, the operators `Psi` and `Upsilon`, the memory
//! kernel `V` and the inverse `(Psi*)^{-1} = d/dt (V * .)`.
//!
//! Fields are sampled on `(x, s)` lattices; every operator here acts along
//! the time axis, one spatial row at a time.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid1d, GridField, GridMeasure};
use crate::model::{Coupling, ModelSpec, TabulatedTail, TemporalTail};
use crate::special::{compensated_sum, gamma};

/// Number of contour nodes for fixed-Talbot inversion.
pub const TALBOT_NODES: usize = 32;

/// `g_k = (-1)^k binom(order, k)`, `k = 0..=n`.
pub fn gl_weights(order: f64, n: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(n + 1);
    g.push(1.0);
    for k in 1..=n {
        let prev = g[k - 1];
        g.push(prev * (k as f64 - 1.0 - order) / k as f64);
    }
    g
}

/// Grunwald-Letnikov weights together with their step.
#[derive(Debug, Clone, PartialEq)]
pub struct GlStencil {
    pub order: f64,
    pub step: f64,
    pub weights: Vec<f64>,
}

impl GlStencil {
    pub fn new(order: f64, step: f64, n: usize) -> Self {
        Self {
            order,
            step,
            weights: gl_weights(order, n),
        }
    }

    /// `step^{-order} sum_k g_k f[j + k]`, truncated at the end of `f`.
    pub fn apply_upward(&self, f: &[f64], j: usize) -> f64 {
        let scale = self.step.powf(-self.order);
        scale * compensated_sum(f[j..].iter().zip(&self.weights).map(|(v, g)| v * g))
    }
}

/// Fractional order, constant or one value per spatial row.
#[derive(Debug, Clone, PartialEq)]
pub enum Order {
    Constant(f64),
    PerRow(Vec<f64>),
}

impl Order {
    pub fn at(&self, i: usize) -> f64 {
        match self {
            Order::Constant(b) => *b,
            Order::PerRow(v) => v[i],
        }
    }

    /// Tail order of `spec` at each node of `x`.
    pub fn from_spec(spec: &ModelSpec, x: &Grid1d) -> Result<Self> {
        match &spec.tail {
            TemporalTail::Stable { beta } => Ok(Order::Constant(*beta)),
            TemporalTail::VariableStable { .. } => Ok(Order::PerRow(
                (0..x.n).map(|i| spec.tail.beta_at(&[x.point(i)]).unwrap()).collect(),
            )),
            TemporalTail::Custom(_) => Err(Error::unsupported("tabulated tails have no fractional order")),
        }
    }

    fn check(&self, rows: usize) -> Result<()> {
        let ok = |b: f64| b > 0.0 && b < 1.0;
        match self {
            Order::Constant(b) if ok(*b) => Ok(()),
            Order::PerRow(v) if v.len() == rows && v.iter().all(|b| ok(*b)) => Ok(()),
            _ => Err(Error::domain("fractional orders must lie in (0, 1), one per row")),
        }
    }
}

fn check_vanishes_at_top(field: &GridField) -> Result<()> {
    let top = field.t.n - 1;
    let scale = field.max_abs();
    let worst = field.values.column(top).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if worst > 1e-12 * scale {
        return Err(Error::precondition(format!(
            "field must vanish at the window top t = {} (max |f| there {worst:e})",
            field.t.hi()
        )));
    }
    Ok(())
}

fn map_rows(field: &GridField, mut row_op: impl FnMut(usize, &[f64], &mut [f64])) -> GridField {
    let (nx, nt) = field.values.dim();
    let mut out = Array2::zeros((nx, nt));
    let mut buf = vec![0.0; nt];
    for i in 0..nx {
        let row = field.values.row(i).to_vec();
        row_op(i, &row, &mut buf);
        out.row_mut(i).iter_mut().zip(&buf).for_each(|(o, v)| *o = *v);
    }
    GridField {
        x: field.x,
        t: field.t,
        values: out,
    }
}

/// Upward convolution `out_j = sum_m w_m f_{j+m}`.
fn upward(f: &[f64], w: &[f64], out: &mut [f64]) {
    let n = f.len();
    for j in 0..n {
        out[j] = compensated_sum((0..n - j).map(|m| w[m] * f[j + m]));
    }
}

/// `(d_{-s}^beta f)(s_j) ~ ds^{-beta} sum_k g_k f(s_j + k ds)`.
pub fn apply_neg_frac_derivative(field: &GridField, order: &Order) -> Result<GridField> {
    order.check(field.x.n)?;
    check_vanishes_at_top(field)?;
    let nt = field.t.n;
    let dt = field.t.step;
    let mut cache: Option<(f64, Vec<f64>)> = None;
    Ok(map_rows(field, |i, row, out| {
        let beta = order.at(i);
        if cache.as_ref().is_none_or(|(b, _)| *b != beta) {
            let mut g = gl_weights(beta, nt);
            let scale = dt.powf(-beta);
            g.iter_mut().for_each(|v| *v *= scale);
            cache = Some((beta, g));
        }
        upward(row, &cache.as_ref().unwrap().1, out);
    }))
}

/// Product-trapezoid weights for `1/Gamma(q) int_0^inf f(r) r^{q-1} dr` on a
/// grid of step `d`: exact moments of `r^{q-1}` against hat functions.
pub fn product_trapezoid_weights(q: f64, d: f64, n: usize) -> Vec<f64> {
    let scale = d.powf(q) / gamma(q + 2.0);
    let p = q + 1.0;
    (0..n)
        .map(|k| {
            if k == 0 {
                scale
            } else {
                let k = k as f64;
                scale * ((k + 1.0).powf(p) - 2.0 * k.powf(p) + (k - 1.0).powf(p))
            }
        })
        .collect()
}

/// Negative Riemann-Liouville integral
/// `1/Gamma(beta) int_{r>0} f(t + r) r^{beta-1} dr`.
pub fn neg_frac_integral(field: &GridField, order: &Order) -> Result<GridField> {
    let ok = |b: f64| b > 0.0 && b <= 1.0;
    let valid = match order {
        Order::Constant(b) => ok(*b),
        Order::PerRow(v) => v.len() == field.x.n && v.iter().all(|b| ok(*b)),
    };
    if !valid {
        return Err(Error::domain("integral orders must lie in (0, 1]"));
    }
    let nt = field.t.n;
    let dt = field.t.step;
    let mut cache: Option<(f64, Vec<f64>)> = None;
    Ok(map_rows(field, |i, row, out| {
        let beta = order.at(i);
        if cache.as_ref().is_none_or(|(b, _)| *b != beta) {
            cache = Some((beta, product_trapezoid_weights(beta, dt, nt)));
        }
        upward(row, &cache.as_ref().unwrap().1, out);
    }))
}

/// Quadrature rule for `int_0^inf h(s + v) H(v) dv` on the time lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// Hat-function weights with exact moments of `H` near `v = 0`.
    #[default]
    ProductTrapezoid,
    /// Weights matched to the backward time stencil: for stable tails
    /// `ds^{1-beta}` times GL weights of order `beta - 1`, otherwise left
    /// cell integrals of `H`.
    Consistent,
}

/// Cell integrals `int_{k d}^{(k+1) d} H`.
fn tail_cell_integrals(tail: &TemporalTail, x: &[f64], d: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let (a, b) = (k as f64 * d, (k + 1) as f64 * d);
            match tail {
                TemporalTail::Custom(t) => t.antiderivative(b) - t.antiderivative(a),
                _ => {
                    let beta = tail.beta_at(x).unwrap();
                    stable_cell(beta, d, k)
                }
            }
        })
        .collect()
}

/// `int_{kd}^{(k+1)d} v^{-beta} / Gamma(1 - beta) dv`, without cancellation.
fn stable_cell(beta: f64, d: f64, k: usize) -> f64 {
    let p = 1.0 - beta;
    let scale = d.powf(p) / gamma(2.0 - beta);
    if k == 0 {
        scale
    } else {
        let k = k as f64;
        scale * k.powf(p) * (p * (1.0 / k).ln_1p()).exp_m1()
    }
}

/// Hat-function moments `int H(v) phi_k(v) dv` for a tabulated tail, by
/// composite Simpson on each half-cell.
fn tabulated_hat_weights(t: &TabulatedTail, d: f64, n: usize) -> Vec<f64> {
    let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
        let m = 64;
        let h = (b - a) / m as f64;
        let mut acc = f(a) + f(b);
        for i in 1..m {
            acc += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    (0..n)
        .map(|k| {
            let c = k as f64 * d;
            let up = simpson(&|v: f64| t.eval(v) * (1.0 - (v - c) / d), c, c + d);
            let down = if k == 0 {
                0.0
            } else {
                simpson(&|v: f64| t.eval(v) * (1.0 - (c - v) / d), c - d, c)
            };
            up + down
        })
        .collect()
}

/// Weights `psi_m` with `(Psi h)_j = sum_m psi_m h_{j+m}`, excluding `gamma`.
pub fn psi_weights(tail: &TemporalTail, x: &[f64], d: f64, n: usize, quad: Quadrature) -> Vec<f64> {
    match (quad, tail) {
        (Quadrature::ProductTrapezoid, TemporalTail::Custom(t)) => tabulated_hat_weights(t, d, n),
        (Quadrature::ProductTrapezoid, _) => product_trapezoid_weights(1.0 - tail.beta_at(x).unwrap(), d, n),
        (Quadrature::Consistent, TemporalTail::Custom(_)) => tail_cell_integrals(tail, x, d, n),
        (Quadrature::Consistent, _) => {
            let beta = tail.beta_at(x).unwrap();
            let scale = d.powf(1.0 - beta);
            gl_weights(beta - 1.0, n - 1).into_iter().map(|b| b * scale).collect()
        }
    }
}

/// `Psi h(x, s) = gamma h(x, s) + int_{v>0} h(x, s + v) H(x, s; v) dv`.
pub fn psi_apply(h: &GridField, spec: &ModelSpec, quad: Quadrature) -> Result<GridField> {
    check_psi_input(h, spec)?;
    let nt = h.t.n;
    let dt = h.t.step;
    let mut cache: Option<(f64, Vec<f64>)> = None;
    let out = map_rows(h, |i, row, out| {
        let x = [h.x.point(i)];
        let key = spec.tail.beta_at(&x).unwrap_or(-1.0);
        if cache.as_ref().is_none_or(|(b, _)| *b != key) {
            cache = Some((key, psi_weights(&spec.tail, &x, dt, nt, quad)));
        }
        upward(row, &cache.as_ref().unwrap().1, out);
        for (j, o) in out.iter_mut().enumerate() {
            *o += spec.coeffs.gamma_at(&x, h.t.point(j)) * row[j];
        }
    });
    Ok(out)
}

fn check_psi_input(h: &GridField, spec: &ModelSpec) -> Result<()> {
    if spec.dim() != 1 {
        return Err(Error::unsupported("grid operators are one-dimensional"));
    }
    check_vanishes_at_top(h)
}

/// OCTRW operator. Uncoupled models: equal to `Psi`. Levy walks:
/// `sum_theta lambda_theta int_0^inf dv int_v^inf h(x + r theta, s + v) h_beta(r) dr`,
/// which needs `dx = ds`. Cost is quadratic in the number of time levels.
pub fn upsilon_apply(h: &GridField, spec: &ModelSpec) -> Result<GridField> {
    let dirs = match &spec.coupling {
        Coupling::Uncoupled => return psi_apply(h, spec, Quadrature::default()),
        Coupling::LevyWalk(d) => d,
    };
    check_psi_input(h, spec)?;
    if ((h.x.step - h.t.step) / h.t.step).abs() > 1e-9 {
        return Err(Error::config("Levy-walk operators need dx = ds"));
    }
    let (nx, nt) = h.values.dim();
    let d = h.t.step;
    let signs = direction_signs(dirs)?;
    let x0 = [0.0];
    let tail_at = |v: f64| spec.tail.eval(&x0, v);
    let cells = tail_cell_integrals(&spec.tail, &x0, d, nt);
    // weights W[m][n] for clock offset m and jump length n*d, n >= m
    let big_h: Vec<f64> = (0..=nt)
        .map(|k| if k == 0 { 0.0 } else { tail_at(k as f64 * d) })
        .collect();
    let mut out = Array2::zeros((nx, nt));
    for i in 0..nx {
        for j in 0..nt {
            let mut parts = Vec::new();
            for &(sign, lam) in &signs {
                for m in 0..nt - j {
                    for n in m..nt {
                        let w = if n == m {
                            cells[m] - d * big_h[m + 1]
                        } else {
                            d * (big_h[n] - big_h[n + 1])
                        };
                        let xi = i as isize + sign * n as isize;
                        if xi < 0 || xi >= nx as isize {
                            continue;
                        }
                        parts.push(lam * w * h.values[[xi as usize, j + m]]);
                    }
                }
            }
            out[[i, j]] = compensated_sum(parts);
        }
    }
    Ok(GridField {
        x: h.x,
        t: h.t,
        values: out,
    })
}

/// One-dimensional signs and weights of a direction distribution.
pub(crate) fn direction_signs(dirs: &crate::model::DirectionWeights) -> Result<Vec<(isize, f64)>> {
    match dirs {
        crate::model::DirectionWeights::Discrete { directions, weights } if directions[0].len() == 1 => Ok(directions
            .iter()
            .zip(weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(d, w)| (if d[0] > 0.0 { 1 } else { -1 }, *w))
            .collect()),
        _ => Err(Error::unsupported(
            "grid Levy-walk operators need 1-d signed directions",
        )),
    }
}

/// Fixed-Talbot inversion of `f_hat` at `t > 0` with `m` nodes.
pub fn talbot_invert(f_hat: impl Fn(Complex64) -> Complex64, t: f64, m: usize) -> f64 {
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut acc = 0.5 * (f_hat(Complex64::new(r, 0.0)) * (r * t).exp()).re;
    for k in 1..m {
        let theta = k as f64 * PI / m as f64;
        let cot = 1.0 / theta.tan();
        let delta = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        acc += ((delta * t).exp() * f_hat(delta) * Complex64::new(1.0, sigma)).re;
    }
    r / m as f64 * acc
}

/// How the memory kernel was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelProvenance {
    ClosedForm,
    LaplaceInverted,
}

/// Kernel evaluation route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelMethod {
    /// Closed form when known, Talbot otherwise.
    #[default]
    Auto,
    Talbot,
}

/// Renewal density `V` of the clock on a uniform time lattice `t_k = k dt`.
/// Laplace-inverted pointwise values degrade next to discontinuities of `V`
/// (tabulated tails); the cell masses come from the smoother cumulative
/// transform.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryKernel {
    pub step: f64,
    /// `V(t_k)`; `values[0]` is `V(0+)` (infinite for stable clocks).
    pub values: Vec<f64>,
    /// `int_{[0, t_k]} V` including the atom for `k >= 1`; `cumulative[0] = 0`.
    pub cumulative: Vec<f64>,
    /// Cell masses `w_k = int_{[t_k, t_{k+1})} V`, atom included in `w_0`.
    pub cells: Vec<f64>,
    /// Mass of `V` at `t = 0`.
    pub atom: f64,
    pub provenance: KernelProvenance,
}

impl MemoryKernel {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `w_0, w_1 - w_0, w_2 - w_1, ...`
    fn cell_differences(&self) -> Vec<f64> {
        let mut d = Vec::with_capacity(self.cells.len());
        d.push(self.cells[0]);
        d.extend(self.cells.windows(2).map(|w| w[1] - w[0]));
        d
    }
}

fn cells_from_cumulative(cumulative: &[f64]) -> Vec<f64> {
    cumulative.windows(2).map(|w| w[1] - w[0]).collect()
}

/// `V` with Laplace transform `1 / (lambda (gamma + H_hat(lambda)))` at the
/// spatial point `x`, on `n` levels of step `dt`.
pub fn memory_kernel(spec: &ModelSpec, x: f64, dt: f64, n: usize, method: KernelMethod) -> Result<MemoryKernel> {
    if !spec.coeffs.gamma.is_time_homogeneous() {
        return Err(Error::unsupported(
            "memory kernel needs gamma and H independent of time",
        ));
    }
    if !(dt > 0.0) || n < 2 {
        return Err(Error::config("memory kernel grid needs dt > 0 and at least two levels"));
    }
    let xs = [x];
    let g = spec.coeffs.gamma_at(&xs, 0.0);
    let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let tail_zero = matches!(&spec.tail, TemporalTail::Custom(t) if t.is_zero());
    if tail_zero && g <= 0.0 {
        return Err(Error::domain("gamma = 0 and H = 0 leave the clock frozen"));
    }
    if method == KernelMethod::Auto {
        if tail_zero {
            return Ok(MemoryKernel {
                step: dt,
                values: vec![1.0 / g; n],
                cumulative: times.iter().map(|t| t / g).collect(),
                cells: vec![dt / g; n - 1],
                atom: 0.0,
                provenance: KernelProvenance::ClosedForm,
            });
        }
        if let (Some(beta), true) = (spec.tail.beta_at(&xs), g == 0.0) {
            let gb = gamma(beta);
            let gb1 = gamma(beta + 1.0);
            return Ok(MemoryKernel {
                step: dt,
                values: times
                    .iter()
                    .map(|&t| {
                        if t == 0.0 {
                            f64::INFINITY
                        } else {
                            t.powf(beta - 1.0) / gb
                        }
                    })
                    .collect(),
                cumulative: times.iter().map(|&t| t.powf(beta) / gb1).collect(),
                cells: stable_kernel_cells(beta, dt, n - 1),
                atom: 0.0,
                provenance: KernelProvenance::ClosedForm,
            });
        }
    }
    let h_hat = |l: Complex64| spec.tail.laplace(&xs, l);
    let atom = match &spec.tail {
        TemporalTail::Custom(t) if g == 0.0 => 1.0 / t.total_mass(),
        _ => 0.0,
    };
    // far left on the contour H_hat of a compactly supported tail overflows;
    // there 1 / H_hat vanishes
    let inv_psi = |l: Complex64| {
        let p = g + h_hat(l);
        if p.is_finite() {
            1.0 / p
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let v_hat = |l: Complex64| inv_psi(l) / l - atom;
    let cum_hat = |l: Complex64| inv_psi(l) / (l * l);
    let mut values = Vec::with_capacity(n);
    let mut cumulative = Vec::with_capacity(n);
    for &t in &times {
        if t == 0.0 {
            values.push(if g > 0.0 { 1.0 / g } else { f64::INFINITY });
            cumulative.push(0.0);
        } else {
            values.push(talbot_invert(v_hat, t, TALBOT_NODES));
            cumulative.push(talbot_invert(cum_hat, t, TALBOT_NODES));
        }
    }
    let cells = cells_from_cumulative(&cumulative);
    Ok(MemoryKernel {
        step: dt,
        values,
        cumulative,
        cells,
        atom,
        provenance: KernelProvenance::LaplaceInverted,
    })
}

/// Closed-form cell masses of `V(t) = t^{beta-1}/Gamma(beta)`.
pub fn stable_kernel_cells(beta: f64, dt: f64, n: usize) -> Vec<f64> {
    let scale = dt.powf(beta) / gamma(beta + 1.0);
    (0..n)
        .map(|k| {
            if k == 0 {
                scale
            } else {
                let k = k as f64;
                scale * k.powf(beta) * (beta * (1.0 / k).ln_1p()).exp_m1()
            }
        })
        .collect()
}

/// `Psi*` on space-time densities:
/// `(Psi* u)(x, t) = gamma u(x, t) + int_{s<t} u(x, s) H(t - s) ds`, with the
/// tail integrated exactly over each time cell.
pub fn psi_star_apply(measure: &GridMeasure, spec: &ModelSpec) -> Result<GridMeasure> {
    if spec.dim() != 1 {
        return Err(Error::unsupported("grid operators are one-dimensional"));
    }
    let (nx, nt) = measure.density.dim();
    let mut out = Array2::zeros((nx, nt));
    for i in 0..nx {
        let x = [measure.x.point(i)];
        let c = tail_cell_integrals(&spec.tail, &x, measure.t.step, nt);
        let g = spec.coeffs.gamma_at(&x, 0.0);
        let row = measure.density.row(i);
        for n in 0..nt {
            let conv = compensated_sum((0..=n).map(|j| row[j] * c[n - j]));
            out[[i, n]] = g * row[n] + conv;
        }
    }
    Ok(GridMeasure {
        x: measure.x,
        t: measure.t,
        density: out,
    })
}

/// `(Psi*)^{-1} u = d/dt (V * u)`: cell-averaged convolution with the
/// kernel's cell masses, then a backward difference in `t`. The difference
/// is taken on the kernel side, which keeps the identity clock exact.
/// `kernel_at` supplies the kernel for each spatial row.
pub fn psi_star_inverse(
    measure: &GridMeasure,
    kernel_at: &dyn Fn(usize) -> Result<MemoryKernel>,
) -> Result<GridMeasure> {
    let (nx, nt) = measure.density.dim();
    let dt = measure.t.step;
    let mut out = Array2::zeros((nx, nt));
    for i in 0..nx {
        let kernel = kernel_at(i)?;
        if ((kernel.step - dt) / dt).abs() > 1e-12 || kernel.len() < nt + 1 {
            return Err(Error::config(format!(
                "kernel grid (step {}, {} levels) does not cover the measure grid (step {dt}, {} levels)",
                kernel.step,
                kernel.len(),
                nt + 1
            )));
        }
        let dw = kernel.cell_differences();
        let row = measure.density.row(i);
        for n in 0..nt {
            out[[i, n]] = compensated_sum((0..=n).map(|j| row[j] * dw[n - j])) / dt;
        }
    }
    Ok(GridMeasure {
        x: measure.x,
        t: measure.t,
        density: out,
    })
}

/// `(Psi*)^{-1}` for a stable clock through the GL form of `d_t^{1-beta}`.
pub fn psi_star_inverse_gl(measure: &GridMeasure, order: &Order) -> Result<GridMeasure> {
    order.check(measure.x.n)?;
    let (nx, nt) = measure.density.dim();
    let dt = measure.t.step;
    let mut out = Array2::zeros((nx, nt));
    for i in 0..nx {
        let beta = order.at(i);
        let g = gl_weights(1.0 - beta, nt);
        let scale = dt.powf(beta - 1.0);
        let row = measure.density.row(i);
        for n in 0..nt {
            out[[i, n]] = scale * compensated_sum((0..=n).map(|k| g[k] * row[n - k]));
        }
    }
    Ok(GridMeasure {
        x: measure.x,
        t: measure.t,
        density: out,
    })
}
