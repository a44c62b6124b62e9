//! Backward equation `-A v = Psi h` on an `(x, s)` lattice, marched downward
//! in `s`.
//!
//! Uncoupled models use `D = Psi d_s`: with `psi` the discrete `Psi` weights
//! (`gamma` included in `psi_0`) and `kappa_k = (psi_{k-1} - psi_k) / ds`,
//! each level solves
//!
//! ```text
//! (psi_0 / ds - L) v_j = (Psi h)_j + sum_{k>=1} kappa_k v_{j+k}
//! ```
//!
//! For stable tails `psi` are `ds^{1-beta}` times GL weights of order
//! `beta - 1`, so the time part is the GL form of `d_{-s}^beta`. Levy walks
//! apply GL along the diagonals `(x + k theta ds, s + k ds)`.
//!
//! The spatial matrix is an M-matrix (implicit diffusion, upwinded implicit
//! drift), so `h >= 0` gives `v >= 0`, and `f = 1` reproduces
//! `v_j = ds sum_{i>=j} g_i` exactly away from the boundary.

use crate::error::{Error, Result};
use crate::frac_ops::{direction_signs, gl_weights, psi_apply, psi_weights, Quadrature};
use crate::grid::{Grid1d, GridField};
use crate::model::{Coupling, ModelSpec};
use crate::special::compensated_sum;

/// Default bump widths for [`terminal_expectation`].
pub const DEFAULT_BUMP_WIDTHS: [f64; 3] = [0.2, 0.1, 0.05];

/// Solution `v(x, s)` with the source it was driven by.
#[derive(Debug, Clone)]
pub struct BackwardField {
    pub values: GridField,
    /// `Psi h` on the lattice.
    pub source: GridField,
    pub warnings: Vec<String>,
}

impl BackwardField {
    /// Value at the lattice node nearest to `(x, s)`.
    pub fn value_at(&self, x: f64, s: f64) -> Result<f64> {
        let i = self.values.x.index_of(x)?;
        let j = self.values.t.index_of(s)?;
        Ok(self.values.at(i, j))
    }
}

/// Solves `-A v = Psi h` for `h(x, s) = g(s) f(x)` with `v = 0` on the
/// spatial edges, then checks `0 <= v <= sup|f| int g` when `f, g >= 0`.
pub fn solve_backward(
    spec: &ModelSpec,
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    x: Grid1d,
    s: Grid1d,
) -> Result<BackwardField> {
    let gs: Vec<f64> = (0..s.n).map(|j| g(s.point(j))).collect();
    let fs: Vec<f64> = (0..x.n).map(|i| f(x.point(i))).collect();
    if gs.iter().chain(&fs).any(|v| !v.is_finite()) {
        return Err(Error::domain("f and g must be finite on the lattice"));
    }
    if gs[s.n - 1] != 0.0 {
        return Err(Error::precondition(format!(
            "g must vanish at the window top s = {}",
            s.hi()
        )));
    }
    let mut h = GridField::zeros(x, s);
    for i in 0..x.n {
        for j in 0..s.n {
            h.values[[i, j]] = gs[j] * fs[i];
        }
    }
    let out = solve_backward_source(spec, &h)?;
    if gs.iter().chain(&fs).all(|v| *v >= 0.0) {
        let sup_f = fs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let int_g = s.step * compensated_sum(gs.iter().copied());
        let bound = sup_f * int_g;
        let top = out.values.max_abs();
        if top > bound * (1.0 + 1e-8) + f64::MIN_POSITIVE {
            return Err(Error::Invariant(format!(
                "backward solution {top:e} exceeds sup f * int g = {bound:e}"
            )));
        }
    }
    Ok(out)
}

/// Solves `-A v = Psi h` for a general source field `h` on the lattice.
pub fn solve_backward_source(spec: &ModelSpec, h: &GridField) -> Result<BackwardField> {
    if spec.dim() != 1 {
        return Err(Error::unsupported("the backward solver is one-dimensional"));
    }
    let (x, s) = (h.x, h.t);
    if x.n < 3 || s.n < 2 {
        return Err(Error::config("backward lattice too small"));
    }
    if let Coupling::LevyWalk(_) = spec.coupling {
        if ((x.step - s.step) / s.step).abs() > 1e-9 {
            return Err(Error::config(format!(
                "Levy-walk backward lattice needs dx = ds (got dx = {}, ds = {})",
                x.step, s.step
            )));
        }
    }
    let source = psi_apply(h, spec, Quadrature::Consistent)?;
    let values = match &spec.coupling {
        Coupling::Uncoupled => march_uncoupled(spec, &source)?,
        Coupling::LevyWalk(dirs) => march_levy_walk(spec, &source, &direction_signs(dirs)?)?,
    };
    if h.values.iter().all(|v| *v >= 0.0) {
        let low = values.iter().cloned().fold(f64::INFINITY, f64::min);
        if low < 0.0 {
            return Err(Error::Invariant(format!(
                "maximum principle violated: min v = {low:e} for a nonnegative source"
            )));
        }
    }
    Ok(BackwardField {
        values: GridField { x, t: s, values },
        source,
        warnings: Vec::new(),
    })
}

/// Row coefficients of `c0 v - L v` at node `i`.
fn spatial_row(spec: &ModelSpec, y: f64, t: f64, dx: f64, c0: f64) -> (f64, f64, f64) {
    let a = spec.coeffs.diffusion.scalar(&[y], t);
    let b = spec.coeffs.drift[0].eval(&[y], t);
    let dif = 0.5 * a / (dx * dx);
    let sub = -dif - (-b).max(0.0) / dx;
    let sup = -dif - b.max(0.0) / dx;
    (sub, c0 + 2.0 * dif + b.abs() / dx, sup)
}

/// Tridiagonal solve on the interior rows.
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

fn march_uncoupled(spec: &ModelSpec, source: &GridField) -> Result<ndarray::Array2<f64>> {
    let (x, s) = (source.x, source.t);
    let (nx, ns, ds) = (x.n, s.n, s.step);
    // psi weights per row without gamma, shared between rows of equal order
    let mut weights: Vec<std::rc::Rc<Vec<f64>>> = Vec::with_capacity(nx);
    let mut cache: Option<(f64, std::rc::Rc<Vec<f64>>)> = None;
    for i in 0..nx {
        let y = [x.point(i)];
        let key = spec.tail.beta_at(&y).unwrap_or(-1.0);
        if cache.as_ref().is_none_or(|(b, _)| *b != key) {
            let w = psi_weights(&spec.tail, &y, ds, ns + 1, Quadrature::Consistent);
            cache = Some((key, std::rc::Rc::new(w)));
        }
        weights.push(cache.as_ref().unwrap().1.clone());
    }
    let mut v = ndarray::Array2::<f64>::zeros((nx, ns));
    let m = nx - 2;
    let (mut sub, mut diag, mut sup) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut rhs = vec![0.0; m];
    let mut work = vec![0.0; m];
    for j in (0..ns).rev() {
        let sj = s.point(j);
        for r in 0..m {
            let i = r + 1;
            let y = x.point(i);
            let w = &weights[i];
            let gamma = spec.coeffs.gamma_at(&[y], sj);
            let psi0 = gamma + w[0];
            // kappa_1 carries gamma, later kappa only the tail
            let mut acc = Vec::with_capacity(ns - j);
            for k in 1..ns - j {
                let prev = if k == 1 { psi0 } else { w[k - 1] };
                acc.push((prev - w[k]) / ds * v[[i, j + k]]);
            }
            rhs[r] = source.values[[i, j]] + compensated_sum(acc);
            let (a, b, c) = spatial_row(spec, y, sj, x.step, psi0 / ds);
            sub[r] = a;
            diag[r] = b;
            sup[r] = c;
        }
        thomas(&sub, &diag, &sup, &mut rhs, &mut work);
        for r in 0..m {
            v[[r + 1, j]] = rhs[r];
        }
    }
    Ok(v)
}

fn march_levy_walk(spec: &ModelSpec, source: &GridField, signs: &[(isize, f64)]) -> Result<ndarray::Array2<f64>> {
    let (x, s) = (source.x, source.t);
    let (nx, ns, ds) = (x.n, s.n, s.step);
    let beta = spec
        .tail
        .beta_at(&[0.0])
        .ok_or_else(|| Error::unsupported("Levy walks need a stable tail"))?;
    let scale = ds.powf(-beta);
    let g = gl_weights(beta, ns);
    let mut v = ndarray::Array2::<f64>::zeros((nx, ns));
    let m = nx - 2;
    let (mut sub, mut diag, mut sup) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut rhs = vec![0.0; m];
    let mut work = vec![0.0; m];
    for j in (0..ns).rev() {
        let sj = s.point(j);
        for r in 0..m {
            let i = r + 1;
            let mut acc = Vec::new();
            for &(sign, lam) in signs {
                for k in 1..ns - j {
                    let xi = i as isize + sign * k as isize;
                    if xi <= 0 || xi >= nx as isize - 1 {
                        break;
                    }
                    acc.push(-lam * scale * g[k] * v[[xi as usize, j + k]]);
                }
            }
            rhs[r] = source.values[[i, j]] + compensated_sum(acc);
            let (a, b, c) = spatial_row(spec, x.point(i), sj, x.step, scale);
            sub[r] = a;
            diag[r] = b;
            sup[r] = c;
        }
        thomas(&sub, &diag, &sup, &mut rhs, &mut work);
        for r in 0..m {
            v[[r + 1, j]] = rhs[r];
        }
    }
    Ok(v)
}

/// Normalized polynomial bump `30 (tau - t)^2 (t + w - tau)^2 / w^5` on
/// `(t, t + w)`.
pub fn bump(t: f64, w: f64) -> impl Fn(f64) -> f64 {
    move |tau: f64| {
        if tau <= t || tau >= t + w {
            0.0
        } else {
            let (p, q) = (tau - t, t + w - tau);
            30.0 * p * p * q * q / w.powi(5)
        }
    }
}

/// `E^{x,s} f(X_t)` from a sweep of bumps concentrating at `t` from the
/// right.
#[derive(Debug, Clone)]
pub struct TerminalExpectation {
    pub widths: Vec<f64>,
    /// One backward field per width.
    pub sweep: Vec<GridField>,
    /// First-order Richardson extrapolation of the two narrowest widths,
    /// meaningful for `s < t`.
    pub extrapolated: GridField,
    pub warnings: Vec<String>,
}

impl TerminalExpectation {
    pub fn value_at(&self, x: f64, s: f64) -> Result<f64> {
        let i = self.extrapolated.x.index_of(x)?;
        let j = self.extrapolated.t.index_of(s)?;
        Ok(self.extrapolated.at(i, j))
    }

    /// Sweep values at a node, widest first.
    pub fn sweep_at(&self, x: f64, s: f64) -> Result<Vec<f64>> {
        let i = self.extrapolated.x.index_of(x)?;
        let j = self.extrapolated.t.index_of(s)?;
        Ok(self.sweep.iter().map(|f| f.at(i, j)).collect())
    }
}

/// Solves the backward equation for bumps `g_w` on `(t, t + w)`, each
/// renormalized so that its lattice integral is one, and extrapolates
/// `w -> 0`.
pub fn terminal_expectation(
    spec: &ModelSpec,
    f: &dyn Fn(f64) -> f64,
    t: f64,
    x: Grid1d,
    s: Grid1d,
    widths: &[f64],
) -> Result<TerminalExpectation> {
    if widths.len() < 2 || widths.windows(2).any(|w| !(w[1] < w[0])) || widths.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::config(
            "bump widths must be positive and strictly decreasing (at least two)",
        ));
    }
    if !(t > s.lo && t + widths[0] < s.hi()) {
        return Err(Error::precondition(format!(
            "t = {t} with widest bump {} must lie inside the window [{}, {})",
            widths[0],
            s.lo,
            s.hi()
        )));
    }
    let mut sweep = Vec::with_capacity(widths.len());
    for &w in widths {
        let raw = bump(t, w);
        let mass = s.step * compensated_sum((0..s.n).map(|j| raw(s.point(j))));
        if !(mass > 0.0) {
            return Err(Error::config(format!(
                "bump width {w} is below the time step {}",
                s.step
            )));
        }
        let g = move |tau: f64| raw(tau) / mass;
        sweep.push(solve_backward(spec, f, &g, x, s)?.values);
    }
    let n = sweep.len();
    let (wa, wb) = (widths[n - 2], widths[n - 1]);
    let mut extrapolated = sweep[n - 1].clone();
    extrapolated.values = (&sweep[n - 1].values * wa - &sweep[n - 2].values * wb) / (wa - wb);

    let mut warnings = Vec::new();
    if n >= 3 {
        let scale = sweep
            .iter()
            .map(|f| f.max_abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        // nodes within the widest bump of t see the bump shape itself
        let j_hi = s.nearest(t - widths[0]).unwrap_or(0);
        let mut bad = 0usize;
        for i in 0..x.n {
            for j in 0..j_hi {
                let d: Vec<f64> = (0..n - 1).map(|k| sweep[k].at(i, j) - sweep[k + 1].at(i, j)).collect();
                for p in d.windows(2) {
                    let flips = p[0] * p[1] < 0.0 || p[1].abs() > 1.5 * p[0].abs();
                    if flips && p[1].abs() > 1e-3 * scale {
                        bad += 1;
                    }
                }
            }
        }
        if bad > 0 {
            warnings.push(format!(
                "bump-width sweep is non-monotone at {bad} nodes; extrapolation may be unreliable"
            ));
        }
    }
    Ok(TerminalExpectation {
        widths: widths.to_vec(),
        sweep,
        extrapolated,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{levy_walk_preset, subdiffusion_preset, variable_order_preset, DirectionWeights, ScalarField};

    fn lattice() -> (Grid1d, Grid1d) {
        (Grid1d::centered(6.0, 121).unwrap(), Grid1d::new(0.0, 2.0, 201).unwrap())
    }

    #[test]
    fn zero_inputs_give_zero() {
        let spec = subdiffusion_preset(0.5, ScalarField::zero()).unwrap();
        let (x, s) = lattice();
        let g = bump(1.0, 0.5);
        let v = solve_backward(&spec, &|_| 0.0, &g, x, s).unwrap();
        assert_eq!(v.values.max_abs(), 0.0);
        let v = solve_backward(&spec, &|_| 1.0, &|_| 0.0, x, s).unwrap();
        assert_eq!(v.values.max_abs(), 0.0);
    }

    #[test]
    fn constant_f_reproduces_tail_integral_of_g() {
        for spec in [
            subdiffusion_preset(0.5, ScalarField::constant(0.2)).unwrap(),
            variable_order_preset(ScalarField::spatial(|x| 0.5 + 0.2 * (x[0] * 0.3).tanh()), 0.06).unwrap(),
        ] {
            let (x, s) = lattice();
            let g = bump(1.0, 0.5);
            let v = solve_backward(&spec, &|_| 1.0, &g, x, s).unwrap();
            let j0 = s.index_of(0.4).unwrap();
            let exact = s.step * (j0..s.n).map(|j| g(s.point(j))).sum::<f64>();
            let got = v.value_at(0.0, 0.4).unwrap();
            assert!((got - exact).abs() < 1e-3 * exact, "{got} vs {exact}");
        }
    }

    #[test]
    fn support_touching_top_is_rejected() {
        let spec = subdiffusion_preset(0.5, ScalarField::zero()).unwrap();
        let (x, s) = lattice();
        let res = solve_backward(&spec, &|_| 1.0, &|_| 1.0, x, s);
        assert!(matches!(res, Err(Error::Precondition(_))));
    }

    #[test]
    fn levy_walk_needs_diagonal_lattice() {
        let spec = levy_walk_preset(0.5, vec![ScalarField::zero()], DirectionWeights::symmetric_1d()).unwrap();
        let (x, s) = lattice();
        let res = solve_backward(&spec, &|_| 1.0, &bump(1.0, 0.5), x, s);
        assert!(matches!(res, Err(Error::Config(_))));
    }

    #[test]
    fn levy_walk_light_cone() {
        let spec = levy_walk_preset(0.6, vec![ScalarField::zero()], DirectionWeights::symmetric_1d()).unwrap();
        let x = Grid1d::with_step(-4.0, 0.02, 401).unwrap();
        let s = Grid1d::with_step(0.0, 0.02, 101).unwrap();
        // f supported on [2.5, 3], g on (1, 1.5): cone of (x, 0) reaches |y - x| <= 1.5
        let f = |y: f64| if (2.5..=3.0).contains(&y) { 1.0 } else { 0.0 };
        let v = solve_backward(&spec, &f, &bump(1.0, 0.5), x, s).unwrap();
        for i in 0..x.n {
            let y = x.point(i);
            if !(2.5 - 1.5 - 1e-9..=3.0 + 1.5 + 1e-9).contains(&y) {
                assert_eq!(v.values.at(i, 0), 0.0, "x = {y}");
            }
        }
        assert!(v.value_at(2.0, 0.0).unwrap() > 0.0);
    }

    #[test]
    fn terminal_expectation_of_one_is_one() {
        let spec = subdiffusion_preset(0.5, ScalarField::zero()).unwrap();
        let (x, s) = lattice();
        let te = terminal_expectation(&spec, &|_| 1.0, 1.0, x, s, &DEFAULT_BUMP_WIDTHS).unwrap();
        assert!((te.value_at(0.0, 0.0).unwrap() - 1.0).abs() < 1e-3);
        assert_eq!(te.sweep_at(0.0, 0.0).unwrap().len(), 3);
        assert!(te.warnings.is_empty());
    }

    #[test]
    fn erratic_width_sweep_warns() {
        let spec = subdiffusion_preset(0.5, ScalarField::zero()).unwrap();
        let (x, s) = lattice();
        let f = |y: f64| (-y * y / 2.0).exp();
        let te = terminal_expectation(&spec, &f, 1.0, x, s, &[0.2, 0.19, 0.02]).unwrap();
        assert!(!te.warnings.is_empty());
    }
}
