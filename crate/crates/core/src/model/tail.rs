//! Tail functions `H(x, s; v) = K(x, s; R^d, (v, inf))` of the temporal jump
//! measure.

use num_complex::Complex64;

use super::field::ScalarField;
use crate::error::{Error, Result};
use crate::special::gamma;

/// `H_beta(v) = v^{-beta} / Gamma(1 - beta)`.
#[inline]
pub fn stable_tail(beta: f64, v: f64) -> f64 {
    v.powf(-beta) / gamma(1.0 - beta)
}

/// `int_0^v H_beta = v^{1-beta} / Gamma(2 - beta)`.
#[inline]
pub fn stable_tail_antiderivative(beta: f64, v: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else {
        v.powf(1.0 - beta) / gamma(2.0 - beta)
    }
}

/// `int_0^delta w h_beta(w) dw` for the stable Levy density.
#[inline]
pub fn stable_small_jump_mean(beta: f64, delta: f64) -> f64 {
    beta * delta.powf(1.0 - beta) / ((1.0 - beta) * gamma(1.0 - beta))
}

/// Tabulated, nonincreasing tail. Constant `h[0]` below `v[0]`, linear
/// between nodes, zero from `v[last]` on; the jump at `v[last]` is an atom
/// of the Levy measure.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedTail {
    v: Vec<f64>,
    h: Vec<f64>,
}

impl TabulatedTail {
    pub fn new(v: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if v.len() != h.len() {
            return Err(Error::domain("tail table needs matching node and value lists"));
        }
        if v.first().is_some_and(|&v0| v0 <= 0.0) {
            return Err(Error::domain("tail table nodes must be positive"));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("tail table nodes must be strictly increasing"));
        }
        if h.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::domain("tail values must be finite and nonnegative"));
        }
        if h.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::domain("tail function must be nonincreasing"));
        }
        Ok(Self { v, h })
    }

    /// `H == 0`.
    pub fn zero() -> Self {
        Self {
            v: Vec::new(),
            h: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.h.iter().all(|&x| x == 0.0)
    }

    /// Total jump intensity `H(0+)`.
    pub fn total_mass(&self) -> f64 {
        self.h.first().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, v: f64) -> f64 {
        let n = self.v.len();
        if n == 0 || v >= self.v[n - 1] {
            return 0.0;
        }
        if v < self.v[0] {
            return self.h[0];
        }
        let i = self.v.partition_point(|&vi| vi <= v) - 1;
        let w = (v - self.v[i]) / (self.v[i + 1] - self.v[i]);
        self.h[i] + w * (self.h[i + 1] - self.h[i])
    }

    /// Exact `int_0^v H`.
    pub fn antiderivative(&self, v: f64) -> f64 {
        if v <= 0.0 || self.v.is_empty() {
            return 0.0;
        }
        let mut acc = self.h[0] * v.min(self.v[0]);
        for i in 0..self.v.len() - 1 {
            let (a, b) = (self.v[i], self.v[i + 1]);
            if v <= a {
                break;
            }
            let hi = v.min(b);
            let m = (self.h[i + 1] - self.h[i]) / (b - a);
            acc += (self.h[i] + 0.5 * m * (hi - a)) * (hi - a);
        }
        acc
    }

    /// `int_0^inf e^{-lambda v} H(v) dv` for `Re(lambda) > 0`.
    pub fn laplace(&self, lambda: Complex64) -> Complex64 {
        if self.v.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let e = |v: f64| (-lambda * v).exp();
        let mut acc = self.h[0] * (Complex64::new(1.0, 0.0) - e(self.v[0])) / lambda;
        for i in 0..self.v.len() - 1 {
            let (a, b) = (self.v[i], self.v[i + 1]);
            let m = (self.h[i + 1] - self.h[i]) / (b - a);
            let prim = |v: f64| {
                let ev = e(v);
                -(self.h[i] + m * (v - a)) * ev / lambda - m * ev / (lambda * lambda)
            };
            acc += prim(b) - prim(a);
        }
        acc
    }

    /// Inverse-tail sampling: `W = sup { w : H(w) >= u H(0+) }`, `u in (0, 1]`,
    /// so that `P(W > w) = H(w) / H(0+)`.
    pub fn inverse(&self, u: f64) -> f64 {
        let target = u * self.total_mass();
        let n = self.v.len();
        if target <= self.h[n - 1] {
            return self.v[n - 1];
        }
        if target > self.h[0] {
            return self.v[0];
        }
        let j = self.h.partition_point(|&hi| hi >= target);
        let (a, b) = (self.v[j - 1], self.v[j]);
        let (ha, hb) = (self.h[j - 1], self.h[j]);
        a + (ha - target) / (ha - hb) * (b - a)
    }
}

/// Family of temporal tails supported by the samplers and solvers.
#[derive(Debug, Clone)]
pub enum TemporalTail {
    /// `H_beta` with constant order.
    Stable { beta: f64 },
    /// `H_{beta(x)}` with spatially varying order in `(eps, 1 - eps)`.
    VariableStable {
        beta: ScalarField,
        eps: f64,
        lipschitz: f64,
    },
    /// Tabulated tail, independent of `(x, s)`.
    Custom(TabulatedTail),
}

impl TemporalTail {
    /// Order of the stable tail at `x`, if the tail is stable.
    #[inline]
    pub fn beta_at(&self, x: &[f64]) -> Option<f64> {
        match self {
            TemporalTail::Stable { beta } => Some(*beta),
            TemporalTail::VariableStable { beta, .. } => Some(beta.eval(x, 0.0)),
            TemporalTail::Custom(_) => None,
        }
    }

    /// `H(x; v)` for `v > 0`.
    pub fn eval(&self, x: &[f64], v: f64) -> f64 {
        match self {
            TemporalTail::Custom(t) => t.eval(v),
            _ => stable_tail(self.beta_at(x).unwrap(), v),
        }
    }

    /// `int_0^v H(x; w) dw`.
    pub fn antiderivative(&self, x: &[f64], v: f64) -> f64 {
        match self {
            TemporalTail::Custom(t) => t.antiderivative(v),
            _ => stable_tail_antiderivative(self.beta_at(x).unwrap(), v),
        }
    }

    /// Laplace transform `H^(x; lambda)`.
    pub fn laplace(&self, x: &[f64], lambda: Complex64) -> Complex64 {
        match self {
            TemporalTail::Custom(t) => t.laplace(lambda),
            _ => {
                let beta = self.beta_at(x).unwrap();
                (lambda.ln() * (beta - 1.0)).exp()
            }
        }
    }

    /// Numerical value of `int_0^1 sup_x H(x; v) dv` over the probe points.
    pub fn uniform_integrability(&self, probe_xs: &[Vec<f64>]) -> Result<f64> {
        match self {
            TemporalTail::Stable { beta } => Ok(stable_tail_antiderivative(*beta, 1.0)),
            TemporalTail::Custom(t) => Ok(t.antiderivative(1.0)),
            TemporalTail::VariableStable { .. } => {
                let betas: Vec<f64> = probe_xs.iter().map(|x| self.beta_at(x).unwrap()).collect();
                let bmax = betas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if !(bmax < 1.0) {
                    return Err(Error::domain("tail order reaches 1; not integrable at 0"));
                }
                let sup = |v: f64| betas.iter().map(|&b| stable_tail(b, v)).fold(0.0, f64::max);
                // trapezoid in log v on [1e-12, 1], closed form below with bmax
                let lo = 1e-12f64;
                let n = 2000;
                let (la, lb) = (lo.ln(), 0.0);
                let hstep = (lb - la) / n as f64;
                let mut acc = 0.0;
                for i in 0..=n {
                    let v = (la + hstep * i as f64).exp();
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    acc += w * sup(v) * v;
                }
                let head = betas
                    .iter()
                    .map(|&b| stable_tail_antiderivative(b, lo))
                    .fold(0.0, f64::max);
                let total = acc * hstep + head;
                if total.is_finite() {
                    Ok(total)
                } else {
                    Err(Error::domain("uniform integrability integral diverges"))
                }
            }
        }
    }
}
