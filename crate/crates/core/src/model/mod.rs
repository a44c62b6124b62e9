//! Model coefficients and the three anomalous-diffusion presets.
//!
//! A [`ModelSpec`] carries everything the space-time generator needs: the
//! drift `b`, diffusion `a` and temporal drift `gamma` of the coefficient
//! field, the tail `H` of the temporal jump measure, the pre-limit spatial
//! jump rule and the coupling between jumps and waiting times.

mod field;
mod tail;

use rand::Rng;
use rand_distr::StandardNormal;

pub use field::{
    probe_grid, psd_cholesky, CoefficientField, DiffusionField, ScalarField, SpaceTimeFn, SpatialFn, Table1d,
};
pub use tail::{stable_small_jump_mean, stable_tail, stable_tail_antiderivative, TabulatedTail, TemporalTail};

use crate::error::{Error, Result};

/// Default lower margin `eps` for variable-order tails, `beta(x) in (eps, 1 - eps)`.
pub const DEFAULT_ORDER_MARGIN: f64 = 0.05;

/// Pre-limit spatial jump rule of the discrete chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialJumps {
    /// No separate spatial jump (coupled models carry it in the coupling).
    None,
    /// Nearest-neighbour lattice with spacing `c^{-1/2}` and bias
    /// `r - l = b * dx`.
    Lattice,
    /// Gaussian jump with mean `b / c` and covariance `a / c`.
    Gaussian,
}

/// Probability distribution of jump directions on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub enum DirectionWeights {
    /// Finitely many unit vectors with probabilities.
    Discrete {
        directions: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    /// Uniform distribution on the sphere in `dim` dimensions.
    Isotropic { dim: usize },
}

impl DirectionWeights {
    /// One-dimensional signs `+1` and `-1` with the given probabilities.
    pub fn signs(p_plus: f64, p_minus: f64) -> Result<Self> {
        Self::discrete(vec![vec![1.0], vec![-1.0]], vec![p_plus, p_minus])
    }

    pub fn symmetric_1d() -> Self {
        Self::signs(0.5, 0.5).unwrap()
    }

    pub fn discrete(directions: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if directions.is_empty() || directions.len() != weights.len() {
            return Err(Error::domain("direction weights need one weight per direction"));
        }
        let dim = directions[0].len();
        if dim == 0 || directions.iter().any(|d| d.len() != dim) {
            return Err(Error::domain("directions must share a positive dimension"));
        }
        for d in &directions {
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::domain("directions must be unit vectors"));
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::domain("direction weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("direction weights must sum to 1 (got {total})")));
        }
        Ok(DirectionWeights::Discrete { directions, weights })
    }

    pub fn dim(&self) -> usize {
        match self {
            DirectionWeights::Discrete { directions, .. } => directions[0].len(),
            DirectionWeights::Isotropic { dim } => *dim,
        }
    }

    /// Draws a direction into `out`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            DirectionWeights::Discrete { directions, weights } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = directions.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                out.copy_from_slice(&directions[pick]);
            }
            DirectionWeights::Isotropic { .. } => loop {
                for o in out.iter_mut() {
                    *o = rng.sample(StandardNormal);
                }
                let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 1e-300 {
                    out.iter_mut().for_each(|o| *o /= norm);
                    break;
                }
            },
        }
    }

    /// Mean direction `int theta lambda(d theta)`.
    pub fn mean(&self, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        if let DirectionWeights::Discrete { directions, weights } = self {
            for (d, w) in directions.iter().zip(weights) {
                for (o, v) in out.iter_mut().zip(d) {
                    *o += w * v;
                }
            }
        }
    }

    /// `lambda({theta : pred(theta)})` for discrete weights.
    pub fn mass_where(&self, pred: impl Fn(&[f64]) -> bool) -> Result<f64> {
        match self {
            DirectionWeights::Discrete { directions, weights } => Ok(directions
                .iter()
                .zip(weights)
                .filter(|(d, _)| pred(d))
                .map(|(_, w)| w)
                .sum()),
            DirectionWeights::Isotropic { .. } => Err(Error::unsupported(
                "directional masses are only tabulated for discrete weights",
            )),
        }
    }

    /// Reflected weights `theta -> -theta`.
    pub fn reflected(&self) -> Self {
        match self {
            DirectionWeights::Discrete { directions, weights } => DirectionWeights::Discrete {
                directions: directions.iter().map(|d| d.iter().map(|v| -v).collect()).collect(),
                weights: weights.clone(),
            },
            iso => iso.clone(),
        }
    }
}

/// Coupling between waiting times and spatial jumps.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    Uncoupled,
    /// Jump of size `w * theta` paired with a waiting time `w`.
    LevyWalk(DirectionWeights),
}

/// Full model specification.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub name: String,
    pub coeffs: CoefficientField,
    pub tail: TemporalTail,
    pub spatial_jumps: SpatialJumps,
    pub coupling: Coupling,
}

impl ModelSpec {
    /// Assembles a spec and checks the structural invariants on a default
    /// probe grid.
    pub fn new(
        name: impl Into<String>,
        coeffs: CoefficientField,
        tail: TemporalTail,
        spatial_jumps: SpatialJumps,
        coupling: Coupling,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            coeffs,
            tail,
            spatial_jumps,
            coupling,
        };
        spec.check_invariants(&probe_grid(spec.dim(), -10.0, 10.0, 101, &[-1.0, 0.0, 1.0, 10.0]))?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim
    }

    pub fn is_coupled(&self) -> bool {
        matches!(self.coupling, Coupling::LevyWalk(_))
    }

    /// `gamma` and `H` independent of time (the tails supported here never
    /// depend on time).
    pub fn is_time_homogeneous_in_time_component(&self) -> bool {
        self.coeffs.gamma.is_time_homogeneous()
    }

    pub fn check_invariants(&self, probes: &[(Vec<f64>, f64)]) -> Result<()> {
        self.coeffs.check_at(probes)?;
        match &self.tail {
            TemporalTail::Stable { beta } => check_order(*beta)?,
            TemporalTail::VariableStable { beta, eps, lipschitz } => {
                for (x, s) in probes {
                    let b = beta.eval(x, *s);
                    if !(b > *eps && b < 1.0 - eps) {
                        return Err(Error::domain(format!(
                            "beta(x) = {b} at x = {x:?} outside ({eps}, {})",
                            1.0 - eps
                        )));
                    }
                }
                check_lipschitz(beta, *lipschitz, self.dim())?;
            }
            TemporalTail::Custom(_) => {}
        }
        let xs: Vec<Vec<f64>> = probes.iter().map(|(x, _)| x.clone()).collect();
        self.tail.uniform_integrability(&xs)?;
        if let Coupling::LevyWalk(w) = &self.coupling {
            if w.dim() != self.dim() {
                return Err(Error::domain("direction weights dimension differs from model"));
            }
            let mut a = vec![0.0; self.dim() * self.dim()];
            for (x, s) in probes {
                self.coeffs.diffusion.matrix(x, *s, &mut a);
                let g = self.coeffs.gamma_at(x, *s);
                if a.iter().any(|v| *v != 0.0) || g != 0.0 {
                    return Err(Error::domain(
                        "Levy-walk coupling requires zero diffusion and zero gamma",
                    ));
                }
            }
        }
        if self.spatial_jumps == SpatialJumps::Lattice && self.dim() != 1 {
            return Err(Error::domain("lattice jumps are one-dimensional"));
        }
        Ok(())
    }

    /// `H(x, s; v)`.
    pub fn eval_tail(&self, x: &[f64], _s: f64, v: f64) -> Result<f64> {
        if !(v > 0.0) {
            return Err(Error::domain(format!("tail argument must be positive, got {v}")));
        }
        Ok(self.tail.eval(x, v))
    }

    /// Pre-limit tail `1 ^ [H(x; w) / c]` of the waiting time at scale `c`.
    pub fn prelimit_tail(&self, x: &[f64], c: f64, w: f64) -> Result<f64> {
        Ok((self.eval_tail(x, 0.0, w)? / c).min(1.0))
    }

    /// Lattice spacing at scale `c`: `dx^2 = 1 / c`.
    pub fn lattice_spacing(&self, c: f64) -> f64 {
        c.powf(-0.5)
    }

    /// Left/right probabilities `(l, r)` with `l + r = 1`, `r - l = b dx`.
    pub fn lattice_probabilities(&self, x: &[f64], s: f64, dx: f64) -> Result<(f64, f64)> {
        let b = self.coeffs.drift[0].eval(x, s);
        let bias = b * dx;
        if bias.abs() > 1.0 {
            return Err(Error::domain(format!(
                "lattice bias |b dx| = {} exceeds 1; increase the scale c",
                bias.abs()
            )));
        }
        let r = 0.5 * (1.0 + bias);
        Ok((1.0 - r, r))
    }

    /// Levy-walk joint tail `K(|z| > v, w > v)`; jumps have `|z| = w`.
    pub fn joint_tail_mass(&self, v: f64) -> Result<f64> {
        match &self.coupling {
            Coupling::LevyWalk(_) => self.eval_tail(&vec![0.0; self.dim()], 0.0, v),
            Coupling::Uncoupled => Err(Error::unsupported("joint tail of an uncoupled model")),
        }
    }

    /// `K({w theta : theta in A, w > v})` for a direction predicate `A`.
    pub fn directional_tail_mass(&self, pred: impl Fn(&[f64]) -> bool, v: f64) -> Result<f64> {
        match &self.coupling {
            Coupling::LevyWalk(w) => Ok(w.mass_where(pred)? * self.eval_tail(&vec![0.0; self.dim()], 0.0, v)?),
            Coupling::Uncoupled => Err(Error::unsupported("directional tail of an uncoupled model")),
        }
    }
}

fn check_order(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "beta = {beta} must lie in the open interval (0, 1)"
        )))
    }
}

fn check_lipschitz(beta: &ScalarField, lipschitz: f64, dim: usize) -> Result<()> {
    let n = 2001;
    let (lo, hi) = (-20.0, 20.0);
    let h = (hi - lo) / (n - 1) as f64;
    let mut prev = beta.eval(&vec![lo; dim], 0.0);
    for i in 1..n {
        let x = lo + h * i as f64;
        let cur = beta.eval(&vec![x; dim], 0.0);
        // along the diagonal the Euclidean step is h * sqrt(dim)
        if (cur - prev).abs() > lipschitz * h * (dim as f64).sqrt() * (1.0 + 1e-9) + 1e-15 {
            return Err(Error::domain(format!(
                "beta field exceeds declared Lipschitz constant {lipschitz} near x = {x}"
            )));
        }
        prev = cur;
    }
    Ok(())
}

fn drift_bound(drift: &ScalarField) -> f64 {
    match drift {
        ScalarField::Constant(v) => v.abs(),
        ScalarField::Tabulated(t) => t.max_abs(),
        _ => 0.0,
    }
}

fn bound_from_probes(drift: &[ScalarField]) -> f64 {
    let probes = probe_grid(drift.len(), -50.0, 50.0, 1001, &[-10.0, 0.0, 1.0, 10.0, 100.0]);
    let mut m = drift.iter().map(drift_bound).fold(1.0f64, f64::max);
    for (x, s) in &probes {
        for b in drift {
            m = m.max(b.eval(x, *s).abs());
        }
    }
    m
}

/// Subdiffusion in a time-dependent potential: `a = 1`, `gamma = 0`, stable
/// waiting-time tail of order `beta`, drift `b(x, s)` realised on a biased
/// lattice in the pre-limit chain.
pub fn subdiffusion_preset(beta: f64, drift: ScalarField) -> Result<ModelSpec> {
    check_order(beta)?;
    let bound = bound_from_probes(std::slice::from_ref(&drift));
    let coeffs = CoefficientField::new(
        vec![drift],
        DiffusionField::Isotropic(ScalarField::constant(1.0)),
        ScalarField::zero(),
        bound,
    )?;
    ModelSpec::new(
        "subdiffusion",
        coeffs,
        TemporalTail::Stable { beta },
        SpatialJumps::Lattice,
        Coupling::Uncoupled,
    )
}

/// Traps of spatially varying depth: `a = 1`, `b = 0`, `gamma = 0`, tail
/// order `beta(x)`. The margin defaults to [`DEFAULT_ORDER_MARGIN`].
pub fn variable_order_preset(beta_field: ScalarField, lipschitz: f64) -> Result<ModelSpec> {
    variable_order_preset_with_margin(beta_field, lipschitz, DEFAULT_ORDER_MARGIN)
}

pub fn variable_order_preset_with_margin(beta_field: ScalarField, lipschitz: f64, eps: f64) -> Result<ModelSpec> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::domain(format!("order margin eps = {eps} must lie in (0, 1/2)")));
    }
    if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
        return Err(Error::domain("Lipschitz constant must be finite and nonnegative"));
    }
    if !beta_field.is_time_homogeneous() {
        return Err(Error::domain("beta field must not depend on time"));
    }
    let coeffs = CoefficientField::new(
        vec![ScalarField::zero()],
        DiffusionField::Isotropic(ScalarField::constant(1.0)),
        ScalarField::zero(),
        1.0,
    )?;
    let tail = match beta_field.as_constant() {
        Some(beta) if beta > eps && beta < 1.0 - eps => TemporalTail::Stable { beta },
        Some(beta) => return Err(Error::domain(format!("beta = {beta} outside ({eps}, {})", 1.0 - eps))),
        None => TemporalTail::VariableStable {
            beta: beta_field,
            eps,
            lipschitz,
        },
    };
    let mut spec = ModelSpec::new(
        "variable_order",
        coeffs,
        tail,
        SpatialJumps::Lattice,
        Coupling::Uncoupled,
    )?;
    if matches!(spec.tail, TemporalTail::Stable { .. }) {
        spec.name = "variable_order".into();
    }
    Ok(spec)
}

/// Levy walk with drift: `a = 0`, `gamma = 0`, jumps `w * theta` paired with
/// waiting times `w` drawn from the stable tail of order `beta`.
pub fn levy_walk_preset(beta: f64, drift: Vec<ScalarField>, directions: DirectionWeights) -> Result<ModelSpec> {
    check_order(beta)?;
    if drift.len() != directions.dim() {
        return Err(Error::domain("drift and direction weights differ in dimension"));
    }
    let bound = bound_from_probes(&drift);
    let coeffs = CoefficientField::new(drift, DiffusionField::zero(), ScalarField::zero(), bound)?;
    ModelSpec::new(
        "levy_walk",
        coeffs,
        TemporalTail::Stable { beta },
        SpatialJumps::None,
        Coupling::LevyWalk(directions),
    )
}
