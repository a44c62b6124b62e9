//! Coefficient fields of the space-time generator: drift `b`, diffusion `a`
//! and temporal drift `gamma`, each a function of position and time.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type SpatialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Piecewise-linear table over the first spatial coordinate, constant
/// beyond the end nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table1d {
    xs: Vec<f64>,
    values: Vec<f64>,
}

impl Table1d {
    pub fn new(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || xs.len() != values.len() {
            return Err(Error::domain("table needs matching, nonempty node and value lists"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("table nodes must be strictly increasing"));
        }
        if xs.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("table entries must be finite"));
        }
        Ok(Self { xs, values })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.values[0];
        }
        if x >= self.xs[n - 1] {
            return self.values[n - 1];
        }
        let i = self.xs.partition_point(|&xi| xi <= x) - 1;
        let w = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A scalar coefficient `(x, s) -> value`.
#[derive(Clone)]
pub enum ScalarField {
    Constant(f64),
    Spatial(SpatialFn),
    SpaceTime(SpaceTimeFn),
    Tabulated(Table1d),
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        ScalarField::Constant(value)
    }

    pub fn zero() -> Self {
        ScalarField::Constant(0.0)
    }

    pub fn spatial(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField::Spatial(Arc::new(f))
    }

    pub fn space_time(f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField::SpaceTime(Arc::new(f))
    }

    pub fn tabulated(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Table1d::new(xs, values).map(ScalarField::Tabulated)
    }

    #[inline]
    pub fn eval(&self, x: &[f64], s: f64) -> f64 {
        match self {
            ScalarField::Constant(v) => *v,
            ScalarField::Spatial(f) => f(x),
            ScalarField::SpaceTime(f) => f(x, s),
            ScalarField::Tabulated(t) => t.eval(x[0]),
        }
    }

    pub fn is_time_homogeneous(&self) -> bool {
        !matches!(self, ScalarField::SpaceTime(_))
    }

    /// True only when the field is known to vanish identically.
    pub fn is_identically_zero(&self) -> bool {
        match self {
            ScalarField::Constant(v) => *v == 0.0,
            ScalarField::Tabulated(t) => t.max_abs() == 0.0,
            _ => false,
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            ScalarField::Constant(v) => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Constant(v) => write!(f, "Constant({v})"),
            ScalarField::Spatial(_) => f.write_str("Spatial(<fn>)"),
            ScalarField::SpaceTime(_) => f.write_str("SpaceTime(<fn>)"),
            ScalarField::Tabulated(t) => write!(f, "Tabulated({} nodes)", t.xs.len()),
        }
    }
}

impl From<f64> for ScalarField {
    fn from(v: f64) -> Self {
        ScalarField::Constant(v)
    }
}

/// Diffusion matrix field `a^{ij}(x, s)`.
#[derive(Debug, Clone)]
pub enum DiffusionField {
    /// `a(x, s) * I`
    Isotropic(ScalarField),
    /// Full symmetric matrix, row-major `dim * dim` entries.
    Matrix(Vec<ScalarField>),
}

impl DiffusionField {
    pub fn zero() -> Self {
        DiffusionField::Isotropic(ScalarField::zero())
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            DiffusionField::Isotropic(a) => a.is_identically_zero(),
            DiffusionField::Matrix(m) => m.iter().all(ScalarField::is_identically_zero),
        }
    }

    pub fn is_time_homogeneous(&self) -> bool {
        match self {
            DiffusionField::Isotropic(a) => a.is_time_homogeneous(),
            DiffusionField::Matrix(m) => m.iter().all(ScalarField::is_time_homogeneous),
        }
    }

    /// Fills `out` (row-major, `dim * dim`) with the matrix at `(x, s)`.
    pub fn matrix(&self, x: &[f64], s: f64, out: &mut [f64]) {
        let d = x.len();
        match self {
            DiffusionField::Isotropic(a) => {
                let v = a.eval(x, s);
                out.iter_mut().for_each(|e| *e = 0.0);
                for i in 0..d {
                    out[i * d + i] = v;
                }
            }
            DiffusionField::Matrix(m) => {
                for (o, e) in out.iter_mut().zip(m) {
                    *o = e.eval(x, s);
                }
            }
        }
    }

    /// `a^{11}` in one dimension.
    #[inline]
    pub fn scalar(&self, x: &[f64], s: f64) -> f64 {
        match self {
            DiffusionField::Isotropic(a) => a.eval(x, s),
            DiffusionField::Matrix(m) => m[0].eval(x, s),
        }
    }
}

/// Lower Cholesky factor of a symmetric positive semidefinite matrix, with
/// pivots below `tol * trace` treated as zero. Returns `None` when the
/// matrix is not PSD within tolerance.
pub fn psd_cholesky(a: &[f64], d: usize, out: &mut [f64]) -> Option<()> {
    let trace: f64 = (0..d).map(|i| a[i * d + i].abs()).sum();
    let tol = 1e-12 * trace.max(f64::MIN_POSITIVE);
    out.iter_mut().for_each(|e| *e = 0.0);
    for j in 0..d {
        let mut diag = a[j * d + j];
        for k in 0..j {
            diag -= out[j * d + k] * out[j * d + k];
        }
        if diag < -tol {
            return None;
        }
        let ljj = if diag > tol { diag.sqrt() } else { 0.0 };
        out[j * d + j] = ljj;
        for i in (j + 1)..d {
            let mut v = a[i * d + j];
            for k in 0..j {
                v -= out[i * d + k] * out[j * d + k];
            }
            if ljj > 0.0 {
                out[i * d + j] = v / ljj;
            } else if v.abs() > tol.sqrt() {
                return None;
            }
        }
    }
    Some(())
}

/// Drift, diffusion and temporal drift together with a declared bound.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub dim: usize,
    pub drift: Vec<ScalarField>,
    pub diffusion: DiffusionField,
    pub gamma: ScalarField,
    /// Declared sup-norm bound for every coefficient.
    pub bound: f64,
}

impl CoefficientField {
    pub fn new(drift: Vec<ScalarField>, diffusion: DiffusionField, gamma: ScalarField, bound: f64) -> Result<Self> {
        let dim = drift.len();
        if dim == 0 {
            return Err(Error::domain("spatial dimension must be positive"));
        }
        if let DiffusionField::Matrix(m) = &diffusion {
            if m.len() != dim * dim {
                return Err(Error::domain(format!(
                    "diffusion matrix needs {} entries, got {}",
                    dim * dim,
                    m.len()
                )));
            }
        }
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(Error::domain("coefficient bound must be positive and finite"));
        }
        Ok(Self {
            dim,
            drift,
            diffusion,
            gamma,
            bound,
        })
    }

    #[inline]
    pub fn drift_at(&self, x: &[f64], s: f64, out: &mut [f64]) {
        for (o, b) in out.iter_mut().zip(&self.drift) {
            *o = b.eval(x, s);
        }
    }

    #[inline]
    pub fn gamma_at(&self, x: &[f64], s: f64) -> f64 {
        self.gamma.eval(x, s)
    }

    pub fn is_time_homogeneous(&self) -> bool {
        self.drift.iter().all(ScalarField::is_time_homogeneous)
            && self.diffusion.is_time_homogeneous()
            && self.gamma.is_time_homogeneous()
    }

    /// Asserts symmetry, positive semidefiniteness, `gamma >= 0` and the
    /// declared bound at every probe point.
    pub fn check_at(&self, probes: &[(Vec<f64>, f64)]) -> Result<()> {
        let d = self.dim;
        let mut b = vec![0.0; d];
        let mut a = vec![0.0; d * d];
        let mut l = vec![0.0; d * d];
        for (x, s) in probes {
            if x.len() != d {
                return Err(Error::domain("probe point has wrong dimension"));
            }
            self.drift_at(x, *s, &mut b);
            self.diffusion.matrix(x, *s, &mut a);
            let g = self.gamma_at(x, *s);
            let where_ = || format!("at (x = {x:?}, s = {s})");
            if b.iter().chain(a.iter()).chain([g].iter()).any(|v| !v.is_finite()) {
                return Err(Error::domain(format!("non-finite coefficient {}", where_())));
            }
            if g < 0.0 {
                return Err(Error::domain(format!("gamma = {g} < 0 {}", where_())));
            }
            for i in 0..d {
                for j in 0..i {
                    let (aij, aji) = (a[i * d + j], a[j * d + i]);
                    if (aij - aji).abs() > 1e-12 * (1.0 + aij.abs()) {
                        return Err(Error::domain(format!("diffusion not symmetric {}", where_())));
                    }
                }
            }
            if psd_cholesky(&a, d, &mut l).is_none() {
                return Err(Error::domain(format!(
                    "diffusion not positive semidefinite {}",
                    where_()
                )));
            }
            let worst = b
                .iter()
                .chain(a.iter())
                .chain([g].iter())
                .fold(0.0f64, |m, v| m.max(v.abs()));
            if worst > self.bound * (1.0 + 1e-12) {
                return Err(Error::domain(format!(
                    "coefficient magnitude {worst} exceeds declared bound {} {}",
                    self.bound,
                    where_()
                )));
            }
        }
        Ok(())
    }
}

/// Regular probe grid over `[lo, hi]` in each coordinate (1-d or along the
/// diagonal for higher dimensions) crossed with a few time levels.
pub fn probe_grid(dim: usize, lo: f64, hi: f64, n: usize, times: &[f64]) -> Vec<(Vec<f64>, f64)> {
    let n = n.max(2);
    let mut out = Vec::with_capacity(n * times.len());
    for &s in times {
        for i in 0..n {
            let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            out.push((vec![x; dim], s));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolates_and_clamps() {
        let t = Table1d::new(vec![0.0, 1.0, 3.0], vec![1.0, 3.0, -1.0]).unwrap();
        assert_eq!(t.eval(-5.0), 1.0);
        assert_eq!(t.eval(0.5), 2.0);
        assert_eq!(t.eval(2.0), 1.0);
        assert_eq!(t.eval(10.0), -1.0);
        assert!(Table1d::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn cholesky_accepts_semidefinite_rejects_indefinite() {
        let mut l = [0.0; 4];
        assert!(psd_cholesky(&[1.0, 1.0, 1.0, 1.0], 2, &mut l).is_some());
        assert!(psd_cholesky(&[0.0, 0.0, 0.0, 0.0], 2, &mut l).is_some());
        assert!(psd_cholesky(&[1.0, 2.0, 2.0, 1.0], 2, &mut l).is_none());
        psd_cholesky(&[4.0, 2.0, 2.0, 2.0], 2, &mut l).unwrap();
        assert!((l[0] - 2.0).abs() < 1e-15 && (l[2] - 1.0).abs() < 1e-15 && (l[3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn probe_check_flags_negative_gamma_and_bound() {
        let probes = probe_grid(1, -2.0, 2.0, 11, &[0.0, 1.0]);
        let ok = CoefficientField::new(
            vec![ScalarField::spatial(|x| x[0].tanh())],
            DiffusionField::Isotropic(1.0.into()),
            ScalarField::zero(),
            1.0,
        )
        .unwrap();
        ok.check_at(&probes).unwrap();

        let neg = CoefficientField::new(
            vec![ScalarField::zero()],
            DiffusionField::Isotropic(1.0.into()),
            ScalarField::space_time(|_, s| s - 0.5),
            2.0,
        )
        .unwrap();
        assert!(matches!(neg.check_at(&probes), Err(Error::Domain(_))));

        let big = CoefficientField::new(
            vec![ScalarField::spatial(|x| x[0])],
            DiffusionField::Isotropic(1.0.into()),
            ScalarField::zero(),
            1.0,
        )
        .unwrap();
        assert!(big.check_at(&probes).is_err());
    }
}
