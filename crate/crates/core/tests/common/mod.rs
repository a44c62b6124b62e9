//! Invariant properties shared by the proptest suite and the acceptance run.
#![allow(dead_code)]

use ctrw::backward::{bump, solve_backward};
use ctrw::forward::{solve_fpe, InitialMeasure};
use ctrw::frac_ops::{gl_weights, psi_apply, Quadrature};
use ctrw::grid::{Grid1d, GridField};
use ctrw::limit_sampler::{sample_pair_path, SpaceTimePath};
use ctrw::model::{
    levy_walk_preset, subdiffusion_preset, variable_order_preset, DirectionWeights, ModelSpec, ScalarField,
};
use ctrw::rng::path_rng;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;

pub type Outcome = Result<(), TestCaseError>;

pub fn gl_strategy() -> impl Strategy<Value = (f64, usize)> {
    (0.01f64..0.99, 1usize..400)
}

/// Order in (0, 1): `g_0 = 1`, negative and shrinking tail, positive
/// decreasing partial sums matching the order `alpha - 1` weights. Order in
/// (-1, 0): positive decreasing weights.
pub fn gl_weight_properties((alpha, n): (f64, usize)) -> Outcome {
    let g = gl_weights(alpha, n);
    prop_assert_eq!(g.len(), n + 1);
    prop_assert_eq!(g[0], 1.0);
    let h = gl_weights(alpha - 1.0, n);
    let mut partial = 0.0;
    for k in 0..=n {
        if k >= 1 {
            prop_assert!(g[k] < 0.0, "g_{} = {}", k, g[k]);
            prop_assert!(g[k].abs() <= g[k - 1].abs());
            prop_assert!(h[k] > 0.0 && h[k] <= h[k - 1]);
        }
        partial += g[k];
        prop_assert!(partial > 0.0);
        prop_assert!((partial - h[k]).abs() <= 1e-12, "partial sum {} vs {}", partial, h[k]);
    }
    Ok(())
}

pub fn psi_strategy() -> impl Strategy<Value = (f64, usize, f64, u64, bool)> {
    (0.05f64..0.95, 5usize..200, 0.5f64..5.0, any::<u64>(), any::<bool>())
}

/// Nonnegative `h` vanishing at the top level: `0 <= Psi h <= sup h * L^{1-beta} / Gamma(2-beta)`,
/// with `L` the distance to the top plus one step.
pub fn psi_positive_bounded((beta, n, top, seed, consistent): (f64, usize, f64, u64, bool)) -> Outcome {
    let spec = subdiffusion_preset(beta, ScalarField::zero()).unwrap();
    let x = Grid1d::new(-1.0, 1.0, 3).unwrap();
    let t = Grid1d::new(0.0, top, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = GridField::from_fn(x, t, |_, s| {
        if s >= top - 0.5 * t.step {
            0.0
        } else {
            rng.random::<f64>()
        }
    });
    let sup = h.max_abs();
    let quad = if consistent {
        Quadrature::Consistent
    } else {
        Quadrature::ProductTrapezoid
    };
    let out = psi_apply(&h, &spec, quad).unwrap();
    for i in 0..x.n {
        for j in 0..t.n {
            let v = out.at(i, j);
            let reach = top - t.point(j) + t.step;
            let bound = sup * reach.powf(1.0 - beta) / gamma(2.0 - beta);
            prop_assert!(v >= 0.0, "Psi h = {} at ({}, {})", v, i, j);
            prop_assert!(
                v <= bound * (1.0 + 1e-10),
                "Psi h = {} above {} at ({}, {})",
                v,
                bound,
                i,
                j
            );
        }
    }
    Ok(())
}

pub fn mass_strategy() -> impl Strategy<Value = (f64, f64, f64, usize, usize, usize)> {
    (
        0.3f64..0.97,
        -1.0f64..1.0,
        -1.0f64..1.0,
        61usize..161,
        20usize..80,
        0usize..5,
    )
}

/// Mass plus boundary leakage equals the injected mass at every level.
pub fn mass_conservation((beta, b_frac, x0, nx, nt, inj): (f64, f64, f64, usize, usize, usize)) -> Outcome {
    let x = Grid1d::centered(6.0, nx).unwrap();
    let t = Grid1d::new(0.0, 0.5, nt).unwrap();
    // keep the explicit drift inside its stability bound
    let b = b_frac * 0.9 * beta * x.step / t.step.powf(beta);
    let spec = subdiffusion_preset(beta, ScalarField::constant(b)).unwrap();
    let s = t.point(inj);
    let sol = solve_fpe(&spec, &InitialMeasure::Point(x0), s, x, t, &Default::default()).unwrap();
    prop_assert!(sol.min_value >= -1e-12);
    for j in inj + 1..t.n {
        let mass: f64 = sol.measure.slice(j).sum() * x.step;
        prop_assert!(sol.leakage[j] >= -1e-12);
        prop_assert!(
            (mass + sol.leakage[j] - sol.initial_mass).abs() <= 1e-10,
            "level {}: mass {} leakage {}",
            j,
            mass,
            sol.leakage[j]
        );
    }
    Ok(())
}

pub fn path_strategy() -> impl Strategy<Value = (usize, f64, f64, f64, u64)> {
    (0usize..3, 0.2f64..0.95, 1e-3f64..5e-2, 0.5f64..4.0, any::<u64>())
}

fn preset(kind: usize, beta: f64) -> ModelSpec {
    match kind {
        0 => subdiffusion_preset(beta, ScalarField::spatial(|x| -0.5 * x[0])).unwrap(),
        1 => variable_order_preset(
            ScalarField::spatial(move |x| beta - 0.1 * (-x[0] * x[0]).exp()),
            0.1 * (2.0f64 / std::f64::consts::E).sqrt() * 1.001,
        )
        .unwrap(),
        _ => levy_walk_preset(beta, vec![ScalarField::zero()], DirectionWeights::symmetric_1d()).unwrap(),
    }
}

fn sample_path(kind: usize, beta: f64, dr: f64, r_max: f64, seed: u64) -> SpaceTimePath {
    let spec = preset(kind, beta.max(0.25));
    sample_pair_path(&spec, &[0.3], 0.0, r_max, dr, &mut path_rng(seed, 0)).unwrap()
}

/// `D` never decreases: `D(r_{k-1}) <= D(r_k-) <= D(r_k)`.
pub fn clock_monotone((kind, beta, dr, r_max, seed): (usize, f64, f64, f64, u64)) -> Outcome {
    let path = sample_path(kind, beta, dr, r_max, seed);
    for k in 1..path.len() {
        prop_assert!(path.r(k) > path.r(k - 1));
        prop_assert!(path.d_pre(k) >= path.d(k - 1), "node {}", k);
        prop_assert!(path.d(k) >= path.d_pre(k), "node {}", k);
    }
    Ok(())
}

/// `D(E(t)-) <= t <= D(E(t))`, and `E` is nondecreasing.
pub fn inverse_sandwich((kind, beta, dr, r_max, seed): (usize, f64, f64, f64, u64)) -> Outcome {
    let path = sample_path(kind, beta, dr, r_max, seed);
    let last = path.d(path.len() - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut ts: Vec<f64> = (0..64).map(|_| rng.random::<f64>() * last * 0.999).collect();
    ts.sort_by(f64::total_cmp);
    let mut prev = 0.0;
    for &t in &ts {
        let e = path.inverse_time_change(t).unwrap();
        prop_assert!(e >= prev);
        prev = e;
        let k = (0..path.len()).find(|&k| path.r(k) >= e).unwrap();
        let (lo, hi) = if path.r(k) == e {
            (path.d_pre(k), path.d(k))
        } else {
            // inside a continuous stretch of the clock
            let frac = (e - path.r(k - 1)) / (path.r(k) - path.r(k - 1));
            let d = path.d(k - 1) + frac * (path.d_pre(k) - path.d(k - 1));
            (d, d)
        };
        let tol = 1e-12 * t.max(1.0);
        prop_assert!(lo <= t + tol && t <= hi + tol, "t = {} between {} and {}", t, lo, hi);
    }
    Ok(())
}

pub fn max_principle_strategy() -> impl Strategy<Value = (f64, f64, f64, f64, f64, f64, f64)> {
    (
        0.3f64..0.95,
        -1.0f64..1.0,
        0.0f64..2.0,
        -1.0f64..1.0,
        0.2f64..1.0,
        0.2f64..0.5,
        0.1f64..0.3,
    )
}

/// `0 <= v <= sup f * (lattice integral of g)`.
pub fn discrete_max_principle((beta, b, amp, center, scale, t0, w): (f64, f64, f64, f64, f64, f64, f64)) -> Outcome {
    let spec = subdiffusion_preset(beta, ScalarField::constant(b)).unwrap();
    let x = Grid1d::centered(4.0, 61).unwrap();
    let s = Grid1d::new(0.0, 1.0, 81).unwrap();
    let f = move |y: f64| amp * (-((y - center) / scale).powi(2)).exp();
    let g = bump(t0, w);
    let field = solve_backward(&spec, &f, &g, x, s).unwrap();
    let total_g: f64 = s.points().iter().map(|&v| g(v)).sum::<f64>() * s.step;
    let bound = amp * total_g;
    for i in 0..x.n {
        for j in 0..s.n {
            let v = field.values.at(i, j);
            prop_assert!(v >= -1e-14, "v = {} at ({}, {})", v, i, j);
            prop_assert!(v <= bound * (1.0 + 1e-9) + 1e-14, "v = {} above {}", v, bound);
        }
    }
    Ok(())
}
