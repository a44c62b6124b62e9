//! Acceptance run: one PASS/FAIL line per criterion. Tolerances are pinned
//! below; the process exits nonzero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use ctrw::backward::{bump, solve_backward};
use ctrw::forward::{solve_fpe, InitialMeasure};
use ctrw::frac_ops::{memory_kernel, psi_star_apply, psi_star_inverse, talbot_invert, KernelMethod, TALBOT_NODES};
use ctrw::grid::{Grid1d, GridMeasure};
use ctrw::limit_sampler::sample_pair_path;
use ctrw::model::{
    levy_walk_preset, subdiffusion_preset, variable_order_preset, CoefficientField, Coupling, DiffusionField,
    DirectionWeights, ModelSpec, ScalarField, SpatialJumps, TabulatedTail, TemporalTail,
};
use ctrw::rng::path_rng;
use ctrw::validation::{
    fit_power_exponent, ks_distance, ks_threshold_one, ks_threshold_two, mc_law_at, mc_law_estimate,
    time_integral_estimate, two_proportion_z, EmpiricalSample, Engine, Ensemble, KsReference,
};
use num_complex::Complex64;
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

const VARIANCE_REL_TOL: f64 = 0.03;
const SUBDIFFUSIVE_SLOPE: f64 = 0.5;
const SUBDIFFUSIVE_SLOPE_TOL: f64 = 0.05;
const BALLISTIC_SLOPE: f64 = 2.0;
const BALLISTIC_SLOPE_TOL: f64 = 0.1;
const KS_FORWARD_TOL: f64 = 0.02;
const L1_ORACLE_TOL: f64 = 1e-2;
const L1_HEAT_TOL: f64 = 1e-2;
const DUALITY_SIGMAS: f64 = 3.0;
const TALBOT_REL_TOL: f64 = 1e-4;
const ROUND_TRIP_EPS_FACTOR: f64 = 10.0;
const ROUND_TRIP_STABLE_TOL: f64 = 0.02;
const Z_ONE_SIDED_99: f64 = 2.326;
const PROPERTY_CASES: u32 = 128;

type Outcome = Result<(bool, String), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn limit_ensemble(n: usize, seed: u64, dr: f64) -> Ensemble {
    Ensemble {
        n_paths: n,
        seed,
        workers: None,
        engine: Engine::Limit { dr },
        octrw: false,
    }
}

fn brownian_subdiffusion(beta: f64) -> ModelSpec {
    subdiffusion_preset(beta, ScalarField::zero()).unwrap()
}

fn mild_variable_order() -> ModelSpec {
    variable_order_preset(
        ScalarField::spatial(|x| 0.8 - 0.4 * (-x[0] * x[0]).exp()),
        0.4 * (2.0f64 / std::f64::consts::E).sqrt() * 1.001,
    )
    .unwrap()
}

fn symmetric_levy_walk(beta: f64) -> ModelSpec {
    levy_walk_preset(beta, vec![ScalarField::zero()], DirectionWeights::symmetric_1d()).unwrap()
}

/// Adaptive Simpson on `[a, b]`, started from unit-length pieces so that a
/// narrow peak is not missed.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let pieces = ((b - a).ceil() as usize).max(1);
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| simpson_piece(f, a + k as f64 * h, a + (k + 1) as f64 * h, tol / pieces as f64))
        .sum()
}

fn simpson_piece(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Law of `B(E(1))` for `beta = 1/2`: the density of `E(1)` is
/// `exp(-u^2/4)/sqrt(pi)`; with `u = w^2` the mixture integrand is smooth.
fn half_order_density(y: f64) -> f64 {
    let f = |w: f64| 2f64.sqrt() / PI * (-y * y / (2.0 * w * w) - w.powi(4) / 4.0).exp();
    let g = |w: f64| {
        if w == 0.0 {
            if y == 0.0 {
                2f64.sqrt() / PI
            } else {
                0.0
            }
        } else {
            f(w)
        }
    };
    adaptive_simpson(&g, 0.0, 1.0, 1e-14) + adaptive_simpson(&g, 1.0, 6.0, 1e-14)
}

fn gaussian(y: f64, var: f64) -> f64 {
    (-y * y / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

fn slice_l1(m: &GridMeasure, j: usize, exact: &dyn Fn(f64) -> f64) -> f64 {
    (0..m.x.n)
        .map(|i| (m.slice(j)[i] - exact(m.x.point(i))).abs())
        .sum::<f64>()
        * m.x.step
}

/// Smoothstep antiderivative of `bump(t0, w)`.
fn bump_integral(t0: f64, w: f64) -> impl Fn(f64) -> f64 + Sync {
    move |tau: f64| {
        let p = ((tau - t0) / w).clamp(0.0, 1.0);
        p * p * p * (10.0 - 15.0 * p + 6.0 * p * p)
    }
}

// 1
fn subdiffusive_variance(sample: &EmpiricalSample, elapsed: f64) -> Outcome {
    // E[E(1)] = int u exp(-u^2/4)/sqrt(pi) du
    let oracle = adaptive_simpson(&|u: f64| u * (-u * u / 4.0).exp() / PI.sqrt(), 0.0, 60.0, 1e-14);
    let closed = 2.0 / PI.sqrt();
    if (oracle - closed).abs() > 1e-10 {
        return Ok((
            false,
            format!("oracle quadrature {oracle} disagrees with 1/Gamma(3/2) = {closed}"),
        ));
    }
    let var = sample.variance(0);
    let rel = (var - oracle).abs() / oracle;
    Ok((
        rel <= VARIANCE_REL_TOL,
        format!("Var X(1) = {var:.5}, oracle {oracle:.5}, rel err {rel:.4} (tol {VARIANCE_REL_TOL}); {elapsed:.1} s"),
    ))
}

// 2
fn variance_exponent() -> Outcome {
    let ts = [1.0, 2.0, 4.0, 8.0, 16.0];
    let law = mc_law_estimate(
        &brownian_subdiffusion(0.5),
        &[0.0],
        0.0,
        &ts,
        &limit_ensemble(100_000, 102, 1e-2),
    )
    .map_err(err)?;
    let vars: Vec<f64> = law.x.iter().map(|s| s.variance(0)).collect();
    let fit = fit_power_exponent(&ts, &vars).map_err(err)?;
    let dev = (fit.exponent - SUBDIFFUSIVE_SLOPE).abs();
    Ok((
        dev <= SUBDIFFUSIVE_SLOPE_TOL,
        format!(
            "slope {:.4} +- {:.4} (target {SUBDIFFUSIVE_SLOPE} +- {SUBDIFFUSIVE_SLOPE_TOL})",
            fit.exponent, fit.stderr
        ),
    ))
}

// 3
fn ballistic_levy_walk() -> Outcome {
    let spec = symmetric_levy_walk(0.6);
    let ts = [1.0, 2.0, 4.0, 8.0, 16.0];
    let law = mc_law_estimate(&spec, &[0.0], 0.0, &ts, &limit_ensemble(20_000, 103, 1e-2)).map_err(err)?;
    let second: Vec<f64> = law.x.iter().map(|s| s.mean_square_norm()).collect();
    let fit = fit_power_exponent(&ts, &second).map_err(err)?;
    // |X(t)| <= t: rounding of the two separately accumulated sums is the only slack
    let slack = |t: f64| 1e-12 * t.max(1.0);
    let mut violations = 0usize;
    let mut checked = 0usize;
    for (s, &t) in law.x.iter().zip(&ts) {
        for v in s.component(0) {
            checked += 1;
            violations += usize::from(v.abs() > t + slack(t));
        }
    }
    for k in 0..500 {
        let path = sample_pair_path(&spec, &[0.0], 0.0, 8.0, 1e-2, &mut path_rng(1003, k)).map_err(err)?;
        let top = path.d(path.len() - 1);
        for i in 1..200 {
            let t = top * i as f64 / 200.0;
            let x = path.ctrw_limit_value(t).map_err(err)?[0];
            checked += 1;
            violations += usize::from(x.abs() > t + slack(t));
        }
    }
    let dev = (fit.exponent - BALLISTIC_SLOPE).abs();
    Ok((
        dev <= BALLISTIC_SLOPE_TOL && violations == 0,
        format!(
            "slope {:.4} (target {BALLISTIC_SLOPE} +- {BALLISTIC_SLOPE_TOL}); |X(t)| <= t violations {violations} of {checked}",
            fit.exponent
        ),
    ))
}

// 4
fn forward_vs_mc(sample: &EmpiricalSample) -> Outcome {
    let x = Grid1d::centered(8.0, 401).map_err(err)?;
    let t = Grid1d::new(0.0, 1.0, 2001).map_err(err)?;
    let sol = solve_fpe(
        &brownian_subdiffusion(0.5),
        &InitialMeasure::Point(0.0),
        0.0,
        x,
        t,
        &Default::default(),
    )
    .map_err(err)?;
    let ks = ks_distance(sample, KsReference::Slice(&sol.measure, t.n - 1)).map_err(err)?;
    Ok((
        ks <= KS_FORWARD_TOL,
        format!("KS {ks:.5} on 401 x 2001 nodes (tol {KS_FORWARD_TOL})"),
    ))
}

// 5
fn forward_vs_oracle() -> Outcome {
    let spec = brownian_subdiffusion(0.5);
    let mut l1 = Vec::new();
    for (nx, nt) in [(101, 251), (201, 501), (401, 1001)] {
        let x = Grid1d::centered(8.0, nx).map_err(err)?;
        let t = Grid1d::new(0.0, 1.0, nt).map_err(err)?;
        let sol = solve_fpe(&spec, &InitialMeasure::Point(0.0), 0.0, x, t, &Default::default()).map_err(err)?;
        l1.push(slice_l1(&sol.measure, nt - 1, &half_order_density));
    }
    let decreasing = l1.windows(2).all(|w| w[1] < w[0]);
    let last = *l1.last().unwrap();
    Ok((
        decreasing && last <= L1_ORACLE_TOL,
        format!(
            "L1 {:.3e} -> {:.3e} -> {:.3e} (tol {L1_ORACLE_TOL:e}, strictly decreasing: {decreasing})",
            l1[0], l1[1], l1[2]
        ),
    ))
}

// 6
fn classical_limit() -> Outcome {
    let x = Grid1d::centered(8.0, 401).map_err(err)?;
    let t = Grid1d::new(0.0, 1.0, 2001).map_err(err)?;
    let sol = solve_fpe(
        &brownian_subdiffusion(0.99),
        &InitialMeasure::Point(0.0),
        0.0,
        x,
        t,
        &Default::default(),
    )
    .map_err(err)?;
    let l1 = slice_l1(&sol.measure, t.n - 1, &|y| gaussian(y, 1.0));
    Ok((
        l1 <= L1_HEAT_TOL,
        format!("L1 to heat kernel {l1:.3e} (tol {L1_HEAT_TOL:e})"),
    ))
}

// 7
fn duality() -> Outcome {
    let f = |y: f64| (-y * y / (2.0 * 0.49)).exp();
    let f_path = move |x: &[f64]| f(x[0]);
    let (t0, w) = (0.8, 0.4);
    let g = bump(t0, w);
    let big_g = bump_integral(t0, w);
    let wide_x = Grid1d::centered(8.0, 321).map_err(err)?;
    let wide_s = Grid1d::new(0.0, 1.5, 601).map_err(err)?;
    // the Levy-walk scheme steps along characteristics: dx = ds
    let lw_step = 0.0025;
    let cases: [(&str, ModelSpec, Grid1d, Grid1d, usize); 3] = [
        (
            "subdiffusion",
            subdiffusion_preset(0.6, ScalarField::constant(0.3)).unwrap(),
            wide_x,
            wide_s,
            40_000,
        ),
        ("variable-order", mild_variable_order(), wide_x, wide_s, 40_000),
        (
            "levy-walk",
            symmetric_levy_walk(0.6),
            Grid1d::with_step(-1.5, lw_step, 1201).map_err(err)?,
            Grid1d::with_step(0.0, lw_step, 521).map_err(err)?,
            20_000,
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, spec, x, s, n) in cases {
        let pde = solve_backward(&spec, &f, &g, x, s)
            .map_err(err)?
            .value_at(0.0, 0.0)
            .map_err(err)?;
        let mc = time_integral_estimate(&spec, &big_g, t0 + w, &f_path, &[0.0], 0.0, 1e-3, n, 5, None).map_err(err)?;
        let z = (pde - mc.mean) / mc.stderr;
        ok &= z.abs() <= DUALITY_SIGMAS;
        parts.push(format!(
            "{name}: pde {pde:.5} mc {:.5} +- {:.5} z {z:+.2}",
            mc.mean, mc.stderr
        ));
    }
    Ok((ok, format!("{} (tol {DUALITY_SIGMAS} se)", parts.join("; "))))
}

// 8
fn memory_kernel_talbot() -> Outcome {
    let spec = brownian_subdiffusion(0.5);
    let gamma0 = spec.coeffs.gamma_at(&[0.0], 0.0);
    let mut worst: f64 = 0.0;
    for k in 0..=200 {
        let t = 0.1 * 100f64.powf(k as f64 / 200.0);
        let v = talbot_invert(
            |l: Complex64| (1.0 / l) / (gamma0 + spec.tail.laplace(&[0.0], l)),
            t,
            TALBOT_NODES,
        );
        let exact = 1.0 / (PI * t).sqrt();
        worst = worst.max((v - exact).abs() / exact);
    }
    Ok((
        worst <= TALBOT_REL_TOL,
        format!("max rel err {worst:.2e} on t in [0.1, 10] (tol {TALBOT_REL_TOL:e})"),
    ))
}

fn identity_clock() -> ModelSpec {
    let coeffs = CoefficientField::new(
        vec![ScalarField::zero()],
        DiffusionField::Isotropic(ScalarField::constant(1.0)),
        ScalarField::constant(1.0),
        1.0,
    )
    .unwrap();
    ModelSpec::new(
        "identity",
        coeffs,
        TemporalTail::Custom(TabulatedTail::zero()),
        SpatialJumps::Gaussian,
        Coupling::Uncoupled,
    )
    .unwrap()
}

// 9
fn operator_round_trip() -> Outcome {
    let id = identity_clock();
    let mut worst_ratio: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = path_rng(900 + seed, 0);
        let nt = 32 + (seed as usize * 13) % 200;
        let x = Grid1d::new(0.0, 1.0, 3).map_err(err)?;
        let t = Grid1d::with_step(0.0, 1.0 / nt as f64, nt).map_err(err)?;
        let m = GridMeasure::from_fn(x, t, |_, _| rand::Rng::random::<f64>(&mut rng));
        let fwd = psi_star_apply(&m, &id).map_err(err)?;
        let back =
            psi_star_inverse(&fwd, &|_| memory_kernel(&id, 0.0, t.step, t.n + 1, KernelMethod::Auto)).map_err(err)?;
        let scale = m.density.iter().fold(0.0f64, |a, v| a.max(*v));
        for (a, b) in back.density.iter().zip(m.density.iter()) {
            worst_ratio = worst_ratio.max((a - b).abs() / (f64::EPSILON * scale));
        }
    }
    let stable = brownian_subdiffusion(0.5);
    let x = Grid1d::centered(2.0, 9).map_err(err)?;
    let t = Grid1d::with_step(0.0, 1e-3, 1000).map_err(err)?;
    let m = GridMeasure::from_fn(x, t, |y, s| (-y * y).exp() * 30.0 * s * s * (1.0 - s) * (1.0 - s));
    let fwd = psi_star_apply(&m, &stable).map_err(err)?;
    let back = psi_star_inverse(&fwd, &|i| {
        memory_kernel(&stable, x.point(i), t.step, t.n + 1, KernelMethod::Auto)
    })
    .map_err(err)?;
    let diff: f64 = back
        .density
        .iter()
        .zip(m.density.iter())
        .map(|(a, b)| (a - b).abs())
        .sum();
    let rel = diff * x.step * t.step / m.l1();
    Ok((
        worst_ratio <= ROUND_TRIP_EPS_FACTOR && rel <= ROUND_TRIP_STABLE_TOL,
        format!(
            "identity clock: max err {worst_ratio:.2} eps x scale (tol {ROUND_TRIP_EPS_FACTOR}); beta = 0.5 bump: rel L1 {rel:.2e} (tol {ROUND_TRIP_STABLE_TOL})"
        ),
    ))
}

// 10
fn prelimit_convergence(limit: &EmpiricalSample) -> Outcome {
    let spec = brownian_subdiffusion(0.5);
    let mut ks = Vec::new();
    for (k, c) in [10.0, 100.0, 1000.0].into_iter().enumerate() {
        let ens = Ensemble {
            n_paths: 100_000,
            seed: 110 + k as u64,
            workers: None,
            engine: Engine::Chain { c },
            octrw: false,
        };
        let chain = mc_law_at(&spec, &[0.0], 0.0, 1.0, &ens).map_err(err)?;
        ks.push(ks_distance(&chain, KsReference::Sample(limit)).map_err(err)?);
    }
    let decreasing = ks.windows(2).all(|w| w[1] < w[0]);
    Ok((
        decreasing,
        format!("KS at c = 10, 100, 1000: {:.4}, {:.4}, {:.4}", ks[0], ks[1], ks[2]),
    ))
}

fn x_and_y(spec: &ModelSpec, n: usize, seeds: (u64, u64)) -> Result<(EmpiricalSample, EmpiricalSample), String> {
    let x = mc_law_at(spec, &[0.0], 0.0, 1.0, &limit_ensemble(n, seeds.0, 1e-2)).map_err(err)?;
    let ens = Ensemble {
        octrw: true,
        ..limit_ensemble(n, seeds.1, 1e-2)
    };
    let law = mc_law_estimate(spec, &[0.0], 0.0, &[1.0], &ens).map_err(err)?;
    let y = law.y.ok_or("no overshooting sample")?.remove(0);
    Ok((x, y))
}

// 11
fn ctrw_vs_octrw() -> Outcome {
    let n = 100_000;
    let threshold = ks_threshold_two(n, n);
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, spec, seeds) in [
        ("subdiffusion", brownian_subdiffusion(0.5), (111, 112)),
        ("variable-order", mild_variable_order(), (113, 114)),
    ] {
        let (x, y) = x_and_y(&spec, n, seeds)?;
        let ks = ks_distance(&x, KsReference::Sample(&y)).map_err(err)?;
        ok &= ks < threshold;
        parts.push(format!("{name} KS {ks:.5} < {threshold:.5}"));
    }
    let m = 20_000;
    let (x, y) = x_and_y(&symmetric_levy_walk(0.6), m, (115, 116))?;
    let ks = ks_distance(&x, KsReference::Sample(&y)).map_err(err)?;
    let lw_threshold = ks_threshold_two(m, m);
    ok &= ks > lw_threshold;
    parts.push(format!("levy-walk KS {ks:.4} > {lw_threshold:.5}"));
    Ok((ok, parts.join("; ")))
}

// 12
fn anomalous_aggregation() -> Outcome {
    let (lo, hi) = (0.1, 0.9);
    let spec = variable_order_preset(
        ScalarField::spatial(move |x| hi - (hi - lo) * (-x[0] * x[0]).exp()),
        (hi - lo) * (2.0f64 / std::f64::consts::E).sqrt() * 1.001,
    )
    .map_err(err)?;
    let n = 100_000;
    let near = |p: &[f64]| p[0].abs() <= 0.5;
    let early = mc_law_at(&spec, &[1.0], 0.0, 1.0, &limit_ensemble(n, 121, 1e-2)).map_err(err)?;
    let late = mc_law_at(&spec, &[1.0], 0.0, 10.0, &limit_ensemble(n, 122, 1e-2)).map_err(err)?;
    let (p1, p10) = (early.fraction_where(near), late.fraction_where(near));
    let z = two_proportion_z(p1, early.len(), p10, late.len());
    Ok((
        z > Z_ONE_SIDED_99,
        format!("P(|X| <= 0.5) = {p1:.4} at t = 1, {p10:.4} at t = 10; z {z:.1} (need > {Z_ONE_SIDED_99})"),
    ))
}

fn run_property<S: Strategy>(name: &str, strategy: S, prop: impl Fn(S::Value) -> common::Outcome) -> (bool, String) {
    let config = Config {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    match runner.run(&strategy, prop) {
        Ok(()) => (true, format!("{name} ok")),
        Err(e) => (false, format!("{name} FAILED: {e}")),
    }
}

// 13
fn invariant_suites() -> Outcome {
    let results = [
        run_property("gl weights", common::gl_strategy(), common::gl_weight_properties),
        run_property(
            "psi positivity/bound",
            common::psi_strategy(),
            common::psi_positive_bounded,
        ),
        run_property("mass conservation", common::mass_strategy(), common::mass_conservation),
        run_property("clock monotone", common::path_strategy(), common::clock_monotone),
        run_property("inverse sandwich", common::path_strategy(), common::inverse_sandwich),
        run_property(
            "maximum principle",
            common::max_principle_strategy(),
            common::discrete_max_principle,
        ),
    ];
    let ok = results.iter().all(|r| r.0);
    let detail: Vec<String> = results.into_iter().map(|r| r.1).collect();
    Ok((ok, format!("{} cases each: {}", PROPERTY_CASES, detail.join(", "))))
}

fn report(id: u32, name: &str, outcome: Outcome, failures: &mut u32) {
    let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    if !pass {
        *failures += 1;
    }
    println!("[{}] {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn main() {
    let mut failures = 0;
    let started = Instant::now();
    let clock = Instant::now();
    let limit_sample = mc_law_at(
        &brownian_subdiffusion(0.5),
        &[0.0],
        0.0,
        1.0,
        &limit_ensemble(100_000, 101, 1e-3),
    );
    let elapsed = clock.elapsed().as_secs_f64();
    let limit_sample = match limit_sample {
        Ok(s) => Some(s),
        Err(e) => {
            println!("limit ensemble failed: {e}");
            None
        }
    };
    let need = |f: &dyn Fn(&EmpiricalSample) -> Outcome| match &limit_sample {
        Some(s) => f(s),
        None => Err("limit ensemble unavailable".into()),
    };
    report(
        1,
        "subdiffusive variance",
        need(&|s| subdiffusive_variance(s, elapsed)),
        &mut failures,
    );
    report(2, "variance exponent", variance_exponent(), &mut failures);
    report(3, "ballistic Levy walk", ballistic_levy_walk(), &mut failures);
    report(4, "forward solver vs Monte Carlo", need(&forward_vs_mc), &mut failures);
    report(
        5,
        "forward solver vs subordination oracle",
        forward_vs_oracle(),
        &mut failures,
    );
    report(6, "classical limit", classical_limit(), &mut failures);
    report(7, "backward/Monte Carlo duality", duality(), &mut failures);
    report(8, "memory kernel", memory_kernel_talbot(), &mut failures);
    report(9, "operator round trip", operator_round_trip(), &mut failures);
    report(10, "pre-limit convergence", need(&prelimit_convergence), &mut failures);
    report(11, "CTRW vs OCTRW", ctrw_vs_octrw(), &mut failures);
    report(12, "anomalous aggregation", anomalous_aggregation(), &mut failures);
    report(13, "invariant suites", invariant_suites(), &mut failures);
    println!(
        "acceptance: {} of 13 passed in {:.0} s (one-sample KS threshold at n = 1e5: {:.5})",
        13 - failures,
        started.elapsed().as_secs_f64(),
        ks_threshold_one(100_000)
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
