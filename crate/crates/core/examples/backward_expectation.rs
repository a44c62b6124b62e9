//! Backward equation: `v(x, s) = E int g(t) f(X_t) dt` on a grid, its Monte
//! Carlo counterpart, and `E f(X_t)` from a sweep of shrinking bumps.

use ctrw::backward::{bump, solve_backward, terminal_expectation, DEFAULT_BUMP_WIDTHS};
use ctrw::grid::Grid1d;
use ctrw::model::{subdiffusion_preset, ScalarField};
use ctrw::validation::time_integral_estimate;

fn main() -> ctrw::Result<()> {
    let spec = subdiffusion_preset(0.6, ScalarField::constant(0.3))?;
    let f = |y: f64| (-y * y / 0.98).exp();
    let g = bump(0.8, 0.4);
    let x = Grid1d::centered(8.0, 321)?;
    let s = Grid1d::new(0.0, 1.5, 601)?;
    let v = solve_backward(&spec, &f, &g, x, s)?;
    let big_g = |t: f64| {
        let p = ((t - 0.8) / 0.4).clamp(0.0, 1.0);
        p * p * p * (10.0 - 15.0 * p + 6.0 * p * p)
    };
    let mc = time_integral_estimate(
        &spec,
        &big_g,
        1.2,
        &|x: &[f64]| f(x[0]),
        &[0.0],
        0.0,
        1e-2,
        5_000,
        1,
        None,
    )?;
    println!(
        "v(0, 0) = {:.5}; Monte Carlo {:.5} +- {:.5}",
        v.value_at(0.0, 0.0)?,
        mc.mean,
        mc.stderr
    );

    let plain = subdiffusion_preset(0.5, ScalarField::zero())?;
    let s = Grid1d::new(0.0, 1.4, 561)?;
    let te = terminal_expectation(&plain, &|y| (-y * y / 2.0).exp(), 1.0, x, s, &DEFAULT_BUMP_WIDTHS)?;
    println!(
        "E f(X_1) from (0, 0): sweep {:?} -> {:.5}",
        te.sweep_at(0.0, 0.0)?,
        te.value_at(0.0, 0.0)?
    );
    for w in &te.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
