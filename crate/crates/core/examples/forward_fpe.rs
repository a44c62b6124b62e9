//! Fractional Fokker-Planck equation for subdiffusion, checked against the
//! subordination formula, and a run with drift.

use ctrw::forward::{solution_moments, solve_fpe, subordination_oracle, InitialMeasure};
use ctrw::grid::Grid1d;
use ctrw::model::{subdiffusion_preset, ScalarField};
use ctrw::Error;

fn main() -> ctrw::Result<()> {
    let spec = subdiffusion_preset(0.5, ScalarField::zero())?;
    let x = Grid1d::centered(8.0, 201)?;
    let t = Grid1d::new(0.0, 1.0, 501)?;
    let sol = solve_fpe(&spec, &InitialMeasure::Point(0.0), 0.0, x, t, &Default::default())?;
    let last = t.n - 1;
    let oracle = subordination_oracle(0.5, 1.0, 1.0, &x.points())?;
    let l1: f64 = sol
        .measure
        .slice(last)
        .iter()
        .zip(&oracle)
        .map(|(u, p)| (u - p).abs())
        .sum::<f64>()
        * x.step;
    let m = solution_moments(&sol, 1.0)?;
    println!(
        "beta = 0.5, t = 1: mass {:.8}, variance {:.4} (exact 1.1284), L1 to oracle {l1:.2e}",
        m.mass, m.variance
    );

    let drifted = subdiffusion_preset(0.7, ScalarField::spatial(|y| -y[0]))?;
    let x = Grid1d::centered(6.0, 241)?;
    let coarse = Grid1d::new(0.0, 2.0, 201)?;
    let sol = match solve_fpe(
        &drifted,
        &InitialMeasure::Point(2.0),
        0.0,
        x,
        coarse,
        &Default::default(),
    ) {
        Err(Error::Stability { suggested_dt, message }) => {
            println!("coarse grid rejected ({message}); retrying with dt = {suggested_dt:.2e}");
            // a multiple of four steps keeps t = 0.5 and t = 1 on the grid
            let n = 4 * (0.5 / suggested_dt).ceil() as usize + 1;
            solve_fpe(
                &drifted,
                &InitialMeasure::Point(2.0),
                0.0,
                x,
                Grid1d::new(0.0, 2.0, n)?,
                &Default::default(),
            )?
        }
        other => other?,
    };
    for tt in [0.5, 1.0, 2.0] {
        let m = solution_moments(&sol, tt)?;
        println!(
            "beta = 0.7, drift -x, t = {tt}: mean {:+.4}, variance {:.4}",
            m.mean, m.variance
        );
    }
    Ok(())
}
