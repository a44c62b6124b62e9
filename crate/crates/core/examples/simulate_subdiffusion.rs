//! Monte Carlo for the subdiffusive limit `X(t) = A(E(t)-)`: variance
//! growth `t^beta` and one sampled path of the inverse clock.

use ctrw::limit_sampler::sample_pair_path;
use ctrw::model::{subdiffusion_preset, ScalarField};
use ctrw::rng::path_rng;
use ctrw::special::gamma;
use ctrw::validation::{fit_power_exponent, mc_law_estimate, Engine, Ensemble};

fn main() -> ctrw::Result<()> {
    let beta = 0.5;
    let spec = subdiffusion_preset(beta, ScalarField::zero())?;
    let times = [1.0, 2.0, 4.0, 8.0];
    let ens = Ensemble {
        n_paths: 20_000,
        seed: 7,
        workers: None,
        engine: Engine::Limit { dr: 1e-2 },
        octrw: false,
    };
    let law = mc_law_estimate(&spec, &[0.0], 0.0, &times, &ens)?;
    println!("{:>6} {:>10} {:>10}", "t", "Var X(t)", "exact");
    let mut vars = Vec::new();
    for (t, sample) in times.iter().zip(&law.x) {
        let v = sample.variance(0);
        vars.push(v);
        println!("{t:>6} {v:>10.4} {:>10.4}", t.powf(beta) / gamma(1.0 + beta));
    }
    let fit = fit_power_exponent(&times, &vars)?;
    println!("fitted exponent {:.3} +- {:.3}", fit.exponent, fit.stderr);

    let path = sample_pair_path(&spec, &[0.0], 0.0, 2.0, 1e-3, &mut path_rng(7, 0))?;
    println!(
        "one path: {} nodes, clock reaches D = {:.3}",
        path.len(),
        path.d(path.len() - 1)
    );
    for t in [0.1, 0.5, 1.0] {
        println!(
            "  E({t}) = {:.4}, X({t}) = {:+.4}",
            path.inverse_time_change(t)?,
            path.ctrw_limit_value(t)?[0]
        );
    }
    Ok(())
}
