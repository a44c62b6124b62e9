//! Variable-order traps: walkers pile up where the order is smallest.

use ctrw::model::{variable_order_preset, ScalarField};
use ctrw::validation::{mc_law_at, two_proportion_z, Engine, Ensemble};

fn main() -> ctrw::Result<()> {
    let (lo, hi) = (0.1, 0.9);
    let spec = variable_order_preset(
        ScalarField::spatial(move |x| hi - (hi - lo) * (-x[0] * x[0]).exp()),
        (hi - lo) * (2.0f64 / std::f64::consts::E).sqrt() * 1.001,
    )?;
    let n = 20_000;
    let near = |p: &[f64]| p[0].abs() <= 0.5;
    let mut probs = Vec::new();
    for (seed, t) in [(1, 1.0), (2, 3.0), (3, 10.0)] {
        let ens = Ensemble {
            n_paths: n,
            seed,
            workers: None,
            engine: Engine::Limit { dr: 1e-2 },
            octrw: false,
        };
        let p = mc_law_at(&spec, &[1.0], 0.0, t, &ens)?.fraction_where(near);
        println!("t = {t:>4}: P(|X| <= 0.5) = {p:.4}");
        probs.push(p);
    }
    println!("z(t = 10 vs t = 1) = {:.1}", two_proportion_z(probs[0], n, probs[2], n));
    Ok(())
}
