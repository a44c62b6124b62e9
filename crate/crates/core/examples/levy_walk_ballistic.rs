//! Coupled Levy walk: the second moment grows like `t^2`, paths stay in
//! the light cone, and the walker law differs from the overshooting law.

use ctrw::model::{levy_walk_preset, DirectionWeights, ScalarField};
use ctrw::validation::{fit_power_exponent, ks_distance, mc_law_estimate, Engine, Ensemble, KsReference};

fn main() -> ctrw::Result<()> {
    let spec = levy_walk_preset(0.6, vec![ScalarField::zero()], DirectionWeights::symmetric_1d())?;
    let times = [1.0, 2.0, 4.0, 8.0];
    let ens = Ensemble {
        n_paths: 10_000,
        seed: 3,
        workers: None,
        engine: Engine::Limit { dr: 1e-2 },
        octrw: true,
    };
    let law = mc_law_estimate(&spec, &[0.0], 0.0, &times, &ens)?;
    let second: Vec<f64> = law.x.iter().map(|s| s.mean_square_norm()).collect();
    for (t, m) in times.iter().zip(&second) {
        println!("t = {t:>4}: E X^2 = {m:>8.4}, E X^2 / t^2 = {:.4}", m / (t * t));
    }
    println!("slope {:.3}", fit_power_exponent(&times, &second)?.exponent);
    let outside = law
        .x
        .iter()
        .zip(&times)
        .map(|(s, t)| s.fraction_where(|x| x[0].abs() > *t))
        .fold(0.0, f64::max);
    println!("fraction outside |x| <= t: {outside}");
    let y = &law.y.as_ref().unwrap()[0];
    println!(
        "KS(X(1), Y(1)) on the same paths = {:.3}",
        ks_distance(&law.x[0], KsReference::Sample(y))?
    );
    Ok(())
}
