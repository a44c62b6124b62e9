//! Lattice CTRW `X^c` converging to its scaling limit as `c` grows.

use ctrw::model::{subdiffusion_preset, ScalarField};
use ctrw::validation::{ks_distance, ks_threshold_two, mc_law_at, Engine, Ensemble, KsReference};

fn main() -> ctrw::Result<()> {
    let spec = subdiffusion_preset(0.5, ScalarField::zero())?;
    let n = 20_000;
    let limit = mc_law_at(
        &spec,
        &[0.0],
        0.0,
        1.0,
        &Ensemble {
            n_paths: n,
            seed: 1,
            workers: None,
            engine: Engine::Limit { dr: 1e-2 },
            octrw: false,
        },
    )?;
    for (seed, c) in [(2, 10.0), (3, 100.0), (4, 1000.0)] {
        let ens = Ensemble {
            n_paths: n,
            seed,
            workers: None,
            engine: Engine::Chain { c },
            octrw: false,
        };
        let chain = mc_law_at(&spec, &[0.0], 0.0, 1.0, &ens)?;
        let ks = ks_distance(&chain, KsReference::Sample(&limit))?;
        println!("c = {c:>6}: Var {:.4}, KS to the limit {ks:.4}", chain.variance(0));
    }
    println!("two-sample KS noise level (99%): {:.4}", ks_threshold_two(n, n));
    Ok(())
}
