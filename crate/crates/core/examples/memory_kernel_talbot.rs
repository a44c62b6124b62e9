//! Renewal kernels by Talbot inversion, GL derivatives and the `Psi*`
//! round trip.

use ctrw::frac_ops::{
    apply_neg_frac_derivative, gl_weights, memory_kernel, psi_star_apply, psi_star_inverse, KernelMethod, Order,
};
use ctrw::grid::{Grid1d, GridField, GridMeasure};
use ctrw::model::{subdiffusion_preset, ScalarField};
use ctrw::special::gamma;

fn main() -> ctrw::Result<()> {
    let spec = subdiffusion_preset(0.5, ScalarField::zero())?;
    let k = memory_kernel(&spec, 0.0, 0.1, 101, KernelMethod::Talbot)?;
    for i in [1, 10, 100] {
        let t = i as f64 * 0.1;
        println!(
            "V({t:>4}) = {:.10}  exact {:.10}",
            k.values[i],
            t.powf(-0.5) / gamma(0.5)
        );
    }
    println!("GL weights of order 0.5: {:?}", gl_weights(0.5, 4));

    // (-d/ds)^{1/2} of (2 - s)_+ at s = 1 is 1/Gamma(3/2)
    let t = Grid1d::new(0.0, 2.0, 801)?;
    let x = Grid1d::new(0.0, 1.0, 2)?;
    let ramp = GridField::from_fn(x, t, |_, s| 2.0 - s);
    let d = apply_neg_frac_derivative(&ramp, &Order::Constant(0.5))?;
    println!(
        "half derivative of a ramp: {:.4} (exact {:.4})",
        d.at(0, 400),
        1.0 / gamma(1.5)
    );

    let t = Grid1d::with_step(0.0, 1e-3, 1000)?;
    let m = GridMeasure::from_fn(x, t, |_, s| 30.0 * s * s * (1.0 - s) * (1.0 - s));
    let there = psi_star_apply(&m, &spec)?;
    let back = psi_star_inverse(&there, &|_| {
        memory_kernel(&spec, 0.0, t.step, t.n + 1, KernelMethod::Auto)
    })?;
    let err: f64 = back
        .density
        .iter()
        .zip(m.density.iter())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>();
    let total: f64 = m.density.iter().sum();
    println!("Psi* round trip on a smooth bump: relative L1 {:.2e}", err / total);
    Ok(())
}
