//! Stratonovich line integrals along simulated Heisenberg paths.
//!
//! The contact form integrates to zero on every path, `½(dz + dz̄) = du`
//! integrates to `u(t) - u(0)`, and `u dz̄` carries a nontrivial area part.

use cr_diffusion::observables::{line_integral, LineIntegralObserver, OneForm};
use cr_diffusion::sde::{simulate_ensemble_observed, simulate_path_indexed};
use cr_diffusion::stats::variance_stderr;
use cr_diffusion::{FrameState, Heisenberg, SimConfig, C64};

fn main() -> cr_diffusion::Result<()> {
    let h = Heisenberg::new(1)?;
    let s0 = FrameState::identity_at(vec![0.0; 3]);

    let cfg = SimConfig {
        store_increments: true,
        ..SimConfig::new(1.0, 1000, 3)
    };
    let p = simulate_path_indexed(&h, &s0, &cfg, 0)?;
    println!("one path:");
    println!(
        "  ∫θ          = {:.3e}",
        line_integral(&h, &p, &OneForm::Contact)?
    );
    println!(
        "  ∫½(dz+dz̄)  = {:.6}   u(1) = {:.6}",
        line_integral(&h, &p, &OneForm::half_dz_sum(0))?,
        p.terminal.x[0]
    );

    let forms = [
        OneForm::half_dz_sum(0),
        OneForm::Contact,
        OneForm::times(|x| C64::new(x[0], 0.0), OneForm::dzbar(0)),
    ];
    let ens = simulate_ensemble_observed(&h, &s0, &SimConfig::new(1.0, 500, 3), 20_000, 0, |_| {
        LineIntegralObserver::new(&h, &forms)
    })?;
    println!("ensemble of {}:", ens.n_paths);
    for (j, name) in ["½(dz+dz̄)", "θ", "u dz̄"].iter().enumerate() {
        let (var, se) = variance_stderr(&ens.observable(j));
        println!("  Var ∫{name:<10} = {var:.5} ± {se:.5}");
    }
    Ok(())
}
