//! Terminal law of the diffusion on the first Heisenberg group.
//!
//! `z(t)` is complex Brownian motion, so `Var u(t) = Var v(t) = t/2`, and the
//! `t`-coordinate is twice the Lévy area with `Var t(1) = 1`.
//!
//!     cargo run --release --example heisenberg_ensemble -- [paths] [steps]

use std::time::Instant;

use cr_diffusion::sde::simulate_ensemble;
use cr_diffusion::stats::variance_stderr;
use cr_diffusion::{FrameState, Heisenberg, SimConfig};

fn main() -> cr_diffusion::Result<()> {
    let mut args = std::env::args().skip(1);
    let paths: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(100_000);
    let steps: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(1000);

    let model = Heisenberg::new(1)?;
    let cfg = SimConfig::new(1.0, steps, 7);
    let start = Instant::now();
    let ens = simulate_ensemble(
        &model,
        &FrameState::identity_at(vec![0.0; 3]),
        &cfg,
        paths,
        0,
    )?;
    println!("{paths} paths x {steps} steps in {:.2?}", start.elapsed());

    for (k, name, exact) in [(0, "u", 0.5), (1, "v", 0.5), (2, "t", 1.0)] {
        let (var, se) = variance_stderr(&ens.coordinate(k));
        println!("Var {name}(1) = {var:.5} ± {se:.5}   (exact {exact})");
    }
    println!("capped paths: {}", ens.capped_count());
    Ok(())
}
