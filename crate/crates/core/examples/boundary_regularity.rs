//! Immediate exit from boundary points of the Korányi ball, at the
//! characteristic pole and at a point on the equator.

use cr_diffusion::dirichlet::{regularity_probe, ExitOptions, KoranyiBall};
use cr_diffusion::Heisenberg;

fn main() -> cr_diffusion::Result<()> {
    let h = Heisenberg::new(1)?;
    let ball = KoranyiBall::new(1, 1.0)?;
    let probes = [1e-5, 1e-4, 1e-3];
    let opts = ExitOptions::default();

    println!(
        "{:<8} {:>6} {:>10} {:>10} {:>10}",
        "point", "steps", "t=1e-5", "t=1e-4", "t=1e-3"
    );
    for (name, xb) in [("pole", ball.pole()), ("equator", ball.equator())] {
        for steps in [100, 200] {
            let f = regularity_probe(&h, &ball, &xb, &probes, 1000, steps, 4, &opts, 0)?;
            println!(
                "{name:<8} {steps:>6} {:>10.3} {:>10.3} {:>10.3}",
                f[0], f[1], f[2]
            );
        }
    }
    Ok(())
}
