//! Exit-time solution of the Dirichlet problem on the Korányi ball
//! `|z|⁴ + t² < R⁴`.
//!
//! The coordinates `u` and `t` are `Δ_b`-harmonic on the first Heisenberg
//! group, so the exit-point average must reproduce their values at the
//! starting point. Mean exit times grow with the radius.

use cr_diffusion::dirichlet::{
    mean_exit_time, solve_dirichlet, BoundaryData, ExitOptions, KoranyiBall,
};
use cr_diffusion::{Heisenberg, SimConfig};

fn main() -> cr_diffusion::Result<()> {
    let h = Heisenberg::new(1)?;
    let ball = KoranyiBall::new(1, 1.0)?;
    let cfg = SimConfig::new(10.0, 10_000, 17);
    let opts = ExitOptions::default();

    for (label, f, x0) in [
        ("u", BoundaryData::Coordinate(0), [0.2, 0.0, 0.0]),
        ("t", BoundaryData::Coordinate(2), [0.0, 0.0, 0.3]),
        (
            "|z|²",
            BoundaryData::custom(|x| x[0] * x[0] + x[1] * x[1]),
            [0.0, 0.0, 0.0],
        ),
    ] {
        let s = solve_dirichlet(&h, &ball, &f, &x0, 10_000, &cfg, &opts, 0)?;
        println!(
            "f = {label:<5} x0 = {x0:?}: {:.4} ± {:.4}   boundary range [{:.3}, {:.3}]  collar {:.1e}  horizon {:.4}{}",
            s.estimate,
            s.stderr,
            s.boundary_min,
            s.boundary_max,
            s.collar_residual,
            s.horizon_fraction,
            if s.flagged { "  FLAGGED" } else { "" }
        );
    }

    for radius in [0.5, 1.0] {
        let ball = KoranyiBall::new(1, radius)?;
        let m = mean_exit_time(&h, &ball, &[0.0; 3], 10_000, &cfg, &opts, 0)?;
        println!("R = {radius}: E τ = {:.4} ± {:.4}", m.mean, m.stderr);
    }
    Ok(())
}
