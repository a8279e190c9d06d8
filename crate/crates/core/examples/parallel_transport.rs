//! Parallel transport around a closed horizontal loop.
//!
//! On the flat Heisenberg frame the holonomy is trivial. In a phase gauge
//! `e^{iκt}` the transported frame coefficients pick up the phase change of
//! the gauge between the endpoints, which is `e^{-iκ Δt}` with `Δt` the
//! enclosed-area lift of the loop.

use std::f64::consts::PI;

use cr_diffusion::bundle::{parallel_transport, FnCurve};
use cr_diffusion::models::PhaseGauge;
use cr_diffusion::{GaugeRotated, Heisenberg, C64};

fn main() -> cr_diffusion::Result<()> {
    let r = 0.5;
    // horizontal lift of a circle of radius r: dt = 2(u dv - v du)
    let loop_curve = FnCurve {
        position: move |s: f64| vec![r * s.cos(), r * s.sin(), 2.0 * r * r * s],
        velocity: move |s: f64| vec![-r * s.sin(), r * s.cos(), 2.0 * r * r],
    };
    let v0 = [C64::new(1.0, 0.0)];

    let flat = Heisenberg::new(1)?;
    let tr = parallel_transport(&flat, &loop_curve, 0.0, 2.0 * PI, 400, &v0)?;
    println!(
        "flat frame:   Λ = {:.6}   defect {:.1e}",
        tr.lambda[(0, 0)],
        tr.unitarity_defect
    );

    for kappa in [0.3, 0.7, 1.3] {
        let rot = GaugeRotated::new(Heisenberg::new(1)?, PhaseGauge::new(1, kappa))?;
        let tr = parallel_transport(&rot, &loop_curve, 0.0, 2.0 * PI, 400, &v0)?;
        let dt = 4.0 * PI * r * r;
        println!(
            "kappa {kappa:<4} Λ = {:.6}   expected {:.6}",
            tr.lambda[(0, 0)],
            C64::from_polar(1.0, -kappa * dt)
        );
    }
    Ok(())
}
