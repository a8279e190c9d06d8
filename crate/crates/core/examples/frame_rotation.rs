//! Rotating the starting frame by a constant unitary `Λ` while feeding the
//! rotated noise `Λ* dB` reproduces the same projected path.

use cr_diffusion::bundle::random_unitary;
use cr_diffusion::models::PhaseGauge;
use cr_diffusion::sde::{path_rng, rotate_increments, simulate_driven, simulate_path_indexed};
use cr_diffusion::{CrModel, FrameState, GaugeRotated, Heisenberg, SimConfig};

fn discrepancy<M: CrModel>(model: &M, label: &str) -> cr_diffusion::Result<()> {
    let n = model.n();
    let cfg = SimConfig {
        store_increments: true,
        ..SimConfig::new(1.0, 1000, 5)
    };
    let s0 = FrameState::identity_at(vec![0.0; model.dim()]);
    let lam = random_unitary(n, &mut path_rng(99, 0));
    let mut worst = 0.0f64;
    for i in 0..20 {
        let p = simulate_path_indexed(model, &s0, &cfg, i)?;
        let inc = rotate_increments(p.increments.as_ref().unwrap(), &lam);
        let q = simulate_driven(model, &s0.rotated(&lam), &cfg, &inc)?;
        for (a, b) in p.states.iter().zip(&q.states) {
            for (x, y) in a.x.iter().zip(&b.x) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    println!("{label:<24} max |Δx| = {worst:.3e}   dt = {:.0e}", cfg.dt());
    Ok(())
}

fn main() -> cr_diffusion::Result<()> {
    discrepancy(&Heisenberg::new(2)?, "H2")?;
    discrepancy(
        &GaugeRotated::new(Heisenberg::new(1)?, PhaseGauge::new(1, 0.8))?,
        "gauge-rotated H1",
    )
}
