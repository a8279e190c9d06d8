//! Structural checks of the built-in models at random chart points.

use cr_diffusion::models::{validate_model, PhaseGauge};
use cr_diffusion::sde::path_rng;
use cr_diffusion::{CrModel, GaugeRotated, Heisenberg};
use rand::Rng;

fn points(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let mut rng = path_rng(1, 0);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

fn main() -> cr_diffusion::Result<()> {
    let models: Vec<Box<dyn CrModel>> = vec![
        Box::new(Heisenberg::new(1)?),
        Box::new(Heisenberg::new(3)?),
        Box::new(GaugeRotated::new(
            Heisenberg::new(1)?,
            PhaseGauge::new(1, 0.7),
        )?),
    ];
    for m in &models {
        let report = validate_model(m.as_ref(), &points(m.dim(), 50));
        print!("{}", report.to_text());
        println!("passed: {}\n", report.passed());
    }
    Ok(())
}
