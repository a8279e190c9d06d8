//! Bracket-generating check: the horizontal frame spans a rank-2 real
//! distribution, and one round of brackets fills out the tangent space.

use cr_diffusion::hormander::span_rank;
use cr_diffusion::models::PhaseGauge;
use cr_diffusion::{GaugeRotated, Heisenberg};

fn main() -> cr_diffusion::Result<()> {
    let x = [0.3, -0.2, 0.7];
    let h = Heisenberg::new(1)?;
    for order in [1, 2] {
        let table = span_rank(&h, &x, order)?;
        println!(
            "H1 order {order}: rank {}  singular values {:.4?}",
            table.rank, table.singular_values
        );
        for (i, v) in table.vectors.iter().enumerate() {
            let comps: Vec<String> = v.comps.iter().map(|c| format!("{c:.3}")).collect();
            println!("  [{}] ({})", table.label(i), comps.join(", "));
        }
    }

    let rot = GaugeRotated::new(Heisenberg::new(2)?, PhaseGauge::new(2, 1.1))?;
    let y = [0.1, 0.2, -0.3, 0.05, 0.4];
    for order in [1, 2] {
        println!(
            "gauge-rotated H2 order {order}: rank {}",
            span_rank(&rot, &y, order)?.rank
        );
    }
    Ok(())
}
