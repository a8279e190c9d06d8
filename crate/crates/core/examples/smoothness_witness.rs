//! Breadth-first search for a multi-index where the Φ recursion of a
//! one-form is nonzero.

use cr_diffusion::hormander::{label, smoothness_condition};
use cr_diffusion::observables::OneForm;
use cr_diffusion::{Heisenberg, C64};

fn main() -> cr_diffusion::Result<()> {
    let h = Heisenberg::new(1)?;
    let x = [0.2, -0.1, 0.4];
    let forms = [
        ("zero", OneForm::Zero),
        ("contact", OneForm::Contact),
        ("dt", OneForm::Differential(2)),
        ("du", OneForm::Differential(0)),
        (
            "u dz̄",
            OneForm::times(|x| C64::new(x[0], 0.0), OneForm::dzbar(0)),
        ),
    ];
    for (name, form) in &forms {
        let r = smoothness_condition(&h, form, &x, 3)?;
        match &r.witness {
            Some(w) => println!(
                "{name:<8} witness [{}]  Φ = {:.6}  ({} evaluated)",
                label(w),
                r.value,
                r.evaluated
            ),
            None => println!(
                "{name:<8} no witness up to order 3 ({} evaluated)",
                r.evaluated
            ),
        }
    }
    Ok(())
}
