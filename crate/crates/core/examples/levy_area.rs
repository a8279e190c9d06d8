//! Characteristic function of the `t`-coordinate on the first Heisenberg
//! group against Lévy's formula `E[e^{iλ t(1)}] = 1 / cosh λ`.

use cr_diffusion::observables::char_function;
use cr_diffusion::sde::simulate_ensemble;
use cr_diffusion::{FrameState, Heisenberg, SimConfig};

fn main() -> cr_diffusion::Result<()> {
    let paths: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(50_000);
    let model = Heisenberg::new(1)?;
    let ens = simulate_ensemble(
        &model,
        &FrameState::identity_at(vec![0.0; 3]),
        &SimConfig::new(1.0, 500, 11),
        paths,
        0,
    )?;

    let lambdas = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0];
    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>9}",
        "lambda", "re", "im", "sech", "stderr"
    );
    for p in char_function(&ens.coordinate(2), &lambdas)? {
        let exact = 1.0 / p.lambda.cosh();
        println!(
            "{:>6.2} {:>10.5} {:>10.5} {:>10.5} {:>9.5}",
            p.lambda, p.value.re, p.value.im, exact, p.stderr_re
        );
    }
    Ok(())
}
