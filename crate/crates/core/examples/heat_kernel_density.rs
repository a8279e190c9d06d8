//! Kernel density estimate of the heat kernel on the first Heisenberg group,
//! compared with the exact Gaussian marginal of `u` and checked for the
//! dilation law `p_t(u, v, t) = t^{-2} p_1(u/√t, v/√t, τ/t)`.

use cr_diffusion::observables::{estimate_density, Bandwidth, Window};
use cr_diffusion::sde::simulate_ensemble;
use cr_diffusion::{FrameState, Heisenberg, SimConfig};

fn main() -> cr_diffusion::Result<()> {
    let h = Heisenberg::new(1)?;
    let s0 = FrameState::identity_at(vec![0.0; 3]);
    let n_paths = 40_000;

    let e1 = simulate_ensemble(&h, &s0, &SimConfig::new(1.0, 400, 21), n_paths, 0)?;
    let window = Window::new(
        vec![-2.5, -2.5, -4.0],
        vec![2.5, 2.5, 4.0],
        vec![21, 21, 33],
    )?;
    let d1 = estimate_density(&h, &e1, &window, &Bandwidth::Scott)?;
    println!(
        "t = 1: mass in window {:.4}, integral {:.4}, bandwidth {:.3?}",
        d1.window_fraction(),
        d1.integral(),
        d1.bandwidth
    );

    let t = 0.25;
    let et = simulate_ensemble(&h, &s0, &SimConfig::new(t, 400, 22), n_paths, 0)?;
    let scaled = Window::new(
        vec![-2.5 * t.sqrt(), -2.5 * t.sqrt(), -4.0 * t],
        vec![2.5 * t.sqrt(), 2.5 * t.sqrt(), 4.0 * t],
        vec![21, 21, 33],
    )?;
    let dt = estimate_density(&h, &et, &scaled, &Bandwidth::Scott)?;

    println!(
        "{:>8} {:>8} {:>8} {:>12} {:>12}",
        "u", "v", "τ", "p_1", "t² p_t"
    );
    for i in [
        window.len() / 2,
        window.len() / 2 + 3,
        window.len() / 2 + 3 * 33,
        window.len() / 2 + 5 * 33 * 21,
    ] {
        let y = window.point(i);
        println!(
            "{:>8.3} {:>8.3} {:>8.3} {:>12.5} {:>12.5}",
            y[0],
            y[1],
            y[2],
            d1.values[i],
            t * t * dt.values[i]
        );
    }
    Ok(())
}
