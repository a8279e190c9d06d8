//! Distributional checks of simulated ensembles against the exact
//! Heisenberg laws.

use cr_diffusion::models::PhaseGauge;
use cr_diffusion::observables::{char_function, semigroup_average};
use cr_diffusion::sde::{path_rng, sample_increment, simulate_driven, simulate_ensemble};
use cr_diffusion::stats::{mean_stderr, variance_stderr};
use cr_diffusion::{Ensemble, FrameState, GaugeRotated, Heisenberg, SimConfig, C64};

fn within(a: (f64, f64), b: (f64, f64), sigmas: f64) -> bool {
    (a.0 - b.0).abs() <= sigmas * (a.1 * a.1 + b.1 * b.1).sqrt()
}

fn products(ens: &Ensemble, i: usize, j: usize) -> Vec<f64> {
    ens.completed().map(|s| s.x[i] * s.x[j]).collect()
}

#[test]
fn heisenberg_two_gaussian_marginals() {
    let h = Heisenberg::new(2).unwrap();
    let ens = simulate_ensemble(
        &h,
        &FrameState::identity_at(vec![0.0; 5]),
        &SimConfig::new(1.0, 200, 31),
        20_000,
        0,
    )
    .unwrap();
    for alpha in 0..2 {
        let z2 =
            semigroup_average(&ens, |x| x[2 * alpha].powi(2) + x[2 * alpha + 1].powi(2)).unwrap();
        assert!(
            (z2.mean - 1.0).abs() <= 3.0 * z2.stderr,
            "E|z{alpha}|² = {z2:?}"
        );
        let u = semigroup_average(&ens, |x| x[2 * alpha]).unwrap();
        assert!(u.mean.abs() <= 3.0 * u.stderr);
    }
    let (mt, st) = mean_stderr(&ens.coordinate(4));
    assert!(mt.abs() <= 3.0 * st);
    // two independent area terms, each of variance t²
    let (vt, se) = variance_stderr(&ens.coordinate(4));
    assert!((vt - 2.0).abs() <= 3.0 * se, "Var t = {vt} ± {se}");
}

#[test]
fn levy_area_at_half_time() {
    let h = Heisenberg::new(1).unwrap();
    let t = 0.5;
    let ens = simulate_ensemble(
        &h,
        &FrameState::identity_at(vec![0.0; 3]),
        &SimConfig::new(t, 200, 8),
        20_000,
        0,
    )
    .unwrap();
    let (v, se) = variance_stderr(&ens.coordinate(2));
    assert!((v - t * t).abs() <= 3.0 * se, "{v} ± {se}");
    for p in char_function(&ens.coordinate(2), &[0.5, 1.0, 2.0, 4.0]).unwrap() {
        let exact = 1.0 / (p.lambda * t).cosh();
        assert!(
            (p.value.re - exact).abs() <= 3.0 * p.stderr_re + 1e-3,
            "{p:?} vs {exact}"
        );
        assert!(p.value.im.abs() <= 3.0 * p.stderr_im + 1e-3);
    }
}

#[test]
fn gauge_invariance_in_law() {
    let s0 = FrameState::identity_at(vec![0.0; 3]);
    let cfg = SimConfig::new(1.0, 200, 12);
    let plain = simulate_ensemble(&Heisenberg::new(1).unwrap(), &s0, &cfg, 20_000, 0).unwrap();
    let rot = GaugeRotated::new(Heisenberg::new(1).unwrap(), PhaseGauge::new(1, 0.9)).unwrap();
    let gauged = simulate_ensemble(&rot, &s0, &SimConfig { seed: 13, ..cfg }, 20_000, 0).unwrap();
    for i in 0..3 {
        assert!(within(
            mean_stderr(&plain.coordinate(i)),
            mean_stderr(&gauged.coordinate(i)),
            4.0
        ));
        for j in i..3 {
            let a = mean_stderr(&products(&plain, i, j));
            let b = mean_stderr(&products(&gauged, i, j));
            assert!(within(a, b, 4.0), "cov({i},{j}): {a:?} vs {b:?}");
        }
    }
}

/// `Re(e · e^{iκ t})` is identically 1 along the exact flow of the phase-gauge
/// model, so its ensemble mean isolates the weak error of the scheme. Coarse
/// runs are driven by sums of the fine increments.
#[test]
fn weak_self_convergence_is_first_order() {
    let kappa = 0.5;
    let rot = GaugeRotated::new(Heisenberg::new(1).unwrap(), PhaseGauge::new(1, kappa)).unwrap();
    let s0 = FrameState::identity_at(vec![0.0; 3]);
    let levels = [50usize, 100, 200];
    let fine = 200;
    let mut errors = vec![Vec::new(); levels.len()];
    for i in 0..2000 {
        let mut rng = path_rng(3, i);
        let inc: Vec<C64> = (0..fine)
            .flat_map(|_| sample_increment(&mut rng, 1, 1.0 / fine as f64))
            .collect();
        for (l, &steps) in levels.iter().enumerate() {
            let coarse: Vec<C64> = inc.chunks(fine / steps).map(|c| c.iter().sum()).collect();
            let cfg = SimConfig {
                reunitarize_every: 0,
                ..SimConfig::new(1.0, steps, 0)
            };
            let p = simulate_driven(&rot, &s0, &cfg, &coarse).unwrap();
            let f = p.terminal.e[(0, 0)] * C64::from_polar(1.0, kappa * p.terminal.x[2]);
            errors[l].push(f.re - 1.0);
        }
    }
    let means: Vec<f64> = errors.iter().map(|e| mean_stderr(e).0).collect();
    for w in means.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 2.0).abs() <= 0.5, "errors {means:?}");
    }
}

#[test]
fn reunitarized_gauge_run_keeps_flat_frame_fixed() {
    let kappa = 0.5;
    let rot = GaugeRotated::new(Heisenberg::new(1).unwrap(), PhaseGauge::new(1, kappa)).unwrap();
    let ens = simulate_ensemble(
        &rot,
        &FrameState::identity_at(vec![0.0; 3]),
        &SimConfig::new(1.0, 400, 2),
        500,
        0,
    )
    .unwrap();
    let worst = ens
        .completed()
        .map(|s| (s.e[(0, 0)] * C64::from_polar(1.0, kappa * s.x[2]) - 1.0).norm())
        .fold(0.0, f64::max);
    assert!(worst < 0.05, "{worst}");
}
