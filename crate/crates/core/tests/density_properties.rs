use cr_diffusion::hormander::smoothness_condition;
use cr_diffusion::observables::{
    estimate_density_samples, kde_at, Bandwidth, LineIntegralObserver, OneForm, Window,
};
use cr_diffusion::sde::{simulate_ensemble, simulate_ensemble_observed};
use cr_diffusion::{FrameState, Heisenberg, SimConfig, C64};
use std::collections::HashMap;

fn terminal_samples(n_paths: usize, seed: u64) -> Vec<Vec<f64>> {
    let h = Heisenberg::new(1).unwrap();
    let ens = simulate_ensemble(
        &h,
        &FrameState::identity_at(vec![0.0; 3]),
        &SimConfig::new(1.0, 200, seed),
        n_paths,
        0,
    )
    .unwrap();
    ens.completed().map(|s| s.x.clone()).collect()
}

/// Largest fraction of samples sharing one bin of width `w`.
fn max_bin_mass(values: &[f64], w: f64) -> f64 {
    let mut bins: HashMap<i64, usize> = HashMap::new();
    for v in values {
        *bins.entry((v / w).floor() as i64).or_default() += 1;
    }
    *bins.values().max().unwrap() as f64 / values.len() as f64
}

#[test]
fn rotational_symmetry() {
    let h = Heisenberg::new(1).unwrap();
    let samples = terminal_samples(100_000, 61);
    let bw = Bandwidth::Fixed(vec![0.15, 0.15, 0.2])
        .resolve(&samples, 3)
        .unwrap();
    let a = kde_at(&h, &samples, &bw, &[0.5, 0.0, 0.2]);
    let b = kde_at(&h, &samples, &bw, &[0.0, 0.5, 0.2]);
    let c = kde_at(&h, &samples, &bw, &[-0.5, 0.0, 0.2]);
    for other in [b, c] {
        assert!((a - other).abs() <= 0.1 * a, "{a} {other}");
    }
}

#[test]
fn permutation_invariance() {
    let h = Heisenberg::new(1).unwrap();
    let samples = terminal_samples(5000, 62);
    let window = Window::new(vec![-2.0, -2.0, -3.0], vec![2.0, 2.0, 3.0], vec![9, 9, 11]).unwrap();
    let d = estimate_density_samples(&h, &samples, &window, &Bandwidth::Scott).unwrap();
    let mut shuffled = samples.clone();
    shuffled.reverse();
    shuffled.rotate_left(1234);
    let e = estimate_density_samples(&h, &shuffled, &window, &Bandwidth::Scott).unwrap();
    for (x, y) in d.bandwidth.iter().zip(&e.bandwidth) {
        assert!((x - y).abs() <= 1e-12 * x);
    }
    for (x, y) in d.values.iter().zip(&e.values) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300), "{x} {y}");
    }
    let again = estimate_density_samples(&h, &samples, &window, &Bandwidth::Scott).unwrap();
    assert_eq!(d, again);
}

/// `u dv − v du`: frame components vanish at the origin, witness at order 2.
fn area_form() -> OneForm {
    OneForm::Linear(vec![
        (
            C64::new(1.0, 0.0),
            OneForm::times(|x| C64::new(x[0], 0.0), OneForm::Differential(1)),
        ),
        (
            C64::new(-1.0, 0.0),
            OneForm::times(|x| C64::new(x[1], 0.0), OneForm::Differential(0)),
        ),
    ])
}

#[test]
fn area_form_witness_is_second_order() {
    let h = Heisenberg::new(1).unwrap();
    let r = smoothness_condition(&h, &area_form(), &[0.0; 3], 3).unwrap();
    assert_eq!(r.witness.map(|w| w.len()), Some(2));
}

/// Forms with a Φ witness have atomless integrals; the contact form, which
/// has none, integrates to an atom at zero.
#[test]
fn line_integrals_have_no_atom() {
    let h = Heisenberg::new(1).unwrap();
    let forms = [
        OneForm::half_dz_sum(0),
        area_form(),
        OneForm::Differential(2),
        OneForm::Contact,
    ];
    let ens = simulate_ensemble_observed(
        &h,
        &FrameState::identity_at(vec![0.0; 3]),
        &SimConfig::new(1.0, 200, 63),
        100_000,
        0,
        |_| LineIntegralObserver::new(&h, &forms),
    )
    .unwrap();
    for j in 0..3 {
        let mass = max_bin_mass(&ens.observable(j), 0.01);
        assert!(mass < 0.05, "form {j}: {mass}");
    }
    assert_eq!(max_bin_mass(&ens.observable(3), 0.01), 1.0);
}
