use cr_diffusion::bundle::random_unitary;
use cr_diffusion::cli::config::{CommandName, PartialConfig};
use cr_diffusion::hormander::{lie_bracket, span_rank, FieldExpr};
use cr_diffusion::models::{ConstantGauge, FrameIndex, PhaseGauge};
use cr_diffusion::observables::{line_integral, OneForm};
use cr_diffusion::sde::{path_rng, simulate_path_indexed};
use cr_diffusion::{CrModel, FrameState, GaugeRotated, Heisenberg, SimConfig, C64};
use proptest::prelude::*;

fn point3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 3)
}

fn frame_index(n: usize) -> impl Strategy<Value = FrameIndex> {
    (0..2 * n).prop_map(move |i| FrameIndex::from_flat(1 + i, n))
}

fn gauge_h1(kappa: f64) -> GaugeRotated<Heisenberg, PhaseGauge> {
    GaugeRotated::new(Heisenberg::new(1).unwrap(), PhaseGauge::new(1, kappa)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_antisymmetry(x in point3(), a in frame_index(1), b in frame_index(1), kappa in -2.0..2.0f64) {
        let m = gauge_h1(kappa);
        let ab = lie_bracket(&m, a, b, &x).unwrap();
        let ba = lie_bracket(&m, b, a, &x).unwrap();
        for (p, q) in ab.comps.iter().zip(&ba.comps) {
            prop_assert!((p + q).norm() <= 1e-10);
        }
    }

    #[test]
    fn jacobi_identity(x in point3(), a in frame_index(1), b in frame_index(1), c in frame_index(1), kappa in -1.0..1.0f64) {
        let m = gauge_h1(kappa);
        let f = FieldExpr::Field;
        let cyclic = [(a, b, c), (b, c, a), (c, a, b)];
        let mut sum = vec![C64::new(0.0, 0.0); 3];
        for (p, q, r) in cyclic {
            let v = FieldExpr::bracket(f(p), FieldExpr::bracket(f(q), f(r))).eval(&m, &x).unwrap();
            for (s, c) in sum.iter_mut().zip(&v.comps) {
                *s += c;
            }
        }
        prop_assert!(sum.iter().all(|s| s.norm() <= 1e-6), "{:?}", sum);
    }

    #[test]
    fn span_rank_invariant_under_constant_rotation(x in prop::collection::vec(-1.0..1.0f64, 5), seed in 0u64..1000) {
        let lam = random_unitary(2, &mut path_rng(seed, 0));
        let rot = GaugeRotated::new(Heisenberg::new(2).unwrap(), ConstantGauge { matrix: lam }).unwrap();
        let h = Heisenberg::new(2).unwrap();
        for order in [1, 2] {
            prop_assert_eq!(span_rank(&h, &x, order).unwrap().rank, span_rank(&rot, &x, order).unwrap().rank);
        }
    }

    #[test]
    fn line_integral_linearity(index in 0u64..500, a in -3.0..3.0f64, b in -3.0..3.0f64, kappa in -1.0..1.0f64) {
        let m = gauge_h1(kappa);
        let cfg = SimConfig { store_increments: true, ..SimConfig::new(0.5, 100, 4) };
        let p = simulate_path_indexed(&m, &FrameState::identity_at(vec![0.0; 3]), &cfg, index).unwrap();
        let f1 = OneForm::times(|x| C64::new(x[1], x[0]), OneForm::dz(0));
        let f2 = OneForm::times(|x| C64::new(x[2].cos(), 0.0), OneForm::Differential(0));
        let combo = OneForm::Linear(vec![(C64::new(a, 0.0), f1.clone()), (C64::new(b, 0.0), f2.clone())]);
        let lhs = line_integral(&m, &p, &combo).unwrap();
        let rhs = a * line_integral(&m, &p, &f1).unwrap() + b * line_integral(&m, &p, &f2).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{} {}", lhs, rhs);
    }

    #[test]
    fn config_roundtrip(
        cmd in 0..CommandName::ALL.len(),
        gauge in any::<bool>(),
        n in 1usize..4,
        kappa in -5.0..5.0f64,
        t in 0.01..10.0f64,
        steps in 1usize..100_000,
        paths in 1usize..1_000_000,
        seed in 0u64..i64::MAX as u64,
        workers in 0usize..16,
        radius in 0.1..3.0f64,
        lambdas in prop::collection::vec(-10.0..10.0f64, 1..6),
        text in any::<bool>(),
    ) {
        let mut p = PartialConfig::default();
        p.command = Some(CommandName::ALL[cmd].as_str().into());
        p.model.name = Some(if gauge { "gauge-heisenberg" } else { "heisenberg" }.into());
        p.model.n = Some(n as i64);
        p.model.kappa = Some(kappa);
        p.sim.t = Some(t);
        p.sim.steps = Some(steps as i64);
        p.sim.paths = Some(paths as i64);
        p.sim.seed = Some(seed as i64);
        p.sim.workers = Some(workers as i64);
        p.params.radius = Some(radius);
        p.params.lambdas = Some(lambdas);
        p.output.format = Some(if text { "text" } else { "csv" }.into());
        let cfg = p.validate().unwrap();
        let back = PartialConfig::from_toml(&cfg.to_toml()).unwrap().validate().unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
    }
}

#[test]
fn model_dimensions() {
    let m = gauge_h1(0.3);
    assert_eq!((m.n(), m.dim()), (1, 3));
}
