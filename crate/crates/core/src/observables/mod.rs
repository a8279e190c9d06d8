//! Estimators built on simulated ensembles and paths.

mod density;
mod line_integral;

pub use density::{
    estimate_density, estimate_density_samples, kde_at, Bandwidth, DensityEstimate, Window,
};
pub use line_integral::{line_integral, reverse_path, LineIntegralObserver};

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::models::{CrModel, FrameIndex};
use crate::sde::Ensemble;
use crate::{Error, Result};

pub type FormFn = Arc<dyn Fn(&[f64]) -> Vec<C64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>;

/// A complex 1-form on the chart.
#[derive(Clone)]
pub enum OneForm {
    Zero,
    /// The pseudo-Hermitian structure `θ` of the model.
    Contact,
    /// `dx^k` for chart coordinate `k`.
    Differential(usize),
    /// `Σ cᵢ Ξᵢ`.
    Linear(Vec<(C64, OneForm)>),
    /// `f · Ξ` for a scalar function `f`.
    Scaled(ScalarFn, Box<OneForm>),
    /// Arbitrary chart components.
    Custom(FormFn),
}

impl fmt::Debug for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OneForm::Zero => write!(f, "0"),
            OneForm::Contact => write!(f, "theta"),
            OneForm::Differential(k) => write!(f, "dx{k}"),
            OneForm::Linear(terms) => f.debug_list().entries(terms.iter()).finish(),
            OneForm::Scaled(_, inner) => write!(f, "<fn> * {inner:?}"),
            OneForm::Custom(_) => write!(f, "<custom>"),
        }
    }
}

impl OneForm {
    /// `dzᵅ = duᵅ + i dvᵅ` in Heisenberg-type coordinates.
    pub fn dz(alpha: usize) -> Self {
        OneForm::Linear(vec![
            (C64::new(1.0, 0.0), OneForm::Differential(2 * alpha)),
            (C64::new(0.0, 1.0), OneForm::Differential(2 * alpha + 1)),
        ])
    }

    pub fn dzbar(alpha: usize) -> Self {
        OneForm::Linear(vec![
            (C64::new(1.0, 0.0), OneForm::Differential(2 * alpha)),
            (C64::new(0.0, -1.0), OneForm::Differential(2 * alpha + 1)),
        ])
    }

    /// The real form `½(dzᵅ + dz̄ᵅ)`.
    pub fn half_dz_sum(alpha: usize) -> Self {
        OneForm::Linear(vec![
            (C64::new(0.5, 0.0), OneForm::dz(alpha)),
            (C64::new(0.5, 0.0), OneForm::dzbar(alpha)),
        ])
    }

    pub fn scaled(self, c: C64) -> Self {
        OneForm::Linear(vec![(c, self)])
    }

    pub fn times(f: impl Fn(&[f64]) -> C64 + Send + Sync + 'static, form: OneForm) -> Self {
        OneForm::Scaled(Arc::new(f), Box::new(form))
    }

    /// Adds `scale · Ξ(x)` into `out`.
    pub fn add_chart_comps<M: CrModel + ?Sized>(
        &self,
        model: &M,
        x: &[f64],
        scale: C64,
        out: &mut [C64],
    ) {
        match self {
            OneForm::Zero => {}
            OneForm::Contact => {
                let theta = model.theta(x);
                for (o, t) in out.iter_mut().zip(theta) {
                    *o += scale * t;
                }
            }
            OneForm::Differential(k) => out[*k] += scale,
            OneForm::Linear(terms) => {
                for (c, form) in terms {
                    form.add_chart_comps(model, x, scale * c, out);
                }
            }
            OneForm::Scaled(f, form) => form.add_chart_comps(model, x, scale * f(x), out),
            OneForm::Custom(f) => {
                for (o, v) in out.iter_mut().zip(f(x)) {
                    *o += scale * v;
                }
            }
        }
    }

    pub fn chart_comps<M: CrModel + ?Sized>(&self, model: &M, x: &[f64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); model.dim()];
        self.add_chart_comps(model, x, C64::new(1.0, 0.0), &mut out);
        out
    }

    /// Frame component `Ξ_A = Ξ(Z_A)`.
    pub fn frame_comp<M: CrModel + ?Sized>(&self, model: &M, x: &[f64], idx: FrameIndex) -> C64 {
        model.field(x, idx).pair(&self.chart_comps(model, x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupAverage {
    pub mean: f64,
    pub stderr: f64,
    pub n_used: usize,
    pub capped_fraction: f64,
}

/// `u(t, x) = E_x[f(X(t))]` over the completed paths of an ensemble.
pub fn semigroup_average(ens: &Ensemble, f: impl Fn(&[f64]) -> f64) -> Result<SemigroupAverage> {
    let values: Vec<f64> = ens.completed().map(|s| f(&s.x)).collect();
    if values.is_empty() {
        return Err(Error::AllPathsCapped(ens.n_paths));
    }
    let (mean, stderr) = crate::stats::mean_stderr(&values);
    Ok(SemigroupAverage {
        mean,
        stderr,
        n_used: values.len(),
        capped_fraction: ens.capped_count() as f64 / ens.n_paths as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharFnPoint {
    pub lambda: f64,
    pub value: C64,
    pub stderr_re: f64,
    pub stderr_im: f64,
}

/// Minimum sample count accepted by [`char_function`].
pub const CHARFN_MIN_SAMPLES: usize = 100;

/// Empirical characteristic function `E[e^{iλY}]` on a grid of `λ`.
pub fn char_function(samples: &[f64], lambdas: &[f64]) -> Result<Vec<CharFnPoint>> {
    if samples.len() < CHARFN_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: CHARFN_MIN_SAMPLES,
            got: samples.len(),
        });
    }
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let (re, im): (Vec<f64>, Vec<f64>) = samples
                .iter()
                .map(|y| {
                    let (s, c) = (lambda * y).sin_cos();
                    (c, s)
                })
                .unzip();
            let (mr, sr) = crate::stats::mean_stderr(&re);
            let (mi, si) = crate::stats::mean_stderr(&im);
            CharFnPoint {
                lambda,
                value: C64::new(mr, mi),
                stderr_re: sr,
                stderr_im: si,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Heisenberg;
    use crate::sde::{simulate_ensemble, SimConfig};
    use crate::FrameState;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn half_dz_sum_pairs_to_half() {
        let h = Heisenberg::new(1).unwrap();
        let x = [0.3, -0.7, 1.1];
        let xi = OneForm::half_dz_sum(0);
        let v = xi.frame_comp(&h, &x, FrameIndex::Z(0));
        assert!((v - C64::new(0.5, 0.0)).norm() < 1e-15);
        let w = xi.frame_comp(&h, &x, FrameIndex::Zbar(0));
        assert_eq!(w, v.conj());
    }

    #[test]
    fn contact_form_annihilates_frame() {
        let h = Heisenberg::new(2).unwrap();
        let x = [0.3, -0.7, 1.1, 0.2, -4.0];
        for a in FrameIndex::horizontal(2) {
            assert_eq!(OneForm::Contact.frame_comp(&h, &x, a), C64::new(0.0, 0.0));
        }
        let t = OneForm::Contact.frame_comp(&h, &x, FrameIndex::T);
        assert!((t - 1.0).norm() < 1e-15);
    }

    #[test]
    fn dz_pairs_with_z() {
        let h = Heisenberg::new(1).unwrap();
        let x = [0.1, 0.2, 0.3];
        assert!((OneForm::dz(0).frame_comp(&h, &x, FrameIndex::Z(0)) - 1.0).norm() < 1e-15);
        assert!(
            OneForm::dz(0)
                .frame_comp(&h, &x, FrameIndex::Zbar(0))
                .norm()
                < 1e-15
        );
    }

    #[test]
    fn constant_function_average() {
        let h = Heisenberg::new(1).unwrap();
        let ens = simulate_ensemble(
            &h,
            &FrameState::identity_at(vec![0.0; 3]),
            &SimConfig::new(1.0, 10, 1),
            50,
            1,
        )
        .unwrap();
        let avg = semigroup_average(&ens, |_| 1.0).unwrap();
        assert_eq!((avg.mean, avg.stderr), (1.0, 0.0));
        assert_eq!(avg.capped_fraction, 0.0);
    }

    #[test]
    fn u_coordinate_mean_zero() {
        let h = Heisenberg::new(1).unwrap();
        let ens = simulate_ensemble(
            &h,
            &FrameState::identity_at(vec![0.0; 3]),
            &SimConfig::new(1.0, 20, 4),
            20_000,
            0,
        )
        .unwrap();
        let avg = semigroup_average(&ens, |x| x[0]).unwrap();
        assert!(avg.mean.abs() < 3.0 * avg.stderr, "{avg:?}");
    }

    #[test]
    fn charfn_of_constant_is_exact() {
        let c = 0.37;
        let pts = char_function(&[c; 100], &[0.5, 1.0, 3.0]).unwrap();
        for p in pts {
            assert_eq!(
                p.value,
                C64::new((p.lambda * c).cos(), (p.lambda * c).sin())
            );
            assert_eq!(p.stderr_re, 0.0);
        }
    }

    #[test]
    fn charfn_of_gaussian() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let p = char_function(&xs, &[1.0]).unwrap()[0];
        // ∫ cos(y) φ(y) dy by the trapezoid rule on [-12, 12]
        let h = 1e-3;
        let oracle: f64 = (-12000..=12000)
            .map(|i| {
                let y = i as f64 * h;
                y.cos() * (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt() * h
            })
            .sum();
        assert!((oracle - (-0.5f64).exp()).abs() < 1e-12);
        assert!((p.value.re - oracle).abs() < 3.0 * p.stderr_re, "{p:?}");
        assert!(p.value.im.abs() < 3.0 * p.stderr_im);
    }

    #[test]
    fn charfn_rejects_small_samples() {
        assert!(matches!(
            char_function(&[0.0; 10], &[1.0]),
            Err(Error::TooFewSamples {
                needed: 100,
                got: 10
            })
        ));
    }
}
