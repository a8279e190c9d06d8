use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{Christoffel, CrModel, FrameIndex};
use crate::{Error, Result};

/// A smooth map from the chart to `U(n)` together with its coordinate
/// derivatives.
pub trait Gauge: Send + Sync {
    fn n(&self) -> usize;
    fn name(&self) -> String;
    fn value(&self, x: &[f64]) -> DMatrix<C64>;
    /// `∂Λ/∂x^k` at `x`.
    fn derivative(&self, x: &[f64], k: usize) -> DMatrix<C64>;
}

/// `Λ(x) = e^{iκ x^k} I` where `x^k` is the last chart coordinate (the
/// `t` coordinate for Heisenberg charts).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGauge {
    pub n: usize,
    pub kappa: f64,
}

impl PhaseGauge {
    pub fn new(n: usize, kappa: f64) -> Self {
        Self { n, kappa }
    }

    fn phase(&self, x: &[f64]) -> C64 {
        C64::from_polar(1.0, self.kappa * x[2 * self.n])
    }
}

impl Gauge for PhaseGauge {
    fn n(&self) -> usize {
        self.n
    }

    fn name(&self) -> String {
        format!("phase(kappa={})", self.kappa)
    }

    fn value(&self, x: &[f64]) -> DMatrix<C64> {
        DMatrix::from_diagonal_element(self.n, self.n, self.phase(x))
    }

    fn derivative(&self, x: &[f64], k: usize) -> DMatrix<C64> {
        let d = if k == 2 * self.n {
            C64::new(0.0, self.kappa) * self.phase(x)
        } else {
            C64::new(0.0, 0.0)
        };
        DMatrix::from_diagonal_element(self.n, self.n, d)
    }
}

/// A constant unitary rotation of the frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantGauge {
    pub matrix: DMatrix<C64>,
}

impl Gauge for ConstantGauge {
    fn n(&self) -> usize {
        self.matrix.nrows()
    }

    fn name(&self) -> String {
        "constant".into()
    }

    fn value(&self, _x: &[f64]) -> DMatrix<C64> {
        self.matrix.clone()
    }

    fn derivative(&self, _x: &[f64], _k: usize) -> DMatrix<C64> {
        DMatrix::from_element(self.matrix.nrows(), self.matrix.ncols(), C64::new(0.0, 0.0))
    }
}

type MatrixFn = Box<dyn Fn(&[f64]) -> DMatrix<C64> + Send + Sync>;
type MatrixDerivFn = Box<dyn Fn(&[f64], usize) -> DMatrix<C64> + Send + Sync>;

/// Gauge given by user closures for `Λ` and `∂_k Λ`.
pub struct FnGauge {
    n: usize,
    value: MatrixFn,
    derivative: MatrixDerivFn,
}

impl FnGauge {
    pub fn new(
        n: usize,
        value: impl Fn(&[f64]) -> DMatrix<C64> + Send + Sync + 'static,
        derivative: impl Fn(&[f64], usize) -> DMatrix<C64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            n,
            value: Box::new(value),
            derivative: Box::new(derivative),
        }
    }
}

impl Gauge for FnGauge {
    fn n(&self) -> usize {
        self.n
    }

    fn name(&self) -> String {
        "custom".into()
    }

    fn value(&self, x: &[f64]) -> DMatrix<C64> {
        (self.value)(x)
    }

    fn derivative(&self, x: &[f64], k: usize) -> DMatrix<C64> {
        (self.derivative)(x, k)
    }
}

/// The same CR manifold and connection described in the rotated frame
/// `Z'_α = Σ_β Λ_α^β Z_β`.
///
/// Christoffel symbols are re-expressed for the new frame, so the projected
/// diffusion is unchanged while the frame dynamics become non-trivial.
pub struct GaugeRotated<M: CrModel, G: Gauge> {
    base: M,
    gauge: G,
}

impl<M: CrModel, G: Gauge> GaugeRotated<M, G> {
    /// Checks unitarity of `Λ` to `1e-12` at the origin and at the unit
    /// points `±e_k` that lie in the chart.
    pub fn new(base: M, gauge: G) -> Result<Self> {
        if gauge.n() != base.n() {
            return Err(Error::DimensionMismatch {
                expected: base.n(),
                got: gauge.n(),
            });
        }
        let d = base.dim();
        let mut probes = vec![vec![0.0; d]];
        for k in 0..d {
            for s in [-1.0, 1.0] {
                let mut p = vec![0.0; d];
                p[k] = s;
                probes.push(p);
            }
        }
        for p in probes.iter().filter(|p| base.in_chart(p)) {
            let lam = gauge.value(p);
            let defect = &lam.adjoint() * &lam - DMatrix::identity(base.n(), base.n());
            let residual = defect.iter().map(|c| c.norm()).fold(0.0, f64::max);
            if residual > 1e-12 {
                return Err(Error::NotUnitary { residual });
            }
        }
        Ok(Self { base, gauge })
    }

    pub fn base(&self) -> &M {
        &self.base
    }

    pub fn gauge(&self) -> &G {
        &self.gauge
    }

    /// Chart components of the rotated field `Z'_A` together with its
    /// coefficients `w^B` in the base frame (flat indexing).
    fn rotated_field(&self, x: &[f64], lam: &DMatrix<C64>, a: usize) -> (Vec<C64>, Vec<C64>) {
        let n = self.base.n();
        let d = self.base.dim();
        let mut w = vec![C64::new(0.0, 0.0); 2 * n + 1];
        match FrameIndex::from_flat(a, n) {
            FrameIndex::T => w[0] = C64::new(1.0, 0.0),
            FrameIndex::Z(alpha) => {
                for mu in 0..n {
                    w[1 + mu] = lam[(alpha, mu)];
                }
            }
            FrameIndex::Zbar(alpha) => {
                for mu in 0..n {
                    w[1 + n + mu] = lam[(alpha, mu)].conj();
                }
            }
        }
        let mut comps = vec![C64::new(0.0, 0.0); d];
        for (b, wb) in w.iter().enumerate() {
            if wb.norm_sqr() == 0.0 {
                continue;
            }
            let field = self.base.field(x, FrameIndex::from_flat(b, n));
            for k in 0..d {
                comps[k] += wb * field.comps[k];
            }
        }
        (comps, w)
    }
}

impl<M: CrModel, G: Gauge> CrModel for GaugeRotated<M, G> {
    fn n(&self) -> usize {
        self.base.n()
    }

    fn name(&self) -> String {
        format!("{} rotated by {}", self.base.name(), self.gauge.name())
    }

    fn frame_into(&self, x: &[f64], alpha: usize, out: &mut [C64]) {
        let n = self.base.n();
        let lam = self.gauge.value(x);
        out.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
        let mut buf = vec![C64::new(0.0, 0.0); out.len()];
        for beta in 0..n {
            let l = lam[(alpha, beta)];
            if l.norm_sqr() == 0.0 {
                continue;
            }
            self.base.frame_into(x, beta, &mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += l * b;
            }
        }
    }

    fn char_field_into(&self, x: &[f64], out: &mut [C64]) {
        self.base.char_field_into(x, out)
    }

    fn theta_into(&self, x: &[f64], out: &mut [C64]) {
        self.base.theta_into(x, out)
    }

    fn christoffel_into(&self, x: &[f64], out: &mut Christoffel) {
        let n = self.base.n();
        let d = self.base.dim();
        let lam = self.gauge.value(x);
        let dlam: Vec<DMatrix<C64>> = (0..d).map(|k| self.gauge.derivative(x, k)).collect();
        let base_gamma = self.base.christoffel(x);
        let flat = self.base.is_flat();
        for a in 0..(2 * n + 1) {
            let (comps, w) = self.rotated_field(x, &lam, a);
            // S[β][ε]: coefficient of Z_ε in ∇_{Z'_A} Z'_β
            let mut s = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
            for beta in 0..n {
                for eps in 0..n {
                    let mut v: C64 = (0..d).map(|k| comps[k] * dlam[k][(beta, eps)]).sum();
                    if !flat {
                        for delta in 0..n {
                            let g: C64 = w
                                .iter()
                                .enumerate()
                                .map(|(b, wb)| wb * base_gamma.get_flat(b, delta, eps))
                                .sum();
                            v += lam[(beta, delta)] * g;
                        }
                    }
                    s[(beta, eps)] = v;
                }
            }
            let idx = FrameIndex::from_flat(a, n);
            for beta in 0..n {
                for gamma in 0..n {
                    let v: C64 = (0..n)
                        .map(|eps| s[(beta, eps)] * lam[(gamma, eps)].conj())
                        .sum();
                    out.set(idx, beta, gamma, v);
                }
            }
        }
    }

    fn volume_density(&self, x: &[f64]) -> f64 {
        self.base.volume_density(x)
    }

    fn frame_jacobian(&self, x: &[f64], alpha: usize) -> Option<DMatrix<C64>> {
        let n = self.base.n();
        let d = self.base.dim();
        let lam = self.gauge.value(x);
        let mut jac = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
        for beta in 0..n {
            let base_jac = self.base.frame_jacobian(x, beta)?;
            let field = self.base.field(x, FrameIndex::Z(beta));
            for j in 0..d {
                let dl = self.gauge.derivative(x, j)[(alpha, beta)];
                for k in 0..d {
                    jac[(k, j)] += dl * field.comps[k] + lam[(alpha, beta)] * base_jac[(k, j)];
                }
            }
        }
        Some(jac)
    }

    fn chart_bound(&self) -> Option<&super::ChartBox> {
        self.base.chart_bound()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Heisenberg;

    fn probe_points() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 0.0, 0.0],
            vec![0.3, -0.2, 0.7],
            vec![-1.1, 0.4, -0.25],
        ]
    }

    #[test]
    fn identity_gauge_reproduces_base() {
        let base = Heisenberg::new(1).unwrap();
        let rot = GaugeRotated::new(
            Heisenberg::new(1).unwrap(),
            ConstantGauge {
                matrix: DMatrix::identity(1, 1),
            },
        )
        .unwrap();
        for x in probe_points() {
            assert_eq!(
                rot.field(&x, FrameIndex::Z(0)),
                base.field(&x, FrameIndex::Z(0))
            );
            assert!(rot.christoffel(&x).is_zero());
        }
    }

    #[test]
    fn constant_gauge_keeps_flat_connection() {
        let m = DMatrix::from_element(1, 1, C64::from_polar(1.0, 0.9));
        let rot =
            GaugeRotated::new(Heisenberg::new(1).unwrap(), ConstantGauge { matrix: m }).unwrap();
        for x in probe_points() {
            assert!(rot.christoffel(&x).is_zero());
        }
    }

    #[test]
    fn rejects_non_unitary_gauge() {
        let m = DMatrix::from_element(1, 1, C64::new(1.1, 0.0));
        let err = GaugeRotated::new(Heisenberg::new(1).unwrap(), ConstantGauge { matrix: m });
        assert!(matches!(err, Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn phase_gauge_symbols_match_closed_form() {
        // Z'_1 = e^{iκt} Z_1 gives Γ'_{A1}^1 = iκ (Z'_A t).
        let kappa = 0.8;
        let rot =
            GaugeRotated::new(Heisenberg::new(1).unwrap(), PhaseGauge::new(1, kappa)).unwrap();
        let x = [0.3, -0.2, 0.7];
        let (u, v, t) = (x[0], x[1], x[2]);
        let g = rot.christoffel(&x);
        let ik = C64::new(0.0, kappa);
        let ph = C64::from_polar(1.0, kappa * t);
        assert!((g.get(FrameIndex::T, 0, 0) - ik * 2.0).norm() < 1e-14);
        assert!((g.get(FrameIndex::Z(0), 0, 0) - ik * ph * C64::new(v, u)).norm() < 1e-14);
        assert!(
            (g.get(FrameIndex::Zbar(0), 0, 0) - ik * ph.conj() * C64::new(v, -u)).norm() < 1e-14
        );
        assert!(g.antisymmetry_residual() < 1e-14);
    }

    /// Independent route: expand `∇_{Z'_A} Z'_β` using finite differences of
    /// `Λ` along `Z'_A` and project onto the primed frame.
    #[test]
    fn phase_gauge_symbols_match_finite_difference_covariant_derivative() {
        let kappa = 1.3;
        let gauge = PhaseGauge::new(1, kappa);
        let rot = GaugeRotated::new(Heisenberg::new(1).unwrap(), gauge.clone()).unwrap();
        let h = 1e-6;
        for x in probe_points() {
            let g = rot.christoffel(&x);
            for a in [FrameIndex::T, FrameIndex::Z(0), FrameIndex::Zbar(0)] {
                let dir = rot.field(&x, a);
                let shift = |s: f64| -> Vec<f64> {
                    x.iter()
                        .zip(&dir.comps)
                        .map(|(xi, c)| xi + s * c.re)
                        .collect()
                };
                let shift_im = |s: f64| -> Vec<f64> {
                    x.iter()
                        .zip(&dir.comps)
                        .map(|(xi, c)| xi + s * c.im)
                        .collect()
                };
                // complex direction: derivative along Re part plus i times along Im part
                let d_re =
                    (gauge.value(&shift(h))[(0, 0)] - gauge.value(&shift(-h))[(0, 0)]) / (2.0 * h);
                let d_im = (gauge.value(&shift_im(h))[(0, 0)] - gauge.value(&shift_im(-h))[(0, 0)])
                    / (2.0 * h);
                let dl = d_re + C64::new(0.0, 1.0) * d_im;
                // ∇ Z'_1 = (Z'_A Λ) Z_1 = (Z'_A Λ) conj(Λ) Z'_1
                let expected = dl * gauge.value(&x)[(0, 0)].conj();
                assert!((g.get(a, 0, 0) - expected).norm() < 1e-8, "{a:?}");
            }
        }
    }

    #[test]
    fn rotated_jacobian_matches_finite_differences() {
        let rot = GaugeRotated::new(Heisenberg::new(1).unwrap(), PhaseGauge::new(1, 0.7)).unwrap();
        let x = [0.4, 0.1, -0.3];
        let analytic = rot.frame_jacobian(&x, 0).unwrap();
        let fd =
            crate::models::fd_jacobian(&rot, &x, 1e-5, |m, p| m.field(p, FrameIndex::Z(0)).comps)
                .unwrap();
        assert!((analytic - fd).iter().map(|c| c.norm()).fold(0.0, f64::max) < 1e-8);
    }
}
