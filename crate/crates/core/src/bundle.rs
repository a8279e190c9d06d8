//! The unitary frame bundle `U(T_{1,0})` in local coordinates.
//!
//! A point is a base point `x` together with a unitary matrix `e` whose
//! column `α` holds the coefficients of `r(e_α)` in the model frame:
//! `r(e_α) = Σ_β e[(β, α)] Z_β`. Canonical fields, parallel transport and
//! the polar projection back onto `U(n)` live here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::models::{Christoffel, CrModel, FrameIndex};
use crate::{Error, Result};

/// Default unitarity tolerance for frame matrices.
pub const UNITARITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameState {
    pub x: Vec<f64>,
    pub e: DMatrix<C64>,
}

impl FrameState {
    pub fn new(x: Vec<f64>, e: DMatrix<C64>) -> Result<Self> {
        let n = e.nrows();
        if e.ncols() != n || x.len() != 2 * n + 1 {
            return Err(Error::DimensionMismatch {
                expected: 2 * n + 1,
                got: x.len(),
            });
        }
        Ok(Self { x, e })
    }

    /// State over `x` carrying the model frame itself (`e = I`).
    pub fn identity_at(x: Vec<f64>) -> Self {
        let n = (x.len() - 1) / 2;
        Self {
            x,
            e: DMatrix::identity(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.e.nrows()
    }

    /// `‖e* e − I‖_∞` (largest entry modulus).
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.e)
    }

    /// Right action `R_Λ r = r Λ`.
    pub fn rotated(&self, lam: &DMatrix<C64>) -> Self {
        Self {
            x: self.x.clone(),
            e: &self.e * lam,
        }
    }

    /// Column names matching [`FrameState::csv_fields`].
    pub fn csv_header(n: usize) -> Vec<String> {
        let mut cols: Vec<String> = (0..2 * n + 1).map(|k| format!("x{k}")).collect();
        for row in 0..n {
            for col in 0..n {
                cols.push(format!("e{row}{col}_re"));
                cols.push(format!("e{row}{col}_im"));
            }
        }
        cols
    }

    /// Flattened `x` followed by interleaved real/imaginary parts of `e`
    /// in row-major order.
    pub fn csv_fields(&self) -> Vec<String> {
        let n = self.n();
        let mut out: Vec<String> = self.x.iter().map(|v| format!("{v:e}")).collect();
        for row in 0..n {
            for col in 0..n {
                let c = self.e[(row, col)];
                out.push(format!("{:e}", c.re));
                out.push(format!("{:e}", c.im));
            }
        }
        out
    }
}

pub fn unitarity_defect(e: &DMatrix<C64>) -> f64 {
    let n = e.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += e[(k, i)].conj() * e[(k, j)];
            }
            if i == j {
                acc -= 1.0;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

/// Haar-distributed unitary matrix: QR of a complex Gaussian matrix with
/// the phases of `R`'s diagonal moved into `Q`.
pub fn random_unitary<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    use rand_distr::StandardNormal;
    let g = DMatrix::from_fn(n, n, |_, _| {
        C64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Tangent vector to the bundle: base velocity and frame velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleVelocity {
    pub dx: Vec<f64>,
    pub de: DMatrix<C64>,
}

/// Scratch buffers for evaluating canonical fields without allocating.
pub(crate) struct VelocityWork {
    n: usize,
    dim: usize,
    frame: Vec<C64>,
    gamma: Christoffel,
    c: Vec<C64>,
    g: Vec<C64>,
}

impl VelocityWork {
    pub(crate) fn new(n: usize) -> Self {
        let dim = 2 * n + 1;
        Self {
            n,
            dim,
            frame: vec![C64::new(0.0, 0.0); n * dim],
            gamma: Christoffel::zeros(n),
            c: vec![C64::new(0.0, 0.0); n],
            g: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    /// Real bundle velocity of `Σ_α (ξᵅ L_α + ξ̄ᵅ L_ᾱ)` at `(x, e)`, written
    /// into `dx` and the column-major slice `de`.
    #[inline]
    pub(crate) fn velocity_into<M: CrModel + ?Sized>(
        &mut self,
        model: &M,
        x: &[f64],
        e: &[C64],
        xi: &[C64],
        dx: &mut [f64],
        de: &mut [C64],
    ) {
        let (n, dim) = (self.n, self.dim);
        for beta in 0..n {
            model.frame_into(x, beta, &mut self.frame[beta * dim..(beta + 1) * dim]);
        }
        // c = e ξ: frame coefficients of the horizontal direction r(ξ)
        self.c.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
        for (col, &x_a) in e.chunks_exact(n).zip(xi) {
            for (c, &e_ba) in self.c.iter_mut().zip(col) {
                *c += e_ba * x_a;
            }
        }
        dx.iter_mut().for_each(|d| *d = 0.0);
        for (fr, c) in self.frame.chunks_exact(dim).zip(&self.c) {
            for (d, z) in dx.iter_mut().zip(fr) {
                *d += 2.0 * (c.re * z.re - c.im * z.im);
            }
        }
        if model.is_flat() {
            de.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            return;
        }
        model.christoffel_into(x, &mut self.gamma);
        // G[γ][δ] = Σ_β (c_β Γ_{βδ}^γ + c̄_β Γ_{β̄δ}^γ)
        for gamma in 0..n {
            for delta in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for beta in 0..n {
                    acc += self.c[beta] * self.gamma.get_flat(1 + beta, delta, gamma)
                        + self.c[beta].conj() * self.gamma.get_flat(1 + n + beta, delta, gamma);
                }
                self.g[gamma * n + delta] = acc;
            }
        }
        // de = −G e
        for col in 0..n {
            for gamma in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for delta in 0..n {
                    acc += self.g[gamma * n + delta] * e[delta + col * n];
                }
                de[gamma + col * n] = -acc;
            }
        }
    }
}

/// Bundle velocity of the canonical field combination
/// `Σ_α (ξᵅ L_α + ξ̄ᵅ L_ᾱ)` at `s`.
///
/// The base part is `dx = 2 Re Σ (e ξ)_β Z_β(x)`; the frame part is the
/// horizontal (parallel) motion `de = −G e` with `G` built from the
/// Christoffel symbols along `dx`.
pub fn horizontal_velocity<M: CrModel + ?Sized>(
    model: &M,
    s: &FrameState,
    xi: &[C64],
) -> Result<BundleVelocity> {
    let n = model.n();
    if s.n() != n || xi.len() != n || s.x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: xi.len(),
        });
    }
    if !model.in_chart(&s.x) {
        return Err(Error::ChartExit { point: s.x.clone() });
    }
    let mut work = VelocityWork::new(n);
    let mut dx = vec![0.0; model.dim()];
    let mut de = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    work.velocity_into(model, &s.x, s.e.as_slice(), xi, &mut dx, de.as_mut_slice());
    Ok(BundleVelocity { dx, de })
}

/// Nearest unitary matrix in Frobenius norm (the unitary polar factor).
pub fn reunitarize(e: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = e.nrows();
    if n == 1 {
        let z = e[(0, 0)];
        let r = z.norm();
        if r == 0.0 || !r.is_finite() {
            return Err(Error::Singular);
        }
        return Ok(DMatrix::from_element(1, 1, z / r));
    }
    let svd = e.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > f64::EPSILON * smax) {
        return Err(Error::Singular);
    }
    let (u, v_t) = (
        svd.u.ok_or(Error::Singular)?,
        svd.v_t.ok_or(Error::Singular)?,
    );
    Ok(u * v_t)
}

/// In-place polar projection used by the stepper.
pub(crate) fn reunitarize_in_place(e: &mut DMatrix<C64>) -> Result<()> {
    if e.nrows() == 1 {
        let z = e[(0, 0)];
        let r = z.norm_sqr().sqrt();
        if r == 0.0 || !r.is_finite() {
            return Err(Error::Singular);
        }
        e[(0, 0)] = z / r;
        return Ok(());
    }
    *e = reunitarize(e)?;
    Ok(())
}

/// Coefficients `w^A` (flat `{T, Z, Z̄}` ordering) of a real tangent vector:
/// `v = w⁰ T + Σ_β (w^β Z_β + w^β̄ Z_β̄)`, with `w^β̄ = conj(w^β)`.
pub fn frame_components<M: CrModel + ?Sized>(model: &M, x: &[f64], v: &[f64]) -> Result<Vec<C64>> {
    let n = model.n();
    let d = model.dim();
    let mut a = DMatrix::<f64>::zeros(d, d);
    let t = model.field(x, FrameIndex::T);
    for k in 0..d {
        a[(k, 0)] = t.comps[k].re;
    }
    for beta in 0..n {
        let z = model.field(x, FrameIndex::Z(beta));
        for k in 0..d {
            a[(k, 1 + 2 * beta)] = 2.0 * z.comps[k].re;
            a[(k, 2 + 2 * beta)] = -2.0 * z.comps[k].im;
        }
    }
    let sol = a
        .lu()
        .solve(&DVector::from_column_slice(v))
        .ok_or(Error::Singular)?;
    let mut w = vec![C64::new(0.0, 0.0); d];
    w[0] = C64::new(sol[0], 0.0);
    for beta in 0..n {
        let c = C64::new(sol[1 + 2 * beta], sol[2 + 2 * beta]);
        w[1 + beta] = c;
        w[1 + n + beta] = c.conj();
    }
    Ok(w)
}

/// A smooth curve in the chart, parametrised on an interval.
pub trait Curve {
    fn position(&self, s: f64) -> Vec<f64>;
    fn velocity(&self, s: f64) -> Vec<f64>;
}

/// Curve given by position and velocity closures.
pub struct FnCurve<P, V> {
    pub position: P,
    pub velocity: V,
}

impl<P, V> Curve for FnCurve<P, V>
where
    P: Fn(f64) -> Vec<f64>,
    V: Fn(f64) -> Vec<f64>,
{
    fn position(&self, s: f64) -> Vec<f64> {
        (self.position)(s)
    }

    fn velocity(&self, s: f64) -> Vec<f64> {
        (self.velocity)(s)
    }
}

/// Piecewise-linear curve through sampled points; the velocity on each
/// segment is the finite-difference slope.
#[derive(Debug, Clone)]
pub struct Polyline {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl Polyline {
    fn segment(&self, s: f64) -> usize {
        let last = self.times.len() - 2;
        match self.times.binary_search_by(|t| t.total_cmp(&s)) {
            Ok(i) => i.min(last),
            Err(i) => i.saturating_sub(1).min(last),
        }
    }
}

impl Curve for Polyline {
    fn position(&self, s: f64) -> Vec<f64> {
        let i = self.segment(s);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = (s - t0) / (t1 - t0);
        self.points[i]
            .iter()
            .zip(&self.points[i + 1])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }

    fn velocity(&self, s: f64) -> Vec<f64> {
        let i = self.segment(s);
        let dt = self.times[i + 1] - self.times[i];
        self.points[i]
            .iter()
            .zip(&self.points[i + 1])
            .map(|(a, b)| (b - a) / dt)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Transport {
    /// `Λ_p` at the end of the curve.
    pub lambda: DMatrix<C64>,
    /// Frame coefficients of the transported vector, `Λ_p v₀`.
    pub transported: Vec<C64>,
    pub unitarity_defect: f64,
}

/// Parallel transport of frame coefficients `v0` along `curve` on
/// `[s0, s1]`, integrating `dΛ/ds = −G(s) Λ`, `Λ(s0) = I`, with classical
/// RK4 on a fixed grid of `steps` steps. Here
/// `G^γ_δ = Σ_A g_θ(ṗ, Z_Ā) Γ_{Aδ}^γ`.
pub fn parallel_transport<M: CrModel + ?Sized>(
    model: &M,
    curve: &dyn Curve,
    s0: f64,
    s1: f64,
    steps: usize,
    v0: &[C64],
) -> Result<Transport> {
    let n = model.n();
    if v0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v0.len(),
        });
    }
    if steps == 0 {
        return Err(Error::InvalidArgument(
            "parallel transport needs steps >= 1".into(),
        ));
    }
    let generator = |s: f64| -> Result<DMatrix<C64>> {
        let p = curve.position(s);
        if !model.in_chart(&p) {
            return Err(Error::ChartExit { point: p });
        }
        let mut g = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        if model.is_flat() {
            return Ok(g);
        }
        let w = frame_components(model, &p, &curve.velocity(s))?;
        let gamma = model.christoffel(&p);
        for gi in 0..n {
            for di in 0..n {
                g[(gi, di)] = (0..2 * n + 1)
                    .map(|a| w[a] * gamma.get_flat(a, di, gi))
                    .sum();
            }
        }
        Ok(g)
    };
    let h = (s1 - s0) / steps as f64;
    let mut lam = DMatrix::<C64>::identity(n, n);
    for k in 0..steps {
        let s = s0 + k as f64 * h;
        let g0 = generator(s)?;
        let gm = generator(s + 0.5 * h)?;
        let g1 = generator(s + h)?;
        let f = |g: &DMatrix<C64>, l: &DMatrix<C64>| -(g * l);
        let hc = C64::new(h, 0.0);
        let k1 = f(&g0, &lam);
        let k2 = f(&gm, &(&lam + &k1 * (hc * 0.5)));
        let k3 = f(&gm, &(&lam + &k2 * (hc * 0.5)));
        let k4 = f(&g1, &(&lam + &k3 * hc));
        lam += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (hc / 6.0);
    }
    let defect = unitarity_defect(&lam);
    if defect > UNITARITY_TOL {
        return Err(Error::TransportDrift { defect });
    }
    let transported = (&lam * DVector::from_column_slice(v0))
        .iter()
        .cloned()
        .collect();
    Ok(Transport {
        lambda: lam,
        transported,
        unitarity_defect: defect,
    })
}
