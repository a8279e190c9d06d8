//! Chart-local strictly pseudoconvex CR manifolds.
//!
//! A model supplies, on a single chart with real coordinates `x ∈ R^{2n+1}`,
//! the unitary frame `Z_1..Z_n` of `T_{1,0}`, the characteristic field `T`,
//! the contact form `θ`, the Tanaka-Webster Christoffel symbols in that frame
//! and the density of `ψ = θ ∧ (dθ)^n`. Tangent vectors are complex
//! coefficient vectors over the real coordinate basis.

mod gauge;
mod heisenberg;
mod validate;

pub use gauge::{ConstantGauge, FnGauge, Gauge, GaugeRotated, PhaseGauge};
pub use heisenberg::Heisenberg;
pub use validate::{validate_model, CheckResult, LeviGram, ValidationReport};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Real chart coordinates. For the Heisenberg group the ordering is
/// `(u¹, v¹, …, uⁿ, vⁿ, t)` with `zᵅ = uᵅ + i vᵅ`.
pub type ChartPoint = Vec<f64>;

/// Complex tangent vector: coefficients over `∂/∂x¹ … ∂/∂x^{2n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CTangent {
    pub comps: Vec<C64>,
}

impl CTangent {
    pub fn zeros(dim: usize) -> Self {
        Self {
            comps: vec![C64::new(0.0, 0.0); dim],
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            comps: self.comps.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn re(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c.im).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Pairing with a covector given by chart components.
    pub fn pair(&self, covector: &[C64]) -> C64 {
        self.comps.iter().zip(covector).map(|(v, w)| v * w).sum()
    }
}

/// Index into the frame `{T, Z_α, Z_ᾱ}` of `ℂTM`. Holomorphic indices are
/// zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameIndex {
    T,
    Z(usize),
    Zbar(usize),
}

impl FrameIndex {
    /// Position in the flattened ordering `0 = T, 1..=n = Z, n+1..=2n = Z̄`.
    pub fn flat(self, n: usize) -> usize {
        match self {
            FrameIndex::T => 0,
            FrameIndex::Z(a) => 1 + a,
            FrameIndex::Zbar(a) => 1 + n + a,
        }
    }

    pub fn from_flat(i: usize, n: usize) -> Self {
        match i {
            0 => FrameIndex::T,
            i if i <= n => FrameIndex::Z(i - 1),
            i => FrameIndex::Zbar(i - 1 - n),
        }
    }

    pub fn conj(self) -> Self {
        match self {
            FrameIndex::T => FrameIndex::T,
            FrameIndex::Z(a) => FrameIndex::Zbar(a),
            FrameIndex::Zbar(a) => FrameIndex::Z(a),
        }
    }

    /// The `2n` indices of `T_{1,0} ⊕ T_{0,1}` in lexicographic order
    /// `Z_1..Z_n, Z̄_1..Z̄_n`.
    pub fn horizontal(n: usize) -> Vec<FrameIndex> {
        (0..n)
            .map(FrameIndex::Z)
            .chain((0..n).map(FrameIndex::Zbar))
            .collect()
    }
}

impl std::fmt::Display for FrameIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FrameIndex::T => write!(f, "0"),
            FrameIndex::Z(a) => write!(f, "{}", a + 1),
            FrameIndex::Zbar(a) => write!(f, "{}b", a + 1),
        }
    }
}

/// Christoffel symbols `Γ_{Aβ}^γ` at a point, for `A ∈ {0, 1..n, 1̄..n̄}` and
/// holomorphic `β, γ`.
///
/// Symbols with a barred lower second index are not stored: the connection
/// is real, so `Γ_{Aβ̄}^{γ̄} = conj(Γ_{Āβ}^γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<C64>,
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); (2 * n + 1) * n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, a: usize, beta: usize, gamma: usize) -> usize {
        (a * self.n + beta) * self.n + gamma
    }

    /// `Γ_{Aβ}^γ` with `A` given in flat ordering.
    #[inline]
    pub fn get_flat(&self, a: usize, beta: usize, gamma: usize) -> C64 {
        self.data[self.offset(a, beta, gamma)]
    }

    pub fn get(&self, a: FrameIndex, beta: usize, gamma: usize) -> C64 {
        self.get_flat(a.flat(self.n), beta, gamma)
    }

    pub fn set(&mut self, a: FrameIndex, beta: usize, gamma: usize, value: C64) {
        let off = self.offset(a.flat(self.n), beta, gamma);
        self.data[off] = value;
    }

    /// `Γ_{Aβ̄}^{γ̄}`, recovered from reality of the connection.
    pub fn get_barred(&self, a: FrameIndex, beta: usize, gamma: usize) -> C64 {
        self.get(a.conj(), beta, gamma).conj()
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Largest `|Γ_{Aβ}^γ + Γ_{Aγ̄}^{β̄}|` over all indices; zero for a
    /// metric connection.
    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for a in 0..(2 * n + 1) {
            let idx = FrameIndex::from_flat(a, n);
            for beta in 0..n {
                for gamma in 0..n {
                    let r = self.get(idx, beta, gamma) + self.get_barred(idx, gamma, beta);
                    worst = worst.max(r.norm());
                }
            }
        }
        worst
    }
}

/// Axis-aligned box of chart validity.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ChartBox {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }
}

/// A chart-local strictly pseudoconvex CR manifold.
///
/// Evaluators are pure functions of the point; implementations hold no
/// mutable state and are shared freely across worker threads. The `*_into`
/// methods write into caller buffers so the SDE stepper never allocates.
pub trait CrModel: Send + Sync {
    /// CR dimension `n`; the manifold has real dimension `2n + 1`.
    fn n(&self) -> usize;

    fn dim(&self) -> usize {
        2 * self.n() + 1
    }

    fn name(&self) -> String;

    /// Coefficients of `Z_α` (zero-based `alpha`) at `x`.
    fn frame_into(&self, x: &[f64], alpha: usize, out: &mut [C64]);

    /// Coefficients of the characteristic field `T` (real).
    fn char_field_into(&self, x: &[f64], out: &mut [C64]);

    /// Chart components of `θ`.
    fn theta_into(&self, x: &[f64], out: &mut [C64]);

    fn christoffel_into(&self, x: &[f64], out: &mut Christoffel);

    /// `true` when every Christoffel symbol vanishes identically.
    fn is_flat(&self) -> bool {
        false
    }

    /// Density of `ψ = θ ∧ (dθ)^n` with respect to Lebesgue measure on the chart.
    fn volume_density(&self, x: &[f64]) -> f64;

    /// `J[(k, j)] = ∂_j (Z_α)^k`, when known in closed form.
    fn frame_jacobian(&self, _x: &[f64], _alpha: usize) -> Option<DMatrix<C64>> {
        None
    }

    fn chart_bound(&self) -> Option<&ChartBox> {
        None
    }

    fn in_chart(&self, x: &[f64]) -> bool {
        self.chart_bound().is_none_or(|b| b.contains(x))
    }

    /// Value of the frame field `Z_A` (including `T` and conjugates) at `x`.
    fn field(&self, x: &[f64], idx: FrameIndex) -> CTangent {
        let mut v = CTangent::zeros(self.dim());
        match idx {
            FrameIndex::T => self.char_field_into(x, &mut v.comps),
            FrameIndex::Z(a) => self.frame_into(x, a, &mut v.comps),
            FrameIndex::Zbar(a) => {
                self.frame_into(x, a, &mut v.comps);
                v.comps.iter_mut().for_each(|c| *c = c.conj());
            }
        }
        v
    }

    fn theta(&self, x: &[f64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.theta_into(x, &mut out);
        out
    }

    fn christoffel(&self, x: &[f64]) -> Christoffel {
        let mut g = Christoffel::zeros(self.n());
        self.christoffel_into(x, &mut g);
        g
    }

    /// Jacobian of `Z_A`; closed form when available, else central differences.
    fn field_jacobian(&self, x: &[f64], idx: FrameIndex, h: f64) -> crate::Result<DMatrix<C64>> {
        let analytic = match idx {
            FrameIndex::Z(a) => self.frame_jacobian(x, a),
            FrameIndex::Zbar(a) => self.frame_jacobian(x, a).map(|j| j.map(|c| c.conj())),
            FrameIndex::T => None,
        };
        match analytic {
            Some(j) => Ok(j),
            None => fd_jacobian(self, x, h, |m, p| m.field(p, idx).comps),
        }
    }
}

/// Central-difference Jacobian `J[(k, j)] = ∂_j f^k` of a vector-valued map.
pub(crate) fn fd_jacobian<M: CrModel + ?Sized>(
    model: &M,
    x: &[f64],
    h: f64,
    f: impl Fn(&M, &[f64]) -> Vec<C64>,
) -> crate::Result<DMatrix<C64>> {
    let dim = x.len();
    let mut jac = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for j in 0..dim {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        if !model.in_chart(&xp) || !model.in_chart(&xm) {
            return Err(crate::Error::ChartExit { point: x.to_vec() });
        }
        let fp = f(model, &xp);
        let fm = f(model, &xm);
        for k in 0..dim {
            jac[(k, j)] = (fp[k] - fm[k]) / (2.0 * h);
        }
        xp[j] = x[j];
        xm[j] = x[j];
    }
    Ok(jac)
}

/// Shared handle used by the ensemble and CLI layers.
pub type SharedModel = std::sync::Arc<dyn CrModel>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_index_flat_roundtrip() {
        for n in 1..4 {
            for i in 0..(2 * n + 1) {
                assert_eq!(FrameIndex::from_flat(i, n).flat(n), i);
            }
        }
        assert_eq!(FrameIndex::Z(0).conj(), FrameIndex::Zbar(0));
        assert_eq!(FrameIndex::horizontal(2).len(), 4);
    }

    #[test]
    fn antisymmetry_violation_is_reported() {
        // Γ_{11}^1 = 1 with every other symbol zero breaks metric compatibility.
        let mut g = Christoffel::zeros(1);
        g.set(FrameIndex::Z(0), 0, 0, C64::new(1.0, 0.0));
        assert!((g.antisymmetry_residual() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn skew_hermitian_t_block_passes() {
        let mut g = Christoffel::zeros(2);
        g.set(FrameIndex::T, 0, 1, C64::new(0.3, 0.7));
        g.set(FrameIndex::T, 1, 0, C64::new(-0.3, 0.7));
        g.set(FrameIndex::T, 0, 0, C64::new(0.0, 2.0));
        assert!(g.antisymmetry_residual() < 1e-15);
    }
}
