use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{fd_jacobian, CrModel, FrameIndex};

/// Step for the central differences that build `dθ`.
pub const DTHETA_STEP: f64 = 1e-5;

pub const THETA_TOL: f64 = 1e-10;
pub const CHRISTOFFEL_TOL: f64 = 1e-12;
/// `dθ` comes from finite differences, so `T ⌟ dθ` is only zero to roughly
/// `ε / h`.
pub const DTHETA_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &'static str, max_residual: f64, tolerance: f64) -> Self {
        Self {
            name,
            max_residual,
            tolerance,
            passed: max_residual <= tolerance,
        }
    }
}

/// Extremes of the Levi Gram matrix `L_θ(Z_α, Z_β̄) = −i dθ(Z_α, Z_β̄)` over
/// the probed points. The overall scale depends on the wedge convention and
/// is reported rather than pinned.
#[derive(Debug, Clone, PartialEq)]
pub struct LeviGram {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub worst_condition: f64,
    pub hermitian_residual: f64,
    /// Mean diagonal entry at the first probe.
    pub scale: f64,
    pub positive_definite: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub model: String,
    pub n_points: usize,
    pub checks: Vec<CheckResult>,
    pub levi: LeviGram,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.levi.positive_definite
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut s = format!("model: {}  points: {}\n", self.model, self.n_points);
        s.push_str(&format!(
            "{:<26} {:>14} {:>10} {:>6}\n",
            "check", "max_residual", "tol", "pass"
        ));
        for c in &self.checks {
            s.push_str(&format!(
                "{:<26} {:>14.3e} {:>10.0e} {:>6}\n",
                c.name, c.max_residual, c.tolerance, c.passed
            ));
        }
        s.push_str(&format!(
            "levi gram: scale {:.6} eigen [{:.6}, {:.6}] cond {:.3} hermitian_residual {:.2e} positive_definite {}\n",
            self.levi.scale,
            self.levi.min_eigenvalue,
            self.levi.max_eigenvalue,
            self.levi.worst_condition,
            self.levi.hermitian_residual,
            self.levi.positive_definite
        ));
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,max_residual,tolerance,passed\n");
        for c in &self.checks {
            s.push_str(&format!(
                "{},{:e},{:e},{}\n",
                c.name, c.max_residual, c.tolerance, c.passed
            ));
        }
        s.push_str(&format!(
            "levi_min_eigenvalue,{:e},0,{}\n",
            self.levi.min_eigenvalue, self.levi.positive_definite
        ));
        s.push_str(&format!(
            "levi_condition,{:e},,\n",
            self.levi.worst_condition
        ));
        s.push_str(&format!("levi_scale,{:e},,\n", self.levi.scale));
        s
    }
}

/// Antisymmetric matrix `D[(j, k)] = ∂_j θ_k − ∂_k θ_j`, so that
/// `dθ(X, Y) = ½ Xʲ Yᵏ D[(j, k)]`.
pub(crate) fn dtheta_matrix<M: CrModel + ?Sized>(
    model: &M,
    x: &[f64],
) -> crate::Result<DMatrix<C64>> {
    // jac[(k, j)] = ∂_j θ_k
    let jac = fd_jacobian(model, x, DTHETA_STEP, |m, p| m.theta(p))?;
    Ok(jac.transpose() - jac)
}

fn two_form(d: &DMatrix<C64>, a: &[C64], b: &[C64]) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..a.len() {
        for k in 0..b.len() {
            acc += a[j] * b[k] * d[(j, k)];
        }
    }
    acc * 0.5
}

/// Residuals of the structural identities of a CR model at the given points.
pub fn validate_model<M: CrModel + ?Sized>(model: &M, points: &[Vec<f64>]) -> ValidationReport {
    let n = model.n();
    let mut theta_frame = 0.0f64;
    let mut theta_t = 0.0f64;
    let mut t_real = 0.0f64;
    let mut antisym = 0.0f64;
    let mut dtheta_t = 0.0f64;
    let mut chart_ok = true;
    let mut levi = LeviGram {
        min_eigenvalue: f64::INFINITY,
        max_eigenvalue: f64::NEG_INFINITY,
        worst_condition: 1.0,
        hermitian_residual: 0.0,
        scale: f64::NAN,
        positive_definite: true,
    };

    for x in points {
        let theta = model.theta(x);
        let t = model.field(x, FrameIndex::T);
        theta_t = theta_t.max((t.pair(&theta) - 1.0).norm());
        t_real = t_real.max(t.comps.iter().map(|c| c.im.abs()).fold(0.0, f64::max));
        let frame: Vec<_> = (0..n).map(|a| model.field(x, FrameIndex::Z(a))).collect();
        for z in &frame {
            theta_frame = theta_frame.max(z.pair(&theta).norm());
        }
        antisym = antisym.max(model.christoffel(x).antisymmetry_residual());

        let d = match dtheta_matrix(model, x) {
            Ok(d) => d,
            Err(_) => {
                chart_ok = false;
                continue;
            }
        };
        for e in 0..model.dim() {
            let mut basis = vec![C64::new(0.0, 0.0); model.dim()];
            basis[e] = C64::new(1.0, 0.0);
            dtheta_t = dtheta_t.max(two_form(&d, &t.comps, &basis).norm());
        }

        let mut gram = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for a in 0..n {
            for b in 0..n {
                let zb = frame[b].conj();
                gram[(a, b)] = C64::new(0.0, -1.0) * two_form(&d, &frame[a].comps, &zb.comps);
            }
        }
        let herm = (&gram - gram.adjoint())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        levi.hermitian_residual = levi.hermitian_residual.max(herm);
        if levi.scale.is_nan() {
            levi.scale = (0..n).map(|a| gram[(a, a)].re).sum::<f64>() / n as f64;
        }
        let sym = (&gram + gram.adjoint()) * C64::new(0.5, 0.0);
        let eig = sym.symmetric_eigenvalues();
        let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        levi.min_eigenvalue = levi.min_eigenvalue.min(lo);
        levi.max_eigenvalue = levi.max_eigenvalue.max(hi);
        if lo <= 0.0 {
            levi.positive_definite = false;
        } else {
            levi.worst_condition = levi.worst_condition.max(hi / lo);
        }
    }
    if !chart_ok || points.is_empty() {
        levi.positive_definite = false;
    }

    ValidationReport {
        model: model.name(),
        n_points: points.len(),
        checks: vec![
            CheckResult::new("theta(Z)=0", theta_frame, THETA_TOL),
            CheckResult::new("theta(T)=1", theta_t, THETA_TOL),
            CheckResult::new("T real", t_real, THETA_TOL),
            CheckResult::new("christoffel antisymmetry", antisym, CHRISTOFFEL_TOL),
            CheckResult::new("T _| dtheta = 0", dtheta_t, DTHETA_TOL),
        ],
        levi,
    }
}
