use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{Christoffel, CrModel};
use crate::{Error, Result};

/// The Heisenberg group `ℍₙ = ℂⁿ × ℝ` in its global chart.
///
/// Coordinates are `(u¹, v¹, …, uⁿ, vⁿ, t)`. The frame is
/// `Z_α = ∂/∂zᵅ + i z̄ᵅ ∂/∂t`, the contact form is
/// `θ = ½(dt − i Σ (z̄ᵅ dzᵅ − zᵅ dz̄ᵅ)) = ½ dt + Σ (uᵅ dvᵅ − vᵅ duᵅ)`
/// and `T = 2 ∂/∂t`. The Tanaka-Webster connection is trivial in this frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Heisenberg {
    n: usize,
    volume: f64,
}

impl Heisenberg {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("Heisenberg group needs n >= 1".into()));
        }
        // θ ∧ (dθ)ⁿ = 2^{n-1} n! du¹∧dv¹∧…∧dt
        let factorial: f64 = (1..=n).map(|k| k as f64).product();
        let volume = 2f64.powi(n as i32 - 1) * factorial;
        Ok(Self { n, volume })
    }

    /// Index of the `t` coordinate.
    pub fn t_index(&self) -> usize {
        2 * self.n
    }
}

impl CrModel for Heisenberg {
    fn n(&self) -> usize {
        self.n
    }

    fn name(&self) -> String {
        format!("heisenberg(n={})", self.n)
    }

    #[inline]
    fn frame_into(&self, x: &[f64], alpha: usize, out: &mut [C64]) {
        for c in out.iter_mut() {
            *c = C64::new(0.0, 0.0);
        }
        let (u, v) = (x[2 * alpha], x[2 * alpha + 1]);
        // ∂/∂z = (∂/∂u − i ∂/∂v)/2 and i z̄ = v + i u
        out[2 * alpha] = C64::new(0.5, 0.0);
        out[2 * alpha + 1] = C64::new(0.0, -0.5);
        out[2 * self.n] = C64::new(v, u);
    }

    fn char_field_into(&self, _x: &[f64], out: &mut [C64]) {
        out.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
        out[2 * self.n] = C64::new(2.0, 0.0);
    }

    fn theta_into(&self, x: &[f64], out: &mut [C64]) {
        for a in 0..self.n {
            out[2 * a] = C64::new(-x[2 * a + 1], 0.0);
            out[2 * a + 1] = C64::new(x[2 * a], 0.0);
        }
        out[2 * self.n] = C64::new(0.5, 0.0);
    }

    fn christoffel_into(&self, _x: &[f64], out: &mut Christoffel) {
        out.fill_zero();
    }

    fn is_flat(&self) -> bool {
        true
    }

    fn volume_density(&self, _x: &[f64]) -> f64 {
        self.volume
    }

    fn frame_jacobian(&self, _x: &[f64], alpha: usize) -> Option<DMatrix<C64>> {
        let d = self.dim();
        let mut j = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
        j[(2 * self.n, 2 * alpha)] = C64::new(0.0, 1.0);
        j[(2 * self.n, 2 * alpha + 1)] = C64::new(1.0, 0.0);
        Some(j)
    }
}
