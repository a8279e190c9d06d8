//! Stratonovich line integrals `∫_{X[0,t]} Ξ` along simulated paths.
//!
//! Along the bundle path the integral is `Re Σ_α ∫ (gᵅ ∘ dBᵅ + hᵅ ∘ dB̄ᵅ)`
//! with `gᵅ = Ξ(π_* L_α) = Σ_β e_α^β Ξ(Z_β)` and `hᵅ = Ξ(π_* L_ᾱ)`. Each
//! step pairs the trapezoidal average of the integrand at the pre- and
//! post-step states with the step increment.

use num_complex::Complex64 as C64;

use super::OneForm;
use crate::bundle::FrameState;
use crate::models::CrModel;
use crate::sde::{Path, StepObserver};
use crate::{Error, Result};

struct Integrand {
    n: usize,
    dim: usize,
    comps: Vec<C64>,
    frame: Vec<C64>,
    /// `[g_0 .. g_{n-1}, h_0 .. h_{n-1}]`
    out: Vec<C64>,
}

impl Integrand {
    fn new(n: usize) -> Self {
        let dim = 2 * n + 1;
        Self {
            n,
            dim,
            comps: vec![C64::new(0.0, 0.0); dim],
            frame: vec![C64::new(0.0, 0.0); dim],
            out: vec![C64::new(0.0, 0.0); 2 * n],
        }
    }

    fn eval<M: CrModel + ?Sized>(&mut self, model: &M, form: &OneForm, s: &FrameState) {
        let (n, dim) = (self.n, self.dim);
        self.comps.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
        form.add_chart_comps(model, &s.x, C64::new(1.0, 0.0), &mut self.comps);
        self.out.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
        for beta in 0..n {
            model.frame_into(&s.x, beta, &mut self.frame);
            let mut xz = C64::new(0.0, 0.0);
            let mut xzbar = C64::new(0.0, 0.0);
            for k in 0..dim {
                xz += self.comps[k] * self.frame[k];
                xzbar += self.comps[k] * self.frame[k].conj();
            }
            for alpha in 0..n {
                let e = s.e[(beta, alpha)];
                self.out[alpha] += e * xz;
                self.out[n + alpha] += e.conj() * xzbar;
            }
        }
    }
}

fn step_value(n: usize, pre: &[C64], post: &[C64], db: &[C64]) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..n {
        acc += (pre[a] + post[a]) * 0.5 * db[a];
        acc += (pre[n + a] + post[n + a]) * 0.5 * db[a].conj();
    }
    acc.re
}

/// Line integral of `form` along a path recorded at every step with its
/// increments.
pub fn line_integral<M: CrModel + ?Sized>(model: &M, path: &Path, form: &OneForm) -> Result<f64> {
    let inc = path.increments.as_ref().ok_or(Error::MissingIncrements)?;
    if path.record_stride != 1 {
        return Err(Error::InvalidArgument(
            "line integrals need every step recorded (record_stride = 1)".into(),
        ));
    }
    let n = model.n();
    let steps = path.states.len() - 1;
    if inc.len() != steps * n {
        return Err(Error::DimensionMismatch {
            expected: steps * n,
            got: inc.len(),
        });
    }
    let mut a = Integrand::new(n);
    let mut b = Integrand::new(n);
    a.eval(model, form, &path.states[0]);
    let mut total = 0.0;
    for k in 0..steps {
        b.eval(model, form, &path.states[k + 1]);
        total += step_value(n, &a.out, &b.out, &inc[k * n..(k + 1) * n]);
        std::mem::swap(&mut a, &mut b);
    }
    Ok(total)
}

/// The path run backwards: states reversed and increments reversed and
/// negated.
pub fn reverse_path(path: &Path) -> Result<Path> {
    let inc = path.increments.as_ref().ok_or(Error::MissingIncrements)?;
    let n = path.terminal.n();
    let mut rev = Vec::with_capacity(inc.len());
    for chunk in inc.chunks(n).rev() {
        rev.extend(chunk.iter().map(|c| -c));
    }
    let t_end = *path.times.last().unwrap_or(&0.0);
    Ok(Path {
        times: path.times.iter().rev().map(|t| t_end - t).collect(),
        states: path.states.iter().rev().cloned().collect(),
        terminal: path.states[0].clone(),
        increments: Some(rev),
        status: path.status,
        record_stride: path.record_stride,
        dt: path.dt,
    })
}

/// Accumulates line integrals of several forms during simulation, so
/// ensembles need not store paths.
pub struct LineIntegralObserver<'a, M: CrModel + ?Sized> {
    model: &'a M,
    forms: &'a [OneForm],
    pre: Vec<Integrand>,
    post: Vec<Integrand>,
    primed: bool,
    totals: Vec<f64>,
}

impl<'a, M: CrModel + ?Sized> LineIntegralObserver<'a, M> {
    pub fn new(model: &'a M, forms: &'a [OneForm]) -> Self {
        let n = model.n();
        Self {
            model,
            forms,
            pre: forms.iter().map(|_| Integrand::new(n)).collect(),
            post: forms.iter().map(|_| Integrand::new(n)).collect(),
            primed: false,
            totals: vec![0.0; forms.len()],
        }
    }
}

impl<M: CrModel + ?Sized> StepObserver for LineIntegralObserver<'_, M> {
    fn observe(&mut self, _step: usize, before: &FrameState, after: &FrameState, db: &[C64]) {
        let n = self.model.n();
        for (i, form) in self.forms.iter().enumerate() {
            if !self.primed {
                self.pre[i].eval(self.model, form, before);
            }
            self.post[i].eval(self.model, form, after);
            self.totals[i] += step_value(n, &self.pre[i].out, &self.post[i].out, db);
        }
        self.primed = true;
        std::mem::swap(&mut self.pre, &mut self.post);
    }

    fn values(&self) -> Vec<f64> {
        self.totals.clone()
    }
}
