//! Bracket-generating checks: Lie brackets of the frame, the real span rank
//! of fields plus brackets, and the Φ recursion that controls smoothness of
//! line-integral laws.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::models::{CTangent, CrModel, FrameIndex};
use crate::observables::OneForm;
use crate::{Error, Result};

/// Central-difference step for first derivatives.
pub const FD_STEP: f64 = 1e-5;
/// Relative singular-value threshold for [`span_rank`].
pub const RANK_TOL: f64 = 1e-8;
/// `|Φ|` above this counts as non-vanishing.
pub const PHI_TOL: f64 = 1e-8;

/// Step for derivatives nested `depth` deep: `max(1e-5, ε^{1/(depth+1)})`,
/// balancing truncation against amplified rounding.
pub fn nested_step(depth: usize) -> f64 {
    FD_STEP.max(f64::EPSILON.powf(1.0 / (depth as f64 + 1.0)))
}

/// A frame field or an iterated bracket of frame fields.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldExpr {
    Field(FrameIndex),
    Bracket(Box<FieldExpr>, Box<FieldExpr>),
}

impl FieldExpr {
    pub fn bracket(a: FieldExpr, b: FieldExpr) -> Self {
        FieldExpr::Bracket(Box::new(a), Box::new(b))
    }

    /// Right-nested bracket `[A₁, [A₂, … [A_{m−1}, A_m] …]]`; a single index
    /// gives the field itself.
    pub fn nested(indices: &[FrameIndex]) -> Option<Self> {
        let (last, rest) = indices.split_last()?;
        let mut expr = FieldExpr::Field(*last);
        for idx in rest.iter().rev() {
            expr = FieldExpr::bracket(FieldExpr::Field(*idx), expr);
        }
        Some(expr)
    }

    /// Bracket nesting depth; 0 for a field.
    pub fn order(&self) -> usize {
        match self {
            FieldExpr::Field(_) => 0,
            FieldExpr::Bracket(a, b) => 1 + a.order().max(b.order()),
        }
    }

    pub fn eval<M: CrModel + ?Sized>(&self, model: &M, x: &[f64]) -> Result<CTangent> {
        match self {
            FieldExpr::Field(idx) => {
                if !model.in_chart(x) {
                    return Err(Error::ChartExit { point: x.to_vec() });
                }
                Ok(model.field(x, *idx))
            }
            FieldExpr::Bracket(a, b) => {
                let va = a.eval(model, x)?;
                let vb = b.eval(model, x)?;
                let ja = a.jacobian(model, x)?;
                let jb = b.jacobian(model, x)?;
                Ok(bracket_from(&va, &vb, &ja, &jb))
            }
        }
    }

    /// `J[(k, j)] = ∂_j V^k`; analytic for plain frame fields when the model
    /// provides it.
    pub fn jacobian<M: CrModel + ?Sized>(&self, model: &M, x: &[f64]) -> Result<DMatrix<C64>> {
        match self {
            FieldExpr::Field(idx) => model.field_jacobian(x, *idx, FD_STEP),
            FieldExpr::Bracket(..) => {
                let h = nested_step(self.order());
                let dim = x.len();
                let mut jac = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
                let mut p = x.to_vec();
                for j in 0..dim {
                    p[j] = x[j] + h;
                    let fp = self.eval(model, &p)?;
                    p[j] = x[j] - h;
                    let fm = self.eval(model, &p)?;
                    p[j] = x[j];
                    for k in 0..dim {
                        jac[(k, j)] = (fp.comps[k] - fm.comps[k]) / (2.0 * h);
                    }
                }
                Ok(jac)
            }
        }
    }
}

/// `[X, Y]^k = X^j ∂_j Y^k − Y^j ∂_j X^k`.
fn bracket_from(x: &CTangent, y: &CTangent, jx: &DMatrix<C64>, jy: &DMatrix<C64>) -> CTangent {
    let d = x.comps.len();
    let mut out = CTangent::zeros(d);
    for k in 0..d {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..d {
            acc += jy[(k, j)] * x.comps[j] - jx[(k, j)] * y.comps[j];
        }
        out.comps[k] = acc;
    }
    out
}

/// `[Z_A, Z_B]` at `x`.
pub fn lie_bracket<M: CrModel + ?Sized>(
    model: &M,
    a: FrameIndex,
    b: FrameIndex,
    x: &[f64],
) -> Result<CTangent> {
    FieldExpr::bracket(FieldExpr::Field(a), FieldExpr::Field(b)).eval(model, x)
}

/// Bracket computed purely by central differences of the frame, ignoring any
/// analytic Jacobian.
pub fn lie_bracket_fd<M: CrModel + ?Sized>(
    model: &M,
    a: FrameIndex,
    b: FrameIndex,
    x: &[f64],
) -> Result<CTangent> {
    let ja = crate::models::fd_jacobian(model, x, FD_STEP, |m, p| m.field(p, a).comps)?;
    let jb = crate::models::fd_jacobian(model, x, FD_STEP, |m, p| m.field(p, b).comps)?;
    Ok(bracket_from(
        &model.field(x, a),
        &model.field(x, b),
        &ja,
        &jb,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BracketTable {
    pub x: Vec<f64>,
    pub max_order: usize,
    /// Multi-index of each entry; length 1 for the frame fields themselves.
    pub labels: Vec<Vec<FrameIndex>>,
    pub vectors: Vec<CTangent>,
    /// Singular values of the real `(2n+1) × 2m` matrix of real and imaginary
    /// parts, descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

impl BracketTable {
    pub fn label(&self, i: usize) -> String {
        label(&self.labels[i])
    }
}

pub fn label(indices: &[FrameIndex]) -> String {
    indices
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// All multi-indices of length `m` over `Z_1..Z_n, Z̄_1..Z̄_n`, lexicographic.
pub fn multi_indices(n: usize, m: usize) -> Vec<Vec<FrameIndex>> {
    let letters = FrameIndex::horizontal(n);
    let mut out: Vec<Vec<FrameIndex>> = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                letters.iter().map(move |l| {
                    let mut v = prefix.clone();
                    v.push(*l);
                    v
                })
            })
            .collect();
    }
    out
}

/// Real rank of `Re Z_α, Im Z_α` together with the real and imaginary parts
/// of right-nested brackets of `{Z_α, Z̄_α}` up to `max_order` fields.
pub fn span_rank<M: CrModel + ?Sized>(
    model: &M,
    x: &[f64],
    max_order: usize,
) -> Result<BracketTable> {
    if max_order == 0 {
        return Err(Error::InvalidArgument(
            "max bracket order must be at least 1".into(),
        ));
    }
    let n = model.n();
    let mut labels = Vec::new();
    let mut vectors = Vec::new();
    for a in 0..n {
        labels.push(vec![FrameIndex::Z(a)]);
        vectors.push(model.field(x, FrameIndex::Z(a)));
    }
    for m in 2..=max_order {
        for idx in multi_indices(n, m) {
            let expr = FieldExpr::nested(&idx).expect("non-empty");
            vectors.push(expr.eval(model, x)?);
            labels.push(idx);
        }
    }
    let d = model.dim();
    let mut mat = DMatrix::<f64>::zeros(d, 2 * vectors.len());
    for (c, v) in vectors.iter().enumerate() {
        for k in 0..d {
            mat[(k, 2 * c)] = v.comps[k].re;
            mat[(k, 2 * c + 1)] = v.comps[k].im;
        }
    }
    let mut sv: Vec<f64> = mat.singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let top = sv.first().cloned().unwrap_or(0.0);
    let rank = sv
        .iter()
        .filter(|s| top > 0.0 && **s > RANK_TOL * top)
        .count();
    Ok(BracketTable {
        x: x.to_vec(),
        max_order,
        labels,
        vectors,
        singular_values: sv,
        rank,
    })
}

/// `V f` at `x` for a vector field value `v` and scalar `f`, by central
/// differences of `f` with step `h`.
fn directional<F>(v: &[C64], x: &[f64], h: f64, f: &F) -> Result<C64>
where
    F: Fn(&[f64]) -> Result<C64>,
{
    let mut p = x.to_vec();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..x.len() {
        if v[j] == C64::new(0.0, 0.0) {
            continue;
        }
        p[j] = x[j] + h;
        let fp = f(&p)?;
        p[j] = x[j] - h;
        let fm = f(&p)?;
        p[j] = x[j];
        acc += v[j] * (fp - fm) / (2.0 * h);
    }
    Ok(acc)
}

fn frame_comp_checked<M: CrModel + ?Sized>(
    model: &M,
    form: &OneForm,
    x: &[f64],
    idx: FrameIndex,
) -> Result<C64> {
    if !model.in_chart(x) {
        return Err(Error::ChartExit { point: x.to_vec() });
    }
    Ok(form.frame_comp(model, x, idx))
}

fn phi_rec<M: CrModel + ?Sized>(
    model: &M,
    form: &OneForm,
    idx: &[FrameIndex],
    x: &[f64],
    h: f64,
) -> Result<C64> {
    let a1 = idx[0];
    if idx.len() == 1 {
        return frame_comp_checked(model, form, x, a1);
    }
    let tail = &idx[1..];
    let z1 = FieldExpr::Field(a1).eval(model, x)?;
    let first = directional(&z1.comps, x, h, &|p: &[f64]| {
        phi_rec(model, form, tail, p, h)
    })?;
    let w = FieldExpr::nested(tail).expect("non-empty").eval(model, x)?;
    let second = directional(&w.comps, x, h, &|p: &[f64]| {
        frame_comp_checked(model, form, p, a1)
    })?;
    Ok(first - second)
}

/// `Φ_{A₁…A_m}(Ξ)(x)` from `Φ_{A₁} = Ξ_{A₁}` and
/// `Φ_{A₁…A_m} = Z_{A₁} Φ_{A₂…A_m} − [Z_{A₂}, [… [Z_{A_{m−1}}, Z_{A_m}] …]] Ξ_{A₁}`,
/// where for `m = 2` the bracket is the single field `Z_{A₂}`.
pub fn phi_functional<M: CrModel + ?Sized>(
    model: &M,
    form: &OneForm,
    indices: &[FrameIndex],
    x: &[f64],
) -> Result<C64> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("Φ needs at least one index".into()));
    }
    if indices.contains(&FrameIndex::T) {
        return Err(Error::InvalidArgument(
            "Φ indices must be horizontal".into(),
        ));
    }
    phi_rec(model, form, indices, x, nested_step(indices.len() - 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessReport {
    pub satisfied: bool,
    pub witness: Option<Vec<FrameIndex>>,
    pub value: C64,
    /// Number of multi-indices evaluated.
    pub evaluated: usize,
}

/// Breadth-first search for a multi-index with `|Φ(Ξ)(x)| > 1e-8`, by
/// increasing length and lexicographically within a length.
pub fn smoothness_condition<M: CrModel + ?Sized>(
    model: &M,
    form: &OneForm,
    x: &[f64],
    max_order: usize,
) -> Result<SmoothnessReport> {
    if max_order == 0 {
        return Err(Error::InvalidArgument(
            "max order must be at least 1".into(),
        ));
    }
    let mut evaluated = 0;
    for m in 1..=max_order {
        for idx in multi_indices(model.n(), m) {
            let v = phi_functional(model, form, &idx, x)?;
            evaluated += 1;
            if v.norm() > PHI_TOL {
                return Ok(SmoothnessReport {
                    satisfied: true,
                    witness: Some(idx),
                    value: v,
                    evaluated,
                });
            }
        }
    }
    Ok(SmoothnessReport {
        satisfied: false,
        witness: None,
        value: C64::new(0.0, 0.0),
        evaluated,
    })
}
