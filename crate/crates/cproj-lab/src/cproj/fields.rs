//! Vector fields and the c-projective map `v ↦ f(v)`.

use serde::{Deserialize, Serialize};

use super::{frame_norm, inverse, main_a_residual, trace, CProjSolution};
use crate::chart::{MetricField, TensorField};
use crate::error::{LabError, Result};
use crate::kahler::KahlerStructure;
use crate::linalg;

/// `(L_v g)_ab = v^c ∂_c g_ab + g_cb ∂_a v^c + g_ac ∂_b v^c`.
pub fn lie_derivative_metric(metric: &MetricField, v: &TensorField) -> TensorField {
    assert_eq!(v.rank(), (1, 0));
    let m = metric.dim();
    let (g, v) = (metric.field.clone(), v.clone());
    TensorField::new(m, (0, 2), move |p, order| {
        let gj = g.eval(p, order + 1)?;
        let vj = v.eval(p, order + 1)?;
        let mut out = Vec::with_capacity(m * m);
        for a in 0..m {
            for b in 0..m {
                let mut acc = gj[0].truncate(order).zero_like();
                for c in 0..m {
                    acc += &(&vj[c].truncate(order) * &gj[a * m + b].partial(c));
                    acc += &(&gj[c * m + b].truncate(order) * &vj[c].partial(a));
                    acc += &(&gj[a * m + c].truncate(order) * &vj[c].partial(b));
                }
                out.push(acc);
            }
        }
        Ok(out)
    })
}

/// `f(v) = −½ (L_v g − trace_g(L_v g) / (2(n+1)) g)`.
pub fn cproj_field(metric: &MetricField, v: &TensorField) -> TensorField {
    let m = metric.dim();
    let n1 = (m / 2 + 1) as f64;
    let (g, l) = (metric.field.clone(), lie_derivative_metric(metric, v));
    TensorField::new(m, (0, 2), move |p, order| {
        let gj = g.eval(p, order)?;
        let lj = l.eval(p, order)?;
        let (gi, _) = inverse(&gj, m, p)?;
        let t = trace(&gi, &lj, m) * (1.0 / (2.0 * n1));
        Ok(lj.iter().zip(&gj).map(|(x, y)| (x - &(&t * y)) * -0.5).collect())
    })
}

/// `f(v)` and the main-equation residual of `(f(v), ¼ d trace f(v))`.
pub fn cproj_field_residual(ks: &KahlerStructure, v: &TensorField, points: &[Vec<f64>]) -> Result<(TensorField, f64)> {
    let a = cproj_field(&ks.metric, v);
    let sol = CProjSolution::from_tensor(&ks.metric, a.clone());
    Ok((a, main_a_residual(ks, &sol, points)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssentialReport {
    /// Main-equation residual of `f(Λ)`.
    pub cproj_residual: f64,
    /// Distance of `f(Λ) + B·A` from the line `ℝg` (frame norm).
    pub proportionality: f64,
    /// Spread of the proportionality factor over the sample.
    pub factor_spread: f64,
}

/// `Λ = g⁻¹λ` for a solution with `B ≠ 0`; `f(Λ) = −B·A` modulo constant
/// multiples of `g`.
pub fn essential_field_from_solution(
    ks: &KahlerStructure,
    sol: &CProjSolution,
    points: &[Vec<f64>],
) -> Result<(TensorField, EssentialReport)> {
    let b = sol.b.ok_or(LabError::MissingB)?;
    if b.abs() < 1e-12 {
        return Err(LabError::BZero);
    }
    let big = sol.lambda_raised(&ks.metric);
    let (fl, cproj_residual) = cproj_field_residual(ks, &big, points)?;
    let m = ks.dim();
    let mut prop = 0.0f64;
    let mut factors = Vec::new();
    for p in points {
        let x = fl.matrix(p)? + sol.a.matrix(p)? * b;
        let e = linalg::orthonormal_frame(&ks.g_at(p)?)
            .ok_or_else(|| LabError::BadParams("frame norms need a definite metric".into()))?;
        let xf = e.transpose() * x * &e;
        let c = xf.trace() / m as f64;
        let r = &xf - nalgebra::DMatrix::identity(m, m) * c;
        prop = prop.max(frame_norm(r.transpose().as_slice(), 2, &nalgebra::DMatrix::identity(m, m)));
        factors.push(c);
    }
    let spread = factors.iter().fold(f64::NEG_INFINITY, |s, v| s.max(*v)) - factors.iter().fold(f64::INFINITY, |s, v| s.min(*v));
    Ok((big, EssentialReport { cproj_residual, proportionality: prop, factor_spread: if factors.is_empty() { 0.0 } else { spread } }))
}
