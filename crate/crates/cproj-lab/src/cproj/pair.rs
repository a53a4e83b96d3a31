//! Pairs of c-projectively equivalent metrics and the transformation laws
//! between their data.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{compose_j_values, gamma_const, inverse, trunc, CProjSolution};
use crate::chart::{self, MetricField, TensorField};
use crate::error::{LabError, Result};
use crate::jet::Jet;
use crate::kahler::{self, KahlerStructure};
use crate::linalg;

#[derive(Clone, Debug)]
pub struct MetricPairData {
    pub g: MetricField,
    pub g_tilde: MetricField,
    /// `φ = ln(det g̃ / det g) / (4(n+1))`.
    pub phi: TensorField,
    /// `Φ = dφ`.
    pub big_phi: TensorField,
}

fn det_ratio(g: &[Jet], gt: &[Jet], m: usize, p: &[f64]) -> Result<Jet> {
    let (_, d) = inverse(g, m, p)?;
    let (_, dt) = inverse(gt, m, p)?;
    let r = dt / d;
    if r.value() <= 0.0 {
        return Err(LabError::DegenerateMetric { point: p.to_vec(), det: r.value() });
    }
    Ok(r)
}

/// The fields `φ`, `Φ` of a pair, without any checks.
pub fn metric_pair(g: &MetricField, g_tilde: &MetricField) -> MetricPairData {
    let m = g.dim();
    let n1 = (m / 2 + 1) as f64;
    let (a, b) = (g.field.clone(), g_tilde.field.clone());
    let phi = TensorField::new(m, (0, 0), move |p, order| {
        let r = det_ratio(&a.eval(p, order)?, &b.eval(p, order)?, m, p)?;
        Ok(vec![r.ln() * (0.25 / n1)])
    });
    MetricPairData { g: g.clone(), g_tilde: g_tilde.clone(), big_phi: phi.differential(), phi }
}

fn check_hermitian(ks: &KahlerStructure, metric: &MetricField, points: &[Vec<f64>]) -> Result<()> {
    for p in points {
        let h = metric.check_nondegenerate(p)?;
        let j = ks.j_at(p)?;
        let r = linalg::max_abs(&(j.transpose() * &h * &j - &h));
        if r > 1e-8 * linalg::max_abs(&h).max(1.0) {
            return Err(LabError::NotHermitian(r));
        }
    }
    Ok(())
}

/// `A = (det g̃ / det g)^{1/(2(n+1))} g g̃⁻¹ g` and `λ = −Φ g⁻¹ A`.
pub fn solution_from_metric_pair(
    ks: &KahlerStructure,
    g_tilde: &MetricField,
    points: &[Vec<f64>],
) -> Result<(MetricPairData, CProjSolution)> {
    check_hermitian(ks, &ks.metric, points)?;
    check_hermitian(ks, g_tilde, points)?;
    let pair = metric_pair(&ks.metric, g_tilde);
    let m = ks.dim();
    let n1 = (m / 2 + 1) as f64;
    let (g, gt) = (ks.metric.field.clone(), g_tilde.field.clone());
    // e^{2φ} g̃⁻¹ g, the (1,1) form of A
    let l11 = move |p: &[f64], order: usize| -> Result<Vec<Jet>> {
        let gj = g.eval(p, order)?;
        let gtj = gt.eval(p, order)?;
        let (gti, _) = inverse(&gtj, m, p)?;
        let r = det_ratio(&gj, &gtj, m, p)?;
        let e = r.powf(0.5 / n1);
        Ok(linalg::jet_matmul(&gti, &gj, m).iter().map(|x| x * &e).collect())
    };
    let l11b = l11.clone();
    let gfield = ks.metric.field.clone();
    let a = TensorField::new(m, (0, 2), move |p, order| {
        let l = l11(p, order)?;
        Ok(linalg::jet_matmul(&gfield.eval(p, order)?, &l, m))
    });
    let big_phi = pair.big_phi.clone();
    let lambda = TensorField::new(m, (0, 1), move |p, order| {
        let l = l11b(p, order)?;
        let f = big_phi.eval(p, order)?;
        Ok((0..m)
            .map(|i| {
                let mut acc = f[0].zero_like();
                for s in 0..m {
                    acc -= &(&f[s] * &l[s * m + i]);
                }
                acc
            })
            .collect())
    });
    Ok((pair, CProjSolution::new(a, lambda)))
}

/// `g̃ = (det L)^{-1/2} g L⁻¹` with `L = g⁻¹A`.
pub fn metric_from_solution(g: &MetricField, a: &TensorField, points: &[Vec<f64>]) -> Result<MetricField> {
    let m = g.dim();
    for p in points.iter().chain(std::iter::once(&g.domain.center())) {
        let gv = g.check_nondegenerate(p)?;
        let av = a.matrix(p)?;
        let d = av.determinant() / gv.determinant();
        if d.abs() <= chart::DELTA_DEG || !d.is_finite() {
            return Err(LabError::DegenerateSolution(d.abs()));
        }
        if d < 0.0 {
            // the square root of det L is not real
            return Err(LabError::DegenerateSolution(d));
        }
    }
    let (gf, af) = (g.field.clone(), a.clone());
    let field = TensorField::new(m, (0, 2), move |p, order| {
        let gj = gf.eval(p, order)?;
        let aj = af.eval(p, order)?;
        let (ai, da) = linalg::jet_inverse_det(&aj, m).ok_or(LabError::DegenerateSolution(0.0))?;
        let (_, dg) = inverse(&gj, m, p)?;
        let dl = da / dg;
        if dl.value() <= chart::DELTA_DEG {
            return Err(LabError::DegenerateSolution(dl.value()));
        }
        let s = dl.powf(-0.5);
        let t = linalg::jet_matmul(&linalg::jet_matmul(&gj, &ai, m), &gj, m);
        Ok(t.iter().map(|x| x * &s).collect())
    });
    Ok(MetricField::new(field, g.domain.clone()))
}

/// `Γ̃^i_jk − Γ^i_jk − (δ^i_j Φ_k + δ^i_k Φ_j − J^i_j (ΦJ)_k − J^i_k (ΦJ)_j)`.
pub fn connection_change_residual(pair: &MetricPairData, ks: &KahlerStructure, points: &[Vec<f64>]) -> Result<f64> {
    let m = ks.dim();
    let mut r = 0.0f64;
    for p in points {
        let g = chart::christoffel(&pair.g, p)?;
        let gt = chart::christoffel(&pair.g_tilde, p)?;
        let f = pair.big_phi.values(p)?;
        let j = ks.complex.values(p)?;
        let fj = compose_j_values(&f, &j, m);
        for i in 0..m {
            for a in 0..m {
                for b in 0..m {
                    let d = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
                    let rhs = d(i, a) * f[b] + d(i, b) * f[a] - j[i * m + a] * fj[b] - j[i * m + b] * fj[a];
                    r = r.max((gt[[i, a, b]] - g[[i, a, b]] - rhs).abs());
                }
            }
        }
    }
    Ok(r)
}

#[derive(Clone, Debug)]
pub struct TransformedConstants {
    /// Mean of `B̃` over the sample.
    pub b_tilde: f64,
    pub b_tilde_spread: f64,
    /// `Λ̃ = −(det L)^{1/2} L⁻¹ Λ`.
    pub lambda_tilde: TensorField,
}

/// `B̃ = (det L)^{1/2} (g(L⁻¹Λ, Λ) − μ)` for the metric `g̃` defined by `A`.
pub fn transform_constants(ks: &KahlerStructure, sol: &CProjSolution, points: &[Vec<f64>]) -> Result<TransformedConstants> {
    let mu = sol.mu.as_ref().ok_or(LabError::MissingMu)?;
    let m = ks.dim();
    let mut vals = Vec::with_capacity(points.len());
    for p in points {
        let g = ks.metric.check_nondegenerate(p)?;
        let gi = g.clone().try_inverse().ok_or(LabError::DegenerateMetric { point: p.clone(), det: 0.0 })?;
        let l = &gi * sol.a.matrix(p)?;
        let det = l.determinant();
        if det <= chart::DELTA_DEG {
            return Err(LabError::DegenerateSolution(det));
        }
        let li = l.try_inverse().ok_or(LabError::DegenerateSolution(det))?;
        let lam = nalgebra::DVector::from_vec(sol.lambda.values(p)?);
        let big = &gi * &lam;
        let q = (li * &big).dot(&(&g * &big));
        vals.push(det.sqrt() * (q - mu.scalar_value(p)?));
    }
    let mean = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
    let spread = vals.iter().fold(f64::NEG_INFINITY, |s, v| s.max(*v)) - vals.iter().fold(f64::INFINITY, |s, v| s.min(*v));
    let (gf, af, lf) = (ks.metric.field.clone(), sol.a.clone(), sol.lambda.clone());
    let lambda_tilde = TensorField::new(m, (1, 0), move |p, order| {
        let gj = gf.eval(p, order)?;
        let aj = af.eval(p, order)?;
        let (ai, da) = linalg::jet_inverse_det(&aj, m).ok_or(LabError::DegenerateSolution(0.0))?;
        let (_, dg) = inverse(&gj, m, p)?;
        let s = (da / dg).sqrt();
        // L⁻¹Λ = A⁻¹λ
        let l = lf.eval(p, order)?;
        Ok((0..m)
            .map(|i| {
                let mut acc = l[0].zero_like();
                for k in 0..m {
                    acc -= &(&ai[i * m + k] * &l[k]);
                }
                acc * &s
            })
            .collect())
    });
    Ok(TransformedConstants { b_tilde: mean, b_tilde_spread: if vals.is_empty() { 0.0 } else { spread }, lambda_tilde })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EinsteinRelations {
    /// `|B + Scal/(4n(n+1))|`.
    pub scalar_b: f64,
    /// `Ric(g̃) − Ric(g) + 2(n+1)(∇Φ − Φ⊗Φ + ΦJ⊗ΦJ)`.
    pub riccitrafo: f64,
    /// `Bg − B̃g̃ + ∇Φ − Φ⊗Φ + ΦJ⊗ΦJ`.
    pub kaehler_einstein: f64,
    pub b_tilde: f64,
}

impl EinsteinRelations {
    pub fn max(&self) -> f64 {
        self.scalar_b.max(self.riccitrafo).max(self.kaehler_einstein)
    }
}

/// The three Einstein relations for the pair `(g, g̃)` defined by `sol`
/// (which must carry `μ` and `B`).
pub fn einstein_relations(
    ks: &KahlerStructure,
    g_tilde: &MetricField,
    sol: &CProjSolution,
    points: &[Vec<f64>],
) -> Result<EinsteinRelations> {
    let e = kahler::einstein_residual(ks, points)?;
    if e.residual > 1e-6 * (1.0 + e.scal_max.abs()) {
        return Err(LabError::NotEinstein(e.residual));
    }
    let b = sol.b.ok_or(LabError::MissingB)?;
    let m = ks.dim();
    let n = (m / 2) as f64;
    let tc = transform_constants(ks, sol, points)?;
    let pair = metric_pair(&ks.metric, g_tilde);
    let mut rep = EinsteinRelations { scalar_b: 0.0, riccitrafo: 0.0, kaehler_einstein: 0.0, b_tilde: tc.b_tilde };
    for p in points {
        let gj = ks.metric.eval(p, 2)?;
        let c = chart::curvature_from_metric_jets(&gj, m, p)?;
        let ct = chart::riemann_suite(g_tilde, p)?;
        rep.scalar_b = rep.scalar_b.max((b + c.scalar / (4.0 * n * (n + 1.0))).abs());
        let gamma = gamma_const(&trunc(&gj, 1), m, p)?;
        let fj = pair.big_phi.eval(p, 1)?;
        let hess = linalg::values(&chart::covariant_derivative_jets(&fj, (0, 1), m, &gamma), m);
        let f = linalg::vector_values(&fj);
        let fjv = nalgebra::DVector::from_vec(compose_j_values(f.as_slice(), &ks.complex.values(p)?, m));
        let q: DMatrix<f64> = &hess - &f * f.transpose() + &fjv * fjv.transpose();
        let ric = &ct.ricci - &c.ricci + &q * (2.0 * (n + 1.0));
        rep.riccitrafo = rep.riccitrafo.max(linalg::max_abs(&ric));
        let ke = linalg::values(&gj, m) * b - g_tilde.at(p)? * tc.b_tilde + &q;
        rep.kaehler_einstein = rep.kaehler_einstein.max(linalg::max_abs(&ke));
    }
    Ok(rep)
}

/// Carries a solution `A₁` on `g` to the metric `g̃` defined by `A`:
/// in (1,1) form `L̃₁ = L₁ L⁻¹`, so `Ã₁ = g̃ g⁻¹ A₁ A⁻¹ g`. The result has
/// `λ = ¼ d trace Ã₁` and no `μ`, `B`.
pub fn transfer_solution(ks: &KahlerStructure, a: &TensorField, g_tilde: &MetricField, other: &CProjSolution) -> CProjSolution {
    let m = ks.dim();
    let (gf, af, a1, gt) = (ks.metric.field.clone(), a.clone(), other.a.clone(), g_tilde.field.clone());
    let field = TensorField::new(m, (0, 2), move |p, order| {
        let gj = gf.eval(p, order)?;
        let (gi, _) = inverse(&gj, m, p)?;
        let (ai, _) = linalg::jet_inverse_det(&af.eval(p, order)?, m).ok_or(LabError::DegenerateSolution(0.0))?;
        let l1 = linalg::jet_matmul(&gi, &a1.eval(p, order)?, m);
        let li = linalg::jet_matmul(&ai, &gj, m);
        Ok(linalg::jet_matmul(&gt.eval(p, order)?, &linalg::jet_matmul(&l1, &li, m), m))
    });
    CProjSolution::from_tensor(g_tilde, field)
}
