//! The c-projective system on a Kähler chart.
//!
//! A solution is a hermitian symmetric `A` (stored as a (0,2) field) with
//!
//! ```text
//! ∇_c A_ab = g_ca λ_b + g_cb λ_a + ω_ca (λJ)_b + ω_cb (λJ)_a,   (λJ)_b = λ_s J^s_b
//! ```
//!
//! and, when the metric has degree of mobility at least three, constants
//! `μ`, `B` with `∇λ = μ g + B A` and `dμ = 2B λ`.

mod bridge;
mod fields;
mod normalize;
mod pair;

pub use bridge::{
    a_to_phi, hamiltonian_residual, phi_to_a, phi_to_psi, psi_to_phi, trace_omega, twoform_bridge, BridgeInput,
    BridgeReport,
};
pub use fields::{cproj_field, cproj_field_residual, essential_field_from_solution, lie_derivative_metric, EssentialReport};
pub use normalize::{normalize_b, Deformation, Normalization};
pub use pair::{
    connection_change_residual, einstein_relations, metric_from_solution, metric_pair, solution_from_metric_pair,
    transfer_solution, transform_constants, EinsteinRelations, MetricPairData, TransformedConstants,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chart::{self, MetricField, TensorField};
use crate::error::{LabError, Result};
use crate::jet::Jet;
use crate::kahler::KahlerStructure;
use crate::linalg;

#[derive(Clone, Debug)]
pub struct CProjSolution {
    pub a: TensorField,
    pub lambda: TensorField,
    pub mu: Option<TensorField>,
    pub b: Option<f64>,
}

pub(crate) fn trunc(v: &[Jet], k: usize) -> Vec<Jet> {
    v.iter().map(|x| x.truncate(k)).collect()
}

pub(crate) fn inverse(g: &[Jet], m: usize, p: &[f64]) -> Result<(Vec<Jet>, Jet)> {
    let (gi, det) =
        linalg::jet_inverse_det(g, m).ok_or_else(|| LabError::DegenerateMetric { point: p.to_vec(), det: 0.0 })?;
    if chart::hadamard_ratio(&linalg::values(g, m), det.value()) <= chart::DELTA_DEG {
        return Err(LabError::DegenerateMetric { point: p.to_vec(), det: det.value() });
    }
    Ok((gi, det))
}

/// Christoffel values wrapped as order-0 jets.
pub(crate) fn gamma_const(g: &[Jet], m: usize, p: &[f64]) -> Result<Vec<Jet>> {
    Ok(chart::christoffel_values(g, m, p)?.into_iter().map(|v| Jet::constant(m, 0, v)).collect())
}

/// `g^{ij} a_ij`.
pub(crate) fn trace(gi: &[Jet], a: &[Jet], m: usize) -> Jet {
    let mut acc = a[0].zero_like();
    for k in 0..m * m {
        acc += &(&gi[k] * &a[k]);
    }
    acc
}

/// `V^i = g^{ij} v_j`.
pub(crate) fn raise(gi: &[Jet], v: &[Jet], m: usize) -> Vec<Jet> {
    (0..m)
        .map(|i| {
            let mut acc = v[0].zero_like();
            for j in 0..m {
                acc += &(&gi[i * m + j] * &v[j]);
            }
            acc
        })
        .collect()
}

/// `(λJ)_b = λ_s J^s_b`.
pub(crate) fn compose_j(l: &[Jet], j: &[Jet], m: usize) -> Vec<Jet> {
    (0..m)
        .map(|b| {
            let mut acc = l[0].zero_like();
            for s in 0..m {
                acc += &(&l[s] * &j[s * m + b]);
            }
            acc
        })
        .collect()
}

pub(crate) fn compose_j_values(l: &[f64], j: &[f64], m: usize) -> Vec<f64> {
    (0..m).map(|b| (0..m).map(|s| l[s] * j[s * m + b]).sum()).collect()
}

/// Frobenius norm of a covariant tensor (flat row-major, `len` indices)
/// after transforming every index to the frame `e` (columns).
pub(crate) fn frame_norm(t: &[f64], len: usize, e: &DMatrix<f64>) -> f64 {
    let m = e.nrows();
    let mut cur = t.to_vec();
    for slot in 0..len {
        let stride = m.pow((len - 1 - slot) as u32);
        let mut next = vec![0.0; cur.len()];
        for (idx, out) in next.iter_mut().enumerate() {
            let d = (idx / stride) % m;
            let base = idx - d * stride;
            *out = (0..m).map(|c| cur[base + c * stride] * e[(c, d)]).sum();
        }
        cur = next;
    }
    cur.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn amax<'a, I: IntoIterator<Item = &'a f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, |s, v| s.max(v.abs()))
}

/// `¼ d trace_g A` as a field.
pub fn lambda_from_a(metric: &MetricField, a: &TensorField) -> TensorField {
    trace_field(metric, a).differential().scaled(0.25)
}

pub fn trace_field(metric: &MetricField, a: &TensorField) -> TensorField {
    let (g, a) = (metric.field.clone(), a.clone());
    let m = metric.dim();
    TensorField::new(m, (0, 0), move |p, order| {
        let (gi, _) = inverse(&g.eval(p, order)?, m, p)?;
        Ok(vec![trace(&gi, &a.eval(p, order)?, m)])
    })
}

/// `Λ = g⁻¹ v` for a 1-form `v`.
pub fn raise_field(metric: &MetricField, v: &TensorField) -> TensorField {
    let (g, v) = (metric.field.clone(), v.clone());
    let m = metric.dim();
    TensorField::new(m, (1, 0), move |p, order| {
        let (gi, _) = inverse(&g.eval(p, order)?, m, p)?;
        Ok(raise(&gi, &v.eval(p, order)?, m))
    })
}

impl CProjSolution {
    pub fn new(a: TensorField, lambda: TensorField) -> CProjSolution {
        assert_eq!(a.rank(), (0, 2));
        assert_eq!(lambda.rank(), (0, 1));
        CProjSolution { a, lambda, mu: None, b: None }
    }

    /// `λ = ¼ d trace_g A`.
    pub fn from_tensor(metric: &MetricField, a: TensorField) -> CProjSolution {
        let lambda = lambda_from_a(metric, &a);
        CProjSolution::new(a, lambda)
    }

    pub fn with_mu_b(mut self, mu: TensorField, b: f64) -> CProjSolution {
        assert_eq!(mu.rank(), (0, 0));
        self.mu = Some(mu);
        self.b = Some(b);
        self
    }

    /// `(g, 0, −B, B)`, a solution for every `B`.
    pub fn trivial(metric: &MetricField, b: f64) -> CProjSolution {
        let m = metric.dim();
        CProjSolution::new(metric.field.clone(), TensorField::zero(m, (0, 1)))
            .with_mu_b(TensorField::constant(m, (0, 0), vec![-b]), b)
    }

    /// The solution determined by `μ` for `B ≠ 0`: `λ = dμ / 2B`,
    /// `A = (∇λ − μ g) / B`.
    pub fn from_potential(metric: &MetricField, mu: TensorField, b: f64) -> Result<CProjSolution> {
        if b.abs() < 1e-14 {
            return Err(LabError::BZero);
        }
        let m = metric.dim();
        let lambda = mu.differential().scaled(0.5 / b);
        let (g, l, mu2) = (metric.field.clone(), lambda.clone(), mu.clone());
        let a = TensorField::new(m, (0, 2), move |p, order| {
            let gj = g.eval(p, order + 1)?;
            let gamma = chart::christoffel_jets(&gj, m, p)?;
            let dl = chart::covariant_derivative_jets(&l.eval(p, order + 1)?, (0, 1), m, &gamma);
            let muj = mu2.eval(p, order)?;
            Ok((0..m * m)
                .map(|k| {
                    let sym = (&dl[k] + &dl[(k % m) * m + k / m]) * 0.5;
                    (sym - &muj[0] * &gj[k].truncate(order)) * (1.0 / b)
                })
                .collect())
        });
        Ok(CProjSolution::new(a, lambda).with_mu_b(mu, b))
    }

    /// `Λ = g⁻¹λ`.
    pub fn lambda_raised(&self, metric: &MetricField) -> TensorField {
        raise_field(metric, &self.lambda)
    }

    /// `a·self + b·other`; `B` must agree when both carry one.
    pub fn linear_combination(&self, a: f64, other: &CProjSolution, b: f64) -> Result<CProjSolution> {
        let mut out = CProjSolution::new(self.a.combine(a, &other.a, b), self.lambda.combine(a, &other.lambda, b));
        if let (Some(m1), Some(m2), Some(b1), Some(b2)) = (&self.mu, &other.mu, self.b, other.b) {
            if (b1 - b2).abs() > 1e-12 * (1.0 + b1.abs()) {
                return Err(LabError::BadParams(format!("cannot combine solutions with B = {b1} and B = {b2}")));
            }
            out = out.with_mu_b(m1.combine(a, m2, b), b1);
        }
        Ok(out)
    }

    /// Residuals of the type invariants: symmetry, hermitian property and
    /// `λ = ¼ d trace_g A`.
    pub fn invariant_residuals(&self, ks: &KahlerStructure, points: &[Vec<f64>]) -> Result<[f64; 3]> {
        let m = ks.dim();
        let tr = lambda_from_a(&ks.metric, &self.a);
        let mut out = [0.0f64; 3];
        for p in points {
            let a = self.a.matrix(p)?;
            let j = ks.j_at(p)?;
            out[0] = out[0].max(linalg::max_abs(&(&a - a.transpose())));
            out[1] = out[1].max(linalg::max_abs(&(j.transpose() * &a * &j - &a)));
            let l1 = self.lambda.values(p)?;
            let l2 = tr.values(p)?;
            out[2] = out[2].max((0..m).fold(0.0f64, |s, i| s.max((l1[i] - l2[i]).abs())));
        }
        Ok(out)
    }
}

/// Residual tensor `∇_c A_ab − RHS` at `p`, flat index `(c*m + a)*m + b`.
pub fn main_a_residual_at(ks: &KahlerStructure, a: &TensorField, lambda: &TensorField, p: &[f64]) -> Result<Vec<f64>> {
    let m = ks.dim();
    let g = ks.metric.eval(p, 1)?;
    let gamma = gamma_const(&g, m, p)?;
    let na = chart::covariant_derivative_jets(&a.eval(p, 1)?, (0, 2), m, &gamma);
    let gv = linalg::values(&g, m);
    let jv = ks.j_at(p)?;
    let w = &gv * &jv;
    let l = lambda.values(p)?;
    let lj = compose_j_values(&l, ks.complex.values(p)?.as_slice(), m);
    let mut out = Vec::with_capacity(m * m * m);
    for c in 0..m {
        for x in 0..m {
            for y in 0..m {
                let rhs = gv[(c, x)] * l[y] + gv[(c, y)] * l[x] + w[(c, x)] * lj[y] + w[(c, y)] * lj[x];
                out.push(na[(c * m + x) * m + y].value() - rhs);
            }
        }
    }
    Ok(out)
}

/// Largest coordinate residual of the main equation over the sample.
pub fn main_a_residual(ks: &KahlerStructure, sol: &CProjSolution, points: &[Vec<f64>]) -> Result<f64> {
    let mut r = 0.0f64;
    for p in points {
        r = r.max(amax(&main_a_residual_at(ks, &sol.a, &sol.lambda, p)?));
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleReport {
    pub main_a: f64,
    pub lambda_eq: f64,
    pub mu_eq: f64,
}

impl TripleReport {
    pub fn max(&self) -> f64 {
        self.main_a.max(self.lambda_eq).max(self.mu_eq)
    }
}

pub fn triple_residual(ks: &KahlerStructure, sol: &CProjSolution, points: &[Vec<f64>]) -> Result<TripleReport> {
    let mu = sol.mu.as_ref().ok_or(LabError::MissingMu)?;
    let b = sol.b.ok_or(LabError::MissingB)?;
    let m = ks.dim();
    let mut rep = TripleReport { main_a: main_a_residual(ks, sol, points)?, lambda_eq: 0.0, mu_eq: 0.0 };
    for p in points {
        let g = ks.metric.eval(p, 1)?;
        let gamma = gamma_const(&g, m, p)?;
        let dl = chart::covariant_derivative_jets(&sol.lambda.eval(p, 1)?, (0, 1), m, &gamma);
        let a = sol.a.values(p)?;
        let muj = mu.eval(p, 1)?;
        let l = sol.lambda.values(p)?;
        for c in 0..m {
            for x in 0..m {
                let k = c * m + x;
                rep.lambda_eq = rep.lambda_eq.max((dl[k].value() - muj[0].value() * g[k].value() - b * a[k]).abs());
            }
            rep.mu_eq = rep.mu_eq.max((muj[0].d1(c) - 2.0 * b * l[c]).abs());
        }
    }
    Ok(rep)
}

/// Result of fitting `μ` and `B` to a solution of the main equation.
#[derive(Clone, Debug)]
pub struct MuBFit {
    pub b: f64,
    /// Fit from the trace-free part of `∇λ = μg + BA` alone, when that part
    /// of `A` does not vanish on the sample.
    pub b_from_lambda_eq: Option<f64>,
    /// Spread of the pointwise estimates of `B` from the same equation.
    pub b_spread: f64,
    pub mu: TensorField,
    /// Residual of `∇λ = μg + BA` with the fitted values.
    pub residual: f64,
}

fn trace_free(x: &DMatrix<f64>) -> DMatrix<f64> {
    let m = x.nrows();
    x - DMatrix::identity(m, m) * (x.trace() / m as f64)
}

/// Least-squares fit of `(μ, B)`. Pointwise, `μ` is eliminated through the
/// trace, leaving `TF(∇λ) = B·TF(A)` (in a g-orthonormal frame) and the
/// gradient of the trace identity `d(tr ∇λ − B tr A)/m = 2Bλ`; both are
/// stacked into one scalar problem for `B`.
pub fn fit_mu_b(ks: &KahlerStructure, sol: &CProjSolution, points: &[Vec<f64>]) -> Result<MuBFit> {
    let m = ks.dim();
    let mf = m as f64;
    let (mut num, mut den, mut num2, mut den2) = (0.0, 0.0, 0.0, 0.0);
    let mut pointwise = Vec::new();
    let mut scale = 0.0f64;
    for p in points {
        let g = ks.metric.eval(p, 2)?;
        let gamma = chart::christoffel_jets(&g, m, p)?;
        let dl = chart::covariant_derivative_jets(&sol.lambda.eval(p, 2)?, (0, 1), m, &gamma);
        let (gi, _) = inverse(&trunc(&g, 1), m, p)?;
        let a = sol.a.eval(p, 1)?;
        let tr_e = trace(&gi, &dl, m);
        let tr_a = trace(&gi, &a, m);
        let e = linalg::orthonormal_frame(&linalg::values(&g, m))
            .ok_or_else(|| LabError::BadParams("the fit needs a definite metric".into()))?;
        let dlv = linalg::values(&dl, m);
        let dlv = (&dlv + dlv.transpose()) * 0.5;
        let tfe = trace_free(&(e.transpose() * dlv * &e));
        let tfa = trace_free(&(e.transpose() * linalg::values(&a, m) * &e));
        let (pn, pd) = (tfe.dot(&tfa), tfa.norm_squared());
        scale = scale.max(tfa.norm_squared()).max(tfe.norm_squared());
        num2 += pn;
        den2 += pd;
        pointwise.push((pn, pd));
        let l = sol.lambda.values(p)?;
        for c in 0..m {
            let av = tr_e.d1(c) / mf;
            let bv = tr_a.d1(c) / mf + 2.0 * l[c];
            num += av * bv;
            den += bv * bv;
            scale = scale.max(av * av);
        }
    }
    let tiny = 1e-24 * scale.max(1e-300);
    if den + den2 <= tiny {
        return Err(LabError::Underdetermined(
            "λ vanishes and A is proportional to g on the sample, so every B fits".into(),
        ));
    }
    let b = (num + num2) / (den + den2);
    let b_from_lambda_eq = (den2 > tiny).then(|| num2 / den2);
    let est: Vec<f64> = pointwise
        .iter()
        .filter(|(_, d)| *d > 1e-12 * den2.max(1e-300) / points.len() as f64)
        .map(|(n, d)| n / d)
        .collect();
    let b_spread = est.iter().fold(f64::NEG_INFINITY, |s, v| s.max(*v)) - est.iter().fold(f64::INFINITY, |s, v| s.min(*v));
    let mu = mu_field(ks, sol, b);
    let fitted = sol.clone().with_mu_b(mu.clone(), b);
    let residual = triple_residual(ks, &fitted, points)?.lambda_eq;
    Ok(MuBFit { b, b_from_lambda_eq, b_spread: if est.is_empty() { 0.0 } else { b_spread }, mu, residual })
}

/// `μ = (trace_g ∇λ − B trace_g A) / 2n`.
pub fn mu_field(ks: &KahlerStructure, sol: &CProjSolution, b: f64) -> TensorField {
    let m = ks.dim();
    let (g, l, a) = (ks.metric.field.clone(), sol.lambda.clone(), sol.a.clone());
    TensorField::new(m, (0, 0), move |p, order| {
        let gj = g.eval(p, order + 1)?;
        let gamma = chart::christoffel_jets(&gj, m, p)?;
        let dl = chart::covariant_derivative_jets(&l.eval(p, order + 1)?, (0, 1), m, &gamma);
        let (gi, _) = inverse(&trunc(&gj, order), m, p)?;
        let v = (trace(&gi, &dl, m) - trace(&gi, &a.eval(p, order)?, m) * b) * (1.0 / m as f64);
        Ok(vec![v])
    })
}

/// Residual of the third-order equation satisfied by `μ`:
/// `∇³μ(X,Y,Z) = B[2 dμ(X) g(Y,Z) + dμ(Z) g(X,Y) + dμ(Y) g(X,Z)
///  − dμ(JZ) g(JX,Y) − dμ(JY) g(JX,Z)]`, `X` the outermost derivative.
pub fn tanno_residual(ks: &KahlerStructure, mu: &TensorField, b: f64, points: &[Vec<f64>]) -> Result<f64> {
    let m = ks.dim();
    let mut r = 0.0f64;
    for p in points {
        let g = ks.metric.eval(p, 2)?;
        let gamma = chart::christoffel_jets(&g, m, p)?;
        let muj = mu.eval(p, 3)?;
        let dmu: Vec<Jet> = (0..m).map(|l| muj[0].partial(l)).collect();
        let h = chart::covariant_derivative_jets(&dmu, (0, 1), m, &gamma);
        let t = chart::covariant_derivative_jets(&h, (0, 2), m, &trunc(&gamma, 0));
        let gv = linalg::values(&g, m);
        let jv = ks.j_at(p)?;
        let jtg = jv.transpose() * &gv;
        let d: Vec<f64> = dmu.iter().map(Jet::value).collect();
        let dj = compose_j_values(&d, ks.complex.values(p)?.as_slice(), m);
        for c in 0..m {
            for y in 0..m {
                for a in 0..m {
                    let rhs = b
                        * (2.0 * d[c] * gv[(y, a)] + d[a] * gv[(c, y)] + d[y] * gv[(c, a)]
                            - dj[a] * jtg[(c, y)]
                            - dj[y] * jtg[(c, a)]);
                    r = r.max((t[(c * m + y) * m + a].value() - rhs).abs());
                }
            }
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn pts(ks: &KahlerStructure, n: usize) -> Vec<Vec<f64>> {
        ks.domain().halton(n, 11)
    }

    #[test]
    fn metric_is_a_solution() {
        let fs = catalog::fubini_study(1, 1.0).unwrap();
        let sol = CProjSolution::trivial(&fs.structure.metric, -1.0);
        let p = pts(&fs.structure, 6);
        assert!(triple_residual(&fs.structure, &sol, &p).unwrap().max() < 1e-12);
    }

    #[test]
    fn perturbed_metric_is_not_a_solution() {
        // in complex dimension one every hermitian A = h g is a solution
        let fs = catalog::fubini_study(2, 1.0).unwrap();
        let ks = &fs.structure;
        let mut c = vec![0.0; 16];
        c[0] = 0.3;
        c[5] = 0.3;
        let pert = TensorField::constant(4, (0, 2), c);
        let a = ks.metric.field.combine(1.0, &pert, 1.0);
        let sol = CProjSolution::from_tensor(&ks.metric, a);
        assert!(main_a_residual(ks, &sol, &pts(ks, 6)).unwrap() > 1e-3);
    }

    #[test]
    fn frame_norm_matches_metric_contraction() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let e = linalg::orthonormal_frame(&g).unwrap();
        let t = [1.0, -2.0, 0.5, 3.0];
        let gi = g.clone().try_inverse().unwrap();
        let mut direct = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        direct += t[a * 2 + b] * t[c * 2 + d] * gi[(a, c)] * gi[(b, d)];
                    }
                }
            }
        }
        assert!((frame_norm(&t, 2, &e) - direct.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn tanno_constant_and_random_cubic() {
        let flat = catalog::flat(2).unwrap();
        let ks = &flat.structure;
        let p = pts(ks, 4);
        let c = TensorField::constant(4, (0, 0), vec![2.5]);
        assert_eq!(tanno_residual(ks, &c, -1.0, &p).unwrap(), 0.0);
        let cubic = TensorField::from_coords(4, (0, 0), |x| vec![&x[0] * &x[1] * &x[2] + &x[3] * &x[3] * &x[3] * 0.7]);
        assert!(tanno_residual(ks, &cubic, -1.0, &p).unwrap() > 1e-3);
    }
}
