//! Moving to a metric in the same c-projective class with `B = −1`.

use nalgebra::{DMatrix, DVector};

use super::{compose_j, inverse, mu_field, transfer_solution, CProjSolution};
use crate::chart::{MetricField, TensorField};
use crate::error::{LabError, Result};
use crate::jet::Jet;
use crate::kahler::KahlerStructure;
use crate::quadrature;

#[derive(Clone, Debug)]
pub enum Normalization {
    /// `B` is already `−1`.
    Unchanged,
    /// `B ∉ {0, −1}`: the metric is multiplied by `−B`.
    Rescaled { factor: f64, structure: KahlerStructure, solution: CProjSolution },
    /// `B = 0`: a different metric of the class is used.
    Deformed(Box<Deformation>),
}

#[derive(Clone, Debug)]
pub struct Deformation {
    pub t0: f64,
    /// `B̃(t₀)`, mean over the sample.
    pub b_tilde: f64,
    pub b_tilde_spread: f64,
    /// Worst `|f′(0) + 1|` over the sample, by central differences.
    pub f_prime_zero_error: f64,
    /// The solution with `μ = 1` the family is built from.
    pub base: CProjSolution,
    pub a_t0: TensorField,
    /// `g̃_{t₀}` before rescaling.
    pub g_t0: MetricField,
    /// `(−B̃(t₀) g̃_{t₀}, J)`.
    pub structure: KahlerStructure,
}

impl Deformation {
    /// A solution of the original metric, carried to the new one, with
    /// `μ` refitted for `B = −1`.
    pub fn transfer(&self, ks: &KahlerStructure, other: &CProjSolution) -> CProjSolution {
        let s = transfer_solution(ks, &self.a_t0, &self.structure.metric, other);
        let mu = mu_field(&self.structure, &s, -1.0);
        s.with_mu_b(mu, -1.0)
    }
}

fn scale_solution(sol: &CProjSolution, c: f64) -> CProjSolution {
    let mut out = CProjSolution::new(sol.a.scaled(c), sol.lambda.scaled(c));
    if let (Some(mu), Some(b)) = (&sol.mu, sol.b) {
        out = out.with_mu_b(mu.scaled(c), b);
    }
    out
}

/// `A(t) = g + t (λ⊗λ + λJ⊗λJ)`.
fn family(ks: &KahlerStructure, lambda: &TensorField, t: f64) -> TensorField {
    let m = ks.dim();
    let (g, l, j) = (ks.metric.field.clone(), lambda.clone(), ks.complex.clone());
    TensorField::new(m, (0, 2), move |p, order| {
        let gj = g.eval(p, order)?;
        let lj = l.eval(p, order)?;
        let lj2 = compose_j(&lj, &j.eval(p, order)?, m);
        Ok((0..m * m)
            .map(|k| {
                let (a, b) = (k / m, k % m);
                &gj[k] + (&lj[a] * &lj[b] + &lj2[a] * &lj2[b]) * t
            })
            .collect())
    })
}

/// Dispatches on `B`. With `B = 0` the solution is first replaced by one
/// with `μ = 1` (through `σ = A g⁻¹λ − fλ + f′ λJ` when `μ = 0`), then the
/// family `A(t)` gives a metric with `B̃(t₀) ≠ 0`, which is rescaled to `−1`.
pub fn normalize_b(ks: &KahlerStructure, sol: &CProjSolution, points: &[Vec<f64>]) -> Result<Normalization> {
    let b = sol.b.ok_or(LabError::MissingB)?;
    if (b + 1.0).abs() < 1e-12 {
        return Ok(Normalization::Unchanged);
    }
    if b.abs() > 1e-10 {
        let c = -b;
        let structure = ks.rescaled(c);
        let mu = sol.mu.as_ref().ok_or(LabError::MissingMu)?.scaled(1.0 / c);
        let solution = CProjSolution::new(sol.a.scaled(c), sol.lambda.clone()).with_mu_b(mu, -1.0);
        return Ok(Normalization::Rescaled { factor: c, structure, solution });
    }
    let center = ks.domain().center();
    if !ks.metric.is_definite_at(&center)? {
        return Err(LabError::BadParams("the B = 0 construction is only implemented for definite metrics".into()));
    }
    let lmax = points.iter().try_fold(0.0f64, |s, p| {
        Ok::<f64, LabError>(sol.lambda.values(p)?.iter().fold(s, |s, v| s.max(v.abs())))
    })?;
    if lmax < 1e-12 {
        return Err(LabError::LambdaVanishes);
    }
    let mu = match &sol.mu {
        Some(mu) => mu.clone(),
        None => mu_field(ks, sol, 0.0),
    };
    let mu0 = mu.scalar_value(&center)?;
    let base = if mu0.abs() > 1e-10 {
        scale_solution(&sol.clone().with_mu_b(mu, 0.0), 1.0 / mu0)
    } else {
        sigma_solution(ks, sol)?
    };

    let norm2 = |p: &[f64]| -> Result<f64> {
        let g = ks.g_at(p)?;
        let l = DVector::from_vec(base.lambda.values(p)?);
        let gi = g.try_inverse().ok_or(LabError::DegenerateMetric { point: p.to_vec(), det: 0.0 })?;
        Ok(l.dot(&(gi * &l)))
    };
    let bt = |p: &[f64], t: f64| -> Result<f64> {
        let g = ks.g_at(p)?;
        let gi = g.clone().try_inverse().ok_or(LabError::DegenerateMetric { point: p.to_vec(), det: 0.0 })?;
        let at: DMatrix<f64> = family(ks, &base.lambda, t).matrix(p)?;
        let lam = DVector::from_vec(base.lambda.values(p)?);
        let big = &gi * &lam;
        let l = &gi * &at;
        let det = l.determinant();
        let li = l.try_inverse().ok_or(LabError::DegenerateSolution(det))?;
        let f = t * t * (li * &big).dot(&(&g * &big)) - t;
        Ok(det.sqrt() * f)
    };
    let mut big = 0.0f64;
    let mut fp = 0.0f64;
    let h = 1e-5;
    for p in points {
        big = big.max(norm2(p)?);
        let d = (bt(p, h)? - bt(p, -h)?) / (2.0 * h);
        fp = fp.max((d + 1.0).abs());
    }
    let t0 = 0.5 / big;
    let vals: Vec<f64> = points.iter().map(|p| bt(p, t0)).collect::<Result<_>>()?;
    let b_tilde = vals.iter().sum::<f64>() / vals.len() as f64;
    let spread = vals.iter().fold(f64::NEG_INFINITY, |s, v| s.max(*v)) - vals.iter().fold(f64::INFINITY, |s, v| s.min(*v));
    if b_tilde.abs() < 1e-12 {
        return Err(LabError::DegenerateSolution(b_tilde));
    }
    let a_t0 = family(ks, &base.lambda, t0);
    let g_t0 = super::metric_from_solution(&ks.metric, &a_t0, points)?;
    let metric = MetricField::new(g_t0.field.scaled(-b_tilde), ks.domain().clone());
    let structure = KahlerStructure::new(metric, ks.complex.clone(), None);
    Ok(Normalization::Deformed(Box::new(Deformation {
        t0,
        b_tilde,
        b_tilde_spread: spread,
        f_prime_zero_error: fp,
        base,
        a_t0,
        g_t0,
        structure,
    })))
}

/// For `B = 0`, `μ = 0` (so `λ` is parallel): `σ = A g⁻¹λ − fλ + f′ λJ` has
/// `∇σ = c g` with `c = |λ|²`, and `(σ⊗σ + σJ⊗σJ, cσ, c²)` solves the system
/// with `B = 0`. Returned scaled to `μ = 1`.
fn sigma_solution(ks: &KahlerStructure, sol: &CProjSolution) -> Result<CProjSolution> {
    let m = ks.dim();
    let center = ks.domain().center();
    let lj_field = {
        let (l, j) = (sol.lambda.clone(), ks.complex.clone());
        TensorField::new(m, (0, 1), move |p, order| Ok(compose_j(&l.eval(p, order)?, &j.eval(p, order)?, m)))
    };
    let f = quadrature::ray_primitive(&sol.lambda, center.clone(), quadrature::DEFAULT_NODES);
    let f2 = quadrature::ray_primitive(&lj_field, center.clone(), quadrature::DEFAULT_NODES);
    let c = {
        let g = ks.g_at(&center)?;
        let l = DVector::from_vec(sol.lambda.values(&center)?);
        l.dot(&(g.try_inverse().ok_or(LabError::DegenerateMetric { point: center.clone(), det: 0.0 })? * &l))
    };
    let (g, a, l) = (ks.metric.field.clone(), sol.a.clone(), sol.lambda.clone());
    let sigma = TensorField::new(m, (0, 1), move |p, order| {
        let (gi, _) = inverse(&g.eval(p, order)?, m, p)?;
        let aj = a.eval(p, order)?;
        let lv = l.eval(p, order)?;
        let big = super::raise(&gi, &lv, m);
        let fv = f.eval(p, order)?;
        let f2v = f2.eval(p, order)?;
        let ljv = lj_field.eval(p, order)?;
        Ok((0..m)
            .map(|x| {
                let mut acc: Jet = &fv[0] * &lv[x] * -1.0 + &f2v[0] * &ljv[x];
                for y in 0..m {
                    acc += &(&aj[x * m + y] * &big[y]);
                }
                acc
            })
            .collect())
    });
    let (s, j) = (sigma.clone(), ks.complex.clone());
    let a_new = TensorField::new(m, (0, 2), move |p, order| {
        let sv = s.eval(p, order)?;
        let sj = compose_j(&sv, &j.eval(p, order)?, m);
        Ok((0..m * m)
            .map(|k| (&sv[k / m] * &sv[k % m] + &sj[k / m] * &sj[k % m]) * (1.0 / (c * c)))
            .collect())
    });
    Ok(CProjSolution::new(a_new, sigma.scaled(1.0 / c)).with_mu_b(TensorField::constant(m, (0, 0), vec![1.0]), 0.0))
}
