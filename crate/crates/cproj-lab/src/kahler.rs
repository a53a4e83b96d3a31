//! Kähler structures on a chart and residual checks for their identities.
//!
//! The Kähler form is `ω = g(·, J·)`, i.e. `ω_ij = g_ik J^k_j`.

use nalgebra::DMatrix;
use ndarray::Array4;
use serde::{Deserialize, Serialize};

use crate::chart::{self, Domain, MetricField, TensorField};
use crate::error::Result;
use crate::jet::Jet;
use crate::linalg;

#[derive(Clone, Debug)]
pub struct KahlerStructure {
    pub metric: MetricField,
    /// `J^i_j` at component `i * m + j`.
    pub complex: TensorField,
    /// A 1-form `τ` with `dτ = ω`, when one is known.
    pub potential: Option<TensorField>,
}

/// `J ∂x_a = ∂y_a` in coordinates ordered `(x_1, y_1, x_2, y_2, ...)`.
pub fn standard_complex_matrix(m: usize) -> DMatrix<f64> {
    assert!(m % 2 == 0);
    let mut j = DMatrix::zeros(m, m);
    for a in 0..m / 2 {
        j[(2 * a + 1, 2 * a)] = 1.0;
        j[(2 * a, 2 * a + 1)] = -1.0;
    }
    j
}

pub fn standard_complex_structure(m: usize) -> TensorField {
    let j = standard_complex_matrix(m);
    TensorField::constant(m, (1, 1), j.transpose().iter().copied().collect())
}

/// `ω_ij = g_ik J^k_j` on jets.
pub fn omega_jets(g: &[Jet], j: &[Jet], m: usize) -> Vec<Jet> {
    linalg::jet_matmul(g, j, m)
}

impl KahlerStructure {
    pub fn new(metric: MetricField, complex: TensorField, potential: Option<TensorField>) -> KahlerStructure {
        assert_eq!(complex.rank(), (1, 1));
        assert_eq!(complex.dim(), metric.dim());
        if let Some(t) = &potential {
            assert_eq!(t.rank(), (0, 1));
        }
        KahlerStructure { metric, complex, potential }
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn complex_dim(&self) -> usize {
        self.dim() / 2
    }

    pub fn domain(&self) -> &Domain {
        &self.metric.domain
    }

    pub fn omega(&self) -> TensorField {
        let (g, j) = (self.metric.field.clone(), self.complex.clone());
        let m = self.dim();
        TensorField::new(m, (0, 2), move |p, order| Ok(omega_jets(&g.eval(p, order)?, &j.eval(p, order)?, m)))
    }

    pub fn j_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.complex.matrix(p)
    }

    pub fn g_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.metric.at(p)
    }

    pub fn with_potential(&self, tau: TensorField) -> KahlerStructure {
        KahlerStructure::new(self.metric.clone(), self.complex.clone(), Some(tau))
    }

    /// Same structure with the metric multiplied by a constant.
    pub fn rescaled(&self, c: f64) -> KahlerStructure {
        let metric = MetricField::new(self.metric.field.scaled(c), self.metric.domain.clone());
        KahlerStructure::new(metric, self.complex.clone(), self.potential.as_ref().map(|t| t.scaled(c)))
    }

    /// Same fields on a smaller box.
    pub fn restricted(&self, domain: Domain) -> KahlerStructure {
        let metric = MetricField::new(self.metric.field.clone(), domain);
        KahlerStructure::new(metric, self.complex.clone(), self.potential.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KahlerReport {
    pub hermitian: f64,
    pub j_squared: f64,
    pub nijenhuis: f64,
    pub nabla_j: f64,
    pub d_omega: f64,
    pub d_tau_minus_omega: Option<f64>,
    /// Checked independently of `nabla_j`.
    pub nabla_omega: f64,
}

impl KahlerReport {
    pub fn max(&self) -> f64 {
        [self.hermitian, self.j_squared, self.nijenhuis, self.nabla_j, self.d_omega, self.nabla_omega]
            .into_iter()
            .chain(self.d_tau_minus_omega)
            .fold(0.0, f64::max)
    }
}

fn amax<'a, I: IntoIterator<Item = &'a f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, |s, v| s.max(v.abs()))
}

pub fn kahler_residuals(ks: &KahlerStructure, points: &[Vec<f64>]) -> Result<KahlerReport> {
    let m = ks.dim();
    let mut rep = KahlerReport {
        hermitian: 0.0,
        j_squared: 0.0,
        nijenhuis: 0.0,
        nabla_j: 0.0,
        d_omega: 0.0,
        d_tau_minus_omega: ks.potential.as_ref().map(|_| 0.0),
        nabla_omega: 0.0,
    };
    for p in points {
        let g = ks.metric.eval(p, 1)?;
        let j = ks.complex.eval(p, 1)?;
        let gv = linalg::values(&g, m);
        let jv = linalg::values(&j, m);
        rep.hermitian = rep.hermitian.max(linalg::max_abs(&(jv.transpose() * &gv * &jv - &gv)));
        rep.j_squared = rep.j_squared.max(linalg::max_abs(&(&jv * &jv + DMatrix::identity(m, m))));

        let dj = |l: usize, i: usize, k: usize| j[i * m + k].d1(l);
        for i in 0..m {
            for a in 0..m {
                for b in 0..m {
                    let mut v = 0.0;
                    for l in 0..m {
                        v += jv[(l, a)] * dj(l, i, b) - jv[(l, b)] * dj(l, i, a);
                        v -= jv[(i, l)] * (dj(a, l, b) - dj(b, l, a));
                    }
                    rep.nijenhuis = rep.nijenhuis.max(v.abs());
                }
            }
        }

        let gamma: Vec<Jet> =
            chart::christoffel_values(&g, m, p)?.into_iter().map(|v| Jet::constant(m, 0, v)).collect();
        let nj = chart::covariant_derivative_jets(&j, (1, 1), m, &gamma);
        rep.nabla_j = rep.nabla_j.max(amax(nj.iter().map(|x| x.coeffs()).flat_map(|c| c.iter())));

        let w = omega_jets(&g, &j, m);
        let nw = chart::covariant_derivative_jets(&w, (0, 2), m, &gamma);
        rep.nabla_omega = rep.nabla_omega.max(amax(nw.iter().flat_map(|x| x.coeffs().iter())));
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let v = w[b * m + c].d1(a) + w[c * m + a].d1(b) + w[a * m + b].d1(c);
                    rep.d_omega = rep.d_omega.max(v.abs());
                }
            }
        }
        if let Some(tau) = &ks.potential {
            let t = tau.eval(p, 1)?;
            let mut r: f64 = 0.0;
            for a in 0..m {
                for b in 0..m {
                    r = r.max((t[b].d1(a) - t[a].d1(b) - w[a * m + b].value()).abs());
                }
            }
            let prev = rep.d_tau_minus_omega.unwrap_or(0.0);
            rep.d_tau_minus_omega = Some(prev.max(r));
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EinsteinReport {
    pub residual: f64,
    pub scal_min: f64,
    pub scal_max: f64,
}

impl EinsteinReport {
    pub fn spread(&self) -> f64 {
        self.scal_max - self.scal_min
    }
}

pub fn einstein_residual(ks: &KahlerStructure, points: &[Vec<f64>]) -> Result<EinsteinReport> {
    let m = ks.dim() as f64;
    let mut rep = EinsteinReport { residual: 0.0, scal_min: f64::INFINITY, scal_max: f64::NEG_INFINITY };
    for p in points {
        let c = chart::riemann_suite(&ks.metric, p)?;
        let g = ks.g_at(p)?;
        rep.residual = rep.residual.max(linalg::max_abs(&(&c.ricci - &g * (c.scalar / m))));
        rep.scal_min = rep.scal_min.min(c.scalar);
        rep.scal_max = rep.scal_max.max(c.scalar);
    }
    Ok(rep)
}

/// The lowered model tensor of holomorphic sectional curvature one,
/// `H_{ijkl} = ¼(g_ik g_jl − g_il g_jk + ω_ik ω_jl − ω_il ω_jk + 2 ω_ij ω_kl)`,
/// matching `R_{ijkl} = g_ia R^a_{jkl}`.
pub fn model_tensor_lowered(g: &DMatrix<f64>, w: &DMatrix<f64>) -> Array4<f64> {
    let m = g.nrows();
    Array4::from_shape_fn((m, m, m, m), |(i, j, k, l)| {
        0.25 * (g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)] + w[(i, k)] * w[(j, l)] - w[(i, l)] * w[(j, k)]
            + 2.0 * w[(i, j)] * w[(k, l)])
    })
}

/// `H^a_{jkl}` with `H(∂_k, ∂_l)∂_j = H^a_{jkl} ∂_a`.
pub fn model_tensor(g: &DMatrix<f64>, jm: &DMatrix<f64>) -> Array4<f64> {
    let m = g.nrows();
    let w = g * jm;
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    Array4::from_shape_fn((m, m, m, m), |(a, j, k, l)| {
        0.25 * (g[(j, l)] * d(a, k) - g[(j, k)] * d(a, l) + w[(j, l)] * jm[(a, k)] - w[(j, k)] * jm[(a, l)]
            + 2.0 * w[(k, l)] * jm[(a, j)])
    })
}

fn lowered_pair(ks: &KahlerStructure, p: &[f64]) -> Result<(Array4<f64>, Array4<f64>)> {
    let c = chart::riemann_suite(&ks.metric, p)?;
    let g = ks.g_at(p)?;
    let w = &g * ks.j_at(p)?;
    Ok((c.lowered(&g), model_tensor_lowered(&g, &w)))
}

pub fn holomorphic_curvature_residual(ks: &KahlerStructure, c: f64, points: &[Vec<f64>]) -> Result<f64> {
    let mut r: f64 = 0.0;
    for p in points {
        let (rl, h) = lowered_pair(ks, p)?;
        r = r.max(rl.iter().zip(h.iter()).fold(0.0, |s, (a, b)| s.max((a - c * b).abs())));
    }
    Ok(r)
}

/// Least-squares constant `c` in `R ≈ c·H` over the sample.
pub fn fit_holomorphic_curvature(ks: &KahlerStructure, points: &[Vec<f64>]) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for p in points {
        let (rl, h) = lowered_pair(ks, p)?;
        num += rl.iter().zip(h.iter()).map(|(a, b)| a * b).sum::<f64>();
        den += h.iter().map(|b| b * b).sum::<f64>();
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(m: usize) -> KahlerStructure {
        let g = TensorField::constant(m, (0, 2), DMatrix::<f64>::identity(m, m).iter().copied().collect());
        KahlerStructure::new(MetricField::new(g, Domain::cube(m, 1.0)), standard_complex_structure(m), None)
    }

    #[test]
    fn flat_space_is_kahler() {
        let ks = flat(4);
        let pts = ks.domain().halton(5, 0);
        let r = kahler_residuals(&ks, &pts).unwrap();
        assert!(r.max() < 1e-12);
        assert!(r.d_tau_minus_omega.is_none());
        assert_eq!(holomorphic_curvature_residual(&ks, 0.0, &pts).unwrap(), 0.0);
    }

    #[test]
    fn standard_structure_orientation() {
        let j = standard_complex_matrix(2);
        // J ∂x = ∂y
        assert_eq!(j[(1, 0)], 1.0);
        let ks = flat(2);
        let w = ks.omega().matrix(&[0.0, 0.0]).unwrap();
        assert_eq!(w[(0, 1)], -1.0);
    }

    #[test]
    fn non_integrable_structure_is_detected() {
        // J twisted by a non-holomorphic rotation of the fibre coordinates
        let m = 4;
        let jf = TensorField::from_coords(m, (1, 1), |x| {
            let c = x[0].cos();
            let s = x[0].sin();
            let z = x[0].zero_like();
            let one = x[0].constant_like(1.0);
            // basis change P = rotation in (x2, y2) plane by angle x0
            let p = [
                [one.clone(), z.clone(), z.clone(), z.clone()],
                [z.clone(), one.clone(), z.clone(), z.clone()],
                [z.clone(), z.clone(), c.clone(), -&s],
                [z.clone(), z.clone(), s.clone(), c.clone()],
            ];
            // J' = P J0 P^{-1} with J0 mixing x1 <-> x2 planes
            let j0 = [[0.0, 0.0, -1.0, 0.0], [0.0, 0.0, 0.0, -1.0], [1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]];
            let mut out = Vec::new();
            for i in 0..4 {
                for k in 0..4 {
                    let mut acc = z.clone();
                    for a in 0..4 {
                        for b in 0..4 {
                            if j0[a][b] != 0.0 {
                                // P^{-1} = P^T for a rotation
                                acc += &(&p[i][a] * &p[k][b] * j0[a][b]);
                            }
                        }
                    }
                    out.push(acc);
                }
            }
            out
        });
        let base = flat(m);
        let ks = KahlerStructure::new(base.metric.clone(), jf, None);
        let r = kahler_residuals(&ks, &ks.domain().halton(5, 1)).unwrap();
        assert!(r.j_squared < 1e-12);
        assert!(r.nijenhuis > 1e-2);
    }
}
