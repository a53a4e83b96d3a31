//! The circle bundle `(P, h = θ² + g)` and the cone `(M̂, ĝ = dr² + r²h, Ĵ)`
//! over a Kähler chart with exact Kähler form `ω = dτ`.
//!
//! Coordinates are `(t, x¹..x^{2n})` on `P` and `(r, t, x¹..x^{2n})` on the
//! cone, with `θ = dt − 2τ`, `ξ = r∂_r`, `η = ∂_t` and horizontal lifts
//! `X^θ = X + 2τ(X) ∂_t`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chart::{self, Domain, MetricField, TensorField};
use crate::cproj::CProjSolution;
use crate::error::{LabError, Result};
use crate::jet::Jet;
use crate::kahler::{self, KahlerStructure};
use crate::linalg;
use crate::quadrature;

pub const R_RANGE: (f64, f64) = (0.5, 2.0);
pub const T_RANGE: (f64, f64) = (-1.0, 1.0);

#[derive(Clone, Debug)]
pub struct ConeBundle {
    pub base: KahlerStructure,
    pub tau: TensorField,
    /// `θ = dt − 2τ` on `P`.
    pub theta: TensorField,
    pub h: MetricField,
    pub cone: KahlerStructure,
}

/// `τ` with `dτ = ω` by the Poincaré homotopy about the domain center.
pub fn potential_from_omega(ks: &KahlerStructure) -> Result<TensorField> {
    let center = ks.domain().center();
    let tau = quadrature::homotopy_potential(&ks.omega(), center.clone(), quadrature::DEFAULT_NODES);
    tau.eval(&center, 1)?;
    Ok(tau)
}

/// Base-field jets at `p[skip..]`, embedded as jets in all `total` variables.
fn lifted(f: &TensorField, p: &[f64], order: usize, skip: usize, total: usize) -> Result<Vec<Jet>> {
    let m = f.dim();
    let map: Vec<usize> = (skip..skip + m).collect();
    Ok(f.eval(&p[skip..skip + m], order)?.iter().map(|j| j.embed(total, &map)).collect())
}

fn zeros(n: usize, order: usize, len: usize) -> Vec<Jet> {
    vec![Jet::constant(n, order, 0.0); len]
}

pub fn cone_domain(base: &Domain) -> Domain {
    Domain::new(vec![R_RANGE.0, T_RANGE.0], vec![R_RANGE.1, T_RANGE.1]).product(base)
}

pub fn p_domain(base: &Domain) -> Domain {
    Domain::new(vec![T_RANGE.0], vec![T_RANGE.1]).product(base)
}

/// Builds `P` and the cone. `tau` defaults to the structure's potential,
/// then to the homotopy potential.
pub fn conify(ks: &KahlerStructure, tau: Option<TensorField>) -> Result<ConeBundle> {
    let tau = match tau.or_else(|| ks.potential.clone()) {
        Some(t) => t,
        None => potential_from_omega(ks)?,
    };
    let m = ks.dim();
    let (mp, mc) = (m + 1, m + 2);

    let t1 = tau.clone();
    let theta = TensorField::new(mp, (0, 1), move |p, order| {
        let t = lifted(&t1, p, order, 1, mp)?;
        let mut out = zeros(mp, order, mp);
        out[0] = Jet::constant(mp, order, 1.0);
        for i in 0..m {
            out[1 + i] = &t[i] * -2.0;
        }
        Ok(out)
    });

    let (g1, t2) = (ks.metric.field.clone(), tau.clone());
    let h = TensorField::new(mp, (0, 2), move |p, order| {
        let g = lifted(&g1, p, order, 1, mp)?;
        let t = lifted(&t2, p, order, 1, mp)?;
        let mut out = zeros(mp, order, mp * mp);
        out[0] = Jet::constant(mp, order, 1.0);
        for i in 0..m {
            out[1 + i] = &t[i] * -2.0;
            out[(1 + i) * mp] = &t[i] * -2.0;
            for j in 0..m {
                out[(1 + i) * mp + 1 + j] = &g[i * m + j] + &(&t[i] * &t[j]) * 4.0;
            }
        }
        Ok(out)
    });
    let h = MetricField::new(h, p_domain(ks.domain()));

    let (g2, t3) = (ks.metric.field.clone(), tau.clone());
    let ghat = TensorField::new(mc, (0, 2), move |p, order| {
        let g = lifted(&g2, p, order, 2, mc)?;
        let t = lifted(&t3, p, order, 2, mc)?;
        let r = Jet::variable(mc, order, 0, p[0]);
        let r2 = r.square();
        let mut out = zeros(mc, order, mc * mc);
        out[0] = Jet::constant(mc, order, 1.0);
        out[mc + 1] = r2.clone();
        for i in 0..m {
            let v = &(&t[i] * &r2) * -2.0;
            out[mc + 2 + i] = v.clone();
            out[(2 + i) * mc + 1] = v;
            for j in 0..m {
                out[(2 + i) * mc + 2 + j] = (&g[i * m + j] + &(&t[i] * &t[j]) * 4.0) * &r2;
            }
        }
        Ok(out)
    });

    let (j1, t4) = (ks.complex.clone(), tau.clone());
    let jhat = TensorField::new(mc, (1, 1), move |p, order| {
        let j = lifted(&j1, p, order, 2, mc)?;
        let t = lifted(&t4, p, order, 2, mc)?;
        let r = Jet::variable(mc, order, 0, p[0]);
        let mut out = zeros(mc, order, mc * mc);
        out[mc] = r.recip();
        out[1] = -&r;
        for i in 0..m {
            out[2 + i] = &(&t[i] * &r) * 2.0;
            let mut tj = t[0].zero_like();
            for s in 0..m {
                tj += &(&t[s] * &j[s * m + i]);
            }
            out[mc + 2 + i] = tj * 2.0;
            for k in 0..m {
                out[(2 + k) * mc + 2 + i] = j[k * m + i].clone();
            }
        }
        Ok(out)
    });

    // τ̂ = −½ r² θ
    let t5 = tau.clone();
    let tau_hat = TensorField::new(mc, (0, 1), move |p, order| {
        let t = lifted(&t5, p, order, 2, mc)?;
        let r2 = Jet::variable(mc, order, 0, p[0]).square();
        let mut out = zeros(mc, order, mc);
        out[1] = &r2 * -0.5;
        for i in 0..m {
            out[2 + i] = &t[i] * &r2;
        }
        Ok(out)
    });

    let cone = KahlerStructure::new(MetricField::new(ghat, cone_domain(ks.domain())), jhat, Some(tau_hat));
    Ok(ConeBundle { base: ks.clone(), tau, theta, h, cone })
}

impl ConeBundle {
    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    /// `ξ = r ∂_r`.
    pub fn xi(&self) -> TensorField {
        let mc = self.base_dim() + 2;
        TensorField::new(mc, (1, 0), move |p, order| {
            let mut out = zeros(mc, order, mc);
            out[0] = Jet::variable(mc, order, 0, p[0]);
            Ok(out)
        })
    }

    /// `η = ∂_t` on the cone.
    pub fn eta(&self) -> TensorField {
        let mc = self.base_dim() + 2;
        let mut c = vec![0.0; mc];
        c[1] = 1.0;
        TensorField::constant(mc, (1, 0), c)
    }

    /// `(∂_i)^θ = ∂_i + 2τ_i ∂_t`, on the cone (`offset = 2`) or on `P` (`offset = 1`).
    fn lift(&self, i: usize, offset: usize) -> TensorField {
        let m = self.base_dim();
        let total = m + offset;
        let tau = self.tau.clone();
        TensorField::new(total, (1, 0), move |p, order| {
            let t = lifted(&tau, p, order, offset, total)?;
            let mut out = zeros(total, order, total);
            out[offset - 1] = &t[i] * 2.0;
            out[offset + i] = Jet::constant(total, order, 1.0);
            Ok(out)
        })
    }

    pub fn horizontal_lift(&self, i: usize) -> TensorField {
        self.lift(i, 2)
    }

    pub fn horizontal_lift_p(&self, i: usize) -> TensorField {
        self.lift(i, 1)
    }

    /// Sample points on the cone and on `P`.
    pub fn cone_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        self.cone.domain().halton(count, seed)
    }

    pub fn p_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        self.h.domain.halton(count, seed)
    }
}

/// Values of `(X^θ_i)^a` at a cone (`offset = 2`) or `P` (`offset = 1`) point.
fn lift_matrix(tau: &[f64], m: usize, offset: usize) -> DMatrix<f64> {
    // column i is the lift of ∂_i
    let total = m + offset;
    DMatrix::from_fn(total, m, |a, i| {
        if a == offset - 1 {
            2.0 * tau[i]
        } else if a == offset + i {
            1.0
        } else {
            0.0
        }
    })
}

/// `(∇V)[c, a] = (∇_c V)^a` at `p` for a vector field `V`.
fn nabla_vector(metric: &MetricField, v: &TensorField, p: &[f64]) -> Result<DMatrix<f64>> {
    let m = metric.dim();
    let g = metric.eval(p, 1)?;
    let gamma: Vec<Jet> = chart::christoffel_values(&g, m, p)?.into_iter().map(|x| Jet::constant(m, 0, x)).collect();
    let d = chart::covariant_derivative_jets(&v.eval(p, 1)?, (1, 0), m, &gamma);
    Ok(DMatrix::from_fn(m, m, |c, a| d[c * m + a].value()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ConnectionReport {
    pub nabla_xi: f64,
    pub nabla_eta: f64,
    pub xi_lift: f64,
    pub eta_lift: f64,
    pub lift_lift: f64,
    pub p_eta_eta: f64,
    pub p_eta_lift: f64,
    pub p_lift_eta: f64,
    pub p_lift_lift: f64,
}

impl ConnectionReport {
    pub fn max(&self) -> f64 {
        [
            self.nabla_xi,
            self.nabla_eta,
            self.xi_lift,
            self.eta_lift,
            self.lift_lift,
            self.p_eta_eta,
            self.p_eta_lift,
            self.p_lift_eta,
            self.p_lift_lift,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn amax<R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::RawStorage<f64, R, C>>(v: &nalgebra::Matrix<f64, R, C, S>) -> f64 {
    v.iter().fold(0.0f64, |s, x| s.max(x.abs()))
}

/// Compares the Levi-Civita connections of `ĝ` and `h` with their closed
/// forms. `points` are cone points; the `P` checks use their `(t, x)` part.
pub fn connection_residuals(cb: &ConeBundle, points: &[Vec<f64>]) -> Result<ConnectionReport> {
    let m = cb.base_dim();
    let (mp, mc) = (m + 1, m + 2);
    let mut rep = ConnectionReport::default();
    let lifts: Vec<TensorField> = (0..m).map(|i| cb.horizontal_lift(i)).collect();
    let lifts_p: Vec<TensorField> = (0..m).map(|i| cb.horizontal_lift_p(i)).collect();
    let eta_p = {
        let mut c = vec![0.0; mp];
        c[0] = 1.0;
        TensorField::constant(mp, (1, 0), c)
    };
    for q in points {
        let x = &q[2..];
        let pp = &q[1..];
        let r = q[0];
        let jh = cb.cone.j_at(q)?;
        let tau = cb.tau.values(x)?;
        let jb = cb.base.complex.values(x)?;
        let gb = cb.base.g_at(x)?;
        let wb = &gb * cb.base.j_at(x)?;
        let gamma = chart::christoffel(&cb.base.metric, x)?;
        let xl = lift_matrix(&tau, m, 2);
        let xl_p = lift_matrix(&tau, m, 1);
        let mut xi = nalgebra::DVector::zeros(mc);
        xi[0] = r;
        let mut eta = nalgebra::DVector::zeros(mc);
        eta[1] = 1.0;

        let nxi = nabla_vector(&cb.cone.metric, &cb.xi(), q)?;
        rep.nabla_xi = rep.nabla_xi.max(amax(&(nxi - DMatrix::identity(mc, mc))));
        // (∇η)[c, a] = Ĵ^a_c
        let neta = nabla_vector(&cb.cone.metric, &cb.eta(), q)?;
        rep.nabla_eta = rep.nabla_eta.max(amax(&(neta - jh.transpose())));
        let mut nl = Vec::with_capacity(m);
        for (i, l) in lifts.iter().enumerate() {
            let d = nabla_vector(&cb.cone.metric, l, q)?;
            let col = xl.column(i).into_owned();
            rep.xi_lift = rep.xi_lift.max(amax(&(d.transpose() * &xi - &col)));
            rep.eta_lift = rep.eta_lift.max(amax(&(d.transpose() * &eta - &jh * &col)));
            nl.push(d);
        }
        for i in 0..m {
            for j in 0..m {
                let lhs = nl[j].transpose() * xl.column(i);
                let mut rhs = &eta * wb[(i, j)] - &xi * gb[(i, j)];
                for k in 0..m {
                    rhs += xl.column(k) * gamma[[k, i, j]];
                }
                rep.lift_lift = rep.lift_lift.max(amax(&(lhs - rhs)));
            }
        }

        let mut eta_v = nalgebra::DVector::zeros(mp);
        eta_v[0] = 1.0;
        let neta_p = nabla_vector(&cb.h, &eta_p, pp)?;
        rep.p_eta_eta = rep.p_eta_eta.max(amax(&(neta_p.transpose() * &eta_v)));
        // (JX_i)^θ = J^k_i X_k^θ
        let jl = &xl_p * DMatrix::from_fn(m, m, |k, i| jb[k * m + i]);
        let nlp: Vec<DMatrix<f64>> = lifts_p.iter().map(|l| nabla_vector(&cb.h, l, pp)).collect::<Result<_>>()?;
        for i in 0..m {
            let col = jl.column(i).into_owned();
            rep.p_eta_lift = rep.p_eta_lift.max(amax(&(nlp[i].transpose() * &eta_v - &col)));
            rep.p_lift_eta = rep.p_lift_eta.max(amax(&(neta_p.transpose() * xl_p.column(i) - &col)));
            for j in 0..m {
                let lhs = nlp[j].transpose() * xl_p.column(i);
                let mut rhs = &eta_v * wb[(i, j)];
                for k in 0..m {
                    rhs += xl_p.column(k) * gamma[[k, i, j]];
                }
                rep.p_lift_lift = rep.p_lift_lift.max(amax(&(lhs - rhs)));
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CurvatureReport {
    /// `R̂(·,·)ξ` and `R̂(·,·)η`.
    pub kills_xi_eta: f64,
    /// `R̂(X^θ, Y^θ)Z^θ − ((R − 4H)(X, Y)Z)^θ`.
    pub horizontal: f64,
    /// `R̂(X, Y)Z − R(h)(X, Y)Z + h(Z, Y)X − h(Z, X)Y` for `X, Y, Z` tangent to `P`.
    pub cone_over_p: f64,
    /// Largest `|R̂^a_{bcd}|`.
    pub norm: f64,
}

impl CurvatureReport {
    pub fn max_residual(&self) -> f64 {
        self.kills_xi_eta.max(self.horizontal).max(self.cone_over_p)
    }
}

pub fn cone_curvature_closed_form(cb: &ConeBundle, points: &[Vec<f64>]) -> Result<CurvatureReport> {
    let m = cb.base_dim();
    let (mp, mc) = (m + 1, m + 2);
    let mut rep = CurvatureReport::default();
    for q in points {
        let x = &q[2..];
        let pp = &q[1..];
        let rh = chart::riemann_suite(&cb.cone.metric, q)?.riemann;
        rep.norm = rep.norm.max(rh.iter().fold(0.0f64, |s, v| s.max(v.abs())));
        for a in 0..mc {
            for c in 0..mc {
                for d in 0..mc {
                    let v = (q[0] * rh[[a, 0, c, d]]).abs().max(rh[[a, 1, c, d]].abs());
                    rep.kills_xi_eta = rep.kills_xi_eta.max(v);
                }
            }
        }
        let tau = cb.tau.values(x)?;
        let xl = lift_matrix(&tau, m, 2);
        let rb = chart::riemann_suite(&cb.base.metric, x)?.riemann;
        let hm = kahler::model_tensor(&cb.base.g_at(x)?, &cb.base.j_at(x)?);
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    for a in 0..mc {
                        let mut lhs = 0.0;
                        for b in 0..mc {
                            for c in 0..mc {
                                for d in 0..mc {
                                    let w = xl[(b, j)] * xl[(c, k)] * xl[(d, l)];
                                    if w != 0.0 {
                                        lhs += rh[[a, b, c, d]] * w;
                                    }
                                }
                            }
                        }
                        let rhs: f64 = (0..m).map(|e| (rb[[e, j, k, l]] - 4.0 * hm[[e, j, k, l]]) * xl[(a, e)]).sum();
                        rep.horizontal = rep.horizontal.max((lhs - rhs).abs());
                    }
                }
            }
        }
        let rp = chart::riemann_suite(&cb.h, pp)?.riemann;
        let hv = cb.h.at(pp)?;
        for a in 0..mc {
            for b in 0..mp {
                for c in 0..mp {
                    for d in 0..mp {
                        let lhs = rh[[a, b + 1, c + 1, d + 1]];
                        let rhs = if a == 0 {
                            0.0
                        } else {
                            let ap = a - 1;
                            let dl = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
                            rp[[ap, b, c, d]] - (hv[(b, d)] * dl(ap, c) - hv[(b, c)] * dl(ap, d))
                        };
                        rep.cone_over_p = rep.cone_over_p.max((lhs - rhs).abs());
                    }
                }
            }
        }
    }
    Ok(rep)
}

/// `Â = μ dr² − r dr⊙λ + r²(μθ² + θ⊙λJ + A)` for a solution with `B = −1`.
pub fn lift_solution(cb: &ConeBundle, sol: &CProjSolution) -> Result<TensorField> {
    let b = sol.b.ok_or(LabError::MissingB)?;
    if (b + 1.0).abs() > 1e-6 {
        return Err(LabError::WrongB(b));
    }
    let mu = sol.mu.clone().ok_or(LabError::MissingMu)?;
    let m = cb.base_dim();
    let mc = m + 2;
    let (a, l, j, tau) = (sol.a.clone(), sol.lambda.clone(), cb.base.complex.clone(), cb.tau.clone());
    Ok(TensorField::new(mc, (0, 2), move |p, order| {
        let av = lifted(&a, p, order, 2, mc)?;
        let lv = lifted(&l, p, order, 2, mc)?;
        let jv = lifted(&j, p, order, 2, mc)?;
        let tv = lifted(&tau, p, order, 2, mc)?;
        let muv = lifted(&mu, p, order, 2, mc)?.remove(0);
        let lj = crate::cproj::compose_j(&lv, &jv, m);
        let r = Jet::variable(mc, order, 0, p[0]);
        let r2 = r.square();
        let mut out = zeros(mc, order, mc * mc);
        out[0] = muv.clone();
        out[mc + 1] = &muv * &r2;
        for i in 0..m {
            let ri = -(&r * &lv[i]);
            out[2 + i] = ri.clone();
            out[(2 + i) * mc] = ri;
            let ti = (&(&muv * &tv[i]) * -2.0 + &lj[i]) * &r2;
            out[mc + 2 + i] = ti.clone();
            out[(2 + i) * mc + 1] = ti;
            for k in 0..m {
                let v = &(&(&muv * &tv[i]) * &tv[k]) * 4.0 - &(&tv[i] * &lj[k]) * 2.0 - &(&lj[i] * &tv[k]) * 2.0
                    + &av[i * m + k];
                out[(2 + i) * mc + 2 + k] = v * &r2;
            }
        }
        Ok(out)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LiftReport {
    pub parallel: f64,
    pub symmetric: f64,
    pub hermitian: f64,
}

pub fn lift_residuals(cb: &ConeBundle, a_hat: &TensorField, points: &[Vec<f64>]) -> Result<LiftReport> {
    let mut rep = LiftReport::default();
    for q in points {
        let d = chart::covariant_derivative(a_hat, &cb.cone.metric, q)?;
        rep.parallel = rep.parallel.max(d.iter().fold(0.0f64, |s, v| s.max(v.abs())));
        let a = a_hat.matrix(q)?;
        let j = cb.cone.j_at(q)?;
        rep.symmetric = rep.symmetric.max(amax(&(&a - a.transpose())));
        rep.hermitian = rep.hermitian.max(amax(&(j.transpose() * &a * &j - &a)));
    }
    Ok(rep)
}

/// Reads `(A, λ, μ)` back from `Â` at a cone point:
/// `μ = Â(∂_r, ∂_r)`, `λ_i = −Â(∂_r, X_i^θ)/r`, `A_ij = Â(X_i^θ, X_j^θ)/r²`.
pub fn read_off(cb: &ConeBundle, a_hat: &TensorField, q: &[f64]) -> Result<(DMatrix<f64>, Vec<f64>, f64)> {
    let m = cb.base_dim();
    let a = a_hat.matrix(q)?;
    let xl = lift_matrix(&cb.tau.values(&q[2..])?, m, 2);
    let r = q[0];
    let mu = a[(0, 0)];
    let row = a.row(0) * &xl;
    let lambda = (0..m).map(|i| -row[i] / r).collect();
    let am = xl.transpose() * &a * &xl / (r * r);
    Ok((am, lambda, mu))
}

/// A candidate solution `(L, σ, ρ)` of the system on `(P, h)`.
#[derive(Clone, Debug)]
pub struct SasakiTriple {
    pub l: TensorField,
    pub sigma: TensorField,
    pub rho: TensorField,
}

impl SasakiTriple {
    /// `L = μθ² + θ⊗λJ + λJ⊗θ + A`, `σ = λ`, `ρ = μ`.
    pub fn from_solution(cb: &ConeBundle, sol: &CProjSolution) -> Result<SasakiTriple> {
        let mu = sol.mu.clone().ok_or(LabError::MissingMu)?;
        let m = cb.base_dim();
        let mp = m + 1;
        let (a, l, j, tau) = (sol.a.clone(), sol.lambda.clone(), cb.base.complex.clone(), cb.tau.clone());
        let mu2 = mu.clone();
        let lt = TensorField::new(mp, (0, 2), move |p, order| {
            let av = lifted(&a, p, order, 1, mp)?;
            let lv = lifted(&l, p, order, 1, mp)?;
            let jv = lifted(&j, p, order, 1, mp)?;
            let tv = lifted(&tau, p, order, 1, mp)?;
            let muv = lifted(&mu2, p, order, 1, mp)?.remove(0);
            let lj = crate::cproj::compose_j(&lv, &jv, m);
            let mut out = zeros(mp, order, mp * mp);
            out[0] = muv.clone();
            for i in 0..m {
                let ti = &(&muv * &tv[i]) * -2.0 + &lj[i];
                out[1 + i] = ti.clone();
                out[(1 + i) * mp] = ti;
                for k in 0..m {
                    out[(1 + i) * mp + 1 + k] = &(&(&muv * &tv[i]) * &tv[k]) * 4.0
                        - &(&tv[i] * &lj[k]) * 2.0
                        - &(&lj[i] * &tv[k]) * 2.0
                        + &av[i * m + k];
                }
            }
            Ok(out)
        });
        let l2 = sol.lambda.clone();
        let sigma = TensorField::new(mp, (0, 1), move |p, order| {
            let lv = lifted(&l2, p, order, 1, mp)?;
            Ok(std::iter::once(Jet::constant(mp, order, 0.0)).chain(lv).collect())
        });
        let rho = TensorField::new(mp, (0, 0), move |p, order| lifted(&mu, p, order, 1, mp));
        Ok(SasakiTriple { l: lt, sigma, rho })
    }

    /// `(h, 0, 1)`.
    pub fn metric(cb: &ConeBundle) -> SasakiTriple {
        let mp = cb.base_dim() + 1;
        SasakiTriple {
            l: cb.h.field.clone(),
            sigma: TensorField::zero(mp, (0, 1)),
            rho: TensorField::constant(mp, (0, 0), vec![1.0]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SasakiReport {
    /// Residuals of `∇L = h⊙σ`, `∇σ = ρh − L`, `dρ = −2σ`.
    pub system: [f64; 3],
    /// `σ(η)`, `σ((JX)^θ) − L(η, X^θ)`, `L((JX)^θ, (JY)^θ) − L(X^θ, Y^θ)`, `ρ − L(η, η)`.
    pub dt_conditions: [f64; 4],
    /// Largest `t`-derivative of the components of `L`, `σ`, `ρ`.
    pub dt_derivative: f64,
}

impl SasakiReport {
    pub fn system_max(&self) -> f64 {
        self.system.iter().fold(0.0f64, |s, v| s.max(*v))
    }

    pub fn conditions_max(&self) -> f64 {
        self.dt_conditions.iter().fold(0.0f64, |s, v| s.max(*v))
    }

    /// Invariance and the algebraic conditions agree at tolerance `tol`.
    pub fn invariance_consistent(&self, tol: f64) -> bool {
        (self.dt_derivative < tol) == (self.conditions_max() < tol)
    }
}

/// `points` are points of `P`, i.e. `(t, x)`.
pub fn sasaki_system_residual(cb: &ConeBundle, triple: &SasakiTriple, points: &[Vec<f64>]) -> Result<SasakiReport> {
    let m = cb.base_dim();
    let mp = m + 1;
    let mut rep = SasakiReport::default();
    for p in points {
        let hj = cb.h.eval(p, 1)?;
        let gamma: Vec<Jet> =
            chart::christoffel_values(&hj, mp, p)?.into_iter().map(|x| Jet::constant(mp, 0, x)).collect();
        let h = linalg::values(&hj, mp);
        let lj = triple.l.eval(p, 1)?;
        let sj = triple.sigma.eval(p, 1)?;
        let rj = triple.rho.eval(p, 1)?;
        let nl = chart::covariant_derivative_jets(&lj, (0, 2), mp, &gamma);
        let ns = chart::covariant_derivative_jets(&sj, (0, 1), mp, &gamma);
        let s: Vec<f64> = sj.iter().map(Jet::value).collect();
        let rho = rj[0].value();
        for z in 0..mp {
            for x in 0..mp {
                for y in 0..mp {
                    let rhs = h[(z, x)] * s[y] + h[(z, y)] * s[x];
                    rep.system[0] = rep.system[0].max((nl[(z * mp + x) * mp + y].value() - rhs).abs());
                }
                let rhs = rho * h[(z, x)] - lj[z * mp + x].value();
                rep.system[1] = rep.system[1].max((ns[z * mp + x].value() - rhs).abs());
            }
            rep.system[2] = rep.system[2].max((rj[0].d1(z) + 2.0 * s[z]).abs());
        }
        let dt = lj.iter().chain(&sj).chain(&rj).fold(0.0f64, |a, j| a.max(j.d1(0).abs()));
        rep.dt_derivative = rep.dt_derivative.max(dt);

        let x = &p[1..];
        let xl = lift_matrix(&cb.tau.values(x)?, m, 1);
        let jb = cb.base.complex.values(x)?;
        let jl = &xl * DMatrix::from_fn(m, m, |k, i| jb[k * m + i]);
        let l = linalg::values(&lj, mp);
        let sv = nalgebra::DVector::from_vec(s.clone());
        rep.dt_conditions[0] = rep.dt_conditions[0].max(s[0].abs());
        let lex = l.row(0) * &xl;
        let sjl = sv.transpose() * &jl;
        rep.dt_conditions[1] = rep.dt_conditions[1].max(amax(&(sjl - lex).transpose()));
        let herm = jl.transpose() * &l * &jl - xl.transpose() * &l * &xl;
        rep.dt_conditions[2] = rep.dt_conditions[2].max(amax(&herm));
        rep.dt_conditions[3] = rep.dt_conditions[3].max((rho - l[(0, 0)]).abs());
    }
    Ok(rep)
}

/// Builds the cone with `τ + df` and compares it, through the shift
/// `(r, t, x) ↦ (r, t − 2f(x), x)`, with the cone for `τ`: returns the largest
/// deviation of `ĝ` and, when given, of the lifted solution.
pub fn gauge_residual(
    cb: &ConeBundle,
    f: &TensorField,
    sol: Option<&CProjSolution>,
    points: &[Vec<f64>],
) -> Result<f64> {
    let shifted = conify(&cb.base, Some(cb.tau.combine(1.0, &f.differential(), 1.0)))?;
    let m = cb.base_dim();
    let mc = m + 2;
    let lifts = match sol {
        Some(s) => Some((lift_solution(cb, s)?, lift_solution(&shifted, s)?)),
        None => None,
    };
    let mut r = 0.0f64;
    for q in points {
        let fx = f.eval(&q[2..], 1)?;
        let mut image = q.clone();
        image[1] -= 2.0 * fx[0].value();
        let mut jac = DMatrix::identity(mc, mc);
        for i in 0..m {
            jac[(1, 2 + i)] = -2.0 * fx[0].d1(i);
        }
        let pull = |t: &TensorField| -> Result<DMatrix<f64>> { Ok(jac.transpose() * t.matrix(&image)? * &jac) };
        r = r.max(amax(&(pull(&cb.cone.metric.field)? - shifted.cone.metric.field.matrix(q)?)));
        if let Some((a, b)) = &lifts {
            r = r.max(amax(&(pull(a)? - b.matrix(q)?)));
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn flat_line_cone_is_kahler_but_curved() {
        let e = catalog::flat(1).unwrap();
        let cb = conify(&e.structure, None).unwrap();
        let pts = cb.cone_points(4, 3);
        assert!(kahler::kahler_residuals(&cb.cone, &pts).unwrap().max() < 1e-9);
        let c = cone_curvature_closed_form(&cb, &pts).unwrap();
        assert!(c.norm > 1e-2);
        assert!(c.max_residual() < 1e-8, "{c:?}");
    }

    #[test]
    fn metric_lifts_to_cone_metric() {
        let e = catalog::fubini_study(1, 1.0).unwrap();
        let cb = conify(&e.structure, None).unwrap();
        let a = lift_solution(&cb, e.solution("metric").unwrap()).unwrap();
        for q in cb.cone_points(3, 1) {
            assert!(amax(&(a.matrix(&q).unwrap() - cb.cone.g_at(&q).unwrap())) < 1e-13);
        }
        let zero_b = CProjSolution::trivial(&e.structure.metric, 0.0);
        assert!(matches!(lift_solution(&cb, &zero_b), Err(LabError::WrongB(_))));
    }

    #[test]
    fn metric_triple_solves_the_sasaki_system() {
        let e = catalog::flat(2).unwrap();
        let cb = conify(&e.structure, None).unwrap();
        let rep = sasaki_system_residual(&cb, &SasakiTriple::metric(&cb), &cb.p_points(4, 2)).unwrap();
        assert!(rep.system_max() < 1e-12 && rep.conditions_max() < 1e-12 && rep.dt_derivative == 0.0);
    }
}
