//! Solutions of the main equation as hamiltonian and conformal Killing 2-forms.
//!
//! `φ = −JᵀA` (so `A = φ(J·, ·)`), `ψ = φ − f_λ ω` with `f_λ = ¼ trace_ω φ`,
//! and back `φ = ψ − f_α ω` with `f_α = trace_ω ψ / (2n − 4)`.

use serde::{Deserialize, Serialize};

use super::{compose_j_values, frame_norm, gamma_const, inverse, main_a_residual_at, trace, CProjSolution};
use crate::chart::{self, TensorField};
use crate::error::{LabError, Result};
use crate::kahler::KahlerStructure;
use crate::linalg;

/// `(Jᵀ X)_ab = s · J^c_a X_cb`.
fn jt_times(ks: &KahlerStructure, x: &TensorField, s: f64) -> TensorField {
    let m = ks.dim();
    let (j, x) = (ks.complex.clone(), x.clone());
    TensorField::new(m, (0, 2), move |p, order| {
        let jj = j.eval(p, order)?;
        let xx = x.eval(p, order)?;
        let jt = linalg::jet_transpose(&jj, m);
        Ok(linalg::jet_matmul(&jt, &xx, m).into_iter().map(|v| v * s).collect())
    })
}

pub fn a_to_phi(ks: &KahlerStructure, a: &TensorField) -> TensorField {
    jt_times(ks, a, -1.0)
}

pub fn phi_to_a(ks: &KahlerStructure, phi: &TensorField) -> TensorField {
    jt_times(ks, phi, 1.0)
}

/// `trace_ω X = g^{ab} J^c_a X_cb`.
pub fn trace_omega(ks: &KahlerStructure, x: &TensorField) -> TensorField {
    let m = ks.dim();
    let (g, y) = (ks.metric.field.clone(), phi_to_a(ks, x));
    TensorField::new(m, (0, 0), move |p, order| {
        let (gi, _) = inverse(&g.eval(p, order)?, m, p)?;
        Ok(vec![trace(&gi, &y.eval(p, order)?, m)])
    })
}

/// `X − c·f·ω` for a scalar field `f`.
fn minus_omega_multiple(ks: &KahlerStructure, x: &TensorField, f: &TensorField, c: f64) -> TensorField {
    let m = ks.dim();
    let (x, f, w) = (x.clone(), f.clone(), ks.omega());
    TensorField::new(m, (0, 2), move |p, order| {
        let xx = x.eval(p, order)?;
        let ff = f.eval(p, order)?;
        let ww = w.eval(p, order)?;
        Ok(xx.iter().zip(&ww).map(|(a, b)| a - &(&ff[0] * b) * c).collect())
    })
}

/// `(ψ, f_λ)`.
pub fn phi_to_psi(ks: &KahlerStructure, phi: &TensorField) -> (TensorField, TensorField) {
    let f = trace_omega(ks, phi).scaled(0.25);
    (minus_omega_multiple(ks, phi, &f, 1.0), f)
}

/// `(φ, f_α)`; needs complex dimension above 2.
pub fn psi_to_phi(ks: &KahlerStructure, psi: &TensorField) -> Result<(TensorField, TensorField)> {
    let n = ks.complex_dim();
    if n <= 2 {
        return Err(LabError::DimensionTooSmall(n));
    }
    let f = trace_omega(ks, psi).scaled(1.0 / (2.0 * n as f64 - 4.0));
    Ok((minus_omega_multiple(ks, psi, &f, 1.0), f))
}

/// Residual tensor of `∇_X φ = X♭ ∧ λJ + (JX)♭ ∧ λ` with `λ = ¼ d trace_ω φ`,
/// flat index `(c*m + a)*m + b` for `X = ∂_c`.
pub fn hamiltonian_residual_at(ks: &KahlerStructure, phi: &TensorField, p: &[f64]) -> Result<Vec<f64>> {
    let m = ks.dim();
    let g = ks.metric.eval(p, 1)?;
    let gamma = gamma_const(&g, m, p)?;
    let nphi = chart::covariant_derivative_jets(&phi.eval(p, 1)?, (0, 2), m, &gamma);
    let lam: Vec<f64> = trace_omega(ks, phi).differential().scaled(0.25).values(p)?;
    let jv = ks.complex.values(p)?;
    let lj = compose_j_values(&lam, &jv, m);
    let gv = linalg::values(&g, m);
    let jtg = ks.j_at(p)?.transpose() * &gv;
    let mut out = Vec::with_capacity(m * m * m);
    for c in 0..m {
        for a in 0..m {
            for b in 0..m {
                let rhs = gv[(c, a)] * lj[b] - gv[(c, b)] * lj[a] + jtg[(c, a)] * lam[b] - jtg[(c, b)] * lam[a];
                out.push(nphi[(c * m + a) * m + b].value() - rhs);
            }
        }
    }
    Ok(out)
}

/// Largest per-point norm of the hamiltonian residual in a g-orthonormal frame.
pub fn hamiltonian_residual(ks: &KahlerStructure, phi: &TensorField, points: &[Vec<f64>]) -> Result<f64> {
    let mut r = 0.0f64;
    for p in points {
        let e = frame(ks, p)?;
        r = r.max(frame_norm(&hamiltonian_residual_at(ks, phi, p)?, 3, &e));
    }
    Ok(r)
}

fn frame(ks: &KahlerStructure, p: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
    linalg::orthonormal_frame(&ks.g_at(p)?)
        .ok_or_else(|| LabError::BadParams("frame norms need a definite metric".into()))
}

#[derive(Clone, Debug)]
pub enum BridgeInput {
    A(TensorField),
    Phi(TensorField),
    Psi(TensorField),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    /// `A → φ → A`.
    pub a_roundtrip: f64,
    /// `φ → ψ → φ`, absent when `n ≤ 2`.
    pub phi_roundtrip: Option<f64>,
    /// Frame norm of the hamiltonian residual.
    pub hamiltonian: f64,
    /// Frame norm of the main-equation residual of the corresponding `A`.
    pub main_a: f64,
    /// `|λ − d f_λ|` with `λ = ¼ d trace_g A`.
    pub f_lambda: f64,
    pub antisymmetry: f64,
    pub hermitian: f64,
}

fn max_diff(x: &TensorField, y: &TensorField, points: &[Vec<f64>]) -> Result<f64> {
    let mut r = 0.0f64;
    for p in points {
        for (a, b) in x.values(p)?.iter().zip(y.values(p)?) {
            r = r.max((a - b).abs());
        }
    }
    Ok(r)
}

pub fn twoform_bridge(ks: &KahlerStructure, input: BridgeInput, points: &[Vec<f64>]) -> Result<BridgeReport> {
    let phi = match input {
        BridgeInput::A(a) => a_to_phi(ks, &a),
        BridgeInput::Phi(phi) => phi,
        BridgeInput::Psi(psi) => psi_to_phi(ks, &psi)?.0,
    };
    let a = phi_to_a(ks, &phi);
    let a_roundtrip = max_diff(&a_to_phi(ks, &a), &phi, points)?;
    let (psi, f_lambda) = phi_to_psi(ks, &phi);
    let phi_roundtrip = match psi_to_phi(ks, &psi) {
        Ok((back, _)) => Some(max_diff(&back, &phi, points)?),
        Err(LabError::DimensionTooSmall(_)) => None,
        Err(e) => return Err(e),
    };
    let sol = CProjSolution::from_tensor(&ks.metric, a);
    let mut rep = BridgeReport {
        a_roundtrip,
        phi_roundtrip,
        hamiltonian: hamiltonian_residual(ks, &phi, points)?,
        main_a: 0.0,
        f_lambda: max_diff(&f_lambda.differential(), &sol.lambda, points)?,
        antisymmetry: 0.0,
        hermitian: 0.0,
    };
    for p in points {
        let e = frame(ks, p)?;
        rep.main_a = rep.main_a.max(frame_norm(&main_a_residual_at(ks, &sol.a, &sol.lambda, p)?, 3, &e));
        let f = phi.matrix(p)?;
        let j = ks.j_at(p)?;
        rep.antisymmetry = rep.antisymmetry.max(linalg::max_abs(&(&f + f.transpose())));
        rep.hermitian = rep.hermitian.max(linalg::max_abs(&(j.transpose() * &f * &j - &f)));
    }
    Ok(rep)
}
