//! Gauss–Legendre rules and primitives along straight rays from a base point.
//!
//! Both primitives below return jets of the integral as a function of the
//! end point: the integrand's jets at `p0 + s (x − p0)` are rescaled to jets
//! in `x`, so derivatives of the primitive are as exact as the rule allows.

use crate::chart::TensorField;
use crate::error::{LabError, Result};
use crate::jet::Jet;

/// Default number of nodes. Integrands here are analytic on the unit
/// interval, so the rule is accurate to roundoff well before this.
pub const DEFAULT_NODES: usize = 32;

/// Nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Newton on P_n from the Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

fn ray_point(p0: &[f64], x: &[f64], s: f64) -> Vec<f64> {
    p0.iter().zip(x).map(|(a, b)| a + s * (b - a)).collect()
}

fn finite(jets: &[Jet], what: &str) -> Result<()> {
    if jets.iter().all(|j| j.coeffs().iter().all(|c| c.is_finite())) {
        Ok(())
    } else {
        Err(LabError::QuadratureFailure(format!("non-finite {what}")))
    }
}

/// Scalar `f` with `df = α` and `f(p0) = 0`, for a closed 1-form `α`.
pub fn ray_primitive(alpha: &TensorField, p0: Vec<f64>, nodes: usize) -> TensorField {
    assert_eq!(alpha.rank(), (0, 1));
    let m = alpha.dim();
    let a = alpha.clone();
    let (s, w) = gauss_legendre(nodes);
    TensorField::new(m, (0, 0), move |x, order| {
        let xs = Jet::coordinates(x, order);
        let dx: Vec<Jet> = (0..m).map(|i| &xs[i] - p0[i]).collect();
        let mut acc = xs[0].zero_like();
        for (sk, wk) in s.iter().zip(&w) {
            let y = ray_point(&p0, x, *sk);
            let al = a.eval(&y, order)?;
            for i in 0..m {
                acc += &(&al[i].scale_derivatives(*sk) * &dx[i] * *wk);
            }
        }
        finite(std::slice::from_ref(&acc), "primitive")?;
        Ok(vec![acc])
    })
}

/// Poincaré homotopy: a 1-form `τ` with `dτ = ω` for a closed 2-form `ω`,
/// `τ_j(x) = ∫₀¹ s ω_ij(p0 + s(x − p0)) (x − p0)^i ds`.
pub fn homotopy_potential(omega: &TensorField, p0: Vec<f64>, nodes: usize) -> TensorField {
    assert_eq!(omega.rank(), (0, 2));
    let m = omega.dim();
    let o = omega.clone();
    let (s, w) = gauss_legendre(nodes);
    TensorField::new(m, (0, 1), move |x, order| {
        let xs = Jet::coordinates(x, order);
        let dx: Vec<Jet> = (0..m).map(|i| &xs[i] - p0[i]).collect();
        let mut tau: Vec<Jet> = (0..m).map(|_| xs[0].zero_like()).collect();
        for (sk, wk) in s.iter().zip(&w) {
            let y = ray_point(&p0, x, *sk);
            let om: Vec<Jet> = o.eval(&y, order)?.iter().map(|j| j.scale_derivatives(*sk)).collect();
            for (j, t) in tau.iter_mut().enumerate() {
                for i in 0..m {
                    *t += &(&om[i * m + j] * &dx[i] * (sk * wk));
                }
            }
        }
        finite(&tau, "potential")?;
        Ok(tau)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let i15: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(15)).sum();
        assert!((i15 - 1.0 / 16.0).abs() < 1e-15);
        assert!(x.iter().all(|v| *v > 0.0 && *v < 1.0));
    }

    #[test]
    fn primitive_of_exact_form() {
        // α = d(sin(x) y^2)
        let alpha = TensorField::from_coords(2, (0, 1), |x| {
            vec![x[0].cos() * &x[1] * &x[1], x[0].sin() * &x[1] * 2.0]
        });
        let f = ray_primitive(&alpha, vec![0.1, 0.2], DEFAULT_NODES);
        let p = [0.7, -0.5];
        let j = f.eval(&p, 2).unwrap();
        let exact = p[0].sin() * p[1] * p[1] - 0.1f64.sin() * 0.04;
        assert!((j[0].value() - exact).abs() < 1e-14);
        assert!((j[0].d1(0) - p[0].cos() * p[1] * p[1]).abs() < 1e-13);
        assert!((j[0].d2(0, 1) - 2.0 * p[0].cos() * p[1]).abs() < 1e-12);
    }

    #[test]
    fn homotopy_of_constant_form_is_linear() {
        let omega = TensorField::constant(2, (0, 2), vec![0.0, -1.0, 1.0, 0.0]);
        let tau = homotopy_potential(&omega, vec![0.0, 0.0], 4);
        let t = tau.eval(&[0.4, 0.6], 1).unwrap();
        // τ_j = ½ ω_ij x^i
        assert!((t[0].value() - 0.3).abs() < 1e-15);
        assert!((t[1].value() + 0.2).abs() < 1e-15);
        assert!((t[1].d1(0) - t[0].d1(1) + 1.0).abs() < 1e-15);
    }
}
