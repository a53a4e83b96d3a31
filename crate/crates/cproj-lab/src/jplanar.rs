//! J-planar curves: `∇_γ̇ γ̇ = α(t) γ̇ + β(t) Jγ̇`.
//!
//! Two Kähler metrics with the same `J` are c-projectively equivalent iff
//! their J-planar curves coincide, which `equivalence_probe` tests by
//! running geodesics of one metric through the J-planarity test of the other.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{self, CurveSamples, Domain, MetricField, TensorField};
use crate::error::{LabError, Result};
use crate::kahler::KahlerStructure;
use crate::linalg;
use crate::parallel;

/// Polynomial `Σ c_k t^k`; a bare number in JSON is a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Constant(f64),
    Polynomial(Vec<f64>),
}

impl Profile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Polynomial(cs) => cs.iter().rev().fold(0.0, |acc, c| acc * t + c),
        }
    }
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Constant(0.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JPlanarCurve {
    pub samples: CurveSamples,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

fn j_times(j: &TensorField, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let jm = j.matrix(x)?;
    Ok((jm * DVector::from_column_slice(v)).iter().copied().collect())
}

/// RK4 for `γ̈ + Γ(γ̇, γ̇) = α γ̇ + β Jγ̇`.
pub fn integrate_jplanar(
    ks: &KahlerStructure,
    p: &[f64],
    x: &[f64],
    alpha: &Profile,
    beta: &Profile,
    t_end: f64,
    steps: usize,
) -> Result<JPlanarCurve> {
    let samples = chart::integrate_second_order(ks.domain(), p, x, t_end, steps, |t, y, v| {
        let mut acc = chart::geodesic_acceleration(&ks.metric, y, v)?;
        let jv = j_times(&ks.complex, y, v)?;
        let (a, b) = (alpha.eval(t), beta.eval(t));
        for i in 0..acc.len() {
            acc[i] += a * v[i] + b * jv[i];
        }
        Ok(acc)
    })?;
    let alpha = samples.times.iter().map(|&t| alpha.eval(t)).collect();
    let beta = samples.times.iter().map(|&t| beta.eval(t)).collect();
    Ok(JPlanarCurve { samples, alpha, beta })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JPlanarFit {
    /// Largest third singular value of `[γ̇/|γ̇|, Jγ̇/|γ̇|, ∇_γ̇γ̇/|γ̇|²]` in a
    /// g-orthonormal frame.
    pub residual: f64,
    pub per_sample: Vec<f64>,
    /// Least-squares `α, β` with `∇_γ̇γ̇ ≈ α γ̇ + β Jγ̇`.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// J-planarity of sampled curve data with respect to `(metric, j)`. The
/// recorded coordinate accelerations are used, so `∇_γ̇γ̇ = γ̈ + Γ(γ̇, γ̇)`.
pub fn jplanar_residual(metric: &MetricField, j: &TensorField, curve: &CurveSamples) -> Result<JPlanarFit> {
    let m = metric.dim();
    let mut fit = JPlanarFit { residual: 0.0, per_sample: Vec::new(), alpha: Vec::new(), beta: Vec::new() };
    for (s, ((x, v), xdd)) in curve.points.iter().zip(&curve.velocities).zip(&curve.accelerations).enumerate() {
        let g = metric.check_nondegenerate(x)?;
        let geo = chart::geodesic_acceleration(metric, x, v)?;
        let a = DVector::from_iterator(m, xdd.iter().zip(&geo).map(|(u, w)| u - w));
        let vv = DVector::from_column_slice(v);
        let jv = j.matrix(x)? * &vv;
        let speed2 = vv.dot(&(&g * &vv));
        if !(speed2 > 0.0) || speed2.sqrt() < 1e-12 * (1.0 + linalg::max_abs(&g)) {
            return Err(LabError::ZeroVelocity(s));
        }
        fit.alpha.push(a.dot(&(&g * &vv)) / speed2);
        fit.beta.push(a.dot(&(&g * &jv)) / speed2);
        let sigma = if m < 3 {
            0.0
        } else {
            // g = LLᵀ, so Lᵀw has Euclidean length |w|_g; indefinite g falls back to coordinates
            let l = g.clone().cholesky().map(|c| c.l().transpose());
            let to_frame = |w: &DVector<f64>| match &l {
                Some(l) => l * w,
                None => w.clone(),
            };
            let speed = speed2.sqrt();
            let cols = [to_frame(&vv) / speed, to_frame(&jv) / speed, to_frame(&a) / speed2];
            let mat = DMatrix::from_columns(&cols);
            let sv = mat.singular_values();
            let mut sv: Vec<f64> = sv.iter().copied().collect();
            sv.sort_by(|p, q| q.total_cmp(p));
            sv[2]
        };
        fit.residual = fit.residual.max(sigma);
        fit.per_sample.push(sigma);
    }
    Ok(fit)
}

pub fn curve_residual(ks: &KahlerStructure, curve: &JPlanarCurve) -> Result<JPlanarFit> {
    jplanar_residual(&ks.metric, &ks.complex, &curve.samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub trials: usize,
    pub seed: u64,
    pub t_end: f64,
    pub steps: usize,
    /// Euclidean coordinate speed of the initial velocity, as a fraction of
    /// the smallest domain half-width.
    pub reach: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { trials: 20, seed: 0, t_end: 1.0, steps: 200, reach: 0.3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeTrial {
    pub start: Vec<f64>,
    pub velocity: Vec<f64>,
    /// Geodesic of `g̃` tested for J-planarity under `g`.
    pub forward: std::result::Result<f64, String>,
    /// Geodesic of `g` tested under `g̃`.
    pub backward: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeReport {
    pub config: ProbeConfig,
    pub trials: Vec<ProbeTrial>,
}

impl ProbeReport {
    /// Largest residual over all trials and both directions; `None` if any
    /// trial failed to run.
    pub fn max_residual(&self) -> Option<f64> {
        let mut worst = 0.0f64;
        for t in &self.trials {
            worst = worst.max(*t.forward.as_ref().ok()?).max(*t.backward.as_ref().ok()?);
        }
        Some(worst)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual().is_some_and(|r| r < tol)
    }
}

fn one_way(g: &MetricField, j: &TensorField, gt: &MetricField, p: &[f64], v: &[f64], cfg: &ProbeConfig) -> Result<f64> {
    let c = chart::geodesic_integrate(gt, p, v, cfg.t_end, cfg.steps)?;
    Ok(jplanar_residual(g, j, &c)?.residual)
}

/// Seeded starts in the middle half of `domain` with initial velocities of
/// Euclidean length `reach · (smallest half-width) / t_end`.
pub fn probe_starts(domain: &Domain, cfg: &ProbeConfig) -> Vec<(Vec<f64>, Vec<f64>)> {
    let d = domain.shrink(0.5);
    let hw = domain.half_widths().into_iter().fold(f64::INFINITY, f64::min);
    let m = domain.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.trials)
        .map(|_| {
            let p: Vec<f64> = d.lo.iter().zip(&d.hi).map(|(a, b)| rng.gen_range(*a..=*b)).collect();
            let mut v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            let s = cfg.reach * hw / (n * cfg.t_end);
            v.iter_mut().for_each(|x| *x *= s);
            (p, v)
        })
        .collect()
}

/// Geodesics of each metric through the J-planarity test of the other, from
/// the starts of `probe_starts` on `g̃`'s domain.
pub fn equivalence_probe(g: &MetricField, gt: &MetricField, j: &TensorField, cfg: &ProbeConfig) -> ProbeReport {
    let starts = probe_starts(&gt.domain, cfg);
    let trials = parallel::install(|| {
        starts
            .into_par_iter()
            .map(|(p, v)| ProbeTrial {
                forward: one_way(g, j, gt, &p, &v, cfg).map_err(|e| e.to_string()),
                backward: one_way(gt, j, g, &p, &v, cfg).map_err(|e| e.to_string()),
                start: p,
                velocity: v,
            })
            .collect()
    });
    ProbeReport { config: *cfg, trials }
}

/// The geodesic of `g̃` from trial `index`, with the `α, β` it has as a
/// J-planar curve of `g`.
pub fn trial_curve(g: &MetricField, gt: &MetricField, j: &TensorField, cfg: &ProbeConfig, index: usize) -> Result<JPlanarCurve> {
    let starts = probe_starts(&gt.domain, &ProbeConfig { trials: index + 1, ..*cfg });
    let (p, v) = &starts[index];
    let samples = chart::geodesic_integrate(gt, p, v, cfg.t_end, cfg.steps)?;
    let fit = jplanar_residual(g, j, &samples)?;
    Ok(JPlanarCurve { samples, alpha: fit.alpha, beta: fit.beta })
}

/// `t, x…, v…, alpha, beta` rows for plotting.
pub fn write_csv<W: Write>(curve: &JPlanarCurve, mut out: W) -> io::Result<()> {
    let m = curve.samples.points.first().map_or(0, |p| p.len());
    let mut header = vec!["t".to_string()];
    header.extend((0..m).map(|i| format!("x{i}")));
    header.extend((0..m).map(|i| format!("v{i}")));
    header.extend(["alpha".to_string(), "beta".to_string()]);
    writeln!(out, "{}", header.join(","))?;
    for k in 0..curve.samples.times.len() {
        let mut row = vec![curve.samples.times[k]];
        row.extend(&curve.samples.points[k]);
        row.extend(&curve.samples.velocities[k]);
        row.extend([curve.alpha[k], curve.beta[k]]);
        let row: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn zero_profiles_give_geodesics() {
        let fs = catalog::fubini_study(2, 1.0).unwrap();
        let ks = &fs.structure;
        let (p, x) = ([0.1, -0.2, 0.05, 0.1], [0.3, 0.1, -0.2, 0.25]);
        let c = integrate_jplanar(ks, &p, &x, &Profile::default(), &Profile::default(), 1.0, 400).unwrap();
        let geo = chart::geodesic_integrate(&ks.metric, &p, &x, 1.0, 400).unwrap();
        for (a, b) in c.samples.points.iter().zip(&geo.points) {
            assert!(a.iter().zip(b).all(|(u, w)| (u - w).abs() < 1e-12));
        }
        let fit = curve_residual(ks, &c).unwrap();
        assert!(fit.residual < 1e-7);
        assert!(fit.beta.iter().all(|b| b.abs() < 1e-7));
    }

    #[test]
    fn flat_spiral_matches_closed_form() {
        // v = e^{(α + βJ)t} X, γ = p + (α + βJ)⁻¹ (e^{(α + βJ)t} − 1) X
        let fl = catalog::flat(2).unwrap();
        let (a, b) = (0.3, 1.0);
        let p = [0.1, 0.0, -0.1, 0.2];
        let x = [0.2, -0.1, 0.05, 0.1];
        let c = integrate_jplanar(&fl.structure, &p, &x, &Profile::Constant(a), &Profile::Constant(b), 1.0, 500).unwrap();
        let jm = crate::kahler::standard_complex_matrix(4);
        let gen = DMatrix::identity(4, 4) * a + &jm * b;
        let xv = DVector::from_column_slice(&x);
        for (t, y) in c.samples.times.iter().zip(&c.samples.points) {
            let e = (&gen * *t).exp();
            let want = DVector::from_column_slice(&p) + gen.clone().try_inverse().unwrap() * (e - DMatrix::identity(4, 4)) * &xv;
            assert!(y.iter().zip(want.iter()).all(|(u, w)| (u - w).abs() < 1e-10));
        }
        // the curve stays in the complex line p + span{X, JX}
        let plane = DMatrix::from_columns(&[xv.clone(), &jm * &xv]);
        let proj = &plane * (plane.transpose() * &plane).try_inverse().unwrap() * plane.transpose();
        for y in &c.samples.points {
            let d = DVector::from_iterator(4, y.iter().zip(&p).map(|(u, w)| u - w));
            assert!((&d - &proj * &d).amax() < 1e-10);
        }
    }

    #[test]
    fn recovers_profiles() {
        let fs = catalog::fubini_study(2, 1.0).unwrap();
        let alpha = Profile::Polynomial(vec![0.2, -0.5]);
        let beta = Profile::Polynomial(vec![1.0, 0.0, 0.7]);
        let c = integrate_jplanar(&fs.structure, &[0.0, 0.1, -0.1, 0.0], &[0.2, 0.0, 0.1, -0.2], &alpha, &beta, 1.0, 300).unwrap();
        let fit = curve_residual(&fs.structure, &c).unwrap();
        assert!(fit.residual < 1e-6);
        for k in 0..c.alpha.len() {
            assert!((fit.alpha[k] - c.alpha[k]).abs() < 1e-4 && (fit.beta[k] - c.beta[k]).abs() < 1e-4);
        }
    }

    #[test]
    fn distinct_beta_give_distinct_curves() {
        let fs = catalog::fubini_study(1, 1.0).unwrap();
        let ends: Vec<Vec<f64>> = [0.0, 0.5, 1.0]
            .iter()
            .map(|&b| {
                let c = integrate_jplanar(&fs.structure, &[0.0, 0.0], &[0.3, 0.0], &Profile::default(), &Profile::Constant(b), 1.0, 200)
                    .unwrap();
                c.samples.points.last().unwrap().clone()
            })
            .collect();
        for i in 0..3 {
            for k in i + 1..3 {
                let d: f64 = ends[i].iter().zip(&ends[k]).map(|(u, w)| (u - w).abs()).sum();
                assert!(d > 1e-2);
            }
        }
    }

    #[test]
    fn cubic_curve_is_not_jplanar() {
        let fs = catalog::fubini_study(2, 1.0).unwrap();
        let (u, w, z) = ([0.3, 0.0, 0.0, 0.1], [0.0, 0.0, 0.4, 0.0], [0.0, 0.2, 0.0, -0.3]);
        let mut c = CurveSamples::default();
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            c.times.push(t);
            c.points.push((0..4).map(|i| u[i] * t + w[i] * t * t + z[i] * t * t * t).collect());
            c.velocities.push((0..4).map(|i| u[i] + 2.0 * w[i] * t + 3.0 * z[i] * t * t).collect());
            c.accelerations.push((0..4).map(|i| 2.0 * w[i] + 6.0 * z[i] * t).collect());
        }
        let fit = jplanar_residual(&fs.structure.metric, &fs.structure.complex, &c).unwrap();
        assert!(fit.residual > 1e-2, "{}", fit.residual);
    }

    #[test]
    fn zero_velocity_is_reported() {
        let fl = catalog::flat(2).unwrap();
        let c = CurveSamples {
            times: vec![0.0],
            points: vec![vec![0.0; 4]],
            velocities: vec![vec![0.0; 4]],
            accelerations: vec![vec![0.0; 4]],
        };
        assert_eq!(jplanar_residual(&fl.structure.metric, &fl.structure.complex, &c).unwrap_err(), LabError::ZeroVelocity(0));
    }

    #[test]
    fn probe_separates_pairs() {
        let fl = catalog::flat(2).unwrap();
        let ks = &fl.structure;
        let cfg = ProbeConfig { trials: 4, ..Default::default() };
        assert!(equivalence_probe(&ks.metric, &ks.metric, &ks.complex, &cfg).passes(1e-9));
        let scaled = ks.rescaled(3.0);
        assert!(equivalence_probe(&ks.metric, &scaled.metric, &ks.complex, &cfg).passes(1e-9));
        // FS in an affine chart is c-projectively flat, a product with a curved factor is not
        let prod = catalog::product(&[catalog::fubini_study(1, 1.0).unwrap(), catalog::flat(1).unwrap()]).unwrap();
        let other = MetricField::new(prod.structure.metric.field.clone(), ks.domain().clone());
        let r = equivalence_probe(&ks.metric, &other, &ks.complex, &cfg);
        assert!(r.max_residual().unwrap() > 1e-2);
    }

    #[test]
    fn csv_has_one_row_per_sample() {
        let fl = catalog::flat(1).unwrap();
        let c = integrate_jplanar(&fl.structure, &[0.0, 0.0], &[0.1, 0.0], &Profile::default(), &Profile::Constant(1.0), 1.0, 10).unwrap();
        let mut buf = Vec::new();
        write_csv(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 12);
        assert!(text.starts_with("t,x0,x1,v0,v1,alpha,beta\n"));
    }
}
