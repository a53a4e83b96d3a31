//! Tensor calculus on one coordinate chart.
//!
//! Fields are evaluated point-wise as jets. Component order is row-major with
//! contravariant indices first, so a rank-(1,1) field stores `T^i_j` at
//! `i * m + j`. Covariant derivatives put the derivative index first:
//! `∇T[c, ...] = (∇_c T)[...]`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use ndarray::{Array3, Array4, ArrayD, IxDyn};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::jet::{Jet, MAX_ORDER};
use crate::linalg;

/// `|det g|` at or below this counts as degenerate.
pub const DELTA_DEG: f64 = 1e-10;

/// A chart point. Derefs to a coordinate slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Point> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(LabError::NonFinitePoint(coords));
        }
        Ok(Point(coords))
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Axis-aligned coordinate box. Boxes are convex, hence star-shaped about
/// every interior point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Domain {
        assert_eq!(lo.len(), hi.len());
        Domain { lo, hi }
    }

    pub fn cube(dim: usize, half: f64) -> Domain {
        Domain::new(vec![-half; dim], vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| *x >= *a && *x <= *b)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (b - a)).collect()
    }

    /// Concatenation of two boxes (product chart).
    pub fn product(&self, other: &Domain) -> Domain {
        let mut lo = self.lo.clone();
        lo.extend_from_slice(&other.lo);
        let mut hi = self.hi.clone();
        hi.extend_from_slice(&other.hi);
        Domain::new(lo, hi)
    }

    /// Box shrunk towards its center by `factor` (0 < factor ≤ 1).
    pub fn shrink(&self, factor: f64) -> Domain {
        let c = self.center();
        let h = self.half_widths();
        Domain::new(
            c.iter().zip(&h).map(|(c, h)| c - factor * h).collect(),
            c.iter().zip(&h).map(|(c, h)| c + factor * h).collect(),
        )
    }

    /// `count` Halton points inside the box, skipping `seed` leading terms.
    /// The outer 5% of each side is avoided.
    pub fn halton(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        assert!(self.dim() <= PRIMES.len(), "Halton sampling supports up to 16 dimensions");
        (0..count as u64)
            .map(|i| {
                let idx = seed.wrapping_mul(7919).wrapping_add(i + 1);
                (0..self.dim())
                    .map(|d| {
                        let u = 0.05 + 0.9 * radical_inverse(idx, PRIMES[d]);
                        self.lo[d] + u * (self.hi[d] - self.lo[d])
                    })
                    .collect()
            })
            .collect()
    }
}

type Evaluator = dyn Fn(&[f64], usize) -> Result<Vec<Jet>> + Send + Sync;

/// A smooth tensor field on a chart of dimension `dim`, given by a pure
/// evaluator returning one jet per component.
#[derive(Clone)]
pub struct TensorField {
    dim: usize,
    rank: (usize, usize),
    eval: Arc<Evaluator>,
}

impl std::fmt::Debug for TensorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TensorField(dim={}, rank={:?})", self.dim, self.rank)
    }
}

impl TensorField {
    pub fn new<F>(dim: usize, rank: (usize, usize), f: F) -> TensorField
    where
        F: Fn(&[f64], usize) -> Result<Vec<Jet>> + Send + Sync + 'static,
    {
        TensorField { dim, rank, eval: Arc::new(f) }
    }

    /// Field given by a jet-polymorphic formula in the coordinate functions.
    pub fn from_coords<F>(dim: usize, rank: (usize, usize), f: F) -> TensorField
    where
        F: Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    {
        TensorField::new(dim, rank, move |p, order| Ok(f(&Jet::coordinates(p, order))))
    }

    pub fn constant(dim: usize, rank: (usize, usize), comps: Vec<f64>) -> TensorField {
        assert_eq!(comps.len(), dim.pow((rank.0 + rank.1) as u32));
        TensorField::new(dim, rank, move |_, order| {
            Ok(comps.iter().map(|&c| Jet::constant(dim, order, c)).collect())
        })
    }

    pub fn zero(dim: usize, rank: (usize, usize)) -> TensorField {
        TensorField::constant(dim, rank, vec![0.0; dim.pow((rank.0 + rank.1) as u32)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> (usize, usize) {
        self.rank
    }

    pub fn ncomponents(&self) -> usize {
        self.dim.pow((self.rank.0 + self.rank.1) as u32)
    }

    pub fn eval(&self, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        if order > MAX_ORDER {
            return Err(LabError::OrderTooHigh(order));
        }
        if p.len() != self.dim {
            return Err(LabError::PointDimension { expected: self.dim, got: p.len() });
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(LabError::NonFinitePoint(p.to_vec()));
        }
        let out = (self.eval)(p, order)?;
        debug_assert_eq!(out.len(), self.ncomponents());
        Ok(out)
    }

    pub fn values(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval(p, 0)?.iter().map(Jet::value).collect())
    }

    /// Values of a rank-2 field as a matrix.
    pub fn matrix(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        assert_eq!(self.rank.0 + self.rank.1, 2);
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &self.values(p)?))
    }

    pub fn scalar_value(&self, p: &[f64]) -> Result<f64> {
        assert_eq!(self.rank, (0, 0));
        Ok(self.eval(p, 0)?[0].value())
    }

    /// `a * self + b * other`, component-wise.
    pub fn combine(&self, a: f64, other: &TensorField, b: f64) -> TensorField {
        assert_eq!((self.dim, self.rank), (other.dim, other.rank));
        let (s, o) = (self.clone(), other.clone());
        TensorField::new(self.dim, self.rank, move |p, order| {
            let x = s.eval(p, order)?;
            let y = o.eval(p, order)?;
            Ok(x.iter().zip(&y).map(|(u, v)| u * a + v * b).collect())
        })
    }

    pub fn scaled(&self, a: f64) -> TensorField {
        let s = self.clone();
        TensorField::new(self.dim, self.rank, move |p, order| {
            Ok(s.eval(p, order)?.into_iter().map(|u| u * a).collect())
        })
    }

    /// The differential of a scalar field, one jet order lower than its input.
    pub fn differential(&self) -> TensorField {
        assert_eq!(self.rank, (0, 0));
        let s = self.clone();
        let m = self.dim;
        TensorField::new(m, (0, 1), move |p, order| {
            let f = s.eval(p, order + 1)?;
            Ok((0..m).map(|l| f[0].partial(l)).collect())
        })
    }
}

/// A rank-(0,2) field declared to be a metric, with its chart domain.
#[derive(Clone, Debug)]
pub struct MetricField {
    pub field: TensorField,
    pub domain: Domain,
}

impl MetricField {
    pub fn new(field: TensorField, domain: Domain) -> MetricField {
        assert_eq!(field.rank(), (0, 2), "a metric is a rank-(0,2) field");
        assert_eq!(field.dim(), domain.dim());
        MetricField { field, domain }
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn eval(&self, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.field.eval(p, order)
    }

    pub fn at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.field.matrix(p)
    }

    pub fn check_nondegenerate(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.at(p)?;
        nondegenerate(&g, p)?;
        Ok(g)
    }

    /// True when `g(p)` is positive definite.
    pub fn is_definite_at(&self, p: &[f64]) -> Result<bool> {
        Ok(self.at(p)?.cholesky().is_some())
    }
}

/// `|det g| / Π‖row_i‖`, in `[0, 1]` and invariant under rescaling the
/// coordinates; the metric counts as degenerate when it is at most `DELTA_DEG`.
pub fn hadamard_ratio(g: &DMatrix<f64>, det: f64) -> f64 {
    let rows: f64 = g.row_iter().map(|r| r.norm()).product();
    if rows == 0.0 {
        0.0
    } else {
        det.abs() / rows
    }
}

fn nondegenerate(g: &DMatrix<f64>, p: &[f64]) -> Result<()> {
    let det = g.determinant();
    if hadamard_ratio(g, det) <= DELTA_DEG || !det.is_finite() {
        return Err(LabError::DegenerateMetric { point: p.to_vec(), det });
    }
    Ok(())
}

/// Christoffel symbols `Γ^i_{jk}` (flat index `(i*m + j)*m + k`) from metric
/// jets of order `k ≥ 1`; the result has order `k - 1`.
pub fn christoffel_jets(g: &[Jet], m: usize, p: &[f64]) -> Result<Vec<Jet>> {
    let order = g[0].order();
    assert!(order >= 1, "Christoffel symbols need first derivatives of g");
    let gl: Vec<Jet> = g.iter().map(|x| x.truncate(order - 1)).collect();
    let (gi, det) = linalg::jet_inverse_det(&gl, m)
        .ok_or_else(|| LabError::DegenerateMetric { point: p.to_vec(), det: 0.0 })?;
    if hadamard_ratio(&linalg::values(&gl, m), det.value()) <= DELTA_DEG {
        return Err(LabError::DegenerateMetric { point: p.to_vec(), det: det.value() });
    }
    // dg[(l*m + a)*m + b] = ∂_l g_ab
    let mut dg = Vec::with_capacity(m * m * m);
    for l in 0..m {
        for ab in 0..m * m {
            dg.push(g[ab].partial(l));
        }
    }
    let d = |l: usize, a: usize, b: usize| &dg[(l * m + a) * m + b];
    // first kind, symmetric in (j, k)
    let mut first = vec![gl[0].zero_like(); m * m * m];
    for l in 0..m {
        for j in 0..m {
            for k in j..m {
                let v = (d(j, l, k) + d(k, l, j) - d(l, j, k)) * 0.5;
                first[(l * m + k) * m + j] = v.clone();
                first[(l * m + j) * m + k] = v;
            }
        }
    }
    let mut gamma = vec![gl[0].zero_like(); m * m * m];
    for i in 0..m {
        for j in 0..m {
            for k in j..m {
                let mut acc = gl[0].zero_like();
                for l in 0..m {
                    acc += &(&gi[i * m + l] * &first[(l * m + j) * m + k]);
                }
                gamma[(i * m + k) * m + j] = acc.clone();
                gamma[(i * m + j) * m + k] = acc;
            }
        }
    }
    Ok(gamma)
}

/// Christoffel values from metric jets of order ≥ 1, avoiding jet inversion.
pub fn christoffel_values(g: &[Jet], m: usize, p: &[f64]) -> Result<Vec<f64>> {
    let gv = linalg::values(g, m);
    nondegenerate(&gv, p)?;
    let gi = gv
        .try_inverse()
        .ok_or_else(|| LabError::DegenerateMetric { point: p.to_vec(), det: 0.0 })?;
    let d = |l: usize, a: usize, b: usize| g[a * m + b].d1(l);
    let mut first = vec![0.0; m * m * m];
    for l in 0..m {
        for j in 0..m {
            for k in j..m {
                let v = 0.5 * (d(j, l, k) + d(k, l, j) - d(l, j, k));
                first[(l * m + j) * m + k] = v;
                first[(l * m + k) * m + j] = v;
            }
        }
    }
    let mut gamma = vec![0.0; m * m * m];
    for i in 0..m {
        for j in 0..m {
            for k in j..m {
                let mut acc = 0.0;
                for l in 0..m {
                    acc += gi[(i, l)] * first[(l * m + j) * m + k];
                }
                gamma[(i * m + j) * m + k] = acc;
                gamma[(i * m + k) * m + j] = acc;
            }
        }
    }
    Ok(gamma)
}

pub fn christoffel(metric: &MetricField, p: &[f64]) -> Result<Array3<f64>> {
    let m = metric.dim();
    let g = metric.eval(p, 1)?;
    let gamma = christoffel_values(&g, m, p)?;
    Ok(Array3::from_shape_vec((m, m, m), gamma).expect("shape"))
}

/// Riemann tensor `R^i_{jkl}` with `R(∂_k, ∂_l)∂_j = R^i_{jkl} ∂_i`, from
/// Christoffel jets of order ≥ 1.
pub fn riemann_from_gamma(gamma: &[Jet], m: usize) -> Array4<f64> {
    let gv = |i: usize, j: usize, k: usize| gamma[(i * m + j) * m + k].value();
    let gd = |i: usize, j: usize, k: usize, l: usize| gamma[(i * m + j) * m + k].d1(l);
    let mut r = Array4::zeros((m, m, m, m));
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in (k + 1)..m {
                    let mut v = gd(i, l, j, k) - gd(i, k, j, l);
                    for e in 0..m {
                        v += gv(i, k, e) * gv(e, l, j) - gv(i, l, e) * gv(e, k, j);
                    }
                    r[[i, j, k, l]] = v;
                    r[[i, j, l, k]] = -v;
                }
            }
        }
    }
    r
}

#[derive(Debug, Clone)]
pub struct Curvature {
    /// `R^i_{jkl}`, indexed `[i, j, k, l]`.
    pub riemann: Array4<f64>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
}

impl Curvature {
    pub fn max_abs_riemann(&self) -> f64 {
        self.riemann.iter().fold(0.0, |s, v| s.max(v.abs()))
    }

    /// `R(∂_k, ∂_l)` as an endomorphism matrix.
    pub fn endomorphism(&self, k: usize, l: usize) -> DMatrix<f64> {
        let m = self.ricci.nrows();
        DMatrix::from_fn(m, m, |i, j| self.riemann[[i, j, k, l]])
    }

    /// `R_{ijkl} = g_{ia} R^a_{jkl}`.
    pub fn lowered(&self, g: &DMatrix<f64>) -> Array4<f64> {
        let m = g.nrows();
        let mut out = Array4::zeros((m, m, m, m));
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        out[[i, j, k, l]] = (0..m).map(|a| g[(i, a)] * self.riemann[[a, j, k, l]]).sum();
                    }
                }
            }
        }
        out
    }
}

pub fn curvature_from_metric_jets(g: &[Jet], m: usize, p: &[f64]) -> Result<Curvature> {
    let gamma = christoffel_jets(g, m, p)?;
    let riemann = riemann_from_gamma(&gamma, m);
    let ricci = DMatrix::from_fn(m, m, |b, c| (0..m).map(|i| riemann[[i, c, i, b]]).sum());
    let gi = linalg::values(g, m).try_inverse().expect("checked nondegenerate");
    let scalar = (0..m).flat_map(|b| (0..m).map(move |c| (b, c))).map(|(b, c)| gi[(b, c)] * ricci[(b, c)]).sum();
    Ok(Curvature { riemann, ricci, scalar })
}

pub fn riemann_suite(metric: &MetricField, p: &[f64]) -> Result<Curvature> {
    let g = metric.eval(p, 2)?;
    curvature_from_metric_jets(&g, metric.dim(), p)
}

fn digits(mut idx: usize, m: usize, len: usize) -> Vec<usize> {
    let mut d = vec![0; len];
    for s in (0..len).rev() {
        d[s] = idx % m;
        idx /= m;
    }
    d
}

fn undigits(d: &[usize], m: usize) -> usize {
    d.iter().fold(0, |acc, x| acc * m + x)
}

/// Covariant derivative of a rank-(p,q) field from its jets (order ≥ 1) and
/// Christoffel jets. The result carries order `min(order(t) - 1, order(Γ))`.
pub fn covariant_derivative_jets(t: &[Jet], rank: (usize, usize), m: usize, gamma: &[Jet]) -> Vec<Jet> {
    let (p, q) = rank;
    let len = p + q;
    let out_order = (t[0].order() - 1).min(gamma[0].order());
    let gam: Vec<Jet> = gamma.iter().map(|x| x.truncate(out_order)).collect();
    let tt: Vec<Jet> = t.iter().map(|x| x.truncate(out_order)).collect();
    let ncomp = m.pow(len as u32);
    let mut out = Vec::with_capacity(m * ncomp);
    for c in 0..m {
        for idx in 0..ncomp {
            let mut v = t[idx].partial(c).truncate(out_order);
            let d = digits(idx, m, len);
            for s in 0..len {
                let mut dd = d.clone();
                for e in 0..m {
                    dd[s] = e;
                    let other = &tt[undigits(&dd, m)];
                    if s < p {
                        v += &(&gam[(d[s] * m + c) * m + e] * other);
                    } else {
                        v -= &(&gam[(e * m + c) * m + d[s]] * other);
                    }
                }
            }
            out.push(v);
        }
    }
    out
}

pub fn covariant_derivative(field: &TensorField, metric: &MetricField, p: &[f64]) -> Result<ArrayD<f64>> {
    let (a, b) = field.rank();
    if a + b > 4 {
        return Err(LabError::UnsupportedRank(a, b));
    }
    let m = metric.dim();
    let g = metric.eval(p, 1)?;
    let gamma: Vec<Jet> = christoffel_values(&g, m, p)?.into_iter().map(|v| Jet::constant(m, 0, v)).collect();
    let t = field.eval(p, 1)?;
    let d = covariant_derivative_jets(&t, (a, b), m, &gamma);
    let shape = vec![m; a + b + 1];
    Ok(ArrayD::from_shape_vec(IxDyn(&shape), d.iter().map(Jet::value).collect()).expect("shape"))
}

/// `Γ(v)^i_k = Γ^i_{jk} v^j`.
fn gamma_contract(gamma: &[f64], v: &[f64], m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, k| (0..m).map(|j| gamma[(i * m + j) * m + k] * v[j]).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportConfig {
    /// RK4 steps per straight segment (each segment is parametrized over [0, 1]).
    pub steps_per_segment: usize,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig { steps_per_segment: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransportValue {
    Vector(DVector<f64>),
    Endomorphism(DMatrix<f64>),
    /// A (0,2) tensor.
    Bilinear(DMatrix<f64>),
}

fn point_on(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
}

/// Parallel frames at every vertex of a polyline: entry `v` maps `T_{path[0]}`
/// to `T_{path[v]}` (so entry 0 is the identity).
pub fn transport_frames(metric: &MetricField, path: &[Vec<f64>], cfg: TransportConfig) -> Result<Vec<DMatrix<f64>>> {
    let m = metric.dim();
    let mut frame = DMatrix::identity(m, m);
    let mut frames = vec![frame.clone()];
    let steps = cfg.steps_per_segment.max(1);
    let h = 1.0 / steps as f64;
    let rhs = |x: &[f64], vel: &[f64], f: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        if !metric.domain.contains(x) {
            return Err(LabError::PathLeavesDomain(x.to_vec()));
        }
        let g = metric.eval(x, 1)?;
        let gamma = christoffel_values(&g, m, x)?;
        Ok(-(gamma_contract(&gamma, vel, m) * f))
    };
    for w in path.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let vel: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        for s in 0..steps {
            let s0 = s as f64 * h;
            let x0 = point_on(a, b, s0);
            let xm = point_on(a, b, s0 + 0.5 * h);
            let x1 = point_on(a, b, s0 + h);
            let k1 = rhs(&x0, &vel, &frame)?;
            let k2 = rhs(&xm, &vel, &(&frame + &k1 * (0.5 * h)))?;
            let k3 = rhs(&xm, &vel, &(&frame + &k2 * (0.5 * h)))?;
            let k4 = rhs(&x1, &vel, &(&frame + &k3 * h))?;
            frame += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        frames.push(frame.clone());
    }
    Ok(frames)
}

pub fn parallel_transport(
    metric: &MetricField,
    path: &[Vec<f64>],
    value: &TransportValue,
    cfg: TransportConfig,
) -> Result<TransportValue> {
    let frames = transport_frames(metric, path, cfg)?;
    let p = frames.last().expect("at least one frame");
    let pinv = p.clone().try_inverse().expect("parallel frames are invertible");
    Ok(match value {
        TransportValue::Vector(v) => TransportValue::Vector(p * v),
        TransportValue::Endomorphism(e) => TransportValue::Endomorphism(p * e * &pinv),
        TransportValue::Bilinear(s) => TransportValue::Bilinear(pinv.transpose() * s * &pinv),
    })
}

/// Samples of a parametrized curve with coordinate velocity and acceleration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CurveSamples {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub accelerations: Vec<Vec<f64>>,
}

/// RK4 for `ẍ = a(t, x, ẋ)`, recording the acceleration at every sample.
pub fn integrate_second_order<F>(
    domain: &Domain,
    p: &[f64],
    v: &[f64],
    t_end: f64,
    steps: usize,
    accel: F,
) -> Result<CurveSamples>
where
    F: Fn(f64, &[f64], &[f64]) -> Result<Vec<f64>>,
{
    let m = p.len();
    let h = t_end / steps as f64;
    let mut x = p.to_vec();
    let mut u = v.to_vec();
    let mut out = CurveSamples::default();
    let check = |x: &[f64]| -> Result<()> {
        if domain.contains(x) {
            Ok(())
        } else {
            Err(LabError::PathLeavesDomain(x.to_vec()))
        }
    };
    check(&x)?;
    let add = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
    for step in 0..=steps {
        let t = step as f64 * h;
        let a0 = accel(t, &x, &u)?;
        out.times.push(t);
        out.points.push(x.clone());
        out.velocities.push(u.clone());
        out.accelerations.push(a0.clone());
        if step == steps {
            break;
        }
        let (k1x, k1v) = (u.clone(), a0);
        let x2 = add(&x, &k1x, 0.5 * h);
        check(&x2)?;
        let u2 = add(&u, &k1v, 0.5 * h);
        let k2v = accel(t + 0.5 * h, &x2, &u2)?;
        let x3 = add(&x, &u2, 0.5 * h);
        check(&x3)?;
        let u3 = add(&u, &k2v, 0.5 * h);
        let k3v = accel(t + 0.5 * h, &x3, &u3)?;
        let x4 = add(&x, &u3, h);
        check(&x4)?;
        let u4 = add(&u, &k3v, h);
        let k4v = accel(t + h, &x4, &u4)?;
        for i in 0..m {
            x[i] += h / 6.0 * (k1x[i] + 2.0 * u2[i] + 2.0 * u3[i] + u4[i]);
            u[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
        check(&x)?;
    }
    Ok(out)
}

/// `-Γ^i_{jk} v^j v^k` at `x`.
pub fn geodesic_acceleration(metric: &MetricField, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let m = metric.dim();
    let g = metric.eval(x, 1)?;
    let gamma = christoffel_values(&g, m, x)?;
    Ok((0..m)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..m {
                for k in 0..m {
                    s += gamma[(i * m + j) * m + k] * v[j] * v[k];
                }
            }
            -s
        })
        .collect())
}

pub fn geodesic_integrate(metric: &MetricField, p: &[f64], v: &[f64], t_end: f64, steps: usize) -> Result<CurveSamples> {
    integrate_second_order(&metric.domain, p, v, t_end, steps, |_, x, u| geodesic_acceleration(metric, x, u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar() -> MetricField {
        let f = TensorField::from_coords(2, (0, 2), |x| {
            let z = x[0].zero_like();
            vec![x[0].constant_like(1.0), z.clone(), z, x[0].square()]
        });
        MetricField::new(f, Domain::new(vec![0.5, -3.0], vec![3.0, 3.0]))
    }

    fn round_sphere() -> MetricField {
        // stereographic chart of the unit sphere
        let f = TensorField::from_coords(2, (0, 2), |x| {
            let s = &x[0] * &x[0] + &x[1] * &x[1] + 1.0;
            let c = (&s * &s).recip() * 4.0;
            let z = x[0].zero_like();
            vec![c.clone(), z.clone(), z, c]
        });
        MetricField::new(f, Domain::cube(2, 2.0))
    }

    #[test]
    fn polar_christoffels() {
        let g = christoffel(&polar(), &[2.0, 0.3]).unwrap();
        assert!((g[[0, 1, 1]] + 2.0).abs() < 1e-14);
        assert!((g[[1, 0, 1]] - 0.5).abs() < 1e-14);
        assert!((g[[1, 1, 0]] - 0.5).abs() < 1e-14);
        assert!(g[[0, 0, 0]].abs() < 1e-14);
    }

    #[test]
    fn christoffel_jets_agree_with_values() {
        let s = round_sphere();
        let p = [0.3, -0.4];
        let jets = christoffel_jets(&s.eval(&p, 2).unwrap(), 2, &p).unwrap();
        let vals = christoffel_values(&s.eval(&p, 1).unwrap(), 2, &p).unwrap();
        for (a, b) in jets.iter().zip(&vals) {
            assert!((a.value() - b).abs() < 1e-13);
        }
    }

    #[test]
    fn unit_sphere_curvature() {
        let c = riemann_suite(&round_sphere(), &[0.2, 0.7]).unwrap();
        assert!((c.scalar - 2.0).abs() < 1e-12);
        let g = round_sphere().at(&[0.2, 0.7]).unwrap();
        assert!((c.ricci - g).abs().max() < 1e-12);
    }

    #[test]
    fn covariant_derivative_of_metric_vanishes() {
        let s = round_sphere();
        let d = covariant_derivative(&s.field, &s, &[0.4, 0.1]).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn rank_five_is_unsupported() {
        let s = round_sphere();
        let t = TensorField::zero(2, (2, 3));
        assert_eq!(covariant_derivative(&t, &s, &[0.0, 0.0]).unwrap_err(), LabError::UnsupportedRank(2, 3));
    }

    #[test]
    fn order_four_is_an_error() {
        let s = round_sphere();
        assert_eq!(s.eval(&[0.0, 0.0], 4).unwrap_err(), LabError::OrderTooHigh(4));
    }

    #[test]
    fn degenerate_metric_is_reported() {
        let f = TensorField::constant(2, (0, 2), vec![1.0, 1.0, 1.0, 1.0]);
        let g = MetricField::new(f, Domain::cube(2, 1.0));
        assert!(matches!(christoffel(&g, &[0.0, 0.0]), Err(LabError::DegenerateMetric { .. })));
    }

    #[test]
    fn polar_geodesic_is_a_straight_line() {
        let g = polar();
        // start at (x, y) = (1, 0) heading in +y with unit speed
        let c = geodesic_integrate(&g, &[1.0, 0.0], &[0.0, 1.0], 1.0, 1000).unwrap();
        for (x, t) in c.points.iter().zip(&c.times) {
            let (px, py) = (x[0] * x[1].cos(), x[0] * x[1].sin());
            assert!((px - 1.0).abs() < 1e-9 && (py - t).abs() < 1e-9);
        }
    }

    #[test]
    fn path_leaving_domain_is_reported() {
        let g = polar();
        let e = geodesic_integrate(&g, &[1.0, 0.0], &[-1.0, 0.0], 1.0, 100).unwrap_err();
        assert!(matches!(e, LabError::PathLeavesDomain(_)));
    }

    #[test]
    fn halton_points_stay_inside() {
        let d = Domain::new(vec![0.5, -1.0, 2.0], vec![2.0, 1.0, 2.5]);
        let pts = d.halton(50, 3);
        assert_eq!(pts.len(), 50);
        assert!(pts.iter().all(|p| d.contains(p)));
        assert_ne!(d.halton(5, 1), d.halton(5, 2));
        assert_eq!(d.halton(5, 1), d.halton(5, 1));
    }
}
