//! Holonomy algebras by Ambrose–Singer sampling, and the dimension of the
//! space of parallel symmetric hermitian (0,2)-tensors.
//!
//! Curvature endomorphisms at the vertices of random closed polygons through
//! the base point are transported back along the polygon; their span is the
//! (sampled) holonomy algebra. Invariant tensors are read off at the base.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{self, MetricField, TransportConfig, TransportValue};
use crate::error::{LabError, Result};
use crate::kahler::KahlerStructure;
use crate::linalg;
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolonomyConfig {
    pub loops: usize,
    pub seed: u64,
    pub steps_per_segment: usize,
    pub delta_span: f64,
    pub delta_null: f64,
}

impl Default for HolonomyConfig {
    fn default() -> Self {
        HolonomyConfig { loops: 4, seed: 0, steps_per_segment: 96, delta_span: 1e-6, delta_null: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct HolonomySample {
    pub base: Vec<f64>,
    pub generators: Vec<DMatrix<f64>>,
    /// Orthonormal (Frobenius) basis of the sampled algebra.
    pub span_basis: Vec<DMatrix<f64>>,
    pub span_dim: usize,
    /// The metric was not definite at the base; nothing is guaranteed.
    pub indefinite: bool,
}

#[derive(Debug, Clone)]
pub struct InvariantTensorSpace {
    pub dimension: usize,
    pub basis: Vec<DMatrix<f64>>,
    /// Singular values of the constraint system, ascending.
    pub singular_values: Vec<f64>,
}

/// Below this, a curvature endomorphism counts as zero however small the
/// others are.
const ABS_FLOOR: f64 = 1e-9;

/// Vertices of loop `i`: base, three random points of the shrunken box, base.
fn loop_vertices(metric: &MetricField, base: &[f64], seed: u64, i: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1)));
    let d = metric.domain.shrink(0.9);
    let mut path = vec![base.to_vec()];
    for _ in 0..3 {
        path.push(d.lo.iter().zip(&d.hi).map(|(a, b)| rng.gen_range(*a..=*b)).collect());
    }
    path.push(base.to_vec());
    path
}

/// Curvature endomorphisms at the vertices of one loop, pulled back to the base.
fn loop_generators(metric: &MetricField, path: &[Vec<f64>], steps: usize) -> Result<Vec<DMatrix<f64>>> {
    let frames = chart::transport_frames(metric, path, TransportConfig { steps_per_segment: steps })?;
    let m = metric.dim();
    let mut out = Vec::new();
    for v in 1..path.len() - 1 {
        let p = &frames[v];
        let pinv = p.clone().try_inverse().ok_or(LabError::DegenerateMetric { point: path[v].clone(), det: 0.0 })?;
        let curv = chart::riemann_suite(metric, &path[v])?;
        for k in 0..m {
            for l in k + 1..m {
                out.push(&pinv * curv.endomorphism(k, l) * p);
            }
        }
    }
    Ok(out)
}

fn span(generators: &[DMatrix<f64>], m: usize, rel: f64) -> Vec<DMatrix<f64>> {
    if generators.is_empty() {
        return Vec::new();
    }
    let rows = DMatrix::from_fn(generators.len(), m * m, |r, c| generators[r][(c / m, c % m)]);
    linalg::row_space_basis(&rows, rel, ABS_FLOOR)
        .into_iter()
        .map(|v| DMatrix::from_fn(m, m, |i, j| v[i * m + j]))
        .collect()
}

fn curvature_at_base(metric: &MetricField, base: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let m = metric.dim();
    let c = chart::riemann_suite(metric, base)?;
    Ok((0..m).flat_map(|k| (k + 1..m).map(move |l| (k, l))).map(|(k, l)| c.endomorphism(k, l)).collect())
}

/// Generators from `loops` loops, computed in parallel (bounded by the job cap).
fn sample_generators(metric: &MetricField, base: &[f64], cfg: &HolonomyConfig, range: std::ops::Range<usize>) -> Result<Vec<DMatrix<f64>>> {
    let per_loop: Vec<Result<Vec<DMatrix<f64>>>> = parallel::install(|| {
        range
            .into_par_iter()
            .map(|i| loop_generators(metric, &loop_vertices(metric, base, cfg.seed, i), cfg.steps_per_segment))
            .collect()
    });
    let mut out = Vec::new();
    for g in per_loop {
        out.extend(g?);
    }
    Ok(out)
}

fn check_base(metric: &MetricField, base: &[f64]) -> Result<bool> {
    if base.len() != metric.dim() {
        return Err(LabError::PointDimension { expected: metric.dim(), got: base.len() });
    }
    if !metric.domain.contains(base) {
        return Err(LabError::PathLeavesDomain(base.to_vec()));
    }
    Ok(!metric.is_definite_at(base)?)
}

pub fn holonomy_algebra(ks: &KahlerStructure, base: &[f64], cfg: &HolonomyConfig) -> Result<HolonomySample> {
    let metric = &ks.metric;
    let indefinite = check_base(metric, base)?;
    let mut generators = curvature_at_base(metric, base)?;
    generators.extend(sample_generators(metric, base, cfg, 0..cfg.loops)?);
    let span_basis = span(&generators, metric.dim(), cfg.delta_span);
    Ok(HolonomySample { base: base.to_vec(), span_dim: span_basis.len(), generators, span_basis, indefinite })
}

/// Largest `|g h + hᵀ g|` and `|h J − J h|` over the generators, relative to
/// the largest generator.
pub fn generator_residuals(ks: &KahlerStructure, hs: &HolonomySample) -> Result<(f64, f64)> {
    let g = ks.g_at(&hs.base)?;
    let j = ks.j_at(&hs.base)?;
    let scale = hs.generators.iter().fold(0.0f64, |s, h| s.max(linalg::max_abs(h)));
    if scale < ABS_FLOOR {
        return Ok((0.0, 0.0));
    }
    let (mut skew, mut comm) = (0.0f64, 0.0f64);
    for h in &hs.generators {
        skew = skew.max(linalg::max_abs(&(&g * h + h.transpose() * &g)));
        comm = comm.max(linalg::max_abs(&(h * &j - &j * h)));
    }
    Ok((skew / scale, comm / scale))
}

/// Symmetric `S` with `S(hX, Y) + S(X, hY) = 0` for the span and `S(J·, J·) = S`.
pub fn invariant_tensor_dim(hs: &HolonomySample, j: &DMatrix<f64>, delta_null: f64) -> InvariantTensorSpace {
    let m = j.nrows();
    let nvar = m * (m + 1) / 2;
    let unit = |k: usize| {
        let mut v = vec![0.0; nvar];
        v[k] = 1.0;
        linalg::vec_to_sym(&v, m)
    };
    let maps: Vec<Box<dyn Fn(&DMatrix<f64>) -> DMatrix<f64>>> = std::iter::once(Box::new(|s: &DMatrix<f64>| {
        j.transpose() * s * j - s
    }) as Box<dyn Fn(&DMatrix<f64>) -> DMatrix<f64>>)
    .chain(hs.span_basis.iter().map(|h| {
        let h = h.clone();
        Box::new(move |s: &DMatrix<f64>| h.transpose() * s + s * &h) as Box<dyn Fn(&DMatrix<f64>) -> DMatrix<f64>>
    }))
    .collect();
    let mut a = DMatrix::zeros(maps.len() * m * m, nvar);
    for k in 0..nvar {
        let s = unit(k);
        for (c, f) in maps.iter().enumerate() {
            let img = f(&s);
            for i in 0..m * m {
                a[(c * m * m + i, k)] = img[(i / m, i % m)];
            }
        }
    }
    let (null, mut sv) = linalg::null_space(&a, delta_null);
    sv.sort_by(f64::total_cmp);
    InvariantTensorSpace {
        dimension: null.len(),
        basis: null.iter().map(|v| linalg::vec_to_sym(v.as_slice(), m)).collect(),
        singular_values: sv,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDecomposition {
    /// `dim T₀`, the common kernel of the algebra.
    pub trivial: usize,
    /// Dimensions of the remaining blocks, descending.
    pub blocks: Vec<usize>,
    /// Every block is `J`-invariant and even-dimensional.
    pub j_invariant: bool,
}

impl BlockDecomposition {
    /// `[dim T₀, dim T₁, ...]`, leaving out a zero `T₀`.
    pub fn dims(&self) -> Vec<usize> {
        let mut v = Vec::new();
        if self.trivial > 0 {
            v.push(self.trivial);
        }
        v.extend(&self.blocks);
        v
    }
}

/// Splits `T₀^⊥` by the eigenspaces of a generic invariant endomorphism
/// `g⁻¹S`, `S` a generic combination of the invariant basis. Needs a
/// definite metric.
pub fn block_decomposition(ks: &KahlerStructure, hs: &HolonomySample, inv: &InvariantTensorSpace, seed: u64) -> Result<BlockDecomposition> {
    let m = ks.dim();
    let g = ks.g_at(&hs.base)?;
    let j = ks.j_at(&hs.base)?;
    let e = linalg::orthonormal_frame(&g).ok_or_else(|| LabError::BadParams("block decomposition needs a definite metric".into()))?;
    let einv = e.clone().try_inverse().expect("frame is invertible");
    // everything in the orthonormal frame: h' = E⁻¹ h E is skew
    let hs_f: Vec<DMatrix<f64>> = hs.span_basis.iter().map(|h| &einv * h * &e).collect();
    let kernel = if hs_f.is_empty() {
        DMatrix::identity(m, m)
    } else {
        let stacked = DMatrix::from_fn(hs_f.len() * m, m, |r, c| hs_f[r / m][(r % m, c)]);
        let (null, _) = linalg::null_space(&stacked, 1e-6);
        DMatrix::from_columns(&null)
    };
    let trivial = if hs_f.is_empty() { m } else { kernel.ncols() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = DMatrix::zeros(m, m);
    for b in &inv.basis {
        s += b * rng.gen_range(0.5..1.5);
    }
    let sf = e.transpose() * s * &e;
    // project to the orthogonal complement of T₀
    let proj = DMatrix::identity(m, m) - &kernel * kernel.transpose();
    let sf = &proj * sf * &proj;
    let eig = sf.symmetric_eigen();
    let mut pairs: Vec<(f64, DVector<f64>)> = (0..m)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
        .filter(|(_, v)| (kernel.transpose() * v).norm() < 1e-6)
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scale = pairs.iter().fold(0.0f64, |s, (l, _)| s.max(l.abs())).max(1e-300);
    let mut groups: Vec<Vec<DVector<f64>>> = Vec::new();
    let mut last = f64::NAN;
    for (l, v) in pairs {
        if groups.is_empty() || (l - last).abs() > 1e-6 * scale {
            groups.push(Vec::new());
        }
        last = l;
        groups.last_mut().unwrap().push(v);
    }
    let jf = &einv * &j * &e;
    let mut j_invariant = true;
    for grp in &groups {
        let basis = DMatrix::from_columns(grp);
        let p = &basis * basis.transpose();
        j_invariant &= grp.len() % 2 == 0 && linalg::max_abs(&(&p * &jf - &jf * &p)) < 1e-6;
    }
    let mut blocks: Vec<usize> = groups.iter().map(Vec::len).collect();
    blocks.sort_by(|a, b| b.cmp(a));
    Ok(BlockDecomposition { trivial, blocks, j_invariant })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelTensorDim {
    pub dimension: usize,
    /// `(loops, span_dim, D̂)` for `L`, `2L` and `4L` loops.
    pub history: Vec<(usize, usize, usize)>,
    pub stabilized: bool,
    pub indefinite: bool,
}

/// `D̂` with loops `L`, `2L`, `4L`; the loops of a smaller count are a prefix
/// of the larger ones, so the span is monotone in the count.
pub fn parallel_tensor_dim_report(ks: &KahlerStructure, base: &[f64], cfg: &HolonomyConfig) -> Result<ParallelTensorDim> {
    let metric = &ks.metric;
    let indefinite = check_base(metric, base)?;
    let m = metric.dim();
    let j = ks.j_at(base)?;
    let l = cfg.loops.max(1);
    let mut generators = curvature_at_base(metric, base)?;
    let mut history = Vec::new();
    let mut done = 0;
    for count in [l, 2 * l, 4 * l] {
        generators.extend(sample_generators(metric, base, cfg, done..count)?);
        done = count;
        let basis = span(&generators, m, cfg.delta_span);
        let hs = HolonomySample { base: base.to_vec(), generators: Vec::new(), span_dim: basis.len(), span_basis: basis, indefinite };
        let inv = invariant_tensor_dim(&hs, &j, cfg.delta_null);
        history.push((count, hs.span_dim, inv.dimension));
    }
    let stabilized = history.windows(2).all(|w| w[0].1 == w[1].1 && w[0].2 == w[1].2);
    Ok(ParallelTensorDim { dimension: history.last().unwrap().2, history, stabilized, indefinite })
}

/// `D̂`, or `NonStabilized` when doubling the loop count changes it.
pub fn parallel_tensor_dim(ks: &KahlerStructure, base: &[f64], cfg: &HolonomyConfig) -> Result<usize> {
    let r = parallel_tensor_dim_report(ks, base, cfg)?;
    if !r.stabilized {
        return Err(LabError::NonStabilized(r.history.iter().map(|h| h.2).collect()));
    }
    Ok(r.dimension)
}

/// Transports the bilinear form `s` from `base` to a common end point along
/// `paths` different polygons and returns the largest disagreement, relative
/// to `|s|`. For a holonomy-invariant `s` the result is path independent.
pub fn transport_consistency(metric: &MetricField, base: &[f64], s: &DMatrix<f64>, paths: usize, seed: u64, steps: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = metric.domain.shrink(0.9);
    let mut pick = || -> Vec<f64> { d.lo.iter().zip(&d.hi).map(|(a, b)| rng.gen_range(*a..=*b)).collect() };
    let end = pick();
    let cfg = TransportConfig { steps_per_segment: steps };
    let mut results = Vec::with_capacity(paths);
    for _ in 0..paths {
        let path = vec![base.to_vec(), pick(), pick(), end.clone()];
        match chart::parallel_transport(metric, &path, &TransportValue::Bilinear(s.clone()), cfg)? {
            TransportValue::Bilinear(t) => results.push(t),
            _ => unreachable!(),
        }
    }
    let scale = linalg::max_abs(s).max(1e-300);
    Ok(results.iter().skip(1).fold(0.0f64, |r, t| r.max(linalg::max_abs(&(t - &results[0])) / scale)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn quick() -> HolonomyConfig {
        HolonomyConfig { loops: 2, steps_per_segment: 48, ..Default::default() }
    }

    #[test]
    fn flat_space_has_trivial_holonomy() {
        let e = catalog::flat(3).unwrap();
        let base = e.structure.domain().center();
        let hs = holonomy_algebra(&e.structure, &base, &quick()).unwrap();
        assert_eq!(hs.span_dim, 0);
        let inv = invariant_tensor_dim(&hs, &e.structure.j_at(&base).unwrap(), 1e-6);
        assert_eq!(inv.dimension, 9);
        let b = block_decomposition(&e.structure, &hs, &inv, 1).unwrap();
        assert_eq!(b.dims(), vec![6]);
    }

    #[test]
    fn fubini_study_line_has_u1_holonomy() {
        let e = catalog::fubini_study(1, 1.0).unwrap();
        let base = e.structure.domain().center();
        let hs = holonomy_algebra(&e.structure, &base, &quick()).unwrap();
        assert_eq!(hs.span_dim, 1);
        let (skew, comm) = generator_residuals(&e.structure, &hs).unwrap();
        assert!(skew < 1e-8 && comm < 1e-8);
        let inv = invariant_tensor_dim(&hs, &e.structure.j_at(&base).unwrap(), 1e-6);
        assert_eq!(inv.dimension, 1);
    }
}
