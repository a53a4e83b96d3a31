//! Ground-truth Kähler manifolds: flat space, Fubini–Study in an affine
//! chart, a Ricci-flat 4-dimensional example with a nonparallel solution,
//! products and cones.
//!
//! Manifolds are described in JSON as
//! `{"construct": "catalog", "key": ..., "params": {...}}`,
//! `{"construct": "product", "factors": [...]}` or
//! `{"construct": "conify", "base": {...}}`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chart::{self, Domain, MetricField, TensorField};
use crate::cone::{self, ConeBundle};
use crate::cproj::CProjSolution;
use crate::error::{LabError, Result};
use crate::jet::Jet;
use crate::kahler::{standard_complex_matrix, standard_complex_structure, KahlerStructure};
use crate::linalg;

pub const MAX_COMPLEX_DIM: usize = 7;

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub key: String,
    pub params: Value,
    pub structure: KahlerStructure,
    pub solutions: Vec<(String, CProjSolution)>,
    pub vector_fields: Vec<(String, TensorField)>,
    /// Constant the chart metric was multiplied by at build time.
    pub scale: f64,
    pub cone: Option<Box<ConeBundle>>,
}

impl CatalogEntry {
    fn new(key: &str, params: Value, structure: KahlerStructure) -> CatalogEntry {
        CatalogEntry {
            key: key.to_string(),
            params,
            structure,
            solutions: Vec::new(),
            vector_fields: Vec::new(),
            scale: 1.0,
            cone: None,
        }
    }

    pub fn solution(&self, name: &str) -> Option<&CProjSolution> {
        self.solutions.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn vector_field(&self, name: &str) -> Option<&TensorField> {
        self.vector_fields.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(tag = "construct", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManifoldSpec {
    Catalog {
        key: String,
        #[serde(default)]
        params: Value,
    },
    Product {
        factors: Vec<ManifoldSpec>,
    },
    Conify {
        base: Box<ManifoldSpec>,
    },
}

impl ManifoldSpec {
    pub fn from_json(text: &str) -> Result<ManifoldSpec> {
        serde_json::from_str(text).map_err(|e| LabError::SchemaError(e.to_string()))
    }

    pub fn build(&self) -> Result<CatalogEntry> {
        match self {
            ManifoldSpec::Catalog { key, params } => get_example(key, params),
            ManifoldSpec::Product { factors } => {
                let built = factors.iter().map(ManifoldSpec::build).collect::<Result<Vec<_>>>()?;
                product(&built)
            }
            ManifoldSpec::Conify { base } => conify(&base.build()?),
        }
    }
}

pub const KEYS: [&str; 5] = ["flat", "fubini_study", "ricciflat4d", "product", "conify"];

fn param_usize(params: &Value, names: &[&str], default: Option<usize>) -> Result<usize> {
    for n in names {
        if let Some(v) = params.get(*n) {
            return v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| LabError::BadParams(format!("'{n}' must be a non-negative integer")));
        }
    }
    default.ok_or_else(|| LabError::BadParams(format!("missing parameter '{}'", names[0])))
}

fn param_f64(params: &Value, name: &str, default: f64) -> Result<f64> {
    match params.get(name) {
        None => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| LabError::BadParams(format!("'{name}' must be a number"))),
    }
}

pub fn get_example(key: &str, params: &Value) -> Result<CatalogEntry> {
    let params = if params.is_null() { json!({}) } else { params.clone() };
    match key {
        "flat" => flat(param_usize(&params, &["complex_dim", "n"], Some(1))?),
        "fubini_study" => {
            fubini_study(param_usize(&params, &["n", "complex_dim"], Some(1))?, param_f64(&params, "scale", 1.0)?)
        }
        "ricciflat4d" => ricciflat4d(),
        "product" => {
            let f = params.get("factors").ok_or_else(|| LabError::BadParams("product needs 'factors'".into()))?;
            let specs: Vec<ManifoldSpec> =
                serde_json::from_value(f.clone()).map_err(|e| LabError::SchemaError(e.to_string()))?;
            product(&specs.iter().map(ManifoldSpec::build).collect::<Result<Vec<_>>>()?)
        }
        "conify" => {
            let b = params.get("base").ok_or_else(|| LabError::BadParams("conify needs 'base'".into()))?;
            let spec: ManifoldSpec = serde_json::from_value(b.clone()).map_err(|e| LabError::SchemaError(e.to_string()))?;
            conify(&spec.build()?)
        }
        other => Err(LabError::UnknownKey(other.to_string())),
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_COMPLEX_DIM {
        return Err(LabError::BadParams(format!("complex dimension {n} outside 1..={MAX_COMPLEX_DIM}")));
    }
    Ok(())
}

/// `ℂⁿ` with the Euclidean metric on the box `[-1, 1]^{2n}`, `τ_j = ½ ω_ij x^i`.
pub fn flat(n: usize) -> Result<CatalogEntry> {
    check_dim(n)?;
    let m = 2 * n;
    let metric = MetricField::new(TensorField::constant(m, (0, 2), DMatrix::<f64>::identity(m, m).as_slice().to_vec()), Domain::cube(m, 1.0));
    let j = standard_complex_matrix(m);
    let tau = TensorField::from_coords(m, (0, 1), move |x| {
        (0..m)
            .map(|b| {
                let mut acc = x[0].zero_like();
                for i in 0..m {
                    acc += &(&x[i] * (0.5 * j[(i, b)]));
                }
                acc
            })
            .collect()
    });
    let ks = KahlerStructure::new(metric, standard_complex_structure(m), Some(tau));
    let mut e = CatalogEntry::new("flat", json!({ "complex_dim": n }), ks);
    e.solutions.push(("metric".into(), CProjSolution::trivial(&e.structure.metric, 0.0)));
    let mut l0 = vec![0.0; m];
    l0[0] = 1.0;
    e.solutions.push(("translation".into(), flat_linear_solution(n, &l0)));
    e.solutions.push(("radial".into(), flat_radial_solution(n)));
    Ok(e)
}

fn position_forms(x: &[Jet], m: usize) -> (Vec<Jet>, Vec<Jet>) {
    // g(x, ·) = x♭ and ω(x, ·)_b = x^a J_ab with J the standard matrix (g = I)
    let j = standard_complex_matrix(m);
    let xf = x.to_vec();
    let wx = (0..m)
        .map(|b| {
            let mut acc = x[0].zero_like();
            for a in 0..m {
                acc += &(&x[a] * j[(a, b)]);
            }
            acc
        })
        .collect();
    (xf, wx)
}

/// `A = g(x,·)⊗λ₀ + λ₀⊗g(x,·) + ω(x,·)⊗λ₀J + λ₀J⊗ω(x,·)` on flat `ℂⁿ`:
/// solves the main equation with `λ = λ₀` constant, `μ = 0`, `B = 0`.
pub fn flat_linear_solution(n: usize, lambda0: &[f64]) -> CProjSolution {
    let m = 2 * n;
    let j = standard_complex_matrix(m);
    let l0 = lambda0.to_vec();
    let l0j: Vec<f64> = (0..m).map(|b| (0..m).map(|s| l0[s] * j[(s, b)]).sum()).collect();
    let (l0a, l0ja) = (l0.clone(), l0j.clone());
    let a = TensorField::from_coords(m, (0, 2), move |x| {
        let (gx, wx) = position_forms(x, m);
        (0..m * m)
            .map(|k| {
                let (p, q) = (k / m, k % m);
                &gx[p] * l0a[q] + &gx[q] * l0a[p] + &wx[p] * l0ja[q] + &wx[q] * l0ja[p]
            })
            .collect()
    });
    CProjSolution::new(a, TensorField::constant(m, (0, 1), l0))
        .with_mu_b(TensorField::constant(m, (0, 0), vec![0.0]), 0.0)
}

/// `A = g(x,·)⊗g(x,·) + ω(x,·)⊗ω(x,·)`, `λ = x♭`, `μ = 1`, `B = 0`.
pub fn flat_radial_solution(n: usize) -> CProjSolution {
    let m = 2 * n;
    let a = TensorField::from_coords(m, (0, 2), move |x| {
        let (gx, wx) = position_forms(x, m);
        (0..m * m).map(|k| &gx[k / m] * &gx[k % m] + &wx[k / m] * &wx[k % m]).collect()
    });
    let lambda = TensorField::from_coords(m, (0, 1), |x| x.to_vec());
    CProjSolution::new(a, lambda).with_mu_b(TensorField::constant(m, (0, 0), vec![1.0]), 0.0)
}

/// Real and imaginary parts of `u = P Z` and `Q = Z* P Z` for `Z = (1, z)`.
fn fs_parts(x: &[Jet], pr: &DMatrix<f64>, pi: &DMatrix<f64>) -> (Vec<Jet>, Vec<Jet>, Jet) {
    let n = x.len() / 2;
    let one = x[0].constant_like(1.0);
    let zero = x[0].zero_like();
    let xs: Vec<Jet> = std::iter::once(one).chain((0..n).map(|a| x[2 * a].clone())).collect();
    let ys: Vec<Jet> = std::iter::once(zero).chain((0..n).map(|a| x[2 * a + 1].clone())).collect();
    let mut ur = Vec::with_capacity(n + 1);
    let mut ui = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut r = x[0].zero_like();
        let mut s = x[0].zero_like();
        for k in 0..=n {
            r += &(&xs[k] * pr[(i, k)] - &ys[k] * pi[(i, k)]);
            s += &(&ys[k] * pr[(i, k)] + &xs[k] * pi[(i, k)]);
        }
        ur.push(r);
        ui.push(s);
    }
    let mut q = x[0].zero_like();
    for i in 0..=n {
        q += &(&xs[i] * &ur[i] + &ys[i] * &ui[i]);
    }
    (ur, ui, q)
}

/// Kähler metric with potential `ln(Z* P Z)` (`P = Pr + i Pi` positive
/// hermitian), multiplied by `c`. `P = I` is Fubini–Study; other `P` give its
/// pullbacks under projective transformations.
fn fs_metric_field(n: usize, pr: DMatrix<f64>, pi: DMatrix<f64>, c: f64) -> TensorField {
    let m = 2 * n;
    TensorField::from_coords(m, (0, 2), move |x| {
        let (ur, ui, q) = fs_parts(x, &pr, &pi);
        let qi = q.recip();
        let qi2 = qi.square();
        let mut g = vec![x[0].zero_like(); m * m];
        for a in 0..n {
            for b in 0..n {
                let (ia, ib) = (a + 1, b + 1);
                let hr = &qi * pr[(ib, ia)] - (&ur[ia] * &ur[ib] + &ui[ia] * &ui[ib]) * &qi2;
                let hi = &qi * pi[(ib, ia)] - (&ur[ia] * &ui[ib] - &ui[ia] * &ur[ib]) * &qi2;
                g[(2 * a) * m + 2 * b] = &hr * c;
                g[(2 * a + 1) * m + 2 * b + 1] = &hr * c;
                g[(2 * a) * m + 2 * b + 1] = &hi * c;
                g[(2 * a + 1) * m + 2 * b] = &hi * (-c);
            }
        }
        g
    })
}

/// `τ = ¼ dK∘J` for `K = c ln(Z* P Z)`.
fn fs_potential(n: usize, pr: DMatrix<f64>, pi: DMatrix<f64>, c: f64) -> TensorField {
    TensorField::from_coords(2 * n, (0, 1), move |x| {
        let (ur, ui, q) = fs_parts(x, &pr, &pi);
        let s = q.recip() * (0.5 * c);
        (0..n).flat_map(|a| [&ui[a + 1] * &s, &ur[a + 1] * &s * -1.0]).collect()
    })
}

fn fs_domain(n: usize) -> Domain {
    Domain::cube(2 * n, 1.0)
}

/// Factor `c₀` with `Scal(c₀ g_raw) = 4n(n+1)`, measured at the chart center.
pub fn fubini_study_normalization(n: usize) -> Result<f64> {
    let m = 2 * n;
    let raw = MetricField::new(fs_metric_field(n, DMatrix::identity(n + 1, n + 1), DMatrix::zeros(n + 1, n + 1), 1.0), fs_domain(n));
    let scal = chart::riemann_suite(&raw, &vec![0.0; m])?.scalar;
    Ok(scal / (4.0 * n as f64 * (n as f64 + 1.0)))
}

/// Fubini–Study on `ℂPⁿ` in the chart `Z = (1, z)`, normalized to
/// `Scal = 4n(n+1)` and then multiplied by `scale`. Its solutions have
/// `B = −1/scale`.
pub fn fubini_study(n: usize, scale: f64) -> Result<CatalogEntry> {
    check_dim(n)?;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(LabError::BadParams(format!("scale must be positive, got {scale}")));
    }
    let m = 2 * n;
    let c0 = fubini_study_normalization(n)?;
    let c = c0 * scale;
    let id = DMatrix::identity(n + 1, n + 1);
    let z = DMatrix::zeros(n + 1, n + 1);
    let metric = MetricField::new(fs_metric_field(n, id.clone(), z.clone(), c), fs_domain(n));
    let ks = KahlerStructure::new(metric, standard_complex_structure(m), Some(fs_potential(n, id, z, c)));
    let mut e = CatalogEntry::new("fubini_study", json!({ "n": n, "scale": scale }), ks);
    e.scale = c;
    let b = -1.0 / c;
    e.solutions.push(("metric".into(), CProjSolution::trivial(&e.structure.metric, b)));
    let h = DMatrix::from_fn(n + 1, n + 1, |i, k| if i == k { (i + 1) as f64 } else if i + 1 == k || k + 1 == i { 0.3 } else { 0.0 });
    let hi = DMatrix::from_fn(n + 1, n + 1, |i, k| if k == i + 1 { 0.2 } else if i == k + 1 { -0.2 } else { 0.0 });
    e.solutions.push(("killing_potential".into(), fs_solution(&e, &h, &hi)?));
    e.vector_fields.push(("rotation".into(), fs_rotation(n, 0)));
    Ok(e)
}

/// `μ = Z* H Z / Z* Z` as a scalar field, `H = Hr + i Hi` hermitian.
pub fn fs_potential_function(n: usize, hr: &DMatrix<f64>, hi: &DMatrix<f64>) -> TensorField {
    let (hr, hi) = (hr.clone(), hi.clone());
    TensorField::from_coords(2 * n, (0, 0), move |x| {
        let (_, _, num) = fs_parts(x, &hr, &hi);
        let id = DMatrix::identity(n + 1, n + 1);
        let (_, _, den) = fs_parts(x, &id, &DMatrix::zeros(n + 1, n + 1));
        vec![num / den]
    })
}

/// The solution generated by the potential `Z* H Z / Z* Z`.
pub fn fs_solution(entry: &CatalogEntry, hr: &DMatrix<f64>, hi: &DMatrix<f64>) -> Result<CProjSolution> {
    let n = entry.structure.complex_dim();
    check_hermitian_pair(hr, hi)?;
    let mu = fs_potential_function(n, hr, hi);
    CProjSolution::from_potential(&entry.structure.metric, mu, -1.0 / entry.scale)
}

fn check_hermitian_pair(hr: &DMatrix<f64>, hi: &DMatrix<f64>) -> Result<()> {
    if linalg::max_abs(&(hr - hr.transpose())) > 1e-12 || linalg::max_abs(&(hi + hi.transpose())) > 1e-12 {
        return Err(LabError::BadParams("H must be hermitian".into()));
    }
    Ok(())
}

/// Random hermitian `(Hr, Hi)` with entries in `[-1, 1]`.
pub fn random_hermitian<R: Rng>(size: usize, rng: &mut R) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut hr = DMatrix::zeros(size, size);
    let mut hi = DMatrix::zeros(size, size);
    for i in 0..size {
        for k in i..size {
            let v = rng.gen_range(-1.0..1.0);
            hr[(i, k)] = v;
            hr[(k, i)] = v;
            if k > i {
                let w = rng.gen_range(-1.0..1.0);
                hi[(i, k)] = w;
                hi[(k, i)] = -w;
            }
        }
    }
    (hr, hi)
}

/// Killing field `x_a ∂_{y_a} − y_a ∂_{x_a}` of Fubini–Study.
pub fn fs_rotation(n: usize, a: usize) -> TensorField {
    TensorField::from_coords(2 * n, (1, 0), move |x| {
        let mut v = vec![x[0].zero_like(); 2 * n];
        v[2 * a] = -&x[2 * a + 1];
        v[2 * a + 1] = x[2 * a].clone();
        v
    })
}

/// The Fubini–Study metric of `entry` pulled back by the projective map
/// `Z ↦ M Z` with `M* M = P`: the metric with potential `c ln(Z* P Z)`.
/// It is c-projectively equivalent to, and not affinely equivalent with,
/// Fubini–Study whenever `P` is not a multiple of `I`.
pub fn fs_projective_pullback(entry: &CatalogEntry, pr: &DMatrix<f64>, pi: &DMatrix<f64>) -> Result<MetricField> {
    let n = entry.structure.complex_dim();
    check_hermitian_pair(pr, pi)?;
    if pr.nrows() != n + 1 {
        return Err(LabError::BadParams(format!("P must be {}×{}", n + 1, n + 1)));
    }
    Ok(MetricField::new(fs_metric_field(n, pr.clone(), pi.clone(), entry.scale), entry.structure.domain().clone()))
}

/// A Kähler structure for `(g̃, J)` from `fs_projective_pullback`, with its
/// closed-form potential.
pub fn fs_projective_structure(entry: &CatalogEntry, pr: &DMatrix<f64>, pi: &DMatrix<f64>) -> Result<KahlerStructure> {
    let n = entry.structure.complex_dim();
    let metric = fs_projective_pullback(entry, pr, pi)?;
    Ok(KahlerStructure::new(metric, entry.structure.complex.clone(), Some(fs_potential(n, pr.clone(), pi.clone(), entry.scale))))
}

/// `g = (x−y)(dx² + dy²) + ((ds + x dt)² + (ds + y dt)²)/(x−y)` on
/// `x ∈ [1.5, 2.5]`, `y ∈ [0, 1]`, `|s|, |t| ≤ 1`, with `ω = dx∧(ds + y dt) +
/// dy∧(ds + x dt)`, `J = g⁻¹ω`, `τ = (x+y) ds + xy dt`, the solution
/// `A = x ∂x⊗dx + y ∂y⊗dy + (x+y) ∂s⊗ds + xy ∂s⊗dt − ∂t⊗ds` and the field
/// `v = x∂x + y∂y + 2s∂s + t∂t`.
pub fn ricciflat4d() -> Result<CatalogEntry> {
    let m = 4;
    let gfn = |x: &[Jet]| -> Vec<Jet> {
        let d = &x[0] - &x[1];
        let di = d.recip();
        let one = x[0].constant_like(1.0);
        let zero = x[0].zero_like();
        let a = [zero.clone(), zero.clone(), one.clone(), x[0].clone()];
        let b = [zero.clone(), zero, one, x[1].clone()];
        let mut g = Vec::with_capacity(16);
        for i in 0..4 {
            for j in 0..4 {
                let mut v = (&a[i] * &a[j] + &b[i] * &b[j]) * &di;
                if i == j && i < 2 {
                    v += &d;
                }
                g.push(v);
            }
        }
        g
    };
    let wfn = |x: &[Jet]| -> Vec<Jet> {
        let one = x[0].constant_like(1.0);
        let zero = x[0].zero_like();
        let dx = [one.clone(), zero.clone(), zero.clone(), zero.clone()];
        let dy = [zero.clone(), one.clone(), zero.clone(), zero.clone()];
        let u = [zero.clone(), zero.clone(), one.clone(), x[1].clone()];
        let v = [zero.clone(), zero, one, x[0].clone()];
        (0..16)
            .map(|k| {
                let (i, j) = (k / 4, k % 4);
                &dx[i] * &u[j] - &dx[j] * &u[i] + &dy[i] * &v[j] - &dy[j] * &v[i]
            })
            .collect()
    };
    let domain = Domain::new(vec![1.5, 0.0, -1.0, -1.0], vec![2.5, 1.0, 1.0, 1.0]);
    let metric = MetricField::new(TensorField::from_coords(m, (0, 2), gfn), domain);
    let complex = TensorField::new(m, (1, 1), move |p, order| {
        let x = Jet::coordinates(p, order);
        let g = gfn(&x);
        let (gi, _) = linalg::jet_inverse_det(&g, m).ok_or(LabError::DegenerateMetric { point: p.to_vec(), det: 0.0 })?;
        Ok(linalg::jet_matmul(&gi, &wfn(&x), m))
    });
    let tau = TensorField::from_coords(m, (0, 1), |x| {
        let z = x[0].zero_like();
        vec![z.clone(), z, &x[0] + &x[1], &x[0] * &x[1]]
    });
    let ks = KahlerStructure::new(metric, complex, Some(tau));
    let a = TensorField::from_coords(m, (0, 2), move |x| {
        let one = x[0].constant_like(1.0);
        let zero = x[0].zero_like();
        let l = [
            x[0].clone(), zero.clone(), zero.clone(), zero.clone(),
            zero.clone(), x[1].clone(), zero.clone(), zero.clone(),
            zero.clone(), zero.clone(), &x[0] + &x[1], &x[0] * &x[1],
            zero.clone(), zero.clone(), -one, zero,
        ];
        linalg::jet_matmul(&gfn(x), &l, m)
    });
    let mut e = CatalogEntry::new("ricciflat4d", json!({}), ks);
    e.solutions.push(("A".into(), CProjSolution::from_tensor(&e.structure.metric, a)));
    e.vector_fields.push((
        "v".into(),
        TensorField::from_coords(m, (1, 0), |x| vec![x[0].clone(), x[1].clone(), &x[2] * 2.0, x[3].clone()]),
    ));
    Ok(e)
}

/// Block-diagonal product; factor potentials are summed when all exist.
pub fn product(factors: &[CatalogEntry]) -> Result<CatalogEntry> {
    if factors.is_empty() {
        return Err(LabError::BadParams("product needs at least one factor".into()));
    }
    let dims: Vec<usize> = factors.iter().map(|f| f.structure.dim()).collect();
    let m: usize = dims.iter().sum();
    if m / 2 > MAX_COMPLEX_DIM + 1 {
        return Err(LabError::BadParams(format!("product of complex dimension {} is too large", m / 2)));
    }
    let offsets: Vec<usize> = dims.iter().scan(0, |s, d| {
        let o = *s;
        *s += d;
        Some(o)
    }).collect();
    let domain = factors[1..]
        .iter()
        .fold(factors[0].structure.domain().clone(), |d, f| d.product(f.structure.domain()));
    let block = |fields: Vec<TensorField>, rank: (usize, usize)| -> TensorField {
        let (dims, offsets) = (dims.clone(), offsets.clone());
        TensorField::new(m, rank, move |p, order| {
            let mut out = vec![Jet::constant(m, order, 0.0); m.pow((rank.0 + rank.1) as u32)];
            for (k, f) in fields.iter().enumerate() {
                let (o, d) = (offsets[k], dims[k]);
                let map: Vec<usize> = (o..o + d).collect();
                let vals = f.eval(&p[o..o + d], order)?;
                match rank.0 + rank.1 {
                    1 => {
                        for i in 0..d {
                            out[o + i] = vals[i].embed(m, &map);
                        }
                    }
                    2 => {
                        for i in 0..d {
                            for j in 0..d {
                                out[(o + i) * m + o + j] = vals[i * d + j].embed(m, &map);
                            }
                        }
                    }
                    _ => unreachable!(),
                }
            }
            Ok(out)
        })
    };
    let metric = MetricField::new(block(factors.iter().map(|f| f.structure.metric.field.clone()).collect(), (0, 2)), domain);
    let complex = block(factors.iter().map(|f| f.structure.complex.clone()).collect(), (1, 1));
    let potential = factors
        .iter()
        .map(|f| f.structure.potential.clone())
        .collect::<Option<Vec<_>>>()
        .map(|t| block(t, (0, 1)));
    let ks = KahlerStructure::new(metric, complex, potential);
    let params = json!({ "factors": factors.iter().map(|f| json!({"key": f.key, "params": f.params})).collect::<Vec<_>>() });
    let mut e = CatalogEntry::new("product", params, ks);
    e.solutions.push(("metric".into(), CProjSolution::new(e.structure.metric.field.clone(), TensorField::zero(m, (0, 1)))));
    Ok(e)
}

/// The cone over the base's circle bundle; see [`cone::conify`].
pub fn conify(base: &CatalogEntry) -> Result<CatalogEntry> {
    let bundle = cone::conify(&base.structure, None)?;
    let params = json!({ "base": { "key": base.key, "params": base.params } });
    let mut e = CatalogEntry::new("conify", params, bundle.cone.clone());
    let m = e.structure.dim();
    e.solutions.push(("metric".into(), CProjSolution::new(e.structure.metric.field.clone(), TensorField::zero(m, (0, 1)))));
    e.cone = Some(Box::new(bundle));
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kahler::{einstein_residual, kahler_residuals};

    #[test]
    fn entries_are_kahler() {
        for e in [flat(2).unwrap(), fubini_study(2, 1.0).unwrap(), ricciflat4d().unwrap()] {
            let p = e.structure.domain().halton(5, 1);
            let r = kahler_residuals(&e.structure, &p).unwrap();
            assert!(r.max() < 1e-9, "{}: {r:?}", e.key);
        }
    }

    #[test]
    fn fubini_study_scalar_curvature() {
        let e = fubini_study(2, 1.0).unwrap();
        assert!((e.scale - 1.0).abs() < 1e-10, "raw chart metric already has Scal = 4n(n+1): {}", e.scale);
        let r = einstein_residual(&e.structure, &e.structure.domain().halton(5, 2)).unwrap();
        assert!(r.residual < 1e-9);
        assert!((r.scal_min - 24.0).abs() < 1e-8 && (r.scal_max - 24.0).abs() < 1e-8);
    }

    #[test]
    fn unknown_key_and_bad_params() {
        assert!(matches!(get_example("sphere", &json!({})), Err(LabError::UnknownKey(_))));
        assert!(matches!(get_example("flat", &json!({"complex_dim": 0})), Err(LabError::BadParams(_))));
        assert!(matches!(get_example("fubini_study", &json!({"n": "two"})), Err(LabError::BadParams(_))));
    }

    #[test]
    fn spec_round_trip() {
        let s = r#"{"construct":"product","factors":[{"construct":"catalog","key":"flat","params":{"complex_dim":1}},{"construct":"catalog","key":"fubini_study","params":{"n":1}}]}"#;
        let spec = ManifoldSpec::from_json(s).unwrap();
        let back: ManifoldSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, back);
        let e = spec.build().unwrap();
        assert_eq!(e.structure.dim(), 4);
        assert!(ManifoldSpec::from_json(r#"{"construct":"sphere"}"#).is_err());
    }
}
