//! Dense helpers: matrices of jets, null spaces, orthonormal frames.

use nalgebra::{DMatrix, DVector};

use crate::jet::Jet;

/// Row-major `m × m` matrix of jets.
pub fn jet_matmul(a: &[Jet], b: &[Jet], m: usize) -> Vec<Jet> {
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = &a[i * m] * &b[j];
            for k in 1..m {
                acc += &(&a[i * m + k] * &b[k * m + j]);
            }
            out.push(acc);
        }
    }
    out
}

pub fn jet_transpose(a: &[Jet], m: usize) -> Vec<Jet> {
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            out.push(a[j * m + i].clone());
        }
    }
    out
}

/// Inverse and determinant of a jet matrix by Gauss–Jordan elimination,
/// pivoting on values. Returns `None` for a numerically singular value part.
pub fn jet_inverse_det(a: &[Jet], m: usize) -> Option<(Vec<Jet>, Jet)> {
    let mut w: Vec<Jet> = a.to_vec();
    let like = &a[0];
    let mut inv: Vec<Jet> = (0..m * m)
        .map(|k| like.constant_like(if k / m == k % m { 1.0 } else { 0.0 }))
        .collect();
    let mut det = like.constant_like(1.0);
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.value().abs())).max(1e-300);
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&r, &s| w[r * m + col].value().abs().total_cmp(&w[s * m + col].value().abs()))
            .unwrap();
        if w[piv * m + col].value().abs() <= 1e-14 * scale {
            return None;
        }
        if piv != col {
            for k in 0..m {
                w.swap(piv * m + k, col * m + k);
                inv.swap(piv * m + k, col * m + k);
            }
            det = -det;
        }
        let p = w[col * m + col].clone();
        det = &det * &p;
        let pr = p.recip();
        for k in 0..m {
            w[col * m + k] = &w[col * m + k] * &pr;
            inv[col * m + k] = &inv[col * m + k] * &pr;
        }
        for r in 0..m {
            if r == col {
                continue;
            }
            let f = w[r * m + col].clone();
            if f.max_abs() == 0.0 {
                continue;
            }
            for k in 0..m {
                let t = &f * &w[col * m + k];
                w[r * m + k] -= &t;
                let t = &f * &inv[col * m + k];
                inv[r * m + k] -= &t;
            }
        }
    }
    Some((inv, det))
}

pub fn values(a: &[Jet], m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| a[i * m + j].value())
}

pub fn vector_values(a: &[Jet]) -> DVector<f64> {
    DVector::from_iterator(a.len(), a.iter().map(Jet::value))
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |s, v| s.max(v.abs()))
}

/// Orthonormal basis of the row space of `rows` (each row a vector), keeping
/// singular values above `rel * σ_max` and above `abs_floor`.
pub fn row_space_basis(rows: &DMatrix<f64>, rel: f64, abs_floor: f64) -> Vec<DVector<f64>> {
    if rows.nrows() == 0 {
        return Vec::new();
    }
    // Gram matrix keeps the factorization small when there are many rows.
    let gram = rows.transpose() * rows;
    let eig = gram.symmetric_eigen();
    let smax = eig.eigenvalues.iter().fold(0.0f64, |s, v| s.max(*v)).max(0.0).sqrt();
    let cut = (rel * smax).max(abs_floor);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i].max(0.0).sqrt() > cut)
        .collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    idx.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect()
}

/// Null space of `a` (columns = unknowns): right singular vectors whose
/// singular value is at most `rel * σ_max`. Also returns the singular values.
pub fn null_space(a: &DMatrix<f64>, rel: f64) -> (Vec<DVector<f64>>, Vec<f64>) {
    let cols = a.ncols();
    let padded;
    let a = if a.nrows() < cols {
        padded = {
            let mut p = DMatrix::zeros(cols, cols);
            p.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
            p
        };
        &padded
    } else {
        a
    };
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sv.iter().fold(0.0f64, |s, v| s.max(*v));
    let cut = rel * smax.max(1e-300);
    let basis = (0..sv.len())
        .filter(|&i| sv[i] <= cut)
        .map(|i| vt.row(i).transpose().into_owned())
        .collect();
    (basis, sv)
}

/// Columns of the returned matrix form a g-orthonormal frame.
pub fn orthonormal_frame(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = g.clone().cholesky()?;
    let l = chol.l();
    l.transpose().try_inverse()
}

/// Packs a symmetric matrix into its upper triangle (row-major).
pub fn sym_to_vec(s: &DMatrix<f64>) -> Vec<f64> {
    let m = s.nrows();
    let mut v = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        for j in i..m {
            v.push(s[(i, j)]);
        }
    }
    v
}

pub fn vec_to_sym(v: &[f64], m: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(m, m);
    let mut k = 0;
    for i in 0..m {
        for j in i..m {
            s[(i, j)] = v[k];
            s[(j, i)] = v[k];
            k += 1;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_inverse_is_inverse_with_derivatives() {
        let x = Jet::coordinates(&[0.3, -0.2], 3);
        let one = x[0].constant_like(1.0);
        let a = vec![
            &one * 2.0 + &x[0],
            &x[0] * &x[1],
            x[1].sin(),
            &one * 3.0 + &x[1] * &x[1],
        ];
        let (inv, det) = jet_inverse_det(&a, 2).unwrap();
        let id = jet_matmul(&a, &inv, 2);
        for (k, e) in id.iter().enumerate() {
            let target = if k == 0 || k == 3 { 1.0 } else { 0.0 };
            assert!((e.value() - target).abs() < 1e-14);
            assert!(e.coeffs()[1..].iter().all(|c| c.abs() < 1e-13));
        }
        let direct = &a[0] * &a[3] - &a[1] * &a[2];
        for (p, q) in det.coeffs().iter().zip(direct.coeffs()) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn null_space_of_rank_one() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        let (basis, _) = null_space(&a, 1e-9);
        assert_eq!(basis.len(), 2);
        for b in basis {
            assert!((a.clone() * b)[0].abs() < 1e-12);
        }
    }

    #[test]
    fn frame_is_orthonormal() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let e = orthonormal_frame(&g).unwrap();
        let id = e.transpose() * &g * &e;
        assert!((id - DMatrix::identity(2, 2)).abs().max() < 1e-14);
    }
}
