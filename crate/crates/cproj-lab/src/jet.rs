//! Truncated Taylor jets in several variables, up to third order.
//!
//! A [`Jet`] stores the value of a scalar at a point together with its
//! partial derivatives. Mixed partials are stored once, in canonical
//! (non-decreasing) index order: `d2(i, j)` with `i <= j` and `d3(i, j, k)`
//! with `i <= j <= k`. Accessors accept any index order.
//!
//! The coefficients are plain partial derivatives, not Taylor coefficients,
//! so `d2(0, 0)` of `x0 * x0` is `2`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Highest derivative order any jet may carry.
pub const MAX_ORDER: usize = 3;

#[derive(Clone, PartialEq)]
pub struct Jet {
    n: usize,
    order: usize,
    c: Vec<f64>,
}

#[inline]
fn tri(m: usize) -> usize {
    m * (m + 1) / 2
}

#[inline]
fn tet(m: usize) -> usize {
    m * (m + 1) * (m + 2) / 6
}

/// Number of stored coefficients for `n` variables at `order`.
pub fn coeff_len(n: usize, order: usize) -> usize {
    let mut len = 1;
    if order >= 1 {
        len += n;
    }
    if order >= 2 {
        len += tri(n);
    }
    if order >= 3 {
        len += tet(n);
    }
    len
}

// offset of the sorted pair (i, j), i <= j, inside the second-order block
#[inline]
fn pair(n: usize, i: usize, j: usize) -> usize {
    i * (2 * n - i + 1) / 2 + (j - i)
}

#[inline]
fn triple(n: usize, i: usize, j: usize, k: usize) -> usize {
    tet(n) - tet(n - i) + pair(n - i, j - i, k - i)
}

fn sort3(a: usize, b: usize, c: usize) -> (usize, usize, usize) {
    let mut v = [a, b, c];
    v.sort_unstable();
    (v[0], v[1], v[2])
}

impl Jet {
    pub fn constant(n: usize, order: usize, v: f64) -> Jet {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut c = vec![0.0; coeff_len(n, order)];
        c[0] = v;
        Jet { n, order, c }
    }

    /// The coordinate function `x_i` seeded at value `v`.
    pub fn variable(n: usize, order: usize, i: usize, v: f64) -> Jet {
        assert!(i < n);
        let mut j = Jet::constant(n, order, v);
        if order >= 1 {
            j.c[1 + i] = 1.0;
        }
        j
    }

    /// Seeds all coordinate jets at `p`.
    pub fn coordinates(p: &[f64], order: usize) -> Vec<Jet> {
        let n = p.len();
        (0..n).map(|i| Jet::variable(n, order, i, p[i])).collect()
    }

    pub fn constant_like(&self, v: f64) -> Jet {
        Jet::constant(self.n, self.order, v)
    }

    pub fn zero_like(&self) -> Jet {
        self.constant_like(0.0)
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    fn off2(&self) -> usize {
        1 + self.n
    }

    fn off3(&self) -> usize {
        1 + self.n + tri(self.n)
    }

    pub fn d1(&self, i: usize) -> f64 {
        assert!(self.order >= 1);
        self.c[1 + i]
    }

    pub fn d2(&self, i: usize, j: usize) -> f64 {
        assert!(self.order >= 2);
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.c[self.off2() + pair(self.n, a, b)]
    }

    pub fn d3(&self, i: usize, j: usize, k: usize) -> f64 {
        assert!(self.order >= 3);
        let (a, b, c) = sort3(i, j, k);
        self.c[self.off3() + triple(self.n, a, b, c)]
    }

    pub fn gradient(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.d1(i)).collect()
    }

    /// Same jet with higher-order coefficients dropped.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order);
        Jet {
            n: self.n,
            order,
            c: self.c[..coeff_len(self.n, order)].to_vec(),
        }
    }

    /// The jet of `∂f/∂x_l`; one order lower.
    pub fn partial(&self, l: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let n = self.n;
        let order = self.order - 1;
        let mut out = Jet::constant(n, order, self.d1(l));
        if order >= 1 {
            for i in 0..n {
                out.c[1 + i] = self.d2(l, i);
            }
        }
        if order >= 2 {
            let o2 = out.off2();
            let mut idx = o2;
            for i in 0..n {
                for j in i..n {
                    out.c[idx] = self.d3(l, i, j);
                    idx += 1;
                }
            }
        }
        out
    }

    /// Re-expresses the jet in `n_new` variables, old variable `i` becoming
    /// new variable `map[i]`.
    pub fn embed(&self, n_new: usize, map: &[usize]) -> Jet {
        assert_eq!(map.len(), self.n);
        let n = self.n;
        let mut out = Jet::constant(n_new, self.order, self.c[0]);
        if self.order >= 1 {
            for i in 0..n {
                out.c[1 + map[i]] = self.c[1 + i];
            }
        }
        if self.order >= 2 {
            let o2 = out.off2();
            for i in 0..n {
                for j in i..n {
                    let (a, b) = if map[i] <= map[j] { (map[i], map[j]) } else { (map[j], map[i]) };
                    out.c[o2 + pair(n_new, a, b)] = self.d2(i, j);
                }
            }
        }
        if self.order >= 3 {
            let o3 = out.off3();
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        let (a, b, c) = sort3(map[i], map[j], map[k]);
                        out.c[o3 + triple(n_new, a, b, c)] = self.d3(i, j, k);
                    }
                }
            }
        }
        out
    }

    /// Multiplies the order-`k` derivatives by `s^k`: the jet of `f(p0 + s (x - p0))`
    /// at `x` from the jet of `f` at `p0 + s (x - p0)`.
    pub fn scale_derivatives(&self, s: f64) -> Jet {
        let mut out = self.clone();
        let n = self.n;
        if self.order >= 1 {
            for v in &mut out.c[1..1 + n] {
                *v *= s;
            }
        }
        if self.order >= 2 {
            let (a, b) = (self.off2(), self.off3());
            for v in &mut out.c[a..b] {
                *v *= s * s;
            }
        }
        if self.order >= 3 {
            let a = self.off3();
            for v in &mut out.c[a..] {
                *v *= s * s * s;
            }
        }
        out
    }

    fn check_compat(&self, o: &Jet) {
        assert!(
            self.n == o.n && self.order == o.order,
            "jet shape mismatch: ({}, {}) vs ({}, {})",
            self.n,
            self.order,
            o.n,
            o.order
        );
    }

    fn product(&self, o: &Jet) -> Jet {
        self.check_compat(o);
        let n = self.n;
        let (a, b) = (&self.c, &o.c);
        let mut out = vec![0.0; a.len()];
        let (a0, b0) = (a[0], b[0]);
        out[0] = a0 * b0;
        if self.order >= 1 {
            for i in 0..n {
                out[1 + i] = a0 * b[1 + i] + b0 * a[1 + i];
            }
        }
        if self.order >= 2 {
            let o2 = 1 + n;
            let mut idx = o2;
            for i in 0..n {
                let (ai, bi) = (a[1 + i], b[1 + i]);
                for j in i..n {
                    out[idx] = a0 * b[idx] + b0 * a[idx] + ai * b[1 + j] + a[1 + j] * bi;
                    idx += 1;
                }
            }
            if self.order >= 3 {
                let mut idx = o2 + tri(n);
                for i in 0..n {
                    for j in i..n {
                        let ij = o2 + pair(n, i, j);
                        for k in j..n {
                            let jk = o2 + pair(n, j, k);
                            let ik = o2 + pair(n, i, k);
                            out[idx] = a0 * b[idx]
                                + b0 * a[idx]
                                + a[1 + i] * b[jk]
                                + a[1 + j] * b[ik]
                                + a[1 + k] * b[ij]
                                + b[1 + i] * a[jk]
                                + b[1 + j] * a[ik]
                                + b[1 + k] * a[ij];
                            idx += 1;
                        }
                    }
                }
            }
        }
        Jet { n, order: self.order, c: out }
    }

    /// Applies a univariate function given its value and first three
    /// derivatives at `self.value()`.
    pub fn compose(&self, d: [f64; 4]) -> Jet {
        let n = self.n;
        let u = &self.c;
        let mut out = vec![0.0; u.len()];
        out[0] = d[0];
        if self.order >= 1 {
            for i in 0..n {
                out[1 + i] = d[1] * u[1 + i];
            }
        }
        if self.order >= 2 {
            let o2 = 1 + n;
            let mut idx = o2;
            for i in 0..n {
                for j in i..n {
                    out[idx] = d[1] * u[idx] + d[2] * u[1 + i] * u[1 + j];
                    idx += 1;
                }
            }
            if self.order >= 3 {
                let mut idx = o2 + tri(n);
                for i in 0..n {
                    for j in i..n {
                        let ij = o2 + pair(n, i, j);
                        for k in j..n {
                            let jk = o2 + pair(n, j, k);
                            let ik = o2 + pair(n, i, k);
                            out[idx] = d[1] * u[idx]
                                + d[2] * (u[ij] * u[1 + k] + u[ik] * u[1 + j] + u[jk] * u[1 + i])
                                + d[3] * u[1 + i] * u[1 + j] * u[1 + k];
                            idx += 1;
                        }
                    }
                }
            }
        }
        Jet { n, order: self.order, c: out }
    }

    pub fn recip(&self) -> Jet {
        let v = self.value();
        let r = 1.0 / v;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn sqrt(&self) -> Jet {
        let s = self.value().sqrt();
        self.compose([s, 0.5 / s, -0.25 / (s * s * s), 0.375 / (s * s * s * s * s)])
    }

    pub fn ln(&self) -> Jet {
        let r = 1.0 / self.value();
        self.compose([self.value().ln(), r, -r * r, 2.0 * r * r * r])
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose([e, e, e, e])
    }

    pub fn powf(&self, p: f64) -> Jet {
        let u = self.value();
        self.compose([
            u.powf(p),
            p * u.powf(p - 1.0),
            p * (p - 1.0) * u.powf(p - 2.0),
            p * (p - 1.0) * (p - 2.0) * u.powf(p - 3.0),
        ])
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn square(&self) -> Jet {
        self.product(self)
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(n={}, order={}, {:?})", self.n, self.order, self.c)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, o: &Jet) {
        self.check_compat(o);
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            *a += b;
        }
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, o: &Jet) {
        self.check_compat(o);
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            *a -= b;
        }
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, s: f64) {
        for a in &mut self.c {
            *a *= s;
        }
    }
}

impl AddAssign<f64> for Jet {
    fn add_assign(&mut self, s: f64) {
        self.c[0] += s;
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self *= -1.0;
        self
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -self.clone()
    }
}

macro_rules! jet_binops {
    ($lhs:ty, $rhs:ty) => {
        impl Add<$rhs> for $lhs {
            type Output = Jet;
            fn add(self, o: $rhs) -> Jet {
                let mut r = self.clone();
                r += std::borrow::Borrow::<Jet>::borrow(&o);
                r
            }
        }
        impl Sub<$rhs> for $lhs {
            type Output = Jet;
            fn sub(self, o: $rhs) -> Jet {
                let mut r = self.clone();
                r -= std::borrow::Borrow::<Jet>::borrow(&o);
                r
            }
        }
        impl Mul<$rhs> for $lhs {
            type Output = Jet;
            fn mul(self, o: $rhs) -> Jet {
                self.product(&o)
            }
        }
        impl Div<$rhs> for $lhs {
            type Output = Jet;
            fn div(self, o: $rhs) -> Jet {
                self.product(&o.recip())
            }
        }
    };
}

jet_binops!(Jet, Jet);
jet_binops!(Jet, &Jet);
jet_binops!(&Jet, Jet);
jet_binops!(&Jet, &Jet);

macro_rules! jet_scalar_ops {
    ($lhs:ty) => {
        impl Add<f64> for $lhs {
            type Output = Jet;
            fn add(self, s: f64) -> Jet {
                let mut r = self.clone();
                r.c[0] += s;
                r
            }
        }
        impl Sub<f64> for $lhs {
            type Output = Jet;
            fn sub(self, s: f64) -> Jet {
                let mut r = self.clone();
                r.c[0] -= s;
                r
            }
        }
        impl Mul<f64> for $lhs {
            type Output = Jet;
            fn mul(self, s: f64) -> Jet {
                let mut r = self.clone();
                r *= s;
                r
            }
        }
        impl Div<f64> for $lhs {
            type Output = Jet;
            fn div(self, s: f64) -> Jet {
                let mut r = self.clone();
                r *= 1.0 / s;
                r
            }
        }
        impl Add<$lhs> for f64 {
            type Output = Jet;
            fn add(self, j: $lhs) -> Jet {
                j + self
            }
        }
        impl Sub<$lhs> for f64 {
            type Output = Jet;
            fn sub(self, j: $lhs) -> Jet {
                -(j - self)
            }
        }
        impl Mul<$lhs> for f64 {
            type Output = Jet;
            fn mul(self, j: $lhs) -> Jet {
                j * self
            }
        }
        impl Div<$lhs> for f64 {
            type Output = Jet;
            fn div(self, j: $lhs) -> Jet {
                j.recip() * self
            }
        }
    };
}

jet_scalar_ops!(Jet);
jet_scalar_ops!(&Jet);

/// Sum of jets; `like` fixes the shape when the iterator is empty.
pub fn sum<'a, I: IntoIterator<Item = &'a Jet>>(like: &Jet, items: I) -> Jet {
    let mut acc = like.zero_like();
    for j in items {
        acc += j;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(x: &[Jet]) -> Jet {
        // x0^2 x1 + 3 x1 x2^2 + x0 x1 x2
        &x[0] * &x[0] * &x[1] + &x[1] * &x[2] * &x[2] * 3.0 + &x[0] * &x[1] * &x[2]
    }

    #[test]
    fn layout_sizes() {
        assert_eq!(coeff_len(3, 0), 1);
        assert_eq!(coeff_len(3, 1), 4);
        assert_eq!(coeff_len(3, 2), 10);
        assert_eq!(coeff_len(3, 3), 20);
        let mut seen = vec![false; tet(4)];
        for i in 0..4 {
            for j in i..4 {
                for k in j..4 {
                    let t = triple(4, i, j, k);
                    assert!(!seen[t]);
                    seen[t] = true;
                }
            }
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn polynomial_derivatives_exact() {
        let p = [0.7, -1.3, 0.4];
        let x = Jet::coordinates(&p, 3);
        let f = poly(&x);
        let (a, b, c) = (p[0], p[1], p[2]);
        assert!((f.value() - (a * a * b + 3.0 * b * c * c + a * b * c)).abs() < 1e-14);
        assert!((f.d1(0) - (2.0 * a * b + b * c)).abs() < 1e-14);
        assert!((f.d1(2) - (6.0 * b * c + a * b)).abs() < 1e-14);
        assert!((f.d2(0, 1) - (2.0 * a + c)).abs() < 1e-14);
        assert!((f.d2(2, 2) - 6.0 * b).abs() < 1e-14);
        assert!((f.d3(0, 0, 1) - 2.0).abs() < 1e-14);
        assert!((f.d3(1, 2, 2) - 6.0).abs() < 1e-14);
        assert!((f.d3(2, 1, 0) - 1.0).abs() < 1e-14);
        assert_eq!(f.d3(0, 0, 0), 0.0);
    }

    #[test]
    fn unary_chain_rule_matches_closed_form() {
        let p = [0.3, 0.8];
        let x = Jet::coordinates(&p, 3);
        let u = &x[0] * &x[1] + 1.0;
        let f = u.ln();
        // f = ln(1 + xy): f_x = y/u, f_xx = -y^2/u^2, f_xxy = -2y/u^2 + 2 x y^2 / u^3
        let (a, b) = (p[0], p[1]);
        let uu = 1.0 + a * b;
        assert!((f.d1(0) - b / uu).abs() < 1e-14);
        assert!((f.d2(0, 0) + b * b / (uu * uu)).abs() < 1e-14);
        assert!((f.d3(0, 0, 1) - (-2.0 * b / (uu * uu) + 2.0 * a * b * b / uu.powi(3))).abs() < 1e-13);
    }

    #[test]
    fn division_and_sqrt_round_trip() {
        let x = Jet::coordinates(&[1.7, 0.2, -0.4], 3);
        let u = &x[0] * &x[0] + &x[1] * &x[2] + 2.0;
        let back = u.sqrt().square();
        let one = &u / &u;
        for (a, b) in back.coeffs().iter().zip(u.coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((one.value() - 1.0).abs() < 1e-15);
        assert!(one.coeffs()[1..].iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn partial_lowers_order() {
        let x = Jet::coordinates(&[0.5, 1.5, -0.5], 3);
        let f = poly(&x);
        let fx = f.partial(0);
        assert_eq!(fx.order(), 2);
        assert!((fx.value() - f.d1(0)).abs() < 1e-15);
        assert!((fx.d1(1) - f.d2(0, 1)).abs() < 1e-15);
        assert!((fx.d2(1, 2) - f.d3(0, 1, 2)).abs() < 1e-15);
    }

    #[test]
    fn embed_then_compute_matches_direct() {
        let p = [0.2, 0.9, -0.3];
        let small = Jet::coordinates(&p, 3);
        let f = poly(&small).embed(5, &[3, 0, 4]);
        let mut big_p = [0.0; 5];
        big_p[3] = p[0];
        big_p[0] = p[1];
        big_p[4] = p[2];
        let big = Jet::coordinates(&big_p, 3);
        let g = poly(&[big[3].clone(), big[0].clone(), big[4].clone()]);
        assert_eq!(f, g);
    }

    #[test]
    fn scaled_derivatives_match_affine_composition() {
        let p0 = [0.1, -0.2];
        let x = [0.6, 0.4];
        let s = 0.37;
        let xs = Jet::coordinates(&x, 3);
        let ys: Vec<Jet> = (0..2).map(|i| (&xs[i] - p0[i]) * s + p0[i]).collect();
        let f = |v: &[Jet]| (&v[0] * &v[1]).exp() + v[0].sin() * &v[1];
        let direct = f(&ys);
        let y: Vec<f64> = ys.iter().map(Jet::value).collect();
        let scaled = f(&Jet::coordinates(&y, 3)).scale_derivatives(s);
        for (a, b) in direct.coeffs().iter().zip(scaled.coeffs()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    #[should_panic]
    fn order_above_three_is_rejected() {
        let _ = Jet::constant(2, 4, 1.0);
    }
}
