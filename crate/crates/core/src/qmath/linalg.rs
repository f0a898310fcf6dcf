use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Finite-dimensional vector of complex amplitudes.
///
/// Probe kets are deliberately unnormalized, so no norm invariant is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVec(Vec<C64>);

impl ComplexVec {
    pub fn new(entries: Vec<C64>) -> Self {
        Self(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![ZERO; dim])
    }

    /// Unit vector `e_k` in dimension `dim` (zero-based `k`).
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[k] = ONE;
        v
    }

    pub fn from_reals(values: &[f64]) -> Self {
        Self(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.0
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sqr())
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &Self) -> C64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self(self.0.iter().map(|z| z * factor).collect())
    }

    pub fn scaled_real(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|z| z * factor).collect())
    }

    /// `alpha * self + beta * other`. Dimensions must agree.
    pub fn combine(&self, alpha: C64, other: &Self, beta: C64) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| alpha * x + beta * y)
                .collect(),
        )
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, factor: C64, other: &Self) {
        debug_assert_eq!(self.dim(), other.dim());
        for (x, y) in self.0.iter_mut().zip(&other.0) {
            *x += factor * y;
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

impl From<Vec<C64>> for ComplexVec {
    fn from(entries: Vec<C64>) -> Self {
        Self(entries)
    }
}

impl Index<usize> for ComplexVec {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ComplexVec {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

/// `⟨x|y⟩`.
pub fn inner_product(x: &ComplexVec, y: &ComplexVec) -> Result<C64> {
    x.inner(y)
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Builds an `n x n` matrix from row-major entries.
    pub fn from_row_major(n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        Ok(Self { n, data })
    }

    /// `|x⟩⟨y|`.
    pub fn outer(x: &ComplexVec, y: &ComplexVec) -> Self {
        debug_assert_eq!(x.dim(), y.dim());
        let n = x.dim();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = x[i] * y[j].conj();
            }
        }
        m
    }

    pub fn projector(x: &ComplexVec) -> Self {
        Self::outer(x, x)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = self[(j, i)].conj();
            }
        }
        m
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| x * alpha + y * beta)
                .collect(),
        }
    }

    pub fn add_assign_scaled(&mut self, factor: f64, other: &Self) {
        debug_assert_eq!(self.n, other.n);
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += y * factor;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    m.data[i * n + j] += a * other[(k, j)];
                }
            }
        }
        m
    }

    pub fn mat_vec(&self, v: &ComplexVec) -> ComplexVec {
        debug_assert_eq!(self.n, v.dim());
        let n = self.n;
        ComplexVec::new(
            (0..n)
                .map(|i| (0..n).fold(ZERO, |acc, j| acc + self[(i, j)] * v[j]))
                .collect(),
        )
    }

    /// `⟨v|self|v⟩`.
    pub fn expectation(&self, v: &ComplexVec) -> C64 {
        v.inner_unchecked(&self.mat_vec(v))
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> ComplexVec {
        ComplexVec::new((0..self.n).map(|i| self[(i, j)]).collect())
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
    /// rotations. Only the upper triangle is trusted; callers validate
    /// hermiticity first.
    pub fn eigh(&self) -> HermitianEigen {
        jacobi_eigh(self)
    }

    fn off_diagonal_norm_sqr(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self[(i, j)].norm_sqr();
                }
            }
        }
        s
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigenvalues in ascending order; `vectors` holds the matching
/// orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

const MAX_SWEEPS: usize = 64;

fn jacobi_eigh(input: &CMatrix) -> HermitianEigen {
    let n = input.dim();
    // Symmetrize from the upper triangle so small asymmetries cannot stall
    // the sweep.
    let mut a = CMatrix::zeros(n);
    for i in 0..n {
        a[(i, i)] = C64::new(input[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            a[(i, j)] = input[(i, j)];
            a[(j, i)] = input[(i, j)].conj();
        }
    }
    let mut v = CMatrix::identity(n);

    let scale = a.data.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let threshold = (scale * 1e-32).max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        if a.off_diagonal_norm_sqr() <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                // Phase on column/row q makes the (p, q) entry real and positive.
                let phase = (apq / r).conj();
                for k in 0..n {
                    a[(k, q)] *= phase;
                    v[(k, q)] *= phase;
                }
                for k in 0..n {
                    a[(q, k)] *= phase.conj();
                }

                // Real symmetric rotation zeroing the now-real (p, q) entry.
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * s;
                    a[(k, q)] = akp * s + akq * c;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * s;
                    v[(k, q)] = vkp * s + vkq * c;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * s;
                    a[(q, k)] = apk * s + aqk * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, col)] = v[(k, src)];
        }
    }
    HermitianEigen { values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn inner_product_basics() {
        let e1 = ComplexVec::basis(2, 0);
        let e2 = ComplexVec::basis(2, 1);
        assert_eq!(inner_product(&e1, &e1).unwrap(), ONE);
        assert_eq!(inner_product(&e1, &e2).unwrap(), ZERO);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let plus = ComplexVec::from_reals(&[h, h]);
        // 1/sqrt(2) = 0.70710678118654752440...
        let ip = inner_product(&e1, &plus).unwrap();
        assert!((ip.re - 0.707_106_781_186_547_5).abs() < 1e-15);
        assert_eq!(ip.im, 0.0);
    }

    #[test]
    fn inner_product_is_conjugate_linear_in_first_argument() {
        let x = ComplexVec::new(vec![c(1.0, 2.0), c(0.5, -1.0)]);
        let y = ComplexVec::new(vec![c(-0.3, 0.7), c(2.0, 0.1)]);
        let alpha = c(0.4, -1.3);
        let lhs = inner_product(&x.scaled(alpha), &y).unwrap();
        let rhs = alpha.conj() * inner_product(&x, &y).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
        let lhs = inner_product(&x, &y.scaled(alpha)).unwrap();
        let rhs = alpha * inner_product(&x, &y).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn inner_product_rejects_dimension_mismatch() {
        let err = inner_product(&ComplexVec::zeros(2), &ComplexVec::zeros(3)).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                found: 3
            }
        );
    }

    #[test]
    fn eigh_of_diagonal_is_sorted() {
        let m = CMatrix::from_diagonal(&[0.75, 0.25, -1.0]);
        let e = m.eigh();
        assert_eq!(e.values, vec![-1.0, 0.25, 0.75]);
    }

    #[test]
    fn eigh_residual_on_complex_hermitian() {
        let data = vec![
            c(2.0, 0.0),
            c(1.0, -1.0),
            c(0.0, 0.5),
            c(1.0, 1.0),
            c(-1.0, 0.0),
            c(0.3, 0.2),
            c(0.0, -0.5),
            c(0.3, -0.2),
            c(0.5, 0.0),
        ];
        let m = CMatrix::from_row_major(3, data).unwrap();
        let e = m.eigh();
        for (k, &lambda) in e.values.iter().enumerate() {
            let v = e.vectors.column(k);
            let av = m.mat_vec(&v);
            let resid = av.combine(ONE, &v, c(-lambda, 0.0)).norm();
            assert!(resid < 1e-10, "residual {resid}");
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        let tr: f64 = e.values.iter().sum();
        assert!((tr - 1.5).abs() < 1e-12);
    }
}
