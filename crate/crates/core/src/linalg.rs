//! Dense complex matrices and the handful of factorizations the rest of the
//! crate needs: a cyclic Jacobi Hermitian eigensolver, PSD projection,
//! operator norms, LU inversion, a complex Schur form, and a small real
//! Cholesky used by the affine projector.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>10.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), rows * cols);
        Self::from_fn(rows, cols, |i, j| C64::new(values[i * cols + j], 0.0))
    }

    pub fn scalar(z: C64) -> Self {
        Self {
            rows: 1,
            cols: 1,
            data: vec![z],
        }
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let v: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diag(&v)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn try_add(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn try_sub(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &CMatrix, f: impl Fn(C64, C64) -> C64) -> Result<CMatrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::Dimension(format!(
                "shape {:?} vs {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Kronecker product: block `(i, j)` of the result is `self[(i, j)] * rhs`.
    pub fn kron(&self, rhs: &CMatrix) -> CMatrix {
        let (p, q) = rhs.shape();
        CMatrix::from_fn(self.rows * p, self.cols * q, |r, c| {
            self[(r / p, c / q)] * rhs[(r % p, c % q)]
        })
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> CMatrix {
        CMatrix::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &CMatrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    pub fn add_block(&mut self, r0: usize, c0: usize, b: &CMatrix, s: C64) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] += s * b[(i, j)];
            }
        }
    }

    /// `‖A − A*‖_F`; infinite for non-square input.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                s += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        s.sqrt()
    }

    /// `(A + A*) / 2`.
    pub fn hermitian_part(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    /// Inverse by LU with partial pivoting; `None` when a pivot vanishes.
    pub fn inverse(&self) -> Option<CMatrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = CMatrix::identity(n);
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, a[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax <= 1e-300_f64.max(scale * 1e-300) || pmax == 0.0 {
                return None;
            }
            if piv != k {
                for j in 0..n {
                    a.data.swap(k * n + j, piv * n + j);
                    inv.data.swap(k * n + j, piv * n + j);
                }
            }
            let d = ONE / a[(k, k)];
            for j in 0..n {
                a[(k, j)] *= d;
                inv[(k, j)] *= d;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[(i, k)];
                if f == ZERO {
                    continue;
                }
                for j in 0..n {
                    let akj = a[(k, j)];
                    let ikj = inv[(k, j)];
                    a[(i, j)] -= f * akj;
                    inv[(i, j)] -= f * ikj;
                }
            }
        }
        Some(inv)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

// Operator forms panic on shape mismatch; the `try_*` methods return errors.
impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        self.try_add(rhs).expect("shape mismatch in +")
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        self.try_sub(rhs).expect("shape mismatch in -")
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("shape mismatch in *")
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

/// Eigendecomposition `A = U diag(λ) U*` of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermEig {
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let u = &self.eigenvectors;
        let n = u.rows();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let ui = u[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += ui * u[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.reconstruct_with(|x| x)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

fn check_hermitian(a: &CMatrix, tol: &Tolerances) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let defect = a.hermitian_defect();
    let allowed = tol.hermitian * (1.0 + a.frobenius_norm());
    if defect > allowed {
        return Err(Error::NotHermitian { defect, allowed });
    }
    Ok(())
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// The input is symmetrized as `(A + A*)/2` after the Hermitian check.
pub fn hermitian_eig(a: &CMatrix, tol: &Tolerances) -> Result<HermEig> {
    check_hermitian(a, tol)?;
    Ok(jacobi(a.hermitian_part(), tol))
}

fn jacobi(mut a: CMatrix, tol: &Tolerances) -> HermEig {
    let n = a.rows();
    let mut v = CMatrix::identity(n);
    let norm = a.frobenius_norm();
    let target = tol.jacobi_offdiag * norm;

    for _ in 0..tol.jacobi_max_sweeps {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= target || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g == 0.0 || g < 1e-300 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Phase-rotate so the (p,q) entry is real, then a real rotation.
                let e = apq / g;
                let theta = (aqq - app) / (2.0 * g);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let ec = e.conj();
                let u_pp = C64::new(c, 0.0);
                let u_pq = C64::new(s, 0.0);
                let u_qp = ec * (-s);
                let u_qq = ec * c;

                // A <- A U on columns p, q
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * u_pp + akq * u_qp;
                    a[(k, q)] = akp * u_pq + akq * u_qq;
                }
                // A <- U* A on rows p, q
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
                    a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * u_pp + vkq * u_qp;
                    v[(k, q)] = vkp * u_pq + vkq * u_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    HermEig {
        eigenvalues,
        eigenvectors,
    }
}

/// Nearest PSD matrix in Frobenius norm: `U diag(max(λ, 0)) U*`.
pub fn psd_project(a: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let eig = hermitian_eig(a, tol)?;
    Ok(psd_from_eig(&eig))
}

pub(crate) fn psd_from_eig(eig: &HermEig) -> CMatrix {
    if eig.min() >= 0.0 {
        // Already PSD; rebuild anyway so the output is exactly Hermitian.
        return eig.reconstruct().hermitian_part();
    }
    eig.reconstruct_with(|x| x.max(0.0)).hermitian_part()
}

/// Smallest eigenvalue of a Hermitian matrix (0 for the empty matrix).
pub fn min_eigenvalue(a: &CMatrix, tol: &Tolerances) -> Result<f64> {
    Ok(hermitian_eig(a, tol)?.min())
}

fn gram(a: &CMatrix) -> CMatrix {
    // The smaller of A*A and AA*; both share the nonzero spectrum.
    if a.rows() >= a.cols() {
        &a.adjoint() * a
    } else {
        a * &a.adjoint()
    }
}

/// Largest singular value.
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    if a.rows() == 1 || a.cols() == 1 {
        return a.frobenius_norm();
    }
    let eig = jacobi(gram(a), &Tolerances::default());
    eig.max().max(0.0).sqrt()
}

/// The `min(rows, cols)` singular values in ascending order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Vec::new();
    }
    let eig = jacobi(gram(a), &Tolerances::default());
    eig.eigenvalues.iter().map(|x| x.max(0.0).sqrt()).collect()
}

/// Smallest singular value of a square matrix.
pub fn min_singular_value(a: &CMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// 2-norm condition number `σ_max / σ_min` of a square matrix.
pub fn condition_number(a: &CMatrix) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&lo), Some(&hi)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Frobenius norm of `AB − BA`.
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    (&(a * b) - &(b * a)).frobenius_norm()
}

/// Complex Schur form `A = Q T Q*` with `Q` unitary and `T` upper triangular.
///
/// Householder reduction to Hessenberg form followed by explicitly shifted QR
/// sweeps with Wilkinson shifts.
pub fn schur(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "Schur form needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    if n <= 1 {
        return Ok((q, h));
    }

    // Hessenberg reduction.
    for k in 0..n.saturating_sub(2) {
        let xnorm = ((k + 1)..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * xnorm;
        let mut v: Vec<C64> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        v[0] -= alpha;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for z in &mut v {
            *z /= vn;
        }
        // h <- (I - 2vv*) h on rows k+1..
        for j in 0..n {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(t, vt)| vt.conj() * h[(k + 1 + t, j)])
                .sum();
            for (t, vt) in v.iter().enumerate() {
                h[(k + 1 + t, j)] -= *vt * dot * 2.0;
            }
        }
        // h <- h (I - 2vv*), q <- q (I - 2vv*) on columns k+1..
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let dot: C64 = v
                    .iter()
                    .enumerate()
                    .map(|(t, vt)| m[(i, k + 1 + t)] * *vt)
                    .sum();
                for (t, vt) in v.iter().enumerate() {
                    m[(i, k + 1 + t)] -= dot * vt.conj() * 2.0;
                }
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = ZERO;
        }
    }

    let mut hi = n - 1;
    let mut iter = 0usize;
    let max_iter = 200 * n;
    let mut since_deflation = 0usize;
    while hi > 0 {
        // Locate the start of the active unreduced block.
        let mut l = hi;
        while l > 0 {
            let s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[(l, l - 1)].norm() <= f64::EPSILON * s {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        iter += 1;
        since_deflation += 1;
        if iter > max_iter {
            return Err(Error::Spectrum("Schur iteration did not converge".into()));
        }

        let mu = if since_deflation % 11 == 10 {
            // Exceptional shift to break cycles.
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm() * 0.75, 0.0)
        } else {
            let a11 = h[(hi - 1, hi - 1)];
            let a12 = h[(hi - 1, hi)];
            let a21 = h[(hi, hi - 1)];
            let a22 = h[(hi, hi)];
            let half = (a11 - a22) * 0.5;
            let disc = (half * half + a12 * a21).sqrt();
            let m1 = (a11 + a22) * 0.5 + disc;
            let m2 = (a11 + a22) * 0.5 - disc;
            if (m1 - a22).norm() <= (m2 - a22).norm() {
                m1
            } else {
                m2
            }
        };

        for k in l..=hi {
            h[(k, k)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let x = h[(k, k)];
            let y = h[(k + 1, k)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (1.0, ZERO)
            } else if x.norm() == 0.0 {
                (0.0, ONE)
            } else {
                let c = x.norm() / r;
                let s = (x / x.norm()) * y.conj() / r;
                (c, s)
            };
            for j in l..n {
                let u = h[(k, j)];
                let w = h[(k + 1, j)];
                h[(k, j)] = u * c + s * w;
                h[(k + 1, j)] = -s.conj() * u + w * c;
            }
            rots.push((c, s));
        }
        for (idx, k) in (l..hi).enumerate() {
            let (c, s) = rots[idx];
            for i in 0..=hi {
                let u = h[(i, k)];
                let w = h[(i, k + 1)];
                h[(i, k)] = u * c + w * s.conj();
                h[(i, k + 1)] = -u * s + w * c;
            }
            for i in 0..n {
                let u = q[(i, k)];
                let w = q[(i, k + 1)];
                q[(i, k)] = u * c + w * s.conj();
                q[(i, k + 1)] = -u * s + w * c;
            }
        }
        for k in l..=hi {
            h[(k, k)] += mu;
        }
    }
    for i in 0..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok((q, h))
}

/// Dense real Cholesky factor `L` (row-major, lower) of an SPD matrix.
#[derive(Debug, Clone)]
pub struct RealCholesky {
    n: usize,
    l: Vec<f64>,
}

impl RealCholesky {
    /// Factors `a` (n×n, row-major). `None` if a pivot is not positive.
    pub fn factor(a: &[f64], n: usize) -> Option<Self> {
        assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= 0.0 || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Some(Self { n, l })
    }

    /// Solves `L Lᵀ x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }
}

/// Cholesky factor `L` of a Hermitian positive definite matrix, `A = L L*`.
#[derive(Clone, Debug)]
pub struct HpdCholesky {
    l: CMatrix,
}

impl HpdCholesky {
    /// `None` unless `a` is numerically positive definite. Only the lower
    /// triangle of `a` is read.
    pub fn factor(a: &CMatrix) -> Option<Self> {
        if !a.is_square() {
            return None;
        }
        let n = a.rows();
        let mut l = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if d <= 0.0 || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = C64::new(d, 0.0);
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / d;
            }
        }
        Some(Self { l })
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.l.rows()).map(|i| self.l[(i, i)].re.ln()).sum::<f64>()
    }

    /// `A⁻¹`, Hermitian.
    pub fn inverse(&self) -> CMatrix {
        let n = self.l.rows();
        // Columns of L⁻¹ by forward substitution, then L⁻* L⁻¹.
        let mut li = CMatrix::zeros(n, n);
        for c in 0..n {
            for i in c..n {
                let mut s = if i == c { ONE } else { ZERO };
                for k in c..i {
                    s -= self.l[(i, k)] * li[(k, c)];
                }
                li[(i, c)] = s / self.l[(i, i)].re;
            }
        }
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = ZERO;
                for k in i..n {
                    s += li[(k, i)].conj() * li[(k, j)];
                }
                out[(i, j)] = s;
                out[(j, i)] = s.conj();
            }
        }
        out
    }
}
