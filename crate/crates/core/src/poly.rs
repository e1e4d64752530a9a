//! Sparse multivariate polynomials and rational functions over ℂ, evaluated
//! at points and, through the polynomial functional calculus, at tuples of
//! commuting matrices.

use std::collections::BTreeMap;
use std::fmt;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{min_singular_value, CMatrix, C64, ONE, ZERO};

/// Exponent multi-index, one entry per variable.
pub type Exponent = Vec<u32>;

/// Polynomial in `dim` variables stored as a map from exponent to nonzero coefficient.
#[derive(Clone, PartialEq)]
pub struct MultiPoly {
    dim: usize,
    terms: BTreeMap<Exponent, C64>,
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| format!("({:.4}{:+.4}i)·z^{:?}", c.re, c.im, e))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl MultiPoly {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: C64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, ONE)
    }

    /// The coordinate function `z_j`.
    pub fn variable(dim: usize, j: usize) -> Self {
        assert!(j < dim, "variable index {j} out of range for dim {dim}");
        let mut e = vec![0; dim];
        e[j] = 1;
        Self::monomial(e, ONE)
    }

    pub fn monomial(exp: Exponent, c: C64) -> Self {
        let mut p = Self::zero(exp.len());
        p.add_term(exp, c);
        p
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs, summing repeats.
    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Exponent, C64)>) -> Result<Self> {
        let mut p = Self::zero(dim);
        for (e, c) in terms {
            if e.len() != dim {
                return Err(Error::Dimension(format!(
                    "exponent {e:?} has length {}, expected {dim}",
                    e.len()
                )));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, exp: Exponent, c: C64) {
        debug_assert_eq!(exp.len(), self.dim);
        let v = self.terms.get(&exp).copied().unwrap_or(ZERO) + c;
        if v == ZERO {
            self.terms.remove(&exp);
        } else {
            self.terms.insert(exp, v);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &C64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for constants and the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// `Some(c)` when the polynomial is the constant `c`.
    pub fn as_constant(&self) -> Option<C64> {
        match self.terms.len() {
            0 => Some(ZERO),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|&k| k == 0).then_some(*c)
            }
            _ => None,
        }
    }

    pub fn add(&self, rhs: &MultiPoly) -> Result<MultiPoly> {
        self.check_dim(rhs)?;
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), *c);
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &MultiPoly) -> Result<MultiPoly> {
        self.add(&rhs.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, rhs: &MultiPoly) -> Result<MultiPoly> {
        self.check_dim(rhs)?;
        let mut out = MultiPoly::zero(self.dim);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Exponent = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: C64) -> MultiPoly {
        let mut out = MultiPoly::zero(self.dim);
        if s == ZERO {
            return out;
        }
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    fn check_dim(&self, rhs: &MultiPoly) -> Result<()> {
        if self.dim != rhs.dim {
            return Err(Error::Dimension(format!(
                "polynomials in {} and {} variables",
                self.dim, rhs.dim
            )));
        }
        Ok(())
    }

    pub fn eval(&self, z: &[C64]) -> Result<C64> {
        if z.len() != self.dim {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, polynomial has {} variables",
                z.len(),
                self.dim
            )));
        }
        Ok(self
            .terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(z)
                    .fold(*c, |acc, (&k, &zj)| acc * zj.powu(k))
            })
            .sum())
    }

    /// Polynomial functional calculus by monomial substitution. The caller is
    /// responsible for commutativity; see [`check_commuting`].
    pub fn eval_matrices(&self, t: &[CMatrix]) -> Result<CMatrix> {
        let d = tuple_dim(t, self.dim)?;
        let cache = PowerCache::new(t, self.degree_per_variable());
        let mut out = CMatrix::zeros(d, d);
        for (e, c) in &self.terms {
            let mono = cache.monomial(e, d);
            out.add_block(0, 0, &mono, *c);
        }
        Ok(out)
    }

    fn degree_per_variable(&self) -> Vec<u32> {
        let mut m = vec![0; self.dim];
        for e in self.terms.keys() {
            for (mj, &k) in m.iter_mut().zip(e) {
                *mj = (*mj).max(k);
            }
        }
        m
    }
}

fn tuple_dim(t: &[CMatrix], dim: usize) -> Result<usize> {
    if t.len() != dim {
        return Err(Error::Dimension(format!(
            "tuple has {} matrices, expected {dim}",
            t.len()
        )));
    }
    let d = t.first().map_or(1, CMatrix::rows);
    for (j, m) in t.iter().enumerate() {
        if m.rows() != d || m.cols() != d {
            return Err(Error::Dimension(format!(
                "tuple entry {j} is {}x{}, expected {d}x{d}",
                m.rows(),
                m.cols()
            )));
        }
    }
    Ok(d)
}

struct PowerCache {
    // powers[j][k] = T_j^k
    powers: Vec<Vec<CMatrix>>,
}

impl PowerCache {
    fn new(t: &[CMatrix], max_deg: Vec<u32>) -> Self {
        let powers = t
            .iter()
            .zip(max_deg)
            .map(|(tj, deg)| {
                let mut v = vec![CMatrix::identity(tj.rows())];
                for k in 1..=deg as usize {
                    let next = &v[k - 1] * tj;
                    v.push(next);
                }
                v
            })
            .collect();
        Self { powers }
    }

    fn monomial(&self, e: &[u32], d: usize) -> CMatrix {
        let mut acc: Option<CMatrix> = None;
        for (j, &k) in e.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let p = &self.powers[j][k as usize];
            acc = Some(match acc {
                None => p.clone(),
                Some(a) => &a * p,
            });
        }
        acc.unwrap_or_else(|| CMatrix::identity(d))
    }
}

/// Fails when some pair `T_i, T_j` has a commutator above tolerance.
pub fn check_commuting(t: &[CMatrix], tol: &Tolerances) -> Result<()> {
    for i in 0..t.len() {
        for j in (i + 1)..t.len() {
            let norm = crate::linalg::commutator_norm(&t[i], &t[j]);
            if norm >= tol.commutator {
                return Err(Error::Commutativity { i, j, norm });
            }
        }
    }
    Ok(())
}

/// `num / den` with no simplification.
#[derive(Clone, PartialEq)]
pub struct RationalFn {
    pub num: MultiPoly,
    pub den: MultiPoly,
}

impl fmt::Debug for RationalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polynomial() {
            write!(f, "{:?}", self.num)
        } else {
            write!(f, "({:?}) / ({:?})", self.num, self.den)
        }
    }
}

impl From<MultiPoly> for RationalFn {
    fn from(p: MultiPoly) -> Self {
        let dim = p.dim();
        RationalFn {
            num: p,
            den: MultiPoly::one(dim),
        }
    }
}

impl RationalFn {
    pub fn new(num: MultiPoly, den: MultiPoly) -> Result<Self> {
        if num.dim() != den.dim() {
            return Err(Error::Dimension(format!(
                "numerator has {} variables, denominator {}",
                num.dim(),
                den.dim()
            )));
        }
        if den.is_zero() {
            return Err(Error::Parameter("denominator is identically zero".into()));
        }
        Ok(Self { num, den })
    }

    pub fn dim(&self) -> usize {
        self.num.dim()
    }

    /// True when the denominator is the constant 1.
    pub fn is_polynomial(&self) -> bool {
        self.den.as_constant() == Some(ONE)
    }

    pub fn eval(&self, z: &[C64], tol: &Tolerances) -> Result<C64> {
        let d = self.den.eval(z)?;
        if d.norm() <= tol.pole {
            return Err(Error::Pole {
                entry: format!("{self:?}"),
                den_abs: d.norm(),
            });
        }
        Ok(self.num.eval(z)? / d)
    }

    /// `num(T) · den(T)⁻¹` for a commuting tuple.
    pub fn eval_matrices(&self, t: &[CMatrix], tol: &Tolerances) -> Result<CMatrix> {
        let num = self.num.eval_matrices(t)?;
        if self.is_polynomial() {
            return Ok(num);
        }
        let den = self.den.eval_matrices(t)?;
        let smin = min_singular_value(&den);
        if smin <= tol.singular {
            return Err(Error::Spectrum(format!(
                "denominator {:?} is singular on the tuple (σ_min = {smin:.3e})",
                self.den
            )));
        }
        let inv = den
            .inverse()
            .ok_or_else(|| Error::Spectrum("denominator not invertible".into()))?;
        Ok(&num * &inv)
    }
}

/// An `m × n` matrix whose entries are rational functions of `dim` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    dim: usize,
    entries: Vec<RationalFn>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<RationalFn>) -> Result<Self> {
        if entries.len() != rows * cols || entries.is_empty() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} function matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        let dim = entries[0].dim();
        if let Some(bad) = entries.iter().position(|e| e.dim() != dim) {
            return Err(Error::Dimension(format!(
                "entry {bad} has {} variables, expected {dim}",
                entries[bad].dim()
            )));
        }
        Ok(Self {
            rows,
            cols,
            dim,
            entries,
        })
    }

    pub fn from_polys(rows: usize, cols: usize, polys: Vec<MultiPoly>) -> Result<Self> {
        Self::new(rows, cols, polys.into_iter().map(RationalFn::from).collect())
    }

    pub fn scalar(f: impl Into<RationalFn>) -> Self {
        let f = f.into();
        Self {
            rows: 1,
            cols: 1,
            dim: f.dim(),
            entries: vec![f],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &RationalFn {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[RationalFn] {
        &self.entries
    }

    pub fn is_polynomial(&self) -> bool {
        self.entries.iter().all(RationalFn::is_polynomial)
    }

    /// Entrywise evaluation at a point.
    pub fn eval(&self, z: &[C64], tol: &Tolerances) -> Result<CMatrix> {
        let mut out = CMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self.entry(i, j).eval(z, tol).map_err(|e| match e {
                    Error::Pole { den_abs, .. } => Error::Pole {
                        entry: format!("entry ({i},{j})"),
                        den_abs,
                    },
                    other => other,
                })?;
            }
        }
        Ok(out)
    }

    /// Functional calculus on a commuting tuple of `d × d` matrices; the
    /// result is the `(m·d) × (n·d)` block matrix `[f_ij(T)]`.
    pub fn eval_on_tuple(&self, t: &[CMatrix], tol: &Tolerances) -> Result<CMatrix> {
        let d = tuple_dim(t, self.dim)?;
        check_commuting(t, tol)?;
        let mut out = CMatrix::zeros(self.rows * d, self.cols * d);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let b = self.entry(i, j).eval_matrices(t, tol).map_err(|e| match e {
                    Error::Spectrum(msg) => Error::Spectrum(format!("entry ({i},{j}): {msg}")),
                    other => other,
                })?;
                out.set_block(i * d, j * d, &b);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_poly(rng: &mut impl Rng, dim: usize, deg: u32, nterms: usize) -> MultiPoly {
        let terms = (0..nterms).map(|_| {
            let e: Exponent = (0..dim).map(|_| rng.gen_range(0..=deg)).collect();
            (e, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        });
        MultiPoly::from_terms(dim, terms).unwrap()
    }

    #[test]
    fn constant_term_at_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = random_poly(&mut rng, 3, 3, 6);
        p = p.add(&MultiPoly::constant(3, c(0.25, -1.0))).unwrap();
        let c0 = p.terms().find(|(e, _)| e.iter().all(|&k| k == 0)).map(|(_, c)| *c);
        let v = p.eval(&[c(0.0, 0.0); 3]).unwrap();
        assert_eq!(Some(v), c0);
    }

    #[test]
    fn cancellation_leaves_no_zero_terms() {
        let x = MultiPoly::variable(2, 0);
        let p = x.sub(&x).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.terms().count(), 0);
    }

    #[test]
    fn diagonal_calculus() {
        let f = MultiPoly::variable(2, 0).mul(&MultiPoly::variable(2, 1)).unwrap();
        let a = [c(0.3, 0.1), c(-0.2, 0.5)];
        let b = [c(0.7, 0.0), c(0.1, -0.4)];
        let t = [CMatrix::diag(&a), CMatrix::diag(&b)];
        let v = f.eval_matrices(&t).unwrap();
        let want = CMatrix::diag(&[a[0] * b[0], a[1] * b[1]]);
        assert!((&v - &want).frobenius_norm() < 1e-15);
    }

    #[test]
    fn constant_on_tuple_is_scalar_identity() {
        let f = MultiPoly::constant(1, c(2.0, -1.0));
        let t = [CMatrix::from_real(3, 3, &[1.0, 2.0, 3.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])];
        let v = f.eval_matrices(&t).unwrap();
        assert_eq!(v, CMatrix::identity(3).scale(c(2.0, -1.0)));
    }

    #[test]
    fn nilpotent_square_vanishes() {
        let z2 = MultiPoly::monomial(vec![2], ONE);
        let n = CMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(z2.eval_matrices(&[n]).unwrap(), CMatrix::zeros(2, 2));
    }

    #[test]
    fn rational_pole_and_inverse() {
        let tol = Tolerances::default();
        let f = RationalFn::new(MultiPoly::constant(1, c(0.5, 0.0)), MultiPoly::variable(1, 0))
            .unwrap();
        assert!(matches!(f.eval(&[ZERO], &tol), Err(Error::Pole { .. })));
        let v = f.eval(&[c(0.7, 0.0)], &tol).unwrap();
        assert!((v.re - 0.5 / 0.7).abs() < 1e-15);
        let n = CMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(f.eval_matrices(&[n], &tol), Err(Error::Spectrum(_))));
        let t = CMatrix::diag_real(&[0.5, 0.8]);
        let v = f.eval_matrices(&[t], &tol).unwrap();
        assert!((&v - &CMatrix::diag_real(&[1.0, 0.625])).frobenius_norm() < 1e-14);
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(RationalFn::new(MultiPoly::one(1), MultiPoly::zero(1)).is_err());
    }

    #[test]
    fn non_commuting_tuple_rejected() {
        let tol = Tolerances::default();
        let f = RationalMatrix::scalar(MultiPoly::variable(2, 0));
        let a = CMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = CMatrix::from_real(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            f.eval_on_tuple(&[a, b], &tol),
            Err(Error::Commutativity { i: 0, j: 1, .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn eval_is_linear(seed in any::<u64>(), dim in 1usize..4) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let p = random_poly(&mut rng, dim, 3, 5);
                let q = random_poly(&mut rng, dim, 3, 5);
                let z: Vec<C64> = (0..dim).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                let lhs = p.add(&q).unwrap().eval(&z).unwrap();
                let rhs = p.eval(&z).unwrap() + q.eval(&z).unwrap();
                prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
            }

            #[test]
            fn scalar_tuple_matches_point_eval(seed in any::<u64>(), dim in 1usize..4) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let p = random_poly(&mut rng, dim, 4, 6);
                let z: Vec<C64> = (0..dim).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                let t: Vec<CMatrix> = z.iter().map(|&zj| CMatrix::scalar(zj)).collect();
                let m = p.eval_matrices(&t).unwrap()[(0, 0)];
                let v = p.eval(&z).unwrap();
                prop_assert!((m - v).norm() <= 1e-12 * (1.0 + v.norm()));
            }

            #[test]
            fn calculus_is_multiplicative(seed in any::<u64>(), dim in 1usize..4, d in 1usize..5) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let p = random_poly(&mut rng, dim, 2, 4);
                let q = random_poly(&mut rng, dim, 2, 4);
                // Commuting: simultaneously diagonalizable with a common similarity.
                let s = CMatrix::from_fn(d, d, |i, j| {
                    let base = if i == j { 1.0 } else { 0.0 };
                    c(base + rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3))
                });
                let s_inv = s.inverse().unwrap();
                let t: Vec<CMatrix> = (0..dim).map(|_| {
                    let diag: Vec<C64> = (0..d).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                    &(&s * &CMatrix::diag(&diag)) * &s_inv
                }).collect();
                let pq = p.mul(&q).unwrap().eval_matrices(&t).unwrap();
                let prod = &p.eval_matrices(&t).unwrap() * &q.eval_matrices(&t).unwrap();
                let scale = 1.0 + prod.frobenius_norm();
                prop_assert!((&pq - &prod).frobenius_norm() < 1e-10 * scale);
            }
        }
    }
}
