//! k-idempotent algebras: commuting idempotents `E_1…E_k` with
//! `E_iE_j = δ_ij E_i` and `ΣE_i = I`, their operator norm, the equivalent
//! multiplier norm for the kernel `K(i,j) = E_iE_j*`, and the tuples
//! `T_j = Σ_i y_{i,j} E_i` they induce on a finite point set.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{condition_number, min_eigenvalue, op_norm, CMatrix, C64};
use crate::presentation::Presentation;
use crate::repsearch::{AdmissibleTuple, Provenance};

/// Frobenius bound for the algebra relations.
pub const RELATION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct KIdempotentAlgebra {
    dim: usize,
    idempotents: Vec<CMatrix>,
}

impl KIdempotentAlgebra {
    /// Checks `E_iE_j = δ_ij E_i` and `ΣE_i = I` to [`RELATION_TOL`].
    pub fn new(idempotents: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = idempotents.first() else {
            return Err(Error::Parameter("an algebra needs at least one idempotent".into()));
        };
        let d = first.rows();
        if let Some(i) = idempotents.iter().position(|e| e.shape() != (d, d)) {
            return Err(Error::Dimension(format!(
                "idempotent {i} is {:?}, expected {d}x{d}",
                idempotents[i].shape()
            )));
        }
        let alg = Self { dim: d, idempotents };
        let defect = alg.relation_defect();
        if !(defect < RELATION_TOL) {
            return Err(Error::Parameter(format!(
                "idempotent relations fail by {defect:.3e}"
            )));
        }
        Ok(alg)
    }

    /// The coordinate projections for a partition of `0..d` into groups
    /// `groups[c] ∈ 0..k`, conjugated by `s`.
    pub fn from_similarity(s: &CMatrix, groups: &[usize], k: usize) -> Result<Self> {
        let d = groups.len();
        if s.shape() != (d, d) {
            return Err(Error::Dimension(format!("similarity is {:?}, partition has {d} coordinates", s.shape())));
        }
        if (0..k).any(|g| !groups.contains(&g)) || groups.iter().any(|&g| g >= k) {
            return Err(Error::Parameter(format!("partition must use each of the {k} groups")));
        }
        let inv = s.inverse().ok_or_else(|| Error::Parameter("similarity is singular".into()))?;
        let idempotents = (0..k)
            .map(|g| {
                let p = CMatrix::diag_real(&groups.iter().map(|&x| if x == g { 1.0 } else { 0.0 }).collect::<Vec<_>>());
                &(s * &p) * &inv
            })
            .collect();
        Self::new(idempotents)
    }

    /// `k` orthogonal coordinate projections on `ℂ^k`.
    pub fn orthogonal(k: usize) -> Result<Self> {
        Self::from_similarity(&CMatrix::identity(k), &(0..k).collect::<Vec<_>>(), k)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.idempotents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idempotents.is_empty()
    }

    pub fn idempotents(&self) -> &[CMatrix] {
        &self.idempotents
    }

    /// Largest Frobenius defect over `E_iE_j − δ_ij E_i` and `ΣE_i − I`.
    pub fn relation_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut sum = CMatrix::zeros(self.dim, self.dim);
        for (i, ei) in self.idempotents.iter().enumerate() {
            for (j, ej) in self.idempotents.iter().enumerate() {
                let prod = ei * ej;
                let err = if i == j { &prod - ei } else { prod };
                worst = worst.max(err.frobenius_norm());
            }
            sum = &sum + ei;
        }
        worst.max((&sum - &CMatrix::identity(self.dim)).frobenius_norm())
    }

    /// `Σ A_i ⊗ E_i`.
    pub fn element(&self, coeffs: &[CMatrix]) -> Result<CMatrix> {
        if coeffs.len() != self.len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for {} idempotents",
                coeffs.len(),
                self.len()
            )));
        }
        let p = coeffs[0].rows();
        if let Some(i) = coeffs.iter().position(|a| a.shape() != (p, p)) {
            return Err(Error::Dimension(format!("coefficient {i} is {:?}, expected {p}x{p}", coeffs[i].shape())));
        }
        let mut out = CMatrix::zeros(p * self.dim, p * self.dim);
        for (a, e) in coeffs.iter().zip(&self.idempotents) {
            out = &out + &a.kron(e);
        }
        Ok(out)
    }
}

fn gaussian(rng: &mut impl Rng, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// A random similarity with condition number at most `cond_cap`.
pub fn random_similarity(rng: &mut impl Rng, d: usize, cond_cap: f64) -> Result<CMatrix> {
    if !(cond_cap >= 1.0) {
        return Err(Error::Parameter(format!("condition cap must be at least 1, got {cond_cap}")));
    }
    for _ in 0..10_000 {
        let s = gaussian(rng, d);
        if condition_number(&s) <= cond_cap {
            return Ok(s);
        }
    }
    // Gaussian draws rarely meet tight caps; blend toward the identity.
    loop {
        let g = gaussian(rng, d);
        let scale = rng.gen_range(0.0..1.0) / g.frobenius_norm().max(1e-300);
        let s = &CMatrix::identity(d) + &g.scale_real(scale);
        if condition_number(&s) <= cond_cap {
            return Ok(s);
        }
    }
}

/// A random partition of `0..d` into `k` nonempty groups.
pub fn random_partition(rng: &mut impl Rng, k: usize, d: usize) -> Vec<usize> {
    let mut groups: Vec<usize> = (0..d).map(|c| if c < k { c } else { rng.gen_range(0..k) }).collect();
    groups.shuffle(rng);
    groups
}

/// `E_i = S P_i S⁻¹` for a random partition and a random `S` with
/// `cond(S) ≤ cond_cap`; draws again if the relations lose accuracy.
pub fn random_idempotents(k: usize, d: usize, seed: u64, cond_cap: f64) -> Result<KIdempotentAlgebra> {
    if k == 0 || k > d {
        return Err(Error::Parameter(format!("need 1 <= k <= d, got k={k}, d={d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let s = random_similarity(&mut rng, d, cond_cap)?;
        let groups = random_partition(&mut rng, k, d);
        match KIdempotentAlgebra::from_similarity(&s, &groups, k) {
            Ok(alg) => return Ok(alg),
            Err(Error::Parameter(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// `‖Σ A_i ⊗ E_i‖`.
pub fn algebra_norm(alg: &KIdempotentAlgebra, coeffs: &[CMatrix]) -> Result<f64> {
    Ok(op_norm(&alg.element(coeffs)?))
}

/// Block matrix `[(C²I − A_iA_j*) ⊗ E_iE_j*]_{i,j}`.
fn kernel_matrix(alg: &KIdempotentAlgebra, coeffs: &[CMatrix], c: f64) -> CMatrix {
    let k = alg.len();
    let p = coeffs[0].rows();
    let d = alg.dim();
    let n = p * d;
    let id = CMatrix::identity(p).scale_real(c * c);
    let mut out = CMatrix::zeros(k * n, k * n);
    for i in 0..k {
        for j in i..k {
            let left = &id - &(&coeffs[i] * &coeffs[j].adjoint());
            let right = &alg.idempotents[i] * &alg.idempotents[j].adjoint();
            let block = left.kron(&right);
            out.set_block(i * n, j * n, &block);
            if i != j {
                out.set_block(j * n, i * n, &block.adjoint());
            }
        }
    }
    out
}

fn kernel_psd(alg: &KIdempotentAlgebra, coeffs: &[CMatrix], c: f64, tol: &Tolerances) -> Result<bool> {
    Ok(min_eigenvalue(&kernel_matrix(alg, coeffs, c), tol)? >= -1e-10 * c * c)
}

/// Least `C` (to within `bisect_tol`) for which the kernel block matrix with
/// matrix coefficients is positive semidefinite.
pub fn multiplier_norm_matrix(
    alg: &KIdempotentAlgebra,
    coeffs: &[CMatrix],
    bisect_tol: f64,
    tol: &Tolerances,
) -> Result<f64> {
    alg.element(coeffs)?;
    if !(bisect_tol > 0.0) {
        return Err(Error::Parameter(format!("bisection tolerance must be positive, got {bisect_tol}")));
    }
    let mut lo = coeffs.iter().map(op_norm).fold(0.0, f64::max);
    if lo == 0.0 {
        return Ok(0.0);
    }
    if kernel_psd(alg, coeffs, lo, tol)? {
        return Ok(lo);
    }
    let mut hi = 2.0 * lo;
    while !kernel_psd(alg, coeffs, hi, tol)? {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Spectrum("kernel matrix never became positive".into()));
        }
    }
    while hi - lo > bisect_tol {
        let mid = 0.5 * (lo + hi);
        if kernel_psd(alg, coeffs, mid, tol)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// [`multiplier_norm_matrix`] for scalar coefficients.
pub fn multiplier_norm_via_kernel(
    alg: &KIdempotentAlgebra,
    coeffs: &[C64],
    bisect_tol: f64,
    tol: &Tolerances,
) -> Result<f64> {
    let m: Vec<CMatrix> = coeffs.iter().map(|&a| CMatrix::scalar(a)).collect();
    multiplier_norm_matrix(alg, &m, bisect_tol, tol)
}

/// Outcome of [`quotient_rep`].
#[derive(Clone, Debug, PartialEq)]
pub enum QuotientRep {
    Admissible(AdmissibleTuple),
    /// Some `‖F_k(T)‖` exceeds one; the tuple and all margins are returned.
    Rejected { matrices: Vec<CMatrix>, margins: Vec<f64> },
}

impl QuotientRep {
    pub fn margins(&self) -> &[f64] {
        match self {
            QuotientRep::Admissible(t) => &t.margins,
            QuotientRep::Rejected { margins, .. } => margins,
        }
    }

    pub fn admissible(self) -> Option<AdmissibleTuple> {
        match self {
            QuotientRep::Admissible(t) => Some(t),
            QuotientRep::Rejected { .. } => None,
        }
    }
}

/// `T_j = Σ_i y_{i,j} E_i`, with margins `1 − ‖F_k(T)‖`.
pub fn quotient_rep(
    presentation: &Presentation,
    points: &[Vec<C64>],
    alg: &KIdempotentAlgebra,
    tol: &Tolerances,
) -> Result<QuotientRep> {
    quotient_rep_seeded(presentation, points, alg, None, None, tol)
}

pub(crate) fn quotient_rep_seeded(
    presentation: &Presentation,
    points: &[Vec<C64>],
    alg: &KIdempotentAlgebra,
    seed: Option<u64>,
    restart: Option<usize>,
    tol: &Tolerances,
) -> Result<QuotientRep> {
    if points.len() != alg.len() {
        return Err(Error::Parameter(format!(
            "{} points but {} idempotents",
            points.len(),
            alg.len()
        )));
    }
    let n = presentation.dim();
    if let Some(i) = points.iter().position(|z| z.len() != n) {
        return Err(Error::Dimension(format!("point {i} has {} coordinates, expected {n}", points[i].len())));
    }
    let d = alg.dim();
    let matrices: Vec<CMatrix> = (0..n)
        .map(|j| {
            let mut t = CMatrix::zeros(d, d);
            for (z, e) in points.iter().zip(alg.idempotents()) {
                t = &t + &e.scale(z[j]);
            }
            t
        })
        .collect();
    let margins = presentation.tuple_margins(&matrices, tol)?;
    if margins.iter().all(|&m| m >= -tol.admissible_margin) {
        Ok(QuotientRep::Admissible(AdmissibleTuple {
            matrices,
            margins,
            provenance: Provenance {
                points: points.to_vec(),
                seed,
                restart,
            },
        }))
    } else {
        Ok(QuotientRep::Rejected { matrices, margins })
    }
}
