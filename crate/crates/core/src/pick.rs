//! Finite-point interpolation as a semidefinite feasibility problem.
//!
//! Given points `x_1…x_ℓ` in a presented domain and targets `W_i ∈ M_{m×n}`,
//! an interpolant of norm at most one exists iff there are PSD Gram blocks
//! `Γ_0, Γ_1…Γ_K` (and, in the strict version, `R ⪰ ε·I`) with
//!
//! ```text
//! I − W_i W_j* = R + Γ_0(i,j) + Σ_k Σ_{a,b} Δ_k(i,j)_{ab} Γ_k[(i,a),(j,b)],
//! Δ_k(i,j) = I − F_k(x_i) F_k(x_j)*.
//! ```
//!
//! `Γ_k` is an `(ℓ·m_k·m)`-square matrix whose `m × m` block at
//! `((i,a),(j,b))` pairs row `a` of the factor at `x_i` with row `b` of the
//! factor at `x_j`; any multiplicity of the factor shows up only as its rank.
//!
//! The default solver is a log-barrier method that eliminates `Γ_0` and
//! maximizes the smallest eigenvalue margin of the remaining blocks; a
//! Douglas–Rachford projection method is kept as an alternative. Certificates
//! are read off by solving the identity for `Γ_0` and clipping it, so the
//! reported residual is exactly the mass that clipping removed.

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, psd_from_eig, CMatrix, HermEig, RealCholesky, C64, ZERO};
use crate::presentation::Presentation;
use serde::{Deserialize, Serialize};

mod barrier;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Points and targets, validated against a presentation.
#[derive(Clone, Debug)]
pub struct InterpolationProblem {
    presentation: Presentation,
    points: Vec<Vec<C64>>,
    targets: Vec<CMatrix>,
    margins: Vec<f64>,
}

/// Largest coordinatewise distance below which two points count as equal.
pub const DUPLICATE_TOL: f64 = 1e-12;

impl InterpolationProblem {
    pub fn new(
        presentation: Presentation,
        points: Vec<Vec<C64>>,
        targets: Vec<CMatrix>,
        tol: &Tolerances,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Parameter("at least one point is required".into()));
        }
        if points.len() != targets.len() {
            return Err(Error::Dimension(format!(
                "{} points but {} targets",
                points.len(),
                targets.len()
            )));
        }
        let shape = targets[0].shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::Dimension("targets must be nonempty matrices".into()));
        }
        if let Some(i) = targets.iter().position(|w| w.shape() != shape) {
            return Err(Error::Dimension(format!(
                "target {i} is {:?}, target 0 is {:?}",
                targets[i].shape(),
                shape
            )));
        }
        for (i, z) in points.iter().enumerate() {
            if z.len() != presentation.dim() {
                return Err(Error::Dimension(format!(
                    "point {i} has {} coordinates, domain lives in C^{}",
                    z.len(),
                    presentation.dim()
                )));
            }
            for (j, w) in points.iter().enumerate().take(i) {
                let dist = z.iter().zip(w).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                if dist <= DUPLICATE_TOL {
                    return Err(Error::Duplicate(j, i));
                }
            }
        }
        let mut margins = Vec::with_capacity(points.len());
        for (index, z) in points.iter().enumerate() {
            let m = presentation.in_domain(z, tol)?;
            if !m.inside {
                return Err(Error::Domain {
                    index,
                    margin: m.margin,
                });
            }
            margins.push(m.margin);
        }
        Ok(Self {
            presentation,
            points,
            targets,
            margins,
        })
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn points(&self) -> &[Vec<C64>] {
        &self.points
    }

    pub fn targets(&self) -> &[CMatrix] {
        &self.targets
    }

    pub fn margins(&self) -> &[f64] {
        &self.margins
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(m, n)` shape of the targets.
    pub fn target_shape(&self) -> (usize, usize) {
        self.targets[0].shape()
    }

    /// Same points with every target multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            targets: self.targets.iter().map(|w| w.scale_real(s)).collect(),
            ..self.clone()
        }
    }

    /// Same points with new targets; shapes must agree among themselves.
    pub fn with_targets(&self, targets: Vec<CMatrix>) -> Result<Self> {
        if targets.len() != self.points.len() {
            return Err(Error::Dimension(format!(
                "{} points but {} targets",
                self.points.len(),
                targets.len()
            )));
        }
        let shape = targets[0].shape();
        if targets.iter().any(|w| w.shape() != shape) {
            return Err(Error::Dimension("targets differ in shape".into()));
        }
        Ok(Self {
            targets,
            ..self.clone()
        })
    }
}

/// For each k, the `(ℓ·m_k)`-square block matrix `[I − F_k(x_i)F_k(x_j)*]_{i,j}`.
#[derive(Clone, Debug)]
pub struct DeltaBlocks {
    points: usize,
    sizes: Vec<usize>,
    blocks: Vec<CMatrix>,
}

impl DeltaBlocks {
    pub fn new(prob: &InterpolationProblem, tol: &Tolerances) -> Result<Self> {
        let p = prob.presentation();
        let l = prob.len();
        let values: Vec<Vec<CMatrix>> = prob
            .points()
            .iter()
            .map(|z| p.eval_all(z, tol))
            .collect::<Result<_>>()?;
        let sizes: Vec<usize> = p.shapes().iter().map(|s| s.0).collect();
        let mut blocks = Vec::with_capacity(sizes.len());
        for (k, &mk) in sizes.iter().enumerate() {
            let mut big = CMatrix::zeros(l * mk, l * mk);
            for i in 0..l {
                for j in i..l {
                    let fi = &values[i][k];
                    let fj = &values[j][k];
                    let d = &CMatrix::identity(mk) - &(fi * &fj.adjoint());
                    big.set_block(i * mk, j * mk, &d);
                    if i != j {
                        big.set_block(j * mk, i * mk, &d.adjoint());
                    }
                }
            }
            blocks.push(big);
        }
        Ok(Self {
            points: l,
            sizes,
            blocks,
        })
    }

    /// Number of constraint families `K`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Row count `m_k` of `F_k`.
    pub fn size(&self, k: usize) -> usize {
        self.sizes[k]
    }

    /// The whole block matrix for family `k`.
    pub fn matrix(&self, k: usize) -> &CMatrix {
        &self.blocks[k]
    }

    /// `Δ_k(i,j)`.
    pub fn block(&self, k: usize, i: usize, j: usize) -> CMatrix {
        let mk = self.sizes[k];
        self.blocks[k].block(i * mk, j * mk, mk, mk)
    }

    pub fn points(&self) -> usize {
        self.points
    }
}

/// One Hermitian unknown in the real vectorization.
#[derive(Clone, Copy, Debug)]
struct Slot {
    size: usize,
    offset: usize,
}

/// Assembled linear matrix inequality for one interpolation problem.
#[derive(Clone, Debug)]
pub struct Lmi {
    points: usize,
    m: usize,
    strict_eps: f64,
    delta: DeltaBlocks,
    target: CMatrix,
    slots: Vec<Slot>,
    nvars: usize,
    ncons: usize,
    // Dense constraint map, ncons × nvars row-major, with Cholesky of A Aᵀ.
    a: Vec<f64>,
    rhs: Vec<f64>,
    gram: RealCholesky,
}

/// `Γ_0`, `Γ_1…Γ_K` and, for the strict version, `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct Unknowns {
    pub gamma0: CMatrix,
    pub gammas: Vec<CMatrix>,
    pub r: Option<CMatrix>,
}

/// Builds the feasibility problem. With `strict_eps > 0` the unknown `R` is
/// constrained by `R ⪰ strict_eps·I`; with `strict_eps = 0` it is merged
/// into `Γ_0`.
pub fn build_lmi(prob: &InterpolationProblem, strict_eps: f64, tol: &Tolerances) -> Result<Lmi> {
    if !(strict_eps >= 0.0) || !strict_eps.is_finite() {
        return Err(Error::Parameter(format!(
            "strict_eps must be a finite nonnegative number, got {strict_eps}"
        )));
    }
    let l = prob.len();
    let (m, _) = prob.target_shape();
    let delta = DeltaBlocks::new(prob, tol)?;

    let mut target = CMatrix::zeros(l * m, l * m);
    let w = prob.targets();
    for i in 0..l {
        for j in i..l {
            let s = &CMatrix::identity(m) - &(&w[i] * &w[j].adjoint());
            target.set_block(i * m, j * m, &s);
            if i != j {
                target.set_block(j * m, i * m, &s.adjoint());
            }
        }
    }

    let mut slots = Vec::new();
    let mut offset = 0;
    let mut push = |size: usize| {
        slots.push(Slot { size, offset });
        offset += size * size;
    };
    push(l * m);
    for k in 0..delta.len() {
        push(l * delta.size(k) * m);
    }
    if strict_eps > 0.0 {
        push(m);
    }
    let nvars = offset;
    let ncons = l * l * m * m;

    let mut lmi = Lmi {
        points: l,
        m,
        strict_eps,
        delta,
        target,
        slots,
        nvars,
        ncons,
        a: Vec::new(),
        rhs: Vec::new(),
        gram: RealCholesky::factor(&[1.0], 1).expect("1x1 identity"),
    };

    // Column-by-column image of the real basis under the constraint map.
    let mut a = vec![0.0; ncons * nvars];
    let mut basis = vec![0.0; nvars];
    for col in 0..nvars {
        basis[col] = 1.0;
        let img = lmi.constraint_vec(&lmi.apply(&lmi.unpack(&basis)));
        basis[col] = 0.0;
        for (row, v) in img.into_iter().enumerate() {
            a[row * nvars + col] = v;
        }
    }
    let mut shifted = lmi.target.clone();
    if strict_eps > 0.0 {
        for i in 0..l {
            for j in 0..l {
                for c in 0..m {
                    shifted[(i * m + c, j * m + c)] -= C64::new(strict_eps, 0.0);
                }
            }
        }
    }
    lmi.rhs = lmi.constraint_vec(&shifted);

    let mut aat = vec![0.0; ncons * ncons];
    for r in 0..ncons {
        for s in r..ncons {
            let dot: f64 = (0..nvars).map(|c| a[r * nvars + c] * a[s * nvars + c]).sum();
            aat[r * ncons + s] = dot;
            aat[s * ncons + r] = dot;
        }
    }
    lmi.gram = RealCholesky::factor(&aat, ncons)
        .ok_or_else(|| Error::Dimension("constraint map is rank deficient".into()))?;
    lmi.a = a;
    Ok(lmi)
}

impl Lmi {
    pub fn points(&self) -> usize {
        self.points
    }

    /// Row count `m` of the targets.
    pub fn target_rows(&self) -> usize {
        self.m
    }

    pub fn strict_eps(&self) -> f64 {
        self.strict_eps
    }

    pub fn delta(&self) -> &DeltaBlocks {
        &self.delta
    }

    /// The block matrix `[I − W_i W_j*]_{i,j}`.
    pub fn target(&self) -> &CMatrix {
        &self.target
    }

    /// `S(i,j) = I − W_i W_j*`.
    pub fn target_block(&self, i: usize, j: usize) -> CMatrix {
        self.target.block(i * self.m, j * self.m, self.m, self.m)
    }

    /// Sizes of the PSD unknowns in order `Γ_0, Γ_1…Γ_K[, R]`.
    pub fn unknown_sizes(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.size).collect()
    }

    /// Number of `m × m` constraint blocks (`ℓ²`); the lower triangle is the
    /// adjoint of the upper, so `ℓ(ℓ+1)/2` of them are independent.
    pub fn constraint_blocks(&self) -> usize {
        self.points * self.points
    }

    /// Number of real scalar constraints after removing the Hermitian redundancy.
    pub fn real_constraints(&self) -> usize {
        self.ncons
    }

    pub fn real_unknowns(&self) -> usize {
        self.nvars
    }

    /// The linear part of the identity: `R + Γ_0(i,j) + Σ_k Σ_{ab} Δ_k(i,j)_{ab} Γ_k[(i,a),(j,b)]`
    /// as an `(ℓ·m)`-square block matrix.
    pub fn apply(&self, x: &Unknowns) -> CMatrix {
        let (l, m) = (self.points, self.m);
        let mut out = x.gamma0.clone();
        for (k, g) in x.gammas.iter().enumerate() {
            let mk = self.delta.size(k);
            let dk = self.delta.matrix(k);
            for i in 0..l {
                for j in 0..l {
                    for a in 0..mk {
                        for b in 0..mk {
                            let coef = dk[(i * mk + a, j * mk + b)];
                            if coef == ZERO {
                                continue;
                            }
                            let r0 = (i * mk + a) * m;
                            let c0 = (j * mk + b) * m;
                            for c in 0..m {
                                for d in 0..m {
                                    out[(i * m + c, j * m + d)] += coef * g[(r0 + c, c0 + d)];
                                }
                            }
                        }
                    }
                }
            }
        }
        if let Some(r) = &x.r {
            for i in 0..l {
                for j in 0..l {
                    out.add_block(i * m, j * m, r, C64::new(1.0, 0.0));
                }
            }
        }
        out
    }

    /// Real coordinates of the upper block triangle of an `(ℓ·m)`-square matrix.
    fn constraint_vec(&self, blocks: &CMatrix) -> Vec<f64> {
        let (l, m) = (self.points, self.m);
        let mut v = Vec::with_capacity(self.ncons);
        for i in 0..l {
            for j in i..l {
                for c in 0..m {
                    for d in 0..m {
                        let z = blocks[(i * m + c, j * m + d)];
                        if i < j {
                            v.push(z.re);
                            v.push(z.im);
                        } else if c == d {
                            v.push(z.re);
                        } else if c < d {
                            v.push(z.re);
                            v.push(z.im);
                        }
                    }
                }
            }
        }
        debug_assert_eq!(v.len(), self.ncons);
        v
    }

    fn unpack(&self, v: &[f64]) -> Unknowns {
        let mats: Vec<CMatrix> = self
            .slots
            .iter()
            .map(|s| herm_from_vec(&v[s.offset..s.offset + s.size * s.size], s.size))
            .collect();
        let k = self.delta.len();
        let mut it = mats.into_iter();
        let gamma0 = it.next().expect("gamma0 slot");
        let gammas: Vec<CMatrix> = it.by_ref().take(k).collect();
        let r = it.next();
        Unknowns { gamma0, gammas, r }
    }

    fn project_affine(&self, v: &mut [f64]) {
        let (nc, nv) = (self.ncons, self.nvars);
        let mut res: Vec<f64> = (0..nc)
            .map(|r| {
                let row = &self.a[r * nv..(r + 1) * nv];
                row.iter().zip(v.iter()).map(|(a, x)| a * x).sum::<f64>() - self.rhs[r]
            })
            .collect();
        self.gram.solve_in_place(&mut res);
        for (r, &y) in res.iter().enumerate() {
            if y == 0.0 {
                continue;
            }
            let row = &self.a[r * nv..(r + 1) * nv];
            for (x, a) in v.iter_mut().zip(row) {
                *x -= a * y;
            }
        }
    }

    /// Projects each block onto the PSD cone; `R` is projected onto `R ⪰ 0`
    /// in its shifted coordinates (the unknown stored is `R − ε·I`).
    fn project_psd(&self, v: &mut [f64], tol: &Tolerances) -> Result<()> {
        for s in &self.slots {
            let seg = &mut v[s.offset..s.offset + s.size * s.size];
            let h = herm_from_vec(seg, s.size);
            let eig = hermitian_eig(&h, tol)?;
            if eig.min() < 0.0 {
                herm_to_vec(&psd_from_eig(&eig), seg);
            }
        }
        Ok(())
    }

    /// Reads a certificate off a PSD iterate by solving the identity for
    /// `Γ_0` and clipping its negative part.
    fn extract(&self, v: &[f64], tol: &Tolerances) -> Result<Certificate> {
        self.certify(self.unpack(v), tol)
    }

    /// Certificate from PSD `Γ_1…Γ_K` and shifted `R`; `x.gamma0` is ignored.
    fn certify(&self, mut x: Unknowns, tol: &Tolerances) -> Result<Certificate> {
        if let Some(r) = x.r.as_mut() {
            for c in 0..self.m {
                r[(c, c)] += C64::new(self.strict_eps, 0.0);
            }
        }
        x.gamma0 = CMatrix::zeros(self.points * self.m, self.points * self.m);
        let raw = (&self.target - &self.apply(&x)).hermitian_part();
        let eig: HermEig = hermitian_eig(&raw, tol)?;
        let gamma0 = psd_from_eig(&eig);
        let residual = block_residual(&(&raw - &gamma0), self.points, self.m);

        let mut min_eig = hermitian_eig(&gamma0, tol)?.min();
        for g in &x.gammas {
            min_eig = min_eig.min(hermitian_eig(g, tol)?.min());
        }
        if let Some(r) = &x.r {
            min_eig = min_eig.min(hermitian_eig(r, tol)?.min() - self.strict_eps);
        }
        Ok(Certificate {
            gamma0,
            gammas: x.gammas,
            r: x.r,
            residual,
            min_eig,
        })
    }
}

fn block_residual(diff: &CMatrix, l: usize, m: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..l {
        for j in 0..l {
            worst = worst.max(diff.block(i * m, j * m, m, m).frobenius_norm());
        }
    }
    worst
}

/// Isometric real coordinates of a Hermitian matrix: diagonal entries, then
/// `√2·Re`, `√2·Im` of the strict upper triangle.
fn herm_to_vec(h: &CMatrix, out: &mut [f64]) {
    let n = h.rows();
    let mut t = 0;
    for i in 0..n {
        out[t] = h[(i, i)].re;
        t += 1;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            out[t] = SQRT2 * h[(i, j)].re;
            out[t + 1] = SQRT2 * h[(i, j)].im;
            t += 2;
        }
    }
}

fn herm_from_vec(v: &[f64], n: usize) -> CMatrix {
    let mut h = CMatrix::zeros(n, n);
    let mut t = 0;
    for i in 0..n {
        h[(i, i)] = C64::new(v[t], 0.0);
        t += 1;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let z = C64::new(v[t], v[t + 1]) / SQRT2;
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            t += 2;
        }
    }
    h
}

/// PSD Gram blocks realizing the factorization identity over the points.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub gamma0: CMatrix,
    pub gammas: Vec<CMatrix>,
    pub r: Option<CMatrix>,
    pub residual: f64,
    pub min_eig: f64,
}

impl Certificate {
    /// Trace of `Γ_k`; the total Gram mass the certificate places on family `k`.
    pub fn gram_mass(&self, k: usize) -> f64 {
        self.gammas[k].trace().re
    }

    /// A factor `V` with `Γ_k = V V*`; its row blocks are the values of the
    /// factor functions at the points and its column count is the rank.
    pub fn factor(&self, k: usize, tol: &Tolerances) -> Result<CMatrix> {
        let eig = hermitian_eig(&self.gammas[k], tol)?;
        let n = self.gammas[k].rows();
        let cutoff = tol.cert_min_eig.max(1e-14 * eig.max().abs());
        let keep: Vec<usize> = (0..n).filter(|&c| eig.eigenvalues[c] > cutoff).collect();
        Ok(CMatrix::from_fn(n, keep.len(), |r, c| {
            eig.eigenvectors[(r, keep[c])] * eig.eigenvalues[keep[c]].sqrt()
        }))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Interior point path following on the margin `λ`; iterations are
    /// Newton steps.
    #[default]
    Barrier,
    /// Douglas–Rachford projections; only the stall rule detects infeasibility.
    Projection,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub method: Method,
    pub tol_feas: f64,
    pub tol_stall: f64,
    /// Stall threshold proportional to the current residual, so that large
    /// gaps shrinking at a crawl still count as stalled.
    pub rel_stall: f64,
    pub max_iter: usize,
    /// Iterations between stall checks.
    pub stall_window: usize,
    /// Iterations between certificate extractions.
    pub check_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: Method::Barrier,
            tol_feas: 1e-7,
            tol_stall: 1e-9,
            rel_stall: 1e-3,
            max_iter: 20_000,
            stall_window: 500,
            check_every: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Feasible { certificate: Certificate, iterations: usize },
    /// No progress; evidence of infeasibility, not a proof.
    Stalled { gap: f64, best: Certificate, iterations: usize },
}

impl Outcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Outcome::Feasible { .. })
    }

    pub fn certificate(&self) -> &Certificate {
        match self {
            Outcome::Feasible { certificate, .. } => certificate,
            Outcome::Stalled { best, .. } => best,
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            Outcome::Feasible { iterations, .. } | Outcome::Stalled { iterations, .. } => *iterations,
        }
    }
}

/// Decides feasibility of the identity with the method in `opts`.
pub fn solve_feasibility(lmi: &Lmi, opts: &SolverOptions, tol: &Tolerances) -> Result<Outcome> {
    match opts.method {
        Method::Barrier => barrier::solve(lmi, opts, tol),
        Method::Projection => solve_projection(lmi, opts, tol),
    }
}

/// Douglas–Rachford splitting between the PSD cone product and the affine set
/// of the identity. The shadow iterate `P_psd(x)` is the one certificates are
/// read from.
fn solve_projection(lmi: &Lmi, opts: &SolverOptions, tol: &Tolerances) -> Result<Outcome> {
    let n = lmi.nvars;
    let mut x = vec![0.0; n];
    lmi.project_affine(&mut x);
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];

    let mut best: Option<Certificate> = None;
    let mut window_start = f64::INFINITY;
    let check_every = opts.check_every.max(1);
    let window = opts.stall_window.max(check_every);

    for iter in 1..=opts.max_iter {
        y.copy_from_slice(&x);
        lmi.project_psd(&mut y, tol)?;
        for t in 0..n {
            z[t] = 2.0 * y[t] - x[t];
        }
        lmi.project_affine(&mut z);
        for t in 0..n {
            x[t] += z[t] - y[t];
        }

        if iter % check_every == 0 || iter == 1 {
            let cert = lmi.extract(&y, tol)?;
            let improved = best.as_ref().is_none_or(|b| cert.residual < b.residual);
            if improved {
                best = Some(cert);
            }
            let b = best.as_ref().expect("set above");
            if b.residual < opts.tol_feas && b.min_eig >= -tol.cert_min_eig {
                return Ok(Outcome::Feasible {
                    certificate: b.clone(),
                    iterations: iter,
                });
            }
        }
        if iter % window == 0 {
            let r = best.as_ref().map_or(f64::INFINITY, |b| b.residual);
            if window_start - r < opts.tol_stall + opts.rel_stall * r {
                return Ok(Outcome::Stalled {
                    gap: r,
                    best: best.expect("checked at least once"),
                    iterations: iter,
                });
            }
            window_start = r;
        }
    }
    Err(Error::Inconclusive {
        iterations: opts.max_iter,
        residual: best.map_or(f64::INFINITY, |b| b.residual),
    })
}

/// Outcome of recomputing a certificate's identity from scratch.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub residual: f64,
    /// Smallest eigenvalue of `Γ_0`, each `Γ_k`, then `R` when present.
    pub min_eig_per_block: Vec<f64>,
    /// Largest `‖B − B*‖_F` over the certificate blocks.
    pub hermitian_defect: f64,
    pub verdict: bool,
}

/// Re-evaluates the presentation at the points and checks the identity and
/// positivity of every block, without reusing the solver's assembly.
pub fn verify_certificate(
    prob: &InterpolationProblem,
    cert: &Certificate,
    tol: &Tolerances,
) -> Result<VerifyReport> {
    let p = prob.presentation();
    let l = prob.len();
    let (m, _) = prob.target_shape();
    let shapes = p.shapes();

    if cert.gammas.len() != shapes.len() {
        return Err(Error::Dimension(format!(
            "certificate has {} Gram blocks, presentation has {} functions",
            cert.gammas.len(),
            shapes.len()
        )));
    }
    if cert.gamma0.shape() != (l * m, l * m) {
        return Err(Error::Dimension(format!(
            "gamma0 is {:?}, expected {}x{}",
            cert.gamma0.shape(),
            l * m,
            l * m
        )));
    }
    for (k, (g, &(mk, _))) in cert.gammas.iter().zip(&shapes).enumerate() {
        let n = l * mk * m;
        if g.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "gamma {k} is {:?}, expected {n}x{n}",
                g.shape()
            )));
        }
    }
    if let Some(r) = &cert.r {
        if r.shape() != (m, m) {
            return Err(Error::Dimension(format!("R is {:?}, expected {m}x{m}", r.shape())));
        }
    }

    let values: Vec<Vec<CMatrix>> = prob
        .points()
        .iter()
        .map(|z| p.eval_all(z, tol))
        .collect::<Result<_>>()?;
    let w = prob.targets();

    let mut residual: f64 = 0.0;
    for i in 0..l {
        for j in 0..l {
            let mut e = &CMatrix::identity(m) - &(&w[i] * &w[j].adjoint());
            if let Some(r) = &cert.r {
                e = &e - r;
            }
            e = &e - &cert.gamma0.block(i * m, j * m, m, m);
            for (k, g) in cert.gammas.iter().enumerate() {
                let mk = shapes[k].0;
                let fi = &values[i][k];
                let fj = &values[j][k];
                for a in 0..mk {
                    for b in 0..mk {
                        // (I − F(x_i) F(x_j)*)_{ab}
                        let mut coef: C64 = (0..fi.cols()).map(|c| fi[(a, c)] * fj[(b, c)].conj()).sum();
                        coef = -coef;
                        if a == b {
                            coef += C64::new(1.0, 0.0);
                        }
                        let blk = g.block((i * mk + a) * m, (j * mk + b) * m, m, m);
                        e = &e - &blk.scale(coef);
                    }
                }
            }
            residual = residual.max(e.frobenius_norm());
        }
    }

    let mut blocks: Vec<&CMatrix> = vec![&cert.gamma0];
    blocks.extend(cert.gammas.iter());
    if let Some(r) = &cert.r {
        blocks.push(r);
    }
    let mut min_eig_per_block = Vec::with_capacity(blocks.len());
    let mut hermitian_defect: f64 = 0.0;
    for b in blocks {
        hermitian_defect = hermitian_defect.max(b.hermitian_defect());
        let eig = hermitian_eig(&b.hermitian_part(), tol)?;
        min_eig_per_block.push(eig.min());
    }
    let min_eig = min_eig_per_block.iter().copied().fold(f64::INFINITY, f64::min);
    let verdict = residual.is_finite()
        && residual < tol.verify_residual
        && min_eig >= -tol.cert_min_eig
        && hermitian_defect < tol.verify_residual;
    Ok(VerifyReport {
        residual,
        min_eig_per_block,
        hermitian_defect,
        verdict,
    })
}

/// The classical Pick matrix `[(t² − w_i w̄_j) / (1 − z_i z̄_j)]`.
pub fn pick_matrix(points: &[C64], targets: &[C64], t: f64) -> Result<CMatrix> {
    if points.len() != targets.len() {
        return Err(Error::Dimension(format!(
            "{} points but {} targets",
            points.len(),
            targets.len()
        )));
    }
    for (i, z) in points.iter().enumerate() {
        if z.norm() >= 1.0 {
            return Err(Error::Domain {
                index: i,
                margin: 1.0 - z.norm(),
            });
        }
        for (j, w) in points.iter().enumerate().take(i) {
            if (z - w).norm() <= DUPLICATE_TOL {
                return Err(Error::Duplicate(j, i));
            }
        }
    }
    let n = points.len();
    let t2 = t * t;
    Ok(CMatrix::from_fn(n, n, |i, j| {
        (C64::new(t2, 0.0) - targets[i] * targets[j].conj())
            / (C64::new(1.0, 0.0) - points[i] * points[j].conj())
    }))
}

/// Disk interpolation at norm level `t`: true iff the Pick matrix is PSD up
/// to `−tol.pick·t²`.
pub fn classical_pick_test(points: &[C64], targets: &[C64], t: f64, tol: &Tolerances) -> Result<bool> {
    Ok(pick_min_eig(points, targets, t, tol)? >= -tol.pick * t * t)
}

/// Smallest eigenvalue of the Pick matrix.
pub fn pick_min_eig(points: &[C64], targets: &[C64], t: f64, tol: &Tolerances) -> Result<f64> {
    let pm = pick_matrix(points, targets, t)?;
    Ok(hermitian_eig(&pm, tol)?.min())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::{polydisk, preset, PresetParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn disk() -> Presentation {
        preset("disk", &PresetParams::default()).unwrap()
    }

    fn disk_problem(pts: &[C64], ws: &[C64]) -> InterpolationProblem {
        InterpolationProblem::new(
            disk(),
            pts.iter().map(|&z| vec![z]).collect(),
            ws.iter().map(|&w| CMatrix::scalar(w)).collect(),
            &tol(),
        )
        .unwrap()
    }

    fn solve(prob: &InterpolationProblem, eps: f64) -> Outcome {
        let lmi = build_lmi(prob, eps, &tol()).unwrap();
        solve_feasibility(&lmi, &SolverOptions::default(), &tol()).unwrap()
    }

    fn solve_with(prob: &InterpolationProblem, method: Method) -> Outcome {
        let lmi = build_lmi(prob, 0.0, &tol()).unwrap();
        let opts = SolverOptions {
            method,
            ..SolverOptions::default()
        };
        solve_feasibility(&lmi, &opts, &tol()).unwrap()
    }

    #[test]
    fn both_methods_on_small_cases() {
        for method in [Method::Barrier, Method::Projection] {
            assert!(solve_with(&disk_problem(&[c(0.0, 0.0)], &[c(0.5, 0.0)]), method).is_feasible());
            let zs = [c(0.0, 0.0), c(0.5, 0.0)];
            assert!(!solve_with(&disk_problem(&zs, &[c(0.0, 0.0), c(0.9, 0.0)]), method).is_feasible());
            assert!(solve_with(&disk_problem(&zs, &[c(0.0, 0.0), c(0.5, 0.0)]), method).is_feasible());
        }
    }

    #[test]
    fn random_disk_instances_match_pick() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let mut checked = 0;
        while checked < 40 {
            let l = rng.gen_range(1..=4);
            let zs: Vec<C64> = (0..l)
                .map(|_| C64::from_polar(0.95 * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect();
            let ws: Vec<C64> = (0..l)
                .map(|_| C64::from_polar(1.5 * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect();
            let lam = pick_min_eig(&zs, &ws, 1.0, &tol()).unwrap();
            if lam.abs() <= 1e-4 {
                continue;
            }
            checked += 1;
            let out = solve(&disk_problem(&zs, &ws), 0.0);
            assert_eq!(out.is_feasible(), lam > 0.0, "λ_min = {lam}");
        }
    }

    #[test]
    fn scaling_down_keeps_feasibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let p = polydisk(2).unwrap();
        let mut found = 0;
        while found < 5 {
            let pts: Vec<Vec<C64>> = (0..3)
                .map(|_| (0..2).map(|_| c(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6))).collect())
                .collect();
            let ws: Vec<CMatrix> = (0..3).map(|_| CMatrix::scalar(c(rng.gen_range(-0.8..0.8), 0.0))).collect();
            let prob = InterpolationProblem::new(p.clone(), pts, ws, &tol()).unwrap();
            if !solve(&prob, 0.0).is_feasible() {
                continue;
            }
            found += 1;
            for s in [0.0, 0.5, 0.9] {
                assert!(solve(&prob.scaled(s), 0.0).is_feasible(), "scale {s}");
            }
        }
    }

    #[test]
    fn strict_feasibility_implies_closed() {
        let zs = [c(0.1, 0.2), c(-0.4, 0.0), c(0.3, -0.5)];
        let ws = [c(0.2, 0.0), c(0.1, 0.3), c(-0.3, 0.0)];
        let prob = disk_problem(&zs, &ws);
        let strict = solve(&prob, 1e-6);
        assert!(strict.is_feasible());
        assert!(solve(&prob, 0.0).is_feasible());
        let rep = verify_certificate(&prob, strict.certificate(), &tol()).unwrap();
        assert!(rep.verdict);
    }

    #[test]
    fn two_constraint_certificates_verify() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for name in ["annulus", "disk_pow", "ball_row", "matrix_ball"] {
            let p = preset(name, &PresetParams::default()).unwrap();
            let pts = crate::presentation::sample_interior(&p, 3, 0.05, &mut rng, &tol());
            let ws: Vec<CMatrix> = (0..3).map(|i| CMatrix::scalar(c(0.1 * i as f64, 0.05))).collect();
            let prob = InterpolationProblem::new(p, pts, ws, &tol()).unwrap();
            let out = solve(&prob, 0.0);
            assert!(out.is_feasible(), "{name}");
            let rep = verify_certificate(&prob, out.certificate(), &tol()).unwrap();
            assert!(rep.verdict, "{name}: {rep:?}");
        }
    }

    #[test]
    fn single_point_structure() {
        let z = c(0.3, 0.4);
        let prob = disk_problem(&[z], &[c(0.5, 0.0)]);
        let lmi = build_lmi(&prob, 0.0, &tol()).unwrap();
        assert_eq!(lmi.delta().block(0, 0, 0)[(0, 0)], c(1.0 - z.norm_sqr(), 0.0));
        assert_eq!(lmi.target_block(0, 0)[(0, 0)], c(0.75, 0.0));
        assert_eq!(lmi.unknown_sizes(), vec![1, 1]);
        assert_eq!(lmi.real_constraints(), 1);
    }

    #[test]
    fn two_point_polydisk_counts() {
        let p = polydisk(2).unwrap();
        let prob = InterpolationProblem::new(
            p,
            vec![vec![c(0.1, 0.0), c(0.2, 0.0)], vec![c(-0.3, 0.1), c(0.0, 0.4)]],
            vec![CMatrix::scalar(c(0.2, 0.0)), CMatrix::scalar(c(0.1, 0.1))],
            &tol(),
        )
        .unwrap();
        let lmi = build_lmi(&prob, 0.0, &tol()).unwrap();
        assert_eq!(lmi.unknown_sizes(), vec![2, 2, 2]);
        assert_eq!(lmi.constraint_blocks(), 4);
        assert_eq!(lmi.real_constraints(), 4);
        // Hermitian symmetry of the assembled target and delta arrays is exact.
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(lmi.target_block(i, j).adjoint(), lmi.target_block(j, i));
                for k in 0..2 {
                    assert_eq!(lmi.delta().block(k, i, j).adjoint(), lmi.delta().block(k, j, i));
                }
            }
        }
    }

    #[test]
    fn matrix_target_shapes() {
        let w1 = CMatrix::from_real(2, 2, &[0.1, 0.2, 0.0, 0.3]);
        let w2 = CMatrix::from_real(2, 2, &[0.0, -0.2, 0.1, 0.1]);
        let prob = InterpolationProblem::new(
            disk(),
            vec![vec![c(0.1, 0.0)], vec![c(0.5, 0.2)]],
            vec![w1.clone(), w2.clone()],
            &tol(),
        )
        .unwrap();
        let lmi = build_lmi(&prob, 0.0, &tol()).unwrap();
        assert_eq!(lmi.unknown_sizes(), vec![4, 4]);
        let want = &CMatrix::identity(2) - &(&w1 * &w2.adjoint());
        assert_eq!(lmi.target_block(0, 1), want);
        let out = solve(&prob, 0.0);
        assert!(out.is_feasible());
        assert!(verify_certificate(&prob, out.certificate(), &tol()).unwrap().verdict);
    }

    #[test]
    fn single_point_feasible() {
        let prob = disk_problem(&[c(0.0, 0.0)], &[c(0.5, 0.0)]);
        let out = solve(&prob, 0.0);
        let cert = out.certificate();
        assert!(out.is_feasible());
        let rep = verify_certificate(&prob, cert, &tol()).unwrap();
        assert!(rep.verdict, "{rep:?}");
    }

    #[test]
    fn classical_two_point_infeasible() {
        let prob = disk_problem(&[c(0.0, 0.0), c(0.5, 0.0)], &[c(0.0, 0.0), c(0.9, 0.0)]);
        assert!(matches!(solve(&prob, 0.0), Outcome::Stalled { .. }));
    }

    #[test]
    fn identity_interpolant_feasible() {
        let prob = disk_problem(&[c(0.0, 0.0), c(0.5, 0.0)], &[c(0.0, 0.0), c(0.5, 0.0)]);
        let out = solve(&prob, 0.0);
        assert!(out.is_feasible(), "{out:?}");
    }

    #[test]
    fn hand_built_single_point_certificate() {
        let z = c(0.2, -0.6);
        let w = c(0.3, 0.3);
        let prob = disk_problem(&[z], &[w]);
        let gamma = (1.0 - w.norm_sqr()) / (1.0 - z.norm_sqr());
        let cert = Certificate {
            gamma0: CMatrix::zeros(1, 1),
            gammas: vec![CMatrix::scalar(c(gamma, 0.0))],
            r: None,
            residual: 0.0,
            min_eig: 0.0,
        };
        let rep = verify_certificate(&prob, &cert, &tol()).unwrap();
        assert!(rep.verdict);
        assert!(rep.residual < 1e-15);
    }

    #[test]
    fn perturbed_certificate_fails() {
        let prob = disk_problem(&[c(0.0, 0.0), c(0.3, 0.2)], &[c(0.1, 0.0), c(0.2, 0.1)]);
        let out = solve(&prob, 0.0);
        let mut cert = out.certificate().clone();
        cert.gammas[0][(1, 1)] += c(1e-3, 0.0);
        let rep = verify_certificate(&prob, &cert, &tol()).unwrap();
        assert!(!rep.verdict);
        assert!(rep.residual > 5e-4 && rep.residual < 2e-3, "{}", rep.residual);
    }

    #[test]
    fn verify_rejects_wrong_shapes() {
        let prob = disk_problem(&[c(0.0, 0.0)], &[c(0.5, 0.0)]);
        let cert = Certificate {
            gamma0: CMatrix::zeros(2, 2),
            gammas: vec![CMatrix::zeros(1, 1)],
            r: None,
            residual: 0.0,
            min_eig: 0.0,
        };
        assert!(matches!(
            verify_certificate(&prob, &cert, &tol()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn strict_version_carries_r() {
        let prob = disk_problem(&[c(0.0, 0.0), c(0.5, 0.0)], &[c(0.1, 0.0), c(0.2, 0.0)]);
        let out = solve(&prob, 1e-6);
        assert!(out.is_feasible());
        let cert = out.certificate();
        let r = cert.r.as_ref().expect("strict certificate has R");
        assert!(r[(0, 0)].re >= 1e-6 - 1e-12);
        assert!(verify_certificate(&prob, cert, &tol()).unwrap().verdict);
        assert!(solve(&prob, 0.0).is_feasible());
    }

    #[test]
    fn problem_validation() {
        let t = tol();
        let d = disk();
        let dup = InterpolationProblem::new(
            d.clone(),
            vec![vec![c(0.1, 0.0)], vec![c(0.1, 0.0)]],
            vec![CMatrix::scalar(ZERO); 2],
            &t,
        );
        assert!(matches!(dup, Err(Error::Duplicate(0, 1))));
        let out = InterpolationProblem::new(d.clone(), vec![vec![c(1.2, 0.0)]], vec![CMatrix::scalar(ZERO)], &t);
        assert!(matches!(out, Err(Error::Domain { index: 0, .. })));
        let mixed = InterpolationProblem::new(
            d,
            vec![vec![c(0.1, 0.0)], vec![c(0.2, 0.0)]],
            vec![CMatrix::scalar(ZERO), CMatrix::zeros(1, 2)],
            &t,
        );
        assert!(matches!(mixed, Err(Error::Dimension(_))));
    }

    #[test]
    fn pick_examples() {
        let t = tol();
        let pts = [c(0.0, 0.0), c(0.5, 0.0)];
        assert!(!classical_pick_test(&pts, &[c(0.0, 0.0), c(0.9, 0.0)], 1.0, &t).unwrap());
        // det [[1,1],[1,0.19/0.75]] = 0.19/0.75 − 1
        let pm = pick_matrix(&pts, &[c(0.0, 0.0), c(0.9, 0.0)], 1.0).unwrap();
        let det = (pm[(0, 0)] * pm[(1, 1)] - pm[(0, 1)] * pm[(1, 0)]).re;
        assert!((det - (0.19 / 0.75 - 1.0)).abs() < 1e-14);
        assert!((det + 0.7467).abs() < 1e-4);
        assert!(classical_pick_test(&pts, &[c(0.0, 0.0), c(0.5, 0.0)], 1.0, &t).unwrap());
        assert!(matches!(
            classical_pick_test(&[c(0.1, 0.0), c(0.1, 0.0)], &[ZERO, ZERO], 1.0, &t),
            Err(Error::Duplicate(0, 1))
        ));
    }

    #[test]
    fn pick_zero_targets_always_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let pts: Vec<C64> = (0..4)
                .map(|_| C64::from_polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect();
            assert!(classical_pick_test(&pts, &[ZERO; 4], 1.0, &tol()).unwrap());
        }
    }

    #[test]
    fn certificate_factor_reproduces_gram() {
        let prob = disk_problem(&[c(0.0, 0.0), c(0.4, 0.1), c(-0.2, 0.5)], &[c(0.1, 0.0), c(0.3, 0.0), c(0.0, 0.2)]);
        let out = solve(&prob, 0.0);
        let cert = out.certificate();
        let v = cert.factor(0, &tol()).unwrap();
        let back = &v * &v.adjoint();
        assert!((&back - &cert.gammas[0]).frobenius_norm() < 1e-7);
    }

    #[test]
    fn vectorization_is_isometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = CMatrix::from_fn(4, 4, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .hermitian_part();
        let mut v = vec![0.0; 16];
        herm_to_vec(&a, &mut v);
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - a.frobenius_norm()).abs() < 1e-14);
        assert!((&herm_from_vec(&v, 4) - &a).frobenius_norm() < 1e-15);
    }
}
