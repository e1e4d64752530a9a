//! Log-barrier path following for the feasibility problem.
//!
//! `Γ_0` is eliminated through the identity, leaving the Hermitian unknowns
//! `Γ_1…Γ_K` and a scalar `λ`. The method maximizes `λ` subject to
//!
//! ```text
//! Γ_k − λI ⪰ 0,    S − R − L(Γ) − λI ⪰ 0,
//! ```
//!
//! so the problem is strictly feasible iff the optimum `λ*` is positive. Any
//! iterate with `λ > 0` is already an exact certificate. Along the central
//! path `λ* ≤ λ + ν/τ`, which is what certifies the infeasible side.

use super::{Certificate, Lmi, Outcome, SolverOptions, Unknowns};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, psd_project, CMatrix, HpdCholesky, RealCholesky, C64, ZERO};

const I: C64 = C64::new(0.0, 1.0);
/// Newton steps allowed per barrier weight before moving on.
const MAX_CENTERING: usize = 60;
/// Below this damping the iterate is treated as centered; smaller accepted
/// steps only trade roundoff.
const MIN_STEP: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
struct Entry {
    block: usize,
    row: usize,
    col: usize,
    coef: C64,
}

/// Sparse images of the real coordinates of `Γ_1…Γ_K` in every barrier
/// block. Block 0 is `S − R − L(Γ)`, block `k+1` is `Γ_k`. `λ` is handled
/// separately since it touches every diagonal.
struct Layout {
    sizes: Vec<usize>,
    vars: Vec<Vec<Entry>>,
    offsets: Vec<usize>,
    base: CMatrix,
}

impl Layout {
    fn new(lmi: &Lmi) -> Self {
        let (l, m) = (lmi.points, lmi.m);
        let mut sizes = vec![l * m];
        let mut vars = Vec::new();
        let mut offsets = Vec::new();
        for k in 0..lmi.delta.len() {
            let mk = lmi.delta.size(k);
            let dk = lmi.delta.matrix(k);
            let n = l * mk * m;
            sizes.push(n);
            offsets.push(vars.len());
            // Row r of Γ_k is (point i, factor row a, target row c).
            let split = |r: usize| (r / (mk * m), (r / m) % mk, r % m);
            let image = |r: usize, s: usize, coef: C64, out: &mut Vec<Entry>| {
                out.push(Entry {
                    block: k + 1,
                    row: r,
                    col: s,
                    coef,
                });
                let (i, a, c) = split(r);
                let (j, b, d) = split(s);
                let delta = dk[(i * mk + a, j * mk + b)];
                if delta != ZERO {
                    out.push(Entry {
                        block: 0,
                        row: i * m + c,
                        col: j * m + d,
                        coef: -coef * delta,
                    });
                }
            };
            for r in 0..n {
                let mut e = Vec::new();
                image(r, r, C64::new(1.0, 0.0), &mut e);
                vars.push(e);
            }
            for r in 0..n {
                for s in (r + 1)..n {
                    let mut re = Vec::new();
                    image(r, s, C64::new(1.0, 0.0), &mut re);
                    image(s, r, C64::new(1.0, 0.0), &mut re);
                    vars.push(re);
                    let mut im = Vec::new();
                    image(r, s, I, &mut im);
                    image(s, r, -I, &mut im);
                    vars.push(im);
                }
            }
        }
        let mut base = lmi.target.clone();
        if lmi.strict_eps > 0.0 {
            for i in 0..l {
                for j in 0..l {
                    for c in 0..m {
                        base[(i * m + c, j * m + c)] -= C64::new(lmi.strict_eps, 0.0);
                    }
                }
            }
        }
        Self {
            sizes,
            vars,
            offsets,
            base,
        }
    }

    /// Number of real unknowns including `λ`.
    fn len(&self) -> usize {
        self.vars.len() + 1
    }

    fn nu(&self) -> f64 {
        self.sizes.iter().sum::<usize>() as f64
    }

    fn gammas(&self, v: &[f64]) -> Vec<CMatrix> {
        self.offsets
            .iter()
            .enumerate()
            .map(|(k, &off)| {
                let n = self.sizes[k + 1];
                let mut g = CMatrix::zeros(n, n);
                for r in 0..n {
                    g[(r, r)] = C64::new(v[off + r], 0.0);
                }
                let mut t = off + n;
                for r in 0..n {
                    for s in (r + 1)..n {
                        let z = C64::new(v[t], v[t + 1]);
                        g[(r, s)] = z;
                        g[(s, r)] = z.conj();
                        t += 2;
                    }
                }
                g
            })
            .collect()
    }

    fn blocks(&self, lmi: &Lmi, v: &[f64]) -> Vec<CMatrix> {
        let lambda = v[v.len() - 1];
        let gammas = self.gammas(v);
        let n0 = self.sizes[0];
        let lin = lmi.apply(&Unknowns {
            gamma0: CMatrix::zeros(n0, n0),
            gammas: gammas.clone(),
            r: None,
        });
        let mut out = Vec::with_capacity(self.sizes.len());
        out.push(shift(&(&self.base - &lin), -lambda));
        out.extend(gammas.iter().map(|g| shift(g, -lambda)));
        out
    }
}

fn shift(a: &CMatrix, s: f64) -> CMatrix {
    let mut out = a.clone();
    for i in 0..a.rows() {
        out[(i, i)] += C64::new(s, 0.0);
    }
    out
}

struct Point {
    value: f64,
    inverses: Vec<CMatrix>,
}

fn evaluate(layout: &Layout, lmi: &Lmi, v: &[f64], tau: f64) -> Option<Point> {
    let mut value = -tau * v[v.len() - 1];
    let mut inverses = Vec::with_capacity(layout.sizes.len());
    for b in layout.blocks(lmi, v) {
        let ch = HpdCholesky::factor(&b)?;
        value -= ch.log_det();
        inverses.push(ch.inverse());
    }
    Some(Point { value, inverses })
}

/// Newton direction and decrement for `−τλ − Σ log det B_j`.
fn newton(layout: &Layout, pt: &Point, tau: f64) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let p = layout.len();
    let lam = p - 1;
    let x = &pt.inverses;
    let x2: Vec<CMatrix> = x.iter().map(|m| m * m).collect();

    let mut grad = vec![0.0; p];
    for (t, entries) in layout.vars.iter().enumerate() {
        grad[t] = -entries.iter().map(|e| (e.coef * x[e.block][(e.col, e.row)]).re).sum::<f64>();
    }
    grad[lam] = -tau + x.iter().map(|m| m.trace().re).sum::<f64>();

    let mut h = vec![0.0; p * p];
    for t in 0..layout.vars.len() {
        for u in t..layout.vars.len() {
            let mut s = 0.0;
            for e in &layout.vars[t] {
                for f in &layout.vars[u] {
                    if e.block == f.block {
                        let xb = &x[e.block];
                        s += (e.coef * f.coef * xb[(e.col, f.row)] * xb[(f.col, e.row)]).re;
                    }
                }
            }
            h[t * p + u] = s;
            h[u * p + t] = s;
        }
        let s: f64 = -layout.vars[t]
            .iter()
            .map(|e| (e.coef * x2[e.block][(e.col, e.row)]).re)
            .sum::<f64>();
        h[t * p + lam] = s;
        h[lam * p + t] = s;
    }
    h[lam * p + lam] = x.iter().map(|m| m.frobenius_norm().powi(2)).sum();

    let scale = (0..p).map(|i| h[i * p + i]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut reg = 0.0;
    let chol = loop {
        if let Some(c) = RealCholesky::factor(&h, p) {
            break c;
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
        if reg > 1e-2 * scale {
            return None;
        }
        for i in 0..p {
            h[i * p + i] += reg;
        }
    };
    let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
    chol.solve_in_place(&mut dir);
    let dec2 = -grad.iter().zip(&dir).map(|(g, d)| g * d).sum::<f64>();
    Some((grad, dir, dec2))
}

fn certificate(layout: &Layout, lmi: &Lmi, v: &[f64], tol: &Tolerances) -> Result<Certificate> {
    let gammas = layout
        .gammas(v)
        .iter()
        .map(|g| psd_project(g, tol))
        .collect::<Result<Vec<_>>>()?;
    let n0 = layout.sizes[0];
    let x = Unknowns {
        gamma0: CMatrix::zeros(n0, n0),
        gammas,
        r: (lmi.strict_eps > 0.0).then(|| CMatrix::zeros(lmi.m, lmi.m)),
    };
    lmi.certify(x, tol)
}

pub(super) fn solve(lmi: &Lmi, opts: &SolverOptions, tol: &Tolerances) -> Result<Outcome> {
    let layout = Layout::new(lmi);
    let p = layout.len();
    let nu = layout.nu();
    let mut v = vec![0.0; p];
    v[p - 1] = min_eigenvalue(&layout.base, tol)?.min(0.0) - 1.0;

    let mut tau = 1.0;
    let mut iterations = 0;
    loop {
        // Centering.
        for _ in 0..MAX_CENTERING {
            if iterations >= opts.max_iter {
                let best = certificate(&layout, lmi, &v, tol)?;
                return Err(Error::Inconclusive {
                    iterations,
                    residual: best.residual,
                });
            }
            let pt = evaluate(&layout, lmi, &v, tau).ok_or_else(|| Error::Spectrum("barrier iterate left the cone".into()))?;
            let Some((grad, dir, dec2)) = newton(&layout, &pt, tau) else {
                break;
            };
            if dec2 / 2.0 <= 1e-10 {
                break;
            }
            iterations += 1;
            let slope = grad.iter().zip(&dir).map(|(g, d)| g * d).sum::<f64>();
            let mut step = 1.0;
            let mut moved = false;
            while step > MIN_STEP {
                let trial: Vec<f64> = v.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
                if let Some(q) = evaluate(&layout, lmi, &trial, tau) {
                    if q.value <= pt.value + 0.25 * step * slope {
                        v = trial;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if v[p - 1] > 0.0 {
                let certificate = certificate(&layout, lmi, &v, tol)?;
                return Ok(Outcome::Feasible {
                    certificate,
                    iterations,
                });
            }
            if !moved {
                break;
            }
        }

        let lambda = v[p - 1];
        let slack = nu / tau;
        let infeasible = lambda + slack < -opts.tol_stall;
        if infeasible || slack < opts.tol_stall {
            let best = certificate(&layout, lmi, &v, tol)?;
            if !infeasible && best.residual < opts.tol_feas && best.min_eig >= -tol.cert_min_eig {
                return Ok(Outcome::Feasible {
                    certificate: best,
                    iterations,
                });
            }
            return Ok(Outcome::Stalled {
                gap: best.residual,
                best,
                iterations,
            });
        }
        tau *= 10.0;
    }
}
