//! Lower bounds on the Schur–Agler norm from finite-dimensional admissible
//! tuples. The search runs over similarities `S`: the idempotents
//! `E_i = S P_i S⁻¹` give the tuple `T_j = Σ_i y_{i,j} E_i` with spectrum `Y`,
//! and only tuples with every `‖F_k(T)‖ ≤ 1` are ever scored.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::idempotent::{quotient_rep_seeded, random_similarity, KIdempotentAlgebra, QuotientRep};
use crate::linalg::{condition_number, op_norm, CMatrix, C64};
use crate::poly::{check_commuting, RationalMatrix};
use crate::presentation::Presentation;

/// Where a tuple came from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Provenance {
    /// The joint spectrum it was built on.
    pub points: Vec<Vec<C64>>,
    pub seed: Option<u64>,
    pub restart: Option<usize>,
}

/// A commuting tuple with `1 − ‖F_k(T)‖` for each `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibleTuple {
    pub matrices: Vec<CMatrix>,
    pub margins: Vec<f64>,
    pub provenance: Provenance,
}

impl AdmissibleTuple {
    /// Checks commutativity and margins of user supplied matrices.
    pub fn from_matrices(p: &Presentation, matrices: Vec<CMatrix>, tol: &Tolerances) -> Result<Self> {
        let margins = checked_margins(p, &matrices, tol)?;
        Ok(Self {
            matrices,
            margins,
            provenance: Provenance::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrices.first().map_or(0, |t| t.rows())
    }
}

fn checked_margins(p: &Presentation, t: &[CMatrix], tol: &Tolerances) -> Result<Vec<f64>> {
    if t.len() != p.dim() {
        return Err(Error::Dimension(format!("{} matrices for a domain in C^{}", t.len(), p.dim())));
    }
    check_commuting(t, tol)?;
    let margins = p.tuple_margins(t, tol)?;
    if let Some((k, &margin)) = margins.iter().enumerate().find(|(_, &m)| m < -tol.admissible_margin) {
        return Err(Error::Admissibility { k, margin });
    }
    Ok(margins)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub margins: Vec<f64>,
}

/// `‖f(T)‖` with the tuple's admissibility recomputed from scratch.
pub fn evaluate_admissible(
    f: &RationalMatrix,
    p: &Presentation,
    t: &AdmissibleTuple,
    tol: &Tolerances,
) -> Result<Evaluation> {
    let margins = checked_margins(p, &t.matrices, tol)?;
    let value = op_norm(&f.eval_on_tuple(&t.matrices, tol)?);
    Ok(Evaluation { value, margins })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    pub restarts: usize,
    pub steps: usize,
    pub seed: u64,
    /// Initial perturbation size relative to `‖S‖_F`.
    pub step: f64,
    /// Factor applied to the step after every proposal.
    pub step_decay: f64,
    /// Largest `|Y|` accepted.
    pub d_cap: usize,
    /// Condition number bound for the random starting similarities.
    pub start_cond: f64,
    /// Proposals with a worse conditioned similarity are rejected.
    pub max_cond: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            steps: 200,
            seed: 0,
            step: 0.5,
            step_decay: 0.98,
            d_cap: 6,
            start_cond: 4.0,
            max_cond: 1e4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub value: f64,
    pub best: AdmissibleTuple,
    /// Best value reached by each restart, in order.
    pub restart_values: Vec<f64>,
}

struct Scorer<'a> {
    f: &'a RationalMatrix,
    p: &'a Presentation,
    points: &'a [Vec<C64>],
    tol: &'a Tolerances,
    seed: u64,
}

impl Scorer<'_> {
    fn score(&self, s: &CMatrix, restart: usize) -> Result<Option<(f64, AdmissibleTuple)>> {
        let k = self.points.len();
        let alg = match KIdempotentAlgebra::from_similarity(s, &(0..k).collect::<Vec<_>>(), k) {
            Ok(a) => a,
            Err(Error::Parameter(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let rep = match quotient_rep_seeded(self.p, self.points, &alg, Some(self.seed), Some(restart), self.tol) {
            Ok(r) => r,
            // Badly conditioned proposals can lose commutativity in floating point.
            Err(Error::Commutativity { .. }) | Err(Error::Pole { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let QuotientRep::Admissible(tuple) = rep else {
            return Ok(None);
        };
        let value = match self.f.eval_on_tuple(&tuple.matrices, self.tol) {
            Ok(v) => op_norm(&v),
            Err(Error::Commutativity { .. }) | Err(Error::Pole { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        Ok(Some((value, tuple)))
    }

    fn restart(&self, r: usize, opts: &SearchOptions) -> Result<(f64, AdmissibleTuple)> {
        let d = self.points.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(r as u64);
        let identity = CMatrix::identity(d);
        let fallback = || {
            self.score(&identity, r)?
                .ok_or_else(|| Error::Spectrum("orthogonal idempotents produced an inadmissible tuple".into()))
        };
        let (mut s, (mut value, mut best)) = if r == 0 {
            (identity.clone(), fallback()?)
        } else {
            let s0 = random_similarity(&mut rng, d, opts.start_cond)?;
            match self.score(&s0, r)? {
                Some(v) => (s0, v),
                None => (identity.clone(), fallback()?),
            }
        };
        let mut step = opts.step;
        for _ in 0..opts.steps {
            let g = CMatrix::from_fn(d, d, |_, _| {
                C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
            });
            let scale = step * s.frobenius_norm() / g.frobenius_norm().max(1e-300);
            let proposal = &s + &g.scale_real(scale);
            step *= opts.step_decay;
            if !(condition_number(&proposal) <= opts.max_cond) {
                continue;
            }
            if let Some((v, t)) = self.score(&proposal, r)? {
                if v > value {
                    value = v;
                    best = t;
                    s = proposal;
                }
            }
        }
        Ok((value, best))
    }
}

/// Best `‖f(T)‖` found over admissible tuples with joint spectrum `Y`.
/// Restart 0 starts at orthogonal idempotents, so the result is never below
/// `max_i ‖f(y_i)‖`. Restart `r` draws from stream `r` of the seed, so a
/// larger restart count searches a superset.
pub fn lower_bound(
    f: &RationalMatrix,
    p: &Presentation,
    points: &[Vec<C64>],
    opts: &SearchOptions,
    tol: &Tolerances,
) -> Result<SearchResult> {
    if points.is_empty() {
        return Err(Error::Parameter("at least one point is required".into()));
    }
    if points.len() > opts.d_cap {
        return Err(Error::Parameter(format!(
            "{} points exceed the dimension cap {}",
            points.len(),
            opts.d_cap
        )));
    }
    if f.dim() != p.dim() {
        return Err(Error::Dimension(format!("function in {} variables, domain in C^{}", f.dim(), p.dim())));
    }
    for (index, z) in points.iter().enumerate() {
        let m = p.in_domain(z, tol)?;
        if !m.inside {
            return Err(Error::Domain { index, margin: m.margin });
        }
    }
    let scorer = Scorer {
        f,
        p,
        points,
        tol,
        seed: opts.seed,
    };
    let runs: Vec<(f64, AdmissibleTuple)> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| scorer.restart(r, opts))
        .collect::<Result<_>>()?;
    let mut pick = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.0 > runs[pick].0 {
            pick = i;
        }
    }
    let restart_values = runs.iter().map(|r| r.0).collect();
    let (value, best) = runs.into_iter().nth(pick).expect("at least one restart");
    Ok(SearchResult {
        value,
        best,
        restart_values,
    })
}
