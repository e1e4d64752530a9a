//! Quotient norms by bisection over interpolation feasibility, and a
//! from-below estimate of the Schur–Agler norm over finite point sets.
//!
//! The quotient norm at `Y` is the least `t` for which the targets `W/t` admit
//! a certificate. The estimate takes the largest quotient norm found over a
//! family of sampled subsets; it never claims an upper bound for the norm
//! itself, only for each subset it visits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{op_norm, CMatrix, C64};
use crate::pick::{build_lmi, solve_feasibility, Certificate, InterpolationProblem, Outcome, SolverOptions};
use crate::poly::RationalMatrix;
use crate::presentation::{sample_interior, sampling_box, Presentation};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormOptions {
    /// Absolute width of the final bracket.
    pub tol: f64,
    pub solver: SolverOptions,
    /// How many times the upper end may double before giving up.
    pub max_doublings: usize,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            solver: SolverOptions::default(),
            max_doublings: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormResult {
    pub lower: f64,
    pub upper: f64,
    pub witness: Vec<Vec<C64>>,
    /// Certificate for the targets divided by `upper`.
    pub certificate: Certificate,
    /// Solver iterations summed over every level tried.
    pub iterations: usize,
    /// Levels that ended in a stall and were counted as infeasible.
    pub stalled: usize,
    /// Levels that hit the iteration cap and were counted as infeasible.
    pub inconclusive: usize,
}

enum Level {
    Feasible(Certificate),
    Infeasible,
    Inconclusive(f64),
}

struct Counters {
    iterations: usize,
    stalled: usize,
    inconclusive: usize,
}

fn level(prob: &InterpolationProblem, t: f64, opts: &NormOptions, tol: &Tolerances, c: &mut Counters) -> Result<Level> {
    let lmi = build_lmi(&prob.scaled(1.0 / t), 0.0, tol)?;
    match solve_feasibility(&lmi, &opts.solver, tol) {
        Ok(Outcome::Feasible { certificate, iterations }) => {
            c.iterations += iterations;
            Ok(Level::Feasible(certificate))
        }
        Ok(Outcome::Stalled { iterations, .. }) => {
            c.iterations += iterations;
            c.stalled += 1;
            Ok(Level::Infeasible)
        }
        Err(Error::Inconclusive { iterations, residual }) => {
            c.iterations += iterations;
            c.inconclusive += 1;
            Ok(Level::Inconclusive(residual))
        }
        Err(e) => Err(e),
    }
}

/// Least `t` (to within `opts.tol`) such that the points can be interpolated
/// with the targets scaled by `1/t`.
pub fn quotient_norm(
    presentation: &Presentation,
    points: &[Vec<C64>],
    targets: &[CMatrix],
    opts: &NormOptions,
    tol: &Tolerances,
) -> Result<NormResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::Parameter(format!("bisection tolerance must be positive, got {}", opts.tol)));
    }
    let prob = InterpolationProblem::new(presentation.clone(), points.to_vec(), targets.to_vec(), tol)?;
    quotient_norm_problem(&prob, opts, tol)
}

/// [`quotient_norm`] on an already validated problem.
pub fn quotient_norm_problem(prob: &InterpolationProblem, opts: &NormOptions, tol: &Tolerances) -> Result<NormResult> {
    let mut c = Counters {
        iterations: 0,
        stalled: 0,
        inconclusive: 0,
    };
    let finish = |lower: f64, upper: f64, certificate: Certificate, c: Counters| NormResult {
        lower,
        upper,
        witness: prob.points().to_vec(),
        certificate,
        iterations: c.iterations,
        stalled: c.stalled,
        inconclusive: c.inconclusive,
    };

    let lo0 = prob.targets().iter().map(op_norm).fold(0.0, f64::max);
    if lo0 == 0.0 {
        // Zero targets are interpolable at every level.
        return match level(prob, 1.0, opts, tol, &mut c)? {
            Level::Feasible(cert) => Ok(finish(0.0, 0.0, cert, c)),
            _ => Err(Error::Inconclusive {
                iterations: c.iterations,
                residual: f64::NAN,
            }),
        };
    }
    if let Level::Feasible(cert) = level(prob, lo0, opts, tol, &mut c)? {
        return Ok(finish(lo0, lo0, cert, c));
    }

    let mut lo = lo0;
    let mut hi = 2.0 * lo0;
    let mut cert = None;
    let mut last_residual = f64::INFINITY;
    for _ in 0..opts.max_doublings {
        match level(prob, hi, opts, tol, &mut c)? {
            Level::Feasible(found) => {
                cert = Some(found);
                break;
            }
            Level::Infeasible => lo = hi,
            Level::Inconclusive(r) => {
                last_residual = r;
                lo = hi;
            }
        }
        hi *= 2.0;
    }
    let Some(mut cert) = cert else {
        return Err(Error::Inconclusive {
            iterations: c.iterations,
            residual: last_residual,
        });
    };

    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        match level(prob, mid, opts, tol, &mut c)? {
            Level::Feasible(found) => {
                hi = mid;
                cert = found;
            }
            Level::Infeasible | Level::Inconclusive(_) => lo = mid,
        }
    }
    Ok(finish(lo, hi, cert, c))
}

/// Where the estimate draws its candidate points from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Sampler {
    /// `count` uniform draws from the sampling box, kept if inside.
    Random { count: usize, seed: u64 },
    /// A lattice with `per_axis` nodes along each real coordinate.
    Grid { per_axis: usize },
    /// Explicit points.
    Points { points: Vec<Vec<C64>> },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateOptions {
    /// Largest subset size visited.
    pub ell_max: usize,
    /// Minimum domain margin of sampled points.
    pub floor: f64,
    pub norm: NormOptions,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            ell_max: 5,
            floor: 0.02,
            norm: NormOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    /// Quotient norm at the maximizing subset.
    pub result: NormResult,
    pub samples: Vec<Vec<C64>>,
    pub subsets: usize,
}

impl Estimate {
    /// The reported lower estimate.
    pub fn value(&self) -> f64 {
        self.result.lower
    }
}

fn grid_points(p: &Presentation, per_axis: usize, floor: f64, tol: &Tolerances) -> Vec<Vec<C64>> {
    let (lo, hi) = sampling_box(p);
    let axes = 2 * p.dim();
    let per_axis = per_axis.max(1);
    let node = |i: usize| {
        if per_axis == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (per_axis - 1) as f64
        }
    };
    let total = per_axis.pow(axes as u32);
    let mut out = Vec::new();
    for mut flat in 0..total {
        let mut coords = Vec::with_capacity(axes);
        for _ in 0..axes {
            coords.push(node(flat % per_axis));
            flat /= per_axis;
        }
        let z: Vec<C64> = coords.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
        if matches!(p.in_domain(&z, tol), Ok(m) if m.margin >= floor) {
            out.push(z);
        }
    }
    out
}

fn draw(p: &Presentation, sampler: &Sampler, floor: f64, tol: &Tolerances) -> Result<Vec<Vec<C64>>> {
    Ok(match sampler {
        Sampler::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            sample_interior(p, *count, floor, &mut rng, tol)
        }
        Sampler::Grid { per_axis } => grid_points(p, *per_axis, floor, tol),
        Sampler::Points { points } => {
            for (index, z) in points.iter().enumerate() {
                let m = p.in_domain(z, tol)?;
                if !m.inside {
                    return Err(Error::Domain { index, margin: m.margin });
                }
            }
            points.clone()
        }
    })
}

/// Index of the largest `lower`, lowest index on ties.
fn argmax(results: &[NormResult]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in results.iter().enumerate() {
        if best.is_none_or(|b| r.lower > results[b].lower) {
            best = Some(i);
        }
    }
    best
}

/// Lower estimate of the Schur–Agler norm of a polynomial `f`: every sampled
/// singleton, then greedy one-point growth of the best subset up to
/// `ell_max` points. Exact only in the limit of enumerating all subsets.
pub fn schur_agler_norm_estimate(
    f: &RationalMatrix,
    p: &Presentation,
    sampler: &Sampler,
    opts: &EstimateOptions,
    tol: &Tolerances,
) -> Result<Estimate> {
    if !f.is_polynomial() {
        return Err(Error::Parameter("the estimate needs polynomial entries".into()));
    }
    if f.dim() != p.dim() {
        return Err(Error::Dimension(format!(
            "function in {} variables, domain in C^{}",
            f.dim(),
            p.dim()
        )));
    }
    let samples = draw(p, sampler, opts.floor, tol)?;
    if samples.is_empty() {
        return Err(Error::Parameter("no sample points with the requested margin".into()));
    }
    let values: Vec<CMatrix> = samples.iter().map(|z| f.eval(z, tol)).collect::<Result<_>>()?;

    let singles: Vec<NormResult> = (0..samples.len())
        .into_par_iter()
        .map(|i| quotient_norm(p, &samples[i..=i], &values[i..=i], &opts.norm, tol))
        .collect::<Result<_>>()?;
    let mut subsets = singles.len();
    let first = argmax(&singles).expect("nonempty");
    let mut chosen = vec![first];
    let mut best = singles[first].clone();

    while chosen.len() < opts.ell_max.min(samples.len()) {
        let candidates: Vec<usize> = (0..samples.len()).filter(|i| !chosen.contains(i)).collect();
        let grown: Vec<NormResult> = candidates
            .par_iter()
            .map(|&c| {
                let idx: Vec<usize> = chosen.iter().copied().chain([c]).collect();
                let pts: Vec<Vec<C64>> = idx.iter().map(|&i| samples[i].clone()).collect();
                let tg: Vec<CMatrix> = idx.iter().map(|&i| values[i].clone()).collect();
                quotient_norm(p, &pts, &tg, &opts.norm, tol)
            })
            .collect::<Result<_>>()?;
        subsets += grown.len();
        let k = argmax(&grown).expect("nonempty");
        chosen.push(candidates[k]);
        if grown[k].lower > best.lower {
            best = grown[k].clone();
        }
    }
    Ok(Estimate {
        result: best,
        samples,
        subsets,
    })
}

/// Largest `‖f(z)‖` over the samples; never exceeds the Schur–Agler norm.
pub fn sup_norm_lower(f: &RationalMatrix, samples: &[Vec<C64>], tol: &Tolerances) -> Result<f64> {
    samples
        .iter()
        .map(|z| f.eval(z, tol).map(|v| op_norm(&v)))
        .try_fold(0.0_f64, |acc, v| v.map(|v| acc.max(v)))
}
