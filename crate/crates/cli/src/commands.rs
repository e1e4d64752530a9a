use std::path::Path;

use agpk_core::idempotent::{algebra_norm, multiplier_norm_matrix, random_idempotents, KIdempotentAlgebra};
use agpk_core::json::{
    self, algebra_from_json, CertificateJson, ComplexMatrixJson, LowerBoundJson, NormResultJson, ProblemFile,
    TargetJson,
};
use agpk_core::norm::{quotient_norm, schur_agler_norm_estimate, sup_norm_lower, EstimateOptions, NormOptions, Sampler};
use agpk_core::pick::{build_lmi, pick_min_eig, solve_feasibility, verify_certificate, Outcome, SolverOptions};
use agpk_core::repsearch::{lower_bound, SearchOptions};
use agpk_core::{CMatrix, Error, Tolerances, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, FEASIBLE, INCONCLUSIVE, INFEASIBLE};

/// Flags shared by every command.
#[derive(Clone, Debug, Default)]
pub struct Global {
    pub tol: Option<f64>,
    pub seed: u64,
    pub max_iter: Option<usize>,
    pub json_indent: Option<usize>,
}

impl Global {
    fn solver(&self, tol_feas: Option<f64>) -> SolverOptions {
        let mut s = SolverOptions::default();
        if let Some(t) = tol_feas {
            s.tol_feas = t;
        }
        if let Some(m) = self.max_iter {
            s.max_iter = m;
        }
        s
    }

    fn norm(&self) -> NormOptions {
        NormOptions {
            tol: self.tol.unwrap_or(NormOptions::default().tol),
            solver: self.solver(None),
            ..NormOptions::default()
        }
    }

    fn emit<T: Serialize>(&self, value: &T) -> String {
        json::to_string(value, self.json_indent)
    }
}

/// Everything a command produces: stdout body, exit code and an optional
/// diagnostic line for stderr.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub body: String,
    pub code: u8,
    pub note: Option<String>,
}

impl Output {
    fn ok(body: String) -> Self {
        Self {
            body,
            code: FEASIBLE,
            note: None,
        }
    }
}

pub fn read_input(path: &Path) -> Result<String, CliError> {
    let res = if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin())
    } else {
        std::fs::read_to_string(path)
    };
    res.map_err(|e| CliError::new(crate::error::UNREADABLE, format!("{}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = read_input(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::json(&path.display().to_string(), &e))
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

#[derive(Serialize)]
struct CertifyReport {
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<CertificateJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
    iterations: usize,
    strict_eps: f64,
    seed: u64,
}

pub fn certify(g: &Global, path: &Path, strict_eps: Option<f64>) -> Result<Output, CliError> {
    let tol = Tolerances::default();
    let pf: ProblemFile = parse(path)?;
    let eps = strict_eps.or(pf.params.strict_eps).unwrap_or(0.0);
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(CliError::invalid(format!("strict_eps must be nonnegative, got {eps}")));
    }
    let prob = pf.interpolation(1.0, &tol)?;
    let lmi = build_lmi(&prob, eps, &tol)?;
    let base = CertifyReport {
        status: "",
        certificate: None,
        gap: None,
        residual: None,
        iterations: 0,
        strict_eps: eps,
        seed: g.seed,
    };
    match solve_feasibility(&lmi, &g.solver(g.tol), &tol) {
        Ok(Outcome::Feasible { certificate, iterations }) => Ok(Output::ok(g.emit(&CertifyReport {
            status: "feasible",
            certificate: Some(CertificateJson::new(&certificate, 1.0)),
            iterations,
            ..base
        }))),
        Ok(Outcome::Stalled { gap, iterations, .. }) => Ok(Output {
            body: g.emit(&CertifyReport {
                status: "infeasible",
                gap: Some(gap),
                iterations,
                ..base
            }),
            code: INFEASIBLE,
            note: Some(format!("infeasible (numerical, gap={gap:.6e})")),
        }),
        Err(Error::Inconclusive { iterations, residual }) => Ok(Output {
            body: g.emit(&CertifyReport {
                status: "inconclusive",
                residual: Some(residual),
                iterations,
                ..base
            }),
            code: INCONCLUSIVE,
            note: Some(format!(
                "inconclusive after {iterations} iterations (best residual {residual:.6e})"
            )),
        }),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct NormReport {
    #[serde(flatten)]
    result: NormResultJson,
    tol: f64,
    seed: u64,
}

pub fn norm(g: &Global, path: &Path) -> Result<Output, CliError> {
    let tol = Tolerances::default();
    let pf: ProblemFile = parse(path)?;
    let p = pf.presentation()?;
    let targets = pf.targets(&p, &tol)?;
    let opts = g.norm();
    positive("--tol", opts.tol)?;
    let r = quotient_norm(&p, &pf.points(), &targets, &opts, &tol)?;
    Ok(Output::ok(g.emit(&NormReport {
        result: (&r).into(),
        tol: opts.tol,
        seed: g.seed,
    })))
}

#[derive(Serialize)]
struct EstimateReport {
    value: f64,
    lower: f64,
    upper: f64,
    witness: Vec<Vec<[f64; 2]>>,
    sup_sampled: f64,
    subsets: usize,
    samples: Vec<Vec<[f64; 2]>>,
    ell_max: usize,
    tol: f64,
    seed: u64,
}

pub const DEFAULT_SAMPLES: usize = 64;

pub fn estimate(g: &Global, path: &Path) -> Result<Output, CliError> {
    let tol = Tolerances::default();
    let pf: ProblemFile = parse(path)?;
    let p = pf.presentation()?;
    let f = pf.function(p.dim())?;
    let sampler = pf.params.sampler.clone().unwrap_or(Sampler::Random {
        count: DEFAULT_SAMPLES,
        seed: g.seed,
    });
    let mut opts = EstimateOptions {
        norm: g.norm(),
        ..EstimateOptions::default()
    };
    positive("--tol", opts.norm.tol)?;
    if let Some(l) = pf.params.ell_max {
        opts.ell_max = l;
    }
    if let Some(fl) = pf.params.floor {
        opts.floor = fl;
    }
    let est = schur_agler_norm_estimate(&f, &p, &sampler, &opts, &tol)?;
    let sup = sup_norm_lower(&f, &est.samples, &tol)?;
    Ok(Output::ok(g.emit(&EstimateReport {
        value: est.value(),
        lower: est.result.lower,
        upper: est.result.upper,
        witness: est.result.witness.iter().map(|z| json::point_json(z)).collect(),
        sup_sampled: sup,
        subsets: est.subsets,
        samples: est.samples.iter().map(|z| json::point_json(z)).collect(),
        ell_max: opts.ell_max,
        tol: opts.norm.tol,
        seed: g.seed,
    })))
}

#[derive(Serialize)]
struct PickReport {
    feasible: bool,
    level: f64,
    min_eig: f64,
    norm: f64,
    seed: u64,
}

/// Smallest level with a positive semidefinite Pick matrix, to within `eps`.
fn pick_norm(z: &[C64], w: &[C64], eps: f64, tol: &Tolerances) -> Result<f64, CliError> {
    let psd = |t: f64| -> Result<bool, CliError> { Ok(pick_min_eig(z, w, t, tol)? >= -tol.pick * t * t) };
    let mut lo = w.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if lo == 0.0 || psd(lo)? {
        return Ok(lo);
    }
    let mut hi = 2.0 * lo;
    while !psd(hi)? {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(CliError::new(INCONCLUSIVE, "Pick matrix never became positive"));
        }
    }
    while hi - lo > eps {
        let mid = 0.5 * (lo + hi);
        if psd(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub fn pick(g: &Global, path: &Path, level: Option<f64>) -> Result<Output, CliError> {
    let tol = Tolerances::default();
    let pf: ProblemFile = parse(path)?;
    let t = positive("level", level.or(pf.params.level).unwrap_or(1.0))?;
    let mut z = Vec::with_capacity(pf.points.len());
    for (i, p) in pf.points().into_iter().enumerate() {
        match p.as_slice() {
            [c] => z.push(*c),
            _ => return Err(CliError::invalid(format!("point {i} has {} coordinates, pick needs 1", p.len()))),
        }
    }
    let targets = pf
        .targets
        .as_ref()
        .ok_or_else(|| CliError::invalid("pick needs \"targets\""))?;
    let mut w = Vec::with_capacity(targets.len());
    for (i, t) in targets.iter().enumerate() {
        let m = t.to_matrix()?;
        if m.shape() != (1, 1) {
            return Err(CliError::invalid(format!("target {i} is not a scalar")));
        }
        w.push(m[(0, 0)]);
    }
    let min_eig = pick_min_eig(&z, &w, t, &tol)?;
    let feasible = min_eig >= -tol.pick * t * t;
    let norm = pick_norm(&z, &w, g.tol.unwrap_or(1e-10), &tol)?;
    Ok(Output {
        body: g.emit(&PickReport {
            feasible,
            level: t,
            min_eig,
            norm,
            seed: g.seed,
        }),
        code: if feasible { FEASIBLE } else { INFEASIBLE },
        note: (!feasible).then(|| format!("Pick matrix not positive at level {t} (min eigenvalue {min_eig:.6e})")),
    })
}

/// A single algebra check: idempotents and coefficients.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IdemFile {
    algebra: Vec<ComplexMatrixJson>,
    coeffs: Vec<TargetJson>,
}

#[derive(Serialize)]
struct IdemSingle {
    algebra_norm: f64,
    multiplier_norm: f64,
    deviation: f64,
    passed: bool,
    relation_defect: f64,
    bisect_tol: f64,
    seed: u64,
}

#[derive(Serialize, Default)]
struct IdemTally {
    passed: usize,
    max_deviation: f64,
    worst_trial: Option<usize>,
}

#[derive(Serialize)]
struct IdemSummary {
    count: usize,
    scalar: IdemTally,
    matrix: IdemTally,
    k_max: usize,
    d_max: usize,
    p_max: usize,
    cond_max: f64,
    bisect_tol: f64,
    seed: u64,
}

/// Accepted gap between the two norms.
fn idem_allowed(norm: f64) -> f64 {
    1e-5 * (1.0 + norm)
}

pub const IDEM_BISECT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug)]
pub struct IdemRandom {
    pub count: usize,
    pub k_max: usize,
    pub d_max: usize,
    pub p_max: usize,
    pub cond_max: f64,
}

fn random_coeffs(rng: &mut ChaCha8Rng, k: usize, p: usize) -> Vec<CMatrix> {
    (0..k)
        .map(|_| CMatrix::from_fn(p, p, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect()
}

/// Returns (deviation, allowed) for one coefficient family.
fn idem_compare(alg: &KIdempotentAlgebra, coeffs: &[CMatrix], bisect: f64, tol: &Tolerances) -> Result<(f64, f64), Error> {
    let a = algebra_norm(alg, coeffs)?;
    let m = multiplier_norm_matrix(alg, coeffs, bisect, tol)?;
    Ok(((a - m).abs(), idem_allowed(a)))
}

pub fn idem_random(g: &Global, opts: &IdemRandom) -> Result<Output, CliError> {
    let tol = Tolerances::default();
    let bisect = positive("--tol", g.tol.unwrap_or(IDEM_BISECT_TOL))?;
    if opts.k_max == 0 || opts.d_max < opts.k_max || opts.p_max == 0 {
        return Err(CliError::invalid("need 1 <= k-max <= d-max and p-max >= 1"));
    }
    positive("--cond", opts.cond_max)?;
    let trials: Vec<[(f64, f64); 2]> = (0..opts.count)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            rng.set_stream(trial as u64);
            let k = rng.gen_range(1..=opts.k_max);
            let d = rng.gen_range(k..=opts.d_max);
            let p = rng.gen_range(1..=opts.p_max);
            let alg = random_idempotents(k, d, rng.gen(), opts.cond_max)?;
            let scalar = random_coeffs(&mut rng, k, 1);
            let matrix = random_coeffs(&mut rng, k, p);
            Ok([idem_compare(&alg, &scalar, bisect, &tol)?, idem_compare(&alg, &matrix, bisect, &tol)?])
        })
        .collect::<Result<_, Error>>()?;
    let tally = |variant: usize| {
        let mut t = IdemTally::default();
        for (i, r) in trials.iter().enumerate() {
            let (dev, allowed) = r[variant];
            if dev < allowed {
                t.passed += 1;
            }
            if t.worst_trial.is_none() || dev > t.max_deviation {
                t.max_deviation = dev;
                t.worst_trial = Some(i);
            }
        }
        t
    };
    let summary = IdemSummary {
        count: opts.count,
        scalar: tally(0),
        matrix: tally(1),
        k_max: opts.k_max,
        d_max: opts.d_max,
        p_max: opts.p_max,
        cond_max: opts.cond_max,
        bisect_tol: bisect,
        seed: g.seed,
    };
    let failed = (opts.count - summary.scalar.passed) + (opts.count - summary.matrix.passed);
    Ok(Output {
        body: g.emit(&summary),
        code: if failed == 0 { FEASIBLE } else { INFEASIBLE },
        note: (failed > 0).then(|| format!("{failed} comparisons exceeded 1e-5*(1+norm)")),
    })
}

pub fn idem_file(g: &Global, path: &Path) -> Result<Output, CliError> {
    let tol = Tolerances::default();
    let bisect = positive("--tol", g.tol.unwrap_or(IDEM_BISECT_TOL))?;
    let file: IdemFile = parse(path)?;
    let alg = algebra_from_json(&file.algebra)?;
    let coeffs = file.coeffs.iter().map(TargetJson::to_matrix).collect::<Result<Vec<_>, _>>()?;
    let a = algebra_norm(&alg, &coeffs)?;
    let m = multiplier_norm_matrix(&alg, &coeffs, bisect, &tol)?;
    let deviation = (a - m).abs();
    let passed = deviation < idem_allowed(a);
    Ok(Output {
        body: g.emit(&IdemSingle {
            algebra_norm: a,
            multiplier_norm: m,
            deviation,
            passed,
            relation_defect: alg.relation_defect(),
            bisect_tol: bisect,
            seed: g.seed,
        }),
        code: if passed { FEASIBLE } else { INFEASIBLE },
        note: (!passed).then(|| format!("norms differ by {deviation:.6e}")),
    })
}

pub fn lower_bound_cmd(g: &Global, path: &Path) -> Result<Output, CliError> {
    let tol = Tolerances::default();
    let pf: ProblemFile = parse(path)?;
    let p = pf.presentation()?;
    let f = pf.function(p.dim())?;
    let mut opts = SearchOptions {
        seed: g.seed,
        ..SearchOptions::default()
    };
    if let Some(r) = pf.params.restarts {
        opts.restarts = r;
    }
    if let Some(s) = pf.params.steps {
        opts.steps = s;
    }
    let r = lower_bound(&f, &p, &pf.points(), &opts, &tol)?;
    Ok(Output::ok(g.emit(&LowerBoundJson::new(&r, g.seed))))
}

#[derive(Serialize)]
struct VerifyOut {
    verdict: bool,
    residual: f64,
    min_eig_per_block: Vec<f64>,
    hermitian_defect: f64,
    level: f64,
    seed: u64,
}

pub fn verify(g: &Global, problem: &Path, cert: &Path) -> Result<Output, CliError> {
    let mut tol = Tolerances::default();
    if let Some(t) = g.tol {
        tol.verify_residual = positive("--tol", t)?;
    }
    let pf: ProblemFile = parse(problem)?;
    let mut value: serde_json::Value = parse(cert)?;
    if let Some(inner) = value.get_mut("certificate") {
        value = inner.take();
    }
    let cj: CertificateJson = serde_json::from_value(value)
        .map_err(|e| CliError::invalid(format!("{}: not a certificate: {e}", cert.display())))?;
    let level = positive("level", cj.level)?;
    let prob = pf.interpolation(level, &tol)?;
    let report = verify_certificate(&prob, &cj.to_certificate()?, &tol)?;
    Ok(Output {
        body: g.emit(&VerifyOut {
            verdict: report.verdict,
            residual: report.residual,
            min_eig_per_block: report.min_eig_per_block,
            hermitian_defect: report.hermitian_defect,
            level,
            seed: g.seed,
        }),
        code: if report.verdict { FEASIBLE } else { INFEASIBLE },
        note: (!report.verdict).then(|| format!("certificate rejected (residual {:.6e})", report.residual)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn pick_norm_of_schwarz_pair() {
        let tol = Tolerances::default();
        let z = [C64::new(0.0, 0.0), C64::new(0.5, 0.0)];
        let n = pick_norm(&z, &z, 1e-12, &tol).unwrap();
        assert!((n - 1.0).abs() < 1e-9, "{n}");
        let w = [C64::new(0.0, 0.0), C64::new(0.9, 0.0)];
        let n = pick_norm(&z, &w, 1e-12, &tol).unwrap();
        // Two-point disk norm: |w2| / |z2| when w1 = z1 = 0.
        assert!((n - 1.8).abs() < 1e-9, "{n}");
    }

    #[test]
    fn certify_then_verify_round_trip() {
        let g = Global::default();
        let prob = file(r#"{"domain": {"preset": "disk"}, "points": [[0], [0.5]], "targets": [0, 0.3]}"#);
        let out = certify(&g, prob.path(), None).unwrap();
        assert_eq!(out.code, FEASIBLE);
        let cert = file(&out.body);
        let v = verify(&g, prob.path(), cert.path()).unwrap();
        assert_eq!(v.code, FEASIBLE, "{}", v.body);
    }

    #[test]
    fn tampered_certificate_is_rejected() {
        let g = Global::default();
        let prob = file(r#"{"domain": {"preset": "disk"}, "points": [[0], [0.5]], "targets": [0, 0.3]}"#);
        let out = certify(&g, prob.path(), None).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&out.body).unwrap();
        let re = &mut v["certificate"]["gammas"][0]["re"][0];
        *re = serde_json::json!(re.as_f64().unwrap() + 1e-3);
        let cert = file(&v.to_string());
        assert_eq!(verify(&g, prob.path(), cert.path()).unwrap().code, INFEASIBLE);
    }

    #[test]
    fn norm_output_is_deterministic() {
        let g = Global {
            seed: 5,
            ..Global::default()
        };
        let prob = file(r#"{"domain": {"preset": "disk"}, "points": [[0], [0.3]], "targets": [0, 0.3]}"#);
        let a = norm(&g, prob.path()).unwrap();
        let b = norm(&g, prob.path()).unwrap();
        assert_eq!(a, b);
        assert!(a.body.contains("\"seed\":5"));
    }
}
