//! JSON forms of the library types and a writer that prints every float with
//! 17 significant digits.
//!
//! Complex matrices are `{"rows", "cols", "re", "im"}` with row-major parts;
//! complex scalars are `[re, im]` (a bare real is accepted on input).

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::idempotent::KIdempotentAlgebra;
use crate::linalg::{CMatrix, C64};
use crate::config::Tolerances;
use crate::norm::{NormResult, Sampler};
use crate::pick::{Certificate, InterpolationProblem};
use crate::poly::{MultiPoly, RationalFn, RationalMatrix};
use crate::presentation::{preset, ComplexValue, Presentation, PresetParams};
use crate::repsearch::{AdmissibleTuple, SearchResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexMatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&CMatrix> for ComplexMatrixJson {
    fn from(m: &CMatrix) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self { rows, cols, re, im }
    }
}

impl TryFrom<&ComplexMatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(j: &ComplexMatrixJson) -> Result<CMatrix> {
        let n = j.rows * j.cols;
        if j.re.len() != n || j.im.len() != n {
            return Err(Error::Dimension(format!(
                "{}x{} matrix needs {n} real and {n} imaginary parts, got {} and {}",
                j.rows,
                j.cols,
                j.re.len(),
                j.im.len()
            )));
        }
        Ok(CMatrix::from_fn(j.rows, j.cols, |r, c| C64::new(j.re[r * j.cols + c], j.im[r * j.cols + c])))
    }
}

pub fn complex(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn point_json(z: &[C64]) -> Vec<[f64; 2]> {
    z.iter().map(|&c| complex(c)).collect()
}

pub fn point_from_json(z: &[ComplexValue]) -> Vec<C64> {
    z.iter().map(|&c| c.into()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub exp: Vec<u32>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyJson {
    pub terms: Vec<TermJson>,
}

impl PolyJson {
    fn to_poly(&self, dim: usize) -> Result<MultiPoly> {
        MultiPoly::from_terms(dim, self.terms.iter().map(|t| (t.exp.clone(), C64::new(t.re, t.im))))
    }

    fn from_poly(p: &MultiPoly) -> Self {
        Self {
            terms: p
                .terms()
                .map(|(e, c)| TermJson {
                    exp: e.clone(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }
}

/// A matrix entry: a rational function, or a bare polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntryJson {
    Rational {
        num: PolyJson,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        den: Option<PolyJson>,
    },
    Poly(PolyJson),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<EntryJson>>,
}

impl FunctionJson {
    pub fn to_matrix(&self, dim: usize) -> Result<RationalMatrix> {
        if self.entries.len() != self.rows || self.entries.iter().any(|r| r.len() != self.cols) {
            return Err(Error::Dimension(format!(
                "entries do not form a {}x{} array",
                self.rows, self.cols
            )));
        }
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for e in self.entries.iter().flatten() {
            out.push(match e {
                EntryJson::Poly(p) => RationalFn::from(p.to_poly(dim)?),
                EntryJson::Rational { num, den } => {
                    let den = match den {
                        Some(d) => d.to_poly(dim)?,
                        None => MultiPoly::one(dim),
                    };
                    RationalFn::new(num.to_poly(dim)?, den)?
                }
            });
        }
        RationalMatrix::new(self.rows, self.cols, out)
    }

    pub fn from_matrix(f: &RationalMatrix) -> Self {
        let entries = (0..f.rows())
            .map(|i| {
                (0..f.cols())
                    .map(|j| {
                        let e = f.entry(i, j);
                        if e.is_polynomial() && e.den.as_constant() == Some(C64::new(1.0, 0.0)) {
                            EntryJson::Poly(PolyJson::from_poly(&e.num))
                        } else {
                            EntryJson::Rational {
                                num: PolyJson::from_poly(&e.num),
                                den: Some(PolyJson::from_poly(&e.den)),
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            rows: f.rows(),
            cols: f.cols(),
            entries,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresentationJson {
    pub dim: usize,
    #[serde(default)]
    pub name: String,
    pub functions: Vec<FunctionJson>,
}

/// A domain given in full or by preset name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainJson {
    Preset {
        preset: String,
        #[serde(default)]
        params: PresetParams,
    },
    Explicit(PresentationJson),
}

impl DomainJson {
    pub fn build(&self) -> Result<Presentation> {
        match self {
            DomainJson::Preset { preset: name, params } => preset(name, params),
            DomainJson::Explicit(p) => {
                let functions = p
                    .functions
                    .iter()
                    .map(|f| f.to_matrix(p.dim))
                    .collect::<Result<Vec<_>>>()?;
                Presentation::new(p.dim, p.name.clone(), functions)
            }
        }
    }

    pub fn from_presentation(p: &Presentation) -> Self {
        DomainJson::Explicit(PresentationJson {
            dim: p.dim(),
            name: p.name().to_string(),
            functions: p.functions().iter().map(FunctionJson::from_matrix).collect(),
        })
    }
}

/// A target: a full matrix or a scalar standing for a 1×1 matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetJson {
    Matrix(ComplexMatrixJson),
    Scalar(ComplexValue),
}

impl TargetJson {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        match self {
            TargetJson::Matrix(m) => m.try_into(),
            TargetJson::Scalar(z) => Ok(CMatrix::scalar((*z).into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub gamma0: ComplexMatrixJson,
    pub gammas: Vec<ComplexMatrixJson>,
    #[serde(rename = "R")]
    pub r: Option<ComplexMatrixJson>,
    pub residual: Option<f64>,
    pub min_eig: Option<f64>,
    /// The targets this certificate interpolates were divided by `level`.
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub level: f64,
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

impl CertificateJson {
    pub fn new(c: &Certificate, level: f64) -> Self {
        Self {
            gamma0: (&c.gamma0).into(),
            gammas: c.gammas.iter().map(Into::into).collect(),
            r: c.r.as_ref().map(Into::into),
            residual: Some(c.residual),
            min_eig: Some(c.min_eig),
            level,
        }
    }

    pub fn to_certificate(&self) -> Result<Certificate> {
        Ok(Certificate {
            gamma0: (&self.gamma0).try_into()?,
            gammas: self.gammas.iter().map(TryInto::try_into).collect::<Result<_>>()?,
            r: self.r.as_ref().map(TryInto::try_into).transpose()?,
            residual: self.residual.unwrap_or(f64::NAN),
            min_eig: self.min_eig.unwrap_or(f64::NAN),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormResultJson {
    pub lower: f64,
    pub upper: f64,
    pub witness: Vec<Vec<[f64; 2]>>,
    pub certificate: CertificateJson,
    pub iterations: usize,
    pub stalled: usize,
    pub inconclusive: usize,
}

impl From<&NormResult> for NormResultJson {
    fn from(r: &NormResult) -> Self {
        Self {
            lower: r.lower,
            upper: r.upper,
            witness: r.witness.iter().map(|z| point_json(z)).collect(),
            // Zero norm: the certificate is for the unscaled (zero) targets.
            certificate: CertificateJson::new(&r.certificate, if r.upper > 0.0 { r.upper } else { 1.0 }),
            iterations: r.iterations,
            stalled: r.stalled,
            inconclusive: r.inconclusive,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundJson {
    pub value: f64,
    pub margins: Vec<f64>,
    pub tuple: Vec<ComplexMatrixJson>,
    pub seed: u64,
    pub restart_values: Vec<f64>,
    pub spectrum: Vec<Vec<[f64; 2]>>,
}

impl LowerBoundJson {
    pub fn new(r: &SearchResult, seed: u64) -> Self {
        Self {
            value: r.value,
            margins: r.best.margins.clone(),
            tuple: r.best.matrices.iter().map(Into::into).collect(),
            seed,
            restart_values: r.restart_values.clone(),
            spectrum: r.best.provenance.points.iter().map(|z| point_json(z)).collect(),
        }
    }
}

pub fn tuple_from_json(t: &[ComplexMatrixJson]) -> Result<Vec<CMatrix>> {
    t.iter().map(TryInto::try_into).collect()
}

pub fn tuple_json(t: &AdmissibleTuple) -> Vec<ComplexMatrixJson> {
    t.matrices.iter().map(Into::into).collect()
}

pub fn algebra_json(a: &KIdempotentAlgebra) -> Vec<ComplexMatrixJson> {
    a.idempotents().iter().map(Into::into).collect()
}

pub fn algebra_from_json(list: &[ComplexMatrixJson]) -> Result<KIdempotentAlgebra> {
    KIdempotentAlgebra::new(tuple_from_json(list)?)
}

/// Optional per-command parameters of a problem file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<Sampler>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
}

/// Input of every file-driven command. Each point is a list of coordinates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainJson>,
    #[serde(default)]
    pub points: Vec<Vec<ComplexValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<TargetJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionJson>,
    #[serde(default)]
    pub params: ProblemParams,
}

impl ProblemFile {
    pub fn presentation(&self) -> Result<Presentation> {
        self.domain
            .as_ref()
            .ok_or_else(|| Error::Parameter("the problem has no \"domain\"".into()))?
            .build()
    }

    pub fn points(&self) -> Vec<Vec<C64>> {
        self.points.iter().map(|z| point_from_json(z)).collect()
    }

    pub fn function(&self, dim: usize) -> Result<RationalMatrix> {
        if self.targets.is_some() {
            return Err(Error::Parameter("give \"function\" here, not \"targets\"".into()));
        }
        self.function
            .as_ref()
            .ok_or_else(|| Error::Parameter("the problem has no \"function\"".into()))?
            .to_matrix(dim)
    }

    /// Explicit targets, or the function evaluated at the points.
    pub fn targets(&self, p: &Presentation, tol: &Tolerances) -> Result<Vec<CMatrix>> {
        match (&self.targets, &self.function) {
            (Some(_), Some(_)) => Err(Error::Parameter("give either \"targets\" or \"function\", not both".into())),
            (None, None) => Err(Error::Parameter("the problem needs \"targets\" or \"function\"".into())),
            (Some(t), None) => t.iter().map(TargetJson::to_matrix).collect(),
            (None, Some(f)) => {
                let f = f.to_matrix(p.dim())?;
                if f.dim() != p.dim() {
                    return Err(Error::Dimension(format!(
                        "function in {} variables, domain in C^{}",
                        f.dim(),
                        p.dim()
                    )));
                }
                self.points().iter().map(|z| f.eval(z, tol)).collect()
            }
        }
    }

    /// Validated problem with targets divided by `level`.
    pub fn interpolation(&self, level: f64, tol: &Tolerances) -> Result<InterpolationProblem> {
        let p = self.presentation()?;
        let targets = self.targets(&p, tol)?;
        let prob = InterpolationProblem::new(p, self.points(), targets, tol)?;
        Ok(if level == 1.0 { prob } else { prob.scaled(1.0 / level) })
    }
}

/// Delegates layout to `F` and writes finite floats as `{:.16e}`; serde_json
/// itself turns NaN and infinities into `null`.
struct Digits<F>(F);

macro_rules! delegate {
    ($($name:ident $(($arg:ident: $ty:ty))?),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)?) -> io::Result<()> {
                self.0.$name(w $(, $arg)?)
            }
        )*
    };
}

impl<F: Formatter> Formatter for Digits<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate!(
        begin_array,
        end_array,
        begin_array_value(first: bool),
        end_array_value,
        begin_object,
        end_object,
        begin_object_key(first: bool),
        end_object_key,
        begin_object_value,
        end_object_value,
    );
}

/// Serializes with 17 significant digits; `indent` spaces per level, or one
/// line when `None`.
pub fn to_string<T: Serialize>(value: &T, indent: Option<usize>) -> String {
    let mut out = Vec::new();
    let res = match indent {
        Some(n) => {
            let pad = vec![b' '; n];
            let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits(PrettyFormatter::with_indent(&pad)));
            value.serialize(&mut ser)
        }
        None => {
            let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits(CompactFormatter));
            value.serialize(&mut ser)
        }
    };
    res.expect("serializing to memory does not fail");
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::{annulus, PRESET_NAMES};
    use crate::Tolerances;

    #[test]
    fn matrix_round_trip() {
        let m = CMatrix::from_fn(2, 3, |r, c| C64::new(r as f64 + 0.1, c as f64 - 0.7));
        let j = ComplexMatrixJson::from(&m);
        assert_eq!(j.re.len(), 6);
        let back: CMatrix = (&j).try_into().unwrap();
        assert_eq!(back, m);
        let bad = ComplexMatrixJson {
            rows: 2,
            cols: 2,
            re: vec![0.0; 3],
            im: vec![0.0; 4],
        };
        assert!(CMatrix::try_from(&bad).is_err());
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        let x = 0.1 + 0.2;
        let s = to_string(&vec![x, f64::NAN, 1.0], None);
        assert_eq!(s, "[3.0000000000000004e-1,null,1.0000000000000000e0]");
        let back: Vec<Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0], Some(x));
        assert_eq!(back[1], None);
    }

    #[test]
    fn indentation() {
        let s = to_string(&serde_json::json!({"a": [1, 2]}), Some(2));
        assert_eq!(s, "{\n  \"a\": [\n    1,\n    2\n  ]\n}");
    }

    #[test]
    fn preset_reference_parses() {
        let d: DomainJson = serde_json::from_str(r#"{"preset": "polydisk", "params": {"n": 3}}"#).unwrap();
        assert_eq!(d.build().unwrap().dim(), 3);
        let d: DomainJson = serde_json::from_str(r#"{"preset": "disk"}"#).unwrap();
        assert_eq!(d.build().unwrap().len(), 1);
        for name in PRESET_NAMES {
            let d = DomainJson::Preset {
                preset: name.to_string(),
                params: PresetParams::default(),
            };
            assert!(d.build().is_ok(), "{name}");
        }
    }

    #[test]
    fn explicit_presentation_round_trip() {
        let t = Tolerances::default();
        let p = annulus(0.5).unwrap();
        let j = DomainJson::from_presentation(&p);
        let text = to_string(&j, None);
        let back: DomainJson = serde_json::from_str(&text).unwrap();
        let q = back.build().unwrap();
        let z = [C64::new(0.3, 0.6)];
        for k in 0..p.len() {
            assert_eq!(p.eval_fn(k, &z, &t).unwrap(), q.eval_fn(k, &z, &t).unwrap());
        }
    }

    #[test]
    fn explicit_schema_with_rational_entry() {
        let text = r#"{"dim": 1, "name": "h", "functions": [{"rows": 1, "cols": 1, "entries": [[
            {"num": {"terms": [{"exp": [1], "re": 1}, {"exp": [0], "re": -1}]},
             "den": {"terms": [{"exp": [1], "re": 1}, {"exp": [0], "re": 1}]}}
        ]]}]}"#;
        let d: DomainJson = serde_json::from_str(text).unwrap();
        let p = d.build().unwrap();
        let t = Tolerances::default();
        let v = p.eval_fn(0, &[C64::new(1.0, 0.0)], &t).unwrap();
        assert_eq!(v[(0, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn targets_accept_scalars_and_matrices() {
        let v: Vec<TargetJson> = serde_json::from_str(r#"[0.5, [0.1, -0.2], {"rows":1,"cols":2,"re":[1,2],"im":[0,0]}]"#).unwrap();
        assert_eq!(v[0].to_matrix().unwrap(), CMatrix::scalar(C64::new(0.5, 0.0)));
        assert_eq!(v[1].to_matrix().unwrap(), CMatrix::scalar(C64::new(0.1, -0.2)));
        assert_eq!(v[2].to_matrix().unwrap().shape(), (1, 2));
    }

    #[test]
    fn certificate_round_trip_and_null_r() {
        let c = Certificate {
            gamma0: CMatrix::identity(2),
            gammas: vec![CMatrix::scalar(C64::new(0.75, 0.0))],
            r: None,
            residual: 0.0,
            min_eig: 1.0,
        };
        let text = to_string(&CertificateJson::new(&c, 1.0), None);
        assert!(text.contains("\"R\":null"));
        assert!(!text.contains("level"));
        let back: CertificateJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_certificate().unwrap(), c);
    }

    #[test]
    fn problem_file_targets_from_function() {
        let t = Tolerances::default();
        let text = r#"{"domain": {"preset": "polydisk", "params": {"n": 2}},
            "points": [[0.1, [0.2, 0.3]], [0.5, 0]],
            "function": {"rows": 1, "cols": 1, "entries": [[{"terms": [{"exp": [1, 1], "re": 1}]}]]}}"#;
        let pf: ProblemFile = serde_json::from_str(text).unwrap();
        let p = pf.presentation().unwrap();
        let w = pf.targets(&p, &t).unwrap();
        assert_eq!(w[0][(0, 0)], C64::new(0.1, 0.0) * C64::new(0.2, 0.3));
        assert_eq!(w[1][(0, 0)], C64::new(0.0, 0.0));
        let prob = pf.interpolation(2.0, &t).unwrap();
        assert_eq!(prob.targets()[0][(0, 0)], w[0][(0, 0)] * 0.5);
        assert!(pf.function(2).is_ok());

        let both = r#"{"domain": {"preset": "disk"}, "points": [[0]], "targets": [0.5],
            "function": {"rows": 1, "cols": 1, "entries": [[{"terms": []}]]}}"#;
        let pf: ProblemFile = serde_json::from_str(both).unwrap();
        assert!(pf.targets(&pf.presentation().unwrap(), &t).is_err());
        assert!(serde_json::from_str::<ProblemFile>(r#"{"points": [], "extra": 1}"#).is_err());
    }
}
