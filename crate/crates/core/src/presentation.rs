//! Domains `G = {z ∈ ℂᴺ : ‖F_k(z)‖ < 1 for all k}` given by finitely many
//! matrix-valued rational functions, and the named presets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{op_norm, schur, CMatrix, C64, ONE, ZERO};
use crate::poly::{check_commuting, MultiPoly, RationalFn, RationalMatrix};

/// A finite family of matrix-valued rational functions on ℂᴺ.
#[derive(Clone, Debug, PartialEq)]
pub struct Presentation {
    dim: usize,
    name: String,
    functions: Vec<RationalMatrix>,
}

/// Result of a membership test: `inside` iff `margin > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Membership {
    pub inside: bool,
    pub margin: f64,
}

impl Presentation {
    pub fn new(dim: usize, name: impl Into<String>, functions: Vec<RationalMatrix>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("domain dimension must be at least 1".into()));
        }
        if functions.is_empty() {
            return Err(Error::Parameter("a presentation needs at least one function".into()));
        }
        if let Some(k) = functions.iter().position(|f| f.dim() != dim) {
            return Err(Error::Dimension(format!(
                "function {k} has {} variables, presentation has {dim}",
                functions[k].dim()
            )));
        }
        Ok(Self {
            dim,
            name: name.into(),
            functions,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn functions(&self) -> &[RationalMatrix] {
        &self.functions
    }

    /// Number of defining functions `K`.
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// `(m_k, n_k)` for each defining function.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.functions.iter().map(RationalMatrix::shape).collect()
    }

    /// `F_k(z)`.
    pub fn eval_fn(&self, k: usize, z: &[C64], tol: &Tolerances) -> Result<CMatrix> {
        let f = self
            .functions
            .get(k)
            .ok_or_else(|| Error::Parameter(format!("no function with index {k}")))?;
        self.check_point(z)?;
        f.eval(z, tol).map_err(|e| match e {
            Error::Pole { entry, den_abs } => Error::Pole {
                entry: format!("F_{k} {entry}"),
                den_abs,
            },
            other => other,
        })
    }

    /// All `F_k(z)`.
    pub fn eval_all(&self, z: &[C64], tol: &Tolerances) -> Result<Vec<CMatrix>> {
        (0..self.functions.len())
            .map(|k| self.eval_fn(k, z, tol))
            .collect()
    }

    /// `margin = min_k (1 − ‖F_k(z)‖)`.
    pub fn in_domain(&self, z: &[C64], tol: &Tolerances) -> Result<Membership> {
        let margin = self
            .eval_all(z, tol)?
            .iter()
            .map(|v| 1.0 - op_norm(v))
            .fold(f64::INFINITY, f64::min);
        Ok(Membership {
            inside: margin > 0.0,
            margin,
        })
    }

    /// `1 − ‖F_k(T)‖` for each k on a commuting tuple.
    pub fn tuple_margins(&self, t: &[CMatrix], tol: &Tolerances) -> Result<Vec<f64>> {
        self.functions
            .iter()
            .map(|f| Ok(1.0 - op_norm(&f.eval_on_tuple(t, tol)?)))
            .collect()
    }

    fn check_point(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, domain lives in C^{}",
                z.len(),
                self.dim
            )));
        }
        Ok(())
    }
}

/// Parameters accepted by [`preset`]; unused fields are ignored.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetParams {
    /// Number of variables for polydisk and ball presets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Lens centres.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<ComplexValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<ComplexValue>,
    /// Inner radius of the annulus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Matrix-ball shape.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
}

/// A complex number written either as a bare real or as `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexValue> for C64 {
    fn from(v: ComplexValue) -> C64 {
        match v {
            ComplexValue::Real(x) => C64::new(x, 0.0),
            ComplexValue::Pair([re, im]) => C64::new(re, im),
        }
    }
}

pub const PRESET_NAMES: &[&str] = &[
    "disk",
    "polydisk",
    "ball_row",
    "ball_col",
    "ball_rowcol",
    "lens",
    "annulus",
    "matrix_ball",
    "disk_pow",
    "halfplane",
];

fn var(dim: usize, j: usize) -> RationalFn {
    MultiPoly::variable(dim, j).into()
}

fn count(params: &PresetParams, default: usize) -> Result<usize> {
    let n = params.n.unwrap_or(default);
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    Ok(n)
}

/// Builds a named preset domain.
pub fn preset(name: &str, params: &PresetParams) -> Result<Presentation> {
    match name {
        "disk" => polydisk(1).map(|p| Presentation { name: "disk".into(), ..p }),
        "polydisk" => polydisk(count(params, 2)?),
        "ball_row" => ball_row(count(params, 2)?),
        "ball_col" => ball_col(count(params, 2)?),
        "ball_rowcol" => {
            let n = count(params, 2)?;
            let row = ball_row(n)?.functions.remove(0);
            let col = ball_col(n)?.functions.remove(0);
            Presentation::new(n, "ball_rowcol", vec![row, col])
        }
        "lens" => lens(
            params.a.map_or(ZERO, C64::from),
            params.b.map_or(C64::new(0.5, 0.0), C64::from),
        ),
        "annulus" => annulus(params.r.unwrap_or(0.5)),
        "matrix_ball" => matrix_ball(params.rows.unwrap_or(2), params.cols.unwrap_or(2)),
        "disk_pow" => disk_pow(),
        "halfplane" => halfplane(),
        other => Err(Error::Parameter(format!(
            "unknown preset {other:?}; expected one of {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

/// `F_i(z) = z_i`, each 1×1.
pub fn polydisk(n: usize) -> Result<Presentation> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    let fns = (0..n).map(|j| RationalMatrix::scalar(var(n, j))).collect();
    Presentation::new(n, "polydisk", fns)
}

/// `F(z) = [z_1 … z_n]`, 1×n.
pub fn ball_row(n: usize) -> Result<Presentation> {
    let f = RationalMatrix::new(1, n, (0..n).map(|j| var(n, j)).collect())?;
    Presentation::new(n, "ball_row", vec![f])
}

/// `F(z) = [z_1 … z_n]ᵗ`, n×1.
pub fn ball_col(n: usize) -> Result<Presentation> {
    let f = RationalMatrix::new(n, 1, (0..n).map(|j| var(n, j)).collect())?;
    Presentation::new(n, "ball_col", vec![f])
}

/// `F_1 = z − a`, `F_2 = z − b`, requires `|a − b| < 1`.
pub fn lens(a: C64, b: C64) -> Result<Presentation> {
    if (a - b).norm() >= 1.0 {
        return Err(Error::Parameter(format!(
            "lens requires |a - b| < 1, got {:.6}",
            (a - b).norm()
        )));
    }
    let shifted = |c: C64| -> Result<RationalMatrix> {
        let p = MultiPoly::variable(1, 0).sub(&MultiPoly::constant(1, c))?;
        Ok(RationalMatrix::scalar(p))
    };
    Presentation::new(1, "lens", vec![shifted(a)?, shifted(b)?])
}

/// `F_1 = z`, `F_2 = r / z`, requires `0 < r < 1`.
pub fn annulus(r: f64) -> Result<Presentation> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Parameter(format!("annulus requires 0 < r < 1, got {r}")));
    }
    let inner = RationalFn::new(MultiPoly::constant(1, C64::new(r, 0.0)), MultiPoly::variable(1, 0))?;
    Presentation::new(
        1,
        "annulus",
        vec![RationalMatrix::scalar(var(1, 0)), RationalMatrix::scalar(inner)],
    )
}

/// The identity map on `rows × cols` matrices; variable `i·cols + j` is entry `(i, j)`.
pub fn matrix_ball(rows: usize, cols: usize) -> Result<Presentation> {
    if rows == 0 || cols == 0 {
        return Err(Error::Parameter("matrix ball needs rows, cols >= 1".into()));
    }
    let n = rows * cols;
    let f = RationalMatrix::new(rows, cols, (0..n).map(|j| var(n, j)).collect())?;
    Presentation::new(n, "matrix_ball", vec![f])
}

/// `F_1 = z²`, `F_2 = z³` on the disk.
pub fn disk_pow() -> Result<Presentation> {
    let sq = RationalMatrix::scalar(MultiPoly::monomial(vec![2], ONE));
    let cube = RationalMatrix::scalar(MultiPoly::monomial(vec![3], ONE));
    Presentation::new(1, "disk_pow", vec![sq, cube])
}

/// `F = (z − 1)/(z + 1)`, the Cayley map of the right half-plane onto the disk.
pub fn halfplane() -> Result<Presentation> {
    let z = MultiPoly::variable(1, 0);
    let one = MultiPoly::one(1);
    let f = RationalFn::new(z.sub(&one)?, z.add(&one)?)?;
    Presentation::new(1, "halfplane", vec![RationalMatrix::scalar(f)])
}

/// A box `[lo, hi]` per real and imaginary coordinate that contains the preset
/// domain (or a reasonable window of it, for the unbounded half-plane).
pub fn sampling_box(p: &Presentation) -> (f64, f64) {
    match p.name() {
        "halfplane" => (-0.5, 4.0),
        "lens" => (-2.0, 2.0),
        _ => (-1.0, 1.0),
    }
}

/// Rejection-samples `count` points with margin at least `floor`.
///
/// Gives up after `200·count` proposals and returns what it has.
pub fn sample_interior(
    p: &Presentation,
    count: usize,
    floor: f64,
    rng: &mut impl Rng,
    tol: &Tolerances,
) -> Vec<Vec<C64>> {
    let (lo, hi) = sampling_box(p);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count && tries < 200 * count.max(1) {
        tries += 1;
        let z: Vec<C64> = (0..p.dim())
            .map(|_| C64::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi)))
            .collect();
        if let Ok(m) = p.in_domain(&z, tol) {
            if m.margin >= floor {
                out.push(z);
            }
        }
    }
    out
}

/// Joint eigenvalues of a commuting tuple, read off the diagonal of a common
/// upper-triangular form obtained from the Schur form of a random linear
/// combination. Fails when that basis does not triangularize every member.
pub fn joint_spectrum(t: &[CMatrix], seed: u64, tol: &Tolerances) -> Result<Vec<Vec<C64>>> {
    check_commuting(t, tol)?;
    let Some(first) = t.first() else {
        return Ok(Vec::new());
    };
    let d = first.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comb = CMatrix::zeros(d, d);
    for tj in t {
        let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        comb.add_block(0, 0, tj, c);
    }
    let (q, _) = schur(&comb)?;
    let qh = q.adjoint();
    let mut tri = Vec::with_capacity(t.len());
    for (j, tj) in t.iter().enumerate() {
        let u = &(&qh * tj) * &q;
        let mut lower = 0.0;
        for r in 0..d {
            for c in 0..r {
                lower += u[(r, c)].norm_sqr();
            }
        }
        let lower = lower.sqrt();
        if lower > 1e-8 * (1.0 + tj.frobenius_norm()) {
            return Err(Error::Spectrum(format!(
                "could not triangularize tuple entry {j} (strictly lower mass {lower:.3e})"
            )));
        }
        tri.push(u);
    }
    Ok((0..d)
        .map(|i| tri.iter().map(|u| u[(i, i)]).collect())
        .collect())
}

/// Checks that every joint eigenvalue of `t` lies inside the domain; returns
/// the smallest margin seen.
pub fn spectrum_margin(p: &Presentation, t: &[CMatrix], seed: u64, tol: &Tolerances) -> Result<f64> {
    let pts = joint_spectrum(t, seed, tol)?;
    let mut worst = f64::INFINITY;
    for z in &pts {
        worst = worst.min(p.in_domain(z, tol)?.margin);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn polydisk_coordinate() {
        let p = preset("polydisk", &PresetParams { n: Some(2), ..Default::default() }).unwrap();
        let v = p.eval_fn(0, &[c(0.3, 0.0), c(0.0, 0.9)], &tol()).unwrap();
        assert_eq!(v, CMatrix::scalar(c(0.3, 0.0)));
        assert!((op_norm(&v) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn polydisk_three() {
        let p = polydisk(3).unwrap();
        assert_eq!(p.len(), 3);
        assert!(p.shapes().iter().all(|&s| s == (1, 1)));
        let z = [c(0.1, 0.0), c(0.2, 0.0), c(0.3, 0.0)];
        for k in 0..3 {
            assert_eq!(p.eval_fn(k, &z, &tol()).unwrap()[(0, 0)], z[k]);
        }
    }

    #[test]
    fn ball_row_boundary() {
        let p = ball_row(2).unwrap();
        let z = [c(0.6, 0.0), c(0.8, 0.0)];
        let v = p.eval_fn(0, &z, &tol()).unwrap();
        assert!((op_norm(&v) - 1.0).abs() < 1e-15);
        let m = p.in_domain(&z, &tol()).unwrap();
        assert!(!m.inside);
        assert!(m.margin.abs() < 1e-15);
    }

    #[test]
    fn annulus_inner_function() {
        let p = annulus(0.5).unwrap();
        let v = p.eval_fn(1, &[c(0.7, 0.0)], &tol()).unwrap();
        assert!((v[(0, 0)].re - 0.5 / 0.7).abs() < 1e-15);
        assert!(matches!(
            p.eval_fn(1, &[ZERO], &tol()),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn polydisk_membership() {
        let p = polydisk(2).unwrap();
        let m = p.in_domain(&[c(0.5, 0.0), c(0.5, 0.0)], &tol()).unwrap();
        assert!(m.inside);
        assert!((m.margin - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lens_membership() {
        let p = lens(ZERO, c(0.5, 0.0)).unwrap();
        let m = p.in_domain(&[c(0.25, 0.0)], &tol()).unwrap();
        assert!(m.inside);
        assert!((m.margin - 0.75).abs() < 1e-15);
        // F_1 = z - 0, F_2 = z - 0.5
        assert_eq!(p.eval_fn(0, &[c(0.25, 0.0)], &tol()).unwrap()[(0, 0)], c(0.25, 0.0));
        assert_eq!(p.eval_fn(1, &[c(0.25, 0.0)], &tol()).unwrap()[(0, 0)], c(-0.25, 0.0));
    }

    #[test]
    fn preset_parameter_errors() {
        assert!(matches!(annulus(1.0), Err(Error::Parameter(_))));
        assert!(matches!(annulus(0.0), Err(Error::Parameter(_))));
        assert!(matches!(lens(ZERO, c(1.0, 0.0)), Err(Error::Parameter(_))));
        assert!(matches!(polydisk(0), Err(Error::Parameter(_))));
        assert!(preset("torus", &PresetParams::default()).is_err());
    }

    #[test]
    fn halfplane_and_others() {
        let p = halfplane().unwrap();
        assert!(p.in_domain(&[c(2.0, 1.0)], &tol()).unwrap().inside);
        assert!(!p.in_domain(&[c(-0.1, 0.0)], &tol()).unwrap().inside);
        let p = disk_pow().unwrap();
        let v = p.eval_all(&[c(0.5, 0.0)], &tol()).unwrap();
        assert_eq!(v[0][(0, 0)], c(0.25, 0.0));
        assert_eq!(v[1][(0, 0)], c(0.125, 0.0));
        let p = matrix_ball(2, 2).unwrap();
        assert_eq!(p.dim(), 4);
        assert_eq!(p.shapes(), vec![(2, 2)]);
        let p = preset("ball_rowcol", &PresetParams { n: Some(3), ..Default::default() }).unwrap();
        assert_eq!(p.shapes(), vec![(1, 3), (3, 1)]);
    }

    #[test]
    fn interior_samples_are_inside_every_preset() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for name in PRESET_NAMES {
            let p = preset(name, &PresetParams::default()).unwrap();
            let pts = sample_interior(&p, 100, 1e-6, &mut rng, &tol());
            assert_eq!(pts.len(), 100, "{name}");
            for z in &pts {
                for v in p.eval_all(z, &tol()).unwrap() {
                    assert!(op_norm(&v) < 1.0, "{name}");
                }
            }
        }
    }

    #[test]
    fn joint_spectrum_of_similar_diagonals() {
        let s = CMatrix::from_real(3, 3, &[1.0, 0.3, 0.0, 0.1, 1.0, 0.2, 0.0, -0.4, 1.0]);
        let s_inv = s.inverse().unwrap();
        let d1 = [c(0.1, 0.2), c(-0.3, 0.0), c(0.5, -0.1)];
        let d2 = [c(0.0, 0.4), c(0.2, 0.2), c(-0.6, 0.0)];
        let t: Vec<CMatrix> = [d1, d2]
            .iter()
            .map(|d| &(&s * &CMatrix::diag(d)) * &s_inv)
            .collect();
        let mut pts = joint_spectrum(&t, 1, &tol()).unwrap();
        pts.sort_by(|a, b| a[0].re.total_cmp(&b[0].re));
        let mut want: Vec<Vec<C64>> = (0..3).map(|i| vec![d1[i], d2[i]]).collect();
        want.sort_by(|a, b| a[0].re.total_cmp(&b[0].re));
        for (a, b) in pts.iter().zip(&want) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).norm() < 1e-10);
            }
        }
        let p = polydisk(2).unwrap();
        let m = spectrum_margin(&p, &t, 1, &tol()).unwrap();
        assert!((m - 0.4).abs() < 1e-10);
    }
}
