//! Browser bindings for three small explorations: the disk two-ways norm
//! comparison, the k-idempotent norm check, and domain membership grids.
//!
//! Each binding is a thin wrapper over a plain function returning JSON text,
//! so the logic is testable off the browser.

use agpk_core::idempotent::{algebra_norm, multiplier_norm_via_kernel, random_idempotents};
use agpk_core::json::{self, DomainJson};
use agpk_core::norm::{quotient_norm, NormOptions};
use agpk_core::pick::pick_min_eig;
use agpk_core::presentation::sampling_box;
use agpk_core::{CMatrix, Tolerances, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Deserialize)]
struct DiskInput {
    /// `[re, im]` per point.
    points: Vec<[f64; 2]>,
    targets: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct DiskReport {
    lower: f64,
    upper: f64,
    pick_min_eig: f64,
    feasible_at_one: bool,
    iterations: usize,
}

/// Quotient norm of a disk interpolation problem, next to the Pick matrix
/// verdict at level 1.
pub fn disk_norm_json(input: &str) -> Result<String, String> {
    let tol = Tolerances::default();
    let inp: DiskInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let z: Vec<C64> = inp.points.iter().map(|p| C64::new(p[0], p[1])).collect();
    let w: Vec<C64> = inp.targets.iter().map(|p| C64::new(p[0], p[1])).collect();
    let lam = pick_min_eig(&z, &w, 1.0, &tol).map_err(|e| e.to_string())?;
    let disk = agpk_core::preset("disk", &Default::default()).map_err(|e| e.to_string())?;
    let pts: Vec<Vec<C64>> = z.iter().map(|&x| vec![x]).collect();
    let targets: Vec<CMatrix> = w.iter().map(|&x| CMatrix::scalar(x)).collect();
    let r = quotient_norm(&disk, &pts, &targets, &NormOptions::default(), &tol).map_err(|e| e.to_string())?;
    Ok(json::to_string(
        &DiskReport {
            lower: r.lower,
            upper: r.upper,
            pick_min_eig: lam,
            feasible_at_one: lam >= -tol.pick,
            iterations: r.iterations,
        },
        None,
    ))
}

#[derive(Serialize)]
struct IdemReport {
    k: usize,
    d: usize,
    coeffs: Vec<[f64; 2]>,
    algebra_norm: f64,
    multiplier_norm: f64,
    deviation: f64,
}

/// A random k-idempotent algebra in dimension `d` with random scalar
/// coefficients; both norms of the resulting element.
pub fn idempotent_json(k: usize, d: usize, cond: f64, seed: u64) -> Result<String, String> {
    let tol = Tolerances::default();
    let alg = random_idempotents(k, d, seed, cond).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let a: Vec<C64> = (0..k)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let am: Vec<CMatrix> = a.iter().map(|&x| CMatrix::scalar(x)).collect();
    let n = algebra_norm(&alg, &am).map_err(|e| e.to_string())?;
    let m = multiplier_norm_via_kernel(&alg, &a, 1e-9, &tol).map_err(|e| e.to_string())?;
    Ok(json::to_string(
        &IdemReport {
            k,
            d,
            coeffs: a.iter().map(|&x| json::complex(x)).collect(),
            algebra_norm: n,
            multiplier_norm: m,
            deviation: (n - m).abs(),
        },
        None,
    ))
}

#[derive(Serialize)]
struct Grid {
    name: String,
    lo: f64,
    hi: f64,
    size: usize,
    /// Row-major from the top-left corner; `null` at poles.
    margins: Vec<Option<f64>>,
}

/// Domain margins on a `size × size` grid of the sampling box. Only planar
/// domains (one variable) can be drawn.
pub fn membership_grid_json(domain: &str, size: usize) -> Result<String, String> {
    let tol = Tolerances::default();
    let d: DomainJson = serde_json::from_str(domain).map_err(|e| e.to_string())?;
    let p = d.build().map_err(|e| e.to_string())?;
    if p.dim() != 1 {
        return Err(format!("{} lives in C^{}; only planar domains can be drawn", p.name(), p.dim()));
    }
    if !(2..=400).contains(&size) {
        return Err(format!("grid size must be in 2..=400, got {size}"));
    }
    let (lo, hi) = sampling_box(&p);
    let step = (hi - lo) / (size - 1) as f64;
    let mut margins = Vec::with_capacity(size * size);
    for row in 0..size {
        for col in 0..size {
            let z = C64::new(lo + col as f64 * step, hi - row as f64 * step);
            margins.push(p.in_domain(&[z], &tol).ok().map(|m| m.margin));
        }
    }
    Ok(json::to_string(
        &Grid {
            name: p.name().to_string(),
            lo,
            hi,
            size,
            margins,
        },
        None,
    ))
}

#[wasm_bindgen]
pub fn disk_norm(input: &str) -> Result<String, JsValue> {
    disk_norm_json(input).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn idempotent_check(k: usize, d: usize, cond: f64, seed: u32) -> Result<String, JsValue> {
    idempotent_json(k, d, cond, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn membership_grid(domain: &str, size: usize) -> Result<String, JsValue> {
    membership_grid_json(domain, size).map_err(|e| JsValue::from_str(&e))
}
