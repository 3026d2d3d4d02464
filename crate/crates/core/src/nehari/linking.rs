use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::math::{dot, powf};
use crate::optimize::{armijo, bfgs, bisect_predicate, BfgsOptions};
use crate::system::{CoupledSystem, Functional, SpectralSplit};

/// Which norm defines the sphere `‖u‖ = ρ` in `X⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereNorm {
    /// `‖u‖² = Σ γ_k c_k²`, the gradient norm.
    H1,
    /// `Σ c_k²`, the `L²` norm of the coefficients.
    Coefficient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereEstimate {
    /// Running minimum of `J` over the sampled and descended sphere points.
    pub value: f64,
    pub argmin: Vec<f64>,
    /// Tangential gradient norm at `argmin`; small means a stationary point on the sphere.
    pub stationarity: f64,
    pub samples: usize,
}

fn sphere_weights(sys: &CoupledSystem, norm: SphereNorm) -> Vec<f64> {
    match norm {
        SphereNorm::H1 => sys.metric().to_vec(),
        SphereNorm::Coefficient => vec![1.0; sys.len()],
    }
}

fn normalize(x: &mut [f64], w: &[f64], rho: f64) {
    let n = crate::math::weighted_norm(x, w);
    x.iter_mut().for_each(|v| *v *= rho / n);
}

/// Riemannian gradient in the `w`-metric, restricted to the plus indices.
fn tangent_gradient(g: &[f64], x: &[f64], w: &[f64], plus: &[usize], rho: f64) -> Vec<f64> {
    let mut r = vec![0.0; x.len()];
    let radial = plus.iter().map(|&k| g[k] * x[k]).sum::<f64>() / (rho * rho);
    for &k in plus {
        r[k] = g[k] / w[k] - radial * x[k];
    }
    r
}

/// Upper estimate of `inf{J(u) : u ∈ X⁺, ‖u‖ = ρ}` from seeded random points,
/// each followed by projected descent on the sphere.
pub fn sphere_inf(
    sys: &CoupledSystem,
    split: &SpectralSplit,
    rho: f64,
    samples: usize,
    norm: SphereNorm,
    seed: u64,
) -> Result<SphereEstimate> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid!("sphere radius must be positive, got {rho}"));
    }
    if samples == 0 {
        return Err(invalid!("sample budget must be positive"));
    }
    let plus = split.plus_flat();
    if plus.is_empty() {
        return Err(Error::Precondition("X+ is empty in this truncation".into()));
    }
    let w = sphere_weights(sys, norm);
    let step0 = initial_step(sys.shifts(), &w, &plus);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..samples {
        let mut x = vec![0.0; sys.len()];
        for &k in &plus {
            x[k] = rng.random_range(-1.0..1.0);
        }
        normalize(&mut x, &w, rho);
        let mut e = sys.energy(&x);
        for _ in 0..200 {
            let g = sys.gradient(&x);
            let r = tangent_gradient(&g, &x, &w, &plus, rho);
            let slope = -dot(&r, &g);
            if slope.abs() <= 1e-14 * rho * rho {
                break;
            }
            let trial = |s: f64| {
                let mut y: Vec<f64> = x.iter().zip(&r).map(|(a, b)| a - s * b).collect();
                normalize(&mut y, &w, rho);
                y
            };
            match armijo(|s| sys.energy(&trial(s)), e, slope, step0, 1e-4, 1e-14) {
                Some((s, v)) => {
                    x = trial(s);
                    e = v;
                }
                None => break,
            }
        }
        if best.as_ref().is_none_or(|(b, _)| e < *b) {
            best = Some((e, x));
        }
    }
    let (value, argmin) = best.expect("samples > 0");
    let g = sys.gradient(&argmin);
    let r = tangent_gradient(&g, &argmin, &w, &plus, rho);
    Ok(SphereEstimate {
        value,
        stationarity: crate::math::weighted_norm(&r, &w),
        argmin,
        samples,
    })
}

/// Inverse of the largest `shift/weight` ratio: the natural first step length.
fn initial_step(shifts: &[f64], w: &[f64], plus: &[usize]) -> f64 {
    1.0 / plus.iter().map(|&k| shifts[k] / w[k]).fold(f64::MIN_POSITIVE, f64::max)
}

/// `max J_λ` over `Z_m = {(w, w) : w ∈ span(e_1..e_m)}`; exactly 0 when
/// `γ_m ≤ (κ₁+κ₂)/2`.
pub fn zm_sup(sys: &CoupledSystem, m: usize, lambda: f64) -> Result<f64> {
    let n = sys.modes();
    if m == 0 || m > n {
        return Err(invalid!("m = {m} must lie in 1..={n}"));
    }
    let sys = sys.with_lambda(lambda)?;
    let params = sys.params();
    let gamma_m = sys.basis().eigenvalue(m - 1)?;
    if gamma_m <= 0.5 * (params.kappa1 + params.kappa2) {
        return Ok(0.0);
    }
    let lift = |c: &[f64]| {
        let mut x = vec![0.0; 2 * n];
        x[..m].copy_from_slice(c);
        x[n..n + m].copy_from_slice(c);
        x
    };
    let neg = |c: &[f64]| -sys.energy(&lift(c));
    let neg_grad = |c: &[f64]| {
        let g = sys.gradient(&lift(c));
        (0..m).map(|k| -(g[k] + g[n + k])).collect::<Vec<f64>>()
    };
    let p = params.p;
    let ray_seed = |dir: &[f64]| -> Option<Vec<f64>> {
        let x = lift(dir);
        let b = sys.quadratic(&x);
        let d = sys.ray_denominator(&x);
        (b > 0.0 && d > 0.0).then(|| {
            let t = powf(b / d, 1.0 / (p - 2.0));
            dir.iter().map(|v| t * v).collect()
        })
    };
    let mut seeds: Vec<Vec<f64>> = Vec::new();
    for j in 0..m {
        let mut d = vec![0.0; m];
        d[j] = 1.0;
        seeds.extend(ray_seed(&d));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + m as u64);
    for _ in 0..(2 * m).max(4) {
        let d: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        seeds.extend(ray_seed(&d));
    }
    let mut best = 0.0_f64;
    for s in seeds {
        let r = bfgs(neg, neg_grad, &s, BfgsOptions { max_iter: 400, grad_tol: 1e-11 });
        best = best.max(-r.value);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    /// Midpoint of the final bracket; 0 when the bound holds for every λ > 0.
    pub lambda: f64,
    pub lo: f64,
    pub hi: f64,
    pub evaluations: usize,
}

/// Smallest λ (up to the bracket) with `zm_sup(m, λ) < c₀`.
pub fn lambda_threshold(sys: &CoupledSystem, m: usize, c0: f64) -> Result<ThresholdResult> {
    if !(c0 > 0.0) {
        return Err(invalid!("c0 must be positive, got {c0}"));
    }
    let params = sys.params();
    let gamma_m = sys
        .basis()
        .eigenvalue(m.checked_sub(1).ok_or_else(|| invalid!("m must be at least 1"))?)?;
    let zero = ThresholdResult {
        lambda: 0.0,
        lo: 0.0,
        hi: 0.0,
        evaluations: 0,
    };
    if gamma_m <= 0.5 * (params.kappa1 + params.kappa2) {
        return Ok(zero);
    }
    let mut evaluations = 0;
    let mut below = |lambda: f64| -> Result<bool> {
        evaluations += 1;
        Ok(zm_sup(sys, m, lambda)? < c0)
    };
    let tiny = 1e-9;
    if below(tiny)? {
        return Ok(ThresholdResult { evaluations: 1, ..zero });
    }
    let mut hi = 1.0;
    let mut lo = tiny;
    let mut doublings = 0;
    while !below(hi)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::BracketFailure(alloc::format!(
                "zm_sup stays above c0 = {c0:e} up to λ = {hi:e}"
            )));
        }
    }
    let (lo, hi) = bisect_predicate(&mut below, lo, hi, 1e-4, 200)?;
    Ok(ThresholdResult {
        lambda: 0.5 * (lo + hi),
        lo,
        hi,
        evaluations,
    })
}
