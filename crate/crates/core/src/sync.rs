//! Synchronized solutions `(s·w, t·w)` built from a scalar solution `w` of
//! `-Δw - κw = |w|^{p-2}w` when both components share `κ`.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::{exp, ln, powf};
use crate::nehari::{Classification, CriticalPoint};
use crate::optimize::bisect_root;
use crate::spectral::ScalarField;
use crate::system::{CoupledSystem, Functional, PairField, ScalarProblem, SystemParams};

/// `h(r) = μ₁r^{p-2} + λαr^{α-2} - λβr^α - μ₂`
pub fn h(r: f64, params: &SystemParams) -> f64 {
    let SystemParams {
        mu1,
        mu2,
        lambda,
        alpha,
        beta,
        p,
        ..
    } = *params;
    mu1 * powf(r, p - 2.0) + lambda * alpha * powf(r, alpha - 2.0) - lambda * beta * powf(r, alpha) - mu2
}

/// `h > 0` near `r = 0`.
pub fn small_r_positive(params: &SystemParams) -> bool {
    params.alpha < 2.0 || (params.alpha == 2.0 && params.lambda > params.mu2 / 2.0)
}

/// `h < 0` for large `r`.
pub fn large_r_negative(params: &SystemParams) -> bool {
    params.beta < 2.0 || (params.beta == 2.0 && params.lambda > params.mu1 / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncRoot {
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootScan {
    pub roots: Vec<SyncRoot>,
    /// Both sign conditions hold, so a root exists by continuity.
    pub guaranteed: bool,
}

const SCAN_POINTS: usize = 4001;
const ROOT_TOL: f64 = 1e-12;

/// Sign changes of `h` on a log grid over `[lo, hi]`, refined by bisection.
/// Tangential roots are not detected.
pub fn find_roots(params: &SystemParams, lo: f64, hi: f64) -> Result<RootScan> {
    params.validate()?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(invalid!("root range must satisfy 0 < lo < hi, got [{lo}, {hi}]"));
    }
    let (a, b) = (ln(lo), ln(hi));
    let step = (b - a) / (SCAN_POINTS - 1) as f64;
    let f = |r: f64| h(r, params);
    let mut roots = Vec::new();
    let mut prev_r = lo;
    let mut prev = f(lo);
    for i in 1..SCAN_POINTS {
        let r = if i == SCAN_POINTS - 1 { hi } else { exp(a + step * i as f64) };
        let v = f(r);
        if prev == 0.0 {
            roots.push(prev_r);
        } else if v != 0.0 && prev.signum() != v.signum() {
            if let Some(root) = bisect_root(f, prev_r, r, 1e-16 * r) {
                roots.push(root);
            }
        }
        prev_r = r;
        prev = v;
    }
    if prev == 0.0 {
        roots.push(hi);
    }
    let roots = roots
        .into_iter()
        .map(|r| amplitudes(r, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(RootScan {
        roots,
        guaranteed: small_r_positive(params) && large_r_negative(params),
    })
}

/// `t = (μ₂ + λβr^α)^{-1/(p-2)}`, `s = r·t`.
pub fn amplitudes(r: f64, params: &SystemParams) -> Result<SyncRoot> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid!("root must be positive, got {r}"));
    }
    let residual = h(r, params);
    let scale = params.mu1 * powf(r, params.p - 2.0) + params.mu2;
    if residual.abs() > ROOT_TOL * scale.max(1.0) {
        return Err(Error::Inconsistency(alloc::format!("h({r}) = {residual:e} is not a root")));
    }
    let t = powf(params.mu2 + params.lambda * params.beta * powf(r, params.alpha), -1.0 / (params.p - 2.0));
    Ok(SyncRoot {
        r,
        s: r * t,
        t,
        residual,
    })
}

/// Left-hand sides of the two algebraic Euler equations; both equal 1 at a root.
pub fn euler_identities(root: &SyncRoot, params: &SystemParams) -> [f64; 2] {
    let SystemParams {
        mu1,
        mu2,
        lambda,
        alpha,
        beta,
        p,
        ..
    } = *params;
    let (s, t) = (root.s, root.t);
    [
        mu1 * powf(s, p - 2.0) + lambda * alpha * powf(s, alpha - 2.0) * powf(t, beta),
        mu2 * powf(t, p - 2.0) + lambda * beta * powf(s, alpha) * powf(t, beta - 2.0),
    ]
}

#[derive(Debug, Clone)]
pub struct SyncSolution {
    pub point: CriticalPoint,
    /// Dual gradient norm of `w` for the unit-coefficient scalar problem.
    pub scalar_residual: f64,
}

/// Assembles `u = (s·w, t·w)` and evaluates it in the coupled system.
pub fn synchronized_solution(sys: &CoupledSystem, w: &ScalarField, root: &SyncRoot) -> Result<SyncSolution> {
    let params = sys.params();
    if params.kappa1 != params.kappa2 {
        return Err(Error::Precondition(alloc::format!(
            "synchronized solutions need kappa1 == kappa2, got {} and {}",
            params.kappa1,
            params.kappa2
        )));
    }
    let scalar = ScalarProblem::new(params.kappa1, 1.0, params.p, sys.galerkin().clone());
    scalar.energy_of(w)?;
    let scalar_residual = scalar.dual_norm(&scalar.gradient(w.coeffs()));
    let u = PairField::new(w.scaled(root.s), w.scaled(root.t))?;
    let point = CriticalPoint::evaluate(sys, u, 0)?;
    if point.classification != Classification::FullyNontrivial {
        return Err(Error::Inconsistency("synchronized pair has a vanishing component".into()));
    }
    Ok(SyncSolution { point, scalar_residual })
}
