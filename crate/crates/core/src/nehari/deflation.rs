use alloc::vec::Vec;

use nalgebra::DVector;

use super::ground::{coupled_seeds, C0Info, SolverConfig};
use super::{classify_masses, orbit_distance, orbit_nearest, project_flat, Classification, CriticalPoint, Subspaces, PLUS_FLOOR};
use crate::error::{invalid, Result};
use crate::math::dot;
use crate::system::{CoupledSystem, Functional, PairField, SpectralSplit};

/// Orbits found below `c₀`, sorted by energy; orbit ids follow that order.
#[derive(Debug, Clone)]
pub struct MultiplicityReport {
    pub orbits: Vec<CriticalPoint>,
    pub requested: usize,
    pub starts: usize,
    /// Converged runs, including ones rejected as outside `(0, c₀)`.
    pub converged: usize,
    pub newton_steps: usize,
}

/// `M(x) = Π_j (d_j⁻² + shift)` with `d_j` the orbit distance to known
/// point `j`; returns `log M` and its gradient.
fn deflation(x: &[f64], known: &[Vec<f64>], shift: f64) -> (f64, Vec<f64>) {
    let mut log_m = 0.0;
    let mut grad = alloc::vec![0.0; x.len()];
    let m = x.len() / 2;
    for k in known {
        let (d, s1, s2) = orbit_nearest(x, k);
        let d2 = d * d;
        log_m += crate::math::ln(1.0 / d2 + shift);
        let coef = -2.0 / (d2 * (1.0 + shift * d2));
        for i in 0..x.len() {
            let s = if i < m { s1 } else { s2 };
            grad[i] += coef * (x[i] - s * k[i]);
        }
    }
    (log_m, grad)
}

/// Newton on the deflated residual `M(x) J'(x)`. Returns the converged point
/// and the step count.
fn deflated_newton(
    sys: &CoupledSystem,
    x0: &[f64],
    known: &[Vec<f64>],
    cfg: &SolverConfig,
) -> (Option<Vec<f64>>, usize) {
    let mut x = x0.to_vec();
    let mut g = sys.gradient(&x);
    let mut gn = sys.dual_norm(&g);
    let (mut log_m, mut grad_log_m) = deflation(&x, known, cfg.deflation_shift);
    for it in 0..cfg.max_deflated_iter {
        if gn <= cfg.tol {
            return (Some(x), it);
        }
        let h = sys.hessian(&x);
        let Some(delta) = h.lu().solve(&-DVector::from_column_slice(&g)) else {
            return (None, it);
        };
        let denom = 1.0 - dot(&grad_log_m, delta.as_slice());
        if !(denom.abs() > 1e-12) {
            return (None, it);
        }
        let scale = 1.0 / denom;
        let merit = log_m + crate::math::ln(gn);
        let mut step = 1.0;
        let mut accepted = false;
        while step >= 1.0 / 1024.0 {
            let y: Vec<f64> = x
                .iter()
                .zip(delta.iter())
                .map(|(a, d)| a + step * scale * d)
                .collect();
            let gy = sys.gradient(&y);
            let ny = sys.dual_norm(&gy);
            let (lm, glm) = deflation(&y, known, cfg.deflation_shift);
            let my = lm + crate::math::ln(ny);
            if ny.is_finite() && my < merit + crate::math::ln(1.0 - 1e-4 * step) {
                x = y;
                g = gy;
                gn = ny;
                log_m = lm;
                grad_log_m = glm;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return ((gn <= cfg.tol).then_some(x), it);
        }
    }
    ((gn <= cfg.tol).then_some(x), cfg.max_deflated_iter)
}

/// Best-effort search for `k` distinct sign orbits with energy in `(0, c₀)`.
/// The trivial and semitrivial solutions are deflated from the start; every
/// converged point is deflated afterwards.
pub fn multiplicity_search(
    sys: &CoupledSystem,
    split: &SpectralSplit,
    c0: &C0Info,
    k: usize,
    budget: usize,
    cfg: &SolverConfig,
) -> Result<MultiplicityReport> {
    cfg.validate()?;
    if k == 0 {
        return Err(invalid!("target orbit count k must be at least 1"));
    }
    let sub = Subspaces::of_split(split);
    let m = sys.modes();
    let [s1, s2] = c0.semitrivial_flat();
    let mut known: Vec<Vec<f64>> = alloc::vec![alloc::vec![0.0; 2 * m], s1, s2];
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut report = MultiplicityReport {
        orbits: Vec::new(),
        requested: k,
        starts: 0,
        converged: 0,
        newton_steps: 0,
    };
    let bound = c0.b_bound();
    for seed in coupled_seeds(m, cfg, Some(c0)) {
        if found.len() >= k || report.starts >= budget {
            break;
        }
        if sub.plus_norm(sys, &seed) <= PLUS_FLOOR * sys.h1_norm(&seed) {
            continue;
        }
        let Ok(start) = project_flat(sys, &sub, &seed) else {
            continue;
        };
        report.starts += 1;
        let (result, steps) = deflated_newton(sys, &start, &known, cfg);
        report.newton_steps += steps;
        let Some(x) = result else {
            continue;
        };
        report.converged += 1;
        if known.iter().any(|q| orbit_distance(&x, q) < cfg.dedup_tol) {
            continue;
        }
        known.push(x.clone());
        let e = sys.energy(&x);
        let pi = sys.power_integrals_flat(&x);
        let b = sys.quadratic(&x);
        if e > 0.0
            && e < c0.c0
            && b > 0.0
            && b < bound
            && classify_masses(pi.p1, pi.p2) == Classification::FullyNontrivial
        {
            found.push(x);
        }
    }
    let mut points = found
        .iter()
        .map(|x| CriticalPoint::evaluate(sys, PairField::from_flat(sys.basis().clone(), x)?, 0))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    for (i, p) in points.iter_mut().enumerate() {
        p.orbit_id = i;
    }
    report.orbits = points;
    Ok(report)
}
