use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{project_flat, CriticalPoint, Subspaces, PLUS_FLOOR};
use crate::error::{invalid, Error, Result};
use crate::math::dot;
use crate::optimize::armijo;
use crate::spectral::ScalarField;
use crate::system::{Component, CoupledSystem, Functional, PairField, ScalarProblem, SpectralSplit};

/// Knobs shared by the ground-state, c₀ and multiplicity drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Acceptance threshold on the dual gradient norm.
    pub tol: f64,
    pub max_descent_iter: usize,
    /// Dual gradient norm below which Newton polishing is attempted.
    pub newton_switch: f64,
    pub max_newton_iter: usize,
    /// Seeds `(e_j, ±e_j)` use the first `seed_modes` modes.
    pub seed_modes: usize,
    pub random_starts: usize,
    /// Random seeds live on the first `noise_modes` modes of each component.
    pub noise_modes: usize,
    /// `δ` in the cross seeds `(w̄₁, δw̄₂)`.
    pub cross_delta: f64,
    pub seed: u64,
    pub dedup_tol: f64,
    pub deflation_shift: f64,
    pub max_deflated_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_descent_iter: 4000,
            newton_switch: 1e-3,
            max_newton_iter: 60,
            seed_modes: 4,
            random_starts: 8,
            noise_modes: 4,
            cross_delta: 0.5,
            seed: 0,
            dedup_tol: 1e-4,
            deflation_shift: 1.0,
            max_deflated_iter: 100,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.tol, self.newton_switch, self.dedup_tol, self.deflation_shift];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid!("solver tolerances and deflation shift must be positive"));
        }
        if self.max_descent_iter == 0 || self.max_newton_iter == 0 || self.max_deflated_iter == 0 {
            return Err(invalid!("iteration budgets must be positive"));
        }
        if !self.cross_delta.is_finite() {
            return Err(invalid!("cross_delta must be finite"));
        }
        Ok(())
    }
}

/// Full-gradient Newton iteration with residual backtracking. Returns the
/// point once the dual gradient norm drops below `tol`.
pub fn newton_polish<F: Functional>(f: &F, x0: &[f64], tol: f64, max_iter: usize) -> Option<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut g = f.gradient(&x);
    let mut gn = f.dual_norm(&g);
    for _ in 0..max_iter {
        if gn <= tol {
            return Some(x);
        }
        let h = f.hessian(&x);
        let delta = h.lu().solve(&-DVector::from_column_slice(&g))?;
        let mut step = 1.0;
        let mut accepted = false;
        while step >= 1.0 / 64.0 {
            let y: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a + step * d).collect();
            let gy = f.gradient(&y);
            let ny = f.dual_norm(&gy);
            if ny.is_finite() && ny < (1.0 - 1e-4 * step) * gn {
                x = y;
                g = gy;
                gn = ny;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return (gn <= tol).then_some(x);
        }
    }
    (gn <= tol).then_some(x)
}

/// Steepest descent of the reduced functional `u⁺ ↦ max J(t u⁺ + v)` with
/// reprojection after each step and Newton polish near convergence.
/// Returns the critical point and the number of descent steps taken.
pub fn reduced_descent<F: Functional>(
    f: &F,
    sub: &Subspaces,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, usize)> {
    let mut x = project_flat(f, sub, x0)?;
    let mut e = f.energy(&x);
    let shifts = f.shifts();
    let mut switch = cfg.newton_switch;
    let mut step: f64 = 1.0;
    for it in 0..cfg.max_descent_iter {
        let g = f.gradient(&x);
        let gn = f.dual_norm(&g);
        if gn <= cfg.tol {
            return Ok((x, it));
        }
        if gn <= switch {
            if let Some(y) = newton_polish(f, &x, cfg.tol, cfg.max_newton_iter) {
                return Ok((y, it));
            }
            switch *= 0.1;
        }
        let mut d = vec![0.0; x.len()];
        for &k in &sub.plus {
            d[k] = -g[k] / shifts[k];
        }
        let slope = dot(&d, &g);
        let trial = |s: f64| -> Option<Vec<f64>> {
            let y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + s * b).collect();
            project_flat(f, sub, &y).ok()
        };
        let accepted = armijo(
            |s| trial(s).map_or(f64::INFINITY, |y| f.energy(&y)),
            e,
            slope,
            (2.0 * step).min(1.0),
            1e-4,
            1e-12,
        );
        match accepted.and_then(|(s, v)| trial(s).map(|y| (s, v, y))) {
            Some((s, v, y)) => {
                x = y;
                e = v;
                step = s;
            }
            None => {
                return newton_polish(f, &x, cfg.tol, cfg.max_newton_iter)
                    .map(|y| (y, it))
                    .ok_or_else(|| {
                        Error::ConvergenceFailure(format!("descent stalled at gradient norm {gn:e}"))
                    });
            }
        }
    }
    Err(Error::ConvergenceFailure("descent hit the iteration cap".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct StartStats {
    pub starts: usize,
    pub converged: usize,
    pub descent_steps: usize,
}

/// Run the reduced descent from every seed; keep the lowest positive energy.
pub(crate) fn multistart<F: Functional>(
    f: &F,
    sub: &Subspaces,
    seeds: &[Vec<f64>],
    cfg: &SolverConfig,
) -> (Option<(Vec<f64>, f64)>, StartStats) {
    let mut stats = StartStats::default();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for seed in seeds {
        if sub.plus_norm(f, seed) <= PLUS_FLOOR * f.h1_norm(seed) {
            continue;
        }
        stats.starts += 1;
        let Ok((x, steps)) = reduced_descent(f, sub, seed, cfg) else {
            continue;
        };
        stats.descent_steps += steps;
        let e = f.energy(&x);
        let scale = f.h1_norm(&x);
        if !(e > 1e-12 * scale * scale) {
            continue;
        }
        stats.converged += 1;
        if best.as_ref().is_none_or(|(_, b)| e < *b) {
            best = Some((x, e));
        }
    }
    (best, stats)
}

pub(crate) fn noise_seeds(len_per_component: usize, components: usize, cfg: &SolverConfig) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let active = cfg.noise_modes.clamp(1, len_per_component);
    (0..cfg.random_starts)
        .map(|_| {
            let mut x = vec![0.0; len_per_component * components];
            for c in 0..components {
                for k in 0..active {
                    x[c * len_per_component + k] = rng.random_range(-1.0..1.0);
                }
            }
            x
        })
        .collect()
}

/// `(e_j, ±e_j)`, then `(w̄₁, δw̄₂)` and `(δw̄₁, w̄₂)`, then seeded noise.
pub(crate) fn coupled_seeds(m: usize, cfg: &SolverConfig, c0: Option<&C0Info>) -> Vec<Vec<f64>> {
    let mut seeds = Vec::new();
    for j in 0..cfg.seed_modes.min(m) {
        for sign in [1.0, -1.0] {
            let mut x = vec![0.0; 2 * m];
            x[j] = 1.0;
            x[m + j] = sign;
            seeds.push(x);
        }
    }
    if let Some(info) = c0 {
        let (w1, w2) = (info.w[0].w.coeffs(), info.w[1].w.coeffs());
        let mut a = w1.to_vec();
        a.extend(w2.iter().map(|v| cfg.cross_delta * v));
        let mut b: Vec<f64> = w1.iter().map(|v| cfg.cross_delta * v).collect();
        b.extend_from_slice(w2);
        seeds.push(a);
        seeds.push(b);
    }
    seeds.extend(noise_seeds(m, 2, cfg));
    seeds
}

#[derive(Debug, Clone)]
pub struct GroundStateReport {
    pub point: CriticalPoint,
    /// `Some(J < c₀)` when a c₀ was supplied.
    pub below_c0: Option<bool>,
    pub starts: usize,
    pub converged: usize,
    pub descent_steps: usize,
}

/// Lowest positive-energy critical point found by multistart descent on the
/// Nehari set.
pub fn ground_state(
    sys: &CoupledSystem,
    split: &SpectralSplit,
    c0: Option<&C0Info>,
    cfg: &SolverConfig,
) -> Result<GroundStateReport> {
    cfg.validate()?;
    let sub = Subspaces::of_split(split);
    let seeds = coupled_seeds(sys.modes(), cfg, c0);
    let (best, stats) = multistart(sys, &sub, &seeds, cfg);
    let Some((x, _)) = best else {
        return Err(Error::ConvergenceFailure(format!(
            "no start converged ({} starts tried)",
            stats.starts
        )));
    };
    let point = CriticalPoint::evaluate(sys, PairField::from_flat(sys.basis().clone(), &x)?, 0)?;
    Ok(GroundStateReport {
        below_c0: c0.map(|c| point.energy < c.c0),
        point,
        starts: stats.starts,
        converged: stats.converged,
        descent_steps: stats.descent_steps,
    })
}

#[derive(Debug, Clone)]
pub struct ScalarCriticalPoint {
    pub w: ScalarField,
    pub energy: f64,
    pub grad_norm: f64,
    /// `B_i(w, w)`
    pub b_value: f64,
}

pub fn scalar_ground_state(
    problem: &ScalarProblem,
    sub: &Subspaces,
    cfg: &SolverConfig,
) -> Result<ScalarCriticalPoint> {
    cfg.validate()?;
    let m = problem.len();
    let mut seeds = Vec::new();
    for j in 0..cfg.seed_modes.min(m) {
        let mut x = vec![0.0; m];
        x[j] = 1.0;
        seeds.push(x);
    }
    seeds.extend(noise_seeds(m, 1, cfg));
    let (best, stats) = multistart(problem, sub, &seeds, cfg);
    let Some((x, energy)) = best else {
        return Err(Error::ConvergenceFailure(format!(
            "scalar problem: no start converged ({} starts tried)",
            stats.starts
        )));
    };
    let basis = problem.galerkin().basis().clone();
    Ok(ScalarCriticalPoint {
        energy,
        grad_norm: problem.dual_norm(&problem.gradient(&x)),
        b_value: problem.quadratic(&x),
        w: ScalarField::new(Arc::clone(&basis), x)?,
    })
}

/// `c₀ = min{J₁(w̄₁), J₂(w̄₂)}` with the scalar ground states.
#[derive(Debug, Clone)]
pub struct C0Info {
    pub c0: f64,
    pub w: [ScalarCriticalPoint; 2],
}

impl C0Info {
    /// `min{B₁(w̄₁,w̄₁), B₂(w̄₂,w̄₂)}`
    pub fn b_bound(&self) -> f64 {
        self.w[0].b_value.min(self.w[1].b_value)
    }

    /// The semitrivial solutions `(w̄₁, 0)` and `(0, w̄₂)` as flat vectors.
    pub fn semitrivial_flat(&self) -> [Vec<f64>; 2] {
        let m = self.w[0].w.coeffs().len();
        let mut a = self.w[0].w.coeffs().to_vec();
        a.resize(2 * m, 0.0);
        let mut b = vec![0.0; m];
        b.extend_from_slice(self.w[1].w.coeffs());
        [a, b]
    }
}

pub fn c0_threshold(sys: &CoupledSystem, split: &SpectralSplit, cfg: &SolverConfig) -> Result<C0Info> {
    let solve = |c: Component| {
        scalar_ground_state(&sys.scalar(c), &Subspaces::of_component(split, c), cfg)
    };
    let w1 = solve(Component::First)?;
    let w2 = solve(Component::Second)?;
    Ok(C0Info {
        c0: w1.energy.min(w2.energy),
        w: [w1, w2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{powi, PI};
    use crate::nehari::{classify, Classification};
    use crate::spectral::{BoxDomain, Galerkin, SineBasis};
    use crate::system::SystemParams;

    fn system(kappa: f64, lambda: f64, mu: [f64; 2]) -> CoupledSystem {
        let basis = Arc::new(SineBasis::new(BoxDomain::unit(1).unwrap(), vec![12]).unwrap());
        let gal = Arc::new(Galerkin::with_default_grid(basis).unwrap());
        let sp = SystemParams::new(1, [kappa, kappa], mu, lambda, 2.0, 2.0).unwrap();
        CoupledSystem::new(sp, gal).unwrap()
    }

    #[test]
    fn c0_symmetric_and_below_e1_ray() {
        let sys = system(0.0, 1.0, [1.0, 1.0]);
        let split = sys.default_split().unwrap();
        let info = c0_threshold(&sys, &split, &SolverConfig::default()).unwrap();
        assert!((info.w[0].energy - info.w[1].energy).abs() < 1e-9);
        assert!(info.c0 <= powi(PI, 4) / 6.0);
        assert!(info.w[0].grad_norm < 1e-10);
        // Nehari identity for the scalar ground state.
        assert!((info.c0 - 0.25 * info.w[0].b_value).abs() < 1e-8 * info.c0);
    }

    #[test]
    fn c0_decreases_with_mu() {
        let cfg = SolverConfig::default();
        let a = system(0.0, 1.0, [1.0, 1.0]);
        let b = system(0.0, 1.0, [2.0, 1.0]);
        let ca = c0_threshold(&a, &a.default_split().unwrap(), &cfg).unwrap();
        let cb = c0_threshold(&b, &b.default_split().unwrap(), &cfg).unwrap();
        assert!(cb.w[0].energy < ca.w[0].energy);
    }

    #[test]
    fn ground_state_definite_below_c0() {
        let sys = system(0.0, 50.0, [1.0, 1.0]);
        let split = sys.default_split().unwrap();
        let cfg = SolverConfig::default();
        let info = c0_threshold(&sys, &split, &cfg).unwrap();
        let gs = ground_state(&sys, &split, Some(&info), &cfg).unwrap();
        let pt = &gs.point;
        assert_eq!(gs.below_c0, Some(true));
        assert!(pt.energy > 0.0 && pt.energy < info.c0);
        assert!(pt.grad_norm < 1e-8);
        assert!(pt.energy_identity_error(4.0) < 1e-6);
        assert!(pt.b_value > 0.0 && pt.b_value < info.b_bound());
        assert_eq!(classify(pt, info.c0).unwrap(), Classification::FullyNontrivial);
    }

    #[test]
    fn ground_state_indefinite() {
        let sys = system(15.0, 50.0, [1.0, 1.0]);
        let split = sys.default_split().unwrap();
        let cfg = SolverConfig::default();
        let info = c0_threshold(&sys, &split, &cfg).unwrap();
        let gs = ground_state(&sys, &split, Some(&info), &cfg).unwrap();
        let pt = &gs.point;
        assert!(pt.energy > 0.0 && pt.energy < info.c0, "{} vs {}", pt.energy, info.c0);
        assert!(pt.grad_norm < 1e-8);
        assert!(pt.energy_identity_error(4.0) < 1e-6);
        assert_eq!(pt.classification, Classification::FullyNontrivial);
    }
}
