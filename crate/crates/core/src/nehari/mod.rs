//! The generalized Nehari set, ground states, deflated multiplicity search and
//! the linking quantities on `X⁺` and on the diagonal subspaces `Z_m`.

mod deflation;
mod ground;
mod linking;

pub use deflation::{multiplicity_search, MultiplicityReport};
pub use ground::{
    c0_threshold, ground_state, newton_polish, reduced_descent, scalar_ground_state, C0Info,
    GroundStateReport, ScalarCriticalPoint, SolverConfig,
};
pub use linking::{lambda_threshold, sphere_inf, zm_sup, SphereEstimate, SphereNorm, ThresholdResult};

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::math::{dot, powf, sqrt};
use crate::optimize::armijo;
use crate::system::{
    bilinear_bi, CoupledSystem, Component, Functional, PairField, ScalarProblem, SpectralSplit,
};

/// Relative size below which the `X⁺` part of a point counts as zero.
pub const PLUS_FLOOR: f64 = 1e-10;

/// Flat index sets of `X⁺` and `X̃` for some `Functional`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspaces {
    pub plus: Vec<usize>,
    pub tilde: Vec<usize>,
}

impl Subspaces {
    pub fn of_split(split: &SpectralSplit) -> Self {
        Self {
            plus: split.plus_flat(),
            tilde: split.tilde_flat(),
        }
    }

    pub fn of_component(split: &SpectralSplit, c: Component) -> Self {
        Self {
            plus: split.plus[c.index()].clone(),
            tilde: split.tilde(c),
        }
    }

    pub fn of_scalar(problem: &ScalarProblem, tol: f64) -> Self {
        let (plus, tilde) = problem.split(tol);
        Self { plus, tilde }
    }

    pub fn plus_part(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for &k in &self.plus {
            out[k] = x[k];
        }
        out
    }

    /// `X⁺` norm in the `D^{1,2}` metric.
    pub fn plus_norm<F: Functional>(&self, f: &F, x: &[f64]) -> f64 {
        let m = f.metric();
        sqrt(self.plus.iter().map(|&k| m[k] * x[k] * x[k]).sum())
    }

    fn check_outside_tilde<F: Functional>(&self, f: &F, x: &[f64]) -> Result<f64> {
        let plus = self.plus_norm(f, x);
        let total = f.h1_norm(x);
        if plus == 0.0 || plus <= PLUS_FLOOR * total {
            return Err(Error::InTildeSpace { plus_norm: plus });
        }
        Ok(plus)
    }
}

/// `J'(u)u` and `J'(u)v_j` over the standard basis `v_j` of `X̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct NehariResiduals {
    pub ray: f64,
    pub tilde: Vec<f64>,
}

impl NehariResiduals {
    pub fn max_abs(&self) -> f64 {
        self.tilde.iter().fold(self.ray.abs(), |m, v| m.max(v.abs()))
    }
}

pub fn residuals_flat<F: Functional>(f: &F, sub: &Subspaces, x: &[f64]) -> Result<NehariResiduals> {
    sub.check_outside_tilde(f, x)?;
    let g = f.gradient(x);
    Ok(NehariResiduals {
        ray: dot(&g, x),
        tilde: sub.tilde.iter().map(|&k| g[k]).collect(),
    })
}

pub fn nehari_residuals(
    sys: &CoupledSystem,
    split: &SpectralSplit,
    u: &PairField,
) -> Result<NehariResiduals> {
    sys.check_field(u)?;
    residuals_flat(sys, &Subspaces::of_split(split), &u.to_flat())
}

/// Maximize `(a, v) ↦ J(a x⁺ + v)` over `a > 0`, `v ∈ X̃`; the maximizer lies
/// on the Nehari set. With `X̃ = {0}` the ray maximum is closed form.
pub fn project_flat<F: Functional>(f: &F, sub: &Subspaces, x: &[f64]) -> Result<Vec<f64>> {
    sub.check_outside_tilde(f, x)?;
    let p = f.exponent();
    if sub.tilde.is_empty() {
        let b = f.quadratic(x);
        if b <= 0.0 {
            return Err(Error::NoProjection { b_value: b });
        }
        let d = f.ray_denominator(x);
        if !(d > 0.0) {
            return Err(Error::ConvergenceFailure("ray denominator is not positive".to_string()));
        }
        let t = powf(b / d, 1.0 / (p - 2.0));
        return Ok(x.iter().map(|v| t * v).collect());
    }
    let xp = sub.plus_part(x);
    let b = f.quadratic(&xp);
    let d = f.ray_denominator(&xp);
    if !(b > 0.0 && d > 0.0) {
        return Err(Error::ConvergenceFailure("degenerate ray in X+".to_string()));
    }
    let nt = sub.tilde.len();
    let metric = f.metric();
    let mut weights = Vec::with_capacity(nt + 1);
    let plus = sub.plus_norm(f, &xp);
    weights.push(plus * plus);
    weights.extend(sub.tilde.iter().map(|&k| metric[k]));

    let assemble = |z: &[f64]| -> Vec<f64> {
        let mut y: Vec<f64> = xp.iter().map(|v| z[0] * v).collect();
        for (j, &k) in sub.tilde.iter().enumerate() {
            y[k] += z[1 + j];
        }
        y
    };
    // Two starts: the X⁺ ray maximum with v = 0, and the point itself.
    let mut z = vec![0.0; nt + 1];
    z[0] = powf(b / d, 1.0 / (p - 2.0));
    let mut y = assemble(&z);
    let mut phi = f.energy(&y);
    let mut own = vec![1.0; nt + 1];
    for (j, &k) in sub.tilde.iter().enumerate() {
        own[1 + j] = x[k];
    }
    let y_own = assemble(&own);
    let phi_own = f.energy(&y_own);
    if phi_own > phi {
        z = own;
        y = y_own;
        phi = phi_own;
    }
    for _ in 0..400 {
        let gz = reduced_gradient(f, &y, &xp, &sub.tilde);
        let res = weighted_dual(&gz, &weights);
        if res <= 1e-13 * f.h1_norm(&y).max(1.0) {
            return Ok(y);
        }
        let h = f.hessian(&y);
        let hr = reduced_hessian(&h, &xp, &sub.tilde);
        let (dir, newton) = ascent_direction(hr, &gz, &weights);
        let trial = |s: f64| -> Vec<f64> { z.iter().zip(&dir).map(|(a, b)| a + s * b).collect() };
        // Close to the maximum energy differences drown in round-off; judge a
        // full Newton step by the residual instead.
        if newton {
            let zt = trial(1.0);
            if zt[0] > 0.0 {
                let yt = assemble(&zt);
                if reduced_residual(f, &yt, &xp, &sub.tilde, &weights) < 0.5 * res {
                    z = zt;
                    phi = f.energy(&yt);
                    y = yt;
                    continue;
                }
            }
        }
        let slope = dot(&dir, &gz);
        let step = armijo(
            |s| {
                let zt = trial(s);
                if zt[0] <= 0.0 {
                    f64::INFINITY
                } else {
                    -f.energy(&assemble(&zt))
                }
            },
            -phi,
            -slope,
            1.0,
            1e-4,
            1e-14,
        );
        match step {
            Some((s, v)) => {
                z = trial(s);
                y = assemble(&z);
                phi = -v;
            }
            None => {
                // Round-off floor: accept if the residual is already tiny.
                if res <= 1e-9 * f.h1_norm(&y).max(1.0) {
                    return Ok(y);
                }
                return Err(Error::ConvergenceFailure(alloc::format!(
                    "Nehari projection stalled at residual {res:e}"
                )));
            }
        }
    }
    Err(Error::ConvergenceFailure("Nehari projection hit the iteration cap".to_string()))
}

fn reduced_gradient<F: Functional>(f: &F, y: &[f64], xp: &[f64], tilde: &[usize]) -> Vec<f64> {
    let g = f.gradient(y);
    let mut gz = Vec::with_capacity(tilde.len() + 1);
    gz.push(dot(&g, xp));
    gz.extend(tilde.iter().map(|&k| g[k]));
    gz
}

fn weighted_dual(g: &[f64], weights: &[f64]) -> f64 {
    sqrt(g.iter().zip(weights).map(|(g, w)| g * g / w).sum())
}

fn reduced_residual<F: Functional>(f: &F, y: &[f64], xp: &[f64], tilde: &[usize], weights: &[f64]) -> f64 {
    weighted_dual(&reduced_gradient(f, y, xp, tilde), weights)
}

/// Newton direction for a maximum; when the Hessian is not negative definite
/// its eigenvalues are reflected to `-max(|θ|, floor)` (floor in the metric
/// `weights`), which keeps the step an ascent direction.
/// The flag reports whether the plain Newton step was used.
fn ascent_direction(hr: DMatrix<f64>, grad: &[f64], weights: &[f64]) -> (Vec<f64>, bool) {
    let g = DVector::from_column_slice(grad);
    if let Some(c) = (-hr.clone()).cholesky() {
        return (c.solve(&g).iter().copied().collect(), true);
    }
    // Symmetric scaling by the metric so the floor is dimensionless.
    let n = grad.len();
    let s: Vec<f64> = weights.iter().map(|w| 1.0 / sqrt(*w)).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| s[i] * hr[(i, j)] * s[j]);
    let eig = scaled.symmetric_eigen();
    let gs = DVector::from_fn(n, |i, _| s[i] * grad[i]);
    let coords = eig.eigenvectors.transpose() * gs;
    let floor = 1e-3 * eig.eigenvalues.iter().fold(1e-12_f64, |m, v| m.max(v.abs()));
    let mut d = DVector::<f64>::zeros(n);
    for (k, c) in coords.iter().enumerate() {
        let theta = eig.eigenvalues[k].abs().max(floor);
        d += eig.eigenvectors.column(k) * (c / theta);
    }
    ((0..n).map(|i| s[i] * d[i]).collect(), false)
}

fn reduced_hessian(h: &DMatrix<f64>, xp: &[f64], tilde: &[usize]) -> DMatrix<f64> {
    let nt = tilde.len();
    let hx = h * DVector::from_column_slice(xp);
    let mut r = DMatrix::<f64>::zeros(nt + 1, nt + 1);
    r[(0, 0)] = dot(xp, hx.as_slice());
    for (j, &k) in tilde.iter().enumerate() {
        r[(0, j + 1)] = hx[k];
        r[(j + 1, 0)] = hx[k];
        for (l, &m) in tilde.iter().enumerate() {
            r[(j + 1, l + 1)] = h[(k, m)];
        }
    }
    r
}

pub fn nehari_project(sys: &CoupledSystem, split: &SpectralSplit, u: &PairField) -> Result<PairField> {
    sys.check_field(u)?;
    let y = project_flat(sys, &Subspaces::of_split(split), &u.to_flat())?;
    PairField::from_flat(sys.basis().clone(), &y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Trivial,
    Semitrivial1,
    Semitrivial2,
    FullyNontrivial,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Classification::Trivial => "trivial",
            Classification::Semitrivial1 => "semitrivial-1",
            Classification::Semitrivial2 => "semitrivial-2",
            Classification::FullyNontrivial => "fully-nontrivial",
        }
    }
}

/// Component `i` counts as zero when `∫|u_i|^p < 1e-10 · max(1, ∫|u₁|^p + ∫|u₂|^p)`.
pub fn classify_masses(p1: f64, p2: f64) -> Classification {
    let floor = 1e-10 * (p1 + p2).max(1.0);
    match (p1 >= floor, p2 >= floor) {
        (false, false) => Classification::Trivial,
        (true, false) => Classification::Semitrivial1,
        (false, true) => Classification::Semitrivial2,
        (true, true) => Classification::FullyNontrivial,
    }
}

/// A converged solution with its diagnostics.
#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub u: PairField,
    pub energy: f64,
    pub grad_norm: f64,
    pub b_value: f64,
    pub b1: f64,
    pub b2: f64,
    /// `∫|u₁|^p`, `∫|u₂|^p`
    pub masses: [f64; 2],
    pub classification: Classification,
    pub orbit_id: usize,
}

impl CriticalPoint {
    pub fn evaluate(sys: &CoupledSystem, u: PairField, orbit_id: usize) -> Result<Self> {
        sys.check_field(&u)?;
        let x = u.to_flat();
        let params = sys.params();
        let b1 = bilinear_bi(Component::First, &u.u1, &u.u1, params)?;
        let b2 = bilinear_bi(Component::Second, &u.u2, &u.u2, params)?;
        let pi = sys.power_integrals_flat(&x);
        Ok(Self {
            energy: sys.energy(&x),
            grad_norm: sys.dual_norm(&sys.gradient(&x)),
            b_value: b1 + b2,
            b1,
            b2,
            masses: [pi.p1, pi.p2],
            classification: classify_masses(pi.p1, pi.p2),
            orbit_id,
            u,
        })
    }

    /// `|J(u) - (1/2 - 1/p) B(u,u)|` relative to `|J(u)|`.
    pub fn energy_identity_error(&self, p: f64) -> f64 {
        let rhs = (0.5 - 1.0 / p) * self.b_value;
        (self.energy - rhs).abs() / self.energy.abs().max(f64::MIN_POSITIVE)
    }
}

/// Mass classification, cross-checked against the energy window `(0, c₀)`,
/// where only fully nontrivial critical points can live.
pub fn classify(point: &CriticalPoint, c0: f64) -> Result<Classification> {
    let class = classify_masses(point.masses[0], point.masses[1]);
    if point.energy > 0.0 && point.energy < c0 && class != Classification::FullyNontrivial {
        return Err(Error::ClassificationContradiction {
            energy: point.energy,
            c0,
            found: class.name(),
        });
    }
    Ok(class)
}

/// Coefficient distance minimized over the four sign images of `b`.
pub fn orbit_distance(a: &[f64], b: &[f64]) -> f64 {
    orbit_nearest(a, b).0
}

/// `(distance, s1, s2)` for the sign image `(s1 b₁, s2 b₂)` nearest to `a`.
pub(crate) fn orbit_nearest(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let m = a.len() / 2;
    let mut best = (f64::INFINITY, 1.0, 1.0);
    for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let d1: f64 = a[..m].iter().zip(&b[..m]).map(|(x, y)| (x - s1 * y) * (x - s1 * y)).sum();
        let d2: f64 = a[m..].iter().zip(&b[m..]).map(|(x, y)| (x - s2 * y) * (x - s2 * y)).sum();
        let d = sqrt(d1 + d2);
        if d < best.0 {
            best = (d, s1, s2);
        }
    }
    best
}

/// Orbit ids: each point joins the orbit of the first earlier point within
/// `tol`, else opens a new one.
pub fn orbit_dedup(points: &[PairField], tol: f64) -> Result<Vec<usize>> {
    let Some(first) = points.first() else {
        return Ok(Vec::new());
    };
    if points.iter().any(|p| !p.u1.same_basis(&first.u1) || !p.u2.same_basis(&first.u1)) {
        return Err(Error::BasisMismatch);
    }
    let flats: Vec<Vec<f64>> = points.iter().map(|p| p.to_flat()).collect();
    let mut ids: Vec<usize> = Vec::with_capacity(points.len());
    let mut next = 0;
    for i in 0..flats.len() {
        let hit = (0..i).find(|&j| orbit_distance(&flats[i], &flats[j]) < tol);
        match hit {
            Some(j) => ids.push(ids[j]),
            None => {
                ids.push(next);
                next += 1;
            }
        }
    }
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{powi, PI};
    use crate::spectral::{BoxDomain, Galerkin, ScalarField, SineBasis};
    use crate::system::SystemParams;
    use alloc::sync::Arc;

    fn system(kappa: f64, lambda: f64, modes: usize) -> CoupledSystem {
        let basis = Arc::new(SineBasis::new(BoxDomain::unit(1).unwrap(), vec![modes]).unwrap());
        let gal = Arc::new(Galerkin::with_default_grid(basis).unwrap());
        let sp = SystemParams::new(1, [kappa, kappa], [1.0, 1.0], lambda, 2.0, 2.0).unwrap();
        CoupledSystem::new(sp, gal).unwrap()
    }

    fn e1_pair(sys: &CoupledSystem, scale: f64) -> PairField {
        let b = sys.basis().clone();
        PairField::new(ScalarField::unit(b.clone(), 0, scale).unwrap(), ScalarField::zeros(b)).unwrap()
    }

    #[test]
    fn ray_residual_of_unscaled_e1() {
        let sys = system(0.0, 1.0, 8);
        let split = sys.default_split().unwrap();
        let r = nehari_residuals(&sys, &split, &e1_pair(&sys, 1.0)).unwrap();
        assert!((r.ray - (PI * PI - 1.5)).abs() < 1e-10);
        assert!(r.tilde.is_empty());
    }

    #[test]
    fn definite_projection_closed_form() {
        let sys = system(0.0, 1.0, 8);
        let split = sys.default_split().unwrap();
        let v = nehari_project(&sys, &split, &e1_pair(&sys, 1.0)).unwrap();
        let t = sqrt(PI * PI / 1.5);
        assert!((v.u1.coeffs()[0] - t).abs() < 1e-12);
        let e = sys.energy_of(&v).unwrap();
        assert!((e - powi(PI, 4) / 6.0).abs() < 1e-9);
        let r = nehari_residuals(&sys, &split, &v).unwrap();
        assert!(r.ray.abs() < 1e-10);
        let w = nehari_project(&sys, &split, &e1_pair(&sys, 7.3)).unwrap();
        for (a, b) in w.to_flat().iter().zip(v.to_flat()) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn projection_rejects_tilde_points() {
        let sys = system(15.0, 1.0, 6);
        let split = sys.default_split().unwrap();
        assert!(matches!(
            nehari_project(&sys, &split, &e1_pair(&sys, 1.0)),
            Err(Error::InTildeSpace { .. })
        ));
        assert!(matches!(
            nehari_project(&sys, &split, &PairField::zeros(sys.basis().clone())),
            Err(Error::InTildeSpace { .. })
        ));
    }

    #[test]
    fn indefinite_projection_zeroes_residuals() {
        let sys = system(15.0, 3.0, 6);
        let split = sys.default_split().unwrap();
        let x = [0.3, 1.0, 0.2, 0.0, 0.1, 0.0, -0.2, 0.7, 0.0, 0.3, 0.0, 0.05];
        let u = PairField::from_flat(sys.basis().clone(), &x).unwrap();
        let v = nehari_project(&sys, &split, &u).unwrap();
        let r = nehari_residuals(&sys, &split, &v).unwrap();
        assert_eq!(r.tilde.len(), 2);
        assert!(r.max_abs() < 1e-8, "{r:?}");
        assert!(sys.energy_of(&v).unwrap() > 0.0);
    }

    #[test]
    fn no_projection_when_b_nonpositive() {
        // X̃ = {0} but B(u,u) <= 0 cannot happen for a definite split, so
        // force an empty tilde set by hand with a negative shift.
        let sys = system(15.0, 1.0, 4);
        let sub = Subspaces { plus: vec![0, 1, 2, 3, 4, 5, 6, 7], tilde: vec![] };
        let mut x = vec![0.0; 8];
        x[0] = 1.0;
        assert!(matches!(project_flat(&sys, &sub, &x), Err(Error::NoProjection { .. })));
    }

    #[test]
    fn dedup_examples() {
        let sys = system(0.0, 1.0, 4);
        let b = sys.basis().clone();
        let u = PairField::from_flat(b, &[1.0, 0.2, 0.0, 0.1, 0.5, 0.0, 0.3, 0.0]).unwrap();
        let ids = orbit_dedup(&[u.clone(), u.signed(-1.0, 1.0), u.scaled(1.1), u.clone()], 1e-4).unwrap();
        assert_eq!(ids, vec![0, 0, 1, 0]);
        assert_eq!(orbit_distance(&u.to_flat(), &u.to_flat()), 0.0);
    }

    #[test]
    fn classification_rules() {
        assert_eq!(classify_masses(0.0, 0.0), Classification::Trivial);
        assert_eq!(classify_masses(2.0, 1e-12), Classification::Semitrivial1);
        assert_eq!(classify_masses(1e-12, 2.0), Classification::Semitrivial2);
        assert_eq!(classify_masses(1.0, 1.0), Classification::FullyNontrivial);
        let sys = system(0.0, 1.0, 4);
        let cp = CriticalPoint::evaluate(&sys, e1_pair(&sys, 2.0), 0).unwrap();
        assert_eq!(cp.classification, Classification::Semitrivial1);
        assert!(classify(&cp, cp.energy * 0.5).is_ok());
        assert!(matches!(
            classify(&cp, cp.energy * 2.0),
            Err(Error::ClassificationContradiction { .. })
        ));
        let zero = CriticalPoint::evaluate(&sys, PairField::zeros(sys.basis().clone()), 0).unwrap();
        assert_eq!(classify(&zero, 1.0).unwrap(), Classification::Trivial);
    }
}
