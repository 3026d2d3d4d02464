//! The limit system on ℝᴺ at the critical exponent: the one-variable quotient
//! `f_λ`, the constant `S_{∞,λ}`, the threshold `Λ₀`, the Aubin–Talenti bubble
//! and the best Sobolev constant.

use crate::error::{invalid, Error, Result};
use crate::math::{abs_pow, exp, ln, powf, unit_sphere_area};
use crate::optimize::{bisect_predicate, golden_section};
use crate::quadrature::Rule;
use crate::system::critical_exponent;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitParams {
    pub mu1: f64,
    pub mu2: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub dim: usize,
}

impl LimitParams {
    pub fn new(dim: usize, mu: [f64; 2], lambda: f64, alpha: f64, beta: f64) -> Result<Self> {
        let lp = Self {
            mu1: mu[0],
            mu2: mu[1],
            lambda,
            alpha,
            beta,
            dim,
        };
        lp.validate()?;
        Ok(lp)
    }

    pub fn validate(&self) -> Result<()> {
        let crit = critical_exponent(self.dim).ok_or_else(|| invalid!("limit system needs N >= 3"))?;
        if !(self.mu1 > 0.0 && self.mu2 > 0.0 && self.lambda > 0.0) {
            return Err(invalid!("mu1, mu2, lambda must be positive"));
        }
        if !(self.alpha > 1.0 && self.beta > 1.0) {
            return Err(invalid!("alpha, beta must exceed 1"));
        }
        if (self.alpha + self.beta - crit).abs() > 1e-12 {
            return Err(invalid!(
                "alpha + beta = {} must equal 2N/(N-2) = {crit}",
                self.alpha + self.beta
            ));
        }
        Ok(())
    }

    /// `2* = 2N/(N-2)`
    pub fn crit(&self) -> f64 {
        2.0 * self.dim as f64 / (self.dim as f64 - 2.0)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut lp = *self;
        lp.lambda = lambda;
        lp.validate()?;
        Ok(lp)
    }

    /// `min{μ₁^{-2/2*}, μ₂^{-2/2*}}`, the value of `f_λ` at the ends of `(0, ∞)`.
    pub fn semitrivial_level(&self) -> f64 {
        let e = -2.0 / self.crit();
        powf(self.mu1, e).min(powf(self.mu2, e))
    }
}

/// `f_λ(r) = (r²+1) / (μ₁r^{2*} + μ₂ + 2*λr^α)^{2/2*}`
pub fn f_lambda(r: f64, lp: &LimitParams) -> f64 {
    let c = lp.crit();
    let den = lp.mu1 * abs_pow(r, c) + lp.mu2 + c * lp.lambda * abs_pow(r, lp.alpha);
    (r * r + 1.0) / powf(den, 2.0 / c)
}

const LOG_R_MIN: f64 = -13.815_510_557_964_274; // ln 1e-6
const LOG_R_MAX: f64 = 13.815_510_557_964_274;
const SCAN_POINTS: usize = 2001;

/// Raw minimum of `f_λ` over the log grid on `[1e-6, 1e6]` refined by golden
/// section; reports `(r, f, scan index)`.
fn scan_minimum(lp: &LimitParams) -> (f64, f64, usize) {
    let h = (LOG_R_MAX - LOG_R_MIN) / (SCAN_POINTS - 1) as f64;
    let g = |s: f64| f_lambda(exp(s), lp);
    let (mut best_i, mut best_v) = (0, g(LOG_R_MIN));
    for i in 1..SCAN_POINTS {
        let v = g(LOG_R_MIN + h * i as f64);
        if v < best_v {
            best_i = i;
            best_v = v;
        }
    }
    let lo = LOG_R_MIN + h * best_i.saturating_sub(1) as f64;
    let hi = (LOG_R_MIN + h * (best_i + 1) as f64).min(LOG_R_MAX);
    let (s, v) = golden_section(g, lo, hi, 1e-10);
    if v < best_v {
        (exp(s), v, best_i)
    } else {
        (exp(LOG_R_MIN + h * best_i as f64), best_v, best_i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SInfty {
    /// `S_{∞,λ} = f_λ(r_λ) S`
    pub value: f64,
    pub r_lambda: f64,
    pub f_min: f64,
}

/// Interior minimizer of `f_λ` and `S_{∞,λ}`. Fails with `BoundaryInfimum`
/// when the infimum is approached as `r → 0` or `r → ∞`.
pub fn s_infty(lp: &LimitParams, s: f64) -> Result<SInfty> {
    lp.validate()?;
    let (r, f_min, idx) = scan_minimum(lp);
    if idx == 0 {
        return Err(Error::BoundaryInfimum("r -> 0"));
    }
    if idx == SCAN_POINTS - 1 {
        return Err(Error::BoundaryInfimum("r -> infinity"));
    }
    if !(f_min < lp.semitrivial_level() - 1e-12) {
        return Err(Error::BoundaryInfimum("interior minimum does not undercut the end values"));
    }
    Ok(SInfty {
        value: f_min * s,
        r_lambda: r,
        f_min,
    })
}

/// Brute-force infimum of the two-variable quotient
/// `(s²+t²) / (μ₁s^{2*} + μ₂t^{2*} + 2*λ s^α t^β)^{2/2*} · S`
/// over an `n × n` log grid on `[1e-3, 1e3]²`.
pub fn st_grid_infimum(lp: &LimitParams, s_const: f64, n: usize) -> f64 {
    let c = lp.crit();
    let n = n.max(2);
    let lo = ln(1e-3);
    let step = (ln(1e3) - lo) / (n - 1) as f64;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let s = exp(lo + step * i as f64);
        for j in 0..n {
            let t = exp(lo + step * j as f64);
            let den = lp.mu1 * powf(s, c) + lp.mu2 * powf(t, c) + c * lp.lambda * powf(s, lp.alpha) * powf(t, lp.beta);
            best = best.min((s * s + t * t) / powf(den, 2.0 / c));
        }
    }
    best * s_const
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambda0 {
    pub lambda: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Bisection for the smallest λ at which `inf f_λ` drops below the
/// semitrivial level. The value of `lp.lambda` is ignored.
pub fn lambda0_threshold(lp: &LimitParams) -> Result<Lambda0> {
    lp.validate()?;
    let level = lp.semitrivial_level();
    let undercuts = |lambda: f64| -> Result<bool> {
        let l = LimitParams { lambda, ..*lp };
        Ok(scan_minimum(&l).1 < level - 1e-12)
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut n = 0;
    while !undercuts(hi)? {
        lo = hi;
        hi *= 2.0;
        n += 1;
        if n > 80 {
            return Err(Error::BracketFailure("inf f_λ never undercuts the end values".into()));
        }
    }
    let (lo, hi) = bisect_predicate(undercuts, lo, hi, 1e-7, 200)?;
    Ok(Lambda0 {
        lambda: 0.5 * (lo + hi),
        lo,
        hi,
    })
}

/// `U_ε(x) = [N(N-2)]^{(N-2)/4} (ε/(ε²+|x|²))^{(N-2)/2}`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubbleProfile {
    pub dim: usize,
    pub eps: f64,
}

impl BubbleProfile {
    pub fn new(dim: usize, eps: f64) -> Result<Self> {
        if dim < 3 {
            return Err(invalid!("bubble needs N >= 3"));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid!("epsilon must be positive, got {eps}"));
        }
        Ok(Self { dim, eps })
    }

    fn amplitude(&self) -> f64 {
        let n = self.dim as f64;
        powf(n * (n - 2.0), (n - 2.0) / 4.0)
    }

    pub fn value(&self, r: f64) -> f64 {
        let n = self.dim as f64;
        self.amplitude() * powf(self.eps / (self.eps * self.eps + r * r), (n - 2.0) / 2.0)
    }

    /// Radial derivative `dU_ε/dr`.
    pub fn derivative(&self, r: f64) -> f64 {
        let n = self.dim as f64;
        let e2r2 = self.eps * self.eps + r * r;
        -self.amplitude() * (n - 2.0) * powf(self.eps, (n - 2.0) / 2.0) * r * powf(e2r2, -n / 2.0)
    }
}

pub fn bubble_value(b: &BubbleProfile, radius: f64) -> f64 {
    b.value(radius)
}

/// Radial rule for bubble integrals: panels resolve the core at scale `ε`
/// and the geometric tail out to `R`.
pub(crate) fn bubble_rule(eps: f64, outer: f64) -> Rule {
    Rule::geometric(eps / 16.0, outer, 1.5, 24)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevConstant {
    /// `S = ‖U₁‖^{4/N}`
    pub s: f64,
    /// `∫|∇U_ε|²`
    pub grad_norm_sq: f64,
    /// `∫U_ε^{2*}`
    pub crit_integral: f64,
    /// Analytic bound on the neglected tails beyond the truncation radius.
    pub tail_bound: f64,
}

/// `‖U_ε‖²` and `|U_ε|_{2*}^{2*}` by radial quadrature; they coincide and
/// equal `S^{N/2}`.
pub fn sobolev_constant_at(dim: usize, eps: f64) -> Result<SobolevConstant> {
    let b = BubbleProfile::new(dim, eps)?;
    let n = dim as f64;
    let crit = 2.0 * n / (n - 2.0);
    let area = unit_sphere_area(dim);
    let a = b.amplitude();
    // Tail integrands are bounded by C r^{1-N} (gradient) and C r^{-N-1}
    // (critical power), both with C written in terms of ε.
    let c_grad = a * a * (n - 2.0) * (n - 2.0) * powf(eps, n - 2.0);
    let c_crit = powf(a, crit) * powf(eps, n);
    let limit = 1e-10;
    let mut outer = 64.0 * eps;
    let tail = |r: f64| area * (c_grad * powf(r, 2.0 - n) / (n - 2.0) + c_crit * powf(r, -n) / n);
    while tail(outer) > limit * 1e-2 {
        outer *= 2.0;
        if outer > 1e200 {
            return Err(Error::TailBound {
                bound: tail(outer),
                limit,
            });
        }
    }
    let bound = tail(outer);
    if bound > limit {
        return Err(Error::TailBound { bound, limit });
    }
    let rule = bubble_rule(eps, outer);
    let grad = area * rule.integrate(|r| {
        let d = b.derivative(r);
        d * d * powf(r, n - 1.0)
    });
    let critv = area * rule.integrate(|r| powf(b.value(r), crit) * powf(r, n - 1.0));
    Ok(SobolevConstant {
        s: powf(grad, 2.0 / n),
        grad_norm_sq: grad,
        crit_integral: critv,
        tail_bound: bound,
    })
}

pub fn sobolev_constant(dim: usize) -> Result<SobolevConstant> {
    sobolev_constant_at(dim, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitudes {
    pub s: f64,
    pub t: f64,
    /// `I_{∞,λ}(s U₁, t U₁)`
    pub energy: f64,
    /// `(1/N) S_{∞,λ}^{N/2}`
    pub target: f64,
    /// `I'_{∞,λ}(u)u` at `u = (s U₁, t U₁)`
    pub ray_residual: f64,
}

/// Nehari scaling of `(r_λ U₁, U₁)` in the limit functional, checked against
/// `(1/N) S_{∞,λ}^{N/2}`.
pub fn minimizer_amplitudes(lp: &LimitParams, sobolev: &SobolevConstant, r_lambda: f64) -> Result<Amplitudes> {
    lp.validate()?;
    if !(r_lambda > 0.0) {
        return Err(invalid!("r_lambda must be positive"));
    }
    let c = lp.crit();
    let n = lp.dim as f64;
    let norm_sq = sobolev.grad_norm_sq;
    let crit_int = sobolev.crit_integral;
    let r = r_lambda;
    let den = lp.mu1 * powf(r, c) + lp.mu2 + c * lp.lambda * powf(r, lp.alpha);
    let t = powf((r * r + 1.0) * norm_sq / (den * crit_int), 1.0 / (c - 2.0));
    let s = r * t;
    let nonlinear = |s: f64, t: f64| {
        lp.mu1 * powf(s, c) + lp.mu2 * powf(t, c) + c * lp.lambda * powf(s, lp.alpha) * powf(t, lp.beta)
    };
    let energy = 0.5 * (s * s + t * t) * norm_sq - nonlinear(s, t) / c * crit_int;
    let ray_residual = (s * s + t * t) * norm_sq - nonlinear(s, t) * crit_int;
    let s_inf = f_lambda(r, lp) * sobolev.s;
    let target = powf(s_inf, n / 2.0) / n;
    if (energy - target).abs() > 1e-6 * target {
        return Err(Error::Inconsistency(alloc::format!(
            "limit energy {energy} differs from (1/N) S_inf^(N/2) = {target}"
        )));
    }
    Ok(Amplitudes {
        s,
        t,
        energy,
        target,
        ray_residual,
    })
}

/// Relative size of `ray_residual` against `‖v‖²`-scale quantities.
pub fn relative_ray_residual(a: &Amplitudes, sobolev: &SobolevConstant) -> f64 {
    a.ray_residual.abs() / ((a.s * a.s + a.t * a.t) * sobolev.grad_norm_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sqrt;

    fn n4(lambda: f64) -> LimitParams {
        LimitParams::new(4, [1.0, 1.0], lambda, 2.0, 2.0).unwrap()
    }

    #[test]
    fn f_lambda_examples() {
        let lp = n4(1.0);
        assert!((f_lambda(0.0, &lp) - 1.0).abs() < 1e-15);
        assert!((f_lambda(1.0, &lp) - 2.0 / sqrt(6.0)).abs() < 1e-15);
        assert!((f_lambda(1e6, &lp) - 1.0).abs() < 1e-3);
        let lp = LimitParams::new(4, [2.0, 3.0], 1.0, 2.0, 2.0).unwrap();
        assert!((f_lambda(0.0, &lp) - powf(3.0, -0.5)).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(LimitParams::new(4, [1.0, 1.0], 1.0, 2.0, 1.5).is_err());
        assert!(LimitParams::new(2, [1.0, 1.0], 1.0, 2.0, 2.0).is_err());
        assert!(LimitParams::new(4, [1.0, 1.0], 0.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn s_infty_symmetric_case() {
        let sc = sobolev_constant(4).unwrap();
        let r = s_infty(&n4(1.0), sc.s).unwrap();
        assert!((r.r_lambda - 1.0).abs() < 1e-6);
        assert!((r.value - 2.0 / sqrt(6.0) * sc.s).abs() < 1e-9 * sc.s);
    }

    #[test]
    fn boundary_infimum_below_lambda0() {
        assert!(matches!(s_infty(&n4(0.3), 1.0), Err(Error::BoundaryInfimum(_))));
    }

    #[test]
    fn lambda0_for_symmetric_family() {
        let l0 = lambda0_threshold(&n4(1.0)).unwrap();
        assert!((l0.lambda - 0.5).abs() < 1e-6, "{l0:?}");
    }

    #[test]
    fn bubble_examples() {
        let b = BubbleProfile::new(4, 1.0).unwrap();
        assert!((b.value(0.0) - 2.0 * sqrt(2.0)).abs() < 1e-14);
        let half = BubbleProfile::new(4, 0.5).unwrap();
        for r in [0.0, 0.3, 1.7] {
            // U_ε(x) = ε^{-(N-2)/2} U₁(x/ε)
            assert!((half.value(r) - b.value(r / 0.5) / 0.5).abs() < 1e-12);
        }
        assert!(b.value(0.5) > b.value(0.6));
        assert!(BubbleProfile::new(4, 0.0).is_err());
    }

    #[test]
    fn sobolev_identity() {
        for n in [3, 4, 5, 6] {
            let sc = sobolev_constant(n).unwrap();
            let rel = (sc.grad_norm_sq - sc.crit_integral).abs() / sc.grad_norm_sq;
            assert!(rel < 1e-8, "N={n} rel={rel}");
            assert!(sc.tail_bound < 1e-10);
            let half = sobolev_constant_at(n, 0.5).unwrap();
            assert!((half.grad_norm_sq - sc.grad_norm_sq).abs() < 1e-8 * sc.grad_norm_sq);
        }
    }

    #[test]
    fn amplitudes_symmetric() {
        let sc = sobolev_constant(4).unwrap();
        let a = minimizer_amplitudes(&n4(1.0), &sc, 1.0).unwrap();
        assert!((a.s - a.t).abs() < 1e-14);
        assert!(relative_ray_residual(&a, &sc) < 1e-8);
    }
}
