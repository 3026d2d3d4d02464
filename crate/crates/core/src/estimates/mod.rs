//! Cutoff-bubble integrals `ū_ε = ψU_ε` and the numerical checks of the
//! critical-case estimates built on them.

mod claim;
mod mixed;

pub use claim::{ball_rule, claim_sweep, is_dirichlet_eigenvalue, BallRule, ClaimConfig, ClaimPoint, ClaimReport};
pub use mixed::{mixed_norm_constant, MixedNorm, SubBox};

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::limit::{sobolev_constant, BubbleProfile, LimitParams};
use crate::math::{abs_pow, exp, linear_fit, ln, powf, unit_sphere_area};
use crate::optimize::golden_section;
use crate::quadrature::{geometric_breaks, Rule};

/// Radial cutoff: 1 on `[0, δ]`, a quintic bridge on `[δ, R]`, 0 beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub delta: f64,
    pub support: f64,
}

impl CutoffSpec {
    pub fn new(delta: f64, support: f64) -> Result<Self> {
        if !(delta > 0.0 && support > delta && support.is_finite()) {
            return Err(invalid!("cutoff needs 0 < delta < support, got {delta}, {support}"));
        }
        Ok(Self { delta, support })
    }

    /// `δ` is 1/8 of the inradius, support `2δ`.
    pub fn for_inradius(inradius: f64) -> Result<Self> {
        let delta = inradius / 8.0;
        Self::new(delta, 2.0 * delta)
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.delta {
            1.0
        } else if r >= self.support {
            0.0
        } else {
            let t = (r - self.delta) / (self.support - self.delta);
            1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        if r <= self.delta || r >= self.support {
            0.0
        } else {
            let w = self.support - self.delta;
            let t = (r - self.delta) / w;
            -30.0 * t * t * (1.0 - t) * (1.0 - t) / w
        }
    }
}

/// Radial integrals of `ū_ε` over `ℝᴺ`, together with the two deficits
/// against the uncut bubble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnIntegrals {
    pub eps: f64,
    /// `∫|∇ū_ε|²`
    pub grad_sq: f64,
    /// `∫ū_ε^{2*}`
    pub crit: f64,
    /// `∫ū_ε^{2*-1}`
    pub crit_minus_one: f64,
    /// `∫ū_ε`
    pub mass: f64,
    /// `∫|∇ū_ε|`
    pub grad_l1: f64,
    /// `∫ū_ε^{2*-2}`
    pub crit_minus_two: f64,
    /// `∫ū_ε²`
    pub l2: f64,
    /// `∫|∇U_ε|² - ∫|∇ū_ε|²`; negative in practice, the cut bubble pays
    /// for the bridge with extra gradient energy.
    pub grad_deficit: f64,
    /// `∫U_ε^{2*} - ∫ū_ε^{2*}`
    pub crit_deficit: f64,
    /// `‖U₁‖²`, which equals `|U₁|_{2*}^{2*}`.
    pub full: f64,
}

pub(crate) fn radial_rule(eps: f64, cutoff: &CutoffSpec, order: usize) -> Rule {
    let mut breaks = geometric_breaks(eps / 16.0, cutoff.delta, 1.5);
    let w = cutoff.support - cutoff.delta;
    for k in 1..=8 {
        breaks.push(cutoff.delta + w * k as f64 / 8.0);
    }
    Rule::composite(&breaks, order)
}

/// `∫_{|x|>ρ}|∇U_ε|²` and `∫_{|x|>ρ}U_ε^{2*}` after the substitution `z = ε/|x|`.
fn outer_tails(dim: usize, eps: f64, rho: f64) -> (f64, f64) {
    let n = dim as f64;
    let crit = 2.0 * n / (n - 2.0);
    let a = powf(n * (n - 2.0), (n - 2.0) / 4.0);
    let area = unit_sphere_area(dim);
    let rule = Rule::uniform(0.0, eps / rho, 2, 20);
    let grad = rule.integrate(|z| powf(z, n - 3.0) * powf(1.0 + z * z, -n));
    let critv = rule.integrate(|z| powf(z, n - 1.0) * powf(1.0 + z * z, -n));
    (
        area * a * a * (n - 2.0) * (n - 2.0) * grad,
        area * powf(a, crit) * critv,
    )
}

pub fn bn_integrals(eps: f64, cutoff: &CutoffSpec, dim: usize) -> Result<BnIntegrals> {
    if !(eps > 0.0 && eps <= cutoff.delta / 10.0 * (1.0 + 1e-12)) {
        return Err(invalid!("need 0 < eps <= delta/10, got eps = {eps}, delta = {}", cutoff.delta));
    }
    let b = BubbleProfile::new(dim, eps)?;
    let n = dim as f64;
    let crit = 2.0 * n / (n - 2.0);
    let area = unit_sphere_area(dim);
    let rule = radial_rule(eps, cutoff, 20);
    let mut out = BnIntegrals {
        eps,
        grad_sq: 0.0,
        crit: 0.0,
        crit_minus_one: 0.0,
        mass: 0.0,
        grad_l1: 0.0,
        crit_minus_two: 0.0,
        l2: 0.0,
        grad_deficit: 0.0,
        crit_deficit: 0.0,
        full: 0.0,
    };
    for (&r, &w) in rule.nodes.iter().zip(&rule.weights) {
        let (u, du) = (b.value(r), b.derivative(r));
        let (psi, dpsi) = (cutoff.value(r), cutoff.derivative(r));
        let v = psi * u;
        let dv = dpsi * u + psi * du;
        let wr = area * w * powf(r, n - 1.0);
        out.grad_sq += wr * dv * dv;
        out.crit += wr * abs_pow(v, crit);
        out.crit_minus_one += wr * abs_pow(v, crit - 1.0);
        out.mass += wr * v;
        out.grad_l1 += wr * dv.abs();
        out.crit_minus_two += wr * abs_pow(v, crit - 2.0);
        out.l2 += wr * v * v;
        if r > cutoff.delta {
            out.grad_deficit += wr * (du * du - dv * dv);
            out.crit_deficit += wr * (1.0 - abs_pow(psi, crit)) * abs_pow(u, crit);
        }
    }
    let (tg, tc) = outer_tails(dim, eps, cutoff.support);
    out.grad_deficit += tg;
    out.crit_deficit += tc;
    out.full = sobolev_constant(dim)?.grad_norm_sq;
    Ok(out)
}

/// `points` values `δ·10^{-1-2k/(points-1)}`, strictly decreasing over two decades.
pub fn eps_grid(delta: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points)
        .map(|k| delta * powf(10.0, -1.0 - 2.0 * k as f64 / (points - 1) as f64))
        .collect()
}

pub fn bn_sweep(eps: &[f64], cutoff: &CutoffSpec, dim: usize) -> Result<Vec<BnIntegrals>> {
    eps.iter().map(|&e| bn_integrals(e, cutoff, dim)).collect()
}

/// How the values are turned into a log-log line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderModel {
    /// `log q` against `log ε`.
    Power,
    /// `log(q/|ln ε|)` against `log ε`.
    PowerTimesLog,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub quantity: &'static str,
    pub model: OrderModel,
    pub values: Vec<f64>,
    pub slope: f64,
    /// Two standard errors of the slope.
    pub half_width: f64,
    pub intercept: f64,
    pub expected: Option<f64>,
    /// `None` when no order is expected for this dimension.
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub dim: usize,
    pub eps: Vec<f64>,
    pub fits: Vec<OrderFit>,
}

impl EstimateReport {
    pub fn all_pass(&self) -> bool {
        self.fits.iter().all(|f| f.pass != Some(false))
    }

    pub fn fit(&self, quantity: &str) -> Option<&OrderFit> {
        self.fits.iter().find(|f| f.quantity == quantity)
    }
}

pub const SLOPE_TOL: f64 = 0.15;

/// Least-squares orders of every tabulated quantity.
pub fn order_fit(data: &[BnIntegrals], dim: usize) -> Result<EstimateReport> {
    if data.len() < 6 {
        return Err(Error::DegenerateFit(alloc::format!("{} grid points, need at least 6", data.len())));
    }
    let eps: Vec<f64> = data.iter().map(|d| d.eps).collect();
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::DegenerateFit("epsilon grid must be strictly decreasing".into()));
    }
    if eps[0] / eps[eps.len() - 1] < 99.999 {
        return Err(Error::DegenerateFit("epsilon grid spans less than two decades".into()));
    }
    let n = dim as f64;
    let half = (n - 2.0) / 2.0;
    let low_order = |four: OrderModel| -> (OrderModel, Option<f64>) {
        match dim {
            4 => (four, Some(2.0)),
            d if d >= 5 => (OrderModel::Power, Some(2.0)),
            _ => (OrderModel::Power, None),
        }
    };
    type Row = (&'static str, fn(&BnIntegrals) -> f64, (OrderModel, Option<f64>));
    let table: [Row; 7] = [
        ("grad_deficit", |d| d.grad_deficit.abs(), (OrderModel::Power, Some(n - 2.0))),
        ("crit_deficit", |d| d.crit_deficit, (OrderModel::Power, Some(n))),
        ("crit_minus_one", |d| d.crit_minus_one, (OrderModel::Power, Some(half))),
        ("mass", |d| d.mass, (OrderModel::Power, Some(half))),
        ("grad_l1", |d| d.grad_l1, (OrderModel::Power, Some(half))),
        ("crit_minus_two", |d| d.crit_minus_two, low_order(OrderModel::PowerTimesLog)),
        ("l2", |d| d.l2, low_order(OrderModel::PowerTimesLog)),
    ];
    let x: Vec<f64> = eps.iter().map(|&e| ln(e)).collect();
    let mut fits = Vec::with_capacity(table.len());
    for (name, get, (model, expected)) in table {
        let values: Vec<f64> = data.iter().map(get).collect();
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::DegenerateFit(alloc::format!("{name} has a nonpositive value")));
        }
        let y: Vec<f64> = values
            .iter()
            .zip(&eps)
            .map(|(v, e)| match model {
                OrderModel::Power => ln(*v),
                OrderModel::PowerTimesLog => ln(*v / ln(*e).abs()),
            })
            .collect();
        let (intercept, slope, stderr) =
            linear_fit(&x, &y).ok_or_else(|| Error::DegenerateFit(alloc::format!("{name}: singular design")))?;
        fits.push(OrderFit {
            quantity: name,
            model,
            values,
            slope,
            half_width: 2.0 * stderr,
            intercept,
            expected,
            pass: expected.map(|e| (slope - e).abs() <= SLOPE_TOL),
        });
    }
    Ok(EstimateReport { dim, eps, fits })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayMax {
    /// The closed-form quotient raised to `N/2`, over `N`.
    pub closed_form: f64,
    /// Direct maximization of `τ ↦ J_λ(τu_ε)`.
    pub direct: f64,
    pub argmax: f64,
}

/// Ray maximum of the coupled energy along `u_ε = (s ū_ε, t ū_ε)`, computed
/// in closed form and by golden section on `log τ`.
pub fn ray_max(
    eps: f64,
    cutoff: &CutoffSpec,
    lp: &LimitParams,
    kappa: [f64; 2],
    s: f64,
    t: f64,
) -> Result<RayMax> {
    let bn = bn_integrals(eps, cutoff, lp.dim)?;
    Ok(ray_max_from(&bn, lp, kappa, s, t))
}

pub(crate) fn ray_coefficients(bn: &BnIntegrals, lp: &LimitParams, kappa: [f64; 2], s: f64, t: f64) -> (f64, f64) {
    let c = lp.crit();
    let quad = (s * s + t * t) * bn.grad_sq - (kappa[0] * s * s + kappa[1] * t * t) * bn.l2;
    let nonlin = (lp.mu1 * powf(s, c) + lp.mu2 * powf(t, c) + c * lp.lambda * powf(s, lp.alpha) * powf(t, lp.beta)) * bn.crit;
    (quad, nonlin)
}

pub fn ray_max_from(bn: &BnIntegrals, lp: &LimitParams, kappa: [f64; 2], s: f64, t: f64) -> RayMax {
    let c = lp.crit();
    let n = lp.dim as f64;
    let (quad, nonlin) = ray_coefficients(bn, lp, kappa, s, t);
    if quad <= 0.0 {
        return RayMax {
            closed_form: 0.0,
            direct: 0.0,
            argmax: 0.0,
        };
    }
    let closed_form = powf(quad / powf(nonlin, 2.0 / c), n / 2.0) / n;
    let energy = |tau: f64| 0.5 * tau * tau * quad - powf(tau, c) / c * nonlin;
    // bracket around the stationary point, then refine without using it
    let guess = ln(quad / nonlin) / (c - 2.0);
    let (x, _) = golden_section(|x| -energy(exp(x)), guess - 3.0, guess + 3.0, 1e-12);
    RayMax {
        closed_form,
        direct: energy(exp(x)),
        argmax: exp(x),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalculusReport {
    /// `C_q = q^{-1/(q-1)}(1 - 1/q)`
    pub c_q: f64,
    /// Largest `max_s(rs - s^q) / (C_q r^{q/(q-1)})` over the r grid.
    pub q_ratio: f64,
    pub q_pass: bool,
    /// `C` fitted on every other grid radius, inflated by 5%, then held fixed.
    pub ab_constant: f64,
    /// Largest `max(r s₁s₂ - s₁^α s₂^β) / (C max{r^{α/(α-1)}, r^{β/(β-1)}})`.
    pub ab_ratio: f64,
    pub ab_pass: bool,
}

const CALC_TOL: f64 = 1e-9;

/// Grid check of the two elementary inequalities `max_s(rs-s^q) ≤ C_q r^{q/(q-1)}`
/// and `max_{[0,R]²}(r s₁s₂ - s₁^α s₂^β) ≤ C max{r^{α/(α-1)}, r^{β/(β-1)}}`,
/// with `q_points` samples in `s` and an `ab_points²` grid on `[0,R]²`.
pub fn calculus_inequalities(
    q: f64,
    alpha: f64,
    beta: f64,
    big_r: f64,
    r_grid: &[f64],
    q_points: usize,
    ab_points: usize,
) -> Result<CalculusReport> {
    if !(q > 1.0 && alpha > 1.0 && beta > 1.0) {
        return Err(invalid!("q, alpha, beta must exceed 1"));
    }
    if !(big_r > 0.0) || r_grid.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
        return Err(invalid!("R and the r grid must be nonnegative"));
    }
    let (q_points, ab_points) = (q_points.max(3), ab_points.max(3));
    let c_q = powf(q, -1.0 / (q - 1.0)) * (1.0 - 1.0 / q);
    let mut q_ratio = 0.0_f64;
    let mut q_pass = true;
    for &r in r_grid {
        // the maximizer is (r/q)^{1/(q-1)}; scan well past it
        let top = 4.0 * powf(r / q, 1.0 / (q - 1.0)) + 1e-300;
        let mut best = 0.0_f64;
        for i in 0..q_points {
            let s = top * i as f64 / (q_points - 1) as f64;
            best = best.max(r * s - powf(s, q));
        }
        let bound = c_q * powf(r, q / (q - 1.0));
        if best > bound * (1.0 + CALC_TOL) {
            q_pass = false;
        }
        if bound > 0.0 {
            q_ratio = q_ratio.max(best / bound);
        }
    }
    let bound_shape = |r: f64| powf(r, alpha / (alpha - 1.0)).max(powf(r, beta / (beta - 1.0)));
    let ab_max = |r: f64| {
        let mut best = 0.0_f64;
        for i in 0..ab_points {
            let s1 = big_r * i as f64 / (ab_points - 1) as f64;
            for j in 0..ab_points {
                let s2 = big_r * j as f64 / (ab_points - 1) as f64;
                best = best.max(r * s1 * s2 - powf(s1, alpha) * powf(s2, beta));
            }
        }
        best
    };
    let maxima: Vec<f64> = r_grid.iter().map(|&r| ab_max(r)).collect();
    let mut fitted = 0.0_f64;
    for (k, (&r, &m)) in r_grid.iter().zip(&maxima).enumerate() {
        if k % 2 == 0 && r > 0.0 {
            fitted = fitted.max(m / bound_shape(r));
        }
    }
    let ab_constant = 1.05 * fitted;
    let mut ab_ratio = 0.0_f64;
    let mut ab_pass = ab_constant > 0.0 || maxima.iter().all(|m| *m <= 0.0);
    for (&r, &m) in r_grid.iter().zip(&maxima) {
        let bound = ab_constant * bound_shape(r);
        if m > bound * (1.0 + CALC_TOL) + if bound == 0.0 { CALC_TOL } else { 0.0 } {
            ab_pass = false;
        }
        if bound > 0.0 {
            ab_ratio = ab_ratio.max(m / bound);
        }
    }
    Ok(CalculusReport {
        c_q,
        q_ratio,
        q_pass,
        ab_constant,
        ab_ratio,
        ab_pass,
    })
}

/// `(1/N) S_{∞,λ}^{N/2}` from `f_λ(r_λ)` and `S`.
pub fn limit_level(dim: usize, s_infty: f64) -> f64 {
    powf(s_infty, dim as f64 / 2.0) / dim as f64
}
