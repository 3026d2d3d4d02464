//! Problem data, the quadratic forms `B_i`, the energy functional `J_λ`, its
//! Galerkin gradient and Hessian, and the splitting `X = X⁺ ⊕ X̃`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::math::{abs_pow, signed_pow};
use crate::spectral::{same_basis, Galerkin, ScalarField, SineBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    First,
    Second,
}

impl Component {
    pub const BOTH: [Component; 2] = [Component::First, Component::Second];

    pub fn index(self) -> usize {
        match self {
            Component::First => 0,
            Component::Second => 1,
        }
    }
}

/// `2N/(N-2)` for `N >= 3`.
pub fn critical_exponent(dim: usize) -> Option<f64> {
    (dim >= 3).then(|| 2.0 * dim as f64 / (dim as f64 - 2.0))
}

/// Scalar data of the system. `p = alpha + beta` always; `critical` is set
/// when `p` equals the critical Sobolev exponent of `dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub dim: usize,
    pub critical: bool,
}

impl SystemParams {
    pub fn new(
        dim: usize,
        kappa: [f64; 2],
        mu: [f64; 2],
        lambda: f64,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        let p = alpha + beta;
        let critical = critical_exponent(dim).is_some_and(|c| (p - c).abs() <= 1e-12);
        let params = Self {
            kappa1: kappa[0],
            kappa2: kappa[1],
            mu1: mu[0],
            mu2: mu[1],
            lambda,
            alpha,
            beta,
            p,
            dim,
            critical,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.kappa1,
            self.kappa2,
            self.mu1,
            self.mu2,
            self.lambda,
            self.alpha,
            self.beta,
            self.p,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(invalid!("all parameters must be finite"));
        }
        if self.dim == 0 {
            return Err(invalid!("dimension must be >= 1"));
        }
        if self.mu1 <= 0.0 || self.mu2 <= 0.0 {
            return Err(invalid!("mu1, mu2 must be positive"));
        }
        if self.lambda <= 0.0 {
            return Err(invalid!("lambda must be positive, got {}", self.lambda));
        }
        if self.alpha <= 1.0 || self.beta <= 1.0 {
            return Err(invalid!("alpha, beta must exceed 1"));
        }
        if (self.p - self.alpha - self.beta).abs() > 1e-12 {
            return Err(invalid!("p must equal alpha + beta"));
        }
        match critical_exponent(self.dim) {
            Some(c) => {
                if self.critical && (self.p - c).abs() > 1e-12 {
                    return Err(invalid!("critical flag set but p != 2N/(N-2)"));
                }
                if self.p > c + 1e-12 {
                    return Err(invalid!("p = {} exceeds the critical exponent {c}", self.p));
                }
            }
            None => {
                if self.critical {
                    return Err(invalid!("critical case requires N >= 3"));
                }
            }
        }
        Ok(())
    }

    pub fn kappa(&self, c: Component) -> f64 {
        match c {
            Component::First => self.kappa1,
            Component::Second => self.kappa2,
        }
    }

    pub fn mu(&self, c: Component) -> f64 {
        match c {
            Component::First => self.mu1,
            Component::Second => self.mu2,
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut p = *self;
        p.lambda = lambda;
        p.validate()?;
        Ok(p)
    }
}

/// A candidate solution `(u₁, u₂)` on a shared basis.
#[derive(Debug, Clone)]
pub struct PairField {
    pub u1: ScalarField,
    pub u2: ScalarField,
}

impl PairField {
    pub fn new(u1: ScalarField, u2: ScalarField) -> Result<Self> {
        if !u1.same_basis(&u2) {
            return Err(Error::BasisMismatch);
        }
        Ok(Self { u1, u2 })
    }

    pub fn zeros(basis: Arc<SineBasis>) -> Self {
        Self {
            u1: ScalarField::zeros(basis.clone()),
            u2: ScalarField::zeros(basis),
        }
    }

    /// Split a `2M` vector `(c₁, c₂)`.
    pub fn from_flat(basis: Arc<SineBasis>, x: &[f64]) -> Result<Self> {
        let m = basis.len();
        if x.len() != 2 * m {
            return Err(Error::ShapeMismatch {
                expected: 2 * m,
                got: x.len(),
            });
        }
        Ok(Self {
            u1: ScalarField::new(basis.clone(), x[..m].to_vec())?,
            u2: ScalarField::new(basis, x[m..].to_vec())?,
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.u1.coeffs().to_vec();
        v.extend_from_slice(self.u2.coeffs());
        v
    }

    pub fn basis(&self) -> &Arc<SineBasis> {
        self.u1.basis()
    }

    pub fn component(&self, c: Component) -> &ScalarField {
        match c {
            Component::First => &self.u1,
            Component::Second => &self.u2,
        }
    }

    /// `(s₁u₁, s₂u₂)`; the four sign choices form the `ℤ₂×ℤ₂` orbit.
    pub fn signed(&self, s1: f64, s2: f64) -> Self {
        Self {
            u1: self.u1.scaled(s1),
            u2: self.u2.scaled(s2),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.signed(s, s)
    }
}

/// `B_i(f, g) = Σ (γ_k - κ_i) f_k g_k`
pub fn bilinear_bi(
    c: Component,
    f: &ScalarField,
    g: &ScalarField,
    params: &SystemParams,
) -> Result<f64> {
    if !f.same_basis(g) {
        return Err(Error::BasisMismatch);
    }
    let kappa = params.kappa(c);
    Ok(f.basis()
        .modes()
        .iter()
        .zip(f.coeffs().iter().zip(g.coeffs()))
        .map(|(m, (a, b))| (m.eigenvalue - kappa) * a * b)
        .sum())
}

/// `B(u, v) = B₁(u₁, v₁) + B₂(u₂, v₂)`
pub fn bilinear_b(u: &PairField, v: &PairField, params: &SystemParams) -> Result<f64> {
    Ok(bilinear_bi(Component::First, &u.u1, &v.u1, params)?
        + bilinear_bi(Component::Second, &u.u2, &v.u2, params)?)
}

/// Per-component index partition of the basis modes by the sign of `γ_k - κ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSplit {
    pub plus: [Vec<usize>; 2],
    pub zero: [Vec<usize>; 2],
    pub minus: [Vec<usize>; 2],
    pub tol: f64,
    modes: usize,
}

impl SpectralSplit {
    pub fn new(params: &SystemParams, basis: &SineBasis, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(invalid!("zero-eigenvalue tolerance must be positive"));
        }
        let mut plus: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        let mut zero: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        let mut minus: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for c in Component::BOTH {
            let kappa = params.kappa(c);
            let i = c.index();
            for (k, m) in basis.modes().iter().enumerate() {
                let shift = m.eigenvalue - kappa;
                if shift.abs() <= tol {
                    zero[i].push(k);
                } else if shift > tol {
                    plus[i].push(k);
                } else {
                    minus[i].push(k);
                }
            }
        }
        Ok(Self {
            plus,
            zero,
            minus,
            tol,
            modes: basis.len(),
        })
    }

    /// Default tolerance `1e-9 · γ₁`.
    pub fn with_default_tol(params: &SystemParams, basis: &SineBasis) -> Result<Self> {
        let gamma1 = basis.eigenvalue(0)?;
        Self::new(params, basis, 1e-9 * gamma1)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// `zero ∪ minus` for component `c`, ascending.
    pub fn tilde(&self, c: Component) -> Vec<usize> {
        let i = c.index();
        let mut t: Vec<usize> = self.zero[i].iter().chain(&self.minus[i]).copied().collect();
        t.sort_unstable();
        t
    }

    pub fn tilde_dim(&self) -> usize {
        Component::BOTH.iter().map(|c| self.tilde(*c).len()).sum()
    }

    /// Indices of `X⁺` in the flat `(c₁, c₂)` layout.
    pub fn plus_flat(&self) -> Vec<usize> {
        let m = self.modes;
        self.plus[0]
            .iter()
            .copied()
            .chain(self.plus[1].iter().map(|k| k + m))
            .collect()
    }

    /// Indices of `X̃` in the flat layout.
    pub fn tilde_flat(&self) -> Vec<usize> {
        let m = self.modes;
        self.tilde(Component::First)
            .into_iter()
            .chain(self.tilde(Component::Second).into_iter().map(|k| k + m))
            .collect()
    }

    pub fn project_plus(&self, u: &PairField) -> PairField {
        self.keep(u, &self.plus)
    }

    pub fn project_tilde(&self, u: &PairField) -> PairField {
        let t = [self.tilde(Component::First), self.tilde(Component::Second)];
        self.keep(u, &t)
    }

    fn keep(&self, u: &PairField, sets: &[Vec<usize>; 2]) -> PairField {
        let mut out = PairField::zeros(u.basis().clone());
        for k in &sets[0] {
            out.u1.coeffs_mut()[*k] = u.u1.coeffs()[*k];
        }
        for k in &sets[1] {
            out.u2.coeffs_mut()[*k] = u.u2.coeffs()[*k];
        }
        out
    }
}

/// A smooth functional on a coefficient vector whose quadratic part is the
/// diagonal form `Σ shiftᵢ xᵢ²` and whose remainder is positively
/// homogeneous of degree `exponent()`.
pub trait Functional {
    fn len(&self) -> usize;
    fn energy(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
    /// `γ_k - κ` per coordinate.
    fn shifts(&self) -> &[f64];
    /// `γ_k` per coordinate; the `D^{1,2}` metric.
    fn metric(&self) -> &[f64];
    fn exponent(&self) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn quadratic(&self, x: &[f64]) -> f64 {
        self.shifts().iter().zip(x).map(|(s, v)| s * v * v).sum()
    }

    /// `D(x) = B(x,x) - J'(x)x`, the homogeneous part of the ray derivative.
    fn ray_denominator(&self, x: &[f64]) -> f64 {
        let g = self.gradient(x);
        self.quadratic(x) - crate::math::dot(&g, x)
    }

    /// Norm of `J'(x)` in the dual of `D^{1,2}`: `sqrt(Σ g_k² / γ_k)`.
    fn dual_norm(&self, g: &[f64]) -> f64 {
        crate::math::sqrt(g.iter().zip(self.metric()).map(|(g, m)| g * g / m).sum())
    }

    /// `sqrt(Σ γ_k x_k²)`
    fn h1_norm(&self, x: &[f64]) -> f64 {
        crate::math::weighted_norm(x, self.metric())
    }
}

/// The coupled energy `J_λ` on a Galerkin space.
#[derive(Debug, Clone)]
pub struct CoupledSystem {
    params: SystemParams,
    galerkin: Arc<Galerkin>,
    shifts: Vec<f64>,
    metric: Vec<f64>,
}

/// Nonlinear integrals at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIntegrals {
    /// `∫|u₁|^p`
    pub p1: f64,
    /// `∫|u₂|^p`
    pub p2: f64,
    /// `∫|u₁|^α|u₂|^β`
    pub mixed: f64,
}

impl CoupledSystem {
    pub fn new(params: SystemParams, galerkin: Arc<Galerkin>) -> Result<Self> {
        params.validate()?;
        if galerkin.basis().domain().dim() != params.dim {
            return Err(invalid!(
                "basis dimension {} differs from params.dim {}",
                galerkin.basis().domain().dim(),
                params.dim
            ));
        }
        let gammas = galerkin.basis().eigenvalues();
        let mut shifts: Vec<f64> = gammas.iter().map(|g| g - params.kappa1).collect();
        shifts.extend(gammas.iter().map(|g| g - params.kappa2));
        let mut metric = gammas.clone();
        metric.extend_from_slice(&gammas);
        Ok(Self {
            params,
            galerkin,
            shifts,
            metric,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn galerkin(&self) -> &Arc<Galerkin> {
        &self.galerkin
    }

    pub fn basis(&self) -> &Arc<SineBasis> {
        self.galerkin.basis()
    }

    pub fn modes(&self) -> usize {
        self.galerkin.modes()
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.params.with_lambda(lambda)?, self.galerkin.clone())
    }

    pub fn default_split(&self) -> Result<SpectralSplit> {
        SpectralSplit::with_default_tol(&self.params, self.basis())
    }

    /// One of the two decoupled scalar problems `J_i`.
    pub fn scalar(&self, c: Component) -> ScalarProblem {
        ScalarProblem::new(
            self.params.kappa(c),
            self.params.mu(c),
            self.params.p,
            self.galerkin.clone(),
        )
    }

    pub fn check_field(&self, u: &PairField) -> Result<()> {
        if same_basis(u.basis(), self.basis()) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    fn split_values(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = self.modes();
        (
            self.galerkin.synthesize(&x[..m]),
            self.galerkin.synthesize(&x[m..]),
        )
    }

    pub fn power_integrals_flat(&self, x: &[f64]) -> PowerIntegrals {
        let (u1, u2) = self.split_values(x);
        let sp = &self.params;
        let w = self.galerkin.weights();
        let mut out = PowerIntegrals {
            p1: 0.0,
            p2: 0.0,
            mixed: 0.0,
        };
        for ((a, b), w) in u1.iter().zip(&u2).zip(w) {
            out.p1 += w * abs_pow(*a, sp.p);
            out.p2 += w * abs_pow(*b, sp.p);
            out.mixed += w * abs_pow(*a, sp.alpha) * abs_pow(*b, sp.beta);
        }
        out
    }

    pub fn power_integrals(&self, u: &PairField) -> Result<PowerIntegrals> {
        self.check_field(u)?;
        Ok(self.power_integrals_flat(&u.to_flat()))
    }

    pub fn energy_of(&self, u: &PairField) -> Result<f64> {
        self.check_field(u)?;
        Ok(self.energy(&u.to_flat()))
    }

    pub fn gradient_of(&self, u: &PairField) -> Result<PairField> {
        self.check_field(u)?;
        PairField::from_flat(self.basis().clone(), &self.gradient(&u.to_flat()))
    }

    pub fn bilinear(&self, u: &PairField, v: &PairField) -> Result<f64> {
        self.check_field(u)?;
        bilinear_b(u, v, &self.params)
    }
}

impl Functional for CoupledSystem {
    fn len(&self) -> usize {
        2 * self.modes()
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let sp = &self.params;
        let pi = self.power_integrals_flat(x);
        0.5 * self.quadratic(x) - (sp.mu1 * pi.p1 + sp.mu2 * pi.p2) / sp.p - sp.lambda * pi.mixed
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let sp = &self.params;
        let (u1, u2) = self.split_values(x);
        let mut n1 = Vec::with_capacity(u1.len());
        let mut n2 = Vec::with_capacity(u1.len());
        for (&a, &b) in u1.iter().zip(&u2) {
            n1.push(
                sp.mu1 * signed_pow(a, sp.p)
                    + sp.lambda * sp.alpha * signed_pow(a, sp.alpha) * abs_pow(b, sp.beta),
            );
            n2.push(
                sp.mu2 * signed_pow(b, sp.p)
                    + sp.lambda * sp.beta * abs_pow(a, sp.alpha) * signed_pow(b, sp.beta),
            );
        }
        let p1 = self.galerkin.project(&n1);
        let p2 = self.galerkin.project(&n2);
        let m = self.modes();
        let mut g = Vec::with_capacity(2 * m);
        for k in 0..m {
            g.push(self.shifts[k] * x[k] - p1[k]);
        }
        for k in 0..m {
            g.push(self.shifts[m + k] * x[m + k] - p2[k]);
        }
        g
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let sp = &self.params;
        let (u1, u2) = self.split_values(x);
        let nodes = u1.len();
        let mut d11 = Vec::with_capacity(nodes);
        let mut d22 = Vec::with_capacity(nodes);
        let mut d12 = Vec::with_capacity(nodes);
        for (&a, &b) in u1.iter().zip(&u2) {
            d11.push(
                sp.mu1 * (sp.p - 1.0) * abs_pow(a, sp.p - 2.0)
                    + sp.lambda * sp.alpha * (sp.alpha - 1.0) * abs_pow(a, sp.alpha - 2.0)
                        * abs_pow(b, sp.beta),
            );
            d22.push(
                sp.mu2 * (sp.p - 1.0) * abs_pow(b, sp.p - 2.0)
                    + sp.lambda * sp.beta * (sp.beta - 1.0) * abs_pow(a, sp.alpha)
                        * abs_pow(b, sp.beta - 2.0),
            );
            d12.push(
                sp.lambda * sp.alpha * sp.beta * signed_pow(a, sp.alpha) * signed_pow(b, sp.beta),
            );
        }
        let m = self.modes();
        let g11 = self.galerkin.weighted_gram(&d11);
        let g22 = self.galerkin.weighted_gram(&d22);
        let g12 = self.galerkin.weighted_gram(&d12);
        let mut h = DMatrix::<f64>::zeros(2 * m, 2 * m);
        for j in 0..m {
            for k in 0..m {
                h[(j, k)] = -g11[(j, k)];
                h[(m + j, m + k)] = -g22[(j, k)];
                h[(j, m + k)] = -g12[(j, k)];
                h[(m + k, j)] = -g12[(j, k)];
            }
            h[(j, j)] += self.shifts[j];
            h[(m + j, m + j)] += self.shifts[m + j];
        }
        h
    }

    fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    fn metric(&self) -> &[f64] {
        &self.metric
    }

    fn exponent(&self) -> f64 {
        self.params.p
    }
}

/// `J_i(w) = ½B_i(w,w) - (μ/p)∫|w|^p`
#[derive(Debug, Clone)]
pub struct ScalarProblem {
    kappa: f64,
    mu: f64,
    p: f64,
    galerkin: Arc<Galerkin>,
    shifts: Vec<f64>,
    metric: Vec<f64>,
}

impl ScalarProblem {
    pub fn new(kappa: f64, mu: f64, p: f64, galerkin: Arc<Galerkin>) -> Self {
        let metric = galerkin.basis().eigenvalues();
        let shifts = metric.iter().map(|g| g - kappa).collect();
        Self {
            kappa,
            mu,
            p,
            galerkin,
            shifts,
            metric,
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn galerkin(&self) -> &Arc<Galerkin> {
        &self.galerkin
    }

    /// Split of the single component, as a one-component `SpectralSplit`-like pair
    /// `(plus, tilde)` of mode indices.
    pub fn split(&self, tol: f64) -> (Vec<usize>, Vec<usize>) {
        let mut plus = Vec::new();
        let mut tilde = Vec::new();
        for (k, s) in self.shifts.iter().enumerate() {
            if *s > tol {
                plus.push(k);
            } else {
                tilde.push(k);
            }
        }
        (plus, tilde)
    }

    pub fn power_integral(&self, x: &[f64]) -> f64 {
        let u = self.galerkin.synthesize(x);
        let vals: Vec<f64> = u.iter().map(|v| abs_pow(*v, self.p)).collect();
        self.galerkin.integrate(&vals)
    }

    pub fn energy_of(&self, w: &ScalarField) -> Result<f64> {
        if !same_basis(w.basis(), self.galerkin.basis()) {
            return Err(Error::BasisMismatch);
        }
        Ok(self.energy(w.coeffs()))
    }
}

impl Functional for ScalarProblem {
    fn len(&self) -> usize {
        self.galerkin.modes()
    }

    fn energy(&self, x: &[f64]) -> f64 {
        0.5 * self.quadratic(x) - self.mu / self.p * self.power_integral(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let u = self.galerkin.synthesize(x);
        let n: Vec<f64> = u.iter().map(|v| self.mu * signed_pow(*v, self.p)).collect();
        let proj = self.galerkin.project(&n);
        self.shifts
            .iter()
            .zip(x)
            .zip(proj)
            .map(|((s, v), q)| s * v - q)
            .collect()
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let u = self.galerkin.synthesize(x);
        let d: Vec<f64> = u
            .iter()
            .map(|v| self.mu * (self.p - 1.0) * abs_pow(*v, self.p - 2.0))
            .collect();
        let mut h = -self.galerkin.weighted_gram(&d);
        for (k, s) in self.shifts.iter().enumerate() {
            h[(k, k)] += s;
        }
        h
    }

    fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    fn metric(&self) -> &[f64] {
        &self.metric
    }

    fn exponent(&self) -> f64 {
        self.p
    }
}
