//! Axis-aligned boxes, the analytic Dirichlet sine eigenbasis and tensor
//! Gauss–Legendre quadrature.
//!
//! On `Ω = Π (0, Lᵢ)` the Dirichlet eigenfunctions of `-Δ` are
//! `e_k(x) = Π √(2/Lᵢ) sin(π kᵢ xᵢ / Lᵢ)` with eigenvalue `γ_k = π² Σ (kᵢ/Lᵢ)²`.
//! They are `L²`-orthonormal, so the gradient inner product is diagonal in
//! coefficient space.

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::math::{sin, sqrt, PI};
use crate::quadrature::Rule;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lengths: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(invalid!("box domain needs dimension >= 1"));
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(invalid!("box side length {l} is not strictly positive"));
        }
        Ok(Self { lengths })
    }

    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(alloc::vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Radius of the largest ball inside the box.
    pub fn inradius(&self) -> f64 {
        0.5 * self.lengths.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lengths.iter().map(|l| 0.5 * l).collect()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    /// Multi-index, every entry `>= 1`.
    pub index: Vec<usize>,
    pub eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SineBasis {
    domain: BoxDomain,
    cutoffs: Vec<usize>,
    modes: Vec<Mode>,
}

impl SineBasis {
    /// All multi-indices `1 <= kᵢ <= Kᵢ`, ordered by eigenvalue and then
    /// lexicographically.
    pub fn new(domain: BoxDomain, cutoffs: Vec<usize>) -> Result<Self> {
        if cutoffs.len() != domain.dim() {
            return Err(invalid!(
                "{} cutoffs given for a {}-dimensional box",
                cutoffs.len(),
                domain.dim()
            ));
        }
        if cutoffs.contains(&0) {
            return Err(invalid!("mode cutoffs must be positive"));
        }
        let total: usize = cutoffs.iter().product();
        let mut modes = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rest = flat;
            let mut index = alloc::vec![0usize; cutoffs.len()];
            for (slot, &k) in index.iter_mut().zip(&cutoffs).rev() {
                *slot = rest % k + 1;
                rest /= k;
            }
            modes.push(Mode {
                eigenvalue: eigenvalue_of(&domain, &index),
                index,
            });
        }
        modes.sort_by(|a, b| {
            a.eigenvalue
                .partial_cmp(&b.eigenvalue)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then_with(|| a.index.cmp(&b.index))
        });
        Ok(Self {
            domain,
            cutoffs,
            modes,
        })
    }

    /// Keep only the first `count` modes of the stored order.
    pub fn truncated(mut self, count: usize) -> Result<Self> {
        if count == 0 || count > self.modes.len() {
            return Err(Error::IndexOutOfRange {
                index: count,
                len: self.modes.len(),
            });
        }
        self.modes.truncate(count);
        Ok(self)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn eigenvalue(&self, mode: usize) -> Result<f64> {
        self.modes
            .get(mode)
            .map(|m| m.eigenvalue)
            .ok_or(Error::IndexOutOfRange {
                index: mode,
                len: self.modes.len(),
            })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.eigenvalue).collect()
    }

    /// `e_k(x)` at an arbitrary point.
    pub fn mode_value(&self, mode: usize, x: &[f64]) -> f64 {
        let m = &self.modes[mode];
        m.index
            .iter()
            .zip(self.domain.lengths())
            .zip(x)
            .map(|((&k, &l), &xi)| sqrt(2.0 / l) * sin(PI * k as f64 * xi / l))
            .product()
    }

    /// `Σ c_k e_k(x)` at an arbitrary point.
    pub fn evaluate(&self, coeffs: &[f64], x: &[f64]) -> f64 {
        // per-axis sine tables keep this O(N·K + M)
        let tables: Vec<Vec<f64>> = self
            .cutoffs
            .iter()
            .zip(self.domain.lengths())
            .zip(x)
            .map(|((&kmax, &l), &xi)| {
                (1..=kmax)
                    .map(|k| sqrt(2.0 / l) * sin(PI * k as f64 * xi / l))
                    .collect()
            })
            .collect();
        self.modes
            .iter()
            .zip(coeffs)
            .map(|(m, c)| {
                c * m
                    .index
                    .iter()
                    .enumerate()
                    .map(|(a, &k)| tables[a][k - 1])
                    .product::<f64>()
            })
            .sum()
    }
}

fn eigenvalue_of(domain: &BoxDomain, idx: &[usize]) -> f64 {
    PI * PI
        * idx
            .iter()
            .zip(domain.lengths())
            .map(|(&k, &l)| {
                let r = k as f64 / l;
                r * r
            })
            .sum::<f64>()
}

/// A coefficient vector over a shared sine basis.
#[derive(Debug, Clone)]
pub struct ScalarField {
    basis: Arc<SineBasis>,
    coeffs: Vec<f64>,
}

impl ScalarField {
    pub fn new(basis: Arc<SineBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::ShapeMismatch {
                expected: basis.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zeros(basis: Arc<SineBasis>) -> Self {
        let n = basis.len();
        Self {
            basis,
            coeffs: alloc::vec![0.0; n],
        }
    }

    /// The `mode`-th basis function scaled by `scale`.
    pub fn unit(basis: Arc<SineBasis>, mode: usize, scale: f64) -> Result<Self> {
        if mode >= basis.len() {
            return Err(Error::IndexOutOfRange {
                index: mode,
                len: basis.len(),
            });
        }
        let mut f = Self::zeros(basis);
        f.coeffs[mode] = scale;
        Ok(f)
    }

    pub fn basis(&self) -> &Arc<SineBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().map(|c| s * c).collect(),
        }
    }

    pub fn same_basis(&self, other: &Self) -> bool {
        same_basis(&self.basis, &other.basis)
    }
}

pub(crate) fn same_basis(a: &Arc<SineBasis>, b: &Arc<SineBasis>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Gradient inner product `∫ ∇f·∇g = Σ γ_k f_k g_k`.
pub fn h1_inner(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    if !f.same_basis(g) {
        return Err(Error::BasisMismatch);
    }
    Ok(f.basis
        .modes()
        .iter()
        .zip(f.coeffs.iter().zip(&g.coeffs))
        .map(|(m, (a, b))| m.eigenvalue * a * b)
        .sum())
}

/// Tensor-product Gauss–Legendre grid; node ordering is row-major with the
/// last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    domain: BoxDomain,
    axes: Vec<Rule>,
}

impl QuadratureGrid {
    /// `nodes[i]` Gauss–Legendre points on axis `i`, split into `panels[i]`
    /// equal panels (the node count is rounded up to a multiple of the panel
    /// count).
    pub fn new(domain: BoxDomain, nodes: &[usize], panels: &[usize]) -> Result<Self> {
        if nodes.len() != domain.dim() || panels.len() != domain.dim() {
            return Err(invalid!("quadrature spec does not match box dimension"));
        }
        let mut axes = Vec::with_capacity(domain.dim());
        for ((&q, &np), &l) in nodes.iter().zip(panels).zip(domain.lengths()) {
            if q == 0 || np == 0 {
                return Err(invalid!("quadrature node and panel counts must be positive"));
            }
            let order = q.div_ceil(np);
            let rule = Rule::uniform(0.0, l, np, order);
            let sum: f64 = rule.weights.iter().sum();
            if rule.weights.iter().any(|w| *w <= 0.0) || ((sum - l) / l).abs() > 1e-12 {
                return Err(Error::Inconsistency(alloc::format!(
                    "quadrature weights on axis of length {l} sum to {sum}"
                )));
            }
            axes.push(rule);
        }
        Ok(Self { domain, axes })
    }

    /// Default resolution for a basis: `max(16, 2Kᵢ + 8)` nodes per axis,
    /// one Gauss–Legendre panel.
    pub fn for_basis(basis: &SineBasis) -> Result<Self> {
        let nodes: Vec<usize> = basis
            .cutoffs()
            .iter()
            .map(|&k| default_nodes(k))
            .collect();
        let panels = alloc::vec![1; nodes.len()];
        Self::new(basis.domain().clone(), &nodes, &panels)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn axes(&self) -> &[Rule] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Rule::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Visit every node as `(flat index, coordinates, weight)`.
    pub fn for_each_node(&self, mut f: impl FnMut(usize, &[f64], f64)) {
        let dim = self.axes.len();
        let mut idx = alloc::vec![0usize; dim];
        let mut x = alloc::vec![0.0; dim];
        let total = self.len();
        for flat in 0..total {
            let mut w = 1.0;
            for a in 0..dim {
                x[a] = self.axes[a].nodes[idx[a]];
                w *= self.axes[a].weights[idx[a]];
            }
            f(flat, &x, w);
            for a in (0..dim).rev() {
                idx[a] += 1;
                if idx[a] < self.axes[a].len() {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        let mut w = alloc::vec![0.0; self.len()];
        self.for_each_node(|i, _, wi| w[i] = wi);
        w
    }
}

pub fn default_nodes(cutoff: usize) -> usize {
    (2 * cutoff + 8).max(16)
}

/// Pointwise evaluation of a field at every grid node.
pub fn synthesize(field: &ScalarField, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    let basis = field.basis();
    if basis.domain() != grid.domain() {
        return Err(Error::DomainMismatch);
    }
    let tables = axis_tables(basis, grid);
    let mut out = alloc::vec![0.0; grid.len()];
    let dim = grid.axes().len();
    let sizes: Vec<usize> = grid.axes().iter().map(Rule::len).collect();
    for (m, &c) in basis.modes().iter().zip(field.coeffs()) {
        if c == 0.0 {
            continue;
        }
        let mut idx = alloc::vec![0usize; dim];
        for v in out.iter_mut() {
            let mut prod = c;
            for a in 0..dim {
                prod *= tables[a][(m.index[a] - 1) * sizes[a] + idx[a]];
            }
            *v += prod;
            for a in (0..dim).rev() {
                idx[a] += 1;
                if idx[a] < sizes[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
    }
    Ok(out)
}

/// Tensor quadrature of grid values.
pub fn integrate(values: &[f64], grid: &QuadratureGrid) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    let mut s = 0.0;
    grid.for_each_node(|i, _, w| s += w * values[i]);
    Ok(s)
}

/// `tables[axis][(k-1)*Q + node] = √(2/L) sin(π k x_node / L)`
fn axis_tables(basis: &SineBasis, grid: &QuadratureGrid) -> Vec<Vec<f64>> {
    basis
        .cutoffs()
        .iter()
        .zip(grid.axes())
        .zip(basis.domain().lengths())
        .map(|((&kmax, rule), &l)| {
            let mut t = Vec::with_capacity(kmax * rule.len());
            for k in 1..=kmax {
                for &x in &rule.nodes {
                    t.push(sqrt(2.0 / l) * sin(PI * k as f64 * x / l));
                }
            }
            t
        })
        .collect()
}

/// Basis evaluated at every grid node, cached for the solvers.
///
/// `values[g * M + k] = e_k(x_g)`.
#[derive(Debug, Clone)]
pub struct Galerkin {
    basis: Arc<SineBasis>,
    grid: QuadratureGrid,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl Galerkin {
    pub fn new(basis: Arc<SineBasis>, grid: QuadratureGrid) -> Result<Self> {
        if basis.domain() != grid.domain() {
            return Err(Error::DomainMismatch);
        }
        let m = basis.len();
        let g = grid.len();
        let mut values = alloc::vec![0.0; g * m];
        for k in 0..m {
            let field = ScalarField::unit(basis.clone(), k, 1.0)?;
            let col = synthesize(&field, &grid)?;
            for (gi, v) in col.into_iter().enumerate() {
                values[gi * m + k] = v;
            }
        }
        let weights = grid.weights();
        Ok(Self {
            basis,
            grid,
            values,
            weights,
        })
    }

    pub fn with_default_grid(basis: Arc<SineBasis>) -> Result<Self> {
        let grid = QuadratureGrid::for_basis(&basis)?;
        Self::new(basis, grid)
    }

    pub fn basis(&self) -> &Arc<SineBasis> {
        &self.basis
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn modes(&self) -> usize {
        self.basis.len()
    }

    pub fn nodes(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Grid values of `Σ c_k e_k`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let m = self.modes();
        self.values
            .chunks_exact(m)
            .map(|row| row.iter().zip(coeffs).map(|(e, c)| e * c).sum())
            .collect()
    }

    /// `∫ f e_k` for every mode, from grid values of `f`.
    pub fn project(&self, f: &[f64]) -> Vec<f64> {
        let m = self.modes();
        let mut out = alloc::vec![0.0; m];
        for ((row, w), fv) in self.values.chunks_exact(m).zip(&self.weights).zip(f) {
            let s = w * fv;
            if s == 0.0 {
                continue;
            }
            for (o, e) in out.iter_mut().zip(row) {
                *o += s * e;
            }
        }
        out
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// `∫ d e_j e_k` as an `M×M` matrix.
    pub fn weighted_gram(&self, d: &[f64]) -> DMatrix<f64> {
        let m = self.modes();
        let mut out = DMatrix::<f64>::zeros(m, m);
        for ((row, w), dv) in self.values.chunks_exact(m).zip(&self.weights).zip(d) {
            let s = w * dv;
            if s == 0.0 {
                continue;
            }
            for j in 0..m {
                let sj = s * row[j];
                if sj == 0.0 {
                    continue;
                }
                for k in j..m {
                    out[(j, k)] += sj * row[k];
                }
            }
        }
        for j in 0..m {
            for k in 0..j {
                out[(j, k)] = out[(k, j)];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{powi, PI};

    fn unit_1d(k: usize) -> Arc<SineBasis> {
        Arc::new(SineBasis::new(BoxDomain::unit(1).unwrap(), alloc::vec![k]).unwrap())
    }

    #[test]
    fn analytic_eigenvalues() {
        let b = unit_1d(4);
        assert!((b.eigenvalue(0).unwrap() - 9.869_604_401_089_358).abs() < 1e-12);
        let sq = SineBasis::new(BoxDomain::unit(2).unwrap(), alloc::vec![3, 3]).unwrap();
        assert!((sq.eigenvalue(0).unwrap() - 2.0 * PI * PI).abs() < 1e-12);
        let rect = SineBasis::new(BoxDomain::new(alloc::vec![1.0, 2.0]).unwrap(), alloc::vec![2, 2]).unwrap();
        assert_eq!(rect.modes()[0].index, alloc::vec![1, 1]);
        assert!((rect.eigenvalue(0).unwrap() - PI * PI * 1.25).abs() < 1e-12);
        assert!(matches!(b.eigenvalue(4), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn ties_are_lexicographic() {
        let sq = SineBasis::new(BoxDomain::unit(2).unwrap(), alloc::vec![3, 3]).unwrap();
        assert_eq!(sq.modes()[1].index, alloc::vec![1, 2]);
        assert_eq!(sq.modes()[2].index, alloc::vec![2, 1]);
        assert!(sq.eigenvalues().windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn invalid_domains() {
        assert!(BoxDomain::new(alloc::vec![]).is_err());
        assert!(BoxDomain::new(alloc::vec![1.0, 0.0]).is_err());
        assert!(SineBasis::new(BoxDomain::unit(2).unwrap(), alloc::vec![3]).is_err());
    }

    #[test]
    fn integrate_constant_and_normalisation() {
        let d = BoxDomain::unit(2).unwrap();
        let g = QuadratureGrid::new(d, &[16, 16], &[1, 1]).unwrap();
        let ones = alloc::vec![1.0; g.len()];
        assert!((integrate(&ones, &g).unwrap() - 1.0).abs() < 1e-12);
        assert!(integrate(&ones[1..], &g).is_err());

        let b = unit_1d(1);
        let g1 = QuadratureGrid::for_basis(&b).unwrap();
        let e1 = synthesize(&ScalarField::unit(b, 0, 1.0).unwrap(), &g1).unwrap();
        let sq: alloc::vec::Vec<f64> = e1.iter().map(|v| v * v).collect();
        let quart: alloc::vec::Vec<f64> = e1.iter().map(|v| powi(*v, 4)).collect();
        assert!((integrate(&sq, &g1).unwrap() - 1.0).abs() < 1e-10);
        assert!((integrate(&quart, &g1).unwrap() - 1.5).abs() < 1e-10);
    }

    #[test]
    fn synthesize_is_linear() {
        let b = unit_1d(3);
        let g = QuadratureGrid::for_basis(&b).unwrap();
        let zero = synthesize(&ScalarField::zeros(b.clone()), &g).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
        let e1 = synthesize(&ScalarField::unit(b.clone(), 0, 1.0).unwrap(), &g).unwrap();
        let e2 = synthesize(&ScalarField::unit(b.clone(), 1, 1.0).unwrap(), &g).unwrap();
        let both = synthesize(&ScalarField::new(b, alloc::vec![1.0, 1.0, 0.0]).unwrap(), &g).unwrap();
        for i in 0..g.len() {
            assert!((both[i] - e1[i] - e2[i]).abs() < 1e-14);
        }
        let x = g.axes()[0].nodes[3];
        assert!((e1[3] - sqrt(2.0) * sin(PI * x)).abs() < 1e-14);
    }

    #[test]
    fn mismatched_domain_rejected() {
        let b = unit_1d(2);
        let g = QuadratureGrid::new(BoxDomain::new(alloc::vec![2.0]).unwrap(), &[16], &[1]).unwrap();
        assert_eq!(
            synthesize(&ScalarField::zeros(b), &g).unwrap_err(),
            Error::DomainMismatch
        );
    }

    #[test]
    fn h1_inner_examples() {
        let b = unit_1d(2);
        let e1 = ScalarField::unit(b.clone(), 0, 1.0).unwrap();
        let e2 = ScalarField::unit(b.clone(), 1, 1.0).unwrap();
        let s = ScalarField::new(b.clone(), alloc::vec![1.0, 1.0]).unwrap();
        assert!((h1_inner(&e1, &e1).unwrap() - PI * PI).abs() < 1e-12);
        assert_eq!(h1_inner(&e1, &e2).unwrap(), 0.0);
        assert!((h1_inner(&s, &s).unwrap() - 5.0 * PI * PI).abs() < 1e-12);
        let other = ScalarField::zeros(unit_1d(3));
        assert_eq!(h1_inner(&e1, &other).unwrap_err(), Error::BasisMismatch);
    }

    #[test]
    fn galerkin_matches_free_functions() {
        let b = Arc::new(SineBasis::new(BoxDomain::unit(2).unwrap(), alloc::vec![3, 2]).unwrap());
        let gal = Galerkin::with_default_grid(b.clone()).unwrap();
        let c: alloc::vec::Vec<f64> = (0..b.len()).map(|i| 0.3 - 0.1 * i as f64).collect();
        let v1 = gal.synthesize(&c);
        let v2 = synthesize(&ScalarField::new(b.clone(), c.clone()).unwrap(), gal.grid()).unwrap();
        for (a, b) in v1.iter().zip(&v2) {
            assert!((a - b).abs() < 1e-13);
        }
        let back = gal.project(&v1);
        for (a, b) in back.iter().zip(&c) {
            assert!((a - b).abs() < 1e-10);
        }
        let x = [0.3, 0.7];
        let direct: f64 = (0..b.len()).map(|k| c[k] * b.mode_value(k, &x)).sum();
        assert!((b.evaluate(&c, &x) - direct).abs() < 1e-14);
    }
}
