use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::math::{abs_pow, dot, signed_pow, sqrt};
use crate::optimize::armijo;
use crate::quadrature::Rule;
use crate::spectral::default_nodes;
use crate::system::{Component, CoupledSystem, SpectralSplit};

/// Axis-aligned sub-box `ω = Π [loᵢ, hiᵢ]` of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SubBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SubBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(invalid!("sub-box corners must have equal, positive dimension"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(invalid!("sub-box needs lo < hi on every axis"));
        }
        Ok(Self { lo, hi })
    }

    /// The corner cell `Π [0, fraction·Lᵢ]`.
    pub fn corner(lengths: &[f64], fraction: f64) -> Result<Self> {
        Self::new(vec![0.0; lengths.len()], lengths.iter().map(|l| fraction * l).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedNorm {
    /// Smallest `∫_ω |w₁|^α|w₂|^β` found with `‖w₁‖ = ‖w₂‖ = 1`.
    pub value: f64,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub starts: usize,
}

/// Upper estimate of the best constant `C` in
/// `∫_ω |w₁|^α|w₂|^β ≥ C ‖w₁‖^α‖w₂‖^β` on `X̃₁ × X̃₂`.
pub fn mixed_norm_constant(
    sys: &CoupledSystem,
    split: &SpectralSplit,
    omega: &SubBox,
    samples: usize,
    seed: u64,
) -> Result<MixedNorm> {
    let basis = sys.basis();
    let dom = basis.domain();
    if omega.lo.len() != dom.dim() {
        return Err(invalid!("sub-box dimension {} differs from the domain", omega.lo.len()));
    }
    if omega.lo.iter().any(|v| *v < 0.0) || omega.hi.iter().zip(dom.lengths()).any(|(h, l)| h > l) {
        return Err(invalid!("sub-box leaves the domain"));
    }
    let tilde = [split.tilde(Component::First), split.tilde(Component::Second)];
    if tilde.iter().any(|t| t.is_empty()) {
        return Err(Error::Precondition("X̃ is trivial in one component".into()));
    }
    let params = sys.params();
    let (alpha, beta) = (params.alpha, params.beta);
    let metric: [Vec<f64>; 2] = core::array::from_fn(|i| {
        tilde[i]
            .iter()
            .map(|&k| basis.eigenvalue(k).expect("split indices are valid"))
            .collect()
    });
    // tensor Gauss–Legendre on ω, mode values per node
    let axes: Vec<Rule> = omega
        .lo
        .iter()
        .zip(&omega.hi)
        .zip(basis.cutoffs())
        .map(|((&a, &b), &k)| Rule::uniform(a, b, 1, default_nodes(k)))
        .collect();
    let total: usize = axes.iter().map(Rule::len).product();
    let mut weights = Vec::with_capacity(total);
    let mut e: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut idx = vec![0usize; axes.len()];
    let mut x = vec![0.0; axes.len()];
    for _ in 0..total {
        let mut w = 1.0;
        for (a, rule) in axes.iter().enumerate() {
            x[a] = rule.nodes[idx[a]];
            w *= rule.weights[idx[a]];
        }
        weights.push(w);
        for i in 0..2 {
            e[i].extend(tilde[i].iter().map(|&k| basis.mode_value(k, &x)));
        }
        for a in (0..axes.len()).rev() {
            idx[a] += 1;
            if idx[a] < axes[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
    let d = [tilde[0].len(), tilde[1].len()];
    let values = |c: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let (c1, c2) = c.split_at(d[0]);
        let v1 = (0..total).map(|n| dot(&e[0][n * d[0]..(n + 1) * d[0]], c1)).collect();
        let v2 = (0..total).map(|n| dot(&e[1][n * d[1]..(n + 1) * d[1]], c2)).collect();
        (v1, v2)
    };
    let objective = |c: &[f64]| -> f64 {
        let (v1, v2) = values(c);
        (0..total)
            .map(|n| weights[n] * abs_pow(v1[n], alpha) * abs_pow(v2[n], beta))
            .sum()
    };
    let gradient = |c: &[f64]| -> Vec<f64> {
        let (v1, v2) = values(c);
        let mut g = vec![0.0; d[0] + d[1]];
        for n in 0..total {
            let g1 = weights[n] * alpha * signed_pow(v1[n], alpha) * abs_pow(v2[n], beta);
            let g2 = weights[n] * beta * abs_pow(v1[n], alpha) * signed_pow(v2[n], beta);
            for k in 0..d[0] {
                g[k] += g1 * e[0][n * d[0] + k];
            }
            for k in 0..d[1] {
                g[d[0] + k] += g2 * e[1][n * d[1] + k];
            }
        }
        g
    };
    let normalize = |c: &mut [f64]| {
        let (c1, c2) = c.split_at_mut(d[0]);
        for (part, m) in [(c1, &metric[0]), (c2, &metric[1])] {
            let n = sqrt(part.iter().zip(m.iter()).map(|(v, g)| g * v * v).sum());
            part.iter_mut().for_each(|v| *v /= n);
        }
    };
    // Riemannian gradient on the product of the two unit spheres
    let tangent = |c: &[f64], g: &[f64]| -> Vec<f64> {
        let mut r = vec![0.0; c.len()];
        let mut off = 0;
        for (i, m) in metric.iter().enumerate() {
            let range = off..off + d[i];
            let radial: f64 = range.clone().map(|k| g[k] * c[k]).sum();
            for (k, gk) in range.zip(m.iter()) {
                r[k] = g[k] / gk - radial * c[k];
            }
            off += d[i];
        }
        r
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = if d == [1, 1] { 1 } else { samples.max(1) };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..samples {
        let mut c: Vec<f64> = (0..d[0] + d[1]).map(|_| rng.random_range(-1.0..1.0)).collect();
        normalize(&mut c);
        let mut f = objective(&c);
        if d != [1, 1] {
            for _ in 0..300 {
                let g = gradient(&c);
                let r = tangent(&c, &g);
                let slope = -dot(&r, &g);
                if slope.abs() <= 1e-14 * f.max(1e-300) {
                    break;
                }
                let trial = |s: f64| {
                    let mut y: Vec<f64> = c.iter().zip(&r).map(|(a, b)| a - s * b).collect();
                    normalize(&mut y);
                    y
                };
                let step0 = 1.0 / metric.iter().flatten().fold(f64::MIN_POSITIVE, |a, b| a.max(1.0 / b));
                match armijo(|s| objective(&trial(s)), f, slope, step0.max(1e-3), 1e-4, 1e-14) {
                    Some((s, v)) => {
                        c = trial(s);
                        f = v;
                    }
                    None => break,
                }
            }
        }
        if best.as_ref().is_none_or(|(b, _)| f < *b) {
            best = Some((f, c));
        }
    }
    let (value, c) = best.expect("at least one start");
    Ok(MixedNorm {
        value,
        w1: c[..d[0]].to_vec(),
        w2: c[d[0]..].to_vec(),
        starts: samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{powi, PI};
    use crate::spectral::{BoxDomain, Galerkin, SineBasis};
    use crate::system::SystemParams;
    use alloc::sync::Arc;

    fn system(kappa: [f64; 2]) -> (CoupledSystem, SpectralSplit) {
        let basis = Arc::new(SineBasis::new(BoxDomain::unit(1).unwrap(), vec![8]).unwrap());
        let gal = Arc::new(Galerkin::with_default_grid(basis).unwrap());
        let sp = SystemParams::new(1, kappa, [1.0, 1.0], 1.0, 2.0, 2.0).unwrap();
        let sys = CoupledSystem::new(sp, gal).unwrap();
        let split = sys.default_split().unwrap();
        (sys, split)
    }

    #[test]
    fn single_mode_exact() {
        // X̃ᵢ = span(e₁), ‖e₁‖² = π², so w = e₁/π and ∫₀ᵃ w⁴ is explicit
        let (sys, split) = system([15.0, 15.0]);
        let omega = SubBox::new(vec![0.0], vec![0.25]).unwrap();
        let m = mixed_norm_constant(&sys, &split, &omega, 4, 0).unwrap();
        // ∫₀^{1/4} 4 sin⁴(πx) dx = 3/8 - 1/(2π) + 1/(32π)·0 ... computed below
        let exact = {
            let a = 0.25;
            let f = |x: f64| 4.0 * (3.0 * x / 8.0 - crate::math::sin(2.0 * PI * x) / (4.0 * PI) + crate::math::sin(4.0 * PI * x) / (32.0 * PI));
            (f(a) - f(0.0)) / powi(PI, 4)
        };
        assert!((m.value - exact).abs() < 1e-12 * exact, "{} vs {exact}", m.value);
    }

    #[test]
    fn monotone_in_domain_and_positive() {
        let (sys, split) = system([50.0, 50.0]);
        let big = SubBox::new(vec![0.0], vec![0.4]).unwrap();
        let small = SubBox::new(vec![0.0], vec![0.2]).unwrap();
        let a = mixed_norm_constant(&sys, &split, &big, 8, 3).unwrap();
        let b = mixed_norm_constant(&sys, &split, &small, 8, 3).unwrap();
        assert!(a.value > 0.0 && b.value > 0.0);
        assert!(b.value <= a.value);
    }

    #[test]
    fn trivial_tilde_rejected() {
        let (sys, split) = system([1.0, 50.0]);
        let omega = SubBox::new(vec![0.0], vec![0.5]).unwrap();
        assert!(matches!(
            mixed_norm_constant(&sys, &split, &omega, 4, 0),
            Err(Error::Precondition(_))
        ));
    }
}
