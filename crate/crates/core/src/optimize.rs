//! Small derivative-free and quasi-Newton helpers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{dot, sqrt};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimize a unimodal `f` on `[a, b]`; returns `(x, f(x))`.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // The interior probes can beat the midpoint on flat plateaus.
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, cand| if cand.1 < best.1 { cand } else { best })
}

/// Maximize on a log-spaced scan over `[lo, hi]` followed by golden refinement
/// around the best scan point.
pub fn scan_then_golden_max(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> (f64, f64) {
    let points = points.max(3);
    let step = (hi - lo) / (points - 1) as f64;
    let mut best = (lo, f(lo));
    let mut best_i = 0;
    for i in 1..points {
        let x = lo + step * i as f64;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    let (x, v) = golden_section(|x| -f(x), a, b, tol);
    if -v > best.1 {
        (x, -v)
    } else {
        best
    }
}

/// Bisection for the switch point of a monotone predicate with
/// `pred(lo) == false` and `pred(hi) == true`. Returns the final bracket.
pub fn bisect_predicate(
    mut pred: impl FnMut(f64) -> Result<bool>,
    mut lo: f64,
    mut hi: f64,
    rel_width: f64,
    max_iter: usize,
) -> Result<(f64, f64)> {
    if pred(lo)? {
        return Err(Error::BracketFailure(format!("predicate already holds at lower end {lo:e}")));
    }
    if !pred(hi)? {
        return Err(Error::BracketFailure(format!("predicate fails at upper end {hi:e}")));
    }
    for _ in 0..max_iter {
        if hi - lo <= rel_width * hi.abs().max(f64::MIN_POSITIVE) {
            return Ok((lo, hi));
        }
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Root of a continuous `f` with a sign change on `[a, b]`.
pub fn bisect_root(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || (b - a) <= tol {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Backtracking line search. Returns the accepted step and value, or `None`
/// when no step of length at least `min_step` gives sufficient decrease.
pub fn armijo(
    mut f: impl FnMut(f64) -> f64,
    f0: f64,
    slope: f64,
    mut step: f64,
    c1: f64,
    min_step: f64,
) -> Option<(f64, f64)> {
    while step >= min_step {
        let v = f(step);
        if v.is_finite() && v <= f0 + c1 * step * slope {
            return Some((step, v));
        }
        step *= 0.5;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f` with gradient `g` by BFGS with an Armijo line search.
pub fn bfgs(
    f: impl Fn(&[f64]) -> f64,
    g: impl Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    opts: BfgsOptions,
) -> BfgsResult {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut gx = g(&x);
    let mut h = identity(n);
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..opts.max_iter {
        iterations = it;
        let gn = sqrt(dot(&gx, &gx));
        if gn <= opts.grad_tol {
            converged = true;
            break;
        }
        let mut d = mat_vec(&h, &gx);
        d.iter_mut().for_each(|v| *v = -*v);
        let mut slope = dot(&d, &gx);
        if slope >= 0.0 {
            h = identity(n);
            d = gx.iter().map(|v| -v).collect();
            slope = -gn * gn;
        }
        let trial = |s: f64| -> Vec<f64> { x.iter().zip(&d).map(|(a, b)| a + s * b).collect() };
        let Some((step, fnew)) = armijo(|s| f(&trial(s)), fx, slope, 1.0, 1e-4, 1e-16) else {
            break;
        };
        let xn = trial(step);
        let gn_vec = g(&xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn_vec.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 * sqrt(dot(&s, &s) * dot(&y, &y)) {
            bfgs_update(&mut h, &s, &y, sy);
        }
        let stalled = (fx - fnew).abs() <= 1e-15 * fx.abs().max(1.0);
        x = xn;
        fx = fnew;
        gx = gn_vec;
        if stalled {
            // no progress left at working precision
            converged = sqrt(dot(&gx, &gx)) <= opts.grad_tol.max(1e-8);
            break;
        }
    }
    let grad_norm = sqrt(dot(&gx, &gx));
    BfgsResult {
        x,
        value: fx,
        grad_norm,
        iterations,
        converged: converged || grad_norm <= opts.grad_tol,
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r
        })
        .collect()
}

fn mat_vec(h: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    h.iter().map(|row| dot(row, v)).collect()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    let n = s.len();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{cos, powi, PI};

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, v) = golden_section(|x| (x - 0.3) * (x - 0.3), -2.0, 5.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9);
        assert!(v < 1e-18);
    }

    #[test]
    fn scan_max_of_cosine() {
        let (x, v) = scan_then_golden_max(|x| cos(x - 1.0), -3.0, 3.0, 61, 1e-12);
        assert!((x - 1.0).abs() < 1e-6);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bisection_contracts() {
        let (lo, hi) = bisect_predicate(|x| Ok(x * x > 2.0), 0.0, 2.0, 1e-10, 200).unwrap();
        assert!(lo * lo <= 2.0 && hi * hi > 2.0 && hi - lo < 1e-9);
        assert!(bisect_predicate(|x| Ok(x > -1.0), 0.0, 2.0, 1e-10, 200).is_err());
        let r = bisect_root(cos, 0.0, 3.0, 1e-14).unwrap();
        assert!((r - PI / 2.0).abs() < 1e-13);
        assert!(bisect_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
    }

    #[test]
    fn bfgs_rosenbrock() {
        let f = |x: &[f64]| 100.0 * powi(x[1] - x[0] * x[0], 2) + powi(1.0 - x[0], 2);
        let g = |x: &[f64]| {
            vec![
                -400.0 * x[0] * (x[1] - x[0] * x[0]) - 2.0 * (1.0 - x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ]
        };
        let r = bfgs(f, g, &[-1.2, 1.0], BfgsOptions { max_iter: 2000, grad_tol: 1e-9 });
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }
}
