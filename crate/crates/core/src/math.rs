//! Thin wrappers over `libm` so the numerics read like ordinary `f64` code.

pub const PI: f64 = core::f64::consts::PI;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    let mut acc = 1.0;
    let mut base = if n < 0 { 1.0 / x } else { x };
    let mut e = n.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// `|x|^q`, with `0^q = 0` for `q > 0`.
#[inline]
pub fn abs_pow(x: f64, q: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        0.0
    } else if q == 2.0 {
        a * a
    } else if q == 1.0 {
        a
    } else {
        libm::pow(a, q)
    }
}

/// `|x|^{q-2} x`, taken as zero at `x = 0` (continuous for `q > 1`).
#[inline]
pub fn signed_pow(x: f64, q: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if q == 2.0 {
        x
    } else {
        x.signum() * libm::pow(x.abs(), q - 1.0)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

/// `sqrt(Σ wᵢ aᵢ²)`
pub fn weighted_norm(a: &[f64], w: &[f64]) -> f64 {
    sqrt(a.iter().zip(w).map(|(x, w)| w * x * x).sum())
}

/// Surface area of the unit sphere `S^{n-1} ⊂ ℝⁿ`.
pub fn unit_sphere_area(n: usize) -> f64 {
    // |S^0| = 2, |S^1| = 2π, |S^{n+1}| = 2π |S^{n-1}| / n
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI * unit_sphere_area(n - 2) / (n as f64 - 2.0),
    }
}

/// Least-squares line `y = a + b x`; returns `(a, b, stderr_b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let r = b - intercept - slope * a;
                r * r
            })
            .sum();
        sqrt(rss / (nf - 2.0) / sxx)
    } else {
        0.0
    };
    Some((intercept, slope, stderr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn powers_at_zero() {
        assert_eq!(abs_pow(0.0, 1.5), 0.0);
        assert_eq!(signed_pow(0.0, 1.5), 0.0);
        assert!((signed_pow(-2.0, 3.0) + 4.0).abs() < 1e-15);
        assert_eq!(powi(2.0, -2), 0.25);
    }

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: std::vec::Vec<f64> = x.iter().map(|v| 1.5 - 2.0 * v).collect();
        let (a, b, se) = linear_fit(&x, &y).unwrap();
        assert!((a - 1.5).abs() < 1e-14 && (b + 2.0).abs() < 1e-14 && se < 1e-12);
    }
}
