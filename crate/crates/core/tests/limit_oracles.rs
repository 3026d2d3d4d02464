use approx::assert_relative_eq;
use weakcoupled_core::limit::{
    f_lambda, lambda0_threshold, minimizer_amplitudes, s_infty, sobolev_constant, sobolev_constant_at,
    st_grid_infimum, LimitParams,
};

fn closed_form_sobolev(dim: usize) -> f64 {
    let n = dim as f64;
    std::f64::consts::PI * n * (n - 2.0) * (libm::tgamma(n / 2.0) / libm::tgamma(n)).powf(2.0 / n)
}

#[test]
fn sobolev_constant_matches_closed_form() {
    assert_relative_eq!(closed_form_sobolev(4), 8.0 * std::f64::consts::PI / 6f64.sqrt(), max_relative = 1e-14);
    for dim in 3..=6 {
        let sc = sobolev_constant(dim).unwrap();
        assert_relative_eq!(sc.s, closed_form_sobolev(dim), max_relative = 1e-8);
        assert_relative_eq!(sc.grad_norm_sq, sc.crit_integral, max_relative = 1e-8);
    }
}

#[test]
fn bubble_norm_is_scale_invariant() {
    for dim in [4, 5] {
        let a = sobolev_constant_at(dim, 1.0).unwrap();
        let b = sobolev_constant_at(dim, 0.5).unwrap();
        assert_relative_eq!(a.grad_norm_sq, b.grad_norm_sq, max_relative = 1e-8);
    }
}

#[test]
fn symmetric_four_dim_limit() {
    let lp = LimitParams::new(4, [1.0, 1.0], 1.0, 2.0, 2.0).unwrap();
    let s = sobolev_constant(4).unwrap().s;
    let si = s_infty(&lp, s).unwrap();
    assert!((si.r_lambda - 1.0).abs() < 1e-6);
    assert_relative_eq!(si.value, 2.0 / 6f64.sqrt() * s, max_relative = 1e-6);
    let grid = st_grid_infimum(&lp, s, 400);
    assert_relative_eq!(grid, si.value, max_relative = 1e-4);
    assert!(si.value <= 2.0 * s / (2.0 + 4.0 * lp.lambda).sqrt() * (1.0 + 1e-12));
    // f at r = 1 equals 2/√(2 + 4λ)
    assert_relative_eq!(f_lambda(1.0, &lp), 2.0 / 6f64.sqrt(), max_relative = 1e-15);
    let l0 = lambda0_threshold(&lp).unwrap();
    assert!(l0.lambda <= 0.5 + 1e-6 && l0.lo < l0.hi);
}

#[test]
fn amplitudes_reproduce_the_limit_energy() {
    let lp = LimitParams::new(4, [1.0, 2.0], 1.5, 2.0, 2.0).unwrap();
    let sc = sobolev_constant(4).unwrap();
    let si = s_infty(&lp, sc.s).unwrap();
    let a = minimizer_amplitudes(&lp, &sc, si.r_lambda).unwrap();
    assert_relative_eq!(a.s / a.t, si.r_lambda, max_relative = 1e-12);
    assert_relative_eq!(a.energy, si.value.powi(2) / 4.0, max_relative = 1e-6);
}

#[test]
fn limit_constant_decreases_in_lambda() {
    let s = sobolev_constant(4).unwrap().s;
    let mut prev = f64::INFINITY;
    for lambda in [0.6, 0.8, 1.0, 2.0, 4.0, 8.0] {
        let lp = LimitParams::new(4, [1.0, 1.0], lambda, 2.0, 2.0).unwrap();
        let v = s_infty(&lp, s).unwrap().value;
        assert!(v < prev, "λ={lambda}: {v} !< {prev}");
        prev = v;
    }
}

#[test]
fn lambda0_nonincreasing_in_mu1() {
    // the end level min{μ₁^{-2/2*}, μ₂^{-2/2*}} stays put only while μ₁ ≤ μ₂
    let mut prev = f64::INFINITY;
    for mu1 in [0.25, 0.5, 0.75, 0.9, 1.0] {
        let lp = LimitParams::new(4, [mu1, 1.0], 1.0, 2.0, 2.0).unwrap();
        let l0 = lambda0_threshold(&lp).unwrap();
        assert!(l0.lambda <= prev * (1.0 + 1e-6), "μ₁={mu1}: {} > {prev}", l0.lambda);
        prev = l0.lambda;
    }
}
