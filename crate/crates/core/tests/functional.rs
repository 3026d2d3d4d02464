use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weakcoupled_core::nehari::{nehari_project, project_flat, Subspaces};
use weakcoupled_core::spectral::Galerkin;
use weakcoupled_core::system::{CoupledSystem, Functional};
use weakcoupled_core::{BoxDomain, PairField, ScalarField, SineBasis, SystemParams};

fn system(modes: usize, kappa: f64, lambda: f64) -> CoupledSystem {
    let basis = Arc::new(SineBasis::new(BoxDomain::unit(1).unwrap(), vec![modes]).unwrap());
    let gal = Arc::new(Galerkin::with_default_grid(basis).unwrap());
    let p = SystemParams::new(1, [kappa, kappa], [1.0, 1.0], lambda, 2.0, 2.0).unwrap();
    CoupledSystem::new(p, gal).unwrap()
}

#[test]
fn gradient_matches_central_differences() {
    let sys = system(16, 0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let x: Vec<f64> = (0..32).map(|k| rng.random_range(-1.0..1.0) / (1 + k % 16) as f64).collect();
        let v: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = sys.gradient(&x);
        let exact: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
        let h = 1e-5;
        let shifted = |s: f64| -> Vec<f64> { x.iter().zip(&v).map(|(a, b)| a + s * b).collect() };
        let fd = (sys.energy(&shifted(h)) - sys.energy(&shifted(-h))) / (2.0 * h);
        assert_relative_eq!(fd, exact, max_relative = 1e-5, epsilon = 1e-9);
    }
}

#[test]
fn quartic_integral_against_trapezoid() {
    // e₁ = √2 sin(πx); the trapezoid rule is exact for trigonometric polynomials
    let sys = system(4, 0.0, 1.0);
    let e1 = ScalarField::unit(sys.basis().clone(), 0, 1.0).unwrap();
    let u = PairField::new(e1, ScalarField::zeros(sys.basis().clone())).unwrap();
    let n = 64;
    let trap: f64 = (0..n).map(|i| (2f64.sqrt() * (PI * i as f64 / n as f64).sin()).powi(4)).sum::<f64>() / n as f64;
    assert_relative_eq!(trap, 1.5, max_relative = 1e-14);
    let pi = sys.power_integrals(&u).unwrap();
    assert_relative_eq!(pi.p1, trap, max_relative = 1e-12);
}

#[test]
fn nehari_ray_energy_of_first_mode() {
    let sys = system(8, 0.0, 1.0);
    let split = sys.default_split().unwrap();
    let e1 = ScalarField::unit(sys.basis().clone(), 0, 1.0).unwrap();
    let u = PairField::new(e1, ScalarField::zeros(sys.basis().clone())).unwrap();
    let projected = nehari_project(&sys, &split, &u).unwrap();
    assert_relative_eq!(sys.energy_of(&projected).unwrap(), PI.powi(4) / 6.0, max_relative = 1e-6);
}

#[test]
fn projection_lands_on_the_nehari_set() {
    // one negative mode per component, so the projection also fixes the X̃ part
    let sys = system(8, 15.0, 2.0);
    let split = sys.default_split().unwrap();
    let sub = Subspaces::of_split(&split);
    let mut x = vec![0.0; 16];
    x[0] = 0.3;
    x[1] = 1.0;
    x[8] = -0.2;
    x[10] = 0.7;
    let y = project_flat(&sys, &sub, &x).unwrap();
    let g = sys.gradient(&y);
    let radial: f64 = g.iter().zip(&y).map(|(a, b)| a * b).sum();
    assert!(radial.abs() < 1e-8 * sys.quadratic(&y).abs().max(1.0));
    for k in split.tilde_flat() {
        assert!(g[k].abs() < 1e-8, "tilde gradient {k}: {}", g[k]);
    }
    assert!(sys.energy(&y) > 0.0);
}
