//! End-to-end acceptance run. Prints one `criterion N: PASS|FAIL` line per
//! criterion and exits nonzero if any fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use weakcoupled::report::TaskData;
use weakcoupled::{execute, Command, Report, RunConfig};
use weakcoupled_core::estimates::{bn_integrals, calculus_inequalities, eps_grid, order_fit, CutoffSpec};
use weakcoupled_core::limit::{lambda0_threshold, sobolev_constant_at, LimitParams};
use weakcoupled_core::nehari::{lambda_threshold, nehari_project, zm_sup};
use weakcoupled_core::spectral::Galerkin;
use weakcoupled_core::system::{CoupledSystem, Functional};
use weakcoupled_core::{BoxDomain, PairField, ScalarField, SineBasis, SystemParams};

type Outcome = Result<String, String>;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&configs().join(name)).expect("sample config")
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn all_checks(report: &Report) -> Outcome {
    let failed: Vec<_> = report.results.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    ensure(failed.is_empty(), format!("failed checks: {failed:?}"))
}

fn run_task(cmd: Command, cfg: &RunConfig) -> Result<Report, String> {
    execute(cmd, cfg).map_err(|e| e.to_string())
}

fn lattice_eigenvalues(lengths: &[f64], cutoff: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    for &l in lengths {
        out = out
            .iter()
            .flat_map(|&acc| (1..=cutoff).map(move |k| acc + (PI * k as f64 / l).powi(2)))
            .collect();
    }
    out.sort_by(f64::total_cmp);
    out
}

fn eigenbasis() -> Outcome {
    let mut worst_eig = 0.0_f64;
    let mut worst_gram = 0.0_f64;
    for lengths in [vec![1.0], vec![1.0, 1.0]] {
        let cutoff = if lengths.len() == 1 { 50 } else { 10 };
        let domain = BoxDomain::new(lengths.clone()).unwrap();
        let basis = Arc::new(SineBasis::new(domain, vec![cutoff; lengths.len()]).unwrap());
        let expected = lattice_eigenvalues(&lengths, cutoff);
        for (k, want) in expected.iter().take(50).enumerate() {
            let got = basis.eigenvalue(k).unwrap();
            worst_eig = worst_eig.max((got - want).abs() / want);
            // -Δe = γe at an interior point, by second differences
            let x: Vec<f64> = lengths.iter().map(|l| 0.37 * l).collect();
            let h = 1e-4;
            let centre = basis.mode_value(k, &x);
            let mut lap = 0.0;
            for i in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                lap += (basis.mode_value(k, &xp) - 2.0 * centre + basis.mode_value(k, &xm)) / (h * h);
            }
            if (lap + got * centre).abs() > 1e-3 * got * centre.abs().max(1.0) {
                return Err(format!("mode {k} fails -Δe = γe: {lap} vs {}", -got * centre));
            }
        }
        let gal = Galerkin::with_default_grid(basis.clone()).unwrap();
        let gram = gal.weighted_gram(&vec![1.0; gal.nodes()]);
        for j in 0..gram.nrows() {
            for k in 0..gram.ncols() {
                let id = if j == k { 1.0 } else { 0.0 };
                worst_gram = worst_gram.max((gram[(j, k)] - id).abs());
            }
        }
    }
    ensure(
        worst_eig <= 1e-12 && worst_gram <= 1e-8,
        format!("eigenvalue rel err {worst_eig:.1e}, Gram err {worst_gram:.1e}"),
    )
}

fn one_dim_system(modes: usize, kappa: f64, lambda: f64) -> CoupledSystem {
    let basis = Arc::new(SineBasis::new(BoxDomain::unit(1).unwrap(), vec![modes]).unwrap());
    let gal = Arc::new(Galerkin::with_default_grid(basis).unwrap());
    let p = SystemParams::new(1, [kappa, kappa], [1.0, 1.0], lambda, 2.0, 2.0).unwrap();
    CoupledSystem::new(p, gal).unwrap()
}

fn gradient() -> Outcome {
    use rand::{Rng, SeedableRng};
    let sys = one_dim_system(16, 0.0, 1.0);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let x: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let exact: f64 = sys.gradient(&x).iter().zip(&v).map(|(a, b)| a * b).sum();
        let at = |s: f64| -> f64 { sys.energy(&x.iter().zip(&v).map(|(a, b)| a + s * b).collect::<Vec<_>>()) };
        let h = 1e-5;
        let fd = (at(h) - at(-h)) / (2.0 * h);
        worst = worst.max((fd - exact).abs() / exact.abs().max(1e-3));
    }
    ensure(worst <= 1e-5, format!("worst relative gap {worst:.1e} over 20 fields"))
}

fn nehari_ray() -> Outcome {
    let sys = one_dim_system(8, 0.0, 1.0);
    let split = sys.default_split().unwrap();
    let e1 = ScalarField::unit(sys.basis().clone(), 0, 1.0).unwrap();
    let u = PairField::new(e1, ScalarField::zeros(sys.basis().clone())).unwrap();
    let projected = nehari_project(&sys, &split, &u).map_err(|e| e.to_string())?;
    let energy = sys.energy_of(&projected).unwrap();
    let want = PI.powi(4) / 6.0;
    let rel = (energy - want).abs() / want;
    ensure(rel <= 1e-6, format!("J = {energy:.10}, π⁴/6 = {want:.10}, rel {rel:.1e}"))
}

fn pipeline() -> Outcome {
    let mut lines = Vec::new();
    for kappa in [0.0, 15.0] {
        let mut cfg = load("ground_state.json");
        cfg.problem.kappa = [kappa, kappa];
        let started = Instant::now();
        let report = run_task(Command::GroundState, &cfg)?;
        all_checks(&report).map_err(|e| format!("κ = {kappa}: {e}"))?;
        if started.elapsed() > Duration::from_secs(120) {
            return Err(format!("κ = {kappa} took {:?}", started.elapsed()));
        }
        let TaskData::GroundState { solutions } = &report.results.data else {
            return Err("wrong task data".into());
        };
        let s = &solutions[0];
        lines.push(format!("κ={kappa}: J={:.6} < c₀={:.6}, |∇|={:.1e}", s.energy, report.thresholds.c0.unwrap_or(f64::NAN), s.grad_norm));
    }
    Ok(lines.join("; "))
}

fn multiplicity() -> Result<(String, String), String> {
    let cfg = load("multiplicity.json");
    let report = run_task(Command::Multiplicity, &cfg)?;
    let TaskData::Multiplicity { solutions, .. } = &report.results.data else {
        return Err("wrong task data".into());
    };
    let energies: Vec<String> = solutions.iter().map(|s| format!("{:.4}", s.energy)).collect();
    let summary = format!("{} orbits, energies {energies:?}", solutions.len());
    let json = report.to_json().map_err(|e| e.to_string())?;
    all_checks(&report)?;
    if solutions.len() < 2 {
        return Err(summary);
    }
    Ok((summary, json))
}

fn thresholds() -> Outcome {
    let report = run_task(Command::Thresholds, &load("thresholds.json"))?;
    all_checks(&report)?;
    let TaskData::Thresholds { sweep, .. } = &report.results.data else {
        return Err("wrong task data".into());
    };
    let bar = report.thresholds.lambda_bar.as_ref().ok_or("no threshold")?;
    if sweep.len() != 10 || bar.lo >= bar.hi {
        return Err(format!("{} sweep rows, bracket [{}, {}]", sweep.len(), bar.lo, bar.hi));
    }
    // γ₃ = 9π² ≤ κ: Z₃ already holds nonpositive directions
    let sys = one_dim_system(12, 9.0 * PI * PI + 1.0, 1.0);
    let zero = [0.5, 5.0, 50.0].iter().all(|&l| matches!(zm_sup(&sys, 3, l), Ok(v) if v == 0.0));
    let t = lambda_threshold(&sys, 3, 1.0).map_err(|e| e.to_string())?;
    ensure(
        zero && t.lambda == 0.0,
        format!("Λ̄₃ = {:.4} in [{:.4}, {:.4}]; degenerate case sup = 0, Λ̄₃ = {}", bar.value, bar.lo, bar.hi, t.lambda),
    )
}

fn limit() -> Outcome {
    let report = run_task(Command::Limit, &load("limit.json"))?;
    all_checks(&report)?;
    let TaskData::Limit(d) = &report.results.data else {
        return Err("wrong task data".into());
    };
    let value = report.thresholds.s_infty.ok_or("no S_infty")?;
    let want = 2.0 / 6f64.sqrt() * d.sobolev;
    let lambda0 = report.thresholds.lambda0.ok_or("no Λ₀")?;
    let rel = (value - want).abs() / want;
    ensure(
        (d.r_lambda - 1.0).abs() <= 1e-6 && rel <= 1e-6 && d.sobolev_identity_gap <= 1e-8 && lambda0 <= 0.5 + 1e-6,
        format!("r_λ = {:.9}, S_∞ rel err {rel:.1e}, Λ₀ = {lambda0:.8}", d.r_lambda),
    )
}

fn synchronized() -> Outcome {
    let report = run_task(Command::Synchronized, &load("synchronized.json"))?;
    all_checks(&report)?;
    let TaskData::Synchronized { roots, solutions, .. } = &report.results.data else {
        return Err("wrong task data".into());
    };
    let want = (2.0f64 / 3.0).sqrt();
    let ok = roots.len() == 1 && (roots[0].r - want).abs() <= 1e-10 && solutions.len() == 1;
    ensure(
        ok,
        format!("roots {:?}, √(2/3) = {want}, {} assembled", roots.iter().map(|r| r.r).collect::<Vec<_>>(), solutions.len()),
    )
}

fn orders() -> Outcome {
    let mut worst = 0.0_f64;
    for dim in [4, 5] {
        let cutoff = CutoffSpec::for_inradius(0.5).unwrap();
        let bn: Vec<_> = eps_grid(cutoff.delta, 7)
            .iter()
            .map(|&e| bn_integrals(e, &cutoff, dim))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let fit = order_fit(&bn, dim).map_err(|e| e.to_string())?;
        for f in &fit.fits {
            if let Some(expected) = f.expected {
                worst = worst.max((f.slope - expected).abs());
            }
        }
        if !fit.all_pass() {
            return Err(format!("N={dim}: {:?}", fit.fits.iter().map(|f| (f.quantity, f.slope)).collect::<Vec<_>>()));
        }
        let a = sobolev_constant_at(dim, 1.0).unwrap().grad_norm_sq;
        let b = sobolev_constant_at(dim, 0.5).unwrap().grad_norm_sq;
        if (a - b).abs() > 1e-8 * a {
            return Err(format!("N={dim}: ‖U_ε‖² moved from {a} to {b}"));
        }
    }
    Ok(format!("largest slope deviation {worst:.3}"))
}

fn linking_bound() -> Outcome {
    let mut cfg = load("estimates_n5.json");
    let gamma1 = cfg.problem.lengths.iter().map(|l| (PI / l).powi(2)).sum::<f64>();
    cfg.problem.kappa = [0.5 * gamma1; 2];
    let p = &cfg.problem;
    let lp = LimitParams::new(5, p.mu, p.lambda, p.alpha, p.beta).unwrap();
    let l0 = lambda0_threshold(&lp).map_err(|e| e.to_string())?;
    cfg.problem.lambda = 2.0 * l0.lambda;
    let report = run_task(Command::VerifyEstimates, &cfg)?;
    let TaskData::VerifyEstimates(d) = &report.results.data else {
        return Err("wrong task data".into());
    };
    let claim = d.claim.as_ref().ok_or("claim sweep skipped")?;
    let ray_ok = report.results.checks.iter().any(|c| c.name == "ray-closed-form" && c.pass);
    let eps_ok = [1e-2, 1e-3].iter().all(|e| claim.points.iter().any(|p| p.eps == *e && p.below && p.outer_ok));
    let best: Vec<String> = claim.points.iter().map(|p| format!("{:.5}", p.best)).collect();
    ensure(
        ray_ok && eps_ok,
        format!("λ = 2Λ₀ = {:.5}, best {best:?} vs target {:.5}", cfg.problem.lambda, claim.target),
    )
}

fn calculus() -> Outcome {
    let r_grid: Vec<f64> = (0..=20).map(|i| 0.1 * i as f64).collect();
    let mut worst = 0.0_f64;
    for q in [1.5, 2.0, 3.0] {
        let r = calculus_inequalities(q, 2.0, 2.0, 1.0, &r_grid, 10_000, 3).map_err(|e| e.to_string())?;
        if !r.q_pass {
            return Err(format!("q = {q}: ratio {}", r.q_ratio));
        }
        worst = worst.max(r.q_ratio);
    }
    for (a, b) in [(2.0, 2.0), (1.5, 2.5)] {
        let r = calculus_inequalities(2.0, a, b, 1.0, &r_grid, 3, 300).map_err(|e| e.to_string())?;
        if !r.ab_pass {
            return Err(format!("(α,β) = ({a},{b}): ratio {}", r.ab_ratio));
        }
        worst = worst.max(r.ab_ratio);
    }
    ensure(worst <= 1.0 + 1e-9, format!("largest ratio {worst:.6}"))
}

fn main() -> ExitCode {
    let limits = [1, 10, 1, 240, 600, 300, 60, 60, 120, 300, 10, 600];
    let mut failed = 0;
    let mut report = |n: usize, started: Instant, outcome: Outcome| {
        let elapsed = started.elapsed();
        let within = elapsed <= Duration::from_secs(limits[n - 1]);
        let (pass, detail) = match outcome {
            Ok(d) => (within, d),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        let status = if pass { "PASS" } else { "FAIL" };
        println!("criterion {n}: {status} ({:.2} s) {detail}", elapsed.as_secs_f64());
    };

    let t = Instant::now();
    report(1, t, eigenbasis());
    let t = Instant::now();
    report(2, t, gradient());
    let t = Instant::now();
    report(3, t, nehari_ray());
    let t = Instant::now();
    report(4, t, pipeline());
    let t = Instant::now();
    let first = multiplicity();
    report(5, t, first.as_ref().map(|(s, _)| s.clone()).map_err(Clone::clone));
    let t = Instant::now();
    report(6, t, thresholds());
    let t = Instant::now();
    report(7, t, limit());
    let t = Instant::now();
    report(8, t, synchronized());
    let t = Instant::now();
    report(9, t, orders());
    let t = Instant::now();
    report(10, t, linking_bound());
    let t = Instant::now();
    report(11, t, calculus());
    let t = Instant::now();
    let determinism = match (&first, multiplicity()) {
        (Ok((_, a)), Ok((_, b))) => ensure(*a == b, format!("{} bytes, identical: {}", a.len(), *a == b)),
        (Err(e), _) => Err(e.clone()),
        (_, Err(e)) => Err(e),
    };
    report(12, t, determinism);

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
