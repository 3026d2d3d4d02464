//! One function per subcommand. Each returns a complete [`Report`]; files are
//! written by the caller.

use std::collections::BTreeMap;

use rayon::prelude::*;
use weakcoupled_core::estimates::{
    bn_integrals, calculus_inequalities, claim_sweep, eps_grid, is_dirichlet_eigenvalue, limit_level, order_fit,
    ray_max_from, ClaimConfig, CutoffSpec, OrderModel,
};
use weakcoupled_core::limit::{
    f_lambda, lambda0_threshold, minimizer_amplitudes, s_infty, sobolev_constant, st_grid_infimum, LimitParams,
};
use weakcoupled_core::nehari::{
    c0_threshold, classify, ground_state, lambda_threshold, multiplicity_search, orbit_dedup, scalar_ground_state,
    zm_sup, Classification, Subspaces,
};
use weakcoupled_core::sync::{euler_identities, find_roots, synchronized_solution};
use weakcoupled_core::system::ScalarProblem;

use crate::config::RunConfig;
use crate::report::{
    CalculusRow, Check, ClaimData, ClaimRow, EstimatesData, FitRow, IntegralRow, LambdaBar, LimitData, Report,
    Results, RootRow, Solution, SweepRow, TaskData, Thresholds, SCHEMA,
};
use crate::{CliError, Command};

type Timing = BTreeMap<String, u64>;

struct Outcome {
    checks: Vec<Check>,
    notes: Vec<String>,
    data: TaskData,
    thresholds: Thresholds,
    timing: Timing,
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let out = match command {
        Command::GroundState => ground(cfg)?,
        Command::Multiplicity => multiplicity(cfg)?,
        Command::Thresholds => thresholds(cfg)?,
        Command::Limit => limit(cfg)?,
        Command::Synchronized => synchronized(cfg)?,
        Command::VerifyEstimates => estimates(cfg)?,
    };
    let report = Report {
        schema: SCHEMA.to_string(),
        config: cfg.clone(),
        results: Results {
            checks: out.checks,
            notes: out.notes,
            data: out.data,
        },
        thresholds: out.thresholds,
        timing: out.timing,
    };
    report.validate()?;
    Ok(report)
}

fn counters(pairs: &[(&str, usize)]) -> Timing {
    pairs.iter().map(|(k, v)| (k.to_string(), *v as u64)).collect()
}

fn ground(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sys = cfg.system()?;
    let split = sys.default_split().map_err(CliError::from_core)?;
    let solver = cfg.solver();
    let c0 = c0_threshold(&sys, &split, &solver).map_err(CliError::from_core)?;
    let gs = ground_state(&sys, &split, Some(&c0), &solver).map_err(CliError::from_core)?;
    let class = classify(&gs.point, c0.c0).map_err(CliError::from_core)?;
    let p = sys.params().p;
    let pt = &gs.point;
    let bound = c0.b_bound();
    let grad_tol = solver.tol.max(1e-8);
    let checks = vec![
        Check::new(
            "fully-nontrivial",
            class == Classification::FullyNontrivial,
            class.name(),
        ),
        Check::new(
            "gradient-norm",
            pt.grad_norm < grad_tol,
            format!("{:e} < {grad_tol:e}", pt.grad_norm),
        ),
        Check::new(
            "energy-below-c0",
            pt.energy > 0.0 && pt.energy < c0.c0,
            format!("0 < {:e} < {:e}", pt.energy, c0.c0),
        ),
        Check::new(
            "energy-identity",
            pt.energy_identity_error(p) < 1e-6,
            format!("{:e}", pt.energy_identity_error(p)),
        ),
        Check::new(
            "b-below-semitrivial",
            pt.b_value > 0.0 && pt.b_value < bound,
            format!("0 < {:e} < {bound:e}", pt.b_value),
        ),
    ];
    Ok(Outcome {
        checks,
        notes: Vec::new(),
        data: TaskData::GroundState {
            solutions: vec![Solution::from_point(pt, p)],
        },
        thresholds: Thresholds {
            c0: Some(c0.c0),
            ..Thresholds::default()
        },
        timing: counters(&[
            ("starts", gs.starts),
            ("converged", gs.converged),
            ("descent_steps", gs.descent_steps),
        ]),
    })
}

fn multiplicity(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sys = cfg.system()?;
    let split = sys.default_split().map_err(CliError::from_core)?;
    let solver = cfg.solver();
    let task = &cfg.task.multiplicity;
    let c0 = c0_threshold(&sys, &split, &solver).map_err(CliError::from_core)?;
    let rep = multiplicity_search(&sys, &split, &c0, task.orbits, task.budget, &solver).map_err(CliError::from_core)?;
    let p = sys.params().p;
    let fields: Vec<_> = rep.orbits.iter().map(|o| o.u.clone()).collect();
    let ids = orbit_dedup(&fields, solver.dedup_tol).map_err(CliError::from_core)?;
    let distinct = ids.iter().copied().max().map_or(0, |m| m + 1);
    let mut checks = vec![
        Check::new(
            "orbit-count",
            distinct >= task.orbits,
            format!("{distinct} distinct orbits, {} requested", task.orbits),
        ),
        Check::new(
            "orbits-distinct",
            distinct == rep.orbits.len(),
            format!("{} points, {distinct} orbits at tol {:e}", rep.orbits.len(), solver.dedup_tol),
        ),
    ];
    for o in &rep.orbits {
        let class = classify(o, c0.c0).map_err(CliError::from_core)?;
        checks.push(Check::new(
            &format!("orbit-{}", o.orbit_id),
            o.energy > 0.0 && o.energy < c0.c0 && class == Classification::FullyNontrivial,
            format!("energy {:e}, {}", o.energy, class.name()),
        ));
    }
    Ok(Outcome {
        checks,
        notes: Vec::new(),
        data: TaskData::Multiplicity {
            requested: task.orbits,
            solutions: rep.orbits.iter().map(|o| Solution::from_point(o, p)).collect(),
        },
        thresholds: Thresholds {
            c0: Some(c0.c0),
            ..Thresholds::default()
        },
        timing: counters(&[
            ("starts", rep.starts),
            ("converged", rep.converged),
            ("newton_steps", rep.newton_steps),
        ]),
    })
}

fn thresholds(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sys = cfg.system()?;
    let split = sys.default_split().map_err(CliError::from_core)?;
    let task = &cfg.task.thresholds;
    let m = task.m;
    let mut lambdas = task.lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    let sweep = lambdas
        .par_iter()
        .map(|&lambda| zm_sup(&sys, m, lambda).map(|v| SweepRow { lambda, zm_sup: v }))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::from_core)?;
    let params = sys.params();
    let gamma_m = sys.basis().eigenvalue(m - 1).map_err(CliError::from_core)?;
    let degenerate = gamma_m <= 0.5 * (params.kappa1 + params.kappa2);
    let mut checks = Vec::new();
    if degenerate {
        checks.push(Check::new(
            "zero-when-degenerate",
            sweep.iter().all(|r| r.zm_sup == 0.0),
            format!("γ_m = {gamma_m:e} ≤ (κ₁+κ₂)/2"),
        ));
    } else {
        checks.push(Check::new(
            "positive",
            sweep.first().is_none_or(|r| r.zm_sup > 0.0),
            "sup at the smallest λ",
        ));
        checks.push(Check::new(
            "strictly-decreasing",
            sweep.windows(2).all(|w| w[1].zm_sup < w[0].zm_sup || w[1].lambda == w[0].lambda),
            format!("{} λ values", sweep.len()),
        ));
    }
    let mut th = Thresholds::default();
    let mut timing = counters(&[("zm_sup_evaluations", sweep.len())]);
    if task.bisect {
        let solver = cfg.solver();
        let c0 = c0_threshold(&sys, &split, &solver).map_err(CliError::from_core)?;
        let t = lambda_threshold(&sys, m, c0.c0).map_err(CliError::from_core)?;
        if t.hi > 0.0 {
            let at = |l: f64| zm_sup(&sys, m, l).map_err(CliError::from_core);
            let (lo_v, hi_v) = (at(t.lo)?, at(t.hi)?);
            checks.push(Check::new(
                "bracket",
                hi_v < c0.c0 && (t.lo == 0.0 || lo_v >= c0.c0),
                format!("sup {lo_v:e} at {:e}, {hi_v:e} at {:e}, c0 {:e}", t.lo, t.hi, c0.c0),
            ));
        }
        th.c0 = Some(c0.c0);
        th.lambda_bar = Some(LambdaBar {
            m,
            value: t.lambda,
            lo: t.lo,
            hi: t.hi,
        });
        *timing.entry("zm_sup_evaluations".into()).or_default() += t.evaluations as u64;
    }
    Ok(Outcome {
        checks,
        notes: Vec::new(),
        data: TaskData::Thresholds { m, sweep },
        thresholds: th,
        timing,
    })
}

fn limit_params(cfg: &RunConfig) -> Result<LimitParams, CliError> {
    let p = &cfg.problem;
    LimitParams::new(cfg.dim(), p.mu, p.lambda, p.alpha, p.beta).map_err(CliError::from_core)
}

fn limit(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lp = limit_params(cfg)?;
    let sc = sobolev_constant(lp.dim).map_err(CliError::from_core)?;
    let si = s_infty(&lp, sc.s).map_err(CliError::from_core)?;
    let l0 = lambda0_threshold(&lp).map_err(CliError::from_core)?;
    let amp = minimizer_amplitudes(&lp, &sc, si.r_lambda).map_err(CliError::from_core)?;
    let grid = st_grid_infimum(&lp, sc.s, 400);
    let gap = (sc.grad_norm_sq - sc.crit_integral).abs() / sc.grad_norm_sq;
    let at_one = f_lambda(1.0, &lp) * sc.s;
    let checks = vec![
        Check::new("sobolev-identity", gap < 1e-8, format!("{gap:e}")),
        Check::new(
            "grid-oracle",
            (grid - si.value).abs() <= 1e-4 * si.value,
            format!("grid {grid:e}, minimizer {:e}", si.value),
        ),
        Check::new(
            "below-diagonal-value",
            si.value <= at_one * (1.0 + 1e-12),
            format!("{:e} <= {at_one:e}", si.value),
        ),
        Check::new(
            "undercuts-semitrivial",
            si.f_min < lp.semitrivial_level(),
            format!("f_min {:e}, end level {:e}", si.f_min, lp.semitrivial_level()),
        ),
        Check::new(
            "above-lambda0",
            lp.lambda > l0.lambda,
            format!("λ {:e}, Λ₀ {:e}", lp.lambda, l0.lambda),
        ),
    ];
    let level = limit_level(lp.dim, si.value);
    Ok(Outcome {
        checks,
        notes: Vec::new(),
        data: TaskData::Limit(LimitData {
            dim: lp.dim,
            sobolev: sc.s,
            sobolev_identity_gap: gap,
            r_lambda: si.r_lambda,
            f_min: si.f_min,
            grid_infimum: grid,
            lambda0_bracket: [l0.lo, l0.hi],
            s: amp.s,
            t: amp.t,
            energy: amp.energy,
        }),
        thresholds: Thresholds {
            lambda0: Some(l0.lambda),
            s_infty: Some(si.value),
            limit_level: Some(level),
            ..Thresholds::default()
        },
        timing: Timing::new(),
    })
}

fn synchronized(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    let task = &cfg.task.synchronized;
    let scan = find_roots(&params, task.r_range[0], task.r_range[1]).map_err(CliError::from_core)?;
    let roots: Vec<RootRow> = scan
        .roots
        .iter()
        .map(|r| RootRow {
            r: r.r,
            s: r.s,
            t: r.t,
            residual: r.residual,
            euler: euler_identities(r, &params),
        })
        .collect();
    let worst = roots
        .iter()
        .flat_map(|r| r.euler)
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    let mut checks = vec![Check::new("euler-identities", worst < 1e-10, format!("{worst:e}"))];
    if scan.guaranteed {
        checks.push(Check::new(
            "root-exists",
            !roots.is_empty(),
            "both sign conditions hold",
        ));
    }
    let mut notes = Vec::new();
    let mut solutions = Vec::new();
    let mut scalar_residual = None;
    let mut timing = Timing::new();
    if task.assemble && !scan.roots.is_empty() {
        if params.kappa1 != params.kappa2 {
            notes.push("assembly skipped: κ₁ ≠ κ₂, so no common profile exists".into());
        } else {
            let sys = cfg.system()?;
            let scalar = ScalarProblem::new(params.kappa1, 1.0, params.p, sys.galerkin().clone());
            let sub = Subspaces::of_scalar(&scalar, 1e-9);
            let w = scalar_ground_state(&scalar, &sub, &cfg.solver()).map_err(CliError::from_core)?;
            for root in &scan.roots {
                let sol = synchronized_solution(&sys, &w.w, root).map_err(CliError::from_core)?;
                let bound = 10.0 * sol.scalar_residual.max(1e-12);
                checks.push(Check::new(
                    &format!("assembled-r={:e}", root.r),
                    sol.point.grad_norm < bound,
                    format!("gradient {:e} < {bound:e}", sol.point.grad_norm),
                ));
                scalar_residual = Some(sol.scalar_residual);
                solutions.push(Solution::from_point(&sol.point, params.p));
            }
            solutions.sort_by(|a, b| a.energy.total_cmp(&b.energy));
            for (i, s) in solutions.iter_mut().enumerate() {
                s.orbit_id = i;
            }
            timing.insert("scalar_solves".into(), 1);
        }
    }
    timing.insert("roots".into(), roots.len() as u64);
    Ok(Outcome {
        checks,
        notes,
        data: TaskData::Synchronized {
            guaranteed: scan.guaranteed,
            roots,
            scalar_residual,
            solutions,
        },
        thresholds: Thresholds::default(),
        timing,
    })
}

fn estimates(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lp = limit_params(cfg)?;
    let dim = lp.dim;
    let task = &cfg.task.estimates;
    let kappa = cfg.problem.kappa;
    let domain = cfg.domain()?;
    let cutoff = CutoffSpec::for_inradius(domain.inradius()).map_err(CliError::from_core)?;
    let sc = sobolev_constant(dim).map_err(CliError::from_core)?;
    let si = s_infty(&lp, sc.s).map_err(CliError::from_core)?;
    let l0 = lambda0_threshold(&lp).map_err(CliError::from_core)?;
    let amp = minimizer_amplitudes(&lp, &sc, si.r_lambda).map_err(CliError::from_core)?;
    let target = limit_level(dim, si.value);

    let eps = eps_grid(cutoff.delta, task.eps_points);
    let bn = eps
        .par_iter()
        .map(|&e| bn_integrals(e, &cutoff, dim))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::from_core)?;
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let integrals: Vec<IntegralRow> = bn
        .iter()
        .map(|b| {
            let unit = ((amp.s * amp.s + amp.t * amp.t) * b.grad_sq).sqrt();
            let ray = ray_max_from(b, &lp, kappa, amp.s / unit, amp.t / unit);
            IntegralRow {
                eps: b.eps,
                grad_sq: b.grad_sq,
                crit: b.crit,
                crit_minus_one: b.crit_minus_one,
                mass: b.mass,
                grad_l1: b.grad_l1,
                crit_minus_two: b.crit_minus_two,
                l2: b.l2,
                grad_deficit: b.grad_deficit,
                crit_deficit: b.crit_deficit,
                ray_closed_form: ray.closed_form,
                ray_direct: ray.direct,
            }
        })
        .collect();
    let ray_gap = integrals
        .iter()
        .map(|r| (r.ray_closed_form - r.ray_direct).abs() / r.ray_direct.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    checks.push(Check::new("ray-closed-form", ray_gap <= 1e-8, format!("{ray_gap:e}")));

    let fit = order_fit(&bn, dim).map_err(CliError::from_core)?;
    let fits: Vec<FitRow> = fit
        .fits
        .iter()
        .map(|f| FitRow {
            quantity: f.quantity.to_string(),
            model: match f.model {
                OrderModel::Power => "power".into(),
                OrderModel::PowerTimesLog => "power-times-log".into(),
            },
            slope: f.slope,
            half_width: f.half_width,
            expected: f.expected,
            pass: f.pass,
        })
        .collect();
    checks.push(Check::new(
        "orders",
        fit.all_pass(),
        fits.iter()
            .filter(|f| f.pass == Some(false))
            .map(|f| f.quantity.clone())
            .collect::<Vec<_>>()
            .join(", "),
    ));

    let mut resonant = Vec::new();
    for (i, k) in kappa.iter().enumerate() {
        if is_dirichlet_eigenvalue(&domain, *k, task.resonance_tol).map_err(CliError::from_core)? {
            resonant.push(format!("κ{} = {k}", i + 1));
        }
    }
    let mut evaluations = 0;
    let claim = if resonant.is_empty() {
        let ccfg = ClaimConfig {
            eps: task.claim_eps.clone(),
            samples: task.claim_samples,
            seed: cfg.solver.seed,
            angular_order: task.angular_order,
        };
        let rep = claim_sweep(&domain, &cutoff, &lp, kappa, amp.s, amp.t, &ccfg).map_err(CliError::from_core)?;
        for p in &rep.points {
            evaluations += p.evaluations;
            checks.push(Check::new(
                &format!("claim-eps={:e}", p.eps),
                p.below && p.outer_ok,
                format!("best {:e}, target {:e}, outer max {:e}", p.best, rep.target, p.outer_max),
            ));
        }
        Some(ClaimData {
            target: rep.target,
            tilde_dims: rep.tilde_dims,
            points: rep
                .points
                .iter()
                .map(|p| ClaimRow {
                    eps: p.eps,
                    best: p.best,
                    best_t: p.best_t,
                    best_w_norm: p.best_w_norm,
                    ray: p.ray.direct,
                    below: p.below,
                    radius: p.radius,
                    outer_max: p.outer_max,
                    outer_ok: p.outer_ok,
                })
                .collect(),
        })
    } else {
        notes.push(format!(
            "resonant κ: hypothesis violated (κ is a Dirichlet eigenvalue: {}); claim sweep skipped",
            resonant.join(", ")
        ));
        None
    };

    let c = &task.calculus;
    let mut jobs: Vec<(bool, f64, f64, f64)> = c.q.iter().map(|&q| (true, q, 2.0, 2.0)).collect();
    jobs.extend(c.pairs.iter().map(|&[a, b]| (false, 2.0, a, b)));
    let calculus = jobs
        .par_iter()
        .map(|&(is_q, q, a, b)| {
            let (qp, ap) = if is_q { (c.q_points, 3) } else { (3, c.ab_points) };
            calculus_inequalities(q, a, b, c.big_r, &c.r_grid, qp, ap).map(|r| {
                if is_q {
                    CalculusRow {
                        inequality: "q".into(),
                        exponents: vec![q],
                        constant: r.c_q,
                        ratio: r.q_ratio,
                        pass: r.q_pass,
                    }
                } else {
                    CalculusRow {
                        inequality: "ab".into(),
                        exponents: vec![a, b],
                        constant: r.ab_constant,
                        ratio: r.ab_ratio,
                        pass: r.ab_pass,
                    }
                }
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::from_core)?;
    for r in &calculus {
        checks.push(Check::new(
            &format!("calculus-{}-{:?}", r.inequality, r.exponents),
            r.pass,
            format!("ratio {:e}", r.ratio),
        ));
    }

    Ok(Outcome {
        checks,
        notes,
        data: TaskData::VerifyEstimates(EstimatesData {
            dim,
            delta: cutoff.delta,
            support: cutoff.support,
            integrals,
            fits,
            claim,
            calculus,
        }),
        thresholds: Thresholds {
            lambda0: Some(l0.lambda),
            s_infty: Some(si.value),
            limit_level: Some(target),
            ..Thresholds::default()
        },
        timing: counters(&[("eps_points", eps.len()), ("claim_evaluations", evaluations)]),
    })
}
