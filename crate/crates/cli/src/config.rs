//! Run configuration: a strict JSON document with `problem`, `solver`, `task`
//! and `output` blocks. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use weakcoupled_core::nehari::SolverConfig;
use weakcoupled_core::spectral::{default_nodes, Galerkin, QuadratureGrid};
use weakcoupled_core::system::CoupledSystem;
use weakcoupled_core::{BoxDomain, SineBasis, SystemParams};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub task: TaskBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Box side lengths; their count is the dimension `N`.
    pub lengths: Vec<f64>,
    /// Sine modes per axis.
    pub cutoffs: Vec<usize>,
    /// Gauss–Legendre nodes per axis; defaults follow the cutoffs.
    #[serde(default)]
    pub quadrature_nodes: Option<Vec<usize>>,
    pub kappa: [f64; 2],
    pub mu: [f64; 2],
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Mirror of the core solver knobs with serde defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub tol: f64,
    pub max_descent_iter: usize,
    pub newton_switch: f64,
    pub max_newton_iter: usize,
    pub seed_modes: usize,
    pub random_starts: usize,
    pub noise_modes: usize,
    pub cross_delta: f64,
    pub seed: u64,
    pub dedup_tol: f64,
    pub deflation_shift: f64,
    pub max_deflated_iter: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverConfig::default().into()
    }
}

impl From<SolverConfig> for SolverBlock {
    fn from(c: SolverConfig) -> Self {
        Self {
            tol: c.tol,
            max_descent_iter: c.max_descent_iter,
            newton_switch: c.newton_switch,
            max_newton_iter: c.max_newton_iter,
            seed_modes: c.seed_modes,
            random_starts: c.random_starts,
            noise_modes: c.noise_modes,
            cross_delta: c.cross_delta,
            seed: c.seed,
            dedup_tol: c.dedup_tol,
            deflation_shift: c.deflation_shift,
            max_deflated_iter: c.max_deflated_iter,
        }
    }
}

impl From<&SolverBlock> for SolverConfig {
    fn from(b: &SolverBlock) -> Self {
        Self {
            tol: b.tol,
            max_descent_iter: b.max_descent_iter,
            newton_switch: b.newton_switch,
            max_newton_iter: b.max_newton_iter,
            seed_modes: b.seed_modes,
            random_starts: b.random_starts,
            noise_modes: b.noise_modes,
            cross_delta: b.cross_delta,
            seed: b.seed,
            dedup_tol: b.dedup_tol,
            deflation_shift: b.deflation_shift,
            max_deflated_iter: b.max_deflated_iter,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskBlock {
    pub multiplicity: MultiplicityTask,
    pub thresholds: ThresholdsTask,
    pub synchronized: SynchronizedTask,
    pub estimates: EstimatesTask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiplicityTask {
    /// Target number of distinct sign orbits.
    pub orbits: usize,
    /// Deflated restarts allowed in total.
    pub budget: usize,
}

impl Default for MultiplicityTask {
    fn default() -> Self {
        Self { orbits: 2, budget: 48 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdsTask {
    pub m: usize,
    /// λ values for the `sup J` over `Z_m` sweep.
    pub lambdas: Vec<f64>,
    /// Also bisect for the smallest λ with `sup J < c₀`.
    pub bisect: bool,
}

impl Default for ThresholdsTask {
    fn default() -> Self {
        Self {
            m: 3,
            lambdas: (0..10).map(|k| 0.25 * f64::powi(2.0, k)).collect(),
            bisect: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynchronizedTask {
    /// Log-scan range for the roots of `h`.
    pub r_range: [f64; 2],
    /// Also assemble `(s·w, t·w)` from a scalar ground state.
    pub assemble: bool,
}

impl Default for SynchronizedTask {
    fn default() -> Self {
        Self {
            r_range: [1e-6, 1e6],
            assemble: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatesTask {
    /// Points of the ε grid `δ·10^{-1..-3}` used for the order fits.
    pub eps_points: usize,
    /// ε values for the search near the bubble.
    pub claim_eps: Vec<f64>,
    pub claim_samples: usize,
    pub angular_order: usize,
    /// Relative tolerance for deciding that κ is a Dirichlet eigenvalue.
    pub resonance_tol: f64,
    pub calculus: CalculusTask,
}

impl Default for EstimatesTask {
    fn default() -> Self {
        Self {
            eps_points: 7,
            claim_eps: vec![1e-2, 1e-3],
            claim_samples: 8,
            angular_order: 4,
            resonance_tol: 1e-9,
            calculus: CalculusTask::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalculusTask {
    pub q: Vec<f64>,
    pub pairs: Vec<[f64; 2]>,
    pub big_r: f64,
    pub r_grid: Vec<f64>,
    pub q_points: usize,
    pub ab_points: usize,
}

impl Default for CalculusTask {
    fn default() -> Self {
        Self {
            q: vec![1.5, 2.0, 3.0],
            pairs: vec![[2.0, 2.0], [1.5, 2.5]],
            big_r: 1.0,
            r_grid: (0..=20).map(|i| 0.1 * i as f64).collect(),
            q_points: 10_000,
            ab_points: 300,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: PathBuf,
    /// File stem; the subcommand name when absent.
    pub name: Option<String>,
    pub format: Format,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            name: None,
            format: Format::Json,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.problem.lengths.len()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        let p = &self.problem;
        if p.lengths.is_empty() || p.cutoffs.len() != p.lengths.len() {
            return bad("problem.lengths and problem.cutoffs need the same, positive length".into());
        }
        if let Some(n) = &p.quadrature_nodes {
            if n.len() != p.lengths.len() || n.contains(&0) {
                return bad("problem.quadrature_nodes needs one positive count per axis".into());
            }
        }
        self.params()?;
        BoxDomain::new(p.lengths.clone()).map_err(CliError::from_core)?;
        weakcoupled_core::nehari::SolverConfig::from(&self.solver)
            .validate()
            .map_err(CliError::from_core)?;
        let t = &self.task;
        if t.multiplicity.orbits == 0 || t.multiplicity.budget == 0 {
            return bad("task.multiplicity needs positive orbits and budget".into());
        }
        if t.thresholds.m == 0 || t.thresholds.lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return bad("task.thresholds needs m >= 1 and nonnegative λ values".into());
        }
        let [lo, hi] = t.synchronized.r_range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return bad("task.synchronized.r_range must satisfy 0 < lo < hi".into());
        }
        let e = &t.estimates;
        if e.eps_points < 2 || e.claim_samples == 0 || e.angular_order == 0 {
            return bad("task.estimates needs eps_points >= 2 and positive sample counts".into());
        }
        if e.claim_eps.iter().any(|v| !(*v > 0.0 && v.is_finite())) || !(e.resonance_tol > 0.0) {
            return bad("task.estimates epsilons and tolerances must be positive".into());
        }
        let c = &e.calculus;
        if c.q.iter().any(|q| !(*q > 1.0))
            || c.pairs.iter().flatten().any(|a| !(*a > 1.0))
            || !(c.big_r > 0.0)
            || c.r_grid.is_empty()
            || c.r_grid.iter().any(|r| !(*r >= 0.0 && r.is_finite()))
            || c.q_points < 3
            || c.ab_points < 3
        {
            return bad("task.estimates.calculus has an invalid exponent, radius or grid".into());
        }
        if self.output.dir.as_os_str().is_empty() || self.output.name.as_deref() == Some("") {
            return bad("output paths must be nonempty".into());
        }
        Ok(())
    }

    pub fn params(&self) -> Result<SystemParams, CliError> {
        let p = &self.problem;
        SystemParams::new(self.dim(), p.kappa, p.mu, p.lambda, p.alpha, p.beta).map_err(CliError::from_core)
    }

    pub fn domain(&self) -> Result<BoxDomain, CliError> {
        BoxDomain::new(self.problem.lengths.clone()).map_err(CliError::from_core)
    }

    pub fn system(&self) -> Result<CoupledSystem, CliError> {
        let p = &self.problem;
        let basis = Arc::new(SineBasis::new(self.domain()?, p.cutoffs.clone()).map_err(CliError::from_core)?);
        let nodes: Vec<usize> = match &p.quadrature_nodes {
            Some(n) => n.clone(),
            None => p.cutoffs.iter().map(|&k| default_nodes(k)).collect(),
        };
        let grid = QuadratureGrid::new(self.domain()?, &nodes, &vec![1; nodes.len()]).map_err(CliError::from_core)?;
        let gal = Arc::new(Galerkin::new(basis, grid).map_err(CliError::from_core)?);
        CoupledSystem::new(self.params()?, gal).map_err(CliError::from_core)
    }

    pub fn solver(&self) -> SolverConfig {
        (&self.solver).into()
    }
}
