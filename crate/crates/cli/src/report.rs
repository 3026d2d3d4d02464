//! Report schema. Every report carries the keys `schema`, `config`,
//! `results`, `thresholds` and `timing`; nothing time-dependent is stored, so
//! equal inputs give byte-identical files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use weakcoupled_core::nehari::CriticalPoint;

use crate::config::RunConfig;
use crate::CliError;

pub const SCHEMA: &str = "weakcoupled-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema: String,
    pub config: RunConfig,
    pub results: Results,
    pub thresholds: Thresholds,
    /// Work counters (starts, iterations, evaluations) in place of wall time.
    pub timing: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    #[serde(flatten)]
    pub data: TaskData,
}

impl Results {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// A named property with its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub c0: Option<f64>,
    pub lambda_bar: Option<LambdaBar>,
    pub lambda0: Option<f64>,
    pub s_infty: Option<f64>,
    /// `(1/N) S_{∞,λ}^{N/2}`
    pub limit_level: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaBar {
    pub m: usize,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum TaskData {
    GroundState {
        solutions: Vec<Solution>,
    },
    Multiplicity {
        requested: usize,
        solutions: Vec<Solution>,
    },
    Thresholds {
        m: usize,
        sweep: Vec<SweepRow>,
    },
    Limit(LimitData),
    Synchronized {
        guaranteed: bool,
        roots: Vec<RootRow>,
        /// Scalar ground state residual; present when the pairs were assembled.
        scalar_residual: Option<f64>,
        solutions: Vec<Solution>,
    },
    VerifyEstimates(EstimatesData),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solution {
    pub orbit_id: usize,
    pub energy: f64,
    pub b_value: f64,
    pub b1: f64,
    pub b2: f64,
    pub masses: [f64; 2],
    pub grad_norm: f64,
    pub energy_identity_error: f64,
    pub classification: String,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl Solution {
    pub fn from_point(point: &CriticalPoint, p: f64) -> Self {
        Self {
            orbit_id: point.orbit_id,
            energy: point.energy,
            b_value: point.b_value,
            b1: point.b1,
            b2: point.b2,
            masses: point.masses,
            grad_norm: point.grad_norm,
            energy_identity_error: point.energy_identity_error(p),
            classification: point.classification.name().to_string(),
            u1: point.u.u1.coeffs().to_vec(),
            u2: point.u.u2.coeffs().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRow {
    pub lambda: f64,
    pub zm_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitData {
    pub dim: usize,
    pub sobolev: f64,
    /// `|‖U₁‖² - |U₁|_{2*}^{2*}|` relative to `‖U₁‖²`.
    pub sobolev_identity_gap: f64,
    pub r_lambda: f64,
    pub f_min: f64,
    pub grid_infimum: f64,
    pub lambda0_bracket: [f64; 2],
    pub s: f64,
    pub t: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootRow {
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub residual: f64,
    pub euler: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatesData {
    pub dim: usize,
    pub delta: f64,
    pub support: f64,
    pub integrals: Vec<IntegralRow>,
    pub fits: Vec<FitRow>,
    pub claim: Option<ClaimData>,
    pub calculus: Vec<CalculusRow>,
}

/// One ε of the sweep: the cut-off bubble integrals and the ray maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralRow {
    pub eps: f64,
    pub grad_sq: f64,
    pub crit: f64,
    pub crit_minus_one: f64,
    pub mass: f64,
    pub grad_l1: f64,
    pub crit_minus_two: f64,
    pub l2: f64,
    pub grad_deficit: f64,
    pub crit_deficit: f64,
    pub ray_closed_form: f64,
    pub ray_direct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRow {
    pub quantity: String,
    pub model: String,
    pub slope: f64,
    pub half_width: f64,
    pub expected: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimData {
    pub target: f64,
    pub tilde_dims: [usize; 2],
    pub points: Vec<ClaimRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimRow {
    pub eps: f64,
    pub best: f64,
    pub best_t: f64,
    pub best_w_norm: f64,
    pub ray: f64,
    pub below: bool,
    pub radius: f64,
    pub outer_max: f64,
    pub outer_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalculusRow {
    /// `"q"` or `"ab"`
    pub inequality: String,
    pub exponents: Vec<f64>,
    pub constant: f64,
    pub ratio: f64,
    pub pass: bool,
}

impl Report {
    /// Structural checks applied to every emitted report and again after
    /// re-parsing it.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Schema(m.to_string()));
        if self.schema != SCHEMA {
            return bad("unknown schema tag");
        }
        self.config.validate()?;
        let sorted = |s: &[Solution]| s.windows(2).all(|w| w[0].energy <= w[1].energy);
        let ok = match &self.results.data {
            TaskData::GroundState { solutions } => solutions.len() == 1,
            TaskData::Multiplicity { solutions, .. } | TaskData::Synchronized { solutions, .. } => sorted(solutions),
            TaskData::Thresholds { sweep, .. } => sweep.windows(2).all(|w| w[0].lambda <= w[1].lambda),
            TaskData::Limit(_) => true,
            TaskData::VerifyEstimates(e) => e.integrals.windows(2).all(|w| w[0].eps > w[1].eps),
        };
        if !ok {
            return bad("record group is not in the documented order");
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Schema(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Parses and validates, then checks that re-serializing reproduces `text`.
    pub fn round_trip(text: &str) -> Result<Self, CliError> {
        let r: Self = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        r.validate()?;
        if r.to_json()? != text {
            return Err(CliError::Schema("report does not re-serialize to the same bytes".into()));
        }
        Ok(r)
    }

    /// Plot-ready table: one row per solution, λ, root or ε.
    pub fn csv_table(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let f = |v: f64| format!("{v:e}");
        let opt = |v: Option<f64>| v.map(f).unwrap_or_default();
        let solution_rows = |s: &[Solution]| -> Vec<Vec<String>> {
            s.iter()
                .map(|p| {
                    vec![
                        p.orbit_id.to_string(),
                        f(p.energy),
                        f(p.b_value),
                        f(p.b1),
                        f(p.b2),
                        f(p.masses[0]),
                        f(p.masses[1]),
                        f(p.grad_norm),
                        p.classification.clone(),
                    ]
                })
                .collect()
        };
        let solution_header = vec![
            "orbit_id", "energy", "b_value", "b1", "b2", "mass1", "mass2", "grad_norm", "classification",
        ];
        match &self.results.data {
            TaskData::GroundState { solutions }
            | TaskData::Multiplicity { solutions, .. }
            | TaskData::Synchronized { solutions, .. }
                if !solutions.is_empty() =>
            {
                (solution_header, solution_rows(solutions))
            }
            TaskData::Synchronized { roots, .. } => (
                vec!["r", "s", "t", "residual", "euler1", "euler2"],
                roots
                    .iter()
                    .map(|r| vec![f(r.r), f(r.s), f(r.t), f(r.residual), f(r.euler[0]), f(r.euler[1])])
                    .collect(),
            ),
            TaskData::GroundState { .. } | TaskData::Multiplicity { .. } => (solution_header, Vec::new()),
            TaskData::Thresholds { sweep, .. } => (
                vec!["lambda", "zm_sup"],
                sweep.iter().map(|r| vec![f(r.lambda), f(r.zm_sup)]).collect(),
            ),
            TaskData::Limit(l) => (
                vec!["dim", "lambda", "r_lambda", "s_infty", "limit_level", "lambda0", "s", "t"],
                vec![vec![
                    l.dim.to_string(),
                    f(self.config.problem.lambda),
                    f(l.r_lambda),
                    opt(self.thresholds.s_infty),
                    opt(self.thresholds.limit_level),
                    opt(self.thresholds.lambda0),
                    f(l.s),
                    f(l.t),
                ]],
            ),
            TaskData::VerifyEstimates(e) => (
                vec![
                    "eps",
                    "grad_sq",
                    "crit",
                    "crit_minus_one",
                    "mass",
                    "grad_l1",
                    "crit_minus_two",
                    "l2",
                    "grad_deficit",
                    "crit_deficit",
                    "ray_closed_form",
                    "ray_direct",
                ],
                e.integrals
                    .iter()
                    .map(|r| {
                        [
                            r.eps,
                            r.grad_sq,
                            r.crit,
                            r.crit_minus_one,
                            r.mass,
                            r.grad_l1,
                            r.crit_minus_two,
                            r.l2,
                            r.grad_deficit,
                            r.crit_deficit,
                            r.ray_closed_form,
                            r.ray_direct,
                        ]
                        .map(f)
                        .to_vec()
                    })
                    .collect(),
            ),
        }
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let (header, rows) = self.csv_table();
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&header).map_err(io)?;
        for r in rows {
            w.write_record(&r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }
}
