use std::collections::BTreeMap;

use engres_core::linalg::StateDiagnostics;
use engres_core::model::{regime_report, Branch, ModelParams};
use engres_core::IntegrationStats;
use serde::{Deserialize, Serialize};

use crate::config::{ScenarioName, SweepParam};

pub const SUMMARY_SCHEMA: &str = "engres.summary/1";

/// Largest reported fidelity accepted before a run counts as failed.
pub const FIDELITY_CEILING: f64 = 1.0 + 1e-8;

/// Bounds every trajectory must respect.
pub const TRACE_BOUND: f64 = 1e-9;
pub const HERMITICITY_BOUND: f64 = 1e-9;
pub const POSITIVITY_BOUND: f64 = -1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub g: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub delta_a: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub cavity_decay: f64,
    pub gamma: f64,
    pub n_max: usize,
}

impl From<&ModelParams> for ParamRecord {
    fn from(p: &ModelParams) -> Self {
        ParamRecord {
            g: p.g,
            omega1: p.omega1,
            omega2: p.omega2,
            phi1: p.phi1,
            phi2: p.phi2,
            delta_a: p.delta_a,
            delta1: p.delta1,
            delta2: p.delta2,
            cavity_decay: p.cavity_decay,
            gamma: p.gamma,
            n_max: p.n_max,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_eng: Option<f64>,
    /// `Γ_eng/γ`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_tilde: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_tilde: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub geometric: f64,
    pub dynamic: f64,
    pub total: f64,
    pub expected_geometric: f64,
    pub expected_dynamic: f64,
    pub cycle_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSummary {
    pub runs: usize,
    /// Smallest accepted step over all runs.
    pub min_step: f64,
    pub total_substeps: usize,
    pub max_refinements: u32,
    pub max_change: f64,
}

impl IntegratorSummary {
    pub fn of(stats: &[IntegrationStats]) -> Option<Self> {
        if stats.is_empty() {
            return None;
        }
        Some(IntegratorSummary {
            runs: stats.len(),
            min_step: stats.iter().map(|s| s.step).fold(f64::INFINITY, f64::min),
            total_substeps: stats.iter().map(|s| s.substeps).sum(),
            max_refinements: stats.iter().map(|s| s.refinements).max().unwrap_or(0),
            max_change: stats.iter().map(|s| s.achieved_change).fold(0.0, f64::max),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantSummary {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub within_bounds: bool,
}

impl From<StateDiagnostics> for InvariantSummary {
    fn from(d: StateDiagnostics) -> Self {
        InvariantSummary {
            max_trace_error: d.trace_error,
            max_hermiticity_error: d.hermiticity_error,
            min_eigenvalue: d.min_eigenvalue,
            within_bounds: d.trace_error <= TRACE_BOUND
                && d.hermiticity_error <= HERMITICITY_BOUND
                && d.min_eigenvalue >= POSITIVITY_BOUND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRecord {
    pub name: String,
    pub satisfied: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: String,
    pub scenario: ScenarioName,
    pub branch: String,
    pub params: ParamRecord,
    pub t_end: f64,
    pub n_samples: usize,
    pub derived: Derived,
    pub fidelities: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phases: Option<PhaseSummary>,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariants: Option<InvariantSummary>,
    pub regime: Vec<ConstraintRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_axis: Option<SweepParam>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<SweepPoint>,
    pub wall_time_s: f64,
}

impl RunSummary {
    pub fn new(scenario: ScenarioName, branch: Branch, params: &ModelParams, t_end: f64, n_samples: usize) -> Self {
        let regime = regime_report(params, branch)
            .constraints
            .into_iter()
            .map(|c| ConstraintRecord {
                name: c.name.to_string(),
                satisfied: c.satisfied,
                residual: c.residual,
            })
            .collect();
        RunSummary {
            schema: SUMMARY_SCHEMA.to_string(),
            scenario,
            branch: branch.to_string(),
            params: params.into(),
            t_end,
            n_samples,
            derived: Derived::default(),
            fidelities: BTreeMap::new(),
            phases: None,
            metrics: BTreeMap::new(),
            integrator: None,
            invariants: None,
            regime,
            notes: Vec::new(),
            sweep_axis: None,
            points: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    /// Records a metric; non-finite values become a note, since JSON has no
    /// representation for them.
    pub fn metric(&mut self, key: &str, value: f64) {
        if value.is_finite() {
            self.metrics.insert(key.to_string(), value);
        } else {
            self.notes.push(format!("{key} = {value}"));
        }
    }

    pub fn fidelity(&mut self, key: &str, value: f64) {
        self.fidelities.insert(key.to_string(), value);
    }

    /// Copy with every wall time zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        let mut s = self.clone();
        s.wall_time_s = 0.0;
        for p in &mut s.points {
            p.summary = p.summary.without_timing();
        }
        s
    }

    /// First fidelity outside `[0, 1 + 1e-8]`, searching sweep points too.
    pub fn fidelity_out_of_range(&self) -> Option<(String, f64)> {
        self.fidelities
            .iter()
            .find(|(_, &f)| !(0.0..=FIDELITY_CEILING).contains(&f))
            .map(|(k, &f)| (k.clone(), f))
            .or_else(|| self.points.iter().find_map(|p| p.summary.fidelity_out_of_range()))
    }
}

/// Time series (or sweep table) bound for CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub schema: String,
    pub columns: Vec<String>,
    /// `None` marks a value a row does not have.
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Series {
    pub fn new(scenario: ScenarioName, columns: &[&str]) -> Self {
        Series {
            schema: format!("engres.series.{scenario}/1"),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row.into_iter().map(Some).collect());
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}
