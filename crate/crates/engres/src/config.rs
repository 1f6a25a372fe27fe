//! Scenario files: parsing, validation and resolution to concrete parameters.
//!
//! Rates in a scenario file are in s⁻¹ (rad/s for frequencies). A top-level
//! `unit_scale` multiplies every rate the file sets and divides every time it
//! sets, so `{"g": 1, ...}` with `unit_scale = 1e5` means `g = 1e5 s⁻¹`.
//! Detunings the file leaves out are tuned to the resonance of the branch.

use std::f64::consts::PI;
use std::fmt;

use engres_core::model::{engineered_rate, Branch, DerivedMemoryParams, ModelParams};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    Nonadiabatic,
    Memory,
    Interferometer,
    EffectiveCheck,
    EliminationCheck,
    PhaseCycle,
    Sweep,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 7] = [
        ScenarioName::Nonadiabatic,
        ScenarioName::Memory,
        ScenarioName::Interferometer,
        ScenarioName::EffectiveCheck,
        ScenarioName::EliminationCheck,
        ScenarioName::PhaseCycle,
        ScenarioName::Sweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Nonadiabatic => "nonadiabatic",
            ScenarioName::Memory => "memory",
            ScenarioName::Interferometer => "interferometer",
            ScenarioName::EffectiveCheck => "effective-check",
            ScenarioName::EliminationCheck => "elimination-check",
            ScenarioName::PhaseCycle => "phase-cycle",
            ScenarioName::Sweep => "sweep",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ScenarioName::Nonadiabatic => {
                "reduced qubit under the nonadiabatic reservoir; printed equations against the averaged-dissipator oracle"
            }
            ScenarioName::Memory => "reduced qubit under the memory reservoir with averaged spontaneous emission",
            ScenarioName::Interferometer => "auxiliary-level readout of the protected-state phase",
            ScenarioName::EffectiveCheck => "full against effective ion-cavity Hamiltonian, state fidelity over time",
            ScenarioName::EliminationCheck => {
                "full ion-cavity master equation against the reduced qubit model at Γ, 2Γ and 4Γ"
            }
            ScenarioName::PhaseCycle => "geometric and dynamic phase over one protected cycle",
            ScenarioName::Sweep => "one base scenario over a list of values of one parameter",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameter overrides. Absent fields take the scenario defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity_decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

impl ParamOverrides {
    pub fn is_empty(&self) -> bool {
        *self == ParamOverrides::default()
    }

    /// Every parameter of `p`, explicitly.
    pub fn explicit(p: &ModelParams) -> Self {
        ParamOverrides {
            g: Some(p.g),
            omega1: Some(p.omega1),
            omega2: Some(p.omega2),
            phi1: Some(p.phi1),
            phi2: Some(p.phi2),
            delta_a: Some(p.delta_a),
            delta1: Some(p.delta1),
            delta2: Some(p.delta2),
            cavity_decay: Some(p.cavity_decay),
            gamma: Some(p.gamma),
            n_max: Some(p.n_max),
        }
    }

    fn real_fields(&self) -> [(&'static str, Option<f64>); 10] {
        [
            ("g", self.g),
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("phi1", self.phi1),
            ("phi2", self.phi2),
            ("delta_a", self.delta_a),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("cavity_decay", self.cavity_decay),
            ("gamma", self.gamma),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
}

impl Grid {
    pub fn is_empty(&self) -> bool {
        *self == Grid::default()
    }
}

/// Parameters a sweep can move. `rate_ratio` sets γ from `Γ_eng/γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    G,
    Omega1,
    Omega2,
    Phi1,
    Phi2,
    DeltaA,
    Delta1,
    Delta2,
    CavityDecay,
    Gamma,
    NMax,
    RateRatio,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::G => "g",
            SweepParam::Omega1 => "omega1",
            SweepParam::Omega2 => "omega2",
            SweepParam::Phi1 => "phi1",
            SweepParam::Phi2 => "phi2",
            SweepParam::DeltaA => "delta_a",
            SweepParam::Delta1 => "delta1",
            SweepParam::Delta2 => "delta2",
            SweepParam::CavityDecay => "cavity_decay",
            SweepParam::Gamma => "gamma",
            SweepParam::NMax => "n_max",
            SweepParam::RateRatio => "rate_ratio",
        }
    }
}

/// `[parameter, [values...]]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis(pub SweepParam, pub Vec<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: ScenarioName,
    /// Scenario each sweep point runs; `nonadiabatic` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<ScenarioName>,
    #[serde(default, skip_serializing_if = "ParamOverrides::is_empty")]
    pub params: ParamOverrides,
    #[serde(default, skip_serializing_if = "Grid::is_empty")]
    pub grid: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_axis: Option<SweepAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_scale: Option<f64>,
}

impl Scenario {
    pub fn named(name: ScenarioName) -> Self {
        Scenario {
            name,
            base: None,
            params: ParamOverrides::default(),
            grid: Grid::default(),
            sweep_axis: None,
            unit_scale: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.unit_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(HarnessError::config("unit_scale", format!("must be positive and finite, got {s}")));
            }
        }
        for (name, v) in self.params.real_fields() {
            let Some(v) = v else { continue };
            let path = format!("params.{name}");
            if !v.is_finite() {
                return Err(HarnessError::config(path, "must be finite"));
            }
            if matches!(name, "g" | "omega1" | "omega2" | "cavity_decay" | "gamma") && v < 0.0 {
                return Err(HarnessError::config(path, format!("must be non-negative, got {v}")));
            }
        }
        if self.params.n_max == Some(0) {
            return Err(HarnessError::config("params.n_max", "must be at least 1"));
        }
        if let Some(t) = self.grid.t_end {
            if !(t.is_finite() && t > 0.0) {
                return Err(HarnessError::config("grid.t_end", format!("must be positive and finite, got {t}")));
            }
        }
        if let Some(n) = self.grid.n_samples {
            if n < 2 {
                return Err(HarnessError::config("grid.n_samples", "must be at least 2"));
            }
        }
        match (self.name, &self.sweep_axis) {
            (ScenarioName::Sweep, None) => {
                return Err(HarnessError::config("sweep_axis", "a sweep needs a sweep_axis"));
            }
            (ScenarioName::Sweep, Some(SweepAxis(param, values))) => {
                if values.is_empty() {
                    return Err(HarnessError::config("sweep_axis[1]", "sweep values must be nonempty"));
                }
                for (k, &v) in values.iter().enumerate() {
                    let path = format!("sweep_axis[1][{k}]");
                    if !v.is_finite() {
                        return Err(HarnessError::config(path, "must be finite"));
                    }
                    let ok = match param {
                        SweepParam::G | SweepParam::Omega1 | SweepParam::Omega2 | SweepParam::CavityDecay | SweepParam::Gamma => v >= 0.0,
                        SweepParam::RateRatio => v > 0.0,
                        SweepParam::NMax => v >= 1.0 && v.fract() == 0.0,
                        _ => true,
                    };
                    if !ok {
                        return Err(HarnessError::config(path, format!("{v} is not a valid {}", param.as_str())));
                    }
                }
            }
            (_, Some(_)) => {
                return Err(HarnessError::config("sweep_axis", "only a sweep takes a sweep_axis"));
            }
            (_, None) => {}
        }
        match (self.name, self.base) {
            (ScenarioName::Sweep, Some(ScenarioName::Sweep)) => {
                Err(HarnessError::config("base", "a sweep cannot sweep another sweep"))
            }
            (ScenarioName::Sweep, _) | (_, None) => Ok(()),
            (_, Some(_)) => Err(HarnessError::config("base", "only a sweep takes a base scenario")),
        }
    }

    /// Concrete run for every non-sweep scenario.
    pub fn resolve(&self) -> Result<Resolved> {
        self.validate()?;
        if self.name == ScenarioName::Sweep {
            return Err(HarnessError::config("name", "a sweep resolves to several runs; use sweep_points"));
        }
        resolve_single(self.name, &self.params, &self.grid, self.unit_scale.unwrap_or(1.0))
    }

    /// One resolved run per sweep value, in order.
    pub fn sweep_points(&self) -> Result<Vec<(f64, Resolved)>> {
        self.validate()?;
        let Some(SweepAxis(param, values)) = &self.sweep_axis else {
            return Err(HarnessError::config("sweep_axis", "a sweep needs a sweep_axis"));
        };
        let base = self.base.unwrap_or(ScenarioName::Nonadiabatic);
        let scale = self.unit_scale.unwrap_or(1.0);
        values
            .iter()
            .map(|&v| {
                let mut params = self.params.clone();
                match param {
                    SweepParam::G => params.g = Some(v),
                    SweepParam::Omega1 => params.omega1 = Some(v),
                    SweepParam::Omega2 => params.omega2 = Some(v),
                    SweepParam::Phi1 => params.phi1 = Some(v),
                    SweepParam::Phi2 => params.phi2 = Some(v),
                    SweepParam::DeltaA => params.delta_a = Some(v),
                    SweepParam::Delta1 => params.delta1 = Some(v),
                    SweepParam::Delta2 => params.delta2 = Some(v),
                    SweepParam::CavityDecay => params.cavity_decay = Some(v),
                    SweepParam::Gamma => params.gamma = Some(v),
                    SweepParam::NMax => params.n_max = Some(v as usize),
                    SweepParam::RateRatio => {}
                }
                let mut r = resolve_single(base, &params, &self.grid, scale)?;
                if *param == SweepParam::RateRatio {
                    let rate = engineered_rate(&r.params, r.branch)
                        .map_err(|e| HarnessError::config("sweep_axis", format!("rate_ratio needs Γ_eng: {e}")))?;
                    r.params.gamma = rate / v;
                }
                Ok((v, r))
            })
            .collect()
    }
}

/// A run with every parameter fixed, in s⁻¹ and s.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub name: ScenarioName,
    pub branch: Branch,
    pub params: ModelParams,
    pub t_end: f64,
    pub n_samples: usize,
}

impl Resolved {
    /// Scenario that resolves back to exactly this run.
    pub fn to_scenario(&self) -> Scenario {
        Scenario {
            name: self.name,
            base: None,
            params: ParamOverrides::explicit(&self.params),
            grid: Grid {
                t_end: Some(self.t_end),
                n_samples: Some(self.n_samples),
            },
            sweep_axis: None,
            unit_scale: None,
        }
    }
}

fn resolve_single(name: ScenarioName, o: &ParamOverrides, grid: &Grid, scale: f64) -> Result<Resolved> {
    let defaults = ModelParams::default();
    let rate = |v: Option<f64>, d: f64| v.map_or(d, |x| x * scale);
    let omega2_default = match name {
        ScenarioName::Memory => 0.0,
        _ => defaults.omega2,
    };
    let gamma_default = match name {
        ScenarioName::EliminationCheck => 0.0,
        _ => defaults.gamma,
    };
    let mut p = ModelParams {
        g: rate(o.g, defaults.g),
        omega1: rate(o.omega1, defaults.omega1),
        omega2: rate(o.omega2, omega2_default),
        phi1: o.phi1.unwrap_or(defaults.phi1),
        phi2: o.phi2.unwrap_or(defaults.phi2),
        delta_a: 0.0,
        delta1: rate(o.delta1, 0.0),
        delta2: 0.0,
        cavity_decay: rate(o.cavity_decay, defaults.cavity_decay),
        gamma: rate(o.gamma, gamma_default),
        n_max: o.n_max.unwrap_or(defaults.n_max),
    };
    let branch = match name {
        ScenarioName::Memory => Branch::Memory,
        ScenarioName::EffectiveCheck | ScenarioName::EliminationCheck if p.omega2 == 0.0 => Branch::Memory,
        _ => Branch::Nonadiabatic,
    };
    let tuned = match branch {
        Branch::Nonadiabatic => p.tuned_nonadiabatic(),
        Branch::Memory => p.tuned_memory(),
    };
    p.delta_a = o.delta_a.map_or(tuned.delta_a, |x| x * scale);
    p.delta2 = o.delta2.map_or(tuned.delta2, |x| x * scale);
    if branch == Branch::Nonadiabatic {
        p.delta1 = o.delta1.map_or(tuned.delta1, |x| x * scale);
    }
    p.validate().map_err(|e| HarnessError::config("params", e.to_string()))?;

    let t_end = match grid.t_end {
        Some(t) => t / scale,
        None => default_t_end(name, branch, &p)?,
    };
    if name == ScenarioName::PhaseCycle {
        let cycle = PI / p.omega1;
        if (t_end - cycle).abs() > 1e-9 * cycle {
            return Err(HarnessError::config("grid.t_end", format!("a phase cycle lasts π/Ω₁ = {cycle:e} s")));
        }
    }
    let n_samples = grid.n_samples.unwrap_or(match name {
        ScenarioName::PhaseCycle => 4001,
        ScenarioName::Interferometer | ScenarioName::EliminationCheck => 401,
        _ => 201,
    });
    Ok(Resolved {
        name,
        branch,
        params: p,
        t_end,
        n_samples,
    })
}

fn default_t_end(name: ScenarioName, branch: Branch, p: &ModelParams) -> Result<f64> {
    let engineered = || {
        engineered_rate(p, branch)
            .map(|r| 10.0 / r)
            .map_err(|e| HarnessError::config("grid.t_end", format!("no default horizon: {e}")))
    };
    let positive = |what: &str, v: f64| {
        if v > 0.0 {
            Ok(v)
        } else {
            Err(HarnessError::config("grid.t_end", format!("no default horizon with {what} = 0")))
        }
    };
    match name {
        ScenarioName::Nonadiabatic | ScenarioName::Memory | ScenarioName::EliminationCheck => engineered(),
        ScenarioName::EffectiveCheck => Ok(2.0 / positive("g", p.g)?),
        ScenarioName::Interferometer => Ok(4.0 * PI / positive("omega1", p.omega1)?),
        ScenarioName::PhaseCycle => Ok(PI / positive("omega1", p.omega1)?),
        ScenarioName::Sweep => unreachable!("sweeps resolve per point"),
    }
}

/// Parses and validates a scenario document. Errors carry the path of the
/// offending key.
pub fn parse_config(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        HarnessError::config(if path == "." || path == "?" { "$".to_string() } else { path }, e.into_inner().to_string())
    })?;
    scenario.validate()?;
    Ok(scenario)
}

/// Memory-branch quantities for reporting; `None` outside the branch.
pub fn memory_quantities(r: &Resolved) -> Option<DerivedMemoryParams> {
    match r.branch {
        Branch::Memory => DerivedMemoryParams::from_params(&r.params).ok(),
        Branch::Nonadiabatic => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memory_example() {
        let s = parse_config(r#"{"name":"memory","params":{"delta1":0}}"#).unwrap();
        let r = s.resolve().unwrap();
        assert_eq!(r.branch, Branch::Memory);
        assert_eq!(memory_quantities(&r).unwrap().chi, 0.0);
        assert_eq!(r.params.omega2, 0.0);
        assert_eq!(r.params.delta_a, -2.0 * r.params.omega1);
    }

    #[test]
    fn sweep_example() {
        let s = parse_config(r#"{"name":"sweep","sweep_axis":["gamma",[1,10,100]]}"#).unwrap();
        let points = s.sweep_points().unwrap();
        assert_eq!(points.len(), 3);
        assert_eq!(points[2].1.params.gamma, 100.0);
        assert_eq!(points[0].1.name, ScenarioName::Nonadiabatic);
    }

    #[test]
    fn negative_drive_rejected() {
        match parse_config(r#"{"name":"nonadiabatic","params":{"omega2":-1}}"#) {
            Err(HarnessError::Config { path, .. }) => assert_eq!(path, "params.omega2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_report_their_path() {
        match parse_config(r#"{"name":"memory","params":{"omega3":1}}"#) {
            Err(HarnessError::Config { path, message }) => {
                assert!(path.starts_with("params"), "{path}");
                assert!(message.contains("omega3"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config(r#"{"name":"memory","extra":1}"#), Err(HarnessError::Config { .. })));
        assert!(matches!(parse_config(r#"{"name":"teleport"}"#), Err(HarnessError::Config { .. })));
        assert!(matches!(parse_config("{"), Err(HarnessError::Config { .. })));
    }

    #[test]
    fn out_of_range_numbers_rejected() {
        assert!(parse_config(r#"{"name":"nonadiabatic","params":{"g":1e999}}"#).is_err());
        assert!(parse_config(r#"{"name":"sweep","sweep_axis":["gamma",[]]}"#).is_err());
        assert!(parse_config(r#"{"name":"sweep","sweep_axis":["n_max",[1.5]]}"#).is_err());
        assert!(parse_config(r#"{"name":"memory","sweep_axis":["gamma",[1]]}"#).is_err());
        assert!(parse_config(r#"{"name":"memory","unit_scale":0}"#).is_err());
    }

    #[test]
    fn defaults_are_the_experimental_rates() {
        let r = Scenario::named(ScenarioName::Nonadiabatic).resolve().unwrap();
        assert_eq!((r.params.g, r.params.gamma, r.params.cavity_decay), (1e5, 1e2, 1e6));
        assert_eq!(r.params.delta2, -2.0 * r.params.omega1);
        assert_eq!(r.params.delta_a, -r.params.omega2);
        assert_eq!(r.t_end, 10.0 / 1e4);
    }

    #[test]
    fn unit_scale_applies_to_given_rates_and_times() {
        let s = parse_config(
            r#"{"name":"effective-check","params":{"g":1,"omega1":400,"omega2":20,"cavity_decay":20},
                "grid":{"t_end":2},"unit_scale":1e5}"#,
        )
        .unwrap();
        let r = s.resolve().unwrap();
        assert_eq!(r.params.g, 1e5);
        assert_eq!(r.params.omega1, 4e7);
        assert_eq!(r.params.delta2, -8e7);
        assert_eq!(r.t_end, 2e-5);
        assert_eq!(r.params.gamma, 1e2);
    }

    #[test]
    fn resolved_scenario_resolves_to_itself() {
        for name in ScenarioName::ALL.into_iter().filter(|n| *n != ScenarioName::Sweep) {
            let r = Scenario::named(name).resolve().unwrap();
            let back = parse_config(&r.to_scenario().to_json()).unwrap().resolve().unwrap();
            assert_eq!(back, r, "{name}");
        }
    }

    #[test]
    fn rate_ratio_sets_gamma() {
        let s = parse_config(r#"{"name":"sweep","sweep_axis":["rate_ratio",[1,10,100]]}"#).unwrap();
        let pts = s.sweep_points().unwrap();
        let ge = engineered_rate(&pts[0].1.params, Branch::Nonadiabatic).unwrap();
        for (v, r) in &pts {
            assert!((ge / r.params.gamma - v).abs() < 1e-12 * v);
        }
    }

    #[test]
    fn phase_cycle_horizon_is_fixed() {
        assert!(parse_config(r#"{"name":"phase-cycle","grid":{"t_end":1}}"#).unwrap().resolve().is_err());
    }
}
