//! One runner per scenario. Each returns a summary and a time series; the
//! caller adds timing and writes files.

use std::f64::consts::PI;

use engres_core::frames::compare_effective;
use engres_core::interferometry::{run_interferometer, ThreeLevelConfig};
use engres_core::lindblad::{evolve, steady_state, Convention, Trajectory};
use engres_core::linalg::{basis_ket, inner, partial_trace_second, projector, trace_distance, StateDiagnostics};
use engres_core::model::{
    asymptotic_state, averaged_atomic_dissipator, build_effective, build_full, drive_hamiltonian, effective_to_full,
    engineered_rate, epsilon_closed_form, full_system_master_equation, product_ket, protected_state_sp1,
    reduced_master_equation, reduced_master_equation_eliminated, reduced_master_equation_with, BlochCoefficients,
    Branch, DerivedMemoryParams, FrameChoice, GammaModel, ModelParams,
};
use engres_core::phase::{export_bloch_path, phase_record, protected_cycle, total_phase};
use engres_core::{DensityMatrix, Error, IntegrationStats};

use crate::config::{Resolved, ScenarioName};
use crate::summary::{IntegratorSummary, InvariantSummary, PhaseSummary, RunSummary, Series};

type CoreResult<T> = Result<T, Error>;

pub fn run(r: &Resolved) -> CoreResult<(RunSummary, Series)> {
    match r.name {
        ScenarioName::Nonadiabatic => nonadiabatic(r),
        ScenarioName::Memory => memory(r),
        ScenarioName::Interferometer => interferometer(r),
        ScenarioName::EffectiveCheck => effective_check(r),
        ScenarioName::EliminationCheck => elimination_check(r),
        ScenarioName::PhaseCycle => phase_cycle(r),
        ScenarioName::Sweep => Err(Error::InvalidArgument("sweeps run through the sweep driver".into())),
    }
}

pub(crate) fn time_grid(t_end: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect()
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn rate_ratio(p: &ModelParams, branch: Branch) -> CoreResult<(f64, f64)> {
    let ge = engineered_rate(p, branch)?;
    let ratio = if p.gamma > 0.0 { ge / p.gamma } else { f64::INFINITY };
    Ok((ge, ratio))
}

fn coefficient_metrics(s: &mut RunSummary, prefix: &str, k: &BlochCoefficients) {
    s.metric(&format!("{prefix}_constant"), k.constant);
    s.metric(&format!("{prefix}_population_decay"), k.population_decay);
    s.metric(&format!("{prefix}_coherence_decay"), k.coherence_decay);
    s.metric(&format!("{prefix}_coupling_abs"), k.coupling.norm());
    s.metric(&format!("{prefix}_cross_leakage"), k.cross_leakage);
    s.metric(&format!("{prefix}_coherence_shift"), k.coherence_shift);
}

struct Tracker {
    diagnostics: Option<StateDiagnostics>,
    stats: Vec<IntegrationStats>,
}

impl Tracker {
    fn new() -> Self {
        Tracker {
            diagnostics: None,
            stats: Vec::new(),
        }
    }

    fn add(&mut self, traj: &Trajectory) {
        let d = traj.diagnostics();
        self.diagnostics = Some(match self.diagnostics {
            Some(prev) => prev.worst(d),
            None => d,
        });
        self.stats.push(traj.stats);
    }

    fn finish(self, s: &mut RunSummary) {
        s.invariants = self.diagnostics.map(InvariantSummary::from);
        s.integrator = IntegratorSummary::of(&self.stats);
    }
}

fn upper(rho: &DensityMatrix) -> f64 {
    rho.element(0, 0).re
}

fn nonadiabatic(r: &Resolved) -> CoreResult<(RunSummary, Series)> {
    let p = &r.params;
    let branch = Branch::Nonadiabatic;
    build_effective(p, branch)?;
    let mut s = RunSummary::new(r.name, branch, p, r.t_end, r.n_samples);
    let (ge, ratio) = rate_ratio(p, branch)?;
    let eps = epsilon_closed_form(ratio, branch)?;
    s.derived.gamma_eng = Some(ge);
    s.derived.rate_ratio = finite(ratio);
    s.derived.epsilon = Some(eps);
    s.fidelity("formula", 1.0 - eps);
    let printed = BlochCoefficients::printed(ge, p.gamma);
    s.fidelity("printed_ode", printed.steady_population());
    coefficient_metrics(&mut s, "printed", &BlochCoefficients::printed(0.0, p.gamma));

    let times = time_grid(r.t_end, r.n_samples);
    let rho0 = DensityMatrix::from_ket(&basis_ket(2, 1))?;
    let mut tracker = Tracker::new();
    let printed_traj = evolve(&reduced_master_equation(p, branch, true)?, &rho0, &times)?;
    tracker.add(&printed_traj);
    s.fidelity("printed_final", upper(printed_traj.final_state()));

    let oracle_traj = match averaged_atomic_dissipator(p, branch, Convention::Half) {
        Ok(avg) => {
            let k = BlochCoefficients::from_superoperator(&avg.folded())?;
            coefficient_metrics(&mut s, "oracle", &k);
            let me = reduced_master_equation_eliminated(p, branch, GammaModel::Averaged)?;
            let ss = steady_state(&me)?;
            s.fidelity("oracle", upper(&ss.state));
            s.metric("oracle_epsilon", 1.0 - upper(&ss.state));
            let traj = evolve(&me, &rho0, &times)?;
            tracker.add(&traj);
            s.fidelity("oracle_final", upper(traj.final_state()));
            Some(traj)
        }
        Err(Error::Domain(msg)) => {
            s.notes.push(format!("averaged-dissipator oracle skipped: {msg}"));
            None
        }
        Err(e) => return Err(e),
    };
    tracker.finish(&mut s);

    let mut series = Series::new(r.name, &["t", "rho_upup_printed", "rho_upup_oracle"]);
    for (k, &t) in times.iter().enumerate() {
        series.rows.push(vec![
            Some(t),
            Some(upper(&printed_traj.states[k])),
            oracle_traj.as_ref().map(|o| upper(&o.states[k])),
        ]);
    }
    Ok((s, series))
}

fn memory(r: &Resolved) -> CoreResult<(RunSummary, Series)> {
    let p = &r.params;
    let branch = Branch::Memory;
    build_effective(p, branch)?;
    let mut s = RunSummary::new(r.name, branch, p, r.t_end, r.n_samples);
    let d = DerivedMemoryParams::from_params(p)?;
    let (ge, ratio) = rate_ratio(p, branch)?;
    let eps = epsilon_closed_form(ratio, branch)?;
    s.derived.gamma_eng = Some(ge);
    s.derived.rate_ratio = finite(ratio);
    s.derived.epsilon_tilde = Some(eps);
    s.derived.chi = Some(d.chi);
    s.derived.lambda = Some(d.lambda);
    s.derived.g_tilde = Some(d.g_tilde);
    s.fidelity("formula", 1.0 - eps);
    if let Err(e) = asymptotic_state(branch, eps) {
        s.notes.push(format!("closed-form asymptotic state: {e}"));
    }

    let avg = averaged_atomic_dissipator(p, branch, Convention::Half)?;
    coefficient_metrics(&mut s, "oracle", &BlochCoefficients::from_superoperator(&avg.folded())?);
    let me = reduced_master_equation(p, branch, true)?;
    let ss = steady_state(&me)?;
    s.fidelity("oracle", upper(&ss.state));
    s.metric("oracle_epsilon_tilde", 1.0 - upper(&ss.state));
    s.metric("oracle_coherence_abs", ss.state.element(0, 1).norm());

    let times = time_grid(r.t_end, r.n_samples);
    let traj = evolve(&me, &DensityMatrix::from_ket(&basis_ket(2, 1))?, &times)?;
    s.fidelity("oracle_final", upper(traj.final_state()));
    let mut tracker = Tracker::new();
    tracker.add(&traj);
    tracker.finish(&mut s);

    let mut series = Series::new(r.name, &["t", "rho_pp", "coherence_abs"]);
    for (t, rho) in times.iter().zip(&traj.states) {
        series.push(vec![*t, upper(rho), rho.element(0, 1).norm()]);
    }
    Ok((s, series))
}

fn interferometer(r: &Resolved) -> CoreResult<(RunSummary, Series)> {
    let p = &r.params;
    let mut s = RunSummary::new(r.name, Branch::Nonadiabatic, p, r.t_end, r.n_samples);
    let run = run_interferometer(&ThreeLevelConfig {
        params: *p,
        include_l_tl: p.gamma > 0.0,
        t_end: r.t_end,
        samples: r.n_samples,
    })?;
    let (ge, ratio) = rate_ratio(p, Branch::Nonadiabatic)?;
    s.derived.gamma_eng = Some(ge);
    s.derived.rate_ratio = finite(ratio);
    s.metric("slope", run.slope);
    s.metric("expected_slope", run.expected_slope);
    s.metric("slope_relative_error", (run.slope - run.expected_slope).abs() / run.expected_slope);
    s.metric("reference_frequency", 2.0 * p.omega1 + p.omega2);
    let prob_err = run.signal.iter().map(|x| (x.total_probability - 1.0).abs()).fold(0.0, f64::max);
    s.metric("max_probability_error", prob_err);
    let mut tracker = Tracker::new();
    tracker.add(&run.trajectory);
    tracker.finish(&mut s);

    let mut series = Series::new(
        r.name,
        &["t", "rho_aa", "coherence_re", "coherence_im", "phase", "reference", "total_probability"],
    );
    for x in &run.signal {
        series.push(vec![
            x.t,
            x.rho_aa,
            x.coherence.re,
            x.coherence.im,
            x.phase,
            x.reference,
            x.total_probability,
        ]);
    }
    Ok((s, series))
}

fn effective_check(r: &Resolved) -> CoreResult<(RunSummary, Series)> {
    let p = &r.params;
    let branch = r.branch;
    let h2 = build_effective(p, branch)?;
    let map = effective_to_full(p, branch)?;
    let mut s = RunSummary::new(r.name, branch, p, r.t_end, r.n_samples);
    let mut runs = Vec::new();
    for level in [0, 1] {
        let h = h2.clone();
        let cmp = compare_effective(
            |t| build_full(p, branch, t).expect("parameters validated"),
            move |_| h.clone(),
            Some(&map),
            &product_ket(level, 0, p.n_max),
            r.t_end,
            r.n_samples,
        )?;
        runs.push(cmp);
    }
    s.metric("worst_fidelity_protected", runs[0].worst_fidelity);
    s.metric("worst_fidelity_orthogonal", runs[1].worst_fidelity);
    s.fidelity("effective_worst", runs[0].worst_fidelity.min(runs[1].worst_fidelity));
    s.metric("horizon_gt", r.t_end * p.g);
    let drift = runs.iter().map(|c| c.norm_drift).fold(0.0, f64::max);
    s.invariants = Some(InvariantSummary::from(StateDiagnostics {
        trace_error: drift,
        hermiticity_error: 0.0,
        min_eigenvalue: 0.0,
    }));

    let mut series = Series::new(r.name, &["t", "fidelity_protected", "fidelity_orthogonal"]);
    for k in 0..runs[0].times.len() {
        series.push(vec![runs[0].times[k], runs[0].fidelity_series[k], runs[1].fidelity_series[k]]);
    }
    Ok((s, series))
}

/// Cavity-decay multiples at which the elimination is compared.
pub const ELIMINATION_LADDER: [f64; 3] = [1.0, 2.0, 4.0];

struct Elimination {
    times: Vec<f64>,
    full: Trajectory,
    reduced: Trajectory,
    distance: f64,
}

fn tl_marginal(rho: &DensityMatrix, fock_dim: usize) -> CoreResult<engres_core::ComplexMatrix> {
    partial_trace_second(rho.matrix(), 2, fock_dim)
}

fn eliminate(p: &ModelParams, branch: Branch, t_end: f64, n: usize, convention: Convention) -> CoreResult<Elimination> {
    let gamma = if p.gamma > 0.0 { GammaModel::Averaged } else { GammaModel::Omit };
    let full_me = full_system_master_equation(p, branch, FrameChoice::DressedEffective)?;
    let reduced_me = reduced_master_equation_with(p, branch, convention, gamma)?;
    let times = time_grid(t_end, n);
    let full = evolve(&full_me, &DensityMatrix::from_ket(&product_ket(1, 0, p.n_max))?, &times)?;
    let reduced = evolve(&reduced_me, &DensityMatrix::from_ket(&basis_ket(2, 1))?, &times)?;
    let mut distance: f64 = 0.0;
    for (k, &t) in times.iter().enumerate() {
        if t >= 5.0 / p.cavity_decay {
            let m = tl_marginal(&full.states[k], p.fock_dim())?;
            distance = distance.max(trace_distance(&m, reduced.states[k].matrix()));
        }
    }
    Ok(Elimination {
        times,
        full,
        reduced,
        distance,
    })
}

fn elimination_check(r: &Resolved) -> CoreResult<(RunSummary, Series)> {
    let p = &r.params;
    let branch = r.branch;
    let mut s = RunSummary::new(r.name, branch, p, r.t_end, r.n_samples);
    let (ge, ratio) = rate_ratio(p, branch)?;
    s.derived.gamma_eng = Some(ge);
    s.derived.rate_ratio = finite(ratio);
    s.metric("decay_to_coupling", p.cavity_decay / p.g);
    let mut tracker = Tracker::new();
    let mut distances = Vec::new();
    let mut base = None;
    for m in ELIMINATION_LADDER {
        let q = ModelParams {
            cavity_decay: p.cavity_decay * m,
            ..*p
        };
        let e = eliminate(&q, branch, r.t_end * m, r.n_samples, Convention::Half)?;
        tracker.add(&e.full);
        tracker.add(&e.reduced);
        s.metric(&format!("trace_distance_x{m}"), e.distance);
        distances.push(e.distance);
        if base.is_none() {
            base = Some(e);
        }
    }
    let base = base.expect("ladder is nonempty");
    let unit = eliminate(p, branch, r.t_end, r.n_samples, Convention::Unit)?;
    s.metric("trace_distance_unit_prefactor", unit.distance);
    let monotone = distances.windows(2).all(|w| w[1] < w[0]);
    s.metric("monotone", if monotone { 1.0 } else { 0.0 });
    let protected = product_ket(0, 0, p.n_max);
    s.fidelity("full_final", engres_core::fidelity(base.full.final_state(), &protected)?);
    s.fidelity("reduced_final", upper(base.reduced.final_state()));
    let photons = base
        .full
        .states
        .iter()
        .map(|rho| {
            let a = engres_core::model::cavity_annihilation(p.n_max).expect("n_max validated");
            (a.adjoint() * &a * rho.matrix()).trace().re
        })
        .fold(0.0, f64::max);
    s.metric("max_photon_number", photons);
    tracker.finish(&mut s);

    let mut series = Series::new(
        r.name,
        &["t", "rho_upup_full", "rho_upup_reduced", "rho_upup_unit_prefactor", "trace_distance"],
    );
    for k in 0..base.times.len() {
        let m = tl_marginal(&base.full.states[k], p.fock_dim())?;
        series.push(vec![
            base.times[k],
            m[(0, 0)].re,
            upper(&base.reduced.states[k]),
            upper(&unit.reduced.states[k]),
            trace_distance(&m, base.reduced.states[k].matrix()),
        ]);
    }
    Ok((s, series))
}

fn phase_cycle(r: &Resolved) -> CoreResult<(RunSummary, Series)> {
    let p = &r.params;
    let mut s = RunSummary::new(r.name, Branch::Nonadiabatic, p, r.t_end, r.n_samples);
    let traj = protected_cycle(p, r.n_samples)?;
    let rec = phase_record(&traj, |t| drive_hamiltonian(p, t))?;
    let expected_dynamic = -PI * p.omega2 / (2.0 * p.omega1);
    s.phases = Some(PhaseSummary {
        geometric: rec.geometric,
        dynamic: rec.dynamic,
        total: rec.total,
        expected_geometric: -PI,
        expected_dynamic,
        cycle_time: rec.cycle_time,
    });
    s.metric("geometric_error", (rec.geometric + PI).abs());
    s.metric("dynamic_error", (rec.dynamic - expected_dynamic).abs());
    let diff = total_phase(&traj) - rec.total;
    s.metric("total_phase_mismatch", (diff - 2.0 * PI * (diff / (2.0 * PI)).round()).abs());
    let closed_form_gap = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, psi)| 1.0 - inner(&protected_state_sp1(p, t), psi).norm_sqr())
        .fold(0.0, f64::max);
    s.metric("closed_form_infidelity", closed_form_gap);
    s.invariants = traj
        .states
        .iter()
        .map(|psi| StateDiagnostics::of(&projector(psi)))
        .reduce(StateDiagnostics::worst)
        .map(InvariantSummary::from);

    let e = basis_ket(2, 0);
    let g = basis_ket(2, 1);
    let mut series = Series::new(r.name, &["t", "x", "y", "z"]);
    for b in export_bloch_path(&traj, (&e, &g))? {
        series.push(vec![b.t, b.x, b.y, b.z]);
    }
    Ok((s, series))
}
