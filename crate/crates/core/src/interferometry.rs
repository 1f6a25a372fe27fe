//! Phase readout against an auxiliary level `a` that no drive or reservoir
//! touches. The three-level space is ordered `(a, ↑, ↓)`; the two-level block
//! is the interaction picture written in the static `(↑, ↓)` basis.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::integrate::IntegrationStats;
use crate::lindblad::{evolve, Convention, LindbladTerm, MasterEquation, Sampler, Trajectory};
use crate::linalg::{inner, real, transition, ComplexMatrix, DensityMatrix, KetState, C64};
use crate::model::{basis_matrix, dressed_frame, drive_hamiltonian, engineered_rate, sigma_ge, updown_basis};
use crate::model::{Branch, ModelParams};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeLevelConfig {
    pub params: ModelParams,
    /// Adds `(γ/2)D[σ_ge]` on the two-level block.
    pub include_l_tl: bool,
    pub t_end: f64,
    pub samples: usize,
}

impl Default for ThreeLevelConfig {
    /// Two drive cycles `2π/Ω₁` at the default parameters.
    fn default() -> Self {
        let params = ModelParams::default();
        ThreeLevelConfig {
            t_end: 2.0 * PI / params.omega1,
            params,
            include_l_tl: false,
            samples: 401,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalPoint {
    pub t: f64,
    pub rho_aa: f64,
    /// `⟨ψ(t)|ρ(t)|a⟩`
    pub coherence: C64,
    /// `−arg c(t)`, unwrapped.
    pub phase: f64,
    pub reference: f64,
    pub total_probability: f64,
}

#[derive(Debug, Clone)]
pub struct InterferometerRun {
    pub trajectory: Trajectory,
    pub signal: Vec<SignalPoint>,
    /// Least-squares slope of the unwrapped phase.
    pub slope: f64,
    /// `Ω₁ + Ω₂/2`
    pub expected_slope: f64,
    pub stats: IntegrationStats,
}

/// `P_ea(t) = cos[(2Ω₁ + Ω₂)t]/2`
pub fn population_inversion_reference(omega1: f64, omega2: f64, t: f64) -> f64 {
    ((2.0 * omega1 + omega2) * t).cos() / 2.0
}

fn embed(block: &ComplexMatrix) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(3, 3);
    m.view_mut((1, 1), (2, 2)).copy_from(block);
    m
}

/// Protected two-level state `(|+⟩ + e^{−i(φ − 2Ω₁t)}|−⟩)/√2` in the static
/// `(↑, ↓)` basis, without the dynamical phase.
fn protected_dressed(p: &ModelParams, t: f64) -> KetState {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let b = basis_matrix(&updown_basis(p));
    let (plus, minus) = crate::model::pm_basis(p.phi1);
    let ket = (plus + minus * crate::linalg::phase(-(p.phi() - 2.0 * p.omega1 * t))).scale(s);
    b.adjoint() * ket
}

fn unwrap(phases: &mut [f64]) {
    for k in 1..phases.len() {
        let mut d = phases[k] - phases[k - 1];
        d -= 2.0 * PI * (d / (2.0 * PI)).round();
        phases[k] = phases[k - 1] + d;
    }
}

fn fit_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let num: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let den: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    num / den
}

/// The three-level master equation: drive Hamiltonian on the two-level
/// block, engineered jump `R(t)σ_↑↓R†(t)` at `Γ_eng`, optional emission.
pub fn interferometer_equation(cfg: &ThreeLevelConfig) -> Result<MasterEquation> {
    let p = cfg.params;
    p.validate()?;
    let b = basis_matrix(&updown_basis(&p));
    let bh = b.clone();
    let h = Sampler::time_dependent(move |t| embed(&(bh.adjoint() * drive_hamiltonian(&p, t) * &bh)));
    let frame = dressed_frame(&p);
    let bj = b.clone();
    let jump = Sampler::time_dependent(move |t| {
        let w = bj.adjoint() * frame.propagator(t) * &bj;
        embed(&(&w * transition(2, 0, 1) * w.adjoint()))
    });
    let mut me = MasterEquation::new(h)?
        .with_term(LindbladTerm::new(engineered_rate(&p, Branch::Nonadiabatic)?, jump, Convention::Unit)?)?
        .with_frequency_hint(2.0 * p.omega1 + p.omega2);
    if cfg.include_l_tl {
        let emission = embed(&(b.adjoint() * sigma_ge() * &b));
        me = me.with_term(LindbladTerm::new(p.gamma, emission, Convention::Half)?)?;
    }
    Ok(me)
}

pub fn run_interferometer(cfg: &ThreeLevelConfig) -> Result<InterferometerRun> {
    if cfg.samples < 3 || !(cfg.t_end > 0.0) {
        return Err(Error::invalid("interferometer needs t_end > 0 and at least three samples"));
    }
    let p = cfg.params;
    let me = interferometer_equation(cfg)?;
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let psi0 = KetState::from_column_slice(&[real(s), real(s), real(0.0)]);
    let times: Vec<f64> = (0..cfg.samples)
        .map(|k| cfg.t_end * k as f64 / (cfg.samples - 1) as f64)
        .collect();
    let trajectory = evolve(&me, &DensityMatrix::from_ket(&psi0)?, &times)?;
    let a = crate::linalg::basis_ket(3, 0);
    let mut signal: Vec<SignalPoint> = times
        .iter()
        .zip(&trajectory.states)
        .map(|(&t, rho)| {
            let d = protected_dressed(&p, t);
            let psi = KetState::from_column_slice(&[real(0.0), d[0], d[1]]);
            let coherence = inner(&psi, &(rho.matrix() * &a));
            SignalPoint {
                t,
                rho_aa: rho.element(0, 0).re,
                coherence,
                phase: -coherence.arg(),
                reference: population_inversion_reference(p.omega1, p.omega2, t),
                total_probability: rho.matrix().trace().re,
            }
        })
        .collect();
    let mut phases: Vec<f64> = signal.iter().map(|s| s.phase).collect();
    unwrap(&mut phases);
    for (s, ph) in signal.iter_mut().zip(&phases) {
        s.phase = *ph;
    }
    let slope = fit_slope(&times, &phases);
    let stats = trajectory.stats;
    Ok(InterferometerRun {
        trajectory,
        signal,
        slope,
        expected_slope: p.omega1 + p.omega2 / 2.0,
        stats,
    })
}
