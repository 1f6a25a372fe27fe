//! Ion–cavity model: parameters, dressed bases and frames, Hamiltonians,
//! reduced master equations and closed-form predictions.
//!
//! Two-level coordinates are ordered `(e, g)`. Dressed coordinates are
//! `(↑, ↓)` for the nonadiabatic branch and `(+̃, −̃)` for the memory branch.
//! Composite spaces are two-level ⊗ Fock with index `level * (n_max + 1) + n`.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::frames::{transformed_dissipator_average, FrameTransform};
use crate::lindblad::{AffineGenerator, Convention, LindbladTerm, MasterEquation, Sampler};
use crate::linalg::{
    c, fock_annihilation, identity, kron, outer, phase, real, transition, ComplexMatrix, DensityMatrix, KetState,
    C64,
};
#[allow(unused_imports)]
use num_traits::Float;

/// Relative tolerance on the detuning constraints of the effective models.
pub const REGIME_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Ion–cavity coupling (rad/s).
    pub g: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub phi1: f64,
    pub phi2: f64,
    /// Cavity detuning `ω_a − ω₀`.
    pub delta_a: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Cavity field decay Γ (1/s).
    pub cavity_decay: f64,
    /// Spontaneous emission γ (1/s).
    pub gamma: f64,
    pub n_max: usize,
}

impl Default for ModelParams {
    /// Experimental rates with drives tuned to the nonadiabatic resonance.
    fn default() -> Self {
        ModelParams {
            g: 1e5,
            omega1: 4e7,
            omega2: 2e6,
            phi1: 0.0,
            phi2: 0.0,
            delta_a: -2e6,
            delta1: 0.0,
            delta2: -8e7,
            cavity_decay: 1e6,
            gamma: 1e2,
            n_max: 2,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
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
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(alloc::format!("{name} must be finite")));
            }
        }
        for (name, v) in [
            ("g", self.g),
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("cavity_decay", self.cavity_decay),
            ("gamma", self.gamma),
        ] {
            if v < 0.0 {
                return Err(Error::invalid(alloc::format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.n_max < 1 {
            return Err(Error::invalid("n_max must be at least 1"));
        }
        Ok(())
    }

    /// `φ = φ₁ − φ₂`
    pub fn phi(&self) -> f64 {
        self.phi1 - self.phi2
    }

    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }

    /// Dimension of two-level ⊗ Fock.
    pub fn dim(&self) -> usize {
        2 * self.fock_dim()
    }

    /// The nonadiabatic resonance `Δ₁ = 0, Δ₂ = −2Ω₁, Δ_a = −Ω₂` imposed on
    /// the drives already set.
    pub fn tuned_nonadiabatic(mut self) -> Self {
        self.delta1 = 0.0;
        self.delta2 = -2.0 * self.omega1;
        self.delta_a = -self.omega2;
        self
    }

    /// The memory resonance `Ω₂ = 0, Δ_a = −2λ`.
    pub fn tuned_memory(mut self) -> Self {
        self.omega2 = 0.0;
        self.delta_a = -2.0 * (self.omega1 * self.omega1 + self.delta1 * self.delta1 / 4.0).sqrt();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Nonadiabatic,
    Memory,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Nonadiabatic => "nonadiabatic",
            Branch::Memory => "memory",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedMemoryParams {
    /// `√(Ω₁² + Δ₁²/4)`
    pub lambda: f64,
    /// `Δ₁/λ ∈ [−2, 2]`
    pub chi: f64,
    /// `g(1 − χ/2)`
    pub g_tilde: f64,
    /// `g̃²/Γ`, absent when Γ = 0.
    pub gamma_eng: Option<f64>,
}

impl DerivedMemoryParams {
    pub fn from_params(p: &ModelParams) -> Result<Self> {
        let lambda = (p.omega1 * p.omega1 + p.delta1 * p.delta1 / 4.0).sqrt();
        if !(lambda > 0.0) {
            return Err(Error::Domain("memory basis undefined for Ω₁ = Δ₁ = 0".into()));
        }
        let chi = (p.delta1 / lambda).clamp(-2.0, 2.0);
        let g_tilde = g_tilde(p.g, chi);
        let gamma_eng = (p.cavity_decay > 0.0).then(|| g_tilde * g_tilde / p.cavity_decay);
        Ok(DerivedMemoryParams {
            lambda,
            chi,
            g_tilde,
            gamma_eng,
        })
    }
}

/// `g̃(χ) = g(1 − χ/2)`
pub fn g_tilde(g: f64, chi: f64) -> f64 {
    g * (1.0 - chi / 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub satisfied: bool,
    /// Absolute residual in rad/s.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub branch: Branch,
    pub constraints: Vec<ConstraintCheck>,
    /// Ω₁/Ω₂
    pub drive_ratio: f64,
    /// Ω₂/g
    pub drive_to_coupling: f64,
    /// Γ/g
    pub decay_to_coupling: f64,
    /// Γ_eng/γ for the branch.
    pub rate_ratio: f64,
}

impl RegimeReport {
    pub fn satisfied(&self) -> bool {
        self.constraints.iter().all(|c| c.satisfied)
    }
}

impl fmt::Display for RegimeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} branch:", self.branch)?;
        for c in &self.constraints {
            let mark = if c.satisfied { "ok" } else { "violated" };
            write!(f, " [{} {} residual {:e}]", c.name, mark, c.residual)?;
        }
        write!(
            f,
            " Ω₁/Ω₂={:e} Ω₂/g={:e} Γ/g={:e} Γ_eng/γ={:e}",
            self.drive_ratio, self.drive_to_coupling, self.decay_to_coupling, self.rate_ratio
        )
    }
}

fn check(name: &'static str, residual: f64, scale: f64) -> ConstraintCheck {
    let residual = residual.abs();
    ConstraintCheck {
        name,
        satisfied: residual <= REGIME_TOLERANCE * scale.abs().max(f64::MIN_POSITIVE),
        residual,
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

pub fn regime_report(p: &ModelParams, branch: Branch) -> RegimeReport {
    let constraints = match branch {
        Branch::Nonadiabatic => alloc::vec![
            check("delta1 = 0", p.delta1, p.omega1),
            check("delta2 = -2 omega1", p.delta2 + 2.0 * p.omega1, 2.0 * p.omega1),
            check("delta_a = -omega2", p.delta_a + p.omega2, p.omega2),
        ],
        Branch::Memory => {
            let lambda = (p.omega1 * p.omega1 + p.delta1 * p.delta1 / 4.0).sqrt();
            alloc::vec![
                check("omega2 = 0", p.omega2, p.omega1),
                check("delta_a = -2 lambda", p.delta_a + 2.0 * lambda, 2.0 * lambda),
            ]
        }
    };
    let rate = engineered_rate(p, branch).unwrap_or(f64::NAN);
    RegimeReport {
        branch,
        constraints,
        drive_ratio: ratio(p.omega1, p.omega2),
        drive_to_coupling: ratio(p.omega2, p.g),
        decay_to_coupling: ratio(p.cavity_decay, p.g),
        rate_ratio: ratio(rate, p.gamma),
    }
}

fn require_regime(p: &ModelParams, branch: Branch) -> Result<()> {
    p.validate()?;
    let report = regime_report(p, branch);
    if report.satisfied() {
        Ok(())
    } else {
        Err(Error::Regime(Box::new(report)))
    }
}

// ---------------------------------------------------------------------------
// Two-level operators and bases

/// `σ_z = |e⟩⟨e| − |g⟩⟨g|`
pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&KetState::from_column_slice(&[real(1.0), real(-1.0)]))
}

/// `σ_eg = |e⟩⟨g|`
pub fn sigma_eg() -> ComplexMatrix {
    transition(2, 0, 1)
}

/// `σ_ge = |g⟩⟨e|`
pub fn sigma_ge() -> ComplexMatrix {
    transition(2, 1, 0)
}

/// `e^{iφ₁}σ_eg + h.c. = σ₊₊ − σ₋₋`
fn drive_operator(phi1: f64) -> ComplexMatrix {
    let m = sigma_eg() * phase(phi1);
    &m + m.adjoint()
}

fn ket2(a: C64, b: C64) -> KetState {
    KetState::from_column_slice(&[a, b])
}

/// `|±⟩ = (|e⟩ ± e^{−iφ₁}|g⟩)/√2`
pub fn pm_basis(phi1: f64) -> (KetState, KetState) {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let p = phase(-phi1) * s;
    (ket2(real(s), p), ket2(real(s), -p))
}

/// `|↑⟩, |↓⟩ = (|+⟩ ± e^{−iφ}|−⟩)/√2` in `(e, g)` coordinates.
pub fn updown_basis(p: &ModelParams) -> (KetState, KetState) {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let (plus, minus) = pm_basis(p.phi1);
    let m = &minus * phase(-p.phi());
    ((&plus + &m).scale(s), (&plus - &m).scale(s))
}

/// `|±̃⟩ = (√(2±χ)|e⟩ ± e^{−iφ₁}√(2∓χ)|g⟩)/2`
pub fn memory_basis(p: &ModelParams) -> Result<(KetState, KetState)> {
    let d = DerivedMemoryParams::from_params(p)?;
    let a = (2.0 + d.chi).max(0.0).sqrt() / 2.0;
    let b = (2.0 - d.chi).max(0.0).sqrt() / 2.0;
    let ph = phase(-p.phi1);
    Ok((ket2(real(a), ph * b), ket2(real(b), -ph * a)))
}

/// Unitary whose columns are the given kets.
pub fn basis_matrix(basis: &(KetState, KetState)) -> ComplexMatrix {
    ComplexMatrix::from_columns(&[basis.0.clone(), basis.1.clone()])
}

fn spectral(pairs: &[(f64, &KetState)]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2, 2);
    for (theta, k) in pairs {
        m += outer(k, k) * phase(*theta);
    }
    m
}

/// `U₁ = e^{−iΩ₁t}|+⟩⟨+| + e^{iΩ₁t}|−⟩⟨−|`
pub fn u1(p: &ModelParams, t: f64) -> ComplexMatrix {
    let (plus, minus) = pm_basis(p.phi1);
    spectral(&[(-p.omega1 * t, &plus), (p.omega1 * t, &minus)])
}

/// `U₂ = e^{−iΩ₂t/2}|↑⟩⟨↑| + e^{iΩ₂t/2}|↓⟩⟨↓|`
pub fn u2(p: &ModelParams, t: f64) -> ComplexMatrix {
    let (up, down) = updown_basis(p);
    spectral(&[(-p.omega2 * t / 2.0, &up), (p.omega2 * t / 2.0, &down)])
}

/// Drive Hamiltonian after the rotating-wave step:
/// `Ω₁(σ₊₊ − σ₋₋) + (Ω₂/2)(e^{i(φ − 2Ω₁t)}σ₊₋ + h.c.)`, in `(e, g)`
/// coordinates. It generates `R = U₁U₂`.
pub fn drive_hamiltonian(p: &ModelParams, t: f64) -> ComplexMatrix {
    let (plus, minus) = pm_basis(p.phi1);
    let pm = (outer(&plus, &minus) * phase(p.phi() - 2.0 * p.omega1 * t)).scale(p.omega2 / 2.0);
    drive_operator(p.phi1) * real(p.omega1) + &pm + pm.adjoint()
}

/// `R(t) = U₁(t)U₂(t)` on the two-level space.
pub fn dressed_frame(p: &ModelParams) -> FrameTransform {
    let (pa, pb) = (*p, *p);
    FrameTransform::new(
        Sampler::time_dependent(move |t| u1(&pa, t) * u2(&pa, t)),
        Sampler::time_dependent(move |t| drive_hamiltonian(&pb, t)),
    )
    .expect("U₁U₂ is the identity at t = 0")
}

/// Dressed drive of the memory branch, `(Δ₁/2)σ_z + Ω₁(e^{iφ₁}σ_eg + h.c.)`.
pub fn memory_drive(p: &ModelParams) -> ComplexMatrix {
    sigma_z() * real(p.delta1 / 2.0) + drive_operator(p.phi1) * real(p.omega1)
}

/// `Ũ₁ = exp(iΔ₁σ_z t/2)`
pub fn memory_u1(p: &ModelParams, t: f64) -> ComplexMatrix {
    let h = p.delta1 * t / 2.0;
    ComplexMatrix::from_diagonal(&ket2(phase(h), phase(-h)))
}

/// `Ũ₂ = e^{−iλt}|+̃⟩⟨+̃| + e^{iλt}|−̃⟩⟨−̃|`
pub fn memory_u2(p: &ModelParams, t: f64) -> Result<ComplexMatrix> {
    let d = DerivedMemoryParams::from_params(p)?;
    let (plus, minus) = memory_basis(p)?;
    Ok(spectral(&[(-d.lambda * t, &plus), (d.lambda * t, &minus)]))
}

/// `R̃(t) = Ũ₁†(t)Ũ₂(t)`, carrying the memory dressed frame to the
/// interaction picture in which the protected state takes its closed form.
/// Generator: `Δ₁σ_z + Ω₁(e^{i(φ₁ − Δ₁t)}σ_eg + h.c.)`.
pub fn memory_frame(p: &ModelParams) -> Result<FrameTransform> {
    let d = DerivedMemoryParams::from_params(p)?;
    let (plus, minus) = memory_basis(p)?;
    let q = *p;
    let propagator = move |t: f64| {
        memory_u1(&q, t).adjoint() * spectral(&[(-d.lambda * t, &plus), (d.lambda * t, &minus)])
    };
    let generator = move |t: f64| {
        let m = (sigma_eg() * phase(q.phi1 - q.delta1 * t)).scale(q.omega1);
        sigma_z() * real(q.delta1) + &m + m.adjoint()
    };
    FrameTransform::new(Sampler::time_dependent(propagator), Sampler::time_dependent(generator))
}

/// Maps a two-level operator onto two-level ⊗ Fock.
pub fn embed_two_level(op: &ComplexMatrix, n_max: usize) -> ComplexMatrix {
    kron(op, &identity(n_max + 1))
}

/// Cavity lowering operator on two-level ⊗ Fock.
pub fn cavity_annihilation(n_max: usize) -> Result<ComplexMatrix> {
    Ok(kron(&identity(2), &fock_annihilation(n_max)?))
}

// ---------------------------------------------------------------------------
// Hamiltonians

/// `σ_eg ⊗ [g e^{−iΔ_a t} a + Ω₁e^{i(φ₁−Δ₁t)} + Ω₂e^{i(φ₂−Δ₂t)}] + h.c.`
/// Valid for any parameters; no regime check.
pub fn build_h1(p: &ModelParams, t: f64) -> Result<ComplexMatrix> {
    p.validate()?;
    let a = fock_annihilation(p.n_max)?;
    let drive = phase(p.phi1 - p.delta1 * t) * p.omega1 + phase(p.phi2 - p.delta2 * t) * p.omega2;
    let coupling = a * (phase(-p.delta_a * t) * p.g) + identity(p.fock_dim()) * drive;
    let m = kron(&sigma_eg(), &coupling);
    Ok(&m + m.adjoint())
}

/// Memory-branch Hamiltonian in the first rotating frame:
/// `(Δ₁/2)σ_z + Ω₁(e^{iφ₁}σ_eg + h.c.) + [g e^{−iΔ_a t}σ_eg ⊗ a + h.c.]`.
pub fn build_h1_memory_frame(p: &ModelParams, t: f64) -> Result<ComplexMatrix> {
    p.validate()?;
    let a = fock_annihilation(p.n_max)?;
    let cav = kron(&sigma_eg(), &a) * (phase(-p.delta_a * t) * p.g);
    Ok(embed_two_level(&memory_drive(p), p.n_max) + &cav + cav.adjoint())
}

fn jc_coupling(strength: f64, phi1: f64, n_max: usize) -> Result<ComplexMatrix> {
    let a = fock_annihilation(n_max)?;
    let m = kron(&transition(2, 0, 1), &a.adjoint()) * (phase(phi1) * (strength / 2.0));
    Ok(&m + m.adjoint())
}

/// `(g/2)(e^{iφ₁}σ_↑↓ ⊗ a† + e^{−iφ₁}σ_↓↑ ⊗ a)` in `(↑, ↓)` ⊗ Fock.
pub fn build_h2_effective(p: &ModelParams) -> Result<ComplexMatrix> {
    require_regime(p, Branch::Nonadiabatic)?;
    jc_coupling(p.g, p.phi1, p.n_max)
}

/// `(g̃/2)(e^{iφ₁}σ₊₋ ⊗ a† + h.c.)` in `(+̃, −̃)` ⊗ Fock.
pub fn build_h2_memory(p: &ModelParams) -> Result<ComplexMatrix> {
    require_regime(p, Branch::Memory)?;
    let d = DerivedMemoryParams::from_params(p)?;
    jc_coupling(d.g_tilde, p.phi1, p.n_max)
}

/// Effective Hamiltonian of either branch (regime-checked).
pub fn build_effective(p: &ModelParams, branch: Branch) -> Result<ComplexMatrix> {
    match branch {
        Branch::Nonadiabatic => build_h2_effective(p),
        Branch::Memory => build_h2_memory(p),
    }
}

/// Full Hamiltonian the effective one approximates: `H1` for the
/// nonadiabatic branch, the memory-frame Hamiltonian otherwise.
pub fn build_full(p: &ModelParams, branch: Branch, t: f64) -> Result<ComplexMatrix> {
    match branch {
        Branch::Nonadiabatic => build_h1(p, t),
        Branch::Memory => build_h1_memory_frame(p, t),
    }
}

/// Map from effective (dressed ⊗ Fock) coordinates at time `t` to the
/// coordinates of [`build_full`].
pub fn effective_to_full(p: &ModelParams, branch: Branch) -> Result<impl Fn(f64) -> ComplexMatrix> {
    let q = *p;
    let (basis, lambda) = match branch {
        Branch::Nonadiabatic => (basis_matrix(&updown_basis(p)), 0.0),
        Branch::Memory => (
            basis_matrix(&memory_basis(p)?),
            DerivedMemoryParams::from_params(p)?.lambda,
        ),
    };
    Ok(move |t: f64| {
        let frame = match branch {
            Branch::Nonadiabatic => u1(&q, t) * u2(&q, t) * &basis,
            Branch::Memory => {
                &basis * ComplexMatrix::from_diagonal(&ket2(phase(-lambda * t), phase(lambda * t)))
            }
        };
        embed_two_level(&frame, q.n_max)
    })
}

// ---------------------------------------------------------------------------
// Rates and closed forms

/// `Γ_eng = g²/Γ` (nonadiabatic) or `g̃²/Γ` (memory).
pub fn engineered_rate(p: &ModelParams, branch: Branch) -> Result<f64> {
    if !(p.cavity_decay > 0.0) {
        return Err(Error::Domain("engineered rate needs a positive cavity decay".into()));
    }
    let coupling = match branch {
        Branch::Nonadiabatic => p.g,
        Branch::Memory => DerivedMemoryParams::from_params(p)?.g_tilde,
    };
    Ok(coupling * coupling / p.cavity_decay)
}

/// `ε = [2 + (8/3)r]⁻¹` (nonadiabatic) or `ε̃ = [2 + r]⁻¹` (memory) for
/// `r = Γ_eng/γ`.
pub fn epsilon_closed_form(rate_ratio: f64, branch: Branch) -> Result<f64> {
    if !(rate_ratio >= 0.0) {
        return Err(Error::Domain(alloc::format!("rate ratio must be non-negative, got {rate_ratio}")));
    }
    if rate_ratio.is_infinite() {
        return Ok(0.0);
    }
    Ok(match branch {
        Branch::Nonadiabatic => 1.0 / (2.0 + 8.0 * rate_ratio / 3.0),
        Branch::Memory => 1.0 / (2.0 + rate_ratio),
    })
}

/// Asymptotic two-level state in the protected basis: `diag(1 − ε, ε)`, or
/// for the memory branch the same diagonal with real off-diagonals
/// `ε/(1 − ε)`. The latter is positive only while `(1 − ε)³ ≥ ε`.
pub fn asymptotic_state(branch: Branch, epsilon: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(alloc::format!("epsilon {epsilon} outside [0, 1]")));
    }
    let off = match branch {
        Branch::Nonadiabatic => 0.0,
        Branch::Memory => {
            let q = 1.0 - epsilon;
            if q * q * q < epsilon {
                return Err(Error::Domain(alloc::format!(
                    "memory asymptotic state is not positive for epsilon = {epsilon}"
                )));
            }
            epsilon / q
        }
    };
    DensityMatrix::new(ComplexMatrix::from_row_slice(
        2,
        2,
        &[real(1.0 - epsilon), real(off), real(off), real(epsilon)],
    ))
}

/// `cos(φ/2 − Ω₁t)|e⟩ + i e^{−iφ₁} sin(φ/2 − Ω₁t)|g⟩`, the state `R(t)|↑⟩`
/// up to a global phase.
pub fn protected_state_sp1(p: &ModelParams, t: f64) -> KetState {
    let a = p.phi() / 2.0 - p.omega1 * t;
    ket2(real(a.cos()), c(0.0, 1.0) * phase(-p.phi1) * a.sin())
}

/// `[√(2+χ)|e⟩ + e^{−i(φ₁ − Δ₁t)}√(2−χ)|g⟩]/2`
pub fn protected_state_sp2(p: &ModelParams, t: f64) -> Result<KetState> {
    let d = DerivedMemoryParams::from_params(p)?;
    Ok(ket2(
        real((2.0 + d.chi).max(0.0).sqrt() / 2.0),
        phase(-(p.phi1 - p.delta1 * t)) * ((2.0 - d.chi).max(0.0).sqrt() / 2.0),
    ))
}

// ---------------------------------------------------------------------------
// Reduced two-level dynamics

/// Density-matrix elements in the protected basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub up_up: f64,
    pub down_down: f64,
    pub up_down: C64,
    pub down_up: C64,
}

impl BlochState {
    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        if rho.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: rho.dim(),
            });
        }
        Ok(BlochState {
            up_up: rho.element(0, 0).re,
            down_down: rho.element(1, 1).re,
            up_down: rho.element(0, 1),
            down_up: rho.element(1, 0),
        })
    }
}

/// Equations of motion for the protected-basis elements:
///
/// ```text
/// d ρ↑↑/dt = (Γ_eng + 3γ/8) − (Γ_eng + 3γ/2) ρ↑↑,   d ρ↓↓/dt = −d ρ↑↑/dt
/// d ρ↑↓/dt = −(Γ_eng/2 + 5γ/4) ρ↑↓ + (γ/8) ρ↓↑,      d ρ↓↑/dt = conj(d ρ↑↓/dt)
/// ```
pub fn bloch_ode_rhs(s: &BlochState, gamma_eng: f64, gamma: f64) -> Result<BlochState> {
    let trace = s.up_up + s.down_down;
    if (trace - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { norm: trace });
    }
    let herm = (s.down_up - s.up_down.conj()).norm();
    if herm > 1e-9 {
        return Err(Error::NotHermitian { deviation: herm });
    }
    let k = BlochCoefficients::printed(gamma_eng, gamma);
    let up = k.constant - k.population_decay * s.up_up;
    let coh = s.up_down * (-k.coherence_decay) + s.down_up * k.coupling;
    Ok(BlochState {
        up_up: up,
        down_down: -up,
        up_down: coh,
        down_up: coh.conj(),
    })
}

/// Coefficients of a trace-preserving two-level generator written as
/// `d ρ₀₀/dt = constant − population_decay·ρ₀₀` and
/// `d ρ₀₁/dt = −coherence_decay·ρ₀₁ + coupling·ρ₁₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochCoefficients {
    pub constant: f64,
    pub population_decay: f64,
    pub coherence_decay: f64,
    pub coupling: C64,
    /// Largest population–coherence cross term (zero for the printed form).
    pub cross_leakage: f64,
    /// Imaginary part of the coherence diagonal (a frequency shift).
    pub coherence_shift: f64,
}

impl BlochCoefficients {
    /// The coefficients as printed, with `Γ = Γ_eng`.
    pub fn printed(gamma_eng: f64, gamma: f64) -> Self {
        BlochCoefficients {
            constant: gamma_eng + 3.0 * gamma / 8.0,
            population_decay: gamma_eng + 3.0 * gamma / 2.0,
            coherence_decay: gamma_eng / 2.0 + 5.0 * gamma / 4.0,
            coupling: real(gamma / 8.0),
            cross_leakage: 0.0,
            coherence_shift: 0.0,
        }
    }

    /// Reads the coefficients from a 4×4 column-stacked superoperator
    /// (constants folded in through the trace).
    pub fn from_superoperator(l: &ComplexMatrix) -> Result<Self> {
        if l.shape() != (4, 4) {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: l.nrows(),
            });
        }
        // vec index: 0 ↔ ρ₀₀, 1 ↔ ρ₁₀, 2 ↔ ρ₀₁, 3 ↔ ρ₁₁
        let cross = [l[(0, 1)], l[(0, 2)], l[(2, 0)], l[(2, 3)]]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        Ok(BlochCoefficients {
            constant: l[(0, 3)].re,
            population_decay: (l[(0, 3)] - l[(0, 0)]).re,
            coherence_decay: -l[(2, 2)].re,
            coupling: l[(2, 1)],
            cross_leakage: cross,
            coherence_shift: l[(2, 2)].im,
        })
    }

    /// Steady-state `ρ₀₀ = constant / population_decay`.
    pub fn steady_population(&self) -> f64 {
        self.constant / self.population_decay
    }

    /// `1 − ρ₀₀` at the fixed point.
    pub fn steady_epsilon(&self) -> f64 {
        1.0 - self.steady_population()
    }
}

/// The γ part of the printed equations as an affine generator.
pub fn printed_gamma_generator(gamma: f64) -> AffineGenerator {
    let mut linear = ComplexMatrix::zeros(4, 4);
    linear[(0, 0)] = real(-1.5 * gamma);
    linear[(3, 0)] = real(1.5 * gamma);
    linear[(1, 1)] = real(-1.25 * gamma);
    linear[(2, 2)] = real(-1.25 * gamma);
    linear[(1, 2)] = real(gamma / 8.0);
    linear[(2, 1)] = real(gamma / 8.0);
    let constant = ComplexMatrix::from_diagonal(&ket2(real(3.0 * gamma / 8.0), real(-3.0 * gamma / 8.0)));
    AffineGenerator { linear, constant }
}

/// Spontaneous emission `σ_ge` as seen in the dressed frame of `branch`, in
/// dressed coordinates.
pub fn dressed_emission_operator(p: &ModelParams, branch: Branch) -> Result<Sampler> {
    let q = *p;
    Ok(match branch {
        Branch::Nonadiabatic => {
            let b = basis_matrix(&updown_basis(p));
            Sampler::time_dependent(move |t| {
                let r = u1(&q, t) * u2(&q, t) * &b;
                r.adjoint() * sigma_ge() * r
            })
        }
        Branch::Memory => {
            let frame = memory_frame(p)?;
            let b = basis_matrix(&memory_basis(p)?);
            Sampler::time_dependent(move |t| {
                let r = frame.propagator(t) * &b;
                r.adjoint() * sigma_ge() * r
            })
        }
    })
}

/// Period over which the dressed emission operator repeats: `2π/Ω₂` when
/// `2Ω₁/Ω₂` is an integer (nonadiabatic), `π/λ` (memory).
pub fn dressed_emission_period(p: &ModelParams, branch: Branch) -> Result<f64> {
    let two_pi = 2.0 * core::f64::consts::PI;
    match branch {
        Branch::Nonadiabatic => {
            if !(p.omega2 > 0.0) {
                return Err(Error::Domain("dressed emission period needs omega2 > 0".into()));
            }
            let k = 2.0 * p.omega1 / p.omega2;
            if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
                return Err(Error::Domain(alloc::format!(
                    "2 omega1 / omega2 = {k} is not an integer; no common period"
                )));
            }
            Ok(two_pi / p.omega2)
        }
        Branch::Memory => Ok(core::f64::consts::PI / DerivedMemoryParams::from_params(p)?.lambda),
    }
}

/// Rotating-wave average of the dressed spontaneous-emission dissipator at
/// rate γ.
pub fn averaged_atomic_dissipator(p: &ModelParams, branch: Branch, convention: Convention) -> Result<AffineGenerator> {
    let term = LindbladTerm::new(p.gamma, dressed_emission_operator(p, branch)?, convention)?;
    transformed_dissipator_average(&term, dressed_emission_period(p, branch)?)
}

/// How spontaneous emission enters a reduced model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaModel {
    Omit,
    /// The printed γ equations (nonadiabatic branch only).
    Printed,
    /// Rotating-wave average of the dressed `σ_ge` dissipator, `(γ/2)D[σ_ge]`.
    Averaged,
}

/// Engineered reservoir on the protected qubit: jump `|0⟩⟨1|` at rate
/// `Γ_eng` with the given prefactor, plus spontaneous emission per `gamma`.
pub fn reduced_master_equation_with(
    p: &ModelParams,
    branch: Branch,
    convention: Convention,
    gamma: GammaModel,
) -> Result<MasterEquation> {
    p.validate()?;
    let rate = engineered_rate(p, branch)?;
    let me = MasterEquation::closed(2).with_term(LindbladTerm::new(rate, transition(2, 0, 1), convention)?)?;
    match gamma {
        GammaModel::Omit => Ok(me),
        GammaModel::Printed => match branch {
            Branch::Nonadiabatic => me.with_affine(printed_gamma_generator(p.gamma)),
            Branch::Memory => Err(Error::invalid("no printed γ equations exist for the memory branch")),
        },
        GammaModel::Averaged => me.with_affine(averaged_atomic_dissipator(p, branch, Convention::Half)?),
    }
}

/// Reduced model as written: jump at `Γ_eng` with unit prefactor. With
/// `include_gamma` the nonadiabatic branch becomes exactly the printed
/// equations of motion (whose Γ_eng terms carry the half prefactor) and the
/// memory branch gains the averaged emission dissipator.
pub fn reduced_master_equation(p: &ModelParams, branch: Branch, include_gamma: bool) -> Result<MasterEquation> {
    match (include_gamma, branch) {
        (false, _) => reduced_master_equation_with(p, branch, Convention::Unit, GammaModel::Omit),
        (true, Branch::Nonadiabatic) => {
            reduced_master_equation_with(p, branch, Convention::Half, GammaModel::Printed)
        }
        (true, Branch::Memory) => reduced_master_equation_with(p, branch, Convention::Half, GammaModel::Averaged),
    }
}

/// Reduced model with the prefactor adiabatic elimination of the cavity
/// actually produces: population transfer at `g²/Γ`, i.e. jump `|0⟩⟨1|` at
/// rate `Γ_eng` with the half prefactor.
pub fn reduced_master_equation_eliminated(p: &ModelParams, branch: Branch, gamma: GammaModel) -> Result<MasterEquation> {
    reduced_master_equation_with(p, branch, Convention::Half, gamma)
}

/// Which coordinates the full ion–cavity master equation is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameChoice {
    /// Full Hamiltonian (`H1`, or the memory-frame Hamiltonian), emission on
    /// `σ_ge`.
    Bare,
    /// Effective Hamiltonian in dressed coordinates, emission through the
    /// time-dependent dressed operator.
    DressedEffective,
}

/// `ρ̇ = −i[H, ρ] + (Γ/2)D[a]ρ + (γ/2)D[σ_ge]ρ` on two-level ⊗ Fock.
pub fn full_system_master_equation(p: &ModelParams, branch: Branch, frame: FrameChoice) -> Result<MasterEquation> {
    p.validate()?;
    let a = cavity_annihilation(p.n_max)?;
    let q = *p;
    let (me, emission, hint) = match frame {
        FrameChoice::Bare => {
            let hint = match branch {
                Branch::Nonadiabatic => [p.delta1, p.delta2, p.delta_a, p.omega1, p.omega2]
                    .iter()
                    .fold(0.0f64, |m, x| m.max(x.abs())),
                Branch::Memory => p.delta_a.abs().max(p.omega1).max(p.delta1.abs()),
            };
            build_full(p, branch, 0.0)?;
            let me = MasterEquation::new(Sampler::time_dependent(move |t| {
                build_full(&q, branch, t).expect("parameters validated")
            }))?;
            (me, Sampler::from(embed_two_level(&sigma_ge(), p.n_max)), hint)
        }
        FrameChoice::DressedEffective => {
            let h = build_effective(p, branch)?;
            let op = dressed_emission_operator(p, branch)?;
            let n_max = p.n_max;
            let hint = match branch {
                Branch::Nonadiabatic => 2.0 * p.omega1 + p.omega2,
                Branch::Memory => 2.0 * DerivedMemoryParams::from_params(p)?.lambda,
            };
            let emission = Sampler::time_dependent(move |t| embed_two_level(&op.at(t), n_max));
            (MasterEquation::new(h)?, emission, hint)
        }
    };
    let mut me = me.with_term(LindbladTerm::new(p.cavity_decay, a, Convention::Half)?)?;
    if p.gamma > 0.0 || frame == FrameChoice::Bare {
        me = me.with_frequency_hint(hint);
    }
    if p.gamma > 0.0 {
        me = me.with_term(LindbladTerm::new(p.gamma, emission, Convention::Half)?)?;
    }
    Ok(me)
}

/// `|↑⟩⊗|n⟩` style product ket in two-level ⊗ Fock coordinates.
pub fn product_ket(level: usize, n: usize, n_max: usize) -> KetState {
    crate::linalg::basis_ket(2 * (n_max + 1), level * (n_max + 1) + n)
}
