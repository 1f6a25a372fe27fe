//! Liouvillian construction, time integration and steady states.
//!
//! The generator is
//!
//! ```text
//! ρ̇ = −i[H(t), ρ] + Σ_k f_k r_k (2 O_k ρ O_k† − O_k†O_k ρ − ρ O_k†O_k) + A(ρ)
//! ```
//!
//! where `f_k` is the per-term [`Convention`] factor and `A` an optional
//! affine generator for equations that are not written in Lindblad form.

use alloc::borrow::Cow;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::integrate::{integrate_refined, IntegrationStats, RefinementOptions};
use crate::linalg::{
    check_hermitian, hermitian_part, identity, kron, max_abs, spectral_norm, unvec, vec_of,
    ComplexMatrix, DensityMatrix, KetState, StateDiagnostics, C64, I,
};
#[allow(unused_imports)]
use num_traits::Float;

/// Operator-valued function of time, either fixed or sampled on demand.
#[derive(Clone)]
pub enum Sampler {
    Constant(ComplexMatrix),
    TimeDependent(Arc<dyn Fn(f64) -> ComplexMatrix + Send + Sync>),
}

impl Sampler {
    pub fn time_dependent(f: impl Fn(f64) -> ComplexMatrix + Send + Sync + 'static) -> Self {
        Sampler::TimeDependent(Arc::new(f))
    }

    pub fn at(&self, t: f64) -> Cow<'_, ComplexMatrix> {
        match self {
            Sampler::Constant(m) => Cow::Borrowed(m),
            Sampler::TimeDependent(f) => Cow::Owned(f(t)),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Sampler::Constant(_))
    }
}

impl From<ComplexMatrix> for Sampler {
    fn from(m: ComplexMatrix) -> Self {
        Sampler::Constant(m)
    }
}

impl fmt::Debug for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sampler::Constant(m) => f.debug_tuple("Constant").field(&m.shape()).finish(),
            Sampler::TimeDependent(_) => f.write_str("TimeDependent(..)"),
        }
    }
}

/// Prefactor in front of `rate · (2OρO† − O†Oρ − ρO†O)`.
///
/// `Half` is the usual `(Γ/2)(2aρa† − …)` form, in which `Γ` is the
/// population decay rate. `Unit` is the `Γ(2σρσ† − …)` form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    Half,
    Unit,
}

impl Convention {
    pub fn factor(self) -> f64 {
        match self {
            Convention::Half => 0.5,
            Convention::Unit => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LindbladTerm {
    rate: f64,
    operator: Sampler,
    convention: Convention,
}

impl LindbladTerm {
    pub fn new(rate: f64, operator: impl Into<Sampler>, convention: Convention) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::invalid(format!("Lindblad rate must be finite and >= 0, got {rate}")));
        }
        Ok(LindbladTerm {
            rate,
            operator: operator.into(),
            convention,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn operator(&self) -> &Sampler {
        &self.operator
    }

    /// `f · r`
    pub fn weight(&self) -> f64 {
        self.rate * self.convention.factor()
    }

    pub fn apply(&self, t: f64, rho: &ComplexMatrix) -> ComplexMatrix {
        let o = self.operator.at(t);
        let od = o.adjoint();
        let odo = &od * o.as_ref();
        let jump = o.as_ref() * rho * &od;
        (jump.scale(2.0) - &odo * rho - rho * &odo).scale(self.weight())
    }

    /// Column-stacked superoperator of this term at time `t`.
    pub fn superoperator(&self, t: f64) -> ComplexMatrix {
        let o = self.operator.at(t);
        let d = o.nrows();
        let id = identity(d);
        let odo = o.adjoint() * o.as_ref();
        let jump = kron(&o.map(|z| z.conj()), &o);
        (jump.scale(2.0) - kron(&id, &odo) - kron(&odo.transpose(), &id)).scale(self.weight())
    }
}

/// `ρ̇ += unvec(linear · vec ρ) + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineGenerator {
    pub linear: ComplexMatrix,
    pub constant: ComplexMatrix,
}

impl AffineGenerator {
    pub fn linear(linear: ComplexMatrix) -> Self {
        let d = (linear.nrows() as f64).sqrt().round() as usize;
        AffineGenerator {
            linear,
            constant: ComplexMatrix::zeros(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        unvec(&(&self.linear * vec_of(rho)), rho.nrows()) + &self.constant
    }

    /// Linear superoperator equal to this generator on unit-trace states:
    /// the constant is multiplied by `Tr ρ`.
    pub fn folded(&self) -> ComplexMatrix {
        let d = self.dim();
        let vi = vec_of(&identity(d));
        &self.linear + vec_of(&self.constant) * vi.transpose()
    }
}

#[derive(Debug, Clone)]
pub struct MasterEquation {
    dim: usize,
    hamiltonian: Sampler,
    terms: Vec<LindbladTerm>,
    affine: Option<AffineGenerator>,
    frequency_hint: f64,
}

impl MasterEquation {
    /// Checks that `H(0)` is square and Hermitian within `1e-10`.
    pub fn new(hamiltonian: impl Into<Sampler>) -> Result<Self> {
        let hamiltonian = hamiltonian.into();
        let h0 = hamiltonian.at(0.0);
        if !h0.is_square() || h0.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: h0.nrows(),
                found: h0.ncols(),
            });
        }
        check_hamiltonian(&h0)?;
        let dim = h0.nrows();
        drop(h0);
        Ok(MasterEquation {
            dim,
            hamiltonian,
            terms: Vec::new(),
            affine: None,
            frequency_hint: 0.0,
        })
    }

    pub fn closed(dim: usize) -> Self {
        MasterEquation {
            dim,
            hamiltonian: Sampler::Constant(ComplexMatrix::zeros(dim, dim)),
            terms: Vec::new(),
            affine: None,
            frequency_hint: 0.0,
        }
    }

    pub fn with_term(mut self, term: LindbladTerm) -> Result<Self> {
        let n = term.operator.at(0.0).nrows();
        if n != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: n,
            });
        }
        self.terms.push(term);
        Ok(self)
    }

    pub fn with_affine(mut self, affine: AffineGenerator) -> Result<Self> {
        if affine.dim() != self.dim || affine.linear.nrows() != self.dim * self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: affine.dim(),
            });
        }
        self.affine = Some(affine);
        Ok(self)
    }

    /// Extra angular frequency (rad/s) folded into the step ceiling, for
    /// explicit time dependence that `‖H(0)‖` does not reveal.
    pub fn with_frequency_hint(mut self, omega: f64) -> Self {
        self.frequency_hint = omega.abs();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[LindbladTerm] {
        &self.terms
    }

    pub fn hamiltonian(&self) -> &Sampler {
        &self.hamiltonian
    }

    pub fn affine(&self) -> Option<&AffineGenerator> {
        self.affine.as_ref()
    }

    pub fn is_time_independent(&self) -> bool {
        self.hamiltonian.is_constant() && self.terms.iter().all(|t| t.operator.is_constant())
    }

    pub fn rhs(&self, t: f64, rho: &ComplexMatrix) -> ComplexMatrix {
        let h = self.hamiltonian.at(t);
        let mut out = (h.as_ref() * rho - rho * h.as_ref()) * (-I);
        for term in &self.terms {
            if term.rate > 0.0 {
                out += term.apply(t, rho);
            }
        }
        if let Some(a) = &self.affine {
            out += a.apply(rho);
        }
        out
    }

    /// Fastest rate or angular frequency in the generator at `t = 0`.
    pub fn fastest_scale(&self) -> f64 {
        let h = spectral_norm(&self.hamiltonian.at(0.0));
        let dissipative = self
            .terms
            .iter()
            .map(|term| {
                let n = spectral_norm(&term.operator.at(0.0));
                2.0 * term.weight() * n * n
            })
            .fold(0.0, f64::max);
        let affine = self.affine.as_ref().map_or(0.0, |a| max_abs(&a.linear) + max_abs(&a.constant));
        h + dissipative + affine + self.frequency_hint
    }
}

fn check_hamiltonian(h: &ComplexMatrix) -> Result<()> {
    check_hermitian(h, 1e-10)
}

/// Matrix `L` with `vec(ρ̇) = L vec(ρ)` in the column-stacking convention.
/// An affine constant `C` enters as `vec(C) vec(I)ᵀ`, i.e. multiplied by
/// `Tr ρ`.
pub fn liouvillian_matrix(me: &MasterEquation, t: f64) -> ComplexMatrix {
    let d = me.dim;
    let id = identity(d);
    let h = me.hamiltonian.at(t);
    let mut l = (kron(&id, &h) - kron(&h.transpose(), &id)) * (-I);
    for term in &me.terms {
        if term.rate > 0.0 {
            l += term.superoperator(t);
        }
    }
    if let Some(a) = &me.affine {
        l += a.folded();
    }
    l
}

/// Frobenius norm of `ρ̇` at `(ρ, t)`.
pub fn residual(me: &MasterEquation, rho: &DensityMatrix, t: f64) -> f64 {
    me.rhs(t, rho.matrix()).norm()
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub stats: IntegrationStats,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory has at least one sample")
    }

    /// Worst trace, Hermiticity and positivity figures along the run.
    pub fn diagnostics(&self) -> StateDiagnostics {
        self.states
            .iter()
            .map(DensityMatrix::diagnostics)
            .reduce(StateDiagnostics::worst)
            .expect("trajectory has at least one sample")
    }
}

pub fn evolve(me: &MasterEquation, rho0: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
    evolve_with(me, rho0, times, &RefinementOptions::default())
}

/// RK4 integration of the master equation with automatic step halving.
/// `times` must start at 0 and increase strictly.
pub fn evolve_with(
    me: &MasterEquation,
    rho0: &DensityMatrix,
    times: &[f64],
    opts: &RefinementOptions,
) -> Result<Trajectory> {
    if rho0.dim() != me.dim {
        return Err(Error::DimensionMismatch {
            expected: me.dim,
            found: rho0.dim(),
        });
    }
    if times.first().copied() != Some(0.0) {
        return Err(Error::invalid("time grid must start at 0"));
    }
    for &t in times {
        check_hamiltonian(&me.hamiltonian.at(t))?;
    }
    if me.is_time_independent() {
        return evolve_exact(me, rho0, times);
    }
    let (states, stats) = integrate_refined(
        |t, rho| me.rhs(t, rho),
        rho0.matrix(),
        times,
        me.fastest_scale(),
        opts,
    )?;
    Ok(Trajectory {
        times: times.to_vec(),
        states: states.into_iter().map(DensityMatrix::from_matrix_unchecked).collect(),
        stats,
    })
}

/// Constant generators: `vec ρ(t_{k+1}) = exp(L Δt) vec ρ(t_k)`, one
/// exponential per distinct interval length.
fn evolve_exact(me: &MasterEquation, rho0: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
    crate::integrate::validate_grid(times)?;
    let d = me.dim;
    let l = liouvillian_matrix(me, 0.0);
    let mut v = DVector::from_column_slice(rho0.matrix().as_slice());
    let mut states = Vec::with_capacity(times.len());
    states.push(DensityMatrix::from_matrix_unchecked(rho0.matrix().clone()));
    let mut cached: Option<(f64, ComplexMatrix)> = None;
    let mut largest = 0.0f64;
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        largest = largest.max(dt);
        let reuse = matches!(&cached, Some((h, _)) if (h - dt).abs() <= 1e-12 * dt);
        if !reuse {
            cached = Some((dt, crate::linalg::expm(&l.scale(dt))));
        }
        let step = &cached.as_ref().expect("propagator cached").1;
        v = step * v;
        states.push(DensityMatrix::from_matrix_unchecked(ComplexMatrix::from_column_slice(d, d, v.as_slice())));
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        stats: IntegrationStats {
            step: largest,
            substeps: times.len() - 1,
            refinements: 0,
            achieved_change: 0.0,
        },
    })
}

/// Integrates `i ψ̇ = H(t) ψ` on `times` (RK4 with step halving).
pub fn evolve_ket<F>(
    hamiltonian: F,
    psi0: &KetState,
    times: &[f64],
    opts: &RefinementOptions,
) -> Result<(Vec<KetState>, IntegrationStats)>
where
    F: Fn(f64) -> ComplexMatrix,
{
    let t0 = times.first().copied().unwrap_or(0.0);
    let h0 = hamiltonian(t0);
    if h0.nrows() != psi0.len() {
        return Err(Error::DimensionMismatch {
            expected: h0.nrows(),
            found: psi0.len(),
        });
    }
    let scale = spectral_norm(&h0);
    let y0 = ComplexMatrix::from_column_slice(psi0.len(), 1, psi0.as_slice());
    let (states, stats) = integrate_refined(|t, y| (hamiltonian(t) * y) * (-I), &y0, times, scale, opts)?;
    Ok((
        states.into_iter().map(|m| KetState::from_column_slice(m.as_slice())).collect(),
        stats,
    ))
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub state: DensityMatrix,
    /// Dimension of the numerical null space of the Liouvillian.
    pub null_dimension: usize,
    pub degenerate: bool,
    /// `‖L vec(ρ_ss)‖`
    pub residual: f64,
}

/// Relative singular-value threshold below which a direction of `L` counts
/// as null.
pub const NULL_TOLERANCE: f64 = 1e-10;

/// Trace-normalized null vector of the Liouvillian. A degenerate null space
/// yields the projection of the maximally mixed state onto it.
pub fn steady_state(me: &MasterEquation) -> Result<SteadyState> {
    if !me.is_time_independent() {
        return Err(Error::invalid("steady state requires a time-independent master equation"));
    }
    let d = me.dim;
    let l = liouvillian_matrix(me, 0.0);
    let svd = l.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let sigma_max = svd.singular_values.iter().fold(0.0, |a: f64, &s| a.max(s));
    let threshold = NULL_TOLERANCE * sigma_max;
    let null: Vec<DVector<C64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= threshold)
        .map(|(k, _)| v_t.row(k).adjoint())
        .collect();
    if null.is_empty() {
        return Err(Error::NoSteadyState("Liouvillian has no null vector".into()));
    }
    let target = vec_of(&identity(d).unscale(d as f64));
    let mut projected = DVector::<C64>::zeros(d * d);
    for v in &null {
        projected += v * v.dotc(&target);
    }
    let rho = unvec(&projected, d);
    let tr = rho.trace();
    if tr.norm() < 1e-12 {
        return Err(Error::NoSteadyState("null space holds no trace-class state".into()));
    }
    let rho = hermitian_part(&rho.map(|z| z / tr));
    let residual = (&l * vec_of(&rho)).norm();
    Ok(SteadyState {
        state: DensityMatrix::from_matrix_unchecked(rho),
        null_dimension: null.len(),
        degenerate: null.len() > 1,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_ket, projector, real, transition};

    fn decay_qubit(gamma: f64) -> MasterEquation {
        // e = 0, g = 1; Half convention makes γ the population decay rate.
        MasterEquation::closed(2)
            .with_term(LindbladTerm::new(gamma, transition(2, 1, 0), Convention::Half).unwrap())
            .unwrap()
    }

    #[test]
    fn hand_computed_decay_liouvillian() {
        // Unit convention with rate γ/2 is the same generator.
        let gamma = 3.0;
        let me = MasterEquation::closed(2)
            .with_term(LindbladTerm::new(gamma / 2.0, transition(2, 1, 0), Convention::Unit).unwrap())
            .unwrap();
        let l = liouvillian_matrix(&me, 0.0);
        let rho_e = projector(&basis_ket(2, 0));
        let out = unvec(&(&l * vec_of(&rho_e)), 2);
        assert!((out[(0, 0)] - real(-gamma)).norm() < 1e-14);
        assert!((out[(1, 1)] - real(gamma)).norm() < 1e-14);
        assert!(out[(0, 1)].norm() < 1e-14);
        // Hand evaluation of the 4x4 in column stacking [ρee, ρge, ρeg, ρgg].
        let expected = [
            [-gamma, 0.0, 0.0, 0.0],
            [0.0, -gamma / 2.0, 0.0, 0.0],
            [0.0, 0.0, -gamma / 2.0, 0.0],
            [gamma, 0.0, 0.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((l[(i, j)] - real(expected[i][j])).norm() < 1e-14, "({i},{j})");
            }
        }
    }

    #[test]
    fn closed_system_liouvillian() {
        let h = ComplexMatrix::from_row_slice(2, 2, &[real(1.0), C64::new(0.3, -0.2), C64::new(0.3, 0.2), real(-0.4)]);
        let me = MasterEquation::new(h.clone())
            .unwrap()
            .with_term(LindbladTerm::new(0.0, transition(2, 1, 0), Convention::Unit).unwrap())
            .unwrap();
        let id = identity(2);
        let expected = (kron(&id, &h) - kron(&h.transpose(), &id)) * (-I);
        assert!(max_abs(&(liouvillian_matrix(&me, 0.0) - expected)) < 1e-15);
    }

    #[test]
    fn decay_trajectory_and_residual() {
        let gamma = 2.0;
        let me = decay_qubit(gamma);
        let rho_e = DensityMatrix::from_ket(&basis_ket(2, 0)).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
        let traj = evolve(&me, &rho_e, &times).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s.element(0, 0).re - (-gamma * t).exp()).abs() < 1e-7);
        }
        // ρ̇ = diag(-γ, γ) at t = 0, Frobenius norm γ√2.
        assert!((residual(&me, &rho_e, 0.0) - gamma * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn exact_and_stepped_paths_agree() {
        let h = ComplexMatrix::from_row_slice(2, 2, &[real(0.4), C64::new(1.0, 0.3), C64::new(1.0, -0.3), real(-0.4)]);
        let jump = transition(2, 1, 0);
        let constant = MasterEquation::new(h.clone())
            .unwrap()
            .with_term(LindbladTerm::new(0.7, jump.clone(), Convention::Half).unwrap())
            .unwrap();
        let stepped = MasterEquation::new(Sampler::time_dependent(move |_| h.clone()))
            .unwrap()
            .with_term(LindbladTerm::new(0.7, jump, Convention::Half).unwrap())
            .unwrap();
        let rho0 = DensityMatrix::from_ket(&basis_ket(2, 0)).unwrap();
        let times = [0.0, 0.5, 1.0, 1.5, 3.0];
        let a = evolve(&constant, &rho0, &times).unwrap();
        let b = evolve(&stepped, &rho0, &times).unwrap();
        assert_eq!(a.stats.refinements, 0);
        assert!(b.stats.refinements > 0);
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!(max_abs(&(x.matrix() - y.matrix())) < 1e-8);
        }
    }

    #[test]
    fn trivial_dynamics_is_constant() {
        let me = MasterEquation::closed(3);
        let rho = DensityMatrix::maximally_mixed(3);
        let traj = evolve(&me, &rho, &[0.0, 1.0, 2.0]).unwrap();
        assert!(traj.states.iter().all(|s| s == &rho));
    }

    #[test]
    fn decay_steady_state_is_ground() {
        let ss = steady_state(&decay_qubit(1.0)).unwrap();
        assert!(!ss.degenerate);
        assert!((ss.state.element(1, 1).re - 1.0).abs() < 1e-12);
        assert!(ss.residual <= 1e-9);
    }

    #[test]
    fn degenerate_null_space_is_flagged() {
        let ss = steady_state(&MasterEquation::closed(2)).unwrap();
        assert!(ss.degenerate);
        assert_eq!(ss.null_dimension, 4);
        assert!(max_abs(&(ss.state.matrix() - identity(2).unscale(2.0))) < 1e-12);
    }

    #[test]
    fn eigenstate_of_closed_system_has_zero_residual() {
        let h = ComplexMatrix::from_diagonal(&DVector::from_vec(alloc::vec![real(1.0), real(-2.0), real(0.5)]));
        let me = MasterEquation::new(h).unwrap();
        let rho = DensityMatrix::from_ket(&basis_ket(3, 1)).unwrap();
        assert!(residual(&me, &rho, 0.0) <= 1e-12);
    }

    #[test]
    fn time_dependent_steady_state_rejected() {
        let me = MasterEquation::new(Sampler::time_dependent(|t| identity(2).scale(t))).unwrap();
        assert!(steady_state(&me).is_err());
    }

    #[test]
    fn negative_rate_rejected() {
        assert!(LindbladTerm::new(-1.0, identity(2), Convention::Half).is_err());
    }
}
