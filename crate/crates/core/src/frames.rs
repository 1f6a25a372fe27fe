//! Frame propagators, operator conjugation and the rotating-wave averaging
//! oracle.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::integrate::RefinementOptions;
use crate::lindblad::{evolve_ket, AffineGenerator, LindbladTerm, Sampler};
use crate::linalg::{
    expm_hermitian_unchecked, identity, inner, max_abs, max_unitarity_error, ComplexMatrix, KetState,
};

/// Unitary `R(t)` together with its generator `H(t)` (`i Ṙ = H R`).
#[derive(Debug, Clone)]
pub struct FrameTransform {
    propagator: Sampler,
    generator: Sampler,
}

impl FrameTransform {
    /// Requires `R(0) = I` and `R(0)` unitary within `1e-10`.
    pub fn new(propagator: impl Into<Sampler>, generator: impl Into<Sampler>) -> Result<Self> {
        let propagator = propagator.into();
        let r0 = propagator.at(0.0);
        let dev = max_abs(&(r0.as_ref() - identity(r0.nrows())));
        if dev > 1e-10 {
            return Err(Error::invalid(alloc::format!("frame propagator R(0) differs from identity by {dev:e}")));
        }
        drop(r0);
        Ok(FrameTransform {
            propagator,
            generator: generator.into(),
        })
    }

    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        self.propagator.at(t).into_owned()
    }

    pub fn generator(&self, t: f64) -> ComplexMatrix {
        self.generator.at(t).into_owned()
    }

    /// `R(t) O_R R†(t)`: an operator of the rotating frame seen from outside.
    pub fn from_frame(&self, o: &ComplexMatrix, t: f64) -> ComplexMatrix {
        let r = self.propagator.at(t);
        r.as_ref() * o * r.adjoint()
    }

    /// `R†(t) O R(t)`
    pub fn into_frame(&self, o: &ComplexMatrix, t: f64) -> ComplexMatrix {
        let r = self.propagator.at(t);
        r.adjoint() * o * r.as_ref()
    }
}

/// Product of midpoint exponentials on `n` equal steps, latest time leftmost.
pub fn midpoint_product<F>(h: &F, t0: f64, t1: f64, n: usize) -> ComplexMatrix
where
    F: Fn(f64) -> ComplexMatrix,
{
    let dt = (t1 - t0) / n as f64;
    let mut u = identity(h(t0).nrows());
    for k in 0..n {
        let mid = t0 + (k as f64 + 0.5) * dt;
        u = expm_hermitian_unchecked(&h(mid), dt) * u;
    }
    u
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub propagator: ComplexMatrix,
    pub steps: usize,
    /// Change between the last two step counts.
    pub change: f64,
}

/// `T exp(−i ∫₀ᵗ H dt')`, doubling `steps` until successive results agree
/// to `1e-8`.
pub fn time_ordered_propagator<F>(h: F, t: f64, steps: usize) -> Result<ComplexMatrix>
where
    F: Fn(f64) -> ComplexMatrix,
{
    time_ordered_propagator_with(&h, 0.0, t, steps, 1e-8, 20).map(|p| p.propagator)
}

pub fn time_ordered_propagator_with<F>(
    h: &F,
    t0: f64,
    t1: f64,
    steps: usize,
    tolerance: f64,
    max_doublings: u32,
) -> Result<Propagation>
where
    F: Fn(f64) -> ComplexMatrix,
{
    if steps == 0 {
        return Err(Error::invalid("propagator needs at least one step"));
    }
    let h0 = h(t0);
    if !h0.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h0.nrows(),
            found: h0.ncols(),
        });
    }
    crate::linalg::check_hermitian(&h0, 1e-10)?;
    let mut n = steps;
    let mut coarse = midpoint_product(h, t0, t1, n);
    let mut change = f64::INFINITY;
    for doubling in 0..max_doublings {
        let _ = doubling;
        n *= 2;
        let fine = midpoint_product(h, t0, t1, n);
        change = max_abs(&(&fine - &coarse));
        if change <= tolerance {
            return Ok(Propagation {
                propagator: fine,
                steps: n,
                change,
            });
        }
        coarse = fine;
    }
    Err(Error::IntegrationDivergence {
        residual: change,
        refinements: max_doublings,
    })
}

/// `R O R†`
pub fn conjugate_operator(r: &ComplexMatrix, o: &ComplexMatrix) -> Result<ComplexMatrix> {
    if r.ncols() != o.nrows() || o.ncols() != r.ncols() || !r.is_square() {
        return Err(Error::DimensionMismatch {
            expected: r.ncols(),
            found: o.nrows(),
        });
    }
    Ok(r * o * r.adjoint())
}

/// One-period average of a dissipator whose operator is periodic in time,
/// returned as a constant Liouvillian fragment.
///
/// The superoperator (not the operator) is averaged, so cross terms between
/// Fourier components of equal frequency survive. Uniform left-point sums
/// are exact for trigonometric polynomials of degree below the grid size;
/// the grid starts at 256 points and doubles until two levels agree.
pub fn transformed_dissipator_average(term: &LindbladTerm, period: f64) -> Result<AffineGenerator> {
    if term.operator().is_constant() {
        return Ok(AffineGenerator::linear(term.superoperator(0.0)));
    }
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::invalid("averaging period must be positive and finite"));
    }
    let average = |n: usize| -> ComplexMatrix {
        let mut acc = term.superoperator(0.0);
        for k in 1..n {
            acc += term.superoperator(period * k as f64 / n as f64);
        }
        acc.unscale(n as f64)
    };
    let mut n = 256;
    let mut coarse = average(n);
    let mut change = f64::INFINITY;
    while n < 8192 {
        n *= 2;
        let fine = average(n);
        change = max_abs(&(&fine - &coarse));
        if change <= 1e-10 * max_abs(&fine).max(f64::MIN_POSITIVE) {
            return Ok(AffineGenerator::linear(fine));
        }
        coarse = fine;
    }
    Err(Error::NonConvergentAverage { change })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveComparison {
    pub times: Vec<f64>,
    pub fidelity_series: Vec<f64>,
    pub worst_fidelity: f64,
    /// Largest `|‖ψ‖² − 1|` over both unrenormalized runs.
    pub norm_drift: f64,
}

/// Evolves `psi0` under a full and an effective Hamiltonian and records
/// `|<ψ_full|M(t) ψ_eff>|²` (both renormalized) on `samples` uniform points of `[0, horizon]`.
///
/// `psi0` is given in the effective coordinates; `frame` maps effective
/// coordinates at time `t` into full ones (identity when `None`), and the
/// full run starts from `M(0) psi0`.
pub fn compare_effective<F, G>(
    full: F,
    effective: G,
    frame: Option<&dyn Fn(f64) -> ComplexMatrix>,
    psi0: &KetState,
    horizon: f64,
    samples: usize,
) -> Result<EffectiveComparison>
where
    F: Fn(f64) -> ComplexMatrix,
    G: Fn(f64) -> ComplexMatrix,
{
    if samples < 2 || !(horizon > 0.0) {
        return Err(Error::invalid("comparison needs a positive horizon and at least two samples"));
    }
    crate::linalg::check_normalized(psi0)?;
    let times: Vec<f64> = (0..samples)
        .map(|k| horizon * k as f64 / (samples - 1) as f64)
        .collect();
    let map = |t: f64, psi: &KetState| -> KetState {
        match frame {
            Some(m) => m(t) * psi,
            None => psi.clone(),
        }
    };
    let opts = RefinementOptions::default();
    let full0 = map(0.0, psi0);
    let (eff, _) = evolve_ket(&effective, psi0, &times, &opts)?;
    let (fulls, _) = evolve_ket(&full, &full0, &times, &opts)?;
    let fidelity_series: Vec<f64> = times
        .iter()
        .zip(eff.iter().zip(&fulls))
        .map(|(&t, (e, f))| {
            let m = map(t, e);
            inner(f, &m).norm_sqr() / (f.norm_squared() * m.norm_squared())
        })
        .collect();
    let worst_fidelity = fidelity_series.iter().copied().fold(f64::INFINITY, f64::min);
    let norm_drift = eff
        .iter()
        .chain(&fulls)
        .map(|psi| (psi.norm_squared() - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(EffectiveComparison {
        times,
        fidelity_series,
        worst_fidelity,
        norm_drift,
    })
}

/// Largest `|U†U − I|` of a frame propagator over the given times.
pub fn frame_unitarity_error(frame: &FrameTransform, times: &[f64]) -> f64 {
    times
        .iter()
        .map(|&t| max_unitarity_error(&frame.propagator(t)))
        .fold(0.0, f64::max)
}
