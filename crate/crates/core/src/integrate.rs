//! Fixed-step classical RK4 with automatic step halving.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{max_abs, ComplexMatrix};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementOptions {
    /// Max entry-wise change between a run at step `h` and one at `h/2`.
    pub tolerance: f64,
    pub max_refinements: u32,
    /// Overrides the step derived from the generator's fastest scale.
    pub initial_step: Option<f64>,
}

impl Default for RefinementOptions {
    fn default() -> Self {
        RefinementOptions {
            tolerance: 1e-8,
            max_refinements: 10,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegrationStats {
    /// Step ceiling of the accepted run.
    pub step: f64,
    pub substeps: usize,
    pub refinements: u32,
    /// Change between the last two refinement levels.
    pub achieved_change: f64,
}

pub(crate) fn validate_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("time grid is empty"));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("time grid contains non-finite values"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("time grid must be strictly increasing"));
    }
    Ok(())
}

/// Initial step for a generator whose fastest rate or frequency is `scale`.
pub(crate) fn step_ceiling(scale: f64) -> f64 {
    if scale > 0.0 {
        1.0 / (50.0 * scale)
    } else {
        f64::INFINITY
    }
}

fn rk4_step<F>(rhs: &F, t: f64, y: &ComplexMatrix, h: f64) -> ComplexMatrix
where
    F: Fn(f64, &ComplexMatrix) -> ComplexMatrix,
{
    let k1 = rhs(t, y);
    let k2 = rhs(t + 0.5 * h, &(y + k1.scale(0.5 * h)));
    let k3 = rhs(t + 0.5 * h, &(y + k2.scale(0.5 * h)));
    let k4 = rhs(t + h, &(y + k3.scale(h)));
    y + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0)
}

fn integrate_fixed<F>(rhs: &F, y0: &ComplexMatrix, times: &[f64], h: f64) -> (Vec<ComplexMatrix>, usize)
where
    F: Fn(f64, &ComplexMatrix) -> ComplexMatrix,
{
    let mut out = Vec::with_capacity(times.len());
    let mut y = y0.clone();
    let mut substeps = 0;
    out.push(y.clone());
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let n = if h.is_finite() {
            (span / h).ceil().max(1.0) as usize
        } else {
            1
        };
        let dt = span / n as f64;
        for k in 0..n {
            y = rk4_step(rhs, w[0] + k as f64 * dt, &y, dt);
        }
        substeps += n;
        out.push(y.clone());
    }
    (out, substeps)
}

/// Integrates `y' = rhs(t, y)` and records `y` at every grid time. The step
/// is halved until two successive levels agree to `opts.tolerance` at every
/// recorded sample.
pub(crate) fn integrate_refined<F>(
    rhs: F,
    y0: &ComplexMatrix,
    times: &[f64],
    scale: f64,
    opts: &RefinementOptions,
) -> Result<(Vec<ComplexMatrix>, IntegrationStats)>
where
    F: Fn(f64, &ComplexMatrix) -> ComplexMatrix,
{
    validate_grid(times)?;
    if times.len() == 1 {
        return Ok((alloc::vec![y0.clone()], IntegrationStats::default()));
    }
    let span = times[times.len() - 1] - times[0];
    let mut h = opts.initial_step.unwrap_or_else(|| step_ceiling(scale)).min(span);
    let (mut coarse, _) = integrate_fixed(&rhs, y0, times, h);
    let mut change = f64::INFINITY;
    for refinement in 1..=opts.max_refinements {
        h *= 0.5;
        let (fine, substeps) = integrate_fixed(&rhs, y0, times, h);
        change = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| max_abs(&(a - b)))
            .fold(0.0, f64::max);
        if !change.is_finite() {
            break;
        }
        if change <= opts.tolerance {
            return Ok((
                fine,
                IntegrationStats {
                    step: h,
                    substeps,
                    refinements: refinement,
                    achieved_change: change,
                },
            ));
        }
        coarse = fine;
    }
    Err(Error::IntegrationDivergence {
        residual: change,
        refinements: opts.max_refinements,
    })
}
