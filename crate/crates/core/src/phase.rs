//! Geometric and dynamic phases of pure-state paths, and Bloch-sphere export.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{bloch_vector_of, check_normalized, inner, projector, ComplexMatrix, KetState, C64};
use crate::model::{basis_matrix, dressed_frame, drive_hamiltonian, updown_basis, ModelParams};
#[allow(unused_imports)]
use num_traits::Float;

/// Smallest overlap magnitude accepted between neighbouring samples.
pub const MIN_OVERLAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KetTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<KetState>,
}

impl KetTrajectory {
    pub fn new(times: Vec<f64>, states: Vec<KetState>) -> Result<Self> {
        crate::integrate::validate_grid(&times)?;
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: states.len(),
            });
        }
        let dim = states[0].len();
        for s in &states {
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.len(),
                });
            }
            check_normalized(s)?;
        }
        Ok(KetTrajectory { times, states })
    }

    /// Samples `f` on `samples` uniform points of `[t0, t1]`.
    pub fn sample(t0: f64, t1: f64, samples: usize, f: impl Fn(f64) -> KetState) -> Result<Self> {
        if samples < 2 {
            return Err(Error::invalid("a trajectory needs at least two samples"));
        }
        let times: Vec<f64> = (0..samples)
            .map(|k| t0 + (t1 - t0) * k as f64 / (samples - 1) as f64)
            .collect();
        let states = times.iter().map(|&t| f(t)).collect();
        Self::new(times, states)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        if self.times.len() < 3 {
            return true;
        }
        let h = self.times[1] - self.times[0];
        self.times.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRecord {
    pub geometric: f64,
    pub dynamic: f64,
    /// `geometric + dynamic`
    pub total: f64,
    pub cycle_time: f64,
}

/// `−∫⟨ψ|H(t)|ψ⟩dt` by the trapezoidal rule on a uniform grid.
pub fn dynamic_phase<F>(traj: &KetTrajectory, h: F) -> Result<f64>
where
    F: Fn(f64) -> ComplexMatrix,
{
    if !traj.is_uniform() {
        return Err(Error::invalid("dynamic phase needs a uniform time grid"));
    }
    let energies: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, psi)| inner(psi, &(h(t) * psi)).re)
        .collect();
    let mut integral = 0.0;
    for (k, w) in traj.times.windows(2).enumerate() {
        integral += 0.5 * (w[1] - w[0]) * (energies[k] + energies[k + 1]);
    }
    Ok(-integral)
}

fn overlaps(traj: &KetTrajectory) -> Result<Vec<C64>> {
    let n = traj.states.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let next = (k + 1) % n;
        let o = inner(&traj.states[k], &traj.states[next]);
        if o.norm() < MIN_OVERLAP {
            return Err(Error::IllConditionedPath {
                index: k,
                overlap: o.norm(),
            });
        }
        out.push(o);
    }
    Ok(out)
}

/// Wraps an angle into `(−2π, 0]`.
pub fn wrap_nonpositive(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let r = x - two_pi * (x / two_pi).ceil();
    if r + two_pi <= 1e-12 {
        0.0
    } else {
        r
    }
}

/// Discrete Pancharatnam phase `−arg Π⟨ψ_k|ψ_{k+1}⟩` of the path closed by
/// its geodesic, reported in `(−2π, 0]`. Independent of the phase of every
/// sample.
pub fn geometric_phase(traj: &KetTrajectory) -> Result<f64> {
    let product = overlaps(traj)?
        .into_iter()
        .fold(C64::new(1.0, 0.0), |acc, o| {
            let p = acc * (o / o.norm());
            p / p.norm()
        });
    Ok(wrap_nonpositive(-product.arg()))
}

/// Same phase accumulated step by step, so paths winding more than once
/// keep their winding. Depends on the sample gauge through multiples of 2π.
pub fn geometric_phase_unwrapped(traj: &KetTrajectory) -> Result<f64> {
    Ok(-overlaps(traj)?.iter().map(|o| o.arg()).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub fn export_bloch_path(traj: &KetTrajectory, basis: (&KetState, &KetState)) -> Result<Vec<BlochPoint>> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, psi)| {
            let [x, y, z] = bloch_vector_of(&projector(psi), basis)?;
            Ok(BlochPoint { t, x, y, z })
        })
        .collect()
}

pub fn phase_record<F>(traj: &KetTrajectory, h: F) -> Result<PhaseRecord>
where
    F: Fn(f64) -> ComplexMatrix,
{
    let geometric = geometric_phase(traj)?;
    let dynamic = dynamic_phase(traj, h)?;
    Ok(PhaseRecord {
        geometric,
        dynamic,
        total: geometric + dynamic,
        cycle_time: traj.times[traj.len() - 1] - traj.times[0],
    })
}

/// `arg⟨ψ(0)|ψ(T)⟩`
pub fn total_phase(traj: &KetTrajectory) -> f64 {
    inner(&traj.states[0], &traj.states[traj.len() - 1]).arg()
}

/// `R(t)|↑⟩` over one cycle `T = π/Ω₁` in `(e, g)` coordinates, global
/// phases included.
pub fn protected_cycle(p: &ModelParams, samples: usize) -> Result<KetTrajectory> {
    if !(p.omega1 > 0.0) {
        return Err(Error::Domain("cycle needs omega1 > 0".into()));
    }
    let frame = dressed_frame(p);
    let up = basis_matrix(&updown_basis(p)).column(0).into_owned();
    KetTrajectory::sample(0.0, PI / p.omega1, samples, |t| frame.propagator(t) * &up)
}

/// Geometric and dynamic phase over one protected cycle, the dynamic part
/// taken against the drive Hamiltonian that generates the path.
pub fn protected_cycle_record(p: &ModelParams, samples: usize) -> Result<PhaseRecord> {
    let traj = protected_cycle(p, samples)?;
    phase_record(&traj, |t| drive_hamiltonian(p, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_ket, phase, real};
    use crate::model::{protected_state_sp1, protected_state_sp2};

    fn cap(theta: f64, samples: usize) -> KetTrajectory {
        KetTrajectory::sample(0.0, 2.0 * PI, samples, |s| {
            KetState::from_column_slice(&[real((theta / 2.0).cos()), phase(s) * (theta / 2.0).sin()])
        })
        .unwrap()
    }

    #[test]
    fn latitude_loop_gives_half_solid_angle() {
        for theta in [0.3, 1.0, PI / 2.0, 2.4] {
            let solid = 2.0 * PI * (1.0 - theta.cos());
            let g = geometric_phase(&cap(theta, 2001)).unwrap();
            assert!((g - wrap_nonpositive(-solid / 2.0)).abs() < 1e-5, "theta {theta}: {g}");
        }
    }

    #[test]
    fn constant_path_has_no_phase() {
        let t = KetTrajectory::sample(0.0, 1.0, 10, |_| basis_ket(2, 0)).unwrap();
        assert_eq!(geometric_phase(&t).unwrap(), 0.0);
        assert_eq!(dynamic_phase(&t, |_| ComplexMatrix::zeros(2, 2)).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_neighbours_rejected() {
        let t = KetTrajectory::new(alloc::vec![0.0, 1.0], alloc::vec![basis_ket(2, 0), basis_ket(2, 1)]).unwrap();
        assert!(matches!(geometric_phase(&t), Err(Error::IllConditionedPath { index: 0, .. })));
    }

    #[test]
    fn nonuniform_grid_rejected_for_dynamic_phase() {
        let t = KetTrajectory::new(
            alloc::vec![0.0, 1.0, 3.0],
            alloc::vec![basis_ket(2, 0), basis_ket(2, 0), basis_ket(2, 0)],
        )
        .unwrap();
        assert!(dynamic_phase(&t, |_| ComplexMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn protected_cycle_phases() {
        let p = ModelParams::default();
        let rec = protected_cycle_record(&p, 4001).unwrap();
        assert!((rec.geometric + PI).abs() < 1e-6);
        assert!((rec.dynamic + PI * p.omega2 / (2.0 * p.omega1)).abs() < 1e-9);
        let traj = protected_cycle(&p, 4001).unwrap();
        let diff = total_phase(&traj) - rec.total;
        assert!((diff - 2.0 * PI * (diff / (2.0 * PI)).round()).abs() < 1e-6);
    }

    #[test]
    fn dynamic_phase_vanishes_without_second_drive() {
        let p = ModelParams {
            omega2: 0.0,
            delta_a: 0.0,
            ..ModelParams::default()
        };
        let traj = protected_cycle(&p, 501).unwrap();
        assert!(dynamic_phase(&traj, |t| drive_hamiltonian(&p, t)).unwrap().abs() < 1e-9);
    }

    #[test]
    fn sp1_closed_form_traces_same_loop() {
        let p = ModelParams::default();
        let t_end = PI / p.omega1;
        let traj = KetTrajectory::sample(0.0, t_end, 2001, |t| protected_state_sp1(&p, t)).unwrap();
        assert!((geometric_phase(&traj).unwrap() + PI).abs() < 1e-6);
    }

    #[test]
    fn meridian_and_parallel_paths() {
        let e = basis_ket(2, 0);
        let g = basis_ket(2, 1);
        let p = ModelParams::default();
        let t_end = PI / p.omega1;
        let traj = KetTrajectory::sample(0.0, t_end, 101, |t| protected_state_sp1(&p, t)).unwrap();
        let path = export_bloch_path(&traj, (&e, &g)).unwrap();
        assert!(path.iter().all(|b| b.x.abs() < 1e-9));
        let t = p.omega1 * path[17].t;
        assert!((path[17].y + (2.0 * t).sin()).abs() < 1e-12);
        assert!((path[17].z - (2.0 * t).cos()).abs() < 1e-12);
        let q = ModelParams {
            delta1: 3e7,
            ..p
        }
        .tuned_memory();
        let traj = KetTrajectory::sample(0.0, 1e-6, 101, |t| protected_state_sp2(&q, t).unwrap()).unwrap();
        let path = export_bloch_path(&traj, (&e, &g)).unwrap();
        let z0 = path[0].z;
        assert!(path.iter().all(|b| (b.z - z0).abs() < 1e-9));
    }
}
