use engres_core::linalg::{basis_ket, partial_trace_second, trace_distance};
use engres_core::model::{
    engineered_rate, full_system_master_equation, product_ket, reduced_master_equation,
    reduced_master_equation_eliminated, Branch, FrameChoice, GammaModel, ModelParams,
};
use engres_core::{evolve, fidelity, steady_state, DensityMatrix, MasterEquation};

fn params(ratio: f64) -> ModelParams {
    ModelParams {
        g: 1.0,
        omega1: 400.0,
        omega2: 20.0,
        cavity_decay: ratio,
        gamma: 0.0,
        ..ModelParams::default()
    }
    .tuned_nonadiabatic()
}

fn grid(t_end: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect()
}

/// Largest TL-marginal trace distance after `t ≥ 5/Γ`, up to `Γ_eng t = 10`.
fn disagreement(ratio: f64, reduced: &MasterEquation) -> f64 {
    let p = params(ratio);
    let times = grid(10.0 / engineered_rate(&p, Branch::Nonadiabatic).unwrap(), 401);
    let full = full_system_master_equation(&p, Branch::Nonadiabatic, FrameChoice::DressedEffective).unwrap();
    let rho0 = DensityMatrix::from_ket(&product_ket(1, 0, p.n_max)).unwrap();
    let a = evolve(&full, &rho0, &times).unwrap();
    let b = evolve(reduced, &DensityMatrix::from_ket(&basis_ket(2, 1)).unwrap(), &times).unwrap();
    times
        .iter()
        .zip(a.states.iter().zip(&b.states))
        .filter(|(&t, _)| t >= 5.0 / p.cavity_decay)
        .map(|(_, (x, y))| trace_distance(&partial_trace_second(x.matrix(), 2, p.fock_dim()).unwrap(), y.matrix()))
        .fold(0.0, f64::max)
}

#[test]
fn eliminated_model_converges_with_cavity_decay() {
    let d: Vec<f64> = [10.0, 20.0, 40.0]
        .iter()
        .map(|&r| disagreement(r, &reduced_master_equation_eliminated(&params(r), Branch::Nonadiabatic, GammaModel::Omit).unwrap()))
        .collect();
    // measured 1.80e-2, 4.82e-3, 1.21e-3
    assert!(d[0] < 0.02 && d[1] < 5e-3 && d[2] < 1.3e-3, "{d:?}");
    assert!(d[0] > d[1] && d[1] > d[2]);
    // roughly quadratic in g/Γ
    assert!(d[0] / d[1] > 3.0 && d[1] / d[2] > 3.0);
}

#[test]
fn unit_prefactor_overshoots_the_transfer_rate() {
    // with the unit prefactor the population moves at 2Γ_eng, so the
    // marginal leads the full model by a fixed amount at every Γ
    for r in [10.0, 20.0, 40.0] {
        let d = disagreement(r, &reduced_master_equation(&params(r), Branch::Nonadiabatic, false).unwrap());
        assert!(d > 0.2, "ratio {r}: {d}");
    }
}

#[test]
fn full_model_relaxes_to_protected_state() {
    let p = params(20.0);
    let t_end = 10.0 / engineered_rate(&p, Branch::Nonadiabatic).unwrap();
    let full = full_system_master_equation(&p, Branch::Nonadiabatic, FrameChoice::DressedEffective).unwrap();
    let rho0 = DensityMatrix::from_ket(&product_ket(1, 0, p.n_max)).unwrap();
    let traj = evolve(&full, &rho0, &grid(t_end, 101)).unwrap();
    let f = fidelity(traj.final_state(), &product_ket(0, 0, p.n_max)).unwrap();
    assert!(f >= 0.9999, "{f}");
    let diag = traj.diagnostics();
    assert!(diag.trace_error < 1e-9 && diag.hermiticity_error < 1e-10 && diag.min_eigenvalue > -1e-9, "{diag:?}");
    let ss = steady_state(&full).unwrap();
    assert!(!ss.degenerate);
    assert!(fidelity(&ss.state, &product_ket(0, 0, p.n_max)).unwrap() > 1.0 - 1e-9);
}

#[test]
fn reduced_fixed_point_is_pure() {
    for me in [
        reduced_master_equation(&params(20.0), Branch::Nonadiabatic, false).unwrap(),
        reduced_master_equation_eliminated(&params(20.0), Branch::Nonadiabatic, GammaModel::Omit).unwrap(),
    ] {
        let ss = steady_state(&me).unwrap();
        let up = DensityMatrix::from_ket(&basis_ket(2, 0)).unwrap();
        assert!(ss.state.trace_distance(&up) < 1e-9);
        assert!(ss.residual < 1e-12);
    }
}
