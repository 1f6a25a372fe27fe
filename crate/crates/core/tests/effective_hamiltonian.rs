use engres_core::frames::compare_effective;
use engres_core::model::{
    build_effective, build_full, build_h1, build_h2_effective, effective_to_full, product_ket, Branch, ModelParams,
};
use engres_core::Error;

fn resonant() -> ModelParams {
    ModelParams {
        g: 1.0,
        omega1: 400.0,
        omega2: 20.0,
        cavity_decay: 20.0,
        gamma: 0.0,
        ..ModelParams::default()
    }
    .tuned_nonadiabatic()
}

fn memory(chi: f64) -> ModelParams {
    let lambda = 20.0;
    ModelParams {
        omega1: lambda * (1.0 - chi * chi / 4.0).sqrt(),
        delta1: chi * lambda,
        ..resonant()
    }
    .tuned_memory()
}

fn worst(p: &ModelParams, branch: Branch, level: usize) -> f64 {
    let h2 = build_effective(p, branch).unwrap();
    let map = effective_to_full(p, branch).unwrap();
    compare_effective(
        |t| build_full(p, branch, t).unwrap(),
        move |_| h2.clone(),
        Some(&map),
        &product_ket(level, 0, p.n_max),
        2.0 / p.g,
        201,
    )
    .unwrap()
    .worst_fidelity
}

#[test]
fn nonadiabatic_effective_tracks_full() {
    let p = resonant();
    // measured 0.99835 and 0.99827
    for level in [0, 1] {
        let f = worst(&p, Branch::Nonadiabatic, level);
        assert!(f >= 0.998, "level {level}: {f}");
    }
}

#[test]
fn wrong_detuning_sign_breaks_agreement() {
    let p = resonant();
    let off = ModelParams { delta_a: -p.delta_a, ..p };
    let h2 = build_h2_effective(&p).unwrap();
    let map = effective_to_full(&p, Branch::Nonadiabatic).unwrap();
    let c = compare_effective(
        |t| build_h1(&off, t).unwrap(),
        move |_| h2.clone(),
        Some(&map),
        &product_ket(0, 0, p.n_max),
        2.0,
        201,
    )
    .unwrap();
    assert!(c.worst_fidelity < 0.5, "{}", c.worst_fidelity);
    // the effective model itself refuses the off-resonant parameters
    assert!(matches!(build_h2_effective(&off), Err(Error::Regime(_))));
}

#[test]
fn memory_effective_tracks_full() {
    for chi in [0.0, 1.0, -1.0] {
        let p = memory(chi);
        for level in [0, 1] {
            let f = worst(&p, Branch::Memory, level);
            assert!(f >= 0.999, "chi {chi}, level {level}: {f}");
        }
    }
}
