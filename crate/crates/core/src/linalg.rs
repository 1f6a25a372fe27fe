//! Dense complex linear algebra and quantum-state primitives.
//!
//! Matrices are plain `nalgebra` dense matrices. Superoperators use the
//! column-stacking convention `vec(A X B) = (Bᵀ ⊗ A) vec(X)`, which is also
//! the in-memory order of a column-major `DMatrix`.

use alloc::vec::Vec;
use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type KetState = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// e^{iθ}
#[inline]
pub fn phase(theta: f64) -> C64 {
    C64::new(theta.cos(), theta.sin())
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

/// `|k><l|` in a `dim`-dimensional space.
pub fn transition(dim: usize, k: usize, l: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    m[(k, l)] = real(1.0);
    m
}

pub fn basis_ket(dim: usize, index: usize) -> KetState {
    let mut v = KetState::zeros(dim);
    v[index] = real(1.0);
    v
}

pub fn outer(a: &KetState, b: &KetState) -> ComplexMatrix {
    a * b.adjoint()
}

pub fn projector(psi: &KetState) -> ComplexMatrix {
    outer(psi, psi)
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// max |A - A†|
pub fn hermiticity_error(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Checks `max|A - A†| <= rel_tol * max|A|`.
pub fn check_hermitian(m: &ComplexMatrix, rel_tol: f64) -> Result<()> {
    let deviation = hermiticity_error(m);
    let scale = max_abs(m);
    if deviation > rel_tol * scale {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// Columns of the returned matrix are the eigenvectors.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = m.nrows();
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0, |acc: f64, &s| acc.max(s))
}

/// `exp(-i H t)` for Hermitian `H`, computed from the eigen-decomposition.
///
/// Rejects `H` whose anti-Hermitian part exceeds `1e-12 * max|H|`.
pub fn expm_hermitian_generator(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            found: h.ncols(),
        });
    }
    check_hermitian(h, 1e-12)?;
    Ok(expm_hermitian_unchecked(h, t))
}

pub(crate) fn expm_hermitian_unchecked(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let n = h.nrows();
    if max_abs(h) == 0.0 || t == 0.0 {
        return identity(n);
    }
    let (values, vectors) = hermitian_eigen(h);
    let mut scaled = vectors.clone();
    for (j, lambda) in values.iter().enumerate() {
        let f = phase(-lambda * t);
        for i in 0..n {
            scaled[(i, j)] *= f;
        }
    }
    scaled * vectors.adjoint()
}

/// Truncated lowering operator on photon numbers `0..=n_max`.
/// `exp(A)` for a general square matrix: scale to 1-norm ≤ 1/2, sum the
/// Taylor series to machine precision, square back.
pub fn expm(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scaled = norm1;
    while scaled > 0.5 {
        scaled *= 0.5;
        squarings += 1;
    }
    let b = a.unscale(2f64.powi(squarings as i32));
    let mut term = identity(n);
    let mut sum = identity(n);
    for k in 1..40 {
        term = (&term * &b).unscale(k as f64);
        sum += &term;
        if max_abs(&term) <= f64::EPSILON * 1e-2 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn fock_annihilation(n_max: usize) -> Result<ComplexMatrix> {
    if n_max < 1 {
        return Err(Error::invalid("Fock cutoff n_max must be at least 1"));
    }
    let dim = n_max + 1;
    let mut a = ComplexMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = real((n as f64).sqrt());
    }
    Ok(a)
}

pub fn max_unitarity_error(u: &ComplexMatrix) -> f64 {
    let n = u.ncols();
    max_abs(&(u.adjoint() * u - identity(n)))
}

/// `<a|b>`
pub fn inner(a: &KetState, b: &KetState) -> C64 {
    a.dotc(b)
}

/// Partial trace over the second factor of a `d1 ⊗ d2` operator.
pub fn partial_trace_second(m: &ComplexMatrix, d1: usize, d2: usize) -> Result<ComplexMatrix> {
    if m.nrows() != d1 * d2 || m.ncols() != d1 * d2 {
        return Err(Error::DimensionMismatch {
            expected: d1 * d2,
            found: m.nrows(),
        });
    }
    Ok(ComplexMatrix::from_fn(d1, d1, |i, j| {
        (0..d2).map(|k| m[(i * d2 + k, j * d2 + k)]).sum()
    }))
}

/// ½ Σ |λ_k(A − B)| for Hermitian A, B.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b)).iter().map(|x| x.abs()).sum::<f64>()
}

/// Reshapes `vec(ρ)` (column stacking) into a square matrix.
pub fn unvec(v: &DVector<C64>, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(dim, dim, v.as_slice())
}

pub fn vec_of(m: &ComplexMatrix) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

/// Validation numbers for a candidate density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDiagnostics {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl StateDiagnostics {
    pub fn of(m: &ComplexMatrix) -> Self {
        let trace_error = (m.trace() - real(1.0)).norm();
        let hermiticity_error = hermiticity_error(m);
        let min_eigenvalue = hermitian_eigenvalues(m).first().copied().unwrap_or(0.0);
        StateDiagnostics {
            trace_error,
            hermiticity_error,
            min_eigenvalue,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.trace_error <= DensityMatrix::TRACE_TOL
            && self.hermiticity_error <= DensityMatrix::HERMITIAN_TOL
            && self.min_eigenvalue >= -DensityMatrix::NEGATIVITY_TOL
    }

    /// Component-wise worst of two diagnostics.
    pub fn worst(self, other: Self) -> Self {
        StateDiagnostics {
            trace_error: self.trace_error.max(other.trace_error),
            hermiticity_error: self.hermiticity_error.max(other.hermiticity_error),
            min_eigenvalue: self.min_eigenvalue.min(other.min_eigenvalue),
        }
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
///
/// Small negative eigenvalues (down to `-1e-8`) are tolerated and reported
/// through [`DensityMatrix::diagnostics`]; they are never clipped.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub const TRACE_TOL: f64 = 1e-9;
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const NEGATIVITY_TOL: f64 = 1e-8;

    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let d = StateDiagnostics::of(&m);
        if !d.is_valid() {
            return Err(Error::InvalidDensityMatrix {
                trace_error: d.trace_error,
                hermiticity_error: d.hermiticity_error,
                min_eigenvalue: d.min_eigenvalue,
            });
        }
        Ok(DensityMatrix(m))
    }

    /// Integrator outputs; validity is checked through `diagnostics`.
    pub(crate) fn from_matrix_unchecked(m: ComplexMatrix) -> Self {
        DensityMatrix(m)
    }

    pub fn from_ket(psi: &KetState) -> Result<Self> {
        check_normalized(psi)?;
        Ok(DensityMatrix(projector(psi)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(identity(dim).unscale(dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn element(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    pub fn diagnostics(&self) -> StateDiagnostics {
        StateDiagnostics::of(&self.0)
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        trace_distance(&self.0, &other.0)
    }
}

pub(crate) fn check_normalized(psi: &KetState) -> Result<()> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// `<ψ|ρ|ψ>` for a normalized target ket.
pub fn fidelity(rho: &DensityMatrix, psi: &KetState) -> Result<f64> {
    if rho.dim() != psi.len() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: psi.len(),
        });
    }
    check_normalized(psi)?;
    Ok(psi.dotc(&(rho.matrix() * psi)).re)
}

/// Bloch coordinates of a qubit state in an orthonormal basis `(|0>, |1>)`:
/// `x = 2 Re ρ01`, `y = -2 Im ρ01`, `z = ρ00 - ρ11`.
pub fn bloch_vector(rho: &DensityMatrix, basis: (&KetState, &KetState)) -> Result<[f64; 3]> {
    bloch_vector_of(rho.matrix(), basis)
}

pub(crate) fn bloch_vector_of(rho: &ComplexMatrix, basis: (&KetState, &KetState)) -> Result<[f64; 3]> {
    if rho.nrows() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: rho.nrows(),
        });
    }
    let (b0, b1) = basis;
    if b0.len() != 2 || b1.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: b0.len().max(b1.len()),
        });
    }
    let deviation = (b0.norm_squared() - 1.0)
        .abs()
        .max((b1.norm_squared() - 1.0).abs())
        .max(b0.dotc(b1).norm());
    if deviation > 1e-10 {
        return Err(Error::NotOrthonormal { deviation });
    }
    let r00 = b0.dotc(&(rho * b0)).re;
    let r11 = b1.dotc(&(rho * b1)).re;
    let r01 = b0.dotc(&(rho * b1));
    Ok([2.0 * r01.re, -2.0 * r01.im, r00 - r11])
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sigma_eg() -> ComplexMatrix {
        transition(2, 0, 1)
    }


    #[test]
    fn general_exponential_matches_closed_forms() {
        // nilpotent: exp(N) = I + N
        let n = ComplexMatrix::from_row_slice(2, 2, &[real(0.0), real(5.0), real(0.0), real(0.0)]);
        let e = expm(&n);
        assert!(max_abs(&(e - identity(2) - n)) < 1e-14);
        let h = ComplexMatrix::from_row_slice(2, 2, &[real(1.3), c(0.2, -2.0), c(0.2, 2.0), real(-0.6)]);
        let a = expm(&(h.clone() * c(0.0, -3.7)));
        assert!(max_abs(&(a - expm_hermitian_generator(&h, 3.7).unwrap())) < 1e-12);
        let d = ComplexMatrix::from_diagonal(&DVector::from_column_slice(&[real(-40.0), real(2.0)]));
        let e = expm(&d);
        assert!((e[(0, 0)].re - (-40.0f64).exp()).abs() < 1e-28);
        assert!((e[(1, 1)].re / 2f64.exp() - 1.0).abs() < 1e-12);
    }
    #[test]
    fn kron_identities_and_basis_action() {
        assert_eq!(kron(&identity(2), &identity(2)), identity(4));
        // |g>⊗|0> with e = 0, g = 1
        let col = |k: usize| ComplexMatrix::from_column_slice(2, 1, basis_ket(2, k).as_slice());
        let g0 = kron(&col(1), &col(0));
        let out = kron(&sigma_eg(), &identity(2)) * g0;
        assert_eq!(out, kron(&col(0), &col(0)));
    }

    #[test]
    fn expm_of_zero_and_diagonal() {
        let z = ComplexMatrix::zeros(3, 3);
        assert_eq!(expm_hermitian_generator(&z, 1.7).unwrap(), identity(3));

        let omega = 2.3;
        let t = 0.41;
        let sz = ComplexMatrix::from_row_slice(2, 2, &[real(1.0), real(0.0), real(0.0), real(-1.0)]);
        let u = expm_hermitian_generator(&sz.scale(omega / 2.0), t).unwrap();
        assert!((u[(0, 0)] - phase(-omega * t / 2.0)).norm() < 1e-14);
        assert!((u[(1, 1)] - phase(omega * t / 2.0)).norm() < 1e-14);
        assert!(u[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let m = sigma_eg();
        match expm_hermitian_generator(&m, 1.0) {
            Err(Error::NotHermitian { deviation }) => assert!((deviation - 1.0).abs() < 1e-15),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn fock_operator() {
        assert!(fock_annihilation(0).is_err());
        let a = fock_annihilation(1).unwrap();
        assert_eq!(&a * basis_ket(2, 1), basis_ket(2, 0));
        assert_eq!(&a * basis_ket(2, 0), KetState::zeros(2));
        let a2 = fock_annihilation(2).unwrap();
        assert!((a2[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn commutator_is_identity_below_cutoff() {
        for n_max in 1..6 {
            let a = fock_annihilation(n_max).unwrap();
            let comm = &a * a.adjoint() - a.adjoint() * &a;
            for n in 0..n_max {
                for m in 0..n_max {
                    let expected = if n == m { 1.0 } else { 0.0 };
                    assert!((comm[(n, m)] - real(expected)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn fidelity_cases() {
        let plus = KetState::from_vec(vec![real(0.5f64.sqrt()), real(0.5f64.sqrt())]);
        let rho = DensityMatrix::from_ket(&plus).unwrap();
        assert!((fidelity(&rho, &plus).unwrap() - 1.0).abs() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((fidelity(&mixed, &plus).unwrap() - 0.5).abs() < 1e-14);
        assert!(matches!(
            fidelity(&mixed, &basis_ket(3, 0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bloch_cases() {
        let e = basis_ket(2, 0);
        let g = basis_ket(2, 1);
        let rho_e = DensityMatrix::from_ket(&e).unwrap();
        assert_eq!(bloch_vector(&rho_e, (&e, &g)).unwrap(), [0.0, 0.0, 1.0]);
        let plus = (&e + &g).unscale(2f64.sqrt());
        let v = bloch_vector(&DensityMatrix::from_ket(&plus).unwrap(), (&e, &g)).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15 && v[2].abs() < 1e-15);
        let bad = (&e + &g).unscale(2.0);
        assert!(matches!(
            bloch_vector(&rho_e, (&e, &bad)),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn density_matrix_validation() {
        let mut m = identity(2).unscale(2.0);
        assert!(DensityMatrix::new(m.clone()).is_ok());
        m[(0, 0)] = real(1.5);
        m[(1, 1)] = real(-0.5);
        assert!(matches!(
            DensityMatrix::new(m),
            Err(Error::InvalidDensityMatrix { .. })
        ));
    }

    #[test]
    fn partial_trace_of_product() {
        let a = projector(&basis_ket(2, 1));
        let b = DensityMatrix::maximally_mixed(3).into_matrix();
        let p = partial_trace_second(&kron(&a, &b), 2, 3).unwrap();
        assert!(max_abs(&(p - a)) < 1e-15);
    }
}
