//! Density matrices, observables and the gates built from Pauli generators.
//!
//! Register convention: qubit 0 is the most significant tensor factor, so an
//! `n`-qubit basis index reads `q0 q1 ... q(n-1)` in binary. A joint A ⊗ B
//! register puts group A in front, which makes the trailing partial trace
//! return the A marginal directly.

use std::f64::consts::PI;

use crate::error::{QrnnError, Result};
use crate::matrix::{hermitian_eigen, kron, ComplexMatrix, C64, ONE, ZERO};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_SLACK: f64 = 1e-9;
pub const OBSERVABLE_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-8;

/// Pauli axis for rotations and embedded operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> ComplexMatrix {
        let i = C64::new(0.0, 1.0);
        match self {
            Axis::X => ComplexMatrix::from_2x2(ZERO, ONE, ONE, ZERO),
            Axis::Y => ComplexMatrix::from_2x2(ZERO, -i, i, ZERO),
            Axis::Z => ComplexMatrix::from_2x2(ONE, ZERO, ZERO, -ONE),
        }
    }
}

/// `exp(-i angle P / 2)` for `P` the Pauli matrix of `axis`.
pub fn rotation_gate(axis: Axis, angle: f64) -> ComplexMatrix {
    let (s, c) = (0.5 * angle).sin_cos();
    let cc = C64::new(c, 0.0);
    match axis {
        Axis::X => ComplexMatrix::from_2x2(cc, C64::new(0.0, -s), C64::new(0.0, -s), cc),
        Axis::Y => ComplexMatrix::from_2x2(cc, C64::new(-s, 0.0), C64::new(s, 0.0), cc),
        Axis::Z => ComplexMatrix::from_2x2(C64::new(c, -s), ZERO, ZERO, C64::new(c, s)),
    }
}

/// Derivative of [`rotation_gate`] with respect to its angle:
/// `(-i P / 2) exp(-i angle P / 2)`, which equals the gate at `angle + pi` halved.
pub fn rotation_gate_derivative(axis: Axis, angle: f64) -> ComplexMatrix {
    rotation_gate(axis, angle + PI).scale_real(0.5)
}

/// A Hermitian operator. Construction checks Hermiticity to 1e-12.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianObservable {
    matrix: ComplexMatrix,
}

impl HermitianObservable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let deviation = matrix.hermiticity_error();
        if deviation > OBSERVABLE_TOL {
            return Err(QrnnError::NotHermitian { deviation });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

/// `I^{⊗qubit} ⊗ P ⊗ I^{⊗(n-qubit-1)}`.
pub fn pauli_embed(axis: Axis, qubit: usize, n: usize) -> Result<HermitianObservable> {
    if qubit >= n {
        return Err(QrnnError::QubitIndex { index: qubit, n });
    }
    let left = ComplexMatrix::identity(1 << qubit);
    let right = ComplexMatrix::identity(1 << (n - qubit - 1));
    let m = kron(&kron(&left, &axis.pauli()), &right);
    Ok(HermitianObservable { matrix: m })
}

/// A unit-trace positive semidefinite Hermitian matrix on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates shape, Hermiticity, trace and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let n_qubits = qubits_for_dim(matrix.rows()).ok_or_else(|| {
            QrnnError::InvalidDensityMatrix(format!(
                "dimension {} is not a power of two",
                matrix.rows()
            ))
        })?;
        if !matrix.is_square() {
            return Err(QrnnError::InvalidDensityMatrix(
                "matrix is not square".into(),
            ));
        }
        check_density_invariants(&matrix)?;
        Ok(Self { n_qubits, matrix })
    }

    /// Wraps a matrix produced by an invariant-preserving operation. The
    /// invariants are re-checked in debug builds.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        let n_qubits = qubits_for_dim(matrix.rows()).expect("power-of-two dimension");
        #[cfg(debug_assertions)]
        if let Err(e) = check_density_invariants(&matrix) {
            panic!("density-matrix invariant violated: {e}");
        }
        Self { n_qubits, matrix }
    }

    /// `|0...0⟩⟨0...0|` on `n_qubits` qubits.
    pub fn zero_state(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        let mut m = ComplexMatrix::zeros(d, d);
        m[(0, 0)] = ONE;
        Self {
            n_qubits,
            matrix: m,
        }
    }

    /// `|psi⟩⟨psi|` for a normalized state vector.
    pub fn from_pure(amplitudes: &[C64]) -> Result<Self> {
        let v = ComplexMatrix::column(amplitudes);
        Self::new(v.matmul_adjoint(&v))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        Self {
            n_qubits,
            matrix: ComplexMatrix::identity(d).scale_real(1.0 / d as f64),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix.hermitian_part()).0
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits + other.n_qubits,
            matrix: kron(&self.matrix, &other.matrix),
        }
    }
}

fn qubits_for_dim(dim: usize) -> Option<usize> {
    (dim.is_power_of_two()).then(|| dim.trailing_zeros() as usize)
}

/// Checks Hermiticity, unit trace and positivity with the crate tolerances.
pub fn check_density_invariants(m: &ComplexMatrix) -> Result<()> {
    let herm = m.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(QrnnError::InvalidDensityMatrix(format!(
            "Hermiticity error {herm:e}"
        )));
    }
    let tr = m.trace();
    if (tr - ONE).norm() > TRACE_TOL {
        return Err(QrnnError::InvalidDensityMatrix(format!(
            "trace {tr} differs from 1"
        )));
    }
    let min_eig = hermitian_eigen(&m.hermitian_part()).0[0];
    if min_eig < -PSD_SLACK {
        return Err(QrnnError::InvalidDensityMatrix(format!(
            "minimum eigenvalue {min_eig:e} is negative"
        )));
    }
    Ok(())
}

/// `U rho U^dag`.
pub fn apply_unitary(rho: &DensityMatrix, u: &ComplexMatrix) -> Result<DensityMatrix> {
    if !u.is_square() || u.rows() != rho.dim() {
        return Err(QrnnError::DimensionMismatch {
            expected: rho.dim(),
            actual: u.rows(),
        });
    }
    let deviation = u.unitarity_error();
    if deviation > UNITARY_TOL {
        return Err(QrnnError::NotUnitary { deviation });
    }
    let out = u.matmul(&rho.matrix).matmul_adjoint(u).hermitian_part();
    Ok(DensityMatrix::from_trusted(out))
}

/// Partial trace over the trailing `d_drop`-dimensional factor of a
/// `(d_keep * d_drop)`-square matrix. Linear; no positivity assumed.
pub fn partial_trace_matrix(m: &ComplexMatrix, d_keep: usize, d_drop: usize) -> ComplexMatrix {
    assert_eq!(m.rows(), d_keep * d_drop);
    assert!(m.is_square());
    ComplexMatrix::from_fn(d_keep, d_keep, |a1, a2| {
        (0..d_drop)
            .map(|b| m[(a1 * d_drop + b, a2 * d_drop + b)])
            .sum()
    })
}

/// Traces out the trailing `n_drop` qubits.
pub fn partial_trace_trailing(
    rho: &DensityMatrix,
    n_keep: usize,
    n_drop: usize,
) -> Result<DensityMatrix> {
    if n_keep + n_drop != rho.n_qubits || n_keep == 0 {
        return Err(QrnnError::DimensionMismatch {
            expected: rho.n_qubits,
            actual: n_keep + n_drop,
        });
    }
    let reduced = partial_trace_matrix(&rho.matrix, 1 << n_keep, 1 << n_drop);
    Ok(DensityMatrix::from_trusted(reduced))
}

/// `Re Tr[rho O]`; the imaginary part is below 1e-10 for valid inputs.
pub fn expectation(rho: &DensityMatrix, obs: &HermitianObservable) -> Result<f64> {
    if rho.dim() != obs.dim() {
        return Err(QrnnError::DimensionMismatch {
            expected: rho.dim(),
            actual: obs.dim(),
        });
    }
    Ok(trace_of_product(&rho.matrix, &obs.matrix).re)
}

/// `Tr[A B]` without forming the product.
pub(crate) fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let n = a.rows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Eigenvalues (ascending) and unitary eigenvector matrix (columns) of `h`.
pub fn herm_eigendecompose(h: &HermitianObservable) -> (Vec<f64>, ComplexMatrix) {
    hermitian_eigen(&h.matrix)
}

/// `exp(-i h t) = V diag(exp(-i lambda_k t)) V^dag`.
pub fn unitary_from_hamiltonian(h: &HermitianObservable, t: f64) -> ComplexMatrix {
    let (values, vectors) = herm_eigendecompose(h);
    let mut scaled = vectors.clone();
    let n = vectors.rows();
    for c in 0..n {
        let phase = C64::from_polar(1.0, -values[c] * t);
        for r in 0..n {
            scaled[(r, c)] *= phase;
        }
    }
    scaled.matmul_adjoint(&vectors)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ket(bits: &[u8]) -> DensityMatrix {
        let n = bits.len();
        let mut idx = 0;
        for &b in bits {
            idx = (idx << 1) | b as usize;
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[idx] = ONE;
        DensityMatrix::from_pure(&amps).unwrap()
    }

    /// Random density matrix `V diag(p) V^dag` with V the eigenvectors of a
    /// random Hermitian matrix.
    pub(crate) fn random_density(rng: &mut ChaCha8Rng, n_qubits: usize) -> DensityMatrix {
        let d = 1 << n_qubits;
        let h = random_hermitian(rng, d);
        let (_, v) = hermitian_eigen(&h);
        let mut p: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        let m = v
            .matmul(&ComplexMatrix::from_real_diagonal(&p))
            .matmul_adjoint(&v);
        DensityMatrix::new(m.hermitian_part()).unwrap()
    }

    pub(crate) fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
        let a = ComplexMatrix::from_fn(d, d, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        a.hermitian_part()
    }

    #[test]
    fn apply_unitary_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = random_density(&mut rng, 2);
        let same = apply_unitary(&rho, &ComplexMatrix::identity(4)).unwrap();
        assert!(same.matrix().max_abs_diff(rho.matrix()) < 1e-14);

        let flipped = apply_unitary(&ket(&[0]), &Axis::X.pauli()).unwrap();
        assert!(flipped.matrix().max_abs_diff(ket(&[1]).matrix()) < 1e-15);

        let mixed = DensityMatrix::maximally_mixed(1);
        let u = rotation_gate(Axis::Y, 0.7).matmul(&rotation_gate(Axis::Z, -1.3));
        let out = apply_unitary(&mixed, &u).unwrap();
        assert!(out.matrix().max_abs_diff(mixed.matrix()) < 1e-15);
    }

    #[test]
    fn apply_unitary_errors() {
        let rho = DensityMatrix::zero_state(1);
        assert!(matches!(
            apply_unitary(&rho, &ComplexMatrix::identity(4)),
            Err(QrnnError::DimensionMismatch { .. })
        ));
        let not_unitary = ComplexMatrix::identity(2).scale_real(1.1);
        assert!(matches!(
            apply_unitary(&rho, &not_unitary),
            Err(QrnnError::NotUnitary { .. })
        ));
    }

    #[test]
    fn apply_unitary_preserves_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let rho = random_density(&mut rng, 3);
            let h = HermitianObservable::new(random_hermitian(&mut rng, 8)).unwrap();
            let u = unitary_from_hamiltonian(&h, rng.gen_range(-2.0..2.0));
            let out = apply_unitary(&rho, &u).unwrap();
            assert!((out.matrix().trace() - ONE).norm() < 1e-9);
            for (a, b) in rho.eigenvalues().iter().zip(out.eigenvalues()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn partial_trace_examples() {
        let product = ket(&[0, 1]);
        let reduced = partial_trace_trailing(&product, 1, 1).unwrap();
        assert!(reduced.matrix().max_abs_diff(ket(&[0]).matrix()) < 1e-15);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell =
            DensityMatrix::from_pure(&[C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)]).unwrap();
        let reduced = partial_trace_trailing(&bell, 1, 1).unwrap();
        assert!(
            reduced
                .matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(1).matrix())
                < 1e-15
        );

        assert!(matches!(
            partial_trace_trailing(&bell, 1, 2),
            Err(QrnnError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn partial_trace_of_product_recovers_leading_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (na, nb) in [(1, 1), (2, 1), (1, 3), (3, 3)] {
            let ra = random_density(&mut rng, na);
            let rb = random_density(&mut rng, nb);
            let reduced = partial_trace_trailing(&ra.tensor(&rb), na, nb).unwrap();
            assert!(reduced.matrix().max_abs_diff(ra.matrix()) < 1e-13);
        }
    }

    #[test]
    fn partial_trace_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r1 = random_density(&mut rng, 3);
        let r2 = random_density(&mut rng, 3);
        let (a, b) = (0.3, -1.7);
        let combo = &r1.matrix().scale_real(a) + &r2.matrix().scale_real(b);
        let lhs = partial_trace_matrix(&combo, 2, 4);
        let rhs = &partial_trace_matrix(r1.matrix(), 2, 4).scale_real(a)
            + &partial_trace_matrix(r2.matrix(), 2, 4).scale_real(b);
        assert!(lhs.max_abs_diff(&rhs) < 1e-10);
        let tr = partial_trace_trailing(&r1, 2, 1).unwrap().matrix().trace();
        assert!((tr - ONE).norm() < 1e-12);
    }

    #[test]
    fn expectation_examples() {
        let z = pauli_embed(Axis::Z, 0, 1).unwrap();
        assert_eq!(expectation(&ket(&[0]), &z).unwrap(), 1.0);
        assert_eq!(
            expectation(&DensityMatrix::maximally_mixed(1), &z).unwrap(),
            0.0
        );

        let m = &(&ComplexMatrix::identity(2) + &Axis::X.pauli().scale_real(0.8))
            + &Axis::Z.pauli().scale_real(0.6);
        let rho = DensityMatrix::new(m.scale_real(0.5)).unwrap();
        assert!((expectation(&rho, &z).unwrap() - 0.6).abs() < 1e-15);

        let zz = pauli_embed(Axis::Z, 0, 2).unwrap();
        assert!(expectation(&rho, &zz).is_err());
    }

    #[test]
    fn density_matrix_rejects_invalid_input() {
        let not_unit_trace = ComplexMatrix::identity(2);
        assert!(DensityMatrix::new(not_unit_trace).is_err());
        let negative = ComplexMatrix::from_real_diagonal(&[1.5, -0.5]);
        assert!(DensityMatrix::new(negative).is_err());
        let mut non_herm = ComplexMatrix::from_real_diagonal(&[0.5, 0.5]);
        non_herm[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(non_herm).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::identity(3).scale_real(1.0 / 3.0)).is_err());
    }

    #[test]
    fn eigendecomposition_examples() {
        let (vals, vecs) = herm_eigendecompose(&pauli_embed(Axis::Z, 0, 1).unwrap());
        assert_eq!(vals.len(), 2);
        assert!((vals[0] + 1.0).abs() < 1e-15 && (vals[1] - 1.0).abs() < 1e-15);
        assert!((vecs[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!((vecs[(0, 1)].norm() - 1.0).abs() < 1e-15);

        let (vals, vecs) = herm_eigendecompose(&pauli_embed(Axis::X, 0, 1).unwrap());
        assert!((vals[0] + 1.0).abs() < 1e-15 && (vals[1] - 1.0).abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for r in 0..2 {
            for c in 0..2 {
                assert!((vecs[(r, c)].norm() - h).abs() < 1e-14);
            }
        }
        assert!(HermitianObservable::new(ComplexMatrix::from_2x2(ZERO, ONE, ZERO, ZERO)).is_err());
    }

    #[test]
    fn eigendecomposition_reconstructs_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for d in [2, 8, 64] {
            let h = HermitianObservable::new(random_hermitian(&mut rng, d)).unwrap();
            let (vals, v) = herm_eigendecompose(&h);
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            assert!(v.unitarity_error() < 1e-10);
            let rebuilt = v
                .matmul(&ComplexMatrix::from_real_diagonal(&vals))
                .matmul_adjoint(&v);
            let residual = (&rebuilt - h.matrix()).frobenius_norm() / h.matrix().frobenius_norm();
            assert!(residual < 1e-10, "d = {d}: residual {residual:e}");
        }
    }

    #[test]
    fn hamiltonian_exponential_examples() {
        let z = pauli_embed(Axis::Z, 0, 1).unwrap();
        let u = unitary_from_hamiltonian(&z, PI);
        assert!(u.max_abs_diff(&ComplexMatrix::identity(2).scale_real(-1.0)) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = HermitianObservable::new(random_hermitian(&mut rng, 8)).unwrap();
        assert!(
            unitary_from_hamiltonian(&h, 0.0).max_abs_diff(&ComplexMatrix::identity(8)) < 1e-14
        );

        let x = pauli_embed(Axis::X, 0, 1).unwrap();
        let expected = Axis::X.pauli().scale(C64::new(0.0, -1.0));
        assert!(unitary_from_hamiltonian(&x, PI / 2.0).max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn hamiltonian_exponential_group_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..4 {
            let h = HermitianObservable::new(random_hermitian(&mut rng, 16)).unwrap();
            let (s, t) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let lhs = unitary_from_hamiltonian(&h, s).matmul(&unitary_from_hamiltonian(&h, t));
            let rhs = unitary_from_hamiltonian(&h, s + t);
            assert!(lhs.max_abs_diff(&rhs) < 1e-9);
            assert!(rhs.unitarity_error() < 1e-10);
        }
    }

    #[test]
    fn rotation_gate_examples() {
        let y = rotation_gate(Axis::Y, PI);
        assert!(y[(0, 0)].norm() < 1e-16);
        assert!((y[(1, 0)] - ONE).norm() < 1e-16);
        assert_eq!(rotation_gate(Axis::X, 0.0), ComplexMatrix::identity(2));
        let z = rotation_gate(Axis::Z, PI / 2.0);
        let expected = ComplexMatrix::from_2x2(
            C64::from_polar(1.0, -PI / 4.0),
            ZERO,
            ZERO,
            C64::from_polar(1.0, PI / 4.0),
        );
        assert!(z.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn rotation_gates_match_generator_exponential() {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let p = HermitianObservable::new(axis.pauli()).unwrap();
            for angle in [-2.1, 0.3, 1.9] {
                let via_eigen = unitary_from_hamiltonian(&p, angle / 2.0);
                assert!(rotation_gate(axis, angle).max_abs_diff(&via_eigen) < 1e-14);
            }
        }
    }

    #[test]
    fn rotation_derivative_matches_central_difference() {
        let h = 1e-6;
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let fd =
                (&rotation_gate(axis, 0.4 + h) - &rotation_gate(axis, 0.4 - h)).scale_real(0.5 / h);
            assert!(rotation_gate_derivative(axis, 0.4).max_abs_diff(&fd) < 1e-9);
        }
    }

    #[test]
    fn pauli_embed_examples() {
        let z = Axis::Z.pauli();
        let x = Axis::X.pauli();
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(pauli_embed(Axis::Z, 0, 1).unwrap().matrix(), &z);
        assert_eq!(pauli_embed(Axis::Z, 0, 2).unwrap().matrix(), &kron(&z, &i2));
        assert_eq!(pauli_embed(Axis::X, 1, 2).unwrap().matrix(), &kron(&i2, &x));
        assert_eq!(
            pauli_embed(Axis::X, 2, 2),
            Err(QrnnError::QubitIndex { index: 2, n: 2 })
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rotation_inverse_is_negated_angle(angle in -10.0f64..10.0, which in 0usize..3) {
                let axis = [Axis::X, Axis::Y, Axis::Z][which];
                let prod = rotation_gate(axis, angle).matmul(&rotation_gate(axis, -angle));
                prop_assert!(prod.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
            }

            #[test]
            fn partial_trace_preserves_trace(seed in 0u64..1000, na in 1usize..3, nb in 1usize..3) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let rho = random_density(&mut rng, na + nb);
                let reduced = partial_trace_trailing(&rho, na, nb).unwrap();
                prop_assert!((reduced.matrix().trace() - ONE).norm() < 1e-12);
            }
        }
    }
}
