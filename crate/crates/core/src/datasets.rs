//! Benchmark series: a cosine wave, a triangular wave and `<X_1>` of a
//! dissipative three-spin chain.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{QrnnError, Result};
use crate::matrix::{ComplexMatrix, C64};
use crate::model::TimeSeries;
use crate::quantum::{
    check_density_invariants, herm_eigendecompose, pauli_embed, Axis, DensityMatrix,
    HermitianObservable, PSD_SLACK,
};

/// Default RK4 substeps per sample interval (`dt` about 7.8e-4). Generic
/// initial states need this many to track the exact flow to 1e-7 over the
/// full 500-sample window.
pub const DEFAULT_SUBSTEPS: usize = 256;

/// Beyond this drift a single interval is reported as a failed integration.
const DRIFT_LIMIT: f64 = 1e-6;

fn wave_time(t: usize) -> f64 {
    8.0 * t as f64 / 199.0
}

fn make_series(values: Vec<f64>, train_len: usize) -> Result<TimeSeries> {
    TimeSeries::new(values, train_len)
}

/// `x_t = cos(pi t') / 2` with `t' = 8t/199`.
pub fn gen_cosine(total_len: usize, train_len: usize) -> Result<TimeSeries> {
    let values = (0..total_len)
        .map(|t| 0.5 * (PI * wave_time(t)).cos())
        .collect();
    make_series(values, train_len)
}

/// Period-2 triangle wave: `1/2 - t'` on `[0, 1]`, `t' - 3/2` on `[1, 2]`.
pub fn triangle_wave(t_prime: f64) -> f64 {
    (t_prime.rem_euclid(2.0) - 1.0).abs() - 0.5
}

/// Triangle wave sampled at `t' = 8t/199`.
pub fn gen_triangle(total_len: usize, train_len: usize) -> Result<TimeSeries> {
    let values = (0..total_len)
        .map(|t| triangle_wave(wave_time(t)))
        .collect();
    make_series(values, train_len)
}

/// `d sigma/dt = -i[H, sigma] + sum_k (C sigma C^dag - {C^dag C, sigma}/2)`.
#[derive(Clone, Debug)]
pub struct LindbladSystem {
    hamiltonian: HermitianObservable,
    collapse_ops: Vec<ComplexMatrix>,
    n_qubits: usize,
    /// `sum_k C_k^dag C_k`
    decay: ComplexMatrix,
}

impl LindbladSystem {
    pub fn new(hamiltonian: HermitianObservable, collapse_ops: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = hamiltonian.dim();
        if !dim.is_power_of_two() {
            return Err(QrnnError::InvalidArgument(format!(
                "Hamiltonian dimension {dim} is not a power of two"
            )));
        }
        let mut decay = ComplexMatrix::zeros(dim, dim);
        for c in &collapse_ops {
            if c.rows() != dim || c.cols() != dim {
                return Err(QrnnError::DimensionMismatch {
                    expected: dim,
                    actual: c.rows(),
                });
            }
            decay = &decay + &c.adjoint().matmul(c);
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            hamiltonian,
            collapse_ops,
            decay,
        })
    }

    pub fn hamiltonian(&self) -> &HermitianObservable {
        &self.hamiltonian
    }

    pub fn collapse_ops(&self) -> &[ComplexMatrix] {
        &self.collapse_ops
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn rhs(&self, sigma: &ComplexMatrix) -> ComplexMatrix {
        let h = self.hamiltonian.matrix();
        let hs = h.matmul(sigma);
        let minus_i = C64::new(0.0, -1.0);
        // -i(H s - s H) = -i H s + (-i H s)^dag for Hermitian s
        let mut out = hs.scale(minus_i);
        out = &out + &out.adjoint();
        let half_anti = self.decay.matmul(sigma).scale_real(0.5);
        out = &(&out - &half_anti) - &half_anti.adjoint();
        for c in &self.collapse_ops {
            out = &out + &c.matmul(sigma).matmul_adjoint(c);
        }
        out
    }

    /// The generator as a matrix on row-major `vec(sigma)`; valid for any `sigma`.
    fn superoperator(&self) -> ComplexMatrix {
        let d = self.hamiltonian.dim();
        let h = self.hamiltonian.matrix();
        let minus_i = C64::new(0.0, -1.0);
        let mut l = ComplexMatrix::zeros(d * d, d * d);
        for j in 0..d * d {
            let mut e = ComplexMatrix::zeros(d, d);
            e[(j / d, j % d)] = C64::new(1.0, 0.0);
            let commutator = &h.matmul(&e) - &e.matmul(h);
            let anti = &self.decay.matmul(&e) + &e.matmul(&self.decay);
            let mut out = &commutator.scale(minus_i) - &anti.scale_real(0.5);
            for c in &self.collapse_ops {
                out = &out + &c.matmul(&e).matmul_adjoint(c);
            }
            for (i, v) in out.data().iter().enumerate() {
                l[(i, j)] = *v;
            }
        }
        l
    }
}

/// The generator applied to `sigma`. Hermitian and trace-zero.
pub fn lindblad_rhs(sigma: &DensityMatrix, system: &LindbladSystem) -> Result<ComplexMatrix> {
    if sigma.dim() != system.hamiltonian.dim() {
        return Err(QrnnError::DimensionMismatch {
            expected: system.hamiltonian.dim(),
            actual: sigma.dim(),
        });
    }
    Ok(system.rhs(sigma.matrix()))
}

/// Sampled states plus the worst drift seen before each correction.
#[derive(Clone, Debug)]
pub struct LindbladTrajectory {
    pub states: Vec<DensityMatrix>,
    /// Largest `|tr sigma - 1|` at a sample before renormalization.
    pub max_trace_drift: f64,
    /// Largest `max |sigma - sigma^dag|` at a sample before symmetrization.
    pub max_hermiticity_drift: f64,
    /// Largest negative eigenvalue magnitude clipped at a sample.
    pub max_clipped_negativity: f64,
}

/// Clips eigenvalues in `[-DRIFT_LIMIT, -PSD_SLACK)` to zero and renormalizes.
/// Returns the clipped magnitude; anything more negative is left for the
/// invariant check to reject.
fn clip_negativity(m: &mut ComplexMatrix) -> Result<f64> {
    let (values, vectors) = herm_eigendecompose(&HermitianObservable::new(m.clone())?);
    let min = values[0];
    if !(-DRIFT_LIMIT..-PSD_SLACK).contains(&min) {
        return Ok(0.0);
    }
    let mut scaled = vectors.clone();
    let n = vectors.rows();
    for (c, &v) in values.iter().enumerate() {
        for r in 0..n {
            scaled[(r, c)] *= v.max(0.0);
        }
    }
    let clipped = scaled.matmul_adjoint(&vectors).hermitian_part();
    let trace = clipped.trace().re;
    *m = clipped.scale_real(1.0 / trace);
    Ok(-min)
}

/// `sum_{k<=4} (hL)^k / k!`, the exact one-step map of classical RK4 on the
/// linear system `d vec(sigma) / dt = L vec(sigma)`.
fn rk4_step_map(generator: &ComplexMatrix, h: f64) -> ComplexMatrix {
    let id = ComplexMatrix::identity(generator.rows());
    let a = generator.scale_real(h);
    let mut t = &id + &a.scale_real(0.25);
    for k in [3.0, 2.0, 1.0] {
        t = &id + &a.matmul(&t).scale_real(1.0 / k);
    }
    t
}

/// `m^n` by repeated squaring.
fn matrix_power(m: &ComplexMatrix, mut n: usize) -> ComplexMatrix {
    let mut result = ComplexMatrix::identity(m.rows());
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = result.matmul(&base);
        }
        n >>= 1;
        if n > 0 {
            base = base.matmul(&base);
        }
    }
    result
}

/// Classical RK4 with `substeps` uniform steps per sample interval. The first
/// returned state is `sigma0` at `sample_times[0] = 0`.
///
/// The generator is linear and time independent, so the RK4 map over one
/// interval is a fixed matrix on `vec(sigma)`. It is built once per distinct
/// interval length.
pub fn integrate_lindblad_rk4(
    system: &LindbladSystem,
    sigma0: &DensityMatrix,
    sample_times: &[f64],
    substeps: usize,
) -> Result<LindbladTrajectory> {
    if substeps == 0 {
        return Err(QrnnError::InvalidArgument(
            "substeps must be at least 1".into(),
        ));
    }
    if sigma0.dim() != system.hamiltonian.dim() {
        return Err(QrnnError::DimensionMismatch {
            expected: system.hamiltonian.dim(),
            actual: sigma0.dim(),
        });
    }
    match sample_times.first() {
        Some(&0.0) => {}
        _ => {
            return Err(QrnnError::InvalidArgument(
                "sample times must start at 0".into(),
            ))
        }
    }
    if sample_times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(QrnnError::InvalidArgument(
            "sample times must be strictly increasing".into(),
        ));
    }

    let dim = sigma0.dim();
    let generator = system.superoperator();
    let mut interval_maps: HashMap<u64, ComplexMatrix> = HashMap::new();
    let mut states = vec![sigma0.clone()];
    let mut current = sigma0.matrix().clone();
    let (mut max_trace_drift, mut max_hermiticity_drift) = (0.0f64, 0.0f64);
    let mut max_clipped_negativity = 0.0f64;
    for w in sample_times.windows(2) {
        let dt = (w[1] - w[0]) / substeps as f64;
        let map = interval_maps
            .entry(dt.to_bits())
            .or_insert_with(|| matrix_power(&rk4_step_map(&generator, dt), substeps));
        let next = map.matmul(&ComplexMatrix::column(current.data()));
        current = ComplexMatrix::from_row_major(dim, dim, next.data().to_vec())?;
        let herm = current.hermiticity_error();
        let trace = current.trace();
        let drift = (trace - C64::new(1.0, 0.0)).norm();
        max_trace_drift = max_trace_drift.max(drift);
        max_hermiticity_drift = max_hermiticity_drift.max(herm);
        if !current.is_finite() || drift > DRIFT_LIMIT || herm > DRIFT_LIMIT {
            return Err(QrnnError::Integration {
                time: w[1],
                reason: format!(
                    "trace drift {drift:.3e}, hermiticity drift {herm:.3e}; increase substeps"
                ),
            });
        }
        current = current.hermitian_part();
        // leave states that are already normalized to rounding untouched
        if drift > 8.0 * f64::EPSILON {
            current = current.scale_real(1.0 / trace.re);
        }
        max_clipped_negativity = max_clipped_negativity.max(clip_negativity(&mut current)?);
        if let Err(e) = check_density_invariants(&current) {
            return Err(QrnnError::Integration {
                time: w[1],
                reason: format!("{e}; increase substeps"),
            });
        }
        states.push(DensityMatrix::new(current.clone())?);
    }
    Ok(LindbladTrajectory {
        states,
        max_trace_drift,
        max_hermiticity_drift,
        max_clipped_negativity,
    })
}

/// Constants of the three-spin chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinChainConfig {
    pub field: f64,
    pub coupling: f64,
    /// Collapse strength `c` in `C_i = c (X_i + Y_i)`.
    pub c_lindblad: f64,
}

impl Default for SpinChainConfig {
    fn default() -> Self {
        Self {
            field: 2.0 * PI,
            coupling: 0.1 * PI,
            c_lindblad: 0.002f64.sqrt(),
        }
    }
}

/// `H = -1/2 sum_i h Z_i - 1/2 sum_i J (X_i X_{i+1} + Y_i Y_{i+1} + Z_i Z_{i+1})`
/// on three spins with `C_i = c (X_i + Y_i)`. Spin 1 is register position 0.
pub fn spin_chain_system(config: &SpinChainConfig) -> Result<LindbladSystem> {
    const N: usize = 3;
    let p = |axis, q| pauli_embed(axis, q, N).map(HermitianObservable::into_matrix);
    let mut h = ComplexMatrix::zeros(1 << N, 1 << N);
    for q in 0..N {
        h = &h - &p(Axis::Z, q)?.scale_real(0.5 * config.field);
    }
    for q in 0..N - 1 {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let pair = p(axis, q)?.matmul(&p(axis, q + 1)?);
            h = &h - &pair.scale_real(0.5 * config.coupling);
        }
    }
    let collapse = (0..N)
        .map(|q| Ok((&p(Axis::X, q)? + &p(Axis::Y, q)?).scale_real(config.c_lindblad)))
        .collect::<Result<Vec<_>>>()?;
    LindbladSystem::new(HermitianObservable::new(h)?, collapse)
}

/// Sample times `t' = 100 t / 499`.
pub fn spin_sample_times(total_len: usize) -> Vec<f64> {
    (0..total_len).map(|t| 100.0 * t as f64 / 499.0).collect()
}

/// `<X_1>` along an integrated trajectory.
pub fn x1_expectations(trajectory: &LindbladTrajectory) -> Result<Vec<f64>> {
    let x1 = pauli_embed(Axis::X, 0, 3)?;
    trajectory
        .states
        .iter()
        .map(|s| crate::quantum::expectation(s, &x1))
        .collect()
}

/// `<X_1(t')>` of the default chain from `|000>`.
///
/// Every term of the chain Hamiltonian and every collapse operator preserves
/// the parity of the excitation number, and `X_1` changes it. From `|000>` the
/// series is therefore identically zero; other initial states are available
/// through [`spin_series_from`].
pub fn gen_spin_series(total_len: usize, train_len: usize) -> Result<TimeSeries> {
    let system = spin_chain_system(&SpinChainConfig::default())?;
    spin_series_from(
        &system,
        &DensityMatrix::zero_state(3),
        total_len,
        train_len,
        DEFAULT_SUBSTEPS,
    )
}

/// `<X_1(t')>` sampled at `t' = 100t/499` from an arbitrary three-spin state.
pub fn spin_series_from(
    system: &LindbladSystem,
    initial: &DensityMatrix,
    total_len: usize,
    train_len: usize,
    substeps: usize,
) -> Result<TimeSeries> {
    let trajectory =
        integrate_lindblad_rk4(system, initial, &spin_sample_times(total_len), substeps)?;
    let values = x1_expectations(&trajectory)?
        .into_iter()
        .map(|v| v.clamp(-1.0, 1.0))
        .collect();
    make_series(values, train_len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::tests::{random_density, random_hermitian};
    use crate::quantum::unitary_from_hamiltonian;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn system_without_collapse() -> LindbladSystem {
        spin_chain_system(&SpinChainConfig {
            c_lindblad: 0.0,
            ..SpinChainConfig::default()
        })
        .unwrap()
    }

    fn generic_state() -> DensityMatrix {
        random_density(&mut ChaCha8Rng::seed_from_u64(44), 3)
    }

    #[test]
    fn cosine_examples() {
        let s = gen_cosine(200, 100).unwrap();
        assert_eq!(s.values()[0], 0.5);
        assert!((s.values()[199] - 0.5).abs() < 1e-14);
        assert!(s.values().iter().all(|v| v.abs() <= 0.5));
        assert_eq!(s.train_len(), 100);
    }

    #[test]
    fn triangle_examples() {
        for (t, want) in [
            (0.0, 0.5),
            (1.0, -0.5),
            (2.0, 0.5),
            (0.5, 0.0),
            (5.5, 0.0),
            (3.25, -0.25),
        ] {
            assert!((triangle_wave(t) - want).abs() < 1e-15, "t' = {t}");
        }
        // the four stated pieces on [0, 4]
        let pieces: [(f64, f64, f64, f64); 4] = [
            (0.0, 1.0, -1.0, 0.5),
            (1.0, 2.0, 1.0, -1.5),
            (2.0, 3.0, -1.0, 2.5),
            (3.0, 4.0, 1.0, -3.5),
        ];
        for (lo, hi, slope, offset) in pieces {
            for k in 0..=10 {
                let t = lo + (hi - lo) * k as f64 / 10.0;
                assert!((triangle_wave(t) - (slope * t + offset)).abs() < 1e-14);
            }
        }
        let s = gen_triangle(200, 100).unwrap();
        assert!(s.values().iter().all(|v| v.abs() <= 0.5));
        assert_eq!(s.values()[0], 0.5);
    }

    #[test]
    fn rhs_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = HermitianObservable::new(random_hermitian(&mut rng, 8)).unwrap();
        let sys = LindbladSystem::new(h, vec![]).unwrap();
        let out = lindblad_rhs(&DensityMatrix::maximally_mixed(3), &sys).unwrap();
        assert!(out.frobenius_norm() < 1e-14);

        // amplitude damping on one qubit
        let gamma: f64 = 0.3;
        let lower = ComplexMatrix::from_2x2(
            C64::new(0.0, 0.0),
            C64::new(gamma.sqrt(), 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        );
        let zero_h = HermitianObservable::new(ComplexMatrix::zeros(2, 2)).unwrap();
        let sys = LindbladSystem::new(zero_h, vec![lower]).unwrap();
        let one = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.0, 1.0])).unwrap();
        let out = lindblad_rhs(&one, &sys).unwrap();
        let want = ComplexMatrix::from_real_diagonal(&[gamma, -gamma]);
        assert!(out.max_abs_diff(&want) < 1e-15);

        assert!(lindblad_rhs(&DensityMatrix::zero_state(2), &sys).is_err());
    }

    #[test]
    fn collapse_ops_are_hermitian_with_scalar_decay() {
        let sys = spin_chain_system(&SpinChainConfig::default()).unwrap();
        assert_eq!(sys.collapse_ops().len(), 3);
        assert_eq!(sys.n_qubits(), 3);
        let c2 = 0.002;
        for c in sys.collapse_ops() {
            assert!(c.hermiticity_error() < 1e-15);
            let want = ComplexMatrix::identity(8).scale_real(2.0 * c2);
            assert!(c.adjoint().matmul(c).max_abs_diff(&want) < 1e-15);
        }
    }

    #[test]
    fn zero_generator_keeps_state() {
        let zero_h = HermitianObservable::new(ComplexMatrix::zeros(8, 8)).unwrap();
        let sys = LindbladSystem::new(zero_h, vec![]).unwrap();
        let rho = generic_state();
        let traj = integrate_lindblad_rk4(&sys, &rho, &[0.0, 0.5, 1.0, 3.0], 4).unwrap();
        for s in &traj.states {
            assert_eq!(s.matrix(), rho.matrix());
        }
    }

    fn direct_rk4(
        system: &LindbladSystem,
        s0: &ComplexMatrix,
        times: &[f64],
        n: usize,
    ) -> Vec<ComplexMatrix> {
        let mut s = s0.clone();
        let mut out = vec![s.clone()];
        for w in times.windows(2) {
            let dt = (w[1] - w[0]) / n as f64;
            for _ in 0..n {
                let k1 = system.rhs(&s);
                let k2 = system.rhs(&(&s + &k1.scale_real(dt / 2.0)));
                let k3 = system.rhs(&(&s + &k2.scale_real(dt / 2.0)));
                let k4 = system.rhs(&(&s + &k3.scale_real(dt)));
                let incr = &(&k1 + &k2.scale_real(2.0)) + &(&k3.scale_real(2.0) + &k4);
                s = &s + &incr.scale_real(dt / 6.0);
            }
            out.push(s.clone());
        }
        out
    }

    #[test]
    fn superoperator_matches_rhs() {
        let system = spin_chain_system(&SpinChainConfig::default()).unwrap();
        let l = system.superoperator();
        let rho = generic_state();
        let v = l.matmul(&ComplexMatrix::column(rho.matrix().data()));
        let direct = system.rhs(rho.matrix());
        for (a, b) in v.data().iter().zip(direct.data()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn interval_map_matches_stepwise_rk4() {
        let system = spin_chain_system(&SpinChainConfig {
            c_lindblad: 0.3,
            ..SpinChainConfig::default()
        })
        .unwrap();
        let rho = generic_state();
        let times = [0.0, 0.13, 0.4, 0.41, 1.0];
        let traj = integrate_lindblad_rk4(&system, &rho, &times, 37).unwrap();
        let direct = direct_rk4(&system, rho.matrix(), &times, 37);
        for (a, b) in traj.states.iter().zip(&direct) {
            assert!(a.matrix().max_abs_diff(b) < 1e-12);
        }
    }

    #[test]
    fn pure_states_stay_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let amps: Vec<C64> = (0..8)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let amps: Vec<C64> = amps.iter().map(|a| a / norm).collect();
        let rho = DensityMatrix::from_pure(&amps).unwrap();
        let sys = system_without_collapse();
        let times = spin_sample_times(500);
        let traj = integrate_lindblad_rk4(&sys, &rho, &times, DEFAULT_SUBSTEPS).unwrap();
        assert!(traj.max_clipped_negativity < 1e-7);
        for (t, s) in times.iter().zip(&traj.states) {
            let u = unitary_from_hamiltonian(sys.hamiltonian(), *t);
            let exact = u.matmul(rho.matrix()).matmul_adjoint(&u);
            assert!(exact.max_abs_diff(s.matrix()) < 1e-6, "t' = {t}");
        }
    }

    #[test]
    fn clipping_removes_small_negative_eigenvalues() {
        let mut m = ComplexMatrix::from_real_diagonal(&[1.0 + 1e-8, -1e-8]);
        assert_eq!(clip_negativity(&mut m).unwrap(), 1e-8);
        assert_eq!(m, ComplexMatrix::from_real_diagonal(&[1.0, 0.0]));

        let mut big = ComplexMatrix::from_real_diagonal(&[1.1, -0.1]);
        assert_eq!(clip_negativity(&mut big).unwrap(), 0.0);
        assert!(check_density_invariants(&big).is_err());
    }

    #[test]
    fn unitary_limit_matches_eigen_exponential() {
        let sys = system_without_collapse();
        let rho = generic_state();
        let times = spin_sample_times(500);
        let traj = integrate_lindblad_rk4(&sys, &rho, &times, DEFAULT_SUBSTEPS).unwrap();
        for (t, s) in times.iter().zip(&traj.states) {
            let u = unitary_from_hamiltonian(sys.hamiltonian(), *t);
            let exact = u.matmul(rho.matrix()).matmul_adjoint(&u);
            assert!(exact.max_abs_diff(s.matrix()) < 1e-6, "t' = {t}");
        }
    }

    #[test]
    fn halving_the_step_barely_moves_samples() {
        let sys = spin_chain_system(&SpinChainConfig::default()).unwrap();
        let rho = generic_state();
        let times = spin_sample_times(500);
        let a = integrate_lindblad_rk4(&sys, &rho, &times, DEFAULT_SUBSTEPS).unwrap();
        let b = integrate_lindblad_rk4(&sys, &rho, &times, 2 * DEFAULT_SUBSTEPS).unwrap();
        let (xa, xb) = (x1_expectations(&a).unwrap(), x1_expectations(&b).unwrap());
        for (p, q) in xa.iter().zip(&xb) {
            assert!((p - q).abs() < 1e-7);
        }
        assert!(a.max_trace_drift < 1e-8);
        assert!(a.max_hermiticity_drift < 1e-9);
    }

    #[test]
    fn default_spin_series_vanishes_by_parity() {
        let s = gen_spin_series(500, 200).unwrap();
        assert_eq!(s.len(), 500);
        assert_eq!(s.train_len(), 200);
        assert_eq!(s.values()[0], 0.0);
        assert!(s.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn dissipation_shrinks_the_envelope() {
        let sys = spin_chain_system(&SpinChainConfig::default()).unwrap();
        let series = spin_series_from(&sys, &generic_state(), 500, 200, DEFAULT_SUBSTEPS).unwrap();
        let v = series.values();
        let peak = |w: &[f64]| w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(peak(&v[450..]) < peak(&v[..50]));
        assert!(v.iter().all(|x| x.abs() <= 1.0));

        let doubled =
            spin_series_from(&sys, &generic_state(), 500, 200, 2 * DEFAULT_SUBSTEPS).unwrap();
        assert!(peak(&doubled.values()[450..]) < peak(&doubled.values()[..50]));
    }

    #[test]
    fn rejects_bad_sample_grids() {
        let sys = system_without_collapse();
        let rho = DensityMatrix::zero_state(3);
        assert!(integrate_lindblad_rk4(&sys, &rho, &[0.1, 0.2], 4).is_err());
        assert!(integrate_lindblad_rk4(&sys, &rho, &[0.0, 0.2, 0.2], 4).is_err());
        assert!(integrate_lindblad_rk4(&sys, &rho, &[0.0, 0.2], 0).is_err());
        assert!(
            integrate_lindblad_rk4(&sys, &DensityMatrix::zero_state(2), &[0.0, 0.2], 4).is_err()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn rhs_is_hermitian_and_traceless(seed in any::<u64>()) {
            let sys = spin_chain_system(&SpinChainConfig::default()).unwrap();
            let rho = random_density(&mut ChaCha8Rng::seed_from_u64(seed), 3);
            let out = lindblad_rhs(&rho, &sys).unwrap();
            prop_assert!(out.hermiticity_error() < 1e-12);
            prop_assert!(out.trace().norm() < 1e-12);
        }

        #[test]
        fn generated_waves_fit_the_encoder(len in 2usize..400, frac in 0.0f64..1.0) {
            let train = 2 + ((len - 2) as f64 * frac) as usize;
            for s in [gen_cosine(len, train).unwrap(), gen_triangle(len, train).unwrap()] {
                prop_assert!(s.values().iter().all(|v| v.abs() <= 1.0));
            }
        }
    }
}
