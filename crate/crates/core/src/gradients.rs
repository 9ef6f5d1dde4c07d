//! Gradients of the teacher-forced training cost
//! `L = 1/2 sum_t (y_bar_t - target_t)^2`.
//!
//! Three evaluators share one layout (angles then `c_out`):
//!
//! * [`grad_forward_sensitivity`] propagates `sigma_i = d rho_A / d theta_i`
//!   alongside the memory state. Exact, and the one used for training.
//! * [`grad_parameter_shift`] unrolls the recurrence: each angle occurs once
//!   per time step, and every occurrence is shifted by `±pi/2` on its own.
//! * [`grad_finite_difference`] is a central-difference check.
//!
//! With `T = targets.len()` cost terms the model is run on `inputs[..T]`; the
//! trailing input only supplies the last target.

use rayon::prelude::*;

use crate::error::{QrnnError, Result};
use crate::matrix::{ComplexMatrix, C64};
use crate::model::{
    angle_site, build_interaction_unitary, evolution_unitary_with, input_amplitudes,
    single_qubit_unit_derivative, step_with_unitary, trace_out_b, z_profile, AngleSite,
    QrnnArchitecture, QrnnParameters, QrnnState, RotationSlot,
};
use crate::quantum::DensityMatrix;
use crate::training::cost_half_sse;

/// Parameter-shift offset for gates `exp(-i theta P / 2)`.
pub const SHIFT: f64 = std::f64::consts::FRAC_PI_2;

/// `dL/dtheta_i` in the flattened parameter layout.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
            return Err(QrnnError::InvalidArgument(format!(
                "gradient entry {pos} is not finite"
            )));
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn angles(&self) -> &[f64] {
        &self.0[..self.0.len() - 1]
    }

    pub fn c_out(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

/// Checks the shared preconditions and returns the number of cost terms.
fn validate(
    arch: &QrnnArchitecture,
    params: &QrnnParameters,
    inputs: &[f64],
    targets: &[f64],
) -> Result<usize> {
    if params.angles().len() != arch.n_angles() {
        return Err(QrnnError::ParameterLength {
            expected: arch.n_params(),
            actual: params.len(),
        });
    }
    if targets.len() + 1 != inputs.len() {
        return Err(QrnnError::DimensionMismatch {
            expected: inputs.len().saturating_sub(1),
            actual: targets.len(),
        });
    }
    if let Some(&v) = inputs.iter().find(|v| !(v.abs() <= 1.0)) {
        return Err(QrnnError::Domain { value: v });
    }
    Ok(targets.len())
}

/// The circuit unitary and its derivative with respect to every angle.
pub struct CircuitDerivatives {
    arch: QrnnArchitecture,
    c_out: f64,
    params: QrnnParameters,
    unitary: ComplexMatrix,
    /// `prefix[d] = L_d ... L_1`
    prefix: Vec<ComplexMatrix>,
    /// `tail[d] = L_D ... L_{d+2} E`, the factor left of `R_{d+1}`
    tail: Vec<ComplexMatrix>,
    unitary_blocks: Vec<ComplexMatrix>,
    d_blocks: Vec<Vec<ComplexMatrix>>,
}

/// The input amplitude of B-basis state `b` is `c^(n_B - k) s^k` with
/// `k = popcount(b)`, so `U (I ⊗ psi) = sum_k c^(n_B - k) s^k G_k` where
/// `G_k` sums the columns `(a, b)` of `U` with `popcount(b) = k`.
fn weight_blocks(u: &ComplexMatrix, n_b: usize) -> Vec<ComplexMatrix> {
    let dim_b = 1 << n_b;
    let dim_a = u.cols() / dim_b;
    let mut blocks = vec![ComplexMatrix::zeros(u.rows(), dim_a); n_b + 1];
    for r in 0..u.rows() {
        for a in 0..dim_a {
            for b in 0..dim_b {
                blocks[b.count_ones() as usize][(r, a)] += u[(r, a * dim_b + b)];
            }
        }
    }
    blocks
}

fn combine_blocks(blocks: &[ComplexMatrix], monomials: &[f64]) -> ComplexMatrix {
    let mut out = blocks[0].scale_real(monomials[0]);
    for (block, &m) in blocks.iter().zip(monomials).skip(1) {
        for (o, v) in out.data_mut().iter_mut().zip(block.data()) {
            *o += v * m;
        }
    }
    out
}

/// `sigma -> Tr_B[W sigma W^dag]` as a matrix on row-major `vec(sigma)`.
fn channel_superoperator(w: &ComplexMatrix, dim_b: usize) -> ComplexMatrix {
    let dim_a = w.cols();
    let d2 = dim_a * dim_a;
    let mut phi = ComplexMatrix::zeros(d2, d2);
    for a1 in 0..dim_a {
        for a2 in 0..dim_a {
            for b in 0..dim_b {
                let (r1, r2) = (a1 * dim_b + b, a2 * dim_b + b);
                for c1 in 0..dim_a {
                    let left = w[(r1, c1)];
                    for c2 in 0..dim_a {
                        phi[(a1 * dim_a + a2, c1 * dim_a + c2)] += left * w[(r2, c2)].conj();
                    }
                }
            }
        }
    }
    phi
}

/// `Tr_B[X Y]` for `X` of shape `(d_A d_B) × d_A`, given `Y^T`.
fn trace_out_b_product(x: &[C64], y_t: &[C64], dim_a: usize, dim_b: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); dim_a * dim_a];
    for a1 in 0..dim_a {
        for a2 in 0..dim_a {
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..dim_b {
                let r1 = (a1 * dim_b + b) * dim_a;
                let r2 = (a2 * dim_b + b) * dim_a;
                for (u, v) in x[r1..r1 + dim_a].iter().zip(&y_t[r2..r2 + dim_a]) {
                    acc += u * v;
                }
            }
            out[a1 * dim_a + a2] = acc;
        }
    }
    out
}

/// `n_B - 2 popcount(b)`: the sum of the B-qubit Z eigenvalues on row `(a, b)`.
fn z_weights(n_b: usize) -> Vec<f64> {
    (0..1usize << n_b)
        .map(|b| n_b as f64 - 2.0 * b.count_ones() as f64)
        .collect()
}

impl CircuitDerivatives {
    pub fn new(
        arch: &QrnnArchitecture,
        params: &QrnnParameters,
        interaction: &ComplexMatrix,
    ) -> Result<Self> {
        let unitary = evolution_unitary_with(arch, params, interaction)?;
        let n = arch.n_qubits();
        let dim = 1 << n;
        let depth = arch.depth();

        // prefix[d] = L_d ... L_1 with L = E R; prefix[0] = I
        let mut prefix = vec![ComplexMatrix::identity(dim)];
        for layer in 0..depth {
            let mut next = prefix[layer].clone();
            crate::model::apply_rotation_layer(&mut next, arch, params, layer);
            prefix.push(interaction.matmul(&next));
        }
        // tail[d] = L_D ... L_{d+2} E, the factor left of R_{d+1} (0-based d)
        let mut tail = vec![interaction.clone(); depth];
        for layer in (0..depth.saturating_sub(1)).rev() {
            let mut m = tail[layer + 1].clone();
            for q in 0..n {
                m.apply_1q_right(&params.u1(arch, layer + 1, q), q, n);
            }
            tail[layer] = m.matmul(interaction);
        }

        let n_b = arch.n_b();
        let mut circuit = Self {
            arch: arch.clone(),
            c_out: params.c_out(),
            params: params.clone(),
            unitary_blocks: weight_blocks(&unitary, n_b),
            unitary,
            prefix,
            tail,
            d_blocks: Vec::new(),
        };
        // blocks of tail * M are tail * (blocks of M)
        circuit.d_blocks = (0..arch.n_angles())
            .into_par_iter()
            .map(|i| {
                let layer = angle_site(arch, i).layer;
                weight_blocks(&circuit.gated_prefix(i), n_b)
                    .iter()
                    .map(|b| circuit.tail[layer].matmul(b))
                    .collect()
            })
            .collect();
        Ok(circuit)
    }

    /// `R_{d+1}` with angle `i` differentiated, times `prefix[d]`.
    fn gated_prefix(&self, i: usize) -> ComplexMatrix {
        let (arch, params) = (&self.arch, &self.params);
        let n = arch.n_qubits();
        let AngleSite { layer, qubit, slot } = angle_site(arch, i);
        let mut m = self.prefix[layer].clone();
        for q in 0..n {
            let gate = if q == qubit {
                let angle = |s| {
                    params.angle(
                        arch,
                        AngleSite {
                            layer,
                            qubit,
                            slot: s,
                        },
                    )
                };
                single_qubit_unit_derivative(
                    angle(RotationSlot::Alpha),
                    angle(RotationSlot::Beta),
                    angle(RotationSlot::Gamma),
                    slot,
                )
            } else {
                params.u1(arch, layer, q)
            };
            m.apply_1q_left(&gate, q, n);
        }
        m
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    /// `dU / d theta_i` for angle index `i`.
    pub fn d_unitary(&self, i: usize) -> ComplexMatrix {
        self.tail[angle_site(&self.arch, i).layer].matmul(&self.gated_prefix(i))
    }
}

/// Memory state plus `sigma_i = d rho_A / d theta_i` for every angle.
#[derive(Clone, Debug)]
pub struct SensitivityState {
    rho_a: DensityMatrix,
    sigmas: Vec<ComplexMatrix>,
}

/// Output of one sensitivity step: `y_bar`, its angle derivatives and the
/// mean Z value that `c_out` multiplies.
#[derive(Clone, Debug)]
pub struct SensitivityStep {
    pub y_bar: f64,
    pub mean_z: f64,
    pub dy_dangles: Vec<f64>,
}

impl SensitivityState {
    pub fn initial(arch: &QrnnArchitecture) -> Self {
        let d = 1 << arch.n_a();
        Self {
            rho_a: DensityMatrix::zero_state(arch.n_a()),
            sigmas: vec![ComplexMatrix::zeros(d, d); arch.n_angles()],
        }
    }

    pub fn rho_a(&self) -> &DensityMatrix {
        &self.rho_a
    }

    pub fn sigmas(&self) -> &[ComplexMatrix] {
        &self.sigmas
    }

    /// Advances by one input. With `W = U (I ⊗ psi)`, `dW_i = dU_i (I ⊗ psi)`
    /// and `N_i = dW_i rho + W sigma_i / 2`,
    /// `sigma_i' = Tr_B[N_i W^dag] + h.c.` and `dz_q = 2 Re <N_i W^dag>_{Z_q}`.
    ///
    /// The `W sigma_i W^dag` part is the same channel for every angle and is
    /// applied as one superoperator; its Z readout is `Re Tr[sigma_i Omega]`.
    pub fn advance(
        &self,
        circuit: &CircuitDerivatives,
        x: f64,
    ) -> Result<(SensitivityState, SensitivityStep)> {
        let arch = &circuit.arch;
        let (dim_a, dim_b, n_b) = (1 << arch.n_a(), 1 << arch.n_b(), arch.n_b());
        let psi = input_amplitudes(x, n_b)?;
        let monomials: Vec<f64> = (0..=n_b).map(|k| psi[(1 << k) - 1]).collect();
        let w = combine_blocks(&circuit.unitary_blocks, &monomials);
        let rho = self.rho_a.matrix();
        let m = w.matmul(rho);
        let z = z_profile(&m, &w, n_b);
        let mean_z = z.iter().sum::<f64>() / n_b as f64;
        let rho_next = trace_out_b(&m, &w, dim_b).hermitian_part();

        // (rho W^dag)^T = conj(W) rho^T, laid out like W
        let y_t = ComplexMatrix::from_fn(w.rows(), dim_a, |r, c| {
            (0..dim_a).map(|k| w[(r, k)].conj() * rho[(c, k)]).sum()
        });
        let channel = channel_superoperator(&w, dim_b);
        let weights = z_weights(n_b);
        // omega_t[(c1, c2)] = sum_r weight(r) W[r, c1] conj(W[r, c2]), so that
        // Re Tr[sigma Omega] = Re sum sigma .* omega_t
        let mut omega_t = ComplexMatrix::zeros(dim_a, dim_a);
        for r in 0..w.rows() {
            let wt = weights[r % dim_b];
            for c1 in 0..dim_a {
                for c2 in 0..dim_a {
                    omega_t[(c1, c2)] += w[(r, c1)] * w[(r, c2)].conj() * wt;
                }
            }
        }
        let d2 = dim_a * dim_a;

        let (sigmas, dy_dangles): (Vec<ComplexMatrix>, Vec<f64>) = self
            .sigmas
            .par_iter()
            .zip(&circuit.d_blocks)
            .map(|(sigma, blocks)| {
                let dw = combine_blocks(blocks, &monomials);
                let (dw, sd) = (dw.data(), sigma.data());
                let source = trace_out_b_product(dw, y_t.data(), dim_a, dim_b);
                let mapped: Vec<C64> = channel
                    .data()
                    .chunks_exact(d2)
                    .map(|row| row.iter().zip(sd).map(|(p, v)| p * v).sum())
                    .collect();
                let mut next = vec![C64::new(0.0, 0.0); d2];
                for i in 0..dim_a {
                    for j in 0..dim_a {
                        let (ij, ji) = (i * dim_a + j, j * dim_a + i);
                        next[ij] =
                            source[ij] + source[ji].conj() + (mapped[ij] + mapped[ji].conj()) * 0.5;
                    }
                }

                let mut dz = 0.0;
                for (r, (row, yrow)) in dw
                    .chunks_exact(dim_a)
                    .zip(y_t.data().chunks_exact(dim_a))
                    .enumerate()
                {
                    let diag: C64 = row.iter().zip(yrow).map(|(u, v)| u * v).sum();
                    dz += 2.0 * weights[r % dim_b] * diag.re;
                }
                dz += sd
                    .iter()
                    .zip(omega_t.data())
                    .map(|(u, v)| (u * v).re)
                    .sum::<f64>();
                let sigma_next =
                    ComplexMatrix::from_row_major(dim_a, dim_a, next).expect("d_A x d_A data");
                (sigma_next, circuit.c_out * dz / n_b as f64)
            })
            .unzip();

        #[cfg(debug_assertions)]
        for s in &sigmas {
            debug_assert!(s.hermiticity_error() < 1e-10, "sigma lost Hermiticity");
            debug_assert!(s.trace().norm() < 1e-10, "sigma lost zero trace");
        }

        Ok((
            SensitivityState {
                rho_a: DensityMatrix::from_trusted(rho_next),
                sigmas,
            },
            SensitivityStep {
                y_bar: circuit.c_out * mean_z,
                mean_z,
                dy_dangles,
            },
        ))
    }
}

/// Cost and gradient by forward sensitivity propagation, reusing a
/// precomputed interaction unitary.
pub fn cost_and_gradient_with(
    arch: &QrnnArchitecture,
    params: &QrnnParameters,
    interaction: &ComplexMatrix,
    inputs: &[f64],
    targets: &[f64],
) -> Result<(f64, GradientVector)> {
    let steps = validate(arch, params, inputs, targets)?;
    let circuit = CircuitDerivatives::new(arch, params, interaction)?;
    let mut state = SensitivityState::initial(arch);
    let mut grad = vec![0.0; arch.n_params()];
    let mut outputs = Vec::with_capacity(steps);
    for (&x, &target) in inputs[..steps].iter().zip(targets) {
        let (next, step) = state.advance(&circuit, x)?;
        let residual = step.y_bar - target;
        for (g, dy) in grad.iter_mut().zip(&step.dy_dangles) {
            *g += residual * dy;
        }
        grad[arch.n_angles()] += residual * step.mean_z;
        outputs.push(step.y_bar);
        state = next;
    }
    Ok((
        cost_half_sse(&outputs, targets)?,
        GradientVector::new(grad)?,
    ))
}

/// Exact gradient of the half-SSE cost by forward sensitivity propagation.
pub fn grad_forward_sensitivity(
    arch: &QrnnArchitecture,
    params: &QrnnParameters,
    inputs: &[f64],
    targets: &[f64],
) -> Result<GradientVector> {
    let interaction = build_interaction_unitary(arch);
    Ok(cost_and_gradient_with(arch, params, &interaction, inputs, targets)?.1)
}

/// Teacher-forced outputs on `inputs` with a fixed unitary, plus the memory
/// state before each step.
fn nominal_trajectory(
    arch: &QrnnArchitecture,
    unitary: &ComplexMatrix,
    c_out: f64,
    inputs: &[f64],
) -> Result<(Vec<f64>, Vec<QrnnState>)> {
    let mut state = QrnnState::initial(arch);
    let mut outputs = Vec::with_capacity(inputs.len());
    let mut before = Vec::with_capacity(inputs.len());
    for &x in inputs {
        before.push(state.clone());
        let out = step_with_unitary(arch, unitary, c_out, &state, x)?;
        outputs.push(out.y_bar);
        state = out.state;
    }
    Ok((outputs, before))
}

/// Result of the unrolled parameter-shift estimator.
#[derive(Clone, Debug)]
pub struct ShiftGradient {
    pub gradient: GradientVector,
    /// Shifted full-sequence evaluations over all angles.
    pub evaluation_count: usize,
}

/// `dL/dtheta_i` for one angle by the unrolled shift rule, with the number of
/// shifted sequence evaluations it took (`2T`).
pub fn parameter_shift_entry(
    arch: &QrnnArchitecture,
    params: &QrnnParameters,
    inputs: &[f64],
    targets: &[f64],
    index: usize,
) -> Result<(f64, usize)> {
    let steps = validate(arch, params, inputs, targets)?;
    if index >= arch.n_angles() {
        return Err(QrnnError::InvalidArgument(format!(
            "angle index {index} out of range (the circuit has {} angles)",
            arch.n_angles()
        )));
    }
    let interaction = build_interaction_unitary(arch);
    let nominal_u = evolution_unitary_with(arch, params, &interaction)?;
    let inputs = &inputs[..steps];
    let (nominal, before) = nominal_trajectory(arch, &nominal_u, params.c_out(), inputs)?;
    shift_entry(
        arch,
        params,
        &interaction,
        &nominal_u,
        inputs,
        targets,
        &nominal,
        &before,
        index,
    )
}

#[allow(clippy::too_many_arguments)]
fn shift_entry(
    arch: &QrnnArchitecture,
    params: &QrnnParameters,
    interaction: &ComplexMatrix,
    nominal_u: &ComplexMatrix,
    inputs: &[f64],
    targets: &[f64],
    nominal: &[f64],
    before: &[QrnnState],
    index: usize,
) -> Result<(f64, usize)> {
    let shifted = |delta: f64| -> Result<ComplexMatrix> {
        let mut angles = params.angles().to_vec();
        angles[index] += delta;
        let p = QrnnParameters::new(arch, angles, params.c_out())?;
        evolution_unitary_with(arch, &p, interaction)
    };
    let (u_plus, u_minus) = (shifted(SHIFT)?, shifted(-SHIFT)?);
    let steps = inputs.len();
    let mut dy = vec![0.0; steps];
    let mut evaluations = 0;

    // Occurrence at step s only influences outputs t >= s.
    for s in 0..steps {
        let mut run = |u: &ComplexMatrix| -> Result<Vec<f64>> {
            evaluations += 1;
            let mut state = before[s].clone();
            let mut ys = Vec::with_capacity(steps - s);
            for (t, &x) in inputs.iter().enumerate().skip(s) {
                let unitary = if t == s { u } else { nominal_u };
                let out = step_with_unitary(arch, unitary, params.c_out(), &state, x)?;
                ys.push(out.y_bar);
                state = out.state;
            }
            Ok(ys)
        };
        let plus = run(&u_plus)?;
        let minus = run(&u_minus)?;
        for (k, (p, m)) in plus.iter().zip(&minus).enumerate() {
            dy[s + k] += 0.5 * (p - m);
        }
    }
    let value = nominal
        .iter()
        .zip(targets)
        .zip(&dy)
        .map(|((y, target), d)| (y - target) * d)
        .sum();
    Ok((value, evaluations))
}

/// Gradient by the unrolled parameter-shift rule. `dL/dc_out` is analytic.
pub fn grad_parameter_shift(
    arch: &QrnnArchitecture,
    params: &QrnnParameters,
    inputs: &[f64],
    targets: &[f64],
) -> Result<ShiftGradient> {
    let steps = validate(arch, params, inputs, targets)?;
    let interaction = build_interaction_unitary(arch);
    let nominal_u = evolution_unitary_with(arch, params, &interaction)?;
    let inputs = &inputs[..steps];
    let (nominal, before) = nominal_trajectory(arch, &nominal_u, params.c_out(), inputs)?;

    let entries: Vec<(f64, usize)> = (0..arch.n_angles())
        .into_par_iter()
        .map(|i| {
            shift_entry(
                arch,
                params,
                &interaction,
                &nominal_u,
                inputs,
                targets,
                &nominal,
                &before,
                i,
            )
        })
        .collect::<Result<_>>()?;

    let mut grad: Vec<f64> = entries.iter().map(|e| e.0).collect();
    let evaluation_count = entries.iter().map(|e| e.1).sum();
    // y_bar = c_out * mean_z, so dy/dc_out = y_bar / c_out; recompute mean_z
    // directly to stay valid at c_out = 0.
    let unit = QrnnParameters::new(arch, params.angles().to_vec(), 1.0)?;
    let unit_u = evolution_unitary_with(arch, &unit, &interaction)?;
    let (mean_z, _) = nominal_trajectory(arch, &unit_u, 1.0, inputs)?;
    grad.push(
        nominal
            .iter()
            .zip(targets)
            .zip(&mean_z)
            .map(|((y, target), m)| (y - target) * m)
            .sum(),
    );
    Ok(ShiftGradient {
        gradient: GradientVector::new(grad)?,
        evaluation_count,
    })
}

/// Central differences of an arbitrary scalar function.
pub fn central_difference(
    f: impl Fn(&[f64]) -> Result<f64>,
    x: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(QrnnError::InvalidArgument(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe)?;
        probe[i] = x[i] - h;
        let down = f(&probe)?;
        probe[i] = x[i];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Teacher-forced half-SSE cost of a flattened parameter vector.
pub fn sequence_cost(
    arch: &QrnnArchitecture,
    interaction: &ComplexMatrix,
    flat: &[f64],
    inputs: &[f64],
    targets: &[f64],
) -> Result<f64> {
    let params = QrnnParameters::from_flat(arch, flat)?;
    let steps = validate(arch, &params, inputs, targets)?;
    let u = evolution_unitary_with(arch, &params, interaction)?;
    let (outputs, _) = nominal_trajectory(arch, &u, params.c_out(), &inputs[..steps])?;
    cost_half_sse(&outputs, targets)
}

/// Central-difference gradient of the half-SSE cost with step `h`.
pub fn grad_finite_difference(
    arch: &QrnnArchitecture,
    params: &QrnnParameters,
    inputs: &[f64],
    targets: &[f64],
    h: f64,
) -> Result<GradientVector> {
    validate(arch, params, inputs, targets)?;
    let interaction = build_interaction_unitary(arch);
    let grad = central_difference(
        |flat| sequence_cost(arch, &interaction, flat, inputs, targets),
        &params.to_flat(),
        h,
    )?;
    GradientVector::new(grad)
}
