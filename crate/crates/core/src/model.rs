//! The recurrent circuit: architecture, trainable parameters, and the
//! encode → evolve → measure → reset step.
//!
//! One step with input `x` does
//!
//! ```text
//! rho_in  = rho_A ⊗ |psi(x)⟩⟨psi(x)|,   |psi(x)⟩ = (R_y(arccos x)|0⟩)^{⊗ n_B}
//! rho'    = U rho_in U^dag
//! z_q     = Tr[rho' Z_q]   for every group-B qubit q
//! y_bar   = c_out * mean(z_q)
//! rho_A  <- Tr_B rho'
//! ```
//!
//! Because the group-B input is a pure product state, `U rho_in U^dag` equals
//! `W rho_A W^dag` with the `2^n × 2^{n_A}` matrix `W = U (I_A ⊗ |psi⟩)`.
//! The step works with `W` and never forms the full joint density matrix.

use crate::error::{QrnnError, Result};
use crate::matrix::{ComplexMatrix, C64, ZERO};
use crate::quantum::{
    pauli_embed, rotation_gate, rotation_gate_derivative, unitary_from_hamiltonian, Axis,
    DensityMatrix, HermitianObservable,
};

/// Static structure of the circuit and its fixed interaction Hamiltonian
/// `H = sum_j a_j X_j + sum_{j>k} J_jk Z_j Z_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct QrnnArchitecture {
    n_a: usize,
    n_b: usize,
    depth: usize,
    tau: f64,
    fields: Vec<f64>,
    couplings: Vec<f64>,
}

impl QrnnArchitecture {
    /// `couplings` lists `J_jk` for `j = 1..n`, `k = 0..j` (0-based qubits).
    pub fn new(
        n_a: usize,
        n_b: usize,
        depth: usize,
        tau: f64,
        fields: Vec<f64>,
        couplings: Vec<f64>,
    ) -> Result<Self> {
        if n_a == 0 || n_b == 0 || depth == 0 {
            return Err(QrnnError::InvalidArgument(
                "n_a, n_b and depth must all be at least 1".into(),
            ));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(QrnnError::InvalidArgument(format!(
                "evolution time must be finite and non-negative, got {tau}"
            )));
        }
        let n = n_a + n_b;
        if fields.len() != n {
            return Err(QrnnError::DimensionMismatch {
                expected: n,
                actual: fields.len(),
            });
        }
        if couplings.len() != n * (n - 1) / 2 {
            return Err(QrnnError::DimensionMismatch {
                expected: n * (n - 1) / 2,
                actual: couplings.len(),
            });
        }
        if fields.iter().chain(&couplings).any(|v| !v.is_finite()) {
            return Err(QrnnError::InvalidArgument(
                "Hamiltonian coefficients must be finite".into(),
            ));
        }
        Ok(Self {
            n_a,
            n_b,
            depth,
            tau,
            fields,
            couplings,
        })
    }

    /// Architecture with every Hamiltonian coefficient zero.
    pub fn uncoupled(n_a: usize, n_b: usize, depth: usize, tau: f64) -> Result<Self> {
        let n = n_a + n_b;
        Self::new(
            n_a,
            n_b,
            depth,
            tau,
            vec![0.0; n],
            vec![0.0; n * (n - 1) / 2],
        )
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn n_qubits(&self) -> usize {
        self.n_a + self.n_b
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Same structure and Hamiltonian with a different evolution time.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(
            self.n_a,
            self.n_b,
            self.depth,
            tau,
            self.fields.clone(),
            self.couplings.clone(),
        )
    }

    /// Position of `J_jk` (requires `j > k`) in [`Self::couplings`].
    pub fn coupling_index(j: usize, k: usize) -> usize {
        assert!(j > k, "couplings are indexed by j > k");
        j * (j - 1) / 2 + k
    }

    /// Number of rotation angles, `3 n D`.
    pub fn n_angles(&self) -> usize {
        3 * self.n_qubits() * self.depth
    }

    /// Angles plus the output scale.
    pub fn n_params(&self) -> usize {
        self.n_angles() + 1
    }

    pub(crate) fn dim_a(&self) -> usize {
        1 << self.n_a
    }

    pub(crate) fn dim_b(&self) -> usize {
        1 << self.n_b
    }
}

/// Which of the three angles in `U1(alpha, beta, gamma) = R_x(alpha) R_z(beta) R_x(gamma)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RotationSlot {
    Alpha,
    Beta,
    Gamma,
}

impl RotationSlot {
    pub const ALL: [RotationSlot; 3] =
        [RotationSlot::Alpha, RotationSlot::Beta, RotationSlot::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            RotationSlot::Alpha => "alpha",
            RotationSlot::Beta => "beta",
            RotationSlot::Gamma => "gamma",
        }
    }

    fn offset(self) -> usize {
        match self {
            RotationSlot::Alpha => 0,
            RotationSlot::Beta => 1,
            RotationSlot::Gamma => 2,
        }
    }
}

/// Location of one angle inside the circuit. `layer` is 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AngleSite {
    pub layer: usize,
    pub qubit: usize,
    pub slot: RotationSlot,
}

/// Trainable parameters. Flattened layout: layer outermost, then qubit, then
/// `(alpha, beta, gamma)`; `c_out` last.
#[derive(Clone, Debug, PartialEq)]
pub struct QrnnParameters {
    angles: Vec<f64>,
    c_out: f64,
}

impl QrnnParameters {
    /// All angles zero, `c_out = 1`.
    pub fn initial(arch: &QrnnArchitecture) -> Self {
        Self {
            angles: vec![0.0; arch.n_angles()],
            c_out: 1.0,
        }
    }

    pub fn new(arch: &QrnnArchitecture, angles: Vec<f64>, c_out: f64) -> Result<Self> {
        if angles.len() != arch.n_angles() {
            return Err(QrnnError::ParameterLength {
                expected: arch.n_angles(),
                actual: angles.len(),
            });
        }
        Ok(Self { angles, c_out })
    }

    pub fn from_flat(arch: &QrnnArchitecture, flat: &[f64]) -> Result<Self> {
        if flat.len() != arch.n_params() {
            return Err(QrnnError::ParameterLength {
                expected: arch.n_params(),
                actual: flat.len(),
            });
        }
        let (angles, c) = flat.split_at(arch.n_angles());
        Ok(Self {
            angles: angles.to_vec(),
            c_out: c[0],
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.angles.clone();
        v.push(self.c_out);
        v
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn c_out(&self) -> f64 {
        self.c_out
    }

    pub fn len(&self) -> usize {
        self.angles.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn angle(&self, arch: &QrnnArchitecture, site: AngleSite) -> f64 {
        self.angles[angle_index(arch, site)]
    }

    /// Parameter names matching the flattened layout, e.g. `beta_d2_q4` and
    /// finally `c_out`.
    pub fn names(arch: &QrnnArchitecture) -> Vec<String> {
        let mut names: Vec<String> = (0..arch.n_angles())
            .map(|i| {
                let s = angle_site(arch, i);
                format!("{}_d{}_q{}", s.slot.name(), s.layer + 1, s.qubit)
            })
            .collect();
        names.push("c_out".to_string());
        names
    }

    pub(crate) fn u1(&self, arch: &QrnnArchitecture, layer: usize, qubit: usize) -> ComplexMatrix {
        let base = angle_index(
            arch,
            AngleSite {
                layer,
                qubit,
                slot: RotationSlot::Alpha,
            },
        );
        single_qubit_unit(
            self.angles[base],
            self.angles[base + 1],
            self.angles[base + 2],
        )
    }
}

pub fn angle_index(arch: &QrnnArchitecture, site: AngleSite) -> usize {
    (site.layer * arch.n_qubits() + site.qubit) * 3 + site.slot.offset()
}

pub fn angle_site(arch: &QrnnArchitecture, index: usize) -> AngleSite {
    assert!(index < arch.n_angles());
    let n = arch.n_qubits();
    AngleSite {
        layer: index / (3 * n),
        qubit: (index / 3) % n,
        slot: RotationSlot::ALL[index % 3],
    }
}

/// `R_x(alpha) R_z(beta) R_x(gamma)` as a matrix product; `R_x(gamma)` acts first.
pub fn single_qubit_unit(alpha: f64, beta: f64, gamma: f64) -> ComplexMatrix {
    rotation_gate(Axis::X, alpha)
        .matmul(&rotation_gate(Axis::Z, beta))
        .matmul(&rotation_gate(Axis::X, gamma))
}

/// Derivative of [`single_qubit_unit`] with respect to one of its angles.
pub(crate) fn single_qubit_unit_derivative(
    alpha: f64,
    beta: f64,
    gamma: f64,
    slot: RotationSlot,
) -> ComplexMatrix {
    let (a, b, g) = match slot {
        RotationSlot::Alpha => (
            rotation_gate_derivative(Axis::X, alpha),
            rotation_gate(Axis::Z, beta),
            rotation_gate(Axis::X, gamma),
        ),
        RotationSlot::Beta => (
            rotation_gate(Axis::X, alpha),
            rotation_gate_derivative(Axis::Z, beta),
            rotation_gate(Axis::X, gamma),
        ),
        RotationSlot::Gamma => (
            rotation_gate(Axis::X, alpha),
            rotation_gate(Axis::Z, beta),
            rotation_gate_derivative(Axis::X, gamma),
        ),
    };
    a.matmul(&b).matmul(&g)
}

/// An ordered series in `[-1, 1]`; the first `train_len` values are the
/// training segment.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    train_len: usize,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, train_len: usize) -> Result<Self> {
        if let Some(&v) = values.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(QrnnError::Domain { value: v });
        }
        if train_len < 2 || train_len > values.len() {
            return Err(QrnnError::InvalidArgument(format!(
                "train_len {train_len} must lie in [2, {}]",
                values.len()
            )));
        }
        Ok(Self { values, train_len })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn train_len(&self) -> usize {
        self.train_len
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn train(&self) -> &[f64] {
        &self.values[..self.train_len]
    }

    pub fn test(&self) -> &[f64] {
        &self.values[self.train_len..]
    }

    /// Teacher-forcing inputs `x_0..x_{T-2}` and targets `x_1..x_{T-1}` of
    /// the training segment.
    pub fn training_pairs(&self) -> (&[f64], &[f64]) {
        let train = self.train();
        (&train[..train.len() - 1], &train[1..])
    }
}

fn check_input(x: f64) -> Result<()> {
    if x.abs() <= 1.0 {
        Ok(())
    } else {
        Err(QrnnError::Domain { value: x })
    }
}

/// `⊗_{q} R_y(arccos x)` on `n_b` qubits.
pub fn build_input_unitary(x: f64, n_b: usize) -> Result<ComplexMatrix> {
    check_input(x)?;
    let gate = rotation_gate(Axis::Y, x.acos());
    let mut u = gate.clone();
    for _ in 1..n_b {
        u = crate::matrix::kron(&u, &gate);
    }
    Ok(u)
}

/// Amplitudes of `(R_y(arccos x)|0⟩)^{⊗ n_b}`; all real.
pub(crate) fn input_amplitudes(x: f64, n_b: usize) -> Result<Vec<f64>> {
    check_input(x)?;
    // cos(arccos(x)/2) and sin(arccos(x)/2) without the trig round trip
    let c = ((1.0 + x) / 2.0).sqrt();
    let s = ((1.0 - x) / 2.0).sqrt();
    let d = 1 << n_b;
    Ok((0..d)
        .map(|b: usize| {
            let ones = b.count_ones() as i32;
            c.powi(n_b as i32 - ones) * s.powi(ones)
        })
        .collect())
}

/// Input-state density matrix `U_in(x)|0⟩⟨0|U_in(x)^dag` on `n_b` qubits.
pub fn input_state(x: f64, n_b: usize) -> Result<DensityMatrix> {
    let amps: Vec<C64> = input_amplitudes(x, n_b)?
        .into_iter()
        .map(|a| C64::new(a, 0.0))
        .collect();
    DensityMatrix::from_pure(&amps)
}

pub fn build_interaction_hamiltonian(arch: &QrnnArchitecture) -> HermitianObservable {
    let n = arch.n_qubits();
    let d = 1 << n;
    let mut h = ComplexMatrix::zeros(d, d);
    for (j, &a) in arch.fields.iter().enumerate() {
        if a != 0.0 {
            let x = pauli_embed(Axis::X, j, n).expect("qubit in range");
            h = &h + &x.matrix().scale_real(a);
        }
    }
    // Z_j Z_k is diagonal: +1 when bits j and k agree.
    for j in 1..n {
        for k in 0..j {
            let coupling = arch.couplings[QrnnArchitecture::coupling_index(j, k)];
            if coupling == 0.0 {
                continue;
            }
            let (bj, bk) = (n - 1 - j, n - 1 - k);
            for idx in 0..d {
                let parity = ((idx >> bj) ^ (idx >> bk)) & 1;
                let sign = if parity == 0 { 1.0 } else { -1.0 };
                h[(idx, idx)] += C64::new(sign * coupling, 0.0);
            }
        }
    }
    HermitianObservable::new(h).expect("sum of Pauli strings with real weights is Hermitian")
}

/// `exp(-i H_int tau)`, shared by every layer.
pub fn build_interaction_unitary(arch: &QrnnArchitecture) -> ComplexMatrix {
    if arch.tau == 0.0 {
        return ComplexMatrix::identity(1 << arch.n_qubits());
    }
    unitary_from_hamiltonian(&build_interaction_hamiltonian(arch), arch.tau)
}

/// `U = prod_{d=D..1} exp(-i H_int tau) R_d`, layer 1 acting first.
pub fn build_evolution_unitary(
    arch: &QrnnArchitecture,
    params: &QrnnParameters,
) -> Result<ComplexMatrix> {
    let interaction = build_interaction_unitary(arch);
    evolution_unitary_with(arch, params, &interaction)
}

pub(crate) fn evolution_unitary_with(
    arch: &QrnnArchitecture,
    params: &QrnnParameters,
    interaction: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    if params.angles.len() != arch.n_angles() {
        return Err(QrnnError::ParameterLength {
            expected: arch.n_params(),
            actual: params.len(),
        });
    }
    let n = arch.n_qubits();
    let mut u = ComplexMatrix::identity(1 << n);
    for layer in 0..arch.depth {
        apply_rotation_layer(&mut u, arch, params, layer);
        u = interaction.matmul(&u);
    }
    Ok(u)
}

/// Left-multiplies `m` by `R_layer = ⊗_q U1_q`.
pub(crate) fn apply_rotation_layer(
    m: &mut ComplexMatrix,
    arch: &QrnnArchitecture,
    params: &QrnnParameters,
    layer: usize,
) {
    let n = arch.n_qubits();
    for q in 0..n {
        m.apply_1q_left(&params.u1(arch, layer, q), q, n);
    }
}

/// `W = U (I_A ⊗ psi)`: column `a` of `W` is `sum_b U[:, a d_B + b] psi_b`.
pub(crate) fn project_input(u: &ComplexMatrix, psi: &[f64], dim_a: usize) -> ComplexMatrix {
    let dim_b = psi.len();
    let rows = u.rows();
    let mut w = ComplexMatrix::zeros(rows, dim_a);
    let (ud, wd) = (u.data(), w.data_mut());
    for r in 0..rows {
        let urow = &ud[r * rows..(r + 1) * rows];
        for a in 0..dim_a {
            let block = &urow[a * dim_b..(a + 1) * dim_b];
            wd[r * dim_a + a] = block.iter().zip(psi).map(|(z, &p)| z * p).sum();
        }
    }
    w
}

/// `Tr_B[M W^dag]` for `M`, `W` of shape `(d_A d_B) × d_A`.
pub(crate) fn trace_out_b(m: &ComplexMatrix, w: &ComplexMatrix, dim_b: usize) -> ComplexMatrix {
    let dim_a = m.cols();
    let mut out = ComplexMatrix::zeros(dim_a, dim_a);
    let (md, wd) = (m.data(), w.data());
    for a1 in 0..dim_a {
        for a2 in 0..dim_a {
            let mut acc = ZERO;
            for b in 0..dim_b {
                let r1 = (a1 * dim_b + b) * dim_a;
                let r2 = (a2 * dim_b + b) * dim_a;
                for c in 0..dim_a {
                    acc += md[r1 + c] * wd[r2 + c].conj();
                }
            }
            out[(a1, a2)] = acc;
        }
    }
    out
}

/// `Re diag(M W^dag)` folded into per-B-qubit Z expectations:
/// `z_q = sum_r s_q(r) Re (M W^dag)_{rr}`.
pub(crate) fn z_profile(m: &ComplexMatrix, w: &ComplexMatrix, n_b: usize) -> Vec<f64> {
    let dim_a = m.cols();
    let dim_b = 1 << n_b;
    let mut diag_b = vec![0.0; dim_b];
    let (md, wd) = (m.data(), w.data());
    for r in 0..m.rows() {
        let row = r * dim_a;
        let v: f64 = (0..dim_a)
            .map(|c| (md[row + c] * wd[row + c].conj()).re)
            .sum();
        diag_b[r % dim_b] += v;
    }
    (0..n_b)
        .map(|q| {
            let bit = n_b - 1 - q;
            diag_b
                .iter()
                .enumerate()
                .map(|(b, &p)| if (b >> bit) & 1 == 0 { p } else { -p })
                .sum()
        })
        .collect()
}

/// Persistent group-A state between steps.
#[derive(Clone, Debug, PartialEq)]
pub struct QrnnState {
    rho_a: DensityMatrix,
}

impl QrnnState {
    /// `|0⟩⟨0|^{⊗ n_A}`.
    pub fn initial(arch: &QrnnArchitecture) -> Self {
        Self {
            rho_a: DensityMatrix::zero_state(arch.n_a),
        }
    }

    pub fn new(rho_a: DensityMatrix) -> Self {
        Self { rho_a }
    }

    pub fn rho_a(&self) -> &DensityMatrix {
        &self.rho_a
    }
}

#[derive(Clone, Debug)]
pub struct StepOutput {
    pub state: QrnnState,
    pub z_expectations: Vec<f64>,
    pub y_bar: f64,
}

/// Architecture and parameters with the evolution unitary built once.
#[derive(Clone, Debug)]
pub struct Qrnn {
    arch: QrnnArchitecture,
    params: QrnnParameters,
    unitary: ComplexMatrix,
}

impl Qrnn {
    pub fn new(arch: &QrnnArchitecture, params: &QrnnParameters) -> Result<Self> {
        let unitary = build_evolution_unitary(arch, params)?;
        Ok(Self {
            arch: arch.clone(),
            params: params.clone(),
            unitary,
        })
    }

    /// Reuses a precomputed `exp(-i H_int tau)`.
    pub fn with_interaction(
        arch: &QrnnArchitecture,
        params: &QrnnParameters,
        interaction: &ComplexMatrix,
    ) -> Result<Self> {
        let unitary = evolution_unitary_with(arch, params, interaction)?;
        Ok(Self {
            arch: arch.clone(),
            params: params.clone(),
            unitary,
        })
    }

    pub fn architecture(&self) -> &QrnnArchitecture {
        &self.arch
    }

    pub fn parameters(&self) -> &QrnnParameters {
        &self.params
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn initial_state(&self) -> QrnnState {
        QrnnState::initial(&self.arch)
    }

    pub fn step(&self, state: &QrnnState, x: f64) -> Result<StepOutput> {
        step_with_unitary(&self.arch, &self.unitary, self.params.c_out, state, x)
    }

    /// Teacher-forced run from the initial state; returns `y_bar_t` per input.
    pub fn run_teacher_forced(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trajectory(inputs)?.0)
    }

    /// Teacher-forced outputs together with the group-A state after each step.
    pub fn trajectory(&self, inputs: &[f64]) -> Result<(Vec<f64>, Vec<QrnnState>)> {
        let mut state = self.initial_state();
        let mut outputs = Vec::with_capacity(inputs.len());
        let mut states = Vec::with_capacity(inputs.len());
        for &x in inputs {
            let out = self.step(&state, x)?;
            outputs.push(out.y_bar);
            state = out.state;
            states.push(state.clone());
        }
        Ok((outputs, states))
    }

    /// See [`run_closed_loop`].
    pub fn run_closed_loop(&self, seed_inputs: &[f64], horizon: usize) -> Result<Vec<f64>> {
        if seed_inputs.is_empty() {
            return Err(QrnnError::InvalidArgument(
                "closed-loop prediction needs at least one seed input".into(),
            ));
        }
        let mut state = self.initial_state();
        let mut last = 0.0;
        for &x in seed_inputs {
            let out = self.step(&state, x)?;
            state = out.state;
            last = out.y_bar;
        }
        let mut predictions = Vec::with_capacity(horizon + 1);
        predictions.push(last);
        for _ in 0..horizon {
            let out = self.step(&state, last.clamp(-1.0, 1.0))?;
            state = out.state;
            last = out.y_bar;
            predictions.push(last);
        }
        Ok(predictions)
    }
}

pub(crate) fn step_with_unitary(
    arch: &QrnnArchitecture,
    unitary: &ComplexMatrix,
    c_out: f64,
    state: &QrnnState,
    x: f64,
) -> Result<StepOutput> {
    let psi = input_amplitudes(x, arch.n_b)?;
    let w = project_input(unitary, &psi, arch.dim_a());
    let m = w.matmul(state.rho_a.matrix());
    let rho_a = trace_out_b(&m, &w, arch.dim_b()).hermitian_part();
    let z_expectations = z_profile(&m, &w, arch.n_b);
    let y_bar = c_out * z_expectations.iter().sum::<f64>() / arch.n_b as f64;
    Ok(StepOutput {
        state: QrnnState {
            rho_a: DensityMatrix::from_trusted(rho_a),
        },
        z_expectations,
        y_bar,
    })
}

/// One encode/evolve/measure/reset step.
pub fn qrnn_step(qrnn: &Qrnn, state: &QrnnState, x: f64) -> Result<StepOutput> {
    qrnn.step(state, x)
}

/// Teacher-forced outputs `y_bar_0..y_bar_{len-1}` from `|0⟩⟨0|^{⊗ n_A}`.
pub fn run_teacher_forced(
    arch: &QrnnArchitecture,
    params: &QrnnParameters,
    inputs: &[f64],
) -> Result<Vec<f64>> {
    Qrnn::new(arch, params)?.run_teacher_forced(inputs)
}

/// Runs teacher-forced over `seed_inputs` (`x_0..x_{T-1}`), then feeds the
/// clamped prediction back for `horizon` more steps. Returns `horizon + 1`
/// values: the predictions of `x_T..x_{T+horizon}`.
pub fn run_closed_loop(
    arch: &QrnnArchitecture,
    params: &QrnnParameters,
    seed_inputs: &[f64],
    horizon: usize,
) -> Result<Vec<f64>> {
    Qrnn::new(arch, params)?.run_closed_loop(seed_inputs, horizon)
}
