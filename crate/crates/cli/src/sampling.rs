//! Seeded draws of the interaction Hamiltonian coefficients.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64, written out so the stream is fixed independently of any crate.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Top 53 bits scaled to `[0, 1)`, then mapped to `[-1, 1)`.
    pub fn next_symmetric(&mut self) -> f64 {
        let unit = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        2.0 * unit - 1.0
    }
}

/// Fields `a_1..a_n` followed by couplings `J_jk` for `j = 2..n`, `k = 1..j-1`.
pub fn sample_hamiltonian_coefficients(
    master_seed: u64,
    seed_index: u64,
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut rng = SplitMix64::new(master_seed ^ seed_index.wrapping_mul(GOLDEN_GAMMA));
    let fields = (0..n).map(|_| rng.next_symmetric()).collect();
    let couplings = (0..n * (n - 1) / 2).map(|_| rng.next_symmetric()).collect();
    (fields, couplings)
}
