//! Reporting and fitting helpers shared by the acceptance target.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

/// Result of one acceptance check.
#[derive(Clone, Debug)]
pub struct Check {
    pub id: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Check {
    pub fn line(&self) -> String {
        format!(
            "criterion {:<4} {}  {}  [{:.1} s]",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Collects checks and prints each line as soon as it is recorded.
#[derive(Debug, Default)]
pub struct Report {
    checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, id: &str, passed: bool, detail: String, elapsed: Duration) {
        let check = Check {
            id: id.to_string(),
            passed,
            detail,
            elapsed,
        };
        println!("{}", check.line());
        self.checks.push(check);
    }

    /// Times `f`, which returns `(passed, detail)`. An error counts as a failure.
    pub fn run<E: std::fmt::Display>(
        &mut self,
        id: &str,
        f: impl FnOnce() -> Result<(bool, String), E>,
    ) -> Duration {
        let start = Instant::now();
        let (passed, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let elapsed = start.elapsed();
        self.record(id, passed, detail, elapsed);
        elapsed
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self) -> String {
        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.id.as_str())
            .collect();
        let mut s = String::new();
        let _ = write!(
            s,
            "{} of {} checks passed",
            self.checks.len() - failed.len(),
            self.checks.len()
        );
        if !failed.is_empty() {
            let _ = write!(s, "; failed: {}", failed.join(", "));
        }
        s
    }
}

/// Largest absolute residual of the least-squares fit of `b` by the columns
/// of `basis`.
pub fn lstsq_max_residual(basis: &[Vec<f64>], b: &[f64]) -> f64 {
    let a = DMatrix::from_fn(b.len(), basis.len(), |r, c| basis[c][r]);
    let rhs = DVector::from_column_slice(b);
    let coeffs = a
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .expect("both singular vector sets were requested");
    (a * coeffs - rhs).amax()
}
