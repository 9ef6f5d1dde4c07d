//! Training costs, a BFGS minimizer with a strong-Wolfe line search, and the
//! QRNN training driver.

use crate::error::{QrnnError, Result};
use crate::gradients::cost_and_gradient_with;
use crate::model::{build_interaction_unitary, QrnnArchitecture, QrnnParameters, TimeSeries};

/// Curvature threshold below which the inverse-Hessian update is skipped.
const CURVATURE_EPS: f64 = 1e-10;

fn check_lengths(outputs: &[f64], targets: &[f64]) -> Result<()> {
    if outputs.len() != targets.len() {
        return Err(QrnnError::DimensionMismatch {
            expected: targets.len(),
            actual: outputs.len(),
        });
    }
    Ok(())
}

/// `1/2 sum (y - target)^2`.
pub fn cost_half_sse(outputs: &[f64], targets: &[f64]) -> Result<f64> {
    check_lengths(outputs, targets)?;
    Ok(0.5
        * outputs
            .iter()
            .zip(targets)
            .map(|(y, t)| (y - t).powi(2))
            .sum::<f64>())
}

/// Mean squared residual. Empty input is an error.
pub fn mse(outputs: &[f64], targets: &[f64]) -> Result<f64> {
    check_lengths(outputs, targets)?;
    if outputs.is_empty() {
        return Err(QrnnError::InvalidArgument(
            "mse of an empty sequence".into(),
        ));
    }
    Ok(2.0 * cost_half_sse(outputs, targets)? / outputs.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub max_iterations: usize,
    pub grad_norm_tol: f64,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    pub max_line_search_steps: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            grad_norm_tol: 1e-6,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            max_line_search_steps: 30,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.wolfe_c1
            && self.wolfe_c1 < self.wolfe_c2
            && self.wolfe_c2 < 1.0
            && self.grad_norm_tol > 0.0
            && self.max_line_search_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(QrnnError::InvalidArgument(format!(
                "invalid training configuration: {self:?}"
            )))
        }
    }
}

/// Why the minimizer stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    GradientTolerance,
    MaxIterations,
    /// No step satisfying the Wolfe conditions was found.
    LineSearchFailed,
}

/// Outcome of [`bfgs_minimize`].
#[derive(Clone, Debug, PartialEq)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    /// Cost at the starting point followed by the cost of every accepted iterate.
    pub cost_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_grad_norm: f64,
    pub stop_reason: StopReason,
    pub evaluations: usize,
}

/// Snapshot handed to the observer after every accepted iterate.
pub struct Iterate<'a> {
    pub iteration: usize,
    pub x: &'a [f64],
    pub cost: f64,
    pub grad_norm: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cost and gradient evaluated together, with finiteness checked.
struct Oracle<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>> Oracle<F> {
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evaluations += 1;
        let (c, g) = (self.f)(x)?;
        if !c.is_finite() || g.iter().any(|v| !v.is_finite()) || g.len() != x.len() {
            return Err(QrnnError::NonFiniteObjective { point: x.to_vec() });
        }
        Ok((c, g))
    }
}

/// A trial point along the search direction.
#[derive(Clone)]
struct Trial {
    alpha: f64,
    phi: f64,
    dphi: f64,
    x: Vec<f64>,
    g: Vec<f64>,
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`, if any.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let denom = db - da + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let t = b - (b - a) * (db + d2 - d1) / denom;
    t.is_finite().then_some(t)
}

struct LineSearch<'a, F> {
    oracle: &'a mut Oracle<F>,
    x: &'a [f64],
    p: &'a [f64],
    phi0: f64,
    dphi0: f64,
    c1: f64,
    c2: f64,
    budget: usize,
}

impl<F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>> LineSearch<'_, F> {
    fn trial(&mut self, alpha: f64) -> Result<Trial> {
        self.budget = self.budget.saturating_sub(1);
        let x: Vec<f64> = self
            .x
            .iter()
            .zip(self.p)
            .map(|(x, p)| x + alpha * p)
            .collect();
        let (phi, g) = self.oracle.eval(&x)?;
        Ok(Trial {
            alpha,
            phi,
            dphi: dot(&g, self.p),
            x,
            g,
        })
    }

    fn armijo_fails(&self, t: &Trial) -> bool {
        t.phi > self.phi0 + self.c1 * t.alpha * self.dphi0
    }

    fn curvature_holds(&self, t: &Trial) -> bool {
        t.dphi.abs() <= -self.c2 * self.dphi0
    }

    /// Strong-Wolfe search. On budget exhaustion returns the best point that
    /// satisfies sufficient decrease, if one was seen.
    fn run(mut self, alpha1: f64) -> Result<Option<Trial>> {
        let origin = Trial {
            alpha: 0.0,
            phi: self.phi0,
            dphi: self.dphi0,
            x: self.x.to_vec(),
            g: Vec::new(),
        };
        let mut prev = origin;
        let mut alpha = alpha1;
        let mut first = true;
        while self.budget > 0 {
            let cur = self.trial(alpha)?;
            if self.armijo_fails(&cur) || (!first && cur.phi >= prev.phi) {
                return self.zoom(prev, cur);
            }
            if self.curvature_holds(&cur) {
                return Ok(Some(cur));
            }
            if cur.dphi >= 0.0 {
                return self.zoom(cur, prev);
            }
            first = false;
            alpha = 2.0 * cur.alpha;
            prev = cur;
        }
        Ok((prev.alpha > 0.0).then_some(prev))
    }

    fn zoom(&mut self, mut lo: Trial, mut hi: Trial) -> Result<Option<Trial>> {
        while self.budget > 0 {
            let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
            let width = b - a;
            if width <= f64::EPSILON * b.max(1.0) {
                break;
            }
            let guess = cubic_min(lo.alpha, lo.phi, lo.dphi, hi.alpha, hi.phi, hi.dphi);
            let alpha = match guess {
                Some(t) if t > a + 0.1 * width && t < b - 0.1 * width => t,
                _ => 0.5 * (a + b),
            };
            let cur = self.trial(alpha)?;
            if self.armijo_fails(&cur) || cur.phi >= lo.phi {
                hi = cur;
                continue;
            }
            if self.curvature_holds(&cur) {
                return Ok(Some(cur));
            }
            if cur.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
        Ok((lo.alpha > 0.0).then_some(lo))
    }
}

/// BFGS on separate cost and gradient oracles.
pub fn bfgs_minimize(
    cost: impl Fn(&[f64]) -> Result<f64>,
    gradient: impl Fn(&[f64]) -> Result<Vec<f64>>,
    x0: &[f64],
    config: &TrainConfig,
) -> Result<MinimizeResult> {
    bfgs_minimize_joint(|x| Ok((cost(x)?, gradient(x)?)), x0, config, |_| Ok(()))
}

/// BFGS on a joint cost-and-gradient oracle. `observer` sees every accepted
/// iterate and may abort by returning an error.
pub fn bfgs_minimize_joint(
    oracle: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    x0: &[f64],
    config: &TrainConfig,
    mut observer: impl FnMut(&Iterate) -> Result<()>,
) -> Result<MinimizeResult> {
    config.validate()?;
    let n = x0.len();
    let mut oracle = Oracle {
        f: oracle,
        evaluations: 0,
    };
    let mut x = x0.to_vec();
    let (mut fx, mut g) = oracle.eval(&x)?;
    let mut cost_trace = vec![fx];
    let mut h = identity(n);
    let mut fresh_h = true;
    let mut iterations = 0;
    let mut prev_decrease: Option<f64> = None;

    let stop_reason = loop {
        let gnorm = norm(&g);
        if gnorm < config.grad_norm_tol {
            break StopReason::GradientTolerance;
        }
        if iterations >= config.max_iterations {
            break StopReason::MaxIterations;
        }
        let mut p = mat_vec_neg(&h, &g);
        let mut dphi0 = dot(&g, &p);
        if dphi0 >= 0.0 {
            h = identity(n);
            fresh_h = true;
            p = g.iter().map(|v| -v).collect();
            dphi0 = -gnorm * gnorm;
        }
        let alpha1 = match (fresh_h, prev_decrease) {
            (false, _) => 1.0,
            (true, Some(dec)) => (2.02 * dec / -dphi0).min(1.0),
            (true, None) => (1.0 / gnorm).min(1.0),
        };
        let search = LineSearch {
            oracle: &mut oracle,
            x: &x,
            p: &p,
            phi0: fx,
            dphi0,
            c1: config.wolfe_c1,
            c2: config.wolfe_c2,
            budget: config.max_line_search_steps,
        };
        let Some(accepted) = search.run(alpha1)? else {
            if fresh_h {
                break StopReason::LineSearchFailed;
            }
            h = identity(n);
            fresh_h = true;
            continue;
        };

        let s: Vec<f64> = accepted.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = accepted.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > CURVATURE_EPS {
            if fresh_h {
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|v| *v *= scale);
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh_h = false;
        }
        prev_decrease = Some(fx - accepted.phi);
        x = accepted.x;
        fx = accepted.phi;
        g = accepted.g;
        iterations += 1;
        cost_trace.push(fx);
        observer(&Iterate {
            iteration: iterations,
            x: &x,
            cost: fx,
            grad_norm: norm(&g),
        })?;
    };

    Ok(MinimizeResult {
        final_grad_norm: norm(&g),
        converged: stop_reason == StopReason::GradientTolerance,
        x,
        cost_trace,
        iterations,
        stop_reason,
        evaluations: oracle.evaluations,
    })
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

fn mat_vec_neg(h: &[f64], g: &[f64]) -> Vec<f64> {
    let n = g.len();
    (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], g)).collect()
}

/// `H <- (I - r s y^T) H (I - r y s^T) + r s s^T` with `r = 1 / s^T y`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let r = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    let coef = (1.0 + r * yhy) * r;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += coef * s[i] * s[j] - r * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

/// Outcome of [`train_qrnn`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrainResult {
    pub final_params: QrnnParameters,
    pub cost_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_grad_norm: f64,
    pub stop_reason: StopReason,
}

/// Teacher-forced training on the series' training segment, from all angles
/// zero and `c_out = 1`.
pub fn train_qrnn(
    arch: &QrnnArchitecture,
    series: &TimeSeries,
    config: &TrainConfig,
) -> Result<TrainResult> {
    train_qrnn_observed(arch, series, config, |_| Ok(()))
}

/// [`train_qrnn`] with an observer on every accepted iterate.
pub fn train_qrnn_observed(
    arch: &QrnnArchitecture,
    series: &TimeSeries,
    config: &TrainConfig,
    observer: impl FnMut(&Iterate) -> Result<()>,
) -> Result<TrainResult> {
    let train = series.train();
    let (inputs, targets) = (train, &train[1..]);
    let interaction = build_interaction_unitary(arch);
    let x0 = QrnnParameters::initial(arch).to_flat();
    let result = bfgs_minimize_joint(
        |flat| {
            let params = QrnnParameters::from_flat(arch, flat)?;
            let (c, g) = cost_and_gradient_with(arch, &params, &interaction, inputs, targets)?;
            Ok((c, g.into_vec()))
        },
        &x0,
        config,
        observer,
    )?;
    Ok(TrainResult {
        final_params: QrnnParameters::from_flat(arch, &result.x)?,
        cost_trace: result.cost_trace,
        iterations: result.iterations,
        converged: result.converged,
        final_grad_norm: result.final_grad_norm,
        stop_reason: result.stop_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradients::{central_difference, grad_forward_sensitivity};
    use crate::model::tests::random_arch;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_non_increasing(trace: &[f64]) {
        for w in trace.windows(2) {
            assert!(w[1] <= w[0], "cost rose from {} to {}", w[0], w[1]);
        }
    }

    #[test]
    fn half_sse_examples() {
        assert_eq!(cost_half_sse(&[0.2, 0.4], &[0.2, 0.4]).unwrap(), 0.0);
        assert!((cost_half_sse(&[2.0, 1.0, 0.0], &[1.0, 0.0, -1.0]).unwrap() - 1.5).abs() < 1e-15);
        assert!((cost_half_sse(&[0.5], &[-0.5]).unwrap() - 0.5).abs() < 1e-15);
        assert!(cost_half_sse(&[0.5], &[]).is_err());
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[0.1, 0.3], &[0.1, 0.3]).unwrap(), 0.0);
        assert!((mse(&[0.1, -0.1], &[0.0, 0.0]).unwrap() - 0.01).abs() < 1e-15);
        assert!(mse(&[], &[]).is_err());
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn mse_on_window_matches_slices() {
        let y: Vec<f64> = (0..60).map(|t| (t as f64 * 0.1).sin()).collect();
        let x: Vec<f64> = (0..60).map(|t| (t as f64 * 0.1).cos() * 0.9).collect();
        let window = mse(&y[30..55], &x[30..55]).unwrap();
        let hand: f64 = (30..55).map(|t| (y[t] - x[t]).powi(2)).sum::<f64>() / 25.0;
        assert!((window - hand).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            wolfe_c1: 0.95,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            grad_norm_tol: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn quadratic_converges_quickly() {
        let r = bfgs_minimize(
            |x| Ok(x.iter().map(|v| v * v).sum()),
            |x| Ok(x.iter().map(|v| 2.0 * v).collect()),
            &[3.0, -4.0],
            &TrainConfig::default(),
        )
        .unwrap();
        assert!(norm(&r.x) < 1e-8, "{:?}", r.x);
        assert!(r.iterations <= 5, "{} iterations", r.iterations);
        assert!(r.converged);
        assert_non_increasing(&r.cost_trace);
    }

    #[test]
    fn rosenbrock_reaches_minimum() {
        let f = |x: &[f64]| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let g = |x: &[f64]| {
            Ok(vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ])
        };
        let r = bfgs_minimize(f, g, &[-1.2, 1.0], &TrainConfig::default()).unwrap();
        assert!(
            (r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            r.x
        );
        assert_non_increasing(&r.cost_trace);
    }

    #[test]
    fn quartic_tail() {
        let r = bfgs_minimize(
            |x| Ok((x[0] - 2.0).powi(4)),
            |x| Ok(vec![4.0 * (x[0] - 2.0).powi(3)]),
            &[0.0],
            // gradient 4e^3 drops below the default tolerance near e = 6e-3
            &TrainConfig {
                grad_norm_tol: 1e-12,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-3, "{:?}", r.x);
        assert_non_increasing(&r.cost_trace);
    }

    #[test]
    fn non_finite_oracle_aborts_with_point() {
        let err = bfgs_minimize(
            |x| Ok(if x[0] < 0.5 { f64::NAN } else { x[0] * x[0] }),
            |x| Ok(vec![2.0 * x[0]]),
            &[2.0],
            &TrainConfig::default(),
        )
        .unwrap_err();
        match err {
            QrnnError::NonFiniteObjective { point } => assert!(point[0] < 0.5),
            other => panic!("unexpected error {other:?}"),
        }
    }

    fn wave(len: usize) -> TimeSeries {
        let v = (0..len).map(|t| 0.5 * (0.4 * t as f64).cos()).collect();
        TimeSeries::new(v, len).unwrap()
    }

    #[test]
    fn constant_zero_series_does_not_diverge() {
        let series = TimeSeries::new(vec![0.0; 12], 12).unwrap();
        let arch = QrnnArchitecture::uncoupled(1, 1, 1, 0.0).unwrap();
        let r = train_qrnn(&arch, &series, &TrainConfig::default()).unwrap();
        assert!(r.cost_trace[0].abs() < 1e-15);
        assert!(r.cost_trace.last().unwrap() <= &r.cost_trace[0]);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let arch = random_arch(&mut rng, 1, 1, 1, 0.3);
        let r = train_qrnn(&arch, &series, &TrainConfig::default()).unwrap();
        assert!(r.cost_trace.last().unwrap() <= &r.cost_trace[0]);
        assert_non_increasing(&r.cost_trace);
    }

    #[test]
    fn training_is_deterministic_and_reports_final_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let arch = random_arch(&mut rng, 2, 1, 2, 0.4);
        let series = wave(20);
        let config = TrainConfig {
            max_iterations: 40,
            ..TrainConfig::default()
        };
        let a = train_qrnn(&arch, &series, &config).unwrap();
        let b = train_qrnn(&arch, &series, &config).unwrap();
        assert_eq!(a, b);
        assert_non_increasing(&a.cost_trace);
        assert!(a.cost_trace.last().unwrap() < &a.cost_trace[0]);

        let train = series.train();
        let g = grad_forward_sensitivity(&arch, &a.final_params, train, &train[1..]).unwrap();
        assert!((g.norm() - a.final_grad_norm).abs() < 1e-12);
    }

    #[test]
    fn observer_sees_every_iterate() {
        let mut seen = Vec::new();
        let r = bfgs_minimize_joint(
            |x| {
                Ok((
                    x[0] * x[0] + 3.0 * x[1] * x[1],
                    vec![2.0 * x[0], 6.0 * x[1]],
                ))
            },
            &[1.0, 1.0],
            &TrainConfig::default(),
            |it| {
                seen.push(it.cost);
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen.len(), r.iterations);
        assert_eq!(&seen[..], &r.cost_trace[1..]);
    }

    #[test]
    fn finite_difference_oracle_reaches_similar_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let arch = random_arch(&mut rng, 1, 1, 2, 0.5);
        let series = wave(16);
        let train = series.train();
        let (inputs, targets) = (train, &train[1..]);
        let interaction = crate::model::build_interaction_unitary(&arch);
        let cost = |flat: &[f64]| {
            crate::gradients::sequence_cost(&arch, &interaction, flat, inputs, targets)
        };
        let config = TrainConfig {
            max_iterations: 200,
            ..TrainConfig::default()
        };
        let x0 = QrnnParameters::initial(&arch).to_flat();
        let fd = bfgs_minimize(cost, |x| central_difference(cost, x, 1e-6), &x0, &config).unwrap();
        let exact = train_qrnn(&arch, &series, &config).unwrap();
        let (a, b) = (
            *fd.cost_trace.last().unwrap(),
            *exact.cost_trace.last().unwrap(),
        );
        assert!((a - b).abs() <= 0.1 * b.max(1e-6), "fd {a} vs exact {b}");
    }
}
