//! Experiment runners behind the CLI subcommands.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use qrnn_core::datasets::{gen_cosine, gen_spin_series, gen_triangle};
use qrnn_core::gradients::{
    grad_finite_difference, grad_forward_sensitivity, grad_parameter_shift, parameter_shift_entry,
};
use qrnn_core::training::{mse, train_qrnn, TrainResult};
use qrnn_core::{Qrnn, QrnnArchitecture, QrnnParameters, TimeSeries};

use crate::config::{ExperimentConfig, Task};
use crate::error::{CliError, CliResult};
use crate::params_io::{save_params, ParamsMeta};
use crate::sampling::{sample_hamiltonian_coefficients, SplitMix64};
use crate::svg::{emit_svg_plot, Mark, PlotStyle, Series, PALETTE};
use crate::table::{emit_csv, Schema, Value};

pub fn task_series(task: Task) -> CliResult<TimeSeries> {
    let (total, train) = task.lengths();
    Ok(match task {
        Task::Cosine => gen_cosine(total, train)?,
        Task::Triangle => gen_triangle(total, train)?,
        Task::Spin => gen_spin_series(total, train)?,
    })
}

/// Architecture for Hamiltonian draw `seed_index` of `cfg`, at evolution time `tau`.
pub fn seed_architecture(
    cfg: &ExperimentConfig,
    master_seed: u64,
    seed_index: u64,
    tau: f64,
) -> CliResult<QrnnArchitecture> {
    let (fields, couplings) =
        sample_hamiltonian_coefficients(master_seed, seed_index, cfg.n_a + cfg.n_b);
    Ok(QrnnArchitecture::new(
        cfg.n_a, cfg.n_b, cfg.depth, tau, fields, couplings,
    )?)
}

/// Outputs of one parameter set on a series.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// `y_bar_0 .. y_bar_{T-1}` with the true training inputs.
    pub teacher_forced: Vec<f64>,
    /// `y_bar_{T-1} .. y_bar_{len-1}`, each later input being the previous
    /// (clamped) output.
    pub closed_loop: Vec<f64>,
    /// MSE of `y_bar_{T-1+k}` against `x_{T+k}` for `k < window`.
    pub test_mse: f64,
}

impl Evaluation {
    /// Step output `y_bar_t` for every `t` of the series.
    pub fn outputs(&self) -> Vec<f64> {
        self.teacher_forced
            .iter()
            .chain(&self.closed_loop[1..])
            .copied()
            .collect()
    }
}

pub fn evaluate(
    arch: &QrnnArchitecture,
    params: &QrnnParameters,
    series: &TimeSeries,
    window: usize,
) -> CliResult<Evaluation> {
    let qrnn = Qrnn::new(arch, params)?;
    let train = series.train();
    let teacher_forced = qrnn.run_teacher_forced(train)?;
    let horizon = series.len() - series.train_len();
    let closed_loop = qrnn.run_closed_loop(train, horizon)?;
    let test_mse = window_mse(&closed_loop, series, window)?;
    Ok(Evaluation {
        teacher_forced,
        closed_loop,
        test_mse,
    })
}

/// MSE of the first `window` closed-loop predictions.
pub fn window_mse(closed_loop: &[f64], series: &TimeSeries, window: usize) -> CliResult<f64> {
    let test = series.test();
    if window > test.len() || window > closed_loop.len() {
        return Err(CliError::Config(format!(
            "test window {window} exceeds the {} available test points",
            test.len()
        )));
    }
    Ok(mse(&closed_loop[..window], &test[..window])?)
}

/// One trained Hamiltonian draw.
#[derive(Clone, Debug)]
pub struct SeedOutcome {
    pub seed_index: u64,
    pub tau: f64,
    pub arch: QrnnArchitecture,
    pub outcome: Result<(TrainResult, Evaluation), String>,
}

impl SeedOutcome {
    pub fn test_mse(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|(_, e)| e.test_mse)
    }

    pub fn status(&self) -> String {
        match &self.outcome {
            Ok((r, _)) if r.converged => "ok".into(),
            Ok((r, _)) => format!("ok ({:?})", r.stop_reason),
            Err(e) => format!("failed: {e}"),
        }
    }
}

pub fn train_seed(
    cfg: &ExperimentConfig,
    series: &TimeSeries,
    arch: QrnnArchitecture,
    seed_index: u64,
) -> SeedOutcome {
    let outcome = train_qrnn(&arch, series, &cfg.train)
        .map_err(|e| e.to_string())
        .and_then(|r| {
            evaluate(&arch, &r.final_params, series, cfg.test_window)
                .map(|e| (r, e))
                .map_err(|e| e.to_string())
        });
    SeedOutcome {
        seed_index,
        tau: arch.tau(),
        arch,
        outcome,
    }
}

/// Trains draws `0..n_seeds` at the configured `tau`.
pub fn train_all_seeds(cfg: &ExperimentConfig, series: &TimeSeries) -> CliResult<Vec<SeedOutcome>> {
    let archs = (0..cfg.n_seeds as u64)
        .map(|k| seed_architecture(cfg, cfg.master_seed, k, cfg.tau).map(|a| (k, a)))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(archs
        .into_par_iter()
        .map(|(k, arch)| train_seed(cfg, series, arch, k))
        .collect())
}

/// Index of the smallest test MSE among successful outcomes.
pub fn best_seed(outcomes: &[SeedOutcome]) -> Option<usize> {
    outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.test_mse().map(|m| (i, m)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

pub fn result_rows(
    series: &TimeSeries,
    initial: &Evaluation,
    trained: &Evaluation,
) -> Vec<Vec<Value>> {
    let (y0, y1) = (initial.outputs(), trained.outputs());
    series
        .values()
        .iter()
        .enumerate()
        .map(|(t, &x)| {
            let phase = if t < series.train_len() {
                "train"
            } else {
                "test"
            };
            vec![
                Value::Int(t as u64),
                Value::Float(x),
                Value::Float(y0[t]),
                Value::Float(y1[t]),
                Value::Text(phase.into()),
            ]
        })
        .collect()
}

fn result_plot(
    series: &TimeSeries,
    initial: &Evaluation,
    trained: &Evaluation,
    title: String,
) -> (Vec<Series>, PlotStyle) {
    let pts = |v: &[f64]| {
        v.iter()
            .enumerate()
            .map(|(t, &y)| (t as f64, y))
            .collect::<Vec<_>>()
    };
    let train_len = series.train_len();
    let trained_out = trained.outputs();
    let lines = vec![
        Series {
            label: "true".into(),
            points: pts(series.values()),
            color: PALETTE[0],
            mark: Mark::DashedLine,
        },
        Series {
            label: "initial output".into(),
            points: pts(&initial.outputs()),
            color: PALETTE[2],
            mark: Mark::Line,
        },
        Series {
            label: "trained (train)".into(),
            points: pts(&trained_out[..train_len]),
            color: PALETTE[3],
            mark: Mark::Line,
        },
        Series {
            label: "prediction".into(),
            points: trained_out
                .iter()
                .enumerate()
                .skip(train_len)
                .map(|(t, &y)| (t as f64, y))
                .collect(),
            color: PALETTE[1],
            mark: Mark::Line,
        },
    ];
    let style = PlotStyle {
        title,
        y_label: "x".into(),
        marker_x: Some(train_len as f64 - 0.5),
        ..PlotStyle::default()
    };
    (lines, style)
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes `result.csv` and `plot.svg` for one parameter set.
pub fn write_result(
    dir: &Path,
    series: &TimeSeries,
    initial: &Evaluation,
    trained: &Evaluation,
    title: String,
) -> CliResult<()> {
    ensure_dir(dir)?;
    emit_csv(
        &result_rows(series, initial, trained),
        &Schema::result(),
        &dir.join("result.csv"),
    )?;
    let (lines, style) = result_plot(series, initial, trained, title);
    emit_svg_plot(&lines, &style, &dir.join("plot.svg"))
}

pub fn run_gen_data(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    ensure_dir(&cfg.output_dir)?;
    let series = task_series(cfg.task)?;
    let rows: Vec<Vec<Value>> = series
        .values()
        .iter()
        .enumerate()
        .map(|(t, &x)| {
            let phase = if t < series.train_len() {
                "train"
            } else {
                "test"
            };
            vec![
                Value::Int(t as u64),
                Value::Float(x),
                Value::Text(phase.into()),
            ]
        })
        .collect();
    let path = cfg.output_dir.join("data.csv");
    emit_csv(&rows, &Schema::data(), &path)?;
    let line = Series {
        label: cfg.task.name().into(),
        points: series
            .values()
            .iter()
            .enumerate()
            .map(|(t, &x)| (t as f64, x))
            .collect(),
        color: PALETTE[0],
        mark: Mark::Line,
    };
    let style = PlotStyle {
        title: format!("{} series", cfg.task),
        y_label: "x".into(),
        marker_x: Some(series.train_len() as f64 - 0.5),
        ..PlotStyle::default()
    };
    emit_svg_plot(&[line], &style, &cfg.output_dir.join("data.svg"))?;
    Ok(path)
}

fn meta(cfg: &ExperimentConfig, seed_index: u64, tau: f64) -> ParamsMeta {
    ParamsMeta {
        task: cfg.task,
        seed_index,
        master_seed: cfg.master_seed,
        tau,
    }
}

/// Trains one Hamiltonian draw and writes its parameters and result files.
pub fn run_train(cfg: &ExperimentConfig, seed_index: u64) -> CliResult<SeedOutcome> {
    let series = task_series(cfg.task)?;
    let arch = seed_architecture(cfg, cfg.master_seed, seed_index, cfg.tau)?;
    let outcome = train_seed(cfg, &series, arch, seed_index);
    let (result, trained) = outcome
        .outcome
        .as_ref()
        .map_err(|e| CliError::CheckFailed(e.clone()))?;
    let initial = evaluate(
        &outcome.arch,
        &QrnnParameters::initial(&outcome.arch),
        &series,
        cfg.test_window,
    )?;
    ensure_dir(&cfg.output_dir)?;
    save_params(
        &cfg.output_dir.join("params.txt"),
        &outcome.arch,
        &result.final_params,
        &meta(cfg, seed_index, cfg.tau),
    )?;
    write_result(
        &cfg.output_dir,
        &series,
        &initial,
        trained,
        format!(
            "{} (seed {seed_index}, test MSE {:.3e})",
            cfg.task, trained.test_mse
        ),
    )?;
    Ok(outcome)
}

/// Result of [`run_demo`].
pub struct DemoReport {
    pub outcomes: Vec<SeedOutcome>,
    pub best: usize,
    pub initial: Evaluation,
}

impl DemoReport {
    pub fn best_outcome(&self) -> &SeedOutcome {
        &self.outcomes[self.best]
    }

    pub fn best_mse(&self) -> f64 {
        self.best_outcome()
            .test_mse()
            .expect("best seed has an MSE")
    }
}

/// Trains every draw, keeps the one with the smallest test MSE and writes
/// `seeds.csv`, `result.csv`, `plot.svg` and `params.txt`.
pub fn run_demo(cfg: &ExperimentConfig) -> CliResult<DemoReport> {
    let series = task_series(cfg.task)?;
    let outcomes = train_all_seeds(cfg, &series)?;
    demo_from_outcomes(cfg, &series, outcomes)
}

pub fn demo_from_outcomes(
    cfg: &ExperimentConfig,
    series: &TimeSeries,
    outcomes: Vec<SeedOutcome>,
) -> CliResult<DemoReport> {
    ensure_dir(&cfg.output_dir)?;
    let rows: Vec<Vec<Value>> = outcomes
        .iter()
        .map(|o| {
            vec![
                Value::Int(o.seed_index),
                o.test_mse().map_or(Value::Missing, Value::Float),
                Value::Text(o.status()),
            ]
        })
        .collect();
    emit_csv(
        &rows,
        &Schema::seed_summary(),
        &cfg.output_dir.join("seeds.csv"),
    )?;
    let best = best_seed(&outcomes)
        .ok_or_else(|| CliError::CheckFailed("every seed failed to train".into()))?;
    let chosen = &outcomes[best];
    let (result, trained) = chosen.outcome.as_ref().expect("best seed succeeded");
    let initial = evaluate(
        &chosen.arch,
        &QrnnParameters::initial(&chosen.arch),
        series,
        cfg.test_window,
    )?;
    save_params(
        &cfg.output_dir.join("params.txt"),
        &chosen.arch,
        &result.final_params,
        &meta(cfg, chosen.seed_index, chosen.tau),
    )?;
    write_result(
        &cfg.output_dir,
        series,
        &initial,
        trained,
        format!(
            "{} (best of {} seeds: seed {}, test MSE {:.3e})",
            cfg.task,
            outcomes.len(),
            chosen.seed_index,
            trained.test_mse
        ),
    )?;
    Ok(DemoReport {
        outcomes,
        best,
        initial,
    })
}

/// Re-evaluates saved parameters and writes the result files.
pub fn run_predict(cfg: &ExperimentConfig, params_path: &Path) -> CliResult<Evaluation> {
    let file = crate::params_io::ParamsFile::load(params_path)?;
    let shape = ExperimentConfig {
        n_a: file.n_a,
        n_b: file.n_b,
        depth: file.depth,
        ..cfg.clone()
    };
    let arch = seed_architecture(
        &shape,
        file.meta.master_seed,
        file.meta.seed_index,
        file.meta.tau,
    )?;
    let params = file.parameters(&arch)?;
    let series = task_series(file.meta.task)?;
    let trained = evaluate(&arch, &params, &series, cfg.test_window)?;
    let initial = evaluate(
        &arch,
        &QrnnParameters::initial(&arch),
        &series,
        cfg.test_window,
    )?;
    write_result(
        &cfg.output_dir,
        &series,
        &initial,
        &trained,
        format!(
            "{} (seed {}, test MSE {:.3e})",
            file.meta.task, file.meta.seed_index, trained.test_mse
        ),
    )?;
    Ok(trained)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResultRow {
    pub tau: f64,
    pub seed_index: u64,
    pub test_mse: Option<f64>,
    pub status: String,
}

/// Median of the successful MSEs at each grid value, in grid order.
pub fn sweep_medians(grid: &[f64], rows: &[SweepResultRow]) -> Vec<(f64, Option<f64>, usize)> {
    grid.iter()
        .map(|&tau| {
            let mut v: Vec<f64> = rows
                .iter()
                .filter(|r| r.tau == tau)
                .filter_map(|r| r.test_mse)
                .collect();
            (tau, median(&mut v), v.len())
        })
        .collect()
}

pub fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Trains `n_seeds` draws at every `tau` of `grid` on the configured task.
/// The draws are shared across the grid.
pub fn sweep_rows(cfg: &ExperimentConfig, grid: &[f64]) -> CliResult<Vec<SweepResultRow>> {
    let series = task_series(cfg.task)?;
    let mut cells = Vec::new();
    for &tau in grid {
        for k in 0..cfg.n_seeds as u64 {
            cells.push(seed_architecture(cfg, cfg.master_seed, k, tau).map(|a| (k, a))?);
        }
    }
    let mut rows: Vec<SweepResultRow> = cells
        .into_par_iter()
        .map(|(k, arch)| {
            let o = train_seed(cfg, &series, arch, k);
            SweepResultRow {
                tau: o.tau,
                seed_index: k,
                test_mse: o.test_mse(),
                status: o.status(),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.tau
            .total_cmp(&b.tau)
            .then(a.seed_index.cmp(&b.seed_index))
    });
    Ok(rows)
}

/// Writes `sweep.csv`, `sweep_median.csv` and `sweep.svg`.
pub fn write_sweep(dir: &Path, grid: &[f64], rows: &[SweepResultRow]) -> CliResult<()> {
    ensure_dir(dir)?;
    let table: Vec<Vec<Value>> = rows
        .iter()
        .map(|r| {
            vec![
                Value::Float(r.tau),
                Value::Int(r.seed_index),
                r.test_mse.map_or(Value::Missing, Value::Float),
                Value::Text(r.status.clone()),
            ]
        })
        .collect();
    emit_csv(&table, &Schema::sweep(), &dir.join("sweep.csv"))?;
    let medians = sweep_medians(grid, rows);
    let median_rows: Vec<Vec<Value>> = medians
        .iter()
        .map(|(tau, m, n)| {
            vec![
                Value::Float(*tau),
                m.map_or(Value::Missing, Value::Float),
                Value::Int(*n as u64),
            ]
        })
        .collect();
    emit_csv(
        &median_rows,
        &Schema::median(),
        &dir.join("sweep_median.csv"),
    )?;

    // tau = 0 cannot sit on a log axis; place the grid at its index
    let position = |tau: f64| grid.iter().position(|g| *g == tau).unwrap_or(0) as f64;
    let lines = vec![
        Series {
            label: "per seed".into(),
            points: rows
                .iter()
                .filter_map(|r| r.test_mse.map(|m| (position(r.tau), m)))
                .collect(),
            color: PALETTE[2],
            mark: Mark::Points,
        },
        Series {
            label: "median".into(),
            points: medians
                .iter()
                .filter_map(|(t, m, _)| m.map(|m| (position(*t), m)))
                .collect(),
            color: PALETTE[1],
            mark: Mark::Line,
        },
    ];
    let labels: Vec<String> = grid.iter().map(|t| t.to_string()).collect();
    let style = PlotStyle {
        title: format!(
            "test MSE vs evolution time (grid index; tau = {})",
            labels.join(", ")
        ),
        x_label: "tau grid index".into(),
        y_label: "test MSE".into(),
        log_y: true,
        ..PlotStyle::default()
    };
    emit_svg_plot(&lines, &style, &dir.join("sweep.svg"))
}

pub fn run_tau_sweep(cfg: &ExperimentConfig, grid: &[f64]) -> CliResult<Vec<SweepResultRow>> {
    if grid.is_empty() || grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(CliError::Config(
            "tau grid must be nonempty and non-negative".into(),
        ));
    }
    let rows = sweep_rows(cfg, grid)?;
    write_sweep(&cfg.output_dir, grid, &rows)?;
    Ok(rows)
}

/// Largest `|a - b| / max(|a|, |b|, 1e-3)` over entries.
pub fn max_relative_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-3))
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub n_params: usize,
    pub steps: usize,
    pub sensitivity_vs_shift: f64,
    pub sensitivity_vs_fd: f64,
    pub shift_vs_fd: f64,
    pub shift_evaluations: usize,
    /// Shifted evaluations for one angle of the same instance with `D = 1`.
    pub single_param_d1_evaluations: usize,
    pub passed: bool,
}

impl GradCheckReport {
    pub fn to_text(&self) -> String {
        format!(
            "parameters = {}\nsteps = {}\nsensitivity_vs_shift = {:e}\nsensitivity_vs_fd = {:e}\n\
             shift_vs_fd = {:e}\nshift_evaluations = {}\nsingle_param_d1_evaluations = {}\npassed = {}\n",
            self.n_params,
            self.steps,
            self.sensitivity_vs_shift,
            self.sensitivity_vs_fd,
            self.shift_vs_fd,
            self.shift_evaluations,
            self.single_param_d1_evaluations,
            self.passed
        )
    }
}

pub const GRAD_CHECK_STEPS: usize = 5;
pub const GRAD_CHECK_ANALYTIC_TOL: f64 = 1e-8;

/// `n_A = 2`, `n_B = 1`, `D = 2`, `T = 5` with draws from `master_seed`.
pub fn grad_check_instance(
    master_seed: u64,
    depth: usize,
) -> CliResult<(QrnnArchitecture, QrnnParameters, Vec<f64>, Vec<f64>)> {
    let shape = ExperimentConfig {
        n_a: 2,
        n_b: 1,
        depth,
        ..ExperimentConfig::for_task(Task::Cosine)
    };
    let arch = seed_architecture(&shape, master_seed, 0, 0.7)?;
    let mut rng = SplitMix64::new(master_seed ^ 0x5EED);
    let angles = (0..arch.n_angles())
        .map(|_| std::f64::consts::PI * rng.next_symmetric())
        .collect();
    let params = QrnnParameters::new(&arch, angles, 1.0 + 0.5 * rng.next_symmetric())?;
    let inputs = (0..=GRAD_CHECK_STEPS)
        .map(|_| rng.next_symmetric())
        .collect();
    let targets = (0..GRAD_CHECK_STEPS)
        .map(|_| rng.next_symmetric())
        .collect();
    Ok((arch, params, inputs, targets))
}

pub fn grad_check(master_seed: u64) -> CliResult<GradCheckReport> {
    let (arch, params, inputs, targets) = grad_check_instance(master_seed, 2)?;
    let exact = grad_forward_sensitivity(&arch, &params, &inputs, &targets)?;
    let shift = grad_parameter_shift(&arch, &params, &inputs, &targets)?;
    let fd = grad_finite_difference(&arch, &params, &inputs, &targets, 1e-5)?;
    let (arch1, params1, inputs1, targets1) = grad_check_instance(master_seed, 1)?;
    let (_, single) = parameter_shift_entry(&arch1, &params1, &inputs1, &targets1, 0)?;
    let sensitivity_vs_shift = max_relative_gap(exact.entries(), shift.gradient.entries());
    Ok(GradCheckReport {
        n_params: arch.n_params(),
        steps: targets.len(),
        sensitivity_vs_shift,
        sensitivity_vs_fd: max_relative_gap(exact.entries(), fd.entries()),
        shift_vs_fd: max_relative_gap(shift.gradient.entries(), fd.entries()),
        shift_evaluations: shift.evaluation_count,
        single_param_d1_evaluations: single,
        passed: sensitivity_vs_shift <= GRAD_CHECK_ANALYTIC_TOL,
    })
}

/// Runs [`grad_check`] and writes `grad_check.txt`.
pub fn run_grad_check(cfg: &ExperimentConfig) -> CliResult<GradCheckReport> {
    let report = grad_check(cfg.master_seed)?;
    ensure_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join("grad_check.txt");
    std::fs::write(&path, report.to_text()).map_err(|e| CliError::io(&path, e))?;
    Ok(report)
}
