//! Experiment configuration: flat `key = value` files with `#` comments.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qrnn_core::training::TrainConfig;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Cosine,
    Triangle,
    Spin,
}

impl Task {
    pub fn default_tau(self) -> f64 {
        match self {
            Task::Cosine | Task::Triangle => 0.2,
            Task::Spin => 0.18,
        }
    }

    /// `(total_len, train_len)` of the benchmark series.
    pub fn lengths(self) -> (usize, usize) {
        match self {
            Task::Cosine | Task::Triangle => (200, 100),
            Task::Spin => (500, 200),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Cosine => "cosine",
            Task::Triangle => "triangle",
            Task::Spin => "spin",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine" => Ok(Task::Cosine),
            "triangle" => Ok(Task::Triangle),
            "spin" => Ok(Task::Spin),
            other => Err(format!(
                "unknown task `{other}` (expected cosine, triangle or spin)"
            )),
        }
    }
}

pub const DEFAULT_TAU_GRID: [f64; 9] = [0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub n_a: usize,
    pub n_b: usize,
    pub depth: usize,
    pub tau: f64,
    pub n_seeds: usize,
    pub master_seed: u64,
    pub test_window: usize,
    pub output_dir: PathBuf,
    pub train: TrainConfig,
    pub tau_grid: Vec<f64>,
}

impl ExperimentConfig {
    pub fn for_task(task: Task) -> Self {
        Self {
            task,
            n_a: 3,
            n_b: 3,
            depth: 3,
            tau: task.default_tau(),
            n_seeds: 10,
            master_seed: 0,
            test_window: 25,
            output_dir: PathBuf::from("out"),
            train: TrainConfig::default(),
            tau_grid: DEFAULT_TAU_GRID.to_vec(),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let fail = |m: &str| Err(CliError::Config(m.to_string()));
        if self.n_a == 0 || self.n_b == 0 || self.depth == 0 {
            return fail("n_a, n_b and depth must be positive");
        }
        if self.n_a + self.n_b > 10 {
            return fail("n_a + n_b above 10 qubits is not supported");
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return fail("tau must be a finite non-negative number");
        }
        if self.n_seeds == 0 {
            return fail("n_seeds must be at least 1");
        }
        if self.test_window == 0 {
            return fail("test_window must be at least 1");
        }
        let (total, train) = self.task.lengths();
        if self.test_window > total - train {
            return fail("test_window is longer than the test segment");
        }
        if self.tau_grid.is_empty() || self.tau_grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite())
        {
            return fail("tau_grid must be a nonempty list of non-negative numbers");
        }
        self.train
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses a config file. `task` may appear anywhere; `tau` defaults to the
    /// task's value when absent.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CliError::ConfigLine {
                line: i + 1,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            entries.push((i + 1, key.trim().to_string(), value.trim().to_string()));
        }

        let task = match entries.iter().rev().find(|(_, k, _)| k == "task") {
            Some((line, _, v)) => v.parse::<Task>().map_err(|message| CliError::ConfigLine {
                line: *line,
                message,
            })?,
            None => Task::Cosine,
        };
        let mut cfg = Self::for_task(task);
        for (line, key, value) in entries {
            cfg.set(&key, &value)
                .map_err(|message| CliError::ConfigLine { line, message })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("invalid value `{value}` for `{key}`"))
        }
        match key {
            "task" => self.task = value.parse()?,
            "n_a" => self.n_a = num(key, value)?,
            "n_b" => self.n_b = num(key, value)?,
            "depth" => self.depth = num(key, value)?,
            "tau" => self.tau = num(key, value)?,
            "n_seeds" => self.n_seeds = num(key, value)?,
            "master_seed" => self.master_seed = num(key, value)?,
            "test_window" => self.test_window = num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "max_iterations" => self.train.max_iterations = num(key, value)?,
            "grad_norm_tol" => self.train.grad_norm_tol = num(key, value)?,
            "wolfe_c1" => self.train.wolfe_c1 = num(key, value)?,
            "wolfe_c2" => self.train.wolfe_c2 = num(key, value)?,
            "max_line_search_steps" => self.train.max_line_search_steps = num(key, value)?,
            "tau_grid" => {
                self.tau_grid = value
                    .split(',')
                    .map(|t| num(key, t.trim()))
                    .collect::<Result<_, _>>()?
            }
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// The config in the file format accepted by [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        let grid: Vec<String> = self.tau_grid.iter().map(|t| t.to_string()).collect();
        format!(
            "task = {}\nn_a = {}\nn_b = {}\ndepth = {}\ntau = {}\nn_seeds = {}\nmaster_seed = {}\n\
             test_window = {}\noutput_dir = {}\nmax_iterations = {}\ngrad_norm_tol = {:e}\n\
             wolfe_c1 = {:e}\nwolfe_c2 = {}\nmax_line_search_steps = {}\ntau_grid = {}\n",
            self.task,
            self.n_a,
            self.n_b,
            self.depth,
            self.tau,
            self.n_seeds,
            self.master_seed,
            self.test_window,
            self.output_dir.display(),
            self.train.max_iterations,
            self.train.grad_norm_tol,
            self.train.wolfe_c1,
            self.train.wolfe_c2,
            self.train.max_line_search_steps,
            grid.join(", "),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_task() {
        let c = ExperimentConfig::parse("task = spin\n").unwrap();
        assert_eq!(c.tau, 0.18);
        assert_eq!(c.test_window, 25);
        let c = ExperimentConfig::parse("# nothing\n\n").unwrap();
        assert_eq!((c.task, c.tau), (Task::Cosine, 0.2));
        let c = ExperimentConfig::parse("tau = 0.5\ntask = triangle\n").unwrap();
        assert_eq!((c.task, c.tau), (Task::Triangle, 0.5));
    }

    #[test]
    fn every_key_round_trips() {
        let text = "task = triangle\nn_a = 2\nn_b = 1\ndepth = 2\ntau = 0.3 # inline\n\
                    n_seeds = 4\nmaster_seed = 99\ntest_window = 10\noutput_dir = runs/a\n\
                    max_iterations = 50\ngrad_norm_tol = 1e-5\nwolfe_c1 = 1e-3\nwolfe_c2 = 0.8\n\
                    max_line_search_steps = 12\ntau_grid = 0, 0.5, 2\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.n_a, 2);
        assert_eq!(c.output_dir, PathBuf::from("runs/a"));
        assert_eq!(c.tau_grid, vec![0.0, 0.5, 2.0]);
        assert_eq!(c.train.max_line_search_steps, 12);
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "colour = blue\n",
            "n_a\n",
            "n_a = three\n",
            "task = sine\n",
            "n_seeds = 0\n",
            "wolfe_c1 = 0.95\n",
            "tau = -1\n",
            "tau_grid = \n",
            "test_window = 0\n",
        ] {
            let err = ExperimentConfig::parse(bad).unwrap_err();
            assert_eq!(err.exit_code(), crate::error::exit::USAGE, "{bad}");
        }
        match ExperimentConfig::parse("depth = 2\nbogus = 1\n").unwrap_err() {
            CliError::ConfigLine { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
