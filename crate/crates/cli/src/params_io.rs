//! Trained parameters as `name = value` lines, with run metadata in comments.

use std::path::Path;

use qrnn_core::{QrnnArchitecture, QrnnParameters};

use crate::config::Task;
use crate::error::{CliError, CliResult};
use crate::table::format_g17;

/// Where a parameter set came from; enough to rebuild its architecture.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamsMeta {
    pub task: Task,
    pub seed_index: u64,
    pub master_seed: u64,
    pub tau: f64,
}

pub fn params_to_text(
    arch: &QrnnArchitecture,
    params: &QrnnParameters,
    meta: &ParamsMeta,
) -> String {
    let mut out = format!(
        "# task = {}\n# seed_index = {}\n# master_seed = {}\n# tau = {}\n# n_a = {}\n# n_b = {}\n# depth = {}\n",
        meta.task,
        meta.seed_index,
        meta.master_seed,
        format_g17(meta.tau),
        arch.n_a(),
        arch.n_b(),
        arch.depth()
    );
    for (name, value) in QrnnParameters::names(arch).iter().zip(params.to_flat()) {
        out.push_str(&format!("{name} = {}\n", format_g17(value)));
    }
    out
}

pub fn save_params(
    path: &Path,
    arch: &QrnnArchitecture,
    params: &QrnnParameters,
    meta: &ParamsMeta,
) -> CliResult<()> {
    std::fs::write(path, params_to_text(arch, params, meta)).map_err(|e| CliError::io(path, e))
}

/// Parsed parameter file: metadata, shape and values in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamsFile {
    pub meta: ParamsMeta,
    pub n_a: usize,
    pub n_b: usize,
    pub depth: usize,
    pub entries: Vec<(String, f64)>,
}

impl ParamsFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut meta = std::collections::HashMap::new();
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let (is_meta, body) = match line.strip_prefix('#') {
                Some(rest) => (true, rest.trim()),
                None => (false, line),
            };
            let Some((k, v)) = body.split_once('=') else {
                if is_meta {
                    continue;
                }
                return Err(CliError::ConfigLine {
                    line: i + 1,
                    message: format!("expected `name = value`, found `{line}`"),
                });
            };
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if is_meta {
                meta.insert(k, v);
            } else {
                let value = v.parse::<f64>().map_err(|_| CliError::ConfigLine {
                    line: i + 1,
                    message: format!("invalid number `{v}`"),
                })?;
                entries.push((k, value));
            }
        }
        let get = |k: &str| {
            meta.get(k)
                .cloned()
                .ok_or_else(|| CliError::Config(format!("parameter file lacks `# {k} = ...`")))
        };
        let num = |k: &str| -> CliResult<u64> {
            get(k)?
                .parse()
                .map_err(|_| CliError::Config(format!("bad `{k}` in parameter file")))
        };
        Ok(Self {
            meta: ParamsMeta {
                task: get("task")?.parse().map_err(CliError::Config)?,
                seed_index: num("seed_index")?,
                master_seed: num("master_seed")?,
                tau: get("tau")?
                    .parse()
                    .map_err(|_| CliError::Config("bad `tau` in parameter file".into()))?,
            },
            n_a: num("n_a")? as usize,
            n_b: num("n_b")? as usize,
            depth: num("depth")? as usize,
            entries,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Values checked against the canonical names of `arch`.
    pub fn parameters(&self, arch: &QrnnArchitecture) -> CliResult<QrnnParameters> {
        let names = QrnnParameters::names(arch);
        if names.len() != self.entries.len()
            || names.iter().zip(&self.entries).any(|(n, (m, _))| n != m)
        {
            return Err(CliError::Config(
                "parameter names do not match the architecture layout".into(),
            ));
        }
        let flat: Vec<f64> = self.entries.iter().map(|e| e.1).collect();
        Ok(QrnnParameters::from_flat(arch, &flat)?)
    }
}
