use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use clustercert::geometry::{sample, Cube, FunctionSpec, GridFunction, GridSpec};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Corollary {
    W1p,
    Bv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Gagliardo,
    Grad,
    Bv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Scaling,
    Embedding,
    /// The embedding sweep repeated at increasing resolution.
    Refinement,
}

/// Every parameter any subcommand reads. Flags override values loaded with
/// `--config`; the merged bundle is what `--save-config` writes.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// GridFunction JSON file to read.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,

    /// File to write the primary JSON output to (it is also printed).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,

    /// FunctionSpec as inline JSON or a path to a JSON file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,

    /// "N", "N,m" (unit cube) or "N,m,center...,side".
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,

    /// Fractional order(s).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<f64>>,

    /// Integrability exponent(s).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,

    /// Level(s); `search` uses the first one.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,

    /// Derive γ from a gradient (w1p) or total-variation (bv) budget.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corollary: Option<Corollary>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_prime: Option<f64>,

    /// Use the closed-form ball bound for the embedding constant.
    #[arg(long)]
    pub rigorous: bool,

    /// Cross-check the Gagliardo seminorm against the reference loop.
    #[arg(long)]
    pub oracle: bool,

    /// Seminorms to compute.
    #[arg(long, value_enum, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub which: Option<Vec<Which>>,

    /// Dimension(s) for `bound` and `verify`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<Vec<usize>>,

    /// Grid resolution for `verify`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,

    /// Cube sides for the scaling suite.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,

    /// Corpus entries for `verify` (default: all that apply).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<Vec<String>>,

    /// Seed override for random-trig functions.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// CSV file for external plotting.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plot_data: Option<PathBuf>,

    #[arg(long, env = "CLUSTERCERT_WORKERS")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

macro_rules! overlay {
    ($cli:ident, $file:ident; $($opt:ident),*; $($flag:ident),*) => {
        Params {
            $($opt: $cli.$opt.or($file.$opt),)*
            $($flag: $cli.$flag || $file.$flag,)*
        }
    };
}

impl Params {
    /// Values given on the command line win over those from the file.
    pub fn over(self, file: Params) -> Params {
        let cli = self;
        overlay!(cli, file;
            input, output, function, grid, s, p, c, alpha, gamma, delta, lambda,
            corollary, gamma_prime, which, dim, m, suite, radii, corpus, seed,
            plot_data, workers;
            rigorous, oracle)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1)
    }

    pub fn first_s(&self) -> Result<f64> {
        first(&self.s, "--s")
    }

    pub fn first_p(&self) -> Result<f64> {
        first(&self.p, "--p")
    }

    pub fn first_c(&self) -> Result<f64> {
        first(&self.c, "--c")
    }

    pub fn function_spec(&self) -> Result<Option<FunctionSpec<f64>>> {
        let Some(raw) = &self.function else {
            return Ok(None);
        };
        let text = if raw.trim_start().starts_with('{') {
            raw.clone()
        } else {
            fs::read_to_string(raw).with_context(|| format!("reading function spec {raw}"))?
        };
        let mut spec = FunctionSpec::from_json(&text).context("parsing function spec")?;
        if let Some(seed) = self.seed {
            spec = spec.with_seed(seed);
        }
        Ok(Some(spec))
    }

    pub fn grid_spec(&self) -> Result<Option<GridSpec<f64>>> {
        self.grid.as_deref().map(parse_grid).transpose()
    }

    /// The grid function from `--input`, or sampled from `--function` on `--grid`.
    pub fn grid_function(&self) -> Result<GridFunction<f64>> {
        if let Some(path) = &self.input {
            if self.function.is_some() {
                bail!("--input and --function are mutually exclusive");
            }
            return read_grid(path);
        }
        let spec = self
            .function_spec()?
            .context("either --input or --function is required")?;
        let grid = self.grid_spec()?.context("--grid is required with --function")?;
        Ok(sample(&spec, &grid)?)
    }
}

fn first(v: &Option<Vec<f64>>, flag: &str) -> Result<f64> {
    match v.as_deref() {
        Some([x, ..]) => Ok(*x),
        _ => bail!("{flag} is required"),
    }
}

pub fn default_m(dim: usize) -> usize {
    match dim {
        2 => 120,
        3 => 24,
        1 => 240,
        _ => 8,
    }
}

pub fn parse_grid(text: &str) -> Result<GridSpec<f64>> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let dim: usize = parts[0]
        .parse()
        .with_context(|| format!("bad dimension in --grid {text:?}"))?;
    if dim == 0 {
        bail!("grid dimension must be at least 1");
    }
    let m: usize = match parts.get(1) {
        Some(m) => m
            .parse()
            .with_context(|| format!("bad resolution in --grid {text:?}"))?,
        None => default_m(dim),
    };
    let cube = match parts.len() {
        1 | 2 => Cube::unit(dim)?,
        n if n == dim + 3 => {
            let nums = parts[2..]
                .iter()
                .map(|x| x.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| format!("bad number in --grid {text:?}"))?;
            Cube::new(nums[..dim].to_vec(), nums[dim])?
        }
        n => bail!("--grid expects 1, 2 or {} fields for N={dim}, got {n}", dim + 3),
    };
    Ok(GridSpec::new(cube, m)?)
}

pub fn read_grid(path: &Path) -> Result<GridFunction<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing grid function {}", path.display()))
}

/// A serialized run: the subcommand and its merged parameters.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    #[serde(flatten)]
    pub params: Params,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing run config {}", path.display()))
    }
}
