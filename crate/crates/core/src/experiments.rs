//! Sweep builders behind the CLI: each returns a [`Table`] whose rows are the
//! data behind each experiment, without metadata.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::autocorr::{build_autocov, lambda_max, lambda_max_of_samples, sample_gp, AutocovKind, AutocovSpec};
use crate::error::{Error, Result};
use crate::gram::{
    gershgorin_bounds, gram_complex, gram_real, separation_distance, tradeoff_sweep, worst_case_sigma,
};
use crate::init::{make_model, make_state_vector, sample_timescales, InitSpec, TimescaleRule};
use crate::output::{Cell, Table};
use crate::stability::{empirical_magnitude_with, GaussianInputs, MagnitudeConfig, OutputMode};
use crate::train::{train, Task, TaskKind, TrainConfig, TrainReport};

pub const SPECTRUM_COLUMNS: [&str; 3] = ["kind", "L", "lambda_max"];
pub const MAGNITUDE_COLUMNS: [&str; 7] = ["kind", "L", "alpha", "re", "empirical", "stderr", "bound"];
pub const CONDITION_COLUMNS: [&str; 8] = [
    "scheme",
    "m",
    "lambda_min",
    "lambda_max",
    "condition",
    "separation",
    "bound_lower",
    "bound_upper",
];
pub const TRADEOFF_COLUMNS: [&str; 5] = ["ratio", "condition", "sigma_max", "error", "worst_case"];

/// Maps `f` over `items` on up to `jobs` threads; output order and values do
/// not depend on `jobs`.
pub fn par_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let slots: Vec<Mutex<Option<Result<R>>>> = items.iter().map(|_| Mutex::new(None)).collect();
    let next = Mutex::new(0usize);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = {
                    let mut n = next.lock().unwrap();
                    let i = *n;
                    *n += 1;
                    i
                };
                if i >= items.len() {
                    break;
                }
                *slots[i].lock().unwrap() = Some(f(&items[i]));
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every slot is filled"))
        .collect()
}

/// How λ_max is estimated in [`spectrum_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumSource {
    /// λ_max of the population autocovariance.
    Exact,
    /// λ_max of the sample autocorrelation of this many GP draws.
    Sampled(usize),
}

/// Rows `(kind, L, lambda_max)`.
pub fn spectrum_table(
    kinds: &[String],
    lens: &[usize],
    source: SpectrumSource,
    seed: u64,
    jobs: usize,
) -> Result<Table> {
    let cells: Vec<(String, usize)> = kinds
        .iter()
        .flat_map(|k| lens.iter().map(move |&l| (k.clone(), l)))
        .collect();
    let values = par_map(&cells, jobs, |(kind, len)| {
        let k = build_autocov(&AutocovSpec::new(AutocovKind::parse(kind, seed)?, *len))?;
        match source {
            SpectrumSource::Exact => Ok(lambda_max(&k)?.lambda_max),
            SpectrumSource::Sampled(n) => {
                let x = sample_gp(&k, n, seed.wrapping_add(*len as u64))?;
                Ok(lambda_max_of_samples(&x)?.lambda_max)
            }
        }
    })?;
    let mut table = Table::new(&SPECTRUM_COLUMNS);
    for ((kind, len), lam) in cells.iter().zip(values) {
        table.push(vec![kind.as_str().into(), (*len).into(), lam.into()]);
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeGrid {
    pub kinds: Vec<String>,
    pub lens: Vec<usize>,
    /// `Δ = L^{-alpha}`.
    pub alphas: Vec<f64>,
    /// Common real part of every S4D-Lin mode.
    pub reals: Vec<f64>,
    pub m: usize,
    pub n_c: usize,
    pub n_x: usize,
    pub mode: OutputMode,
}

impl MagnitudeGrid {
    pub fn new(kinds: &[&str], lens: &[usize], alphas: &[f64], reals: &[f64]) -> Self {
        Self {
            kinds: kinds.iter().map(|k| k.to_string()).collect(),
            lens: lens.to_vec(),
            alphas: alphas.to_vec(),
            reals: reals.to_vec(),
            m: 4,
            n_c: crate::stability::DEFAULT_DRAWS,
            n_x: crate::stability::DEFAULT_DRAWS,
            mode: OutputMode::Final,
        }
    }
}

/// Rows `(kind, L, alpha, re, empirical, stderr, bound)`. Every cell has its
/// own seed derived from `seed` and its position in the grid.
pub fn magnitude_table(grid: &MagnitudeGrid, seed: u64, jobs: usize) -> Result<Table> {
    let blocks: Vec<(String, usize)> = grid
        .kinds
        .iter()
        .flat_map(|k| grid.lens.iter().map(move |&l| (k.clone(), l)))
        .collect();
    let inputs = par_map(&blocks, jobs, |(kind, len)| {
        let k = build_autocov(&AutocovSpec::new(AutocovKind::parse(kind, seed)?, *len))?;
        GaussianInputs::new(&k)
    })?;
    let mut cells = Vec::new();
    for b in 0..blocks.len() {
        for &alpha in &grid.alphas {
            for &re in &grid.reals {
                cells.push((cells.len(), b, alpha, re));
            }
        }
    }
    let reports = par_map(&cells, jobs, |&(index, b, alpha, re)| {
        let len = blocks[b].1;
        let w = make_state_vector(&InitSpec::s4d_lin(grid.m).with_real_part(re))?;
        let config = MagnitudeConfig {
            n_c: grid.n_c,
            n_x: grid.n_x,
            seed: seed.wrapping_add(index as u64),
            mode: grid.mode,
        };
        empirical_magnitude_with(&w, (len as f64).powf(-alpha), &inputs[b], &config)
    })?;
    let mut table = Table::new(&MAGNITUDE_COLUMNS);
    for (&(_, b, alpha, re), r) in cells.iter().zip(reports) {
        let (kind, len) = &blocks[b];
        table.push(vec![
            kind.as_str().into(),
            (*len).into(),
            alpha.into(),
            re.into(),
            r.empirical.into(),
            r.stderr.into(),
            r.bound.into(),
        ]);
    }
    Ok(table)
}

/// Rows `(scheme, m, lambda_min, lambda_max, condition, separation,
/// bound_lower, bound_upper)`; the Gershgorin-type bounds are NaN for real
/// nodes.
pub fn condition_table(scheme: &str, ms: &[usize], jobs: usize) -> Result<Table> {
    let rows = par_map(ms, jobs, |&m| {
        let (spec, real) = match scheme {
            "s4d-lin" => (InitSpec::s4d_lin(m), false),
            "s4d-real" => (InitSpec::s4d_real(m), true),
            other => {
                return Err(Error::Parse(format!(
                    "unknown scheme '{other}' (expected s4d-lin, s4d-real)"
                )))
            }
        };
        let w = make_state_vector(&spec)?;
        let (g, nodes) = if real {
            (gram_real(w.real())?, w.real().to_vec())
        } else {
            (gram_complex(w.imag()), w.imag().to_vec())
        };
        let ev = g.eigenvalues();
        let sep = separation_distance(&nodes);
        let (lower, upper) = if real {
            (f64::NAN, f64::NAN)
        } else {
            let b = gershgorin_bounds(sep)?;
            (b.lower, b.upper)
        };
        Ok(vec![
            Cell::from(scheme),
            m.into(),
            ev[0].into(),
            ev[ev.len() - 1].into(),
            g.condition_number().into(),
            sep.into(),
            lower.into(),
            upper.into(),
        ])
    })?;
    let mut table = Table::new(&CONDITION_COLUMNS);
    for r in rows {
        table.push(r);
    }
    Ok(table)
}

/// Rows `(ratio, condition, sigma_max, error, worst_case)` with the uniform
/// unit-norm target read-out.
pub fn tradeoff_table(xi: &[f64], ratios: &[f64]) -> Result<Table> {
    let worst = worst_case_sigma(xi);
    let mut table = Table::new(&TRADEOFF_COLUMNS);
    for row in tradeoff_sweep(xi, ratios)? {
        table.push(vec![
            row.ratio.into(),
            row.condition.into(),
            row.sigma_max.into(),
            row.error.into(),
            worst.into(),
        ]);
    }
    Ok(table)
}

/// Settings shared by the shift/first-last single-channel runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftRun {
    pub kind: TaskKind,
    pub len: usize,
    pub m: usize,
    pub real_part: f64,
    pub zero_real_fraction: f64,
    pub delta: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub config: TrainConfig,
}

impl ShiftRun {
    /// Shift task at `L = 128`, `m = 32`, `Δ = 1/√L`, read-out learning rate
    /// 0.01.
    pub fn new(real_part: f64, seed: u64) -> Self {
        let len = 128;
        Self {
            kind: TaskKind::Shift,
            len,
            m: 32,
            real_part,
            zero_real_fraction: 0.0,
            delta: 1.0 / (len as f64).sqrt(),
            n_train: 1000,
            n_test: 1000,
            seed,
            config: TrainConfig {
                lr_readout: 0.01,
                seed,
                ..TrainConfig::default()
            },
        }
    }

    pub fn run(&self) -> Result<TrainReport> {
        let spec = InitSpec::s4d_lin(self.m)
            .with_real_part(self.real_part)
            .with_zero_real_fraction(self.zero_real_fraction)
            .with_seed(self.seed);
        let model = make_model(&spec, self.delta)?;
        let mut task = Task::new(self.kind.clone(), self.len);
        task.seed = self.seed;
        task.n_train = self.n_train;
        task.n_test = self.n_test;
        train(vec![model], &task, &self.config)
    }
}

/// Multi-channel copying with per-channel `Δ ~ U[delta_min, delta_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopyingRun {
    pub channels: usize,
    pub len: usize,
    pub delay: usize,
    pub m: usize,
    pub real_part: f64,
    pub zero_real_fraction: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub config: TrainConfig,
}

impl CopyingRun {
    /// `d = 128`, `L = 128`, delay `L/2`, `m = 32`, `Δ_max = 0.1`.
    pub fn new(delta_min: f64, seed: u64) -> Self {
        let len = 128;
        Self {
            channels: 128,
            len,
            delay: len / 2,
            m: 32,
            real_part: -0.5,
            zero_real_fraction: 0.0,
            delta_min,
            delta_max: 0.1,
            n_train: 1000,
            n_test: 1000,
            seed,
            config: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
        }
    }

    pub fn run(&self) -> Result<TrainReport> {
        let rule = TimescaleRule::uniform(self.delta_min, self.delta_max)?;
        let deltas = sample_timescales(&rule, self.channels, self.seed)?;
        let models = deltas
            .iter()
            .enumerate()
            .map(|(i, &dt)| {
                let spec = InitSpec::s4d_lin(self.m)
                    .with_real_part(self.real_part)
                    .with_zero_real_fraction(self.zero_real_fraction)
                    .with_seed(self.seed.wrapping_mul(1000).wrapping_add(i as u64));
                make_model(&spec, dt)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut task = Task::new(
            TaskKind::Copying {
                channels: self.channels,
                delay: self.delay,
            },
            self.len,
        );
        task.seed = self.seed;
        task.n_train = self.n_train;
        task.n_test = self.n_test;
        train(models, &task, &self.config)
    }
}
