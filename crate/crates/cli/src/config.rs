//! Flag and config-file settings. A TOML file uses the long flag names as
//! keys; flags given on the command line win over file values.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use urnlab::mc::Estimator;
use urnlab::moments::System;
use urnlab::{Composition, UrnSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemArg {
    Dt,
    Ct,
}

impl From<SystemArg> for System {
    fn from(s: SystemArg) -> Self {
        match s {
            SystemArg::Dt => System::Dt,
            SystemArg::Ct => System::Ct,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorArg {
    Completed,
    Truncated,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Completed => Estimator::Completed,
            EstimatorArg::Truncated => Estimator::Truncated,
        }
    }
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// Replacement matrix a,b,c,d
    #[arg(long, global = true, value_delimiter = ',', num_args = 1)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<u32>>,

    /// Initial composition, one count per color
    #[arg(long, global = true, value_delimiter = ',', num_args = 1)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<u64>>,

    /// Number of draws (horizon)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,

    /// Monte Carlo sample size
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iters: Option<u64>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_order: Option<usize>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemArg>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorArg>,

    /// Balance S
    #[arg(long = "S", visible_alias = "balance", global = true)]
    #[serde(skip_serializing_if = "Option::is_none", alias = "S")]
    pub balance: Option<u64>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pmax: Option<usize>,

    /// Exponents p_1,...,p_d
    #[arg(long, global = true, value_delimiter = ',', num_args = 1)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub powers: Option<Vec<u32>>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,

    /// Grid size
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,

    /// Half-width of the density grid in standard deviations
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,

    /// Primary artifact path; companions are written next to it
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// Worker cap; results do not depend on it
    #[arg(long, global = true, env = "URNLAB_THREADS")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

impl Settings {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Values from `flags` replace those in `self`.
    pub fn overlay(mut self, flags: Settings) -> Self {
        let s = &mut self;
        overlay!(
            s, flags, matrix, init, steps, samples, particles, iters, seed, max_order, system, estimator, balance,
            pmax, powers, t_max, points, width, out, threads
        );
        self
    }

    pub fn spec(&self) -> anyhow::Result<UrnSpec> {
        let Some(m) = &self.matrix else { bail!("--matrix is required") };
        let [a, b, c, d] = m[..] else {
            bail!("--matrix takes four entries a,b,c,d, got {}", m.len())
        };
        Ok(UrnSpec::new(a, b, c, d)?)
    }

    pub fn large_spec(&self) -> anyhow::Result<UrnSpec> {
        let spec = self.spec()?;
        spec.require_large()?;
        Ok(spec)
    }

    /// Two-color composition, `(1, 0)` when unset.
    pub fn composition(&mut self) -> anyhow::Result<Composition> {
        let init = self.init.get_or_insert_with(|| vec![1, 0]);
        let [r, b] = init[..] else {
            bail!("--init takes two counts red,black, got {}", init.len())
        };
        Ok(Composition::new(r, b)?)
    }

    pub fn seed(&self) -> anyhow::Result<u64> {
        self.seed.context("--seed is required for stochastic commands")
    }

    pub fn system(&self) -> anyhow::Result<SystemArg> {
        self.system.context("--system is required (dt or ct)")
    }
}

pub fn positive<T: PartialOrd + Default + Copy + std::fmt::Display>(name: &str, value: T) -> anyhow::Result<T> {
    if value <= T::default() {
        bail!("--{name} must be positive, got {value}");
    }
    Ok(value)
}
