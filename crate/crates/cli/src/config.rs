//! Experiment configurations shared by the flag parser and `run --config`.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

/// Caps that keep desk-scale runs bounded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    pub max_depth: u32,
    pub max_trials: u64,
    pub max_cells: usize,
    pub max_members: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_depth: 4096,
            max_trials: 1_000_000,
            max_cells: 1 << 22,
            max_members: 4096,
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsArgs {
    /// Sequence `x` for grid counts of `K(x)^d`
    #[arg(long, conflicts_with = "points")]
    pub word: Option<String>,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "one")]
    pub d: usize,
    /// Deepest level
    #[arg(long)]
    pub depth: u32,
    /// CSV of points: report `N_n` and `P_n` for levels `0..=depth` instead
    #[arg(long)]
    #[serde(default)]
    pub points: Option<PathBuf>,
    #[arg(long, default_value = "euclidean")]
    #[serde(default = "euclidean")]
    pub metric: String,
}

fn euclidean() -> String {
    "euclidean".into()
}

fn nearest() -> String {
    "nearest".into()
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizeArgs {
    /// Target set of dimensions
    #[arg(long)]
    pub spec: String,
    /// Branch `x` of the coding tree
    #[arg(long)]
    pub word: String,
    #[arg(long)]
    pub blocks: usize,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "one")]
    pub d: usize,
    /// `nearest` or `minimal`
    #[arg(long, default_value = "nearest")]
    #[serde(default = "nearest")]
    pub rule: String,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoomArgs {
    #[arg(long)]
    pub k: String,
    #[arg(long)]
    pub depth: u32,
    /// Scale exponent: the view is `(2^m K + u) ∩ [0,1]^d`
    #[arg(long)]
    pub m: u32,
    /// Translation, comma separated dyadic rationals
    #[arg(long, allow_hyphen_values = true)]
    pub u: String,
    /// Also write the view in the binary set format
    #[arg(long)]
    #[serde(default)]
    pub bin: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercolateArgs {
    #[arg(long)]
    pub k: String,
    /// Constant retention exponent: cubes survive with probability `2^{-beta}`
    #[arg(long)]
    pub beta: String,
    #[arg(long)]
    pub depth: u32,
    #[arg(long)]
    pub trials: u64,
    /// Write the survivors of trial 0 in the binary set format
    #[arg(long)]
    #[serde(default)]
    pub sample_out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HawkesArgs {
    #[arg(long)]
    pub k: String,
    #[arg(long)]
    pub beta: String,
    /// Comma separated depths
    #[arg(long)]
    pub depths: String,
    #[arg(long)]
    pub trials: u64,
}

fn linear() -> String {
    "linear".into()
}

fn k_cap() -> u32 {
    60
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyArgs {
    #[arg(long)]
    pub net: String,
    #[arg(long, default_value = "euclidean")]
    #[serde(default = "euclidean")]
    pub metric: String,
    /// `box` or `packing`
    #[arg(long)]
    pub variant: String,
    /// Target set of dimensions
    #[arg(long)]
    pub spec: String,
    /// Per-level caps `α_0 ≤ α_1 ≤ …`; a single value is repeated
    #[arg(long)]
    pub alphas: String,
    #[arg(long)]
    pub depth: usize,
    /// Build only the member along this sequence
    #[arg(long)]
    #[serde(default)]
    pub word: Option<String>,
    /// `linear` or `packing_count`
    #[arg(long, default_value = "linear")]
    #[serde(default = "linear")]
    pub level_fn: String,
    #[arg(long, default_value_t = 60)]
    #[serde(default = "k_cap")]
    pub k_cap: u32,
    /// Skip the pairwise continuity check
    #[arg(long)]
    #[serde(default)]
    pub no_continuity: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "snake_case")]
pub enum Command {
    Realize(RealizeArgs),
    Percolate(PercolateArgs),
    Hawkes(HawkesArgs),
    Family(FamilyArgs),
    Dims(DimsArgs),
    Zoom(ZoomArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Realize(_) => "realize",
            Command::Percolate(_) => "percolate",
            Command::Hawkes(_) => "hawkes",
            Command::Family(_) => "family",
            Command::Dims(_) => "dims",
            Command::Zoom(_) => "zoom",
        }
    }
}

/// Everything a run depends on. Same config, same artifacts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub command: Command,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub limits: Limits,
}
