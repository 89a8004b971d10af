//! Config file schemas, one per command. Unknown or missing fields fail
//! with a serde diagnostic naming the field.

use serde::Deserialize;
use shadowlab::io::{AlphabetDto, CaDto, ExhaustionDto, InstanceDto, OrbitDto, SubshiftDto};

fn d_index_side() -> u32 {
    2
}
fn d_n_window() -> u32 {
    1
}
fn d_flip_budget() -> u64 {
    16
}
fn d_seed_bumps() -> u32 {
    12
}
fn d_budget() -> u32 {
    3
}
fn d_test_depth() -> u32 {
    1
}
fn d_max_steps() -> u32 {
    32
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ShadowDemoConfig {
    pub instance: InstanceDto,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default = "d_index_side")]
    pub index_side: u32,
    #[serde(default = "d_n_window")]
    pub n_window: u32,
    /// Direct mode: use this tolerance instead of the derived one.
    #[serde(default)]
    pub delta_override: Option<String>,
    #[serde(default = "d_flip_budget")]
    pub flip_budget: u64,
    #[serde(default = "d_seed_bumps")]
    pub seed_bumps: u32,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub n: u32,
    pub m: u32,
    pub a: u64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ColumnWindowConfig {
    pub subshift: SubshiftDto,
    pub generators: Vec<CaDto>,
    /// Base window `E` of the column factorization.
    pub window: Vec<Vec<u32>>,
    #[serde(default = "d_budget")]
    pub budget: u32,
    #[serde(default = "d_test_depth")]
    pub test_depth: u32,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ChainConfig {
    pub subshift: SubshiftDto,
    /// Base site set whose dilation chain is walked.
    pub window: Vec<Vec<u32>>,
    #[serde(default = "d_max_steps")]
    pub max_steps: u32,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LipschitzConfig {
    pub alphabet: AlphabetDto,
    pub ca: CaDto,
    #[serde(default)]
    pub exhaustion: Option<ExhaustionDto>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ValidatePoConfig {
    pub instance: InstanceDto,
    pub orbit: OrbitDto,
    /// Tolerance to check; defaults to the orbit's declared tolerance.
    #[serde(default)]
    pub delta: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GenPoConfig {
    pub instance: InstanceDto,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "d_index_side")]
    pub index_side: u32,
    #[serde(default = "d_n_window")]
    pub n_window: u32,
    /// Tolerance for the perturbation; defaults to the derived one.
    #[serde(default)]
    pub delta: Option<String>,
    /// 0 emits the exact orbit unchanged.
    #[serde(default = "d_flip_budget")]
    pub flip_budget: u64,
    #[serde(default = "d_seed_bumps")]
    pub seed_bumps: u32,
}
