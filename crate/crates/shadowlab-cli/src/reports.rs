//! Serializable report shapes written into run directories. These mirror
//! the library's report types field-for-field, with exact values rendered
//! as strings (`"1/8"`, `"2^-3"`) so payloads stay bit-stable across runs.

use serde::{Deserialize, Serialize};
use shadowlab::cellauto::LipschitzBound;
use shadowlab::columnfact::ChainReport;
use shadowlab::io::{CertificateDto, NoSolutionDto};
use shadowlab::lattice::SiteSet;
use shadowlab::shadowing::{
    CounterexampleReport, DeltaParameters, TrialReport, ValidationReport,
};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase")]
pub struct DeltaParamsDto {
    pub resolution_level: u32,
    pub lipschitz: u64,
    pub window: u32,
    pub generators: usize,
    pub delta: String,
    pub certified: bool,
}

impl DeltaParamsDto {
    pub fn from_core(p: &DeltaParameters) -> Self {
        DeltaParamsDto {
            resolution_level: p.resolution_level,
            lipschitz: p.lipschitz,
            window: p.window,
            generators: p.generators,
            delta: p.delta.to_string(),
            certified: p.certified,
        }
    }
}

/// A box summarized by its corners (run boxes are always full rectangles).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase")]
pub struct BoxDto {
    pub lo: Vec<u32>,
    pub hi: Vec<u32>,
    pub sites: usize,
}

impl BoxDto {
    pub fn from_set(set: &SiteSet) -> Self {
        let (lo, hi) = set
            .bounding_box()
            .map(|(a, b)| (a.coords().to_vec(), b.coords().to_vec()))
            .unwrap_or_default();
        BoxDto {
            lo,
            hi,
            sites: set.len(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase")]
pub struct ViolationDto {
    pub generator: usize,
    pub alpha: Vec<u32>,
    pub distance: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase")]
pub struct ValidationDto {
    pub valid: bool,
    pub resolution_level: u32,
    pub pairs_checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_violation: Option<ViolationDto>,
}

impl ValidationDto {
    pub fn from_core(v: &ValidationReport) -> Self {
        ValidationDto {
            valid: v.valid,
            resolution_level: v.resolution_level,
            pairs_checked: v.pairs_checked,
            first_violation: v.first_violation.as_ref().map(|f| ViolationDto {
                generator: f.generator,
                alpha: f.alpha.coords().to_vec(),
                distance: f.distance.to_string(),
            }),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase")]
pub struct PerturbDto {
    pub placements: usize,
    pub kernel_dim: usize,
    pub moves: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase")]
pub struct TrialDto {
    pub index: u64,
    pub delta: String,
    pub delta_level: u32,
    pub delta_params: DeltaParamsDto,
    pub spatial_box: BoxDto,
    pub perturb: PerturbDto,
    pub validation: ValidationDto,
    pub solved: bool,
    pub verified: bool,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_bound: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub no_solution: Option<NoSolutionDto>,
}

impl TrialDto {
    pub fn from_report(index: u64, r: &TrialReport) -> Self {
        TrialDto {
            index,
            delta: r.delta.to_string(),
            delta_level: r.delta_level,
            delta_params: DeltaParamsDto::from_core(&r.params),
            spatial_box: BoxDto::from_set(&r.spatial_box),
            perturb: PerturbDto {
                placements: r.perturb_placements,
                kernel_dim: r.perturb_kernel_dim,
                moves: r.perturb_moves,
                notice: r.perturb_notice.clone(),
            },
            validation: ValidationDto::from_core(&r.validation),
            solved: r.solved,
            verified: r.verified,
            success: r.success,
            residual_bound: r.residual_bound.map(|b| b.to_string()),
            certificate: r.certificate.as_ref().map(CertificateDto::from_core),
            no_solution: r.no_solution.as_ref().map(NoSolutionDto::from_core),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase")]
pub struct CandidateDto {
    pub symbol: u64,
    pub witness: u64,
    pub witness_in_en: bool,
    pub distance: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase")]
pub struct CounterexampleDto {
    pub n: u32,
    pub m: u32,
    pub alphabet_size: u64,
    pub delta: String,
    pub epsilon: String,
    pub orbit_valid: bool,
    pub pairs_checked: u64,
    pub window_level: u32,
    pub candidates: Vec<CandidateDto>,
    pub shadowing_point_exists: bool,
}

impl CounterexampleDto {
    pub fn from_core(r: &CounterexampleReport) -> Self {
        CounterexampleDto {
            n: r.n,
            m: r.m,
            alphabet_size: r.alphabet_size,
            delta: r.delta.to_string(),
            epsilon: r.epsilon.to_string(),
            orbit_valid: r.orbit_valid,
            pairs_checked: r.pairs_checked,
            window_level: r.window_level,
            candidates: r
                .candidates
                .iter()
                .map(|c| CandidateDto {
                    symbol: c.symbol,
                    witness: c.witness,
                    witness_in_en: c.witness_in_en,
                    distance: c.distance.to_string(),
                })
                .collect(),
            shadowing_point_exists: r.shadowing_point_exists,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase")]
pub struct ChainDto {
    pub dims: Vec<usize>,
    /// Cardinalities as decimal strings (they can exceed 64 bits).
    pub cards: Vec<String>,
    pub stabilization_index: Option<u32>,
    pub stabilized: bool,
    pub strict_drops: u32,
}

impl ChainDto {
    pub fn from_core(r: &ChainReport) -> Self {
        ChainDto {
            dims: r.dims.clone(),
            cards: r.cards.iter().map(u128::to_string).collect(),
            stabilization_index: r.stabilization_index,
            stabilized: r.stabilized,
            strict_drops: r.strict_drops,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase")]
pub struct LipschitzDto {
    pub stability_level: u32,
    pub constant: u64,
    pub certified: bool,
}

impl LipschitzDto {
    pub fn from_core(b: &LipschitzBound) -> Self {
        LipschitzDto {
            stability_level: b.stability_level,
            constant: b.constant,
            certified: b.certified,
        }
    }
}

/// The run manifest: config echo, provenance, and the file inventory.
/// Timestamps live only here, so trial and summary payloads replay
/// byte-identically for a fixed (config, seed).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub config_path: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub trials: u64,
    pub mode: String,
    pub format: String,
    pub started_at_unix_ms: u64,
    pub finished_at_unix_ms: u64,
    pub trial_files: Vec<String>,
    pub summary_file: String,
}
