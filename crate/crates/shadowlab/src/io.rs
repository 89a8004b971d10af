//! JSON import/export for the library's value types.
//!
//! Formats:
//! - rationals are strings `"1/8"` (or `"3"` for integers);
//! - sites are coordinate arrays `[x, y]`, site lists are sorted
//!   lexicographically and free of duplicates;
//! - matrices and constraint bases travel as the plain text format
//!   (`"p rows cols"` header, then rows of residues) embedded in a string;
//! - exhaustions: `{"kind":"dyadic","r":2}` or
//!   `{"kind":"explicit","r":1,"levels":[[[0],[1]], …]}`;
//! - subshifts: `{"alphabet":{"p":2,"k":1},"r":1,"kind":"full"}` or
//!   `kind":"sft"` with `window` and `constraint`;
//! - cellular automata: `{"memory":[…],"rule":"…"}`;
//! - instances: `{"subshift":…,"generators":[…],"exhaustion":…,"epsilon":"1/2"}`;
//! - orbits mirror the truncation type; certificates carry the point, the
//!   residual list, and a scope statement.
//!
//! Every parser validates through the ordinary constructors, so malformed
//! payloads fail with a diagnostic naming the offending field.

use crate::cellauto::LinearCA;
use crate::columnfact::{IndexBox, WindowEstimate};
use crate::fplinalg::{Matrix, Subspace};
use crate::lattice::{Exhaustion, Rational, Site, SiteSet, TruncatedDistance};
use crate::shadowing::{
    NoSolutionReport, PseudoOrbitTruncation, ShadowingCertificate, ShadowingInstance,
};
use crate::shiftspace::{Alphabet, Pattern, SubshiftSpec};
use crate::fplinalg::FieldSpec;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Rationals
// ---------------------------------------------------------------------------

/// Parses `"3/4"` or `"3"` into an exact nonnegative rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let numer: u64 = n
        .parse()
        .map_err(|_| Error::Parse(format!("invalid rational numerator {n:?}")))?;
    let denom: u64 = d
        .parse()
        .map_err(|_| Error::Parse(format!("invalid rational denominator {d:?}")))?;
    if denom == 0 {
        return Err(Error::Parse("rational denominator must be nonzero".into()));
    }
    Ok(Rational::new(numer, denom))
}

/// Formats a rational as `"3/4"` (or `"3"` when integral).
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

// ---------------------------------------------------------------------------
// Sites
// ---------------------------------------------------------------------------

fn sites_to_dto(set: &SiteSet) -> Vec<Vec<u32>> {
    set.iter().map(|s| s.coords().to_vec()).collect()
}

/// Rebuilds a site list, insisting on uniform rank and strictly increasing
/// lexicographic order so that positional value arrays stay aligned.
fn sites_from_dto(raw: &[Vec<u32>], expect_r: Option<usize>, what: &str) -> Result<SiteSet> {
    let r = match (raw.first(), expect_r) {
        (_, Some(r)) => r,
        (Some(first), None) => first.len(),
        (None, None) => {
            return Err(Error::Parse(format!(
                "field '{what}' is empty and carries no rank"
            )))
        }
    };
    if r == 0 {
        return Err(Error::Parse(format!("field '{what}' has rank 0 sites")));
    }
    let mut sites = Vec::with_capacity(raw.len());
    for coords in raw {
        if coords.len() != r {
            return Err(Error::Parse(format!(
                "field '{what}' mixes site ranks ({} vs {r})",
                coords.len()
            )));
        }
        sites.push(Site::new(coords.clone()));
    }
    for w in sites.windows(2) {
        if w[0].coords() >= w[1].coords() {
            return Err(Error::Parse(format!(
                "field '{what}' must list sites in strictly increasing lexicographic order"
            )));
        }
    }
    SiteSet::from_sites(r, sites)
}

// ---------------------------------------------------------------------------
// DTOs
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct AlphabetDto {
    pub p: u64,
    pub k: usize,
}

impl AlphabetDto {
    pub fn to_core(&self) -> Result<Alphabet> {
        Alphabet::new(FieldSpec::new(self.p)?, self.k)
    }

    pub fn from_core(a: &Alphabet) -> AlphabetDto {
        AlphabetDto {
            p: a.field().p(),
            k: a.k(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ExhaustionDto {
    Dyadic {
        r: usize,
    },
    Explicit {
        r: usize,
        levels: Vec<Vec<Vec<u32>>>,
    },
}

impl ExhaustionDto {
    pub fn to_core(&self) -> Result<Exhaustion> {
        match self {
            ExhaustionDto::Dyadic { r } => Exhaustion::dyadic(*r),
            ExhaustionDto::Explicit { r, levels } => {
                let mut sets = Vec::with_capacity(levels.len());
                for (i, level) in levels.iter().enumerate() {
                    sets.push(sites_from_dto(
                        level,
                        Some(*r),
                        &format!("levels[{i}]"),
                    )?);
                }
                Exhaustion::explicit(*r, sets)
            }
        }
    }

    pub fn from_core(e: &Exhaustion) -> Result<ExhaustionDto> {
        if e.is_dyadic() {
            return Ok(ExhaustionDto::Dyadic { r: e.dims() });
        }
        let depth = e.materialized_depth().unwrap_or(0);
        let mut levels = Vec::with_capacity(depth as usize);
        for n in 1..=depth {
            levels.push(sites_to_dto(&e.level(n)?));
        }
        Ok(ExhaustionDto::Explicit {
            r: e.dims(),
            levels,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct SubshiftDto {
    pub alphabet: AlphabetDto,
    pub r: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Vec<Vec<u32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<String>,
}

impl SubshiftDto {
    pub fn to_core(&self) -> Result<SubshiftSpec> {
        let alphabet = self.alphabet.to_core()?;
        match self.kind.as_str() {
            "full" => {
                if self.window.is_some() || self.constraint.is_some() {
                    return Err(Error::Parse(
                        "fields 'window'/'constraint' are only valid with kind 'sft'".into(),
                    ));
                }
                SubshiftSpec::full_shift(alphabet, self.r)
            }
            "sft" => {
                let window_raw = self.window.as_ref().ok_or_else(|| {
                    Error::Parse("kind 'sft' requires field 'window'".into())
                })?;
                let constraint_raw = self.constraint.as_ref().ok_or_else(|| {
                    Error::Parse("kind 'sft' requires field 'constraint'".into())
                })?;
                let window = sites_from_dto(window_raw, Some(self.r), "window")?;
                let basis = Matrix::from_text(constraint_raw)?;
                if basis.field() != alphabet.field() {
                    return Err(Error::Parse(
                        "field 'constraint' uses a different modulus than the alphabet".into(),
                    ));
                }
                let constraint = Subspace::from_rows(&basis);
                SubshiftSpec::linear_sft(alphabet, self.r, window, constraint)
            }
            other => Err(Error::Parse(format!(
                "field 'kind' must be 'full' or 'sft', got {other:?}"
            ))),
        }
    }

    pub fn from_core(sig: &SubshiftSpec) -> SubshiftDto {
        let alphabet = AlphabetDto::from_core(sig.alphabet());
        match (sig.window(), sig.constraint()) {
            (Some(window), Some(constraint)) => SubshiftDto {
                alphabet,
                r: sig.dims(),
                kind: "sft".into(),
                window: Some(sites_to_dto(window)),
                constraint: Some(constraint.basis().to_text()),
            },
            _ => SubshiftDto {
                alphabet,
                r: sig.dims(),
                kind: "full".into(),
                window: None,
                constraint: None,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct PatternDto {
    pub domain: Vec<Vec<u32>>,
    /// One residue vector of length `k` per domain site, in domain order.
    pub values: Vec<Vec<u64>>,
}

impl PatternDto {
    pub fn to_core(&self, alphabet: Alphabet) -> Result<Pattern> {
        let domain = sites_from_dto(&self.domain, None, "domain")?;
        if self.values.len() != domain.len() {
            return Err(Error::Parse(format!(
                "field 'values' has {} entries for {} domain sites",
                self.values.len(),
                domain.len()
            )));
        }
        let mut flat = Vec::with_capacity(alphabet.ambient_dim(domain.len()));
        for (i, letter) in self.values.iter().enumerate() {
            if letter.len() != alphabet.k() {
                return Err(Error::Parse(format!(
                    "field 'values[{i}]' has length {} but the alphabet has k={}",
                    letter.len(),
                    alphabet.k()
                )));
            }
            flat.extend_from_slice(letter);
        }
        Pattern::new(alphabet, domain, flat)
    }

    pub fn from_core(x: &Pattern) -> PatternDto {
        let k = x.alphabet().k();
        PatternDto {
            domain: sites_to_dto(x.domain()),
            values: x.values().chunks(k).map(<[u64]>::to_vec).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct CaDto {
    pub memory: Vec<Vec<u32>>,
    /// Rule matrix in text format: `k` rows, `k·|memory|` columns, column
    /// blocks in memory order.
    pub rule: String,
}

impl CaDto {
    pub fn to_core(&self, alphabet: Alphabet) -> Result<LinearCA> {
        let memory = sites_from_dto(&self.memory, None, "memory")?;
        let rule = Matrix::from_text(&self.rule)?;
        if rule.field() != alphabet.field() {
            return Err(Error::Parse(
                "field 'rule' uses a different modulus than the alphabet".into(),
            ));
        }
        LinearCA::new(alphabet, memory.dims(), memory, rule)
    }

    pub fn from_core(t: &LinearCA) -> CaDto {
        CaDto {
            memory: sites_to_dto(t.memory()),
            rule: t.rule().to_text(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct InstanceDto {
    pub subshift: SubshiftDto,
    pub generators: Vec<CaDto>,
    pub exhaustion: ExhaustionDto,
    pub epsilon: String,
}

impl InstanceDto {
    pub fn to_core(&self) -> Result<ShadowingInstance> {
        let sig = self.subshift.to_core()?;
        let alphabet = *sig.alphabet();
        let mut generators = Vec::with_capacity(self.generators.len());
        for g in &self.generators {
            generators.push(g.to_core(alphabet)?);
        }
        let exhaustion = self.exhaustion.to_core()?;
        let epsilon = parse_rational(&self.epsilon)?;
        ShadowingInstance::new(sig, generators, exhaustion, epsilon)
    }

    pub fn from_core(inst: &ShadowingInstance) -> Result<InstanceDto> {
        Ok(InstanceDto {
            subshift: SubshiftDto::from_core(inst.sig()),
            generators: inst.generators().iter().map(CaDto::from_core).collect(),
            exhaustion: ExhaustionDto::from_core(inst.exhaustion())?,
            epsilon: format_rational(&inst.epsilon()),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct IndexBoxDto {
    pub s: usize,
    pub t: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OrbitDto {
    pub alphabet: AlphabetDto,
    pub index_box: IndexBoxDto,
    pub spatial_box: Vec<Vec<u32>>,
    /// One flat value table per exponent (lexicographic): entry `[i][j]` is
    /// the `k`-vector at the `j`-th spatial site.
    pub entries: Vec<Vec<Vec<u64>>>,
    pub declared_delta: String,
}

impl OrbitDto {
    pub fn to_core(&self) -> Result<PseudoOrbitTruncation> {
        let alphabet = self.alphabet.to_core()?;
        let spatial_box = sites_from_dto(&self.spatial_box, None, "spatialBox")?;
        let index_box = IndexBox::new(self.index_box.s, self.index_box.t)?;
        let mut entries = Vec::with_capacity(self.entries.len());
        for (i, table) in self.entries.iter().enumerate() {
            let dto = PatternDto {
                domain: self.spatial_box.clone(),
                values: table.clone(),
            };
            entries.push(dto.to_core(alphabet).map_err(|e| {
                Error::Parse(format!("field 'entries[{i}]': {e}"))
            })?);
        }
        let declared_delta = parse_rational(&self.declared_delta)?;
        PseudoOrbitTruncation::new(index_box, spatial_box, entries, declared_delta)
    }

    pub fn from_core(po: &PseudoOrbitTruncation) -> OrbitDto {
        let alphabet = po.entries()[0].alphabet();
        let k = alphabet.k();
        OrbitDto {
            alphabet: AlphabetDto::from_core(alphabet),
            index_box: IndexBoxDto {
                s: po.index_box().s(),
                t: po.index_box().t(),
            },
            spatial_box: sites_to_dto(po.spatial_box()),
            entries: po
                .entries()
                .iter()
                .map(|x| x.values().chunks(k).map(<[u64]>::to_vec).collect())
                .collect(),
            declared_delta: format_rational(&po.declared_delta()),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ResidualDto {
    pub alpha: Vec<u32>,
    /// Resolved distance, e.g. `"2^-3"` (exact) or `"<=2^-4"` (bound).
    pub distance: String,
    pub upper_bound: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CertificateDto {
    pub point: PatternDto,
    pub residuals: Vec<ResidualDto>,
    pub epsilon: String,
    pub resolution_level: u32,
    pub local_only: bool,
    /// Human-readable statement of exactly what the certificate asserts.
    pub scope: String,
}

fn residuals_to_dto(residuals: &[(Site, TruncatedDistance)]) -> Vec<ResidualDto> {
    residuals
        .iter()
        .map(|(alpha, d)| ResidualDto {
            alpha: alpha.coords().to_vec(),
            distance: d.to_string(),
            upper_bound: format_rational(&d.upper_bound()),
        })
        .collect()
}

impl CertificateDto {
    pub fn from_core(cert: &ShadowingCertificate) -> CertificateDto {
        let scope = if cert.local_only {
            format!(
                "point shadows the truncation within epsilon {} at resolution level {}; \
                 subshift membership is enforced locally on the search box",
                cert.epsilon, cert.resolution_level
            )
        } else {
            format!(
                "point shadows the truncation within epsilon {} at resolution level {}",
                cert.epsilon, cert.resolution_level
            )
        };
        CertificateDto {
            point: PatternDto::from_core(&cert.point),
            residuals: residuals_to_dto(&cert.residuals),
            epsilon: format_rational(&cert.epsilon),
            resolution_level: cert.resolution_level,
            local_only: cert.local_only,
            scope,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NoSolutionDto {
    pub search_box: Vec<Vec<u32>>,
    pub resolution_level: u32,
    pub index_box: IndexBoxDto,
    pub local_only: bool,
    pub rows: usize,
    pub rank: usize,
    pub scope: String,
}

impl NoSolutionDto {
    pub fn from_core(rep: &NoSolutionReport) -> NoSolutionDto {
        NoSolutionDto {
            search_box: sites_to_dto(&rep.search_box),
            resolution_level: rep.resolution_level,
            index_box: IndexBoxDto {
                s: rep.index_box.s(),
                t: rep.index_box.t(),
            },
            local_only: rep.local_only,
            rows: rep.rows,
            rank: rep.rank,
            scope: rep.scope.clone(),
        }
    }
}

/// Window-estimation report: `{"N":…, "certified":…, "dims":…,
/// "heuristicFlags":…}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct WindowReportDto {
    #[serde(rename = "N")]
    pub n: Option<u32>,
    pub certified: bool,
    pub dims: Vec<usize>,
    #[serde(rename = "heuristicFlags")]
    pub heuristic_flags: Vec<String>,
}

impl WindowReportDto {
    pub fn from_core(est: &WindowEstimate) -> WindowReportDto {
        WindowReportDto {
            n: est.window,
            certified: est.certified,
            dims: est.dims.clone(),
            heuristic_flags: est.heuristic_flags.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// String-level helpers
// ---------------------------------------------------------------------------

fn from_json<'a, T: Deserialize<'a>>(s: &'a str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("DTO serialization is infallible")
}

pub fn instance_from_json(s: &str) -> Result<ShadowingInstance> {
    from_json::<InstanceDto>(s)?.to_core()
}

pub fn instance_to_json(inst: &ShadowingInstance) -> Result<String> {
    Ok(to_json(&InstanceDto::from_core(inst)?))
}

pub fn orbit_from_json(s: &str) -> Result<PseudoOrbitTruncation> {
    from_json::<OrbitDto>(s)?.to_core()
}

pub fn orbit_to_json(po: &PseudoOrbitTruncation) -> String {
    to_json(&OrbitDto::from_core(po))
}

pub fn subshift_from_json(s: &str) -> Result<SubshiftSpec> {
    from_json::<SubshiftDto>(s)?.to_core()
}

pub fn subshift_to_json(sig: &SubshiftSpec) -> String {
    to_json(&SubshiftDto::from_core(sig))
}

pub fn pattern_from_json(s: &str, alphabet: Alphabet) -> Result<Pattern> {
    from_json::<PatternDto>(s)?.to_core(alphabet)
}

pub fn pattern_to_json(x: &Pattern) -> String {
    to_json(&PatternDto::from_core(x))
}

pub fn ca_from_json(s: &str, alphabet: Alphabet) -> Result<LinearCA> {
    from_json::<CaDto>(s)?.to_core(alphabet)
}

pub fn ca_to_json(t: &LinearCA) -> String {
    to_json(&CaDto::from_core(t))
}

pub fn exhaustion_from_json(s: &str) -> Result<Exhaustion> {
    from_json::<ExhaustionDto>(s)?.to_core()
}

pub fn exhaustion_to_json(e: &Exhaustion) -> Result<String> {
    Ok(to_json(&ExhaustionDto::from_core(e)?))
}

pub fn certificate_to_json(cert: &ShadowingCertificate) -> String {
    to_json(&CertificateDto::from_core(cert))
}

pub fn window_report_to_json(est: &WindowEstimate) -> String {
    to_json(&WindowReportDto::from_core(est))
}
