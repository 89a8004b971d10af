//! The universe `N^r`: sites, finite site sets, admissible exhaustions and
//! the truncated Hamming metric.
//!
//! Site sets normalize to an implicit axis-aligned box whenever they fill
//! their bounding box, so large regular regions stay cheap and `==` is set
//! equality regardless of how a set was built.

use crate::shiftspace::Pattern;
use crate::{Error, Result};
use std::collections::BTreeSet;
use std::fmt;

/// Exact rational used for every metric threshold in the crate.
pub type Rational = num_rational::Ratio<u64>;

/// Cap on materialized site counts; keeps hostile configs from ballooning.
pub const MAX_SET_SITES: usize = 1 << 22;

/// A point of `N^r` with `u32` coordinates.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Site(Vec<u32>);

impl Site {
    pub fn new(coords: Vec<u32>) -> Site {
        Site(coords)
    }

    pub fn origin(r: usize) -> Site {
        Site(vec![0; r])
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> u32 {
        self.0[axis]
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn max_coord(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Monoid operation, checked against overflow and rank mismatches.
    pub fn add(&self, other: &Site) -> Result<Site> {
        check_dims(self.dims(), other.dims())?;
        let coords = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| {
                a.checked_add(b)
                    .ok_or_else(|| Error::InvalidArgument("site coordinate overflow".into()))
            })
            .collect::<Result<Vec<u32>>>()?;
        Ok(Site(coords))
    }

    /// `self - other` within `N^r`; `None` when any coordinate would go
    /// negative. Panics on rank mismatch (internal misuse, not input).
    pub fn checked_sub(&self, other: &Site) -> Option<Site> {
        assert_eq!(self.dims(), other.dims(), "site rank mismatch");
        let mut coords = Vec::with_capacity(self.dims());
        for (&a, &b) in self.0.iter().zip(&other.0) {
            coords.push(a.checked_sub(b)?);
        }
        Some(Site(coords))
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!(
            "site rank {a} vs {b}"
        )));
    }
    Ok(())
}

/// A finite subset of `N^r` in canonical form. Lexicographically sorted and
/// deduplicated; sets that exactly fill their bounding box are stored as the
/// box itself.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SiteSet {
    dims: usize,
    repr: Repr,
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Repr {
    /// Inclusive corners; never empty (empty sets normalize to `Explicit`).
    Box { lo: Vec<u32>, hi: Vec<u32> },
    /// Sorted, deduplicated, and not box-shaped (unless empty).
    Explicit(Vec<Site>),
}

impl SiteSet {
    pub fn empty(r: usize) -> SiteSet {
        SiteSet {
            dims: r,
            repr: Repr::Explicit(Vec::new()),
        }
    }

    pub fn singleton(site: Site) -> SiteSet {
        let lo = site.0.clone();
        SiteSet {
            dims: site.dims(),
            repr: Repr::Box { lo: lo.clone(), hi: lo },
        }
    }

    /// The box `[lo, hi]` (inclusive corners, componentwise).
    pub fn rect(lo: &Site, hi: &Site) -> Result<SiteSet> {
        check_dims(lo.dims(), hi.dims())?;
        if lo.0.iter().zip(&hi.0).any(|(&l, &h)| h < l) {
            return Ok(SiteSet::empty(lo.dims()));
        }
        let volume = box_volume(&lo.0, &hi.0)?;
        let _ = volume;
        Ok(SiteSet {
            dims: lo.dims(),
            repr: Repr::Box {
                lo: lo.0.clone(),
                hi: hi.0.clone(),
            },
        })
    }

    /// The cube `{0, …, t}^r`.
    pub fn cube(r: usize, t: u32) -> Result<SiteSet> {
        if r == 0 {
            return Err(Error::InvalidArgument("empty universe: rank must be >= 1".into()));
        }
        SiteSet::rect(&Site::origin(r), &Site::new(vec![t; r]))
    }

    /// Canonicalizes an arbitrary list of sites.
    pub fn from_sites(r: usize, sites: Vec<Site>) -> Result<SiteSet> {
        for s in &sites {
            check_dims(r, s.dims())?;
        }
        if sites.len() > MAX_SET_SITES {
            return Err(Error::BudgetExceeded(format!(
                "site set of {} sites exceeds cap {MAX_SET_SITES}",
                sites.len()
            )));
        }
        let mut sites = sites;
        sites.sort();
        sites.dedup();
        Ok(SiteSet::normalized(r, sites))
    }

    fn normalized(dims: usize, sites: Vec<Site>) -> SiteSet {
        if sites.is_empty() {
            return SiteSet::empty(dims);
        }
        let mut lo = sites[0].0.clone();
        let mut hi = sites[0].0.clone();
        for s in &sites[1..] {
            for (axis, &c) in s.0.iter().enumerate() {
                lo[axis] = lo[axis].min(c);
                hi[axis] = hi[axis].max(c);
            }
        }
        if let Ok(volume) = box_volume(&lo, &hi) {
            if volume == sites.len() {
                return SiteSet {
                    dims,
                    repr: Repr::Box { lo, hi },
                };
            }
        }
        SiteSet {
            dims,
            repr: Repr::Explicit(sites),
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            Repr::Box { lo, hi } => box_volume(lo, hi).expect("box volume validated"),
            Repr::Explicit(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Corner bounds when the set is exactly a box.
    pub fn as_box(&self) -> Option<(Site, Site)> {
        match &self.repr {
            Repr::Box { lo, hi } => Some((Site(lo.clone()), Site(hi.clone()))),
            Repr::Explicit(_) => None,
        }
    }

    pub fn is_box(&self) -> bool {
        matches!(self.repr, Repr::Box { .. })
    }

    /// Smallest box containing the set, when nonempty.
    pub fn bounding_box(&self) -> Option<(Site, Site)> {
        match &self.repr {
            Repr::Box { lo, hi } => Some((Site(lo.clone()), Site(hi.clone()))),
            Repr::Explicit(v) if v.is_empty() => None,
            Repr::Explicit(v) => {
                let mut lo = v[0].0.clone();
                let mut hi = v[0].0.clone();
                for s in &v[1..] {
                    for (axis, &c) in s.0.iter().enumerate() {
                        lo[axis] = lo[axis].min(c);
                        hi[axis] = hi[axis].max(c);
                    }
                }
                Some((Site(lo), Site(hi)))
            }
        }
    }

    pub fn contains(&self, site: &Site) -> bool {
        if site.dims() != self.dims {
            return false;
        }
        match &self.repr {
            Repr::Box { lo, hi } => site
                .0
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&c, (&l, &h))| l <= c && c <= h),
            Repr::Explicit(v) => v.binary_search(site).is_ok(),
        }
    }

    /// Lexicographic rank of `site` within the set.
    pub fn index_of(&self, site: &Site) -> Option<usize> {
        if site.dims() != self.dims {
            return None;
        }
        match &self.repr {
            Repr::Box { lo, hi } => {
                let mut idx = 0usize;
                for (axis, &c) in site.0.iter().enumerate() {
                    if c < lo[axis] || c > hi[axis] {
                        return None;
                    }
                    let width = (hi[axis] - lo[axis]) as usize + 1;
                    idx = idx * width + (c - lo[axis]) as usize;
                }
                Some(idx)
            }
            Repr::Explicit(v) => v.binary_search(site).ok(),
        }
    }

    /// Site with the given lexicographic rank.
    pub fn site_at(&self, index: usize) -> Site {
        assert!(index < self.len(), "site index out of range");
        match &self.repr {
            Repr::Box { lo, hi } => {
                let mut rem = index;
                let mut coords = vec![0u32; self.dims];
                for axis in (0..self.dims).rev() {
                    let width = (hi[axis] - lo[axis]) as usize + 1;
                    coords[axis] = lo[axis] + (rem % width) as u32;
                    rem /= width;
                }
                Site(coords)
            }
            Repr::Explicit(v) => v[index].clone(),
        }
    }

    /// Iterates sites in lexicographic order.
    pub fn iter(&self) -> SiteIter<'_> {
        SiteIter {
            set: self,
            next: 0,
            len: self.len(),
        }
    }

    pub fn sites(&self) -> Vec<Site> {
        self.iter().collect()
    }

    pub fn covers(&self, other: &SiteSet) -> bool {
        if other.dims != self.dims {
            return false;
        }
        // Box-in-box is a corner comparison; everything else iterates.
        if let (Some((slo, shi)), Some((olo, ohi))) = (self.as_box(), other.as_box()) {
            return olo
                .0
                .iter()
                .zip(&slo.0)
                .all(|(&o, &s)| o >= s)
                && ohi.0.iter().zip(&shi.0).all(|(&o, &s)| o <= s);
        }
        other.iter().all(|s| self.contains(&s))
    }

    pub fn union(&self, other: &SiteSet) -> Result<SiteSet> {
        check_dims(self.dims, other.dims)?;
        let mut sites = self.sites();
        sites.extend(other.iter());
        SiteSet::from_sites(self.dims, sites)
    }

    pub fn intersection(&self, other: &SiteSet) -> Result<SiteSet> {
        check_dims(self.dims, other.dims)?;
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let sites: Vec<Site> = small.iter().filter(|s| large.contains(s)).collect();
        Ok(SiteSet::normalized(self.dims, sites))
    }

    /// Sites of `self` not in `other`.
    pub fn difference(&self, other: &SiteSet) -> Result<SiteSet> {
        check_dims(self.dims, other.dims)?;
        let sites: Vec<Site> = self.iter().filter(|s| !other.contains(s)).collect();
        Ok(SiteSet::normalized(self.dims, sites))
    }

    /// Minkowski sum `{a + b}`.
    pub fn minkowski_sum(&self, other: &SiteSet) -> Result<SiteSet> {
        check_dims(self.dims, other.dims)?;
        if self.is_empty() || other.is_empty() {
            return Ok(SiteSet::empty(self.dims));
        }
        if let (Some((alo, ahi)), Some((blo, bhi))) = (self.as_box(), other.as_box()) {
            return SiteSet::rect(&alo.add(&blo)?, &ahi.add(&bhi)?);
        }
        if self
            .len()
            .checked_mul(other.len())
            .is_none_or(|n| n > MAX_SET_SITES)
        {
            return Err(Error::BudgetExceeded("minkowski sum exceeds site cap".into()));
        }
        let mut sums = BTreeSet::new();
        for a in self.iter() {
            for b in other.iter() {
                sums.insert(a.add(&b)?);
            }
        }
        Ok(SiteSet::normalized(self.dims, sums.into_iter().collect()))
    }

    pub fn translate(&self, g: &Site) -> Result<SiteSet> {
        self.minkowski_sum(&SiteSet::singleton(g.clone()))
    }

    /// Erosion `{g : g + m ∈ self for all m in memory}`. Empty memory erodes
    /// nothing only in the sense that every site qualifies — but the result
    /// must remain finite, so empty memory returns `self` unchanged.
    pub fn erode_by(&self, memory: &SiteSet) -> Result<SiteSet> {
        check_dims(self.dims, memory.dims)?;
        if memory.is_empty() {
            return Ok(self.clone());
        }
        let (mlo, mhi) = memory.bounding_box().expect("nonempty memory");
        if let Some((lo, hi)) = self.as_box() {
            // For a box target only the memory's bounding corners bind.
            let mut nlo = Vec::with_capacity(self.dims);
            let mut nhi = Vec::with_capacity(self.dims);
            for axis in 0..self.dims {
                let l = lo.0[axis].saturating_sub(mlo.0[axis]);
                let Some(h) = hi.0[axis].checked_sub(mhi.0[axis]) else {
                    return Ok(SiteSet::empty(self.dims));
                };
                // Feasibility also demands l + mlo lands inside: guaranteed
                // since l >= lo - mlo pointwise; emptiness shows as h < l.
                if h < l {
                    return Ok(SiteSet::empty(self.dims));
                }
                nlo.push(l);
                nhi.push(h);
            }
            return SiteSet::rect(&Site(nlo), &Site(nhi));
        }
        let m0 = memory.site_at(0);
        let mut out = Vec::new();
        for s in self.iter() {
            let Some(g) = s.checked_sub(&m0) else {
                continue;
            };
            if memory.iter().all(|m| {
                g.add(&m)
                    .is_ok_and(|gm| self.contains(&gm))
            }) {
                out.push(g);
            }
        }
        let _ = (mlo, mhi);
        Ok(SiteSet::normalized(self.dims, out))
    }

    /// Text format: one site per line, space-separated coordinates, in
    /// lexicographic order. Round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in self.iter() {
            let parts: Vec<String> = s.0.iter().map(|c| c.to_string()).collect();
            out.push_str(&parts.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the text format, inferring the rank from the first line.
    pub fn from_text(text: &str) -> Result<SiteSet> {
        let sites = parse_site_lines(text)?;
        let Some(first) = sites.first() else {
            return Err(Error::Parse(
                "cannot infer rank of an empty site list; use from_text_with_dims".into(),
            ));
        };
        let r = first.dims();
        SiteSet::from_sites(r, sites)
    }

    pub fn from_text_with_dims(text: &str, r: usize) -> Result<SiteSet> {
        let sites = parse_site_lines(text)?;
        SiteSet::from_sites(r, sites)
    }
}

fn parse_site_lines(text: &str) -> Result<Vec<Site>> {
    let mut sites = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let coords = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad coordinate {tok:?} on line {lineno}")))
            })
            .collect::<Result<Vec<u32>>>()?;
        if let Some(prev) = sites.first() {
            let prev: &Site = prev;
            if coords.len() != prev.dims() {
                return Err(Error::Parse(format!(
                    "line {lineno} has {} coordinates, expected {}",
                    coords.len(),
                    prev.dims()
                )));
            }
        }
        if sites.len() == MAX_SET_SITES {
            return Err(Error::Parse("site list exceeds parser cap".into()));
        }
        sites.push(Site(coords));
    }
    Ok(sites)
}

fn box_volume(lo: &[u32], hi: &[u32]) -> Result<usize> {
    let mut volume = 1u128;
    for (&l, &h) in lo.iter().zip(hi) {
        volume *= (h as u128) - (l as u128) + 1;
        if volume > MAX_SET_SITES as u128 {
            return Err(Error::BudgetExceeded(format!(
                "box volume exceeds site cap {MAX_SET_SITES}"
            )));
        }
    }
    Ok(volume as usize)
}

pub struct SiteIter<'a> {
    set: &'a SiteSet,
    next: usize,
    len: usize,
}

impl Iterator for SiteIter<'_> {
    type Item = Site;

    fn next(&mut self) -> Option<Site> {
        if self.next >= self.len {
            return None;
        }
        let s = self.set.site_at(self.next);
        self.next += 1;
        Some(s)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rem = self.len - self.next;
        (rem, Some(rem))
    }
}

impl<'a> IntoIterator for &'a SiteSet {
    type Item = Site;
    type IntoIter = SiteIter<'a>;

    fn into_iter(self) -> SiteIter<'a> {
        self.iter()
    }
}

/// An exhaustion `E_0 = ∅ ⊆ E_1 ⊆ E_2 ⊆ …` of `N^r`, either the built-in
/// dyadic family `E_n = {0, …, 2^n - 1}^r` or an explicit finite prefix
/// (levels `E_1, E_2, …`; `E_0 = ∅` is implicit).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Exhaustion {
    dims: usize,
    kind: ExhaustionKind,
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum ExhaustionKind {
    Dyadic,
    Explicit(Vec<SiteSet>),
}

impl Exhaustion {
    /// The dyadic exhaustion of `N^r`. The universe must be nonempty.
    pub fn dyadic(r: usize) -> Result<Exhaustion> {
        if r == 0 {
            return Err(Error::InvalidArgument(
                "empty universe: dyadic exhaustion needs rank >= 1".into(),
            ));
        }
        Ok(Exhaustion {
            dims: r,
            kind: ExhaustionKind::Dyadic,
        })
    }

    /// An explicit prefix `E_1, …, E_d`. Well-formedness only; admissibility
    /// is a separate check so that deliberately broken families can be
    /// examined.
    pub fn explicit(r: usize, levels: Vec<SiteSet>) -> Result<Exhaustion> {
        if r == 0 {
            return Err(Error::InvalidArgument(
                "empty universe: exhaustion needs rank >= 1".into(),
            ));
        }
        for l in &levels {
            check_dims(r, l.dims())?;
        }
        Ok(Exhaustion {
            dims: r,
            kind: ExhaustionKind::Explicit(levels),
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn is_dyadic(&self) -> bool {
        matches!(self.kind, ExhaustionKind::Dyadic)
    }

    /// Explicit levels beyond the prefix are unknown; dyadic levels are
    /// always known but must stay materializable.
    pub fn materialized_depth(&self) -> Option<u32> {
        match &self.kind {
            ExhaustionKind::Dyadic => None,
            ExhaustionKind::Explicit(levels) => Some(levels.len() as u32),
        }
    }

    /// The level set `E_n`.
    pub fn level(&self, n: u32) -> Result<SiteSet> {
        if n == 0 {
            return Ok(SiteSet::empty(self.dims));
        }
        match &self.kind {
            ExhaustionKind::Dyadic => {
                if n >= 32 {
                    return Err(Error::BudgetExceeded(format!(
                        "dyadic level {n} cannot be materialized"
                    )));
                }
                let side = 1u32 << n;
                SiteSet::rect(
                    &Site::origin(self.dims),
                    &Site::new(vec![side - 1; self.dims]),
                )
            }
            ExhaustionKind::Explicit(levels) => levels
                .get((n - 1) as usize)
                .cloned()
                .ok_or_else(|| Error::TooShallow(format!(
                    "level {n} beyond materialized depth {}",
                    levels.len()
                ))),
        }
    }

    /// Checks `E_1 ⊆ E_2 ⊆ … ⊆ E_l`.
    pub fn nested_up_to(&self, l: u32) -> Result<bool> {
        if self.is_dyadic() {
            return Ok(true);
        }
        for n in 1..l {
            if !self.level(n + 1)?.covers(&self.level(n)?) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// First violated admissibility axiom, if any.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum AdmissibilityIssue {
    /// `0 ∉ E_1`.
    OriginMissing,
    /// `E_n + E_n ⊄ E_{n+1}`, with a witnessing sum.
    SumEscapes { level: u32, witness: Site },
}

impl fmt::Display for AdmissibilityIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdmissibilityIssue::OriginMissing => write!(f, "origin is not in E_1"),
            AdmissibilityIssue::SumEscapes { level, witness } => write!(
                f,
                "E_{level} + E_{level} escapes E_{}: witness {witness}",
                level + 1
            ),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub checked_depth: u32,
    pub first_issue: Option<AdmissibilityIssue>,
}

/// Verifies the admissibility axioms on materialized levels up to `depth`:
/// `E_0 = ∅` (structural), `0 ∈ E_1`, and `E_n + E_n ⊆ E_{n+1}` for
/// `n + 1 <= depth`. Nestedness follows from these, as the containing theory
/// derives, so it is not a separate axiom.
pub fn check_admissible(e: &Exhaustion, depth: u32) -> Result<AdmissibilityReport> {
    if depth < 1 {
        return Err(Error::InvalidArgument(
            "admissibility check needs depth >= 1".into(),
        ));
    }
    if let Some(d) = e.materialized_depth() {
        if depth > d {
            return Err(Error::TooShallow(format!(
                "admissibility to depth {depth} but only {d} levels materialized"
            )));
        }
    }
    let report = |issue: Option<AdmissibilityIssue>| AdmissibilityReport {
        admissible: issue.is_none(),
        checked_depth: depth,
        first_issue: issue,
    };
    if !e.level(1)?.contains(&Site::origin(e.dims())) {
        return Ok(report(Some(AdmissibilityIssue::OriginMissing)));
    }
    for n in 1..depth {
        let en = e.level(n)?;
        let next = e.level(n + 1)?;
        let sum = en.minkowski_sum(&en)?;
        if !next.covers(&sum) {
            let witness = sum
                .iter()
                .find(|s| !next.contains(s))
                .expect("escape witnessed");
            return Ok(report(Some(AdmissibilityIssue::SumEscapes { level: n, witness })));
        }
    }
    Ok(report(None))
}

/// Smallest `n >= 1` with `2^-n < eps` (strict). This is the resolution at
/// which differences smaller than `eps` become observable.
pub fn resolution_index(eps: &Rational) -> Result<u32> {
    if *eps.numer() == 0 {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let a = *eps.numer() as u128;
    let b = *eps.denom() as u128;
    for n in 1..=63u32 {
        // 2^-n < a/b  ⟺  b < a · 2^n
        if b < a << n {
            return Ok(n);
        }
    }
    Err(Error::BudgetExceeded(
        "epsilon finer than 2^-63 is not supported".into(),
    ))
}

/// Exact dyadic value `2^-n`.
pub fn pow2_inverse(n: u32) -> Rational {
    assert!(n <= 63, "dyadic exponent out of range");
    Rational::new(1, 1u64 << n)
}

/// Smallest certified level from which translating by a finite memory set
/// stays one level ahead: `E_n + M ⊆ E_{n+1}` for all `n >= level`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StabilityIndex {
    pub level: u32,
    /// True when the bound holds for every level (dyadic closed form);
    /// explicit prefixes are only verified up to their materialized depth.
    pub certified: bool,
    /// Depth up to which the bound was verified directly, for explicit
    /// exhaustions.
    pub verified_to: Option<u32>,
}

/// Computes the stability index of a memory set with respect to an
/// exhaustion. For the dyadic family the closed form applies: the criterion
/// `E_n + M ⊆ E_{n+1}` for all `n >= n_0` holds exactly when
/// `max-coordinate(M) <= 2^{n_0}`.
pub fn stability_index(memory: &SiteSet, e: &Exhaustion) -> Result<StabilityIndex> {
    check_dims(memory.dims(), e.dims())?;
    match &e.kind {
        ExhaustionKind::Dyadic => {
            let maxc = memory
                .bounding_box()
                .map(|(_, hi)| hi.max_coord())
                .unwrap_or(0) as u64;
            let mut level = 1u32;
            while (1u64 << level) < maxc {
                level += 1;
            }
            Ok(StabilityIndex {
                level,
                certified: true,
                verified_to: None,
            })
        }
        ExhaustionKind::Explicit(levels) => {
            let depth = levels.len() as u32;
            if depth < 2 {
                return Err(Error::TooShallow(
                    "explicit exhaustion too shallow to certify a stability index".into(),
                ));
            }
            let ok = |n: u32| -> Result<bool> {
                let sum = e.level(n)?.minkowski_sum(memory)?;
                Ok(e.level(n + 1)?.covers(&sum))
            };
            // Least n0 with every verifiable level from n0 on satisfied.
            let mut level = None;
            for n0 in 1..depth {
                let mut all = true;
                for n in n0..depth {
                    if !ok(n)? {
                        all = false;
                        break;
                    }
                }
                if all {
                    level = Some(n0);
                    break;
                }
            }
            let Some(level) = level else {
                return Err(Error::TooShallow(
                    "explicit exhaustion too shallow to certify a stability index".into(),
                ));
            };
            Ok(StabilityIndex {
                level,
                certified: false,
                verified_to: Some(depth),
            })
        }
    }
}

/// A truncated Hamming distance: either resolved exactly or bounded by the
/// truncation level.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TruncatedDistance {
    /// `d = 2^-n` exactly: the patterns agree on `E_n` and provably disagree
    /// on `E_{n+1}`.
    Exact { agree_level: u32 },
    /// `d <= 2^-level`: agreement holds on every materialized level checked.
    AtMost { level: u32 },
}

impl TruncatedDistance {
    pub fn upper_bound(&self) -> Rational {
        match *self {
            TruncatedDistance::Exact { agree_level } => pow2_inverse(agree_level),
            TruncatedDistance::AtMost { level } => pow2_inverse(level),
        }
    }

    /// Three-valued comparison against a threshold: `Some(true)` when the
    /// distance is certainly `< q`, `Some(false)` when certainly `>= q`,
    /// `None` when the truncation cannot decide.
    pub fn certainly_less_than(&self, q: &Rational) -> Option<bool> {
        match *self {
            TruncatedDistance::Exact { agree_level } => Some(pow2_inverse(agree_level) < *q),
            TruncatedDistance::AtMost { level } => {
                if pow2_inverse(level) < *q {
                    Some(true)
                } else {
                    None
                }
            }
        }
    }
}

impl fmt::Display for TruncatedDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TruncatedDistance::Exact { agree_level } => write!(f, "2^-{agree_level}"),
            TruncatedDistance::AtMost { level } => write!(f, "<=2^-{level}"),
        }
    }
}

/// Truncated Hamming distance between two patterns at resolution `level`:
/// the largest `n <= level` with agreement on `E_n` decides the value. Both
/// domains must cover `E_level`, and the exhaustion must be nested that far
/// for the supremum to be meaningful.
pub fn hamming_distance(
    x: &Pattern,
    y: &Pattern,
    e: &Exhaustion,
    level: u32,
) -> Result<TruncatedDistance> {
    if level == 0 || level > 63 {
        return Err(Error::InvalidArgument(
            "hamming distance needs a level in 1..=63".into(),
        ));
    }
    if x.alphabet() != y.alphabet() {
        return Err(Error::DimensionMismatch("patterns over different alphabets".into()));
    }
    if !e.nested_up_to(level)? {
        return Err(Error::InvalidArgument(
            "exhaustion is not nested up to the requested level".into(),
        ));
    }
    let top = e.level(level)?;
    for (name, pat) in [("first", x), ("second", y)] {
        if !pat.domain().covers(&top) {
            return Err(Error::InsufficientResolution(format!(
                "{name} pattern domain does not cover E_{level}"
            )));
        }
    }
    for n in 1..=level {
        if !x.agrees_on(y, &e.level(n)?)? {
            return Ok(TruncatedDistance::Exact { agree_level: n - 1 });
        }
    }
    Ok(TruncatedDistance::AtMost { level })
}
