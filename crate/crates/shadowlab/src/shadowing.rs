//! Pseudo-orbits, the exact shadowing solver, and certificates.
//!
//! The pipeline mirrors the shadowing argument for commuting families of
//! linear cellular automata acting on a group shift space:
//!
//! 1. from the tolerance `ε` pick the resolution level `n0` with
//!    `2^{-n0} < ε`;
//! 2. pick `δ = 1 / (2^{n0}·C·N·s)` where `C` bounds the Lipschitz constants
//!    of all monomials with exponents in a window of size `N`;
//! 3. generate truncated `δ`-pseudo-orbits (exactly, or by perturbing an
//!    exact orbit away from a guard region that keeps the `δ` condition
//!    intact) and validate them against the truncated Hamming metric;
//! 4. solve one exact linear system over `F_p` whose solutions are precisely
//!    the patterns that agree with every orbit entry at resolution `n0`; any
//!    solution is an `ε`-shadowing point for the truncation, and absence of
//!    solutions is a certificate that no configuration supported on the
//!    search box satisfies the resolution-`n0` conditions.
//!
//! The module also ships the classical non-shadowing example over the
//! infinite direct sum of order-two groups, specialized to constant
//! configurations, and a deterministic seeded trial driver used by the CLI
//! and the test suite.

use crate::cellauto::{commute, lipschitz_constant, monomial, output_row, LinearCA};
use crate::columnfact::IndexBox;
use crate::fplinalg::{kernel, LinearSystem, Matrix, Subspace};
use crate::lattice::{
    hamming_distance, pow2_inverse, resolution_index, Exhaustion, Rational, Site, SiteSet,
    TruncatedDistance,
};
use crate::shiftspace::{Pattern, SubshiftSpec};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest ambient dimension for which seeds are drawn uniformly from the
/// full local pattern space; above it, seeds are assembled from translated
/// local bumps instead of a dense kernel computation.
pub const SEED_SPACE_CAP: usize = 600;

/// Cap on the exhaustion level of the counterexample family (group elements
/// are bitmasks, and the validation window is enumerated exhaustively).
pub const MAX_COUNTEREXAMPLE_LEVEL: u32 = 20;

// ---------------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------------

/// A shadowing problem: a subshift, a commuting family of linear cellular
/// automata acting on it, an admissible exhaustion fixing the metric, and a
/// positive tolerance `ε`.
#[derive(Clone, Debug)]
pub struct ShadowingInstance {
    sig: SubshiftSpec,
    generators: Vec<LinearCA>,
    exhaustion: Exhaustion,
    epsilon: Rational,
}

impl ShadowingInstance {
    pub fn new(
        sig: SubshiftSpec,
        generators: Vec<LinearCA>,
        exhaustion: Exhaustion,
        epsilon: Rational,
    ) -> Result<ShadowingInstance> {
        if generators.is_empty() {
            return Err(Error::InvalidArgument(
                "a shadowing instance needs at least one generator".into(),
            ));
        }
        for t in &generators {
            if t.alphabet() != sig.alphabet() || t.dims() != sig.dims() {
                return Err(Error::DimensionMismatch(
                    "generator disagrees with the subshift on alphabet or universe".into(),
                ));
            }
        }
        if exhaustion.dims() != sig.dims() {
            return Err(Error::DimensionMismatch(
                "exhaustion rank differs from the universe".into(),
            ));
        }
        for i in 0..generators.len() {
            for j in i + 1..generators.len() {
                if !commute(&generators[i], &generators[j])? {
                    return Err(Error::NonCommuting(format!(
                        "generators {i} and {j} do not commute"
                    )));
                }
            }
        }
        if *epsilon.numer() == 0 {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        Ok(ShadowingInstance {
            sig,
            generators,
            exhaustion,
            epsilon,
        })
    }

    pub fn sig(&self) -> &SubshiftSpec {
        &self.sig
    }

    pub fn generators(&self) -> &[LinearCA] {
        &self.generators
    }

    /// Number of generators (the rank of the exponent monoid).
    pub fn s(&self) -> usize {
        self.generators.len()
    }

    pub fn exhaustion(&self) -> &Exhaustion {
        &self.exhaustion
    }

    pub fn epsilon(&self) -> Rational {
        self.epsilon
    }

    pub fn dims(&self) -> usize {
        self.sig.dims()
    }

    /// The resolution level `n0`: smallest `n ≥ 1` with `2^{-n} < ε`.
    pub fn resolution_level(&self) -> Result<u32> {
        resolution_index(&self.epsilon)
    }

    /// The monomial `τ_α` for an exponent vector, without re-checking
    /// commutativity (the constructor already did).
    pub fn monomial(&self, alpha: &Site) -> Result<LinearCA> {
        monomial(&self.generators, alpha.coords(), false)
    }

    /// Union of the generators' memory sets.
    pub fn memory_union(&self) -> Result<SiteSet> {
        let mut m = SiteSet::empty(self.dims());
        for t in &self.generators {
            m = m.union(t.memory())?;
        }
        Ok(m)
    }
}

// ---------------------------------------------------------------------------
// δ from ε
// ---------------------------------------------------------------------------

/// The exact ingredients of the pseudo-orbit tolerance
/// `δ = 1 / (2^{n0} · C · N · s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeltaParameters {
    /// Resolution level `n0` of `ε`.
    pub resolution_level: u32,
    /// `C`: the largest Lipschitz constant of a monomial with exponents in
    /// `{0..N}^s`.
    pub lipschitz: u64,
    /// The window size `N` the bound was taken over.
    pub window: u32,
    /// Number of generators `s`.
    pub generators: usize,
    /// The tolerance itself.
    pub delta: Rational,
    /// True when every Lipschitz ingredient was certified.
    pub certified: bool,
}

/// Computes `δ = 1 / (2^{n0}·C·N·s)` with `n0` the resolution level of the
/// instance tolerance and `C` the maximum Lipschitz constant over all
/// monomials `τ_α`, `α ∈ {0..N}^s`.
pub fn delta_for_epsilon(inst: &ShadowingInstance, n_window: u32) -> Result<DeltaParameters> {
    if n_window < 1 {
        return Err(Error::InvalidArgument("window size must be >= 1".into()));
    }
    let n0 = inst.resolution_level()?;
    let f_n = IndexBox::new(inst.s(), n_window)?.set()?;
    let mut c_max = 1u64;
    let mut certified = true;
    for alpha in f_n.iter() {
        let tau = inst.monomial(&alpha)?;
        let bound = lipschitz_constant(&tau, inst.exhaustion())?;
        c_max = c_max.max(bound.constant);
        certified &= bound.certified;
    }
    if n0 > 62 {
        return Err(Error::BudgetExceeded(
            "resolution level too large for an exact u64 denominator".into(),
        ));
    }
    let denom = (1u64 << n0)
        .checked_mul(c_max)
        .and_then(|d| d.checked_mul(u64::from(n_window)))
        .and_then(|d| d.checked_mul(inst.s() as u64))
        .ok_or_else(|| {
            Error::BudgetExceeded("delta denominator overflows a u64".into())
        })?;
    Ok(DeltaParameters {
        resolution_level: n0,
        lipschitz: c_max,
        window: n_window,
        generators: inst.s(),
        delta: Rational::new(1, denom),
        certified,
    })
}

// ---------------------------------------------------------------------------
// Pseudo-orbit truncations
// ---------------------------------------------------------------------------

/// A finite stretch of a pseudo-orbit: one pattern on a common spatial box
/// per exponent in a cube `F_T = {0..T}^s`, together with the tolerance the
/// family is declared to satisfy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoOrbitTruncation {
    index_box: IndexBox,
    spatial_box: SiteSet,
    entries: Vec<Pattern>,
    declared_delta: Rational,
}

impl PseudoOrbitTruncation {
    /// Entries must be listed in lexicographic exponent order and all share
    /// the spatial box as domain.
    pub fn new(
        index_box: IndexBox,
        spatial_box: SiteSet,
        entries: Vec<Pattern>,
        declared_delta: Rational,
    ) -> Result<PseudoOrbitTruncation> {
        let count = index_box.set()?.len();
        if entries.len() != count {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for an index set of {} exponents",
                entries.len(),
                count
            )));
        }
        if *declared_delta.numer() == 0 {
            return Err(Error::InvalidArgument(
                "declared tolerance must be positive".into(),
            ));
        }
        let Some(first) = entries.first() else {
            return Err(Error::InvalidArgument("empty pseudo-orbit".into()));
        };
        let alphabet = *first.alphabet();
        for x in &entries {
            if *x.alphabet() != alphabet {
                return Err(Error::DimensionMismatch(
                    "entries use different alphabets".into(),
                ));
            }
            if x.domain() != &spatial_box {
                return Err(Error::DimensionMismatch(
                    "every entry must live on the common spatial box".into(),
                ));
            }
        }
        Ok(PseudoOrbitTruncation {
            index_box,
            spatial_box,
            entries,
            declared_delta,
        })
    }

    pub fn index_box(&self) -> IndexBox {
        self.index_box
    }

    /// The index cube as a site set over the exponent monoid.
    pub fn index_sites(&self) -> Result<SiteSet> {
        self.index_box.set()
    }

    pub fn spatial_box(&self) -> &SiteSet {
        &self.spatial_box
    }

    pub fn entries(&self) -> &[Pattern] {
        &self.entries
    }

    pub fn declared_delta(&self) -> Rational {
        self.declared_delta
    }

    /// The entry at an exponent vector.
    pub fn entry(&self, alpha: &Site) -> Result<&Pattern> {
        let idx = self
            .index_box
            .set()?
            .index_of(alpha)
            .ok_or_else(|| Error::InvalidArgument(format!("exponent {alpha} outside the index box")))?;
        Ok(&self.entries[idx])
    }
}

/// Applies every monomial `τ_α`, `α ∈ F_T`, to a seed pattern and restricts
/// all results to their common output box. The result is an exact orbit
/// truncation: every validation distance is zero, so it is a `δ`-pseudo-orbit
/// for every `δ > 0` (it is declared at tolerance 1).
pub fn exact_orbit(
    seed: &Pattern,
    inst: &ShadowingInstance,
    f: IndexBox,
) -> Result<PseudoOrbitTruncation> {
    if seed.alphabet() != inst.sig().alphabet() {
        return Err(Error::DimensionMismatch(
            "seed alphabet differs from the instance".into(),
        ));
    }
    if seed.domain().dims() != inst.dims() {
        return Err(Error::DimensionMismatch(
            "seed rank differs from the universe".into(),
        ));
    }
    if f.s() != inst.s() {
        return Err(Error::DimensionMismatch(
            "index box rank differs from the generator count".into(),
        ));
    }
    let alphas = f.set()?;
    let mut taus = Vec::with_capacity(alphas.len());
    let mut memory_all = SiteSet::empty(inst.dims());
    for alpha in alphas.iter() {
        let tau = inst.monomial(&alpha)?;
        memory_all = memory_all.union(tau.memory())?;
        taus.push(tau);
    }
    let mut common: Option<SiteSet> = None;
    for tau in &taus {
        let eroded = seed.domain().erode_by(tau.memory())?;
        common = Some(match common {
            None => eroded,
            Some(b) => b.intersection(&eroded)?,
        });
    }
    let b = common.expect("index box is never empty");
    if b.is_empty() {
        let missing = memory_all.difference(seed.domain())?;
        return Err(Error::InsufficientTruncation(missing.sites()));
    }
    let mut entries = Vec::with_capacity(taus.len());
    for tau in &taus {
        entries.push(tau.apply(seed)?.restrict(&b)?);
    }
    PseudoOrbitTruncation::new(f, b, entries, Rational::new(1, 1))
}

// ---------------------------------------------------------------------------
// Local admissible perturbations
// ---------------------------------------------------------------------------

/// A reusable local perturbation for a subshift: a subspace of patterns on a
/// padded box `b_plus`, each supported inside the `core` sub-box, such that
/// adding any translate (with the core placed anywhere inside a larger box)
/// to a locally admissible pattern keeps it locally admissible.
///
/// The padding is one window-diameter on every side, so every constraint
/// placement that can touch the support is a translate of a placement that
/// was checked inside `b_plus`.
struct LocalPerturbation {
    b_plus: SiteSet,
    core: SiteSet,
    space: Subspace,
}

fn local_perturbation(sig: &SubshiftSpec) -> Result<LocalPerturbation> {
    let r = sig.dims();
    let alphabet = *sig.alphabet();
    let window = sig.window_or_empty();
    if sig.is_full() || window.is_empty() {
        let b = SiteSet::singleton(Site::origin(r));
        return Ok(LocalPerturbation {
            b_plus: b.clone(),
            core: b,
            space: Subspace::full(alphabet.field(), alphabet.k()),
        });
    }
    let (_, whi) = window.bounding_box().expect("nonempty window");
    let core_lo = whi.clone();
    let core_hi = core_lo.add(&whi)?;
    let bp_hi = core_hi.add(&whi)?;
    let core = SiteSet::rect(&core_lo, &core_hi)?;
    let b_plus = SiteSet::rect(&Site::origin(r), &bp_hi)?;
    let k = alphabet.k();
    let ambient = alphabet.ambient_dim(b_plus.len());
    let mut data: Vec<u64> = Vec::new();
    let mut nrows = 0usize;
    for row in sig.local_constraint_rows(&b_plus)? {
        let mut dense = vec![0u64; ambient];
        for (j, v) in row {
            dense[j] = alphabet.field().add(dense[j], v);
        }
        data.extend_from_slice(&dense);
        nrows += 1;
    }
    for (i, site) in b_plus.iter().enumerate() {
        if core.contains(&site) {
            continue;
        }
        for c in 0..k {
            let mut dense = vec![0u64; ambient];
            dense[i * k + c] = 1;
            data.extend_from_slice(&dense);
            nrows += 1;
        }
    }
    let m = Matrix::new(alphabet.field(), nrows, ambient, data)?;
    Ok(LocalPerturbation {
        b_plus,
        core,
        space: kernel(&m),
    })
}

/// Placements `g` such that the translated core `core + g` stays inside
/// `big` and avoids `avoid` entirely.
fn bump_placements(
    big: &SiteSet,
    pert: &LocalPerturbation,
    avoid: Option<&SiteSet>,
) -> Result<Vec<Site>> {
    let mut placements = Vec::new();
    'outer: for g in big.erode_by(&pert.core)?.iter() {
        if let Some(guard) = avoid {
            for t in pert.core.iter() {
                if guard.contains(&g.add(&t)?) {
                    continue 'outer;
                }
            }
        }
        placements.push(g);
    }
    Ok(placements)
}

/// Adds `scale · w` (a vector on `b_plus`, supported in the core) to the
/// pattern, with the padded box translated so its origin sits at `g`.
fn add_local_bump(x: &mut Pattern, pert: &LocalPerturbation, g: &Site, w: &[u64], scale: u64) -> Result<()> {
    let alphabet = *x.alphabet();
    let field = alphabet.field();
    let k = alphabet.k();
    for t in pert.core.iter() {
        let slot = pert
            .b_plus
            .index_of(&t)
            .expect("core lies inside the padded box");
        let target = g.add(&t)?;
        let old = x.value(&target)?.to_vec();
        let mut new = vec![0u64; k];
        for c in 0..k {
            new[c] = field.add(old[c], field.mul(scale, w[slot * k + c]));
        }
        x.set_value(&target, &new)?;
    }
    Ok(())
}

/// A random element of a subspace: a uniformly random coefficient against
/// every basis vector.
fn random_subspace_element<R: Rng + ?Sized>(space: &Subspace, rng: &mut R) -> Vec<u64> {
    let field = space.field();
    let mut v = vec![0u64; space.ambient()];
    for i in 0..space.dim() {
        let c = rng.random_range(0..field.p());
        if c == 0 {
            continue;
        }
        for (j, &b) in space.basis().row(i).iter().enumerate() {
            if b != 0 {
                v[j] = field.add(v[j], field.mul(c, b));
            }
        }
    }
    v
}

/// A seeded, locally admissible pattern on a box. Full shifts are sampled
/// uniformly; small constrained boxes uniformly from the local pattern
/// space; large constrained boxes by scattering admissible local bumps onto
/// the zero pattern.
pub fn random_admissible_seed<R: Rng + ?Sized>(
    sig: &SubshiftSpec,
    domain: &SiteSet,
    bumps: u32,
    rng: &mut R,
) -> Result<Pattern> {
    let alphabet = *sig.alphabet();
    let ambient = alphabet.ambient_dim(domain.len());
    if sig.is_full() {
        let p = alphabet.field().p();
        let values: Vec<u64> = (0..ambient).map(|_| rng.random_range(0..p)).collect();
        return Pattern::new(alphabet, domain.clone(), values);
    }
    if ambient <= SEED_SPACE_CAP {
        let space = sig.local_pattern_space(domain)?;
        return Pattern::new(alphabet, domain.clone(), random_subspace_element(&space, rng));
    }
    let pert = local_perturbation(sig)?;
    let mut x = Pattern::zero(alphabet, domain.clone());
    if pert.space.dim() == 0 {
        return Ok(x);
    }
    let placements = bump_placements(domain, &pert, None)?;
    if placements.is_empty() {
        return Ok(x);
    }
    let p = alphabet.field().p();
    for _ in 0..bumps {
        let g = &placements[rng.random_range(0..placements.len())];
        let row = rng.random_range(0..pert.space.dim());
        let scale = rng.random_range(1..p);
        let w = pert.space.basis().row(row).to_vec();
        add_local_bump(&mut x, &pert, g, &w, scale)?;
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Perturbation
// ---------------------------------------------------------------------------

/// Result of perturbing a pseudo-orbit truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerturbOutcome {
    pub orbit: PseudoOrbitTruncation,
    /// Number of sites in the guard region intersected with the spatial box.
    pub guard_sites: usize,
    /// Number of admissible bump placements outside the guard.
    pub placements: usize,
    /// Dimension of the local perturbation space.
    pub kernel_dim: usize,
    /// Number of bumps actually applied.
    pub moves_applied: u64,
    /// Set when the orbit was returned unchanged.
    pub notice: Option<String>,
}

/// Randomly modifies orbit entries at sites outside the guard region
/// `E_n ∪ ⋃_σ (E_n + M_σ)`, `n` the resolution level of `δ`, using only
/// locally admissible bumps. Entries restricted to the guard are untouched,
/// so for every generator `σ` the images `σ(x_α)` and the successors
/// `x_{α+e_σ}` still agree on `E_n`, which keeps every validation distance
/// at most `2^{-n} < δ`: the output always validates at tolerance `δ`.
///
/// The guard contains `E_n` itself and not just its memory translates:
/// when no memory set contains the origin (a pure shift, say), a flip inside
/// `E_n` would change a successor entry on `E_n` without changing the
/// corresponding image, and the distance would jump to `2^0`.
pub fn perturb_orbit<R: Rng + ?Sized>(
    orbit: &PseudoOrbitTruncation,
    inst: &ShadowingInstance,
    delta: &Rational,
    rng: &mut R,
    flip_budget: u64,
) -> Result<PerturbOutcome> {
    if *delta.numer() == 0 {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    if orbit.index_box.s() != inst.s() {
        return Err(Error::DimensionMismatch(
            "orbit index rank differs from the generator count".into(),
        ));
    }
    let n = resolution_index(delta)?;
    let e_n = inst.exhaustion().level(n)?;
    let mut guard = e_n.clone();
    for t in inst.generators() {
        guard = guard.union(&e_n.minkowski_sum(t.memory())?)?;
    }
    let guard_sites = guard.intersection(orbit.spatial_box())?.len();
    let unchanged = |notice: &str, pert_dim: usize, placements: usize| PerturbOutcome {
        orbit: orbit.clone(),
        guard_sites,
        placements,
        kernel_dim: pert_dim,
        moves_applied: 0,
        notice: Some(notice.to_string()),
    };
    if flip_budget == 0 {
        return Ok(PerturbOutcome {
            notice: None,
            ..unchanged("", 0, 0)
        });
    }
    let pert = local_perturbation(inst.sig())?;
    if pert.space.dim() == 0 {
        return Ok(unchanged(
            "no admissible local perturbation exists for this subshift",
            0,
            0,
        ));
    }
    let placements = bump_placements(orbit.spatial_box(), &pert, Some(&guard))?;
    if placements.is_empty() {
        return Ok(unchanged(
            "no perturbable sites: the guard region covers the spatial box",
            pert.space.dim(),
            0,
        ));
    }
    let mut entries = orbit.entries.clone();
    let p = inst.sig().alphabet().field().p();
    for _ in 0..flip_budget {
        let ei = rng.random_range(0..entries.len());
        let g = &placements[rng.random_range(0..placements.len())];
        let row = rng.random_range(0..pert.space.dim());
        let scale = rng.random_range(1..p);
        let w = pert.space.basis().row(row).to_vec();
        add_local_bump(&mut entries[ei], &pert, g, &w, scale)?;
    }
    let perturbed = PseudoOrbitTruncation::new(
        orbit.index_box,
        orbit.spatial_box.clone(),
        entries,
        *delta,
    )?;
    Ok(PerturbOutcome {
        orbit: perturbed,
        guard_sites,
        placements: placements.len(),
        kernel_dim: pert.space.dim(),
        moves_applied: flip_budget,
        notice: None,
    })
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// A failed pseudo-orbit condition: the distance between `σ(x_α)` and
/// `x_{α+e_σ}` was not below the tolerance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoOrbitViolation {
    pub generator: usize,
    pub alpha: Site,
    pub distance: TruncatedDistance,
}

/// Outcome of checking the `δ`-pseudo-orbit condition on a truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub valid: bool,
    /// Resolution level `m` with `2^{-m} < δ`; agreement on `E_m` decides
    /// every comparison exactly.
    pub resolution_level: u32,
    pub pairs_checked: usize,
    pub first_violation: Option<PseudoOrbitViolation>,
}

/// Checks `d(σ(x_α), x_{α+e_σ}) < δ` for every generator `σ` and every pair
/// of exponents `α, α+e_σ` inside the index box. Truncated distances at
/// resolution `m = resolution_index(δ)` decide each comparison exactly; the
/// spatial box must be large enough to resolve level `m` after one
/// application of each generator.
pub fn validate_pseudo_orbit(
    po: &PseudoOrbitTruncation,
    inst: &ShadowingInstance,
    delta: &Rational,
) -> Result<ValidationReport> {
    if *delta.numer() == 0 {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    if po.index_box.s() != inst.s() {
        return Err(Error::DimensionMismatch(
            "orbit index rank differs from the generator count".into(),
        ));
    }
    if po.entries[0].alphabet() != inst.sig().alphabet() {
        return Err(Error::DimensionMismatch(
            "orbit alphabet differs from the instance".into(),
        ));
    }
    let m = resolution_index(delta)?;
    let alphas = po.index_box.set()?;
    let mut pairs_checked = 0usize;
    for (ai, alpha) in alphas.iter().enumerate() {
        for (si, t) in inst.generators().iter().enumerate() {
            let mut next = alpha.coords().to_vec();
            next[si] += 1;
            let next = Site::new(next);
            let Some(ni) = alphas.index_of(&next) else {
                continue;
            };
            let image = t.apply(&po.entries[ai])?;
            let distance = hamming_distance(&image, &po.entries[ni], inst.exhaustion(), m)?;
            pairs_checked += 1;
            let below = distance.certainly_less_than(delta).expect(
                "a distance truncated at the resolution level of delta is always decidable",
            );
            if !below {
                return Ok(ValidationReport {
                    valid: false,
                    resolution_level: m,
                    pairs_checked,
                    first_violation: Some(PseudoOrbitViolation {
                        generator: si,
                        alpha,
                        distance,
                    }),
                });
            }
        }
    }
    Ok(ValidationReport {
        valid: true,
        resolution_level: m,
        pairs_checked,
        first_violation: None,
    })
}

// ---------------------------------------------------------------------------
// The solver
// ---------------------------------------------------------------------------

/// A successful shadowing computation: a pattern on the search box whose
/// monomial images agree with every orbit entry at resolution `n0`, together
/// with the recomputed residual distances (all strictly below `ε`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowingCertificate {
    pub point: Pattern,
    /// One resolved distance `d(τ_α(x), x_α)` per exponent, lexicographic.
    pub residuals: Vec<(Site, TruncatedDistance)>,
    pub epsilon: Rational,
    pub resolution_level: u32,
    /// True when the ambient subshift is constrained: membership of the
    /// point was enforced locally on the search box only.
    pub local_only: bool,
}

/// A certified absence: no pattern supported on the search box satisfies the
/// resolution-`n0` agreement conditions of this truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoSolutionReport {
    pub search_box: SiteSet,
    pub resolution_level: u32,
    pub index_box: IndexBox,
    /// True when the subshift constraint was enforced locally (the verdict
    /// is then relative to local admissibility on the search box).
    pub local_only: bool,
    pub rows: usize,
    pub rank: usize,
    pub scope: String,
}

/// Outcome of the exact shadowing solver.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Found(ShadowingCertificate),
    NoSolution(NoSolutionReport),
}

impl SolveOutcome {
    pub fn certificate(&self) -> Option<&ShadowingCertificate> {
        match self {
            SolveOutcome::Found(c) => Some(c),
            SolveOutcome::NoSolution(_) => None,
        }
    }
}

/// Solves for an `ε`-shadowing point of the truncation: unknowns are the
/// values of a pattern `x` on the search box `B* = ⋃_α (E_{n0} + M_α)`;
/// the constraints are `τ_α(x)|_{E_{n0}} = x_α|_{E_{n0}}` for every exponent
/// `α` in the index box, plus local admissibility of `x` on `B*`. Any
/// solution yields a certificate whose residuals are all `≤ 2^{-n0} < ε`;
/// inconsistency certifies that no pattern supported on `B*` meets the
/// resolution-`n0` conditions (for a constrained subshift, relative to local
/// admissibility on `B*`).
pub fn find_shadowing_point(
    po: &PseudoOrbitTruncation,
    inst: &ShadowingInstance,
) -> Result<SolveOutcome> {
    if po.index_box.s() != inst.s() {
        return Err(Error::DimensionMismatch(
            "orbit index rank differs from the generator count".into(),
        ));
    }
    if po.entries[0].alphabet() != inst.sig().alphabet() {
        return Err(Error::DimensionMismatch(
            "orbit alphabet differs from the instance".into(),
        ));
    }
    let alphabet = *inst.sig().alphabet();
    let n0 = inst.resolution_level()?;
    let e_n0 = inst.exhaustion().level(n0)?;
    let alphas = po.index_box.set()?;
    let mut taus = Vec::with_capacity(alphas.len());
    let mut bstar = SiteSet::empty(inst.dims());
    for alpha in alphas.iter() {
        let tau = inst.monomial(&alpha)?;
        bstar = bstar.union(&e_n0.minkowski_sum(tau.memory())?)?;
        taus.push(tau);
    }
    if !po.spatial_box.covers(&bstar) {
        let missing = bstar.difference(&po.spatial_box)?;
        return Err(Error::InsufficientResolution(format!(
            "spatial box does not cover the search box; required sites {}",
            crate::format_sites(&missing.sites())
        )));
    }
    let mut sys = LinearSystem::new(alphabet.field(), alphabet.ambient_dim(bstar.len()));
    for (ai, _alpha) in alphas.iter().enumerate() {
        let x_a = &po.entries[ai];
        for g in e_n0.iter() {
            let target = x_a.value(&g)?.to_vec();
            for (c, rhs) in target.iter().enumerate() {
                let row = output_row(&taus[ai], &bstar, &g, c)?;
                sys.push_row_sparse(&row, *rhs)?;
            }
        }
    }
    for row in inst.sig().local_constraint_rows(&bstar)? {
        sys.push_row_sparse(&row, 0)?;
    }
    let local_only = !inst.sig().is_full();
    if !sys.is_consistent() {
        let scope = format!(
            "no pattern supported on the {}-site search box satisfies the \
             resolution-{} agreement conditions of this truncation{}",
            bstar.len(),
            n0,
            if local_only {
                " (relative to local admissibility on the search box)"
            } else {
                ""
            }
        );
        return Ok(SolveOutcome::NoSolution(NoSolutionReport {
            search_box: bstar,
            resolution_level: n0,
            index_box: po.index_box,
            local_only,
            rows: sys.rows_seen(),
            rank: sys.rank(),
            scope,
        }));
    }
    let values = sys.particular_solution().expect("consistent system");
    let point = Pattern::new(alphabet, bstar.clone(), values)?;
    let mut residuals = Vec::with_capacity(alphas.len());
    for (ai, alpha) in alphas.iter().enumerate() {
        let image = taus[ai].apply(&point)?;
        let d = hamming_distance(&image, &po.entries[ai], inst.exhaustion(), n0)?;
        if d.certainly_less_than(&inst.epsilon()) != Some(true) {
            return Err(Error::InvalidArgument(
                "internal: solver produced a point violating its own bound".into(),
            ));
        }
        residuals.push((alpha, d));
    }
    Ok(SolveOutcome::Found(ShadowingCertificate {
        point,
        residuals,
        epsilon: inst.epsilon(),
        resolution_level: n0,
        local_only,
    }))
}

/// Outcome of independently re-checking a shadowing point against an orbit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub shadowed: bool,
    pub resolution_level: u32,
    pub residuals: Vec<(Site, TruncatedDistance)>,
    pub first_failure: Option<Site>,
}

/// Recomputes `d(τ_α(x), x_α)` for every exponent in the index box and
/// decides `< ε` exactly at resolution `n0`.
pub fn verify_shadowing(
    point: &Pattern,
    po: &PseudoOrbitTruncation,
    inst: &ShadowingInstance,
) -> Result<VerificationReport> {
    if po.index_box.s() != inst.s() {
        return Err(Error::DimensionMismatch(
            "orbit index rank differs from the generator count".into(),
        ));
    }
    let n0 = inst.resolution_level()?;
    let epsilon = inst.epsilon();
    let alphas = po.index_box.set()?;
    let mut residuals = Vec::with_capacity(alphas.len());
    let mut first_failure = None;
    for (ai, alpha) in alphas.iter().enumerate() {
        let tau = inst.monomial(&alpha)?;
        let image = tau.apply(point)?;
        let d = hamming_distance(&image, &po.entries[ai], inst.exhaustion(), n0)?;
        let verdict = d.certainly_less_than(&epsilon).ok_or_else(|| {
            Error::InsufficientResolution(
                "comparison against epsilon is not decidable at this truncation".into(),
            )
        })?;
        if !verdict && first_failure.is_none() {
            first_failure = Some(alpha.clone());
        }
        residuals.push((alpha, d));
    }
    Ok(VerificationReport {
        shadowed: first_failure.is_none(),
        resolution_level: n0,
        residuals,
        first_failure,
    })
}

/// The largest level `l ≤ cap` with `E_l` contained in the domain (0 when
/// even `E_1` escapes). Useful for reporting the depth to which a residual
/// can be resolved.
pub fn resolvable_level(domain: &SiteSet, e: &Exhaustion, cap: u32) -> Result<u32> {
    let mut best = 0;
    for n in 1..=cap {
        let level = match e.level(n) {
            Ok(set) => set,
            Err(Error::TooShallow(_)) => break,
            Err(other) => return Err(other),
        };
        if !domain.covers(&level) {
            break;
        }
        best = n;
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// The non-shadowing counterexample
// ---------------------------------------------------------------------------

/// One constant candidate configuration and the group element witnessing its
/// failure to `ε`-shadow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterexampleCandidate {
    /// The constant symbol, as an index in `0..a`.
    pub symbol: u64,
    /// A group element `g` (support bitmask) with `d(g·x, x_g) = 1 ≥ ε`.
    pub witness: u64,
    /// Whether the witness lies in `E_n`.
    pub witness_in_en: bool,
    /// The exact distance at the witness (always 1: distinct constants
    /// disagree everywhere, so they agree only on `E_0 = ∅`).
    pub distance: Rational,
}

/// Report of the exhaustive non-shadowing check over the group
/// `G = ⊕_ℕ Z/2Z` acting on the subshift of constant configurations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterexampleReport {
    pub n: u32,
    pub m: u32,
    pub alphabet_size: u64,
    /// The family's tolerance `δ = 2^{-n}`.
    pub delta: Rational,
    /// The shadowing tolerance (1/2).
    pub epsilon: Rational,
    /// Whether the family passed the `(E_m, d, δ)`-pseudo-orbit check on the
    /// enumerated window.
    pub orbit_valid: bool,
    /// Number of `(σ, τ)` pairs enumerated for validation.
    pub pairs_checked: u64,
    /// Exhaustion level of the enumerated window (both sides of `E_n` occur).
    pub window_level: u32,
    pub candidates: Vec<CounterexampleCandidate>,
    /// True only if some constant candidate shadows the family (never, for
    /// `a ≥ 2` and `n ≥ 1`).
    pub shadowing_point_exists: bool,
}

/// The classical failure of shadowing on an infinite-rank universe,
/// specialized to constants. Group elements of `G = ⊕_ℕ Z/2Z` are support
/// bitmasks with addition = XOR; `E_j` is the subgroup of masks supported on
/// the first `j` coordinates. The pseudo-orbit assigns the constant `0` to
/// every `g ∈ E_n` and the constant `1` otherwise. Because `E_n` is a
/// subgroup and `m ≤ n`, translating by `σ ∈ E_m` never crosses the `E_n`
/// boundary, so the family is a `2^{-n}`-pseudo-orbit; but any constant
/// candidate disagrees with one side of the boundary at distance 1, so no
/// candidate `1/2`-shadows it.
pub fn counterexample_demo(n: u32, m: u32, a: u64) -> Result<CounterexampleReport> {
    if m < 1 || n < m {
        return Err(Error::InvalidArgument(
            "levels must satisfy 1 <= m <= n".into(),
        ));
    }
    if n > MAX_COUNTEREXAMPLE_LEVEL {
        return Err(Error::BudgetExceeded(format!(
            "counterexample level {n} over cap {MAX_COUNTEREXAMPLE_LEVEL}"
        )));
    }
    if a < 2 {
        return Err(Error::InvalidArgument("alphabet size must be >= 2".into()));
    }
    if m + n + 1 > 26 {
        return Err(Error::BudgetExceeded(
            "validation window too large to enumerate".into(),
        ));
    }
    let in_level = |g: u64, j: u32| g >> j == 0;
    let orbit_value = |g: u64| u64::from(!in_level(g, n));
    let window = 1u64 << (n + 1);
    let mut pairs_checked = 0u64;
    let mut orbit_valid = true;
    for sigma in 0..(1u64 << m) {
        for tau in 0..window {
            pairs_checked += 1;
            // Constants are shift-fixed, so the pseudo-orbit condition
            // compares the constants at τ and σ+τ; distinct constants are at
            // distance 1, equal ones at distance 0 < 2^{-n}.
            if orbit_value(tau) != orbit_value(sigma ^ tau) {
                orbit_valid = false;
            }
        }
    }
    let mut candidates = Vec::with_capacity(a as usize);
    let mut shadowing_point_exists = false;
    for symbol in 0..a {
        let witness = (0..window).find(|&g| orbit_value(g) != symbol);
        match witness {
            Some(g) => candidates.push(CounterexampleCandidate {
                symbol,
                witness: g,
                witness_in_en: in_level(g, n),
                distance: Rational::new(1, 1),
            }),
            None => shadowing_point_exists = true,
        }
    }
    Ok(CounterexampleReport {
        n,
        m,
        alphabet_size: a,
        delta: pow2_inverse(n),
        epsilon: Rational::new(1, 2),
        orbit_valid,
        pairs_checked,
        window_level: n + 1,
        candidates,
        shadowing_point_exists,
    })
}

// ---------------------------------------------------------------------------
// Trial driver
// ---------------------------------------------------------------------------

/// Per-trial parameters of the generate → perturb → validate → solve →
/// verify pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialConfig {
    /// Side `T` of the index cube `F_T = {0..T}^s`.
    pub index_side: u32,
    /// Window size `N` fed into the `δ` formula.
    pub n_window: u32,
    /// When set, overrides the formula and uses this tolerance directly.
    pub delta_override: Option<Rational>,
    /// Number of admissible random bumps applied to the exact orbit.
    pub flip_budget: u64,
    /// Number of bumps used when seeding large constrained boxes.
    pub seed_bumps: u32,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            index_side: 2,
            n_window: 1,
            delta_override: None,
            flip_budget: 16,
            seed_bumps: 12,
        }
    }
}

/// Everything observed during one seeded trial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialReport {
    pub params: DeltaParameters,
    /// The tolerance actually used (formula or override).
    pub delta: Rational,
    /// Resolution level of `delta`.
    pub delta_level: u32,
    pub spatial_box: SiteSet,
    pub perturb_placements: usize,
    pub perturb_kernel_dim: usize,
    pub perturb_moves: u64,
    pub perturb_notice: Option<String>,
    pub validation: ValidationReport,
    pub solved: bool,
    pub verified: bool,
    /// Largest residual upper bound over all exponents, when solved.
    pub residual_bound: Option<Rational>,
    pub certificate: Option<ShadowingCertificate>,
    pub no_solution: Option<NoSolutionReport>,
    /// True when the orbit validated, a point was found, and it verified.
    pub success: bool,
}

/// The deterministic per-trial random stream: one master seed, one stream
/// per trial index, so any trial is reproducible in isolation.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// Sizes a seed box so that the common output box of an exact orbit over the
/// index cube covers `E_l ∪ (E_l + M)` for the combined monomial memory `M`:
/// enough for validation at level `l` and for the solver's search box.
pub fn sized_seed_box(inst: &ShadowingInstance, f: IndexBox, level: u32) -> Result<SiteSet> {
    // Combined memory of every monomial in the index box.
    let alphas = f.set()?;
    let mut memory_all = SiteSet::singleton(Site::origin(inst.dims()));
    for alpha in alphas.iter() {
        memory_all = memory_all.union(inst.monomial(&alpha)?.memory())?;
    }
    let (_, mem_hi) = memory_all.bounding_box().expect("nonempty memory union");
    let e_level = inst.exhaustion().level(level)?;
    let (_, e_hi) = e_level
        .bounding_box()
        .ok_or_else(|| Error::InvalidArgument("exhaustion level is empty".into()))?;
    // The output box shrinks by one memory diameter, so pad the needed cover
    // E_l + M by one more.
    let need_hi = e_hi.add(&mem_hi)?;
    let seed_hi = need_hi.add(&mem_hi)?;
    SiteSet::rect(&Site::origin(inst.dims()), &seed_hi)
}

/// Runs one full trial: sizes a seed box so that every later step resolves,
/// draws an admissible seed, builds the exact orbit truncation, perturbs it
/// at `δ`, validates, solves, and verifies.
pub fn run_trial<R: Rng + ?Sized>(
    inst: &ShadowingInstance,
    cfg: &TrialConfig,
    rng: &mut R,
) -> Result<TrialReport> {
    let params = delta_for_epsilon(inst, cfg.n_window)?;
    let delta = cfg.delta_override.unwrap_or(params.delta);
    let delta_level = resolution_index(&delta)?;
    let f = IndexBox::new(inst.s(), cfg.index_side)?;
    let level = delta_level.max(params.resolution_level);
    let seed_box = sized_seed_box(inst, f, level)?;

    let seed = random_admissible_seed(inst.sig(), &seed_box, cfg.seed_bumps, rng)?;
    let orbit = exact_orbit(&seed, inst, f)?;
    let perturbed = perturb_orbit(&orbit, inst, &delta, rng, cfg.flip_budget)?;
    let validation = validate_pseudo_orbit(&perturbed.orbit, inst, &delta)?;
    let outcome = find_shadowing_point(&perturbed.orbit, inst)?;
    let (solved, verified, residual_bound, certificate, no_solution) = match outcome {
        SolveOutcome::Found(cert) => {
            let check = verify_shadowing(&cert.point, &perturbed.orbit, inst)?;
            let bound = cert
                .residuals
                .iter()
                .map(|(_, d)| d.upper_bound())
                .max();
            (true, check.shadowed, bound, Some(cert), None)
        }
        SolveOutcome::NoSolution(rep) => (false, false, None, None, Some(rep)),
    };
    let success = validation.valid && solved && verified;
    Ok(TrialReport {
        params,
        delta,
        delta_level,
        spatial_box: perturbed.orbit.spatial_box.clone(),
        perturb_placements: perturbed.placements,
        perturb_kernel_dim: perturbed.kernel_dim,
        perturb_moves: perturbed.moves_applied,
        perturb_notice: perturbed.notice,
        validation,
        solved,
        verified,
        residual_bound,
        certificate,
        no_solution,
        success,
    })
}
