//! Column factorizations of a subshift along a commuting family of linear
//! CA: `Λ = Ψ_E(Σ)` where `Ψ_E(x)(α) = (τ_α x)|_E`, together with finite
//! restrictions `Λ_F`, SFT-window estimation on test boxes, and descending
//! chain reports.
//!
//! Column patterns flatten in index-major order: the block of exponent `α`
//! (lexicographic rank in `F`) holds the site-major values of a pattern on
//! `E`. This is exactly the row-block order of
//! [`crate::cellauto::stacked_rule`], so flattened columns can be tested
//! against `Λ_F` subspaces directly.

use crate::cellauto::{commute, monomial, stacked_rule, LinearCA};
use crate::fplinalg::map_subspace;
use crate::lattice::{Site, SiteSet};
use crate::shiftspace::{Alphabet, Pattern, RestrictionMode, RestrictionResult, SubshiftSpec};
use crate::{Error, Result};

/// A base subshift, a finite window `E`, and a commuting generator family.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ColumnFactorizationSpec {
    sig: SubshiftSpec,
    window_e: SiteSet,
    generators: Vec<LinearCA>,
}

impl ColumnFactorizationSpec {
    /// Validates shapes and pairwise commutativity.
    pub fn new(
        sig: SubshiftSpec,
        window_e: SiteSet,
        generators: Vec<LinearCA>,
    ) -> Result<ColumnFactorizationSpec> {
        if generators.is_empty() {
            return Err(Error::InvalidArgument(
                "column factorization needs at least one generator".into(),
            ));
        }
        if window_e.is_empty() {
            return Err(Error::InvalidArgument("window E must be nonempty".into()));
        }
        if window_e.dims() != sig.dims() {
            return Err(Error::DimensionMismatch("window rank differs from universe".into()));
        }
        for (i, t) in generators.iter().enumerate() {
            if t.alphabet() != sig.alphabet() || t.dims() != sig.dims() {
                return Err(Error::DimensionMismatch(format!(
                    "generator {i} disagrees with the base subshift"
                )));
            }
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
        Ok(ColumnFactorizationSpec {
            sig,
            window_e,
            generators,
        })
    }

    pub fn sig(&self) -> &SubshiftSpec {
        &self.sig
    }

    pub fn window_e(&self) -> &SiteSet {
        &self.window_e
    }

    pub fn generators(&self) -> &[LinearCA] {
        &self.generators
    }

    /// Number of generators: the rank of the index monoid.
    pub fn s(&self) -> usize {
        self.generators.len()
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.sig.alphabet()
    }

    /// The super-alphabet `A^E` of column letters.
    pub fn column_alphabet(&self) -> Result<Alphabet> {
        Alphabet::new(
            self.alphabet().field(),
            self.alphabet().ambient_dim(self.window_e.len()),
        )
    }

    /// Union of the memories of all monomials with exponents in `f`.
    pub fn combined_memory(&self, f: &IndexBox) -> Result<SiteSet> {
        let mut m = SiteSet::empty(self.sig.dims());
        for alpha in f.set()?.iter() {
            let tau = monomial(&self.generators, alpha.coords(), false)?;
            m = m.union(tau.memory())?;
        }
        Ok(m)
    }
}

/// A cube `F_T = {0..T}^s` of exponents in the generator-index monoid.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct IndexBox {
    s: usize,
    t: u32,
}

impl IndexBox {
    pub fn new(s: usize, t: u32) -> Result<IndexBox> {
        if s == 0 {
            return Err(Error::InvalidArgument("index rank must be >= 1".into()));
        }
        Ok(IndexBox { s, t })
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn set(&self) -> Result<SiteSet> {
        SiteSet::cube(self.s, self.t)
    }
}

/// A finite stretch of a column configuration: one pattern on `E` per
/// exponent in the index set.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ColumnPattern {
    pub index_set: SiteSet,
    pub window: SiteSet,
    /// Rows in index order: `(τ_α x)|_E`.
    pub rows: Vec<Pattern>,
}

impl ColumnPattern {
    pub fn row(&self, alpha: &Site) -> Option<&Pattern> {
        self.index_set.index_of(alpha).map(|i| &self.rows[i])
    }

    /// Index-major flattened values, the layout of `Λ_F` subspaces.
    pub fn flat(&self) -> Vec<u64> {
        let mut out = Vec::new();
        for r in &self.rows {
            out.extend_from_slice(r.values());
        }
        out
    }
}

/// Evaluates `Ψ_E(x)` on the exponents of `f`: the pattern domain must cover
/// `E + M_α` for every `α`, otherwise the missing sites are reported.
pub fn psi(
    x: &Pattern,
    spec: &ColumnFactorizationSpec,
    f: &IndexBox,
) -> Result<ColumnPattern> {
    if x.alphabet() != spec.alphabet() {
        return Err(Error::DimensionMismatch("pattern alphabet differs from base".into()));
    }
    if f.s() != spec.s() {
        return Err(Error::DimensionMismatch(format!(
            "index box rank {} but {} generators",
            f.s(),
            spec.s()
        )));
    }
    let index_set = f.set()?;
    let mut taus = Vec::with_capacity(index_set.len());
    let mut missing = Vec::new();
    for alpha in index_set.iter() {
        let tau = monomial(&spec.generators, alpha.coords(), false)?;
        let needed = spec.window_e.minkowski_sum(tau.memory())?;
        for site in needed.iter() {
            if !x.domain().contains(&site) {
                missing.push(site);
            }
        }
        taus.push((tau, needed));
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(Error::InsufficientTruncation(missing));
    }
    let mut rows = Vec::with_capacity(taus.len());
    for (tau, needed) in &taus {
        let local = x.restrict(needed)?;
        let row = tau.apply(&local)?.restrict(&spec.window_e)?;
        rows.push(row);
    }
    Ok(ColumnPattern {
        index_set,
        window: spec.window_e.clone(),
        rows,
    })
}

/// The finite restriction `Λ_F = (Ψ_E(Σ))|_F`, computed as the image of the
/// base restriction on `E + M_F` under the stacked rule. Heuristic flags
/// propagate from the restriction.
pub fn lambda_restriction(
    spec: &ColumnFactorizationSpec,
    f: &IndexBox,
    mode: RestrictionMode,
) -> Result<RestrictionResult> {
    if f.s() != spec.s() {
        return Err(Error::DimensionMismatch(format!(
            "index box rank {} but {} generators",
            f.s(),
            spec.s()
        )));
    }
    let st = stacked_rule(&spec.generators, &f.set()?, &spec.window_e)?;
    let base = spec.sig.restriction(&st.input_domain, mode)?;
    let space = map_subspace(&st.matrix, &base.space)?;
    Ok(RestrictionResult {
        space,
        certified: base.certified,
        stabilization_index: base.stabilization_index,
        chain_dims: base.chain_dims,
        strict_drops: base.strict_drops,
    })
}

/// Result of an SFT-window search for `Λ`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WindowEstimate {
    /// Smallest passing `N`, or `None` when the budget is exhausted.
    pub window: Option<u32>,
    /// True when every ingredient was exact and the test-box equality held;
    /// heuristic restrictions always leave this false.
    pub certified: bool,
    /// Size of the test box used for the reported window.
    pub tested_box: Option<u32>,
    /// Trace of `dim Λ_{F_N}` for each candidate `N` in order.
    pub dims: Vec<usize>,
    /// Human-readable reasons certification was withheld, if any.
    pub heuristic_flags: Vec<String>,
}

/// Searches for the smallest `N <= budget` such that on the test box
/// `F_{N + test_depth}` the patterns whose every translated `F_N`-subwindow
/// lies in `Λ_{F_N}` are exactly the restriction `Λ_{F_{N+test_depth}}`.
/// Window checks are genuinely local: the candidate `Λ_{F_N}` is
/// reinterpreted as the constraint of an SFT over the column super-alphabet.
pub fn estimate_sft_window(
    spec: &ColumnFactorizationSpec,
    budget: u32,
    mode: RestrictionMode,
    test_depth: u32,
) -> Result<WindowEstimate> {
    if budget < 1 {
        return Err(Error::InvalidArgument("window budget must be >= 1".into()));
    }
    if test_depth < 1 {
        return Err(Error::InvalidArgument("test depth must be >= 1".into()));
    }
    let s = spec.s();
    let column_alphabet = spec.column_alphabet()?;
    let mut dims = Vec::new();
    for n in 1..=budget {
        let f_n = IndexBox::new(s, n)?;
        let lam_n = lambda_restriction(spec, &f_n, mode)?;
        dims.push(lam_n.space.dim());
        let f_test = IndexBox::new(s, n + test_depth)?;
        let lam_test = lambda_restriction(spec, &f_test, mode)?;
        let induced = SubshiftSpec::linear_sft(
            column_alphabet,
            s,
            f_n.set()?,
            lam_n.space.clone(),
        )?;
        let locally_legal = induced.local_pattern_space(&f_test.set()?)?;
        if locally_legal == lam_test.space {
            let mut heuristic_flags = Vec::new();
            if !lam_n.certified || !lam_test.certified {
                heuristic_flags
                    .push("base restriction computed by patience heuristic".to_string());
            }
            return Ok(WindowEstimate {
                window: Some(n),
                certified: heuristic_flags.is_empty(),
                tested_box: Some(n + test_depth),
                dims,
                heuristic_flags,
            });
        }
    }
    Ok(WindowEstimate {
        window: None,
        certified: false,
        tested_box: None,
        dims,
        heuristic_flags: vec![format!("no window found within budget {budget}")],
    })
}

/// Cardinality `p^dim`, saturating at `u128::MAX`.
pub fn space_cardinality(p: u64, dim: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..dim {
        acc = acc.saturating_mul(p as u128);
    }
    acc
}

/// Trace of a descending restriction chain. Entry 0 is the unconstrained
/// full space on `e`; entry `t + 1` is the chain value at dilation step `t`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ChainReport {
    pub dims: Vec<usize>,
    /// Cardinalities `p^dim` per step, saturating.
    pub cards: Vec<u128>,
    /// First index of the first run of `j` consecutive equal subspaces.
    pub stabilization_index: Option<u32>,
    pub stabilized: bool,
    pub strict_drops: u32,
}

/// Walks the restriction chain of `sig` at `e`, recording dimensions until
/// `j` consecutive values agree or `max_steps` dilation steps pass.
pub fn chain_report(
    sig: &SubshiftSpec,
    e: &SiteSet,
    j: u32,
    max_steps: u32,
) -> Result<ChainReport> {
    if j < 1 || max_steps < 1 {
        return Err(Error::InvalidArgument(
            "chain report needs j >= 1 and max_steps >= 1".into(),
        ));
    }
    let p = sig.alphabet().field().p();
    let ambient = sig.alphabet().ambient_dim(e.len());
    let full = crate::fplinalg::Subspace::full(sig.alphabet().field(), ambient);
    let mut dims = vec![ambient];
    let mut cards = vec![space_cardinality(p, ambient)];
    let mut strict_drops = 0u32;
    let mut current = full;
    let mut run_start = 0u32;
    let mut run = 1u32;
    for t in 0..max_steps {
        if run >= j {
            break;
        }
        let v = sig.chain_value(e, t)?;
        dims.push(v.dim());
        cards.push(space_cardinality(p, v.dim()));
        if v == current {
            run += 1;
        } else {
            if v.dim() < current.dim() {
                strict_drops += 1;
            }
            current = v;
            run_start = t + 1;
            run = 1;
        }
    }
    let stabilized = run >= j;
    Ok(ChainReport {
        dims,
        cards,
        stabilization_index: stabilized.then_some(run_start),
        stabilized,
        strict_drops,
    })
}

/// Chain report for the base restriction feeding `Λ_F`: the chain at
/// `E + M_F`.
pub fn chain_report_lambda(
    spec: &ColumnFactorizationSpec,
    f: &IndexBox,
    j: u32,
    max_steps: u32,
) -> Result<ChainReport> {
    let source = spec.window_e.minkowski_sum(&spec.combined_memory(f)?)?;
    chain_report(&spec.sig, &source, j, max_steps)
}
