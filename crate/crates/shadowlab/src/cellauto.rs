//! Linear cellular automata over `N^r` with alphabet `F_p^k`.
//!
//! A CA is `τ(x)(g) = μ((g★x)|_M)` for a finite memory set `M` and a linear
//! local rule `μ : A^M → A`, stored as a `k × k·|M|` matrix whose column
//! blocks follow the lexicographic memory order. Values are kept in a
//! canonical form — memory sorted, zero column blocks pruned (except an
//! origin block) — so structural equality is equality of maps.

use crate::fplinalg::{map_subspace, Matrix, Subspace};
use crate::lattice::{stability_index, Exhaustion, Rational, Site, SiteSet};
use crate::shiftspace::{Alphabet, Pattern, RestrictionMode, RestrictionResult, SubshiftSpec};
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Cap on the total degree `|α| = Σ α_i` of a requested monomial.
pub const MAX_MONOMIAL_DEGREE: u32 = 16;

/// A linear cellular automaton in canonical form.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LinearCA {
    alphabet: Alphabet,
    dims: usize,
    memory: SiteSet,
    rule: Matrix,
}

impl LinearCA {
    /// Builds a CA from a memory set and rule matrix of shape
    /// `k × k·|memory|`, then canonicalizes.
    pub fn new(alphabet: Alphabet, dims: usize, memory: SiteSet, rule: Matrix) -> Result<LinearCA> {
        if dims == 0 {
            return Err(Error::InvalidArgument("universe rank must be >= 1".into()));
        }
        if memory.dims() != dims {
            return Err(Error::DimensionMismatch("memory rank differs from universe".into()));
        }
        if rule.field() != alphabet.field() {
            return Err(Error::DimensionMismatch("rule field differs from alphabet".into()));
        }
        let k = alphabet.k();
        if rule.rows() != k || rule.cols() != alphabet.ambient_dim(memory.len()) {
            return Err(Error::DimensionMismatch(format!(
                "rule is {}x{}, memory of {} sites needs {}x{}",
                rule.rows(),
                rule.cols(),
                memory.len(),
                k,
                alphabet.ambient_dim(memory.len())
            )));
        }
        Ok(Self::canonicalize(alphabet, dims, &memory, &rule))
    }

    /// Canonical form: drop memory sites whose whole column block is zero,
    /// keeping an explicit origin block so the zero CA has memory `{0}`.
    fn canonicalize(alphabet: Alphabet, dims: usize, memory: &SiteSet, rule: &Matrix) -> LinearCA {
        let k = alphabet.k();
        let mut kept: Vec<(Site, usize)> = Vec::new();
        for (j, site) in memory.iter().enumerate() {
            let zero_block =
                (0..k).all(|c| (0..k).all(|cc| rule.get(c, j * k + cc) == 0));
            if !zero_block || site.is_origin() {
                kept.push((site, j));
            }
        }
        if kept.is_empty() {
            return LinearCA {
                alphabet,
                dims,
                memory: SiteSet::singleton(Site::origin(dims)),
                rule: Matrix::zeros(alphabet.field(), k, k),
            };
        }
        let mut new_rule = Matrix::zeros(alphabet.field(), k, k * kept.len());
        for (nj, (_, j)) in kept.iter().enumerate() {
            for c in 0..k {
                for cc in 0..k {
                    new_rule.set(c, nj * k + cc, rule.get(c, j * k + cc));
                }
            }
        }
        let sites: Vec<Site> = kept.into_iter().map(|(s, _)| s).collect();
        let memory = SiteSet::from_sites(dims, sites).expect("canonical memory");
        LinearCA {
            alphabet,
            dims,
            memory,
            rule: new_rule,
        }
    }

    pub fn identity(alphabet: Alphabet, dims: usize) -> Result<LinearCA> {
        LinearCA::new(
            alphabet,
            dims,
            SiteSet::singleton(Site::origin(dims)),
            Matrix::identity(alphabet.field(), alphabet.k()),
        )
    }

    /// The shift by `g`: memory `{g}` with the identity block.
    pub fn shift(alphabet: Alphabet, g: Site) -> Result<LinearCA> {
        let dims = g.dims();
        LinearCA::new(
            alphabet,
            dims,
            SiteSet::singleton(g),
            Matrix::identity(alphabet.field(), alphabet.k()),
        )
    }

    /// A sitewise map: memory `{0}` with an arbitrary `k × k` block.
    pub fn pointwise(alphabet: Alphabet, dims: usize, block: Matrix) -> Result<LinearCA> {
        LinearCA::new(
            alphabet,
            dims,
            SiteSet::singleton(Site::origin(dims)),
            block,
        )
    }

    pub fn zero(alphabet: Alphabet, dims: usize) -> Result<LinearCA> {
        LinearCA::new(
            alphabet,
            dims,
            SiteSet::singleton(Site::origin(dims)),
            Matrix::zeros(alphabet.field(), alphabet.k(), alphabet.k()),
        )
    }

    /// Builds a CA from a rule given only on a subspace `W ⊆ A^M` — a matrix
    /// acting on `W`'s basis coordinates — extended by zero on the pivot
    /// complement. Every subspace is a direct summand, so some extension
    /// exists; the choice cannot affect behavior on configurations whose
    /// windows stay in `W`.
    pub fn from_partial_rule(
        alphabet: Alphabet,
        dims: usize,
        memory: SiteSet,
        domain: &Subspace,
        action: &Matrix,
    ) -> Result<LinearCA> {
        let k = alphabet.k();
        if domain.ambient() != alphabet.ambient_dim(memory.len()) {
            return Err(Error::DimensionMismatch(
                "partial-rule domain ambient differs from memory".into(),
            ));
        }
        if action.rows() != k || action.cols() != domain.dim() {
            return Err(Error::DimensionMismatch(format!(
                "partial rule action is {}x{}, needs {}x{}",
                action.rows(),
                action.cols(),
                k,
                domain.dim()
            )));
        }
        // Basis coordinates of w ∈ W are read off at the pivot positions of
        // the reduced basis, so "action ∘ pivot-selection" is a full rule
        // that restricts to the requested map on W.
        let mut rule = Matrix::zeros(alphabet.field(), k, domain.ambient());
        for (i, &piv) in domain.pivots().iter().enumerate() {
            for c in 0..k {
                rule.set(c, piv, action.get(c, i));
            }
        }
        LinearCA::new(alphabet, dims, memory, rule)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn memory(&self) -> &SiteSet {
        &self.memory
    }

    pub fn rule(&self) -> &Matrix {
        &self.rule
    }

    /// The `k × k` column block for one memory site.
    fn block(&self, j: usize) -> Matrix {
        let k = self.alphabet.k();
        let mut b = Matrix::zeros(self.alphabet.field(), k, k);
        for c in 0..k {
            for cc in 0..k {
                b.set(c, cc, self.rule.get(c, j * k + cc));
            }
        }
        b
    }

    /// Applies the CA to a finite pattern; the output lives on the
    /// memory-eroded domain (possibly empty).
    pub fn apply(&self, x: &Pattern) -> Result<Pattern> {
        if x.alphabet() != &self.alphabet {
            return Err(Error::DimensionMismatch("pattern alphabet differs from CA".into()));
        }
        if x.domain().dims() != self.dims {
            return Err(Error::DimensionMismatch("pattern rank differs from CA".into()));
        }
        let k = self.alphabet.k();
        let out_domain = x.domain().erode_by(&self.memory)?;
        let msites: Vec<Site> = self.memory.sites();
        let mut values = Vec::with_capacity(self.alphabet.ambient_dim(out_domain.len()));
        let mut window = vec![0u64; self.alphabet.ambient_dim(msites.len())];
        for g in out_domain.iter() {
            for (j, m) in msites.iter().enumerate() {
                let v = x.value(&g.add(m)?)?;
                window[j * k..(j + 1) * k].copy_from_slice(v);
            }
            let out = self.rule.mul_vec(&window)?;
            values.extend_from_slice(&out);
        }
        Pattern::new(self.alphabet, out_domain, values)
    }

    /// Composition `self ∘ other` as a CA: memory is the Minkowski sum and
    /// blocks convolve.
    pub fn compose(&self, other: &LinearCA) -> Result<LinearCA> {
        if self.alphabet != other.alphabet || self.dims != other.dims {
            return Err(Error::DimensionMismatch(
                "composition needs matching alphabet and universe".into(),
            ));
        }
        let k = self.alphabet.k();
        let field = self.alphabet.field();
        let mut blocks: BTreeMap<Site, Matrix> = BTreeMap::new();
        for (j1, m1) in self.memory.iter().enumerate() {
            let b1 = self.block(j1);
            for (j2, m2) in other.memory.iter().enumerate() {
                let b2 = other.block(j2);
                let s = m1.add(&m2)?;
                let prod = b1.matmul(&b2)?;
                match blocks.get_mut(&s) {
                    Some(acc) => {
                        let mut data = Vec::with_capacity(k * k);
                        for c in 0..k {
                            for cc in 0..k {
                                data.push(field.add(acc.get(c, cc), prod.get(c, cc)));
                            }
                        }
                        *acc = Matrix::new(field, k, k, data)?;
                    }
                    None => {
                        blocks.insert(s, prod);
                    }
                }
            }
        }
        let sites: Vec<Site> = blocks.keys().cloned().collect();
        let memory = SiteSet::from_sites(self.dims, sites)?;
        let mut rule = Matrix::zeros(field, k, k * memory.len());
        for (j, site) in memory.iter().enumerate() {
            let b = &blocks[&site];
            for c in 0..k {
                for cc in 0..k {
                    rule.set(c, j * k + cc, b.get(c, cc));
                }
            }
        }
        LinearCA::new(self.alphabet, self.dims, memory, rule)
    }

    /// Iterated composition by repeated squaring.
    pub fn power(&self, n: u32) -> Result<LinearCA> {
        if n > MAX_MONOMIAL_DEGREE {
            return Err(Error::BudgetExceeded(format!(
                "exponent {n} over the monomial degree cap {MAX_MONOMIAL_DEGREE}"
            )));
        }
        let mut acc = LinearCA::identity(self.alphabet, self.dims)?;
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.compose(&base)?;
            }
        }
        Ok(acc)
    }
}

/// Whether two CA commute, decided on canonical forms of the two
/// compositions.
pub fn commute(t1: &LinearCA, t2: &LinearCA) -> Result<bool> {
    Ok(t1.compose(t2)? == t2.compose(t1)?)
}

/// The monomial `τ_α = τ_1^{α_1} ∘ … ∘ τ_s^{α_s}` of a commuting family.
/// With `check_commuting`, pairwise commutativity is verified first.
pub fn monomial(
    gens: &[LinearCA],
    alpha: &[u32],
    check_commuting: bool,
) -> Result<LinearCA> {
    if gens.is_empty() {
        return Err(Error::InvalidArgument("monomial needs at least one generator".into()));
    }
    if alpha.len() != gens.len() {
        return Err(Error::DimensionMismatch(format!(
            "exponent vector has {} entries for {} generators",
            alpha.len(),
            gens.len()
        )));
    }
    for t in &gens[1..] {
        if t.alphabet != gens[0].alphabet || t.dims != gens[0].dims {
            return Err(Error::DimensionMismatch(
                "generators disagree on alphabet or universe".into(),
            ));
        }
    }
    let total: u32 = alpha.iter().sum();
    if total > MAX_MONOMIAL_DEGREE {
        return Err(Error::BudgetExceeded(format!(
            "monomial degree {total} over cap {MAX_MONOMIAL_DEGREE}"
        )));
    }
    if check_commuting {
        for i in 0..gens.len() {
            for j in i + 1..gens.len() {
                if !commute(&gens[i], &gens[j])? {
                    return Err(Error::NonCommuting(format!(
                        "generators {i} and {j} do not commute"
                    )));
                }
            }
        }
    }
    let mut acc = LinearCA::identity(gens[0].alphabet, gens[0].dims)?;
    for (t, &a) in gens.iter().zip(alpha) {
        acc = acc.compose(&t.power(a)?)?;
    }
    Ok(acc)
}

/// A certified Lipschitz bound for a CA under a given exhaustion.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LipschitzBound {
    /// Stability level `n_0` of the memory set.
    pub stability_level: u32,
    /// The constant `C = 2^{n_0}`.
    pub constant: u64,
    /// Whether the stability level itself is certified.
    pub certified: bool,
}

impl LipschitzBound {
    pub fn as_rational(&self) -> Rational {
        Rational::new(self.constant, 1)
    }

    /// The bound promises `d(τx, τy) <= C · d(x, y)`: agreement on `E_{n+n0}`
    /// forces the images to agree on `E_n`. In dyadic terms: if
    /// `d(x,y) <= 2^-(n + n0)` then `d(τx, τy) <= 2^-n = C · 2^-(n+n0)`.
    pub fn scaled(&self, d: &Rational) -> Rational {
        Rational::new(self.constant, 1) * *d
    }
}

/// Lipschitz constant `C = 2^{n_0}` from the memory's stability index.
pub fn lipschitz_constant(t: &LinearCA, e: &Exhaustion) -> Result<LipschitzBound> {
    let s = stability_index(t.memory(), e)?;
    if s.level > 62 {
        return Err(Error::BudgetExceeded("stability level too large for a u64 constant".into()));
    }
    Ok(LipschitzBound {
        stability_level: s.level,
        constant: 1u64 << s.level,
        certified: s.certified,
    })
}

/// Sparse coefficients over `A^domain` (site-major flat layout) of output
/// component `c` at site `g`: the row of the induced global map.
pub fn output_row(
    t: &LinearCA,
    domain: &SiteSet,
    g: &Site,
    c: usize,
) -> Result<Vec<(usize, u64)>> {
    let k = t.alphabet.k();
    if c >= k {
        return Err(Error::InvalidArgument("component out of range".into()));
    }
    let mut row = Vec::new();
    for (j, m) in t.memory.iter().enumerate() {
        let site = g.add(&m)?;
        let slot = domain.index_of(&site).ok_or_else(|| {
            Error::DimensionMismatch(format!("memory site {site} escapes the domain"))
        })?;
        for cc in 0..k {
            let coeff = t.rule.get(c, j * k + cc);
            if coeff != 0 {
                row.push((slot * k + cc, coeff));
            }
        }
    }
    Ok(row)
}

/// Dense matrix of the induced map `A^domain → A^outputs`; every output site
/// must have its full memory window inside the domain.
pub fn apply_matrix(t: &LinearCA, domain: &SiteSet, outputs: &SiteSet) -> Result<Matrix> {
    let k = t.alphabet.k();
    let mut m = Matrix::zeros(
        t.alphabet.field(),
        t.alphabet.ambient_dim(outputs.len()),
        t.alphabet.ambient_dim(domain.len()),
    );
    for (i, g) in outputs.iter().enumerate() {
        for c in 0..k {
            for (col, v) in output_row(t, domain, &g, c)? {
                m.set(i * k + c, col, v);
            }
        }
    }
    Ok(m)
}

/// Checks that the CA maps local pattern spaces into local pattern spaces of
/// the eroded box, for cubes `{0..d}^r` with `d = 1..=depth`.
pub fn preserves_subshift(t: &LinearCA, sig: &SubshiftSpec, depth: u32) -> Result<bool> {
    if sig.alphabet() != &t.alphabet || sig.dims() != t.dims {
        return Err(Error::DimensionMismatch("subshift and CA disagree".into()));
    }
    for d in 1..=depth {
        let b = SiteSet::cube(t.dims, d)?;
        let eroded = b.erode_by(&t.memory)?;
        if eroded.is_empty() {
            continue;
        }
        let local = sig.local_pattern_space(&b)?;
        let target = sig.local_pattern_space(&eroded)?;
        let map = apply_matrix(t, &b, &eroded)?;
        let image = map_subspace(&map, &local)?;
        if !target.contains(&image)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Restriction of the image subshift: `(τ(Σ))|_e` computed as the image of
/// `Σ|_{e+M}` under the induced local map. Heuristic flags propagate from
/// the restriction.
pub fn image_restriction(
    t: &LinearCA,
    sig: &SubshiftSpec,
    e: &SiteSet,
    mode: RestrictionMode,
) -> Result<RestrictionResult> {
    if sig.alphabet() != &t.alphabet || sig.dims() != t.dims {
        return Err(Error::DimensionMismatch("subshift and CA disagree".into()));
    }
    let source = e.minkowski_sum(&t.memory)?;
    let r = sig.restriction(&source, mode)?;
    let map = apply_matrix(t, &source, e)?;
    let space = map_subspace(&map, &r.space)?;
    Ok(RestrictionResult {
        space,
        certified: r.certified,
        stabilization_index: r.stabilization_index,
        chain_dims: r.chain_dims,
        strict_drops: r.strict_drops,
    })
}

/// A stacked local rule: the single matrix computing every monomial
/// `τ_α(x)|_e` for `α` in an index set `f`, from the combined input window
/// `e + M_F`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StackedRule {
    /// Maps `A^{input_domain} → ⊕_{α∈f} A^e`, row blocks in `f` order.
    pub matrix: Matrix,
    /// The combined window `e + M_F`.
    pub input_domain: SiteSet,
    /// The exponent sites of `f` in order, paired with their monomial CA.
    pub monomials: Vec<(Site, LinearCA)>,
}

/// Builds the stacked rule of a commuting family over index set `f ⊆ N^s`
/// and output sites `e`.
pub fn stacked_rule(gens: &[LinearCA], f: &SiteSet, e: &SiteSet) -> Result<StackedRule> {
    if gens.is_empty() {
        return Err(Error::InvalidArgument("stacked rule needs generators".into()));
    }
    if f.dims() != gens.len() {
        return Err(Error::DimensionMismatch(format!(
            "index set rank {} but {} generators",
            f.dims(),
            gens.len()
        )));
    }
    if f.is_empty() {
        return Err(Error::InvalidArgument("index set must be nonempty".into()));
    }
    let mut monomials = Vec::with_capacity(f.len());
    let mut m_f = SiteSet::empty(gens[0].dims);
    for alpha in f.iter() {
        let tau = monomial(gens, alpha.coords(), false)?;
        m_f = m_f.union(tau.memory())?;
        monomials.push((alpha, tau));
    }
    let input_domain = e.minkowski_sum(&m_f)?;
    let mut matrix: Option<Matrix> = None;
    for (_, tau) in &monomials {
        let block = apply_matrix(tau, &input_domain, e)?;
        matrix = Some(match matrix {
            Some(m) => m.vstack(&block)?,
            None => block,
        });
    }
    Ok(StackedRule {
        matrix: matrix.expect("nonempty index set"),
        input_domain,
        monomials,
    })
}
