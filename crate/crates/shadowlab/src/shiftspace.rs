//! Patterns, full shifts, and linear subshifts of finite type over `N^r`
//! with alphabet `F_p^k`.
//!
//! A pattern flattens to a vector in `F_p^{k·|domain|}` site-major: the value
//! block of the `i`-th domain site (lexicographic rank) occupies coordinates
//! `i·k .. (i+1)·k`. Every subspace in this module uses that layout.

use crate::fplinalg::{annihilator, kernel, map_subspace, FieldSpec, Matrix, Subspace};
use crate::lattice::{Site, SiteSet};
use crate::{Error, Result};

/// Default number of consecutive equal chain values accepted as heuristic
/// stabilization for restrictions in rank two and higher.
pub const DEFAULT_PATIENCE: u32 = 3;

/// Hard cap on chain steps before a restriction gives up.
const MAX_CHAIN_STEPS: u32 = 32;

/// Hard cap on the flattened dimension of a chain box.
const MAX_CHAIN_AMBIENT: usize = 4096;

/// Cap on exhaustive pattern enumeration.
pub const MAX_ENUMERATION: usize = 1 << 20;

/// The alphabet `A = F_p^k`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Alphabet {
    field: FieldSpec,
    k: usize,
}

impl Alphabet {
    pub fn new(field: FieldSpec, k: usize) -> Result<Alphabet> {
        if k == 0 {
            return Err(Error::InvalidArgument("alphabet rank k must be >= 1".into()));
        }
        Ok(Alphabet { field, k })
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Flattened dimension of `A^S` for a set of `sites` sites.
    pub fn ambient_dim(&self, sites: usize) -> usize {
        self.k * sites
    }

    /// All `p^k` letters, each a length-`k` vector.
    pub fn letters(&self) -> Result<Vec<Vec<u64>>> {
        let count = checked_pow(self.field.p(), self.k, MAX_ENUMERATION)?;
        let mut out = Vec::with_capacity(count);
        let mut letter = vec![0u64; self.k];
        loop {
            out.push(letter.clone());
            if !odometer_step(&mut letter, self.field.p()) {
                return Ok(out);
            }
        }
    }
}

fn checked_pow(base: u64, exp: usize, cap: usize) -> Result<usize> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc *= base as u128;
        if acc > cap as u128 {
            return Err(Error::BudgetExceeded(format!(
                "enumeration of {base}^{exp} elements exceeds cap {cap}"
            )));
        }
    }
    Ok(acc as usize)
}

/// Advances a base-`p` odometer; false when it wraps to all zeros.
fn odometer_step(digits: &mut [u64], p: u64) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < p {
            return true;
        }
        *d = 0;
    }
    false
}

/// A finitely supported configuration fragment: one letter of `F_p^k` per
/// domain site.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Pattern {
    alphabet: Alphabet,
    domain: SiteSet,
    values: Vec<u64>,
}

impl Pattern {
    pub fn new(alphabet: Alphabet, domain: SiteSet, values: Vec<u64>) -> Result<Pattern> {
        if values.len() != alphabet.ambient_dim(domain.len()) {
            return Err(Error::DimensionMismatch(format!(
                "pattern has {} entries, domain needs {}",
                values.len(),
                alphabet.ambient_dim(domain.len())
            )));
        }
        if values.iter().any(|&v| v >= alphabet.field.p()) {
            return Err(Error::InvalidArgument(
                "pattern entries must be reduced mod p".into(),
            ));
        }
        Ok(Pattern {
            alphabet,
            domain,
            values,
        })
    }

    pub fn zero(alphabet: Alphabet, domain: SiteSet) -> Pattern {
        let values = vec![0; alphabet.ambient_dim(domain.len())];
        Pattern {
            alphabet,
            domain,
            values,
        }
    }

    /// The constant pattern with the given letter at every site.
    pub fn constant(alphabet: Alphabet, domain: SiteSet, letter: &[u64]) -> Result<Pattern> {
        if letter.len() != alphabet.k {
            return Err(Error::DimensionMismatch(format!(
                "letter has {} components, alphabet rank is {}",
                letter.len(),
                alphabet.k
            )));
        }
        let mut values = Vec::with_capacity(alphabet.ambient_dim(domain.len()));
        for _ in 0..domain.len() {
            values.extend_from_slice(letter);
        }
        Pattern::new(alphabet, domain, values)
    }

    pub fn from_fn(
        alphabet: Alphabet,
        domain: SiteSet,
        mut f: impl FnMut(&Site) -> Vec<u64>,
    ) -> Result<Pattern> {
        let mut values = Vec::with_capacity(alphabet.ambient_dim(domain.len()));
        for s in domain.iter() {
            let letter = f(&s);
            if letter.len() != alphabet.k {
                return Err(Error::DimensionMismatch(
                    "letter rank mismatch in pattern builder".into(),
                ));
            }
            values.extend_from_slice(&letter);
        }
        Pattern::new(alphabet, domain, values)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn domain(&self) -> &SiteSet {
        &self.domain
    }

    /// Flat site-major values.
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn get(&self, site: &Site) -> Option<&[u64]> {
        let i = self.domain.index_of(site)?;
        let k = self.alphabet.k;
        Some(&self.values[i * k..(i + 1) * k])
    }

    pub fn value(&self, site: &Site) -> Result<&[u64]> {
        self.get(site).ok_or_else(|| {
            Error::InvalidArgument(format!("site {site} outside pattern domain"))
        })
    }

    pub fn set_value(&mut self, site: &Site, letter: &[u64]) -> Result<()> {
        let k = self.alphabet.k;
        if letter.len() != k {
            return Err(Error::DimensionMismatch("letter rank mismatch".into()));
        }
        if letter.iter().any(|&v| v >= self.alphabet.field.p()) {
            return Err(Error::InvalidArgument("letter not reduced mod p".into()));
        }
        let i = self
            .domain
            .index_of(site)
            .ok_or_else(|| Error::InvalidArgument(format!("site {site} outside pattern domain")))?;
        self.values[i * k..(i + 1) * k].copy_from_slice(letter);
        Ok(())
    }

    /// Restriction `x|_to`; the target must lie inside the domain.
    pub fn restrict(&self, to: &SiteSet) -> Result<Pattern> {
        if !self.domain.covers(to) {
            return Err(Error::InsufficientResolution(
                "restriction target escapes the pattern domain".into(),
            ));
        }
        let k = self.alphabet.k;
        let mut values = Vec::with_capacity(self.alphabet.ambient_dim(to.len()));
        for s in to.iter() {
            let i = self.domain.index_of(&s).expect("covered");
            values.extend_from_slice(&self.values[i * k..(i + 1) * k]);
        }
        Pattern::new(self.alphabet, to.clone(), values)
    }

    /// Whether the patterns agree at every site of `set`; both domains must
    /// cover `set`.
    pub fn agrees_on(&self, other: &Pattern, set: &SiteSet) -> Result<bool> {
        if self.alphabet != other.alphabet {
            return Err(Error::DimensionMismatch("patterns over different alphabets".into()));
        }
        let k = self.alphabet.k;
        for s in set.iter() {
            let (Some(i), Some(j)) = (self.domain.index_of(&s), other.domain.index_of(&s)) else {
                return Err(Error::InsufficientResolution(format!(
                    "pattern domains do not cover comparison site {s}"
                )));
            };
            if self.values[i * k..(i + 1) * k] != other.values[j * k..(j + 1) * k] {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Pointwise sum on a common domain.
    pub fn add(&self, other: &Pattern) -> Result<Pattern> {
        if self.alphabet != other.alphabet || self.domain != other.domain {
            return Err(Error::DimensionMismatch(
                "pattern sum needs matching alphabet and domain".into(),
            ));
        }
        let f = self.alphabet.field;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f.add(a, b))
            .collect();
        Pattern::new(self.alphabet, self.domain.clone(), values)
    }

    /// Pointwise scalar multiple.
    pub fn scale(&self, c: u64) -> Pattern {
        let f = self.alphabet.field;
        let values = self.values.iter().map(|&a| f.mul(a, c % f.p())).collect();
        Pattern {
            alphabet: self.alphabet,
            domain: self.domain.clone(),
            values,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }
}

/// The right shift `(g★x)(h) = x(h+g)` applied to a finite pattern: the
/// result lives on `{h : h+g ∈ domain(x)}`.
pub fn shift_pattern(g: &Site, x: &Pattern) -> Result<Pattern> {
    let domain = x.domain().erode_by(&SiteSet::singleton(g.clone()))?;
    let k = x.alphabet.k;
    let mut values = Vec::with_capacity(x.alphabet.ambient_dim(domain.len()));
    for h in domain.iter() {
        let src = h.add(g)?;
        let i = x.domain.index_of(&src).expect("eroded domain");
        values.extend_from_slice(&x.values[i * k..(i + 1) * k]);
    }
    Pattern::new(x.alphabet, domain, values)
}

/// Exhaustively enumerates `A^domain` (within a budget), for oracle tests.
pub fn enumerate_patterns(
    alphabet: &Alphabet,
    domain: &SiteSet,
    limit: usize,
) -> Result<Vec<Pattern>> {
    let total = alphabet.ambient_dim(domain.len());
    let count = checked_pow(alphabet.field.p(), total, limit.min(MAX_ENUMERATION))?;
    let mut out = Vec::with_capacity(count);
    let mut values = vec![0u64; total];
    loop {
        out.push(Pattern::new(*alphabet, domain.clone(), values.clone())?);
        if !odometer_step(&mut values, alphabet.field.p()) {
            return Ok(out);
        }
    }
}

/// A shift space over `N^r`: the full shift `A^{N^r}`, or the linear subshift
/// of finite type of all configurations whose every translate restricted to
/// the window lies in the constraint subspace.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SubshiftSpec {
    FullShift {
        alphabet: Alphabet,
        dims: usize,
    },
    LinearSft {
        alphabet: Alphabet,
        dims: usize,
        window: SiteSet,
        constraint: Subspace,
    },
}

impl SubshiftSpec {
    pub fn full_shift(alphabet: Alphabet, dims: usize) -> Result<SubshiftSpec> {
        if dims == 0 {
            return Err(Error::InvalidArgument("universe rank must be >= 1".into()));
        }
        Ok(SubshiftSpec::FullShift { alphabet, dims })
    }

    pub fn linear_sft(
        alphabet: Alphabet,
        dims: usize,
        window: SiteSet,
        constraint: Subspace,
    ) -> Result<SubshiftSpec> {
        if dims == 0 {
            return Err(Error::InvalidArgument("universe rank must be >= 1".into()));
        }
        if window.dims() != dims {
            return Err(Error::DimensionMismatch("window rank differs from universe".into()));
        }
        if constraint.field() != alphabet.field() {
            return Err(Error::DimensionMismatch("constraint field differs from alphabet".into()));
        }
        if constraint.ambient() != alphabet.ambient_dim(window.len()) {
            return Err(Error::DimensionMismatch(format!(
                "constraint ambient {} but window needs {}",
                constraint.ambient(),
                alphabet.ambient_dim(window.len())
            )));
        }
        Ok(SubshiftSpec::LinearSft {
            alphabet,
            dims,
            window,
            constraint,
        })
    }

    /// The subshift of constant configurations: all sites along each axis
    /// step carry the same letter.
    pub fn constants(alphabet: Alphabet, dims: usize) -> Result<SubshiftSpec> {
        if dims == 0 {
            return Err(Error::InvalidArgument("universe rank must be >= 1".into()));
        }
        let mut sites = vec![Site::origin(dims)];
        for axis in 0..dims {
            let mut c = vec![0u32; dims];
            c[axis] = 1;
            sites.push(Site::new(c));
        }
        let window = SiteSet::from_sites(dims, sites)?;
        let n = window.len();
        let k = alphabet.k();
        // Spanned by the "same component everywhere" vectors.
        let mut vectors = Vec::with_capacity(k);
        for c in 0..k {
            let mut v = vec![0u64; alphabet.ambient_dim(n)];
            for i in 0..n {
                v[i * k + c] = 1;
            }
            vectors.push(v);
        }
        let constraint =
            Subspace::from_spanning(alphabet.field(), alphabet.ambient_dim(n), &vectors)?;
        SubshiftSpec::linear_sft(alphabet, dims, window, constraint)
    }

    pub fn alphabet(&self) -> &Alphabet {
        match self {
            SubshiftSpec::FullShift { alphabet, .. } => alphabet,
            SubshiftSpec::LinearSft { alphabet, .. } => alphabet,
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            SubshiftSpec::FullShift { dims, .. } => *dims,
            SubshiftSpec::LinearSft { dims, .. } => *dims,
        }
    }

    pub fn is_full(&self) -> bool {
        matches!(self, SubshiftSpec::FullShift { .. })
    }

    pub fn window(&self) -> Option<&SiteSet> {
        match self {
            SubshiftSpec::FullShift { .. } => None,
            SubshiftSpec::LinearSft { window, .. } => Some(window),
        }
    }

    pub fn constraint(&self) -> Option<&Subspace> {
        match self {
            SubshiftSpec::FullShift { .. } => None,
            SubshiftSpec::LinearSft { constraint, .. } => Some(constraint),
        }
    }

    /// The defining window, with the full shift contributing no sites.
    pub fn window_or_empty(&self) -> SiteSet {
        match self.window() {
            Some(w) => w.clone(),
            None => SiteSet::empty(self.dims()),
        }
    }

    /// Sparse linear constraint rows over `A^b` (site-major layout) whose
    /// common kernel is `local_pattern_space(self, b)`.
    pub fn local_constraint_rows(&self, b: &SiteSet) -> Result<Vec<Vec<(usize, u64)>>> {
        let SubshiftSpec::LinearSft {
            alphabet,
            dims,
            window,
            constraint,
        } = self
        else {
            return Ok(Vec::new());
        };
        if b.dims() != *dims {
            return Err(Error::DimensionMismatch("box rank differs from universe".into()));
        }
        let k = alphabet.k();
        let ann = annihilator(constraint);
        if ann.rows() == 0 || window.is_empty() {
            return Ok(Vec::new());
        }
        let placements = b.erode_by(window)?;
        let wsites: Vec<Site> = window.sites();
        let mut rows = Vec::with_capacity(placements.len() * ann.rows());
        for g in placements.iter() {
            // Flat positions of the translated window inside b.
            let slots: Vec<usize> = wsites
                .iter()
                .map(|d| {
                    let gd = g.add(d).expect("in-bounds placement");
                    b.index_of(&gd).expect("eroded placement")
                })
                .collect();
            for i in 0..ann.rows() {
                let mut row: Vec<(usize, u64)> = Vec::new();
                for (j, &slot) in slots.iter().enumerate() {
                    for c in 0..k {
                        let coeff = ann.get(i, j * k + c);
                        if coeff != 0 {
                            row.push((slot * k + c, coeff));
                        }
                    }
                }
                rows.push(row);
            }
        }
        Ok(rows)
    }

    /// The subspace of `A^b` of patterns satisfying every translated
    /// constraint fully contained in `b`.
    pub fn local_pattern_space(&self, b: &SiteSet) -> Result<Subspace> {
        let alphabet = *self.alphabet();
        let ambient = alphabet.ambient_dim(b.len());
        let rows = self.local_constraint_rows(b)?;
        if rows.is_empty() {
            return Ok(Subspace::full(alphabet.field(), ambient));
        }
        let mut data = Vec::with_capacity(rows.len() * ambient);
        for row in &rows {
            let mut dense = vec![0u64; ambient];
            for &(j, v) in row {
                dense[j] = alphabet.field().add(dense[j], v);
            }
            data.extend_from_slice(&dense);
        }
        let m = Matrix::new(alphabet.field(), rows.len(), ambient, data)?;
        Ok(kernel(&m))
    }

    /// Whether a finite pattern satisfies every constraint placement fully
    /// contained in its domain.
    pub fn satisfies_locally(&self, x: &Pattern) -> Result<bool> {
        let SubshiftSpec::LinearSft {
            alphabet,
            dims,
            window,
            constraint,
        } = self
        else {
            return Ok(true);
        };
        if x.alphabet() != self.alphabet() {
            return Err(Error::DimensionMismatch("pattern alphabet differs from subshift".into()));
        }
        if x.domain().dims() != *dims {
            return Err(Error::DimensionMismatch("pattern rank differs from universe".into()));
        }
        if window.is_empty() {
            return Ok(true);
        }
        let k = alphabet.k();
        let placements = x.domain().erode_by(window)?;
        let wsites: Vec<Site> = window.sites();
        let mut vec_d = vec![0u64; alphabet.ambient_dim(window.len())];
        for g in placements.iter() {
            for (j, d) in wsites.iter().enumerate() {
                let v = x.value(&g.add(d)?)?;
                vec_d[j * k..(j + 1) * k].copy_from_slice(v);
            }
            if !constraint.member(&vec_d)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Globally admissible restriction `Σ_e`; see [`RestrictionMode`].
    pub fn restriction(&self, e: &SiteSet, mode: RestrictionMode) -> Result<RestrictionResult> {
        if e.dims() != self.dims() {
            return Err(Error::DimensionMismatch("restriction set rank differs from universe".into()));
        }
        if let RestrictionMode::Exact = mode {
            if self.dims() != 1 {
                return Err(Error::UnsupportedMode(
                    "exact restriction is only available for rank-1 universes".into(),
                ));
            }
        }
        let alphabet = *self.alphabet();
        if e.is_empty() || self.is_full() {
            let space = Subspace::full(alphabet.field(), alphabet.ambient_dim(e.len()));
            return Ok(RestrictionResult {
                space,
                certified: true,
                stabilization_index: Some(0),
                chain_dims: vec![alphabet.ambient_dim(e.len())],
                strict_drops: 0,
            });
        }
        match mode {
            RestrictionMode::Exact => self.restriction_exact_1d(e),
            RestrictionMode::Patience { j } => self.restriction_patience(e, j),
        }
    }

    /// Value of the descending chain at dilation step `t`: the projection to
    /// `e` of the local pattern space on the smallest box containing
    /// `e + {0..t}^r`.
    pub(crate) fn chain_value(&self, e: &SiteSet, t: u32) -> Result<Subspace> {
        let alphabet = self.alphabet();
        let dilated = e.minkowski_sum(&SiteSet::cube(self.dims(), t)?)?;
        let (lo, hi) = dilated.bounding_box().expect("nonempty dilation");
        let b = SiteSet::rect(&lo, &hi)?;
        if alphabet.ambient_dim(b.len()) > MAX_CHAIN_AMBIENT {
            return Err(Error::BudgetExceeded(format!(
                "chain box at step {t} has flattened dimension {} over cap {MAX_CHAIN_AMBIENT}",
                alphabet.ambient_dim(b.len())
            )));
        }
        let local = self.local_pattern_space(&b)?;
        let proj = projection_matrix(alphabet, &b, e)?;
        map_subspace(&proj, &local)
    }

    fn restriction_patience(&self, e: &SiteSet, j: u32) -> Result<RestrictionResult> {
        if j == 0 {
            return Err(Error::InvalidArgument("patience must be >= 1".into()));
        }
        let mut chain_dims = Vec::new();
        let mut strict_drops = 0u32;
        let mut current: Option<(Subspace, u32)> = None; // value + plateau start
        let mut run = 0u32;
        for t in 0..=MAX_CHAIN_STEPS {
            let v = self.chain_value(e, t)?;
            chain_dims.push(v.dim());
            match &mut current {
                Some((value, start)) if *value == v => {
                    run += 1;
                    if run >= j {
                        return Ok(RestrictionResult {
                            space: value.clone(),
                            certified: false,
                            stabilization_index: Some(*start),
                            chain_dims,
                            strict_drops,
                        });
                    }
                }
                Some((value, start)) => {
                    if v.dim() < value.dim() {
                        strict_drops += 1;
                    }
                    *value = v;
                    *start = t;
                    run = 1;
                }
                None => {
                    current = Some((v, t));
                    run = 1;
                }
            }
        }
        Err(Error::TooShallow(format!(
            "restriction chain did not repeat {j} times within {MAX_CHAIN_STEPS} steps"
        )))
    }

    fn restriction_exact_1d(&self, e: &SiteSet) -> Result<RestrictionResult> {
        let SubshiftSpec::LinearSft {
            alphabet,
            window,
            constraint,
            ..
        } = self
        else {
            unreachable!("full shifts are handled by the caller");
        };
        let k = alphabet.k();
        let field = alphabet.field();
        if window.is_empty() || constraint.is_full() {
            let ambient = alphabet.ambient_dim(e.len());
            return Ok(RestrictionResult {
                space: Subspace::full(field, ambient),
                certified: true,
                stabilization_index: Some(0),
                chain_dims: vec![ambient],
                strict_drops: 0,
            });
        }
        let q = window.bounding_box().expect("nonempty window").1.get(0);
        let w = (q + 1) as usize;
        let segment = |len: usize| -> Result<SiteSet> {
            SiteSet::rect(&Site::origin(1), &Site::new(vec![len as u32 - 1]))
        };

        // Greatest fixpoint of one-step right extendability on legal
        // w-blocks: the fixpoint is exactly the set of blocks occurring at
        // the start of a legal configuration.
        let block = segment(w)?;
        let mut l = self.local_pattern_space(&block)?;
        let mut steps = 0usize;
        loop {
            let next = extendable_step(self, alphabet, &l, w)?;
            if next == l {
                break;
            }
            l = next;
            steps += 1;
            if steps > k * w + 1 {
                return Err(Error::BudgetExceeded(
                    "extendability iteration exceeded its dimension bound".into(),
                ));
            }
        }

        // Blocks on [0, N) legal at every placement and with the length-w
        // suffix extendable forever: projecting to e gives the restriction.
        let e_max = e.bounding_box().expect("nonempty e").1.get(0) as usize;
        let n_len = (e_max + 1).max(w);
        let big = segment(n_len)?;
        let ambient = alphabet.ambient_dim(n_len);
        let mut data: Vec<u64> = Vec::new();
        let mut nrows = 0usize;
        for row in self.local_constraint_rows(&big)? {
            let mut dense = vec![0u64; ambient];
            for (j, v) in row {
                dense[j] = field.add(dense[j], v);
            }
            data.extend_from_slice(&dense);
            nrows += 1;
        }
        let ann = annihilator(&l);
        for i in 0..ann.rows() {
            let mut dense = vec![0u64; ambient];
            for j in 0..ann.cols() {
                dense[k * (n_len - w) + j] = ann.get(i, j);
            }
            data.extend_from_slice(&dense);
            nrows += 1;
        }
        let space = if nrows == 0 {
            Subspace::full(field, ambient)
        } else {
            kernel(&Matrix::new(field, nrows, ambient, data)?)
        };
        let proj = projection_matrix(alphabet, &big, e)?;
        let exact = map_subspace(&proj, &space)?;

        // Scan the dilation chain for the step where it reaches the exact
        // value; a finite cap suffices when e contains the origin, while
        // boxes that never reach down to 0 can stall strictly above.
        let cap = (w as u32) * (k as u32 + 1) + 4;
        let mut chain_dims = Vec::new();
        let mut strict_drops = 0u32;
        let mut stabilization_index = None;
        let mut prev_dim: Option<usize> = None;
        for t in 0..=cap {
            let v = self.chain_value(e, t)?;
            chain_dims.push(v.dim());
            if let Some(pd) = prev_dim {
                if v.dim() < pd {
                    strict_drops += 1;
                }
            }
            prev_dim = Some(v.dim());
            debug_assert!(
                (strict_drops as usize) <= alphabet.ambient_dim(e.len()),
                "restriction chain dropped more often than its dimension"
            );
            if v == exact {
                stabilization_index = Some(t);
                break;
            }
        }
        Ok(RestrictionResult {
            space: exact,
            certified: true,
            stabilization_index,
            chain_dims,
            strict_drops,
        })
    }
}

/// One step of the right-extendability operator: blocks `b` in `l` admitting
/// a letter `c` with the shifted block `(b_1, …, b_{w-1}, c)` back in `l`.
fn extendable_step(
    sig: &SubshiftSpec,
    alphabet: &Alphabet,
    l: &Subspace,
    w: usize,
) -> Result<Subspace> {
    let _ = sig;
    let k = alphabet.k();
    let field = alphabet.field();
    let wide = alphabet.ambient_dim(w + 1);
    let ann = annihilator(l);
    let mut data: Vec<u64> = Vec::new();
    let mut nrows = 0usize;
    for offset in [0usize, k] {
        for i in 0..ann.rows() {
            let mut dense = vec![0u64; wide];
            for j in 0..ann.cols() {
                dense[offset + j] = ann.get(i, j);
            }
            data.extend_from_slice(&dense);
            nrows += 1;
        }
    }
    let s = if nrows == 0 {
        Subspace::full(field, wide)
    } else {
        kernel(&Matrix::new(field, nrows, wide, data)?)
    };
    let mut proj = Matrix::zeros(field, alphabet.ambient_dim(w), wide);
    for i in 0..alphabet.ambient_dim(w) {
        proj.set(i, i, 1);
    }
    map_subspace(&proj, &s)
}

/// How to compute a globally admissible restriction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RestrictionMode {
    /// Rank-1 only: compute the true restriction via the extendability
    /// fixpoint and certify it.
    Exact,
    /// Stop after `j` consecutive equal chain values; the result carries an
    /// explicit heuristic flag (`certified = false`).
    Patience { j: u32 },
}

impl RestrictionMode {
    pub fn default_patience() -> RestrictionMode {
        RestrictionMode::Patience { j: DEFAULT_PATIENCE }
    }
}

/// A restriction value together with how trustworthy it is and how the
/// dilation chain behaved on the way.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RestrictionResult {
    /// Subspace of `A^e` in site-major layout.
    pub space: Subspace,
    /// True when the value is provably the full restriction.
    pub certified: bool,
    /// First dilation step whose chain value equals `space`, when observed
    /// within budget.
    pub stabilization_index: Option<u32>,
    /// Dimensions of the chain values in step order, as far as computed.
    pub chain_dims: Vec<usize>,
    /// Number of strict dimension drops observed along the chain.
    pub strict_drops: u32,
}

/// Selection matrix `A^from → A^to` for `to ⊆ from`, site-major on both
/// sides.
pub fn projection_matrix(alphabet: &Alphabet, from: &SiteSet, to: &SiteSet) -> Result<Matrix> {
    let k = alphabet.k();
    let mut m = Matrix::zeros(
        alphabet.field(),
        alphabet.ambient_dim(to.len()),
        alphabet.ambient_dim(from.len()),
    );
    for (i, s) in to.iter().enumerate() {
        let j = from.index_of(&s).ok_or_else(|| {
            Error::DimensionMismatch(format!("projection target site {s} outside source"))
        })?;
        for c in 0..k {
            m.set(i * k + c, j * k + c, 1);
        }
    }
    Ok(m)
}

/// A width-`height+1` horizontal strip of `N^2` read as a rank-1 universe
/// over the super-alphabet `A^{strip section}`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct StripDecomposition {
    /// Axis along which the strip is infinite.
    pub h_axis: usize,
    /// The transversal is `{0, …, height}` on the other axis.
    pub height: u32,
}

impl StripDecomposition {
    fn check(&self) -> Result<()> {
        if self.h_axis > 1 {
            return Err(Error::InvalidArgument(
                "strip decomposition requires h_axis in {0, 1}".into(),
            ));
        }
        Ok(())
    }

    fn site2(&self, h: u32, e: u32) -> Site {
        let mut c = vec![0u32; 2];
        c[self.h_axis] = h;
        c[1 - self.h_axis] = e;
        Site::new(c)
    }
}

fn strip_test_box_extent(dec: &StripDecomposition, test_box: &SiteSet) -> Result<u32> {
    let Some((lo, hi)) = test_box.as_box() else {
        return Err(Error::InvalidArgument("test region must be a box".into()));
    };
    if lo.coords().iter().any(|&c| c != 0) {
        return Err(Error::InvalidArgument("test box must start at the origin".into()));
    }
    if hi.get(1 - dec.h_axis) != dec.height {
        return Err(Error::InvalidArgument(
            "test box must span the strip height exactly".into(),
        ));
    }
    Ok(hi.get(dec.h_axis))
}

fn check_strip_inputs(
    alphabet: &Alphabet,
    dims: usize,
    dec: &StripDecomposition,
    d_window: &SiteSet,
    p_constraint: &Subspace,
) -> Result<()> {
    if dims != 2 {
        return Err(Error::InvalidArgument(
            "the strip identity is instantiated for rank-2 universes only".into(),
        ));
    }
    dec.check()?;
    if d_window.dims() != 1 || d_window.is_empty() {
        return Err(Error::InvalidArgument(
            "window must be a nonempty rank-1 site set".into(),
        ));
    }
    let etra = dec.height as usize + 1;
    let expected = alphabet.k() * etra * d_window.len();
    if p_constraint.ambient() != expected {
        return Err(Error::DimensionMismatch(format!(
            "constraint ambient {} but strip window needs {expected}",
            p_constraint.ambient()
        )));
    }
    if p_constraint.field() != alphabet.field() {
        return Err(Error::DimensionMismatch("constraint field differs from alphabet".into()));
    }
    Ok(())
}

/// Left-hand route: read the strip as a rank-1 subshift over the
/// super-alphabet `A^{transversal}`, compute its local pattern space on the
/// test length, and transport it back to plain-alphabet coordinates.
pub fn strip_route_space(
    alphabet: &Alphabet,
    dims: usize,
    dec: &StripDecomposition,
    d_window: &SiteSet,
    p_constraint: &Subspace,
    test_box: &SiteSet,
) -> Result<Subspace> {
    check_strip_inputs(alphabet, dims, dec, d_window, p_constraint)?;
    let len_h = strip_test_box_extent(dec, test_box)?;
    let etra = dec.height as usize + 1;
    let k = alphabet.k();
    let super_alphabet = Alphabet::new(alphabet.field(), k * etra)?;
    let sft1 = SubshiftSpec::linear_sft(
        super_alphabet,
        1,
        d_window.clone(),
        p_constraint.clone(),
    )?;
    let seg = SiteSet::rect(&Site::origin(1), &Site::new(vec![len_h]))?;
    let space_1d = sft1.local_pattern_space(&seg)?;
    // Transport: 1-D index (h, j·k + c) ↦ 2-D index (site rank of (h, j))·k + c.
    let cols = super_alphabet.ambient_dim(seg.len());
    let rows = alphabet.ambient_dim(test_box.len());
    let mut q = Matrix::zeros(alphabet.field(), rows, cols);
    for h in 0..=len_h {
        for j in 0..etra {
            let site = dec.site2(h, j as u32);
            let rank = test_box
                .index_of(&site)
                .ok_or_else(|| Error::InvalidArgument("test box does not cover the strip".into()))?;
            for c in 0..k {
                let one_d = (h as usize) * (k * etra) + j * k + c;
                q.set(rank * k + c, one_d, 1);
            }
        }
    }
    map_subspace(&q, &space_1d)
}

/// Right-hand route: inflate the strip window to a genuine rank-2 window and
/// compute the local pattern space directly.
pub fn direct_route_space(
    alphabet: &Alphabet,
    dims: usize,
    dec: &StripDecomposition,
    d_window: &SiteSet,
    p_constraint: &Subspace,
    test_box: &SiteSet,
) -> Result<Subspace> {
    check_strip_inputs(alphabet, dims, dec, d_window, p_constraint)?;
    strip_test_box_extent(dec, test_box)?;
    let etra = dec.height as usize + 1;
    let k = alphabet.k();
    let dsites: Vec<Site> = d_window.sites();
    let mut w2sites = Vec::with_capacity(dsites.len() * etra);
    for d in &dsites {
        for j in 0..etra {
            w2sites.push(dec.site2(d.get(0), j as u32));
        }
    }
    let window2 = SiteSet::from_sites(2, w2sites)?;
    // Transport the constraint across the site relabeling.
    let ambient = alphabet.ambient_dim(window2.len());
    let mut perm = Matrix::zeros(alphabet.field(), ambient, p_constraint.ambient());
    for (i, d) in dsites.iter().enumerate() {
        for j in 0..etra {
            let site = dec.site2(d.get(0), j as u32);
            let rank = window2.index_of(&site).expect("window site");
            for c in 0..k {
                perm.set(rank * k + c, i * (k * etra) + j * k + c, 1);
            }
        }
    }
    let constraint2 = map_subspace(&perm, p_constraint)?;
    let sft2 = SubshiftSpec::linear_sft(*alphabet, 2, window2, constraint2)?;
    sft2.local_pattern_space(test_box)
}

/// Whether the strip route and the direct route agree on the test box: the
/// finite-window instance of reading a product universe through its
/// super-alphabet.
pub fn check_restriction_identity(
    alphabet: &Alphabet,
    dims: usize,
    dec: &StripDecomposition,
    d_window: &SiteSet,
    p_constraint: &Subspace,
    test_box: &SiteSet,
) -> Result<bool> {
    let left = strip_route_space(alphabet, dims, dec, d_window, p_constraint, test_box)?;
    let right = direct_route_space(alphabet, dims, dec, d_window, p_constraint, test_box)?;
    Ok(left == right)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> FieldSpec {
        FieldSpec::new(p).unwrap()
    }

    fn alph(p: u64, k: usize) -> Alphabet {
        Alphabet::new(f(p), k).unwrap()
    }

    fn seg(lo: u32, hi: u32) -> SiteSet {
        SiteSet::rect(&Site::new(vec![lo]), &Site::new(vec![hi])).unwrap()
    }

    fn pat1(p: u64, vals: &[u64]) -> Pattern {
        Pattern::new(
            alph(p, 1),
            seg(0, vals.len() as u32 - 1),
            vals.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn shift_moves_the_window() {
        // x on {0..3} = (5, 6, 0, 2) over F_7; shifting by 2 keeps (0, 2).
        let x = pat1(7, &[5, 6, 0, 2]);
        let y = shift_pattern(&Site::new(vec![2]), &x).unwrap();
        assert_eq!(y.domain(), &seg(0, 1));
        assert_eq!(y.values(), &[0, 2]);
        let id = shift_pattern(&Site::new(vec![0]), &x).unwrap();
        assert_eq!(id, x);
    }

    #[test]
    fn shift_action_law() {
        let x = pat1(5, &[1, 2, 3, 4, 0, 2]);
        let g = Site::new(vec![1]);
        let h = Site::new(vec![2]);
        let lhs = shift_pattern(&g, &shift_pattern(&h, &x).unwrap()).unwrap();
        let rhs = shift_pattern(&g.add(&h).unwrap(), &x).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn constants_local_space_dimension() {
        // p=2, k=1, D={0,1}, P=span{(1,1)}: on {0,1,2} only the two constant
        // patterns survive, so the space has dimension 1. Cross-checked by
        // enumeration.
        let sig = SubshiftSpec::constants(alph(2, 1), 1).unwrap();
        let b = seg(0, 2);
        let space = sig.local_pattern_space(&b).unwrap();
        assert_eq!(space.dim(), 1);

        let all = enumerate_patterns(&alph(2, 1), &b, 1 << 10).unwrap();
        let legal: Vec<&Pattern> = all
            .iter()
            .filter(|x| sig.satisfies_locally(x).unwrap())
            .collect();
        assert_eq!(legal.len(), 2);
        for x in legal {
            assert!(space.member(x.values()).unwrap());
        }
    }

    #[test]
    fn full_shift_local_space_is_full() {
        let sig = SubshiftSpec::full_shift(alph(3, 2), 2).unwrap();
        let b = SiteSet::cube(2, 1).unwrap();
        let space = sig.local_pattern_space(&b).unwrap();
        assert!(space.is_full());
        assert_eq!(space.dim(), 8);
        // Empty region: the zero-dimensional full space.
        let empty = sig.local_pattern_space(&SiteSet::empty(2)).unwrap();
        assert_eq!(empty.ambient(), 0);
        assert!(empty.is_full());
    }

    #[test]
    fn local_space_chain_is_descending() {
        // Projection of the local space on a larger box is contained in the
        // local space projection on a smaller one.
        let sig = SubshiftSpec::constants(alph(3, 1), 1).unwrap();
        let e = seg(0, 1);
        let small = sig.chain_value(&e, 0).unwrap();
        let large = sig.chain_value(&e, 4).unwrap();
        assert!(small.contains(&large).unwrap());
    }

    #[test]
    fn exact_restriction_of_constants() {
        let sig = SubshiftSpec::constants(alph(2, 1), 1).unwrap();
        let e = seg(0, 2);
        let r = sig.restriction(&e, RestrictionMode::Exact).unwrap();
        assert_eq!(r.space.dim(), 1);
        assert!(r.certified);
        assert_eq!(r.stabilization_index, Some(0));

        // Enumeration oracle: legal blocks of length 8, projected to e.
        let b = seg(0, 7);
        let all = enumerate_patterns(&alph(2, 1), &b, 1 << 10).unwrap();
        let mut projected = std::collections::BTreeSet::new();
        for x in &all {
            if sig.satisfies_locally(x).unwrap() {
                projected.insert(x.restrict(&e).unwrap().values().to_vec());
            }
        }
        let members = r.space.enumerate(1 << 10).unwrap();
        let member_set: std::collections::BTreeSet<Vec<u64>> = members.into_iter().collect();
        assert_eq!(projected, member_set);
    }

    #[test]
    fn exact_restriction_with_forced_zero_tail() {
        // D={0,1}, allowed = span{(1,0)}: x(g+1) = 0 for all g, x(0) free.
        let a = alph(2, 1);
        let window = seg(0, 1);
        let constraint = Subspace::from_spanning(f(2), 2, &[vec![1, 0]]).unwrap();
        let sig = SubshiftSpec::linear_sft(a, 1, window, constraint).unwrap();
        let e = seg(0, 1);
        let r = sig.restriction(&e, RestrictionMode::Exact).unwrap();
        assert_eq!(r.space.dim(), 1);
        assert!(r.space.member(&[1, 0]).unwrap());
        assert!(!r.space.member(&[0, 1]).unwrap());

        // The same by brute enumeration on length-6 blocks.
        let b = seg(0, 5);
        let all = enumerate_patterns(&a, &b, 1 << 10).unwrap();
        let mut projected = std::collections::BTreeSet::new();
        for x in &all {
            if sig.satisfies_locally(x).unwrap() {
                projected.insert(x.restrict(&e).unwrap().values().to_vec());
            }
        }
        assert_eq!(projected.len(), 2);
        assert!(projected.contains(&vec![1, 0]));
    }

    #[test]
    fn exact_restriction_sees_boundary_constraints() {
        // Same SFT; e = {1, 2} does not contain the origin, yet the g = 0
        // placement forces x(1) = 0, so the true restriction is {(0, 0)}.
        let a = alph(2, 1);
        let window = seg(0, 1);
        let constraint = Subspace::from_spanning(f(2), 2, &[vec![1, 0]]).unwrap();
        let sig = SubshiftSpec::linear_sft(a, 1, window, constraint).unwrap();
        let e = seg(1, 2);
        let r = sig.restriction(&e, RestrictionMode::Exact).unwrap();
        assert!(r.space.is_zero());
        assert!(r.certified);
        // The dilation chain never reaches below site 1, so it stalls above
        // the exact value.
        assert_eq!(r.stabilization_index, None);
    }

    #[test]
    fn patience_restriction_flags_heuristic() {
        let sig = SubshiftSpec::constants(alph(2, 1), 2).unwrap();
        let e = SiteSet::cube(2, 1).unwrap();
        let r = sig
            .restriction(&e, RestrictionMode::default_patience())
            .unwrap();
        assert!(!r.certified);
        assert_eq!(r.space.dim(), 1);
        assert!(r.stabilization_index.is_some());

        // Exact mode is refused in rank 2.
        assert!(matches!(
            sig.restriction(&e, RestrictionMode::Exact),
            Err(Error::UnsupportedMode(_))
        ));
    }

    #[test]
    fn pattern_linearity_helpers() {
        let x = pat1(5, &[1, 2, 3]);
        let y = pat1(5, &[4, 4, 4]);
        let s = x.add(&y).unwrap();
        assert_eq!(s.values(), &[0, 1, 2]);
        let t = x.scale(3);
        assert_eq!(t.values(), &[3, 1, 4]);
        assert!(Pattern::zero(alph(5, 1), seg(0, 2)).is_zero());
    }

    #[test]
    fn strip_identity_for_constants() {
        // Constants along the strip axis over a 2-high strip: transported
        // constraint says the two super-letters of the window agree.
        let a = alph(2, 1);
        let dec = StripDecomposition { h_axis: 0, height: 1 };
        let d = seg(0, 1);
        // Super-alphabet rank 2; window has two sites; ambient 4.
        // Constraint: y(0) = y(1) as super-letters.
        let p = Subspace::from_spanning(
            f(2),
            4,
            &[vec![1, 0, 1, 0], vec![0, 1, 0, 1]],
        )
        .unwrap();
        let test_box = SiteSet::rect(&Site::origin(2), &Site::new(vec![3, 1])).unwrap();
        assert!(check_restriction_identity(&a, 2, &dec, &d, &p, &test_box).unwrap());

        // Same check with the axes swapped.
        let dec1 = StripDecomposition { h_axis: 1, height: 1 };
        let test_box1 = SiteSet::rect(&Site::origin(2), &Site::new(vec![1, 3])).unwrap();
        assert!(check_restriction_identity(&a, 2, &dec1, &d, &p, &test_box1).unwrap());
    }

    #[test]
    fn strip_identity_full_constraint_is_trivially_true() {
        let a = alph(3, 1);
        let dec = StripDecomposition { h_axis: 0, height: 2 };
        let d = seg(0, 0);
        let p = Subspace::full(f(3), 3);
        let test_box = SiteSet::rect(&Site::origin(2), &Site::new(vec![2, 2])).unwrap();
        assert!(check_restriction_identity(&a, 2, &dec, &d, &p, &test_box).unwrap());
    }

    #[test]
    fn strip_negative_control_differs() {
        // Compare the strip route of one SFT against the direct route of a
        // different one: the identity must fail to cross-validate.
        let a = alph(2, 1);
        let dec = StripDecomposition { h_axis: 0, height: 1 };
        let d = seg(0, 1);
        let constants = Subspace::from_spanning(
            f(2),
            4,
            &[vec![1, 0, 1, 0], vec![0, 1, 0, 1]],
        )
        .unwrap();
        let everything = Subspace::full(f(2), 4);
        let test_box = SiteSet::rect(&Site::origin(2), &Site::new(vec![3, 1])).unwrap();
        let left = strip_route_space(&a, 2, &dec, &d, &constants, &test_box).unwrap();
        let right = direct_route_space(&a, 2, &dec, &d, &everything, &test_box).unwrap();
        assert_ne!(left, right);
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        let a = alph(5, 2);
        let b = SiteSet::cube(1, 9).unwrap();
        assert!(matches!(
            enumerate_patterns(&a, &b, 1 << 10),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn satisfies_locally_matches_local_space() {
        // Every member of the local space satisfies locally, and counts
        // match p^dim.
        let sig = SubshiftSpec::constants(alph(3, 1), 1).unwrap();
        let b = seg(0, 3);
        let space = sig.local_pattern_space(&b).unwrap();
        let all = enumerate_patterns(&alph(3, 1), &b, 1 << 12).unwrap();
        let legal = all
            .iter()
            .filter(|x| sig.satisfies_locally(x).unwrap())
            .count();
        assert_eq!(legal, 3usize.pow(space.dim() as u32));
        for v in space.enumerate(1 << 12).unwrap() {
            let x = Pattern::new(alph(3, 1), b.clone(), v).unwrap();
            assert!(sig.satisfies_locally(&x).unwrap());
        }
    }
}
