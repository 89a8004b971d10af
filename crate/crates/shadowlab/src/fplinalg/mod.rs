//! Exact linear algebra over prime fields `F_p`.
//!
//! Subspaces are stored in reduced row-echelon form, so equal subspaces are
//! representationally equal (`==` on [`Subspace`] is set equality). All
//! public operations dispatch to a bit-packed engine when `p = 2` and to the
//! shared dense reference engine otherwise; the two are cross-checked in the
//! test suite.

mod packed;
mod system;

pub use system::LinearSystem;

use crate::{Error, Result};
use std::fmt;
use std::ops::Index;

/// Largest supported prime modulus. Keeps every product of two residues well
/// inside `u64` and lets the solvers accumulate lazily without overflow.
pub const MAX_PRIME: u64 = 0xffff;

/// Cap on `rows * cols` accepted by the text parser, to keep malformed input
/// from allocating unbounded memory.
pub const MAX_PARSE_ENTRIES: usize = 1 << 22;

/// A prime field `F_p`, with `p` checked by trial division.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct FieldSpec {
    p: u64,
}

impl FieldSpec {
    pub fn new(p: u64) -> Result<Self> {
        if p > MAX_PRIME {
            return Err(Error::ModulusTooLarge(p, MAX_PRIME));
        }
        if p < 2 {
            return Err(Error::NotPrime(p));
        }
        let mut d = 2;
        while d * d <= p {
            if p % d == 0 {
                return Err(Error::NotPrime(p));
            }
            d += 1;
        }
        Ok(FieldSpec { p })
    }

    pub fn p(self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce(self, a: u64) -> u64 {
        a % self.p
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.p && b < self.p);
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.p && b < self.p);
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        debug_assert!(a < self.p);
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.p && b < self.p);
        a * b % self.p
    }

    pub fn pow(self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.p;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of a nonzero residue.
    #[inline]
    pub fn inv(self, a: u64) -> u64 {
        debug_assert!(a != 0 && a < self.p, "inverse of zero residue");
        self.pow(a, self.p - 2)
    }
}

/// Dense matrix over `F_p`, row-major, entries stored reduced mod `p`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Matrix {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl Matrix {
    /// Builds a matrix from already-reduced residues. Rejects entries `>= p`
    /// and length mismatches.
    pub fn new(field: FieldSpec, rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        let expect = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::DimensionMismatch("matrix shape overflows".into()))?;
        if data.len() != expect {
            return Err(Error::DimensionMismatch(format!(
                "matrix data has {} entries, shape {}x{} needs {}",
                data.len(),
                rows,
                cols,
                expect
            )));
        }
        if let Some(bad) = data.iter().find(|&&x| x >= field.p()) {
            return Err(Error::InvalidArgument(format!(
                "entry {} is not a residue mod {}",
                bad,
                field.p()
            )));
        }
        Ok(Matrix {
            field,
            rows,
            cols,
            data,
        })
    }

    /// Like [`Matrix::new`] but reduces entries mod `p` instead of rejecting.
    pub fn from_unreduced(field: FieldSpec, rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        let data = data.into_iter().map(|x| field.reduce(x)).collect();
        Matrix::new(field, rows, cols, data)
    }

    pub fn zeros(field: FieldSpec, rows: usize, cols: usize) -> Self {
        Matrix {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Self {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % field.p();
        }
        m
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        assert!(v < self.field.p(), "entry is not a reduced residue");
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        assert!(i < self.rows, "row index out of range");
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        check_same_field(self.field, other.field)?;
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let p = self.field.p();
        let mut out = Matrix::zeros(self.field, self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.data[i * self.cols + l];
                if a == 0 {
                    continue;
                }
                let src = &other.data[l * other.cols..(l + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d = (*d + a * b) % p;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[u64]) -> Result<Vec<u64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        let p = self.field.p();
        let mut out = vec![0u64; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = 0u64;
            for (&a, &x) in row.iter().zip(v) {
                acc = (acc + a * x) % p;
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix> {
        check_same_field(self.field, other.field)?;
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot stack {} columns over {} columns",
                self.cols, other.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Matrix::new(self.field, self.rows + other.rows, self.cols, data)
    }

    /// Canonical text form: header `p rows cols`, then one line of
    /// space-separated residues per row. Round-trips bit-exactly.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.field.p(), self.rows, self.cols);
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the text form. Entries must be canonical residues (`< p`); the
    /// shape is capped so hostile input cannot balloon memory.
    pub fn from_text(text: &str) -> Result<Matrix> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix text".into()))?;
        let mut parts = header.split_whitespace();
        let p: u64 = parse_token(parts.next(), "modulus")?;
        let rows: usize = parse_token(parts.next(), "row count")?;
        let cols: usize = parse_token(parts.next(), "column count")?;
        if parts.next().is_some() {
            return Err(Error::Parse("matrix header has trailing tokens".into()));
        }
        let field = FieldSpec::new(p)?;
        let total = rows
            .checked_mul(cols)
            .filter(|&t| t <= MAX_PARSE_ENTRIES)
            .ok_or_else(|| Error::Parse("matrix shape exceeds parser cap".into()))?;
        let mut data = Vec::with_capacity(total);
        for i in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing matrix row {i}")))?;
            let before = data.len();
            for tok in line.split_whitespace() {
                let v: u64 = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad entry {tok:?} in row {i}")))?;
                if v >= p {
                    return Err(Error::Parse(format!(
                        "entry {v} in row {i} is not a residue mod {p}"
                    )));
                }
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(Error::Parse(format!(
                    "row {i} has {} entries, expected {cols}",
                    data.len() - before
                )));
            }
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::Parse("trailing content after matrix rows".into()));
        }
        Matrix::new(field, rows, cols, data)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = u64;

    fn index(&self, (i, j): (usize, usize)) -> &u64 {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        &self.data[i * self.cols + j]
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

fn parse_token<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what}")))
}

pub(crate) fn check_same_field(a: FieldSpec, b: FieldSpec) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!(
            "mixed fields F_{} and F_{}",
            a.p(),
            b.p()
        )));
    }
    Ok(())
}

/// Result of a reduced row-echelon computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rref {
    /// Same shape as the input, zero rows at the bottom.
    pub matrix: Matrix,
    /// Pivot column of each nonzero row, strictly increasing.
    pub pivots: Vec<usize>,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

/// Reduced row-echelon form. Dispatches to the bit-packed engine for `p = 2`.
pub fn rref(m: &Matrix) -> Rref {
    if m.field.p() == 2 {
        let (data, pivots) = packed::rref_gf2(m.rows, m.cols, &m.data);
        return Rref {
            matrix: Matrix {
                field: m.field,
                rows: m.rows,
                cols: m.cols,
                data,
            },
            pivots,
        };
    }
    let (data, pivots) = rref_reference(m.field, m.rows, m.cols, m.data.clone());
    Rref {
        matrix: Matrix {
            field: m.field,
            rows: m.rows,
            cols: m.cols,
            data,
        },
        pivots,
    }
}

/// Textbook in-place Gauss–Jordan over any `F_p`; the reference engine the
/// fast paths are tested against.
pub(crate) fn rref_reference(
    field: FieldSpec,
    rows: usize,
    cols: usize,
    mut data: Vec<u64>,
) -> (Vec<u64>, Vec<usize>) {
    let p = field.p();
    let mut pivots = Vec::new();
    let mut cur = 0usize;
    for col in 0..cols {
        let Some(pr) = (cur..rows).find(|&r| data[r * cols + col] != 0) else {
            continue;
        };
        if pr != cur {
            for j in 0..cols {
                data.swap(cur * cols + j, pr * cols + j);
            }
        }
        let inv = field.inv(data[cur * cols + col]);
        for j in col..cols {
            data[cur * cols + j] = data[cur * cols + j] * inv % p;
        }
        for r in 0..rows {
            if r == cur {
                continue;
            }
            let factor = data[r * cols + col];
            if factor == 0 {
                continue;
            }
            let mul = p - factor;
            for j in col..cols {
                data[r * cols + j] = (data[r * cols + j] + mul * data[cur * cols + j]) % p;
            }
        }
        pivots.push(col);
        cur += 1;
        if cur == rows {
            break;
        }
    }
    (data, pivots)
}

/// A linear subspace of `F_p^n` in canonical form: the basis matrix is in
/// reduced row-echelon form with no zero rows, so two values compare equal
/// exactly when they are the same subspace.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Subspace {
    field: FieldSpec,
    ambient: usize,
    basis: Matrix,
    pivots: Vec<usize>,
}

impl Subspace {
    /// Canonicalizes the row space of `m`.
    pub fn from_rows(m: &Matrix) -> Subspace {
        let r = rref(m);
        let rank = r.rank();
        let mut data = r.matrix.data;
        data.truncate(rank * m.cols);
        Subspace {
            field: m.field,
            ambient: m.cols,
            basis: Matrix {
                field: m.field,
                rows: rank,
                cols: m.cols,
                data,
            },
            pivots: r.pivots,
        }
    }

    /// Canonicalizes the span of the given vectors.
    pub fn from_spanning(field: FieldSpec, ambient: usize, vectors: &[Vec<u64>]) -> Result<Subspace> {
        let mut data = Vec::with_capacity(vectors.len() * ambient);
        for v in vectors {
            if v.len() != ambient {
                return Err(Error::DimensionMismatch(format!(
                    "spanning vector of length {} in ambient {}",
                    v.len(),
                    ambient
                )));
            }
            data.extend_from_slice(v);
        }
        let m = Matrix::new(field, vectors.len(), ambient, data)?;
        Ok(Subspace::from_rows(&m))
    }

    pub fn zero(field: FieldSpec, ambient: usize) -> Subspace {
        Subspace {
            field,
            ambient,
            basis: Matrix::zeros(field, 0, ambient),
            pivots: Vec::new(),
        }
    }

    pub fn full(field: FieldSpec, ambient: usize) -> Subspace {
        Subspace {
            field,
            ambient,
            basis: Matrix::identity(field, ambient),
            pivots: (0..ambient).collect(),
        }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.rows
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient
    }

    /// RREF basis, one row per dimension.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Membership test for a single vector.
    pub fn member(&self, v: &[u64]) -> Result<bool> {
        if v.len() != self.ambient {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} in ambient {}",
                v.len(),
                self.ambient
            )));
        }
        let p = self.field.p();
        if let Some(bad) = v.iter().find(|&&x| x >= p) {
            return Err(Error::InvalidArgument(format!(
                "entry {bad} is not a residue mod {p}"
            )));
        }
        let mut w = v.to_vec();
        for (row_idx, &pc) in self.pivots.iter().enumerate() {
            let c = w[pc];
            if c == 0 {
                continue;
            }
            let mul = p - c;
            let row = self.basis.row(row_idx);
            for j in pc..self.ambient {
                w[j] = (w[j] + mul * row[j]) % p;
            }
        }
        Ok(w.iter().all(|&x| x == 0))
    }

    /// Subspace containment: does `self` contain `other`?
    pub fn contains(&self, other: &Subspace) -> Result<bool> {
        check_same_field(self.field, other.field)?;
        if self.ambient != other.ambient {
            return Err(Error::DimensionMismatch(format!(
                "ambient {} vs {}",
                self.ambient, other.ambient
            )));
        }
        for i in 0..other.dim() {
            if !self.member(other.basis.row(i))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Sum of subspaces (span of the union).
    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        check_same_field(self.field, other.field)?;
        let stacked = self.basis.vstack(&other.basis)?;
        Ok(Subspace::from_rows(&stacked))
    }

    /// Enumerates all vectors of the subspace in a deterministic order.
    /// Intended for desk-scale oracles; errors if `p^dim` exceeds `limit`.
    pub fn enumerate(&self, limit: usize) -> Result<Vec<Vec<u64>>> {
        let p = self.field.p();
        let count = (p as u128)
            .checked_pow(self.dim() as u32)
            .filter(|&c| c <= limit as u128)
            .ok_or_else(|| Error::BudgetExceeded(format!(
                "subspace enumeration of p^{} vectors exceeds limit {}",
                self.dim(),
                limit
            )))? as usize;
        let mut out = Vec::with_capacity(count);
        let mut coeffs = vec![0u64; self.dim()];
        loop {
            let mut v = vec![0u64; self.ambient];
            for (i, &c) in coeffs.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for (vj, &bj) in v.iter_mut().zip(self.basis.row(i)) {
                    *vj = (*vj + c * bj) % p;
                }
            }
            out.push(v);
            let mut i = 0;
            loop {
                if i == coeffs.len() {
                    return Ok(out);
                }
                coeffs[i] += 1;
                if coeffs[i] < p {
                    break;
                }
                coeffs[i] = 0;
                i += 1;
            }
        }
    }
}

/// Solves `a x = b`. `None` means inconsistent; errors are reserved for
/// shape violations. The kernel comes back canonical, so the full solution
/// set is `particular + kernel`.
pub fn solve(a: &Matrix, b: &[u64]) -> Result<Option<SolveSolution>> {
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side of length {} against {} rows",
            b.len(),
            a.rows
        )));
    }
    let p = a.field.p();
    if let Some(bad) = b.iter().find(|&&x| x >= p) {
        return Err(Error::InvalidArgument(format!(
            "entry {bad} is not a residue mod {p}"
        )));
    }
    // Row-reduce the augmented matrix; a pivot in the last column certifies
    // inconsistency, otherwise the leading block is exactly rref(a).
    let mut data = Vec::with_capacity(a.rows * (a.cols + 1));
    for i in 0..a.rows {
        data.extend_from_slice(a.row(i));
        data.push(b[i]);
    }
    let aug = Matrix {
        field: a.field,
        rows: a.rows,
        cols: a.cols + 1,
        data,
    };
    let r = rref(&aug);
    if r.pivots.last() == Some(&a.cols) {
        return Ok(None);
    }
    let mut particular = vec![0u64; a.cols];
    for (row_idx, &pc) in r.pivots.iter().enumerate() {
        particular[pc] = r.matrix.get(row_idx, a.cols);
    }
    let kernel = kernel_from_rref(a.field, a.cols, &r.matrix, &r.pivots);
    Ok(Some(SolveSolution { particular, kernel }))
}

/// A particular solution together with the homogeneous solution space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveSolution {
    pub particular: Vec<u64>,
    pub kernel: Subspace,
}

/// Image (column space) of `a`, a subspace of `F_p^rows`.
pub fn image(a: &Matrix) -> Subspace {
    Subspace::from_rows(&a.transpose())
}

/// Kernel `{x : a x = 0}`, a subspace of `F_p^cols`.
pub fn kernel(a: &Matrix) -> Subspace {
    let r = rref(a);
    kernel_from_rref(a.field, a.cols, &r.matrix, &r.pivots)
}

fn kernel_from_rref(field: FieldSpec, cols: usize, rr: &Matrix, pivots: &[usize]) -> Subspace {
    // One spanning vector per free column; canonicalize at the end. `rr` may
    // be an augmented matrix, hence the explicit `cols`.
    let p = field.p();
    let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
    let mut vectors = Vec::new();
    for free in 0..cols {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = vec![0u64; cols];
        v[free] = 1 % p;
        for (row_idx, &pc) in pivots.iter().enumerate() {
            let c = rr.get(row_idx, free);
            if c != 0 {
                v[pc] = p - c;
            }
        }
        vectors.push(v);
    }
    Subspace::from_spanning(field, cols, &vectors).expect("kernel vectors have ambient length")
}

/// Rows spanning the annihilator `w^⊥ = {c : c·v = 0 for all v in w}` under
/// the standard dot product. Shape `(ambient - dim) x ambient`.
pub fn annihilator(w: &Subspace) -> Matrix {
    kernel(&w.basis).basis.clone()
}

/// Intersection of two subspaces of the same ambient space.
pub fn intersect(u: &Subspace, v: &Subspace) -> Result<Subspace> {
    check_same_field(u.field, v.field)?;
    if u.ambient != v.ambient {
        return Err(Error::DimensionMismatch(format!(
            "ambient {} vs {}",
            u.ambient, v.ambient
        )));
    }
    let stacked = annihilator(u).vstack(&annihilator(v))?;
    Ok(kernel(&stacked))
}

/// Preimage `{x : a x ∈ w}`; `w` lives in `F_p^rows` of `a`.
pub fn preimage(a: &Matrix, w: &Subspace) -> Result<Subspace> {
    check_same_field(a.field, w.field)?;
    if w.ambient != a.rows {
        return Err(Error::DimensionMismatch(format!(
            "subspace ambient {} against {} rows",
            w.ambient, a.rows
        )));
    }
    let ann = annihilator(w);
    Ok(kernel(&ann.matmul(a)?))
}

/// Image of a subspace under a matrix: `{a x : x ∈ w}` in `F_p^rows`.
pub fn map_subspace(a: &Matrix, w: &Subspace) -> Result<Subspace> {
    check_same_field(a.field, w.field)?;
    if w.ambient != a.cols {
        return Err(Error::DimensionMismatch(format!(
            "subspace ambient {} against {} columns",
            w.ambient, a.cols
        )));
    }
    Ok(Subspace::from_rows(&w.basis.matmul(&a.transpose())?))
}
