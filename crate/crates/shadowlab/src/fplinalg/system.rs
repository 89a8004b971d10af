//! Incremental exact linear solver.
//!
//! Constraint rows are consumed one at a time and reduced against a growing
//! echelon basis, so large sparse systems (many rows, moderate unknown count)
//! never materialize as a dense stack. The generic engine keeps work values
//! lazily unreduced — products of residues fit `u64` with room for one
//! accumulation per basis row — and the `p = 2` engine works on packed words.

use super::packed;
use super::{FieldSpec, Subspace};
use crate::{Error, Result};

/// Streaming system `A x = b` over `F_p` with a fixed number of unknowns.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    field: FieldSpec,
    cols: usize,
    inconsistent: bool,
    rows_seen: usize,
    backend: Backend,
}

#[derive(Clone, Debug)]
enum Backend {
    Generic(GenericElim),
    Packed(Gf2Elim),
}

impl LinearSystem {
    pub fn new(field: FieldSpec, cols: usize) -> Self {
        let backend = if field.p() == 2 {
            Backend::Packed(Gf2Elim::new(cols))
        } else {
            Backend::Generic(GenericElim::new(field, cols))
        };
        LinearSystem {
            field,
            cols,
            inconsistent: false,
            rows_seen: 0,
            backend,
        }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    pub fn rank(&self) -> usize {
        match &self.backend {
            Backend::Generic(g) => g.rows.len(),
            Backend::Packed(g) => g.rows.len(),
        }
    }

    /// False once any pushed row has contradicted the others.
    pub fn is_consistent(&self) -> bool {
        !self.inconsistent
    }

    /// Adds the equation `row · x = rhs`. Entries may be unreduced.
    pub fn push_row_dense(&mut self, row: &[u64], rhs: u64) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "row of length {} against {} unknowns",
                row.len(),
                self.cols
            )));
        }
        self.rows_seen += 1;
        let rhs = self.field.reduce(rhs);
        let ok = match &mut self.backend {
            Backend::Generic(g) => g.push_dense(row, rhs),
            Backend::Packed(g) => g.push_dense(row, rhs),
        };
        if !ok {
            self.inconsistent = true;
        }
        Ok(())
    }

    /// Adds the equation `Σ coeff_i · x_{col_i} = rhs`. Repeated columns
    /// accumulate; entries may be unreduced.
    pub fn push_row_sparse(&mut self, entries: &[(usize, u64)], rhs: u64) -> Result<()> {
        for &(c, _) in entries {
            if c >= self.cols {
                return Err(Error::DimensionMismatch(format!(
                    "column {} against {} unknowns",
                    c, self.cols
                )));
            }
        }
        self.rows_seen += 1;
        let rhs = self.field.reduce(rhs);
        let ok = match &mut self.backend {
            Backend::Generic(g) => g.push_sparse(entries, rhs),
            Backend::Packed(g) => g.push_sparse(entries, rhs),
        };
        if !ok {
            self.inconsistent = true;
        }
        Ok(())
    }

    /// One solution with every free unknown set to zero, if consistent.
    pub fn particular_solution(&self) -> Option<Vec<u64>> {
        if self.inconsistent {
            return None;
        }
        Some(match &self.backend {
            Backend::Generic(g) => g.back_substitute(),
            Backend::Packed(g) => g.back_substitute(),
        })
    }

    /// Canonical homogeneous solution space of the rows pushed so far.
    pub fn kernel_subspace(&self) -> Subspace {
        let vectors = match &self.backend {
            Backend::Generic(g) => g.kernel_vectors(),
            Backend::Packed(g) => g.kernel_vectors(),
        };
        Subspace::from_spanning(self.field, self.cols, &vectors)
            .expect("kernel vectors match ambient")
    }

    /// Pivot columns of the echelon basis, strictly increasing.
    pub fn pivot_columns(&self) -> Vec<usize> {
        let mut pivots: Vec<usize> = match &self.backend {
            Backend::Generic(g) => g.rows.iter().map(|r| r.pivot).collect(),
            Backend::Packed(g) => g.rows.iter().map(|r| r.pivot).collect(),
        };
        pivots.sort_unstable();
        pivots
    }
}

/// Extracts the echelon basis as a canonical subspace of row space; mostly a
/// testing aid.
#[cfg(test)]
pub(crate) fn row_space(sys: &LinearSystem) -> Subspace {
    match &sys.backend {
        Backend::Generic(g) => {
            let mut vectors = Vec::new();
            for r in &g.rows {
                let mut v = vec![0u64; sys.cols];
                v[r.pivot..].copy_from_slice(&r.tail);
                vectors.push(v);
            }
            Subspace::from_spanning(sys.field, sys.cols, &vectors).unwrap()
        }
        Backend::Packed(g) => {
            let vectors: Vec<Vec<u64>> = g
                .rows
                .iter()
                .map(|r| packed::unpack_row(&r.words, sys.cols))
                .collect();
            Subspace::from_spanning(sys.field, sys.cols, &vectors).unwrap()
        }
    }
}

#[derive(Clone, Debug)]
struct GenericRow {
    pivot: usize,
    /// Reduced residues for columns `pivot..cols`; leading entry is 1.
    tail: Vec<u64>,
    rhs: u64,
}

#[derive(Clone, Debug)]
struct GenericElim {
    field: FieldSpec,
    cols: usize,
    rows: Vec<GenericRow>,
    pivot_of_col: Vec<Option<u32>>,
    /// Scratch row, values kept lazily unreduced between eliminations.
    work: Vec<u64>,
}

impl GenericElim {
    fn new(field: FieldSpec, cols: usize) -> Self {
        GenericElim {
            field,
            cols,
            rows: Vec::new(),
            pivot_of_col: vec![None; cols],
            work: vec![0u64; cols],
        }
    }

    fn push_dense(&mut self, row: &[u64], rhs: u64) -> bool {
        let mut lo = self.cols;
        for (j, &v) in row.iter().enumerate() {
            let v = v % self.field.p();
            if v != 0 {
                self.work[j] = v;
                lo = lo.min(j);
            }
        }
        self.reduce_work(lo, rhs)
    }

    fn push_sparse(&mut self, entries: &[(usize, u64)], rhs: u64) -> bool {
        let mut lo = self.cols;
        for &(c, v) in entries {
            self.work[c] += v % self.field.p();
            lo = lo.min(c);
        }
        self.reduce_work(lo, rhs)
    }

    /// Eliminates the scratch row against the basis, installs it as a new
    /// basis row if independent, and reports whether the system stayed
    /// consistent. Clears the scratch before returning.
    fn reduce_work(&mut self, lo: usize, rhs: u64) -> bool {
        let p = self.field.p();
        let mut rhs_acc = rhs as u128;
        let mut pos = lo;
        let mut outcome = true;
        loop {
            while pos < self.cols && self.work[pos] % p == 0 {
                pos += 1;
            }
            if pos == self.cols {
                if rhs_acc % p as u128 != 0 {
                    outcome = false;
                }
                break;
            }
            match self.pivot_of_col[pos] {
                Some(row_idx) => {
                    let row = &self.rows[row_idx as usize];
                    let c = p - self.work[pos] % p;
                    for (w, &t) in self.work[pos..].iter_mut().zip(&row.tail) {
                        *w += c * t;
                    }
                    rhs_acc += (c * row.rhs) as u128;
                    // The leading entry is now ≡ 0; the scan resumes here.
                }
                None => {
                    let lead = self.work[pos] % p;
                    let inv = self.field.inv(lead);
                    let tail: Vec<u64> = self.work[pos..]
                        .iter()
                        .map(|&w| w % p * inv % p)
                        .collect();
                    let rhs_red = (rhs_acc % p as u128) as u64 * inv % p;
                    self.pivot_of_col[pos] = Some(self.rows.len() as u32);
                    self.rows.push(GenericRow {
                        pivot: pos,
                        tail,
                        rhs: rhs_red,
                    });
                    break;
                }
            }
        }
        for w in &mut self.work[lo..] {
            *w = 0;
        }
        outcome
    }

    fn back_substitute(&self) -> Vec<u64> {
        let p = self.field.p();
        let mut x = vec![0u64; self.cols];
        let mut order: Vec<&GenericRow> = self.rows.iter().collect();
        order.sort_by(|a, b| b.pivot.cmp(&a.pivot));
        for row in order {
            let mut acc: u128 = 0;
            for (off, &t) in row.tail.iter().enumerate().skip(1) {
                let xj = x[row.pivot + off];
                if t != 0 && xj != 0 {
                    acc += (t * xj) as u128;
                }
            }
            let acc = (acc % p as u128) as u64;
            x[row.pivot] = self.field.sub(row.rhs, acc);
        }
        x
    }

    fn kernel_vectors(&self) -> Vec<Vec<u64>> {
        let p = self.field.p();
        let mut order: Vec<&GenericRow> = self.rows.iter().collect();
        order.sort_by(|a, b| b.pivot.cmp(&a.pivot));
        let mut vectors = Vec::new();
        for free in 0..self.cols {
            if self.pivot_of_col[free].is_some() {
                continue;
            }
            let mut v = vec![0u64; self.cols];
            v[free] = 1;
            for row in &order {
                if row.pivot >= free {
                    continue;
                }
                let mut acc: u128 = 0;
                for (off, &t) in row.tail.iter().enumerate().skip(1) {
                    let vj = v[row.pivot + off];
                    if t != 0 && vj != 0 {
                        acc += (t * vj) as u128;
                    }
                }
                let acc = (acc % p as u128) as u64;
                v[row.pivot] = self.field.sub(0, acc);
            }
            vectors.push(v);
        }
        vectors
    }
}

#[derive(Clone, Debug)]
struct Gf2Row {
    pivot: usize,
    words: Vec<u64>,
    rhs: bool,
}

#[derive(Clone, Debug)]
struct Gf2Elim {
    cols: usize,
    words: usize,
    rows: Vec<Gf2Row>,
    pivot_of_col: Vec<Option<u32>>,
    work: Vec<u64>,
}

impl Gf2Elim {
    fn new(cols: usize) -> Self {
        let words = packed::words_for(cols);
        Gf2Elim {
            cols,
            words,
            rows: Vec::new(),
            pivot_of_col: vec![None; cols],
            work: vec![0u64; words],
        }
    }

    fn push_dense(&mut self, row: &[u64], rhs: u64) -> bool {
        let mut lo = self.cols;
        for (j, &v) in row.iter().enumerate() {
            if v & 1 == 1 {
                packed::set_bit(&mut self.work, j);
                lo = lo.min(j);
            }
        }
        self.reduce_work(lo, rhs & 1 == 1)
    }

    fn push_sparse(&mut self, entries: &[(usize, u64)], rhs: u64) -> bool {
        let mut lo = self.cols;
        for &(c, v) in entries {
            if v & 1 == 1 {
                self.work[c / 64] ^= 1 << (c % 64);
                lo = lo.min(c);
            }
        }
        self.reduce_work(lo, rhs & 1 == 1)
    }

    fn reduce_work(&mut self, lo: usize, rhs: bool) -> bool {
        let mut rhs_w = rhs;
        let mut pos = lo;
        let mut outcome = true;
        loop {
            match packed::first_set_from(&self.work, pos.min(self.cols), self.cols) {
                None => {
                    if rhs_w {
                        outcome = false;
                    }
                    break;
                }
                Some(lead) => match self.pivot_of_col[lead] {
                    Some(row_idx) => {
                        let row = &self.rows[row_idx as usize];
                        packed::xor_from(&mut self.work, &row.words, lead);
                        rhs_w ^= row.rhs;
                        pos = lead;
                    }
                    None => {
                        self.pivot_of_col[lead] = Some(self.rows.len() as u32);
                        self.rows.push(Gf2Row {
                            pivot: lead,
                            words: std::mem::replace(&mut self.work, vec![0u64; self.words]),
                            rhs: rhs_w,
                        });
                        return outcome;
                    }
                },
            }
        }
        self.work[lo / 64..].fill(0);
        outcome
    }

    fn back_substitute(&self) -> Vec<u64> {
        let mut x_bits = vec![0u64; self.words];
        let mut order: Vec<&Gf2Row> = self.rows.iter().collect();
        order.sort_by(|a, b| b.pivot.cmp(&a.pivot));
        for row in order {
            // Row bits below the pivot are zero and x[pivot] is still zero,
            // so the full dot product is exactly the tail contribution.
            let mut parity = row.rhs;
            for (w, xw) in row.words.iter().zip(&x_bits) {
                parity ^= ((w & xw).count_ones() & 1) == 1;
            }
            if parity {
                packed::set_bit(&mut x_bits, row.pivot);
            }
        }
        packed::unpack_row(&x_bits, self.cols)
    }

    fn kernel_vectors(&self) -> Vec<Vec<u64>> {
        let mut order: Vec<&Gf2Row> = self.rows.iter().collect();
        order.sort_by(|a, b| b.pivot.cmp(&a.pivot));
        let mut vectors = Vec::new();
        for free in 0..self.cols {
            if self.pivot_of_col[free].is_some() {
                continue;
            }
            let mut v_bits = vec![0u64; self.words];
            packed::set_bit(&mut v_bits, free);
            for row in &order {
                if row.pivot >= free {
                    continue;
                }
                let mut parity = false;
                for (w, vw) in row.words.iter().zip(&v_bits) {
                    parity ^= ((w & vw).count_ones() & 1) == 1;
                }
                if parity {
                    packed::set_bit(&mut v_bits, row.pivot);
                }
            }
            vectors.push(packed::unpack_row(&v_bits, self.cols));
        }
        vectors
    }
}
