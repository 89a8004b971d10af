//! Bit-packed row operations for `F_2`: one column per bit, rows reduced with
//! whole-word XORs.

const WORD: usize = 64;

#[inline]
pub(crate) fn words_for(cols: usize) -> usize {
    cols.div_ceil(WORD)
}

#[inline]
pub(crate) fn get_bit(row: &[u64], col: usize) -> bool {
    row[col / WORD] >> (col % WORD) & 1 == 1
}

#[inline]
pub(crate) fn set_bit(row: &mut [u64], col: usize) {
    row[col / WORD] |= 1 << (col % WORD);
}

/// First set bit at index `>= from`, if any.
pub(crate) fn first_set_from(row: &[u64], from: usize, cols: usize) -> Option<usize> {
    if from >= cols {
        return None;
    }
    let mut w = from / WORD;
    let masked = row[w] & !((1u64 << (from % WORD)) - 1);
    if masked != 0 {
        let c = w * WORD + masked.trailing_zeros() as usize;
        return (c < cols).then_some(c);
    }
    w += 1;
    while w < row.len() {
        if row[w] != 0 {
            let c = w * WORD + row[w].trailing_zeros() as usize;
            return (c < cols).then_some(c);
        }
        w += 1;
    }
    None
}

#[inline]
pub(crate) fn xor_from(dst: &mut [u64], src: &[u64], from_col: usize) {
    for w in from_col / WORD..src.len() {
        dst[w] ^= src[w];
    }
}

pub(crate) fn pack_row(bits: &[u64]) -> Vec<u64> {
    let mut row = vec![0u64; words_for(bits.len())];
    for (col, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            set_bit(&mut row, col);
        }
    }
    row
}

pub(crate) fn unpack_row(row: &[u64], cols: usize) -> Vec<u64> {
    (0..cols).map(|c| get_bit(row, c) as u64).collect()
}

/// Gauss–Jordan over `F_2` on packed rows. Returns the reduced flat data in
/// the original (unpacked) layout plus the pivot columns.
pub(crate) fn rref_gf2(rows: usize, cols: usize, data: &[u64]) -> (Vec<u64>, Vec<usize>) {
    let mut packed: Vec<Vec<u64>> = (0..rows)
        .map(|i| pack_row(&data[i * cols..(i + 1) * cols]))
        .collect();
    let mut pivots = Vec::new();
    let mut cur = 0usize;
    for col in 0..cols {
        let Some(pr) = (cur..rows).find(|&r| get_bit(&packed[r], col)) else {
            continue;
        };
        packed.swap(cur, pr);
        let pivot_row = std::mem::take(&mut packed[cur]);
        for (r, row) in packed.iter_mut().enumerate() {
            if r != cur && !row.is_empty() && get_bit(row, col) {
                xor_from(row, &pivot_row, col);
            }
        }
        packed[cur] = pivot_row;
        pivots.push(col);
        cur += 1;
        if cur == rows {
            break;
        }
    }
    let mut out = Vec::with_capacity(rows * cols);
    for row in &packed {
        out.extend(unpack_row(row, cols));
    }
    (out, pivots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_scan() {
        let mut row = vec![0u64; 3];
        assert_eq!(first_set_from(&row, 0, 192), None);
        set_bit(&mut row, 70);
        set_bit(&mut row, 130);
        assert_eq!(first_set_from(&row, 0, 192), Some(70));
        assert_eq!(first_set_from(&row, 70, 192), Some(70));
        assert_eq!(first_set_from(&row, 71, 192), Some(130));
        assert_eq!(first_set_from(&row, 131, 192), None);
        // Bits beyond `cols` are not reported.
        assert_eq!(first_set_from(&row, 0, 70), None);
    }

    #[test]
    fn pack_round_trip() {
        let bits: Vec<u64> = (0..130).map(|i| (i % 3 == 0) as u64).collect();
        let packed = pack_row(&bits);
        assert_eq!(unpack_row(&packed, 130), bits);
    }
}
