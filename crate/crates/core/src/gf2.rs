//! Bit-packed linear algebra over GF(2).
//!
//! Rows are packed into `u64` words. Everything here is plain Gaussian
//! elimination; the matrices coming from stabilizer tableaus are at most a few
//! thousand bits wide, so word-level elimination runs in microseconds and no
//! fancier algorithm is warranted.

/// Dense GF(2) matrix with rows packed into 64-bit words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64).max(1);
        BitMatrix {
            rows,
            cols,
            words_per_row,
            data: vec![0; rows * words_per_row],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        let w = self.data[r * self.words_per_row + c / 64];
        (w >> (c % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = &mut self.data[r * self.words_per_row + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    /// XOR row `src` into row `dst`.
    fn xor_rows(&mut self, dst: usize, src: usize) {
        for w in 0..self.words_per_row {
            let s = self.data[src * self.words_per_row + w];
            self.data[dst * self.words_per_row + w] ^= s;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.words_per_row {
            self.data.swap(a * self.words_per_row + w, b * self.words_per_row + w);
        }
    }

    /// Rank by in-place elimination on a copy.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.echelonize(None)
    }

    /// Basis of the left kernel: all `x` with `x^T M = 0`, one packed row of
    /// `self.rows` bits per basis vector.
    pub fn left_kernel(&self) -> Vec<Vec<u64>> {
        let mut m = self.clone();
        let track_words = self.rows.div_ceil(64).max(1);
        let mut track: Vec<Vec<u64>> = (0..self.rows)
            .map(|r| {
                let mut v = vec![0u64; track_words];
                v[r / 64] |= 1 << (r % 64);
                v
            })
            .collect();
        let rank = m.echelonize(Some(&mut track));
        track[rank..].to_vec()
    }

    /// Dimension of the left kernel.
    pub fn left_nullity(&self) -> usize {
        self.rows - self.rank()
    }

    /// Find `x` with `x^T M = target` (target packed over `cols` bits), if any.
    pub fn solve_left(&self, target: &[u64]) -> Option<Vec<u64>> {
        // Append the target as an extra row; it is in the row space iff
        // elimination zeroes it out, and the tracking row records the combo.
        let mut m = BitMatrix::zeros(self.rows + 1, self.cols);
        m.data[..self.rows * self.words_per_row].copy_from_slice(&self.data);
        let last = self.rows * m.words_per_row;
        m.data[last..last + self.words_per_row.min(target.len())]
            .copy_from_slice(&target[..self.words_per_row.min(target.len())]);

        let track_words = (self.rows + 1).div_ceil(64).max(1);
        let mut track: Vec<Vec<u64>> = (0..self.rows + 1)
            .map(|r| {
                let mut v = vec![0u64; track_words];
                v[r / 64] |= 1 << (r % 64);
                v
            })
            .collect();
        m.echelonize(Some(&mut track));
        // The target is dependent iff some kernel vector includes its bit.
        let tbit = self.rows;
        for (r, tr) in track.iter().enumerate() {
            let row_zero = m.row(r).iter().all(|&w| w == 0);
            if row_zero && (tr[tbit / 64] >> (tbit % 64)) & 1 == 1 {
                let mut combo = tr.clone();
                combo[tbit / 64] &= !(1 << (tbit % 64));
                combo.truncate(self.rows.div_ceil(64).max(1));
                return Some(combo);
            }
        }
        None
    }

    /// Row echelon form in place; returns the rank. `track` mirrors the row
    /// operations when given (used for kernel and solve).
    fn echelonize(&mut self, mut track: Option<&mut Vec<Vec<u64>>>) -> usize {
        let mut pivot_row = 0;
        for col in 0..self.cols {
            let mut found = None;
            for r in pivot_row..self.rows {
                if self.get(r, col) {
                    found = Some(r);
                    break;
                }
            }
            let Some(fr) = found else { continue };
            self.swap_rows(pivot_row, fr);
            if let Some(tr) = track.as_deref_mut() {
                tr.swap(pivot_row, fr);
            }
            for r in 0..self.rows {
                if r != pivot_row && self.get(r, col) {
                    self.xor_rows(r, pivot_row);
                    if let Some(tr) = track.as_deref_mut() {
                        let (src, dst) = (pivot_row, r);
                        let s = tr[src].clone();
                        for (d, sw) in tr[dst].iter_mut().zip(&s) {
                            *d ^= sw;
                        }
                    }
                }
            }
            pivot_row += 1;
            if pivot_row == self.rows {
                break;
            }
        }
        pivot_row
    }
}

/// Iterate the set bit positions of a packed bit vector.
pub fn iter_bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(wi, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                None
            } else {
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            }
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_identity() {
        let mut m = BitMatrix::zeros(5, 5);
        for i in 0..5 {
            m.set(i, i, true);
        }
        assert_eq!(m.rank(), 5);
        assert!(m.left_kernel().is_empty());
    }

    #[test]
    fn kernel_of_dependent_rows() {
        // rows: e0, e1, e0^e1  -> one kernel vector 0b111
        let mut m = BitMatrix::zeros(3, 4);
        m.set(0, 0, true);
        m.set(1, 1, true);
        m.set(2, 0, true);
        m.set(2, 1, true);
        assert_eq!(m.rank(), 2);
        let k = m.left_kernel();
        assert_eq!(k.len(), 1);
        let bits: Vec<usize> = iter_bits(&k[0]).collect();
        assert_eq!(bits, vec![0, 1, 2]);
    }

    #[test]
    fn solve_left_finds_combination() {
        let mut m = BitMatrix::zeros(3, 8);
        m.set(0, 0, true);
        m.set(0, 3, true);
        m.set(1, 1, true);
        m.set(2, 3, true);
        // target = row0 ^ row2 = bits {0,1}? no: {0,3}^{3} = {0}
        let target = vec![0b0001u64];
        let combo = m.solve_left(&target).expect("solvable");
        let bits: Vec<usize> = iter_bits(&combo).collect();
        assert_eq!(bits, vec![0, 2]);
        // unreachable target
        let bad = vec![0b10000u64];
        assert!(m.solve_left(&bad).is_none());
    }

    #[test]
    fn wide_matrix_across_word_boundary() {
        let mut m = BitMatrix::zeros(2, 130);
        m.set(0, 129, true);
        m.set(1, 129, true);
        m.set(1, 0, true);
        assert_eq!(m.rank(), 2);
        assert_eq!(m.left_nullity(), 0);
    }
}
