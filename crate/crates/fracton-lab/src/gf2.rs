//! Bit-packed GF(2) linear algebra.
//!
//! Parity structures here are sparse (stabilizer supports and coupling spin
//! sets have at most 8 entries), but rank computations run over the dense
//! bit-packed form so that systems with a few thousand columns reduce in
//! milliseconds.

/// Dense GF(2) matrix with rows packed into `u64` words.
#[derive(Debug, Clone)]
pub struct BitMatrix {
    cols: usize,
    words: usize,
    rows: Vec<Vec<u64>>,
}

impl BitMatrix {
    pub fn new(cols: usize) -> Self {
        BitMatrix {
            cols,
            words: cols.div_ceil(64),
            rows: Vec::new(),
        }
    }

    /// Build from sparse row supports (column index lists).
    pub fn from_supports<S: AsRef<[usize]>>(cols: usize, supports: &[S]) -> Self {
        let mut m = BitMatrix::new(cols);
        for s in supports {
            m.push_row(s.as_ref());
        }
        m
    }

    pub fn push_row(&mut self, support: &[usize]) {
        let mut row = vec![0u64; self.words];
        for &c in support {
            assert!(c < self.cols, "column {c} out of range ({})", self.cols);
            row[c / 64] ^= 1 << (c % 64);
        }
        self.rows.push(row);
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    /// Rank over GF(2) by Gaussian elimination on a working copy.
    pub fn rank(&self) -> usize {
        let mut rows = self.rows.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let (w, b) = (col / 64, col % 64);
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][w] >> b & 1 == 1) else {
                continue;
            };
            rows.swap(rank, pivot);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[w] >> b & 1 == 1 {
                    for (x, p) in row.iter_mut().zip(&pivot_row) {
                        *x ^= p;
                    }
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Stream, StreamKey};

    /// Naive boolean elimination; independent cross-check for the packed path.
    fn naive_rank(cols: usize, supports: &[Vec<usize>]) -> usize {
        let mut rows: Vec<Vec<bool>> = supports
            .iter()
            .map(|s| {
                let mut r = vec![false; cols];
                for &c in s {
                    r[c] = !r[c];
                }
                r
            })
            .collect();
        let mut rank = 0;
        for col in 0..cols {
            if let Some(p) = (rank..rows.len()).find(|&r| rows[r][col]) {
                rows.swap(rank, p);
                let pivot = rows[rank].clone();
                for (r, row) in rows.iter_mut().enumerate() {
                    if r != rank && row[col] {
                        for (x, y) in row.iter_mut().zip(&pivot) {
                            *x ^= y;
                        }
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    #[test]
    fn rank_of_identity_like() {
        let m = BitMatrix::from_supports(4, &[vec![0], vec![1], vec![2], vec![0, 1, 2]]);
        assert_eq!(m.rank(), 3);
    }

    #[test]
    fn rank_empty_and_zero_rows() {
        let m = BitMatrix::from_supports::<Vec<usize>>(5, &[]);
        assert_eq!(m.rank(), 0);
        let m = BitMatrix::from_supports(5, &[vec![], vec![1, 1]]);
        assert_eq!(m.rank(), 0);
    }

    #[test]
    fn rank_matches_naive_on_random_matrices() {
        let mut s = Stream::new(StreamKey::root(11));
        for trial in 0..20 {
            let cols = 3 + (trial % 90);
            let rows = 1 + (trial * 7 % 60);
            let supports: Vec<Vec<usize>> = (0..rows)
                .map(|_| {
                    (0..cols)
                        .filter(|_| s.next_f64() < 0.3)
                        .collect::<Vec<usize>>()
                })
                .collect();
            let m = BitMatrix::from_supports(cols, &supports);
            assert_eq!(m.rank(), naive_rank(cols, &supports));
        }
    }
}
