//! Bit-packed GF(2) vectors and matrices.
//!
//! Vectors are `Vec<u64>` words, little-endian within a word. Used for
//! symplectic Pauli components and for the linear algebra behind tableau
//! construction (rank, solving, nullspaces).

pub type BitVec = Vec<u64>;

pub fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

pub fn zero_vec(bits: usize) -> BitVec {
    vec![0u64; words_for(bits)]
}

pub fn get_bit(v: &[u64], i: usize) -> bool {
    v[i / 64] >> (i % 64) & 1 == 1
}

pub fn set_bit(v: &mut [u64], i: usize, value: bool) {
    if value {
        v[i / 64] |= 1u64 << (i % 64);
    } else {
        v[i / 64] &= !(1u64 << (i % 64));
    }
}

pub fn flip_bit(v: &mut [u64], i: usize) {
    v[i / 64] ^= 1u64 << (i % 64);
}

pub fn xor_in(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

pub fn is_zero(v: &[u64]) -> bool {
    v.iter().all(|&w| w == 0)
}

/// popcount of a & b
pub fn and_count(a: &[u64], b: &[u64]) -> usize {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x & y).count_ones() as usize)
        .sum()
}

/// parity of popcount of a & b
pub fn and_parity(a: &[u64], b: &[u64]) -> bool {
    and_count(a, b) % 2 == 1
}

/// Row-major GF(2) matrix.
#[derive(Debug, Clone)]
pub struct BitMat {
    pub rows: Vec<BitVec>,
    pub cols: usize,
}

impl BitMat {
    pub fn new(cols: usize) -> Self {
        BitMat {
            rows: Vec::new(),
            cols,
        }
    }

    pub fn push_row(&mut self, row: BitVec) {
        debug_assert_eq!(row.len(), words_for(self.cols));
        self.rows.push(row);
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.row_reduce().len()
    }

    /// In-place reduced row echelon form; returns the pivot column per
    /// nonzero row, in order. Zero rows are dropped.
    pub fn row_reduce(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            let Some(p) = (r..self.rows.len()).find(|&i| get_bit(&self.rows[i], c)) else {
                continue;
            };
            self.rows.swap(r, p);
            let pivot_row = self.rows[r].clone();
            for (i, row) in self.rows.iter_mut().enumerate() {
                if i != r && get_bit(row, c) {
                    xor_in(row, &pivot_row);
                }
            }
            pivots.push(c);
            r += 1;
            if r == self.rows.len() {
                break;
            }
        }
        self.rows.truncate(r);
        pivots
    }

    /// Solves `A x = b` for one solution (free variables set to zero).
    pub fn solve(&self, b: &[u64]) -> Option<BitVec> {
        self.solve_many(std::slice::from_ref(&b.to_vec()))
            .map(|mut v| v.pop().unwrap())
    }

    /// Solves `A x = b_k` for each right-hand side; `None` if any is
    /// inconsistent. Rows of A are equations over `cols` unknowns.
    pub fn solve_many(&self, bs: &[BitVec]) -> Option<Vec<BitVec>> {
        let k = bs.len();
        // augmented matrix [A | B]
        let aug_cols = self.cols + k;
        let mut aug = BitMat::new(aug_cols);
        for (i, row) in self.rows.iter().enumerate() {
            let mut r = zero_vec(aug_cols);
            r[..row.len()].copy_from_slice(row);
            for (j, b) in bs.iter().enumerate() {
                if get_bit(b, i) {
                    set_bit(&mut r, self.cols + j, true);
                }
            }
            aug.push_row(r);
        }
        let pivots = aug.row_reduce();
        // inconsistent if a pivot lands in the augmented block
        if pivots.iter().any(|&c| c >= self.cols) {
            return None;
        }
        let mut solutions = vec![zero_vec(self.cols); k];
        for (row, &c) in aug.rows.iter().zip(&pivots) {
            for (j, sol) in solutions.iter_mut().enumerate() {
                if get_bit(row, self.cols + j) {
                    set_bit(sol, c, true);
                }
            }
        }
        Some(solutions)
    }

    /// Basis of the right nullspace {x : A x = 0}.
    pub fn nullspace(&self) -> Vec<BitVec> {
        let mut m = self.clone();
        let pivots = m.row_reduce();
        let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut x = zero_vec(self.cols);
            set_bit(&mut x, free, true);
            for (row, &c) in m.rows.iter().zip(&pivots) {
                if get_bit(row, free) {
                    set_bit(&mut x, c, true);
                }
            }
            basis.push(x);
        }
        basis
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_solve() {
        // A = [[1,1,0],[0,1,1]]
        let mut a = BitMat::new(3);
        a.push_row(vec![0b011]);
        a.push_row(vec![0b110]);
        assert_eq!(a.rank(), 2);

        let x = a.solve(&vec![0b11u64]).unwrap();
        // check A x = b
        assert!(and_parity(&a.rows[0], &x));
        assert!(and_parity(&a.rows[1], &x));

        let ns = a.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(!and_parity(&a.rows[0], &ns[0]));
        assert!(!and_parity(&a.rows[1], &ns[0]));
    }

    #[test]
    fn inconsistent_system() {
        let mut a = BitMat::new(2);
        a.push_row(vec![0b01]);
        a.push_row(vec![0b01]);
        // b = (1, 0) is inconsistent
        assert!(a.solve(&vec![0b01u64]).is_none());
        assert!(a.solve(&vec![0b11u64]).unwrap().is_empty() == false);
    }

    #[test]
    fn solve_many_matches_solve() {
        let mut a = BitMat::new(4);
        a.push_row(vec![0b1010]);
        a.push_row(vec![0b0110]);
        a.push_row(vec![0b1001]);
        let bs = vec![vec![0b101u64], vec![0b011u64]];
        let sols = a.solve_many(&bs).unwrap();
        for (b, x) in bs.iter().zip(&sols) {
            for (i, row) in a.rows.iter().enumerate() {
                assert_eq!(and_parity(row, x), get_bit(b, i));
            }
        }
    }
}
