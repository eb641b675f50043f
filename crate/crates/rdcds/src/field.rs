//! Prime-field arithmetic and dense matrices over it.
//!
//! Elements carry their modulus so mixed-field operations fail loudly instead
//! of silently wrapping. All schemes in this crate work over word-sized prime
//! fields; products are computed in `u128` before reduction, so any prime
//! below 2^63 is safe.

use crate::error::{Error, Result};
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

/// An element of the prime field Z/qZ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp {
    value: u64,
    modulus: u64,
}

impl Fp {
    /// Reduces `value` into the field. `modulus` must be a prime >= 2.
    pub fn new(value: u64, modulus: u64) -> Self {
        debug_assert!(modulus >= 2);
        Fp { value: value % modulus, modulus }
    }

    pub fn zero(modulus: u64) -> Self {
        Fp { value: 0, modulus }
    }

    pub fn one(modulus: u64) -> Self {
        Fp::new(1, modulus)
    }

    /// Embeds a signed integer, mapping negatives to their residue.
    pub fn from_i64(value: i64, modulus: u64) -> Self {
        let m = modulus as i64;
        Fp::new(value.rem_euclid(m) as u64, modulus)
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn check_same_field(&self, other: &Fp) {
        assert_eq!(
            self.modulus, other.modulus,
            "field mismatch: {} vs {}",
            self.modulus, other.modulus
        );
    }

    pub fn pow(&self, mut exp: u64) -> Fp {
        let mut base = *self;
        let mut acc = Fp::one(self.modulus);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem (q is prime).
    pub fn inv(&self) -> Result<Fp> {
        if self.value == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(self.modulus - 2))
    }
}

impl Add for Fp {
    type Output = Fp;
    fn add(self, rhs: Fp) -> Fp {
        self.check_same_field(&rhs);
        let mut v = self.value + rhs.value;
        if v >= self.modulus {
            v -= self.modulus;
        }
        Fp { value: v, modulus: self.modulus }
    }
}

impl Sub for Fp {
    type Output = Fp;
    fn sub(self, rhs: Fp) -> Fp {
        self.check_same_field(&rhs);
        let v = if self.value >= rhs.value {
            self.value - rhs.value
        } else {
            self.value + self.modulus - rhs.value
        };
        Fp { value: v, modulus: self.modulus }
    }
}

impl Mul for Fp {
    type Output = Fp;
    fn mul(self, rhs: Fp) -> Fp {
        self.check_same_field(&rhs);
        let v = (self.value as u128 * rhs.value as u128) % self.modulus as u128;
        Fp { value: v as u64, modulus: self.modulus }
    }
}

impl Neg for Fp {
    type Output = Fp;
    fn neg(self) -> Fp {
        if self.value == 0 {
            self
        } else {
            Fp { value: self.modulus - self.value, modulus: self.modulus }
        }
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Dense row-major matrix over a single prime field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    modulus: u64,
    data: Vec<Fp>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize, modulus: u64) -> Self {
        Matrix { rows, cols, modulus, data: vec![Fp::zero(modulus); rows * cols] }
    }

    pub fn identity(n: usize, modulus: u64) -> Self {
        let mut m = Matrix::zeros(n, n, modulus);
        for i in 0..n {
            m[(i, i)] = Fp::one(modulus);
        }
        m
    }

    /// Builds a matrix from row vectors; all rows must share one length and
    /// all entries one modulus.
    pub fn from_rows(rows: Vec<Vec<Fp>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut modulus = 0;
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            if row.len() != c {
                return Err(Error::ShapeMismatch(format!(
                    "ragged rows: expected {c} columns, found {}",
                    row.len()
                )));
            }
            for &e in row {
                if modulus == 0 {
                    modulus = e.modulus();
                } else if e.modulus() != modulus {
                    return Err(Error::ShapeMismatch("mixed moduli in matrix".into()));
                }
                data.push(e);
            }
        }
        if modulus == 0 {
            return Err(Error::ShapeMismatch("cannot infer modulus of empty matrix".into()));
        }
        Ok(Matrix { rows: r, cols: c, modulus, data })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        modulus: u64,
        mut f: impl FnMut(usize, usize) -> Fp,
    ) -> Self {
        let mut m = Matrix::zeros(rows, cols, modulus);
        for i in 0..rows {
            for j in 0..cols {
                let e = f(i, j);
                assert_eq!(e.modulus(), modulus, "mixed moduli in matrix");
                m[(i, j)] = e;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn row(&self, i: usize) -> &[Fp] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> Vec<Fp> {
        self.row(i).to_vec()
    }

    pub fn set_row(&mut self, i: usize, values: &[Fp]) {
        assert_eq!(values.len(), self.cols, "row length mismatch");
        self.data[i * self.cols..(i + 1) * self.cols].copy_from_slice(values);
    }

    /// Copies `block` into self with its top-left corner at (r0, c0).
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols, "block out of range");
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    /// Extracts the submatrix with the given row and column indices, in order.
    pub fn submatrix(&self, row_ids: &[usize], col_ids: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(row_ids.len(), col_ids.len(), self.modulus);
        for (i, &r) in row_ids.iter().enumerate() {
            for (j, &c) in col_ids.iter().enumerate() {
                m[(i, j)] = self[(r, c)];
            }
        }
        m
    }

    pub fn columns(&self, col_ids: &[usize]) -> Matrix {
        let all_rows: Vec<usize> = (0..self.rows).collect();
        self.submatrix(&all_rows, col_ids)
    }

    pub fn column_range(&self, start: usize, end: usize) -> Matrix {
        let ids: Vec<usize> = (start..end).collect();
        self.columns(&ids)
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, self.modulus, |i, j| self[(j, i)])
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        Matrix::from_fn(self.rows, self.cols, self.modulus, |i, j| self[(i, j)] + rhs[(i, j)])
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        Matrix::from_fn(self.rows, self.cols, self.modulus, |i, j| self[(i, j)] - rhs[(i, j)])
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in mul");
        assert_eq!(self.modulus, rhs.modulus, "field mismatch in mul");
        let q = self.modulus as u128;
        let mut out = Matrix::zeros(self.rows, rhs.cols, self.modulus);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)].value() as u128;
                if a == 0 {
                    continue;
                }
                let lhs_row = i * rhs.cols;
                let rhs_row = k * rhs.cols;
                for j in 0..rhs.cols {
                    let cur = out.data[lhs_row + j].value() as u128;
                    let v = (cur + a * rhs.data[rhs_row + j].value() as u128) % q;
                    out.data[lhs_row + j] = Fp { value: v as u64, modulus: self.modulus };
                }
            }
        }
        out
    }

    pub fn scale(&self, s: Fp) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, self.modulus, |i, j| self[(i, j)] * s)
    }

    pub fn neg(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, self.modulus, |i, j| -self[(i, j)])
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Fp::is_zero)
    }

    /// Row-reduces a copy and returns the rank.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..m.cols {
            if rank == m.rows {
                break;
            }
            let pivot = (rank..m.rows).find(|&r| !m[(r, col)].is_zero());
            let Some(p) = pivot else { continue };
            m.swap_rows(rank, p);
            let inv = m[(rank, col)].inv().expect("pivot is nonzero");
            for j in col..m.cols {
                m[(rank, j)] = m[(rank, j)] * inv;
            }
            for r in 0..m.rows {
                if r != rank && !m[(r, col)].is_zero() {
                    let factor = m[(r, col)];
                    for j in col..m.cols {
                        let t = m[(rank, j)] * factor;
                        m[(r, j)] = m[(r, j)] - t;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Solves `self * X = rhs` for a square nonsingular `self` by Gaussian
    /// elimination with a nonzero-pivot search.
    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "solve needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        if rhs.rows != self.rows {
            return Err(Error::ShapeMismatch(format!(
                "solve rhs has {} rows, expected {}",
                rhs.rows, self.rows
            )));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut b = rhs.clone();
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[(r, col)].is_zero()).ok_or(Error::SingularMatrix)?;
            a.swap_rows(col, pivot);
            b.swap_rows(col, pivot);
            let inv = a[(col, col)].inv()?;
            for j in col..n {
                a[(col, j)] = a[(col, j)] * inv;
            }
            for j in 0..b.cols {
                b[(col, j)] = b[(col, j)] * inv;
            }
            for r in 0..n {
                if r != col && !a[(r, col)].is_zero() {
                    let factor = a[(r, col)];
                    for j in col..n {
                        let t = a[(col, j)] * factor;
                        a[(r, j)] = a[(r, j)] - t;
                    }
                    for j in 0..b.cols {
                        let t = b[(col, j)] * factor;
                        b[(r, j)] = b[(r, j)] - t;
                    }
                }
            }
        }
        Ok(b)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.solve(&Matrix::identity(self.rows, self.modulus))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Fp;
    fn index(&self, (i, j): (usize, usize)) -> &Fp {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of {}x{}", self.rows, self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Fp {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of {}x{}", self.rows, self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Computes `row * m` for a row vector, returning a vector of length `m.cols()`.
pub fn vec_mat_mul(row: &[Fp], m: &Matrix) -> Vec<Fp> {
    assert_eq!(row.len(), m.rows(), "shape mismatch in vec_mat_mul");
    let q = m.modulus() as u128;
    let mut acc = vec![0u128; m.cols()];
    for (k, &e) in row.iter().enumerate() {
        let a = e.value() as u128;
        if a == 0 {
            continue;
        }
        for (j, slot) in acc.iter_mut().enumerate() {
            *slot = (*slot + a * m[(k, j)].value() as u128) % q;
        }
    }
    acc.into_iter().map(|v| Fp::new(v as u64, m.modulus())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inverse_of_five_mod_seventeen() {
        let five = Fp::new(5, 17);
        assert_eq!(five.inv().unwrap(), Fp::new(7, 17));
        assert_eq!(five * Fp::new(7, 17), Fp::one(17));
    }

    #[test]
    fn zero_has_no_inverse() {
        assert_eq!(Fp::zero(17).inv(), Err(Error::ZeroInverse));
    }

    #[test]
    fn field_axioms_exhaustive_q17() {
        let q = 17;
        for a in 0..q {
            for b in 0..q {
                let (fa, fb) = (Fp::new(a, q), Fp::new(b, q));
                assert_eq!(fa + fb, fb + fa);
                assert_eq!(fa * fb, fb * fa);
                for c in 0..q {
                    let fc = Fp::new(c, q);
                    assert_eq!((fa + fb) + fc, fa + (fb + fc));
                    assert_eq!((fa * fb) * fc, fa * (fb * fc));
                    assert_eq!(fa * (fb + fc), fa * fb + fa * fc);
                }
            }
        }
        for a in 1..q {
            let fa = Fp::new(a, q);
            assert_eq!(fa * fa.inv().unwrap(), Fp::one(q));
        }
    }

    #[test]
    fn solve_two_by_two() {
        // A = [[1,1],[1,2]], B = [[3],[5]] over F_17 has the unique solution [[1],[2]].
        let q = 17;
        let a = Matrix::from_rows(vec![
            vec![Fp::new(1, q), Fp::new(1, q)],
            vec![Fp::new(1, q), Fp::new(2, q)],
        ])
        .unwrap();
        let b = Matrix::from_rows(vec![vec![Fp::new(3, q)], vec![Fp::new(5, q)]]).unwrap();
        let x = a.solve(&b).unwrap();
        assert_eq!(x, Matrix::from_rows(vec![vec![Fp::new(1, q)], vec![Fp::new(2, q)]]).unwrap());
        assert_eq!(a.mul(&x), b);
    }

    #[test]
    fn singular_matrix_reported() {
        let q = 17;
        let a = Matrix::from_rows(vec![
            vec![Fp::new(1, q), Fp::new(2, q)],
            vec![Fp::new(2, q), Fp::new(4, q)],
        ])
        .unwrap();
        let b = Matrix::identity(2, q);
        assert_eq!(a.solve(&b), Err(Error::SingularMatrix));
        assert_eq!(a.rank(), 1);
    }

    #[test]
    fn inverse_round_trip() {
        let q = 97;
        let a = Matrix::from_fn(4, 4, q, |i, j| Fp::new((i * 7 + j * j + 3) as u64 % q + 1, q));
        if let Ok(inv) = a.inverse() {
            assert_eq!(a.mul(&inv), Matrix::identity(4, q));
        }
    }

    #[test]
    fn vec_mat_mul_matches_matrix_mul() {
        let q = 17;
        let m = Matrix::from_fn(3, 5, q, |i, j| Fp::new((3 * i + j + 1) as u64, q));
        let row = vec![Fp::new(2, q), Fp::new(0, q), Fp::new(5, q)];
        let via_vec = vec_mat_mul(&row, &m);
        let via_mat = Matrix::from_rows(vec![row]).unwrap().mul(&m);
        assert_eq!(via_vec, via_mat.row_vec(0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn rank_equals_transpose_rank(seed in 0u64..10_000) {
            let q = 101;
            let rows = (seed % 5 + 1) as usize;
            let cols = (seed / 5 % 5 + 1) as usize;
            let m = Matrix::from_fn(rows, cols, q, |i, j| {
                Fp::new(seed.wrapping_mul(31).wrapping_add((i * 13 + j * 7) as u64) % q, q)
            });
            prop_assert_eq!(m.rank(), m.transpose().rank());
        }

        #[test]
        fn add_sub_round_trip(a in 0u64..17, b in 0u64..17) {
            let (fa, fb) = (Fp::new(a, 17), Fp::new(b, 17));
            prop_assert_eq!((fa + fb) - fb, fa);
        }
    }
}
