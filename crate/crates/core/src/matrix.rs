//! Dense row-major matrices over a [`Ring`].
//!
//! Matrices are plain data; every arithmetic operation takes the ring as an
//! explicit argument.

use crate::error::{Error, Result};
use crate::ring::Ring;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros<R: Ring<Elem = T>>(ring: &R, rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ring.zero(); rows * cols],
        }
    }

    pub fn identity<R: Ring<Elem = T>>(ring: &R, n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { ring.one() } else { ring.zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    /// The block `rows r0..r1`, `cols c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Self::from_fn(r1 - r0, c1 - c0, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    /// Overwrites the block whose top-left corner is `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Matrix<T>) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(r0 + i, c0 + j, b.get(i, j).clone());
            }
        }
    }

    /// Assembles a matrix from a grid of blocks with consistent sizes.
    pub fn from_blocks(grid: &[Vec<&Matrix<T>>]) -> Result<Self> {
        let heights: Vec<usize> = grid.iter().map(|row| row[0].rows).collect();
        let widths: Vec<usize> = grid[0].iter().map(|b| b.cols).collect();
        for (bi, row) in grid.iter().enumerate() {
            if row.len() != widths.len() {
                return Err(Error::Dimension("ragged block grid".into()));
            }
            for (bj, b) in row.iter().enumerate() {
                if b.rows != heights[bi] || b.cols != widths[bj] {
                    return Err(Error::Dimension(format!("block ({bi},{bj}) has wrong size")));
                }
            }
        }
        let rows = heights.iter().sum();
        let cols = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * cols);
        for (bi, row) in grid.iter().enumerate() {
            for i in 0..heights[bi] {
                for b in row {
                    data.extend_from_slice(b.row(i));
                }
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

/// Ring-aware arithmetic. Kept as free-standing methods taking the ring so
/// that the same code runs over every admitted ring.
impl<T: Clone + PartialEq> Matrix<T> {
    pub fn add<R: Ring<Elem = T>>(&self, ring: &R, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add: shape");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| ring.add(a, b)).collect(),
        }
    }

    pub fn sub<R: Ring<Elem = T>>(&self, ring: &R, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "sub: shape");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| ring.sub(a, b)).collect(),
        }
    }

    pub fn neg<R: Ring<Elem = T>>(&self, ring: &R) -> Self {
        self.map(|a| ring.neg(a))
    }

    pub fn scale<R: Ring<Elem = T>>(&self, ring: &R, s: &T) -> Self {
        self.map(|a| ring.mul(s, a))
    }

    pub fn mul<R: Ring<Elem = T>>(&self, ring: &R, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "mul: inner dimension");
        let mut out = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            let row = self.row(i);
            for j in 0..other.cols {
                let mut acc = ring.zero();
                for (k, a) in row.iter().enumerate() {
                    if ring.is_zero(a) {
                        continue;
                    }
                    acc = ring.add(&acc, &ring.mul(a, other.get(k, j)));
                }
                out.push(acc);
            }
        }
        Matrix {
            rows: self.rows,
            cols: other.cols,
            data: out,
        }
    }

    /// Checked product.
    pub fn try_mul<R: Ring<Elem = T>>(&self, ring: &R, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self.mul(ring, other))
    }

    pub fn mul_vec<R: Ring<Elem = T>>(&self, ring: &R, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "mul_vec: dimension");
        (0..self.rows).map(|i| ring.dot(self.row(i), v)).collect()
    }

    /// Row vector times matrix.
    pub fn vec_mul<R: Ring<Elem = T>>(&self, ring: &R, v: &[T]) -> Vec<T> {
        assert_eq!(self.rows, v.len(), "vec_mul: dimension");
        (0..self.cols)
            .map(|j| {
                v.iter()
                    .enumerate()
                    .fold(ring.zero(), |acc, (i, x)| ring.add(&acc, &ring.mul(x, self.get(i, j))))
            })
            .collect()
    }

    pub fn is_zero<R: Ring<Elem = T>>(&self, ring: &R) -> bool {
        self.data.iter().all(|a| ring.is_zero(a))
    }

    pub fn is_identity<R: Ring<Elem = T>>(&self, ring: &R) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let a = self.get(i, j);
                    if i == j {
                        ring.is_one(a)
                    } else {
                        ring.is_zero(a)
                    }
                })
            })
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Inverse by exact Gauss–Jordan elimination.
    ///
    /// Pivots are produced by Euclidean row exchanges, so this works over
    /// every admitted ring (Euclidean on integer lifts for residues). Returns
    /// `None` when the matrix is singular over the ring.
    pub fn inverse<R: Ring<Elem = T>>(&self, ring: &R) -> Option<Self> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(ring, n);
        // row k += s * row p, applied to both
        let add_row = |m: &mut Matrix<T>, k: usize, p: usize, s: &T| {
            for j in 0..n {
                let v = ring.add(m.get(k, j), &ring.mul(s, m.get(p, j)));
                m.set(k, j, v);
            }
        };
        for c in 0..n {
            for r in (c + 1)..n {
                loop {
                    if ring.is_zero(a.get(r, c)) {
                        break;
                    }
                    if ring.is_zero(a.get(c, c)) {
                        let one = ring.one();
                        add_row(&mut a, c, r, &one);
                        add_row(&mut inv, c, r, &one);
                        continue;
                    }
                    let q = ring.neg(&ring.euclid_quotient(a.get(r, c), a.get(c, c)));
                    add_row(&mut a, r, c, &q);
                    add_row(&mut inv, r, c, &q);
                    if ring.is_zero(a.get(r, c)) {
                        break;
                    }
                    let q = ring.neg(&ring.euclid_quotient(a.get(c, c), a.get(r, c)));
                    add_row(&mut a, c, r, &q);
                    add_row(&mut inv, c, r, &q);
                }
            }
            let p = ring.unit_inverse(a.get(c, c))?;
            for j in 0..n {
                a.set(c, j, ring.mul(&p, a.get(c, j)));
                inv.set(c, j, ring.mul(&p, inv.get(c, j)));
            }
            for r in 0..n {
                if r != c && !ring.is_zero(a.get(r, c)) {
                    let s = ring.neg(a.get(r, c));
                    add_row(&mut a, r, c, &s);
                    add_row(&mut inv, r, c, &s);
                }
            }
        }
        Some(inv)
    }

    pub fn to_strings<R: Ring<Elem = T>>(&self, ring: &R) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|a| ring.format(a)).collect())
            .collect()
    }

    /// Text format: one row per line, entries separated by spaces.
    pub fn to_text<R: Ring<Elem = T>>(&self, ring: &R) -> String {
        self.to_strings(ring)
            .into_iter()
            .map(|row| row.join(" "))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn parse_text<R: Ring<Elem = T>>(ring: &R, text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split_whitespace().map(|s| ring.parse_elem(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }

    pub fn from_strings<R: Ring<Elem = T>>(ring: &R, rows: &[Vec<String>]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|s| ring.parse_elem(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }
}
