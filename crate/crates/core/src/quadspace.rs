//! The quadratic space `Q ⟂ H(A)^m`.
//!
//! Coordinates are column tuples `(z, x, f)`: `z` in the rank-`n` space `Q`,
//! `x` in `P = A^m`, `f` in the dual `P*`. The Gram matrix is
//! `Ψ = φ ⟂ [[0, I], [I, 0]]` and the quadratic form is `q(v) = ½ vᵗΨv`, so
//! `⟨v, v⟩ = 2 q(v)`.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::ring::Ring;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadSetup<R: Ring> {
    ring: R,
    n: usize,
    m: usize,
    phi: Matrix<R::Elem>,
    phi_inv: Matrix<R::Elem>,
    psi: Matrix<R::Elem>,
    half: R::Elem,
}

impl<R: Ring> QuadSetup<R> {
    pub fn new(ring: R, m: usize, phi: Matrix<R::Elem>) -> Result<Self> {
        let n = phi.rows();
        if n == 0 || !phi.is_square() {
            return Err(Error::DegenerateForm("φ must be a nonempty square matrix".into()));
        }
        if !phi.is_symmetric() {
            return Err(Error::DegenerateForm("φ is not symmetric".into()));
        }
        let phi_inv = phi
            .inverse(&ring)
            .ok_or_else(|| Error::DegenerateForm("φ is not invertible".into()))?;
        let dim = n + 2 * m;
        let mut psi = Matrix::zeros(&ring, dim, dim);
        psi.set_block(0, 0, &phi);
        for i in 0..m {
            psi.set(n + i, n + m + i, ring.one());
            psi.set(n + m + i, n + i, ring.one());
        }
        let half = ring.half();
        Ok(Self { ring, n, m, phi, phi_inv, psi, half })
    }

    /// `φ = I_n`.
    pub fn standard(ring: R, n: usize, m: usize) -> Result<Self> {
        let phi = Matrix::identity(&ring, n);
        Self::new(ring, m, phi)
    }

    /// Same ring and form, different hyperbolic rank.
    pub fn with_rank(&self, m: usize) -> Self {
        Self::new(self.ring.clone(), m, self.phi.clone()).expect("φ already validated")
    }

    pub fn ring(&self) -> &R {
        &self.ring
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn dim(&self) -> usize {
        self.n + 2 * self.m
    }
    pub fn phi(&self) -> &Matrix<R::Elem> {
        &self.phi
    }
    pub fn phi_inv(&self) -> &Matrix<R::Elem> {
        &self.phi_inv
    }
    pub fn psi(&self) -> &Matrix<R::Elem> {
        &self.psi
    }
    pub fn half(&self) -> &R::Elem {
        &self.half
    }

    /// Zero-based coordinate of the basis vector `x_i`, `i` one-based.
    pub fn x_index(&self, i: usize) -> usize {
        debug_assert!((1..=self.m).contains(&i));
        self.n + i - 1
    }

    /// Zero-based coordinate of `f_i`, `i` one-based.
    pub fn f_index(&self, i: usize) -> usize {
        debug_assert!((1..=self.m).contains(&i));
        self.n + self.m + i - 1
    }

    pub fn identity(&self) -> Matrix<R::Elem> {
        Matrix::identity(&self.ring, self.dim())
    }

    pub fn unit_vector(&self, k: usize) -> Vec<R::Elem> {
        let mut v = vec![self.ring.zero(); self.dim()];
        v[k] = self.ring.one();
        v
    }

    /// The bilinear pairing `uᵗΨv`.
    pub fn pair(&self, u: &[R::Elem], v: &[R::Elem]) -> R::Elem {
        self.ring.dot(u, &self.psi.mul_vec(&self.ring, v))
    }

    /// `q(v) = ½ vᵗΨv`.
    pub fn q(&self, v: &[R::Elem]) -> R::Elem {
        self.ring.mul(&self.half, &self.pair(v, v))
    }

    /// `q(w) = ½ wᵗφw` for `w` in `Q`.
    pub fn q_small(&self, w: &[R::Elem]) -> R::Elem {
        let r = &self.ring;
        r.mul(&self.half, &r.dot(w, &self.phi.mul_vec(r, w)))
    }

    /// `⟨u, w⟩ = uᵗφw` for `u, w` in `Q`.
    pub fn pair_small(&self, u: &[R::Elem], w: &[R::Elem]) -> R::Elem {
        self.ring.dot(u, &self.phi.mul_vec(&self.ring, w))
    }

    pub fn is_orthogonal(&self, m: &Matrix<R::Elem>) -> Result<bool> {
        if !m.is_square() || m.rows() != self.dim() {
            return Err(Error::Dimension(format!(
                "expected {d}x{d}, got {}x{}",
                m.rows(),
                m.cols(),
                d = self.dim()
            )));
        }
        let r = &self.ring;
        Ok(m.transpose().mul(r, &self.psi).mul(r, m) == self.psi)
    }

    /// Certifies `TᵗΨT = Ψ`.
    pub fn certify(&self, m: Matrix<R::Elem>) -> Result<OrthMatrix<R::Elem>> {
        if self.is_orthogonal(&m)? {
            Ok(OrthMatrix { n: self.n, m: self.m, entries: m })
        } else {
            Err(Error::NotOrthogonal)
        }
    }

    pub fn blocks(&self, t: &Matrix<R::Elem>) -> Blocks<R::Elem> {
        let (n, m) = (self.n, self.m);
        let b = |r0, r1, c0, c1| t.block(r0, r1, c0, c1);
        let (q, p, s) = (n, n + m, n + 2 * m);
        Blocks {
            a: b(0, q, 0, q),
            b: b(0, q, q, p),
            c: b(0, q, p, s),
            d: b(q, p, 0, q),
            e: b(q, p, q, p),
            f: b(q, p, p, s),
            g: b(p, s, 0, q),
            h: b(p, s, q, p),
            j: b(p, s, p, s),
        }
    }

    /// The nine block identities equivalent to `TᵗΨT = Ψ`, each evaluated
    /// separately, in row-major order of the 3×3 display.
    pub fn block_equations(&self, t: &Matrix<R::Elem>) -> [bool; 9] {
        let r = &self.ring;
        let Blocks { a, b, c, d, e, f, g, h, j } = self.blocks(t);
        let phi = &self.phi;
        let zero_mn = Matrix::zeros(r, self.m, self.n);
        let zero_nm = Matrix::zeros(r, self.n, self.m);
        let zero_m = Matrix::zeros(r, self.m, self.m);
        let id_m = Matrix::identity(r, self.m);
        // xᵗφy + uᵗv + vᵗu over the three column blocks
        let term = |x: &Matrix<R::Elem>, y: &Matrix<R::Elem>, u1: &Matrix<R::Elem>, v1: &Matrix<R::Elem>, u2: &Matrix<R::Elem>, v2: &Matrix<R::Elem>| {
            x.transpose()
                .mul(r, phi)
                .mul(r, y)
                .add(r, &u1.transpose().mul(r, v1))
                .add(r, &u2.transpose().mul(r, v2))
        };
        [
            term(&a, &a, &g, &d, &d, &g) == *phi,
            term(&b, &a, &h, &d, &e, &g) == zero_mn,
            term(&c, &a, &j, &d, &f, &g) == zero_mn,
            term(&a, &b, &g, &e, &d, &h) == zero_nm,
            term(&b, &b, &h, &e, &e, &h) == zero_m,
            term(&c, &b, &j, &e, &f, &h) == id_m,
            term(&a, &c, &g, &f, &d, &j) == zero_nm,
            term(&b, &c, &h, &f, &e, &j) == id_m,
            term(&c, &c, &j, &f, &f, &j) == zero_m,
        ]
    }

    /// `T⁻¹` from the block formula
    /// `[[φ⁻¹aᵗφ, φ⁻¹gᵗ, φ⁻¹dᵗ], [cᵗφ, jᵗ, fᵗ], [bᵗφ, hᵗ, eᵗ]]`.
    pub fn block_inverse_matrix(&self, t: &Matrix<R::Elem>) -> Matrix<R::Elem> {
        let r = &self.ring;
        let Blocks { a, b, c, d, e, f, g, h, j } = self.blocks(t);
        let pi = &self.phi_inv;
        let phi = &self.phi;
        let top = [
            pi.mul(r, &a.transpose()).mul(r, phi),
            pi.mul(r, &g.transpose()),
            pi.mul(r, &d.transpose()),
        ];
        let mid = [c.transpose().mul(r, phi), j.transpose(), f.transpose()];
        let bot = [b.transpose().mul(r, phi), h.transpose(), e.transpose()];
        Matrix::from_blocks(&[
            top.iter().collect(),
            mid.iter().collect(),
            bot.iter().collect(),
        ])
        .expect("block sizes are consistent")
    }

    pub fn block_inverse(&self, t: &OrthMatrix<R::Elem>) -> Result<OrthMatrix<R::Elem>> {
        self.check_dims(t)?;
        if !self.is_orthogonal(&t.entries)? {
            return Err(Error::NotOrthogonal);
        }
        Ok(OrthMatrix {
            n: self.n,
            m: self.m,
            entries: self.block_inverse_matrix(&t.entries),
        })
    }

    fn check_dims(&self, t: &OrthMatrix<R::Elem>) -> Result<()> {
        if (t.n, t.m) != (self.n, self.m) {
            return Err(Error::Dimension(format!(
                "matrix belongs to (n,m)=({},{}), setup is ({},{})",
                t.n, t.m, self.n, self.m
            )));
        }
        Ok(())
    }

    /// Embeds a matrix of the rank-`(m-1)` space into this rank-`m` space,
    /// fixing the new hyperbolic pair `(x_m, f_m)`.
    pub fn stabilize_matrix(&self, t: &Matrix<R::Elem>) -> Result<Matrix<R::Elem>> {
        let small = self.m.checked_sub(1).ok_or_else(|| Error::Dimension("m = 0".into()))?;
        let small_dim = self.n + 2 * small;
        if t.rows() != small_dim || t.cols() != small_dim {
            return Err(Error::Dimension(format!("expected {small_dim}x{small_dim} input")));
        }
        let map = |k: usize| -> usize {
            if k < self.n + small {
                k
            } else {
                k + 1
            }
        };
        let mut out = self.identity();
        for i in 0..small_dim {
            for j in 0..small_dim {
                out.set(map(i), map(j), t.get(i, j).clone());
            }
        }
        Ok(out)
    }

    /// `stabilize(T)` for `T` certified in the rank-`(m-1)` setup.
    pub fn stabilize(&self, t: &OrthMatrix<R::Elem>) -> Result<OrthMatrix<R::Elem>> {
        if t.n != self.n || t.m + 1 != self.m {
            return Err(Error::Dimension(format!(
                "cannot stabilize (n,m)=({},{}) into ({},{})",
                t.n, t.m, self.n, self.m
            )));
        }
        Ok(OrthMatrix {
            n: self.n,
            m: self.m,
            entries: self.stabilize_matrix(&t.entries)?,
        })
    }

    /// Whether rows and columns of `x_m` and `f_m` are those of the identity.
    pub fn has_stabilized_pattern(&self, t: &Matrix<R::Elem>) -> bool {
        if self.m == 0 {
            return false;
        }
        let r = &self.ring;
        let id = |i: usize, j: usize| if i == j { r.one() } else { r.zero() };
        [self.x_index(self.m), self.f_index(self.m)].iter().all(|&k| {
            (0..self.dim()).all(|l| *t.get(k, l) == id(k, l) && *t.get(l, k) == id(l, k))
        })
    }

    /// Inverse of [`Self::stabilize_matrix`] on matrices with the stabilized
    /// pattern.
    pub fn destabilize_matrix(&self, t: &Matrix<R::Elem>) -> Result<Matrix<R::Elem>> {
        if !self.has_stabilized_pattern(t) {
            return Err(Error::Shape("matrix does not fix the last hyperbolic pair".into()));
        }
        let keep: Vec<usize> = (0..self.dim())
            .filter(|&k| k != self.x_index(self.m) && k != self.f_index(self.m))
            .collect();
        Ok(Matrix::from_fn(keep.len(), keep.len(), |i, j| t.get(keep[i], keep[j]).clone()))
    }

    /// Inverse of an orthogonal matrix as `Ψ⁻¹TᵗΨ`, without certification.
    pub fn orth_inverse(&self, t: &Matrix<R::Elem>) -> Matrix<R::Elem> {
        self.block_inverse_matrix(t)
    }
}

/// The nine blocks `a..j` of a matrix in `(z, x, f)` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Blocks<T> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    pub c: Matrix<T>,
    pub d: Matrix<T>,
    pub e: Matrix<T>,
    pub f: Matrix<T>,
    pub g: Matrix<T>,
    pub h: Matrix<T>,
    pub j: Matrix<T>,
}

/// A matrix certified to preserve the form of its `(n, m)` setup.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OrthMatrix<T> {
    n: usize,
    m: usize,
    entries: Matrix<T>,
}

impl<T: Clone + PartialEq> OrthMatrix<T> {
    pub fn entries(&self) -> &Matrix<T> {
        &self.entries
    }
    pub fn into_entries(self) -> Matrix<T> {
        self.entries
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mul<R: Ring<Elem = T>>(&self, ring: &R, other: &Self) -> Self {
        assert_eq!((self.n, self.m), (other.n, other.m), "setups differ");
        OrthMatrix {
            n: self.n,
            m: self.m,
            entries: self.entries.mul(ring, &other.entries),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{Rationals, ZMod};

    #[test]
    fn orthogonality_examples() {
        let q = Rationals;
        let s = QuadSetup::standard(q.clone(), 1, 1).unwrap();
        assert!(s.is_orthogonal(&s.identity()).unwrap());
        let t = Matrix::parse_text(&q, "1 0 -1\n1 1 -1/2\n0 0 1").unwrap();
        assert!(s.is_orthogonal(&t).unwrap());
        let two = s.identity().scale(&q, &q.from_i64(2));
        assert!(!s.is_orthogonal(&two).unwrap());
        assert!(s.is_orthogonal(&Matrix::identity(&q, 2)).is_err());
    }

    #[test]
    fn degenerate_forms_rejected() {
        let r = ZMod::new(9).unwrap();
        let phi = Matrix::from_rows(vec![vec![3u64]]).unwrap();
        assert!(matches!(QuadSetup::new(r, 1, phi), Err(Error::DegenerateForm(_))));
        let phi = Matrix::from_rows(vec![vec![1u64, 2], vec![0, 1]]).unwrap();
        assert!(QuadSetup::new(r, 1, phi).is_err());
    }

    #[test]
    fn swap_and_scaling_are_orthogonal() {
        let r = ZMod::new(7).unwrap();
        let s = QuadSetup::standard(r, 2, 2).unwrap();
        let mut swap = s.identity();
        let (x, f) = (s.x_index(1), s.f_index(1));
        swap.set(x, x, 0);
        swap.set(f, f, 0);
        swap.set(x, f, 1);
        swap.set(f, x, 1);
        assert!(s.is_orthogonal(&swap).unwrap());
        assert!(s.block_equations(&swap).iter().all(|&b| b));
        let mut scale = s.identity();
        scale.set(x, x, 3);
        scale.set(f, f, 5);
        assert!(s.is_orthogonal(&scale).unwrap());
        let inv = s.block_inverse_matrix(&scale);
        assert!(inv.mul(&r, &scale).is_identity(&r));
    }

    #[test]
    fn stabilize_identity_and_pattern() {
        let r = ZMod::new(5).unwrap();
        let big = QuadSetup::standard(r, 1, 2).unwrap();
        let small = big.with_rank(1);
        let t = small.certify(small.identity()).unwrap();
        let st = big.stabilize(&t).unwrap();
        assert!(st.entries().is_identity(&r));
        assert!(big.has_stabilized_pattern(st.entries()));
        assert_eq!(big.destabilize_matrix(st.entries()).unwrap(), small.identity());
    }
}
