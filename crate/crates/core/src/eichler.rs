//! Eichler–Siegel transformations
//! `E(e, u)v = v + ⟨v, e⟩u − ⟨v, u⟩e − q(u)⟨v, e⟩e`
//! for `e` isotropic and `u ⟂ e`.
//!
//! In this basis `E_{α_i}(w) = E(x_i, −w)` and `E*_{β_i}(w) = E(f_i, −w)`,
//! and the transformations satisfy `E(e, u)E(e, u') = E(e, u + u')`,
//! `E(e, e) = I` and `T⁻¹E(e, u)T = E(T⁻¹e, T⁻¹u)` for orthogonal `T`.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::quadspace::QuadSetup;
use crate::ring::Ring;
use crate::transvect::{rank_one_atom, AtomKind, GenWord, Token};

pub fn eichler_matrix<R: Ring>(setup: &QuadSetup<R>, e: &[R::Elem], u: &[R::Elem]) -> Result<Matrix<R::Elem>> {
    let d = setup.dim();
    if e.len() != d || u.len() != d {
        return Err(Error::Dimension(format!("vectors must have length {d}")));
    }
    let r = setup.ring();
    if !r.is_zero(&setup.q(e)) {
        return Err(Error::Unsupported("e is not isotropic".into()));
    }
    if !r.is_zero(&setup.pair(e, u)) {
        return Err(Error::Unsupported("u is not orthogonal to e".into()));
    }
    // Row vectors eᵗΨ and uᵗΨ.
    let ep = setup.psi().vec_mul(r, e);
    let up = setup.psi().vec_mul(r, u);
    let qu = setup.q(u);
    Ok(Matrix::from_fn(d, d, |a, b| {
        let mut v = if a == b { r.one() } else { r.zero() };
        v = r.add(&v, &r.mul(&u[a], &ep[b]));
        v = r.sub(&v, &r.mul(&e[a], &up[b]));
        r.sub(&v, &r.mul(&qu, &r.mul(&e[a], &ep[b])))
    }))
}

/// Embeds `w ∈ Q` as a vector of the full space.
pub fn embed_q<R: Ring>(setup: &QuadSetup<R>, w: &[R::Elem]) -> Vec<R::Elem> {
    let mut v = vec![setup.ring().zero(); setup.dim()];
    v[..w.len()].clone_from_slice(w);
    v
}

pub fn basis_x<R: Ring>(setup: &QuadSetup<R>, i: usize) -> Vec<R::Elem> {
    setup.unit_vector(setup.x_index(i))
}

pub fn basis_f<R: Ring>(setup: &QuadSetup<R>, i: usize) -> Vec<R::Elem> {
    setup.unit_vector(setup.f_index(i))
}

/// Selects the isotropic basis vector `x_a` ([`AtomKind::EA`]) or `f_a`
/// ([`AtomKind::EBstar`]).
pub fn basis_of<R: Ring>(setup: &QuadSetup<R>, kind: AtomKind, a: usize) -> Vec<R::Elem> {
    match kind {
        AtomKind::EA => basis_x(setup, a),
        AtomKind::EBstar => basis_f(setup, a),
    }
}

/// The commutator `[E(e_a, −w₁), E(e'_b, −w₂)] = E(e_a, λ e'_b)` for `a ≠ b`,
/// with `w₁ = z₁` and `w₂ = λφ⁻¹z₁` so that `⟨w₁, w₂⟩ = λ`.
pub fn pair_piece<R: Ring>(
    setup: &QuadSetup<R>,
    k1: AtomKind,
    a: usize,
    k2: AtomKind,
    b: usize,
    lambda: &R::Elem,
) -> Result<Token<R::Elem>> {
    if a == b {
        return Err(Error::IndexConstraint(format!("pair piece needs distinct indices, got {a}")));
    }
    let r = setup.ring();
    let mut w1 = vec![r.zero(); setup.n()];
    w1[0] = r.one();
    let w2: Vec<R::Elem> = setup.phi_inv().col(0).iter().map(|x| r.mul(lambda, x)).collect();
    Ok(Token::comm(
        Token::Atom(rank_one_atom(setup, k1, a, &w1)?),
        Token::Atom(rank_one_atom(setup, k2, b, &w2)?),
    ))
}

/// A word in the indexed generators evaluating to `E(e, u)` where `e` is
/// `x_a` or `f_a`. The coefficient of `e` itself in `u` is irrelevant and is
/// dropped; the coefficient of its hyperbolic partner must vanish.
pub fn eichler_word<R: Ring>(setup: &QuadSetup<R>, kind: AtomKind, a: usize, u: &[R::Elem]) -> Result<GenWord<R::Elem>> {
    let (n, m) = (setup.n(), setup.m());
    if a == 0 || a > m {
        return Err(Error::IndexOutOfRange(format!("P-index {a} outside 1..={m}")));
    }
    if u.len() != setup.dim() {
        return Err(Error::Dimension(format!("vector must have length {}", setup.dim())));
    }
    let r = setup.ring();
    let partner = match kind {
        AtomKind::EA => setup.f_index(a),
        AtomKind::EBstar => setup.x_index(a),
    };
    if !r.is_zero(&u[partner]) {
        return Err(Error::Unsupported("u is not orthogonal to e".into()));
    }
    let mut word = GenWord::empty();
    let z: Vec<R::Elem> = u[..n].iter().map(|x| r.neg(x)).collect();
    if z.iter().any(|x| !r.is_zero(x)) {
        word.push(Token::Atom(rank_one_atom(setup, kind, a, &z)?));
    }
    for b in (1..=m).filter(|&b| b != a) {
        for (k2, idx) in [(AtomKind::EA, setup.x_index(b)), (AtomKind::EBstar, setup.f_index(b))] {
            if !r.is_zero(&u[idx]) {
                word.push(pair_piece(setup, kind, a, k2, b, &u[idx])?);
            }
        }
    }
    Ok(word)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::ZMod;
    use crate::transvect::eval_atom_matrix;

    #[test]
    fn atoms_are_eichler() {
        let r = ZMod::new(7).unwrap();
        let phi = Matrix::from_rows(vec![vec![2u64, 1], vec![1, 3]]).unwrap();
        let s = QuadSetup::new(r, 3, phi).unwrap();
        let w = [3u64, 5];
        let minus_w = embed_q(&s, &[4, 2]);
        for i in 1..=3 {
            let ea = eval_atom_matrix(&s, &rank_one_atom(&s, AtomKind::EA, i, &w).unwrap()).unwrap();
            assert_eq!(ea, eichler_matrix(&s, &basis_x(&s, i), &minus_w).unwrap());
            let eb = eval_atom_matrix(&s, &rank_one_atom(&s, AtomKind::EBstar, i, &w).unwrap()).unwrap();
            assert_eq!(eb, eichler_matrix(&s, &basis_f(&s, i), &minus_w).unwrap());
        }
    }

    #[test]
    fn words_match_direct_matrices() {
        use crate::transvect::eval_word_matrix;
        let r = ZMod::new(7).unwrap();
        let phi = Matrix::from_rows(vec![vec![2u64, 1], vec![1, 3]]).unwrap();
        let s = QuadSetup::new(r, 3, phi).unwrap();
        // (z1, z2, x1, x2, x3, f1, f2, f3)
        let u = vec![1u64, 5, 2, 1, 3, 4, 0, 6];
        let e = basis_x(&s, 2);
        let w = eichler_word(&s, AtomKind::EA, 2, &u).unwrap();
        let mut v = u.clone();
        v[s.x_index(2)] = 0;
        assert_eq!(eval_word_matrix(&s, &w).unwrap(), eichler_matrix(&s, &e, &v).unwrap());
        let mut u2 = u.clone();
        u2[s.x_index(1)] = 0;
        let w = eichler_word(&s, AtomKind::EBstar, 1, &u2).unwrap();
        let mut v = u2.clone();
        v[s.f_index(1)] = 0;
        assert_eq!(eval_word_matrix(&s, &w).unwrap(), eichler_matrix(&s, &basis_f(&s, 1), &v).unwrap());
        assert!(eichler_word(&s, AtomKind::EA, 3, &u).is_err());
    }

    #[test]
    fn additive_and_trivial_on_e() {
        let r = ZMod::new(5).unwrap();
        let s = QuadSetup::standard(r, 1, 2).unwrap();
        let e = basis_x(&s, 1);
        let u1 = vec![1u64, 0, 3, 0, 2];
        let u2 = vec![4u64, 0, 1, 0, 1];
        let sum: Vec<u64> = u1.iter().zip(&u2).map(|(a, b)| (a + b) % 5).collect();
        let a = eichler_matrix(&s, &e, &u1).unwrap();
        let b = eichler_matrix(&s, &e, &u2).unwrap();
        assert_eq!(a.mul(&r, &b), eichler_matrix(&s, &e, &sum).unwrap());
        assert!(eichler_matrix(&s, &e, &e).unwrap().is_identity(&r));
        assert!(s.is_orthogonal(&a).unwrap());
    }
}
