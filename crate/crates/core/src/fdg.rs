//! The subgroups `C_m, D_m, G_m, F_m`, the corner reduction, reduced
//! `FDG`-decompositions and the block shape of `G`-elements.
//!
//! In Eichler form, with `E(e, u)` as in [`crate::eichler`]:
//!
//! * `C_m = { E(f_m, u) }` and `D_m = { E(x_m, u) }`, both abelian;
//! * `G_m` is generated by `E*` atoms, `E(x_a, λf_b)` and `E(f_a, λf_b)`
//!   (`a ≠ b`), and consists of matrices `[[I, γ, 0], [0, ε, 0], [ϑ, ψ, ε⁻ᵗ]]`;
//! * `F_m = EO_{m−1} · C_m`.

use serde_json::{json, Value};

use crate::eichler::{basis_f, eichler_matrix, embed_q, pair_piece};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::quadspace::QuadSetup;
use crate::ring::{elementary_row_reduce, is_unimodular, stable_range_witness, Ring};
use crate::transvect::{
    atom_inverse, eval_token, eval_word_matrix, rank_one_atom, word_to_json, AtomKind, GenAtom, GenWord, Token,
};

/// Stable rank of every admitted ring. Each ring in the menu is semilocal
/// (or a field); the witness search in [`crate::ring`] confirms `SA_1` on
/// the moduli exercised by the tests.
pub const STABLE_RANK: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SubgroupTag {
    C,
    D,
    G,
    F,
}

impl SubgroupTag {
    pub fn label(self) -> &'static str {
        match self {
            SubgroupTag::C => "C",
            SubgroupTag::D => "D",
            SubgroupTag::G => "G",
            SubgroupTag::F => "F",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedWord<T> {
    pub word: GenWord<T>,
    pub tag: SubgroupTag,
}

fn atom_pair<T>(t: &Token<T>) -> Option<(&GenAtom<T>, &GenAtom<T>)> {
    match t {
        Token::Commutator(a, b) => match (&**a, &**b) {
            (Token::Atom(x), Token::Atom(y)) => Some((x, y)),
            _ => None,
        },
        _ => None,
    }
}

/// Whether a token is one of the listed generators of `tag` at rank `m`.
/// `F`-tokens are either tokens of the rank-`(m−1)` group or `C`-tokens.
pub fn token_in<T: Clone + PartialEq>(t: &Token<T>, tag: SubgroupTag, m: usize) -> bool {
    use AtomKind::*;
    match tag {
        SubgroupTag::F => token_in(t, SubgroupTag::C, m) || below(t, m),
        SubgroupTag::C => match t {
            Token::Atom(a) => a.kind == EBstar && a.index() == Some(m),
            _ => atom_pair(t).is_some_and(|(x, y)| {
                let (i, k) = (x.index(), y.index());
                y.kind == EBstar && k == Some(m) && i.is_some_and(|i| i < m)
            }),
        },
        SubgroupTag::D => match t {
            Token::Atom(a) => a.kind == EA && a.index() == Some(m),
            _ => atom_pair(t).is_some_and(|(x, y)| {
                x.kind == EA && x.index() == Some(m) && y.index().is_some_and(|i| i < m)
            }),
        },
        SubgroupTag::G => match t {
            Token::Atom(a) => a.kind == EBstar && a.index().is_some(),
            _ => atom_pair(t).is_some_and(|(x, y)| {
                y.kind == EBstar && x.index().is_some() && y.index().is_some() && x.index() != y.index()
            }),
        },
    }
}

/// Every atom of the token is indexed below `m`.
fn below<T: Clone + PartialEq>(t: &Token<T>, m: usize) -> bool {
    t.atoms().iter().all(|a| a.index().is_some_and(|i| i < m))
}

impl<T: Clone + PartialEq> TaggedWord<T> {
    pub fn new(word: GenWord<T>, tag: SubgroupTag) -> Self {
        Self { word, tag }
    }

    /// Tag soundness at rank `m`. For `F` the word must be a prefix of
    /// rank-`(m−1)` tokens followed by `C`-tokens.
    pub fn is_sound(&self, m: usize) -> bool {
        if self.tag == SubgroupTag::F {
            let split = self.word.tokens.iter().position(|t| !below(t, m)).unwrap_or(self.word.len());
            return self.word.tokens[split..].iter().all(|t| token_in(t, SubgroupTag::C, m));
        }
        self.word.tokens.iter().all(|t| token_in(t, self.tag, m))
    }
}

/// Inverse of a word of atoms and distinct-index commutator pieces, keeping
/// every token in generator form: `[a, b]⁻¹ = [a, b⁻¹]` for such pieces.
pub fn piece_inverse<R: Ring>(ring: &R, w: &GenWord<R::Elem>) -> GenWord<R::Elem> {
    GenWord::new(
        w.tokens
            .iter()
            .rev()
            .map(|t| match t {
                Token::Atom(a) => Token::Atom(atom_inverse(ring, a)),
                _ => match atom_pair(t) {
                    Some((x, y)) if x.index() != y.index() && x.index().is_some() => {
                        Token::comm(Token::Atom(x.clone()), Token::Atom(atom_inverse(ring, y)))
                    }
                    _ => Token::inv(t.clone()),
                },
            })
            .collect(),
    )
}

/// The result of the corner reduction: `σ · μ₁μ₂μ₃` has 1 at `(x_m, x_m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CornerReduction<T> {
    /// `E*` atoms bringing the bottom row into a position where the `P`-part
    /// can be made unimodular.
    pub mu1: GenWord<T>,
    /// Skew pieces `E(f_a, λf_b)` chosen by a stable-range witness.
    pub mu2: GenWord<T>,
    /// Elementary pieces `E(x_a, λf_b)` realizing `diag(I, ε, ε⁻ᵗ)`.
    pub mu3: GenWord<T>,
}

impl<T: Clone + PartialEq> CornerReduction<T> {
    pub fn word(&self) -> GenWord<T> {
        self.mu1.clone().concat(self.mu2.clone()).concat(self.mu3.clone())
    }

    pub fn tagged(&self) -> TaggedWord<T> {
        TaggedWord::new(self.word(), SubgroupTag::G)
    }
}

/// Row `(u, v, w)` of `x_m`, split into its `Q`, `P` and `P*` parts.
fn split_row<T: Clone>(row: &[T], n: usize, m: usize) -> (Vec<T>, Vec<T>, Vec<T>) {
    (row[..n].to_vec(), row[n..n + m].to_vec(), row[n + m..].to_vec())
}

/// Candidate parameters for single `E*` atoms during the search.
fn search_vectors<R: Ring>(ring: &R, n: usize) -> Vec<Vec<R::Elem>> {
    let finite = ring.elements().filter(|els| (els.len() as f64).powi(n as i32) <= 4096.0);
    match finite {
        Some(els) => {
            let mut out: Vec<Vec<R::Elem>> = vec![vec![]];
            for _ in 0..n {
                out = out
                    .into_iter()
                    .flat_map(|p| {
                        els.iter().map(move |e| {
                            let mut q = p.clone();
                            q.push(e.clone());
                            q
                        })
                    })
                    .collect();
            }
            out.retain(|v| v.iter().any(|x| !ring.is_zero(x)));
            out
        }
        None => {
            let mut out = Vec::new();
            for s in 0..n {
                for c in [1, -1, 2, -2, 3] {
                    let mut v = vec![ring.zero(); n];
                    v[s] = ring.from_i64(c);
                    out.push(v);
                }
                for t in s + 1..n {
                    let mut v = vec![ring.zero(); n];
                    v[s] = ring.one();
                    v[t] = ring.one();
                    out.push(v);
                }
            }
            out
        }
    }
}

fn skew_scalars<R: Ring>(ring: &R) -> Vec<R::Elem> {
    match ring.elements() {
        Some(els) if els.len() <= 4096 => els.into_iter().filter(|x| !ring.is_zero(x)).collect(),
        _ => [1, -1, 2, -2, 3].iter().map(|&c| ring.from_i64(c)).collect(),
    }
}

/// Finds `ϱ ∈ G_m` with `(σϱ)` having 1 at position `(x_m, x_m)`.
pub fn reduce_corner<R: Ring>(setup: &QuadSetup<R>, sigma: &Matrix<R::Elem>) -> Result<CornerReduction<R::Elem>> {
    use AtomKind::*;
    let (n, m) = (setup.n(), setup.m());
    if m <= STABLE_RANK {
        return Err(Error::RankTooSmall(format!("need m > {STABLE_RANK}, got m = {m}")));
    }
    if sigma.rows() != setup.dim() || sigma.cols() != setup.dim() {
        return Err(Error::Dimension(format!("expected a {0}x{0} matrix", setup.dim())));
    }
    let r = setup.ring();
    let xm = setup.x_index(m);
    let row0 = sigma.row(xm).to_vec();
    let apply = |row: &[R::Elem], t: &Token<R::Elem>| -> Result<Vec<R::Elem>> {
        Ok(eval_token(setup, t)?.vec_mul(r, row))
    };
    let p_unimodular = |row: &[R::Elem]| r.generates_unit_ideal(&row[n..n + m]);
    let pw_unimodular = |row: &[R::Elem]| r.generates_unit_ideal(&row[n..]);
    if !r.generates_unit_ideal(&row0) {
        return Err(Error::NotUnimodular);
    }

    let mut row = row0;
    let mut mu1 = GenWord::empty();
    let mut mu2 = GenWord::empty();

    if !p_unimodular(&row) && !pw_unimodular(&row) {
        // μ₁: one E* atom making (v, w) unimodular, preferring v itself.
        let mut fallback = None;
        let mut found = None;
        'search: for a in 1..=m {
            for c in search_vectors(r, n) {
                let t = Token::Atom(rank_one_atom(setup, EBstar, a, &c)?);
                let next = apply(&row, &t)?;
                if p_unimodular(&next) {
                    found = Some((t, next));
                    break 'search;
                }
                if fallback.is_none() && pw_unimodular(&next) {
                    fallback = Some((t, next));
                }
            }
        }
        let (t, next) = found.or(fallback).ok_or_else(|| {
            Error::Unsolvable("no E* atom makes the hyperbolic part of the row unimodular".into())
        })?;
        mu1.push(t);
        row = next;
    }

    if !p_unimodular(&row) {
        // μ₂: a skew piece v_a ← v_a + λ w_b with λ from a stable-range witness.
        let (_, v, w) = split_row(&row, n, m);
        let mut done = false;
        'pairs: for a in 0..m {
            for b in (0..m).filter(|&b| b != a) {
                let pair = [v[a].clone(), w[b].clone()];
                if is_unimodular(r, &pair)? {
                    let lam = stable_range_witness(r, &pair, 1)?.b[0].clone();
                    if !r.is_zero(&lam) {
                        let t = pair_piece(setup, EBstar, a + 1, EBstar, b + 1, &lam)?;
                        row = apply(&row, &t)?;
                        mu2.push(t);
                    }
                    done = true;
                    break 'pairs;
                }
            }
        }
        if !done {
            // No single pair is unimodular (possible over non-local rings):
            // search over one or two skew pieces.
            let scalars = skew_scalars(r);
            let mut pieces = Vec::new();
            for a in 1..=m {
                for b in (1..=m).filter(|&b| b != a) {
                    for lam in &scalars {
                        pieces.push(pair_piece(setup, EBstar, a, EBstar, b, lam)?);
                    }
                }
            }
            let mut hit = None;
            'one: for p in &pieces {
                let next = apply(&row, p)?;
                if p_unimodular(&next) {
                    hit = Some((vec![p.clone()], next));
                    break 'one;
                }
            }
            if hit.is_none() {
                'two: for p in &pieces {
                    let mid = apply(&row, p)?;
                    for q in &pieces {
                        let next = apply(&mid, q)?;
                        if p_unimodular(&next) {
                            hit = Some((vec![p.clone(), q.clone()], next));
                            break 'two;
                        }
                    }
                }
            }
            let (ts, next) = hit.ok_or_else(|| {
                Error::Unsolvable("no skew correction makes the P-part of the row unimodular".into())
            })?;
            mu2.extend(GenWord::new(ts));
            row = next;
        }
    }

    // μ₃: v ε = (0, …, 0, 1) with ε a product of elementary matrices; the
    // operation "column c += s · column r" is E(x_r, −s f_c).
    let (_, v, _) = split_row(&row, n, m);
    let mut mu3 = GenWord::empty();
    for op in elementary_row_reduce(r, &v)? {
        let t = pair_piece(setup, EA, op.row + 1, EBstar, op.col + 1, &r.neg(&op.scalar))?;
        row = apply(&row, &t)?;
        mu3.push(t);
    }
    if !r.is_one(&row[xm]) {
        return Err(Error::Unsolvable(format!(
            "corner entry is {} after reduction",
            r.format(&row[xm])
        )));
    }
    Ok(CornerReduction { mu1, mu2, mu3 })
}

/// The blocks of a `G`-element `[[I, γ, 0], [0, ε, 0], [ϑ, ψ, ε⁻ᵗ]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GBlockForm<T> {
    pub gamma: Matrix<T>,
    pub epsilon: Matrix<T>,
    pub theta: Matrix<T>,
    pub psi: Matrix<T>,
}

impl<T: Clone + PartialEq> GBlockForm<T> {
    pub fn assemble<R: Ring<Elem = T>>(&self, ring: &R) -> Result<Matrix<T>> {
        let n = self.gamma.rows();
        let m = self.epsilon.rows();
        let eps_it = self
            .epsilon
            .inverse(ring)
            .ok_or_else(|| Error::Shape("ε is not invertible".into()))?
            .transpose();
        Matrix::from_blocks(&[
            vec![&Matrix::identity(ring, n), &self.gamma, &Matrix::zeros(ring, n, m)],
            vec![&Matrix::zeros(ring, m, n), &self.epsilon, &Matrix::zeros(ring, m, m)],
            vec![&self.theta, &self.psi, &eps_it],
        ])
    }

    /// `(u + wϑ, uγ + vε + wψ, wε⁻ᵗ)`.
    pub fn propagate_row<R: Ring<Elem = T>>(&self, ring: &R, u: &[T], v: &[T], w: &[T]) -> Result<Vec<T>> {
        let eps_it = self
            .epsilon
            .inverse(ring)
            .ok_or_else(|| Error::Shape("ε is not invertible".into()))?
            .transpose();
        let add = |x: Vec<T>, y: Vec<T>| -> Vec<T> { x.iter().zip(&y).map(|(a, b)| ring.add(a, b)).collect() };
        let q = add(u.to_vec(), self.theta.vec_mul(ring, w));
        let p = add(add(self.gamma.vec_mul(ring, u), self.epsilon.vec_mul(ring, v)), self.psi.vec_mul(ring, w));
        let s = eps_it.vec_mul(ring, w);
        Ok([q, p, s].concat())
    }

    /// `ε′` when `ε = [[ε′, 0], [0, 1]]`.
    pub fn epsilon_prime<R: Ring<Elem = T>>(&self, ring: &R) -> Option<Matrix<T>> {
        let m = self.epsilon.rows();
        if m == 0 {
            return None;
        }
        let last = m - 1;
        let ok = (0..m).all(|k| {
            let want = if k == last { ring.one() } else { ring.zero() };
            *self.epsilon.get(last, k) == want && *self.epsilon.get(k, last) == want
        });
        ok.then(|| self.epsilon.block(0, last, 0, last))
    }
}

/// Reads the blocks of `μ`, failing with the offending block when `μ` does
/// not have the `G` shape.
pub fn g_block_analysis<R: Ring>(setup: &QuadSetup<R>, mu: &Matrix<R::Elem>) -> Result<GBlockForm<R::Elem>> {
    let r = setup.ring();
    let (n, m) = (setup.n(), setup.m());
    let b = setup.blocks(mu);
    if !b.a.is_identity(r) {
        return Err(Error::Shape("Q-Q block is not the identity".into()));
    }
    for (name, blk) in [("Q-P*", &b.c), ("P-Q", &b.d), ("P-P*", &b.f)] {
        if !blk.is_zero(r) {
            return Err(Error::Shape(format!("{name} block is not zero")));
        }
    }
    let eps_it = b
        .e
        .inverse(r)
        .ok_or_else(|| Error::Shape("P-P block is not invertible".into()))?
        .transpose();
    if eps_it != b.j {
        return Err(Error::Shape("P*-P* block is not the inverse transpose of the P-P block".into()));
    }
    let form = GBlockForm { gamma: b.b, epsilon: b.e, theta: b.g, psi: b.h };
    debug_assert_eq!(form.gamma.rows(), n);
    debug_assert_eq!(form.epsilon.rows(), m);
    Ok(form)
}

/// Re-expresses a token built at a smaller hyperbolic rank inside `setup`.
pub fn lift_token<R: Ring>(setup: &QuadSetup<R>, t: &Token<R::Elem>) -> Result<Token<R::Elem>> {
    Ok(match t {
        Token::Atom(a) => Token::Atom(lift_atom(setup, a)?),
        Token::Inverse(x) => Token::inv(lift_token(setup, x)?),
        Token::Commutator(x, y) => Token::comm(lift_token(setup, x)?, lift_token(setup, y)?),
    })
}

fn lift_atom<R: Ring>(setup: &QuadSetup<R>, a: &GenAtom<R::Elem>) -> Result<GenAtom<R::Elem>> {
    if let Some(tag) = &a.tag {
        return crate::transvect::rank_one_atom_tagged(setup, a.kind, tag.i, tag.j, &tag.w);
    }
    if a.param.rows() > setup.m() {
        return Err(Error::Dimension("atom parameter has more rows than the target rank".into()));
    }
    let mut param = Matrix::zeros(setup.ring(), setup.m(), setup.n());
    param.set_block(0, 0, &a.param);
    Ok(GenAtom::general(a.kind, param))
}

pub fn lift_word<R: Ring>(setup: &QuadSetup<R>, w: &GenWord<R::Elem>) -> Result<GenWord<R::Elem>> {
    Ok(GenWord::new(w.tokens.iter().map(|t| lift_token(setup, t)).collect::<Result<_>>()?))
}

/// Flattens a token into atoms under the standard commutator convention.
fn flatten<R: Ring>(ring: &R, t: &Token<R::Elem>, out: &mut Vec<GenAtom<R::Elem>>) {
    match t {
        Token::Atom(a) => out.push(a.clone()),
        Token::Inverse(x) => {
            let mut inner = Vec::new();
            flatten(ring, x, &mut inner);
            out.extend(inner.iter().rev().map(|a| atom_inverse(ring, a)));
        }
        Token::Commutator(g, h) => {
            flatten(ring, g, out);
            flatten(ring, h, out);
            flatten(ring, &Token::inv((**g).clone()), out);
            flatten(ring, &Token::inv((**h).clone()), out);
        }
    }
}

/// The P-index and `Q`-vector of an atom supported on a single row.
fn atom_position<R: Ring>(setup: &QuadSetup<R>, a: &GenAtom<R::Elem>) -> Result<Option<(usize, Vec<R::Elem>)>> {
    if let Some(tag) = &a.tag {
        return Ok(Some((tag.i, tag.w.clone())));
    }
    let r = setup.ring();
    match a.support(r).as_slice() {
        [] => Ok(None),
        [i] => Ok(Some((*i, setup.phi_inv().vec_mul(r, a.param.row(i - 1))))),
        _ => Err(Error::Unsupported("atoms supported on several rows are not decomposed".into())),
    }
}

/// A factor of a word, sorted by where it enters the `FDG` normal form.
#[derive(Clone, Debug)]
enum Piece<T> {
    /// A word in the rank-`(m−1)` generators.
    Low(GenWord<T>),
    /// `E(f_m, u)`.
    C(Vec<T>),
    /// `E(x_m, λ f_{m−1})`.
    Special(T),
}

fn invert_pieces<R: Ring>(ring: &R, ps: &[Piece<R::Elem>]) -> Vec<Piece<R::Elem>> {
    ps.iter()
        .rev()
        .map(|p| match p {
            Piece::Low(w) => Piece::Low(piece_inverse(ring, w)),
            Piece::C(u) => Piece::C(u.iter().map(|x| ring.neg(x)).collect()),
            Piece::Special(l) => Piece::Special(ring.neg(l)),
        })
        .collect()
}

/// `E(x_m, c·v) = ε(1)⁻¹ · g ε(1) g⁻¹` where `g = E(x_{m−1}, c·v)` moves
/// `f_{m−1}` to `f_{m−1} + c·v` and `ε(λ) = E(x_m, λ f_{m−1})`.
fn conjugated_special<R: Ring>(setup: &QuadSetup<R>, g: Token<R::Elem>) -> Vec<Piece<R::Elem>> {
    let r = setup.ring();
    let g = GenWord::single(g);
    vec![
        Piece::Special(r.neg(&r.one())),
        Piece::Low(g.clone()),
        Piece::Special(r.one()),
        Piece::Low(piece_inverse(r, &g)),
    ]
}

/// Writes `E(x_m, y)`, for `y` in the rank-`(m−1)` space, as a product of
/// rank-`(m−1)` words and elements `E(x_m, λ f_{m−1})`. Needs `m ≥ 3`.
fn d_pieces<R: Ring>(setup: &QuadSetup<R>, y: &[R::Elem]) -> Result<Vec<Piece<R::Elem>>> {
    use AtomKind::*;
    let r = setup.ring();
    let (n, m) = (setup.n(), setup.m());
    let (l, b0) = (m - 1, m - 2);
    let mut out = Vec::new();
    let one = r.one();
    // K = E(x_m, f_{b0}).
    let k = conjugated_special(setup, pair_piece(setup, EA, l, EBstar, b0, &one)?);
    let k_inv = invert_pieces(r, &k);
    let via_k = |h: Token<R::Elem>, out: &mut Vec<Piece<R::Elem>>| {
        let h = GenWord::single(h);
        out.extend(k_inv.iter().cloned());
        out.push(Piece::Low(h.clone()));
        out.extend(k.iter().cloned());
        out.push(Piece::Low(piece_inverse(r, &h)));
    };
    let mut x_extra = vec![r.zero(); m];
    let z = &y[..n];
    if z.iter().any(|c| !r.is_zero(c)) {
        // h = E(x_{b0}, z) sends f_{b0} to f_{b0} + z − q(z) x_{b0}.
        let minus_z: Vec<R::Elem> = z.iter().map(|c| r.neg(c)).collect();
        via_k(Token::Atom(rank_one_atom(setup, EA, b0, &minus_z)?), &mut out);
        x_extra[b0 - 1] = setup.q(&embed_q(setup, z));
    }
    for b in 1..=l {
        let c = r.add(&y[setup.x_index(b)], &x_extra[b - 1]);
        if !r.is_zero(&c) {
            if b == l {
                via_k(pair_piece(setup, EA, b0, EA, l, &c)?, &mut out);
            } else {
                out.extend(conjugated_special(setup, pair_piece(setup, EA, l, EA, b, &c)?));
            }
        }
        let d = &y[setup.f_index(b)];
        if !r.is_zero(d) {
            if b == l {
                out.push(Piece::Special(d.clone()));
            } else {
                out.extend(conjugated_special(setup, pair_piece(setup, EA, l, EBstar, b, d)?));
            }
        }
    }
    Ok(out)
}

/// Words for `E(f_m, u)` using only the listed generators of `C_m`.
pub fn c_word<R: Ring>(setup: &QuadSetup<R>, u: &[R::Elem]) -> Result<GenWord<R::Elem>> {
    use AtomKind::*;
    let r = setup.ring();
    let (n, m) = (setup.n(), setup.m());
    let mut w = GenWord::empty();
    let z: Vec<R::Elem> = u[..n].iter().map(|c| r.neg(c)).collect();
    if z.iter().any(|c| !r.is_zero(c)) {
        w.push(Token::Atom(rank_one_atom(setup, EBstar, m, &z)?));
    }
    // E(f_m, c e_b) = E(e_b, −c f_m).
    for b in 1..m {
        for (kind, idx) in [(EA, setup.x_index(b)), (EBstar, setup.f_index(b))] {
            if !r.is_zero(&u[idx]) {
                w.push(pair_piece(setup, kind, b, EBstar, m, &r.neg(&u[idx]))?);
            }
        }
    }
    if !r.is_zero(&u[setup.x_index(m)]) {
        return Err(Error::Unsupported("u is not orthogonal to f_m".into()));
    }
    Ok(w)
}

/// Words for `E(x_m, u)` using only the listed generators of `D_m`.
pub fn d_word<R: Ring>(setup: &QuadSetup<R>, u: &[R::Elem]) -> Result<GenWord<R::Elem>> {
    crate::eichler::eichler_word(setup, AtomKind::EA, setup.m(), u)
}

/// `θ = η ξ μ` with `η ∈ F_m`, `ξ ∈ D_m`, `μ ∈ G_m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FdgTriple<T> {
    pub eta: TaggedWord<T>,
    pub xi: TaggedWord<T>,
    pub mu: TaggedWord<T>,
    /// The `(x_{m−1}, x_m)` entry of `η` was checked to vanish.
    pub reduced: bool,
}

impl<T: Clone + PartialEq> FdgTriple<T> {
    pub fn word(&self) -> GenWord<T> {
        self.eta.word.clone().concat(self.xi.word.clone()).concat(self.mu.word.clone())
    }

    pub fn tags_sound(&self, m: usize) -> bool {
        self.eta.tag == SubgroupTag::F
            && self.xi.tag == SubgroupTag::D
            && self.mu.tag == SubgroupTag::G
            && self.eta.is_sound(m)
            && self.xi.is_sound(m)
            && self.mu.is_sound(m)
    }

    pub fn to_json<R: Ring<Elem = T>>(&self, ring: &R) -> Value {
        json!({
            "eta": {"tag": self.eta.tag.label(), "word": word_to_json(ring, &self.eta.word)},
            "xi": {"tag": self.xi.tag.label(), "word": word_to_json(ring, &self.xi.word)},
            "mu": {"tag": self.mu.tag.label(), "word": word_to_json(ring, &self.mu.word)},
            "reduced": self.reduced,
        })
    }
}

/// The running product `L · E(f_m, u_c) · E(x_m, u_ξ) · μ`.
struct FdgState<'a, R: Ring> {
    setup: &'a QuadSetup<R>,
    small: QuadSetup<R>,
    low: GenWord<R::Elem>,
    low_mat: Matrix<R::Elem>,
    uc: Vec<R::Elem>,
    ux: Vec<R::Elem>,
    mu: GenWord<R::Elem>,
}

impl<'a, R: Ring> FdgState<'a, R> {
    fn new(setup: &'a QuadSetup<R>) -> Self {
        let zero = vec![setup.ring().zero(); setup.dim()];
        Self {
            setup,
            small: setup.with_rank(setup.m() - 1),
            low: GenWord::empty(),
            low_mat: setup.identity(),
            uc: zero.clone(),
            ux: zero,
            mu: GenWord::empty(),
        }
    }

    fn r(&self) -> &R {
        self.setup.ring()
    }

    fn add(&self, a: &[R::Elem], b: &[R::Elem]) -> Vec<R::Elem> {
        a.iter().zip(b).map(|(x, y)| self.r().add(x, y)).collect()
    }

    /// Drops the coefficient at `idx`.
    fn without(&self, mut v: Vec<R::Elem>, idx: usize) -> Vec<R::Elem> {
        v[idx] = self.r().zero();
        v
    }

    fn prepend_low(&mut self, w: GenWord<R::Elem>) -> Result<()> {
        let g = eval_word_matrix(self.setup, &w)?;
        self.low_mat = g.mul(self.r(), &self.low_mat);
        self.low = w.concat(std::mem::replace(&mut self.low, GenWord::empty()));
        Ok(())
    }

    /// Right-multiplies `L` by `g ∈ EO_{m−1}`, conjugating the rest.
    fn append_low(&mut self, w: GenWord<R::Elem>) -> Result<()> {
        let g = eval_word_matrix(self.setup, &w)?;
        let gi = self.setup.orth_inverse(&g);
        self.low_mat = self.low_mat.mul(self.r(), &g);
        self.low.extend(w);
        self.uc = gi.mul_vec(self.r(), &self.uc);
        self.ux = gi.mul_vec(self.r(), &self.ux);
        Ok(())
    }

    fn left_c(&mut self, u: &[R::Elem]) {
        let li = self.setup.orth_inverse(&self.low_mat);
        let v = li.mul_vec(self.r(), u);
        let fm = self.setup.f_index(self.setup.m());
        self.uc = self.without(self.add(&self.uc, &v), fm);
    }

    /// The `(x_{m−1}, x_m)` entry of `L · E(f_m, u_c)`.
    fn corner(&self) -> R::Elem {
        let u3 = self.low_mat.mul_vec(self.r(), &self.uc);
        u3[self.setup.x_index(self.setup.m() - 1)].clone()
    }

    /// Makes the `(x_{m−1}, x_m)` entry of `L · E(f_m, u_c)` vanish.
    fn reduce(&mut self) -> Result<()> {
        use AtomKind::*;
        let (s, m) = (self.setup, self.setup.m());
        let r = s.ring().clone();
        let p = self.corner();
        if r.is_zero(&p) {
            return Ok(());
        }
        let xl = s.x_index(m - 1);
        if !r.is_unit(self.low_mat.get(xl, xl)) {
            let small = s.destabilize_matrix(&self.low_mat)?;
            let mu1 = lift_word(s, &reduce_corner(&self.small, &small)?.word())?;
            self.mu = piece_inverse(&r, &mu1).concat(std::mem::replace(&mut self.mu, GenWord::empty()));
            self.append_low(mu1)?;
        }
        let a_inv = r
            .unit_inverse(self.low_mat.get(xl, xl))
            .ok_or_else(|| Error::Unsolvable("corner reduction left a non-unit".into()))?;
        let p = self.corner();
        let lam = r.mul(&p, &a_inv);
        // μ₂ = E(x_{m−1}, λ f_m) = E(f_m, −λ x_{m−1}).
        self.uc[xl] = r.sub(&self.uc[xl], &lam);
        // μ₃ = E(x_m, λ' f_{m−1}) clears the f_{m−1} coefficient of u_ξ.
        let fl = s.f_index(m - 1);
        let lam3 = r.neg(&self.ux[fl]);
        let mut y = self.ux.clone();
        y[fl] = r.zero();
        y[s.x_index(m)] = r.zero();
        let mut head = GenWord::empty();
        head.push(pair_piece(s, EA, m - 1, EBstar, m, &r.neg(&lam))?);
        if !r.is_zero(&lam3) {
            head.push(pair_piece(s, EA, m, EBstar, m - 1, &r.neg(&lam3))?);
        }
        self.mu = head.concat(std::mem::replace(&mut self.mu, GenWord::empty()));
        // μ₂⁻¹ E(x_m, y) μ₂ = E(x_m + λ x_{m−1}, y) = h · E(x_m, b).
        let mu2 = eichler_matrix(s, &crate::eichler::basis_x(s, m - 1), &self.scaled(&lam, &basis_f(s, m)))?;
        let conj = s.orth_inverse(&mu2).mul(&r, &eichler_matrix(s, &crate::eichler::basis_x(s, m), &y)?).mul(&r, &mu2);
        let ly = self.without(self.scaled(&lam, &y), xl);
        let h = crate::eichler::eichler_word(s, EA, m - 1, &ly)?;
        let rest = s.orth_inverse(&eval_word_matrix(s, &h)?).mul(&r, &conj);
        let b = self.read_shift(&rest, s.x_index(m), s.f_index(m))?;
        self.append_low(h)?;
        self.ux = b;
        if !r.is_zero(&self.corner()) {
            return Err(Error::Unsolvable("reduction did not clear the corner entry".into()));
        }
        Ok(())
    }

    fn scaled(&self, c: &R::Elem, v: &[R::Elem]) -> Vec<R::Elem> {
        v.iter().map(|x| self.r().mul(c, x)).collect()
    }

    /// Reads `b` from `M = E(e, b)` as `M e' − e'` where `e'` pairs with
    /// `e`, checking that `M` really has that form.
    fn read_shift(&self, mat: &Matrix<R::Elem>, e_idx: usize, partner_idx: usize) -> Result<Vec<R::Elem>> {
        let s = self.setup;
        let r = self.r();
        let mut b = mat.col(partner_idx);
        b[partner_idx] = r.sub(&b[partner_idx], &r.one());
        b[e_idx] = r.zero();
        let e = s.unit_vector(e_idx);
        if eichler_matrix(s, &e, &b)? != *mat {
            return Err(Error::Unsolvable("factor is not an Eichler transformation along the expected vector".into()));
        }
        Ok(b)
    }

    /// Left-multiplies by `E(x_m, λ f_{m−1})`; the state must be reduced.
    fn absorb_special(&mut self, lam: &R::Elem) -> Result<()> {
        let (s, m) = (self.setup, self.setup.m());
        let r = s.ring().clone();
        self.reduce()?;
        let (xm, fm) = (s.x_index(m), s.f_index(m));
        let u3 = self.without(self.low_mat.mul_vec(&r, &self.uc), fm);
        let e = self.add(&basis_f(s, m), &self.scaled(lam, &basis_f(s, m - 1)));
        let n_mat = eichler_matrix(s, &e, &u3)?;
        let h = crate::eichler::eichler_word(s, AtomKind::EBstar, m - 1, &self.scaled(lam, &u3))?;
        let rest = s.orth_inverse(&eval_word_matrix(s, &h)?).mul(&r, &n_mat);
        let b = self.read_shift(&rest, fm, xm)?;
        let li = s.orth_inverse(&self.low_mat);
        let shift = self.without(li.mul_vec(&r, &self.scaled(lam, &basis_f(s, m - 1))), xm);
        self.ux = self.add(&self.ux, &shift);
        self.uc = self.without(li.mul_vec(&r, &b), fm);
        self.prepend_low(h)?;
        Ok(())
    }

    #[cfg(test)]
    fn matrix(&self) -> Matrix<R::Elem> {
        let s = self.setup;
        let r = self.r();
        let m = s.m();
        let c = eichler_matrix(s, &basis_f(s, m), &self.uc).unwrap();
        let d = eichler_matrix(s, &crate::eichler::basis_x(s, m), &self.ux).unwrap();
        self.low_mat.mul(r, &c).mul(r, &d).mul(r, &eval_word_matrix(s, &self.mu).unwrap())
    }

    fn apply(&mut self, p: Piece<R::Elem>) -> Result<()> {
        match p {
            Piece::Low(w) => self.prepend_low(w),
            Piece::C(u) => {
                self.left_c(&u);
                Ok(())
            }
            Piece::Special(l) => self.absorb_special(&l),
        }
    }

    fn pieces_of_atom(&self, a: &GenAtom<R::Elem>) -> Result<Vec<Piece<R::Elem>>> {
        let (s, m) = (self.setup, self.setup.m());
        let Some((i, w)) = atom_position(s, a)? else {
            return Ok(vec![]);
        };
        if i < m {
            return Ok(vec![Piece::Low(GenWord::single(Token::Atom(a.clone())))]);
        }
        let minus_w: Vec<R::Elem> = embed_q(s, &w).iter().map(|c| self.r().neg(c)).collect();
        match a.kind {
            AtomKind::EBstar => Ok(vec![Piece::C(minus_w)]),
            AtomKind::EA => d_pieces(s, &minus_w),
        }
    }
}

/// Writes `θ` as a reduced `η ξ μ` with `η ∈ F_m`, `ξ ∈ D_m`, `μ ∈ G_m`.
/// Needs `m ≥ l + 2`.
pub fn fdg_decompose<R: Ring>(setup: &QuadSetup<R>, theta: &GenWord<R::Elem>) -> Result<FdgTriple<R::Elem>> {
    let m = setup.m();
    if m < STABLE_RANK + 2 {
        return Err(Error::RankTooSmall(format!("need m ≥ {}, got m = {m}", STABLE_RANK + 2)));
    }
    let r = setup.ring();
    let mut atoms = Vec::new();
    for t in &theta.tokens {
        flatten(r, t, &mut atoms);
    }
    let mut state = FdgState::new(setup);
    for a in atoms.iter().rev() {
        for p in state.pieces_of_atom(a)?.into_iter().rev() {
            state.apply(p)?;
        }
    }
    state.reduce()?;
    let eta = state.low.clone().concat(c_word(setup, &state.uc)?);
    let eta_mat = eval_word_matrix(setup, &eta)?;
    if !r.is_zero(eta_mat.get(setup.x_index(m - 1), setup.x_index(m))) {
        return Err(Error::Unsolvable("decomposition is not reduced".into()));
    }
    Ok(FdgTriple {
        eta: TaggedWord::new(eta, SubgroupTag::F),
        xi: TaggedWord::new(d_word(setup, &state.ux)?, SubgroupTag::D),
        mu: TaggedWord::new(state.mu, SubgroupTag::G),
        reduced: true,
    })
}

/// Outcome of checking a decomposition against its input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FdgCheck {
    pub product: bool,
    pub tags: bool,
    pub reduced: bool,
    pub g_shape: bool,
}

impl FdgCheck {
    pub fn passed(&self) -> bool {
        self.product && self.tags && self.reduced && self.g_shape
    }
}

pub fn verify_fdg<R: Ring>(setup: &QuadSetup<R>, theta: &GenWord<R::Elem>, t: &FdgTriple<R::Elem>) -> Result<FdgCheck> {
    let m = setup.m();
    let eta = eval_word_matrix(setup, &t.eta.word)?;
    let mu = eval_word_matrix(setup, &t.mu.word)?;
    let r = setup.ring();
    Ok(FdgCheck {
        product: eval_word_matrix(setup, &t.word())? == eval_word_matrix(setup, theta)?,
        tags: t.tags_sound(m),
        reduced: r.is_zero(eta.get(setup.x_index(m - 1), setup.x_index(m))),
        g_shape: g_block_analysis(setup, &mu).is_ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalizer::random_word;
    use crate::ring::{Rationals, ZMod};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn corner_ok<R: Ring>(s: &QuadSetup<R>, sigma: &Matrix<R::Elem>) {
        let red = reduce_corner(s, sigma).unwrap();
        let rho = eval_word_matrix(s, &red.word()).unwrap();
        let prod = sigma.mul(s.ring(), &rho);
        let k = s.x_index(s.m());
        assert!(s.ring().is_one(prod.get(k, k)));
        assert!(red.tagged().is_sound(s.m()));
        assert!(g_block_analysis(s, &rho).is_ok());
    }

    #[test]
    fn corner_identity_is_empty() {
        let r = ZMod::new(9).unwrap();
        let s = QuadSetup::standard(r, 1, 2).unwrap();
        let red = reduce_corner(&s, &s.identity()).unwrap();
        assert!(red.word().is_empty());
    }

    #[test]
    fn corner_random_words() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (p, n, m) in [(9, 1, 2), (3, 2, 3), (9, 2, 3), (15, 1, 2), (5, 2, 2)] {
            let s = QuadSetup::standard(ZMod::new(p).unwrap(), n, m).unwrap();
            for _ in 0..20 {
                let sigma = eval_word_matrix(&s, &random_word(&s, 8, &mut rng).unwrap()).unwrap();
                corner_ok(&s, &sigma);
            }
        }
        let s = QuadSetup::standard(Rationals, 1, 2).unwrap();
        for _ in 0..10 {
            let sigma = eval_word_matrix(&s, &random_word(&s, 6, &mut rng).unwrap()).unwrap();
            corner_ok(&s, &sigma);
        }
    }

    #[test]
    fn corner_rank_too_small() {
        let s = QuadSetup::standard(ZMod::new(9).unwrap(), 1, 1).unwrap();
        assert!(matches!(reduce_corner(&s, &s.identity()), Err(Error::RankTooSmall(_))));
    }

    #[test]
    fn g_blocks() {
        let r = ZMod::new(5).unwrap();
        let s = QuadSetup::standard(r, 1, 2).unwrap();
        let id = g_block_analysis(&s, &s.identity()).unwrap();
        assert!(id.gamma.is_zero(&r) && id.theta.is_zero(&r) && id.psi.is_zero(&r));
        assert!(id.epsilon.is_identity(&r));
        let skew = pair_piece(&s, AtomKind::EBstar, 1, AtomKind::EBstar, 2, &3).unwrap();
        let f = g_block_analysis(&s, &eval_token(&s, &skew).unwrap()).unwrap();
        assert!(f.theta.is_zero(&r) && f.epsilon.is_identity(&r) && !f.psi.is_zero(&r));
        let ea = eval_token(&s, &Token::Atom(rank_one_atom(&s, AtomKind::EA, 1, &[1]).unwrap())).unwrap();
        assert!(g_block_analysis(&s, &ea).is_err());
    }

    fn eval_pieces<R: Ring>(s: &QuadSetup<R>, ps: &[Piece<R::Elem>]) -> Matrix<R::Elem> {
        let r = s.ring();
        let m = s.m();
        let mut acc = s.identity();
        for p in ps {
            let g = match p {
                Piece::Low(w) => eval_word_matrix(s, w).unwrap(),
                Piece::C(u) => eichler_matrix(s, &basis_f(s, m), u).unwrap(),
                Piece::Special(l) => {
                    let v: Vec<R::Elem> = basis_f(s, m - 1).iter().map(|x| r.mul(l, x)).collect();
                    eichler_matrix(s, &crate::eichler::basis_x(s, m), &v).unwrap()
                }
            };
            acc = acc.mul(r, &g);
        }
        acc
    }

    #[test]
    fn d_pieces_rebuild_d_elements() {
        let r = ZMod::new(7).unwrap();
        let s = QuadSetup::new(r, 3, Matrix::from_rows(vec![vec![2u64, 1], vec![1, 3]]).unwrap()).unwrap();
        // (z1, z2, x1, x2, x3, f1, f2, f3): no x3 or f3 component.
        let y = vec![1u64, 5, 2, 4, 0, 3, 6, 0];
        let ps = d_pieces(&s, &y).unwrap();
        assert_eq!(eval_pieces(&s, &ps), eichler_matrix(&s, &crate::eichler::basis_x(&s, 3), &y).unwrap());
        for p in &ps {
            if let Piece::Low(w) = p {
                assert!(w.tokens.iter().all(|t| below(t, 3)));
            }
        }
    }

    #[test]
    fn c_and_d_words() {
        let r = ZMod::new(5).unwrap();
        let s = QuadSetup::standard(r, 1, 3).unwrap();
        let u = vec![2u64, 1, 3, 0, 4, 1, 0];
        let c = c_word(&s, &u).unwrap();
        assert_eq!(eval_word_matrix(&s, &c).unwrap(), eichler_matrix(&s, &basis_f(&s, 3), &u).unwrap());
        assert!(TaggedWord::new(c, SubgroupTag::C).is_sound(3));
        let v = vec![2u64, 1, 3, 0, 4, 1, 0];
        let d = d_word(&s, &v).unwrap();
        assert!(TaggedWord::new(d, SubgroupTag::D).is_sound(3));
    }

    fn fdg_ok<R: Ring>(s: &QuadSetup<R>, theta: &GenWord<R::Elem>) {
        let t = fdg_decompose(s, theta).unwrap();
        let c = verify_fdg(s, theta, &t).unwrap();
        assert!(c.passed(), "{c:?}");
    }

    #[test]
    fn fdg_random_words() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (p, n, m) in [(3, 1, 3), (9, 1, 3), (5, 2, 3), (7, 1, 4), (15, 1, 3)] {
            let s = QuadSetup::standard(ZMod::new(p).unwrap(), n, m).unwrap();
            fdg_ok(&s, &GenWord::empty());
            for _ in 0..10 {
                fdg_ok(&s, &random_word(&s, 6, &mut rng).unwrap());
            }
        }
        let s = QuadSetup::standard(Rationals, 1, 3).unwrap();
        for _ in 0..4 {
            fdg_ok(&s, &random_word(&s, 4, &mut rng).unwrap());
        }
    }

    #[test]
    fn fdg_rank_too_small() {
        let s = QuadSetup::standard(ZMod::new(9).unwrap(), 1, 2).unwrap();
        assert!(matches!(fdg_decompose(&s, &GenWord::empty()), Err(Error::RankTooSmall(_))));
    }

    #[test]
    fn state_tracks_every_piece() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = QuadSetup::standard(ZMod::new(3).unwrap(), 1, 3).unwrap();
        let r = *s.ring();
        for _ in 0..10 {
            let theta = random_word(&s, 6, &mut rng).unwrap();
            let mut atoms = Vec::new();
            for t in &theta.tokens {
                flatten(&r, t, &mut atoms);
            }
            let mut st = FdgState::new(&s);
            let mut target = s.identity();
            for a in atoms.iter().rev() {
                for p in st.pieces_of_atom(a).unwrap().into_iter().rev() {
                    target = eval_pieces(&s, std::slice::from_ref(&p)).mul(&r, &target);
                    st.apply(p).unwrap();
                    assert_eq!(st.matrix(), target);
                }
            }
            st.reduce().unwrap();
            assert_eq!(st.matrix(), target);
        }
    }

    #[test]
    fn single_c_generator_stays_in_eta() {
        let s = QuadSetup::standard(ZMod::new(3).unwrap(), 1, 3).unwrap();
        let g = Token::Atom(rank_one_atom(&s, AtomKind::EBstar, 3, &[2]).unwrap());
        let t = fdg_decompose(&s, &GenWord::single(g.clone())).unwrap();
        assert_eq!(t.eta.word, GenWord::single(g));
        assert!(t.xi.word.is_empty() && t.mu.word.is_empty() && t.reduced);
    }

    #[test]
    fn redecomposition_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let s = QuadSetup::standard(ZMod::new(3).unwrap(), 1, 3).unwrap();
        for _ in 0..5 {
            let theta = random_word(&s, 8, &mut rng).unwrap();
            let t = fdg_decompose(&s, &theta).unwrap();
            let again = fdg_decompose(&s, &t.word()).unwrap();
            assert!(verify_fdg(&s, &theta, &again).unwrap().passed());
        }
    }

    #[test]
    fn g_words_reassemble() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = ZMod::new(5).unwrap();
        let s = QuadSetup::standard(r, 2, 3).unwrap();
        for _ in 0..10 {
            let sigma = eval_word_matrix(&s, &random_word(&s, 6, &mut rng).unwrap()).unwrap();
            let rho = eval_word_matrix(&s, &reduce_corner(&s, &sigma).unwrap().word()).unwrap();
            let f = g_block_analysis(&s, &rho).unwrap();
            assert_eq!(f.assemble(&r).unwrap(), rho);
            let row: Vec<u64> = (0..s.dim() as u64).map(|k| (k * 3 + 1) % 5).collect();
            let (u, v, w) = split_row(&row, 2, 3);
            assert_eq!(f.propagate_row(&r, &u, &v, &w).unwrap(), rho.vec_mul(&r, &row));
        }
    }
}
