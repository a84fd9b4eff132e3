//! Elementary transvections `E_α`, `E*_β` and formal words in them.
//!
//! An atom carries a general parameter: an `m×n` matrix `M` read as a map
//! `Q → P` (kind [`AtomKind::EA`]) or `Q → P*` (kind [`AtomKind::EBstar`]).
//! Indexed atoms are the rank-one special case `M = x_i (wᵗφ)`, so that the
//! map is `z ↦ ⟨w, z⟩ x_i`.
//!
//! Commutators are `[g, h] = g h g⁻¹ h⁻¹`. This is the convention under
//! which the commutator relations among the generators hold as stated; the
//! relations test-suite exercises both conventions and rejects the other.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::quadspace::{OrthMatrix, QuadSetup};
use crate::ring::Ring;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AtomKind {
    /// `E_α`, `α ∈ Hom(Q, P)`.
    EA,
    /// `E*_β`, `β ∈ Hom(Q, P*)`.
    EBstar,
}

impl AtomKind {
    pub fn label(self) -> &'static str {
        match self {
            AtomKind::EA => "EA",
            AtomKind::EBstar => "EB",
        }
    }
}

/// Position of an indexed atom: P-index `i` (one-based) and a Q-side tag `j`
/// that plays no role in evaluation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexTag<T> {
    pub i: usize,
    pub j: Option<usize>,
    pub w: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GenAtom<T> {
    pub kind: AtomKind,
    pub param: Matrix<T>,
    pub tag: Option<IndexTag<T>>,
}

impl<T: Clone + PartialEq> GenAtom<T> {
    pub fn general(kind: AtomKind, param: Matrix<T>) -> Self {
        Self { kind, param, tag: None }
    }

    /// P-index of an indexed atom.
    pub fn index(&self) -> Option<usize> {
        self.tag.as_ref().map(|t| t.i)
    }

    /// Rows of the parameter that carry nonzero entries (one-based).
    pub fn support<R: Ring<Elem = T>>(&self, ring: &R) -> Vec<usize> {
        (0..self.param.rows())
            .filter(|&i| self.param.row(i).iter().any(|a| !ring.is_zero(a)))
            .map(|i| i + 1)
            .collect()
    }
}

/// `E_{α}` with `α = x_i (wᵗφ)` (or the `P*` analogue).
pub fn rank_one_atom<R: Ring>(
    setup: &QuadSetup<R>,
    kind: AtomKind,
    i: usize,
    w: &[R::Elem],
) -> Result<GenAtom<R::Elem>> {
    rank_one_atom_tagged(setup, kind, i, None, w)
}

pub fn rank_one_atom_tagged<R: Ring>(
    setup: &QuadSetup<R>,
    kind: AtomKind,
    i: usize,
    j: Option<usize>,
    w: &[R::Elem],
) -> Result<GenAtom<R::Elem>> {
    let (n, m) = (setup.n(), setup.m());
    if i == 0 || i > m {
        return Err(Error::IndexOutOfRange(format!("P-index {i} outside 1..={m}")));
    }
    if w.len() != n {
        return Err(Error::Dimension(format!("w has length {}, expected {n}", w.len())));
    }
    let r = setup.ring();
    let row = setup.phi().vec_mul(r, w);
    let mut param = Matrix::zeros(r, m, n);
    for (k, a) in row.into_iter().enumerate() {
        param.set(i - 1, k, a);
    }
    Ok(GenAtom {
        kind,
        param,
        tag: Some(IndexTag { i, j, w: w.to_vec() }),
    })
}

/// Evaluates an atom:
/// `E_M = [[I, 0, -φ⁻¹Mᵗ], [M, I, -½Mφ⁻¹Mᵗ], [0, 0, I]]` and
/// `E*_N = [[I, -φ⁻¹Nᵗ, 0], [0, I, 0], [N, -½Nφ⁻¹Nᵗ, I]]`.
pub fn eval_atom_matrix<R: Ring>(setup: &QuadSetup<R>, a: &GenAtom<R::Elem>) -> Result<Matrix<R::Elem>> {
    let (n, m) = (setup.n(), setup.m());
    if a.param.rows() != m || a.param.cols() != n {
        return Err(Error::Dimension(format!(
            "atom parameter is {}x{}, setup needs {m}x{n}",
            a.param.rows(),
            a.param.cols()
        )));
    }
    let r = setup.ring();
    let mt = a.param.transpose();
    let adj = setup.phi_inv().mul(r, &mt).neg(r);
    let quad = a.param.mul(r, setup.phi_inv()).mul(r, &mt).scale(r, setup.half()).neg(r);
    let mut out = setup.identity();
    match a.kind {
        AtomKind::EA => {
            out.set_block(0, n + m, &adj);
            out.set_block(n, 0, &a.param);
            out.set_block(n, n + m, &quad);
        }
        AtomKind::EBstar => {
            out.set_block(0, n, &adj);
            out.set_block(n + m, 0, &a.param);
            out.set_block(n + m, n, &quad);
        }
    }
    Ok(out)
}

pub fn eval_atom<R: Ring>(setup: &QuadSetup<R>, a: &GenAtom<R::Elem>) -> Result<OrthMatrix<R::Elem>> {
    setup.certify(eval_atom_matrix(setup, a)?)
}

/// Same kind, parameter negated.
pub fn atom_inverse<R: Ring>(ring: &R, a: &GenAtom<R::Elem>) -> GenAtom<R::Elem> {
    GenAtom {
        kind: a.kind,
        param: a.param.neg(ring),
        tag: a.tag.as_ref().map(|t| IndexTag {
            i: t.i,
            j: t.j,
            w: t.w.iter().map(|x| ring.neg(x)).collect(),
        }),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Token<T> {
    Atom(GenAtom<T>),
    Inverse(Box<Token<T>>),
    Commutator(Box<Token<T>>, Box<Token<T>>),
}

impl<T: Clone + PartialEq> Token<T> {
    pub fn comm(a: Token<T>, b: Token<T>) -> Self {
        Token::Commutator(Box::new(a), Box::new(b))
    }

    pub fn inv(a: Token<T>) -> Self {
        Token::Inverse(Box::new(a))
    }

    pub fn atom(&self) -> Option<&GenAtom<T>> {
        match self {
            Token::Atom(a) => Some(a),
            _ => None,
        }
    }

    /// Visits every atom in the token tree.
    pub fn atoms(&self) -> Vec<&GenAtom<T>> {
        match self {
            Token::Atom(a) => vec![a],
            Token::Inverse(t) => t.atoms(),
            Token::Commutator(a, b) => {
                let mut v = a.atoms();
                v.extend(b.atoms());
                v
            }
        }
    }
}

/// Commutator convention. [`CommutatorConvention::Standard`] is used
/// throughout the crate; the alternative exists so that the choice can be
/// checked against the commutator relations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommutatorConvention {
    /// `g h g⁻¹ h⁻¹`
    Standard,
    /// `g⁻¹ h⁻¹ g h`
    InverseFirst,
}

pub const COMMUTATOR_CONVENTION: CommutatorConvention = CommutatorConvention::Standard;

pub fn eval_token<R: Ring>(setup: &QuadSetup<R>, t: &Token<R::Elem>) -> Result<Matrix<R::Elem>> {
    eval_token_with(setup, t, COMMUTATOR_CONVENTION)
}

pub fn eval_token_with<R: Ring>(
    setup: &QuadSetup<R>,
    t: &Token<R::Elem>,
    conv: CommutatorConvention,
) -> Result<Matrix<R::Elem>> {
    let r = setup.ring();
    match t {
        Token::Atom(a) => eval_atom_matrix(setup, a),
        Token::Inverse(a) => Ok(setup.block_inverse_matrix(&eval_token_with(setup, a, conv)?)),
        Token::Commutator(a, b) => {
            let g = eval_token_with(setup, a, conv)?;
            let h = eval_token_with(setup, b, conv)?;
            let gi = setup.block_inverse_matrix(&g);
            let hi = setup.block_inverse_matrix(&h);
            Ok(match conv {
                CommutatorConvention::Standard => g.mul(r, &h).mul(r, &gi).mul(r, &hi),
                CommutatorConvention::InverseFirst => gi.mul(r, &hi).mul(r, &g).mul(r, &h),
            })
        }
    }
}

/// A formal product of tokens, read left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct GenWord<T> {
    pub tokens: Vec<Token<T>>,
}

impl<T: Clone + PartialEq> GenWord<T> {
    pub fn new(tokens: Vec<Token<T>>) -> Self {
        Self { tokens }
    }

    pub fn empty() -> Self {
        Self { tokens: Vec::new() }
    }

    pub fn single(t: Token<T>) -> Self {
        Self { tokens: vec![t] }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn push(&mut self, t: Token<T>) {
        self.tokens.push(t);
    }

    pub fn extend(&mut self, other: GenWord<T>) {
        self.tokens.extend(other.tokens);
    }

    pub fn concat(mut self, other: GenWord<T>) -> Self {
        self.extend(other);
        self
    }

    /// The formal inverse: reversed order, each token inverted.
    pub fn inverse(&self) -> Self {
        Self {
            tokens: self
                .tokens
                .iter()
                .rev()
                .map(|t| match t {
                    Token::Inverse(a) => (**a).clone(),
                    other => Token::inv(other.clone()),
                })
                .collect(),
        }
    }
}

pub fn eval_word_matrix<R: Ring>(setup: &QuadSetup<R>, w: &GenWord<R::Elem>) -> Result<Matrix<R::Elem>> {
    let r = setup.ring();
    let mut acc = setup.identity();
    for t in &w.tokens {
        acc = acc.mul(r, &eval_token(setup, t)?);
    }
    Ok(acc)
}

pub fn eval_word<R: Ring>(setup: &QuadSetup<R>, w: &GenWord<R::Elem>) -> Result<OrthMatrix<R::Elem>> {
    setup.certify(eval_word_matrix(setup, w)?)
}

// JSON word format
//
//   {"t":"EA","i":1,"w":["1","0"]}        indexed atom (optionally "j")
//   {"t":"EB","i":2,"w":["0","1/2"]}      indexed E* atom
//   {"t":"EA","M":[["1","0"],["0","0"]]}  general-parameter atom
//   {"t":"inv","a":…}
//   {"t":"comm","a":…,"b":…}

pub fn token_to_json<R: Ring>(ring: &R, t: &Token<R::Elem>) -> Value {
    match t {
        Token::Atom(a) => match &a.tag {
            Some(tag) => {
                let mut v = json!({
                    "t": a.kind.label(),
                    "i": tag.i,
                    "w": tag.w.iter().map(|x| ring.format(x)).collect::<Vec<_>>(),
                });
                if let Some(j) = tag.j {
                    v["j"] = json!(j);
                }
                v
            }
            None => json!({ "t": a.kind.label(), "M": a.param.to_strings(ring) }),
        },
        Token::Inverse(a) => json!({ "t": "inv", "a": token_to_json(ring, a) }),
        Token::Commutator(a, b) => json!({
            "t": "comm",
            "a": token_to_json(ring, a),
            "b": token_to_json(ring, b),
        }),
    }
}

pub fn word_to_json<R: Ring>(ring: &R, w: &GenWord<R::Elem>) -> Value {
    Value::Array(w.tokens.iter().map(|t| token_to_json(ring, t)).collect())
}

fn parse_strings<R: Ring>(ring: &R, v: &Value) -> Result<Vec<R::Elem>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Parse("expected an array of ring elements".into()))?;
    arr.iter()
        .map(|x| match x {
            Value::String(s) => ring.parse_elem(s),
            Value::Number(n) => ring.parse_elem(&n.to_string()),
            _ => Err(Error::Parse(format!("bad ring element {x}"))),
        })
        .collect()
}

pub fn token_from_json<R: Ring>(setup: &QuadSetup<R>, v: &Value) -> Result<Token<R::Elem>> {
    let ring = setup.ring();
    let t = v
        .get("t")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Parse(format!("token without \"t\": {v}")))?;
    let sub = |key: &str| -> Result<Token<R::Elem>> {
        let inner = v
            .get(key)
            .ok_or_else(|| Error::Parse(format!("\"{t}\" token missing \"{key}\"")))?;
        token_from_json(setup, inner)
    };
    match t {
        "inv" => Ok(Token::inv(sub("a")?)),
        "comm" => Ok(Token::comm(sub("a")?, sub("b")?)),
        "EA" | "EB" | "EBstar" => {
            let kind = if t == "EA" { AtomKind::EA } else { AtomKind::EBstar };
            if let Some(rows) = v.get("M") {
                let rows = rows
                    .as_array()
                    .ok_or_else(|| Error::Parse("\"M\" must be an array of rows".into()))?
                    .iter()
                    .map(|row| parse_strings(ring, row))
                    .collect::<Result<Vec<_>>>()?;
                let param = Matrix::from_rows(rows)?;
                if param.rows() != setup.m() || param.cols() != setup.n() {
                    return Err(Error::Dimension(format!(
                        "\"M\" is {}x{}, expected {}x{}",
                        param.rows(),
                        param.cols(),
                        setup.m(),
                        setup.n()
                    )));
                }
                Ok(Token::Atom(GenAtom::general(kind, param)))
            } else {
                let i = v
                    .get("i")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| Error::Parse("indexed atom needs \"i\"".into()))?;
                let j = v.get("j").and_then(Value::as_u64).map(|j| j as usize);
                let w = parse_strings(
                    ring,
                    v.get("w").ok_or_else(|| Error::Parse("indexed atom needs \"w\"".into()))?,
                )?;
                Ok(Token::Atom(rank_one_atom_tagged(setup, kind, i as usize, j, &w)?))
            }
        }
        other => Err(Error::Parse(format!("unknown token type {other:?}"))),
    }
}

/// Accepts either a bare array of tokens or `{"word": [...]}`.
pub fn word_from_json<R: Ring>(setup: &QuadSetup<R>, v: &Value) -> Result<GenWord<R::Elem>> {
    let arr = match v {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get("word")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("expected {\"word\": [...]}".into()))?,
        _ => return Err(Error::Parse("word must be a JSON array".into())),
    };
    Ok(GenWord::new(
        arr.iter().map(|t| token_from_json(setup, t)).collect::<Result<Vec<_>>>()?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{Rationals, ZMod};

    #[test]
    fn atom_examples_n1_m1() {
        let q = Rationals;
        let s = QuadSetup::standard(q.clone(), 1, 1).unwrap();
        let one = Matrix::from_rows(vec![vec![q.one()]]).unwrap();
        let ea = eval_atom_matrix(&s, &GenAtom::general(AtomKind::EA, one.clone())).unwrap();
        assert_eq!(ea.to_text(&q), "1 0 -1\n1 1 -1/2\n0 0 1");
        let eb = eval_atom_matrix(&s, &GenAtom::general(AtomKind::EBstar, one)).unwrap();
        assert_eq!(eb.to_text(&q), "1 -1 0\n0 1 0\n1 -1/2 1");
        let indexed = rank_one_atom(&s, AtomKind::EA, 1, &[q.one()]).unwrap();
        assert_eq!(eval_atom_matrix(&s, &indexed).unwrap(), ea);
        let zero = GenAtom::general(AtomKind::EA, Matrix::zeros(&q, 1, 1));
        assert!(eval_atom_matrix(&s, &zero).unwrap().is_identity(&q));
    }

    #[test]
    fn rank_one_index_errors() {
        let q = Rationals;
        let s = QuadSetup::standard(q.clone(), 1, 1).unwrap();
        assert!(matches!(
            rank_one_atom(&s, AtomKind::EA, 2, &[q.one()]),
            Err(Error::IndexOutOfRange(_))
        ));
        let w0 = rank_one_atom(&s, AtomKind::EBstar, 1, &[q.zero()]).unwrap();
        assert!(eval_atom_matrix(&s, &w0).unwrap().is_identity(&q));
        let bad = GenAtom::general(AtomKind::EA, Matrix::zeros(&q, 2, 1));
        assert!(eval_atom(&s, &bad).is_err());
    }

    #[test]
    fn rank_one_matches_coordinate_display() {
        // E_{α_ij}(z,x,f) = (z - ⟨f,x_i⟩w, x + ⟨w,z⟩x_i - ⟨f,x_i⟩q(w)x_i, f)
        let r = ZMod::new(7).unwrap();
        let phi = Matrix::from_rows(vec![vec![2u64, 1], vec![1, 3]]).unwrap();
        let s = QuadSetup::new(r, 3, phi).unwrap();
        let w = [3u64, 5];
        let i = 2;
        let e = eval_atom_matrix(&s, &rank_one_atom(&s, AtomKind::EA, i, &w).unwrap()).unwrap();
        let v: Vec<u64> = vec![1, 4, 2, 6, 0, 5, 3, 1];
        let got = e.mul_vec(&r, &v);
        let fi = v[s.f_index(i)];
        let mut want = v.clone();
        for k in 0..2 {
            want[k] = r.sub(&want[k], &r.mul(&fi, &w[k]));
        }
        let xi = s.x_index(i);
        let wz = s.pair_small(&w, &v[..2]);
        want[xi] = r.add(&want[xi], &r.sub(&wz, &r.mul(&fi, &s.q_small(&w))));
        assert_eq!(got, want);

        // E*_{β_ij}(z,x,f) = (z - ⟨f_i,x⟩v, x, f + ⟨v,z⟩f_i - ⟨x,f_i⟩q(v)f_i)
        let e = eval_atom_matrix(&s, &rank_one_atom(&s, AtomKind::EBstar, i, &w).unwrap()).unwrap();
        let got = e.mul_vec(&r, &v);
        let xc = v[s.x_index(i)];
        let mut want = v.clone();
        for k in 0..2 {
            want[k] = r.sub(&want[k], &r.mul(&xc, &w[k]));
        }
        let fidx = s.f_index(i);
        want[fidx] = r.add(&want[fidx], &r.sub(&wz, &r.mul(&xc, &s.q_small(&w))));
        assert_eq!(got, want);
    }

    #[test]
    fn word_basics() {
        let r = ZMod::new(5).unwrap();
        let s = QuadSetup::standard(r, 2, 2).unwrap();
        assert!(eval_word_matrix(&s, &GenWord::empty()).unwrap().is_identity(&r));
        let g = Token::Atom(rank_one_atom(&s, AtomKind::EA, 1, &[1, 2]).unwrap());
        let w = GenWord::new(vec![g.clone(), Token::inv(g.clone())]);
        assert!(eval_word_matrix(&s, &w).unwrap().is_identity(&r));
        let h = Token::Atom(rank_one_atom(&s, AtomKind::EBstar, 2, &[3, 1]).unwrap());
        let word = GenWord::new(vec![g.clone(), h.clone(), Token::comm(g.clone(), h.clone())]);
        let m = eval_word_matrix(&s, &word).unwrap();
        let inv = eval_word_matrix(&s, &word.inverse()).unwrap();
        assert!(m.mul(&r, &inv).is_identity(&r));
    }

    #[test]
    fn json_round_trip() {
        let q = Rationals;
        let s = QuadSetup::standard(q.clone(), 2, 2).unwrap();
        let text = r#"[{"t":"EA","i":1,"w":["1","0"]},
                       {"t":"comm","a":{"t":"EB","i":2,"w":["1/2","3"]},"b":{"t":"inv","a":{"t":"EA","i":2,"j":1,"w":["0","-1"]}}},
                       {"t":"EB","M":[["1","0"],["0","2/3"]]}]"#;
        let v: Value = serde_json::from_str(text).unwrap();
        let w = word_from_json(&s, &v).unwrap();
        assert_eq!(w.len(), 3);
        let back = word_from_json(&s, &word_to_json(&q, &w)).unwrap();
        assert_eq!(back, w);
        assert!(eval_word(&s, &w).is_ok());
        let bad: Value = serde_json::from_str(r#"[{"t":"EA","i":3,"w":["1","0"]}]"#).unwrap();
        assert!(word_from_json(&s, &bad).is_err());
    }
}
