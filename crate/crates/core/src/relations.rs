//! Commutator relations among the indexed generators, checked by exact
//! evaluation of both sides.
//!
//! Parameters are rank-one maps `Q → P` (matrix `M`) and `Q → P*` (matrix
//! `N`). Adjoints go through the form: `α* = φ⁻¹Mᵗ` and `β* = φ⁻¹Nᵗ`.
//! Derived parameters are typed composites of the input maps:
//!
//! | id  | identity                                   | derived                                     |
//! |-----|--------------------------------------------|---------------------------------------------|
//! | i   | `[E*_β, [E_α, E*_γ]] = E*_η [E*_ν, E*_ζ]`  | `η = −γα*β`, `ν = ½η`, `ζ = −β`             |
//! | ii  | `[E*_β, [E_α, E_δ]] = E_λ [E_ξ, E*_ζ]`     | `λ = −δα*β`, `ξ = ½λ`, `ζ = −β`             |
//! | iii | `[[E*_β, E*_γ], [E_α, E*_μ]] = [E*_ζ, E*_ν]` | `ζ = −βγ*α`, `ν = μ`                    |
//! | iv  | `[[E_α, E_δ], [E_ξ, E*_β]] = [E_λ, E_η]`   | `λ = αδ*β`, `η = ξ`                         |
//! | v   | `[[E_α, E*_β], [E_δ, E*_γ]] = [E_η, E*_μ]` | `η = −αβ*δ`, `μ = γ`                        |
//!
//! The special forms `p-*` put the index `m` in one slot and rearrange the
//! identity so that the derived generator stands alone on one side.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::quadspace::QuadSetup;
use crate::ring::Ring;
use crate::transvect::{
    eval_word_matrix, rank_one_atom_tagged, AtomKind, GenAtom, GenWord, Token,
};

pub use crate::grouplab::generator_closure_check;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelationId {
    I,
    Ii,
    Iii,
    Iv,
    V,
    PI,
    PIi,
    PIii,
    PIv,
    PV,
}

impl RelationId {
    pub const ALL: [RelationId; 10] = [
        RelationId::I,
        RelationId::Ii,
        RelationId::Iii,
        RelationId::Iv,
        RelationId::V,
        RelationId::PI,
        RelationId::PIi,
        RelationId::PIii,
        RelationId::PIv,
        RelationId::PV,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationId::I => "i",
            RelationId::Ii => "ii",
            RelationId::Iii => "iii",
            RelationId::Iv => "iv",
            RelationId::V => "v",
            RelationId::PI => "p-i",
            RelationId::PIi => "p-ii",
            RelationId::PIii => "p-iii",
            RelationId::PIv => "p-iv",
            RelationId::PV => "p-v",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == s)
    }

    /// The general identity a special form is derived from.
    pub fn base(self) -> Self {
        match self {
            RelationId::PI => RelationId::I,
            RelationId::PIi => RelationId::Ii,
            RelationId::PIii => RelationId::Iii,
            RelationId::PIv => RelationId::Iv,
            RelationId::PV => RelationId::V,
            other => other,
        }
    }

    pub fn is_special(self) -> bool {
        self.base() != self
    }

    /// Whether the relation involves three P-indices `i, j, t`.
    pub fn three_indices(self) -> bool {
        matches!(self.base(), RelationId::Iii | RelationId::Iv | RelationId::V)
    }

    /// Kinds of the input atoms, in the order they appear on the left side.
    pub fn input_kinds(self) -> &'static [AtomKind] {
        use AtomKind::*;
        match self.base() {
            RelationId::I => &[EBstar, EA, EBstar],
            RelationId::Ii => &[EBstar, EA, EA],
            RelationId::Iii => &[EBstar, EBstar, EA, EBstar],
            RelationId::Iv => &[EA, EA, EA, EBstar],
            _ => &[EA, EBstar, EA, EBstar],
        }
    }

    /// P-index slot of each input: 0 for `i`, 1 for `j`, 2 for `t`.
    fn input_slots(self) -> &'static [usize] {
        match self.base() {
            RelationId::I | RelationId::Ii => &[0, 0, 1],
            RelationId::Iii => &[0, 1, 1, 2],
            RelationId::Iv => &[0, 1, 2, 1],
            _ => &[0, 1, 1, 2],
        }
    }

    /// Smallest hyperbolic rank admitting the index constraints.
    pub fn min_rank(self) -> usize {
        if self.three_indices() {
            3
        } else {
            2
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationCase<T> {
    pub id: RelationId,
    /// P-indices `(i, j, t)`; `t` is ignored by the two-index relations.
    pub i: usize,
    pub j: usize,
    pub t: usize,
    /// Q-index tags, one per input atom. They do not affect evaluation.
    pub q_tags: Vec<usize>,
    /// One vector `w ∈ Qⁿ` per input atom.
    pub params: Vec<Vec<T>>,
}

impl<T: Clone> RelationCase<T> {
    fn slot(&self, s: usize) -> usize {
        [self.i, self.j, self.t][s]
    }
}

/// Checks the index side-conditions of a case.
pub fn check_indices<R: Ring>(setup: &QuadSetup<R>, case: &RelationCase<R::Elem>) -> Result<()> {
    let m = setup.m();
    let id = case.id;
    let (i, j, t) = (case.i, case.j, case.t);
    let fail = |msg: String| Err(Error::IndexConstraint(msg));
    let used: &[usize] = if id.three_indices() { &[i, j, t] } else { &[i, j] };
    if used.iter().any(|&x| x == 0 || x > m) {
        return Err(Error::IndexOutOfRange(format!("P-indices {used:?} outside 1..={m}")));
    }
    if id.three_indices() {
        if i == j || j == t || i == t {
            return fail(format!("i, j, t must be distinct, got ({i}, {j}, {t})"));
        }
    } else if i == j {
        return fail(format!("i and j must differ, got i = j = {i}"));
    }
    match id {
        RelationId::PI | RelationId::PIi if i != m => fail(format!("i must equal m = {m}")),
        RelationId::PIii | RelationId::PIv | RelationId::PV if j != m => {
            fail(format!("j must equal m = {m}"))
        }
        _ => Ok(()),
    }?;
    let want = id.input_kinds().len();
    if case.params.len() != want || case.q_tags.len() != want {
        return Err(Error::Shape(format!(
            "relation {} takes {want} parameters, got {}",
            id.name(),
            case.params.len()
        )));
    }
    if case.params.iter().any(|w| w.len() != setup.n()) {
        return Err(Error::Dimension(format!("parameters must have length {}", setup.n())));
    }
    if case.q_tags.iter().any(|&k| k == 0 || k > setup.n()) {
        return Err(Error::IndexOutOfRange(format!("Q-index tags {:?}", case.q_tags)));
    }
    Ok(())
}

fn input_atoms<R: Ring>(setup: &QuadSetup<R>, case: &RelationCase<R::Elem>) -> Result<Vec<GenAtom<R::Elem>>> {
    let kinds = case.id.input_kinds();
    let slots = case.id.input_slots();
    (0..kinds.len())
        .map(|k| {
            rank_one_atom_tagged(
                setup,
                kinds[k],
                case.slot(slots[k]),
                Some(case.q_tags[k]),
                &case.params[k],
            )
        })
        .collect()
}

/// Adjoint of a parameter matrix, `φ⁻¹Mᵗ`.
fn adj<R: Ring>(setup: &QuadSetup<R>, m: &Matrix<R::Elem>) -> Matrix<R::Elem> {
    setup.phi_inv().mul(setup.ring(), &m.transpose())
}

/// Derived parameters of the right side, in display order. With `mutate`
/// the first derived parameter is negated.
pub fn derived_parameters<R: Ring>(
    setup: &QuadSetup<R>,
    case: &RelationCase<R::Elem>,
    mutate: bool,
) -> Result<Vec<GenAtom<R::Elem>>> {
    use AtomKind::*;
    check_indices(setup, case)?;
    let r = setup.ring();
    let p: Vec<Matrix<R::Elem>> = input_atoms(setup, case)?.into_iter().map(|a| a.param).collect();
    // a ∘ b* ∘ c for three parameter matrices
    let comp = |a: &Matrix<R::Elem>, b: &Matrix<R::Elem>, c: &Matrix<R::Elem>| {
        a.mul(r, &adj(setup, b)).mul(r, c)
    };
    let mut out: Vec<(AtomKind, Matrix<R::Elem>)> = match case.id.base() {
        RelationId::I | RelationId::Ii => {
            // inputs (β, α, γ) or (β, α, δ)
            let (beta, alpha, third) = (&p[0], &p[1], &p[2]);
            let lead = comp(third, alpha, beta).neg(r);
            let half = lead.scale(r, setup.half());
            let kind = if case.id.base() == RelationId::I { EBstar } else { EA };
            vec![(kind, lead), (kind, half), (EBstar, beta.neg(r))]
        }
        RelationId::Iii => {
            // inputs (β, γ, α, μ)
            vec![(EBstar, comp(&p[0], &p[1], &p[2]).neg(r)), (EBstar, p[3].clone())]
        }
        RelationId::Iv => {
            // inputs (α, δ, ξ, β)
            vec![(EA, comp(&p[0], &p[1], &p[3])), (EA, p[2].clone())]
        }
        _ => {
            // inputs (α, β, δ, γ)
            vec![(EA, comp(&p[0], &p[1], &p[2]).neg(r)), (EBstar, p[3].clone())]
        }
    };
    if mutate {
        out[0].1 = out[0].1.neg(r);
    }
    Ok(out.into_iter().map(|(k, m)| GenAtom::general(k, m)).collect())
}

fn tok<T: Clone + PartialEq>(a: &GenAtom<T>) -> Token<T> {
    Token::Atom(a.clone())
}

/// The two sides of a relation as words.
pub fn relation_words<R: Ring>(
    setup: &QuadSetup<R>,
    case: &RelationCase<R::Elem>,
    mutate: bool,
) -> Result<(GenWord<R::Elem>, GenWord<R::Elem>)> {
    let d = derived_parameters(setup, case, mutate)?;
    let inputs = input_atoms(setup, case)?;
    let x: Vec<Token<R::Elem>> = inputs.iter().map(tok).collect();
    let y: Vec<Token<R::Elem>> = d.iter().map(tok).collect();
    let (lhs, rhs) = if case.id.three_indices() {
        let l = Token::comm(
            Token::comm(x[0].clone(), x[1].clone()),
            Token::comm(x[2].clone(), x[3].clone()),
        );
        let rr = Token::comm(y[0].clone(), y[1].clone());
        (GenWord::single(l), GenWord::single(rr))
    } else {
        let l = Token::comm(x[0].clone(), Token::comm(x[1].clone(), x[2].clone()));
        let tail = Token::comm(y[1].clone(), y[2].clone());
        (GenWord::single(l), GenWord::new(vec![y[0].clone(), tail]))
    };
    if !case.id.is_special() {
        return Ok((lhs, rhs));
    }
    // Special forms: the derived generator alone against the rearranged rest.
    Ok(if case.id.three_indices() {
        (rhs, lhs)
    } else {
        let tail = GenWord::single(rhs.tokens[1].clone());
        (GenWord::single(rhs.tokens[0].clone()), lhs.concat(tail.inverse()))
    })
}

pub fn lhs_rhs<R: Ring>(
    setup: &QuadSetup<R>,
    case: &RelationCase<R::Elem>,
) -> Result<(Matrix<R::Elem>, Matrix<R::Elem>)> {
    lhs_rhs_with(setup, case, false)
}

pub fn lhs_rhs_with<R: Ring>(
    setup: &QuadSetup<R>,
    case: &RelationCase<R::Elem>,
    mutate: bool,
) -> Result<(Matrix<R::Elem>, Matrix<R::Elem>)> {
    let (l, r) = relation_words(setup, case, mutate)?;
    Ok((eval_word_matrix(setup, &l)?, eval_word_matrix(setup, &r)?))
}

pub fn verify_relation<R: Ring>(setup: &QuadSetup<R>, case: &RelationCase<R::Elem>) -> Result<bool> {
    let (l, r) = lhs_rhs(setup, case)?;
    Ok(l == r)
}

/// Relation (ii) with the signs `λ = δα*β`, `ζ = β` instead of the negated
/// ones the implementation uses. Returns whether that variant holds.
pub fn relation_ii_alternate_signs<R: Ring>(setup: &QuadSetup<R>, case: &RelationCase<R::Elem>) -> Result<bool> {
    if case.id.base() != RelationId::Ii {
        return Err(Error::Unsupported("only relation ii has an alternate sign form".into()));
    }
    let r = setup.ring();
    let inputs = input_atoms(setup, case)?;
    let d = derived_parameters(setup, case, false)?;
    let flip = |a: &GenAtom<R::Elem>| GenAtom::general(a.kind, a.param.neg(r));
    let lhs = GenWord::single(Token::comm(
        tok(&inputs[0]),
        Token::comm(tok(&inputs[1]), tok(&inputs[2])),
    ));
    let rhs = GenWord::new(vec![
        tok(&flip(&d[0])),
        Token::comm(tok(&flip(&d[1])), tok(&flip(&d[2]))),
    ]);
    Ok(eval_word_matrix(setup, &lhs)? == eval_word_matrix(setup, &rhs)?)
}

/// A random admissible case. Requires `m >= id.min_rank()`.
pub fn random_case<R: Ring, G: rand::Rng + ?Sized>(
    setup: &QuadSetup<R>,
    id: RelationId,
    rng: &mut G,
) -> Result<RelationCase<R::Elem>> {
    let m = setup.m();
    if m < id.min_rank() {
        return Err(Error::IndexConstraint(format!(
            "relation {} needs m >= {}, got {m}",
            id.name(),
            id.min_rank()
        )));
    }
    let mut idx: Vec<usize> = (1..=m).collect();
    // partial Fisher–Yates for three distinct indices
    for k in 0..3.min(m) {
        let s = rng.gen_range(k..m);
        idx.swap(k, s);
    }
    let (mut i, mut j, mut t) = (idx[0], idx[1], if m >= 3 { idx[2] } else { idx[0] });
    let fix = |slot: &mut usize, other: &mut usize| {
        if *other == m {
            *other = *slot;
        }
        *slot = m;
    };
    match id {
        RelationId::PI | RelationId::PIi => fix(&mut i, &mut j),
        RelationId::PIii | RelationId::PIv | RelationId::PV => {
            if i == m {
                i = j;
            } else if t == m {
                t = j;
            }
            j = m;
        }
        _ => {}
    }
    let k = id.input_kinds().len();
    let r = setup.ring();
    let n = setup.n();
    let case = RelationCase {
        id,
        i,
        j,
        t,
        q_tags: (0..k).map(|_| rng.gen_range(1..=n)).collect(),
        params: (0..k).map(|_| (0..n).map(|_| r.random(rng)).collect()).collect(),
    };
    check_indices(setup, &case)?;
    Ok(case)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationReport {
    pub id: RelationId,
    pub trials: usize,
    pub failures: usize,
    pub first_failure: Option<Value>,
}

impl RelationReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn to_json(&self) -> Value {
        json!({
            "trials": self.trials,
            "failures": self.failures,
            "first_failure_case": self.first_failure,
        })
    }
}

pub fn case_to_json<R: Ring>(ring: &R, case: &RelationCase<R::Elem>) -> Value {
    json!({
        "relation": case.id.name(),
        "i": case.i,
        "j": case.j,
        "t": case.t,
        "q_tags": case.q_tags,
        "params": case
            .params
            .iter()
            .map(|w| w.iter().map(|x| ring.format(x)).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    })
}

/// Runs `trials` seeded random cases of one relation.
pub fn run_trials<R: Ring>(setup: &QuadSetup<R>, id: RelationId, trials: usize, seed: u64) -> Result<RelationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut first_failure = None;
    for _ in 0..trials {
        let case = random_case(setup, id, &mut rng)?;
        if !verify_relation(setup, &case)? {
            failures += 1;
            first_failure.get_or_insert_with(|| case_to_json(setup.ring(), &case));
        }
    }
    Ok(RelationReport { id, trials, failures, first_failure })
}

/// Draws cases until the mutated right side is detectably different from
/// the honest one, then reports whether the mutated relation still holds.
/// Returns `None` when no such case turned up in `attempts` draws.
pub fn mutation_survives<R: Ring>(setup: &QuadSetup<R>, id: RelationId, seed: u64, attempts: usize) -> Result<Option<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..attempts {
        let case = random_case(setup, id, &mut rng)?;
        let honest = lhs_rhs_with(setup, &case, false)?;
        let mutated = lhs_rhs_with(setup, &case, true)?;
        if honest != mutated {
            return Ok(Some(mutated.0 == mutated.1));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{Rationals, ZMod};

    fn case<T: Clone>(id: RelationId, ijt: (usize, usize, usize), params: Vec<Vec<T>>) -> RelationCase<T> {
        RelationCase { id, i: ijt.0, j: ijt.1, t: ijt.2, q_tags: vec![1; params.len()], params }
    }

    #[test]
    fn relation_i_all_ones() {
        let q = Rationals;
        let s = QuadSetup::standard(q.clone(), 1, 2).unwrap();
        let one = vec![q.one()];
        let c = case(RelationId::I, (1, 2, 0), vec![one.clone(), one.clone(), one]);
        let (l, r) = lhs_rhs(&s, &c).unwrap();
        assert_eq!(l, r);
        assert!(!l.is_identity(&q));
    }

    #[test]
    fn zero_parameters_give_identity() {
        let r = ZMod::new(5).unwrap();
        let s = QuadSetup::standard(r, 2, 3).unwrap();
        for id in RelationId::ALL {
            let k = id.input_kinds().len();
            let ijt = match id {
                RelationId::PI | RelationId::PIi => (3, 1, 2),
                RelationId::PIii | RelationId::PIv | RelationId::PV => (1, 3, 2),
                _ => (1, 2, 3),
            };
            let c = case(id, ijt, vec![vec![0u64, 0]; k]);
            let (l, rr) = lhs_rhs(&s, &c).unwrap();
            assert!(l.is_identity(&r) && rr.is_identity(&r), "{}", id.name());
            assert!(verify_relation(&s, &c).unwrap());
        }
    }

    #[test]
    fn index_constraints() {
        let r = ZMod::new(5).unwrap();
        let s = QuadSetup::standard(r, 1, 2).unwrap();
        let c = case(RelationId::Iii, (1, 1, 2), vec![vec![1u64]; 4]);
        assert!(matches!(lhs_rhs(&s, &c), Err(Error::IndexConstraint(_))));
        let c = case(RelationId::I, (2, 2, 0), vec![vec![1u64]; 3]);
        assert!(matches!(verify_relation(&s, &c), Err(Error::IndexConstraint(_))));
        let c = case(RelationId::PI, (1, 2, 0), vec![vec![1u64]; 3]);
        assert!(matches!(verify_relation(&s, &c), Err(Error::IndexConstraint(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(random_case(&s, RelationId::V, &mut rng).is_err());
    }

    #[test]
    fn random_cases_hold_over_z5() {
        let r = ZMod::new(5).unwrap();
        for (n, m) in [(1, 3), (2, 3), (2, 4)] {
            let s = QuadSetup::standard(r, n, m).unwrap();
            for (k, id) in RelationId::ALL.into_iter().enumerate() {
                let rep = run_trials(&s, id, 20, 100 + k as u64).unwrap();
                assert!(rep.passed(), "{} failed: {:?}", id.name(), rep.first_failure);
            }
        }
    }

    #[test]
    fn mutations_are_caught() {
        let r = ZMod::new(5).unwrap();
        let s = QuadSetup::standard(r, 2, 3).unwrap();
        for id in RelationId::ALL {
            assert_eq!(mutation_survives(&s, id, 9, 200).unwrap(), Some(false), "{}", id.name());
        }
    }

    #[test]
    fn relation_ii_alternate_signs_fail() {
        let r = ZMod::new(7).unwrap();
        let s = QuadSetup::standard(r, 1, 2).unwrap();
        let c = case(RelationId::Ii, (1, 2, 0), vec![vec![1u64], vec![1], vec![1]]);
        assert!(verify_relation(&s, &c).unwrap());
        assert!(!relation_ii_alternate_signs(&s, &c).unwrap());
    }
}
