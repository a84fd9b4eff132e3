//! Conjugation of the generators carrying index `m` by matrices fixing the
//! last hyperbolic pair, and the reduction of an elementary matrix to such
//! a matrix by elementary corrections on both sides.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::eichler::{basis_f, basis_x, pair_piece};
use crate::error::{Error, Result};
use crate::fdg::{d_word, piece_inverse, reduce_corner};
use crate::matrix::Matrix;
use crate::quadspace::{Blocks, QuadSetup};
use crate::ring::Ring;
use crate::transvect::{
    eval_token, eval_word_matrix, rank_one_atom, rank_one_atom_tagged, word_to_json, AtomKind, GenAtom, GenWord,
    Token,
};

/// The six generator classes in which index `m` appears. Vectors are the
/// rank-one parameters `w ∈ Qⁿ`; `k`, `i`, `j` are the other P-indices
/// (all `< m`) and `q` holds the Q-index tags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GenClass<T> {
    /// `E_{α_{mj}}`
    AlphaM { w: Vec<T>, q: usize },
    /// `E*_{β_{mj}}`
    BetaM { w: Vec<T>, q: usize },
    /// `[E_{α_{mj}}, E*_{β_{kl}}]`
    AlphaMBetaK { w1: Vec<T>, k: usize, w2: Vec<T>, q: (usize, usize) },
    /// `[E_{α_{ij}}, E*_{β_{mk}}]`
    AlphaIBetaM { i: usize, w1: Vec<T>, w2: Vec<T>, q: (usize, usize) },
    /// `[E_{α_{mk}}, E_{δ_{jl}}]`
    AlphaMDeltaJ { w1: Vec<T>, j: usize, w2: Vec<T>, q: (usize, usize) },
    /// `[E*_{β_{mk}}, E*_{γ_{jl}}]`
    BetaMGammaJ { w1: Vec<T>, j: usize, w2: Vec<T>, q: (usize, usize) },
}

pub const CLASS_NAMES: [&str; 6] = ["a_mj", "b_mj", "a_mj_b_kl", "a_ij_b_mk", "a_mk_d_jl", "b_mk_g_jl"];

impl<T: Clone + PartialEq> GenClass<T> {
    pub fn name(&self) -> &'static str {
        match self {
            GenClass::AlphaM { .. } => CLASS_NAMES[0],
            GenClass::BetaM { .. } => CLASS_NAMES[1],
            GenClass::AlphaMBetaK { .. } => CLASS_NAMES[2],
            GenClass::AlphaIBetaM { .. } => CLASS_NAMES[3],
            GenClass::AlphaMDeltaJ { .. } => CLASS_NAMES[4],
            GenClass::BetaMGammaJ { .. } => CLASS_NAMES[5],
        }
    }

    fn other_index(&self) -> Option<usize> {
        match self {
            GenClass::AlphaM { .. } | GenClass::BetaM { .. } => None,
            GenClass::AlphaMBetaK { k, .. } => Some(*k),
            GenClass::AlphaIBetaM { i, .. } => Some(*i),
            GenClass::AlphaMDeltaJ { j, .. } | GenClass::BetaMGammaJ { j, .. } => Some(*j),
        }
    }
}

/// The generator as an indexed token.
pub fn class_token<R: Ring>(setup: &QuadSetup<R>, class: &GenClass<R::Elem>) -> Result<Token<R::Elem>> {
    use AtomKind::*;
    let m = setup.m();
    if let Some(o) = class.other_index() {
        if o == 0 || o >= m {
            return Err(Error::IndexConstraint(format!("second P-index must lie in 1..{m}, got {o}")));
        }
    }
    let at = |k, i, q, w: &[R::Elem]| -> Result<Token<R::Elem>> {
        Ok(Token::Atom(rank_one_atom_tagged(setup, k, i, Some(q), w)?))
    };
    Ok(match class {
        GenClass::AlphaM { w, q } => at(EA, m, *q, w)?,
        GenClass::BetaM { w, q } => at(EBstar, m, *q, w)?,
        GenClass::AlphaMBetaK { w1, k, w2, q } => Token::comm(at(EA, m, q.0, w1)?, at(EBstar, *k, q.1, w2)?),
        GenClass::AlphaIBetaM { i, w1, w2, q } => Token::comm(at(EA, *i, q.0, w1)?, at(EBstar, m, q.1, w2)?),
        GenClass::AlphaMDeltaJ { w1, j, w2, q } => Token::comm(at(EA, m, q.0, w1)?, at(EA, *j, q.1, w2)?),
        GenClass::BetaMGammaJ { w1, j, w2, q } => Token::comm(at(EBstar, m, q.0, w1)?, at(EBstar, *j, q.1, w2)?),
    })
}

fn param<R: Ring>(setup: &QuadSetup<R>, kind: AtomKind, i: usize, w: &[R::Elem]) -> Result<Matrix<R::Elem>> {
    Ok(rank_one_atom_tagged(setup, kind, i, None, w)?.param)
}

/// The factorization of `T⁻¹ g T` for `T` fixing `x_m, f_m` (given as its
/// block decomposition in the rank-`m` space) and `g` a generator of one of
/// the six classes. Every word has the shape
/// `[·, ·][·, ·][·, ·]·atom` with general-parameter atoms; the adjoint is
/// `M* = φ⁻¹Mᵗ`.
pub fn factorization_word<R: Ring>(
    setup: &QuadSetup<R>,
    blocks: &Blocks<R::Elem>,
    class: &GenClass<R::Elem>,
) -> Result<GenWord<R::Elem>> {
    use AtomKind::*;
    class_token(setup, class)?;
    let r = setup.ring();
    let m = setup.m();
    let phi = setup.phi();
    let phi_inv = setup.phi_inv();
    let half = setup.half();
    let Blocks { a, b, c, d, e, f, g, h, j } = blocks;
    let adj = |x: &Matrix<R::Elem>| phi_inv.mul(r, &x.transpose());
    let at = |k, x: Matrix<R::Elem>| Token::Atom(GenAtom::general(k, x));
    let comm = |x, y| Token::comm(x, y);
    let ctphi = c.transpose().mul(r, phi);
    let btphi = b.transpose().mul(r, phi);
    let jt = j.transpose();
    let et = e.transpose();
    let ht = h.transpose();
    let ft = f.transpose();
    let tokens = match class {
        GenClass::AlphaM { w, .. } => {
            let al = jt.mul(r, &param(setup, EA, m, w)?);
            vec![
                comm(at(EA, al.mul(r, b).mul(r, &ctphi)), at(EA, al.scale(r, half))),
                comm(at(EA, ctphi.clone()), at(EA, al.clone())),
                comm(at(EBstar, btphi.clone()), at(EA, al.clone())),
                at(EA, al.mul(r, a)),
            ]
        }
        GenClass::BetaM { w, .. } => {
            let be = et.mul(r, &param(setup, EBstar, m, w)?);
            vec![
                comm(at(EBstar, be.mul(r, c).mul(r, &btphi)), at(EBstar, be.scale(r, half))),
                comm(at(EBstar, btphi.clone()), at(EBstar, be.clone())),
                comm(at(EA, ctphi.clone()), at(EBstar, be.clone())),
                at(EBstar, be.mul(r, a)),
            ]
        }
        GenClass::AlphaMBetaK { w1, k, w2, .. } => {
            let al = jt.mul(r, &param(setup, EA, m, w1)?);
            let be = param(setup, EBstar, *k, w2)?;
            let al_bt = al.mul(r, phi_inv).mul(r, &be.transpose());
            vec![
                comm(at(EA, al.scale(r, half)), at(EA, al_bt.mul(r, f).mul(r, &et).mul(r, &be))),
                comm(at(EA, al.clone()), at(EA, ft.mul(r, &be))),
                comm(at(EA, al.clone()), at(EBstar, et.mul(r, &be))),
                at(EA, al_bt.mul(r, d).neg(r)),
            ]
        }
        GenClass::AlphaIBetaM { i, w1, w2, .. } => {
            let al = param(setup, EA, *i, w1)?;
            let be = et.mul(r, &param(setup, EBstar, m, w2)?);
            let be_at = be.mul(r, phi_inv).mul(r, &al.transpose());
            vec![
                comm(at(EBstar, be_at.mul(r, j).mul(r, &ht).mul(r, &al)), at(EBstar, be.scale(r, half))),
                comm(at(EBstar, ht.mul(r, &al)), at(EBstar, be.clone())),
                comm(at(EA, jt.mul(r, &al)), at(EBstar, be.clone())),
                at(EBstar, be_at.mul(r, g)),
            ]
        }
        GenClass::AlphaMDeltaJ { w1, j: jj, w2, .. } => {
            let al = param(setup, EA, m, w1)?;
            let jal = jt.mul(r, &al);
            let de = param(setup, EA, *jj, w2)?;
            let al_ds = jal.mul(r, &adj(&de));
            vec![
                comm(at(EA, jal.scale(r, half)), at(EA, al_ds.mul(r, h).mul(r, &jt).mul(r, &de))),
                comm(at(EA, jal.clone()), at(EBstar, ht.mul(r, &de))),
                comm(at(EA, al.clone()), at(EA, jt.mul(r, &de))),
                at(EA, al_ds.mul(r, g).neg(r)),
            ]
        }
        GenClass::BetaMGammaJ { w1, j: jj, w2, .. } => {
            let be = et.mul(r, &param(setup, EBstar, m, w1)?);
            let ga = param(setup, EBstar, *jj, w2)?;
            let be_gs = be.mul(r, &adj(&ga));
            vec![
                comm(at(EBstar, be.scale(r, half)), at(EBstar, be_gs.mul(r, e).mul(r, &ft).mul(r, &ga))),
                comm(at(EBstar, be.clone()), at(EBstar, et.mul(r, &ga))),
                comm(at(EBstar, be.clone()), at(EA, ft.mul(r, &ga))),
                at(EBstar, be_gs.mul(r, d).neg(r)),
            ]
        }
    };
    Ok(GenWord::new(tokens))
}

/// A conjugation instance: `T` lives in the rank-`(m-1)` space.
#[derive(Clone, Debug, PartialEq)]
pub struct ConjCase<T> {
    pub t_small: Matrix<T>,
    pub class: GenClass<T>,
}

/// Factorization word for `stabilize(T)⁻¹ · g · stabilize(T)`.
pub fn conjugate_factorization<R: Ring>(setup: &QuadSetup<R>, case: &ConjCase<R::Elem>) -> Result<GenWord<R::Elem>> {
    let small = setup.with_rank(setup.m() - 1);
    if !small.is_orthogonal(&case.t_small)? {
        return Err(Error::NotOrthogonal);
    }
    let t = setup.stabilize_matrix(&case.t_small)?;
    factorization_word(setup, &setup.blocks(&t), &case.class)
}

/// `T⁻¹ g T` by direct multiplication, for comparison.
pub fn conjugate_direct<R: Ring>(setup: &QuadSetup<R>, case: &ConjCase<R::Elem>) -> Result<Matrix<R::Elem>> {
    let r = setup.ring();
    let t = setup.stabilize_matrix(&case.t_small)?;
    let g = eval_token(setup, &class_token(setup, &case.class)?)?;
    Ok(setup.block_inverse_matrix(&t).mul(r, &g).mul(r, &t))
}

pub fn verify_factorization<R: Ring>(setup: &QuadSetup<R>, case: &ConjCase<R::Elem>) -> Result<bool> {
    let w = conjugate_factorization(setup, case)?;
    Ok(eval_word_matrix(setup, &w)? == conjugate_direct(setup, case)?)
}

fn random_vec<R: Ring, G: rand::Rng + ?Sized>(ring: &R, n: usize, rng: &mut G) -> Vec<R::Elem> {
    (0..n).map(|_| ring.random(rng)).collect()
}

/// A random word of `len` indexed atoms (alternating kinds) in `setup`.
pub fn random_word<R: Ring, G: rand::Rng + ?Sized>(setup: &QuadSetup<R>, len: usize, rng: &mut G) -> Result<GenWord<R::Elem>> {
    let mut w = GenWord::empty();
    for k in 0..len {
        let kind = if k % 2 == 0 { AtomKind::EA } else { AtomKind::EBstar };
        let i = rng.gen_range(1..=setup.m());
        let q = rng.gen_range(1..=setup.n());
        let v = random_vec(setup.ring(), setup.n(), rng);
        w.push(Token::Atom(rank_one_atom_tagged(setup, kind, i, Some(q), &v)?));
    }
    Ok(w)
}

pub fn random_class<R: Ring, G: rand::Rng + ?Sized>(
    setup: &QuadSetup<R>,
    name: &str,
    rng: &mut G,
) -> Result<GenClass<R::Elem>> {
    let (n, m) = (setup.n(), setup.m());
    if m < 2 {
        return Err(Error::IndexConstraint("conjugation classes need m >= 2".into()));
    }
    let r = setup.ring();
    let mut v = || random_vec(r, n, rng);
    let (w1, w2) = (v(), v());
    let o = rng.gen_range(1..m);
    let q = (rng.gen_range(1..=n), rng.gen_range(1..=n));
    Ok(match name {
        "a_mj" => GenClass::AlphaM { w: w1, q: q.0 },
        "b_mj" => GenClass::BetaM { w: w1, q: q.0 },
        "a_mj_b_kl" => GenClass::AlphaMBetaK { w1, k: o, w2, q },
        "a_ij_b_mk" => GenClass::AlphaIBetaM { i: o, w1, w2, q },
        "a_mk_d_jl" => GenClass::AlphaMDeltaJ { w1, j: o, w2, q },
        "b_mk_g_jl" => GenClass::BetaMGammaJ { w1, j: o, w2, q },
        other => return Err(Error::Unsupported(format!("unknown generator class {other:?}"))),
    })
}

/// A random element of the rank-`(m-1)` elementary group.
pub fn random_small_t<R: Ring, G: rand::Rng + ?Sized>(setup: &QuadSetup<R>, len: usize, rng: &mut G) -> Result<Matrix<R::Elem>> {
    let small = setup.with_rank(setup.m() - 1);
    eval_word_matrix(&small, &random_word(&small, len, rng)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorReport {
    pub class: String,
    pub trials: usize,
    pub failures: usize,
}

/// Seeded random trials for one class.
pub fn run_factor_trials<R: Ring>(setup: &QuadSetup<R>, class: &str, trials: usize, seed: u64) -> Result<FactorReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let t_small = random_small_t(setup, 4, &mut rng)?;
        let case = ConjCase { t_small, class: random_class(setup, class, &mut rng)? };
        if !verify_factorization(setup, &case)? {
            failures += 1;
        }
    }
    Ok(FactorReport { class: class.to_string(), trials, failures })
}

/// Recognizes an indexed token as a member of one of the six classes.
pub fn class_of_token<R: Ring>(setup: &QuadSetup<R>, t: &Token<R::Elem>) -> Option<GenClass<R::Elem>> {
    use AtomKind::*;
    let m = setup.m();
    let pos = |a: &GenAtom<R::Elem>| a.tag.as_ref().map(|t| (a.kind, t.i, t.w.clone(), t.j.unwrap_or(1)));
    match t {
        Token::Atom(a) => match pos(a)? {
            (EA, i, w, q) if i == m => Some(GenClass::AlphaM { w, q }),
            (EBstar, i, w, q) if i == m => Some(GenClass::BetaM { w, q }),
            _ => None,
        },
        Token::Commutator(x, y) => {
            let (Token::Atom(x), Token::Atom(y)) = (&**x, &**y) else {
                return None;
            };
            let ((k1, i1, w1, q1), (k2, i2, w2, q2)) = (pos(x)?, pos(y)?);
            if k1 == k2 && i1 == i2 {
                return None;
            }
            let q = (q1, q2);
            match (k1, k2) {
                (EA, EBstar) if i1 == m && i2 < m => Some(GenClass::AlphaMBetaK { w1, k: i2, w2, q }),
                (EA, EBstar) if i2 == m && i1 < m => Some(GenClass::AlphaIBetaM { i: i1, w1, w2, q }),
                (EA, EA) if i1 == m && i2 < m => Some(GenClass::AlphaMDeltaJ { w1, j: i2, w2, q }),
                (EBstar, EBstar) if i1 == m && i2 < m => Some(GenClass::BetaMGammaJ { w1, j: i2, w2, q }),
                _ => None,
            }
        }
        Token::Inverse(_) => None,
    }
}

/// `ρ₄ρ₃ · η · ρ₁ρ₂ = residual` with the residual fixing `x_m` and `f_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionTrace<T> {
    /// Corner reduction, in `G_m`.
    pub rho1: GenWord<T>,
    /// `E(x_m, y)` on the right, making the product fix `f_m`.
    pub rho2: GenWord<T>,
    /// The commutator part of `E(f_m, u)` on the left.
    pub rho3: GenWord<T>,
    /// The atom part of `E(f_m, u)` on the left.
    pub rho4: GenWord<T>,
    pub residual: Matrix<T>,
}

impl<T: Clone + PartialEq> ReductionTrace<T> {
    pub fn to_json<R: Ring<Elem = T>>(&self, ring: &R) -> Value {
        json!({
            "rho1": word_to_json(ring, &self.rho1),
            "rho2": word_to_json(ring, &self.rho2),
            "rho3": word_to_json(ring, &self.rho3),
            "rho4": word_to_json(ring, &self.rho4),
            "residual": self.residual.to_strings(ring),
        })
    }
}

/// Splits `E(f_m, u)` into commutators of the classes `[E_{α_{ij}}, E*_{β_{mk}}]`
/// and `[E*_{β_{mk}}, E*_{γ_{jl}}]`, and an atom `E*_{β_{mj}}`.
fn split_c<R: Ring>(setup: &QuadSetup<R>, u: &[R::Elem]) -> Result<(GenWord<R::Elem>, GenWord<R::Elem>)> {
    use AtomKind::*;
    let r = setup.ring();
    let (n, m) = (setup.n(), setup.m());
    let mut comms = GenWord::empty();
    for b in 1..m {
        let c = &u[setup.x_index(b)];
        if !r.is_zero(c) {
            // E(f_m, c x_b) = E(x_b, −c f_m)
            comms.push(pair_piece(setup, EA, b, EBstar, m, &r.neg(c))?);
        }
        let d = &u[setup.f_index(b)];
        if !r.is_zero(d) {
            comms.push(pair_piece(setup, EBstar, m, EBstar, b, d)?);
        }
    }
    let z: Vec<R::Elem> = u[..n].iter().map(|c| r.neg(c)).collect();
    let mut atom = GenWord::empty();
    if z.iter().any(|c| !r.is_zero(c)) {
        atom.push(Token::Atom(rank_one_atom(setup, EBstar, m, &z)?));
    }
    Ok((comms, atom))
}

/// Reduces an elementary `η`, given as a word, to a matrix fixing the last
/// hyperbolic pair.
pub fn reduce_to_smaller<R: Ring>(setup: &QuadSetup<R>, eta: &GenWord<R::Elem>) -> Result<ReductionTrace<R::Elem>> {
    reduce_matrix_to_smaller(setup, &eval_word_matrix(setup, eta)?)
}

pub fn reduce_matrix_to_smaller<R: Ring>(setup: &QuadSetup<R>, eta: &Matrix<R::Elem>) -> Result<ReductionTrace<R::Elem>> {
    let r = setup.ring();
    let m = setup.m();
    let (xm, fm) = (setup.x_index(m), setup.f_index(m));
    let rho1 = reduce_corner(setup, eta)?.word();
    let sigma = eta.mul(r, &eval_word_matrix(setup, &rho1)?);
    // ⟨x_m, σ⁻¹f_m⟩ = σ[x_m, x_m] = 1, so σ⁻¹f_m = f_m + y − q(y)x_m.
    let v = setup.orth_inverse(&sigma).mul_vec(r, &basis_f(setup, m));
    if !r.is_one(&v[fm]) {
        return Err(Error::Unsolvable(format!("f_m coefficient of σ⁻¹f_m is {}", r.format(&v[fm]))));
    }
    let mut y = v;
    y[xm] = r.zero();
    y[fm] = r.zero();
    let rho2 = d_word(setup, &y)?;
    let sigma2 = sigma.mul(r, &eval_word_matrix(setup, &rho2)?);
    if sigma2.col(fm) != basis_f(setup, m) {
        return Err(Error::Unsolvable("right correction does not fix f_m".into()));
    }
    // σ₂x_m = x_m + z − q(z)f_m; E(f_m, −z) sends it back to x_m.
    let mut z = sigma2.col(xm);
    z[xm] = r.zero();
    z[fm] = r.zero();
    let u: Vec<R::Elem> = z.iter().map(|c| r.neg(c)).collect();
    let (rho3, rho4) = split_c(setup, &u)?;
    let left = eval_word_matrix(setup, &rho4)?.mul(r, &eval_word_matrix(setup, &rho3)?);
    let residual = left.mul(r, &sigma2);
    if !r.is_one(residual.get(fm, fm)) {
        return Err(Error::Unsolvable(format!("(f_m, f_m) entry of the residual is {}", r.format(residual.get(fm, fm)))));
    }
    if !setup.has_stabilized_pattern(&residual) {
        return Err(Error::Unsolvable("residual does not fix the last hyperbolic pair".into()));
    }
    debug_assert_eq!(residual.col(xm), basis_x(setup, m));
    Ok(ReductionTrace { rho1, rho2, rho3, rho4, residual })
}

/// An elementary word for `η⁻¹ g η`, built from the trace of `η` and the
/// factorizations of the conjugates by the residual. `g` must belong to
/// one of the six classes.
pub fn normality_witness<R: Ring>(
    setup: &QuadSetup<R>,
    trace: &ReductionTrace<R::Elem>,
    g: &Token<R::Elem>,
) -> Result<GenWord<R::Elem>> {
    let r = setup.ring();
    if class_of_token(setup, g).is_none() {
        return Err(Error::IndexConstraint("generator does not carry the last hyperbolic index".into()));
    }
    // η = ρ₃⁻¹ρ₄⁻¹ ρ ρ₂⁻¹ρ₁⁻¹, so η⁻¹gη = ρ₁ρ₂ · ρ⁻¹ (ρ₄ρ₃ g ρ₃⁻¹ρ₄⁻¹) ρ · ρ₂⁻¹ρ₁⁻¹.
    let left = trace.rho4.clone().concat(trace.rho3.clone());
    let inner = left.clone().concat(GenWord::single(g.clone())).concat(piece_inverse(r, &left));
    let t_small = setup.destabilize_matrix(&trace.residual)?;
    let mut conj = GenWord::empty();
    for t in &inner.tokens {
        let class = class_of_token(setup, t)
            .ok_or_else(|| Error::Unsolvable("conjugated token left the six classes".into()))?;
        conj.extend(conjugate_factorization(setup, &ConjCase { t_small: t_small.clone(), class })?);
    }
    let right = trace.rho1.clone().concat(trace.rho2.clone());
    Ok(right.clone().concat(conj).concat(right.inverse()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{Rationals, ZMod};

    #[test]
    fn identity_conjugation_is_generator() {
        let r = ZMod::new(7).unwrap();
        let s = QuadSetup::standard(r, 1, 3).unwrap();
        let small = s.with_rank(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for name in CLASS_NAMES {
            let class = random_class(&s, name, &mut rng).unwrap();
            let case = ConjCase { t_small: small.identity(), class: class.clone() };
            let w = conjugate_factorization(&s, &case).unwrap();
            let g = eval_token(&s, &class_token(&s, &class).unwrap()).unwrap();
            assert_eq!(eval_word_matrix(&s, &w).unwrap(), g, "{name}");
        }
    }

    #[test]
    fn all_classes_factor() {
        let r = ZMod::new(7).unwrap();
        for (n, m) in [(1, 2), (2, 2), (1, 3)] {
            let s = QuadSetup::standard(r, n, m).unwrap();
            for (k, name) in CLASS_NAMES.iter().enumerate() {
                let rep = run_factor_trials(&s, name, 20, k as u64).unwrap();
                assert_eq!(rep.failures, 0, "{name} at (n,m)=({n},{m})");
            }
        }
    }

    #[test]
    fn rational_factorizations() {
        let s = QuadSetup::standard(Rationals, 2, 2).unwrap();
        for (k, name) in CLASS_NAMES.iter().enumerate() {
            let rep = run_factor_trials(&s, name, 5, 50 + k as u64).unwrap();
            assert_eq!(rep.failures, 0, "{name}");
        }
    }

    #[test]
    fn index_checks() {
        let r = ZMod::new(5).unwrap();
        let s = QuadSetup::standard(r, 1, 2).unwrap();
        let bad = GenClass::AlphaMBetaK { w1: vec![1], k: 2, w2: vec![1], q: (1, 1) };
        assert!(class_token(&s, &bad).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(random_class(&s, "nope", &mut rng).is_err());
    }

    #[test]
    fn reduction_of_identity_is_empty() {
        let s = QuadSetup::standard(ZMod::new(9).unwrap(), 1, 2).unwrap();
        let tr = reduce_to_smaller(&s, &GenWord::empty()).unwrap();
        assert!(tr.rho1.is_empty() && tr.rho2.is_empty() && tr.rho3.is_empty() && tr.rho4.is_empty());
        assert!(tr.residual.is_identity(s.ring()));
    }

    fn check_trace<R: Ring>(s: &QuadSetup<R>, eta: &GenWord<R::Elem>) -> ReductionTrace<R::Elem> {
        let r = s.ring();
        let tr = reduce_to_smaller(s, eta).unwrap();
        let ev = |w: &GenWord<R::Elem>| eval_word_matrix(s, w).unwrap();
        let prod = ev(&tr.rho4).mul(r, &ev(&tr.rho3)).mul(r, &ev(eta)).mul(r, &ev(&tr.rho1)).mul(r, &ev(&tr.rho2));
        assert_eq!(prod, tr.residual);
        assert!(s.is_orthogonal(&tr.residual).unwrap());
        assert!(s.has_stabilized_pattern(&tr.residual));
        tr
    }

    #[test]
    fn random_reductions() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (p, n, m) in [(9, 1, 2), (3, 2, 3), (5, 1, 3), (15, 1, 2)] {
            let s = QuadSetup::standard(ZMod::new(p).unwrap(), n, m).unwrap();
            for _ in 0..15 {
                check_trace(&s, &random_word(&s, 6, &mut rng).unwrap());
            }
        }
        let s = QuadSetup::standard(Rationals, 1, 2).unwrap();
        for _ in 0..5 {
            check_trace(&s, &random_word(&s, 5, &mut rng).unwrap());
        }
    }

    #[test]
    fn witnesses_reproduce_conjugates() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (p, n, m) in [(3, 1, 2), (7, 1, 3), (5, 2, 2)] {
            let s = QuadSetup::standard(ZMod::new(p).unwrap(), n, m).unwrap();
            let r = *s.ring();
            for k in 0..12 {
                let eta = random_word(&s, 6, &mut rng).unwrap();
                let tr = check_trace(&s, &eta);
                let class = random_class(&s, CLASS_NAMES[k % 6], &mut rng).unwrap();
                let g = class_token(&s, &class).unwrap();
                assert_eq!(class_of_token(&s, &g), Some(class));
                let w = normality_witness(&s, &tr, &g).unwrap();
                let e = eval_word_matrix(&s, &eta).unwrap();
                let want = s.orth_inverse(&e).mul(&r, &eval_token(&s, &g).unwrap()).mul(&r, &e);
                assert_eq!(eval_word_matrix(&s, &w).unwrap(), want);
            }
        }
    }
}
