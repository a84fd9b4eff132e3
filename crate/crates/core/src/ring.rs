//! Exact commutative rings with 2 invertible.
//!
//! Two concrete rings are provided: the rationals (arbitrary precision) and
//! `Z/nZ` for odd `n >= 3`. All matrix and group code is generic over the
//! [`Ring`] trait; the ring value carries whatever context the elements need
//! (the modulus, for residues), so elements themselves stay plain data.

use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// A commutative ring with identity, exact arithmetic and 2 a unit.
pub trait Ring: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {
    type Elem: Clone + PartialEq + Eq + Hash + fmt::Debug + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_i64(&self, v: i64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;

    /// Inverse of `a` when `a` is a unit.
    fn unit_inverse(&self, a: &Self::Elem) -> Option<Self::Elem>;

    /// A quotient `q` such that `b - q*a` is strictly "smaller" than `a`
    /// (integer remainder for residues, exactly zero over a field).
    /// `a` must be nonzero.
    fn euclid_quotient(&self, b: &Self::Elem, a: &Self::Elem) -> Self::Elem;

    /// Decides whether the entries generate the unit ideal.
    fn generates_unit_ideal(&self, v: &[Self::Elem]) -> bool;

    /// All elements, for finite rings.
    fn elements(&self) -> Option<Vec<Self::Elem>>;

    /// A random element. For infinite rings, a small-height sample.
    fn random<G: Rng + ?Sized>(&self, rng: &mut G) -> Self::Elem;

    fn format(&self, a: &Self::Elem) -> String;
    fn parse_elem(&self, s: &str) -> Result<Self::Elem>;
    fn spec(&self) -> RingSpec;

    fn is_one(&self, a: &Self::Elem) -> bool {
        *a == self.one()
    }

    fn is_unit(&self, a: &Self::Elem) -> bool {
        self.unit_inverse(a).is_some()
    }

    fn half(&self) -> Self::Elem {
        self.unit_inverse(&self.from_i64(2))
            .expect("2 is a unit in every admitted ring")
    }

    /// Dot product of two equal-length slices.
    fn dot(&self, a: &[Self::Elem], b: &[Self::Elem]) -> Self::Elem {
        a.iter()
            .zip(b)
            .fold(self.zero(), |acc, (x, y)| self.add(&acc, &self.mul(x, y)))
    }
}

/// The rationals with arbitrary-precision numerators and denominators.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Rationals;

/// Residues modulo an odd modulus `n >= 3`, stored reduced in `[0, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ZMod {
    modulus: u64,
}

impl ZMod {
    pub fn new(modulus: u64) -> Result<Self> {
        if modulus < 3 {
            return Err(Error::InvalidRing(format!(
                "modulus {modulus} must be at least 3"
            )));
        }
        if modulus % 2 == 0 {
            return Err(Error::InvalidRing(format!(
                "2 not invertible modulo {modulus}"
            )));
        }
        if modulus > u32::MAX as u64 {
            return Err(Error::InvalidRing(format!("modulus {modulus} too large")));
        }
        Ok(Self { modulus })
    }

    /// Any modulus `n >= 2`, including even ones. Suitable for the
    /// unimodularity and stable-range routines only: [`Ring::half`] panics
    /// when 2 is not a unit.
    pub fn new_unrestricted(modulus: u64) -> Result<Self> {
        if !(2..=u32::MAX as u64).contains(&modulus) {
            return Err(Error::InvalidRing(format!("modulus {modulus} out of range")));
        }
        Ok(Self { modulus })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    fn reduce_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.modulus as i64) as u64
    }
}

impl Ring for ZMod {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn from_i64(&self, v: i64) -> u64 {
        self.reduce_i64(v)
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        (a + b) % self.modulus
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        (a + self.modulus - b) % self.modulus
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        a * b % self.modulus
    }
    fn neg(&self, a: &u64) -> u64 {
        (self.modulus - a) % self.modulus
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }

    fn unit_inverse(&self, a: &u64) -> Option<u64> {
        let egcd = (*a as i64).extended_gcd(&(self.modulus as i64));
        (egcd.gcd == 1).then(|| self.reduce_i64(egcd.x))
    }

    fn euclid_quotient(&self, b: &u64, a: &u64) -> u64 {
        b / a
    }

    fn generates_unit_ideal(&self, v: &[u64]) -> bool {
        v.iter().fold(self.modulus, |g, x| g.gcd(x)) == 1
    }

    fn elements(&self) -> Option<Vec<u64>> {
        Some((0..self.modulus).collect())
    }

    fn random<G: Rng + ?Sized>(&self, rng: &mut G) -> u64 {
        rng.gen_range(0..self.modulus)
    }

    fn format(&self, a: &u64) -> String {
        a.to_string()
    }

    fn parse_elem(&self, s: &str) -> Result<u64> {
        let v: i64 = s
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad residue {s:?}")))?;
        Ok(self.reduce_i64(v))
    }

    fn spec(&self) -> RingSpec {
        RingSpec::Modular(self.modulus)
    }
}

impl Ring for Rationals {
    type Elem = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn from_i64(&self, v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }

    fn unit_inverse(&self, a: &BigRational) -> Option<BigRational> {
        (!a.is_zero()).then(|| a.recip())
    }

    fn euclid_quotient(&self, b: &BigRational, a: &BigRational) -> BigRational {
        b / a
    }

    fn generates_unit_ideal(&self, v: &[BigRational]) -> bool {
        v.iter().any(|x| !x.is_zero())
    }

    fn elements(&self) -> Option<Vec<BigRational>> {
        None
    }

    fn random<G: Rng + ?Sized>(&self, rng: &mut G) -> BigRational {
        let num: i64 = rng.gen_range(-3..=3);
        let den: i64 = rng.gen_range(1..=3);
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn format(&self, a: &BigRational) -> String {
        if a.is_integer() {
            a.numer().to_string()
        } else {
            format!("{}/{}", a.numer(), a.denom())
        }
    }

    fn parse_elem(&self, s: &str) -> Result<BigRational> {
        let s = s.trim();
        let bad = || Error::Parse(format!("bad rational {s:?}"));
        match s.split_once('/') {
            Some((p, q)) => {
                let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
                let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
                if q.is_zero() {
                    return Err(bad());
                }
                Ok(BigRational::new(p, q))
            }
            None => Ok(BigRational::from_integer(
                BigInt::from_str(s).map_err(|_| bad())?,
            )),
        }
    }

    fn spec(&self) -> RingSpec {
        RingSpec::Rationals
    }
}

/// Runtime description of a ring, as spelled on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RingSpec {
    Rationals,
    Modular(u64),
}

impl RingSpec {
    pub fn validate(self) -> Result<Self> {
        if let RingSpec::Modular(n) = self {
            ZMod::new(n)?;
        }
        Ok(self)
    }
}

impl fmt::Display for RingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingSpec::Rationals => write!(f, "rationals"),
            RingSpec::Modular(n) => write!(f, "zmod:{n}"),
        }
    }
}

impl FromStr for RingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "rationals" || s == "Q" {
            return Ok(RingSpec::Rationals);
        }
        let n = s
            .strip_prefix("zmod:")
            .ok_or_else(|| Error::InvalidRing(format!("unknown ring {s:?}")))?;
        let n: u64 = n
            .parse()
            .map_err(|_| Error::InvalidRing(format!("bad modulus {n:?}")))?;
        RingSpec::Modular(n).validate()
    }
}

/// `b` such that `(v_1 + v_{l+1} b_1, ..., v_l + v_{l+1} b_l)` is unimodular.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StableRangeWitness<T> {
    pub b: Vec<T>,
}

impl<T: Clone> StableRangeWitness<T> {
    /// The shortened vector obtained by applying the witness to `v`.
    pub fn apply<R: Ring<Elem = T>>(&self, ring: &R, v: &[T]) -> Vec<T> {
        let last = &v[self.b.len()];
        v.iter()
            .zip(&self.b)
            .map(|(a, b)| ring.add(a, &ring.mul(last, b)))
            .collect()
    }
}

pub fn is_unimodular<R: Ring>(ring: &R, v: &[R::Elem]) -> Result<bool> {
    if v.is_empty() {
        return Err(Error::EmptyVector);
    }
    Ok(ring.generates_unit_ideal(v))
}

/// Finds a stable-range witness for a unimodular vector of length `l + 1`.
///
/// Finite rings are searched exhaustively in lexicographic order, so the
/// witness returned is the smallest one.
pub fn stable_range_witness<R: Ring>(
    ring: &R,
    v: &[R::Elem],
    l: usize,
) -> Result<StableRangeWitness<R::Elem>> {
    if l == 0 || v.len() != l + 1 {
        return Err(Error::Dimension(format!(
            "expected a vector of length {}, got {}",
            l + 1,
            v.len()
        )));
    }
    if !is_unimodular(ring, v)? {
        return Err(Error::NotUnimodular);
    }
    let check = |b: &[R::Elem]| {
        let w = StableRangeWitness { b: b.to_vec() };
        ring.generates_unit_ideal(&w.apply(ring, v))
    };
    match ring.elements() {
        None => {
            let mut b = vec![ring.zero(); l];
            if v[..l].iter().all(|x| ring.is_zero(x)) {
                b[0] = ring.one();
            }
            if check(&b) {
                Ok(StableRangeWitness { b })
            } else {
                Err(Error::NoWitness)
            }
        }
        Some(elems) => {
            let mut idx = vec![0usize; l];
            loop {
                let b: Vec<R::Elem> = idx.iter().map(|&i| elems[i].clone()).collect();
                if check(&b) {
                    return Ok(StableRangeWitness { b });
                }
                // odometer, last coordinate fastest
                let mut k = l;
                loop {
                    if k == 0 {
                        return Err(Error::NoWitness);
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < elems.len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        }
    }
}

/// `I + scalar * e_row e_col^t`, acting on row vectors from the right:
/// column `col` gains `scalar` times column `row`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementaryOp<T> {
    pub row: usize,
    pub col: usize,
    pub scalar: T,
}

impl<T: Clone> ElementaryOp<T> {
    pub fn apply_right<R: Ring<Elem = T>>(&self, ring: &R, v: &mut [T]) {
        let add = ring.mul(&v[self.row], &self.scalar);
        v[self.col] = ring.add(&v[self.col], &add);
    }
}

/// Elementary column operations taking a unimodular row vector to
/// `(0, ..., 0, 1)`.
///
/// Entries are folded into position 0 by a Euclidean exchange (integer
/// remainders for residues, a single division over a field), lowest index
/// first; the resulting unit pivot is then moved to the last slot.
pub fn elementary_row_reduce<R: Ring>(ring: &R, v: &[R::Elem]) -> Result<Vec<ElementaryOp<R::Elem>>> {
    let m = v.len();
    if m < 2 {
        return Err(Error::Dimension("row reduction needs length >= 2".into()));
    }
    if !is_unimodular(ring, v)? {
        return Err(Error::NotUnimodular);
    }
    let mut ops = Vec::new();
    let mut cur = v.to_vec();
    let target = {
        let mut t = vec![ring.zero(); m];
        t[m - 1] = ring.one();
        t
    };
    if cur == target {
        return Ok(ops);
    }
    let push = |ops: &mut Vec<ElementaryOp<R::Elem>>, cur: &mut Vec<R::Elem>, row, col, s: R::Elem| {
        let op = ElementaryOp { row, col, scalar: s };
        op.apply_right(ring, cur);
        ops.push(op);
    };
    for k in 1..m {
        loop {
            if ring.is_zero(&cur[k]) {
                break;
            }
            if ring.is_zero(&cur[0]) {
                push(&mut ops, &mut cur, k, 0, ring.one());
                continue;
            }
            let q = ring.euclid_quotient(&cur[k], &cur[0]);
            push(&mut ops, &mut cur, 0, k, ring.neg(&q));
            if ring.is_zero(&cur[k]) {
                break;
            }
            let q = ring.euclid_quotient(&cur[0], &cur[k]);
            push(&mut ops, &mut cur, k, 0, ring.neg(&q));
        }
    }
    let pivot = cur[0].clone();
    let inv = ring.unit_inverse(&pivot).ok_or(Error::NoWitness)?;
    push(&mut ops, &mut cur, 0, m - 1, inv);
    push(&mut ops, &mut cur, m - 1, 0, ring.neg(&pivot));
    debug_assert_eq!(cur, target);
    Ok(ops)
}

/// Converts a rational with small parts to `i64` pieces, mostly for display.
pub fn rational_parts(q: &BigRational) -> Option<(i64, i64)> {
    Some((q.numer().to_i64()?, q.denom().abs().to_i64()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(n: u64) -> ZMod {
        ZMod::new(n).unwrap()
    }

    #[test]
    fn unimodular_examples() {
        let r = z(15);
        assert!(is_unimodular(&r, &[1, 0, 0]).unwrap());
        assert!(is_unimodular(&r, &[3, 5]).unwrap());
        assert!(!is_unimodular(&r, &[3, 6]).unwrap());
        assert_eq!(is_unimodular(&r, &[]), Err(Error::EmptyVector));
    }

    #[test]
    fn unimodular_matches_brute_force_over_z15() {
        let r = z(15);
        for a in 0..15u64 {
            for b in 0..15u64 {
                let brute = (0..15u64)
                    .any(|u| (0..15u64).any(|v| (a * u + b * v) % 15 == 1));
                assert_eq!(is_unimodular(&r, &[a, b]).unwrap(), brute, "({a},{b})");
            }
        }
    }

    #[test]
    fn witness_examples() {
        let r6 = ZMod::new_unrestricted(6).unwrap();
        assert_eq!(stable_range_witness(&r6, &[2, 3], 1).unwrap().b, vec![1]);
        assert_eq!(stable_range_witness(&r6, &[2, 2], 1), Err(Error::NotUnimodular));
        let r9 = z(9);
        assert_eq!(stable_range_witness(&r9, &[1, 0], 1).unwrap().b, vec![0]);
        let r15 = z(15);
        let w = stable_range_witness(&r15, &[3, 5], 1).unwrap();
        assert!(r15.is_unit(&w.apply(&r15, &[3, 5])[0]));
        assert_eq!(
            stable_range_witness(&r15, &[3, 6], 1),
            Err(Error::NotUnimodular)
        );
    }

    #[test]
    fn even_modulus_rejected() {
        assert!(ZMod::new(4).is_err());
        assert!(ZMod::new(6).is_err());
        assert!(ZMod::new(1).is_err());
        assert!("zmod:4".parse::<RingSpec>().is_err());
        assert_eq!("zmod:9".parse::<RingSpec>().unwrap(), RingSpec::Modular(9));
        assert_eq!("rationals".parse::<RingSpec>().unwrap(), RingSpec::Rationals);
    }

    #[test]
    fn rational_witness() {
        let q = Rationals;
        let v = vec![q.zero(), q.from_i64(3)];
        let w = stable_range_witness(&q, &v, 1).unwrap();
        assert_eq!(w.b, vec![q.one()]);
        let v = vec![q.from_i64(2), q.from_i64(3)];
        assert_eq!(stable_range_witness(&q, &v, 1).unwrap().b, vec![q.zero()]);
    }

    fn reduce_and_check<R: Ring>(ring: &R, v: &[R::Elem]) -> usize {
        let ops = elementary_row_reduce(ring, v).unwrap();
        let mut cur = v.to_vec();
        for op in &ops {
            assert_ne!(op.row, op.col);
            op.apply_right(ring, &mut cur);
        }
        let mut target = vec![ring.zero(); v.len()];
        target[v.len() - 1] = ring.one();
        assert_eq!(cur, target);
        ops.len()
    }

    #[test]
    fn row_reduce_examples() {
        let r5 = z(5);
        assert_eq!(reduce_and_check(&r5, &[0, 1]), 0);
        let ops = elementary_row_reduce(&r5, &[1, 0]).unwrap();
        assert_eq!(
            ops,
            vec![
                ElementaryOp { row: 0, col: 1, scalar: 1 },
                ElementaryOp { row: 1, col: 0, scalar: 4 },
            ]
        );
        reduce_and_check(&r5, &[2, 3]);
        assert_eq!(elementary_row_reduce(&z(9), &[3, 6]), Err(Error::NotUnimodular));
    }

    #[test]
    fn row_reduce_exhaustive_small() {
        let r = z(9);
        for a in 0..9u64 {
            for b in 0..9u64 {
                for c in 0..9u64 {
                    let v = [a, b, c];
                    if r.generates_unit_ideal(&v) {
                        reduce_and_check(&r, &v);
                    }
                }
            }
        }
        let q = Rationals;
        let v = vec![q.from_i64(0), q.parse_elem("2/3").unwrap(), q.from_i64(0)];
        reduce_and_check(&q, &v);
    }

    #[test]
    fn witness_exists_for_all_unimodular_pairs() {
        for n in [3u64, 5, 7, 9, 15, 21] {
            let r = z(n);
            for a in 0..n {
                for b in 0..n {
                    if r.generates_unit_ideal(&[a, b]) {
                        let w = stable_range_witness(&r, &[a, b], 1).unwrap();
                        assert!(r.is_unit(&w.apply(&r, &[a, b])[0]));
                    }
                }
            }
        }
    }

    #[test]
    fn rational_formatting() {
        let q = Rationals;
        let x = q.parse_elem("-6/4").unwrap();
        assert_eq!(q.format(&x), "-3/2");
        assert_eq!(q.format(&q.from_i64(5)), "5");
        assert!(q.parse_elem("1/0").is_err());
    }
}
