//! Exhaustive enumeration of orthogonal and elementary groups over small
//! modular rings, normality verdicts, coset spaces and stability maps.
//!
//! Matrices are stored row-major as bytes, so the modulus must be below 256.

use std::collections::HashSet;

use indexmap::IndexSet;
use rand::Rng;
use serde_json::{json, Value};

use crate::eichler::pair_piece;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::quadspace::QuadSetup;
use crate::ring::{Ring, ZMod};
use crate::transvect::{eval_atom_matrix, eval_token, rank_one_atom, AtomKind, Token};

pub const DEFAULT_BUDGET: usize = 2_000_000;

/// The enumeration budget, overridden by `DSER_BUDGET`.
pub fn budget_from_env() -> usize {
    std::env::var("DSER_BUDGET").ok().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_BUDGET)
}

pub type Packed = Vec<u8>;

/// Byte-matrix arithmetic for one setup.
#[derive(Clone, Debug)]
pub struct Packer {
    pub d: usize,
    pub p: u32,
    psi: Packed,
    psi_inv: Packed,
}

impl Packer {
    pub fn new(setup: &QuadSetup<ZMod>) -> Result<Self> {
        let p = setup.ring().modulus();
        if p > 255 {
            return Err(Error::Unsupported(format!("modulus {p} is too large for enumeration")));
        }
        let d = setup.dim();
        let psi_inv = setup
            .psi()
            .inverse(setup.ring())
            .ok_or_else(|| Error::DegenerateForm("Ψ is not invertible".into()))?;
        let mut pk = Self { d, p: p as u32, psi: Vec::new(), psi_inv: Vec::new() };
        pk.psi = pk.pack(setup.psi());
        pk.psi_inv = pk.pack(&psi_inv);
        Ok(pk)
    }

    pub fn pack(&self, m: &Matrix<u64>) -> Packed {
        m.data().iter().map(|&x| x as u8).collect()
    }

    pub fn unpack(&self, a: &[u8]) -> Matrix<u64> {
        Matrix::from_fn(self.d, self.d, |i, j| a[i * self.d + j] as u64)
    }

    pub fn identity(&self) -> Packed {
        let mut v = vec![0u8; self.d * self.d];
        for i in 0..self.d {
            v[i * self.d + i] = 1;
        }
        v
    }

    pub fn mul(&self, a: &[u8], b: &[u8]) -> Packed {
        let d = self.d;
        let mut out = vec![0u8; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0u32;
                for k in 0..d {
                    acc += a[i * d + k] as u32 * b[k * d + j] as u32;
                }
                out[i * d + j] = (acc % self.p) as u8;
            }
        }
        out
    }

    fn transpose(&self, a: &[u8]) -> Packed {
        let d = self.d;
        (0..d * d).map(|k| a[(k % d) * d + k / d]).collect()
    }

    /// `Ψ⁻¹ aᵗ Ψ`, the inverse of an orthogonal matrix.
    pub fn inv(&self, a: &[u8]) -> Packed {
        self.mul(&self.mul(&self.psi_inv, &self.transpose(a)), &self.psi)
    }

    pub fn is_orthogonal(&self, a: &[u8]) -> bool {
        self.mul(&self.mul(&self.transpose(a), &self.psi), a) == self.psi
    }

    /// `a · v` for a column vector.
    pub fn apply(&self, a: &[u8], v: &[u8]) -> Packed {
        let d = self.d;
        (0..d)
            .map(|i| ((0..d).map(|k| a[i * d + k] as u32 * v[k] as u32).sum::<u32>() % self.p) as u8)
            .collect()
    }
}

/// Closure of `gens` under right multiplication, breadth first from the
/// identity. For a finite group this is the generated subgroup.
pub fn closure(pk: &Packer, gens: &[Packed], budget: usize) -> Result<IndexSet<Packed>> {
    let mut set = IndexSet::new();
    set.insert(pk.identity());
    let mut idx = 0;
    while idx < set.len() {
        let x = set.get_index(idx).expect("in range").clone();
        for g in gens {
            set.insert(pk.mul(&x, g));
            if set.len() > budget {
                return Err(Error::BudgetExceeded { budget, reached: set.len() });
            }
        }
        idx += 1;
    }
    Ok(set)
}

/// All vectors of `A^len` in lexicographic order.
fn all_vectors(p: u64, len: usize) -> impl Iterator<Item = Vec<u64>> {
    let total = p.pow(len as u32);
    (0..total).map(move |mut k| {
        let mut v = vec![0u64; len];
        for slot in v.iter_mut().rev() {
            *slot = k % p;
            k /= p;
        }
        v
    })
}

/// Orthogonal matrices of a Gram matrix by scanning every candidate.
fn scan_orthogonal(gram: &Matrix<u64>, ring: &ZMod, budget: usize) -> Result<Vec<Matrix<u64>>> {
    let d = gram.rows();
    let p = ring.modulus();
    let candidates = (p as f64).powi((d * d) as i32);
    if candidates > 50.0 * budget as f64 {
        return Err(Error::BudgetExceeded { budget, reached: 0 });
    }
    let mut out = Vec::new();
    for v in all_vectors(p, d * d) {
        let m = Matrix::from_vec(d, d, v)?;
        if m.transpose().mul(ring, gram).mul(ring, &m) == *gram {
            out.push(m);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitAudit {
    /// Number of hyperbolic pairs `(e, f)` in the whole space.
    pub hyperbolic_pairs: usize,
    /// Order of the orthogonal group one level down.
    pub lower_order: usize,
    pub orbit: usize,
    pub stabilizer: usize,
    /// `|census| = pairs · |O_{m−1}|` with a complete lower level, which
    /// bounds `|O|` from above.
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CensusSource {
    DirectScan,
    Closure { generators: usize, audit: Option<OrbitAudit> },
}

#[derive(Clone, Debug)]
pub struct GroupCensus {
    pub setup: QuadSetup<ZMod>,
    pub packer: Packer,
    elements: IndexSet<Packed>,
    generators: Vec<Packed>,
    pub description: String,
    pub source: CensusSource,
}

impl GroupCensus {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, m: &Matrix<u64>) -> bool {
        self.elements.contains(&self.packer.pack(m))
    }

    pub fn contains_packed(&self, a: &[u8]) -> bool {
        self.elements.contains(a)
    }

    pub fn index_of(&self, a: &[u8]) -> Option<usize> {
        self.elements.get_index_of(a)
    }

    pub fn get(&self, k: usize) -> Option<&Packed> {
        self.elements.get_index(k)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Packed> {
        self.elements.iter()
    }

    pub fn generators(&self) -> &[Packed] {
        &self.generators
    }

    /// Whether the census is known to be the whole group it describes.
    pub fn is_complete(&self) -> bool {
        match &self.source {
            CensusSource::DirectScan => true,
            CensusSource::Closure { audit, .. } => audit.as_ref().is_none_or(|a| a.complete),
        }
    }

    pub fn random_element<G: Rng + ?Sized>(&self, rng: &mut G) -> &Packed {
        &self.elements[rng.gen_range(0..self.len())]
    }

    /// Spot check: for random pairs, products and inverses stay inside.
    pub fn spot_check_closure<G: Rng + ?Sized>(&self, pairs: usize, rng: &mut G) -> bool {
        (0..pairs).all(|_| {
            let (x, y) = (self.random_element(rng), self.random_element(rng));
            self.contains_packed(&self.packer.mul(x, y)) && self.contains_packed(&self.packer.inv(x))
        })
    }

    pub fn to_json(&self) -> Value {
        let source = match &self.source {
            CensusSource::DirectScan => json!({"kind": "direct-scan"}),
            CensusSource::Closure { generators, audit } => json!({
                "kind": "closure-of-seeds",
                "generators": generators,
                "audit": audit.as_ref().map(|a| json!({
                    "hyperbolic_pairs": a.hyperbolic_pairs,
                    "lower_order": a.lower_order,
                    "orbit": a.orbit,
                    "stabilizer": a.stabilizer,
                    "complete": a.complete,
                })),
            }),
        };
        json!({
            "description": self.description,
            "ring": self.setup.ring().spec().to_string(),
            "n": self.setup.n(),
            "m": self.setup.m(),
            "order": self.len(),
            "source": source,
        })
    }
}

/// Every indexed atom `E_{α_i}(w)`, `E*_{β_i}(w)` with `w ≠ 0`.
pub fn indexed_atoms(setup: &QuadSetup<ZMod>) -> Result<Vec<Matrix<u64>>> {
    let mut out = Vec::new();
    let p = setup.ring().modulus();
    for kind in [AtomKind::EA, AtomKind::EBstar] {
        for i in 1..=setup.m() {
            for w in all_vectors(p, setup.n()).filter(|w| w.iter().any(|&x| x != 0)) {
                out.push(eval_atom_matrix(setup, &rank_one_atom(setup, kind, i, &w)?)?);
            }
        }
    }
    Ok(out)
}

/// `e_i ↔ f_i`, `diag(u, u⁻¹)` on each hyperbolic pair, and the isometries
/// of `φ` on `Q`.
fn orthogonal_seeds(setup: &QuadSetup<ZMod>, budget: usize) -> Result<Vec<Matrix<u64>>> {
    let r = setup.ring();
    let n = setup.n();
    let mut out = Vec::new();
    for i in 1..=setup.m() {
        let (x, f) = (setup.x_index(i), setup.f_index(i));
        let mut swap = setup.identity();
        swap.set(x, x, 0);
        swap.set(f, f, 0);
        swap.set(x, f, 1);
        swap.set(f, x, 1);
        out.push(swap);
        for u in 2..r.modulus() {
            if let Some(ui) = r.unit_inverse(&u) {
                let mut s = setup.identity();
                s.set(x, x, u);
                s.set(f, f, ui);
                out.push(s);
            }
        }
    }
    for g in scan_orthogonal(setup.phi(), r, budget)? {
        let mut s = setup.identity();
        s.set_block(0, 0, &g);
        if !s.is_identity(r) {
            out.push(s);
        }
        debug_assert_eq!(g.rows(), n);
    }
    Ok(out)
}

fn census_from(
    setup: &QuadSetup<ZMod>,
    gens: Vec<Matrix<u64>>,
    budget: usize,
    description: &str,
) -> Result<GroupCensus> {
    let pk = Packer::new(setup)?;
    let mut seen = HashSet::new();
    let gens: Vec<Packed> = gens.iter().map(|g| pk.pack(g)).filter(|g| seen.insert(g.clone())).collect();
    let elements = closure(&pk, &gens, budget)?;
    Ok(GroupCensus {
        setup: setup.clone(),
        packer: pk,
        elements,
        source: CensusSource::Closure { generators: gens.len(), audit: None },
        generators: gens,
        description: description.into(),
    })
}

fn hyperbolic_pairs(setup: &QuadSetup<ZMod>) -> usize {
    let r = setup.ring();
    let vecs: Vec<Vec<u64>> = all_vectors(r.modulus(), setup.dim()).collect();
    let iso: Vec<&Vec<u64>> = vecs.iter().filter(|v| r.is_zero(&setup.q(v))).collect();
    iso.iter().map(|e| iso.iter().filter(|f| r.is_one(&setup.pair(e, f))).count()).sum()
}

/// The full orthogonal group, by direct scan in dimension ≤ 3 and otherwise
/// by closure of seeds followed by an orbit-stabilizer audit.
pub fn enumerate_orthogonal(setup: &QuadSetup<ZMod>, budget: usize) -> Result<GroupCensus> {
    let pk = Packer::new(setup)?;
    if setup.dim() <= 3 {
        let elements: IndexSet<Packed> =
            scan_orthogonal(setup.psi(), setup.ring(), budget)?.iter().map(|m| pk.pack(m)).collect();
        if elements.len() > budget {
            return Err(Error::BudgetExceeded { budget, reached: elements.len() });
        }
        let mut gens = orthogonal_seeds(setup, budget)?;
        gens.extend(indexed_atoms(setup)?);
        return Ok(GroupCensus {
            setup: setup.clone(),
            generators: gens.iter().map(|g| pk.pack(g)).collect(),
            packer: pk,
            elements,
            description: "orthogonal group".into(),
            source: CensusSource::DirectScan,
        });
    }
    let mut gens = indexed_atoms(setup)?;
    gens.extend(orthogonal_seeds(setup, budget)?);
    let mut census = census_from(setup, gens, budget, "orthogonal group")?;
    let audit = if setup.m() >= 1 {
        let lower_setup = setup.with_rank(setup.m() - 1);
        let (lower_order, lower_complete) = if setup.m() == 1 {
            (scan_orthogonal(setup.phi(), setup.ring(), budget)?.len(), true)
        } else {
            let lower = enumerate_orthogonal(&lower_setup, budget)?;
            (lower.len(), lower.is_complete())
        };
        let m = setup.m();
        let (x, f) = (pk.pack_vec(&setup.unit_vector(setup.x_index(m))), pk.pack_vec(&setup.unit_vector(setup.f_index(m))));
        let mut orbit = HashSet::new();
        let mut stabilizer = 0;
        for g in census.iter() {
            let (gx, gf) = (pk.apply(g, &x), pk.apply(g, &f));
            if gx == x && gf == f {
                stabilizer += 1;
            }
            orbit.insert((gx, gf));
        }
        let pairs = hyperbolic_pairs(setup);
        Some(OrbitAudit {
            hyperbolic_pairs: pairs,
            lower_order,
            orbit: orbit.len(),
            stabilizer,
            complete: lower_complete && census.len() == pairs * lower_order,
        })
    } else {
        None
    };
    if let CensusSource::Closure { audit: a, .. } = &mut census.source {
        *a = audit;
    }
    Ok(census)
}

impl Packer {
    fn pack_vec(&self, v: &[u64]) -> Packed {
        v.iter().map(|&x| x as u8).collect()
    }
}

/// The closure of all indexed atoms.
pub fn enumerate_elementary(setup: &QuadSetup<ZMod>, budget: usize) -> Result<GroupCensus> {
    census_from(setup, indexed_atoms(setup)?, budget, "elementary group")
}

/// The generators carrying index `m`: atoms at `m` and the commutators
/// `[E_{α_i}, E*_{β_m}]`, `[E_{α_m}, E*_{β_i}]`, `[E_{α_m}, E_{δ_i}]`,
/// `[E*_{β_i}, E*_{γ_m}]` for `i ≠ m`, over all parameters.
pub fn last_index_generators(setup: &QuadSetup<ZMod>) -> Result<Vec<Matrix<u64>>> {
    use AtomKind::*;
    let m = setup.m();
    let p = setup.ring().modulus();
    let nonzero: Vec<Vec<u64>> = all_vectors(p, setup.n()).filter(|w| w.iter().any(|&x| x != 0)).collect();
    let atom = |k, i, w: &[u64]| -> Result<Token<u64>> { Ok(Token::Atom(rank_one_atom(setup, k, i, w)?)) };
    let mut out = Vec::new();
    for k in [EA, EBstar] {
        for w in &nonzero {
            out.push(eval_token(setup, &atom(k, m, w)?)?);
        }
    }
    for i in (1..m).filter(|&i| i != m) {
        for w1 in &nonzero {
            for w2 in &nonzero {
                for (k1, i1, k2, i2) in [(EA, i, EBstar, m), (EA, m, EBstar, i), (EA, m, EA, i), (EBstar, i, EBstar, m)] {
                    out.push(eval_token(setup, &Token::comm(atom(k1, i1, w1)?, atom(k2, i2, w2)?))?);
                }
            }
        }
    }
    Ok(out)
}

/// Whether the generators carrying index `m` generate the whole elementary
/// group.
pub fn generator_closure_check(setup: &QuadSetup<ZMod>, budget: usize) -> Result<bool> {
    if setup.m() == 0 {
        return Err(Error::NothingToGenerate);
    }
    let full = enumerate_elementary(setup, budget)?;
    let part = census_from(setup, last_index_generators(setup)?, budget, "last-index subgroup")?;
    Ok(part.len() == full.len() && part.iter().all(|g| full.contains_packed(g)))
}

/// `true` iff `g h g⁻¹ ∈ EO` for every `g ∈ O` and every generator `h` of `EO`.
pub fn normality_verdict(o: &GroupCensus, eo: &GroupCensus) -> bool {
    let pk = &o.packer;
    o.iter().all(|g| {
        let gi = pk.inv(g);
        eo.generators().iter().all(|h| eo.contains_packed(&pk.mul(&pk.mul(g, h), &gi)))
    })
}

pub fn is_subgroup(o: &GroupCensus, eo: &GroupCensus) -> bool {
    eo.iter().all(|g| o.contains_packed(g))
}

/// Left cosets `g·EO` of `EO` in `O`.
#[derive(Clone, Debug)]
pub struct CosetSpace {
    pub representatives: Vec<Packed>,
    /// Coset number of each element of the ambient census, by position.
    coset_of: Vec<u32>,
    pub is_group: bool,
    pub ambient_order: usize,
    pub subgroup_order: usize,
}

impl CosetSpace {
    pub fn index(&self) -> usize {
        self.representatives.len()
    }

    pub fn coset(&self, o: &GroupCensus, g: &[u8]) -> Option<usize> {
        o.index_of(g).map(|k| self.coset_of[k] as usize)
    }

    /// For random pairs of cosets, the coset of a product does not depend
    /// on the representatives chosen.
    pub fn representative_independent<G: Rng + ?Sized>(
        &self,
        o: &GroupCensus,
        eo: &GroupCensus,
        samples: usize,
        rng: &mut G,
    ) -> bool {
        let pk = &o.packer;
        (0..samples).all(|_| {
            let (g1, g2) = (o.random_element(rng), o.random_element(rng));
            let (h1, h2) = (eo.random_element(rng), eo.random_element(rng));
            let a = self.coset(o, &pk.mul(g1, g2));
            let b = self.coset(o, &pk.mul(&pk.mul(g1, h1), &pk.mul(g2, h2)));
            a.is_some() && a == b
        })
    }
}

pub fn cosets(o: &GroupCensus, eo: &GroupCensus) -> Result<CosetSpace> {
    if !is_subgroup(o, eo) {
        return Err(Error::Unsupported("subgroup is not contained in the ambient census".into()));
    }
    let pk = &o.packer;
    let mut coset_of = vec![u32::MAX; o.len()];
    let mut reps = Vec::new();
    for (k, g) in o.iter().enumerate() {
        if coset_of[k] != u32::MAX {
            continue;
        }
        let id = reps.len() as u32;
        for h in eo.iter() {
            let idx = o.index_of(&pk.mul(g, h)).ok_or_else(|| Error::Unsupported("ambient census is not closed".into()))?;
            coset_of[idx] = id;
        }
        reps.push(g.clone());
    }
    debug_assert_eq!(reps.len() * eo.len(), o.len());
    Ok(CosetSpace {
        representatives: reps,
        coset_of,
        is_group: normality_verdict(o, eo),
        ambient_order: o.len(),
        subgroup_order: eo.len(),
    })
}

/// The comparison of `KO₁` at levels `r` and `r + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilityReport {
    pub levels: (usize, usize),
    pub orthogonal_orders: (usize, usize),
    pub elementary_orders: (usize, usize),
    pub ko_orders: (usize, usize),
    pub normal: (bool, bool),
    pub complete: (bool, bool),
    /// Every stabilized level-`r` orthogonal matrix lies in the level-`(r+1)` census.
    pub stabilized_contained: bool,
    /// Every coset at level `r + 1` meets the stabilized level-`r` group.
    pub surjective: bool,
    /// Coset products at level `r + 1` do not depend on representatives.
    pub representative_independent: bool,
}

impl StabilityReport {
    pub fn to_json(&self) -> Value {
        json!({
            "levels": [self.levels.0, self.levels.1],
            "orthogonal_orders": [self.orthogonal_orders.0, self.orthogonal_orders.1],
            "elementary_orders": [self.elementary_orders.0, self.elementary_orders.1],
            "ko_orders": [self.ko_orders.0, self.ko_orders.1],
            "normal": [self.normal.0, self.normal.1],
            "complete": [self.complete.0, self.complete.1],
            "stabilized_contained": self.stabilized_contained,
            "surjective": self.surjective,
            "representative_independent": self.representative_independent,
        })
    }
}

pub fn k1_stability_check<G: Rng + ?Sized>(
    low: (&GroupCensus, &GroupCensus),
    high: (&GroupCensus, &GroupCensus),
    samples: usize,
    rng: &mut G,
) -> Result<StabilityReport> {
    let (ls, hs) = (&low.0.setup, &high.0.setup);
    if ls.ring() != hs.ring() || ls.phi() != hs.phi() || hs.m() != ls.m() + 1 {
        return Err(Error::Unsupported("levels must share ring and form and differ by one".into()));
    }
    let cl = cosets(low.0, low.1)?;
    let ch = cosets(high.0, high.1)?;
    let mut hit = HashSet::new();
    let mut contained = true;
    for g in low.0.iter() {
        let st = hs.stabilize_matrix(&low.0.packer.unpack(g))?;
        match ch.coset(high.0, &high.0.packer.pack(&st)) {
            Some(c) => {
                hit.insert(c);
            }
            None => contained = false,
        }
    }
    Ok(StabilityReport {
        levels: (ls.m(), hs.m()),
        orthogonal_orders: (low.0.len(), high.0.len()),
        elementary_orders: (low.1.len(), high.1.len()),
        ko_orders: (cl.index(), ch.index()),
        normal: (cl.is_group, ch.is_group),
        complete: (low.0.is_complete(), high.0.is_complete()),
        stabilized_contained: contained,
        surjective: hit.len() == ch.index(),
        representative_independent: ch.representative_independent(high.0, high.1, samples, rng),
    })
}

/// Whether a matrix given over the setup's ring lies in the census.
pub fn member(census: &GroupCensus, m: &Matrix<u64>) -> bool {
    census.contains(m)
}

/// The subgroup generated by the listed generators of `G_m`.
pub fn enumerate_g(setup: &QuadSetup<ZMod>, budget: usize) -> Result<GroupCensus> {
    use AtomKind::*;
    let p = setup.ring().modulus();
    let m = setup.m();
    let mut gens = Vec::new();
    for i in 1..=m {
        for w in all_vectors(p, setup.n()).filter(|w| w.iter().any(|&x| x != 0)) {
            gens.push(eval_atom_matrix(setup, &rank_one_atom(setup, EBstar, i, &w)?)?);
        }
        for j in (1..=m).filter(|&j| j != i) {
            for lam in 1..p {
                gens.push(eval_token(setup, &pair_piece(setup, EA, i, EBstar, j, &lam)?)?);
                gens.push(eval_token(setup, &pair_piece(setup, EBstar, i, EBstar, j, &lam)?)?);
            }
        }
    }
    census_from(setup, gens, budget, "subgroup G")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z3(m: usize) -> QuadSetup<ZMod> {
        QuadSetup::standard(ZMod::new(3).unwrap(), 1, m).unwrap()
    }

    #[test]
    fn baseline_order_48() {
        let s = z3(1);
        let o = enumerate_orthogonal(&s, DEFAULT_BUDGET).unwrap();
        assert_eq!(o.len(), 48);
        assert_eq!(o.source, CensusSource::DirectScan);
        assert!(o.contains(&s.identity()));
        let eo = enumerate_elementary(&s, DEFAULT_BUDGET).unwrap();
        assert_eq!(48 % eo.len(), 0);
        assert!(is_subgroup(&o, &eo));
        assert!(o.iter().all(|g| o.packer.is_orthogonal(g)));
    }

    #[test]
    fn budget_is_enforced() {
        let s = z3(1);
        assert!(matches!(enumerate_elementary(&s, 2), Err(Error::BudgetExceeded { budget: 2, .. })));
    }

    #[test]
    fn generation_by_last_index() {
        assert!(generator_closure_check(&z3(1), DEFAULT_BUDGET).unwrap());
        assert!(generator_closure_check(&z3(2), DEFAULT_BUDGET).unwrap());
        assert_eq!(generator_closure_check(&z3(0), DEFAULT_BUDGET), Err(Error::NothingToGenerate));
    }

    #[test]
    fn trivial_verdicts() {
        let s = z3(1);
        let o = enumerate_orthogonal(&s, DEFAULT_BUDGET).unwrap();
        assert!(normality_verdict(&o, &o));
        let c = cosets(&o, &o).unwrap();
        assert_eq!(c.index(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(o.spot_check_closure(200, &mut rng));
    }

    #[test]
    fn level_two_over_z3() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (s1, s2) = (z3(1), z3(2));
        let o1 = enumerate_orthogonal(&s1, DEFAULT_BUDGET).unwrap();
        let e1 = enumerate_elementary(&s1, DEFAULT_BUDGET).unwrap();
        let o2 = enumerate_orthogonal(&s2, DEFAULT_BUDGET).unwrap();
        let e2 = enumerate_elementary(&s2, DEFAULT_BUDGET).unwrap();
        assert!(o2.is_complete(), "{:?}", o2.source);
        assert!(is_subgroup(&o2, &e2));
        assert!(o2.spot_check_closure(10_000, &mut rng));
        assert!(normality_verdict(&o2, &e2));
        let rep = k1_stability_check((&o1, &e1), (&o2, &e2), 500, &mut rng).unwrap();
        assert!(rep.surjective && rep.stabilized_contained && rep.representative_independent);
        assert!(rep.ko_orders.1 <= rep.ko_orders.0);
        eprintln!("{}", rep.to_json());
    }
}
