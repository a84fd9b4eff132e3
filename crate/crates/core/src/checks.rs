//! The acceptance suite: eight seeded, exact checks shared by the
//! `check-all` command and the acceptance test target.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::Result;
use crate::fdg::{fdg_decompose, reduce_corner, verify_fdg};
use crate::grouplab::{
    budget_from_env, cosets, enumerate_elementary, enumerate_orthogonal, is_subgroup, k1_stability_check,
    normality_verdict, CensusSource,
};
use crate::matrix::Matrix;
use crate::normalizer::{
    class_token, conjugate_factorization, normality_witness, random_class, random_word, reduce_to_smaller,
    run_factor_trials, ConjCase, CLASS_NAMES,
};
use crate::quadspace::QuadSetup;
use crate::relations::{mutation_survives, random_case, verify_relation, RelationId};
use crate::ring::{Rationals, Ring, ZMod};
use crate::transvect::{eval_atom_matrix, eval_token, eval_word_matrix, rank_one_atom, AtomKind, GenAtom};

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub elapsed: Duration,
    pub limit: Duration,
    pub detail: Value,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {} [{}] {} ({:.2}s, limit {}s)",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.limit.as_secs()
        )
    }

    pub fn to_json(&self) -> Value {
        json!({
            "id": self.id,
            "name": self.name,
            "passed": self.passed,
            "elapsed_ms": self.elapsed.as_millis() as u64,
            "limit_s": self.limit.as_secs(),
            "detail": self.detail,
        })
    }
}

fn timed(id: usize, name: &'static str, limit_s: u64, f: impl FnOnce() -> Result<(bool, Value)>) -> CriterionResult {
    let start = Instant::now();
    let (ok, detail) = match f() {
        Ok(x) => x,
        Err(e) => (false, json!({"error": e.to_string()})),
    };
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(limit_s);
    CriterionResult { id, name, passed: ok && elapsed <= limit, elapsed, limit, detail }
}

/// A random symmetric invertible Gram matrix of size `n`.
pub fn random_form<R: Ring, G: Rng + ?Sized>(ring: &R, n: usize, rng: &mut G) -> Matrix<R::Elem> {
    for _ in 0..200 {
        let mut phi = Matrix::zeros(ring, n, n);
        for i in 0..n {
            for j in i..n {
                let v = ring.random(rng);
                phi.set(i, j, v.clone());
                phi.set(j, i, v);
            }
        }
        if phi.inverse(ring).is_some() {
            return phi;
        }
    }
    Matrix::identity(ring, n)
}

fn orthogonality_trials<R: Ring>(ring: R, trials: usize, rng: &mut ChaCha8Rng) -> Result<usize> {
    let mut failures = 0;
    for k in 0..trials {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=4);
        let setup = QuadSetup::new(ring.clone(), m, random_form(&ring, n, rng))?;
        let kind = if k % 2 == 0 { AtomKind::EA } else { AtomKind::EBstar };
        let atom = if k % 4 < 2 {
            let w: Vec<R::Elem> = (0..n).map(|_| ring.random(rng)).collect();
            rank_one_atom(&setup, kind, rng.gen_range(1..=m), &w)?
        } else {
            let param = Matrix::from_fn(m, n, |_, _| ring.random(rng));
            GenAtom::general(kind, param)
        };
        if !setup.is_orthogonal(&eval_atom_matrix(&setup, &atom)?)? {
            failures += 1;
        }
    }
    Ok(failures)
}

/// 1000 random atoms per ring satisfy `EᵗΨE = Ψ`.
pub fn criterion_1(seed: u64) -> CriterionResult {
    timed(1, "generator orthogonality", 10, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = orthogonality_trials(Rationals, 1000, &mut rng)?;
        let z5 = orthogonality_trials(ZMod::new(5)?, 1000, &mut rng)?;
        let z9 = orthogonality_trials(ZMod::new(9)?, 1000, &mut rng)?;
        let failures = json!({"rationals": q, "zmod:5": z5, "zmod:9": z9});
        Ok((q + z5 + z9 == 0, json!({"trials_per_ring": 1000, "failures": failures})))
    })
}

fn relation_trials<R: Ring>(ring: R, trials: usize, rng: &mut ChaCha8Rng) -> Result<Value> {
    let sizes = [(1, 3), (2, 3), (1, 4), (2, 2), (3, 3)];
    let mut out = serde_json::Map::new();
    for id in RelationId::ALL {
        let admissible: Vec<_> = sizes.iter().filter(|s| s.1 >= id.min_rank()).collect();
        let mut failures = 0;
        for k in 0..trials {
            let (n, m) = *admissible[k % admissible.len()];
            let setup = QuadSetup::standard(ring.clone(), n, m)?;
            let case = random_case(&setup, id, rng)?;
            if !verify_relation(&setup, &case)? {
                failures += 1;
            }
        }
        let setup = QuadSetup::standard(ring.clone(), 1, 3)?;
        let mutation = mutation_survives(&setup, id, rng.gen(), 50)?;
        out.insert(id.name().into(), json!({"failures": failures, "mutation_survives": mutation}));
    }
    Ok(Value::Object(out))
}

fn relations_passed(v: &Value) -> bool {
    v.as_object().is_some_and(|o| {
        o.values().all(|r| r["failures"] == 0 && r["mutation_survives"] == json!(false))
    })
}

/// All ten relations hold on 100 cases per ring; corrupted variants fail.
pub fn criterion_2(seed: u64) -> CriterionResult {
    timed(2, "commutator relations", 60, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z5 = relation_trials(ZMod::new(5)?, 100, &mut rng)?;
        let z9 = relation_trials(ZMod::new(9)?, 100, &mut rng)?;
        let q = relation_trials(Rationals, 100, &mut rng)?;
        let ok = relations_passed(&z5) && relations_passed(&z9) && relations_passed(&q);
        Ok((ok, json!({"zmod:5": z5, "zmod:9": z9, "rationals": q})))
    })
}

/// The six conjugation factorizations on 100 trials each.
pub fn criterion_3(seed: u64) -> CriterionResult {
    timed(3, "conjugation factorizations", 120, || {
        let mut failures = 0;
        let mut runs = 0;
        for p in [5, 7] {
            for (n, m) in [(1, 2), (2, 2), (1, 3)] {
                let setup = QuadSetup::standard(ZMod::new(p)?, n, m)?;
                for (k, class) in CLASS_NAMES.iter().enumerate() {
                    let rep = run_factor_trials(&setup, class, 100, seed.wrapping_add((p * 100 + n as u64 * 10 + m as u64) * 6 + k as u64))?;
                    failures += rep.failures;
                    runs += rep.trials;
                }
            }
        }
        Ok((failures == 0, json!({"trials": runs, "failures": failures})))
    })
}

/// Corner reduction puts 1 at `(x_m, x_m)`.
pub fn criterion_4(seed: u64) -> CriterionResult {
    timed(4, "corner reduction", 60, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut failures = 0;
        let mut runs = 0;
        for p in [9, 3] {
            for (n, m) in [(1, 2), (2, 3)] {
                let setup = QuadSetup::standard(ZMod::new(p)?, n, m)?;
                let r = *setup.ring();
                let k = setup.x_index(m);
                for _ in 0..50 {
                    let sigma = eval_word_matrix(&setup, &random_word(&setup, 10, &mut rng)?)?;
                    let rho = eval_word_matrix(&setup, &reduce_corner(&setup, &sigma)?.word())?;
                    if !r.is_one(sigma.mul(&r, &rho).get(k, k)) {
                        failures += 1;
                    }
                    runs += 1;
                }
            }
        }
        Ok((failures == 0, json!({"words": runs, "failures": failures})))
    })
}

/// Reduced `FDG`-decompositions of random words.
pub fn criterion_5(seed: u64) -> CriterionResult {
    timed(5, "reduced FDG decomposition", 120, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let setup = QuadSetup::standard(ZMod::new(3)?, 1, 3)?;
        let mut failures = 0;
        for _ in 0..50 {
            let theta = random_word(&setup, 8, &mut rng)?;
            let triple = fdg_decompose(&setup, &theta)?;
            if !(triple.reduced && verify_fdg(&setup, &theta, &triple)?.passed()) {
                failures += 1;
            }
        }
        Ok((failures == 0, json!({"words": 50, "failures": failures})))
    })
}

/// Normality of `EO` in `O` over `Z/3` at rank 2, by exhaustive scan and by
/// constructive witnesses.
pub fn criterion_6(seed: u64) -> CriterionResult {
    timed(6, "normality oracle", 600, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let budget = budget_from_env();
        let setup = QuadSetup::standard(ZMod::new(3)?, 1, 2)?;
        let r = *setup.ring();
        let o = enumerate_orthogonal(&setup, budget)?;
        let eo = enumerate_elementary(&setup, budget)?;
        let verdict = is_subgroup(&o, &eo) && normality_verdict(&o, &eo);
        let mut witness_failures = 0;
        let mut residual_failures = 0;
        for k in 0..20 {
            let eta = random_word(&setup, 8, &mut rng)?;
            let trace = reduce_to_smaller(&setup, &eta)?;
            let class = random_class(&setup, CLASS_NAMES[k % 6], &mut rng)?;
            let g = class_token(&setup, &class)?;
            let w = normality_witness(&setup, &trace, &g)?;
            let e = eval_word_matrix(&setup, &eta)?;
            let want = setup.orth_inverse(&e).mul(&r, &eval_token(&setup, &g)?).mul(&r, &e);
            let got = eval_word_matrix(&setup, &w)?;
            if got != want || !eo.contains(&got) {
                witness_failures += 1;
            }
            let t_small = setup.destabilize_matrix(&trace.residual)?;
            let conj = conjugate_factorization(&setup, &ConjCase { t_small, class })?;
            if !eo.contains(&eval_word_matrix(&setup, &conj)?) {
                residual_failures += 1;
            }
        }
        let complete = o.is_complete();
        let ok = verdict && complete && witness_failures == 0 && residual_failures == 0;
        Ok((
            ok,
            json!({
                "orthogonal_order": o.len(),
                "orthogonal_census": o.to_json(),
                "elementary_order": eo.len(),
                "normal": verdict,
                "witness_failures": witness_failures,
                "residual_conjugate_failures": residual_failures,
            }),
        ))
    })
}

/// `KO₁` from rank 1 to rank 2 over `Z/3`.
pub fn criterion_7(seed: u64) -> CriterionResult {
    timed(7, "stability oracle", 600, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let budget = budget_from_env();
        let s1 = QuadSetup::standard(ZMod::new(3)?, 1, 1)?;
        let s2 = s1.with_rank(2);
        let (o1, e1) = (enumerate_orthogonal(&s1, budget)?, enumerate_elementary(&s1, budget)?);
        let (o2, e2) = (enumerate_orthogonal(&s2, budget)?, enumerate_elementary(&s2, budget)?);
        let rep = k1_stability_check((&o1, &e1), (&o2, &e2), 1000, &mut rng)?;
        let ok = rep.normal.1
            && rep.complete.1
            && rep.surjective
            && rep.stabilized_contained
            && rep.representative_independent;
        Ok((ok, rep.to_json()))
    })
}

/// `|O| = 48` at `(n, m) = (1, 1)` over `Z/3`, and `|EO|` divides it.
pub fn criterion_8(_seed: u64) -> CriterionResult {
    timed(8, "baseline census", 5, || {
        let setup = QuadSetup::standard(ZMod::new(3)?, 1, 1)?;
        let budget = budget_from_env();
        let o = enumerate_orthogonal(&setup, budget)?;
        let eo = enumerate_elementary(&setup, budget)?;
        let ok = o.source == CensusSource::DirectScan && o.len() == 48 && o.len() % eo.len() == 0;
        let index = cosets(&o, &eo)?.index();
        Ok((ok, json!({"orthogonal_order": o.len(), "elementary_order": eo.len(), "index": index})))
    })
}

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    let all: [fn(u64) -> CriterionResult; 8] =
        [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8];
    all.iter().map(|f| f(seed)).collect()
}
