use dser::checks::random_form;
use dser::fdg::{fdg_decompose, reduce_corner, verify_fdg};
use dser::normalizer::{random_class, random_small_t, random_word, reduce_to_smaller, verify_factorization, ConjCase, CLASS_NAMES};
use dser::relations::{random_case, verify_relation, RelationId};
use dser::transvect::{
    atom_inverse, eval_atom_matrix, eval_word_matrix, rank_one_atom, word_from_json, word_to_json, AtomKind, GenAtom,
};
use dser::{Matrix, QuadSetup, Rationals, Ring, ZMod};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn odd_modulus() -> impl Strategy<Value = u64> {
    prop_oneof![Just(3u64), Just(5), Just(7), Just(9), Just(15), Just(25)]
}

fn zmod_setup(p: u64, n: usize, m: usize, rng: &mut ChaCha8Rng) -> QuadSetup<ZMod> {
    let ring = ZMod::new(p).unwrap();
    loop {
        if let Ok(s) = QuadSetup::new(ring, m, random_form(&ring, n, rng)) {
            return s;
        }
    }
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn zmod_arithmetic_is_a_ring(p in odd_modulus(), a in 0u64..1000, b in 0u64..1000, c in 0u64..1000) {
        let r = ZMod::new(p).unwrap();
        let (a, b, c) = (a % p, b % p, c % p);
        prop_assert_eq!(r.mul(&a, &r.add(&b, &c)), r.add(&r.mul(&a, &b), &r.mul(&a, &c)));
        prop_assert!(r.is_zero(&r.add(&a, &r.neg(&a))));
        if r.is_unit(&a) {
            prop_assert!(r.is_one(&r.mul(&a, &r.unit_inverse(&a).unwrap())));
        }
    }

    #[test]
    fn atoms_are_orthogonal_and_invert(p in odd_modulus(), n in 1usize..=3, m in 1usize..=4, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = zmod_setup(p, n, m, &mut rng);
        let r = *s.ring();
        for kind in [AtomKind::EA, AtomKind::EBstar] {
            let w: Vec<u64> = (0..n).map(|_| r.random(&mut rng)).collect();
            let indexed = rank_one_atom(&s, kind, rng.gen_range(1..=m), &w).unwrap();
            let general = GenAtom::general(kind, Matrix::from_fn(m, n, |_, _| r.random(&mut rng)));
            for a in [indexed, general] {
                let e = eval_atom_matrix(&s, &a).unwrap();
                prop_assert!(s.is_orthogonal(&e).unwrap());
                let back = eval_atom_matrix(&s, &atom_inverse(&r, &a)).unwrap();
                prop_assert!(e.mul(&r, &back).is_identity(&r));
            }
        }
    }

    #[test]
    fn rational_atoms_are_orthogonal(n in 1usize..=2, m in 1usize..=3, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = Rationals;
        let s = QuadSetup::new(q.clone(), m, random_form(&q, n, &mut rng));
        prop_assume!(s.is_ok());
        let s = s.unwrap();
        let w = random_word(&s, 6, &mut rng).unwrap();
        let t = eval_word_matrix(&s, &w).unwrap();
        prop_assert!(s.is_orthogonal(&t).unwrap());
    }

    #[test]
    fn word_inverse_and_json_round_trip(p in odd_modulus(), n in 1usize..=2, m in 1usize..=3, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = zmod_setup(p, n, m, &mut rng);
        let r = *s.ring();
        let w = random_word(&s, 7, &mut rng).unwrap();
        let t = eval_word_matrix(&s, &w).unwrap();
        let ti = eval_word_matrix(&s, &w.inverse()).unwrap();
        prop_assert!(t.mul(&r, &ti).is_identity(&r));
        prop_assert_eq!(s.orth_inverse(&t), ti);
        let parsed = word_from_json(&s, &word_to_json(&r, &w)).unwrap();
        prop_assert_eq!(eval_word_matrix(&s, &parsed).unwrap(), t);
    }

    #[test]
    fn stabilization_round_trips(p in odd_modulus(), n in 1usize..=2, m in 1usize..=3, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = zmod_setup(p, n, m, &mut rng);
        let t = eval_word_matrix(&s, &random_word(&s, 6, &mut rng).unwrap()).unwrap();
        let up = s.with_rank(m + 1);
        let big = up.stabilize_matrix(&t).unwrap();
        prop_assert!(up.has_stabilized_pattern(&big));
        prop_assert!(up.is_orthogonal(&big).unwrap());
        prop_assert_eq!(up.destabilize_matrix(&big).unwrap(), t);
    }

    #[test]
    fn commutator_relations_hold(p in odd_modulus(), n in 1usize..=2, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = zmod_setup(p, n, 3, &mut rng);
        for id in RelationId::ALL {
            let case = random_case(&s, id, &mut rng).unwrap();
            prop_assert!(verify_relation(&s, &case).unwrap(), "relation {} failed", id.name());
        }
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn conjugate_factorizations_hold(p in odd_modulus(), n in 1usize..=2, m in 2usize..=3, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = zmod_setup(p, n, m, &mut rng);
        for name in CLASS_NAMES {
            let case = ConjCase {
                t_small: random_small_t(&s, 5, &mut rng).unwrap(),
                class: random_class(&s, name, &mut rng).unwrap(),
            };
            prop_assert!(verify_factorization(&s, &case).unwrap(), "class {} failed", name);
        }
    }

    #[test]
    fn corner_reduction_makes_unit_corner(p in prop_oneof![Just(3u64), Just(7), Just(9)], n in 1usize..=2, m in 2usize..=3, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = QuadSetup::standard(ZMod::new(p).unwrap(), n, m).unwrap();
        let r = *s.ring();
        let k = s.x_index(m);
        let sigma = eval_word_matrix(&s, &random_word(&s, 10, &mut rng).unwrap()).unwrap();
        let rho = eval_word_matrix(&s, &reduce_corner(&s, &sigma).unwrap().word()).unwrap();
        prop_assert!(r.is_one(sigma.mul(&r, &rho).get(k, k)));
    }

    #[test]
    fn fdg_decompositions_verify(p in prop_oneof![Just(3u64), Just(5), Just(9)], n in 1usize..=2, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = QuadSetup::standard(ZMod::new(p).unwrap(), n, 3).unwrap();
        let theta = random_word(&s, 8, &mut rng).unwrap();
        let triple = fdg_decompose(&s, &theta).unwrap();
        prop_assert!(triple.reduced);
        prop_assert!(verify_fdg(&s, &theta, &triple).unwrap().passed());
    }

    #[test]
    fn reduction_fixes_last_pair(p in prop_oneof![Just(3u64), Just(5), Just(9)], m in 2usize..=3, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = QuadSetup::standard(ZMod::new(p).unwrap(), 1, m).unwrap();
        let r = *s.ring();
        let eta = random_word(&s, 8, &mut rng).unwrap();
        let tr = reduce_to_smaller(&s, &eta).unwrap();
        let ev = |w| eval_word_matrix(&s, w).unwrap();
        let prod = ev(&tr.rho4).mul(&r, &ev(&tr.rho3)).mul(&r, &ev(&eta)).mul(&r, &ev(&tr.rho1)).mul(&r, &ev(&tr.rho2));
        prop_assert_eq!(&prod, &tr.residual);
        prop_assert!(s.has_stabilized_pattern(&tr.residual));
    }
}
