use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use secat_core::certificate::validate_value;
use secat_core::cohomology::{cohomology_ring, induced_map, OrderComplex};
use secat_core::instance::{build_instance, decode_cospan, encode_cospan, parse_instance, serialize_instance};
use secat_core::invariants::{cat_map, distance_direct, subspace_tc, tc, tc_mw, tc_scott};
use secat_core::poset::{diagonal, subspace};
use secat_core::propcheck::{random_cospan_with, random_map, random_space, random_walk, GeneratorConfig};
use secat_core::{BitSet, Engine, EngineConfig, FiniteSpace, Mode, Subset, Value};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small(seed: u64, max_points: usize) -> FiniteSpace {
    random_space(&mut rng(seed), max_points, 0.4, 0.8, "x")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn generalized_below_open(seed in any::<u64>()) {
        let cfg = GeneratorConfig { max_points: 5, ..GeneratorConfig::default() };
        let c = random_cospan_with(&cfg, &mut rng(seed));
        let engine = Engine::with_defaults(c.clone());
        let open = engine.solve(Mode::Open).unwrap();
        let gen = engine.solve(Mode::Generalized).unwrap();
        prop_assert!(gen.value <= open.value);
        prop_assert!(validate_value(&c, &open).is_ok());
        prop_assert!(validate_value(&c, &gen).is_ok());
        if let Value::Finite(n) = open.value {
            prop_assert!(n < c.k.maximal_points().len());
        }
        prop_assert_eq!(open.value.is_finite(), engine.finiteness_check(Mode::Open).unwrap());
    }

    #[test]
    fn sectional_sets_are_hereditary(seed in any::<u64>(), mask in any::<u8>()) {
        let cfg = GeneratorConfig { max_points: 5, ..GeneratorConfig::default() };
        let c = random_cospan_with(&cfg, &mut rng(seed));
        let engine = Engine::with_defaults(c.clone());
        let full = c.k.full_set();
        let part = BitSet::from_indices(c.k.len(), full.iter().filter(|&x| mask >> x & 1 == 1));
        if engine.is_sectional(&full).unwrap() {
            prop_assert!(engine.is_sectional(&part).unwrap());
        }
    }

    #[test]
    fn tc_is_distance_of_projections(seed in any::<u64>()) {
        let x = small(seed, 4);
        prop_assume!(x.is_connected());
        let cfg = EngineConfig::default();
        let (prod, _) = diagonal(&x).unwrap();
        prop_assert_eq!(
            tc(&x, &cfg).unwrap().value.value,
            distance_direct(&prod.proj1, &prod.proj2, &cfg).unwrap()
        );
    }

    #[test]
    fn subspace_tc_extremes(seed in any::<u64>()) {
        let x = small(seed, 4);
        let cfg = EngineConfig::default();
        let (prod, delta) = diagonal(&x).unwrap();
        let diag = Subset::new(&prod.space, delta.image());
        prop_assert_eq!(subspace_tc(&x, &diag, &cfg).unwrap().value.value, Value::Finite(0));
        let all = Subset::new(&prod.space, prod.space.full_set());
        prop_assert_eq!(
            subspace_tc(&x, &all, &cfg).unwrap().value.value,
            tc(&x, &cfg).unwrap().value.value
        );
    }

    #[test]
    fn scott_below_murillo_wu(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = random_space(&mut r, 3, 0.4, 0.8, "x");
        let y = random_space(&mut r, 4, 0.4, 0.8, "y");
        let f = random_map(&mut r, &x, &y);
        let cfg = EngineConfig::default();
        prop_assert!(tc_scott(&f, &cfg).unwrap().value.value <= tc_mw(&f, &cfg).unwrap().value.value);
    }

    #[test]
    fn cat_shrinks_on_subspaces(seed in any::<u64>(), mask in 1u8..) {
        let mut r = rng(seed);
        let k = random_space(&mut r, 5, 0.4, 1.0, "k");
        let x = random_space(&mut r, 5, 0.4, 1.0, "x");
        prop_assume!(x.is_connected());
        let phi = random_map(&mut r, &k, &x);
        let members = BitSet::from_indices(k.len(), k.elements().filter(|&i| mask >> i & 1 == 1));
        prop_assume!(!members.is_empty());
        let (_, inc) = subspace(&k, &members).unwrap();
        let cfg = EngineConfig::default();
        let whole = cat_map(&phi, &cfg).unwrap().value.value;
        let part = cat_map(&phi.after(&inc).unwrap(), &cfg).unwrap().value.value;
        prop_assert!(part <= whole);
    }

    #[test]
    fn cohomology_complex(seed in any::<u64>()) {
        let x = small(seed, 7);
        let complex = OrderComplex::new(&x).unwrap();
        let ring = cohomology_ring(&x).unwrap();
        let top = complex.dim().unwrap_or(0);
        for i in 0..top.saturating_sub(1) {
            for k in 0..complex.count(i) {
                let e = BitSet::from_indices(complex.count(i), [k]);
                prop_assert!(complex.coboundary(i + 1, &complex.coboundary(i, &e)).is_empty());
            }
        }
        let alternating: i64 = ring
            .betti_numbers()
            .iter()
            .enumerate()
            .map(|(i, &b)| if i % 2 == 0 { b as i64 } else { -(b as i64) })
            .sum();
        prop_assert_eq!(alternating, complex.euler_characteristic());
    }

    #[test]
    fn induced_maps_are_ring_maps(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_space(&mut r, 5, 0.4, 0.8, "p");
        let q = random_space(&mut r, 6, 0.4, 0.8, "q");
        let s = random_space(&mut r, 5, 0.4, 0.8, "s");
        let f = random_map(&mut r, &p, &q);
        let g = random_map(&mut r, &q, &s);
        let (fs, gs) = (induced_map(&f).unwrap(), induced_map(&g).unwrap());
        let gf = induced_map(&g.after(&f).unwrap()).unwrap();
        let (rq, rs) = (cohomology_ring(&q).unwrap(), cohomology_ring(&s).unwrap());
        for i in 0..=rs.top() {
            for k in 0..rs.rank(i) {
                let x = rs.basis(i, k);
                prop_assert_eq!(gf.apply(&x), fs.apply(&gs.apply(&x)));
            }
        }
        for i in 0..=rq.top() {
            for j in 0..=rq.top() {
                for a in 0..rq.rank(i) {
                    for b in 0..rq.rank(j) {
                        let (x, y) = (rq.basis(i, a), rq.basis(j, b));
                        let lhs = fs.apply(&rq.cup(&x, &y));
                        let rhs = fs.target.cup(&fs.apply(&x), &fs.apply(&y));
                        prop_assert_eq!(lhs, rhs);
                    }
                }
            }
        }
        prop_assert_eq!(fs.apply(&rq.unit()), fs.target.unit());
    }

    #[test]
    fn homotopic_maps_agree_on_cohomology(seed in any::<u64>(), steps in 1usize..6) {
        let mut r = rng(seed);
        let p = random_space(&mut r, 5, 0.4, 0.8, "p");
        let q = random_space(&mut r, 6, 0.4, 0.8, "q");
        let f = random_map(&mut r, &p, &q);
        let g = random_walk(&mut r, &f, steps).steps.last().unwrap().clone();
        prop_assert_eq!(induced_map(&f).unwrap().columns, induced_map(&g).unwrap().columns);
    }

    #[test]
    fn instance_round_trip(seed in any::<u64>(), generalized in any::<bool>()) {
        let cfg = GeneratorConfig { max_points: 6, ..GeneratorConfig::default() };
        let c = random_cospan_with(&cfg, &mut rng(seed));
        let file = encode_cospan(&c, generalized);
        let text = serialize_instance(&file);
        let parsed = parse_instance(&text).unwrap();
        prop_assert_eq!(serialize_instance(&parsed.file), text);
        let back = decode_cospan(&build_instance(parsed.file.clone()).unwrap()).unwrap();
        prop_assert_eq!(back.phi.values(), c.phi.values());
        prop_assert_eq!(back.p.values(), c.p.values());
        prop_assert_eq!(back.x.names(), c.x.names());
    }
}
