use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use secat_core::homotopy::{hom_components, homotopic, HomotopyContext};
use secat_core::poset::core;
use secat_core::propcheck::{random_map, random_space, random_walk};
use secat_core::{FiniteSpace, PosetMap};

fn spaces(seed: u64) -> (FiniteSpace, FiniteSpace, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_space(&mut rng, 4, 0.4, 0.7, "p");
    let q = random_space(&mut rng, 5, 0.4, 0.7, "q");
    (p, q, rng)
}

fn decide(ctx: &HomotopyContext, f: &PosetMap, g: &PosetMap) -> bool {
    match homotopic(ctx, f, g).unwrap() {
        Some(fence) => {
            assert!(fence.validate(f, g).is_ok());
            true
        }
        None => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn walks_are_fences(seed in any::<u64>(), steps in 0usize..6) {
        let (p, q, mut rng) = spaces(seed);
        let f = random_map(&mut rng, &p, &q);
        let walk = random_walk(&mut rng, &f, steps);
        let end = walk.steps.last().unwrap().clone();
        prop_assert!(walk.validate(&f, &end).is_ok());
        prop_assert!(walk.reversed().validate(&end, &f).is_ok());
        prop_assert!(decide(&HomotopyContext::default(), &f, &end));
    }

    #[test]
    fn equivalence_relation(seed in any::<u64>()) {
        let (p, q, mut rng) = spaces(seed);
        let ctx = HomotopyContext::default();
        let f = random_map(&mut rng, &p, &q);
        let g = random_map(&mut rng, &p, &q);
        let h = random_map(&mut rng, &p, &q);
        prop_assert!(decide(&ctx, &f, &f));
        let fg = decide(&ctx, &f, &g);
        prop_assert_eq!(fg, decide(&ctx, &g, &f));
        if fg && decide(&ctx, &g, &h) {
            prop_assert!(decide(&ctx, &f, &h));
        }
    }

    #[test]
    fn agrees_with_components(seed in any::<u64>()) {
        let (p, q, mut rng) = spaces(seed);
        let ctx = HomotopyContext::default();
        let comps = hom_components(&ctx, &p, &q).unwrap();
        let label: HashMap<Vec<usize>, usize> = comps
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().map(move |f| (f.values().to_vec(), i)))
            .collect();
        for _ in 0..6 {
            let f = random_map(&mut rng, &p, &q);
            let g = random_map(&mut rng, &p, &q);
            let same = label[f.values()] == label[g.values()];
            prop_assert_eq!(decide(&ctx, &f, &g), same);
        }
    }

    #[test]
    fn congruence(seed in any::<u64>()) {
        let (p, q, mut rng) = spaces(seed);
        let ctx = HomotopyContext::default();
        let r = random_space(&mut rng, 4, 0.4, 0.7, "r");
        let f = random_map(&mut rng, &p, &q);
        let steps = rng.gen_range(1..5);
        let g = random_walk(&mut rng, &f, steps).steps.last().unwrap().clone();
        let h = random_map(&mut rng, &q, &r);
        let k = random_map(&mut rng, &r, &p);
        prop_assert!(decide(&ctx, &h.after(&f).unwrap(), &h.after(&g).unwrap()));
        prop_assert!(decide(&ctx, &f.after(&k).unwrap(), &g.after(&k).unwrap()));
    }

    #[test]
    fn contractible_domain(seed in any::<u64>()) {
        let (p, q, mut rng) = spaces(seed);
        prop_assume!(core(&p).core.len() == 1);
        let ctx = HomotopyContext::default();
        let labels = q.component_labels();
        let f = random_map(&mut rng, &p, &q);
        let g = random_map(&mut rng, &p, &q);
        let same = labels[f.apply(0)] == labels[g.apply(0)];
        prop_assert_eq!(decide(&ctx, &f, &g), same);
    }
}
