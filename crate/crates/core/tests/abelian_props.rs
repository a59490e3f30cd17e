use std::collections::BTreeSet;

use gfc_core::abelian::{acts_freely, GroupElement, Subgroup, TwoGroupCharacter};
use proptest::prelude::*;

fn element(k: u32, level: usize) -> impl Strategy<Value = GroupElement> {
    prop::collection::vec(0..k, level).prop_map(move |e| GroupElement::new(k, e).unwrap())
}

fn setting() -> impl Strategy<Value = (u32, usize)> {
    (2u32..=5, 2usize..=5)
}

/// Every element reachable from the identity by the generators.
fn closure(k: u32, level: usize, gens: &[GroupElement]) -> BTreeSet<Vec<u32>> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![GroupElement::identity(k, level)];
    seen.insert(stack[0].exponents().to_vec());
    while let Some(g) = stack.pop() {
        for h in gens {
            let x = g.compose(h).unwrap();
            if seen.insert(x.exponents().to_vec()) {
                stack.push(x);
            }
        }
    }
    seen
}

proptest! {
    #[test]
    fn group_laws((k, level) in setting(), seed in any::<u64>()) {
        let pick = |s: u64| {
            let e: Vec<u32> = (0..level).map(|i| ((s >> (3 * i)) % k as u64) as u32).collect();
            GroupElement::new(k, e).unwrap()
        };
        let (a, b, c) = (pick(seed), pick(seed.rotate_left(17)), pick(seed.rotate_left(41)));
        prop_assert_eq!(a.compose(&b).unwrap(), b.compose(&a).unwrap());
        prop_assert_eq!(a.compose(&b).unwrap().compose(&c).unwrap(), a.compose(&b.compose(&c).unwrap()).unwrap());
        prop_assert!(a.compose(&a.inverse()).unwrap().is_identity());
        prop_assert_eq!(k % a.order(), 0);
        prop_assert!(a.pow(a.order() as i64).is_identity());
    }

    #[test]
    fn generators_multiply_to_identity((k, level) in setting()) {
        let mut acc = GroupElement::identity(k, level);
        for j in 1..=level + 1 {
            acc = acc.compose(&GroupElement::generator(k, level, j).unwrap()).unwrap();
        }
        prop_assert!(acc.is_identity());
        let last = GroupElement::generator(k, level, level + 1).unwrap();
        prop_assert!(last.exponents().iter().all(|&e| e == k - 1));
    }

    #[test]
    fn subgroup_order_matches_closure(k in 2u32..=3, level in 2usize..=4, gens in prop::collection::vec(prop::collection::vec(0u32..3, 4), 0..4)) {
        let gens: Vec<GroupElement> = gens
            .into_iter()
            .map(|e| GroupElement::new(k, e[..level].iter().map(|x| x % k).collect()).unwrap())
            .collect();
        let s = Subgroup::span(k, level, &gens).unwrap();
        let oracle = closure(k, level, &gens);
        prop_assert_eq!(s.order().unwrap() as usize, oracle.len());
        prop_assert_eq!(s.index().unwrap() * s.order().unwrap(), (k as u128).pow(level as u32));
        for e in &oracle {
            prop_assert!(s.contains(&GroupElement::new(k, e.clone()).unwrap()).unwrap());
        }
        let listed: BTreeSet<Vec<u32>> = s.elements().iter().map(|g| g.exponents().to_vec()).collect();
        prop_assert_eq!(listed, oracle);
    }

    #[test]
    fn join_contains_both(a in element(3, 3), b in element(3, 3), c in element(3, 3)) {
        let s = Subgroup::span(3, 3, std::slice::from_ref(&a)).unwrap();
        let t = Subgroup::span(3, 3, &[b.clone(), c.clone()]).unwrap();
        let j = s.join(&t).unwrap();
        prop_assert!(s.is_subgroup_of(&j).unwrap() && t.is_subgroup_of(&j).unwrap());
        prop_assert!(j.contains(&a.compose(&b).unwrap()).unwrap());
    }

    #[test]
    fn freeness_matches_definition(g in element(3, 4), fixed in prop::collection::btree_set(1usize..=5, 0..5)) {
        prop_assume!(!g.is_identity());
        // g has a fixed point iff it lies in the cyclic group of a fixed-bearing generator
        let mut has_fixed = false;
        for &j in &fixed {
            let cyclic = closure(3, 4, &[GroupElement::generator(3, 4, j).unwrap()]);
            has_fixed |= cyclic.contains(g.exponents());
        }
        prop_assert_eq!(acts_freely(&g, &fixed).unwrap(), !has_fixed);
    }

    #[test]
    fn hyperelliptic_kernel_is_the_zero_set(bits in prop::collection::vec(0u8..2, 0..4), extra in 0usize..3) {
        let level = bits.len() + 3 + extra;
        let theta = TwoGroupCharacter::hyperelliptic(&bits, level).unwrap();
        let kernel = theta.kernel().unwrap();
        prop_assert_eq!(kernel.index().unwrap(), 2);
        for g in Subgroup::full(2, level).elements() {
            let image = theta.apply(&g).unwrap();
            prop_assert_eq!(kernel.contains(&g).unwrap(), image == vec![0]);
        }
    }
}
