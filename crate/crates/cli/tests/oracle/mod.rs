//! Brute-force reference values, written without the engine, the homotopy
//! module or the cohomology module. Homotopy classes are connected
//! components of the comparability graph on all order-preserving maps; covers
//! are found by exhausting every down-set (or every subset).

use std::collections::HashMap;

use secat_core::poset::{product, subspace};
use secat_core::{BitSet, Cospan, FiniteSpace, PosetMap, Value};

/// Every order-preserving `f: P → Q`, optionally restricted to `f ≥ floor`.
pub fn monotone_maps(p: &FiniteSpace, q: &FiniteSpace, floor: Option<&[usize]>) -> Vec<Vec<usize>> {
    let order = p.linear_extension().to_vec();
    let mut out = Vec::new();
    let mut f = vec![0usize; p.len()];
    fn go(
        i: usize,
        order: &[usize],
        p: &FiniteSpace,
        q: &FiniteSpace,
        floor: Option<&[usize]>,
        f: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if i == order.len() {
            out.push(f.clone());
            return;
        }
        let x = order[i];
        for v in 0..q.len() {
            if floor.is_some_and(|fl| !q.leq(fl[x], v)) {
                continue;
            }
            if p.down(x).iter().all(|w| w == x || q.leq(f[w], v)) {
                f[x] = v;
                go(i + 1, order, p, q, floor, f, out);
            }
        }
    }
    go(0, &order, p, q, floor, &mut f, &mut out);
    out
}

/// Component label of every map in `Hom(P, Q)`.
pub fn hom_classes(p: &FiniteSpace, q: &FiniteSpace) -> HashMap<Vec<usize>, usize> {
    let maps = monotone_maps(p, q, None);
    let index: HashMap<Vec<usize>, usize> = maps.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect();
    let mut parent: Vec<usize> = (0..maps.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, f) in maps.iter().enumerate() {
        for g in monotone_maps(p, q, Some(f)) {
            let (a, b) = (find(&mut parent, i), find(&mut parent, index[&g]));
            parent[a.max(b)] = a.min(b);
        }
    }
    maps.iter()
        .enumerate()
        .map(|(i, f)| (f.clone(), find(&mut parent, i)))
        .collect()
}

fn all_subsets(n: usize) -> impl Iterator<Item = BitSet> {
    (0u32..1 << n).map(move |m| BitSet::from_indices(n, (0..n).filter(|&i| m >> i & 1 == 1)))
}

/// Least `n` such that `n + 1` members of `good` cover `0..size`.
fn min_cover(size: usize, good: &[BitSet]) -> Value {
    let full = BitSet::full(size);
    let mut frontier = vec![BitSet::new(size)];
    let mut seen = std::collections::HashSet::new();
    for level in 0..=size {
        let mut next = Vec::new();
        for covered in &frontier {
            for g in good {
                let u = covered.union(g);
                if u == full {
                    return Value::Finite(level);
                }
                if seen.insert(u.clone()) {
                    next.push(u);
                }
            }
        }
        frontier = next;
    }
    Value::Infinite
}

/// `Z` admits `s: Z → A` with `p ∘ s` and `φ|_Z` in the same class.
pub fn sectional(c: &Cospan, z: &BitSet) -> bool {
    if z.is_empty() {
        return true;
    }
    let (zs, inc) = subspace(&c.k, z).unwrap();
    let classes = hom_classes(&zs, &c.x);
    let target: Vec<usize> = inc.values().iter().map(|&k| c.phi.apply(k)).collect();
    let goal = classes[&target];
    monotone_maps(&zs, &c.a, None).iter().any(|s| {
        let ps: Vec<usize> = s.iter().map(|&a| c.p.apply(a)).collect();
        classes[&ps] == goal
    })
}

/// Reference `secat_φ(p)` over all down-sets (`generalized = false`) or all
/// subsets of `K`.
pub fn relative_secat(c: &Cospan, generalized: bool) -> Value {
    let n = c.k.len();
    let good: Vec<BitSet> = all_subsets(n)
        .filter(|z| generalized || c.k.is_open(z))
        .filter(|z| !z.is_empty() && sectional(c, z))
        .collect();
    min_cover(n, &good)
}

/// Reference `tc(X)`: a down-set `Z ⊆ X × X` is good when the two
/// projections restricted to `Z` lie in one class of `Hom(Z, X)`.
pub fn tc(x: &FiniteSpace) -> Value {
    let prod = product(x, x).unwrap();
    let n = prod.space.len();
    let mut good = Vec::new();
    for z in all_subsets(n).filter(|z| !z.is_empty() && prod.space.is_open(z)) {
        let (zs, inc) = subspace(&prod.space, &z).unwrap();
        let classes = hom_classes(&zs, x);
        let pr = |proj: &PosetMap| -> Vec<usize> { inc.values().iter().map(|&k| proj.apply(k)).collect() };
        if classes[&pr(&prod.proj1)] == classes[&pr(&prod.proj2)] {
            good.push(z);
        }
    }
    min_cover(n, &good)
}
