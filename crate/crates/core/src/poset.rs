//! Finite T0 spaces as posets.
//!
//! Open sets are down-sets: the minimal open neighbourhood of `x` is
//! `U_x = { y : y <= x }`, and continuous maps are exactly the order-preserving
//! ones. Elements are addressed by index; names are kept for I/O only.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::bits::BitSet;
use crate::error::{Error, Result};

pub const DEFAULT_SIZE_LIMIT: usize = 64;

static SIZE_LIMIT: AtomicUsize = AtomicUsize::new(DEFAULT_SIZE_LIMIT);

/// Largest number of points any constructed space may have.
pub fn size_limit() -> usize {
    SIZE_LIMIT.load(Ordering::Relaxed)
}

pub fn set_size_limit(limit: usize) {
    SIZE_LIMIT.store(limit.max(1), Ordering::Relaxed);
}

struct SpaceData {
    names: Vec<String>,
    index: HashMap<String, usize>,
    /// `down[x]` is `U_x`.
    down: Vec<BitSet>,
    up: Vec<BitSet>,
    covers: Vec<(usize, usize)>,
    maximal: Vec<usize>,
    linear: Vec<usize>,
    fingerprint: u64,
}

/// A finite T0 space. Cheap to clone; immutable after construction.
#[derive(Clone)]
pub struct FiniteSpace(Arc<SpaceData>);

impl PartialEq for FiniteSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.fingerprint == other.0.fingerprint
                && self.0.names == other.0.names
                && self.0.down == other.0.down)
    }
}

impl Eq for FiniteSpace {}

impl fmt::Debug for FiniteSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let covers: Vec<_> = self
            .covers()
            .iter()
            .map(|&(a, b)| format!("{}<{}", self.name(a), self.name(b)))
            .collect();
        f.debug_struct("FiniteSpace")
            .field("elements", &self.0.names)
            .field("covers", &covers)
            .finish()
    }
}

impl FiniteSpace {
    /// Builds a space from element names and generating relations `(a, b)`
    /// meaning `a < b`. The relations need not be covers; the order is their
    /// reflexive-transitive closure.
    pub fn build<S: AsRef<str>>(elements: &[S], relations: &[(S, S)]) -> Result<Self> {
        let names: Vec<String> = elements.iter().map(|s| s.as_ref().to_owned()).collect();
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::DuplicateElement(n.clone()));
            }
        }
        let n = names.len();
        check_size(n)?;
        let mut down: Vec<BitSet> = (0..n).map(|i| BitSet::unit(n, i)).collect();
        for (a, b) in relations {
            let a = *index
                .get(a.as_ref())
                .ok_or_else(|| Error::UnknownElement(a.as_ref().to_owned()))?;
            let b = *index
                .get(b.as_ref())
                .ok_or_else(|| Error::UnknownElement(b.as_ref().to_owned()))?;
            down[b].insert(a);
        }
        close_transitively(&mut down);
        for (y, d) in down.iter().enumerate() {
            for x in d.iter() {
                if x != y && down[x].contains(y) {
                    let (a, b) = if x < y { (x, y) } else { (y, x) };
                    return Err(Error::Cycle(names[a].clone(), names[b].clone()));
                }
            }
        }
        Self::from_down_sets(names, down)
    }

    /// `down` must already be a partial order given by its down-sets.
    pub(crate) fn from_down_sets(names: Vec<String>, down: Vec<BitSet>) -> Result<Self> {
        let n = names.len();
        check_size(n)?;
        let index = names
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect::<HashMap<_, _>>();
        if index.len() != n {
            let mut seen = std::collections::HashSet::new();
            let dup = names.iter().find(|s| !seen.insert(*s)).unwrap();
            return Err(Error::DuplicateElement(dup.clone()));
        }
        let mut up = vec![BitSet::new(n); n];
        for (y, d) in down.iter().enumerate() {
            for x in d.iter() {
                up[x].insert(y);
            }
        }
        let mut covers = Vec::new();
        for y in 0..n {
            let mut strict = down[y].clone();
            strict.remove(y);
            let mut reduced = strict.clone();
            for z in strict.iter() {
                let mut below_z = down[z].clone();
                below_z.remove(z);
                reduced.difference_with(&below_z);
            }
            covers.extend(reduced.iter().map(|x| (x, y)));
        }
        covers.sort_unstable();
        let maximal = (0..n).filter(|&x| up[x].count() == 1).collect();
        let mut linear: Vec<usize> = (0..n).collect();
        linear.sort_by_key(|&x| (down[x].count(), x));
        let mut h = DefaultHasher::new();
        names.hash(&mut h);
        down.hash(&mut h);
        let fingerprint = h.finish();
        Ok(FiniteSpace(Arc::new(SpaceData {
            names,
            index,
            down,
            up,
            covers,
            maximal,
            linear,
            fingerprint,
        })))
    }

    pub fn point() -> Self {
        Self::build(&["*"], &[]).expect("one point")
    }

    pub fn empty() -> Self {
        Self::from_down_sets(Vec::new(), Vec::new()).expect("empty")
    }

    /// Chain `0 < 1 < ... < n-1` with elements named by their position.
    pub fn chain(n: usize) -> Result<Self> {
        let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let rel: Vec<(String, String)> = (1..n).map(|i| (names[i - 1].clone(), names[i].clone())).collect();
        Self::build(&names, &rel)
    }

    pub fn antichain(n: usize) -> Result<Self> {
        let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        Self::build::<String>(&names, &[])
    }

    /// The four-point minimal finite model of the circle: `a, b < c, d`.
    pub fn pseudocircle() -> Self {
        Self::build(
            &["a", "b", "c", "d"],
            &[("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")],
        )
        .expect("pseudocircle")
    }

    /// Adjoins a new maximum, producing a contractible space.
    pub fn cone(&self) -> Result<Self> {
        let top = fresh_name(self, "top");
        let n = self.len();
        let mut names = self.0.names.clone();
        names.push(top);
        let mut down: Vec<BitSet> = self
            .0
            .down
            .iter()
            .map(|d| BitSet::from_indices(n + 1, d.iter()))
            .collect();
        down.push(BitSet::full(n + 1));
        Self::from_down_sets(names, down)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn name(&self, x: usize) -> &str {
        &self.0.names[x]
    }

    pub fn names(&self) -> &[String] {
        &self.0.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.index.get(name).copied()
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.len()
    }

    #[inline]
    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.0.down[y].contains(x)
    }

    #[inline]
    pub fn comparable(&self, x: usize, y: usize) -> bool {
        self.leq(x, y) || self.leq(y, x)
    }

    /// Minimal open set `U_x`.
    #[inline]
    pub fn down(&self, x: usize) -> &BitSet {
        &self.0.down[x]
    }

    /// Minimal closed set of `x` (its up-set).
    #[inline]
    pub fn up(&self, x: usize) -> &BitSet {
        &self.0.up[x]
    }

    pub fn covers(&self) -> &[(usize, usize)] {
        &self.0.covers
    }

    pub fn maximal_points(&self) -> &[usize] {
        &self.0.maximal
    }

    /// Elements sorted so that `x < y` implies `x` comes first.
    pub fn linear_extension(&self) -> &[usize] {
        &self.0.linear
    }

    pub fn fingerprint(&self) -> u64 {
        self.0.fingerprint
    }

    pub fn empty_set(&self) -> BitSet {
        BitSet::new(self.len())
    }

    pub fn full_set(&self) -> BitSet {
        BitSet::full(self.len())
    }

    /// True iff `set` is a down-set, i.e. open.
    pub fn is_open(&self, set: &BitSet) -> bool {
        set.iter().all(|x| self.down(x).is_subset(set))
    }

    /// Smallest open set containing `set`.
    pub fn open_hull(&self, set: &BitSet) -> BitSet {
        let mut out = self.empty_set();
        for x in set.iter() {
            out.union_with(self.down(x));
        }
        out
    }

    /// Dimension of the order complex: longest chain length minus one.
    pub fn height(&self) -> Option<usize> {
        let mut depth = vec![0usize; self.len()];
        for &y in self.linear_extension() {
            depth[y] = self
                .down(y)
                .iter()
                .filter(|&x| x != y)
                .map(|x| depth[x] + 1)
                .max()
                .unwrap_or(0);
        }
        depth.into_iter().max()
    }

    /// Connected components of the comparability graph, each sorted, ordered by
    /// smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in self.covers() {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = HashMap::new();
        for x in 0..n {
            let r = find(&mut parent, x);
            let k = *slot.entry(r).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[k].push(x);
        }
        groups
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    /// Component index of every element, consistent with [`components`](Self::components).
    pub fn component_labels(&self) -> Vec<usize> {
        let mut label = vec![0; self.len()];
        for (k, comp) in self.components().iter().enumerate() {
            for &x in comp {
                label[x] = k;
            }
        }
        label
    }

    /// Beat point test relative to the live set `alive`: returns the point `x`
    /// retracts onto, if any.
    fn beat_target(&self, x: usize, alive: &BitSet) -> Option<usize> {
        let mut below = self.down(x).intersection(alive);
        below.remove(x);
        if let Some(m) = unique_maximum(self, &below) {
            return Some(m);
        }
        let mut above = self.up(x).intersection(alive);
        above.remove(x);
        unique_minimum(self, &above)
    }

    pub fn is_beat_point(&self, x: usize) -> bool {
        self.beat_target(x, &self.full_set()).is_some()
    }
}

fn check_size(n: usize) -> Result<()> {
    let limit = size_limit();
    if n > limit {
        Err(Error::SizeLimit { size: n, limit })
    } else {
        Ok(())
    }
}

fn close_transitively(down: &mut [BitSet]) {
    let n = down.len();
    for k in 0..n {
        let dk = down[k].clone();
        for row in down.iter_mut() {
            if row.contains(k) {
                row.union_with(&dk);
            }
        }
    }
}

fn unique_maximum(p: &FiniteSpace, set: &BitSet) -> Option<usize> {
    set.iter().find(|&m| set.is_subset(p.down(m)))
}

fn unique_minimum(p: &FiniteSpace, set: &BitSet) -> Option<usize> {
    set.iter().find(|&m| set.is_subset(p.up(m)))
}

fn fresh_name(p: &FiniteSpace, base: &str) -> String {
    let mut name = base.to_owned();
    while p.index_of(&name).is_some() {
        name.push('\'');
    }
    name
}

/// A subset of a finite space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subset {
    pub space: FiniteSpace,
    pub members: BitSet,
}

impl Subset {
    pub fn new(space: &FiniteSpace, members: BitSet) -> Self {
        debug_assert_eq!(members.len(), space.len());
        Subset {
            space: space.clone(),
            members,
        }
    }

    pub fn from_names<S: AsRef<str>>(space: &FiniteSpace, names: &[S]) -> Result<Self> {
        let mut members = space.empty_set();
        for n in names {
            let i = space
                .index_of(n.as_ref())
                .ok_or_else(|| Error::UnknownElement(n.as_ref().to_owned()))?;
            members.insert(i);
        }
        Ok(Subset::new(space, members))
    }

    pub fn is_open(&self) -> bool {
        self.space.is_open(&self.members)
    }

    pub fn names(&self) -> Vec<String> {
        self.members
            .iter()
            .map(|x| self.space.name(x).to_owned())
            .collect()
    }
}

/// An order-preserving map between finite spaces.
#[derive(Clone, PartialEq, Eq)]
pub struct PosetMap {
    domain: FiniteSpace,
    codomain: FiniteSpace,
    values: Vec<usize>,
}

impl fmt::Debug for PosetMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<_> = self
            .values
            .iter()
            .enumerate()
            .map(|(x, &y)| format!("{}->{}", self.domain.name(x), self.codomain.name(y)))
            .collect();
        write!(f, "PosetMap{pairs:?}")
    }
}

impl PosetMap {
    /// Validates totality and monotonicity.
    pub fn new(domain: &FiniteSpace, codomain: &FiniteSpace, values: Vec<usize>) -> Result<Self> {
        if values.len() != domain.len() {
            let missing = domain.len().min(values.len());
            return Err(Error::IncompleteMap(
                domain.names().get(missing).cloned().unwrap_or_default(),
            ));
        }
        if let Some(&bad) = values.iter().find(|&&v| v >= codomain.len()) {
            return Err(Error::UnknownElement(bad.to_string()));
        }
        for x in domain.elements() {
            for y in domain.up(x).iter() {
                if !codomain.leq(values[x], values[y]) {
                    return Err(Error::NotMonotone(
                        domain.name(x).to_owned(),
                        domain.name(y).to_owned(),
                    ));
                }
            }
        }
        Ok(Self::new_unchecked(domain, codomain, values))
    }

    pub(crate) fn new_unchecked(domain: &FiniteSpace, codomain: &FiniteSpace, values: Vec<usize>) -> Self {
        debug_assert_eq!(values.len(), domain.len());
        PosetMap {
            domain: domain.clone(),
            codomain: codomain.clone(),
            values,
        }
    }

    /// Builds a map from a name table; every domain element must appear.
    pub fn from_names<S: AsRef<str>>(
        domain: &FiniteSpace,
        codomain: &FiniteSpace,
        table: &[(S, S)],
    ) -> Result<Self> {
        let mut values = vec![usize::MAX; domain.len()];
        for (a, b) in table {
            let x = domain
                .index_of(a.as_ref())
                .ok_or_else(|| Error::UnknownElement(a.as_ref().to_owned()))?;
            let y = codomain
                .index_of(b.as_ref())
                .ok_or_else(|| Error::UnknownElement(b.as_ref().to_owned()))?;
            values[x] = y;
        }
        if let Some(x) = values.iter().position(|&v| v == usize::MAX) {
            return Err(Error::IncompleteMap(domain.name(x).to_owned()));
        }
        Self::new(domain, codomain, values)
    }

    pub fn identity(space: &FiniteSpace) -> Self {
        Self::new_unchecked(space, space, space.elements().collect())
    }

    pub fn constant(domain: &FiniteSpace, codomain: &FiniteSpace, y: usize) -> Self {
        assert!(y < codomain.len());
        Self::new_unchecked(domain, codomain, vec![y; domain.len()])
    }

    pub fn domain(&self) -> &FiniteSpace {
        &self.domain
    }

    pub fn codomain(&self) -> &FiniteSpace {
        &self.codomain
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.values[x]
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &PosetMap) -> Result<PosetMap> {
        if first.codomain != self.domain {
            return Err(Error::MismatchedSignature);
        }
        Ok(Self::new_unchecked(
            &first.domain,
            &self.codomain,
            first.values.iter().map(|&y| self.values[y]).collect(),
        ))
    }

    /// Pointwise order `self <= other`.
    pub fn pointwise_leq(&self, other: &PosetMap) -> bool {
        self.values
            .iter()
            .zip(&other.values)
            .all(|(&a, &b)| self.codomain.leq(a, b))
    }

    pub fn comparable(&self, other: &PosetMap) -> bool {
        self.pointwise_leq(other) || other.pointwise_leq(self)
    }

    pub fn same_signature(&self, other: &PosetMap) -> bool {
        self.domain == other.domain && self.codomain == other.codomain
    }

    pub fn image(&self) -> BitSet {
        BitSet::from_indices(self.codomain.len(), self.values.iter().copied())
    }

    /// Restriction along the inclusion of a subspace built by [`subspace`].
    pub fn restrict(&self, inclusion: &PosetMap) -> Result<PosetMap> {
        self.after(inclusion)
    }

    pub fn is_monotone(&self) -> bool {
        self.domain.elements().all(|x| {
            self.domain
                .up(x)
                .iter()
                .all(|y| self.codomain.leq(self.values[x], self.values[y]))
        })
    }

    pub fn to_name_table(&self) -> Vec<(String, String)> {
        self.values
            .iter()
            .enumerate()
            .map(|(x, &y)| (self.domain.name(x).to_owned(), self.codomain.name(y).to_owned()))
            .collect()
    }
}

/// `P × Q` with its projections.
#[derive(Clone, Debug)]
pub struct Product {
    pub space: FiniteSpace,
    pub left: FiniteSpace,
    pub right: FiniteSpace,
    pub proj1: PosetMap,
    pub proj2: PosetMap,
}

impl Product {
    #[inline]
    pub fn index(&self, a: usize, b: usize) -> usize {
        a * self.right.len() + b
    }

    /// `(f, g): Z → P × Q`.
    pub fn pair(&self, f: &PosetMap, g: &PosetMap) -> Result<PosetMap> {
        if f.domain != g.domain || f.codomain != self.left || g.codomain != self.right {
            return Err(Error::MismatchedSignature);
        }
        let values = f
            .values
            .iter()
            .zip(&g.values)
            .map(|(&a, &b)| self.index(a, b))
            .collect();
        Ok(PosetMap::new_unchecked(&f.domain, &self.space, values))
    }
}

pub fn product(p: &FiniteSpace, q: &FiniteSpace) -> Result<Product> {
    let (n, m) = (p.len(), q.len());
    check_size(n * m)?;
    let mut names = Vec::with_capacity(n * m);
    for a in 0..n {
        for b in 0..m {
            names.push(format!("({},{})", p.name(a), q.name(b)));
        }
    }
    let mut down = Vec::with_capacity(n * m);
    for a in 0..n {
        for b in 0..m {
            let mut d = BitSet::new(n * m);
            for x in p.down(a).iter() {
                for y in q.down(b).iter() {
                    d.insert(x * m + y);
                }
            }
            down.push(d);
        }
    }
    let space = FiniteSpace::from_down_sets(names, down)?;
    let proj1 = PosetMap::new_unchecked(&space, p, (0..n * m).map(|i| i / m).collect());
    let proj2 = PosetMap::new_unchecked(&space, q, (0..n * m).map(|i| i % m).collect());
    Ok(Product {
        space,
        left: p.clone(),
        right: q.clone(),
        proj1,
        proj2,
    })
}

/// `f × g: K × L → X × Y`, given the two product structures.
pub fn product_map(f: &PosetMap, g: &PosetMap, source: &Product, target: &Product) -> Result<PosetMap> {
    if f.domain != source.left || g.domain != source.right {
        return Err(Error::MismatchedSignature);
    }
    let a = f.after(&source.proj1)?;
    let b = g.after(&source.proj2)?;
    target.pair(&a, &b)
}

/// Diagonal `Δ: P → P × P` together with the product it lands in.
pub fn diagonal(p: &FiniteSpace) -> Result<(Product, PosetMap)> {
    let prod = product(p, p)?;
    let id = PosetMap::identity(p);
    let d = prod.pair(&id, &id)?;
    Ok((prod, d))
}

/// Subspace with the induced order, and its inclusion.
pub fn subspace(p: &FiniteSpace, members: &BitSet) -> Result<(FiniteSpace, PosetMap)> {
    if members.len() != p.len() {
        return Err(Error::Precondition("subset of a different space".into()));
    }
    let elems: Vec<usize> = members.iter().collect();
    let k = elems.len();
    let pos: HashMap<usize, usize> = elems.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let names = elems.iter().map(|&x| p.name(x).to_owned()).collect();
    let down = elems
        .iter()
        .map(|&x| BitSet::from_indices(k, p.down(x).iter().filter_map(|y| pos.get(&y).copied())))
        .collect();
    let sub = FiniteSpace::from_down_sets(names, down)?;
    let inc = PosetMap::new_unchecked(&sub, p, elems);
    Ok((sub, inc))
}

pub fn subspace_by_names<S: AsRef<str>>(p: &FiniteSpace, names: &[S]) -> Result<(FiniteSpace, PosetMap)> {
    let s = Subset::from_names(p, names)?;
    subspace(p, &s.members)
}

/// Result of beat point reduction.
#[derive(Clone, Debug)]
pub struct CoreReduction {
    pub core: FiniteSpace,
    /// `P → core`.
    pub retraction: PosetMap,
    /// `core → P`, the inclusion.
    pub section: PosetMap,
    /// Self-maps `e_1, …, e_k` of `P`, as value tables, where `e_t` collapses
    /// the first `t` removed beat points. Consecutive maps (with `e_0 = id`)
    /// are pointwise comparable and `e_k = section ∘ retraction`.
    pub steps: Vec<Vec<usize>>,
}

impl CoreReduction {
    /// `section ∘ retraction` as a value table on `P`.
    pub fn collapse(&self) -> Vec<usize> {
        self.retraction
            .values()
            .iter()
            .map(|&c| self.section.apply(c))
            .collect()
    }
}

/// Disjoint union `P ⊔ Q` with its two inclusions. Names are kept when the
/// two name sets are disjoint and prefixed with `0:` and `1:` otherwise.
pub fn coproduct(p: &FiniteSpace, q: &FiniteSpace) -> Result<(FiniteSpace, PosetMap, PosetMap)> {
    let (n, m) = (p.len(), q.len());
    let clash = q.names().iter().any(|x| p.index_of(x).is_some());
    let tag = |i: usize, x: &str| if clash { format!("{i}:{x}") } else { x.to_owned() };
    let mut names: Vec<String> = p.names().iter().map(|x| tag(0, x)).collect();
    names.extend(q.names().iter().map(|x| tag(1, x)));
    let mut down: Vec<BitSet> = p.elements().map(|x| BitSet::from_indices(n + m, p.down(x).iter())).collect();
    down.extend(q.elements().map(|y| BitSet::from_indices(n + m, q.down(y).iter().map(|z| z + n))));
    let sum = FiniteSpace::from_down_sets(names, down)?;
    let inl = PosetMap::new_unchecked(p, &sum, p.elements().collect());
    let inr = PosetMap::new_unchecked(q, &sum, q.elements().map(|y| y + n).collect());
    Ok((sum, inl, inr))
}

/// Removes beat points one at a time (lowest index first) until none remain.
pub fn core(p: &FiniteSpace) -> CoreReduction {
    let n = p.len();
    let mut alive = p.full_set();
    let mut current: Vec<usize> = (0..n).collect();
    let mut steps = Vec::new();
    'outer: loop {
        let candidates: Vec<usize> = alive.iter().collect();
        for x in candidates {
            if let Some(t) = p.beat_target(x, &alive) {
                alive.remove(x);
                for v in current.iter_mut() {
                    if *v == x {
                        *v = t;
                    }
                }
                steps.push(current.clone());
                continue 'outer;
            }
        }
        break;
    }
    let (core, section) = subspace(p, &alive).expect("subspace of a valid space");
    let pos: HashMap<usize, usize> = section.values().iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let retraction = PosetMap::new_unchecked(p, &core, current.iter().map(|v| pos[v]).collect());
    CoreReduction {
        core,
        retraction,
        section,
        steps,
    }
}

/// Adds one beat point to `p` next to `anchor`, returning the enlarged space,
/// the retraction onto `p` and the inclusion of `p`.
///
/// With `above = true` the new point `b` sits over `anchor` with strict
/// down-set `U_anchor`, and lies below every element of `attach` (which must
/// be an up-closed subset of the strict up-set of `anchor`). With
/// `above = false` the construction is dual.
pub fn add_beat_point(
    p: &FiniteSpace,
    anchor: usize,
    attach: &BitSet,
    above: bool,
) -> Result<(FiniteSpace, PosetMap, PosetMap)> {
    let n = p.len();
    let strict = if above {
        let mut s = p.up(anchor).clone();
        s.remove(anchor);
        s
    } else {
        let mut s = p.down(anchor).clone();
        s.remove(anchor);
        s
    };
    if !attach.is_subset(&strict) {
        return Err(Error::Precondition("attachment outside the anchor's star".into()));
    }
    let closed = if above {
        attach.iter().all(|y| p.up(y).is_subset(attach))
    } else {
        attach.iter().all(|y| p.down(y).is_subset(attach))
    };
    if !closed {
        return Err(Error::Precondition("attachment set is not closed".into()));
    }
    let b = n;
    let mut names = p.names().to_vec();
    names.push(fresh_name(p, &format!("{}'", p.name(anchor))));
    let mut down: Vec<BitSet> = (0..n)
        .map(|x| BitSet::from_indices(n + 1, p.down(x).iter()))
        .collect();
    if above {
        let mut db = BitSet::from_indices(n + 1, p.down(anchor).iter());
        db.insert(b);
        down.push(db);
        for y in attach.iter() {
            down[y].insert(b);
        }
    } else {
        let mut db = BitSet::from_indices(n + 1, attach.iter());
        db.insert(b);
        down.push(db);
        for y in p.up(anchor).iter() {
            down[y].insert(b);
        }
    }
    let big = FiniteSpace::from_down_sets(names, down)?;
    let mut r: Vec<usize> = (0..n).collect();
    r.push(anchor);
    let retraction = PosetMap::new(&big, p, r)?;
    let inclusion = PosetMap::new(p, &big, (0..n).collect())?;
    Ok((big, retraction, inclusion))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(p: &FiniteSpace, s: &BitSet) -> Vec<String> {
        s.iter().map(|x| p.name(x).to_owned()).collect()
    }

    #[test]
    fn singleton_space() {
        let p = FiniteSpace::build(&["a"], &[]).unwrap();
        assert_eq!(names(&p, p.down(0)), vec!["a"]);
        assert_eq!(p.maximal_points(), &[0]);
    }

    #[test]
    fn pseudocircle_structure() {
        let s = FiniteSpace::pseudocircle();
        let c = s.index_of("c").unwrap();
        let d = s.index_of("d").unwrap();
        assert_eq!(s.maximal_points(), &[c, d]);
        assert_eq!(names(&s, s.down(c)), vec!["a", "b", "c"]);
        assert_eq!(names(&s, s.down(d)), vec!["a", "b", "d"]);
        assert_eq!(s.covers().len(), 4);
        assert_eq!(s.height(), Some(1));
    }

    #[test]
    fn cycle_is_rejected() {
        let e = FiniteSpace::build(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap_err();
        assert_eq!(e, Error::Cycle("a".into(), "b".into()));
        let e = FiniteSpace::build(&["a", "a"], &[]).unwrap_err();
        assert_eq!(e, Error::DuplicateElement("a".into()));
    }

    #[test]
    fn non_cover_relations_are_reduced() {
        let p = FiniteSpace::build(&["x", "y", "z"], &[("x", "y"), ("y", "z"), ("x", "z")]).unwrap();
        assert_eq!(p.covers(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn check_map_examples() {
        let s = FiniteSpace::pseudocircle();
        assert!(PosetMap::new(&s, &s, vec![0, 1, 2, 3]).is_ok());
        let e = PosetMap::from_names(&s, &s, &[("a", "c"), ("b", "b"), ("c", "a"), ("d", "d")]).unwrap_err();
        assert_eq!(e, Error::NotMonotone("a".into(), "c".into()));
        for y in 0..4 {
            assert!(PosetMap::new(&s, &s, vec![y; 4]).is_ok());
        }
    }

    #[test]
    fn product_examples() {
        let s = FiniteSpace::pseudocircle();
        let pt = FiniteSpace::point();
        let ps = product(&pt, &s).unwrap();
        assert_eq!(ps.space.len(), 4);
        for x in 0..4 {
            for y in 0..4 {
                assert_eq!(ps.space.leq(x, y), s.leq(x, y));
            }
        }
        let ss = product(&s, &s).unwrap();
        assert_eq!(ss.space.len(), 16);
        assert_eq!(ss.space.maximal_points().len(), 4);
        let (prod, d) = diagonal(&s).unwrap();
        assert_eq!(prod.proj1.after(&d).unwrap(), PosetMap::identity(&s));
        assert_eq!(prod.proj2.after(&d).unwrap(), PosetMap::identity(&s));
        assert_eq!(d.image().count(), 4);
    }

    #[test]
    fn product_size_limit() {
        let c = FiniteSpace::chain(9).unwrap();
        assert!(matches!(product(&c, &c), Err(Error::SizeLimit { size: 81, .. })));
    }

    #[test]
    fn subspace_examples() {
        let s = FiniteSpace::pseudocircle();
        let (full, inc) = subspace(&s, &s.full_set()).unwrap();
        assert_eq!(full, s);
        assert!(inc.is_monotone());
        let (cd, _) = subspace_by_names(&s, &["c", "d"]).unwrap();
        assert_eq!(cd.len(), 2);
        assert!(cd.covers().is_empty());
        let (e, _) = subspace(&s, &s.empty_set()).unwrap();
        assert!(e.is_empty());
        assert!(matches!(
            subspace_by_names(&s, &["q"]),
            Err(Error::UnknownElement(_))
        ));
    }

    #[test]
    fn core_examples() {
        let c = FiniteSpace::chain(3).unwrap();
        assert_eq!(core(&c).core.len(), 1);
        let s = FiniteSpace::pseudocircle();
        for x in s.elements() {
            assert!(!s.is_beat_point(x));
        }
        assert_eq!(core(&s).core, s);
        let cone = s.cone().unwrap();
        assert_eq!(core(&cone).core.len(), 1);
    }

    #[test]
    fn core_steps_are_a_fence_to_the_collapse() {
        let s = FiniteSpace::pseudocircle();
        let (big, _, _) = add_beat_point(&s, 2, &s.empty_set(), true).unwrap();
        let (big, _, _) = add_beat_point(&big, 0, &BitSet::new(big.len()), false).unwrap();
        let red = core(&big);
        assert_eq!(red.core.len(), 4);
        let mut prev: Vec<usize> = big.elements().collect();
        for step in &red.steps {
            let a = PosetMap::new(&big, &big, prev.clone()).unwrap();
            let b = PosetMap::new(&big, &big, step.clone()).unwrap();
            assert!(a.comparable(&b));
            prev = step.clone();
        }
        assert_eq!(prev, red.collapse());
        assert_eq!(red.retraction.after(&red.section).unwrap(), PosetMap::identity(&red.core));
    }

    #[test]
    fn components_examples() {
        assert_eq!(FiniteSpace::pseudocircle().components().len(), 1);
        assert_eq!(FiniteSpace::antichain(2).unwrap().components().len(), 2);
        assert_eq!(FiniteSpace::empty().components().len(), 0);
    }

    #[test]
    fn beat_point_enlargement_retracts() {
        let s = FiniteSpace::pseudocircle();
        let c = s.index_of("c").unwrap();
        let (big, r, i) = add_beat_point(&s, c, &s.empty_set(), true).unwrap();
        assert_eq!(big.len(), 5);
        assert_eq!(r.after(&i).unwrap(), PosetMap::identity(&s));
        assert!(big.is_beat_point(4));
        let a = s.index_of("a").unwrap();
        let mut attach = s.empty_set();
        attach.insert(c);
        assert!(add_beat_point(&s, a, &attach, true).is_ok());
    }
}
