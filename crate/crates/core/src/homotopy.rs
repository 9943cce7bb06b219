//! Homotopy of maps between finite spaces.
//!
//! Two maps `f, g: P → Q` are homotopic iff they lie in the same connected
//! component of the poset of all order-preserving maps `P → Q` under the
//! pointwise order. Certificates are fences `f = h_0, h_1, …, h_m = g` of
//! pairwise comparable consecutive maps.
//!
//! Decisions first replace `P` and `Q` by their cores, which shrinks the
//! search dramatically, and then run a breadth-first search whose moves change
//! the value of a single point to a comparable value. The reduced fence is
//! lifted back through the beat point collapses, so certificates always live
//! in the original hom-poset.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use log::warn;

use crate::error::{Error, Result};
use crate::poset::{core, CoreReduction, FiniteSpace, PosetMap};

pub const DEFAULT_MAX_MAPS: usize = 2_000_000;

/// A sequence of pairwise comparable maps with common signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fence {
    pub steps: Vec<PosetMap>,
}

impl Fence {
    pub fn trivial(f: &PosetMap) -> Self {
        Fence {
            steps: vec![f.clone()],
        }
    }

    /// Number of moves.
    pub fn len(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn reversed(&self) -> Fence {
        let mut steps = self.steps.clone();
        steps.reverse();
        Fence { steps }
    }

    /// Checks the fence independently of how it was produced.
    pub fn validate(&self, from: &PosetMap, to: &PosetMap) -> std::result::Result<(), String> {
        let (Some(first), Some(last)) = (self.steps.first(), self.steps.last()) else {
            return Err("empty fence".into());
        };
        if first != from {
            return Err("fence does not start at the source map".into());
        }
        if last != to {
            return Err("fence does not end at the target map".into());
        }
        for (i, h) in self.steps.iter().enumerate() {
            if !h.same_signature(from) {
                return Err(format!("step {i} has the wrong signature"));
            }
            if !h.is_monotone() {
                return Err(format!("step {i} is not order-preserving"));
            }
        }
        for (i, w) in self.steps.windows(2).enumerate() {
            if !w[0].comparable(&w[1]) {
                return Err(format!("steps {i} and {} are not comparable", i + 1));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct HomotopyConfig {
    /// Cap on the number of maps visited by one search or enumeration.
    pub max_maps: usize,
    /// Re-check every negative answer against the exhaustive hom-poset oracle.
    pub oracle_fallback: bool,
    pub deadline: Option<Instant>,
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        HomotopyConfig {
            max_maps: DEFAULT_MAX_MAPS,
            oracle_fallback: false,
            deadline: None,
        }
    }
}

type DecisionKey = (u64, u64, Vec<usize>, Vec<usize>);

/// Configuration, memo and counters shared by every homotopy decision of one
/// computation. Safe to share between threads.
#[derive(Debug, Default)]
pub struct HomotopyContext {
    pub config: HomotopyConfig,
    memo: Mutex<HashMap<DecisionKey, Option<Fence>>>,
    visited: AtomicUsize,
    fallback_disagreements: AtomicUsize,
}

impl HomotopyContext {
    pub fn new(config: HomotopyConfig) -> Self {
        HomotopyContext {
            config,
            ..Default::default()
        }
    }

    /// Total maps visited by searches so far.
    pub fn maps_visited(&self) -> usize {
        self.visited.load(Ordering::Relaxed)
    }

    /// Instances where the move search said "no" but the oracle said "yes".
    pub fn fallback_disagreements(&self) -> usize {
        self.fallback_disagreements.load(Ordering::Relaxed)
    }

    pub(crate) fn check_deadline(&self) -> Result<()> {
        match self.config.deadline {
            Some(d) if Instant::now() >= d => Err(Error::Timeout { bracket: None }),
            _ => Ok(()),
        }
    }

    fn budget_error(&self) -> Error {
        Error::SearchBudgetExceeded {
            budget: self.config.max_maps,
            bracket: None,
        }
    }
}

/// Order data of a hom-poset `Hom(P, Q)` used by the searches.
pub(crate) struct HomShape {
    lower: Vec<Vec<usize>>,
    upper: Vec<Vec<usize>>,
    order: Vec<usize>,
    comparable: Vec<Vec<u16>>,
    cod: FiniteSpace,
}

impl HomShape {
    pub(crate) fn new(dom: &FiniteSpace, cod: &FiniteSpace) -> Self {
        let n = dom.len();
        let mut lower = vec![Vec::new(); n];
        let mut upper = vec![Vec::new(); n];
        for &(a, b) in dom.covers() {
            lower[b].push(a);
            upper[a].push(b);
        }
        let comparable = cod
            .elements()
            .map(|y| {
                cod.elements()
                    .filter(|&z| z != y && cod.comparable(y, z))
                    .map(|z| z as u16)
                    .collect()
            })
            .collect();
        HomShape {
            lower,
            upper,
            order: dom.linear_extension().to_vec(),
            comparable,
            cod: cod.clone(),
        }
    }

    /// Single-point moves from `f` that stay order-preserving.
    pub(crate) fn neighbours<'a>(&'a self, f: &'a [u16]) -> impl Iterator<Item = Vec<u16>> + 'a {
        (0..f.len()).flat_map(move |x| {
            self.comparable[f[x] as usize].iter().filter_map(move |&v| {
                let ok = self.lower[x]
                    .iter()
                    .all(|&w| self.cod.leq(f[w] as usize, v as usize))
                    && self.upper[x]
                        .iter()
                        .all(|&w| self.cod.leq(v as usize, f[w] as usize));
                ok.then(|| {
                    let mut g = f.to_vec();
                    g[x] = v;
                    g
                })
            })
        })
    }

    /// All order-preserving maps, in lexicographic order of the linear extension.
    fn enumerate(&self, ctx: &HomotopyContext) -> Result<Vec<Vec<u16>>> {
        let n = self.order.len();
        let m = self.cod.len();
        let mut out = Vec::new();
        if n == 0 {
            out.push(Vec::new());
            return Ok(out);
        }
        if m == 0 {
            return Ok(out);
        }
        let mut f = vec![0u16; n];
        let mut choice = vec![0usize; n];
        let mut depth = 0;
        loop {
            let x = self.order[depth];
            let mut found = false;
            while choice[depth] < m {
                let v = choice[depth];
                choice[depth] += 1;
                if self.lower[x].iter().all(|&w| self.cod.leq(f[w] as usize, v)) {
                    f[x] = v as u16;
                    found = true;
                    break;
                }
            }
            if found {
                if depth + 1 == n {
                    out.push(f.clone());
                    if out.len() > ctx.config.max_maps {
                        return Err(ctx.budget_error());
                    }
                } else {
                    depth += 1;
                    choice[depth] = 0;
                }
            } else if depth == 0 {
                break;
            } else {
                depth -= 1;
            }
        }
        ctx.visited.fetch_add(out.len(), Ordering::Relaxed);
        Ok(out)
    }
}

fn to_u16(v: &[usize]) -> Vec<u16> {
    v.iter().map(|&x| x as u16).collect()
}

fn to_usize(v: &[u16]) -> Vec<usize> {
    v.iter().map(|&x| x as usize).collect()
}

/// A connected component of a hom-poset explored breadth-first, with a
/// spanning tree rooted at the start map.
pub(crate) struct Component {
    index: HashMap<Vec<u16>, u32>,
    nodes: Vec<(Vec<u16>, u32)>,
    pub(crate) hit: Option<Vec<usize>>,
}

impl Component {
    /// Explores from `start`; stops early once any map in `stop_at` is
    /// reached, recording it as `hit`.
    pub(crate) fn explore(
        shape: &HomShape,
        start: &[usize],
        stop_at: &[Vec<usize>],
        ctx: &HomotopyContext,
    ) -> Result<Self> {
        let root = to_u16(start);
        let targets: HashSet<Vec<u16>> = stop_at.iter().map(|t| to_u16(t)).collect();
        let mut index = HashMap::new();
        let mut nodes = Vec::new();
        index.insert(root.clone(), 0u32);
        let mut hit = targets.contains(&root).then(|| start.to_vec());
        nodes.push((root, u32::MAX));
        let mut queue = VecDeque::from([0u32]);
        let mut fresh = 0usize;
        'bfs: while let Some(i) = queue.pop_front() {
            if hit.is_some() {
                break;
            }
            if i % 1024 == 0 {
                ctx.check_deadline()?;
            }
            let current = nodes[i as usize].0.clone();
            for g in shape.neighbours(&current) {
                if index.contains_key(&g) {
                    continue;
                }
                let k = nodes.len() as u32;
                index.insert(g.clone(), k);
                if targets.contains(&g) {
                    hit = Some(to_usize(&g));
                }
                nodes.push((g, i));
                fresh += 1;
                if nodes.len() > ctx.config.max_maps {
                    ctx.visited.fetch_add(fresh, Ordering::Relaxed);
                    return Err(ctx.budget_error());
                }
                if hit.is_some() {
                    break 'bfs;
                }
                queue.push_back(k);
            }
        }
        ctx.visited.fetch_add(fresh + 1, Ordering::Relaxed);
        Ok(Component { index, nodes, hit })
    }

    pub(crate) fn contains(&self, f: &[usize]) -> bool {
        self.index.contains_key(&to_u16(f))
    }

    /// Tree path from `f` back to the root, `f` first.
    pub(crate) fn path_to_root(&self, f: &[usize]) -> Option<Vec<Vec<usize>>> {
        let mut i = *self.index.get(&to_u16(f))?;
        let mut path = Vec::new();
        loop {
            let (state, parent) = &self.nodes[i as usize];
            path.push(to_usize(state));
            if *parent == u32::MAX {
                return Some(path);
            }
            i = *parent;
        }
    }
}

/// Reduction of `Hom(P, Q)` to `Hom(core P, core Q)`.
pub(crate) struct Reduced {
    pub dom: CoreReduction,
    pub cod: CoreReduction,
    pub shape: HomShape,
}

impl Reduced {
    pub(crate) fn new(dom: &FiniteSpace, cod: &FiniteSpace) -> Self {
        Self::from_reductions(core(dom), core(cod))
    }

    pub(crate) fn from_reductions(dom: CoreReduction, cod: CoreReduction) -> Self {
        let shape = HomShape::new(&dom.core, &cod.core);
        Reduced { dom, cod, shape }
    }

    /// `r_Q ∘ f ∘ i_P` as a value table on `core P`.
    pub(crate) fn reduce(&self, f: &PosetMap) -> Vec<usize> {
        self.dom
            .section
            .values()
            .iter()
            .map(|&x| self.cod.retraction.apply(f.apply(x)))
            .collect()
    }

    /// `f ≃ … ≃ e^Q ∘ f ∘ e^P` through the collapse steps, `f` first.
    fn collapse_fence(&self, f: &PosetMap) -> Vec<Vec<usize>> {
        let base: Vec<usize> = f.values().to_vec();
        let mut out = vec![base.clone()];
        for e in &self.dom.steps {
            out.push(e.iter().map(|&x| base[x]).collect());
        }
        let collapsed_dom: Vec<usize> = out.last().unwrap().clone();
        for e in &self.cod.steps {
            out.push(collapsed_dom.iter().map(|&y| e[y]).collect());
        }
        out
    }

    /// `j_Q ∘ h ∘ ρ_P` for a reduced map `h`.
    fn lift(&self, h: &[usize]) -> Vec<usize> {
        self.dom
            .retraction
            .values()
            .iter()
            .map(|&c| self.cod.section.apply(h[c]))
            .collect()
    }

    /// Full fence from `f` to `g` given a reduced fence from `reduce(f)` to
    /// `reduce(g)`.
    pub(crate) fn lift_fence(&self, f: &PosetMap, g: &PosetMap, reduced: &[Vec<usize>]) -> Fence {
        let mut tables = self.collapse_fence(f);
        tables.extend(reduced.iter().map(|h| self.lift(h)));
        let mut back = self.collapse_fence(g);
        back.reverse();
        tables.extend(back);
        tables.dedup();
        Fence {
            steps: tables
                .into_iter()
                .map(|t| PosetMap::new_unchecked(f.domain(), f.codomain(), t))
                .collect(),
        }
    }
}

/// Decides `f ≃ g`, returning a fence when they are homotopic.
pub fn homotopic(ctx: &HomotopyContext, f: &PosetMap, g: &PosetMap) -> Result<Option<Fence>> {
    if !f.same_signature(g) {
        return Err(Error::MismatchedSignature);
    }
    if f == g {
        return Ok(Some(Fence::trivial(f)));
    }
    let key = (
        f.domain().fingerprint(),
        f.codomain().fingerprint(),
        f.values().to_vec(),
        g.values().to_vec(),
    );
    if let Some(hit) = ctx.memo.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let red = Reduced::new(f.domain(), f.codomain());
    let answer = decide_reduced(ctx, &red, f, g)?;
    ctx.memo.lock().unwrap().insert(key, answer.clone());
    Ok(answer)
}

pub(crate) fn decide_reduced(
    ctx: &HomotopyContext,
    red: &Reduced,
    f: &PosetMap,
    g: &PosetMap,
) -> Result<Option<Fence>> {
    let (rf, rg) = (red.reduce(f), red.reduce(g));
    // retry from the other end when the first component overflows
    let found = match Component::explore(&red.shape, &rf, std::slice::from_ref(&rg), ctx) {
        Ok(comp) => comp.path_to_root(&rg).map(|mut path| {
            path.reverse();
            path
        }),
        Err(e @ Error::SearchBudgetExceeded { .. }) => {
            let comp = Component::explore(&red.shape, &rg, std::slice::from_ref(&rf), ctx).map_err(|_| e)?;
            comp.path_to_root(&rf)
        }
        Err(e) => return Err(e),
    };
    if let Some(path) = found {
        return Ok(Some(red.lift_fence(f, g, &path)));
    }
    if ctx.config.oracle_fallback {
        if let Some(fence) = oracle_fence(ctx, f, g)? {
            ctx.fallback_disagreements.fetch_add(1, Ordering::Relaxed);
            warn!(
                "single-point moves missed a homotopy that the hom-poset oracle found: {:?} ~ {:?}",
                f, g
            );
            return Ok(Some(fence));
        }
    }
    Ok(None)
}

/// Decides whether `f` is homotopic to a constant map; returns the fence and
/// the constant's value.
pub fn nullhomotopic(ctx: &HomotopyContext, f: &PosetMap) -> Result<Option<(Fence, usize)>> {
    let dom = f.domain();
    let cod = f.codomain();
    if dom.is_empty() {
        return Ok(if cod.is_empty() {
            None
        } else {
            Some((Fence::trivial(f), 0))
        });
    }
    let labels = cod.component_labels();
    let comp = labels[f.apply(0)];
    if f.values().iter().any(|&y| labels[y] != comp) {
        return Ok(None);
    }
    // any constant in the image's component is equivalent; prefer the image
    // of a maximal point
    let base = f.apply(dom.maximal_points()[0]);
    let c = PosetMap::constant(dom, cod, base);
    Ok(homotopic(ctx, f, &c)?.map(|fence| (fence, base)))
}

/// Exhaustive partition of `Hom(P, Q)` into homotopy classes.
pub fn hom_components(ctx: &HomotopyContext, p: &FiniteSpace, q: &FiniteSpace) -> Result<Vec<Vec<PosetMap>>> {
    let shape = HomShape::new(p, q);
    let maps = shape.enumerate(ctx)?;
    let classes = classify(&shape, &maps);
    let mut groups: Vec<Vec<PosetMap>> = Vec::new();
    let mut slot = HashMap::new();
    for (m, c) in maps.iter().zip(classes) {
        let k = *slot.entry(c).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[k].push(PosetMap::new_unchecked(p, q, to_usize(m)));
    }
    Ok(groups)
}

const PAIRWISE_LIMIT: usize = 4096;

/// Union-find over the comparability graph. Small hom-sets compare every
/// pair; larger ones join each map to its single-point neighbours, which
/// generates the same components.
fn classify(shape: &HomShape, maps: &[Vec<u16>]) -> Vec<usize> {
    let n = maps.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let join = |a: usize, b: usize, parent: &mut Vec<usize>| {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    };
    let leq = |a: &[u16], b: &[u16]| a.iter().zip(b).all(|(&x, &y)| shape.cod.leq(x as usize, y as usize));
    if n <= PAIRWISE_LIMIT {
        for i in 0..n {
            for j in i + 1..n {
                if leq(&maps[i], &maps[j]) || leq(&maps[j], &maps[i]) {
                    join(i, j, &mut parent);
                }
            }
        }
    } else {
        let index: HashMap<&[u16], usize> = maps.iter().enumerate().map(|(i, m)| (m.as_slice(), i)).collect();
        for (i, m) in maps.iter().enumerate() {
            for g in shape.neighbours(m) {
                if let Some(&j) = index.get(g.as_slice()) {
                    join(i, j, &mut parent);
                }
            }
        }
    }
    (0..n).map(|i| find(&mut parent, i)).collect()
}

/// Oracle decision with a fence found by breadth-first search over the full
/// comparability graph of `Hom(P, Q)`.
pub fn oracle_fence(ctx: &HomotopyContext, f: &PosetMap, g: &PosetMap) -> Result<Option<Fence>> {
    if !f.same_signature(g) {
        return Err(Error::MismatchedSignature);
    }
    let shape = HomShape::new(f.domain(), f.codomain());
    let maps = shape.enumerate(ctx)?;
    let (a, b) = (to_u16(f.values()), to_u16(g.values()));
    let (Some(s), Some(t)) = (
        maps.iter().position(|m| *m == a),
        maps.iter().position(|m| *m == b),
    ) else {
        return Ok(None);
    };
    let leq = |x: &[u16], y: &[u16]| x.iter().zip(y).all(|(&u, &v)| shape.cod.leq(u as usize, v as usize));
    let mut parent = vec![usize::MAX; maps.len()];
    parent[s] = s;
    let mut queue = VecDeque::from([s]);
    while let Some(i) = queue.pop_front() {
        if i == t {
            break;
        }
        for j in 0..maps.len() {
            if parent[j] == usize::MAX && (leq(&maps[i], &maps[j]) || leq(&maps[j], &maps[i])) {
                parent[j] = i;
                queue.push_back(j);
            }
        }
    }
    if parent[t] == usize::MAX {
        return Ok(None);
    }
    let mut path = vec![t];
    while *path.last().unwrap() != s {
        path.push(parent[*path.last().unwrap()]);
    }
    path.reverse();
    Ok(Some(Fence {
        steps: path
            .into_iter()
            .map(|i| PosetMap::new_unchecked(f.domain(), f.codomain(), to_usize(&maps[i])))
            .collect(),
    }))
}

/// Number of order-preserving maps `P → Q`.
pub fn count_maps(ctx: &HomotopyContext, p: &FiniteSpace, q: &FiniteSpace) -> Result<usize> {
    Ok(HomShape::new(p, q).enumerate(ctx)?.len())
}

/// All order-preserving maps `P → Q`.
pub fn all_maps(ctx: &HomotopyContext, p: &FiniteSpace, q: &FiniteSpace) -> Result<Vec<PosetMap>> {
    Ok(HomShape::new(p, q)
        .enumerate(ctx)?
        .iter()
        .map(|m| PosetMap::new_unchecked(p, q, to_usize(m)))
        .collect())
}

pub(crate) fn enumerate_tables(ctx: &HomotopyContext, shape: &HomShape) -> Result<Vec<Vec<usize>>> {
    Ok(shape.enumerate(ctx)?.iter().map(|m| to_usize(m)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::subspace_by_names;

    fn ctx() -> HomotopyContext {
        HomotopyContext::default()
    }

    #[test]
    fn equal_maps_give_empty_fence() {
        let s = FiniteSpace::pseudocircle();
        let id = PosetMap::identity(&s);
        let fence = homotopic(&ctx(), &id, &id).unwrap().unwrap();
        assert_eq!(fence.len(), 0);
    }

    #[test]
    fn constants_in_one_component_are_homotopic() {
        let s = FiniteSpace::pseudocircle();
        let c = PosetMap::constant(&s, &s, 0);
        let d = PosetMap::constant(&s, &s, 1);
        let fence = homotopic(&ctx(), &c, &d).unwrap().unwrap();
        fence.validate(&c, &d).unwrap();
    }

    #[test]
    fn identity_of_pseudocircle_is_not_null_homotopic() {
        let s = FiniteSpace::pseudocircle();
        let id = PosetMap::identity(&s);
        for y in s.elements() {
            assert!(homotopic(&ctx(), &id, &PosetMap::constant(&s, &s, y)).unwrap().is_none());
        }
        assert!(nullhomotopic(&ctx(), &id).unwrap().is_none());
        // oracle: the class of id in Hom(S, S) is a singleton
        let classes = hom_components(&ctx(), &s, &s).unwrap();
        let class_of_id = classes.iter().find(|c| c.contains(&id)).unwrap();
        assert_eq!(class_of_id.len(), 1);
    }

    #[test]
    fn minimal_open_inclusion_is_null_homotopic_at_c() {
        let s = FiniteSpace::pseudocircle();
        let (u, inc) = subspace_by_names(&s, &["a", "b", "c"]).unwrap();
        let (fence, base) = nullhomotopic(&ctx(), &inc).unwrap().unwrap();
        assert_eq!(s.name(base), "c");
        fence.validate(&inc, &PosetMap::constant(&u, &s, base)).unwrap();
    }

    #[test]
    fn hom_components_examples() {
        let c = ctx();
        let s = FiniteSpace::pseudocircle();
        let pt = FiniteSpace::point();
        assert_eq!(hom_components(&c, &pt, &s).unwrap().len(), 1);
        let two = FiniteSpace::antichain(2).unwrap();
        assert_eq!(hom_components(&c, &pt, &two).unwrap().len(), 2);
        let chain = FiniteSpace::chain(3).unwrap();
        assert_eq!(hom_components(&c, &s, &chain).unwrap().len(), 1);
    }

    #[test]
    fn mismatched_signature() {
        let s = FiniteSpace::pseudocircle();
        let pt = FiniteSpace::point();
        let f = PosetMap::identity(&s);
        let g = PosetMap::identity(&pt);
        assert_eq!(homotopic(&ctx(), &f, &g).unwrap_err(), Error::MismatchedSignature);
    }

    #[test]
    fn budget_is_an_error_not_false() {
        let cfg = HomotopyConfig {
            max_maps: 3,
            ..Default::default()
        };
        let c = HomotopyContext::new(cfg);
        let s = FiniteSpace::pseudocircle();
        assert!(matches!(
            hom_components(&c, &s, &s),
            Err(Error::SearchBudgetExceeded { budget: 3, .. })
        ));
    }
}
