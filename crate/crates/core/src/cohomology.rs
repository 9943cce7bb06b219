//! Mod 2 cohomology of order complexes.
//!
//! A finite space is weakly equivalent to the simplicial complex of its
//! chains, so its singular cohomology is computed there. Simplices are stored
//! with vertices in increasing order, and the cup product uses the usual
//! front face / back face formula on that order.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::bits::{kernel, BitSet, Echelon};
use crate::engine::Cospan;
use crate::error::{Error, Result};
use crate::poset::{core, FiniteSpace, PosetMap};

pub const MAX_SIMPLICES: usize = 400_000;

/// Simplicial complex of nonempty chains.
#[derive(Debug)]
pub struct OrderComplex {
    pub space: FiniteSpace,
    simplices: Vec<Vec<Vec<usize>>>,
    index: Vec<HashMap<Vec<usize>, usize>>,
}

impl OrderComplex {
    pub fn new(p: &FiniteSpace) -> Result<Self> {
        let mut simplices: Vec<Vec<Vec<usize>>> = Vec::new();
        let mut layer: Vec<Vec<usize>> = p.linear_extension().iter().map(|&x| vec![x]).collect();
        layer.sort();
        let mut total = 0;
        while !layer.is_empty() {
            total += layer.len();
            if total > MAX_SIMPLICES {
                return Err(Error::SizeLimit {
                    size: total,
                    limit: MAX_SIMPLICES,
                });
            }
            let mut next = Vec::new();
            for chain in &layer {
                let top = *chain.last().unwrap();
                for y in p.up(top).iter().filter(|&y| y != top) {
                    let mut c = chain.clone();
                    c.push(y);
                    next.push(c);
                }
            }
            next.sort();
            simplices.push(std::mem::replace(&mut layer, next));
        }
        let index = simplices
            .iter()
            .map(|l| l.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect())
            .collect();
        Ok(OrderComplex {
            space: p.clone(),
            simplices,
            index,
        })
    }

    /// `None` for the empty complex.
    pub fn dim(&self) -> Option<usize> {
        self.simplices.len().checked_sub(1)
    }

    pub fn count(&self, dim: usize) -> usize {
        self.simplices.get(dim).map_or(0, Vec::len)
    }

    pub fn simplices(&self, dim: usize) -> &[Vec<usize>] {
        self.simplices.get(dim).map_or(&[], Vec::as_slice)
    }

    pub fn index_of(&self, simplex: &[usize]) -> Option<usize> {
        self.index.get(simplex.len().checked_sub(1)?)?.get(simplex).copied()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.simplices
            .iter()
            .enumerate()
            .map(|(i, l)| if i % 2 == 0 { l.len() as i64 } else { -(l.len() as i64) })
            .sum()
    }

    /// Rows of `δ^i: C^i → C^{i+1}`, one per `(i+1)`-simplex.
    pub fn coboundary_rows(&self, i: usize) -> Vec<BitSet> {
        let width = self.count(i);
        self.simplices(i + 1)
            .iter()
            .map(|s| {
                BitSet::from_indices(
                    width,
                    (0..s.len()).map(|drop| {
                        let face: Vec<usize> = s.iter().enumerate().filter(|&(j, _)| j != drop).map(|(_, &v)| v).collect();
                        self.index[i][&face]
                    }),
                )
            })
            .collect()
    }

    pub fn coboundary(&self, i: usize, c: &BitSet) -> BitSet {
        let rows = self.coboundary_rows(i);
        BitSet::from_indices(rows.len(), rows.iter().enumerate().filter(|(_, r)| r.dot(c)).map(|(k, _)| k))
    }

    /// Cochain-level cup product of a `p`-cochain and a `q`-cochain.
    pub fn cup_cochains(&self, p: usize, alpha: &BitSet, q: usize, beta: &BitSet) -> BitSet {
        let d = p + q;
        let mut out = BitSet::new(self.count(d));
        for (k, s) in self.simplices(d).iter().enumerate() {
            let front = self.index[p][&s[..=p]];
            let back = self.index[q][&s[p..]];
            if alpha.contains(front) && beta.contains(back) {
                out.insert(k);
            }
        }
        out
    }

    /// `f^♯ c`: pulls back an `i`-cochain on the target complex along `f`;
    /// simplices with degenerate image get zero.
    pub fn pull_back(&self, f: &PosetMap, target: &OrderComplex, i: usize, c: &BitSet) -> BitSet {
        let mut out = BitSet::new(self.count(i));
        for (k, s) in self.simplices(i).iter().enumerate() {
            let image: Vec<usize> = s.iter().map(|&v| f.apply(v)).collect();
            if image.windows(2).any(|w| w[0] == w[1]) {
                continue;
            }
            if let Some(j) = target.index_of(&image) {
                if c.contains(j) {
                    out.insert(k);
                }
            }
        }
        out
    }
}

/// A homogeneous cohomology class in coordinates of the chosen basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Class {
    pub degree: usize,
    pub coords: BitSet,
}

impl Class {
    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }
}

#[derive(Debug)]
struct Degree {
    /// Cocycle representatives of the basis classes.
    reps: Vec<BitSet>,
    /// Coboundaries (tag 0) plus representatives (tagged by class).
    reducer: Echelon,
}

/// Graded mod 2 cohomology ring with cup-product structure constants.
#[derive(Debug)]
pub struct CohomologyRing {
    pub complex: OrderComplex,
    degrees: Vec<Degree>,
    /// `(p, i, q, j)` ↦ coordinates of `e^p_i ⌣ e^q_j`.
    table: HashMap<(usize, usize, usize, usize), BitSet>,
}

impl CohomologyRing {
    pub fn new(p: &FiniteSpace) -> Result<Self> {
        let complex = OrderComplex::new(p)?;
        let top = complex.dim().map_or(0, |d| d + 1);
        let mut degrees = Vec::with_capacity(top);
        for i in 0..top {
            let width = complex.count(i);
            let cocycles = kernel(&complex.coboundary_rows(i), width);
            let boundaries: Vec<BitSet> = if i == 0 {
                Vec::new()
            } else {
                // columns of δ^{i-1}: each (i-1)-simplex hits its cofaces
                let rows = complex.coboundary_rows(i - 1);
                (0..complex.count(i - 1))
                    .map(|t| BitSet::from_indices(width, rows.iter().enumerate().filter(|(_, r)| r.contains(t)).map(|(k, _)| k)))
                    .collect()
            };
            let mut probe = Echelon::new(width, 0);
            for b in &boundaries {
                probe.insert(b, BitSet::new(0));
            }
            let reps: Vec<BitSet> = cocycles
                .into_iter()
                .filter(|z| probe.insert(z, BitSet::new(0)))
                .collect();
            let mut reducer = Echelon::new(width, reps.len());
            for b in &boundaries {
                reducer.insert(b, BitSet::new(reps.len()));
            }
            for (k, z) in reps.iter().enumerate() {
                let inserted = reducer.insert(z, BitSet::unit(reps.len(), k));
                debug_assert!(inserted);
            }
            degrees.push(Degree { reps, reducer });
        }
        let mut ring = CohomologyRing {
            complex,
            degrees,
            table: HashMap::new(),
        };
        ring.fill_table();
        Ok(ring)
    }

    fn fill_table(&mut self) {
        let top = self.degrees.len();
        let mut table = HashMap::new();
        for p in 0..top {
            for q in 0..top - p {
                for (i, a) in self.degrees[p].reps.iter().enumerate() {
                    for (j, b) in self.degrees[q].reps.iter().enumerate() {
                        let c = self.complex.cup_cochains(p, a, q, b);
                        let coords = self.coordinates(p + q, &c).expect("cup of cocycles is a cocycle");
                        table.insert((p, i, q, j), coords.coords);
                    }
                }
            }
        }
        self.table = table;
    }

    /// Highest degree with a nonzero cochain group, plus one.
    pub fn top(&self) -> usize {
        self.degrees.len()
    }

    pub fn rank(&self, i: usize) -> usize {
        self.degrees.get(i).map_or(0, |d| d.reps.len())
    }

    pub fn betti_numbers(&self) -> Vec<usize> {
        let mut b: Vec<usize> = (0..self.top()).map(|i| self.rank(i)).collect();
        while b.len() > 1 && *b.last().unwrap() == 0 {
            b.pop();
        }
        b
    }

    pub fn representative(&self, i: usize, k: usize) -> &BitSet {
        &self.degrees[i].reps[k]
    }

    pub fn basis(&self, i: usize, k: usize) -> Class {
        Class {
            degree: i,
            coords: BitSet::unit(self.rank(i), k),
        }
    }

    pub fn zero(&self, i: usize) -> Class {
        Class {
            degree: i,
            coords: BitSet::new(self.rank(i)),
        }
    }

    /// Class of the all-ones 0-cochain.
    pub fn unit(&self) -> Class {
        let ones = BitSet::full(self.complex.count(0));
        self.coordinates(0, &ones).expect("constant 0-cochains are cocycles")
    }

    /// Coordinates of the class of an `i`-cocycle; `None` if `c` is not a cocycle.
    pub fn coordinates(&self, i: usize, c: &BitSet) -> Option<Class> {
        let Some(d) = self.degrees.get(i) else {
            return c.is_empty().then(|| Class {
                degree: i,
                coords: BitSet::new(0),
            });
        };
        let (res, tag) = d.reducer.reduce(c);
        res.is_empty().then_some(Class { degree: i, coords: tag })
    }

    pub fn add(&self, x: &Class, y: &Class) -> Class {
        assert_eq!(x.degree, y.degree);
        let mut coords = x.coords.clone();
        coords.xor_with(&y.coords);
        Class { degree: x.degree, coords }
    }

    pub fn cup(&self, x: &Class, y: &Class) -> Class {
        let d = x.degree + y.degree;
        let mut out = self.zero(d);
        if d >= self.top() {
            return out;
        }
        for i in x.coords.iter() {
            for j in y.coords.iter() {
                out.coords.xor_with(&self.table[&(x.degree, i, y.degree, j)]);
            }
        }
        out
    }
}

fn ring_cache() -> &'static Mutex<HashMap<u64, Vec<Arc<CohomologyRing>>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Vec<Arc<CohomologyRing>>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

const RING_CACHE_LIMIT: usize = 4096;

/// Cohomology ring of `P`, shared through a cache keyed by space identity.
pub fn cohomology_ring(p: &FiniteSpace) -> Result<Arc<CohomologyRing>> {
    if let Some(list) = ring_cache().lock().unwrap().get(&p.fingerprint()) {
        if let Some(r) = list.iter().find(|r| r.complex.space == *p) {
            return Ok(r.clone());
        }
    }
    let ring = Arc::new(CohomologyRing::new(p)?);
    let mut cache = ring_cache().lock().unwrap();
    if cache.len() > RING_CACHE_LIMIT {
        cache.clear();
    }
    cache.entry(p.fingerprint()).or_default().push(ring.clone());
    Ok(ring)
}

/// `f^*: H^*(Q) → H^*(P)` for `f: P → Q`.
#[derive(Debug, Clone)]
pub struct InducedRingMap {
    /// `H^*(Q)`.
    pub source: Arc<CohomologyRing>,
    /// `H^*(P)`.
    pub target: Arc<CohomologyRing>,
    /// `columns[i][k]` is the image of the `k`-th basis class of `H^i(Q)`.
    pub columns: Vec<Vec<BitSet>>,
}

impl InducedRingMap {
    pub fn apply(&self, x: &Class) -> Class {
        let mut out = self.target.zero(x.degree);
        if let Some(cols) = self.columns.get(x.degree) {
            for k in x.coords.iter() {
                out.coords.xor_with(&cols[k]);
            }
        }
        out
    }

    /// Matrix rows in degree `i` (one per basis class of `H^i(P)`).
    pub fn rows(&self, i: usize) -> Vec<BitSet> {
        let n = self.source.rank(i);
        (0..self.target.rank(i))
            .map(|r| BitSet::from_indices(n, (0..n).filter(|&k| self.columns[i][k].contains(r))))
            .collect()
    }

    pub fn is_injective(&self, i: usize) -> bool {
        crate::bits::rank(self.columns.get(i).map_or(&[][..], |c| &c[..])) == self.source.rank(i)
    }

    pub fn is_surjective(&self, i: usize) -> bool {
        crate::bits::rank(self.columns.get(i).map_or(&[][..], |c| &c[..])) == self.target.rank(i)
    }

    /// Basis of the kernel in degree `i`, as classes of `H^i(Q)`.
    pub fn kernel(&self, i: usize) -> Vec<Class> {
        kernel(&self.rows(i), self.source.rank(i))
            .into_iter()
            .map(|coords| Class { degree: i, coords })
            .collect()
    }
}

pub fn induced_map(f: &PosetMap) -> Result<InducedRingMap> {
    let source = cohomology_ring(f.codomain())?;
    let target = cohomology_ring(f.domain())?;
    let mut columns = Vec::new();
    for i in 0..source.top() {
        let col = (0..source.rank(i))
            .map(|k| {
                let pulled = target.complex.pull_back(f, &source.complex, i, source.representative(i, k));
                target
                    .coordinates(i, &pulled)
                    .expect("pullback of a cocycle is a cocycle")
                    .coords
            })
            .collect();
        columns.push(col);
    }
    Ok(InducedRingMap {
        source,
        target,
        columns,
    })
}

/// Per-degree spanning set of a graded subspace.
#[derive(Default)]
struct GradedSpan {
    basis: Vec<Class>,
    reducers: HashMap<usize, Echelon>,
}

impl GradedSpan {
    fn add(&mut self, ring: &CohomologyRing, x: Class) {
        if x.is_zero() {
            return;
        }
        let e = self
            .reducers
            .entry(x.degree)
            .or_insert_with(|| Echelon::new(ring.rank(x.degree), 0));
        if e.insert(&x.coords, BitSet::new(0)) {
            self.basis.push(x);
        }
    }

    fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }
}

/// Largest `k` with `J^k ≠ 0` for `J = φ^*(ker p^*) ∩ H^{>0}(K)`.
pub fn weighted_cup_length(c: &Cospan) -> Result<usize> {
    let pstar = induced_map(&c.p)?;
    let phistar = induced_map(&c.phi)?;
    let ring_k = phistar.target.clone();
    let mut j = GradedSpan::default();
    for i in 1..pstar.source.top() {
        for x in pstar.kernel(i) {
            j.add(&ring_k, phistar.apply(&x));
        }
    }
    let mut power = GradedSpan::default();
    for x in &j.basis {
        power.add(&ring_k, x.clone());
    }
    let mut k = 0;
    while !power.is_zero() {
        k += 1;
        let mut next = GradedSpan::default();
        for a in &power.basis {
            for b in &j.basis {
                next.add(&ring_k, ring_k.cup(a, b));
            }
        }
        power = next;
    }
    Ok(k)
}

/// Caveat attached to every dimension bound.
pub const DIMENSION_CAVEAT: &str = "advisory: the bound holds for spaces of CW homotopy type and \
declared r-equivalences; a finite space is only weakly equivalent to its order complex, and the \
dimension of the core's order complex stands in for the homotopy dimension";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AdvisoryBound {
    pub value: usize,
    pub r: usize,
    pub dimension: usize,
    pub caveat: &'static str,
}

/// `floor(dim Δ(core K) / (r + 1))`. Never used to prune the exact search.
pub fn dimension_bound(c: &Cospan, r: usize) -> AdvisoryBound {
    let dimension = core(&c.k).core.height().unwrap_or(0);
    AdvisoryBound {
        value: dimension / (r + 1),
        r,
        dimension,
        caveat: DIMENSION_CAVEAT,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Connectivity {
    Finite(usize),
    /// Isomorphism in every degree.
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConnectivityEstimate {
    pub value: Connectivity,
    /// Always false: homology cannot see fundamental groups.
    pub certifying: bool,
}

/// Largest `r` such that `f_*` on mod 2 homology is an isomorphism below
/// degree `r` and onto in degree `r`. Saturates at 0 when even degree 0 fails.
pub fn homological_connectivity_estimate(f: &PosetMap) -> Result<ConnectivityEstimate> {
    // over a field, f_* is dual to f^*: onto on homology iff injective on cohomology
    let m = induced_map(f)?;
    let top = m.source.top().max(m.target.top());
    let mut value = Connectivity::Infinite;
    for i in 0..top {
        let inj = m.is_injective(i);
        let iso = inj && m.is_surjective(i);
        if !iso {
            value = Connectivity::Finite(if inj { i } else { i.saturating_sub(1) });
            break;
        }
    }
    Ok(ConnectivityEstimate {
        value,
        certifying: false,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PavesicReport {
    pub lhs: i64,
    pub rhs: i64,
    /// `(r+1)·secat_ψ(q) > hdim(K) − s + r`.
    pub condition_iii: bool,
    /// The conclusion `secat_φ(p) ≤ secat_ψ(q)` follows, assuming the
    /// caller's declarations of conditions (i) and (ii) and CW type.
    pub implied: bool,
}

pub fn pavesic_check(secat_psi_q: usize, r: usize, s: usize, hdim_k: usize) -> Result<PavesicReport> {
    if s < r {
        return Err(Error::Precondition(format!("need s >= r, got s = {s}, r = {r}")));
    }
    let lhs = (r as i64 + 1) * secat_psi_q as i64;
    let rhs = hdim_k as i64 - s as i64 + r as i64;
    let holds = lhs > rhs;
    Ok(PavesicReport {
        lhs,
        rhs,
        condition_iii: holds,
        implied: holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::product;

    #[test]
    fn order_complex_examples() {
        let pt = OrderComplex::new(&FiniteSpace::point()).unwrap();
        assert_eq!((pt.dim(), pt.count(0)), (Some(0), 1));
        let s = OrderComplex::new(&FiniteSpace::pseudocircle()).unwrap();
        assert_eq!((s.count(0), s.count(1), s.count(2)), (4, 4, 0));
        let edges: Vec<String> = s
            .simplices(1)
            .iter()
            .map(|e| e.iter().map(|&v| s.space.name(v)).collect())
            .collect();
        assert_eq!(edges, vec!["ac", "ad", "bc", "bd"]);
        let c = OrderComplex::new(&FiniteSpace::chain(3).unwrap()).unwrap();
        assert_eq!((c.count(0), c.count(1), c.count(2)), (3, 3, 1));
        assert_eq!(c.euler_characteristic(), 1);
    }

    #[test]
    fn betti_numbers() {
        let s = FiniteSpace::pseudocircle();
        assert_eq!(CohomologyRing::new(&FiniteSpace::point()).unwrap().betti_numbers(), vec![1]);
        let rs = CohomologyRing::new(&s).unwrap();
        assert_eq!(rs.betti_numbers(), vec![1, 1]);
        let xi = rs.basis(1, 0);
        assert!(rs.cup(&xi, &xi).is_zero());
        let ss = product(&s, &s).unwrap();
        let rss = CohomologyRing::new(&ss.space).unwrap();
        assert_eq!(rss.betti_numbers(), vec![1, 2, 1]);
        let prod = rss.cup(&rss.basis(1, 0), &rss.basis(1, 1));
        assert!(!prod.is_zero());
        assert_eq!(CohomologyRing::new(&FiniteSpace::chain(4).unwrap()).unwrap().betti_numbers(), vec![1]);
    }

    #[test]
    fn induced_map_examples() {
        let s = FiniteSpace::pseudocircle();
        let id = induced_map(&PosetMap::identity(&s)).unwrap();
        assert_eq!(id.columns[1], vec![BitSet::unit(1, 0)]);
        assert_eq!(id.columns[0], vec![BitSet::unit(1, 0)]);
        let k = induced_map(&PosetMap::constant(&s, &s, 0)).unwrap();
        assert!(k.columns[1][0].is_empty());
        assert_eq!(k.columns[0][0], BitSet::unit(1, 0));
        let swap = PosetMap::from_names(&s, &s, &[("a", "b"), ("b", "a"), ("c", "d"), ("d", "c")]).unwrap();
        let sw = induced_map(&swap).unwrap();
        assert_eq!(sw.columns[1], vec![BitSet::unit(1, 0)]);
    }

    #[test]
    fn pavesic_examples() {
        assert!(pavesic_check(2, 1, 1, 3).unwrap().implied);
        assert!(!pavesic_check(1, 0, 0, 2).unwrap().implied);
        assert!(pavesic_check(1, 2, 1, 2).is_err());
    }

    #[test]
    fn connectivity_examples() {
        let s = FiniteSpace::pseudocircle();
        let pt = FiniteSpace::point();
        assert_eq!(
            homological_connectivity_estimate(&PosetMap::identity(&s)).unwrap().value,
            Connectivity::Infinite
        );
        let e = homological_connectivity_estimate(&PosetMap::constant(&s, &pt, 0)).unwrap();
        assert_eq!(e.value, Connectivity::Finite(1));
        assert!(!e.certifying);
        let two = FiniteSpace::antichain(2).unwrap();
        let inc = PosetMap::constant(&pt, &two, 0);
        assert_eq!(homological_connectivity_estimate(&inc).unwrap().value, Connectivity::Finite(0));
    }
}
