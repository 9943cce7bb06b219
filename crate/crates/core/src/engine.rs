//! Exact relative sectional category.
//!
//! A subset `Z ⊆ K` of a cospan `K --φ--> X <--p-- A` is sectional when some
//! order-preserving `s: Z → A` has `p ∘ s ≃ φ|_Z`. Sectional subsets are
//! closed under taking subsets, so an open cover by sectional sets can always
//! be coarsened to one whose classes are unions of `U_x` over maximal points.
//! The search therefore colours maximal points (or single points, for
//! arbitrary covers) with iterative deepening on the number of colours.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::cohomology;
use crate::error::{Error, Result};
use crate::homotopy::{enumerate_tables, Component, Fence, HomShape, HomotopyConfig, HomotopyContext, Reduced};
use crate::poset::{core, subspace, CoreReduction, FiniteSpace, PosetMap, Subset};

/// A reduced candidate image and the reduced path from it to the target.
type Connection = (Vec<usize>, Vec<Vec<usize>>);

pub const DEFAULT_GENERALIZED_MAX_POINTS: usize = 12;

/// `K --φ--> X <--p-- A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cospan {
    pub k: FiniteSpace,
    pub x: FiniteSpace,
    pub a: FiniteSpace,
    pub phi: PosetMap,
    pub p: PosetMap,
    pub label: String,
}

impl Cospan {
    pub fn new(phi: PosetMap, p: PosetMap, label: impl Into<String>) -> Result<Self> {
        if phi.codomain() != p.codomain() {
            return Err(Error::MismatchedSignature);
        }
        if phi.domain().is_empty() {
            return Err(Error::EmptySpace);
        }
        Ok(Cospan {
            k: phi.domain().clone(),
            x: phi.codomain().clone(),
            a: p.domain().clone(),
            phi,
            p,
            label: label.into(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Open,
    Generalized,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Open => "open",
            Mode::Generalized => "generalized",
        })
    }
}

/// A non-negative integer or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Finite(usize),
    Infinite,
}

impl Value {
    pub fn finite(self) -> Option<usize> {
        match self {
            Value::Finite(n) => Some(n),
            Value::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Value::Finite(_))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Finite(n) => write!(f, "{n}"),
            Value::Infinite => f.write_str("inf"),
        }
    }
}

/// Serialized as an integer, or as the string `"inf"`.
impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Value::Finite(n) => s.serialize_u64(*n as u64),
            Value::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Finite(usize),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Finite(n) => Ok(Value::Finite(n)),
            Repr::Word(w) if w == "inf" => Ok(Value::Infinite),
            Repr::Word(w) => Err(serde::de::Error::custom(format!("expected an integer or \"inf\", got {w:?}"))),
        }
    }
}

/// Known range of a value whose computation was cut short.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bracket {
    pub lower: usize,
    pub upper: Option<usize>,
}

impl fmt::Display for Bracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.upper {
            Some(u) => write!(f, "[{}, {}]", self.lower, u),
            None => write!(f, "[{}, inf]", self.lower),
        }
    }
}

/// Witness for a finite value: one section and one fence per class.
#[derive(Clone, Debug)]
pub struct CoverCertificate {
    pub mode: Mode,
    pub classes: Vec<Subset>,
    /// `s_i: Z_i → A`, with `Z_i` carrying the subspace order.
    pub sections: Vec<PosetMap>,
    /// Fence from `p ∘ s_i` to `φ|_{Z_i}`.
    pub fences: Vec<Fence>,
}

#[derive(Clone, Debug)]
pub struct InvariantValue {
    pub value: Value,
    pub certificate: Option<CoverCertificate>,
    /// Why no smaller value is possible.
    pub lower_evidence: Option<String>,
}

impl InvariantValue {
    fn infinite(reason: String) -> Self {
        InvariantValue {
            value: Value::Infinite,
            certificate: None,
            lower_evidence: Some(reason),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub max_maps: usize,
    pub timeout: Option<Duration>,
    /// Largest number of classes minus one that iterative deepening may try.
    pub max_level: Option<usize>,
    pub generalized_max_points: usize,
    /// Start the open search at the weighted cup-length.
    pub use_cup_length: bool,
    pub oracle_fallback: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_maps: crate::homotopy::DEFAULT_MAX_MAPS,
            timeout: None,
            max_level: None,
            generalized_max_points: DEFAULT_GENERALIZED_MAX_POINTS,
            use_cup_length: true,
            oracle_fallback: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineStats {
    pub sectional_checks: usize,
    pub memo_hits: usize,
    pub search_nodes: usize,
    pub maps_visited: usize,
}

/// Computes invariants of one cospan, memoizing sectional decisions by subset.
pub struct Engine {
    cospan: Cospan,
    config: EngineConfig,
    hctx: HomotopyContext,
    core_x: CoreReduction,
    core_a: CoreReduction,
    memo: Mutex<HashMap<BitSet, bool>>,
    checks: AtomicUsize,
    hits: AtomicUsize,
    nodes: AtomicUsize,
}

impl Engine {
    pub fn new(cospan: Cospan, config: EngineConfig) -> Self {
        let deadline = config.timeout.map(|t| Instant::now() + t);
        let hctx = HomotopyContext::new(HomotopyConfig {
            max_maps: config.max_maps,
            oracle_fallback: config.oracle_fallback,
            deadline,
        });
        let core_x = core(&cospan.x);
        let core_a = core(&cospan.a);
        Engine {
            cospan,
            config,
            hctx,
            core_x,
            core_a,
            memo: Mutex::new(HashMap::new()),
            checks: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
            nodes: AtomicUsize::new(0),
        }
    }

    pub fn with_defaults(cospan: Cospan) -> Self {
        Self::new(cospan, EngineConfig::default())
    }

    pub fn cospan(&self) -> &Cospan {
        &self.cospan
    }

    pub fn homotopy_context(&self) -> &HomotopyContext {
        &self.hctx
    }

    pub fn stats(&self) -> EngineStats {
        EngineStats {
            sectional_checks: self.checks.load(Ordering::Relaxed),
            memo_hits: self.hits.load(Ordering::Relaxed),
            search_nodes: self.nodes.load(Ordering::Relaxed),
            maps_visited: self.hctx.maps_visited(),
        }
    }

    /// Memoized sectional decisions, sorted for stable output.
    pub fn memo_entries(&self) -> Vec<(BitSet, bool)> {
        let mut v: Vec<_> = self
            .memo
            .lock()
            .unwrap()
            .iter()
            .map(|(k, &b)| (k.clone(), b))
            .collect();
        v.sort();
        v
    }

    pub fn preload(&self, entries: impl IntoIterator<Item = (BitSet, bool)>) {
        let mut memo = self.memo.lock().unwrap();
        for (k, b) in entries {
            if k.len() == self.cospan.k.len() {
                memo.insert(k, b);
            }
        }
    }

    /// Decides whether `z` is sectional and produces a section and fence.
    pub fn sectional_witness(&self, z: &BitSet) -> Result<Option<(PosetMap, Fence)>> {
        let c = &self.cospan;
        let (zs, inc) = subspace(&c.k, z)?;
        let phi_z = c.phi.after(&inc)?;
        if zs.is_empty() {
            let s = PosetMap::new_unchecked(&zs, &c.a, Vec::new());
            return Ok(Some((s, Fence::trivial(&phi_z))));
        }
        self.hctx.check_deadline()?;
        let red = Reduced::from_reductions(core(&zs), self.core_x.clone());
        let target = red.reduce(&phi_z);
        let section_shape = HomShape::new(&red.dom.core, &self.core_a.core);
        // reduced images of candidate sections, each with one preimage
        let mut candidates: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        let mut seen = HashSet::new();
        for s_core in enumerate_tables(&self.hctx, &section_shape)? {
            let h: Vec<usize> = s_core
                .iter()
                .map(|&a| self.core_x.retraction.apply(c.p.apply(self.core_a.section.apply(a))))
                .collect();
            if seen.insert(h.clone()) {
                candidates.push((h, s_core));
            }
        }
        let Some((h, path)) = self.connect(&red, &target, &candidates)? else {
            return Ok(None);
        };
        let s_core = &candidates.iter().find(|(g, _)| *g == h).expect("candidate").1;
        let s_values = red
            .dom
            .retraction
            .values()
            .iter()
            .map(|&r| self.core_a.section.apply(s_core[r]))
            .collect();
        let s = PosetMap::new_unchecked(&zs, &c.a, s_values);
        let ps = c.p.after(&s)?;
        let fence = red.lift_fence(&ps, &phi_z, &path);
        Ok(Some((s, fence)))
    }

    /// Finds a candidate in the component of `target`, with a reduced path
    /// from it to `target`. Searches from the target first; if that component
    /// overflows, explores the candidates' components instead.
    fn connect(
        &self,
        red: &Reduced,
        target: &[usize],
        candidates: &[(Vec<usize>, Vec<usize>)],
    ) -> Result<Option<Connection>> {
        if candidates.is_empty() {
            return Ok(None);
        }
        let images: Vec<Vec<usize>> = candidates.iter().map(|(h, _)| h.clone()).collect();
        let err = match Component::explore(&red.shape, target, &images, &self.hctx) {
            Ok(comp) => {
                return Ok(comp.hit.clone().map(|h| {
                    let path = comp.path_to_root(&h).expect("member of component");
                    (h, path)
                }))
            }
            Err(e @ Error::SearchBudgetExceeded { .. }) => e,
            Err(e) => return Err(e),
        };
        let goal = [target.to_vec()];
        let mut ruled_out: HashSet<Vec<usize>> = HashSet::new();
        for h in &images {
            if ruled_out.contains(h) {
                continue;
            }
            let comp = Component::explore(&red.shape, h, &goal, &self.hctx).map_err(|_| err.clone())?;
            if let Some(mut path) = comp.path_to_root(target) {
                path.reverse();
                return Ok(Some((h.clone(), path)));
            }
            ruled_out.extend(images.iter().filter(|g| comp.contains(g)).cloned());
        }
        Ok(None)
    }

    /// Memoized sectional decision.
    pub fn is_sectional(&self, z: &BitSet) -> Result<bool> {
        if let Some(&b) = self.memo.lock().unwrap().get(z) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(b);
        }
        self.checks.fetch_add(1, Ordering::Relaxed);
        let b = self.sectional_witness(z)?.is_some();
        self.memo.lock().unwrap().insert(z.clone(), b);
        Ok(b)
    }

    fn atoms(&self, mode: Mode) -> Vec<BitSet> {
        let k = &self.cospan.k;
        match mode {
            Mode::Open => {
                let mut atoms: Vec<BitSet> = k.maximal_points().iter().map(|&x| k.down(x).clone()).collect();
                // large atoms first: conflicts surface early
                atoms.sort_by_key(|a| std::cmp::Reverse(a.count()));
                atoms
            }
            Mode::Generalized => k.elements().map(|x| BitSet::unit(k.len(), x)).collect(),
        }
    }

    /// True iff the invariant in `mode` is finite.
    pub fn finiteness_check(&self, mode: Mode) -> Result<bool> {
        Ok(self.first_non_sectional_atom(mode)?.is_none())
    }

    fn first_non_sectional_atom(&self, mode: Mode) -> Result<Option<BitSet>> {
        for atom in self.atoms(mode) {
            if !self.is_sectional(&atom)? {
                return Ok(Some(atom));
            }
        }
        Ok(None)
    }

    /// `secat_φ(p)` over open covers.
    pub fn relative_secat(&self) -> Result<InvariantValue> {
        self.solve(Mode::Open)
    }

    /// `secat_{g;φ}(p)` over arbitrary covers.
    pub fn generalized_relative_secat(&self) -> Result<InvariantValue> {
        let n = self.cospan.k.len();
        if n > self.config.generalized_max_points {
            return Err(Error::SearchBudgetExceeded {
                budget: self.config.generalized_max_points,
                bracket: None,
            });
        }
        self.solve(Mode::Generalized)
    }

    pub fn solve(&self, mode: Mode) -> Result<InvariantValue> {
        let k = &self.cospan.k;
        if let Some(atom) = self.first_non_sectional_atom(mode)? {
            let names: Vec<&str> = atom.iter().map(|x| k.name(x)).collect();
            return Ok(InvariantValue::infinite(format!(
                "{} {{{}}} is not sectional, and every class containing it would inherit that",
                if mode == Mode::Open { "minimal open set" } else { "point" },
                names.join(", ")
            )));
        }
        let atoms = self.atoms(mode);
        let lower = match mode {
            Mode::Open if self.config.use_cup_length => cohomology::weighted_cup_length(&self.cospan).unwrap_or(0),
            _ => 0,
        };
        let mut best = self.greedy(&atoms)?;
        let mut upper = best.len() - 1;
        if lower > upper {
            return Err(Error::CrossCheckMismatch(format!(
                "cup-length lower bound {lower} exceeds a certified cover with {} classes",
                upper + 1
            )));
        }
        let mut level = lower;
        while level < upper {
            if let Some(cap) = self.config.max_level {
                if level > cap {
                    return Err(Error::LevelCap { cap, bracket: None }.with_bracket(Bracket {
                        lower: level,
                        upper: Some(upper),
                    }));
                }
            }
            let mut classes = Vec::with_capacity(level + 1);
            let found = self
                .dfs(&atoms, 0, &mut classes, level + 1)
                .map_err(|e| e.with_bracket(Bracket { lower: level, upper: Some(upper) }))?;
            if found {
                best = classes;
                upper = level;
                break;
            }
            level += 1;
        }
        let value = upper;
        let lower_evidence = (value > 0).then(|| {
            if value == lower {
                format!("weighted cup-length is {lower}")
            } else {
                format!("exhaustive search found no cover by {value} sectional sets")
            }
        });
        let certificate = self.certificate(mode, &best)?;
        Ok(InvariantValue {
            value: Value::Finite(value),
            certificate: Some(certificate),
            lower_evidence,
        })
    }

    fn greedy(&self, atoms: &[BitSet]) -> Result<Vec<BitSet>> {
        let mut classes: Vec<BitSet> = Vec::new();
        'atoms: for atom in atoms {
            for class in classes.iter_mut() {
                if atom.is_subset(class) {
                    continue 'atoms;
                }
                let cand = class.union(atom);
                if self.is_sectional(&cand)? {
                    *class = cand;
                    continue 'atoms;
                }
            }
            classes.push(atom.clone());
        }
        Ok(classes)
    }

    fn dfs(&self, atoms: &[BitSet], i: usize, classes: &mut Vec<BitSet>, k: usize) -> Result<bool> {
        if i == atoms.len() {
            return Ok(true);
        }
        if self.nodes.fetch_add(1, Ordering::Relaxed).is_multiple_of(256) {
            self.hctx.check_deadline()?;
        }
        let atom = &atoms[i];
        if classes.iter().any(|c| atom.is_subset(c)) {
            return self.dfs(atoms, i + 1, classes, k);
        }
        for j in 0..classes.len() {
            let cand = classes[j].union(atom);
            if self.is_sectional(&cand)? {
                let old = std::mem::replace(&mut classes[j], cand);
                if self.dfs(atoms, i + 1, classes, k)? {
                    return Ok(true);
                }
                classes[j] = old;
            }
        }
        if classes.len() < k {
            classes.push(atom.clone());
            if self.dfs(atoms, i + 1, classes, k)? {
                return Ok(true);
            }
            classes.pop();
        }
        Ok(false)
    }

    fn certificate(&self, mode: Mode, classes: &[BitSet]) -> Result<CoverCertificate> {
        let mut cert = CoverCertificate {
            mode,
            classes: Vec::new(),
            sections: Vec::new(),
            fences: Vec::new(),
        };
        for class in classes {
            let (s, fence) = self
                .sectional_witness(class)?
                .ok_or_else(|| Error::CrossCheckMismatch("memoized sectional set has no witness".into()))?;
            cert.classes.push(Subset::new(&self.cospan.k, class.clone()));
            cert.sections.push(s);
            cert.fences.push(fence);
        }
        Ok(cert)
    }
}

/// Decides whether `z` is sectional, with a witness.
pub fn is_sectional(c: &Cospan, z: &Subset, require_open: bool) -> Result<Option<(PosetMap, Fence)>> {
    if z.space != c.k {
        return Err(Error::MismatchedSignature);
    }
    if require_open && !z.is_open() {
        return Err(Error::Precondition("subset is not open".into()));
    }
    Engine::with_defaults(c.clone()).sectional_witness(&z.members)
}

pub fn relative_secat(c: &Cospan) -> Result<InvariantValue> {
    Engine::with_defaults(c.clone()).relative_secat()
}

pub fn generalized_relative_secat(c: &Cospan) -> Result<InvariantValue> {
    Engine::with_defaults(c.clone()).generalized_relative_secat()
}

pub fn finiteness_check(c: &Cospan, mode: Mode) -> Result<bool> {
    Engine::with_defaults(c.clone()).finiteness_check(mode)
}
