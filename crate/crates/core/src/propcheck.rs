//! Seeded random cospans and systematic checks of the relations that
//! relative sectional category satisfies.
//!
//! Every hypothesis-bearing check builds its side conditions constructively
//! (a homotopy is produced as an explicit fence, a section as an explicit
//! map) and re-validates them before the inequality is counted.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::certificate::validate_value;
use crate::cohomology::{induced_map, weighted_cup_length, OrderComplex};
use crate::engine::{Cospan, Engine, EngineConfig, Mode, Value};
use crate::error::{Error, Result};
use crate::homotopy::{homotopic, Fence, HomShape, HomotopyConfig, HomotopyContext};
use crate::instance::{encode_cospan, InstanceFile};
use crate::invariants::{cat_cospan, secat_cospan};
use crate::poset::{add_beat_point, coproduct, core, product, product_map, FiniteSpace, PosetMap};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Upper bound on the size of every generated space.
    pub max_points: usize,
    /// Probability of each relation `e_i < e_j`, `i < j`, before closure.
    pub density: f64,
    pub count: usize,
    pub max_maps: usize,
    pub max_level: Option<usize>,
    /// Probability that a generated space is forced to be connected.
    pub connected_bias: f64,
    /// Also run the product comparison.
    pub experimental: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            max_points: 6,
            density: 0.35,
            count: 100,
            max_maps: 200_000,
            max_level: None,
            connected_bias: 0.75,
            experimental: false,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=16).contains(&self.max_points) {
            return Err(Error::Precondition("max_points must lie in 1..=16".into()));
        }
        if !(0.0..=1.0).contains(&self.density) || !(0.0..=1.0).contains(&self.connected_bias) {
            return Err(Error::Precondition("probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            max_maps: self.max_maps,
            max_level: self.max_level,
            ..EngineConfig::default()
        }
    }

    /// Independent stream for instance `index`.
    pub fn instance_rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

/// Random poset on at most `max_points` points named `{prefix}0, {prefix}1, …`.
///
/// Half of the spaces are random DAGs with relation probability `density`;
/// the rest are layered, with relations only between consecutive layers,
/// which makes non-contractible spaces common.
pub fn random_space<R: Rng>(rng: &mut R, max_points: usize, density: f64, connected_bias: f64, prefix: &str) -> FiniteSpace {
    let layered = rng.gen_bool(0.5);
    let n = if layered {
        rng.gen_range(max_points.div_ceil(2)..=max_points)
    } else {
        rng.gen_range(1..=max_points)
    };
    let depth = rng.gen_range(2..=3);
    let mut layer: Vec<usize> = (0..n).map(|_| rng.gen_range(0..depth)).collect();
    layer.sort_unstable();
    let mut label: Vec<usize> = (0..n).collect();
    let mut relations = Vec::new();
    let link = |label: &mut Vec<usize>, i: usize, j: usize| {
        let (keep, drop) = (label[i], label[j]);
        for l in label.iter_mut() {
            if *l == drop {
                *l = keep;
            }
        }
    };
    for j in 0..n {
        for i in 0..j {
            let related = if layered {
                layer[i] + 1 == layer[j] && rng.gen_bool(0.85)
            } else {
                rng.gen_bool(density)
            };
            if related {
                relations.push((i, j));
                link(&mut label, i, j);
            }
        }
    }
    if rng.gen_bool(connected_bias) {
        for j in 1..n {
            if (0..j).all(|i| label[i] != label[j]) {
                let i = rng.gen_range(0..j);
                relations.push((i, j));
                link(&mut label, i, j);
            }
        }
    }
    let names: Vec<String> = (0..n).map(|i| format!("{prefix}{i}")).collect();
    let pairs: Vec<(&str, &str)> = relations.iter().map(|&(i, j)| (names[i].as_str(), names[j].as_str())).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    FiniteSpace::build(&name_refs, &pairs).expect("relations follow the index order")
}

/// Random order-preserving map, by randomized backtracking along a linear
/// extension of the domain.
pub fn random_map<R: Rng>(rng: &mut R, p: &FiniteSpace, q: &FiniteSpace) -> PosetMap {
    assert!(p.is_empty() || !q.is_empty(), "no maps into the empty space");
    let order = p.linear_extension().to_vec();
    let mut values = vec![0usize; p.len()];
    let mut options: Vec<Vec<usize>> = Vec::with_capacity(order.len());
    let mut depth = 0;
    while depth < order.len() {
        if options.len() == depth {
            let x = order[depth];
            let mut cand: Vec<usize> = q
                .elements()
                .filter(|&v| p.down(x).iter().all(|w| w == x || q.leq(values[w], v)))
                .collect();
            cand.shuffle(rng);
            options.push(cand);
        }
        match options[depth].pop() {
            Some(v) => {
                values[order[depth]] = v;
                depth += 1;
            }
            None => {
                options.pop();
                depth -= 1;
            }
        }
    }
    PosetMap::new(p, q, values).expect("constructed monotone")
}

pub fn random_cospan(cfg: &GeneratorConfig) -> Cospan {
    random_cospan_with(cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed))
}

/// `X` and `A` are random spaces; a third of the time `A` is a point. `φ`
/// is the identity of `X`, a random walk from it, or a random map from a
/// random `K`, with equal odds.
pub fn random_cospan_with<R: Rng>(cfg: &GeneratorConfig, rng: &mut R) -> Cospan {
    let space = |rng: &mut R, prefix| random_space(rng, cfg.max_points, cfg.density, cfg.connected_bias, prefix);
    let x = space(rng, "x");
    let phi = match rng.gen_range(0..3) {
        0 => PosetMap::identity(&x),
        1 => {
            let steps = rng.gen_range(1..=4);
            end_of(&random_walk(rng, &PosetMap::identity(&x), steps))
        }
        _ => {
            let k = space(rng, "k");
            random_map(rng, &k, &x)
        }
    };
    let a = if rng.gen_bool(1.0 / 3.0) {
        FiniteSpace::point()
    } else {
        space(rng, "a")
    };
    let p = random_map(rng, &a, &x);
    Cospan::new(phi, p, "random").expect("generated spaces are nonempty")
}

/// Up to `steps` random single-point moves from `f`; the visited maps form a
/// fence from `f` to its last step.
pub fn random_walk<R: Rng>(rng: &mut R, f: &PosetMap, steps: usize) -> Fence {
    let shape = HomShape::new(f.domain(), f.codomain());
    let mut current: Vec<u16> = f.values().iter().map(|&v| v as u16).collect();
    let mut fence = Fence::trivial(f);
    for _ in 0..steps {
        let moves: Vec<Vec<u16>> = shape.neighbours(&current).collect();
        let Some(next) = moves.choose(rng) else {
            break;
        };
        current = next.clone();
        let values = current.iter().map(|&v| v as usize).collect();
        fence.steps.push(PosetMap::new(f.domain(), f.codomain(), values).expect("single-point moves stay monotone"));
    }
    fence
}

fn end_of(fence: &Fence) -> PosetMap {
    fence.steps.last().expect("fences are nonempty").clone()
}

/// `h ↦ h ∘ g` applied to every step.
fn precompose(fence: &Fence, g: &PosetMap) -> Fence {
    Fence {
        steps: fence.steps.iter().map(|h| h.after(g).expect("composable")).collect(),
    }
}

/// Adds a beat point at a random place, returning `(P', r: P' → P, i: P → P')`.
pub fn random_enlargement<R: Rng>(rng: &mut R, p: &FiniteSpace) -> (FiniteSpace, PosetMap, PosetMap) {
    let anchor = rng.gen_range(0..p.len());
    let above = rng.gen_bool(0.5);
    let star = if above { p.up(anchor) } else { p.down(anchor) };
    let mut attach = p.empty_set();
    for y in star.iter().filter(|&y| y != anchor) {
        if rng.gen_bool(0.5) {
            attach.union_with(if above { p.up(y) } else { p.down(y) });
        }
    }
    add_beat_point(p, anchor, &attach, above).expect("attachment closed inside the star")
}

/// Side data for the commuting-wedge check: `β∘φ ≃ ψ` and `β∘p ≃ q∘γ`.
#[derive(Clone, Debug)]
pub struct Wedge {
    /// `β: X → Y`.
    pub beta: PosetMap,
    /// `γ: A → B`.
    pub gamma: PosetMap,
    /// `ψ: K → Y`.
    pub psi: PosetMap,
    /// `q: B → Y`.
    pub q: PosetMap,
    /// From `β∘φ` to `ψ`.
    pub psi_fence: Fence,
    /// From `β∘p` to `q∘γ`.
    pub q_fence: Fence,
}

/// Generated hypotheses for [`check_inequalities`].
#[derive(Clone, Debug)]
pub struct Extras {
    /// `(φ', p)` with `φ' = [id_X, φ]: X ⊔ K → X`, which has the section `inl`.
    pub sectioned: Cospan,
    /// `(φ, p')` with contractible source of `p'`; only when `X` is connected.
    pub contractible: Option<Cospan>,
    /// `q: B → A`.
    pub q: PosetMap,
    /// `ψ: L → K`.
    pub psi: PosetMap,
    /// `λ: M → K`.
    pub lambda: PosetMap,
    /// From `φ∘λ` to the map used in place of it.
    pub lambda_fence: Fence,
    pub wedge: Wedge,
}

impl Extras {
    pub fn generate<R: Rng>(c: &Cospan, cfg: &GeneratorConfig, rng: &mut R) -> Result<Extras> {
        let space = |rng: &mut R, prefix| random_space(rng, cfg.max_points, cfg.density, cfg.connected_bias, prefix);

        let (sum, _, _) = coproduct(&c.x, &c.k)?;
        let mut values: Vec<usize> = c.x.elements().collect();
        values.extend_from_slice(c.phi.values());
        let sectioned = Cospan::new(PosetMap::new(&sum, &c.x, values)?, c.p.clone(), "with_section")?;

        let contractible = if c.x.is_connected() {
            let bounds: Vec<usize> = c
                .x
                .elements()
                .filter(|&x| c.p.values().iter().all(|&v| c.x.leq(v, x)))
                .collect();
            let p2 = match bounds.choose(rng) {
                Some(&top) if rng.gen_bool(0.5) => {
                    let cone = c.a.cone()?;
                    let mut values = c.p.values().to_vec();
                    values.push(top);
                    PosetMap::new(&cone, &c.x, values)?
                }
                _ => {
                    let chain = FiniteSpace::chain(rng.gen_range(1..=3))?;
                    let mut values = vec![rng.gen_range(0..c.x.len())];
                    while values.len() < chain.len() {
                        let above: Vec<usize> = c.x.up(*values.last().unwrap()).iter().collect();
                        values.push(*above.choose(rng).unwrap());
                    }
                    PosetMap::new(&chain, &c.x, values)?
                }
            };
            Some(Cospan::new(c.phi.clone(), p2, "contractible")?)
        } else {
            None
        };

        let q = if c.a.is_empty() {
            PosetMap::identity(&c.a)
        } else {
            let b = space(rng, "b");
            random_map(rng, &b, &c.a)
        };
        let l = space(rng, "l");
        let psi = random_map(rng, &l, &c.k);
        let m = space(rng, "m");
        let lambda = random_map(rng, &m, &c.k);
        let steps = rng.gen_range(0..=6);
        let lambda_fence = random_walk(rng, &c.phi.after(&lambda)?, steps);

        let y = space(rng, "y");
        let beta = random_map(rng, &c.x, &y);
        let steps = rng.gen_range(0..=6);
        let psi_fence = random_walk(rng, &beta.after(&c.phi)?, steps);
        let bp = beta.after(&c.p)?;
        let ctx = HomotopyContext::new(HomotopyConfig {
            max_maps: cfg.max_maps,
            ..HomotopyConfig::default()
        });
        let mut attempt = None;
        match rng.gen_range(0..3) {
            0 if !c.a.is_empty() => {
                let (big, retraction, inclusion) = random_enlargement(rng, &c.a);
                let steps = rng.gen_range(0..=6);
                let walk = random_walk(rng, &bp.after(&retraction)?, steps);
                debug_assert_eq!(walk.steps[0].domain(), &big);
                attempt = Some((inclusion.clone(), end_of(&walk), precompose(&walk, &inclusion)));
            }
            1 => {
                let b = space(rng, "b");
                let gamma = random_map(rng, &c.a, &b);
                let q = random_map(rng, &b, &y);
                if let Ok(Some(fence)) = homotopic(&ctx, &bp, &q.after(&gamma)?) {
                    attempt = Some((gamma, q, fence));
                }
            }
            _ => {}
        }
        let (gamma, q2, q_fence) = match attempt {
            Some(t) => t,
            None => {
                let steps = rng.gen_range(0..=6);
                let walk = random_walk(rng, &bp, steps);
                (PosetMap::identity(&c.a), end_of(&walk), walk)
            }
        };
        let wedge = Wedge {
            beta,
            gamma,
            psi: end_of(&psi_fence),
            q: q2,
            psi_fence,
            q_fence,
        };
        Ok(Extras {
            sectioned,
            contractible,
            q,
            psi,
            lambda,
            lambda_fence,
            wedge,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

impl Tally {
    fn merge(&mut self, other: &Tally) {
        self.passed += other.passed;
        self.failed += other.failed;
        self.skipped += other.skipped;
    }

    pub fn total(&self) -> usize {
        self.passed + self.failed + self.skipped
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InstanceTag {
    pub seed: u64,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub relation: String,
    pub tag: InstanceTag,
    pub detail: String,
    pub instance: InstanceFile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub relation: String,
    pub tag: InstanceTag,
    pub lhs: Value,
    pub rhs: Value,
    pub holds: bool,
    pub instance: InstanceFile,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub instances: usize,
    pub relations: BTreeMap<String, Tally>,
    pub failures: Vec<Counterexample>,
    pub observations: Vec<Observation>,
}

impl CheckReport {
    /// Order-independent merge.
    pub fn merge(mut self, other: CheckReport) -> CheckReport {
        self.instances += other.instances;
        for (k, t) in &other.relations {
            self.relations.entry(k.clone()).or_default().merge(t);
        }
        self.failures.extend(other.failures);
        self.failures.sort_by(|a, b| (a.tag, &a.relation, &a.detail).cmp(&(b.tag, &b.relation, &b.detail)));
        self.observations.extend(other.observations);
        self.observations.sort_by(|a, b| (a.tag, &a.relation).cmp(&(b.tag, &b.relation)));
        self
    }

    pub fn hard_failures(&self) -> usize {
        self.relations.values().map(|t| t.failed).sum()
    }

    pub fn skip_rate(&self) -> f64 {
        let total: usize = self.relations.values().map(Tally::total).sum();
        let skipped: usize = self.relations.values().map(|t| t.skipped).sum();
        if total == 0 {
            0.0
        } else {
            skipped as f64 / total as f64
        }
    }

    pub fn tally(&self, relation: &str) -> Tally {
        self.relations.get(relation).copied().unwrap_or_default()
    }
}

pub const REL_A: &str = "(a) generalized <= open";
pub const REL_B: &str = "(b) weighted cup-length <= open";
pub const REL_C_LE: &str = "(c) secat_phi(p) <= secat(p)";
pub const REL_C_EQ: &str = "(c) equality with a section of phi";
pub const REL_D_LE: &str = "(d) secat_phi(p) <= cat(phi)";
pub const REL_D_EQ: &str = "(d) equality for contractible A";
pub const REL_E: &str = "(e) secat_phi(p) <= secat_phi(pq)";
pub const REL_F: &str = "(f) secat_{phi psi}(p) <= secat_phi(p)";
pub const REL_G: &str = "(g) factorization up to homotopy";
pub const REL_H: &str = "(h) commuting wedge";
pub const REL_CERT: &str = "certificate re-validation";
pub const REL_INV_OPEN: &str = "homotopy invariance (open)";
pub const REL_INV_GEN: &str = "homotopy invariance (generalized)";
pub const REL_DD: &str = "cohomology d o d = 0";
pub const REL_RING: &str = "cohomology ring homomorphism";
pub const REL_FUNCT: &str = "cohomology functoriality";
pub const REL_PRODUCT: &str = "product inequality (experimental)";

enum Verdict {
    Pass,
    Skip,
    Fail(String),
}

fn le(lhs: &Result<Value>, rhs: &Result<Value>) -> Verdict {
    compare(lhs, rhs, "<=", |a, b| a <= b)
}

fn eq(lhs: &Result<Value>, rhs: &Result<Value>) -> Verdict {
    compare(lhs, rhs, "==", |a, b| a == b)
}

fn compare(lhs: &Result<Value>, rhs: &Result<Value>, op: &str, holds: impl Fn(Value, Value) -> bool) -> Verdict {
    match (lhs, rhs) {
        (Ok(a), Ok(b)) if holds(*a, *b) => Verdict::Pass,
        (Ok(a), Ok(b)) => Verdict::Fail(format!("expected {a} {op} {b}")),
        (Err(e), _) | (_, Err(e)) if e.is_budget() => Verdict::Skip,
        (Err(e), _) | (_, Err(e)) => Verdict::Fail(format!("error: {e}")),
    }
}

/// Accumulates verdicts for one instance.
pub struct Checker<'a> {
    pub report: CheckReport,
    tag: InstanceTag,
    cfg: &'a EngineConfig,
}

impl<'a> Checker<'a> {
    pub fn new(tag: InstanceTag, cfg: &'a EngineConfig) -> Self {
        Checker {
            report: CheckReport::default(),
            tag,
            cfg,
        }
    }

    fn record(&mut self, relation: &str, verdict: Verdict, witness: &Cospan) {
        let t = self.report.relations.entry(relation.to_owned()).or_default();
        match verdict {
            Verdict::Pass => t.passed += 1,
            Verdict::Skip => t.skipped += 1,
            Verdict::Fail(detail) => {
                t.failed += 1;
                self.report.failures.push(Counterexample {
                    relation: relation.to_owned(),
                    tag: self.tag,
                    detail,
                    instance: encode_cospan(witness, false),
                });
            }
        }
    }

    /// Solves `c` in `mode` and re-validates the certificate of the answer.
    pub fn eval(&mut self, c: &Cospan, mode: Mode) -> Result<Value> {
        let v = Engine::new(c.clone(), self.cfg.clone()).solve(mode)?;
        let verdict = match validate_value(c, &v) {
            Ok(()) => Verdict::Pass,
            Err(e) => Verdict::Fail(format!("{mode} certificate: {e}")),
        };
        self.record(REL_CERT, verdict, c);
        Ok(v.value)
    }
}

/// Values of the unmodified cospan, shared by all checks.
pub struct Baseline {
    pub open: Result<Value>,
    pub generalized: Result<Value>,
}

impl Baseline {
    pub fn compute(c: &Cospan, checker: &mut Checker) -> Baseline {
        Baseline {
            open: checker.eval(c, Mode::Open),
            generalized: checker.eval(c, Mode::Generalized),
        }
    }
}

fn hypothesis(fence: &Fence, from: &PosetMap, to: &PosetMap) -> std::result::Result<(), String> {
    fence.validate(from, to).map_err(|e| format!("hypothesis fence invalid: {e}"))
}

/// Checks (a) through (h) on `c` with generated side data.
pub fn check_inequalities(c: &Cospan, extras: &Extras, base: &Baseline, checker: &mut Checker) {
    let open = &base.open;
    checker.record(REL_A, le(&base.generalized, open), c);

    let wcl = weighted_cup_length(c).map(Value::Finite);
    checker.record(REL_B, le(&wcl, open), c);

    let plain = secat_cospan(&c.p).and_then(|d| checker.eval(&d, Mode::Open));
    checker.record(REL_C_LE, le(open, &plain), c);
    let sectioned = checker.eval(&extras.sectioned, Mode::Open);
    checker.record(REL_C_EQ, eq(&sectioned, &plain), &extras.sectioned);

    if let Some(cc) = &extras.contractible {
        let cat = cat_cospan(&c.phi).and_then(|d| checker.eval(&d, Mode::Open));
        checker.record(REL_D_LE, le(open, &cat), c);
        let v = checker.eval(cc, Mode::Open);
        checker.record(REL_D_EQ, eq(&v, &cat), cc);
    }

    let e = c
        .p
        .after(&extras.q)
        .and_then(|pq| Cospan::new(c.phi.clone(), pq, "precomposed_leg"));
    match e {
        Ok(e) => {
            let v = checker.eval(&e, Mode::Open);
            checker.record(REL_E, le(open, &v), &e);
        }
        Err(err) => checker.record(REL_E, Verdict::Fail(err.to_string()), c),
    }

    let f = c
        .phi
        .after(&extras.psi)
        .and_then(|fp| Cospan::new(fp, c.p.clone(), "restricted_phi"));
    match f {
        Ok(f) => {
            let v = checker.eval(&f, Mode::Open);
            checker.record(REL_F, le(&v, open), &f);
        }
        Err(err) => checker.record(REL_F, Verdict::Fail(err.to_string()), c),
    }

    let phi_lambda = c.phi.after(&extras.lambda).expect("composable");
    let phi_g = end_of(&extras.lambda_fence);
    match hypothesis(&extras.lambda_fence, &phi_lambda, &phi_g) {
        Ok(()) => {
            let g = Cospan::new(phi_g, c.p.clone(), "factorized").expect("same codomain");
            let v = checker.eval(&g, Mode::Open);
            checker.record(REL_G, le(&v, open), &g);
        }
        Err(e) => checker.record(REL_G, Verdict::Fail(e), c),
    }

    let w = &extras.wedge;
    let bphi = w.beta.after(&c.phi).expect("composable");
    let bp = w.beta.after(&c.p).expect("composable");
    let qg = w.q.after(&w.gamma).expect("composable");
    let hyp = hypothesis(&w.psi_fence, &bphi, &w.psi).and_then(|()| hypothesis(&w.q_fence, &bp, &qg));
    match hyp {
        Ok(()) => {
            let h = Cospan::new(w.psi.clone(), w.q.clone(), "wedge").expect("same codomain");
            let v = checker.eval(&h, Mode::Open);
            checker.record(REL_H, le(&v, open), &h);
        }
        Err(e) => checker.record(REL_H, Verdict::Fail(e), c),
    }
}

/// Replaces each of `K`, `X`, `A` by its core and by a random one-point
/// enlargement, conjugating the maps through the equivalences, and compares
/// both invariants with the baseline.
pub fn check_homotopy_invariance<R: Rng>(c: &Cospan, base: &Baseline, rng: &mut R, checker: &mut Checker) {
    let mut variants: Vec<Result<Cospan>> = Vec::new();
    let label = "invariance";

    let ck = core(&c.k);
    if ck.core.len() < c.k.len() {
        variants.push(c.phi.after(&ck.section).and_then(|f| Cospan::new(f, c.p.clone(), label)));
    }
    let (_, r, _) = random_enlargement(rng, &c.k);
    variants.push(c.phi.after(&r).and_then(|f| Cospan::new(f, c.p.clone(), label)));

    let cx = core(&c.x);
    if cx.core.len() < c.x.len() {
        let r = &cx.retraction;
        variants.push(r.after(&c.phi).and_then(|f| Cospan::new(f, r.after(&c.p)?, label)));
    }
    let (_, _, i) = random_enlargement(rng, &c.x);
    variants.push(i.after(&c.phi).and_then(|f| Cospan::new(f, i.after(&c.p)?, label)));

    if !c.a.is_empty() {
        let ca = core(&c.a);
        if ca.core.len() < c.a.len() {
            variants.push(c.p.after(&ca.section).and_then(|p| Cospan::new(c.phi.clone(), p, label)));
        }
        let (_, r, _) = random_enlargement(rng, &c.a);
        variants.push(c.p.after(&r).and_then(|p| Cospan::new(c.phi.clone(), p, label)));
    }

    for v in variants {
        match v {
            Ok(d) => {
                let open = checker.eval(&d, Mode::Open);
                checker.record(REL_INV_OPEN, eq(&open, &base.open), &d);
                let gen = checker.eval(&d, Mode::Generalized);
                checker.record(REL_INV_GEN, eq(&gen, &base.generalized), &d);
            }
            Err(e) => checker.record(REL_INV_OPEN, Verdict::Fail(e.to_string()), c),
        }
    }
}

fn unit_cochains(n: usize) -> impl Iterator<Item = BitSet> {
    (0..n).map(move |k| BitSet::unit(n, k))
}

fn cohomology_verdicts(f: &PosetMap, g: &PosetMap) -> Result<[Verdict; 3]> {
    let complex = OrderComplex::new(f.domain())?;
    let dd = match complex.dim() {
        Some(d) if d >= 2 => (0..d - 1).all(|i| {
            unit_cochains(complex.count(i)).all(|e| complex.coboundary(i + 1, &complex.coboundary(i, &e)).is_empty())
        }),
        _ => true,
    };
    let dd = if dd { Verdict::Pass } else { Verdict::Fail("d o d != 0".into()) };

    let fs = induced_map(f)?;
    let (hx, hk) = (fs.source.clone(), fs.target.clone());
    let mut ring = fs.apply(&hx.unit()) == hk.unit() || f.domain().is_empty();
    for i in 0..hx.top() {
        for j in 0..hx.top() {
            for a in 0..hx.rank(i) {
                for b in 0..hx.rank(j) {
                    let (x, y) = (hx.basis(i, a), hx.basis(j, b));
                    ring &= fs.apply(&hx.cup(&x, &y)) == hk.cup(&fs.apply(&x), &fs.apply(&y));
                }
            }
        }
    }
    let ring = if ring { Verdict::Pass } else { Verdict::Fail("f* does not preserve products".into()) };

    let gs = induced_map(g)?;
    let gfs = induced_map(&g.after(f)?)?;
    let hy = gs.source.clone();
    let funct = (0..hy.top()).all(|i| (0..hy.rank(i)).all(|k| gfs.apply(&hy.basis(i, k)) == fs.apply(&gs.apply(&hy.basis(i, k)))));
    let funct = if funct { Verdict::Pass } else { Verdict::Fail("(g f)* != f* g*".into()) };
    Ok([dd, ring, funct])
}

/// `d∘d = 0` on the source of `f`, `f^*` multiplicative and unital, and
/// `(g∘f)^* = f^*∘g^*`.
pub fn check_cohomology(f: &PosetMap, g: &PosetMap, witness: &Cospan, checker: &mut Checker) {
    match cohomology_verdicts(f, g) {
        Ok(vs) => {
            for (rel, v) in [REL_DD, REL_RING, REL_FUNCT].into_iter().zip(vs) {
                checker.record(rel, v, witness);
            }
        }
        Err(e) => {
            for rel in [REL_DD, REL_RING, REL_FUNCT] {
                let v = if e.is_budget() || matches!(e, Error::SizeLimit { .. }) {
                    Verdict::Skip
                } else {
                    Verdict::Fail(e.to_string())
                };
                checker.record(rel, v, witness);
            }
        }
    }
}

fn add(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Finite(x), Value::Finite(y)) => Value::Finite(x + y),
        _ => Value::Infinite,
    }
}

/// Compares `secat_{φ×ψ}(p×q)` with `secat_φ(p) + secat_ψ(q)`. The outcome is
/// recorded as an observation, never as a failure.
pub fn check_product(c1: &Cospan, c2: &Cospan, checker: &mut Checker) {
    let build = || -> Result<Cospan> {
        let k = product(&c1.k, &c2.k)?;
        let x = product(&c1.x, &c2.x)?;
        let a = product(&c1.a, &c2.a)?;
        let phi = product_map(&c1.phi, &c2.phi, &k, &x)?;
        let p = product_map(&c1.p, &c2.p, &a, &x)?;
        Cospan::new(phi, p, "product")
    };
    let tally = |checker: &mut Checker, skipped: bool| {
        let t = checker.report.relations.entry(REL_PRODUCT.to_owned()).or_default();
        if skipped {
            t.skipped += 1;
        } else {
            t.passed += 1;
        }
    };
    let Ok(prod) = build() else {
        tally(checker, true);
        return;
    };
    let lhs = checker.eval(&prod, Mode::Open);
    let v1 = checker.eval(c1, Mode::Open);
    let v2 = checker.eval(c2, Mode::Open);
    match (lhs, v1, v2) {
        (Ok(lhs), Ok(v1), Ok(v2)) => {
            let rhs = add(v1, v2);
            tally(checker, false);
            checker.report.observations.push(Observation {
                relation: REL_PRODUCT.to_owned(),
                tag: checker.tag,
                lhs,
                rhs,
                holds: lhs <= rhs,
                instance: encode_cospan(&prod, false),
            });
        }
        _ => tally(checker, true),
    }
}

/// Largest `|K1|·|K2|` for which the product comparison is attempted.
pub const PRODUCT_MAX_POINTS: usize = 16;

/// Generates instance `index` and runs every check on it.
pub fn run_instance(cfg: &GeneratorConfig, index: usize) -> CheckReport {
    let ecfg = cfg.engine_config();
    let tag = InstanceTag { seed: cfg.seed, index };
    let mut rng = cfg.instance_rng(index);
    let c = random_cospan_with(cfg, &mut rng);
    let mut checker = Checker::new(tag, &ecfg);
    checker.report.instances = 1;
    let base = Baseline::compute(&c, &mut checker);
    match Extras::generate(&c, cfg, &mut rng) {
        Ok(extras) => {
            check_inequalities(&c, &extras, &base, &mut checker);
            check_cohomology(&c.phi, &extras.wedge.beta, &c, &mut checker);
        }
        Err(e) => checker.record("side data generation", Verdict::Fail(e.to_string()), &c),
    }
    check_homotopy_invariance(&c, &base, &mut rng, &mut checker);
    if cfg.experimental {
        let c2 = random_cospan_with(cfg, &mut rng);
        if c.k.len() * c2.k.len() <= PRODUCT_MAX_POINTS {
            check_product(&c, &c2, &mut checker);
        }
    }
    checker.report
}

/// Runs `cfg.count` instances on `jobs` worker threads (`0` picks the
/// default). The report does not depend on `jobs`.
pub fn run_suite(cfg: &GeneratorConfig, jobs: usize) -> Result<CheckReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Precondition(e.to_string()))?;
    Ok(pool.install(|| {
        (0..cfg.count)
            .into_par_iter()
            .map(|i| run_instance(cfg, i))
            .reduce(CheckReport::default, CheckReport::merge)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = GeneratorConfig {
            seed: 17,
            ..GeneratorConfig::default()
        };
        assert_eq!(random_cospan(&cfg), random_cospan(&cfg));
    }

    #[test]
    fn one_point_configs_give_points() {
        let cfg = GeneratorConfig {
            max_points: 1,
            ..GeneratorConfig::default()
        };
        let c = random_cospan(&cfg);
        assert_eq!((c.k.len(), c.x.len(), c.a.len()), (1, 1, 1));
    }

    #[test]
    fn generated_maps_are_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = random_space(&mut rng, 6, 0.4, 0.5, "p");
            let q = random_space(&mut rng, 6, 0.4, 0.5, "q");
            let f = random_map(&mut rng, &p, &q);
            assert!(PosetMap::new(&p, &q, f.values().to_vec()).is_ok());
        }
    }

    #[test]
    fn connected_bias_one_connects() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert!(random_space(&mut rng, 7, 0.1, 1.0, "p").is_connected());
        }
    }

    #[test]
    fn walks_are_fences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = FiniteSpace::pseudocircle();
        let c = FiniteSpace::chain(3).unwrap();
        let f = random_map(&mut rng, &s, &c);
        let w = random_walk(&mut rng, &f, 10);
        assert!(w.validate(&f, &end_of(&w)).is_ok());
    }

    #[test]
    fn identity_leg_passes_everything() {
        let s = FiniteSpace::pseudocircle();
        let id = PosetMap::identity(&s);
        let c = Cospan::new(id.clone(), id, "id").unwrap();
        let cfg = GeneratorConfig::default();
        let ecfg = cfg.engine_config();
        let mut checker = Checker::new(InstanceTag { seed: 0, index: 0 }, &ecfg);
        let base = Baseline::compute(&c, &mut checker);
        assert_eq!(base.open, Ok(Value::Finite(0)));
        let extras = Extras::generate(&c, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        check_inequalities(&c, &extras, &base, &mut checker);
        assert_eq!(checker.report.hard_failures(), 0, "{:?}", checker.report.failures);
    }

    #[test]
    fn cup_length_bound_is_tight_for_cat_of_circle() {
        let s = FiniteSpace::pseudocircle();
        let c = cat_cospan(&PosetMap::identity(&s)).unwrap();
        let ecfg = EngineConfig::default();
        let mut checker = Checker::new(InstanceTag { seed: 0, index: 0 }, &ecfg);
        assert_eq!(checker.eval(&c, Mode::Open), Ok(Value::Finite(1)));
        assert_eq!(weighted_cup_length(&c), Ok(1));
    }

    #[test]
    fn small_suite_is_clean_and_job_independent() {
        let cfg = GeneratorConfig {
            seed: 11,
            count: 12,
            max_points: 4,
            experimental: true,
            ..GeneratorConfig::default()
        };
        let one = run_suite(&cfg, 1).unwrap();
        let four = run_suite(&cfg, 4).unwrap();
        assert_eq!(one.hard_failures(), 0, "{:?}", one.failures);
        assert_eq!(one, four);
    }
}
