//! Named invariants as relative sectional categories of explicit cospans.
//!
//! Path fibrations never appear: each `π_Y: Y^I → Y × Y` is replaced by the
//! diagonal `Δ_Y`, which it is homotopy equivalent to over `Y × Y`.

use crate::bits::BitSet;
use crate::engine::{Cospan, Engine, EngineConfig, InvariantValue, Mode, Value};
use crate::error::{Error, Result};
use crate::homotopy::{homotopic, HomotopyConfig, HomotopyContext};
use crate::poset::{diagonal, product, product_map, subspace, FiniteSpace, PosetMap, Subset};

/// A specialization together with the cospan it was reduced to.
#[derive(Clone, Debug)]
pub struct Evaluated {
    pub cospan: Cospan,
    pub value: InvariantValue,
}

pub fn evaluate(cospan: Cospan, mode: Mode, cfg: &EngineConfig) -> Result<Evaluated> {
    let engine = Engine::new(cospan, cfg.clone());
    let value = match mode {
        Mode::Open => engine.relative_secat()?,
        Mode::Generalized => engine.generalized_relative_secat()?,
    };
    Ok(Evaluated {
        cospan: engine.cospan().clone(),
        value,
    })
}

fn require_connected(space: &FiniteSpace, what: &str) -> Result<()> {
    if space.is_connected() {
        Ok(())
    } else {
        Err(Error::NotConnected(what.to_owned()))
    }
}

/// `secat(p) = secat_{id_X}(p)`.
pub fn secat_cospan(p: &PosetMap) -> Result<Cospan> {
    Cospan::new(PosetMap::identity(p.codomain()), p.clone(), "secat")
}

/// `cat(φ) = secat_φ(* → X)`, for connected `X`.
pub fn cat_cospan(phi: &PosetMap) -> Result<Cospan> {
    let x = phi.codomain();
    require_connected(x, "codomain of cat")?;
    let pt = FiniteSpace::point();
    Cospan::new(phi.clone(), PosetMap::constant(&pt, x, 0), "cat")
}

/// `tc(X) = secat_{id}(Δ_X)` on `X × X`.
pub fn tc_cospan(x: &FiniteSpace) -> Result<Cospan> {
    let (prod, delta) = diagonal(x)?;
    Cospan::new(PosetMap::identity(&prod.space), delta, "tc")
}

/// `tc_X(A) = secat_{inc_A}(Δ_X)` for `A ⊆ X × X`.
pub fn subspace_tc_cospan(x: &FiniteSpace, a: &Subset) -> Result<Cospan> {
    let (prod, delta) = diagonal(x)?;
    if a.space != prod.space {
        return Err(Error::Precondition("subset must live in X × X".into()));
    }
    if a.members.is_empty() {
        return Err(Error::EmptySubset);
    }
    let (_, inc) = subspace(&prod.space, &a.members)?;
    Cospan::new(inc, delta, "subspace_tc")
}

/// Short's `tc(X, Y) = tc_X(X × Y)`.
pub fn tc_pair_cospan(x: &FiniteSpace, y: &Subset) -> Result<Cospan> {
    if y.space != *x {
        return Err(Error::Precondition("Y must be a subset of X".into()));
    }
    let prod = product(x, x)?;
    let mut members = prod.space.empty_set();
    for a in x.elements() {
        for b in y.members.iter() {
            members.insert(prod.index(a, b));
        }
    }
    let mut c = subspace_tc_cospan(x, &Subset::new(&prod.space, members))?;
    c.label = "tc_pair".into();
    Ok(c)
}

/// Scott's `tc^Sc(f) = secat_{f×f}(Δ_Y)`.
pub fn tc_scott_cospan(f: &PosetMap) -> Result<Cospan> {
    let source = product(f.domain(), f.domain())?;
    let (target, delta) = diagonal(f.codomain())?;
    let ff = product_map(f, f, &source, &target)?;
    Cospan::new(ff, delta, "tc_scott")
}

/// `tc^{1/2}(f) = secat_{id_Y × f}(Δ_Y)` on `Y × X`.
pub fn tc_mixed_cospan(f: &PosetMap) -> Result<Cospan> {
    let y = f.codomain();
    let source = product(y, f.domain())?;
    let (target, delta) = diagonal(y)?;
    let phi = product_map(&PosetMap::identity(y), f, &source, &target)?;
    Cospan::new(phi, delta, "tc_mixed")
}

/// Murillo–Wu `secat^MW_f(p) = secat_f(f ∘ p)` for `E --p--> B --f--> X`.
pub fn mw_secat_cospan(p: &PosetMap, f: &PosetMap) -> Result<Cospan> {
    let fp = f.after(p)?;
    Cospan::new(f.clone(), fp, "mw_secat")
}

/// `tc^MW(f) = secat_{f×f}(Δ_Y ∘ f)`.
pub fn tc_mw_cospan(f: &PosetMap) -> Result<Cospan> {
    let source = product(f.domain(), f.domain())?;
    let (target, delta) = diagonal(f.codomain())?;
    let ff = product_map(f, f, &source, &target)?;
    Cospan::new(ff, delta.after(f)?, "tc_mw")
}

/// `D(φ, ψ) = secat_{(φ,ψ)}(Δ_Y)`.
pub fn distance_cospan(phi: &PosetMap, psi: &PosetMap) -> Result<Cospan> {
    if !phi.same_signature(psi) {
        return Err(Error::MismatchedSignature);
    }
    let (target, delta) = diagonal(phi.codomain())?;
    Cospan::new(target.pair(phi, psi)?, delta, "distance")
}

pub fn secat(p: &PosetMap, cfg: &EngineConfig) -> Result<Evaluated> {
    evaluate(secat_cospan(p)?, Mode::Open, cfg)
}

pub fn cat_map(phi: &PosetMap, cfg: &EngineConfig) -> Result<Evaluated> {
    evaluate(cat_cospan(phi)?, Mode::Open, cfg)
}

pub fn tc(x: &FiniteSpace, cfg: &EngineConfig) -> Result<Evaluated> {
    evaluate(tc_cospan(x)?, Mode::Open, cfg)
}

pub fn subspace_tc(x: &FiniteSpace, a: &Subset, cfg: &EngineConfig) -> Result<Evaluated> {
    evaluate(subspace_tc_cospan(x, a)?, Mode::Open, cfg)
}

pub fn tc_pair(x: &FiniteSpace, y: &Subset, cfg: &EngineConfig) -> Result<Evaluated> {
    evaluate(tc_pair_cospan(x, y)?, Mode::Open, cfg)
}

pub fn tc_scott(f: &PosetMap, cfg: &EngineConfig) -> Result<Evaluated> {
    evaluate(tc_scott_cospan(f)?, Mode::Open, cfg)
}

pub fn tc_mixed(f: &PosetMap, cfg: &EngineConfig) -> Result<Evaluated> {
    evaluate(tc_mixed_cospan(f)?, Mode::Open, cfg)
}

pub fn mw_secat(p: &PosetMap, f: &PosetMap, cfg: &EngineConfig) -> Result<Evaluated> {
    evaluate(mw_secat_cospan(p, f)?, Mode::Open, cfg)
}

pub fn tc_mw(f: &PosetMap, cfg: &EngineConfig) -> Result<Evaluated> {
    evaluate(tc_mw_cospan(f)?, Mode::Open, cfg)
}

/// Largest number of maximal points the direct distance route enumerates.
pub const DIRECT_MAX_POINTS: usize = 16;

/// `D(φ, ψ)` straight from its definition: the least `n` such that `X` has
/// an open cover by `n + 1` sets on which `φ` and `ψ` restrict to homotopic
/// maps. Subsets of maximal points are enumerated by bitmask and the cover
/// found by breadth-first search over covered masks.
pub fn distance_direct(phi: &PosetMap, psi: &PosetMap, cfg: &EngineConfig) -> Result<Value> {
    if !phi.same_signature(psi) {
        return Err(Error::MismatchedSignature);
    }
    let x = phi.domain();
    let maxes = x.maximal_points();
    let m = maxes.len();
    if m > DIRECT_MAX_POINTS {
        return Err(Error::SearchBudgetExceeded {
            budget: DIRECT_MAX_POINTS,
            bracket: None,
        });
    }
    let ctx = HomotopyContext::new(HomotopyConfig {
        max_maps: cfg.max_maps,
        oracle_fallback: cfg.oracle_fallback,
        deadline: cfg.timeout.map(|t| std::time::Instant::now() + t),
    });
    let full = (1usize << m) - 1;
    let mut good = vec![false; full + 1];
    good[0] = true;
    for mask in 1..=full {
        // every proper submask of a good set is good
        if (0..m).any(|i| mask >> i & 1 == 1 && !good[mask & !(1 << i)]) {
            continue;
        }
        let mut u = BitSet::new(x.len());
        for (i, &pt) in maxes.iter().enumerate() {
            if mask >> i & 1 == 1 {
                u.union_with(x.down(pt));
            }
        }
        let (_, inc) = subspace(x, &u)?;
        good[mask] = homotopic(&ctx, &phi.after(&inc)?, &psi.after(&inc)?)?.is_some();
    }
    if (0..m).any(|i| !good[1 << i]) {
        return Ok(Value::Infinite);
    }
    let maximal_good: Vec<usize> = (1..=full)
        .filter(|&mask| good[mask] && (0..m).all(|i| mask >> i & 1 == 1 || !good[mask | 1 << i]))
        .collect();
    let mut dist = vec![usize::MAX; full + 1];
    dist[0] = 0;
    let mut frontier = vec![0usize];
    let mut level = 0;
    while dist[full] == usize::MAX {
        level += 1;
        let mut next = Vec::new();
        for &covered in &frontier {
            for &g in &maximal_good {
                let c = covered | g;
                if dist[c] == usize::MAX {
                    dist[c] = level;
                    next.push(c);
                }
            }
        }
        frontier = next;
    }
    Ok(Value::Finite(dist[full] - 1))
}

/// Homotopic distance through the engine, cross-checked against the direct
/// definition.
pub fn homotopic_distance(phi: &PosetMap, psi: &PosetMap, cfg: &EngineConfig) -> Result<Evaluated> {
    let ev = evaluate(distance_cospan(phi, psi)?, Mode::Open, cfg)?;
    let direct = distance_direct(phi, psi, cfg)?;
    if direct != ev.value.value {
        return Err(Error::CrossCheckMismatch(format!(
            "homotopic distance: engine gives {}, direct definition gives {}",
            ev.value.value, direct
        )));
    }
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> EngineConfig {
        EngineConfig::default()
    }

    fn val(e: Result<Evaluated>) -> Value {
        e.unwrap().value.value
    }

    #[test]
    fn secat_examples() {
        let s = FiniteSpace::pseudocircle();
        assert_eq!(val(secat(&PosetMap::identity(&s), &cfg())), Value::Finite(0));
        let pt = FiniteSpace::point();
        let incl = PosetMap::constant(&pt, &s, 2);
        assert_eq!(val(secat(&incl, &cfg())), Value::Finite(1));
        let two = FiniteSpace::antichain(2).unwrap();
        assert_eq!(val(secat(&PosetMap::constant(&pt, &two, 1), &cfg())), Value::Infinite);
    }

    #[test]
    fn cat_examples() {
        let s = FiniteSpace::pseudocircle();
        assert_eq!(val(cat_map(&PosetMap::constant(&s, &s, 0), &cfg())), Value::Finite(0));
        assert_eq!(val(cat_map(&PosetMap::identity(&s), &cfg())), Value::Finite(1));
        let ch = FiniteSpace::chain(3).unwrap();
        assert_eq!(val(cat_map(&PosetMap::identity(&ch), &cfg())), Value::Finite(0));
        let two = FiniteSpace::antichain(2).unwrap();
        assert!(matches!(cat_map(&PosetMap::identity(&two), &cfg()), Err(Error::NotConnected(_))));
    }

    #[test]
    fn tc_examples() {
        let ch = FiniteSpace::chain(3).unwrap();
        assert_eq!(val(tc(&ch, &cfg())), Value::Finite(0));
        let two = FiniteSpace::antichain(2).unwrap();
        assert_eq!(val(tc(&two, &cfg())), Value::Infinite);
    }

    #[test]
    fn subspace_tc_examples() {
        let s = FiniteSpace::pseudocircle();
        let (prod, delta) = diagonal(&s).unwrap();
        let diag = Subset::new(&prod.space, delta.image());
        assert_eq!(val(subspace_tc(&s, &diag, &cfg())), Value::Finite(0));
        let cd = Subset::from_names(&prod.space, &["(c,d)"]).unwrap();
        assert_eq!(val(subspace_tc(&s, &cd, &cfg())), Value::Finite(0));
        let empty = Subset::new(&prod.space, prod.space.empty_set());
        assert_eq!(subspace_tc(&s, &empty, &cfg()).unwrap_err(), Error::EmptySubset);
        let all = Subset::new(&prod.space, prod.space.full_set());
        assert_eq!(val(subspace_tc(&s, &all, &cfg())), val(tc(&s, &cfg())));
    }

    #[test]
    fn map_complexities_degenerate_cases() {
        let s = FiniteSpace::pseudocircle();
        let ch = FiniteSpace::chain(2).unwrap();
        let konst = PosetMap::constant(&s, &s, 0);
        assert_eq!(val(tc_scott(&konst, &cfg())), Value::Finite(0));
        assert_eq!(val(tc_mw(&konst, &cfg())), Value::Finite(0));
        let to_chain = PosetMap::constant(&s, &ch, 1);
        assert_eq!(val(tc_scott(&to_chain, &cfg())), Value::Finite(0));
        let id_ch = PosetMap::identity(&ch);
        assert_eq!(val(tc_mixed(&id_ch, &cfg())), Value::Finite(0));
        let p = PosetMap::identity(&s);
        assert_eq!(val(mw_secat(&p, &konst, &cfg())), Value::Finite(0));
    }

    #[test]
    fn distance_of_equal_maps_is_zero() {
        let s = FiniteSpace::pseudocircle();
        let id = PosetMap::identity(&s);
        assert_eq!(val(homotopic_distance(&id, &id, &cfg())), Value::Finite(0));
        let two = FiniteSpace::antichain(2).unwrap();
        let pt = FiniteSpace::point();
        let a = PosetMap::constant(&pt, &two, 0);
        let b = PosetMap::constant(&pt, &two, 1);
        assert_eq!(val(homotopic_distance(&a, &b, &cfg())), Value::Infinite);
    }
}
