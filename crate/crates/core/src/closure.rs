//! The `e` map from triplets to elementary triplets, and the closure engines.
//!
//! [`close_elementary`] is the production engine: a worklist fixpoint over the
//! elementary rules, run separately in every context stratum. The rules only
//! relate triplets that share their anchored element, so each derivation step
//! is a handful of hash lookups.
//!
//! [`close_triplets_oracle`] closes a set of general triplets under the
//! triplet-level properties by brute force. It is exponential and guarded to
//! small universes; it exists to cross-check the elementary engine.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::model::{Core, ElementaryModel, Stratum};
use crate::query::is_member;
use crate::triplet::{AxiomLevel, ElementaryTriplet, Triplet};
use crate::universe::{Context, Universe};
use crate::varset::VarSet;

/// Largest universe accepted by the brute-force triplet-space operations.
pub const ORACLE_LIMIT: usize = 8;

/// Expands general triplets into the elementary triplets they imply by
/// weak union and decomposition, in canonical form.
pub fn expand_e<'a, I>(u: &Universe, triplets: I) -> Result<BTreeSet<ElementaryTriplet>>
where
    I: IntoIterator<Item = &'a Triplet>,
{
    let mut out = BTreeSet::new();
    for t in triplets {
        t.validate(u)?;
        for i in t.left {
            for j in t.right {
                let window = t.left.without(i) | t.right.without(j);
                for extra in window.subsets() {
                    out.insert(
                        ElementaryTriplet::new(i, j, t.cond | extra)
                            .with_context(t.ctx.clone())
                            .canonical(),
                    );
                }
            }
        }
    }
    Ok(out)
}

/// Expands `triplets` and wraps the result in an (open) model.
pub fn expand_model<'a, I>(
    u: std::sync::Arc<Universe>,
    level: AxiomLevel,
    triplets: I,
) -> Result<ElementaryModel>
where
    I: IntoIterator<Item = &'a Triplet>,
{
    let elems = expand_e(&u, triplets)?;
    let mut m = ElementaryModel::from_triplets(u, level, elems)?;
    m.set_closed(false);
    Ok(m)
}

/// The minimal superset of `model` closed under the rules of its level.
pub fn close_elementary(model: &ElementaryModel) -> ElementaryModel {
    close_elementary_with_budget(model, None).expect("unbudgeted closure cannot run out")
}

/// Like [`close_elementary`], failing with `BudgetExhausted` after `budget`
/// worklist steps.
pub fn close_elementary_with_budget(
    model: &ElementaryModel,
    budget: Option<u64>,
) -> Result<ElementaryModel> {
    if model.is_closed() {
        return Ok(model.clone());
    }
    let universe = model.universe_arc().clone();
    let mut engine = Engine::new(model.level(), model.is_symmetric(), budget);
    let mut strata = model.strata().clone();
    for (ctx, stratum) in strata.iter_mut() {
        let vars = universe.all() - ctx.keys();
        let seeds: Vec<Core> = stratum.iter().copied().collect();
        engine.run(stratum, vars, seeds)?;
    }
    Ok(ElementaryModel::from_parts(
        universe,
        model.level(),
        model.is_symmetric(),
        true,
        strata,
    ))
}

/// Adds `new` to an already closed model and restores closure incrementally.
pub fn extend_closed(model: &mut ElementaryModel, new: &[ElementaryTriplet]) -> Result<()> {
    if !model.is_closed() {
        return Err(Error::NotClosed);
    }
    let mut by_ctx: HashMap<Context, Vec<Core>> = HashMap::new();
    for t in new {
        t.validate(model.universe_arc())?;
        by_ctx
            .entry(t.ctx.clone())
            .or_default()
            .push(Core::new(t.left, t.right, t.cond));
    }
    let universe = model.universe_arc().clone();
    let mut engine = Engine::new(model.level(), model.is_symmetric(), None);
    let mut strata = std::mem::take(model).into_strata();
    for (ctx, seeds) in by_ctx {
        let stratum = strata.entry(ctx.clone()).or_default();
        let seeds: Vec<Core> = seeds
            .into_iter()
            .map(|c| if engine.symmetric { c.canonical() } else { c })
            .filter(|c| stratum.insert(*c))
            .collect();
        let vars = universe.all() - ctx.keys();
        engine.run(stratum, vars, seeds)?;
    }
    let level = engine.level;
    let symmetric = engine.symmetric;
    *model = ElementaryModel::from_parts(universe, level, symmetric, true, strata);
    Ok(())
}

impl Default for ElementaryModel {
    fn default() -> Self {
        ElementaryModel::new(std::sync::Arc::new(Universe::new()), AxiomLevel::Semigraphoid)
    }
}

impl ElementaryModel {
    fn into_strata(self) -> std::collections::BTreeMap<Context, Stratum> {
        self.strata().clone()
    }
}

struct Engine {
    level: AxiomLevel,
    symmetric: bool,
    budget: Option<u64>,
    steps: u64,
}

impl Engine {
    fn new(level: AxiomLevel, symmetric: bool, budget: Option<u64>) -> Self {
        Engine {
            level,
            symmetric,
            budget,
            steps: 0,
        }
    }

    /// Runs the worklist until `set` is closed, starting from `seeds` (which
    /// must already be members of `set`).
    fn run(&mut self, set: &mut Stratum, vars: VarSet, seeds: Vec<Core>) -> Result<()> {
        let mut queue: VecDeque<Core> = seeds.into();
        let mut derived = Vec::new();
        while let Some(t) = queue.pop_front() {
            self.steps += 1;
            if self.budget.is_some_and(|b| self.steps > b) {
                return Err(Error::BudgetExhausted);
            }
            let (a, b) = (t.left as usize, t.right as usize);
            derived.clear();
            if self.symmetric {
                let has = |x: usize, y: usize, k: VarSet| set.contains(&Core::new(x, y, k).canonical());
                anchored_rules(a, b, t.cond, vars, self.level, &has, &mut derived);
                anchored_rules(b, a, t.cond, vars, self.level, &has, &mut derived);
                for d in derived.iter_mut() {
                    *d = d.canonical();
                }
            } else {
                // Left-anchored family on the stored orientation.
                let has = |x: usize, y: usize, k: VarSet| set.contains(&Core::new(x, y, k));
                anchored_rules(a, b, t.cond, vars, self.level, &has, &mut derived);
                // Right-anchored (primed) family: the same rules on the mirrored view.
                let has_m = |x: usize, y: usize, k: VarSet| set.contains(&Core::new(y, x, k));
                let start = derived.len();
                anchored_rules(b, a, t.cond, vars, self.level, &has_m, &mut derived);
                for d in derived[start..].iter_mut() {
                    *d = Core {
                        left: d.right,
                        right: d.left,
                        cond: d.cond,
                    };
                }
            }
            for d in derived.drain(..) {
                if set.insert(d) {
                    queue.push_back(d);
                }
            }
        }
        Ok(())
    }
}

/// Fires every rule in which the oriented triplet `anchor ⟂ other | cond` is a
/// premise and `anchor` is the shared first element.
fn anchored_rules(
    anchor: usize,
    other: usize,
    cond: VarSet,
    vars: VarSet,
    level: AxiomLevel,
    has: &dyn Fn(usize, usize, VarSet) -> bool,
    out: &mut Vec<Core>,
) {
    let i = anchor;
    let x = other;
    let free = vars - cond - VarSet::singleton(i) - VarSet::singleton(x);

    // Contraction / weak union, as a swap between {i⟂j|kL, i⟂k|L} and {i⟂k|jL, i⟂j|L}.
    // Current triplet as i⟂j|kL with j = x.
    for k in cond {
        let l = cond.without(k);
        if has(i, k, l) {
            out.push(Core::new(i, k, l.with(x)));
            out.push(Core::new(i, x, l));
        }
    }
    // Current triplet as i⟂k|L with k = x.
    for j in free {
        if has(i, j, cond.with(x)) {
            out.push(Core::new(i, x, cond.with(j)));
            out.push(Core::new(i, j, cond));
        }
    }

    if level.has_intersection() {
        // i⟂j|kL, i⟂k|jL ⇒ i⟂j|L, i⟂k|L
        for k in cond {
            let l = cond.without(k);
            if has(i, k, l.with(x)) {
                out.push(Core::new(i, x, l));
                out.push(Core::new(i, k, l));
            }
        }
    }

    if level.has_composition() {
        // i⟂j|L, i⟂k|L ⇒ i⟂j|kL, i⟂k|jL
        for k in free {
            if has(i, k, cond) {
                out.push(Core::new(i, x, cond.with(k)));
                out.push(Core::new(i, k, cond.with(x)));
            }
        }
    }
}

/// Brute-force closure of general triplets under the triplet-level properties.
pub fn close_triplets_oracle<'a, I>(
    u: &Universe,
    triplets: I,
    level: AxiomLevel,
) -> Result<BTreeSet<Triplet>>
where
    I: IntoIterator<Item = &'a Triplet>,
{
    if u.len() > ORACLE_LIMIT {
        return Err(Error::UniverseTooLarge {
            size: u.len(),
            limit: ORACLE_LIMIT,
        });
    }
    type Key = (Context, VarSet);
    let mut set: HashSet<Triplet> = HashSet::new();
    let mut by_left: HashMap<Key, Vec<(VarSet, VarSet)>> = HashMap::new();
    let mut queue: VecDeque<Triplet> = VecDeque::new();

    let push = |t: Triplet,
                    set: &mut HashSet<Triplet>,
                    by_left: &mut HashMap<Key, Vec<(VarSet, VarSet)>>,
                    queue: &mut VecDeque<Triplet>| {
        if set.insert(t.clone()) {
            by_left
                .entry((t.ctx.clone(), t.left))
                .or_default()
                .push((t.right, t.cond));
            queue.push_back(t);
        }
    };

    for t in triplets {
        t.validate(u)?;
        push(t.clone(), &mut set, &mut by_left, &mut queue);
    }

    let mut derived: Vec<Triplet> = Vec::new();
    while let Some(t) = queue.pop_front() {
        derived.clear();
        let mk = |l: VarSet, r: VarSet, c: VarSet| Triplet::new(l, r, c).with_context(t.ctx.clone());

        // Symmetry.
        derived.push(t.mirrored());

        // Weak union and decomposition: split the right side.
        for a in t.right.subsets() {
            let b = t.right - a;
            if a.is_empty() || b.is_empty() {
                continue;
            }
            derived.push(mk(t.left, a, t.cond | b));
            derived.push(mk(t.left, b, t.cond));
        }

        let partners = by_left
            .get(&(t.ctx.clone(), t.left))
            .cloned()
            .unwrap_or_default();
        for &(r2, c2) in &partners {
            for ((xr, xc), (yr, yc)) in [((t.right, t.cond), (r2, c2)), ((r2, c2), (t.right, t.cond))] {
                // Contraction: I⟂J|KL, I⟂K|L ⇒ I⟂JK|L
                if yr.is_subset(xc) && yc == xc - yr && xr.is_disjoint(yr) {
                    derived.push(mk(t.left, xr | yr, yc));
                }
                // Intersection: I⟂J|KL, I⟂K|JL ⇒ I⟂J|L, I⟂K|L
                if level.has_intersection()
                    && xr.is_disjoint(yr)
                    && yr.is_subset(xc)
                    && xr.is_subset(yc)
                    && xc - yr == yc - xr
                {
                    let l = xc - yr;
                    derived.push(mk(t.left, xr, l));
                    derived.push(mk(t.left, yr, l));
                }
                // Composition: I⟂J|L, I⟂K|L ⇒ I⟂J|KL, I⟂K|JL
                if level.has_composition() && xc == yc && xr.is_disjoint(yr) {
                    derived.push(mk(t.left, xr, xc | yr));
                    derived.push(mk(t.left, yr, xc | xr));
                }
            }
        }

        for d in derived.drain(..) {
            push(d, &mut set, &mut by_left, &mut queue);
        }
    }
    Ok(set.into_iter().collect())
}

/// Every triplet represented by a closed elementary model.
pub fn enumerate_model(model: &ElementaryModel) -> Result<BTreeSet<Triplet>> {
    if !model.is_closed() {
        return Err(Error::NotClosed);
    }
    let u = model.universe_arc();
    if u.len() > ORACLE_LIMIT {
        return Err(Error::UniverseTooLarge {
            size: u.len(),
            limit: ORACLE_LIMIT,
        });
    }
    let mut out = BTreeSet::new();
    for ctx in model.contexts() {
        let vars: Vec<usize> = (u.all() - ctx.keys()).iter().collect();
        for t in all_triplets(&vars) {
            let t = t.with_context(ctx.clone());
            if is_member(model, t.left, t.right, t.cond, &t.ctx)? {
                out.insert(t);
            }
        }
    }
    Ok(out)
}

/// Every triplet with nonempty sides over `vars` (no context).
pub fn all_triplets(vars: &[usize]) -> Vec<Triplet> {
    let n = vars.len();
    let mut out = Vec::new();
    for code in 0..4usize.pow(n as u32) {
        let (mut l, mut r, mut c) = (VarSet::EMPTY, VarSet::EMPTY, VarSet::EMPTY);
        let mut rest = code;
        for &v in vars {
            match rest % 4 {
                0 => l.insert(v),
                1 => r.insert(v),
                2 => c.insert(v),
                _ => {}
            }
            rest /= 4;
        }
        if !l.is_empty() && !r.is_empty() {
            out.push(Triplet::new(l, r, c));
        }
    }
    out
}
