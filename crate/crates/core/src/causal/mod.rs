//! Causal effect identification over regime-augmented independence models.
//!
//! A regime universe holds the observed variables `0..n` followed by one
//! context variable `F_j` per observed `j`, with domain `{obs, int}`. A
//! conditional independence `L ⟂ R | C` written with interventions `I_X` is
//! looked up under the context that binds every `F_j` not among the triplet's
//! members: `int` when `j ∈ X`, `obs` otherwise.

pub mod estimand;
pub mod scm;

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::ElementarySource;
use crate::query::is_member;
use crate::universe::{Context, Universe, VarKind};
use crate::varset::VarSet;

pub use estimand::{Estimand, Evaluation, Expr};
pub use scm::{CausalGraph, RegimeDsepModel, StructuralModel};

/// Value index of `obs` in an F variable's domain.
pub const OBS: usize = 0;
/// Value index of `int` in an F variable's domain.
pub const INT: usize = 1;

/// The layout of a regime universe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Regime {
    universe: Arc<Universe>,
    n: usize,
}

impl Regime {
    /// Observed variables named `names`, plus `F_<name>` for each.
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut u = Universe::with_base(names)?;
        for n in names {
            u.add_context(&format!("F_{}", n.as_ref()), &["obs", "int"])?;
        }
        Ok(Regime {
            universe: Arc::new(u),
            n: names.len(),
        })
    }

    /// Recognizes the regime layout in an existing universe.
    pub fn from_universe(universe: Arc<Universe>) -> Result<Self> {
        let len = universe.len();
        let n = len / 2;
        let bad = |m: String| Err(Error::InvalidSets(format!("not a regime universe: {m}")));
        if len % 2 != 0 {
            return bad("odd number of variables".into());
        }
        for j in 0..n {
            if universe.is_context(j) {
                return bad(format!("`{}` should be an observed variable", universe.name(j)));
            }
            let f = n + j;
            let expected = format!("F_{}", universe.name(j));
            let ok = universe.name(f) == expected
                && matches!(&universe.vars()[f].kind, VarKind::Context { domain } if domain == &["obs", "int"]);
            if !ok {
                return bad(format!("expected `{expected}` with domain {{obs, int}} at position {f}"));
            }
        }
        Ok(Regime { universe, n })
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    /// Number of observed variables.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn base(&self) -> VarSet {
        VarSet::full(self.n)
    }

    /// Index of `F_j`.
    pub fn f(&self, j: usize) -> usize {
        self.n + j
    }

    /// `{F_j : j ∈ x}`.
    pub fn f_of(&self, x: VarSet) -> VarSet {
        VarSet::from_bits(x.bits() << self.n)
    }

    /// The context binding every F variable outside `members`.
    pub fn shortcut(&self, members: VarSet, intervened: VarSet) -> Context {
        let mut ctx = Context::empty();
        for j in 0..self.n {
            let f = self.f(j);
            if !members.contains(f) {
                ctx = ctx.bind(f, if intervened.contains(j) { INT } else { OBS });
            }
        }
        ctx
    }
}

/// `p̃(target | I_intervened intervened given)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PTilde {
    pub target: VarSet,
    pub intervened: VarSet,
    pub given: VarSet,
}

impl PTilde {
    pub fn display(&self, u: &Universe) -> String {
        Estimand {
            target: self.target,
            intervened: self.intervened,
            given: self.given - self.intervened,
            expr: Expr::prob(self.target, VarSet::EMPTY),
        }
        .lhs(u)
    }
}

/// An equality licensed by one of the three rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rewrite {
    pub rule: u8,
    pub before: PTilde,
    pub after: PTilde,
}

impl Rewrite {
    pub fn display(&self, u: &Universe) -> String {
        format!("{} = {}", self.before.display(u), self.after.display(u))
    }
}

/// The effect `p(y | do(x), w)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CausalQuery {
    pub x: VarSet,
    pub y: VarSet,
    pub w: VarSet,
}

impl CausalQuery {
    pub fn new(x: VarSet, y: VarSet, w: VarSet) -> Self {
        CausalQuery { x, y, w }
    }
}

/// One case application in an identification derivation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Step {
    pub case: u8,
    pub y: VarSet,
    pub w: VarSet,
    pub z: VarSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Identified {
    pub estimand: Estimand,
    /// Case applications, outermost first.
    pub steps: Vec<Step>,
}

/// A sequence of interventions `X₁ … Xₙ`, with `Nₖ` observed before `Xₖ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanQuery {
    pub controls: Vec<VarSet>,
    pub pools: Vec<VarSet>,
    pub target: VarSet,
    /// Further observed targets, drawn from the last pool.
    pub extra: VarSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan {
    pub z: Vec<VarSet>,
    pub estimand: Estimand,
}

/// Identification machinery over a closed regime model.
pub struct CausalModel<'a, S: ElementarySource + ?Sized> {
    src: &'a S,
    regime: Regime,
}

impl<'a, S: ElementarySource + ?Sized> CausalModel<'a, S> {
    pub fn new(src: &'a S, universe: Arc<Universe>) -> Result<Self> {
        if !src.is_closed() {
            return Err(Error::NotClosed);
        }
        if *src.universe() != *universe {
            return Err(Error::UniverseMismatch);
        }
        Ok(CausalModel {
            src,
            regime: Regime::from_universe(universe)?,
        })
    }

    pub fn regime(&self) -> &Regime {
        &self.regime
    }

    pub fn universe(&self) -> &Universe {
        self.regime.universe()
    }

    /// `left ⟂ right | I_intervened cond`; vacuously true when a side is empty.
    pub fn tci(&self, left: VarSet, right: VarSet, cond: VarSet, intervened: VarSet) -> Result<bool> {
        if left.is_empty() || right.is_empty() {
            return Ok(true);
        }
        let ctx = self.regime.shortcut(left | right | cond, intervened);
        is_member(self.src, left, right, cond, &ctx)
    }

    fn check_disjoint(&self, sets: &[(&str, VarSet)]) -> Result<()> {
        let base = self.regime.base();
        for (k, &(name, s)) in sets.iter().enumerate() {
            if !s.is_subset(base) {
                return Err(Error::InvalidSets(format!("{name} contains non-observed variables")));
            }
            for &(other, t) in &sets[..k] {
                if !s.is_disjoint(t) {
                    return Err(Error::InvalidSets(format!("{name} and {other} overlap")));
                }
            }
        }
        Ok(())
    }

    /// Checks the antecedent of rule 1, 2 or 3 for `p̃(Y | I_Z Z W …)` and
    /// returns the rewrite it licenses:
    ///
    /// 1. `Y ⟂ X | I_Z W Z`: `p̃(Y|I_Z X W Z) = p̃(Y|I_Z W Z)`
    /// 2. `Y ⟂ F_X | I_Z X W Z`: `p̃(Y|I_X I_Z X W Z) = p̃(Y|I_Z X W Z)`
    /// 3. `Y ⟂ X | I_X I_Z W Z` and `Y ⟂ F_X | I_Z W Z`:
    ///    `p̃(Y|I_X I_Z X W Z) = p̃(Y|I_Z W Z)`
    pub fn apply_rule(&self, rule: u8, x: VarSet, y: VarSet, w: VarSet, z: VarSet) -> Result<Option<Rewrite>> {
        self.check_disjoint(&[("X", x), ("Y", y), ("W", w), ("Z", z)])?;
        if x.is_empty() || y.is_empty() {
            return Err(Error::InvalidSets("X and Y must be nonempty".into()));
        }
        let fx = self.regime.f_of(x);
        let p = |intervened: VarSet, given: VarSet| PTilde {
            target: y,
            intervened,
            given,
        };
        let (ok, before, after) = match rule {
            1 => (
                self.tci(y, x, w | z, z)?,
                p(z, x | w | z),
                p(z, w | z),
            ),
            2 => (
                self.tci(y, fx, x | w | z, z)?,
                p(x | z, x | w | z),
                p(z, x | w | z),
            ),
            3 => (
                self.tci(y, x, w | z, x | z)? && self.tci(y, fx, w | z, z)?,
                p(x | z, x | w | z),
                p(z, w | z),
            ),
            _ => return Err(Error::InvalidSets(format!("there is no rule {rule}"))),
        };
        Ok(ok.then_some(Rewrite { rule, before, after }))
    }

    fn check_query(&self, q: &CausalQuery) -> Result<()> {
        self.check_disjoint(&[("X", q.x), ("Y", q.y), ("W", q.w)])?;
        if q.x.is_empty() || q.y.is_empty() {
            return Err(Error::InvalidSets("X and Y must be nonempty".into()));
        }
        Ok(())
    }

    /// Searches cases 1 to 4 for an estimand of `p(y | do(x), w)`, trying
    /// conditioning sets Z by ascending size then mask. Cases 3 and 4 recurse
    /// at most `max_depth` levels (default: the number of observed variables).
    ///
    /// `Ok(None)` means no case applied; `DepthExhausted` means the search
    /// failed after cutting off at least one recursion.
    pub fn identify(&self, q: &CausalQuery, max_depth: Option<usize>) -> Result<Option<Identified>> {
        self.check_query(q)?;
        let mut s = Solver::new(self, q.x);
        let depth = max_depth.unwrap_or(self.regime.n());
        match s.solve(q.y, q.w, depth)? {
            Some(found) => Ok(Some(s.finish(q, found))),
            None if s.exhausted => Err(Error::DepthExhausted),
            None => Ok(None),
        }
    }

    /// Applies one case with a fixed Z; recursive cases use [`identify`](Self::identify)'s search for the sub-query.
    pub fn try_case(&self, case: u8, q: &CausalQuery, z: VarSet, max_depth: Option<usize>) -> Result<Option<Identified>> {
        self.check_query(q)?;
        self.check_disjoint(&[("X", q.x), ("Y", q.y), ("W", q.w), ("Z", z)])?;
        if !(1..=4).contains(&case) {
            return Err(Error::InvalidSets(format!("there is no case {case}")));
        }
        let mut s = Solver::new(self, q.x);
        let depth = max_depth.unwrap_or(self.regime.n());
        match s.case(case, q.y, q.w, z, depth)? {
            Some(found) => Ok(Some(s.finish(q, found))),
            None => Ok(None),
        }
    }

    fn check_plan(&self, q: &PlanQuery) -> Result<()> {
        let n = q.controls.len();
        if n == 0 || q.pools.len() != n {
            return Err(Error::InvalidSets("a plan needs one pool per control set".into()));
        }
        if q.target.is_empty() {
            return Err(Error::InvalidSets("plan target is empty".into()));
        }
        let controls = q.controls.iter().fold(VarSet::EMPTY, |a, &c| a | c);
        let mut named: Vec<(String, VarSet)> = q
            .controls
            .iter()
            .enumerate()
            .map(|(k, &c)| (format!("X{}", k + 1), c))
            .collect();
        named.push(("Y".into(), q.target));
        let refs: Vec<(&str, VarSet)> = named.iter().map(|(s, v)| (s.as_str(), *v)).collect();
        self.check_disjoint(&refs)?;
        if q.controls.iter().any(|c| c.is_empty()) {
            return Err(Error::InvalidSets("control sets must be nonempty".into()));
        }
        for (k, &pool) in q.pools.iter().enumerate() {
            if !pool.is_subset(self.regime.base()) || !pool.is_disjoint(controls | q.target) {
                return Err(Error::InvalidSets(format!(
                    "pool N{} must hold observed variables outside the controls and targets",
                    k + 1
                )));
            }
        }
        if !q.extra.is_subset(q.pools[n - 1]) {
            return Err(Error::InvalidSets("W must be drawn from the last pool".into()));
        }
        Ok(())
    }

    /// Finds disjoint `Zₖ ⊆ Nₖ ∖ W`, each minimal given the earlier ones, with
    /// `W Y ⟂ F_{Xₖ} | I_{Xₖ₊₁…Xₙ} X₁…Xₙ Z₁…Zₖ`, backtracking over the
    /// alternatives. With `check_natural`, also requires that no pool is
    /// affected by its own or later interventions:
    /// `Nₖ ⟂ Xₖ…Xₙ | I_{Xₖ…Xₙ} X₁…Xₖ₋₁ Z₁…Zₖ₋₁` and
    /// `Nₖ ⟂ F_{Xₖ…Xₙ} | X₁…Xₖ₋₁ Z₁…Zₖ₋₁`, with `Nₖ` less the conditioning set.
    pub fn evaluate_plan(&self, q: &PlanQuery, check_natural: bool) -> Result<Option<Plan>> {
        self.check_plan(q)?;
        let mut chosen = Vec::new();
        if !self.plan_step(q, &mut chosen)? {
            return Ok(None);
        }
        let n = q.controls.len();
        let x_all = q.controls.iter().fold(VarSet::EMPTY, |a, &c| a | c);
        if check_natural {
            let mut before = VarSet::EMPTY;
            for k in 0..n {
                let later = q.controls[k..].iter().fold(VarSet::EMPTY, |a, &c| a | c);
                let pool = q.pools[k] - before;
                let eq1 = self.tci(pool, later, before, later)?;
                let eq2 = self.tci(pool, self.regime.f_of(later), before, VarSet::EMPTY)?;
                if !eq1 || !eq2 {
                    return Err(Error::NaturalnessViolated { step: k + 1 });
                }
                before |= q.controls[k] | chosen[k];
            }
        }
        let z_all = chosen.iter().fold(VarSet::EMPTY, |a, &z| a | z);
        let wy = q.extra | q.target;
        let mut factors = vec![Expr::prob(wy, x_all | z_all)];
        let mut before = VarSet::EMPTY;
        for k in 0..n {
            if !chosen[k].is_empty() {
                factors.push(Expr::prob(chosen[k], before));
            }
            before |= q.controls[k] | chosen[k];
        }
        Ok(Some(Plan {
            estimand: Estimand {
                target: wy,
                intervened: x_all,
                given: VarSet::EMPTY,
                expr: Expr::sum(z_all, Expr::product(factors)),
            },
            z: chosen,
        }))
    }

    fn plan_step(&self, q: &PlanQuery, chosen: &mut Vec<VarSet>) -> Result<bool> {
        let k = chosen.len();
        let n = q.controls.len();
        if k == n {
            return Ok(true);
        }
        let used = chosen.iter().fold(VarSet::EMPTY, |a, &z| a | z);
        let x_all = q.controls.iter().fold(VarSet::EMPTY, |a, &c| a | c);
        let later = q.controls[k + 1..].iter().fold(VarSet::EMPTY, |a, &c| a | c);
        let wy = q.extra | q.target;
        let fx = self.regime.f_of(q.controls[k]);
        let pool = q.pools[k] - q.extra - used;
        let mut minimal: Vec<VarSet> = Vec::new();
        for z in pool.subsets_by_size() {
            if minimal.iter().any(|m| m.is_subset(z)) {
                continue;
            }
            if self.tci(wy, fx, x_all | used | z, later)? {
                minimal.push(z);
                chosen.push(z);
                if self.plan_step(q, chosen)? {
                    return Ok(true);
                }
                chosen.pop();
            }
        }
        Ok(false)
    }
}

/// `p(y | do(x), w)` for the given `w` as an expression, plus its derivation.
type Found = (Expr, Vec<Step>);

struct Solver<'m, 'a, S: ElementarySource + ?Sized> {
    cm: &'m CausalModel<'a, S>,
    x: VarSet,
    fx: VarSet,
    memo: HashMap<(VarSet, VarSet, usize), Option<Found>>,
    exhausted: bool,
}

impl<'m, 'a, S: ElementarySource + ?Sized> Solver<'m, 'a, S> {
    fn new(cm: &'m CausalModel<'a, S>, x: VarSet) -> Self {
        Solver {
            cm,
            x,
            fx: cm.regime.f_of(x),
            memo: HashMap::new(),
            exhausted: false,
        }
    }

    fn finish(&self, q: &CausalQuery, (expr, steps): Found) -> Identified {
        Identified {
            estimand: Estimand {
                target: q.y,
                intervened: q.x,
                given: q.w,
                expr,
            },
            steps,
        }
    }

    fn solve(&mut self, y: VarSet, w: VarSet, depth: usize) -> Result<Option<Found>> {
        if let Some(hit) = self.memo.get(&(y, w, depth)) {
            return Ok(hit.clone());
        }
        let rest = self.cm.regime.base() - self.x - y - w;
        let candidates = rest.subsets_by_size();
        let mut found = None;
        'cases: for case in 1..=4 {
            for &z in &candidates {
                if let Some(f) = self.case(case, y, w, z, depth)? {
                    found = Some(f);
                    break 'cases;
                }
            }
        }
        self.memo.insert((y, w, depth), found.clone());
        Ok(found)
    }

    fn tci(&self, l: VarSet, r: VarSet, c: VarSet, i: VarSet) -> Result<bool> {
        self.cm.tci(l, r, c, i)
    }

    fn case(&mut self, case: u8, y: VarSet, w: VarSet, z: VarSet, depth: usize) -> Result<Option<Found>> {
        let (x, fx) = (self.x, self.fx);
        let step = Step { case, y, w, z };
        let p = Expr::prob;
        match case {
            1 => {
                let ok = self.tci(y, fx, x | w | z, VarSet::EMPTY)?
                    && (z.is_empty() || (self.tci(z, x, w, x)? && self.tci(z, fx, w, VarSet::EMPTY)?));
                if !ok {
                    return Ok(None);
                }
                let mut factors = vec![p(y, x | w | z)];
                if !z.is_empty() {
                    factors.push(p(z, w));
                }
                Ok(Some((Expr::sum(z, Expr::product(factors)), vec![step])))
            }
            2 => {
                let fz = self.cm.regime.f_of(z);
                let ok = self.tci(z, fx, x | w, VarSet::EMPTY)?
                    && self.tci(y, fz, x | w | z, VarSet::EMPTY)?
                    && self.tci(x, z, w, z)?
                    && self.tci(x, fz, w, VarSet::EMPTY)?
                    && self.tci(y, fz, x | w | z, x)?
                    && self.tci(y, x, w | z, x | z)?
                    && self.tci(y, fx, w | z, z)?;
                if !ok {
                    return Ok(None);
                }
                let inner = Expr::sum(x, Expr::product(vec![p(y, x | w | z), p(x, w)]));
                let expr = Expr::sum(z, Expr::product(vec![p(z, x | w), inner]));
                Ok(Some((expr, vec![step])))
            }
            3 => {
                if z.is_empty() || !self.tci(y, fx, x | w | z, VarSet::EMPTY)? {
                    return Ok(None);
                }
                let Some((sub, steps)) = self.recurse(z, w, depth)? else {
                    return Ok(None);
                };
                let expr = Expr::sum(z, Expr::product(vec![p(y, x | w | z), sub]));
                Ok(Some((expr, prepend(step, steps))))
            }
            4 => {
                if z.is_empty() || !self.tci(z, x, w, x)? || !self.tci(z, fx, w, VarSet::EMPTY)? {
                    return Ok(None);
                }
                let Some((sub, steps)) = self.recurse(y, w | z, depth)? else {
                    return Ok(None);
                };
                let expr = Expr::sum(z, Expr::product(vec![sub, p(z, w)]));
                Ok(Some((expr, prepend(step, steps))))
            }
            _ => unreachable!("case index checked by callers"),
        }
    }

    fn recurse(&mut self, y: VarSet, w: VarSet, depth: usize) -> Result<Option<Found>> {
        if depth == 0 {
            self.exhausted = true;
            return Ok(None);
        }
        self.solve(y, w, depth - 1)
    }
}

fn prepend(step: Step, mut rest: Vec<Step>) -> Vec<Step> {
    rest.insert(0, step);
    rest
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_layout_round_trips() {
        let r = Regime::new(&["x", "y"]).unwrap();
        assert_eq!(r.universe().name(r.f(1)), "F_y");
        assert_eq!(Regime::from_universe(r.universe().clone()).unwrap(), r);
        let plain = Arc::new(Universe::with_base(&["x", "y"]).unwrap());
        assert!(matches!(Regime::from_universe(plain), Err(Error::InvalidSets(_))));
        let ctx = r.shortcut(VarSet::singleton(r.f(0)), VarSet::singleton(1));
        assert_eq!(ctx.get(r.f(0)), None);
        assert_eq!(ctx.get(r.f(1)), Some(INT));
    }

    #[test]
    fn rule_one_on_independent_pair() {
        let g = CausalGraph::from_named(&["x", "y"], &[], &[]).unwrap();
        let m = RegimeDsepModel::new(&g).unwrap();
        let cm = CausalModel::new(&m, m.universe_arc().clone()).unwrap();
        let (x, y) = (VarSet::singleton(0), VarSet::singleton(1));
        let rw = cm.apply_rule(1, x, y, VarSet::EMPTY, VarSet::EMPTY).unwrap().unwrap();
        assert_eq!(rw.display(cm.universe()), "p(y|x) = p(y)");
        assert_eq!(
            cm.apply_rule(1, x, x, VarSet::EMPTY, VarSet::EMPTY),
            Err(Error::InvalidSets("Y and X overlap".into()))
        );
    }

    #[test]
    fn bow_is_not_identified() {
        let g = CausalGraph::from_named(&["x", "y", "u"], &[("u", "x"), ("u", "y"), ("x", "y")], &["u"]).unwrap();
        let m = RegimeDsepModel::new(&g).unwrap();
        let cm = CausalModel::new(&m, m.universe_arc().clone()).unwrap();
        let q = CausalQuery::new(VarSet::singleton(0), VarSet::singleton(1), VarSet::EMPTY);
        assert_eq!(cm.identify(&q, None).unwrap(), None);
    }

    #[test]
    fn front_door_and_confounded_mediator() {
        // x -> z -> y with z confounded with x: needs case 3 with Z = {z}.
        let g = CausalGraph::from_named(
            &["x", "z", "y", "u"],
            &[("x", "z"), ("z", "y"), ("u", "x"), ("u", "y")],
            &["u"],
        )
        .unwrap();
        let m = RegimeDsepModel::new(&g).unwrap();
        let cm = CausalModel::new(&m, m.universe_arc().clone()).unwrap();
        let q = CausalQuery::new(VarSet::singleton(0), VarSet::singleton(2), VarSet::EMPTY);
        let found = cm.identify(&q, None).unwrap().unwrap();
        assert_eq!(found.steps[0].case, 2);
        let cyc = CausalGraph::from_named(
            &["x", "y", "z", "u"],
            &[("x", "z"), ("z", "y"), ("u", "x"), ("u", "z"), ("u", "y")],
            &["u"],
        )
        .unwrap();
        let m = RegimeDsepModel::new(&cyc).unwrap();
        let cm = CausalModel::new(&m, m.universe_arc().clone()).unwrap();
        let q = CausalQuery::new(VarSet::singleton(0), VarSet::singleton(1), VarSet::EMPTY);
        assert_eq!(cm.identify(&q, Some(0)), Ok(None));
    }
}
