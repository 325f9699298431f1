//! Intersection and unions of elementary models.

use std::sync::Arc;

use crate::closure::{close_elementary, extend_closed};
use crate::error::{Error, Result};
use crate::model::ElementaryModel;
use crate::query::{dominant_triplets, is_member_triplet};

/// Name of the context variable introduced by [`union_with_context`].
pub const AUX: &str = "aux";

fn same_level(e: &ElementaryModel, e2: &ElementaryModel) -> Result<()> {
    e.same_space(e2)?;
    if e.level() != e2.level() {
        return Err(Error::LevelMismatch);
    }
    Ok(())
}

/// The model of independences shared by both inputs.
pub fn intersect(e: &ElementaryModel, e2: &ElementaryModel) -> Result<ElementaryModel> {
    same_level(e, e2)?;
    if !e.is_closed() || !e2.is_closed() {
        return Err(Error::NotClosed);
    }
    let mut strata = std::collections::BTreeMap::new();
    for (ctx, s) in e.strata() {
        if let Some(o) = e2.strata().get(ctx) {
            strata.insert(ctx.clone(), s.intersection(o).copied().collect());
        }
    }
    Ok(ElementaryModel::from_parts(
        e.universe_arc().clone(),
        e.level(),
        e.is_symmetric(),
        true,
        strata,
    ))
}

/// Represents the union exactly by tagging `e` with `aux=0` and `e2` with `aux=1`.
pub fn union_with_context(e: &ElementaryModel, e2: &ElementaryModel) -> Result<ElementaryModel> {
    same_level(e, e2)?;
    let mut u = (**e.universe_arc()).clone();
    if u.index_of(AUX).is_some() {
        return Err(Error::AuxNameCollision(AUX.to_string()));
    }
    let aux = u.add_context(AUX, &["0", "1"])?;
    let u = Arc::new(u);
    let mut out = if e.is_symmetric() {
        ElementaryModel::new(u, e.level())
    } else {
        ElementaryModel::directed(u, e.level())
    };
    for (value, src) in [(0, e), (1, e2)] {
        for t in src.triplets() {
            let ctx = t.ctx.bind(aux, value);
            out.insert(t.with_context(ctx))?;
        }
    }
    out.set_closed(e.is_closed() && e2.is_closed());
    Ok(out)
}

/// The closure of `e ∪ e2`: the smallest closed model containing both.
pub fn union_min_superset(e: &ElementaryModel, e2: &ElementaryModel) -> Result<ElementaryModel> {
    same_level(e, e2)?;
    let mut m = e.clone();
    for t in e2.triplets() {
        m.insert(t)?;
    }
    Ok(close_elementary(&m))
}

/// A maximal closed subset of `e ∪ e2` whose represented triplets all belong
/// to one of the two models.
///
/// Starts from whichever input has the smaller sorted triplet list, then tries
/// the other input's triplets in sorted order, keeping each one whose closure
/// stays inside `e ∪ e2` with every dominant triplet a member of `e` or `e2`.
pub fn union_max_subset(e: &ElementaryModel, e2: &ElementaryModel) -> Result<ElementaryModel> {
    same_level(e, e2)?;
    if !e.is_closed() || !e2.is_closed() {
        return Err(Error::NotClosed);
    }
    let (base, other) = if e.triplets() <= e2.triplets() { (e, e2) } else { (e2, e) };
    let mut u = base.clone();
    for t in other.triplets() {
        if u.contains(&t) {
            continue;
        }
        let mut candidate = u.clone();
        extend_closed(&mut candidate, std::slice::from_ref(&t))?;
        let inside = candidate
            .triplets()
            .iter()
            .all(|x| e.contains(x) || e2.contains(x));
        if !inside {
            continue;
        }
        let mut represented = true;
        for d in dominant_triplets(&candidate)?.all {
            if !is_member_triplet(e, &d)? && !is_member_triplet(e2, &d)? {
                represented = false;
                break;
            }
        }
        if represented {
            u = candidate;
        }
    }
    Ok(u)
}
