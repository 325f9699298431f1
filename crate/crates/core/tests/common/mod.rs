#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use elemtrip::causal::{CausalGraph, RegimeDsepModel};
use elemtrip::table::JointTable;
use elemtrip::{AxiomLevel, Context, Dag, ElementaryModel, ElementaryTriplet, Triplet, Universe, VarSet};

/// Variables named "1".."n"; triplets written with 1-based indices.
pub fn numbered(n: usize) -> Arc<Universe> {
    let names: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    Arc::new(Universe::with_base(&names).unwrap())
}

pub fn set1(s: &[usize]) -> VarSet {
    s.iter().map(|x| x - 1).collect()
}

pub fn t1(l: &[usize], r: &[usize], c: &[usize]) -> Triplet {
    Triplet::new(set1(l), set1(r), set1(c))
}

pub fn e1(i: usize, j: usize, c: &[usize]) -> ElementaryTriplet {
    ElementaryTriplet::new(i - 1, j - 1, set1(c))
}

pub fn five_seeds() -> Vec<Triplet> {
    vec![
        t1(&[5], &[6], &[]),
        t1(&[1, 2], &[3, 4], &[6]),
        t1(&[2, 3], &[1, 4], &[5]),
        t1(&[1, 2], &[3, 4], &[5]),
        t1(&[3], &[1, 4], &[2, 5]),
    ]
}

pub fn two_seeds() -> Vec<Triplet> {
    vec![t1(&[1, 2], &[4, 5, 6], &[]), t1(&[1, 2, 3], &[4], &[])]
}

pub fn back_door() -> CausalGraph {
    CausalGraph::from_named(
        &["x", "y", "z1", "z2", "z3", "z4", "z5", "z6"],
        &[
            ("z4", "x"),
            ("z4", "y"),
            ("x", "z6"),
            ("z6", "y"),
            ("z3", "x"),
            ("z5", "y"),
            ("z1", "z3"),
            ("z2", "z5"),
            ("z1", "z4"),
            ("z2", "z4"),
        ],
        &[],
    )
    .unwrap()
}

pub fn front_door() -> CausalGraph {
    CausalGraph::from_named(
        &["x", "z1", "z2", "y", "u"],
        &[("u", "x"), ("u", "z2"), ("x", "z1"), ("z1", "z2"), ("x", "y"), ("z2", "y")],
        &["u"],
    )
    .unwrap()
}

pub fn two_step() -> CausalGraph {
    CausalGraph::from_named(
        &["x1", "x2", "z", "y", "u1", "u2"],
        &[
            ("x1", "x2"),
            ("x1", "z"),
            ("z", "x2"),
            ("x1", "y"),
            ("x2", "y"),
            ("u1", "x1"),
            ("u1", "z"),
            ("x1", "u2"),
            ("u2", "z"),
            ("u2", "y"),
        ],
        &["u1", "u2"],
    )
    .unwrap()
}

pub fn bow() -> CausalGraph {
    CausalGraph::from_named(&["x", "y", "u"], &[("u", "x"), ("u", "y"), ("x", "y")], &["u"]).unwrap()
}

/// The back-door graph as a plain DAG over its observed variables.
pub fn back_door_dag() -> Dag {
    let g = back_door();
    let u = Arc::new(Universe::with_base(g.names()).unwrap());
    let parents = (0..g.len()).map(|v| g.parents(v)).collect();
    Dag::from_parents(u, parents).unwrap()
}

pub fn regime(g: &CausalGraph) -> RegimeDsepModel {
    RegimeDsepModel::new(g).unwrap()
}

pub fn names(u: &Universe, s: &[&str]) -> VarSet {
    u.set_of(s).unwrap()
}

/// Raw membership: every elementary triplet of the chain decomposition is stored.
pub fn window_member(m: &ElementaryModel, t: &Triplet) -> bool {
    for i in t.left {
        for j in t.right {
            for a in (t.left.without(i)).subsets() {
                for b in (t.right.without(j)).subsets() {
                    let e = ElementaryTriplet::new(i, j, a | b | t.cond).with_context(t.ctx.clone());
                    if !m.contains(&e) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// All triplets (in the empty context) whose every elementary window is stored.
pub fn represented(m: &ElementaryModel) -> Vec<Triplet> {
    let u = m.universe_arc();
    let all = u.all();
    let mut out = Vec::new();
    for left in all.subsets() {
        if left.is_empty() {
            continue;
        }
        for right in (all - left).subsets() {
            if right.is_empty() {
                continue;
            }
            for cond in (all - left - right).subsets() {
                let t = Triplet::new(left, right, cond);
                if window_member(m, &t) {
                    out.push(t);
                }
            }
        }
    }
    out
}

/// Dominant triplets by exhaustive comparison of all represented triplets.
pub fn brute_dominants(m: &ElementaryModel) -> BTreeSet<(u128, u128, u128)> {
    let reps = represented(m);
    let mut out = BTreeSet::new();
    for t in &reps {
        let dominated = reps
            .iter()
            .any(|o| o != t && o.dominates(t).unwrap());
        if !dominated {
            out.insert((t.left.bits(), t.right.bits(), t.cond.bits()));
        }
    }
    out
}

/// d-separation by enumerating simple paths.
pub fn dsep_paths(g: &Dag, x: usize, y: usize, z: VarSet) -> bool {
    let n = g.len();
    let anc = g.ancestors(z);
    let mut stack: Vec<Vec<usize>> = vec![vec![x]];
    while let Some(path) = stack.pop() {
        let last = *path.last().unwrap();
        if last == y {
            let mut open = true;
            for w in path.windows(3) {
                let (a, b, c) = (w[0], w[1], w[2]);
                let collider = g.parents(b).contains(a) && g.parents(b).contains(c);
                if collider {
                    if !anc.contains(b) {
                        open = false;
                    }
                } else if z.contains(b) {
                    open = false;
                }
                if !open {
                    break;
                }
            }
            if open {
                return false;
            }
            continue;
        }
        for next in 0..n {
            let adjacent = g.parents(last).contains(next) || g.parents(next).contains(last);
            if adjacent && !path.contains(&next) {
                let mut p = path.clone();
                p.push(next);
                stack.push(p);
            }
        }
    }
    true
}

/// Elementary triplets that hold in `table`, by testing every candidate.
pub fn brute_extract(table: &JointTable, eps: f64) -> BTreeSet<(usize, usize, u128)> {
    let n = table.len();
    let all = VarSet::full(n);
    let mut out = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in (all.without(i).without(j)).subsets() {
                let cols: Vec<usize> = k.iter().collect();
                if table.independent(i, j, &cols, eps) {
                    out.insert((i, j, k.bits()));
                }
            }
        }
    }
    out
}

pub fn canonical_set(m: &ElementaryModel) -> BTreeSet<(usize, usize, u128)> {
    m.triplets()
        .into_iter()
        .filter(|t| t.ctx == Context::empty())
        .map(|t| {
            let c = t.canonical();
            (c.left, c.right, c.cond.bits())
        })
        .collect()
}

pub fn level_name(l: AxiomLevel) -> &'static str {
    l.as_str()
}
