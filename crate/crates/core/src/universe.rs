//! Variable universes and context assignments.

use std::fmt;

use crate::error::{Error, Result};
use crate::varset::{VarSet, CAPACITY};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum VarKind {
    Base,
    /// A context variable with a finite, ordered value domain.
    Context { domain: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

/// An ordered collection of named variables. Indices are stable once assigned.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Universe {
    vars: Vec<Variable>,
}

impl Universe {
    pub fn new() -> Self {
        Universe::default()
    }

    /// A universe of base variables with the given names.
    pub fn with_base<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut u = Universe::new();
        for n in names {
            u.add_base(n.as_ref())?;
        }
        Ok(u)
    }

    fn push(&mut self, var: Variable) -> Result<usize> {
        if self.vars.len() >= CAPACITY {
            return Err(Error::CapacityExceeded);
        }
        if self.index_of(&var.name).is_some() {
            return Err(Error::DuplicateVariable(var.name));
        }
        self.vars.push(var);
        Ok(self.vars.len() - 1)
    }

    pub fn add_base(&mut self, name: &str) -> Result<usize> {
        self.push(Variable {
            name: name.to_string(),
            kind: VarKind::Base,
        })
    }

    pub fn add_context<S: AsRef<str>>(&mut self, name: &str, domain: &[S]) -> Result<usize> {
        if domain.is_empty() {
            return Err(Error::InvalidContext(format!(
                "context variable `{name}` needs a nonempty domain"
            )));
        }
        self.push(Variable {
            name: name.to_string(),
            kind: VarKind::Context {
                domain: domain.iter().map(|s| s.as_ref().to_string()).collect(),
            },
        })
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, i: usize) -> Option<&Variable> {
        self.vars.get(i)
    }

    pub fn name(&self, i: usize) -> &str {
        &self.vars[i].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn lookup(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn all(&self) -> VarSet {
        VarSet::full(self.vars.len())
    }

    pub fn base_set(&self) -> VarSet {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Base)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn context_set(&self) -> VarSet {
        self.all() - self.base_set()
    }

    pub fn domain(&self, i: usize) -> Option<&[String]> {
        match &self.vars.get(i)?.kind {
            VarKind::Context { domain } => Some(domain),
            VarKind::Base => None,
        }
    }

    pub fn is_context(&self, i: usize) -> bool {
        self.domain(i).is_some()
    }

    /// Names of the members of `s`, in index order.
    pub fn names(&self, s: VarSet) -> Vec<&str> {
        s.iter().map(|i| self.name(i)).collect()
    }

    pub fn set_of<S: AsRef<str>>(&self, names: &[S]) -> Result<VarSet> {
        names
            .iter()
            .map(|n| self.lookup(n.as_ref()))
            .collect::<Result<Vec<_>>>()
            .map(VarSet::from_indices)
    }

    /// Formats a set as concatenated or comma-separated names.
    pub fn fmt_set(&self, s: VarSet) -> String {
        if s.is_empty() {
            return "∅".to_string();
        }
        let names = self.names(s);
        if names.iter().all(|n| n.chars().count() == 1) {
            names.concat()
        } else {
            names.join(",")
        }
    }

    /// Builds a context assignment from `name=value` pairs.
    pub fn context_of<S: AsRef<str>>(&self, bindings: &[(S, S)]) -> Result<Context> {
        let mut ctx = Context::default();
        for (k, v) in bindings {
            let var = self.lookup(k.as_ref())?;
            let domain = self.domain(var).ok_or_else(|| {
                Error::InvalidContext(format!("`{}` is not a context variable", k.as_ref()))
            })?;
            let value = domain.iter().position(|d| d == v.as_ref()).ok_or_else(|| {
                Error::InvalidContext(format!(
                    "`{}` is not in the domain of `{}`",
                    v.as_ref(),
                    k.as_ref()
                ))
            })?;
            ctx = ctx.bind(var, value);
        }
        Ok(ctx)
    }
}

/// A partial assignment of context variables, sorted by variable index.
/// Values are positions in the variable's declared domain.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Context(Vec<(u8, u8)>);

impl Context {
    pub fn empty() -> Self {
        Context::default()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Returns a copy with `var` bound to `value`, replacing any prior binding.
    #[must_use]
    pub fn bind(&self, var: usize, value: usize) -> Context {
        assert!(var < CAPACITY && value < 256);
        let mut b = self.0.clone();
        match b.binary_search_by_key(&(var as u8), |&(k, _)| k) {
            Ok(pos) => b[pos].1 = value as u8,
            Err(pos) => b.insert(pos, (var as u8, value as u8)),
        }
        Context(b)
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.0
            .iter()
            .find(|&&(k, _)| k as usize == var)
            .map(|&(_, v)| v as usize)
    }

    pub fn keys(&self) -> VarSet {
        self.0.iter().map(|&(k, _)| k as usize).collect()
    }

    pub fn bindings(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().map(|&(k, v)| (k as usize, v as usize))
    }

    /// Union of two assignments; `None` when they disagree on a shared key.
    pub fn merge(&self, other: &Context) -> Option<Context> {
        let mut out = self.clone();
        for (k, v) in other.bindings() {
            match self.get(k) {
                Some(w) if w != v => return None,
                _ => out = out.bind(k, v),
            }
        }
        Some(out)
    }

    pub fn validate(&self, u: &Universe) -> Result<()> {
        for (k, v) in self.bindings() {
            let domain = match u.var(k) {
                None => return Err(Error::IndexOutOfRange(k)),
                Some(var) => match &var.kind {
                    VarKind::Context { domain } => domain,
                    VarKind::Base => {
                        return Err(Error::InvalidContext(format!(
                            "`{}` is not a context variable",
                            var.name
                        )))
                    }
                },
            };
            if v >= domain.len() {
                return Err(Error::InvalidContext(format!(
                    "value index {v} outside the domain of `{}`",
                    u.name(k)
                )));
            }
        }
        Ok(())
    }

    pub fn display<'a>(&'a self, u: &'a Universe) -> ContextDisplay<'a> {
        ContextDisplay { ctx: self, u }
    }
}

impl fmt::Debug for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.bindings()).finish()
    }
}

pub struct ContextDisplay<'a> {
    ctx: &'a Context,
    u: &'a Universe,
}

impl fmt::Display for ContextDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .ctx
            .bindings()
            .map(|(k, v)| {
                let value = self
                    .u
                    .domain(k)
                    .and_then(|d| d.get(v))
                    .map(String::as_str)
                    .unwrap_or("?");
                format!("{}={}", self.u.name(k), value)
            })
            .collect();
        write!(f, "{}", parts.join(","))
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_names_rejected() {
        let mut u = Universe::with_base(&["a", "b"]).unwrap();
        assert_eq!(u.add_base("a"), Err(Error::DuplicateVariable("a".into())));
    }

    #[test]
    fn base_and_context_sets_disjoint() {
        let mut u = Universe::with_base(&["a", "b"]).unwrap();
        u.add_context("aux", &["0", "1"]).unwrap();
        assert_eq!(u.base_set(), VarSet::from_indices([0, 1]));
        assert_eq!(u.context_set(), VarSet::singleton(2));
        assert!(u.base_set().is_disjoint(u.context_set()));
    }

    #[test]
    fn context_binding_and_merge() {
        let mut u = Universe::with_base(&["a"]).unwrap();
        let f = u.add_context("f", &["obs", "int"]).unwrap();
        let g = u.add_context("g", &["obs", "int"]).unwrap();
        let c = u.context_of(&[("g", "int"), ("f", "obs")]).unwrap();
        assert_eq!(c.bindings().collect::<Vec<_>>(), vec![(f, 0), (g, 1)]);
        assert_eq!(c.display(&u).to_string(), "f=obs,g=int");
        let d = Context::empty().bind(f, 1);
        assert!(c.merge(&d).is_none());
        assert!(u.context_of(&[("a", "0")]).is_err());
        assert!(u.context_of(&[("f", "maybe")]).is_err());
    }

    #[test]
    fn capacity_enforced() {
        let names: Vec<String> = (0..128).map(|i| format!("v{i}")).collect();
        let mut u = Universe::with_base(&names).unwrap();
        assert_eq!(u.add_base("overflow"), Err(Error::CapacityExceeded));
    }
}
