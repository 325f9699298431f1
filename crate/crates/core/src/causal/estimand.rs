//! Estimand expressions: sums and products of observational conditional probabilities.
//!
//! Text form:
//!
//! ```text
//! estimand := lhs "=" expr
//! lhs      := "p(" vars [ "|" [ "do(" vars ")" [ "," ] ] [ vars ] ] ")"
//! expr     := term ( "*" term )*
//! term     := prob | sum | "(" expr ")"
//! prob     := "p(" vars [ "|" vars ] ")"
//! sum      := "sum{" vars "}" "(" expr ")"
//! vars     := name ( "," name )*
//! ```
//!
//! A nested `sum` may bind a variable that is free in the enclosing
//! expression, but not one already bound by an enclosing `sum`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::table::{encode, Conditional, JointTable};
use crate::universe::Universe;
use crate::varset::VarSet;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    /// `p(target | given)` in the observational regime.
    Prob { target: VarSet, given: VarSet },
    Sum { over: VarSet, body: Box<Expr> },
    Product(Vec<Expr>),
}

impl Expr {
    pub fn prob(target: VarSet, given: VarSet) -> Expr {
        Expr::Prob { target, given }
    }

    /// `Σ_over body`; just `body` when `over` is empty.
    pub fn sum(over: VarSet, body: Expr) -> Expr {
        if over.is_empty() {
            body
        } else {
            Expr::Sum {
                over,
                body: Box::new(body),
            }
        }
    }

    /// A flattened product; a single factor is returned as is.
    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut flat = Vec::new();
        for f in factors {
            match f {
                Expr::Product(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().expect("one factor")
        } else {
            Expr::Product(flat)
        }
    }

    /// Variables that occur free.
    pub fn free_vars(&self) -> VarSet {
        match self {
            Expr::Prob { target, given } => *target | *given,
            Expr::Sum { over, body } => body.free_vars() - *over,
            Expr::Product(fs) => fs.iter().fold(VarSet::EMPTY, |acc, f| acc | f.free_vars()),
        }
    }

    /// Rejects a sum that rebinds a variable bound by an enclosing sum.
    pub fn check_scopes(&self) -> Result<()> {
        fn walk(e: &Expr, bound: VarSet) -> Result<()> {
            match e {
                Expr::Prob { .. } => Ok(()),
                Expr::Sum { over, body } => {
                    if !over.is_disjoint(bound) {
                        return Err(Error::InvalidSets("nested sum rebinds a summation variable".into()));
                    }
                    walk(body, bound | *over)
                }
                Expr::Product(fs) => fs.iter().try_for_each(|f| walk(f, bound)),
            }
        }
        walk(self, VarSet::EMPTY)
    }

    pub fn display(&self, u: &Universe) -> String {
        let mut out = String::new();
        self.write(u, &mut out);
        out
    }

    fn write(&self, u: &Universe, out: &mut String) {
        match self {
            Expr::Prob { target, given } => {
                let _ = write!(out, "p({}", names(u, *target));
                if !given.is_empty() {
                    let _ = write!(out, "|{}", names(u, *given));
                }
                out.push(')');
            }
            Expr::Sum { over, body } => {
                let _ = write!(out, "sum{{{}}}( ", names(u, *over));
                body.write(u, out);
                out.push_str(" )");
            }
            Expr::Product(fs) => {
                for (n, f) in fs.iter().enumerate() {
                    if n > 0 {
                        out.push_str(" * ");
                    }
                    if let Expr::Product(_) = f {
                        out.push('(');
                        f.write(u, out);
                        out.push(')');
                    } else {
                        f.write(u, out);
                    }
                }
            }
        }
    }

    pub fn parse(text: &str, u: &Universe) -> Result<Expr> {
        let mut p = Parser::new(text, u);
        let e = p.expr()?;
        p.end()?;
        e.check_scopes()?;
        Ok(e)
    }
}

fn names(u: &Universe, s: VarSet) -> String {
    u.names(s).join(",")
}

/// `p(target | do(intervened), given) = expr`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Estimand {
    pub target: VarSet,
    pub intervened: VarSet,
    pub given: VarSet,
    pub expr: Expr,
}

impl Estimand {
    pub fn lhs(&self, u: &Universe) -> String {
        let mut out = format!("p({}", names(u, self.target));
        if !self.intervened.is_empty() || !self.given.is_empty() {
            out.push('|');
        }
        if !self.intervened.is_empty() {
            let _ = write!(out, "do({})", names(u, self.intervened));
            if !self.given.is_empty() {
                out.push(',');
            }
        }
        if !self.given.is_empty() {
            out.push_str(&names(u, self.given));
        }
        out.push(')');
        out
    }

    pub fn display(&self, u: &Universe) -> String {
        format!("{} = {}", self.lhs(u), self.expr.display(u))
    }

    pub fn parse(text: &str, u: &Universe) -> Result<Estimand> {
        let mut p = Parser::new(text, u);
        p.expect("p(")?;
        let target = p.vars()?;
        let (mut intervened, mut given) = (VarSet::EMPTY, VarSet::EMPTY);
        if p.eat("|") {
            if p.eat("do(") {
                intervened = p.vars()?;
                p.expect(")")?;
                if p.eat(",") {
                    given = p.vars()?;
                }
            } else {
                given = p.vars()?;
            }
        }
        p.expect(")")?;
        p.expect("=")?;
        let expr = p.expr()?;
        p.end()?;
        expr.check_scopes()?;
        let e = Estimand {
            target,
            intervened,
            given,
            expr,
        };
        e.check()?;
        Ok(e)
    }

    /// The expression's free variables must all appear on the left-hand side.
    pub fn check(&self) -> Result<()> {
        let lhs = self.target | self.intervened | self.given;
        let stray = self.expr.free_vars() - lhs;
        if !stray.is_empty() {
            return Err(Error::InvalidSets(format!(
                "expression mentions variables absent from the left-hand side: {stray:?}"
            )));
        }
        Ok(())
    }

    /// Evaluates on an observational table. Variables are matched to table
    /// columns by name; the result is normalized per configuration of the
    /// intervened and conditioning variables.
    pub fn evaluate(&self, u: &Universe, table: &JointTable) -> Result<Evaluation> {
        self.check()?;
        let mut mentioned = self.target | self.intervened | self.given;
        collect_vars(&self.expr, &mut mentioned);
        let mut col = vec![usize::MAX; u.len()];
        for v in mentioned {
            col[v] = table.require(u.name(v))?;
        }
        let cards_all = table.cards();
        let card = |v: usize| cards_all[col[v]];

        let target: Vec<usize> = self.target.iter().collect();
        let given: Vec<usize> = (self.intervened | self.given).iter().collect();
        let target_cards: Vec<usize> = target.iter().map(|&v| card(v)).collect();
        let given_cards: Vec<usize> = given.iter().map(|&v| card(v)).collect();
        let tsize: usize = target_cards.iter().product();
        let gsize: usize = given_cards.iter().product();

        let ev = Evaluator {
            table,
            col: &col,
            cards: &cards_all,
            cache: RefCell::new(HashMap::new()),
        };
        let mut assign = vec![usize::MAX; u.len()];
        let mut probs = vec![0.0; tsize * gsize];
        let mut mass = vec![0.0; gsize];
        for g in 0..gsize {
            set_config(&given, &given_cards, g, &mut assign);
            for t in 0..tsize {
                set_config(&target, &target_cards, t, &mut assign);
                let v = ev.eval(&self.expr, &mut assign)?;
                probs[g * tsize + t] = v;
                mass[g] += v;
            }
            if mass[g] <= 0.0 {
                return Err(Error::ZeroConditioner);
            }
            for t in 0..tsize {
                probs[g * tsize + t] /= mass[g];
            }
        }
        Ok(Evaluation {
            dist: Conditional {
                target: target.iter().map(|&v| u.name(v).to_string()).collect(),
                given: given.iter().map(|&v| u.name(v).to_string()).collect(),
                target_cards,
                given_cards,
                probs,
            },
            mass,
        })
    }
}

/// Result of [`Estimand::evaluate`].
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub dist: Conditional,
    /// Unnormalized total over the target, per conditioning configuration.
    pub mass: Vec<f64>,
}

fn collect_vars(e: &Expr, acc: &mut VarSet) {
    match e {
        Expr::Prob { target, given } => *acc |= *target | *given,
        Expr::Sum { over, body } => {
            *acc |= *over;
            collect_vars(body, acc);
        }
        Expr::Product(fs) => fs.iter().for_each(|f| collect_vars(f, acc)),
    }
}

fn set_config(vars: &[usize], cards: &[usize], mut idx: usize, assign: &mut [usize]) {
    for (&v, &c) in vars.iter().zip(cards).rev() {
        assign[v] = idx % c;
        idx /= c;
    }
}

struct Evaluator<'a> {
    table: &'a JointTable,
    col: &'a [usize],
    cards: &'a [usize],
    cache: RefCell<HashMap<VarSet, std::rc::Rc<Vec<f64>>>>,
}

impl Evaluator<'_> {
    fn marginal(&self, s: VarSet) -> std::rc::Rc<Vec<f64>> {
        if let Some(m) = self.cache.borrow().get(&s) {
            return m.clone();
        }
        let cols: Vec<usize> = s.iter().map(|v| self.col[v]).collect();
        let m = std::rc::Rc::new(self.table.marginal(&cols));
        self.cache.borrow_mut().insert(s, m.clone());
        m
    }

    fn lookup(&self, s: VarSet, assign: &[usize]) -> f64 {
        if s.is_empty() {
            return 1.0;
        }
        let m = self.marginal(s);
        let cards: Vec<usize> = s.iter().map(|v| self.cards[self.col[v]]).collect();
        let vals: Vec<usize> = s.iter().map(|v| assign[v]).collect();
        m[encode(&cards, &vals)]
    }

    fn eval(&self, e: &Expr, assign: &mut Vec<usize>) -> Result<f64> {
        match e {
            Expr::Prob { target, given } => {
                let den = self.lookup(*given, assign);
                if den <= 0.0 {
                    return Err(Error::ZeroConditioner);
                }
                Ok(self.lookup(*target | *given, assign) / den)
            }
            Expr::Sum { over, body } => {
                let vars: Vec<usize> = over.iter().collect();
                let cards: Vec<usize> = vars.iter().map(|&v| self.cards[self.col[v]]).collect();
                let saved: Vec<usize> = vars.iter().map(|&v| assign[v]).collect();
                let mut total = 0.0;
                for idx in 0..cards.iter().product() {
                    set_config(&vars, &cards, idx, assign);
                    total += self.eval(body, assign)?;
                }
                for (&v, s) in vars.iter().zip(saved) {
                    assign[v] = s;
                }
                Ok(total)
            }
            Expr::Product(fs) => {
                let mut acc = 1.0;
                for f in fs {
                    acc *= self.eval(f, assign)?;
                }
                Ok(acc)
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    u: &'a Universe,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, u: &'a Universe) -> Self {
        Parser { src, pos: 0, u }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: 1,
            message: format!("{} at offset {}", message.into(), self.pos),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{tok}`")))
        }
    }

    fn end(&mut self) -> Result<()> {
        self.skip_ws();
        if self.pos == self.src.len() {
            Ok(())
        } else {
            Err(self.err("unexpected trailing input"))
        }
    }

    fn name(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| c.is_whitespace() || ",|(){}*=".contains(c))
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.err("expected a variable name"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn vars(&mut self) -> Result<VarSet> {
        let mut s = VarSet::EMPTY;
        loop {
            let n = self.name()?;
            s.insert(self.u.lookup(n)?);
            if !self.eat(",") {
                return Ok(s);
            }
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        while self.eat("*") {
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().expect("one term")
        } else {
            Expr::Product(terms)
        })
    }

    fn term(&mut self) -> Result<Expr> {
        if self.eat("p(") {
            let target = self.vars()?;
            let given = if self.eat("|") { self.vars()? } else { VarSet::EMPTY };
            self.expect(")")?;
            Ok(Expr::Prob { target, given })
        } else if self.eat("sum{") {
            let over = self.vars()?;
            self.expect("}")?;
            self.expect("(")?;
            let body = self.expr()?;
            self.expect(")")?;
            Ok(Expr::Sum {
                over,
                body: Box::new(body),
            })
        } else if self.eat("(") {
            let e = self.expr()?;
            self.expect(")")?;
            Ok(e)
        } else {
            Err(self.err("expected `p(`, `sum{` or `(`"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u() -> Universe {
        Universe::with_base(&["x", "y", "z3", "z4"]).unwrap()
    }

    fn s(u: &Universe, n: &[&str]) -> VarSet {
        u.set_of(n).unwrap()
    }

    #[test]
    fn text_round_trip() {
        let u = u();
        let text = "p(y|do(x)) = sum{z3,z4}( p(y|x,z3,z4) * p(z3,z4) )";
        let e = Estimand::parse(text, &u).unwrap();
        assert_eq!(e.display(&u), text);
        assert_eq!(Estimand::parse(&e.display(&u), &u).unwrap(), e);
        let nested = "p(y|do(x)) = sum{z3}( sum{z4}( p(y|x,z3,z4) * p(z4|z3) ) * p(z3) )";
        let e = Estimand::parse(nested, &u).unwrap();
        assert_eq!(e.display(&u), nested);
    }

    #[test]
    fn scope_rules() {
        let u = u();
        // Shadowing a free variable is allowed.
        assert!(Estimand::parse("p(y|do(x)) = sum{z3}( p(z3|x) * sum{x}( p(y|x,z3) * p(x) ) )", &u).is_ok());
        // Rebinding a bound one is not.
        assert!(matches!(
            Expr::parse("sum{z3}( sum{z3}( p(z3) ) )", &u),
            Err(Error::InvalidSets(_))
        ));
        assert!(matches!(Estimand::parse("p(y) = p(y|z3)", &u), Err(Error::InvalidSets(_))));
        assert_eq!(Expr::parse("p(w)", &u), Err(Error::UnknownVariable("w".into())));
        assert!(matches!(Expr::parse("p(y", &u), Err(Error::Syntax { .. })));
    }

    #[test]
    fn constructors_normalize() {
        let u = u();
        let a = Expr::prob(s(&u, &["y"]), VarSet::EMPTY);
        assert_eq!(Expr::sum(VarSet::EMPTY, a.clone()), a);
        assert_eq!(Expr::product(vec![a.clone()]), a);
        let p = Expr::product(vec![Expr::product(vec![a.clone(), a.clone()]), a.clone()]);
        assert_eq!(p, Expr::Product(vec![a.clone(), a.clone(), a]));
    }

    #[test]
    fn marginal_of_product_table() {
        let u = Universe::with_base(&["x", "y"]).unwrap();
        let t = JointTable::product(vec!["x".into(), "y".into()], &[vec![0.25, 0.75], vec![0.6, 0.4]]).unwrap();
        let e = Estimand::parse("p(y) = p(y)", &u).unwrap();
        let r = e.evaluate(&u, &t).unwrap();
        assert!((r.dist.probs[0] - 0.6).abs() < 1e-12);
        assert!((r.mass[0] - 1.0).abs() < 1e-12);
        let c = Estimand::parse("p(y|x) = p(y|x)", &u).unwrap().evaluate(&u, &t).unwrap();
        for m in c.dist.masses() {
            assert!((m - 1.0).abs() < 1e-12);
        }
        let missing = Universe::with_base(&["x", "y", "q"]).unwrap();
        let e = Estimand::parse("p(q) = p(q)", &missing).unwrap();
        assert_eq!(e.evaluate(&missing, &t), Err(Error::MissingVariable("q".into())));
    }
}
