//! Exact joint probability tables over finite-domain variables.

use crate::error::{Error, Result};

/// A joint distribution stored densely in mixed radix, first variable most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    names: Vec<String>,
    domains: Vec<Vec<String>>,
    probs: Vec<f64>,
}

/// Default tolerance for normalization and independence tests.
pub const DEFAULT_EPS: f64 = 1e-9;

impl JointTable {
    /// Builds a table from a dense probability vector.
    pub fn new(names: Vec<String>, domains: Vec<Vec<String>>, probs: Vec<f64>, eps: f64) -> Result<Self> {
        if names.len() != domains.len() {
            return Err(Error::TableMismatch("one domain per variable is required".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::DuplicateVariable(n.clone()));
            }
        }
        let size: usize = domains.iter().map(Vec::len).product();
        if probs.len() != size || domains.iter().any(Vec::is_empty) {
            return Err(Error::IncompleteDomain);
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::TableMismatch("probabilities must be finite and nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > eps {
            return Err(Error::NotNormalized(total));
        }
        Ok(JointTable { names, domains, probs })
    }

    /// Builds a table from `(assignment, probability)` rows, where assignments
    /// hold value positions in `domains`. Every assignment must appear once.
    pub fn from_rows(
        names: Vec<String>,
        domains: Vec<Vec<String>>,
        rows: &[(Vec<usize>, f64)],
        eps: f64,
    ) -> Result<Self> {
        let cards: Vec<usize> = domains.iter().map(Vec::len).collect();
        let size: usize = cards.iter().product();
        let mut probs = vec![f64::NAN; size];
        for (row, (vals, p)) in rows.iter().enumerate() {
            if vals.len() != cards.len() || vals.iter().zip(&cards).any(|(v, c)| v >= c) {
                return Err(Error::TableMismatch(format!("row {} has a bad assignment", row + 1)));
            }
            let idx = encode(&cards, vals);
            if !probs[idx].is_nan() {
                return Err(Error::DuplicateRow(row + 1));
            }
            probs[idx] = *p;
        }
        if probs.iter().any(|p| p.is_nan()) {
            return Err(Error::IncompleteDomain);
        }
        JointTable::new(names, domains, probs, eps)
    }

    /// The product of independent marginals, each given as a probability vector.
    pub fn product(names: Vec<String>, marginals: &[Vec<f64>]) -> Result<Self> {
        let domains: Vec<Vec<String>> = marginals
            .iter()
            .map(|m| (0..m.len()).map(|v| v.to_string()).collect())
            .collect();
        let cards: Vec<usize> = marginals.iter().map(Vec::len).collect();
        let size: usize = cards.iter().product();
        let probs = (0..size)
            .map(|idx| {
                decode(&cards, idx)
                    .iter()
                    .zip(marginals)
                    .map(|(&v, m)| m[v])
                    .product()
            })
            .collect();
        JointTable::new(names, domains, probs, 1e-9)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn domains(&self) -> &[Vec<String>] {
        &self.domains
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn cards(&self) -> Vec<usize> {
        self.domains.iter().map(Vec::len).collect()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.column(name).ok_or_else(|| Error::MissingVariable(name.to_string()))
    }

    /// Probability of a full assignment.
    pub fn prob(&self, vals: &[usize]) -> f64 {
        self.probs[encode(&self.cards(), vals)]
    }

    pub fn is_positive(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    /// Iterates over `(assignment, probability)` for every full assignment.
    pub fn rows(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let cards = self.cards();
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (decode(&cards, i), p))
    }

    /// Marginal over `cols`, dense in mixed radix over those columns in the given order.
    pub fn marginal(&self, cols: &[usize]) -> Vec<f64> {
        let cards = self.cards();
        let sub: Vec<usize> = cols.iter().map(|&c| cards[c]).collect();
        let mut out = vec![0.0; sub.iter().product()];
        let mut vals = vec![0; cards.len()];
        for (idx, &p) in self.probs.iter().enumerate() {
            decode_into(&cards, idx, &mut vals);
            let mut k = 0;
            for (&c, &card) in cols.iter().zip(&sub) {
                k = k * card + vals[c];
            }
            out[k] += p;
        }
        out
    }

    /// `i ⟂ j | K` within `eps`: for every configuration `k` with `p(k) > 0`,
    /// `|p(ij|k) − p(i|k) p(j|k)| ≤ eps`.
    pub fn independent(&self, i: usize, j: usize, k: &[usize], eps: f64) -> bool {
        let cards = self.cards();
        let mut cols = vec![i, j];
        cols.extend_from_slice(k);
        let joint = self.marginal(&cols);
        let (ci, cj) = (cards[i], cards[j]);
        let kc: usize = k.iter().map(|&c| cards[c]).product();
        for kv in 0..kc {
            let at = |a: usize, b: usize| joint[(a * cj + b) * kc + kv];
            let pk: f64 = (0..ci).flat_map(|a| (0..cj).map(move |b| (a, b))).map(|(a, b)| at(a, b)).sum();
            if pk <= 0.0 {
                continue;
            }
            for a in 0..ci {
                let pi: f64 = (0..cj).map(|b| at(a, b)).sum::<f64>() / pk;
                for b in 0..cj {
                    let pj: f64 = (0..ci).map(|x| at(x, b)).sum::<f64>() / pk;
                    if (at(a, b) / pk - pi * pj).abs() > eps {
                        return false;
                    }
                }
            }
        }
        true
    }
}

pub(crate) fn encode(cards: &[usize], vals: &[usize]) -> usize {
    cards.iter().zip(vals).fold(0, |acc, (&c, &v)| acc * c + v)
}

pub(crate) fn decode(cards: &[usize], idx: usize) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    decode_into(cards, idx, &mut out);
    out
}

pub(crate) fn decode_into(cards: &[usize], mut idx: usize, out: &mut [usize]) {
    for (slot, &c) in out.iter_mut().zip(cards).rev() {
        *slot = idx % c;
        idx /= c;
    }
}

/// A family of conditional distributions `p(target | given)`, one per
/// configuration of the conditioning variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Conditional {
    pub target: Vec<String>,
    pub given: Vec<String>,
    pub target_cards: Vec<usize>,
    pub given_cards: Vec<usize>,
    /// Given-major dense layout: `probs[g * target_size + t]`.
    pub probs: Vec<f64>,
}

impl Conditional {
    pub fn target_size(&self) -> usize {
        self.target_cards.iter().product()
    }

    pub fn given_size(&self) -> usize {
        self.given_cards.iter().product()
    }

    pub fn get(&self, given: &[usize], target: &[usize]) -> f64 {
        let g = encode(&self.given_cards, given);
        let t = encode(&self.target_cards, target);
        self.probs[g * self.target_size() + t]
    }

    /// Largest absolute difference to `other` over all entries; `None` when the
    /// two are laid out over different variables.
    pub fn max_abs_diff(&self, other: &Conditional) -> Option<f64> {
        if self.target != other.target
            || self.given != other.given
            || self.target_cards != other.target_cards
            || self.given_cards != other.given_cards
        {
            return None;
        }
        Some(
            self.probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// Sum over the target for each conditioning configuration.
    pub fn masses(&self) -> Vec<f64> {
        self.probs.chunks(self.target_size()).map(|c| c.iter().sum()).collect()
    }
}

/// Parses a probability written as a decimal or as a ratio `a/b`.
pub fn parse_probability(s: &str) -> Option<f64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().ok()?;
            let b: f64 = b.trim().parse().ok()?;
            (b != 0.0).then_some(a / b)
        }
        None => s.parse().ok(),
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn names(ns: &[&str]) -> Vec<String> {
        ns.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn product_table_independence() {
        let t = JointTable::product(names(&["a", "b", "c"]), &[vec![0.3, 0.7], vec![0.5, 0.5], vec![0.1, 0.9]]).unwrap();
        assert!((t.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(t.independent(0, 1, &[], DEFAULT_EPS));
        assert!(t.independent(0, 2, &[1], DEFAULT_EPS));
        let m = t.marginal(&[0]);
        assert!((m[0] - 0.3).abs() < 1e-12 && (m[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn row_validation() {
        let d = vec![vec!["0".to_string(), "1".to_string()]];
        let dup = [(vec![0], 0.5), (vec![0], 0.5)];
        assert_eq!(JointTable::from_rows(names(&["a"]), d.clone(), &dup, 1e-9), Err(Error::DuplicateRow(2)));
        let missing = [(vec![0], 1.0)];
        assert_eq!(JointTable::from_rows(names(&["a"]), d.clone(), &missing, 1e-9), Err(Error::IncompleteDomain));
        let short = [(vec![0], 0.5), (vec![1], 0.48)];
        assert!(matches!(
            JointTable::from_rows(names(&["a"]), d, &short, 1e-9),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn correlated_pair_dependent() {
        let d = vec![vec!["0".to_string(), "1".to_string()]; 2];
        let rows = [(vec![0, 0], 0.4), (vec![0, 1], 0.1), (vec![1, 0], 0.1), (vec![1, 1], 0.4)];
        let t = JointTable::from_rows(names(&["a", "b"]), d, &rows, 1e-9).unwrap();
        assert!(!t.independent(0, 1, &[], 1e-9));
    }

    #[test]
    fn ratios_parse() {
        assert_eq!(parse_probability("1/8"), Some(0.125));
        assert_eq!(parse_probability(" 0.25 "), Some(0.25));
        assert_eq!(parse_probability("1/0"), None);
        assert_eq!(parse_probability("x"), None);
    }
}
