//! Finite distributions over rational tuples with exact total variation.

use crate::rational::{fmt_q, parse_q, qu, Q};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Default cap on support sizes for exact operations.
pub const DEFAULT_BUDGET: usize = 1_000_000;

pub type Outcome = Vec<Q>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistError {
    #[error("arity mismatch: {0} vs {1}")]
    ArityMismatch(usize, usize),
    #[error("probabilities sum to {}, not 1", fmt_q(.0))]
    NotNormalized(Q),
    #[error("non-positive probability {}", fmt_q(.0))]
    NonPositive(Q),
    #[error("empty distribution")]
    Empty,
    #[error("weights and parts differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("conditioning event has probability zero")]
    ZeroProbabilityEvent,
    #[error("support size exceeds the budget of {0} entries")]
    BudgetExceeded(usize),
    #[error("invalid distribution document: {0}")]
    Document(String),
}

/// A probability distribution with finite support; every outcome has the same arity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dist {
    arity: usize,
    support: BTreeMap<Outcome, Q>,
}

impl Dist {
    /// Builds from (outcome, probability) pairs, merging repeated outcomes.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Outcome, Q)>) -> Result<Dist, DistError> {
        let mut support: BTreeMap<Outcome, Q> = BTreeMap::new();
        let mut arity = None;
        for (x, p) in pairs {
            if !p.is_positive() {
                return Err(DistError::NonPositive(p));
            }
            match arity {
                None => arity = Some(x.len()),
                Some(a) if a != x.len() => return Err(DistError::ArityMismatch(a, x.len())),
                _ => {}
            }
            *support.entry(x).or_insert_with(Q::zero) += p;
        }
        let arity = arity.ok_or(DistError::Empty)?;
        let total: Q = support.values().sum();
        if !total.is_one() {
            return Err(DistError::NotNormalized(total));
        }
        Ok(Dist { arity, support })
    }

    pub fn point(x: Outcome) -> Dist {
        Dist {
            arity: x.len(),
            support: BTreeMap::from([(x, Q::one())]),
        }
    }

    /// Uniform over the given outcomes (repeats add weight).
    pub fn uniform(xs: impl IntoIterator<Item = Outcome>) -> Result<Dist, DistError> {
        let xs: Vec<Outcome> = xs.into_iter().collect();
        if xs.is_empty() {
            return Err(DistError::Empty);
        }
        let p = Q::one() / qu(xs.len());
        Dist::from_pairs(xs.into_iter().map(|x| (x, p.clone())))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn prob(&self, x: &[Q]) -> Q {
        self.support.get(x).cloned().unwrap_or_else(Q::zero)
    }

    /// Support entries in lexicographic outcome order.
    pub fn iter(&self) -> impl Iterator<Item = (&Outcome, &Q)> {
        self.support.iter()
    }

    pub fn max_value(&self) -> Option<&Q> {
        self.support.keys().flat_map(|x| x.iter()).max()
    }

    pub fn to_json(&self) -> String {
        let doc: Vec<EntryDoc> = self
            .support
            .iter()
            .map(|(x, p)| EntryDoc {
                outcome: x.iter().map(fmt_q).collect(),
                prob: fmt_q(p),
            })
            .collect();
        serde_json::to_string_pretty(&doc).expect("distribution documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Dist, DistError> {
        let doc: Vec<EntryDoc> =
            serde_json::from_str(text).map_err(|e| DistError::Document(e.to_string()))?;
        let mut pairs = Vec::with_capacity(doc.len());
        for e in doc {
            let parse = |s: &str| parse_q(s).map_err(|e| DistError::Document(e.to_string()));
            let x = e.outcome.iter().map(|s| parse(s)).collect::<Result<Vec<_>, _>>()?;
            pairs.push((x, parse(&e.prob)?));
        }
        Dist::from_pairs(pairs)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDoc {
    outcome: Vec<String>,
    prob: String,
}

/// Σ_x max(P_a(x) − P_b(x), 0).
pub fn tv_distance(a: &Dist, b: &Dist) -> Result<Q, DistError> {
    if a.arity != b.arity {
        return Err(DistError::ArityMismatch(a.arity, b.arity));
    }
    let mut total = Q::zero();
    for (x, p) in &a.support {
        match b.support.get(x) {
            Some(r) if r >= p => {}
            Some(r) => total += p - r,
            None => total += p,
        }
    }
    Ok(total)
}

pub fn mixture(weights: &[Q], parts: &[Dist]) -> Result<Dist, DistError> {
    mixture_with_budget(weights, parts, DEFAULT_BUDGET)
}

pub fn mixture_with_budget(weights: &[Q], parts: &[Dist], budget: usize) -> Result<Dist, DistError> {
    if weights.len() != parts.len() {
        return Err(DistError::LengthMismatch(weights.len(), parts.len()));
    }
    let arity = parts.first().ok_or(DistError::Empty)?.arity;
    if let Some(w) = weights.iter().find(|w| !w.is_positive()) {
        return Err(DistError::NonPositive(w.clone()));
    }
    let total: Q = weights.iter().sum();
    if !total.is_one() {
        return Err(DistError::NotNormalized(total));
    }
    let mut support: BTreeMap<Outcome, Q> = BTreeMap::new();
    for (w, d) in weights.iter().zip(parts) {
        if d.arity != arity {
            return Err(DistError::ArityMismatch(arity, d.arity));
        }
        for (x, p) in &d.support {
            *support.entry(x.clone()).or_insert_with(Q::zero) += w * p;
            if support.len() > budget {
                return Err(DistError::BudgetExceeded(budget));
            }
        }
    }
    Ok(Dist { arity, support })
}

/// Image of `d` under `f`; `f` must return outcomes of one arity.
pub fn pushforward(d: &Dist, f: impl Fn(&[Q]) -> Outcome) -> Result<Dist, DistError> {
    Dist::from_pairs(d.support.iter().map(|(x, p)| (f(x), p.clone())))
}

/// Conditions a joint distribution whose last coordinate is a flag on
/// `flag == value`, returning the law of the remaining coordinates.
pub fn condition(joint: &Dist, value: &Q) -> Result<Dist, DistError> {
    if joint.arity == 0 {
        return Err(DistError::ArityMismatch(joint.arity, 1));
    }
    let k = joint.arity - 1;
    let kept: Vec<(Outcome, Q)> = joint
        .support
        .iter()
        .filter(|(x, _)| &x[k] == value)
        .map(|(x, p)| (x[..k].to_vec(), p.clone()))
        .collect();
    let mass: Q = kept.iter().map(|(_, p)| p).sum();
    if mass.is_zero() {
        return Err(DistError::ZeroProbabilityEvent);
    }
    Dist::from_pairs(kept.into_iter().map(|(x, p)| (x, p / &mass)))
}

pub fn expectation(d: &Dist) -> Result<Q, DistError> {
    if d.arity != 1 {
        return Err(DistError::ArityMismatch(d.arity, 1));
    }
    Ok(d.support.iter().map(|(x, p)| &x[0] * p).sum())
}
