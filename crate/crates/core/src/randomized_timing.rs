//! Randomized timings, timing information and ε-timing verification, plus the
//! chain distributions that make every game approximately timeable.

use crate::dist::{tv_distance, Dist, DistError, DEFAULT_BUDGET};
use crate::exact_timing::{DeterministicTiming, TimingError};
use crate::game::{Game, NodeIdx, NodeKind};
use crate::rational::{fmt_q, parse_q, qi, qu, Q};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RandomizedError {
    #[error("atom {atom}: {source}")]
    Atom { atom: usize, source: TimingError },
    #[error("atom probabilities must be positive and sum to 1 (sum is {})", fmt_q(.0))]
    Probabilities(Q),
    #[error("a randomized timing needs at least one atom")]
    NoAtoms,
    #[error("node {0} is not a decision node")]
    NotDecision(u64),
    #[error("support of {size} exceeds the budget of {budget}; use Monte Carlo estimation")]
    BudgetExceeded { size: String, budget: usize },
    #[error("invalid parameters: {0}")]
    Parameter(String),
    #[error("game shape: {0}")]
    Shape(String),
    #[error("chain outcome {0} is not a strictly increasing tuple of positive integers")]
    NotChain(String),
    #[error("chain arity {arity} is too small for a game of depth {depth}")]
    ArityTooSmall { arity: usize, depth: usize },
    #[error("document: {0}")]
    Document(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Finite mixture of deterministic timings of one game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomizedTiming {
    atoms: Vec<(Q, DeterministicTiming)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomDoc {
    prob: String,
    times: BTreeMap<u64, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomizedDoc {
    game: String,
    atoms: Vec<AtomDoc>,
}

impl RandomizedTiming {
    /// Checks every atom against `g` and the probabilities for normalization.
    pub fn new(g: &Game, atoms: Vec<(Q, DeterministicTiming)>) -> Result<Self, RandomizedError> {
        if atoms.is_empty() {
            return Err(RandomizedError::NoAtoms);
        }
        let total: Q = atoms.iter().map(|(p, _)| p).sum();
        if !total.is_one() || atoms.iter().any(|(p, _)| !p.is_positive()) {
            return Err(RandomizedError::Probabilities(total));
        }
        for (i, (_, t)) in atoms.iter().enumerate() {
            t.check(g)
                .map_err(|source| RandomizedError::Atom { atom: i, source })?;
        }
        Ok(RandomizedTiming { atoms })
    }

    pub fn deterministic(g: &Game, t: DeterministicTiming) -> Result<Self, RandomizedError> {
        Self::new(g, vec![(Q::one(), t)])
    }

    pub fn atoms(&self) -> &[(Q, DeterministicTiming)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The same mixture with identical atoms merged and atoms sorted, so that
    /// equal distributions compare equal.
    pub fn canonical(&self) -> Self {
        let mut merged: BTreeMap<Vec<Q>, Q> = BTreeMap::new();
        for (p, t) in &self.atoms {
            *merged.entry(t.times.clone()).or_insert_with(Q::zero) += p;
        }
        RandomizedTiming {
            atoms: merged
                .into_iter()
                .map(|(times, p)| (p, DeterministicTiming::new(times)))
                .collect(),
        }
    }

    pub fn to_json(&self, g: &Game) -> String {
        let atoms = self
            .atoms
            .iter()
            .map(|(p, t)| AtomDoc {
                prob: fmt_q(p),
                times: g
                    .nodes()
                    .iter()
                    .zip(&t.times)
                    .map(|(n, x)| (n.id, fmt_time(x)))
                    .collect(),
            })
            .collect();
        serde_json::to_string_pretty(&RandomizedDoc {
            game: g.digest(),
            atoms,
        })
        .expect("timing documents serialize")
    }

    /// Reads a randomized timing document; the recorded digest must match `g`.
    pub fn from_json(g: &Game, text: &str) -> Result<Self, RandomizedError> {
        let doc: RandomizedDoc =
            serde_json::from_str(text).map_err(|e| RandomizedError::Document(e.to_string()))?;
        if doc.game != g.digest() {
            return Err(RandomizedError::Document(
                "timing was written for a different game".into(),
            ));
        }
        let mut atoms = Vec::with_capacity(doc.atoms.len());
        for (i, a) in doc.atoms.into_iter().enumerate() {
            let p = parse_q(&a.prob).map_err(|e| RandomizedError::Document(e.to_string()))?;
            let t = DeterministicTiming::from_id_map(g, &a.times)
                .map_err(|source| RandomizedError::Atom { atom: i, source })?;
            atoms.push((p, t));
        }
        Self::new(g, atoms)
    }
}

/// Integers (including huge ones) are written as plain decimals.
fn fmt_time(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        fmt_q(x)
    }
}

/// The owner's decision nodes on the root path to `v`, `v` included.
pub fn own_path(g: &Game, v: NodeIdx) -> Result<Vec<NodeIdx>, RandomizedError> {
    let p = g
        .player_of(v)
        .ok_or(RandomizedError::NotDecision(g.node(v).id))?;
    Ok(g
        .path_to(v)
        .into_iter()
        .filter(|&w| g.player_of(w) == Some(p))
        .collect())
}

fn tuple_at(t: &DeterministicTiming, nodes: &[NodeIdx]) -> Vec<Q> {
    nodes.iter().map(|&w| t.times[w].clone()).collect()
}

/// Law of the times of the owner's nodes on the path to `v`.
pub fn timing_information(
    g: &Game,
    rt: &RandomizedTiming,
    v: NodeIdx,
) -> Result<Dist, RandomizedError> {
    let nodes = own_path(g, v)?;
    Ok(Dist::from_pairs(
        rt.atoms.iter().map(|(p, t)| (tuple_at(t, &nodes), p.clone())),
    )?)
}

/// TV distance between timing-information laws; tuples of different lengths
/// are disjoint outcomes, hence at distance 1.
pub(crate) fn info_tv(a: &Dist, b: &Dist) -> Q {
    if a.arity() != b.arity() {
        Q::one()
    } else {
        tv_distance(a, b).expect("equal arity")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsilonReport {
    /// Maximum over information sets and member pairs of the TV distance.
    pub achieved: Q,
    /// A pair attaining the maximum, if any information set has two members.
    pub worst: Option<(NodeIdx, NodeIdx)>,
}

/// The exact ε achieved by `rt`. The timing is an ε-timing iff `achieved < ε`.
pub fn verify_epsilon_timing(g: &Game, rt: &RandomizedTiming) -> Result<EpsilonReport, RandomizedError> {
    verify_epsilon_timing_with_budget(g, rt, DEFAULT_BUDGET)
}

pub fn verify_epsilon_timing_with_budget(
    g: &Game,
    rt: &RandomizedTiming,
    budget: usize,
) -> Result<EpsilonReport, RandomizedError> {
    if rt.len() > budget {
        return Err(RandomizedError::BudgetExceeded {
            size: rt.len().to_string(),
            budget,
        });
    }
    let mut achieved = Q::zero();
    let mut worst = None;
    for set in g.infosets() {
        if set.members.len() < 2 {
            continue;
        }
        // Members with identical laws need no pairwise comparison.
        let mut distinct: Vec<(NodeIdx, Dist)> = Vec::new();
        let mut seen: HashSet<Dist> = HashSet::new();
        for &v in &set.members {
            let d = timing_information(g, rt, v)?;
            if seen.insert(d.clone()) {
                distinct.push((v, d));
            }
        }
        if worst.is_none() {
            worst = Some((set.members[0], set.members[1]));
        }
        for i in 0..distinct.len() {
            for j in i + 1..distinct.len() {
                let tv = info_tv(&distinct[i].1, &distinct[j].1);
                if tv > achieved {
                    achieved = tv;
                    worst = Some((distinct[i].0, distinct[j].0));
                }
            }
        }
    }
    Ok(EpsilonReport { achieved, worst })
}

/// Probability of drawing an atom in which no decision node's observed timing
/// information is more likely at one member of its information set than at
/// another, i.e. the timing reveals nothing anywhere.
pub fn no_leak_probability(g: &Game, rt: &RandomizedTiming) -> Result<Q, RandomizedError> {
    let mut leaky = vec![false; rt.len()];
    for set in g.infosets() {
        if set.members.len() < 2 {
            continue;
        }
        let paths: Vec<Vec<NodeIdx>> = set
            .members
            .iter()
            .map(|&v| own_path(g, v))
            .collect::<Result<_, _>>()?;
        let laws: Vec<Dist> = set
            .members
            .iter()
            .map(|&v| timing_information(g, rt, v))
            .collect::<Result<_, _>>()?;
        for (a, (_, t)) in rt.atoms.iter().enumerate() {
            if leaky[a] {
                continue;
            }
            for path in &paths {
                let seen = tuple_at(t, path);
                let first = laws[0].prob(&seen);
                if laws.iter().any(|d| d.prob(&seen) != first) {
                    leaky[a] = true;
                    break;
                }
            }
        }
    }
    Ok(rt
        .atoms
        .iter()
        .zip(&leaky)
        .filter(|(_, &l)| !l)
        .map(|((p, _), _)| p)
        .sum())
}

/// Each node at its expected time. For an exact (achieved-0) randomized timing
/// this is an exact deterministic timing.
pub fn mean_timing(rt: &RandomizedTiming) -> DeterministicTiming {
    let n = rt.atoms[0].1.times.len();
    let mut times = vec![Q::zero(); n];
    for (p, t) in &rt.atoms {
        for (acc, x) in times.iter_mut().zip(&t.times) {
            *acc += p * x;
        }
    }
    DeterministicTiming::new(times)
}

// ---------------------------------------------------------------------------
// Monte Carlo

/// Draws the times of selected nodes under one random deterministic timing.
pub trait TimingSampler: Sync {
    fn sample_times(&self, rng: &mut ChaCha8Rng, nodes: &[NodeIdx]) -> Vec<Q>;
}

impl<F> TimingSampler for F
where
    F: Fn(&mut ChaCha8Rng, &[NodeIdx]) -> Vec<Q> + Sync,
{
    fn sample_times(&self, rng: &mut ChaCha8Rng, nodes: &[NodeIdx]) -> Vec<Q> {
        self(rng, nodes)
    }
}

/// Samples atoms of an explicit randomized timing.
pub struct AtomSampler<'a> {
    rt: &'a RandomizedTiming,
    cumulative: Vec<f64>,
}

impl<'a> AtomSampler<'a> {
    pub fn new(rt: &'a RandomizedTiming) -> Self {
        let mut acc = 0.0;
        let cumulative = rt
            .atoms
            .iter()
            .map(|(p, _)| {
                acc += p.to_f64().unwrap_or(0.0);
                acc
            })
            .collect();
        AtomSampler { rt, cumulative }
    }
}

impl TimingSampler for AtomSampler<'_> {
    fn sample_times(&self, rng: &mut ChaCha8Rng, nodes: &[NodeIdx]) -> Vec<Q> {
        let total = *self.cumulative.last().expect("nonempty");
        let u: f64 = rng.gen::<f64>() * total;
        let k = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.rt.len() - 1);
        tuple_at(&self.rt.atoms[k].1, nodes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub estimate: f64,
    pub standard_error: f64,
    pub worst: Option<(NodeIdx, NodeIdx)>,
}

/// Plug-in estimate of the achieved ε from empirical timing-information laws.
///
/// Each node pair gets its own random stream derived from `seed`, so results do
/// not depend on evaluation order. The standard error is the delta-method error
/// of the two empirical masses of the set where the first law dominates. The
/// plug-in estimator is biased upward when the supports are large relative to
/// `samples`.
pub fn estimate_epsilon_timing(
    g: &Game,
    sampler: &dyn TimingSampler,
    seed: u64,
    samples: usize,
) -> EstimateReport {
    let mut best = EstimateReport {
        estimate: 0.0,
        standard_error: 0.0,
        worst: None,
    };
    let mut stream = 0u64;
    for set in g.infosets() {
        for i in 0..set.members.len() {
            for j in i + 1..set.members.len() {
                let (a, b) = (set.members[i], set.members[j]);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream);
                stream += 1;
                let pa = own_path(g, a).expect("decision node");
                let pb = own_path(g, b).expect("decision node");
                let (est, se) = estimate_pair(sampler, &mut rng, &pa, &pb, samples);
                if best.worst.is_none() || est > best.estimate {
                    best = EstimateReport {
                        estimate: est,
                        standard_error: se,
                        worst: Some((a, b)),
                    };
                }
            }
        }
    }
    best
}

fn estimate_pair(
    sampler: &dyn TimingSampler,
    rng: &mut ChaCha8Rng,
    pa: &[NodeIdx],
    pb: &[NodeIdx],
    samples: usize,
) -> (f64, f64) {
    if samples == 0 {
        return (0.0, 0.0);
    }
    let mut counts: HashMap<Vec<Q>, (u64, u64)> = HashMap::new();
    for _ in 0..samples {
        counts.entry(sampler.sample_times(rng, pa)).or_default().0 += 1;
    }
    for _ in 0..samples {
        counts.entry(sampler.sample_times(rng, pb)).or_default().1 += 1;
    }
    // integer sums keep the result independent of hash order
    let (mut a_plus, mut b_plus) = (0u64, 0u64);
    for &(ca, cb) in counts.values() {
        if ca > cb {
            a_plus += ca;
            b_plus += cb;
        }
    }
    let n = samples as f64;
    let (pa_plus, pb_plus) = (a_plus as f64 / n, b_plus as f64 / n);
    let est = pa_plus - pb_plus;
    let se = (pa_plus * (1.0 - pa_plus) / n + pb_plus * (1.0 - pb_plus) / n).sqrt();
    (est, se)
}

// ---------------------------------------------------------------------------
// Chain distributions

/// A distribution over strictly increasing tuples of positive integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainDistribution(Dist);

impl ChainDistribution {
    pub fn new(d: Dist) -> Result<Self, RandomizedError> {
        for (x, _) in d.iter() {
            let ok = x.iter().all(|v| v.denom().is_one() && v.is_positive())
                && x.windows(2).all(|w| w[0] < w[1]);
            if !ok {
                let text: Vec<String> = x.iter().map(fmt_q).collect();
                return Err(RandomizedError::NotChain(format!("({})", text.join(", "))));
            }
        }
        Ok(ChainDistribution(d))
    }

    pub fn dist(&self) -> &Dist {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.arity()
    }

    pub fn max_value(&self) -> Q {
        self.0.max_value().cloned().unwrap_or_else(Q::zero)
    }

    pub fn to_json(&self) -> String {
        self.0.to_json()
    }

    pub fn from_json(text: &str) -> Result<Self, RandomizedError> {
        Self::new(Dist::from_json(text)?)
    }
}

/// `X₁` uniform on `[N−k]`, `X₂ = X₁ + k`.
pub fn indist_base(n: u64, k: u64) -> Result<ChainDistribution, RandomizedError> {
    if k < 1 || k >= n {
        return Err(RandomizedError::Parameter(format!(
            "need 1 <= k < N, got N = {n}, k = {k}"
        )));
    }
    let xs = (1..=n - k).map(|x| vec![qu(x as usize), qu((x + k) as usize)]);
    ChainDistribution::new(Dist::uniform(xs)?)
}

/// `Y₁` uniform on `[B]`, then `Y_{i+1} − Y_i` uniform on `[2^{X_i}]`
/// independently, mixed over the outcomes `X` of `inner`.
pub fn indist_recursive(
    inner: &ChainDistribution,
    b: u64,
    budget: usize,
) -> Result<ChainDistribution, RandomizedError> {
    if b < 1 {
        return Err(RandomizedError::Parameter("B must be at least 1".into()));
    }
    let mut size = BigInt::zero();
    for (x, _) in inner.0.iter() {
        let exp: usize = x.iter().map(|v| v.to_usize().unwrap_or(usize::MAX)).fold(0, usize::saturating_add);
        if exp > 64 * 1024 {
            return Err(RandomizedError::BudgetExceeded {
                size: format!("2^{exp}"),
                budget,
            });
        }
        size += BigInt::from(b) << exp;
    }
    if size > BigInt::from(budget) {
        return Err(RandomizedError::BudgetExceeded {
            size: size.to_string(),
            budget,
        });
    }
    let mut pairs: Vec<(Vec<Q>, Q)> = Vec::with_capacity(size.to_usize().unwrap_or(0));
    for (x, p) in inner.0.iter() {
        let ranges: Vec<u64> = x.iter().map(|v| 1u64 << v.to_u64().expect("small")).collect();
        let count: u64 = b * ranges.iter().product::<u64>();
        let w = p / Q::from_integer(BigInt::from(count));
        // odometer over (Y₁, gap₁, …, gap_n)
        let mut digits = vec![1u64; ranges.len() + 1];
        loop {
            let mut y = Vec::with_capacity(digits.len());
            let mut acc = digits[0];
            y.push(qi(acc as i64));
            for &d in &digits[1..] {
                acc += d;
                y.push(Q::from_integer(BigInt::from(acc)));
            }
            pairs.push((y, w.clone()));
            let mut done = true;
            for pos in (0..digits.len()).rev() {
                let limit = if pos == 0 { b } else { ranges[pos - 1] };
                if digits[pos] < limit {
                    digits[pos] += 1;
                    done = false;
                    break;
                }
                digits[pos] = 1;
            }
            if done {
                break;
            }
        }
    }
    ChainDistribution::new(Dist::from_pairs(pairs)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetReport {
    pub epsilon: Q,
    /// Index subsets (0-based) attaining the maximum.
    pub worst: Option<(Vec<usize>, Vec<usize>)>,
}

fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..m).collect();
    if m > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = m;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - m + i {
                cur[i] += 1;
                for j in i + 1..m {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
        if m == 0 {
            return out;
        }
    }
}

/// Law of the selected coordinates (already sorted, since chains increase).
pub fn subset_law(cd: &ChainDistribution, subset: &[usize]) -> Dist {
    Dist::from_pairs(
        cd.0.iter()
            .map(|(x, p)| (subset.iter().map(|&i| x[i].clone()).collect(), p.clone())),
    )
    .expect("marginal of a distribution")
}

pub fn subset_report(cd: &ChainDistribution, m: usize) -> Result<SubsetReport, RandomizedError> {
    if m < 1 || m >= cd.arity() {
        return Err(RandomizedError::Parameter(format!(
            "need 1 <= m < arity = {}, got m = {m}",
            cd.arity()
        )));
    }
    let all = subsets(cd.arity(), m);
    let laws: Vec<Dist> = all.iter().map(|s| subset_law(cd, s)).collect();
    let mut report = SubsetReport {
        epsilon: Q::zero(),
        worst: None,
    };
    for i in 0..laws.len() {
        for j in i + 1..laws.len() {
            let tv = tv_distance(&laws[i], &laws[j])?;
            if report.worst.is_none() || tv > report.epsilon {
                report.epsilon = tv;
                report.worst = Some((all[i].clone(), all[j].clone()));
            }
        }
    }
    Ok(report)
}

/// Max TV over pairs of `m`-subsets of coordinates.
pub fn verify_indistinguishable_subsets(cd: &ChainDistribution, m: usize) -> Result<Q, RandomizedError> {
    Ok(subset_report(cd, m)?.epsilon)
}

/// Root at 0 and every node at depth `d ≥ 1` at time `X_d`; one atom per outcome.
pub fn timing_from_chain(g: &Game, cd: &ChainDistribution) -> Result<RandomizedTiming, RandomizedError> {
    let depth = g.max_depth();
    if cd.arity() < depth {
        return Err(RandomizedError::ArityTooSmall {
            arity: cd.arity(),
            depth,
        });
    }
    let atoms = cd
        .0
        .iter()
        .map(|(x, p)| {
            let times = (0..g.len())
                .map(|v| match g.depth(v) {
                    0 => Q::zero(),
                    d => x[d - 1].clone(),
                })
                .collect();
            (p.clone(), DeterministicTiming::new(times))
        })
        .collect();
    RandomizedTiming::new(g, atoms)
}

/// The window timing for a chance root followed by two moves in either order:
/// `i` uniform on `{1..N−1}`, first mover at `i`, second at `i+1`.
pub fn shifted_window_timing(g: &Game, n: u64) -> Result<RandomizedTiming, RandomizedError> {
    if n < 4 {
        return Err(RandomizedError::Parameter(format!("need N >= 4, got {n}")));
    }
    let root = g.root();
    if !matches!(g.node(root).kind, NodeKind::Chance) {
        return Err(RandomizedError::Shape("root must be a chance node".into()));
    }
    for v in 0..g.len() {
        let ok = matches!(
            (g.depth(v), &g.node(v).kind),
            (0, _)
                | (1, NodeKind::Decision { .. })
                | (2, NodeKind::Decision { .. } | NodeKind::Leaf { .. })
                | (3, NodeKind::Leaf { .. })
        );
        if !ok {
            return Err(RandomizedError::Shape(format!(
                "node {} at depth {} does not fit the two-stage shape",
                g.node(v).id,
                g.depth(v)
            )));
        }
    }
    let p = Q::one() / qu((n - 1) as usize);
    let atoms = (1..n)
        .map(|i| {
            let times = (0..g.len())
                .map(|v| match g.depth(v) {
                    0 => Q::zero(),
                    d => qu(i as usize + d - 1),
                })
                .collect();
            (p.clone(), DeterministicTiming::new(times))
        })
        .collect();
    RandomizedTiming::new(g, atoms)
}
