//! Timings of agendas and of symmetric choiceless games: verification,
//! symmetrization, the nonnegativity shift and the gap-growth classifier.

use crate::dist::{tv_distance, Dist};
use crate::families::{factorial, permutations, Agenda, SymmetricChoicelessGame, Symbol};
use crate::rational::{fmt_q, parse_q, q, qu, Q};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgendaError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("atom probabilities must be positive and sum to 1")]
    Probabilities,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{n}! numberings exceed the limit of {limit}")]
    TooManyNumberings { n: usize, limit: usize },
    #[error("sequence must be strictly increasing with at least 4 entries")]
    BadSequence,
    #[error("c must exceed 2")]
    BadConstant,
    #[error("shift self-check failed at {}", fmt_q(.0))]
    SelfCheck(Q),
    #[error("document: {0}")]
    Document(String),
}

/// One outcome of an agenda timing: times of the separators in order, and of
/// each player's occurrences in order (index 0 is player 1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AgendaAssignment {
    pub sep_times: Vec<Q>,
    pub player_times: Vec<Vec<Q>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgendaTiming {
    pub atoms: Vec<(Q, AgendaAssignment)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgendaAtomDoc {
    prob: String,
    sep_times: Vec<String>,
    player_times: BTreeMap<usize, Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgendaTimingDoc {
    agenda: String,
    atoms: Vec<AgendaAtomDoc>,
}

pub fn agenda_digest(a: &Agenda) -> String {
    hex::encode(Sha256::digest(a.to_json().as_bytes()))
}

impl AgendaTiming {
    /// Checks probabilities and that every atom has one time per symbol.
    pub fn new(a: &Agenda, atoms: Vec<(Q, AgendaAssignment)>) -> Result<Self, AgendaError> {
        let total: Q = atoms.iter().map(|(p, _)| p).sum();
        if atoms.is_empty() || !total.is_one() || atoms.iter().any(|(p, _)| !p.is_positive()) {
            return Err(AgendaError::Probabilities);
        }
        let counts = a.counts();
        let seps = a.separators();
        for (i, (_, x)) in atoms.iter().enumerate() {
            if x.sep_times.len() != seps || x.player_times.len() != a.n {
                return Err(AgendaError::Shape(format!("atom {i} does not match the agenda")));
            }
            for (p, ts) in x.player_times.iter().enumerate() {
                if ts.len() != counts[p] {
                    return Err(AgendaError::Shape(format!(
                        "atom {i}: player {} has {} times for {} occurrences",
                        p + 1,
                        ts.len(),
                        counts[p]
                    )));
                }
            }
        }
        Ok(AgendaTiming { atoms })
    }

    pub fn to_json(&self, a: &Agenda) -> String {
        let atoms = self
            .atoms
            .iter()
            .map(|(p, x)| AgendaAtomDoc {
                prob: fmt_q(p),
                sep_times: x.sep_times.iter().map(fmt_q).collect(),
                player_times: x
                    .player_times
                    .iter()
                    .enumerate()
                    .map(|(i, ts)| (i + 1, ts.iter().map(fmt_q).collect()))
                    .collect(),
            })
            .collect();
        serde_json::to_string_pretty(&AgendaTimingDoc {
            agenda: agenda_digest(a),
            atoms,
        })
        .expect("serializes")
    }

    pub fn from_json(a: &Agenda, text: &str) -> Result<Self, AgendaError> {
        let doc: AgendaTimingDoc =
            serde_json::from_str(text).map_err(|e| AgendaError::Document(e.to_string()))?;
        if doc.agenda != agenda_digest(a) {
            return Err(AgendaError::Document("timing was written for a different agenda".into()));
        }
        let parse = |s: &String| parse_q(s).map_err(|e| AgendaError::Document(e.to_string()));
        let mut atoms = Vec::with_capacity(doc.atoms.len());
        for atom in doc.atoms {
            let sep_times = atom.sep_times.iter().map(parse).collect::<Result<_, _>>()?;
            let mut player_times = vec![Vec::new(); a.n];
            for (p, ts) in atom.player_times {
                if p == 0 || p > a.n {
                    return Err(AgendaError::Document(format!("unknown player {p}")));
                }
                player_times[p - 1] = ts.iter().map(parse).collect::<Result<_, _>>()?;
            }
            atoms.push((
                parse(&atom.prob)?,
                AgendaAssignment {
                    sep_times,
                    player_times,
                },
            ));
        }
        AgendaTiming::new(a, atoms)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub atom: usize,
    /// Requirement number, 1 to 5.
    pub requirement: u8,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "atom {}: requirement {}: {}", self.atom, self.requirement, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgendaReport {
    /// Requirements 1–5, each holding in every atom.
    pub requirements: [bool; 5],
    /// The first violation found per requirement.
    pub violations: Vec<Violation>,
    /// Requirement 6: max TV between players with equal occurrence counts.
    pub max_tv: Q,
    pub worst_pair: Option<(usize, usize)>,
    pub verdict: bool,
}

/// Checks requirements 1–5 per atom and measures requirement 6 exactly; the
/// verdict is that 1–5 always hold and the measured TV is at most `eps`.
pub fn verify_agenda_timing(
    a: &Agenda,
    t: &AgendaTiming,
    eps: &Q,
    lambda: &Q,
) -> Result<AgendaReport, AgendaError> {
    AgendaTiming::new(a, t.atoms.clone())?;
    let mut requirements = [true; 5];
    let mut violations = Vec::new();
    let mut note = |atom: usize, r: u8, detail: String, requirements: &mut [bool; 5]| {
        if requirements[r as usize - 1] {
            requirements[r as usize - 1] = false;
            violations.push(Violation {
                atom,
                requirement: r,
                detail,
            });
        }
    };
    for (ai, (_, x)) in t.atoms.iter().enumerate() {
        for (j, s) in x.sep_times.iter().enumerate() {
            if s.is_negative() {
                note(ai, 1, format!("separator {} at {}", j + 1, fmt_q(s)), &mut requirements);
            }
        }
        for (j, w) in x.sep_times.windows(2).enumerate() {
            if &w[0] + Q::one() > w[1] {
                note(ai, 2, format!("separators {} and {} closer than 1", j + 1, j + 2), &mut requirements);
            }
        }
        for (p, ts) in x.player_times.iter().enumerate() {
            if let Some(j) = ts.windows(2).position(|w| w[0] >= w[1]) {
                note(ai, 3, format!("player {} occurrences {} and {}", p + 1, j + 1, j + 2), &mut requirements);
            }
        }
        // bounds from all earlier / later separators
        let k = x.sep_times.len();
        let mut prefix_max: Vec<Option<Q>> = vec![None; k + 1];
        for j in 0..k {
            let cur = &x.sep_times[j];
            prefix_max[j + 1] = Some(match &prefix_max[j] {
                Some(m) if m > cur => m.clone(),
                _ => cur.clone(),
            });
        }
        let mut suffix_min: Vec<Option<Q>> = vec![None; k + 1];
        for j in (0..k).rev() {
            let cur = &x.sep_times[j];
            suffix_min[j] = Some(match &suffix_min[j + 1] {
                Some(m) if m < cur => m.clone(),
                _ => cur.clone(),
            });
        }
        let mut seen = vec![0usize; a.n];
        let mut before = 0usize;
        for s in &a.seq {
            match s {
                Symbol::Sep => before += 1,
                Symbol::Player(p) => {
                    let time = &x.player_times[p - 1][seen[p - 1]];
                    seen[p - 1] += 1;
                    if let Some(m) = &suffix_min[before] {
                        if *time > m + lambda {
                            note(ai, 4, format!("player {p} occurrence {} too late", seen[p - 1]), &mut requirements);
                        }
                    }
                    if let Some(m) = &prefix_max[before] {
                        if *time < m - lambda {
                            note(ai, 5, format!("player {p} occurrence {} too early", seen[p - 1]), &mut requirements);
                        }
                    }
                }
            }
        }
    }

    let (max_tv, worst_pair) = requirement6(a, t);
    let verdict = requirements.iter().all(|&b| b) && max_tv <= *eps;
    Ok(AgendaReport {
        requirements,
        violations,
        max_tv,
        worst_pair,
        verdict,
    })
}

fn player_law(t: &AgendaTiming, p: usize) -> Dist {
    Dist::from_pairs(
        t.atoms
            .iter()
            .map(|(pr, x)| (x.player_times[p].clone(), pr.clone())),
    )
    .expect("normalized timing")
}

/// Max TV over pairs of players with equal counts, with a pair attaining it.
pub fn requirement6(a: &Agenda, t: &AgendaTiming) -> (Q, Option<(usize, usize)>) {
    let counts = a.counts();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (p, &k) in counts.iter().enumerate() {
        groups.entry(k).or_default().push(p);
    }
    let mut best = Q::zero();
    let mut worst = None;
    for members in groups.values() {
        let mut distinct: Vec<(usize, Dist)> = Vec::new();
        let mut seen = HashSet::new();
        for &p in members {
            let d = player_law(t, p);
            if seen.insert(d.clone()) {
                distinct.push((p, d));
            }
        }
        for i in 0..distinct.len() {
            for j in i + 1..distinct.len() {
                let tv = tv_distance(&distinct[i].1, &distinct[j].1).expect("equal counts");
                if tv > best {
                    best = tv;
                    worst = Some((distinct[i].0 + 1, distinct[j].0 + 1));
                }
            }
        }
    }
    (best, worst)
}

// ---------------------------------------------------------------------------
// Nonnegativity shift

/// The increasing bijection `(−∞, λ] → (0, λ]` with `f(x) ≥ x`, extended by the
/// identity above `λ`; `δ = λ/2`.
pub fn shift_fn(x: &Q, lambda: &Q) -> Q {
    let delta = lambda / Q::from_integer(2.into());
    if !x.is_positive() {
        &delta / (Q::one() - x)
    } else if x <= lambda {
        &delta + x * (lambda - &delta) / lambda
    } else {
        x.clone()
    }
}

/// Checks on a 1000-point grid over `[lo, hi]` that `f` increases and dominates
/// the identity.
pub fn self_check_shift(lambda: &Q, lo: &Q, hi: &Q) -> Result<(), AgendaError> {
    let steps = 999;
    let width = hi - lo;
    let mut prev: Option<Q> = None;
    for k in 0..=steps {
        let x = lo + &width * q(k, steps);
        let y = shift_fn(&x, lambda);
        if y < x || prev.as_ref().is_some_and(|p| y <= *p) {
            return Err(AgendaError::SelfCheck(x));
        }
        prev = Some(y);
    }
    Ok(())
}

/// Moves every player time into `(0, N]` by [`shift_fn`], leaving separators alone.
pub fn shift_nonneg(a: &Agenda, t: &AgendaTiming, lambda: &Q, n: &Q) -> Result<AgendaTiming, AgendaError> {
    if !lambda.is_positive() || lambda >= n {
        return Err(AgendaError::Precondition(format!(
            "need 0 < lambda < N, got lambda = {}, N = {}",
            fmt_q(lambda),
            fmt_q(n)
        )));
    }
    let report = verify_agenda_timing(a, t, &Q::one(), lambda)?;
    if let Some(v) = report.violations.first() {
        return Err(AgendaError::Precondition(v.to_string()));
    }
    let mut lo = -Q::one();
    for (_, x) in &t.atoms {
        for v in x.sep_times.iter().chain(x.player_times.iter().flatten()) {
            if v > n {
                return Err(AgendaError::Precondition(format!(
                    "time {} exceeds N = {}",
                    fmt_q(v),
                    fmt_q(n)
                )));
            }
            if *v < lo {
                lo = v.clone();
            }
        }
    }
    self_check_shift(lambda, &(lo - Q::one()), n)?;
    let atoms = t
        .atoms
        .iter()
        .map(|(p, x)| {
            (
                p.clone(),
                AgendaAssignment {
                    sep_times: x.sep_times.clone(),
                    player_times: x
                        .player_times
                        .iter()
                        .map(|ts| ts.iter().map(|v| shift_fn(v, lambda)).collect())
                        .collect(),
                },
            )
        })
        .collect();
    Ok(AgendaTiming { atoms })
}

// ---------------------------------------------------------------------------
// Symmetric choiceless games

/// Atoms of rows `X_σ` (one per numbering σ, in lexicographic order of
/// [`permutations`]; `σ[p−1]` is player `p`'s number), each row giving the time
/// of every position of the sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetricGameTiming {
    pub atoms: Vec<(Q, Vec<Vec<Q>>)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SymmetricAtomDoc {
    prob: String,
    rows: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SymmetricTimingDoc {
    n: usize,
    seq: Vec<usize>,
    atoms: Vec<SymmetricAtomDoc>,
}

impl SymmetricGameTiming {
    /// Rows are listed per numbering in lexicographic order.
    pub fn to_json(&self, scg: &SymmetricChoicelessGame) -> String {
        let atoms = self
            .atoms
            .iter()
            .map(|(p, rows)| SymmetricAtomDoc {
                prob: fmt_q(p),
                rows: rows.iter().map(|r| r.iter().map(fmt_q).collect()).collect(),
            })
            .collect();
        serde_json::to_string_pretty(&SymmetricTimingDoc {
            n: scg.n,
            seq: scg.seq.clone(),
            atoms,
        })
        .expect("serializes")
    }

    pub fn from_json(scg: &SymmetricChoicelessGame, text: &str) -> Result<Self, AgendaError> {
        let doc: SymmetricTimingDoc =
            serde_json::from_str(text).map_err(|e| AgendaError::Document(e.to_string()))?;
        if doc.n != scg.n || doc.seq != scg.seq {
            return Err(AgendaError::Document("timing was written for a different game".into()));
        }
        let parse = |s: &String| parse_q(s).map_err(|e| AgendaError::Document(e.to_string()));
        let mut atoms = Vec::with_capacity(doc.atoms.len());
        for a in doc.atoms {
            let rows = a
                .rows
                .iter()
                .map(|r| r.iter().map(parse).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            atoms.push((parse(&a.prob)?, rows));
        }
        let t = SymmetricGameTiming { atoms };
        t.check(scg)?;
        Ok(t)
    }

    pub fn check(&self, scg: &SymmetricChoicelessGame) -> Result<(), AgendaError> {
        let total: Q = self.atoms.iter().map(|(p, _)| p).sum();
        if self.atoms.is_empty() || !total.is_one() || self.atoms.iter().any(|(p, _)| !p.is_positive()) {
            return Err(AgendaError::Probabilities);
        }
        let rows = factorial(scg.n).unwrap_or(usize::MAX);
        for (i, (_, x)) in self.atoms.iter().enumerate() {
            if x.len() != rows || x.iter().any(|r| r.len() != scg.seq.len()) {
                return Err(AgendaError::Shape(format!("atom {i} needs {rows} rows of {}", scg.seq.len())));
            }
            for row in x {
                if row.iter().any(Signed::is_negative)
                    || row.windows(2).any(|w| &w[0] + Q::one() > w[1])
                {
                    return Err(AgendaError::Shape(format!("atom {i} has an invalid row")));
                }
            }
        }
        Ok(())
    }

    /// Every atom has identical rows.
    pub fn is_symmetric(&self) -> bool {
        self.atoms.iter().all(|(_, x)| x.windows(2).all(|w| w[0] == w[1]))
    }

    pub fn max_time(&self) -> Q {
        self.atoms
            .iter()
            .flat_map(|(_, x)| x.iter().flatten())
            .max()
            .cloned()
            .unwrap_or_else(Q::zero)
    }
}

/// Replaces every row by the row of a uniformly random numbering Π, independent
/// of the timing; identical resulting atoms are merged.
pub fn symmetrize(
    scg: &SymmetricChoicelessGame,
    t: &SymmetricGameTiming,
    limit: usize,
) -> Result<SymmetricGameTiming, AgendaError> {
    let rows = factorial(scg.n)
        .filter(|&f| f <= limit)
        .ok_or(AgendaError::TooManyNumberings { n: scg.n, limit })?;
    t.check(scg)?;
    let w = Q::one() / qu(rows);
    let mut merged: BTreeMap<Vec<Q>, Q> = BTreeMap::new();
    for (p, x) in &t.atoms {
        for row in x {
            *merged.entry(row.clone()).or_insert_with(Q::zero) += p * &w;
        }
    }
    Ok(SymmetricGameTiming {
        atoms: merged
            .into_iter()
            .map(|(row, p)| (p, vec![row; rows]))
            .collect(),
    })
}

/// The ε of a symmetric-game timing: max over players `p`, numberings σ, σ′
/// and `j` of the TV between the first `j` times of `p`'s positions.
pub fn symmetric_epsilon(scg: &SymmetricChoicelessGame, t: &SymmetricGameTiming) -> Result<Q, AgendaError> {
    t.check(scg)?;
    let perms = permutations(scg.n);
    let positions: Vec<Vec<usize>> = (1..=scg.n)
        .map(|s| (0..scg.seq.len()).filter(|&i| scg.seq[i] == s).collect())
        .collect();
    let mut best = Q::zero();
    for p in 0..scg.n {
        // law of the first j own times, per numbering
        let laws: Vec<Vec<Dist>> = perms
            .iter()
            .enumerate()
            .map(|(si, sigma)| {
                let pos = &positions[sigma[p] - 1];
                (1..=pos.len())
                    .map(|j| {
                        Dist::from_pairs(t.atoms.iter().map(|(pr, x)| {
                            (pos[..j].iter().map(|&i| x[si][i].clone()).collect(), pr.clone())
                        }))
                        .expect("normalized")
                    })
                    .collect()
            })
            .collect();
        for a in 0..laws.len() {
            for b in a + 1..laws.len() {
                for (da, db) in laws[a].iter().zip(&laws[b]) {
                    let tv = tv_distance(da, db).expect("equal length");
                    if tv > best {
                        best = tv;
                    }
                }
            }
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Gap growth

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapCase {
    Increasing,
    Decreasing,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapVerdict {
    pub case: GapCase,
    /// 1-based index of the first window breaking the case of window 1 (only for `Neither`).
    pub first_failing_window: Option<usize>,
    /// Growth inequalities for `i = 2..n−1` (1-based), present for the two cases.
    pub growth: Vec<(usize, bool)>,
    pub growth_certified: bool,
}

/// Window `i` (0-based) satisfies condition 1: gaps grow by more than `c − 1`.
pub fn condition1(xs: &[Q], i: usize, c: &Q) -> bool {
    let c1 = c - Q::one();
    xs[i + 2].clone() * c < &c1 * &xs[i] + &xs[i + 3] && xs[i + 1].clone() * c < &c1 * &xs[i] + &xs[i + 2]
}

/// Window `i` (0-based) satisfies condition 2: the mirror image of condition 1.
pub fn condition2(xs: &[Q], i: usize, c: &Q) -> bool {
    let c1 = c - Q::one();
    xs[i + 1].clone() * c > &xs[i] + &c1 * &xs[i + 3] && xs[i + 2].clone() * c > &xs[i + 1] + &c1 * &xs[i + 3]
}

pub fn classify_gaps(xs: &[Q], c: &Q) -> Result<GapVerdict, AgendaError> {
    if xs.len() < 4 || xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AgendaError::BadSequence);
    }
    if *c <= Q::from_integer(2.into()) {
        return Err(AgendaError::BadConstant);
    }
    let n = xs.len();
    let windows = n - 3;
    let all1 = (0..windows).all(|i| condition1(xs, i, c));
    let all2 = (0..windows).all(|i| condition2(xs, i, c));
    let k = c - Q::one() / c - Q::one();
    let (case, growth) = if all1 {
        let g: Vec<_> = (2..n)
            .map(|i| (i, &xs[i] - &xs[i - 1] >= &k * (&xs[i - 1] - &xs[0])))
            .collect();
        (GapCase::Increasing, g)
    } else if all2 {
        let g: Vec<_> = (2..n)
            .map(|i| (i, &xs[i - 1] - &xs[i - 2] >= &k * (&xs[n - 1] - &xs[i - 1])))
            .collect();
        (GapCase::Decreasing, g)
    } else {
        let first = if condition1(xs, 0, c) {
            (0..windows).find(|&i| !condition1(xs, i, c))
        } else if condition2(xs, 0, c) {
            (0..windows).find(|&i| !condition2(xs, i, c))
        } else {
            Some(0)
        };
        return Ok(GapVerdict {
            case: GapCase::Neither,
            first_failing_window: first.map(|i| i + 1),
            growth: Vec::new(),
            growth_certified: false,
        });
    };
    let certified = growth.iter().all(|&(_, ok)| ok);
    Ok(GapVerdict {
        case,
        first_failing_window: None,
        growth,
        growth_certified: certified,
    })
}
