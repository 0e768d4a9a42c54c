//! Imperfect timekeeping: each node gets an actual time `x` and a perceived
//! time `y`, and a player's perceived gaps are sandwiched between `l` and `u`
//! of the actual gaps.

use crate::agenda_lab::AgendaTiming;
use crate::dist::Dist;
use crate::exact_timing::DeterministicTiming;
use crate::families::Agenda;
use crate::game::{Game, NodeIdx};
use crate::randomized_timing::{info_tv, own_path};
use crate::rational::{fmt_q, parse_q, qu, Q};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PerceptionError {
    #[error("bad clock bound {0:?}; expected scale:<q> or powmax:<k>")]
    Syntax(String),
    #[error("{bound} cannot serve as a {role} bound")]
    Role { bound: String, role: &'static str },
    #[error("constant-factor clocks cannot use this construction: u(t)/l(t) stays bounded for l = {l}, u = {u}")]
    BoundedRatio { l: String, u: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("atom probabilities must be positive and sum to 1")]
    Probabilities,
    #[error("document: {0}")]
    Document(String),
}

/// A clock distortion from a small closed family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClockBound {
    /// `f(t) = q·t`
    Scale(Q),
    /// `f(t) = max(t, t^k)`
    PowMax(u32),
}

impl ClockBound {
    pub fn eval(&self, t: &Q) -> Q {
        match self {
            ClockBound::Scale(q) => q * t,
            ClockBound::PowMax(k) => {
                let mut p = Q::one();
                for _ in 0..*k {
                    p *= t;
                }
                if p > *t {
                    p
                } else {
                    t.clone()
                }
            }
        }
    }

    /// `l(t) ≤ t` and weakly increasing on `t ≥ 0`.
    pub fn check_lower(&self) -> Result<(), PerceptionError> {
        let ok = match self {
            ClockBound::Scale(q) => q.is_positive() && *q <= Q::one(),
            ClockBound::PowMax(k) => *k == 1,
        };
        if ok {
            Ok(())
        } else {
            Err(PerceptionError::Role {
                bound: self.to_string(),
                role: "lower",
            })
        }
    }

    /// `u(t) ≥ t` and weakly increasing on `t ≥ 0`.
    pub fn check_upper(&self) -> Result<(), PerceptionError> {
        let ok = match self {
            ClockBound::Scale(q) => *q >= Q::one(),
            ClockBound::PowMax(k) => *k >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(PerceptionError::Role {
                bound: self.to_string(),
                role: "upper",
            })
        }
    }
}

impl fmt::Display for ClockBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClockBound::Scale(q) => write!(f, "scale:{}", fmt_q(q)),
            ClockBound::PowMax(k) => write!(f, "powmax:{k}"),
        }
    }
}

impl FromStr for ClockBound {
    type Err = PerceptionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PerceptionError::Syntax(s.to_string());
        let (kind, arg) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind {
            "scale" => {
                let q = parse_q(arg).map_err(|_| bad())?;
                if !q.is_positive() {
                    return Err(bad());
                }
                Ok(ClockBound::Scale(q))
            }
            "powmax" => match arg.parse::<u32>() {
                Ok(k) if k >= 1 => Ok(ClockBound::PowMax(k)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

/// Mixture of deterministic assignments of `(x, y)` to every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerceivedTiming {
    pub atoms: Vec<(Q, Vec<(Q, Q)>)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerceivedAtomDoc {
    prob: String,
    xy: BTreeMap<u64, [String; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerceivedDoc {
    game: String,
    atoms: Vec<PerceivedAtomDoc>,
}

impl PerceivedTiming {
    pub fn new(g: &Game, atoms: Vec<(Q, Vec<(Q, Q)>)>) -> Result<Self, PerceptionError> {
        let total: Q = atoms.iter().map(|(p, _)| p).sum();
        if atoms.is_empty() || !total.is_one() || atoms.iter().any(|(p, _)| !p.is_positive()) {
            return Err(PerceptionError::Probabilities);
        }
        for (i, (_, xy)) in atoms.iter().enumerate() {
            if xy.len() != g.len() {
                return Err(PerceptionError::Shape(format!(
                    "atom {i} labels {} nodes, the game has {}",
                    xy.len(),
                    g.len()
                )));
            }
            if xy.iter().any(|(x, y)| x.is_negative() || y.is_negative()) {
                return Err(PerceptionError::Shape(format!("atom {i} has a negative label")));
            }
        }
        Ok(PerceivedTiming { atoms })
    }

    pub fn x_timing(&self, atom: usize) -> DeterministicTiming {
        DeterministicTiming::new(self.atoms[atom].1.iter().map(|(x, _)| x.clone()).collect())
    }

    pub fn to_json(&self, g: &Game) -> String {
        let atoms = self
            .atoms
            .iter()
            .map(|(p, xy)| PerceivedAtomDoc {
                prob: fmt_q(p),
                xy: g
                    .nodes()
                    .iter()
                    .zip(xy)
                    .map(|(n, (x, y))| (n.id, [fmt_q(x), fmt_q(y)]))
                    .collect(),
            })
            .collect();
        serde_json::to_string_pretty(&PerceivedDoc {
            game: g.digest(),
            atoms,
        })
        .expect("serializes")
    }

    pub fn from_json(g: &Game, text: &str) -> Result<Self, PerceptionError> {
        let doc: PerceivedDoc =
            serde_json::from_str(text).map_err(|e| PerceptionError::Document(e.to_string()))?;
        if doc.game != g.digest() {
            return Err(PerceptionError::Document("timing was written for a different game".into()));
        }
        let parse = |s: &str| parse_q(s).map_err(|e| PerceptionError::Document(e.to_string()));
        let mut atoms = Vec::with_capacity(doc.atoms.len());
        for a in doc.atoms {
            if a.xy.len() != g.len() {
                return Err(PerceptionError::Shape(format!(
                    "atom labels {} nodes, the game has {}",
                    a.xy.len(),
                    g.len()
                )));
            }
            let mut xy = vec![(Q::zero(), Q::zero()); g.len()];
            for (id, [x, y]) in &a.xy {
                let v = g
                    .index_of(*id)
                    .map_err(|e| PerceptionError::Document(e.to_string()))?;
                xy[v] = (parse(x)?, parse(y)?);
            }
            atoms.push((parse(&a.prob)?, xy));
        }
        PerceivedTiming::new(g, atoms)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LuReport {
    /// Every atom's `x` is a timing and every sandwich inequality holds.
    pub structural: bool,
    /// The first structural problem found, e.g. a violated pair.
    pub problem: Option<String>,
    /// Max TV of perceived timing information over information-set pairs.
    pub achieved: Q,
    pub worst: Option<(NodeIdx, NodeIdx)>,
}

pub fn verify_lu_timing(
    g: &Game,
    pt: &PerceivedTiming,
    l: &ClockBound,
    u: &ClockBound,
) -> Result<LuReport, PerceptionError> {
    PerceivedTiming::new(g, pt.atoms.clone())?;
    let mut problem = None;
    'atoms: for (ai, (_, xy)) in pt.atoms.iter().enumerate() {
        if let Err(e) = pt.x_timing(ai).check(g) {
            problem = Some(format!("atom {ai}: actual times: {e}"));
            break;
        }
        for w in 0..g.len() {
            if g.player_of(w).is_none() {
                continue;
            }
            let path = own_path(g, w).expect("decision node");
            for &v in &path[..path.len() - 1] {
                let dx = &xy[w].0 - &xy[v].0;
                let dy = &xy[w].1 - &xy[v].1;
                let (lo, hi) = (l.eval(&dx), u.eval(&dx));
                if dy < lo || dy > hi {
                    problem = Some(format!(
                        "atom {ai}: nodes {} and {}: perceived gap {} outside [{}, {}]",
                        g.node(v).id,
                        g.node(w).id,
                        fmt_q(&dy),
                        fmt_q(&lo),
                        fmt_q(&hi)
                    ));
                    break 'atoms;
                }
            }
        }
    }

    let mut achieved = Q::zero();
    let mut worst = None;
    for set in g.infosets() {
        if set.members.len() < 2 {
            continue;
        }
        let mut distinct: Vec<(NodeIdx, Dist)> = Vec::new();
        let mut seen = HashSet::new();
        for &v in &set.members {
            let path = own_path(g, v).expect("decision node");
            let d = Dist::from_pairs(
                pt.atoms
                    .iter()
                    .map(|(p, xy)| (path.iter().map(|&w| xy[w].1.clone()).collect(), p.clone())),
            )
            .expect("normalized");
            if seen.insert(d.clone()) {
                distinct.push((v, d));
            }
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
    Ok(LuReport {
        structural: problem.is_none(),
        problem,
        achieved,
        worst,
    })
}

/// The smallest power of two `t₀` with `u(t₀) ≥ M·l(M·t₀)`, for the only
/// unbounded-ratio case of the family: `u = powmax(k ≥ 2)` over a linear `l`.
pub fn find_t0(m: usize, l: &ClockBound, u: &ClockBound) -> Result<Q, PerceptionError> {
    l.check_lower()?;
    u.check_upper()?;
    let slope = match l {
        ClockBound::Scale(q) => q.clone(),
        ClockBound::PowMax(_) => Q::one(),
    };
    let k = match u {
        ClockBound::PowMax(k) if *k >= 2 => *k,
        _ => {
            return Err(PerceptionError::BoundedRatio {
                l: l.to_string(),
                u: u.to_string(),
            })
        }
    };
    // t₀^(k−1) ≥ M²·slope  ⇔  u(t₀) ≥ M·l(M·t₀) for t₀ ≥ 1
    let target = qu(m * m) * slope;
    let mut t0 = Q::one();
    loop {
        let mut p = Q::one();
        for _ in 0..k - 1 {
            p *= &t0;
        }
        if p >= target {
            return Ok(t0);
        }
        t0 *= Q::from_integer(2.into());
    }
}

/// One deterministic atom: `x_v = depth(v)·t₀`, `y_v = j_v·l(M·t₀)` where `v`
/// is its owner's `j_v`-th node on the path; chance nodes and leaves get `y = 0`.
pub fn construct_lu_timing(g: &Game, l: &ClockBound, u: &ClockBound) -> Result<PerceivedTiming, PerceptionError> {
    let m = g.max_history_len();
    let t0 = find_t0(m, l, u)?;
    let unit = l.eval(&(qu(m) * &t0));
    let xy = (0..g.len())
        .map(|v| {
            let x = qu(g.depth(v)) * &t0;
            let y = match g.player_of(v) {
                Some(_) => qu(own_path(g, v).expect("decision node").len()) * &unit,
                None => Q::zero(),
            };
            (x, y)
        })
        .collect();
    PerceivedTiming::new(g, vec![(Q::one(), xy)])
}

/// Probability, under an agenda timing of `perception_game(c)`, that both
/// separator gap ratios `(X₄ − X₂)/(X₄ − X₁)` and `(X₃ − X₁)/(X₄ − X₁)` are at
/// least `2/c²`. This is a measurement only.
pub fn gap_ratio_probability(a: &Agenda, t: &AgendaTiming, c: usize) -> Result<Q, PerceptionError> {
    if a.separators() != 4 {
        return Err(PerceptionError::Shape("the agenda must have exactly 4 separators".into()));
    }
    if c == 0 {
        return Err(PerceptionError::Shape("c must be positive".into()));
    }
    let threshold = Q::new(2.into(), (c * c).into());
    let mut total = Q::zero();
    for (p, x) in &t.atoms {
        let s = &x.sep_times;
        if s.len() != 4 {
            return Err(PerceptionError::Shape("atom needs 4 separator times".into()));
        }
        let span = &s[3] - &s[0];
        if !span.is_positive() {
            return Err(PerceptionError::Shape("separators must span a positive interval".into()));
        }
        if (&s[3] - &s[1]) / &span >= threshold && (&s[2] - &s[0]) / &span >= threshold {
            total += p;
        }
    }
    Ok(total)
}
