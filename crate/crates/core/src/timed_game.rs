//! The timing-augmented game, exact single-player best responses, and the
//! bound on what timing information is worth.
//!
//! Under a randomized timing the players effectively play a larger game: chance
//! first draws the timing, and a player's information set is refined by the
//! times she has observed. [`augment`] builds that game explicitly; comparing
//! best-response values in both games measures the advantage timing leaks.

use crate::dist::DEFAULT_BUDGET;
use crate::exact_timing::DeterministicTiming;
use crate::game::{Game, GameBuilder, GameError, NodeIdx, NodeKind, Player};
use crate::randomized_timing::{own_path, verify_epsilon_timing_with_budget, RandomizedError, RandomizedTiming};
use crate::rational::{fmt_q, in_unit_interval, parse_q, qi, qu, Q};
use num_traits::{One, Pow, Signed, Zero};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimedError {
    #[error("player {0} does not have perfect recall")]
    RecallViolation(Player),
    #[error("player {0} does not exist")]
    UnknownPlayer(Player),
    #[error("profile has no strategy for infoset {0:?}")]
    IncompleteProfile(String),
    #[error("strategy for infoset {0:?} is not a probability vector over its actions")]
    BadStrategy(String),
    #[error("payoff outside [0, 1] at node {0}; the advantage bound needs unit payoffs")]
    PayoffRange(u64),
    #[error("{atoms} atoms × {nodes} nodes exceeds the budget of {budget}")]
    BudgetExceeded {
        atoms: usize,
        nodes: usize,
        budget: usize,
    },
    #[error("invalid parameters: {0}")]
    Parameter(String),
    #[error("profile document: {0}")]
    Document(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Timing(#[from] RandomizedError),
}

/// Behaviour strategies keyed by information-set name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BehaviorProfile {
    pub strategies: BTreeMap<String, Vec<Q>>,
}

impl BehaviorProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, infoset: impl Into<String>, probs: Vec<Q>) {
        self.strategies.insert(infoset.into(), probs);
    }

    pub fn get(&self, infoset: &str) -> Option<&[Q]> {
        self.strategies.get(infoset).map(Vec::as_slice)
    }

    /// Uniform play at every information set of every player except `p`.
    pub fn uniform_except(g: &Game, p: Player) -> Self {
        let mut prof = Self::new();
        for set in g.infosets().iter().filter(|s| s.player != p) {
            let k = set.actions.len();
            prof.set(set.name.clone(), vec![Q::one() / qu(k); k]);
        }
        prof
    }

    pub fn to_json(&self) -> String {
        let doc: BTreeMap<&String, Vec<String>> = self
            .strategies
            .iter()
            .map(|(k, v)| (k, v.iter().map(fmt_q).collect()))
            .collect();
        serde_json::to_string_pretty(&doc).expect("serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TimedError> {
        let doc: BTreeMap<String, Vec<String>> =
            serde_json::from_str(text).map_err(|e| TimedError::Document(e.to_string()))?;
        let mut strategies = BTreeMap::new();
        for (k, v) in doc {
            let probs = v
                .iter()
                .map(|s| parse_q(s).map_err(|e| TimedError::Document(e.to_string())))
                .collect::<Result<_, _>>()?;
            strategies.insert(k, probs);
        }
        Ok(BehaviorProfile { strategies })
    }
}

/// `Γ′` together with where each of its nodes and information sets came from.
#[derive(Debug, Clone)]
pub struct AugmentedGame {
    pub game: Game,
    /// For each node of `game`: the original node and atom index (`None` for the new root).
    pub origin: Vec<Option<(NodeIdx, usize)>>,
    /// For each information set of `game`: original information set and observed times.
    pub infoset_origin: Vec<(usize, Vec<Q>)>,
}

fn fmt_tuple(ts: &[Q]) -> String {
    let parts: Vec<String> = ts
        .iter()
        .map(|t| {
            if t.denom().is_one() {
                t.numer().to_string()
            } else {
                fmt_q(t)
            }
        })
        .collect();
    format!("({})", parts.join(","))
}

/// Chance first draws an atom, then the game is played in a copy whose
/// information sets are refined by the owner's observed times, named
/// `"origName@(t1,…,tj)"`.
pub fn augment(g: &Game, rt: &RandomizedTiming, budget: usize) -> Result<AugmentedGame, TimedError> {
    if rt.len().saturating_mul(g.len()) > budget {
        return Err(TimedError::BudgetExceeded {
            atoms: rt.len(),
            nodes: g.len(),
            budget,
        });
    }
    let paths: Vec<Option<Vec<NodeIdx>>> = (0..g.len()).map(|v| own_path(g, v).ok()).collect();
    let mut b = GameBuilder::with_capacity(g.players().to_vec(), 1 + rt.len() * g.len());
    let root = b.chance();
    let mut origin = vec![None];
    let mut name_index: HashMap<String, usize> = HashMap::new();
    let mut names: Vec<(usize, Vec<Q>)> = Vec::new();
    for (a, (p, t)) in rt.atoms().iter().enumerate() {
        let offset = b.len();
        for (v, node) in g.nodes().iter().enumerate() {
            match &node.kind {
                NodeKind::Chance => {
                    b.chance();
                }
                NodeKind::Leaf { payoffs } => {
                    b.leaf(payoffs.clone());
                }
                NodeKind::Decision { player, infoset } => {
                    let seen = tuple(t, paths[v].as_ref().expect("decision node"));
                    let name = format!("{}@{}", g.infoset(*infoset).name, fmt_tuple(&seen));
                    if !name_index.contains_key(&name) {
                        name_index.insert(name.clone(), names.len());
                        names.push((*infoset, seen));
                    }
                    b.decision(*player, name);
                }
            }
            origin.push(Some((v, a)));
        }
        for (v, node) in g.nodes().iter().enumerate() {
            for c in &node.children {
                match &c.prob {
                    Some(q) => b.chance_edge(offset + v, offset + c.node, c.action.clone(), q.clone()),
                    None => b.edge(offset + v, offset + c.node, c.action.clone()),
                }
            }
        }
        b.chance_edge(root, offset + g.root(), format!("atom{a}"), p.clone());
    }
    let game = b.build(root)?;
    let infoset_origin = game
        .infosets()
        .iter()
        .map(|s| names[name_index[&s.name]].clone())
        .collect();
    Ok(AugmentedGame {
        game,
        origin,
        infoset_origin,
    })
}

fn tuple(t: &DeterministicTiming, nodes: &[NodeIdx]) -> Vec<Q> {
    nodes.iter().map(|&w| t.times[w].clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BestResponse {
    pub value: Q,
    /// Chosen action index per information set of the responding player.
    pub choice: BTreeMap<String, usize>,
}

fn check_strategy(name: &str, probs: &[Q], arity: usize) -> Result<(), TimedError> {
    let sum: Q = probs.iter().sum();
    if probs.len() != arity || !sum.is_one() || probs.iter().any(Signed::is_negative) {
        return Err(TimedError::BadStrategy(name.to_string()));
    }
    Ok(())
}

/// Exact best-response value of `p` against the fixed behaviour of everyone else.
pub fn best_response_value(g: &Game, p: Player, others: &BehaviorProfile) -> Result<Q, TimedError> {
    Ok(best_response(g, p, |k| others.get(&g.infoset(k).name))?.value)
}

/// Backward induction over `p`'s information sets in order of decreasing
/// experience length. `strategy(k)` gives the behaviour at every other
/// player's information set `k`.
pub fn best_response<'a>(
    g: &Game,
    p: Player,
    strategy: impl Fn(usize) -> Option<&'a [Q]>,
) -> Result<BestResponse, TimedError> {
    if p == 0 || p > g.num_players() {
        return Err(TimedError::UnknownPlayer(p));
    }
    if !g.has_recall(p) {
        return Err(TimedError::RecallViolation(p));
    }
    let mut behaviour: Vec<Option<&[Q]>> = vec![None; g.infosets().len()];
    for (k, set) in g.infosets().iter().enumerate() {
        if set.player != p {
            let probs = strategy(k).ok_or_else(|| TimedError::IncompleteProfile(set.name.clone()))?;
            check_strategy(&set.name, probs, set.actions.len())?;
            behaviour[k] = Some(probs);
        }
    }

    // reach probability through chance and the other players
    let mut reach = vec![Q::zero(); g.len()];
    let mut own_depth = vec![0usize; g.len()];
    reach[g.root()] = Q::one();
    for &v in g.preorder() {
        let node = g.node(v);
        for (a, c) in node.children.iter().enumerate() {
            reach[c.node] = match (&node.kind, &c.prob) {
                (_, Some(q)) => &reach[v] * q,
                (NodeKind::Decision { infoset, .. }, None) => match behaviour[*infoset] {
                    Some(probs) => &reach[v] * &probs[a],
                    None => reach[v].clone(),
                },
                _ => reach[v].clone(),
            };
            own_depth[c.node] = own_depth[v] + usize::from(g.player_of(v) == Some(p));
        }
    }

    let mut own_sets: Vec<usize> = (0..g.infosets().len())
        .filter(|&k| g.infoset(k).player == p)
        .collect();
    own_sets.sort_by_key(|&k| std::cmp::Reverse(own_depth[g.infoset(k).members[0]]));

    let mut chosen: Vec<Option<usize>> = vec![None; g.infosets().len()];
    let mut val: Vec<Option<Q>> = vec![None; g.len()];
    for &k in &own_sets {
        let set = g.infoset(k);
        let mut best: Option<(usize, Q)> = None;
        for a in 0..set.actions.len() {
            let mut total = Q::zero();
            for &v in &set.members {
                total += subtree_value(g, p, g.node(v).children[a].node, &reach, &chosen, &mut val);
            }
            if best.as_ref().is_none_or(|(_, b)| total > *b) {
                best = Some((a, total));
            }
        }
        chosen[k] = Some(best.expect("infosets have actions").0);
    }
    let value = subtree_value(g, p, g.root(), &reach, &chosen, &mut val);
    let choice = own_sets
        .iter()
        .map(|&k| (g.infoset(k).name.clone(), chosen[k].expect("decided")))
        .collect();
    Ok(BestResponse { value, choice })
}

/// Σ reach(z)·u_p(z) over leaves below `top` reachable under `chosen`, memoized.
fn subtree_value(
    g: &Game,
    p: Player,
    top: NodeIdx,
    reach: &[Q],
    chosen: &[Option<usize>],
    val: &mut [Option<Q>],
) -> Q {
    if let Some(x) = &val[top] {
        return x.clone();
    }
    let mut stack = vec![(top, false)];
    while let Some((v, expanded)) = stack.pop() {
        if val[v].is_some() {
            continue;
        }
        let node = g.node(v);
        let own = match node.kind {
            NodeKind::Decision { player, infoset } if player == p => {
                Some(chosen[infoset].expect("deeper sets are decided first"))
            }
            _ => None,
        };
        if let NodeKind::Leaf { payoffs } = &node.kind {
            val[v] = Some(&reach[v] * &payoffs[p - 1]);
            continue;
        }
        if !expanded {
            stack.push((v, true));
            match own {
                Some(a) => stack.push((node.children[a].node, false)),
                None => stack.extend(node.children.iter().map(|c| (c.node, false))),
            }
            continue;
        }
        let x = match own {
            Some(a) => val[node.children[a].node].clone().expect("computed"),
            None => node
                .children
                .iter()
                .map(|c| val[c.node].as_ref().expect("computed"))
                .sum(),
        };
        val[v] = Some(x);
    }
    val[top].clone().expect("computed")
}

/// Best response of `p` in the augmented game, other players keeping their
/// original behaviour whatever times they observe.
pub fn augmented_best_response(
    aug: &AugmentedGame,
    g: &Game,
    p: Player,
    others: &BehaviorProfile,
) -> Result<Q, TimedError> {
    Ok(best_response(&aug.game, p, |k| {
        let (orig, _) = &aug.infoset_origin[k];
        others.get(&g.infoset(*orig).name)
    })?
    .value)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdvantageReport {
    pub plain: Q,
    pub augmented: Q,
    pub gain: Q,
    /// `m_p`: most of `p`'s nodes on any history.
    pub m: usize,
    pub achieved: Q,
    pub bound: Q,
    pub holds: bool,
}

/// What `p` gains from timing information, against `m_p · ε`.
pub fn timing_advantage(
    g: &Game,
    rt: &RandomizedTiming,
    p: Player,
    others: &BehaviorProfile,
    budget: usize,
) -> Result<AdvantageReport, TimedError> {
    for (v, node) in g.nodes().iter().enumerate() {
        if let Some(ps) = g.payoffs(v) {
            if !ps.iter().all(in_unit_interval) {
                return Err(TimedError::PayoffRange(node.id));
            }
        }
    }
    let plain = best_response_value(g, p, others)?;
    let aug = augment(g, rt, budget)?;
    let augmented = augmented_best_response(&aug, g, p, others)?;
    let achieved = verify_epsilon_timing_with_budget(g, rt, budget)?.achieved;
    let m = g.validate().max_nodes_per_history[p - 1];
    let bound = qu(m) * &achieved;
    let gain = &augmented - &plain;
    Ok(AdvantageReport {
        holds: gain <= bound,
        plain,
        augmented,
        gain,
        m,
        achieved,
        bound,
    })
}

pub fn timing_advantage_default(
    g: &Game,
    rt: &RandomizedTiming,
    p: Player,
    others: &BehaviorProfile,
) -> Result<AdvantageReport, TimedError> {
    timing_advantage(g, rt, p, others, DEFAULT_BUDGET)
}

// ---------------------------------------------------------------------------
// Guessing game

/// `m` rounds: chance draws uniformly from `[k]`, then the player guesses
/// (`guess1..guessk`, payoff 1 iff correct, game over) or passes and sees the
/// draw. The last round has no pass. A round's information set is named by the
/// draws revealed so far, e.g. `"round2[1]"`.
pub fn guessing_game(m: usize, k: usize) -> Result<Game, TimedError> {
    if m < 1 || k < 2 {
        return Err(TimedError::Parameter(format!(
            "need m >= 1 and k >= 2, got m = {m}, k = {k}"
        )));
    }
    let mut b = GameBuilder::new(["Player"]);
    let p = Q::one() / qu(k);
    let root = b.chance();
    // (chance node, round, revealed draws)
    let mut stack = vec![(root, 1usize, Vec::<usize>::new())];
    while let Some((c, round, revealed)) = stack.pop() {
        let name = format!(
            "round{round}[{}]",
            revealed.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        );
        for draw in 1..=k {
            let d = b.decision(1, name.clone());
            b.chance_edge(c, d, format!("draw{draw}"), p.clone());
            for guess in 1..=k {
                let l = b.leaf(vec![qi(i64::from(guess == draw))]);
                b.edge(d, l, format!("guess{guess}"));
            }
            if round < m {
                let next = b.chance();
                b.edge(d, next, "pass");
                let mut seen = revealed.clone();
                seen.push(draw);
                stack.push((next, round + 1, seen));
            }
        }
    }
    Ok(b.build(root)?)
}

/// Consecutive nodes one time unit apart, except that with probability `ε₀`,
/// independently per round, the player's node of that round is delayed by the
/// round's draw. Each path meets one player node per round, so flags per round
/// give every node the independent delay law along its history.
pub fn delay_timing(g: &Game, eps0: &Q) -> Result<RandomizedTiming, TimedError> {
    if !eps0.is_positive() || *eps0 >= Q::one() {
        return Err(TimedError::Parameter(format!(
            "need 0 < eps0 < 1, got {}",
            fmt_q(eps0)
        )));
    }
    let rounds = (0..g.len())
        .map(|v| g.player_of(v).map_or(0, |_| g.depth(v).div_ceil(2)))
        .max()
        .unwrap_or(0);
    if rounds > 20 {
        return Err(TimedError::Parameter(format!("{rounds} rounds is too many")));
    }
    let mut atoms = Vec::with_capacity(1 << rounds);
    for mask in 0u32..(1 << rounds) {
        let delayed = mask.count_ones() as usize;
        let prob = Pow::pow(eps0, delayed) * Pow::pow(Q::one() - eps0, rounds - delayed);
        let mut times = vec![Q::zero(); g.len()];
        for &v in g.preorder() {
            let Some(parent) = g.parent(v) else { continue };
            let mut t = &times[parent] + Q::one();
            if g.player_of(v).is_some() {
                let round = g.depth(v).div_ceil(2);
                if mask & (1 << (round - 1)) != 0 {
                    let draw = g.action_index(v).expect("child") + 1;
                    t += qu(draw);
                }
            }
            times[v] = t;
        }
        atoms.push((prob, DeterministicTiming::new(times)));
    }
    Ok(RandomizedTiming::new(g, atoms)?)
}
