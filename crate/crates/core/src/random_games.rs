//! Seeded generators for random games and timings, used by the property suites
//! and benchmarks.

use crate::exact_timing::DeterministicTiming;
use crate::game::{Game, GameBuilder};
use crate::randomized_timing::RandomizedTiming;
use crate::rational::{q, qu, Q};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct GameShape {
    pub players: usize,
    pub max_depth: usize,
    pub max_branch: usize,
    /// Soft cap; once reached, pending nodes become leaves.
    pub max_nodes: usize,
    /// Chance of an internal node being a chance node.
    pub chance: f64,
    /// Chance of a non-root node being a leaf before `max_depth`.
    pub leaf: f64,
    /// When false, any same-player, same-arity nodes may share an infoset.
    pub perfect_recall: bool,
    /// Most decision nodes a player may own along one history.
    pub max_own: Option<usize>,
}

impl Default for GameShape {
    fn default() -> Self {
        GameShape {
            players: 2,
            max_depth: 4,
            max_branch: 3,
            max_nodes: 40,
            chance: 0.25,
            leaf: 0.25,
            perfect_recall: true,
            max_own: None,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Chance,
    Decision(usize),
    Leaf,
}

struct Skel {
    kind: Kind,
    parent: Option<usize>,
    children: Vec<usize>,
}

fn payoff<R: Rng>(rng: &mut R) -> Q {
    let d = rng.gen_range(1..=4i64);
    q(rng.gen_range(0..=d), d)
}

/// Weights in 1..=4, normalized.
fn random_probs<R: Rng>(rng: &mut R, k: usize) -> Vec<Q> {
    let w: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=4)).collect();
    let total: usize = w.iter().sum();
    w.into_iter().map(|x| Q::new(x.into(), total.into())).collect()
}

pub fn random_game<R: Rng>(rng: &mut R, shape: &GameShape) -> Game {
    assert!(shape.players >= 1 && shape.max_branch >= 1);
    let mut skel: Vec<Skel> = Vec::new();
    let mut depth = Vec::new();
    // own decision nodes strictly above each node, per player
    let mut owned: Vec<Vec<usize>> = vec![vec![0; shape.players]];
    let mut queue = std::collections::VecDeque::new();
    skel.push(Skel {
        kind: Kind::Leaf,
        parent: None,
        children: Vec::new(),
    });
    depth.push(0);
    queue.push_back(0);
    while let Some(v) = queue.pop_front() {
        let d = depth[v];
        let stop = d >= shape.max_depth
            || skel.len() + shape.max_branch > shape.max_nodes
            || (d > 0 && rng.gen_bool(shape.leaf));
        if stop {
            continue;
        }
        let allowed: Vec<usize> = (1..=shape.players)
            .filter(|&p| shape.max_own.is_none_or(|m| owned[v][p - 1] < m))
            .collect();
        skel[v].kind = if allowed.is_empty() || rng.gen_bool(shape.chance) {
            Kind::Chance
        } else {
            Kind::Decision(*allowed.choose(rng).unwrap())
        };
        let mut below = owned[v].clone();
        if let Kind::Decision(p) = skel[v].kind {
            below[p - 1] += 1;
        }
        let k = rng.gen_range(1..=shape.max_branch);
        for _ in 0..k {
            let c = skel.len();
            skel.push(Skel {
                kind: Kind::Leaf,
                parent: Some(v),
                children: Vec::new(),
            });
            depth.push(d + 1);
            owned.push(below.clone());
            skel[v].children.push(c);
            queue.push_back(c);
        }
    }

    let infoset = assign_infosets(rng, &skel, shape);

    let mut b = GameBuilder::with_capacity((1..=shape.players).map(|p| format!("P{p}")), skel.len());
    for (v, s) in skel.iter().enumerate() {
        match s.kind {
            Kind::Chance => b.chance(),
            Kind::Decision(p) => b.decision(p, format!("I{}", infoset[v])),
            Kind::Leaf => b.leaf((0..shape.players).map(|_| payoff(rng)).collect()),
        };
    }
    for (v, s) in skel.iter().enumerate() {
        match s.kind {
            Kind::Chance => {
                let probs = random_probs(rng, s.children.len());
                for (i, (&c, p)) in s.children.iter().zip(probs).enumerate() {
                    b.chance_edge(v, c, format!("c{i}"), p);
                }
            }
            Kind::Decision(_) => {
                for (i, &c) in s.children.iter().enumerate() {
                    b.edge(v, c, format!("a{i}"));
                }
            }
            Kind::Leaf => {}
        }
    }
    b.build(0).expect("generated games are well formed")
}

/// Randomly merges decision nodes into information sets. With perfect recall,
/// only nodes sharing player, arity and experience may merge; nodes are handled
/// in rounds by their number of own ancestors, so experiences are known.
fn assign_infosets<R: Rng>(rng: &mut R, skel: &[Skel], shape: &GameShape) -> Vec<usize> {
    let n = skel.len();
    let mut infoset = vec![usize::MAX; n];
    let mut next = 0usize;
    let decisions: Vec<usize> = (0..n).filter(|&v| matches!(skel[v].kind, Kind::Decision(_))).collect();
    let owner = |v: usize| match skel[v].kind {
        Kind::Decision(p) => p,
        _ => unreachable!(),
    };
    // own ancestors of each decision node, root first, with the action taken
    let own: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|v| {
            let Kind::Decision(p) = skel[v].kind else {
                return Vec::new();
            };
            let mut out = Vec::new();
            let mut w = v;
            while let Some(u) = skel[w].parent {
                if skel[u].kind == Kind::Decision(p) {
                    let a = skel[u].children.iter().position(|&c| c == w).unwrap();
                    out.push((u, a));
                }
                w = u;
            }
            out.reverse();
            out
        })
        .collect();

    let mut partition = |members: Vec<usize>, infoset: &mut Vec<usize>, next: &mut usize| {
        let buckets = rng.gen_range(1..=members.len());
        let ids: Vec<usize> = (0..buckets).map(|i| *next + i).collect();
        *next += buckets;
        for v in members {
            infoset[v] = *ids.choose(rng).unwrap();
        }
    };

    if shape.perfect_recall {
        let rounds = decisions.iter().map(|&v| own[v].len()).max().unwrap_or(0);
        for round in 0..=rounds {
            let mut groups: HashMap<(usize, usize, Vec<(usize, usize)>), Vec<usize>> = HashMap::new();
            for &v in decisions.iter().filter(|&&v| own[v].len() == round) {
                let exp = own[v].iter().map(|&(u, a)| (infoset[u], a)).collect();
                groups.entry((owner(v), skel[v].children.len(), exp)).or_default().push(v);
            }
            let mut keys: Vec<_> = groups.keys().cloned().collect();
            keys.sort();
            for k in keys {
                let members = groups.remove(&k).unwrap();
                partition(members, &mut infoset, &mut next);
            }
        }
    } else {
        let mut groups: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for &v in &decisions {
            groups.entry((owner(v), skel[v].children.len())).or_default().push(v);
        }
        let mut keys: Vec<_> = groups.keys().cloned().collect();
        keys.sort();
        for k in keys {
            let members = groups.remove(&k).unwrap();
            partition(members, &mut infoset, &mut next);
        }
    }
    infoset
}

/// One random deterministic timing: the root at 0, 1/2, 1 or 3/2, and each
/// child 1, 3/2, …, 3 after its parent.
pub fn random_deterministic_timing<R: Rng>(rng: &mut R, g: &Game) -> DeterministicTiming {
    let mut times = vec![Q::default(); g.len()];
    for &v in g.preorder() {
        let jitter = q(rng.gen_range(0..=4), 2);
        times[v] = match g.parent(v) {
            None => jitter,
            Some(p) => &times[p] + Q::from_integer(1.into()) + jitter,
        };
    }
    DeterministicTiming::new(times)
}

/// A mixture of 1 to `max_atoms` random deterministic timings.
pub fn random_timing<R: Rng>(rng: &mut R, g: &Game, max_atoms: usize) -> RandomizedTiming {
    let k = rng.gen_range(1..=max_atoms.max(1));
    let probs = random_probs(rng, k);
    let atoms = probs
        .into_iter()
        .map(|p| (p, random_deterministic_timing(rng, g)))
        .collect();
    RandomizedTiming::new(g, atoms).expect("valid by construction")
}

/// A uniform mixture over `k` timings that share one random shape of integer
/// offsets, so that many nodes carry equal times across atoms.
pub fn random_integer_timing<R: Rng>(rng: &mut R, g: &Game, k: usize) -> RandomizedTiming {
    let atoms = (0..k.max(1))
        .map(|_| {
            let mut times = vec![Q::default(); g.len()];
            for &v in g.preorder() {
                times[v] = match g.parent(v) {
                    None => qu(rng.gen_range(0..=1)),
                    Some(p) => &times[p] + qu(rng.gen_range(1..=2)),
                };
            }
            (Q::new(1.into(), k.max(1).into()), DeterministicTiming::new(times))
        })
        .collect();
    RandomizedTiming::new(g, atoms).expect("valid by construction")
}
