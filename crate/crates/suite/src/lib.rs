//! Independent reference computations for the acceptance and property suites.
//! Nothing here calls the library's own algorithms beyond reading game structure.

use num_traits::{One, Zero};
use std::collections::HashMap;
use timeability::game::{Game, NodeIdx, NodeKind};
use timeability::rational::Q;
use timeability::timed_game::BehaviorProfile;

/// TV distance as half the L1 distance of two lists of weighted outcomes.
pub fn tv(a: &[(Vec<Q>, Q)], b: &[(Vec<Q>, Q)]) -> Q {
    let mut diff: HashMap<&Vec<Q>, Q> = HashMap::new();
    for (x, p) in a {
        *diff.entry(x).or_insert_with(Q::zero) += p;
    }
    for (x, p) in b {
        *diff.entry(x).or_insert_with(Q::zero) -= p;
    }
    let total: Q = diff.values().map(|d| if *d < Q::zero() { -d } else { d.clone() }).sum();
    total / Q::from_integer(2.into())
}

/// The owner's nodes on the root path to `v`, by walking parents.
pub fn own_nodes(g: &Game, v: NodeIdx) -> Vec<NodeIdx> {
    let owner = g.player_of(v).expect("decision node");
    let mut out = vec![v];
    let mut w = v;
    while let Some(p) = g.parent(w) {
        if g.player_of(p) == Some(owner) {
            out.push(p);
        }
        w = p;
    }
    out.reverse();
    out
}

/// Max TV between timing-information laws over information-set pairs, for a
/// timing given as weighted per-node time vectors.
pub fn achieved_epsilon(g: &Game, atoms: &[(Q, Vec<Q>)]) -> Q {
    let mut best = Q::zero();
    for set in g.infosets() {
        for (i, &a) in set.members.iter().enumerate() {
            for &b in &set.members[i + 1..] {
                let (pa, pb) = (own_nodes(g, a), own_nodes(g, b));
                let d = if pa.len() != pb.len() {
                    Q::one()
                } else {
                    let la: Vec<_> = atoms
                        .iter()
                        .map(|(p, t)| (pa.iter().map(|&w| t[w].clone()).collect(), p.clone()))
                        .collect();
                    let lb: Vec<_> = atoms
                        .iter()
                        .map(|(p, t)| (pb.iter().map(|&w| t[w].clone()).collect(), p.clone()))
                        .collect();
                    tv(&la, &lb)
                };
                if d > best {
                    best = d;
                }
            }
        }
    }
    best
}

/// Whether `t` is an exact deterministic timing: +1 along edges, equal times
/// within information sets, root nonnegative.
pub fn is_exact(g: &Game, t: &[Q]) -> bool {
    if t[g.root()] < Q::zero() {
        return false;
    }
    for v in 0..g.len() {
        for c in &g.node(v).children {
            if t[c.node] < &t[v] + Q::one() {
                return false;
            }
        }
    }
    g.infosets()
        .iter()
        .all(|s| s.members.iter().all(|&m| t[m] == t[s.members[0]]))
}

/// Least fixpoint of `t[child] ≥ t[parent] + 1` and equality within
/// information sets, by repeated relaxation over nodes. Any solution is
/// bounded by the node count, so exceeding it proves infeasibility.
pub fn relaxation_timing(g: &Game) -> Option<Vec<i64>> {
    let n = g.len();
    let mut t = vec![0i64; n];
    loop {
        let mut changed = false;
        for v in 0..n {
            for c in &g.node(v).children {
                if t[c.node] < t[v] + 1 {
                    t[c.node] = t[v] + 1;
                    changed = true;
                }
            }
        }
        for s in g.infosets() {
            let m = s.members.iter().map(|&v| t[v]).max().unwrap();
            for &v in &s.members {
                if t[v] != m {
                    t[v] = m;
                    changed = true;
                }
            }
        }
        if t.iter().any(|&x| x > n as i64) {
            return None;
        }
        if !changed {
            return Some(t);
        }
    }
}

/// Exhaustive search for integer times in `0..=bound` on the non-leaf nodes,
/// one value per information set; leaves then sit one after their parent.
/// Groups are tried shallowest first. Only for tiny games.
pub fn exhaustive_timing_exists(g: &Game, bound: i64) -> bool {
    // groups: information sets, plus each chance node alone
    let mut group_of = vec![usize::MAX; g.len()];
    let mut first_depth = Vec::new();
    for s in g.infosets() {
        for &v in &s.members {
            group_of[v] = first_depth.len();
        }
        first_depth.push(s.members.iter().map(|&v| g.depth(v)).min().unwrap());
    }
    for v in 0..g.len() {
        if matches!(g.node(v).kind, NodeKind::Chance) {
            group_of[v] = first_depth.len();
            first_depth.push(g.depth(v));
        }
    }
    let mut order: Vec<usize> = (0..first_depth.len()).collect();
    order.sort_by_key(|&i| first_depth[i]);
    let mut rank = vec![0; order.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let mut edges = Vec::new();
    for v in 0..g.len() {
        for c in &g.node(v).children {
            if group_of[c.node] != usize::MAX {
                edges.push((rank[group_of[v]], rank[group_of[c.node]]));
            }
        }
    }
    fn go(i: usize, vals: &mut Vec<i64>, edges: &[(usize, usize)], bound: i64) -> bool {
        if i == vals.len() {
            return true;
        }
        for x in 0..=bound {
            vals[i] = x;
            // every edge whose endpoints are both assigned must hold
            if edges
                .iter()
                .all(|&(a, b)| a > i || b > i || vals[b] > vals[a])
                && go(i + 1, vals, edges, bound)
            {
                return true;
            }
        }
        false
    }
    let mut vals = vec![0i64; order.len()];
    go(0, &mut vals, &edges, bound)
}

/// Expected payoff of player `p` when she plays the pure strategy `choice`
/// (action index per information set) and others follow `others`.
pub fn pure_value(g: &Game, p: usize, choice: &HashMap<usize, usize>, others: &BehaviorProfile) -> Q {
    let mut total = Q::zero();
    let mut stack = vec![(g.root(), Q::one())];
    while let Some((v, w)) = stack.pop() {
        let node = g.node(v);
        match &node.kind {
            NodeKind::Leaf { payoffs } => total += &w * &payoffs[p - 1],
            NodeKind::Chance => {
                for c in &node.children {
                    stack.push((c.node, &w * c.prob.as_ref().unwrap()));
                }
            }
            NodeKind::Decision { player, infoset } => {
                if *player == p {
                    let a = choice[infoset];
                    stack.push((node.children[a].node, w));
                } else {
                    let probs = others.get(&g.infoset(*infoset).name).expect("profile covers");
                    for (c, q) in node.children.iter().zip(probs) {
                        if !q.is_zero() {
                            stack.push((c.node, &w * q));
                        }
                    }
                }
            }
        }
    }
    total
}

/// Best pure-strategy value by enumeration; `None` when there are more than
/// `limit` pure strategies.
pub fn brute_best_response(g: &Game, p: usize, others: &BehaviorProfile, limit: u64) -> Option<Q> {
    let sets: Vec<(usize, usize)> = g
        .infosets()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.player == p)
        .map(|(i, s)| (i, s.actions.len()))
        .collect();
    let count = sets.iter().try_fold(1u64, |acc, &(_, k)| acc.checked_mul(k as u64))?;
    if count > limit {
        return None;
    }
    let mut best: Option<Q> = None;
    let mut digits = vec![0usize; sets.len()];
    loop {
        let choice: HashMap<usize, usize> = sets.iter().zip(&digits).map(|(&(i, _), &d)| (i, d)).collect();
        let v = pure_value(g, p, &choice, others);
        if best.as_ref().is_none_or(|b| v > *b) {
            best = Some(v);
        }
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                return best;
            }
            digits[pos] += 1;
            if digits[pos] < sets[pos].1 {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}
