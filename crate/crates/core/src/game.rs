//! Finite extensive-form games: data model, exchange document, validation.
//!
//! A [`Game`] is always a structurally sound tree: construction goes through the
//! same checker that [`validate_document`] exposes, and refuses to build when any
//! [`Issue`] is found. Perfect recall and the payoff range are *reported*, not
//! enforced, since several operations are meaningful without them.
//!
//! Nodes are addressed internally by [`NodeIdx`] (position in [`Game::nodes`]);
//! documents use arbitrary non-negative integer ids.

use crate::rational::{fmt_q, in_unit_interval, parse_q, Q};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use thiserror::Error;

pub type NodeIdx = usize;

/// Player numbers are 1-based, as in documents.
pub type Player = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Chance,
    Decision { player: Player, infoset: usize },
    Leaf { payoffs: Vec<Q> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Child {
    pub node: NodeIdx,
    pub action: String,
    /// Present exactly on chance edges.
    pub prob: Option<Q>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: u64,
    pub kind: NodeKind,
    pub children: Vec<Child>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfoSet {
    pub name: String,
    pub player: Player,
    pub actions: Vec<String>,
    pub members: Vec<NodeIdx>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    players: Vec<String>,
    nodes: Vec<Node>,
    root: NodeIdx,
    infosets: Vec<InfoSet>,
    parent: Vec<Option<NodeIdx>>,
    depth: Vec<usize>,
    preorder: Vec<NodeIdx>,
    by_id: HashMap<u64, NodeIdx>,
}

/// The recall structure of one player along a root path: her own earlier
/// decisions as `(infoset index, action index)` pairs, root first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Experience(pub Vec<(usize, usize)>);

impl Experience {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid game: {}", join_issues(.0))]
    Invalid(Vec<Issue>),
    #[error("unknown node {0}")]
    UnknownNode(u64),
    #[error("unknown node index {0}")]
    UnknownIndex(NodeIdx),
    #[error("player {0} does not exist")]
    UnknownPlayer(Player),
}

fn join_issues(issues: &[Issue]) -> String {
    issues
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// One violated structural invariant, located by node id or infoset name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Issue {
    DuplicateId { node: u64 },
    UnknownRoot { root: u64 },
    UnknownChild { node: u64, child: u64 },
    MultipleParents { node: u64 },
    RootHasParent { root: u64 },
    Unreachable { node: u64 },
    NoChildren { node: u64 },
    LeafWithChildren { node: u64 },
    MissingPlayer { node: u64 },
    PlayerOutOfRange { node: u64, player: Player },
    UnexpectedField { node: u64, field: &'static str },
    BadRational { node: u64, text: String },
    MissingProbability { node: u64, child: u64 },
    NonPositiveProbability { node: u64, child: u64 },
    ProbabilitySum { node: u64, sum: Q },
    MissingPayoffs { node: u64 },
    PayoffArity { node: u64, expected: usize, found: usize },
    InfosetPlayerMismatch { infoset: String },
    InfosetActionMismatch { infoset: String },
}

impl Issue {
    /// Whether the issue breaks the tree or per-node field invariants (as
    /// opposed to information-set consistency).
    pub fn is_tree_issue(&self) -> bool {
        !matches!(
            self,
            Issue::InfosetPlayerMismatch { .. } | Issue::InfosetActionMismatch { .. }
        )
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::DuplicateId { node } => write!(f, "node id {node} is used twice"),
            Issue::UnknownRoot { root } => write!(f, "root {root} is not a node"),
            Issue::UnknownChild { node, child } => {
                write!(f, "node {node}: child {child} is not a node")
            }
            Issue::MultipleParents { node } => write!(f, "node {node} has more than one parent"),
            Issue::RootHasParent { root } => write!(f, "root {root} has a parent"),
            Issue::Unreachable { node } => write!(f, "node {node} is not reachable from the root"),
            Issue::NoChildren { node } => write!(f, "node {node}: non-leaf without children"),
            Issue::LeafWithChildren { node } => write!(f, "leaf {node} has children"),
            Issue::MissingPlayer { node } => write!(f, "decision node {node} has no player"),
            Issue::PlayerOutOfRange { node, player } => {
                write!(f, "node {node}: player {player} out of range")
            }
            Issue::UnexpectedField { node, field } => {
                write!(f, "node {node}: field `{field}` not allowed for this kind")
            }
            Issue::BadRational { node, text } => {
                write!(f, "node {node}: invalid rational {text:?}")
            }
            Issue::MissingProbability { node, child } => {
                write!(f, "chance node {node}: edge to {child} has no probability")
            }
            Issue::NonPositiveProbability { node, child } => {
                write!(f, "chance node {node}: edge to {child} has non-positive probability")
            }
            Issue::ProbabilitySum { node, sum } => {
                write!(f, "chance node {node}: probabilities sum to {}", fmt_q(sum))
            }
            Issue::MissingPayoffs { node } => write!(f, "leaf {node} has no payoffs"),
            Issue::PayoffArity {
                node,
                expected,
                found,
            } => write!(f, "leaf {node}: {found} payoffs for {expected} players"),
            Issue::InfosetPlayerMismatch { infoset } => {
                write!(f, "infoset {infoset:?} spans several players")
            }
            Issue::InfosetActionMismatch { infoset } => {
                write!(f, "infoset {infoset:?} has members with different actions")
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Exchange document

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindDoc {
    Chance,
    Decision,
    Leaf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChildDoc {
    pub node: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: u64,
    pub kind: KindDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub player: Option<Player>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infoset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub children: Option<Vec<ChildDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoffs: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDoc {
    pub players: Vec<String>,
    pub nodes: Vec<NodeDoc>,
    pub root: u64,
}

impl GameDoc {
    pub fn from_json(text: &str) -> Result<GameDoc, GameError> {
        serde_json::from_str(text).map_err(|e| GameError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game documents always serialize")
    }
}

// ---------------------------------------------------------------------------
// Raw form: parsed numbers, unchecked structure

#[derive(Debug, Clone)]
pub struct RawChild {
    pub node: u64,
    pub action: Option<String>,
    pub prob: Option<Q>,
}

#[derive(Debug, Clone)]
pub struct RawNode {
    pub id: u64,
    pub kind: KindDoc,
    pub player: Option<Player>,
    pub infoset: Option<String>,
    pub children: Vec<RawChild>,
    pub payoffs: Option<Vec<Q>>,
}

#[derive(Debug, Clone)]
pub struct RawGame {
    pub players: Vec<String>,
    pub nodes: Vec<RawNode>,
    pub root: u64,
}

impl RawGame {
    fn from_doc(doc: &GameDoc, issues: &mut Vec<Issue>) -> RawGame {
        let mut parse = |node: u64, text: &str| match parse_q(text) {
            Ok(v) => Some(v),
            Err(_) => {
                issues.push(Issue::BadRational {
                    node,
                    text: text.to_string(),
                });
                None
            }
        };
        let nodes = doc
            .nodes
            .iter()
            .map(|n| {
                let children = n
                    .children
                    .iter()
                    .flatten()
                    .map(|c| RawChild {
                        node: c.node,
                        action: c.action.clone(),
                        prob: c.prob.as_deref().and_then(|p| parse(n.id, p)),
                    })
                    .collect();
                let payoffs = n
                    .payoffs
                    .as_ref()
                    .map(|ps| ps.iter().filter_map(|p| parse(n.id, p)).collect());
                RawNode {
                    id: n.id,
                    kind: n.kind,
                    player: n.player,
                    infoset: n.infoset.clone(),
                    children,
                    payoffs,
                }
            })
            .collect();
        RawGame {
            players: doc.players.clone(),
            nodes,
            root: doc.root,
        }
    }
}

/// Checks every structural invariant and builds the game when none fails.
fn check_and_build(raw: RawGame, mut issues: Vec<Issue>) -> (Vec<Issue>, Option<Game>) {
    let n_players = raw.players.len();
    let mut by_id: HashMap<u64, NodeIdx> = HashMap::with_capacity(raw.nodes.len());
    for (idx, node) in raw.nodes.iter().enumerate() {
        if by_id.insert(node.id, idx).is_some() {
            issues.push(Issue::DuplicateId { node: node.id });
        }
    }

    // Per-node field rules.
    for node in &raw.nodes {
        let id = node.id;
        match node.kind {
            KindDoc::Chance => {
                if node.player.is_some() {
                    issues.push(Issue::UnexpectedField { node: id, field: "player" });
                }
                if node.infoset.is_some() {
                    issues.push(Issue::UnexpectedField { node: id, field: "infoset" });
                }
                if node.payoffs.is_some() {
                    issues.push(Issue::UnexpectedField { node: id, field: "payoffs" });
                }
                if node.children.is_empty() {
                    issues.push(Issue::NoChildren { node: id });
                }
                let mut sum = Q::zero();
                let mut complete = true;
                for c in &node.children {
                    match &c.prob {
                        None => {
                            complete = false;
                            issues.push(Issue::MissingProbability { node: id, child: c.node });
                        }
                        Some(p) => {
                            if !p.is_positive() {
                                issues.push(Issue::NonPositiveProbability {
                                    node: id,
                                    child: c.node,
                                });
                            }
                            sum += p;
                        }
                    }
                }
                if complete && !node.children.is_empty() && !sum.is_one() {
                    issues.push(Issue::ProbabilitySum { node: id, sum });
                }
            }
            KindDoc::Decision => {
                match node.player {
                    None => issues.push(Issue::MissingPlayer { node: id }),
                    Some(p) if p == 0 || p > n_players => {
                        issues.push(Issue::PlayerOutOfRange { node: id, player: p })
                    }
                    Some(_) => {}
                }
                if node.payoffs.is_some() {
                    issues.push(Issue::UnexpectedField { node: id, field: "payoffs" });
                }
                if node.children.is_empty() {
                    issues.push(Issue::NoChildren { node: id });
                }
                if node.children.iter().any(|c| c.prob.is_some()) {
                    issues.push(Issue::UnexpectedField { node: id, field: "prob" });
                }
            }
            KindDoc::Leaf => {
                if node.player.is_some() {
                    issues.push(Issue::UnexpectedField { node: id, field: "player" });
                }
                if node.infoset.is_some() {
                    issues.push(Issue::UnexpectedField { node: id, field: "infoset" });
                }
                if !node.children.is_empty() {
                    issues.push(Issue::LeafWithChildren { node: id });
                }
                match &node.payoffs {
                    None => issues.push(Issue::MissingPayoffs { node: id }),
                    Some(ps) if ps.len() != n_players => issues.push(Issue::PayoffArity {
                        node: id,
                        expected: n_players,
                        found: ps.len(),
                    }),
                    Some(_) => {}
                }
            }
        }
    }

    // Tree shape.
    let root = match by_id.get(&raw.root) {
        Some(&r) => Some(r),
        None => {
            issues.push(Issue::UnknownRoot { root: raw.root });
            None
        }
    };
    let mut parent: Vec<Option<NodeIdx>> = vec![None; raw.nodes.len()];
    let mut multi = vec![false; raw.nodes.len()];
    for (idx, node) in raw.nodes.iter().enumerate() {
        for c in &node.children {
            match by_id.get(&c.node) {
                None => issues.push(Issue::UnknownChild {
                    node: node.id,
                    child: c.node,
                }),
                Some(&ci) => {
                    if parent[ci].is_some() {
                        multi[ci] = true;
                    } else {
                        parent[ci] = Some(idx);
                    }
                }
            }
        }
    }
    for (idx, &m) in multi.iter().enumerate() {
        if m {
            issues.push(Issue::MultipleParents {
                node: raw.nodes[idx].id,
            });
        }
    }
    let mut depth = vec![0usize; raw.nodes.len()];
    let mut preorder = Vec::with_capacity(raw.nodes.len());
    if let Some(r) = root {
        if parent[r].is_some() {
            issues.push(Issue::RootHasParent { root: raw.root });
        }
        let mut seen = vec![false; raw.nodes.len()];
        let mut stack = vec![r];
        seen[r] = true;
        while let Some(v) = stack.pop() {
            preorder.push(v);
            for c in raw.nodes[v].children.iter().rev() {
                if let Some(&ci) = by_id.get(&c.node) {
                    if !seen[ci] {
                        seen[ci] = true;
                        depth[ci] = depth[v] + 1;
                        stack.push(ci);
                    }
                }
            }
        }
        for (idx, s) in seen.iter().enumerate() {
            if !s {
                issues.push(Issue::Unreachable {
                    node: raw.nodes[idx].id,
                });
            }
        }
    }

    // Information sets: explicit names first, then fresh singleton names.
    let mut names: BTreeSet<String> = raw
        .nodes
        .iter()
        .filter(|n| n.kind == KindDoc::Decision)
        .filter_map(|n| n.infoset.clone())
        .collect();
    let mut infosets: Vec<InfoSet> = Vec::new();
    let mut infoset_index: HashMap<String, usize> = HashMap::new();
    let mut node_infoset: Vec<Option<usize>> = vec![None; raw.nodes.len()];
    let mut mismatched_player = BTreeSet::new();
    let mut mismatched_actions = BTreeSet::new();
    for (idx, node) in raw.nodes.iter().enumerate() {
        if node.kind != KindDoc::Decision {
            continue;
        }
        let name = match &node.infoset {
            Some(name) => name.clone(),
            None => {
                let mut fresh = format!("#{}", node.id);
                while names.contains(&fresh) {
                    fresh.push('\'');
                }
                names.insert(fresh.clone());
                fresh
            }
        };
        let actions = action_labels(&node.children);
        let player = node.player.unwrap_or(0);
        let k = *infoset_index.entry(name.clone()).or_insert_with(|| {
            infosets.push(InfoSet {
                name: name.clone(),
                player,
                actions: actions.clone(),
                members: Vec::new(),
            });
            infosets.len() - 1
        });
        let set = &mut infosets[k];
        if set.player != player {
            mismatched_player.insert(name.clone());
        }
        if set.actions != actions {
            mismatched_actions.insert(name.clone());
        }
        set.members.push(idx);
        node_infoset[idx] = Some(k);
    }
    for infoset in mismatched_player {
        issues.push(Issue::InfosetPlayerMismatch { infoset });
    }
    for infoset in mismatched_actions {
        issues.push(Issue::InfosetActionMismatch { infoset });
    }

    if !issues.is_empty() {
        return (issues, None);
    }

    let root = root.expect("root checked above");
    let nodes = raw
        .nodes
        .into_iter()
        .enumerate()
        .map(|(idx, n)| {
            let labels = action_labels(&n.children);
            let children = n
                .children
                .into_iter()
                .zip(labels)
                .map(|(c, action)| Child {
                    node: by_id[&c.node],
                    action,
                    prob: c.prob,
                })
                .collect();
            let kind = match n.kind {
                KindDoc::Chance => NodeKind::Chance,
                KindDoc::Decision => NodeKind::Decision {
                    player: n.player.expect("checked"),
                    infoset: node_infoset[idx].expect("checked"),
                },
                KindDoc::Leaf => NodeKind::Leaf {
                    payoffs: n.payoffs.expect("checked"),
                },
            };
            Node {
                id: n.id,
                kind,
                children,
            }
        })
        .collect();
    let game = Game {
        players: raw.players,
        nodes,
        root,
        infosets,
        parent,
        depth,
        preorder,
        by_id,
    };
    (issues, Some(game))
}

fn action_labels(children: &[RawChild]) -> Vec<String> {
    children
        .iter()
        .enumerate()
        .map(|(i, c)| c.action.clone().unwrap_or_else(|| i.to_string()))
        .collect()
}

// ---------------------------------------------------------------------------
// Validation report

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
    /// Tree shape and per-node fields are consistent.
    pub tree_ok: bool,
    /// Every information set has one owner and one action list.
    pub infosets_ok: bool,
    /// `None` when the structure is too broken to evaluate.
    pub perfect_recall: Option<bool>,
    /// Per player (index 0 is player 1): whether that player has perfect recall.
    pub recall_by_player: Vec<bool>,
    /// Infosets whose members disagree on their owner's experience.
    pub recall_violations: Vec<String>,
    pub payoffs_in_unit_interval: Option<bool>,
    /// `m_p`: the most nodes player `p` owns on any single history (index 0 is player 1).
    pub max_nodes_per_history: Vec<usize>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Validates a parsed document without requiring it to be a game.
pub fn validate_document(doc: &GameDoc) -> ValidationReport {
    let mut issues = Vec::new();
    let raw = RawGame::from_doc(doc, &mut issues);
    let (issues, game) = check_and_build(raw, issues);
    match game {
        Some(g) => g.validate(),
        None => ValidationReport {
            tree_ok: !issues.iter().any(Issue::is_tree_issue),
            infosets_ok: issues.iter().all(Issue::is_tree_issue),
            issues,
            perfect_recall: None,
            recall_by_player: Vec::new(),
            recall_violations: Vec::new(),
            payoffs_in_unit_interval: None,
            max_nodes_per_history: Vec::new(),
        },
    }
}

pub fn parse_game(text: &str) -> Result<Game, GameError> {
    let doc = GameDoc::from_json(text)?;
    Game::from_doc(&doc)
}

pub fn serialize_game(game: &Game) -> String {
    game.to_doc().to_json()
}

// ---------------------------------------------------------------------------
// Recall bookkeeping

/// Hash-consed experiences: id 0 is the empty experience.
struct ExperienceTable {
    entries: Vec<(u32, usize, usize)>,
    lens: Vec<usize>,
    lookup: HashMap<(u32, usize, usize), u32>,
}

impl ExperienceTable {
    fn new() -> Self {
        ExperienceTable {
            entries: vec![(0, 0, 0)],
            lens: vec![0],
            lookup: HashMap::new(),
        }
    }

    fn extend(&mut self, prev: u32, infoset: usize, action: usize) -> u32 {
        let key = (prev, infoset, action);
        if let Some(&id) = self.lookup.get(&key) {
            return id;
        }
        let id = self.entries.len() as u32;
        self.entries.push(key);
        self.lens.push(self.lens[prev as usize] + 1);
        self.lookup.insert(key, id);
        id
    }
}

impl Game {
    pub fn from_doc(doc: &GameDoc) -> Result<Game, GameError> {
        let mut issues = Vec::new();
        let raw = RawGame::from_doc(doc, &mut issues);
        Game::from_raw_with(raw, issues)
    }

    pub fn from_raw(raw: RawGame) -> Result<Game, GameError> {
        Game::from_raw_with(raw, Vec::new())
    }

    fn from_raw_with(raw: RawGame, issues: Vec<Issue>) -> Result<Game, GameError> {
        match check_and_build(raw, issues) {
            (_, Some(g)) => Ok(g),
            (issues, None) => Err(GameError::Invalid(issues)),
        }
    }

    pub fn to_doc(&self) -> GameDoc {
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let children: Vec<ChildDoc> = n
                    .children
                    .iter()
                    .map(|c| ChildDoc {
                        node: self.nodes[c.node].id,
                        action: Some(c.action.clone()),
                        prob: c.prob.as_ref().map(fmt_q),
                    })
                    .collect();
                let (kind, player, infoset, payoffs) = match &n.kind {
                    NodeKind::Chance => (KindDoc::Chance, None, None, None),
                    NodeKind::Decision { player, infoset } => (
                        KindDoc::Decision,
                        Some(*player),
                        Some(self.infosets[*infoset].name.clone()),
                        None,
                    ),
                    NodeKind::Leaf { payoffs } => (
                        KindDoc::Leaf,
                        None,
                        None,
                        Some(payoffs.iter().map(fmt_q).collect()),
                    ),
                };
                NodeDoc {
                    id: n.id,
                    kind,
                    player,
                    infoset,
                    children: if children.is_empty() {
                        None
                    } else {
                        Some(children)
                    },
                    payoffs,
                }
            })
            .collect();
        GameDoc {
            players: self.players.clone(),
            nodes,
            root: self.nodes[self.root].id,
        }
    }

    /// SHA-256 of the canonical document, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serialize_game(self).as_bytes()))
    }

    pub fn players(&self) -> &[String] {
        &self.players
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, v: NodeIdx) -> &Node {
        &self.nodes[v]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeIdx {
        self.root
    }

    pub fn parent(&self, v: NodeIdx) -> Option<NodeIdx> {
        self.parent[v]
    }

    pub fn depth(&self, v: NodeIdx) -> usize {
        self.depth[v]
    }

    /// Root-first depth-first order, children visited in order.
    pub fn preorder(&self) -> &[NodeIdx] {
        &self.preorder
    }

    pub fn infosets(&self) -> &[InfoSet] {
        &self.infosets
    }

    pub fn infoset(&self, k: usize) -> &InfoSet {
        &self.infosets[k]
    }

    pub fn infoset_by_name(&self, name: &str) -> Option<usize> {
        self.infosets.iter().position(|s| s.name == name)
    }

    pub fn index_of(&self, id: u64) -> Result<NodeIdx, GameError> {
        self.by_id.get(&id).copied().ok_or(GameError::UnknownNode(id))
    }

    pub fn player_of(&self, v: NodeIdx) -> Option<Player> {
        match self.nodes[v].kind {
            NodeKind::Decision { player, .. } => Some(player),
            _ => None,
        }
    }

    pub fn infoset_of(&self, v: NodeIdx) -> Option<usize> {
        match self.nodes[v].kind {
            NodeKind::Decision { infoset, .. } => Some(infoset),
            _ => None,
        }
    }

    pub fn is_leaf(&self, v: NodeIdx) -> bool {
        matches!(self.nodes[v].kind, NodeKind::Leaf { .. })
    }

    pub fn payoffs(&self, v: NodeIdx) -> Option<&[Q]> {
        match &self.nodes[v].kind {
            NodeKind::Leaf { payoffs } => Some(payoffs),
            _ => None,
        }
    }

    /// Nodes from the root down to `v`, both included.
    pub fn path_to(&self, v: NodeIdx) -> Vec<NodeIdx> {
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Index of `child` among the children of its parent.
    pub fn action_index(&self, child: NodeIdx) -> Option<usize> {
        let p = self.parent[child]?;
        self.nodes[p].children.iter().position(|c| c.node == child)
    }

    /// The most nodes on any root-to-leaf history.
    pub fn max_history_len(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0) + 1
    }

    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Player `p`'s own decisions strictly above `v`.
    pub fn experience(&self, v: NodeIdx, p: Player) -> Result<Experience, GameError> {
        if v >= self.nodes.len() {
            return Err(GameError::UnknownIndex(v));
        }
        if p == 0 || p > self.players.len() {
            return Err(GameError::UnknownPlayer(p));
        }
        let path = self.path_to(v);
        let mut out = Vec::new();
        for pair in path.windows(2) {
            if let NodeKind::Decision { player, infoset } = self.nodes[pair[0]].kind {
                if player == p {
                    let a = self.action_index(pair[1]).expect("child of its parent");
                    out.push((infoset, a));
                }
            }
        }
        Ok(Experience(out))
    }

    pub fn validate(&self) -> ValidationReport {
        let n_players = self.players.len();
        let mut table = ExperienceTable::new();
        // experience id of each node, per player
        let mut exp: Vec<Vec<u32>> = vec![vec![0; self.nodes.len()]; n_players];
        for &v in &self.preorder {
            let Some(p) = self.parent[v] else { continue };
            let a = self.nodes[p]
                .children
                .iter()
                .position(|c| c.node == v)
                .expect("child of its parent");
            for pl in 0..n_players {
                exp[pl][v] = exp[pl][p];
            }
            if let NodeKind::Decision { player, infoset } = self.nodes[p].kind {
                let e = &mut exp[player - 1][v];
                *e = table.extend(*e, infoset, a);
            }
        }
        let mut recall_by_player = vec![true; n_players];
        let mut recall_violations = Vec::new();
        for set in &self.infosets {
            let row = &exp[set.player - 1];
            let first = row[set.members[0]];
            if set.members.iter().any(|&v| row[v] != first) {
                recall_by_player[set.player - 1] = false;
                recall_violations.push(set.name.clone());
            }
        }
        let mut max_nodes = vec![0usize; n_players];
        for (v, node) in self.nodes.iter().enumerate() {
            if let NodeKind::Decision { player, .. } = node.kind {
                let len = table.lens[exp[player - 1][v] as usize] + 1;
                max_nodes[player - 1] = max_nodes[player - 1].max(len);
            }
        }
        let unit = self.nodes.iter().all(|n| match &n.kind {
            NodeKind::Leaf { payoffs } => payoffs.iter().all(in_unit_interval),
            _ => true,
        });
        ValidationReport {
            issues: Vec::new(),
            tree_ok: true,
            infosets_ok: true,
            perfect_recall: Some(recall_by_player.iter().all(|&b| b)),
            recall_by_player,
            recall_violations,
            payoffs_in_unit_interval: Some(unit),
            max_nodes_per_history: max_nodes,
        }
    }

    /// Whether player `p` has perfect recall.
    pub fn has_recall(&self, p: Player) -> bool {
        self.validate()
            .recall_by_player
            .get(p.wrapping_sub(1))
            .copied()
            .unwrap_or(false)
    }
}

// ---------------------------------------------------------------------------
// Programmatic construction

/// Incremental builder used by the generators. Node ids equal their indices.
#[derive(Debug, Clone, Default)]
pub struct GameBuilder {
    players: Vec<String>,
    nodes: Vec<RawNode>,
}

impl GameBuilder {
    pub fn new<S: Into<String>>(players: impl IntoIterator<Item = S>) -> Self {
        GameBuilder {
            players: players.into_iter().map(Into::into).collect(),
            nodes: Vec::new(),
        }
    }

    pub fn with_capacity<S: Into<String>>(
        players: impl IntoIterator<Item = S>,
        nodes: usize,
    ) -> Self {
        let mut b = GameBuilder::new(players);
        b.nodes.reserve(nodes);
        b
    }

    fn push(&mut self, kind: KindDoc, player: Option<Player>, infoset: Option<String>) -> NodeIdx {
        let idx = self.nodes.len();
        self.nodes.push(RawNode {
            id: idx as u64,
            kind,
            player,
            infoset,
            children: Vec::new(),
            payoffs: None,
        });
        idx
    }

    pub fn chance(&mut self) -> NodeIdx {
        self.push(KindDoc::Chance, None, None)
    }

    pub fn decision(&mut self, player: Player, infoset: impl Into<String>) -> NodeIdx {
        self.push(KindDoc::Decision, Some(player), Some(infoset.into()))
    }

    /// A decision node in its own fresh information set.
    pub fn singleton(&mut self, player: Player) -> NodeIdx {
        self.push(KindDoc::Decision, Some(player), None)
    }

    pub fn leaf(&mut self, payoffs: Vec<Q>) -> NodeIdx {
        let idx = self.push(KindDoc::Leaf, None, None);
        self.nodes[idx].payoffs = Some(payoffs);
        idx
    }

    pub fn edge(&mut self, parent: NodeIdx, child: NodeIdx, action: impl Into<String>) {
        self.nodes[parent].children.push(RawChild {
            node: child as u64,
            action: Some(action.into()),
            prob: None,
        });
    }

    pub fn chance_edge(&mut self, parent: NodeIdx, child: NodeIdx, action: impl Into<String>, prob: Q) {
        self.nodes[parent].children.push(RawChild {
            node: child as u64,
            action: Some(action.into()),
            prob: Some(prob),
        });
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn build(self, root: NodeIdx) -> Result<Game, GameError> {
        Game::from_raw(RawGame {
            players: self.players,
            nodes: self.nodes,
            root: root as u64,
        })
    }
}

/// Groups the members of every information set by their index, for callers that
/// iterate node pairs.
pub fn infoset_members(game: &Game) -> BTreeMap<usize, &[NodeIdx]> {
    game.infosets()
        .iter()
        .enumerate()
        .map(|(k, s)| (k, s.members.as_slice()))
        .collect()
}
