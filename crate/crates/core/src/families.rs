//! Named games and agendas: the three motivating examples, symmetric
//! choiceless games, the recursive agendas `A_r` and the perception agenda.

use crate::game::{Game, GameBuilder, GameError};
use crate::rational::{q, qi, qu, Q};
use num_traits::One;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("invalid parameters: {0}")]
    Parameter(String),
    #[error("{n}! numberings exceed the limit of {limit}")]
    TooManyNumberings { n: usize, limit: usize },
    #[error("symbol {symbol} at position {position} is outside 1..={n}")]
    OutOfRange {
        symbol: usize,
        position: usize,
        n: usize,
    },
    #[error("empty sequence")]
    Empty,
    #[error("cannot parse agenda: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure1 {
    A,
    B,
    C,
}

/// The motivating examples: a fair coin decides who moves first, and each
/// player bets on whether she moved first ("first") or second ("second").
///
/// * `A`: both always bet; each player's two nodes form one information set.
/// * `B`: player 1 only moves on heads (in her own set); player 2 cannot tell
///   any of her three nodes apart.
/// * `C`: like `A`, but the second mover only bets if the first guessed right.
pub fn figure1(variant: Figure1) -> Game {
    let mut b = GameBuilder::new(["Player 1", "Player 2"]);
    let half = q(1, 2);
    let leaf = |b: &mut GameBuilder, x: i64, y: i64| b.leaf(vec![qi(x), qi(y)]);
    let root = b.chance();

    // Heads: player 1 moves first.
    let p1 = match variant {
        Figure1::B => b.decision(1, "P1"),
        _ => b.decision(1, "P1-set"),
    };
    b.chance_edge(root, p1, "heads", half.clone());
    let left_first = b.decision(2, "P2-set");
    b.edge(p1, left_first, "first");
    let l = leaf(&mut b, 1, 0);
    b.edge(left_first, l, "first");
    let l = leaf(&mut b, 1, 1);
    b.edge(left_first, l, "second");
    if variant == Figure1::C {
        let l = leaf(&mut b, 0, 0);
        b.edge(p1, l, "second");
    } else {
        let left_second = b.decision(2, "P2-set");
        b.edge(p1, left_second, "second");
        let l = leaf(&mut b, 0, 0);
        b.edge(left_second, l, "first");
        let l = leaf(&mut b, 0, 1);
        b.edge(left_second, l, "second");
    }

    // Tails: player 2 moves first.
    let p2 = b.decision(2, "P2-set");
    b.chance_edge(root, p2, "tails", half);
    match variant {
        Figure1::B => {
            let l = leaf(&mut b, 0, 1);
            b.edge(p2, l, "first");
            let l = leaf(&mut b, 0, 0);
            b.edge(p2, l, "second");
        }
        Figure1::A | Figure1::C => {
            let right_first = b.decision(1, "P1-set");
            b.edge(p2, right_first, "first");
            let l = leaf(&mut b, 0, 1);
            b.edge(right_first, l, "first");
            let l = leaf(&mut b, 1, 1);
            b.edge(right_first, l, "second");
            if variant == Figure1::C {
                let l = leaf(&mut b, 0, 0);
                b.edge(p2, l, "second");
            } else {
                let right_second = b.decision(1, "P1-set");
                b.edge(p2, right_second, "second");
                let l = leaf(&mut b, 0, 0);
                b.edge(right_second, l, "first");
                let l = leaf(&mut b, 1, 0);
                b.edge(right_second, l, "second");
            }
        }
    }
    b.build(root).expect("figure games are well formed")
}

// ---------------------------------------------------------------------------
// Symmetric choiceless games

/// Players `1..=n` act in the order given by `seq`, under a uniformly random
/// numbering of the players.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetricChoicelessGame {
    pub n: usize,
    pub seq: Vec<usize>,
}

impl SymmetricChoicelessGame {
    pub fn new(n: usize, seq: Vec<usize>) -> Result<Self, FamilyError> {
        if seq.is_empty() {
            return Err(FamilyError::Empty);
        }
        if let Some((position, &symbol)) = seq.iter().enumerate().find(|(_, &s)| s == 0 || s > n) {
            return Err(FamilyError::OutOfRange { symbol, position, n });
        }
        Ok(SymmetricChoicelessGame { n, seq })
    }

    /// Parses a digit string such as `"233112"` (players 1..=9 only).
    pub fn from_digits(n: usize, digits: &str) -> Result<Self, FamilyError> {
        let seq = digits
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as usize)
                    .ok_or_else(|| FamilyError::Parse(format!("{c:?} is not a digit")))
            })
            .collect::<Result<_, _>>()?;
        Self::new(n, seq)
    }

    /// Occurrences of each player (index 0 is player 1).
    pub fn counts(&self) -> Vec<usize> {
        let mut k = vec![0; self.n];
        for &s in &self.seq {
            k[s - 1] += 1;
        }
        k
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, FamilyError> {
        let raw: SymmetricChoicelessGame =
            serde_json::from_str(text).map_err(|e| FamilyError::Parse(e.to_string()))?;
        Self::new(raw.n, raw.seq)
    }
}

impl fmt::Display for SymmetricChoicelessGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.n <= 9 { "" } else { " " };
        let parts: Vec<String> = self.seq.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join(sep))
    }
}

/// All permutations of `1..=n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (1..=n).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("successor exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

pub fn factorial(n: usize) -> Option<usize> {
    (1..=n).try_fold(1usize, |acc, k| acc.checked_mul(k))
}

pub const DEFAULT_NUMBERING_LIMIT: usize = 720;

/// The explicit game: a chance root picks a numbering `π` (position `j` of the
/// sequence is played by player `π(seq[j])`), then a chain of single-action
/// nodes. A node's information set is its player together with how many times
/// she has already moved.
pub fn expand_choiceless(scg: &SymmetricChoicelessGame, limit: usize) -> Result<Game, FamilyError> {
    let total = factorial(scg.n)
        .filter(|&f| f <= limit)
        .ok_or(FamilyError::TooManyNumberings { n: scg.n, limit })?;
    let players: Vec<String> = (1..=scg.n).map(|i| format!("Player {i}")).collect();
    let mut b = GameBuilder::with_capacity(players, 1 + total * (scg.seq.len() + 1));
    let root = b.chance();
    let p = Q::one() / qu(total);
    for pi in permutations(scg.n) {
        let label: Vec<String> = pi.iter().map(|x| x.to_string()).collect();
        let mut prev = root;
        let mut seen = vec![0usize; scg.n + 1];
        for (j, &s) in scg.seq.iter().enumerate() {
            let player = pi[s - 1];
            let v = b.decision(player, format!("p{player}#{}", seen[player]));
            seen[player] += 1;
            if j == 0 {
                b.chance_edge(prev, v, label.join(""), p.clone());
            } else {
                b.edge(prev, v, "next");
            }
            prev = v;
        }
        let end = b.leaf(vec![qi(0); scg.n]);
        b.edge(prev, end, "next");
    }
    b.build(root).map_err(|e: GameError| FamilyError::Parameter(e.to_string()))
}

// ---------------------------------------------------------------------------
// Agendas

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Sep,
    Player(usize),
}

/// A sequence over `{|, 1..n}`. `labels`, when present, are display names for
/// the players (index 0 is player 1) and are not part of the document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Agenda {
    pub n: usize,
    pub seq: Vec<Symbol>,
    pub labels: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TokenDoc {
    Player(usize),
    Sep(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgendaDoc {
    n: usize,
    seq: Vec<TokenDoc>,
}

impl Agenda {
    pub fn new(n: usize, seq: Vec<Symbol>) -> Result<Self, FamilyError> {
        for (position, s) in seq.iter().enumerate() {
            if let Symbol::Player(p) = *s {
                if p == 0 || p > n {
                    return Err(FamilyError::OutOfRange { symbol: p, position, n });
                }
            }
        }
        Ok(Agenda {
            n,
            seq,
            labels: None,
        })
    }

    /// Parses a rendered agenda such as `"2|3332|111|2"`: single-character
    /// player names, or whitespace-separated names. Digits keep their value;
    /// other names get the next free numbers in order of first appearance.
    pub fn parse(text: &str) -> Result<Self, FamilyError> {
        let text = text.trim();
        let mut tokens: Vec<String> = Vec::new();
        if text.contains(char::is_whitespace) {
            for word in text.split_whitespace() {
                let mut cur = String::new();
                for c in word.chars() {
                    if c == '|' {
                        if !cur.is_empty() {
                            tokens.push(std::mem::take(&mut cur));
                        }
                        tokens.push("|".into());
                    } else {
                        cur.push(c);
                    }
                }
                if !cur.is_empty() {
                    tokens.push(cur);
                }
            }
        } else {
            tokens = text.chars().map(String::from).collect();
        }
        let numeric: BTreeSet<usize> = tokens.iter().filter_map(|t| t.parse().ok()).collect();
        if numeric.contains(&0) {
            return Err(FamilyError::Parse("player 0 does not exist".into()));
        }
        let mut next = numeric.iter().next_back().copied().unwrap_or(0);
        let mut names: Vec<(String, usize)> = Vec::new();
        let mut seq = Vec::with_capacity(tokens.len());
        for t in &tokens {
            if t == "|" {
                seq.push(Symbol::Sep);
            } else if let Ok(p) = t.parse::<usize>() {
                seq.push(Symbol::Player(p));
            } else {
                let id = match names.iter().find(|(name, _)| name == t) {
                    Some(&(_, id)) => id,
                    None => {
                        next += 1;
                        names.push((t.clone(), next));
                        next
                    }
                };
                seq.push(Symbol::Player(id));
            }
        }
        let mut agenda = Agenda::new(next, seq)?;
        if !names.is_empty() {
            let mut labels: Vec<String> = (1..=next).map(|i| i.to_string()).collect();
            for (name, id) in names {
                labels[id - 1] = name;
            }
            agenda.labels = Some(labels);
        }
        Ok(agenda)
    }

    /// `k_i` for each player (index 0 is player 1).
    pub fn counts(&self) -> Vec<usize> {
        let mut k = vec![0; self.n];
        for s in &self.seq {
            if let Symbol::Player(p) = s {
                k[p - 1] += 1;
            }
        }
        k
    }

    pub fn separators(&self) -> usize {
        self.seq.iter().filter(|s| **s == Symbol::Sep).count()
    }

    pub fn label(&self, p: usize) -> String {
        match &self.labels {
            Some(l) => l[p - 1].clone(),
            None => p.to_string(),
        }
    }

    pub fn render(&self) -> String {
        let labels: Vec<String> = (1..=self.n).map(|p| self.label(p)).collect();
        let compact = labels.iter().all(|l| l.chars().count() == 1);
        let mut out = String::new();
        let mut after_player = false;
        for s in &self.seq {
            match s {
                Symbol::Sep => {
                    out.push('|');
                    after_player = false;
                }
                Symbol::Player(p) => {
                    if !compact && after_player {
                        out.push(' ');
                    }
                    out.push_str(&labels[p - 1]);
                    after_player = true;
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let seq = self
            .seq
            .iter()
            .map(|s| match s {
                Symbol::Sep => TokenDoc::Sep("|".into()),
                Symbol::Player(p) => TokenDoc::Player(*p),
            })
            .collect();
        serde_json::to_string_pretty(&AgendaDoc { n: self.n, seq }).expect("serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, FamilyError> {
        let doc: AgendaDoc =
            serde_json::from_str(text).map_err(|e| FamilyError::Parse(e.to_string()))?;
        let seq = doc
            .seq
            .into_iter()
            .map(|t| match t {
                TokenDoc::Player(p) => Ok(Symbol::Player(p)),
                TokenDoc::Sep(s) if s == "|" => Ok(Symbol::Sep),
                TokenDoc::Sep(s) => Err(FamilyError::Parse(format!("unknown token {s:?}"))),
            })
            .collect::<Result<_, _>>()?;
        Agenda::new(doc.n, seq)
    }
}

impl fmt::Display for Agenda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn fresh_label(k: usize) -> String {
    let letter = (b'a' + (k % 26) as u8) as char;
    match k / 26 {
        0 => letter.to_string(),
        round => format!("{letter}{round}"),
    }
}

/// Player as built: an original player of `A_1`, or the `index`-th fresh player.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Who {
    Base(usize),
    Fresh(usize),
}

/// Roles a, b, c, d in the five blocks around four consecutive separators.
const WEAVE: [&[usize]; 5] = [&[1, 3], &[2, 2], &[0, 3, 3, 0], &[1, 1], &[0, 2]];

/// The recursive agenda `A_r`.
///
/// `A_r` wraps `A_{r−1}` in two more separators on each side, gives every old
/// player one node in the new first and last blocks (ascending ids), then for
/// each window of four consecutive separators `s..s+3` (`s = 1..4r−4`) weaves
/// the fresh group `(s−1) mod 4` around it with `bd|cc|adda|bb|ac`. Inside a
/// block, later windows' players follow earlier ones, and all fresh players
/// precede the old content. For `r ≥ 3` this is the reading that reproduces
/// the `r = 2` string and the stated player count; the prose does not pin down
/// the in-block order beyond that.
///
/// Fresh players are labelled `a, b, …` across all levels and numbered after
/// the old players in order of first appearance.
pub fn agenda_ar(r: usize) -> Result<Agenda, FamilyError> {
    if r == 0 {
        return Err(FamilyError::Parameter("r must be at least 1".into()));
    }
    // blocks[i] = players between separator i and i+1 (block 0 before the first)
    let mut blocks: Vec<Vec<Who>> = vec![
        vec![Who::Base(2)],
        vec![Who::Base(3), Who::Base(3), Who::Base(3), Who::Base(2)],
        vec![Who::Base(1), Who::Base(1), Who::Base(1)],
        vec![Who::Base(2)],
    ];
    let mut order: Vec<Who> = vec![Who::Base(1), Who::Base(2), Who::Base(3)];
    let mut fresh_count = 0usize;
    for _level in 2..=r {
        let old_order = order.clone();
        let mut next: Vec<Vec<Who>> = Vec::with_capacity(blocks.len() + 4);
        next.push(Vec::new());
        next.push(old_order.clone());
        next.extend(blocks.iter().cloned());
        next.push(old_order);
        next.push(Vec::new());
        let seps = next.len() - 1;
        let base = fresh_count;
        let mut woven: Vec<Vec<Who>> = vec![Vec::new(); next.len()];
        for s in 1..=seps.saturating_sub(3) {
            let group = (s - 1) % 4;
            for (offset, roles) in WEAVE.iter().enumerate() {
                for &role in roles.iter() {
                    woven[s - 1 + offset].push(Who::Fresh(base + 4 * group + role));
                }
            }
        }
        for (block, extra) in next.iter_mut().zip(woven) {
            let old = std::mem::replace(block, extra);
            block.extend(old);
        }
        fresh_count += 16;
        blocks = next;
        // new ids: old players keep theirs, fresh ones follow by first appearance
        let mut seen = BTreeSet::new();
        for w in blocks.iter().flatten() {
            if let Who::Fresh(k) = *w {
                if k >= base && seen.insert(k) {
                    order.push(*w);
                }
            }
        }
    }
    let id_of = |w: Who| order.iter().position(|&o| o == w).expect("registered") + 1;
    let mut seq = Vec::new();
    for (i, block) in blocks.iter().enumerate() {
        if i > 0 {
            seq.push(Symbol::Sep);
        }
        seq.extend(block.iter().map(|&w| Symbol::Player(id_of(w))));
    }
    let labels = order
        .iter()
        .map(|w| match *w {
            Who::Base(p) => p.to_string(),
            Who::Fresh(k) => fresh_label(k),
        })
        .collect();
    let mut agenda = Agenda::new(order.len(), seq)?;
    agenda.labels = Some(labels);
    Ok(agenda)
}

/// Drops the separators. Player numbers are kept when every player occurs;
/// otherwise the occurring players are renumbered `1..` in ascending order.
pub fn strip_separators(a: &Agenda) -> SymmetricChoicelessGame {
    let present: BTreeSet<usize> = a
        .seq
        .iter()
        .filter_map(|s| match s {
            Symbol::Player(p) => Some(*p),
            Symbol::Sep => None,
        })
        .collect();
    let rank = |p: usize| present.iter().position(|&x| x == p).expect("present") + 1;
    let seq = a
        .seq
        .iter()
        .filter_map(|s| match s {
            Symbol::Player(p) => Some(rank(*p)),
            Symbol::Sep => None,
        })
        .collect();
    SymmetricChoicelessGame {
        n: present.len(),
        seq,
    }
}

/// The choiceless game `Γ_r`: `A_{r+1}` without separators.
pub fn gamma_r(r: usize) -> Result<SymmetricChoicelessGame, FamilyError> {
    Ok(strip_separators(&agenda_ar(r + 1)?))
}

/// With `n = 4c⁴+1`:
/// `1 2 … n | (n+1)(n+1) … (2n)(2n) | | 1 1 … n n | (n+1) … (2n)`.
pub fn perception_game(c: usize) -> Result<Agenda, FamilyError> {
    if c == 0 {
        return Err(FamilyError::Parameter("c must be at least 1".into()));
    }
    let n = c
        .checked_pow(4)
        .and_then(|x| x.checked_mul(4))
        .and_then(|x| x.checked_add(1))
        .ok_or_else(|| FamilyError::Parameter(format!("c = {c} is too large")))?;
    let mut seq = Vec::with_capacity(6 * n + 4);
    seq.extend((1..=n).map(Symbol::Player));
    seq.push(Symbol::Sep);
    for p in n + 1..=2 * n {
        seq.extend([Symbol::Player(p), Symbol::Player(p)]);
    }
    seq.push(Symbol::Sep);
    seq.push(Symbol::Sep);
    for p in 1..=n {
        seq.extend([Symbol::Player(p), Symbol::Player(p)]);
    }
    seq.push(Symbol::Sep);
    seq.extend((n + 1..=2 * n).map(Symbol::Player));
    Agenda::new(2 * n, seq)
}
