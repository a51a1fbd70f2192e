//! Impartial games under normal play: positions, rule sets, move generation,
//! disjunctive sums, and Grundy values by memoized mex recursion.
//!
//! Three rule sets are provided. NIM and subtraction games keep a fixed heap
//! list (emptied heaps stay as zeros, so heap indices are stable). Kayles
//! positions are multisets of pin-row lengths; removing pins from the middle
//! of a row splits it, and the right-hand remnant is appended as a new row.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::BitXor;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Object count of a single heap (or pin-row length in Kayles).
pub type Heap = u32;

/// Default bound on memo-table entries for [`GrundySolver`] and [`WinLossSolver`].
pub const DEFAULT_MEMO_CAP: usize = 1 << 22;

/// Default heap bound for rule sets built without an explicit one.
pub const DEFAULT_MAX_HEAP: Heap = u16::MAX as Heap;

/// A Grundy value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Nimber(pub u32);

impl Nimber {
    pub const ZERO: Nimber = Nimber(0);

    pub fn value(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl BitXor for Nimber {
    type Output = Nimber;

    fn bitxor(self, rhs: Nimber) -> Nimber {
        Nimber(self.0 ^ rhs.0)
    }
}

impl fmt::Display for Nimber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "*{}", self.0)
    }
}

/// Heap sizes of a single game frame.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Heap>", into = "Vec<Heap>")]
pub struct Position {
    heaps: Vec<Heap>,
}

impl Position {
    pub fn new(heaps: Vec<Heap>) -> Result<Self> {
        if heaps.is_empty() {
            return Err(Error::InvalidPosition("a position needs at least one heap".into()));
        }
        Ok(Position { heaps })
    }

    pub fn heaps(&self) -> &[Heap] {
        &self.heaps
    }

    pub fn len(&self) -> usize {
        self.heaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heaps.is_empty()
    }

    pub fn heap(&self, index: usize) -> Option<Heap> {
        self.heaps.get(index).copied()
    }

    /// No heap has anything left to take.
    pub fn is_terminal(&self) -> bool {
        self.heaps.iter().all(|&h| h == 0)
    }

    pub fn total(&self) -> u64 {
        self.heaps.iter().map(|&h| u64::from(h)).sum()
    }

    pub fn max_heap(&self) -> Heap {
        self.heaps.iter().copied().max().unwrap_or(0)
    }

    /// Permutation-invariant memo key: non-empty heaps in ascending order.
    pub fn canonical_key(&self) -> Vec<Heap> {
        let mut key: Vec<Heap> = self.heaps.iter().copied().filter(|&h| h > 0).collect();
        key.sort_unstable();
        key
    }
}

impl TryFrom<Vec<Heap>> for Position {
    type Error = Error;

    fn try_from(heaps: Vec<Heap>) -> Result<Self> {
        Position::new(heaps)
    }
}

impl From<Position> for Vec<Heap> {
    fn from(p: Position) -> Self {
        p.heaps
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, h) in self.heaps.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{h}")?;
        }
        Ok(())
    }
}

impl FromStr for Position {
    type Err = Error;

    /// Parses the comma-separated text form, e.g. `3,5,7`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::InvalidPosition("empty heap list".into()));
        }
        let heaps = s
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                if tok.starts_with('-') {
                    return Err(Error::InvalidPosition(format!("negative heap count {tok}")));
                }
                tok.parse::<Heap>().map_err(|e| Error::InvalidPosition(format!("bad heap count {tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Position::new(heaps)
    }
}

/// Shrinks heap `heap_index` to `new_count`. For Kayles, `split` is the length
/// of the right-hand remnant that becomes a new row (zero otherwise).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GameMove {
    pub heap_index: usize,
    pub new_count: Heap,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub split: Heap,
}

fn is_zero(h: &Heap) -> bool {
    *h == 0
}

impl GameMove {
    pub fn new(heap_index: usize, new_count: Heap) -> Self {
        GameMove { heap_index, new_count, split: 0 }
    }

    pub fn split(heap_index: usize, new_count: Heap, split: Heap) -> Self {
        GameMove { heap_index, new_count, split }
    }

    /// Ordering used for every deterministic tie-break: lowest heap index,
    /// then lowest resulting count.
    pub fn tie_break_key(&self) -> (usize, Heap, Heap) {
        (self.heap_index, self.new_count, self.split)
    }
}

impl fmt::Display for GameMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.heap_index, self.new_count)?;
        if self.split > 0 {
            write!(f, "+{}", self.split)?;
        }
        Ok(())
    }
}

impl FromStr for GameMove {
    type Err = Error;

    /// Parses `index:new_count` or `index:new_count+split`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::IllegalMove { mv: s.to_string(), reason: "expected index:count[+split]".into() };
        let (idx, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let (count, split) = match rest.split_once('+') {
            Some((c, sp)) => (c, sp.parse::<Heap>().map_err(|_| bad())?),
            None => (rest, 0),
        };
        Ok(GameMove {
            heap_index: idx.parse().map_err(|_| bad())?,
            new_count: count.parse().map_err(|_| bad())?,
            split,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Nim,
    /// Remove any amount from the (non-empty, all ≥ 1) removal set.
    Subtraction(BTreeSet<Heap>),
    Kayles,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Nim => "nim",
            Variant::Subtraction(_) => "subtraction",
            Variant::Kayles => "kayles",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GameRules {
    variant: Variant,
    max_heap_size: Heap,
}

impl GameRules {
    pub fn nim() -> Self {
        GameRules { variant: Variant::Nim, max_heap_size: DEFAULT_MAX_HEAP }
    }

    pub fn kayles() -> Self {
        GameRules { variant: Variant::Kayles, max_heap_size: DEFAULT_MAX_HEAP }
    }

    pub fn subtraction<I: IntoIterator<Item = Heap>>(removals: I) -> Result<Self> {
        let set: BTreeSet<Heap> = removals.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidRules("removal set must be non-empty".into()));
        }
        if set.contains(&0) {
            return Err(Error::InvalidRules("removal amounts must be at least 1".into()));
        }
        Ok(GameRules { variant: Variant::Subtraction(set), max_heap_size: DEFAULT_MAX_HEAP })
    }

    pub fn with_max_heap(mut self, max_heap_size: Heap) -> Result<Self> {
        if max_heap_size == 0 {
            return Err(Error::InvalidRules("max_heap_size must be positive".into()));
        }
        self.max_heap_size = max_heap_size;
        Ok(self)
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn max_heap_size(&self) -> Heap {
        self.max_heap_size
    }

    pub fn is_nim(&self) -> bool {
        self.variant == Variant::Nim
    }

    pub fn validate(&self, p: &Position) -> Result<()> {
        if let Some(h) = p.heaps().iter().find(|&&h| h > self.max_heap_size) {
            return Err(Error::InvalidPosition(format!("heap {h} exceeds max_heap_size {}", self.max_heap_size)));
        }
        Ok(())
    }
}

impl fmt::Display for GameRules {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.variant {
            Variant::Nim => f.write_str("nim"),
            Variant::Kayles => f.write_str("kayles"),
            Variant::Subtraction(set) => {
                f.write_str("subtraction:")?;
                for (i, r) in set.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{r}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for GameRules {
    type Err = Error;

    /// `nim`, `kayles`, or `subtraction:1,2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "nim" => Ok(GameRules::nim()),
            "kayles" => Ok(GameRules::kayles()),
            _ => {
                let list = s
                    .strip_prefix("subtraction:")
                    .ok_or_else(|| Error::InvalidRules(format!("unknown rules {s:?}")))?;
                let removals = list
                    .split(',')
                    .map(|t| {
                        t.trim().parse::<Heap>().map_err(|e| Error::InvalidRules(format!("bad removal {t:?}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                GameRules::subtraction(removals)
            }
        }
    }
}

/// All moves from `p`, heap by heap; within a heap, smaller removals first.
pub fn legal_moves(p: &Position, rules: &GameRules) -> Result<Vec<GameMove>> {
    rules.validate(p)?;
    let mut moves = Vec::new();
    for (i, &h) in p.heaps().iter().enumerate() {
        match rules.variant() {
            Variant::Nim => moves.extend((0..h).rev().map(|n| GameMove::new(i, n))),
            Variant::Subtraction(set) => {
                moves.extend(set.iter().take_while(|&&r| r <= h).map(|&r| GameMove::new(i, h - r)))
            }
            Variant::Kayles => {
                for removed in 1..=2 {
                    if removed > h {
                        break;
                    }
                    let rest = h - removed;
                    // unordered split: keep the larger part in place
                    for left in (rest.div_ceil(2)..=rest).rev() {
                        moves.push(GameMove::split(i, left, rest - left));
                    }
                }
            }
        }
    }
    Ok(moves)
}

fn check_move(p: &Position, m: &GameMove, rules: &GameRules) -> Result<Heap> {
    let illegal = |reason: String| Error::IllegalMove { mv: m.to_string(), reason };
    let old = p
        .heap(m.heap_index)
        .ok_or_else(|| illegal(format!("heap index out of range (position has {} heaps)", p.len())))?;
    if m.new_count >= old {
        return Err(illegal(format!("heap {} must strictly decrease from {old}", m.heap_index)));
    }
    match rules.variant() {
        Variant::Nim | Variant::Subtraction(_) if m.split != 0 => {
            Err(illegal("splitting is only allowed in kayles".into()))
        }
        Variant::Nim => Ok(old),
        Variant::Subtraction(set) => {
            let removed = old - m.new_count;
            if set.contains(&removed) {
                Ok(old)
            } else {
                Err(illegal(format!("removing {removed} is not in the removal set")))
            }
        }
        Variant::Kayles => {
            if m.split > m.new_count {
                return Err(illegal("remnant must not exceed the kept part".into()));
            }
            let kept = u64::from(m.new_count) + u64::from(m.split);
            match u64::from(old).checked_sub(kept) {
                Some(1) | Some(2) => Ok(old),
                _ => Err(illegal("kayles removes one or two adjacent pins".into())),
            }
        }
    }
}

/// Applies a legal move; only `heap_index` changes (plus an appended row for
/// a Kayles split).
pub fn apply_move(p: &Position, m: &GameMove, rules: &GameRules) -> Result<Position> {
    check_move(p, m, rules)?;
    let mut heaps = p.heaps().to_vec();
    heaps[m.heap_index] = m.new_count;
    if m.split > 0 {
        heaps.push(m.split);
    }
    Ok(Position { heaps })
}

/// Smallest non-negative integer absent from `values`.
pub fn mex<I: IntoIterator<Item = u32>>(values: I) -> u32 {
    let mut seen: Vec<bool> = Vec::new();
    for v in values {
        let v = v as usize;
        if v >= seen.len() {
            seen.resize(v + 1, false);
        }
        seen[v] = true;
    }
    seen.iter().position(|&s| !s).unwrap_or(seen.len()) as u32
}

/// The sum of two games of the same variant: heap lists concatenated.
pub fn disjunctive_sum(
    left_rules: &GameRules,
    left: &Position,
    right_rules: &GameRules,
    right: &Position,
) -> Result<Position> {
    if left_rules.variant() != right_rules.variant() {
        return Err(Error::MixedVariants { left: left_rules.to_string(), right: right_rules.to_string() });
    }
    let mut heaps = left.heaps().to_vec();
    heaps.extend_from_slice(right.heaps());
    Position::new(heaps)
}

/// Memoized mex recursion. One solver per worker thread; the table is keyed
/// on the sorted multiset of non-empty heaps.
#[derive(Debug)]
pub struct GrundySolver {
    rules: GameRules,
    memo: HashMap<Vec<Heap>, u32>,
    cap: usize,
}

impl GrundySolver {
    pub fn new(rules: GameRules) -> Self {
        Self::with_capacity_limit(rules, DEFAULT_MEMO_CAP)
    }

    pub fn with_capacity_limit(rules: GameRules, cap: usize) -> Self {
        GrundySolver { rules, memo: HashMap::new(), cap }
    }

    pub fn rules(&self) -> &GameRules {
        &self.rules
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    pub fn grundy(&mut self, p: &Position) -> Result<Nimber> {
        self.rules.validate(p)?;
        let key = p.canonical_key();
        self.solve(key).map(Nimber)
    }

    fn solve(&mut self, key: Vec<Heap>) -> Result<u32> {
        if key.is_empty() {
            return Ok(0);
        }
        if let Some(&g) = self.memo.get(&key) {
            return Ok(g);
        }
        let p = Position { heaps: key.clone() };
        let mut successors = Vec::new();
        for m in legal_moves(&p, &self.rules)? {
            let child = apply_move(&p, &m, &self.rules)?;
            successors.push(self.solve(child.canonical_key())?);
        }
        let g = mex(successors);
        if self.memo.len() >= self.cap {
            return Err(Error::ResourceExhausted(format!("grundy memo table reached {} entries", self.cap)));
        }
        self.memo.insert(key, g);
        Ok(g)
    }
}

/// Grundy value with a fresh solver.
pub fn grundy(p: &Position, rules: &GameRules) -> Result<Nimber> {
    GrundySolver::new(rules.clone()).grundy(p)
}

/// Outcome for the player about to move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Win,
    Loss,
}

/// Plain win/loss game-tree search, independent of any nimber arithmetic.
#[derive(Debug)]
pub struct WinLossSolver {
    rules: GameRules,
    memo: HashMap<Vec<Heap>, bool>,
    cap: usize,
}

impl WinLossSolver {
    pub fn new(rules: GameRules) -> Self {
        Self::with_capacity_limit(rules, DEFAULT_MEMO_CAP)
    }

    pub fn with_capacity_limit(rules: GameRules, cap: usize) -> Self {
        WinLossSolver { rules, memo: HashMap::new(), cap }
    }

    pub fn outcome(&mut self, p: &Position) -> Result<Outcome> {
        self.rules.validate(p)?;
        let win = self.solve(p.canonical_key())?;
        Ok(if win { Outcome::Win } else { Outcome::Loss })
    }

    fn solve(&mut self, key: Vec<Heap>) -> Result<bool> {
        if key.is_empty() {
            return Ok(false);
        }
        if let Some(&w) = self.memo.get(&key) {
            return Ok(w);
        }
        let p = Position { heaps: key.clone() };
        let mut win = false;
        for m in legal_moves(&p, &self.rules)? {
            let child = apply_move(&p, &m, &self.rules)?;
            if !self.solve(child.canonical_key())? {
                win = true;
                break;
            }
        }
        if self.memo.len() >= self.cap {
            return Err(Error::ResourceExhausted(format!("win/loss memo table reached {} entries", self.cap)));
        }
        self.memo.insert(key, win);
        Ok(win)
    }
}

pub fn win_loss_oracle(p: &Position, rules: &GameRules) -> Result<Outcome> {
    WinLossSolver::new(rules.clone()).outcome(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pos(s: &str) -> Position {
        s.parse().unwrap()
    }

    #[test]
    fn nim_moves_from_single_heap() {
        let moves = legal_moves(&pos("2"), &GameRules::nim()).unwrap();
        assert_eq!(moves, vec![GameMove::new(0, 1), GameMove::new(0, 0)]);
        assert!(legal_moves(&pos("0,0"), &GameRules::nim()).unwrap().is_empty());
    }

    #[test]
    fn subtraction_moves() {
        let rules = GameRules::subtraction([1, 2]).unwrap();
        let moves = legal_moves(&pos("3"), &rules).unwrap();
        assert_eq!(moves, vec![GameMove::new(0, 2), GameMove::new(0, 1)]);
        assert_eq!(legal_moves(&pos("1"), &rules).unwrap(), vec![GameMove::new(0, 0)]);
    }

    #[test]
    fn kayles_moves_split_rows() {
        let moves = legal_moves(&pos("4"), &GameRules::kayles()).unwrap();
        // remove 1: {3}, {2,1}; remove 2: {2}, {1,1}
        assert_eq!(
            moves,
            vec![
                GameMove::split(0, 3, 0),
                GameMove::split(0, 2, 1),
                GameMove::split(0, 2, 0),
                GameMove::split(0, 1, 1)
            ]
        );
        let after = apply_move(&pos("4"), &GameMove::split(0, 1, 1), &GameRules::kayles()).unwrap();
        assert_eq!(after.heaps(), &[1, 1]);
    }

    #[test]
    fn apply_move_examples() {
        let nim = GameRules::nim();
        assert_eq!(apply_move(&pos("3,5,7"), &GameMove::new(2, 6), &nim).unwrap(), pos("3,5,6"));
        assert_eq!(apply_move(&pos("1"), &GameMove::new(0, 0), &nim).unwrap(), pos("0"));
        assert_eq!(apply_move(&pos("2,2"), &GameMove::new(1, 0), &nim).unwrap(), pos("2,0"));
    }

    #[test]
    fn apply_move_rejections() {
        let nim = GameRules::nim();
        let err = apply_move(&pos("3,5"), &GameMove::new(2, 0), &nim).unwrap_err();
        assert!(err.to_string().contains("out of range"));
        let err = apply_move(&pos("3,5"), &GameMove::new(0, 3), &nim).unwrap_err();
        assert!(err.to_string().contains("strictly decrease"));
        let sub = GameRules::subtraction([1, 2]).unwrap();
        let err = apply_move(&pos("5"), &GameMove::new(0, 1), &sub).unwrap_err();
        assert!(err.to_string().contains("removal set"));
        let err = apply_move(&pos("5"), &GameMove::split(0, 1, 1), &nim).unwrap_err();
        assert!(err.to_string().contains("kayles"));
        let err = apply_move(&pos("5"), &GameMove::split(0, 1, 1), &GameRules::kayles()).unwrap_err();
        assert!(err.to_string().contains("one or two"));
    }

    #[test]
    fn parse_rejects_bad_positions() {
        assert!(matches!("3,-1".parse::<Position>(), Err(Error::InvalidPosition(_))));
        assert!("".parse::<Position>().is_err());
        assert!(Position::new(vec![]).is_err());
        assert_eq!(pos(" 3, 5 ,7 ").heaps(), &[3, 5, 7]);
    }

    #[test]
    fn rules_parse_round_trip() {
        for s in ["nim", "kayles", "subtraction:1,2,5"] {
            assert_eq!(s.parse::<GameRules>().unwrap().to_string(), s);
        }
        assert!("subtraction:".parse::<GameRules>().is_err());
        assert!("subtraction:0,1".parse::<GameRules>().is_err());
        assert!("chomp".parse::<GameRules>().is_err());
    }

    #[test]
    fn mex_examples() {
        assert_eq!(mex([]), 0);
        assert_eq!(mex([0, 1, 3]), 2);
        assert_eq!(mex([1, 2, 3]), 0);
        assert_eq!(mex([2, 0, 1, 1]), 3);
    }

    #[test]
    fn grundy_single_nim_heap_is_its_size() {
        let mut solver = GrundySolver::new(GameRules::nim());
        for n in 0..=8 {
            assert_eq!(solver.grundy(&Position::new(vec![n]).unwrap()).unwrap(), Nimber(n));
        }
        assert_eq!(solver.grundy(&pos("3,5,7")).unwrap(), Nimber(1));
    }

    #[test]
    fn disjunctive_sum_concatenates() {
        let nim = GameRules::nim();
        let sum = disjunctive_sum(&nim, &pos("1,2"), &nim, &pos("3")).unwrap();
        assert_eq!(sum, pos("1,2,3"));
        assert_eq!(grundy(&sum, &nim).unwrap(), grundy(&pos("1,2"), &nim).unwrap() ^ grundy(&pos("3"), &nim).unwrap());
        assert_eq!(grundy(&sum, &nim).unwrap(), Nimber(0));
        let err = disjunctive_sum(&nim, &pos("1"), &GameRules::kayles(), &pos("1")).unwrap_err();
        assert!(matches!(err, Error::MixedVariants { .. }));
    }

    #[test]
    fn win_loss_examples() {
        let nim = GameRules::nim();
        assert_eq!(win_loss_oracle(&pos("0,0"), &nim).unwrap(), Outcome::Loss);
        assert_eq!(win_loss_oracle(&pos("1"), &nim).unwrap(), Outcome::Win);
        assert_eq!(win_loss_oracle(&pos("1,2,3"), &nim).unwrap(), Outcome::Loss);
    }

    #[test]
    fn memo_cap_is_an_error() {
        let mut solver = GrundySolver::with_capacity_limit(GameRules::nim(), 3);
        let err = solver.grundy(&pos("4,4,4")).unwrap_err();
        assert!(matches!(err, Error::ResourceExhausted(_)));
        let mut wl = WinLossSolver::with_capacity_limit(GameRules::nim(), 2);
        assert!(matches!(wl.outcome(&pos("5,6")), Err(Error::ResourceExhausted(_))));
    }

    #[test]
    fn heap_bound_is_enforced() {
        let rules = GameRules::nim().with_max_heap(7).unwrap();
        assert!(legal_moves(&pos("8"), &rules).is_err());
        assert!(GameRules::nim().with_max_heap(0).is_err());
    }

    #[test]
    fn move_text_round_trip() {
        for s in ["0:2", "3:0", "1:4+2"] {
            assert_eq!(s.parse::<GameMove>().unwrap().to_string(), s);
        }
        assert!("x:1".parse::<GameMove>().is_err());
    }
}
