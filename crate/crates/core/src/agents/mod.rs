//! Playing policies behind one interface. Every agent sees a [`FrameHistory`]
//! (the last few positions and the moves joining them) and returns a legal
//! move for the newest frame.

mod basic;
mod mirror;
mod rollout;
mod singleframe;

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::RngCore;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::game::{apply_move, legal_moves, GameMove, GameRules, Position};

pub use basic::{OracleAgent, RandomAgent};
pub use mirror::{Mirror71Agent, Mirror72Agent, MirrorRole};
pub use rollout::{
    preserving_reply, preserving_reply_via_circuit, rollout, MultiframeAgent, PreservationMode, RolloutBudget,
    RolloutEnd, RolloutOutcome,
};
pub use singleframe::{heuristic_baseline_circuit, SingleFrameAgent};

/// The most recent `capacity` positions, oldest first, and the moves
/// between them. Frames are only ever added by applying a legal move, so
/// consecutive frames always differ by exactly one move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameHistory {
    capacity: usize,
    frames: VecDeque<Position>,
    moves: VecDeque<GameMove>,
}

impl FrameHistory {
    pub fn new(capacity: usize, start: Position) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Agent("frame history needs capacity ≥ 1".into()));
        }
        Ok(FrameHistory { capacity, frames: VecDeque::from([start]), moves: VecDeque::new() })
    }

    /// Builds a history from consecutive frames, recovering the joining moves.
    pub fn from_frames(capacity: usize, frames: &[Position], rules: &GameRules) -> Result<Self> {
        let (first, rest) = frames.split_first().ok_or_else(|| Error::Agent("no frames given".into()))?;
        let mut h = FrameHistory::new(capacity, first.clone())?;
        for next in rest {
            let mv = legal_moves(h.current(), rules)?
                .into_iter()
                .find(|m| apply_move(h.current(), m, rules).is_ok_and(|q| &q == next))
                .ok_or_else(|| Error::Agent(format!("{next} is not one move away from {}", h.current())))?;
            h.push(mv, rules)?;
        }
        Ok(h)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn current(&self) -> &Position {
        self.frames.back().expect("history always holds a frame")
    }

    /// The frame before the newest one, if retained.
    pub fn previous(&self) -> Option<&Position> {
        self.frames.len().checked_sub(2).map(|i| &self.frames[i])
    }

    pub fn frames(&self) -> impl DoubleEndedIterator<Item = &Position> + ExactSizeIterator {
        self.frames.iter()
    }

    pub fn moves(&self) -> impl DoubleEndedIterator<Item = &GameMove> + ExactSizeIterator {
        self.moves.iter()
    }

    pub fn last_move(&self) -> Option<&GameMove> {
        self.moves.back()
    }

    pub fn push(&mut self, mv: GameMove, rules: &GameRules) -> Result<()> {
        let next = apply_move(self.current(), &mv, rules)?;
        self.frames.push_back(next);
        self.moves.push_back(mv);
        while self.frames.len() > self.capacity {
            self.frames.pop_front();
            self.moves.pop_front();
        }
        Ok(())
    }

    /// The same history truncated to its newest `capacity` frames.
    pub fn view(&self, capacity: usize) -> Result<FrameHistory> {
        if capacity == 0 {
            return Err(Error::Agent("frame history needs capacity ≥ 1".into()));
        }
        let mut h = self.clone();
        h.capacity = capacity;
        while h.frames.len() > h.capacity {
            h.frames.pop_front();
            h.moves.pop_front();
        }
        Ok(h)
    }
}

pub trait Agent: Send + Sync {
    fn id(&self) -> String;

    /// Frames of history the agent wants to see.
    fn required_frames(&self) -> usize {
        1
    }

    /// Newest frames that actually influence `choose`; exhaustive search
    /// memoizes decisions on exactly these.
    fn decision_frames(&self) -> usize {
        self.required_frames()
    }

    fn choose(&self, rules: &GameRules, history: &FrameHistory, rng: &mut dyn RngCore) -> Result<GameMove>;
}

impl<A: Agent + ?Sized> Agent for Box<A> {
    fn id(&self) -> String {
        (**self).id()
    }

    fn required_frames(&self) -> usize {
        (**self).required_frames()
    }

    fn decision_frames(&self) -> usize {
        (**self).decision_frames()
    }

    fn choose(&self, rules: &GameRules, history: &FrameHistory, rng: &mut dyn RngCore) -> Result<GameMove> {
        (**self).choose(rules, history, rng)
    }
}

/// Legal moves sorted for deterministic tie-breaking.
pub(crate) fn tie_break_moves(p: &Position, rules: &GameRules) -> Result<Vec<GameMove>> {
    let mut moves = legal_moves(p, rules)?;
    moves.sort_by_key(GameMove::tie_break_key);
    Ok(moves)
}

pub(crate) fn reject_terminal(p: &Position) -> Result<()> {
    if p.is_terminal() {
        Err(Error::TerminalPosition)
    } else {
        Ok(())
    }
}

pub(crate) fn require_nim(rules: &GameRules, who: &str) -> Result<()> {
    if rules.is_nim() {
        Ok(())
    } else {
        Err(Error::InvalidRules(format!("the {who} agent plays NIM only, not {rules}")))
    }
}

/// Agent selection by name, as accepted on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AgentSpec {
    Oracle,
    Random,
    SingleFrameHeuristic,
    SingleFrameFile(String),
    Multiframe,
    Mirror71 { k: usize },
    Mirror72 { k: usize, role: MirrorRole },
}

impl FromStr for AgentSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Config(format!("bad agent {s:?}: {why}"));
        let parse_k =
            |t: &str| t.parse::<usize>().ok().filter(|&k| k >= 1).ok_or_else(|| bad("k must be a positive integer"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["oracle"] => Ok(AgentSpec::Oracle),
            ["random"] => Ok(AgentSpec::Random),
            ["multiframe"] => Ok(AgentSpec::Multiframe),
            ["singleframe", "heuristic"] => Ok(AgentSpec::SingleFrameHeuristic),
            ["singleframe", path @ ..] if !path.is_empty() => Ok(AgentSpec::SingleFrameFile(path.join(":"))),
            ["mirror71", k] => Ok(AgentSpec::Mirror71 { k: parse_k(k)? }),
            ["mirror72", k, role] => Ok(AgentSpec::Mirror72 { k: parse_k(k)?, role: role.parse()? }),
            _ => Err(bad("expected oracle | random | singleframe:<file|heuristic> | multiframe | mirror71:<k> | mirror72:<k>:<p1|p2>")),
        }
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentSpec::Oracle => f.write_str("oracle"),
            AgentSpec::Random => f.write_str("random"),
            AgentSpec::SingleFrameHeuristic => f.write_str("singleframe:heuristic"),
            AgentSpec::SingleFrameFile(path) => write!(f, "singleframe:{path}"),
            AgentSpec::Multiframe => f.write_str("multiframe"),
            AgentSpec::Mirror71 { k } => write!(f, "mirror71:{k}"),
            AgentSpec::Mirror72 { k, role } => write!(f, "mirror72:{k}:{role}"),
        }
    }
}

impl AgentSpec {
    pub fn build(&self, budget: RolloutBudget) -> Result<Box<dyn Agent>> {
        Ok(match self {
            AgentSpec::Oracle => Box::new(OracleAgent::new()),
            AgentSpec::Random => Box::new(RandomAgent),
            AgentSpec::SingleFrameHeuristic => Box::new(SingleFrameAgent::heuristic()),
            AgentSpec::SingleFrameFile(path) => {
                let text = std::fs::read_to_string(Path::new(path))?;
                Box::new(SingleFrameAgent::new(Circuit::from_text(&text)?).with_id(self.to_string()))
            }
            AgentSpec::Multiframe => Box::new(MultiframeAgent::new(budget)),
            AgentSpec::Mirror71 { k } => Box::new(Mirror71Agent::new(*k)),
            AgentSpec::Mirror72 { k, role } => Box::new(Mirror72Agent::new(*k, *role)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pos(s: &str) -> Position {
        s.parse().unwrap()
    }

    #[test]
    fn history_truncates_to_capacity() {
        let rules = GameRules::nim();
        let mut h = FrameHistory::new(2, pos("3,5")).unwrap();
        h.push(GameMove::new(0, 1), &rules).unwrap();
        h.push(GameMove::new(1, 2), &rules).unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(h.previous(), Some(&pos("1,5")));
        assert_eq!(h.current(), &pos("1,2"));
        assert_eq!(h.moves().collect::<Vec<_>>(), vec![&GameMove::new(1, 2)]);
        assert!(h.push(GameMove::new(1, 4), &rules).is_err());
        assert_eq!(h.view(1).unwrap().len(), 1);
    }

    #[test]
    fn history_from_frames_recovers_moves() {
        let rules = GameRules::nim();
        let h = FrameHistory::from_frames(3, &[pos("2,2"), pos("2,0"), pos("1,0")], &rules).unwrap();
        assert_eq!(h.moves().copied().collect::<Vec<_>>(), vec![GameMove::new(1, 0), GameMove::new(0, 1)]);
        assert!(FrameHistory::from_frames(3, &[pos("2,2"), pos("0,0")], &rules).is_err());
        assert!(FrameHistory::new(0, pos("1")).is_err());
    }

    #[test]
    fn spec_parsing_round_trips() {
        for s in [
            "oracle",
            "random",
            "singleframe:heuristic",
            "singleframe:/tmp/a.ac0",
            "multiframe",
            "mirror71:3",
            "mirror72:2:p1",
            "mirror72:4:p2",
        ] {
            assert_eq!(s.parse::<AgentSpec>().unwrap().to_string(), s);
        }
        for s in ["", "oracle:1", "mirror71", "mirror71:0", "mirror72:2", "mirror72:2:p3", "alpha"] {
            assert!(s.parse::<AgentSpec>().is_err(), "{s}");
        }
    }
}
