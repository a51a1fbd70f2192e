use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matches::NimberOracle;
use crate::agents::{Agent, FrameHistory};
use crate::error::{Error, Result};
use crate::game::{apply_move, legal_moves, GameMove, GameRules, Heap, Position};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seat {
    First,
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdversaryOptions {
    /// Seeds the agent's generator (mixed with the frames it is shown).
    pub seed: u64,
    /// Distinct game-tree nodes to expand before giving up.
    pub node_budget: usize,
    /// Keep exploring opponent moves after a losing one is found, so that
    /// every missed win in the tree is counted.
    pub explore_all: bool,
}

impl Default for AdversaryOptions {
    fn default() -> Self {
        AdversaryOptions { seed: 0, node_budget: 1 << 22, explore_all: false }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AdversaryReport {
    /// True only when the whole tree was explored and no line loses.
    pub agent_always_wins: bool,
    /// Moves from the start along the first losing line found.
    pub counterexample: Option<Vec<GameMove>>,
    /// Agent-to-move nodes with a non-zero nimber that the agent goes on to
    /// lose. Exact with `explore_all`, a lower bound otherwise.
    pub missed_wins: usize,
    /// Moves from the start to the first such node.
    pub missed_example: Option<Vec<GameMove>>,
    pub complete: bool,
    pub nodes: usize,
}

/// SplitMix64 over a seed and a sequence of values.
pub(crate) fn mix(seed: u64, values: impl IntoIterator<Item = u64>) -> u64 {
    let step = |mut z: u64| {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    values.into_iter().fold(step(seed), |acc, v| step(acc ^ step(v)))
}

type NodeKey = (Vec<Vec<Heap>>, bool);

struct Search<'a> {
    rules: &'a GameRules,
    agent: &'a dyn Agent,
    opts: AdversaryOptions,
    frames_kept: usize,
    memo: HashMap<NodeKey, bool>,
    oracle: NimberOracle,
    report: AdversaryReport,
    line: Vec<GameMove>,
}

enum Step {
    OutOfBudget,
    Fail(Error),
}

impl From<Error> for Step {
    fn from(e: Error) -> Self {
        Step::Fail(e)
    }
}

impl<'a> Search<'a> {
    fn key(&self, h: &FrameHistory, agent_to_move: bool) -> NodeKey {
        let frames = h.frames().rev().take(self.frames_kept).map(|p| p.heaps().to_vec()).collect();
        (frames, agent_to_move)
    }

    fn agent_move(&self, h: &FrameHistory) -> Result<GameMove> {
        let values =
            h.frames().rev().take(self.frames_kept).flat_map(|p| {
                p.heaps().iter().map(|&x| u64::from(x)).chain(std::iter::once(u64::MAX)).collect::<Vec<_>>()
            });
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.opts.seed, values));
        let m = self.agent.choose(self.rules, h, &mut rng)?;
        apply_move(h.current(), &m, self.rules)?;
        Ok(m)
    }

    /// Whether the agent wins from this node against every opponent line.
    fn solve(&mut self, h: &FrameHistory, agent_to_move: bool) -> Result<bool, Step> {
        if h.current().is_terminal() {
            // whoever just moved took the last object
            return Ok(!agent_to_move);
        }
        let key = self.key(h, agent_to_move);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        self.report.nodes += 1;
        if self.report.nodes > self.opts.node_budget {
            return Err(Step::OutOfBudget);
        }
        let wins = if agent_to_move {
            match self.agent_move(h) {
                Ok(m) => {
                    let mut child = h.clone();
                    child.push(m, self.rules)?;
                    self.line.push(m);
                    let v = self.solve(&child, false);
                    self.line.pop();
                    v?
                }
                // an erroring or illegal agent forfeits
                Err(_) => false,
            }
        } else {
            let mut all = true;
            for m in legal_moves(h.current(), self.rules)? {
                let mut child = h.clone();
                child.push(m, self.rules)?;
                self.line.push(m);
                let v = self.solve(&child, true);
                self.line.pop();
                if !v? {
                    all = false;
                    if !self.opts.explore_all {
                        break;
                    }
                }
            }
            all
        };
        if agent_to_move && !wins && self.oracle.nimber(h.current())? != 0 {
            self.report.missed_wins += 1;
            if self.report.missed_example.is_none() {
                self.report.missed_example = Some(self.line.clone());
            }
        }
        self.memo.insert(key, wins);
        Ok(wins)
    }

    /// Follows a losing line from a node known to lose.
    fn losing_line(&mut self, h: &FrameHistory, agent_to_move: bool) -> Result<Vec<GameMove>> {
        let mut h = h.clone();
        let mut to_move = agent_to_move;
        let mut line = Vec::new();
        while !h.current().is_terminal() {
            let m = if to_move {
                match self.agent_move(&h) {
                    Ok(m) => m,
                    Err(_) => break,
                }
            } else {
                let losing = legal_moves(h.current(), self.rules)?.into_iter().find(|m| {
                    let mut child = h.clone();
                    child.push(*m, self.rules).is_ok()
                        && (child.current().is_terminal() || self.memo.get(&self.key(&child, true)) == Some(&false))
                });
                losing.ok_or_else(|| Error::Agent("losing line lost track of the memo".into()))?
            };
            h.push(m, self.rules)?;
            line.push(m);
            to_move = !to_move;
        }
        Ok(line)
    }
}

/// Plays `agent` from `start` against every possible opponent line.
/// The agent's decisions are memoized on its last `decision_frames` frames,
/// with its generator seeded from those frames so repeated nodes agree.
pub fn exhaustive_adversary(
    rules: &GameRules,
    start: &Position,
    agent: &dyn Agent,
    seat: Seat,
    opts: AdversaryOptions,
) -> Result<AdversaryReport> {
    rules.validate(start)?;
    if start.is_terminal() {
        return Err(Error::TerminalPosition);
    }
    let frames_kept = agent.decision_frames().max(1);
    let mut search = Search {
        rules,
        agent,
        opts,
        frames_kept,
        memo: HashMap::new(),
        oracle: NimberOracle::new(rules),
        report: AdversaryReport::default(),
        line: Vec::new(),
    };
    let root = FrameHistory::new(agent.required_frames().max(frames_kept), start.clone())?;
    let agent_first = seat == Seat::First;
    match search.solve(&root, agent_first) {
        Ok(wins) => {
            search.report.complete = true;
            search.report.agent_always_wins = wins;
            if !wins {
                search.report.counterexample = Some(search.losing_line(&root, agent_first)?);
            }
        }
        Err(Step::OutOfBudget) => {
            search.report.complete = false;
            search.report.agent_always_wins = false;
        }
        Err(Step::Fail(e)) => return Err(e),
    }
    Ok(search.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{MultiframeAgent, OracleAgent, RandomAgent};

    fn pos(s: &str) -> Position {
        s.parse().unwrap()
    }

    #[test]
    fn multiframe_always_wins_357() {
        let r = exhaustive_adversary(
            &GameRules::nim(),
            &pos("3,5,7"),
            &MultiframeAgent::default(),
            Seat::First,
            AdversaryOptions::default(),
        )
        .unwrap();
        assert!(r.complete && r.agent_always_wins, "{r:?}");
        assert_eq!(r.missed_wins, 0);
    }

    #[test]
    fn random_agent_has_counterexample() {
        let nim = GameRules::nim();
        let r =
            exhaustive_adversary(&nim, &pos("3,5,7"), &RandomAgent, Seat::First, AdversaryOptions::default()).unwrap();
        assert!(r.complete && !r.agent_always_wins);
        let line = r.counterexample.unwrap();
        let mut p = pos("3,5,7");
        for m in &line {
            p = apply_move(&p, m, &nim).unwrap();
        }
        assert!(p.is_terminal());
        // the opponent, moving second, made the last move
        assert_eq!(line.len() % 2, 0);
        assert!(r.missed_wins > 0);
    }

    #[test]
    fn oracle_as_second_player_never_misses() {
        let opts = AdversaryOptions { explore_all: true, ..AdversaryOptions::default() };
        let r =
            exhaustive_adversary(&GameRules::nim(), &pos("2,3,4"), &OracleAgent::new(), Seat::Second, opts).unwrap();
        assert!(r.complete);
        assert_eq!(r.missed_wins, 0);
        assert!(!r.agent_always_wins);
    }

    #[test]
    fn terminal_start_and_budget() {
        let nim = GameRules::nim();
        assert!(
            exhaustive_adversary(&nim, &pos("0,0"), &RandomAgent, Seat::First, AdversaryOptions::default()).is_err()
        );
        let tiny = AdversaryOptions { node_budget: 3, ..AdversaryOptions::default() };
        let r = exhaustive_adversary(&nim, &pos("3,5,7"), &OracleAgent::new(), Seat::First, tiny).unwrap();
        assert!(!r.complete && !r.agent_always_wins);
    }

    #[test]
    fn mix_is_order_sensitive() {
        assert_ne!(mix(1, [1, 2]), mix(1, [2, 1]));
        assert_eq!(mix(5, [3]), mix(5, [3]));
    }
}
