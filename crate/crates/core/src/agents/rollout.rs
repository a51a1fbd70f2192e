//! Nimber-preserving rollouts and the multi-frame agent built on them.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{reject_terminal, require_nim, tie_break_moves, Agent, FrameHistory, RandomAgent};
use crate::circuit::MoveValidator;
use crate::error::{Error, Result};
use crate::game::{apply_move, legal_moves, GameMove, GameRules, Heap, Nimber, Position};
use crate::nimber::{diff_mask, nimber_diff, DEFAULT_K_MAX};

/// How an agent reply is judged to "preserve" the nimber.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreservationMode {
    /// The reply returns the nimber to its value before the opponent's move:
    /// `nimber_diff(p_before, result) = 0`.
    #[default]
    Restore,
    /// The reply's own local change equals the change of the move that
    /// started the rollout: `nimber_diff(prev, p) = nimber_diff(q, result)`.
    Literal,
}

impl FromStr for PreservationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "restore" => Ok(PreservationMode::Restore),
            "literal" => Ok(PreservationMode::Literal),
            other => Err(Error::Config(format!("unknown preservation mode {other:?}"))),
        }
    }
}

impl fmt::Display for PreservationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PreservationMode::Restore => "restore",
            PreservationMode::Literal => "literal",
        })
    }
}

/// The reply to an opponent move `p_before → q_after` that restores the
/// nimber held at `p_before`, found from the (at most two) heaps that end up
/// differing. `None` when `q_after` is terminal or no such reply exists.
pub fn preserving_reply(p_before: &Position, q_after: &Position) -> Result<Option<GameMove>> {
    let mask = diff_mask(p_before, q_after)?;
    if mask.len() != 1 {
        return Err(Error::ContractViolation(format!(
            "a single opponent move changes exactly one heap; {p_before} and {q_after} differ in {}",
            mask.len()
        )));
    }
    let i = mask.changed()[0];
    let delta = Nimber(p_before.heaps()[i] ^ q_after.heaps()[i]);
    let Some(mv) = reply_with_change(q_after, delta, Some(i)) else {
        return Ok(None);
    };
    let result = apply_move(q_after, &mv, &GameRules::nim())?;
    debug_assert!(nimber_diff(p_before, &result, DEFAULT_K_MAX)?.is_zero());
    Ok(Some(mv))
}

/// Lowest-index move whose local nimber change is `delta`, skipping `skip`.
fn reply_with_change(q: &Position, delta: Nimber, skip: Option<usize>) -> Option<GameMove> {
    if delta.is_zero() {
        return None;
    }
    q.heaps().iter().enumerate().filter(|&(j, _)| Some(j) != skip).find_map(|(j, &h)| {
        let r = h ^ delta.value();
        (r < h).then(|| GameMove::new(j, r))
    })
}

/// The same reply read off the move-validator circuit, with frames
/// (p_before, q_after, q_after): a candidate validates when its local change
/// matches the opponent's, which restores the earlier nimber.
pub fn preserving_reply_via_circuit(
    validator: &MoveValidator,
    p_before: &Position,
    q_after: &Position,
) -> Result<Option<GameMove>> {
    let mask = diff_mask(p_before, q_after)?;
    if mask.len() != 1 {
        return Err(Error::ContractViolation(format!(
            "a single opponent move changes exactly one heap; {p_before} and {q_after} differ in {}",
            mask.len()
        )));
    }
    Ok(validator.validated_moves(p_before, q_after, q_after)?.into_iter().next())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RolloutEnd {
    AgentWin,
    OpponentWin,
    PlyCap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RolloutOutcome {
    pub end: RolloutEnd,
    /// The game was unfinished and no preserving reply existed; scored as
    /// an opponent win.
    pub preservation_failed: bool,
    pub plies: usize,
    pub transcript: Vec<GameMove>,
}

impl RolloutOutcome {
    pub fn agent_won(&self) -> bool {
        self.end == RolloutEnd::AgentWin
    }
}

fn literal_reference(history: &FrameHistory) -> Result<Nimber> {
    let prev = history
        .previous()
        .ok_or_else(|| Error::Agent("literal preservation needs the frame before the agent's move".into()))?;
    nimber_diff(prev, history.current(), DEFAULT_K_MAX)
}

/// Plays on from the newest frame (the position the agent just moved to):
/// the opponent moves, the agent answers with a preserving reply, until the
/// game ends, no reply exists, or `ply_cap` plies have been played.
pub fn rollout(
    rules: &GameRules,
    history: &FrameHistory,
    opponent: &dyn Agent,
    mode: PreservationMode,
    seed: u64,
    ply_cap: usize,
) -> Result<RolloutOutcome> {
    require_nim(rules, "rollout")?;
    let reference = match mode {
        PreservationMode::Restore => Nimber::ZERO,
        PreservationMode::Literal => literal_reference(history)?,
    };
    let mut h = history.view(history.capacity().max(opponent.required_frames()).max(2))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transcript = Vec::new();
    let finish = |end, preservation_failed, transcript: Vec<GameMove>| {
        Ok(RolloutOutcome { end, preservation_failed, plies: transcript.len(), transcript })
    };
    loop {
        if h.current().is_terminal() {
            return finish(RolloutEnd::AgentWin, false, transcript);
        }
        if transcript.len() >= ply_cap {
            return finish(RolloutEnd::PlyCap, false, transcript);
        }
        let before = h.current().clone();
        let m = opponent.choose(rules, &h, &mut rng)?;
        h.push(m, rules)?;
        transcript.push(m);
        if h.current().is_terminal() {
            return finish(RolloutEnd::OpponentWin, false, transcript);
        }
        let reply = match mode {
            PreservationMode::Restore => preserving_reply(&before, h.current())?,
            PreservationMode::Literal => reply_with_change(h.current(), reference, None),
        };
        match reply {
            Some(r) => {
                h.push(r, rules)?;
                transcript.push(r);
            }
            None => return finish(RolloutEnd::OpponentWin, true, transcript),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RolloutBudget {
    /// Candidates whose game tree has at most this many positions (bounded by
    /// the product of heap sizes plus one) are checked against every opponent line.
    pub exhaustive_cap: u64,
    /// Random-opponent rollouts per candidate otherwise.
    pub samples: usize,
    pub ply_cap: usize,
    pub mode: PreservationMode,
}

impl Default for RolloutBudget {
    fn default() -> Self {
        RolloutBudget { exhaustive_cap: 4096, samples: 32, ply_cap: 10_000, mode: PreservationMode::Restore }
    }
}

fn tree_bound(p: &Position) -> u64 {
    p.heaps().iter().fold(1u64, |acc, &h| acc.saturating_mul(u64::from(h) + 1))
}

#[derive(Clone, Copy, Debug)]
struct LineValue {
    all_win: bool,
    /// Win probability against a uniformly random opponent.
    win_rate: f64,
}

type ExhaustiveMemo = HashMap<(Vec<Heap>, u32), LineValue>;

/// Exhaustive values are pure functions of (position, reference change), so
/// one table is shared by every decision; it is cleared when it grows past this.
const MEMO_LIMIT: usize = 1 << 20;

/// Value of `state` (opponent to move) over every opponent line, with the
/// agent answering by preserving replies.
fn exhaustive_value(
    state: &Position,
    mode: PreservationMode,
    reference: Nimber,
    memo: &mut ExhaustiveMemo,
) -> Result<LineValue> {
    if state.is_terminal() {
        return Ok(LineValue { all_win: true, win_rate: 1.0 });
    }
    let key = (state.heaps().to_vec(), reference.value());
    if let Some(&v) = memo.get(&key) {
        return Ok(v);
    }
    let nim = GameRules::nim();
    let moves = legal_moves(state, &nim)?;
    let mut all_win = true;
    let mut total = 0.0;
    for m in &moves {
        let q = apply_move(state, m, &nim)?;
        if q.is_terminal() {
            all_win = false;
            continue;
        }
        let reply = match mode {
            PreservationMode::Restore => preserving_reply(state, &q)?,
            PreservationMode::Literal => reply_with_change(&q, reference, None),
        };
        let Some(r) = reply else {
            all_win = false;
            continue;
        };
        let child = exhaustive_value(&apply_move(&q, &r, &nim)?, mode, reference, memo)?;
        all_win &= child.all_win;
        total += child.win_rate;
    }
    let v = LineValue { all_win, win_rate: total / moves.len() as f64 };
    memo.insert(key, v);
    Ok(v)
}

/// Two-frame agent: for each candidate move, rolls out nimber-preserving
/// play against every opponent line (small trees) or against seeded random
/// opponents, and takes the first candidate whose rollouts are all wins.
/// Otherwise the candidate with the best win rate is played.
#[derive(Clone, Debug, Default)]
pub struct MultiframeAgent {
    budget: RolloutBudget,
    memo: Arc<Mutex<ExhaustiveMemo>>,
}

impl MultiframeAgent {
    pub fn new(budget: RolloutBudget) -> Self {
        MultiframeAgent { budget, memo: Arc::default() }
    }

    pub fn budget(&self) -> &RolloutBudget {
        &self.budget
    }

    fn sample_seeds(&self, seed: u64) -> impl Iterator<Item = u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.budget.samples).map(move |_| rng.next_u64())
    }

    fn candidate_value(
        &self,
        p: &Position,
        q: &Position,
        mv: &GameMove,
        seed: u64,
        first_loss_stops: bool,
    ) -> Result<LineValue> {
        if q.is_terminal() {
            return Ok(LineValue { all_win: true, win_rate: 1.0 });
        }
        let rules = GameRules::nim();
        let mut h = FrameHistory::new(2, p.clone())?;
        h.push(*mv, &rules)?;
        if tree_bound(q) <= self.budget.exhaustive_cap {
            let reference = match self.budget.mode {
                PreservationMode::Restore => Nimber::ZERO,
                PreservationMode::Literal => literal_reference(&h)?,
            };
            let mut memo = self.memo.lock().unwrap_or_else(|e| e.into_inner());
            if memo.len() > MEMO_LIMIT {
                memo.clear();
            }
            return exhaustive_value(q, self.budget.mode, reference, &mut memo);
        }
        if self.budget.samples == 0 {
            return Ok(LineValue { all_win: false, win_rate: 0.0 });
        }
        let mut wins = 0usize;
        for s in self.sample_seeds(seed) {
            let out = rollout(&rules, &h, &RandomAgent, self.budget.mode, s, self.budget.ply_cap)?;
            if out.agent_won() {
                wins += 1;
            } else if first_loss_stops {
                return Ok(LineValue { all_win: false, win_rate: 0.0 });
            }
        }
        Ok(LineValue { all_win: wins == self.budget.samples, win_rate: wins as f64 / self.budget.samples as f64 })
    }
}

impl Agent for MultiframeAgent {
    fn id(&self) -> String {
        "multiframe".into()
    }

    fn required_frames(&self) -> usize {
        2
    }

    /// Rollouts start from the candidate moves of the newest frame only.
    fn decision_frames(&self) -> usize {
        1
    }

    fn choose(&self, rules: &GameRules, history: &FrameHistory, rng: &mut dyn RngCore) -> Result<GameMove> {
        require_nim(rules, "multiframe")?;
        let p = history.current();
        reject_terminal(p)?;
        rules.validate(p)?;
        let candidates = tie_break_moves(p, rules)?;
        let seeds: Vec<u64> = candidates.iter().map(|_| rng.next_u64()).collect();
        let mut children = Vec::with_capacity(candidates.len());
        for (mv, &seed) in candidates.iter().zip(&seeds) {
            let q = apply_move(p, mv, rules)?;
            if self.candidate_value(p, &q, mv, seed, true)?.all_win {
                return Ok(*mv);
            }
            children.push(q);
        }
        let mut best: Option<(GameMove, f64)> = None;
        for ((mv, &seed), q) in candidates.iter().zip(&seeds).zip(&children) {
            let v = self.candidate_value(p, q, mv, seed, false)?;
            if best.is_none_or(|(_, rate)| v.win_rate > rate) {
                best = Some((*mv, v.win_rate));
            }
        }
        best.map(|(mv, _)| mv).ok_or(Error::TerminalPosition)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::OracleAgent;
    use crate::circuit::{build_move_validator_circuit, PositionEncoding};
    use crate::nimber::{nim_sum, BitWidth};

    fn pos(s: &str) -> Position {
        s.parse().unwrap()
    }

    #[test]
    fn preserving_reply_examples() {
        assert_eq!(preserving_reply(&pos("1,1"), &pos("0,1")).unwrap(), Some(GameMove::new(1, 0)));
        assert_eq!(preserving_reply(&pos("2,5,7"), &pos("2,1,7")).unwrap(), Some(GameMove::new(2, 3)));
        assert_eq!(preserving_reply(&pos("1"), &pos("0")).unwrap(), None);
        assert!(matches!(preserving_reply(&pos("1,1"), &pos("0,0")), Err(Error::ContractViolation(_))));
        assert!(matches!(preserving_reply(&pos("1,1"), &pos("1,1")), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn preserving_reply_against_brute_force() {
        let nim = GameRules::nim();
        for a in 0..=5u32 {
            for b in 0..=5 {
                for c in 0..=5 {
                    let p = Position::new(vec![a, b, c]).unwrap();
                    for m in legal_moves(&p, &nim).unwrap() {
                        let q = apply_move(&p, &m, &nim).unwrap();
                        let brute = legal_moves(&q, &nim)
                            .unwrap()
                            .into_iter()
                            .filter(|r| nim_sum(&apply_move(&q, r, &nim).unwrap()) == nim_sum(&p))
                            .min_by_key(GameMove::tie_break_key);
                        assert_eq!(preserving_reply(&p, &q).unwrap(), brute, "{p} -> {q}");
                    }
                }
            }
        }
    }

    #[test]
    fn circuit_reply_matches_closed_form() {
        let v = build_move_validator_circuit(PositionEncoding::three_frame(3, BitWidth::new(3).unwrap()).unwrap(), 2)
            .unwrap();
        let nim = GameRules::nim();
        for p in ["2,5,7", "1,1,0", "3,4,7", "6,6,1"] {
            let p = pos(p);
            for m in legal_moves(&p, &nim).unwrap() {
                let q = apply_move(&p, &m, &nim).unwrap();
                let closed = preserving_reply(&p, &q).unwrap();
                let via = preserving_reply_via_circuit(&v, &p, &q).unwrap();
                assert_eq!(closed.is_some(), via.is_some(), "{p} -> {q}");
                if let Some(r) = via {
                    assert_eq!(nim_sum(&apply_move(&q, &r, &nim).unwrap()), nim_sum(&p));
                }
            }
        }
    }

    #[test]
    fn rollout_examples() {
        let nim = GameRules::nim();
        let mut h = FrameHistory::new(2, pos("1,1,1")).unwrap();
        h.push(GameMove::new(2, 0), &nim).unwrap();
        for seed in 0..10 {
            let out = rollout(&nim, &h, &RandomAgent, PreservationMode::Restore, seed, 100).unwrap();
            assert_eq!(out.end, RolloutEnd::AgentWin);
            assert!(!out.preservation_failed);
            assert_eq!(out.plies, 2);
        }
        let done = FrameHistory::new(1, pos("0,0")).unwrap();
        let out = rollout(&nim, &done, &RandomAgent, PreservationMode::Restore, 0, 100).unwrap();
        assert_eq!((out.end, out.plies), (RolloutEnd::AgentWin, 0));

        let capped = FrameHistory::new(1, pos("3,3")).unwrap();
        let out = rollout(&nim, &capped, &RandomAgent, PreservationMode::Restore, 0, 0).unwrap();
        assert_eq!(out.end, RolloutEnd::PlyCap);
    }

    #[test]
    fn rollout_from_nonzero_position_can_fail() {
        let nim = GameRules::nim();
        let h = FrameHistory::new(1, pos("2,2,1")).unwrap();
        let mut memo = ExhaustiveMemo::new();
        let v = exhaustive_value(h.current(), PreservationMode::Restore, Nimber::ZERO, &mut memo).unwrap();
        assert!(!v.all_win);
        let failed = (0..50).any(|seed| {
            let out = rollout(&nim, &h, &OracleAgent::new(), PreservationMode::Restore, seed, 100).unwrap();
            out.preservation_failed || out.end == RolloutEnd::OpponentWin
        });
        assert!(failed);
    }

    #[test]
    fn literal_mode_needs_previous_frame() {
        let nim = GameRules::nim();
        let h = FrameHistory::new(2, pos("1,1")).unwrap();
        assert!(rollout(&nim, &h, &RandomAgent, PreservationMode::Literal, 0, 10).is_err());
        assert!(rollout(&GameRules::kayles(), &h, &RandomAgent, PreservationMode::Restore, 0, 10).is_err());
    }

    fn multiframe_choice(p: &str) -> GameMove {
        let h = FrameHistory::new(2, pos(p)).unwrap();
        MultiframeAgent::default().choose(&GameRules::nim(), &h, &mut ChaCha8Rng::seed_from_u64(3)).unwrap()
    }

    #[test]
    fn multiframe_examples() {
        let m = multiframe_choice("3,5,7");
        assert!([GameMove::new(0, 2), GameMove::new(1, 4), GameMove::new(2, 6)].contains(&m));
        assert_eq!(multiframe_choice("1"), GameMove::new(0, 0));
        // losing position: the fallback picks some legal move
        let m = multiframe_choice("3,3");
        assert!(apply_move(&pos("3,3"), &m, &GameRules::nim()).is_ok());
    }

    #[test]
    fn multiframe_sampled_finds_zero_child() {
        let agent = MultiframeAgent::new(RolloutBudget { exhaustive_cap: 0, samples: 8, ..RolloutBudget::default() });
        let p = pos("9,12,14,3,7");
        let h = FrameHistory::new(2, p.clone()).unwrap();
        let m = agent.choose(&GameRules::nim(), &h, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert!(nim_sum(&apply_move(&p, &m, &GameRules::nim()).unwrap()).is_zero());
    }
}
