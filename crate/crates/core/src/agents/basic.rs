use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::RngCore;

use super::{reject_terminal, tie_break_moves, Agent, FrameHistory};
use crate::error::{Error, Result};
use crate::game::{apply_move, GameMove, GameRules, GrundySolver};
use crate::nimber::winning_moves;

/// Perfect play: moves to a zero-nimber position when one is reachable,
/// otherwise makes the tie-break-minimal legal move.
#[derive(Debug, Default)]
pub struct OracleAgent {
    solver: Mutex<Option<GrundySolver>>,
}

impl OracleAgent {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Agent for OracleAgent {
    fn id(&self) -> String {
        "oracle".into()
    }

    fn choose(&self, rules: &GameRules, history: &FrameHistory, _rng: &mut dyn RngCore) -> Result<GameMove> {
        let p = history.current();
        reject_terminal(p)?;
        if rules.is_nim() {
            rules.validate(p)?;
            if let Some(&m) = winning_moves(p).first() {
                return Ok(m);
            }
            return tie_break_moves(p, rules)?.first().copied().ok_or(Error::TerminalPosition);
        }
        let moves = tie_break_moves(p, rules)?;
        let mut guard = self.solver.lock().unwrap_or_else(|e| e.into_inner());
        if guard.as_ref().is_none_or(|s| s.rules() != rules) {
            *guard = Some(GrundySolver::new(rules.clone()));
        }
        let solver = guard.as_mut().expect("solver initialized above");
        for m in &moves {
            if solver.grundy(&apply_move(p, m, rules)?)?.is_zero() {
                return Ok(*m);
            }
        }
        moves.first().copied().ok_or(Error::TerminalPosition)
    }
}

/// Uniformly random legal move.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomAgent;

impl Agent for RandomAgent {
    fn id(&self) -> String {
        "random".into()
    }

    fn choose(&self, rules: &GameRules, history: &FrameHistory, mut rng: &mut dyn RngCore) -> Result<GameMove> {
        let p = history.current();
        reject_terminal(p)?;
        let moves = tie_break_moves(p, rules)?;
        moves.choose(&mut rng).copied().ok_or(Error::TerminalPosition)
    }
}
