use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{Agent, FrameHistory};
use crate::error::{Error, Result};
use crate::game::{apply_move, GameMove, GameRules, GrundySolver, Position};
use crate::nimber::nim_sum;

/// Name of the generator behind every seeded stream, recorded in outputs.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.3, seed_from_u64, one stream per player)";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveRecord {
    /// 0 for the first mover, 1 for the second.
    pub player: usize,
    #[serde(rename = "move")]
    pub mv: GameMove,
    pub nimber_before: u32,
    pub nimber_after: u32,
    /// Whether the move returned the nimber to its value before the
    /// opponent's previous move; absent for the first two plies.
    pub preserved: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Forfeit {
    pub player: usize,
    pub attempted: Option<GameMove>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub rules: String,
    pub start: Position,
    pub agents: [String; 2],
    pub seed: u64,
    pub moves: Vec<MoveRecord>,
    pub winner: usize,
    pub forfeit: Option<Forfeit>,
}

impl MatchRecord {
    pub fn plies(&self) -> usize {
        self.moves.len()
    }

    /// Replies by `player` that let a zero nimber it had handed over stay
    /// non-zero after its answer.
    pub fn preservation_failures(&self, player: usize) -> usize {
        self.moves
            .windows(2)
            .skip(1)
            .filter(|w| w[1].player == player && w[0].nimber_before == 0 && w[1].nimber_after != 0)
            .count()
    }
}

/// Nimbers straight from the heap sizes for NIM, by memoized recursion otherwise.
pub(crate) struct NimberOracle {
    solver: Option<GrundySolver>,
}

impl NimberOracle {
    pub(crate) fn new(rules: &GameRules) -> Self {
        NimberOracle { solver: (!rules.is_nim()).then(|| GrundySolver::new(rules.clone())) }
    }

    pub(crate) fn nimber(&mut self, p: &Position) -> Result<u32> {
        match &mut self.solver {
            None => Ok(nim_sum(p).value()),
            Some(s) => Ok(s.grundy(p)?.value()),
        }
    }
}

/// Plays `agents[0]` (moving first) against `agents[1]` from `start`.
/// Each player draws from its own stream of one seeded generator. An agent
/// that errors or returns an illegal move forfeits.
pub fn play_match(rules: &GameRules, start: &Position, agents: [&dyn Agent; 2], seed: u64) -> Result<MatchRecord> {
    rules.validate(start)?;
    if start.is_terminal() {
        return Err(Error::TerminalPosition);
    }
    let mut rngs = [0u64, 1].map(|stream| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    });
    let capacity = agents.iter().map(|a| a.required_frames()).max().unwrap_or(1).max(2);
    let mut history = FrameHistory::new(capacity, start.clone())?;
    let mut oracle = NimberOracle::new(rules);
    let mut moves: Vec<MoveRecord> = Vec::new();
    let mut forfeit = None;
    while !history.current().is_terminal() {
        let player = moves.len() % 2;
        let before = history.current().clone();
        let attempt = agents[player].choose(rules, &history, &mut rngs[player]);
        let applied = attempt.clone().and_then(|m| apply_move(&before, &m, rules).map(|_| m));
        let mv = match applied {
            Ok(m) => m,
            Err(e) => {
                forfeit = Some(Forfeit { player, attempted: attempt.ok(), reason: e.to_string() });
                break;
            }
        };
        history.push(mv, rules)?;
        let nimber_before = oracle.nimber(&before)?;
        let nimber_after = oracle.nimber(history.current())?;
        let preserved = moves.last().filter(|_| moves.len() >= 2).map(|prev| nimber_after == prev.nimber_before);
        moves.push(MoveRecord { player, mv, nimber_before, nimber_after, preserved });
    }
    let winner = match &forfeit {
        Some(f) => 1 - f.player,
        None => moves.last().map(|m| m.player).expect("non-terminal start means at least one move"),
    };
    Ok(MatchRecord {
        rules: rules.to_string(),
        start: start.clone(),
        agents: [agents[0].id(), agents[1].id()],
        seed,
        moves,
        winner,
        forfeit,
    })
}

/// Replays the move list and returns the winner it implies, checking it
/// against the recorded one.
pub fn replay(record: &MatchRecord) -> Result<usize> {
    let rules: GameRules = record.rules.parse()?;
    let mut p = record.start.clone();
    for (ply, m) in record.moves.iter().enumerate() {
        if m.player != ply % 2 {
            return Err(Error::Agent(format!("ply {ply} is attributed to player {}", m.player)));
        }
        p = apply_move(&p, &m.mv, &rules)?;
    }
    let winner = match &record.forfeit {
        Some(f) => {
            if p.is_terminal() || f.player != record.moves.len() % 2 {
                return Err(Error::Agent("forfeit recorded at the wrong point of the game".into()));
            }
            1 - f.player
        }
        None => {
            if !p.is_terminal() {
                return Err(Error::Agent(format!("replay stops at non-terminal {p}")));
            }
            record.moves.last().map(|m| m.player).ok_or(Error::TerminalPosition)?
        }
    };
    if winner != record.winner {
        return Err(Error::Agent(format!("replay gives winner {winner}, record says {}", record.winner)));
    }
    Ok(winner)
}

#[cfg(test)]
mod tests {
    use rand::RngCore;

    use super::*;
    use crate::agents::{OracleAgent, RandomAgent};

    struct Cheater;

    impl Agent for Cheater {
        fn id(&self) -> String {
            "cheater".into()
        }

        fn choose(&self, _: &GameRules, h: &FrameHistory, _: &mut dyn RngCore) -> Result<GameMove> {
            Ok(GameMove::new(0, h.current().heaps()[0] + 1))
        }
    }

    fn pos(s: &str) -> Position {
        s.parse().unwrap()
    }

    #[test]
    fn oracle_beats_random_from_winning_start() {
        let nim = GameRules::nim();
        for seed in 0..20 {
            let r = play_match(&nim, &pos("3,5,7"), [&OracleAgent::new(), &RandomAgent], seed).unwrap();
            assert_eq!(r.winner, 0);
            assert_eq!(replay(&r).unwrap(), 0);
            assert_eq!(r.preservation_failures(0), 0);
        }
    }

    #[test]
    fn second_mover_wins_zero_start() {
        let r = play_match(&GameRules::nim(), &pos("1,2,3"), [&OracleAgent::new(), &OracleAgent::new()], 0).unwrap();
        assert_eq!(r.winner, 1);
        assert_eq!(replay(&r).unwrap(), 1);
    }

    #[test]
    fn single_heap_first_mover_wins() {
        let r = play_match(&GameRules::nim(), &pos("1"), [&RandomAgent, &OracleAgent::new()], 4).unwrap();
        assert_eq!((r.winner, r.plies()), (0, 1));
        assert!(play_match(&GameRules::nim(), &pos("0,0"), [&RandomAgent, &RandomAgent], 0).is_err());
    }

    #[test]
    fn illegal_move_forfeits() {
        let r = play_match(&GameRules::nim(), &pos("3,5,7"), [&Cheater, &RandomAgent], 0).unwrap();
        assert_eq!(r.winner, 1);
        let f = r.forfeit.as_ref().unwrap();
        assert_eq!((f.player, f.attempted), (0, Some(GameMove::new(0, 4))));
        assert_eq!(replay(&r).unwrap(), 1);
    }

    #[test]
    fn tampered_record_fails_replay() {
        let mut r = play_match(&GameRules::nim(), &pos("2,3"), [&RandomAgent, &RandomAgent], 1).unwrap();
        r.winner = 1 - r.winner;
        assert!(replay(&r).is_err());
    }

    #[test]
    fn seeded_matches_repeat() {
        let nim = GameRules::nim();
        let a = play_match(&nim, &pos("4,6,9"), [&RandomAgent, &RandomAgent], 99).unwrap();
        let b = play_match(&nim, &pos("4,6,9"), [&RandomAgent, &RandomAgent], 99).unwrap();
        assert_eq!(a, b);
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<MatchRecord>(&json).unwrap(), a);
    }

    #[test]
    fn kayles_matches_use_grundy_values() {
        let kayles = GameRules::kayles();
        let r = play_match(&kayles, &pos("5"), [&OracleAgent::new(), &RandomAgent], 2).unwrap();
        assert_eq!(r.winner, 0);
        assert_eq!(replay(&r).unwrap(), 0);
    }
}
